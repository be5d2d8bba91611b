//! Node addressing for dyadic trees and bi-trees.
//!
//! A tree vertex is its root-to-node bit path (`0` = left/minus child,
//! `1` = right/plus child). Paths have arbitrary length; bi-tree
//! experiments reach coordinate depths in the tens of thousands.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A vertex of a dyadic tree, stored as a packed bit path.
///
/// Bits are packed most-significant first; bits past `len` are always zero,
/// so the derived equality and hashing compare paths bit-for-bit. The derived
/// order sorts by depth first, then left to right.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeAddress {
    len: usize,
    words: Vec<u64>,
}

impl NodeAddress {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut a = Self::root();
        for b in bits {
            a.push(b);
        }
        a
    }

    /// The path of length `nbits` spelling `value` in binary, most significant bit first.
    pub fn from_int(value: u64, nbits: usize) -> Self {
        assert!(nbits <= 64, "from_int takes at most 64 bits");
        Self::from_bits((0..nbits).rev().map(|i| (value >> i) & 1 == 1))
    }

    /// The leftmost node at `depth` (all-zero path).
    pub fn zeros(depth: usize) -> Self {
        Self {
            len: depth,
            words: vec![0; depth.div_ceil(64)],
        }
    }

    pub fn depth(&self) -> usize {
        self.len
    }

    pub fn is_root(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for depth {}", self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (63 - self.len % 64);
        }
        self.len += 1;
    }

    pub fn child(&self, bit: bool) -> Self {
        let mut c = self.clone();
        c.push(bit);
        c
    }

    /// Appends `n` zero bits (moves `n` generations down the left edge).
    pub fn extend_zeros(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.len += n;
        c.words.resize(c.len.div_ceil(64), 0);
        c
    }

    /// The ancestor at `depth` (the path prefix of that length).
    pub fn truncate(&self, depth: usize) -> Self {
        let depth = depth.min(self.len);
        let mut words = self.words[..depth.div_ceil(64)].to_vec();
        if depth % 64 != 0 {
            let last = words.len() - 1;
            words[last] &= !(u64::MAX >> (depth % 64));
        }
        Self { len: depth, words }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.len > 0).then(|| self.truncate(self.len - 1))
    }

    /// Length of the longest common prefix, i.e. the depth of the deepest
    /// common ancestor. The number of common ancestors is one more.
    pub fn lcp_depth(&self, other: &Self) -> usize {
        let max = self.len.min(other.len);
        for (i, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let x = a ^ b;
            if x != 0 {
                return (i * 64 + x.leading_zeros() as usize).min(max);
            }
        }
        max
    }

    /// `true` iff `self` is an ancestor of `other` or equal to it
    /// (the dyadic interval of `self` contains that of `other`).
    pub fn contains(&self, other: &Self) -> bool {
        self.len <= other.len && self.lcp_depth(other) == self.len
    }

    /// All prefixes of the path, root first; the node itself is last.
    pub fn ancestors(&self) -> Vec<Self> {
        (0..=self.len).map(|d| self.truncate(d)).collect()
    }

    /// Number of leading zero bits (length of the initial left-edge run).
    pub fn leading_zero_run(&self) -> usize {
        (0..self.len).find(|&i| self.bit(i)).unwrap_or(self.len)
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.words.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            f.write_str("ε")
        } else if self.len > 80 {
            write!(f, "<depth {}>", self.len)
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

impl FromStr for NodeAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut a = NodeAddress::root();
        for c in s.chars() {
            match c {
                '0' => a.push(false),
                '1' => a.push(true),
                other => return Err(Error::Parse(format!("bad bit {other:?} in node literal {s:?}"))),
            }
        }
        Ok(a)
    }
}

/// A dyadic rectangle: a vertex of the bi-tree `T × T`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct BiNode {
    pub x: NodeAddress,
    pub y: NodeAddress,
}

impl BiNode {
    pub fn new(x: NodeAddress, y: NodeAddress) -> Self {
        Self { x, y }
    }

    pub fn root() -> Self {
        Self::default()
    }

    /// Rectangle containment: `self ⊇ other` in both coordinates.
    pub fn contains(&self, other: &Self) -> bool {
        self.x.contains(&other.x) && self.y.contains(&other.y)
    }

    /// The bi-tree partial order: `self ≤ other` iff `other` contains `self`.
    pub fn le(&self, other: &Self) -> bool {
        other.contains(self)
    }

    /// Number of common ancestors, `(lcp_x + 1)(lcp_y + 1)`.
    pub fn kernel(&self, other: &Self) -> u64 {
        (self.x.lcp_depth(&other.x) as u64 + 1) * (self.y.lcp_depth(&other.y) as u64 + 1)
    }

    pub fn ancestors(&self) -> Vec<Self> {
        let ys = self.y.ancestors();
        self.x
            .ancestors()
            .into_iter()
            .flat_map(|x| ys.iter().map(move |y| BiNode::new(x.clone(), y.clone())))
            .collect()
    }
}

impl fmt::Display for BiNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={}/y={}", self.x, self.y)
    }
}

impl FromStr for BiNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (xs, ys) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("bi-node literal {s:?} must look like x=0110/y=01")))?;
        let x = xs
            .strip_prefix("x=")
            .ok_or_else(|| Error::Parse(format!("missing \"x=\" in {s:?}")))?;
        let y = ys
            .strip_prefix("y=")
            .ok_or_else(|| Error::Parse(format!("missing \"y=\" in {s:?}")))?;
        Ok(BiNode::new(x.parse()?, y.parse()?))
    }
}

macro_rules! serde_via_display {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_display!(NodeAddress);
serde_via_display!(BiNode);

/// The full binary tree with node levels `0..levels`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeDomain {
    pub levels: usize,
}

impl TreeDomain {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("a tree domain needs at least one level"));
        }
        Ok(Self { levels })
    }

    pub fn leaf_depth(&self) -> usize {
        self.levels - 1
    }

    pub fn node_count(&self) -> u128 {
        if self.levels >= 128 {
            u128::MAX
        } else {
            (1u128 << self.levels) - 1
        }
    }

    pub fn contains(&self, a: &NodeAddress) -> bool {
        a.depth() < self.levels
    }

    pub fn check(&self, a: &NodeAddress) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::Domain {
                node: a.to_string(),
                domain: format!("tree with {} levels", self.levels),
            })
        }
    }

    pub fn is_leaf(&self, a: &NodeAddress) -> bool {
        a.depth() + 1 == self.levels
    }

    /// `{a·0, a·1}` for inner nodes, empty for leaves.
    pub fn children(&self, a: &NodeAddress) -> Result<Vec<NodeAddress>> {
        self.check(a)?;
        if self.is_leaf(a) {
            Ok(Vec::new())
        } else {
            Ok(vec![a.child(false), a.child(true)])
        }
    }

    /// Every node, in breadth-first order. Refuses domains above 2^24 nodes.
    pub fn nodes(&self) -> Result<Vec<NodeAddress>> {
        const LIMIT: u128 = 1 << 24;
        if self.node_count() > LIMIT {
            return Err(Error::Resource {
                what: format!("enumerating a {}-level tree", self.levels),
                needed: self.node_count(),
                limit: LIMIT,
            });
        }
        let mut out = Vec::with_capacity(self.node_count() as usize);
        out.push(NodeAddress::root());
        let mut i = 0;
        while i < out.len() {
            if !self.is_leaf(&out[i]) {
                let (l, r) = (out[i].child(false), out[i].child(true));
                out.push(l);
                out.push(r);
            }
            i += 1;
        }
        Ok(out)
    }
}

/// The product of two tree domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BiTreeDomain {
    pub x: TreeDomain,
    pub y: TreeDomain,
}

impl BiTreeDomain {
    pub fn new(x_levels: usize, y_levels: usize) -> Result<Self> {
        Ok(Self {
            x: TreeDomain::new(x_levels)?,
            y: TreeDomain::new(y_levels)?,
        })
    }

    pub fn contains(&self, a: &BiNode) -> bool {
        self.x.contains(&a.x) && self.y.contains(&a.y)
    }

    pub fn nodes(&self) -> Result<Vec<BiNode>> {
        let xs = self.x.nodes()?;
        let ys = self.y.nodes()?;
        let needed = xs.len() as u128 * ys.len() as u128;
        if needed > 1 << 24 {
            return Err(Error::Resource {
                what: "enumerating a bi-tree".into(),
                needed,
                limit: 1 << 24,
            });
        }
        Ok(xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| BiNode::new(x.clone(), y.clone())))
            .collect())
    }
}

/// Which kind of tree a node type lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Tree,
    BiTree,
}

/// Common interface of tree and bi-tree vertices used by the Hardy operators.
pub trait Node:
    Clone + Ord + Hash + Eq + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    type Domain: Copy + fmt::Debug + Send + Sync;

    const KIND: DomainKind;

    fn root() -> Self;

    /// `self ⊇ other` (ancestor-or-self).
    fn contains(&self, other: &Self) -> bool;

    /// All ancestors including `self`.
    fn ancestors(&self) -> Vec<Self>;

    /// Size of the ancestor set without materializing it.
    fn ancestor_count(&self) -> u128;

    /// Immediate predecessors (one for a tree vertex, up to two for a rectangle).
    fn parents(&self) -> Vec<Self>;

    fn in_domain(&self, d: &Self::Domain) -> bool;

    fn domain_nodes(d: &Self::Domain) -> Result<Vec<Self>>;

    fn check_domain(&self, d: &Self::Domain) -> Result<()> {
        if self.in_domain(d) {
            Ok(())
        } else {
            Err(Error::Domain {
                node: self.to_string(),
                domain: format!("{d:?}"),
            })
        }
    }

    /// Total depth, used to order bottom-up sweeps.
    fn height_key(&self) -> usize;
}

impl Node for NodeAddress {
    type Domain = TreeDomain;
    const KIND: DomainKind = DomainKind::Tree;

    fn root() -> Self {
        NodeAddress::root()
    }

    fn contains(&self, other: &Self) -> bool {
        NodeAddress::contains(self, other)
    }

    fn ancestors(&self) -> Vec<Self> {
        NodeAddress::ancestors(self)
    }

    fn ancestor_count(&self) -> u128 {
        self.depth() as u128 + 1
    }

    fn parents(&self) -> Vec<Self> {
        self.parent().into_iter().collect()
    }

    fn in_domain(&self, d: &TreeDomain) -> bool {
        d.contains(self)
    }

    fn domain_nodes(d: &TreeDomain) -> Result<Vec<Self>> {
        d.nodes()
    }

    fn height_key(&self) -> usize {
        self.depth()
    }
}

impl Node for BiNode {
    type Domain = BiTreeDomain;
    const KIND: DomainKind = DomainKind::BiTree;

    fn root() -> Self {
        BiNode::root()
    }

    fn contains(&self, other: &Self) -> bool {
        BiNode::contains(self, other)
    }

    fn ancestors(&self) -> Vec<Self> {
        BiNode::ancestors(self)
    }

    fn ancestor_count(&self) -> u128 {
        (self.x.depth() as u128 + 1) * (self.y.depth() as u128 + 1)
    }

    fn parents(&self) -> Vec<Self> {
        let mut out = Vec::with_capacity(2);
        if let Some(px) = self.x.parent() {
            out.push(BiNode::new(px, self.y.clone()));
        }
        if let Some(py) = self.y.parent() {
            out.push(BiNode::new(self.x.clone(), py));
        }
        out
    }

    fn in_domain(&self, d: &BiTreeDomain) -> bool {
        d.contains(self)
    }

    fn domain_nodes(d: &BiTreeDomain) -> Result<Vec<Self>> {
        d.nodes()
    }

    fn height_key(&self) -> usize {
        self.x.depth() + self.y.depth()
    }
}

/// The ancestor closure (up-set) generated by `nodes`.
pub fn ancestor_closure<N: Node, I: IntoIterator<Item = N>>(nodes: I) -> BTreeSet<N> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<N> = nodes.into_iter().collect();
    while let Some(n) = stack.pop() {
        if out.contains(&n) {
            continue;
        }
        stack.extend(n.parents());
        out.insert(n);
    }
    out
}
