//! Brute-force oracles for the tree primitives. Each oracle works on the
//! textual bit strings of the addresses, independently of the library's
//! prefix arithmetic.

use std::collections::BTreeSet;

use cxlab_core::capacity::build_instance;
use cxlab_core::random::{instance_seed, random_bi_node, random_fn, random_node, rng};
use cxlab_core::{
    energy, eval_hardy_down, eval_hardy_up, potential, BiNode, BiTreeDomain, NodeAddress, PointMeasure, SparseFn,
    TreeDomain,
};
use num::{BigRational, One, Zero};
use rand::Rng;

type Q = BigRational;

fn q(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

fn node(s: &str) -> NodeAddress {
    s.parse().unwrap()
}

fn prefixes(s: &str) -> BTreeSet<String> {
    (0..=s.len()).map(|i| s[..i].to_string()).collect()
}

fn is_prefix(a: &NodeAddress, b: &NodeAddress) -> bool {
    b.to_string().starts_with(&a.to_string())
}

fn bi_contains(a: &BiNode, b: &BiNode) -> bool {
    is_prefix(&a.x, &b.x) && is_prefix(&a.y, &b.y)
}

#[test]
fn lcp_examples() {
    assert_eq!(NodeAddress::root().lcp_depth(&NodeAddress::root()), 0);
    assert_eq!(node("0110").lcp_depth(&node("0101")), 2);
}

#[test]
fn lcp_matches_ancestor_intersection() {
    let d = TreeDomain::new(9).unwrap();
    for i in 0..2000 {
        let mut r = rng(instance_seed(11, i));
        let (a, b) = (random_node(&mut r, &d), random_node(&mut r, &d));
        let common = prefixes(&a.to_string()).intersection(&prefixes(&b.to_string())).count();
        assert_eq!(a.lcp_depth(&b) + 1, common, "{a:?} {b:?}");
    }
}

#[test]
fn ancestors_examples() {
    assert_eq!(NodeAddress::root().ancestors(), vec![NodeAddress::root()]);
    let got: Vec<String> = node("01").ancestors().iter().map(|n| n.to_string()).collect();
    assert_eq!(got, vec!["", "0", "01"]);
    for k in 0..70 {
        assert_eq!(NodeAddress::zeros(k).ancestors().len(), k + 1);
    }
}

#[test]
fn children_examples() {
    let d = TreeDomain::new(2).unwrap();
    assert_eq!(d.children(&NodeAddress::root()).unwrap(), vec![node("0"), node("1")]);
    assert!(d.children(&node("1")).unwrap().is_empty());
    let d = TreeDomain::new(6).unwrap();
    assert_eq!(d.children(&node("0110")).unwrap(), vec![node("01100"), node("01101")]);
    assert!(d.children(&node("011011")).is_err());
}

#[test]
fn hardy_up_examples() {
    let unit: SparseFn<NodeAddress, Q> = SparseFn::unit_root();
    for s in ["", "0", "1011", "0000000"] {
        assert_eq!(eval_hardy_up(&unit, &node(s)), Q::one());
    }
    let empty: SparseFn<NodeAddress, Q> = SparseFn::new();
    assert_eq!(eval_hardy_up(&empty, &node("101")), Q::zero());
}

#[test]
fn hardy_down_examples() {
    for levels in 1..=8 {
        let d = TreeDomain::new(levels).unwrap();
        let mut g: SparseFn<NodeAddress, Q> = SparseFn::new();
        for n in d.nodes().unwrap() {
            g.set(n, Q::one()).unwrap();
        }
        let expect = Q::from_integer(((1u64 << levels) - 1).into());
        assert_eq!(eval_hardy_down(&g, &NodeAddress::root()), expect);
    }
    let leaf = node("0101");
    let g = SparseFn::delta(leaf.clone(), Q::one()).unwrap();
    assert_eq!(eval_hardy_down(&g, &leaf), Q::one());
}

#[test]
fn hardy_operators_match_enumeration() {
    let d = TreeDomain::new(9).unwrap();
    for i in 0..200 {
        let mut r = rng(instance_seed(12, i));
        let f: SparseFn<NodeAddress, Q> = random_fn(&mut r, &d, 0.05);
        for _ in 0..5 {
            let a = random_node(&mut r, &d);
            let up = f
                .iter()
                .filter(|(n, _)| is_prefix(n, &a))
                .fold(Q::zero(), |s, (_, v)| s + v);
            let down = f
                .iter()
                .filter(|(n, _)| is_prefix(&a, n))
                .fold(Q::zero(), |s, (_, v)| s + v);
            assert_eq!(eval_hardy_up(&f, &a), up);
            assert_eq!(eval_hardy_down(&f, &a), down);
        }
    }
}

#[test]
fn potential_examples() {
    let unit = PointMeasure::<Q>::unit_root();
    let d = BiTreeDomain::new(4, 4).unwrap();
    for a in d.nodes().unwrap() {
        assert_eq!(potential(&unit, &a), Q::one());
    }
    let inst = build_instance(16).unwrap();
    assert_eq!(potential(&inst.nu, &BiNode::root()), q(1, 64));
    assert_eq!(inst.nu.total_mass(), q(1, 64));
}

#[test]
fn potential_matches_rectangle_enumeration() {
    let d = BiTreeDomain::new(4, 4).unwrap();
    let rects = d.nodes().unwrap();
    for i in 0..100 {
        let mut r = rng(instance_seed(13, i));
        let atoms: Vec<(BiNode, Q)> = (0..r.gen_range(1..5))
            .map(|_| (random_bi_node(&mut r, &d), q(r.gen_range(1..9), 1 << r.gen_range(0..4))))
            .collect();
        let m = PointMeasure::new(atoms.clone()).unwrap();
        let a = random_bi_node(&mut r, &d);
        // V(a) = Σ_{R ⊇ a} I*μ(R)
        let oracle = rects
            .iter()
            .filter(|rect| bi_contains(rect, &a))
            .map(|rect| {
                atoms
                    .iter()
                    .filter(|(b, _)| bi_contains(rect, b))
                    .fold(Q::zero(), |s, (_, t)| s + t)
            })
            .fold(Q::zero(), |s, v| s + v);
        assert_eq!(potential(&m, &a), oracle);
    }
}

#[test]
fn energy_examples() {
    let a = BiNode::new(node("01"), node("110"));
    let m = PointMeasure::new(vec![(a, q(3, 2))]).unwrap();
    assert_eq!(energy(&m), q(9, 4) * Q::from_integer(12.into()));

    let b = BiNode::new(node("0"), node("1"));
    let c = BiNode::new(node("1"), node("0"));
    let m = PointMeasure::new(vec![(b, Q::one()), (c, Q::one())]).unwrap();
    // only the root is common: 2·1 cross terms plus 4 + 4 self terms
    assert_eq!(energy(&m), Q::from_integer(10.into()));
}

#[test]
fn bi_kernel_counts_common_rectangles() {
    let d = BiTreeDomain::new(4, 3).unwrap();
    for i in 0..300 {
        let mut r = rng(instance_seed(14, i));
        let (a, b) = (random_bi_node(&mut r, &d), random_bi_node(&mut r, &d));
        let ax: BTreeSet<_> = a.ancestors().into_iter().collect();
        let common = b.ancestors().into_iter().filter(|x| ax.contains(x)).count();
        assert_eq!(a.kernel(&b), common as u64);
    }
}
