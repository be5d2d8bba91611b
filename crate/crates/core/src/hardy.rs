//! Hardy operators on trees and bi-trees.
//!
//! `I f(a) = Σ_{β ⊇ a} f(β)` sums over ancestors (inclusive), the adjoint
//! `I* g(a) = Σ_{β ⊆ a} g(β)` over descendants (inclusive). Potentials of
//! point measures use the common-ancestor kernel
//! `K(a, b) = (lcp_x + 1)(lcp_y + 1)` and never materialize ancestor sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::node::{ancestor_closure, BiNode, DomainKind, Node};
use crate::scalar::Scalar;
use crate::sparse::SparseFn;

/// `I f(a)`: sum of `f` over all ancestors of `a`, `a` included.
pub fn eval_hardy_up<N: Node, S: Scalar>(f: &SparseFn<N, S>, a: &N) -> S {
    if a.ancestor_count() <= f.len() as u128 {
        a.ancestors()
            .iter()
            .filter_map(|b| f.get_ref(b))
            .cloned()
            .fold(S::zero(), |acc, v| acc + v)
    } else {
        f.iter()
            .filter(|(b, _)| b.contains(a))
            .map(|(_, v)| v.clone())
            .fold(S::zero(), |acc, v| acc + v)
    }
}

/// `I* g(a)`: sum of `g` over all descendants of `a`, `a` included.
/// Cost is linear in the support of `g`.
pub fn eval_hardy_down<N: Node, S: Scalar>(g: &SparseFn<N, S>, a: &N) -> S {
    g.iter()
        .filter(|(b, _)| a.contains(b))
        .map(|(_, v)| v.clone())
        .fold(S::zero(), |acc, v| acc + v)
}

/// Domain-checked variant of [`eval_hardy_up`].
pub fn hardy_up_checked<N: Node, S: Scalar>(f: &SparseFn<N, S>, a: &N, d: &N::Domain) -> Result<S> {
    a.check_domain(d)?;
    f.check_domain(d)?;
    Ok(eval_hardy_up(f, a))
}

/// Domain-checked variant of [`eval_hardy_down`].
pub fn hardy_down_checked<N: Node, S: Scalar>(
    g: &SparseFn<N, S>,
    a: &N,
    d: &N::Domain,
) -> Result<S> {
    a.check_domain(d)?;
    g.check_domain(d)?;
    Ok(eval_hardy_down(g, a))
}

/// `I f` on every node of `nodes`, which must be closed under taking ancestors.
pub fn hardy_up_on<N: Node, S: Scalar>(f: &SparseFn<N, S>, nodes: &BTreeSet<N>) -> BTreeMap<N, S> {
    match N::KIND {
        // BTreeSet order is depth-first-by-level, so parents come first.
        DomainKind::Tree => {
            let mut out: BTreeMap<N, S> = BTreeMap::new();
            for n in nodes {
                let up = n
                    .parents()
                    .first()
                    .map(|p| {
                        out.get(p)
                            .cloned()
                            .unwrap_or_else(|| eval_hardy_up(f, p))
                    })
                    .unwrap_or_else(S::zero);
                out.insert(n.clone(), up + f.get(n));
            }
            out
        }
        DomainKind::BiTree => nodes
            .iter()
            .map(|n| (n.clone(), eval_hardy_up(f, n)))
            .collect(),
    }
}

/// `I* g` on the ancestor closure of `supp g` (it vanishes everywhere else).
pub fn hardy_down_closure<N: Node, S: Scalar>(g: &SparseFn<N, S>) -> SparseFn<N, S> {
    let mut acc: BTreeMap<N, S> = BTreeMap::new();
    match N::KIND {
        DomainKind::Tree => {
            let closure = ancestor_closure(g.support().cloned());
            for n in &closure {
                acc.insert(n.clone(), g.get(n));
            }
            // deepest first; each node hands its subtree total to its parent
            for n in closure.iter().rev() {
                if let Some(p) = n.parents().into_iter().next() {
                    let v = acc[n].clone();
                    let slot = acc.get_mut(&p).expect("closure is ancestor-closed");
                    *slot = slot.clone() + v;
                }
            }
        }
        DomainKind::BiTree => {
            for (n, v) in g.iter() {
                for a in n.ancestors() {
                    let cur = acc.remove(&a).unwrap_or_else(S::zero);
                    acc.insert(a, cur + v.clone());
                }
            }
        }
    }
    SparseFn::from_map_unchecked(acc)
}

/// `I I* g` on the ancestor closure of `supp g`, together with `I* g`.
///
/// Off the closure, `I I* g` equals its value at the deepest closure ancestor.
pub fn double_hardy_closure<N: Node, S: Scalar>(
    g: &SparseFn<N, S>,
) -> (SparseFn<N, S>, BTreeMap<N, S>) {
    let down = hardy_down_closure(g);
    let closure: BTreeSet<N> = down.support().cloned().collect();
    let up = hardy_up_on(&down, &closure);
    (down, up)
}

/// A finite atomic measure on the bi-tree.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMeasure<S> {
    atoms: Vec<(BiNode, S)>,
}

impl<S: Scalar> PointMeasure<S> {
    pub fn new(atoms: Vec<(BiNode, S)>) -> Result<Self> {
        if let Some((n, m)) = atoms.iter().find(|(_, m)| *m <= S::zero()) {
            return Err(Error::invalid(format!(
                "atom at {n} has non-positive mass {}",
                m.to_value()
            )));
        }
        Ok(Self { atoms })
    }

    pub fn unit_root() -> Self {
        Self {
            atoms: vec![(BiNode::root(), S::one())],
        }
    }

    pub fn atoms(&self) -> &[(BiNode, S)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> S {
        self.atoms
            .iter()
            .fold(S::zero(), |acc, (_, m)| acc + m.clone())
    }

    /// The atoms as a point function (masses added on coinciding nodes).
    pub fn to_sparse(&self) -> SparseFn<BiNode, S> {
        let mut f = SparseFn::new();
        for (n, m) in &self.atoms {
            f.add(n.clone(), m.clone()).expect("masses are positive");
        }
        f
    }
}

/// `V^m(a) = I I* m(a) = Σ_atoms mass · K(a, atom)`.
pub fn potential<S: Scalar>(m: &PointMeasure<S>, a: &BiNode) -> S {
    m.atoms.iter().fold(S::zero(), |acc, (b, mass)| {
        acc + mass.clone() * S::from_u64(a.kernel(b))
    })
}

/// `E(m) = Σ_a Σ_b mass_a mass_b K(a, b)`.
pub fn energy<S: Scalar>(m: &PointMeasure<S>) -> S {
    m.atoms.iter().fold(S::zero(), |acc, (a, mass)| {
        acc + mass.clone() * potential(m, a)
    })
}
