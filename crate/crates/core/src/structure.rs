//! Structural predicates on tree functions and the special-form constructor.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::node::{BiNode, NodeAddress, TreeDomain};
use crate::scalar::Scalar;
use crate::sparse::SparseFn;

/// Outcome of a structural predicate; `witness` is the first offending node
/// in breadth-first order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Predicate {
    pub holds: bool,
    pub witness: Option<NodeAddress>,
}

impl Predicate {
    fn ok() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    fn fail(at: NodeAddress) -> Self {
        Self {
            holds: false,
            witness: Some(at),
        }
    }
}

/// Hölder pair `(p, q)` with `1/p + 1/q = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
        }
        Ok(Self { p, q: p / (p - 1.0) })
    }

    /// `q − 1 = 1/(p − 1)`, computed without cancellation.
    pub fn q_minus_one(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }
}

/// `g(β) ≥ Σ_{children} g` at every inner node.
///
/// Only the support and its parents can fail, so only those are visited.
pub fn is_superadditive<S: Scalar>(g: &SparseFn<NodeAddress, S>, d: &TreeDomain) -> Result<Predicate> {
    g.check_domain(d)?;
    let mut candidates: BTreeSet<NodeAddress> = BTreeSet::new();
    for n in g.support() {
        if !d.is_leaf(n) {
            candidates.insert(n.clone());
        }
        if let Some(p) = n.parent() {
            candidates.insert(p);
        }
    }
    for beta in &candidates {
        let children = g.get(&beta.child(false)) + g.get(&beta.child(true));
        if !children.le_tol(&g.get(beta)) {
            return Ok(Predicate::fail(beta.clone()));
        }
    }
    Ok(Predicate::ok())
}

/// Non-decreasing toward the root: `g(child) ≤ g(parent)` everywhere.
/// The witness is the offending child.
pub fn is_increasing<S: Scalar>(g: &SparseFn<NodeAddress, S>, d: &TreeDomain) -> Result<Predicate> {
    g.check_domain(d)?;
    for (n, v) in g.iter() {
        if let Some(p) = n.parent() {
            if !v.le_tol(&g.get(&p)) {
                return Ok(Predicate::fail(n.clone()));
            }
        }
    }
    Ok(Predicate::ok())
}

/// `g(γ) = Σ_{β' ⊇ beta} m(γ × β')^{q−1}`.
///
/// `m` is read pointwise on rectangles; when it is the rectangle-mass function
/// of a measure, `g^{p−1}` is superadditive.
pub fn special_form_g<S: Scalar>(
    m: &SparseFn<BiNode, S>,
    beta: &NodeAddress,
    pq: &ExponentPair,
) -> Result<SparseFn<NodeAddress, S>> {
    let e = pq.q_minus_one();
    let mut g = SparseFn::new();
    for (r, v) in m.iter() {
        if r.y.contains(beta) {
            g.add(r.x.clone(), v.powf(e)?)?;
        }
    }
    Ok(g)
}

/// Superadditivity of the pointwise power `g^{p−1}`.
pub fn check_power_superadditive<S: Scalar>(
    g: &SparseFn<NodeAddress, S>,
    d: &TreeDomain,
    p: f64,
) -> Result<Predicate> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must exceed 1")));
    }
    is_superadditive(&g.pow(p - 1.0)?, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    type Q = BigRational;

    fn q(a: i64, b: i64) -> Q {
        Q::from_ratio(a, b)
    }

    fn node(s: &str) -> NodeAddress {
        s.parse().unwrap()
    }

    #[test]
    fn unit_root_is_superadditive() {
        let d = TreeDomain::new(4).unwrap();
        let g: SparseFn<NodeAddress, Q> = SparseFn::unit_root();
        assert!(is_superadditive(&g, &d).unwrap().holds);
        assert!(is_increasing(&g, &d).unwrap().holds);
    }

    #[test]
    fn increasing_failure_names_child() {
        let d = TreeDomain::new(3).unwrap();
        let g = SparseFn::from_pairs([(node("0"), q(1, 1))]).unwrap();
        let r = is_increasing(&g, &d).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(node("0")));
        // zero parent with positive child also breaks superadditivity at the parent
        let s = is_superadditive(&g, &d).unwrap();
        assert_eq!(s.witness, Some(NodeAddress::root()));
    }

    #[test]
    fn constant_one_is_not_power_superadditive() {
        let d = TreeDomain::new(3).unwrap();
        let g: SparseFn<NodeAddress, f64> =
            SparseFn::from_pairs(d.nodes().unwrap().into_iter().map(|n| (n, 1.0))).unwrap();
        let r = check_power_superadditive(&g, &d, 2.5).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(NodeAddress::root()));
    }

    #[test]
    fn special_form_single_atom() {
        let pq = ExponentPair::new(3.0).unwrap();
        let t = 0.25f64;
        let atom: BiNode = "x=01/y=1".parse().unwrap();
        let m = SparseFn::delta(atom, t).unwrap();
        let g = special_form_g(&m, &node("10"), &pq).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g.get(&node("01")) - t.powf(0.5)).abs() < 1e-15);
        let none = special_form_g(&m, &node("01"), &pq).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn special_form_exact_at_p_two() {
        let pq = ExponentPair::new(2.0).unwrap();
        assert_eq!(pq.q, 2.0);
        let m: SparseFn<BiNode, Q> = SparseFn::from_pairs([
            ("x=0/y=".parse().unwrap(), q(1, 3)),
            ("x=0/y=1".parse().unwrap(), q(1, 5)),
            ("x=0/y=11".parse().unwrap(), q(1, 7)),
            ("x=1/y=0".parse().unwrap(), q(2, 1)),
        ])
        .unwrap();
        let g = special_form_g(&m, &node("11"), &pq).unwrap();
        assert_eq!(g.get(&node("0")), q(1, 3) + q(1, 5) + q(1, 7));
        assert!(!g.contains(&node("1")));
    }

    #[test]
    fn exponent_pair_rejects_p_at_most_one() {
        assert!(ExponentPair::new(1.0).is_err());
        let pq = ExponentPair::new(4.0).unwrap();
        assert!((1.0 / pq.p + 1.0 / pq.q - 1.0).abs() < 1e-15);
        assert!(((pq.p - 1.0) * (pq.q - 1.0) - 1.0).abs() < 1e-15);
    }
}
