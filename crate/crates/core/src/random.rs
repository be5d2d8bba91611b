//! Seeded generators for random tree functions, measures and families.
//!
//! All values are dyadic rationals with small denominators so exact-mode
//! arithmetic stays cheap at depth 8.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hardy::hardy_down_closure;
use crate::node::{BiNode, BiTreeDomain, NodeAddress, TreeDomain};
use crate::scalar::Scalar;
use crate::sparse::SparseFn;

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-instance seed derived from a base seed (splitmix64 finalizer).
pub fn instance_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform node of the domain, depth first drawn uniformly.
pub fn random_node<R: Rng>(rng: &mut R, d: &TreeDomain) -> NodeAddress {
    let depth = rng.gen_range(0..d.levels);
    NodeAddress::from_bits((0..depth).map(|_| rng.gen_bool(0.5)))
}

pub fn random_bi_node<R: Rng>(rng: &mut R, d: &BiTreeDomain) -> BiNode {
    BiNode::new(random_node(rng, &d.x), random_node(rng, &d.y))
}

/// A positive dyadic value `a / 2^b` with `a ∈ 1..=8`, `b ∈ 0..=3`.
pub fn dyadic_value<S: Scalar, R: Rng>(rng: &mut R) -> S {
    let a = rng.gen_range(1..=8);
    let b = rng.gen_range(0..=3);
    S::from_ratio(a, 1 << b)
}

/// Random function with about `density · |T|` support nodes (at least one).
pub fn random_fn<S: Scalar, R: Rng>(rng: &mut R, d: &TreeDomain, density: f64) -> SparseFn<NodeAddress, S> {
    let count = ((d.node_count() as f64) * density).ceil().max(1.0) as usize;
    let mut f = SparseFn::new();
    for _ in 0..count {
        let n = random_node(rng, d);
        f.set(n, dyadic_value(rng)).expect("positive");
    }
    f
}

/// Random function supported inside `allowed`.
pub fn random_fn_on<S: Scalar, R: Rng>(
    rng: &mut R,
    allowed: &[NodeAddress],
    density: f64,
) -> SparseFn<NodeAddress, S> {
    let mut f = SparseFn::new();
    for n in allowed {
        if rng.gen_bool(density) {
            f.set(n.clone(), dyadic_value(rng)).expect("positive");
        }
    }
    f
}

/// Top-down split: each child gets a fraction `u/8` of the parent, with the
/// two fractions summing to at most one. Some branches are cut to zero.
pub fn random_superadditive<S: Scalar, R: Rng>(rng: &mut R, d: &TreeDomain) -> SparseFn<NodeAddress, S> {
    let mut g = SparseFn::new();
    let root_value: S = dyadic_value(rng);
    let mut stack = vec![(NodeAddress::root(), root_value)];
    while let Some((n, v)) = stack.pop() {
        g.set(n.clone(), v.clone()).expect("positive");
        if d.is_leaf(&n) {
            continue;
        }
        let a: i64 = rng.gen_range(0..=8);
        let b: i64 = rng.gen_range(0..=(8 - a));
        for (bit, u) in [(false, a), (true, b)] {
            if u > 0 && rng.gen_bool(0.85) {
                stack.push((n.child(bit), v.clone() * S::from_ratio(u, 8)));
            }
        }
    }
    g
}

/// Top-down non-increasing assignment: each child keeps a fraction
/// `u/4 ∈ {1/4, …, 1}` of its parent or is cut.
pub fn random_increasing<S: Scalar, R: Rng>(rng: &mut R, d: &TreeDomain) -> SparseFn<NodeAddress, S> {
    let mut g = SparseFn::new();
    let mut stack = vec![(NodeAddress::root(), dyadic_value::<S, _>(rng))];
    let keep = rng.gen_range(0.5..0.95);
    while let Some((n, v)) = stack.pop() {
        g.set(n.clone(), v.clone()).expect("positive");
        if d.is_leaf(&n) {
            continue;
        }
        for bit in [false, true] {
            if rng.gen_bool(keep) {
                let u = rng.gen_range(1..=4);
                stack.push((n.child(bit), v.clone() * S::from_ratio(u, 4)));
            }
        }
    }
    g
}

/// Rational `g` with `g^{p−1}` superadditive, for integer `p ≥ 2`.
///
/// Child values are `r · u/4`; the pair of fractions is accepted only when
/// `u₀^{p−1} + u₁^{p−1} ≤ 4^{p−1}`.
pub fn random_power_superadditive<S: Scalar, R: Rng>(
    rng: &mut R,
    d: &TreeDomain,
    p: u32,
) -> SparseFn<NodeAddress, S> {
    let e = p.saturating_sub(1).max(1);
    let cap = 4u64.pow(e);
    let mut g = SparseFn::new();
    let mut stack = vec![(NodeAddress::root(), dyadic_value::<S, _>(rng))];
    while let Some((n, v)) = stack.pop() {
        g.set(n.clone(), v.clone()).expect("positive");
        if d.is_leaf(&n) {
            continue;
        }
        let (a, b) = loop {
            let a: u64 = rng.gen_range(0..=4);
            let b: u64 = rng.gen_range(0..=4);
            if a.pow(e) + b.pow(e) <= cap {
                break (a, b);
            }
        };
        for (bit, u) in [(false, a), (true, b)] {
            if u > 0 && rng.gen_bool(0.85) {
                stack.push((n.child(bit), v.clone() * S::from_ratio(u as i64, 4)));
            }
        }
    }
    g
}

/// Weight function with values in `{1/4, 1/2, 1, 2, 4}` on every node.
pub fn random_weight<S: Scalar, R: Rng>(rng: &mut R, d: &TreeDomain) -> SparseFn<NodeAddress, S> {
    let nodes = d.nodes().expect("small domain");
    let mut w = SparseFn::new();
    for n in nodes {
        let e = rng.gen_range(-2i32..=2);
        let v = if e >= 0 {
            S::from_ratio(1 << e, 1)
        } else {
            S::from_ratio(1, 1 << (-e))
        };
        w.set(n, v).expect("positive");
    }
    w
}

/// Random atoms on a bi-tree.
pub fn random_bi_atoms<S: Scalar, R: Rng>(
    rng: &mut R,
    d: &BiTreeDomain,
    max_atoms: usize,
) -> SparseFn<BiNode, S> {
    let count = rng.gen_range(1..=max_atoms);
    let mut f = SparseFn::new();
    for _ in 0..count {
        f.add(random_bi_node(rng, d), dyadic_value(rng)).expect("positive");
    }
    f
}

/// The rectangle-mass function `m = I*μ` of random atoms.
pub fn random_rectangle_masses<S: Scalar, R: Rng>(
    rng: &mut R,
    d: &BiTreeDomain,
    max_atoms: usize,
) -> SparseFn<BiNode, S> {
    hardy_down_closure(&random_bi_atoms(rng, d, max_atoms))
}

/// Random family of distinct bi-nodes with coordinate depths `≤ max_depth`.
pub fn random_family<R: Rng>(rng: &mut R, max_members: usize, max_depth: usize) -> Vec<BiNode> {
    let d = BiTreeDomain::new(max_depth + 1, max_depth + 1).expect("positive levels");
    let mut all = d.nodes().expect("small domain");
    all.shuffle(rng);
    let count = rng.gen_range(1..=max_members);
    all.truncate(count);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{check_power_superadditive, is_increasing, is_superadditive};
    use num::BigRational;

    #[test]
    fn generators_satisfy_their_structure() {
        let d = TreeDomain::new(7).unwrap();
        for s in 0..40 {
            let mut r = rng(s);
            let g: SparseFn<NodeAddress, BigRational> = random_superadditive(&mut r, &d);
            assert!(is_superadditive(&g, &d).unwrap().holds);
            let h: SparseFn<NodeAddress, BigRational> = random_increasing(&mut r, &d);
            assert!(is_increasing(&h, &d).unwrap().holds);
            for p in [2, 3, 4] {
                let k: SparseFn<NodeAddress, BigRational> = random_power_superadditive(&mut r, &d, p);
                assert!(check_power_superadditive(&k, &d, p as f64).unwrap().holds);
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let d = TreeDomain::new(6).unwrap();
        let a: SparseFn<NodeAddress, f64> = random_fn(&mut rng(3), &d, 0.2);
        let b: SparseFn<NodeAddress, f64> = random_fn(&mut rng(3), &d, 0.2);
        assert_eq!(a, b);
        assert_ne!(instance_seed(1, 0), instance_seed(1, 1));
    }
}
