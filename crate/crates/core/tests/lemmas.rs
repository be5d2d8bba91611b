use cxlab_core::cex::{halving_g, p_less_2_instance};
use cxlab_core::lemmas::{
    build_phi, gest_report, verify_gest, verify_i2_positive, verify_inter, verify_linf, verify_new23,
    verify_supadditive_l1linf,
};
use cxlab_core::random::{
    instance_seed, random_fn, random_increasing, random_node, random_rectangle_masses, random_superadditive, rng,
};
use cxlab_core::structure::{
    check_power_superadditive, is_increasing, is_superadditive, special_form_g, ExponentPair,
};
use cxlab_core::{BiNode, BiTreeDomain, Error, NodeAddress, Scalar, ScalarValue, SparseFn, TreeDomain};
use num::{BigRational, One, Zero};
use rand::Rng;

type Q = BigRational;

fn q(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

fn node(s: &str) -> NodeAddress {
    s.parse().unwrap()
}

fn root() -> NodeAddress {
    NodeAddress::root()
}

fn exact(v: &ScalarValue) -> Q {
    v.as_exact().cloned().expect("exact value")
}

fn four_times_five_quarters(n: u32) -> Q {
    Q::from_integer(4.into()) * (q(5, 4).powi(n) - Q::one())
}

#[test]
fn superadditive_examples() {
    let d = TreeDomain::new(6).unwrap();
    let unit: SparseFn<NodeAddress, Q> = SparseFn::unit_root();
    assert!(is_superadditive(&unit, &d).unwrap().holds);

    let g = halving_g::<Q>(6).unwrap();
    let p = is_superadditive(&g, &d).unwrap();
    assert!(!p.holds);
    assert_eq!(p.witness, Some(root()));
    assert!(is_increasing(&g, &d).unwrap().holds);

    let (d3, _, g3) = p_less_2_instance(3).unwrap();
    assert!(is_superadditive(&g3, &d3).unwrap().holds);
}

#[test]
fn increasing_counterexample() {
    let d = TreeDomain::new(3).unwrap();
    let g = SparseFn::<NodeAddress, Q>::delta(node("1"), Q::one()).unwrap();
    let p = is_increasing(&g, &d).unwrap();
    assert!(!p.holds);
}

#[test]
fn single_path_superadditive_is_increasing() {
    let d = TreeDomain::new(9).unwrap();
    for i in 0..300 {
        let mut r = rng(instance_seed(21, i));
        let leaf = NodeAddress::from_int(r.gen_range(0..256), 8);
        let mut g = SparseFn::<NodeAddress, Q>::new();
        let mut v = q(r.gen_range(1..16), 1);
        for a in leaf.ancestors() {
            g.set(a, v.clone()).unwrap();
            v = v * q(r.gen_range(0..=8), 8);
        }
        assert!(is_superadditive(&g, &d).unwrap().holds);
        assert!(is_increasing(&g, &d).unwrap().holds);
    }
}

#[test]
fn special_form_examples() {
    let pq = ExponentPair::new(3.0).unwrap();
    let t = 4.0;
    let gamma0 = node("01");
    let m = SparseFn::delta(BiNode::new(gamma0.clone(), node("1")), t).unwrap();
    let g = special_form_g(&m, &node("10"), &pq).unwrap();
    assert_eq!(g.len(), 1);
    assert!((g.get(&gamma0) - 2.0).abs() < 1e-12);
    let g = special_form_g(&m, &node("0"), &pq).unwrap();
    assert!(g.is_empty());
}

#[test]
fn power_superadditivity_examples() {
    let d = TreeDomain::new(6).unwrap();
    let g = halving_g::<Q>(6).unwrap();
    assert!(!check_power_superadditive(&g, &d, 2.0).unwrap().holds);
    let mut ones = SparseFn::<NodeAddress, Q>::new();
    for n in d.nodes().unwrap() {
        ones.set(n, Q::one()).unwrap();
    }
    for p in [2.0, 3.0] {
        assert!(!check_power_superadditive(&ones, &d, p).unwrap().holds);
    }
}

/// `m = I*μ` gives superadditive `g^{p−1}` for every `β`.
#[test]
fn special_form_is_power_superadditive() {
    let bd = BiTreeDomain::new(5, 5).unwrap();
    for p in [2.0, 2.5, 3.0, 4.0] {
        let pq = ExponentPair::new(p).unwrap();
        for i in 0..1000 {
            let mut r = rng(instance_seed(22 + p.to_bits(), i));
            let m = random_rectangle_masses::<f64, _>(&mut r, &bd, 6);
            let beta = random_node(&mut r, &bd.y);
            let g = special_form_g(&m, &beta, &pq).unwrap();
            let pred = check_power_superadditive(&g, &bd.x, p).unwrap();
            assert!(pred.holds, "p = {p}, trial {i}, witness {:?}", pred.witness);
        }
    }
}

#[test]
fn l1linf_examples() {
    let d = TreeDomain::new(4).unwrap();
    let unit = SparseFn::<NodeAddress, Q>::unit_root();
    let r = verify_supadditive_l1linf(&unit, &unit, &root(), &d).unwrap();
    assert!(r.holds);
    assert_eq!(exact(&r.lhs), Q::one());
    assert_eq!(exact(&r.rhs), Q::one());
    assert_eq!(exact(&r.params["lambda"]), Q::one());

    for n in [8usize, 10, 12] {
        let d = TreeDomain::new(n).unwrap();
        let g = halving_g::<Q>(n).unwrap();
        let r = verify_supadditive_l1linf(&g, &g, &root(), &d).unwrap();
        assert_eq!(exact(&r.lhs), four_times_five_quarters(n as u32));
        assert_eq!(exact(&r.rhs), Q::from_integer(n.into()));
        assert!(!r.holds);
        assert_eq!(r.flags["superadditive"], false);
    }
}

#[test]
fn i2_positive_examples() {
    let d = TreeDomain::new(4).unwrap();
    let unit = SparseFn::<NodeAddress, Q>::unit_root();
    let r = verify_i2_positive(&unit, &unit, &d).unwrap();
    assert_eq!((exact(&r.lhs), exact(&r.rhs)), (Q::one(), Q::one()));
    assert!(r.holds);
}

#[test]
fn phi_examples() {
    let d = TreeDomain::new(5).unwrap();
    let w = SparseFn::<NodeAddress, Q>::unit_root();
    let g = SparseFn::delta(root(), Q::one()).unwrap();
    let out = build_phi(&w, &g, &SparseFn::new(), &q(4, 1), &q(1, 1), &d).unwrap();
    assert!(out.phi.is_empty());
    assert!(out.report.holds);

    // I(wg) = 1 everywhere, so δ = 1 keeps φ ≡ 0
    let f = SparseFn::delta(node("01"), q(3, 1)).unwrap();
    let out = build_phi(&w, &g, &f, &q(4, 1), &q(1, 1), &d).unwrap();
    assert!(out.phi.is_empty());

    let err = build_phi(&w, &g, &f, &q(3, 1), &q(1, 1), &d).unwrap_err();
    assert!(matches!(err, Error::Precondition { .. }));
    let bad_g = halving_g::<Q>(5).unwrap();
    let err = build_phi(&w, &bad_g, &f, &q(400, 1), &q(100, 1), &d).unwrap_err();
    match err {
        Error::Precondition { witness, .. } => assert_eq!(witness.as_deref(), Some("")),
        e => panic!("{e}"),
    }
}

#[test]
fn inter_examples() {
    let d = TreeDomain::new(4).unwrap();
    let unit = SparseFn::<NodeAddress, Q>::unit_root();
    for p in [1.0, 2.0, 3.0] {
        let r = verify_inter(&unit, &unit, p, &d).unwrap();
        assert!(r.holds);
        assert_eq!(r.ratio_f64(), Some(1.0));
        assert_eq!(exact(&r.params["delta"]), Q::one());
        assert_eq!(exact(&r.params["lambda"]), Q::one());
    }
    let r = verify_inter(&SparseFn::new(), &unit, 2.0, &d).unwrap();
    assert!(r.degenerate && r.ratio.is_none());
}

#[test]
fn inter_ratio_grows_below_two() {
    let ratios: Vec<f64> = (4..=6)
        .map(|k| {
            let (d, f, g) = p_less_2_instance(k).unwrap();
            verify_inter(&f, &g, 1.5, &d).unwrap().ratio_f64().unwrap()
        })
        .collect();
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");
}

#[test]
fn linf_examples() {
    let d = TreeDomain::new(4).unwrap();
    let unit = SparseFn::<NodeAddress, Q>::unit_root();
    let r = verify_linf(&unit, &unit, &d).unwrap();
    assert!(r.holds && exact(&r.lhs).is_one() && exact(&r.rhs).is_one());

    let n = 10;
    let d = TreeDomain::new(n).unwrap();
    let g = halving_g::<Q>(n).unwrap();
    let mut f = SparseFn::new();
    for a in NodeAddress::from_bits(std::iter::repeat(true).take(n - 1)).ancestors() {
        f.set(a, Q::one()).unwrap();
    }
    let r = verify_linf(&f, &g, &d).unwrap();
    assert!(r.holds);
    assert_eq!(exact(&r.lhs), Q::from_integer(n.into()));
    assert!(exact(&r.rhs) > exact(&r.lhs));
}

#[test]
fn new23_at_two_is_i2_positive_with_coarser_sup() {
    let d = TreeDomain::new(8).unwrap();
    for i in 0..100 {
        let mut r = rng(instance_seed(23, i));
        let g = random_increasing::<Q, _>(&mut r, &d);
        let f = random_fn::<Q, _>(&mut r, &d, 0.1);
        let a = verify_new23(&f, &g, 2.0, &d).unwrap();
        let b = verify_i2_positive(&f, &g, &d).unwrap();
        assert_eq!(a.lhs, b.lhs);
        assert!(a.holds && b.holds);
        assert!(exact(&b.params["sup_bound"]) <= exact(&a.params["sup_refined"]));
    }
}

#[test]
fn gest_examples() {
    let d = TreeDomain::new(4).unwrap();
    let unit = SparseFn::<NodeAddress, Q>::unit_root();
    for p in [2.0, 3.0, 4.0] {
        let r = verify_gest(&unit, &root(), p, &d).unwrap();
        assert!(r.holds && exact(&r.lhs).is_one() && exact(&r.rhs).is_one());
    }

    let d = TreeDomain::new(12).unwrap();
    let g = halving_g::<Q>(12).unwrap();
    let err = verify_gest(&g, &root(), 2.0, &d).unwrap_err();
    assert!(matches!(err, Error::Precondition { .. }));
    let r = gest_report(&g, &root(), 2.0).unwrap();
    assert!(!r.holds);
    assert_eq!(exact(&r.lhs), four_times_five_quarters(12));
    assert_eq!(exact(&r.rhs), Q::from_integer(12.into()));
}

#[test]
fn gest_holds_on_special_form() {
    let bd = BiTreeDomain::new(5, 5).unwrap();
    for p in [2.0, 3.0, 4.0] {
        let pq = ExponentPair::new(p).unwrap();
        for i in 0..200 {
            let mut r = rng(instance_seed(24, i));
            let m = random_rectangle_masses::<f64, _>(&mut r, &bd, 6);
            let g = special_form_g(&m, &random_node(&mut r, &bd.y), &pq).unwrap();
            if g.is_empty() {
                continue;
            }
            let gamma = random_node(&mut r, &bd.x);
            let rep = verify_gest(&g, &gamma, p, &bd.x).unwrap();
            assert!(rep.holds, "p = {p}, trial {i}: {rep:?}");
        }
    }
}

fn scaled(f: &SparseFn<NodeAddress, Q>, t: &Q) -> SparseFn<NodeAddress, Q> {
    f.scale(t).unwrap()
}

#[test]
fn scaling_covariance() {
    let d = TreeDomain::new(7).unwrap();
    for i in 0..100 {
        let mut r = rng(instance_seed(25, i));
        let gs = random_superadditive::<Q, _>(&mut r, &d);
        let gi = random_increasing::<Q, _>(&mut r, &d);
        let f = random_fn::<Q, _>(&mut r, &d, 0.2);
        if f.is_empty() {
            continue;
        }
        let inter = verify_inter(&f, &gs, 2.0, &d).unwrap();
        let linf = verify_linf(&f, &gi, &d).unwrap();
        let new23 = verify_new23(&f, &gi, 2.0, &d).unwrap();
        for t in [q(1, 3), q(7, 1)] {
            let ft = scaled(&f, &t);
            let a = verify_inter(&ft, &gs, 2.0, &d).unwrap();
            assert_eq!(a.holds, inter.holds);
            assert_eq!(exact(&a.params["lhs_pow"]), exact(&inter.params["lhs_pow"]) * &t * &t);
            assert_eq!(exact(&a.params["rhs_pow"]), exact(&inter.params["rhs_pow"]) * &t * &t);

            let b = verify_linf(&ft, &gi, &d).unwrap();
            assert_eq!(b.holds, linf.holds);
            assert_eq!(exact(&b.lhs), exact(&linf.lhs) * &t);
            assert_eq!(exact(&b.rhs), exact(&linf.rhs) * &t);

            let c = verify_new23(&ft, &gi, 2.0, &d).unwrap();
            assert_eq!(c.holds, new23.holds);
            assert_eq!(exact(&c.lhs), exact(&new23.lhs) * &t * &t);
            assert_eq!(exact(&c.rhs), exact(&new23.rhs) * &t * &t);
            assert_eq!(c.ratio, new23.ratio);
        }
    }
}

#[test]
fn exact_reports_are_reproducible() {
    let d = TreeDomain::new(8).unwrap();
    let run = || {
        let mut r = rng(99);
        let g = random_superadditive::<Q, _>(&mut r, &d);
        let f = random_fn::<Q, _>(&mut r, &d, 0.1);
        serde_json::to_string(&verify_i2_positive(&f, &g, &d).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_rhs_is_degenerate() {
    let d = TreeDomain::new(3).unwrap();
    let g = SparseFn::<NodeAddress, Q>::delta(node("0"), Q::one()).unwrap();
    let r = verify_supadditive_l1linf(&g, &g, &root(), &d).unwrap();
    assert!(r.degenerate && !r.holds && r.ratio.is_none());
    assert!(exact(&r.rhs).is_zero());
}
