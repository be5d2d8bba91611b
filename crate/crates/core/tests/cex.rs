use std::collections::BTreeMap;

use cxlab_core::cex::{
    direct_sum, gen_cex_direct, gen_cex_increasing, gen_cex_new23, gen_cex_p_less_2, halving_g, p_less_2_instance,
    search_new23, New23Variant,
};
use cxlab_core::lemmas::lift_at;
use cxlab_core::{eval_hardy_down, Error, NodeAddress, Scalar, ScalarValue};
use num::{BigRational, One};

type Q = BigRational;

fn q(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

fn exact(v: &ScalarValue) -> Q {
    v.as_exact().cloned().expect("exact value")
}

#[test]
fn p_less_2_supports_and_generation_counts() {
    for k in 2..=6u32 {
        let (d, f, g) = p_less_2_instance(k).unwrap();
        assert_eq!(d.levels, k as usize + (1 << k) + 1);
        assert!(f.support().eq(g.support()));
        let mut per_gen: BTreeMap<usize, usize> = BTreeMap::new();
        for n in g.support() {
            *per_gen.entry(n.depth()).or_default() += 1;
        }
        for (i, c) in per_gen {
            let expect = if i <= k as usize { 1 << i } else { 1 << k };
            assert_eq!(c, expect, "k = {k}, generation {i}");
        }
    }
}

#[test]
fn p_less_2_bounds() {
    let mut last = 0.0;
    for k in 3..=8u32 {
        let c = gen_cex_p_less_2(k, 1.5).unwrap();
        let r = &c.report;
        assert!(r.flags["lower_bound_holds"] && r.flags["max_ig_le_3"] && r.flags["superadditive"]);
        assert!(r.lhs.to_f64() >= 2f64.powf(0.5 * k as f64));
        let ratio = r.ratio_f64().unwrap();
        assert!(ratio > last, "k = {k}: {ratio} after {last}");
        last = ratio;
    }
    let c = gen_cex_p_less_2(4, 1.5).unwrap();
    assert_eq!(c.report.params["lower_bound"].to_f64(), 4.0);
}

#[test]
fn p_less_2_rejects_large_k() {
    match gen_cex_p_less_2(24, 1.5) {
        Err(Error::Resource { needed, limit, .. }) => assert!(needed > limit),
        other => panic!("{other:?}"),
    }
    assert!(matches!(gen_cex_p_less_2(4, 2.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn increasing_closed_form_identity() {
    let two_pow = [(2.0, 4i64), (3.0, 8), (4.0, 16)];
    for (p, tp) in two_pow {
        let r = q(tp + 1, tp);
        for n in 1..=25usize {
            let c = gen_cex_increasing::<Q>(n, p).unwrap();
            let expect = Q::from_integer(tp.into()) * (r.clone().powi(n as u32) - Q::one());
            assert_eq!(exact(&c.report.lhs), expect, "p = {p}, N = {n}");
            assert_eq!(exact(&c.report.rhs), Q::from_integer(n.into()));
            assert!(c.report.flags["closed_form_matches"]);
            assert!(c.report.flags["increasing"]);
            // a single node has no children to dominate
            assert_eq!(c.report.flags["superadditive"], n == 1, "N = {n}");
            if let Some(agrees) = c.report.flags.get("materialized_agrees") {
                assert!(agrees);
            }
        }
    }
    let c = gen_cex_increasing::<Q>(2, 2.0).unwrap();
    assert_eq!(exact(&c.report.lhs), q(9, 4));
}

#[test]
fn increasing_violation_at_twenty() {
    let c = gen_cex_increasing::<Q>(20, 2.0).unwrap();
    assert!(!c.report.holds);
    let expect = Q::from_integer(4.into()) * (q(5, 4).powi(20) - Q::one()) / Q::from_integer(20.into());
    assert_eq!(exact(c.report.ratio.as_ref().unwrap()), expect);
    assert!(expect > Q::from_integer(17.into()));
}

#[test]
fn direct_examples() {
    let n = 12;
    let c = gen_cex_direct::<Q>(n, 2.0).unwrap();
    let (f, g) = (c.f.unwrap(), c.g.unwrap());
    for a in c.domain.nodes().unwrap() {
        assert!(lift_at(&f, &a) >= Q::one());
    }
    let f_pow = f.iter().fold(Q::from_integer(0.into()), |s, (_, v)| s + v.clone() * v.clone());
    assert_eq!(f_pow, Q::from_integer((n as i64).into()));
    assert_eq!(exact(&c.report.params["f_p_pow"]), f_pow);
    // closed form for the left side against direct summation
    assert_eq!(exact(&c.report.lhs), direct_sum(&f, &g, 2.0).unwrap());
}

#[test]
fn direct_violation_at_forty() {
    let c = gen_cex_direct::<Q>(40, 2.0).unwrap();
    assert!(!c.report.holds);
    assert_eq!(exact(&c.report.rhs), Q::from_integer(3200.into()));
    assert!(c.report.ratio_f64().unwrap() > 9.0);
    assert!(c.report.flags["lhs_ge_g_p_pow"]);
    let g_pow = Q::from_integer(4.into()) * (q(5, 4).powi(40) - Q::one());
    assert_eq!(exact(&c.report.params["g_p_pow"]), g_pow);
}

#[test]
fn direct_float_matches_exact() {
    for n in [5usize, 16, 30] {
        let a = gen_cex_direct::<Q>(n, 3.0).unwrap().report;
        let b = gen_cex_direct::<f64>(n, 3.0).unwrap().report;
        let (x, y) = (a.lhs.to_f64(), b.lhs.to_f64());
        assert!((x - y).abs() <= 1e-9 * x);
    }
}

#[test]
fn new23_halving_potential_closed_form() {
    for n in [3usize, 10, 40] {
        let c = gen_cex_new23::<Q>(n, 4.0, true).unwrap();
        let h = &c.variants[0];
        assert_eq!(h.variant, New23Variant::Halving);
        assert!(h.argmax_is_leaf && h.argmax_g_nonzero);
        let two_n = Q::from_integer(2.into()).powi(n as u32);
        let expect = Q::from_integer(2.into()) * (Q::one() - Q::one() / &two_n)
            - Q::from_integer((n as i64).into()) / &two_n;
        let sup = &h.path.as_ref().unwrap().last().unwrap().potential;
        assert_eq!(exact(sup), expect, "N = {n}");
    }
}

#[test]
fn new23_path_rows_match_hardy_down() {
    let n = 8;
    let c = gen_cex_new23::<Q>(n, 4.0, true).unwrap();
    let rows = c.variants[0].path.as_ref().unwrap();
    let mut g = cxlab_core::SparseFn::<NodeAddress, Q>::new();
    for k in 0..n {
        g.set(NodeAddress::zeros(k), Q::one() / Q::from_integer(2.into()).powi(k as u32 + 1)).unwrap();
    }
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(exact(&row.down), eval_hardy_down(&g, &NodeAddress::zeros(k)));
    }
}

#[test]
fn new23_audit_is_complete_and_deterministic() {
    for n in [10usize, 100] {
        let a = gen_cex_new23::<Q>(n, 4.0, false).unwrap();
        let b = gen_cex_new23::<Q>(n, 4.0, false).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.variants.len(), 2);
        for v in &a.variants {
            assert!(!v.steps.is_empty());
            assert!(v.argmax_g_nonzero);
            let first = v.steps.iter().find(|s| !s.holds).map(|s| s.id.clone());
            assert_eq!(first, v.first_failure);
        }
    }
    assert!(gen_cex_new23::<Q>(2, 4.0, false).is_err());
    assert!(gen_cex_new23::<Q>(10, 2.0, false).is_err());
}

#[test]
fn search_is_reproducible_and_bounded_at_small_p() {
    for p in [1.5, 2.0] {
        let s = search_new23(p, 8, 2000, 3).unwrap();
        assert!(s.best_ratio <= 1.0 + 1e-9, "p = {p}: {}", s.best_ratio);
        assert_eq!(s.instances_over_one, 0);
    }
    let a = search_new23(4.0, 10, 2000, 5).unwrap();
    let b = search_new23(4.0, 10, 2000, 5).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.report.flags["dense_sparse_agree"]);
    assert!(matches!(search_new23(4.0, 10, 0, 5), Err(Error::InvalidArgument(_))));
    assert!(search_new23(4.0, 15, 10, 5).is_err());
}

#[test]
fn halving_g_matches_its_rule() {
    let g = halving_g::<Q>(6).unwrap();
    for (n, v) in g.iter() {
        for c in [n.child(false), n.child(true)] {
            if c.depth() < 6 {
                let expect = if c.bit(c.depth() - 1) { v.clone() } else { v.clone() / Q::from_integer(2.into()) };
                assert_eq!(g.get(&c), expect);
            }
        }
    }
}
