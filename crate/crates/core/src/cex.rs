//! Exact generators for the single-tree counterexamples.
//!
//! The halving function `g = 2^{-#zeros}` lives on the full tree and is far
//! too large to materialize at `N = 25` or `N = 40`; its sums are taken over
//! classes of nodes with equal depth, leading-zero run and zero count.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::{double_hardy_closure, hardy_up_on};
use crate::lemmas::{gest_report, verify_inter, verify_new23};
use crate::node::{ancestor_closure, NodeAddress, TreeDomain};
use crate::random::{instance_seed, rng};
use crate::report::LemmaReport;
use crate::scalar::Scalar;
use crate::sparse::SparseFn;
use crate::structure::{is_increasing, is_superadditive};

/// Largest support materialized by the generators.
pub const SUPPORT_LIMIT: u128 = 1 << 22;

/// Largest tree on which the halving function is stored node by node.
pub const MATERIALIZE_LEVELS: usize = 12;

/// Levels on which structure flags of the halving function are checked.
const STRUCTURE_LEVELS: usize = 12;

/// A counterexample instance with its reports.
#[derive(Clone, Debug)]
pub struct TreeCex<S> {
    pub domain: TreeDomain,
    pub f: Option<SparseFn<NodeAddress, S>>,
    pub g: Option<SparseFn<NodeAddress, S>>,
    pub report: LemmaReport,
    pub extra: Vec<LemmaReport>,
}

fn sum<S: Scalar, I: IntoIterator<Item = S>>(it: I) -> S {
    it.into_iter().fold(S::zero(), |a, b| a + b)
}

fn two_pow_neg<S: Scalar>(e: f64) -> Result<S> {
    Ok(S::one() / S::from_u64(2).powf(e)?)
}

/// `(2^{-i} on the first k generations, then 2^{-k} down the left spine)`.
pub fn p_less_2_instance(k: u32) -> Result<(TreeDomain, SparseFn<NodeAddress, f64>, SparseFn<NodeAddress, f64>)> {
    if k < 2 {
        return Err(Error::invalid(format!("k = {k} must be at least 2")));
    }
    let tail = 1u128.checked_shl(k).unwrap_or(u128::MAX);
    let support = (tail * 2 - 1).saturating_add(tail.saturating_mul(tail));
    if k > 20 || support > SUPPORT_LIMIT {
        return Err(Error::Resource {
            what: format!("support of the k = {k} instance"),
            needed: support,
            limit: SUPPORT_LIMIT,
        });
    }
    let levels = k as usize + (1usize << k) + 1;
    let d = TreeDomain::new(levels)?;
    let mut g = SparseFn::new();
    let mut f = SparseFn::new();
    for i in 0..=k as usize {
        let v = 0.5f64.powi(i as i32);
        for j in 0..(1u64 << i) {
            let n = NodeAddress::from_int(j, i);
            g.set(n.clone(), v)?;
            f.set(n, v)?;
        }
    }
    let tail_value = 0.5f64.powi(k as i32);
    for j in 0..(1u64 << k) {
        let base = NodeAddress::from_int(j, k as usize);
        for extra in 1..=(1usize << k) {
            let n = base.extend_zeros(extra);
            let depth = n.depth();
            g.set(n.clone(), tail_value)?;
            f.set(n, 0.5f64.powi(depth as i32))?;
        }
    }
    Ok((d, f, g))
}

/// Counterexample to the `p`-interpolation bound for `1 < p < 2`.
///
/// The report compares `Σ (I f · g)^p` with `3^p Σ f^p` (`δ = λ = 3`); the
/// norm-form report of [`verify_inter`] is attached as `extra[0]`.
pub fn gen_cex_p_less_2(k: u32, p: f64) -> Result<TreeCex<f64>> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::invalid(format!("p = {p} must lie in (1, 2)")));
    }
    let (d, f, g) = p_less_2_instance(k)?;
    let nodes: BTreeSet<NodeAddress> = g.support().cloned().collect();
    let lf = hardy_up_on(&f, &nodes);
    let ig = hardy_up_on(&g, &nodes);
    let lhs = sum(g.iter().map(|(n, v)| (lf[n] * v).powf(p)));
    let f_pow = sum(f.iter().map(|(_, v)| f64::powf(*v, p)));
    let max_ig = nodes.iter().map(|n| ig[n]).fold(0.0, f64::max);
    let lower = 2f64.powf((2.0 - p) * k as f64);
    let report = LemmaReport::compare("p_less_2", lhs, 3f64.powf(p) * f_pow)
        .param_int("k", k as u64)
        .param_f64("p", p)
        .param_int("levels", d.levels as u64)
        .param_f64("lower_bound", lower)
        .param_f64("max_ig", max_ig)
        .param_f64("f_p_pow", f_pow)
        .flag("lower_bound_holds", lhs >= lower)
        .flag("max_ig_le_3", max_ig <= 3.0)
        .flag("superadditive", is_superadditive(&g, &d)?.holds);
    let inter = verify_inter(&f, &g, p, &d)?;
    Ok(TreeCex {
        domain: d,
        f: Some(f),
        g: Some(g),
        report,
        extra: vec![inter],
    })
}

/// `g(root) = 1`, `g(left) = g/2`, `g(right) = g`, i.e. `g = 2^{-#zeros}`.
pub fn halving_g<S: Scalar>(levels: usize) -> Result<SparseFn<NodeAddress, S>> {
    let d = TreeDomain::new(levels)?;
    let mut g = SparseFn::new();
    for n in d.nodes()? {
        g.set(n.clone(), S::from_ratio(1, 1) / S::from_u64(1u64 << n.count_zeros()))?;
    }
    Ok(g)
}

fn halving_structure_flags(levels: usize) -> Result<(bool, bool, usize)> {
    let checked = levels.min(STRUCTURE_LEVELS);
    let d = TreeDomain::new(checked)?;
    let g = halving_g::<f64>(checked)?;
    Ok((is_increasing(&g, &d)?.holds, is_superadditive(&g, &d)?.holds, checked))
}

/// `Σ_{levels 0..N−1} Σ_nodes g^p = Σ_i (1 + 2^{-p})^i` for the halving `g`.
pub fn halving_power_sum<S: Scalar>(levels: usize, p: f64) -> Result<S> {
    let r = S::one() + two_pow_neg::<S>(p)?;
    let mut term = S::one();
    let mut total = S::zero();
    for _ in 0..levels {
        total = total + term.clone();
        term = term * r.clone();
    }
    Ok(total)
}

/// Closed form `2^p (r^N − 1)`, `r = (2^p + 1)/2^p`.
pub fn halving_closed_form<S: Scalar>(levels: usize, p: f64) -> Result<S> {
    let two_p = S::from_u64(2).powf(p)?;
    let r = (two_p.clone() + S::one()) / two_p.clone();
    Ok(two_p * (r.powi(levels as u32) - S::one()))
}

/// Increasing but strictly subadditive `g` violating the `g^p` estimate.
///
/// `λ = N` is attained on the all-ones path; the report is the gest-form
/// comparison `Σ g^p` against `λ g(root)^{p−1}` at `γ = root`.
pub fn gen_cex_increasing<S: Scalar>(levels: usize, p: f64) -> Result<TreeCex<S>> {
    if levels == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p = {p} must be at least 1")));
    }
    let d = TreeDomain::new(levels)?;
    let lhs = halving_power_sum::<S>(levels, p)?;
    let lambda = S::from_u64(levels as u64);
    let closed = halving_closed_form::<S>(levels, p)?;
    let (increasing, superadditive, checked) = halving_structure_flags(levels)?;
    let mut report = LemmaReport::compare("gest", lhs.clone(), lambda.clone())
        .param_int("N", levels as u64)
        .param_f64("p", p)
        .param("lambda", &lambda)
        .param("closed_form", &closed)
        .param_int("structure_levels_checked", checked as u64)
        .witness(NodeAddress::root())
        .flag("closed_form_matches", lhs.eq_tol(&closed))
        .flag("increasing", increasing)
        .flag("superadditive", superadditive);
    let g = if levels <= MATERIALIZE_LEVELS {
        let g = halving_g::<S>(levels)?;
        let direct = gest_report(&g, &NodeAddress::root(), p)?;
        let agrees = direct.lhs == report.lhs && direct.rhs == report.rhs;
        report = report.flag("materialized_agrees", agrees);
        Some(g)
    } else {
        None
    };
    Ok(TreeCex {
        domain: d,
        f: None,
        g,
        report,
        extra: Vec::new(),
    })
}

/// `Σ (I f · g)^p` for the halving `g` and `f = 1` on the leftmost path.
///
/// A node at depth `i` with leading-zero run `ℓ < i` has `I f = ℓ + 1`; its
/// remaining `i − ℓ − 1` free bits contribute a factor `(1 + 2^{-p})` each.
pub fn direct_lhs<S: Scalar>(levels: usize, p: f64) -> Result<S> {
    let half_p = two_pow_neg::<S>(p)?;
    let r = S::one() + half_p.clone();
    let mut r_pows = vec![S::one()];
    let mut hp_pows = vec![S::one()];
    for _ in 0..levels {
        r_pows.push(r_pows.last().unwrap().clone() * r.clone());
        hp_pows.push(hp_pows.last().unwrap().clone() * half_p.clone());
    }
    let lifts = (0..=levels)
        .map(|l| S::from_u64(l as u64 + 1).powf(p))
        .collect::<Result<Vec<S>>>()?;
    let mut total = S::zero();
    for i in 0..levels {
        for l in 0..i {
            // first ℓ bits zero, bit ℓ is one
            total = total
                + lifts[l].clone() * hp_pows[l].clone() * r_pows[i - l - 1].clone();
        }
        total = total + lifts[i].clone() * hp_pows[i].clone();
    }
    Ok(total)
}

/// Theorem-inter failure with increasing `g`: `Σ (I f · g)^p` against
/// `δ^{p−1} λ Σ f^p` with `δ = 2`, `λ = N`.
pub fn gen_cex_direct<S: Scalar>(levels: usize, p: f64) -> Result<TreeCex<S>> {
    if levels < 2 {
        return Err(Error::invalid(format!("N = {levels} must be at least 2")));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p = {p} must be at least 1")));
    }
    let d = TreeDomain::new(levels)?;
    let lhs = direct_lhs::<S>(levels, p)?;
    let n = S::from_u64(levels as u64);
    let delta = S::from_u64(2);
    let rhs = delta.powf(p - 1.0)? * n.clone() * n.clone();
    // sup of I g on the leftmost path, attained at its leaf
    let delta_least = S::from_u64(2) - S::from_u64(2) / S::from_u64(2).powi(levels as u32);
    let rhs_least = delta_least.powf(p - 1.0).ok().map(|v| v * n.clone() * n.clone());
    let g_pow = halving_power_sum::<S>(levels, p)?;
    let (increasing, superadditive, checked) = halving_structure_flags(levels)?;
    let mut report = LemmaReport::compare("direct", lhs.clone(), rhs)
        .param_int("N", levels as u64)
        .param_f64("p", p)
        .param("delta", &delta)
        .param("delta_least", &delta_least)
        .param("lambda", &n)
        .param("f_p_pow", &n)
        .param("g_p_pow", &g_pow)
        .param_int("structure_levels_checked", checked as u64)
        .flag("lhs_ge_g_p_pow", g_pow.le_tol(&lhs))
        .flag("increasing", increasing)
        .flag("superadditive", superadditive);
    if let Some(r) = rhs_least {
        report = report.param("ratio_delta_least", &(lhs / r));
    }
    let (f, g) = if levels <= MATERIALIZE_LEVELS {
        let g = halving_g::<S>(levels)?;
        let f = SparseFn::from_pairs((0..levels).map(|i| (NodeAddress::zeros(i), S::one())))?;
        (Some(f), Some(g))
    } else {
        (None, None)
    };
    Ok(TreeCex {
        domain: d,
        f,
        g,
        report,
        extra: Vec::new(),
    })
}

/// The two test functions of the `p > 2` construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum New23Variant {
    /// `g(u_k) = 2^{-k}` on the leftmost path, zero elsewhere.
    Halving,
    /// `g ≡ 1` on the whole tree.
    Constant,
}

impl std::fmt::Display for New23Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            New23Variant::Halving => "halving",
            New23Variant::Constant => "constant",
        })
    }
}

/// One printed step of the lower-bound chain, evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct AuditStep {
    pub id: String,
    pub claim: String,
    pub relation: String,
    pub lhs: crate::scalar::ScalarValue,
    pub rhs: crate::scalar::ScalarValue,
    pub holds: bool,
}

/// Values along the path `u_1 = root, …, u_N`.
#[derive(Clone, Debug, Serialize)]
pub struct PathRow {
    pub k: usize,
    pub g: crate::scalar::ScalarValue,
    pub down: crate::scalar::ScalarValue,
    pub potential: crate::scalar::ScalarValue,
}

#[derive(Clone, Debug, Serialize)]
pub struct New23Audit {
    pub variant: New23Variant,
    pub report: LemmaReport,
    pub argmax: NodeAddress,
    pub argmax_is_leaf: bool,
    pub argmax_g_nonzero: bool,
    pub steps: Vec<AuditStep>,
    pub first_failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<PathRow>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct New23Cex {
    pub levels: usize,
    pub p: f64,
    pub variants: Vec<New23Audit>,
}

struct PathValues<S> {
    g: Vec<S>,
    down: Vec<S>,
    pot: Vec<S>,
    sup: S,
    argmax: NodeAddress,
    lhs: S,
    report: Option<LemmaReport>,
}

fn abs_diff<S: Scalar>(a: &S, b: &S) -> S {
    if a >= b {
        a.clone() - b.clone()
    } else {
        b.clone() - a.clone()
    }
}

fn halving_path<S: Scalar>(levels: usize, p: f64) -> Result<PathValues<S>> {
    let d = TreeDomain::new(levels)?;
    let path: Vec<NodeAddress> = (0..levels).map(NodeAddress::zeros).collect();
    let mut g = SparseFn::new();
    let mut value = S::one();
    for n in &path {
        value = value / S::from_u64(2);
        g.set(n.clone(), value.clone())?;
    }
    let f = SparseFn::from_pairs(path.iter().map(|n| (n.clone(), S::one())))?;
    let (down, pot) = double_hardy_closure(&g);
    // off the path I* g vanishes, so I I* g is maximal on the path
    let (argmax, sup) = path
        .iter()
        .map(|n| (n, pot[n].clone()))
        .fold((path[0].clone(), S::zero()), |(a, best), (n, v)| {
            if v > best {
                (n.clone(), v)
            } else {
                (a, best)
            }
        });
    let report = verify_new23(&f, &g, p, &d)?;
    // I f(u_k) = k and g vanishes off the path
    let mut lhs = S::zero();
    for (k, n) in path.iter().enumerate() {
        lhs = lhs + S::from_u64(k as u64 + 1).powf(p)? * g.get(n);
    }
    Ok(PathValues {
        g: path.iter().map(|n| g.get(n)).collect(),
        down: path.iter().map(|n| down.get(n)).collect(),
        pot: path.iter().map(|n| pot[n].clone()).collect(),
        sup,
        argmax,
        lhs,
        report: Some(report),
    })
}

fn constant_path<S: Scalar>(levels: usize, p: f64) -> Result<PathValues<S>> {
    let two = S::from_u64(2);
    let mut g = Vec::with_capacity(levels);
    let mut down = Vec::with_capacity(levels);
    let mut pot = Vec::with_capacity(levels);
    let mut acc = S::zero();
    for k in 1..=levels {
        // subtree of u_k has N − k + 1 levels
        let size = two.powi((levels - k + 1) as u32) - S::one();
        acc = acc + size.clone();
        g.push(S::one());
        down.push(size);
        pot.push(acc.clone());
    }
    // depth-i total of (ℓ + 1)^p, with ℓ the leading-zero run
    let mut level_sum = S::one();
    let mut lhs = S::zero();
    for i in 0..levels {
        lhs = lhs + level_sum.clone();
        let here = S::from_u64(i as u64 + 1).powf(p)?;
        let next = S::from_u64(i as u64 + 2).powf(p)?;
        level_sum = two.clone() * level_sum - here + next;
    }
    // every leaf carries the same I I* g; pick the leftmost
    Ok(PathValues {
        sup: pot.last().cloned().unwrap_or_else(S::zero),
        argmax: NodeAddress::zeros(levels - 1),
        g,
        down,
        pot,
        lhs,
        report: None,
    })
}

fn step<S: Scalar>(id: &str, claim: &str, relation: &str, lhs: S, rhs: S) -> AuditStep {
    let holds = match relation {
        "=" => lhs.eq_tol(&rhs),
        ">=" => rhs.le_tol(&lhs),
        "<=" => lhs.le_tol(&rhs),
        _ => false,
    };
    AuditStep {
        id: id.to_string(),
        claim: claim.to_string(),
        relation: relation.to_string(),
        lhs: lhs.to_value(),
        rhs: rhs.to_value(),
        holds,
    }
}

/// Evaluates every printed step of the lower-bound chain on one variant.
fn audit_chain<S: Scalar>(v: &PathValues<S>, levels: usize, p: f64) -> Result<Vec<AuditStep>> {
    let n = levels;
    let kp = |k: usize| S::from_u64(k as u64).powf(p);
    let kp1 = |k: usize| S::from_u64(k as u64).powf(p - 1.0);
    let kp2 = |k: usize| S::from_u64(k as u64).powf(p - 2.0);
    // 1-based accessors
    let g = |k: usize| v.g[k - 1].clone();
    let dn = |k: usize| v.down[k - 1].clone();
    let pot = |k: usize| v.pot[k - 1].clone();
    let sup = v.sup.clone();
    let c = S::from_f64(p)? / S::from_u64(2).powf(p - 1.0)?;

    let mut path_full = S::zero();
    let mut path_tail = S::zero();
    let mut abel1 = S::zero();
    let mut mvt = S::zero();
    let mut tele1 = S::zero();
    let mut tele2 = S::zero();
    for k in 1..=n {
        let term = kp(k)? * g(k);
        path_full = path_full + term.clone();
        if k >= 2 {
            path_tail = path_tail + term;
            abel1 = abel1 + dn(k) * (kp(k)? - kp(k - 1)?);
            mvt = mvt + dn(k) * kp1(k)?;
            tele1 = tele1 + abs_diff(&g(k), &(dn(k) - dn(k - 1)));
            tele2 = tele2 + abs_diff(&dn(k), &(pot(k) - pot(k - 1)));
        }
    }
    let mut abel_tail = S::zero();
    let mut incr_sum = S::zero();
    let mut power_sum = S::zero();
    for k in 1..n {
        let incr = kp1(k + 1)? - kp1(k)?;
        abel_tail = abel_tail + pot(k) * incr.clone();
        incr_sum = incr_sum + incr;
        power_sum = power_sum + kp2(k)?;
    }
    let pm1 = S::from_f64(p - 1.0)?;
    let deriv_sum = pm1.clone() * power_sum.clone();
    let nn = S::from_u64(n as u64);
    let top = kp1(n)?;
    let prev = kp1(n - 1)?;
    let star = pot(n) * top.clone() - pot(1) - abel_tail;
    let star_lower = sup.clone() * top.clone() - pot(1) - sup.clone() * incr_sum;
    let star_star = sup.clone() * top.clone() - pot(1) - sup.clone() * deriv_sum;
    let integral = (prev.clone() - S::one()) / pm1;
    let after_integral = sup.clone() * top.clone() - pot(1) - sup.clone() * (prev.clone() - S::one());
    let final_form = sup.clone() * (top.clone() - prev.clone());
    let bound = c.clone() * final_form.clone();
    let rhs_claim = sup.clone() * nn.clone();

    // the printed limit after dividing by (N−1)^{p−1}
    let claimed_limit = p / 2f64.powf(p - 1.0) * ((p - 1.0).exp() - 1.0);
    let at_n = (c.clone() * (top - prev.clone()) / prev).to_f64();

    Ok(vec![
        step("s1", "sum_T (If)^p g >= sum_{k=1..N} k^p g(u_k)", ">=", v.lhs.clone(), path_full.clone()),
        step("s2", "sum_{k=1..N} k^p g(u_k) >= sum_{k=2..N} k^p g(u_k)", ">=", path_full, path_tail.clone()),
        step("s3", "g(u_k) = I*g(u_k) - I*g(u_{k-1}), total deviation", "=", tele1, S::zero()),
        step("s4", "sum k^p g(u_k) = sum I*g(u_k) (k^p - (k-1)^p)", "=", path_tail.clone(), abel1.clone()),
        step("s5", "sum I*g(u_k) (k^p - (k-1)^p) >= p/2^{p-1} sum I*g(u_k) k^{p-1}", ">=", abel1, c.clone() * mvt.clone()),
        step("s6", "I*g(u_k) = II*g(u_k) - II*g(u_{k-1}), total deviation", "=", tele2, S::zero()),
        step("s7", "sum I*g(u_k) k^{p-1} = (star)", "=", mvt.clone(), star.clone()),
        step("s8", "(star) >= sup N^{p-1} - II*g(u_1) - sup sum_{k=1..N-1} ((k+1)^{p-1} - k^{p-1})", ">=", star, star_lower.clone()),
        step("s9", "previous >= (star star) with (p-1) sum k^{p-2}", ">=", star_lower, star_star.clone()),
        step("s10", "sum_{k=1..N-1} k^{p-2} <= ((N-1)^{p-1} - 1)/(p-1)", "<=", power_sum, integral),
        step("s11", "(star star) >= sup N^{p-1} - II*g(u_1) - sup ((N-1)^{p-1} - 1)", ">=", star_star, after_integral.clone()),
        step("s12", "previous >= sup (N^{p-1} - (N-1)^{p-1})", ">=", after_integral, final_form),
        step("s13", "sum_T (If)^p g >= p/2^{p-1} sup (N^{p-1} - (N-1)^{p-1})", ">=", v.lhs.clone(), bound.clone()),
        step("s14", "p/2^{p-1} sup (N^{p-1} - (N-1)^{p-1}) > sup N (claimed contradiction)", ">=", bound, rhs_claim),
        step(
            "s15",
            "p/2^{p-1} (N^{p-1}/(N-1)^{p-1} - 1) within 1% of p/2^{p-1} (e^{p-1} - 1)",
            "<=",
            (at_n - claimed_limit).abs(),
            0.01 * claimed_limit,
        ),
    ])
}

fn audit_variant<S: Scalar>(variant: New23Variant, levels: usize, p: f64, with_path: bool) -> Result<New23Audit> {
    let v = match variant {
        New23Variant::Halving => halving_path::<S>(levels, p)?,
        New23Variant::Constant => constant_path::<S>(levels, p)?,
    };
    let steps = audit_chain(&v, levels, p)?;
    let first_failure = steps.iter().find(|s| !s.holds).map(|s| s.id.clone());
    let n = S::from_u64(levels as u64);
    let report = match &v.report {
        Some(r) => r.clone(),
        None => LemmaReport::compare("new23", v.lhs.clone(), v.sup.clone() * n)
            .param_f64("p", p)
            .param("sup_refined", &v.sup)
            .param("f_p_pow", &S::from_u64(levels as u64)),
    };
    let agrees = report.lhs == v.lhs.to_value();
    let report = report
        .flag("path_sum_agrees", agrees)
        .param_int("N", levels as u64)
        .param("potential_root", &v.pot[0])
        .witness(&v.argmax)
        .flag("first_failure_found", first_failure.is_some());
    let argmax_g_nonzero = match variant {
        New23Variant::Halving => v.argmax.is_root() || v.argmax.bits().all(|b| !b),
        New23Variant::Constant => true,
    };
    let path = with_path.then(|| {
        (0..levels)
            .map(|i| PathRow {
                k: i + 1,
                g: v.g[i].to_value(),
                down: v.down[i].to_value(),
                potential: v.pot[i].to_value(),
            })
            .collect()
    });
    Ok(New23Audit {
        variant,
        report,
        argmax_is_leaf: v.argmax.depth() + 1 == levels,
        argmax: v.argmax,
        argmax_g_nonzero,
        steps,
        first_failure,
        path,
    })
}

/// Audited evaluation of the `p > 2` construction on both variants.
pub fn gen_cex_new23<S: Scalar>(levels: usize, p: f64, with_path: bool) -> Result<New23Cex> {
    if levels < 3 {
        return Err(Error::invalid(format!("N = {levels} must be at least 3")));
    }
    if !(p > 2.0) {
        return Err(Error::invalid(format!("p = {p} must exceed 2")));
    }
    let variants = [New23Variant::Halving, New23Variant::Constant]
        .into_iter()
        .map(|v| audit_variant::<S>(v, levels, p, with_path))
        .collect::<Result<Vec<_>>>()?;
    Ok(New23Cex {
        levels,
        p,
        variants,
    })
}

/// Best instance found by [`search_new23`].
#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub p: f64,
    pub depth: usize,
    pub budget: u64,
    pub seed: u64,
    pub best_index: u64,
    pub best_seed: u64,
    pub best_ratio: f64,
    pub report: LemmaReport,
    pub instances_over_one: u64,
}

/// Largest tree the search evaluates.
pub const SEARCH_MAX_DEPTH: usize = 14;

struct DenseInstance {
    f: Vec<f64>,
    g: Vec<f64>,
}

/// Heap layout: node `i` has children `2i+1`, `2i+2`.
fn sample_dense(levels: usize, seed: u64) -> DenseInstance {
    let size = (1usize << levels) - 1;
    let mut r = rng(seed);
    let mut g = vec![0.0; size];
    let mut f = vec![0.0; size];
    let keep = r.gen_range(0.3..0.95);
    g[0] = r.gen_range(0.1..1.0);
    for i in 1..size {
        let parent = (i - 1) / 2;
        if g[parent] > 0.0 && r.gen_bool(keep) {
            let u: f64 = if r.gen_bool(0.3) { 1.0 } else { r.gen_range(0.0..1.0) };
            g[i] = g[parent] * u;
        }
    }
    if r.gen_bool(0.5) {
        // f on one random root-to-leaf path
        let mut i = 0;
        loop {
            f[i] = if r.gen_bool(0.5) { 1.0 } else { r.gen_range(0.0..1.0) };
            if 2 * i + 1 >= size {
                break;
            }
            i = 2 * i + 1 + usize::from(r.gen_bool(0.5));
        }
    } else {
        let density = r.gen_range(0.02..0.5);
        for v in f.iter_mut() {
            if r.gen_bool(density) {
                *v = r.gen_range(0.0..1.0);
            }
        }
    }
    DenseInstance { f, g }
}

fn dense_ratio(inst: &DenseInstance, p: f64) -> f64 {
    let size = inst.g.len();
    let mut lift = vec![0.0; size];
    for i in 0..size {
        let up = if i == 0 { 0.0 } else { lift[(i - 1) / 2] };
        lift[i] = up + inst.f[i];
    }
    let mut down = inst.g.clone();
    for i in (1..size).rev() {
        let v = down[i];
        down[(i - 1) / 2] += v;
    }
    let mut pot = vec![0.0; size];
    for i in 0..size {
        let up = if i == 0 { 0.0 } else { pot[(i - 1) / 2] };
        pot[i] = up + down[i];
    }
    let mut lhs = 0.0;
    let mut f_pow = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..size {
        if inst.g[i] > 0.0 {
            lhs += lift[i].powf(p) * inst.g[i];
            if inst.f[i] > 0.0 {
                sup = sup.max(pot[i]);
            }
        }
        if inst.f[i] > 0.0 {
            f_pow += inst.f[i].powf(p);
        }
    }
    let rhs = sup * f_pow;
    if rhs > 0.0 {
        lhs / rhs
    } else {
        0.0
    }
}

fn dense_to_sparse(levels: usize, v: &[f64]) -> Result<SparseFn<NodeAddress, f64>> {
    let mut out = SparseFn::new();
    for (i, x) in v.iter().enumerate() {
        if *x > 0.0 {
            // heap index i + 1 spelled in binary, minus its leading one
            let h = (i + 1) as u64;
            let depth = 63 - h.leading_zeros() as usize;
            debug_assert!(depth < levels);
            out.set(NodeAddress::from_int(h - (1 << depth), depth), *x)?;
        }
    }
    Ok(out)
}

/// Randomized search for instances maximizing the new23 ratio.
///
/// Instances are scored by a dense evaluator; the winner is re-evaluated by
/// [`verify_new23`] on sparse storage.
pub fn search_new23(p: f64, depth: usize, budget: u64, seed: u64) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    if depth == 0 || depth > SEARCH_MAX_DEPTH {
        return Err(Error::invalid(format!(
            "depth = {depth} must lie in 1..={SEARCH_MAX_DEPTH}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p = {p} must be at least 1")));
    }
    let scored: Vec<(u64, f64)> = (0..budget)
        .into_par_iter()
        .map(|i| (i, dense_ratio(&sample_dense(depth, instance_seed(seed, i)), p)))
        .collect();
    let over_one = scored.iter().filter(|(_, r)| *r > 1.0).count() as u64;
    let (best_index, best_ratio) = scored
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |(bi, br), (i, r)| if r > br { (i, r) } else { (bi, br) });
    let best_seed = instance_seed(seed, best_index);
    let inst = sample_dense(depth, best_seed);
    let d = TreeDomain::new(depth)?;
    let f = dense_to_sparse(depth, &inst.f)?;
    let g = dense_to_sparse(depth, &inst.g)?;
    let report = verify_new23(&f, &g, p, &d)?;
    let sparse_ratio = report.ratio_f64().unwrap_or(0.0);
    let agree = (sparse_ratio - best_ratio).abs() <= 1e-9 * best_ratio.abs().max(1.0);
    let report = report
        .with_seed(best_seed)
        .param_int("depth", depth as u64)
        .param_int("budget", budget)
        .param_int("instance", best_index)
        .flag("dense_sparse_agree", agree);
    Ok(SearchOutcome {
        p,
        depth,
        budget,
        seed,
        best_index,
        best_seed,
        best_ratio,
        report,
        instances_over_one: over_one,
    })
}

/// Brute-force `Σ (I f · g)^p` over a materialized instance.
pub fn direct_sum<S: Scalar>(
    f: &SparseFn<NodeAddress, S>,
    g: &SparseFn<NodeAddress, S>,
    p: f64,
) -> Result<S> {
    let closure = ancestor_closure(g.support().cloned());
    let lf = hardy_up_on(f, &closure);
    g.iter()
        .map(|(n, v)| Ok((lf[n].clone() * v.clone()).powf(p)?))
        .try_fold(S::zero(), |acc, t: Result<S>| Ok(acc + t?))
}
