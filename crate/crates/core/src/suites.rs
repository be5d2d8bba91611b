//! Randomized corpora for the lemma verifiers.
//!
//! Each trial draws its instance from `instance_seed(seed, i)`; trials run in
//! parallel and are reported in trial order.

use num::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::hardy_up_on;
use crate::lemmas::{
    build_phi, verify_gest, verify_i2_positive, verify_inter, verify_linf, verify_new23,
    verify_supadditive_l1linf,
};
use crate::node::{BiTreeDomain, NodeAddress, TreeDomain};
use crate::random::{
    instance_seed, random_bi_atoms, random_fn, random_fn_on, random_increasing, random_node,
    random_power_superadditive, random_rectangle_masses, random_superadditive, random_weight, rng,
};
use crate::report::LemmaReport;
use crate::scalar::{integral_exponent, Mode, Scalar};
use crate::structure::{special_form_g, ExponentPair};

/// Aggregate of one randomized corpus.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub name: String,
    pub mode: Mode,
    pub trials: usize,
    pub depth: usize,
    pub seed: u64,
    pub violations: usize,
    pub max_ratio: Option<f64>,
    pub worst_seed: Option<u64>,
    /// Smallest `I(wφ)/I(wf)` and largest energy constant (phi suite only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_constants: Option<(f64, f64)>,
    #[serde(skip)]
    pub reports: Vec<LemmaReport>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// The report with the largest ratio, or the first one.
    pub fn worst(&self) -> Option<&LemmaReport> {
        let key = |r: &LemmaReport| match r.ratio_f64() {
            Some(x) => x,
            None if r.degenerate => f64::INFINITY,
            None => 0.0,
        };
        self.reports
            .iter()
            .max_by(|a, b| key(a).total_cmp(&key(b)))
    }
}

/// Largest tree used by the corpora.
pub const SUITE_MAX_DEPTH: usize = 10;

fn run<F>(name: &str, mode: Mode, trials: usize, depth: usize, seed: u64, one: F) -> Result<SuiteSummary>
where
    F: Fn(u64) -> Result<LemmaReport> + Sync,
{
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    if depth == 0 || depth > SUITE_MAX_DEPTH {
        return Err(Error::invalid(format!("depth = {depth} must lie in 1..={SUITE_MAX_DEPTH}")));
    }
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = instance_seed(seed, i);
            one(s).map(|r| r.with_seed(s))
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = reports.iter().filter(|r| !r.holds).count();
    let (max_ratio, worst_seed) = reports
        .iter()
        .filter_map(|r| r.ratio_f64().map(|x| (x, r.seed)))
        .fold((None, None), |(best, s), (x, rs)| match best {
            Some(b) if b >= x => (Some(b), s),
            _ => (Some(x), rs),
        });
    Ok(SuiteSummary {
        name: name.to_string(),
        mode,
        trials,
        depth,
        seed,
        violations,
        max_ratio,
        worst_seed,
        phi_constants: None,
        reports,
    })
}

fn domain(depth: usize) -> Result<TreeDomain> {
    TreeDomain::new(depth)
}

fn l1linf_one<S: Scalar>(s: u64, d: &TreeDomain) -> Result<LemmaReport> {
    let mut r = rng(s);
    let g = random_superadditive::<S, _>(&mut r, d);
    let h = random_fn::<S, _>(&mut r, d, 0.15);
    let gamma = random_node(&mut r, d);
    verify_supadditive_l1linf(&g, &h, &gamma, d)
}

/// Superadditive `g`, random `h` and `γ`.
pub fn suite_l1linf(mode: Mode, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    match mode {
        Mode::Exact => run("l1linf", mode, trials, depth, seed, |s| l1linf_one::<BigRational>(s, &d)),
        Mode::Float => run("l1linf", mode, trials, depth, seed, |s| l1linf_one::<f64>(s, &d)),
    }
}

fn i2pos_one<S: Scalar>(s: u64, d: &TreeDomain) -> Result<LemmaReport> {
    let mut r = rng(s);
    let density = r.gen_range(0.02..0.3);
    let f = random_fn::<S, _>(&mut r, d, density);
    let density = r.gen_range(0.02..0.3);
    let g = random_fn::<S, _>(&mut r, d, density);
    verify_i2_positive(&f, &g, d)
}

/// Arbitrary non-negative `f`, `g` on a tree.
pub fn suite_i2pos(mode: Mode, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    match mode {
        Mode::Exact => run("i2_positive", mode, trials, depth, seed, |s| i2pos_one::<BigRational>(s, &d)),
        Mode::Float => run("i2_positive", mode, trials, depth, seed, |s| i2pos_one::<f64>(s, &d)),
    }
}

fn i2pos_bitree_one<S: Scalar>(s: u64, d: &BiTreeDomain) -> Result<LemmaReport> {
    let mut r = rng(s);
    let f = random_bi_atoms::<S, _>(&mut r, d, 8);
    let g = random_bi_atoms::<S, _>(&mut r, d, 8);
    verify_i2_positive(&f, &g, d)
}

/// Arbitrary `f`, `g` on a bi-tree with `levels` levels per coordinate.
pub fn suite_i2pos_bitree(mode: Mode, trials: usize, levels: usize, seed: u64) -> Result<SuiteSummary> {
    let d = BiTreeDomain::new(levels, levels)?;
    match mode {
        Mode::Exact => run("i2_positive_bitree", mode, trials, levels, seed, |s| {
            i2pos_bitree_one::<BigRational>(s, &d)
        }),
        Mode::Float => run("i2_positive_bitree", mode, trials, levels, seed, |s| {
            i2pos_bitree_one::<f64>(s, &d)
        }),
    }
}

fn phi_one<S: Scalar>(s: u64, d: &TreeDomain) -> Result<LemmaReport> {
    let mut r = rng(s);
    let w = random_weight::<S, _>(&mut r, d);
    let g = random_superadditive::<S, _>(&mut r, d);
    let nodes: std::collections::BTreeSet<NodeAddress> = d.nodes()?.into_iter().collect();
    let iwg = hardy_up_on(&w.mul(&g), &nodes);
    let all: Vec<NodeAddress> = nodes.iter().cloned().collect();
    // δ is the level of I(wg) at a random node
    let pick = &all[r.gen_range(0..all.len())];
    let mut delta = iwg[pick].clone();
    if delta.is_zero() {
        delta = S::one();
    }
    let allowed: Vec<NodeAddress> = all.iter().filter(|n| iwg[*n] <= delta).cloned().collect();
    let density = r.gen_range(0.05..0.6);
    let f = random_fn_on::<S, _>(&mut r, &allowed, density);
    let u = S::from_ratio(r.gen_range(4..=16), 4);
    let lambda = S::from_u64(4) * delta.clone() * u;
    build_phi(&w, &g, &f, &lambda, &delta, d).map(|o| o.report)
}

/// Lemma Phi instances with random weights and `λ = 4δu`, `u ∈ [1, 4]`.
pub fn suite_phi(mode: Mode, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    let mut out = match mode {
        Mode::Exact => run("phi", mode, trials, depth, seed, |s| phi_one::<BigRational>(s, &d))?,
        Mode::Float => run("phi", mode, trials, depth, seed, |s| phi_one::<f64>(s, &d))?,
    };
    let geif = out
        .reports
        .iter()
        .filter_map(|r| r.params.get("geif_worst_ratio").map(|v| v.to_f64()))
        .fold(f64::INFINITY, f64::min);
    let enest = out
        .reports
        .iter()
        .filter_map(|r| r.params.get("enest_constant").map(|v| v.to_f64()))
        .fold(0.0, f64::max);
    out.phi_constants = Some((geif, enest));
    Ok(out)
}

fn gest_one<S: Scalar>(s: u64, d: &TreeDomain, p: u32) -> Result<LemmaReport> {
    let mut r = rng(s);
    let g = random_power_superadditive::<S, _>(&mut r, d, p);
    let gamma = random_node(&mut r, d);
    verify_gest(&g, &gamma, p as f64, d)
}

/// Rational `g` with `g^{p−1}` superadditive, integer `p`.
pub fn suite_gest(mode: Mode, p: u32, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    if p < 2 {
        return Err(Error::invalid(format!("p = {p} must be at least 2")));
    }
    let d = domain(depth)?;
    let name = format!("gest_p{p}");
    match mode {
        Mode::Exact => run(&name, mode, trials, depth, seed, |s| gest_one::<BigRational>(s, &d, p)),
        Mode::Float => run(&name, mode, trials, depth, seed, |s| gest_one::<f64>(s, &d, p)),
    }
}

fn gest_special_one<S: Scalar>(s: u64, levels: usize, p: f64) -> Result<LemmaReport> {
    let mut r = rng(s);
    let bd = BiTreeDomain::new(levels, levels)?;
    let m = random_rectangle_masses::<S, _>(&mut r, &bd, 6);
    let beta = random_node(&mut r, &bd.y);
    let pq = ExponentPair::new(p)?;
    let g = special_form_g(&m, &beta, &pq)?;
    if g.is_empty() {
        return Ok(LemmaReport::compare("gest", S::zero(), S::zero()).param_f64("p", p));
    }
    let gamma = random_node(&mut r, &bd.x);
    verify_gest(&g, &gamma, p, &bd.x)
}

/// `g` of special form built from random rectangle masses.
///
/// `q − 1 = 1/(p − 1)` is integral only at `p = 2`, so other exponents run
/// in float mode.
pub fn suite_gest_special(mode: Mode, p: f64, trials: usize, levels: usize, seed: u64) -> Result<SuiteSummary> {
    let name = format!("gest_special_p{p}");
    match mode {
        Mode::Exact => run(&name, mode, trials, levels, seed, |s| gest_special_one::<BigRational>(s, levels, p)),
        Mode::Float => run(&name, mode, trials, levels, seed, |s| gest_special_one::<f64>(s, levels, p)),
    }
}

fn new23_one<S: Scalar>(s: u64, d: &TreeDomain, p: f64) -> Result<LemmaReport> {
    let mut r = rng(s);
    let g = random_increasing::<S, _>(&mut r, d);
    let density = r.gen_range(0.02..0.4);
    let f = random_fn::<S, _>(&mut r, d, density);
    verify_new23(&f, &g, p, d)
}

/// Increasing `g`, random `f`. Non-integral `p` needs float mode.
pub fn suite_new23(mode: Mode, p: f64, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    let name = format!("new23_p{p}");
    if mode == Mode::Exact && integral_exponent(p).is_none() {
        return Err(Error::Inexact(format!("exponent p = {p} in exact mode")));
    }
    match mode {
        Mode::Exact => run(&name, mode, trials, depth, seed, |s| new23_one::<BigRational>(s, &d, p)),
        Mode::Float => run(&name, mode, trials, depth, seed, |s| new23_one::<f64>(s, &d, p)),
    }
}

fn linf_one<S: Scalar>(s: u64, d: &TreeDomain) -> Result<LemmaReport> {
    let mut r = rng(s);
    let g = random_increasing::<S, _>(&mut r, d);
    let density = r.gen_range(0.02..0.4);
    let f = random_fn::<S, _>(&mut r, d, density);
    verify_linf(&f, &g, d)
}

/// Increasing `g`, random `f`.
pub fn suite_linf(mode: Mode, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    match mode {
        Mode::Exact => run("linf", mode, trials, depth, seed, |s| linf_one::<BigRational>(s, &d)),
        Mode::Float => run("linf", mode, trials, depth, seed, |s| linf_one::<f64>(s, &d)),
    }
}

fn inter_one<S: Scalar>(s: u64, d: &TreeDomain, p: f64) -> Result<LemmaReport> {
    let mut r = rng(s);
    let g = random_superadditive::<S, _>(&mut r, d);
    let density = r.gen_range(0.02..0.4);
    let f = random_fn::<S, _>(&mut r, d, density);
    verify_inter(&f, &g, p, d)
}

/// Superadditive `g`, random `f`. The constant is existential, so
/// `violations` counts ratios above one and `max_ratio` is the measured
/// constant.
pub fn suite_inter(mode: Mode, p: f64, trials: usize, depth: usize, seed: u64) -> Result<SuiteSummary> {
    let d = domain(depth)?;
    let name = format!("inter_p{p}");
    match mode {
        Mode::Exact => run(&name, mode, trials, depth, seed, |s| inter_one::<BigRational>(s, &d, p)),
        Mode::Float => run(&name, mode, trials, depth, seed, |s| inter_one::<f64>(s, &d, p)),
    }
}
