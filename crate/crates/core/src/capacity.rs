//! Bi-tree capacity of the rectangle family `F = {q_jk}`.
//!
//! The capacity `min Σ φ²` subject to `I φ ≥ 1` on `F` is solved through the
//! measure-side QP `min ½ E(ρ) − ‖ρ‖` over `ρ ≥ 0` on `F`, whose kernel is
//! the common-ancestor count `(lcp_x + 1)(lcp_y + 1)`.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hardy::{potential, PointMeasure};
use crate::node::{BiNode, NodeAddress};
use crate::scalar::{Scalar, ScalarValue};

/// Values of `n` for which `n / log₂ n` is a power of two.
pub const ADMISSIBLE_N: [u64; 4] = [4, 16, 256, 65536];

/// Largest family accepted by [`capacity_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 12;

/// Largest family solved without the symmetry reduction.
pub const FULL_KERNEL_LIMIT: usize = 20_000;

/// The measure `ν`, the family `q_jk` and the levels `δ`, `λ`.
#[derive(Clone, Debug)]
pub struct BitreeInstance {
    pub n: u64,
    pub s: u32,
    pub m: u32,
    pub nu: PointMeasure<BigRational>,
    pub delta: BigRational,
    pub lambda: BigRational,
}

fn prefix(m: u32, j: u64) -> NodeAddress {
    NodeAddress::from_int(j - 1, m as usize)
}

impl BitreeInstance {
    /// Number of diagonal squares `n / s`.
    pub fn groups(&self) -> u64 {
        self.n / self.s as u64
    }

    /// Number of rectangles per square, `s + 1`.
    pub fn per_group(&self) -> usize {
        self.s as usize + 1
    }

    pub fn family_len(&self) -> usize {
        self.groups() as usize * self.per_group()
    }

    /// `ω_j`: prefix `j − 1` on `M` bits, then `n` zeros in both coordinates.
    pub fn omega(&self, j: u64) -> BiNode {
        let p = prefix(self.m, j).extend_zeros(self.n as usize);
        BiNode::new(p.clone(), p)
    }

    /// `q_jk`: x-extension `⌈n / 2^k⌉`, y-extension `2^k`.
    pub fn q(&self, j: u64, k: u32) -> BiNode {
        let p = prefix(self.m, j);
        let x = p.extend_zeros(self.n.div_ceil(1 << k) as usize);
        let y = p.extend_zeros(1usize << k);
        BiNode::new(x, y)
    }

    /// Family in `j`-major order; member `(j − 1)(s + 1) + k` is `q_jk`.
    pub fn family(&self) -> Vec<BiNode> {
        (1..=self.groups())
            .flat_map(|j| (0..=self.s).map(move |k| (j, k)))
            .map(|(j, k)| self.q(j, k))
            .collect()
    }

    /// Class index `k` of each family member.
    pub fn classes(&self) -> Vec<usize> {
        (0..self.family_len()).map(|i| i % self.per_group()).collect()
    }

    /// `I g(q_jk) = V^ν(q_jk)` for every `k`, exactly.
    pub fn lemma_g_values(&self, j: u64) -> Vec<BigRational> {
        (0..=self.s)
            .into_par_iter()
            .map(|k| potential(&self.nu, &self.q(j, k)))
            .collect()
    }
}

/// Builds `ν`, `δ = 1/(n s)` and `λ = ½ min_k V^ν(q_1k)`.
pub fn build_instance(n: u64) -> Result<BitreeInstance> {
    if !ADMISSIBLE_N.contains(&n) {
        return Err(Error::invalid(format!(
            "n = {n} is not admissible (expected one of 4, 16, 256, 65536)"
        )));
    }
    let s = n.trailing_zeros();
    let m = (n / s as u64).trailing_zeros();
    let groups = n / s as u64;
    let mass = BigRational::new(BigInt::one(), BigInt::from(n) * BigInt::from(n));
    let mut inst = BitreeInstance {
        n,
        s,
        m,
        nu: PointMeasure::new(Vec::new())?,
        delta: BigRational::new(BigInt::one(), BigInt::from(n) * BigInt::from(s)),
        lambda: BigRational::zero(),
    };
    let atoms = (1..=groups).map(|j| (inst.omega(j), mass.clone())).collect();
    inst.nu = PointMeasure::new(atoms)?;
    let values = inst.lemma_g_values(1);
    let min = values.into_iter().reduce(Scalar::min_of).expect("s + 1 > 0 members");
    inst.lambda = min / BigRational::from_integer(2.into());
    Ok(inst)
}

/// Values `I g(q_1k)` and their spread.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaGReport {
    pub n: u64,
    pub values: Vec<ScalarValue>,
    /// `n · I g(q_1k)`.
    pub scaled: Vec<f64>,
    pub min_scaled: f64,
    pub max_scaled: f64,
    pub ratio: f64,
    /// Values at `j = 2` coincide with `j = 1`.
    pub symmetric: bool,
    /// `F ⊆ {2λ ≤ I g ≤ 4λ}` for the instance `λ`.
    pub inclusion: bool,
}

pub fn check_lemma_g(inst: &BitreeInstance) -> LemmaGReport {
    let values = inst.lemma_g_values(1);
    let symmetric = inst.groups() < 2 || inst.lemma_g_values(2) == values;
    let n = BigRational::from_integer(inst.n.into());
    let scaled: Vec<f64> = values.iter().map(|v| (v * &n).to_f64()).collect();
    let min = values.iter().cloned().reduce(Scalar::min_of).unwrap();
    let max = values.iter().cloned().reduce(Scalar::max_of).unwrap();
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let inclusion = &two * &inst.lambda <= min && max <= &four * &inst.lambda;
    let min_scaled = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_scaled = scaled.iter().cloned().fold(0.0, f64::max);
    LemmaGReport {
        n: inst.n,
        values: values.iter().map(Scalar::to_value).collect(),
        min_scaled,
        max_scaled,
        ratio: (max / min).to_f64(),
        scaled,
        symmetric,
        inclusion,
    }
}

/// Output of [`capacity_qp`].
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumResult {
    /// Mass per member (or per member of each class).
    pub rho: Vec<f64>,
    pub class_sizes: Vec<u64>,
    pub cap: f64,
    pub energy: f64,
    /// `V^ρ` at each member (class representative).
    pub potentials: Vec<f64>,
    pub kkt_max_violation: f64,
    pub iterations: u64,
    pub converged: bool,
}

impl EquilibriumResult {
    pub fn min_potential(&self) -> f64 {
        self.potentials.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn kkt_violation(rho: &[f64], grad: &[f64]) -> f64 {
    rho.iter()
        .zip(grad)
        .map(|(r, g)| if *r > 0.0 { g.abs() } else { (-g).max(0.0) })
        .fold(0.0, f64::max)
}

/// Class-reduced kernel `K̃_ab = Σ_{m ∈ class b} K(rep_a, m)` and class sizes.
fn reduced_kernel(family: &[BiNode], classes: Option<&[usize]>) -> Result<(Vec<Vec<f64>>, Vec<u64>)> {
    match classes {
        None => {
            let kernel = family
                .par_iter()
                .map(|a| family.iter().map(|b| a.kernel(b) as f64).collect())
                .collect();
            Ok((kernel, vec![1; family.len()]))
        }
        Some(cls) => {
            if cls.len() != family.len() {
                return Err(Error::invalid("one class index per family member is required"));
            }
            let count = cls.iter().max().map_or(0, |c| c + 1);
            let mut reps = vec![None; count];
            let mut sizes = vec![0u64; count];
            for (i, c) in cls.iter().enumerate() {
                sizes[*c] += 1;
                reps[*c].get_or_insert(i);
            }
            if sizes.contains(&0) {
                return Err(Error::invalid("class indices must be contiguous from 0"));
            }
            let kernel = reps
                .par_iter()
                .map(|r| {
                    let a = &family[r.expect("non-empty class")];
                    let mut row = vec![0.0; count];
                    for (b, c) in family.iter().zip(cls) {
                        row[*c] += a.kernel(b) as f64;
                    }
                    row
                })
                .collect();
            Ok((kernel, sizes))
        }
    }
}

/// Projected gradient descent on the equilibrium QP.
///
/// With `classes`, members of one class share a mass; this is exact when the
/// family is invariant under a kernel-preserving symmetry that acts
/// transitively on each class. The iteration is deterministic.
pub fn capacity_qp(
    family: &[BiNode],
    classes: Option<&[usize]>,
    tol: f64,
    max_iters: u64,
) -> Result<EquilibriumResult> {
    if family.is_empty() {
        return Err(Error::invalid("family must be nonempty"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol = {tol} must be positive")));
    }
    if classes.is_none() && family.len() > FULL_KERNEL_LIMIT {
        return Err(Error::Resource {
            what: "full kernel without symmetry reduction".into(),
            needed: family.len() as u128,
            limit: FULL_KERNEL_LIMIT as u128,
        });
    }
    let (kernel, sizes) = reduced_kernel(family, classes)?;
    let dim = kernel.len();
    let row_max = kernel
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / row_max;
    let mut rho = vec![0.0; dim];
    let mut pot = vec![0.0; dim];
    let mut grad = vec![-1.0; dim];
    let mut iterations = 0;
    let mut violation = kkt_violation(&rho, &grad);
    while violation > tol && iterations < max_iters {
        for i in 0..dim {
            rho[i] = (rho[i] - step * grad[i]).max(0.0);
        }
        for i in 0..dim {
            pot[i] = kernel[i].iter().zip(&rho).map(|(k, r)| k * r).sum();
            grad[i] = pot[i] - 1.0;
        }
        iterations += 1;
        violation = kkt_violation(&rho, &grad);
    }
    if iterations == 0 {
        for i in 0..dim {
            pot[i] = kernel[i].iter().zip(&rho).map(|(k, r)| k * r).sum();
        }
    }
    let cap = rho.iter().zip(&sizes).map(|(r, c)| r * *c as f64).sum();
    let energy = rho
        .iter()
        .zip(&sizes)
        .zip(&pot)
        .map(|((r, c), v)| r * *c as f64 * v)
        .sum();
    Ok(EquilibriumResult {
        rho,
        class_sizes: sizes,
        cap,
        energy,
        potentials: pot,
        kkt_max_violation: violation,
        iterations,
        converged: violation <= tol,
    })
}

/// Equilibrium of the instance family, reduced by the symmetry in `j` unless
/// `symmetric` is false.
pub fn solve_instance(inst: &BitreeInstance, tol: f64, max_iters: u64, symmetric: bool) -> Result<EquilibriumResult> {
    let family = inst.family();
    if symmetric {
        capacity_qp(&family, Some(&inst.classes()), tol, max_iters)
    } else {
        capacity_qp(&family, None, tol, max_iters)
    }
}

/// Solves `A x = b` exactly; `None` if `A` is singular.
pub fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let t = &factor * &a[col][c];
                a[r][c] -= t;
            }
            let t = &factor * &b[col];
            b[r] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Exact capacity by active-set enumeration.
///
/// Every nonempty subset `S` with nonsingular `K_S` is solved for
/// `K_S ρ = 1`; the answer is the least `Σ ρ` over solutions with `ρ ≥ 0`
/// and potential at least one on the whole family.
pub fn capacity_bruteforce(family: &[BiNode]) -> Result<BigRational> {
    if family.is_empty() {
        return Err(Error::invalid("family must be nonempty"));
    }
    if family.len() > BRUTEFORCE_LIMIT {
        return Err(Error::Resource {
            what: "active-set enumeration".into(),
            needed: family.len() as u128,
            limit: BRUTEFORCE_LIMIT as u128,
        });
    }
    let k: Vec<Vec<BigRational>> = family
        .iter()
        .map(|a| family.iter().map(|b| BigRational::from_integer(a.kernel(b).into())).collect())
        .collect();
    let one = BigRational::one();
    let best = (1u32..(1 << family.len()))
        .into_par_iter()
        .filter_map(|mask| {
            let idx: Vec<usize> = (0..family.len()).filter(|i| mask >> i & 1 == 1).collect();
            let sub = idx.iter().map(|i| idx.iter().map(|j| k[*i][*j].clone()).collect()).collect();
            let rho = solve_exact(sub, vec![one.clone(); idx.len()])?;
            if rho.iter().any(|r| r.is_negative()) {
                return None;
            }
            let feasible = (0..family.len()).all(|i| {
                let v = idx
                    .iter()
                    .zip(&rho)
                    .fold(BigRational::zero(), |acc, (j, r)| acc + &k[i][*j] * r);
                v >= one
            });
            feasible.then(|| rho.into_iter().fold(BigRational::zero(), |a, b| a + b))
        })
        .reduce_with(Scalar::min_of);
    best.ok_or_else(|| Error::Internal("no feasible active set for a nonempty family".into()))
}

/// Shrunken debug family: `q_jk` for `j ∈ {1, 2}` with both paths cut to at
/// most `max_bits` bits, duplicates removed.
pub fn oracle_family(inst: &BitreeInstance, max_bits: usize) -> Vec<BiNode> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for j in 1..=inst.groups().min(2) {
        for k in 0..=inst.s {
            let q = inst.q(j, k);
            let x = q.x.truncate(q.x.depth().min(max_bits));
            let y = q.y.truncate(q.y.depth().min(max_bits));
            let node = BiNode::new(x, y);
            if seen.insert(node.clone()) {
                out.push(node);
            }
        }
    }
    out
}

/// One row of the refutation table.
#[derive(Clone, Debug, Serialize)]
pub struct D2Row {
    pub n: u64,
    pub s: u32,
    pub m: u32,
    pub delta: ScalarValue,
    /// Half the least family potential of this instance.
    pub lambda: ScalarValue,
    /// `c / n` with one `c` for the whole table.
    pub lambda_uniform: ScalarValue,
    pub delta_over_lambda: f64,
    pub delta_over_lambda_uniform: f64,
    pub cap: f64,
    /// `cap / (δ/λ)`, which would stay bounded if the conjecture held.
    pub cap_over_delta_lambda: f64,
    pub cap_over_delta_lambda_uniform: f64,
    pub band: (u32, u32),
    /// `n · mean(ρ_k)` over the middle band.
    pub band_mean_n: f64,
    pub lemma_g_min: f64,
    pub lemma_g_max: f64,
    pub lemma_g_ratio: f64,
    pub inclusion: bool,
    pub inclusion_uniform: bool,
    pub kkt_max_violation: f64,
    pub iterations: u64,
}

/// Middle band `k ∈ [s/2, ⌊3s/4⌋]`.
pub fn middle_band(s: u32) -> (u32, u32) {
    (s / 2, 3 * s / 4)
}

/// Table row from a converged class-reduced equilibrium.
pub fn report_d2(
    inst: &BitreeInstance,
    eq: &EquilibriumResult,
    lambda_uniform: Option<&BigRational>,
) -> Result<D2Row> {
    if !eq.converged {
        return Err(Error::NotConverged {
            iterations: eq.iterations,
            residual: eq.kkt_max_violation,
        });
    }
    let per_class: Vec<f64> = if eq.rho.len() == inst.per_group() {
        eq.rho.clone()
    } else if eq.rho.len() == inst.family_len() {
        // average over j of the per-member masses
        (0..inst.per_group())
            .map(|k| {
                let vals: Vec<f64> = eq.rho.iter().skip(k).step_by(inst.per_group()).copied().collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            })
            .collect()
    } else {
        return Err(Error::invalid("equilibrium does not match the instance family"));
    };
    let g = check_lemma_g(inst);
    let lambda_u = lambda_uniform.cloned().unwrap_or_else(|| inst.lambda.clone());
    let values = inst.lemma_g_values(1);
    let max = values.iter().cloned().reduce(Scalar::max_of).unwrap();
    let min = values.iter().cloned().reduce(Scalar::min_of).unwrap();
    let two = BigRational::from_integer(2.into());
    let four = BigRational::from_integer(4.into());
    let inclusion_uniform = &two * &lambda_u <= min && max <= &four * &lambda_u;
    let dl = (&inst.delta / &inst.lambda).to_f64();
    let dlu = (&inst.delta / &lambda_u).to_f64();
    let band = middle_band(inst.s);
    let band_vals = &per_class[band.0 as usize..=band.1 as usize];
    let band_mean = band_vals.iter().sum::<f64>() / band_vals.len() as f64;
    Ok(D2Row {
        n: inst.n,
        s: inst.s,
        m: inst.m,
        delta: inst.delta.to_value(),
        lambda: inst.lambda.to_value(),
        lambda_uniform: lambda_u.to_value(),
        delta_over_lambda: dl,
        delta_over_lambda_uniform: dlu,
        cap: eq.cap,
        cap_over_delta_lambda: eq.cap / dl,
        cap_over_delta_lambda_uniform: eq.cap / dlu,
        band,
        band_mean_n: band_mean * inst.n as f64,
        lemma_g_min: g.min_scaled,
        lemma_g_max: g.max_scaled,
        lemma_g_ratio: g.ratio,
        inclusion: g.inclusion,
        inclusion_uniform,
        kkt_max_violation: eq.kkt_max_violation,
        iterations: eq.iterations,
    })
}

/// `c = ½ min_n (n · min_k I g(q_1k))` over a set of instances.
pub fn uniform_lambda_constant(insts: &[BitreeInstance]) -> BigRational {
    insts
        .iter()
        .map(|i| &i.lambda * BigRational::from_integer(i.n.into()))
        .reduce(Scalar::min_of)
        .unwrap_or_else(BigRational::zero)
}

/// Refutation table over several `n`, solved with the symmetry reduction.
pub fn d2_table(ns: &[u64], tol: f64, max_iters: u64) -> Result<Vec<D2Row>> {
    let insts = ns.iter().map(|n| build_instance(*n)).collect::<Result<Vec<_>>>()?;
    let c = uniform_lambda_constant(&insts);
    insts
        .par_iter()
        .map(|inst| {
            let eq = solve_instance(inst, tol, max_iters, true)?;
            let lu = &c / BigRational::from_integer(inst.n.into());
            report_d2(inst, &eq, Some(&lu))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::from_ratio(a, b)
    }

    #[test]
    fn instance_sixteen() {
        let inst = build_instance(16).unwrap();
        assert_eq!((inst.s, inst.m, inst.groups()), (4, 2, 4));
        assert_eq!(inst.delta, q(1, 64));
        assert_eq!(inst.nu.total_mass(), q(1, 64));
        assert_eq!(potential(&inst.nu, &BiNode::root()), inst.delta);
        for j in 1..=4 {
            for k in 0..=4 {
                assert!(inst.q(j, k).contains(&inst.omega(j)));
            }
        }
        let g = check_lemma_g(&inst);
        assert!(g.symmetric);
        assert_eq!(g.values[0], q(82, 256).to_value());
    }

    #[test]
    fn rejects_inadmissible_n() {
        let err = build_instance(8).unwrap_err();
        assert!(err.to_string().contains("4, 16, 256, 65536"));
    }

    #[test]
    fn single_node_capacity() {
        for a in 0..4 {
            for b in 0..4 {
                let node = BiNode::new(NodeAddress::zeros(a), NodeAddress::zeros(b));
                let exact = capacity_bruteforce(std::slice::from_ref(&node)).unwrap();
                assert_eq!(exact, q(1, ((a + 1) * (b + 1)) as i64));
                let eq = capacity_qp(&[node], None, 1e-12, 100_000).unwrap();
                assert!(eq.converged);
                assert!((eq.cap - 1.0 / ((a + 1) * (b + 1)) as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn duplicates_do_not_change_capacity() {
        let node: BiNode = "x=0/y=1".parse().unwrap();
        let one = capacity_bruteforce(&[node.clone()]).unwrap();
        let two = capacity_bruteforce(&[node.clone(), node]).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn root_sharing_pair() {
        let a: BiNode = "x=0/y=0".parse().unwrap();
        let b: BiNode = "x=11/y=1".parse().unwrap();
        // K = [[4, 1], [1, 6]], ρ = K⁻¹ 1 = (5, 3)/23
        let exact = capacity_bruteforce(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(exact, q(8, 23));
        let eq = capacity_qp(&[a, b], None, 1e-13, 1_000_000).unwrap();
        assert!((eq.cap - 8.0 / 23.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_and_full_solves_agree() {
        let inst = build_instance(16).unwrap();
        let sym = solve_instance(&inst, 1e-10, 1_000_000, true).unwrap();
        let full = solve_instance(&inst, 1e-10, 1_000_000, false).unwrap();
        assert!(sym.converged && full.converged);
        assert!((sym.cap - full.cap).abs() <= 1e-6 * sym.cap);
    }
}
