//! Named experiments over parameter grids, with JSON and CSV output.
//!
//! Every CLI subcommand is one experiment evaluated on a single cell; a
//! config file evaluates the same experiment over the cartesian product of
//! its grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{
    build_instance, capacity_bruteforce, capacity_qp, check_lemma_g, d2_table, oracle_family,
    solve_instance,
};
use crate::cex::{
    gen_cex_direct, gen_cex_increasing, gen_cex_new23, gen_cex_p_less_2, halving_closed_form,
    halving_power_sum, search_new23,
};
use crate::error::{Error, Result};
use crate::report::LemmaReport;
use crate::scalar::{Mode, Scalar, ScalarValue};
use crate::suites::{
    suite_gest, suite_i2pos, suite_inter, suite_l1linf, suite_linf, suite_new23, suite_phi,
    SuiteSummary,
};

/// Every experiment name accepted by [`run_cell`].
pub const EXPERIMENTS: [&str; 15] = [
    "verify-l1linf",
    "verify-i2pos",
    "verify-phi",
    "verify-inter",
    "verify-linf",
    "verify-new23",
    "verify-gest",
    "cex-p-less-2",
    "cex-increasing",
    "cex-direct",
    "cex-new23",
    "cex-search-new23",
    "capacity",
    "capacity-oracle",
    "report-d2",
];

/// Default relative agreement required between the QP and the exact oracle.
pub const ORACLE_REL_TOL: f64 = 1e-6;

/// Expected outcome of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    /// A proven statement: every report must hold.
    Holds,
    /// A counterexample: the ratio must exceed one where a closed form
    /// guarantees it.
    Violation,
    /// Measurement only.
    None,
}

/// Parameters of one grid cell.
pub type Cell = BTreeMap<String, Value>;

/// Configuration file schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tol: Option<f64>,
    pub out: PathBuf,
    /// Adds wall-clock `runtime_ms` to each cell; off by default so that
    /// exact-mode output is byte-identical across runs.
    #[serde(default)]
    pub record_runtime: bool,
}

fn default_mode() -> Mode {
    Mode::Exact
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::invalid(format!(
                "unknown experiment {:?}; expected one of {}",
                self.experiment,
                EXPERIMENTS.join(", ")
            )));
        }
        if let Some((k, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::invalid(format!("grid parameter {k:?} has no values")));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::invalid(format!("tol = {t} must be positive")));
            }
        }
        Ok(())
    }

    /// Cartesian product of the grid, last key varying fastest.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![Cell::new()];
        for (k, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(k.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

/// Result of one cell: the primary report flattened, plus details.
#[derive(Clone, Debug, Serialize)]
pub struct CellOutput {
    pub experiment: String,
    pub cell: Cell,
    #[serde(flatten)]
    pub report: LemmaReport,
    pub expectation: Expectation,
    pub passed: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

/// Settings shared by all cells of a run.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub mode: Mode,
    pub seed: u64,
    pub tol: Option<f64>,
}

fn get_u64(cell: &Cell, key: &str, default: Option<u64>) -> Result<u64> {
    match cell.get(key) {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::invalid(format!("parameter {key} must be a non-negative integer, got {v}"))),
        None => default.ok_or_else(|| Error::invalid(format!("missing parameter {key}"))),
    }
}

fn get_f64(cell: &Cell, key: &str, default: Option<f64>) -> Result<f64> {
    match cell.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::invalid(format!("parameter {key} must be a number, got {v}"))),
        None => default.ok_or_else(|| Error::invalid(format!("missing parameter {key}"))),
    }
}

fn get_bool(cell: &Cell, key: &str) -> Result<bool> {
    match cell.get(key) {
        Some(v) => v
            .as_bool()
            .ok_or_else(|| Error::invalid(format!("parameter {key} must be a boolean, got {v}"))),
        None => Ok(false),
    }
}

fn get_u64_list(cell: &Cell, key: &str, default: &[u64]) -> Result<Vec<u64>> {
    match cell.get(key) {
        None => Ok(default.to_vec()),
        Some(Value::Array(vs)) => vs
            .iter()
            .map(|v| v.as_u64().ok_or_else(|| Error::invalid(format!("{key} entries must be integers"))))
            .collect(),
        Some(v) => v
            .as_u64()
            .map(|x| vec![x])
            .ok_or_else(|| Error::invalid(format!("{key} must be an integer list"))),
    }
}

fn suite_output(s: SuiteSummary, expectation: Expectation) -> Result<(LemmaReport, Expectation, bool, Value)> {
    let worst = s
        .worst()
        .cloned()
        .ok_or_else(|| Error::Internal("empty suite".into()))?
        .param_int("trials", s.trials as u64)
        .param_int("violations", s.violations as u64);
    let passed = match expectation {
        Expectation::Holds => s.passed(),
        _ => true,
    };
    let mut detail = serde_json::to_value(&s)?;
    detail["reports"] = serde_json::to_value(&s.reports)?;
    Ok((worst, expectation, passed, detail))
}

fn exact_or_float<T>(
    mode: Mode,
    exact: impl FnOnce() -> Result<T>,
    float: impl FnOnce() -> Result<T>,
) -> Result<T> {
    match mode {
        Mode::Exact => exact(),
        Mode::Float => float(),
    }
}

/// Evaluates one cell of a named experiment.
pub fn run_cell(experiment: &str, cell: &Cell, settings: &RunSettings) -> Result<CellOutput> {
    let mode = settings.mode;
    let seed = get_u64(cell, "seed", Some(settings.seed))?;
    let trials = || get_u64(cell, "trials", Some(500)).map(|t| t as usize);
    let depth = || get_u64(cell, "depth", Some(8)).map(|d| d as usize);
    let (report, expectation, passed, detail) = match experiment {
        "verify-l1linf" => suite_output(suite_l1linf(mode, trials()?, depth()?, seed)?, Expectation::Holds)?,
        "verify-i2pos" => suite_output(suite_i2pos(mode, trials()?, depth()?, seed)?, Expectation::Holds)?,
        "verify-phi" => suite_output(suite_phi(mode, trials()?, depth()?, seed)?, Expectation::Holds)?,
        "verify-linf" => suite_output(suite_linf(mode, trials()?, depth()?, seed)?, Expectation::Holds)?,
        "verify-inter" => {
            let p = get_f64(cell, "p", Some(2.0))?;
            suite_output(suite_inter(mode, p, trials()?, depth()?, seed)?, Expectation::None)?
        }
        "verify-new23" => {
            let p = get_f64(cell, "p", Some(2.0))?;
            let e = if p <= 2.0 { Expectation::Holds } else { Expectation::None };
            suite_output(suite_new23(mode, p, trials()?, depth()?, seed)?, e)?
        }
        "verify-gest" => {
            let p = get_u64(cell, "p", Some(2))?;
            suite_output(suite_gest(mode, p as u32, trials()?, depth()?, seed)?, Expectation::Holds)?
        }
        "cex-p-less-2" => {
            let k = get_u64(cell, "k", None)? as u32;
            let p = get_f64(cell, "p", Some(1.5))?;
            let c = gen_cex_p_less_2(k, p)?;
            let ok = c.report.flags["lower_bound_holds"] && c.report.flags["max_ig_le_3"];
            let detail = json!({ "inter": c.extra[0] });
            (c.report, Expectation::Violation, ok, detail)
        }
        "cex-increasing" => {
            let n = get_u64(cell, "N", None)? as usize;
            let p = get_f64(cell, "p", Some(2.0))?;
            let (report, guaranteed) = exact_or_float(
                mode,
                || {
                    let c = gen_cex_increasing::<BigRational>(n, p)?;
                    let closed = halving_closed_form::<BigRational>(n, p)?;
                    Ok((c.report, closed > BigRational::from_u64(n as u64)))
                },
                || {
                    let c = gen_cex_increasing::<f64>(n, p)?;
                    let closed = halving_closed_form::<f64>(n, p)?;
                    Ok((c.report, closed > n as f64 * (1.0 + 1e-9)))
                },
            )?;
            let ok = !guaranteed || (!report.holds && report.ratio_f64().is_some_and(|r| r > 1.0));
            (report, Expectation::Violation, ok, Value::Null)
        }
        "cex-direct" => {
            let n = get_u64(cell, "N", None)? as usize;
            let p = get_f64(cell, "p", Some(2.0))?;
            let (report, guaranteed) = exact_or_float(
                mode,
                || {
                    let c = gen_cex_direct::<BigRational>(n, p)?;
                    // Σ g^p is a lower bound for the left side
                    let low = halving_power_sum::<BigRational>(n, p)?;
                    let rhs = c.report.rhs.as_exact().cloned().unwrap_or_else(|| BigRational::from_u64(0));
                    Ok((c.report, low > rhs))
                },
                || {
                    let c = gen_cex_direct::<f64>(n, p)?;
                    let low = halving_power_sum::<f64>(n, p)?;
                    let rhs = c.report.rhs.to_f64();
                    Ok((c.report, low > rhs * (1.0 + 1e-9)))
                },
            )?;
            let ok = !guaranteed || (!report.holds && report.ratio_f64().is_some_and(|r| r > 1.0));
            (report, Expectation::Violation, ok, Value::Null)
        }
        "cex-new23" => {
            let n = get_u64(cell, "N", None)? as usize;
            let p = get_f64(cell, "p", Some(4.0))?;
            let path = get_bool(cell, "path")?;
            let c = exact_or_float(
                mode,
                || gen_cex_new23::<BigRational>(n, p, path),
                || gen_cex_new23::<f64>(n, p, path),
            )?;
            let report = c.variants[0].report.clone();
            (report, Expectation::None, true, serde_json::to_value(&c)?)
        }
        "cex-search-new23" => {
            let p = get_f64(cell, "p", Some(4.0))?;
            let d = get_u64(cell, "depth", Some(10))? as usize;
            let budget = get_u64(cell, "budget", Some(10_000))?;
            let out = search_new23(p, d, budget, seed)?;
            let (e, ok) = if p <= 2.0 {
                (Expectation::Holds, out.best_ratio <= 1.0 + 1e-9)
            } else {
                (Expectation::None, true)
            };
            (out.report.clone(), e, ok, serde_json::to_value(&out)?)
        }
        "capacity" => {
            let n = get_u64(cell, "n", None)?;
            let tol = get_f64(cell, "tol", Some(settings.tol.unwrap_or(1e-10)))?;
            let max_iters = get_u64(cell, "max_iters", Some(200_000))?;
            let symmetric = !get_bool(cell, "no_symmetry")?;
            let inst = build_instance(n)?;
            let eq = solve_instance(&inst, tol, max_iters, symmetric)?;
            let g = check_lemma_g(&inst);
            let report = LemmaReport::compare("capacity_kkt", eq.kkt_max_violation, tol)
                .param_int("n", n)
                .param_f64("cap", eq.cap)
                .param_f64("energy", eq.energy)
                .param_int("iterations", eq.iterations)
                .param_value("delta", inst.delta.to_value())
                .param_value("lambda", inst.lambda.to_value())
                .flag("converged", eq.converged)
                .flag("symmetry", symmetric);
            let ok = eq.converged;
            (report, Expectation::Holds, ok, json!({ "equilibrium": eq, "lemma_g": g }))
        }
        "capacity-oracle" => {
            let n = get_u64(cell, "n", None)?;
            let bits = get_u64(cell, "max_bits", Some(3))? as usize;
            let tol = get_f64(cell, "tol", Some(settings.tol.unwrap_or(1e-12)))?;
            let max_iters = get_u64(cell, "max_iters", Some(1_000_000))?;
            let inst = build_instance(n)?;
            let family = oracle_family(&inst, bits);
            let exact = capacity_bruteforce(&family)?;
            let eq = capacity_qp(&family, None, tol, max_iters)?;
            let ex = exact.to_f64();
            let report = LemmaReport::compare("capacity_oracle", (eq.cap - ex).abs(), ORACLE_REL_TOL * ex)
                .param_int("n", n)
                .param_value("cap_exact", ScalarValue::Exact(exact))
                .param_f64("cap_qp", eq.cap)
                .param_int("members", family.len() as u64)
                .flag("converged", eq.converged);
            let ok = report.holds && eq.converged;
            let family: Vec<String> = family.iter().map(|n| n.to_string()).collect();
            (report, Expectation::Holds, ok, json!({ "family": family, "equilibrium": eq }))
        }
        "report-d2" => {
            let ns = get_u64_list(cell, "n", &[16, 256])?;
            let tol = get_f64(cell, "tol", Some(settings.tol.unwrap_or(1e-10)))?;
            let max_iters = get_u64(cell, "max_iters", Some(200_000))?;
            let rows = d2_table(&ns, tol, max_iters)?;
            let caps: Vec<f64> = rows.iter().map(|r| r.cap).collect();
            let hi = caps.iter().cloned().fold(0.0, f64::max);
            let lo = caps.iter().cloned().fold(f64::INFINITY, f64::min);
            let report = LemmaReport::compare("d2_cap_spread", hi, 2.0 * lo)
                .param_f64("cap_max", hi)
                .param_f64("cap_min", lo);
            (report, Expectation::None, true, json!({ "rows": rows }))
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown experiment {other:?}; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    Ok(CellOutput {
        experiment: experiment.to_string(),
        cell: cell.clone(),
        report,
        expectation,
        passed,
        detail,
        runtime_ms: None,
    })
}

/// Runs every cell of `cfg`, writes `<experiment>_<i>.json` per cell and
/// `<experiment>.csv`, and returns the cell outputs in grid order.
///
/// On a failing cell the error names the cell.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<CellOutput>> {
    cfg.validate()?;
    let settings = RunSettings {
        mode: cfg.mode,
        seed: cfg.seed,
        tol: cfg.tol,
    };
    let cells = cfg.cells();
    let outputs = cells
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let mut out = run_cell(&cfg.experiment, c, &settings).map_err(|e| with_cell(e, c))?;
            if cfg.record_runtime {
                out.runtime_ms = Some(start.elapsed().as_millis() as u64);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.out)?;
    for (i, out) in outputs.iter().enumerate() {
        let path = cfg.out.join(format!("{}_{i}.json", cfg.experiment));
        fs::write(path, serde_json::to_string_pretty(out)? + "\n")?;
    }
    write_csv(&cfg.out.join(format!("{}.csv", cfg.experiment)), &outputs)?;
    Ok(outputs)
}

fn with_cell(e: Error, cell: &Cell) -> Error {
    let c = serde_json::to_string(cell).unwrap_or_default();
    match e {
        Error::Resource { what, needed, limit } => Error::Resource {
            what: format!("{what} in cell {c}"),
            needed,
            limit,
        },
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{m} in cell {c}")),
        other => other,
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row per cell: cell parameters, report parameters, then
/// `lhs, rhs, ratio, holds`.
pub fn write_csv(path: &Path, outputs: &[CellOutput]) -> Result<()> {
    let mut keys: BTreeSet<String> = BTreeSet::new();
    for o in outputs {
        keys.extend(o.cell.keys().cloned());
        keys.extend(o.report.params.keys().cloned());
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = keys.iter().cloned().collect();
    header.extend(["lhs", "rhs", "ratio", "holds"].map(String::from));
    w.write_record(&header)?;
    for o in outputs {
        let mut row: Vec<String> = keys
            .iter()
            .map(|k| match (o.cell.get(k), o.report.params.get(k)) {
                (Some(v), _) => value_text(v),
                (None, Some(p)) => p.to_string(),
                (None, None) => String::new(),
            })
            .collect();
        row.push(o.report.lhs.to_string());
        row.push(o.report.rhs.to_string());
        row.push(o.report.ratio.as_ref().map(|r| r.to_string()).unwrap_or_default());
        row.push(o.report.holds.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(grid: serde_json::Value) -> ExperimentConfig {
        serde_json::from_value(json!({
            "experiment": "cex-increasing",
            "grid": grid,
            "out": "unused",
        }))
        .unwrap()
    }

    #[test]
    fn grid_product_order() {
        let c = cfg(json!({"N": [2, 3], "p": [2, 3]}));
        let cells = c.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1]["N"], json!(2));
        assert_eq!(cells[1]["p"], json!(3));
    }

    #[test]
    fn empty_grid_axis_is_rejected() {
        assert!(cfg(json!({"N": []})).validate().is_err());
    }

    #[test]
    fn increasing_cell_passes_at_n_twenty() {
        let s = RunSettings {
            mode: Mode::Exact,
            seed: 0,
            tol: None,
        };
        let cell: Cell = [("N".to_string(), json!(20)), ("p".to_string(), json!(2))].into();
        let out = run_cell("cex-increasing", &cell, &s).unwrap();
        assert!(out.passed && !out.report.holds);
        assert_eq!(out.report.rhs, ScalarValue::parse("20").unwrap());
    }
}
