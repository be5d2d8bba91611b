use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cxlab_core::capacity::{build_instance, d2_table};
use cxlab_core::experiment::{run, run_cell, Cell, CellOutput, ExperimentConfig, RunSettings};
use cxlab_core::{Error, Mode};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_OTHER: u8 = 4;

#[derive(Parser)]
#[command(name = "cxlab", version, about = "Carleson embedding verification lab on dyadic trees and bi-trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random-instance suites for the proven inequalities.
    Verify {
        #[arg(value_enum)]
        lemma: Lemma,
        #[command(flatten)]
        common: SuiteArgs,
        /// Exponent (inter, new23, gest).
        #[arg(long)]
        p: Option<f64>,
    },
    /// Counterexample generators.
    Cex {
        #[command(subcommand)]
        which: CexCommand,
    },
    /// Equilibrium measure of the bi-tree instance of parameter n.
    Capacity {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: u64,
        /// Solve the full QP instead of the symmetry-reduced one.
        #[arg(long)]
        no_symmetry: bool,
        /// Compare against exact subset enumeration on a sub-family.
        #[arg(long)]
        oracle: bool,
        /// Bits per coordinate for the oracle sub-family.
        #[arg(long, default_value_t = 3)]
        max_bits: u64,
    },
    /// Tables.
    Report {
        #[command(subcommand)]
        which: ReportCommand,
    },
    /// Run a JSON experiment config over its parameter grid.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 500)]
    trials: u64,
    #[arg(long, default_value_t = 8)]
    depth: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Print every trial report instead of the summary only.
    #[arg(long)]
    full: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    L1linf,
    I2pos,
    Phi,
    Inter,
    Linf,
    New23,
    Gest,
}

#[derive(Subcommand)]
enum CexCommand {
    /// Mass on the right spine with a comb of long left branches.
    #[command(name = "p-less-2")]
    PLess2 {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 1.5)]
        p: f64,
    },
    /// The halving function on the all-zero path.
    Increasing {
        #[arg(long = "N", visible_alias = "levels")]
        n: u64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value = "exact")]
        mode: Mode,
    },
    /// The halving function with a unit mass at every node.
    Direct {
        #[arg(long = "N", visible_alias = "levels")]
        n: u64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value = "exact")]
        mode: Mode,
    },
    /// Step-by-step audit of the exponent-above-two chain.
    New23 {
        #[arg(long = "N", visible_alias = "levels")]
        n: u64,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value = "exact")]
        mode: Mode,
        /// Include the per-depth table along the argmax path.
        #[arg(long)]
        path: bool,
    },
    /// Random search for the largest ratio.
    SearchNew23 {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 10)]
        depth: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Capacity, band and inclusion diagnostics across n.
    D2 {
        #[arg(long = "n", default_values_t = [16u64, 256])]
        n: Vec<u64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: u64,
        /// Also write one CSV row per n.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn cell(pairs: &[(&str, Value)]) -> Cell {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Parse(_) | Error::Domain { .. } | Error::NegativeValue { .. } => EXIT_USAGE,
        Error::Resource { .. } => EXIT_RESOURCE,
        _ => EXIT_OTHER,
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn single(experiment: &str, c: Cell, mode: Mode, seed: u64, full: bool) -> Result<bool, Error> {
    let settings = RunSettings { mode, seed, tol: None };
    let mut out: CellOutput = run_cell(experiment, &c, &settings)?;
    if !full {
        if let Some(d) = out.detail.as_object_mut() {
            d.remove("reports");
        }
    }
    print_json(&out)?;
    Ok(out.passed)
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_field).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

fn write_d2_csv(path: &std::path::Path, rows: &Value) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    let rows = rows.as_array().map(Vec::as_slice).unwrap_or_default();
    if let Some(Value::Object(first)) = rows.first() {
        w.write_record(first.keys())?;
    }
    for r in rows {
        if let Value::Object(m) = r {
            w.write_record(m.values().map(csv_field))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Verify { lemma, common, p } => {
            let name = match lemma {
                Lemma::L1linf => "verify-l1linf",
                Lemma::I2pos => "verify-i2pos",
                Lemma::Phi => "verify-phi",
                Lemma::Inter => "verify-inter",
                Lemma::Linf => "verify-linf",
                Lemma::New23 => "verify-new23",
                Lemma::Gest => "verify-gest",
            };
            let mut c = cell(&[("trials", json!(common.trials)), ("depth", json!(common.depth))]);
            if let Some(p) = p {
                let v = if matches!(lemma, Lemma::Gest) {
                    if p.fract() != 0.0 || p < 1.0 {
                        return Err(Error::InvalidArgument(format!("gest needs an integer p >= 1, got {p}")));
                    }
                    json!(p as u64)
                } else {
                    json!(p)
                };
                c.insert("p".into(), v);
            }
            single(name, c, common.mode, common.seed, common.full)
        }
        Command::Cex { which } => match which {
            CexCommand::PLess2 { k, p } => single("cex-p-less-2", cell(&[("k", json!(k)), ("p", json!(p))]), Mode::Float, 0, false),
            CexCommand::Increasing { n, p, mode } => {
                single("cex-increasing", cell(&[("N", json!(n)), ("p", json!(p))]), mode, 0, false)
            }
            CexCommand::Direct { n, p, mode } => single("cex-direct", cell(&[("N", json!(n)), ("p", json!(p))]), mode, 0, false),
            CexCommand::New23 { n, p, mode, path } => single(
                "cex-new23",
                cell(&[("N", json!(n)), ("p", json!(p)), ("path", json!(path))]),
                mode,
                0,
                false,
            ),
            CexCommand::SearchNew23 { p, depth, budget, seed } => single(
                "cex-search-new23",
                cell(&[("p", json!(p)), ("depth", json!(depth)), ("budget", json!(budget))]),
                Mode::Float,
                seed,
                false,
            ),
        },
        Command::Capacity { n, tol, max_iters, no_symmetry, oracle, max_bits } => {
            build_instance(n)?;
            let mut c = cell(&[("n", json!(n)), ("max_iters", json!(max_iters))]);
            let name = if oracle {
                c.insert("max_bits".into(), json!(max_bits));
                "capacity-oracle"
            } else {
                c.insert("tol".into(), json!(tol));
                c.insert("no_symmetry".into(), json!(no_symmetry));
                "capacity"
            };
            single(name, c, Mode::Float, 0, false)
        }
        Command::Report { which: ReportCommand::D2 { n, tol, max_iters, csv } } => {
            let rows = d2_table(&n, tol, max_iters)?;
            if let Some(path) = csv {
                write_d2_csv(&path, &serde_json::to_value(&rows)?)?;
            }
            print_json(&json!({ "experiment": "report-d2", "rows": rows }))?;
            Ok(true)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let outs = run(&cfg)?;
            let failed: Vec<Value> = outs
                .iter()
                .filter(|o| !o.passed)
                .map(|o| json!({ "cell": o.cell, "ratio": o.report.ratio, "holds": o.report.holds }))
                .collect();
            print_json(&json!({
                "experiment": cfg.experiment,
                "cells": outs.len(),
                "failed": failed,
                "out": cfg.out,
            }))?;
            Ok(failed.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
