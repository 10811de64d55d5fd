//! Validation of parsed arguments into a job, and dispatch.

use std::fmt::Write as _;

use iterint::coefficients::{fmt_f64, CoeffOptions};
use iterint::expansion::{sample_batch, write_samples_csv};
use iterint::oracle::coupled_error_sweep;
use iterint::remainder::{error_curve, remainder_grid, write_error_csv};
use iterint::{
    trace_partial_sum, BasisKind, BasisSystem, CoeffMatrix, ExperimentConfig, Interval, NoisePair,
    WeightFunction,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, Format, Pair, Problem};

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("invalid --{field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Numerical(iterint::Error),
    #[error("discretization bias flagged: {0}")]
    Bias(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl JobError {
    pub fn exit_code(&self) -> u8 {
        match self {
            JobError::Config { .. } => 1,
            JobError::Numerical(_) | JobError::Bias(_) => 2,
            JobError::Io(_) => 1,
        }
    }
}

fn config_err(field: &'static str, reason: impl ToString) -> JobError {
    JobError::Config {
        field,
        reason: reason.to_string(),
    }
}

fn numerical(e: iterint::Error) -> JobError {
    if e.is_numerical() {
        JobError::Numerical(e)
    } else {
        config_err("arguments", e)
    }
}

/// A validated problem: interval, basis and weights.
#[derive(Debug, Clone)]
pub struct Setup {
    pub basis: BasisSystem,
    pub w1: WeightFunction,
    pub w2: WeightFunction,
    pub tol: f64,
}

impl Setup {
    fn from_args(p: &Problem) -> Result<Self, JobError> {
        let kind: BasisKind = p.basis.parse().map_err(|e| config_err("basis", e))?;
        let iv = Interval::new(p.t0, p.t1).map_err(|e| config_err("t0/--t1", e))?;
        let w1: WeightFunction = p.w1.parse().map_err(|e| config_err("w1", e))?;
        let w2: WeightFunction = p.w2.parse().map_err(|e| config_err("w2", e))?;
        if !(p.tol.is_finite() && p.tol > 0.0) {
            return Err(config_err("tol", "must be a positive number"));
        }
        Ok(Self {
            basis: BasisSystem::new(kind, iv),
            w1,
            w2,
            tol: p.tol,
        })
    }

    fn matrix(&self, p1: usize, p2: usize) -> Result<CoeffMatrix, JobError> {
        let opts = CoeffOptions {
            tol: self.tol,
            ..Default::default()
        };
        CoeffMatrix::build(&self.w1, &self.w2, &self.basis, p1, p2, &opts).map_err(numerical)
    }

    fn echo(&self) -> Value {
        let iv = self.basis.interval();
        json!({
            "t0": iv.t0(),
            "t1": iv.t1(),
            "basis": self.basis.kind(),
            "basis_convention": self.basis.kind().convention(),
            "w1": self.w1.descriptor(),
            "w2": self.w2.descriptor(),
            "tol": self.tol,
        })
    }
}

fn pair_from_args(p: &Pair) -> Result<NoisePair, JobError> {
    let m = p.m.unwrap_or_else(|| p.i1.max(p.i2).max(1));
    NoisePair::new(p.i1, p.i2, m).map_err(|e| config_err("i1/--i2/--m", e))
}

/// Result of a job: the artifact in both encodings plus the config echo.
pub struct Artifact {
    pub csv: String,
    pub json: Value,
    pub config: Value,
    /// Set when the job produced output but must exit with a failure.
    pub deferred_error: Option<JobError>,
}

fn to_csv<F>(f: F) -> Result<String, JobError>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv writers emit UTF-8"))
}

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub fn run(
    command: &Command,
    format: Format,
    threads: Option<usize>,
) -> Result<Artifact, JobError> {
    let mut config = json!({ "command": command.name(), "format": format, "threads": threads });
    let mut merge = |v: Value| {
        if let (Value::Object(dst), Value::Object(src)) = (&mut config, v) {
            dst.extend(src);
        }
    };
    let mut deferred_error = None;
    let (csv, json) = match command {
        Command::Coeffs { problem, trunc } => {
            let setup = Setup::from_args(problem)?;
            merge(setup.echo());
            merge(json!({ "p1": trunc.p1, "p2": trunc.p2 }));
            let mat = setup.matrix(trunc.p1, trunc.p2)?;
            (to_csv(|w| mat.write_csv(w))?, value(&mat.table()))
        }
        Command::Trace { problem, p } => {
            let setup = Setup::from_args(problem)?;
            merge(setup.echo());
            merge(json!({ "p": p }));
            let mat = setup.matrix(*p, *p)?;
            let target = 0.5 * mat.weight_product();
            let mut csv = String::from("p,partial_sum,target,gap\n");
            let mut rows = Vec::new();
            for q in 0..=*p {
                let s = trace_partial_sum(&mat, q).map_err(numerical)?;
                let gap = target - s;
                writeln!(
                    csv,
                    "{q},{},{},{}",
                    fmt_f64(s),
                    fmt_f64(target),
                    fmt_f64(gap)
                )
                .unwrap();
                rows.push(json!({ "p": q, "partial_sum": s, "target": target, "gap": gap }));
            }
            (csv, Value::Array(rows))
        }
        Command::ErrorCurve {
            problem,
            trunc,
            pair,
            square,
        } => {
            let setup = Setup::from_args(problem)?;
            let pair = pair_from_args(pair)?;
            merge(setup.echo());
            merge(json!({ "p1": trunc.p1, "p2": trunc.p2, "pair": pair, "square": square }));
            let mat = setup.matrix(trunc.p1, trunc.p2)?;
            let truncs: Vec<(usize, usize)> = if *square {
                (0..=trunc.p1.min(trunc.p2)).map(|p| (p, p)).collect()
            } else {
                (0..=trunc.p1)
                    .flat_map(|a| (0..=trunc.p2).map(move |b| (a, b)))
                    .collect()
            };
            let reports = error_curve(&mat, pair, &truncs).map_err(numerical)?;
            (to_csv(|w| write_error_csv(&reports, w))?, value(&reports))
        }
        Command::Sample {
            problem,
            trunc,
            pair,
            paths,
            seed,
        } => {
            let setup = Setup::from_args(problem)?;
            let pair = pair_from_args(pair)?;
            merge(setup.echo());
            merge(
                json!({ "p1": trunc.p1, "p2": trunc.p2, "pair": pair, "paths": paths, "seed": seed }),
            );
            let mat = setup.matrix(trunc.p1, trunc.p2)?;
            let samples = sample_batch(&mat, pair, *paths, *seed);
            (to_csv(|w| write_samples_csv(&samples, w))?, value(&samples))
        }
        Command::McValidate {
            problem,
            trunc,
            pair,
            paths,
            grid,
            seed,
            sweep,
        } => {
            let setup = Setup::from_args(problem)?;
            let pair = pair_from_args(pair)?;
            if *grid < 4 || !grid.is_power_of_two() {
                return Err(config_err(
                    "grid",
                    format!("{grid} is not a power of two >= 4"),
                ));
            }
            if *paths < 2 {
                return Err(config_err("paths", "need at least 2 paths"));
            }
            let truncs: Vec<(usize, usize)> = match sweep {
                Some(ps) if ps.is_empty() => return Err(config_err("sweep", "empty list")),
                Some(ps) => ps.iter().map(|&p| (p, p)).collect(),
                None => vec![(trunc.p1, trunc.p2)],
            };
            merge(setup.echo());
            merge(json!({
                "p1": trunc.p1, "p2": trunc.p2, "sweep": sweep, "pair": pair,
                "paths": paths, "grid": grid, "seed": seed,
            }));
            let cfg = ExperimentConfig {
                psi1: setup.w1.clone(),
                psi2: setup.w2.clone(),
                basis: setup.basis,
                p1: trunc.p1,
                p2: trunc.p2,
                pair,
                n: *grid,
                paths: *paths,
                seed: *seed,
            };
            let reports = coupled_error_sweep(&cfg, &truncs).map_err(numerical)?;
            if let Some(r) = reports.iter().find(|r| r.bias_check.warning) {
                deferred_error = Some(JobError::Bias(format!(
                    "p1={}, p2={}: shift {:e} > {:e}",
                    r.p1, r.p2, r.bias_check.shift, r.bias_check.threshold
                )));
            }
            let mut csv = String::from(
                "p1,p2,mean_sq_diff,stderr,theory,theory_kind,n_half,mean_sq_diff_half,shift,bias_warning\n",
            );
            for r in &reports {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.p1,
                    r.p2,
                    fmt_f64(r.mean_sq_diff),
                    fmt_f64(r.stderr),
                    fmt_f64(r.theory),
                    value(&r.theory_kind).as_str().unwrap_or_default(),
                    r.bias_check.n_half,
                    fmt_f64(r.bias_check.mean_sq_diff_half),
                    fmt_f64(r.bias_check.shift),
                    r.bias_check.warning
                )
                .unwrap();
            }
            let json = if sweep.is_none() {
                value(&reports[0])
            } else {
                value(&reports)
            };
            (csv, json)
        }
        Command::RemainderGrid {
            problem,
            trunc,
            grid,
        } => {
            let setup = Setup::from_args(problem)?;
            if *grid == 0 {
                return Err(config_err("grid", "must be positive"));
            }
            merge(setup.echo());
            merge(json!({ "p1": trunc.p1, "p2": trunc.p2, "grid": grid }));
            let mat = setup.matrix(trunc.p1, trunc.p2)?;
            let pts = remainder_grid(&mat, *grid).map_err(numerical)?;
            let mut csv = String::from("x1,x2,remainder\n");
            for (x1, x2, r) in &pts {
                writeln!(csv, "{},{},{}", fmt_f64(*x1), fmt_f64(*x2), fmt_f64(*r)).unwrap();
            }
            let rows: Vec<Value> = pts.iter().map(|(a, b, r)| json!([a, b, r])).collect();
            (csv, Value::Array(rows))
        }
    };
    Ok(Artifact {
        csv,
        json,
        config,
        deferred_error,
    })
}
