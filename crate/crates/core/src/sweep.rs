//! Batch evaluation of `P` over a (δ, η) grid by any subset of methods.

use crate::ddp::{predict_probability, Method, QuadratureConfig};
use crate::error::{Error, Result};
use crate::model::AdiabaticParams;
use crate::tdse::{transition_probability, Frame, DEFAULT_TAU_MAX, DEFAULT_TOL};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    OdeDiabatic,
    OdeAdiabatic,
    DdpClosed,
    DdpQuadrature,
}

impl SweepMethod {
    pub const ALL: [SweepMethod; 4] = [
        SweepMethod::OdeDiabatic,
        SweepMethod::OdeAdiabatic,
        SweepMethod::DdpClosed,
        SweepMethod::DdpQuadrature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMethod::OdeDiabatic => "ode_diabatic",
            SweepMethod::OdeAdiabatic => "ode_adiabatic",
            SweepMethod::DdpClosed => "ddp_closed",
            SweepMethod::DdpQuadrature => "ddp_quadrature",
        }
    }

    pub fn is_ode(self) -> bool {
        matches!(self, SweepMethod::OdeDiabatic | SweepMethod::OdeAdiabatic)
    }
}

impl FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub delta_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub tau_max: f64,
    pub tol: f64,
    pub methods: Vec<SweepMethod>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            delta_values: vec![0.35, 0.4, 0.45, 0.5, 0.55, 0.6],
            eta_values: vec![0.0, 0.25, 0.5, 0.75],
            tau_max: DEFAULT_TAU_MAX,
            tol: DEFAULT_TOL,
            methods: SweepMethod::ALL.to_vec(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta_values.is_empty() || self.eta_values.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidInput("sweep lists must be non-empty".into()));
        }
        if let Some(d) = self
            .delta_values
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {d}"
            )));
        }
        if let Some(e) = self.eta_values.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidInput(format!(
                "eta must lie in [0, 1], got {e}"
            )));
        }
        if !(1e-13..=1e-4).contains(&self.tol) {
            return Err(Error::InvalidInput(format!(
                "tol {:e} outside [1e-13, 1e-4]",
                self.tol
            )));
        }
        if !(self.tau_max >= 50.0 && self.tau_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tau_max must be at least 50, got {}",
                self.tau_max
            )));
        }
        Ok(())
    }

    /// Requested methods in canonical column order, deduplicated.
    pub fn columns(&self) -> Vec<SweepMethod> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }

    fn has_ode(&self) -> bool {
        self.methods.iter().any(|m| m.is_ode())
    }

    /// Rows ordered by δ then η, as listed.
    fn cells(&self) -> Vec<(f64, f64)> {
        self.delta_values
            .iter()
            .flat_map(|&d| self.eta_values.iter().map(move |&e| (d, e)))
            .collect()
    }
}

/// Optional settings from a configuration file or flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOverrides {
    pub delta_values: Option<Vec<f64>>,
    pub eta_values: Option<Vec<f64>>,
    pub tau_max: Option<f64>,
    pub tol: Option<f64>,
    pub methods: Option<Vec<SweepMethod>>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

impl SweepOverrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut o = SweepOverrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("config line {}: expected key = value", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| Error::InvalidInput(format!("config line {}: {e}", n + 1));
            match key {
                "delta" | "delta_values" => o.delta_values = Some(parse_list(value).map_err(bad)?),
                "eta" | "eta_values" => o.eta_values = Some(parse_list(value).map_err(bad)?),
                "tau_max" => o.tau_max = Some(parse_num(value).map_err(bad)?),
                "tol" => o.tol = Some(parse_num(value).map_err(bad)?),
                "methods" => {
                    o.methods = Some(
                        value
                            .split(',')
                            .map(SweepMethod::from_str)
                            .collect::<Result<_>>()
                            .map_err(|e| bad(e.to_string()))?,
                    )
                }
                "workers" => {
                    o.workers = Some(
                        value
                            .parse()
                            .map_err(|_| bad(format!("bad workers '{value}'")))?,
                    )
                }
                "out" => o.out = Some(value.to_string()),
                _ => return Err(bad(format!("unknown key '{key}'"))),
            }
        }
        Ok(o)
    }

    /// `self` wins over `lower` field by field.
    pub fn over(self, lower: SweepOverrides) -> SweepOverrides {
        SweepOverrides {
            delta_values: self.delta_values.or(lower.delta_values),
            eta_values: self.eta_values.or(lower.eta_values),
            tau_max: self.tau_max.or(lower.tau_max),
            tol: self.tol.or(lower.tol),
            methods: self.methods.or(lower.methods),
            workers: self.workers.or(lower.workers),
            out: self.out.or(lower.out),
        }
    }

    pub fn apply(&self, spec: SweepSpec) -> SweepSpec {
        SweepSpec {
            delta_values: self.delta_values.clone().unwrap_or(spec.delta_values),
            eta_values: self.eta_values.clone().unwrap_or(spec.eta_values),
            tau_max: self.tau_max.unwrap_or(spec.tau_max),
            tol: self.tol.unwrap_or(spec.tol),
            methods: self.methods.clone().unwrap_or(spec.methods),
        }
    }
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse().map_err(|_| format!("bad number '{s}'"))
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_num).collect()
}

/// One (δ, η) row; `values` follow [`SweepSpec::columns`], `NaN` on failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub delta: f64,
    pub eta: f64,
    pub values: Vec<f64>,
    /// From the diabatic run when requested, else the adiabatic one.
    pub norm_drift: Option<f64>,
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub delta: f64,
    pub eta: f64,
    pub method: SweepMethod,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub spec: SweepSpec,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
    /// Cells whose ODE value is below `10³·tol`.
    pub resolution_limited: Vec<(f64, f64, SweepMethod)>,
}

enum TaskResult {
    Ode {
        p: f64,
        drift: f64,
        steps: usize,
        limited: bool,
    },
    Ddp(f64),
}

fn run_task(spec: &SweepSpec, delta: f64, eta: f64, m: SweepMethod) -> Result<TaskResult> {
    let p = AdiabaticParams::new(delta, eta)?;
    let ode = |frame| {
        transition_probability(&p, spec.tau_max, spec.tol, frame).map(|r| TaskResult::Ode {
            p: r.p,
            drift: r.norm_drift,
            steps: r.n_steps,
            limited: r.resolution_limited,
        })
    };
    let q = QuadratureConfig::default();
    match m {
        SweepMethod::OdeDiabatic => ode(Frame::Diabatic),
        SweepMethod::OdeAdiabatic => ode(Frame::Adiabatic),
        SweepMethod::DdpClosed => Ok(TaskResult::Ddp(
            predict_probability(&p, Method::ClosedForm, &q)?.p_pred,
        )),
        SweepMethod::DdpQuadrature => Ok(TaskResult::Ddp(
            predict_probability(&p, Method::Quadrature, &q)?.p_pred,
        )),
    }
}

/// Runs every (δ, η, method) task on a pool of `workers` threads. The
/// outcome does not depend on `workers`.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    let columns = spec.columns();
    let cells = spec.cells();
    let tasks: Vec<(usize, SweepMethod)> = (0..cells.len())
        .flat_map(|c| columns.iter().map(move |&m| (c, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let results: Vec<Result<TaskResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, m)| run_task(spec, cells[c].0, cells[c].1, m))
            .collect()
    });

    let mut rows: Vec<ResultRow> = cells
        .iter()
        .map(|&(delta, eta)| ResultRow {
            delta,
            eta,
            values: vec![f64::NAN; columns.len()],
            norm_drift: None,
            n_steps: None,
        })
        .collect();
    let mut failures = Vec::new();
    let mut limited = Vec::new();
    let diagnostics_from = if columns.contains(&SweepMethod::OdeDiabatic) {
        SweepMethod::OdeDiabatic
    } else {
        SweepMethod::OdeAdiabatic
    };
    for (&(c, m), r) in tasks.iter().zip(results) {
        let col = columns.iter().position(|&x| x == m).expect("column");
        let row = &mut rows[c];
        match r {
            Ok(TaskResult::Ode {
                p,
                drift,
                steps,
                limited: lim,
            }) => {
                row.values[col] = p;
                if lim {
                    limited.push((row.delta, row.eta, m));
                }
                if m == diagnostics_from {
                    row.norm_drift = Some(drift);
                    row.n_steps = Some(steps);
                }
            }
            Ok(TaskResult::Ddp(p)) => row.values[col] = p,
            Err(e) => failures.push(CellFailure {
                delta: row.delta,
                eta: row.eta,
                method: m,
                error: e.name().to_string(),
            }),
        }
    }
    Ok(SweepOutcome {
        spec: spec.clone(),
        rows,
        failures,
        resolution_limited: limited,
    })
}

impl SweepOutcome {
    /// Header `delta,eta,P_<method>…[,norm_drift,n_steps]`; numbers in
    /// shortest round-trip form, `NaN` for missing values.
    pub fn to_csv(&self) -> String {
        let columns = self.spec.columns();
        let ode = self.spec.has_ode();
        let mut out = String::from("delta,eta");
        for m in &columns {
            let _ = write!(out, ",P_{}", m.name());
        }
        if ode {
            out.push_str(",norm_drift,n_steps");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.delta, r.eta);
            for v in &r.values {
                let _ = write!(out, ",{v}");
            }
            if ode {
                let _ = write!(out, ",{}", r.norm_drift.unwrap_or(f64::NAN));
                match r.n_steps {
                    Some(n) => {
                        let _ = write!(out, ",{n}");
                    }
                    None => out.push_str(",NaN"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Column of one method, in row order.
    pub fn column(&self, m: SweepMethod) -> Option<Vec<f64>> {
        let col = self.spec.columns().iter().position(|&x| x == m)?;
        Some(self.rows.iter().map(|r| r.values[col]).collect())
    }
}
