//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure (error name on stderr),
//! 2 bad flags, 3 sweep finished with failed cells.

use clap::{Args, Parser, Subcommand, ValueEnum};
use lzagp::ddp::{self, Method, QuadratureConfig};
use lzagp::field::{self, GridSpec};
use lzagp::integrability::{self, FlatnessConfig};
use lzagp::sweep::{self, SweepMethod, SweepOverrides, SweepSpec};
use lzagp::tdse::{self, Frame};
use lzagp::verify::{self, VerifyOptions};
use lzagp::{AdiabaticParams, Error};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "lzagp",
    version,
    about = "Landau-Zener transitions with a tunable counterdiabatic term"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Adiabatic parameter δ (comma-separated list for `sweep`)
    #[arg(long, global = true, value_delimiter = ',', value_parser = positive)]
    delta: Option<Vec<f64>>,
    /// Counterdiabatic strength η (comma-separated list for `sweep`)
    #[arg(long, global = true, value_delimiter = ',', value_parser = finite)]
    eta: Option<Vec<f64>>,
    /// Half-length of the propagation interval [default: 200]
    #[arg(long, global = true, value_parser = finite)]
    tau_max: Option<f64>,
    /// Integration tolerance [default: 1e-10]
    #[arg(long, global = true, value_parser = positive)]
    tol: Option<f64>,
    /// Output file (standard output when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
}

impl Common {
    fn tau_max(&self) -> f64 {
        self.tau_max.unwrap_or(tdse::DEFAULT_TAU_MAX)
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(tdse::DEFAULT_TOL)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Schrödinger equation and report P
    Simulate {
        #[arg(long, value_enum, default_value_t = FrameArg::Diabatic)]
        frame: FrameArg,
    },
    /// Predict P from the complex-time phases
    Predict {
        #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
        method: MethodArg,
    },
    /// Evaluate P over a (δ, η) grid and write CSV
    Sweep {
        /// Comma-separated subset of ode_diabatic, ode_adiabatic, ddp_closed, ddp_quadrature
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// `key = value` configuration file (flags take precedence)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Tabulate Δ(τ) on a grid of the upper half-plane (CSV)
    DeltaField {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Level lines of Δ(τ) (SVG)
    LevelLines {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated levels
        #[arg(long, value_delimiter = ',', required = true, value_parser = finite)]
        levels: Vec<f64>,
    },
    /// Branch points of the eigenvalues and the AGP pole (JSON)
    BranchPoints,
    /// Holonomy of the AGP around the pole at i (JSON)
    Holonomy {
        #[arg(long, default_value_t = 0.5, value_parser = finite)]
        radius: f64,
    },
    /// Flatness residuals of an integrable family (JSON)
    Flatness {
        #[arg(long, value_enum, default_value_t = ModelArg::Gaudin)]
        model: ModelArg,
        #[arg(long, default_value_t = 2)]
        spins: usize,
        /// Field strength
        #[arg(long = "B", default_value_t = 1.0, value_parser = finite)]
        b: f64,
        /// Comma-separated parameters ε
        #[arg(long, value_delimiter = ',', value_parser = finite)]
        eps: Option<Vec<f64>>,
        /// Adds this multiple of σˣ on spin 1 to the second member
        #[arg(long, value_parser = finite)]
        perturb: Option<f64>,
        #[arg(long, default_value_t = integrability::DEFAULT_FD_STEP, value_parser = positive)]
        fd_step: f64,
        #[arg(long, default_value_t = integrability::DEFAULT_NESTED_STEP, value_parser = positive)]
        nested_step: f64,
    },
    /// Run the acceptance criteria and print a table
    Verify {
        /// Reduced grids (finishes in well under 30 s)
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = GridSpec::default().re_range.0, value_parser = finite)]
    re_min: f64,
    #[arg(long, default_value_t = GridSpec::default().re_range.1, value_parser = finite)]
    re_max: f64,
    #[arg(long, default_value_t = GridSpec::default().im_range.0, value_parser = finite)]
    im_min: f64,
    #[arg(long, default_value_t = GridSpec::default().im_range.1, value_parser = finite)]
    im_max: f64,
    #[arg(long, default_value_t = GridSpec::default().n_re)]
    n_re: usize,
    #[arg(long, default_value_t = GridSpec::default().n_im)]
    n_im: usize,
    /// Halve the grid spacing (existing nodes are kept)
    #[arg(long)]
    refine: bool,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        let g = GridSpec {
            re_range: (self.re_min, self.re_max),
            im_range: (self.im_min, self.im_max),
            n_re: self.n_re,
            n_im: self.n_im,
        };
        if self.refine {
            g.refined()
        } else {
            g
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FrameArg {
    Diabatic,
    Adiabatic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    ClosedForm,
    Quadrature,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModelArg {
    Gaudin,
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("'{s}' must be positive"))
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Numerical(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => Failure::Usage(m),
            e => Failure::Numerical(e),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn single(v: &Option<Vec<f64>>, name: &str, default: f64) -> Result<f64, Failure> {
    match v.as_deref() {
        None => Ok(default),
        Some([x]) => Ok(*x),
        Some(_) => Err(Failure::Usage(format!(
            "--{name} takes a single value here"
        ))),
    }
}

fn params(c: &Common) -> Result<AdiabaticParams, Failure> {
    let p = AdiabaticParams::new(single(&c.delta, "delta", 0.5)?, single(&c.eta, "eta", 0.0)?)?;
    if p.eta_out_of_range() {
        eprintln!("warning: eta = {} lies outside [0, 1]", p.eta);
    }
    Ok(p)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: &Option<PathBuf>, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    emit(out, &s)
}

fn with_params(mut v: Value, p: &AdiabaticParams) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert("delta".into(), json!(p.delta));
        m.insert("eta".into(), json!(p.eta));
    }
    v
}

fn workers(c: &Common) -> usize {
    c.workers
        .map(|w| w as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let c = &cli.common;
    let threads = workers(c);
    // the field evaluation uses the global pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    match &cli.command {
        Command::Simulate { frame } => {
            let p = params(c)?;
            let frame = match frame {
                FrameArg::Diabatic => Frame::Diabatic,
                FrameArg::Adiabatic => Frame::Adiabatic,
            };
            let r = tdse::transition_probability(&p, c.tau_max(), c.tol(), frame)?;
            emit_json(&c.out, &with_params(json!(r), &p))?;
        }
        Command::Predict { method } => {
            let p = params(c)?;
            let m = match method {
                MethodArg::ClosedForm => Method::ClosedForm,
                MethodArg::Quadrature => Method::Quadrature,
            };
            let r = ddp::predict_probability(&p, m, &QuadratureConfig::default())?;
            emit_json(&c.out, &with_params(json!(r), &p))?;
        }
        Command::Sweep { methods, config } => return sweep_command(c, methods, config, threads),
        Command::DeltaField { grid } => {
            let p = params(c)?;
            let f = field::delta_field(&p, &grid.spec(), &field::default_cuts(&p))?;
            emit(&c.out, &f.to_csv())?;
        }
        Command::LevelLines { grid, levels } => {
            let p = params(c)?;
            let spec = grid.spec();
            let f = field::delta_field(&p, &spec, &field::default_cuts(&p))?;
            emit(
                &c.out,
                &field::to_svg(&spec, &field::level_lines(&f, levels)),
            )?;
        }
        Command::BranchPoints => {
            let p = params(c)?;
            let bp = ddp::branch_points(&p);
            emit_json(&c.out, &with_params(json!(bp), &p))?;
        }
        Command::Holonomy { radius } => {
            let p = params(c)?;
            let u = ddp::holonomy(&p, *radius)?;
            let exact = ddp::holonomy_closed_form(&p);
            let v = json!({
                "radius": radius,
                "numerical": u.to_pairs(),
                "closed_form": exact.to_pairs(),
                "max_error": (u - exact).max_abs(),
            });
            emit_json(&c.out, &with_params(v, &p))?;
        }
        Command::Flatness {
            model: ModelArg::Gaudin,
            spins,
            b,
            eps,
            perturb,
            fd_step,
            nested_step,
        } => {
            let eps = eps
                .clone()
                .unwrap_or_else(|| [0.0, 1.0, 2.5][..*spins.min(&3)].to_vec());
            if eps.len() != *spins {
                return Err(Failure::Usage(format!("--eps needs {spins} values")));
            }
            let mut family = integrability::gaudin_family(*spins, *b)?;
            if let Some(s) = perturb {
                family = family.perturbed(1, integrability::sigma_x(0, *spins) * *s)?;
            }
            let cfg = FlatnessConfig {
                fd_step: *fd_step,
                nested_step: *nested_step,
                ..FlatnessConfig::default()
            };
            let r = integrability::corrected_flatness_residual(&family, &eps, &cfg)?;
            emit_json(&c.out, &json!(r))?;
        }
        Command::Verify { quick } => {
            let o = VerifyOptions {
                quick: *quick,
                tau_max: c.tau_max(),
                tol: c.tol(),
                workers: threads,
            };
            let results = verify::run_all(&o);
            emit(&c.out, &verify::render_table(&results))?;
            let failed = results.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                eprintln!("{failed} of {} criteria failed", results.len());
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_command(
    c: &Common,
    methods: &Option<Vec<String>>,
    config: &Option<PathBuf>,
    threads: usize,
) -> Result<ExitCode, Failure> {
    let from_file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            SweepOverrides::parse_config(&text)?
        }
        None => SweepOverrides::default(),
    };
    let methods = methods
        .as_ref()
        .map(|m| {
            m.iter()
                .map(|s| s.parse::<SweepMethod>())
                .collect::<lzagp::Result<Vec<_>>>()
        })
        .transpose()?;
    let from_flags = SweepOverrides {
        delta_values: c.delta.clone(),
        eta_values: c.eta.clone(),
        tau_max: c.tau_max,
        tol: c.tol,
        methods,
        workers: c.workers.map(|w| w as usize),
        out: c.out.as_ref().map(|p| p.display().to_string()),
    };
    let merged = from_flags.over(from_file);
    let spec = merged.apply(SweepSpec::default());
    let workers = merged.workers.unwrap_or(threads);
    let start = Instant::now();
    let outcome = sweep::run_sweep(&spec, workers)?;
    let elapsed = start.elapsed().as_secs_f64();
    let out = merged.out.map(PathBuf::from);
    emit(&out, &outcome.to_csv())?;
    if let Some(path) = &out {
        let mut meta = path.clone().into_os_string();
        meta.push(".meta.json");
        let meta = PathBuf::from(meta);
        let v = json!({
            "tool": "lzagp",
            "version": env!("CARGO_PKG_VERSION"),
            "spec": spec,
            "workers": workers,
            "wall_seconds": elapsed,
            "failures": outcome.failures,
            "resolution_limited": outcome.resolution_limited,
        });
        let text = serde_json::to_string_pretty(&v).expect("serialisable") + "\n";
        std::fs::write(&meta, text).map_err(io_err(&meta))?;
    }
    if outcome.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &outcome.failures {
            eprintln!(
                "{}: delta={} eta={} method={}",
                f.error,
                f.delta,
                f.eta,
                f.method.name()
            );
        }
        Ok(ExitCode::from(3))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("{}", e.name());
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("IoError: {m}");
            ExitCode::from(1)
        }
    }
}
