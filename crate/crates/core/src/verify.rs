//! The acceptance criteria as reusable runners, shared by the `verify`
//! subcommand and the acceptance test target.

use crate::ddp::{
    dynamical_phase_integral, geometric_phase_integral, holonomy, holonomy_closed_form,
    QuadratureConfig,
};
use crate::error::Result;
use crate::field::{
    default_cuts, delta_field, delta_field_sampled, GridSpec, DEFAULT_STEPS_PER_UNIT,
};
use crate::integrability::{corrected_flatness_residual, gaudin_family, FlatnessConfig};
use crate::linalg::Mat2;
use crate::model::AdiabaticParams;
use crate::sweep::{run_sweep, SweepMethod, SweepOutcome, SweepSpec};
use crate::tdse::{transition_probability, Frame, DEFAULT_TAU_MAX, DEFAULT_TOL};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Reduced grids for a fast smoke run.
    pub quick: bool,
    pub tau_max: f64,
    pub tol: f64,
    pub workers: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            quick: false,
            tau_max: DEFAULT_TAU_MAX,
            tol: DEFAULT_TOL,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub expected: String,
    pub measured: String,
    pub tolerance: String,
    /// Wall-clock budget in seconds.
    pub budget: f64,
    pub seconds: f64,
    pub pass: bool,
}

impl CriterionResult {
    /// `PASS`/`FAIL` line used by the acceptance target.
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: measured {} (expected {}, tolerance {}) in {:.2} s",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.expected,
            self.tolerance,
            self.seconds
        )
    }
}

struct Draft {
    expected: String,
    measured: String,
    tolerance: String,
    pass: bool,
}

fn timed(
    id: u8,
    name: &'static str,
    budget: f64,
    f: impl FnOnce() -> Result<Draft>,
) -> CriterionResult {
    let start = Instant::now();
    let draft = f();
    let seconds = start.elapsed().as_secs_f64();
    match draft {
        Ok(d) => CriterionResult {
            id,
            name,
            expected: d.expected,
            measured: d.measured,
            tolerance: d.tolerance,
            budget,
            seconds,
            pass: d.pass && seconds <= budget,
        },
        Err(e) => CriterionResult {
            id,
            name,
            expected: "-".into(),
            measured: format!("error {}", e.name()),
            tolerance: "-".into(),
            budget,
            seconds,
            pass: false,
        },
    }
}

fn ode(delta: f64, eta: f64, o: &VerifyOptions) -> Result<f64> {
    Ok(transition_probability(
        &AdiabaticParams::new(delta, eta)?,
        o.tau_max,
        o.tol,
        Frame::Diabatic,
    )?
    .p)
}

fn list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.4e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Bare Landau-Zener value `e^{−π/δ}`.
pub fn landau_zener(o: &VerifyOptions) -> CriterionResult {
    timed(1, "Landau-Zener baseline", 5.0, || {
        let mut dev: Vec<f64> = Vec::new();
        for d in [0.35, 0.45, 0.6] {
            dev.push(ode(d, 0.0, o)? / (-PI / d).exp() - 1.0);
        }
        let worst = dev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Draft {
            expected: "P/e^{-pi/delta} = 1".into(),
            measured: format!("deviations [{}]", list(&dev)),
            tolerance: "0.05".into(),
            pass: worst <= 0.05,
        })
    })
}

pub fn counterdiabatic(o: &VerifyOptions) -> CriterionResult {
    timed(2, "counterdiabatic exactness", 5.0, || {
        let mut ps = Vec::new();
        for d in [0.2, 0.5, 1.0] {
            ps.push(ode(d, 1.0, o)?);
        }
        Ok(Draft {
            expected: "P = 0".into(),
            measured: format!("P [{}]", list(&ps)),
            tolerance: "1e-8".into(),
            pass: ps.iter().all(|p| *p <= 1e-8),
        })
    })
}

/// `(P(η)/P(0)) / (cos²(ηπ/2)e^{−2η/3})` at δ = 0.5.
pub fn modified_prefactor(o: &VerifyOptions) -> CriterionResult {
    timed(3, "modified prefactor", 10.0, || {
        let p0 = ode(0.5, 0.0, o)?;
        let mut ratios = Vec::new();
        for eta in [0.25, 0.5, 0.75] {
            let predicted = (eta * FRAC_PI_2).cos().powi(2) * (-2.0 * eta / 3.0).exp();
            ratios.push(ode(0.5, eta, o)? / p0 / predicted);
        }
        let worst = ratios.iter().fold(0.0_f64, |m, r| m.max((r - 1.0).abs()));
        Ok(Draft {
            expected: "ratio 1".into(),
            measured: format!(
                "ratios [{}]",
                ratios
                    .iter()
                    .map(|r| format!("{r:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            tolerance: "0.10".into(),
            pass: worst <= 0.10,
        })
    })
}

/// The (δ, η) grid shared by the dynamics-vs-prediction and
/// frame-equivalence criteria.
pub fn comparison_grid(o: &VerifyOptions) -> SweepSpec {
    let (deltas, etas) = if o.quick {
        (vec![0.35, 0.5, 0.6], vec![0.0, 0.5])
    } else {
        (
            vec![0.35, 0.4, 0.45, 0.5, 0.55, 0.6],
            vec![0.0, 0.25, 0.5, 0.75],
        )
    };
    SweepSpec {
        delta_values: deltas,
        eta_values: etas,
        tau_max: o.tau_max,
        tol: o.tol,
        methods: vec![
            SweepMethod::OdeDiabatic,
            SweepMethod::OdeAdiabatic,
            SweepMethod::DdpClosed,
        ],
    }
}

/// Runs criteria 4 and 9 from one sweep; the sweep time is charged to 4.
pub fn prediction_and_frames(o: &VerifyOptions) -> (CriterionResult, CriterionResult) {
    let start = Instant::now();
    let outcome = run_sweep(&comparison_grid(o), o.workers);
    let seconds = start.elapsed().as_secs_f64();
    let c4 = timed(
        4,
        "dynamics vs closed-form prediction",
        60.0 - seconds,
        || {
            let out = outcome.clone()?;
            let (num, pred) = columns(&out, SweepMethod::OdeDiabatic, SweepMethod::DdpClosed);
            let dev: Vec<f64> = num.iter().zip(&pred).map(|(n, p)| n / p - 1.0).collect();
            let worst = dev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let at = dev.iter().position(|v| v.abs() == worst).unwrap_or(0);
            Ok(Draft {
                expected: "P_ode/P_pred = 1".into(),
                measured: format!(
                    "max |dev| {worst:.4} at delta={}, eta={} over {} cells",
                    out.rows[at].delta,
                    out.rows[at].eta,
                    dev.len()
                ),
                tolerance: "0.20".into(),
                pass: worst <= 0.20 && out.failures.is_empty(),
            })
        },
    );
    let c4 = CriterionResult {
        seconds: c4.seconds + seconds,
        budget: 60.0,
        ..c4
    };
    let c9 = timed(9, "frame equivalence", f64::INFINITY, || {
        let out = outcome?;
        let (d, a) = columns(&out, SweepMethod::OdeDiabatic, SweepMethod::OdeAdiabatic);
        let worst = d
            .iter()
            .zip(&a)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        Ok(Draft {
            expected: "P_diabatic = P_adiabatic".into(),
            measured: format!("max |diff| {worst:.3e}"),
            tolerance: "1e-6".into(),
            pass: worst <= 1e-6 && out.failures.is_empty(),
        })
    });
    (c4, c9)
}

fn columns(out: &SweepOutcome, a: SweepMethod, b: SweepMethod) -> (Vec<f64>, Vec<f64>) {
    (
        out.column(a).unwrap_or_default(),
        out.column(b).unwrap_or_default(),
    )
}

/// `I(0) = π/2` and the small-`a` slope `(π/2 − I(a))/(2a/3)`.
pub fn dynamical_quadrature(_o: &VerifyOptions) -> CriterionResult {
    timed(5, "dynamical phase quadrature", 5.0, || {
        let q = QuadratureConfig::default();
        // a = ηδ/2 with η = 1
        let integral = |a: f64| dynamical_phase_integral(&AdiabaticParams::new(2.0 * a, 1.0)?, &q);
        let at_zero = dynamical_phase_integral(&AdiabaticParams::new(0.5, 0.0)?, &q)?;
        let mut slopes = Vec::new();
        for a in [0.025, 0.0125] {
            slopes.push((FRAC_PI_2 - integral(a)?) / (2.0 * a / 3.0));
        }
        let ok =
            (at_zero - FRAC_PI_2).abs() <= 1e-9 && slopes.iter().all(|s| (0.9..=1.1).contains(s));
        Ok(Draft {
            expected: "I(0) = pi/2; slope in [0.9, 1.1]".into(),
            measured: format!(
                "I(0) - pi/2 = {:.2e}; slopes [{}]",
                at_zero - FRAC_PI_2,
                slopes
                    .iter()
                    .map(|s| format!("{s:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            tolerance: "1e-9; interval".into(),
            pass: ok,
        })
    })
}

/// The holonomy criterion for an arbitrary loop evaluator, so that broken
/// implementations can be shown to fail it.
pub fn holonomy_with<F>(loop_matrix: F) -> CriterionResult
where
    F: Fn(&AdiabaticParams, f64) -> Result<Mat2>,
{
    timed(6, "AGP holonomy", 2.0, || {
        let mut worst: f64 = 0.0;
        for eta in [0.0, 0.5, 1.0] {
            let p = AdiabaticParams::new(0.5, eta)?;
            for r in [0.2, 1.0] {
                worst = worst.max((loop_matrix(&p, r)? - holonomy_closed_form(&p)).max_abs());
            }
        }
        Ok(Draft {
            expected: "exp(i eta pi/2 sigma_y)".into(),
            measured: format!("max entry error {worst:.2e}"),
            tolerance: "1e-8".into(),
            pass: worst <= 1e-8,
        })
    })
}

pub fn agp_holonomy(_o: &VerifyOptions) -> CriterionResult {
    holonomy_with(holonomy)
}

pub fn geometric_suppression(_o: &VerifyOptions) -> CriterionResult {
    timed(7, "geometric factor suppression", 10.0, || {
        let q = QuadratureConfig::default();
        let mut geo = Vec::new();
        for d in [0.5, 0.25, 0.125] {
            geo.push(geometric_phase_integral(
                &AdiabaticParams::new(d, 1.0)?,
                None,
                &q,
            )?);
        }
        let decreasing = geo.windows(2).all(|w| w[1].abs() < w[0].abs());
        let factor = (2.0 * geo[2]).exp();
        Ok(Draft {
            expected: "|geo| decreasing; exp(2 geo) in [0.8, 1.25] at delta=0.125".into(),
            measured: format!("geo [{}]; exp(2 geo) = {factor:.4}", list(&geo)),
            tolerance: "strict; interval".into(),
            pass: decreasing && (0.8..=1.25).contains(&factor),
        })
    })
}

pub fn gaudin_flatness(_o: &VerifyOptions) -> CriterionResult {
    timed(8, "AGP-corrected flatness", 30.0, || {
        let cfg = FlatnessConfig::default();
        let mut exact: f64 = 0.0;
        let mut fd: f64 = 0.0;
        for (n, eps) in [(2, vec![0.0, 1.0]), (3, vec![0.0, 1.0, 2.5])] {
            let r = corrected_flatness_residual(&gaudin_family(n, 1.0)?, &eps, &cfg)?;
            exact = exact.max(r.sym_residual).max(r.comm_residual);
            for v in [
                r.corrected_residual,
                r.agp_flatness,
                r.cross_commutator,
                r.eigenvalue_curl,
            ] {
                fd = fd.max(v.unwrap_or(f64::INFINITY));
            }
        }
        Ok(Draft {
            expected: "all residuals 0".into(),
            measured: format!("analytic {exact:.2e}; finite-difference {fd:.2e}"),
            tolerance: "1e-12; 1e-6".into(),
            pass: exact <= 1e-12 && fd <= 1e-6,
        })
    })
}

pub fn field_sanity(o: &VerifyOptions) -> CriterionResult {
    timed(10, "field sanity", 20.0, || {
        let p = AdiabaticParams::new(0.5, 1.0)?;
        let cuts = default_cuts(&p);
        let coarse = if o.quick {
            GridSpec {
                n_re: 41,
                n_im: 23,
                ..GridSpec::default()
            }
        } else {
            GridSpec {
                n_re: 101,
                n_im: 45,
                ..GridSpec::default()
            }
        };
        let a = delta_field(&p, &coarse, &cuts)?;
        let b = delta_field(&p, &coarse.refined(), &cuts)?;
        let axis = a
            .real_axis_max()
            .unwrap_or(f64::INFINITY)
            .max(b.real_axis_max().unwrap_or(f64::INFINITY));
        // shared nodes of the two grids are evaluated independently, so the
        // grid check is exact by construction; the path-sampling check
        // re-integrates every coarse cell with twice the panels
        let grid = a.max_refinement_difference(&b);
        let doubled = delta_field_sampled(&p, &coarse, &cuts, 2.0 * DEFAULT_STEPS_PER_UNIT)?;
        let path = a.max_difference(&doubled);
        let refine = grid.max(path);
        Ok(Draft {
            expected: "0 on real axis; refinement agreement".into(),
            measured: format!("axis {axis:.1e}; grid {grid:.1e}; path sampling {path:.2e}"),
            tolerance: "1e-10; 1e-8".into(),
            pass: axis <= 1e-10 && refine <= 1e-8,
        })
    })
}

/// All criteria in order.
pub fn run_all(o: &VerifyOptions) -> Vec<CriterionResult> {
    let mut out = vec![landau_zener(o), counterdiabatic(o), modified_prefactor(o)];
    let (c4, c9) = prediction_and_frames(o);
    out.push(c4);
    out.extend([
        dynamical_quadrature(o),
        agp_holonomy(o),
        geometric_suppression(o),
        gaudin_flatness(o),
    ]);
    out.push(c9);
    out.push(field_sanity(o));
    out
}

/// Fixed-width table: criterion, expected, measured, tolerance, result.
pub fn render_table(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<42} | {:<58} | {:<66} | {:<16} | result",
        "criterion", "expected", "measured", "tolerance"
    );
    let _ = writeln!(out, "{}", "-".repeat(200));
    for r in results {
        let _ = writeln!(
            out,
            "{:<42} | {:<58} | {:<66} | {:<16} | {}",
            format!("{:>2}. {}", r.id, r.name),
            r.expected,
            r.measured,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}
