//! Complex-time (Dykhne-Davis-Pechukas) prediction of the transition
//! probability.
//!
//! ```text
//! P ≈ cos²(ηπ/2) · e^{2 Im∫₀^{τ*₁}(a₁−a₀)} · e^{−(2/δ) Im∫₀^{τ*₁}(e₁−e₀)}
//! ```
//!
//! The first factor is the holonomy of the AGP pole at `τ = i`; the integrals
//! run from the real axis to the branch point `τ*₁ = i√(1+a^{2/3})`.

use crate::cuts::CutSpec;
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{discriminant, AdiabaticParams, ComplexPoint, ContourPath, EXCLUSION_RADIUS};
use crate::quadrature::{integrate, integrate_real, periodic_trapezoid, Tolerance};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// The three branch points in the upper half-plane and the AGP pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoints {
    /// `τ*₁` (on the imaginary axis), `τ*₂` (left), `τ*₃` (right).
    pub upper: [ComplexPoint; 3],
    pub pole: ComplexPoint,
    /// 3 when η = 0 and the points coincide at `i`, else 1.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Half-width of the principal-value pairing window around `y = 1`.
    pub pv_epsilon0: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            pv_epsilon0: 0.1,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 5000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pv_epsilon0 > 0.0) {
            return Err(Error::InvalidInput("pv_epsilon0 must be positive".into()));
        }
        if !(self.abs_tol >= 1e-13 && self.rel_tol >= 1e-13) {
            return Err(Error::InvalidInput(
                "quadrature tolerances must be ≥ 1e-13".into(),
            ));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// Factors of the predicted probability.
///
/// `p_pred = topo_prefactor · exp(2·geo_im) · exp(−2·dyn_im/δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseBreakdown {
    pub method: Method,
    pub dyn_im: f64,
    pub geo_im: f64,
    pub topo_prefactor: f64,
    #[serde(rename = "P")]
    pub p_pred: f64,
}

impl PhaseBreakdown {
    pub fn assemble(method: Method, p: &AdiabaticParams, dyn_im: f64, geo_im: f64) -> Self {
        let topo = (p.eta * FRAC_PI_2).cos().powi(2);
        PhaseBreakdown {
            method,
            dyn_im,
            geo_im,
            topo_prefactor: topo,
            p_pred: topo * (2.0 * geo_im).exp() * (-2.0 * dyn_im / p.delta).exp(),
        }
    }
}

/// `τ*ₖ = i√(1 + a^{2/3} e^{2πik/3})`, polished by Newton's method on
/// `(1+τ²)³ + a²`.
pub fn branch_points(p: &AdiabaticParams) -> BranchPoints {
    let a = p.a().abs();
    let i = Complex64::i();
    if a == 0.0 {
        return BranchPoints {
            upper: [i; 3],
            pole: i,
            multiplicity: 3,
        };
    }
    let c = a.powf(2.0 / 3.0);
    let mut upper = [Complex64::default(); 3];
    for (k, z) in upper.iter_mut().enumerate() {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
        let mut t = i * (1.0 + c * phase).sqrt();
        for _ in 0..8 {
            let w = 1.0 + t * t;
            let d = w * w * w + a * a;
            let dd = 6.0 * t * w * w;
            if d.norm() == 0.0 || dd.norm() == 0.0 {
                break;
            }
            let step = d / dd;
            t -= step;
            if step.norm() < 1e-16 * t.norm() {
                break;
            }
        }
        *z = t;
    }
    // numbering: τ*₁ on the axis, τ*₂ to the left, τ*₃ to the right
    let upper = if upper[1].re < upper[2].re {
        upper
    } else {
        [upper[0], upper[2], upper[1]]
    };
    BranchPoints {
        upper,
        pole: i,
        multiplicity: 1,
    }
}

/// `f(y) = √(1 − y² + a²/(1 − y²)²)` given `x = 1 − y²`.
#[inline]
fn gap_on_axis(x: f64, a: f64) -> f64 {
    (x + a * a / (x * x)).max(0.0).sqrt()
}

/// `Im∫₀^{τ*₁}(e₁ − e₀)dτ`, reduced to the imaginary axis `τ = iy`:
///
/// ```text
/// I(a) = 2[ PV∫₀¹ f(y)dy − ∫₁^{y*} f(y)dy ],   y* = √(1 + a^{2/3})
/// ```
///
/// The `1/|1−y|` divergences at `y = 1` cancel in the pairing
/// `∫₀^ε [f(1−u) − f(1+u)] du`; the square-root zero at `y*` is removed by
/// `y = y*(1 − s²)`.
pub fn dynamical_phase_integral(p: &AdiabaticParams, q: &QuadratureConfig) -> Result<f64> {
    q.validate()?;
    let a = p.a().abs();
    let tol = q.tolerance();
    if a == 0.0 {
        // 2∫₀¹√(1−y²)dy with y = 1 − s²
        let v = integrate_real(|s| 2.0 * s * s * (2.0 - s * s).sqrt(), 0.0, 1.0, &tol)?;
        return Ok(2.0 * v);
    }
    let y_star = (1.0 + a.powf(2.0 / 3.0)).sqrt();
    let eps = q.pv_epsilon0.min(0.5 * (y_star - 1.0));
    let inner = integrate_real(
        |y| gap_on_axis((1.0 - y) * (1.0 + y), a),
        0.0,
        1.0 - eps,
        &tol,
    )?;
    let paired = integrate_real(
        |u| gap_on_axis(u * (2.0 - u), a) - gap_on_axis(-u * (2.0 + u), a),
        0.0,
        eps,
        &tol,
    )?;
    let s_max = (1.0 - (1.0 + eps) / y_star).sqrt();
    let outer = integrate_real(
        |s| {
            let y = y_star * (1.0 - s * s);
            gap_on_axis((1.0 - y) * (1.0 + y), a) * 2.0 * y_star * s
        },
        0.0,
        s_max,
        &tol,
    )?;
    Ok(2.0 * (inner + paired - outer))
}

/// The default route for the geometric integral: along the real axis to
/// `offset`, straight up to `Im τ*₁`, then left to `τ*₁`.
///
/// The offset is `min(0.05, |Re τ*₃|/2)` so the path passes between `τ*₂`
/// and `τ*₃`.
pub fn default_geometric_path(bp: &BranchPoints) -> Result<ContourPath> {
    let offset = 0.05f64.min(0.5 * bp.upper[2].re.abs());
    geometric_path_with_offset(bp, offset)
}

pub fn geometric_path_with_offset(bp: &BranchPoints, offset: f64) -> Result<ContourPath> {
    let top = bp.upper[0];
    ContourPath::new(
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(offset, 0.0),
            Complex64::new(offset, top.im),
            top,
        ],
        1000,
    )
}

/// `a₁ − a₀ = −2aτ²(1+τ²) / (√D ((1+τ²)² + a²))` with `D = (1+τ²)³ + a²`,
/// for a given determination of `√D`.
#[inline]
fn berry_difference(tau: Complex64, sqrt_d: Complex64, a: f64) -> Complex64 {
    let w = 1.0 + tau * tau;
    -2.0 * a * tau * tau * w / (sqrt_d * (w * w + a * a))
}

/// `√D` continued along a straight segment from a known value at its start.
struct ContinuedRoot {
    from: Complex64,
    to: Complex64,
    a: f64,
    samples: Vec<Complex64>,
}

impl ContinuedRoot {
    fn new(from: Complex64, to: Complex64, a: f64, start: Complex64, n: usize) -> Self {
        let mut samples = Vec::with_capacity(n + 1);
        let mut prev = start;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let r = discriminant(from + (to - from) * t, a).sqrt();
            prev = if (r - prev).norm() <= (r + prev).norm() {
                r
            } else {
                -r
            };
            samples.push(prev);
        }
        ContinuedRoot {
            from,
            to,
            a,
            samples,
        }
    }

    fn at(&self, t: f64) -> Complex64 {
        let n = self.samples.len() - 1;
        let k = ((t * n as f64).round() as usize).min(n);
        let r = discriminant(self.from + (self.to - self.from) * t, self.a).sqrt();
        let s = self.samples[k];
        if (r * s.conj()).re >= 0.0 {
            r
        } else {
            -r
        }
    }

    fn end(&self) -> Complex64 {
        *self.samples.last().expect("non-empty")
    }
}

/// `Im∫(a₁ − a₀)dτ` from 0 to `τ*₁` along `path` (the default route when
/// `None`), in the analytic gauge, starting on the principal branch.
///
/// The path must end at `τ*₁` and may not cross the cuts of
/// [`CutSpec::between_side_points`]. The inverse-square-root singularity at
/// the endpoint is removed by the substitution `t = 1 − s²` on the last
/// segment.
pub fn geometric_phase_integral(
    p: &AdiabaticParams,
    path: Option<&ContourPath>,
    q: &QuadratureConfig,
) -> Result<f64> {
    q.validate()?;
    let a = p.a();
    if a == 0.0 {
        return Ok(0.0);
    }
    let bp = branch_points(p);
    let owned;
    let path = match path {
        Some(path) => path,
        None => {
            owned = default_geometric_path(&bp)?;
            &owned
        }
    };
    CutSpec::between_side_points(&bp.upper).check_path(path)?;
    path.check_clearance(&[Complex64::i(), -Complex64::i()], EXCLUSION_RADIUS)?;
    let end = *path.vertices.last().expect("≥ 2 vertices");
    if (end - bp.upper[0]).norm() > 1e-10 {
        return Err(Error::InvalidInput(
            "geometric path must end at the branch point on the imaginary axis".into(),
        ));
    }

    let tol = q.tolerance();
    let n_seg = path.vertices.len() - 1;
    let mut root = discriminant(path.vertices[0], a).sqrt();
    let mut total = Complex64::default();
    for (k, (u, v)) in path.segments().enumerate() {
        let samples = ((v - u).norm() * path.samples_per_unit as f64)
            .ceil()
            .max(64.0) as usize;
        let cont = ContinuedRoot::new(u, v, a, root, samples);
        let d = v - u;
        let est = if k + 1 < n_seg {
            integrate(
                |t| berry_difference(u + d * t, cont.at(t), a) * d,
                0.0,
                1.0,
                &tol,
            )?
        } else {
            integrate(
                |s| {
                    let t = 1.0 - s * s;
                    berry_difference(u + d * t, cont.at(t), a) * d * (2.0 * s)
                },
                0.0,
                1.0,
                &tol,
            )?
        };
        total += est.value;
        root = cont.end();
    }
    Ok(total.im)
}

/// Holonomy of the AGP around a counter-clockwise circle of `radius` about
/// `i`: `exp(−(iη/δ)∮θ̇A_θ dτ)`, which equals `exp(iηπ/2·σʸ)` whenever the
/// circle excludes `−i`.
pub fn holonomy(p: &AdiabaticParams, radius: f64) -> Result<Mat2> {
    if !(radius > EXCLUSION_RADIUS) || !(radius < 2.0 - EXCLUSION_RADIUS) {
        return Err(Error::Radius(format!(
            "radius {radius} must lie in ({EXCLUSION_RADIUS}, {}) to enclose only the pole at i",
            2.0 - EXCLUSION_RADIUS
        )));
    }
    let i = Complex64::i();
    // θ̇A_θ = −δ/(2(1+τ²))·σʸ, so the exponent is (iη/2)·∮dτ/(1+τ²)·σʸ
    let loop_integral = periodic_trapezoid(
        |phi| {
            let z = Complex64::from_polar(radius, phi);
            let tau = i + z;
            i * z / (1.0 + tau * tau)
        },
        2.0 * PI,
        1e-14,
    )?;
    Ok(Mat2::sigma_y().scale(i * p.eta * 0.5 * loop_integral).exp())
}

/// `exp(iηπ/2·σʸ) = cos(ηπ/2)·I + i sin(ηπ/2)·σʸ`.
pub fn holonomy_closed_form(p: &AdiabaticParams) -> Mat2 {
    let phi = p.eta * FRAC_PI_2;
    Mat2::identity().scale(phi.cos().into()) + Mat2::sigma_y().scale(Complex64::i() * phi.sin())
}

/// Predicted transition probability.
///
/// The closed form keeps the leading small-`a` behaviour,
/// `P = cos²(ηπ/2)·e^{−2η/3}·e^{−π/δ}`, recorded as `dyn_im = π/2 + ηδ/3`
/// and `geo_im = 0`. The quadrature method evaluates both integrals.
pub fn predict_probability(
    p: &AdiabaticParams,
    method: Method,
    q: &QuadratureConfig,
) -> Result<PhaseBreakdown> {
    match method {
        Method::ClosedForm => Ok(PhaseBreakdown::assemble(
            method,
            p,
            FRAC_PI_2 + p.eta * p.delta / 3.0,
            0.0,
        )),
        Method::Quadrature => {
            let dyn_im = dynamical_phase_integral(p, q)?;
            let geo_im = geometric_phase_integral(p, None, q)?;
            Ok(PhaseBreakdown::assemble(method, p, dyn_im, geo_im))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{berry_connection_exact, eigensystem};

    fn params(delta: f64, eta: f64) -> AdiabaticParams {
        AdiabaticParams::new(delta, eta).unwrap()
    }

    #[test]
    fn branch_points_solve_the_discriminant() {
        let p = params(0.5, 1.0);
        let bp = branch_points(&p);
        for z in bp.upper {
            assert!(discriminant(z, p.a()).norm() <= 1e-13);
            assert!(z.im > 0.0);
        }
        assert!(bp.upper[0].re.abs() < 1e-15);
        assert!((bp.upper[0].im - 1.181884).abs() < 1e-6);
        assert!(bp.upper[1].re < 0.0 && bp.upper[2].re > 0.0);
    }

    #[test]
    fn collapse_without_agp() {
        let bp = branch_points(&params(0.5, 0.0));
        assert_eq!(bp.multiplicity, 3);
        assert!(bp.upper.iter().all(|z| *z == Complex64::i()));
    }

    #[test]
    fn lz_dynamical_integral() {
        let v = dynamical_phase_integral(&params(0.5, 0.0), &QuadratureConfig::default()).unwrap();
        assert!((v - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn dynamical_integral_reference_values() {
        // independent adaptive quadrature of the same reduction (scipy quad)
        let q = QuadratureConfig::default();
        for (a, want) in [
            (0.0125, 1.5716308676),
            (0.025, 1.5734175934),
            (0.05, 1.5789751939),
            (0.1, 1.5960315534),
            (0.25, 1.6790687505),
        ] {
            let v = dynamical_phase_integral(&params(2.0 * a, 1.0), &q).unwrap();
            assert!((v - want).abs() < 1e-9, "a={a}: {v} vs {want}");
        }
    }

    #[test]
    fn pv_window_independence() {
        let p = params(0.5, 1.0);
        let q = QuadratureConfig::default();
        let v1 = dynamical_phase_integral(&p, &q).unwrap();
        let q2 = QuadratureConfig {
            pv_epsilon0: 0.025,
            ..q
        };
        let v2 = dynamical_phase_integral(&p, &q2).unwrap();
        assert!((v1 - v2).abs() < 1e-11, "{v1} vs {v2}");
    }

    #[test]
    fn berry_difference_matches_eigensystem() {
        let p = params(0.5, 0.8);
        let tau = Complex64::new(0.3, 0.4);
        let es = eigensystem(tau, &p, None).unwrap();
        let (a0, a1) = berry_connection_exact(&es, &p);
        let sqrt_d = es.e1 * (1.0 + tau * tau);
        assert!((berry_difference(tau, sqrt_d, p.a()) - (a1 - a0)).norm() < 1e-13);
    }

    #[test]
    fn geometric_integral_reference_values() {
        // scipy quad along the imaginary axis, where the integrand is real
        let q = QuadratureConfig::default();
        for (delta, want) in [(0.125, -0.153467), (0.25, -0.231877), (0.375, -0.290524)] {
            let v = geometric_phase_integral(&params(delta, 1.0), None, &q).unwrap();
            assert!((v - want).abs() < 2e-6, "δ={delta}: {v} vs {want}");
        }
    }

    #[test]
    fn geometric_integral_offset_independence() {
        let p = params(0.5, 1.0);
        let q = QuadratureConfig::default();
        let bp = branch_points(&p);
        let v1 = geometric_phase_integral(
            &p,
            Some(&geometric_path_with_offset(&bp, 0.05).unwrap()),
            &q,
        )
        .unwrap();
        let v2 = geometric_phase_integral(
            &p,
            Some(&geometric_path_with_offset(&bp, 0.025).unwrap()),
            &q,
        )
        .unwrap();
        assert!((v1 - v2).abs() < 1e-6, "{v1} vs {v2}");
    }

    #[test]
    fn geometric_path_through_cut_is_rejected() {
        let p = params(0.5, 1.0);
        let bp = branch_points(&p);
        let wide = geometric_path_with_offset(&bp, 0.5).unwrap();
        let r = geometric_phase_integral(&p, Some(&wide), &QuadratureConfig::default());
        assert!(matches!(r, Err(Error::PathThroughCut { .. })));
    }

    #[test]
    fn holonomy_values() {
        for eta in [0.0, 0.5, 1.0] {
            let p = params(0.5, eta);
            let want = holonomy_closed_form(&p);
            for r in [0.2, 0.5, 1.0] {
                assert!((holonomy(&p, r).unwrap() - want).max_abs() < 1e-12);
            }
        }
        let h = holonomy(&params(0.5, 1.0), 0.5).unwrap();
        assert!(
            (h - Mat2::new(0.0.into(), 1.0.into(), (-1.0).into(), 0.0.into())).max_abs() < 1e-12
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = holonomy(&params(0.5, 0.5), 0.5).unwrap();
        assert!((h - Mat2::new(s.into(), s.into(), (-s).into(), s.into())).max_abs() < 1e-12);
    }

    #[test]
    fn holonomy_radius_errors() {
        let p = params(0.5, 1.0);
        for r in [0.0, -1.0, 2.0, 1.9995, f64::NAN] {
            assert!(matches!(holonomy(&p, r), Err(Error::Radius(_))), "r={r}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let q = QuadratureConfig::default();
        let b = predict_probability(&params(0.5, 0.0), Method::ClosedForm, &q).unwrap();
        assert!((b.p_pred - (-2.0 * PI).exp()).abs() < 1e-15);
        assert!((b.dyn_im - FRAC_PI_2).abs() < 1e-15);
        let b = predict_probability(&params(0.5, 1.0), Method::ClosedForm, &q).unwrap();
        assert!(b.p_pred < 1e-32);
    }

    #[test]
    fn quadrature_prediction_is_decreasing_in_eta() {
        let q = QuadratureConfig::default();
        let ps: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&e| {
                predict_probability(&params(0.5, e), Method::Quadrature, &q)
                    .unwrap()
                    .p_pred
            })
            .collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]), "{ps:?}");
    }
}
