//! The η-family of two-level Hamiltonians
//!
//! ```text
//! h(τ) = σˣ + τσᶻ − a/(1+τ²)·σʸ,    a = ηδ/2
//! ```
//!
//! which interpolates between the linear-sweep Landau-Zener model (η = 0) and
//! its exactly counterdiabatic version (η = 1). Everything here works for
//! complex τ.
//!
//! Eigenvectors use an *analytic gauge*: with `β = h₀₁`, `γ = h₁₀`,
//!
//! ```text
//! |n⟩ = (β, eₙ − τ)/Nₙ,   ⟨n| = (γ, eₙ − τ)/Nₙ,   Nₙ² = 2eₙ(eₙ − τ)
//! ```
//!
//! paired bilinearly (`⟨n|·|m⟩ = δₙₘ`, no conjugation). On the real axis
//! `⟨n| = |n⟩†`, so this is the ordinary orthonormal basis there. Off the
//! axis the same formula is continued analytically, which keeps the two
//! sheets of the eigenvector consistent around a branch point.

use crate::error::{Error, Result};
use crate::linalg::{bilinear, Mat2, Vec2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of the complexified slow time τ.
pub type ComplexPoint = Complex64;

/// Default exclusion radius around the AGP poles `±i`.
pub const EXCLUSION_RADIUS: f64 = 1e-3;

const POLE_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-12;

/// Adiabatic parameter δ and AGP strength η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticParams {
    pub delta: f64,
    pub eta: f64,
}

impl AdiabaticParams {
    /// Rejects non-finite input and `δ ≤ 0`. η outside `[0, 1]` is accepted;
    /// see [`AdiabaticParams::eta_out_of_range`].
    pub fn new(delta: f64, eta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "eta must be finite, got {eta}"
            )));
        }
        Ok(AdiabaticParams { delta, eta })
    }

    /// `a = ηδ/2`, the strength of the σʸ term.
    #[inline]
    pub fn a(&self) -> f64 {
        self.eta * self.delta / 2.0
    }

    /// The formulas stay valid outside `[0, 1]` but the physics is no longer
    /// an interpolation; callers may want to warn.
    pub fn eta_out_of_range(&self) -> bool {
        !(0.0..=1.0).contains(&self.eta)
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        AdiabaticParams { eta, ..*self }
    }
}

fn pole_check(tau: ComplexPoint) -> Result<Complex64> {
    if !(tau.re.is_finite() && tau.im.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite tau {tau}")));
    }
    let w = 1.0 + tau * tau;
    if w.norm() < POLE_TOL {
        return Err(Error::Pole {
            re: tau.re,
            im: tau.im,
            distance: w.norm(),
        });
    }
    Ok(w)
}

/// The σʸ coefficient `b(τ) = a/(1+τ²)` and its τ-derivative.
#[inline]
fn agp_coefficient(tau: Complex64, w: Complex64, a: f64) -> (Complex64, Complex64) {
    let b = a / w;
    let db = -2.0 * a * tau / (w * w);
    (b, db)
}

/// `h(τ) = σˣ + τσᶻ − a/(1+τ²)·σʸ`.
pub fn hamiltonian(tau: ComplexPoint, p: &AdiabaticParams) -> Result<Mat2> {
    let one = Complex64::new(1.0, 0.0);
    if p.eta == 0.0 {
        return Ok(Mat2::new(tau, one, one, -tau));
    }
    let w = pole_check(tau)?;
    let (b, _) = agp_coefficient(tau, w, p.a());
    let ib = Complex64::i() * b;
    let h = Mat2::new(tau, one + ib, one - ib, -tau);
    debug_assert!(tau.im != 0.0 || h.hermiticity_defect() <= 1e-14);
    Ok(h)
}

/// The counterdiabatic term `θ̇A_θ = −δ/(2(1+τ²))·σʸ` (without the factor η).
pub fn agp_term(tau: ComplexPoint, p: &AdiabaticParams) -> Result<Mat2> {
    let w = pole_check(tau)?;
    Ok(Mat2::sigma_y().scale(-p.delta / (2.0 * w)))
}

/// Gap function and mixing angle of the Landau-Zener part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarParameters {
    /// `e(τ) = √(1+τ²)`, principal branch.
    pub e: Complex64,
    /// `θ` with `tan θ = 1/τ`, `θ = π/2 − arctan τ`; in `(0, π)` on the real axis.
    pub theta: Complex64,
}

impl PolarParameters {
    pub fn at(tau: ComplexPoint) -> Self {
        let e = (1.0 + tau * tau).sqrt();
        let theta = std::f64::consts::FRAC_PI_2 - tau.atan();
        PolarParameters { e, theta }
    }
}

/// `U(θ) = exp(−iθσʸ/2)·σˣ = [[−sin θ/2, cos θ/2], [cos θ/2, sin θ/2]]`.
pub fn diagonalizer(theta: Complex64) -> Mat2 {
    let (s, c) = ((theta * 0.5).sin(), (theta * 0.5).cos());
    Mat2::new(-s, c, c, s)
}

/// Which determination of the square roots is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchTag {
    /// Principal determination; on the real axis `e₀ < 0 < e₁`.
    Principal,
    /// Continued from a neighbouring [`EigenSystem`].
    Continued,
}

/// Instantaneous eigen-decomposition in the analytic gauge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub tau: ComplexPoint,
    pub e0: Complex64,
    pub e1: Complex64,
    /// Right eigenvectors.
    pub v0: Vec2,
    pub v1: Vec2,
    /// Left eigenvectors, `vl_n · v_m = δ_nm`.
    pub vl0: Vec2,
    pub vl1: Vec2,
    /// Normalisers `Nₙ` (the square-root branch of each eigenvector).
    pub norms: [Complex64; 2],
    pub branch: BranchTag,
}

impl EigenSystem {
    /// `max_n ‖h vₙ − eₙ vₙ‖_max`.
    pub fn residual(&self, h: &Mat2) -> f64 {
        let r = |v: &Vec2, e: Complex64| {
            let hv = h.apply(v);
            (hv[0] - e * v[0]).norm().max((hv[1] - e * v[1]).norm())
        };
        r(&self.v0, self.e0).max(r(&self.v1, self.e1))
    }
}

/// `(1+τ²)³ + a²`, whose zeros are the eigenvalue branch points.
#[inline]
pub fn discriminant(tau: ComplexPoint, a: f64) -> Complex64 {
    let w = 1.0 + tau * tau;
    w * w * w + a * a
}

fn pick_closer(a: Complex64, b: Complex64, target: Complex64) -> Complex64 {
    if (a - target).norm() <= (b - target).norm() {
        a
    } else {
        b
    }
}

/// Eigenvalues `e₀,₁ = ∓√((1+τ²)³ + a²)/(1+τ²)` and eigenvectors.
///
/// Without a hint the principal determination is used (`e₀ < 0 < e₁` and
/// real positive eigenvector normalisers, up to the sign convention
/// `|0(τ=0)⟩ = (−1, 1)/√2`). With a hint each square root is continued to the
/// value nearest the hint's.
pub fn eigensystem(
    tau: ComplexPoint,
    p: &AdiabaticParams,
    continuity_hint: Option<&EigenSystem>,
) -> Result<EigenSystem> {
    let a = p.a();
    let w = if p.eta == 0.0 {
        1.0 + tau * tau
    } else {
        pole_check(tau)?
    };
    let disc = w * w * w + a * a;
    if disc.norm() < DEGENERACY_TOL {
        return Err(Error::Degeneracy(format!(
            "eigenvalues coincide at tau = {} + {}i (|discriminant| = {:e})",
            tau.re,
            tau.im,
            disc.norm()
        )));
    }
    let b = if p.eta == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        a / w
    };
    let beta = 1.0 + Complex64::i() * b;
    let gamma = 1.0 - Complex64::i() * b;
    // e² = τ² + βγ = (1+τ²) + b²
    let root = (w + b * b).sqrt();
    let e1 = match continuity_hint {
        Some(h) => pick_closer(root, -root, h.e1),
        None => root,
    };
    let e0 = -e1;

    let mut norms = [Complex64::new(0.0, 0.0); 2];
    for (n, e) in [e0, e1].into_iter().enumerate() {
        let n2 = 2.0 * e * (e - tau);
        if n2.norm() < 1e-24 {
            return Err(Error::Degeneracy(format!(
                "eigenvector gauge is singular at tau = {} + {}i",
                tau.re, tau.im
            )));
        }
        let r = n2.sqrt();
        norms[n] = match continuity_hint {
            Some(h) => pick_closer(r, -r, h.norms[n]),
            None if n == 0 => -r,
            None => r,
        };
    }
    let vec = |e: Complex64, nn: Complex64| -> (Vec2, Vec2) {
        ([beta / nn, (e - tau) / nn], [gamma / nn, (e - tau) / nn])
    };
    let (v0, vl0) = vec(e0, norms[0]);
    let (v1, vl1) = vec(e1, norms[1]);
    Ok(EigenSystem {
        tau,
        e0,
        e1,
        v0,
        v1,
        vl0,
        vl1,
        norms,
        branch: if continuity_hint.is_some() {
            BranchTag::Continued
        } else {
            BranchTag::Principal
        },
    })
}

/// Finite-difference step used for eigenvector derivatives.
pub fn fd_step(tau: ComplexPoint) -> f64 {
    1e-5 * tau.norm().max(1.0)
}

/// `∂_τ v₀, ∂_τ v₁` by central differences with one Richardson step.
fn eigenvector_derivatives(centre: &EigenSystem, p: &AdiabaticParams) -> Result<(Vec2, Vec2)> {
    let tau = centre.tau;
    let diff = |h: f64| -> Result<(Vec2, Vec2)> {
        let plus = eigensystem(tau + h, p, Some(centre))?;
        let minus = eigensystem(tau - h, p, Some(centre))?;
        let d = |a: &Vec2, b: &Vec2| [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)];
        Ok((d(&plus.v0, &minus.v0), d(&plus.v1, &minus.v1)))
    };
    let h = fd_step(tau);
    let (c0, c1) = diff(h)?;
    let (f0, f1) = diff(h / 2.0)?;
    let rich = |coarse: &Vec2, fine: &Vec2| {
        [
            (4.0 * fine[0] - coarse[0]) / 3.0,
            (4.0 * fine[1] - coarse[1]) / 3.0,
        ]
    };
    Ok((rich(&c0, &f0), rich(&c1, &f1)))
}

/// Berry connections `aₙ = −i⟨n|∂_τ|n⟩` in the analytic gauge, by finite
/// differences. See [`berry_connection_exact`] for the closed form.
pub fn berry_connection(tau: ComplexPoint, p: &AdiabaticParams) -> Result<(Complex64, Complex64)> {
    let es = eigensystem(tau, p, None)?;
    let (d0, d1) = eigenvector_derivatives(&es, p)?;
    let mi = -Complex64::i();
    Ok((mi * bilinear(&es.vl0, &d0), mi * bilinear(&es.vl1, &d1)))
}

/// Non-adiabatic couplings `p₀₁ = −⟨0|∂_τ|1⟩`, `p₁₀ = −⟨1|∂_τ|0⟩`, by finite
/// differences. See [`coupling_coefficients_exact`].
pub fn coupling_coefficients(
    tau: ComplexPoint,
    p: &AdiabaticParams,
) -> Result<(Complex64, Complex64)> {
    let es = eigensystem(tau, p, None)?;
    let (d0, d1) = eigenvector_derivatives(&es, p)?;
    Ok((-bilinear(&es.vl0, &d1), -bilinear(&es.vl1, &d0)))
}

/// Closed-form Berry connections on the branch selected by `es`:
/// `aₙ = b′/(2eₙ(eₙ − τ))` with `b = a/(1+τ²)`.
pub fn berry_connection_exact(es: &EigenSystem, p: &AdiabaticParams) -> (Complex64, Complex64) {
    if p.eta == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let tau = es.tau;
    let (_, db) = agp_coefficient(tau, 1.0 + tau * tau, p.a());
    let f = |e: Complex64| db / (2.0 * e * (e - tau));
    (f(es.e0), f(es.e1))
}

/// Closed-form couplings `(p₀₁, p₁₀)` on the branch selected by `es`.
pub fn coupling_coefficients_exact(
    es: &EigenSystem,
    p: &AdiabaticParams,
) -> (Complex64, Complex64) {
    let tau = es.tau;
    let w = 1.0 + tau * tau;
    let (b, db) = if p.eta == 0.0 {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        agp_coefficient(tau, w, p.a())
    };
    let i = Complex64::i();
    let (gamma, dbeta) = (1.0 - i * b, i * db);
    // e e' = τ + b b'
    let de1 = (tau + b * db) / es.e1;
    let de0 = -de1;
    let nn = es.norms[0] * es.norms[1];
    // u₀·v₁′ and u₁·v₀′ with u = (γ, e − τ), v′ = (β′, e′ − 1)
    let p01 = -(gamma * dbeta + (es.e0 - tau) * (de1 - 1.0)) / nn;
    let p10 = -(gamma * dbeta + (es.e1 - tau) * (de0 - 1.0)) / nn;
    (p01, p10)
}

/// A piecewise-linear path in the complex τ plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPath {
    pub vertices: Vec<ComplexPoint>,
    /// Quadrature sample density along each segment (points per unit length).
    pub samples_per_unit: usize,
    /// Set for paths that deliberately loop around a singularity.
    pub encircles_singularity: bool,
}

impl ContourPath {
    pub fn new(vertices: Vec<ComplexPoint>, samples_per_unit: usize) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput(
                "a contour needs at least two vertices".into(),
            ));
        }
        if vertices
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite contour vertex".into()));
        }
        Ok(ContourPath {
            vertices,
            samples_per_unit,
            encircles_singularity: false,
        })
    }

    pub fn segments(&self) -> impl Iterator<Item = (ComplexPoint, ComplexPoint)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Checks that no vertex lies within `radius` of any of `singularities`,
    /// unless the path is flagged as a loop.
    pub fn check_clearance(&self, singularities: &[ComplexPoint], radius: f64) -> Result<()> {
        if self.encircles_singularity {
            return Ok(());
        }
        for v in &self.vertices {
            for s in singularities {
                let d = (v - s).norm();
                if d < radius {
                    return Err(Error::Pole {
                        re: v.re,
                        im: v.im,
                        distance: d,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(delta: f64, eta: f64) -> AdiabaticParams {
        AdiabaticParams::new(delta, eta).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian(c(0.0, 0.0), &params(0.7, 0.0)).unwrap();
        assert_eq!(h, Mat2::sigma_x());

        let h = hamiltonian(c(0.0, 0.0), &params(0.5, 1.0)).unwrap();
        let want = Mat2::new(c(0.0, 0.0), c(1.0, 0.25), c(1.0, -0.25), c(0.0, 0.0));
        assert!((h - want).max_abs() < 1e-16);

        let h = hamiltonian(c(2.0, 0.0), &params(0.5, 0.0)).unwrap();
        let want = Mat2::new(c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0));
        assert_eq!(h, want);
    }

    #[test]
    fn pole_is_rejected_only_with_agp() {
        let p = params(0.5, 0.3);
        assert!(matches!(
            hamiltonian(c(0.0, 1.0), &p),
            Err(Error::Pole { .. })
        ));
        assert!(hamiltonian(c(0.0, 1.0), &p.with_eta(0.0)).is_ok());
        assert!(matches!(
            agp_term(c(0.0, -1.0), &p),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn invalid_params() {
        assert!(AdiabaticParams::new(0.0, 0.5).is_err());
        assert!(AdiabaticParams::new(-1.0, 0.5).is_err());
        assert!(AdiabaticParams::new(0.5, f64::NAN).is_err());
        let p = AdiabaticParams::new(0.5, 1.5).unwrap();
        assert!(p.eta_out_of_range());
        assert!(!params(0.5, 1.0).eta_out_of_range());
    }

    #[test]
    fn agp_term_examples() {
        let m = agp_term(c(0.0, 0.0), &params(0.5, 1.0)).unwrap();
        let want = Mat2::new(c(0.0, 0.0), c(0.0, 0.25), c(0.0, -0.25), c(0.0, 0.0));
        assert!((m - want).max_abs() < 1e-16);

        // decays like 1/τ²
        let p = params(0.5, 1.0);
        let m1 = agp_term(c(100.0, 0.0), &p).unwrap().max_abs();
        let m2 = agp_term(c(200.0, 0.0), &p).unwrap().max_abs();
        assert!((m1 / m2 - 4.0).abs() < 1e-3);

        // independent complex arithmetic: |1+τ²| at τ = 0.1 + i
        let tau = c(0.1, 1.0);
        let w_re: f64 = 1.0 + 0.1 * 0.1 - 1.0;
        let w_im = 2.0 * 0.1 * 1.0;
        let w_abs = (w_re * w_re + w_im * w_im).sqrt();
        assert!((w_abs - 0.20025).abs() < 1e-5);
        let m = agp_term(tau, &p).unwrap();
        assert!((m.max_abs() - 0.5 / (2.0 * w_abs)).abs() < 1e-12);
    }

    #[test]
    fn diagonalizer_examples() {
        let u = diagonalizer(std::f64::consts::FRAC_PI_2.into());
        let s = FRAC_1_SQRT_2;
        let want = Mat2::new(c(-s, 0.0), c(s, 0.0), c(s, 0.0), c(s, 0.0));
        assert!((u - want).max_abs() < 1e-15);
        assert!((diagonalizer(0.0.into()) - Mat2::sigma_x()).max_abs() < 1e-16);

        // columns are σˣ eigenvectors: σˣ col0 = −col0, σˣ col1 = +col1
        let col0 = [u.get(0, 0), u.get(1, 0)];
        let col1 = [u.get(0, 1), u.get(1, 1)];
        let x = Mat2::sigma_x();
        let (a, b) = (x.apply(&col0), x.apply(&col1));
        assert!((a[0] + col0[0]).norm() < 1e-15 && (a[1] + col0[1]).norm() < 1e-15);
        assert!((b[0] - col1[0]).norm() < 1e-15 && (b[1] - col1[1]).norm() < 1e-15);
    }

    #[test]
    fn diagonalizer_diagonalizes_lz_hamiltonian() {
        for &tau in &[-30.0, -1.3, 0.0, 0.2, 4.0] {
            let pp = PolarParameters::at(c(tau, 0.0));
            assert!(pp.theta.re > 0.0 && pp.theta.re < std::f64::consts::PI);
            let u = diagonalizer(pp.theta);
            let h = hamiltonian(c(tau, 0.0), &params(1.0, 0.0)).unwrap();
            let d = u.adjoint() * h * u;
            assert!(d.get(0, 1).norm() < 1e-13 && d.get(1, 0).norm() < 1e-13);
            assert!((d.get(0, 0) + pp.e).norm() < 1e-13);
            assert!((u.adjoint() * u - Mat2::identity()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn polar_parameters_square() {
        for &tau in &[c(0.3, 0.0), c(-2.0, 0.5), c(0.1, -3.0)] {
            let pp = PolarParameters::at(tau);
            let want = 1.0 + tau * tau;
            assert!((pp.e * pp.e - want).norm() <= 1e-13 * want.norm());
            // tan θ = 1/τ
            assert!((pp.theta.tan() * tau - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn eigensystem_examples() {
        let es = eigensystem(c(0.0, 0.0), &params(0.5, 0.0), None).unwrap();
        assert!((es.e0 + 1.0).norm() < 1e-15 && (es.e1 - 1.0).norm() < 1e-15);
        let s = FRAC_1_SQRT_2;
        assert!((es.v0[0] - (-s)).norm() < 1e-15 && (es.v0[1] - s).norm() < 1e-15);
        assert!((es.v1[0] - s).norm() < 1e-15 && (es.v1[1] - s).norm() < 1e-15);

        let es = eigensystem(c(0.0, 0.0), &params(0.5, 1.0), None).unwrap();
        assert!((es.e1.re - 1.0307764064044151).abs() < 1e-12);
        assert!((es.e0 + es.e1).norm() == 0.0);
    }

    #[test]
    fn eigensystem_complex_point_against_characteristic_polynomial() {
        let p = params(0.4, 0.5);
        let tau = c(0.7, 0.3);
        let h = hamiltonian(tau, &p).unwrap();
        // roots of λ² − tr λ + det
        let (tr, det) = (h.trace(), h.det());
        let sq = (tr * tr - 4.0 * det).sqrt();
        let roots = [(tr - sq) / 2.0, (tr + sq) / 2.0];
        let es = eigensystem(tau, &p, None).unwrap();
        let nearest = |e: Complex64| {
            roots
                .iter()
                .map(|r| (r - e).norm())
                .fold(f64::MAX, f64::min)
        };
        assert!(nearest(es.e0) < 1e-12 && nearest(es.e1) < 1e-12);
        assert!(es.residual(&h) <= 1e-12 * h.max_abs());
        assert!((bilinear(&es.vl0, &es.v0) - 1.0).norm() < 1e-12);
        assert!((bilinear(&es.vl1, &es.v1) - 1.0).norm() < 1e-12);
        assert!(bilinear(&es.vl0, &es.v1).norm() < 1e-12);
    }

    #[test]
    fn eigensystem_errors() {
        let p = params(0.5, 1.0);
        assert!(matches!(
            eigensystem(c(0.0, 1.0), &p, None),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            eigensystem(c(0.0, 1.0), &p.with_eta(0.0), None),
            Err(Error::Degeneracy(_))
        ));
        // branch point of the η-family: 1+τ² = −a^{2/3}
        let a: f64 = p.a();
        let bp = Complex64::new(0.0, (1.0 + a.powf(2.0 / 3.0)).sqrt());
        assert!(matches!(
            eigensystem(bp, &p, None),
            Err(Error::Degeneracy(_))
        ));
    }

    #[test]
    fn continuation_follows_the_branch_around_a_branch_point() {
        // one loop around τ = i for η = 0 swaps the eigenvalues
        let p = params(0.5, 0.0);
        let centre = c(0.0, 1.0);
        let mut es = eigensystem(centre + 0.5, &p, None).unwrap();
        let start = es.e1;
        let n = 400;
        for k in 1..=n {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let tau = centre + 0.5 * Complex64::from_polar(1.0, phi);
            es = eigensystem(tau, &p, Some(&es)).unwrap();
        }
        assert!((es.e1 + start).norm() < 1e-10);
        assert_eq!(es.branch, BranchTag::Continued);
    }

    #[test]
    fn berry_connection_vanishes_without_agp() {
        for &t in &[-5.0, -0.3, 0.0, 1.7] {
            let (a0, a1) = berry_connection(c(t, 0.0), &params(0.5, 0.0)).unwrap();
            assert!(a0.norm() < 1e-10 && a1.norm() < 1e-10);
        }
    }

    #[test]
    fn berry_connection_matches_closed_form_and_is_stable() {
        let p = params(0.5, 1.0);
        for &tau in &[c(0.0, 0.0), c(0.8, 0.0), c(0.05, 0.6), c(-0.4, 1.4)] {
            let (a0, a1) = berry_connection(tau, &p).unwrap();
            let es = eigensystem(tau, &p, None).unwrap();
            let (x0, x1) = berry_connection_exact(&es, &p);
            assert!((a0 - x0).norm() < 1e-8, "{tau}: {a0} vs {x0}");
            assert!((a1 - x1).norm() < 1e-8);
        }
        // Richardson oracle: plain central differences at h and h/2 extrapolate
        // to the same value. b'(0) = 0, so τ = 0 gives a_n = 0 in this gauge;
        // check a generic real point too.
        for &tau in &[c(0.0, 0.0), c(0.5, 0.0)] {
            let es = eigensystem(tau, &p, None).unwrap();
            let central = |h: f64| {
                let a = eigensystem(tau + h, &p, Some(&es)).unwrap();
                let b = eigensystem(tau - h, &p, Some(&es)).unwrap();
                let d = [
                    (a.v1[0] - b.v1[0]) / (2.0 * h),
                    (a.v1[1] - b.v1[1]) / (2.0 * h),
                ];
                -Complex64::i() * bilinear(&es.vl1, &d)
            };
            let r1 = (4.0 * central(1e-3) - central(2e-3)) / 3.0;
            let r2 = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            assert!((r1 - r2).norm() < 1e-8);
            let (_, a1) = berry_connection(tau, &p).unwrap();
            assert!((a1 - r2).norm() < 1e-8);
            assert!(a1.re.is_finite() && a1.im.is_finite());
        }
        assert!(berry_connection(c(0.5, 0.0), &p).unwrap().1.norm() > 1e-3);
    }

    #[test]
    fn berry_connection_is_linear_in_eta() {
        let tau = c(0.5, 0.0);
        let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eta| berry_connection(tau, &params(0.5, eta)).unwrap().1.norm() / eta)
            .collect();
        assert!((vals[0] - vals[1]).abs() < 1e-3 * vals[0]);
        assert!((vals[1] - vals[2]).abs() < 1e-3 * vals[0]);
    }

    #[test]
    fn couplings_lz_closed_form() {
        let p = params(0.5, 0.0);
        for &t in &[-20.0, -1.0, 0.0, 0.5, 3.0] {
            let (p01, p10) = coupling_coefficients(c(t, 0.0), &p).unwrap();
            let want = 0.5 / (1.0 + t * t);
            assert!((p01 - want).norm() < 1e-9, "{t}: {p01}");
            assert!((p10 + want).norm() < 1e-9);
        }
        let (p01, _) = coupling_coefficients(c(0.0, 0.0), &p).unwrap();
        assert!((p01.re - 0.5).abs() < 1e-9);
        let (far, _) = coupling_coefficients(c(1000.0, 0.0), &p).unwrap();
        assert!((far.re * 1e6 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn couplings_exact_match_finite_differences() {
        let p = params(0.5, 1.0);
        for &tau in &[c(0.0, 0.0), c(-2.0, 0.0), c(0.3, 0.4), c(0.1, 1.3)] {
            let (f01, f10) = coupling_coefficients(tau, &p).unwrap();
            let es = eigensystem(tau, &p, None).unwrap();
            let (x01, x10) = coupling_coefficients_exact(&es, &p);
            assert!((f01 - x01).norm() < 1e-8, "{tau}: {f01} vs {x01}");
            assert!((f10 - x10).norm() < 1e-8);
        }
        // anti-hermitian on the real axis
        let es = eigensystem(c(0.4, 0.0), &p, None).unwrap();
        let (p01, p10) = coupling_coefficients_exact(&es, &p);
        assert!((p01 + p10.conj()).norm() < 1e-14);
    }

    #[test]
    fn contour_path_validation() {
        assert!(ContourPath::new(vec![c(0.0, 0.0)], 10).is_err());
        let path = ContourPath::new(vec![c(0.0, 0.0), c(0.0, 0.9995)], 10).unwrap();
        assert!(path
            .check_clearance(&[c(0.0, 1.0)], EXCLUSION_RADIUS)
            .is_err());
        let mut looped = path.clone();
        looped.encircles_singularity = true;
        assert!(looped
            .check_clearance(&[c(0.0, 1.0)], EXCLUSION_RADIUS)
            .is_ok());
        assert!((path.length() - 0.9995).abs() < 1e-15);
    }
}
