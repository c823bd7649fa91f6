//! Real-time propagation of `iδ ∂_τ ψ = h(τ) ψ` and the transition probability.
//!
//! Two independent frames are offered: the diabatic one integrates ψ directly,
//! the adiabatic one integrates the coefficients `cₙ` of
//! `ψ = Σ cₙ e^{−iφₙ}|n⟩` with `φₙ′ = eₙ/δ + aₙ`, so that
//!
//! ```text
//! c₀′ = p₀₁ e^{i(φ₀−φ₁)} c₁,    c₁′ = p₁₀ e^{i(φ₁−φ₀)} c₀.
//! ```

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, Mat2, Vec2};
use crate::model::{
    berry_connection_exact, coupling_coefficients_exact, eigensystem, AdiabaticParams, EigenSystem,
};
use crate::ode::{Dopri5, Stats};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

pub const DEFAULT_TAU_MAX: f64 = 200.0;
pub const DEFAULT_TOL: f64 = 1e-10;

const TOL_RANGE: (f64, f64) = (1e-13, 1e-4);

/// The diabatic frame needs ~10× more steps than the adiabatic one; its local
/// tolerance is tightened so the accumulated norm error stays below 100·tol.
const DIABATIC_TOL_FACTOR: f64 = 0.1;

/// A wavefunction at a real time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub psi: Vec2,
    pub tau: f64,
}

impl StateVector {
    /// `|0(τ)⟩` of the real-axis eigensystem.
    pub fn ground(p: &AdiabaticParams, tau: f64) -> Result<Self> {
        let es = eigensystem(tau.into(), p, None)?;
        Ok(StateVector { psi: es.v0, tau })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.psi)
    }
}

/// Adiabatic-frame coefficients together with the accumulated phases.
///
/// `dynamical[n] = ∫eₙ/δ`, `geometric[n] = ∫aₙ`, both from the start of the
/// run, so `φₙ = dynamical[n] + geometric[n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub c0: Complex64,
    pub c1: Complex64,
    pub dynamical: [f64; 2],
    pub geometric: [f64; 2],
    pub tau: f64,
}

impl AmplitudePair {
    pub fn phase(&self, n: usize) -> f64 {
        self.dynamical[n] + self.geometric[n]
    }

    /// `ψ = Σ cₙ e^{−iφₙ}|n(τ)⟩`.
    pub fn reconstruct(&self, p: &AdiabaticParams) -> Result<StateVector> {
        let es = eigensystem(self.tau.into(), p, None)?;
        let k0 = self.c0 * Complex64::from_polar(1.0, -self.phase(0));
        let k1 = self.c1 * Complex64::from_polar(1.0, -self.phase(1));
        Ok(StateVector {
            psi: [k0 * es.v0[0] + k1 * es.v1[0], k0 * es.v0[1] + k1 * es.v1[1]],
            tau: self.tau,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Diabatic,
    Adiabatic,
}

/// Bookkeeping of one propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    /// `max |‖ψ‖ − 1|` over accepted steps.
    pub norm_drift: f64,
    pub n_steps: usize,
    pub n_rejected: usize,
}

impl RunStats {
    fn from(stats: Stats, norm_drift: f64) -> Self {
        RunStats {
            norm_drift,
            n_steps: stats.accepted,
            n_rejected: stats.rejected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationReport {
    #[serde(rename = "P")]
    pub p: f64,
    pub norm_drift: f64,
    pub n_steps: usize,
    pub n_rejected: usize,
    pub frame: Frame,
    pub tau_max: f64,
    pub tol: f64,
    /// `P < 10³·tol`: the value is at the level of the integration error.
    pub resolution_limited: bool,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(Error::InvalidInput(format!(
            "tol must lie in [{:e}, {:e}], got {tol:e}",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

#[inline]
fn pack2(v: &Vec2) -> [f64; 4] {
    [v[0].re, v[0].im, v[1].re, v[1].im]
}

#[inline]
fn unpack2(y: &[f64]) -> Vec2 {
    [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]
}

/// Integrates `iδ ψ′ = h(τ)ψ` for an arbitrary Hamiltonian `h`.
///
/// `observer` is called after every accepted step.
pub fn propagate_hamiltonian<H, O>(
    h: H,
    delta: f64,
    tau0: f64,
    tau1: f64,
    psi0: &StateVector,
    tol: f64,
    mut observer: O,
) -> Result<(StateVector, RunStats)>
where
    H: Fn(f64) -> Result<Mat2>,
    O: FnMut(&StateVector),
{
    check_tol(tol)?;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        match h(t) {
            Ok(m) => {
                let hp = m.apply(&unpack2(y));
                // ψ′ = −i hψ/δ
                let s = 1.0 / delta;
                [hp[0].im * s, -hp[0].re * s, hp[1].im * s, -hp[1].re * s]
            }
            Err(e) => {
                failure.set(Some(e));
                [0.0; 4]
            }
        }
    };
    let mut drift: f64 = 0.0;
    let (y, stats) =
        Dopri5::new(tol).solve(rhs, tau0, tau1, pack2(&psi0.psi), &[true; 4], |t, y| {
            let s = StateVector {
                psi: unpack2(y),
                tau: t,
            };
            drift = drift.max((s.norm() - 1.0).abs());
            observer(&s);
        })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok((
        StateVector {
            psi: unpack2(&y),
            tau: tau1,
        },
        RunStats::from(stats, drift),
    ))
}

/// Diabatic-frame propagation of the η-family.
///
/// The free phase of the diagonal `τσᶻ` is factored out exactly,
/// `ψ = diag(e^{−iτ²/2δ}, e^{iτ²/2δ})·χ`, leaving
/// `iδχ′ = [[0, β e^{iτ²/δ}], [γ e^{−iτ²/δ}, 0]]·χ` with `β, γ = 1 ± ib`.
/// Without this the norm error of the ~10⁵ steps needed near `|τ| = 200`
/// accumulates well above the tolerance.
pub fn propagate_diabatic(
    p: &AdiabaticParams,
    tau0: f64,
    tau1: f64,
    psi0: &StateVector,
    tol: f64,
) -> Result<(StateVector, RunStats)> {
    propagate_diabatic_observed(p, tau0, tau1, psi0, tol, |_| {})
}

fn free_phase(tau: f64, delta: f64) -> Complex64 {
    // e^{−iτ²/2δ}
    Complex64::from_polar(1.0, -0.5 * tau * tau / delta)
}

pub fn propagate_diabatic_observed<O>(
    p: &AdiabaticParams,
    tau0: f64,
    tau1: f64,
    psi0: &StateVector,
    tol: f64,
    mut observer: O,
) -> Result<(StateVector, RunStats)>
where
    O: FnMut(&StateVector),
{
    check_tol(tol)?;
    let (delta, a) = (p.delta, p.a());
    let to_psi = |t: f64, y: &[f64; 4]| {
        let f = free_phase(t, delta);
        let chi = unpack2(y);
        StateVector {
            psi: [chi[0] * f, chi[1] * f.conj()],
            tau: t,
        }
    };
    let rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let b = a / (1.0 + t * t);
        let rot = Complex64::from_polar(1.0, t * t / delta);
        let chi = unpack2(y);
        // χ′ = −(i/δ)·(β e^{iτ²/δ} χ₁, γ e^{−iτ²/δ} χ₀)
        let m = -Complex64::i() / delta;
        let d0 = m * Complex64::new(1.0, b) * rot * chi[1];
        let d1 = m * Complex64::new(1.0, -b) * rot.conj() * chi[0];
        [d0.re, d0.im, d1.re, d1.im]
    };
    let f = free_phase(tau0, delta);
    let chi0 = [psi0.psi[0] * f.conj(), psi0.psi[1] * f];
    let mut drift: f64 = 0.0;
    let (y, stats) = Dopri5::new(DIABATIC_TOL_FACTOR * tol).solve(
        rhs,
        tau0,
        tau1,
        pack2(&chi0),
        &[true; 4],
        |t, y| {
            let s = to_psi(t, y);
            drift = drift.max((s.norm() - 1.0).abs());
            observer(&s);
        },
    )?;
    Ok((to_psi(tau1, &y), RunStats::from(stats, drift)))
}

/// `∫√(1+τ²) dτ`.
fn lz_gap_antiderivative(tau: f64) -> f64 {
    0.5 * (tau * (1.0 + tau * tau).sqrt() + tau.asinh())
}

/// Adiabatic-frame propagation from `c = (1, 0)` at `tau0`.
///
/// The dynamical phase is split as `∫e₁ = ∫√(1+τ²) + ∫(e₁ − √(1+τ²))`: the
/// first part is evaluated in closed form, the small remainder and the two
/// Berry phases are carried as extra ODE components (absolute error control).
pub fn propagate_adiabatic(
    p: &AdiabaticParams,
    tau0: f64,
    tau1: f64,
    tol: f64,
) -> Result<(AmplitudePair, RunStats)> {
    propagate_adiabatic_observed(p, tau0, tau1, tol, |_| {})
}

pub fn propagate_adiabatic_observed<O>(
    p: &AdiabaticParams,
    tau0: f64,
    tau1: f64,
    tol: f64,
    mut observer: O,
) -> Result<(AmplitudePair, RunStats)>
where
    O: FnMut(&AmplitudePair),
{
    check_tol(tol)?;
    let f0 = lz_gap_antiderivative(tau0);
    let delta = p.delta;
    let failure: Cell<Option<Error>> = Cell::new(None);

    let pair = |t: f64, y: &[f64; 7]| {
        let lz = (lz_gap_antiderivative(t) - f0 + y[4]) / delta;
        AmplitudePair {
            c0: Complex64::new(y[0], y[1]),
            c1: Complex64::new(y[2], y[3]),
            dynamical: [-lz, lz],
            geometric: [y[5], y[6]],
            tau: t,
        }
    };
    let rhs = |t: f64, y: &[f64; 7]| -> [f64; 7] {
        let es: EigenSystem = match eigensystem(t.into(), p, None) {
            Ok(es) => es,
            Err(e) => {
                failure.set(Some(e));
                return [0.0; 7];
            }
        };
        let (p01, p10) = coupling_coefficients_exact(&es, p);
        let (a0, a1) = berry_connection_exact(&es, p);
        let amp = pair(t, y);
        // e^{i(φ₀ − φ₁)}
        let rot = Complex64::from_polar(1.0, amp.phase(0) - amp.phase(1));
        let dc0 = p01 * rot * amp.c1;
        let dc1 = p10 * rot.conj() * amp.c0;
        let lz = (1.0 + t * t).sqrt();
        // e₁ − √(1+τ²) without cancellation
        let excess = (es.e1 * es.e1 - lz * lz) / (es.e1 + lz);
        [dc0.re, dc0.im, dc1.re, dc1.im, excess.re, a0.re, a1.re]
    };
    let mut drift: f64 = 0.0;
    let y0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let relative = [true, true, true, true, false, false, false];
    let (y, stats) = Dopri5::new(tol).solve(rhs, tau0, tau1, y0, &relative, |t, y| {
        let amp = pair(t, y);
        drift = drift.max(((amp.c0.norm_sqr() + amp.c1.norm_sqr()).sqrt() - 1.0).abs());
        observer(&amp);
    })?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok((pair(tau1, &y), RunStats::from(stats, drift)))
}

/// `P = |⟨1(+τ_max)|ψ(+τ_max)⟩|²` for `ψ(−τ_max) = |0(−τ_max)⟩`.
pub fn transition_probability(
    p: &AdiabaticParams,
    tau_max: f64,
    tol: f64,
    frame: Frame,
) -> Result<PropagationReport> {
    if !(tau_max >= 50.0) || !tau_max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tau_max must be at least 50, got {tau_max}"
        )));
    }
    let (prob, stats) = match frame {
        Frame::Diabatic => {
            let psi0 = StateVector::ground(p, -tau_max)?;
            let (psi, stats) = propagate_diabatic(p, -tau_max, tau_max, &psi0, tol)?;
            let es = eigensystem(tau_max.into(), p, None)?;
            (inner(&es.v1, &psi.psi).norm_sqr(), stats)
        }
        Frame::Adiabatic => {
            let (amp, stats) = propagate_adiabatic(p, -tau_max, tau_max, tol)?;
            (amp.c1.norm_sqr(), stats)
        }
    };
    Ok(PropagationReport {
        p: prob,
        norm_drift: stats.norm_drift,
        n_steps: stats.n_steps,
        n_rejected: stats.n_rejected,
        frame,
        tau_max,
        tol,
        resolution_limited: prob < 1e3 * tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hamiltonian;

    fn params(delta: f64, eta: f64) -> AdiabaticParams {
        AdiabaticParams::new(delta, eta).unwrap()
    }

    #[test]
    fn constant_hamiltonian_matches_matrix_exponential() {
        let h = Mat2::new(
            Complex64::new(0.3, 0.0),
            Complex64::new(1.0, 0.4),
            Complex64::new(1.0, -0.4),
            Complex64::new(-0.3, 0.0),
        );
        let delta = 0.7;
        let psi0 = StateVector {
            psi: [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            tau: 0.0,
        };
        let t = 13.0;
        let (psi, _) =
            propagate_hamiltonian(|_| Ok(h), delta, 0.0, t, &psi0, 1e-12, |_| {}).unwrap();
        let want = h
            .scale(Complex64::new(0.0, -t / delta))
            .exp()
            .apply(&psi0.psi);
        for k in 0..2 {
            assert!(
                (psi.psi[k] - want[k]).norm() < 1e-9,
                "{:?} vs {:?}",
                psi.psi,
                want
            );
        }
    }

    #[test]
    fn landau_zener_value() {
        // e^{−2π} = 1.8674e−3
        let r = transition_probability(&params(0.5, 0.0), 200.0, 1e-10, Frame::Diabatic).unwrap();
        assert!(
            (r.p / (-2.0 * std::f64::consts::PI).exp() - 1.0).abs() < 0.02,
            "{}",
            r.p
        );
        assert!(r.norm_drift <= 100.0 * 1e-10, "drift {}", r.norm_drift);
        assert!(!r.resolution_limited);
    }

    #[test]
    fn frames_agree() {
        for (d, e) in [(0.5, 0.0), (0.3, 0.5), (0.8, 0.75)] {
            let p = params(d, e);
            let a = transition_probability(&p, 200.0, 1e-10, Frame::Diabatic).unwrap();
            let b = transition_probability(&p, 200.0, 1e-10, Frame::Adiabatic).unwrap();
            assert!((a.p - b.p).abs() <= 1e-6, "δ={d} η={e}: {} vs {}", a.p, b.p);
            assert!(b.norm_drift <= 1e-8, "drift {}", b.norm_drift);
        }
    }

    #[test]
    fn reconstruction_matches_diabatic_state() {
        let p = params(0.5, 0.5);
        let (amp, _) = propagate_adiabatic(&p, -60.0, 7.0, 1e-11).unwrap();
        let psi0 = StateVector::ground(&p, -60.0).unwrap();
        let (psi, _) = propagate_diabatic(&p, -60.0, 7.0, &psi0, 1e-11).unwrap();
        let rec = amp.reconstruct(&p).unwrap();
        for k in 0..2 {
            assert!((rec.psi[k] - psi.psi[k]).norm() < 1e-6);
        }
    }

    #[test]
    fn counterdiabatic_state_follows_the_bare_eigenstate() {
        // at η = 1 the bare Landau-Zener eigenstates solve the dynamics exactly
        let p = params(0.5, 1.0);
        let bare = p.with_eta(0.0);
        let psi0 = StateVector::ground(&bare, -200.0).unwrap();
        let mut worst: f64 = 0.0;
        propagate_hamiltonian(
            |t| hamiltonian(t.into(), &p),
            p.delta,
            -200.0,
            200.0,
            &psi0,
            1e-10,
            |s| {
                let es = eigensystem(s.tau.into(), &bare, None).unwrap();
                worst = worst.max(inner(&es.v1, &s.psi).norm_sqr());
            },
        )
        .unwrap();
        assert!(worst <= 1e-8, "{worst}");
        let r = transition_probability(&p, 200.0, 1e-10, Frame::Adiabatic).unwrap();
        assert!(r.p <= 1e-8 && r.resolution_limited);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let p = params(0.5, 0.0);
        assert!(transition_probability(&p, 200.0, 1e-3, Frame::Diabatic).is_err());
        assert!(transition_probability(&p, 10.0, 1e-10, Frame::Diabatic).is_err());
    }
}
