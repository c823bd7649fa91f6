//! Flatness checks for commuting families of real symmetric operators and
//! their adiabatic gauge potentials.
//!
//! A family `H_μ(x)`, `μ = 1..n`, is flat when `∂_μH_ν = ∂_νH_μ` and
//! `[H_μ, H_ν] = 0`. Its AGPs `A_μ = −iU∂_μU†` (columns of `U` the common
//! eigenvectors) are obtained numerically, and the corrected family `H + A`
//! is checked to satisfy `∂_μ(H_ν+A_ν) − ∂_ν(H_μ+A_μ) + i[H_μ+A_μ, H_ν+A_ν] = 0`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Inner finite-difference step for first derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Outer step for derivatives of the AGPs themselves.
pub const DEFAULT_NESTED_STEP: f64 = 1e-4;
/// Smallest spectral gap of the generic combination accepted.
pub const MIN_GAP: f64 = 1e-6;
const COLLISION: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-13;

type Evaluator = dyn Fn(&[f64]) -> Result<Vec<RMat>> + Send + Sync;
/// `partials(x)[μ][ν] = ∂_ν H_μ(x)`.
type Partials = dyn Fn(&[f64]) -> Result<Vec<Vec<RMat>>> + Send + Sync;

/// A parameter-dependent family of real symmetric `dim × dim` matrices.
pub struct OperatorFamily {
    pub n_params: usize,
    pub dim: usize,
    evaluator: Box<Evaluator>,
    partials: Option<Box<Partials>>,
    /// Constant additions per member, applied on top of the evaluator.
    offsets: Vec<Option<RMat>>,
}

impl std::fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("n_params", &self.n_params)
            .field("dim", &self.dim)
            .field("analytic_partials", &self.partials.is_some())
            .finish()
    }
}

impl OperatorFamily {
    pub fn new<F>(n_params: usize, dim: usize, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<RMat>> + Send + Sync + 'static,
    {
        OperatorFamily {
            n_params,
            dim,
            evaluator: Box::new(evaluator),
            partials: None,
            offsets: vec![None; n_params],
        }
    }

    pub fn with_partials<F>(mut self, partials: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<Vec<RMat>>> + Send + Sync + 'static,
    {
        self.partials = Some(Box::new(partials));
        self
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    /// Adds the constant symmetric matrix `m` to `H_μ`. Derivatives are
    /// unchanged, but commutativity generally breaks.
    pub fn perturbed(mut self, mu: usize, m: RMat) -> Result<Self> {
        if mu >= self.n_params || m.shape() != (self.dim, self.dim) {
            return Err(Error::InvalidInput(format!(
                "bad perturbation of member {mu}"
            )));
        }
        self.offsets[mu] = Some(match self.offsets[mu].take() {
            Some(o) => o + m,
            None => m,
        });
        Ok(self)
    }

    /// `[H_1(x), …, H_n(x)]`, each checked for symmetry.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<RMat>> {
        if x.len() != self.n_params {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.n_params,
                x.len()
            )));
        }
        let mut hs = (self.evaluator)(x)?;
        if hs.len() != self.n_params {
            return Err(Error::InvalidInput("evaluator returned wrong count".into()));
        }
        for (h, o) in hs.iter_mut().zip(&self.offsets) {
            if let Some(o) = o {
                *h += o;
            }
            if h.shape() != (self.dim, self.dim) || max_abs(&(&*h - h.transpose())) > SYMMETRY_TOL {
                return Err(Error::InvalidInput("family member not symmetric".into()));
            }
        }
        Ok(hs)
    }

    /// `∂_ν H_μ` indexed `[μ][ν]`: analytic when available, otherwise
    /// Richardson-extrapolated central differences with step `h`.
    pub fn partials(&self, x: &[f64], h: f64) -> Result<Vec<Vec<RMat>>> {
        if let Some(p) = &self.partials {
            return p(x);
        }
        let mut out = vec![Vec::with_capacity(self.n_params); self.n_params];
        for nu in 0..self.n_params {
            let d = richardson(|s| shifted(x, nu, s), h, |y| self.evaluate(y))?;
            for (mu, m) in d.into_iter().enumerate() {
                out[mu].push(m);
            }
        }
        Ok(out)
    }
}

fn shifted(x: &[f64], nu: usize, s: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[nu] += s;
    y
}

/// Extrapolated central difference of a list of matrices along the
/// direction selected by `at`.
fn richardson<G, F>(at: G, h: f64, f: F) -> Result<Vec<RMat>>
where
    G: Fn(f64) -> Vec<f64>,
    F: Fn(&[f64]) -> Result<Vec<RMat>>,
{
    let central = |h: f64| -> Result<Vec<RMat>> {
        let (p, m) = (f(&at(h))?, f(&at(-h))?);
        Ok(p.iter().zip(&m).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    };
    let (d1, d2) = (central(h)?, central(h / 2.0)?);
    Ok(d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect())
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

fn comm(a: &RMat, b: &RMat) -> RMat {
    a * b - b * a
}

fn comm_c(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

fn complexify(m: &RMat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in ascending order with the matching
/// eigenvectors as columns.
pub fn jacobi_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = RMat::identity(n, n);
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = RMat::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Fixed generic combination coefficients.
fn default_combination(n: usize) -> Vec<f64> {
    // fractional parts of multiples of the golden ratio: distinct and
    // irrationally related
    (1..=n)
        .map(|k| 0.3 + (k as f64 * 0.618_033_988_749_894_9).fract())
        .collect()
}

/// Common eigenbasis of a commuting family.
#[derive(Debug, Clone)]
pub struct Eigenbasis {
    /// Columns are the eigenvectors, ordered by the combination's eigenvalues.
    pub u: RMat,
    pub combination_eigenvalues: Vec<f64>,
    pub min_gap: f64,
}

/// Diagonalises `Σ c_μ H_μ` and fixes each column's sign so that its
/// largest-magnitude component is positive.
pub fn eigenbasis(hs: &[RMat], c: &[f64]) -> Result<Eigenbasis> {
    let mut comb = RMat::zeros(hs[0].nrows(), hs[0].ncols());
    for (h, w) in hs.iter().zip(c) {
        comb += h * *w;
    }
    let (values, mut u) = jacobi_eigen(&comb);
    let min_gap = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_gap < MIN_GAP {
        return Err(Error::Degeneracy(format!(
            "generic combination has spectral gap {min_gap:e}"
        )));
    }
    for mut col in u.column_iter_mut() {
        let big = col
            .iter()
            .copied()
            .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if big < 0.0 {
            col.neg_mut();
        }
    }
    Ok(Eigenbasis {
        u,
        combination_eigenvalues: values,
        min_gap,
    })
}

/// Permutes and sign-flips the columns of `u` to maximise overlap with
/// `reference`.
fn align(reference: &RMat, u: &RMat) -> RMat {
    let overlap = reference.transpose() * u;
    let mut out = u.clone();
    for j in 0..u.ncols() {
        let (k, s) = (0..u.ncols())
            .map(|k| (k, overlap[(j, k)]))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty");
        out.set_column(j, &(u.column(k) * s.signum()));
    }
    out
}

/// Configuration of the numerical AGP and flatness checks.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessConfig {
    pub fd_step: f64,
    pub nested_step: f64,
    /// Generic combination coefficients; `None` for the built-in choice.
    pub combination: Option<Vec<f64>>,
    /// Multiplies every AGP before the corrected check (1 for the identity).
    pub agp_scale: f64,
}

impl Default for FlatnessConfig {
    fn default() -> Self {
        FlatnessConfig {
            fd_step: DEFAULT_FD_STEP,
            nested_step: DEFAULT_NESTED_STEP,
            combination: None,
            agp_scale: 1.0,
        }
    }
}

impl FlatnessConfig {
    fn coefficients(&self, n: usize) -> Result<Vec<f64>> {
        match &self.combination {
            Some(c) if c.len() == n => Ok(c.clone()),
            Some(c) => Err(Error::InvalidInput(format!(
                "{} combination coefficients for {n} parameters",
                c.len()
            ))),
            None => Ok(default_combination(n)),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |h: f64| h.is_finite() && h > 0.0 && h < 1.0;
        if !ok(self.fd_step) || !ok(self.nested_step) || !self.agp_scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bad flatness configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Flatness residuals at one parameter point. Matrix norms are max-abs over
/// entries and maxima over pairs `μ < ν`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub sym_residual: f64,
    pub comm_residual: f64,
    pub corrected_residual: Option<f64>,
    /// `∂_μA_ν − ∂_νA_μ + i[A_μ, A_ν]`.
    pub agp_flatness: Option<f64>,
    /// `[H_μ, A_ν] − [H_ν, A_μ]`.
    pub cross_commutator: Option<f64>,
    /// `∂_μE_{ν,n} − ∂_νE_{μ,n}` over all levels `n`.
    pub eigenvalue_curl: Option<f64>,
    /// Largest deviation of an AGP from hermiticity.
    pub hermiticity_defect: Option<f64>,
    pub fd_step: f64,
    pub min_gap: Option<f64>,
    pub params: Vec<f64>,
}

/// Derivative symmetry and commutator residuals only.
pub fn flatness_residual(f: &OperatorFamily, x: &[f64], fd_step: f64) -> Result<FlatnessReport> {
    let hs = f.evaluate(x)?;
    let d = f.partials(x, fd_step)?;
    let mut sym: f64 = 0.0;
    let mut cm: f64 = 0.0;
    for mu in 0..f.n_params {
        for nu in mu + 1..f.n_params {
            sym = sym.max(max_abs(&(&d[nu][mu] - &d[mu][nu])));
            cm = cm.max(max_abs(&comm(&hs[mu], &hs[nu])));
        }
    }
    Ok(FlatnessReport {
        sym_residual: sym,
        comm_residual: cm,
        corrected_residual: None,
        agp_flatness: None,
        cross_commutator: None,
        eigenvalue_curl: None,
        hermiticity_defect: None,
        fd_step,
        min_gap: None,
        params: x.to_vec(),
    })
}

/// Real antisymmetric `K_μ = (∂_μU)Uᵀ` for every `μ`; `A_μ = iK_μ`.
fn agp_generators(
    f: &OperatorFamily,
    x: &[f64],
    cfg: &FlatnessConfig,
) -> Result<(Vec<RMat>, Eigenbasis)> {
    let c = cfg.coefficients(f.n_params)?;
    let base = eigenbasis(&f.evaluate(x)?, &c)?;
    let mut ks = Vec::with_capacity(f.n_params);
    for mu in 0..f.n_params {
        let du = richardson(
            |s| shifted(x, mu, s),
            cfg.fd_step,
            |y| Ok(vec![align(&base.u, &eigenbasis(&f.evaluate(y)?, &c)?.u)]),
        )?;
        ks.push(&du[0] * base.u.transpose());
    }
    Ok((ks, base))
}

/// The AGP `A_μ = −iU∂_μU†` at `x`: Hermitian with purely imaginary,
/// antisymmetric entries.
pub fn numerical_agp(
    f: &OperatorFamily,
    x: &[f64],
    mu: usize,
    cfg: &FlatnessConfig,
) -> Result<CMat> {
    cfg.validate()?;
    if mu >= f.n_params {
        return Err(Error::InvalidInput(format!("no parameter {mu}")));
    }
    let (ks, _) = agp_generators(f, x, cfg)?;
    Ok(ks[mu].map(|v| Complex64::new(0.0, v)))
}

/// Full report including the AGP-corrected residual and the intermediate
/// identities. Derivatives of the AGPs use central differences with
/// `nested_step` around AGPs built with `fd_step`.
pub fn corrected_flatness_residual(
    f: &OperatorFamily,
    x: &[f64],
    cfg: &FlatnessConfig,
) -> Result<FlatnessReport> {
    cfg.validate()?;
    let mut report = flatness_residual(f, x, cfg.fd_step)?;
    let n = f.n_params;
    let hs = f.evaluate(x)?;
    let dh = f.partials(x, cfg.fd_step)?;
    let (ks, base) = agp_generators(f, x, cfg)?;
    let i = Complex64::i();
    let a: Vec<CMat> = ks
        .iter()
        .map(|k| complexify(k) * (i * cfg.agp_scale))
        .collect();

    // da[ν][μ] = ∂_μ A_ν
    let mut da: Vec<Vec<CMat>> = vec![Vec::with_capacity(n); n];
    let h = cfg.nested_step;
    for mu in 0..n {
        let (p, _) = agp_generators(f, &shifted(x, mu, h), cfg)?;
        let (m, _) = agp_generators(f, &shifted(x, mu, -h), cfg)?;
        for nu in 0..n {
            da[nu].push(complexify(&((&p[nu] - &m[nu]) / (2.0 * h))) * (i * cfg.agp_scale));
        }
    }

    // eigenvalue derivatives: de[ν][μ][n] = ∂_μ E_{ν,n}
    let c = cfg.coefficients(n)?;
    let levels = |y: &[f64]| -> Result<Vec<RMat>> {
        let hy = f.evaluate(y)?;
        let u = align(&base.u, &eigenbasis(&hy, &c)?.u);
        Ok(hy
            .iter()
            .map(|h| {
                let d = u.transpose() * h * &u;
                RMat::from_fn(d.nrows(), 1, |r, _| d[(r, r)])
            })
            .collect())
    };
    let mut de: Vec<Vec<RMat>> = vec![Vec::with_capacity(n); n];
    for mu in 0..n {
        let d = richardson(|s| shifted(x, mu, s), cfg.fd_step, levels)?;
        for (nu, m) in d.into_iter().enumerate() {
            de[nu].push(m);
        }
    }

    let (mut corrected, mut flat, mut cross, mut curl): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for mu in 0..n {
        for nu in mu + 1..n {
            let (hm, hn) = (complexify(&hs[mu]), complexify(&hs[nu]));
            let dh_sym = complexify(&(&dh[nu][mu] - &dh[mu][nu]));
            let curl_a = &da[nu][mu] - &da[mu][nu];
            let total = &dh_sym + &curl_a + comm_c(&(&hm + &a[mu]), &(&hn + &a[nu])) * i;
            corrected = corrected.max(max_abs_c(&total));
            flat = flat.max(max_abs_c(&(curl_a + comm_c(&a[mu], &a[nu]) * i)));
            cross = cross.max(max_abs_c(&(comm_c(&hm, &a[nu]) - comm_c(&hn, &a[mu]))));
            curl = curl.max(max_abs(&(&de[nu][mu] - &de[mu][nu])));
        }
    }
    let herm = a
        .iter()
        .map(|m| max_abs_c(&(m - m.adjoint())))
        .fold(0.0, f64::max);
    report.corrected_residual = Some(corrected);
    report.agp_flatness = Some(flat);
    report.cross_commutator = Some(cross);
    report.eigenvalue_curl = Some(curl);
    report.hermiticity_defect = Some(herm);
    report.min_gap = Some(base.min_gap);
    Ok(report)
}

fn pauli() -> [RMat; 3] {
    // σʸ enters only through σʸ⊗σʸ, which is real: store −iσʸ and flip
    // the sign of that product
    [
        RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
    ]
}

/// `op` acting on spin `site` of `n`.
fn embed(op: &RMat, site: usize, n: usize) -> RMat {
    let mut out = RMat::identity(1, 1);
    for s in 0..n {
        let f = if s == site {
            op.clone()
        } else {
            RMat::identity(2, 2)
        };
        out = out.kronecker(&f);
    }
    out
}

/// `σ⃗_i·σ⃗_j` on `n` spins.
pub fn spin_exchange(i: usize, j: usize, n: usize) -> RMat {
    let [x, iy, z] = pauli();
    let xx = embed(&x, i, n) * embed(&x, j, n);
    // (−iσʸ)(−iσʸ) = −σʸσʸ
    let yy = -(embed(&iy, i, n) * embed(&iy, j, n));
    let zz = embed(&z, i, n) * embed(&z, j, n);
    xx + yy + zz
}

/// `σ^z` on spin `i` of `n`.
pub fn sigma_z(i: usize, n: usize) -> RMat {
    embed(&pauli()[2], i, n)
}

/// `σ^x` on spin `i` of `n`.
pub fn sigma_x(i: usize, n: usize) -> RMat {
    embed(&pauli()[0], i, n)
}

fn check_collisions(eps: &[f64]) -> Result<()> {
    for i in 0..eps.len() {
        for j in i + 1..eps.len() {
            let d = (eps[i] - eps[j]).abs();
            if d < COLLISION || !d.is_finite() {
                return Err(Error::ParameterCollision { i, j, distance: d });
            }
        }
    }
    Ok(())
}

/// Gaudin magnets in a field: `H_i = B σᶻ_i + Σ_{j≠i} σ⃗_i·σ⃗_j / (ε_i − ε_j)`
/// over parameters `ε`, with analytic partials.
pub fn gaudin_family(n_spins: usize, b: f64) -> Result<OperatorFamily> {
    if !(2..=3).contains(&n_spins) {
        return Err(Error::InvalidInput(format!(
            "{n_spins} spins; supported are 2 and 3"
        )));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::InvalidInput(
            "field B must be finite and non-zero".into(),
        ));
    }
    let n = n_spins;
    let dim = 1 << n;
    let ex: Vec<Vec<RMat>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        RMat::zeros(dim, dim)
                    } else {
                        spin_exchange(i, j, n)
                    }
                })
                .collect()
        })
        .collect();
    let zs: Vec<RMat> = (0..n).map(|i| sigma_z(i, n) * b).collect();
    let ex2 = ex.clone();
    let family = OperatorFamily::new(n, dim, move |eps| {
        check_collisions(eps)?;
        Ok((0..n)
            .map(|i| {
                let mut h = zs[i].clone();
                for j in (0..n).filter(|&j| j != i) {
                    h += &ex[i][j] / (eps[i] - eps[j]);
                }
                h
            })
            .collect())
    })
    .with_partials(move |eps| {
        check_collisions(eps)?;
        Ok((0..n)
            .map(|i| {
                let mut d: Vec<RMat> = (0..n)
                    .map(|j| {
                        if j == i {
                            RMat::zeros(dim, dim)
                        } else {
                            &ex2[i][j] / (eps[i] - eps[j]).powi(2)
                        }
                    })
                    .collect();
                let diag = (0..n)
                    .filter(|&j| j != i)
                    .fold(RMat::zeros(dim, dim), |acc, j| acc - &d[j]);
                d[i] = diag;
                d
            })
            .collect())
    });
    Ok(family)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs() {
        let m = RMat::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.25, 0.5, 0.25, -1.0]);
        let (w, v) = jacobi_eigen(&m);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let back = &v * RMat::from_diagonal(&nalgebra::DVector::from_vec(w)) * v.transpose();
        assert!(max_abs(&(back - &m)) < 1e-14);
        assert!(max_abs(&(v.transpose() * &v - RMat::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn exchange_is_real_symmetric_with_singlet() {
        let e = spin_exchange(0, 1, 2);
        assert!(max_abs(&(&e - e.transpose())) == 0.0);
        // triplet +1, singlet −3
        let (w, _) = jacobi_eigen(&e);
        assert!((w[0] + 3.0).abs() < 1e-14 && w[1..].iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn gaudin_pair_sums_to_field() {
        let f = gaudin_family(2, 1.0).unwrap();
        let hs = f.evaluate(&[0.0, 1.0]).unwrap();
        let sum = &hs[0] + &hs[1];
        assert!(max_abs(&(sum - (sigma_z(0, 2) + sigma_z(1, 2)))) < 1e-15);
        assert!(max_abs(&comm(&hs[0], &hs[1])) <= 1e-13);
    }

    #[test]
    fn analytic_partials_match_differences() {
        let f = gaudin_family(2, 1.0).unwrap();
        let x = [0.0, 1.0];
        let analytic = f.partials(&x, 1e-5).unwrap();
        let h = 1e-5;
        let fd = (&f.evaluate(&[0.0, 1.0 + h]).unwrap()[0]
            - &f.evaluate(&[0.0, 1.0 - h]).unwrap()[0])
            / (2.0 * h);
        assert!(max_abs(&(fd - &analytic[0][1])) < 1e-9);
    }

    #[test]
    fn collisions_are_rejected() {
        let f = gaudin_family(3, 1.0).unwrap();
        assert!(matches!(
            f.evaluate(&[0.0, 1.0, 1.0 + 1e-9]),
            Err(Error::ParameterCollision { i: 1, j: 2, .. })
        ));
        assert!(gaudin_family(4, 1.0).is_err());
        assert!(gaudin_family(2, 0.0).is_err());
    }
}
