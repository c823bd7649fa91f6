//! The field `Δ(τ) = Im∫₀^τ(e₀ − e₁)dτ′` on a grid of the complex τ plane, and
//! its level lines.
//!
//! Each cell is integrated along the straight ray from the origin, following
//! the eigenvalue branch by nearest-value matching. Cells whose ray crosses a
//! cut or passes too close to an AGP pole are masked.

use crate::cuts::CutSpec;
use crate::ddp::branch_points;
use crate::error::{Error, Result};
use crate::model::{AdiabaticParams, ComplexPoint, EXCLUSION_RADIUS};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;

/// Minimum number of integration steps per unit length of the ray.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 64.0;
const MAX_DOUBLINGS: u32 = 12;
/// Agreement required between successive step doublings.
const REFINE_TOL: f64 = 1e-10;

const GL_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Uniform grid with inclusive end points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_range: (-2.5, 2.5),
            im_range: (0.0, 2.2),
            n_re: 400,
            n_im: 300,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if !ok(self.re_range) || !ok(self.im_range) || self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidInput(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    /// Halves the spacing; node `(k, j)` of `self` is node `(2k, 2j)` of the
    /// result.
    pub fn refined(&self) -> Self {
        GridSpec {
            n_re: 2 * self.n_re - 1,
            n_im: 2 * self.n_im - 1,
            ..*self
        }
    }

    pub fn re(&self, k: usize) -> f64 {
        let (a, b) = self.re_range;
        a + (b - a) * k as f64 / (self.n_re - 1) as f64
    }

    pub fn im(&self, j: usize) -> f64 {
        let (a, b) = self.im_range;
        a + (b - a) * j as f64 / (self.n_im - 1) as f64
    }

    pub fn point(&self, k: usize, j: usize) -> ComplexPoint {
        Complex64::new(self.re(k), self.im(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskReason {
    /// Ray passes within the exclusion radius of an AGP pole.
    PoleProximity,
    /// Ray crosses a registered cut.
    CutCrossing,
    /// Branch continuation was ambiguous.
    Continuation,
    /// Step doubling did not reach the agreement tolerance.
    Unresolved,
}

/// Δ values in row-major order (`index = j·n_re + k`, row `j` at `im(j)`);
/// masked cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<Option<MaskReason>>,
}

impl FieldGrid {
    #[inline]
    pub fn index(&self, k: usize, j: usize) -> usize {
        j * self.spec.n_re + k
    }

    pub fn get(&self, k: usize, j: usize) -> Option<f64> {
        let i = self.index(k, j);
        match self.mask[i] {
            None => Some(self.values[i]),
            Some(_) => None,
        }
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| m.is_some()).count()
    }

    /// CSV with header `re,im,delta,masked`, one row per cell, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,delta,masked\n");
        for j in 0..self.spec.n_im {
            for k in 0..self.spec.n_re {
                let i = self.index(k, j);
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    self.spec.re(k),
                    self.spec.im(j),
                    self.values[i],
                    u8::from(self.mask[i].is_some())
                );
            }
        }
        out
    }

    /// Largest `|Δ|` over unmasked cells of the row nearest `im = 0`.
    pub fn real_axis_max(&self) -> Option<f64> {
        let j = (0..self.spec.n_im)
            .min_by(|&x, &y| self.spec.im(x).abs().total_cmp(&self.spec.im(y).abs()))?;
        if self.spec.im(j).abs() > 1e-14 {
            return None;
        }
        Some(
            (0..self.spec.n_re)
                .filter_map(|k| self.get(k, j))
                .fold(0.0, |m, v| m.max(v.abs())),
        )
    }

    /// Largest difference against a field on the same grid, over cells
    /// unmasked in both.
    pub fn max_difference(&self, other: &FieldGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest difference against a field on the [`GridSpec::refined`] grid,
    /// over cells unmasked in both.
    pub fn max_refinement_difference(&self, fine: &FieldGrid) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.spec.n_im {
            for k in 0..self.spec.n_re {
                if let (Some(a), Some(b)) = (self.get(k, j), fine.get(2 * k, 2 * j)) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// `e₁` at `τ` on the branch nearest `prev`.
#[inline]
fn continue_e1(tau: Complex64, a: f64, prev: Complex64) -> Result<Complex64> {
    let w = 1.0 + tau * tau;
    let r = if a == 0.0 {
        w.sqrt()
    } else {
        let b = a / w;
        (w + b * b).sqrt()
    };
    let (dp, dm) = ((r - prev).norm(), (r + prev).norm());
    if (dp - dm).abs() < 1e-10 {
        return Err(Error::Continuation {
            re: tau.re,
            im: tau.im,
        });
    }
    Ok(if dp < dm { r } else { -r })
}

/// `∫₀^τ (e₀ − e₁)` along the ray with `n` Gauss-Legendre panels.
fn ray_integral(tau: Complex64, a: f64, n: usize) -> Result<Complex64> {
    let mut prev = Complex64::new((1.0 + a * a).sqrt(), 0.0);
    let h = 1.0 / n as f64;
    let mut sum = Complex64::default();
    for step in 0..n {
        let t0 = step as f64 * h;
        for (x, w) in GL_X.iter().zip(GL_W) {
            let t = t0 + 0.5 * h * (1.0 + x);
            prev = continue_e1(tau * t, a, prev)?;
            sum += prev * w;
        }
    }
    // e₀ − e₁ = −2e₁; dτ′ = τ dt; the panel weights sum to 2
    Ok(-2.0 * sum * (0.5 * h) * tau)
}

/// `Δ(τ)` with step doubling until successive values agree.
pub fn delta_at(p: &AdiabaticParams, tau: ComplexPoint) -> Result<f64> {
    delta_at_sampled(p, tau, DEFAULT_STEPS_PER_UNIT)
}

/// [`delta_at`] starting from `steps_per_unit` panels per unit length.
pub fn delta_at_sampled(
    p: &AdiabaticParams,
    tau: ComplexPoint,
    steps_per_unit: f64,
) -> Result<f64> {
    let a = p.a();
    let mut n = ((tau.norm() * steps_per_unit).ceil() as usize).max(64);
    let mut prev = ray_integral(tau, a, n)?.im;
    for _ in 0..MAX_DOUBLINGS {
        n *= 2;
        let next = ray_integral(tau, a, n)?.im;
        if (next - prev).abs() <= REFINE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: f64::NAN,
        subdivisions: n,
    })
}

fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0)
    };
    (a + d * t - z).norm()
}

/// The cuts used by [`delta_field`] by default.
pub fn default_cuts(p: &AdiabaticParams) -> CutSpec {
    CutSpec::standard(&branch_points(p).upper, p.eta != 0.0)
}

/// Evaluates a single cell: `Ok(value)` or the reason it is masked.
pub fn cell(
    p: &AdiabaticParams,
    tau: ComplexPoint,
    cuts: &CutSpec,
) -> std::result::Result<f64, MaskReason> {
    cell_sampled(p, tau, cuts, DEFAULT_STEPS_PER_UNIT)
}

fn cell_sampled(
    p: &AdiabaticParams,
    tau: ComplexPoint,
    cuts: &CutSpec,
    steps_per_unit: f64,
) -> std::result::Result<f64, MaskReason> {
    let origin = Complex64::default();
    if p.eta != 0.0 {
        let i = Complex64::i();
        if segment_distance(origin, tau, i) < EXCLUSION_RADIUS
            || segment_distance(origin, tau, -i) < EXCLUSION_RADIUS
        {
            return Err(MaskReason::PoleProximity);
        }
    }
    if cuts.crosses(origin, tau) {
        return Err(MaskReason::CutCrossing);
    }
    match delta_at_sampled(p, tau, steps_per_unit) {
        Ok(v) => Ok(v),
        Err(Error::Continuation { .. }) => Err(MaskReason::Continuation),
        Err(_) => Err(MaskReason::Unresolved),
    }
}

/// Fills the grid (in parallel over cells; assembly is by index, so the
/// result does not depend on scheduling).
pub fn delta_field(p: &AdiabaticParams, spec: &GridSpec, cuts: &CutSpec) -> Result<FieldGrid> {
    delta_field_sampled(p, spec, cuts, DEFAULT_STEPS_PER_UNIT)
}

/// [`delta_field`] with a different initial path sampling density.
pub fn delta_field_sampled(
    p: &AdiabaticParams,
    spec: &GridSpec,
    cuts: &CutSpec,
    steps_per_unit: f64,
) -> Result<FieldGrid> {
    spec.validate()?;
    if !(steps_per_unit >= 1.0 && steps_per_unit.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "bad sampling density {steps_per_unit}"
        )));
    }
    let cells: Vec<std::result::Result<f64, MaskReason>> = (0..spec.n_re * spec.n_im)
        .into_par_iter()
        .map(|i| {
            cell_sampled(
                p,
                spec.point(i % spec.n_re, i / spec.n_re),
                cuts,
                steps_per_unit,
            )
        })
        .collect();
    let values = cells
        .iter()
        .map(|c| *c.as_ref().unwrap_or(&f64::NAN))
        .collect();
    let mask = cells.iter().map(|c| c.err()).collect();
    Ok(FieldGrid {
        spec: *spec,
        values,
        mask,
    })
}

/// Polylines of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

/// Grid edge carrying a contour crossing: horizontal from `(k, j)` to
/// `(k+1, j)`, or vertical from `(k, j)` to `(k, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Marching squares with linear interpolation. Cells with a masked corner
/// produce nothing, so contours break at the mask.
pub fn level_lines(field: &FieldGrid, levels: &[f64]) -> Vec<LevelSet> {
    levels
        .iter()
        .map(|&level| LevelSet {
            level,
            polylines: contour(field, level),
        })
        .collect()
}

fn contour(field: &FieldGrid, level: f64) -> Vec<Vec<[f64; 2]>> {
    let spec = &field.spec;
    let point = |e: Edge| -> [f64; 2] {
        let ((k0, j0), (k1, j1)) = match e {
            Edge::H(k, j) => ((k, j), (k + 1, j)),
            Edge::V(k, j) => ((k, j), (k, j + 1)),
        };
        let (v0, v1) = (
            field.values[field.index(k0, j0)],
            field.values[field.index(k1, j1)],
        );
        let t = if v1 == v0 {
            0.5
        } else {
            (level - v0) / (v1 - v0)
        };
        [
            spec.re(k0) + t * (spec.re(k1) - spec.re(k0)),
            spec.im(j0) + t * (spec.im(j1) - spec.im(j0)),
        ]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..spec.n_im - 1 {
        for k in 0..spec.n_re - 1 {
            let corners = [
                field.get(k, j),
                field.get(k + 1, j),
                field.get(k + 1, j + 1),
                field.get(k, j + 1),
            ];
            if corners.iter().any(|c| c.is_none()) {
                continue;
            }
            let v: Vec<f64> = corners.iter().map(|c| c.unwrap()).collect();
            let above: Vec<bool> = v.iter().map(|&x| x >= level).collect();
            // edges in cyclic order: bottom, right, top, left
            let edges = [
                Edge::H(k, j),
                Edge::V(k + 1, j),
                Edge::H(k, j + 1),
                Edge::V(k, j),
            ];
            let cut: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    // saddle: decide by the cell centre
                    let centre = v.iter().sum::<f64>() / 4.0 >= level;
                    if centre == above[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    // stitch segments sharing an edge into polylines
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        at.entry(*a).or_default().push(s);
        at.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let other = |s: usize, e: Edge| {
        if segments[s].0 == e {
            segments[s].1
        } else {
            segments[s].0
        }
    };
    let walk = |start: Edge, first: usize, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![start];
        let mut s = first;
        let mut e = start;
        loop {
            used[s] = true;
            e = other(s, e);
            chain.push(e);
            match at[&e].iter().copied().find(|&n| !used[n]) {
                Some(n) => s = n,
                None => break,
            }
        }
        chain
    };
    // open chains first (start at an edge of degree 1), then closed loops
    let mut starts: Vec<(Edge, usize)> = segments
        .iter()
        .enumerate()
        .flat_map(|(s, (a, b))| [(*a, s), (*b, s)])
        .filter(|(e, _)| at[e].len() == 1)
        .collect();
    starts.sort();
    for (e, s) in starts {
        if !used[s] {
            lines.push(walk(e, s, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(segments[s].0, s, &mut used));
        }
    }
    lines
        .into_iter()
        .map(|chain| chain.into_iter().map(point).collect())
        .collect()
}

/// SVG rendering: one `<g>` per level, one `<path>` per polyline; the view
/// box matches the grid extents with `Im τ` pointing up.
pub fn to_svg(spec: &GridSpec, sets: &[LevelSet]) -> String {
    let (x0, x1) = spec.re_range;
    let (y0, y1) = spec.im_range;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        x0,
        -y1,
        x1 - x0,
        y1 - y0
    );
    let width = 0.002 * (x1 - x0).max(y1 - y0);
    for set in sets {
        let _ = writeln!(
            out,
            r#"<g data-level="{}" fill="none" stroke="black" stroke-width="{}">"#,
            set.level, width
        );
        for line in &set.polylines {
            let mut d = String::new();
            for (n, [x, y]) in line.iter().enumerate() {
                let _ = write!(d, "{}{} {}", if n == 0 { "M" } else { " L" }, x, -y);
            }
            let _ = writeln!(out, r#"<path d="{d}"/>"#);
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
