//! Branch cuts and Dirac strings in the complex τ plane.

use crate::error::{Error, Result};
use crate::model::{ComplexPoint, ContourPath};
use num_complex::Complex64;
use serde::Serialize;

/// Length used for cuts running off to infinity.
const FAR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// Square-root cut of the eigenvalues.
    Branch,
    /// Cut attached to a pole of the AGP term.
    DiracString,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cut {
    pub from: ComplexPoint,
    pub to: ComplexPoint,
    pub kind: CutKind,
}

/// A set of straight cut segments.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CutSpec {
    pub cuts: Vec<Cut>,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Parameters `(t, u)` of the intersection of `p + t(q−p)` with `r + u(s−r)`,
/// or `None` for parallel segments.
fn intersection(p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> Option<(f64, f64)> {
    let (d1, d2) = (q - p, s - r);
    let den = cross(d1, d2);
    if den.abs() < 1e-300 {
        return None;
    }
    let w = r - p;
    Some((cross(w, d2) / den, cross(w, d1) / den))
}

impl CutSpec {
    /// Cuts for a field evaluated along straight rays from the origin: upward
    /// from `τ*₁`, the segment `τ*₂ τ*₃`, vertical Dirac strings from `±i`
    /// away from the real axis, and the mirror images of the branch cuts in
    /// the lower half-plane.
    pub fn standard(upper: &[ComplexPoint; 3], with_poles: bool) -> Self {
        let up = Complex64::new(0.0, FAR);
        let mut cuts = Vec::new();
        for (from, to) in [(upper[0], upper[0] + up), (upper[1], upper[2])] {
            cuts.push(Cut {
                from,
                to,
                kind: CutKind::Branch,
            });
            cuts.push(Cut {
                from: from.conj(),
                to: to.conj(),
                kind: CutKind::Branch,
            });
        }
        if with_poles {
            let i = Complex64::i();
            cuts.push(Cut {
                from: i,
                to: i + up,
                kind: CutKind::DiracString,
            });
            cuts.push(Cut {
                from: -i,
                to: -i - up,
                kind: CutKind::DiracString,
            });
        }
        CutSpec { cuts }
    }

    /// Cuts for the integration route from 0 to `τ*₁` that passes between
    /// `τ*₂` and `τ*₃`: upward from `τ*₁`, and horizontally outward from the
    /// two side points.
    pub fn between_side_points(upper: &[ComplexPoint; 3]) -> Self {
        CutSpec {
            cuts: vec![
                Cut {
                    from: upper[0],
                    to: upper[0] + Complex64::new(0.0, FAR),
                    kind: CutKind::Branch,
                },
                Cut {
                    from: upper[1],
                    to: upper[1] - FAR,
                    kind: CutKind::Branch,
                },
                Cut {
                    from: upper[2],
                    to: upper[2] + FAR,
                    kind: CutKind::Branch,
                },
            ],
        }
    }

    /// Whether the open segment `a → b` crosses (or runs along) any cut.
    /// Touching a cut only at `b` (for instance ending on a branch point)
    /// does not count.
    pub fn crosses(&self, a: ComplexPoint, b: ComplexPoint) -> bool {
        const EPS: f64 = 1e-12;
        self.cuts
            .iter()
            .any(|c| match intersection(a, b, c.from, c.to) {
                Some((t, u)) => t > EPS && t < 1.0 - EPS && (-EPS..=1.0 + EPS).contains(&u),
                None => {
                    // parallel: only a collinear overlap of positive length counts
                    let d = b - a;
                    let len2 = d.norm_sqr();
                    if len2 == 0.0 || cross(c.from - a, d).abs() > EPS * len2.sqrt() {
                        return false;
                    }
                    let proj = |z: Complex64| ((z - a) * d.conj()).re / len2;
                    let (lo, hi) = {
                        let (x, y) = (proj(c.from), proj(c.to));
                        (x.min(y), x.max(y))
                    };
                    lo.max(0.0) < hi.min(1.0) - EPS
                }
            })
    }

    pub fn check_path(&self, path: &ContourPath) -> Result<()> {
        for (k, (a, b)) in path.segments().enumerate() {
            if self.crosses(a, b) {
                return Err(Error::PathThroughCut { segment: k });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn crossing_detection() {
        let spec = CutSpec {
            cuts: vec![Cut {
                from: c(0.0, 1.0),
                to: c(0.0, 3.0),
                kind: CutKind::Branch,
            }],
        };
        assert!(spec.crosses(c(-1.0, 2.0), c(1.0, 2.0)));
        assert!(!spec.crosses(c(-1.0, 0.5), c(1.0, 0.5)));
        // ending on the cut is allowed
        assert!(!spec.crosses(c(1.0, 2.0), c(0.0, 2.0)));
        // parallel, and collinear without and with overlap
        assert!(!spec.crosses(c(1.0, 0.0), c(1.0, 5.0)));
        assert!(!spec.crosses(c(0.0, 0.0), c(0.0, 0.9)));
        assert!(!spec.crosses(c(0.0, 0.0), c(0.0, 1.0)));
        assert!(spec.crosses(c(0.0, 0.0), c(0.0, 1.5)));
    }

    #[test]
    fn path_check_reports_segment() {
        let upper = [c(0.0, 1.2), c(-0.2, 0.9), c(0.2, 0.9)];
        let spec = CutSpec::between_side_points(&upper);
        let ok = ContourPath::new(
            vec![c(0.0, 0.0), c(0.05, 0.0), c(0.05, 1.2), c(0.0, 1.2)],
            10,
        )
        .unwrap();
        assert!(spec.check_path(&ok).is_ok());
        let bad =
            ContourPath::new(vec![c(0.0, 0.0), c(0.5, 0.0), c(0.5, 1.2), c(0.0, 1.2)], 10).unwrap();
        assert_eq!(
            spec.check_path(&bad),
            Err(Error::PathThroughCut { segment: 1 })
        );
    }
}
