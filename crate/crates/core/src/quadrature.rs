//! Globally adaptive Gauss-Kronrod (7/15) quadrature for complex integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    let mut fv = [(Complex64::default(), Complex64::default()); 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[j] = (f1, f2);
        k += (f1 + f2) * WGK[j];
        resabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = k * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm());
    }
    let (k, resabs, resasc) = (k * h, resabs * h.abs(), resasc * h.abs());
    let mut err = ((k - g * h).norm()).abs();
    // QUADPACK's scaling of the Kronrod-Gauss difference
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Piece {
        a,
        b,
        value: k,
        error: err,
    }
}

/// `∫_a^b f` to `max(abs, rel·|I|)`.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: &Tolerance,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: Complex64::default(),
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut pieces = vec![kronrod(&f, a, b)];
    loop {
        let value: Complex64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: f64::NAN,
                subdivisions: pieces.len() - 1,
            });
        }
        if error <= tol.abs.max(tol.rel * value.norm()) {
            return Ok(Estimate {
                value,
                error,
                subdivisions: pieces.len() - 1,
            });
        }
        if pieces.len() > tol.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: error,
                subdivisions: pieces.len() - 1,
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid == p.a || mid == p.b {
            // interval exhausted at double precision
            return Err(Error::QuadratureNonConvergence {
                estimate: error,
                subdivisions: pieces.len(),
            });
        }
        pieces.push(kronrod(&f, p.a, mid));
        pieces.push(kronrod(&f, mid, p.b));
    }
}

/// Real-valued convenience wrapper.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, tol).map(|e| e.value.re)
}

/// Trapezoidal rule on a closed periodic contour, doubling the node count
/// until successive results agree to `abs`. Exponentially convergent for
/// integrands analytic in a strip.
pub fn periodic_trapezoid<F: Fn(f64) -> Complex64>(
    f: F,
    period: f64,
    abs: f64,
) -> Result<Complex64> {
    let mut n = 16usize;
    let mut prev = None::<Complex64>;
    let mut sum = Complex64::default();
    while n <= 1 << 22 {
        sum = if let Some(p) = prev {
            // reuse the previous nodes: only the odd ones are new
            let h = period / n as f64;
            let new: Complex64 = (0..n / 2).map(|k| f((2 * k + 1) as f64 * h)).sum();
            p * 0.5 + new * h
        } else {
            let h = period / n as f64;
            (0..n).map(|k| f(k as f64 * h)).sum::<Complex64>() * h
        };
        if let Some(p) = prev {
            if (sum - p).norm() <= abs {
                return Ok(sum);
            }
        }
        prev = Some(sum);
        n *= 2;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: sum.norm(),
        subdivisions: n,
    })
}
