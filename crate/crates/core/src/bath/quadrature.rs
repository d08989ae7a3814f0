//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! complex integrands.

// tabulated nodes and weights are kept at their published digits
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
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
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone)]
pub(crate) struct QuadResult {
    pub value: Vec<Complex64>,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct QuadFailure {
    pub estimate: Vec<Complex64>,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &F, a: f64, b: f64, n: usize) -> Segment
where
    F: Fn(f64, &mut [Complex64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut gk = vec![Complex64::new(0.0, 0.0); n];
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    f(c, &mut buf);
    for k in 0..n {
        gk[k] = buf[k] * WGK[7];
        g[k] = buf[k] * WG[3];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for &x in &[c - dx, c + dx] {
            f(x, &mut buf);
            for k in 0..n {
                gk[k] += buf[k] * WGK[j];
                if j % 2 == 1 {
                    g[k] += buf[k] * WG[j / 2];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..n {
        gk[k] *= h;
        g[k] *= h;
        error = error.max((gk[k] - g[k]).norm());
    }
    Segment { a, b, value: gk, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `abs_tol`. `f` writes `n` components into its output slice.
pub(crate) fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    n: usize,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadResult, QuadFailure>
where
    F: Fn(f64, &mut [Complex64]),
{
    integrate_partition(f, &[a, b], n, abs_tol, max_segments)
}

/// As [`integrate`] over `[points[0], points.last()]`, starting from the
/// given partition. Interior breakpoints keep narrow features that a single
/// 15-point rule would step over from going unnoticed.
pub(crate) fn integrate_partition<F>(
    f: F,
    points: &[f64],
    n: usize,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadResult, QuadFailure>
where
    F: Fn(f64, &mut [Complex64]),
{
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let seg = kronrod(&f, w[0], w[1], n);
        total_err += seg.error;
        heap.push(seg);
    }
    let mut count = heap.len();
    while total_err > abs_tol && count < max_segments {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.a, mid, n);
        let right = kronrod(&f, mid, worst.b, n);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    // re-sum to avoid drift in the running total
    let mut value = vec![Complex64::new(0.0, 0.0); n];
    let mut err = 0.0;
    for s in heap.iter() {
        for k in 0..n {
            value[k] += s.value[k];
        }
        err += s.error;
    }
    if err > abs_tol || value.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        Err(QuadFailure { estimate: value, error: err })
    } else {
        Ok(QuadResult { value, error: err })
    }
}

/// `∫_0^∞ f(y) dy` through `y = s / (1 − s)`.
pub(crate) fn integrate_half_line<F>(
    f: F,
    n: usize,
    abs_tol: f64,
    max_segments: usize,
) -> Result<QuadResult, QuadFailure>
where
    F: Fn(f64, &mut [Complex64]),
{
    integrate(
        |s, out: &mut [Complex64]| {
            let one_minus = 1.0 - s;
            let y = s / one_minus;
            f(y, out);
            let jac = 1.0 / (one_minus * one_minus);
            for v in out.iter_mut() {
                *v *= jac;
            }
        },
        0.0,
        1.0,
        n,
        abs_tol,
        max_segments,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(
            |x, out: &mut [Complex64]| out[0] = Complex64::new(x.powi(5), -x * x),
            -1.0,
            2.0,
            1,
            1e-13,
            10,
        )
        .unwrap();
        assert!((r.value[0] - Complex64::new((64.0 - 1.0) / 6.0, -3.0)).norm() < 1e-13);
    }

    #[test]
    fn oscillatory_and_half_line() {
        let r = integrate(
            |x, out: &mut [Complex64]| out[0] = Complex64::from_polar(1.0, -7.0 * x),
            0.0,
            10.0,
            1,
            1e-12,
            1000,
        )
        .unwrap();
        let exact = (Complex64::from_polar(1.0, -70.0) - 1.0) / Complex64::new(0.0, -7.0);
        assert!((r.value[0] - exact).norm() < 1e-12);
        let h = integrate_half_line(
            |y, out: &mut [Complex64]| out[0] = Complex64::new(1.0 / (1.0 + y * y), 0.0),
            1,
            1e-12,
            1000,
        )
        .unwrap();
        assert!((h.value[0].re - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn divergent_integral_reports_failure() {
        let r = integrate_half_line(
            |y, out: &mut [Complex64]| out[0] = Complex64::new(1.0 / (1.0 + y), 0.0),
            1,
            1e-10,
            200,
        );
        assert!(r.is_err());
    }
}
