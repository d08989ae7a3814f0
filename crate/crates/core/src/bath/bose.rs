//! Sum-over-poles representations of the Bose function `1/(1 − e^{−x})`.
//!
//! Both schemes have the form
//!
//! ```text
//! 1/(1 − e^{−x}) ≈ 1/x + 1/2 + Σ_j 2 r_j x / (x² + ξ_j²)
//! ```
//!
//! with Matsubara `ξ_j = 2πj`, `r_j = 1`, and the `[N−1/N]` Padé scheme taking
//! `ξ_j` from the eigenvalues of a tridiagonal matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct BosePoles {
    /// `ξ_j > 0`, ascending.
    pub xi: Vec<f64>,
    /// `r_j`.
    pub residues: Vec<f64>,
}

impl BosePoles {
    pub fn matsubara(n: usize) -> Self {
        Self {
            xi: (1..=n).map(|j| 2.0 * std::f64::consts::PI * j as f64).collect(),
            residues: vec![1.0; n],
        }
    }

    pub fn pade(n: usize) -> Self {
        if n == 0 {
            return Self { xi: vec![], residues: vec![] };
        }
        let b = |m: usize| (2 * m + 1) as f64;
        let xi = positive_inverse_eigs(2 * n, |m| 1.0 / (b(m + 1) * b(m + 2)).sqrt(), n);
        let zeta = positive_inverse_eigs(2 * n - 1, |m| 1.0 / (b(m + 2) * b(m + 3)).sqrt(), n - 1);
        let residues = (0..n)
            .map(|j| {
                let x2 = xi[j] * xi[j];
                // pair factors so the running product stays O(1) for large n
                let ratio: f64 = zeta
                    .iter()
                    .zip((0..n).filter(|&k| k != j))
                    .map(|(z, k)| (z * z - x2) / (xi[k] * xi[k] - x2))
                    .product();
                0.5 * n as f64 * b(n + 1) * ratio
            })
            .collect();
        Self { xi, residues }
    }

    /// The approximant at (possibly complex) `x`.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut s = x.inv() + 0.5;
        for (xi, r) in self.xi.iter().zip(&self.residues) {
            s += x * (2.0 * r) / (x * x + xi * xi);
        }
        s
    }
}

/// `2/λ` for the `count` largest eigenvalues `λ` of the zero-diagonal
/// symmetric tridiagonal matrix of size `size`, returned ascending.
fn positive_inverse_eigs(size: usize, off: impl Fn(usize) -> f64, count: usize) -> Vec<f64> {
    if count == 0 {
        return vec![];
    }
    let mut m = DMatrix::<f64>::zeros(size, size);
    for k in 0..size - 1 {
        let v = off(k);
        m[(k, k + 1)] = v;
        m[(k + 1, k)] = v;
    }
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = eig[..count].iter().map(|l| 2.0 / l).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Exact `1/(1 − e^{−x})` at complex `x`.
pub fn bose_exact(x: Complex64) -> Complex64 {
    if x.im == 0.0 {
        return Complex64::new(-1.0 / (-x.re).exp_m1(), 0.0);
    }
    -complex_expm1(-x).inv()
}

fn complex_expm1(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(z.re.exp_m1(), 0.0);
    }
    // e^{a+ib} − 1 = (e^a − 1) cos b + (cos b − 1) + i e^a sin b
    let (s, c) = z.im.sin_cos();
    let cm1 = -2.0 * (0.5 * z.im).sin().powi(2);
    Complex64::new(z.re.exp_m1() * c + cm1, z.re.exp() * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli_taylor(k: usize) -> f64 {
        // coefficients of (1/2)coth(x/2) − 1/x = Σ_k B_{2k} x^{2k−1}/(2k)!
        const B: [f64; 8] = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
            7.0 / 6.0,
            -3617.0 / 510.0,
        ];
        let mut fact = 1.0;
        for i in 1..=2 * (k + 1) {
            fact *= i as f64;
        }
        B[k] / fact
    }

    #[test]
    fn pade_one_pole_closed_form() {
        let p = BosePoles::pade(1);
        assert!((p.xi[0] - 60f64.sqrt()).abs() < 1e-12);
        assert!((p.residues[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn pade_matches_taylor_coefficients() {
        // [N−1/N] in y = x² reproduces 2N Taylor coefficients
        for n in 1..=4 {
            let p = BosePoles::pade(n);
            for k in 0..2 * n {
                let c: f64 = p
                    .xi
                    .iter()
                    .zip(&p.residues)
                    .map(|(xi, r)| 2.0 * r * (-1f64).powi(k as i32) / xi.powi(2 * (k as i32 + 1)))
                    .sum();
                let exact = bernoulli_taylor(k);
                assert!(((c - exact) / exact).abs() < 1e-9, "n={n} k={k}: {c} vs {exact}");
            }
        }
    }

    #[test]
    fn pade_converges_to_bose() {
        let x = Complex64::new(10.0, 0.0);
        let e2 = (BosePoles::pade(2).eval(x) - bose_exact(x)).norm();
        let e6 = (BosePoles::pade(6).eval(x) - bose_exact(x)).norm();
        assert!(e6 < 1e-11 && e6 < e2);
        let m6 = (BosePoles::matsubara(6).eval(x) - bose_exact(x)).norm();
        assert!(e6 < m6);
    }

    #[test]
    fn exact_bose_is_stable() {
        let small = bose_exact(Complex64::new(1e-9, 0.0));
        assert!((small.re - (1e9 + 0.5)).abs() / 1e9 < 1e-8);
        let neg = bose_exact(Complex64::new(-800.0, 0.0));
        assert!(neg.norm() < 1e-300);
        let z = Complex64::new(0.0, -1.0);
        let expected = Complex64::new(0.5, 0.5 / (0.5f64).tan());
        assert!((bose_exact(z) - expected).norm() < 1e-14);
    }
}
