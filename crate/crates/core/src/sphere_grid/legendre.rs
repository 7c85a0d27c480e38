//! Gauss–Legendre nodes and orthonormal associated Legendre functions.
//!
//! Normalization: `P̄_l^m(θ)` carries the factor
//! `sqrt((2l+1)/(4π) · (l-m)!/(l+m)!)` and no Condon–Shortley phase, so the
//! real harmonics
//!
//! ```text
//! Y_l^0  = P̄_l^0(θ)
//! Y_l^m  = √2 P̄_l^m(θ) cos(mφ)     m > 0
//! Y_l^-m = √2 P̄_l^m(θ) sin(mφ)     m > 0
//! ```
//!
//! are orthonormal on the unit sphere. With this choice `Y_1^1 ∝ x₁`,
//! `Y_1^-1 ∝ x₂` and `Y_1^0 ∝ x₃`, all with positive constants.

use std::f64::consts::PI;

/// Packed index of `(l, m)` with `0 <= m <= l`.
#[inline]
pub fn packed(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Number of packed `(l, m >= 0)` pairs up to degree `lmax`.
#[inline]
pub fn packed_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Gauss–Legendre nodes on [-1, 1] in decreasing order, with weights.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// Values and first two θ-derivatives of every `P̄_l^m`, `0 <= m <= l <= lmax`,
/// at one colatitude. Requires `sin θ > 0`.
#[derive(Debug, Clone)]
pub struct LegendreColumn {
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
}

impl LegendreColumn {
    pub fn new(lmax: usize, cos_theta: f64, sin_theta: f64) -> Self {
        let n = packed_len(lmax);
        let x = cos_theta;
        let s = sin_theta;
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut d2p = vec![0.0; n];

        p[0] = 1.0 / (4.0 * PI).sqrt();
        for m in 1..=lmax {
            let mf = m as f64;
            p[packed(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[packed(m - 1, m - 1)];
        }
        for m in 0..lmax {
            p[packed(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[packed(m, m)];
        }
        for m in 0..=lmax {
            let mf = m as f64;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                p[packed(l, m)] = a * (x * p[packed(l - 1, m)] - b * p[packed(l - 2, m)]);
            }
        }

        // sin θ · dP̄_l^m/dθ = l cos θ P̄_l^m − sqrt((2l+1)(l²−m²)/(2l−1)) P̄_{l−1}^m
        // and the associated Legendre equation gives the second derivative.
        let cot = x / s;
        for l in 0..=lmax {
            let lf = l as f64;
            for m in 0..=l {
                let mf = m as f64;
                let i = packed(l, m);
                let mut t = lf * x * p[i];
                if m < l {
                    let c = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt();
                    t -= c * p[packed(l - 1, m)];
                }
                dp[i] = t / s;
                d2p[i] = -cot * dp[i] - (lf * (lf + 1.0) - mf * mf / (s * s)) * p[i];
            }
        }
        Self { p, dp, d2p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^14 dx over [-1,1] = 2/15, degree 14 <= 2n-1
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn low_degree_closed_forms() {
        let th: f64 = 0.7;
        let (x, s) = (th.cos(), th.sin());
        let col = LegendreColumn::new(3, x, s);
        let c = 1.0 / (4.0 * PI).sqrt();
        assert!((col.p[packed(1, 0)] - c * 3f64.sqrt() * x).abs() < 1e-15);
        assert!((col.p[packed(1, 1)] - c * 1.5f64.sqrt() * s).abs() < 1e-15);
        let p20 = c * 5f64.sqrt() * 0.5 * (3.0 * x * x - 1.0);
        assert!((col.p[packed(2, 0)] - p20).abs() < 1e-15);
        // d/dθ P̄_2^0 = −c √5 · 3 x s
        assert!((col.dp[packed(2, 0)] + c * 5f64.sqrt() * 3.0 * x * s).abs() < 1e-14);
        // d²/dθ² P̄_2^0 = −c √5 · 3 (x² − s²)
        assert!((col.d2p[packed(2, 0)] + c * 5f64.sqrt() * 3.0 * (x * x - s * s)).abs() < 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let lmax = 12;
        let th: f64 = 1.1;
        let eps = 1e-5;
        let c0 = LegendreColumn::new(lmax, th.cos(), th.sin());
        let cp = LegendreColumn::new(lmax, (th + eps).cos(), (th + eps).sin());
        let cm = LegendreColumn::new(lmax, (th - eps).cos(), (th - eps).sin());
        for i in 0..packed_len(lmax) {
            let fd = (cp.p[i] - cm.p[i]) / (2.0 * eps);
            assert!((fd - c0.dp[i]).abs() < 1e-8, "dp {i}: {fd} vs {}", c0.dp[i]);
            let fd2 = (cp.dp[i] - cm.dp[i]) / (2.0 * eps);
            assert!((fd2 - c0.d2p[i]).abs() < 1e-6, "d2p {i}");
        }
    }
}
