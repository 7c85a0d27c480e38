//! Gauss–Legendre × uniform-longitude discretization of S², real
//! spherical-harmonic transforms and spectral covariant derivatives.
//!
//! Coefficients are stored densely with `index(l, m) = l² + l + m`,
//! `-l <= m <= l`, using the real orthonormal harmonics described in
//! [`legendre`]. Transforms are direct (no FFT); that is plenty for the band
//! limits used here (≤ 64).

pub mod fields;
pub mod legendre;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use fields::{ScalarField, Sym2, SymTensorField, TangentField, Vec3};
use legendre::{gauss_legendre, packed, LegendreColumn};

use crate::error::{Error, Result};

/// Smallest accepted band limit.
pub const MIN_LMAX: usize = 4;

/// Dense index of the real harmonic `Y_l^m`.
#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`coeff_index`].
pub fn degree_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
    (l, index as i64 - (l * l + l) as i64)
}

/// Orthonormal tangent frame at a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub e_theta: Vec3,
    pub e_phi: Vec3,
}

impl Frame {
    pub fn at(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            e_theta: [ct * cp, ct * sp, -st],
            e_phi: [-sp, cp, 0.0],
        }
    }

    pub fn to_ambient(&self, v: &[f64; 2]) -> Vec3 {
        [
            v[0] * self.e_theta[0] + v[1] * self.e_phi[0],
            v[0] * self.e_theta[1] + v[1] * self.e_phi[1],
            v[0] * self.e_theta[2] + v[1] * self.e_phi[2],
        ]
    }

    /// Tangential components of an ambient vector.
    pub fn project(&self, w: &Vec3) -> [f64; 2] {
        [fields::dot3(w, &self.e_theta), fields::dot3(w, &self.e_phi)]
    }
}

/// Value, gradient and covariant Hessian of a band-limited function.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub values: Vec<f64>,
    pub grad: TangentField,
    pub hess: SymTensorField,
}

/// A band-limited function evaluated with derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct PointJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Sym2,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
pub struct SphericalGrid {
    lmax: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    /// cot θ per ring: the only nonzero connection coefficient of the round
    /// metric in the `(e_θ, e_φ)` frame (`∇_{e_φ} e_φ = −cot θ e_θ`).
    christoffels: Vec<f64>,
    phi: Vec<f64>,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    frames: Vec<Frame>,
    /// Per ring, packed `(l, m >= 0)` Legendre tables.
    legendre: Vec<LegendreColumn>,
    /// `cos(mφ_k)` and `sin(mφ_k)`, indexed `[m * n_phi + k]`.
    cos_mphi: Vec<f64>,
    sin_mphi: Vec<f64>,
    /// GL weight of each ring.
    ring_weights: Vec<f64>,
}

impl SphericalGrid {
    /// Builds a grid with `lmax + 1` Gauss–Legendre rings and `2 lmax + 2`
    /// longitudes, which integrates products of two band-limited functions
    /// exactly.
    pub fn new(lmax: usize) -> Result<Self> {
        if lmax < MIN_LMAX {
            return Err(Error::LmaxTooSmall {
                lmax,
                min: MIN_LMAX,
            });
        }
        let n_theta = lmax + 1;
        let n_phi = 2 * lmax + 2;
        let (gl_x, gl_w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = gl_x.iter().map(|x| x.acos()).collect();
        let sin_theta: Vec<f64> = gl_x.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let christoffels = gl_x.iter().zip(&sin_theta).map(|(c, s)| c / s).collect();
        let phi: Vec<f64> = (0..n_phi)
            .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
            .collect();

        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let mut frames = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for i in 0..n_theta {
            for &ph in &phi {
                let (sp, cp) = ph.sin_cos();
                nodes.push([sin_theta[i] * cp, sin_theta[i] * sp, gl_x[i]]);
                weights.push(gl_w[i] * dphi);
                frames.push(Frame::at(theta[i], ph));
            }
        }

        let legendre = (0..n_theta)
            .map(|i| LegendreColumn::new(lmax, gl_x[i], sin_theta[i]))
            .collect();

        let mut cos_mphi = vec![0.0; (lmax + 1) * n_phi];
        let mut sin_mphi = vec![0.0; (lmax + 1) * n_phi];
        for m in 0..=lmax {
            for (k, &ph) in phi.iter().enumerate() {
                let (s, c) = (m as f64 * ph).sin_cos();
                cos_mphi[m * n_phi + k] = c;
                sin_mphi[m * n_phi + k] = s;
            }
        }

        Ok(Self {
            lmax,
            n_theta,
            n_phi,
            theta,
            sin_theta,
            christoffels,
            phi,
            nodes,
            weights,
            frames,
            legendre,
            cos_mphi,
            sin_mphi,
            ring_weights: gl_w,
        })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_coeffs(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn frame(&self, node: usize) -> &Frame {
        &self.frames[node]
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn christoffels(&self) -> &[f64] {
        &self.christoffels
    }

    /// `(θ, φ)` of a node.
    pub fn angles(&self, node: usize) -> (f64, f64) {
        (self.theta[node / self.n_phi], self.phi[node % self.n_phi])
    }

    /// Zero-pads (or keeps) a coefficient vector to this grid's band limit.
    ///
    /// # Panics
    /// If `coeffs` is longer than the grid supports.
    pub fn pad_coeffs(&self, mut coeffs: Vec<f64>) -> Vec<f64> {
        assert!(
            coeffs.len() <= self.n_coeffs(),
            "coefficient vector of length {} exceeds band limit {}",
            coeffs.len(),
            self.lmax
        );
        coeffs.resize(self.n_coeffs(), 0.0);
        coeffs
    }

    /// Unit-norm real harmonic `Y_l^m` sampled on the grid, with its coefficients.
    pub fn harmonic(&self, l: usize, m: i64) -> ScalarField {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l);
        let mut c = vec![0.0; self.n_coeffs()];
        c[coeff_index(l, m)] = 1.0;
        ScalarField::from_coeffs(self, c)
    }

    /// Σ weights · values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Componentwise integral of a vector-valued field.
    pub fn integrate_vec(&self, values: &[Vec3]) -> Vec3 {
        let mut acc = [0.0; 3];
        for (v, w) in values.iter().zip(&self.weights) {
            for k in 0..3 {
                acc[k] += w * v[k];
            }
        }
        acc
    }

    /// Quadrature projection onto the harmonics up to `lmax`.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n_nodes());
        let l = self.lmax;
        let np = self.n_phi;
        let dphi = 2.0 * PI / np as f64;
        let mut coeffs = vec![0.0; self.n_coeffs()];
        let mut cm = vec![0.0; l + 1];
        let mut sm = vec![0.0; l + 1];
        for i in 0..self.n_theta {
            let ring = &values[i * np..(i + 1) * np];
            for m in 0..=l {
                let cos = &self.cos_mphi[m * np..(m + 1) * np];
                let sin = &self.sin_mphi[m * np..(m + 1) * np];
                let mut c = 0.0;
                let mut s = 0.0;
                for k in 0..np {
                    c += ring[k] * cos[k];
                    s += ring[k] * sin[k];
                }
                let scale = self.ring_weights[i] * dphi * if m == 0 { 1.0 } else { 2f64.sqrt() };
                cm[m] = c * scale;
                sm[m] = s * scale;
            }
            let p = &self.legendre[i].p;
            for deg in 0..=l {
                for m in 0..=deg {
                    let pv = p[packed(deg, m)];
                    coeffs[coeff_index(deg, m as i64)] += pv * cm[m];
                    if m > 0 {
                        coeffs[coeff_index(deg, -(m as i64))] += pv * sm[m];
                    }
                }
            }
        }
        coeffs
    }

    /// Grid values of `Σ c_lm Y_l^m`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let l = self.lmax;
        let np = self.n_phi;
        let lc = coeff_limit(coeffs.len(), l);
        let mut out = vec![0.0; self.n_nodes()];
        let mut a = vec![0.0; l + 1];
        let mut b = vec![0.0; l + 1];
        for i in 0..self.n_theta {
            a.iter_mut().for_each(|v| *v = 0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
            let p = &self.legendre[i].p;
            for deg in 0..=lc {
                for m in 0..=deg {
                    let pv = p[packed(deg, m)];
                    a[m] += coeffs[coeff_index(deg, m as i64)] * pv;
                    if m > 0 {
                        b[m] += coeffs[coeff_index(deg, -(m as i64))] * pv;
                    }
                }
            }
            let ring = &mut out[i * np..(i + 1) * np];
            for m in 0..=lc {
                let f = if m == 0 { 1.0 } else { 2f64.sqrt() };
                let (am, bm) = (a[m] * f, b[m] * f);
                let cos = &self.cos_mphi[m * np..(m + 1) * np];
                let sin = &self.sin_mphi[m * np..(m + 1) * np];
                for k in 0..np {
                    ring[k] += am * cos[k] + bm * sin[k];
                }
            }
        }
        out
    }

    /// Values, gradient and covariant Hessian from coefficients, in the
    /// `(e_θ, e_φ)` frame:
    ///
    /// ```text
    /// ∇f    = (f_θ, f_φ / sin θ)
    /// H_θθ  = f_θθ
    /// H_θφ  = (f_θφ − cot θ f_φ) / sin θ
    /// H_φφ  = f_φφ / sin²θ + cot θ f_θ
    /// ```
    pub fn derivatives(&self, coeffs: &[f64]) -> Derivatives {
        let l = self.lmax;
        let np = self.n_phi;
        let lc = coeff_limit(coeffs.len(), l);
        let n = self.n_nodes();
        let mut values = vec![0.0; n];
        let mut grad = vec![[0.0; 2]; n];
        let mut hess = vec![Sym2::default(); n];
        // [m][0..3] = (P, P', P'') sums for cos and sin parts
        let mut a = vec![[0.0; 3]; l + 1];
        let mut b = vec![[0.0; 3]; l + 1];
        for i in 0..self.n_theta {
            a.iter_mut().for_each(|v| *v = [0.0; 3]);
            b.iter_mut().for_each(|v| *v = [0.0; 3]);
            let col = &self.legendre[i];
            for deg in 0..=lc {
                for m in 0..=deg {
                    let j = packed(deg, m);
                    let t = [col.p[j], col.dp[j], col.d2p[j]];
                    let ca = coeffs[coeff_index(deg, m as i64)];
                    for r in 0..3 {
                        a[m][r] += ca * t[r];
                    }
                    if m > 0 {
                        let cb = coeffs[coeff_index(deg, -(m as i64))];
                        for r in 0..3 {
                            b[m][r] += cb * t[r];
                        }
                    }
                }
            }
            let s = self.sin_theta[i];
            let cot = self.christoffels[i];
            for k in 0..np {
                let (mut f, mut ft, mut ftt, mut fp, mut ftp, mut fpp) =
                    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for m in 0..=lc {
                    let w = if m == 0 { 1.0 } else { 2f64.sqrt() };
                    let c = self.cos_mphi[m * np + k] * w;
                    let sn = self.sin_mphi[m * np + k] * w;
                    let mf = m as f64;
                    f += a[m][0] * c + b[m][0] * sn;
                    ft += a[m][1] * c + b[m][1] * sn;
                    ftt += a[m][2] * c + b[m][2] * sn;
                    fp += mf * (-a[m][0] * sn + b[m][0] * c);
                    ftp += mf * (-a[m][1] * sn + b[m][1] * c);
                    fpp -= mf * mf * (a[m][0] * c + b[m][0] * sn);
                }
                let node = i * np + k;
                values[node] = f;
                grad[node] = [ft, fp / s];
                hess[node] = Sym2::new(ftt, (ftp - cot * fp) / s, fpp / (s * s) + cot * ft);
            }
        }
        Derivatives {
            values,
            grad: TangentField { components: grad },
            hess: SymTensorField { components: hess },
        }
    }

    /// Spherical gradient `∇̄f`.
    pub fn grad(&self, f: &ScalarField) -> TangentField {
        self.derivatives(&f.coeffs_or_analyze(self)).grad
    }

    /// Covariant Hessian `∇̄²f` of the round metric.
    pub fn hess(&self, f: &ScalarField) -> SymTensorField {
        self.derivatives(&f.coeffs_or_analyze(self)).hess
    }

    /// Laplace–Beltrami operator, applied as the multiplier `−l(l+1)`.
    pub fn laplace_beltrami(&self, f: &ScalarField) -> ScalarField {
        let mut c = f.coeffs_or_analyze(self).into_owned();
        for (i, v) in c.iter_mut().enumerate() {
            let (l, _) = degree_order(i);
            *v *= -((l * (l + 1)) as f64);
        }
        ScalarField::from_coeffs(self, c)
    }

    /// Evaluates the expansion `coeffs` with gradient and Hessian at an
    /// arbitrary unit vector. Points within 1e-9 of a pole are nudged off it.
    pub fn eval_point(&self, coeffs: &[f64], x: &Vec3) -> PointJet {
        let lc = coeff_limit(coeffs.len(), self.lmax);
        let z = x[2].clamp(-1.0, 1.0);
        let mut theta = z.acos();
        let phi = x[1].atan2(x[0]);
        const POLE_GUARD: f64 = 1e-9;
        if theta.sin() < POLE_GUARD {
            theta = if theta < 1.0 {
                POLE_GUARD
            } else {
                PI - POLE_GUARD
            };
        }
        let (s, ct) = theta.sin_cos();
        let col = LegendreColumn::new(lc, ct, s);
        let cot = ct / s;
        let (mut f, mut ft, mut ftt, mut fp, mut ftp, mut fpp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for m in 0..=lc {
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            for deg in m..=lc {
                let j = packed(deg, m);
                let t = [col.p[j], col.dp[j], col.d2p[j]];
                let ca = coeffs[coeff_index(deg, m as i64)];
                let cb = if m > 0 {
                    coeffs[coeff_index(deg, -(m as i64))]
                } else {
                    0.0
                };
                for r in 0..3 {
                    a[r] += ca * t[r];
                    b[r] += cb * t[r];
                }
            }
            let w = if m == 0 { 1.0 } else { 2f64.sqrt() };
            let (sn, c) = (m as f64 * phi).sin_cos();
            let (c, sn) = (c * w, sn * w);
            let mf = m as f64;
            f += a[0] * c + b[0] * sn;
            ft += a[1] * c + b[1] * sn;
            ftt += a[2] * c + b[2] * sn;
            fp += mf * (-a[0] * sn + b[0] * c);
            ftp += mf * (-a[1] * sn + b[1] * c);
            fpp -= mf * mf * (a[0] * c + b[0] * sn);
        }
        PointJet {
            value: f,
            grad: [ft, fp / s],
            hess: Sym2::new(ftt, (ftp - cot * fp) / s, fpp / (s * s) + cot * ft),
            frame: Frame::at(theta, phi),
        }
    }
}

/// Highest degree present in a coefficient vector of length `len`, capped at `lmax`.
fn coeff_limit(len: usize, lmax: usize) -> usize {
    let l = (len as f64).sqrt().round() as usize;
    assert_eq!(
        l * l,
        len,
        "coefficient vector length {len} is not a square"
    );
    (l.max(1) - 1).min(lmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fields::{dot3, norm3};

    #[test]
    fn rejects_coarse_band_limit() {
        assert!(matches!(
            SphericalGrid::new(3),
            Err(Error::LmaxTooSmall { lmax: 3, min: 4 })
        ));
        assert!(SphericalGrid::new(4).is_ok());
    }

    #[test]
    fn index_round_trip() {
        for i in 0..400 {
            let (l, m) = degree_order(i);
            assert_eq!(coeff_index(l, m), i);
            assert!(m.unsigned_abs() as usize <= l);
        }
    }

    #[test]
    fn nodes_weights_and_poles() {
        let g = SphericalGrid::new(16).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-10);
        for x in g.nodes() {
            assert!((norm3(x) - 1.0).abs() < 1e-14);
            assert!(x[2].abs() < 1.0 - 1e-6, "node at a pole");
        }
        let z = ScalarField::from_fn(&g, |x| x[2]);
        assert!(g.integrate(z.values()).abs() < 1e-12);
        assert!(g.n_theta() >= 17 && g.n_phi() >= 33);
    }

    #[test]
    fn constant_has_only_degree_zero() {
        let g = SphericalGrid::new(10).unwrap();
        let c = g.analyze(&vec![1.0; g.n_nodes()]);
        assert!((c[0] - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn degree_one_harmonics_are_coordinates() {
        let g = SphericalGrid::new(6).unwrap();
        let k = (3.0 / (4.0 * PI)).sqrt();
        for (m, axis) in [(1, 0), (-1, 1), (0, 2)] {
            let y = g.harmonic(1, m);
            for (v, x) in y.values().iter().zip(g.nodes()) {
                assert!((v - k * x[axis]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_of_linear_function_is_tangential_part() {
        let g = SphericalGrid::new(12).unwrap();
        let w = [0.3, -0.8, 0.5];
        let f = ScalarField::from_fn(&g, |x| dot3(x, &w));
        let grad = g.grad(&f).to_ambient(&g);
        for (gx, x) in grad.iter().zip(g.nodes()) {
            let t = fields::sub3(&w, &fields::scale3(x, dot3(x, &w)));
            assert!(norm3(&fields::sub3(gx, &t)) < 1e-12);
        }
    }

    #[test]
    fn hessian_of_linear_function() {
        let g = SphericalGrid::new(12).unwrap();
        let w = [0.3, -0.8, 0.5];
        let f = ScalarField::from_fn(&g, |x| dot3(x, &w));
        let h = g.hess(&f);
        for (a, v) in h.components.iter().zip(f.values()) {
            let a = a.add_identity(*v);
            assert!(a.tt.abs() < 1e-11 && a.tp.abs() < 1e-11 && a.pp.abs() < 1e-11);
        }
        let one = ScalarField::constant(&g, 1.0);
        assert!(g.hess(&one).sup_norm() < 1e-12);
        assert!(g.grad(&one).sup_norm() < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunctions() {
        let g = SphericalGrid::new(16).unwrap();
        let y = g.harmonic(2, 0);
        let ly = g.laplace_beltrami(&y);
        for (a, b) in ly.values().iter().zip(y.values()) {
            assert!((a + 6.0 * b).abs() < 1e-10);
        }
        let w = [1.0, 2.0, -0.5];
        let lin = ScalarField::from_fn(&g, |x| dot3(x, &w));
        let l = g.laplace_beltrami(&lin);
        for (a, b) in l.values().iter().zip(lin.values()) {
            assert!((a + 2.0 * b).abs() < 1e-10, "{}", a + 2.0 * b);
        }
        assert!(
            g.laplace_beltrami(&ScalarField::constant(&g, 3.0))
                .sup_norm()
                < 1e-12
        );
    }

    #[test]
    fn point_evaluation_matches_grid() {
        let g = SphericalGrid::new(10).unwrap();
        let mut c = vec![0.0; g.n_coeffs()];
        for (i, v) in c.iter_mut().enumerate() {
            *v = ((i * 37 % 11) as f64 - 5.0) / 10.0;
        }
        let d = g.derivatives(&c);
        for node in [0, 5, 77, g.n_nodes() - 1] {
            let jet = g.eval_point(&c, &g.nodes()[node]);
            assert!((jet.value - d.values[node]).abs() < 1e-12);
            assert!((jet.grad[0] - d.grad.components[node][0]).abs() < 1e-11);
            assert!((jet.grad[1] - d.grad.components[node][1]).abs() < 1e-11);
            let h = d.hess.components[node];
            assert!((jet.hess.tt - h.tt).abs() < 1e-10);
            assert!((jet.hess.tp - h.tp).abs() < 1e-10);
            assert!((jet.hess.pp - h.pp).abs() < 1e-10);
        }
    }
}
