//! Field containers on a [`SphericalGrid`](super::SphericalGrid).
//!
//! Tangent vectors and symmetric 2-tensors are stored in the orthonormal
//! frame `(e_θ, e_φ)` with `e_θ = ∂x/∂θ` and `e_φ = (1/sin θ) ∂x/∂φ`. The round
//! metric is the identity in this frame, so contractions need no metric factors.

use std::borrow::Cow;

use super::SphericalGrid;

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Symmetric 2×2 matrix `[[tt, tp], [tp, pp]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        tt: 1.0,
        tp: 0.0,
        pp: 1.0,
    };

    pub fn new(tt: f64, tp: f64, pp: f64) -> Self {
        Self { tt, tp, pp }
    }

    pub fn trace(&self) -> f64 {
        self.tt + self.pp
    }

    pub fn det(&self) -> f64 {
        self.tt * self.pp - self.tp * self.tp
    }

    /// Adjugate; `A · adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Sym2 {
        Sym2::new(self.pp, -self.tp, self.tt)
    }

    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        let a = self.adjugate();
        Sym2::new(a.tt / d, a.tp / d, a.pp / d)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.tt * s, self.tp * s, self.pp * s)
    }

    pub fn add_identity(&self, s: f64) -> Sym2 {
        Sym2::new(self.tt + s, self.tp, self.pp + s)
    }

    pub fn mul_vec(&self, v: &[f64; 2]) -> [f64; 2] {
        [
            self.tt * v[0] + self.tp * v[1],
            self.tp * v[0] + self.pp * v[1],
        ]
    }

    /// `vᵀ M v`.
    pub fn quad(&self, v: &[f64; 2]) -> f64 {
        dot2(v, &self.mul_vec(v))
    }

    /// `tr(self · other)` for two symmetric matrices.
    pub fn trace_product(&self, other: &Sym2) -> f64 {
        self.tt * other.tt + 2.0 * self.tp * other.tp + self.pp * other.pp
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.tt + self.pp);
        let half = 0.5 * (self.tt - self.pp);
        let rad = (half * half + self.tp * self.tp).sqrt();
        (mean - rad, mean + rad)
    }
}

/// Real values at every grid node, optionally with the spherical-harmonic
/// coefficients they were synthesized from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    coeffs: Option<Vec<f64>>,
}

impl ScalarField {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            coeffs: None,
        }
    }

    /// Synthesizes grid values from coefficients (zero-padded up to the grid band limit).
    pub fn from_coeffs(grid: &SphericalGrid, coeffs: Vec<f64>) -> Self {
        let coeffs = grid.pad_coeffs(coeffs);
        let values = grid.synthesize(&coeffs);
        Self {
            values,
            coeffs: Some(coeffs),
        }
    }

    pub fn constant(grid: &SphericalGrid, c: f64) -> Self {
        let mut coeffs = vec![0.0; grid.n_coeffs()];
        coeffs[0] = c * (4.0 * std::f64::consts::PI).sqrt();
        Self {
            values: vec![c; grid.n_nodes()],
            coeffs: Some(coeffs),
        }
    }

    /// Evaluates `f(x)` at every node.
    pub fn from_fn(grid: &SphericalGrid, f: impl Fn(&Vec3) -> f64) -> Self {
        Self::from_values(grid.nodes().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> Option<&[f64]> {
        self.coeffs.as_deref()
    }

    /// Stored coefficients, or an analysis of the values (aliasing above the
    /// band limit is folded into the retained degrees).
    pub fn coeffs_or_analyze(&self, grid: &SphericalGrid) -> Cow<'_, [f64]> {
        match &self.coeffs {
            Some(c) => Cow::Borrowed(c),
            None => Cow::Owned(grid.analyze(&self.values)),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tangent vectors per node in the `(e_θ, e_φ)` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    pub components: Vec<[f64; 2]>,
}

impl TangentField {
    pub fn zeros(n: usize) -> Self {
        Self {
            components: vec![[0.0; 2]; n],
        }
    }

    /// Embeds every vector in R³ using the grid frame.
    pub fn to_ambient(&self, grid: &SphericalGrid) -> Vec<Vec3> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, v)| grid.frame(i).to_ambient(v))
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m, v| m.max(dot2(v, v).sqrt()))
    }
}

/// Symmetric 2-tensors per node in the `(e_θ, e_φ)` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub components: Vec<Sym2>,
}

impl SymTensorField {
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, a| {
            m.max(a.tt.abs()).max(a.tp.abs()).max(a.pp.abs())
        })
    }
}
