//! Convex bodies given by their support function on the sphere, and the
//! geometry derived from it.
//!
//! For a support function `h` the inverse Gauss map is `X = ∇̄h + h x`, the
//! curvature matrix is `A[h] = ∇̄²h + h ḡ` (its eigenvalues are the principal
//! radii), `σ₂ = det A[h]` and the Gauss curvature is `K = 1/σ₂`. The cone-volume
//! density against the round measure is `h σ₂`.

mod io;
mod polar;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere_grid::fields::{dot2, dot3, norm3, Vec3};
use crate::sphere_grid::{coeff_index, ScalarField, SphericalGrid, SymTensorField, TangentField};

pub use io::BodyDocument;
pub use polar::{bipolar_deviation, polar_body, polar_identity_check, PolarBody};

/// Relative eigenvalue floor for strict convexity: `λ_min >= 1e-10 · λ_max`.
pub const CONVEXITY_TOLERANCE: f64 = 1e-10;

/// Default top degree of [`make_random_body`].
pub const DEFAULT_LMAX_BODY: usize = 3;

/// Retry budget of [`make_random_body`].
pub const MAX_RANDOM_RETRIES: usize = 64;

/// Where a support function came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic {
        family: String,
    },
    Random {
        seed: u64,
        amplitude: f64,
        lmax_body: usize,
    },
    Solver {
        p: f64,
        q: f64,
    },
    Polar,
    Imported,
}

/// Support function stored as real spherical-harmonic coefficients, with its
/// grid values.
#[derive(Debug, Clone)]
pub struct SupportFunction {
    grid: Arc<SphericalGrid>,
    h: ScalarField,
    provenance: Provenance,
}

impl SupportFunction {
    /// Coefficients are zero-padded to the grid band limit.
    pub fn from_coeffs(
        grid: Arc<SphericalGrid>,
        coeffs: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if coeffs.len() > grid.n_coeffs() {
            let degree = (coeffs.len() as f64).sqrt() as usize - 1;
            return Err(Error::DegreeExceedsGrid {
                degree,
                lmax: grid.lmax(),
            });
        }
        let h = ScalarField::from_coeffs(&grid, coeffs);
        Ok(Self {
            grid,
            h,
            provenance,
        })
    }

    /// Projects grid values onto the band-limited expansion.
    pub fn from_values(grid: Arc<SphericalGrid>, values: &[f64], provenance: Provenance) -> Self {
        let coeffs = grid.analyze(values);
        let h = ScalarField::from_coeffs(&grid, coeffs);
        Self {
            grid,
            h,
            provenance,
        }
    }

    pub fn grid(&self) -> &Arc<SphericalGrid> {
        &self.grid
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn coeffs(&self) -> &[f64] {
        self.h
            .coeffs()
            .expect("support functions always carry coefficients")
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Support function of `λK`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let c = self.coeffs().iter().map(|v| v * lambda).collect();
        Self::from_coeffs(self.grid.clone(), c, self.provenance.clone()).expect("same band limit")
    }

    /// Support function of `K + c`, i.e. `h + ⟨c, x⟩`.
    pub fn translated(&self, c: &Vec3) -> Self {
        let mut coeffs = self.coeffs().to_vec();
        add_linear(&mut coeffs, c);
        Self::from_coeffs(self.grid.clone(), coeffs, self.provenance.clone())
            .expect("same band limit")
    }

    /// Mean of `h` over the sphere.
    pub fn mean(&self) -> f64 {
        self.coeffs()[0] / (4.0 * PI).sqrt()
    }

    /// `‖h − mean(h)‖∞ / mean(h)`: zero exactly for origin-centred balls.
    pub fn sphere_distance(&self) -> f64 {
        let mean = self.mean();
        self.h
            .values()
            .iter()
            .fold(0.0_f64, |m, v| m.max((v - mean).abs()))
            / mean
    }

    /// Evaluates `h` at an arbitrary unit vector.
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.grid.eval_point(self.coeffs(), x).value
    }
}

/// Adds the coefficients of `⟨c, x⟩` in place.
pub(crate) fn add_linear(coeffs: &mut [f64], c: &Vec3) {
    let k = (3.0 / (4.0 * PI)).sqrt();
    coeffs[coeff_index(1, 1)] += c[0] / k;
    coeffs[coeff_index(1, -1)] += c[1] / k;
    coeffs[coeff_index(1, 0)] += c[2] / k;
}

/// Ball of radius `radius` centred at `center`: `h(x) = R + ⟨c, x⟩`.
pub fn make_ball(grid: Arc<SphericalGrid>, center: Vec3, radius: f64) -> Result<SupportFunction> {
    let center_norm = norm3(&center);
    if !(radius > 0.0) || center_norm >= radius {
        return Err(Error::OriginNotInterior {
            center_norm,
            radius,
        });
    }
    let mut coeffs = vec![0.0; grid.n_coeffs()];
    coeffs[0] = radius * (4.0 * PI).sqrt();
    add_linear(&mut coeffs, &center);
    SupportFunction::from_coeffs(
        grid,
        coeffs,
        Provenance::Analytic {
            family: format!("ball(r={radius:?},c={center:?})"),
        },
    )
}

/// `h = 1 + Σ_{2<=l<=lmax_body} c_lm Y_l^m`, redrawn until strictly convex.
/// Deterministic per seed.
///
/// `c_lm = u · amplitude · 6/(l(l+1))` with `u` uniform in `[-1, 1]`, so
/// `|c_lm| <= amplitude` and every degree perturbs the principal radii by a
/// comparable amount (the curvature response of `Y_l^m` grows like `l(l+1)`).
pub fn make_random_body(
    grid: Arc<SphericalGrid>,
    seed: u64,
    amplitude: f64,
    lmax_body: usize,
) -> Result<SupportFunction> {
    if lmax_body > grid.lmax() {
        return Err(Error::DegreeExceedsGrid {
            degree: lmax_body,
            lmax: grid.lmax(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_lambda = f64::NAN;
    for _ in 0..MAX_RANDOM_RETRIES {
        let mut coeffs = vec![0.0; (lmax_body + 1) * (lmax_body + 1)];
        coeffs[0] = (4.0 * PI).sqrt();
        if amplitude > 0.0 {
            for l in 2..=lmax_body {
                for m in -(l as i64)..=(l as i64) {
                    coeffs[coeff_index(l, m)] =
                        rng.gen_range(-1.0..=1.0) * amplitude * 6.0 / (l * (l + 1)) as f64;
                }
            }
        }
        let sf = SupportFunction::from_coeffs(
            grid.clone(),
            coeffs,
            Provenance::Random {
                seed,
                amplitude,
                lmax_body,
            },
        )?;
        match compute_geometry(&sf) {
            Ok(_) => return Ok(sf),
            Err(Error::NotConvex { lambda_min, .. }) => last_lambda = lambda_min,
            Err(Error::NotPositive { value, .. }) => last_lambda = value,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RandomBodyRejected {
        seed,
        amplitude,
        retries: MAX_RANDOM_RETRIES,
        lambda_min: last_lambda,
    })
}

/// Fields derived from one support function.
#[derive(Debug, Clone)]
pub struct BodyGeometry {
    pub grid: Arc<SphericalGrid>,
    pub h: ScalarField,
    /// `∇̄h`
    pub gradh: TangentField,
    /// `A[h] = ∇̄²h + h ḡ`
    pub a: SymTensorField,
    /// `σ₂ = det A[h]`
    pub sigma_n: ScalarField,
    /// `K = 1/σ₂`
    pub gauss_curv: ScalarField,
    /// Inverse Gauss map `X = ∇̄h + h x`.
    pub x_map: Vec<Vec3>,
    /// `r = |X|`
    pub r: ScalarField,
    /// `h σ₂`, density of the cone-volume measure `dV` against `dμ`.
    pub dv_density: ScalarField,
    /// Smallest principal radius over all nodes.
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Derives all geometric fields of a body.
///
/// Fails with [`Error::NotPositive`] when `h <= 0` somewhere and with
/// [`Error::NotConvex`] when `λ_min < 1e-10 · λ_max`.
pub fn compute_geometry(sf: &SupportFunction) -> Result<BodyGeometry> {
    let grid = sf.grid().clone();
    let d = grid.derivatives(sf.coeffs());
    if let Some((node, &value)) = d.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NotPositive { node, value });
    }

    let n = grid.n_nodes();
    let mut a = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut x_map = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut lambda_min = f64::INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    let mut worst = 0;
    for i in 0..n {
        let h = d.values[i];
        let ai = d.hess.components[i].add_identity(h);
        let (l0, l1) = ai.eigenvalues();
        if l0 < lambda_min {
            lambda_min = l0;
            worst = i;
        }
        lambda_max = lambda_max.max(l1);
        let g = d.grad.components[i];
        let frame = grid.frame(i);
        let xi = grid.nodes()[i];
        let t = frame.to_ambient(&g);
        x_map.push([t[0] + h * xi[0], t[1] + h * xi[1], t[2] + h * xi[2]]);
        r.push((dot2(&g, &g) + h * h).sqrt());
        sigma.push(ai.det());
        a.push(ai);
    }
    if !(lambda_min >= CONVEXITY_TOLERANCE * lambda_max) {
        return Err(Error::NotConvex {
            lambda_min,
            node: worst,
        });
    }

    let gauss_curv = sigma.iter().map(|s| 1.0 / s).collect();
    let dv = sigma.iter().zip(&d.values).map(|(s, h)| s * h).collect();
    Ok(BodyGeometry {
        grid,
        h: sf.h().clone(),
        gradh: d.grad,
        a: SymTensorField { components: a },
        sigma_n: ScalarField::from_values(sigma),
        gauss_curv: ScalarField::from_values(gauss_curv),
        x_map,
        r: ScalarField::from_values(r),
        dv_density: ScalarField::from_values(dv),
        lambda_min,
        lambda_max,
    })
}

impl BodyGeometry {
    /// `∫ f dV = ∫ f h σ₂ dμ`.
    pub fn integrate_dv(&self, f: &[f64]) -> f64 {
        let w = self.grid.weights();
        f.iter()
            .zip(self.dv_density.values())
            .zip(w)
            .map(|((f, d), w)| f * d * w)
            .sum()
    }

    /// `∫ dV`, three times the volume of the body.
    pub fn total_dv(&self) -> f64 {
        self.grid.integrate(self.dv_density.values())
    }

    /// `∫ f X dV` componentwise.
    pub fn integrate_x_dv(&self, f: &[f64]) -> Vec3 {
        let mut acc = [0.0; 3];
        for (i, x) in self.x_map.iter().enumerate() {
            let s = f[i] * self.dv_density.values()[i] * self.grid.weights()[i];
            for k in 0..3 {
                acc[k] += s * x[k];
            }
        }
        acc
    }

    /// Largest deviation of `⟨X(x), x⟩` from `h(x)`.
    pub fn support_consistency(&self) -> f64 {
        self.x_map
            .iter()
            .zip(self.grid.nodes())
            .zip(self.h.values())
            .fold(0.0_f64, |m, ((xm, x), h)| m.max((dot3(xm, x) - h).abs()))
    }
}

/// `G[h] − c` pointwise, with `G[h] = h^{p−1} r^{n+1−q} K` and `n = 2`.
pub fn pde_residual(geom: &BodyGeometry, p: f64, q: f64, c: f64) -> ScalarField {
    let h = geom.h.values();
    let r = geom.r.values();
    let s = geom.sigma_n.values();
    ScalarField::from_values(
        (0..h.len())
            .map(|i| ((p - 1.0) * h[i].ln() + (3.0 - q) * r[i].ln() - s[i].ln()).exp() - c)
            .collect(),
    )
}

/// Monge–Ampère form `F[h] = h^{1−p} r^{q−n−1} det A[h]` (the reciprocal of `G[h]`).
pub fn monge_ampere_form(geom: &BodyGeometry, p: f64, q: f64) -> ScalarField {
    let h = geom.h.values();
    let r = geom.r.values();
    let s = geom.sigma_n.values();
    ScalarField::from_values(
        (0..h.len())
            .map(|i| ((1.0 - p) * h[i].ln() + (q - 3.0) * r[i].ln() + s[i].ln()).exp())
            .collect(),
    )
}

/// `log F[h] = −log G[h]` pointwise.
pub fn log_monge_ampere(geom: &BodyGeometry, p: f64, q: f64) -> Vec<f64> {
    let h = geom.h.values();
    let r = geom.r.values();
    let s = geom.sigma_n.values();
    (0..h.len())
        .map(|i| (1.0 - p) * h[i].ln() + (q - 3.0) * r[i].ln() + s[i].ln())
        .collect()
}
