use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::body::{compute_geometry, pde_residual, Provenance, SupportFunction};
use crate::error::{Error, Result};
use crate::sphere_grid::{coeff_index, SphericalGrid};

const FD_STEP: f64 = 1e-4;

/// Eigenvalues of the linearization of `h ↦ log F[h]` at the unit sphere.
///
/// `lambda[l]` is the numeric value averaged over orders `m`; `numeric`
/// holds the individual Rayleigh quotients in coefficient order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub p: f64,
    pub q: f64,
    pub lmax_spec: usize,
    pub lambda: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_abs_gap: f64,
}

/// `q − p − l(l+1)`.
pub fn closed_form_eigenvalue(p: f64, q: f64, l: usize) -> f64 {
    let l = l as f64;
    q - p - l * (l + 1.0)
}

/// Since `G = 1/F`, the derivative of `G` at the sphere in direction `Y_l^m`
/// is `−λ_l Y_l^m`. Each Rayleigh quotient `−∫ DG[Y] Y dμ` is computed by
/// central differences with one Richardson extrapolation step.
pub fn linearized_spectrum(p: f64, q: f64, lmax_spec: usize) -> Result<SpectrumReport> {
    if lmax_spec < 2 {
        return Err(Error::InvalidConfig(format!(
            "spectrum needs lmax_spec >= 2, got {lmax_spec}"
        )));
    }
    let grid = Arc::new(SphericalGrid::new((2 * lmax_spec + 2).max(16))?);
    let mut numeric = Vec::with_capacity((lmax_spec + 1) * (lmax_spec + 1));
    for l in 0..=lmax_spec {
        for m in -(l as i64)..=(l as i64) {
            let d1 = directional(&grid, p, q, l, m, FD_STEP)?;
            let d2 = directional(&grid, p, q, l, m, FD_STEP / 2.0)?;
            numeric.push(-(4.0 * d2 - d1) / 3.0);
        }
    }
    let closed_form: Vec<f64> = (0..=lmax_spec)
        .map(|l| closed_form_eigenvalue(p, q, l))
        .collect();
    let mut lambda = Vec::with_capacity(lmax_spec + 1);
    let mut max_abs_gap = 0.0_f64;
    for l in 0..=lmax_spec {
        let block = &numeric[l * l..(l + 1) * (l + 1)];
        lambda.push(block.iter().sum::<f64>() / block.len() as f64);
        for v in block {
            max_abs_gap = max_abs_gap.max((v - closed_form[l]).abs());
        }
    }
    Ok(SpectrumReport {
        p,
        q,
        lmax_spec,
        lambda,
        closed_form,
        numeric,
        max_abs_gap,
    })
}

fn directional(
    grid: &Arc<SphericalGrid>,
    p: f64,
    q: f64,
    l: usize,
    m: i64,
    eps: f64,
) -> Result<f64> {
    let eval = |s: f64| -> Result<Vec<f64>> {
        let mut c = vec![0.0; grid.n_coeffs()];
        c[0] = (4.0 * PI).sqrt();
        c[coeff_index(l, m)] += s;
        let sf = SupportFunction::from_coeffs(grid.clone(), c, Provenance::Imported)?;
        Ok(pde_residual(&compute_geometry(&sf)?, p, q, 1.0)
            .values()
            .to_vec())
    };
    let plus = eval(eps)?;
    let minus = eval(-eps)?;
    let diff: Vec<f64> = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a - b) / (2.0 * eps))
        .collect();
    Ok(grid.analyze(&diff)[coeff_index(l, m)])
}
