use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Provenance, SupportFunction};
use crate::error::{Error, Result};
use crate::sphere_grid::{coeff_index, degree_order, SphericalGrid};

/// JSON form of a body: `{"lmax", "coefficients": [[l, m, value], ...], "provenance"}`.
///
/// Floats are written in shortest round-trip form and parsed exactly, so a
/// document survives a save/load cycle bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDocument {
    pub lmax: usize,
    pub coefficients: Vec<(usize, i64, f64)>,
    pub provenance: Provenance,
}

impl BodyDocument {
    pub fn from_support(sf: &SupportFunction) -> Self {
        let coefficients = sf
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (l, m) = degree_order(i);
                (l, m, v)
            })
            .collect();
        Self {
            lmax: sf.grid().lmax(),
            coefficients,
            provenance: sf.provenance().clone(),
        }
    }

    /// Dense coefficient vector up to `self.lmax`.
    pub fn dense_coeffs(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; (self.lmax + 1) * (self.lmax + 1)];
        let mut seen = vec![false; out.len()];
        for &(l, m, v) in &self.coefficients {
            if l > self.lmax || m.unsigned_abs() as usize > l {
                return Err(Error::InvalidBody(format!(
                    "coefficient ({l}, {m}) outside band limit {}",
                    self.lmax
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidBody(format!(
                    "coefficient ({l}, {m}) is not finite"
                )));
            }
            let i = coeff_index(l, m);
            if seen[i] {
                return Err(Error::InvalidBody(format!(
                    "duplicate coefficient ({l}, {m})"
                )));
            }
            seen[i] = true;
            out[i] = v;
        }
        Ok(out)
    }

    /// Loads onto `grid`, which must resolve at least `self.lmax`.
    pub fn into_support(self, grid: Arc<SphericalGrid>) -> Result<SupportFunction> {
        if self.lmax > grid.lmax() {
            return Err(Error::DegreeExceedsGrid {
                degree: self.lmax,
                lmax: grid.lmax(),
            });
        }
        let coeffs = self.dense_coeffs()?;
        SupportFunction::from_coeffs(grid, coeffs, self.provenance)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
