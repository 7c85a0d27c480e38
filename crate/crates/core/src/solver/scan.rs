use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{linearized_spectrum, solve, sphere_perturbation, SolveStatus, SolverConfig};
use crate::body::SupportFunction;
use crate::error::Result;
use crate::sphere_grid::SphericalGrid;

pub const CSV_HEADER: &str = "p,q,seed,status,sphere_distance,iterations,lambda_2,residual";

const DEFAULT_A1: f64 = 0.05;
const DEFAULT_A2: f64 = 0.03;
const REGION_EPS: f64 = 1e-12;

/// Start `1 + a1⟨x, u⟩ + a2 Y_2^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub a1: f64,
    pub a2: f64,
    pub u: [f64; 3],
    pub m: i64,
}

impl PerturbationSpec {
    /// Uniform direction `u` and order `m ∈ {−2..2}` drawn from `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let m = rng.gen_range(-2..=2);
        Self {
            a1: DEFAULT_A1,
            a2: DEFAULT_A2,
            u: [s * phi.cos(), s * phi.sin(), z],
            m,
        }
    }
}

pub fn perturbed_start(
    grid: Arc<SphericalGrid>,
    spec: &PerturbationSpec,
) -> Result<SupportFunction> {
    sphere_perturbation(grid, spec.a1, spec.u, spec.a2, spec.m)
}

/// `(p, q) ∈ (−3, −1] × [2, 3)`.
pub fn in_uniqueness_region(p: f64, q: f64) -> bool {
    p > -3.0 && p <= -1.0 + REGION_EPS && (2.0 - REGION_EPS..3.0).contains(&q)
}

/// Pairs whose dual pair `(−q, −p)` lies in [`in_uniqueness_region`].
pub fn in_polar_region(p: f64, q: f64) -> bool {
    in_uniqueness_region(-q, -p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    pub perturbation: PerturbationSpec,
    /// `None` when the cell could not be run; see `error`.
    pub status: Option<SolveStatus>,
    pub sphere_distance: f64,
    /// `‖h − 1‖∞` of the final iterate.
    pub unit_distance: f64,
    pub iterations: usize,
    pub lambda_2: f64,
    pub residual: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub lmax: usize,
    pub config_hash: String,
    pub provenance: String,
    pub config: SolverConfig,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    /// CSV with floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))
            .expect("in-memory csv");
        for r in &self.rows {
            let status = r.status.map_or("Error", |s| s.as_str());
            w.serialize((
                r.p,
                r.q,
                r.seed,
                status,
                r.sphere_distance,
                r.iterations,
                r.lambda_2,
                r.residual,
            ))
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
    }

    /// Rows inside the main uniqueness region.
    pub fn in_region_rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(|r| in_uniqueness_region(r.p, r.q))
    }
}

/// Hex SHA-256 of the JSON serialization of `value`.
pub fn config_fingerprint<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable config");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Solves every `(p, q, seed)` cell from its seeded perturbed start.
///
/// Cells run concurrently; rows come back in lattice order (p outermost,
/// seed innermost). Failures are recorded in the row.
pub fn uniqueness_scan(
    p_values: &[f64],
    q_values: &[f64],
    seeds: &[u64],
    config: &SolverConfig,
) -> Result<ScanResult> {
    config.validate()?;
    let metadata = ScanMetadata {
        lmax: config.lmax,
        config_hash: config_fingerprint(&(config, p_values, q_values, seeds)),
        provenance: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        p_values: p_values.to_vec(),
        q_values: q_values.to_vec(),
        seeds: seeds.to_vec(),
    };
    let grid = Arc::new(SphericalGrid::new(config.lmax)?);

    let pairs: Vec<(f64, f64)> = p_values
        .iter()
        .flat_map(|&p| q_values.iter().map(move |&q| (p, q)))
        .collect();
    let lambda2: HashMap<(u64, u64), f64> = pairs
        .par_iter()
        .map(|&(p, q)| {
            let l2 = linearized_spectrum(p, q, 2).map_or(f64::NAN, |r| r.lambda[2]);
            ((p.to_bits(), q.to_bits()), l2)
        })
        .collect();

    let cells: Vec<(f64, f64, u64)> = pairs
        .iter()
        .flat_map(|&(p, q)| seeds.iter().map(move |&s| (p, q, s)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(p, q, seed)| {
            let perturbation = PerturbationSpec::from_seed(seed);
            let lambda_2 = lambda2[&(p.to_bits(), q.to_bits())];
            let outcome = perturbed_start(grid.clone(), &perturbation)
                .and_then(|h0| solve(&h0, p, q, config));
            match outcome {
                Ok(o) => ScanRow {
                    p,
                    q,
                    seed,
                    perturbation,
                    status: Some(o.status),
                    sphere_distance: o.sphere_distance,
                    unit_distance: o
                        .final_h
                        .h()
                        .values()
                        .iter()
                        .fold(0.0, |m, v| m.max((v - 1.0).abs())),
                    iterations: o.iterations,
                    lambda_2,
                    residual: o.residual,
                    error: o.detail,
                },
                Err(e) => ScanRow {
                    p,
                    q,
                    seed,
                    perturbation,
                    status: None,
                    sphere_distance: f64::NAN,
                    unit_distance: f64::NAN,
                    iterations: 0,
                    lambda_2,
                    residual: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ScanResult { rows, metadata })
}
