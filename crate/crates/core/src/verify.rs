//! Verification campaign over analytic and seeded random bodies.
//!
//! Every check yields a [`CheckRecord`]; the report is the list of records.
//! Residual checks pass when `residual_or_deficit <= tolerance`, deficit and
//! slack checks (names ending in `_deficit`, `_slack`, `_constant`) pass when
//! `residual_or_deficit >= -tolerance`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{
    compute_geometry, make_ball, make_random_body, pde_residual, polar_identity_check,
    BodyGeometry, SupportFunction,
};
use crate::centroaffine::{
    euler_identity_residual, gauss_equation_residual, ibp_residual, lemma32_check, lemma33_check,
    local_bm2_deficit, local_bm_deficit, main_identity_residual, CentroAffineStructure,
};
use crate::error::{Error, Result};
use crate::solver::linearized_spectrum;
use crate::sphere_grid::fields::ScalarField;
use crate::sphere_grid::{coeff_index, SphericalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub body_id: String,
    pub lmax: usize,
    pub residual_or_deficit: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn upper(name: &str, body_id: &str, lmax: usize, value: f64, tolerance: f64) -> Self {
        Self {
            check_name: name.to_string(),
            body_id: body_id.to_string(),
            lmax,
            residual_or_deficit: value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    fn lower(name: &str, body_id: &str, lmax: usize, value: f64, tolerance: f64) -> Self {
        Self {
            pass: value >= -tolerance,
            ..Self::upper(name, body_id, lmax, value, tolerance)
        }
    }

    /// Family name: the check name without a `[...]` parameter suffix.
    pub fn family(&self) -> &str {
        self.check_name
            .split('[')
            .next()
            .unwrap_or(&self.check_name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub main_identity: f64,
    pub gauss_equation: f64,
    pub ibp: f64,
    pub euler: f64,
    /// Relative to the deficit scale.
    pub deficit: f64,
    pub equality: f64,
    pub lemma: f64,
    pub lemma_consistency: f64,
    pub polar_random: f64,
    pub polar_ball: f64,
    pub spectrum: f64,
    pub analytic_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            main_identity: 1e-6,
            gauss_equation: 1e-6,
            ibp: 1e-7,
            euler: 1e-7,
            deficit: 1e-9,
            equality: 1e-8,
            lemma: 1e-8,
            lemma_consistency: 1e-8,
            polar_random: 1e-5,
            polar_ball: 1e-10,
            spectrum: 1e-6,
            analytic_residual: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub lmax: usize,
    pub seeds: Vec<u64>,
    pub amplitude: f64,
    pub lmax_body: usize,
    /// Random test fields per body for the inequality campaign.
    pub fields_per_body: usize,
    /// Band limit of the random test fields.
    pub field_degree: usize,
    pub alphas: Vec<f64>,
    pub euler_exponents: Vec<f64>,
    pub strictness_deltas: Vec<f64>,
    pub polar: bool,
    /// `(p, q)` pairs for the spectrum check.
    pub spectrum_pairs: Vec<(f64, f64)>,
    pub spectrum_lmax: usize,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            lmax: 32,
            seeds: (0..20).collect(),
            amplitude: 0.05,
            lmax_body: 3,
            fields_per_body: 10,
            field_degree: 4,
            alphas: vec![-1.0, -0.5, 0.0, 0.5],
            euler_exponents: vec![-2.5, -1.0, 0.0],
            strictness_deltas: vec![1e-3, 1e-2],
            polar: true,
            spectrum_pairs: vec![(-1.0, 2.5), (-1.0, -1.0), (-3.0, 3.0)],
            spectrum_lmax: 8,
            tolerances: Tolerances::default(),
        }
    }
}

impl VerifyConfig {
    /// Smallest grid that resolves `h·f` for a body and a test field with one
    /// degree to spare.
    pub fn min_lmax(&self) -> usize {
        (self.lmax_body + self.field_degree.max(2) + 1).max(crate::sphere_grid::MIN_LMAX)
    }

    pub fn validate(&self) -> Result<()> {
        let min = self.min_lmax();
        if self.lmax < min {
            return Err(Error::LmaxTooSmall {
                lmax: self.lmax,
                min,
            });
        }
        if !(self.amplitude >= 0.0) || self.amplitude > 1.0 {
            return Err(Error::InvalidConfig("amplitude must lie in [0, 1]".into()));
        }
        if self.strictness_deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidConfig(
                "strictness deltas must be positive".into(),
            ));
        }
        if self.spectrum_lmax < 2 {
            return Err(Error::InvalidConfig(
                "spectrum_lmax must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// A seeded band-limited test field `Σ c_lm Y_l^m` with `l` in `1..=degree`.
pub fn random_field(grid: &SphericalGrid, seed: u64, degree: usize) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f1e1d);
    let mut c = vec![0.0; grid.n_coeffs()];
    for l in 1..=degree {
        for m in -(l as i64)..=(l as i64) {
            c[coeff_index(l, m)] = rng.gen_range(-1.0..=1.0) / l as f64;
        }
    }
    ScalarField::from_coeffs(grid, c)
}

/// `exp(0.3 φ)` with `φ` a normalized random field; strictly positive.
pub fn random_positive_field(grid: &SphericalGrid, seed: u64, degree: usize) -> ScalarField {
    let f = random_field(grid, seed, degree);
    let s = f.sup_norm().max(1e-300);
    f.map(|v| (0.3 * v / s).exp())
}

/// `⟨x/h, w⟩`, the equality field of the local Brunn–Minkowski inequality.
pub fn equality_field(grid: &SphericalGrid, body: &BodyGeometry, w: &[f64; 3]) -> ScalarField {
    ScalarField::from_values(
        grid.nodes()
            .iter()
            .zip(body.h.values())
            .map(|(x, h)| (x[0] * w[0] + x[1] * w[1] + x[2] * w[2]) / h)
            .collect(),
    )
}

/// Largest `c` with `deficit(f_eq + δ Y_2^0) >= c δ²` over `deltas`,
/// where `f_eq = ⟨x/h, e_3⟩`.
pub fn strictness_constant(ca: &CentroAffineStructure, body: &BodyGeometry, deltas: &[f64]) -> f64 {
    let grid = ca.grid();
    let feq = equality_field(grid, body, &[0.0, 0.0, 1.0]);
    let y20 = grid.harmonic(2, 0);
    deltas
        .iter()
        .map(|&d| {
            let f = feq.zip_map(&y20, |a, b| a + d * b);
            local_bm_deficit(ca, body, &f).value / (d * d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// All per-body checks. `generic` bodies get the seeded field campaign and the
/// looser polar tolerance; otherwise the body is treated as an exact ball.
pub fn check_body(
    id: &str,
    sf: &SupportFunction,
    seed: u64,
    generic: bool,
    config: &VerifyConfig,
) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let lmax = sf.grid().lmax();
    let grid = sf.grid();
    let geom = compute_geometry(sf)?;
    let ca = CentroAffineStructure::new(&geom);
    let mut out = Vec::new();

    out.push(CheckRecord::upper(
        "main_identity",
        id,
        lmax,
        main_identity_residual(&ca, &geom).worst(),
        tol.main_identity,
    ));
    out.push(CheckRecord::upper(
        "gauss_equation",
        id,
        lmax,
        gauss_equation_residual(&ca, &geom),
        tol.gauss_equation,
    ));
    for &p in &config.euler_exponents {
        out.push(CheckRecord::upper(
            &format!("euler_identity[p={p:?}]"),
            id,
            lmax,
            euler_identity_residual(&geom, p),
            tol.euler,
        ));
    }

    for (k, w) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        .iter()
        .enumerate()
    {
        let f = equality_field(grid, &geom, w);
        out.push(CheckRecord::upper(
            &format!("local_bm_equality[w=e{}]", k + 1),
            id,
            lmax,
            local_bm_deficit(&ca, &geom, &f).relative().abs(),
            tol.equality,
        ));
    }
    let c = strictness_constant(&ca, &geom, &config.strictness_deltas);
    out.push(CheckRecord {
        pass: c > 0.0,
        ..CheckRecord::lower("local_bm_strictness_constant", id, lmax, c, 0.0)
    });

    let n_fields = if generic { config.fields_per_body } else { 1 };
    for j in 0..n_fields {
        let fseed = seed.wrapping_mul(1000).wrapping_add(j as u64);
        let fid = format!("{id}/f{j}");
        let f = random_field(grid, fseed, config.field_degree);
        out.push(CheckRecord::upper(
            "ibp",
            &fid,
            lmax,
            ibp_residual(&ca, &geom, &f),
            tol.ibp,
        ));
        out.push(CheckRecord::lower(
            "local_bm_deficit",
            &fid,
            lmax,
            local_bm_deficit(&ca, &geom, &f).relative(),
            tol.deficit,
        ));
        out.push(CheckRecord::lower(
            "local_bm2_deficit",
            &fid,
            lmax,
            local_bm2_deficit(&ca, &geom, &f).relative(),
            tol.deficit,
        ));
        let pf = random_positive_field(grid, fseed, config.field_degree);
        out.push(CheckRecord::lower(
            "lemma32_slack[f=positive]",
            &fid,
            lmax,
            lemma32_check(&ca, &geom, &pf)?.relative_slack(),
            tol.lemma,
        ));
    }

    let r = geom.r.clone();
    for &alpha in &config.alphas {
        let s33 = lemma33_check(&ca, &geom, alpha);
        out.push(CheckRecord::lower(
            &format!("lemma33_slack[alpha={alpha:?}]"),
            id,
            lmax,
            s33.relative_slack(),
            tol.lemma,
        ));
        let s32 = lemma32_check(&ca, &geom, &r.map(|v| v.powf(alpha)))?;
        out.push(CheckRecord::lower(
            &format!("lemma32_slack[alpha={alpha:?}]"),
            id,
            lmax,
            s32.relative_slack(),
            tol.lemma,
        ));
        let gap = (s32.lhs - s33.lhs).abs().max((s32.rhs - s33.rhs).abs());
        out.push(CheckRecord::upper(
            &format!("lemma_consistency[alpha={alpha:?}]"),
            id,
            lmax,
            gap,
            tol.lemma_consistency,
        ));
    }

    if config.polar {
        let t = if generic {
            tol.polar_random
        } else {
            tol.polar_ball
        };
        out.push(CheckRecord::upper(
            "polar_identity",
            id,
            lmax,
            polar_identity_check(sf)?,
            t,
        ));
    }
    Ok(out)
}

/// Runs the full campaign. Records come back in a fixed order independent of
/// scheduling.
pub fn run_verification(config: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    config.validate()?;
    let grid = Arc::new(SphericalGrid::new(config.lmax)?);
    let tol = &config.tolerances;
    let mut records = Vec::new();

    // analytic family: the unit sphere and an origin-centred ball
    let sphere = make_ball(grid.clone(), [0.0; 3], 1.0)?;
    let ball = make_ball(grid.clone(), [0.0; 3], 1.7)?;
    let shifted = make_ball(grid.clone(), [0.1, -0.05, 0.2], 1.0)?;
    for (p, q) in [(-1.0, 2.5), (-2.0, 2.0), (0.0, 7.0)] {
        let g = pde_residual(&compute_geometry(&sphere)?, p, q, 1.0).sup_norm();
        records.push(CheckRecord::upper(
            &format!("sphere_pde_residual[p={p:?},q={q:?}]"),
            "unit-sphere",
            config.lmax,
            g,
            tol.analytic_residual,
        ));
    }
    let analytic = [
        ("unit-sphere", &sphere),
        ("ball-r1.7", &ball),
        ("ball-shifted", &shifted),
    ];
    let per_analytic: Vec<Result<Vec<CheckRecord>>> = analytic
        .par_iter()
        .enumerate()
        .map(|(i, (id, sf))| {
            let polar_ok = config.polar && !id.ends_with("shifted");
            let c = VerifyConfig {
                polar: polar_ok,
                ..config.clone()
            };
            check_body(id, sf, u64::MAX - i as u64, false, &c)
        })
        .collect();
    for r in per_analytic {
        records.extend(r?);
    }

    let per_body: Vec<Result<Vec<CheckRecord>>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let sf = make_random_body(grid.clone(), seed, config.amplitude, config.lmax_body)?;
            check_body(&format!("random-{seed}"), &sf, seed, true, config)
        })
        .collect();
    for r in per_body {
        records.extend(r?);
    }

    let spectra: Vec<Result<CheckRecord>> = config
        .spectrum_pairs
        .par_iter()
        .map(|&(p, q)| {
            let s = linearized_spectrum(p, q, config.spectrum_lmax)?;
            Ok(CheckRecord::upper(
                &format!("spectrum_gap[p={p:?},q={q:?}]"),
                "unit-sphere",
                config.lmax,
                s.max_abs_gap,
                tol.spectrum,
            ))
        })
        .collect();
    for r in spectra {
        records.push(r?);
    }
    Ok(records)
}

/// Distinct check families in a report, in first-appearance order.
pub fn families(records: &[CheckRecord]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in records {
        if !out.iter().any(|f| f == r.family()) {
            out.push(r.family().to_string());
        }
    }
    out
}
