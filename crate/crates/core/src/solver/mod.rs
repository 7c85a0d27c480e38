//! Numerical solution of `h^{p−1} |Dh|^{n+1−q} K = 1` on S² (n = 2).
//!
//! The unknown is the coefficient vector of `h` at the configured band limit.
//! Two iterations are available:
//!
//! * a damped fixed point in `log h`, preconditioned by the linearization of
//!   `log F[h] = log(h^{1−p} r^{q−3} det A[h])` at the unit sphere, which acts
//!   on degree `l` as the multiplier `λ_l = q − p − l(l+1)`;
//! * Newton's method on the Galerkin residual `Π_lmax log F[h]` with a
//!   central-difference Jacobian in coefficient space.
//!
//! The default runs the fixed point until the sup-norm residual drops below
//! `newton_switch` and finishes with Newton.

mod polar_map;
mod scan;
mod spectrum;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{compute_geometry, log_monge_ampere, pde_residual, Provenance, SupportFunction};
use crate::error::{Error, Result};
use crate::sphere_grid::{degree_order, SphericalGrid};

pub use polar_map::{polar_problem_map, PolarProblem};
pub use scan::{
    config_fingerprint, in_polar_region, in_uniqueness_region, perturbed_start, uniqueness_scan,
    PerturbationSpec, ScanMetadata, ScanResult, ScanRow, CSV_HEADER,
};
pub use spectrum::{closed_form_eigenvalue, linearized_spectrum, SpectrumReport};

/// Residuals above this (or non-finite) classify a run as diverged.
const DIVERGENCE_THRESHOLD: f64 = 1e8;
/// Preconditioner multipliers are kept at least this far from zero.
const MULTIPLIER_FLOOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Preconditioned damped fixed point, switching to Newton near the solution.
    DampedFixedPoint,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub dt: f64,
    pub damping: f64,
    pub max_iters: usize,
    /// Sup-norm threshold on `G[h] − 1`.
    pub tol_residual: f64,
    /// Threshold on `‖h − mean h‖∞ / mean h` for the sphere classification.
    pub tol_sphere: f64,
    pub lmax: usize,
    /// Freeze the degree-1 (translation) coefficients.
    pub project_degree1: bool,
    /// For `p = q`, rescale iterates to mean 1.
    pub normalize_scale: bool,
    /// Sup-norm residual below which the fixed point hands over to Newton.
    pub newton_switch: f64,
    /// Step of the central-difference Jacobian.
    pub fd_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::DampedFixedPoint,
            dt: 1.0,
            damping: 0.1,
            max_iters: 400,
            tol_residual: 1e-10,
            tol_sphere: 1e-5,
            lmax: 16,
            project_degree1: false,
            normalize_scale: false,
            newton_switch: 1e-2,
            fd_step: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.tol_residual > 0.0) || !(self.tol_sphere > 0.0) || !(self.newton_switch > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step must be positive");
        }
        if self.lmax < crate::sphere_grid::MIN_LMAX {
            return Err(Error::LmaxTooSmall {
                lmax: self.lmax,
                min: crate::sphere_grid::MIN_LMAX,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    ConvergedSphere,
    ConvergedNonSphere,
    Diverged,
    MaxIters,
    LostConvexity,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::ConvergedSphere => "ConvergedSphere",
            SolveStatus::ConvergedNonSphere => "ConvergedNonSphere",
            SolveStatus::Diverged => "Diverged",
            SolveStatus::MaxIters => "MaxIters",
            SolveStatus::LostConvexity => "LostConvexity",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(
            self,
            SolveStatus::ConvergedSphere | SolveStatus::ConvergedNonSphere
        )
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Final iterate; the best one for `MaxIters`, the offending one for `LostConvexity`.
    pub final_h: SupportFunction,
    /// Sup-norm of `G[h] − 1` before the first step and after every accepted step.
    pub residual_history: Vec<f64>,
    pub sphere_distance: f64,
    pub iterations: usize,
    /// Sup-norm of `G[final_h] − 1` (NaN when the geometry is invalid).
    pub residual: f64,
    pub detail: Option<String>,
}

/// JSON form of an outcome, with the full coefficient vector of the final body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcomeDocument {
    pub p: f64,
    pub q: f64,
    pub status: SolveStatus,
    pub sphere_distance: f64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub detail: Option<String>,
    pub final_h: crate::body::BodyDocument,
}

impl SolveOutcome {
    pub fn to_document(&self, p: f64, q: f64) -> SolveOutcomeDocument {
        SolveOutcomeDocument {
            p,
            q,
            status: self.status,
            sphere_distance: self.sphere_distance,
            iterations: self.iterations,
            residual: self.residual,
            residual_history: self.residual_history.clone(),
            detail: self.detail.clone(),
            final_h: crate::body::BodyDocument::from_support(&self.final_h),
        }
    }
}

/// Sup-norm of `G[h] − 1`, or the geometry error.
pub fn residual_norm(sf: &SupportFunction, p: f64, q: f64) -> Result<f64> {
    let geom = compute_geometry(sf)?;
    Ok(pde_residual(&geom, p, q, 1.0).sup_norm())
}

struct Problem<'a> {
    grid: &'a Arc<SphericalGrid>,
    p: f64,
    q: f64,
    config: &'a SolverConfig,
    /// Coefficient indices held fixed.
    pinned: Vec<bool>,
}

impl Problem<'_> {
    fn support(&self, coeffs: Vec<f64>) -> SupportFunction {
        SupportFunction::from_coeffs(
            self.grid.clone(),
            coeffs,
            Provenance::Solver {
                p: self.p,
                q: self.q,
            },
        )
        .expect("coefficients sized to the solver grid")
    }

    /// `(sup |G − 1|, Π log F)` or a geometry error.
    fn evaluate(&self, sf: &SupportFunction) -> Result<(f64, Vec<f64>)> {
        let geom = compute_geometry(sf)?;
        let res = pde_residual(&geom, self.p, self.q, 1.0).sup_norm();
        let log_f = log_monge_ampere(&geom, self.p, self.q);
        Ok((res, self.grid.analyze(&log_f)))
    }

    fn multiplier(&self, l: usize) -> f64 {
        let lam = closed_form_eigenvalue(self.p, self.q, l);
        if lam.abs() < MULTIPLIER_FLOOR {
            if lam < 0.0 {
                -MULTIPLIER_FLOOR
            } else {
                MULTIPLIER_FLOOR
            }
        } else {
            lam
        }
    }

    fn fixed_point_update(
        &self,
        sf: &SupportFunction,
        log_f: &[f64],
        step: f64,
    ) -> SupportFunction {
        let mut delta = vec![0.0; log_f.len()];
        for (i, d) in delta.iter_mut().enumerate() {
            if !self.pinned[i] {
                let (l, _) = degree_order(i);
                *d = -log_f[i] / self.multiplier(l);
            }
        }
        let dv = self.grid.synthesize(&delta);
        let next: Vec<f64> = sf
            .h()
            .values()
            .iter()
            .zip(&dv)
            .map(|(h, d)| (h.ln() + step * d).exp())
            .collect();
        let mut coeffs = self.grid.analyze(&next);
        // keep frozen modes exactly where they were
        for (i, c) in coeffs.iter_mut().enumerate() {
            if self.pinned[i] {
                *c = sf.coeffs()[i];
            }
        }
        self.support(coeffs)
    }

    fn newton_direction(&self, sf: &SupportFunction, log_f: &[f64]) -> Result<Vec<f64>> {
        let n = log_f.len();
        let base = sf.coeffs().to_vec();
        let eps = self.config.fd_step;
        let columns: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                if self.pinned[j] {
                    return Ok(Vec::new());
                }
                let mut plus = base.clone();
                plus[j] += eps;
                let mut minus = base.clone();
                minus[j] -= eps;
                let (_, fp) = self.evaluate(&self.support(plus))?;
                let (_, fm) = self.evaluate(&self.support(minus))?;
                Ok(fp
                    .iter()
                    .zip(&fm)
                    .map(|(a, b)| (a - b) / (2.0 * eps))
                    .collect())
            })
            .collect();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for (j, col) in columns.into_iter().enumerate() {
            let col = col?;
            if self.pinned[j] {
                continue;
            }
            for i in 0..n {
                if !self.pinned[i] {
                    jac[(i, j)] = col[i];
                }
            }
        }
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            if self.pinned[i] {
                jac[(i, i)] = 1.0;
            } else {
                rhs[i] = -log_f[i];
            }
        }
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidConfig("singular Newton Jacobian".into()))?;
        Ok(delta.iter().copied().collect())
    }

    fn normalize(&self, sf: SupportFunction) -> SupportFunction {
        if self.config.normalize_scale && (self.p - self.q).abs() < 1e-12 {
            let mean = sf.mean();
            sf.scaled(1.0 / mean)
        } else {
            sf
        }
    }
}

/// Solves the `(p, q)` problem with right-hand side 1 from the start `h0`.
///
/// Non-convex or non-positive iterates that cannot be avoided by step
/// halving end the run with [`SolveStatus::LostConvexity`]; the offending
/// iterate is returned as `final_h`.
pub fn solve(h0: &SupportFunction, p: f64, q: f64, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let grid = if h0.grid().lmax() == config.lmax {
        h0.grid().clone()
    } else {
        Arc::new(SphericalGrid::new(config.lmax)?)
    };
    let mut start = h0.coeffs().to_vec();
    start.resize(grid.n_coeffs(), 0.0);

    let scale_kernel = (p - q).abs() < 1e-12;
    let pinned = (0..grid.n_coeffs())
        .map(|i| {
            let (l, _) = degree_order(i);
            (l == 0 && scale_kernel) || (l == 1 && config.project_degree1)
        })
        .collect();
    let problem = Problem {
        grid: &grid,
        p,
        q,
        config,
        pinned,
    };

    let mut current = problem.normalize(problem.support(start));
    let mut history = Vec::new();
    let (mut res, mut log_f) = match problem.evaluate(&current) {
        Ok(v) => v,
        Err(e) => {
            return Ok(finish(
                current,
                SolveStatus::LostConvexity,
                history,
                0,
                Some(e.to_string()),
            ))
        }
    };
    history.push(res);
    let mut best = (res, current.clone());
    let mut use_newton = config.method == Method::Newton;

    for iter in 1..=config.max_iters {
        if res <= config.tol_residual {
            return Ok(converged(current, history, iter - 1, config));
        }
        if !res.is_finite() || res > DIVERGENCE_THRESHOLD {
            return Ok(finish(
                current,
                SolveStatus::Diverged,
                history,
                iter - 1,
                None,
            ));
        }
        if !use_newton && res < config.newton_switch {
            use_newton = true;
        }

        let mut accepted = None;
        let mut last_failure = None;
        if use_newton {
            let delta = match problem.newton_direction(&current, &log_f) {
                Ok(d) => d,
                Err(e) => {
                    return Ok(finish(
                        current,
                        SolveStatus::LostConvexity,
                        history,
                        iter - 1,
                        Some(e.to_string()),
                    ))
                }
            };
            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let coeffs = current
                    .coeffs()
                    .iter()
                    .zip(&delta)
                    .map(|(c, d)| c + t * d)
                    .collect();
                let trial = problem.normalize(problem.support(coeffs));
                match problem.evaluate(&trial) {
                    Ok((r, lf)) if r < res || r <= config.tol_residual => {
                        accepted = Some((trial, r, lf));
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => last_failure = Some((trial, e)),
                }
                t *= 0.5;
            }
        } else {
            let mut t = config.dt * config.damping;
            for _ in 0..MAX_BACKTRACKS {
                let trial = problem.normalize(problem.fixed_point_update(&current, &log_f, t));
                match problem.evaluate(&trial) {
                    Ok((r, lf)) => {
                        accepted = Some((trial, r, lf));
                        break;
                    }
                    Err(e) => last_failure = Some((trial, e)),
                }
                t *= 0.5;
            }
        }

        match accepted {
            Some((next, r, lf)) => {
                current = next;
                res = r;
                log_f = lf;
                history.push(res);
                if res < best.0 {
                    best = (res, current.clone());
                }
            }
            None => {
                if let Some((trial, e)) = last_failure {
                    return Ok(finish(
                        trial,
                        SolveStatus::LostConvexity,
                        history,
                        iter,
                        Some(e.to_string()),
                    ));
                }
                // Newton made no progress: the residual has reached its floor
                let status = if res <= config.tol_residual {
                    return Ok(converged(current, history, iter - 1, config));
                } else {
                    SolveStatus::MaxIters
                };
                return Ok(finish(
                    best.1,
                    status,
                    history,
                    iter,
                    Some("line search stalled".into()),
                ));
            }
        }
    }
    if res <= config.tol_residual {
        return Ok(converged(current, history, config.max_iters, config));
    }
    if !res.is_finite() || res > DIVERGENCE_THRESHOLD {
        return Ok(finish(
            current,
            SolveStatus::Diverged,
            history,
            config.max_iters,
            None,
        ));
    }
    Ok(finish(
        best.1,
        SolveStatus::MaxIters,
        history,
        config.max_iters,
        None,
    ))
}

fn converged(
    final_h: SupportFunction,
    history: Vec<f64>,
    iterations: usize,
    config: &SolverConfig,
) -> SolveOutcome {
    let status = if final_h.sphere_distance() <= config.tol_sphere {
        SolveStatus::ConvergedSphere
    } else {
        SolveStatus::ConvergedNonSphere
    };
    finish(final_h, status, history, iterations, None)
}

fn finish(
    final_h: SupportFunction,
    status: SolveStatus,
    residual_history: Vec<f64>,
    iterations: usize,
    detail: Option<String>,
) -> SolveOutcome {
    let (p, q) = match final_h.provenance() {
        Provenance::Solver { p, q } => (*p, *q),
        _ => (f64::NAN, f64::NAN),
    };
    let residual = residual_norm(&final_h, p, q).unwrap_or(f64::NAN);
    SolveOutcome {
        status,
        sphere_distance: final_h.sphere_distance(),
        final_h,
        residual_history,
        iterations,
        residual,
        detail,
    }
}

/// `1 + a₁⟨x, u⟩ + a₂ Y_2^m` on `grid`.
pub fn sphere_perturbation(
    grid: Arc<SphericalGrid>,
    a1: f64,
    u: [f64; 3],
    a2: f64,
    m: i64,
) -> Result<SupportFunction> {
    let mut coeffs = vec![0.0; grid.n_coeffs()];
    coeffs[0] = (4.0 * PI).sqrt();
    crate::body::add_linear(&mut coeffs, &[a1 * u[0], a1 * u[1], a1 * u[2]]);
    coeffs[crate::sphere_grid::coeff_index(2, m)] += a2;
    SupportFunction::from_coeffs(
        grid,
        coeffs,
        Provenance::Analytic {
            family: format!("perturbed-sphere(a1={a1:?},u={u:?},a2={a2:?},m={m})"),
        },
    )
}
