use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lpdual::solver::SolverConfig;
use lpdual::verify::VerifyConfig;
use serde::{Deserialize, Serialize};

use crate::lattice::{parse_seeds, parse_values};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Verify,
    Solve,
    Spectrum,
    Scan,
    Polar,
}

/// A lattice axis, written either as text (`"-2.5:0.5:-1"`, `"0,7"`) or as numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Axis::One(v) => Ok(vec![*v]),
            Axis::Many(v) => Ok(v.clone()),
            Axis::Text(s) => parse_values(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedAxis {
    Many(Vec<u64>),
    Text(String),
}

impl SeedAxis {
    pub fn values(&self) -> Result<Vec<u64>> {
        match self {
            SeedAxis::Many(v) => Ok(v.clone()),
            SeedAxis::Text(s) => parse_seeds(s),
        }
    }
}

/// Everything a run depends on. Command-line flags override the `--config`
/// file; after [`RunConfig::resolve`] all lattices are explicit value lists
/// and the resolved form is what gets echoed into report metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    /// Body JSON used as input (verify, solve, polar).
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Grid band limit for the command; for `spectrum` the highest degree.
    pub lmax: Option<usize>,
    pub p: Option<Axis>,
    pub q: Option<Axis>,
    pub seeds: Option<SeedAxis>,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub spectrum_lmax: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            input: None,
            out: None,
            lmax: None,
            p: None,
            q: None,
            seeds: None,
            solver: SolverConfig::default(),
            verify: VerifyConfig::default(),
            spectrum_lmax: 8,
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lmax: Option<usize>,
    pub p: Option<String>,
    pub q: Option<String>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Applies flags and command defaults and expands every lattice.
    pub fn resolve(mut self, command: CommandName, o: Overrides) -> Result<Self> {
        self.command = Some(command);
        if o.input.is_some() {
            self.input = o.input;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
        if o.lmax.is_some() {
            self.lmax = o.lmax;
        }
        if let Some(p) = o.p {
            self.p = Some(Axis::Text(p));
        }
        if let Some(q) = o.q {
            self.q = Some(Axis::Text(q));
        }
        if let Some(s) = o.seeds {
            self.seeds = Some(SeedAxis::Text(s));
        }

        let (dp, dq, ds) = match command {
            CommandName::Scan => ("-2.5:0.5:-1", "2:0.25:2.75", "0,1,2"),
            _ => ("-1", "2.5", "0"),
        };
        let p = match &self.p {
            Some(a) => a.values()?,
            None => parse_values(dp)?,
        };
        let q = match &self.q {
            Some(a) => a.values()?,
            None => parse_values(dq)?,
        };
        let seeds = match &self.seeds {
            Some(a) => a.values()?,
            None => parse_seeds(ds)?,
        };
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            bail!("p and q values must be finite");
        }

        if let Some(l) = self.lmax {
            match command {
                CommandName::Solve | CommandName::Scan => self.solver.lmax = l,
                CommandName::Verify | CommandName::Polar => self.verify.lmax = l,
                CommandName::Spectrum => self.spectrum_lmax = l,
            }
        }
        self.lmax = Some(self.effective_lmax(command));
        // polar and verify accept a missing p/q, the rest always have one
        let explicit_pq = self.p.is_some() || self.q.is_some();
        if command != CommandName::Polar || explicit_pq {
            self.p = Some(Axis::Many(p));
            self.q = Some(Axis::Many(q));
        }
        self.seeds = Some(SeedAxis::Many(seeds));
        Ok(self)
    }

    fn effective_lmax(&self, command: CommandName) -> usize {
        match command {
            CommandName::Solve | CommandName::Scan => self.solver.lmax,
            CommandName::Verify | CommandName::Polar => self.verify.lmax,
            CommandName::Spectrum => self.spectrum_lmax,
        }
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p
            .as_ref()
            .and_then(|a| a.values().ok())
            .unwrap_or_default()
    }

    pub fn q_values(&self) -> Vec<f64> {
        self.q
            .as_ref()
            .and_then(|a| a.values().ok())
            .unwrap_or_default()
    }

    pub fn seed_values(&self) -> Vec<u64> {
        self.seeds
            .as_ref()
            .and_then(|a| a.values().ok())
            .unwrap_or_default()
    }
}
