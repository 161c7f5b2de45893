//! Run configuration, read from a flat TOML file.
//!
//! ```toml
//! V = [[2, 20.0]]
//! W = [[1, 1.0]]
//! cutoff = 64
//! deltas = [0.1, 0.05, 0.025]
//! ```
//!
//! Every key is optional; missing keys take the defaults of [`RunConfig::default`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::bloch::FourierCutoff;
use crate::error::{Error, Result};
use crate::potential::{ParityClass, PeriodicPotential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice potential as `[index, amplitude]` pairs; indices must be even.
    #[serde(rename = "V")]
    pub v: Vec<(usize, f64)>,
    /// Perturbation as `[index, amplitude]` pairs; indices must be odd.
    #[serde(rename = "W")]
    pub w: Vec<(usize, f64)>,
    pub cutoff: usize,
    /// Which crossing at `k = pi`, counted from the bottom.
    pub crossing: usize,
    pub mu_sharp: f64,
    /// Safety factor for the gap window, in `(0, 1)`.
    pub a: f64,
    pub deltas: Vec<f64>,
    /// Overrides for the Dirac coefficients used by the `nld` command.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_sharp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_sharp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    pub ode_tol: f64,
    pub profile_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    pub kernel_points: usize,
    pub band_k_points: usize,
    pub n_bands: usize,
    pub newton_h: f64,
    pub residual_h: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub newton_damping: f64,
    /// Keep every n-th sample in field CSVs.
    pub export_stride: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            v: vec![(2, 20.0)],
            w: vec![(1, 1.0)],
            cutoff: 64,
            crossing: 1,
            mu_sharp: 0.0,
            a: 0.9,
            deltas: vec![0.1, 0.05, 0.025],
            c_sharp: None,
            theta_sharp: None,
            beta1: None,
            beta2: None,
            ode_tol: 1e-10,
            profile_points: 4000,
            y_max: None,
            kernel_points: 200,
            band_k_points: 129,
            n_bands: 8,
            newton_h: 1.0 / 128.0,
            residual_h: 1.0 / 256.0,
            newton_tol: 1e-10,
            newton_max_iters: 25,
            newton_damping: 1.0,
            export_stride: 16,
        }
    }
}

fn integer_reciprocal(name: &str, h: f64) -> Result<()> {
    let inv = 1.0 / h;
    if !(h > 0.0) || (inv - inv.round()).abs() > 1e-9 {
        return Err(Error::Config(format!("{name} = {h} must be 1/n for an integer n")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn potential_v(&self) -> Result<PeriodicPotential> {
        PeriodicPotential::new(ParityClass::EvenIndex, self.v.iter().copied())
    }

    pub fn potential_w(&self) -> Result<PeriodicPotential> {
        PeriodicPotential::new(ParityClass::OddIndex, self.w.iter().copied())
    }

    pub fn fourier_cutoff(&self) -> Result<FourierCutoff> {
        FourierCutoff::new(self.cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.potential_v()?;
        let w = self.potential_w()?;
        let cut = self.fourier_cutoff()?;
        cut.require_for(&v)?;
        cut.require_for(&w)?;
        if self.crossing == 0 {
            return Err(Error::Config("crossing is one-based".into()));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::Config(format!("a = {} must lie in (0, 1)", self.a)));
        }
        if self.deltas.is_empty() {
            return Err(Error::Config("deltas must not be empty".into()));
        }
        for &d in &self.deltas {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delta = {d} must be positive")));
            }
        }
        if !self.mu_sharp.is_finite() {
            return Err(Error::Config("mu_sharp must be finite".into()));
        }
        if let Some(th) = self.theta_sharp {
            if self.mu_sharp.abs() >= self.a * th.abs() {
                return Err(Error::Config(format!(
                    "|mu_sharp| = {} must be below a |theta_sharp| = {}",
                    self.mu_sharp.abs(),
                    self.a * th.abs()
                )));
            }
        }
        integer_reciprocal("newton_h", self.newton_h)?;
        integer_reciprocal("residual_h", self.residual_h)?;
        if self.export_stride == 0 || self.band_k_points < 2 || self.n_bands == 0 {
            return Err(Error::Config("export_stride, band_k_points and n_bands must be positive".into()));
        }
        if !(self.ode_tol > 0.0 && self.newton_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
