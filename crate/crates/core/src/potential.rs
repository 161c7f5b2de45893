//! Finite cosine-series periodic potentials.
//!
//! A potential is `sum_m a_m cos(2 pi m x)` with period one. The parity class says
//! which Fourier indices may carry a nonzero amplitude: the lattice potential `V`
//! lives on even indices (so it also has period 1/2), the perturbation `W` on odd
//! ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityClass {
    EvenIndex,
    OddIndex,
}

impl ParityClass {
    pub fn admits(self, index: usize) -> bool {
        match self {
            ParityClass::EvenIndex => index % 2 == 0,
            ParityClass::OddIndex => index % 2 == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPotential {
    terms: Vec<(usize, f64)>,
    parity: ParityClass,
}

impl PeriodicPotential {
    /// Build from `(index, amplitude)` pairs. Zero amplitudes are dropped.
    pub fn new(parity: ParityClass, terms: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (m, a) in terms {
            if m == 0 {
                return Err(Error::InvalidPotential(
                    "index 0 (a constant shift) is not allowed; indices are positive".into(),
                ));
            }
            if !a.is_finite() {
                return Err(Error::InvalidPotential(format!("amplitude at index {m} is not finite")));
            }
            if out.iter().any(|&(n, _)| n == m) {
                return Err(Error::InvalidPotential(format!("index {m} listed twice")));
            }
            if a == 0.0 {
                continue;
            }
            if !parity.admits(m) {
                return Err(Error::InvalidPotential(format!(
                    "index {m} violates the {parity:?} parity class"
                )));
            }
            out.push((m, a));
        }
        out.sort_by_key(|&(m, _)| m);
        Ok(Self { terms: out, parity })
    }

    pub fn zero(parity: ParityClass) -> Self {
        Self { terms: Vec::new(), parity }
    }

    /// Single term `amp * cos(2 pi index x)`, parity class inferred from the index.
    pub fn cosine(index: usize, amp: f64) -> Result<Self> {
        let parity = if index % 2 == 0 { ParityClass::EvenIndex } else { ParityClass::OddIndex };
        Self::new(parity, [(index, amp)])
    }

    pub fn parity(&self) -> ParityClass {
        self.parity
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> usize {
        self.terms.last().map_or(0, |&(m, _)| m)
    }

    pub fn amplitude(&self, index: usize) -> f64 {
        self.terms.iter().find(|&&(m, _)| m == index).map_or(0.0, |&(_, a)| a)
    }

    /// Plane-wave coupling between modes `m` and `m'` with `|m - m'| = d`.
    pub fn coupling(&self, d: usize) -> f64 {
        0.5 * self.amplitude(d)
    }

    /// `sum |a_m|`, an upper bound on `sup |V|`.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|&(_, a)| a.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(m, a)| a * (2.0 * std::f64::consts::PI * m as f64 * x).cos())
            .sum()
    }
}
