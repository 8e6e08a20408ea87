//! Process-wide numerical tolerances.
//!
//! Defaults match the slack needed for accumulated round-off at `d <= 64`.
//! They can be replaced once at startup (the CLI does this for
//! `--tolerance-overrides`); everything else only reads them.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-abs deviation from conjugate symmetry.
    pub hermitian: f64,
    /// Most negative eigenvalue still accepted as positive (sign flipped).
    pub positive: f64,
    /// Deviation of a density operator's trace from one.
    pub trace: f64,
    /// Floor on Tr(X rho) below which no outcome is recordable.
    pub denominator: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        positive: 1e-10,
        trace: 1e-12,
        denominator: 1e-12,
    };

    pub fn current() -> Tolerances {
        *ACTIVE.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Replaces the active tolerances and returns the previous set.
    pub fn install(self) -> Tolerances {
        let mut guard = ACTIVE.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, self)
    }

    /// Parses `key=value` pairs separated by commas, starting from `self`.
    ///
    /// Keys: `herm`, `psd`, `trace`, `den` (long names also accepted).
    pub fn with_overrides(mut self, spec: &str) -> Result<Tolerances> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{part}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad tolerance value `{value}`")))?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!("tolerance `{key}` must be finite and >= 0")));
            }
            match key.trim() {
                "herm" | "hermitian" => self.hermitian = value,
                "psd" | "positive" => self.positive = value,
                "trace" | "tr" => self.trace = value,
                "den" | "denominator" => self.denominator = value,
                other => return Err(Error::InvalidArgument(format!("unknown tolerance `{other}`"))),
            }
        }
        Ok(self)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static ACTIVE: RwLock<Tolerances> = RwLock::new(Tolerances::DEFAULT);

/// Max-abs deviation allowed when comparing a procedure sum with `K * I`.
pub const PROPORTIONALITY_TOL: f64 = 1e-10;
/// Completeness and effect-bound slack for a standard POVM.
pub const POVM_TOL: f64 = 1e-10;
/// Unitarity slack.
pub const UNITARY_TOL: f64 = 1e-12;
/// Norm slack for state vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Imaginary part of Tr(AB) above this is treated as a bug, not round-off.
pub const TRACE_IMAG_TOL: f64 = 1e-9;
/// Probabilities further than this outside [0, 1] are rejected instead of clamped.
pub const PROBABILITY_SLACK: f64 = 1e-9;
