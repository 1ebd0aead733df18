use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank, Trotter data and thermodynamic couplings of the model.
///
/// `u` is the Trotter parameter; in the physical regime it is tied to the
/// coupling and inverse temperature by `u = -coupling * beta / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s: usize,
    pub n: usize,
    pub u: f64,
    pub coupling: f64,
    pub beta: f64,
}

impl ModelParams {
    /// Parameters with an explicit Trotter parameter; couplings are left at
    /// the values implied by `beta = 1`.
    pub fn new(s: usize, n: usize, u: f64) -> Result<Self> {
        let p = ModelParams {
            s,
            n,
            u,
            coupling: -u * n as f64,
            beta: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters in the physical regime `u = -J beta / N`.
    pub fn physical(s: usize, n: usize, coupling: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        let p = ModelParams {
            s,
            n,
            u: -coupling * beta / n as f64,
            coupling,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::InvalidParams("s must be positive".into()));
        }
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "Trotter number must be even and positive, got {}",
                self.n
            )));
        }
        if !self.u.is_finite() {
            return Err(Error::InvalidParams("u must be finite".into()));
        }
        Ok(())
    }

    /// `g = 2s + 1`.
    pub fn g(&self) -> usize {
        2 * self.s + 1
    }

    pub fn with_u(&self, u: f64) -> Self {
        ModelParams { u, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physical_sets_trotter_parameter() {
        let p = ModelParams::physical(1, 8, -1.0, 1.0).unwrap();
        assert_eq!(p.u, 0.125);
        assert_eq!(p.g(), 3);
    }

    #[test]
    fn odd_trotter_number_rejected() {
        assert!(ModelParams::new(1, 3, 0.1).is_err());
        assert!(ModelParams::new(0, 2, 0.1).is_err());
    }
}
