//! Network parameterization: densities, guard-zone radii, transmit power and path loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// A parameter failed validation. `field` names the offending input.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

impl ParamError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Power-law path loss `l(r) = A * max(r, eps)^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel<T> {
    pub amplitude: T,
    pub exponent: T,
    /// Distances below this are clamped to it, keeping `l(0)` finite.
    pub near_field_cutoff: T,
}

impl<T: Scalar> PathLossModel<T> {
    pub fn new(amplitude: T, exponent: T, near_field_cutoff: T) -> Result<Self, ParamError> {
        let model = Self {
            amplitude,
            exponent,
            near_field_cutoff,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.amplitude.is_finite() && self.amplitude > T::zero()) {
            return Err(ParamError::new("amplitude", "must be finite and > 0"));
        }
        if !(self.exponent.is_finite() && self.exponent > T::lit(2.0)) {
            return Err(ParamError::new(
                "alpha",
                format!("path-loss exponent must exceed 2, got {}", self.exponent),
            ));
        }
        if !(self.near_field_cutoff.is_finite() && self.near_field_cutoff >= T::zero()) {
            return Err(ParamError::new(
                "near_field_cutoff",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Power gain at distance `r`.
    #[inline]
    pub fn gain(&self, r: T) -> T {
        self.amplitude * r.max(self.near_field_cutoff).powf(-self.exponent)
    }
}

/// Full parameterization of the RTS/CTS bipolar network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams<T> {
    /// Intensity of potential transmitters.
    pub lambda_p: T,
    /// Transmitter-receiver separation.
    pub d: T,
    /// Physical carrier-sense radius around the transmitter.
    pub r_cs: T,
    /// RTS/CTS cleared-region radius around the receiver.
    pub r_tx: T,
    pub p_t: T,
    pub path_loss: PathLossModel<T>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn new(
        lambda_p: T,
        d: T,
        r_cs: T,
        r_tx: T,
        p_t: T,
        path_loss: PathLossModel<T>,
    ) -> Result<Self, ParamError> {
        let params = Self {
            lambda_p,
            d,
            r_cs,
            r_tx,
            p_t,
            path_loss,
        };
        params.validate()?;
        Ok(params)
    }

    /// Reference configuration: `r_cs = 2, r_tx = 1, d = 2, alpha = 4, A = 1, P_t = 1`,
    /// near-field cutoff `1e-3 * d`.
    pub fn reference(lambda_p: T) -> Self {
        let d = T::lit(2.0);
        Self {
            lambda_p,
            d,
            r_cs: T::lit(2.0),
            r_tx: T::one(),
            p_t: T::one(),
            path_loss: PathLossModel {
                amplitude: T::one(),
                exponent: T::lit(4.0),
                near_field_cutoff: T::lit(1e-3) * d,
            },
        }
    }

    pub fn with_lambda_p(mut self, lambda_p: T) -> Self {
        self.lambda_p = lambda_p;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.lambda_p.is_finite() && self.lambda_p >= T::zero()) {
            return Err(ParamError::new("lambda_p", "must be finite and >= 0"));
        }
        if !(self.d.is_finite() && self.d > T::zero()) {
            return Err(ParamError::new("d", "must be finite and > 0"));
        }
        if !(self.r_tx.is_finite() && self.r_tx > T::zero()) {
            return Err(ParamError::new("r_tx", "must be finite and > 0"));
        }
        if !(self.r_cs.is_finite() && self.r_cs > T::zero()) {
            return Err(ParamError::new("r_cs", "must be finite and > 0"));
        }
        if self.r_tx >= self.r_cs {
            return Err(ParamError::new(
                "r_tx",
                format!("must be smaller than r_cs ({} >= {})", self.r_tx, self.r_cs),
            ));
        }
        if !(self.p_t.is_finite() && self.p_t > T::zero()) {
            return Err(ParamError::new("p_t", "must be finite and > 0"));
        }
        self.path_loss.validate()
    }

    /// Largest distance from a transmitter to any point of its own exclusion zone.
    #[inline]
    pub fn zone_reach(&self) -> T {
        self.r_cs.max(self.d + self.r_tx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        NetworkParams::<f64>::reference(0.05).validate().unwrap();
        NetworkParams::<f32>::reference(0.05).validate().unwrap();
    }

    #[test]
    fn rejects_rtx_not_below_rcs() {
        let mut p = NetworkParams::<f64>::reference(0.1);
        p.r_tx = 2.0;
        assert_eq!(p.validate().unwrap_err().field, "r_tx");
    }

    #[test]
    fn rejects_nonpositive_d() {
        let mut p = NetworkParams::<f64>::reference(0.1);
        p.d = 0.0;
        assert_eq!(p.validate().unwrap_err().field, "d");
    }

    #[test]
    fn rejects_small_exponent() {
        assert_eq!(
            PathLossModel::new(1.0, 2.0, 0.0).unwrap_err().field,
            "alpha"
        );
    }

    #[test]
    fn gain_is_clamped_and_nonincreasing() {
        let m = PathLossModel::new(1.0f64, 4.0, 0.01).unwrap();
        assert_eq!(m.gain(1.0), 1.0);
        assert_eq!(m.gain(2.0), 1.0 / 16.0);
        assert!((m.gain(0.0) - 1e8).abs() < 1e-4);
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let g = m.gain(i as f64 * 0.01);
            assert!(g <= prev);
            prev = g;
        }
    }
}
