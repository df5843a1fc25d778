//! The bundled example models.

use crate::closed_forms;
use crate::error::Result;
use crate::levy::{ExpTerm, JumpMeasure, LevyModel};

/// Bessel-type model: `ψ(u) = 2u² + 2bu − q`, index 1.
pub fn bessel(b: f64, q: f64) -> Result<LevyModel> {
    LevyModel::new(2.0 * b, 4.0, JumpMeasure::None, q, 1.0)
}

/// Saw-tooth model: drift 1 minus a compound Poisson process of rate `β`
/// with exponential jumps of parameter `δ+β−1`, index 1.
pub fn sawtooth(beta: f64, delta: f64, q: f64) -> Result<LevyModel> {
    LevyModel::with_drift(
        1.0,
        0.0,
        JumpMeasure::ExpMixture(vec![ExpTerm { rate: delta + beta - 1.0, intensity: beta }]),
        q,
        1.0,
    )
}

/// A model with a closed-form absorption law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bundled {
    Bessel { b: f64, q: f64 },
    Sawtooth { beta: f64, delta: f64, q: f64 },
}

impl Bundled {
    pub fn model(&self) -> Result<LevyModel> {
        match *self {
            Bundled::Bessel { b, q } => bessel(b, q),
            Bundled::Sawtooth { beta, delta, q } => sawtooth(beta, delta, q),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Bundled::Bessel { b, q } => format!("bessel(b={b}, q={q})"),
            Bundled::Sawtooth { beta, delta, q } => format!("sawtooth(beta={beta}, delta={delta}, q={q})"),
        }
    }

    /// Closed-form `P(T₀ > t)` from starting point 1.
    pub fn survival(&self, t: f64) -> Result<f64> {
        match *self {
            Bundled::Bessel { b, q } => closed_forms::bessel_survival(b, q, t),
            Bundled::Sawtooth { beta, delta, q } => closed_forms::sawtooth_survival(beta, delta, q, t),
        }
    }

    pub fn kesten(&self) -> Result<f64> {
        match *self {
            Bundled::Bessel { b, q } => closed_forms::bessel_kesten(b, q),
            Bundled::Sawtooth { beta, delta, q } => closed_forms::sawtooth_kesten(beta, delta, q),
        }
    }
}
