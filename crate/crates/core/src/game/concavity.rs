//! Concavity checks behind the equilibrium existence results.

use serde::Serialize;

use super::band_utility;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, User};

/// Largest second difference accepted as concave.
pub const CONCAVITY_TOL: f64 = 1e-7;

/// Outcome of [`concavity_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Certificate {
    Certified,
    Violated { band: usize, theta: f64, second_difference: f64 },
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified)
    }
}

/// Sampled concavity of each per-band rate of `user` in its own fraction.
///
/// The second central difference is taken at the interior points of a
/// uniform `samples`-point grid on `[0, 1]`; the first one above
/// [`CONCAVITY_TOL`] is returned as a witness.
pub fn concavity_certificate(s: &Scenario, user: User, opponent: &[f64], samples: usize) -> Result<Certificate> {
    if samples < 3 {
        return Err(Error::Domain("samples must be at least 3".into()));
    }
    if opponent.len() != s.num_bands() {
        return Err(Error::Domain("opponent strategy has the wrong number of bands".into()));
    }
    let h = 1.0 / (samples - 1) as f64;
    for q in 0..s.num_bands() {
        let g: Vec<f64> = (0..samples).map(|k| band_utility(s, q, user, k as f64 * h, opponent[q])).collect();
        for k in 1..samples - 1 {
            let d2 = g[k - 1] - 2.0 * g[k] + g[k + 1];
            if d2 > CONCAVITY_TOL {
                return Ok(Certificate::Violated { band: q, theta: k as f64 * h, second_difference: d2 });
            }
        }
    }
    Ok(Certificate::Certified)
}

/// Outcome of [`df_condition`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DfCondition {
    Holds,
    /// Every `(band, user)` pair with `Re(h_ii h_ri^*) < 0`.
    Violated { pairs: Vec<(usize, User)> },
}

impl DfCondition {
    pub fn holds(&self) -> bool {
        matches!(self, DfCondition::Holds)
    }
}

/// Sign condition `Re(h_ii h_ri^*) >= 0` on every band and user.
pub fn df_condition(s: &Scenario) -> DfCondition {
    let mut pairs = Vec::new();
    for (q, band) in s.bands.iter().enumerate() {
        for user in User::BOTH {
            let c = band.channel.direct(user, user) * band.channel.from_relay(user).conj();
            if c.re < 0.0 {
                pairs.push((q, user));
            }
        }
    }
    if pairs.is_empty() {
        DfCondition::Holds
    } else {
        DfCondition::Violated { pairs }
    }
}
