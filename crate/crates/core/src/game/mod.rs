//! Power-allocation game between the two transmitters.
//!
//! Each user splits its power over the bands, `theta_i` lying in the
//! simplex `{theta in [0,1]^Q : sum(theta) <= 1}`, and earns the sum of its
//! per-band rates.

mod br;
mod concavity;
mod cournot;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::band_rates;
use crate::scenario::{Scenario, User};

pub use br::{best_response, verify_ne, BestResponse, BrOptions, NeCheck};
pub use concavity::{concavity_certificate, df_condition, Certificate, DfCondition};
pub use cournot::{cournot, CournotOptions, CournotTrace};

/// Slack allowed on the simplex constraint.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Per-band power fractions of both users.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(theta1: Vec<f64>, theta2: Vec<f64>) -> Self {
        PowerAllocation { theta1, theta2 }
    }

    /// Equal split over `q` bands for both users.
    pub fn uniform(q: usize) -> Self {
        let t = vec![1.0 / q as f64; q];
        PowerAllocation::new(t.clone(), t)
    }

    /// Two-band state from the fractions each user puts on the first band,
    /// the rest going to the second band.
    pub fn two_band(theta1: f64, theta2: f64) -> Self {
        PowerAllocation::new(vec![theta1, 1.0 - theta1], vec![theta2, 1.0 - theta2])
    }

    pub fn get(&self, user: User) -> &[f64] {
        match user {
            User::One => &self.theta1,
            User::Two => &self.theta2,
        }
    }

    pub fn set(&mut self, user: User, theta: Vec<f64>) {
        match user {
            User::One => self.theta1 = theta,
            User::Two => self.theta2 = theta,
        }
    }

    /// Largest coordinate difference between two states.
    pub fn max_distance(&self, other: &PowerAllocation) -> f64 {
        self.theta1
            .iter()
            .zip(&other.theta1)
            .chain(self.theta2.iter().zip(&other.theta2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks lengths, ranges and the simplex constraint.
    pub fn check(&self, bands: usize) -> Result<()> {
        for (name, t) in [("theta1", &self.theta1), ("theta2", &self.theta2)] {
            if t.len() != bands {
                return Err(Error::Domain(format!("{name} has {} entries, expected {bands}", t.len())));
            }
            if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::Domain(format!("{name} entries must lie in [0, 1]")));
            }
            if t.iter().sum::<f64>() > 1.0 + SIMPLEX_TOL {
                return Err(Error::Domain(format!("{name} sums above 1")));
            }
        }
        Ok(())
    }
}

/// Rate of `user` on band `q` when it uses fraction `own` of its power and
/// the other user uses `opp`.
pub(crate) fn band_utility(s: &Scenario, q: usize, user: User, own: f64, opp: f64) -> f64 {
    let po = own * s.power(user);
    let pj = opp * s.power(user.other());
    let powers = match user {
        User::One => (po, pj),
        User::Two => (pj, po),
    };
    band_rates(&s.bands[q], powers, s.gain_denominator, (s.p1, s.p2)).get(user)
}

/// Sum over bands of `user`'s rate in state `theta`.
pub fn utility(s: &Scenario, theta: &PowerAllocation, user: User) -> f64 {
    let own = theta.get(user);
    let opp = theta.get(user.other());
    (0..s.num_bands()).map(|q| band_utility(s, q, user, own[q], opp[q])).sum()
}

/// Utilities of both users.
pub fn utilities(s: &Scenario, theta: &PowerAllocation) -> [f64; 2] {
    [utility(s, theta, User::One), utility(s, theta, User::Two)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{rate_af, rate_direct};
    use crate::scenario::{AfGain, Band, BandChannel, BandProtocol};
    use approx::assert_relative_eq;

    pub(crate) fn two_band_af(a1: f64, a2: f64) -> Scenario {
        let h = BandChannel::real([14.15, 3.4, 0.0, 1.38], [0.0; 4]);
        let g = BandChannel::real([2.76, 5.64, -3.55, -1.61], [-3.1, 2.22, -3.12, 1.16]).with_relay_power(2.0);
        Scenario::new(
            vec![
                Band::new(h, BandProtocol::Af { gain: AfGain::Fixed(a1) }),
                Band::new(g, BandProtocol::Af { gain: AfGain::Fixed(a2) }),
            ],
            1.0,
            3.0,
        )
    }

    #[test]
    fn single_band_full_power_is_the_band_rate() {
        let ch = BandChannel::real([1.0, 0.3, 0.5, 0.9], [0.0; 4]);
        let s = Scenario::new(vec![Band::new(ch.clone(), BandProtocol::Direct)], 2.0, 5.0);
        let th = PowerAllocation::new(vec![1.0], vec![1.0]);
        let r = rate_direct(&ch, (2.0, 5.0));
        assert_eq!(utilities(&s, &th), [r.r1, r.r2]);
    }

    #[test]
    fn silent_user_earns_nothing() {
        let s = two_band_af(0.1, 0.2);
        let th = PowerAllocation::new(vec![0.0, 0.0], vec![0.3, 0.7]);
        assert_eq!(utility(&s, &th, User::One), 0.0);
    }

    #[test]
    fn two_band_utility_matches_band_sum() {
        let s = two_band_af(0.0, 0.28);
        let th = PowerAllocation::new(vec![0.5, 0.5], vec![0.5, 0.5]);
        let r1 = rate_af(&s.bands[0].channel, (0.5, 1.5), 0.0).unwrap();
        let r2 = rate_af(&s.bands[1].channel, (0.5, 1.5), 0.28).unwrap();
        assert_relative_eq!(utility(&s, &th, User::One), r1.r1 + r2.r1, max_relative = 1e-12);
        assert_relative_eq!(utility(&s, &th, User::Two), r1.r2 + r2.r2, max_relative = 1e-12);
    }

    #[test]
    fn band_permutation_invariance() {
        let s = two_band_af(0.05, 0.28);
        let mut p = s.clone();
        p.bands.reverse();
        let th = PowerAllocation::new(vec![0.2, 0.7], vec![0.6, 0.1]);
        let tp = PowerAllocation::new(vec![0.7, 0.2], vec![0.1, 0.6]);
        assert_relative_eq!(utility(&s, &th, User::One), utility(&p, &tp, User::One), max_relative = 1e-14);
        assert_relative_eq!(utility(&s, &th, User::Two), utility(&p, &tp, User::Two), max_relative = 1e-14);
    }

    #[test]
    fn allocation_checks() {
        assert!(PowerAllocation::uniform(3).check(3).is_ok());
        assert!(PowerAllocation::new(vec![0.6, 0.6], vec![0.0, 0.0]).check(2).is_err());
        assert!(PowerAllocation::new(vec![0.5], vec![0.5]).check(2).is_err());
        assert!(PowerAllocation::new(vec![-0.1, 0.5], vec![0.0, 0.0]).check(2).is_err());
    }
}
