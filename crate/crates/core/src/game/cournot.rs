//! Best-response dynamics.

use serde::Serialize;

use super::{best_response, BrOptions, PowerAllocation};
use crate::error::{Error, Result};
use crate::scenario::{Scenario, User};

/// Settings for [`cournot`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CournotOptions {
    pub max_iter: usize,
    /// Stop once a round moves no coordinate by this much.
    pub tol: f64,
    /// Both users answer the previous state instead of user 2 answering
    /// user 1's fresh move.
    pub simultaneous: bool,
    pub br: BrOptions,
}

impl Default for CournotOptions {
    fn default() -> Self {
        CournotOptions { max_iter: 1000, tol: 1e-8, simultaneous: false, br: BrOptions::default() }
    }
}

/// Trajectory of a best-response run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CournotTrace {
    /// Initial state followed by the state after each round.
    pub states: Vec<PowerAllocation>,
    pub converged: bool,
    pub fixed_point: Option<PowerAllocation>,
    pub iterations: usize,
}

/// Runs rounds of best responses, user 1 moving first, until the state
/// settles or `max_iter` rounds have been played.
pub fn cournot(s: &Scenario, initial: &PowerAllocation, opts: &CournotOptions) -> Result<CournotTrace> {
    if opts.max_iter < 1 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    opts.br.check()?;
    initial.check(s.num_bands())?;
    let mut states = vec![initial.clone()];
    let mut state = initial.clone();
    for round in 1..=opts.max_iter {
        let mut next = state.clone();
        let br1 = best_response(s, &state.theta2, User::One, &opts.br).theta;
        next.theta1 = br1;
        let against = if opts.simultaneous { &state.theta1 } else { &next.theta1 };
        next.theta2 = best_response(s, against, User::Two, &opts.br).theta;
        let moved = next.max_distance(&state);
        states.push(next.clone());
        state = next;
        if moved < opts.tol {
            return Ok(CournotTrace { states, converged: true, fixed_point: Some(state), iterations: round });
        }
    }
    Ok(CournotTrace { states, converged: false, fixed_point: None, iterations: opts.max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::verify_ne;
    use crate::scenario::{Band, BandChannel, BandProtocol};

    fn direct_two_band() -> Scenario {
        let a = BandChannel::real([1.0, 0.3, 0.2, 0.9], [0.0; 4]);
        let b = BandChannel::real([0.6, 0.1, 0.4, 1.2], [0.0; 4]);
        Scenario::new(vec![Band::new(a, BandProtocol::Direct), Band::new(b, BandProtocol::Direct)], 3.0, 3.0)
    }

    #[test]
    fn converges_to_verified_point() {
        let s = direct_two_band();
        let tr = cournot(&s, &PowerAllocation::uniform(2), &CournotOptions::default()).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.states.len(), tr.iterations + 1);
        let fp = tr.fixed_point.unwrap();
        assert!(verify_ne(&s, &fp, 1e-7, &BrOptions::default()).pass);
    }

    #[test]
    fn restart_from_fixed_point_stops_after_one_round() {
        let s = direct_two_band();
        let fp = cournot(&s, &PowerAllocation::uniform(2), &CournotOptions::default())
            .unwrap()
            .fixed_point
            .unwrap();
        let tr = cournot(&s, &fp, &CournotOptions::default()).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.iterations, 1);
    }

    #[test]
    fn simultaneous_variant_reaches_same_point() {
        let s = direct_two_band();
        let seq = cournot(&s, &PowerAllocation::uniform(2), &CournotOptions::default()).unwrap();
        let sim = cournot(&s, &PowerAllocation::uniform(2), &CournotOptions { simultaneous: true, ..Default::default() })
            .unwrap();
        assert!(sim.converged);
        assert!(seq.fixed_point.unwrap().max_distance(&sim.fixed_point.unwrap()) < 1e-6);
    }

    #[test]
    fn rejects_bad_input() {
        let s = direct_two_band();
        let bad = CournotOptions { max_iter: 0, ..Default::default() };
        assert!(cournot(&s, &PowerAllocation::uniform(2), &bad).is_err());
        assert!(cournot(&s, &PowerAllocation::uniform(3), &CournotOptions::default()).is_err());
    }
}
