//! Leader sweeps: the relay operator fixes a gain, a power split or a
//! position, and the transmitters settle on an equilibrium of the power
//! allocation game.

use rayon::prelude::*;
use serde::Serialize;

use crate::af_analytic::{affine_cournot, br_coefficients, fixed_gains, NoiseReading, AFFINE_MAX_ITER};
use crate::error::{Error, Result};
use crate::game::{cournot, utilities, verify_ne, CournotOptions, PowerAllocation};
use crate::rates::{band_rates, saturating_gain};
use crate::scenario::{AfGain, BandProtocol, EfDecoding, Point, Scenario};

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Quantity controlled by the leader.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeaderVariable {
    /// Fixed AF gain on `band`.
    Amplification { band: usize, values: Vec<f64> },
    /// Relay power split on a DF or EF `band`.
    Nu { band: usize, values: Vec<f64> },
    /// Relay position over the grid `xs` x `ys`, row-major in `y`.
    RelayPosition { xs: Vec<f64>, ys: Vec<f64> },
}

impl LeaderVariable {
    /// Gain sweep over `[0, a_sat]`, where `a_sat` spends the relay power
    /// when both users put full power on `band`.
    pub fn amplification_range(s: &Scenario, band: usize, n: usize) -> Result<Self> {
        let ch = &s.bands.get(band).ok_or_else(|| Error::Domain(format!("no band {band}")))?.channel;
        let sat = saturating_gain(ch, (s.p1, s.p2));
        Ok(LeaderVariable::Amplification { band, values: linspace(0.0, sat, n) })
    }

    fn leader_values(&self) -> Vec<Vec<f64>> {
        match self {
            LeaderVariable::Amplification { values, .. } | LeaderVariable::Nu { values, .. } => {
                values.iter().map(|&v| vec![v]).collect()
            }
            LeaderVariable::RelayPosition { xs, ys } => {
                ys.iter().flat_map(|&y| xs.iter().map(move |&x| vec![x, y])).collect()
            }
        }
    }

    /// The follower game for one leader value.
    fn apply(&self, template: &Scenario, value: &[f64]) -> Result<Scenario> {
        let mut s = template.clone();
        match self {
            LeaderVariable::Amplification { band, .. } => {
                let b = s.bands.get_mut(*band).ok_or_else(|| Error::Domain(format!("no band {band}")))?;
                match &mut b.protocol {
                    BandProtocol::Af { gain } => *gain = AfGain::Fixed(value[0]),
                    p => return Err(Error::Domain(format!("band {band} uses {}, expected af", p.name()))),
                }
            }
            LeaderVariable::Nu { band, .. } => {
                let b = s.bands.get_mut(*band).ok_or_else(|| Error::Domain(format!("no band {band}")))?;
                match &mut b.protocol {
                    BandProtocol::Df { nu, .. } | BandProtocol::Ef { nu, .. } => *nu = value[0],
                    p => return Err(Error::Domain(format!("band {band} uses {}, expected df or ef", p.name()))),
                }
            }
            LeaderVariable::RelayPosition { .. } => {
                let layout = template
                    .layout
                    .as_ref()
                    .ok_or_else(|| Error::Domain("position sweep needs a node layout".into()))?;
                s = template.relaid(&layout.with_relay([value[0], value[1]]))?;
            }
        }
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(format!("{what} needs at least 2 values")));
        match self {
            LeaderVariable::Amplification { values, .. } => {
                if values.len() < 2 {
                    return bad("amplification sweep");
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::Domain("gains must be finite and nonnegative".into()));
                }
            }
            LeaderVariable::Nu { values, .. } => {
                if values.len() < 2 {
                    return bad("nu sweep");
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Domain("nu values must lie in [0, 1]".into()));
                }
            }
            LeaderVariable::RelayPosition { xs, ys } => {
                if xs.len() < 2 || ys.len() < 2 {
                    return bad("position sweep");
                }
            }
        }
        Ok(())
    }
}

/// How the followers' equilibrium is found at each leader value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumPolicy {
    /// Best-response dynamics from the uniform allocation.
    #[default]
    Cournot,
    /// Dynamics from every pair of simplex vertices and the uniform
    /// allocation; the best verified equilibrium is kept.
    MultiStart,
    /// Closed-form enumeration for two fixed-gain bands, otherwise
    /// [`EquilibriumPolicy::Cournot`].
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: LeaderVariable,
    pub policy: EquilibriumPolicy,
    pub cournot: CournotOptions,
    /// Deviation gain below which a state counts as an equilibrium.
    pub verify_tol: f64,
}

impl SweepSpec {
    pub fn new(variable: LeaderVariable) -> Self {
        SweepSpec { variable, policy: EquilibriumPolicy::Cournot, cournot: CournotOptions::default(), verify_tol: 1e-6 }
    }
}

/// Followers' outcome at one leader value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    /// `[value]` for scalar sweeps, `[x, y]` for position sweeps.
    pub leader: Vec<f64>,
    /// Whether `state` is a verified equilibrium.
    pub converged: bool,
    /// Equilibrium used for the rates, or the last state reached.
    pub state: PowerAllocation,
    /// Every distinct verified equilibrium found.
    pub equilibria: Vec<PowerAllocation>,
    pub utilities: [f64; 2],
    pub sum_rate: f64,
    pub iterations: usize,
    pub max_improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

struct Outcome {
    state: PowerAllocation,
    converged: bool,
    iterations: usize,
    max_improvement: f64,
}

fn solve_cournot(s: &Scenario, start: &PowerAllocation, spec: &SweepSpec) -> Result<Outcome> {
    let tr = cournot(s, start, &spec.cournot)?;
    let state = tr.states.last().cloned().unwrap_or_else(|| start.clone());
    let check = verify_ne(s, &state, spec.verify_tol, &spec.cournot.br);
    Ok(Outcome {
        converged: tr.converged && check.pass,
        state,
        iterations: tr.iterations,
        max_improvement: check.max_improvement(),
    })
}

fn vertex_starts(q: usize) -> Vec<Vec<f64>> {
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|k| {
            let mut e = vec![0.0; q];
            e[k] = 1.0;
            e
        })
        .collect();
    v.push(vec![1.0 / q as f64; q]);
    v
}

fn evaluate(s: &Scenario, leader: Vec<f64>, spec: &SweepSpec) -> Result<SweepPoint> {
    let q = s.num_bands();
    let uniform = PowerAllocation::uniform(q);
    let mut equilibria: Vec<PowerAllocation> = Vec::new();
    let best = match spec.policy {
        EquilibriumPolicy::Cournot => solve_cournot(s, &uniform, spec)?,
        EquilibriumPolicy::Analytic => match fixed_gains(s).and_then(|g| br_coefficients(s, g, NoiseReading::Squared)) {
            Ok(c) => {
                let ((t1, t2), ok, it) = affine_cournot(&c, (0.5, 0.5), 1e-13, AFFINE_MAX_ITER);
                let state = PowerAllocation::two_band(t1, t2);
                let check = verify_ne(s, &state, spec.verify_tol, &spec.cournot.br);
                Outcome { converged: ok && check.pass, state, iterations: it, max_improvement: check.max_improvement() }
            }
            Err(_) => solve_cournot(s, &uniform, spec)?,
        },
        EquilibriumPolicy::MultiStart => {
            let starts = vertex_starts(q);
            let mut best: Option<(Outcome, f64)> = None;
            for a in &starts {
                for b in &starts {
                    let o = solve_cournot(s, &PowerAllocation::new(a.clone(), b.clone()), spec)?;
                    if !o.converged {
                        continue;
                    }
                    if !equilibria.iter().any(|e| e.max_distance(&o.state) < 1e-6) {
                        equilibria.push(o.state.clone());
                    }
                    let sum = utilities(s, &o.state).iter().sum::<f64>();
                    if best.as_ref().map_or(true, |(_, bs)| sum > *bs) {
                        best = Some((o, sum));
                    }
                }
            }
            match best {
                Some((o, _)) => o,
                None => solve_cournot(s, &uniform, spec)?,
            }
        }
    };
    if best.converged && equilibria.is_empty() {
        equilibria.push(best.state.clone());
    }
    let u = utilities(s, &best.state);
    Ok(SweepPoint {
        leader,
        converged: best.converged,
        state: best.state,
        equilibria,
        utilities: u,
        sum_rate: u[0] + u[1],
        iterations: best.iterations,
        max_improvement: best.max_improvement,
    })
}

/// Evaluates the followers' equilibrium at every leader value.
///
/// Points are computed in parallel and returned in sweep order.
pub fn sweep(spec: &SweepSpec, template: &Scenario) -> Result<SweepResult> {
    spec.variable.check()?;
    let values = spec.variable.leader_values();
    let points = values
        .into_par_iter()
        .map(|v| {
            let s = spec.variable.apply(template, &v)?;
            evaluate(&s, v, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { points })
}

/// Converged point with the largest sum-rate; ties go to the smallest
/// leader value, compared lexicographically.
pub fn best_leader_value(result: &SweepResult) -> Result<&SweepPoint> {
    let mut best: Option<&SweepPoint> = None;
    for p in result.points.iter().filter(|p| p.converged) {
        best = match best {
            None => Some(p),
            Some(b) if p.sum_rate > b.sum_rate => Some(p),
            Some(b) if p.sum_rate == b.sum_rate && p.leader.iter().partial_cmp(b.leader.iter()) == Some(std::cmp::Ordering::Less) => {
                Some(p)
            }
            keep => keep,
        };
    }
    best.ok_or(Error::NoConvergedPoint)
}

/// Relay protocols compared by [`dominance_map`], in tie precedence order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominant {
    Df,
    Ef,
    Af,
}

impl Dominant {
    pub fn name(self) -> &'static str {
        match self {
            Dominant::Df => "df",
            Dominant::Ef => "ef",
            Dominant::Af => "af",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceOptions {
    /// Candidate cooperation degrees per user; pairs summing above one are
    /// skipped.
    pub tau_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    pub ef_decoding: EfDecoding,
    /// Sum-rates closer than this count as equal.
    pub tie_tol: f64,
}

impl Default for DominanceOptions {
    fn default() -> Self {
        DominanceOptions {
            tau_grid: vec![0.0, 0.25, 0.5],
            nu_grid: linspace(0.0, 1.0, 11),
            ef_decoding: EfDecoding::Adaptive,
            tie_tol: 1e-6,
        }
    }
}

/// Full-power sum-rates of the three protocols on one band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolSumRates {
    pub df: f64,
    pub ef: f64,
    pub af: f64,
}

impl ProtocolSumRates {
    /// Best protocol; near-ties resolve in the order DF, EF, AF.
    pub fn dominant(&self, tie_tol: f64) -> Dominant {
        let top = self.df.max(self.ef).max(self.af);
        if self.df >= top - tie_tol {
            Dominant::Df
        } else if self.ef >= top - tie_tol {
            Dominant::Ef
        } else {
            Dominant::Af
        }
    }
}

/// Sum-rates of DF (best `(tau, nu)` on the grid), EF (best `nu`) and
/// saturating AF on band 0 with both users at full power.
pub fn protocol_sum_rates(s: &Scenario, opts: &DominanceOptions) -> ProtocolSumRates {
    let mut band = s.bands[0].clone();
    band.ts = None;
    let full = (s.p1, s.p2);
    let mut eval = |protocol: BandProtocol| {
        band.protocol = protocol;
        band_rates(&band, full, s.gain_denominator, full).sum()
    };
    let mut df = f64::NEG_INFINITY;
    for &tau1 in &opts.tau_grid {
        for &tau2 in &opts.tau_grid {
            if tau1 + tau2 > 1.0 + 1e-12 {
                continue;
            }
            for &nu in &opts.nu_grid {
                df = df.max(eval(BandProtocol::Df { tau1, tau2, nu }));
            }
        }
    }
    let ef = opts
        .nu_grid
        .iter()
        .map(|&nu| eval(BandProtocol::Ef { nu, decoding: opts.ef_decoding }))
        .fold(f64::NEG_INFINITY, f64::max);
    let af = eval(BandProtocol::Af { gain: AfGain::Saturating });
    ProtocolSumRates { df, ef, af }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceCell {
    pub relay: Point,
    pub rates: ProtocolSumRates,
    pub label: Dominant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceMap {
    /// Row-major in `y`.
    pub cells: Vec<DominanceCell>,
    pub nx: usize,
    pub ny: usize,
}

impl DominanceMap {
    pub fn count(&self, label: Dominant) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }
}

/// Labels each relay position of the grid with the protocol of highest
/// full-power sum-rate on a single-band layout.
pub fn dominance_map(template: &Scenario, xs: &[f64], ys: &[f64], opts: &DominanceOptions) -> Result<DominanceMap> {
    if template.num_bands() != 1 {
        return Err(Error::Domain("dominance map needs a single band".into()));
    }
    let layout = template
        .layout
        .as_ref()
        .ok_or_else(|| Error::Domain("dominance map needs a node layout".into()))?;
    let positions: Vec<Point> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect();
    let cells = positions
        .into_par_iter()
        .map(|relay| {
            let s = template.relaid(&layout.with_relay(relay))?;
            let rates = protocol_sum_rates(&s, opts);
            Ok(DominanceCell { relay, rates, label: rates.dominant(opts.tie_tol) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DominanceMap { cells, nx: xs.len(), ny: ys.len() })
}
