//! Seeded random scenario families and the canonical figure layouts.
//!
//! Only pairwise distances of the figure setups are known, so each figure
//! gets one fixed embedding in the plane. The coordinates are derived here
//! from those distances.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::dbm_to_linear;
use crate::rates::saturating_gain;
use crate::scenario::{
    layout_to_scenario, AfGain, Band, BandChannel, BandProtocol, BandRadio, EfDecoding, GainDenominator, NodeLayout,
    Point, RadioParams, Scenario, TsParams,
};

/// Scenario families known to [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomComplex,
    RandomRealPathloss,
    Fig2Canonical,
    Fig4Canonical,
    Fig5Canonical,
    Fig6Canonical,
    Fig7Canonical,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::RandomComplex,
        Family::RandomRealPathloss,
        Family::Fig2Canonical,
        Family::Fig4Canonical,
        Family::Fig5Canonical,
        Family::Fig6Canonical,
        Family::Fig7Canonical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomComplex => "random-complex",
            Family::RandomRealPathloss => "random-real-pathloss",
            Family::Fig2Canonical => "fig2-canonical",
            Family::Fig4Canonical => "fig4-canonical",
            Family::Fig5Canonical => "fig5-canonical",
            Family::Fig6Canonical => "fig6-canonical",
            Family::Fig7Canonical => "fig7-canonical",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown family {s:?}")))
    }
}

/// Relay protocol drawn for the bands of a random scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Direct,
    Df,
    Ef,
    Af,
    AfFixed,
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "direct" => ProtocolKind::Direct,
            "df" => ProtocolKind::Df,
            "ef" => ProtocolKind::Ef,
            "af" => ProtocolKind::Af,
            "af_fixed" | "af-fixed" => ProtocolKind::AfFixed,
            _ => return Err(Error::Domain(format!("unknown protocol {s:?}"))),
        })
    }
}

/// Settings of the random families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub bands: usize,
    pub protocol: ProtocolKind,
    /// Draw a time-sharing schedule for every band.
    pub time_sharing: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { bands: 2, protocol: ProtocolKind::AfFixed, time_sharing: false }
    }
}

/// Deterministic generator for `seed`.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scenario of `family` for `seed`. Canonical families ignore the seed and
/// the random settings.
pub fn generate(family: Family, seed: u64, spec: &RandomSpec) -> Result<Scenario> {
    let mut rng = rng_from_seed(seed);
    match family {
        Family::RandomComplex => Ok(random_complex(&mut rng, spec)),
        Family::RandomRealPathloss => random_real_pathloss(&mut rng, spec),
        Family::Fig2Canonical => fig2_scenario(BandProtocol::Ef { nu: 0.5, decoding: EfDecoding::Adaptive }, fig2_default_relay()),
        Family::Fig4Canonical => Ok(fig4_scenario()),
        Family::Fig5Canonical => fig5_scenario(AfGain::Saturating),
        Family::Fig6Canonical => fig6_scenario(fig6_default_relay()),
        Family::Fig7Canonical => fig7_scenario(BandProtocol::Df { tau1: 0.0, tau2: 0.0, nu: 1.0 }),
    }
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let n = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid deviation");
    Complex64::new(n.sample(rng), n.sample(rng))
}

/// Band with unit-variance complex gains, noises in `[0.5, 2]` and relay
/// power in `[1, 10]`.
pub fn random_complex_channel(rng: &mut impl Rng) -> BandChannel {
    let mut g = || complex_gaussian(rng);
    let (h11, h12, h21, h22, h1r, h2r, hr1, hr2) = (g(), g(), g(), g(), g(), g(), g(), g());
    BandChannel {
        h11,
        h12,
        h21,
        h22,
        h1r,
        h2r,
        hr1,
        hr2,
        noise_d1: rng.gen_range(0.5..2.0),
        noise_d2: rng.gen_range(0.5..2.0),
        noise_r: rng.gen_range(0.5..2.0),
        relay_power: rng.gen_range(1.0..10.0),
    }
}

/// Protocol of `kind` with random parameters. Fixed AF gains are drawn in
/// `[0, 2 a_sat]` where `a_sat` saturates the relay at full powers.
pub fn random_protocol(rng: &mut impl Rng, kind: ProtocolKind, channel: &BandChannel, powers: (f64, f64)) -> BandProtocol {
    match kind {
        ProtocolKind::Direct => BandProtocol::Direct,
        ProtocolKind::Df => {
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0 - a);
            let (tau1, tau2) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            BandProtocol::Df { tau1, tau2, nu: rng.gen_range(0.0..=1.0) }
        }
        ProtocolKind::Ef => BandProtocol::Ef { nu: rng.gen_range(0.0..=1.0), decoding: EfDecoding::Adaptive },
        ProtocolKind::Af => BandProtocol::Af { gain: AfGain::Saturating },
        ProtocolKind::AfFixed => {
            let sat = saturating_gain(channel, powers);
            BandProtocol::Af { gain: AfGain::Fixed(rng.gen_range(0.0..=2.0 * sat)) }
        }
    }
}

/// Time-sharing schedule with activity fractions in `[0, 1]` and a feasible
/// overlap.
pub fn random_ts(rng: &mut impl Rng) -> TsParams {
    let a1: f64 = rng.gen_range(0.0..=1.0);
    let a2: f64 = rng.gen_range(0.0..=1.0);
    let lo = (a1 + a2 - 1.0).max(0.0);
    let hi = a1.min(a2);
    let o = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    TsParams::from_overlap(a1, a2, o)
}

fn assemble(rng: &mut impl Rng, spec: &RandomSpec, channels: Vec<BandChannel>, p1: f64, p2: f64) -> Vec<Band> {
    channels
        .into_iter()
        .map(|ch| {
            let protocol = random_protocol(rng, spec.protocol, &ch, (p1, p2));
            let band = Band::new(ch, protocol);
            if spec.time_sharing {
                band.with_ts(random_ts(rng))
            } else {
                band
            }
        })
        .collect()
}

/// Unit-variance complex gains on every link of every band, powers in
/// `[1, 10]`.
pub fn random_complex(rng: &mut impl Rng, spec: &RandomSpec) -> Scenario {
    let p1 = rng.gen_range(1.0..10.0);
    let p2 = rng.gen_range(1.0..10.0);
    let channels = (0..spec.bands).map(|_| random_complex_channel(rng)).collect();
    let bands = assemble(rng, spec, channels, p1, p2);
    Scenario::new(bands, p1, p2)
}

fn random_point(rng: &mut impl Rng, half: f64) -> Point {
    [rng.gen_range(-half..=half), rng.gen_range(-half..=half)]
}

/// Nodes uniform in `[-10, 10]^2` at least 1 m apart, relay 0.5 m above
/// the plane, exponents in `[2, 3]`, unit noise, powers in `[1, 10]`.
pub fn random_real_pathloss(rng: &mut impl Rng, spec: &RandomSpec) -> Result<Scenario> {
    let nodes: Vec<Point> = loop {
        let pts: Vec<Point> = (0..4).map(|_| random_point(rng, 10.0)).collect();
        let spread = pts.iter().enumerate().all(|(i, a)| {
            pts[i + 1..].iter().all(|b| (a[0] - b[0]).hypot(a[1] - b[1]) >= 1.0)
        });
        if spread {
            break pts;
        }
    };
    let layout = NodeLayout {
        s1: nodes[0],
        s2: nodes[1],
        d1: nodes[2],
        d2: nodes[3],
        relay: random_point(rng, 10.0),
        epsilon: 0.5,
        d0: 1.0,
        gamma: (0..spec.bands).map(|_| rng.gen_range(2.0..3.0)).collect(),
    };
    let p1 = rng.gen_range(1.0..10.0);
    let p2 = rng.gen_range(1.0..10.0);
    let radio = RadioParams {
        p1,
        p2,
        gain_denominator: GainDenominator::Allocated,
        bands: (0..spec.bands)
            .map(|_| BandRadio {
                noise_d1: 1.0,
                noise_d2: 1.0,
                noise_r: 1.0,
                relay_power: rng.gen_range(1.0..10.0),
                protocol: BandProtocol::Direct,
                ts: None,
            })
            .collect(),
    };
    let mut s = layout_to_scenario(&layout, &radio)?;
    let channels: Vec<BandChannel> = s.bands.iter().map(|b| b.channel.clone()).collect();
    s.bands = assemble(rng, spec, channels, p1, p2);
    Ok(s)
}

/// Flips the sign of `h_ri` wherever `Re(h_ii h_ri^*) < 0`, so the DF
/// existence condition holds on every band.
pub fn enforce_df_condition(s: &mut Scenario) {
    for band in &mut s.bands {
        let ch = &mut band.channel;
        if (ch.h11 * ch.hr1.conj()).re < 0.0 {
            ch.hr1 = -ch.hr1;
        }
        if (ch.h22 * ch.hr2.conj()).re < 0.0 {
            ch.hr2 = -ch.hr2;
        }
    }
}

/// Intersections of the circles `|p - a| = ra` and `|p - b| = rb`, the one
/// to the left of the direction `a -> b` first.
pub fn circle_intersections(a: Point, ra: f64, b: Point, rb: f64) -> Result<[Point; 2]> {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let d = dx.hypot(dy);
    let along = (ra * ra - rb * rb + d * d) / (2.0 * d);
    let h2 = ra * ra - along * along;
    if !(d > 0.0) || h2 < 0.0 {
        return Err(Error::Domain("circles do not intersect".into()));
    }
    let h = h2.sqrt();
    let (mx, my) = (a[0] + along * dx / d, a[1] + along * dy / d);
    Ok([[mx - h * dy / d, my + h * dx / d], [mx + h * dy / d, my - h * dx / d]])
}

/// Single-band layout of the protocol-comparison figure.
///
/// `S1 = (-5.75, 0)` and `D1 = (5.75, 0)`; `D2` sits 11 m from `S1` at 30
/// degrees; `S2` is the upper-left point 14 m from `D1` and 10 m from `D2`.
pub fn fig2_layout(relay: Point) -> NodeLayout {
    let s1 = [-5.75, 0.0];
    let d1 = [5.75, 0.0];
    let ang = std::f64::consts::FRAC_PI_6;
    let d2 = [s1[0] + 11.0 * ang.cos(), s1[1] + 11.0 * ang.sin()];
    let s2 = circle_intersections(d1, 14.0, d2, 10.0).expect("fig2 distances are consistent")[0];
    NodeLayout { s1, s2, d1, d2, relay, epsilon: 0.1, d0: 5.0, gamma: vec![2.0] }
}

/// Relay on the cut `y = 0.5 d0` above the origin.
pub fn fig2_default_relay() -> Point {
    [0.0, 2.5]
}

/// Symmetric powers `P1 = P2 = Pr = 10`, unit noise.
pub fn fig2_scenario(protocol: BandProtocol, relay: Point) -> Result<Scenario> {
    let radio = RadioParams {
        p1: 10.0,
        p2: 10.0,
        gain_denominator: GainDenominator::Allocated,
        bands: vec![BandRadio { noise_d1: 1.0, noise_d2: 1.0, noise_r: 1.0, relay_power: 10.0, protocol, ts: None }],
    };
    layout_to_scenario(&fig2_layout(relay), &radio)
}

/// Interference channel in band 1 in parallel with a relay channel in
/// band 2, relay gain saturating the relay at full powers.
pub fn fig4_scenario() -> Scenario {
    let h = BandChannel::real([14.15, 3.4, 0.0, 1.38], [0.0; 4]);
    let g = BandChannel::real([2.76, 5.64, -3.55, -1.61], [-3.1, 2.22, -3.12, 1.16]).with_relay_power(2.0);
    let a2 = saturating_gain(&g, (1.0, 3.0));
    Scenario::new(
        vec![
            Band::new(h, BandProtocol::Af { gain: AfGain::Fixed(0.0) }),
            Band::new(g, BandProtocol::Af { gain: AfGain::Fixed(a2) }),
        ],
        1.0,
        3.0,
    )
}

/// Four-node layout shared by the leader figures.
///
/// `S1 = (-4.46, 1.7)` and `D1 = (2.06, 1.7)` (6.52 m apart, centred on
/// `(-1.2, 1.7)`); `D2` is 8.32 m from `S1` at -60 degrees; `S2` is the
/// eastern point 6.64 m from `D1` and 6.73 m from `D2`.
pub fn leader_layout(relay: Point, epsilon: f64, gamma: [f64; 2]) -> NodeLayout {
    let s1 = [-4.46, 1.7];
    let d1 = [2.06, 1.7];
    let ang = -std::f64::consts::FRAC_PI_3;
    let d2 = [s1[0] + 8.32 * ang.cos(), s1[1] + 8.32 * ang.sin()];
    let s2 = circle_intersections(d1, 6.64, d2, 6.73).expect("leader distances are consistent")[0];
    NodeLayout { s1, s2, d1, d2, relay, epsilon, d0: 1.0, gamma: gamma.to_vec() }
}

/// Midpoint of `S1` and `D1`.
pub fn fig6_default_relay() -> Point {
    [-1.2, 1.7]
}

struct Dbm {
    p1: f64,
    p2: f64,
    pr: f64,
    n1: f64,
    n2: f64,
    nr: f64,
}

fn leader_radio(dbm: Dbm, relay_protocol: BandProtocol) -> RadioParams {
    let (n1, n2, nr) = (dbm_to_linear(dbm.n1), dbm_to_linear(dbm.n2), dbm_to_linear(dbm.nr));
    RadioParams {
        p1: dbm_to_linear(dbm.p1),
        p2: dbm_to_linear(dbm.p2),
        gain_denominator: GainDenominator::Allocated,
        bands: vec![
            BandRadio {
                noise_d1: n1,
                noise_d2: n2,
                noise_r: nr,
                relay_power: dbm_to_linear(dbm.pr),
                protocol: relay_protocol,
                ts: None,
            },
            BandRadio { noise_d1: n1, noise_d2: n2, noise_r: nr, relay_power: 0.0, protocol: BandProtocol::Direct, ts: None },
        ],
    }
}

/// Fixed-gain AF sweep setup, relay at the `S1`-`D1` midpoint.
pub fn fig5_scenario(gain: AfGain) -> Result<Scenario> {
    let layout = leader_layout(fig6_default_relay(), 0.5, [2.0, 2.0]);
    let dbm = Dbm { p1: 20.0, p2: 23.0, pr: 22.0, n1: 10.0, n2: 9.0, nr: 7.0 };
    layout_to_scenario(&layout, &leader_radio(dbm, BandProtocol::Af { gain }))
}

/// Relay-placement setup with a saturating AF relay.
pub fn fig6_scenario(relay: Point) -> Result<Scenario> {
    let layout = leader_layout(relay, 1.0, [2.5, 2.0]);
    let dbm = Dbm { p1: 20.0, p2: 17.0, pr: 22.0, n1: 10.0, n2: 9.0, nr: 7.0 };
    layout_to_scenario(&layout, &leader_radio(dbm, BandProtocol::Af { gain: AfGain::Saturating }))
}

/// Relay power-split setup, relay at the origin.
pub fn fig7_scenario(protocol: BandProtocol) -> Result<Scenario> {
    let layout = leader_layout([0.0, 0.0], 1.0, [2.5, 2.0]);
    let dbm = Dbm { p1: 22.0, p2: 17.0, pr: 23.0, n1: 7.0, n2: 9.0, nr: 0.0 };
    layout_to_scenario(&layout, &leader_radio(dbm, protocol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate;
    use approx::assert_relative_eq;

    fn dist(a: Point, b: Point) -> f64 {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    #[test]
    fn fig2_distances() {
        let l = fig2_layout(fig2_default_relay());
        assert_relative_eq!(dist(l.s1, l.d1), 11.5, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s1, l.d2), 11.0, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s2, l.d1), 14.0, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s2, l.d2), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn leader_distances() {
        let l = leader_layout([0.0, 0.0], 0.5, [2.0, 2.0]);
        assert_relative_eq!(dist(l.s1, l.d1), 6.52, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s1, l.d2), 8.32, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s2, l.d1), 6.64, epsilon = 1e-12);
        assert_relative_eq!(dist(l.s2, l.d2), 6.73, epsilon = 1e-12);
        for p in [l.s1, l.s2, l.d1, l.d2] {
            assert!(p.iter().all(|c| c.abs() <= 10.0));
        }
    }

    #[test]
    fn fig4_gains_are_listed_values() {
        let s = fig4_scenario();
        let g = &s.bands[1].channel;
        assert_eq!([g.h1r.re, g.h2r.re, g.hr1.re, g.hr2.re], [-3.1, 2.22, -3.12, 1.16]);
        assert_eq!([g.h11.re, g.h12.re, g.h21.re, g.h22.re], [2.76, 5.64, -3.55, -1.61]);
        let h = &s.bands[0].channel;
        assert_eq!([h.h11.re, h.h12.re, h.h21.re, h.h22.re], [14.15, 3.4, 0.0, 1.38]);
        assert_eq!((s.p1, s.p2, g.relay_power), (1.0, 3.0, 2.0));
    }

    #[test]
    fn every_family_validates() {
        for family in Family::ALL {
            for seed in 0..20 {
                for protocol in [ProtocolKind::Df, ProtocolKind::Ef, ProtocolKind::Af, ProtocolKind::AfFixed] {
                    for time_sharing in [false, true] {
                        let spec = RandomSpec { bands: 3, protocol, time_sharing };
                        let s = generate(family, seed, &spec).unwrap();
                        assert!(validate(&s).is_ok(), "{family} {seed}: {:?}", validate(&s));
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let spec = RandomSpec::default();
        for family in [Family::RandomComplex, Family::RandomRealPathloss] {
            assert_eq!(generate(family, 7, &spec).unwrap(), generate(family, 7, &spec).unwrap());
            assert_ne!(generate(family, 7, &spec).unwrap(), generate(family, 8, &spec).unwrap());
        }
    }

    #[test]
    fn df_condition_enforced() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let mut s = random_complex(&mut rng, &RandomSpec { protocol: ProtocolKind::Df, ..Default::default() });
            enforce_df_condition(&mut s);
            assert!(crate::game::df_condition(&s).holds());
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("fig3-canonical".parse::<Family>().is_err());
    }
}
