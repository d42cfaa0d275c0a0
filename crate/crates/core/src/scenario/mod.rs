//! Network description: link gains, powers, noises and the relay protocol
//! run on each band, plus conversion from node coordinates to gains.

mod file;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{parse_scenario, read_scenario, scenario_to_json, BandSpec, GainSpec, PowerSpec, ScenarioFile};

/// Complex baseband channel coefficient.
pub type ComplexGain = Complex64;

/// A planar position in meters.
pub type Point = [f64; 2];

/// One of the two transmitter/receiver pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    /// Zero-based index.
    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    /// Parses the one-based labels used on the command line.
    pub fn from_label(label: u8) -> Option<User> {
        match label {
            1 => Some(User::One),
            2 => Some(User::Two),
            _ => None,
        }
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

impl Serialize for User {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_u8(self.index() as u8 + 1)
    }
}

/// Gains and noise levels of a single frequency band.
///
/// `hij` is the link from source `i` to destination `j`, `hir` from source
/// `i` to the relay and `hri` from the relay to destination `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandChannel {
    pub h11: ComplexGain,
    pub h12: ComplexGain,
    pub h21: ComplexGain,
    pub h22: ComplexGain,
    pub h1r: ComplexGain,
    pub h2r: ComplexGain,
    pub hr1: ComplexGain,
    pub hr2: ComplexGain,
    pub noise_d1: f64,
    pub noise_d2: f64,
    pub noise_r: f64,
    pub relay_power: f64,
}

impl BandChannel {
    /// Real-valued gains `(h11, h12, h21, h22)` and `(h1r, h2r, hr1, hr2)`,
    /// unit noise everywhere and a silent relay.
    pub fn real(direct: [f64; 4], relay: [f64; 4]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        BandChannel {
            h11: c(direct[0]),
            h12: c(direct[1]),
            h21: c(direct[2]),
            h22: c(direct[3]),
            h1r: c(relay[0]),
            h2r: c(relay[1]),
            hr1: c(relay[2]),
            hr2: c(relay[3]),
            noise_d1: 1.0,
            noise_d2: 1.0,
            noise_r: 1.0,
            relay_power: 0.0,
        }
    }

    pub fn with_noise(mut self, d1: f64, d2: f64, r: f64) -> Self {
        self.noise_d1 = d1;
        self.noise_d2 = d2;
        self.noise_r = r;
        self
    }

    pub fn with_relay_power(mut self, pr: f64) -> Self {
        self.relay_power = pr;
        self
    }

    /// Link from source `from` to destination `to`.
    pub fn direct(&self, from: User, to: User) -> ComplexGain {
        match (from, to) {
            (User::One, User::One) => self.h11,
            (User::One, User::Two) => self.h12,
            (User::Two, User::One) => self.h21,
            (User::Two, User::Two) => self.h22,
        }
    }

    /// Link from source `from` to the relay.
    pub fn to_relay(&self, from: User) -> ComplexGain {
        match from {
            User::One => self.h1r,
            User::Two => self.h2r,
        }
    }

    /// Link from the relay to destination `to`.
    pub fn from_relay(&self, to: User) -> ComplexGain {
        match to {
            User::One => self.hr1,
            User::Two => self.hr2,
        }
    }

    /// Noise power at destination `at`.
    pub fn noise(&self, at: User) -> f64 {
        match at {
            User::One => self.noise_d1,
            User::Two => self.noise_d2,
        }
    }

    /// The same band with the two user labels exchanged.
    pub fn swapped(&self) -> Self {
        BandChannel {
            h11: self.h22,
            h12: self.h21,
            h21: self.h12,
            h22: self.h11,
            h1r: self.h2r,
            h2r: self.h1r,
            hr1: self.hr2,
            hr2: self.hr1,
            noise_d1: self.noise_d2,
            noise_d2: self.noise_d1,
            noise_r: self.noise_r,
            relay_power: self.relay_power,
        }
    }

    fn gains(&self) -> [(&'static str, ComplexGain); 8] {
        [
            ("h11", self.h11),
            ("h12", self.h12),
            ("h21", self.h21),
            ("h22", self.h22),
            ("h1r", self.h1r),
            ("h2r", self.h2r),
            ("hr1", self.hr1),
            ("hr2", self.hr2),
        ]
    }
}

/// Which destination decodes which compressed relay description under EF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfDecoding {
    /// Pick the interference case from the receivers' relative quality.
    #[default]
    Adaptive,
    /// Each destination treats the other user's relay description as noise.
    InterferenceAsNoise,
}

/// Amplification gain of the zero-delay scalar AF relay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfGain {
    /// Gain saturating the relay power constraint for the current powers.
    #[default]
    Saturating,
    /// A constant gain.
    Fixed(f64),
}

/// Relaying scheme used on one band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BandProtocol {
    /// No relay: a plain interference channel with single-user decoding.
    Direct,
    /// Decode-and-forward with cooperation degrees `tau1`, `tau2` and relay
    /// power split `nu` (fraction for user 1).
    Df { tau1: f64, tau2: f64, nu: f64 },
    /// Bi-level compression estimate-and-forward.
    Ef {
        nu: f64,
        #[serde(default)]
        decoding: EfDecoding,
    },
    /// Zero-delay scalar amplify-and-forward.
    Af {
        #[serde(default)]
        gain: AfGain,
    },
}

impl BandProtocol {
    pub fn name(&self) -> &'static str {
        match self {
            BandProtocol::Direct => "direct",
            BandProtocol::Df { .. } => "df",
            BandProtocol::Ef { .. } => "ef",
            BandProtocol::Af { gain: AfGain::Saturating } => "af",
            BandProtocol::Af { gain: AfGain::Fixed(_) } => "af_fixed",
        }
    }
}

/// Coordinated time-sharing: user `i` is active a fraction `alpha_i` of the
/// frame and overlaps the other user during a fraction `beta_j` of its own
/// activity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl TsParams {
    /// Fraction of the frame during which both users transmit.
    pub fn overlap(&self) -> f64 {
        self.beta1 * self.alpha2
    }

    /// Parameters from activity fractions and the common overlap.
    pub fn from_overlap(alpha1: f64, alpha2: f64, overlap: f64) -> Self {
        let ratio = |a: f64| if a > 0.0 { overlap / a } else { 0.0 };
        TsParams {
            alpha1,
            alpha2,
            beta1: ratio(alpha2),
            beta2: ratio(alpha1),
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        let fields = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        let mut in_range = true;
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::new(format!("{path}.{name}"), "must lie in [0, 1]"));
                in_range = false;
            }
        }
        if !in_range {
            return;
        }
        if (self.beta1 * self.alpha2 - self.beta2 * self.alpha1).abs() > 1e-12 {
            out.push(Violation::new(path, "time-sharing balance beta1*alpha2 = beta2*alpha1 violated"));
            return;
        }
        let o = self.overlap();
        if o < (self.alpha1 + self.alpha2 - 1.0).max(0.0) - 1e-12 || o > self.alpha1.min(self.alpha2) + 1e-12 {
            out.push(Violation::new(path, "overlap does not fit in a unit frame"));
        }
    }
}

/// A band together with its relay protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub channel: BandChannel,
    pub protocol: BandProtocol,
    pub ts: Option<TsParams>,
}

impl Band {
    pub fn new(channel: BandChannel, protocol: BandProtocol) -> Self {
        Band { channel, protocol, ts: None }
    }

    pub fn with_ts(mut self, ts: TsParams) -> Self {
        self.ts = Some(ts);
        self
    }
}

/// Powers entering the saturating AF gain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainDenominator {
    /// Per-band allocated powers `theta_i * P_i`.
    #[default]
    Allocated,
    /// Total powers `P_i` regardless of the allocation.
    Full,
}

/// Node coordinates from which pathloss gains are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLayout {
    pub s1: Point,
    pub s2: Point,
    pub d1: Point,
    pub d2: Point,
    pub relay: Point,
    /// Height of the relay above the plane.
    pub epsilon: f64,
    pub d0: f64,
    /// Pathloss exponent of each band.
    pub gamma: Vec<f64>,
}

impl NodeLayout {
    pub fn with_relay(&self, relay: Point) -> Self {
        NodeLayout { relay, ..self.clone() }
    }

    /// Shifts every node, relay included, by `offset`.
    pub fn translated(&self, offset: Point) -> Self {
        let t = |p: Point| [p[0] + offset[0], p[1] + offset[1]];
        NodeLayout {
            s1: t(self.s1),
            s2: t(self.s2),
            d1: t(self.d1),
            d2: t(self.d2),
            relay: t(self.relay),
            ..self.clone()
        }
    }

    fn check(&self, bands: usize, out: &mut Vec<Violation>) {
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            out.push(Violation::new("layout.d0", "reference distance must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            out.push(Violation::new("layout.epsilon", "relay height must be nonnegative"));
        }
        if self.gamma.len() != bands {
            out.push(Violation::new(
                "layout.gamma",
                format!("expected {bands} pathloss exponents, found {}", self.gamma.len()),
            ));
        }
        for (q, g) in self.gamma.iter().enumerate() {
            if !(*g >= 0.0 && g.is_finite()) {
                out.push(Violation::new(format!("layout.gamma[{q}]"), "pathloss exponent must be nonnegative"));
            }
        }
        let coords = [self.s1, self.s2, self.d1, self.d2, self.relay];
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            out.push(Violation::new("layout", "coordinates must be finite"));
        }
    }
}

/// Per-band quantities not derived from geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct BandRadio {
    pub noise_d1: f64,
    pub noise_d2: f64,
    pub noise_r: f64,
    pub relay_power: f64,
    pub protocol: BandProtocol,
    pub ts: Option<TsParams>,
}

/// Everything a scenario needs besides the link gains.
#[derive(Clone, Debug, PartialEq)]
pub struct RadioParams {
    pub p1: f64,
    pub p2: f64,
    pub gain_denominator: GainDenominator,
    pub bands: Vec<BandRadio>,
}

/// Full network description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub bands: Vec<Band>,
    pub p1: f64,
    pub p2: f64,
    pub gain_denominator: GainDenominator,
    /// Geometry the gains were generated from, if any.
    pub layout: Option<NodeLayout>,
}

impl Scenario {
    pub fn new(bands: Vec<Band>, p1: f64, p2: f64) -> Self {
        Scenario {
            bands,
            p1,
            p2,
            gain_denominator: GainDenominator::Allocated,
            layout: None,
        }
    }

    /// Total transmit power of `user`.
    pub fn power(&self, user: User) -> f64 {
        match user {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    /// Replaces the protocol of every band.
    pub fn with_protocol(mut self, protocol: BandProtocol) -> Self {
        for b in &mut self.bands {
            b.protocol = protocol;
        }
        self
    }

    pub fn with_gain_denominator(mut self, gd: GainDenominator) -> Self {
        self.gain_denominator = gd;
        self
    }

    /// Short label such as `df`, `af_fixed`, `ts(ef)` or `mixed`.
    pub fn protocol_label(&self) -> String {
        let names: Vec<String> = self
            .bands
            .iter()
            .map(|b| match b.ts {
                Some(_) => format!("ts({})", b.protocol.name()),
                None => b.protocol.name().to_string(),
            })
            .collect();
        if names.windows(2).all(|w| w[0] == w[1]) {
            names.into_iter().next().unwrap_or_default()
        } else {
            "mixed".to_string()
        }
    }

    /// The same network with user labels exchanged.
    pub fn swapped(&self) -> Self {
        let bands = self
            .bands
            .iter()
            .map(|b| {
                let protocol = match b.protocol {
                    BandProtocol::Df { tau1, tau2, nu } => BandProtocol::Df {
                        tau1: tau2,
                        tau2: tau1,
                        nu: 1.0 - nu,
                    },
                    BandProtocol::Ef { nu, decoding } => BandProtocol::Ef { nu: 1.0 - nu, decoding },
                    other => other,
                };
                let ts = b.ts.map(|t| TsParams {
                    alpha1: t.alpha2,
                    alpha2: t.alpha1,
                    beta1: t.beta2,
                    beta2: t.beta1,
                });
                Band {
                    channel: b.channel.swapped(),
                    protocol,
                    ts,
                }
            })
            .collect();
        Scenario {
            bands,
            p1: self.p2,
            p2: self.p1,
            gain_denominator: self.gain_denominator,
            layout: None,
        }
    }

    /// Non-geometric parameters, for regenerating gains from a new layout.
    pub fn radio(&self) -> RadioParams {
        RadioParams {
            p1: self.p1,
            p2: self.p2,
            gain_denominator: self.gain_denominator,
            bands: self
                .bands
                .iter()
                .map(|b| BandRadio {
                    noise_d1: b.channel.noise_d1,
                    noise_d2: b.channel.noise_d2,
                    noise_r: b.channel.noise_r,
                    relay_power: b.channel.relay_power,
                    protocol: b.protocol,
                    ts: b.ts,
                })
                .collect(),
        }
    }

    /// Rebuilds the gains from `layout`, keeping every other parameter.
    pub fn relaid(&self, layout: &NodeLayout) -> Result<Scenario> {
        layout_to_scenario(layout, &self.radio())
    }
}

/// A single failed invariant, addressed by a dotted path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Distance-based gain `(d/d0)^(-gamma/2)` with zero phase.
pub fn pathloss_gain(distance: f64, d0: f64, gamma: f64) -> Result<ComplexGain> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance} (give the relay a nonzero height)"
        )));
    }
    if !(d0 > 0.0) {
        return Err(Error::Domain(format!("reference distance must be positive, got {d0}")));
    }
    Ok(Complex64::new((distance / d0).powf(-gamma / 2.0), 0.0))
}

fn planar(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Fills every link gain of every band from node positions.
///
/// Source-destination links use the planar distance, links touching the
/// elevated relay use `sqrt(d^2 + epsilon^2)`.
pub fn layout_to_scenario(layout: &NodeLayout, radio: &RadioParams) -> Result<Scenario> {
    let mut violations = Vec::new();
    layout.check(radio.bands.len(), &mut violations);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let relay_dist = |p: Point| planar(p, layout.relay).hypot(layout.epsilon);
    let direct = [
        planar(layout.s1, layout.d1),
        planar(layout.s1, layout.d2),
        planar(layout.s2, layout.d1),
        planar(layout.s2, layout.d2),
    ];
    let relay = [
        relay_dist(layout.s1),
        relay_dist(layout.s2),
        relay_dist(layout.d1),
        relay_dist(layout.d2),
    ];
    let mut bands = Vec::with_capacity(radio.bands.len());
    for (r, &gamma) in radio.bands.iter().zip(&layout.gamma) {
        let g = |d: f64| pathloss_gain(d, layout.d0, gamma);
        let channel = BandChannel {
            h11: g(direct[0])?,
            h12: g(direct[1])?,
            h21: g(direct[2])?,
            h22: g(direct[3])?,
            h1r: g(relay[0])?,
            h2r: g(relay[1])?,
            hr1: g(relay[2])?,
            hr2: g(relay[3])?,
            noise_d1: r.noise_d1,
            noise_d2: r.noise_d2,
            noise_r: r.noise_r,
            relay_power: r.relay_power,
        };
        bands.push(Band {
            channel,
            protocol: r.protocol,
            ts: r.ts,
        });
    }
    Ok(Scenario {
        bands,
        p1: radio.p1,
        p2: radio.p2,
        gain_denominator: radio.gain_denominator,
        layout: Some(layout.clone()),
    })
}

fn check_unit(path: String, v: f64, out: &mut Vec<Violation>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(Violation::new(path, "must lie in [0, 1]"));
    }
}

/// Checks every invariant and returns all violations found.
pub fn validate(scenario: &Scenario) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if scenario.bands.is_empty() {
        out.push(Violation::new("bands", "at least one band is required"));
    }
    for (name, p) in [("p1", scenario.p1), ("p2", scenario.p2)] {
        if !(p >= 0.0 && p.is_finite()) {
            out.push(Violation::new(name, "power must be nonnegative and finite"));
        }
    }
    for (q, band) in scenario.bands.iter().enumerate() {
        let path = format!("bands[{q}]");
        let ch = &band.channel;
        for (name, h) in ch.gains() {
            if !h.re.is_finite() || !h.im.is_finite() {
                out.push(Violation::new(format!("{path}.{name}"), "gain must be finite"));
            }
        }
        for (name, n) in [("noise_d1", ch.noise_d1), ("noise_d2", ch.noise_d2), ("noise_r", ch.noise_r)] {
            if !(n > 0.0 && n.is_finite()) {
                out.push(Violation::new(format!("{path}.{name}"), "noise must be positive"));
            }
        }
        if !(ch.relay_power >= 0.0 && ch.relay_power.is_finite()) {
            out.push(Violation::new(format!("{path}.relay_power"), "relay power must be nonnegative"));
        }
        let ppath = format!("{path}.protocol");
        match band.protocol {
            BandProtocol::Direct => {}
            BandProtocol::Df { tau1, tau2, nu } => {
                check_unit(format!("{ppath}.tau1"), tau1, &mut out);
                check_unit(format!("{ppath}.tau2"), tau2, &mut out);
                check_unit(format!("{ppath}.nu"), nu, &mut out);
                if tau1 + tau2 > 1.0 + 1e-12 {
                    out.push(Violation::new(ppath.clone(), "tau sum exceeds 1"));
                }
            }
            BandProtocol::Ef { nu, .. } => check_unit(format!("{ppath}.nu"), nu, &mut out),
            BandProtocol::Af { gain: AfGain::Fixed(a) } => {
                if !(a >= 0.0 && a.is_finite()) {
                    out.push(Violation::new(format!("{ppath}.gain"), "fixed gain must be nonnegative"));
                }
            }
            BandProtocol::Af { gain: AfGain::Saturating } => {}
        }
        if let Some(ts) = &band.ts {
            ts.check(&format!("{path}.ts"), &mut out);
        }
    }
    if let Some(layout) = &scenario.layout {
        layout.check(scenario.bands.len(), &mut out);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
