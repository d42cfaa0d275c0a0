//! JSON scenario files.
//!
//! Powers and noises accept `{"dbm": x}`, `{"linear": x}` or a bare number
//! (linear). Gains accept `{"re": a, "im": b}` or a bare real. When every
//! gain of every band is omitted, a `layout` must be present and the gains
//! are generated from it.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    layout_to_scenario, validate, Band, BandChannel, BandProtocol, BandRadio, GainDenominator, NodeLayout,
    RadioParams, Scenario, TsParams, Violation,
};
use crate::error::{Error, Result};
use crate::numeric::dbm_to_linear;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Dbm { dbm: f64 },
    Linear { linear: f64 },
    Bare(f64),
}

impl PowerSpec {
    pub fn linear(&self) -> f64 {
        match *self {
            PowerSpec::Dbm { dbm } => dbm_to_linear(dbm),
            PowerSpec::Linear { linear } | PowerSpec::Bare(linear) => linear,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Complex {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Real(f64),
}

impl GainSpec {
    fn value(&self) -> Complex64 {
        match *self {
            GainSpec::Complex { re, im } => Complex64::new(re, im),
            GainSpec::Real(re) => Complex64::new(re, 0.0),
        }
    }

    fn from_value(h: Complex64) -> Self {
        GainSpec::Complex { re: h.re, im: h.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h11: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h12: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h21: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h22: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1r: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2r: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr1: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr2: Option<GainSpec>,
    pub noise_d1: PowerSpec,
    pub noise_d2: PowerSpec,
    pub noise_r: PowerSpec,
    pub relay_power: PowerSpec,
    pub protocol: BandProtocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<TsParams>,
}

impl BandSpec {
    fn gains(&self) -> [Option<GainSpec>; 8] {
        [
            self.h11, self.h12, self.h21, self.h22, self.h1r, self.h2r, self.hr1, self.hr2,
        ]
    }

    fn radio(&self) -> BandRadio {
        BandRadio {
            noise_d1: self.noise_d1.linear(),
            noise_d2: self.noise_d2.linear(),
            noise_r: self.noise_r.linear(),
            relay_power: self.relay_power.linear(),
            protocol: self.protocol,
            ts: self.ts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub p1: PowerSpec,
    pub p2: PowerSpec,
    #[serde(default)]
    pub gain_denominator: GainDenominator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<NodeLayout>,
    pub bands: Vec<BandSpec>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl ScenarioFile {
    /// Converts to a validated scenario, collecting every problem found.
    pub fn into_scenario(self) -> std::result::Result<Scenario, Vec<Violation>> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(Violation::new(
                "schema_version",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        let radio = RadioParams {
            p1: self.p1.linear(),
            p2: self.p2.linear(),
            gain_denominator: self.gain_denominator,
            bands: self.bands.iter().map(BandSpec::radio).collect(),
        };
        let all_given = self.bands.iter().all(|b| b.gains().iter().all(Option::is_some));
        let none_given = self.bands.iter().all(|b| b.gains().iter().all(Option::is_none));
        let scenario = if all_given && !self.bands.is_empty() {
            let bands = self
                .bands
                .iter()
                .zip(&radio.bands)
                .map(|(b, r)| {
                    let g = b.gains().map(|g| g.map(|g| g.value()).unwrap_or_default());
                    let channel = BandChannel {
                        h11: g[0],
                        h12: g[1],
                        h21: g[2],
                        h22: g[3],
                        h1r: g[4],
                        h2r: g[5],
                        hr1: g[6],
                        hr2: g[7],
                        noise_d1: r.noise_d1,
                        noise_d2: r.noise_d2,
                        noise_r: r.noise_r,
                        relay_power: r.relay_power,
                    };
                    Band {
                        channel,
                        protocol: r.protocol,
                        ts: r.ts,
                    }
                })
                .collect();
            Some(Scenario {
                bands,
                p1: radio.p1,
                p2: radio.p2,
                gain_denominator: radio.gain_denominator,
                layout: self.layout.clone(),
            })
        } else if none_given {
            match &self.layout {
                Some(layout) => match layout_to_scenario(layout, &radio) {
                    Ok(s) => Some(s),
                    Err(Error::Invalid(v)) => {
                        out.extend(v);
                        None
                    }
                    Err(e) => {
                        out.push(Violation::new("layout", e.to_string()));
                        None
                    }
                },
                None if self.bands.is_empty() => {
                    out.push(Violation::new("bands", "at least one band is required"));
                    None
                }
                None => {
                    out.push(Violation::new("layout", "gains omitted and no layout given"));
                    None
                }
            }
        } else {
            out.push(Violation::new("bands", "either give all eight gains of every band or none"));
            None
        };
        if let Some(s) = &scenario {
            if let Err(v) = validate(s) {
                out.extend(v);
            }
        }
        match scenario {
            Some(s) if out.is_empty() => Ok(s),
            _ => Err(out),
        }
    }

    /// File form of a scenario with every power written in linear units.
    pub fn from_scenario(s: &Scenario) -> Self {
        let lin = |x: f64| PowerSpec::Linear { linear: x };
        let g = |h: Complex64| Some(GainSpec::from_value(h));
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            p1: lin(s.p1),
            p2: lin(s.p2),
            gain_denominator: s.gain_denominator,
            layout: s.layout.clone(),
            bands: s
                .bands
                .iter()
                .map(|b| {
                    let c = &b.channel;
                    BandSpec {
                        h11: g(c.h11),
                        h12: g(c.h12),
                        h21: g(c.h21),
                        h22: g(c.h22),
                        h1r: g(c.h1r),
                        h2r: g(c.h2r),
                        hr1: g(c.hr1),
                        hr2: g(c.hr2),
                        noise_d1: lin(c.noise_d1),
                        noise_d2: lin(c.noise_d2),
                        noise_r: lin(c.noise_r),
                        relay_power: lin(c.relay_power),
                        protocol: b.protocol,
                        ts: b.ts,
                    }
                })
                .collect(),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.into_scenario().map_err(Error::Invalid)
}

/// Reads, parses and validates a scenario file.
pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// Pretty-printed JSON for `s`, loadable by [`parse_scenario`].
pub fn scenario_to_json(s: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).expect("scenario serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{AfGain, EfDecoding};
    use approx::assert_relative_eq;

    const EXPLICIT: &str = r#"{
        "p1": {"dbm": 10},
        "p2": {"linear": 3},
        "bands": [{
            "h11": 14.15, "h12": 3.4, "h21": 0, "h22": {"re": 1.38},
            "h1r": 0, "h2r": 0, "hr1": 0, "hr2": {"re": 0.5, "im": -0.25},
            "noise_d1": 1, "noise_d2": {"dbm": 0}, "noise_r": 1,
            "relay_power": 0,
            "protocol": {"kind": "af", "gain": {"fixed": 0.0}}
        }]
    }"#;

    #[test]
    fn explicit_gains() {
        let s = parse_scenario(EXPLICIT).unwrap();
        assert_relative_eq!(s.p1, 10.0, max_relative = 1e-12);
        assert_eq!(s.p2, 3.0);
        let ch = &s.bands[0].channel;
        assert_eq!(ch.h11, Complex64::new(14.15, 0.0));
        assert_eq!(ch.hr2, Complex64::new(0.5, -0.25));
        assert_relative_eq!(ch.noise_d2, 1.0, max_relative = 1e-12);
        assert_eq!(s.bands[0].protocol, BandProtocol::Af { gain: AfGain::Fixed(0.0) });
    }

    #[test]
    fn layout_generated_gains() {
        let text = r#"{
            "p1": 10, "p2": 10,
            "layout": {"s1": [0,0], "s2": [0,5], "d1": [10,0], "d2": [10,5],
                       "relay": [5,0], "epsilon": 0.1, "d0": 5, "gamma": [2]},
            "bands": [{"noise_d1": 1, "noise_d2": 1, "noise_r": 1, "relay_power": 10,
                       "protocol": {"kind": "ef", "nu": 0.5}}]
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_relative_eq!(s.bands[0].channel.h11.re, 0.5, max_relative = 1e-12);
        assert!(s.layout.is_some());
        assert_eq!(
            s.bands[0].protocol,
            BandProtocol::Ef {
                nu: 0.5,
                decoding: EfDecoding::Adaptive
            }
        );
    }

    #[test]
    fn violations_collected() {
        let text = EXPLICIT
            .replace(r#""noise_d1": 1"#, r#""noise_d1": 0"#)
            .replace(r#""relay_power": 0"#, r#""relay_power": -1"#);
        match parse_scenario(&text) {
            Err(Error::Invalid(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn partial_gains_rejected() {
        let text = EXPLICIT.replace(r#""h11": 14.15, "#, "");
        assert!(matches!(parse_scenario(&text), Err(Error::Invalid(_))));
    }

    #[test]
    fn missing_layout_rejected() {
        let text = r#"{"p1": 1, "p2": 1, "bands": [{"noise_d1": 1, "noise_d2": 1, "noise_r": 1,
            "relay_power": 1, "protocol": {"kind": "direct"}}]}"#;
        assert!(matches!(parse_scenario(text), Err(Error::Invalid(_))));
    }

    #[test]
    fn malformed_json_is_a_json_error() {
        assert!(matches!(parse_scenario("{"), Err(Error::Json(_))));
        assert!(matches!(
            parse_scenario(&EXPLICIT.replace("\"p2\"", "\"p3\"")),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn round_trip() {
        let s = parse_scenario(EXPLICIT).unwrap();
        let again = parse_scenario(&scenario_to_json(&s)).unwrap();
        assert_eq!(s, again);
        assert!(scenario_to_json(&s).contains("\"schema_version\": 1"));
    }
}
