//! Single-band achievable rates under each relaying scheme.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::capacity;
use crate::scenario::{AfGain, Band, BandChannel, BandProtocol, EfDecoding, GainDenominator, TsParams, User};

/// Rates of the two users in bits per channel use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2 }
    }

    pub fn get(&self, user: User) -> f64 {
        match user {
            User::One => self.r1,
            User::Two => self.r2,
        }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Outcome of the EF evaluation with the compression noises used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfCaseResult {
    /// 1: destination 1 removes the relay layer meant for user 2;
    /// 2: destination 2 removes the layer meant for user 1;
    /// 3: both destinations treat the other layer as noise.
    pub case_id: u8,
    /// Compression noise for each destination; infinite when that user's
    /// relay layer carries no power.
    pub nwz1: f64,
    pub nwz2: f64,
    pub rates: RatePair,
}

/// The two constraints whose minimum is the DF rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DfTerms {
    /// Decoding at the relay, per user.
    pub relay: [f64; 2],
    /// Coherent decoding at the destination, per user.
    pub destination: [f64; 2],
}

impl DfTerms {
    pub fn rates(&self) -> RatePair {
        RatePair::new(
            self.relay[0].min(self.destination[0]),
            self.relay[1].min(self.destination[1]),
        )
    }
}

/// Protocol-specific quantities behind a band's rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum RateDetail {
    Direct,
    Df(DfTerms),
    Ef(EfCaseResult),
    Af { gain: f64 },
    /// Time-sharing: rates while alone and while overlapping.
    Ts { solo: RatePair, overlap: RatePair },
}

fn check_powers(powers: (f64, f64)) -> Result<()> {
    if !(powers.0 >= 0.0 && powers.1 >= 0.0 && powers.0.is_finite() && powers.1.is_finite()) {
        return Err(Error::Domain(format!("powers must be nonnegative, got {powers:?}")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[inline]
fn pw(h: Complex64) -> f64 {
    h.norm_sqr()
}

/// Interference channel with single-user decoding, no relay.
pub fn rate_direct(band: &BandChannel, powers: (f64, f64)) -> RatePair {
    let (p1, p2) = powers;
    RatePair::new(
        capacity(pw(band.h11) * p1 / (pw(band.h21) * p2 + band.noise_d1)),
        capacity(pw(band.h22) * p2 / (pw(band.h12) * p1 + band.noise_d2)),
    )
}

pub(crate) fn df_terms_unchecked(band: &BandChannel, powers: (f64, f64), tau: (f64, f64), nu: f64) -> DfTerms {
    let p = [powers.0, powers.1];
    let t = [tau.0, tau.1];
    let v = [nu, 1.0 - nu];
    let pr = band.relay_power;
    let mut relay = [0.0; 2];
    let mut destination = [0.0; 2];
    for i in User::BOTH {
        let j = i.other();
        let (a, b) = (i.index(), j.index());
        relay[a] = capacity(
            pw(band.to_relay(i)) * (1.0 - t[a]) * p[a] / (pw(band.to_relay(j)) * (1.0 - t[b]) * p[b] + band.noise_r),
        );
        let hri = band.from_relay(i);
        // Received power of a source's direct signal combined coherently
        // with the relay's cooperation signal for that source.
        let coherent = |h: Complex64, k: usize| {
            pw(h) * p[k] + pw(hri) * v[k] * pr + 2.0 * (h * hri.conj()).re * (t[k] * p[k] * v[k] * pr).sqrt()
        };
        let signal = coherent(band.direct(i, i), a);
        let interference = coherent(band.direct(j, i), b);
        destination[a] = capacity(signal / (interference + band.noise(i)));
    }
    DfTerms { relay, destination }
}

/// Both DF constraints for cooperation degrees `tau` and relay split `nu`
/// (user 1 gets `nu`, user 2 gets `1 - nu`).
pub fn df_terms(band: &BandChannel, powers: (f64, f64), tau: (f64, f64), nu: f64) -> Result<DfTerms> {
    check_powers(powers)?;
    check_unit("tau1", tau.0)?;
    check_unit("tau2", tau.1)?;
    check_unit("nu", nu)?;
    if tau.0 + tau.1 > 1.0 + 1e-12 {
        return Err(Error::Domain("tau sum exceeds 1".into()));
    }
    Ok(df_terms_unchecked(band, powers, tau, nu))
}

/// Decode-and-forward rates.
pub fn rate_df(band: &BandChannel, powers: (f64, f64), tau: (f64, f64), nu: f64) -> Result<RatePair> {
    Ok(df_terms(band, powers, tau, nu)?.rates())
}

pub(crate) fn ef_unchecked(band: &BandChannel, powers: (f64, f64), nu: f64, decoding: EfDecoding) -> EfCaseResult {
    let p = [powers.0, powers.1];
    let pr = band.relay_power;
    let v = [nu * pr, (1.0 - nu) * pr];
    // Power at destination i of everything except the relay layers.
    let base = |i: User| {
        pw(band.direct(i, i)) * p[i.index()] + pw(band.direct(i.other(), i)) * p[i.other().index()] + band.noise(i)
    };
    let (b1, b2) = (base(User::One), base(User::Two));
    let (g1, g2) = (pw(band.hr1), pw(band.hr2));
    let case_id = match decoding {
        EfDecoding::InterferenceAsNoise => 3,
        EfDecoding::Adaptive => {
            if g1 * v[1] / (b1 + g1 * v[0]) >= g2 * v[1] / (b2 + g2 * v[0]) {
                1
            } else if g2 * v[0] / (b2 + g2 * v[1]) >= g1 * v[0] / (b1 + g1 * v[1]) {
                2
            } else {
                3
            }
        }
    };
    // Relay-layer interference left at each destination.
    let leftover = match case_id {
        1 => [0.0, g2 * v[0]],
        2 => [g1 * v[1], 0.0],
        _ => [g1 * v[1], g2 * v[0]],
    };
    let a = pw(band.h1r) * p[0] + pw(band.h2r) * p[1] + band.noise_r;
    let mut nwz = [0.0; 2];
    let mut r = [0.0; 2];
    for i in User::BOTH {
        let j = i.other();
        let (k, l) = (i.index(), j.index());
        let hii = band.direct(i, i);
        let hji = band.direct(j, i);
        let hir = band.to_relay(i);
        let hjr = band.to_relay(j);
        let n_tilde = band.noise(i) + leftover[k];
        let var_side = pw(hii) * p[k] + pw(hji) * p[l] + n_tilde;
        let cov = hii * hir.conj() * p[k] + hji * hjr.conj() * p[l];
        let layer = pw(band.from_relay(i)) * v[k];
        let n = if layer > 0.0 {
            (var_side * a - cov.norm_sqr()) / layer
        } else {
            f64::INFINITY
        };
        nwz[k] = n;
        let direct_interf = if n.is_finite() {
            pw(hji) * p[l] * (band.noise_r + n) / (pw(hjr) * p[l] + band.noise_r + n)
        } else {
            pw(hji) * p[l]
        };
        let direct_part = pw(hii) * p[k] / (n_tilde + direct_interf);
        let relay_part = if n.is_finite() {
            pw(hir) * p[k] / (band.noise_r + n + pw(hjr) * p[l] * n_tilde / (pw(hji) * p[l] + n_tilde))
        } else {
            0.0
        };
        r[k] = capacity(direct_part + relay_part);
    }
    EfCaseResult {
        case_id,
        nwz1: nwz[0],
        nwz2: nwz[1],
        rates: RatePair::new(r[0], r[1]),
    }
}

/// Bi-level compression EF rates with the interference case selected from
/// the destinations' relative reception quality; ties go to case 1.
pub fn rate_ef(band: &BandChannel, powers: (f64, f64), nu: f64) -> Result<EfCaseResult> {
    rate_ef_with(band, powers, nu, EfDecoding::Adaptive)
}

/// EF rates with an explicit decoding rule.
pub fn rate_ef_with(band: &BandChannel, powers: (f64, f64), nu: f64, decoding: EfDecoding) -> Result<EfCaseResult> {
    check_powers(powers)?;
    check_unit("nu", nu)?;
    Ok(ef_unchecked(band, powers, nu, decoding))
}

pub(crate) fn af_unchecked(band: &BandChannel, powers: (f64, f64), gain: f64) -> RatePair {
    let p = [powers.0, powers.1];
    let mut r = [0.0; 2];
    for i in User::BOTH {
        let j = i.other();
        let hri = band.from_relay(i);
        let useful = gain * band.to_relay(i) * hri + band.direct(i, i);
        let cross = gain * band.to_relay(j) * hri + band.direct(j, i);
        let relay_noise = gain * gain * pw(hri) * band.noise_r;
        r[i.index()] = capacity(pw(useful) * p[i.index()] / (pw(cross) * p[j.index()] + relay_noise + band.noise(i)));
    }
    RatePair::new(r[0], r[1])
}

/// Zero-delay scalar amplify-and-forward rates for relay gain `gain`.
pub fn rate_af(band: &BandChannel, powers: (f64, f64), gain: f64) -> Result<RatePair> {
    check_powers(powers)?;
    if !(gain >= 0.0 && gain.is_finite()) {
        return Err(Error::Domain(format!("gain must be nonnegative, got {gain}")));
    }
    Ok(af_unchecked(band, powers, gain))
}

/// Relay gain that exactly spends the relay power for source powers
/// `band_powers`.
pub fn saturating_gain(band: &BandChannel, band_powers: (f64, f64)) -> f64 {
    (band.relay_power / (pw(band.h1r) * band_powers.0 + pw(band.h2r) * band_powers.1 + band.noise_r)).sqrt()
}

/// Coordinated time-sharing on top of any single-band rate evaluator.
///
/// `inner` receives the boosted powers of the active users.
pub fn rate_ts(powers: (f64, f64), ts: &TsParams, inner: impl Fn((f64, f64)) -> RatePair) -> RatePair {
    ts_parts(powers, ts, inner).0
}

fn ts_parts(powers: (f64, f64), ts: &TsParams, inner: impl Fn((f64, f64)) -> RatePair) -> (RatePair, RatePair, RatePair) {
    let boost = |p: f64, alpha: f64| if alpha > 0.0 { p / alpha } else { 0.0 };
    let b1 = boost(powers.0, ts.alpha1);
    let b2 = boost(powers.1, ts.alpha2);
    let solo = RatePair::new(inner((b1, 0.0)).r1, inner((0.0, b2)).r2);
    let overlap = inner((b1, b2));
    // With the other user never active, only the solo windows exist.
    let beta2 = if ts.alpha2 > 0.0 { ts.beta2 } else { 0.0 };
    let beta1 = if ts.alpha1 > 0.0 { ts.beta1 } else { 0.0 };
    let r1 = if ts.alpha1 > 0.0 {
        ts.alpha1 * (1.0 - beta2) * solo.r1 + ts.alpha1 * beta2 * overlap.r1
    } else {
        0.0
    };
    let r2 = if ts.alpha2 > 0.0 {
        ts.alpha2 * (1.0 - beta1) * solo.r2 + ts.alpha2 * beta1 * overlap.r2
    } else {
        0.0
    };
    (RatePair::new(r1, r2), solo, overlap)
}

/// Evaluates a band under its own protocol without time-sharing.
///
/// `full_powers` are the users' total powers, used by the saturating AF
/// gain when the denominator convention is [`GainDenominator::Full`].
pub(crate) fn protocol_rates(
    band: &Band,
    powers: (f64, f64),
    gd: GainDenominator,
    full_powers: (f64, f64),
) -> (RatePair, RateDetail) {
    let ch = &band.channel;
    match band.protocol {
        BandProtocol::Direct => (rate_direct(ch, powers), RateDetail::Direct),
        BandProtocol::Df { tau1, tau2, nu } => {
            let t = df_terms_unchecked(ch, powers, (tau1, tau2), nu);
            (t.rates(), RateDetail::Df(t))
        }
        BandProtocol::Ef { nu, decoding } => {
            let e = ef_unchecked(ch, powers, nu, decoding);
            (e.rates, RateDetail::Ef(e))
        }
        BandProtocol::Af { gain } => {
            let a = match gain {
                AfGain::Fixed(a) => a,
                AfGain::Saturating => match gd {
                    GainDenominator::Allocated => saturating_gain(ch, powers),
                    GainDenominator::Full => saturating_gain(ch, full_powers),
                },
            };
            (af_unchecked(ch, powers, a), RateDetail::Af { gain: a })
        }
    }
}

/// Rates of a validated band for per-band powers, time-sharing included.
pub fn band_rates(band: &Band, powers: (f64, f64), gd: GainDenominator, full_powers: (f64, f64)) -> RatePair {
    match &band.ts {
        None => protocol_rates(band, powers, gd, full_powers).0,
        Some(ts) => rate_ts(powers, ts, |p| protocol_rates(band, p, gd, full_powers).0),
    }
}

/// Rates with the protocol-specific diagnostics.
pub fn band_rates_detailed(
    band: &Band,
    powers: (f64, f64),
    gd: GainDenominator,
    full_powers: (f64, f64),
) -> Result<(RatePair, RateDetail)> {
    check_powers(powers)?;
    Ok(match &band.ts {
        None => protocol_rates(band, powers, gd, full_powers),
        Some(ts) => {
            let (r, solo, overlap) = ts_parts(powers, ts, |p| protocol_rates(band, p, gd, full_powers).0);
            (r, RateDetail::Ts { solo, overlap })
        }
    })
}
