//! Rate-maximizing amplification gain of the AF relay for one user.
//!
//! The rate of user `i` as a function of the gain `a` is
//! `C(|m a + n|^2 / (|p a + q|^2 + s a^2 + 1))`. Its derivative vanishes on
//! the real roots of a quadratic, so the maximum over `[0, a_max]` is at one
//! of those roots or at an end of the interval.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{capacity, grid_golden_max};
use crate::rates::af_unchecked;
use crate::scenario::{BandChannel, User};

/// Composite channel quantities seen by one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainParams {
    pub m: Complex64,
    pub n: Complex64,
    pub p: Complex64,
    pub q: Complex64,
    pub s: f64,
}

impl GainParams {
    /// Quantities for `user` on `band` with source powers `powers`,
    /// normalized by that user's destination noise.
    pub fn from_band(band: &BandChannel, user: User, powers: (f64, f64)) -> Self {
        let other = user.other();
        let ni = band.noise(user);
        let pow = [powers.0, powers.1];
        let own = (pow[user.index()] / ni).sqrt();
        let cross = (pow[other.index()] / ni).sqrt();
        let hri = band.from_relay(user);
        GainParams {
            m: band.to_relay(user) * hri * own,
            n: band.direct(user, user) * own,
            p: band.to_relay(other) * hri * cross,
            q: band.direct(other, user) * cross,
            s: hri.norm_sqr() * band.noise_r / ni,
        }
    }

    /// Rate for relay gain `a`.
    pub fn rate(&self, a: f64) -> f64 {
        let num = (self.m * a + self.n).norm_sqr();
        let den = (self.p * a + self.q).norm_sqr() + self.s * a * a + 1.0;
        capacity(num / den)
    }

    /// Rate in the limit of an unbounded gain.
    pub fn asymptotic_rate(&self) -> f64 {
        let den = self.p.norm_sqr() + self.s;
        if den > 0.0 {
            capacity(self.m.norm_sqr() / den)
        } else if self.m.norm_sqr() > 0.0 {
            f64::INFINITY
        } else {
            capacity(0.0)
        }
    }

    /// Coefficients `(qa, qb, qc)` of the stationarity quadratic; the rate's
    /// derivative has the sign of `qa a^2 + qb a + qc`.
    pub fn quadratic(&self) -> (f64, f64, f64) {
        let m2 = self.m.norm_sqr();
        let n2 = self.n.norm_sqr();
        let p2s = self.p.norm_sqr() + self.s;
        let q21 = self.q.norm_sqr() + 1.0;
        let mn = (self.m * self.n.conj()).re;
        let pq = (self.p * self.q.conj()).re;
        (m2 * pq - p2s * mn, m2 * q21 - n2 * p2s, q21 * mn - n2 * pq)
    }

    pub fn discriminant(&self) -> f64 {
        let (a, b, c) = self.quadratic();
        b * b - 4.0 * a * c
    }
}

/// Result of the gain optimization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainSolution {
    pub optimum: f64,
    pub rate: f64,
    /// Every evaluated `(gain, rate)`, sorted by gain.
    pub candidates: Vec<(f64, f64)>,
    pub discriminant: f64,
}

const DEGENERATE: f64 = 1e-14;

/// Real roots of the stationarity quadratic, ascending.
pub fn critical_points(gp: &GainParams) -> Vec<f64> {
    let (a, b, c) = gp.quadratic();
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    if a.abs() < DEGENERATE * scale {
        if b.abs() < DEGENERATE * scale {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let t = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if t == 0.0 { vec![0.0] } else { vec![t / a, c / t] };
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Gain in `[0, a_max]` maximizing the user's rate; ties go to the smaller
/// gain.
pub fn optimal_gain(gp: &GainParams, a_max: f64) -> Result<GainSolution> {
    if !(a_max >= 0.0 && a_max.is_finite()) {
        return Err(Error::Domain(format!("a_max must be nonnegative, got {a_max}")));
    }
    let mut values = vec![0.0];
    values.extend(critical_points(gp).into_iter().filter(|&r| r > 0.0 && r < a_max));
    if a_max > 0.0 {
        values.push(a_max);
    }
    let candidates: Vec<(f64, f64)> = values.into_iter().map(|a| (a, gp.rate(a))).collect();
    let mut best = candidates[0];
    for &(a, r) in &candidates[1..] {
        if r > best.1 {
            best = (a, r);
        }
    }
    Ok(GainSolution {
        optimum: best.0,
        rate: best.1,
        candidates,
        discriminant: gp.discriminant(),
    })
}

/// Gain maximizing `R1 + R2` over `[0, a_max]`, by a `grid_n`-point scan
/// refined with golden-section search.
pub fn sum_rate_gain(band: &BandChannel, powers: (f64, f64), a_max: f64, grid_n: usize) -> Result<f64> {
    if grid_n < 2 {
        return Err(Error::Domain("grid_n must be at least 2".into()));
    }
    if !(a_max >= 0.0 && a_max.is_finite()) {
        return Err(Error::Domain(format!("a_max must be nonnegative, got {a_max}")));
    }
    let f = |a: f64| af_unchecked(band, powers, a).sum();
    Ok(grid_golden_max(f, 0.0, a_max, grid_n, 1e-12 * a_max.max(1.0)).0)
}
