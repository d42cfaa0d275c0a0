//! Closed-form analysis of the two-band fixed-gain AF game.
//!
//! Each user puts `theta_i` of its power on band 1 and `1 - theta_i` on
//! band 2. Equating the marginal rates of the two bands gives a best
//! response that is an affine function of the opponent's share, clamped to
//! `[0, 1]`:
//!
//! ```text
//! F_i(theta_j) = (d_i - c_ij * theta_j) / c_ii
//! ```
//!
//! Equilibria are the fixed points of the pair of clamped maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{AfGain, BandChannel, BandProtocol, Scenario, User};

/// Tolerance on the identities that separate generic and degenerate
/// equilibrium configurations.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Distance under which two equilibria are the same point.
const MERGE_TOL: f64 = 1e-10;

/// How the relay noise term enters `d_i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReading {
    /// `A^2 |h_ri|^2 + 1`, the amplified relay noise of the AF rate.
    #[default]
    Squared,
    /// `A |h_ri|^2 + 1`, with the gain unsquared.
    Printed,
}

/// Coefficients of the affine best responses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BrCoefficients {
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
    pub d1: f64,
    pub d2: f64,
}

impl BrCoefficients {
    pub fn new(c11: f64, c12: f64, c21: f64, c22: f64, d1: f64, d2: f64) -> Self {
        BrCoefficients { c11, c12, c21, c22, d1, d2 }
    }

    /// `(c_ii, c_ij, d_i)` for `user`.
    pub fn of(&self, user: User) -> (f64, f64, f64) {
        match user {
            User::One => (self.c11, self.c12, self.d1),
            User::Two => (self.c22, self.c21, self.d2),
        }
    }

    /// Coefficients with the user labels exchanged.
    pub fn swapped(&self) -> Self {
        BrCoefficients::new(self.c22, self.c21, self.c12, self.c11, self.d2, self.d1)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.c11 > 0.0 && self.c22 > 0.0) {
            return Err(Error::Degenerate(format!("c11 = {}, c22 = {}", self.c11, self.c22)));
        }
        if !(self.c12 >= 0.0 && self.c21 >= 0.0) {
            return Err(Error::Degenerate("cross coefficients must be non-negative".into()));
        }
        if ![self.d1, self.d2].iter().all(|d| d.is_finite()) {
            return Err(Error::Degenerate("d coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Unclamped affine map `F_i`.
    pub fn affine(&self, user: User, theta_opp: f64) -> f64 {
        let (cii, cij, di) = self.of(user);
        (di - cij * theta_opp) / cii
    }

    /// Clamped best response without the degeneracy check.
    fn br(&self, user: User, theta_opp: f64) -> f64 {
        self.affine(user, theta_opp).clamp(0.0, 1.0)
    }

    /// Slope magnitude `c_ij / c_ii` of the unclamped map.
    fn slope(&self, user: User) -> f64 {
        let (cii, cij, _) = self.of(user);
        cij / cii
    }
}

/// Fixed relay gains of a two-band scenario read from its band protocols.
/// Direct bands count as gain 0.
pub fn fixed_gains(s: &Scenario) -> Result<[f64; 2]> {
    if s.num_bands() != 2 {
        return Err(Error::Domain(format!("analytic game needs 2 bands, got {}", s.num_bands())));
    }
    let mut gains = [0.0; 2];
    for (q, band) in s.bands.iter().enumerate() {
        if band.ts.is_some() {
            return Err(Error::Domain(format!("band {q} uses time sharing")));
        }
        gains[q] = match band.protocol {
            BandProtocol::Direct => 0.0,
            BandProtocol::Af { gain: AfGain::Fixed(a) } => a,
            ref p => return Err(Error::Domain(format!("band {q} uses {}, expected a fixed AF gain", p.name()))),
        };
    }
    Ok(gains)
}

/// Best-response coefficients of a two-band scenario with relay gains
/// `gains`.
///
/// Noise levels may differ between nodes and bands; all coefficients are
/// divided by user 1's band-1 destination noise, which gives the familiar
/// SNR form when every noise is equal.
pub fn br_coefficients(s: &Scenario, gains: [f64; 2], reading: NoiseReading) -> Result<BrCoefficients> {
    if s.num_bands() != 2 {
        return Err(Error::Domain(format!("analytic game needs 2 bands, got {}", s.num_bands())));
    }
    let (h, g) = (&s.bands[0].channel, &s.bands[1].channel);
    let scale = h.noise_d1;
    let mut out = [(0.0, 0.0, 0.0); 2];
    for user in User::BOTH {
        let other = user.other();
        let (pi, pj) = (s.power(user), s.power(other));
        let own = |b: &BandChannel, a: f64| (a * b.from_relay(user) * b.to_relay(user) + b.direct(user, user)).norm_sqr();
        let cross = |b: &BandChannel, a: f64| (a * b.from_relay(user) * b.to_relay(other) + b.direct(other, user)).norm_sqr();
        let floor = |b: &BandChannel, a: f64| {
            let amp = match reading {
                NoiseReading::Squared => a * a,
                NoiseReading::Printed => a,
            };
            amp * b.from_relay(user).norm_sqr() * b.noise_r + b.noise(user)
        };
        let (h_own, g_own) = (own(h, gains[0]), own(g, gains[1]));
        let (h_cross, g_cross) = (cross(h, gains[0]), cross(g, gains[1]));
        let cii = 2.0 * h_own * g_own * pi;
        let cij = (h_own * g_cross + h_cross * g_own) * pj;
        let di = h_own * (g_own * pi + g_cross * pj + floor(g, gains[1])) - g_own * floor(h, gains[0]);
        out[user.index()] = (cii / scale, cij / scale, di / scale);
    }
    let c = BrCoefficients::new(out[0].0, out[0].1, out[1].1, out[1].0, out[0].2, out[1].2);
    c.check()?;
    Ok(c)
}

/// Clamped affine best response of `user` to the opponent's band-1 share.
pub fn br_affine(c: &BrCoefficients, user: User, theta_opp: f64) -> Result<f64> {
    c.check()?;
    Ok(c.br(user, theta_opp))
}

/// Intersection of the two unclamped lines.
pub fn interior_ne(c: &BrCoefficients) -> Result<(f64, f64)> {
    let det = c.c11 * c.c22 - c.c12 * c.c21;
    if det.abs() <= IDENTITY_TOL * (c.c11 * c.c22).abs().max((c.c12 * c.c21).abs()) {
        return Err(Error::Singular("best-response lines are parallel".into()));
    }
    Ok(((c.c22 * c.d1 - c.c12 * c.d2) / det, (c.c11 * c.d2 - c.c21 * c.d1) / det))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeKind {
    Interior,
    Border,
    SegmentMember,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NePoint {
    pub theta1: f64,
    pub theta2: f64,
    pub kind: NeKind,
    pub stability: Stability,
    pub slope_product: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    One,
    Two,
    Three,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeSet {
    /// Isolated equilibria, or the segment endpoints when infinite.
    pub points: Vec<NePoint>,
    pub cardinality: Cardinality,
    pub segment: Option<[[f64; 2]; 2]>,
}

impl NeSet {
    pub fn stable_points(&self) -> impl Iterator<Item = (usize, &NePoint)> {
        self.points.iter().enumerate().filter(|(_, p)| p.stability == Stability::Stable)
    }

    /// Index of the listed equilibrium within `tol` of `theta`.
    pub fn locate(&self, theta: (f64, f64), tol: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|p| (p.theta1 - theta.0).abs().max((p.theta2 - theta.1).abs()) <= tol)
    }

    /// Whether `theta` lies on the equilibrium segment.
    pub fn on_segment(&self, theta: (f64, f64), tol: f64) -> bool {
        let Some([a, b]) = self.segment else { return false };
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 { 0.0 } else { (((theta.0 - a[0]) * dx + (theta.1 - a[1]) * dy) / len2).clamp(0.0, 1.0) };
        let (px, py) = (a[0] + t * dx, a[1] + t * dy);
        (px - theta.0).abs().max((py - theta.1).abs()) <= tol
    }
}

/// Slope of `user`'s clamped best response at `theta_opp`: zero inside a
/// clamp, `c_ij / c_ii` on the affine part, and the larger of the two on a
/// clamp boundary.
fn br_slope(c: &BrCoefficients, user: User, theta_opp: f64) -> f64 {
    let f = c.affine(user, theta_opp);
    let tol = IDENTITY_TOL * f.abs().max(1.0);
    if f < -tol || f > 1.0 + tol {
        0.0
    } else {
        c.slope(user)
    }
}

/// Product of the best-response slopes at `(theta1, theta2)` and the
/// resulting stability class.
pub fn stability(c: &BrCoefficients, theta1: f64, theta2: f64) -> (Stability, f64) {
    let prod = br_slope(c, User::One, theta2) * br_slope(c, User::Two, theta1);
    let tag = if (prod - 1.0).abs() <= IDENTITY_TOL {
        Stability::Neutral
    } else if prod < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    (tag, prod)
}

fn is_fixed_point(c: &BrCoefficients, t1: f64, t2: f64) -> bool {
    (c.br(User::One, t2) - t1).abs() <= IDENTITY_TOL && (c.br(User::Two, t1) - t2).abs() <= IDENTITY_TOL
}

fn superposed(c: &BrCoefficients) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= IDENTITY_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    close(c.c11 * c.c22, c.c12 * c.c21) && close(c.c11 * c.d2, c.c21 * c.d1) && close(c.c12 * c.d2, c.c22 * c.d1)
}

/// Part of the line `c11 t1 + c12 t2 = d1` inside the unit square.
fn line_in_square(c: &BrCoefficients) -> Option<[[f64; 2]; 2]> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut push = |p: [f64; 2]| {
        let inside = p.iter().all(|v| (-IDENTITY_TOL..=1.0 + IDENTITY_TOL).contains(v));
        if inside {
            let p = [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
            if !pts.iter().any(|q| (q[0] - p[0]).abs().max((q[1] - p[1]).abs()) <= MERGE_TOL) {
                pts.push(p);
            }
        }
    };
    for t2 in [0.0, 1.0] {
        push([(c.d1 - c.c12 * t2) / c.c11, t2]);
    }
    if c.c12 > 0.0 {
        for t1 in [0.0, 1.0] {
            push([t1, (c.d1 - c.c11 * t1) / c.c12]);
        }
    }
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(b[1].total_cmp(&a[1])));
    match pts.len() {
        0 => None,
        1 => Some([pts[0], pts[0]]),
        _ => Some([pts[0], pts[pts.len() - 1]]),
    }
}

/// All pure equilibria of the clamped affine game.
///
/// Every equilibrium has each coordinate either clamped at 0 or 1 or on
/// its affine line. Candidates are therefore the answers to the four
/// clamped coordinates plus the intersection of the two lines; each is
/// kept only if it is a fixed point of both clamped maps. Superposed lines
/// give a segment of equilibria.
pub fn enumerate_ne(c: &BrCoefficients) -> Result<NeSet> {
    c.check()?;
    let mut cands: Vec<(f64, f64)> = Vec::new();
    for v in [0.0, 1.0] {
        cands.push((v, c.br(User::Two, v)));
        cands.push((c.br(User::One, v), v));
    }
    let segment = if superposed(c) { line_in_square(c) } else { None };
    if let Ok(p) = interior_ne(c) {
        cands.push(p);
    }

    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (t1, t2) in cands {
        if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) || !is_fixed_point(c, t1, t2) {
            continue;
        }
        match pts.iter_mut().find(|p| (p.0 - t1).abs().max((p.1 - t2).abs()) <= MERGE_TOL) {
            Some(p) => {
                // Prefer a coordinate that sits exactly on a clamp.
                if t1 == 0.0 || t1 == 1.0 {
                    p.0 = t1;
                }
                if t2 == 0.0 || t2 == 1.0 {
                    p.1 = t2;
                }
            }
            None => pts.push((t1, t2)),
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tag = |t1: f64, t2: f64, member: bool| {
        let (stab, prod) = stability(c, t1, t2);
        let kind = if member {
            NeKind::SegmentMember
        } else if t1 > 0.0 && t1 < 1.0 && t2 > 0.0 && t2 < 1.0 {
            NeKind::Interior
        } else {
            NeKind::Border
        };
        NePoint { theta1: t1, theta2: t2, kind, stability: stab, slope_product: prod }
    };

    if let Some([a, b]) = segment {
        let mut points = vec![tag(a[0], a[1], true)];
        if (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) > MERGE_TOL {
            points.push(tag(b[0], b[1], true));
        }
        let set = NeSet { points: Vec::new(), cardinality: Cardinality::Infinite, segment: Some([a, b]) };
        for &(t1, t2) in &pts {
            if !set.on_segment((t1, t2), 1e-9) {
                points.push(tag(t1, t2, false));
            }
        }
        return Ok(NeSet { points, ..set });
    }

    let cardinality = match pts.len() {
        1 => Cardinality::One,
        2 => Cardinality::Two,
        3 => Cardinality::Three,
        n => return Err(Error::Numerical(format!("{n} isolated equilibria found"))),
    };
    Ok(NeSet {
        points: pts.into_iter().map(|(t1, t2)| tag(t1, t2, false)).collect(),
        cardinality,
        segment: None,
    })
}

/// Where an affine best-response run from one start ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinLabel {
    Point(usize),
    Segment,
    Unconverged,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasinCell {
    pub theta1: f64,
    pub theta2: f64,
    pub label: BasinLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasinMap {
    pub equilibria: NeSet,
    /// Row-major over `theta2`, then `theta1`, at cell centres.
    pub cells: Vec<BasinCell>,
    pub resolution: usize,
}

/// Iteration cap of the exact affine dynamics.
pub const AFFINE_MAX_ITER: usize = 10_000;

/// Exact clamped-affine best-response dynamics, user 1 moving first.
/// Returns the final state and whether successive states agreed within
/// `tol`.
pub fn affine_cournot(c: &BrCoefficients, start: (f64, f64), tol: f64, max_iter: usize) -> ((f64, f64), bool, usize) {
    let (mut t1, mut t2) = start;
    for it in 1..=max_iter {
        let n1 = c.br(User::One, t2);
        let n2 = c.br(User::Two, n1);
        let moved = (n1 - t1).abs().max((n2 - t2).abs());
        t1 = n1;
        t2 = n2;
        if moved < tol {
            return ((t1, t2), true, it);
        }
    }
    ((t1, t2), false, max_iter)
}

/// Labels a `resolution x resolution` grid of starting points with the
/// equilibrium the affine dynamics reach from each.
pub fn basin_map(c: &BrCoefficients, resolution: usize) -> Result<BasinMap> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let equilibria = enumerate_ne(c)?;
    let n = resolution;
    let cells = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let start = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
            let (end, ok, _) = affine_cournot(c, start, 1e-13, AFFINE_MAX_ITER);
            let label = if !ok {
                BasinLabel::Unconverged
            } else if let Some(idx) = equilibria.locate(end, 1e-8) {
                BasinLabel::Point(idx)
            } else if equilibria.on_segment(end, 1e-8) {
                BasinLabel::Segment
            } else {
                BasinLabel::Unconverged
            };
            BasinCell { theta1: start.0, theta2: start.1, label }
        })
        .collect();
    Ok(BasinMap { equilibria, cells, resolution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Band, BandChannel};
    use approx::assert_relative_eq;

    fn example() -> BrCoefficients {
        BrCoefficients::new(2.0, 1.0, 1.0, 3.0, 1.5, 2.0)
    }

    fn fig4(a2: f64) -> Scenario {
        let h = BandChannel::real([14.15, 3.4, 0.0, 1.38], [0.0; 4]);
        let g = BandChannel::real([2.76, 5.64, -3.55, -1.61], [-3.1, 2.22, -3.12, 1.16]).with_relay_power(2.0);
        Scenario::new(
            vec![
                Band::new(h, BandProtocol::Direct),
                Band::new(g, BandProtocol::Af { gain: AfGain::Fixed(a2) }),
            ],
            1.0,
            3.0,
        )
    }

    /// Brute-force fixed points of the clamped maps on a grid of `theta2`.
    fn scan_fixed_points(c: &BrCoefficients, n: usize) -> Vec<(f64, f64)> {
        let phi = |t2: f64| c.br(User::Two, c.br(User::One, t2)) - t2;
        let mut out = Vec::new();
        for k in 0..n {
            let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
            let (fa, fb) = (phi(a), phi(b));
            if fa == 0.0 || fa * fb < 0.0 {
                let t2 = if fa == 0.0 { a } else { a - fa * (b - a) / (fb - fa) };
                out.push((c.br(User::One, t2), t2));
            }
        }
        if phi(1.0) == 0.0 {
            out.push((c.br(User::One, 1.0), 1.0));
        }
        out
    }

    #[test]
    fn example_best_response_and_interior_point() {
        let c = example();
        assert_relative_eq!(br_affine(&c, User::One, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(interior_ne(&c).unwrap(), (0.5, 0.5));
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::One);
        let p = set.points[0];
        assert_eq!((p.theta1, p.theta2), (0.5, 0.5));
        assert_eq!(p.kind, NeKind::Interior);
        assert_eq!(p.stability, Stability::Stable);
        assert_relative_eq!(p.slope_product, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn clamps() {
        let c = BrCoefficients::new(1.0, 1.0, 1.0, 1.0, 5.0, -1.0);
        assert_eq!(br_affine(&c, User::One, 0.3).unwrap(), 1.0);
        assert_eq!(br_affine(&c, User::Two, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn non_positive_d_gives_origin() {
        let c = BrCoefficients::new(2.0, 1.0, 1.0, 3.0, -0.5, 0.0);
        for t in [0.0, 0.4, 1.0] {
            assert_eq!(br_affine(&c, User::One, t).unwrap(), 0.0);
        }
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::One);
        assert_eq!((set.points[0].theta1, set.points[0].theta2), (0.0, 0.0));
        assert_eq!(set.points[0].stability, Stability::Stable);
        assert_eq!(set.points[0].slope_product, 0.0);
    }

    #[test]
    fn symmetric_interior_point() {
        let c = BrCoefficients::new(3.0, 1.0, 1.0, 3.0, 2.0, 2.0);
        let (a, b) = interior_ne(&c).unwrap();
        assert_relative_eq!(a, 0.5, epsilon = 1e-15);
        assert_relative_eq!(b, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn parallel_lines_are_singular() {
        let c = BrCoefficients::new(1.0, 2.0, 1.0, 2.0, 0.5, 0.7);
        assert!(matches!(interior_ne(&c), Err(Error::Singular(_))));
        assert_eq!(enumerate_ne(&c).unwrap().cardinality, Cardinality::One);
    }

    #[test]
    fn degenerate_coefficients_are_rejected() {
        let c = BrCoefficients::new(0.0, 1.0, 1.0, 3.0, 1.0, 1.0);
        assert!(matches!(br_affine(&c, User::One, 0.2), Err(Error::Degenerate(_))));
        assert!(enumerate_ne(&c).is_err());
    }

    #[test]
    fn superposed_lines_give_segment() {
        // theta1 + theta2 = 0.8 for both users.
        let c = BrCoefficients::new(2.0, 2.0, 1.0, 1.0, 1.6, 0.8);
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::Infinite);
        let [a, b] = set.segment.unwrap();
        assert_relative_eq!(a[0], 0.0);
        assert_relative_eq!(a[1], 0.8, epsilon = 1e-15);
        assert_relative_eq!(b[0], 0.8, epsilon = 1e-15);
        assert_relative_eq!(b[1], 0.0);
        assert!(set.points.iter().all(|p| p.stability == Stability::Neutral && p.kind == NeKind::SegmentMember));
        assert!(set.on_segment((0.3, 0.5), 1e-12));
        assert_eq!(stability(&c, 0.3, 0.5).0, Stability::Neutral);
    }

    #[test]
    fn three_equilibria_configuration() {
        // Steep lines crossing inside the square.
        let c = BrCoefficients::new(1.0, 2.0, 2.0, 1.0, 0.9, 0.9);
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::Three);
        let inner: Vec<_> = set.points.iter().filter(|p| p.kind == NeKind::Interior).collect();
        assert_eq!(inner.len(), 1);
        assert_relative_eq!(inner[0].theta1, 0.3, epsilon = 1e-15);
        assert_eq!(inner[0].stability, Stability::Unstable);
        assert_relative_eq!(inner[0].slope_product, 4.0);
        assert!(set.locate((0.0, 0.9), 1e-15).is_some());
        assert!(set.locate((0.9, 0.0), 1e-15).is_some());
        assert_eq!(set.stable_points().count(), 2);
    }

    #[test]
    fn two_equilibria_on_coincidence() {
        // d2/c22 = d1/c12: the crossing sits on the theta1 = 0 border.
        let c = BrCoefficients::new(1.0, 2.0, 2.0, 1.0, 1.0, 0.5);
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::Two);
        let kink = set.points[set.locate((0.0, 0.5), 1e-12).unwrap()];
        assert_eq!(kink.stability, Stability::Unstable);
        let other = set.points[set.locate((1.0, 0.0), 1e-12).unwrap()];
        assert_eq!(other.stability, Stability::Stable);
    }

    #[test]
    fn saturated_cases() {
        let both = BrCoefficients::new(1.0, 1.0, 1.0, 1.0, 3.0, 3.0);
        let p = enumerate_ne(&both).unwrap().points[0];
        assert_eq!((p.theta1, p.theta2), (1.0, 1.0));
        // User 1 saturated; user 2 answers (d2 - c21) / c22 when d2 > c21.
        let one = BrCoefficients::new(1.0, 1.0, 0.5, 1.0, 3.0, 0.9);
        let p = enumerate_ne(&one).unwrap().points[0];
        assert_eq!(p.theta1, 1.0);
        assert_relative_eq!(p.theta2, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn enumeration_agrees_with_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let c = BrCoefficients::new(
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.1..3.0),
                rng.gen_range(-1.0..4.0),
                rng.gen_range(-1.0..4.0),
            );
            let set = enumerate_ne(&c).unwrap();
            assert!(matches!(set.cardinality, Cardinality::One | Cardinality::Three));
            for p in &set.points {
                assert!(is_fixed_point(&c, p.theta1, p.theta2));
            }
            for (t1, t2) in scan_fixed_points(&c, 1000) {
                let d = set
                    .points
                    .iter()
                    .map(|p| (p.theta1 - t1).abs().max((p.theta2 - t2).abs()))
                    .fold(f64::INFINITY, f64::min);
                assert!(d < 2e-3, "{c:?} misses ({t1}, {t2})");
            }
        }
    }

    #[test]
    fn zero_gains_reduce_to_interference_channel() {
        let s = fig4(0.0);
        let c = br_coefficients(&s, [0.0, 0.0], NoiseReading::Squared).unwrap();
        let (h, g) = (&s.bands[0].channel, &s.bands[1].channel);
        let (h11, g11, h21, g21) = (h.h11.norm_sqr(), g.h11.norm_sqr(), h.h21.norm_sqr(), g.h21.norm_sqr());
        assert_relative_eq!(c.c11, 2.0 * h11 * g11, max_relative = 1e-14);
        assert_relative_eq!(c.c12, (h11 * g21 + h21 * g11) * 3.0, max_relative = 1e-14);
        assert_relative_eq!(c.d1, h11 * (g11 + g21 * 3.0 + 1.0) - g11, max_relative = 1e-14);
    }

    #[test]
    fn swapped_channel_swaps_coefficients() {
        let mut s = fig4(0.3);
        s.p2 = 1.0;
        let c = br_coefficients(&s, [0.1, 0.3], NoiseReading::Squared).unwrap();
        let cs = br_coefficients(&s.swapped(), [0.1, 0.3], NoiseReading::Squared).unwrap();
        let w = c.swapped();
        for (a, b) in [(w.c11, cs.c11), (w.c12, cs.c12), (w.c21, cs.c21), (w.c22, cs.c22), (w.d1, cs.d1), (w.d2, cs.d2)] {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn readings_agree_at_unit_gain() {
        let s = fig4(1.0);
        let a = br_coefficients(&s, [0.0, 1.0], NoiseReading::Squared).unwrap();
        let b = br_coefficients(&s, [0.0, 1.0], NoiseReading::Printed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fig4_structure() {
        let s = fig4(0.0);
        let a2 = crate::rates::saturating_gain(&s.bands[1].channel, (1.0, 3.0));
        let c = br_coefficients(&s, [0.0, a2], NoiseReading::Squared).unwrap();
        assert_relative_eq!(c.c11, 12000.45, max_relative = 1e-5);
        assert_relative_eq!(c.d2, 46.656, max_relative = 1e-4);
        let set = enumerate_ne(&c).unwrap();
        assert_eq!(set.cardinality, Cardinality::Three);
        let inner = set.points.iter().find(|p| p.kind == NeKind::Interior).unwrap();
        assert_eq!(inner.stability, Stability::Unstable);
        assert_eq!(set.stable_points().count(), 2);
    }

    #[test]
    fn fixed_gains_from_protocols() {
        assert_eq!(fixed_gains(&fig4(0.25)).unwrap(), [0.0, 0.25]);
        let s = fig4(0.25).with_protocol(BandProtocol::Af { gain: AfGain::Saturating });
        assert!(fixed_gains(&s).is_err());
    }

    #[test]
    fn basin_of_unique_equilibrium_is_everything() {
        let m = basin_map(&example(), 20).unwrap();
        assert_eq!(m.cells.len(), 400);
        assert!(m.cells.iter().all(|c| c.label == BasinLabel::Point(0)));
    }

    #[test]
    fn unstable_point_is_a_fixed_point_of_the_dynamics() {
        let c = BrCoefficients::new(1.0, 2.0, 2.0, 1.0, 0.9, 0.9);
        let (end, ok, _) = affine_cournot(&c, (0.3, 0.3), 1e-13, 100);
        assert!(ok);
        assert_relative_eq!(end.0, 0.3, epsilon = 1e-12);
        let (end, _, _) = affine_cournot(&c, (0.3, 0.3 + 1e-3), 1e-13, 1000);
        assert!((end.0 - 0.3).abs() > 0.1);
    }

    #[test]
    fn three_equilibria_split_the_square() {
        let c = BrCoefficients::new(1.0, 2.0, 2.0, 1.0, 0.9, 0.9);
        let m = basin_map(&c, 40).unwrap();
        let interior = m.equilibria.points.iter().position(|p| p.kind == NeKind::Interior).unwrap();
        let mut counts = [0usize; 3];
        for cell in &m.cells {
            match cell.label {
                BasinLabel::Point(i) => counts[i] += 1,
                other => panic!("{other:?}"),
            }
        }
        assert!(counts[interior] <= 1);
        assert!(counts.iter().filter(|&&n| n > 100).count() == 2);
    }
}
