//! Numerical best responses over a user's power simplex.

use serde::Serialize;

use super::{band_utility, utility, PowerAllocation};
use crate::error::{Error, Result};
use crate::numeric::golden_max;
use crate::scenario::{Scenario, User};

/// Starting points kept from the coarse grid when a band rate is not concave.
const MULTI_START: usize = 5;
/// Cap on refinement sweeps.
const MAX_SWEEPS: usize = 500;

/// Search settings for [`best_response`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BrOptions {
    /// Grid points per band for the coarse search.
    pub coarse_grid: usize,
    /// Target accuracy on `theta`.
    pub refine_tol: f64,
}

impl Default for BrOptions {
    fn default() -> Self {
        BrOptions { coarse_grid: 101, refine_tol: 1e-8 }
    }
}

impl BrOptions {
    pub fn check(&self) -> Result<()> {
        if self.coarse_grid < 3 {
            return Err(Error::Domain("coarse_grid must be at least 3".into()));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::Domain("refine_tol must be positive".into()));
        }
        Ok(())
    }

    fn line_tol(&self) -> f64 {
        (self.refine_tol * 1e-4).max(1e-15)
    }
}

/// Outcome of a best-response search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestResponse {
    pub theta: Vec<f64>,
    pub utility: f64,
    /// Whether every per-band rate looked concave on the coarse grid.
    pub concave: bool,
}

/// Result of checking a state for profitable deviations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeCheck {
    pub pass: bool,
    /// Utility gain of each user's best response over its current strategy.
    pub improvements: [f64; 2],
    pub best_responses: [Vec<f64>; 2],
}

impl NeCheck {
    pub fn max_improvement(&self) -> f64 {
        self.improvements[0].max(self.improvements[1])
    }
}

struct Problem<'a> {
    s: &'a Scenario,
    user: User,
    opp: &'a [f64],
}

impl Problem<'_> {
    fn g(&self, q: usize, t: f64) -> f64 {
        band_utility(self.s, q, self.user, t, self.opp[q])
    }

    fn bands(&self) -> usize {
        self.opp.len()
    }
}

/// Best response of `user` to the opponent's per-band fractions.
///
/// The utility is a sum of per-band terms, each depending on one own
/// coordinate. A dynamic program over the coarse grid finds the best grid
/// allocation; coordinate and pairwise-transfer line searches then refine
/// it. When some band rate is not concave on the grid, several grid local
/// maxima are refined and the best result is kept.
pub fn best_response(s: &Scenario, opponent: &[f64], user: User, opts: &BrOptions) -> BestResponse {
    let pb = Problem { s, user, opp: opponent };
    let nq = pb.bands();
    let n = opts.coarse_grid.max(3);
    let step = 1.0 / (n - 1) as f64;
    let table: Vec<Vec<f64>> = (0..nq)
        .map(|q| (0..n).map(|k| pb.g(q, k as f64 * step)).collect())
        .collect();
    let concave = table.iter().all(|row| grid_concave(row));

    let mut starts = vec![dp_argmax(&table)];
    if !concave {
        starts.extend(grid_local_maxima(&table));
        starts.truncate(MULTI_START + 1);
    }
    let window = if concave { None } else { Some(2.0 * step) };

    let mut best: Option<(Vec<f64>, f64)> = None;
    for ks in starts {
        let mut th: Vec<f64> = ks.iter().map(|&k| k as f64 * step).collect();
        let v = refine(&pb, &mut th, opts.line_tol(), window);
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((th, v));
        }
    }
    let (mut theta, _) = best.unwrap_or((vec![0.0; nq], 0.0));
    project(&mut theta);
    let mut state = PowerAllocation::new(opponent.to_vec(), opponent.to_vec());
    state.set(user, theta.clone());
    BestResponse { utility: utility(s, &state, user), theta, concave }
}

/// Checks whether either user can gain more than `tol` by deviating.
pub fn verify_ne(s: &Scenario, theta: &PowerAllocation, tol: f64, opts: &BrOptions) -> NeCheck {
    let mut improvements = [0.0; 2];
    let mut brs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for user in User::BOTH {
        let br = best_response(s, theta.get(user.other()), user, opts);
        let current = utility(s, theta, user);
        improvements[user.index()] = (br.utility - current).max(0.0);
        brs[user.index()] = br.theta;
    }
    NeCheck {
        pass: improvements.iter().all(|&d| d <= tol),
        improvements,
        best_responses: brs,
    }
}

fn grid_concave(row: &[f64]) -> bool {
    let scale = row.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    row.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-10 * scale)
}

/// Best grid allocation with at most `n - 1` grid units in total.
fn dp_argmax(table: &[Vec<f64>]) -> Vec<usize> {
    let nq = table.len();
    let n = table[0].len();
    let budget = n - 1;
    let mut value = vec![0.0f64; budget + 1];
    let mut choice = vec![vec![0usize; budget + 1]; nq];
    for (q, row) in table.iter().enumerate() {
        let mut next = vec![f64::NEG_INFINITY; budget + 1];
        for b in 0..=budget {
            for k in 0..=b {
                let v = row[k] + if q == 0 { 0.0 } else { value[b - k] };
                if v > next[b] {
                    next[b] = v;
                    choice[q][b] = k;
                }
            }
        }
        value = next;
    }
    let mut ks = vec![0; nq];
    let mut b = budget;
    for q in (0..nq).rev() {
        ks[q] = choice[q][b];
        b -= ks[q];
    }
    ks
}

/// Grid points that beat all their grid neighbours, best first. Enumerated
/// for one or two bands; larger problems fall back to the simplex vertices.
fn grid_local_maxima(table: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let nq = table.len();
    let n = table[0].len();
    let mut found: Vec<(f64, Vec<usize>)> = Vec::new();
    match nq {
        1 => {
            let row = &table[0];
            for k in 0..n {
                let left = k == 0 || row[k] >= row[k - 1];
                let right = k + 1 == n || row[k] >= row[k + 1];
                if left && right {
                    found.push((row[k], vec![k]));
                }
            }
        }
        2 => {
            let val = |i: usize, j: usize| table[0][i] + table[1][j];
            for i in 0..n {
                for j in 0..n - i {
                    let v = val(i, j);
                    let mut peak = true;
                    'nb: for di in -1i64..=1 {
                        for dj in -1i64..=1 {
                            let (a, b) = (i as i64 + di, j as i64 + dj);
                            if (di, dj) == (0, 0) || a < 0 || b < 0 || a + b > n as i64 - 1 {
                                continue;
                            }
                            if val(a as usize, b as usize) > v {
                                peak = false;
                                break 'nb;
                            }
                        }
                    }
                    if peak {
                        found.push((v, vec![i, j]));
                    }
                }
            }
        }
        _ => {
            for q in 0..nq {
                let mut ks = vec![0; nq];
                ks[q] = n - 1;
                let v: f64 = (0..nq).map(|p| table[p][ks[p]]).sum();
                found.push((v, ks));
            }
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    found.into_iter().map(|(_, ks)| ks).take(MULTI_START).collect()
}

/// Line search on `[lo, hi]`, also searching a window around `at` when
/// given so that a local peak is not skipped over. An interior maximum is
/// then sharpened by bisecting on the sign of a central difference, which
/// resolves the argmax well below the square-root-of-epsilon limit of a
/// value-only search.
fn line_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, at: f64, window: Option<f64>) -> (f64, f64) {
    let mut best = golden_max(&f, lo, hi, tol);
    if let Some(w) = window {
        let local = golden_max(&f, (at - w).max(lo), (at + w).min(hi), tol);
        if local.1 > best.1 {
            best = local;
        }
    }
    polish(&f, lo, hi, best)
}

const DIFF_STEP: f64 = 1e-6;

fn polish(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, (x, v): (f64, f64)) -> (f64, f64) {
    if !(x > lo && x < hi) {
        return (x, v);
    }
    let slope = |t: f64| {
        let (a, b) = ((t - DIFF_STEP).max(lo), (t + DIFF_STEP).min(hi));
        (f(b) - f(a)) / (b - a)
    };
    let mut w = 1e-7;
    let (mut a, mut b);
    loop {
        a = (x - w).max(lo);
        b = (x + w).min(hi);
        if slope(a) > 0.0 && slope(b) < 0.0 {
            break;
        }
        if w > 1e-3 || (a == lo && b == hi) {
            return (x, v);
        }
        w *= 4.0;
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if slope(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm >= v - 4.0 * f64::EPSILON * v.abs().max(1.0) {
        (m, fm)
    } else {
        (x, v)
    }
}

/// Coordinate and pairwise-transfer ascent from `th`; returns the utility.
fn refine(pb: &Problem, th: &mut [f64], tol: f64, window: Option<f64>) -> f64 {
    let nq = th.len();
    let mut vals: Vec<f64> = (0..nq).map(|q| pb.g(q, th[q])).collect();
    for _ in 0..MAX_SWEEPS {
        let before: f64 = vals.iter().sum();
        for q in 0..nq {
            let others: f64 = th.iter().sum::<f64>() - th[q];
            let hi = (1.0 - others).clamp(0.0, 1.0);
            let (t, v) = line_max(|t| pb.g(q, t), 0.0, hi, tol, th[q], window);
            if v > vals[q] || (v >= vals[q] - noise(vals[q]) && t != th[q]) {
                th[q] = t;
                vals[q] = v;
            }
        }
        for a in 0..nq {
            for b in a + 1..nq {
                let lo = -th[a].min(1.0 - th[b]);
                let hi = th[b].min(1.0 - th[a]);
                let (ta, tb) = (th[a], th[b]);
                let f = |d: f64| pb.g(a, (ta + d).clamp(0.0, 1.0)) + pb.g(b, (tb - d).clamp(0.0, 1.0));
                let (d, v) = line_max(f, lo, hi, tol, 0.0, window);
                let cur = vals[a] + vals[b];
                if v > cur || (v >= cur - noise(cur) && d != 0.0) {
                    th[a] = (ta + d).clamp(0.0, 1.0);
                    th[b] = (tb - d).clamp(0.0, 1.0);
                    vals[a] = pb.g(a, th[a]);
                    vals[b] = pb.g(b, th[b]);
                }
            }
        }
        let after: f64 = vals.iter().sum();
        if after - before <= 1e-15 * before.abs().max(1.0) {
            break;
        }
    }
    vals.iter().sum()
}

/// Rounding level of a utility value.
fn noise(v: f64) -> f64 {
    4.0 * f64::EPSILON * v.abs().max(1.0)
}

/// Clamps to `[0, 1]` and rescales if the sum exceeds one.
fn project(th: &mut [f64]) {
    for t in th.iter_mut() {
        *t = t.clamp(0.0, 1.0);
    }
    let sum: f64 = th.iter().sum();
    if sum > 1.0 {
        for t in th.iter_mut() {
            *t /= sum;
        }
    }
}
