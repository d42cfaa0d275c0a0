//! Small numerical helpers shared by the rate, gain and game modules.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Gaussian capacity `log2(1 + x)` in bits per channel use.
///
/// Negative arguments produced by rounding are clamped to zero.
#[inline]
pub fn capacity(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.ln_1p() / std::f64::consts::LN_2
    }
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Stops once the bracket is shorter than `tol`. The endpoints are compared
/// with the interior estimate so a maximum sitting on the boundary is
/// returned exactly. Returns `(x_max, f_max)`; ties go to the smaller `x`.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let tol = tol.max(f64::EPSILON * (a.abs() + b.abs()));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let fa = f(a);
    if fa >= best.1 {
        best = (a, fa);
    }
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

/// Grid scan of `n` uniform points on `[a, b]` followed by golden-section
/// refinement on the bracket around the best grid point.
pub fn grid_golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, tol: f64) -> (f64, f64) {
    let n = n.max(2);
    let step = (b - a) / (n - 1) as f64;
    let mut best_k = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..n {
        let v = f(a + step * k as f64);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
    }
    let lo = a + step * best_k.saturating_sub(1) as f64;
    let hi = (a + step * (best_k + 1).min(n - 1) as f64).min(b);
    let (x, v) = golden_max(&f, lo, hi, tol);
    if v >= best_v {
        (x, v)
    } else {
        (a + step * best_k as f64, best_v)
    }
}

/// Round to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

/// dBm to linear milliwatts.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Linear milliwatts to dBm.
pub fn linear_to_dbm(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_basics() {
        assert_eq!(capacity(0.0), 0.0);
        assert!((capacity(3.0) - 2.0).abs() < 1e-15);
        assert_eq!(capacity(-1e-18), 0.0);
    }

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let (x, _) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
        let (x, _) = golden_max(|x| -x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn grid_golden_picks_global_peak() {
        let f = |x: f64| (-(x - 0.8).powi(2) * 200.0).exp() + 0.5 * (-(x - 0.2).powi(2) * 200.0).exp();
        let (x, _) = grid_golden_max(f, 0.0, 1.0, 101, 1e-10);
        assert!((x - 0.8).abs() < 1e-5);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-30.0, 0.0, 7.0, 17.0, 23.0] {
            let back = linear_to_dbm(dbm_to_linear(dbm));
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
        assert!((dbm_to_linear(20.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn round_sig_keeps_twelve_digits() {
        assert_eq!(round_sig(0.58496250072115618, 12), 0.584962500721);
        assert_eq!(round_sig(0.0, 12), 0.0);
    }
}
