//! Small 1-D numerical routines shared by the solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal (quasi-convex)
/// function on `[lo, hi]`. Returns `(argmin, min)` over every point probed,
/// endpoints included.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Golden-section search for the maximum of a unimodal function.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> (f64, f64) {
    let (x, v) = golden_min(|x| -f(x), lo, hi, x_tol, max_iter);
    (x, -v)
}

/// `n` points log-spaced from `lo` to `hi` inclusive (`lo, hi > 0`).
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` points evenly spaced from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Root of a continuous, strictly decreasing `h` on `[lo, hi]` with
/// `h(lo) ≥ 0 ≥ h(hi)`. Stops when the bracket is below `x_tol` or cannot
/// be split further in floating point.
pub fn bisect_decreasing<F: FnMut(f64) -> f64>(mut h: F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if h(a) <= 0.0 {
        return a;
    }
    if h(b) >= 0.0 {
        return b;
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= x_tol {
            break;
        }
        let v = h(m);
        if v == 0.0 {
            return m;
        }
        if v > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
