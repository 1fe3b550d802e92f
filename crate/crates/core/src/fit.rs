//! Algebraic decay exponents from log-log least squares.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of log-spaced resampling points used by [`decay_exponent`].
pub const FIT_POINTS: usize = 40;

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 paired samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = T::from_index(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if !(sxx > T::zero()) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `n` points spaced uniformly in `log(1+t)` over `[t0, t1]`.
pub fn log_times<T: Real>(t0: T, t1: T, n: usize) -> Vec<T> {
    let (a, b) = ((T::one() + t0).ln(), (T::one() + t1).ln());
    (0..n)
        .map(|i| {
            let s = if n == 1 {
                T::zero()
            } else {
                T::from_index(i) / T::from_index(n - 1)
            };
            (a + (b - a) * s).exp() - T::one()
        })
        .collect()
}

/// Exponent `α` in `norm ≈ C (1+t)^α` over `window`.
///
/// The series is interpolated (linearly in `log(1+t)`, `log norm`) at
/// [`FIT_POINTS`] log-spaced instants so that late samples do not dominate.
/// The window must span at least one decade of `1+t` and lie inside the
/// sampled range.
pub fn decay_exponent<T: Real>(times: &[T], norms: &[T], window: (T, T)) -> Result<T> {
    let (t0, t1) = window;
    if !(t1 > t0) || (T::one() + t1) / (T::one() + t0) < T::lit(10.0) {
        return Err(Error::Fit(format!(
            "window [{t0}, {t1}] spans less than one decade"
        )));
    }
    if times.len() != norms.len() || times.len() < 2 {
        return Err(Error::Fit("not enough samples".into()));
    }
    let first = times[0];
    let last = times[times.len() - 1];
    let slack = T::lit(1e-9) * last.abs().max(T::one());
    if t0 < first - slack || t1 > last + slack {
        return Err(Error::Fit(format!(
            "window [{t0}, {t1}] outside sampled range [{first}, {last}]"
        )));
    }
    if norms.iter().any(|&y| !(y > T::zero())) {
        return Err(Error::Fit("norm series is not positive".into()));
    }
    let lx: Vec<T> = times.iter().map(|&t| (T::one() + t).ln()).collect();
    let ly: Vec<T> = norms.iter().map(|&y| y.ln()).collect();
    let mut xs = Vec::with_capacity(FIT_POINTS);
    let mut ys = Vec::with_capacity(FIT_POINTS);
    for t in log_times(t0, t1, FIT_POINTS) {
        let x = (T::one() + t).ln();
        let j = lx.partition_point(|&a| a < x).clamp(1, lx.len() - 1);
        let (xa, xb) = (lx[j - 1], lx[j]);
        let w = if xb > xa {
            (x - xa) / (xb - xa)
        } else {
            T::zero()
        };
        xs.push(x);
        ys.push(ly[j - 1] + w * (ly[j] - ly[j - 1]));
    }
    Ok(least_squares(&xs, &ys)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_recovered() {
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.5).collect();
        let norms: Vec<f64> = times.iter().map(|t| 3.0 * (1.0 + t).powf(-0.25)).collect();
        let a = decay_exponent(&times, &norms, (20.0, 400.0)).unwrap();
        assert_relative_eq!(a, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn short_window_rejected() {
        let times: Vec<f64> = (0..100).map(f64::from).collect();
        let norms = vec![1.0; 100];
        assert!(decay_exponent(&times, &norms, (20.0, 50.0)).is_err());
        assert!(decay_exponent(&times, &norms, (1.0, 500.0)).is_err());
    }

    #[test]
    fn least_squares_line() {
        let (m, b) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(b, 1.0);
        assert!(least_squares(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn log_times_endpoints() {
        let t = log_times(100.0f64, 1e4, 40);
        assert_eq!(t.len(), 40);
        assert_relative_eq!(t[0], 100.0, max_relative = 1e-12);
        assert_relative_eq!(t[39], 1e4, max_relative = 1e-12);
    }
}
