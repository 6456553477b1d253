//! Weighted straight-line least squares, in linear and in log₁₀ space.

use std::f64::consts::LN_10;

use crate::error::{Error, Result};

/// Straight-line fit `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Covariance between slope and intercept.
    pub covariance: f64,
    /// Weighted sum of squared residuals (plain sum when unweighted).
    pub chi2: f64,
    pub n_points: usize,
    /// Coefficient of determination of the fitted (possibly transformed) data.
    pub r_squared: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Weighted linear least squares on `(x, y, σ_y)` triples.
///
/// All-zero σ means an unweighted fit whose parameter errors are scaled by
/// the residual variance. Otherwise every σ must be positive and the
/// parameter errors follow from the supplied σ alone.
pub fn weighted_linear_fit(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::param(format!("a line fit needs at least 2 points, got {n}")));
    }
    if points.iter().any(|&(x, y, s)| !x.is_finite() || !y.is_finite() || !s.is_finite() || s < 0.0) {
        return Err(Error::param("fit inputs must be finite with non-negative errors"));
    }
    let unweighted = points.iter().all(|p| p.2 == 0.0);
    if !unweighted && points.iter().any(|p| p.2 == 0.0) {
        return Err(Error::param(
            "mixed zero and non-zero errors: either give every point an error or none",
        ));
    }
    let weight = |s: f64| if unweighted { 1.0 } else { 1.0 / (s * s) };

    let sw: f64 = points.iter().map(|p| weight(p.2)).sum();
    let x_mean = points.iter().map(|p| weight(p.2) * p.0).sum::<f64>() / sw;
    let y_mean = points.iter().map(|p| weight(p.2) * p.1).sum::<f64>() / sw;
    let stt: f64 = points.iter().map(|p| weight(p.2) * (p.0 - x_mean).powi(2)).sum();
    let x_scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1e-300);
    if stt <= sw * (x_scale * 1e-12).powi(2) {
        return Err(Error::domain("degenerate fit: all x values are equal"));
    }
    let slope = points
        .iter()
        .map(|p| weight(p.2) * (p.0 - x_mean) * p.1)
        .sum::<f64>()
        / stt;
    let intercept = y_mean - slope * x_mean;

    let chi2: f64 = points
        .iter()
        .map(|p| weight(p.2) * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let syy: f64 = points.iter().map(|p| weight(p.2) * (p.1 - y_mean).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - chi2 / syy } else { 1.0 };

    let scale = if unweighted {
        if n > 2 {
            chi2 / (n as f64 - 2.0)
        } else {
            0.0
        }
    } else {
        1.0
    };
    let var_slope = scale / stt;
    let var_intercept = scale * (1.0 / sw + x_mean * x_mean / stt);
    Ok(FitResult {
        slope,
        intercept,
        slope_err: var_slope.sqrt(),
        intercept_err: var_intercept.sqrt(),
        covariance: -scale * x_mean / stt,
        chi2,
        n_points: n,
        r_squared,
    })
}

/// Weighted fit of `log₁₀ y` against `x`.
///
/// Absolute errors on `y` are mapped to `σ_log = y_err / (y ln 10)`.
pub fn weighted_log_linear_fit(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    let mut logged = Vec::with_capacity(points.len());
    for &(x, y, y_err) in points {
        if !(y > 0.0) {
            return Err(Error::param(format!("log fit needs y > 0, got {y} at x = {x}")));
        }
        logged.push((x, y.log10(), y_err / (y * LN_10)));
    }
    weighted_linear_fit(&logged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_interpolate() {
        let f = weighted_linear_fit(&[(1.0, 3.0, 0.0), (3.0, 7.0, 0.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!(f.chi2 < 1e-24);
    }

    #[test]
    fn equal_errors_match_normal_equations() {
        // Hand-solved normal equations for (0,1), (1,2), (2,4):
        // n=3, Σx=3, Σx²=5, Σy=7, Σxy=10 → slope = (3·10−3·7)/(3·5−9) = 1.5,
        // intercept = (7 − 1.5·3)/3 = 5/6.
        let pts = [(0.0, 1.0, 0.2), (1.0, 2.0, 0.2), (2.0, 4.0, 0.2)];
        let f = weighted_linear_fit(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-10);
        assert!((f.intercept - 5.0 / 6.0).abs() < 1e-10);
        let u = weighted_linear_fit(&pts.map(|(x, y, _)| (x, y, 0.0))).unwrap();
        assert!((u.slope - 1.5).abs() < 1e-10);
        assert!((u.intercept - 5.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_x() {
        let e = weighted_linear_fit(&[(1.0, 1.0, 0.0), (1.0, 2.0, 0.0)]).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
        assert!(weighted_linear_fit(&[(1.0, 1.0, 0.0)]).is_err());
        assert!(weighted_log_linear_fit(&[(1.0, 0.0, 0.0), (2.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn seeded_noisy_line_recovers_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..10)
            .map(|i| {
                let x = 1.0 + 0.6 * i as f64;
                let truth = 10f64.powf(-0.5 * x - 3.92);
                let noise: f64 = rng.gen_range(-1.0..1.0) * 0.05 * 3f64.sqrt();
                (x, truth * (1.0 + noise), 0.05 * truth)
            })
            .collect();
        let f = weighted_log_linear_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 3.0 * f.slope_err, "{f:?}");
        assert!((f.intercept + 3.92).abs() < 3.0 * f.intercept_err, "{f:?}");
    }

    #[test]
    fn scaling_all_errors_keeps_estimates() {
        let pts = [(0.0, 1.0, 0.1), (1.0, 2.2, 0.3), (2.0, 2.9, 0.2), (3.0, 4.2, 0.1)];
        let a = weighted_linear_fit(&pts).unwrap();
        let b = weighted_linear_fit(&pts.map(|(x, y, s)| (x, y, 7.0 * s))).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((a.intercept - b.intercept).abs() < 1e-12);
        assert!((b.slope_err / a.slope_err - 7.0).abs() < 1e-10);
        assert!((b.intercept_err / a.intercept_err - 7.0).abs() < 1e-10);
    }
}
