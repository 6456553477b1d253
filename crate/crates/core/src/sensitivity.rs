//! Detectable collapse rate against background, depth scans, depth
//! inversion and λ–r_c contours.

use rayon::prelude::*;

use crate::constants::RC_REFERENCE;
use crate::error::{Error, Result};
use crate::muon::{muon_power_with, DepthIntensityTable, MeanEnergyParams, MuonOptions};
use crate::physics::{csl_coefficient, DetectorSpec};

pub use crate::fit::{weighted_log_linear_fit, FitResult};

/// Ratio of CSL heating to background power required for detection.
pub const DEFAULT_MARGIN: f64 = 100.0;

/// Bisection tolerance of [`depth_for_lambda`] (km.w.e.).
pub const DEPTH_TOLERANCE: f64 = 1e-3;

/// λ (s⁻¹) at which the CSL heating of the absorber equals
/// `margin_factor × background_power`.
pub fn detectable_lambda(det: &DetectorSpec, background_power: f64, r_c: f64, margin_factor: f64) -> Result<f64> {
    if !(background_power >= 0.0) || !background_power.is_finite() {
        return Err(Error::param(format!("background power must be >= 0, got {background_power}")));
    }
    if !(margin_factor > 0.0) || !margin_factor.is_finite() {
        return Err(Error::param(format!("margin factor must be > 0, got {margin_factor}")));
    }
    if !(r_c > 0.0) || !r_c.is_finite() {
        return Err(Error::domain(format!("correlation length must be > 0, got {r_c}")));
    }
    let mass = det.mass_kg();
    if !(mass > 0.0) {
        return Err(Error::domain("absorber mass is zero"));
    }
    Ok(margin_factor * background_power / (csl_coefficient(r_c) * mass))
}

/// One row of a detectable-λ depth scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaRow {
    /// km.w.e.
    pub depth: f64,
    /// s⁻¹
    pub lambda: f64,
    pub lambda_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityConfig {
    pub params: MeanEnergyParams,
    pub margin_factor: f64,
    pub muon: MuonOptions,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            params: MeanEnergyParams::default(),
            margin_factor: DEFAULT_MARGIN,
            muon: MuonOptions::default(),
        }
    }
}

fn lambda_at(det: &DetectorSpec, table: &DepthIntensityTable, cfg: &SensitivityConfig, depth: f64) -> Result<LambdaRow> {
    let p = muon_power_with(det, depth, table, &cfg.params, &cfg.muon)?;
    let lambda = detectable_lambda(det, p.power, RC_REFERENCE, cfg.margin_factor)?;
    let lambda_err = detectable_lambda(det, p.power_err, RC_REFERENCE, cfg.margin_factor)?;
    Ok(LambdaRow { depth, lambda, lambda_err })
}

/// Detectable λ at r_c = 10⁻⁷ m for each depth, in input order.
pub fn lambda_depth_scan(
    det: &DetectorSpec,
    table: &DepthIntensityTable,
    cfg: &SensitivityConfig,
    depths: &[f64],
) -> Result<Vec<LambdaRow>> {
    depths.par_iter().map(|&d| lambda_at(det, table, cfg, d)).collect()
}

/// Shallowest depth at which `target_lambda` becomes detectable, by
/// bisection on log₁₀λ over the table's depth range.
pub fn depth_for_lambda(
    target_lambda: f64,
    det: &DetectorSpec,
    table: &DepthIntensityTable,
    cfg: &SensitivityConfig,
) -> Result<f64> {
    if !(target_lambda > 0.0) || !target_lambda.is_finite() {
        return Err(Error::param(format!("target λ must be > 0, got {target_lambda}")));
    }
    let (mut lo, mut hi) = table.depth_range();
    let g = |d: f64| -> Result<f64> { Ok(lambda_at(det, table, cfg, d)?.lambda.log10() - target_lambda.log10()) };
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    if g_lo < 0.0 || g_hi > 0.0 {
        return Err(Error::range(format!(
            "λ = {target_lambda:e} not reachable in [{lo}, {hi}] km.w.e.: detectable λ spans {:e} .. {:e}",
            10f64.powf(g_lo + target_lambda.log10()),
            10f64.powf(g_hi + target_lambda.log10()),
        )));
    }
    while hi - lo > DEPTH_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Detectable (r_c, λ) curve at one depth.
#[derive(Clone, Debug, PartialEq)]
pub struct ExclusionContour {
    /// km.w.e.
    pub depth: f64,
    pub margin_factor: f64,
    /// (r_c in m, λ in s⁻¹), ordered by r_c.
    pub points: Vec<(f64, f64)>,
}

pub fn exclusion_contour(
    det: &DetectorSpec,
    table: &DepthIntensityTable,
    cfg: &SensitivityConfig,
    depth: f64,
    r_c_grid: &[f64],
) -> Result<ExclusionContour> {
    if r_c_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::param("r_c grid values must be positive"));
    }
    if r_c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("r_c grid must be strictly increasing"));
    }
    let power = muon_power_with(det, depth, table, &cfg.params, &cfg.muon)?.power;
    let points = r_c_grid
        .iter()
        .map(|&r_c| Ok((r_c, detectable_lambda(det, power, r_c, cfg.margin_factor)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExclusionContour {
        depth,
        margin_factor: cfg.margin_factor,
        points,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muon::DepthIntensityRow;
    use crate::physics::{csl_power, CslParams};
    use proptest::prelude::*;

    fn table() -> DepthIntensityTable {
        DepthIntensityTable::new(
            "toy",
            (0..=12)
                .map(|i| {
                    let d = 1.0 + 0.5 * i as f64;
                    let v = 10f64.powf(-0.5 * d - 6.36);
                    DepthIntensityRow { depth: d, intensity: v, intensity_err: 0.1 * v }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_background() {
        let det = DetectorSpec::reference_ge();
        assert_eq!(detectable_lambda(&det, 0.0, RC_REFERENCE, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn inverts_csl_power() {
        let det = DetectorSpec::reference_ge();
        let lambda = detectable_lambda(&det, 3e-16, RC_REFERENCE, 100.0).unwrap();
        let back = csl_power(&CslParams::new(lambda, RC_REFERENCE).unwrap(), det.mass_kg()).unwrap();
        assert!((back / 3e-14 - 1.0).abs() < 1e-12);
        let doubled = detectable_lambda(&det, 3e-16, RC_REFERENCE, 200.0).unwrap();
        assert_eq!(doubled, 2.0 * lambda);
    }

    #[test]
    fn depth_inversion_round_trip() {
        let det = DetectorSpec::reference_ge();
        let cfg = SensitivityConfig::default();
        let t = table();
        let d = depth_for_lambda(1e-16, &det, &t, &cfg).unwrap();
        let back = lambda_depth_scan(&det, &t, &cfg, &[d]).unwrap()[0].lambda;
        assert!((back.log10() + 16.0).abs() < 1e-3);
        assert!(matches!(depth_for_lambda(1e-30, &det, &t, &cfg), Err(Error::Range(_))));
        assert!(matches!(depth_for_lambda(1.0, &det, &t, &cfg), Err(Error::Range(_))));
    }

    #[test]
    fn contour_reference_point_and_slope() {
        let det = DetectorSpec::reference_ge();
        let cfg = SensitivityConfig::default();
        let t = table();
        let grid = log_grid(1e-9, 1e-3, 13);
        let c = exclusion_contour(&det, &t, &cfg, 5.0, &grid).unwrap();
        let at_ref = exclusion_contour(&det, &t, &cfg, 5.0, &[RC_REFERENCE]).unwrap().points[0].1;
        let scan = lambda_depth_scan(&det, &t, &cfg, &[5.0]).unwrap()[0].lambda;
        assert_eq!(at_ref, scan);
        for w in c.points.windows(2) {
            let slope = (w[1].1.log10() - w[0].1.log10()) / (w[1].0.log10() - w[0].0.log10());
            assert!((slope - 2.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn rc_squared_scaling(log_rc in -9.0f64..-3.0, p in 1e-20f64..1e-10) {
            let det = DetectorSpec::reference_ge();
            let r_c = 10f64.powf(log_rc);
            let a = detectable_lambda(&det, p, r_c, 100.0).unwrap();
            let b = detectable_lambda(&det, p, RC_REFERENCE, 100.0).unwrap();
            prop_assert!((a / b / (r_c / RC_REFERENCE).powi(2) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn contours_do_not_cross(d1 in 1.0f64..7.0, dd in 0.01f64..6.0) {
            let det = DetectorSpec::reference_ge();
            let cfg = SensitivityConfig::default();
            let t = table();
            let grid = log_grid(1e-9, 1e-3, 7);
            let shallow = exclusion_contour(&det, &t, &cfg, d1, &grid).unwrap();
            let deep = exclusion_contour(&det, &t, &cfg, (d1 + dd).min(7.0), &grid).unwrap();
            prop_assume!(deep.depth > shallow.depth);
            for (a, b) in shallow.points.iter().zip(&deep.points) {
                prop_assert!(b.1 < a.1);
            }
        }
    }
}
