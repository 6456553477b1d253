//! Gamma background: shield transmission, detector absorption and the
//! deposited power integrated over a binned flux spectrum.

use rayon::prelude::*;

use crate::constants::MEV_TO_J;
use crate::error::{Error, Result};
use crate::fit::weighted_linear_fit;
use crate::physics::{DetectorSpec, Material};

/// One row of a photon coefficient table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttenuationRow {
    /// Photon energy (MeV).
    pub energy: f64,
    /// Total mass attenuation coefficient μ/ρ (cm²/g).
    pub mu_total: f64,
    /// Mass energy-absorption coefficient μ_en/ρ (cm²/g).
    pub mu_en: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    Total,
    EnergyAbsorption,
}

/// Tabulated photon coefficients for one material.
#[derive(Clone, Debug, PartialEq)]
pub struct AttenuationTable {
    material: Material,
    rows: Vec<AttenuationRow>,
}

impl AttenuationTable {
    /// Validates and wraps the rows. Row numbers in errors are 1-based.
    pub fn new(material: Material, rows: Vec<AttenuationRow>) -> Result<Self> {
        let name = format!("attenuation table ({})", material.name);
        if rows.len() < 2 {
            return Err(Error::validation(&name, format!("needs at least 2 rows, got {}", rows.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            let row = i + 1;
            if !(r.energy > 0.0) || !r.energy.is_finite() {
                return Err(Error::validation(&name, format!("row {row}: energy must be positive")));
            }
            if !(r.mu_total > 0.0) || !(r.mu_en > 0.0) || !r.mu_total.is_finite() || !r.mu_en.is_finite() {
                return Err(Error::validation(&name, format!("row {row}: coefficients must be positive")));
            }
            if r.mu_en > r.mu_total {
                return Err(Error::validation(
                    &name,
                    format!("row {row}: energy-absorption coefficient exceeds total attenuation"),
                ));
            }
            if i > 0 && r.energy <= rows[i - 1].energy {
                return Err(Error::validation(
                    &name,
                    format!("row {row}: energies must be strictly increasing"),
                ));
            }
        }
        Ok(AttenuationTable { material, rows })
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn rows(&self) -> &[AttenuationRow] {
        &self.rows
    }

    /// Tabulated energy range (MeV).
    pub fn energy_range(&self) -> (f64, f64) {
        (self.rows[0].energy, self.rows[self.rows.len() - 1].energy)
    }

    pub fn covers(&self, energy: f64) -> bool {
        let (lo, hi) = self.energy_range();
        energy >= lo && energy <= hi
    }

    /// Coefficient at `energy` by log–log linear interpolation.
    pub fn lookup(&self, energy: f64, kind: CoefficientKind) -> Result<f64> {
        lookup_coefficient(self, energy, kind)
    }
}

/// Log–log interpolation of a tabulated coefficient (cm²/g). No extrapolation.
pub fn lookup_coefficient(table: &AttenuationTable, energy: f64, kind: CoefficientKind) -> Result<f64> {
    let (lo, hi) = table.energy_range();
    if !(energy >= lo && energy <= hi) {
        return Err(Error::range(format!(
            "energy {energy} MeV outside {} table range [{lo}, {hi}] MeV",
            table.material.name
        )));
    }
    let value = |r: &AttenuationRow| match kind {
        CoefficientKind::Total => r.mu_total,
        CoefficientKind::EnergyAbsorption => r.mu_en,
    };
    let rows = &table.rows;
    let idx = rows.partition_point(|r| r.energy < energy);
    if rows[idx].energy == energy {
        return Ok(value(&rows[idx]));
    }
    let (a, b) = (&rows[idx - 1], &rows[idx]);
    let t = (energy / a.energy).ln() / (b.energy / a.energy).ln();
    Ok((value(a).ln() + t * (value(b) / value(a)).ln()).exp())
}

/// One bin of a measured gamma flux spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaBin {
    pub e_low: f64,
    pub e_high: f64,
    /// Flux integrated over the bin (cm⁻² s⁻¹).
    pub flux: f64,
    pub flux_err: f64,
}

impl GammaBin {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.e_low + self.e_high)
    }

    pub fn width(&self) -> f64 {
        self.e_high - self.e_low
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaSpectrum {
    rows: Vec<GammaBin>,
}

impl GammaSpectrum {
    pub fn new(rows: Vec<GammaBin>) -> Result<Self> {
        let name = "gamma spectrum";
        for (i, b) in rows.iter().enumerate() {
            let row = i + 1;
            if !b.e_low.is_finite() || !b.e_high.is_finite() || b.e_low < 0.0 {
                return Err(Error::validation(name, format!("row {row}: bin edges must be finite and >= 0")));
            }
            if !(b.e_low < b.e_high) {
                return Err(Error::validation(name, format!("row {row}: e_low must be below e_high")));
            }
            if !(b.flux >= 0.0) || !b.flux.is_finite() {
                return Err(Error::validation(name, format!("row {row}: flux must be non-negative")));
            }
            if !(b.flux_err >= 0.0) || !b.flux_err.is_finite() {
                return Err(Error::validation(name, format!("row {row}: flux error must be non-negative")));
            }
            if i > 0 && b.e_low < rows[i - 1].e_high {
                return Err(Error::validation(
                    name,
                    format!("rows {} and {row}: bins overlap or are out of order", row - 1),
                ));
            }
        }
        Ok(GammaSpectrum { rows })
    }

    pub fn bins(&self) -> &[GammaBin] {
        &self.rows
    }

    pub fn total_flux(&self) -> f64 {
        self.rows.iter().map(|b| b.flux).sum()
    }

    /// Copy with every bin flux (and error) multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        GammaSpectrum {
            rows: self
                .rows
                .iter()
                .map(|b| GammaBin {
                    flux: b.flux * k,
                    flux_err: b.flux_err * k,
                    ..*b
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShieldSpec {
    pub material: Material,
    /// Thickness (cm).
    pub thickness: f64,
}

impl ShieldSpec {
    pub fn new(material: Material, thickness: f64) -> Result<Self> {
        if !(thickness >= 0.0) || !thickness.is_finite() {
            return Err(Error::param(format!("shield thickness must be >= 0, got {thickness}")));
        }
        Ok(ShieldSpec { material, thickness })
    }

    pub fn lead(thickness: f64) -> Result<Self> {
        Self::new(Material::lead(), thickness)
    }
}

/// Surface counted as "total incident area" of the cube.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IncidentArea {
    /// All six faces, 6·l².
    #[default]
    AllFaces,
    /// A single face, l².
    OneFace,
}

/// Photon path length through the absorber.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PathLength {
    /// The cube side l.
    #[default]
    Side,
    /// Isotropic mean chord 4V/S = 2l/3.
    MeanChord,
}

/// How the per-bin contributions are turned into a total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Integration {
    /// Sum over spectrum bins at their midpoints.
    #[default]
    BinSum,
    /// Fit straight lines to the power density over 0–0.5, 0.5–1, 1–2 and
    /// 2–3 MeV and integrate the lines over each full range.
    PiecewiseFit,
}

/// Energy ranges used by [`Integration::PiecewiseFit`] (MeV).
pub const FIT_RANGES: [(f64, f64); 4] = [(0.0, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 3.0)];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GammaOptions {
    pub area: IncidentArea,
    pub path: PathLength,
    pub integration: Integration,
}

/// Contribution of one energy interval to the deposited power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contribution {
    pub e_low: f64,
    pub e_high: f64,
    /// W
    pub power: f64,
    /// W
    pub power_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaPower {
    /// Total deposited power (W).
    pub total: f64,
    /// Propagated flux (or fit) uncertainty (W).
    pub error: f64,
    pub contributions: Vec<Contribution>,
}

pub fn shield_transmission(shield: &ShieldSpec, table: &AttenuationTable, energy: f64) -> Result<f64> {
    let mu = table.lookup(energy, CoefficientKind::Total)?;
    Ok((-mu * shield.material.density * shield.thickness).exp())
}

fn path_length(det: &DetectorSpec, path: PathLength) -> f64 {
    match path {
        PathLength::Side => det.side,
        PathLength::MeanChord => 2.0 * det.side / 3.0,
    }
}

/// `1 − exp(−x)` for the attenuation exponent `x`.
fn absorbed(exponent: f64) -> f64 {
    -(-exponent).exp_m1()
}

fn fraction_with(det: &DetectorSpec, table: &AttenuationTable, energy: f64, kind: CoefficientKind, path: PathLength) -> Result<f64> {
    let mu = table.lookup(energy, kind)?;
    Ok(absorbed(mu * det.material.density * path_length(det, path)))
}

/// Fraction of photons reaching the detector that interact in it.
pub fn detector_absorption_fraction(det: &DetectorSpec, table: &AttenuationTable, energy: f64) -> Result<f64> {
    fraction_with(det, table, energy, CoefficientKind::Total, PathLength::Side)
}

/// Fraction of the photon energy deposited in the detector.
pub fn energy_absorbed_fraction(det: &DetectorSpec, table: &AttenuationTable, energy: f64) -> Result<f64> {
    fraction_with(det, table, energy, CoefficientKind::EnergyAbsorption, PathLength::Side)
}

/// Deposited gamma power with default options (six faces, path = side, bin sum).
pub fn gamma_power(
    det: &DetectorSpec,
    shield: &ShieldSpec,
    spectrum: &GammaSpectrum,
    shield_table: &AttenuationTable,
    det_table: &AttenuationTable,
) -> Result<GammaPower> {
    gamma_power_with(det, shield, spectrum, shield_table, det_table, &GammaOptions::default())
}

pub fn gamma_power_with(
    det: &DetectorSpec,
    shield: &ShieldSpec,
    spectrum: &GammaSpectrum,
    shield_table: &AttenuationTable,
    det_table: &AttenuationTable,
    options: &GammaOptions,
) -> Result<GammaPower> {
    if spectrum.bins().is_empty() {
        return Err(Error::domain("empty gamma spectrum"));
    }
    let area = match options.area {
        IncidentArea::AllFaces => 6.0 * det.face_area(),
        IncidentArea::OneFace => det.face_area(),
    };
    let mut per_bin = Vec::with_capacity(spectrum.bins().len());
    for (i, bin) in spectrum.bins().iter().enumerate() {
        let e = bin.midpoint();
        for table in [shield_table, det_table] {
            if !table.covers(e) {
                let (lo, hi) = table.energy_range();
                return Err(Error::range(format!(
                    "spectrum bin {} [{}, {}] MeV (midpoint {e}) not covered by the {} table [{lo}, {hi}] MeV",
                    i + 1,
                    bin.e_low,
                    bin.e_high,
                    table.material().name
                )));
            }
        }
        let s = shield_transmission(shield, shield_table, e)?;
        let p = fraction_with(det, det_table, e, CoefficientKind::Total, options.path)?;
        let f = fraction_with(det, det_table, e, CoefficientKind::EnergyAbsorption, options.path)?;
        let per_flux = e * area * s * p * f * MEV_TO_J;
        per_bin.push(Contribution {
            e_low: bin.e_low,
            e_high: bin.e_high,
            power: per_flux * bin.flux,
            power_err: per_flux * bin.flux_err,
        });
    }
    let contributions = match options.integration {
        Integration::BinSum => per_bin,
        Integration::PiecewiseFit => piecewise_fit(&per_bin)?,
    };
    let total = contributions.iter().map(|c| c.power).sum();
    let error = contributions.iter().map(|c| c.power_err * c.power_err).sum::<f64>().sqrt();
    Ok(GammaPower {
        total,
        error,
        contributions,
    })
}

/// Integral of `max(0, a + b·E)` over `[lo, hi]`.
fn positive_line_integral(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let prim = |e: f64| a * e + 0.5 * b * e * e;
    let (mut lo, mut hi) = (lo, hi);
    if b != 0.0 {
        let root = -a / b;
        if root > lo && root < hi {
            if b > 0.0 {
                lo = root;
            } else {
                hi = root;
            }
        }
    }
    if a + b * 0.5 * (lo + hi) <= 0.0 {
        return 0.0;
    }
    prim(hi) - prim(lo)
}

fn piecewise_fit(per_bin: &[Contribution]) -> Result<Vec<Contribution>> {
    let mut out = Vec::with_capacity(FIT_RANGES.len());
    for &(lo, hi) in FIT_RANGES.iter() {
        let inside: Vec<&Contribution> = per_bin
            .iter()
            .filter(|c| {
                let m = 0.5 * (c.e_low + c.e_high);
                m >= lo && m < hi
            })
            .collect();
        if inside.is_empty() {
            continue;
        }
        if inside.len() < 2 {
            // too few bins for a line: keep the direct sum
            let c = inside[0];
            out.push(Contribution { e_low: lo, e_high: hi, ..*c });
            continue;
        }
        let any_err = inside.iter().any(|c| c.power_err > 0.0);
        let pts: Vec<(f64, f64, f64)> = inside
            .iter()
            .map(|c| {
                let w = c.e_high - c.e_low;
                let err = if any_err { (c.power_err / w).max(f64::MIN_POSITIVE) } else { 0.0 };
                (0.5 * (c.e_low + c.e_high), c.power / w, err)
            })
            .collect();
        let fit = weighted_linear_fit(&pts)?;
        let (a, b) = (fit.intercept, fit.slope);
        let power = positive_line_integral(a, b, lo, hi);
        let l = hi - lo;
        let m = 0.5 * (hi * hi - lo * lo);
        let var = l * l * fit.intercept_err.powi(2) + m * m * fit.slope_err.powi(2) + 2.0 * l * m * fit.covariance;
        out.push(Contribution {
            e_low: lo,
            e_high: hi,
            power,
            power_err: var.max(0.0).sqrt(),
        });
    }
    Ok(out)
}

/// One row of a shield-thickness scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    /// cm
    pub thickness: f64,
    /// W
    pub power: f64,
    /// W
    pub power_err: f64,
}

/// Deposited power for each lead-like shield thickness in `thicknesses`.
pub fn shield_scan(
    det: &DetectorSpec,
    spectrum: &GammaSpectrum,
    shield_table: &AttenuationTable,
    det_table: &AttenuationTable,
    thicknesses: &[f64],
    options: &GammaOptions,
) -> Result<Vec<ScanRow>> {
    if thicknesses.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::param("shield thicknesses must be finite and non-negative"));
    }
    if thicknesses.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("shield thicknesses must be sorted in increasing order"));
    }
    thicknesses
        .par_iter()
        .map(|&t| {
            let shield = ShieldSpec::new(shield_table.material().clone(), t)?;
            let p = gamma_power_with(det, &shield, spectrum, shield_table, det_table, options)?;
            Ok(ScanRow {
                thickness: t,
                power: p.total,
                power_err: p.error,
            })
        })
        .collect()
}
