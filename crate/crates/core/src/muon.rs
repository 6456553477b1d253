//! Cosmic-muon background: Bethe-Bloch stopping power, angular flux
//! integrals, event rates and deposited power as a function of depth.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::chord::{chord_monte_carlo, ChordEstimate};
use crate::constants::{Constants, MEV_TO_J};
use crate::error::{Error, Result};
use crate::physics::{DetectorSpec, Material};

/// Sea-level vertical muon intensity used for the surface cross-check (cm⁻² s⁻¹ sr⁻¹).
pub const SURFACE_INTENSITY: f64 = 1.14e-2;
/// Mean muon energy at the surface (GeV).
pub const SURFACE_MEAN_ENERGY_GEV: f64 = 4.0;
/// Relative uncertainty assigned to every mean-energy parameter.
pub const MEAN_ENERGY_PARAM_ERROR: f64 = 0.04;

/// Kinematic state of a muon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuonState {
    /// Kinetic energy T_μ (MeV).
    pub kinetic_energy: f64,
    /// v/c
    pub beta: f64,
    /// p_μc (MeV).
    pub momentum: f64,
    /// Muon rest energy this state was built with (MeV).
    pub rest_energy: f64,
}

impl MuonState {
    pub fn from_kinetic(kinetic_energy: f64, consts: &Constants) -> Result<Self> {
        if !(kinetic_energy > 0.0) || !kinetic_energy.is_finite() {
            return Err(Error::param(format!(
                "muon kinetic energy must be positive and finite, got {kinetic_energy} MeV"
            )));
        }
        let m = consts.muon_rest_energy;
        let momentum = (kinetic_energy * (kinetic_energy + 2.0 * m)).sqrt();
        let beta = momentum / (kinetic_energy + m);
        Ok(MuonState {
            kinetic_energy,
            beta,
            momentum,
            rest_energy: m,
        })
    }

    /// Total energy (MeV).
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy + self.rest_energy
    }

    /// βγ, computed from the momentum to stay accurate when β → 1.
    pub fn beta_gamma(&self) -> f64 {
        self.momentum / self.rest_energy
    }
}

/// Maximum energy transferable to a free electron in one collision (MeV).
pub fn max_transferable_energy(state: &MuonState, consts: &Constants) -> f64 {
    let me = consts.electron_rest_energy;
    let mm = state.rest_energy;
    let p2 = state.momentum * state.momentum;
    2.0 * me * p2 / (me * me + mm * mm + 2.0 * me * (p2 + mm * mm).sqrt())
}

/// Mean ionization loss dE/d(ρx) (MeV cm²/g), without density or shell
/// corrections.
pub fn stopping_power(state: &MuonState, mat: &Material, consts: &Constants) -> Result<f64> {
    let me = consts.electron_rest_energy;
    let c = PI * consts.electron_radius.powi(2) * consts.avogadro * mat.z_over_a();
    let beta2 = state.beta * state.beta;
    let e_max = max_transferable_energy(state, consts);
    // β²/(1−β²) = (βγ)²
    let arg = 2.0 * me * e_max * state.beta_gamma().powi(2) / (mat.mean_excitation * mat.mean_excitation);
    if !(arg > 1.0) {
        return Err(Error::domain(format!(
            "Bethe-Bloch logarithm argument {arg:.3e} <= 1 at T = {} MeV in {}: the formula needs a \
             relativistic muon (T of a few hundred MeV or more)",
            state.kinetic_energy, mat.name
        )));
    }
    let value = 2.0 * c * me / beta2 * (arg.ln() - 2.0 * beta2);
    if !(value > 0.0) {
        return Err(Error::domain(format!(
            "non-positive stopping power at T = {} MeV in {}",
            state.kinetic_energy, mat.name
        )));
    }
    Ok(value)
}

/// Flux through a horizontal unit area, J₁ = (π/2) I_v (cm⁻² s⁻¹).
pub fn horizontal_flux(intensity: f64) -> f64 {
    FRAC_PI_2 * intensity
}

/// Flux through a unit area tilted by `theta` (rad) from horizontal.
pub fn tilted_flux(intensity: f64, theta: f64) -> f64 {
    FRAC_PI_2 * intensity * (theta.cos() + FRAC_PI_4 * theta.sin())
}

/// Flux through a vertical unit area, J₃ = (π²/8) I_v.
pub fn vertical_flux(intensity: f64) -> f64 {
    FRAC_PI_2 * intensity * FRAC_PI_4
}

/// Which cube faces count as "horizontal" and "vertical" area in the event rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaceAccounting {
    /// One horizontal and one vertical cross-section, l² each.
    #[default]
    Projected,
    /// Top face horizontal (l²), four lateral faces vertical (4l²).
    TopAndSides,
    /// Top and bottom horizontal (2l²), four lateral faces vertical (4l²).
    AllFaces,
}

impl FaceAccounting {
    /// (horizontal, vertical) area in units of l².
    pub fn face_counts(&self) -> (f64, f64) {
        match self {
            FaceAccounting::Projected => (1.0, 1.0),
            FaceAccounting::TopAndSides => (1.0, 4.0),
            FaceAccounting::AllFaces => (2.0, 4.0),
        }
    }
}

impl std::str::FromStr for FaceAccounting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "projected" => Ok(FaceAccounting::Projected),
            "top+sides" => Ok(FaceAccounting::TopAndSides),
            "all" => Ok(FaceAccounting::AllFaces),
            other => Err(format!("unknown face convention `{other}` (expected projected|top+sides|all)")),
        }
    }
}

/// Muon events per second through the cube, with the error from `intensity_err`.
pub fn event_rate(det: &DetectorSpec, intensity: f64, intensity_err: f64, faces: FaceAccounting) -> (f64, f64) {
    let (h, v) = faces.face_counts();
    let a = det.face_area();
    let per_intensity = horizontal_flux(1.0) * h * a + vertical_flux(1.0) * v * a;
    (per_intensity * intensity, per_intensity * intensity_err)
}

/// Parameters of the mean underground muon energy `ε(1 − e^(−b d))/(γ − 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanEnergyParams {
    /// (km.w.e.)⁻¹
    pub b: f64,
    pub gamma_mu: f64,
    /// GeV
    pub epsilon_mu: f64,
    pub source_label: String,
}

impl MeanEnergyParams {
    pub fn new(b: f64, gamma_mu: f64, epsilon_mu: f64, source_label: impl Into<String>) -> Result<Self> {
        if !(b > 0.0) || !(gamma_mu > 2.0) || !(epsilon_mu > 0.0) {
            return Err(Error::param(format!(
                "mean-energy parameters need b > 0, gamma > 2, epsilon > 0 (got {b}, {gamma_mu}, {epsilon_mu})"
            )));
        }
        Ok(MeanEnergyParams {
            b,
            gamma_mu,
            epsilon_mu,
            source_label: source_label.into(),
        })
    }

    /// b = 0.383 /km.w.e., γ = 3.7, ε = 618 GeV.
    pub fn lipari_stanev() -> Self {
        Self::new(0.383, 3.7, 618.0, "lipari_stanev").expect("valid preset")
    }

    /// b = 0.4 /km.w.e., γ = 3.77, ε = 693 GeV.
    pub fn groom() -> Self {
        Self::new(0.4, 3.77, 693.0, "groom").expect("valid preset")
    }

    pub fn by_label(label: &str) -> Option<Self> {
        match label {
            "lipari_stanev" => Some(Self::lipari_stanev()),
            "groom" => Some(Self::groom()),
            _ => None,
        }
    }

    /// Asymptotic mean energy at infinite depth (GeV).
    pub fn asymptote(&self) -> f64 {
        self.epsilon_mu / (self.gamma_mu - 2.0)
    }
}

impl Default for MeanEnergyParams {
    fn default() -> Self {
        Self::lipari_stanev()
    }
}

/// Mean muon energy (GeV) at `depth` km.w.e.
pub fn mean_muon_energy(depth: f64, params: &MeanEnergyParams) -> f64 {
    -params.epsilon_mu * (-params.b * depth).exp_m1() / (params.gamma_mu - 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthIntensityRow {
    /// km.w.e.
    pub depth: f64,
    /// Vertical intensity I_v (cm⁻² s⁻¹ sr⁻¹).
    pub intensity: f64,
    pub intensity_err: f64,
}

/// Vertical muon intensity against depth for one site.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthIntensityTable {
    site: String,
    rows: Vec<DepthIntensityRow>,
}

impl DepthIntensityTable {
    pub fn new(site: impl Into<String>, rows: Vec<DepthIntensityRow>) -> Result<Self> {
        let site = site.into();
        let name = format!("depth-intensity table ({site})");
        if rows.is_empty() {
            return Err(Error::validation(&name, "table has no rows"));
        }
        for (i, r) in rows.iter().enumerate() {
            let row = i + 1;
            if !r.depth.is_finite() || r.depth < 0.0 {
                return Err(Error::validation(&name, format!("row {row}: depth must be finite and >= 0")));
            }
            if !(r.intensity > 0.0) || !r.intensity.is_finite() {
                return Err(Error::validation(&name, format!("row {row}: intensity must be positive")));
            }
            if !(r.intensity_err >= 0.0) || !r.intensity_err.is_finite() {
                return Err(Error::validation(&name, format!("row {row}: intensity error must be >= 0")));
            }
            if i > 0 {
                let prev = &rows[i - 1];
                if r.depth <= prev.depth {
                    return Err(Error::validation(
                        &name,
                        format!("rows {} and {row}: depths must be strictly increasing", row - 1),
                    ));
                }
                if r.intensity >= prev.intensity {
                    return Err(Error::validation(
                        &name,
                        format!("rows {} and {row}: intensity must strictly decrease with depth", row - 1),
                    ));
                }
            }
        }
        Ok(DepthIntensityTable { site, rows })
    }

    pub fn site(&self) -> &str {
        &self.site
    }

    pub fn rows(&self) -> &[DepthIntensityRow] {
        &self.rows
    }

    pub fn depth_range(&self) -> (f64, f64) {
        (self.rows[0].depth, self.rows[self.rows.len() - 1].depth)
    }

    /// Intensity and its error at `depth`, interpolated linearly in
    /// (depth, log₁₀ I_v); the relative error is interpolated linearly.
    pub fn intensity_at(&self, depth: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.depth_range();
        if !(depth >= lo && depth <= hi) {
            return Err(Error::range(format!(
                "depth {depth} km.w.e. outside the {} table range [{lo}, {hi}]",
                self.site
            )));
        }
        let idx = self.rows.partition_point(|r| r.depth < depth);
        let b = &self.rows[idx];
        if b.depth == depth {
            return Ok((b.intensity, b.intensity_err));
        }
        let a = &self.rows[idx - 1];
        let t = (depth - a.depth) / (b.depth - a.depth);
        let intensity = (a.intensity.ln() + t * (b.intensity.ln() - a.intensity.ln())).exp();
        let rel = a.intensity_err / a.intensity + t * (b.intensity_err / b.intensity - a.intensity_err / a.intensity);
        Ok((intensity, rel * intensity))
    }

    /// Copy with every intensity and error multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.site.clone(),
            self.rows
                .iter()
                .map(|r| DepthIntensityRow {
                    intensity: r.intensity * k,
                    intensity_err: r.intensity_err * k,
                    ..*r
                })
                .collect(),
        )
    }
}

/// Mean muon path length through the absorber.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MuonPath {
    /// The cube side.
    #[default]
    Side,
    /// Monte Carlo estimate of the cos²θ-weighted chord; replaces both the
    /// path length and the face-based event rate.
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MuonOptions {
    pub faces: FaceAccounting,
    pub path: MuonPath,
    pub constants: crate::constants::ConstantProfile,
}

/// Deposited muon power and the quantities it is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuonPower {
    /// km.w.e. (0 for the surface evaluation)
    pub depth: f64,
    pub intensity: f64,
    pub intensity_err: f64,
    /// Mean muon kinetic energy used (GeV).
    pub mean_energy: f64,
    /// MeV cm²/g
    pub stopping_power: f64,
    /// s⁻¹
    pub event_rate: f64,
    pub event_rate_err: f64,
    /// cm
    pub path_length: f64,
    /// W
    pub power: f64,
    pub power_err: f64,
}

fn stopping_at_gev(det: &DetectorSpec, energy_gev: f64, consts: &Constants) -> Result<f64> {
    let state = MuonState::from_kinetic(energy_gev * 1e3, consts)?;
    stopping_power(&state, &det.material, consts)
}

fn rate_and_path(det: &DetectorSpec, intensity: f64, intensity_err: f64, options: &MuonOptions) -> Result<(f64, f64, f64)> {
    match options.path {
        MuonPath::Side => {
            let (r, e) = event_rate(det, intensity, intensity_err, options.faces);
            Ok((r, e, det.side))
        }
        MuonPath::MonteCarlo { samples, seed } => {
            let est: ChordEstimate = chord_monte_carlo(det.side, samples, seed)?;
            Ok((est.rate_per_intensity * intensity, est.rate_per_intensity * intensity_err, est.mean_chord))
        }
    }
}

/// Deposited power for a given intensity and mean muon energy, no parameter error.
pub fn power_from_intensity(
    det: &DetectorSpec,
    intensity: f64,
    intensity_err: f64,
    mean_energy_gev: f64,
    options: &MuonOptions,
) -> Result<MuonPower> {
    let consts = Constants::for_profile(options.constants);
    let s = stopping_at_gev(det, mean_energy_gev, consts)?;
    let (rate, rate_err, path) = rate_and_path(det, intensity, intensity_err, options)?;
    let per_event = s * det.material.density * path * MEV_TO_J;
    Ok(MuonPower {
        depth: 0.0,
        intensity,
        intensity_err,
        mean_energy: mean_energy_gev,
        stopping_power: s,
        event_rate: rate,
        event_rate_err: rate_err,
        path_length: path,
        power: rate * per_event,
        power_err: rate_err * per_event,
    })
}

/// Deposited muon power at `depth` km.w.e., default options.
pub fn muon_power(
    det: &DetectorSpec,
    depth: f64,
    table: &DepthIntensityTable,
    params: &MeanEnergyParams,
) -> Result<MuonPower> {
    muon_power_with(det, depth, table, params, &MuonOptions::default())
}

/// Deposited muon power at `depth`.
///
/// The error combines, in quadrature on log₁₀P, the intensity error and a
/// ±4% variation of each mean-energy parameter.
pub fn muon_power_with(
    det: &DetectorSpec,
    depth: f64,
    table: &DepthIntensityTable,
    params: &MeanEnergyParams,
    options: &MuonOptions,
) -> Result<MuonPower> {
    let (intensity, intensity_err) = table.intensity_at(depth)?;
    let energy = mean_muon_energy(depth, params);
    let mut out = power_from_intensity(det, intensity, intensity_err, energy, options)?;
    out.depth = depth;

    let consts = Constants::for_profile(options.constants);
    let log_s = |p: &MeanEnergyParams| -> Result<f64> {
        Ok(stopping_at_gev(det, mean_muon_energy(depth, p), consts)?.log10())
    };
    let mut var_log = if intensity > 0.0 {
        (intensity_err / intensity / std::f64::consts::LN_10).powi(2)
    } else {
        0.0
    };
    let shifts: [fn(&mut MeanEnergyParams, f64); 3] = [
        |p, k| p.b *= k,
        |p, k| p.gamma_mu *= k,
        |p, k| p.epsilon_mu *= k,
    ];
    for shift in shifts {
        let mut up = params.clone();
        shift(&mut up, 1.0 + MEAN_ENERGY_PARAM_ERROR);
        let mut down = params.clone();
        shift(&mut down, 1.0 - MEAN_ENERGY_PARAM_ERROR);
        let delta = 0.5 * (log_s(&up)? - log_s(&down)?);
        var_log += delta * delta;
    }
    out.power_err = out.power * std::f64::consts::LN_10 * var_log.sqrt();
    Ok(out)
}

/// Muon power at sea level (I_v = 1.14×10⁻² cm⁻² s⁻¹ sr⁻¹, ⟨E⟩ = 4 GeV).
pub fn surface_muon_power(det: &DetectorSpec, options: &MuonOptions) -> Result<MuonPower> {
    power_from_intensity(det, SURFACE_INTENSITY, 0.0, SURFACE_MEAN_ENERGY_GEV, options)
}
