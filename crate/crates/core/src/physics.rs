//! CSL heating rate and the material / detector descriptions shared by the
//! radiation and thermal models.

use crate::constants::{EXCITATION_PER_Z, HBAR, NUCLEON_MASS};
use crate::error::{Error, Result};

/// Collapse-model parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CslParams {
    /// Collapse rate λ (s⁻¹).
    pub lambda: f64,
    /// Noise correlation length r_c (m).
    pub r_c: f64,
}

impl CslParams {
    pub fn new(lambda: f64, r_c: f64) -> Result<Self> {
        let params = CslParams { lambda, r_c };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::domain(format!(
                "collapse rate must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !self.r_c.is_finite() || self.r_c <= 0.0 {
            return Err(Error::domain(format!(
                "correlation length must be finite and positive, got {}",
                self.r_c
            )));
        }
        Ok(())
    }
}

/// Heating power per unit λ per unit mass at correlation length `r_c`
/// (W·s/kg), i.e. `(3/4) ħ² / (r_c² m_N²)`.
pub(crate) fn csl_coefficient(r_c: f64) -> f64 {
    0.75 * HBAR * HBAR / (NUCLEON_MASS * NUCLEON_MASS) / (r_c * r_c)
}

/// CSL heating power (W) of a body of `mass` kg.
pub fn csl_power(params: &CslParams, mass: f64) -> Result<f64> {
    params.validate()?;
    if !mass.is_finite() || mass < 0.0 {
        return Err(Error::domain(format!("mass must be finite and non-negative, got {mass}")));
    }
    Ok(csl_coefficient(params.r_c) * params.lambda * mass)
}

/// CSL heating rate per unit mass (W/kg).
pub fn csl_heating_per_mass(params: &CslParams) -> Result<f64> {
    csl_power(params, 1.0)
}

/// Homogeneous absorber or overburden material.
#[derive(Clone, Debug, PartialEq)]
pub struct Material {
    pub name: String,
    /// Atomic number (effective, per atom, for compounds).
    pub z: f64,
    /// Atomic mass (g/mol).
    pub a: f64,
    /// Density (g/cm³).
    pub density: f64,
    /// Mean excitation potential I (MeV).
    pub mean_excitation: f64,
}

impl Material {
    /// Builds a material with `I = 10 eV × Z`.
    pub fn new(name: impl Into<String>, z: f64, a: f64, density: f64) -> Result<Self> {
        Self::with_excitation(name, z, a, density, EXCITATION_PER_Z * z)
    }

    pub fn with_excitation(
        name: impl Into<String>,
        z: f64,
        a: f64,
        density: f64,
        mean_excitation: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !(z >= 1.0) || !z.is_finite() {
            return Err(Error::param(format!("{name}: Z must be >= 1, got {z}")));
        }
        if !(a >= z) || !a.is_finite() {
            return Err(Error::param(format!("{name}: A must be >= Z, got A={a}, Z={z}")));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::param(format!("{name}: density must be positive, got {density}")));
        }
        if !(mean_excitation > 0.0) || !mean_excitation.is_finite() {
            return Err(Error::param(format!(
                "{name}: mean excitation must be positive, got {mean_excitation}"
            )));
        }
        Ok(Material {
            name,
            z,
            a,
            density,
            mean_excitation,
        })
    }

    /// Germanium at the reference density 5.67 g/cm³.
    pub fn germanium() -> Self {
        Self::new("Ge", 32.0, 72.63, 5.67).expect("valid preset")
    }

    pub fn lead() -> Self {
        Self::new("Pb", 82.0, 207.2, 11.35).expect("valid preset")
    }

    /// Standard rock: A = 22, Z = 11, ρ = 2.65 g/cm³.
    pub fn standard_rock() -> Self {
        Self::new("standard_rock", 11.0, 22.0, 2.65).expect("valid preset")
    }

    /// TeO₂ as a per-atom average (Z = 68/3, A = 159.6/3), density matching a
    /// 750 g cube of 5 cm side.
    pub fn tellurium_dioxide() -> Self {
        Self::new("TeO2", 68.0 / 3.0, 159.6 / 3.0, 6.0).expect("valid preset")
    }

    /// Looks up a preset by its short name (`Ge`, `Pb`, `TeO2`, `standard_rock`).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "Ge" => Some(Self::germanium()),
            "Pb" => Some(Self::lead()),
            "TeO2" => Some(Self::tellurium_dioxide()),
            "standard_rock" => Some(Self::standard_rock()),
            _ => None,
        }
    }

    /// Z/A (mol/g).
    pub fn z_over_a(&self) -> f64 {
        self.z / self.a
    }
}

/// Cubic absorber.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorSpec {
    pub material: Material,
    /// Edge length l (cm).
    pub side: f64,
    /// Specific heat (J/(kg·K)); only used by the thermal model.
    pub specific_heat: Option<f64>,
}

impl DetectorSpec {
    pub fn cube(material: Material, side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::param(format!("detector side must be positive, got {side}")));
        }
        Ok(DetectorSpec {
            material,
            side,
            specific_heat: None,
        })
    }

    /// 10 cm germanium cube, the reference absorber of the background study.
    pub fn reference_ge() -> Self {
        Self::cube(Material::germanium(), 10.0).expect("valid preset")
    }

    /// CUORE-like TeO₂ crystal: 5 cm cube, 750 g.
    pub fn cuore_crystal() -> Self {
        Self::cube(Material::tellurium_dioxide(), 5.0).expect("valid preset")
    }

    pub fn with_specific_heat(mut self, specific_heat: f64) -> Self {
        self.specific_heat = Some(specific_heat);
        self
    }

    /// Volume (cm³).
    pub fn volume_cm3(&self) -> f64 {
        self.side * self.side * self.side
    }

    /// Mass (g).
    pub fn mass_g(&self) -> f64 {
        self.material.density * self.volume_cm3()
    }

    /// Mass (kg).
    pub fn mass_kg(&self) -> f64 {
        self.mass_g() * 1e-3
    }

    /// Area of one face (cm²).
    pub fn face_area(&self) -> f64 {
        self.side * self.side
    }

    /// Heat capacity (J/K) if a specific heat is set.
    pub fn heat_capacity(&self) -> Option<f64> {
        self.specific_heat.map(|c| c * self.mass_kg())
    }
}
