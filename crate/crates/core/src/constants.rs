//! Physical constants.
//!
//! Radiation quantities are carried in MeV (energies) and cm / g (lengths,
//! areal densities); CSL and thermal quantities are SI. [`MEV_TO_J`] is the
//! only bridge between the two systems.

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Nucleon mass, fixed to the proton mass (kg).
pub const NUCLEON_MASS: f64 = 1.672_621_923_69e-27;

/// Avogadro constant (mol⁻¹).
pub const AVOGADRO: f64 = 6.022_140_76e23;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Joules per MeV.
pub const MEV_TO_J: f64 = 1.602_176_634e-13;

/// Mean excitation potential per unit atomic number (MeV), the `I = 10 eV × Z` rule.
pub const EXCITATION_PER_Z: f64 = 10.0e-6;

/// Reference CSL correlation length (m).
pub const RC_REFERENCE: f64 = 1.0e-7;

/// Which set of particle rest energies to use in the stopping-power chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConstantProfile {
    /// Rounded values used in the original background estimate (m_μc² = 106 MeV).
    #[default]
    Paper,
    /// CODATA 2018 values.
    Codata,
}

impl std::str::FromStr for ConstantProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(ConstantProfile::Paper),
            "codata" => Ok(ConstantProfile::Codata),
            other => Err(format!("unknown constant profile `{other}` (expected paper|codata)")),
        }
    }
}

/// Particle-physics constants entering the Bethe-Bloch chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    /// Electron rest energy (MeV).
    pub electron_rest_energy: f64,
    /// Muon rest energy (MeV).
    pub muon_rest_energy: f64,
    /// Classical electron radius (cm).
    pub electron_radius: f64,
    pub avogadro: f64,
}

impl Constants {
    pub const PAPER: Constants = Constants {
        electron_rest_energy: 0.511,
        muon_rest_energy: 106.0,
        electron_radius: 2.82e-13,
        avogadro: AVOGADRO,
    };

    pub const CODATA: Constants = Constants {
        electron_rest_energy: 0.510_998_950,
        muon_rest_energy: 105.658_375_5,
        electron_radius: 2.817_940_326_2e-13,
        avogadro: AVOGADRO,
    };

    pub fn for_profile(profile: ConstantProfile) -> &'static Constants {
        match profile {
            ConstantProfile::Paper => &Self::PAPER,
            ConstantProfile::Codata => &Self::CODATA,
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::PAPER
    }
}
