//! Sectioned `key = value` configuration for the verification suites.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SuiteId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    E9,
}

impl SuiteId {
    pub const ALL: [SuiteId; 9] =
        [SuiteId::E1, SuiteId::E2, SuiteId::E3, SuiteId::E4, SuiteId::E5, SuiteId::E6, SuiteId::E7, SuiteId::E8, SuiteId::E9];

    pub fn title(self) -> &'static str {
        match self {
            SuiteId::E1 => "convolution identity of mass densities",
            SuiteId::E2 => "penalized relative partition asymptotics",
            SuiteId::E3 => "free canonical occupations versus the conditioned measure",
            SuiteId::E4 => "canonical recursion, sector identity, and relaxation",
            SuiteId::E5 => "interacting relative free energy, quantum versus classical",
            SuiteId::E6 => "correlation inequalities and mass-dependence scaling",
            SuiteId::E7 => "increment bijection and particle-number shift bound",
            SuiteId::E8 => "canonical versus grand-canonical occupation domination",
            SuiteId::E9 => "high-frequency L4 decay and exponential integrability",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?} (expected E1..E9)")))
    }
}

/// Spectral basis request. Omitting `s` selects the Dirichlet box; a basis
/// section in a file replaces the suite default as a whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub s: Option<f64>,
    pub half_width: f64,
    pub grid_points: usize,
    /// Finite-difference order, 2 or 4.
    pub scheme: i32,
    pub modes: usize,
}

impl BasisConfig {
    pub fn smooth(s: f64, modes: usize) -> Self {
        Self { s: Some(s), half_width: 3.0, grid_points: 1024, scheme: 4, modes }
    }

    pub fn dirichlet_box(modes: usize, grid_points: usize) -> Self {
        Self { s: None, half_width: 1.0, grid_points, scheme: 4, modes }
    }

    pub fn s_exponent(&self) -> f64 {
        self.s.unwrap_or(f64::INFINITY)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let scheme = u8::try_from(self.scheme).ok().and_then(Scheme::from_code)
            .ok_or_else(|| Error::Config(format!("scheme must be 2 or 4, got {}", self.scheme)))?;
        Ok(GridSpec::new(self.half_width, self.grid_points, scheme))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    pub seed: u64,
    pub strict: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        Self { seed: 20_240_601, strict: false, output_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E1Config {
    pub basis: BasisConfig,
    pub eta_spacing: f64,
    pub eta_points: usize,
    /// Numbers of low modes at which the spectrum is split.
    pub split_modes: Vec<usize>,
    pub delta: f64,
}

impl Default for E1Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::dirichlet_box(40, 2048),
            eta_spacing: 1e-4,
            eta_points: 45_000,
            split_modes: (1..=10).collect(),
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E2Config {
    pub basis: BasisConfig,
    pub eta_spacing: f64,
    pub eta_points: usize,
    pub m: f64,
    /// Penalty widths, decreasing.
    pub eps: Vec<f64>,
}

impl Default for E2Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::dirichlet_box(120, 2048),
            eta_spacing: 1e-3,
            eta_points: 4500,
            m: 1.0,
            eps: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E3Config {
    pub basis: BasisConfig,
    pub m: f64,
    pub temperatures: Vec<f64>,
    pub n_samples: usize,
    /// Modes (1-based) whose gaps are checked.
    pub checked_modes: Vec<usize>,
}

impl Default for E3Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 8),
            m: 1.0,
            temperatures: vec![8.0, 16.0, 32.0, 64.0],
            n_samples: 200_000,
            checked_modes: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E4Config {
    pub basis: BasisConfig,
    pub max_enumeration_modes: usize,
    pub max_enumeration_particles: usize,
    pub enumeration_temperatures: Vec<f64>,
    pub random_splits: usize,
    pub max_split_particles: usize,
    pub m: f64,
    /// Relaxation sweep with `ε = T^{−a}`.
    pub relax_temperatures: Vec<f64>,
    pub relax_exponent: f64,
}

impl Default for E4Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 8),
            max_enumeration_modes: 4,
            max_enumeration_particles: 6,
            enumeration_temperatures: vec![0.5, 1.0, 2.0],
            random_splits: 20,
            max_split_particles: 60,
            m: 1.0,
            relax_temperatures: vec![8.0, 16.0, 32.0, 64.0],
            relax_exponent: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// `gaussian_bump`, `step_well`, or `delta_approx`.
    pub kind: String,
    pub width: f64,
    pub depth: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { kind: "gaussian_bump".into(), width: 0.5, depth: 1.0 }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Result<crate::measures::InteractionPotential> {
        use crate::measures::InteractionPotential as P;
        match self.kind.as_str() {
            "gaussian_bump" => P::gaussian_bump(self.width, self.depth),
            "step_well" => P::step_well(self.width, self.depth),
            "delta_approx" => P::delta_approx(self.width),
            "zero" => Ok(P::zero()),
            other => Err(Error::Config(format!("unknown potential kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E5Config {
    pub basis: BasisConfig,
    pub modes: usize,
    pub m: f64,
    pub couplings: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub n_samples: usize,
    pub potential: PotentialConfig,
}

impl Default for E5Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 8),
            modes: 3,
            m: 1.0,
            couplings: vec![1.0, -0.5],
            temperatures: vec![4.0, 8.0, 16.0],
            n_samples: 200_000,
            potential: PotentialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E6Config {
    pub basis: BasisConfig,
    /// Quantum sweep axes; the grid is their product.
    pub quantum_dims: Vec<usize>,
    pub quantum_particles: Vec<usize>,
    pub quantum_temperatures: Vec<f64>,
    pub classical_runs: usize,
    pub classical_samples: usize,
    /// Mass-dependence sweep.
    pub dims: Vec<usize>,
    pub m1: f64,
    pub m2: f64,
    pub g: f64,
    pub gap_samples: usize,
    pub grid_stride: usize,
    pub potential: PotentialConfig,
}

impl Default for E6Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 32),
            quantum_dims: vec![2, 3, 4, 6, 8],
            quantum_particles: vec![1, 2, 5, 10, 20, 40, 80, 160],
            quantum_temperatures: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            classical_runs: 50,
            classical_samples: 20_000,
            dims: vec![4, 8, 16, 32],
            m1: 1.0,
            m2: 1.2,
            g: 1.0,
            gap_samples: 20_000,
            grid_stride: 4,
            potential: PotentialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E7Config {
    pub basis: BasisConfig,
    pub max_support: usize,
    pub max_particles: usize,
    pub shift_modes: usize,
    pub shift_max_particles: usize,
    pub shift_temperatures: Vec<f64>,
}

impl Default for E7Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 8),
            max_support: 4,
            max_particles: 5,
            shift_modes: 8,
            shift_max_particles: 40,
            shift_temperatures: vec![1.0, 4.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E8Config {
    pub basis: BasisConfig,
    pub dims: Vec<usize>,
    pub particles: Vec<usize>,
    pub temperatures: Vec<f64>,
}

impl Default for E8Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 32),
            dims: vec![2, 4, 8, 16, 32],
            particles: vec![1, 4, 16, 64],
            temperatures: vec![1.0, 2.0, 8.0, 32.0, 128.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct E9Config {
    pub basis: BasisConfig,
    /// Cutoffs compared for exponential integrability; the last one is the resolved basis.
    pub cutoffs: Vec<usize>,
    /// Mode counts below the projection `P^⊥`.
    pub cut_modes: Vec<usize>,
    pub radius: f64,
    pub m: f64,
    pub n_samples: usize,
    pub grid_stride: usize,
}

impl Default for E9Config {
    fn default() -> Self {
        Self {
            basis: BasisConfig::smooth(8.0, 64),
            cutoffs: vec![32, 64],
            cut_modes: vec![2, 4, 8, 16, 32],
            radius: 0.35,
            m: 1.0,
            n_samples: 20_000,
            grid_stride: 4,
        }
    }
}

/// Full configuration. Every section is optional in the file and falls back
/// to the desk-scale defaults above.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub general: GeneralConfig,
    #[serde(rename = "E1")]
    pub e1: E1Config,
    #[serde(rename = "E2")]
    pub e2: E2Config,
    #[serde(rename = "E3")]
    pub e3: E3Config,
    #[serde(rename = "E4")]
    pub e4: E4Config,
    #[serde(rename = "E5")]
    pub e5: E5Config,
    #[serde(rename = "E6")]
    pub e6: E6Config,
    #[serde(rename = "E7")]
    pub e7: E7Config,
    #[serde(rename = "E8")]
    pub e8: E8Config,
    #[serde(rename = "E9")]
    pub e9: E9Config,
}

fn sorted_nonempty<T: PartialOrd + fmt::Debug>(name: &str, values: &[T], ascending: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config(format!("{name} must be nonempty")));
    }
    let ok = values.windows(2).all(|w| if ascending { w[0] < w[1] } else { w[0] > w[1] });
    if !ok {
        let order = if ascending { "increasing" } else { "decreasing" };
        return Err(Error::Config(format!("{name} must be strictly {order}, got {values:?}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for b in [
            &self.e1.basis,
            &self.e2.basis,
            &self.e3.basis,
            &self.e4.basis,
            &self.e5.basis,
            &self.e6.basis,
            &self.e7.basis,
            &self.e8.basis,
            &self.e9.basis,
        ] {
            b.grid()?;
        }
        sorted_nonempty("E1.split_modes", &self.e1.split_modes, true)?;
        sorted_nonempty("E2.eps", &self.e2.eps, false)?;
        sorted_nonempty("E3.temperatures", &self.e3.temperatures, true)?;
        sorted_nonempty("E3.checked_modes", &self.e3.checked_modes, true)?;
        sorted_nonempty("E4.enumeration_temperatures", &self.e4.enumeration_temperatures, true)?;
        sorted_nonempty("E4.relax_temperatures", &self.e4.relax_temperatures, true)?;
        sorted_nonempty("E5.temperatures", &self.e5.temperatures, true)?;
        sorted_nonempty("E5.couplings", &self.e5.couplings, false)?;
        sorted_nonempty("E6.quantum_dims", &self.e6.quantum_dims, true)?;
        sorted_nonempty("E6.quantum_particles", &self.e6.quantum_particles, true)?;
        sorted_nonempty("E6.quantum_temperatures", &self.e6.quantum_temperatures, true)?;
        sorted_nonempty("E6.dims", &self.e6.dims, true)?;
        sorted_nonempty("E7.shift_temperatures", &self.e7.shift_temperatures, true)?;
        sorted_nonempty("E8.dims", &self.e8.dims, true)?;
        sorted_nonempty("E8.particles", &self.e8.particles, true)?;
        sorted_nonempty("E8.temperatures", &self.e8.temperatures, true)?;
        sorted_nonempty("E9.cutoffs", &self.e9.cutoffs, true)?;
        sorted_nonempty("E9.cut_modes", &self.e9.cut_modes, true)?;
        if self.e3.n_samples == 0 || self.e5.n_samples == 0 || self.e9.n_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if !(self.e6.m1 > 0.0 && self.e6.m1 <= self.e6.m2) {
            return Err(Error::Config(format!("E6 needs 0 < m1 ≤ m2, got {} and {}", self.e6.m1, self.e6.m2)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_overrides_one_key() {
        let cfg = ExperimentConfig::from_toml_str("[general]\nseed = 7\n\n[E3]\nn_samples = 1000\n").unwrap();
        assert_eq!(cfg.general.seed, 7);
        assert_eq!(cfg.e3.n_samples, 1000);
        assert_eq!(cfg.e3.temperatures, E3Config::default().temperatures);
    }

    #[test]
    fn unsorted_sweeps_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[E3]\ntemperatures = [16.0, 8.0]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[E3]\ntemperatures = []\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[E3]\nbogus = 1\n").is_err());
    }

    #[test]
    fn suite_ids_parse() {
        assert_eq!("e4".parse::<SuiteId>().unwrap(), SuiteId::E4);
        assert!("E10".parse::<SuiteId>().is_err());
    }
}
