//! JSON experiment configuration, schema version 1.
//!
//! ```json
//! { "schema_version": 1, "group": "torus1", "theta": 0.5,
//!   "bandwidth": 256, "resolution": 1024, "seed": 7,
//!   "kind": "weak11",
//!   "symbol": { "type": "oscillating" },
//!   "family": { "type": "approximate_identity", "epsilons": [0.25, 0.125] } }
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dual::DualIndex;
use crate::error::{Error, Result};
use crate::experiment::functions;
use crate::fourier::GridFunction;
use crate::group::{identity, GroupId, GroupPoint};
use crate::hormander::log_r_grid;
use crate::multiplier::{MultiplierSymbol, Regularization};
use crate::quadrature::QuadratureGrid;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub group: GroupId,
    pub theta: f64,
    /// Bandwidth `L`.
    pub bandwidth: f64,
    /// Grid resolution `B`.
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// Round trip and Plancherel identity on random band-limited functions.
    Plancherel {
        #[serde(default = "default_functions")]
        functions: usize,
    },
    Multiplier {
        symbol: SymbolSpec,
        input: FunctionSpec,
    },
    Kernel {
        symbol: SymbolSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regularization: Option<RegularizationSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
    Seminorm {
        symbol: SymbolSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        regularization: Option<RegularizationSpec>,
        r_grid: RGridSpec,
        y_samples: usize,
    },
    Czd {
        input: FunctionSpec,
        altitudes: Vec<f64>,
        /// Dyadic depth; omitted means refine to single points.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<SmoothingSpec>,
    },
    Weak11 {
        symbol: SymbolSpec,
        family: FamilySpec,
    },
}

fn default_functions() -> usize {
    50
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Plancherel { .. } => "plancherel",
            Experiment::Multiplier { .. } => "multiplier",
            Experiment::Kernel { .. } => "kernel",
            Experiment::Seminorm { .. } => "seminorm",
            Experiment::Czd { .. } => "czd",
            Experiment::Weak11 { .. } => "weak11",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// `⟨ξ⟩^{-nθ/2} e^{i⟨ξ⟩^θ}`.
    Oscillating,
    /// `e^{i⟨ξ⟩^θ}` without decay.
    UndampedOscillating,
    /// `⟨ξ⟩^{-s}`; `s` defaults to `nθ/2`.
    Bessel {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
    },
    Identity,
    Zero,
    Heat { t: f64 },
}

impl SymbolSpec {
    pub fn build(&self, group: GroupId, theta: f64) -> Result<MultiplierSymbol> {
        match self {
            SymbolSpec::Oscillating => MultiplierSymbol::oscillating(group, theta),
            SymbolSpec::UndampedOscillating => MultiplierSymbol::oscillating_with_decay(group, theta, 0.0),
            SymbolSpec::Bessel { s } => {
                MultiplierSymbol::bessel(group, s.unwrap_or(group.dimension() as f64 * theta / 2.0))
            }
            SymbolSpec::Identity => Ok(MultiplierSymbol::identity(group)),
            SymbolSpec::Zero => Ok(MultiplierSymbol::constant(group, Complex64::new(0.0, 0.0)).with_label("zero")),
            SymbolSpec::Heat { t } => MultiplierSymbol::heat(group, *t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegularizationSpec {
    None,
    Gaussian { sigma: f64 },
}

impl RegularizationSpec {
    /// `None` in the config means Gaussian damping with `σ = L`.
    pub fn resolve(spec: &Option<RegularizationSpec>, bandwidth: f64) -> Regularization {
        match spec {
            None => Regularization::default_for(bandwidth),
            Some(RegularizationSpec::None) => Regularization::None,
            Some(RegularizationSpec::Gaussian { sigma }) => Regularization::Gaussian { sigma: *sigma },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RGridSpec {
    List(Vec<f64>),
    Log { min: f64, max: f64, count: usize },
}

impl RGridSpec {
    pub fn radii(&self) -> Result<Vec<f64>> {
        match self {
            RGridSpec::List(v) => Ok(v.clone()),
            RGridSpec::Log { min, max, count } => log_r_grid(*min, *max, *count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SmoothingSpec {
    /// Fourier-side smoothing; bandwidth defaults to the grid maximum.
    Fourier {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilySpec {
    ApproximateIdentity { epsilons: Vec<f64> },
    Atoms { count: usize, min_radius: f64, max_radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    ApproximateIdentity {
        epsilon: f64,
    },
    /// `height · 1_{B(center, radius)}`; the centre defaults to the identity.
    /// Torus centres are coordinates, SU(2) centres quaternions.
    Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `height · 1_{[lower, upper)}` on a torus.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "one")]
        height: f64,
    },
    RandomSpikes {
        count: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Random coefficients up to `bandwidth` (default: the config bandwidth).
    BandLimited {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
    /// `Tr ξ(x)`: torus frequency `index` or SU(2) spin `two_l / 2`.
    Character {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<Vec<i64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        two_l: Option<u32>,
    },
    /// Torus exponential `e_ℓ`.
    Exponential { index: Vec<i64> },
}

fn one() -> f64 {
    1.0
}

impl FunctionSpec {
    pub fn is_random(&self) -> bool {
        matches!(self, FunctionSpec::RandomSpikes { .. } | FunctionSpec::BandLimited { .. })
    }

    pub fn build(&self, grid: &Arc<QuadratureGrid>, bandwidth: f64, seed: u64) -> Result<GridFunction> {
        let group = grid.group();
        match self {
            FunctionSpec::ApproximateIdentity { epsilon } => functions::approximate_identity(grid, *epsilon),
            FunctionSpec::Ball { center, radius, height } => {
                let c = match center {
                    None => identity(group),
                    Some(c) => point_from_coords(group, c)?,
                };
                functions::ball_indicator(grid, &c, *radius, *height)
            }
            FunctionSpec::Box { lower, upper, height } => functions::box_indicator(grid, lower, upper, *height),
            FunctionSpec::RandomSpikes { count, amplitude } => functions::random_spikes(grid, *count, *amplitude, seed),
            FunctionSpec::BandLimited { bandwidth: bw } => {
                functions::random_band_limited(grid, bw.unwrap_or(bandwidth), seed)
            }
            FunctionSpec::Character { index, two_l } => {
                let xi = match (group, index, two_l) {
                    (GroupId::Torus(_), Some(i), None) => DualIndex::torus(i)?,
                    (GroupId::Su2, None, Some(t)) => DualIndex::spin(*t),
                    _ => {
                        return Err(Error::invalid(
                            "character needs 'index' on a torus or 'two_l' on su2",
                        ))
                    }
                };
                crate::dual::check_index(group, &xi)?;
                functions::character_function(grid, &xi)
            }
            FunctionSpec::Exponential { index } => {
                let xi = DualIndex::torus(index)?;
                crate::dual::check_index(group, &xi)?;
                functions::character_function(grid, &xi)
            }
        }
    }
}

fn point_from_coords(group: GroupId, c: &[f64]) -> Result<GroupPoint> {
    match group {
        GroupId::Torus(n) if c.len() == n as usize => GroupPoint::torus(c),
        GroupId::Su2 if c.len() == 4 => GroupPoint::su2(c[0], c[1], c[2], c[3]),
        _ => Err(Error::invalid(format!("centre {c:?} does not match group {group}"))),
    }
}

impl ExperimentConfig {
    /// Parses and validates a config. Syntax errors carry line and column.
    /// Parses and validates.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg = Self::parse_unvalidated(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without range checks, so overrides can be applied first.
    pub fn parse_unvalidated(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn needs_seed(&self) -> bool {
        match &self.experiment {
            Experiment::Plancherel { .. } | Experiment::Seminorm { .. } => true,
            Experiment::Multiplier { input, .. } | Experiment::Czd { input, .. } => input.is_random(),
            Experiment::Weak11 { family, .. } => matches!(family, FamilySpec::Atoms { .. }),
            Experiment::Kernel { .. } => false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::invalid(format!("config field '{field}': {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if !(0.0..1.0).contains(&self.theta) {
            return bad("theta", format!("{} is outside the valid range [0,1)", self.theta));
        }
        if !(self.bandwidth >= 1.0) || !self.bandwidth.is_finite() {
            return bad("bandwidth", format!("{} must be finite and >= 1", self.bandwidth));
        }
        if self.resolution < 2 {
            return bad("resolution", format!("{} must be at least 2", self.resolution));
        }
        if self.needs_seed() && self.seed.is_none() {
            return bad("seed", format!("a seed is required for a sampled '{}' design", self.experiment.kind()));
        }
        match &self.experiment {
            Experiment::Plancherel { functions } if *functions == 0 => {
                return bad("functions", "must be at least 1".into());
            }
            Experiment::Kernel { window: Some([lo, hi]), .. } if !(*lo > 0.0 && hi > lo) => {
                return bad("window", format!("[{lo}, {hi}] must satisfy 0 < lo < hi"));
            }
            Experiment::Seminorm { r_grid, y_samples, .. } => {
                let radii = r_grid.radii()?;
                if radii.is_empty() {
                    return bad("r_grid", "must not be empty".into());
                }
                if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || **r > self.group.diameter()) {
                    return bad("r_grid", format!("R = {r} lies outside (0, {}]", self.group.diameter()));
                }
                if *y_samples == 0 {
                    return bad("y_samples", "must be at least 1".into());
                }
            }
            Experiment::Czd { altitudes, depth, .. } => {
                if altitudes.is_empty() || altitudes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                    return bad("altitudes", "must be a nonempty list of positive numbers".into());
                }
                if *depth == Some(0) {
                    return bad("depth", "must be at least 1".into());
                }
            }
            Experiment::Weak11 { family: FamilySpec::ApproximateIdentity { epsilons }, .. } => {
                if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
                    return bad("family.epsilons", "must be a nonempty list of positive radii".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WEAK: &str = r#"{
        "schema_version": 1, "group": "torus1", "theta": 0.5,
        "bandwidth": 256, "resolution": 1024, "seed": 7, "kind": "weak11",
        "symbol": {"type": "oscillating"},
        "family": {"type": "approximate_identity", "epsilons": [0.25, 0.125]}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_json_str(WEAK).unwrap();
        assert_eq!(c.group, GroupId::Torus(1));
        assert_eq!(c.experiment.kind(), "weak11");
        let again = ExperimentConfig::from_json_str(&c.to_json_string()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn theta_one_is_rejected() {
        let s = WEAK.replace("\"theta\": 0.5", "\"theta\": 1");
        let err = ExperimentConfig::from_json_str(&s).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("[0,1)"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = ExperimentConfig::from_json_str("{\n \"schema_version\": 1,\n oops }").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn sampled_designs_need_seeds() {
        let s = r#"{"schema_version": 1, "group": "su2", "theta": 0.0, "bandwidth": 4,
                    "resolution": 8, "kind": "plancherel"}"#;
        assert!(ExperimentConfig::from_json_str(s).is_err());
        let s = s.replace("\"kind\"", "\"seed\": 3, \"kind\"");
        let c = ExperimentConfig::from_json_str(&s).unwrap();
        assert_eq!(c.experiment, Experiment::Plancherel { functions: 50 });
    }

    #[test]
    fn r_grid_forms() {
        let list: RGridSpec = serde_json::from_str("[0.1, 0.2]").unwrap();
        assert_eq!(list.radii().unwrap(), vec![0.1, 0.2]);
        let log: RGridSpec = serde_json::from_str(r#"{"min": 0.001, "max": 0.1, "count": 3}"#).unwrap();
        assert!((log.radii().unwrap()[1] - 0.01).abs() < 1e-15);
    }
}
