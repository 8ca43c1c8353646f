//! TOML configuration files consumed by the CLI.
//!
//! A config has a `[game]` section and, for the `experiment` subcommand,
//! an `[experiment]` section. The game can be given explicitly (sizes
//! matrix, prior, signal matrix) or through the two shorthands used by the
//! built-in studies: `ratio` for the mirrored two-table size structure and
//! `signal_p` for binary signals of quality `p`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, UtilityRule};
use crate::montecarlo::{DeviationSetting, ExperimentConfig, SweepGrids};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub game: GameSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub customers: usize,
    /// Mirrored two-table shorthand: one table of size 100, one of size
    /// `100 * ratio`, two states deciding which is which, uniform prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Explicit size matrix; `sizes[j]` lists table `j + 1`'s size in each
    /// state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<Vec<f64>>>,
    /// Prior over states; defaults to uniform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    /// Binary signal shorthand: quality `p` in [0.5, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_p: Option<f64>,
    /// Explicit signal matrix; `signal_model[s]` lists signal `s + 1`'s
    /// probability in each state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_model: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityConfig {
    Ratio,
    Table { sizes: Vec<f64>, values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Trials,
    Exact,
    Deviation,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ExperimentMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    /// 1-based position of the deviating customer (deviation mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miss_customer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miss_probabilities: Option<Vec<f64>>,
}

pub const DEFAULT_TRIALS: u64 = 10_000;

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ConfigFile::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn game_spec(&self) -> Result<GameSpec> {
        self.game.build()
    }

    /// Maps the `[experiment]` section (with defaults) onto a runnable
    /// configuration.
    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let spec = self.game_spec()?;
        let section = self.experiment.clone().unwrap_or(ExperimentSection {
            mode: None,
            trials: None,
            seed: None,
            p_values: None,
            r_values: None,
            miss_customer: None,
            miss_probabilities: None,
        });
        let mut config = ExperimentConfig::new(
            spec,
            section.trials.unwrap_or(DEFAULT_TRIALS),
            section.seed.unwrap_or(0),
        );
        if section.mode == Some(ExperimentMode::Sweep) {
            config.sweep = Some(SweepGrids {
                p_values: section
                    .p_values
                    .clone()
                    .ok_or_else(|| Error::invalid("experiment.p_values", "required for sweep mode"))?,
                r_values: section
                    .r_values
                    .clone()
                    .ok_or_else(|| Error::invalid("experiment.r_values", "required for sweep mode"))?,
            });
        }
        if section.mode == Some(ExperimentMode::Deviation) {
            let customer = section
                .miss_customer
                .ok_or_else(|| Error::invalid("experiment.miss_customer", "required for deviation mode"))?;
            // The per-probability grid is handled by the CLI; validate the
            // base setting with the first grid point.
            let first = section
                .miss_probabilities
                .as_ref()
                .and_then(|v| v.first().copied())
                .ok_or_else(|| {
                    Error::invalid("experiment.miss_probabilities", "required for deviation mode")
                })?;
            config.deviation = Some(DeviationSetting { customer, miss_probability: first });
        }
        config.validate()?;
        Ok(config)
    }

    pub fn experiment_mode(&self) -> ExperimentMode {
        self.experiment
            .as_ref()
            .and_then(|e| e.mode)
            .unwrap_or(ExperimentMode::Trials)
    }
}

impl GameSection {
    pub fn build(&self) -> Result<GameSpec> {
        if self.customers == 0 {
            return Err(Error::invalid("game.customers", "must be positive"));
        }
        let sizes: Vec<Vec<f64>> = match (&self.ratio, &self.sizes) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("game.sizes", "give either ratio or sizes, not both"))
            }
            (&Some(r), None) => {
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::invalid("game.ratio", "must lie in [0, 1]"));
                }
                vec![vec![100.0, 100.0 * r], vec![100.0 * r, 100.0]]
            }
            (None, Some(sizes)) => sizes.clone(),
            (None, None) => {
                return Err(Error::invalid("game.sizes", "either ratio or sizes is required"))
            }
        };
        let states = sizes
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("game.sizes", "need at least one table"))?;
        let prior = match &self.prior {
            Some(p) => p.clone(),
            None => vec![1.0 / states as f64; states],
        };
        let signal_model: Vec<Vec<f64>> = match (&self.signal_p, &self.signal_model) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "game.signal_model",
                    "give either signal_p or signal_model, not both",
                ))
            }
            (&Some(p), None) => {
                if !(0.5..=1.0).contains(&p) {
                    return Err(Error::invalid("game.signal_p", "must lie in [0.5, 1]"));
                }
                if states != 2 {
                    return Err(Error::invalid(
                        "game.signal_p",
                        "binary shorthand needs exactly two states",
                    ));
                }
                vec![vec![p, 1.0 - p], vec![1.0 - p, p]]
            }
            (None, Some(m)) => m.clone(),
            (None, None) => {
                return Err(Error::invalid(
                    "game.signal_model",
                    "either signal_p or signal_model is required",
                ))
            }
        };
        let utility = match &self.utility {
            None | Some(UtilityConfig::Ratio) => UtilityRule::Ratio,
            Some(UtilityConfig::Table { sizes, values }) => {
                UtilityRule::Table { sizes: sizes.clone(), values: values.clone() }
            }
        };
        GameSpec::new(self.customers, sizes, prior, signal_model, utility)
    }

    /// The binary signal quality, when this game uses the shorthand or an
    /// equivalent 2x2 symmetric matrix.
    pub fn binary_quality(&self) -> Option<f64> {
        if let Some(p) = self.signal_p {
            return Some(p);
        }
        let m = self.signal_model.as_ref()?;
        if m.len() == 2 && m[0].len() == 2 && (m[0][0] - m[1][1]).abs() <= 1e-12 {
            return Some(m[0][0]);
        }
        None
    }

    /// A copy of this section with binary signal quality `p`.
    pub fn with_binary_quality(&self, p: f64) -> Result<GameSection> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::invalid("p", "must lie in [0.5, 1]"));
        }
        let mut section = self.clone();
        section.signal_p = Some(p);
        section.signal_model = None;
        Ok(section)
    }
}
