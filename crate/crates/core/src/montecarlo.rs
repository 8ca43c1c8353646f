//! Experiment harness: seeded trial simulation, exact expectations by full
//! enumeration of signal profiles, forced-deviation studies, and sweeps
//! over signal quality and table-size ratio.
//!
//! Randomness comes from ChaCha8 with one substream per trial, derived
//! from `(seed, trial index)`: results are bit-reproducible for a given
//! seed on any platform, and trials stay independent if distributed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayes::{solve_game_with_budget, StrategyTable, DEFAULT_MEMO_BUDGET};
use crate::error::{Error, Result};
use crate::game::{GameSpec, SignalIdx, StateIdx, TableIdx, UTILITY_TOL};

/// Cap on `|signals|^customers` for exact enumeration.
pub const EXACT_ENUMERATION_BUDGET: u128 = 1_000_000;

/// A designated customer who, with the given probability, plays the table
/// opposite to their best response. Defined for two-table games only.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSetting {
    /// 1-based position of the deviating customer.
    pub customer: usize,
    pub miss_probability: f64,
}

/// Grids for the signal-quality x size-ratio sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrids {
    pub p_values: Vec<f64>,
    pub r_values: Vec<f64>,
}

/// One experiment: a base game plus how to sample or enumerate it.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub base: GameSpec,
    pub trials: u64,
    pub seed: u64,
    pub sweep: Option<SweepGrids>,
    pub deviation: Option<DeviationSetting>,
    /// Memo budget override for the solver; `None` uses the default.
    pub memo_budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(base: GameSpec, trials: u64, seed: u64) -> Self {
        ExperimentConfig { base, trials, seed, sweep: None, deviation: None, memo_budget: None }
    }

    fn solve(&self, spec: &GameSpec) -> Result<StrategyTable> {
        solve_game_with_budget(spec, self.memo_budget.unwrap_or(DEFAULT_MEMO_BUDGET))
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if let Some(grids) = &self.sweep {
            if grids.p_values.is_empty() || grids.r_values.is_empty() {
                return Err(Error::invalid("sweep", "grids must be nonempty"));
            }
            if grids.p_values.iter().any(|p| !(0.5..=1.0).contains(p)) {
                return Err(Error::invalid("p_values", "must lie in [0.5, 1]"));
            }
            if grids.r_values.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::invalid("r_values", "must lie in [0, 1]"));
            }
        }
        if let Some(dev) = &self.deviation {
            validate_deviation(&self.base, dev)?;
        }
        Ok(())
    }
}

fn validate_deviation(spec: &GameSpec, dev: &DeviationSetting) -> Result<()> {
    if spec.num_tables() != 2 {
        return Err(Error::Unsupported(
            "the opposite table is only defined for two-table games".into(),
        ));
    }
    if dev.customer == 0 || dev.customer > spec.num_customers {
        return Err(Error::invalid("miss_customer", "must lie in 1..=customers"));
    }
    if !(0.0..=1.0).contains(&dev.miss_probability) {
        return Err(Error::invalid("miss_probability", "must lie in [0, 1]"));
    }
    Ok(())
}

/// One cell of a sweep: the mirrored game at `(p, r)` and which customer
/// has the largest expected utility there.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub p: f64,
    pub r: f64,
    /// 1-based; lowest index on ties.
    pub argmax_customer: usize,
    pub means: Vec<f64>,
}

/// Aggregated experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Per-customer mean utilities (empty for pure sweeps or zero trials).
    pub means: Vec<f64>,
    /// Normal-approximation standard errors of the means.
    pub stderrs: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub sweep: Option<Vec<SweepCell>>,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn sample_categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// Samples the state from the prior and each customer's signal from the
/// signal model, plays the solved strategy, and averages utilities.
/// If a deviation is configured, the designated customer's action flips
/// with the configured probability each trial while everyone else keeps
/// playing the rational strategy.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let spec = &config.base;
    let n = spec.num_customers;
    if config.trials == 0 {
        return Ok(ExperimentResult {
            means: Vec::new(),
            stderrs: Vec::new(),
            trials: 0,
            seed: config.seed,
            sweep: None,
        });
    }
    let table = config.solve(spec)?;
    let mut sums = vec![0.0f64; n];
    let mut sums_sq = vec![0.0f64; n];
    let mut signals = vec![0 as SignalIdx; n];
    let state_weights = spec.prior.clone();
    for trial in 0..config.trials {
        let mut rng = trial_rng(config.seed, trial);
        let state: StateIdx = sample_categorical(&mut rng, &state_weights);
        let signal_weights: Vec<f64> =
            (0..spec.num_signals()).map(|s| spec.signal_prob(s, state)).collect();
        for slot in signals.iter_mut() {
            *slot = sample_categorical(&mut rng, &signal_weights);
        }
        let flip_at = match &config.deviation {
            Some(dev) if rng.random::<f64>() < dev.miss_probability => Some(dev.customer),
            _ => None,
        };
        let actions = table.replay_with(&signals, |position, best| {
            if flip_at == Some(position) {
                opposite(best)
            } else {
                best
            }
        })?;
        let record = table.record_outcome(state, &signals, actions)?;
        for (i, &u) in record.utilities.iter().enumerate() {
            sums[i] += u;
            sums_sq[i] += u * u;
        }
    }
    let t = config.trials as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / t).collect();
    let stderrs: Vec<f64> = means
        .iter()
        .zip(&sums_sq)
        .map(|(&m, &sq)| {
            if config.trials < 2 {
                0.0
            } else {
                let variance = ((sq - t * m * m) / (t - 1.0)).max(0.0);
                (variance / t).sqrt()
            }
        })
        .collect();
    Ok(ExperimentResult {
        means,
        stderrs,
        trials: config.trials,
        seed: config.seed,
        sweep: None,
    })
}

fn opposite(table: TableIdx) -> TableIdx {
    1 - table
}

/// Exact per-customer expected utilities under the solved strategy, by
/// enumerating every state and every signal profile.
pub fn exact_expectation(spec: &GameSpec) -> Result<Vec<f64>> {
    exact_expectation_inner(spec, None, DEFAULT_MEMO_BUDGET)
}

/// As [`exact_expectation`], with the designated customer's action flipped
/// with the given probability (both branches enumerated, no sampling).
pub fn exact_expectation_with_deviation(
    spec: &GameSpec,
    deviation: &DeviationSetting,
) -> Result<Vec<f64>> {
    validate_deviation(spec, deviation)?;
    exact_expectation_inner(spec, Some(deviation), DEFAULT_MEMO_BUDGET)
}

/// Exact counterpart of [`run_trials`] for a whole experiment config:
/// expectations by enumeration, honoring any deviation setting.
pub fn exact_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let budget = config.memo_budget.unwrap_or(DEFAULT_MEMO_BUDGET);
    let means = exact_expectation_inner(&config.base, config.deviation.as_ref(), budget)?;
    let stderrs = vec![0.0; means.len()];
    Ok(ExperimentResult { means, stderrs, trials: 0, seed: config.seed, sweep: None })
}

fn exact_expectation_inner(
    spec: &GameSpec,
    deviation: Option<&DeviationSetting>,
    budget: u64,
) -> Result<Vec<f64>> {
    let n = spec.num_customers;
    let m = spec.num_signals() as u128;
    let profile_count = match m.checked_pow(n as u32) {
        Some(c) if c <= EXACT_ENUMERATION_BUDGET => c,
        Some(c) => {
            return Err(Error::BudgetExceeded {
                required: c,
                budget: EXACT_ENUMERATION_BUDGET as u64,
            })
        }
        None => {
            return Err(Error::BudgetExceeded {
                required: u128::MAX,
                budget: EXACT_ENUMERATION_BUDGET as u64,
            })
        }
    };
    let table = solve_game_with_budget(spec, budget)?;
    let mut means = vec![0.0f64; n];
    let mut signals = vec![0 as SignalIdx; n];
    for code in 0..profile_count {
        let mut rest = code;
        for slot in signals.iter_mut() {
            *slot = (rest % m) as SignalIdx;
            rest /= m;
        }
        let state_weights: Vec<f64> = (0..spec.num_states())
            .map(|l| {
                spec.prior[l] * signals.iter().map(|&s| spec.signal_prob(s, l)).product::<f64>()
            })
            .collect();
        if state_weights.iter().all(|&w| w <= 0.0) {
            continue;
        }
        accumulate_profile(&table, &signals, &state_weights, deviation, &mut means)?;
    }
    Ok(means)
}

fn accumulate_profile(
    table: &StrategyTable,
    signals: &[SignalIdx],
    state_weights: &[f64],
    deviation: Option<&DeviationSetting>,
    means: &mut [f64],
) -> Result<()> {
    let branches: Vec<(f64, Vec<TableIdx>)> = match deviation {
        None => vec![(1.0, table.replay_actions(signals)?)],
        Some(dev) => {
            let rational = table.replay_actions(signals)?;
            let flipped = table.replay_with(signals, |position, best| {
                if position == dev.customer {
                    opposite(best)
                } else {
                    best
                }
            })?;
            vec![(1.0 - dev.miss_probability, rational), (dev.miss_probability, flipped)]
        }
    };
    for (branch_weight, actions) in branches {
        if branch_weight <= 0.0 {
            continue;
        }
        for (state, &w) in state_weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let record = table.record_outcome(state, signals, actions.clone())?;
            for (mean, &u) in means.iter_mut().zip(&record.utilities) {
                *mean += branch_weight * w * u;
            }
        }
    }
    Ok(())
}

/// Trial study of a forced deviation; requires `config.deviation`.
pub fn deviation_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let Some(dev) = &config.deviation else {
        return Err(Error::invalid("deviation", "miss_customer and miss_probability required"));
    };
    validate_deviation(&config.base, dev)?;
    run_trials(config)
}

/// For each `(p, r)` grid cell, builds the mirrored two-table game, finds
/// per-customer expected utilities (exactly when the profile space is
/// enumerable, otherwise by seeded trials), and records which customer
/// does best.
pub fn sweep(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let Some(grids) = &config.sweep else {
        return Err(Error::invalid("sweep", "p_values and r_values required"));
    };
    let n = config.base.num_customers;
    let mut cells = Vec::with_capacity(grids.p_values.len() * grids.r_values.len());
    for &p in &grids.p_values {
        for &r in &grids.r_values {
            let spec = GameSpec::binary_mirrored(n, p, r)?;
            let enumerable = (spec.num_signals() as u128)
                .checked_pow(n as u32)
                .is_some_and(|c| c <= EXACT_ENUMERATION_BUDGET);
            let means = if enumerable {
                exact_expectation(&spec)?
            } else {
                let cell_config = ExperimentConfig {
                    base: spec.clone(),
                    trials: config.trials,
                    seed: config.seed,
                    sweep: None,
                    deviation: None,
                    memo_budget: config.memo_budget,
                };
                run_trials(&cell_config)?.means
            };
            let best = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let argmax_customer = means
                .iter()
                .position(|&mu| mu >= best - UTILITY_TOL)
                .map_or(0, |i| i + 1);
            cells.push(SweepCell { p, r, argmax_customer, means });
        }
    }
    Ok(ExperimentResult {
        means: Vec::new(),
        stderrs: Vec::new(),
        trials: config.trials,
        seed: config.seed,
        sweep: Some(cells),
    })
}
