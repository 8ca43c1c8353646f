//! The `crg` command line: config-driven subcommands with deterministic
//! CSV output.
//!
//! Floats are formatted with 12 significant digits so repeated runs with
//! the same config and seed are byte-identical and suitable for golden
//! files. Tables, states, signals, and customers are 1-based on the wire.
//!
//! Exit codes: 0 success, 2 config error, 3 budget exceeded, 4 internal
//! invariant violation, 1 anything else.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::bayes::{solve_game_with_budget, StrategyTable, DEFAULT_MEMO_BUDGET};
use crate::config::{ConfigFile, ExperimentMode};
use crate::error::{Error, Result};
use crate::game::{GameSpec, SignalIdx, StateIdx};
use crate::montecarlo::{
    deviation_experiment, exact_experiment, run_trials, sweep, DeviationSetting, SweepGrids,
};
use crate::perfect::play_sequential_perfect;

/// Environment variable overriding the solver memo budget.
pub const BUDGET_ENV_VAR: &str = "CRG_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "crg",
    version,
    about = "Solvers and experiments for sequential table-selection games \
             with negative network externality and social learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the known-state game: equilibrium grouping, action sequence,
    /// and realized utilities.
    SolvePerfect {
        #[arg(long)]
        config: PathBuf,
        /// 1-based state index.
        #[arg(long, default_value_t = 1)]
        state: usize,
        /// Write output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the noisy-signal game by backward induction and report the
    /// induced play per signal profile (or for one given profile).
    SolveBayes {
        #[arg(long)]
        config: PathBuf,
        /// 1-based state index; enables the utilities row for --signals.
        #[arg(long)]
        state: Option<usize>,
        /// Comma-separated 1-based signals, one per customer.
        #[arg(long, value_delimiter = ',')]
        signals: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best-response action sequences for every signal profile, one row
    /// per (signal quality, profile).
    BestResponseTable {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated signal qualities; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        /// Emit rows in the published-table order (last signal varies
        /// slowest, signal 2 before signal 1) instead of lexicographic.
        #[arg(long)]
        paper_row_order: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiment (trials, exact, deviation, or sweep).
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config trial count.
        #[arg(long)]
        trials: Option<u64>,
        /// Overrides the config signal-quality grid.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        /// Overrides the config size-ratio grid.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn out_path(&self) -> Option<&PathBuf> {
        match self {
            Command::SolvePerfect { out, .. }
            | Command::SolveBayes { out, .. }
            | Command::BestResponseTable { out, .. }
            | Command::Experiment { out, .. } => out.as_ref(),
        }
    }
}

/// Formats with 12 significant digits, plain decimal notation.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn memo_budget() -> Result<u64> {
    match std::env::var(BUDGET_ENV_VAR) {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("{BUDGET_ENV_VAR} must be an unsigned integer"))),
        Err(_) => Ok(DEFAULT_MEMO_BUDGET),
    }
}

/// Executes a parsed command and returns its textual output.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::SolvePerfect { config, state, .. } => {
            let spec = ConfigFile::load(config)?.game_spec()?;
            let state = check_state(&spec, *state)?;
            solve_perfect_csv(&spec, state)
        }
        Command::SolveBayes { config, state, signals, .. } => {
            let spec = ConfigFile::load(config)?.game_spec()?;
            let state = state.map(|s| check_state(&spec, s)).transpose()?;
            let signals = signals
                .as_ref()
                .map(|raw| check_signals(&spec, raw))
                .transpose()?;
            let table = solve_game_with_budget(&spec, memo_budget()?)?;
            match signals {
                Some(signals) => solve_bayes_profile_csv(&table, state, &signals),
                None => solve_bayes_table_csv(&table),
            }
        }
        Command::BestResponseTable { config, p, paper_row_order, .. } => {
            let file = ConfigFile::load(config)?;
            best_response_table_csv(&file, p.clone(), *paper_row_order)
        }
        Command::Experiment { config, seed, trials, p, r, .. } => {
            let file = ConfigFile::load(config)?;
            experiment_csv(&file, *seed, *trials, p.clone(), r.clone())
        }
    }
}

fn check_state(spec: &GameSpec, state_1based: usize) -> Result<StateIdx> {
    if state_1based == 0 || state_1based > spec.num_states() {
        return Err(Error::invalid(
            "state",
            format!("must lie in 1..={}", spec.num_states()),
        ));
    }
    Ok(state_1based - 1)
}

fn check_signals(spec: &GameSpec, raw: &[usize]) -> Result<Vec<SignalIdx>> {
    if raw.len() != spec.num_customers {
        return Err(Error::invalid(
            "signals",
            format!("need {} values, one per customer", spec.num_customers),
        ));
    }
    raw.iter()
        .map(|&s| {
            if s == 0 || s > spec.num_signals() {
                Err(Error::invalid("signals", format!("must lie in 1..={}", spec.num_signals())))
            } else {
                Ok(s - 1)
            }
        })
        .collect()
}

fn solve_perfect_csv(spec: &GameSpec, state: StateIdx) -> Result<String> {
    let outcome = play_sequential_perfect(state, spec)?;
    let mut out = String::from("field,values\n");
    writeln!(out, "state,{}", state + 1).unwrap();
    writeln!(out, "grouping,{}", join_u32(outcome.grouping.counts())).unwrap();
    writeln!(out, "actions,{}", join_1based(&outcome.actions)).unwrap();
    writeln!(out, "utilities,{}", join_f64(&outcome.utilities)).unwrap();
    Ok(out)
}

fn solve_bayes_profile_csv(
    table: &StrategyTable,
    state: Option<StateIdx>,
    signals: &[SignalIdx],
) -> Result<String> {
    let actions = table.replay_actions(signals)?;
    let mut out = String::from("field,values\n");
    writeln!(out, "signals,{}", join_1based(signals)).unwrap();
    writeln!(out, "actions,{}", join_1based(&actions)).unwrap();
    let record = table.record_outcome(state.unwrap_or(0), signals, actions)?;
    writeln!(out, "grouping,{}", join_u32(record.grouping.counts())).unwrap();
    if let Some(state) = state {
        writeln!(out, "state,{}", state + 1).unwrap();
        writeln!(out, "utilities,{}", join_f64(&record.utilities)).unwrap();
    }
    Ok(out)
}

fn check_enumerable(spec: &GameSpec) -> Result<()> {
    let budget = crate::montecarlo::EXACT_ENUMERATION_BUDGET;
    match (spec.num_signals() as u128).checked_pow(spec.num_customers as u32) {
        Some(count) if count <= budget => Ok(()),
        Some(count) => Err(Error::BudgetExceeded { required: count, budget: budget as u64 }),
        None => Err(Error::BudgetExceeded { required: u128::MAX, budget: budget as u64 }),
    }
}

fn solve_bayes_table_csv(table: &StrategyTable) -> Result<String> {
    let spec = table.spec();
    check_enumerable(spec)?;
    let n = spec.num_customers;
    let k = spec.num_tables();
    let mut out = String::new();
    let signal_cols: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let action_cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let count_cols: Vec<String> = (1..=k).map(|j| format!("n{j}")).collect();
    writeln!(
        out,
        "{},{},{}",
        signal_cols.join(","),
        action_cols.join(","),
        count_cols.join(",")
    )
    .unwrap();
    for signals in profiles_lexicographic(spec.num_signals(), n) {
        let actions = match table.replay_actions(&signals) {
            Ok(actions) => actions,
            Err(Error::UnreachableContext(_)) => continue,
            Err(other) => return Err(other),
        };
        let record = table.record_outcome(0, &signals, actions)?;
        writeln!(
            out,
            "{},{},{}",
            join_1based(&signals),
            join_1based(&record.actions),
            join_u32(record.grouping.counts())
        )
        .unwrap();
    }
    Ok(out)
}

fn best_response_table_csv(
    file: &ConfigFile,
    p_override: Option<Vec<f64>>,
    paper_order: bool,
) -> Result<String> {
    let base_spec = file.game_spec()?;
    check_enumerable(&base_spec)?;
    let n = base_spec.num_customers;
    let budget = memo_budget()?;

    // Either sweep the binary quality over a p list, or print the game's
    // own signal model as a single pass with an empty p column.
    let p_list = match p_override.or_else(|| {
        file.experiment.as_ref().and_then(|e| e.p_values.clone())
    }) {
        Some(list) => Some(list),
        None => file.game.binary_quality().map(|p| vec![p]),
    };

    let mut out = String::new();
    let signal_cols: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let action_cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    writeln!(out, "p,{},{}", signal_cols.join(","), action_cols.join(",")).unwrap();

    let passes: Vec<(String, GameSpec)> = match p_list {
        Some(list) => list
            .iter()
            .map(|&p| {
                let section = file.game.with_binary_quality(p)?;
                Ok((fmt12(p), section.build()?))
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![(String::new(), base_spec)],
    };

    for (p_label, spec) in passes {
        let table = solve_game_with_budget(&spec, budget)?;
        let profiles = if paper_order {
            profiles_paper_order(spec.num_signals(), n)?
        } else {
            profiles_lexicographic(spec.num_signals(), n)
        };
        for signals in profiles {
            let actions = match table.replay_actions(&signals) {
                Ok(actions) => actions,
                Err(Error::UnreachableContext(_)) => continue,
                Err(other) => return Err(other),
            };
            writeln!(out, "{p_label},{},{}", join_1based(&signals), join_1based(&actions))
                .unwrap();
        }
    }
    Ok(out)
}

fn experiment_csv(
    file: &ConfigFile,
    seed: Option<u64>,
    trials: Option<u64>,
    p_override: Option<Vec<f64>>,
    r_override: Option<Vec<f64>>,
) -> Result<String> {
    let mut config = file.experiment_config()?;
    config.memo_budget = Some(memo_budget()?);
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(trials) = trials {
        config.trials = trials;
    }
    let section = file.experiment.clone();
    let p_values = p_override.or_else(|| section.as_ref().and_then(|e| e.p_values.clone()));
    let r_values = r_override.or_else(|| section.as_ref().and_then(|e| e.r_values.clone()));

    match file.experiment_mode() {
        ExperimentMode::Trials => {
            let result = run_trials(&config)?;
            let mut out = String::from("customer,mean,stderr\n");
            for (i, (m, s)) in result.means.iter().zip(&result.stderrs).enumerate() {
                writeln!(out, "{},{},{}", i + 1, fmt12(*m), fmt12(*s)).unwrap();
            }
            Ok(out)
        }
        ExperimentMode::Exact => {
            let result = exact_experiment(&config)?;
            let mut out = String::from("customer,mean\n");
            for (i, m) in result.means.iter().enumerate() {
                writeln!(out, "{},{}", i + 1, fmt12(*m)).unwrap();
            }
            Ok(out)
        }
        ExperimentMode::Deviation => {
            let base_dev = config.deviation.clone().ok_or_else(|| {
                Error::invalid("experiment.miss_customer", "required for deviation mode")
            })?;
            let miss_probabilities = section
                .as_ref()
                .and_then(|e| e.miss_probabilities.clone())
                .unwrap_or_else(|| vec![base_dev.miss_probability]);
            let quality_grid: Vec<Option<f64>> = match p_values {
                Some(ps) => ps.into_iter().map(Some).collect(),
                None => vec![file.game.binary_quality()],
            };
            let mut out = String::from("p,p_mis,customer,mean,stderr\n");
            for quality in quality_grid {
                let (p_label, base) = match quality {
                    Some(p) => (fmt12(p), file.game.with_binary_quality(p)?.build()?),
                    None => (String::new(), config.base.clone()),
                };
                for &p_mis in &miss_probabilities {
                    let cell = crate::montecarlo::ExperimentConfig {
                        base: base.clone(),
                        deviation: Some(DeviationSetting {
                            customer: base_dev.customer,
                            miss_probability: p_mis,
                        }),
                        sweep: None,
                        ..config.clone()
                    };
                    let result = deviation_experiment(&cell)?;
                    for (i, (m, s)) in result.means.iter().zip(&result.stderrs).enumerate() {
                        writeln!(
                            out,
                            "{p_label},{},{},{},{}",
                            fmt12(p_mis),
                            i + 1,
                            fmt12(*m),
                            fmt12(*s)
                        )
                        .unwrap();
                    }
                }
            }
            Ok(out)
        }
        ExperimentMode::Sweep => {
            if let (Some(p), Some(r)) = (p_values, r_values) {
                config.sweep = Some(SweepGrids { p_values: p, r_values: r });
            }
            let result = sweep(&config)?;
            let cells = result.sweep.unwrap_or_default();
            let n = config.base.num_customers;
            let mean_cols: Vec<String> = (1..=n).map(|i| format!("mean_{i}")).collect();
            let mut out = format!("p,r,argmax_customer,{}\n", mean_cols.join(","));
            for cell in cells {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt12(cell.p),
                    fmt12(cell.r),
                    cell.argmax_customer,
                    join_f64(&cell.means)
                )
                .unwrap();
            }
            Ok(out)
        }
    }
}

/// All signal profiles in ascending lexicographic order (first customer's
/// signal most significant).
fn profiles_lexicographic(num_signals: usize, n: usize) -> Vec<Vec<SignalIdx>> {
    let total = num_signals.pow(n as u32);
    (0..total)
        .map(|code| {
            (0..n)
                .map(|i| (code / num_signals.pow((n - 1 - i) as u32)) % num_signals)
                .collect()
        })
        .collect()
}

/// The row order of the published best-response tables: binary signals,
/// starting from all-2 and ending at all-1, with the last customer's
/// signal varying slowest.
fn profiles_paper_order(num_signals: usize, n: usize) -> Result<Vec<Vec<SignalIdx>>> {
    if num_signals != 2 {
        return Err(Error::Unsupported(
            "--paper-row-order is defined for binary signals only".into(),
        ));
    }
    Ok((0..1u64 << n)
        .rev()
        .map(|code| (0..n).map(|i| ((code >> i) & 1) as SignalIdx).collect())
        .collect())
}

fn join_u32(values: &[u32]) -> String {
    values.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn join_1based(values: &[usize]) -> String {
    values.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|&v| fmt12(v)).collect::<Vec<_>>().join(",")
}
