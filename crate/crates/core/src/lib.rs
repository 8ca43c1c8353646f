//! Solvers and an experiment harness for sequential table-selection games
//! with negative network externality and Bayesian social learning.
//!
//! Customers arrive one by one and each picks one of several tables whose
//! sizes depend on a hidden state. Everyone sees earlier arrivals' choices
//! and revealed signals, so later customers know more about the state but
//! find the good tables more crowded. The crate provides:
//!
//! - [`game`]: the game definition (tables, states, signals, utility rule);
//! - [`belief`]: Bayesian posterior arithmetic over the hidden state;
//! - [`perfect`]: equilibrium machinery when the state is known — grouping
//!   verification, greedy construction, candidate pruning, and the
//!   subgame-perfect sequential strategy;
//! - [`bayes`]: the backward-induction solver for noisy signals, built on
//!   signal-space partitions and recursive successor-count distributions;
//! - [`montecarlo`]: seeded trial simulation, exact expectation by full
//!   enumeration, forced-deviation studies, and signal-quality sweeps;
//! - [`config`] and [`cli`]: the TOML config format and the `crg` command
//!   line front end with deterministic CSV output.
//!
//! ```
//! use crg::{bayes::solve_game, GameSpec};
//!
//! // Two tables of sizes 100 and 40 (the state says which is which),
//! // three customers, binary signals right 90% of the time.
//! let spec = GameSpec::binary_mirrored(3, 0.9, 0.4)?;
//! let table = solve_game(&spec)?;
//!
//! // When everyone's signal points at table 2 (index 1), the first two
//! // customers follow their signals and the last one takes the vacant
//! // table rather than crowd a three-way split.
//! let record = table.simulate_realization(1, &[1, 1, 1])?;
//! assert_eq!(record.actions, vec![1, 1, 0]);
//! assert_eq!(record.utilities, vec![50.0, 50.0, 40.0]);
//! # Ok::<(), crg::Error>(())
//! ```

pub mod bayes;
pub mod belief;
pub mod cli;
pub mod config;
pub mod error;
pub mod game;
pub mod montecarlo;
pub mod perfect;

pub use belief::{belief_from_history, belief_update, posterior, Belief, SignalHistory};
pub use error::{Error, Result};
pub use game::{utility, GameSpec, Grouping, SignalIdx, StateIdx, TableIdx, UtilityRule};
