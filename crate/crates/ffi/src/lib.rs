//! C ABI over the `crg` solvers.
//!
//! Handles are opaque: construct a `CrgSpec`, optionally solve it into a
//! `CrgSolver`, query, then free with the matching `*_free` function.
//! Every fallible call returns a [`CrgStatus`] and writes results through
//! caller-allocated out-pointers whose lengths come from the spec
//! accessors. Tables, states, signals, and customers are 1-based at this
//! boundary, matching the CLI convention.
//!
//! The generated header lives at `include/crg.h`.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use crg::bayes::{solve_game_with_budget, DecisionContext, StrategyTable, DEFAULT_MEMO_BUDGET};
use crg::belief::SignalHistory;
use crg::game::{GameSpec, Grouping, UtilityRule};
use crg::montecarlo::{exact_expectation, run_trials, ExperimentConfig};
use crg::perfect::play_sequential_perfect;
use crg::Error;

/// Result of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrgStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument or game definition failed validation.
    InvalidArgument = 2,
    /// The instance exceeds the configured state-space budget.
    BudgetExceeded = 3,
    /// The observation sequence has zero likelihood under every state.
    ImpossibleObservation = 4,
    /// The operation is not defined for this configuration.
    Unsupported = 5,
    /// Internal invariant violation; indicates a bug.
    Internal = 6,
}

fn status_of(err: &Error) -> CrgStatus {
    match err {
        Error::InvalidSpec { .. } | Error::Config(_) | Error::ZeroOccupancy => {
            CrgStatus::InvalidArgument
        }
        Error::ImpossibleObservation | Error::UnreachableContext(_) => {
            CrgStatus::ImpossibleObservation
        }
        Error::BudgetExceeded { .. } => CrgStatus::BudgetExceeded,
        Error::Unsupported(_) => CrgStatus::Unsupported,
        Error::InternalInvariant(_) | Error::Io(_) => CrgStatus::Internal,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn crg_status_message(status: CrgStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        CrgStatus::Ok => b"ok\0",
        CrgStatus::NullPointer => b"required pointer was null\0",
        CrgStatus::InvalidArgument => b"invalid argument or game definition\0",
        CrgStatus::BudgetExceeded => b"state space exceeds the configured budget\0",
        CrgStatus::ImpossibleObservation => {
            b"observation impossible under every state with positive prior\0"
        }
        CrgStatus::Unsupported => b"operation not defined for this configuration\0",
        CrgStatus::Internal => b"internal invariant violated\0",
    };
    text.as_ptr().cast()
}

/// Opaque game definition handle.
pub struct CrgSpec(GameSpec);

/// Opaque solved-strategy handle.
pub struct CrgSolver(StrategyTable);

fn guard(body: impl FnOnce() -> CrgStatus) -> CrgStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(CrgStatus::Internal)
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        return Some(&[]);
    }
    if ptr.is_null() {
        return None;
    }
    Some(slice::from_raw_parts(ptr, len))
}

/// Creates the mirrored two-table game: one table of size 100 and one of
/// size `100 * r`, two equally likely states deciding which is which,
/// binary signals of quality `p`, even-split utility.
///
/// # Safety
/// `out` must be a valid pointer. On success it receives a handle that
/// must be released with `crg_spec_free`.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_new_mirrored(
    customers: u32,
    p: f64,
    r: f64,
    out: *mut *mut CrgSpec,
) -> CrgStatus {
    guard(|| {
        if out.is_null() {
            return CrgStatus::NullPointer;
        }
        match GameSpec::binary_mirrored(customers as usize, p, r) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(CrgSpec(spec)));
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Creates a game from explicit matrices with the even-split utility rule.
///
/// `sizes` is `tables x states` row-major (table-major); `prior` has one
/// entry per state; `signal_model` is `signals x states` row-major with
/// each state's column summing to 1.
///
/// # Safety
/// All pointers must reference arrays of the stated lengths; `out` must be
/// valid and receives a handle to release with `crg_spec_free`.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_new(
    customers: u32,
    tables: u32,
    states: u32,
    sizes: *const f64,
    prior: *const f64,
    signals: u32,
    signal_model: *const f64,
    out: *mut *mut CrgSpec,
) -> CrgStatus {
    guard(|| {
        if out.is_null() {
            return CrgStatus::NullPointer;
        }
        let (k, l, m) = (tables as usize, states as usize, signals as usize);
        let Some(sizes) = slice_arg(sizes, k * l) else { return CrgStatus::NullPointer };
        let Some(prior) = slice_arg(prior, l) else { return CrgStatus::NullPointer };
        let Some(model) = slice_arg(signal_model, m * l) else { return CrgStatus::NullPointer };
        let table_sizes: Vec<Vec<f64>> = (0..k).map(|j| sizes[j * l..(j + 1) * l].to_vec()).collect();
        let signal_rows: Vec<Vec<f64>> = (0..m).map(|s| model[s * l..(s + 1) * l].to_vec()).collect();
        match GameSpec::new(
            customers as usize,
            table_sizes,
            prior.to_vec(),
            signal_rows,
            UtilityRule::Ratio,
        ) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(CrgSpec(spec)));
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases a spec handle. Null is ignored.
///
/// # Safety
/// `spec` must have come from a `crg_spec_new*` call and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_free(spec: *mut CrgSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Number of customers; 0 if `spec` is null.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_customers(spec: *const CrgSpec) -> u32 {
    spec.as_ref().map_or(0, |s| s.0.num_customers as u32)
}

/// Number of tables; 0 if `spec` is null.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_tables(spec: *const CrgSpec) -> u32 {
    spec.as_ref().map_or(0, |s| s.0.num_tables() as u32)
}

/// Number of states; 0 if `spec` is null.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_states(spec: *const CrgSpec) -> u32 {
    spec.as_ref().map_or(0, |s| s.0.num_states() as u32)
}

/// Number of signal values; 0 if `spec` is null.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn crg_spec_signals(spec: *const CrgSpec) -> u32 {
    spec.as_ref().map_or(0, |s| s.0.num_signals() as u32)
}

/// Plays the known-state sequential game. `actions_out` (1-based tables)
/// and `utilities_out` each take one entry per customer; either may be
/// null to skip it.
///
/// # Safety
/// `spec` must be a live handle; non-null out arrays must hold
/// `crg_spec_customers(spec)` entries.
#[no_mangle]
pub unsafe extern "C" fn crg_play_perfect(
    spec: *const CrgSpec,
    state: u32,
    actions_out: *mut u32,
    utilities_out: *mut f64,
) -> CrgStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else { return CrgStatus::NullPointer };
        if state == 0 || state as usize > spec.0.num_states() {
            return CrgStatus::InvalidArgument;
        }
        match play_sequential_perfect(state as usize - 1, &spec.0) {
            Ok(outcome) => {
                if !actions_out.is_null() {
                    for (i, &a) in outcome.actions.iter().enumerate() {
                        *actions_out.add(i) = a as u32 + 1;
                    }
                }
                if !utilities_out.is_null() {
                    for (i, &u) in outcome.utilities.iter().enumerate() {
                        *utilities_out.add(i) = u;
                    }
                }
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Solves the noisy-signal game by backward induction and returns a
/// solver handle. `memo_budget` of 0 means the default cap.
///
/// # Safety
/// `spec` must be a live handle; `out` must be valid and receives a handle
/// to release with `crg_solver_free`.
#[no_mangle]
pub unsafe extern "C" fn crg_solver_new(
    spec: *const CrgSpec,
    memo_budget: u64,
    out: *mut *mut CrgSolver,
) -> CrgStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else { return CrgStatus::NullPointer };
        if out.is_null() {
            return CrgStatus::NullPointer;
        }
        let budget = if memo_budget == 0 { DEFAULT_MEMO_BUDGET } else { memo_budget };
        match solve_game_with_budget(&spec.0, budget) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(CrgSolver(table)));
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases a solver handle. Null is ignored.
///
/// # Safety
/// `solver` must have come from `crg_solver_new` and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn crg_solver_free(solver: *mut CrgSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

unsafe fn build_context(
    table: &StrategyTable,
    position: u32,
    observed: *const u32,
    revealed: *const u32,
    own_signal: u32,
) -> Result<DecisionContext, CrgStatus> {
    let spec = table.spec();
    let k = spec.num_tables();
    let position = position as usize;
    if position == 0 || own_signal == 0 {
        return Err(CrgStatus::InvalidArgument);
    }
    let Some(observed) = slice_arg(observed, k) else { return Err(CrgStatus::NullPointer) };
    let Some(revealed) = slice_arg(revealed, position - 1) else {
        return Err(CrgStatus::NullPointer);
    };
    let mut history = SignalHistory::empty(spec);
    for &s in revealed {
        if s == 0 {
            return Err(CrgStatus::InvalidArgument);
        }
        history = history
            .extended(s as usize - 1, spec)
            .map_err(|e| status_of(&e))?;
    }
    DecisionContext::new(
        position,
        Grouping::new(observed.to_vec()),
        history,
        own_signal as usize - 1,
        spec,
    )
    .map_err(|e| status_of(&e))
}

/// Best response for a customer: `position` is their 1-based turn,
/// `observed` holds per-table occupancies (one per table), `revealed` the
/// `position - 1` earlier customers' signals, `own_signal` their own.
/// Writes the chosen 1-based table to `action_out`.
///
/// # Safety
/// `solver` must be a live handle; `observed` holds one entry per table;
/// `revealed` holds `position - 1` entries (may be null when empty);
/// `action_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crg_best_response(
    solver: *const CrgSolver,
    position: u32,
    observed: *const u32,
    revealed: *const u32,
    own_signal: u32,
    action_out: *mut u32,
) -> CrgStatus {
    guard(|| {
        let Some(solver) = solver.as_ref() else { return CrgStatus::NullPointer };
        if action_out.is_null() {
            return CrgStatus::NullPointer;
        }
        let ctx = match build_context(&solver.0, position, observed, revealed, own_signal) {
            Ok(ctx) => ctx,
            Err(status) => return status,
        };
        match solver.0.best_response(&ctx) {
            Ok(action) => {
                *action_out = action as u32 + 1;
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Expected final utility of committing to `table` (1-based) in the given
/// context.
///
/// # Safety
/// As for `crg_best_response`; `value_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn crg_expected_utility(
    solver: *const CrgSolver,
    position: u32,
    observed: *const u32,
    revealed: *const u32,
    own_signal: u32,
    table: u32,
    value_out: *mut f64,
) -> CrgStatus {
    guard(|| {
        let Some(solver) = solver.as_ref() else { return CrgStatus::NullPointer };
        if value_out.is_null() {
            return CrgStatus::NullPointer;
        }
        if table == 0 {
            return CrgStatus::InvalidArgument;
        }
        let ctx = match build_context(&solver.0, position, observed, revealed, own_signal) {
            Ok(ctx) => ctx,
            Err(status) => return status,
        };
        match solver.0.expected_utility(&ctx, table as usize - 1) {
            Ok(value) => {
                *value_out = value;
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Plays one full game for a known state and signal profile. `signals`
/// holds one 1-based entry per customer; `actions_out` and
/// `utilities_out` each take one entry per customer (either may be null).
///
/// # Safety
/// `solver` must be a live handle; `signals` holds one entry per
/// customer; non-null out arrays hold one entry per customer.
#[no_mangle]
pub unsafe extern "C" fn crg_simulate(
    solver: *const CrgSolver,
    state: u32,
    signals: *const u32,
    actions_out: *mut u32,
    utilities_out: *mut f64,
) -> CrgStatus {
    guard(|| {
        let Some(solver) = solver.as_ref() else { return CrgStatus::NullPointer };
        let spec = solver.0.spec();
        let n = spec.num_customers;
        if state == 0 || state as usize > spec.num_states() {
            return CrgStatus::InvalidArgument;
        }
        let Some(signals) = slice_arg(signals, n) else { return CrgStatus::NullPointer };
        if signals.iter().any(|&s| s == 0 || s as usize > spec.num_signals()) {
            return CrgStatus::InvalidArgument;
        }
        let zero_based: Vec<usize> = signals.iter().map(|&s| s as usize - 1).collect();
        match solver.0.simulate_realization(state as usize - 1, &zero_based) {
            Ok(record) => {
                if !actions_out.is_null() {
                    for (i, &a) in record.actions.iter().enumerate() {
                        *actions_out.add(i) = a as u32 + 1;
                    }
                }
                if !utilities_out.is_null() {
                    for (i, &u) in record.utilities.iter().enumerate() {
                        *utilities_out.add(i) = u;
                    }
                }
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Exact per-customer expected utilities under rational play, one entry
/// per customer.
///
/// # Safety
/// `spec` must be a live handle; `means_out` must hold one entry per
/// customer.
#[no_mangle]
pub unsafe extern "C" fn crg_exact_expectation(
    spec: *const CrgSpec,
    means_out: *mut f64,
) -> CrgStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else { return CrgStatus::NullPointer };
        if means_out.is_null() {
            return CrgStatus::NullPointer;
        }
        match exact_expectation(&spec.0) {
            Ok(means) => {
                for (i, &m) in means.iter().enumerate() {
                    *means_out.add(i) = m;
                }
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Seeded Monte Carlo means (and optionally standard errors), one entry
/// per customer. Bit-reproducible for a given seed.
///
/// # Safety
/// `spec` must be a live handle; `means_out` must hold one entry per
/// customer; `stderrs_out` may be null or hold one entry per customer.
#[no_mangle]
pub unsafe extern "C" fn crg_run_trials(
    spec: *const CrgSpec,
    trials: u64,
    seed: u64,
    means_out: *mut f64,
    stderrs_out: *mut f64,
) -> CrgStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else { return CrgStatus::NullPointer };
        if means_out.is_null() {
            return CrgStatus::NullPointer;
        }
        let config = ExperimentConfig::new(spec.0.clone(), trials, seed);
        match run_trials(&config) {
            Ok(result) => {
                for (i, &m) in result.means.iter().enumerate() {
                    *means_out.add(i) = m;
                }
                if !stderrs_out.is_null() {
                    for (i, &s) in result.stderrs.iter().enumerate() {
                        *stderrs_out.add(i) = s;
                    }
                }
                CrgStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
