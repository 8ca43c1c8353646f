//! Backward-induction solver for the sequential game with noisy signals.
//!
//! A customer deciding at position `i` knows the seats taken so far, the
//! signals revealed by earlier customers, and their own signal. To value a
//! candidate table the solver predicts how many later customers will join
//! it: each successor's choice is a function of the signal they will draw
//! (the signal space partitions by best response), so the count of future
//! joiners follows a distribution computed recursively from the last
//! customer backwards.
//!
//! Contexts are memoized by `(position, observed grouping, history
//! likelihood statistic, own signal)`. Keying on the likelihood statistic
//! rather than the raw history collapses the exponential space of signal
//! orderings: conditionally i.i.d. signals make the statistic sufficient,
//! and the observed grouping carries no extra state information.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::belief::{posterior, Belief, SignalHistory};
use crate::error::{Error, Result};
use crate::game::{argmax_table, GameSpec, Grouping, SignalIdx, StateIdx, TableIdx};

/// Default cap on the number of memoized contexts.
pub const DEFAULT_MEMO_BUDGET: u64 = 10_000_000;

/// Everything a customer knows when choosing a table.
#[derive(Debug, Clone)]
pub struct DecisionContext {
    /// 1-based turn order.
    pub position: usize,
    /// Seats taken by the `position - 1` earlier customers.
    pub observed: Grouping,
    /// Signals revealed by earlier customers.
    pub history: SignalHistory,
    /// The customer's own private signal.
    pub own_signal: SignalIdx,
}

impl DecisionContext {
    pub fn new(
        position: usize,
        observed: Grouping,
        history: SignalHistory,
        own_signal: SignalIdx,
        spec: &GameSpec,
    ) -> Result<Self> {
        if position == 0 || position > spec.num_customers {
            return Err(Error::invalid("context.position", "must lie in 1..=customers"));
        }
        if observed.num_tables() != spec.num_tables() {
            return Err(Error::invalid("context.observed", "one count per table"));
        }
        if observed.total() as usize != position - 1 {
            return Err(Error::invalid(
                "context.observed",
                format!("{} seats taken, expected {}", observed.total(), position - 1),
            ));
        }
        if history.len() != position - 1 {
            return Err(Error::invalid(
                "context.history",
                format!("{} signals revealed, expected {}", history.len(), position - 1),
            ));
        }
        if own_signal >= spec.num_signals() {
            return Err(Error::invalid("context.own_signal", "signal index out of range"));
        }
        Ok(DecisionContext { position, observed, history, own_signal })
    }
}

/// One simulated play of the game.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub state: StateIdx,
    pub signals: Vec<SignalIdx>,
    pub actions: Vec<TableIdx>,
    pub grouping: Grouping,
    pub utilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ContextKey {
    position: u32,
    counts: Vec<u32>,
    stat: Vec<u64>,
    signal: u32,
}

fn quantize(stat: &[f64]) -> Vec<u64> {
    stat.iter().map(|&x| (x * 1e12).round() as u64).collect()
}

/// Solved decision data for one context.
#[derive(Debug, Clone)]
pub struct ContextEntry {
    /// Posterior over states given history and own signal.
    pub belief: Belief,
    /// Expected final utility of committing to each table.
    pub expected_utilities: Vec<f64>,
    /// Best response; lowest index on ties.
    pub chosen: TableIdx,
    /// `pmfs[action][table][state][x]` is the probability that exactly `x`
    /// of the customers from this position on (including this one) end up
    /// at `table`, given this customer picks `action` and the state is as
    /// indexed. `None` for states the context rules out.
    pmfs: Vec<Vec<Vec<Option<Vec<f64>>>>>,
}

impl ContextEntry {
    pub fn successor_pmf(&self, action: TableIdx, table: TableIdx, state: StateIdx) -> Option<&[f64]> {
        self.pmfs[action][table][state].as_deref()
    }
}

/// Memoized best-response solution of a game instance.
///
/// Entries are computed lazily and at most once; concurrent lookups of the
/// same context may race to compute it, but the first inserted value wins
/// and all callers observe that one.
#[derive(Debug)]
pub struct StrategyTable {
    spec: GameSpec,
    budget: u64,
    memo: RwLock<HashMap<ContextKey, Arc<ContextEntry>>>,
}

/// Solves the game under the default memo budget and populates every
/// context reachable from the start of play.
pub fn solve_game(spec: &GameSpec) -> Result<StrategyTable> {
    solve_game_with_budget(spec, DEFAULT_MEMO_BUDGET)
}

/// As [`solve_game`] with an explicit memo budget.
pub fn solve_game_with_budget(spec: &GameSpec, budget: u64) -> Result<StrategyTable> {
    let table = StrategyTable::with_budget(spec.clone(), budget)?;
    table.populate_reachable()?;
    Ok(table)
}

impl StrategyTable {
    pub fn new(spec: GameSpec) -> Result<Self> {
        StrategyTable::with_budget(spec, DEFAULT_MEMO_BUDGET)
    }

    pub fn with_budget(spec: GameSpec, budget: u64) -> Result<Self> {
        spec.validate()?;
        let required = worst_case_contexts(&spec);
        if required > u128::from(budget) {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(StrategyTable { spec, budget, memo: RwLock::new(HashMap::new()) })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    /// Number of memoized contexts.
    pub fn memo_len(&self) -> usize {
        self.memo.read().unwrap().len()
    }

    /// Computes (or fetches) the solved entry for a context.
    pub fn entry(&self, ctx: &DecisionContext) -> Result<Arc<ContextEntry>> {
        let key = ContextKey {
            position: ctx.position as u32,
            counts: ctx.observed.counts().to_vec(),
            stat: quantize(ctx.history.likelihood_stat()),
            signal: ctx.own_signal as u32,
        };
        if let Some(hit) = self.memo.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let computed = Arc::new(self.compute_entry(ctx)?);
        let mut memo = self.memo.write().unwrap();
        if !memo.contains_key(&key) && memo.len() as u64 >= self.budget {
            return Err(Error::BudgetExceeded {
                required: memo.len() as u128 + 1,
                budget: self.budget,
            });
        }
        Ok(memo.entry(key).or_insert(computed).clone())
    }

    /// The table this customer should pick.
    pub fn best_response(&self, ctx: &DecisionContext) -> Result<TableIdx> {
        Ok(self.entry(ctx)?.chosen)
    }

    /// Expected final utility of committing to `table` in this context,
    /// averaging over states and over the distribution of later joiners.
    pub fn expected_utility(&self, ctx: &DecisionContext, table: TableIdx) -> Result<f64> {
        if table >= self.spec.num_tables() {
            return Err(Error::invalid("table", "index out of range"));
        }
        Ok(self.entry(ctx)?.expected_utilities[table])
    }

    /// Best response as a function of the customer's own signal, holding
    /// the rest of the context fixed: element `s` is the table chosen on
    /// signal `s`. The preimages partition the signal space.
    pub fn signal_partition(
        &self,
        position: usize,
        observed: &Grouping,
        history: &SignalHistory,
    ) -> Result<Vec<TableIdx>> {
        (0..self.spec.num_signals())
            .map(|s| {
                let ctx = DecisionContext::new(
                    position,
                    observed.clone(),
                    history.clone(),
                    s,
                    &self.spec,
                )?;
                self.best_response(&ctx)
            })
            .collect()
    }

    /// Distribution of how many customers from `ctx.position` on (including
    /// that customer) end up at `table`, given the customer picks `action`
    /// and the true state is `state`. Support is `0..=N - position + 1`.
    pub fn successor_distribution(
        &self,
        ctx: &DecisionContext,
        action: TableIdx,
        state: StateIdx,
        table: TableIdx,
    ) -> Result<Vec<f64>> {
        if action >= self.spec.num_tables() || table >= self.spec.num_tables() {
            return Err(Error::invalid("table", "index out of range"));
        }
        if state >= self.spec.num_states() {
            return Err(Error::invalid("state", "index out of range"));
        }
        let entry = self.entry(ctx)?;
        entry
            .successor_pmf(action, table, state)
            .map(<[f64]>::to_vec)
            .ok_or(Error::ImpossibleObservation)
    }

    /// Populates the memo for every context reachable from the start of
    /// play; returns the number of memoized contexts.
    pub fn populate_reachable(&self) -> Result<usize> {
        let spec = &self.spec;
        let observed = Grouping::empty(spec.num_tables());
        let history = SignalHistory::empty(spec);
        for s in 0..spec.num_signals() {
            let marginal: f64 = (0..spec.num_states())
                .map(|l| spec.prior[l] * spec.signal_prob(s, l))
                .sum();
            if marginal <= 0.0 {
                continue;
            }
            let ctx = DecisionContext::new(1, observed.clone(), history.clone(), s, spec)?;
            self.entry(&ctx)?;
        }
        Ok(self.memo_len())
    }

    /// Action sequence induced by a full signal profile when every
    /// customer plays their best response.
    pub fn replay_actions(&self, signals: &[SignalIdx]) -> Result<Vec<TableIdx>> {
        self.replay_with(signals, |_, best| best)
    }

    /// As [`Self::replay_actions`], but `modify(position, best)` decides the
    /// action actually taken at each position. Later customers respond to
    /// the actions actually observed while still presuming rational play
    /// for everyone after themselves.
    pub fn replay_with(
        &self,
        signals: &[SignalIdx],
        mut modify: impl FnMut(usize, TableIdx) -> TableIdx,
    ) -> Result<Vec<TableIdx>> {
        let spec = &self.spec;
        if signals.len() != spec.num_customers {
            return Err(Error::invalid(
                "signals",
                format!("{} signals for {} customers", signals.len(), spec.num_customers),
            ));
        }
        let mut observed = Grouping::empty(spec.num_tables());
        let mut history = SignalHistory::empty(spec);
        let mut actions = Vec::with_capacity(signals.len());
        for (idx, &s) in signals.iter().enumerate() {
            let position = idx + 1;
            let ctx = DecisionContext::new(position, observed.clone(), history.clone(), s, spec)?;
            let best = self.entry(&ctx).map_err(|e| match e {
                Error::ImpossibleObservation => Error::UnreachableContext(format!(
                    "signal {} at position {position} contradicts the revealed history",
                    s + 1
                )),
                other => other,
            })?;
            let action = modify(position, best.chosen);
            if action >= spec.num_tables() {
                return Err(Error::invalid("action", "index out of range"));
            }
            observed.seat(action);
            history = history.extended(s, spec)?;
            actions.push(action);
        }
        Ok(actions)
    }

    /// Executes the solved strategy on one signal draw and scores it
    /// against the true state.
    pub fn simulate_realization(&self, state: StateIdx, signals: &[SignalIdx]) -> Result<TrialRecord> {
        if state >= self.spec.num_states() {
            return Err(Error::invalid("state", "index out of range"));
        }
        let actions = self.replay_actions(signals)?;
        self.record_outcome(state, signals, actions)
    }

    /// Builds the trial record for an already-determined action sequence.
    pub fn record_outcome(
        &self,
        state: StateIdx,
        signals: &[SignalIdx],
        actions: Vec<TableIdx>,
    ) -> Result<TrialRecord> {
        let mut grouping = Grouping::empty(self.spec.num_tables());
        for &x in &actions {
            grouping.seat(x);
        }
        let utilities = actions
            .iter()
            .map(|&x| self.spec.table_utility(x, state, grouping.count(x)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(TrialRecord { state, signals: signals.to_vec(), actions, grouping, utilities })
    }

    fn compute_entry(&self, ctx: &DecisionContext) -> Result<ContextEntry> {
        let spec = &self.spec;
        let n = spec.num_customers;
        let tables = spec.num_tables();
        let states = spec.num_states();
        let belief = posterior(&ctx.history, Some(ctx.own_signal), spec)?;
        let live: Vec<bool> = belief.probs().iter().map(|&g| g > 0.0).collect();

        // Count of joiners from this position on, including this customer:
        // support 0..=horizon, so each pmf has horizon + 1 slots.
        let horizon = n - ctx.position + 1;
        let mut pmfs: Vec<Vec<Vec<Option<Vec<f64>>>>> =
            vec![vec![vec![None; states]; tables]; tables];

        if ctx.position == n {
            // Last customer: the count at `table` is exactly 1 if they sit
            // there, 0 otherwise, whatever the state.
            for (action, by_table) in pmfs.iter_mut().enumerate() {
                for (table, by_state) in by_table.iter_mut().enumerate() {
                    let pmf = if action == table { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
                    for slot in by_state.iter_mut() {
                        *slot = Some(pmf.clone());
                    }
                }
            }
        } else {
            let next_history = ctx.history.extended(ctx.own_signal, spec)?;
            for (action, by_table) in pmfs.iter_mut().enumerate() {
                let next_observed = ctx.observed.seated(action);
                // acc[table][state]: distribution of joiners after this
                // customer, averaged over the successor's signal draw.
                let mut acc = vec![vec![vec![0.0f64; horizon]; states]; tables];
                for s in 0..spec.num_signals() {
                    let relevant: Vec<StateIdx> = (0..states)
                        .filter(|&l| live[l] && spec.signal_prob(s, l) > 0.0)
                        .collect();
                    if relevant.is_empty() {
                        continue;
                    }
                    let child_ctx = DecisionContext::new(
                        ctx.position + 1,
                        next_observed.clone(),
                        next_history.clone(),
                        s,
                        spec,
                    )?;
                    let child = self.entry(&child_ctx)?;
                    for (table, acc_by_state) in acc.iter_mut().enumerate() {
                        for &l in &relevant {
                            let weight = spec.signal_prob(s, l);
                            let child_pmf =
                                child.successor_pmf(child.chosen, table, l).ok_or_else(|| {
                                    Error::InternalInvariant(
                                        "successor pmf missing for a live state".into(),
                                    )
                                })?;
                            for (slot, &p) in acc_by_state[l].iter_mut().zip(child_pmf) {
                                *slot += weight * p;
                            }
                        }
                    }
                }
                for (table, by_state) in by_table.iter_mut().enumerate() {
                    for (l, slot) in by_state.iter_mut().enumerate() {
                        if !live[l] {
                            continue;
                        }
                        let tail = &acc[table][l];
                        let mut pmf = Vec::with_capacity(horizon + 1);
                        if action == table {
                            // This customer occupies a seat: shift by one.
                            pmf.push(0.0);
                            pmf.extend_from_slice(tail);
                        } else {
                            pmf.extend_from_slice(tail);
                            pmf.push(0.0);
                        }
                        *slot = Some(pmf);
                    }
                }
            }
        }

        let expected_utilities: Vec<f64> = (0..tables)
            .map(|j| {
                let mut eu = 0.0;
                for l in 0..states {
                    if !live[l] {
                        continue;
                    }
                    let pmf = pmfs[j][j][l].as_ref().expect("diagonal pmf exists for live state");
                    for (x, &p) in pmf.iter().enumerate() {
                        if p == 0.0 {
                            continue;
                        }
                        let occupancy = ctx.observed.count(j) + x as u32;
                        eu += belief.prob(l) * p * spec.table_utility(j, l, occupancy)?;
                    }
                }
                Ok(eu)
            })
            .collect::<Result<Vec<f64>>>()?;

        let options: Vec<(TableIdx, f64)> =
            expected_utilities.iter().copied().enumerate().collect();
        let chosen = argmax_table(&options)
            .ok_or_else(|| Error::InternalInvariant("no tables to choose from".into()))?;

        Ok(ContextEntry { belief, expected_utilities, chosen, pmfs })
    }
}

/// Upper bound on the number of distinct contexts: groupings of `i - 1`
/// customers times signal-count multisets of size `i - 1` times own-signal
/// values, summed over positions.
pub fn worst_case_contexts(spec: &GameSpec) -> u128 {
    let mut total: u128 = 0;
    for position in 1..=spec.num_customers {
        let seen = (position - 1) as u128;
        let groupings = compositions(seen, spec.num_tables() as u128);
        let stats = compositions(seen, spec.num_signals() as u128);
        total = total.saturating_add(
            groupings
                .saturating_mul(stats)
                .saturating_mul(spec.num_signals() as u128),
        );
    }
    total
}

/// Number of ways to write `n` as an ordered sum of `k` nonnegative parts.
fn compositions(n: u128, k: u128) -> u128 {
    binomial(n + k - 1, k - 1)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut result: u128 = 1;
    for i in 0..k {
        result = match result.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    result
}
