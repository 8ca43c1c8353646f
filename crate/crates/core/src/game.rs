//! Game definition: customers choosing among shared tables whose sizes
//! depend on a hidden state, with noisy signals and a congestion-sensitive
//! utility rule.
//!
//! Tables, states, and signals are indexed from 0 internally; the CLI and
//! the C ABI present them 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a table (0-based).
pub type TableIdx = usize;
/// Index of a hidden state (0-based).
pub type StateIdx = usize;
/// Index of a signal value (0-based).
pub type SignalIdx = usize;

/// Tolerance for probability-vector validity checks.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for utility comparisons; ties within this margin are broken
/// by lowest table index.
pub const UTILITY_TOL: f64 = 1e-9;

/// How a seated customer's utility is computed from the table size and the
/// number of customers sharing the table.
///
/// Any rule must be increasing in the size and non-increasing in the
/// occupancy; `validate_monotone` checks this over a finite grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityRule {
    /// Even split: utility = size / occupancy.
    Ratio,
    /// Explicit table: `values[i][n-1]` is the utility of a table of size
    /// `sizes[i]` shared by `n` customers.
    Table { sizes: Vec<f64>, values: Vec<Vec<f64>> },
}

/// Utility of one customer seated at a table of the given size together
/// with `occupancy - 1` others.
///
/// Occupancy 0 is a domain error: there is no seated customer to evaluate.
pub fn utility(rule: &UtilityRule, size: f64, occupancy: u32) -> Result<f64> {
    if occupancy == 0 {
        return Err(Error::ZeroOccupancy);
    }
    match rule {
        UtilityRule::Ratio => Ok(size / f64::from(occupancy)),
        UtilityRule::Table { sizes, values } => {
            let idx = sizes
                .iter()
                .position(|&s| (s - size).abs() <= PROB_TOL)
                .ok_or_else(|| Error::invalid("utility.sizes", format!("size {size} not tabulated")))?;
            values[idx]
                .get(occupancy as usize - 1)
                .copied()
                .ok_or_else(|| {
                    Error::invalid("utility.values", format!("occupancy {occupancy} not tabulated"))
                })
        }
    }
}

impl UtilityRule {
    /// Checks the monotonicity contract over the tabulated domain: strictly
    /// increasing in size at fixed occupancy, non-increasing in occupancy at
    /// fixed size. `Ratio` satisfies it by construction.
    pub fn validate_monotone(&self) -> Result<()> {
        let UtilityRule::Table { sizes, values } = self else {
            return Ok(());
        };
        if sizes.is_empty() || values.len() != sizes.len() {
            return Err(Error::invalid("utility.values", "one row per tabulated size"));
        }
        let depth = values[0].len();
        if depth == 0 || values.iter().any(|row| row.len() != depth) {
            return Err(Error::invalid("utility.values", "rows must be nonempty and equal length"));
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("utility.sizes", "must be strictly increasing"));
        }
        for rows in values.windows(2) {
            if rows[0].iter().zip(&rows[1]).any(|(small, large)| large <= small) {
                return Err(Error::invalid(
                    "utility.values",
                    "must be strictly increasing in size",
                ));
            }
        }
        for row in values {
            if row.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::invalid(
                    "utility.values",
                    "must be non-increasing in occupancy",
                ));
            }
        }
        Ok(())
    }
}

/// Occupancy counts per table, either as observed mid-game or final.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grouping {
    counts: Vec<u32>,
}

impl Grouping {
    pub fn new(counts: Vec<u32>) -> Self {
        Grouping { counts }
    }

    /// All tables empty.
    pub fn empty(num_tables: usize) -> Self {
        Grouping { counts: vec![0; num_tables] }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, table: TableIdx) -> u32 {
        self.counts[table]
    }

    pub fn num_tables(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Seat one more customer at `table`.
    pub fn seat(&mut self, table: TableIdx) {
        self.counts[table] += 1;
    }

    /// Copy with one more customer at `table`.
    pub fn seated(&self, table: TableIdx) -> Self {
        let mut next = self.clone();
        next.seat(table);
        next
    }
}

/// Full definition of one game instance.
///
/// `table_sizes[j][l]` is the size of table `j` in state `l`;
/// `signal_model[s][l]` is the probability of observing signal `s` when the
/// state is `l` (columns sum to 1). Size 0 is allowed and models a table
/// that is worthless in that state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub num_customers: usize,
    pub table_sizes: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
    pub signal_model: Vec<Vec<f64>>,
    pub utility: UtilityRule,
}

impl GameSpec {
    pub fn new(
        num_customers: usize,
        table_sizes: Vec<Vec<f64>>,
        prior: Vec<f64>,
        signal_model: Vec<Vec<f64>>,
        utility: UtilityRule,
    ) -> Result<Self> {
        let spec = GameSpec { num_customers, table_sizes, prior, signal_model, utility };
        spec.validate()?;
        Ok(spec)
    }

    /// The two-table, two-state mirrored instance used throughout the
    /// experiment harness: one table of size 100 and one of size `100 r`,
    /// with the state deciding which is which, uniform prior, binary
    /// signals of quality `p`, and even-split utility.
    pub fn binary_mirrored(num_customers: usize, p: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::invalid("ratio", "must lie in [0, 1]"));
        }
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::invalid("signal_p", "must lie in [0.5, 1]"));
        }
        GameSpec::new(
            num_customers,
            vec![vec![100.0, 100.0 * r], vec![100.0 * r, 100.0]],
            vec![0.5, 0.5],
            vec![vec![p, 1.0 - p], vec![1.0 - p, p]],
            UtilityRule::Ratio,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_customers == 0 {
            return Err(Error::invalid("customers", "must be positive"));
        }
        let k = self.table_sizes.len();
        if k == 0 {
            return Err(Error::invalid("sizes", "need at least one table"));
        }
        let l = self.prior.len();
        if l == 0 {
            return Err(Error::invalid("prior", "need at least one state"));
        }
        for (j, row) in self.table_sizes.iter().enumerate() {
            if row.len() != l {
                return Err(Error::invalid("sizes", format!("table {} has {} entries, expected {l}", j + 1, row.len())));
            }
            if row.iter().any(|&s| !s.is_finite() || s < 0.0) {
                return Err(Error::invalid("sizes", format!("table {} has a negative or non-finite size", j + 1)));
            }
        }
        validate_prob_vec("prior", &self.prior)?;
        if self.signal_model.is_empty() {
            return Err(Error::invalid("signal_model", "need at least one signal value"));
        }
        for (s, row) in self.signal_model.iter().enumerate() {
            if row.len() != l {
                return Err(Error::invalid(
                    "signal_model",
                    format!("signal {} has {} entries, expected {l}", s + 1, row.len()),
                ));
            }
            if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::invalid("signal_model", "entries must be nonnegative"));
            }
        }
        for state in 0..l {
            let col: f64 = self.signal_model.iter().map(|row| row[state]).sum();
            if (col - 1.0).abs() > PROB_TOL {
                return Err(Error::invalid(
                    "signal_model",
                    format!("column for state {} sums to {col}, expected 1", state + 1),
                ));
            }
        }
        self.utility.validate_monotone()?;
        // A tabulated rule must cover every size that can occur and every
        // occupancy up to a full table, so utility lookups cannot fail
        // mid-solve.
        if let UtilityRule::Table { sizes, values } = &self.utility {
            if values[0].len() < self.num_customers {
                return Err(Error::invalid(
                    "utility.values",
                    format!("rows must cover occupancies 1..={}", self.num_customers),
                ));
            }
            for (j, row) in self.table_sizes.iter().enumerate() {
                for &size in row {
                    if !sizes.iter().any(|&s| (s - size).abs() <= PROB_TOL) {
                        return Err(Error::invalid(
                            "utility.sizes",
                            format!("table {} size {size} is not tabulated", j + 1),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_tables(&self) -> usize {
        self.table_sizes.len()
    }

    pub fn num_states(&self) -> usize {
        self.prior.len()
    }

    pub fn num_signals(&self) -> usize {
        self.signal_model.len()
    }

    pub fn table_size(&self, table: TableIdx, state: StateIdx) -> f64 {
        self.table_sizes[table][state]
    }

    /// Probability of observing `signal` when the state is `state`.
    pub fn signal_prob(&self, signal: SignalIdx, state: StateIdx) -> f64 {
        self.signal_model[signal][state]
    }

    /// Utility of one customer at `table` in `state` with the given final
    /// occupancy.
    pub fn table_utility(&self, table: TableIdx, state: StateIdx, occupancy: u32) -> Result<f64> {
        utility(&self.utility, self.table_size(table, state), occupancy)
    }
}

/// Lowest-indexed entry whose value is within `UTILITY_TOL` of the
/// maximum. This tie-break rule is normative: the solvers' golden outputs
/// depend on it.
pub(crate) fn argmax_table(options: &[(TableIdx, f64)]) -> Option<TableIdx> {
    let max = options.iter().map(|&(_, u)| u).fold(f64::NEG_INFINITY, f64::max);
    options
        .iter()
        .find(|&&(_, u)| u >= max - UTILITY_TOL)
        .map(|&(x, _)| x)
}

pub(crate) fn validate_prob_vec(field: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::invalid(field, "entries must be nonnegative"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::invalid(field, format!("sums to {sum}, expected 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_utility_values() {
        assert_eq!(utility(&UtilityRule::Ratio, 100.0, 2).unwrap(), 50.0);
        assert_eq!(utility(&UtilityRule::Ratio, 40.0, 1).unwrap(), 40.0);
        assert_eq!(utility(&UtilityRule::Ratio, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn zero_occupancy_is_domain_error() {
        assert!(matches!(
            utility(&UtilityRule::Ratio, 100.0, 0),
            Err(Error::ZeroOccupancy)
        ));
    }

    #[test]
    fn ratio_utility_monotone_on_grid() {
        let sizes = [0.0, 10.0, 40.0, 100.0];
        for n in 1..=6u32 {
            for w in sizes.windows(2) {
                let lo = utility(&UtilityRule::Ratio, w[0], n).unwrap();
                let hi = utility(&UtilityRule::Ratio, w[1], n).unwrap();
                assert!(hi > lo);
            }
        }
        for &s in &sizes {
            for n in 1..6u32 {
                let now = utility(&UtilityRule::Ratio, s, n).unwrap();
                let next = utility(&UtilityRule::Ratio, s, n + 1).unwrap();
                assert!(next <= now);
            }
        }
    }

    #[test]
    fn custom_table_rule_lookup_and_validation() {
        let rule = UtilityRule::Table {
            sizes: vec![40.0, 100.0],
            values: vec![vec![40.0, 20.0, 10.0], vec![100.0, 50.0, 25.0]],
        };
        rule.validate_monotone().unwrap();
        assert_eq!(utility(&rule, 100.0, 2).unwrap(), 50.0);
        assert_eq!(utility(&rule, 40.0, 3).unwrap(), 10.0);

        let bad = UtilityRule::Table {
            sizes: vec![40.0, 100.0],
            values: vec![vec![40.0, 45.0], vec![100.0, 50.0]],
        };
        assert!(bad.validate_monotone().is_err());
    }

    #[test]
    fn mirrored_spec_shape() {
        let spec = GameSpec::binary_mirrored(3, 0.9, 0.4).unwrap();
        assert_eq!(spec.num_tables(), 2);
        assert_eq!(spec.num_states(), 2);
        assert_eq!(spec.num_signals(), 2);
        assert_eq!(spec.table_size(0, 0), 100.0);
        assert_eq!(spec.table_size(0, 1), 40.0);
        assert_eq!(spec.table_size(1, 0), 40.0);
        assert_eq!(spec.signal_prob(0, 0), 0.9);
        assert!((spec.signal_prob(1, 0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(GameSpec::new(
            2,
            vec![vec![100.0], vec![40.0]],
            vec![0.6, 0.4],
            vec![vec![1.0], vec![0.0]],
            UtilityRule::Ratio,
        )
        .is_err()); // sizes rows shorter than prior

        assert!(GameSpec::new(
            2,
            vec![vec![100.0, 40.0]],
            vec![0.6, 0.41],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            UtilityRule::Ratio,
        )
        .is_err()); // prior does not sum to 1

        assert!(GameSpec::new(
            2,
            vec![vec![100.0, 40.0]],
            vec![0.5, 0.5],
            vec![vec![0.9, 0.2], vec![0.1, 0.9]],
            UtilityRule::Ratio,
        )
        .is_err()); // signal column sums to 1.1
    }

    #[test]
    fn tabulated_rule_must_cover_the_game() {
        let rule = UtilityRule::Table {
            sizes: vec![40.0, 100.0],
            values: vec![vec![40.0, 20.0], vec![100.0, 50.0]],
        };
        // Depth 2 cannot seat three customers at one table.
        let err = GameSpec::new(
            3,
            vec![vec![100.0, 40.0], vec![40.0, 100.0]],
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            rule.clone(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("occupancies"), "{err}");

        // A size missing from the table is caught up front.
        let err = GameSpec::new(
            2,
            vec![vec![100.0, 30.0], vec![30.0, 100.0]],
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            rule,
        )
        .unwrap_err();
        assert!(err.to_string().contains("not tabulated"), "{err}");
    }

    #[test]
    fn zero_size_table_is_allowed() {
        let spec = GameSpec::binary_mirrored(3, 0.9, 0.0).unwrap();
        assert_eq!(spec.table_size(1, 0), 0.0);
        assert_eq!(spec.table_utility(1, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn grouping_counts() {
        let mut g = Grouping::empty(2);
        g.seat(0);
        g.seat(0);
        g.seat(1);
        assert_eq!(g.counts(), &[2, 1]);
        assert_eq!(g.total(), 3);
        assert_eq!(g.seated(1).counts(), &[2, 2]);
        assert_eq!(g.counts(), &[2, 1]);
    }
}
