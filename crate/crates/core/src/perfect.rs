//! Equilibrium machinery when every customer knows the true state: Nash
//! grouping verification, greedy equilibrium-grouping construction, pruning
//! of over-requested tables, and the sequential strategy built from both.

use crate::error::{Error, Result};
use crate::game::{argmax_table, utility, GameSpec, Grouping, StateIdx, TableIdx, UTILITY_TOL};

/// An occupancy vector over a subset of tables that no occupant wants to
/// leave: every seated customer does at least as well as they would by
/// moving to any other table (which would then hold one more customer).
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumGrouping {
    pub counts: Grouping,
    pub table_subset: Vec<TableIdx>,
    pub customers: u32,
}

fn util(spec: &GameSpec, table: TableIdx, state: StateIdx, occupancy: u32) -> f64 {
    utility(&spec.utility, spec.table_size(table, state), occupancy)
        .expect("occupancy is structurally >= 1")
}

/// No-profitable-switch check over `subset`: for every occupied table `x`
/// and every table `y`, staying at `x` is at least as good as joining `y`.
/// Comparisons tolerate `UTILITY_TOL` of rounding.
pub fn is_equilibrium_grouping(
    n: &Grouping,
    state: StateIdx,
    spec: &GameSpec,
    subset: &[TableIdx],
) -> bool {
    subset.iter().all(|&x| {
        if n.count(x) == 0 {
            return true;
        }
        let stay = util(spec, x, state, n.count(x));
        subset
            .iter()
            .all(|&y| stay >= util(spec, y, state, n.count(y) + 1) - UTILITY_TOL)
    })
}

/// Builds an equilibrium grouping over `subset` by seating `customers` one
/// at a time, each taking the table that maximizes the utility it would
/// get right now; ties go to the lowest table index.
pub fn equilibrium_grouping(
    subset: &[TableIdx],
    customers: u32,
    state: StateIdx,
    spec: &GameSpec,
) -> EquilibriumGrouping {
    assert!(!subset.is_empty(), "equilibrium grouping needs at least one table");
    let mut counts = Grouping::empty(spec.num_tables());
    for _ in 0..customers {
        let options: Vec<(TableIdx, f64)> = subset
            .iter()
            .map(|&x| (x, util(spec, x, state, counts.count(x) + 1)))
            .collect();
        counts.seat(argmax_table(&options).expect("nonempty subset"));
    }
    EquilibriumGrouping { counts, table_subset: subset.to_vec(), customers }
}

/// Drops tables that already hold more customers than their equilibrium
/// share and re-solves for the rest, iterating to a fixed point. The
/// returned set is the tables a newly arriving customer could still
/// rationally pick.
///
/// Each pass either removes a table or terminates, so the loop runs at
/// most `subset.len()` times.
pub fn prune_candidates(
    subset: &[TableIdx],
    observed: &Grouping,
    customers: u32,
    state: StateIdx,
    spec: &GameSpec,
) -> Vec<TableIdx> {
    let mut kept: Vec<TableIdx> = subset.to_vec();
    let mut budget = customers;
    for _pass in 0..=subset.len() {
        let eq = equilibrium_grouping(&kept, budget, state, spec);
        let next: Vec<TableIdx> = kept
            .iter()
            .copied()
            .filter(|&x| eq.counts.count(x) >= observed.count(x))
            .collect();
        if next.len() == kept.len() {
            return kept;
        }
        let dropped_occupants: u32 = subset
            .iter()
            .filter(|x| !next.contains(x))
            .map(|&x| observed.count(x))
            .sum();
        budget = customers.saturating_sub(dropped_occupants);
        kept = next;
    }
    unreachable!("pruning removes a table per pass and cannot loop past the table count");
}

/// The sequential-game strategy for the customer in `position` (1-based)
/// who observes `observed` seats already taken: among candidate tables not
/// yet filled to their equilibrium share, take the one whose equilibrium
/// utility is highest (lowest index on ties).
pub fn subgame_perfect_action(
    position: usize,
    observed: &Grouping,
    state: StateIdx,
    spec: &GameSpec,
) -> Result<TableIdx> {
    debug_assert_eq!(observed.total() as usize, position - 1);
    let all: Vec<TableIdx> = (0..spec.num_tables()).collect();
    let total = spec.num_customers as u32;
    let candidates = prune_candidates(&all, observed, total, state, spec);
    let budget = total.saturating_sub(
        all.iter()
            .filter(|x| !candidates.contains(x))
            .map(|&x| observed.count(x))
            .sum::<u32>(),
    );
    let eq = equilibrium_grouping(&candidates, budget, state, spec);
    let options: Vec<(TableIdx, f64)> = candidates
        .iter()
        .copied()
        .filter(|&x| observed.count(x) < eq.counts.count(x))
        .map(|x| (x, util(spec, x, state, eq.counts.count(x))))
        .collect();
    argmax_table(&options).ok_or_else(|| {
        Error::InternalInvariant(format!(
            "no feasible table at position {position} with observed {:?}",
            observed.counts()
        ))
    })
}

/// Actions, final seating, and realized utilities of one full game.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialOutcome {
    pub actions: Vec<TableIdx>,
    pub grouping: Grouping,
    pub utilities: Vec<f64>,
}

/// Plays all customers in order under the subgame-perfect strategy.
pub fn play_sequential_perfect(state: StateIdx, spec: &GameSpec) -> Result<SequentialOutcome> {
    let mut observed = Grouping::empty(spec.num_tables());
    let mut actions = Vec::with_capacity(spec.num_customers);
    for position in 1..=spec.num_customers {
        let action = subgame_perfect_action(position, &observed, state, spec)?;
        observed.seat(action);
        actions.push(action);
    }
    let utilities = actions
        .iter()
        .map(|&x| util(spec, x, state, observed.count(x)))
        .collect();
    Ok(SequentialOutcome { actions, grouping: observed, utilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::UtilityRule;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec_with_sizes(customers: usize, sizes: &[f64]) -> GameSpec {
        GameSpec::new(
            customers,
            sizes.iter().map(|&s| vec![s]).collect(),
            vec![1.0],
            vec![vec![1.0]],
            UtilityRule::Ratio,
        )
        .unwrap()
    }

    /// All ways to seat `total` customers across `tables` tables.
    fn all_groupings(total: u32, tables: usize) -> Vec<Vec<u32>> {
        if tables == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for first in 0..=total {
            for mut rest in all_groupings(total - first, tables - 1) {
                let mut g = vec![first];
                g.append(&mut rest);
                out.push(g);
            }
        }
        out
    }

    fn enumerate_equilibria(spec: &GameSpec, state: StateIdx) -> Vec<Vec<u32>> {
        let subset: Vec<TableIdx> = (0..spec.num_tables()).collect();
        all_groupings(spec.num_customers as u32, spec.num_tables())
            .into_iter()
            .filter(|g| is_equilibrium_grouping(&Grouping::new(g.clone()), state, spec, &subset))
            .collect()
    }

    #[test]
    fn equilibrium_check_hand_cases() {
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        let subset = [0, 1];
        assert!(is_equilibrium_grouping(&Grouping::new(vec![2, 1]), 0, &spec, &subset));
        // U(40,2)=20 < U(100,2)=50: an occupant of table 2 would move.
        assert!(!is_equilibrium_grouping(&Grouping::new(vec![1, 2]), 0, &spec, &subset));

        let sym = spec_with_sizes(2, &[100.0, 100.0]);
        assert!(is_equilibrium_grouping(&Grouping::new(vec![1, 1]), 0, &sym, &subset));
    }

    #[test]
    fn greedy_grouping_hand_cases() {
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        let eq = equilibrium_grouping(&[0, 1], 3, 0, &spec);
        assert_eq!(eq.counts.counts(), &[2, 1]);

        let spec5 = spec_with_sizes(5, &[100.0, 40.0]);
        let eq5 = equilibrium_grouping(&[0, 1], 5, 0, &spec5);
        assert_eq!(eq5.counts.counts(), &[4, 1]);

        let single = spec_with_sizes(4, &[60.0]);
        let eq1 = equilibrium_grouping(&[0], 4, 0, &single);
        assert_eq!(eq1.counts.counts(), &[4]);
    }

    #[test]
    fn greedy_result_is_always_an_equilibrium() {
        let spec = spec_with_sizes(6, &[90.0, 55.0, 20.0]);
        for n in 0..=6 {
            let eq = equilibrium_grouping(&[0, 1, 2], n, 0, &spec);
            assert!(is_equilibrium_grouping(&eq.counts, 0, &spec, &[0, 1, 2]));
            assert_eq!(eq.counts.total(), n);
        }
    }

    #[test]
    fn pruning_hand_cases() {
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        let subset = [0, 1];
        // Nothing over-requested.
        assert_eq!(
            prune_candidates(&subset, &Grouping::new(vec![0, 0]), 3, 0, &spec),
            vec![0, 1]
        );
        // Table 2 holds 2 but its equilibrium share is 1: dropped, and the
        // remaining budget re-solves to a single table.
        assert_eq!(
            prune_candidates(&subset, &Grouping::new(vec![0, 2]), 3, 0, &spec),
            vec![0]
        );
        // Table 1 full to its share exactly: fixed point immediately.
        assert_eq!(
            prune_candidates(&subset, &Grouping::new(vec![2, 0]), 3, 0, &spec),
            vec![0, 1]
        );
    }

    #[test]
    fn sequential_action_hand_cases() {
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        assert_eq!(subgame_perfect_action(1, &Grouping::new(vec![0, 0]), 0, &spec).unwrap(), 0);
        assert_eq!(subgame_perfect_action(3, &Grouping::new(vec![2, 0]), 0, &spec).unwrap(), 1);
        assert_eq!(subgame_perfect_action(3, &Grouping::new(vec![1, 1]), 0, &spec).unwrap(), 0);
    }

    #[test]
    fn full_play_hand_cases() {
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        let out = play_sequential_perfect(0, &spec).unwrap();
        assert_eq!(out.actions, vec![0, 0, 1]);
        assert_eq!(out.grouping.counts(), &[2, 1]);
        assert_eq!(out.utilities, vec![50.0, 50.0, 40.0]);

        let sym = spec_with_sizes(2, &[100.0, 100.0]);
        let out = play_sequential_perfect(0, &sym).unwrap();
        assert_eq!(out.grouping.counts(), &[1, 1]);

        let spec5 = spec_with_sizes(5, &[100.0, 40.0]);
        let out = play_sequential_perfect(0, &spec5).unwrap();
        assert_eq!(out.grouping.counts(), &[4, 1]);
    }

    /// Draws sizes until every no-switch inequality at the enumerated
    /// equilibrium is strict by more than the given margin.
    fn random_strict_instance(rng: &mut ChaCha8Rng, margin: f64) -> GameSpec {
        loop {
            let customers = rng.random_range(1..=6);
            let tables = rng.random_range(1..=3);
            let sizes: Vec<f64> = (0..tables).map(|_| rng.random_range(1.0..100.0)).collect();
            let spec = spec_with_sizes(customers, &sizes);
            let eqs = enumerate_equilibria(&spec, 0);
            if eqs.len() != 1 {
                continue;
            }
            let n = Grouping::new(eqs[0].clone());
            let subset: Vec<TableIdx> = (0..tables).collect();
            let strict = subset.iter().all(|&x| {
                n.count(x) == 0
                    || subset.iter().filter(|&&y| y != x).all(|&y| {
                        util(&spec, x, 0, n.count(x)) > util(&spec, y, 0, n.count(y) + 1) + margin
                    })
            });
            if strict {
                return spec;
            }
        }
    }

    #[test]
    fn greedy_matches_unique_enumerated_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let spec = random_strict_instance(&mut rng, 1e-6);
            let subset: Vec<TableIdx> = (0..spec.num_tables()).collect();
            let greedy = equilibrium_grouping(&subset, spec.num_customers as u32, 0, &spec);
            let eqs = enumerate_equilibria(&spec, 0);
            assert_eq!(eqs.len(), 1);
            assert_eq!(greedy.counts.counts(), eqs[0].as_slice());
        }
    }

    #[test]
    fn sequential_play_lands_on_equilibrium_grouping() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let spec = random_strict_instance(&mut rng, 1e-6);
            let subset: Vec<TableIdx> = (0..spec.num_tables()).collect();
            let out = play_sequential_perfect(0, &spec).unwrap();
            assert!(is_equilibrium_grouping(&out.grouping, 0, &spec, &subset));
            assert_eq!(
                out.grouping.counts(),
                equilibrium_grouping(&subset, spec.num_customers as u32, 0, &spec)
                    .counts
                    .counts()
            );
        }
    }

    #[test]
    fn earlier_positions_never_do_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let spec = random_strict_instance(&mut rng, 1e-6);
            let out = play_sequential_perfect(0, &spec).unwrap();
            for w in out.utilities.windows(2) {
                assert!(w[1] <= w[0] + UTILITY_TOL, "utilities {:?}", out.utilities);
            }
        }
    }

    #[test]
    fn no_single_deviation_improves_any_subgame() {
        // Every reachable subgame of the 100/40 instances, every customer,
        // every alternative table, with the rest continuing rationally.
        for customers in 3..=5usize {
            let spec = spec_with_sizes(customers, &[100.0, 40.0]);
            for position in 1..=customers {
                for observed in all_groupings(position as u32 - 1, 2) {
                    let observed = Grouping::new(observed);
                    let equilibrium_utility =
                        continue_from(&spec, position, observed.clone(), None);
                    for alt in 0..2 {
                        let deviated = continue_from(&spec, position, observed.clone(), Some(alt));
                        assert!(
                            deviated <= equilibrium_utility + UTILITY_TOL,
                            "position {position}, observed {:?}, alt {alt}",
                            observed.counts()
                        );
                    }
                }
            }
        }
    }

    /// Utility of the customer at `position` when they play `forced` (or
    /// the prescribed action) and everyone after plays the strategy.
    fn continue_from(
        spec: &GameSpec,
        position: usize,
        mut observed: Grouping,
        forced: Option<TableIdx>,
    ) -> f64 {
        let own = match forced {
            Some(t) => t,
            None => subgame_perfect_action(position, &observed, 0, spec).unwrap(),
        };
        observed.seat(own);
        for later in position + 1..=spec.num_customers {
            let action = subgame_perfect_action(later, &observed, 0, spec).unwrap();
            observed.seat(action);
        }
        util(spec, own, 0, observed.count(own))
    }

    #[test]
    fn equilibrium_check_ignores_customer_identities() {
        // Two action profiles that differ by swapping two customers induce
        // the same grouping, which is all the check sees.
        let spec = spec_with_sizes(3, &[100.0, 40.0]);
        let profile_a = [0, 0, 1];
        let profile_b = [1, 0, 0];
        let group = |profile: &[TableIdx]| {
            let mut g = Grouping::empty(2);
            for &x in profile {
                g.seat(x);
            }
            g
        };
        assert_eq!(group(&profile_a), group(&profile_b));
        assert!(is_equilibrium_grouping(&group(&profile_a), 0, &spec, &[0, 1]));
        assert!(is_equilibrium_grouping(&group(&profile_b), 0, &spec, &[0, 1]));
    }
}
