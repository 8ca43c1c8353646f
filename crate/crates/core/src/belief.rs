//! Belief arithmetic: Bayesian posteriors over the hidden state from the
//! prior, revealed signal histories, and a customer's own signal.

use crate::error::{Error, Result};
use crate::game::{validate_prob_vec, GameSpec, SignalIdx, StateIdx};

/// Probability vector over the hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_prob_vec("belief", &probs)?;
        Ok(Belief { probs })
    }

    pub fn uniform(num_states: usize) -> Self {
        Belief { probs: vec![1.0 / num_states as f64; num_states] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: StateIdx) -> f64 {
        self.probs[state]
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleObservation);
        }
        Ok(Belief { probs: weights.into_iter().map(|w| w / total).collect() })
    }
}

/// One Bayes step: condition `prior` on a single observed signal.
pub fn belief_update(prior: &Belief, signal: SignalIdx, spec: &GameSpec) -> Result<Belief> {
    Belief::from_weights(
        prior
            .probs()
            .iter()
            .enumerate()
            .map(|(l, &g)| g * spec.signal_prob(signal, l))
            .collect(),
    )
}

/// An ordered record of revealed signals together with the per-state
/// likelihood statistic they induce.
///
/// The statistic is the product of signal likelihoods per state, normalized
/// to sum to 1. It is computed canonically from the per-signal counts, so
/// two histories with the same signal counts carry bit-identical statistics
/// regardless of order; that is what lets solver memo keys collapse the
/// exponential space of orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalHistory {
    signals: Vec<SignalIdx>,
    counts: Vec<u32>,
    stat: Vec<f64>,
}

impl SignalHistory {
    pub fn empty(spec: &GameSpec) -> Self {
        SignalHistory {
            signals: Vec::new(),
            counts: vec![0; spec.num_signals()],
            stat: vec![1.0 / spec.num_states() as f64; spec.num_states()],
        }
    }

    pub fn from_signals(signals: &[SignalIdx], spec: &GameSpec) -> Result<Self> {
        let mut h = SignalHistory::empty(spec);
        for &s in signals {
            h = h.extended(s, spec)?;
        }
        Ok(h)
    }

    /// Copy of this history with one more revealed signal.
    ///
    /// Fails with an impossible-observation error when the extended history
    /// has zero likelihood under every state.
    pub fn extended(&self, signal: SignalIdx, spec: &GameSpec) -> Result<Self> {
        if signal >= spec.num_signals() {
            return Err(Error::invalid("signal", format!("index {signal} out of range")));
        }
        let mut signals = self.signals.clone();
        signals.push(signal);
        let mut counts = self.counts.clone();
        counts[signal] += 1;
        let stat = likelihood_stat(&counts, spec)?;
        Ok(SignalHistory { signals, counts, stat })
    }

    pub fn signals(&self) -> &[SignalIdx] {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Number of occurrences of each signal value.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Normalized per-state likelihood of the recorded signals.
    pub fn likelihood_stat(&self) -> &[f64] {
        &self.stat
    }
}

fn likelihood_stat(counts: &[u32], spec: &GameSpec) -> Result<Vec<f64>> {
    let weights: Vec<f64> = (0..spec.num_states())
        .map(|l| {
            counts
                .iter()
                .enumerate()
                .map(|(s, &c)| spec.signal_prob(s, l).powi(c as i32))
                .product()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Posterior over states given the prior, a revealed history, and
/// optionally the customer's own signal.
///
/// Equivalent to folding `belief_update` over the history and then the own
/// signal; the factored form works directly off the history's likelihood
/// statistic.
pub fn belief_from_history(
    prior: &Belief,
    history: &SignalHistory,
    own_signal: Option<SignalIdx>,
    spec: &GameSpec,
) -> Result<Belief> {
    Belief::from_weights(
        (0..spec.num_states())
            .map(|l| {
                let own = own_signal.map_or(1.0, |s| spec.signal_prob(s, l));
                prior.prob(l) * history.likelihood_stat()[l] * own
            })
            .collect(),
    )
}

/// Convenience: prior taken from the spec.
pub fn posterior(
    history: &SignalHistory,
    own_signal: Option<SignalIdx>,
    spec: &GameSpec,
) -> Result<Belief> {
    let prior = Belief::new(spec.prior.clone())?;
    belief_from_history(&prior, history, own_signal, spec)
}
