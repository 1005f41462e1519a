//! Two-state rate automaton over per-bucket document counts.
//!
//! In bucket `i` with `n_i` documents of which `k_i` contain the word, a
//! state with rate `θ` scores `k_i ln θ + (n_i - k_i) ln(1 - θ)`. The
//! binomial coefficient is the same for both states and is left out.
//! Switching state costs `ln p`, staying costs `ln(1 - p)`, and the automaton
//! sits in the low state before the first bucket.

use serde::{Deserialize, Serialize};

use super::BurstError;
use crate::corpus::BucketCount;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    /// Base rate `alpha`.
    Low,
    /// Elevated rate `c * alpha`.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomatonParams<R> {
    /// Probability of switching state between consecutive buckets.
    pub transition: R,
    /// High-state rate multiplier `c > 1`.
    pub multiplier: R,
    /// Low-state rate `alpha`.
    pub base_rate: R,
}

impl<R: Real> AutomatonParams<R> {
    pub fn new(transition: R, multiplier: R, base_rate: R) -> Result<Self, BurstError> {
        let params = Self {
            transition,
            multiplier,
            base_rate,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), BurstError> {
        let (zero, one) = (R::zero(), R::one());
        if !(self.transition > zero && self.transition < one) {
            return Err(BurstError::InvalidParams(format!(
                "transition probability {} not in (0, 1)",
                self.transition
            )));
        }
        if !(self.multiplier > one) {
            return Err(BurstError::InvalidParams(format!(
                "multiplier {} must exceed 1",
                self.multiplier
            )));
        }
        if !(self.base_rate > zero && self.high_rate() < one) {
            return Err(BurstError::InvalidParams(format!(
                "rates {} and {} must lie in (0, 1)",
                self.base_rate,
                self.high_rate()
            )));
        }
        Ok(())
    }

    pub fn high_rate(&self) -> R {
        self.multiplier * self.base_rate
    }

    pub fn rate(&self, state: State) -> R {
        match state {
            State::Low => self.base_rate,
            State::High => self.high_rate(),
        }
    }
}

/// Log-probabilities precomputed from one parameter set.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogModel<R> {
    switch: R,
    stay: R,
    low: (R, R),
    high: (R, R),
}

impl<R: Real> LogModel<R> {
    pub(crate) fn new(params: &AutomatonParams<R>) -> Result<Self, BurstError> {
        params.validate()?;
        let one = R::one();
        let lo = params.base_rate;
        let hi = params.high_rate();
        Ok(Self {
            switch: params.transition.ln(),
            stay: (one - params.transition).ln(),
            low: (lo.ln(), (one - lo).ln()),
            high: (hi.ln(), (one - hi).ln()),
        })
    }

    fn emission(&self, count: BucketCount, state: State) -> R {
        let (ln_hit, ln_miss) = match state {
            State::Low => self.low,
            State::High => self.high,
        };
        let hits = R::from_count(count.hits);
        let misses = R::from_count(count.docs - count.hits);
        hits * ln_hit + misses * ln_miss
    }

    fn transition(&self, from: State, to: State) -> R {
        if from == to {
            self.stay
        } else {
            self.switch
        }
    }
}

fn check_series(series: &[BucketCount]) -> Result<(), BurstError> {
    if series.is_empty() {
        return Err(BurstError::EmptySeries);
    }
    for (bucket, c) in series.iter().enumerate() {
        if c.hits > c.docs {
            return Err(BurstError::HitsExceedDocs {
                bucket,
                hits: c.hits,
                docs: c.docs,
            });
        }
    }
    Ok(())
}

/// Emission log-likelihood of one bucket at rate `rate`.
pub fn emission_log_likelihood<R: Real>(count: BucketCount, rate: R) -> R {
    let hits = R::from_count(count.hits);
    let misses = R::from_count(count.docs - count.hits);
    let mut ll = R::zero();
    if count.hits > 0 {
        ll = ll + hits * rate.ln();
    }
    if count.hits < count.docs {
        ll = ll + misses * (R::one() - rate).ln();
    }
    ll
}

/// Log-likelihood of a full state path, including the entry transition
/// from the initial low state.
pub fn path_log_likelihood<R: Real>(
    series: &[BucketCount],
    path: &[State],
    params: &AutomatonParams<R>,
) -> Result<R, BurstError> {
    check_series(series)?;
    if path.len() != series.len() {
        return Err(BurstError::PathLengthMismatch {
            path: path.len(),
            series: series.len(),
        });
    }
    let model = LogModel::new(params)?;
    let mut prev = State::Low;
    let mut ll = R::zero();
    for (&count, &state) in series.iter().zip(path) {
        ll = ll + model.transition(prev, state) + model.emission(count, state);
        prev = state;
    }
    Ok(ll)
}

/// Maximum-likelihood state path. Ties go to the low state.
pub fn viterbi_states<R: Real>(series: &[BucketCount], params: &AutomatonParams<R>) -> Result<Vec<State>, BurstError> {
    check_series(series)?;
    let model = LogModel::new(params)?;
    Ok(decode(series, &model))
}

pub(crate) fn decode<R: Real>(series: &[BucketCount], model: &LogModel<R>) -> Vec<State> {
    let t_len = series.len();
    // came_from_high[t] = (for Low at t, for High at t)
    let mut came_from_high: Vec<(bool, bool)> = Vec::with_capacity(t_len);
    let mut low = model.stay + model.emission(series[0], State::Low);
    let mut high = model.switch + model.emission(series[0], State::High);
    came_from_high.push((false, false));

    for &count in &series[1..] {
        let low_from_low = low + model.stay;
        let low_from_high = high + model.switch;
        let high_from_low = low + model.switch;
        let high_from_high = high + model.stay;

        let low_prev_high = low_from_high > low_from_low;
        let high_prev_high = high_from_high > high_from_low;
        let next_low = if low_prev_high { low_from_high } else { low_from_low };
        let next_high = if high_prev_high { high_from_high } else { high_from_low };

        low = next_low + model.emission(count, State::Low);
        high = next_high + model.emission(count, State::High);
        came_from_high.push((low_prev_high, high_prev_high));
    }

    let mut path = vec![State::Low; t_len];
    let mut state = if high > low { State::High } else { State::Low };
    for t in (0..t_len).rev() {
        path[t] = state;
        let (from_high_if_low, from_high_if_high) = came_from_high[t];
        let from_high = match state {
            State::Low => from_high_if_low,
            State::High => from_high_if_high,
        };
        state = if from_high { State::High } else { State::Low };
    }
    path
}

/// Maximal runs of the high state as inclusive `(start, end)` pairs, in order.
pub fn high_runs(path: &[State]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &s) in path.iter().enumerate() {
        match (s, start) {
            (State::High, None) => start = Some(i),
            (State::Low, Some(st)) => {
                runs.push((st, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        runs.push((st, path.len() - 1));
    }
    runs
}

pub(crate) fn run_weight<R: Real>(series: &[BucketCount], run: (usize, usize), model: &LogModel<R>) -> R {
    let (start, end) = run;
    let mut gain = R::zero();
    for &count in &series[start..=end] {
        gain = gain + model.emission(count, State::High) - model.emission(count, State::Low);
    }
    // Entering the run (from the initial state when start == 0) and leaving it
    // if the run is not at the end of the series.
    let boundary = model.switch - model.stay;
    gain = gain + boundary;
    if end + 1 < series.len() {
        gain = gain + boundary;
    }
    gain
}

/// Log-likelihood gain of `path` over the same path with the high run
/// `[start, end]` replaced by low states, transition terms included.
pub fn burst_weight<R: Real>(
    series: &[BucketCount],
    path: &[State],
    interval: (usize, usize),
    params: &AutomatonParams<R>,
) -> Result<R, BurstError> {
    check_series(series)?;
    if path.len() != series.len() {
        return Err(BurstError::PathLengthMismatch {
            path: path.len(),
            series: series.len(),
        });
    }
    let (start, end) = interval;
    let is_maximal = start <= end
        && end < path.len()
        && path[start..=end].iter().all(|&s| s == State::High)
        && (start == 0 || path[start - 1] == State::Low)
        && (end + 1 == path.len() || path[end + 1] == State::Low);
    if !is_maximal {
        return Err(BurstError::NotMaximalRun { start, end });
    }
    let model = LogModel::new(params)?;
    Ok(run_weight(series, interval, &model))
}
