//! The four decoding strategies.
//!
//! `backtrack_sample` maintains two associative maps keyed by prefix:
//!
//! - `Q[x]`: the current overestimate of the probability that a random model
//!   continuation from `x` is valid. Absent keys mean "new" (estimate 1);
//!   invalid prefixes are pinned at 0; an explored ("old") prefix satisfies
//!   `Q[x] = sum_u P(u|x) Q[x::[u]]` with unknown children counted as 1.
//! - `N[x]`: the currently held next-token sample for `x`, kept distributed
//!   as `P_Q(. | x) ∝ P(. | x) Q[x::[.]]` through rejection updates.
//!
//! Each round collects the chain of held tokens into a sequence `s`, returns
//! it if complete, and otherwise probes the validity of `s`'s next tokens.
//! The newly observed invalid mass shrinks `Q` bottom-up along `s`, and for
//! every proper prefix `x` the held token `N[x]` is kept with probability
//! `P_{Q'}(N[x]|x) / P_Q(N[x]|x)`; on rejection a replacement is drawn with
//! the old token excluded, which is where backtracking happens.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constrain::{Constrainer, Validity};
use crate::error::{CoreError, Result};
use crate::model::{NextTokenDistribution, SequenceModel};
use crate::vocab::{Prefix, TokenId};

/// Per-prefix validity estimates in [0, 1]. Absence of a key means the prefix
/// is "new" and estimated at 1.
pub type QMap = HashMap<Prefix, f64>;

/// Per-prefix held next-token samples.
pub type NMap = HashMap<Prefix, TokenId>;

/// Follows the held next tokens from the empty sequence until a prefix absent
/// from the map, and returns that prefix.
pub fn collect_sequence(n: &NMap) -> Result<Prefix> {
    let mut s = Prefix::empty();
    let mut steps = 0usize;
    while let Some(&t) = n.get(&s) {
        s.push(t);
        steps += 1;
        if steps > n.len() {
            return Err(CoreError::Internal("cycle in next-token map".into()));
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenValidity {
    ObservedValid,
    ObservedInvalid,
    /// Skipped by the lazy top-p scan and treated as invalid for this step.
    AssumedInvalid,
}

#[derive(Debug, Clone)]
pub struct ValidityScan {
    /// Tokens observed valid, in token-id order.
    pub valid: Vec<TokenId>,
    /// Verdict per token, in scan (descending-probability) order.
    pub observations: Vec<(TokenId, TokenValidity)>,
    /// Number of constrainer invocations performed.
    pub checks: u64,
}

/// Checks next-token validity in descending model-probability order and stops
/// once the ratio of known-valid mass to possibly-valid mass (known valid +
/// unchecked) exceeds `p`. Remaining tokens are assumed invalid.
pub fn lazy_topp_validity_scan(
    dist: &NextTokenDistribution,
    constrainer: &dyn Constrainer,
    prefix: &Prefix,
    p: f64,
) -> Result<ValidityScan> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(CoreError::InvalidArgument(format!("top-p must be in (0, 1], got {p}")));
    }
    let mut order: Vec<TokenId> = (0..dist.len() as TokenId).collect();
    // Descending probability, ties broken by lowest id.
    order.sort_by(|&a, &b| {
        dist.prob(b)
            .partial_cmp(&dist.prob(a))
            .unwrap()
            .then(a.cmp(&b))
    });
    let total: f64 = dist.probs().iter().sum();
    let mut checked_mass = 0.0;
    let mut valid_mass = 0.0;
    let mut valid = Vec::new();
    let mut observations = Vec::with_capacity(order.len());
    let mut checks = 0u64;
    let mut cutoff = order.len();
    for (i, &t) in order.iter().enumerate() {
        let verdict = constrainer.check(&prefix.child(t));
        checks += 1;
        checked_mass += dist.prob(t);
        if verdict == Validity::Valid {
            valid_mass += dist.prob(t);
            valid.push(t);
        }
        observations.push((
            t,
            match verdict {
                Validity::Valid => TokenValidity::ObservedValid,
                Validity::Invalid => TokenValidity::ObservedInvalid,
            },
        ));
        let unchecked = (total - checked_mass).max(0.0);
        let possibly_valid = valid_mass + unchecked;
        if possibly_valid > 0.0 && valid_mass / possibly_valid > p {
            cutoff = i + 1;
            break;
        }
    }
    for &t in &order[cutoff..] {
        observations.push((t, TokenValidity::AssumedInvalid));
    }
    valid.sort_unstable();
    Ok(ValidityScan {
        valid,
        observations,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Unconstrained,
    Constrained,
    Asap,
    Backtrack,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Unconstrained,
        Strategy::Constrained,
        Strategy::Asap,
        Strategy::Backtrack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Unconstrained => "unconstrained",
            Strategy::Constrained => "constrained",
            Strategy::Asap => "asap",
            Strategy::Backtrack => "backtrack",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unconstrained" => Ok(Strategy::Unconstrained),
            "constrained" => Ok(Strategy::Constrained),
            "asap" => Ok(Strategy::Asap),
            "backtrack" => Ok(Strategy::Backtrack),
            other => Err(CoreError::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One decoded sequence with its bookkeeping.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub sequence: Prefix,
    pub model_calls: u64,
    pub constrainer_calls: u64,
    pub backtracks: u64,
    pub strategy: Strategy,
    pub seed: u64,
    /// Set when a bounded backtrack distance or a top-p cutoff below 1 means
    /// the exactness guarantee does not apply to this sample.
    pub exactness_forfeited: bool,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub seed: u64,
    /// Argmax at every draw instead of sampling.
    pub greedy: bool,
    /// Lazy validity-scan threshold; 1.0 checks every token.
    pub top_p: f64,
    /// Rejection updates only visit this many of the longest proper prefixes.
    /// `None` is unbounded.
    pub max_backtrack: Option<usize>,
    /// Global model-call budget (also caps loop iterations per sample).
    pub max_model_calls: u64,
    pub max_len: usize,
    /// Keep `Q` (and the distribution cache) across samples from this session.
    pub share_q: bool,
    /// Recompute every old prefix's Q from scratch after each round and fail
    /// on divergence beyond 1e-9.
    pub check_q: bool,
    /// Fuse the keep/replace decision into a single uniform draw; the literal
    /// two-draw form is kept for trace tests.
    pub fused_rejection: bool,
    /// Fault injection: skip rejection updates entirely. Exists so the oracle
    /// check has a known-broken decoder to fail on.
    pub fault_skip_rejection: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            greedy: false,
            top_p: 1.0,
            max_backtrack: None,
            max_model_calls: 1_000_000,
            max_len: 256,
            share_q: false,
            check_q: false,
            fused_rejection: true,
            fault_skip_rejection: false,
        }
    }
}

/// Mutable decoding state over a shared immutable model and constrainer.
/// Single-threaded; run one session per thread for parallel cells.
pub struct DecodeSession<'a> {
    model: &'a dyn SequenceModel,
    constrainer: &'a dyn Constrainer,
    cfg: SessionConfig,
    rng: ChaCha8Rng,
    q: QMap,
    n: NMap,
    dists: HashMap<Prefix, NextTokenDistribution>,
    probed: HashSet<Prefix>,
    model_calls: u64,
    constrainer_calls: u64,
    backtracks: u64,
    deepest: usize,
    /// Model-call count at the start of the current sample; the budget is
    /// enforced per sample, not over the session's lifetime.
    sample_base: u64,
}

impl<'a> DecodeSession<'a> {
    pub fn new(
        model: &'a dyn SequenceModel,
        constrainer: &'a dyn Constrainer,
        cfg: SessionConfig,
    ) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            model,
            constrainer,
            cfg,
            rng,
            q: QMap::new(),
            n: NMap::new(),
            dists: HashMap::new(),
            probed: HashSet::new(),
            model_calls: 0,
            constrainer_calls: 0,
            backtracks: 0,
            deepest: 0,
            sample_base: 0,
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    /// Total (monotone) counters: model calls, constrainer calls, backtracks.
    pub fn counters(&self) -> (u64, u64, u64) {
        (self.model_calls, self.constrainer_calls, self.backtracks)
    }

    /// Starts a fresh per-sample budget window and snapshots the counters.
    fn begin_sample(&mut self) -> (u64, u64, u64) {
        self.sample_base = self.model_calls;
        self.counters()
    }

    pub fn q_map(&self) -> &QMap {
        &self.q
    }

    pub fn n_map(&self) -> &NMap {
        &self.n
    }

    fn eos(&self) -> TokenId {
        self.model.vocabulary().eos_id()
    }

    fn q_of(&self, x: &Prefix) -> f64 {
        self.q.get(x).copied().unwrap_or(1.0)
    }

    /// One next-token query. Counts against the per-sample budget whether or
    /// not the memoized table already holds the row, so call accounting is
    /// comparable across strategies.
    fn dist(&mut self, prefix: &Prefix) -> Result<NextTokenDistribution> {
        if self.model_calls - self.sample_base >= self.cfg.max_model_calls {
            return Err(self.budget_error());
        }
        self.model_calls += 1;
        self.deepest = self.deepest.max(prefix.len());
        if let Some(d) = self.dists.get(prefix) {
            return Ok(d.clone());
        }
        let d = self.model.next_distribution(prefix)?;
        self.dists.insert(prefix.clone(), d.clone());
        Ok(d)
    }

    fn budget_error(&self) -> CoreError {
        CoreError::BudgetExhausted {
            budget: self.cfg.max_model_calls,
            q_root: self.q_of(&Prefix::empty()),
            deepest: self.deepest,
        }
    }

    /// One uniform draw from a non-negative weight vector (argmax in greedy
    /// mode, lowest id winning ties).
    fn draw(&mut self, weights: &[f64]) -> Result<TokenId> {
        if self.cfg.greedy {
            return argmax_index(weights)
                .map(|i| i as TokenId)
                .ok_or_else(|| CoreError::Internal("draw from empty weights".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(CoreError::Internal("draw from zero-mass weights".into()));
        }
        let u: f64 = self.rng.random();
        Ok(pick_index(weights, u * total) as TokenId)
    }

    /// Weights of `P_Q(. | x)` per token, plus whether any child carried a
    /// stored Q entry. When none do, the mathematical sum is exactly the
    /// model's unit mass, so callers can avoid introducing float drift.
    fn pq_weights(&self, x: &Prefix) -> (Vec<f64>, bool) {
        let dist = &self.dists[x];
        let mut any = false;
        let w = (0..dist.len() as TokenId)
            .map(|t| {
                let p = dist.prob(t);
                match self.q.get(&x.child(t)) {
                    Some(&qv) => {
                        any = true;
                        p * qv
                    }
                    None => p,
                }
            })
            .collect();
        (w, any)
    }

    /// `sum_u P(u|x) Q[x::[u]]` with absent entries counted as 1. Returns
    /// exactly 1.0 when every stored child entry is exactly 1.0, so prefixes
    /// with no observed invalidity never accumulate float drift.
    fn aggregate_q(&self, x: &Prefix) -> f64 {
        let dist = &self.dists[x];
        let mut sum = 0.0;
        let mut all_unit = true;
        for t in 0..dist.len() as TokenId {
            let p = dist.prob(t);
            match self.q.get(&x.child(t)) {
                Some(&qv) => {
                    if qv != 1.0 {
                        all_unit = false;
                    }
                    sum += p * qv;
                }
                None => sum += p,
            }
        }
        if all_unit {
            1.0
        } else {
            sum
        }
    }

    /// Probes constrainer validity of every next token of `s` (under the lazy
    /// top-p order) and records invalid children as Q = 0.
    fn probe_children(&mut self, s: &Prefix) -> Result<()> {
        let dist = self.dist(s)?;
        let scan = lazy_topp_validity_scan(&dist, self.constrainer, s, self.cfg.top_p)?;
        self.constrainer_calls += scan.checks;
        for &(t, verdict) in &scan.observations {
            if verdict != TokenValidity::ObservedValid {
                self.q.entry(s.child(t)).or_insert(0.0);
            }
        }
        self.probed.insert(s.clone());
        Ok(())
    }

    fn record(
        &self,
        sequence: Prefix,
        strategy: Strategy,
        calls0: (u64, u64, u64),
        forfeited: bool,
    ) -> SampleRecord {
        SampleRecord {
            sequence,
            model_calls: self.model_calls - calls0.0,
            constrainer_calls: self.constrainer_calls - calls0.1,
            backtracks: self.backtracks - calls0.2,
            strategy,
            seed: self.cfg.seed,
            exactness_forfeited: forfeited,
        }
    }

    /// Classic ancestral sampling; with top-p below 1, nucleus truncation.
    pub fn sample_unconstrained(&mut self) -> Result<SampleRecord> {
        let calls0 = self.begin_sample();
        let eos = self.eos();
        let mut s = Prefix::empty();
        loop {
            if s.len() >= self.cfg.max_len {
                return Err(CoreError::Truncated { max_len: self.cfg.max_len });
            }
            let dist = self.dist(&s)?;
            let weights = nucleus_weights(&dist, self.cfg.top_p);
            let t = self.draw(&weights)?;
            s.push(t);
            if t == eos {
                return Ok(self.record(s, Strategy::Unconstrained, calls0, false));
            }
        }
    }

    /// Per-step masking of invalid tokens followed by renormalization; never
    /// revises emitted tokens.
    pub fn sample_constrained_greedy(&mut self) -> Result<SampleRecord> {
        let calls0 = self.begin_sample();
        let eos = self.eos();
        if !self.constrainer.check(&Prefix::empty()).is_valid() {
            return Err(CoreError::EmptyLanguage);
        }
        let mut s = Prefix::empty();
        loop {
            if s.len() >= self.cfg.max_len {
                return Err(CoreError::Truncated { max_len: self.cfg.max_len });
            }
            let dist = self.dist(&s)?;
            let scan = lazy_topp_validity_scan(&dist, self.constrainer, &s, self.cfg.top_p)?;
            self.constrainer_calls += scan.checks;
            let mut weights = vec![0.0; dist.len()];
            for &t in &scan.valid {
                weights[t as usize] = dist.prob(t);
            }
            if weights.iter().sum::<f64>() <= 0.0 {
                return Err(CoreError::DeadEnd(s));
            }
            let t = self.draw(&weights)?;
            s.push(t);
            if t == eos {
                return Ok(self.record(s, Strategy::Constrained, calls0, false));
            }
        }
    }

    /// The backtracking sampler. Exact for completability-sound constrainers
    /// when top-p is 1 and the backtrack distance is unbounded.
    pub fn backtrack_sample(&mut self) -> Result<SampleRecord> {
        self.run_backtrack(self.cfg.max_backtrack)
    }

    /// As `backtrack_sample`, but the rejection loop only visits the
    /// `max_distance` longest proper prefixes of the collected sequence.
    /// Q is still updated everywhere; exactness is forfeited.
    pub fn backtrack_sample_bounded(&mut self, max_distance: usize) -> Result<SampleRecord> {
        self.run_backtrack(Some(max_distance))
    }

    fn run_backtrack(&mut self, limit: Option<usize>) -> Result<SampleRecord> {
        let calls0 = self.begin_sample();
        let eos = self.eos();
        let empty = Prefix::empty();
        if !self.constrainer.check(&empty).is_valid() {
            return Err(CoreError::EmptyLanguage);
        }
        self.n.clear();
        if !self.cfg.share_q {
            self.q.clear();
            self.dists.clear();
            self.probed.clear();
        }
        let forfeited = limit.is_some() || self.cfg.top_p < 1.0;
        let mut rounds = 0u64;
        loop {
            rounds += 1;
            if rounds > self.cfg.max_model_calls {
                return Err(self.budget_error());
            }
            let s = collect_sequence(&self.n)?;
            if s.is_complete(eos) {
                return Ok(self.record(s, Strategy::Backtrack, calls0, forfeited));
            }
            if s.len() >= self.cfg.max_len {
                return Err(CoreError::Truncated { max_len: self.cfg.max_len });
            }
            let freshly_probed = !self.probed.contains(&s);
            if freshly_probed {
                self.probe_children(&s)?;
            }
            let (w, any_entry) = self.pq_weights(&s);
            let q_old = self.q_of(&s);
            // Only a fresh probe brings new information; a revisit (shared Q)
            // leaves Q untouched, which also keeps every rejection ratio at 1.
            let q_new = if freshly_probed && any_entry {
                self.aggregate_q(&s)
            } else {
                q_old
            };
            if q_new > 0.0 {
                let t = self.draw(&w)?;
                self.n.insert(s.clone(), t);
            }
            self.q.insert(s.clone(), q_new);

            // Propagate the shrink bottom-up along s and run the rejection
            // step at each proper prefix.
            let mut child_old = q_old;
            let mut child_new = q_new;
            for (dist_idx, depth) in (0..s.len()).rev().enumerate() {
                let x = s.truncated(depth);
                let chain_tok = s.tokens()[depth];
                let p_chain = self.dists[&x].prob(chain_tok);
                let q_x_old = self.q_of(&x);
                let q_x_new = if child_old == child_new {
                    q_x_old
                } else {
                    (q_x_old - p_chain * (child_old - child_new)).max(0.0)
                };
                self.q.insert(x.clone(), q_x_new);
                let within = limit.map_or(true, |d| dist_idx < d);
                if within && !self.cfg.fault_skip_rejection {
                    self.rejection_step(&x, chain_tok, child_old, child_new, q_x_old, q_x_new)?;
                }
                child_old = q_x_old;
                child_new = q_x_new;
            }
            if self.q_of(&empty) <= 0.0 {
                return Err(CoreError::EmptyLanguage);
            }
            if self.cfg.check_q {
                self.debug_check_q()?;
            }
        }
    }

    /// Keep `N[x] = n` with probability `P_{Q'}(n|x) / P_Q(n|x)`; on rejection
    /// draw a replacement with `n` excluded.
    fn rejection_step(
        &mut self,
        x: &Prefix,
        n_tok: TokenId,
        child_old: f64,
        child_new: f64,
        q_x_old: f64,
        q_x_new: f64,
    ) -> Result<()> {
        debug_assert_eq!(self.n.get(x), Some(&n_tok));
        if self.cfg.greedy {
            // Zero-temperature limit: keep n iff it remains the argmax of P_Q'.
            let (w, _) = self.pq_weights(x);
            if argmax_index(&w) != Some(n_tok as usize) {
                self.replace(x, n_tok)?;
            }
            return Ok(());
        }
        if q_x_new <= 0.0 || child_new <= 0.0 || q_x_old <= 0.0 || child_old <= 0.0 {
            // The held branch (or the whole subtree) lost all mass.
            self.replace(x, n_tok)?;
            return Ok(());
        }
        // P_Q(n|x) = P(n|x) Q[x::[n]] / Q[x] (x is old), so the model factor
        // cancels and the keep probability is exact in the stored Q values.
        let ratio = (child_new / child_old) * (q_x_old / q_x_new);
        if ratio >= 1.0 {
            return Ok(());
        }
        let (mut w, _) = self.pq_weights(x);
        w[n_tok as usize] = 0.0;
        match keep_or_replace(&mut self.rng, ratio, &w, self.cfg.fused_rejection) {
            KeepOrReplace::Kept => Ok(()),
            KeepOrReplace::Replaced(t) => {
                self.backtracks += 1;
                self.n.insert(x.clone(), t);
                Ok(())
            }
            KeepOrReplace::Emptied => {
                self.backtracks += 1;
                self.n.remove(x);
                Ok(())
            }
        }
    }

    /// Draw a replacement for `N[x]` from `P_Q(. | x)` with `n_tok` excluded.
    fn replace(&mut self, x: &Prefix, n_tok: TokenId) -> Result<()> {
        self.backtracks += 1;
        let (mut w, _) = self.pq_weights(x);
        w[n_tok as usize] = 0.0;
        if w.iter().sum::<f64>() <= 0.0 {
            // Nothing to switch to: drop the held token so the next round
            // re-examines x (and drives its Q to 0 if truly dead).
            self.n.remove(x);
            return Ok(());
        }
        let t = self.draw(&w)?;
        self.n.insert(x.clone(), t);
        Ok(())
    }

    /// ASAp: forward sampling under the shared Q, never revising tokens
    /// within a sample; observed invalidity only informs later samples.
    pub fn asap_sample(&mut self) -> Result<SampleRecord> {
        let calls0 = self.begin_sample();
        let eos = self.eos();
        let empty = Prefix::empty();
        if !self.constrainer.check(&empty).is_valid() {
            return Err(CoreError::EmptyLanguage);
        }
        self.n.clear();
        let mut attempts = 0u64;
        'retry: loop {
            attempts += 1;
            if attempts > self.cfg.max_model_calls {
                return Err(self.budget_error());
            }
            let mut s = Prefix::empty();
            let mut path: Vec<Prefix> = Vec::new();
            loop {
                if s.len() >= self.cfg.max_len {
                    return Err(CoreError::Truncated { max_len: self.cfg.max_len });
                }
                if !self.probed.contains(&s) {
                    self.probe_children(&s)?;
                }
                let (w, _) = self.pq_weights(&s);
                if w.iter().sum::<f64>() <= 0.0 {
                    // Dead end: record it in Q, refresh ancestors, retry.
                    self.q.insert(s.clone(), 0.0);
                    for anc in path.iter().rev() {
                        let v = self.aggregate_q(anc);
                        self.q.insert(anc.clone(), v);
                    }
                    if self.q_of(&empty) <= 0.0 {
                        return Err(CoreError::EmptyLanguage);
                    }
                    continue 'retry;
                }
                let t = self.draw(&w)?;
                path.push(s.clone());
                s.push(t);
                if t == eos {
                    // Fold the newly observed validity into Q, deepest first,
                    // so later samples benefit.
                    for anc in path.iter().rev() {
                        let v = self.aggregate_q(anc);
                        self.q.insert(anc.clone(), v);
                    }
                    return Ok(self.record(s, Strategy::Asap, calls0, self.cfg.top_p < 1.0));
                }
            }
        }
    }

    /// Recomputes every old prefix's Q from its children and compares with
    /// the incrementally maintained value.
    fn debug_check_q(&self) -> Result<()> {
        for x in &self.probed {
            let Some(&stored) = self.q.get(x) else { continue };
            let (w, _) = self.pq_weights(x);
            let fresh: f64 = w.iter().sum();
            if (stored - fresh).abs() > 1e-9 {
                return Err(CoreError::Internal(format!(
                    "Q inconsistency at {x:?}: stored {stored}, recomputed {fresh}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeepOrReplace {
    Kept,
    Replaced(TokenId),
    /// Replacement mass was zero: the holder must drop its entry.
    Emptied,
}

/// One keep/replace decision: keep the current token with probability
/// `keep_ratio` (the caller guarantees it is below 1), otherwise draw a
/// replacement from `replacement_weights`, in which the current token must
/// already be zeroed. In fused mode the single uniform that decided the
/// rejection is rescaled and reused for the replacement draw.
pub fn keep_or_replace<R: Rng + ?Sized>(
    rng: &mut R,
    keep_ratio: f64,
    replacement_weights: &[f64],
    fused: bool,
) -> KeepOrReplace {
    let u: f64 = rng.random();
    if u < keep_ratio {
        return KeepOrReplace::Kept;
    }
    let total: f64 = replacement_weights.iter().sum();
    if total <= 0.0 {
        return KeepOrReplace::Emptied;
    }
    let v = if fused {
        (u - keep_ratio) / (1.0 - keep_ratio)
    } else {
        rng.random()
    };
    KeepOrReplace::Replaced(pick_index(replacement_weights, v * total) as TokenId)
}

/// Classic nucleus truncation: keep the smallest descending-probability
/// prefix whose cumulative mass exceeds `p`, zero out the rest.
fn nucleus_weights(dist: &NextTokenDistribution, p: f64) -> Vec<f64> {
    if p >= 1.0 {
        return dist.probs().to_vec();
    }
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| {
        dist.probs()[b]
            .partial_cmp(&dist.probs()[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut weights = vec![0.0; dist.len()];
    let mut cum = 0.0;
    for &i in &order {
        weights[i] = dist.probs()[i];
        cum += dist.probs()[i];
        if cum > p {
            break;
        }
    }
    weights
}

/// Index of the maximum weight, lowest index winning ties; `None` when all
/// weights are zero or the slice is empty.
pub fn argmax_index(weights: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 && best.map_or(true, |(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i)
}

/// Inverse-CDF pick: the first index where the running sum exceeds `target`.
fn pick_index(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}
