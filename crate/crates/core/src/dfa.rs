//! A constrainer backed by a deterministic automaton over token ids, compiled
//! from a regular expression over token texts.
//!
//! Naive DFA acceptance only answers "is this a prefix of a match"; the
//! constrainer contract needs "does some accepted completion exist". Liveness
//! is therefore precomputed at construction by reverse reachability from the
//! accepting states, and `check` reports `Valid` only for prefixes that land
//! in a live state.

use std::collections::{HashMap, HashSet, VecDeque};

use regex_automata::dfa::{dense, Automaton, StartKind};
use regex_automata::util::primitives::StateID;
use regex_automata::{Anchored, Input};

use crate::constrain::{Constrainer, Validity};
use crate::error::{CoreError, Result};
use crate::vocab::{Prefix, TokenId, Vocabulary};

#[derive(Debug, Clone)]
pub struct DfaConstrainer {
    /// transitions[state][token] = Some(next state), indexed by token id.
    transitions: Vec<Vec<Option<usize>>>,
    accepting: Vec<bool>,
    live: Vec<bool>,
    eos_id: TokenId,
}

impl DfaConstrainer {
    /// Compiles `pattern` (anchored, whole-sequence match) over the
    /// concatenated texts of non-EOS tokens.
    pub fn from_pattern(pattern: &str, vocab: &Vocabulary) -> Result<Self> {
        check_pattern_alphabet(pattern, vocab)?;
        let dfa = dense::DFA::builder()
            .configure(dense::DFA::config().start_kind(StartKind::Anchored))
            .build(pattern)
            .map_err(|e| CoreError::Pattern(e.to_string()))?;
        let start = dfa
            .start_state_forward(&Input::new("").anchored(Anchored::Yes))
            .map_err(|e| CoreError::Pattern(e.to_string()))?;

        let tokens: Vec<(TokenId, &str)> = vocab
            .ids()
            .filter(|&t| t != vocab.eos_id())
            .map(|t| (t, vocab.text(t)))
            .collect();

        // Discover the token-level state graph from the byte-level DFA.
        let mut index: HashMap<StateID, usize> = HashMap::new();
        let mut ids: Vec<StateID> = Vec::new();
        let mut transitions: Vec<Vec<Option<usize>>> = Vec::new();
        let mut queue = VecDeque::new();
        index.insert(start, 0);
        ids.push(start);
        transitions.push(vec![None; vocab.len()]);
        queue.push_back(start);
        while let Some(sid) = queue.pop_front() {
            let from = index[&sid];
            for &(tok, text) in &tokens {
                let mut cur = sid;
                for &b in text.as_bytes() {
                    cur = dfa.next_state(cur, b);
                }
                if dfa.is_dead_state(cur) {
                    continue;
                }
                let to = *index.entry(cur).or_insert_with(|| {
                    ids.push(cur);
                    transitions.push(vec![None; vocab.len()]);
                    queue.push_back(cur);
                    transitions.len() - 1
                });
                transitions[from][tok as usize] = Some(to);
            }
        }

        let accepting: Vec<bool> = ids
            .iter()
            .map(|&sid| dfa.is_match_state(dfa.next_eoi_state(sid)))
            .collect();

        let live = compute_liveness(&transitions, &accepting);
        if !live[0] {
            return Err(CoreError::EmptyLanguage);
        }
        Ok(Self {
            transitions,
            accepting,
            live,
            eos_id: vocab.eos_id(),
        })
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    /// All accepted complete sequences (EOS-terminated), if finitely many.
    /// Returns `None` when the language is infinite or exceeds `limit`.
    pub fn complete_sequences(&self, limit: usize) -> Option<Vec<Prefix>> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Vec<TokenId>)> = vec![(0, Vec::new())];
        while let Some((state, path)) = stack.pop() {
            if path.len() > 64 {
                return None; // treat as unbounded
            }
            if self.accepting[state] {
                let mut seq = path.clone();
                seq.push(self.eos_id);
                out.push(Prefix::new(seq));
                if out.len() > limit {
                    return None;
                }
            }
            for (tok, next) in self.transitions[state].iter().enumerate() {
                if let Some(next) = next {
                    if self.live[*next] {
                        let mut p = path.clone();
                        p.push(tok as TokenId);
                        stack.push((*next, p));
                    }
                }
            }
        }
        out.sort();
        Some(out)
    }
}

impl Constrainer for DfaConstrainer {
    fn check(&self, prefix: &Prefix) -> Validity {
        let mut state = 0usize;
        let tokens = prefix.tokens();
        for (i, &t) in tokens.iter().enumerate() {
            if t == self.eos_id {
                if i + 1 == tokens.len() && self.accepting[state] {
                    return Validity::Valid;
                }
                return Validity::Invalid;
            }
            match self.transitions[state].get(t as usize).copied().flatten() {
                Some(next) => state = next,
                None => return Validity::Invalid,
            }
        }
        if self.live[state] {
            Validity::Valid
        } else {
            Validity::Invalid
        }
    }
}

/// Reverse reachability from the accepting states.
fn compute_liveness(transitions: &[Vec<Option<usize>>], accepting: &[bool]) -> Vec<bool> {
    let n = transitions.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, row) in transitions.iter().enumerate() {
        for next in row.iter().flatten() {
            reverse[*next].push(from);
        }
    }
    let mut live = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| accepting[s]).collect();
    for &s in &queue {
        live[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &p in &reverse[s] {
            if !live[p] {
                live[p] = true;
                queue.push_back(p);
            }
        }
    }
    live
}

/// Every literal character in the pattern must occur in some token text.
fn check_pattern_alphabet(pattern: &str, vocab: &Vocabulary) -> Result<()> {
    let hir = regex_syntax::parse(pattern).map_err(|e| CoreError::Pattern(e.to_string()))?;
    let mut known: HashSet<char> = HashSet::new();
    for id in vocab.ids() {
        if id != vocab.eos_id() {
            known.extend(vocab.text(id).chars());
        }
    }
    let mut stack = vec![&hir];
    while let Some(h) = stack.pop() {
        use regex_syntax::hir::HirKind;
        match h.kind() {
            HirKind::Literal(lit) => {
                for c in std::str::from_utf8(&lit.0)
                    .map_err(|_| CoreError::Pattern("non-UTF-8 literal".into()))?
                    .chars()
                {
                    if !known.contains(&c) {
                        return Err(CoreError::Pattern(format!(
                            "pattern character {c:?} does not occur in any token text"
                        )));
                    }
                }
            }
            HirKind::Concat(hs) | HirKind::Alternation(hs) => stack.extend(hs.iter()),
            HirKind::Repetition(rep) => stack.push(&rep.sub),
            HirKind::Capture(cap) => stack.push(&cap.sub),
            _ => {}
        }
    }
    Ok(())
}
