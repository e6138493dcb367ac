//! Synthetic benchmark generators. Everything is pure given a seed, and
//! instances serialize to the table-model and API-list file formats so runs
//! are replayable from disk.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dfa::DfaConstrainer;
use crate::error::{CoreError, Result};
use crate::model::{NextTokenDistribution, SequenceModel, TableModel};
use crate::trie::TrieConstrainer;
use crate::vocab::{Prefix, TokenId, Vocabulary};

/// The fixed 5-bit instance: a uniform bit model whose 32 complete strings
/// each carry mass 1/32, constrained to "all zeros, or starts with 1".
/// Exactly 17 strings are valid.
#[derive(Debug, Clone)]
pub struct BinaryBenchInstance {
    pub model: TableModel,
    pub constrainer: DfaConstrainer,
}

/// The bit pattern behind [`gen_binary_bench`].
pub const BINARY_PATTERN: &str = "(00000)|(1[01]{4})";

pub fn gen_binary_bench() -> Result<BinaryBenchInstance> {
    let vocab = Vocabulary::with_eos_last(&["0", "1", "<eos>"])?;
    let mut leaves = Vec::with_capacity(32);
    for bits in 0..32u32 {
        let mut seq: Vec<TokenId> = (0..5).rev().map(|i| (bits >> i) & 1).collect();
        seq.push(vocab.eos_id());
        leaves.push((Prefix::new(seq), 1.0));
    }
    let constrainer = DfaConstrainer::from_pattern(BINARY_PATTERN, &vocab)?;
    let model = TableModel::from_sequence_weights(vocab, &leaves)?;
    Ok(BinaryBenchInstance { model, constrainer })
}

/// A model whose conditional rows are derived on demand from a stable hash of
/// (seed, prefix): deterministic and platform-stable without materializing a
/// table. Every token gets strictly positive probability.
#[derive(Debug, Clone)]
pub struct SeededRandomModel {
    vocab: Vocabulary,
    seed: u64,
}

impl SeededRandomModel {
    pub fn new(vocab: Vocabulary, seed: u64) -> Self {
        Self { vocab, seed }
    }

    fn row_seed(&self, prefix: &Prefix) -> u64 {
        let mut h = self.seed ^ 0x517C_C1B7_2722_0A95;
        for &t in prefix.tokens() {
            h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64 + 1);
        }
        h
    }
}

impl SequenceModel for SeededRandomModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, prefix: &Prefix) -> Result<NextTokenDistribution> {
        prefix.validate(&self.vocab)?;
        if prefix.is_complete(self.vocab.eos_id()) {
            return Err(CoreError::QueryAfterComplete);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.row_seed(prefix));
        // Floor keeps all conditionals bounded away from zero.
        let weights: Vec<f64> = (0..self.vocab.len()).map(|_| 0.1 + rng.random::<f64>()).collect();
        NextTokenDistribution::from_weights(weights)
    }
}

/// A randomized small instance: a seeded random model over a vocabulary of
/// 3 to 6 tokens (EOS included) and a random trie of up to 12 sequences of
/// length 1 to 5. Suited for exhaustive-oracle comparison.
pub fn gen_random_instance(seed: u64) -> Result<(SeededRandomModel, TrieConstrainer)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA076_1D64_78BD_642F);
    let non_eos = rng.random_range(2..=5usize);
    let names: Vec<String> = (0..non_eos).map(|i| format!("t{i}")).collect();
    let mut texts: Vec<&str> = names.iter().map(String::as_str).collect();
    texts.push("<eos>");
    let vocab = Vocabulary::with_eos_last(&texts)?;

    let n_seqs = rng.random_range(1..=12usize);
    let sequences: Vec<Vec<TokenId>> = (0..n_seqs)
        .map(|_| {
            let len = rng.random_range(1..=5usize);
            (0..len).map(|_| rng.random_range(0..non_eos) as TokenId).collect()
        })
        .collect();
    let trie = TrieConstrainer::build(&sequences, vocab.eos_id())?;
    let model = SeededRandomModel::new(vocab, seed);
    Ok((model, trie))
}

/// One migration problem: a per-problem model whose preferred spelling is the
/// deprecated one, plus the intended answer under each API version.
#[derive(Debug, Clone)]
pub struct ApiProblem {
    pub model: TableModel,
    /// The old-version spelling `group.component.name`.
    pub target_a: Prefix,
    /// The new-version spelling `prefix...group.component.name`.
    pub target_b: Prefix,
    /// Set on the minority of problems whose model already prefers the
    /// new-version spelling.
    pub knows_new_spelling: bool,
}

/// The two-version API migration benchmark.
///
/// Version A accepts the original `group.component.name` APIs. Version B
/// accepts the same APIs only under a mandatory prefix, plus new
/// `group.component.replacement` APIs native to version B that live beside
/// the deprecated names. Each problem's model puts most mass on the
/// deprecated unprefixed spelling, so per-step masking under version B
/// commits to the shared `group.component` segments and is then forced into
/// the wrong (native) completion; revising the commitment requires stepping
/// back two tokens, past the still-valid component segment.
#[derive(Debug, Clone)]
pub struct ApiBenchInstance {
    pub vocab: Vocabulary,
    pub constrainer_a: TrieConstrainer,
    pub constrainer_b: TrieConstrainer,
    pub problems: Vec<ApiProblem>,
    /// The `group.component.name` APIs shared by both versions, one per
    /// problem.
    pub apis: Vec<Vec<TokenId>>,
    /// The mandatory version-B prefix tokens.
    pub prefix: Vec<TokenId>,
}

#[derive(Debug, Clone)]
pub struct ApiBenchParams {
    /// Number of APIs (and problems); at least 2.
    pub num_apis: usize,
    /// Maximum APIs sharing one group segment.
    pub branching: usize,
    /// Number of mandatory prefix tokens in version B.
    pub prefix_len: usize,
    pub seed: u64,
    /// Model mass on the deprecated `group.component.name` spelling.
    pub deprecated_weight: f64,
    /// Model mass on the prefixed version-B spelling.
    pub migrated_weight: f64,
    /// Model mass on the sibling version-B-native API, when one exists.
    pub native_weight: f64,
    /// Fraction of APIs that get a version-B-native sibling under the same
    /// `group.component` segments.
    pub native_fraction: f64,
    /// Fraction of problems whose model prefers the migrated spelling
    /// (deprecated and migrated weights swapped).
    pub aware_fraction: f64,
    /// Number of prefixed near-miss spellings carrying the leftover mass.
    pub noise_spellings: usize,
}

impl ApiBenchParams {
    pub fn new(num_apis: usize, branching: usize, prefix_len: usize, seed: u64) -> Self {
        Self {
            num_apis,
            branching,
            prefix_len,
            seed,
            deprecated_weight: 0.6,
            migrated_weight: 0.2,
            native_weight: 0.004,
            native_fraction: 0.75,
            aware_fraction: 0.08,
            noise_spellings: 4,
        }
    }
}

pub fn gen_api_bench(
    num_apis: usize,
    branching: usize,
    prefix_len: usize,
    seed: u64,
) -> Result<ApiBenchInstance> {
    gen_api_bench_with(&ApiBenchParams::new(num_apis, branching, prefix_len, seed))
}

pub fn gen_api_bench_with(params: &ApiBenchParams) -> Result<ApiBenchInstance> {
    if params.num_apis < 2 {
        return Err(CoreError::InvalidArgument(format!(
            "need at least 2 APIs, got {}",
            params.num_apis
        )));
    }
    if params.branching == 0 || params.prefix_len == 0 {
        return Err(CoreError::InvalidArgument(
            "branching and prefix length must be positive".into(),
        ));
    }
    let leftover = 1.0
        - params.deprecated_weight
        - params.migrated_weight
        - params.native_weight;
    if params.deprecated_weight <= 0.0 || params.migrated_weight <= 0.0 || leftover < 0.0 {
        return Err(CoreError::InvalidArgument("spelling weights do not fit in 1".into()));
    }
    let num_groups = params.num_apis.div_ceil(params.branching);
    if num_groups < 2 {
        return Err(CoreError::InvalidArgument(
            "fewer than two groups: noise spellings would be degenerate".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Vocabulary: prefix segments, group segments, per-API component and
    // name segments, per-API native replacement names, EOS last.
    let mut texts: Vec<String> = Vec::new();
    texts.extend((0..params.prefix_len).map(|i| format!("v2p{i}")));
    texts.extend((0..num_groups).map(|i| format!("g{i}")));
    texts.extend((0..params.num_apis).map(|i| format!("c{i}")));
    texts.extend((0..params.num_apis).map(|i| format!("f{i}")));
    texts.extend((0..params.num_apis).map(|i| format!("new{i}")));
    texts.extend((0..num_groups).map(|i| format!("x{i}")));
    texts.push("<eos>".to_string());
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let vocab = Vocabulary::with_eos_last(&refs)?;
    let prefix: Vec<TokenId> = (0..params.prefix_len as TokenId).collect();
    let group_tok = |g: usize| (params.prefix_len + g) as TokenId;
    let component_tok = |j: usize| (params.prefix_len + num_groups + j) as TokenId;
    let name_tok =
        |j: usize| (params.prefix_len + num_groups + params.num_apis + j) as TokenId;
    let native_tok =
        |j: usize| (params.prefix_len + num_groups + 2 * params.num_apis + j) as TokenId;
    let retired_tok =
        |g: usize| (params.prefix_len + num_groups + 3 * params.num_apis + g) as TokenId;

    // APIs round-robin over groups so group segments are shared.
    let apis: Vec<Vec<TokenId>> = (0..params.num_apis)
        .map(|j| vec![group_tok(j % num_groups), component_tok(j), name_tok(j)])
        .collect();
    let group_of = |j: usize| j % num_groups;
    let has_native: Vec<bool> = (0..params.num_apis)
        .map(|_| rng.random::<f64>() < params.native_fraction)
        .collect();
    if !has_native.iter().any(|&b| b) {
        // Keep the failure mode present even under unlucky seeds.
        return Err(CoreError::InvalidArgument(
            "no API received a native sibling; pick another seed or fraction".into(),
        ));
    }

    let constrainer_a = TrieConstrainer::build(&apis, vocab.eos_id())?;
    let mut b_seqs: Vec<Vec<TokenId>> = apis
        .iter()
        .map(|api| {
            let mut s = prefix.clone();
            s.extend_from_slice(api);
            s
        })
        .collect();
    for j in 0..params.num_apis {
        if has_native[j] {
            b_seqs.push(vec![group_tok(group_of(j)), component_tok(j), native_tok(j)]);
        }
    }
    let constrainer_b = TrieConstrainer::build(&b_seqs, vocab.eos_id())?;

    let mut problems = Vec::with_capacity(params.num_apis);
    for j in 0..params.num_apis {
        let g = group_of(j);
        let knows = rng.random::<f64>() < params.aware_fraction;
        let (w_dep, w_mig) = if knows {
            (params.migrated_weight, params.deprecated_weight)
        } else {
            (params.deprecated_weight, params.migrated_weight)
        };
        let target_a: Prefix = {
            let mut s = apis[j].clone();
            s.push(vocab.eos_id());
            Prefix::new(s)
        };
        let target_b: Prefix = {
            let mut s = prefix.clone();
            s.extend_from_slice(&apis[j]);
            s.push(vocab.eos_id());
            Prefix::new(s)
        };
        let mut leaves: Vec<(Prefix, f64)> = vec![
            (target_a.clone(), w_dep),
            (target_b.clone(), w_mig),
        ];
        let mut native_mass = 0.0;
        if has_native[j] {
            native_mass = params.native_weight;
            leaves.push((
                Prefix::new(vec![group_tok(g), component_tok(j), native_tok(j), vocab.eos_id()]),
                native_mass,
            ));
        }
        // Noise: prefixed spellings pairing a retired group with this API's
        // component and name. They look plausible token by token but the
        // retired groups are in neither API list, so under version B this
        // mass is dead weight behind the prefix.
        let noise_total = 1.0 - w_dep - w_mig - native_mass;
        let n_noise = params.noise_spellings.min(num_groups - 1).max(1);
        for i in 0..n_noise {
            let foreign = (g + 1 + (rng.random_range(0..num_groups - 1) + i) % (num_groups - 1))
                % num_groups;
            let foreign = if foreign == g { (g + 1) % num_groups } else { foreign };
            let mut s = prefix.clone();
            s.push(retired_tok(foreign));
            s.push(component_tok(j));
            s.push(name_tok(j));
            s.push(vocab.eos_id());
            leaves.push((Prefix::new(s), noise_total / n_noise as f64));
        }
        let model = TableModel::from_sequence_weights(vocab.clone(), &dedup_leaves(leaves))?;
        problems.push(ApiProblem {
            model,
            target_a,
            target_b,
            knows_new_spelling: knows,
        });
    }

    Ok(ApiBenchInstance {
        vocab,
        constrainer_a,
        constrainer_b,
        problems,
        apis,
        prefix,
    })
}

/// Merges duplicate leaves (noise picks can collide) by summing weights.
fn dedup_leaves(leaves: Vec<(Prefix, f64)>) -> Vec<(Prefix, f64)> {
    let mut map: std::collections::BTreeMap<Prefix, f64> = std::collections::BTreeMap::new();
    for (s, w) in leaves {
        *map.entry(s).or_insert(0.0) += w;
    }
    map.into_iter().collect()
}

impl ApiBenchInstance {
    /// Writes both API lists (one line per API, segments joined by dots) and
    /// one table-model file per problem into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let line = |toks: &[TokenId]| {
            toks.iter().map(|&t| self.vocab.text(t)).collect::<Vec<_>>().join(".")
        };
        let mut a = String::from("# version-A APIs\n");
        for api in &self.apis {
            a.push_str(&line(api));
            a.push('\n');
        }
        std::fs::write(dir.join("apis_a.txt"), a)?;

        let mut b = String::from("# version-B APIs\n");
        for seq in self
            .constrainer_b
            .complete_sequences()
            .iter()
            .map(|s| &s.tokens()[..s.len() - 1])
        {
            b.push_str(&line(seq));
            b.push('\n');
        }
        std::fs::write(dir.join("apis_b.txt"), b)?;

        for (i, p) in self.problems.iter().enumerate() {
            p.model.to_file(&dir.join(format!("problem_{i:04}.json")))?;
        }
        Ok(())
    }

    /// Tokenizer for the instance's API list files: one vocabulary symbol per
    /// dot-separated segment.
    pub fn tokenize_line(&self, line: &str) -> Option<Vec<TokenId>> {
        line.split('.').map(|seg| self.vocab.id_of(seg)).collect()
    }
}

/// Fraction of problems where a deterministic argmax walk under per-step
/// masking (version B) ends somewhere other than the oracle argmax leaf.
/// Walks that dead-end count as distorted.
pub fn distortion_fraction(instance: &ApiBenchInstance) -> Result<f64> {
    let eos = instance.vocab.eos_id();
    let mut distorted = 0usize;
    for p in &instance.problems {
        let oracle = crate::oracle::ExactDistribution::enumerate(
            &p.model,
            &instance.constrainer_b,
            instance.prefix.len() + 6,
            100_000,
        )?;
        let oracle_argmax = oracle
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(s, _)| s.clone())
            .ok_or(CoreError::EmptyLanguage)?;
        match masked_argmax_walk(&p.model, &instance.constrainer_b, eos)? {
            Some(leaf) if leaf == oracle_argmax => {}
            _ => distorted += 1,
        }
    }
    Ok(distorted as f64 / instance.problems.len() as f64)
}

/// Argmax walk with invalid tokens masked; `None` on a dead end.
fn masked_argmax_walk(
    model: &dyn SequenceModel,
    constrainer: &dyn crate::constrain::Constrainer,
    eos: TokenId,
) -> Result<Option<Prefix>> {
    let mut s = Prefix::empty();
    for _ in 0..64 {
        if s.is_complete(eos) {
            return Ok(Some(s));
        }
        let dist = model.next_distribution(&s)?;
        let mut best: Option<(TokenId, f64)> = None;
        for t in model.vocabulary().ids() {
            let p = dist.prob(t);
            if p > 0.0
                && constrainer.check(&s.child(t)).is_valid()
                && best.map_or(true, |(_, bp)| p > bp)
            {
                best = Some((t, p));
            }
        }
        match best {
            Some((t, _)) => s.push(t),
            None => return Ok(None),
        }
    }
    Ok(None)
}

/// The minimal four-leaf instance of the shared-prefix trap. The model:
///
/// - `m.r`  0.600  (not in the valid set)
/// - `m.p`  0.004
/// - `l.q`  0.200
/// - `d.x`  0.196
///
/// Valid set `{m.p, l.q, d.x}`. Per-step masking keeps the heavy first token
/// `m` (mass 0.604) and is then forced into `m.p`, so the conditional
/// probabilities (about 0.50 for `l.q`, 0.49 for `d.x`, 0.01 for `m.p`) are
/// inverted.
pub fn gen_shared_prefix_example() -> Result<(TableModel, TrieConstrainer)> {
    let vocab = Vocabulary::with_eos_last(&["m", "l", "d", "r", "p", "q", "x", "<eos>"])?;
    let t = |s: &str| vocab.id_of(s).unwrap();
    let eos = vocab.eos_id();
    let leaves = vec![
        (Prefix::new(vec![t("m"), t("r"), eos]), 0.600),
        (Prefix::new(vec![t("m"), t("p"), eos]), 0.004),
        (Prefix::new(vec![t("l"), t("q"), eos]), 0.200),
        (Prefix::new(vec![t("d"), t("x"), eos]), 0.196),
    ];
    let trie = TrieConstrainer::build(
        &[
            vec![t("m"), t("p")],
            vec![t("l"), t("q")],
            vec![t("d"), t("x")],
        ],
        eos,
    )?;
    let model = TableModel::from_sequence_weights(vocab, &leaves)?;
    Ok((model, trie))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constrain::{AllAccepting, Constrainer};
    use crate::model::joint_probability;
    use crate::oracle::ExactDistribution;

    #[test]
    fn binary_bench_has_seventeen_valid_strings_at_one_seventeenth() {
        let inst = gen_binary_bench().unwrap();
        let exact = ExactDistribution::enumerate(&inst.model, &inst.constrainer, 8, 10_000).unwrap();
        assert_eq!(exact.len(), 17);
        for (_, p) in exact.iter() {
            assert!((p - 1.0 / 17.0).abs() < 1e-12);
        }
        // Unconstrained validity rate: 17 of the 32 raw strings are valid.
        let all = ExactDistribution::enumerate(&inst.model, &AllAccepting, 8, 10_000).unwrap();
        assert_eq!(all.len(), 32);
        let valid_mass: f64 = all
            .iter()
            .filter(|(s, _)| inst.constrainer.check(s).is_valid())
            .map(|(_, p)| p)
            .sum();
        assert!((valid_mass - 17.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_model_is_deterministic_and_normalized() {
        let vocab = Vocabulary::with_eos_last(&["a", "b", "<eos>"]).unwrap();
        let m1 = SeededRandomModel::new(vocab.clone(), 7);
        let m2 = SeededRandomModel::new(vocab.clone(), 7);
        let m3 = SeededRandomModel::new(vocab, 8);
        let p = Prefix::new(vec![0, 1]);
        let d1 = m1.next_distribution(&p).unwrap();
        assert_eq!(d1, m2.next_distribution(&p).unwrap());
        assert_ne!(d1, m3.next_distribution(&p).unwrap());
        for &x in d1.probs() {
            assert!(x > 0.0);
        }
    }

    #[test]
    fn random_instances_are_reproducible_and_enumerable() {
        for seed in 0..20 {
            let (model, trie) = gen_random_instance(seed).unwrap();
            let (model2, trie2) = gen_random_instance(seed).unwrap();
            assert_eq!(trie.complete_sequences(), trie2.complete_sequences());
            assert_eq!(
                model.next_distribution(&Prefix::empty()).unwrap(),
                model2.next_distribution(&Prefix::empty()).unwrap()
            );
            let exact = ExactDistribution::enumerate(&model, &trie, 8, 100_000).unwrap();
            assert!(exact.len() >= 1 && exact.len() <= 12);
        }
    }

    #[test]
    fn api_bench_structure_holds() {
        let inst = gen_api_bench(30, 4, 1, 11).unwrap();
        assert_eq!(inst.problems.len(), 30);
        assert_eq!(inst.constrainer_a.leaf_count(), 30);
        // Version B holds one prefixed counterpart per API, plus natives.
        assert!(inst.constrainer_b.leaf_count() > 30);
        for p in &inst.problems {
            // Both spellings carry model mass, and only the B target is valid
            // under version B among the two.
            assert!(joint_probability(&p.model, &p.target_a).unwrap() > 0.0);
            assert!(joint_probability(&p.model, &p.target_b).unwrap() > 0.0);
            assert!(inst.constrainer_a.check(&p.target_a).is_valid());
            assert!(!inst.constrainer_a.check(&p.target_b).is_valid());
            assert!(inst.constrainer_b.check(&p.target_b).is_valid());
            assert!(!inst.constrainer_b.check(&p.target_a).is_valid());
            // target_b is target_a under the mandatory prefix.
            let mut expect = inst.prefix.clone();
            expect.extend_from_slice(p.target_a.tokens());
            assert_eq!(p.target_b.tokens(), &expect[..]);
        }
    }

    #[test]
    fn api_bench_regeneration_is_identical() {
        let a = gen_api_bench(20, 4, 2, 3).unwrap();
        let b = gen_api_bench(20, 4, 2, 3).unwrap();
        assert_eq!(a.vocab, b.vocab);
        assert_eq!(
            a.constrainer_b.complete_sequences(),
            b.constrainer_b.complete_sequences()
        );
        for (pa, pb) in a.problems.iter().zip(&b.problems) {
            assert_eq!(pa.target_b, pb.target_b);
            assert_eq!(
                joint_probability(&pa.model, &pa.target_b).unwrap(),
                joint_probability(&pb.model, &pb.target_b).unwrap()
            );
        }
    }

    #[test]
    fn api_bench_rejects_degenerate_parameters() {
        assert!(gen_api_bench(1, 4, 1, 0).is_err());
        assert!(gen_api_bench(10, 0, 1, 0).is_err());
        assert!(gen_api_bench(10, 4, 0, 0).is_err());
        // One group only: noise has nowhere to go.
        assert!(gen_api_bench(4, 4, 1, 0).is_err());
    }

    #[test]
    fn distortion_fraction_is_positive_at_defaults() {
        let inst = gen_api_bench(30, 4, 1, 5).unwrap();
        let f = distortion_fraction(&inst).unwrap();
        assert!(f > 0.0, "distortion fraction {f}");
    }

    #[test]
    fn shared_prefix_example_oracle_values() {
        let (model, trie) = gen_shared_prefix_example().unwrap();
        let exact = ExactDistribution::enumerate(&model, &trie, 4, 10_000).unwrap();
        assert_eq!(exact.len(), 3);
        assert!((exact.z() - 0.4).abs() < 1e-12);
        let vocab = model.vocabulary().clone();
        let t = |s: &str| vocab.id_of(s).unwrap();
        let leaf = |a: &str, b: &str| Prefix::new(vec![t(a), t(b), vocab.eos_id()]);
        assert!((exact.prob(&leaf("l", "q")) - 0.5).abs() < 1e-12);
        assert!((exact.prob(&leaf("d", "x")) - 0.49).abs() < 1e-12);
        assert!((exact.prob(&leaf("m", "p")) - 0.01).abs() < 1e-12);
        // The masked argmax walk lands on the lightest valid leaf.
        let walk = masked_argmax_walk(&model, &trie, vocab.eos_id()).unwrap().unwrap();
        assert_eq!(walk, leaf("m", "p"));
    }

    #[test]
    fn files_roundtrip_through_ingestion() {
        let inst = gen_api_bench(12, 3, 1, 2).unwrap();
        let dir = std::env::temp_dir().join("backsample-bench-test");
        inst.write_files(&dir).unwrap();
        let (trie, count) = crate::trie::ingest_api_list(
            &dir.join("apis_a.txt"),
            inst.vocab.eos_id(),
            |line| inst.tokenize_line(line),
        )
        .unwrap();
        assert_eq!(count, 12);
        assert_eq!(
            trie.complete_sequences(),
            inst.constrainer_a.complete_sequences()
        );
        let (trie_b, _) = crate::trie::ingest_api_list(
            &dir.join("apis_b.txt"),
            inst.vocab.eos_id(),
            |line| inst.tokenize_line(line),
        )
        .unwrap();
        assert_eq!(
            trie_b.complete_sequences(),
            inst.constrainer_b.complete_sequences()
        );
        let m = TableModel::from_file(&dir.join("problem_0000.json")).unwrap();
        assert_eq!(
            joint_probability(&m, &inst.problems[0].target_b).unwrap(),
            joint_probability(&inst.problems[0].model, &inst.problems[0].target_b).unwrap()
        );
    }
}
