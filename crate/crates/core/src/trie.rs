//! Token-id trie over a finite set of valid complete sequences.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::constrain::{Constrainer, Validity};
use crate::error::{CoreError, Result};
use crate::vocab::{Prefix, TokenId};

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: HashMap<TokenId, usize>,
    /// Set when an inserted sequence ends here (EOS edge target).
    leaf: bool,
}

/// Accepts exactly the prefixes of its inserted sequences (each implicitly
/// EOS-terminated). Completability-sound by construction: every node lies on a
/// path to a leaf.
#[derive(Debug, Clone)]
pub struct TrieConstrainer {
    nodes: Vec<TrieNode>,
    eos_id: TokenId,
    leaves: usize,
}

impl TrieConstrainer {
    /// Builds a trie over the given token-id sequences. Sequences may be given
    /// with or without a trailing EOS; duplicates are deduplicated.
    pub fn build(sequences: &[Vec<TokenId>], eos_id: TokenId) -> Result<Self> {
        if sequences.is_empty() {
            return Err(CoreError::EmptyLanguage);
        }
        let mut trie = Self {
            nodes: vec![TrieNode::default()],
            eos_id,
            leaves: 0,
        };
        for seq in sequences {
            let body: Vec<TokenId> = match seq.split_last() {
                Some((&last, rest)) if last == eos_id => rest.to_vec(),
                _ => seq.clone(),
            };
            if body.is_empty() {
                return Err(CoreError::InvalidArgument("empty sequence in trie input".into()));
            }
            if body.contains(&eos_id) {
                return Err(CoreError::InvalidArgument("EOS inside a sequence".into()));
            }
            trie.insert(&body);
        }
        Ok(trie)
    }

    fn insert(&mut self, body: &[TokenId]) {
        let mut node = 0usize;
        for &t in body {
            node = match self.nodes[node].children.get(&t) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(t, next);
                    next
                }
            };
        }
        if !self.nodes[node].leaf {
            self.nodes[node].leaf = true;
            self.leaves += 1;
        }
    }

    /// Number of distinct inserted sequences.
    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn eos_id(&self) -> TokenId {
        self.eos_id
    }

    /// All complete sequences accepted by the trie, EOS-terminated.
    pub fn complete_sequences(&self) -> Vec<Prefix> {
        let mut out = Vec::with_capacity(self.leaves);
        let mut stack: Vec<(usize, Vec<TokenId>)> = vec![(0, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            if self.nodes[node].leaf {
                let mut seq = path.clone();
                seq.push(self.eos_id);
                out.push(Prefix::new(seq));
            }
            let mut kids: Vec<_> = self.nodes[node].children.iter().collect();
            kids.sort_by_key(|(t, _)| **t);
            for (&t, &next) in kids.into_iter().rev() {
                let mut p = path.clone();
                p.push(t);
                stack.push((next, p));
            }
        }
        out.sort();
        out
    }
}

impl Constrainer for TrieConstrainer {
    fn check(&self, prefix: &Prefix) -> Validity {
        let mut node = 0usize;
        let tokens = prefix.tokens();
        for (i, &t) in tokens.iter().enumerate() {
            if t == self.eos_id {
                // EOS must be last and land on a leaf.
                if i + 1 == tokens.len() && self.nodes[node].leaf {
                    return Validity::Valid;
                }
                return Validity::Invalid;
            }
            match self.nodes[node].children.get(&t) {
                Some(&next) => node = next,
                None => return Validity::Invalid,
            }
        }
        Validity::Valid
    }
}

/// Reads a newline-separated API list (UTF-8, `#` comments ignored),
/// tokenizes each line, and builds a trie. Returns the trie and the number of
/// ingested (pre-deduplication) entries.
pub fn ingest_api_list<F>(
    path: &Path,
    eos_id: TokenId,
    mut tokenizer: F,
) -> Result<(TrieConstrainer, usize)>
where
    F: FnMut(&str) -> Option<Vec<TokenId>>,
{
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut sequences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = tokenizer(line).ok_or_else(|| CoreError::Ingestion {
            line: idx + 1,
            msg: format!("cannot tokenize {line:?}"),
        })?;
        sequences.push(tokens);
    }
    let count = sequences.len();
    let trie = TrieConstrainer::build(&sequences, eos_id)?;
    Ok((trie, count))
}

#[allow(dead_code)]
fn _assert_traits() {
    fn is_sync<T: Sync>() {}
    is_sync::<TrieConstrainer>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constrain::valid_next_tokens;
    use crate::vocab::Vocabulary;
    use std::collections::BTreeSet;
    use std::io::Write;

    fn vocab() -> Vocabulary {
        Vocabulary::with_eos_last(&["a", "b", "c", "<eos>"]).unwrap()
    }

    #[test]
    fn singleton_trie_accepts_only_its_prefixes() {
        let eos = 3;
        let trie = TrieConstrainer::build(&[vec![0]], eos).unwrap();
        assert!(trie.check(&Prefix::empty()).is_valid());
        assert!(trie.check(&Prefix::new(vec![0])).is_valid());
        assert!(trie.check(&Prefix::new(vec![0, eos])).is_valid());
        assert!(!trie.check(&Prefix::new(vec![1])).is_valid());
        assert!(!trie.check(&Prefix::new(vec![eos])).is_valid());
        assert!(!trie.check(&Prefix::new(vec![0, 0])).is_valid());
    }

    #[test]
    fn shared_prefix_branches() {
        // {"ab", "ac"}: after "a" both continuations remain.
        let trie = TrieConstrainer::build(&[vec![0, 1], vec![0, 2]], 3).unwrap();
        let set = valid_next_tokens(&trie, &vocab(), &Prefix::new(vec![0])).unwrap();
        assert_eq!(set, BTreeSet::from([1, 2]));
        assert_eq!(trie.leaf_count(), 2);
    }

    #[test]
    fn only_completion_remaining_is_eos() {
        let trie = TrieConstrainer::build(&[vec![0, 1]], 3).unwrap();
        let set = valid_next_tokens(&trie, &vocab(), &Prefix::new(vec![0, 1])).unwrap();
        assert_eq!(set, BTreeSet::from([3]));
    }

    #[test]
    fn duplicates_deduplicated() {
        let trie = TrieConstrainer::build(&[vec![0], vec![0], vec![1]], 3).unwrap();
        assert_eq!(trie.leaf_count(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            TrieConstrainer::build(&[], 3),
            Err(CoreError::EmptyLanguage)
        ));
    }

    #[test]
    fn complete_sequences_enumerates_leaves() {
        let trie = TrieConstrainer::build(&[vec![0, 1], vec![0, 2], vec![1]], 3).unwrap();
        let seqs = trie.complete_sequences();
        assert_eq!(
            seqs,
            vec![
                Prefix::new(vec![0, 1, 3]),
                Prefix::new(vec![0, 2, 3]),
                Prefix::new(vec![1, 3]),
            ]
        );
    }

    #[test]
    fn ingest_reads_dedups_and_reports_errors() {
        let vocab = vocab();
        let dir = std::env::temp_dir().join("backsample-trie-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("apis.txt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment").unwrap();
        writeln!(f, "a.b").unwrap();
        writeln!(f, "a.b").unwrap();
        writeln!(f, "a.c").unwrap();
        drop(f);

        let tok = |line: &str| {
            line.split('.')
                .map(|seg| vocab.id_of(seg))
                .collect::<Option<Vec<_>>>()
        };
        let (trie, count) = ingest_api_list(&path, 3, tok).unwrap();
        assert_eq!(count, 3);
        assert_eq!(trie.leaf_count(), 2);

        // Untokenizable line names its line number.
        let bad = dir.join("bad.txt");
        std::fs::write(&bad, "a.b\nzzz\n").unwrap();
        match ingest_api_list(&bad, 3, tok) {
            Err(CoreError::Ingestion { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }

        // Empty file yields the empty-language error.
        let empty = dir.join("empty.txt");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(
            ingest_api_list(&empty, 3, tok),
            Err(CoreError::EmptyLanguage)
        ));
    }
}
