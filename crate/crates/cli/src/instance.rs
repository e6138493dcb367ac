//! Turns an [`InstanceConfig`] into concrete models and constrainers.

use backsample::bench::{gen_api_bench, gen_binary_bench, gen_shared_prefix_example};
use backsample::trie::ingest_api_list;
use backsample::{Constrainer, Prefix, SequenceModel, TableModel, Vocabulary};

use crate::config::InstanceConfig;
use crate::error::{CliError, Result};

pub struct Problem {
    pub id: String,
    pub model: Box<dyn SequenceModel>,
    pub constrainer: Box<dyn Constrainer>,
    /// The intended answer; enables the EM@k columns.
    pub target: Option<Prefix>,
}

pub struct Instance {
    pub kind: String,
    pub vocab: Vocabulary,
    pub problems: Vec<Problem>,
}

pub fn build(cfg: &InstanceConfig) -> Result<Instance> {
    match cfg.kind.as_str() {
        "binary" => {
            let inst = gen_binary_bench()?;
            let vocab = inst.model.vocabulary().clone();
            let eos = vocab.eos_id();
            Ok(Instance {
                kind: cfg.kind.clone(),
                vocab,
                problems: vec![Problem {
                    id: "binary".into(),
                    model: Box::new(inst.model),
                    constrainer: Box::new(inst.constrainer),
                    target: Some(Prefix::new(vec![0, 0, 0, 0, 0, eos])),
                }],
            })
        }
        "shared-prefix" => {
            let (model, trie) = gen_shared_prefix_example()?;
            let vocab = model.vocabulary().clone();
            let exact =
                backsample::oracle::ExactDistribution::enumerate(&model, &trie, 4, 10_000)?;
            let target = exact
                .iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(s, _)| s.clone());
            Ok(Instance {
                kind: cfg.kind.clone(),
                vocab,
                problems: vec![Problem {
                    id: "shared-prefix".into(),
                    model: Box::new(model),
                    constrainer: Box::new(trie),
                    target,
                }],
            })
        }
        "api" => {
            let inst = gen_api_bench(cfg.num_apis, cfg.branching, cfg.prefix_len, cfg.gen_seed)?;
            let version_b = cfg.version == "b";
            let problems = inst
                .problems
                .into_iter()
                .enumerate()
                .map(|(i, p)| Problem {
                    id: format!("api-{i:04}"),
                    model: Box::new(p.model) as Box<dyn SequenceModel>,
                    constrainer: if version_b {
                        Box::new(inst.constrainer_b.clone()) as Box<dyn Constrainer>
                    } else {
                        Box::new(inst.constrainer_a.clone())
                    },
                    target: Some(if version_b { p.target_b } else { p.target_a }),
                })
                .collect();
            Ok(Instance {
                kind: cfg.kind.clone(),
                vocab: inst.vocab,
                problems,
            })
        }
        "files" => {
            let model_path = cfg.model.as_ref().expect("validated");
            let list_path = cfg.api_list.as_ref().expect("validated");
            let model = TableModel::from_file(model_path)?;
            let vocab = model.vocabulary().clone();
            let tokenize = |line: &str| {
                line.split('.')
                    .map(|seg| vocab.id_of(seg))
                    .collect::<Option<Vec<_>>>()
            };
            let (trie, _) = ingest_api_list(list_path, vocab.eos_id(), tokenize)?;
            let target = match &cfg.target {
                Some(text) => {
                    let mut toks = tokenize(text).ok_or_else(|| {
                        CliError::Config(format!("target {text:?} is not in the vocabulary"))
                    })?;
                    toks.push(vocab.eos_id());
                    Some(Prefix::new(toks))
                }
                None => None,
            };
            let id = model_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "files".into());
            Ok(Instance {
                kind: cfg.kind.clone(),
                vocab,
                problems: vec![Problem {
                    id,
                    model: Box::new(model),
                    constrainer: Box::new(trie),
                    target,
                }],
            })
        }
        other => Err(CliError::Config(format!("unknown instance kind {other:?}"))),
    }
}
