//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).

use backsample::bench::{
    gen_api_bench, gen_binary_bench, gen_random_instance, gen_shared_prefix_example,
    ApiBenchInstance,
};
use backsample::decode::{
    keep_or_replace, DecodeSession, KeepOrReplace, SessionConfig, Strategy,
};
use backsample::oracle::{chi_square_p, chi_square_p_counts, em_at_k, tv_distance, EmpiricalDistribution, ExactDistribution};
use backsample::{AllAccepting, CoreError, Prefix, SequenceModel, UniformModel, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, description: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({description}): {verdict} [{detail}]");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn session<'a>(
    model: &'a dyn SequenceModel,
    constrainer: &'a dyn backsample::Constrainer,
    seed: u64,
    share_q: bool,
) -> DecodeSession<'a> {
    let mut cfg = SessionConfig::default();
    cfg.seed = seed;
    cfg.share_q = share_q;
    DecodeSession::new(model, constrainer, cfg)
}

#[test]
fn criterion_1_binary_exactness() {
    let inst = gen_binary_bench().unwrap();
    let zeros = Prefix::new(vec![0, 0, 0, 0, 0, 2]);
    let n = 100_000u64;

    let mut s = session(&inst.model, &inst.constrainer, 101, true);
    let mut hits = 0u64;
    for _ in 0..n {
        if s.backtrack_sample().unwrap().sequence == zeros {
            hits += 1;
        }
    }
    let p_backtrack = hits as f64 / n as f64;

    let mut s = session(&inst.model, &inst.constrainer, 102, false);
    let mut hits = 0u64;
    for _ in 0..n {
        if s.sample_constrained_greedy().unwrap().sequence == zeros {
            hits += 1;
        }
    }
    let p_greedy = hits as f64 / n as f64;

    let ok = (p_backtrack - 1.0 / 17.0).abs() < 0.006 && (p_greedy - 0.5).abs() < 0.01;
    report(
        1,
        "binary instance frequencies",
        ok,
        format!("backtrack P(00000) = {p_backtrack:.4} (want 1/17), masked P(00000) = {p_greedy:.4} (want 1/2)"),
    );
}

#[test]
fn criterion_2_oracle_equivalence_on_random_instances() {
    let n = 200_000u64;
    let instances = 50u64;
    let mut chi_ok = 0usize;
    let mut worst_tv_margin = f64::INFINITY;
    for seed in 0..instances {
        let (model, trie) = gen_random_instance(seed).unwrap();
        let exact = ExactDistribution::enumerate(&model, &trie, 8, 1_000_000).unwrap();
        let mut s = session(&model, &trie, 1000 + seed, true);
        let mut emp = EmpiricalDistribution::new();
        for _ in 0..n {
            emp.record(&s.backtrack_sample().unwrap().sequence);
        }
        let tv = tv_distance(&emp, &exact);
        let threshold = 3.0 * (exact.len() as f64 / n as f64).sqrt();
        worst_tv_margin = worst_tv_margin.min(threshold - tv);
        assert!(
            tv < threshold,
            "instance {seed}: tv {tv:.5} >= threshold {threshold:.5}"
        );
        match chi_square_p(&emp, &exact, 5.0) {
            Ok(p) if p > 0.01 => chi_ok += 1,
            // A single valid leaf leaves no degrees of freedom.
            Err(CoreError::InvalidArgument(_)) if exact.len() == 1 => chi_ok += 1,
            _ => {}
        }
    }
    let ok = chi_ok >= 48;
    report(
        2,
        "random-instance oracle equivalence",
        ok,
        format!("all 50 TV checks passed (worst margin {worst_tv_margin:.5}), chi-square ok on {chi_ok}/50"),
    );
}

#[test]
fn criterion_3_rejection_update_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut failures = Vec::new();
    for config in 0..20 {
        let k = rng.random_range(2..=5usize);
        let p: Vec<f64> = {
            let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let q: Vec<f64> = (0..k).map(|_| 0.05 + 0.95 * rng.random::<f64>()).collect();
        // One propagation step shrinks exactly one child's estimate.
        let child = rng.random_range(0..k);
        let mut q_new = q.clone();
        q_new[child] *= rng.random::<f64>();
        let w_old: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a * b).collect();
        let w_new: Vec<f64> = p.iter().zip(&q_new).map(|(a, b)| a * b).collect();
        let total_old: f64 = w_old.iter().sum();
        let total_new: f64 = w_new.iter().sum();

        let mut counts = vec![0u64; k];
        for _ in 0..100_000 {
            let u: f64 = rng.random::<f64>() * total_old;
            let mut acc = 0.0;
            let mut n = k - 1;
            for (i, &w) in w_old.iter().enumerate() {
                acc += w;
                if u < acc {
                    n = i;
                    break;
                }
            }
            let ratio = (w_new[n] / total_new) / (w_old[n] / total_old);
            let end = if ratio >= 1.0 {
                n
            } else {
                let mut excl = w_new.clone();
                excl[n] = 0.0;
                match keep_or_replace(&mut rng, ratio, &excl, true) {
                    KeepOrReplace::Kept => n,
                    KeepOrReplace::Replaced(t) => t as usize,
                    KeepOrReplace::Emptied => panic!("nonempty replacement emptied"),
                }
            };
            counts[end] += 1;
        }
        let expected: Vec<f64> = w_new.iter().map(|w| w / total_new).collect();
        let pval = chi_square_p_counts(&counts, &expected, 5.0).unwrap();
        if pval <= 0.01 {
            failures.push((config, pval));
        }
    }
    report(
        3,
        "rejection update realizes the shrunk distribution",
        failures.is_empty(),
        format!("20 randomized configurations, failures: {failures:?}"),
    );
}

#[test]
fn criterion_4_shared_prefix_distortion_shape() {
    let (model, trie) = gen_shared_prefix_example().unwrap();
    let exact = ExactDistribution::enumerate(&model, &trie, 4, 10_000).unwrap();
    let vocab = model.vocabulary().clone();
    let t = |s: &str| vocab.id_of(s).unwrap();
    let wrong = Prefix::new(vec![t("m"), t("p"), vocab.eos_id()]);
    let oracle_leaf = Prefix::new(vec![t("l"), t("q"), vocab.eos_id()]);
    let n = 20_000u64;

    let mut s = session(&model, &trie, 4, false);
    let mut greedy = EmpiricalDistribution::new();
    for _ in 0..n {
        greedy.record(&s.sample_constrained_greedy().unwrap().sequence);
    }
    let wrong_freq = greedy.freq(&wrong);
    let wrong_is_plurality = greedy
        .iter()
        .all(|(seq, c)| seq == &wrong || c < greedy.count(&wrong));

    let mut s = session(&model, &trie, 5, true);
    let mut bt = EmpiricalDistribution::new();
    for _ in 0..n {
        bt.record(&s.backtrack_sample().unwrap().sequence);
    }
    let oracle_p = exact.prob(&oracle_leaf);
    let bt_freq = bt.freq(&oracle_leaf);
    // Three binomial sigmas of noise.
    let sigma = (oracle_p * (1.0 - oracle_p) / n as f64).sqrt();
    let ok = wrong_is_plurality && (bt_freq - oracle_p).abs() < 3.0 * sigma;
    report(
        4,
        "shared-prefix trap inverts under masking, not under backtracking",
        ok,
        format!(
            "masked freq(wrong leaf) = {wrong_freq:.4} (plurality: {wrong_is_plurality}), backtrack freq(oracle leaf) = {bt_freq:.4} vs oracle {oracle_p:.4}"
        ),
    );
}

/// Mean EM@1 over the bench, with decoding failures counted as misses.
fn api_em1(
    inst: &ApiBenchInstance,
    strategy: Strategy,
    distance: Option<usize>,
    samples_per_problem: u64,
    seed: u64,
) -> f64 {
    let mut correct = 0u64;
    let mut total = 0u64;
    for (idx, problem) in inst.problems.iter().enumerate() {
        let mut cfg = SessionConfig::default();
        cfg.seed = seed.wrapping_add(idx as u64);
        cfg.share_q = true;
        cfg.max_backtrack = distance;
        let mut s = DecodeSession::new(&problem.model, &inst.constrainer_b, cfg);
        for _ in 0..samples_per_problem {
            total += 1;
            let result = match strategy {
                Strategy::Unconstrained => s.sample_unconstrained(),
                Strategy::Constrained => s.sample_constrained_greedy(),
                Strategy::Asap => s.asap_sample(),
                Strategy::Backtrack => s.backtrack_sample(),
            };
            match result {
                Ok(rec) if rec.sequence == problem.target_b => correct += 1,
                Ok(_) => {}
                // A masked decoder can paint itself into a corner; that
                // sample is simply wrong.
                Err(CoreError::DeadEnd(_)) => {}
                Err(e) => panic!("{strategy} failed: {e}"),
            }
        }
    }
    correct as f64 / total as f64
}

#[test]
fn criterion_5_api_bench_em_ordering() {
    let inst = gen_api_bench(419, 8, 1, 7).unwrap();
    let n = 20;
    let em_un = api_em1(&inst, Strategy::Unconstrained, None, n, 50);
    let em_con = api_em1(&inst, Strategy::Constrained, None, n, 51);
    let em_bt = api_em1(&inst, Strategy::Backtrack, None, n, 52);
    let ok = em_bt > em_con && em_con > em_un;
    report(
        5,
        "EM@1 ordering on the 419-API bench (version B)",
        ok,
        format!("backtrack {em_bt:.4} > masked {em_con:.4} > unconstrained {em_un:.4}"),
    );
}

#[test]
fn criterion_6_bounded_backtracking_monotone() {
    let inst = gen_api_bench(419, 8, 1, 7).unwrap();
    let n = 20;
    let distances = [Some(1), Some(2), Some(4), Some(8), None];
    let mut ems = Vec::new();
    for &d in &distances {
        ems.push(api_em1(&inst, Strategy::Backtrack, d, n, 60));
    }
    let monotone = ems.windows(2).all(|w| w[0] <= w[1] + 1e-12);

    // Distance large enough to never bind must reproduce the unbounded
    // sampler trace for trace.
    let (model, trie) = gen_random_instance(17).unwrap();
    let trace = |bound: Option<usize>| {
        let mut cfg = SessionConfig::default();
        cfg.seed = 61;
        cfg.share_q = true;
        cfg.max_backtrack = bound;
        let mut s = DecodeSession::new(&model, &trie, cfg);
        (0..2000).map(|_| s.backtrack_sample().unwrap().sequence).collect::<Vec<_>>()
    };
    let trace_equal = trace(None) == trace(Some(usize::MAX));

    report(
        6,
        "EM@1 non-decreasing in the backtrack distance",
        monotone && trace_equal,
        format!("em by distance {ems:?}, unbounded trace equal: {trace_equal}"),
    );
}

#[test]
fn criterion_7_identity_reduction() {
    let vocab = Vocabulary::with_eos_last(&["a", "b", "c", "<eos>"]).unwrap();
    let model = UniformModel::new(vocab.clone());
    let dir = std::env::temp_dir().join("backsample-acceptance-identity");
    std::fs::create_dir_all(&dir).unwrap();
    let mut files = Vec::new();
    for strategy in Strategy::ALL {
        let mut s = session(&model, &AllAccepting, 7, true);
        let mut text = String::new();
        for _ in 0..2000 {
            let rec = match strategy {
                Strategy::Unconstrained => s.sample_unconstrained(),
                Strategy::Constrained => s.sample_constrained_greedy(),
                Strategy::Asap => s.asap_sample(),
                Strategy::Backtrack => s.backtrack_sample(),
            }
            .unwrap();
            text.push_str(&vocab.render(&rec.sequence, "."));
            text.push('\n');
        }
        let path = dir.join(format!("samples_{strategy}.txt"));
        std::fs::write(&path, text).unwrap();
        files.push(path);
    }
    let reference = std::fs::read(&files[0]).unwrap();
    let all_equal = files[1..]
        .iter()
        .all(|f| std::fs::read(f).unwrap() == reference);
    report(
        7,
        "all strategies emit identical files under the all-accepting constrainer",
        all_equal,
        format!("4 files x 2000 sequences, byte-identical: {all_equal}"),
    );
}

#[test]
fn criterion_8_em_at_k_estimator() {
    let expected = 1.0 - 455.0 / 1140.0;
    let got = em_at_k(20, 5, 3).unwrap();
    let ok = (got - expected).abs() < 1e-12
        && em_at_k(20, 20, 7).unwrap() == 1.0
        && em_at_k(20, 0, 7).unwrap() == 0.0;
    report(
        8,
        "EM@k closed form",
        ok,
        format!("em(20,5,3) = {got:.12}, want {expected:.12}; endpoints 1 and 0"),
    );
}

#[test]
fn criterion_9_call_accounting() {
    // The runner must publish avg/min/max model calls per strategy, and the
    // session counters must be monotone.
    let dir = std::env::temp_dir().join("backsample-acceptance-calls");
    let _ = std::fs::remove_dir_all(&dir);
    let cfg_text = format!(
        "[instance]\nkind = \"binary\"\n[run]\nsamples = 500\nout = '{}'\n",
        dir.display()
    );
    let cfg_path = std::env::temp_dir().join("backsample-acceptance-calls.toml");
    std::fs::write(&cfg_path, cfg_text).unwrap();
    let cfg = backsample_cli::ExperimentConfig::load(&cfg_path).unwrap();
    backsample_cli::cmd_sample(&cfg).unwrap();
    let metrics = std::fs::read_to_string(dir.join("metrics.txt")).unwrap();
    let summary: Vec<&str> = metrics
        .lines()
        .skip_while(|l| !l.starts_with("# summary"))
        .skip(1)
        .collect();
    let mut rows_ok = summary.len() == 4;
    for row in &summary {
        let f: Vec<&str> = row.split_whitespace().collect();
        let avg: f64 = f[2].parse().unwrap();
        let min: f64 = f[3].parse().unwrap();
        let max: f64 = f[4].parse().unwrap();
        rows_ok &= min <= avg && avg <= max;
    }

    let inst = gen_binary_bench().unwrap();
    let mut s = session(&inst.model, &inst.constrainer, 9, true);
    let mut last = (0, 0, 0);
    let mut monotone = true;
    for _ in 0..200 {
        s.backtrack_sample().unwrap();
        let now = s.counters();
        monotone &= now.0 >= last.0 && now.1 >= last.1 && now.2 >= last.2;
        last = now;
    }
    report(
        9,
        "per-strategy call accounting with monotone counters",
        rows_ok && monotone,
        format!("summary rows: {}, counters monotone: {monotone}", summary.len()),
    );
}
