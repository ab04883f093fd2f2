//! Acceptance gate: one test per shipping criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`). Criteria cover block-encoding
//! equivalence, polynomial-route agreement, postselection identities,
//! gradient correctness, ansatz parameter counts, resource arithmetic,
//! small-corpus training, forward-pass invariances, and (ignored by default)
//! the full-scale benchmark run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use quixer::circuit::circuit14;
use quixer::config::RunConfig;
use quixer::grad::{finite_difference_check, BundleLayout, Segment};
use quixer::model::{ModelConfig, QuixerModel};
use quixer::resources::{estimate, ResourceQuery};
use quixer::text::{Split, TokenStream, Vocabulary};
use quixer::train::{evaluate_perplexity, train_model};
use quixer::verify::{
    invariance_suite, block_encoding_suite, polynomial_suite, postselection_suite, PropertyReport,
    VerifyScale,
};

fn report(id: u32, passed: bool, detail: &str) {
    println!(
        "acceptance criterion {id}: {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {id} failed: {detail}");
}

/// Asserts a verification suite passed within its runtime budget and folds
/// its outcome into the per-criterion line.
fn report_suite(id: u32, suite: PropertyReport, budget_secs: f64) {
    let within = suite.runtime_secs < budget_secs;
    report(
        id,
        suite.passed && within,
        &format!(
            "{} [{:.2}s, budget {budget_secs}s]",
            suite.details, suite.runtime_secs
        ),
    );
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

#[test]
fn criterion_1_block_encoding_matches_weighted_sum() {
    report_suite(1, block_encoding_suite(VerifyScale::Full), 10.0);
}

#[test]
fn criterion_2_polynomial_routes_agree() {
    report_suite(2, polynomial_suite(VerifyScale::Full), 30.0);
}

#[test]
fn criterion_3_postselection_identity_and_bound() {
    report_suite(3, postselection_suite(VerifyScale::Full), 30.0);
}

#[test]
fn criterion_4_gradients_match_finite_differences() {
    let start = Instant::now();
    let config = ModelConfig {
        vocab_size: 11,
        embed_dim: 6,
        num_qubits: 3,
        window: 4,
        degree: 3,
        ansatz_layers: 1,
        head_hidden: 36,
        freeze_embedding: false,
    };
    let layout = BundleLayout::new(&config);
    let model = QuixerModel::new(config, 2024).expect("model");
    let contexts = [[1usize, 4, 7, 2], [10, 0, 3, 3], [5, 9, 8, 6]];
    let batch: Vec<(&[usize], usize)> = contexts
        .iter()
        .zip([2usize, 9, 0])
        .map(|(c, t)| (c.as_slice(), t))
        .collect();
    let requested = 20;
    let reports =
        finite_difference_check(&model, &batch, 1e-5, requested, 77).expect("fd check");

    let mut worst_rel = 0.0f64;
    let mut all_ok = true;
    for r in &reports {
        assert!(
            r.skipped.is_none(),
            "segment {} unexpectedly skipped: {:?}",
            r.segment.name(),
            r.skipped
        );
        // Small segments are sampled exhaustively; larger ones get the full
        // requested coordinate count.
        let expected = requested.min(layout.range(r.segment).len());
        all_ok &= r.sampled == expected && r.max_rel_error <= 1e-4;
        worst_rel = worst_rel.max(r.max_rel_error);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        4,
        all_ok && elapsed < 60.0 && reports.len() == Segment::ALL.len(),
        &format!(
            "{} segments, worst relative error {worst_rel:.3e} (tol 1e-4), eps 1e-5 [{elapsed:.2}s, budget 60s]",
            reports.len()
        ),
    );
}

#[test]
fn criterion_5_ansatz_parameter_count() {
    let reference = circuit14(6, 4).expect("ansatz").num_params();
    let mut sweep_ok = true;
    for q in 2..=7 {
        for l in 1..=5 {
            sweep_ok &= circuit14(q, l).expect("ansatz").num_params() == 4 * l * q;
        }
    }
    report(
        5,
        reference == 96 && sweep_ok,
        &format!("(q=6, l=4) has {reference} parameters (expected 96); 4*l*q sweep over q=2..=7, l=1..=5"),
    );
}

#[test]
fn criterion_6_resource_arithmetic() {
    let base_query = ResourceQuery {
        num_qubits: 6,
        window: 32,
        ansatz_layers: 4,
        degree: 3,
        gate_override: None,
        use_ancilla_select: false,
        ancilla_overhead: 1,
        prep_gate_override: None,
    };
    let base = estimate(&base_query).expect("estimate");
    let ancilla = estimate(&ResourceQuery {
        use_ancilla_select: true,
        ..base_query.clone()
    })
    .expect("estimate");
    let wide = estimate(&ResourceQuery {
        window: 128,
        ..base_query.clone()
    })
    .expect("estimate");
    let deep = estimate(&ResourceQuery {
        degree: 6,
        ..base_query.clone()
    })
    .expect("estimate");

    let ok = base.total_qubits == 14
        && ancilla.total_qubits == 17
        && wide.control_qubits == base.control_qubits + 2
        && deep.gates_select == 2 * base.gates_select;
    report(
        6,
        ok,
        &format!(
            "qubits {}/{} (expected 14/17), 4x window: +{} controls (expected +2), 2x degree: select x{} (expected x2)",
            base.total_qubits,
            ancilla.total_qubits,
            wide.control_qubits - base.control_qubits,
            deep.gates_select / base.gates_select
        ),
    );
}

/// Add-1-smoothed unigram perplexity over the same sliding-window targets
/// the model is evaluated on.
fn unigram_baseline_ppl(train: &TokenStream, valid: &TokenStream, window: usize, vocab: usize) -> f64 {
    let mut counts = vec![0usize; vocab];
    for &t in train.ids() {
        counts[t] += 1;
    }
    let total = train.len() as f64 + vocab as f64;
    let mut nll_sum = 0.0;
    let mut n = 0usize;
    for (_, target) in valid.windows(window, 1).expect("valid windows") {
        nll_sum += -((counts[target] as f64 + 1.0) / total).ln();
        n += 1;
    }
    (nll_sum / n as f64).exp()
}

#[test]
fn criterion_7_small_corpus_training_beats_unigram() {
    let start = Instant::now();
    let root = workspace_root();
    let run = RunConfig::load(&root.join("configs/tiny.json")).expect("tiny config");
    assert_eq!(
        (run.num_qubits, run.window, run.degree, run.ansatz_layers, run.epochs),
        (4, 8, 3, 2, 5),
        "bundled small-scale configuration drifted"
    );

    let train_text = std::fs::read_to_string(root.join(&run.train_path)).expect("train corpus");
    let valid_text = std::fs::read_to_string(root.join(&run.valid_path)).expect("valid corpus");
    let vocab = Vocabulary::build(&train_text).expect("vocab");
    assert!(
        (150..=260).contains(&vocab.size()),
        "corpus vocabulary drifted: {}",
        vocab.size()
    );
    let train_stream = vocab.encode(&train_text, Split::Train, run.append_eos);
    let valid_stream = vocab.encode(&valid_text, Split::Valid, run.append_eos);

    let baseline = unigram_baseline_ppl(&train_stream, &valid_stream, run.window, vocab.size());
    let model = QuixerModel::new(run.model_config(vocab.size()), run.seed).expect("model");
    let (best, log) = train_model(&model, &train_stream, &valid_stream, &run.train_config())
        .expect("training");
    let eval = evaluate_perplexity(&best, &valid_stream, run.window).expect("eval");
    let elapsed = start.elapsed().as_secs_f64();

    // Same seed, same process-wide thread pool: the rerun must reproduce the
    // metrics log byte for byte.
    let (_, rerun_log) = train_model(&model, &train_stream, &valid_stream, &run.train_config())
        .expect("rerun");
    let identical = log.to_csv() == rerun_log.to_csv();

    let ok = eval.perplexity < baseline
        && eval.postselection.mean > 0.0
        && eval.postselection.mean <= 1.0
        && identical
        && elapsed < 900.0;
    report(
        7,
        ok,
        &format!(
            "val ppl {:.2} vs unigram baseline {:.2}, postselection mean {:.4}, rerun identical: {identical} [{elapsed:.1}s, budget 900s]",
            eval.perplexity, baseline, eval.postselection.mean
        ),
    );
}

#[test]
fn criterion_8_forward_invariances() {
    report_suite(8, invariance_suite(VerifyScale::Full), 60.0);
}

/// Full-scale benchmark reproduction: ~3.4M-token corpus, 30 epochs. Takes
/// hours of CPU time, so it is ignored by default; fetch the corpus with
/// scripts/fetch_ptb.sh and run with
/// `cargo test -p quixer --test acceptance -- --ignored --nocapture`.
#[test]
#[ignore = "multi-hour full-scale training run; requires the fetched benchmark corpus"]
fn criterion_9_full_scale_benchmark_run() {
    let root = workspace_root();
    let run = RunConfig::load(&root.join("configs/ptb.json")).expect("benchmark config");
    let train_path = root.join(&run.train_path);
    assert!(
        train_path.is_file(),
        "benchmark corpus missing at {}; run scripts/fetch_ptb.sh first",
        train_path.display()
    );
    let train_text = std::fs::read_to_string(&train_path).expect("train corpus");
    let valid_text = std::fs::read_to_string(root.join(&run.valid_path)).expect("valid corpus");
    let vocab = Vocabulary::build(&train_text).expect("vocab");
    let train_stream = vocab.encode(&train_text, Split::Train, run.append_eos);
    let valid_stream = vocab.encode(&valid_text, Split::Valid, run.append_eos);
    let model = QuixerModel::new(run.model_config(vocab.size()), run.seed).expect("model");
    let (best, log) = train_model(&model, &train_stream, &valid_stream, &run.train_config())
        .expect("training");
    let eval = evaluate_perplexity(&best, &valid_stream, run.window).expect("eval");
    let best_epoch = log.best_epoch.expect("at least one epoch");
    report(
        9,
        eval.perplexity <= 127.0,
        &format!(
            "val ppl {:.2} at epoch {best_epoch} (target <= 127)",
            eval.perplexity
        ),
    );
}
