//! Library-level pipeline test: corpus -> vocabulary -> training ->
//! checkpoint round trip -> evaluation, checking that a reloaded model is
//! indistinguishable from the one that was saved.

use quixer::checkpoint;
use quixer::model::{ModelConfig, QuixerModel};
use quixer::text::{Split, Vocabulary};
use quixer::train::{evaluate_perplexity, train_model, TrainConfig};

fn micro_corpus() -> (String, String) {
    let line = "north wind and sun argued over the traveler cloak\n";
    (line.repeat(16), line.repeat(4))
}

#[test]
fn trained_model_survives_checkpoint_round_trip() {
    let (train_text, valid_text) = micro_corpus();
    let vocab = Vocabulary::build(&train_text).expect("vocab");
    let train_stream = vocab.encode(&train_text, Split::Train, true);
    let valid_stream = vocab.encode(&valid_text, Split::Valid, true);

    let model_config = ModelConfig {
        vocab_size: vocab.size(),
        embed_dim: 4,
        num_qubits: 2,
        window: 3,
        degree: 2,
        ansatz_layers: 1,
        head_hidden: 6,
        freeze_embedding: false,
    };
    let train_config = TrainConfig {
        epochs: 2,
        batch_contexts: 4,
        window: 3,
        lr_max: 0.02,
        lr_min: 0.002,
        dropout: 0.1,
        seed: 42,
        ..TrainConfig::default()
    };
    let model = QuixerModel::new(model_config, 42).expect("model");
    let (best, log) = train_model(&model, &train_stream, &valid_stream, &train_config)
        .expect("training");
    assert_eq!(log.epochs.len(), 2);
    assert!(log.epochs.iter().all(|e| e.train_loss.is_finite()));

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("model.qxcp");
    checkpoint::save(&best, &path).expect("save");
    let restored = checkpoint::load(&path).expect("load");

    // Bitwise-identical parameters mean bitwise-identical evaluations.
    let before = evaluate_perplexity(&best, &valid_stream, 3).expect("eval");
    let after = evaluate_perplexity(&restored, &valid_stream, 3).expect("eval");
    assert_eq!(before.perplexity.to_bits(), after.perplexity.to_bits());
    assert_eq!(
        before.postselection.mean.to_bits(),
        after.postselection.mean.to_bits()
    );

    let context = [1usize, 2, 3];
    let a = best.forward(&context).expect("forward");
    let b = restored.forward(&context).expect("forward");
    for (x, y) in a.logits.iter().zip(b.logits.iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }

    // The metrics log renders with the documented header and one row per epoch.
    let csv = log.to_csv();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("epoch,train_loss,val_perplexity,postselection_mean,postselection_min,postselection_max")
    );
    assert_eq!(lines.count(), 2);
}
