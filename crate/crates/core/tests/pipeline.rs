use std::fs;

use nmt_core::corpus::{CorpusFormat, Direction};
use nmt_core::eval::{EvalOptions, System};
use nmt_core::pipeline::{
    cmd_evaluate, cmd_prepare, cmd_train, load_prepared, EvaluateOptions, PrepareOptions, TrainOptions,
};
use nmt_core::training::{Regime, TrainConfig};

const CORPUS: &str = "\"one two three\n\nfour five\n\nsix\"\t\"satu dua tiga\n\nempat lima\n\nenam\"\t\"satu dua tiga\n\nempat lima\n\nenam\"\t\"one two three\n\nfour five\n\nsix\"
\"seven\n\neight nine\n\nten\"\t\"tujuh\n\nlapan sembilan\n\nsepuluh\"\t\"tujuh\n\nlapan sembilan\n\nsepuluh\"\t\"seven\n\neight nine\n\nten\"
";

fn prepare(dir: &std::path::Path, regime: Regime) -> nmt_core::pipeline::PrepareStats {
    let corpus = dir.join("corpus.tsv");
    fs::write(&corpus, CORPUS).unwrap();
    cmd_prepare(&PrepareOptions {
        corpus,
        format: CorpusFormat::default(),
        out_dir: dir.join(format!("data-{regime}")),
        regime,
        direction: Direction::MalayToEnglish,
        max_length: 2000,
    })
    .unwrap()
}

#[test]
fn pair_counts_follow_the_regime() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(prepare(dir.path(), Regime::ParagraphLevel).pairs, 6);
    assert_eq!(prepare(dir.path(), Regime::EmailLevel).pairs, 2);
    let data = load_prepared(&dir.path().join("data-paragraph")).unwrap();
    assert_eq!(data.pairs.len(), 6);
    assert_eq!(data.stats.regime, Regime::ParagraphLevel);
}

#[test]
fn memorised_corpus_scores_perfectly_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path(), Regime::ParagraphLevel);
    let run = dir.path().join("run");
    cmd_train(&TrainOptions {
        dataset_dir: dir.path().join("data-paragraph"),
        out_dir: run.clone(),
        config: TrainConfig {
            hidden_size: 32,
            learning_rate: 0.1,
            iterations: 3000,
            log_interval: 500,
            rng_seed: 2,
            ..TrainConfig::default()
        },
        checkpoint_every: 0,
    })
    .unwrap();
    let mut eval = EvalOptions::new(Direction::MalayToEnglish);
    eval.bleu.smoothing = true;
    let options = EvaluateOptions {
        checkpoint: run.join("checkpoint.bin"),
        corpus: dir.path().join("corpus.tsv"),
        format: CorpusFormat::default(),
        out_dir: dir.path().join("eval"),
        eval,
    };
    let report = cmd_evaluate(&options).unwrap();
    // baseline column equals the human column
    assert_eq!(report.row(System::BaselineVsHuman).unwrap().corpus_bleu, 1.0);
    assert_eq!(report.row(System::ModelVsHuman).unwrap().corpus_bleu, 1.0);
    let first = fs::read_to_string(dir.path().join("eval/evaluation.tsv")).unwrap();
    cmd_evaluate(&options).unwrap();
    assert_eq!(first, fs::read_to_string(dir.path().join("eval/evaluation.tsv")).unwrap());
}
