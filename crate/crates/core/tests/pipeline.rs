use std::fs;
use std::path::Path;

use patchflag::cnn::PatchNetSize;
use patchflag::model::ModelSpec;
use patchflag::pipeline::{self, RunConfig, Selection};
use patchflag::synth::synth_corpus;

fn tiny_config(root: &Path) -> RunConfig {
    synth_corpus(&root.join("data"), 3, 4, 11).unwrap();
    let mut cfg = RunConfig {
        manifest: root.join("data").join("manifest.csv"),
        output_dir: root.join("out"),
        models: vec![ModelSpec::kan(vec![8, 3]), ModelSpec::patchnet(PatchNetSize::S0)],
        seed: 3,
        ..RunConfig::default()
    };
    cfg.kan.epochs = 2;
    cfg.kan.patience = 2;
    cfg.cnn.epochs = 1;
    cfg.cnn.patience = 1;
    cfg.cnn.batch_size = 32;
    cfg
}

#[test]
fn suite_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let summary = pipeline::suite(&cfg).unwrap();
    let layout = cfg.layout();

    assert_eq!(summary.accuracy.len(), 2);
    for table in &summary.accuracy {
        assert_eq!(table.splits.len(), 10);
    }
    for spec in &cfg.models {
        for i in 0..cfg.n_splits {
            assert!(layout.checkpoint(&spec.id(), i).exists());
            assert!(layout.flags(&spec.id(), i).exists());
            assert!(layout.predictions(&spec.id(), i).exists());
        }
    }
    let csv = fs::read_to_string(layout.suite_summary()).unwrap();
    assert!(csv.starts_with("painting,artist,avg_topk_patches_cnn,topk_patches_kan,flagged_by\n"));
    assert!(summary.agreement.is_some());
    assert_eq!(summary.misattribution.len(), 20);
}

#[test]
fn stages_can_be_rerun_for_one_model_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.models.truncate(1);
    pipeline::ingest(&cfg).unwrap();
    pipeline::split(&cfg).unwrap();
    let patches = pipeline::patch(&cfg).unwrap();
    assert!(patches.patches > 0);
    assert!(patches.above_threshold <= patches.patches);

    let sel = Selection {
        model: Some("kan".into()),
        split: Some(4),
    };
    let reports = pipeline::train_stage(&cfg, &sel).unwrap();
    assert_eq!(reports.len(), 1);
    let evals = pipeline::eval_stage(&cfg, &sel).unwrap();
    assert!(evals[0].test_patches > 0);
    let flags = pipeline::flag_stage(&cfg, &sel).unwrap();
    assert_eq!(flags[0].split_id, 4);

    let missing = Selection {
        model: Some("kan".into()),
        split: Some(5),
    };
    let err = pipeline::eval_stage(&cfg, &missing).unwrap_err();
    assert!(err.to_string().contains("`train`"), "{err}");
}

#[test]
fn checkpoint_round_trip_reproduces_reported_metrics() {
    use patchflag::corpus::Subset;
    use patchflag::model::AnyModel;
    use patchflag::tensorkit::Checkpoint;
    use patchflag::trainer::evaluate;

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.kan.epochs = 6;
    cfg.kan.patience = 2;
    pipeline::ingest(&cfg).unwrap();
    pipeline::split(&cfg).unwrap();
    pipeline::patch(&cfg).unwrap();
    let sel = Selection {
        model: Some("kan".into()),
        split: Some(1),
    };
    let report = pipeline::train_stage(&cfg, &sel).unwrap().remove(0);

    let min = report.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(report.min_val_loss, min);
    assert_eq!(report.epochs[report.best_epoch - 1].val_loss, min);

    let ckpt = Checkpoint::load(&cfg.layout().checkpoint("kan", 1)).unwrap();
    let (model, spec) = AnyModel::from_checkpoint(&ckpt).unwrap();
    assert_eq!(spec, cfg.models[0]);
    let patches = pipeline::load_patch_set(&cfg, &spec).unwrap();
    let split = &pipeline::load_splits(&cfg).unwrap()[1];
    let val = patches.select(split, Subset::Val, cfg.entropy_threshold).unwrap();
    let eval = evaluate(&model, &val, patches.forger).unwrap();
    assert_eq!(eval.loss, report.min_val_loss);
    assert_eq!(eval.accuracy, report.val_accuracy);
    assert_eq!(eval.confusion, report.confusion);
}

#[test]
fn rerunning_stages_rewrites_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.models.truncate(1);
    let layout = cfg.layout();
    let files = || {
        [
            layout.manifest(),
            layout.split(0),
            layout.split(9),
            layout.inventory(),
            layout.tensors(16),
        ]
        .map(|p| fs::read(p).unwrap())
    };
    pipeline::ingest(&cfg).unwrap();
    pipeline::split(&cfg).unwrap();
    pipeline::patch(&cfg).unwrap();
    let first = files();
    pipeline::ingest(&cfg).unwrap();
    pipeline::split(&cfg).unwrap();
    pipeline::patch(&cfg).unwrap();
    assert_eq!(first, files());
}
