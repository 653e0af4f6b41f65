//! Acceptance criteria 1–8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use patchflag::cnn::{build_patchnet, PatchNetConfig, PatchNetSize};
use patchflag::corpus::{generate_split_suite, ArtworkRecord, ClassList, CorpusManifest, SplitFractions, Subset};
use patchflag::flagging::{
    count_misattributed, cross_resolution_compare, flag_paintings, top_k_forger, PatchPrediction,
};
use patchflag::kan::{bspline_basis, build_kan, SplineGrid};
use patchflag::model::{Classifier, ModelSpec};
use patchflag::patching::{channel_entropy, PatchGrid};
use patchflag::pipeline::{self, RunConfig};
use patchflag::synth::synth_corpus;
use patchflag::tensorkit::gradcheck::{check_gradients, GradCheckConfig};
use patchflag::tensorkit::{seeded_rng, softmax_xent, Tensor};
use patchflag::trainer::{evaluate, fit, train, TrainConfig};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > limit {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    } else {
        Ok(t)
    }
}

// ---------------------------------------------------------------- 1

fn entropy_oracle(channel: &[u8]) -> f64 {
    let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
    for &v in channel {
        *counts.entry(v).or_default() += 1;
    }
    let n = channel.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(101, 0);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        // Mix of value ranges so entropies span the whole [0, 8] interval.
        let levels: u16 = match i % 4 {
            0 => 1 + rng.random_range(0..4),
            1 => rng.random_range(2..32),
            2 => rng.random_range(32..200),
            _ => 256,
        };
        let base: u8 = rng.random_range(0..=(256 - levels) as u8);
        let channel: Vec<u8> = (0..256 * 256)
            .map(|_| base + rng.random_range(0..levels) as u8)
            .collect();
        worst = worst.max((channel_entropy(&channel) - entropy_oracle(&channel)).abs());
    }
    ensure!(worst <= 1e-9, "max deviation from histogram oracle {worst:e}");

    let constant = vec![77u8; 256 * 256];
    let two: Vec<u8> = (0..256 * 256).map(|i| if i % 2 == 0 { 10 } else { 200 }).collect();
    let uniform: Vec<u8> = (0..256 * 256).map(|i| (i % 256) as u8).collect();
    ensure!(channel_entropy(&constant) == 0.0, "constant channel gave {}", channel_entropy(&constant));
    ensure!(channel_entropy(&two) == 1.0, "two-value channel gave {}", channel_entropy(&two));
    ensure!(channel_entropy(&uniform) == 8.0, "uniform channel gave {}", channel_entropy(&uniform));
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("1000 patches, max deviation {worst:.1e}, {t:.2?}"))
}

// ---------------------------------------------------------------- shared synthetic run

struct SynthRun {
    _dir: tempfile::TempDir,
    cfg: RunConfig,
}

/// 12-class synthetic corpus, 10 paintings per class, ingested, split and patched.
fn synth_run() -> Result<SynthRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    synth_corpus(&data, 12, 10, 2024).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        manifest: data.join("manifest.csv"),
        output_dir: dir.path().join("out"),
        seed: 7,
        ..RunConfig::default()
    };
    pipeline::ingest(&cfg).map_err(|e| e.to_string())?;
    pipeline::split(&cfg).map_err(|e| e.to_string())?;
    pipeline::patch(&cfg).map_err(|e| e.to_string())?;
    Ok(SynthRun { _dir: dir, cfg })
}

// ---------------------------------------------------------------- 2

fn criterion_2(run: &SynthRun) -> Outcome {
    let mut cfg = run.cfg.clone();
    // Single-layer KAN keeps the 30 sweep trainings short; the criterion is
    // about the retained-patch counts and the table schema.
    cfg.models = vec![ModelSpec::kan(vec![12])];
    cfg.kan.epochs = 3;
    cfg.kan.patience = 3;
    let thresholds = [None, Some(2.5), Some(3.0)];
    let rows = pipeline::entropy_sweep(&cfg, "kan", &thresholds).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 3, "expected 3 rows, got {}", rows.len());
    for w in rows.windows(2) {
        ensure!(
            w[1].train_patches <= w[0].train_patches && w[1].val_patches <= w[0].val_patches,
            "counts increase between {:?} and {:?}",
            w[0].threshold,
            w[1].threshold
        );
    }
    ensure!(
        rows[2].train_patches + rows[2].val_patches < rows[0].train_patches + rows[0].val_patches,
        "synthetic corpus has no low-entropy patches to drop"
    );

    // Independent count from the inventory on the first split.
    let text = fs::read_to_string(cfg.layout().inventory()).map_err(|e| e.to_string())?;
    let split = &pipeline::load_splits(&cfg).map_err(|e| e.to_string())?[0];
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let id_col = headers.iter().position(|h| h == "artwork_id").ok_or("no artwork_id column")?;
    let ent_col = headers.iter().position(|h| h == "mean_entropy").ok_or("no mean_entropy column")?;
    let inventory: Vec<(String, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[id_col].to_string(), r[ent_col].parse().unwrap())
        })
        .collect();
    for row in &rows {
        let count = |subset: Subset| {
            inventory
                .iter()
                .filter(|(id, e)| split.subset_of(id) == Some(subset) && row.threshold.is_none_or(|t| *e > t))
                .count()
        };
        ensure!(
            (row.train_patches, row.val_patches) == (count(Subset::Train), count(Subset::Val)),
            "threshold {:?}: reported {:?}, inventory gives {:?}",
            row.threshold,
            (row.train_patches, row.val_patches),
            (count(Subset::Train), count(Subset::Val))
        );
        ensure!(
            row.min_val_loss.is_finite() && (0.0..=1.0).contains(&row.avg_val_accuracy) && row.std_val_accuracy >= 0.0,
            "row {row:?} out of range"
        );
    }
    let csv_text = fs::read_to_string(cfg.layout().entropy_sweep()).map_err(|e| e.to_string())?;
    let mut lines = csv_text.lines();
    ensure!(
        lines.next() == Some("threshold,train_patches,val_patches,min_val_loss,avg_val_acc,std_val_acc"),
        "unexpected sweep header"
    );
    ensure!(lines.count() == 3, "sweep csv does not have 3 rows");
    let counts: Vec<String> = rows.iter().map(|r| format!("{}/{}", r.train_patches, r.val_patches)).collect();
    Ok(format!("train/val patches {}", counts.join(" ≥ ")))
}

// ---------------------------------------------------------------- 3

/// Cox–de Boor from the definition, last interval closed at `hi`.
fn naive_basis(m: usize, p: usize, x: f64, t: &[f64], hi: f64, last: usize) -> f64 {
    if p == 0 {
        return if x == hi {
            f64::from(m == last)
        } else {
            f64::from(t[m] <= x && x < t[m + 1])
        };
    }
    let left = (x - t[m]) / (t[m + p] - t[m]) * naive_basis(m, p - 1, x, t, hi, last);
    let right = (t[m + p + 1] - x) / (t[m + p + 1] - t[m + 1]) * naive_basis(m + 1, p - 1, x, t, hi, last);
    left + right
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (g, k) = (5usize, 3usize);
    let grid = SplineGrid::new(g, k, -1.0, 1.0).map_err(|e| e.to_string())?;
    let t = grid.knots().to_vec();
    ensure!(t.len() == g + 2 * k + 1, "expected {} knots, got {}", g + 2 * k + 1, t.len());
    // Degree-0 index whose interval ends at hi.
    let last = k + g - 1;
    let n = 10_000;
    let (mut unity, mut oracle): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        let b = bspline_basis(x, &grid);
        ensure!(b.len() == g + k, "basis length {}", b.len());
        unity = unity.max((b.iter().sum::<f64>() - 1.0).abs());
        for (m, &v) in b.iter().enumerate() {
            ensure!(v >= 0.0, "B_{m}({x}) = {v} < 0");
            if v != 0.0 {
                ensure!(t[m] <= x && x <= t[m + k + 1], "B_{m}({x}) = {v} outside its support");
            }
            oracle = oracle.max((v - naive_basis(m, k, x, &t, 1.0, last)).abs());
        }
    }
    ensure!(unity < 1e-9, "partition of unity off by {unity:e}");
    ensure!(oracle <= 1e-9, "naive recursion differs by {oracle:e}");
    let el = within(Duration::from_secs(5), start)?;
    Ok(format!("unity {unity:.1e}, oracle {oracle:.1e}, {el:.2?}"))
}

// ---------------------------------------------------------------- 4

fn xent_sum(logits: &[f64], labels: &[usize], nc: usize) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (z, &y) in logits.chunks_exact(nc).zip(labels) {
        let out = softmax_xent(&Tensor::from_vec(vec![nc], z.to_vec()), y).unwrap();
        loss += out.loss;
        grad.extend_from_slice(out.grad.data());
    }
    (loss, grad)
}

fn grad_check<M: Classifier<f64>>(model: &M, inputs: &[Vec<f64>], labels: &[usize], cfg: &GradCheckConfig) -> Result<(usize, f64), String> {
    let nc = model.n_classes();
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (logits, cache) = model.forward(&refs).map_err(|e| e.to_string())?;
    let (_, grad) = xent_sum(&logits, labels, nc);
    let analytic = model.backward(&cache, &grad).map_err(|e| e.to_string())?;
    let report = check_gradients(
        model,
        &analytic,
        |m: &mut M| m.params_mut(),
        |m: &M| xent_sum(&m.forward(&refs).unwrap().0, labels, nc).0,
        cfg,
    );
    ensure!(report.len() == analytic.len(), "not every group was checked");
    let mut worst: f64 = 0.0;
    for r in &report {
        ensure!(r.passed, "group {} failed: relative error {:.2e}", r.group, r.max_rel_error);
        worst = worst.max(r.max_rel_error);
    }
    Ok((report.len(), worst))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(404, 0);
    let labels: Vec<usize> = (0..10).map(|i| i % 12).collect();
    let cfg = GradCheckConfig {
        coords_per_group: Some(24),
        directions: 4,
        ..GradCheckConfig::default()
    };

    let kan = build_kan::<f64>(48, &[120, 84, 12], SplineGrid::default(), 12, 11).map_err(|e| e.to_string())?;
    let kan_in: Vec<Vec<f64>> = (0..10).map(|_| (0..48).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (kan_groups, kan_err) = grad_check(&kan, &kan_in, &labels, &cfg).map_err(|e| format!("KAN {e}"))?;

    let net = build_patchnet::<f64>(PatchNetConfig::preset(PatchNetSize::S0, 12), 32, 12).map_err(|e| e.to_string())?;
    let cnn_in: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..3 * 32 * 32).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let (cnn_groups, cnn_err) = grad_check(&net, &cnn_in, &labels, &cfg).map_err(|e| format!("PatchNet-S0 {e}"))?;

    let t = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "KAN {kan_groups} groups (max rel {kan_err:.1e}), PatchNet-S0 {cnn_groups} groups (max rel {cnn_err:.1e}), {t:.2?}"
    ))
}

// ---------------------------------------------------------------- 5

fn criterion_5(run: &SynthRun) -> Outcome {
    let start = Instant::now();
    let cfg = &run.cfg;
    let split = &pipeline::load_splits(cfg).map_err(|e| e.to_string())?[0];
    let mut accs = Vec::new();
    for (spec, target) in [(ModelSpec::kan(vec![120, 84, 12]), 0.90), (ModelSpec::patchnet(PatchNetSize::S0), 0.98)] {
        let patches = pipeline::load_patch_set(cfg, &spec).map_err(|e| e.to_string())?;
        let tc = cfg.train_config(&spec);
        ensure!(tc.epochs <= 100, "{} configured for {} epochs", spec.id(), tc.epochs);
        let model = spec.build(patches.n_classes(), tc.seed).map_err(|e| e.to_string())?;
        let (_, report) = train(model, split, &patches, &tc).map_err(|e| e.to_string())?;
        ensure!(
            report.val_accuracy >= target,
            "{} val accuracy {:.4} < {target}",
            spec.id(),
            report.val_accuracy
        );
        accs.push(format!("{} val {:.3} (epoch {})", spec.id(), report.val_accuracy, report.best_epoch));
    }

    // Memorization: 64 training patches, spread over the classes.
    let spec = ModelSpec::patchnet(PatchNetSize::S0);
    let patches = pipeline::load_patch_set(cfg, &spec).map_err(|e| e.to_string())?;
    let mut pool = patches.select(split, Subset::Train, cfg.entropy_threshold).map_err(|e| e.to_string())?;
    pool.shuffle(&mut seeded_rng(55, 0));
    let subset: Vec<_> = pool.into_iter().take(64).collect();
    ensure!(subset.len() == 64, "only {} training patches", subset.len());
    let tc = TrainConfig {
        epochs: 200,
        patience: 200,
        ..cfg.train_config(&spec)
    };
    let model = spec.build(patches.n_classes(), tc.seed).map_err(|e| e.to_string())?;
    let (model, _) = fit(model, &subset, &subset, &patches.class_names, patches.forger, &tc).map_err(|e| e.to_string())?;
    let acc = evaluate(&model, &subset, patches.forger).map_err(|e| e.to_string())?.accuracy;
    ensure!(acc >= 0.99, "memorization train accuracy {acc:.4} < 0.99");

    let t = within(Duration::from_secs(600), start)?;
    Ok(format!("{}, memorization train {acc:.3}, {t:.1?}", accs.join(", ")))
}

// ---------------------------------------------------------------- 6

fn uneven_manifest() -> CorpusManifest {
    let names: Vec<String> = (0..11).map(|i| format!("artist_{i:02}")).chain(["forger".to_string()]).collect();
    let mut artworks = Vec::new();
    for (c, name) in names.iter().enumerate() {
        for i in 0..(10 + 3 * c) {
            artworks.push(ArtworkRecord {
                id: format!("{name}_{i:03}"),
                artist: name.clone(),
                path: PathBuf::from(format!("{name}_{i:03}.png")),
                width: 800,
                height: 600,
            });
        }
    }
    CorpusManifest::new(artworks, ClassList::new(names, "forger").unwrap()).unwrap()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let manifest = uneven_manifest();
    let fractions = SplitFractions {
        test_frac: 0.10,
        val_frac_of_rest: 0.20,
    };
    let plans = generate_split_suite(&manifest, 10, fractions, 31).map_err(|e| e.to_string())?;
    ensure!(plans.len() == 10, "{} plans", plans.len());

    let mut test_hits: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &plans {
        ensure!(p.assignment.len() == manifest.artworks.len(), "plan does not assign every artwork");
        for id in p.ids(Subset::Test) {
            *test_hits.entry(id).or_default() += 1;
        }
    }
    for a in &manifest.artworks {
        let hits = test_hits.get(a.id.as_str()).copied().unwrap_or(0);
        ensure!(hits == 1, "{} is in {hits} test sets", a.id);
    }

    let per_artist: Vec<usize> = {
        let mut n = vec![0; manifest.classes.len()];
        for a in &manifest.artworks {
            n[manifest.label_of(a)] += 1;
        }
        n
    };
    for (si, p) in plans.iter().enumerate() {
        for (c, [_, val, test]) in p.counts_per_artist(&manifest).into_iter().enumerate() {
            let n = per_artist[c] as f64;
            let test_target = n * 0.10;
            ensure!(
                (test as f64 - test_target).abs() < 1.0 + 1e-9,
                "split {si} class {c}: {test} test for {n} artworks"
            );
            let val_target = (n - test as f64) * 0.20;
            ensure!(
                (val as f64 - val_target).abs() <= 1.0 + 1e-9,
                "split {si} class {c}: {val} val, target {val_target:.1}"
            );
        }
    }

    let again = generate_split_suite(&manifest, 10, fractions, 31).map_err(|e| e.to_string())?;
    ensure!(
        plans.iter().zip(&again).all(|(a, b)| a.to_json() == b.to_json()),
        "same master seed gave different plans"
    );
    let other = generate_split_suite(&manifest, 10, fractions, 32).map_err(|e| e.to_string())?;
    ensure!(plans != other, "different master seeds gave identical suites");
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("{} artworks, 10 splits, {t:.2?}", manifest.artworks.len()))
}

// ---------------------------------------------------------------- 7

fn random_predictions(n: usize, seed: u64) -> Vec<PatchPrediction> {
    let mut rng = seeded_rng(seed, 0);
    let nc = 4;
    let forger = nc - 1;
    (0..n)
        .map(|i| {
            let painting = rng.random_range(0..200);
            let true_class = painting % nc;
            // Coarse scores create many exact ties.
            let score = if rng.random_bool(0.5) {
                rng.random_range(0..8) as f64 / 8.0
            } else {
                rng.random_range(0.0..1.0)
            };
            let rest = (1.0 - score) / (nc - 1) as f64;
            let mut softmax = vec![rest; nc];
            softmax[forger] = score;
            PatchPrediction::new(format!("p{painting:03}"), (i / 50) as u32, (i % 50) as u32, true_class, softmax, forger)
        })
        .collect()
}

fn mask_oracle(a: &PatchGrid, fa: &[(u32, u32)], b: &PatchGrid, fb: &[(u32, u32)], scale: u32) -> f64 {
    // Pixel masks at grid B's resolution; grid A's cells are scaled up.
    let (w, h) = (a.origin_x * 2 + a.n_cols * a.patch_size, a.origin_y * 2 + a.n_rows * a.patch_size);
    let (w, h) = ((w * scale) as usize, (h * scale) as usize);
    let mut ma = vec![false; w * h];
    let mut mb = vec![false; w * h];
    let paint = |mask: &mut Vec<bool>, rect: (u32, u32, u32, u32), s: u32| {
        for y in rect.1 * s..rect.3 * s {
            for x in rect.0 * s..rect.2 * s {
                mask[y as usize * w + x as usize] = true;
            }
        }
    };
    for &(r, c) in fa {
        paint(&mut ma, a.rect(r, c), scale);
    }
    for &(r, c) in fb {
        paint(&mut mb, b.rect(r, c), 1);
    }
    let inter = ma.iter().zip(&mb).filter(|(x, y)| **x && **y).count();
    let union = ma.iter().zip(&mb).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn criterion_7() -> Outcome {
    let preds = random_predictions(10_000, 77);
    let forger = 3;

    let mut sorted = preds.clone();
    sorted.sort_by(|a, b| {
        b.forger_score
            .partial_cmp(&a.forger_score)
            .unwrap()
            .then_with(|| (&a.artwork_id, a.row, a.col).cmp(&(&b.artwork_id, b.row, b.col)))
    });
    let scores: BTreeSet<u64> = preds.iter().map(|p| p.forger_score.to_bits()).collect();
    ensure!(scores.len() < preds.len(), "no ties generated");
    ensure!(top_k_forger(&preds, 0).is_err(), "k = 0 accepted");
    for k in [1, 20, 137, 10_000, 12_000] {
        let got = top_k_forger(&preds, k).map_err(|e| e.to_string())?;
        let want = &sorted[..k.min(sorted.len())];
        ensure!(got.as_slice() == want, "top-{k} differs from sort-truncate oracle");
    }

    let top = top_k_forger(&preds, 300).map_err(|e| e.to_string())?;
    let mut prev = usize::MAX;
    for min in 1..=8 {
        let flagged = flag_paintings(&top, min).map_err(|e| e.to_string())?;
        ensure!(flagged.len() <= prev, "flag count grows at min_patches {min}");
        let mut per: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &top {
            *per.entry(&p.artwork_id).or_default() += 1;
        }
        let want: BTreeSet<&str> = per.iter().filter(|(_, &c)| c >= min).map(|(id, _)| *id).collect();
        let got: BTreeSet<&str> = flagged.iter().map(|f| f.artwork_id.as_str()).collect();
        ensure!(got == want, "min_patches {min}: flagged set differs from count oracle");
        prev = flagged.len();
    }

    let (patches, paintings) = count_misattributed(&preds, forger);
    let mut scan_patches = 0;
    let mut scan_paintings = BTreeSet::new();
    for p in &preds {
        let argmax = (0..p.softmax.len())
            .max_by(|&a, &b| p.softmax[a].partial_cmp(&p.softmax[b]).unwrap().then(b.cmp(&a)))
            .unwrap();
        if p.true_class != forger && argmax == forger {
            scan_patches += 1;
            scan_paintings.insert(p.artwork_id.clone());
        }
    }
    ensure!(
        (patches, paintings) == (scan_patches, scan_paintings.len()),
        "misattribution {:?} vs scan {:?}",
        (patches, paintings),
        (scan_patches, scan_paintings.len())
    );

    let mut rng = seeded_rng(78, 0);
    let ga = PatchGrid::plan("x", 900, 650, 64);
    let gb = PatchGrid::plan("x", 1800, 1300, 64);
    let pick = |g: &PatchGrid, rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
        let mut cells: Vec<(u32, u32)> = g.cells().collect();
        cells.shuffle(rng);
        cells.truncate(n);
        cells
    };
    let fa = pick(&ga, &mut rng, 12);
    let self_iou = cross_resolution_compare(&ga, &fa, &ga, &fa, 1.0).map_err(|e| e.to_string())?;
    ensure!(self_iou == 1.0, "compare(X, X, 1) = {self_iou}");
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let fa = pick(&ga, &mut rng, 4 + trial);
        let fb = pick(&gb, &mut rng, 10 + 3 * trial);
        let got = cross_resolution_compare(&ga, &fa, &gb, &fb, 2.0).map_err(|e| e.to_string())?;
        worst = worst.max((got - mask_oracle(&ga, &fa, &gb, &fb, 2)).abs());
    }
    ensure!(worst <= 1e-9, "pixel-mask oracle differs by {worst:e}");
    Ok(format!(
        "{} distinct scores over 10000 predictions, {patches} misattributed patches, mask deviation {worst:.1e}",
        scores.len()
    ))
}

// ---------------------------------------------------------------- 8

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    out.insert(PathBuf::from("summary.json"), fs::read(root.join("summary.json")).unwrap_or_default());
    for sub in ["checkpoints", "reports"] {
        let Ok(entries) = fs::read_dir(root.join(sub)) else { continue };
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().to_string();
            if sub == "checkpoints" || name.starts_with("flags_") {
                out.insert(Path::new(sub).join(&name), fs::read(e.path()).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth_corpus(&dir.path().join("data"), 4, 4, 5).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig {
        manifest: dir.path().join("data").join("manifest.csv"),
        output_dir: dir.path().join("out"),
        models: vec![ModelSpec::kan(vec![16, 4]), ModelSpec::patchnet(PatchNetSize::S0)],
        seed: 99,
        ..RunConfig::default()
    };
    cfg.kan.epochs = 3;
    cfg.kan.patience = 3;
    cfg.cnn.epochs = 2;
    cfg.cnn.patience = 2;

    pipeline::suite(&cfg).map_err(|e| e.to_string())?;
    let first = snapshot(&cfg.output_dir);
    pipeline::suite(&cfg).map_err(|e| e.to_string())?;
    let second = snapshot(&cfg.output_dir);

    let n_ckpt = first.keys().filter(|p| p.starts_with("checkpoints")).count();
    let n_flags = first.keys().filter(|p| p.starts_with("reports")).count();
    ensure!(n_ckpt == 20 && n_flags == 20, "expected 20 checkpoints and 20 flag reports, found {n_ckpt} and {n_flags}");
    ensure!(!first[Path::new("summary.json")].is_empty(), "summary.json missing");
    for (path, bytes) in &first {
        ensure!(second.get(path) == Some(bytes), "{} differs between runs", path.display());
    }
    Ok(format!("{} files byte-identical across two suite runs", first.len()))
}

// ---------------------------------------------------------------- runner

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({why})");
            }
        }
    };

    report(1, "entropy oracle", &mut criterion_1);
    let run = synth_run();
    report(2, "threshold sweep shape", &mut || criterion_2(run.as_ref().map_err(Clone::clone)?));
    report(3, "b-spline properties", &mut criterion_3);
    report(4, "gradient correctness", &mut criterion_4);
    report(5, "learning sanity", &mut || criterion_5(run.as_ref().map_err(Clone::clone)?));
    report(6, "split suite", &mut criterion_6);
    report(7, "flagging oracles", &mut criterion_7);
    report(8, "end-to-end determinism", &mut criterion_8);

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
