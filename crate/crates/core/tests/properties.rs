use std::collections::BTreeSet;
use std::path::PathBuf;

use image::RgbImage;
use patchflag::corpus::{generate_split_suite, ArtworkRecord, ClassList, CorpusManifest, SplitFractions, Subset};
use patchflag::flagging::{count_misattributed, cross_resolution_compare, flag_paintings, rank_order, top_k_forger, PatchPrediction};
use patchflag::kan::{bspline_basis, SplineGrid};
use patchflag::patching::{extract_patches, PatchGrid};
use patchflag::tensorkit::softmax;
use proptest::prelude::*;

fn manifest(counts: &[usize]) -> CorpusManifest {
    let names: Vec<String> = (0..counts.len()).map(|i| format!("a{i:02}")).collect();
    let artworks = names
        .iter()
        .zip(counts)
        .flat_map(|(name, &n)| {
            (0..n).map(move |i| ArtworkRecord {
                id: format!("{name}_{i:03}"),
                artist: name.clone(),
                path: PathBuf::from("x.png"),
                width: 800,
                height: 600,
            })
        })
        .collect();
    let forger = names.last().unwrap().clone();
    CorpusManifest::new(artworks, ClassList::new(names, forger).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_suite_partitions_stratifies_and_covers(
        counts in prop::collection::vec(3usize..40, 2..10),
        seed in any::<u64>(),
    ) {
        let m = manifest(&counts);
        let fr = SplitFractions { test_frac: 0.10, val_frac_of_rest: 0.20 };
        let plans = generate_split_suite(&m, 10, fr, seed).unwrap();
        let mut covered = BTreeSet::new();
        for p in &plans {
            prop_assert_eq!(p.assignment.len(), m.artworks.len());
            covered.extend(p.ids(Subset::Test));
            for (c, [_, val, test]) in p.counts_per_artist(&m).into_iter().enumerate() {
                let n = counts[c] as f64;
                prop_assert!((test as f64 - (n * 0.10).round()).abs() <= 1.0, "class {} test {}", c, test);
                let exact_val = (n - test as f64) * 0.20;
                prop_assert!((val as f64 - exact_val).abs() < 1.0 + 1e-9 || val == 1, "class {} val {} vs {}", c, val, exact_val);
            }
        }
        prop_assert_eq!(covered.len(), m.artworks.len());
        let again = generate_split_suite(&m, 10, fr, seed).unwrap();
        for (a, b) in plans.iter().zip(&again) {
            prop_assert_eq!(a.to_json(), b.to_json());
        }
    }

    #[test]
    fn grid_is_centered_and_inside(w in 1u32..3000, h in 1u32..3000, p in 1u32..400) {
        let g = PatchGrid::plan("x", w, h, p);
        prop_assert_eq!((g.n_cols, g.n_rows), (w / p, h / p));
        prop_assert_eq!(g.origin_x, (w - g.n_cols * p) / 2);
        prop_assert_eq!(g.origin_y, (h - g.n_rows * p) / 2);
        let right = w - g.origin_x - g.n_cols * p;
        let bottom = h - g.origin_y - g.n_rows * p;
        prop_assert!(right - g.origin_x <= 1 && bottom - g.origin_y <= 1);
        if let Some((r, c)) = g.cells().last() {
            let (_, _, x1, y1) = g.rect(r, c);
            prop_assert!(x1 <= w && y1 <= h);
        }
    }

    #[test]
    fn patch_entropy_fields_are_consistent(seed in any::<u64>(), levels in 1u32..256) {
        let img = RgbImage::from_fn(48, 40, |x, y| {
            let v = (x.wrapping_mul(2654435761).wrapping_add(y.wrapping_mul(40503)).wrapping_add(seed as u32)) % levels;
            image::Rgb([v as u8, (v / 2) as u8, (255 - v) as u8])
        });
        for p in extract_patches(&img, &PatchGrid::plan("x", 48, 40, 16)) {
            prop_assert!(p.entropy.iter().all(|&e| (0.0..=8.0).contains(&e)));
            prop_assert_eq!(p.mean_entropy, (p.entropy[0] + p.entropy[1] + p.entropy[2]) / 3.0);
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-1e4f64..1e4, 1..20)) {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn spline_partition_of_unity_and_support(
        g in 1usize..12, k in 0usize..6, lo in -5.0f64..5.0, width in 0.1f64..10.0, u in 0.0f64..=1.0,
    ) {
        let grid = SplineGrid::new(g, k, lo, lo + width).unwrap();
        prop_assert_eq!(grid.knots().len(), g + 2 * k + 1);
        prop_assert!(grid.knots().windows(2).all(|w| w[0] <= w[1]));
        let x = lo + u * width;
        let b = bspline_basis(x, &grid);
        prop_assert_eq!(b.len(), g + k);
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let t = grid.knots();
        for (m, &v) in b.iter().enumerate() {
            prop_assert!(v >= 0.0);
            if v != 0.0 {
                prop_assert!(t[m] <= x && x <= t[m + k + 1]);
            }
        }
        prop_assert!(b.iter().filter(|&&v| v != 0.0).count() <= k + 1);
    }

    #[test]
    fn flagging_properties(
        scores in prop::collection::vec((0usize..30, 0usize..8, 0u32..4), 1..300),
        k in 1usize..60,
        min in 1usize..6,
    ) {
        let preds: Vec<PatchPrediction> = scores
            .iter()
            .enumerate()
            .map(|(i, &(painting, q, true_class))| {
                let s = q as f64 / 8.0;
                let mut sm = vec![(1.0 - s) / 3.0; 4];
                sm[3] = s;
                PatchPrediction::new(format!("p{painting:02}"), i as u32, 0, true_class as usize, sm, 3)
            })
            .collect();
        let top = top_k_forger(&preds, k).unwrap();
        let mut sorted = preds.clone();
        sorted.sort_by(rank_order);
        prop_assert_eq!(&top[..], &sorted[..k.min(sorted.len())]);

        let a = flag_paintings(&top, min).unwrap();
        let b = flag_paintings(&top, min + 1).unwrap();
        let a_ids: BTreeSet<_> = a.iter().map(|f| &f.artwork_id).collect();
        prop_assert!(b.iter().all(|f| a_ids.contains(&f.artwork_id)));
        let in_top: BTreeSet<_> = top.iter().map(|p| &p.artwork_id).collect();
        prop_assert!(a.iter().all(|f| in_top.contains(&f.artwork_id)));

        let (patches, paintings) = count_misattributed(&preds, 3);
        prop_assert!(paintings <= patches && patches <= preds.len());
    }

    #[test]
    fn cross_resolution_self_is_one(cells in prop::collection::btree_set((0u32..5, 0u32..7), 1..20)) {
        let g = PatchGrid::plan("x", 7 * 32 + 5, 5 * 32 + 3, 32);
        let flags: Vec<_> = cells.into_iter().collect();
        prop_assert_eq!(cross_resolution_compare(&g, &flags, &g, &flags, 1.0).unwrap(), 1.0);
    }
}
