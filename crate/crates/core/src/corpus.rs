//! Painting manifests and stratified train/val/test split suites.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["id", "artist", "path", "width", "height"];

/// One painting in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtworkRecord {
    pub id: String,
    pub artist: String,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

/// Ordered artist labels. The position of a label is its softmax output index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassList {
    classes: Vec<String>,
    forger_class: String,
}

impl ClassList {
    pub fn new(classes: Vec<String>, forger_class: impl Into<String>) -> Result<Self> {
        let forger_class = forger_class.into();
        if classes.len() < 2 {
            return Err(Error::InvalidArgument(
                "a class list needs at least 2 classes".into(),
            ));
        }
        let mut seen = HashSet::new();
        for c in &classes {
            if !seen.insert(c.as_str()) {
                return Err(Error::InvalidArgument(format!("class \"{c}\" listed twice")));
            }
        }
        if !seen.contains(forger_class.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "forger class \"{forger_class}\" is not in the class list"
            )));
        }
        Ok(Self {
            classes,
            forger_class,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, artist: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == artist)
    }

    pub fn forger_class(&self) -> &str {
        &self.forger_class
    }

    pub fn forger_index(&self) -> usize {
        self.index_of(&self.forger_class)
            .expect("forger class validated at construction")
    }

    /// Sidecar location for a manifest: `manifest.csv` → `manifest.classes.json`.
    pub fn sidecar_path(manifest_path: &Path) -> PathBuf {
        manifest_path.with_extension("classes.json")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: ClassList = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))?;
        ClassList::new(raw.classes, raw.forger_class)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("class list serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Validated set of artworks, kept sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub artworks: Vec<ArtworkRecord>,
    pub classes: ClassList,
}

impl CorpusManifest {
    pub fn new(mut artworks: Vec<ArtworkRecord>, classes: ClassList) -> Result<Self> {
        if artworks.is_empty() {
            return Err(Error::EmptyManifest);
        }
        artworks.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in artworks.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateId(pair[0].id.clone()));
            }
        }
        for a in &artworks {
            if classes.index_of(&a.artist).is_none() {
                return Err(Error::UnknownArtist {
                    id: a.id.clone(),
                    artist: a.artist.clone(),
                });
            }
            if a.width == 0 || a.height == 0 {
                return Err(Error::MissingDimensions(a.id.clone()));
            }
        }
        Ok(Self { artworks, classes })
    }

    pub fn label_of(&self, record: &ArtworkRecord) -> usize {
        self.classes
            .index_of(&record.artist)
            .expect("artist validated at construction")
    }

    pub fn get(&self, id: &str) -> Option<&ArtworkRecord> {
        self.artworks
            .binary_search_by(|a| a.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.artworks[i])
    }

    /// Artwork count per class, in class order.
    pub fn per_artist_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.classes.len()];
        for a in &self.artworks {
            counts[self.label_of(a)] += 1;
        }
        self.classes
            .names()
            .iter()
            .cloned()
            .zip(counts)
            .collect()
    }

    /// Ids grouped per class (class order), each group in id order.
    fn ids_by_artist(&self) -> Vec<(String, Vec<String>)> {
        let mut groups: Vec<(String, Vec<String>)> = self
            .classes
            .names()
            .iter()
            .map(|c| (c.clone(), Vec::new()))
            .collect();
        for a in &self.artworks {
            groups[self.label_of(a)].1.push(a.id.clone());
        }
        groups
    }
}

/// Parse manifest CSV text. `source` is only used in error messages.
pub fn read_manifest_csv<R: Read>(
    reader: R,
    classes: ClassList,
    source: &Path,
) -> Result<CorpusManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::malformed(source, e))?;
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::malformed(
            source,
            format!("expected header `{}`", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::malformed(source, e))?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let id = field(0);
        if id.is_empty() {
            return Err(Error::malformed(source, "empty artwork id"));
        }
        let dim = |i: usize| -> Result<u32> {
            let raw = field(i);
            if raw.is_empty() {
                return Err(Error::MissingDimensions(id.clone()));
            }
            raw.parse::<u32>()
                .map_err(|_| Error::malformed(source, format!("bad dimension \"{raw}\" for \"{id}\"")))
        };
        let width = dim(3)?;
        let height = dim(4)?;
        records.push(ArtworkRecord {
            id: id.clone(),
            artist: field(1),
            path: PathBuf::from(field(2)),
            width,
            height,
        });
    }
    CorpusManifest::new(records, classes)
}

/// Load a manifest CSV. Without an explicit class list, the
/// `<manifest>.classes.json` sidecar is read.
pub fn ingest_manifest(path: &Path, classes: Option<ClassList>) -> Result<CorpusManifest> {
    let classes = match classes {
        Some(c) => c,
        None => {
            let sidecar = ClassList::sidecar_path(path);
            if !sidecar.exists() {
                return Err(Error::malformed(
                    path,
                    format!("no class declaration given and {} not found", sidecar.display()),
                ));
            }
            ClassList::load(&sidecar)?
        }
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest_csv(file, classes, path)
}

pub fn write_manifest_csv(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::malformed(path, e))?;
    let csv_err = |e: csv::Error| Error::malformed(path, e);
    w.write_record(MANIFEST_HEADER).map_err(csv_err)?;
    for a in &manifest.artworks {
        w.write_record([
            a.id.as_str(),
            a.artist.as_str(),
            &a.path.to_string_lossy(),
            &a.width.to_string(),
            &a.height.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn filter_min_width(manifest: &CorpusManifest, min_width: u32) -> Result<CorpusManifest> {
    if min_width == 0 {
        return Err(Error::InvalidArgument("min_width must be ≥ 1".into()));
    }
    let kept: Vec<_> = manifest
        .artworks
        .iter()
        .filter(|a| a.width >= min_width)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::NothingSurvivesFilter);
    }
    Ok(CorpusManifest {
        artworks: kept,
        classes: manifest.classes.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    Val,
    Test,
}

/// One train/val/test partition of a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub assignment: BTreeMap<String, Subset>,
}

impl SplitPlan {
    pub fn subset_of(&self, id: &str) -> Option<Subset> {
        self.assignment.get(id).copied()
    }

    pub fn ids(&self, subset: Subset) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, s)| **s == subset)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn count(&self, subset: Subset) -> usize {
        self.assignment.values().filter(|s| **s == subset).count()
    }

    /// Per-class `[train, val, test]` counts, in class order.
    pub fn counts_per_artist(&self, manifest: &CorpusManifest) -> Vec<[usize; 3]> {
        let mut out = vec![[0usize; 3]; manifest.classes.len()];
        for a in &manifest.artworks {
            if let Some(s) = self.subset_of(&a.id) {
                out[manifest.label_of(a)][s as usize] += 1;
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split plan serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))
    }
}

/// Fractions controlling a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub test_frac: f64,
    pub val_frac_of_rest: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            test_frac: 0.10,
            val_frac_of_rest: 0.20,
        }
    }
}

impl SplitFractions {
    fn validate(&self) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f < 1.0;
        if !ok(self.test_frac) || !ok(self.val_frac_of_rest) {
            return Err(Error::InvalidArgument(format!(
                "split fractions must lie in (0, 1), got test {} / val {}",
                self.test_frac, self.val_frac_of_rest
            )));
        }
        Ok(())
    }

    /// Smallest suite size whose test folds can cover every artwork.
    pub fn min_splits(&self) -> usize {
        (1.0 / self.test_frac - 1e-9).ceil().max(1.0) as usize
    }
}

fn round_count(n: usize, frac: f64) -> usize {
    (n as f64 * frac).round() as usize
}

fn test_count(n: usize, frac: f64) -> usize {
    round_count(n, frac).max(1)
}

/// Assign val/train from each artist's non-test remainder. `rest[a]` must
/// already be in random order. The global val total is pinned to
/// `round(Σ rest · val_frac)`; each artist gets the floor or ceiling of its
/// exact share, with the residual going to the largest fractional parts
/// (larger artists first on ties).
fn assign_val_train(
    groups: &[(String, Vec<String>)],
    rest: &[Vec<String>],
    val_frac: f64,
    assignment: &mut BTreeMap<String, Subset>,
) -> Result<()> {
    let exact: Vec<f64> = rest.iter().map(|r| r.len() as f64 * val_frac).collect();
    let bounds: Vec<(usize, usize)> = rest.iter().map(|r| (1, r.len().saturating_sub(1).max(1))).collect();
    let mut val_counts: Vec<usize> = exact
        .iter()
        .zip(&bounds)
        .map(|(e, &(lo, hi))| (e.floor() as usize).clamp(lo, hi))
        .collect();
    let total_rest: usize = rest.iter().map(Vec::len).sum();
    let target = round_count(total_rest, val_frac);

    let mut order: Vec<usize> = (0..rest.len()).collect();
    let frac = |a: usize| exact[a] - exact[a].floor();
    order.sort_by(|&a, &b| {
        frac(b)
            .total_cmp(&frac(a))
            .then(rest[b].len().cmp(&rest[a].len()))
            .then(a.cmp(&b))
    });
    let mut current: usize = val_counts.iter().sum();
    for &a in &order {
        if current >= target {
            break;
        }
        if (val_counts[a] as f64) < exact[a] && val_counts[a] < bounds[a].1 {
            val_counts[a] += 1;
            current += 1;
        }
    }
    for &a in order.iter().rev() {
        if current <= target {
            break;
        }
        if (val_counts[a] as f64) > exact[a] && val_counts[a] > bounds[a].0 {
            val_counts[a] -= 1;
            current -= 1;
        }
    }

    for (a, r) in rest.iter().enumerate() {
        let v = val_counts[a];
        if r.len() < 2 || v == 0 || v >= r.len() {
            return Err(Error::InsufficientArtworks {
                artist: groups[a].0.clone(),
                count: groups[a].1.len(),
            });
        }
        for (i, id) in r.iter().enumerate() {
            let s = if i < v { Subset::Val } else { Subset::Train };
            assignment.insert(id.clone(), s);
        }
    }
    Ok(())
}

fn check_min_per_artist(groups: &[(String, Vec<String>)]) -> Result<()> {
    for (artist, ids) in groups {
        if !ids.is_empty() && ids.len() < 3 {
            return Err(Error::InsufficientArtworks {
                artist: artist.clone(),
                count: ids.len(),
            });
        }
    }
    Ok(())
}

/// Draw one stratified split: per artist, `max(1, round(n·test_frac))`
/// works go to test, then `val_frac_of_rest` of the remainder to val.
pub fn generate_split(
    manifest: &CorpusManifest,
    seed: u64,
    fractions: SplitFractions,
) -> Result<SplitPlan> {
    fractions.validate()?;
    let groups: Vec<_> = manifest
        .ids_by_artist()
        .into_iter()
        .filter(|g| !g.1.is_empty())
        .collect();
    check_min_per_artist(&groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut rest = Vec::with_capacity(groups.len());
    for (_, ids) in &groups {
        let mut shuffled = ids.clone();
        shuffled.shuffle(&mut rng);
        let t = test_count(ids.len(), fractions.test_frac);
        for id in &shuffled[..t] {
            assignment.insert(id.clone(), Subset::Test);
        }
        rest.push(shuffled[t..].to_vec());
    }
    assign_val_train(
        &groups,
        &rest,
        fractions.val_frac_of_rest,
        &mut assignment,
    )?;
    Ok(SplitPlan { seed, assignment })
}

/// Generate `n_splits` plans whose test sets jointly cover every artwork.
///
/// Each artist's works are shuffled once with `master_seed` and cut into
/// `n_splits` near-equal folds; fold `i` is split `i`'s test set. Which folds
/// receive the extra work of an uneven division rotates across artists so
/// that global test totals differ by at most one between splits. Val is then
/// drawn from the remainder with a per-split stream.
pub fn generate_split_suite(
    manifest: &CorpusManifest,
    n_splits: usize,
    fractions: SplitFractions,
    master_seed: u64,
) -> Result<Vec<SplitPlan>> {
    fractions.validate()?;
    let min = fractions.min_splits();
    if n_splits < min {
        return Err(Error::CoverageInfeasible { min_splits: min });
    }
    let groups: Vec<_> = manifest
        .ids_by_artist()
        .into_iter()
        .filter(|g| !g.1.is_empty())
        .collect();
    check_min_per_artist(&groups)?;

    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    // windows[a][i] = (start, len) into the shuffled list of artist a.
    let mut shuffled = Vec::with_capacity(groups.len());
    let mut windows = Vec::with_capacity(groups.len());
    let mut cursor = 0usize;
    for (_, ids) in &groups {
        let mut s = ids.clone();
        s.shuffle(&mut rng);
        let n = s.len();
        let base = n / n_splits;
        let extra = n % n_splits;
        let c = test_count(n, fractions.test_frac);
        let mut start = 0usize;
        let mut w = Vec::with_capacity(n_splits);
        for i in 0..n_splits {
            let size = base + usize::from((i + n_splits - cursor) % n_splits < extra);
            let len = size.max(c.saturating_sub(1)).max(1);
            w.push((start % n, len));
            start += size;
        }
        cursor = (cursor + extra) % n_splits;
        shuffled.push(s);
        windows.push(w);
    }

    let mut plans = Vec::with_capacity(n_splits);
    for i in 0..n_splits {
        let mut sub = ChaCha8Rng::seed_from_u64(master_seed);
        sub.set_stream(i as u64 + 1);
        let mut assignment = BTreeMap::new();
        let mut rest = Vec::with_capacity(groups.len());
        for (a, s) in shuffled.iter().enumerate() {
            let n = s.len();
            let (start, len) = windows[a][i];
            let mut in_test = vec![false; n];
            for j in 0..len {
                in_test[(start + j) % n] = true;
            }
            let mut r = Vec::with_capacity(n);
            for (j, id) in s.iter().enumerate() {
                if in_test[j] {
                    assignment.insert(id.clone(), Subset::Test);
                } else {
                    r.push(id.clone());
                }
            }
            r.shuffle(&mut sub);
            rest.push(r);
        }
        assign_val_train(
            &groups,
            &rest,
            fractions.val_frac_of_rest,
            &mut assignment,
        )?;
        plans.push(SplitPlan {
            seed: master_seed.wrapping_add(i as u64),
            assignment,
        });
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> ClassList {
        let names: Vec<String> = (0..n).map(|i| format!("artist{i}")).collect();
        let forger = names[n - 1].clone();
        ClassList::new(names, forger).unwrap()
    }

    fn manifest_with_counts(counts: &[usize]) -> CorpusManifest {
        let cl = classes(counts.len().max(2));
        let mut recs = Vec::new();
        for (a, &n) in counts.iter().enumerate() {
            for j in 0..n {
                recs.push(ArtworkRecord {
                    id: format!("a{a:02}_{j:04}"),
                    artist: format!("artist{a}"),
                    path: PathBuf::from(format!("img/{a}_{j}.png")),
                    width: 800 + j as u32,
                    height: 600,
                });
            }
        }
        CorpusManifest::new(recs, cl).unwrap()
    }

    fn csv_text(rows: &[&str]) -> String {
        let mut s = String::from("id,artist,path,width,height\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn empty_manifest_rejected() {
        let err = read_manifest_csv(csv_text(&[]).as_bytes(), classes(2), Path::new("m.csv"))
            .unwrap_err();
        assert_eq!(err.to_string(), "empty manifest");
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = csv_text(&["a1,artist0,x.png,800,600", "a1,artist1,y.png,800,600"]);
        let err = read_manifest_csv(text.as_bytes(), classes(2), Path::new("m.csv")).unwrap_err();
        assert!(err.to_string().contains("duplicate id"), "{err}");
    }

    #[test]
    fn unknown_artist_and_missing_dims() {
        let text = csv_text(&["a1,nobody,x.png,800,600"]);
        let err = read_manifest_csv(text.as_bytes(), classes(2), Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::UnknownArtist { .. }));
        let text = csv_text(&["a1,artist0,x.png,,600"]);
        let err = read_manifest_csv(text.as_bytes(), classes(2), Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::MissingDimensions(_)));
        let err = read_manifest_csv("id,artist\n".as_bytes(), classes(2), Path::new("m.csv"))
            .unwrap_err();
        assert!(matches!(err, Error::Malformed { .. }));
    }

    #[test]
    fn ingestion_order_is_irrelevant() {
        let a = csv_text(&["b,artist0,x.png,800,600", "a,artist1,y.png,900,600"]);
        let b = csv_text(&["a,artist1,y.png,900,600", "b,artist0,x.png,800,600"]);
        let ma = read_manifest_csv(a.as_bytes(), classes(2), Path::new("a")).unwrap();
        let mb = read_manifest_csv(b.as_bytes(), classes(2), Path::new("b")).unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn width_filter_boundary() {
        let text = csv_text(&["a,artist0,x.png,767,600", "b,artist0,y.png,768,600"]);
        let m = read_manifest_csv(text.as_bytes(), classes(2), Path::new("m")).unwrap();
        let f = filter_min_width(&m, 768).unwrap();
        assert_eq!(f.artworks.len(), 1);
        assert_eq!(f.artworks[0].id, "b");
        assert_eq!(filter_min_width(&m, 1).unwrap(), m);
        assert!(matches!(
            filter_min_width(&m, 5000),
            Err(Error::NothingSurvivesFilter)
        ));
    }

    #[test]
    fn width_filter_matches_linear_scan() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let recs: Vec<_> = (0..100)
            .map(|i| ArtworkRecord {
                id: format!("r{i:03}"),
                artist: "artist0".into(),
                path: PathBuf::from("p.png"),
                width: rng.random_range(100..=2000),
                height: 500,
            })
            .collect();
        let mut expected = 0;
        for r in &recs {
            if r.width >= 768 {
                expected += 1;
            }
        }
        let m = CorpusManifest::new(recs, classes(2)).unwrap();
        assert_eq!(filter_min_width(&m, 768).unwrap().artworks.len(), expected);
    }

    #[test]
    fn single_artist_of_ten() {
        let m = manifest_with_counts(&[10]);
        let plan = generate_split(&m, 3, SplitFractions::default()).unwrap();
        assert_eq!(plan.count(Subset::Test), 1);
        assert_eq!(plan.count(Subset::Train), 7);
        assert_eq!(plan.count(Subset::Val), 2);
    }

    #[test]
    fn table_one_corpus_counts() {
        let m = manifest_with_counts(&[420, 163, 109, 99, 106, 88, 81, 67, 65, 53, 42, 41]);
        assert_eq!(m.artworks.len(), 1334);
        let plan = generate_split(&m, 38, SplitFractions::default()).unwrap();
        assert_eq!(plan.count(Subset::Test), 134);
        assert_eq!(plan.count(Subset::Train), 960);
        assert_eq!(plan.count(Subset::Val), 240);
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let m = manifest_with_counts(&[30, 12, 9]);
        let a = generate_split(&m, 5, SplitFractions::default()).unwrap();
        let b = generate_split(&m, 5, SplitFractions::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_split(&m, 6, SplitFractions::default()).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn too_small_artist_is_named() {
        let m = manifest_with_counts(&[10, 2]);
        let err = generate_split(&m, 1, SplitFractions::default()).unwrap_err();
        assert!(err.to_string().contains("artist1"), "{err}");
    }

    #[test]
    fn suite_of_twenty_tests_each_once() {
        let m = manifest_with_counts(&[20]);
        let plans = generate_split_suite(&m, 10, SplitFractions::default(), 0).unwrap();
        let mut seen = BTreeMap::new();
        for p in &plans {
            assert_eq!(p.count(Subset::Test), 2);
            for id in p.ids(Subset::Test) {
                *seen.entry(id.to_string()).or_insert(0) += 1;
            }
        }
        assert_eq!(seen.len(), 20);
        assert!(seen.values().all(|&c| c == 1));
    }

    #[test]
    fn suite_rejects_too_few_splits() {
        let m = manifest_with_counts(&[20]);
        let err = generate_split_suite(&m, 5, SplitFractions::default(), 0).unwrap_err();
        assert_eq!(err.to_string(), "coverage requires ≥ 10 splits");
    }

    #[test]
    fn suite_global_totals_balanced() {
        let m = manifest_with_counts(&[420, 163, 109, 99, 106, 88, 81, 67, 65, 53, 42, 41]);
        let plans = generate_split_suite(&m, 10, SplitFractions::default(), 38).unwrap();
        let totals: Vec<_> = plans.iter().map(|p| p.count(Subset::Test)).collect();
        assert!(totals.iter().all(|&t| t == 133 || t == 134), "{totals:?}");
        assert_eq!(totals.iter().sum::<usize>(), 1334);
        for p in &plans {
            let rest = 1334 - p.count(Subset::Test);
            assert_eq!(p.count(Subset::Val), round_count(rest, 0.2));
        }
    }

    #[test]
    fn suite_with_small_artists_still_covers() {
        let m = manifest_with_counts(&[3, 4, 25]);
        let plans = generate_split_suite(&m, 10, SplitFractions::default(), 9).unwrap();
        let mut covered = HashSet::new();
        for p in &plans {
            assert_eq!(p.assignment.len(), 32);
            for (a, c) in p.counts_per_artist(&m).iter().enumerate().take(3) {
                assert!(c[0] >= 1 && c[1] >= 1 && c[2] >= 1, "artist {a}: {c:?}");
            }
            covered.extend(p.ids(Subset::Test).into_iter().map(String::from));
        }
        assert_eq!(covered.len(), 32);
    }
}
