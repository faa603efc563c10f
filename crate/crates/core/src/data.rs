//! Two-view datasets, the synthetic two-moons/two-lines generator, random
//! splits, and CSV persistence.
//!
//! Random streams come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so every generator and split is a pure function of its
//! arguments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};

/// Label value. `0` marks an example whose label is unknown.
pub type Label = i8;

pub const UNLABELED: Label = 0;

/// Examples described by two aligned feature views.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    view1: DMatrix<f64>,
    view2: DMatrix<f64>,
    labels: Vec<Label>,
}

impl MultiViewDataset {
    pub fn new(view1: DMatrix<f64>, view2: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if view1.nrows() != view2.nrows() || view1.nrows() != labels.len() {
            return Err(invalid(format!(
                "row counts disagree: view1 {}, view2 {}, labels {}",
                view1.nrows(),
                view2.nrows(),
                labels.len()
            )));
        }
        if let Some((i, bad)) = labels
            .iter()
            .enumerate()
            .find(|(_, &y)| !(-1..=1).contains(&y))
        {
            return Err(invalid(format!("label {bad} at row {i} is not one of +1, -1, 0")));
        }
        Ok(Self {
            view1,
            view2,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn view1(&self) -> &DMatrix<f64> {
        &self.view1
    }

    pub fn view2(&self) -> &DMatrix<f64> {
        &self.view2
    }

    /// Features of view `1` or `2`.
    pub fn view(&self, which: usize) -> &DMatrix<f64> {
        match which {
            1 => &self.view1,
            2 => &self.view2,
            _ => panic!("view index must be 1 or 2, got {which}"),
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Mutable access to view rows, used to perturb features in tests and tools.
    pub fn view_mut(&mut self, which: usize) -> &mut DMatrix<f64> {
        match which {
            1 => &mut self.view1,
            2 => &mut self.view2,
            _ => panic!("view index must be 1 or 2, got {which}"),
        }
    }
}

/// Noisy two moons in view 1 paired with two noisy parallel lines in view 2.
///
/// Class `+1` is the upper moon `(cos t, sin t)` and the line `y = +1`; class
/// `-1` is the lower moon `(1 - cos t, 0.5 - sin t)` and the line `y = -1`.
/// Angles are uniform on `[0, pi]` and line abscissae uniform on `[-1, 1]`.
/// Within a class, moon points are matched to line points by a random
/// permutation. Gaussian noise with standard deviation `noise` is added to
/// every coordinate. Rows are ordered class `+1` first.
pub fn gen_two_moons_two_lines(n_per_class: usize, noise: f64, seed: u64) -> Result<MultiViewDataset> {
    if n_per_class == 0 {
        return Err(invalid("n_per_class must be at least 1"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid(format!("noise must be a finite non-negative std-dev, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise).map_err(|e| invalid(e.to_string()))?;
    let n = 2 * n_per_class;
    let mut view1 = DMatrix::zeros(n, 2);
    let mut view2 = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);

    for (class, label) in [(0usize, 1 as Label), (1, -1)] {
        let offset = class * n_per_class;
        let mut pairing: Vec<usize> = (0..n_per_class).collect();
        pairing.shuffle(&mut rng);
        for i in 0..n_per_class {
            let t = rng.random_range(0.0..=std::f64::consts::PI);
            let (x, y) = if label > 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            view1[(offset + i, 0)] = x;
            view1[(offset + i, 1)] = y;
        }
        let line_y = f64::from(label);
        for &row in &pairing {
            view2[(offset + row, 0)] = rng.random_range(-1.0..=1.0);
            view2[(offset + row, 1)] = line_y;
        }
        labels.extend(std::iter::repeat_n(label, n_per_class));
    }
    if noise > 0.0 {
        for v in view1.iter_mut().chain(view2.iter_mut()) {
            *v += gauss.sample(&mut rng);
        }
    }
    MultiViewDataset::new(view1, view2, labels)
}

/// Requested split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.n_labeled + self.n_unlabeled + self.n_validation + self.n_test
    }
}

/// Disjoint index sets into a [`MultiViewDataset`].
///
/// Labels at `unlabeled_idx` stay in the dataset; training only ever reads
/// labels at `labeled_idx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub labeled_idx: Vec<usize>,
    pub unlabeled_idx: Vec<usize>,
    pub validation_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl SplitDataset {
    /// Training indices, labeled first.
    pub fn training_idx(&self) -> Vec<usize> {
        self.labeled_idx
            .iter()
            .chain(&self.unlabeled_idx)
            .copied()
            .collect()
    }
}

const MAX_SPLIT_DRAWS: usize = 1000;

/// Draw a uniformly random split.
///
/// Labeled, validation and test examples are drawn from rows with a known
/// label; unlabeled examples may be any remaining row. The labeled draw is
/// repeated until it contains both classes.
pub fn make_split(dataset: &MultiViewDataset, spec: &SplitSpec) -> Result<SplitDataset> {
    let n = dataset.len();
    if spec.n_labeled == 0 {
        return Err(Error::Split("at least one labeled example is required".into()));
    }
    if spec.total() > n {
        return Err(Error::Split(format!(
            "requested {} + {} + {} + {} = {} examples but the dataset has {n}",
            spec.n_labeled,
            spec.n_unlabeled,
            spec.n_validation,
            spec.n_test,
            spec.total()
        )));
    }
    let labels = dataset.labels();
    let known = labels.iter().filter(|&&y| y != UNLABELED).count();
    let needs_known = spec.n_labeled + spec.n_validation + spec.n_test;
    if needs_known > known {
        return Err(Error::Split(format!(
            "{needs_known} labeled rows are needed for the labeled, validation and test sets \
             but only {known} rows carry a label"
        )));
    }
    for class in [1 as Label, -1] {
        if !labels.contains(&class) {
            return Err(Error::Split(format!("class {class:+} does not occur in the dataset")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SPLIT_DRAWS {
        order.shuffle(&mut rng);
        let mut known_iter = order.iter().copied().filter(|&i| labels[i] != UNLABELED);
        let labeled_idx: Vec<usize> = known_iter.by_ref().take(spec.n_labeled).collect();
        let has_pos = labeled_idx.iter().any(|&i| labels[i] > 0);
        let has_neg = labeled_idx.iter().any(|&i| labels[i] < 0);
        if !(has_pos && has_neg) {
            continue;
        }
        let validation_idx: Vec<usize> = known_iter.by_ref().take(spec.n_validation).collect();
        let test_idx: Vec<usize> = known_iter.take(spec.n_test).collect();
        let mut taken = vec![false; n];
        for &i in labeled_idx.iter().chain(&validation_idx).chain(&test_idx) {
            taken[i] = true;
        }
        let unlabeled_idx: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| !taken[i])
            .take(spec.n_unlabeled)
            .collect();
        return Ok(SplitDataset {
            labeled_idx,
            unlabeled_idx,
            validation_idx,
            test_idx,
        });
    }
    let missing = if labels.iter().filter(|&&y| y > 0).count() < labels.iter().filter(|&&y| y < 0).count() {
        "+1"
    } else {
        "-1"
    };
    Err(Error::Split(format!(
        "labeled draw of size {} lacked class {missing} in {MAX_SPLIT_DRAWS} attempts",
        spec.n_labeled
    )))
}

/// Paths of the three CSV files that make up a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub view1: PathBuf,
    pub view2: PathBuf,
    pub labels: PathBuf,
}

impl DatasetPaths {
    /// `view1.csv`, `view2.csv` and `labels.csv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            view1: dir.join("view1.csv"),
            view2: dir.join("view2.csv"),
            labels: dir.join("labels.csv"),
        }
    }
}

pub fn load_dataset(paths: &DatasetPaths) -> Result<MultiViewDataset> {
    let view1 = read_matrix(&paths.view1)?;
    let view2 = read_matrix(&paths.view2)?;
    let labels = read_labels(&paths.labels)?;
    if view1.nrows() != view2.nrows() {
        return Err(Error::Csv {
            path: paths.view2.clone(),
            row: view2.nrows().min(view1.nrows()) + 1,
            message: format!("{} has {} rows but this file has {}", paths.view1.display(), view1.nrows(), view2.nrows()),
        });
    }
    if labels.len() != view1.nrows() {
        return Err(Error::Csv {
            path: paths.labels.clone(),
            row: labels.len().min(view1.nrows()) + 1,
            message: format!("views have {} rows but this file has {}", view1.nrows(), labels.len()),
        });
    }
    MultiViewDataset::new(view1, view2, labels)
}

pub fn save_dataset(dataset: &MultiViewDataset, paths: &DatasetPaths) -> Result<()> {
    write_matrix(dataset.view1(), &paths.view1)?;
    write_matrix(dataset.view2(), &paths.view2)?;
    let mut out = String::with_capacity(3 * dataset.len());
    for &y in dataset.labels() {
        out.push_str(&format!("{y}\n"));
    }
    fs::write(&paths.labels, out)?;
    Ok(())
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path)?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn csv_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Read a headerless numeric CSV; rows are 1-based in error messages.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, row, e.to_string()))?;
        let values = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| csv_error(path, row, format!("malformed number {field:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(csv_error(
                    path,
                    row,
                    format!("expected {} columns, found {}", first.len(), values.len()),
                ));
            }
        }
        rows.push(values);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

fn read_labels(path: &Path) -> Result<Vec<Label>> {
    let mut labels = Vec::new();
    for (i, record) in csv_reader(path)?.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, row, e.to_string()))?;
        if record.len() != 1 {
            return Err(csv_error(path, row, format!("expected 1 column, found {}", record.len())));
        }
        let field = record[0].trim_start_matches('+');
        let value: f64 = field
            .parse()
            .map_err(|_| csv_error(path, row, format!("malformed label {:?}", &record[0])))?;
        let label = match value {
            1.0 => 1,
            -1.0 => -1,
            0.0 => 0,
            _ => return Err(csv_error(path, row, format!("label {} is not one of +1, -1, 0", &record[0]))),
        };
        labels.push(label);
    }
    Ok(labels)
}

/// Write a matrix as headerless CSV using shortest round-trip float formatting.
pub fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols() * 20);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(b',');
            }
            write!(out, "{:?}", m[(r, c)])?;
        }
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}
