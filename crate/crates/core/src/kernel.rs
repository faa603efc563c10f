//! Kernel functions and Gram matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};

/// Row count above which [`median_width`] subsamples.
pub const MEDIAN_EXHAUSTIVE_LIMIT: usize = 2000;
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x6d65_6469_616e;

/// A kernel on one view.
///
/// The linear kernel can append a constant `1` to each input, which folds
/// the classifier's bias into the weight vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear { augment_bias: bool },
    Gaussian { width: f64 },
}

impl KernelSpec {
    pub fn linear(augment_bias: bool) -> Self {
        KernelSpec::Linear { augment_bias }
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        if width > 0.0 && width.is_finite() {
            Ok(KernelSpec::Gaussian { width })
        } else {
            Err(invalid(format!("gaussian width must be positive and finite, got {width}")))
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        check_dim("kernel arguments", x.len(), z.len())?;
        Ok(self.eval_unchecked(x.iter().copied(), z.iter().copied()))
    }

    fn eval_unchecked<I>(&self, x: I, z: I) -> f64
    where
        I: Iterator<Item = f64>,
    {
        match *self {
            KernelSpec::Linear { augment_bias } => {
                let dot: f64 = x.zip(z).map(|(a, b)| a * b).sum();
                if augment_bias {
                    dot + 1.0
                } else {
                    dot
                }
            }
            KernelSpec::Gaussian { width } => {
                let d2: f64 = x.zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * width * width)).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear { augment_bias: true } => write!(f, "linear"),
            KernelSpec::Linear { augment_bias: false } => write!(f, "linear:nobias"),
            KernelSpec::Gaussian { width } => write!(f, "gaussian:{width:?}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `linear`, `linear:nobias` or `gaussian:<width>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            None if s.trim() == "linear" => Ok(KernelSpec::linear(true)),
            Some(("linear", "nobias")) => Ok(KernelSpec::linear(false)),
            Some(("linear", "bias")) => Ok(KernelSpec::linear(true)),
            Some(("gaussian", w)) => {
                let width = w
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad gaussian width {w:?}")))?;
                KernelSpec::gaussian(width)
            }
            _ => Err(invalid(format!("unknown kernel {s:?}"))),
        }
    }
}

/// Gram matrix with entry `(i, j) = k(x_i, z_j)` for rows of `x` and `z`.
pub fn gram(spec: &KernelSpec, x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dim("gram columns", x.ncols(), z.ncols())?;
    let (n, m) = (x.nrows(), z.nrows());
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| spec.eval_unchecked(x.row(i).iter().copied(), z.row(j).iter().copied()))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Symmetric Gram matrix of `x` with itself.
pub fn gram_sym(spec: &KernelSpec, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval_unchecked(x.row(i).iter().copied(), x.row(j).iter().copied());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Median pairwise Euclidean distance between distinct rows.
///
/// Inputs with more than [`MEDIAN_EXHAUSTIVE_LIMIT`] rows are reduced to a
/// fixed-seed random subset of that size first. A result of `0` means all
/// pairs coincide and the width must be chosen by hand.
pub fn median_width(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(invalid(format!("median width needs at least 2 rows, got {n}")));
    }
    let rows: Vec<usize> = if n > MEDIAN_EXHAUSTIVE_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(MEDIAN_SUBSAMPLE_SEED);
        let mut picked = sample(&mut rng, n, MEDIAN_EXHAUSTIVE_LIMIT).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            dists.push((x.row(i) - x.row(j)).norm());
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median == 0.0 {
        log::warn!("median pairwise distance is 0; gaussian width must be set explicitly");
    }
    Ok(median)
}
