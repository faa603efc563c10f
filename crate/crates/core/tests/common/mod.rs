#![allow(dead_code)]

use mvlapsvm::graph::GraphConfig;
use mvlapsvm::kernel::KernelSpec;
use mvlapsvm::model::{PreparedViews, TrainingData};
use mvlapsvm::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in `[-1, 1]^d` with labels from the sign of a random
/// direction in view 1, both classes present among the first `l` rows.
pub fn random_training(l: usize, u: usize, seed: u64) -> TrainingData {
    let mut r = rng(seed);
    let n = l + u;
    let x1 = DMatrix::from_fn(n, 2, |_, _| r.random_range(-1.0..1.0));
    let x2 = DMatrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
    let dir: [f64; 2] = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
    let mut y: Vec<f64> = (0..l)
        .map(|i| if x1[(i, 0)] * dir[0] + x1[(i, 1)] * dir[1] >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    if l >= 2 {
        y[0] = 1.0;
        y[1] = -1.0;
    }
    TrainingData::new(x1, x2, y).unwrap()
}

pub fn kernels() -> [KernelSpec; 2] {
    [KernelSpec::gaussian(0.8).unwrap(), KernelSpec::linear(true)]
}

pub fn graphs() -> [GraphConfig; 2] {
    [GraphConfig { k: 3, sigma: Some(0.5) }; 2]
}

pub fn prepared(l: usize, u: usize, seed: u64) -> PreparedViews {
    PreparedViews::new(random_training(l, u, seed), kernels(), graphs()).unwrap()
}

/// `10^U[lo, hi]`
pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(r.random_range(lo..hi))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Brute-force maximizer of the bias-free soft-margin SVM dual
/// `sum(b) - 1/2 b' (Y K Y) b` over the grid `{0, h, 2h, ...} ∩ [0, c]^l`.
pub fn svm_dual_grid(k: &DMatrix<f64>, y: &[f64], c: f64, h: f64) -> (Vec<f64>, f64) {
    let l = y.len();
    let steps = (c / h).round() as usize;
    let h = c / steps as f64;
    let mut idx = vec![0usize; l];
    let mut best = (vec![0.0; l], 0.0);
    loop {
        let b: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        let mut quad = 0.0;
        for i in 0..l {
            for j in 0..l {
                quad += b[i] * b[j] * y[i] * y[j] * k[(i, j)];
            }
        }
        let v = b.iter().sum::<f64>() - 0.5 * quad;
        if v > best.1 {
            best = (b, v);
        }
        let mut pos = 0;
        loop {
            if pos == l {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] <= steps {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Narrow Gaussian kernels on both views keep `Q` well conditioned, so the
/// expansion coefficients are unique and comparable entry by entry.
pub fn well_conditioned(l: usize, u: usize, seed: u64) -> PreparedViews {
    let k = KernelSpec::gaussian(0.3).unwrap();
    PreparedViews::new(random_training(l, u, seed), [k; 2], graphs()).unwrap()
}

/// Tiny instances for the brute-force SVM oracle: `(x, y, kernel, C)`.
/// Kernel curvature and `C` are chosen so that some multipliers end up
/// strictly inside the box.
pub fn svm_oracle_cases() -> Vec<(DMatrix<f64>, Vec<f64>, KernelSpec, f64)> {
    let specs: [(usize, usize, f64, KernelSpec, f64); 4] = [
        (2, 2, 1.0, KernelSpec::gaussian(0.7).unwrap(), 1.5),
        (2, 1, 1.0, KernelSpec::linear(false), 0.5),
        (3, 2, 5.0, KernelSpec::linear(false), 0.1),
        (4, 2, 6.0, KernelSpec::linear(false), 0.03),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(case, &(l, dim, scale, kernel, c))| {
            let mut r = rng(100 + case as u64);
            let x = if dim == 1 {
                // unique optimum b = (0, 4/9)
                DMatrix::from_column_slice(2, 1, &[2.0, -1.5])
            } else {
                DMatrix::from_fn(l, dim, |_, _| scale * r.random_range(-1.0..1.0))
            };
            let mut y: Vec<f64> = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            if l == 3 {
                y[2] = 1.0;
            }
            (x, y, kernel, c)
        })
        .collect()
}
