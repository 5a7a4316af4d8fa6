//! Two-class synthetic dataset families.
//!
//! A `p`-dimensional sample is written `(x_1, ..., x_{p-1}, y)`.
//!
//! | family | class 1 | class 2 |
//! |--------|---------|---------|
//! | T1 | uniform, `y < mean_i sin(x_i)` | uniform, `y >= mean_i sin(x_i)` |
//! | T2 | `N([0..0, -1], I)` | `N([0..0, 1], I)` |
//! | T3 | `N(0, I)` | `N(0, 4 I)` |
//! | T4 | `N([0..0, -1], 1 + I)` | `N([0..0, 1], 1 + 3 I)` |
//!
//! T1 samples live on `0 <= x_i <= 2 pi`, `-2 <= y <= 2`. `1` is the all-ones
//! matrix. Class `c` draws from ChaCha stream `c` of the `SyntheticSpec` seed, so each
//! class sequence is reproducible on its own.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    T1,
    T2,
    T3,
    T4,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::T1 => "t1",
            Family::T2 => "t2",
            Family::T3 => "t3",
            Family::T4 => "t4",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Family::T1),
            "t2" => Ok(Family::T2),
            "t3" => Ok(Family::T3),
            "t4" => Ok(Family::T4),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthetic family {other:?} (expected t1, t2, t3 or t4)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub family: Family,
    /// Total dimension, `y` included.
    pub dim_p: usize,
    pub n_per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(family: Family, dim_p: usize, n_per_class: usize, seed: u64) -> Self {
        Self {
            family,
            dim_p,
            n_per_class,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim_p < 2 {
            return Err(Error::InvalidArgument(format!(
                "dim_p must be at least 2, got {}",
                self.dim_p
            )));
        }
        if self.n_per_class == 0 {
            return Err(Error::InvalidArgument("n_per_class must be positive".into()));
        }
        Ok(())
    }

    /// Mean and covariance of class `class` (0 or 1) for the Gaussian families.
    pub fn gaussian_params(&self, class: usize) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let p = self.dim_p;
        let shifted = |sign: f64| {
            let mut m = DVector::zeros(p);
            m[p - 1] = sign;
            m
        };
        let sign = if class == 0 { -1.0 } else { 1.0 };
        match self.family {
            Family::T1 => None,
            Family::T2 => Some((shifted(sign), DMatrix::identity(p, p))),
            Family::T3 => {
                let scale = if class == 0 { 1.0 } else { 4.0 };
                Some((DVector::zeros(p), DMatrix::identity(p, p) * scale))
            }
            Family::T4 => {
                let c = if class == 0 { 1.0 } else { 3.0 };
                Some((
                    shifted(sign),
                    DMatrix::from_element(p, p, 1.0) + DMatrix::identity(p, p) * c,
                ))
            }
        }
    }
}

/// Generate a balanced two-class dataset. Class 1 rows come first.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let p = spec.dim_p;
    let mut features = Vec::with_capacity(2 * spec.n_per_class * p);
    let mut labels = Vec::with_capacity(2 * spec.n_per_class);
    for class in 0..2 {
        let mut rng = seed::rng_stream(spec.seed, class as u64);
        match spec.gaussian_params(class) {
            None => sample_t1(&mut rng, class, p, spec.n_per_class, &mut features),
            Some((mean, cov)) => {
                sample_gaussian(&mut rng, &mean, &cov, spec.n_per_class, &mut features)?
            }
        }
        labels.extend(std::iter::repeat_n(class, spec.n_per_class));
    }
    let mut names: Vec<String> = (1..p).map(|i| format!("x{i}")).collect();
    names.push("y".into());
    let name = format!("{}_p{}_n{}", spec.family, p, spec.n_per_class);
    Dataset::from_flat(name, p, features, labels, vec!["1".into(), "2".into()])?
        .with_feature_names(names)
}

/// The T1 boundary `mean_i sin(x_i)` over the `x` part of a sample.
pub fn t1_boundary(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x.sin()).sum::<f64>() / xs.len() as f64
}

fn sample_t1<R: Rng>(rng: &mut R, class: usize, p: usize, n: usize, out: &mut Vec<f64>) {
    let mut point = vec![0.0; p];
    let mut accepted = 0;
    while accepted < n {
        for x in &mut point[..p - 1] {
            *x = rng.random_range(0.0..=2.0 * PI);
        }
        point[p - 1] = rng.random_range(-2.0..=2.0);
        let above = point[p - 1] >= t1_boundary(&point[..p - 1]);
        if above == (class == 1) {
            out.extend_from_slice(&point);
            accepted += 1;
        }
    }
}

fn sample_gaussian<R: Rng>(
    rng: &mut R,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    let chol = cov.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let p = mean.len();
    let mut z = DVector::zeros(p);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = mean + &l * &z;
        out.extend(x.iter());
    }
    Ok(())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Bayes error of two equiprobable unit-variance isotropic Gaussians whose
/// means are `separation` apart.
pub fn bayes_error_mean_shift(separation: f64) -> f64 {
    normal_cdf(-separation / 2.0)
}

/// Exact Bayes error of the T2 family. The means differ by 2 along `y` only,
/// so the value does not depend on the dimension.
pub fn bayes_error_t2(dim_p: usize) -> Result<f64> {
    if dim_p < 2 {
        return Err(Error::InvalidArgument(format!(
            "dim_p must be at least 2, got {dim_p}"
        )));
    }
    Ok(bayes_error_mean_shift(2.0))
}
