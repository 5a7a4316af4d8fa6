//! Local density estimation inside a neighborhood.
//!
//! Two estimators are provided: a diagonal-covariance Gaussian fitted by
//! maximum likelihood ([`GmeModel`]) and a Gaussian-kernel density estimate
//! with per-dimension Silverman bandwidths ([`KdeModel`]). All density math is
//! done in log space; `density` is always `log_density(..).exp()`.
//!
//! A local density is normalized by its mass over the neighborhood ball. The
//! normalizer can be omitted (constant 1) or estimated by Monte Carlo.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::seed;

/// Floor for fitted variances, standard deviations and bandwidths.
pub const DENSITY_FLOOR: f64 = 1e-9;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Smallest value a Monte Carlo normalizer may return.
pub const NORMALIZER_FLOOR: f64 = f64::MIN_POSITIVE;

/// A fitted density that can be evaluated at a point.
pub trait LocalDensity: Sync {
    fn dim(&self) -> usize;

    /// Natural log of the density at `x`. `x` must have length `dim()`.
    fn log_density(&self, x: &[f64]) -> f64;

    fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Log density of a normal distribution with diagonal covariance.
pub fn gaussian_log_pdf_diag(x: &[f64], mean: &[f64], diag_var: &[f64]) -> Result<f64> {
    check_dims(mean.len(), x.len())?;
    check_dims(mean.len(), diag_var.len())?;
    if let Some(&v) = diag_var.iter().find(|&&v| v.is_nan() || v <= 0.0) {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok(log_pdf_diag_unchecked(x, mean, diag_var))
}

/// Density of a normal distribution with diagonal covariance.
pub fn gaussian_pdf_diag(x: &[f64], mean: &[f64], diag_var: &[f64]) -> Result<f64> {
    gaussian_log_pdf_diag(x, mean, diag_var).map(f64::exp)
}

fn log_pdf_diag_unchecked(x: &[f64], mean: &[f64], diag_var: &[f64]) -> f64 {
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for ((&xi, &mi), &vi) in x.iter().zip(mean).zip(diag_var) {
        let dx = xi - mi;
        quad += dx * dx / vi;
        log_det += vi.ln();
    }
    -0.5 * (x.len() as f64 * LN_2PI + log_det + quad)
}

/// Column `j` of `points`, sorted. Summing a sorted column makes the
/// statistics below independent of the order the points arrive in.
fn sorted_column(points: &[&[f64]], j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = points.iter().map(|p| p[j]).collect();
    col.sort_by(f64::total_cmp);
    col
}

/// Mean and sum of squared deviations of a sorted column.
fn column_moments(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let ss = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss)
}

fn check_points(points: &[&[f64]]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("cannot fit a density to zero points".into()));
    };
    let d = first.len();
    for p in points {
        check_dims(d, p.len())?;
    }
    Ok(d)
}

/// Per-dimension means of `points`, independent of point order.
pub fn column_means(points: &[&[f64]]) -> Result<Vec<f64>> {
    let d = check_points(points)?;
    Ok((0..d)
        .map(|j| column_moments(&sorted_column(points, j)).0)
        .collect())
}

/// Diagonal Gaussian fitted to a class's neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct GmeModel {
    pub mean: Vec<f64>,
    /// Per-dimension MLE variance (divides by `n_support`), floored at
    /// [`DENSITY_FLOOR`].
    pub diag_var: Vec<f64>,
    pub n_support: usize,
}

/// Maximum-likelihood diagonal Gaussian. A single point gives floored
/// variances, i.e. a near-delta density at that point.
pub fn fit_gme(points: &[&[f64]]) -> Result<GmeModel> {
    let d = check_points(points)?;
    let n = points.len() as f64;
    let mut mean = Vec::with_capacity(d);
    let mut diag_var = Vec::with_capacity(d);
    for j in 0..d {
        let (m, ss) = column_moments(&sorted_column(points, j));
        mean.push(m);
        diag_var.push((ss / n).max(DENSITY_FLOOR));
    }
    Ok(GmeModel {
        mean,
        diag_var,
        n_support: points.len(),
    })
}

impl GmeModel {
    /// Replace the fitted variances by 1 in every dimension.
    pub fn with_unit_variance(mut self) -> Self {
        self.diag_var.iter_mut().for_each(|v| *v = 1.0);
        self
    }
}

impl LocalDensity for GmeModel {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        log_pdf_diag_unchecked(x, &self.mean, &self.diag_var)
    }
}

/// Silverman's rule of thumb, `1.06 * sigma * n^(-1/5)`, with `sigma` floored
/// at [`DENSITY_FLOOR`] first.
pub fn silverman_bandwidth(std_dev: f64, n: usize) -> f64 {
    1.06 * std_dev.max(DENSITY_FLOOR) * (n.max(1) as f64).powf(-0.2)
}

/// Gaussian-kernel density estimate over a class's neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    support: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub n_support: usize,
}

/// KDE with per-dimension bandwidths from the sample standard deviation
/// (n - 1 denominator) of each coordinate. One point has `sigma = 0`.
pub fn fit_kde(points: &[&[f64]]) -> Result<KdeModel> {
    let d = check_points(points)?;
    let n = points.len();
    let bandwidths = (0..d)
        .map(|j| {
            let (_, ss) = column_moments(&sorted_column(points, j));
            let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
            silverman_bandwidth(std, n)
        })
        .collect();
    let support = points.iter().flat_map(|p| p.iter().copied()).collect();
    Ok(KdeModel {
        support,
        bandwidths,
        n_support: n,
    })
}

impl KdeModel {
    /// Replace the bandwidths by 1 in every dimension.
    pub fn with_unit_bandwidths(mut self) -> Self {
        self.bandwidths.iter_mut().for_each(|h| *h = 1.0);
        self
    }

    pub fn support(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.support.chunks_exact(self.bandwidths.len())
    }

    /// Log of each support point's kernel value `K((X_i - x) ./ H)`.
    pub fn log_kernel_terms(&self, x: &[f64]) -> Vec<f64> {
        let d = self.bandwidths.len();
        let norm = -0.5 * d as f64 * LN_2PI;
        self.support()
            .map(|s| {
                let q: f64 = s
                    .iter()
                    .zip(x)
                    .zip(&self.bandwidths)
                    .map(|((si, xi), h)| {
                        let u = (si - xi) / h;
                        u * u
                    })
                    .sum();
                norm - 0.5 * q
            })
            .collect()
    }
}

impl LocalDensity for KdeModel {
    fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let log_h: f64 = self.bandwidths.iter().map(|h| h.ln()).sum();
        log_sum_exp(&self.log_kernel_terms(x)) - (self.n_support as f64).ln() - log_h
    }
}

/// Checked KDE density evaluation.
pub fn kde_density(model: &KdeModel, x: &[f64]) -> Result<f64> {
    kde_log_density(model, x).map(f64::exp)
}

pub fn kde_log_density(model: &KdeModel, x: &[f64]) -> Result<f64> {
    check_dims(model.dim(), x.len())?;
    Ok(model.log_density(x))
}

/// `ln(sum(exp(v)))` with a max shift. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// How the local density is normalized over the neighborhood ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationMode {
    /// Normalizer is the constant 1.
    #[default]
    Omit,
    /// Uniform Monte Carlo estimate of the mass inside the ball.
    MonteCarlo { samples: usize, seed: u64 },
}

impl NormalizationMode {
    pub const MIN_SAMPLES: usize = 100;

    pub fn validate(&self) -> Result<()> {
        match *self {
            NormalizationMode::MonteCarlo { samples, .. } if samples < Self::MIN_SAMPLES => {
                Err(Error::InvalidArgument(format!(
                    "Monte Carlo normalization needs at least {} samples, got {samples}",
                    Self::MIN_SAMPLES
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Natural log of the volume of a `dim`-dimensional Euclidean ball.
pub fn log_ball_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0) + d * radius.ln()
}

/// A Monte Carlo integral with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub log_value: f64,
    pub std_error: f64,
}

/// Integrate `exp(log_f)` over the ball by sampling uniformly inside it.
pub fn monte_carlo_ball_integral<F>(
    log_f: F,
    center: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "region radius must be positive, got {radius}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let d = center.len();
    let mut rng = seed::rng(seed);
    let mut point = vec![0.0; d];
    let mut logs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut norm = 0.0;
        for p in point.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *p = z;
            norm += z * z;
        }
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / d as f64) / norm.sqrt();
        for (p, c) in point.iter_mut().zip(center) {
            *p = c + *p * scale;
        }
        logs.push(log_f(&point));
    }
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_volume = log_ball_volume(d, radius);
    if !shift.is_finite() {
        return Ok(MonteCarloEstimate {
            value: 0.0,
            log_value: f64::NEG_INFINITY,
            std_error: 0.0,
        });
    }
    let n = samples as f64;
    let w: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let mean_w = w.iter().sum::<f64>() / n;
    let var_w = if samples > 1 {
        w.iter().map(|x| (x - mean_w) * (x - mean_w)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let log_scale = log_volume + shift;
    let log_value = log_scale + mean_w.ln();
    Ok(MonteCarloEstimate {
        value: log_value.exp(),
        log_value,
        std_error: (log_scale + (var_w / n).sqrt().ln()).exp(),
    })
}

/// Natural log of the normalizer of `model` over the ball of `region_radius`
/// around `region_center`. `Omit` returns exactly 0 (normalizer 1).
pub fn log_local_normalizer<M: LocalDensity + ?Sized>(
    model: &M,
    region_center: &[f64],
    region_radius: f64,
    mode: NormalizationMode,
) -> Result<f64> {
    check_dims(model.dim(), region_center.len())?;
    if region_radius.is_nan() || region_radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "region radius must be positive, got {region_radius}"
        )));
    }
    mode.validate()?;
    match mode {
        NormalizationMode::Omit => Ok(0.0),
        NormalizationMode::MonteCarlo { samples, seed } => {
            let est = monte_carlo_ball_integral(
                |x| model.log_density(x),
                region_center,
                region_radius,
                samples,
                seed,
            )?;
            Ok(est.log_value.max(NORMALIZER_FLOOR.ln()))
        }
    }
}

/// Normalizer of `model` over the neighborhood ball; see
/// [`log_local_normalizer`].
pub fn local_normalizer<M: LocalDensity + ?Sized>(
    model: &M,
    region_center: &[f64],
    region_radius: f64,
    mode: NormalizationMode,
) -> Result<f64> {
    log_local_normalizer(model, region_center, region_radius, mode).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn pts(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn gaussian_pdf_examples() {
        let p = gaussian_pdf_diag(&[0.7], &[0.7], &[1.0]).unwrap();
        assert_relative_eq!(p, 0.398_942_3, epsilon = 1e-7);
        let p = gaussian_pdf_diag(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(p, 0.159_154_9, epsilon = 1e-7);
        let peak = gaussian_pdf_diag(&[0.0], &[0.0], &[2.25]).unwrap();
        let off = gaussian_pdf_diag(&[3.0], &[0.0], &[2.25]).unwrap();
        assert_relative_eq!(off / peak, 0.135_335_3, epsilon = 1e-7);
    }

    #[test]
    fn gaussian_rejects_bad_variance() {
        assert!(matches!(
            gaussian_pdf_diag(&[0.0], &[0.0], &[0.0]),
            Err(Error::NonPositiveVariance(_))
        ));
        assert!(gaussian_pdf_diag(&[0.0, 1.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn gaussian_log_density_survives_underflow() {
        // exponent is -800, exp would underflow to zero
        let x = 40.0;
        let l = gaussian_log_pdf_diag(&[x], &[0.0], &[1.0]).unwrap();
        let oracle = -0.5 * (2.0 * PI).ln() - 800.0;
        assert!(l.is_finite());
        assert!(((l - oracle) / oracle).abs() < 1e-9);
        assert_eq!(gaussian_pdf_diag(&[x], &[0.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn gme_fit_examples() {
        let m = fit_gme(&pts(&[vec![0.0], vec![2.0]])).unwrap();
        assert_eq!((m.mean[0], m.diag_var[0], m.n_support), (1.0, 1.0, 2));
        let m = fit_gme(&pts(&[vec![3.0, -1.0]])).unwrap();
        assert_eq!(m.mean, [3.0, -1.0]);
        assert_eq!(m.diag_var, [DENSITY_FLOOR, DENSITY_FLOOR]);
        assert!(fit_gme(&[]).is_err());
    }

    #[test]
    fn gme_fit_recovers_sampling_distribution() {
        let mut rng = seed::rng(12);
        let draws: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal)])
            .collect();
        let m = fit_gme(&pts(&draws)).unwrap();
        assert!((m.mean[0] - 3.0).abs() < 0.2);
        assert!((m.diag_var[0] - 4.0).abs() < 0.5);
    }

    #[test]
    fn silverman_examples() {
        assert_relative_eq!(silverman_bandwidth(1.0, 1), 1.06, epsilon = 1e-15);
        assert_relative_eq!(silverman_bandwidth(2.0, 32), 1.06, epsilon = 1e-12);
        let h = silverman_bandwidth(0.0, 5);
        assert!(h > 0.0 && h < 1e-8);
    }

    #[test]
    fn kde_fit_examples() {
        let m = fit_kde(&pts(&[vec![4.0, 4.0]])).unwrap();
        assert_eq!(m.bandwidths, [silverman_bandwidth(0.0, 1); 2]);
        let m = fit_kde(&pts(&[vec![0.0], vec![1.0], vec![2.0]])).unwrap();
        // 1.06 * 3^(-1/5)
        assert_relative_eq!(m.bandwidths[0], 0.850_906_1, epsilon = 1e-7);
        let scaled = fit_kde(&pts(&[vec![0.0], vec![2.5], vec![5.0]])).unwrap();
        assert_relative_eq!(scaled.bandwidths[0], 2.5 * m.bandwidths[0], epsilon = 1e-12);
    }

    #[test]
    fn kde_single_point_peak() {
        let m = fit_kde(&pts(&[vec![1.5]])).unwrap().with_unit_bandwidths();
        assert_relative_eq!(kde_density(&m, &[1.5]).unwrap(), 0.398_942_3, epsilon = 1e-7);
        assert!(kde_density(&m, &[1.5, 0.0]).is_err());
    }

    #[test]
    fn kde_two_symmetric_points_match_expansion() {
        let r = 0.8;
        let m = fit_kde(&pts(&[vec![-r], vec![r]])).unwrap();
        let h = m.bandwidths[0];
        // hand expansion: (1 / (2h)) * 2 * phi(r / h)
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
        let expected = (phi(r / h) + phi(-r / h)) / (2.0 * h);
        assert_relative_eq!(kde_density(&m, &[0.0]).unwrap(), expected, epsilon = 1e-14);
        let one = fit_kde(&pts(&[vec![r]])).unwrap();
        let one = KdeModel { bandwidths: vec![h], ..one };
        assert_relative_eq!(kde_density(&one, &[0.0]).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn kde_log_density_survives_underflow() {
        let m = fit_kde(&pts(&[vec![0.0], vec![1.0]])).unwrap().with_unit_bandwidths();
        let x = 45.0;
        let l = m.log_density(&[x]);
        let a = -0.5 * x * x;
        let b = -0.5 * (x - 1.0) * (x - 1.0);
        let oracle = b + (1.0 + (a - b).exp()).ln() - 2f64.ln() - 0.5 * (2.0 * PI).ln();
        assert!(l.is_finite());
        assert!(((l - oracle) / oracle).abs() < 1e-9);
    }

    #[test]
    fn omit_mode_is_exactly_one() {
        let m = fit_gme(&pts(&[vec![0.0], vec![1.0]])).unwrap();
        assert_eq!(local_normalizer(&m, &[0.5], 0.3, NormalizationMode::Omit).unwrap(), 1.0);
        assert!(local_normalizer(&m, &[0.5], 0.0, NormalizationMode::Omit).is_err());
        let bad = NormalizationMode::MonteCarlo { samples: 10, seed: 0 };
        assert!(local_normalizer(&m, &[0.5], 1.0, bad).is_err());
    }

    #[test]
    fn normalizer_of_flat_density_is_density_times_volume() {
        let m = GmeModel {
            mean: vec![0.0, 0.0],
            diag_var: vec![1e6, 1e6],
            n_support: 2,
        };
        let center = [0.3, -0.2];
        let radius = 0.5;
        let mode = NormalizationMode::MonteCarlo { samples: 100_000, seed: 5 };
        let z = local_normalizer(&m, &center, radius, mode).unwrap();
        let oracle = m.density(&center) * PI * radius * radius;
        assert!((z / oracle - 1.0).abs() < 0.05, "{z} vs {oracle}");
    }

    #[test]
    fn normalizer_over_huge_ball_is_total_mass() {
        let m = fit_gme(&pts(&[vec![-1.0], vec![1.0]])).unwrap();
        let mode = NormalizationMode::MonteCarlo { samples: 100_000, seed: 8 };
        let z = local_normalizer(&m, &[0.0], 6.0, mode).unwrap();
        assert!((z - 1.0).abs() < 1e-2, "{z}");
    }

    #[test]
    fn ball_volume_closed_forms() {
        assert_relative_eq!(log_ball_volume(1, 2.0).exp(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(log_ball_volume(2, 1.0).exp(), PI, epsilon = 1e-12);
        assert_relative_eq!(log_ball_volume(3, 1.0).exp(), 4.0 / 3.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_relative_eq!(log_sum_exp(&[0.0, 0.0]), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(log_sum_exp(&[-1000.0, -1000.0]), -1000.0 + 2f64.ln(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn gme_fit_ignores_point_order(
            raw in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 1..30),
            rot in 0usize..30,
        ) {
            let a = fit_gme(&pts(&raw)).unwrap();
            let mut rotated = raw.clone();
            let shift = rot % raw.len();
            rotated.rotate_left(shift);
            rotated.reverse();
            let b = fit_gme(&pts(&rotated)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn densities_are_positive_and_log_consistent(
            raw in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 2), 1..20),
            x in proptest::collection::vec(-6.0f64..6.0, 2),
        ) {
            let p = pts(&raw);
            let g = fit_gme(&p).unwrap();
            let k = fit_kde(&p).unwrap();
            for model in [&g as &dyn LocalDensity, &k] {
                let l = model.log_density(&x);
                prop_assert!(!l.is_nan());
                prop_assert_eq!(model.density(&x), l.exp());
            }
            prop_assert!(g.diag_var.iter().all(|&v| v > 0.0));
            prop_assert!(k.bandwidths.iter().all(|&h| h > 0.0));
        }
    }
}
