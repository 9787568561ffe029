//! Exact-discretization sampling of the OU diffusion and Monte Carlo
//! estimates of `L²(γ∞)` pairings.
//!
//! One step maps `x` to `e^{hB}x + ξ` with `ξ ~ N(0, Q_h)`, which is the
//! exact transition law, so the step size introduces no bias.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{covariance_at, matrix_exponential, OUModel};
use crate::polynomial::SparsePolynomial;

/// Decay target for the default burn-in: `‖e^{mhB}‖₂ < BURN_IN_DECAY`.
pub const BURN_IN_DECAY: f64 = 1e-6;

const MAX_BURN_IN: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    /// `None` selects the spectral-decay default.
    pub burn_in: Option<usize>,
    pub paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(step: f64, paths: usize, seed: u64) -> Self {
        SimConfig {
            step,
            burn_in: None,
            paths,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParams(format!("step must be positive, got {}", self.step)));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParams("paths must be positive".into()));
        }
        if self.burn_in == Some(0) {
            return Err(Error::InvalidParams("burn-in must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed one-step law.
#[derive(Debug, Clone)]
pub struct Transition {
    pub mean_map: Matrix<f64>,
    /// Lower Cholesky factor of `Q_h`.
    pub noise: Matrix<f64>,
}

impl Transition {
    pub fn new(model: &OUModel, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams(format!("step must be positive, got {h}")));
        }
        let qh = covariance_at(model, h)?.sigma;
        let chol = Cholesky::new(qh.to_nalgebra())
            .ok_or_else(|| Error::CholeskyFailure(format!("Q_h at h = {h}: {:?}", qh.to_rows())))?;
        Ok(Transition {
            mean_map: matrix_exponential(model.b(), h),
            noise: Matrix::from_nalgebra(&chol.l()),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean_map.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = self.mean_map.mul_vec(x);
        let noise = self.noise.mul_vec(&xi);
        for (o, e) in out.iter_mut().zip(noise) {
            *o += e;
        }
        out
    }
}

/// One exact step from `x`.
pub fn sample_transition<R: Rng + ?Sized>(model: &OUModel, h: f64, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    Ok(Transition::new(model, h)?.sample(x, rng))
}

fn spectral_norm(m: &Matrix<f64>) -> f64 {
    m.to_nalgebra().singular_values().max()
}

/// Smallest `m ≥ 1` with `‖e^{mhB}‖₂ < 1e-6`.
pub fn default_burn_in(model: &OUModel, h: f64) -> Result<usize> {
    let e = matrix_exponential(model.b(), h);
    let mut power = e.clone();
    for m in 1..=MAX_BURN_IN {
        if spectral_norm(&power) < BURN_IN_DECAY {
            return Ok(m);
        }
        power = power.mul(&e);
    }
    Err(Error::InvalidParams(format!(
        "step {h} needs more than {MAX_BURN_IN} burn-in steps"
    )))
}

/// Sizes and provenance of an ensemble; written as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub paths: usize,
    pub dim: usize,
    pub step: f64,
    pub burn_in: usize,
    pub seed: u64,
    pub q: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub config_hash: String,
    pub layout: String,
}

const LAYOUT: &str = "f64-le-row-major";

/// `paths × dim` samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub meta: EnsembleMeta,
    pub samples: Vec<f64>,
}

fn config_hash(model: &OUModel, step: f64, burn_in: usize, paths: usize, seed: u64) -> String {
    let mut h = Sha256::new();
    let bits = |m: &Matrix<f64>| {
        m.to_rows()
            .iter()
            .flatten()
            .map(|v| format!("{:016x}", v.to_bits()))
            .collect::<Vec<_>>()
            .join(",")
    };
    h.update(format!(
        "Q={};B={};step={:016x};burn_in={burn_in};paths={paths};seed={seed}",
        bits(model.q()),
        bits(model.b()),
        step.to_bits()
    ));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `paths` independent chains from the origin for the burn-in and keeps
/// the final states. Path `i` draws from the ChaCha8 stream `i` of `seed`, so
/// the output does not depend on the number of worker threads.
pub fn stationary_ensemble(model: &OUModel, config: &SimConfig) -> Result<Ensemble> {
    config.validate()?;
    let step = Transition::new(model, config.step)?;
    let burn_in = match config.burn_in {
        Some(m) => m,
        None => default_burn_in(model, config.step)?,
    };
    let n = model.dim();
    let rows: Vec<Vec<f64>> = (0..config.paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(path as u64);
            let mut x = vec![0.0; n];
            for _ in 0..burn_in {
                x = step.sample(&x, &mut rng);
            }
            x
        })
        .collect();
    let samples: Vec<f64> = rows.into_iter().flatten().collect();
    if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParams(format!("non-finite sample in path {}", bad / n)));
    }
    Ok(Ensemble {
        meta: EnsembleMeta {
            paths: config.paths,
            dim: n,
            step: config.step,
            burn_in,
            seed: config.seed,
            q: model.q().to_rows(),
            b: model.b().to_rows(),
            config_hash: config_hash(model, config.step, burn_in, config.paths, config.seed),
            layout: LAYOUT.into(),
        },
        samples,
    })
}

/// Sum in a fixed binary tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

impl Ensemble {
    pub fn paths(&self) -> usize {
        self.meta.paths
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.samples[i * n..(i + 1) * n]
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.paths()).map(|i| self.row(i)[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| pairwise_sum(&self.column(j)) / self.paths() as f64)
            .collect()
    }

    /// Sample covariance with the `n − 1` normalization.
    pub fn covariance(&self) -> Matrix<f64> {
        let mean = self.mean();
        let n = self.dim();
        let denom = (self.paths().max(2) - 1) as f64;
        Matrix::from_fn(n, n, |a, b| {
            let prods: Vec<f64> = (0..self.paths())
                .map(|i| {
                    let r = self.row(i);
                    (r[a] - mean[a]) * (r[b] - mean[b])
                })
                .collect();
            pairwise_sum(&prods) / denom
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.samples.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes the raw samples to `path` and the metadata to `path.json`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(Self::sidecar_path(path), meta)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let side = Self::sidecar_path(path);
        let text = std::fs::read_to_string(&side)?;
        let meta: EnsembleMeta = serde_json::from_str(&text)
            .map_err(|e| Error::schema(side.display().to_string(), e.to_string()))?;
        if meta.layout != LAYOUT {
            return Err(Error::schema("layout", format!("unsupported layout {:?}", meta.layout)));
        }
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() != meta.paths * meta.dim * 8 {
            return Err(Error::schema(
                path.display().to_string(),
                format!("expected {} bytes, found {}", meta.paths * meta.dim * 8, bytes.len()),
            ));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Ensemble { meta, samples })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.paths() {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sample mean of `p(x)·q(x)` over the ensemble with its jackknife standard
/// error.
pub fn estimate_pairing(
    ensemble: &Ensemble,
    p: &SparsePolynomial<f64>,
    q: &SparsePolynomial<f64>,
) -> Result<PairingEstimate> {
    for d in [p.dim(), q.dim()] {
        if d != ensemble.dim() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.dim(),
                found: d,
            });
        }
    }
    let n = ensemble.paths();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = ensemble.row(i);
            p.evaluate(x) * q.evaluate(x)
        })
        .collect();
    let total = pairwise_sum(&values);
    let estimate = total / n as f64;
    if n < 2 {
        return Ok(PairingEstimate {
            estimate,
            std_error: 0.0,
        });
    }
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1) as f64).collect();
    let loo_mean = pairwise_sum(&loo) / n as f64;
    let sq: Vec<f64> = loo.iter().map(|t| (t - loo_mean).powi(2)).collect();
    let std_error = ((n - 1) as f64 / n as f64 * pairwise_sum(&sq)).sqrt();
    Ok(PairingEstimate { estimate, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn decay() -> OUModel {
        OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }

    fn triangular() -> OUModel {
        OUModel::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[-1.0, 0.0], &[1.0, -3.0]]).unwrap()
    }

    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn one_step_marginals_pass_ks() {
        let m = decay();
        let h = 0.4;
        let x = [1.5, -0.5];
        let t = Transition::new(&m, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<Vec<f64>> = (0..10_000).map(|_| t.sample(&x, &mut rng)).collect();
        let sd = ((1.0 - (-2.0 * h).exp()) / 2.0).sqrt();
        for j in 0..2 {
            let normal = Normal::new(x[j] * (-h).exp(), sd).unwrap();
            let d = ks_statistic(draws.iter().map(|r| r[j]).collect(), |v| normal.cdf(v));
            assert!(d < 1.628 / 100.0, "coordinate {j}: D = {d}");
        }
    }

    #[test]
    fn transition_mean_within_four_standard_errors() {
        let m = triangular();
        let h = 0.3;
        let x = [1.0, 2.0];
        let t = Transition::new(&m, h).unwrap();
        let qh = covariance_at(&m, h).unwrap().sigma;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            let y = t.sample(&x, &mut rng);
            sums[0] += y[0];
            sums[1] += y[1];
        }
        let expect = matrix_exponential(m.b(), h).mul_vec(&x);
        for j in 0..2 {
            let se = (qh[(j, j)] / n as f64).sqrt();
            assert!((sums[j] / n as f64 - expect[j]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn small_step_barely_moves() {
        let m = triangular();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = sample_transition(&m, 1e-10, &[1.0, 1.0], &mut rng).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-3 && (y[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn burn_in_reaches_decay_target() {
        let m = decay();
        // e^{-m h} < 1e-6 with h = 1 gives m = 14
        assert_eq!(default_burn_in(&m, 1.0).unwrap(), 14);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let m = triangular();
        let cfg = SimConfig::new(0.5, 2_000, 42);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| stationary_ensemble(&m, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(a.meta.config_hash, b.meta.config_hash);
    }

    #[test]
    fn constant_pairing_is_exact() {
        let m = triangular();
        let e = stationary_ensemble(&m, &SimConfig::new(0.5, 1_000, 3)).unwrap();
        let one = SparsePolynomial::<f64>::one(2);
        let est = estimate_pairing(&e, &one, &one).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn standard_error_halves_with_four_times_the_paths() {
        let m = decay();
        let x1 = SparsePolynomial::<f64>::variable(2, 0);
        let se = |paths| {
            let e = stationary_ensemble(&m, &SimConfig::new(1.0, paths, 9)).unwrap();
            estimate_pairing(&e, &x1, &x1).unwrap().std_error
        };
        let ratio = se(4_000) / se(16_000);
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn binary_round_trip() {
        let m = triangular();
        let e = stationary_ensemble(&m, &SimConfig::new(0.5, 50, 8)).unwrap();
        let dir = std::env::temp_dir().join(format!("ens-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.bin");
        e.write_binary(&path).unwrap();
        assert_eq!(Ensemble::read_binary(&path).unwrap(), e);
        let mut csv = Vec::new();
        e.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 51);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
