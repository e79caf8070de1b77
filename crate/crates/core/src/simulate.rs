//! Euler simulation of the driftless log price
//! `dX_t = -sigma_t^2/2 dt + sigma_t (rho dW_t + sqrt(1-rho^2) dB_t)`
//! with the volatility frozen at the left endpoint of each step.

use crate::error::{EngineError, Result};
use crate::gaussian::{
    brownian_cov, build_grid, factorize, sample_brownian, sample_joint, volterra_cov,
    CholeskyFactor, TimeGrid,
};
use crate::stats;
use crate::vol::{
    const_vol, rbergomi_vol, truncated_rbergomi_vol, truncation_bounds, RoughBergomiParams,
    TruncationReading, VolBounds,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Black-Scholes dynamics; `rho` only splits the noise between the two
    /// driver streams and does not change the law.
    Constant { sigma0: f64, rho: f64 },
    RoughBergomi(RoughBergomiParams),
    TruncatedRoughBergomi {
        params: RoughBergomiParams,
        level: f64,
        reading: TruncationReading,
    },
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Constant { sigma0, rho } => {
                if !(sigma0.is_finite() && *sigma0 > 0.0) {
                    return Err(EngineError::InvalidArgument(format!(
                        "sigma0 must be positive (got {sigma0})"
                    )));
                }
                if !(*rho > -1.0 && *rho < 1.0) {
                    return Err(EngineError::InvalidArgument(format!(
                        "rho must lie strictly inside (-1, 1) (got {rho})"
                    )));
                }
                Ok(())
            }
            Model::RoughBergomi(p) => p.validate(),
            Model::TruncatedRoughBergomi { params, level, .. } => {
                params.validate()?;
                if !(level.is_finite() && *level > 0.0) {
                    return Err(EngineError::InvalidArgument(format!(
                        "truncation level must be positive (got {level})"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            Model::Constant { rho, .. } => *rho,
            Model::RoughBergomi(p) => p.rho,
            Model::TruncatedRoughBergomi { params, .. } => params.rho,
        }
    }

    pub fn sigma0(&self) -> f64 {
        match self {
            Model::Constant { sigma0, .. } => *sigma0,
            Model::RoughBergomi(p) => p.sigma0,
            Model::TruncatedRoughBergomi { params, .. } => params.sigma0,
        }
    }

    /// Uniform volatility bracket, when the model guarantees one.
    pub fn vol_bounds(&self) -> Option<VolBounds> {
        match self {
            Model::Constant { sigma0, .. } => VolBounds::new(*sigma0, *sigma0).ok(),
            Model::RoughBergomi(_) => None,
            Model::TruncatedRoughBergomi { params, level, reading } => {
                truncation_bounds(params.sigma0, *level, *reading).ok()
            }
        }
    }

    fn needs_fractional_leg(&self) -> bool {
        !matches!(self, Model::Constant { .. })
    }

    fn hurst(&self) -> f64 {
        match self {
            Model::Constant { .. } => 0.5,
            Model::RoughBergomi(p) => p.hurst,
            Model::TruncatedRoughBergomi { params, .. } => params.hurst,
        }
    }
}

/// A simulated batch: log-price and spot-vol paths stored row-major,
/// `n_steps + 1` columns per path.
pub struct PathBatch {
    grid: TimeGrid,
    n_paths: usize,
    x0: f64,
    seed: u64,
    log_price: Vec<f64>,
    vol: Vec<f64>,
}

impl PathBatch {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x_row(&self, path: usize) -> &[f64] {
        let w = self.grid.n_steps() + 1;
        &self.log_price[path * w..(path + 1) * w]
    }

    pub fn vol_row(&self, path: usize) -> &[f64] {
        let w = self.grid.n_steps() + 1;
        &self.vol[path * w..(path + 1) * w]
    }

    pub fn terminal(&self, path: usize) -> f64 {
        *self.x_row(path).last().unwrap()
    }
}

/// Simulates `n_paths` Euler paths started at log price `x0`.
///
/// Path `p` is a pure function of `(seed, p)`, so any work split across
/// threads produces identical bits.
pub fn simulate_batch(
    model: &Model,
    grid: &TimeGrid,
    n_paths: usize,
    x0: f64,
    seed: u64,
) -> Result<PathBatch> {
    model.validate()?;
    if n_paths == 0 {
        return Err(EngineError::InvalidArgument("need at least one path".into()));
    }
    if !x0.is_finite() {
        return Err(EngineError::InvalidArgument(format!(
            "initial log price must be finite (got {x0})"
        )));
    }
    let factor: CholeskyFactor = if model.needs_fractional_leg() {
        factorize(&volterra_cov(grid, model.hurst())?)?
    } else {
        factorize(&brownian_cov(grid))?
    };

    let n = grid.n_steps();
    let width = n + 1;
    let rho = model.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let mut log_price = vec![0.0f64; n_paths * width];
    let mut vol = vec![0.0f64; n_paths * width];

    log_price
        .par_chunks_mut(width)
        .zip(vol.par_chunks_mut(width))
        .enumerate()
        .try_for_each(|(p, (x_row, v_row))| -> Result<()> {
            let (dw, db, sigma) = match model {
                Model::Constant { sigma0, .. } => {
                    let (dw, db) = sample_brownian(&factor, grid, seed, p as u64);
                    (dw, db, const_vol(grid, *sigma0)?)
                }
                Model::RoughBergomi(params) => {
                    let s = sample_joint(&factor, grid, seed, p as u64);
                    let sigma = rbergomi_vol(&s.wh, grid, params);
                    (s.dw, s.db, sigma)
                }
                Model::TruncatedRoughBergomi { params, level, reading } => {
                    let s = sample_joint(&factor, grid, seed, p as u64);
                    let (sigma, _) =
                        truncated_rbergomi_vol(&s.wh, grid, params, *level, *reading)?;
                    (s.dw, s.db, sigma)
                }
            };
            let dt = grid.dt();
            v_row.copy_from_slice(&sigma);
            x_row[0] = x0;
            for i in 0..n {
                let s = sigma[i];
                x_row[i + 1] =
                    x_row[i] - 0.5 * s * s * dt + s * (rho * dw[i] + rho_perp * db[i]);
            }
            Ok(())
        })?;

    Ok(PathBatch { grid: grid.clone(), n_paths, x0, seed, log_price, vol })
}

/// Convenience wrapper building the grid inline.
pub fn simulate(
    model: &Model,
    maturity: f64,
    n_steps: usize,
    n_paths: usize,
    x0: f64,
    seed: u64,
) -> Result<PathBatch> {
    simulate_batch(model, &build_grid(maturity, n_steps)?, n_paths, x0, seed)
}

/// Running-maximum summary of a batch.
pub struct PathStatistics {
    /// Grid maximum of the log price, per path.
    pub max: Vec<f64>,
    /// First grid index attaining the maximum, per path.
    pub argmax: Vec<usize>,
    /// Mean of `max` (estimator of `E[sup X]` up to discretisation).
    pub mean_max: f64,
}

pub fn path_stats(batch: &PathBatch) -> PathStatistics {
    let rows: Vec<(f64, usize)> = (0..batch.n_paths())
        .into_par_iter()
        .map(|p| row_max(batch.x_row(p)))
        .collect();
    let max: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let argmax: Vec<usize> = rows.iter().map(|r| r.1).collect();
    let mean_max = stats::mean(&max);
    PathStatistics { max, argmax, mean_max }
}

/// Largest value and the first index attaining it.
fn row_max(row: &[f64]) -> (f64, usize) {
    let mut best = row[0];
    let mut idx = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            idx = i;
        }
    }
    (best, idx)
}

/// Per-path `sup_i |X_{t_i} - x0|`, the deviation the path-regularity
/// functionals are compared against.
pub fn abs_max_deviation(batch: &PathBatch) -> Vec<f64> {
    (0..batch.n_paths())
        .into_par_iter()
        .map(|p| {
            let x0 = batch.x0();
            batch.x_row(p).iter().fold(0.0f64, |a, &x| a.max((x - x0).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_model() -> Model {
        Model::TruncatedRoughBergomi {
            params: RoughBergomiParams::new(0.2, 0.5, 0.2, -0.3).unwrap(),
            level: 5.0,
            reading: TruncationReading::Variance,
        }
    }

    #[test]
    fn validate_rejects_bad_models() {
        assert!(Model::Constant { sigma0: 0.2, rho: 0.0 }.validate().is_ok());
        assert!(Model::Constant { sigma0: -0.2, rho: 0.0 }.validate().is_err());
        assert!(Model::Constant { sigma0: 0.2, rho: 1.0 }.validate().is_err());
        assert!(example_model().validate().is_ok());
        let bad = Model::TruncatedRoughBergomi {
            params: RoughBergomiParams { sigma0: 0.2, nu: 0.5, hurst: 0.2, rho: -0.3 },
            level: 0.0,
            reading: TruncationReading::Variance,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn batch_layout_and_accessors() {
        let b = simulate(&example_model(), 0.5, 8, 10, 0.0, 1).unwrap();
        assert_eq!(b.n_paths(), 10);
        assert_eq!(b.x_row(3).len(), 9);
        assert_eq!(b.vol_row(3).len(), 9);
        assert_eq!(b.x_row(0)[0], 0.0);
        assert_eq!(b.vol_row(7)[0], 0.2);
        assert_eq!(b.terminal(4), b.x_row(4)[8]);
    }

    #[test]
    fn same_seed_same_bits_any_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| simulate(&example_model(), 0.5, 16, 64, 2.302, 42).unwrap())
        };
        let a = run(1);
        let b = run(3);
        for p in 0..a.n_paths() {
            for (x, y) in a.x_row(p).iter().zip(b.x_row(p)) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let c = run(1);
        for p in 0..a.n_paths() {
            assert_eq!(a.x_row(p), c.x_row(p));
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = simulate(&example_model(), 0.5, 8, 4, 0.0, 1).unwrap();
        let b = simulate(&example_model(), 0.5, 8, 4, 0.0, 2).unwrap();
        assert_ne!(a.x_row(0), b.x_row(0));
    }

    #[test]
    fn constant_vol_terminal_moments() {
        // X_T ~ N(x0 - sigma^2 T / 2, sigma^2 T) exactly for constant vol:
        // mean within 4 se, variance within 1% on 1e6 paths.
        let sigma: f64 = 0.2;
        let t = 1.0;
        let model = Model::Constant { sigma0: sigma, rho: 0.0 };
        let b = simulate(&model, t, 8, 1_000_000, 0.0, 9).unwrap();
        let terms: Vec<f64> = (0..b.n_paths()).map(|p| b.terminal(p)).collect();
        let (m, se) = crate::stats::mean_and_se(&terms);
        let target = -0.5 * sigma * sigma * t;
        assert!(
            (m - target).abs() <= 4.0 * se,
            "mean {m} vs {target} (se {se})"
        );
        let sq: Vec<f64> = terms.iter().map(|x| (x - m) * (x - m)).collect();
        let var = crate::stats::mean(&sq);
        assert_relative_eq!(var, sigma * sigma * t, max_relative = 0.01);
    }

    #[test]
    fn truncated_model_price_is_martingale() {
        // E[exp(X_T)] = exp(x0) within 3 se.
        let x0 = 10f64.ln();
        let b = simulate(&example_model(), 0.5, 64, 200_000, x0, 17).unwrap();
        let prices: Vec<f64> = (0..b.n_paths()).map(|p| b.terminal(p).exp()).collect();
        let (m, se) = crate::stats::mean_and_se(&prices);
        assert!(
            (m - 10.0).abs() <= 3.0 * se,
            "E[S_T] = {m} (se {se}) drifts from 10"
        );
    }

    #[test]
    fn quadratic_increments_respect_vol_bracket() {
        // E|X_t - X_s|^2 <= upper^2 |t-s| (1 + eps) over all grid pairs;
        // tight bracket (level 1) so the test is informative.
        let model = Model::TruncatedRoughBergomi {
            params: RoughBergomiParams::new(0.2, 0.5, 0.2, -0.3).unwrap(),
            level: 1.0,
            reading: TruncationReading::Variance,
        };
        let bounds = model.vol_bounds().unwrap();
        let b = simulate(&model, 0.5, 16, 20_000, 0.0, 23).unwrap();
        let w = b.grid().n_steps() + 1;
        let pts = b.grid().points().to_vec();
        for i in 0..w {
            for j in (i + 1)..w {
                let mut acc = 0.0;
                for p in 0..b.n_paths() {
                    let row = b.x_row(p);
                    let d = row[j] - row[i];
                    acc += d * d;
                }
                let m = acc / b.n_paths() as f64;
                let cap = bounds.upper * bounds.upper * (pts[j] - pts[i]) * 1.1;
                assert!(m <= cap, "pair ({i},{j}): {m} > {cap}");
            }
        }
    }

    #[test]
    fn short_maturity_mean_max_collapses_to_start() {
        // E[sup X] - x0 -> 0 as T -> 0; at T = 1e-3 it is below 0.01.
        let x0 = 10f64.ln();
        let b = simulate(&example_model(), 1e-3, 32, 20_000, x0, 29).unwrap();
        let s = path_stats(&b);
        assert!(s.mean_max >= x0, "running max cannot undershoot the start");
        assert!(s.mean_max - x0 <= 0.01, "mean max deviation {}", s.mean_max - x0);
    }

    #[test]
    fn row_max_breaks_ties_at_first_index() {
        assert_eq!(row_max(&[1.0, 1.0, 1.0]), (1.0, 0));
        assert_eq!(row_max(&[0.0, 2.0, 2.0, -1.0]), (2.0, 1));
        assert_eq!(row_max(&[3.0]), (3.0, 0));
    }

    #[test]
    fn near_zero_vol_pins_paths_to_start() {
        let model = Model::Constant { sigma0: 1e-8, rho: 0.0 };
        let x0 = 2.0;
        let b = simulate(&model, 1.0, 16, 2_000, x0, 3).unwrap();
        let s = path_stats(&b);
        for (p, &m) in s.max.iter().enumerate() {
            assert!((m - x0).abs() <= 1e-6, "path {p} strays: {m}");
        }
        let dev = abs_max_deviation(&b);
        assert!(dev.iter().all(|&d| d <= 1e-6));
    }

    #[test]
    fn degenerate_rbergomi_matches_constant_model_bitwise() {
        // nu = 0, H = 1/2 reduces the rough model to Black-Scholes, and the
        // shared driving stream makes the batches identical to the bit.
        let cv = Model::Constant { sigma0: 0.2, rho: -0.3 };
        let rb = Model::RoughBergomi(RoughBergomiParams::new(0.2, 0.0, 0.5, -0.3).unwrap());
        let a = simulate(&cv, 0.5, 32, 500, 1.0, 11).unwrap();
        let b = simulate(&rb, 0.5, 32, 500, 1.0, 11).unwrap();
        for p in 0..a.n_paths() {
            for (x, y) in a.x_row(p).iter().zip(b.x_row(p)) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
