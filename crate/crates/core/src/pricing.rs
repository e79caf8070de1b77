//! Monte Carlo estimators for European and up-and-in barrier calls, with a
//! Brownian-bridge correction for barrier crossings between grid points, and
//! constant-volatility closed forms used as oracles.

use crate::error::{EngineError, Result};
use crate::simulate::PathBatch;
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Up-and-in call on the spot, knocked in when the running maximum reaches
/// the barrier. The barrier sits strictly above the spot so the contract
/// starts alive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierContract {
    pub spot: f64,
    pub strike: f64,
    pub barrier: f64,
    pub maturity: f64,
}

impl BarrierContract {
    pub fn new(spot: f64, strike: f64, barrier: f64, maturity: f64) -> Result<Self> {
        let c = BarrierContract { spot, strike, barrier, maturity };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("spot", self.spot),
            ("strike", self.strike),
            ("barrier", self.barrier),
            ("maturity", self.maturity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EngineError::InvalidArgument(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.barrier <= self.spot {
            return Err(EngineError::InvalidArgument(format!(
                "barrier must sit strictly above spot (got barrier {} <= spot {})",
                self.barrier, self.spot
            )));
        }
        if self.maturity > 1.0 {
            return Err(EngineError::InvalidArgument(format!(
                "maturity must lie in (0, 1] years (got {})",
                self.maturity
            )));
        }
        Ok(())
    }

    pub fn log_spot(&self) -> f64 {
        self.spot.ln()
    }

    pub fn log_barrier(&self) -> f64 {
        self.barrier.ln()
    }
}

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Probability that a Brownian bridge from `x_lo` to `x_hi` over a step of
/// length `dt` with diffusion coefficient `sigma` touches `b`. One when an
/// endpoint already reaches the barrier.
pub fn bridge_crossing_prob(x_lo: f64, x_hi: f64, b: f64, sigma: f64, dt: f64) -> f64 {
    if x_lo >= b || x_hi >= b {
        return 1.0;
    }
    (-2.0 * (b - x_lo) * (b - x_hi) / (sigma * sigma * dt)).exp()
}

/// Per-path probability of touching `log_barrier`, combining grid hits with
/// the bridge correction between grid points.
pub fn hit_weights(batch: &PathBatch, log_barrier: f64) -> Vec<f64> {
    let dt = batch.grid().dt();
    (0..batch.n_paths())
        .into_par_iter()
        .map(|p| {
            let x = batch.x_row(p);
            let v = batch.vol_row(p);
            let mut survive = 1.0f64;
            for i in 0..x.len() - 1 {
                if x[i] >= log_barrier || x[i + 1] >= log_barrier {
                    return 1.0;
                }
                survive *= 1.0 - bridge_crossing_prob(x[i], x[i + 1], log_barrier, v[i], dt);
            }
            1.0 - survive
        })
        .collect()
}

/// Barrier hit probability estimate (clamped into [0, 1]).
pub fn hit_probability(batch: &PathBatch, log_barrier: f64) -> McEstimate {
    let w = hit_weights(batch, log_barrier);
    let (m, se) = stats::mean_and_se(&w);
    McEstimate {
        value: m.clamp(0.0, 1.0),
        std_error: se,
        n_paths: batch.n_paths(),
        seed: batch.seed(),
    }
}

/// Up-and-in call price: payoff weighted by the per-path touch probability.
/// Never exceeds the European estimate on the same batch, path by path.
pub fn price_up_and_in(batch: &PathBatch, contract: &BarrierContract) -> Result<McEstimate> {
    contract.validate()?;
    let t = batch.grid().maturity();
    if (t - contract.maturity).abs() > 1e-12 * contract.maturity.max(1.0) {
        return Err(EngineError::InvalidArgument(format!(
            "batch maturity {t} does not match contract maturity {}",
            contract.maturity
        )));
    }
    let b = contract.log_barrier();
    let k = contract.strike;
    let w = hit_weights(batch, b);
    let vals: Vec<f64> = (0..batch.n_paths())
        .into_par_iter()
        .map(|p| (batch.terminal(p).exp() - k).max(0.0) * w[p])
        .collect();
    let (m, se) = stats::mean_and_se(&vals);
    Ok(McEstimate { value: m, std_error: se, n_paths: batch.n_paths(), seed: batch.seed() })
}

/// Vanilla European call estimate on the same terminal values.
pub fn price_european(batch: &PathBatch, strike: f64) -> Result<McEstimate> {
    if !(strike.is_finite() && strike > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "strike must be positive (got {strike})"
        )));
    }
    let vals: Vec<f64> = (0..batch.n_paths())
        .into_par_iter()
        .map(|p| (batch.terminal(p).exp() - strike).max(0.0))
        .collect();
    let (m, se) = stats::mean_and_se(&vals);
    Ok(McEstimate { value: m, std_error: se, n_paths: batch.n_paths(), seed: batch.seed() })
}

/// Closed forms under constant volatility with zero rates, used to validate
/// the Monte Carlo estimators.
pub mod bs {
    use crate::stats::{norm_cdf, norm_tail};

    /// Black-Scholes call, zero rates.
    pub fn call(spot: f64, strike: f64, sigma: f64, t: f64) -> f64 {
        let st = sigma * t.sqrt();
        if st <= 0.0 {
            return (spot - strike).max(0.0);
        }
        let d1 = ((spot / strike).ln() + 0.5 * st * st) / st;
        spot * norm_cdf(d1) - strike * norm_cdf(d1 - st)
    }

    /// Up-and-in call, zero rates (Reiner-Rubinstein). A barrier at or below
    /// the spot is already knocked in.
    pub fn up_and_in_call(spot: f64, strike: f64, barrier: f64, sigma: f64, t: f64) -> f64 {
        if barrier <= spot {
            return call(spot, strike, sigma, t);
        }
        if strike >= barrier {
            // knocking in requires crossing the strike region anyway
            return call(spot, strike, sigma, t);
        }
        let st = sigma * t.sqrt();
        if st <= 0.0 {
            return 0.0;
        }
        // drift of the log price is -sigma^2/2, i.e. mu = -1/2 in the
        // standard barrier parametrisation
        let x2 = (spot / barrier).ln() / st + 0.5 * st;
        let y1 = (barrier * barrier / (spot * strike)).ln() / st + 0.5 * st;
        let y2 = (barrier / spot).ln() / st + 0.5 * st;
        let b_term = spot * norm_cdf(x2) - strike * norm_cdf(x2 - st);
        let c_term = barrier * norm_cdf(-y1) - strike * (spot / barrier) * norm_cdf(-y1 + st);
        let d_term = barrier * norm_cdf(-y2) - strike * (spot / barrier) * norm_cdf(-y2 + st);
        b_term - c_term + d_term
    }

    /// P(sup_{[0,T]} X >= x0 + m) for X a Brownian motion with volatility
    /// `sigma` and drift `-sigma^2/2` (reflection principle).
    pub fn sup_tail_probability(m: f64, sigma: f64, t: f64) -> f64 {
        if m <= 0.0 {
            return 1.0;
        }
        let st = sigma * t.sqrt();
        if st <= 0.0 {
            return 0.0;
        }
        let mu_t = -0.5 * sigma * sigma * t;
        norm_tail((m - mu_t) / st) + (-m).exp() * norm_tail((m + mu_t) / st)
    }
}
