//! Volatility paths on a time grid: constant, rough Bergomi, and a truncated
//! rough Bergomi whose spot volatility is clamped into a fixed bracket.

use crate::error::{EngineError, Result};
use crate::gaussian::TimeGrid;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughBergomiParams {
    /// Spot volatility at time zero.
    pub sigma0: f64,
    /// Volatility of volatility.
    pub nu: f64,
    /// Hurst index of the driving fractional transform.
    pub hurst: f64,
    /// Correlation between the price and volatility drivers.
    pub rho: f64,
}

impl RoughBergomiParams {
    pub fn new(sigma0: f64, nu: f64, hurst: f64, rho: f64) -> Result<Self> {
        let p = RoughBergomiParams { sigma0, nu, hurst, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "sigma0 must be positive (got {})",
                self.sigma0
            )));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "nu must be non-negative (got {})",
                self.nu
            )));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(EngineError::InvalidArgument(format!(
                "hurst must lie strictly inside (0, 1) (got {})",
                self.hurst
            )));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(EngineError::InvalidArgument(format!(
                "rho must lie strictly inside (-1, 1) (got {})",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Uniform bracket `0 < lower <= sigma_t <= upper` guaranteed by a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolBounds {
    pub lower: f64,
    pub upper: f64,
}

impl VolBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 < lower && lower <= upper) {
            return Err(EngineError::InvalidArgument(format!(
                "volatility bounds need 0 < lower <= upper (got {lower}, {upper})"
            )));
        }
        Ok(VolBounds { lower, upper })
    }
}

/// Which object the truncation clamp acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReading {
    /// Clamp the mean-one exponential inside the forward variance, then take
    /// square roots: vol bracket `sigma0 e^{+-level}`.
    Variance,
    /// Clamp `exp(g/2)` directly: vol bracket `sigma0 e^{+-2 level}`.
    Vol,
}

/// C^2 monotone surrogate for `exp(g)` that exactly equals it on `[-n, n]`
/// and plateaus at `exp(+-2n)` outside `[-2n, 2n]`, with quintic smoothstep
/// blends on the transition bands.
pub fn smooth_exp_clamp(g: f64, level: f64) -> f64 {
    let n = level;
    debug_assert!(n > 0.0);
    if g >= 2.0 * n {
        return (2.0 * n).exp();
    }
    if g <= -2.0 * n {
        return (-2.0 * n).exp();
    }
    if g > n {
        let s = smoothstep((g - n) / n);
        return (1.0 - s) * g.exp() + s * (2.0 * n).exp();
    }
    if g < -n {
        let s = smoothstep((-n - g) / n);
        return (1.0 - s) * g.exp() + s * (-2.0 * n).exp();
    }
    g.exp()
}

#[inline]
fn smoothstep(u: f64) -> f64 {
    // 6u^5 - 15u^4 + 10u^3: zero value/slope/curvature matched at both ends
    u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

/// Constant volatility path (one value per grid point).
pub fn const_vol(grid: &TimeGrid, sigma0: f64) -> Result<Vec<f64>> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "sigma0 must be positive (got {sigma0})"
        )));
    }
    Ok(vec![sigma0; grid.n_steps() + 1])
}

/// log-variance exponent `g_i = nu W^H_{t_i} - nu^2 t_i^{2H} / 2` with
/// `g_0 = 0`; `exp(g)` is the mean-one exponential of the forward variance.
fn log_variance_exponents(wh: &[f64], grid: &TimeGrid, params: &RoughBergomiParams) -> Vec<f64> {
    let t = grid.points();
    let mut g = Vec::with_capacity(grid.n_steps() + 1);
    g.push(0.0);
    for (i, &w) in wh.iter().enumerate() {
        let ti = t[i + 1];
        g.push(params.nu * w - 0.5 * params.nu * params.nu * ti.powf(2.0 * params.hurst));
    }
    g
}

/// Rough Bergomi spot volatility along one path:
/// `sigma_{t_i} = sigma0 exp(g_i / 2)`.
pub fn rbergomi_vol(wh: &[f64], grid: &TimeGrid, params: &RoughBergomiParams) -> Vec<f64> {
    debug_assert_eq!(wh.len(), grid.n_steps());
    log_variance_exponents(wh, grid, params)
        .iter()
        .map(|g| params.sigma0 * (0.5 * g).exp())
        .collect()
}

/// Truncated rough Bergomi volatility along one path, plus the bracket the
/// clamp guarantees for every path of the model.
pub fn truncated_rbergomi_vol(
    wh: &[f64],
    grid: &TimeGrid,
    params: &RoughBergomiParams,
    level: f64,
    reading: TruncationReading,
) -> Result<(Vec<f64>, VolBounds)> {
    debug_assert_eq!(wh.len(), grid.n_steps());
    if !(level.is_finite() && level > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "truncation level must be positive (got {level})"
        )));
    }
    let g = log_variance_exponents(wh, grid, params);
    let vols = match reading {
        TruncationReading::Variance => g
            .iter()
            .map(|&gi| params.sigma0 * smooth_exp_clamp(gi, level).sqrt())
            .collect(),
        TruncationReading::Vol => g
            .iter()
            .map(|&gi| params.sigma0 * smooth_exp_clamp(0.5 * gi, level))
            .collect(),
    };
    Ok((vols, truncation_bounds(params.sigma0, level, reading)?))
}

/// Bracket implied by the clamp plateaus alone (path independent).
pub fn truncation_bounds(
    sigma0: f64,
    level: f64,
    reading: TruncationReading,
) -> Result<VolBounds> {
    if !(level.is_finite() && level > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "truncation level must be positive (got {level})"
        )));
    }
    match reading {
        TruncationReading::Variance => {
            VolBounds::new(sigma0 * (-level).exp(), sigma0 * level.exp())
        }
        TruncationReading::Vol => {
            VolBounds::new(sigma0 * (-2.0 * level).exp(), sigma0 * (2.0 * level).exp())
        }
    }
}
