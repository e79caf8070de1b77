//! Tail bounds for the running maximum of the log price, and the data-driven
//! calibration of their constants.
//!
//! Three ingredients:
//! - a discrete Garsia-Rodemich-Rumsey functional measuring path roughness,
//!   with the radius it certifies for the running maximum;
//! - a sub-Gaussian concentration bound around the mean running maximum,
//!   driven by a uniform volatility bracket;
//! - a Gaussian-shaped density majorant for the running maximum whose
//!   integrated tail bounds the barrier hit probability.

use crate::error::{EngineError, Result};
use crate::quad;
use crate::stats::{self, GaussianKde};
use crate::vol::VolBounds;
use serde::{Deserialize, Serialize};

/// Exponent pair and constant of the path-roughness functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrrParams {
    /// Half the even power applied to increments.
    pub p0: u32,
    /// Time-weight exponent.
    pub gamma0: f64,
    /// Calibrated scale constant.
    pub c_grr: f64,
}

impl GrrParams {
    /// The radius certificate needs `gamma0 > 4` (so the certified radius
    /// vanishes with maturity) and `p0 > gamma0/2 + 1` (integrability).
    pub fn new(p0: u32, gamma0: f64, c_grr: f64) -> Result<Self> {
        if !(gamma0.is_finite() && gamma0 > 4.0) {
            return Err(EngineError::InvalidArgument(format!(
                "gamma0 must exceed 4 (got {gamma0})"
            )));
        }
        if (p0 as f64) - 2.0 <= gamma0 {
            return Err(EngineError::InvalidArgument(format!(
                "p0 must exceed gamma0 + 2 (got p0 = {p0}, gamma0 = {gamma0})"
            )));
        }
        if !(c_grr.is_finite() && c_grr > 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "c_grr must be positive (got {c_grr})"
            )));
        }
        Ok(GrrParams { p0, gamma0, c_grr })
    }
}

/// Discrete double-sum functional
/// `Y = sum_{i != j} (X_i - X_j)^{2 p0} / |t_i - t_j|^{gamma0} dt^2`
/// over one path sampled on a uniform grid with spacing `dt`.
///
/// Weaker exponent requirements than [`GrrParams::new`]: the sum itself only
/// needs `p0 > gamma0 / 2` to stay bounded under refinement.
pub fn grr_functional(path: &[f64], dt: f64, p0: u32, gamma0: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(EngineError::InvalidArgument(format!(
            "need at least 2 grid points (got {})",
            path.len()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EngineError::InvalidArgument(format!("dt must be positive (got {dt})")));
    }
    if p0 < 1 || !(gamma0.is_finite() && gamma0 > 0.0) || 2.0 * p0 as f64 <= gamma0 {
        return Err(EngineError::InvalidArgument(format!(
            "need p0 >= 1 and 0 < gamma0 < 2 p0 (got p0 = {p0}, gamma0 = {gamma0})"
        )));
    }
    let n = path.len();
    // w[k] = (k dt)^{-gamma0} for lag k
    let weights: Vec<f64> = (0..n)
        .map(|k| if k == 0 { 0.0 } else { (k as f64 * dt).powf(-gamma0) })
        .collect();
    let two_p0 = 2 * p0 as i32;
    let mut acc = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (path[j] - path[i]).abs();
            if d == 0.0 {
                continue;
            }
            let term = if d < 1e-8 {
                // tiny increments: evaluate in log space to dodge underflow
                (two_p0 as f64 * d.ln() + weights[j - i].ln()).exp()
            } else {
                d.powi(two_p0) * weights[j - i]
            };
            acc += term;
        }
    }
    // off-diagonal pairs counted once above, the functional counts both orders
    Ok(2.0 * acc * dt * dt)
}

/// Radius certified by the roughness functional: paths with
/// `Y_T <= radius_threshold` stay within `level - x0` of their start.
/// Equals `c_grr (level - x0)^{2 p0} T^{(4 - gamma0)/2}`. For `gamma0 > 4`
/// the threshold grows as the maturity shrinks: straying a fixed distance in
/// less time demands ever larger roughness, so ever more paths are certified.
pub fn grr_radius_threshold(level: f64, x0: f64, t: f64, params: &GrrParams) -> Result<f64> {
    if !(level > x0) {
        return Err(EngineError::InvalidArgument(format!(
            "level must exceed the start point (got level {level}, x0 {x0})"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(EngineError::InvalidArgument(format!("maturity must be positive (got {t})")));
    }
    Ok(params.c_grr * (level - x0).powi(2 * params.p0 as i32) * t.powf((4.0 - params.gamma0) / 2.0))
}

/// Sub-Gaussian concentration of the running maximum around `center`:
/// `P(M_T >= b) <= exp(-(b - center)^2 / (2 upper^2 (1 - rho^2) T))`.
/// Vacuously one when `b <= center` or when the variance proxy degenerates.
pub fn concentration_bound(b: f64, center: f64, t: f64, bounds: &VolBounds, rho: f64) -> f64 {
    if b <= center {
        return 1.0;
    }
    let denom = 2.0 * bounds.upper * bounds.upper * (1.0 - rho * rho) * t;
    if !(denom > 0.0) {
        return 1.0;
    }
    (-(b - center) * (b - center) / denom).exp()
}

/// Constants of the Gaussian-shaped density majorant
/// `f(z) <= c1 / sqrt(T) exp(-(z - x0)^2 / (2 c2 T))` for the density of the
/// running maximum, plus the variance constant `c3` used when integrating
/// the majorant into a tail bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityBoundParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DensityBoundParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        Self::with_tail_scale(c1, c2, c2)
    }

    pub fn with_tail_scale(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let p = DensityBoundParams { c1, c2, c3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // c1 = 0 is allowed: a vacuously false majorant, useful for
        // exercising dominance failures end to end.
        if !(self.c1.is_finite() && self.c1 >= 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "c1 must be nonnegative (got {})",
                self.c1
            )));
        }
        for (name, v) in [("c2", self.c2), ("c3", self.c3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EngineError::InvalidArgument(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        Ok(())
    }
}

/// The density majorant itself.
pub fn density_bound(z: f64, x0: f64, t: f64, params: &DensityBoundParams) -> f64 {
    params.c1 / t.sqrt() * (-(z - x0) * (z - x0) / (2.0 * params.c2 * t)).exp()
}

/// Tail bound obtained by integrating the majorant from `b` upward:
/// `c1 sqrt(2 pi c3) Q((b - x0) / sqrt(c3 T))`. Decays faster than any
/// polynomial in `T` for `b > x0`.
pub fn cdf_bound(b: f64, x0: f64, t: f64, params: &DensityBoundParams) -> f64 {
    let s = (params.c3 * t).sqrt();
    params.c1 * (2.0 * std::f64::consts::PI * params.c3).sqrt() * stats::norm_tail((b - x0) / s)
}

/// Same tail bound by adaptive quadrature of the majorant (with `c3` as the
/// variance constant); cross-checks the closed form.
pub fn cdf_bound_quadrature(b: f64, x0: f64, t: f64, params: &DensityBoundParams) -> Result<f64> {
    let p = DensityBoundParams { c1: params.c1, c2: params.c3, c3: params.c3 };
    let s = (params.c3 * t).sqrt();
    let upper = b + 40.0 * s;
    quad::integrate(|z| density_bound(z, x0, t, &p), b, upper, 1e-12, f64::MIN_POSITIVE)
}

/// Minimum of the concentration and integrated-density bounds.
pub fn combined_bound(
    b: f64,
    x0: f64,
    center: f64,
    t: f64,
    vol_bounds: &VolBounds,
    rho: f64,
    params: &DensityBoundParams,
) -> f64 {
    concentration_bound(b, center, t, vol_bounds, rho).min(cdf_bound(b, x0, t, params))
}

/// Smallest `c1` making the integrated tail bound dominate every observed
/// (maturity, hit-probability) pair with multiplicative `headroom`, at fixed
/// variance constant `c2`.
pub fn calibrate_cdf_amplitude(
    rows: &[(f64, f64)],
    b_minus_x: f64,
    c2: f64,
    headroom: f64,
) -> Result<f64> {
    if !(b_minus_x > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "barrier must sit above the start (got gap {b_minus_x})"
        )));
    }
    if !(c2.is_finite() && c2 > 0.0) {
        return Err(EngineError::InvalidArgument(format!("c2 must be positive (got {c2})")));
    }
    if !(headroom >= 1.0) {
        return Err(EngineError::InvalidArgument(format!(
            "headroom must be at least 1 (got {headroom})"
        )));
    }
    let mut c1: f64 = 0.0;
    let scale = (2.0 * std::f64::consts::PI * c2).sqrt();
    for &(t, p) in rows {
        if !(t > 0.0) {
            return Err(EngineError::InvalidArgument(format!(
                "maturities must be positive (got {t})"
            )));
        }
        if p <= 0.0 {
            continue;
        }
        let q = stats::norm_tail(b_minus_x / (c2 * t).sqrt());
        if q > 0.0 {
            c1 = c1.max(headroom * p / (scale * q));
        }
    }
    if c1 <= 0.0 {
        return Err(EngineError::InsufficientData(
            "no positive hit-probability estimates to calibrate against".into(),
        ));
    }
    Ok(c1)
}

/// Smallest `c1` making the density majorant dominate a kernel density
/// estimate of running-maximum samples on `eval_points`, with `headroom`.
pub fn calibrate_density_amplitude(
    max_samples: &[f64],
    x0: f64,
    t: f64,
    c2: f64,
    headroom: f64,
    eval_points: &[f64],
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(EngineError::InvalidArgument(format!("maturity must be positive (got {t})")));
    }
    if !(c2 > 0.0) {
        return Err(EngineError::InvalidArgument(format!("c2 must be positive (got {c2})")));
    }
    if !(headroom >= 1.0) {
        return Err(EngineError::InvalidArgument(format!(
            "headroom must be at least 1 (got {headroom})"
        )));
    }
    if eval_points.is_empty() {
        return Err(EngineError::InvalidArgument("need at least one evaluation point".into()));
    }
    let kde = GaussianKde::new(max_samples)?;
    let mut c1: f64 = 0.0;
    for &z in eval_points {
        let target = kde.density(z);
        let gauss = (-(z - x0) * (z - x0) / (2.0 * c2 * t)).exp() / t.sqrt();
        if gauss > 0.0 {
            c1 = c1.max(headroom * target / gauss);
        }
    }
    if c1 <= 0.0 {
        return Err(EngineError::InsufficientData(
            "kernel density vanished on every evaluation point".into(),
        ));
    }
    Ok(c1)
}

/// Largest `c_grr` (up to `headroom`) such that every training path that
/// strayed beyond `level - x0` carries a functional value above the radius
/// threshold. Violating paths are exactly what the certificate must flag.
pub fn calibrate_grr_constant(
    functionals: &[f64],
    deviations: &[f64],
    level_minus_x: f64,
    t: f64,
    p0: u32,
    gamma0: f64,
    headroom: f64,
) -> Result<f64> {
    if functionals.len() != deviations.len() {
        return Err(EngineError::InvalidArgument(format!(
            "functional and deviation vectors must align (got {} and {})",
            functionals.len(),
            deviations.len()
        )));
    }
    if !(level_minus_x > 0.0) {
        return Err(EngineError::InvalidArgument(format!(
            "level must sit above the start (got gap {level_minus_x})"
        )));
    }
    if !(headroom >= 1.0) {
        return Err(EngineError::InvalidArgument(format!(
            "headroom must be at least 1 (got {headroom})"
        )));
    }
    let unit = GrrParams { p0, gamma0, c_grr: 1.0 };
    let base = grr_radius_threshold(level_minus_x, 0.0, t, &unit)?;
    let mut best = f64::INFINITY;
    for (&y, &d) in functionals.iter().zip(deviations) {
        if d > level_minus_x {
            best = best.min(y / base);
        }
    }
    if !best.is_finite() {
        return Err(EngineError::InsufficientData(
            "no training path strayed beyond the level; cannot calibrate the constant".into(),
        ));
    }
    Ok(best / headroom)
}
