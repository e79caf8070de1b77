//! Maturity scans of the barrier hit probability and prices, and the decay
//! diagnostics run on top of them: local log-log slopes (polynomial rate),
//! a Gaussian-rate fit of `ln P` against `1/T`, and bound dominance checks.

use crate::bounds::{DensityBoundParams, GrrParams};
use crate::error::{EngineError, Result};
use crate::gaussian::build_grid;
use crate::pricing::{hit_weights, price_european, price_up_and_in, BarrierContract};
use crate::rng::derive_seed;
use crate::simulate::{path_stats, simulate_batch, Model};
use crate::stats::{self, linear_fit};
use serde::{Deserialize, Serialize};

/// Bound constants attached to a scan, echoed into manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Roughness-functional constants when the run calibrated them.
    pub grr: Option<GrrParams>,
    pub vol_lower: Option<f64>,
    pub vol_upper: Option<f64>,
    pub rho: f64,
}

/// One maturity row of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub maturity: f64,
    pub hit_prob: f64,
    pub hit_prob_se: f64,
    /// Paths whose grid maximum already touches the barrier (no bridge term).
    pub grid_hits: u64,
    pub up_in: f64,
    pub up_in_se: f64,
    pub european: f64,
    pub european_se: f64,
    /// Mean grid running maximum of the log price.
    pub mean_max: f64,
    pub concentration_bound: f64,
    pub cdf_bound: f64,
    pub combined_bound: f64,
}

/// A full scan: one row per maturity, largest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub spot: f64,
    pub strike: f64,
    pub barrier: f64,
    pub x0: f64,
    pub log_barrier: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub constants: BoundConstants,
    pub rows: Vec<DecayRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Maturities in strictly decreasing order.
    pub maturities: Vec<f64>,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl ScanSettings {
    pub fn validate(&self) -> Result<()> {
        if self.maturities.is_empty() {
            return Err(EngineError::InvalidArgument(
                "scan needs at least one maturity".into(),
            ));
        }
        for w in self.maturities.windows(2) {
            if !(w[1] < w[0]) {
                return Err(EngineError::InvalidArgument(format!(
                    "maturities must be strictly decreasing (got {} before {})",
                    w[0], w[1]
                )));
            }
        }
        if self.n_paths == 0 {
            return Err(EngineError::InvalidArgument("scan needs at least one path".into()));
        }
        Ok(())
    }
}

/// Runs the scan. Each maturity gets its own derived seed, so adding or
/// removing rows never perturbs the others. `grr` is carried into the
/// report for the record; the row bounds only use `density` and the model's
/// volatility bracket.
pub fn decay_scan(
    model: &Model,
    contract: &BarrierContract,
    settings: &ScanSettings,
    density: &DensityBoundParams,
    grr: Option<GrrParams>,
) -> Result<DecayReport> {
    model.validate()?;
    contract.validate()?;
    settings.validate()?;
    density.validate()?;

    let x0 = contract.log_spot();
    let b = contract.log_barrier();
    let vol_bounds = model.vol_bounds();
    let rho = model.rho();
    let mut rows = Vec::with_capacity(settings.maturities.len());
    for (k, &t) in settings.maturities.iter().enumerate() {
        let grid = build_grid(t, settings.n_steps)?;
        let row_seed = derive_seed(settings.seed, k as u64);
        let batch = simulate_batch(model, &grid, settings.n_paths, x0, row_seed)?;
        let row_contract = BarrierContract { maturity: t, ..*contract };
        let weights = hit_weights(&batch, b);
        let (hit, hit_se) = stats::mean_and_se(&weights);
        let up_in = price_up_and_in(&batch, &row_contract)?;
        let european = price_european(&batch, contract.strike)?;
        let ps = path_stats(&batch);
        let grid_hits = ps.max.iter().filter(|&&m| m >= b).count() as u64;

        // models without a uniform vol bracket get the vacuous bound 1
        let conc = match &vol_bounds {
            Some(vb) => crate::bounds::concentration_bound(b, ps.mean_max, t, vb, rho),
            None => 1.0,
        };
        let cdf = crate::bounds::cdf_bound(b, x0, t, density);
        rows.push(DecayRow {
            maturity: t,
            hit_prob: hit.clamp(0.0, 1.0),
            hit_prob_se: hit_se,
            grid_hits,
            up_in: up_in.value,
            up_in_se: up_in.std_error,
            european: european.value,
            european_se: european.std_error,
            mean_max: ps.mean_max,
            concentration_bound: conc,
            cdf_bound: cdf,
            combined_bound: conc.min(cdf),
        });
    }

    Ok(DecayReport {
        spot: contract.spot,
        strike: contract.strike,
        barrier: contract.barrier,
        x0,
        log_barrier: b,
        n_paths: settings.n_paths,
        n_steps: settings.n_steps,
        seed: settings.seed,
        constants: BoundConstants {
            c1: density.c1,
            c2: density.c2,
            c3: density.c3,
            grr,
            vol_lower: vol_bounds.map(|v| v.lower),
            vol_upper: vol_bounds.map(|v| v.upper),
            rho,
        },
        rows,
    })
}

/// A local slope of `ln P` against `ln T` between two adjacent usable rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSlope {
    pub t_upper: f64,
    pub t_lower: f64,
    pub slope: f64,
    pub std_error: f64,
}

/// Local log-log slopes of the hit probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyRateFit {
    pub slopes: Vec<LocalSlope>,
    /// Strict increase of the local slopes as maturity decreases: the
    /// signature of faster-than-polynomial decay.
    pub super_polynomial: bool,
    pub usable_rows: usize,
    pub excluded_rows: usize,
}

impl PolyRateFit {
    /// Monotone increase tolerant of sampling noise: a slope may dip below
    /// its predecessor by at most `mult` combined standard errors.
    pub fn increasing_beyond_noise(&self, mult: f64) -> bool {
        self.slopes.windows(2).all(|w| {
            w[1].slope >= w[0].slope - mult * (w[0].std_error + w[1].std_error)
        })
    }
}

fn usable_rows(report: &DecayReport) -> Vec<&DecayRow> {
    report
        .rows
        .iter()
        .filter(|r| r.hit_prob > 0.0 && r.hit_prob >= 3.0 * r.hit_prob_se)
        .collect()
}

/// Fits local polynomial decay rates to adjacent usable rows. Rows whose
/// estimate is zero or within 3 standard errors of zero are excluded.
pub fn fit_polynomial_rate(report: &DecayReport) -> Result<PolyRateFit> {
    let rows = usable_rows(report);
    let excluded = report.rows.len() - rows.len();
    if rows.len() < 3 {
        return Err(EngineError::InsufficientData(format!(
            "polynomial rate fit needs at least 3 usable rows, found {} ({} excluded)",
            rows.len(),
            excluded
        )));
    }
    let mut slopes = Vec::with_capacity(rows.len() - 1);
    for w in rows.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let dlog_t = hi.maturity.ln() - lo.maturity.ln();
        let slope = (hi.hit_prob.ln() - lo.hit_prob.ln()) / dlog_t;
        // delta method: se of ln p is se/p
        let se = ((hi.hit_prob_se / hi.hit_prob).powi(2)
            + (lo.hit_prob_se / lo.hit_prob).powi(2))
        .sqrt()
            / dlog_t.abs();
        slopes.push(LocalSlope {
            t_upper: hi.maturity,
            t_lower: lo.maturity,
            slope,
            std_error: se,
        });
    }
    let super_polynomial =
        slopes.len() >= 2 && slopes.windows(2).all(|w| w[1].slope > w[0].slope);
    Ok(PolyRateFit { slopes, super_polynomial, usable_rows: rows.len(), excluded_rows: excluded })
}

/// Least-squares fit of `ln P` against `1/T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Implied squared rate constant `-(b - x0)^2 / slope`; meaningful when
    /// the slope is negative.
    pub rate_constant_sq: f64,
}

/// Fits the Gaussian decay signature `P ~ exp(-C / T)` on usable rows.
pub fn fit_gaussian_rate(report: &DecayReport, x0: f64, log_barrier: f64) -> Result<GaussianRateFit> {
    let rows = usable_rows(report);
    if rows.len() < 3 {
        return Err(EngineError::InsufficientData(format!(
            "Gaussian rate fit needs at least 3 usable rows, found {}",
            rows.len()
        )));
    }
    let x: Vec<f64> = rows.iter().map(|r| 1.0 / r.maturity).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.hit_prob.ln()).collect();
    let f = linear_fit(&x, &y)?;
    let gap = log_barrier - x0;
    let rate_constant_sq = if f.slope < 0.0 { -gap * gap / f.slope } else { f64::NAN };
    Ok(GaussianRateFit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        rate_constant_sq,
    })
}

/// Row-by-row check that the combined bound dominates the estimate with a
/// 2-standard-error allowance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub row_pass: Vec<bool>,
    pub all_pass: bool,
}

pub fn verify_dominance(report: &DecayReport) -> DominanceCheck {
    let row_pass: Vec<bool> = report
        .rows
        .iter()
        .map(|r| r.hit_prob <= r.combined_bound + 2.0 * r.hit_prob_se)
        .collect();
    let all_pass = row_pass.iter().all(|&b| b);
    DominanceCheck { row_pass, all_pass }
}

/// Adjacent hit probabilities must not increase as maturity shrinks, beyond
/// `mult` combined standard errors of slack.
pub fn hit_prob_monotone_in_maturity(report: &DecayReport, mult: f64) -> bool {
    report.rows.windows(2).all(|w| {
        w[1].hit_prob <= w[0].hit_prob + mult * (w[0].hit_prob_se + w[1].hit_prob_se)
    })
}
