//! The three subcommands. Each writes its tables and a manifest into the
//! output directory and prints a short summary; `validate` additionally
//! reports pass/fail per check.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use upin_core::bounds::{
    calibrate_cdf_amplitude, calibrate_grr_constant, cdf_bound, cdf_bound_quadrature,
    grr_functional, grr_radius_threshold,
};
use upin_core::decay::{decay_scan, fit_gaussian_rate, fit_polynomial_rate, verify_dominance};
use upin_core::pricing::{bs, hit_probability, price_european, price_up_and_in};
use upin_core::rng::derive_seed;
use upin_core::simulate::{abs_max_deviation, simulate};
use upin_core::{
    BarrierContract, BoundConstants, DecayReport, DecayRow, DensityBoundParams, GrrParams,
    McEstimate, Model, PathBatch,
};

use crate::config::{RunConfig, SyntheticSection};
use crate::error::{CliError, CliResult};
use crate::manifest::{run_digest, RunManifest};
use crate::{report, svg};

// Seed lanes for auxiliary batches; scans derive per-row seeds with small
// tags, so these stay out of that range.
const CALIBRATION_TAG: u64 = 1001;
const GRR_TRAIN_TAG: u64 = 1002;
const GRR_FRESH_TAG: u64 = 1003;

fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Density-majorant constants: pinned values win, anything else is
/// calibrated against a training scan on a disjoint seed lane.
pub fn density_params(
    config: &RunConfig,
    model: &Model,
    contract: &BarrierContract,
) -> CliResult<DensityBoundParams> {
    let beta = model.vol_bounds().map_or(model.sigma0(), |v| v.upper);
    let rho = model.rho();
    let c2 = config.bounds.c2.unwrap_or(beta * beta * (1.0 - rho * rho));
    let c3 = config.bounds.c3.unwrap_or(c2);
    let c1 = match config.bounds.c1 {
        Some(c1) => c1,
        None => {
            let mut settings = config.scan_settings();
            settings.n_paths = config.bounds.calibration_paths;
            settings.seed = derive_seed(config.run.seed, CALIBRATION_TAG);
            let unit = DensityBoundParams::with_tail_scale(1.0, c2, c3)?;
            let training = decay_scan(model, contract, &settings, &unit, None)?;
            let rows: Vec<(f64, f64)> =
                training.rows.iter().map(|r| (r.maturity, r.hit_prob)).collect();
            calibrate_cdf_amplitude(
                &rows,
                contract.log_barrier() - contract.log_spot(),
                c2,
                config.bounds.headroom,
            )?
        }
    };
    Ok(DensityBoundParams::with_tail_scale(c1, c2, c3)?)
}

fn pinned_grr(config: &RunConfig) -> CliResult<Option<GrrParams>> {
    match config.bounds.grr_c {
        None => Ok(None),
        Some(c) => Ok(Some(GrrParams::new(config.bounds.grr_p0, config.bounds.grr_gamma0, c)
            .map_err(|e| CliError::Invalid(format!("bounds: {}", e.message())))?)),
    }
}

pub fn price(config: &RunConfig, out_dir: &Path) -> CliResult<RunManifest> {
    let start = Instant::now();
    let model = config.model.to_model()?;
    let contract = config.contract.to_contract()?;
    let batch = simulate(
        &model,
        contract.maturity,
        config.run.steps,
        config.run.paths,
        contract.log_spot(),
        config.run.seed,
    )?;
    let european = price_european(&batch, contract.strike)?;
    let up_in = price_up_and_in(&batch, &contract)?;
    let hit = hit_probability(&batch, contract.log_barrier());

    let digest = run_digest("price", config);
    let rows = [("european", european), ("up_and_in", up_in), ("hit_prob", hit)];
    let csv = report::price_csv(&rows, &digest);
    let mut manifest = RunManifest::new("price", config, None);
    manifest.record_table("report.csv", &csv);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();

    write_file(out_dir, "report.csv", &csv)?;
    write_file(out_dir, "manifest.json", &manifest.to_json())?;

    for (name, est) in &rows {
        println!("{name:<10} {:.6} +- {:.6}", est.value, est.std_error);
    }
    println!("wrote report.csv, manifest.json to {}", out_dir.display());
    Ok(manifest)
}

fn synthetic_report(config: &RunConfig, synth: &SyntheticSection) -> CliResult<DecayReport> {
    let model = config.model.to_model()?;
    let contract = config.contract.to_contract()?;
    let x0 = contract.log_spot();
    let beta = model.vol_bounds().map_or(model.sigma0(), |v| v.upper);
    let rho = model.rho();
    let c2 = config.bounds.c2.unwrap_or(beta * beta * (1.0 - rho * rho));
    let rows = synth
        .maturities
        .iter()
        .enumerate()
        .map(|(i, &t)| DecayRow {
            maturity: t,
            hit_prob: synth.hit_probs[i],
            hit_prob_se: 0.0,
            grid_hits: 0,
            up_in: synth.up_in.as_ref().map_or(0.0, |v| v[i]),
            up_in_se: 0.0,
            european: synth.european.as_ref().map_or(0.0, |v| v[i]),
            european_se: 0.0,
            mean_max: x0,
            concentration_bound: 1.0,
            cdf_bound: 1.0,
            combined_bound: 1.0,
        })
        .collect();
    Ok(DecayReport {
        spot: contract.spot,
        strike: contract.strike,
        barrier: contract.barrier,
        x0,
        log_barrier: contract.log_barrier(),
        n_paths: 0,
        n_steps: config.run.steps,
        seed: config.run.seed,
        constants: BoundConstants {
            c1: config.bounds.c1.unwrap_or(1.0),
            c2,
            c3: config.bounds.c3.unwrap_or(c2),
            grr: None,
            vol_lower: model.vol_bounds().map(|v| v.lower),
            vol_upper: model.vol_bounds().map(|v| v.upper),
            rho,
        },
        rows,
    })
}

pub fn scan(config: &RunConfig, out_dir: &Path) -> CliResult<RunManifest> {
    let start = Instant::now();
    let scan_report = match &config.synthetic {
        Some(synth) => synthetic_report(config, synth)?,
        None => {
            let model = config.model.to_model()?;
            let contract = config.contract.to_contract()?;
            let density = density_params(config, &model, &contract)?;
            let grr = pinned_grr(config)?;
            decay_scan(&model, &contract, &config.scan_settings(), &density, grr)?
        }
    };
    let gauss = fit_gaussian_rate(&scan_report, scan_report.x0, scan_report.log_barrier).ok();
    let poly = fit_polynomial_rate(&scan_report).ok();

    let digest = run_digest("scan", config);
    let csv = report::scan_csv(&scan_report, &digest);
    let prices = svg::prices_chart(&scan_report, &digest);
    let rate = svg::rate_chart(&scan_report, gauss.as_ref(), &digest);

    let mut manifest = RunManifest::new("scan", config, Some(scan_report.constants.clone()));
    manifest.record_table("report.csv", &csv);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();

    write_file(out_dir, "report.csv", &csv)?;
    write_file(out_dir, "prices.svg", &prices)?;
    write_file(out_dir, "rate.svg", &rate)?;
    write_file(out_dir, "manifest.json", &manifest.to_json())?;

    for r in &scan_report.rows {
        println!(
            "T={}: hit {:.6} +- {:.6}, up-in {:.6}, european {:.6}, bound {:.6}",
            r.maturity, r.hit_prob, r.hit_prob_se, r.up_in, r.european, r.combined_bound
        );
    }
    let c = &scan_report.constants;
    println!("constants: c1 {:.6e}, c2 {:.6e}, c3 {:.6e}", c.c1, c.c2, c.c3);
    if let Some(p) = &poly {
        let slopes: Vec<String> = p.slopes.iter().map(|s| format!("{:.3}", s.slope)).collect();
        let tag = if p.super_polynomial { " (increasing: super-polynomial)" } else { "" };
        println!("local log-log slopes: {}{tag}", slopes.join(" -> "));
    }
    if let Some(g) = &gauss {
        println!("{}", svg::rate_fit_label(g));
    }
    println!(
        "wrote report.csv, prices.svg, rate.svg, manifest.json to {}",
        out_dir.display()
    );
    Ok(manifest)
}

fn oracle_check(
    name: &'static str,
    est: &McEstimate,
    oracle: f64,
    k: f64,
) -> (&'static str, bool, String) {
    let tol = k * est.std_error;
    let diff = (est.value - oracle).abs();
    (
        name,
        diff <= tol,
        format!(
            "estimate {:.6} +- {:.6} vs oracle {:.6}, |diff| {diff:.3e}, allowance {tol:.3e}",
            est.value, est.std_error, oracle
        ),
    )
}

fn grr_profile(batch: &PathBatch, p0: u32, gamma0: f64) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let dt = batch.grid().dt();
    let ys = (0..batch.n_paths())
        .into_par_iter()
        .map(|p| grr_functional(batch.x_row(p), dt, p0, gamma0))
        .collect::<upin_core::Result<Vec<f64>>>()?;
    Ok((ys, abs_max_deviation(batch)))
}

pub fn validate(config: &RunConfig, out_dir: &Path) -> CliResult<bool> {
    let start = Instant::now();
    let model = config.model.to_model()?;
    let contract = config.contract.to_contract()?;
    let run = &config.run;
    let x0 = contract.log_spot();
    let b = contract.log_barrier();
    let mut checks: Vec<(&'static str, bool, String)> = Vec::new();

    // closed-form oracles hold for constant vol, so that leg always runs at
    // the configured sigma0 and rho
    let sigma = config.model.sigma0;
    let constant = Model::Constant { sigma0: sigma, rho: config.model.rho };
    let batch = simulate(&constant, contract.maturity, run.steps, run.paths, x0, run.seed)?;
    let european = price_european(&batch, contract.strike)?;
    let up_in = price_up_and_in(&batch, &contract)?;
    let hit = hit_probability(&batch, b);
    checks.push(oracle_check(
        "constant_vol_european_oracle",
        &european,
        bs::call(contract.spot, contract.strike, sigma, contract.maturity),
        3.0,
    ));
    checks.push(oracle_check(
        "constant_vol_up_in_oracle",
        &up_in,
        bs::up_and_in_call(contract.spot, contract.strike, contract.barrier, sigma, contract.maturity),
        3.0,
    ));
    checks.push(oracle_check(
        "constant_vol_hit_oracle",
        &hit,
        bs::sup_tail_probability(b - x0, sigma, contract.maturity),
        3.0,
    ));
    checks.push((
        "pathwise_order",
        up_in.value <= european.value,
        format!("up-and-in {:.6} <= european {:.6}", up_in.value, european.value),
    ));

    let density = density_params(config, &model, &contract)?;

    // closed form against quadrature across the scan maturities
    let mut max_gap = 0.0f64;
    for &t in &config.scan.maturities {
        let closed = cdf_bound(b, x0, t, &density);
        let quad = cdf_bound_quadrature(b, x0, t, &density)?;
        let gap = (closed - quad).abs() / closed.abs().max(quad.abs()).max(1e-300);
        max_gap = max_gap.max(gap);
    }
    checks.push((
        "cdf_quadrature_agreement",
        max_gap <= 1e-10,
        format!(
            "max relative gap {max_gap:.3e} across {} maturities",
            config.scan.maturities.len()
        ),
    ));

    // roughness certificate: calibrate on one lane, judge a fresh one
    let p0 = config.bounds.grr_p0;
    let gamma0 = config.bounds.grr_gamma0;
    let gap = b - x0;
    let c_grr = match config.bounds.grr_c {
        Some(c) => c,
        None => {
            let train = simulate(
                &model,
                contract.maturity,
                run.steps,
                config.bounds.grr_paths,
                x0,
                derive_seed(run.seed, GRR_TRAIN_TAG),
            )?;
            let (ys, devs) = grr_profile(&train, p0, gamma0)?;
            calibrate_grr_constant(&ys, &devs, gap, contract.maturity, p0, gamma0, config.bounds.grr_headroom)?
        }
    };
    let grr = GrrParams::new(p0, gamma0, c_grr)?;
    let fresh = simulate(
        &model,
        contract.maturity,
        run.steps,
        config.bounds.grr_paths,
        x0,
        derive_seed(run.seed, GRR_FRESH_TAG),
    )?;
    let (ys, devs) = grr_profile(&fresh, p0, gamma0)?;
    let threshold = grr_radius_threshold(b, x0, contract.maturity, &grr)?;
    let violations =
        ys.iter().zip(&devs).filter(|&(&y, &d)| y <= threshold && d > gap).count();
    checks.push((
        "grr_certificate",
        violations == 0,
        format!(
            "{violations} of {} fresh paths sit under the radius threshold {threshold:.3e} \
             while straying past {gap:.4} (c_grr {c_grr:.6e})",
            ys.len()
        ),
    ));

    // bound dominance on the configured model across the scan grid
    let scan_report =
        decay_scan(&model, &contract, &config.scan_settings(), &density, Some(grr))?;
    let dom = verify_dominance(&scan_report);
    let detail = if dom.all_pass {
        format!("all {} rows dominated (2 se allowance)", scan_report.rows.len())
    } else {
        let (i, row) = scan_report
            .rows
            .iter()
            .enumerate()
            .find(|(i, _)| !dom.row_pass[*i])
            .map(|(i, r)| (i, r))
            .unwrap();
        format!(
            "row {i} (T={}): hit_prob {:.6} exceeds combined_bound {:.6} + 2 se {:.6}",
            row.maturity, row.hit_prob, row.combined_bound, row.hit_prob_se
        )
    };
    checks.push(("bound_dominance", dom.all_pass, detail));

    let all_pass = checks.iter().all(|c| c.1);
    for (name, pass, detail) in &checks {
        println!("check {name}: {} ({detail})", if *pass { "pass" } else { "fail" });
    }
    let passed = checks.iter().filter(|c| c.1).count();
    println!("{passed} of {} checks passed", checks.len());

    let digest = run_digest("validate", config);
    let csv = report::checks_csv(&checks, &digest);
    let mut constants = scan_report.constants.clone();
    constants.grr = Some(grr);
    let mut manifest = RunManifest::new("validate", config, Some(constants));
    manifest.record_table("report.csv", &csv);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_file(out_dir, "report.csv", &csv)?;
    write_file(out_dir, "manifest.json", &manifest.to_json())?;
    Ok(all_pass)
}
