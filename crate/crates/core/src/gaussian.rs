//! Exact joint sampling of a Brownian motion `W` and its Riemann-Liouville
//! fractional transform `W^H` on a uniform time grid.
//!
//! With kernel weight `sqrt(2H) (t-s)^{H-1/2}`, the stacked vector
//! `(W_{t_1..t_n}, W^H_{t_1..t_n})` is Gaussian. Its covariance has closed
//! forms except for the `W^H`-`W^H` block, which is reduced by a power
//! substitution to a bounded integrand and handled by adaptive quadrature.
//! Sampling then goes through one Cholesky factor per grid, shared by every
//! path of a batch.

use crate::error::{EngineError, Result};
use crate::quad;
use crate::rng::{path_rng, StreamBlock};
use rand_distr::{Distribution, StandardNormal};

/// Uniform grid 0 = t_0 < t_1 < ... < t_n = T.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    maturity: f64,
    n_steps: usize,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.n_steps as f64
    }

    /// All n+1 grid points including t_0 = 0.
    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Builds a uniform grid. Maturities are normalised to at most one year.
pub fn build_grid(maturity: f64, n_steps: usize) -> Result<TimeGrid> {
    if !maturity.is_finite() || maturity <= 0.0 || maturity > 1.0 {
        return Err(EngineError::InvalidArgument(format!(
            "maturity must lie in (0, 1] years (got {maturity})"
        )));
    }
    if n_steps < 2 {
        return Err(EngineError::InvalidArgument(format!(
            "need at least 2 time steps (got {n_steps})"
        )));
    }
    let points = (0..=n_steps)
        .map(|i| maturity * i as f64 / n_steps as f64)
        .collect();
    Ok(TimeGrid { maturity, n_steps, points })
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovMatrix {
    fn zeros(dim: usize) -> Self {
        CovMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }
}

/// Var/cov of the fractional transform: `E[W^H_t W^H_s]` for the
/// Riemann-Liouville kernel, normalised so that `Var(W^H_t) = t^{2H}`.
pub fn volterra_self_cov(t: f64, s: f64, hurst: f64) -> Result<f64> {
    let m = t.min(s);
    let d = (t - s).abs();
    if m <= 0.0 {
        return Ok(0.0);
    }
    if hurst == 0.5 {
        return Ok(m);
    }
    if hurst < 0.5 {
        // 2H int_0^m (d+v)^{H-1/2} v^{H-1/2} dv, with v = y^{1/(2H)}:
        // the Jacobian absorbs the prefactor and the integrand becomes
        // (d + y^p)^{H-1/2} y^q on (0, m^{2H}], bounded by 1. On the diagonal
        // (d = 0) it is identically 1, so the variance t^{2H} is exact.
        let p = 1.0 / (2.0 * hurst);
        let q = p * (hurst + 0.5) - 1.0;
        let upper = m.powf(2.0 * hurst);
        if d == 0.0 {
            return Ok(upper);
        }
        return quad::integrate(
            |y| (d + y.powf(p)).powf(hurst - 0.5) * y.powf(q),
            0.0,
            upper,
            1e-10,
            1e-15 * upper,
        );
    }
    // H > 1/2: the kernel is bounded, integrate directly.
    let v = quad::integrate(
        |u| (d + u).powf(hurst - 0.5) * u.powf(hurst - 0.5),
        0.0,
        m,
        1e-10,
        1e-15 * m,
    )?;
    Ok(2.0 * hurst * v)
}

/// Cross covariance `E[W^H_t W_s]`, in closed form.
pub fn volterra_cross_cov(t: f64, s: f64, hurst: f64) -> f64 {
    if t <= 0.0 || s <= 0.0 {
        return 0.0;
    }
    let a = hurst + 0.5;
    let m = t.min(s);
    (2.0 * hurst).sqrt() / a * (t.powf(a) - (t - m).powf(a))
}

/// Covariance of the stacked vector `(W_{t_1..t_n}, W^H_{t_1..t_n})`.
pub fn volterra_cov(grid: &TimeGrid, hurst: f64) -> Result<CovMatrix> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(EngineError::InvalidArgument(format!(
            "Hurst index must lie in (0, 1) (got {hurst})"
        )));
    }
    let n = grid.n_steps();
    let t = &grid.points()[1..];
    let mut cov = CovMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..=i {
            cov.set_sym(i, j, t[i].min(t[j]));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let v = volterra_cross_cov(t[i], t[j], hurst);
            cov.set_sym(n + i, j, v);
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = volterra_self_cov(t[i], t[j], hurst)?;
            cov.set_sym(n + i, n + j, v);
        }
    }
    Ok(cov)
}

/// Covariance of `(W_{t_1..t_n})` alone, for models without a fractional leg.
/// Its Cholesky factor coincides with the leading block of the stacked one,
/// so the two samplers draw bit-identical Brownian increments.
pub(crate) fn brownian_cov(grid: &TimeGrid) -> CovMatrix {
    let n = grid.n_steps();
    let t = &grid.points()[1..];
    let mut cov = CovMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            cov.set_sym(i, j, t[i].min(t[j]));
        }
    }
    cov
}

/// Lower-triangular Cholesky factor, rows packed contiguously.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let off = i * (i + 1) / 2;
        &self.lower[off..off + i + 1]
    }

    /// y = L z for the first `z.len() >= dim` coordinates of `z`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        debug_assert!(z.len() >= self.dim && out.len() == self.dim);
        for i in 0..self.dim {
            out[i] = dot(self.row(i), &z[..=i]);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Cholesky factorization tolerant of semidefinite inputs.
///
/// Pivots within `1e-12 * trace/dim` of zero are flattened to zero together
/// with their column (the coordinate is a linear combination of earlier
/// ones, as happens exactly at H = 1/2). A negative pivot beyond that floor
/// triggers diagonal jitter `1e-12 * trace/dim`, escalated tenfold up to
/// three attempts before giving up.
pub fn factorize(cov: &CovMatrix) -> Result<CholeskyFactor> {
    let dim = cov.dim();
    if dim == 0 {
        return Err(EngineError::InvalidArgument("empty covariance".into()));
    }
    let mut trace = 0.0;
    for i in 0..dim {
        trace += cov.at(i, i);
    }
    let scale = (trace / dim as f64).max(f64::MIN_POSITIVE);
    let floor = 1e-12 * scale;
    let mut last = (0usize, 0.0f64);
    for attempt in 0..4 {
        let jitter = if attempt == 0 { 0.0 } else { floor * 10f64.powi(attempt - 1) };
        match try_factor(cov, jitter, floor) {
            Ok(lower) => return Ok(CholeskyFactor { dim, lower }),
            Err(bad) => last = bad,
        }
    }
    Err(EngineError::NumericalFailure(format!(
        "covariance is not positive semidefinite: pivot {} is {:.6e} after jitter escalation \
         (dim {dim}, trace {trace:.6e})",
        last.0, last.1
    )))
}

fn try_factor(cov: &CovMatrix, jitter: f64, floor: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let dim = cov.dim();
    let mut lower = vec![0.0f64; dim * (dim + 1) / 2];
    let off = |i: usize| i * (i + 1) / 2;
    for i in 0..dim {
        for j in 0..=i {
            let mut s = cov.at(i, j);
            if i == j {
                s += jitter;
            }
            let (lo_i, lo_j) = (off(i), off(j));
            s -= dot(&lower[lo_i..lo_i + j], &lower[lo_j..lo_j + j]);
            if i == j {
                if s > floor {
                    lower[lo_i + j] = s.sqrt();
                } else if s >= -floor {
                    // dependent coordinate: zero pivot, zero column
                    lower[lo_i + j] = 0.0;
                } else {
                    return Err((i, s));
                }
            } else {
                let d = lower[lo_j + j];
                lower[lo_i + j] = if d > 0.0 { s / d } else { 0.0 };
            }
        }
    }
    Ok(lower)
}

/// One path's joint draw on a grid.
pub struct JointGaussianSample {
    /// Brownian increments `W_{t_{i+1}} - W_{t_i}`, length n.
    pub dw: Vec<f64>,
    /// Fractional transform levels `W^H_{t_i}`, i = 1..n.
    pub wh: Vec<f64>,
    /// Increments of an independent Brownian motion, length n.
    pub db: Vec<f64>,
}

/// Draws one exact sample of `(dW, W^H, dB)` for path `path_index`.
pub fn sample_joint(
    factor: &CholeskyFactor,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> JointGaussianSample {
    let n = grid.n_steps();
    assert_eq!(factor.dim(), 2 * n, "factor does not match grid");
    let mut rng = path_rng(seed, path_index, StreamBlock::Driving);
    let z: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut y = vec![0.0f64; 2 * n];
    factor.apply(&z, &mut y);
    let mut dw = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &w in &y[..n] {
        dw.push(w - prev);
        prev = w;
    }
    let wh = y[n..].to_vec();
    JointGaussianSample { dw, wh, db: orthogonal_increments(grid, seed, path_index) }
}

/// Brownian-only draw used by constant-volatility batches. Consumes the same
/// leading driving-stream draws as [`sample_joint`], so degenerate models
/// agree bitwise with the joint sampler.
pub(crate) fn sample_brownian(
    factor: &CholeskyFactor,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_steps();
    assert_eq!(factor.dim(), n, "factor does not match grid");
    let mut rng = path_rng(seed, path_index, StreamBlock::Driving);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut y = vec![0.0f64; n];
    factor.apply(&z, &mut y);
    let mut dw = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &w in &y {
        dw.push(w - prev);
        prev = w;
    }
    (dw, orthogonal_increments(grid, seed, path_index))
}

fn orthogonal_increments(grid: &TimeGrid, seed: u64, path_index: u64) -> Vec<f64> {
    let sqrt_dt = grid.dt().sqrt();
    let mut rng = path_rng(seed, path_index, StreamBlock::Orthogonal);
    (0..grid.n_steps())
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            sqrt_dt * g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn grid_shape() {
        let g = build_grid(0.5, 4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.125, 0.25, 0.375, 0.5]);
        assert_eq!(g.dt(), 0.125);
        assert_eq!(g.points()[4], 0.5);
        let g = build_grid(1.0, 3).unwrap();
        assert_eq!(g.points().last(), Some(&1.0));
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(build_grid(0.0, 8).is_err());
        assert!(build_grid(-0.5, 8).is_err());
        assert!(build_grid(1.5, 8).is_err());
        assert!(build_grid(f64::NAN, 8).is_err());
        assert!(build_grid(0.5, 1).is_err());
        assert!(build_grid(0.5, 0).is_err());
    }

    // Midpoint refinement of the transformed integrand; an independent
    // integration rule for cross-checking the adaptive quadrature.
    fn midpoint_self_cov(t: f64, s: f64, hurst: f64, n: usize) -> f64 {
        let m = t.min(s);
        let d = (t - s).abs();
        if hurst < 0.5 {
            let p = 1.0 / (2.0 * hurst);
            let q = p * (hurst + 0.5) - 1.0;
            let upper = m.powf(2.0 * hurst);
            let h = upper / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let y = (k as f64 + 0.5) * h;
                acc += (d + y.powf(p)).powf(hurst - 0.5) * y.powf(q);
            }
            acc * h
        } else {
            let h = m / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let u = (k as f64 + 0.5) * h;
                acc += (d + u).powf(hurst - 0.5) * u.powf(hurst - 0.5);
            }
            2.0 * hurst * acc * h
        }
    }

    #[test]
    fn self_cov_reference_values() {
        // frozen 30-digit quadrature references
        assert_relative_eq!(
            volterra_self_cov(1.0, 0.5, 0.2).unwrap(),
            0.39391808296261603,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            volterra_self_cov(0.75, 0.25, 0.2).unwrap(),
            0.25276928262524067,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            volterra_self_cov(0.3, 0.2, 0.35).unwrap(),
            0.27093983540893069,
            max_relative = 1e-9
        );
    }

    #[test]
    fn self_cov_matches_midpoint_oracle() {
        for &(t, s, h) in &[
            (1.0, 0.5, 0.2),
            (0.75, 0.25, 0.2),
            (0.5, 0.4, 0.1),
            (0.3, 0.2, 0.35),
            (0.9, 0.8, 0.45),
            (1.0, 0.25, 0.7),
        ] {
            let fast = volterra_self_cov(t, s, h).unwrap();
            // the midpoint rule converges like n^-(1+q) near H = 0.5, so it
            // needs millions of panels to certify 1e-8
            let slow = midpoint_self_cov(t, s, h, 4_000_000);
            assert_relative_eq!(fast, slow, max_relative = 1e-8);
        }
    }

    #[test]
    fn self_cov_diagonal_is_exact_power() {
        for &(t, h) in &[(0.5, 0.2), (0.25, 0.35), (1.0, 0.1), (0.8, 0.45)] {
            let v = volterra_self_cov(t, t, h).unwrap();
            assert_relative_eq!(v, t.powf(2.0 * h), max_relative = 1e-13);
        }
        assert_relative_eq!(
            volterra_self_cov(0.5, 0.5, 0.2).unwrap(),
            0.75785828325519904,
            max_relative = 1e-13
        );
    }

    #[test]
    fn self_cov_half_hurst_is_brownian() {
        assert_eq!(volterra_self_cov(0.7, 0.4, 0.5).unwrap(), 0.4);
        assert_eq!(volterra_self_cov(0.2, 0.9, 0.5).unwrap(), 0.2);
    }

    #[test]
    fn cross_cov_reference_and_oracle() {
        assert_relative_eq!(
            volterra_cross_cov(1.0, 0.5, 0.2),
            0.34733354936786068,
            max_relative = 1e-12
        );
        // midpoint oracle on sqrt(2H) int_0^{min} (t-u)^{H-1/2} du, s < t
        for &(t, s, h) in &[(1.0, 0.5, 0.2), (0.75, 0.3, 0.35), (0.6, 0.1, 0.45)] {
            let n = 2_000_000usize;
            let dt = s / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let u = (k as f64 + 0.5) * dt;
                acc += (t - u).powf(h - 0.5);
            }
            let slow = (2.0 * h).sqrt() * acc * dt;
            assert_relative_eq!(volterra_cross_cov(t, s, h), slow, max_relative = 1e-8);
        }
        assert_eq!(volterra_cross_cov(0.0, 0.5, 0.2), 0.0);
    }

    #[test]
    fn cov_rejects_bad_hurst() {
        let g = build_grid(1.0, 4).unwrap();
        assert!(volterra_cov(&g, 0.0).is_err());
        assert!(volterra_cov(&g, 1.0).is_err());
        assert!(volterra_cov(&g, -0.2).is_err());
    }

    fn reconstruct(f: &CholeskyFactor, i: usize, j: usize) -> f64 {
        let (a, b) = (f.row(i), f.row(j));
        let k = a.len().min(b.len());
        let mut s = 0.0;
        for idx in 0..k {
            s += a[idx] * b[idx];
        }
        s
    }

    #[test]
    fn factor_reconstructs_covariance() {
        let g = build_grid(1.0, 16).unwrap();
        let cov = volterra_cov(&g, 0.2).unwrap();
        let f = factorize(&cov).unwrap();
        for i in 0..cov.dim() {
            for j in 0..=i {
                assert_abs_diff_eq!(reconstruct(&f, i, j), cov.at(i, j), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn factor_handles_semidefinite_half_hurst() {
        // At H = 1/2 the fractional block duplicates the Brownian block, so
        // the stacked covariance is rank n. Zero pivots must be accepted.
        let g = build_grid(0.5, 8).unwrap();
        let cov = volterra_cov(&g, 0.5).unwrap();
        let f = factorize(&cov).unwrap();
        for i in 0..cov.dim() {
            for j in 0..=i {
                assert_abs_diff_eq!(reconstruct(&f, i, j), cov.at(i, j), epsilon = 1e-9);
            }
        }
        for p in 0..200 {
            let s = sample_joint(&f, &g, 99, p);
            let mut w = 0.0;
            for i in 0..g.n_steps() {
                w += s.dw[i];
                assert_abs_diff_eq!(s.wh[i], w, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn factor_rejects_indefinite_matrix() {
        let mut cov = CovMatrix::zeros(2);
        cov.set_sym(0, 0, 1.0);
        cov.set_sym(1, 1, 1.0);
        cov.set_sym(0, 1, 2.0);
        let e = factorize(&cov).unwrap_err();
        match e {
            EngineError::NumericalFailure(msg) => {
                assert!(msg.contains("pivot 1"), "{msg}");
                assert!(msg.contains("dim 2"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn brownian_factor_is_leading_block_of_joint_factor() {
        let g = build_grid(0.5, 12).unwrap();
        let joint = factorize(&volterra_cov(&g, 0.5).unwrap()).unwrap();
        let brow = factorize(&brownian_cov(&g)).unwrap();
        for i in 0..g.n_steps() {
            let (a, b) = (joint.row(i), brow.row(i));
            for k in 0..=i {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
        let (dw, db) = sample_brownian(&brow, &g, 7, 3);
        let s = sample_joint(&joint, &g, 7, 3);
        for i in 0..g.n_steps() {
            assert_eq!(dw[i].to_bits(), s.dw[i].to_bits());
            assert_eq!(db[i].to_bits(), s.db[i].to_bits());
        }
    }

    #[test]
    fn first_step_is_perfectly_correlated_at_half_hurst() {
        // With H = 1/2 the first fractional level equals the first Brownian
        // level pathwise, i.e. correlation one.
        let g = build_grid(0.25, 2).unwrap();
        let f = factorize(&volterra_cov(&g, 0.5).unwrap()).unwrap();
        for p in 0..1000 {
            let s = sample_joint(&f, &g, 5, p);
            assert_abs_diff_eq!(s.dw[0], s.wh[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_moments_match_grid_marginals() {
        // T = 0.25, H = 0.2: Var(W^H_T) = T^{2H}; 1e6 draws, 1% tolerance
        // (and mean within 4 standard errors).
        let g = build_grid(0.25, 2).unwrap();
        let hurst = 0.2;
        let f = factorize(&volterra_cov(&g, hurst).unwrap()).unwrap();
        let n_draws = 1_000_000u64;
        let mut vals = Vec::with_capacity(n_draws as usize);
        for p in 0..n_draws {
            let s = sample_joint(&f, &g, 31, p);
            vals.push(*s.wh.last().unwrap());
        }
        let (m, se) = crate::stats::mean_and_se(&vals);
        assert!(m.abs() <= 4.0 * se, "mean {m} exceeds 4 se {se}");
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        let var = crate::stats::mean(&sq);
        assert_relative_eq!(var, 0.25f64.powf(2.0 * hurst), max_relative = 0.01);
    }

    #[test]
    fn empirical_covariance_matches_target() {
        // every stacked entry within 5 standard errors on 1e5 draws
        let g = build_grid(0.75, 3).unwrap();
        let hurst = 0.3;
        let cov = volterra_cov(&g, hurst).unwrap();
        let f = factorize(&cov).unwrap();
        let n = g.n_steps();
        let n_draws = 100_000usize;
        let mut acc = vec![0.0f64; 2 * n * 2 * n];
        for p in 0..n_draws {
            let s = sample_joint(&f, &g, 77, p as u64);
            let mut lv = Vec::with_capacity(2 * n);
            let mut w = 0.0;
            for i in 0..n {
                w += s.dw[i];
                lv.push(w);
            }
            lv.extend_from_slice(&s.wh);
            for i in 0..2 * n {
                for j in 0..2 * n {
                    acc[i * 2 * n + j] += lv[i] * lv[j];
                }
            }
        }
        for i in 0..2 * n {
            for j in 0..2 * n {
                let emp = acc[i * 2 * n + j] / n_draws as f64;
                let target = cov.at(i, j);
                // Var(XY) = Cii Cjj + Cij^2 for joint Gaussians
                let se = ((cov.at(i, i) * cov.at(j, j) + target * target) / n_draws as f64).sqrt();
                assert!(
                    (emp - target).abs() <= 5.0 * se,
                    "entry ({i},{j}): emp {emp} target {target} se {se}"
                );
            }
        }
    }

    #[test]
    fn orthogonal_block_is_independent_and_scaled() {
        let g = build_grid(0.5, 4).unwrap();
        let f = factorize(&brownian_cov(&g)).unwrap();
        let n_draws = 200_000usize;
        let mut cross = 0.0;
        let mut var_db = 0.0;
        for p in 0..n_draws {
            let (dw, db) = sample_brownian(&f, &g, 13, p as u64);
            cross += dw[0] * db[0];
            var_db += db[2] * db[2];
        }
        let dt = g.dt();
        let se = dt / (n_draws as f64).sqrt();
        assert!((cross / n_draws as f64).abs() < 5.0 * se);
        assert_relative_eq!(var_db / n_draws as f64, dt, max_relative = 0.02);
    }
}
