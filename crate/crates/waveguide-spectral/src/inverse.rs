//! Quantities computable from two sets of boundary spectral data alone:
//! distances between them, the difference series for `S_1 - S_2` and the
//! Fourier coefficients of `V_1 - V_2` it recovers.
//!
//! Mode indices are zero-based throughout.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::BoundarySpectralData;
use crate::geometry::{GammaGrid, QuasiMomentum};
use crate::steklov::{spectrum_guard, TAIL_TERMS};
use crate::zeta::{exponential_on_gamma, least_squares_slope, make_zeta, numerical_limit, ZetaPair};

type C64 = Complex64;

/// Below this `delta0(N)` only the uniqueness check `|V hat| < 1e-10` applies.
pub const UNIQUENESS_DELTA: f64 = 1e-14;
pub const UNIQUENESS_VHAT: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct BsdPair {
    pub bsd1: BoundarySpectralData,
    pub bsd2: BoundarySpectralData,
    /// Modes whose eigenpairs differ.
    pub k0: Vec<usize>,
    /// Modes whose eigenpairs coincide within tolerance.
    pub k1: Vec<usize>,
    pub tol_lambda: f64,
    pub tol_psi: f64,
}

fn check_compatible(b1: &BoundarySpectralData, b2: &BoundarySpectralData) -> Result<()> {
    b1.validate()?;
    b2.validate()?;
    if b1.theta != b2.theta {
        return Err(Error::Invalid(format!(
            "boundary data at different quasi-momenta {} and {}",
            b1.theta.theta(),
            b2.theta.theta()
        )));
    }
    if b1.grid != b2.grid {
        return Err(Error::GridMismatch("boundary data on different grids".into()));
    }
    if b1.k_keep() != b2.k_keep() {
        return Err(Error::Dimension(format!(
            "different numbers of kept modes: {} and {}",
            b1.k_keep(),
            b2.k_keep()
        )));
    }
    Ok(())
}

fn diff_norm(grid: &GammaGrid, p: &[C64], q: &[C64]) -> Result<f64> {
    let d: Vec<C64> = p.iter().zip(q).map(|(x, y)| x - y).collect();
    grid.norm(&d)
}

pub fn partition(
    bsd1: BoundarySpectralData,
    bsd2: BoundarySpectralData,
    tol_lambda: f64,
    tol_psi: f64,
) -> Result<BsdPair> {
    if !(tol_lambda > 0.0 && tol_psi > 0.0) {
        return Err(Error::Invalid("partition tolerances must be positive".into()));
    }
    check_compatible(&bsd1, &bsd2)?;
    let grid = bsd1.gamma_grid()?;
    let (mut k0, mut k1) = (Vec::new(), Vec::new());
    for k in 0..bsd1.k_keep() {
        let same = (bsd1.lambdas[k] - bsd2.lambdas[k]).abs() <= tol_lambda
            && diff_norm(&grid, &bsd1.psi[k], &bsd2.psi[k])? <= tol_psi;
        if same {
            k1.push(k);
        } else {
            k0.push(k);
        }
    }
    Ok(BsdPair { bsd1, bsd2, k0, k1, tol_lambda, tol_psi })
}

impl BsdPair {
    pub fn k_keep(&self) -> usize {
        self.bsd1.k_keep()
    }

    pub fn theta(&self) -> QuasiMomentum {
        self.bsd1.theta
    }

    pub fn gamma_grid(&self) -> Result<GammaGrid> {
        self.bsd1.gamma_grid()
    }

    /// Largest eigenvalue kept in both data sets.
    pub fn lambda_top(&self) -> f64 {
        let a = self.bsd1.lambdas.last().copied().unwrap_or(f64::NAN);
        let b = self.bsd2.lambdas.last().copied().unwrap_or(f64::NAN);
        a.min(b)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BsdMetrics {
    pub k_keep: usize,
    /// `|lambda_{1,k} - lambda_{2,k}|`
    pub lambda_gaps: Vec<f64>,
    /// `min_alpha ||psi_{1,k} - exp(i alpha) psi_{2,k}||`
    pub psi_gaps: Vec<f64>,
    /// `suffix_sup[k] = sup_{k' >= k} lambda_gaps[k']`
    pub suffix_sup: Vec<f64>,
    pub delta1: f64,
}

impl BsdMetrics {
    /// `delta0(N) = sup_{N <= k <= K_keep} |lambda_{1,k} - lambda_{2,k}|`, one-based `N`.
    pub fn delta0(&self, n: usize) -> f64 {
        if n == 0 || n > self.k_keep {
            0.0
        } else {
            self.suffix_sup[n - 1]
        }
    }
}

/// Minimum of `||p - u q||` over unit scalars `u`.
pub fn aligned_distance(grid: &GammaGrid, p: &[C64], q: &[C64]) -> Result<f64> {
    let c = grid.inner(p, q)?;
    let u = if c.norm() > 0.0 { c / c.norm() } else { C64::new(1.0, 0.0) };
    let uq: Vec<C64> = q.iter().map(|x| u * x).collect();
    diff_norm(grid, p, &uq)
}

pub fn bsd_metrics(pair: &BsdPair) -> Result<BsdMetrics> {
    check_compatible(&pair.bsd1, &pair.bsd2)?;
    let grid = pair.gamma_grid()?;
    let k_keep = pair.k_keep();
    let lambda_gaps: Vec<f64> = (0..k_keep)
        .map(|k| (pair.bsd1.lambdas[k] - pair.bsd2.lambdas[k]).abs())
        .collect();
    let psi_gaps: Vec<f64> = (0..k_keep)
        .map(|k| aligned_distance(&grid, &pair.bsd1.psi[k], &pair.bsd2.psi[k]))
        .collect::<Result<_>>()?;
    let mut suffix_sup = lambda_gaps.clone();
    for k in (0..k_keep.saturating_sub(1)).rev() {
        suffix_sup[k] = suffix_sup[k].max(suffix_sup[k + 1]);
    }
    let delta1 = psi_gaps.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(BsdMetrics { k_keep, lambda_gaps, psi_gaps, suffix_sup, delta1 })
}

/// `f_{lambda,mu}(tau) = (mu - lambda) / ((lambda - tau)(mu - tau))`
pub fn f_lambda_mu(tau: f64, lambda: C64, mu: C64) -> Result<C64> {
    let d = (lambda - tau) * (mu - tau);
    if d == C64::new(0.0, 0.0) {
        return Err(Error::Guard(format!("f_lambda_mu has a pole at tau = {tau}")));
    }
    Ok((mu - lambda) / d)
}

/// Boundary exponentials of a probe pair on a fixed grid.
pub struct ProbeTraces<'g> {
    grid: &'g GammaGrid,
    e0: Vec<C64>,
    e1: Vec<C64>,
}

impl<'g> ProbeTraces<'g> {
    pub fn new(zp: &ZetaPair, grid: &'g GammaGrid) -> Self {
        ProbeTraces { grid, e0: exponential_on_gamma(&zp.zeta0, grid), e1: exponential_on_gamma(&zp.zeta1, grid) }
    }

    /// `<psi, e_zeta0> = int_Gamma exp(zeta0.x) conj(psi)`
    pub fn pair0(&self, psi: &[C64]) -> Result<C64> {
        self.grid.inner(&self.e0, psi)
    }

    /// `<e*_zeta1, psi> = int_Gamma psi exp(zeta1.x)`
    pub fn pair1(&self, psi: &[C64]) -> Result<C64> {
        self.grid.bilinear(psi, &self.e1)
    }

    pub fn g(&self, psi: &[C64]) -> Result<C64> {
        Ok(self.pair0(psi)? * self.pair1(psi)?)
    }

    /// `max(||exp(zeta0.x)||, ||exp(zeta1.x)||)` on `Gamma`.
    pub fn max_norm(&self) -> Result<f64> {
        Ok(self.grid.norm(&self.e0)?.max(self.grid.norm(&self.e1)?))
    }
}

/// `g(psi) = <psi, e_zeta0> <e*_zeta1, psi>`.
pub fn g_quadratic(psi: &[C64], zp: &ZetaPair, grid: &GammaGrid) -> Result<C64> {
    ProbeTraces::new(zp, grid).g(psi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub k: usize,
    pub g1: C64,
    pub g2: C64,
    pub a_star: C64,
    pub b_star: C64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesValue {
    pub lambda: C64,
    pub s_diff: C64,
    pub a_star_sum: f64,
    pub b_star_sum: f64,
    /// `sum |A*_k + B*_k|` over the last ten differing modes.
    pub tail: f64,
    pub terms: Vec<SeriesTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesGuards {
    /// `|lambda|` may not exceed `margin * lambda_{K_keep}`.
    pub margin: f64,
    pub min_im: f64,
}

impl Default for SeriesGuards {
    fn default() -> Self {
        SeriesGuards { margin: 0.25, min_im: 1.0 }
    }
}

fn check_lambda(pair: &BsdPair, lambda: C64, guards: &SeriesGuards) -> Result<()> {
    if lambda.im < guards.min_im {
        return Err(Error::Guard(format!("Im lambda = {} is below {}", lambda.im, guards.min_im)));
    }
    let top = pair.lambda_top();
    if lambda.norm() > guards.margin * top {
        return Err(Error::Guard(format!(
            "|lambda| = {:.4} exceeds the truncation margin {} * lambda_K = {:.4}",
            lambda.norm(),
            guards.margin,
            guards.margin * top
        )));
    }
    spectrum_guard(&pair.bsd1.lambdas, lambda)?;
    spectrum_guard(&pair.bsd2.lambdas, lambda)
}

fn g_pairs(pair: &BsdPair, probe: &ProbeTraces, exec: Execution) -> Result<Vec<(C64, C64)>> {
    exec.map(&pair.k0, |&k| Ok((probe.g(&pair.bsd1.psi[k])?, probe.g(&pair.bsd2.psi[k])?)))
        .into_iter()
        .collect()
}

/// `S_1 - S_2 = sum_{k in K0} [g_{1,k}/(lambda - lambda_{1,k}) - g_{2,k}/(lambda - lambda_{2,k})]`
/// split as `A*_k + B*_k` with
/// `A*_k = (1/(lambda - lambda_{1,k}) - 1/(lambda - lambda_{2,k})) g_{1,k}` and
/// `B*_k = (g_{1,k} - g_{2,k}) / (lambda - lambda_{2,k})`.
pub fn s_difference_series(
    pair: &BsdPair,
    zp: &ZetaPair,
    grid: &GammaGrid,
    guards: &SeriesGuards,
    exec: Execution,
) -> Result<SeriesValue> {
    if zp.theta != pair.theta() {
        return Err(Error::Invalid("probe and boundary data use different quasi-momenta".into()));
    }
    pair.bsd1.check_grid(grid)?;
    let lambda = zp.lambda;
    check_lambda(pair, lambda, guards)?;
    let probe = ProbeTraces::new(zp, grid);
    let gs = g_pairs(pair, &probe, exec)?;
    let mut terms = Vec::with_capacity(gs.len());
    for (&k, &(g1, g2)) in pair.k0.iter().zip(&gs) {
        let r1 = 1.0 / (lambda - pair.bsd1.lambdas[k]);
        let r2 = 1.0 / (lambda - pair.bsd2.lambdas[k]);
        terms.push(SeriesTerm { k, g1, g2, a_star: (r1 - r2) * g1, b_star: (g1 - g2) * r2 });
    }
    let s_diff = terms.iter().map(|t| t.a_star + t.b_star).sum();
    let a_star_sum = terms.iter().map(|t| t.a_star.norm()).sum();
    let b_star_sum = terms.iter().map(|t| t.b_star.norm()).sum();
    let tail = terms[terms.len().saturating_sub(TAIL_TERMS)..]
        .iter()
        .map(|t| (t.a_star + t.b_star).norm())
        .sum();
    Ok(SeriesValue { lambda, s_diff, a_star_sum, b_star_sum, tail, terms })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuLimitRow {
    pub mu: f64,
    pub value: C64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuLimitTable {
    pub s_diff: C64,
    pub rows: Vec<MuLimitRow>,
}

impl MuLimitTable {
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].deviation <= w[0].deviation)
    }
}

/// Finite-`mu` pairing `sum_{k in K0} f_{lambda,mu}(lambda_{1,k}) g_{1,k} - f_{lambda,mu}(lambda_{2,k}) g_{2,k}`
/// against its `mu -> -infinity` limit. `bound` is the common sup bound `M` of both potentials.
pub fn mu_limit_check(
    pair: &BsdPair,
    zp: &ZetaPair,
    grid: &GammaGrid,
    guards: &SeriesGuards,
    bound: f64,
    mus: &[f64],
) -> Result<MuLimitTable> {
    if mus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("mu values must be strictly descending".into()));
    }
    if let Some(m) = mus.iter().find(|&&m| m > -(bound + 1.0)) {
        return Err(Error::Guard(format!("mu = {m} must lie below -(M+1) = {}", -(bound + 1.0))));
    }
    let series = s_difference_series(pair, zp, grid, guards, Execution::Sequential)?;
    let lambda = zp.lambda;
    let rows = mus
        .iter()
        .map(|&mu| {
            let m = C64::new(mu, 0.0);
            let mut value = C64::new(0.0, 0.0);
            for t in &series.terms {
                value += f_lambda_mu(pair.bsd1.lambdas[t.k], lambda, m)? * t.g1
                    - f_lambda_mu(pair.bsd2.lambdas[t.k], lambda, m)? * t.g2;
            }
            Ok(MuLimitRow { mu, value, deviation: (value - series.s_diff).norm() })
        })
        .collect::<Result<_>>()?;
    Ok(MuLimitTable { s_diff: series.s_diff, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `s` values for `j != 0`, `t` values for `j = 0`.
    pub params: Vec<f64>,
    #[serde(default)]
    pub guards: SeriesGuards,
    /// Stand-in for `|xi'|` when a zero transverse frequency is requested.
    #[serde(default = "default_eps_freq")]
    pub eps_freq: f64,
}

fn default_eps_freq() -> f64 {
    1e-2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub lambda: C64,
    pub s_diff: C64,
    pub a_star_sum: f64,
    pub b_star_sum: f64,
    pub tail: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub xi_prime: [f64; 2],
    pub j: i32,
    pub theta: f64,
    /// Set when `xi' = 0` was replaced by `(eps_freq, 0)`.
    pub xi_regularized: bool,
    /// `-i lim (zeta0 + zeta1)`: the frequency actually recovered.
    pub probed_frequency: [f64; 3],
    /// Sorted by `|lambda|` ascending.
    pub sweep: Vec<SweepRow>,
    /// `S_1 - S_2` at the largest `|lambda|`, estimating `int_Y (V_1 - V_2) exp((zeta0+zeta1).x)`.
    pub estimate: C64,
    /// `(2 pi)^(-3/2) * estimate`
    pub vhat: C64,
    /// Slope of `log |estimate_{i+1} - estimate_i|` against `log |lambda_i|`.
    pub slope: f64,
    /// Slope of `log |estimate_i - estimate|` against `log |lambda_i|`, final point excluded.
    pub slope_to_final: Option<f64>,
}

/// Flat record for tabular export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CsvRow {
    pub xi1: f64,
    pub xi2: f64,
    pub j: i32,
    pub theta: f64,
    pub lam_re: f64,
    pub lam_im: f64,
    pub abs_lam: f64,
    #[serde(rename = "Sdiff_re")]
    pub sdiff_re: f64,
    #[serde(rename = "Sdiff_im")]
    pub sdiff_im: f64,
    #[serde(rename = "Astar_sum")]
    pub astar_sum: f64,
    #[serde(rename = "Bstar_sum")]
    pub bstar_sum: f64,
    pub tail_diag: f64,
    pub vhat_re: f64,
    pub vhat_im: f64,
}

impl ReconstructionResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let norm = (2.0 * PI).powf(-1.5);
        self.sweep
            .iter()
            .map(|r| CsvRow {
                xi1: self.xi_prime[0],
                xi2: self.xi_prime[1],
                j: self.j,
                theta: self.theta,
                lam_re: r.lambda.re,
                lam_im: r.lambda.im,
                abs_lam: r.lambda.norm(),
                sdiff_re: r.s_diff.re,
                sdiff_im: r.s_diff.im,
                astar_sum: r.a_star_sum,
                bstar_sum: r.b_star_sum,
                tail_diag: r.tail,
                vhat_re: norm * r.s_diff.re,
                vhat_im: norm * r.s_diff.im,
            })
            .collect()
    }
}

fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<&(f64, f64)> = pts.iter().filter(|(_, y)| *y > 0.0).collect();
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    least_squares_slope(&x, &y)
}

pub fn reconstruct_fourier_difference(
    pair: &BsdPair,
    grid: &GammaGrid,
    xi_prime: [f64; 2],
    j: i32,
    sweep: &SweepConfig,
    exec: Execution,
) -> Result<ReconstructionResult> {
    let theta = pair.theta();
    let regularized = xi_prime[0].hypot(xi_prime[1]) == 0.0;
    let xi = if regularized { [sweep.eps_freq, 0.0] } else { xi_prime };
    let pairs: Vec<ZetaPair> = sweep.params.iter().map(|&p| make_zeta(xi, j, theta, p)).collect::<Result<_>>()?;
    let mut sweep_rows = exec
        .map(&pairs, |zp| {
            let s = s_difference_series(pair, zp, grid, &sweep.guards, Execution::Sequential)?;
            Ok(SweepRow {
                param: zp.param,
                lambda: s.lambda,
                s_diff: s.s_diff,
                a_star_sum: s.a_star_sum,
                b_star_sum: s.b_star_sum,
                tail: s.tail,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    sweep_rows.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()));
    let n = sweep_rows.len();
    let lo = sweep_rows.first().map_or(0.0, |r| r.lambda.norm());
    let hi = sweep_rows.last().map_or(0.0, |r| r.lambda.norm());
    if n < 3 || hi < 100.0 * lo {
        return Err(Error::Invalid(format!(
            "sweep too short for a slope fit: {n} points over |lambda| in [{lo:.3}, {hi:.3}], need 3 points over two decades"
        )));
    }
    let estimate = sweep_rows[n - 1].s_diff;
    let succ: Vec<(f64, f64)> = sweep_rows
        .windows(2)
        .map(|w| (w[0].lambda.norm(), (w[1].s_diff - w[0].s_diff).norm()))
        .collect();
    let to_final: Vec<(f64, f64)> = sweep_rows[..n - 1]
        .iter()
        .map(|r| (r.lambda.norm(), (r.s_diff - estimate).norm()))
        .collect();
    // identical data give an all-zero variation; report a flat slope
    let slope = log_slope(&succ).unwrap_or(0.0);
    let limit = numerical_limit(xi, j, theta)?;
    Ok(ReconstructionResult {
        xi_prime: xi,
        j,
        theta: theta.theta(),
        xi_regularized: regularized,
        probed_frequency: [-limit[0].im, -limit[1].im, -limit[2].im],
        sweep: sweep_rows,
        estimate,
        vhat: estimate * (2.0 * PI).powf(-1.5),
        slope,
        slope_to_final: log_slope(&to_final),
    })
}

/// Reconstruction over a frequency grid, one result per `(xi', j)`.
pub fn reconstruct_grid(
    pair: &BsdPair,
    grid: &GammaGrid,
    freqs: &[([f64; 2], i32)],
    sweep: &SweepConfig,
    exec: Execution,
) -> Result<Vec<ReconstructionResult>> {
    exec.map(freqs, |&(xi, j)| reconstruct_fourier_difference(pair, grid, xi, j, sweep, Execution::Sequential))
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityRow {
    pub n: usize,
    pub delta0: f64,
    /// `None` in the uniqueness regime.
    pub c_observed: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub max_vhat: f64,
    pub c_max: f64,
    pub rows: Vec<StabilityRow>,
    pub pass: bool,
}

pub fn stability_check(results: &[ReconstructionResult], metrics: &BsdMetrics, ns: &[usize], c_max: f64) -> StabilityReport {
    let max_vhat = results.iter().map(|r| r.vhat.norm()).fold(0.0, f64::max);
    let rows: Vec<StabilityRow> = ns
        .iter()
        .map(|&n| {
            let d = metrics.delta0(n);
            if d < UNIQUENESS_DELTA {
                StabilityRow { n, delta0: d, c_observed: None, pass: max_vhat < UNIQUENESS_VHAT }
            } else {
                let c = max_vhat / d;
                StabilityRow { n, delta0: d, c_observed: Some(c), pass: c.is_finite() && c <= c_max }
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    StabilityReport { max_vhat, c_max, rows, pass }
}

/// `max_k |(lambda - lambda_{2,k}) / (lambda - lambda_{1,k})|` over kept modes.
pub fn ratio_bound(pair: &BsdPair, lambda: C64) -> f64 {
    pair.bsd1
        .lambdas
        .iter()
        .zip(&pair.bsd2.lambdas)
        .map(|(l1, l2)| ((lambda - l2) / (lambda - l1)).norm())
        .fold(0.0, f64::max)
}

/// `sum_{k in K0} |g_{1,k}| / (|lambda - lambda_{1,k}| |lambda - lambda_{2,k}|)`, the constant with
/// `sum |A*_k| <= c delta0(1)`.
pub fn a_star_constant(pair: &BsdPair, series: &SeriesValue) -> f64 {
    series
        .terms
        .iter()
        .map(|t| {
            t.g1.norm() / ((series.lambda - pair.bsd1.lambdas[t.k]).norm() * (series.lambda - pair.bsd2.lambdas[t.k]).norm())
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_direct_arithmetic() {
        let v = f_lambda_mu(0.0, C64::new(0.0, 1.0), C64::new(-2.0, 0.0)).unwrap();
        let want = C64::new(-2.0, -1.0) / C64::new(0.0, -2.0);
        assert!((v - want).norm() < 1e-15);
        assert!(f_lambda_mu(3.0, C64::new(3.0, 0.0), C64::new(-2.0, 0.0)).is_err());
    }

    #[test]
    fn f_tends_to_resolvent() {
        let lam = C64::new(4.0, 2.0);
        let tau = 1.5;
        let lim = 1.0 / (lam - tau);
        let dev: Vec<f64> = (1..=8)
            .map(|i| (f_lambda_mu(tau, lam, C64::new(-(10f64.powi(i)), 0.0)).unwrap() - lim).norm())
            .collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]));
        assert!(dev[7] < 1e-7);
    }
}
