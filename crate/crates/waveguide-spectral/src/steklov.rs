//! Series solutions of the quasi-periodic boundary value problem, the
//! Poincare-Steklov map on exponential data, the `S` functional and the
//! residual of the representation formula linking `S` to `int V exp((zeta0+zeta1).x)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{BoundarySpectralData, EigenSolution, Projector, TraceEvaluator};
use crate::geometry::{cell_exp_integral, GammaGrid, GridPotential, Potential, YGrid};
use crate::zeta::{dot, exponential_normal_derivative, exponential_on_gamma};

type C64 = Complex64;

/// Minimal admissible distance between a spectral parameter and a kept eigenvalue.
pub const SPECTRUM_GUARD: f64 = 1e-6;

/// Number of trailing terms whose magnitude is reported as a truncation diagnostic.
pub const TAIL_TERMS: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryDatum {
    pub values: Vec<C64>,
    pub tag: Option<String>,
}

impl BoundaryDatum {
    pub fn new(values: Vec<C64>) -> Self {
        BoundaryDatum { values, tag: None }
    }

    pub fn zero(grid: &GammaGrid) -> Self {
        BoundaryDatum { values: vec![C64::new(0.0, 0.0); grid.len()], tag: Some("0".into()) }
    }

    pub fn exponential(zeta: &[C64; 3], grid: &GammaGrid) -> Self {
        BoundaryDatum {
            values: exponential_on_gamma(zeta, grid),
            tag: Some(format!("exp(zeta.x), zeta = {zeta:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRoute {
    Resolvent,
    Difference,
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SteklovTrace {
    pub values: Vec<C64>,
    pub lambda: C64,
    pub route: TraceRoute,
    /// Sum of `|term| * ||psi_k||` over the last [`TAIL_TERMS`] kept modes.
    pub tail: f64,
}

/// `alpha = <psi, f> = int_Gamma f conj(psi)`.
pub fn boundary_pairing(f: &BoundaryDatum, psi: &[C64], grid: &GammaGrid) -> Result<C64> {
    grid.inner(&f.values, psi)
}

pub fn spectrum_guard(lambdas: &[f64], lambda: C64) -> Result<()> {
    for (k, l) in lambdas.iter().enumerate() {
        let d = (lambda - l).norm();
        if d <= SPECTRUM_GUARD {
            return Err(Error::NearSpectrum { lambda, k: k + 1, eigenvalue: *l, distance: d });
        }
    }
    Ok(())
}

fn alphas(bsd: &BoundarySpectralData, f: &BoundaryDatum, grid: &GammaGrid) -> Result<Vec<C64>> {
    bsd.check_grid(grid)?;
    bsd.psi.iter().map(|p| boundary_pairing(f, p, grid)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BvpSolution {
    pub lambda: C64,
    pub alphas: Vec<C64>,
    /// `(u | phi_k) = alpha_k / (lambda - lambda_k)`
    pub coeffs: Vec<C64>,
    /// `(sum_k |alpha_k|^2 / |lambda - lambda_k|^2)^(1/2)`
    pub norm: f64,
}

pub fn solve_bvp(
    bsd: &BoundarySpectralData,
    grid: &GammaGrid,
    f: &BoundaryDatum,
    lambda: C64,
) -> Result<BvpSolution> {
    spectrum_guard(&bsd.lambdas, lambda)?;
    let a = alphas(bsd, f, grid)?;
    let coeffs: Vec<C64> = a.iter().zip(&bsd.lambdas).map(|(al, lk)| al / (lambda - lk)).collect();
    let norm = a
        .iter()
        .zip(&bsd.lambdas)
        .map(|(al, lk)| al.norm_sqr() / (lambda - lk).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(BvpSolution { lambda, alphas: a, coeffs, norm })
}

fn tail_of(terms: &[C64], norms: &[f64]) -> f64 {
    let n = terms.len();
    let s = n.saturating_sub(TAIL_TERMS);
    terms[s..].iter().zip(&norms[s..]).map(|(t, w)| t.norm() * w).sum()
}

fn combine_traces(bsd: &BoundarySpectralData, weights: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); bsd.psi.first().map_or(0, |p| p.len())];
    for (w, p) in weights.iter().zip(&bsd.psi) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    out
}

/// Trace of `d(u_lambda - u_mu)/dn`:
/// `sum_k (mu - lambda) alpha_k / ((lambda - lambda_k)(mu - lambda_k)) psi_k`.
pub fn normal_derivative_difference(
    bsd: &BoundarySpectralData,
    grid: &GammaGrid,
    lambda: C64,
    mu: C64,
    f: &BoundaryDatum,
) -> Result<SteklovTrace> {
    spectrum_guard(&bsd.lambdas, lambda)?;
    spectrum_guard(&bsd.lambdas, mu)?;
    let a = alphas(bsd, f, grid)?;
    let w: Vec<C64> = a
        .iter()
        .zip(&bsd.lambdas)
        .map(|(al, lk)| (mu - lambda) * al / ((lambda - lk) * (mu - lk)))
        .collect();
    let norms: Vec<f64> = bsd.psi.iter().map(|p| grid.norm(p)).collect::<Result<_>>()?;
    Ok(SteklovTrace {
        values: combine_traces(bsd, &w),
        lambda,
        route: TraceRoute::Difference,
        tail: tail_of(&w, &norms),
    })
}

/// `sum_k alpha_k / (lambda - lambda_k) psi_k`, the `mu -> -infinity` limit of
/// [`normal_derivative_difference`].
pub fn resolvent_trace_series(
    bsd: &BoundarySpectralData,
    grid: &GammaGrid,
    lambda: C64,
    f: &BoundaryDatum,
) -> Result<Vec<C64>> {
    spectrum_guard(&bsd.lambdas, lambda)?;
    let a = alphas(bsd, f, grid)?;
    let w: Vec<C64> = a.iter().zip(&bsd.lambdas).map(|(al, lk)| al / (lambda - lk)).collect();
    Ok(combine_traces(bsd, &w))
}

/// Values of `exp(zeta.x)` on the interior grid.
pub fn exponential_on_y(zeta: &[C64; 3], grid: &YGrid) -> Vec<C64> {
    grid.sample(|x| (zeta[0] * x[0] + zeta[1] * x[1] + zeta[2] * x[2]).exp())
}

fn check_pair(sol: &EigenSolution, bsd: &BoundarySpectralData) -> Result<()> {
    if sol.eigenvalues != bsd.lambdas || sol.theta != bsd.theta {
        return Err(Error::Invalid("eigen solution and boundary data do not match".into()));
    }
    Ok(())
}

/// `(V exp(zeta.x) | phi_k)` for every kept mode, by interior quadrature.
pub fn potential_exponential_modal(
    sol: &EigenSolution,
    ygrid: &YGrid,
    v: &GridPotential,
    zeta: &[C64; 3],
) -> Result<Vec<C64>> {
    let e = exponential_on_y(zeta, ygrid);
    let ve: Vec<C64> = e.iter().zip(&v.values).map(|(x, vv)| x * *vv).collect();
    let raw = Projector::new(&sol.basis, ygrid).project(&ve, true)?;
    Ok(sol.modal(&raw))
}

/// Poincare-Steklov map on `exp(zeta.x)` via the resolvent:
/// `d e/dn - sum_k (V e | phi_k) / (lambda_k - lambda) psi_k`.
pub fn steklov_apply_exponential(
    sol: &EigenSolution,
    bsd: &BoundarySpectralData,
    gamma: &GammaGrid,
    ygrid: &YGrid,
    v: &GridPotential,
    zeta: &[C64; 3],
    lambda: C64,
) -> Result<SteklovTrace> {
    check_pair(sol, bsd)?;
    bsd.check_grid(gamma)?;
    let defect = dot(zeta, zeta) + lambda;
    if defect.norm() > 1e-10 * (1.0 + lambda.norm()) {
        return Err(Error::Inadmissible(format!("zeta.zeta + lambda = {defect} is not zero")));
    }
    let adm = crate::zeta::validate_admissibility(zeta, sol.theta, crate::zeta::Kind::Plain);
    if !adm.pass {
        return Err(Error::Inadmissible(adm.reason.unwrap_or_default()));
    }
    spectrum_guard(&bsd.lambdas, lambda)?;
    let mut values = exponential_normal_derivative(zeta, gamma);
    if v.values.iter().all(|x| *x == 0.0) {
        return Ok(SteklovTrace { values, lambda, route: TraceRoute::Exact, tail: 0.0 });
    }
    let ve = potential_exponential_modal(sol, ygrid, v, zeta)?;
    let w: Vec<C64> = ve.iter().zip(&bsd.lambdas).map(|(c, lk)| -c / (lk - lambda)).collect();
    let corr = combine_traces(bsd, &w);
    for (o, c) in values.iter_mut().zip(&corr) {
        *o += c;
    }
    let norms: Vec<f64> = bsd.psi.iter().map(|p| gamma.norm(p)).collect::<Result<_>>()?;
    Ok(SteklovTrace { values, lambda, route: TraceRoute::Resolvent, tail: tail_of(&w, &norms) })
}

/// `S = int_Gamma trace * exp(zeta1.x)`.
pub fn s_functional(trace: &[C64], zeta1: &[C64; 3], theta: crate::geometry::QuasiMomentum, grid: &GammaGrid) -> Result<C64> {
    let adm = crate::zeta::validate_admissibility(zeta1, theta, crate::zeta::Kind::Star);
    if !adm.pass {
        return Err(Error::Inadmissible(adm.reason.unwrap_or_default()));
    }
    grid.bilinear(trace, &exponential_on_gamma(zeta1, grid))
}

/// The four terms of the representation formula and
/// `residual = lhs - (s - correction + remainder)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsozakiTerms {
    pub lambda: C64,
    /// `int_Y V exp((zeta0+zeta1).x)` by quadrature of the closed-form potential.
    pub lhs: C64,
    pub s: C64,
    /// `(zeta0.zeta1 - lambda) int_Y exp((zeta0+zeta1).x)` in closed form.
    pub correction: C64,
    /// `int_Y R_lambda(V e0) V e1`
    pub remainder: C64,
    pub residual: C64,
}

#[allow(clippy::too_many_arguments)]
pub fn isozaki_identity_residual(
    v: &Potential,
    lambda: C64,
    zeta0: &[C64; 3],
    zeta1: &[C64; 3],
    sol: &EigenSolution,
    bsd: &BoundarySpectralData,
    ygrid: &YGrid,
    gamma: &GammaGrid,
) -> Result<IsozakiTerms> {
    let d1 = dot(zeta1, zeta1) + lambda;
    if d1.norm() > 1e-10 * (1.0 + lambda.norm()) {
        return Err(Error::Inadmissible(format!("zeta1.zeta1 + lambda = {d1} is not zero")));
    }
    let gv = v.sample(ygrid)?;
    let w = crate::zeta::add(zeta0, zeta1);
    let lhs = v.exp_moment(w, sol.basis.a, sol.basis.b);
    let trace = steklov_apply_exponential(sol, bsd, gamma, ygrid, &gv, zeta0, lambda)?;
    let s = s_functional(&trace.values, zeta1, sol.theta, gamma)?;
    let correction = (dot(zeta0, zeta1) - lambda) * cell_exp_integral(w, sol.basis.a, sol.basis.b);

    let ve0 = potential_exponential_modal(sol, ygrid, &gv, zeta0)?;
    let e1 = exponential_on_y(zeta1, ygrid);
    let ve1: Vec<C64> = e1.iter().zip(&gv.values).map(|(x, vv)| x * *vv).collect();
    let raw1 = Projector::new(&sol.basis, ygrid).project(&ve1, false)?;
    let phi_ve1 = sol.modal_bilinear(&raw1);
    let remainder: C64 = ve0
        .iter()
        .zip(&phi_ve1)
        .zip(&sol.eigenvalues)
        .map(|((a, b), lk)| a * b / (lk - lambda))
        .sum();
    let residual = lhs - (s - correction + remainder);
    Ok(IsozakiTerms { lambda, lhs, s, correction, remainder, residual })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZMuRow {
    pub mu: f64,
    pub norm_y: f64,
    pub norm_gamma: f64,
}

/// Norms of `z_mu = u_{1,mu} - u_{2,mu}` and of its normal derivative, with
/// both solutions expanded in the common raw basis.
pub fn z_mu_decay(
    first: (&EigenSolution, &BoundarySpectralData),
    second: (&EigenSolution, &BoundarySpectralData),
    gamma: &GammaGrid,
    f: &BoundaryDatum,
    mus: &[f64],
) -> Result<Vec<ZMuRow>> {
    check_pair(first.0, first.1)?;
    check_pair(second.0, second.1)?;
    if first.0.basis != second.0.basis {
        return Err(Error::Invalid("z_mu needs both solutions on the same raw basis".into()));
    }
    let bound = first.0.bound.max(second.0.bound);
    let a1 = alphas(first.1, f, gamma)?;
    let a2 = alphas(second.1, f, gamma)?;
    let ev = TraceEvaluator::new(&first.0.basis, gamma)?;
    mus.iter()
        .map(|&mu| {
            if mu > -(bound + 1.0) {
                return Err(Error::Guard(format!("mu = {mu} must lie below -(M+1) = {}", -(bound + 1.0))));
            }
            let m = C64::new(mu, 0.0);
            spectrum_guard(&first.1.lambdas, m)?;
            spectrum_guard(&second.1.lambdas, m)?;
            let b1: Vec<C64> = a1.iter().zip(&first.1.lambdas).map(|(a, l)| a / (m - l)).collect();
            let b2: Vec<C64> = a2.iter().zip(&second.1.lambdas).map(|(a, l)| a / (m - l)).collect();
            let c1 = first.0.combine(&b1);
            let c2 = second.0.combine(&b2);
            let z: Vec<C64> = c1.iter().zip(&c2).map(|(x, y)| x - y).collect();
            let norm_y = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let dz = ev.normal_derivative(&z)?;
            Ok(ZMuRow { mu, norm_y, norm_gamma: gamma.norm(&dz)? })
        })
        .collect()
}

/// `sum_k |<psi_k, f>|^2 / |lambda - lambda_k|^2`, the squared norm of `u_lambda`.
pub fn bessel_sum(bsd: &BoundarySpectralData, grid: &GammaGrid, f: &BoundaryDatum, lambda: C64) -> Result<f64> {
    Ok(solve_bvp(bsd, grid, f, lambda)?.norm.powi(2))
}
