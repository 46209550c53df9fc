//! Complex probe pairs `(zeta0, zeta1, lambda)` with `zeta0.zeta0 = zeta1.zeta1 = -lambda`
//! whose exponentials `exp(zeta.x)` are admissible quasi-periodic boundary data
//! and whose sum `zeta0 + zeta1` tends to a prescribed imaginary frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{exp_integral, Face, GammaGrid, QuasiMomentum, PERIOD};

type C64 = Complex64;

const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `j >= 1`, parameter `s in (0,1)`.
    Positive,
    /// `j <= -1`, parameter `s in (0,1)`.
    Negative,
    /// `j = 0`, parameter `t > |xi'|/2`.
    Zero,
}

impl Branch {
    pub fn of(j: i32) -> Branch {
        match j {
            j if j >= 1 => Branch::Positive,
            j if j <= -1 => Branch::Negative,
            _ => Branch::Zero,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZetaPair {
    pub zeta0: [C64; 3],
    pub zeta1: [C64; 3],
    pub lambda: C64,
    pub xi_prime: [f64; 2],
    pub j: i32,
    pub theta: QuasiMomentum,
    pub branch: Branch,
    /// `s` for `j != 0`, `t` for `j = 0`.
    pub param: f64,
    pub t: f64,
    pub eta_prime: [f64; 2],
}

/// Bilinear product without conjugation.
pub fn dot(a: &[C64; 3], b: &[C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn add(a: &[C64; 3], b: &[C64; 3]) -> [C64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn make_zeta(xi_prime: [f64; 2], j: i32, theta: QuasiMomentum, param: f64) -> Result<ZetaPair> {
    let nx = xi_prime[0].hypot(xi_prime[1]);
    if !(nx > 0.0) || !nx.is_finite() {
        return Err(Error::Invalid("xi' must be nonzero and finite".into()));
    }
    let eta = [-xi_prime[1] / nx, xi_prime[0] / nx];
    let th = theta.theta();
    let i = C64::new(0.0, 1.0);
    let branch = Branch::of(j);
    let jf = j as f64;

    let (t, st) = match branch {
        Branch::Zero => {
            let t = param;
            if !(t > nx / 2.0) || !t.is_finite() {
                return Err(Error::Invalid(format!("t = {t} must exceed |xi'|/2 = {}", nx / 2.0)));
            }
            (t, t)
        }
        Branch::Positive | Branch::Negative => {
            let s = param;
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Invalid(format!("s = {s} must lie in (0,1)")));
            }
            let num = match branch {
                Branch::Positive => jf * (jf + th / PI),
                _ => jf * (jf - 2.0 + th / PI),
            };
            if !(num > 0.0) {
                return Err(Error::Invalid(format!(
                    "j(j{}+theta/pi) = {num} must be positive",
                    if branch == Branch::Positive { "" } else { "-2" }
                )));
            }
            let t2 = num / (1.0 - s * s) - 1.0;
            if !(t2 > 0.0) {
                return Err(Error::Invalid(format!("s = {s} gives t^2 = {t2} <= 0")));
            }
            let t = t2.sqrt();
            if !(s * t > nx / 2.0) {
                return Err(Error::Invalid(format!(
                    "s t = {} must exceed |xi'|/2 = {}; move s closer to 1",
                    s * t,
                    nx / 2.0
                )));
            }
            (t, s * t)
        }
    };

    // first factor of zeta0' is i(st + i) for j != 0 and i(t + i) for j = 0
    let (pre0, r0) = (i * (C64::new(st, 1.0)), st);
    let pre1 = match branch {
        Branch::Zero => i * C64::new(t, 1.0),
        _ => i * C64::new(t, param),
    };
    let r1 = t;
    let root0 = (1.0 - nx * nx / (4.0 * r0 * r0)).sqrt();
    let root1 = (1.0 - nx * nx / (4.0 * r1 * r1)).sqrt();
    let z0p = [
        pre0 * (-xi_prime[0] / (2.0 * r0) + root0 * eta[0]),
        pre0 * (-xi_prime[1] / (2.0 * r0) + root0 * eta[1]),
    ];
    let z1p = [
        pre1 * (-xi_prime[0] / (2.0 * r1) - root1 * eta[0]),
        pre1 * (-xi_prime[1] / (2.0 * r1) - root1 * eta[1]),
    ];
    let k = th / PERIOD;
    let (z03, z13) = match branch {
        Branch::Positive => (i * (jf + k), -i * k),
        Branch::Negative => (i * (jf - 1.0 + k), i * (1.0 - k)),
        Branch::Zero => (i * k, -i * k),
    };
    let zeta0 = [z0p[0], z0p[1], z03];
    let zeta1 = [z1p[0], z1p[1], z13];
    let lambda = -dot(&zeta0, &zeta0);
    let zp = ZetaPair {
        zeta0,
        zeta1,
        lambda,
        xi_prime,
        j,
        theta,
        branch,
        param,
        t,
        eta_prime: eta,
    };
    zp.check_invariants()?;
    Ok(zp)
}

impl ZetaPair {
    /// `lambda` from the closed-form expressions rather than the dot product.
    pub fn lambda_closed_form(&self) -> C64 {
        let k = self.theta.theta() / PERIOD;
        let jf = self.j as f64;
        match self.branch {
            Branch::Zero => C64::new(self.t, 1.0).powi(2) + k * k,
            Branch::Positive => C64::new(self.t * self.param, 1.0).powi(2) + (jf + k).powi(2),
            Branch::Negative => C64::new(self.t * self.param, 1.0).powi(2) + (jf - 1.0 + k).powi(2),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let scale = 1.0 + self.lambda.norm();
        let d0 = (dot(&self.zeta0, &self.zeta0) + self.lambda).norm();
        let d1 = (dot(&self.zeta1, &self.zeta1) + self.lambda).norm();
        if d0 > 1e-12 * scale || d1 > 1e-12 * scale {
            return Err(Error::Inadmissible(format!(
                "zeta0.zeta0 and zeta1.zeta1 differ from -lambda by {d0:e}, {d1:e}"
            )));
        }
        let a0 = validate_admissibility(&self.zeta0, self.theta, Kind::Plain);
        let a1 = validate_admissibility(&self.zeta1, self.theta, Kind::Star);
        if !a0.pass || !a1.pass {
            return Err(Error::Inadmissible(format!(
                "{}; {}",
                a0.reason.unwrap_or_default(),
                a1.reason.unwrap_or_default()
            )));
        }
        Ok(())
    }

    pub fn sum(&self) -> [C64; 3] {
        add(&self.zeta0, &self.zeta1)
    }

    /// `zeta0.zeta1 - lambda`
    pub fn cross_defect(&self) -> C64 {
        dot(&self.zeta0, &self.zeta1) - self.lambda
    }

    /// The limit predicted by the construction, `-i (xi', -j)`.
    pub fn nominal_limit(&self) -> [C64; 3] {
        let i = C64::new(0.0, 1.0);
        [-i * self.xi_prime[0], -i * self.xi_prime[1], i * self.j as f64]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `exp(zeta.x)` itself belongs to the theta-quasi-periodic space.
    Plain,
    /// `exp(conj(zeta).x)` belongs to it.
    Star,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Admissibility {
    pub pass: bool,
    pub eta3: f64,
    pub xi3_distance: f64,
    pub reason: Option<String>,
}

pub fn validate_admissibility(zeta: &[C64; 3], theta: QuasiMomentum, kind: Kind) -> Admissibility {
    let eta3 = zeta[2].re;
    let xi3 = zeta[2].im;
    let shift = theta.theta() / PERIOD;
    let r = match kind {
        Kind::Plain => xi3 - shift,
        Kind::Star => xi3 + shift,
    };
    let dist = (r - r.round()).abs();
    let mut reason = None;
    if eta3.abs() > ADMISSIBILITY_TOL {
        reason = Some(format!("real third component {eta3} is nonzero"));
    } else if dist > ADMISSIBILITY_TOL {
        reason = Some(format!(
            "imaginary third component {xi3} is {dist:e} away from {}theta/2pi + Z",
            if kind == Kind::Plain { "" } else { "-" }
        ));
    }
    Admissibility {
        pass: reason.is_none(),
        eta3,
        xi3_distance: dist,
        reason,
    }
}

/// `exp(zeta . x)` on the boundary nodes.
pub fn exponential_on_gamma(zeta: &[C64; 3], grid: &GammaGrid) -> Vec<C64> {
    grid.sample(|_, x| (zeta[0] * x[0] + zeta[1] * x[1] + zeta[2] * x[2]).exp())
}

/// Outward normal derivative `(zeta . n) exp(zeta . x)` on the boundary nodes.
pub fn exponential_normal_derivative(zeta: &[C64; 3], grid: &GammaGrid) -> Vec<C64> {
    grid.sample(|face, x| {
        let e = (zeta[0] * x[0] + zeta[1] * x[1] + zeta[2] * x[2]).exp();
        let zn = match face {
            Face::X1Lo => -zeta[0],
            Face::X1Hi => zeta[0],
            Face::X2Lo => -zeta[1],
            Face::X2Hi => zeta[1],
        };
        zn * e
    })
}

/// `||exp(zeta.x)||_{L2(Y)}` in closed form.
pub fn exponential_norm_y(zeta: &[C64; 3], a: f64, b: f64) -> f64 {
    let c = |z: C64, l: f64| exp_integral(C64::new(2.0 * z.re, 0.0), l).re;
    (c(zeta[0], a) * c(zeta[1], b) * c(zeta[2], PERIOD)).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub param: f64,
    pub abs_lambda: f64,
    pub im_lambda: f64,
    pub deviation: f64,
    pub cross_defect: C64,
    pub third_sum: C64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticsTable {
    pub rows: Vec<AsymptoticRow>,
    /// Numerically evaluated limit of `zeta0 + zeta1`.
    pub limit: [C64; 3],
    /// Least-squares slope of `log deviation` against `log |lambda|`.
    pub slope: f64,
    /// Frequency actually probed: `-i * limit`.
    pub probed_frequency: [f64; 3],
}

/// Parameter that pushes `|lambda|` to roughly `1e12`.
fn far_parameter(j: i32, theta: QuasiMomentum) -> f64 {
    let t_far: f64 = 1e6;
    match Branch::of(j) {
        Branch::Zero => t_far,
        b => {
            let jf = j as f64;
            let th = theta.theta();
            let num = if b == Branch::Positive { jf * (jf + th / PI) } else { jf * (jf - 2.0 + th / PI) };
            (1.0 - num / (t_far * t_far + 1.0)).sqrt()
        }
    }
}

pub fn numerical_limit(xi_prime: [f64; 2], j: i32, theta: QuasiMomentum) -> Result<[C64; 3]> {
    Ok(make_zeta(xi_prime, j, theta, far_parameter(j, theta))?.sum())
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    if sxx <= 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn zeta_asymptotics(
    xi_prime: [f64; 2],
    j: i32,
    theta: QuasiMomentum,
    sweep: &[f64],
) -> Result<AsymptoticsTable> {
    let limit = numerical_limit(xi_prime, j, theta)?;
    let mut rows = Vec::with_capacity(sweep.len());
    for &p in sweep {
        let zp = make_zeta(xi_prime, j, theta, p)?;
        let s = zp.sum();
        let dev = ((s[0] - limit[0]).norm_sqr() + (s[1] - limit[1]).norm_sqr() + (s[2] - limit[2]).norm_sqr()).sqrt();
        rows.push(AsymptoticRow {
            param: p,
            abs_lambda: zp.lambda.norm(),
            im_lambda: zp.lambda.im,
            deviation: dev,
            cross_defect: zp.cross_defect(),
            third_sum: s[2],
        });
    }
    rows.sort_by(|a, b| a.abs_lambda.total_cmp(&b.abs_lambda));
    let lo = rows.first().map(|r| r.abs_lambda).unwrap_or(0.0);
    let hi = rows.last().map(|r| r.abs_lambda).unwrap_or(0.0);
    if rows.len() < 3 || hi < 100.0 * lo {
        return Err(Error::Invalid(format!(
            "sweep must span two decades of |lambda| with at least 3 points (got {} points over [{lo}, {hi}])",
            rows.len()
        )));
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.abs_lambda.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.deviation.max(1e-300).ln()).collect();
    let slope = least_squares_slope(&lx, &ly).ok_or_else(|| Error::Invalid("degenerate sweep".into()))?;
    Ok(AsymptoticsTable {
        rows,
        limit,
        slope,
        probed_frequency: [-limit[0].im, -limit[1].im, -limit[2].im],
    })
}

/// Geometric sweep parameters: `s = 1 - 2^-i` for `j != 0`, `t = 2^i` for `j = 0`.
pub fn geometric_sweep(j: i32, exponents: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    exponents
        .map(|i| {
            if j == 0 {
                2f64.powi(i)
            } else {
                1.0 - 2f64.powi(-i)
            }
        })
        .collect()
}
