//! Cell geometry `Y = (0,a) x (0,b) x (0,2pi)`, the separable quasi-periodic
//! eigenbasis of the free Laplacian, quadrature rules on `Y` and on the lateral
//! boundary `Gamma`, and trigonometric potentials.

use std::cmp::Ordering;
use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PERIOD: f64 = 2.0 * PI;

const TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGeometry {
    pub a: f64,
    pub b: f64,
    pub quad_nx1: usize,
    pub quad_nx2: usize,
    pub quad_n3: usize,
    /// Gauss points along `x1` on the faces `x2 = 0` and `x2 = b`.
    pub gamma_n1: usize,
    /// Gauss points along `x2` on the faces `x1 = 0` and `x1 = a`.
    pub gamma_n2: usize,
    pub gamma_n3: usize,
}

impl CellGeometry {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let g = CellGeometry {
            a,
            b,
            quad_nx1: 32,
            quad_nx2: 32,
            quad_n3: 16,
            gamma_n1: 32,
            gamma_n2: 32,
            gamma_n3: 16,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_interior(mut self, nx1: usize, nx2: usize, n3: usize) -> Result<Self> {
        self.quad_nx1 = nx1;
        self.quad_nx2 = nx2;
        self.quad_n3 = n3;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary(mut self, n1: usize, n2: usize, n3: usize) -> Result<Self> {
        self.gamma_n1 = n1;
        self.gamma_n2 = n2;
        self.gamma_n3 = n3;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Geometry(format!(
                "side lengths must be positive and finite, got a={}, b={}",
                self.a, self.b
            )));
        }
        let counts = [
            ("quad_nx1", self.quad_nx1),
            ("quad_nx2", self.quad_nx2),
            ("quad_n3", self.quad_n3),
            ("gamma_n1", self.gamma_n1),
            ("gamma_n2", self.gamma_n2),
            ("gamma_n3", self.gamma_n3),
        ];
        for (name, n) in counts {
            if n < 2 {
                return Err(Error::Geometry(format!("{name} must be at least 2, got {n}")));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.a * self.b * PERIOD
    }

    pub fn lateral_area(&self) -> f64 {
        2.0 * (self.a + self.b) * PERIOD
    }

    pub fn same_cell(&self, other: &CellGeometry) -> bool {
        self.a == other.a && self.b == other.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuasiMomentum(f64);

impl QuasiMomentum {
    pub fn new(theta: f64) -> Result<Self> {
        if (0.0..PERIOD).contains(&theta) {
            Ok(QuasiMomentum(theta))
        } else {
            Err(Error::Theta(theta))
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Longitudinal wavenumber `theta/2pi + j` of the `j`-th Fourier mode.
    pub fn kappa(self, j: i32) -> f64 {
        self.0 / PERIOD + j as f64
    }
}

impl TryFrom<f64> for QuasiMomentum {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        QuasiMomentum::new(v)
    }
}

impl From<QuasiMomentum> for f64 {
    fn from(q: QuasiMomentum) -> f64 {
        q.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub m: u32,
    pub n: u32,
    pub j: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletMode {
    pub mu: f64,
    pub m: u32,
    pub n: u32,
}

/// Which cross-section sine modes enter the basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossModes {
    /// The `K` lowest Dirichlet eigenpairs of the cross-section.
    Lowest(usize),
    /// All `(m, n)` with `m <= m_max`, `n <= n_max`.
    Box { m_max: u32, n_max: u32 },
}

fn mu_mn(a: f64, b: f64, m: u32, n: u32) -> f64 {
    let p = m as f64 * PI / a;
    let q = n as f64 * PI / b;
    p * p + q * q
}

fn fuzzy_cmp(x: f64, y: f64) -> Ordering {
    if (x - y).abs() <= TIE_RTOL * x.abs().max(y.abs()) {
        Ordering::Equal
    } else {
        x.total_cmp(&y)
    }
}

/// The `count` lowest Dirichlet eigenvalues of `omega`, ties broken by `(m, n)`.
pub fn dirichlet_eigenpairs(geom: &CellGeometry, count: usize) -> Result<Vec<DirichletMode>> {
    if count == 0 {
        return Err(Error::Invalid("dirichlet_eigenpairs needs count >= 1".into()));
    }
    let (a, b) = (geom.a, geom.b);
    // Both (count,1) and (1,count) bound the count-th eigenvalue from above.
    let cap = mu_mn(a, b, count as u32, 1).min(mu_mn(a, b, 1, count as u32)) * (1.0 + 1e-9);
    let mut modes = Vec::new();
    let mut m = 1u32;
    while mu_mn(a, b, m, 1) <= cap {
        let mut n = 1u32;
        while mu_mn(a, b, m, n) <= cap {
            modes.push(DirichletMode { mu: mu_mn(a, b, m, n), m, n });
            n += 1;
        }
        m += 1;
    }
    modes.sort_by(|x, y| fuzzy_cmp(x.mu, y.mu).then((x.m, x.n).cmp(&(y.m, y.n))));
    modes.truncate(count);
    Ok(modes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub index: BasisIndex,
    pub mu: f64,
    pub lambda_star: f64,
}

/// Orthonormal basis `phi_mn(x') exp(i kappa_j x3) / sqrt(2 pi)` of `L2(Y)`,
/// sorted by `lambda_star = mu_mn + kappa_j^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellBasis {
    pub theta: QuasiMomentum,
    pub a: f64,
    pub b: f64,
    pub modes: CrossModes,
    pub j_max: u32,
    pub entries: Vec<BasisEntry>,
}

pub fn cell_basis(
    theta: QuasiMomentum,
    geom: &CellGeometry,
    modes: &CrossModes,
    j_max: u32,
) -> Result<CellBasis> {
    let cross: Vec<DirichletMode> = match *modes {
        CrossModes::Lowest(k) => dirichlet_eigenpairs(geom, k)?,
        CrossModes::Box { m_max, n_max } => {
            if m_max == 0 || n_max == 0 {
                return Err(Error::Invalid("box cross-section needs m_max, n_max >= 1".into()));
            }
            let mut v = Vec::with_capacity((m_max * n_max) as usize);
            for m in 1..=m_max {
                for n in 1..=n_max {
                    v.push(DirichletMode { mu: mu_mn(geom.a, geom.b, m, n), m, n });
                }
            }
            v
        }
    };
    let jm = j_max as i32;
    let mut entries = Vec::with_capacity(cross.len() * (2 * j_max as usize + 1));
    for d in &cross {
        for j in -jm..=jm {
            let k = theta.kappa(j);
            entries.push(BasisEntry {
                index: BasisIndex { m: d.m, n: d.n, j },
                mu: d.mu,
                lambda_star: d.mu + k * k,
            });
        }
    }
    entries.sort_by(|x, y| fuzzy_cmp(x.lambda_star, y.lambda_star).then(x.index.cmp(&y.index)));
    Ok(CellBasis {
        theta,
        a: geom.a,
        b: geom.b,
        modes: modes.clone(),
        j_max,
        entries,
    })
}

/// `sqrt(2/L) sin(k pi x / L)`.
#[inline]
pub fn sine_mode(k: u32, l: f64, x: f64) -> f64 {
    (2.0 / l).sqrt() * (k as f64 * PI * x / l).sin()
}

#[inline]
fn sine_mode_dx(k: u32, l: f64, x: f64) -> f64 {
    let w = k as f64 * PI / l;
    (2.0 / l).sqrt() * w * (w * x).cos()
}

impl CellBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lambda_stars(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda_star).collect()
    }

    pub fn m_max(&self) -> u32 {
        self.entries.iter().map(|e| e.index.m).max().unwrap_or(0)
    }

    pub fn n_max(&self) -> u32 {
        self.entries.iter().map(|e| e.index.n).max().unwrap_or(0)
    }

    fn x3_factor(&self, j: i32, x3: f64) -> Complex64 {
        Complex64::from_polar(1.0 / PERIOD.sqrt(), self.theta.kappa(j) * x3)
    }

    pub fn eval(&self, p: usize, x: [f64; 3]) -> Complex64 {
        let BasisIndex { m, n, j } = self.entries[p].index;
        self.x3_factor(j, x[2]) * (sine_mode(m, self.a, x[0]) * sine_mode(n, self.b, x[1]))
    }

    pub fn grad(&self, p: usize, x: [f64; 3]) -> [Complex64; 3] {
        let BasisIndex { m, n, j } = self.entries[p].index;
        let e3 = self.x3_factor(j, x[2]);
        let s1 = sine_mode(m, self.a, x[0]);
        let s2 = sine_mode(n, self.b, x[1]);
        [
            e3 * (sine_mode_dx(m, self.a, x[0]) * s2),
            e3 * (s1 * sine_mode_dx(n, self.b, x[1])),
            e3 * Complex64::new(0.0, self.theta.kappa(j)) * (s1 * s2),
        ]
    }

    /// Outward normal derivative of basis function `p` at a boundary point.
    pub fn normal_derivative(&self, p: usize, face: Face, x: [f64; 3]) -> Complex64 {
        let g = self.grad(p, x);
        match face {
            Face::X1Lo => -g[0],
            Face::X1Hi => g[0],
            Face::X2Lo => -g[1],
            Face::X2Hi => g[1],
        }
    }
}

/// `lambda_{*,1}(theta)`: the smallest eigenvalue of the free operator.
pub fn poincare_constant(theta: QuasiMomentum, geom: &CellGeometry) -> f64 {
    let mu1 = mu_mn(geom.a, geom.b, 1, 1);
    let t = theta.theta();
    let d = if t <= PI { t } else { PERIOD - t };
    mu1 + d * d / (4.0 * PI * PI)
}

fn gauss_legendre(n: usize, l: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(n.try_into().expect("point count checked >= 2"));
    rule.nodes()
        .zip(rule.weights())
        .map(|(x, w)| (0.5 * l * (x + 1.0), 0.5 * l * w))
        .unzip()
}

fn uniform_period(n: usize) -> Vec<f64> {
    (0..n).map(|l| PERIOD * l as f64 / n as f64).collect()
}

/// Tensor rule on `Y`: Gauss-Legendre in `x1`, `x2`, uniform periodic in `x3`.
/// Flat index is `(i1 * n2 + i2) * n3 + i3`.
#[derive(Clone, Debug)]
pub struct YGrid {
    pub x1: Vec<f64>,
    pub w1: Vec<f64>,
    pub x2: Vec<f64>,
    pub w2: Vec<f64>,
    pub x3: Vec<f64>,
    pub w3: f64,
}

impl YGrid {
    pub fn new(geom: &CellGeometry) -> Self {
        let (x1, w1) = gauss_legendre(geom.quad_nx1, geom.a);
        let (x2, w2) = gauss_legendre(geom.quad_nx2, geom.b);
        YGrid {
            x1,
            w1,
            x2,
            w2,
            x3: uniform_period(geom.quad_n3),
            w3: PERIOD / geom.quad_n3 as f64,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x1.len(), self.x2.len(), self.x3.len())
    }

    pub fn len(&self) -> usize {
        self.x1.len() * self.x2.len() * self.x3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> ([f64; 3], f64) {
        let (_, n2, n3) = self.dims();
        let i3 = idx % n3;
        let i2 = (idx / n3) % n2;
        let i1 = idx / (n2 * n3);
        (
            [self.x1[i1], self.x2[i2], self.x3[i3]],
            self.w1[i1] * self.w2[i2] * self.w3,
        )
    }

    pub fn weight_sum(&self) -> f64 {
        self.w1.iter().sum::<f64>() * self.w2.iter().sum::<f64>() * self.w3 * self.x3.len() as f64
    }

    pub fn integrate<F: Fn([f64; 3]) -> Complex64>(&self, f: F) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for idx in 0..self.len() {
            let (x, w) = self.point(idx);
            acc += f(x) * w;
        }
        acc
    }

    pub fn sample<T, F: Fn([f64; 3]) -> T>(&self, f: F) -> Vec<T> {
        (0..self.len()).map(|i| f(self.point(i).0)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    X1Lo,
    X1Hi,
    X2Lo,
    X2Hi,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::X1Lo, Face::X1Hi, Face::X2Lo, Face::X2Hi];
}

/// Serializable description from which a [`GammaGrid`] is rebuilt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaGridSpec {
    pub a: f64,
    pub b: f64,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

/// Quadrature on the lateral boundary. The four faces are stored in the order
/// of [`Face::ALL`]; within a face the tangential coordinate is the slow index
/// and `x3` the fast one. Corners are never nodes.
#[derive(Clone, Debug)]
pub struct GammaGrid {
    pub spec: GammaGridSpec,
    pub t1: Vec<f64>,
    pub tw1: Vec<f64>,
    pub t2: Vec<f64>,
    pub tw2: Vec<f64>,
    pub x3: Vec<f64>,
    pub w3: f64,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    offsets: [usize; 5],
}

impl GammaGrid {
    pub fn new(geom: &CellGeometry) -> Self {
        Self::from_spec(&GammaGridSpec {
            a: geom.a,
            b: geom.b,
            n1: geom.gamma_n1,
            n2: geom.gamma_n2,
            n3: geom.gamma_n3,
        })
        .expect("validated geometry gives a valid boundary grid")
    }

    pub fn from_spec(spec: &GammaGridSpec) -> Result<Self> {
        CellGeometry::new(spec.a, spec.b)?.with_boundary(spec.n1, spec.n2, spec.n3)?;
        let (t1, tw1) = gauss_legendre(spec.n1, spec.a);
        let (t2, tw2) = gauss_legendre(spec.n2, spec.b);
        let x3 = uniform_period(spec.n3);
        let w3 = PERIOD / spec.n3 as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut offsets = [0usize; 5];
        for (fi, face) in Face::ALL.iter().enumerate() {
            offsets[fi] = points.len();
            let (ts, ws) = match face {
                Face::X1Lo | Face::X1Hi => (&t2, &tw2),
                Face::X2Lo | Face::X2Hi => (&t1, &tw1),
            };
            for (t, wt) in ts.iter().zip(ws) {
                for &z in &x3 {
                    let p = match face {
                        Face::X1Lo => [0.0, *t, z],
                        Face::X1Hi => [spec.a, *t, z],
                        Face::X2Lo => [*t, 0.0, z],
                        Face::X2Hi => [*t, spec.b, z],
                    };
                    points.push(p);
                    weights.push(wt * w3);
                }
            }
        }
        offsets[4] = points.len();
        Ok(GammaGrid {
            spec: spec.clone(),
            t1,
            tw1,
            t2,
            tw2,
            x3,
            w3,
            points,
            weights,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn face_range(&self, face: Face) -> std::ops::Range<usize> {
        let i = Face::ALL.iter().position(|f| *f == face).unwrap();
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn faces(&self) -> impl Iterator<Item = (Face, std::ops::Range<usize>)> + '_ {
        Face::ALL.iter().map(move |f| (*f, self.face_range(*f)))
    }

    pub fn face_of(&self, idx: usize) -> Face {
        Face::ALL[(0..4).find(|&i| idx < self.offsets[i + 1]).expect("index inside grid")]
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn sample<F: Fn(Face, [f64; 3]) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for (face, r) in self.faces() {
            for p in &self.points[r] {
                out.push(f(face, *p));
            }
        }
        out
    }

    /// `int_Gamma f conj(g)`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y.conj() * *w)
            .sum())
    }

    /// `int_Gamma f g` without conjugation.
    pub fn bilinear(&self, f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y * *w)
            .sum())
    }

    pub fn norm(&self, f: &[Complex64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(f.iter()
            .zip(&self.weights)
            .map(|(x, w)| x.norm_sqr() * w)
            .sum::<f64>()
            .sqrt())
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::GridMismatch(format!(
                "boundary samples have length {n}, grid has {} nodes",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    #[inline]
    pub fn eval(self, k: f64, x: f64) -> f64 {
        match self {
            Trig::Cos => (k * x).cos(),
            Trig::Sin => (k * x).sin(),
        }
    }
}

/// `coef * f1(k1 x1) * f2(k2 x2) * f3(q x3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub coef: f64,
    pub x1: (Trig, f64),
    pub x2: (Trig, f64),
    pub x3: (Trig, i32),
}

impl TrigTerm {
    pub fn constant(c: f64) -> Self {
        TrigTerm {
            coef: c,
            x1: (Trig::Cos, 0.0),
            x2: (Trig::Cos, 0.0),
            x3: (Trig::Cos, 0),
        }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.coef
            * self.x1.0.eval(self.x1.1, x[0])
            * self.x2.0.eval(self.x2.1, x[1])
            * self.x3.0.eval(self.x3.1 as f64, x[2])
    }
}

/// Real potential given in closed form as a finite sum of separable trig terms.
/// The closed form is the source of truth; grid samples derive from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub terms: Vec<TrigTerm>,
    pub bound: f64,
}

impl Potential {
    /// Uses `sum |coef|` as the sup-norm bound.
    pub fn from_terms(terms: Vec<TrigTerm>) -> Self {
        let bound = terms.iter().map(|t| t.coef.abs()).sum();
        Potential { terms, bound }
    }

    pub fn with_bound(terms: Vec<TrigTerm>, bound: f64) -> Result<Self> {
        let p = Potential { terms, bound };
        p.validate()?;
        Ok(p)
    }

    pub fn zero() -> Self {
        Potential { terms: Vec::new(), bound: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![TrigTerm::constant(c)])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bound >= 0.0 && self.bound.is_finite())
            || self.terms.iter().any(|t| !(t.coef.is_finite() && t.x1.1.is_finite() && t.x2.1.is_finite()))
        {
            return Err(Error::Invalid("potential coefficients and bound must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut terms = self.terms.clone();
        terms.push(TrigTerm::constant(c));
        Potential { terms, bound: self.bound + c.abs() }
    }

    pub fn sub(&self, other: &Potential) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| TrigTerm { coef: -t.coef, ..*t }));
        Potential { terms, bound: self.bound + other.bound }
    }

    /// Samples on the interior grid; fails if a sample exceeds the declared bound.
    pub fn sample(&self, grid: &YGrid) -> Result<GridPotential> {
        self.validate()?;
        let gp = GridPotential {
            values: grid.sample(|x| self.eval(x)),
            bound: self.bound,
        };
        let sup = gp.sup();
        if sup > self.bound * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Invalid(format!(
                "declared bound {} below sampled sup {sup}",
                self.bound
            )));
        }
        Ok(gp)
    }

    /// Closed form of `int_Y V(x) exp(w . x) dx`.
    pub fn exp_moment(&self, w: [Complex64; 3], a: f64, b: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * trig_exp_integral(t.x1.0, t.x1.1, w[0], a)
                    * trig_exp_integral(t.x2.0, t.x2.1, w[1], b)
                    * trig_exp_integral(t.x3.0, t.x3.1 as f64, w[2], PERIOD)
            })
            .sum()
    }
}

/// Potential values on the nodes of a [`YGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridPotential {
    pub values: Vec<f64>,
    pub bound: f64,
}

impl GridPotential {
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// `int_0^L exp(z x) dx`.
pub fn exp_integral(z: Complex64, l: f64) -> Complex64 {
    let u = z * l;
    if u.norm() < 1e-5 {
        l * (1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0)
    } else {
        cexpm1(u) / z
    }
}

/// `int_0^L f(k x) exp(z x) dx` for `f` in {cos, sin}.
pub fn trig_exp_integral(f: Trig, k: f64, z: Complex64, l: f64) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    let p = exp_integral(z + ik, l);
    let m = exp_integral(z - ik, l);
    match f {
        Trig::Cos => 0.5 * (p + m),
        Trig::Sin => (p - m) / Complex64::new(0.0, 2.0),
    }
}

/// `int_Y exp(w . x) dx`.
pub fn cell_exp_integral(w: [Complex64; 3], a: f64, b: f64) -> Complex64 {
    exp_integral(w[0], a) * exp_integral(w[1], b) * exp_integral(w[2], PERIOD)
}
