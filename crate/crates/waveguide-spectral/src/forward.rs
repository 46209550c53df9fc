//! Galerkin discretisation of `A_theta = -Laplacian + V` on the cell basis,
//! Hermitian eigensolve, boundary traces of the eigenfunctions, band sweeps and
//! the Floquet transform.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geometry::{
    cell_basis, sine_mode, CellBasis, CellGeometry, CrossModes, Face, GammaGrid, GammaGridSpec,
    GridPotential, Potential, QuasiMomentum, YGrid, PERIOD,
};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Absolute gap below which eigenvalues are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Couplings below `BLOCK_RTOL * (1 + bound)` are treated as structural zeros
/// when splitting the matrix into independent blocks.
const BLOCK_RTOL: f64 = 1e-13;

type C64 = Complex64;

/// Precomputed sine tables `sqrt(2/L) sin(k pi x_i / L)` for `k = 1..=kmax`.
#[derive(Clone, Debug)]
pub(crate) struct SineTable {
    pub kmax: usize,
    pub npts: usize,
    /// row-major `[k-1][i]`
    pub vals: Vec<f64>,
}

impl SineTable {
    pub fn new(kmax: u32, l: f64, xs: &[f64]) -> Self {
        let mut vals = Vec::with_capacity(kmax as usize * xs.len());
        for k in 1..=kmax {
            vals.extend(xs.iter().map(|&x| sine_mode(k, l, x)));
        }
        SineTable { kmax: kmax as usize, npts: xs.len(), vals }
    }

    #[inline]
    pub fn row(&self, k: u32) -> &[f64] {
        let s = (k as usize - 1) * self.npts;
        &self.vals[s..s + self.npts]
    }
}

fn j_offset(basis: &CellBasis) -> i32 {
    basis.j_max as i32
}

/// Sum-factorised projections of grid functions on the basis.
#[derive(Clone, Debug)]
pub struct Projector {
    basis: CellBasis,
    dims: (usize, usize, usize),
    s1w: SineTable,
    s2w: SineTable,
    /// `exp(-i kappa_j x3_l) w3 / sqrt(2 pi)`, row `[j + j_max][l]`
    e3: Vec<C64>,
}

impl Projector {
    pub fn new(basis: &CellBasis, grid: &YGrid) -> Self {
        let mut s1w = SineTable::new(basis.m_max(), basis.a, &grid.x1);
        for (k, v) in s1w.vals.iter_mut().enumerate() {
            *v *= grid.w1[k % grid.x1.len()];
        }
        let mut s2w = SineTable::new(basis.n_max(), basis.b, &grid.x2);
        for (k, v) in s2w.vals.iter_mut().enumerate() {
            *v *= grid.w2[k % grid.x2.len()];
        }
        let jm = basis.j_max as i32;
        let norm = grid.w3 / PERIOD.sqrt();
        let mut e3 = Vec::new();
        for j in -jm..=jm {
            let kap = basis.theta.kappa(j);
            e3.extend(grid.x3.iter().map(|&x| C64::from_polar(norm, -kap * x)));
        }
        Projector {
            basis: basis.clone(),
            dims: grid.dims(),
            s1w,
            s2w,
            e3,
        }
    }

    /// `(f | e_p) = int_Y f conj(e_p)` for every basis function, or the
    /// bilinear `int_Y f e_p` when `conjugate` is false.
    pub fn project(&self, f: &[C64], conjugate: bool) -> Result<Vec<C64>> {
        let (n1, n2, n3) = self.dims;
        if f.len() != n1 * n2 * n3 {
            return Err(Error::Dimension(format!(
                "grid function has {} samples, grid has {}",
                f.len(),
                n1 * n2 * n3
            )));
        }
        let nj = 2 * self.basis.j_max as usize + 1;
        // x3 sums
        let mut fj = vec![C64::new(0.0, 0.0); n1 * n2 * nj];
        for i12 in 0..n1 * n2 {
            let row = &f[i12 * n3..(i12 + 1) * n3];
            for jj in 0..nj {
                let e = &self.e3[jj * n3..(jj + 1) * n3];
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..n3 {
                    let ev = if conjugate { e[l] } else { e[l].conj() };
                    acc += row[l] * ev;
                }
                fj[i12 * nj + jj] = acc;
            }
        }
        // x2 sums: g[(i1, n, jj)]
        let nn = self.s2w.kmax;
        let mut g = vec![C64::new(0.0, 0.0); n1 * nn * nj];
        for i1 in 0..n1 {
            for n in 0..nn {
                let s = self.s2w.row(n as u32 + 1);
                for jj in 0..nj {
                    let mut acc = C64::new(0.0, 0.0);
                    for i2 in 0..n2 {
                        acc += fj[(i1 * n2 + i2) * nj + jj] * s[i2];
                    }
                    g[(i1 * nn + n) * nj + jj] = acc;
                }
            }
        }
        let off = j_offset(&self.basis);
        Ok(self
            .basis
            .entries
            .iter()
            .map(|e| {
                let s = self.s1w.row(e.index.m);
                let jj = (e.index.j + off) as usize;
                let n = e.index.n as usize - 1;
                let mut acc = C64::new(0.0, 0.0);
                for i1 in 0..n1 {
                    acc += g[(i1 * nn + n) * nj + jj] * s[i1];
                }
                acc
            })
            .collect())
    }
}

/// Truncated Galerkin matrix `H = diag(lambda_star) + (V e_q | e_p)`.
#[derive(Clone, Debug)]
pub struct GalerkinOperator {
    pub theta: QuasiMomentum,
    pub basis: CellBasis,
    pub h: Mat<C64>,
    pub bound: f64,
}

impl GalerkinOperator {
    pub fn size(&self) -> usize {
        self.basis.len()
    }
}

pub fn assemble(basis: &CellBasis, grid: &YGrid, v: &GridPotential) -> Result<GalerkinOperator> {
    assemble_with(basis, grid, v, Execution::default())
}

pub fn assemble_with(
    basis: &CellBasis,
    grid: &YGrid,
    v: &GridPotential,
    exec: Execution,
) -> Result<GalerkinOperator> {
    let (n1, n2, n3) = grid.dims();
    if v.values.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "potential has {} samples, interior grid has {}",
            v.values.len(),
            grid.len()
        )));
    }
    let bsz = basis.len();
    let jm = basis.j_max as i32;
    let nd = (4 * jm + 1) as usize;
    // (1/2pi) sum_l w3 V exp(i d x3), d = j_q - j_p in [-2 jm, 2 jm]
    let mut fd = vec![C64::new(0.0, 0.0); n1 * n2 * nd];
    let phases: Vec<C64> = (-2 * jm..=2 * jm)
        .flat_map(|d| {
            grid.x3
                .iter()
                .map(move |&x| C64::from_polar(1.0, d as f64 * x))
        })
        .collect();
    let scale = grid.w3 / PERIOD;
    for i12 in 0..n1 * n2 {
        let row = &v.values[i12 * n3..(i12 + 1) * n3];
        for dd in 0..nd {
            let ph = &phases[dd * n3..(dd + 1) * n3];
            let acc: C64 = row.iter().zip(ph).map(|(vv, e)| e * *vv).sum();
            fd[i12 * nd + dd] = acc * scale;
        }
    }
    let mmax = basis.m_max();
    let nmax = basis.n_max();
    let s1 = SineTable::new(mmax, basis.a, &grid.x1);
    let s2 = SineTable::new(nmax, basis.b, &grid.x2);
    let nn = nmax as usize;
    // g[((n * nn + n') * nd + dd) * n1 + i1] = sum_i2 w2 s_n s_n' fd
    let mut g = vec![C64::new(0.0, 0.0); nn * nn * nd * n1];
    let chunk = nd * n1;
    exec.for_each_chunk(&mut g, chunk, |pair, out| {
        let (n, np) = (pair / nn, pair % nn);
        let sa = s2.row(n as u32 + 1);
        let sb = s2.row(np as u32 + 1);
        let w: Vec<f64> = (0..n2).map(|i2| grid.w2[i2] * sa[i2] * sb[i2]).collect();
        for i1 in 0..n1 {
            for dd in 0..nd {
                let mut acc = C64::new(0.0, 0.0);
                for i2 in 0..n2 {
                    acc += fd[(i1 * n2 + i2) * nd + dd] * w[i2];
                }
                out[dd * n1 + i1] = acc;
            }
        }
    });
    let mm = mmax as usize;
    let mut w1: Vec<f64> = vec![0.0; mm * mm * n1];
    for m in 0..mm {
        for mp in 0..mm {
            let (ra, rb) = (s1.row(m as u32 + 1), s1.row(mp as u32 + 1));
            for i1 in 0..n1 {
                w1[(m * mm + mp) * n1 + i1] = grid.w1[i1] * ra[i1] * rb[i1];
            }
        }
    }
    let entries = &basis.entries;
    let rows: Vec<Vec<C64>> = exec.map_range(bsz, |p| {
        let ep = entries[p].index;
        (0..bsz)
            .map(|q| {
                let eq = entries[q].index;
                let dd = (eq.j - ep.j + 2 * jm) as usize;
                let gi = ((ep.n as usize - 1) * nn + (eq.n as usize - 1)) * nd + dd;
                let gv = &g[gi * n1..(gi + 1) * n1];
                let wv = &w1[((ep.m as usize - 1) * mm + (eq.m as usize - 1)) * n1..][..n1];
                let mut acc = C64::new(0.0, 0.0);
                for i1 in 0..n1 {
                    acc += gv[i1] * wv[i1];
                }
                acc
            })
            .collect()
    });
    let mut h = Mat::<C64>::from_fn(bsz, bsz, |p, q| 0.5 * (rows[p][q] + rows[q][p].conj()));
    for p in 0..bsz {
        h[(p, p)] = C64::new(h[(p, p)].re + entries[p].lambda_star, 0.0);
    }
    Ok(GalerkinOperator {
        theta: basis.theta,
        basis: basis.clone(),
        h,
        bound: v.bound,
    })
}

/// Connected components of the coupling graph of `h`, each sorted ascending.
fn coupling_blocks(h: &Mat<C64>, tol: f64) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in 0..n {
        for q in p + 1..n {
            if h[(p, q)].norm() > tol {
                let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                if rp != rq {
                    parent[rp.max(rq)] = rp.min(rq);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for p in 0..n {
        let r = find(&mut parent, p);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(p);
    }
    blocks
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Truncation {
    pub basis_size: usize,
    pub k_keep: usize,
    pub modes: CrossModes,
    pub j_max: u32,
}

/// Kept eigenpairs: `eigenvalues[k]` with coefficient column `k` in the raw basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSolution {
    pub schema: u32,
    pub theta: QuasiMomentum,
    pub basis: CellBasis,
    pub truncation: Truncation,
    pub bound: f64,
    pub eigenvalues: Vec<f64>,
    /// Column-major `B x k_keep`.
    pub coeffs: Vec<C64>,
    pub blocks: usize,
    pub max_residual: f64,
}

impl EigenSolution {
    pub fn basis_size(&self) -> usize {
        self.truncation.basis_size
    }

    pub fn k_keep(&self) -> usize {
        self.truncation.k_keep
    }

    pub fn column(&self, k: usize) -> &[C64] {
        let b = self.basis_size();
        &self.coeffs[k * b..(k + 1) * b]
    }

    /// Value of the `k`-th eigenfunction at an interior point.
    pub fn eval_mode(&self, k: usize, x: [f64; 3]) -> C64 {
        self.column(k)
            .iter()
            .enumerate()
            .map(|(p, c)| c * self.basis.eval(p, x))
            .sum()
    }

    /// Raw-basis coefficients of `sum_k beta_k phi_k`.
    pub fn combine(&self, beta: &[C64]) -> Vec<C64> {
        let b = self.basis_size();
        let mut out = vec![C64::new(0.0, 0.0); b];
        for (k, bk) in beta.iter().enumerate() {
            if *bk == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.column(k)) {
                *o += c * bk;
            }
        }
        out
    }

    /// `(f | phi_k)` from raw-basis projections `(f | e_p)`.
    pub fn modal(&self, raw: &[C64]) -> Vec<C64> {
        (0..self.k_keep())
            .map(|k| self.column(k).iter().zip(raw).map(|(c, f)| c.conj() * f).sum())
            .collect()
    }

    /// Bilinear `int phi_k f` from raw-basis bilinear projections `int e_p f`.
    pub fn modal_bilinear(&self, raw: &[C64]) -> Vec<C64> {
        (0..self.k_keep())
            .map(|k| self.column(k).iter().zip(raw).map(|(c, f)| c * f).sum())
            .collect()
    }
}

pub fn eigensolve(op: &GalerkinOperator, k_keep: usize) -> Result<EigenSolution> {
    eigensolve_with(op, k_keep, Execution::default())
}

pub fn eigensolve_with(op: &GalerkinOperator, k_keep: usize, exec: Execution) -> Result<EigenSolution> {
    let bsz = op.size();
    if k_keep == 0 || k_keep > bsz {
        return Err(Error::Invalid(format!("k_keep = {k_keep} must lie in 1..={bsz}")));
    }
    let blocks = coupling_blocks(&op.h, BLOCK_RTOL * (1.0 + op.bound));
    struct Part {
        lams: Vec<f64>,
        vecs: Mat<C64>,
        residual: f64,
    }
    let parts: Vec<Result<Part>> = exec.map(&blocks, |idx| {
        let n = idx.len();
        let hb = Mat::<C64>::from_fn(n, n, |i, j| op.h[(idx[i], idx[j])]);
        if n == 1 {
            return Ok(Part {
                lams: vec![hb[(0, 0)].re],
                vecs: Mat::from_fn(1, 1, |_, _| C64::new(1.0, 0.0)),
                residual: 0.0,
            });
        }
        let evd = hb.self_adjoint_eigen(Side::Lower).map_err(|e| {
            let diag_span = (0..n).map(|i| hb[(i, i)].re).fold((f64::MAX, f64::MIN), |(lo, hi), d| (lo.min(d), hi.max(d)));
            Error::Eigen(format!(
                "block of size {n} did not converge ({e:?}); diagonal range [{}, {}], Frobenius norm {}",
                diag_span.0, diag_span.1, hb.norm_l2()
            ))
        })?;
        let u = evd.U().to_owned();
        let lams: Vec<f64> = (0..n).map(|k| evd.S()[k].re).collect();
        let hu = &hb * &u;
        let mut residual: f64 = 0.0;
        for k in 0..n {
            let mut r2 = 0.0;
            for i in 0..n {
                r2 += (hu[(i, k)] - u[(i, k)] * lams[k]).norm_sqr();
            }
            residual = residual.max(r2.sqrt() / (lams[k].abs() + 1.0));
        }
        Ok(Part { lams, vecs: u, residual })
    });
    let parts: Vec<Part> = parts.into_iter().collect::<Result<_>>()?;
    let mut order: Vec<(f64, usize, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(bi, p)| p.lams.iter().enumerate().map(move |(li, l)| (*l, bi, li)))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    order.truncate(k_keep);

    let max_residual = parts.iter().map(|p| p.residual).fold(0.0, f64::max);
    if max_residual > 1e-9 {
        return Err(Error::Eigen(format!(
            "relative residual {max_residual:e} exceeds 1e-9"
        )));
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); bsz * k_keep];
    let mut eigenvalues = Vec::with_capacity(k_keep);
    for (k, (lam, bi, li)) in order.iter().enumerate() {
        eigenvalues.push(*lam);
        let col = &mut coeffs[k * bsz..(k + 1) * bsz];
        for (i, &p) in blocks[*bi].iter().enumerate() {
            col[p] = parts[*bi].vecs[(i, *li)];
        }
        fix_phase(col);
    }
    Ok(EigenSolution {
        schema: SCHEMA_VERSION,
        theta: op.theta,
        basis: op.basis.clone(),
        truncation: Truncation {
            basis_size: bsz,
            k_keep,
            modes: op.basis.modes.clone(),
            j_max: op.basis.j_max,
        },
        bound: op.bound,
        eigenvalues,
        coeffs,
        blocks: blocks.len(),
        max_residual,
    })
}

/// Rotates the column so that its largest-magnitude entry (first on ties) is
/// real and positive.
pub fn fix_phase(col: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, c) in col.iter().enumerate() {
        let a = c.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let rot = col[best].conj() / best_abs;
        for c in col.iter_mut() {
            *c *= rot;
        }
        col[best] = C64::new(col[best].re, 0.0);
    }
}

/// Index ranges of eigenvalue clusters with consecutive gaps below `tol`.
pub fn clusters(eigenvalues: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=eigenvalues.len() {
        if k == eigenvalues.len() || eigenvalues[k] - eigenvalues[k - 1] >= tol {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Evaluates normal derivatives on `Gamma` of functions given by raw-basis
/// coefficients, face by face, without forming the `B x N_Gamma` matrix.
#[derive(Clone, Debug)]
pub struct TraceEvaluator {
    basis: CellBasis,
    grid: GammaGrid,
    /// sine tables on the tangential nodes of the x1-faces (variable x2) and x2-faces (variable x1)
    s_on_x1faces: SineTable,
    s_on_x2faces: SineTable,
    /// `exp(i kappa_j x3_l) / sqrt(2 pi)`, row `[j + j_max][l]`
    e3: Vec<C64>,
}

impl TraceEvaluator {
    pub fn new(basis: &CellBasis, grid: &GammaGrid) -> Result<Self> {
        if basis.a != grid.spec.a || basis.b != grid.spec.b {
            return Err(Error::GridMismatch("basis and boundary grid describe different cells".into()));
        }
        let jm = basis.j_max as i32;
        let mut e3 = Vec::new();
        for j in -jm..=jm {
            let kap = basis.theta.kappa(j);
            e3.extend(grid.x3.iter().map(|&x| C64::from_polar(1.0 / PERIOD.sqrt(), kap * x)));
        }
        Ok(TraceEvaluator {
            basis: basis.clone(),
            grid: grid.clone(),
            s_on_x1faces: SineTable::new(basis.n_max(), basis.b, &grid.t2),
            s_on_x2faces: SineTable::new(basis.m_max(), basis.a, &grid.t1),
            e3,
        })
    }

    pub fn grid(&self) -> &GammaGrid {
        &self.grid
    }

    /// `d/dn sum_p c_p e_p` on every boundary node.
    pub fn normal_derivative(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        if coeffs.len() != self.basis.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.basis.len()
            )));
        }
        let (a, b) = (self.basis.a, self.basis.b);
        let jm = self.basis.j_max as i32;
        let nj = 2 * jm as usize + 1;
        let n3 = self.grid.x3.len();
        let mut out = vec![C64::new(0.0, 0.0); self.grid.len()];
        for face in Face::ALL {
            let (table, tang_max) = match face {
                Face::X1Lo | Face::X1Hi => (&self.s_on_x1faces, self.basis.n_max()),
                Face::X2Lo | Face::X2Hi => (&self.s_on_x2faces, self.basis.m_max()),
            };
            let nt = tang_max as usize;
            let mut d = vec![C64::new(0.0, 0.0); nt * nj];
            for (p, e) in self.basis.entries.iter().enumerate() {
                let c = coeffs[p];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let idx = e.index;
                let (normal_k, len, tang) = match face {
                    Face::X1Lo | Face::X1Hi => (idx.m, a, idx.n),
                    Face::X2Lo | Face::X2Hi => (idx.n, b, idx.m),
                };
                let slope = (2.0 / len).sqrt() * normal_k as f64 * PI / len;
                let f = match face {
                    Face::X1Lo | Face::X2Lo => -slope,
                    Face::X1Hi | Face::X2Hi => {
                        if normal_k % 2 == 0 {
                            slope
                        } else {
                            -slope
                        }
                    }
                };
                d[(tang as usize - 1) * nj + (idx.j + jm) as usize] += c * f;
            }
            let range = self.grid.face_range(face);
            let ntp = table.npts;
            for it in 0..ntp {
                let mut tj = vec![C64::new(0.0, 0.0); nj];
                for t in 0..nt {
                    let s = table.row(t as u32 + 1)[it];
                    for (jj, acc) in tj.iter_mut().enumerate() {
                        *acc += d[t * nj + jj] * s;
                    }
                }
                let base = range.start + it * n3;
                for l in 0..n3 {
                    let mut acc = C64::new(0.0, 0.0);
                    for jj in 0..nj {
                        acc += tj[jj] * self.e3[jj * n3 + l];
                    }
                    out[base + l] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// Boundary spectral data: eigenvalues and normal-derivative traces on `Gamma`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundarySpectralData {
    pub schema: u32,
    pub theta: QuasiMomentum,
    pub grid: GammaGridSpec,
    pub truncation: Truncation,
    pub lambdas: Vec<f64>,
    /// `psi[k][node]`
    pub psi: Vec<Vec<C64>>,
    /// Opaque tag of the generating potential.
    pub provenance: String,
}

impl BoundarySpectralData {
    pub fn k_keep(&self) -> usize {
        self.lambdas.len()
    }

    pub fn gamma_grid(&self) -> Result<GammaGrid> {
        GammaGrid::from_spec(&self.grid)
    }

    pub fn check_grid(&self, grid: &GammaGrid) -> Result<()> {
        if grid.spec != self.grid {
            return Err(Error::GridMismatch("boundary data sampled on a different grid".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.psi.len() != self.lambdas.len() || self.k_keep() > self.truncation.basis_size {
            return Err(Error::Dimension("inconsistent boundary data truncation".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid("boundary data eigenvalues not ascending".into()));
        }
        let n = 2 * (self.grid.n1 + self.grid.n2) * self.grid.n3;
        if self.psi.iter().any(|p| p.len() != n || p.iter().any(|z| !z.is_finite())) {
            return Err(Error::Dimension("trace sample count does not match grid".into()));
        }
        Ok(())
    }
}

pub fn boundary_traces(sol: &EigenSolution, grid: &GammaGrid, provenance: &str) -> Result<BoundarySpectralData> {
    boundary_traces_with(sol, grid, provenance, Execution::default())
}

pub fn boundary_traces_with(
    sol: &EigenSolution,
    grid: &GammaGrid,
    provenance: &str,
    exec: Execution,
) -> Result<BoundarySpectralData> {
    let ev = TraceEvaluator::new(&sol.basis, grid)?;
    let psi: Vec<Vec<C64>> = exec
        .map_range(sol.k_keep(), |k| ev.normal_derivative(sol.column(k)))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(BoundarySpectralData {
        schema: SCHEMA_VERSION,
        theta: sol.theta,
        grid: grid.spec.clone(),
        truncation: sol.truncation.clone(),
        lambdas: sol.eigenvalues.clone(),
        psi,
        provenance: provenance.to_string(),
    })
}

/// Everything needed to run the forward problem at one quasi-momentum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSpec {
    pub modes: CrossModes,
    pub j_max: u32,
    pub k_keep: usize,
}

pub struct ForwardRun {
    pub basis: CellBasis,
    pub solution: EigenSolution,
    pub bsd: BoundarySpectralData,
}

/// Basis, assembly, eigensolve and traces in one call.
pub fn forward(
    geom: &CellGeometry,
    theta: QuasiMomentum,
    v: &Potential,
    trunc: &TruncationSpec,
    provenance: &str,
    exec: Execution,
) -> Result<ForwardRun> {
    let basis = cell_basis(theta, geom, &trunc.modes, trunc.j_max)?;
    let y = YGrid::new(geom);
    let gv = v.sample(&y)?;
    let op = assemble_with(&basis, &y, &gv, exec)?;
    let k_keep = trunc.k_keep.min(basis.len());
    let solution = eigensolve_with(&op, k_keep, exec)?;
    let bsd = boundary_traces_with(&solution, &GammaGrid::new(geom), provenance, exec)?;
    Ok(ForwardRun { basis, solution, bsd })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandStructure {
    pub thetas: Vec<f64>,
    /// `bands[i][k]` is `lambda_k(theta_i)`.
    pub bands: Vec<Vec<f64>>,
    /// Range `[min, max]` of each band over the theta grid.
    pub ranges: Vec<(f64, f64)>,
}

impl BandStructure {
    pub fn band(&self, k: usize) -> Vec<f64> {
        self.bands.iter().map(|b| b[k]).collect()
    }
}

pub fn band_sweep(
    geom: &CellGeometry,
    v: &Potential,
    thetas: &[QuasiMomentum],
    k: usize,
    modes: &CrossModes,
    j_max: u32,
    exec: Execution,
) -> Result<BandStructure> {
    if thetas.is_empty() {
        return Err(Error::Invalid("band sweep needs at least one theta".into()));
    }
    let y = YGrid::new(geom);
    let gv = v.sample(&y)?;
    // Parallelism is spent on the theta points; each point runs sequentially.
    let bands: Vec<Vec<f64>> = exec
        .map(thetas, |th| -> Result<Vec<f64>> {
            let basis = cell_basis(*th, geom, modes, j_max)?;
            let op = assemble_with(&basis, &y, &gv, Execution::Sequential)?;
            let sol = eigensolve_with(&op, k.min(basis.len()), Execution::Sequential)?;
            Ok(sol.eigenvalues)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let kk = bands.iter().map(|b| b.len()).min().unwrap_or(0);
    let ranges = (0..kk)
        .map(|i| {
            bands.iter().fold((f64::MAX, f64::MIN), |(lo, hi), b| (lo.min(b[i]), hi.max(b[i])))
        })
        .collect();
    Ok(BandStructure {
        thetas: thetas.iter().map(|t| t.theta()).collect(),
        bands,
        ranges,
    })
}

/// A function on `omega x R` supported in cells `first_cell .. first_cell + cells.len()`,
/// each cell sampled on the same interior grid shifted by `2 pi k`.
#[derive(Clone, Debug)]
pub struct CellSamples {
    pub first_cell: i64,
    pub cells: Vec<Vec<C64>>,
}

/// `(U f)_theta(x', x3) = sum_k exp(-i k theta) f(x', x3 + 2 pi k)`.
pub fn floquet_transform(f: &CellSamples, theta: QuasiMomentum) -> Result<Vec<C64>> {
    let n = f.cells.first().map(|c| c.len()).unwrap_or(0);
    if f.cells.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("cells sampled on different grids".into()));
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, cell) in f.cells.iter().enumerate() {
        let k = f.first_cell + i as i64;
        let ph = C64::from_polar(1.0, -(k as f64) * theta.theta());
        for (o, v) in out.iter_mut().zip(cell) {
            *o += ph * v;
        }
    }
    Ok(out)
}
