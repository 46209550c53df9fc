mod common;

use std::f64::consts::PI;

use common::*;
use waveguide_spectral::forward::*;
use waveguide_spectral::geometry::*;
use waveguide_spectral::Execution;

fn op_for(v: &Potential, theta: f64, modes: CrossModes, j_max: u32) -> GalerkinOperator {
    let g = square();
    let basis = cell_basis(q(theta), &g, &modes, j_max).unwrap();
    let y = YGrid::new(&g);
    assemble(&basis, &y, &v.sample(&y).unwrap()).unwrap()
}

#[test]
fn free_and_constant_operators_are_diagonal() {
    let zero = op_for(&Potential::zero(), 1.0, CrossModes::Lowest(8), 2);
    let c = op_for(&Potential::constant(0.7), 1.0, CrossModes::Lowest(8), 2);
    let ls = zero.basis.lambda_stars();
    for p in 0..zero.size() {
        for r in 0..zero.size() {
            let want = if p == r { ls[p] } else { 0.0 };
            assert!((zero.h[(p, r)] - want).norm() < 1e-12);
            assert!((c.h[(p, r)] - want - if p == r { 0.7 } else { 0.0 }).norm() < 1e-10);
        }
    }
}

#[test]
fn cos_x3_couples_neighbouring_j() {
    let v = Potential::from_terms(vec![term(1.0, (Trig::Cos, 0.0), (Trig::Cos, 0.0), (Trig::Cos, 1))]);
    let op = op_for(&v, 0.0, CrossModes::Lowest(3), 1);
    let idx = |j| op.basis.entries.iter().position(|e| e.index == BasisIndex { m: 1, n: 1, j }).unwrap();
    let (p, r) = (idx(0), idx(1));
    assert!((op.h[(p, r)] - C64::new(0.5, 0.0)).norm() < 1e-10);
    assert!((op.h[(r, p)] - C64::new(0.5, 0.0)).norm() < 1e-10);
    assert!(op.h[(p, p)].norm() - op.basis.entries[p].lambda_star < 1e-10);
}

#[test]
fn operator_is_hermitian_with_bounded_diagonal() {
    let op = op_for(&generic(), 2.0, CrossModes::Lowest(12), 2);
    for p in 0..op.size() {
        assert!(op.h[(p, p)].re >= op.basis.entries[p].lambda_star - op.bound);
        for r in 0..op.size() {
            assert!((op.h[(p, r)] - op.h[(r, p)].conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn grid_mismatch_is_an_error() {
    let g = square();
    let basis = cell_basis(q(0.0), &g, &CrossModes::Lowest(4), 1).unwrap();
    let y = YGrid::new(&g);
    let other = YGrid::new(&g.clone().with_interior(8, 8, 8).unwrap());
    let v = trig3().sample(&other).unwrap();
    assert!(matches!(assemble(&basis, &y, &v), Err(waveguide_spectral::Error::Dimension(_))));
}

#[test]
fn free_spectrum_is_exact_and_shift_covariant() {
    let t = small_trunc(40);
    let r0 = run(&Potential::zero(), 1.0, &t);
    let rc = run(&Potential::constant(0.7), 1.0, &t);
    let mut ls = r0.basis.lambda_stars();
    ls.sort_by(f64::total_cmp);
    for k in 0..40 {
        assert_eq!(r0.solution.eigenvalues[k], ls[k]);
        assert!((rc.solution.eigenvalues[k] - ls[k] - 0.7).abs() < 1e-10);
    }
    for k in 0..40 {
        let d: f64 = r0.bsd.psi[k].iter().zip(&rc.bsd.psi[k]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-9);
    }
}

#[test]
fn eigen_solution_invariants() {
    let r = run(&generic(), 0.5, &small_trunc(60));
    let s = &r.solution;
    let b = s.basis_size();
    assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(s.eigenvalues[0] >= -s.bound);
    assert!(s.max_residual <= 1e-9);
    for k in 0..s.k_keep() {
        let col = s.column(k);
        let big = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(big.im == 0.0 && big.re > 0.0);
        for l in k..s.k_keep() {
            let ip: C64 = s.column(l).iter().zip(col).map(|(x, y)| x.conj() * y).sum();
            let want = if k == l { 1.0 } else { 0.0 };
            assert!((ip - want).norm() < 1e-10);
        }
    }
    assert_eq!(s.coeffs.len(), b * s.k_keep());
}

#[test]
fn k_keep_out_of_range() {
    let op = op_for(&trig3(), 0.0, CrossModes::Lowest(4), 1);
    assert!(eigensolve(&op, 0).is_err());
    assert!(eigensolve(&op, 13).is_err());
    assert!(eigensolve(&op, 12).is_ok());
}

#[test]
fn eigenvalues_converge_under_refinement() {
    let coarse = run(&trig3(), 1.0, &TruncationSpec { modes: CrossModes::Lowest(16), j_max: 2, k_keep: 10 });
    let fine = run(&trig3(), 1.0, &TruncationSpec { modes: CrossModes::Lowest(32), j_max: 4, k_keep: 10 });
    for k in 0..10 {
        let d = (coarse.solution.eigenvalues[k] - fine.solution.eigenvalues[k]).abs();
        assert!(d < 1e-2, "k={k} d={d}");
    }
}

#[test]
fn first_free_trace_closed_form() {
    let r = run(&Potential::zero(), 0.0, &small_trunc(5));
    let grid = GammaGrid::new(&square());
    let psi = &r.bsd.psi[0];
    for i in grid.face_range(Face::X1Lo) {
        let x = grid.points()[i];
        let want = -(2.0 / PI) * x[1].sin() / (2.0 * PI).sqrt();
        assert!((psi[i] - C64::new(want, 0.0)).norm() < 1e-12);
    }
    for p in &r.bsd.psi {
        assert!(grid.norm(p).unwrap() > 0.0);
    }
}

#[test]
fn traces_match_pointwise_basis_derivatives() {
    let r = run(&generic(), 3.0, &small_trunc(8));
    let grid = GammaGrid::new(&square());
    for k in [0, 7] {
        let col = r.solution.column(k);
        for i in (0..grid.len()).step_by(97) {
            let face = grid.face_of(i);
            let x = grid.points()[i];
            let want: C64 = (0..col.len()).map(|p| col[p] * r.basis.normal_derivative(p, face, x)).sum();
            assert!((r.bsd.psi[k][i] - want).norm() < 1e-10);
        }
    }
}

#[test]
fn eigenfunctions_are_quasi_periodic() {
    let th = 4.0;
    let r = run(&generic(), th, &small_trunc(6));
    let ph = C64::from_polar(1.0, th);
    for k in 0..6 {
        let a = r.solution.eval_mode(k, [1.0, 2.0, 2.0 * PI]);
        let b = r.solution.eval_mode(k, [1.0, 2.0, 0.0]);
        assert!((a - ph * b).norm() < 1e-10);
    }
}

#[test]
fn free_bands() {
    let g = square();
    let thetas: Vec<QuasiMomentum> = (0..8).map(|i| q(i as f64 * PI / 4.0)).collect();
    let modes = CrossModes::Lowest(6);
    let free = band_sweep(&g, &Potential::zero(), &thetas, 6, &modes, 2, Execution::default()).unwrap();
    assert_eq!(free.bands[0][0], 2.0);
    assert!((free.bands[4][0] - 2.25).abs() < 1e-14);
    for k in 0..6 {
        let b = free.band(k);
        assert!(b.iter().any(|x| (x - b[0]).abs() > 1e-6), "band {k} is flat");
    }
    let shifted = band_sweep(&g, &Potential::constant(-0.3), &thetas, 6, &modes, 2, Execution::Sequential).unwrap();
    for (a, b) in free.bands.iter().flatten().zip(shifted.bands.iter().flatten()) {
        assert!((a - 0.3 - b).abs() < 1e-9);
    }
    assert!(free.bands.iter().all(|b| b.windows(2).all(|w| w[0] <= w[1])));
    assert!(band_sweep(&g, &Potential::zero(), &[], 6, &modes, 2, Execution::default()).is_err());
}

#[test]
fn sequential_and_parallel_agree() {
    let g = square();
    let thetas: Vec<QuasiMomentum> = (0..4).map(|i| q(i as f64)).collect();
    let m = CrossModes::Lowest(8);
    let a = band_sweep(&g, &generic(), &thetas, 10, &m, 2, Execution::Sequential).unwrap();
    let b = band_sweep(&g, &generic(), &thetas, 10, &m, 2, Execution::Parallel).unwrap();
    assert_eq!(a.bands, b.bands);
    let ra = forward(&g, q(1.0), &generic(), &small_trunc(10), "x", Execution::Sequential).unwrap();
    let rb = forward(&g, q(1.0), &generic(), &small_trunc(10), "x", Execution::Parallel).unwrap();
    assert_eq!(ra.bsd.lambdas, rb.bsd.lambdas);
    assert_eq!(ra.bsd.psi, rb.bsd.psi);
}

#[test]
fn floquet_transform_examples() {
    let g = square();
    let y = YGrid::new(&g.clone().with_interior(6, 6, 8).unwrap());
    let cell = |shift: f64| y.sample(|x| C64::new(x[0].sin() * (x[2] + shift).cos(), x[1]));
    let single = CellSamples { first_cell: 0, cells: vec![cell(0.0)] };
    assert_eq!(floquet_transform(&single, q(1.3)).unwrap(), single.cells[0]);

    let th = 2.2;
    let second = CellSamples { first_cell: 1, cells: vec![cell(0.0)] };
    let u = floquet_transform(&second, q(th)).unwrap();
    let ph = C64::from_polar(1.0, -th);
    assert!(u.iter().zip(&second.cells[0]).all(|(a, b)| (a - ph * b).norm() < 1e-14));

    let two = CellSamples { first_cell: 0, cells: vec![cell(0.0), cell(2.0 * PI + 0.5)] };
    let norm2 = |v: &[C64]| (0..y.len()).map(|i| v[i].norm_sqr() * y.point(i).1).sum::<f64>();
    let total = norm2(&two.cells[0]) + norm2(&two.cells[1]);
    let n = 16;
    let avg: f64 = (0..n).map(|i| norm2(&floquet_transform(&two, q(2.0 * PI * i as f64 / n as f64)).unwrap())).sum::<f64>() / n as f64;
    assert!((avg - total).abs() < 0.02 * total);
}

#[test]
fn boundary_data_json_roundtrip() {
    let r = run(&trig3(), 1.0, &small_trunc(4));
    let s = serde_json::to_string(&r.bsd).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert!(v["psi"][0][0].is_array() && v["psi"][0][0].as_array().unwrap().len() == 2);
    let back: BoundarySpectralData = serde_json::from_str(&s).unwrap();
    back.validate().unwrap();
    assert_eq!(back.lambdas, r.bsd.lambdas);
    assert_eq!(back.psi, r.bsd.psi);
    let sol: EigenSolution = serde_json::from_str(&serde_json::to_string(&r.solution).unwrap()).unwrap();
    assert_eq!(sol.coeffs, r.solution.coeffs);
}

#[test]
fn clusters_group_close_values() {
    let c = clusters(&[1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0], CLUSTER_TOL);
    assert_eq!(c, vec![0..2, 2..3, 3..5]);
}
