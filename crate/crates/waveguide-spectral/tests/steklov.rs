mod common;

use std::f64::consts::PI;

use common::*;
use waveguide_spectral::forward::*;
use waveguide_spectral::geometry::*;
use waveguide_spectral::steklov::*;
use waveguide_spectral::zeta::*;
use waveguide_spectral::Error;

fn free_run() -> ForwardRun {
    run(&Potential::zero(), 1.0, &small_trunc(40))
}

fn probe(theta: f64) -> ZetaPair {
    make_zeta([1.0, 0.0], 1, q(theta), 0.9).unwrap()
}

/// `(exp(zeta.x) | e_p)` in closed form.
fn exp_coeff(basis: &CellBasis, p: usize, z: &[C64; 3]) -> C64 {
    let e = basis.entries[p];
    let (a, b) = (basis.a, basis.b);
    let kap = basis.theta.kappa(e.index.j);
    (2.0 / a).sqrt()
        * trig_exp_integral(Trig::Sin, e.index.m as f64 * PI / a, z[0], a)
        * (2.0 / b).sqrt()
        * trig_exp_integral(Trig::Sin, e.index.n as f64 * PI / b, z[1], b)
        * exp_integral(z[2] - C64::new(0.0, kap), 2.0 * PI)
        / (2.0 * PI).sqrt()
}

#[test]
fn pairing_examples() {
    let r = free_run();
    let grid = GammaGrid::new(&square());
    let psi = &r.bsd.psi[3];
    let a = boundary_pairing(&BoundaryDatum::new(psi.clone()), psi, &grid).unwrap();
    assert!((a.re - grid.norm(psi).unwrap().powi(2)).abs() < 1e-12 * a.re && a.im.abs() < 1e-12 * a.re);

    let other = &r.bsd.psi[7];
    let c = grid.inner(other, psi).unwrap() / grid.inner(psi, psi).unwrap();
    let perp: Vec<C64> = other.iter().zip(psi).map(|(o, p)| o - c * p).collect();
    let scale = grid.norm(&perp).unwrap() * grid.norm(psi).unwrap();
    assert!(boundary_pairing(&BoundaryDatum::new(perp), psi, &grid).unwrap().norm() < 1e-12 * scale);

    let short = BoundaryDatum::new(vec![C64::new(1.0, 0.0); 3]);
    assert!(matches!(boundary_pairing(&short, psi, &grid), Err(Error::GridMismatch(_))));
}

#[test]
fn pairing_converges_under_grid_refinement() {
    let g = square();
    let fine = g.clone().with_boundary(64, 64, 32).unwrap();
    let r = free_run();
    let zp = probe(1.0);
    let vals: Vec<Vec<C64>> = [g, fine]
        .iter()
        .map(|geo| {
            let grid = GammaGrid::new(geo);
            let ev = TraceEvaluator::new(&r.basis, &grid).unwrap();
            let f = BoundaryDatum::exponential(&zp.zeta0, &grid);
            (0..10).map(|k| boundary_pairing(&f, &ev.normal_derivative(r.solution.column(k)).unwrap(), &grid).unwrap()).collect()
        })
        .collect();
    for (a, b) in vals[0].iter().zip(&vals[1]) {
        assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()), "{a} {b}");
    }
}

#[test]
fn free_alphas_match_closed_form() {
    let r = free_run();
    let grid = GammaGrid::new(&square());
    let zp = probe(1.0);
    let f = BoundaryDatum::exponential(&zp.zeta0, &grid);
    let sol = solve_bvp(&r.bsd, &grid, &f, zp.lambda).unwrap();
    for k in 0..r.bsd.k_keep() {
        // free eigenvectors are unit vectors of the raw basis
        let p = r.solution.column(k).iter().position(|c| *c == C64::new(1.0, 0.0)).unwrap();
        let want = (zp.lambda - r.basis.entries[p].lambda_star) * exp_coeff(&r.basis, p, &zp.zeta0);
        assert!((sol.alphas[k] - want).norm() < 1e-9 * (1.0 + want.norm()), "k={k}");
        assert!((sol.coeffs[k] - exp_coeff(&r.basis, p, &zp.zeta0)).norm() < 1e-9);
    }
}

#[test]
fn bvp_norm_identity_and_zero_data() {
    let r = run(&trig3(), 1.0, &small_trunc(40));
    let grid = GammaGrid::new(&square());
    let zero = solve_bvp(&r.bsd, &grid, &BoundaryDatum::zero(&grid), C64::new(3.0, 1.0)).unwrap();
    assert!(zero.coeffs.iter().all(|c| c.norm() == 0.0) && zero.norm == 0.0);
    let f = BoundaryDatum::new(r.bsd.psi[0].iter().zip(&r.bsd.psi[5]).map(|(a, b)| a + 0.5 * b).collect());
    let lam = C64::new(-3.0, 0.5);
    let s = solve_bvp(&r.bsd, &grid, &f, lam).unwrap();
    let direct = s.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    assert!((s.norm - direct).abs() <= 4.0 * f64::EPSILON * direct);
}

#[test]
fn bvp_norm_decays_along_negative_lambda() {
    let r = run(&trig3(), 0.0, &small_trunc(40));
    let grid = GammaGrid::new(&square());
    let f = BoundaryDatum::exponential(&probe(0.0).zeta0, &grid);
    let norms: Vec<f64> = (1..=4)
        .map(|i| solve_bvp(&r.bsd, &grid, &f, C64::new(-(10f64.powi(i)), 0.0)).unwrap().norm)
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
    assert!(norms[3] < 1e-2 * norms[0]);
}

#[test]
fn guard_names_offending_mode() {
    let r = free_run();
    let grid = GammaGrid::new(&square());
    let lam = C64::new(r.bsd.lambdas[4] + 1e-8, 0.0);
    match solve_bvp(&r.bsd, &grid, &BoundaryDatum::zero(&grid), lam) {
        Err(Error::NearSpectrum { k, .. }) => assert!(r.bsd.lambdas[k - 1] == r.bsd.lambdas[4]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn difference_trace_properties() {
    let r = run(&generic(), 2.0, &small_trunc(40));
    let grid = GammaGrid::new(&square());
    let f = BoundaryDatum::new(r.bsd.psi[2].clone());
    let l = C64::new(5.0, 2.0);
    let m = C64::new(-30.0, 0.0);
    let same = normal_derivative_difference(&r.bsd, &grid, l, l, &f).unwrap();
    assert!(same.values.iter().all(|v| v.norm() == 0.0));
    let a = normal_derivative_difference(&r.bsd, &grid, l, m, &f).unwrap();
    let b = normal_derivative_difference(&r.bsd, &grid, m, l, &f).unwrap();
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x + y).norm() <= 1e-14 * (1.0 + x.norm())));
    assert_eq!(a.route, TraceRoute::Difference);

    let lim = resolvent_trace_series(&r.bsd, &grid, l, &f).unwrap();
    let devs: Vec<f64> = [-1e2, -1e4, -1e6]
        .iter()
        .map(|&mu| {
            let t = normal_derivative_difference(&r.bsd, &grid, l, C64::new(mu, 0.0), &f).unwrap();
            let d: Vec<C64> = t.values.iter().zip(&lim).map(|(x, y)| x - y).collect();
            grid.norm(&d).unwrap()
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]));
    assert!(devs[2] < 1e-4 * grid.norm(&lim).unwrap());
}

#[test]
fn free_steklov_is_exact_derivative() {
    let r = free_run();
    let g = square();
    let grid = GammaGrid::new(&g);
    let y = YGrid::new(&g);
    let zp = probe(1.0);
    let v = Potential::zero().sample(&y).unwrap();
    let t = steklov_apply_exponential(&r.solution, &r.bsd, &grid, &y, &v, &zp.zeta0, zp.lambda).unwrap();
    assert_eq!(t.route, TraceRoute::Exact);
    assert_eq!(t.values, exponential_normal_derivative(&zp.zeta0, &grid));
}

#[test]
fn steklov_rejects_bad_probes() {
    let r = free_run();
    let g = square();
    let grid = GammaGrid::new(&g);
    let y = YGrid::new(&g);
    let v = trig3().sample(&y).unwrap();
    let zp = probe(1.0);
    let wrong_lambda = zp.lambda + 1.0;
    assert!(matches!(
        steklov_apply_exponential(&r.solution, &r.bsd, &grid, &y, &v, &zp.zeta0, wrong_lambda),
        Err(Error::Inadmissible(_))
    ));
    // zeta1 is admissible only in the starred sense
    let z1 = make_zeta([1.0, 0.0], 1, q(1.0), 0.9).unwrap();
    assert!(steklov_apply_exponential(&r.solution, &r.bsd, &grid, &y, &v, &z1.zeta1, z1.lambda).is_err());
}

#[test]
fn green_consistency_of_modal_coefficients() {
    let g = square();
    let grid = GammaGrid::new(&g);
    let y = YGrid::new(&g);
    let zp = make_zeta([1.0, 0.0], 1, q(1.0), 0.8).unwrap();
    let v = trig3().sample(&y).unwrap();
    let e = waveguide_spectral::steklov::exponential_on_y(&zp.zeta0, &y);
    let f = BoundaryDatum::exponential(&zp.zeta0, &grid);
    let worst: Vec<f64> = [24, 48]
        .iter()
        .map(|&kc| {
            let r = run(&trig3(), 1.0, &TruncationSpec { modes: CrossModes::Lowest(kc), j_max: 3, k_keep: 60 });
            let ep = r.solution.modal(&Projector::new(&r.basis, &y).project(&e, true).unwrap());
            let vep = potential_exponential_modal(&r.solution, &y, &v, &zp.zeta0).unwrap();
            let alphas = solve_bvp(&r.bsd, &grid, &f, zp.lambda).unwrap().alphas;
            (0..10)
                .map(|k| {
                    let lhs = (zp.lambda - r.bsd.lambdas[k]) * ep[k] + vep[k];
                    (lhs - alphas[k]).norm() / (1.0 + alphas[k].norm())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    // interior and boundary routes differ by the truncation of the sine series of exp(zeta.x)
    assert!(worst[0] < 1e-2 && worst[1] < worst[0], "{worst:?}");
}

#[test]
fn steklov_correction_vanishes_along_sweep() {
    let r = run(&trig3(), 0.0, &TruncationSpec { modes: CrossModes::Box { m_max: 8, n_max: 24 }, j_max: 1, k_keep: 576 });
    let g = square().with_interior(24, 64, 8).unwrap().with_boundary(24, 64, 8).unwrap();
    let grid = GammaGrid::new(&g);
    let y = YGrid::new(&g);
    let v = trig3().sample(&y).unwrap();
    let r = {
        let bsd = boundary_traces(&r.solution, &grid, "t").unwrap();
        (r.solution, bsd)
    };
    let corr: Vec<f64> = [0.8, 0.95, 0.99]
        .iter()
        .map(|&s| {
            let zp = make_zeta([1.0, 0.0], 1, q(0.0), s).unwrap();
            let t = steklov_apply_exponential(&r.0, &r.1, &grid, &y, &v, &zp.zeta0, zp.lambda).unwrap();
            let d: Vec<C64> = t
                .values
                .iter()
                .zip(exponential_normal_derivative(&zp.zeta0, &grid))
                .map(|(a, b)| a - b)
                .collect();
            grid.norm(&d).unwrap()
        })
        .collect();
    assert!(corr.windows(2).all(|w| w[1] < w[0]), "{corr:?}");
}

#[test]
fn s_functional_examples() {
    let g = square();
    let grid = GammaGrid::new(&g);
    let zp = probe(1.0);
    let zero = vec![C64::new(0.0, 0.0); grid.len()];
    assert_eq!(s_functional(&zero, &zp.zeta1, q(1.0), &grid).unwrap(), C64::new(0.0, 0.0));

    let d = exponential_normal_derivative(&zp.zeta0, &grid);
    let s = s_functional(&d, &zp.zeta1, q(1.0), &grid).unwrap();
    let w = zp.sum();
    let (a, b) = (PI, PI);
    let x3 = exp_integral(w[2], 2.0 * PI);
    let faces = -zp.zeta0[0] * exp_integral(w[1], b) * x3
        + zp.zeta0[0] * (w[0] * a).exp() * exp_integral(w[1], b) * x3
        - zp.zeta0[1] * exp_integral(w[0], a) * x3
        + zp.zeta0[1] * (w[1] * b).exp() * exp_integral(w[0], a) * x3;
    assert!((s - faces).norm() < 1e-10 * (1.0 + faces.norm()), "{s} {faces}");
    let green = zp.cross_defect() * cell_exp_integral(w, a, b);
    assert!((s - green).norm() < 1e-8 * (1.0 + green.norm()));

    let t2: Vec<C64> = d.iter().map(|x| x * C64::new(0.3, -2.0)).collect();
    let sum: Vec<C64> = d.iter().zip(&t2).map(|(x, y)| x + y).collect();
    let lin = s_functional(&sum, &zp.zeta1, q(1.0), &grid).unwrap()
        - s - s_functional(&t2, &zp.zeta1, q(1.0), &grid).unwrap();
    assert!(lin.norm() < 1e-12 * (1.0 + s.norm()));
    assert!(s_functional(&d, &zp.zeta0, q(1.0), &grid).is_err());
}

#[test]
fn free_identity_residual_vanishes() {
    let r = free_run();
    let g = square();
    for th in [0.0, 1.0] {
        let zp = make_zeta([1.0, 0.5], 1, q(th), 0.9).unwrap();
        let rr = if th == 1.0 { r.clone_parts() } else { run(&Potential::zero(), 0.0, &small_trunc(40)).clone_parts() };
        let iso = isozaki_identity_residual(&Potential::zero(), zp.lambda, &zp.zeta0, &zp.zeta1, &rr.0, &rr.1, &YGrid::new(&g), &GammaGrid::new(&g)).unwrap();
        assert!(iso.residual.norm() < 1e-8, "{:?}", iso);
        assert_eq!(iso.remainder, C64::new(0.0, 0.0));
    }
}

trait Parts {
    fn clone_parts(&self) -> (EigenSolution, BoundarySpectralData);
}

impl Parts for ForwardRun {
    fn clone_parts(&self) -> (EigenSolution, BoundarySpectralData) {
        (self.solution.clone(), self.bsd.clone())
    }
}

#[test]
fn identity_residual_shrinks_with_truncation() {
    let g = square();
    let (y, grid) = (YGrid::new(&g), GammaGrid::new(&g));
    let zp = make_zeta([1.0, 0.0], 1, q(0.5), 0.8).unwrap();
    let res: Vec<f64> = [12, 24, 48]
        .iter()
        .map(|&k| {
            let r = run(&trig3(), 0.5, &TruncationSpec { modes: CrossModes::Lowest(k), j_max: 2, k_keep: 5 * k });
            isozaki_identity_residual(&trig3(), zp.lambda, &zp.zeta0, &zp.zeta1, &r.solution, &r.bsd, &y, &grid)
                .unwrap()
                .residual
                .norm()
        })
        .collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
}

#[test]
fn z_mu_decays() {
    let g = square();
    let grid = GammaGrid::new(&g);
    let t = small_trunc(60);
    let r1 = run(&trig3(), 1.0, &t);
    let r2 = run(&generic(), 1.0, &t);
    let f = BoundaryDatum::exponential(&probe(1.0).zeta0, &grid);
    let mus: Vec<f64> = (1..=5).map(|i| -(10f64.powi(i))).collect();
    let rows = z_mu_decay((&r1.solution, &r1.bsd), (&r2.solution, &r2.bsd), &grid, &f, &mus).unwrap();
    assert!(rows.windows(2).all(|w| w[1].norm_y < w[0].norm_y && w[1].norm_gamma < w[0].norm_gamma));
    assert!(rows[4].norm_y < 1e-3 * rows[0].norm_y && rows[4].norm_gamma < 1e-3 * rows[0].norm_gamma);

    let same = z_mu_decay((&r1.solution, &r1.bsd), (&r1.solution, &r1.bsd), &grid, &f, &mus[1..]).unwrap();
    assert!(same.iter().all(|r| r.norm_y < 1e-12 && r.norm_gamma < 1e-12));
    let none = z_mu_decay((&r1.solution, &r1.bsd), (&r2.solution, &r2.bsd), &grid, &BoundaryDatum::zero(&grid), &mus[1..]).unwrap();
    assert!(none.iter().all(|r| r.norm_y == 0.0 && r.norm_gamma == 0.0));
    assert!(matches!(
        z_mu_decay((&r1.solution, &r1.bsd), (&r2.solution, &r2.bsd), &grid, &f, &[-1.0]),
        Err(Error::Guard(_))
    ));
}

#[test]
fn bessel_sums_stay_bounded_along_sweep() {
    let r = run(&trig3(), 0.0, &small_trunc(60));
    let grid = GammaGrid::new(&square());
    let mut sums = Vec::new();
    for s in geometric_sweep(1, 2..=8) {
        let zp = make_zeta([1.0, 0.0], 1, q(0.0), s).unwrap();
        let f0 = BoundaryDatum::exponential(&zp.zeta0, &grid);
        let star = zp.zeta1.map(|c| c.conj());
        let f1 = BoundaryDatum::exponential(&star, &grid);
        sums.push(bessel_sum(&r.bsd, &grid, &f0, zp.lambda).unwrap() + bessel_sum(&r.bsd, &grid, &f1, zp.lambda.conj()).unwrap());
    }
    let bound = 1e4;
    assert!(sums.iter().all(|s| s.is_finite() && *s < bound), "{sums:?}");
}
