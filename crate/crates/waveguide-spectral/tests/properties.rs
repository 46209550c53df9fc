mod common;

use std::f64::consts::TAU;
use std::sync::OnceLock;

use common::*;
use proptest::prelude::*;
use waveguide_spectral::forward::*;
use waveguide_spectral::geometry::*;
use waveguide_spectral::inverse::*;
use waveguide_spectral::steklov::*;
use waveguide_spectral::zeta::*;

struct Fixture {
    free: ForwardRun,
    trig: ForwardRun,
    grid: GammaGrid,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| Fixture {
        free: run(&Potential::zero(), 0.0, &small_trunc(60)),
        trig: run(&trig3(), 0.0, &small_trunc(60)),
        grid: GammaGrid::new(&square()),
    })
}

fn trig_kind() -> impl Strategy<Value = Trig> {
    prop_oneof![Just(Trig::Cos), Just(Trig::Sin)]
}

fn trig_term() -> impl Strategy<Value = TrigTerm> {
    (-0.6..0.6f64, trig_kind(), 0u32..4, trig_kind(), 0u32..4, trig_kind(), 0i32..3).prop_map(
        |(coef, f1, k1, f2, k2, f3, j)| term(coef, (f1, k1 as f64), (f2, k2 as f64), (f3, j)),
    )
}

fn potential() -> impl Strategy<Value = Potential> {
    prop::collection::vec(trig_term(), 1..4).prop_map(Potential::from_terms)
}

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

/// Columns of a random unitary, by Gram-Schmidt on a random complex matrix.
fn unitary(raw: &[C64], n: usize) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for c in 0..n {
        let mut v: Vec<C64> = (0..n).map(|r| raw[c * n + r] + if r == c { 2.0 } else { 0.0 }).collect();
        for u in &cols {
            let d: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= d * y;
            }
        }
        let nrm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.iter().map(|x| x / nrm).collect());
    }
    cols
}

fn probe(xi: [f64; 2], j: i32, s: f64) -> ZetaPair {
    make_zeta(xi, j, q(0.0), s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn poincare_on_random_combinations(theta in 0.0..TAU, coeffs in prop::collection::vec(c64(), 18)) {
        let g = square().with_interior(12, 12, 8).unwrap();
        let basis = cell_basis(q(theta), &g, &CrossModes::Lowest(6), 1).unwrap();
        let y = YGrid::new(&g);
        let u2 = y.integrate(|x| {
            let u: C64 = (0..basis.len()).map(|p| coeffs[p] * basis.eval(p, x)).sum();
            C64::new(u.norm_sqr(), 0.0)
        });
        let du2 = y.integrate(|x| {
            let mut gr = [C64::new(0.0, 0.0); 3];
            for p in 0..basis.len() {
                let b = basis.grad(p, x);
                for d in 0..3 {
                    gr[d] += coeffs[p] * b[d];
                }
            }
            C64::new(gr.iter().map(|c| c.norm_sqr()).sum(), 0.0)
        });
        prop_assert!(poincare_constant(q(theta), &g) * u2.re <= du2.re + 1e-8);
    }

    #[test]
    fn eigenvalue_gap_bound(v1 in potential(), v2 in potential(), theta in 0.0..TAU) {
        let t = TruncationSpec { modes: CrossModes::Lowest(9), j_max: 1, k_keep: 20 };
        let r1 = run(&v1, theta, &t);
        let r2 = run(&v2, theta, &t);
        let sup = v1.sub(&v2).sample(&YGrid::new(&square())).unwrap().sup();
        for (a, b) in r1.bsd.lambdas.iter().zip(&r2.bsd.lambdas) {
            prop_assert!((a - b).abs() <= sup + 1e-8);
        }
    }

    #[test]
    fn cluster_sums_survive_unitary_remix(raw in prop::collection::vec(c64(), 64), s in 0.8..0.95f64) {
        let fx = fixture();
        let zp = probe([1.0, 0.5], 1, s);
        let tr = ProbeTraces::new(&zp, &fx.grid);
        let bsd = &fx.free.bsd;
        let mut seen = 0;
        for range in clusters(&bsd.lambdas, 1e-8) {
            let n = range.len();
            if n < 2 || n > 8 {
                continue;
            }
            seen += 1;
            let u = unitary(&raw, n);
            let mixed: Vec<Vec<C64>> = u
                .iter()
                .map(|col| {
                    (0..fx.grid.len())
                        .map(|i| range.clone().zip(col).map(|(k, c)| c * bsd.psi[k][i]).sum())
                        .collect()
                })
                .collect();
            let sum = |ps: &mut dyn Iterator<Item = &Vec<C64>>| -> C64 {
                ps.map(|p| tr.g(p).unwrap()).sum()
            };
            let before = sum(&mut bsd.psi[range.clone()].iter());
            let after = sum(&mut mixed.iter());
            prop_assert!((before - after).norm() <= 1e-8 * (1.0 + before.norm()), "{before} {after}");
        }
        prop_assert!(seen > 3);
    }

    #[test]
    fn g_is_gauge_invariant(k in 0usize..60, phase in 0.0..TAU, s in 0.8..0.97f64) {
        let fx = fixture();
        let zp = probe([1.0, 0.0], 1, s);
        let p = &fx.trig.bsd.psi[k];
        let rot: Vec<C64> = p.iter().map(|z| z * C64::from_polar(1.0, phase)).collect();
        let a = g_quadratic(p, &zp, &fx.grid).unwrap();
        let b = g_quadratic(&rot, &zp, &fx.grid).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn difference_trace_is_antisymmetric(l in -500.0..-1.0f64, m in -500.0..-1.0f64, li in 0.0..5.0f64) {
        let fx = fixture();
        let f = BoundaryDatum::exponential(&probe([1.0, 0.0], 1, 0.9).zeta0, &fx.grid);
        let lam = C64::new(l, li);
        let mu = C64::new(m, 0.0);
        let a = normal_derivative_difference(&fx.trig.bsd, &fx.grid, lam, mu, &f).unwrap();
        let b = normal_derivative_difference(&fx.trig.bsd, &fx.grid, mu, lam, &f).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x + y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn ratio_bound_along_sweeps(s in 0.5..0.99f64, xi1 in 0.5..2.0f64, j in 1i32..3) {
        let fx = fixture();
        let pair = partition(fx.trig.bsd.clone(), fx.free.bsd.clone(), 1e-9, 1e-9).unwrap();
        let sup = trig3().sample(&YGrid::new(&square())).unwrap().sup();
        if let Ok(zp) = make_zeta([xi1, 0.0], j, q(0.0), s) {
            prop_assert!(ratio_bound(&pair, zp.lambda) <= 1.0 + sup);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, ..ProptestConfig::default() })]

    #[test]
    fn f_lipschitz_estimate(
        m in 0.0..3.0f64,
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
        span in 0.0..200.0f64,
        lr in -100.0..300.0f64,
        li in 1.0..50.0f64,
        extra in 1.0..1e4f64,
    ) {
        let t1 = -m + a * span;
        let t2 = -m + b * span;
        let lam = C64::new(lr, li);
        let mu = C64::new(-(m + extra), 0.0);
        let d = (f_lambda_mu(t1, lam, mu).unwrap() - f_lambda_mu(t2, lam, mu).unwrap()).norm();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let bound = (0..=2000)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / 2000.0;
                1.0 / (lam - t).norm_sqr() + 1.0 / (mu - t).norm_sqr()
            })
            .fold(0.0, f64::max);
        prop_assert!(d <= 2.0 * (t1 - t2).abs() * bound * (1.0 + 1e-9) + 1e-15, "{d} {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn g_difference_estimate(k1 in 0usize..60, k2 in 0usize..60, w in c64(), s in 0.5..0.97f64, j in -2i32..3) {
        let fx = fixture();
        let Ok(zp) = make_zeta([1.0, 0.5], j, q(0.0), s) else { return Ok(()) };
        let tr = ProbeTraces::new(&zp, &fx.grid);
        let p1 = &fx.trig.bsd.psi[k1];
        let p2: Vec<C64> = fx.free.bsd.psi[k2].iter().map(|z| z * w).collect();
        let diff: Vec<C64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
        let lhs = (tr.g(p1).unwrap() - tr.g(&p2).unwrap()).norm();
        let c = tr.max_norm().unwrap();
        let rhs = c * (tr.pair1(p1).unwrap().norm() + tr.pair0(&p2).unwrap().norm()) * fx.grid.norm(&diff).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }
}
