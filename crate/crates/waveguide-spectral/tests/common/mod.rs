#![allow(dead_code)]

use std::f64::consts::PI;

use waveguide_spectral::forward::{forward, ForwardRun, TruncationSpec};
use waveguide_spectral::geometry::{CellGeometry, CrossModes, Potential, QuasiMomentum, Trig, TrigTerm};
use waveguide_spectral::{Complex64, Execution};

pub type C64 = Complex64;

pub fn square() -> CellGeometry {
    CellGeometry::new(PI, PI).unwrap()
}

pub fn q(t: f64) -> QuasiMomentum {
    QuasiMomentum::new(t).unwrap()
}

pub fn term(coef: f64, x1: (Trig, f64), x2: (Trig, f64), x3: (Trig, i32)) -> TrigTerm {
    TrigTerm { coef, x1, x2, x3 }
}

/// Three terms, each vanishing on the lateral boundary of the square cell.
pub fn trig3() -> Potential {
    Potential::from_terms(vec![
        term(0.5, (Trig::Sin, 1.0), (Trig::Sin, 1.0), (Trig::Cos, 1)),
        term(0.3, (Trig::Sin, 2.0), (Trig::Sin, 1.0), (Trig::Cos, 0)),
        term(0.2, (Trig::Sin, 1.0), (Trig::Sin, 2.0), (Trig::Sin, 1)),
    ])
}

pub fn generic() -> Potential {
    Potential::from_terms(vec![
        term(0.4, (Trig::Cos, 2.0), (Trig::Sin, 1.0), (Trig::Cos, 1)),
        term(0.3, (Trig::Sin, 1.0), (Trig::Cos, 3.0), (Trig::Sin, 2)),
        term(-0.25, (Trig::Cos, 1.0), (Trig::Cos, 1.0), (Trig::Cos, 0)),
    ])
}

pub fn small_trunc(k_keep: usize) -> TruncationSpec {
    TruncationSpec { modes: CrossModes::Lowest(16), j_max: 2, k_keep }
}

pub fn run(v: &Potential, theta: f64, trunc: &TruncationSpec) -> ForwardRun {
    forward(&square(), q(theta), v, trunc, "test", Execution::default()).unwrap()
}

pub fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}
