//! Experiment drivers behind the CLI subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use waveguide_spectral::forward::{band_sweep, forward, BandStructure, BoundarySpectralData};
use waveguide_spectral::geometry::{GammaGrid, Potential, QuasiMomentum};
use waveguide_spectral::inverse::{
    bsd_metrics, partition, reconstruct_fourier_difference, stability_check, BsdMetrics, BsdPair,
    ReconstructionResult, StabilityReport,
};
use waveguide_spectral::Execution;

use crate::cache::{bsd_key, BsdCache, CacheStatus};
use crate::error::{Error, Result};
use crate::report;
use crate::scenario::Scenario;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub cache: PathBuf,
    pub exec: Execution,
}

impl RunOptions {
    /// `--out` wins over the scenario's `output`; the cache defaults to `<out>/cache`.
    pub fn resolve(sc: &Scenario, out: Option<PathBuf>, cache: Option<PathBuf>, exec: Execution) -> Self {
        let out = out.or_else(|| sc.output.clone()).unwrap_or_else(|| PathBuf::from("wgspec-out"));
        let cache = cache.unwrap_or_else(|| out.join("cache"));
        RunOptions { out, cache, exec }
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }
}

pub struct ForwardOutput {
    pub bsd1: BoundarySpectralData,
    pub bsd2: BoundarySpectralData,
    pub status: [CacheStatus; 2],
    pub keys: [String; 2],
}

/// Boundary spectral data for both potentials, from the cache when possible.
pub fn run_forward(sc: &Scenario, opts: &RunOptions) -> Result<ForwardOutput> {
    let geom = sc.geometry()?;
    let theta = sc.quasi_momentum()?;
    let cache = BsdCache::open(&opts.cache)?;
    let one = |label: &str, v: &Potential| -> Result<(BoundarySpectralData, CacheStatus, String)> {
        let key = bsd_key(&geom, theta, &sc.truncation, v);
        let tag = format!("{}:{label}", sc.name);
        let (bsd, st) = cache.load_or_compute(&key, label, || {
            Ok(forward(&geom, theta, v, &sc.truncation, &tag, opts.exec)?.bsd)
        })?;
        Ok((bsd, st, key))
    };
    let (bsd1, s1, k1) = one("v1", &sc.v1)?;
    let (bsd2, s2, k2) = one("v2", &sc.v2)?;
    Ok(ForwardOutput { bsd1, bsd2, status: [s1, s2], keys: [k1, k2] })
}

pub fn pair_from(sc: &Scenario, fwd: ForwardOutput) -> Result<BsdPair> {
    Ok(partition(fwd.bsd1, fwd.bsd2, sc.tolerances.lambda, sc.tolerances.psi)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyOutcome {
    pub xi: [f64; 2],
    pub j: i32,
    pub result: Option<ReconstructionResult>,
    pub error: Option<String>,
}

/// Reconstruction over the scenario's frequency grid; engine errors are recorded per frequency.
pub fn reconstruct(sc: &Scenario, pair: &BsdPair, exec: Execution) -> Result<Vec<FrequencyOutcome>> {
    let grid = pair.gamma_grid()?;
    Ok(exec.map(&sc.frequencies, |f| {
        match reconstruct_fourier_difference(pair, &grid, f.xi, f.j, &sc.sweep.config(f.j), Execution::Sequential) {
            Ok(r) => FrequencyOutcome { xi: f.xi, j: f.j, result: Some(r), error: None },
            Err(e) => {
                log::warn!("frequency ({:?}, {}) skipped: {e}", f.xi, f.j);
                FrequencyOutcome { xi: f.xi, j: f.j, result: None, error: Some(e.to_string()) }
            }
        }
    }))
}

pub struct ReconstructOutput {
    pub outcomes: Vec<FrequencyOutcome>,
    pub files: Vec<PathBuf>,
}

pub fn run_reconstruct(sc: &Scenario, opts: &RunOptions) -> Result<ReconstructOutput> {
    let pair = pair_from(sc, run_forward(sc, opts)?)?;
    let outcomes = reconstruct(sc, &pair, opts.exec)?;
    let dir = opts.out_dir()?;
    let hash = sc.hash();
    let files = vec![
        report::write_reconstruct_csv(&dir.join("reconstruct.csv"), &hash, &outcomes)?,
        report::write_frequency_csv(&dir.join("frequencies.csv"), &hash, &outcomes)?,
        report::write_json(&dir.join("reconstruct.json"), &report::Tagged { scenario_hash: &hash, body: &outcomes })?,
        report::write_text(&dir.join("plot_reconstruct.py"), report::RECONSTRUCT_PLOT)?,
    ];
    Ok(ReconstructOutput { outcomes, files })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityOutput {
    pub metrics: BsdMetrics,
    pub report: StabilityReport,
    pub frequencies: Vec<FrequencyOutcome>,
}

pub fn run_stability(sc: &Scenario, opts: &RunOptions) -> Result<(StabilityOutput, Vec<PathBuf>)> {
    let pair = pair_from(sc, run_forward(sc, opts)?)?;
    let metrics = bsd_metrics(&pair)?;
    let frequencies = reconstruct(sc, &pair, opts.exec)?;
    let results: Vec<ReconstructionResult> = frequencies.iter().filter_map(|f| f.result.clone()).collect();
    let report = stability_check(&results, &metrics, &sc.n_list, sc.tolerances.c_max);
    let out = StabilityOutput { metrics, report, frequencies };
    let dir = opts.out_dir()?;
    let hash = sc.hash();
    let files = vec![
        report::write_stability_csv(&dir.join("stability.csv"), &hash, &out)?,
        report::write_json(&dir.join("stability.json"), &report::Tagged { scenario_hash: &hash, body: &out })?,
    ];
    Ok((out, files))
}

pub fn run_bands(sc: &Scenario, opts: &RunOptions) -> Result<(Vec<BandStructure>, Vec<PathBuf>)> {
    let geom = sc.geometry()?;
    let n = sc.bands.thetas;
    let thetas: Vec<QuasiMomentum> =
        (0..n).map(|i| QuasiMomentum::new(2.0 * PI * i as f64 / n as f64)).collect::<std::result::Result<_, _>>()?;
    let bands = [&sc.v1, &sc.v2]
        .into_iter()
        .map(|v| band_sweep(&geom, v, &thetas, sc.bands.count, &sc.truncation.modes, sc.truncation.j_max, opts.exec))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let dir = opts.out_dir()?;
    let files = vec![
        report::write_bands_csv(&dir.join("bands.csv"), &sc.hash(), &bands)?,
        report::write_text(&dir.join("plot_bands.py"), report::BANDS_PLOT)?,
    ];
    Ok((bands, files))
}

/// The lateral boundary grid the scenario's data live on.
pub fn gamma_grid(sc: &Scenario) -> Result<GammaGrid> {
    Ok(GammaGrid::new(&sc.geometry()?))
}
