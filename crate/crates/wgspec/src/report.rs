//! CSV, JSON and plot-script emission. Nothing here writes timestamps, so reruns are byte-identical.

use std::path::{Path, PathBuf};

use serde::Serialize;
use waveguide_spectral::forward::BandStructure;

use crate::commands::{FrequencyOutcome, StabilityOutput};
use crate::error::{Error, Result};

#[derive(Serialize)]
pub struct Tagged<'a, T: Serialize> {
    pub scenario_hash: &'a str,
    pub body: &'a T,
}

#[derive(Serialize)]
struct SweepRecord<'a> {
    scenario_hash: &'a str,
    xi1: f64,
    xi2: f64,
    j: i32,
    theta: f64,
    lam_re: f64,
    lam_im: f64,
    abs_lam: f64,
    #[serde(rename = "Sdiff_re")]
    sdiff_re: f64,
    #[serde(rename = "Sdiff_im")]
    sdiff_im: f64,
    #[serde(rename = "Astar_sum")]
    astar_sum: f64,
    #[serde(rename = "Bstar_sum")]
    bstar_sum: f64,
    tail_diag: f64,
    vhat_re: f64,
    vhat_im: f64,
}

#[derive(Serialize)]
struct FrequencyRecord<'a> {
    scenario_hash: &'a str,
    xi1: f64,
    xi2: f64,
    j: i32,
    status: &'a str,
    regularized: Option<bool>,
    probed1: Option<f64>,
    probed2: Option<f64>,
    probed3: Option<f64>,
    estimate_re: Option<f64>,
    estimate_im: Option<f64>,
    vhat_re: Option<f64>,
    vhat_im: Option<f64>,
    slope: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct StabilityRecord<'a> {
    scenario_hash: &'a str,
    n: usize,
    delta0: f64,
    delta1: f64,
    max_vhat: f64,
    c_observed: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct BandRecord<'a> {
    scenario_hash: &'a str,
    potential: &'a str,
    theta: f64,
    k: usize,
    lambda: f64,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<PathBuf> {
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_reconstruct_csv(path: &Path, hash: &str, outcomes: &[FrequencyOutcome]) -> Result<PathBuf> {
    let mut w = writer(path)?;
    for r in outcomes.iter().filter_map(|o| o.result.as_ref()) {
        for c in r.csv_rows() {
            w.serialize(SweepRecord {
                scenario_hash: hash,
                xi1: c.xi1,
                xi2: c.xi2,
                j: c.j,
                theta: c.theta,
                lam_re: c.lam_re,
                lam_im: c.lam_im,
                abs_lam: c.abs_lam,
                sdiff_re: c.sdiff_re,
                sdiff_im: c.sdiff_im,
                astar_sum: c.astar_sum,
                bstar_sum: c.bstar_sum,
                tail_diag: c.tail_diag,
                vhat_re: c.vhat_re,
                vhat_im: c.vhat_im,
            })?;
        }
    }
    finish(w, path)
}

pub fn write_frequency_csv(path: &Path, hash: &str, outcomes: &[FrequencyOutcome]) -> Result<PathBuf> {
    let mut w = writer(path)?;
    for o in outcomes {
        let r = o.result.as_ref();
        w.serialize(FrequencyRecord {
            scenario_hash: hash,
            xi1: o.xi[0],
            xi2: o.xi[1],
            j: o.j,
            status: if r.is_some() { "ok" } else { "error" },
            regularized: r.map(|r| r.xi_regularized),
            probed1: r.map(|r| r.probed_frequency[0]),
            probed2: r.map(|r| r.probed_frequency[1]),
            probed3: r.map(|r| r.probed_frequency[2]),
            estimate_re: r.map(|r| r.estimate.re),
            estimate_im: r.map(|r| r.estimate.im),
            vhat_re: r.map(|r| r.vhat.re),
            vhat_im: r.map(|r| r.vhat.im),
            slope: r.map(|r| r.slope),
            error: o.error.as_deref(),
        })?;
    }
    finish(w, path)
}

pub fn write_stability_csv(path: &Path, hash: &str, out: &StabilityOutput) -> Result<PathBuf> {
    let mut w = writer(path)?;
    for row in &out.report.rows {
        w.serialize(StabilityRecord {
            scenario_hash: hash,
            n: row.n,
            delta0: row.delta0,
            delta1: out.metrics.delta1,
            max_vhat: out.report.max_vhat,
            c_observed: row.c_observed,
            pass: row.pass,
        })?;
    }
    finish(w, path)
}

pub fn write_bands_csv(path: &Path, hash: &str, bands: &[BandStructure]) -> Result<PathBuf> {
    let mut w = writer(path)?;
    for (b, name) in bands.iter().zip(["v1", "v2"]) {
        for (th, row) in b.thetas.iter().zip(&b.bands) {
            for (k, l) in row.iter().enumerate() {
                w.serialize(BandRecord { scenario_hash: hash, potential: name, theta: *th, k: k + 1, lambda: *l })?;
            }
        }
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub const RECONSTRUCT_PLOT: &str = r#"#!/usr/bin/env python3
# |S_diff(lambda) - S_diff(lambda_max)| against |lambda|, one curve per frequency,
# with the least-squares slope and a reference line of slope -1/2.
# usage: python3 plot_reconstruct.py [reconstruct.csv] [out.png]
import csv
import math
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "reconstruct.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "reconstruct.png"
curves = defaultdict(list)
with open(src) as fh:
    for r in csv.DictReader(fh):
        key = (float(r["xi1"]), float(r["xi2"]), int(r["j"]))
        curves[key].append((float(r["abs_lam"]), complex(float(r["Sdiff_re"]), float(r["Sdiff_im"]))))

fig, ax = plt.subplots(figsize=(6, 4.5))
for key, pts in sorted(curves.items()):
    pts.sort()
    final = pts[-1][1]
    xs = [p[0] for p in pts[:-1]]
    ys = [abs(p[1] - final) for p in pts[:-1]]
    keep = [(x, y) for x, y in zip(xs, ys) if y > 0]
    if len(keep) < 2:
        continue
    lx = [math.log(x) for x, _ in keep]
    ly = [math.log(y) for _, y in keep]
    mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
    den = sum((a - mx) ** 2 for a in lx)
    slope = sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / den if den > 0 else float("nan")
    ax.loglog([x for x, _ in keep], [y for _, y in keep], "o-", label=f"xi'={key[:2]}, j={key[2]}: slope {slope:.2f}")
    x0, y0 = keep[0]
    ax.loglog([x0, keep[-1][0]], [y0, y0 * (keep[-1][0] / x0) ** -0.5], "k:", lw=0.8)
ax.set_xlabel("|lambda|")
ax.set_ylabel("|S_diff - S_diff(final)|")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(dst, dpi=150)
"#;

pub const BANDS_PLOT: &str = r#"#!/usr/bin/env python3
# Band functions theta -> lambda_k(theta) for both potentials.
# usage: python3 plot_bands.py [bands.csv] [out.png]
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "bands.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "bands.png"
bands = defaultdict(list)
with open(src) as fh:
    for r in csv.DictReader(fh):
        bands[(r["potential"], int(r["k"]))].append((float(r["theta"]), float(r["lambda"])))

fig, axes = plt.subplots(1, 2, figsize=(9, 4.5), sharey=True)
for (pot, k), pts in sorted(bands.items()):
    ax = axes[0 if pot == "v1" else 1]
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], "-", lw=1)
    ax.set_title(pot)
    ax.set_xlabel("theta")
axes[0].set_ylabel("lambda_k(theta)")
fig.tight_layout()
fig.savefig(dst, dpi=150)
"#;
