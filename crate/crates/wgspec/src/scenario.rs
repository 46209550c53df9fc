//! Scenario files: one JSON document describing a potential pair and the experiments to run on it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use waveguide_spectral::forward::TruncationSpec;
use waveguide_spectral::geometry::{CellGeometry, Potential, QuasiMomentum, YGrid};
use waveguide_spectral::inverse::{SeriesGuards, SweepConfig};
use waveguide_spectral::zeta::geometric_sweep;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub geometry: GeometryConfig,
    pub theta: f64,
    pub truncation: TruncationSpec,
    pub v1: Potential,
    pub v2: Potential,
    /// Declared sup-norm bound `M` for both potentials.
    pub bound: f64,
    pub frequencies: Vec<Frequency>,
    pub sweep: SweepSpec,
    pub tolerances: Tolerances,
    /// One-based `N` values for `delta0(N)`.
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub bands: BandsConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    pub b: f64,
    /// Interior quadrature `[n_x1, n_x2, n_x3]`.
    #[serde(default)]
    pub interior: Option<[usize; 3]>,
    /// Lateral boundary quadrature `[n_1, n_2, n_3]`.
    #[serde(default)]
    pub boundary: Option<[usize; 3]>,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<CellGeometry> {
        let mut g = CellGeometry::new(self.a, self.b)?;
        if let Some([n1, n2, n3]) = self.interior {
            g = g.with_interior(n1, n2, n3)?;
        }
        if let Some([n1, n2, n3]) = self.boundary {
            g = g.with_boundary(n1, n2, n3)?;
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frequency {
    pub xi: [f64; 2],
    pub j: i32,
}

/// Sweep points for the probe parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepPoints {
    /// `s = 1 - 2^-i` (`j != 0`) and `t = 2^i` (`j = 0`) for `i` in `from..=to`.
    Dyadic { from: i32, to: i32 },
    /// Target scales `L`: `s = sqrt(1 - 1/L)` (`j != 0`) and `t = sqrt(L)` (`j = 0`).
    Scales(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub points: SweepPoints,
    #[serde(default)]
    pub guards: SeriesGuards,
    #[serde(default = "default_eps_freq")]
    pub eps_freq: f64,
}

fn default_eps_freq() -> f64 {
    1e-2
}

impl SweepSpec {
    pub fn params(&self, j: i32) -> Vec<f64> {
        match &self.points {
            SweepPoints::Dyadic { from, to } => geometric_sweep(j, *from..=*to),
            SweepPoints::Scales(ls) => ls
                .iter()
                .map(|l| if j == 0 { l.sqrt() } else { (1.0 - 1.0 / l).sqrt() })
                .collect(),
        }
    }

    pub fn config(&self, j: i32) -> SweepConfig {
        SweepConfig { params: self.params(j), guards: self.guards, eps_freq: self.eps_freq }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalue tolerance of the K0/K1 split.
    pub lambda: f64,
    /// Trace tolerance of the K0/K1 split.
    pub psi: f64,
    /// Largest acceptable stability constant.
    pub c_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    pub thetas: usize,
    pub count: usize,
}

impl Default for BandsConfig {
    fn default() -> Self {
        BandsConfig { thetas: 16, count: 10 }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} unsupported, expected {SCHEMA_VERSION}", self.schema_version));
        }
        let geom = self.geometry.build().map_err(|e| Error::Config(e.to_string()))?;
        QuasiMomentum::new(self.theta).map_err(|e| Error::Config(e.to_string()))?;
        let t = &self.tolerances;
        for (name, v) in [("lambda", t.lambda), ("psi", t.psi), ("c_max", t.c_max), ("bound", self.bound), ("eps_freq", self.sweep.eps_freq)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.frequencies.is_empty() {
            return bad("frequency grid is empty".into());
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return bad("n_list must be nonempty with entries >= 1".into());
        }
        if self.truncation.k_keep == 0 || self.bands.thetas == 0 || self.bands.count == 0 {
            return bad("k_keep, bands.thetas and bands.count must be >= 1".into());
        }
        let y = YGrid::new(&geom);
        for (name, v) in [("v1", &self.v1), ("v2", &self.v2)] {
            let sup = v.sample(&y).map_err(|e| Error::Config(format!("{name}: {e}")))?.sup();
            if sup > self.bound {
                return bad(format!("{name}: sup-norm {sup} exceeds the declared bound {}", self.bound));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<CellGeometry> {
        self.geometry.build()
    }

    pub fn quasi_momentum(&self) -> Result<QuasiMomentum> {
        Ok(QuasiMomentum::new(self.theta)?)
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex_sha256(&serde_json::to_vec(self).expect("scenario serializes"))
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
