//! TOML model files holding a network, a plant, a cost and/or a gain.
//!
//! ```toml
//! [plant]
//! n = 2
//! q = 1
//! p = 1
//! A = [[0.0, 1.0], [-1.0, -1.0]]
//! B1 = [[0.0], [1.0]]
//! B2 = [[0.0], [1.0]]
//!
//! [plant.labels]
//! angles = [0]
//! frequencies = [1]
//! remaining = []
//! state_generator = [0, 0]   # -1 marks "no generator"
//! input_generator = [0]
//! ```
//!
//! Matrices are arrays of rows. Unknown keys are rejected.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coherency::{CostProvenance, CostSpec};
use super::network::{Generator, PowerNetwork};
use super::plant::{LinearPlant, StateLabels};
use crate::error::{Error, Result};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub generator_buses: Vec<usize>,
    #[serde(rename = "Y_re")]
    pub y_re: Rows,
    #[serde(rename = "Y_im")]
    pub y_im: Rows,
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub inertia: f64,
    pub damping: f64,
    pub voltage: f64,
    #[serde(default)]
    pub injection: f64,
    #[serde(default)]
    pub angle: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub n: usize,
    pub q: usize,
    pub p: usize,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B1")]
    pub b1: Rows,
    #[serde(rename = "B2")]
    pub b2: Rows,
    pub labels: LabelSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSection {
    pub angles: Vec<usize>,
    pub frequencies: Vec<usize>,
    pub remaining: Vec<usize>,
    pub state_generator: Vec<i64>,
    pub input_generator: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
    pub provenance: ProvenanceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProvenanceSection {
    Average { ell: f64, m: f64, eps: f64 },
    TwoArea {
        ell: f64,
        m: f64,
        eps: f64,
        areas: Vec<Vec<usize>>,
    },
    External,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "K")]
    pub k: Rows,
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &Rows, nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::DimensionMismatch {
            what: format!("{what} rows"),
            expected: nrows,
            found: rows.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                what: format!("{what} row {i} length"),
                expected: ncols,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{what} row {i}"),
            });
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn square_from_rows(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    from_rows(rows, rows.len(), rows.len(), what)
}

fn opt_label(v: i64, what: &str) -> Result<Option<usize>> {
    match v {
        -1 => Ok(None),
        v if v >= 0 => Ok(Some(v as usize)),
        v => Err(Error::InvalidParameter(format!(
            "{what}: label {v} must be a generator index or -1"
        ))),
    }
}

fn label_value(v: Option<usize>) -> i64 {
    v.map_or(-1, |g| g as i64)
}

impl PlantSection {
    pub fn from_plant(plant: &LinearPlant) -> Self {
        let l = &plant.labels;
        Self {
            n: plant.n(),
            q: plant.q(),
            p: plant.p(),
            a: to_rows(&plant.a),
            b1: to_rows(&plant.b1),
            b2: to_rows(&plant.b2),
            labels: LabelSection {
                angles: l.angles.clone(),
                frequencies: l.frequencies.clone(),
                remaining: l.remaining.clone(),
                state_generator: l.state_generator.iter().map(|&g| label_value(g)).collect(),
                input_generator: l.input_generator.iter().map(|&g| label_value(g)).collect(),
            },
        }
    }

    pub fn to_plant(&self) -> Result<LinearPlant> {
        let a = from_rows(&self.a, self.n, self.n, "plant.A")?;
        let b1 = from_rows(&self.b1, self.n, self.q, "plant.B1")?;
        let b2 = from_rows(&self.b2, self.n, self.p, "plant.B2")?;
        let l = &self.labels;
        let labels = StateLabels {
            angles: l.angles.clone(),
            frequencies: l.frequencies.clone(),
            remaining: l.remaining.clone(),
            state_generator: l
                .state_generator
                .iter()
                .map(|&v| opt_label(v, "plant.labels.state_generator"))
                .collect::<Result<_>>()?,
            input_generator: l
                .input_generator
                .iter()
                .map(|&v| opt_label(v, "plant.labels.input_generator"))
                .collect::<Result<_>>()?,
        };
        LinearPlant::new(a, b1, b2, labels)
    }
}

impl CostSection {
    pub fn from_cost(cost: &CostSpec) -> Self {
        let provenance = match &cost.provenance {
            CostProvenance::Average { ell, m, eps } => ProvenanceSection::Average {
                ell: *ell,
                m: *m,
                eps: *eps,
            },
            CostProvenance::TwoArea { ell, m, eps, areas } => ProvenanceSection::TwoArea {
                ell: *ell,
                m: *m,
                eps: *eps,
                areas: areas.clone(),
            },
            CostProvenance::External => ProvenanceSection::External,
        };
        Self {
            q: to_rows(&cost.q),
            r: to_rows(&cost.r),
            provenance,
        }
    }

    pub fn to_cost(&self) -> Result<CostSpec> {
        let q = square_from_rows(&self.q, "cost.Q")?;
        let r = square_from_rows(&self.r, "cost.R")?;
        let provenance = match &self.provenance {
            ProvenanceSection::Average { ell, m, eps } => CostProvenance::Average {
                ell: *ell,
                m: *m,
                eps: *eps,
            },
            ProvenanceSection::TwoArea { ell, m, eps, areas } => CostProvenance::TwoArea {
                ell: *ell,
                m: *m,
                eps: *eps,
                areas: areas.clone(),
            },
            ProvenanceSection::External => CostProvenance::External,
        };
        CostSpec::new(q, r, provenance)
    }
}

impl NetworkSection {
    pub fn from_network(net: &PowerNetwork) -> Self {
        let y = &net.admittance;
        Self {
            generator_buses: net.generator_buses.clone(),
            y_re: to_rows(&y.map(|v| v.re)),
            y_im: to_rows(&y.map(|v| v.im)),
            generators: net
                .generators
                .iter()
                .map(|g| GeneratorEntry {
                    inertia: g.inertia,
                    damping: g.damping,
                    voltage: g.voltage,
                    injection: g.injection,
                    angle: g.angle,
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> Result<PowerNetwork> {
        let nb = self.y_re.len();
        let re = from_rows(&self.y_re, nb, nb, "network.Y_re")?;
        let im = from_rows(&self.y_im, nb, nb, "network.Y_im")?;
        let y = DMatrix::from_fn(nb, nb, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
        let generators = self
            .generators
            .iter()
            .map(|g| Generator {
                inertia: g.inertia,
                damping: g.damping,
                voltage: g.voltage,
                injection: g.injection,
                angle: g.angle,
            })
            .collect();
        PowerNetwork::new(generators, y, self.generator_buses.clone())
    }
}

impl GainSection {
    pub fn new(k: &DMatrix<f64>, gamma: Option<f64>) -> Self {
        Self {
            gamma,
            k: to_rows(k),
        }
    }

    /// The gain as a `p × n` matrix.
    pub fn to_matrix(&self, p: usize, n: usize) -> Result<DMatrix<f64>> {
        from_rows(&self.k, p, n, "gain.K")
    }
}

impl ModelFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("cannot read file: {e}"),
        })?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model file sections are always serializable")
    }

    /// Converts a section error into a parse error naming the file.
    fn context<T>(path: &Path, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Io(_) | Error::Parse { .. } => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
    }

    fn missing(path: &Path, section: &str) -> Error {
        Error::Parse {
            path: path.to_path_buf(),
            message: format!("missing [{section}] section"),
        }
    }

    pub fn plant(&self, path: &Path) -> Result<LinearPlant> {
        let s = self.plant.as_ref().ok_or_else(|| Self::missing(path, "plant"))?;
        Self::context(path, s.to_plant())
    }

    pub fn cost(&self, path: &Path) -> Result<CostSpec> {
        let s = self.cost.as_ref().ok_or_else(|| Self::missing(path, "cost"))?;
        Self::context(path, s.to_cost())
    }

    pub fn network(&self, path: &Path) -> Result<PowerNetwork> {
        let s = self.network.as_ref().ok_or_else(|| Self::missing(path, "network"))?;
        Self::context(path, s.to_network())
    }

    pub fn gain(&self, path: &Path, p: usize, n: usize) -> Result<DMatrix<f64>> {
        let s = self.gain.as_ref().ok_or_else(|| Self::missing(path, "gain"))?;
        Self::context(path, s.to_matrix(p, n))
    }
}

pub fn load_plant(path: &Path) -> Result<LinearPlant> {
    ModelFile::load(path)?.plant(path)
}

/// Loads the cost and checks it against the plant stored in the same file,
/// when one is present.
pub fn load_cost(path: &Path) -> Result<CostSpec> {
    let file = ModelFile::load(path)?;
    let cost = file.cost(path)?;
    if let Some(plant) = &file.plant {
        if cost.n() != plant.n || cost.p() != plant.p {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!(
                    "cost is {}x{} / {}x{} but plant has n = {}, p = {}",
                    cost.n(),
                    cost.n(),
                    cost.p(),
                    cost.p(),
                    plant.n,
                    plant.p
                ),
            });
        }
    }
    Ok(cost)
}

pub fn load_network(path: &Path) -> Result<PowerNetwork> {
    ModelFile::load(path)?.network(path)
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Saves a plant and optional cost to `path`.
pub fn save_model(path: &Path, plant: &LinearPlant, cost: Option<&CostSpec>) -> Result<()> {
    let file = ModelFile {
        plant: Some(PlantSection::from_plant(plant)),
        cost: cost.map(CostSection::from_cost),
        ..Default::default()
    };
    write_atomic(path, &file.to_toml())
}
