//! Slow-coherency aggregation and the state costs built on it.

use nalgebra::{DMatrix, DVector};

use super::network::{swing_laplacian, PowerNetwork};
use super::plant::LinearPlant;
use crate::error::{Error, Result};

/// Disjoint generator groups with inertia-weighted mass fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyPartition {
    areas: Vec<Vec<usize>>,
    /// `fractions[a][k]` belongs to generator `areas[a][k]`.
    fractions: Vec<Vec<f64>>,
    n_generators: usize,
}

impl CoherencyPartition {
    /// Builds a partition of generators `0..inertia.len()`.
    pub fn new(areas: Vec<Vec<usize>>, inertia: &[f64]) -> Result<Self> {
        let ng = inertia.len();
        if areas.is_empty() {
            return Err(Error::InvalidPartition("no areas given".into()));
        }
        let mut owner = vec![None; ng];
        for (a, area) in areas.iter().enumerate() {
            if area.is_empty() {
                return Err(Error::InvalidPartition(format!("area {a} is empty")));
            }
            for &g in area {
                if g >= ng {
                    return Err(Error::InvalidPartition(format!(
                        "generator {g} out of range for {ng} generators"
                    )));
                }
                if let Some(prev) = owner[g] {
                    return Err(Error::InvalidPartition(format!(
                        "generator {g} appears in areas {prev} and {a}"
                    )));
                }
                owner[g] = Some(a);
            }
        }
        if let Some(g) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidPartition(format!("generator {g} is in no area")));
        }
        if let Some(g) = inertia.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::InvalidPartition(format!(
                "generator {g} has non-positive inertia"
            )));
        }
        let fractions = areas
            .iter()
            .map(|area| {
                let total: f64 = area.iter().map(|&g| inertia[g]).sum();
                area.iter().map(|&g| inertia[g] / total).collect()
            })
            .collect();
        Ok(Self {
            areas,
            fractions,
            n_generators: ng,
        })
    }

    pub fn areas(&self) -> &[Vec<usize>] {
        &self.areas
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    pub fn n_generators(&self) -> usize {
        self.n_generators
    }

    pub fn fractions(&self, area: usize) -> &[f64] {
        &self.fractions[area]
    }

    /// Rows map generator angles to the area centers of mass `δ_α`.
    pub fn aggregation_map(&self) -> DMatrix<f64> {
        let mut map = DMatrix::zeros(self.n_areas(), self.n_generators);
        for (a, (area, frac)) in self.areas.iter().zip(&self.fractions).enumerate() {
            for (&g, &f) in area.iter().zip(frac) {
                map[(a, g)] = f;
            }
        }
        map
    }

    /// 0/1 membership matrix, generators × areas.
    pub fn indicator(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.n_generators, self.n_areas());
        for (a, area) in self.areas.iter().enumerate() {
            for &g in area {
                u[(g, a)] = 1.0;
            }
        }
        u
    }
}

/// Area-level inertia, damping and coupling.
#[derive(Debug, Clone)]
pub struct AggregateModel {
    /// Summed area inertias (diagonal).
    pub m: DMatrix<f64>,
    /// Summed area damping (diagonal).
    pub d: DMatrix<f64>,
    /// Laplacian projected onto areas: `Uᵀ L U`.
    pub l: DMatrix<f64>,
    /// Center-of-mass map from generator angles to area angles.
    pub map: DMatrix<f64>,
}

/// Aggregates the swing dynamics of `net` over the areas of `part`.
pub fn aggregate_coherency(
    plant: &LinearPlant,
    net: &PowerNetwork,
    part: &CoherencyPartition,
) -> Result<AggregateModel> {
    let ng = net.n_generators();
    if part.n_generators() != ng || plant.labels.n_generators() != ng {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} generators, plant {} and network {ng}",
            part.n_generators(),
            plant.labels.n_generators()
        )));
    }
    let u = part.indicator();
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        ng,
        net.generators.iter().map(|g| g.inertia),
    ));
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        ng,
        net.generators.iter().map(|g| g.damping),
    ));
    let l = swing_laplacian(net)?.l;
    Ok(AggregateModel {
        m: u.transpose() * m * &u,
        d: u.transpose() * d * &u,
        l: u.transpose() * l * &u,
        map: part.aggregation_map(),
    })
}

/// Which builder produced a [`CostSpec`] and with which parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CostProvenance {
    /// Penalizes deviations from the average angle and all frequencies.
    Average { ell: f64, m: f64, eps: f64 },
    /// Penalizes the angle and frequency difference between two areas.
    TwoArea {
        ell: f64,
        m: f64,
        eps: f64,
        areas: Vec<Vec<usize>>,
    },
    /// Loaded from a file or supplied by the caller.
    External,
}

/// State weight `Q` and diagonal control weight `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub provenance: CostProvenance,
}

impl CostSpec {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>, provenance: CostProvenance) -> Result<Self> {
        let spec = Self { q, r, provenance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        crate::linalg::ensure_square(&self.q)?;
        let p = crate::linalg::ensure_square(&self.r)?;
        crate::linalg::ensure_finite(&self.q, "Q")?;
        crate::linalg::ensure_finite(&self.r, "R")?;
        if !crate::linalg::is_symmetric(&self.q, 1e-12) {
            return Err(Error::InvalidParameter("Q must be symmetric".into()));
        }
        let qmin = self.q.symmetric_eigenvalues().min();
        if qmin < -1e-10 * self.q.norm() {
            return Err(Error::InvalidParameter(format!(
                "Q must be positive semidefinite (min eigenvalue {qmin:e})"
            )));
        }
        for i in 0..p {
            for j in 0..p {
                let v = self.r[(i, j)];
                if i == j && !(v > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "R diagonal entry {i} must be positive, got {v}"
                    )));
                }
                if i != j && v != 0.0 {
                    return Err(Error::InvalidParameter("R must be diagonal".into()));
                }
            }
        }
        Ok(())
    }

    /// Replaces `R` by `diag(r)`.
    pub fn with_r_diag(mut self, r: &[f64]) -> Result<Self> {
        self.r = DMatrix::from_diagonal(&DVector::from_column_slice(r));
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn p(&self) -> usize {
        self.r.nrows()
    }
}

fn check_cost_params(ell: f64, m: f64, eps: f64, ell_strict: bool) -> Result<()> {
    let ell_ok = if ell_strict { ell > 0.0 } else { ell >= 0.0 };
    if !ell_ok || !(m >= 0.0) || !(eps >= 0.0) || !ell.is_finite() || !m.is_finite() || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cost parameters out of range: ell = {ell}, m = {m}, eps = {eps}"
        )));
    }
    Ok(())
}

fn require_swing_labels(plant: &LinearPlant) -> Result<usize> {
    let ng = plant.labels.n_generators();
    if ng == 0 {
        return Err(Error::InvalidParameter(
            "plant labels identify no angle/frequency states".into(),
        ));
    }
    Ok(ng)
}

/// `Q` with `½ L_unif + ε I` on the angles and `½ m I` on the frequencies,
/// where `L_unif = ℓ (I − 𝟙𝟙ᵀ/n_g)`; `R = I`. Other states are not weighted.
pub fn build_cost_average(plant: &LinearPlant, ell: f64, m: f64, eps: f64) -> Result<CostSpec> {
    check_cost_params(ell, m, eps, true)?;
    let ng = require_swing_labels(plant)?;
    let labels = &plant.labels;
    let mut q = DMatrix::<f64>::zeros(plant.n(), plant.n());
    let inv = 1.0 / ng as f64;
    for (i, &si) in labels.angles.iter().enumerate() {
        for (j, &sj) in labels.angles.iter().enumerate() {
            let lunif = ell * (if i == j { 1.0 } else { 0.0 } - inv);
            q[(si, sj)] = 0.5 * lunif + if i == j { eps } else { 0.0 };
        }
    }
    for &s in &labels.frequencies {
        q[(s, s)] = 0.5 * m;
    }
    CostSpec::new(
        q,
        DMatrix::identity(plant.p(), plant.p()),
        CostProvenance::Average { ell, m, eps },
    )
}

/// `Q = ℓ ccᵀ` on angles, `m ccᵀ` on frequencies, plus `ε I` on angles, with
/// `c` the difference of the two areas' mass-fraction vectors; `R = I`.
pub fn build_cost_two_area(
    plant: &LinearPlant,
    part: &CoherencyPartition,
    ell: f64,
    m: f64,
    eps: f64,
) -> Result<CostSpec> {
    check_cost_params(ell, m, eps, false)?;
    if part.n_areas() != 2 {
        return Err(Error::InvalidPartition(format!(
            "two-area cost needs exactly 2 areas, got {}",
            part.n_areas()
        )));
    }
    let ng = require_swing_labels(plant)?;
    if part.n_generators() != ng {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} generators, plant has {ng}",
            part.n_generators()
        )));
    }
    let map = part.aggregation_map();
    let c: Vec<f64> = (0..ng).map(|g| map[(0, g)] - map[(1, g)]).collect();
    let labels = &plant.labels;
    let mut q = DMatrix::<f64>::zeros(plant.n(), plant.n());
    for i in 0..ng {
        for j in 0..ng {
            let cc = c[i] * c[j];
            q[(labels.angles[i], labels.angles[j])] = ell * cc + if i == j { eps } else { 0.0 };
            q[(labels.frequencies[i], labels.frequencies[j])] = m * cc;
        }
    }
    CostSpec::new(
        q,
        DMatrix::identity(plant.p(), plant.p()),
        CostProvenance::TwoArea {
            ell,
            m,
            eps,
            areas: part.areas().to_vec(),
        },
    )
}
