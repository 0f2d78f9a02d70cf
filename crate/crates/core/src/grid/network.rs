//! Power networks, Kron reduction and the linearized swing equations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::plant::{LinearPlant, StateLabels};
use crate::error::{Error, Result};

/// Classical machine parameters at the operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// Inertia `M_i` (s²·pu), strictly positive.
    pub inertia: f64,
    /// Damping `D_i` (s·pu), nonnegative.
    pub damping: f64,
    /// Internal voltage magnitude `E_i` (pu), strictly positive.
    pub voltage: f64,
    /// Power injection in the reduced network (pu).
    pub injection: f64,
    /// Operating angle `θ*_i` (rad).
    pub angle: f64,
}

/// Generators plus the full bus admittance matrix.
///
/// `generator_buses[i]` is the bus carrying generator `i`; all other buses are
/// load buses eliminated by Kron reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    pub generators: Vec<Generator>,
    pub admittance: DMatrix<Complex64>,
    pub generator_buses: Vec<usize>,
}

/// How the disturbance matrix `B1` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum B1Policy {
    /// Noise enters through the control channels: `B1 = B2`.
    #[default]
    InputChannels,
    /// Unit noise on every frequency state.
    FrequencyDisturbance,
}

/// Options for [`linearize_swing_with`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SwingOptions {
    /// Generators that receive a control input, in input order.
    /// `None` actuates every generator.
    pub actuated: Option<Vec<usize>>,
    pub b1_policy: B1Policy,
}

impl PowerNetwork {
    pub fn new(
        generators: Vec<Generator>,
        admittance: DMatrix<Complex64>,
        generator_buses: Vec<usize>,
    ) -> Result<Self> {
        let net = Self {
            generators,
            admittance,
            generator_buses,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn inertias(&self) -> Vec<f64> {
        self.generators.iter().map(|g| g.inertia).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let ng = self.generators.len();
        if ng < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 2 generators, found {ng}"
            )));
        }
        for (i, g) in self.generators.iter().enumerate() {
            let fields = [
                ("inertia", g.inertia),
                ("damping", g.damping),
                ("voltage", g.voltage),
                ("injection", g.injection),
                ("angle", g.angle),
            ];
            for (name, v) in fields {
                if !v.is_finite() {
                    return Err(Error::InvalidNetwork(format!(
                        "generator {i}: {name} is not finite"
                    )));
                }
            }
            if g.inertia <= 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "generator {i}: inertia must be positive, got {}",
                    g.inertia
                )));
            }
            if g.damping < 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "generator {i}: damping must be nonnegative, got {}",
                    g.damping
                )));
            }
            if g.voltage <= 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "generator {i}: voltage must be positive, got {}",
                    g.voltage
                )));
            }
        }
        let y = &self.admittance;
        let nb = y.nrows();
        if y.ncols() != nb {
            return Err(Error::InvalidNetwork(format!(
                "admittance matrix is {}x{}, expected square",
                nb,
                y.ncols()
            )));
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidNetwork("admittance has non-finite entries".into()));
        }
        let scale = y.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for i in 0..nb {
            for j in (i + 1)..nb {
                if (y[(i, j)] - y[(j, i)]).norm() > 1e-12 * scale {
                    return Err(Error::InvalidNetwork(format!(
                        "admittance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if self.generator_buses.len() != ng {
            return Err(Error::InvalidNetwork(format!(
                "{} generator buses listed for {ng} generators",
                self.generator_buses.len()
            )));
        }
        let mut seen = vec![false; nb];
        for &b in &self.generator_buses {
            if b >= nb {
                return Err(Error::InvalidNetwork(format!(
                    "generator bus {b} out of range (network has {nb} buses)"
                )));
            }
            if seen[b] {
                return Err(Error::InvalidNetwork(format!("bus {b} carries two generators")));
            }
            seen[b] = true;
        }
        Ok(())
    }

    /// Kron-reduced admittance between generator buses.
    pub fn reduced_admittance(&self) -> Result<DMatrix<Complex64>> {
        kron_reduce(&self.admittance, &self.generator_buses)
    }
}

/// Eliminates every bus not listed in `generator_buses`:
/// `Y_gg − Y_gl Y_ll⁻¹ Y_lg`, rows and columns in `generator_buses` order.
pub fn kron_reduce(y: &DMatrix<Complex64>, generator_buses: &[usize]) -> Result<DMatrix<Complex64>> {
    let nb = y.nrows();
    if y.ncols() != nb {
        return Err(Error::NotSquare {
            rows: nb,
            cols: y.ncols(),
        });
    }
    if let Some(&b) = generator_buses.iter().find(|&&b| b >= nb) {
        return Err(Error::InvalidNetwork(format!("bus {b} out of range")));
    }
    let loads: Vec<usize> = (0..nb).filter(|b| !generator_buses.contains(b)).collect();
    let ng = generator_buses.len();
    let nl = loads.len();
    let ygg = DMatrix::from_fn(ng, ng, |i, j| y[(generator_buses[i], generator_buses[j])]);
    if nl == 0 {
        return Ok(ygg);
    }
    let ygl = DMatrix::from_fn(ng, nl, |i, j| y[(generator_buses[i], loads[j])]);
    let yll = DMatrix::from_fn(nl, nl, |i, j| y[(loads[i], loads[j])]);
    let ylg = ygl.transpose();

    // Guard against a numerically singular load block before eliminating.
    let sv = yll.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-12 * sv.max().max(1.0)) {
        return Err(Error::FloatingLoadSubnetwork);
    }
    let x = yll.lu().solve(&ylg).ok_or(Error::FloatingLoadSubnetwork)?;
    let red = ygg - ygl * x;
    // Symmetrize away elimination round-off.
    Ok((&red + red.transpose()).map(|v| v * 0.5))
}

/// Phase shift `φ_ij = −arctan(Re Y_ij / Im Y_ij)`.
pub fn phase_shift(y: Complex64) -> f64 {
    if y.im != 0.0 {
        -(y.re / y.im).atan()
    } else if y.re == 0.0 {
        0.0
    } else {
        -y.re.signum() * std::f64::consts::FRAC_PI_2
    }
}

/// Linearized coupling matrix of the swing equations.
#[derive(Debug, Clone)]
pub struct SwingLaplacian {
    pub l: DMatrix<f64>,
    /// Pairs `(i, j)` whose coupling `−L_ij` is negative, i.e. where the
    /// operating point drives the line past 90° of effective angle.
    pub negative_couplings: Vec<(usize, usize)>,
}

/// `L_ij = −|Y_ij| E_i E_j cos(θ*_i − θ*_j − φ_ij)`, `L_ii = −Σ_{j≠i} L_ij`.
pub fn swing_laplacian(net: &PowerNetwork) -> Result<SwingLaplacian> {
    net.validate()?;
    let yred = net.reduced_admittance()?;
    let ng = net.n_generators();
    let g = &net.generators;
    let mut l = DMatrix::<f64>::zeros(ng, ng);
    let mut negative_couplings = Vec::new();
    for i in 0..ng {
        for j in 0..ng {
            if i == j {
                continue;
            }
            let yij = yred[(i, j)];
            let phi = phase_shift(yij);
            let coupling =
                yij.norm() * g[i].voltage * g[j].voltage * (g[i].angle - g[j].angle - phi).cos();
            l[(i, j)] = -coupling;
            if coupling < 0.0 && i < j {
                negative_couplings.push((i, j));
            }
        }
    }
    for i in 0..ng {
        let off: f64 = (0..ng).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    Ok(SwingLaplacian {
        l,
        negative_couplings,
    })
}

/// [`linearize_swing_with`] using default options: every generator actuated
/// and `B1 = B2`.
pub fn linearize_swing(net: &PowerNetwork) -> Result<LinearPlant> {
    linearize_swing_with(net, &SwingOptions::default())
}

/// First-order swing model with state `[θ; θ̇]`,
/// `A = [[0, I], [−M⁻¹L, −M⁻¹D]]`.
///
/// Control inputs are power injections at the actuated generators, so the
/// `B2` column of generator `i` has `1/M_i` in the frequency row of `i`.
pub fn linearize_swing_with(net: &PowerNetwork, opts: &SwingOptions) -> Result<LinearPlant> {
    let lap = swing_laplacian(net)?;
    for &(i, j) in &lap.negative_couplings {
        log::warn!("negative coupling between generators {i} and {j}: L is not a Laplacian");
    }
    let ng = net.n_generators();
    let n = 2 * ng;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..ng {
        let gi = &net.generators[i];
        a[(i, ng + i)] = 1.0;
        for j in 0..ng {
            a[(ng + i, j)] = -lap.l[(i, j)] / gi.inertia;
        }
        a[(ng + i, ng + i)] = -gi.damping / gi.inertia;
    }

    let actuated: Vec<usize> = match &opts.actuated {
        Some(v) => v.clone(),
        None => (0..ng).collect(),
    };
    if actuated.is_empty() {
        return Err(Error::InvalidParameter("no actuated generators".into()));
    }
    for (k, &g) in actuated.iter().enumerate() {
        if g >= ng || actuated[..k].contains(&g) {
            return Err(Error::InvalidParameter(format!(
                "invalid or repeated actuated generator {g}"
            )));
        }
    }
    let p = actuated.len();
    let mut b2 = DMatrix::<f64>::zeros(n, p);
    for (col, &g) in actuated.iter().enumerate() {
        b2[(ng + g, col)] = 1.0 / net.generators[g].inertia;
    }
    let b1 = match opts.b1_policy {
        B1Policy::InputChannels => b2.clone(),
        B1Policy::FrequencyDisturbance => {
            let mut b1 = DMatrix::<f64>::zeros(n, ng);
            for g in 0..ng {
                b1[(ng + g, g)] = 1.0;
            }
            b1
        }
    };
    let labels = StateLabels {
        angles: (0..ng).collect(),
        frequencies: (ng..n).collect(),
        remaining: Vec::new(),
        state_generator: (0..n).map(|s| Some(s % ng)).collect(),
        input_generator: actuated.iter().map(|&g| Some(g)).collect(),
    };
    LinearPlant::new(a, b1, b2, labels)
}

/// Four machines in two areas joined by a single weak tie.
///
/// Buses 0–3 carry generators (0, 1 in area one; 2, 3 in area two); buses 4
/// and 5 are load buses. Lines are purely inductive, so every phase shift is
/// zero and the operating angles are uniform.
pub fn two_area_four_machine() -> PowerNetwork {
    let generators = [(2.0, 1.0), (1.6, 0.8), (1.8, 1.2), (1.4, 0.9)]
        .iter()
        .map(|&(inertia, damping)| Generator {
            inertia,
            damping,
            voltage: 1.0,
            injection: 0.0,
            angle: 0.0,
        })
        .collect();
    // (from, to, reactance)
    let lines = [
        (0, 4, 0.1),
        (1, 4, 0.1),
        (0, 1, 0.25),
        (2, 5, 0.1),
        (3, 5, 0.1),
        (2, 3, 0.25),
        (4, 5, 0.5),
    ];
    let nb = 6;
    let mut y = DMatrix::<Complex64>::zeros(nb, nb);
    for &(f, t, x) in &lines {
        let yl = Complex64::new(0.0, -1.0 / x);
        y[(f, f)] += yl;
        y[(t, t)] += yl;
        y[(f, t)] -= yl;
        y[(t, f)] -= yl;
    }
    PowerNetwork::new(generators, y, vec![0, 1, 2, 3]).expect("bundled network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(angle_diff: f64) -> PowerNetwork {
        let g = |angle| Generator {
            inertia: 1.0,
            damping: 1.0,
            voltage: 1.0,
            injection: 0.0,
            angle,
        };
        let yl = Complex64::new(0.0, -1.0);
        let y = DMatrix::from_row_slice(2, 2, &[-yl, yl, yl, -yl]);
        PowerNetwork::new(vec![g(angle_diff), g(0.0)], y, vec![0, 1]).unwrap()
    }

    #[test]
    fn identical_pair_laplacian() {
        let l = swing_laplacian(&pair(0.0)).unwrap().l;
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((l - expected).norm() < 1e-15);
    }

    #[test]
    fn angle_difference_scales_coupling() {
        let l = swing_laplacian(&pair(std::f64::consts::FRAC_PI_3)).unwrap().l;
        assert!((l[(0, 1)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_inertia_names_generator() {
        let mut net = pair(0.0);
        net.generators[1].inertia = -1.0;
        let msg = net.validate().unwrap_err().to_string();
        assert!(msg.contains("generator 1"), "{msg}");
    }

    #[test]
    fn inductive_phase_shift_is_zero() {
        assert_eq!(phase_shift(Complex64::new(0.0, 4.0)), 0.0);
        assert!(phase_shift(Complex64::new(-0.1, 4.0)) > 0.0);
    }
}
