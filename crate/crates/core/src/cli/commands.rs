//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::config::{AdmmArgs, CostArgs, CostBuilder, InputArgs, ScheduleArgs, SimArgs};
use super::report::{fmt_num, pattern_grid, state_name, Table};
use crate::analysis::{
    default_margin_grid, delay_margin_single_channel, disk_margins, mode_report, DelayModel,
    DelayedChannel, FeedbackChannel, InitialState, ModeSelector, SimScenario, DEFAULT_PADE_ORDER,
};
use crate::error::{Error, Result};
use crate::grid::model_file::{CostSection, GainSection, NetworkSection, PlantSection};
use crate::grid::{
    build_cost_average, build_cost_two_area, linearize_swing, load_network, two_area_four_machine,
    write_atomic, CoherencyPartition, CostSpec, LinearPlant, ModelFile, PowerNetwork,
};
use crate::h2::{card, gamma_sweep, is_local, polish, RecordStatus, SweepOptions, CARD_TOL};
use crate::linalg::spectrum;

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success(Vec<PathBuf>),
    /// Ran to completion but nothing was solved.
    NoSolution(Vec<PathBuf>),
}

/// Files written by `sweep`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReportFiles {
    pub summary: PathBuf,
    pub gains: Vec<PathBuf>,
    pub patterns: Vec<PathBuf>,
    pub margins: PathBuf,
}

impl SweepReportFiles {
    pub fn all(&self) -> Vec<PathBuf> {
        let mut v = vec![self.summary.clone(), self.margins.clone()];
        v.extend(self.gains.iter().cloned());
        v.extend(self.patterns.iter().cloned());
        v
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidParameter(format!("missing --{flag}")))
}

fn output_path(out_dir: &Path, input: &InputArgs, default: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    Ok(out_dir.join(input.output.as_deref().unwrap_or(default)))
}

fn load_model(input: &InputArgs) -> Result<(PathBuf, ModelFile, LinearPlant)> {
    let path = require(&input.model, "model")?.to_path_buf();
    let file = ModelFile::load(&path)?;
    let plant = file.plant(&path)?;
    Ok((path, file, plant))
}

fn load_gain(input: &InputArgs, plant: &LinearPlant) -> Result<Option<DMatrix<f64>>> {
    match &input.gain {
        Some(path) => Ok(Some(ModelFile::load(path)?.gain(path, plant.p(), plant.n())?)),
        None => Ok(None),
    }
}

fn build_cost(plant: &LinearPlant, inertia: Option<Vec<f64>>, args: &CostArgs) -> Result<CostSpec> {
    let (ell, m, eps) = args.params();
    match args.cost.unwrap_or(CostBuilder::Average) {
        CostBuilder::Average => build_cost_average(plant, ell, m, eps),
        CostBuilder::TwoArea => {
            let areas = args.parse_areas()?.ok_or_else(|| {
                Error::InvalidParameter("two-area cost needs --areas, e.g. 0,1;2,3".into())
            })?;
            let inertia = inertia
                .unwrap_or_else(|| vec![1.0; plant.labels.n_generators()]);
            let part = CoherencyPartition::new(areas, &inertia)?;
            build_cost_two_area(plant, &part, ell, m, eps)
        }
    }
}

/// Cost stored in the model file, or one built from the cost flags.
fn model_cost(path: &Path, file: &ModelFile, plant: &LinearPlant, args: &CostArgs) -> Result<CostSpec> {
    if file.cost.is_some() {
        let cost = file.cost(path)?;
        if cost.n() != plant.n() || cost.p() != plant.p() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: "cost dimensions do not match the plant".into(),
            });
        }
        return Ok(cost);
    }
    let inertia = match &file.network {
        Some(_) => Some(file.network(path)?.inertias()),
        None => None,
    };
    build_cost(plant, inertia, args)
}

pub fn cmd_build_model(out_dir: &Path, input: &InputArgs, cost: &CostArgs) -> Result<Outcome> {
    let net: PowerNetwork = match &input.network {
        Some(path) => load_network(path)?,
        None => two_area_four_machine(),
    };
    let plant = linearize_swing(&net)?;
    let mut cost_args = cost.clone();
    if cost_args.cost == Some(CostBuilder::TwoArea) && cost_args.areas.is_none() && input.network.is_none() {
        cost_args.areas = Some("0,1;2,3".into());
    }
    let spec = build_cost(&plant, Some(net.inertias()), &cost_args)?;
    let file = ModelFile {
        network: Some(NetworkSection::from_network(&net)),
        plant: Some(PlantSection::from_plant(&plant)),
        cost: Some(CostSection::from_cost(&spec)),
        gain: None,
    };
    let path = output_path(out_dir, input, "model.toml")?;
    write_atomic(&path, &file.to_toml())?;
    println!(
        "model: {} generators, {} states, {} inputs -> {}",
        net.n_generators(),
        plant.n(),
        plant.p(),
        path.display()
    );
    Ok(Outcome::Success(vec![path]))
}

fn gain_file(k: &DMatrix<f64>, gamma: Option<f64>) -> String {
    ModelFile {
        gain: Some(GainSection::new(k, gamma)),
        ..Default::default()
    }
    .to_toml()
}

pub fn cmd_sweep(
    out_dir: &Path,
    input: &InputArgs,
    schedule: &ScheduleArgs,
    cost: &CostArgs,
    admm: &AdmmArgs,
) -> Result<(Outcome, SweepReportFiles)> {
    let (path, file, plant) = load_model(input)?;
    let cost = model_cost(&path, &file, &plant, cost)?;
    let gammas = schedule.schedule()?;
    let opts = SweepOptions {
        admm: admm.options(),
        ..Default::default()
    };
    opts.admm.validate()?;
    let result = gamma_sweep(&plant, &cost, &gammas, &opts)?;

    std::fs::create_dir_all(out_dir.join("gains"))?;
    std::fs::create_dir_all(out_dir.join("patterns"))?;
    let mut summary = Table::new([
        "gamma",
        "J",
        "card",
        "card_remote",
        "degradation",
        "admm_iterations",
        "polish_iterations",
        "converged",
        "hurwitz",
        "status",
    ]);
    let mut margins = Table::new([
        "gamma",
        "alpha",
        "phase_margin_deg",
        "gain_reduction",
        "gain_amplification",
        "omega_min",
    ]);
    let grid = default_margin_grid();
    let mut gains = Vec::new();
    let mut patterns = Vec::new();
    println!("{:>12}  {:>5}  {:>14}  {:>10}", "gamma", "card", "degradation %", "PM deg");
    for (idx, rec) in result.records.iter().enumerate() {
        let status = match &rec.status {
            RecordStatus::Solved => "solved".to_string(),
            RecordStatus::Centralized => "centralized".to_string(),
            RecordStatus::Failed(why) => format!("failed: {}", why.replace(['\t', '\n'], " ")),
        };
        summary.push(vec![
            fmt_num(rec.gamma),
            fmt_num(rec.j),
            rec.card.to_string(),
            rec.card_remote.to_string(),
            fmt_num(rec.degradation),
            rec.iterations.to_string(),
            rec.polish_iterations.to_string(),
            rec.converged.to_string(),
            rec.hurwitz.to_string(),
            status,
        ]);
        let pm = match disk_margins(&plant, &rec.k, Some(&grid)) {
            Ok(m) => {
                margins.push(vec![
                    fmt_num(rec.gamma),
                    fmt_num(m.alpha),
                    fmt_num(m.phase_margin_deg),
                    fmt_num(m.gain_reduction),
                    fmt_num(m.gain_amplification),
                    fmt_num(m.omega_min),
                ]);
                m.phase_margin_deg
            }
            Err(e) => {
                log::warn!("disk margins at gamma {}: {e}", rec.gamma);
                let nan = fmt_num(f64::NAN);
                margins.push(vec![fmt_num(rec.gamma), nan.clone(), nan.clone(), nan.clone(), nan.clone(), nan]);
                f64::NAN
            }
        };
        println!(
            "{:>12}  {:>5}  {:>14}  {:>10}",
            fmt_num(rec.gamma),
            rec.card,
            fmt_num(100.0 * rec.degradation),
            fmt_num(pm)
        );
        let gain_path = out_dir.join("gains").join(format!("gain_{idx:03}.toml"));
        write_atomic(&gain_path, &gain_file(&rec.k, Some(rec.gamma)))?;
        gains.push(gain_path);
        let pattern_path = out_dir.join("patterns").join(format!("pattern_{idx:03}.txt"));
        let title = format!("gamma = {}, card = {}", fmt_num(rec.gamma), rec.card);
        write_atomic(&pattern_path, &pattern_grid(&rec.k, &plant.labels, &title))?;
        patterns.push(pattern_path);
    }
    let files = SweepReportFiles {
        summary: out_dir.join("summary.tsv"),
        gains,
        patterns,
        margins: out_dir.join("margins.tsv"),
    };
    write_atomic(&files.summary, &summary.to_tsv())?;
    write_atomic(&files.margins, &margins.to_tsv())?;
    println!(
        "J*_0 = {}; {} of {} gamma values solved; tables in {}",
        fmt_num(result.j0),
        result.succeeded(),
        result.records.len(),
        out_dir.display()
    );
    let outcome = if result.succeeded() > 0 {
        Outcome::Success(files.all())
    } else {
        Outcome::NoSolution(files.all())
    };
    Ok((outcome, files))
}

fn named_block(fields: &[(&str, String)]) -> String {
    fields.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
}

pub fn cmd_analyze(out_dir: &Path, input: &InputArgs) -> Result<Outcome> {
    let (_, _, plant) = load_model(input)?;
    let k = load_gain(input, &plant)?.unwrap_or_else(|| DMatrix::zeros(plant.p(), plant.n()));
    let a_cl = plant.closed_loop(&k);
    std::fs::create_dir_all(out_dir)?;

    let report = mode_report(&a_cl)?;
    let mut modes = Table::new(["mode", "real", "imag", "damping", "frequency_hz", "dominant_state"]);
    println!("{:>4}  {:>14}  {:>14}  {:>10}  {:>10}", "mode", "real", "imag", "damping", "f [Hz]");
    for (i, m) in report.modes.iter().enumerate() {
        modes.push(vec![
            i.to_string(),
            fmt_num(m.eigenvalue.re),
            fmt_num(m.eigenvalue.im),
            fmt_num(m.damping),
            fmt_num(m.frequency),
            state_name(&plant.labels, m.dominant_state()),
        ]);
        println!(
            "{:>4}  {:>14}  {:>14}  {:>10}  {:>10}",
            i,
            fmt_num(m.eigenvalue.re),
            fmt_num(m.eigenvalue.im),
            format!("{:.5}", m.damping),
            format!("{:.5}", m.frequency)
        );
    }
    let modes_path = out_dir.join("modes.tsv");
    write_atomic(&modes_path, &modes.to_tsv())?;

    let margins_path = out_dir.join("margins.txt");
    let channels_path = out_dir.join("channels.tsv");
    let stable = spectrum(&a_cl)?;
    let mut written = vec![modes_path];
    if stable.is_hurwitz {
        let m = disk_margins(&plant, &k, None)?;
        let block = named_block(&[
            ("status", "stable".into()),
            ("alpha", fmt_num(m.alpha)),
            ("phase_margin_deg", fmt_num(m.phase_margin_deg)),
            ("gain_reduction", fmt_num(m.gain_reduction)),
            ("gain_amplification", fmt_num(m.gain_amplification)),
            ("omega_min", fmt_num(m.omega_min)),
            ("grid_points", m.grid.len().to_string()),
            ("grid_min", fmt_num(m.grid.iter().cloned().fold(f64::INFINITY, f64::min))),
            ("grid_max", fmt_num(m.grid.iter().cloned().fold(0.0, f64::max))),
            ("skipped_points", m.skipped.to_string()),
        ]);
        print!("{block}");
        write_atomic(&margins_path, &block)?;

        let mut channels = Table::new([
            "input",
            "state",
            "gain",
            "phase_margin_deg",
            "crossover",
            "delay_margin",
            "gain_margin",
        ]);
        for i in 0..plant.p() {
            for j in 0..plant.n() {
                if k[(i, j)].abs() <= CARD_TOL || is_local(&plant.labels, i, j) {
                    continue;
                }
                let ch = FeedbackChannel { input: i, state: j };
                match delay_margin_single_channel(&plant, &k, ch) {
                    Ok(s) => channels.push(vec![
                        i.to_string(),
                        state_name(&plant.labels, j),
                        fmt_num(k[(i, j)]),
                        fmt_num(s.phase_margin_deg),
                        s.crossover.map_or("none".into(), fmt_num),
                        fmt_num(s.delay_margin),
                        fmt_num(s.gain_margin),
                    ]),
                    Err(e) => log::warn!("channel ({i}, {j}): {e}"),
                }
            }
        }
        write_atomic(&channels_path, &channels.to_tsv())?;
        written.extend([margins_path, channels_path]);
    } else {
        let block = named_block(&[
            ("status", "unstable".into()),
            ("max_real_part", fmt_num(stable.max_real_part)),
            ("diagnostic", "closed loop is not Hurwitz; margins are undefined".into()),
        ]);
        print!("{block}");
        write_atomic(&margins_path, &block)?;
        written.push(margins_path);
    }
    let pattern_path = out_dir.join("pattern.txt");
    write_atomic(&pattern_path, &pattern_grid(&k, &plant.labels, &format!("card = {}", card(&k))))?;
    written.push(pattern_path);
    Ok(Outcome::Success(written))
}

fn parse_delay(text: &str) -> Result<DelayedChannel> {
    let bad = || Error::InvalidParameter(format!("delay {text:?} is not input:state:seconds"));
    let parts: Vec<&str> = text.split(':').collect();
    let [i, s, t] = parts.as_slice() else {
        return Err(bad());
    };
    Ok(DelayedChannel {
        input: i.trim().parse().map_err(|_| bad())?,
        state: s.trim().parse().map_err(|_| bad())?,
        delay: t.trim().parse().map_err(|_| bad())?,
    })
}

fn parse_initial(text: Option<&str>) -> Result<InitialState> {
    match text {
        None | Some("zero") => Ok(InitialState::Zero),
        Some("mode") => Ok(InitialState::OpenLoopMode(ModeSelector::LeastDampedOscillatory)),
        Some(other) => {
            let idx = other
                .strip_prefix("mode:")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("unknown initial state {other:?}")))?;
            Ok(InitialState::OpenLoopMode(ModeSelector::Index(idx)))
        }
    }
}

pub fn scenario_from_args(sim: &SimArgs, seed: u64) -> Result<SimScenario> {
    let delayed = sim
        .delays
        .iter()
        .flatten()
        .map(|d| parse_delay(d))
        .collect::<Result<Vec<_>>>()?;
    let delay_model = match sim.pade_order.unwrap_or(DEFAULT_PADE_ORDER) {
        0 => DelayModel::None,
        o => DelayModel::Pade(o),
    };
    let defaults = SimScenario::default();
    Ok(SimScenario {
        initial: parse_initial(sim.initial.as_deref())?,
        horizon: sim.horizon.unwrap_or(defaults.horizon),
        step: sim.step.unwrap_or(defaults.step),
        noise_std: sim.noise_std.clone().unwrap_or(defaults.noise_std),
        delayed,
        delay_model,
        seed,
    })
}

pub fn cmd_simulate(out_dir: &Path, seed: u64, input: &InputArgs, sim: &SimArgs) -> Result<Outcome> {
    let (_, _, plant) = load_model(input)?;
    let k = load_gain(input, &plant)?.unwrap_or_else(|| DMatrix::zeros(plant.p(), plant.n()));
    let scenario = scenario_from_args(sim, seed)?;
    let tr = crate::analysis::simulate(&plant, &k, &scenario)?;

    let n = tr.plant_states;
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|s| state_name(&plant.labels, s)));
    header.extend((n..tr.states.ncols()).map(|s| format!("pade_{}", s - n)));
    header.extend((0..tr.inputs.ncols()).map(|i| format!("u_{i}")));
    header.extend((0..tr.angle_differences.ncols()).map(|g| format!("dtheta_{}_0", g + 1)));
    let mut table = Table::new(header);
    for (r, t) in tr.t.iter().enumerate() {
        let mut row = vec![fmt_num(*t)];
        row.extend(tr.states.row(r).iter().map(|&v| fmt_num(v)));
        row.extend(tr.inputs.row(r).iter().map(|&v| fmt_num(v)));
        row.extend(tr.angle_differences.row(r).iter().map(|&v| fmt_num(v)));
        table.push(row);
    }
    let path = output_path(out_dir, input, "trajectory.tsv")?;
    write_atomic(&path, &table.to_tsv())?;
    println!(
        "simulated {} steps, {} states ({} plant + {} delay) -> {}",
        tr.t.len() - 1,
        tr.states.ncols(),
        n,
        tr.states.ncols() - n,
        path.display()
    );
    Ok(Outcome::Success(vec![path]))
}

pub fn cmd_polish(out_dir: &Path, input: &InputArgs, cost: &CostArgs) -> Result<Outcome> {
    let (path, file, plant) = load_model(input)?;
    let cost = model_cost(&path, &file, &plant, cost)?;
    let k = load_gain(input, &plant)?
        .ok_or_else(|| Error::InvalidParameter("missing --gain".into()))?;
    let pattern = k.map(|v| v.abs() > CARD_TOL);
    let k = k.zip_map(&pattern, |v, keep| if keep { v } else { 0.0 });
    let out = output_path(out_dir, input, "polished_gain.toml")?;
    match polish(&plant, &cost, &pattern, &k) {
        Ok(res) => {
            write_atomic(&out, &gain_file(res.gain.matrix(), None))?;
            println!(
                "polished over {} entries: J {} -> {} in {} iterations (converged {})",
                card(&k),
                fmt_num(res.j_init),
                fmt_num(res.j),
                res.iterations,
                res.converged
            );
            Ok(Outcome::Success(vec![out]))
        }
        Err(Error::PolishStalledUnstable) => {
            eprintln!("polish: the given gain does not stabilize the plant");
            Ok(Outcome::NoSolution(Vec::new()))
        }
        Err(e) => Err(e),
    }
}
