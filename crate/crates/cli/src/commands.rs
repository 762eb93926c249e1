//! Implementations of the subcommands. Every function returns the process
//! exit code: 0 success/dissipative, 1 verified-not-dissipative (or not
//! exciting / infeasible), with hard errors propagated to the caller.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use dissipativity::excitation::{is_persistently_exciting, min_t_for_nullspace, min_t_for_pe};
use dissipativity::gain::{BisectionConfig, GainEstimate, GainSearch};
use dissipativity::lti::{mass_spring_damper, random_normal_input, StateSpaceModel};
use dissipativity::oracle::oracle_dissipative;
use dissipativity::supply::{
    mass_spring_damper_memoryless_supply, mass_spring_damper_shifted_supply, SupplyRate,
};
use dissipativity::trajectory::Trajectory;
use dissipativity::verifier::{verify, Tolerances, VerificationProblem};
use dissipativity::{Error, RankTolerance, Result};

use crate::config::Settings;

fn tolerances(settings: &Settings) -> Tolerances {
    Tolerances {
        eig_tol: settings.eig_tol,
        rank_tol: RankTolerance::Auto,
    }
}

/// Deterministic per-system seeds: models at `base + id`, inputs at
/// `base + 10_000 + id`.
fn model_seed(base: u64, id: usize) -> u64 {
    base + id as u64
}
fn input_seed(base: u64, id: usize) -> u64 {
    base + 10_000 + id as u64
}

fn simulate_record(
    model: &StateSpaceModel,
    len: usize,
    std_dev: f64,
    seed: u64,
) -> Result<Trajectory> {
    let u = random_normal_input(len, model.num_inputs(), std_dev, seed);
    let y = model.simulate_zero_state(&u)?;
    Trajectory::from_io(u, y)
}

/// Oscillator record with the first two input samples forced to zero.
fn oscillator_record(len: usize, std_dev: f64, seed: u64) -> Result<Trajectory> {
    let model = mass_spring_damper().to_state_space()?;
    let mut u = random_normal_input(len, 1, std_dev, seed);
    for sample in u.iter_mut().take(2) {
        sample[0] = 0.0;
    }
    let y = model.simulate_zero_state(&u)?;
    Trajectory::from_io(u, y)
}

#[allow(clippy::too_many_arguments)]
pub fn generate(
    settings: &Settings,
    count: usize,
    order: usize,
    inputs: usize,
    outputs: usize,
    tf: usize,
    radius: (f64, f64),
    out_dir: &Path,
) -> Result<u8> {
    std::fs::create_dir_all(out_dir)?;
    let needed = min_t_for_pe(30, order, inputs, 0) + 50;
    if tf < needed {
        eprintln!(
            "warning: tf = {tf} is shorter than {needed} samples; the default snapshot \
             protocol (horizon 30, snapshot start 50) will not fit these records"
        );
    }
    let rows: Vec<Result<(PathBuf, PathBuf)>> = (0..count)
        .into_par_iter()
        .map(|id| {
            let model = StateSpaceModel::random_stable(
                order,
                inputs,
                outputs,
                model_seed(settings.seed, id),
                radius,
            )?;
            let traj = simulate_record(
                &model,
                tf,
                settings.input_std,
                input_seed(settings.seed, id),
            )?;
            let model_path = out_dir.join(format!("sys_{id:03}.json"));
            let traj_path = out_dir.join(format!("traj_{id:03}.csv"));
            model.save_json(&model_path)?;
            traj.save_csv(&traj_path)?;
            Ok((model_path, traj_path))
        })
        .collect();
    for row in rows {
        let (model_path, traj_path) = row?;
        println!("{} {}", model_path.display(), traj_path.display());
    }
    Ok(0)
}

pub fn simulate(
    settings: &Settings,
    model_path: &Path,
    steps: Option<usize>,
    input_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<u8> {
    let model = StateSpaceModel::load_json(model_path)?;
    let u = match (steps, input_path) {
        (Some(len), None) => random_normal_input(
            len,
            model.num_inputs(),
            settings.input_std,
            seed.unwrap_or(settings.seed),
        ),
        (None, Some(path)) => Trajectory::load_csv(path)?.inputs().to_vec(),
        _ => {
            return Err(Error::InvalidArgument(
                "give exactly one of --steps or --input".into(),
            ))
        }
    };
    let y = model.simulate_zero_state(&u)?;
    Trajectory::from_io(u, y)?.save_csv(out)?;
    println!("{}", out.display());
    Ok(0)
}

pub fn pe_check(data: &Path, order: usize) -> Result<u8> {
    let traj = Trajectory::load_csv(data)?;
    let report = is_persistently_exciting(traj.inputs(), order, RankTolerance::Auto)?;
    println!(
        "persistently exciting of order {order}: {}",
        report.persistently_exciting
    );
    println!("rank: {} (required {})", report.rank, report.required_rank);
    let smallest: Vec<String> = report
        .singular_values
        .iter()
        .rev()
        .take(10)
        .map(|s| format!("{s:.6e}"))
        .collect();
    println!("ten smallest singular values: {}", smallest.join(" "));
    Ok(if report.persistently_exciting { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
pub fn verify_cmd(
    settings: &Settings,
    data: &Path,
    supply_path: &Path,
    horizon: usize,
    nu: usize,
    order: Option<usize>,
    samples: Option<usize>,
) -> Result<u8> {
    let traj = Trajectory::load_csv(data)?;
    let supply = SupplyRate::load_json(supply_path)?;
    let t_used = samples.unwrap_or_else(|| traj.len().saturating_sub(supply.shift_depth()));
    let mut problem = VerificationProblem::with_t(&traj, &supply, horizon, nu, t_used)?
        .with_tolerances(tolerances(settings));
    if let Some(n) = order {
        problem = problem.with_known_order(n);
    }
    let verdict = verify(&problem)?;
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(if verdict.dissipative { 0 } else { 1 })
}

pub fn oracle_cmd(
    settings: &Settings,
    model_path: &Path,
    supply_path: &Path,
    horizon: usize,
    nu: usize,
) -> Result<u8> {
    let model = StateSpaceModel::load_json(model_path)?;
    let supply = SupplyRate::load_json(supply_path)?;
    let verdict = oracle_dissipative(&model, &supply, horizon, nu, settings.eig_tol)?;
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok(if verdict.dissipative { 0 } else { 1 })
}

fn estimate_json(estimate: &GainEstimate, nullspace_dim: usize) -> serde_json::Value {
    json!({
        "gamma_est": estimate.gamma,
        "feasible": estimate.gamma.is_some(),
        "iterations": estimate.iterations,
        "nullspace_dim": nullspace_dim,
        "history": estimate.history,
    })
}

pub fn l2gain(
    settings: &Settings,
    data: &Path,
    horizon: usize,
    nu: usize,
    cfg: &BisectionConfig,
) -> Result<u8> {
    let traj = Trajectory::load_csv(data)?;
    let search = GainSearch::new(&traj, horizon, nu, tolerances(settings))?;
    let estimate = search.estimate(cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&estimate_json(&estimate, search.nullspace_dim()))?
    );
    Ok(if estimate.gamma.is_some() { 0 } else { 1 })
}

struct ManifestRow {
    system_id: String,
    trajectory: PathBuf,
    model: Option<PathBuf>,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("empty manifest".into()))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() < 2 || fields[0] != "system_id" || fields[1] != "trajectory" {
        return Err(Error::Csv(
            "manifest header must be system_id,trajectory[,model]".into(),
        ));
    }
    let has_model = fields.len() >= 3 && fields[2] == "model";
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(Error::Csv(format!(
                "manifest row {idx} has too few columns"
            )));
        }
        let model = if has_model && cells.len() >= 3 && !cells[2].is_empty() {
            Some(base.join(cells[2]))
        } else {
            None
        };
        rows.push(ManifestRow {
            system_id: cells[0].to_string(),
            trajectory: base.join(cells[1]),
            model,
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
pub fn batch_l2gain(
    settings: &Settings,
    manifest: &Path,
    out: &Path,
    horizon: usize,
    nus: &[usize],
    cfg: &BisectionConfig,
    snapshot: Option<(usize, usize)>,
) -> Result<u8> {
    let rows = read_manifest(manifest)?;
    let results: Vec<Result<String>> = rows
        .par_iter()
        .map(|row| {
            let mut traj = Trajectory::load_csv(&row.trajectory)?;
            if let Some((start, len)) = snapshot {
                traj = traj.snapshot(start, len)?;
            }
            let gamma_true = match &row.model {
                Some(path) => Some(StateSpaceModel::load_json(path)?.hinf_norm(1e-6)?),
                None => None,
            };
            let mut out_rows = String::new();
            for &nu in nus {
                let estimate =
                    GainSearch::new(&traj, horizon, nu, tolerances(settings))?.estimate(cfg)?;
                let _ = writeln!(
                    out_rows,
                    "{},{},{},{},{}",
                    row.system_id,
                    nu,
                    estimate.gamma.map(|g| g.to_string()).unwrap_or_default(),
                    estimate.gamma.is_some(),
                    gamma_true.map(|g| g.to_string()).unwrap_or_default()
                );
            }
            Ok(out_rows)
        })
        .collect();
    let mut csv = String::from("system_id,nu,gamma_est,feasible,gamma_true\n");
    for chunk in results {
        csv.push_str(&chunk?);
    }
    std::fs::write(out, csv)?;
    println!("{}", out.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn reproduce_example_a(
    settings: &Settings,
    count: usize,
    tf: usize,
    horizon: usize,
    snapshot_start: usize,
    cfg: &BisectionConfig,
    out: &Path,
) -> Result<u8> {
    let t_used = min_t_for_pe(horizon, 4, 2, 0);
    let nus = [5usize, 28];
    let rows: Vec<Result<String>> = (0..count)
        .into_par_iter()
        .map(|id| {
            let model = StateSpaceModel::random_stable(
                4,
                2,
                2,
                model_seed(settings.seed, id),
                (0.3, 0.95),
            )?;
            let record = simulate_record(
                &model,
                tf,
                settings.input_std,
                input_seed(settings.seed, id),
            )?;
            let snap = record.snapshot(snapshot_start, t_used)?;
            let gamma_true = model.hinf_norm(1e-6)?;
            let mut cells = Vec::new();
            for nu in nus {
                let estimate =
                    GainSearch::new(&snap, horizon, nu, tolerances(settings))?.estimate(cfg)?;
                cells.push((
                    estimate.gamma.map(|g| g.to_string()).unwrap_or_default(),
                    estimate.gamma.is_some(),
                ));
            }
            Ok(format!(
                "{id},{gamma_true},{},{},{},{}\n",
                cells[0].0, cells[0].1, cells[1].0, cells[1].1
            ))
        })
        .collect();
    let mut csv = String::from(
        "system_id,gamma_true,gamma_est_nu5,feasible_nu5,gamma_est_nu28,feasible_nu28\n",
    );
    for row in rows {
        csv.push_str(&row?);
    }
    std::fs::write(out, csv)?;
    println!("{}", out.display());
    Ok(0)
}

pub fn reproduce_example_b(
    settings: &Settings,
    samples: usize,
    matrix_samples: usize,
    tf: usize,
    out_dir: &Path,
) -> Result<u8> {
    std::fs::create_dir_all(out_dir)?;
    let w1 = mass_spring_damper_shifted_supply();
    let w2 = mass_spring_damper_memoryless_supply();

    // Supply sums over every record.
    let sums: Vec<Result<(f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|id| {
            let traj = oscillator_record(tf, settings.input_std, input_seed(settings.seed, id))?;
            Ok((w1.sum(&traj, tf - 1)?, w2.sum(&traj, tf)?))
        })
        .collect();
    let mut csv = String::from("sample_id,sum_shifted_supply,sum_memoryless_supply\n");
    let mut min_w1 = f64::INFINITY;
    let mut min_w2 = f64::INFINITY;
    for (id, entry) in sums.into_iter().enumerate() {
        let (s1, s2) = entry?;
        min_w1 = min_w1.min(s1);
        min_w2 = min_w2.min(s2);
        let _ = writeln!(csv, "{id},{s1},{s2}");
    }
    let sums_path = out_dir.join("supply_sums.csv");
    std::fs::write(&sums_path, csv)?;

    // Verdict matrix: horizons 3..=10, every nu, both data-length modes,
    // snapshots starting at index 50.
    let order = 2;
    let matrix_samples = matrix_samples.min(samples).max(1);
    let records: Vec<Trajectory> = (0..matrix_samples)
        .map(|id| oscillator_record(tf, settings.input_std, input_seed(settings.seed, id)))
        .collect::<Result<_>>()?;
    let mut matrix_csv = String::from("L,nu,t_mode,T,samples,all_pass,worst_min_eigenvalue\n");
    let mut all_cells_pass = true;
    for horizon in 3..=10usize {
        let t_pe = min_t_for_pe(horizon, order, 1, 1);
        let t_ns = min_t_for_nullspace(horizon, 1, 1).max(t_pe);
        for (mode, t_used) in [("excitation", t_pe), ("nullspace", t_ns)] {
            for nu in 2..horizon {
                let mut worst = f64::INFINITY;
                let mut pass = true;
                for record in &records {
                    let snap = record.snapshot(50, t_used + 1)?;
                    let problem = VerificationProblem::with_t(&snap, &w1, horizon, nu, t_used)?
                        .with_known_order(order)
                        .with_tolerances(tolerances(settings));
                    let verdict = verify(&problem)?;
                    worst = worst.min(verdict.min_eigenvalue);
                    pass &= verdict.dissipative;
                }
                all_cells_pass &= pass;
                let _ = writeln!(
                    matrix_csv,
                    "{horizon},{nu},{mode},{t_used},{matrix_samples},{pass},{worst}"
                );
            }
        }
    }
    let matrix_path = out_dir.join("verdict_matrix.csv");
    std::fs::write(&matrix_path, matrix_csv)?;

    println!("{}", sums_path.display());
    println!("{}", matrix_path.display());
    println!(
        "min shifted-supply sum: {min_w1} (expected >= 0); min memoryless-supply sum: {min_w2}; \
         verdict matrix all cells pass: {all_cells_pass}"
    );
    Ok(0)
}
