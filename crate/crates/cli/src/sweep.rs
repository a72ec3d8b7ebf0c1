use rayon::prelude::*;

use jeans::initial::random_admissible_data;

use crate::config::{Axis, RunConfig};
use crate::modes::mode_row;
use crate::output::{num, Metadata, Table};
use crate::simulate::{initial_data, run_from, snapshot_row, SnapshotRow};

/// Relative per-step energy growth still counted as non-increasing.
pub const ENERGY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub error: Option<String>,
    pub t_final: Option<f64>,
    pub initial_energy: Option<f64>,
    pub final_energy: Option<f64>,
    pub max_step_increase: Option<f64>,
    pub energy_nonincreasing: Option<bool>,
    pub min_relative_margin: Option<f64>,
    pub class: Option<&'static str>,
    pub amp_final: Option<f64>,
    /// Closed form vs ODE on the `lambda` axis, nonlinear minus linear
    /// `L²` distance at the final time on the `epsilon` axis.
    pub gap: Option<f64>,
    /// Previous row's gap over this one, `epsilon` axis only.
    pub gap_ratio: Option<f64>,
    pub note: Option<String>,
}

const HEADER: [&str; 14] = [
    "axis",
    "value",
    "status",
    "t_final",
    "initial_energy",
    "final_energy",
    "max_step_increase",
    "energy_nonincreasing",
    "min_relative_margin",
    "class",
    "amp_final",
    "gap",
    "gap_ratio",
    "message",
];

fn fill(row: &mut SweepRow, snaps: &[SnapshotRow], max_step_increase: f64) {
    let (first, last) = (&snaps[0], &snaps[snaps.len() - 1]);
    row.t_final = Some(last.t);
    row.initial_energy = Some(first.energy);
    row.final_energy = Some(last.energy);
    row.max_step_increase = Some(max_step_increase);
    row.energy_nonincreasing = Some(max_step_increase <= ENERGY_SLACK && last.energy <= first.energy);
    row.min_relative_margin = Some(snaps.iter().map(|s| s.relative_margin).fold(f64::INFINITY, f64::min));
}

fn simulate_row(cfg: &RunConfig, row: &mut SweepRow) -> Result<(), String> {
    let cfg = cfg.clone().resolve().map_err(|e| e.to_string())?;
    let (d, _, _, note) = initial_data(&cfg).map_err(|e| e.to_string())?;
    let run = run_from(&cfg, &d).map_err(|e| e.to_string())?;
    let snaps = run
        .states
        .iter()
        .map(|s| snapshot_row(&cfg, s))
        .collect::<jeans::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    fill(row, &snaps, run.max_step_increase);
    row.note = note;
    Ok(())
}

fn epsilon_row(cfg: &RunConfig, eps: f64, row: &mut SweepRow) -> Result<(), String> {
    let mut cfg = cfg.clone().resolve().map_err(|e| e.to_string())?;
    let s = |e: jeans::Error| e.to_string();
    let d = random_admissible_data(cfg.grid.build().map_err(s)?, cfg.beta, eps, cfg.sobolev_s, cfg.seed).map_err(s)?;
    cfg.nonlinear = false;
    let lin = run_from(&cfg, &d).map_err(s)?;
    cfg.nonlinear = true;
    let nl = run_from(&cfg, &d).map_err(s)?;
    let snaps = nl
        .states
        .iter()
        .map(|st| snapshot_row(&cfg, st))
        .collect::<jeans::Result<Vec<_>>>()
        .map_err(s)?;
    fill(row, &snaps, nl.max_step_increase);
    let (a, b) = (lin.states.last().expect("final state"), nl.states.last().expect("final state"));
    row.gap = Some(b.rho.sub(&a.rho).l2_norm());
    Ok(())
}

pub fn run_one(cfg: &RunConfig, axis: Axis, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        ..Default::default()
    };
    let mut c = cfg.clone();
    let outcome = match axis {
        Axis::Gamma => {
            c.params.gamma = value;
            simulate_row(&c, &mut row)
        }
        Axis::Kappa => {
            c.params.kappa = value;
            simulate_row(&c, &mut row)
        }
        Axis::Tol => {
            c.tol = value;
            simulate_row(&c, &mut row)
        }
        Axis::N => {
            if value.fract() != 0.0 || value < 0.0 {
                Err(format!("n = {value}: not a whole number"))
            } else {
                c.grid.n = value as usize;
                simulate_row(&c, &mut row)
            }
        }
        Axis::Epsilon => epsilon_row(&c, value, &mut row),
        Axis::Lambda => {
            let t = cfg.t_end();
            mode_row(cfg, value, &[t]).map_err(|e| e.to_string()).map(|m| {
                row.class = Some(m.class);
                row.amp_final = m.amps.first().copied();
                row.gap = m.ode_error;
                row.t_final = Some(t);
            })
        }
    };
    if let Err(e) = outcome {
        row = SweepRow {
            value,
            error: Some(e),
            ..Default::default()
        };
    }
    row
}

/// One row per value, in input order whatever the worker count.
pub fn sweep_rows(cfg: &RunConfig, axis: Axis, values: &[f64]) -> Vec<SweepRow> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool");
    let mut rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(|&v| run_one(cfg, axis, v)).collect());
    if axis == Axis::Epsilon {
        for i in 1..rows.len() {
            if let (Some(a), Some(b)) = (rows[i - 1].gap, rows[i].gap) {
                rows[i].gap_ratio = Some(a / b);
            }
        }
    }
    rows
}

pub fn cmd_sweep(cfg: &RunConfig, axis: Axis) -> String {
    let rows = sweep_rows(cfg, axis, &cfg.sweep.values);
    let mut table = Table::new(&Metadata::new(cfg), &HEADER.map(String::from));
    for r in rows {
        let status = if r.error.is_some() { "error" } else { "ok" };
        table.row(&[
            axis.name().to_string(),
            num(Some(r.value)),
            status.to_string(),
            num(r.t_final),
            num(r.initial_energy),
            num(r.final_energy),
            num(r.max_step_increase),
            r.energy_nonincreasing.map(|b| b.to_string()).unwrap_or_default(),
            num(r.min_relative_margin),
            r.class.unwrap_or_default().to_string(),
            num(r.amp_final),
            num(r.gap),
            num(r.gap_ratio),
            r.error.or(r.note).unwrap_or_default(),
        ]);
    }
    table.finish()
}
