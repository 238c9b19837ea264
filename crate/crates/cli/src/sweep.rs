use std::fmt::Write as _;

use ncgabor::geometry::{soliton_experiment, ChernReport};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, RawConfig, Task, SWEEP_AXES};
use crate::error::{config, core_exit_code, Result};
use crate::report::{Check, Report};

pub const CSV_HEADER: &str = "alpha,beta,r,s,q,A,B,c1_re,c1_im,energy,gap,sd_plus,sd_minus,W_residual,radius,N,L";

pub struct SweepOutput {
    pub report: Report,
    pub csv: String,
    /// `x energy` rows along the first axis with more than one value.
    pub energy_curve: String,
    /// Exit code of the first failed point, if any.
    pub failure_code: Option<u8>,
}

/// Cartesian product of the axis values, first axis outermost.
fn grid_points(raw: &RawConfig) -> Result<Vec<Vec<(&'static str, f64)>>> {
    let mut points = vec![Vec::new()];
    for &key in SWEEP_AXES {
        let values = raw.axis(key)?;
        if values.is_empty() {
            continue;
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut p = p.clone();
                    p.push((key, v));
                    p
                })
            })
            .collect();
    }
    Ok(points)
}

fn row(cfg: &ExperimentConfig, r: Option<&ChernReport>) -> String {
    let p = &cfg.params;
    let nan = f64::NAN;
    let vals = match r {
        Some(r) => [
            r.frame_lower,
            r.frame_upper,
            r.c1_re,
            r.c1_im,
            r.energy,
            r.gap,
            r.sd_residual_plus,
            r.sd_residual_minus,
            r.w_residual(),
        ],
        None => [nan; 9],
    };
    let vals: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
    format!(
        "{},{},{},{},{},{},{},{},{}",
        p.alpha,
        p.beta,
        p.r,
        p.s,
        p.q,
        vals.join(","),
        cfg.radius,
        cfg.grid.samples,
        cfg.grid.period
    )
}

pub fn run(raw: &RawConfig) -> Result<SweepOutput> {
    let points = grid_points(raw)?;
    let configs = points
        .iter()
        .map(|pt| {
            let cfg = ExperimentConfig::resolve(&raw.pinned(pt), &[Task::Energy])?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let first = configs.first().ok_or_else(|| config("sweep has no points"))?;
    let tasks = first.tasks.clone();

    let results: Vec<std::result::Result<ChernReport, ncgabor::Error>> =
        configs.par_iter().map(|cfg| soliton_experiment(&cfg.params, &cfg.window, &cfg.settings())).collect();

    let mut report = Report::new("sweep", first);
    let mut csv = format!("{CSV_HEADER}\n");
    let mut failures = Vec::new();
    let mut failure_code = None;
    let x_axis = points[0].iter().map(|(k, _)| *k).find(|k| raw.axis(k).map(|v| v.len() > 1).unwrap_or(false));
    let mut curve = format!("# {} energy\n", x_axis.unwrap_or("index"));
    let (mut min_gap, mut worst_int, mut worst_q) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (i, (cfg, res)) in configs.iter().zip(&results).enumerate() {
        match res {
            Ok(r) => {
                csv.push_str(&row(cfg, Some(r)));
                min_gap = min_gap.min(r.gap);
                worst_int = worst_int.max((r.c1_re - r.c1_re.round()).abs());
                if r.admissible {
                    worst_q = worst_q.max((r.energy - cfg.params.q as f64).abs());
                }
                let x = match x_axis {
                    Some(k) => points[i].iter().find(|(key, _)| *key == k).unwrap().1,
                    None => i as f64,
                };
                writeln!(curve, "{x} {}", r.energy).unwrap();
            }
            Err(e) => {
                csv.push_str(&row(cfg, None));
                let code = core_exit_code(e);
                failure_code.get_or_insert(code);
                failures.push(json!({ "alpha": cfg.params.alpha, "beta": cfg.params.beta, "q": cfg.params.q, "error": e.to_string(), "exit_code": code }));
            }
        }
        csv.push('\n');
    }

    let axes: serde_json::Map<String, serde_json::Value> = SWEEP_AXES
        .iter()
        .filter_map(|k| raw.axis(k).ok().filter(|v| !v.is_empty()).map(|v| (k.to_string(), json!(v))))
        .collect();
    report.insert("axes", axes);
    report.insert("points", configs.len());
    report.insert("failures", failures);
    let tol = first.ladder.chern;
    if tasks.contains(&Task::Energy) {
        report.check(Check::at_least("min(E - |c1|)", min_gap, -tol));
    }
    if tasks.contains(&Task::Chern) {
        report.check(Check::below("max c1 distance to an integer", worst_int, tol));
    }
    if tasks.contains(&Task::Soliton) {
        report.check(Check::below("max |E - q| over admissible points", worst_q, tol));
    }
    Ok(SweepOutput { report, csv, energy_curve: curve, failure_code })
}
