use std::f64::consts::TAU;

use ndstc::projection::objective::objective_of_angles;
use ndstc::projection::optimizer::random_start;
use ndstc::projection::{corner_phase, optimize_projection};
use ndstc::rng::RngStream;

use super::{termination_name, Tables};
use crate::config::ExperimentSpec;
use crate::error::Result;
use crate::output::{num, Table};

const SLICE_STREAM: u64 = 1;
const TRAJECTORY_STREAM: u64 = 2;

pub(super) fn run(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.landscape.as_ref().expect("effective spec");
    let corner = corner_phase(s.l);
    let grid: Vec<f64> = (0..s.grid).map(|i| TAU * i as f64 / s.grid as f64).collect();

    let surface = if s.m == 2 {
        let mut t = Table::new(["theta", "f"]);
        for &x in &grid {
            t.push(vec![num(x), num(objective_of_angles(&[0.0, x], corner))]);
        }
        t
    } else {
        let [a, b] = s.axes;
        let mut theta = random_start(&mut RngStream::new(spec.seed, SLICE_STREAM), s.m);
        let mut t = Table::new([format!("theta_{a}"), format!("theta_{b}"), "f".to_string()]);
        for &x in &grid {
            for &y in &grid {
                theta[a] = x;
                theta[b] = y;
                t.push(vec![num(x), num(y), num(objective_of_angles(&theta, corner))]);
            }
        }
        t
    };

    let opt = optimize_projection(
        s.m,
        s.l,
        &RngStream::new(spec.seed, TRAJECTORY_STREAM),
        &s.optimizer.options(true),
    )?;
    let mut columns = vec!["restart".to_string(), "step".to_string(), "f".to_string()];
    columns.extend((0..s.m).map(|i| format!("theta_{i}")));
    let mut paths = Table::new(columns);
    let mut ends = Table::new(["restart", "initial_f", "final_f", "iterations", "termination"]);
    for (r, trace) in opt.trace.iter().enumerate() {
        for (step, (x, f)) in trace.path.iter().enumerate() {
            let mut row = vec![r.to_string(), step.to_string(), num(*f)];
            row.extend(x.iter().map(|v| num(*v)));
            paths.push(row);
        }
        ends.push(vec![
            r.to_string(),
            num(trace.initial_f),
            num(trace.final_f),
            trace.iterations.to_string(),
            termination_name(trace.termination).to_string(),
        ]);
    }

    Ok(vec![
        ("landscape.csv".into(), surface),
        ("trajectories.csv".into(), paths),
        ("trajectory_ends.csv".into(), ends),
    ])
}
