use ndstc::codebook::{AdsmCodebook, Codebook};
use ndstc::projection::{
    angles_to_vector, coding_gain_closed, coding_gain_matrix, expand_time, objective_f, optimize_projection,
    DEFAULT_PAIRWISE_BITS,
};
use ndstc::security::SecretSeed;

use super::Tables;
use crate::config::ExperimentSpec;
use crate::error::Result;
use crate::output::{num, Table};

pub(super) fn run(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.basis.as_ref().expect("effective spec");
    let nb = s.nb();
    let opt = optimize_projection(nb, s.l, &SecretSeed(spec.seed).stream(), &s.optimizer.options(false))?;
    let wide = opt.vector.expand_to(s.m)?;
    let e1 = expand_time(&wide, s.t)?;

    let mut vector = Table::new(vec!["row", "col", "re", "im", "angle"]);
    let mat = e1.matrix();
    for r in 0..mat.rows() {
        for c in 0..mat.cols() {
            let v = mat[(r, c)];
            let angle = if v.norm() > 0.0 { num(v.arg().rem_euclid(std::f64::consts::TAU)) } else { String::new() };
            vector.push(vec![r.to_string(), c.to_string(), num(v.re), num(v.im), angle]);
        }
    }

    let closed = coding_gain_closed(wide.values(), s.l, s.n_rx);
    // the pairwise matrix gain only when enumerable; the closed form covers T = 1
    let cb = Codebook::Adsm(AdsmCodebook::new(s.m, s.l)?);
    let matrix_gain = if s.t > 1 {
        coding_gain_matrix(mat, &cb, s.n_rx, DEFAULT_PAIRWISE_BITS).ok()
    } else {
        None
    };
    let mut summary = Table::new(vec![
        "m", "nb", "t", "l", "n_rx", "f", "g1", "g2", "gain", "matrix_gain", "best_restart", "converged",
    ]);
    summary.push(vec![
        s.m.to_string(),
        nb.to_string(),
        s.t.to_string(),
        s.l.to_string(),
        s.n_rx.to_string(),
        num(objective_f(wide.values(), s.l)),
        num(closed.g1),
        num(closed.g2),
        num(closed.gain),
        matrix_gain.map(num).unwrap_or_default(),
        opt.best_restart.to_string(),
        opt.converged.to_string(),
    ]);

    let mut restarts = Table::new(vec!["restart", "initial_f", "final_f", "gain", "iterations", "termination"]);
    for (i, r) in opt.trace.iter().enumerate() {
        let v = angles_to_vector(&r.final_angles);
        restarts.push(vec![
            i.to_string(),
            num(r.initial_f),
            num(r.final_f),
            num(coding_gain_closed(v.values(), s.l, s.n_rx).gain),
            r.iterations.to_string(),
            super::termination_name(r.termination).to_string(),
        ]);
    }

    Ok(vec![
        ("basis_vector.csv".into(), vector),
        ("basis_summary.csv".into(), summary),
        ("basis_restarts.csv".into(), restarts),
    ])
}
