use ndstc::security::{ami_bob, ami_eve, leakage_probability, secrecy_rate};

use super::Tables;
use crate::config::ExperimentSpec;
use crate::error::Result;
use crate::output::{num, Table};

pub(super) fn leakage(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.leakage.as_ref().expect("effective spec");
    let mut table = Table::new(vec!["m", "nb", "n_eve", "trials", "ber_eve", "leakage", "stderr"]);
    for &m in &s.m_values {
        for &n_eve in &s.n_eve_values {
            let r = leakage_probability(&s.config(m, n_eve, spec.seed))?;
            table.push(vec![
                m.to_string(),
                s.nb.unwrap_or(m).to_string(),
                n_eve.to_string(),
                r.trials.to_string(),
                num(r.ber_eve),
                num(r.leakage),
                num(r.stderr),
            ]);
        }
    }
    Ok(vec![("leakage.csv".into(), table)])
}

pub(super) fn secrecy(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.secrecy.as_ref().expect("effective spec");
    let mut table = Table::new(vec![
        "n_eve", "snr_db", "trials", "i_bob", "i_eve", "c", "stderr_bob", "stderr_eve",
    ]);
    let first = s.n_eve_values[0];
    let bob = ami_bob(&s.config(first, spec.seed))?;
    for &n_eve in &s.n_eve_values {
        let eve = ami_eve(&s.config(n_eve, spec.seed))?;
        for ((snr, b), e) in s.snr_db.iter().zip(&bob).zip(&eve) {
            table.push(vec![
                n_eve.to_string(),
                num(*snr),
                b.count.to_string(),
                num(b.mean),
                num(e.mean),
                num(secrecy_rate(b.mean, e.mean)),
                num(b.stderr),
                num(e.stderr),
            ]);
        }
    }
    Ok(vec![("secrecy.csv".into(), table)])
}
