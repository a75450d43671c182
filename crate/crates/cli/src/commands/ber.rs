use ndstc::transceiver::{frames_for_bits, run_link};

use super::Tables;
use crate::config::ExperimentSpec;
use crate::error::Result;
use crate::output::{num, Table};

pub(super) fn run(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.ber.as_ref().expect("effective spec");
    let mut table = Table::new(vec![
        "scheme", "m", "nb", "t", "snr_db", "frames", "bits", "bit_errors", "ber", "stderr",
    ]);
    for &scheme in &s.schemes {
        // every scheme sees the same channel and noise draws
        let cfg = s.link(scheme, spec.seed);
        let frames = match s.frames {
            Some(f) => f,
            None => frames_for_bits(&cfg, s.min_bits)?,
        };
        let result = run_link(&cfg, frames)?;
        for row in &result.rows {
            table.push(vec![
                scheme.to_string(),
                s.m.to_string(),
                s.nb.to_string(),
                s.t.to_string(),
                num(row.snr_db),
                row.frames.to_string(),
                row.bits.to_string(),
                row.bit_errors.to_string(),
                num(row.ber),
                num(row.stderr),
            ]);
        }
    }
    Ok(vec![("ber.csv".into(), table)])
}
