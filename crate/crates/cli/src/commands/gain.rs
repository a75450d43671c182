use ndstc::codebook::{duc_codebook_padded, AdsmCodebook, Codebook};
use ndstc::linalg::CMatrix;
use ndstc::projection::{coding_gain_closed, coding_gain_matrix, conventional_basis};
use ndstc::security::{derive_basis_from_key, SecretSeed};
use ndstc::transceiver::{support_rows, Scheme};
use ndstc::Error;

use super::Tables;
use crate::config::{ExperimentSpec, GainSweepSpec};
use crate::error::Result;
use crate::output::{num, Table};

const SCHEMES: [Scheme; 3] = [Scheme::Proposed, Scheme::ConventionalAdsm, Scheme::ConventionalDuc];

pub(super) fn run(spec: &ExperimentSpec) -> Result<Tables> {
    let s = spec.gain_sweep.as_ref().expect("effective spec");
    let mut table = Table::new(vec!["sweep", "nb", "t", "scheme", "gain", "note"]);
    let points = s
        .nb_values
        .iter()
        .map(|&nb| ("nb", nb, 1))
        .chain(s.t_values.iter().map(|&t| ("t", s.m, t)));
    for (sweep, nb, t) in points {
        for scheme in SCHEMES {
            let (gain, note) = match point_gain(s, spec.seed, scheme, nb, t) {
                Ok(g) => (num(g), String::new()),
                Err(Error::Infeasible(_)) => (String::new(), "infeasible".to_string()),
                Err(e) => return Err(e.into()),
            };
            table.push(vec![
                sweep.to_string(),
                nb.to_string(),
                t.to_string(),
                scheme.to_string(),
                gain,
                note,
            ]);
        }
    }
    Ok(vec![("gain_sweep.csv".into(), table)])
}

fn point_gain(s: &GainSweepSpec, seed: u64, scheme: Scheme, nb: usize, t: usize) -> ndstc::Result<f64> {
    let adsm = AdsmCodebook::new(s.m, s.l)?;
    let (e1, cb): (CMatrix, Codebook) = match scheme {
        Scheme::Proposed => {
            let e = derive_basis_from_key(SecretSeed(seed), s.m, nb, t, s.l, &s.optimizer.options(false))?;
            (e.into_matrix(), Codebook::Adsm(adsm))
        }
        Scheme::ConventionalAdsm => (conventional_basis(s.m, nb, t)?.e1().clone(), Codebook::Adsm(adsm)),
        Scheme::ConventionalDuc => {
            let e1 = conventional_basis(s.m, nb, t)?.e1().clone();
            let design = duc_codebook_padded(s.m, support_rows(&e1), adsm.bits(), s.duc_budget)?;
            (e1, Codebook::Duc(design.codebook))
        }
    };
    match &cb {
        Codebook::Adsm(_) if t == 1 => Ok(coding_gain_closed(&e1.column(0), s.l, s.n_rx).gain),
        _ => coding_gain_matrix(&e1, &cb, s.n_rx, s.pairwise_bits),
    }
}
