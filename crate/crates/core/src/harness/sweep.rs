use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::simulate::simulate;
use super::suite::{ScenarioSuite, SuiteKind};
use crate::error::{Error, Result};
use crate::netmodel::SoilKind;
use crate::pca::{jacobi_eigen, mean_and_covariance, rmse_curve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub soil: SoilKind,
    pub snr_db: f64,
    pub class: String,
    pub m: usize,
    pub rmse: f64,
}

/// RMSE(m) for m = 0..=n of every class, soil and SNR in a training suite,
/// each computed from the suite's trials at that SNR alone.
pub fn sweep_rmse(suite: &ScenarioSuite) -> Result<Vec<RmseRow>> {
    if suite.kind != SuiteKind::Training {
        return Err(Error::Configuration("sweep-rmse needs a training suite".into()));
    }
    if suite.trials_per_snr < 2 {
        return Err(Error::Configuration("sweep-rmse needs at least two trials per SNR".into()));
    }
    let rows = simulate(suite)?;
    let mut groups: BTreeMap<(SoilKind, usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
    let classes: Vec<String> = suite.expand_classes()?.into_iter().map(|c| c.name).collect();
    for r in &rows {
        let snr = suite.snr_list_db.iter().position(|s| s.to_bits() == r.snr_db.to_bits()).unwrap();
        let class = classes.iter().position(|c| *c == r.class).unwrap();
        groups.entry((r.soil, snr, class)).or_default().push(r.features.clone());
    }
    let mut out = Vec::new();
    for ((soil, snr, class), vectors) in groups {
        let n = vectors[0].len();
        let (_, cov) = mean_and_covariance(&vectors);
        let eig = jacobi_eigen(&cov, n);
        for (m, rmse) in rmse_curve(&eig.values).into_iter().enumerate() {
            out.push(RmseRow {
                soil,
                snr_db: suite.snr_list_db[snr],
                class: classes[class].clone(),
                m,
                rmse,
            });
        }
    }
    Ok(out)
}

pub fn write_rmse_csv<W: Write>(rows: &[RmseRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["soil", "snr_db", "class", "m", "rmse"])?;
    for r in rows {
        out.write_record([
            r.soil.to_string(),
            r.snr_db.to_string(),
            r.class.clone(),
            r.m.to_string(),
            r.rmse.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rmse_file(rows: &[RmseRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
    write_rmse_csv(rows, std::io::BufWriter::new(f))
}
