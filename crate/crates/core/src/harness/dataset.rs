use std::io::{Read, Write};
use std::path::Path;

use crate::detector::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, InjectionMode};
use crate::netmodel::SoilKind;

pub const HEADER: [&str; 14] = [
    "scenario_id", "class", "phase", "soil", "snr_db", "seed", "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8",
];

/// One simulated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub scenario_id: String,
    pub class: String,
    pub phase: u8,
    pub soil: SoilKind,
    pub snr_db: f64,
    pub seed: u64,
    pub features: Vec<f64>,
}

impl DatasetRow {
    /// Four-component rows come from independent injection on the track
    /// named by their phase-1 class; eight-component rows from joint injection.
    pub fn mode(&self) -> Result<InjectionMode> {
        match self.features.len() {
            8 => Ok(InjectionMode::Joint),
            4 => match self.class.parse::<ClassLabel>() {
                Ok(l @ ClassLabel::Status { .. }) => Ok(InjectionMode::Independent(l.track())),
                _ => Err(Error::Schema(format!(
                    "row {}: four-component rows need a phase-1 class, got {}",
                    self.scenario_id, self.class
                ))),
            },
            n => Err(Error::Schema(format!("row {}: {n} feature columns", self.scenario_id))),
        }
    }

    pub fn feature_vector(&self) -> Result<FeatureVector> {
        FeatureVector::new(self.mode()?, self.features.clone())
    }
}

pub fn write_rows<W: Write>(rows: &[DatasetRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.scenario_id.clone(),
            r.class.clone(),
            r.phase.to_string(),
            r.soil.to_string(),
            r.snr_db.to_string(),
            r.seed.to_string(),
        ];
        // Display gives the shortest string that parses back to the same f64.
        rec.extend((0..8).map(|i| r.features.get(i).map(f64::to_string).unwrap_or_default()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<DatasetRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Schema(format!(
            "dataset header must be {}, got {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema(format!("dataset line {}: bad {what}", line + 2));
        let mut features = Vec::with_capacity(8);
        let mut ended = false;
        for i in 6..14 {
            let f = rec.get(i).unwrap_or("");
            if f.is_empty() {
                ended = true;
            } else if ended {
                return Err(bad("feature columns (gap)"));
            } else {
                features.push(f.parse::<f64>().map_err(|_| bad("feature value"))?);
            }
        }
        let row = DatasetRow {
            scenario_id: rec[0].to_string(),
            class: rec[1].to_string(),
            phase: rec[2].parse().map_err(|_| bad("phase"))?,
            soil: rec[3].parse().map_err(|_| bad("soil"))?,
            snr_db: rec[4].parse().map_err(|_| bad("snr_db"))?,
            seed: rec[5].parse().map_err(|_| bad("seed"))?,
            features,
        };
        row.mode()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_dataset(rows: &[DatasetRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
    write_rows(rows, std::io::BufWriter::new(f))
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::from(e).context(format!("opening {}", path.display())))?;
    read_rows(std::io::BufReader::new(f)).map_err(|e| e.context(format!("reading {}", path.display())))
}
