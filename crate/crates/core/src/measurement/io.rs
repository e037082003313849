//! CSV exchange formats: scans as `duration_us,n_shots,n_bright`,
//! distributions as `n,p_n`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::scan::{ShotRecord, SidebandScan};
use crate::error::{Error, Result};
use crate::hilbert::PhononDistribution;

#[derive(Serialize, Deserialize)]
struct ScanRow {
    duration_us: f64,
    n_shots: u64,
    n_bright: u64,
}

#[derive(Serialize, Deserialize)]
struct DistRow {
    n: usize,
    p_n: f64,
}

pub fn write_scan<W: Write>(scan: &SidebandScan, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in scan.records() {
        out.serialize(ScanRow {
            duration_us: r.duration * 1e6,
            n_shots: r.n_shots,
            n_bright: r.n_bright,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scan<R: Read>(r: R) -> Result<SidebandScan> {
    let mut input = csv::Reader::from_reader(r);
    let mut records = Vec::new();
    for (line, row) in input.deserialize::<ScanRow>().enumerate() {
        let row = row?;
        let rec = ShotRecord::new(row.duration_us * 1e-6, row.n_shots, row.n_bright)
            .map_err(|e| Error::Format(format!("row {}: {e}", line + 2)))?;
        records.push(rec);
    }
    SidebandScan::new(records)
}

pub fn write_distribution<W: Write>(dist: &PhononDistribution<f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (n, p) in dist.probs().iter().enumerate() {
        out.serialize(DistRow { n, p_n: *p })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_distribution<R: Read>(r: R) -> Result<PhononDistribution<f64>> {
    let mut input = csv::Reader::from_reader(r);
    let mut probs = Vec::new();
    for row in input.deserialize::<DistRow>() {
        let row = row?;
        if row.n != probs.len() {
            return Err(Error::Format(format!("expected n = {}, found {}", probs.len(), row.n)));
        }
        probs.push(row.p_n);
    }
    PhononDistribution::new(probs)
}
