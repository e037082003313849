//! Text serialization of density operators (JSON) and phase-space grids (CSV).

use std::io::{Read, Write};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::{DensityOperator, FockTruncation, Layout, WignerGrid};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{real, to_f64, Real};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityDoc {
    dimension: usize,
    #[serde(default = "default_layout")]
    layout: Layout,
    /// Row-major `[re, im]` pairs.
    entries: Vec<[f64; 2]>,
}

fn default_layout() -> Layout {
    Layout::Phonon
}

pub fn write_density<T: Real, W: Write>(rho: &DensityOperator<T>, mut w: W) -> Result<()> {
    let d = rho.dim();
    let m = rho.matrix();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push([to_f64(m[(i, j)].re), to_f64(m[(i, j)].im)]);
        }
    }
    let doc = DensityDoc {
        dimension: d,
        layout: rho.layout(),
        entries,
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    Ok(())
}

/// Parses and validates a density operator; `leakage_tol` is attached to the
/// truncation inferred from the dimension.
pub fn read_density<T: Real, R: Read>(r: R, leakage_tol: f64) -> Result<DensityOperator<T>> {
    let doc: DensityDoc = serde_json::from_reader(r)?;
    if doc.entries.len() != doc.dimension * doc.dimension {
        return Err(Error::Format(format!(
            "{} entries for dimension {}",
            doc.entries.len(),
            doc.dimension
        )));
    }
    let levels = match doc.layout {
        Layout::Phonon => doc.dimension,
        Layout::Joint => {
            if doc.dimension % 2 != 0 {
                return Err(Error::Format("joint dimension must be even".into()));
            }
            doc.dimension / 2
        }
    };
    if levels < 2 {
        return Err(Error::Format("dimension too small".into()));
    }
    let trunc = FockTruncation::new(levels - 1, leakage_tol)?;
    let m = CMatrix::from_fn(doc.dimension, doc.dimension, |i, j| {
        let [re, im] = doc.entries[i * doc.dimension + j];
        Complex::new(real::<T>(re), real::<T>(im))
    });
    DensityOperator::from_matrix(trunc, doc.layout, m)
}

/// CSV with a header row of re-axis values; each following row starts with its
/// im-axis value.
pub fn write_wigner_csv<T: Real, W: Write>(grid: &WignerGrid<T>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["im\\re".to_string()];
    header.extend(grid.re_axis.iter().map(|x| to_f64(*x).to_string()));
    wr.write_record(&header)?;
    for (i, im) in grid.im_axis.iter().enumerate() {
        let mut row = vec![to_f64(*im).to_string()];
        row.extend((0..grid.re_axis.len()).map(|j| to_f64(grid.values[(i, j)]).to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_wigner_csv<T: Real, R: Read>(r: R) -> Result<WignerGrid<T>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let parse = |s: &str| -> Result<T> {
        s.trim()
            .parse::<f64>()
            .map(real)
            .map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
    };
    let header = rd.headers()?.clone();
    let re_axis = header.iter().skip(1).map(parse).collect::<Result<Vec<T>>>()?;
    let mut im_axis = Vec::new();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let im = it.next().ok_or_else(|| Error::Format("empty row".into()))?;
        im_axis.push(parse(im)?);
        let vals = it.map(parse).collect::<Result<Vec<T>>>()?;
        if vals.len() != re_axis.len() {
            return Err(Error::Format("ragged Wigner grid row".into()));
        }
        rows.push(vals);
    }
    let values = nalgebra::DMatrix::from_fn(im_axis.len(), re_axis.len(), |i, j| rows[i][j]);
    Ok(WignerGrid {
        re_axis,
        im_axis,
        values,
        leakage_warning: None,
    })
}
