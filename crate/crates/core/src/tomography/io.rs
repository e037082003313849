//! Dataset import and export as JSON: one object per setting with `alpha`
//! (`[re, im]`), `shots` and `freqs`.

use std::io::{Read, Write};

use super::TomographyDataset;
use crate::error::Result;

pub fn write_dataset<W: Write>(dataset: &TomographyDataset, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, dataset)?;
    writeln!(w)?;
    Ok(())
}

/// Parses and validates a dataset.
pub fn read_dataset<R: Read>(r: R) -> Result<TomographyDataset> {
    let d: TomographyDataset = serde_json::from_reader(r)?;
    d.validate()?;
    Ok(d)
}
