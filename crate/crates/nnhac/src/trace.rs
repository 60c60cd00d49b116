//! CSV writers for gain traces, filter taps, magnitude responses and loss logs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nnhac_core::{FilterBank, GainTrace};

use crate::{Error, Result};

fn write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// `block,band,level_db_spl,gain_db`, one row per block and band.
pub fn write_gain_trace(path: &Path, trace: &GainTrace) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "block,band,level_db_spl,gain_db")?;
        for rec in &trace.records {
            for (band, (level, gain)) in rec.levels_db_spl.iter().zip(&rec.gains_db).enumerate() {
                writeln!(out, "{},{band},{level},{gain}", rec.block)?;
            }
        }
        Ok(())
    })
}

/// `band,tap_index,value`.
pub fn write_taps(path: &Path, bank: &FilterBank) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "band,tap_index,value")?;
        for f in &bank.filters {
            for (i, t) in f.taps.iter().enumerate() {
                writeln!(out, "{},{i},{t}", f.band)?;
            }
        }
        Ok(())
    })
}

/// `band,bin,freq_hz,magnitude` for bins `0..=N/2`.
pub fn write_response(path: &Path, bank: &FilterBank) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "band,bin,freq_hz,magnitude")?;
        for f in &bank.filters {
            for (k, mag) in f.magnitude_response().iter().enumerate() {
                writeln!(
                    out,
                    "{},{k},{},{mag}",
                    f.band,
                    k as f64 * f.dft_resolution_hz
                )?;
            }
        }
        Ok(())
    })
}

/// `epoch,loss`.
pub fn write_loss_log(path: &Path, losses: &[f64]) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "epoch,loss")?;
        for (epoch, loss) in losses.iter().enumerate() {
            writeln!(out, "{epoch},{loss}")?;
        }
        Ok(())
    })
}
