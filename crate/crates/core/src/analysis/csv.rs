//! Plot-ready CSV tables.

use std::io::Write;

use crate::error::Result;

use super::spectrum::Spectrum;
use super::stf::StfPoint;
use super::sweep::SweepRow;

/// `freq_hz,psd_g2_per_hz`
pub fn write_spectrum<W: Write>(mut w: W, sp: &Spectrum) -> Result<()> {
    writeln!(w, "freq_hz,psd_g2_per_hz")?;
    for (f, p) in sp.freqs().zip(&sp.psd) {
        writeln!(w, "{f},{p:e}")?;
    }
    Ok(())
}

/// `fck_hz,resolution_g,stddev_g,n_seeds`
pub fn write_sweep<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "fck_hz,resolution_g,stddev_g,n_seeds")?;
    for r in rows {
        writeln!(w, "{},{:e},{:e},{}", r.f_ck, r.resolution, r.stddev, r.n_seeds)?;
    }
    Ok(())
}

/// `freq_hz,gain_db`
pub fn write_stf<W: Write>(mut w: W, points: &[StfPoint]) -> Result<()> {
    writeln!(w, "freq_hz,gain_db")?;
    for p in points {
        writeln!(w, "{},{}", p.freq, p.gain_db)?;
    }
    Ok(())
}

/// `freq_hz,<name>...` with one magnitude column per curve.
pub fn write_columns<W: Write>(mut w: W, names: &[&str], freqs: &[f64], cols: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "freq_hz,{}", names.join(","))?;
    for (i, f) in freqs.iter().enumerate() {
        write!(w, "{f}")?;
        for c in cols {
            write!(w, ",{:e}", c[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
