//! CSV and JSON writers. Floats are written with 17 significant digits.

use crate::error::Result;
use crate::integrators::RunRecord;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Round-trip float formatting (17 significant digits); NaN and infinities spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `step,t,gamma,mass,energy[,naive_energy]`
pub fn write_invariants(path: &Path, record: &RunRecord) -> Result<()> {
    let mut f = create(path)?;
    let naive = record.rows.first().is_some_and(|r| r.naive_energy.is_some());
    writeln!(f, "step,t,gamma,mass,energy{}", if naive { ",naive_energy" } else { "" })?;
    for r in &record.rows {
        write!(f, "{},{},{},{},{}", r.step, fmt_f64(r.t), fmt_f64(r.gamma), fmt_f64(r.mass), fmt_f64(r.energy))?;
        if naive {
            write!(f, ",{}", fmt_f64(r.naive_energy.unwrap_or(f64::NAN)))?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

/// One row per snapshot: `t` followed by node-interleaved `v_i,w_i[,nu_i,omega_i]`.
pub fn write_snapshots(path: &Path, record: &RunRecord, n: usize) -> Result<()> {
    let mut f = create(path)?;
    let comps = record.snapshots.first().map_or(2, |s| s.state.len() / n.max(1));
    let names = ["v", "w", "nu", "omega"];
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.extend(names[..comps].iter().map(|c| format!("{c}_{i}")));
    }
    writeln!(f, "{}", header.join(","))?;
    for s in &record.snapshots {
        let mut row = vec![fmt_f64(s.t)];
        for i in 0..n {
            row.extend((0..comps).map(|c| fmt_f64(s.state[c * n + i])));
        }
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()?;
    Ok(())
}

/// Writes a header and rows of already formatted fields.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(std::io::Error::from)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
