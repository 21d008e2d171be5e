//! File emission: CSV tables and raw binary field snapshots.
//!
//! Binary snapshots are a 16-byte header followed by little-endian `f64`
//! values: 4-byte magic (`KFLO` for velocity, `CFLD` for concentration),
//! then `u32` width, `u32` height and `u32` channel count, all little-endian.
//! Channels are stored one after another, each row-major with rows along y.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::fmt_f64;
use crate::experiment::{AgentRecord, SweepRow, TrialResult};
use crate::flow::FlowField;
use crate::scalar::{FilamentWidth, ScalarField};

pub const FLOW_MAGIC: &[u8; 4] = b"KFLO";
pub const SCALAR_MAGIC: &[u8; 4] = b"CFLD";

/// Output directory whose files are deleted again unless [`commit`] is called.
///
/// [`commit`]: OutputDir::commit
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Opens `name` for writing and tracks it for cleanup.
    pub fn file(&mut self, name: &str) -> io::Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "NaN".to_string())
}

pub fn write_agents_csv<W: Write>(mut w: W, records: &[AgentRecord]) -> io::Result<()> {
    writeln!(w, "t,id,x,y,px,py,C_i")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            r.id,
            fmt_f64(r.position.x),
            fmt_f64(r.position.y),
            fmt_f64(r.heading.x),
            fmt_f64(r.heading.y),
            fmt_f64(r.confidence)
        )?;
    }
    w.flush()
}

pub fn write_arrivals_csv<W: Write>(mut w: W, result: &TrialResult) -> io::Result<()> {
    writeln!(w, "id,arrival_time")?;
    for (id, t) in result.arrival_times.iter().enumerate() {
        writeln!(w, "{id},{}", t.map(fmt_f64).unwrap_or_default())?;
    }
    w.flush()
}

/// Polarity and nearest-neighbour series; `label` prefixes each row.
pub fn write_series_rows<W: Write>(w: &mut W, label: &str, result: &TrialResult) -> io::Result<()> {
    for &(t, p) in &result.polarity_series {
        let nnd = result.nnd_series.iter().find(|s| s.0 == t).map(|s| s.1);
        writeln!(w, "{label}{},{},{}", fmt_f64(t), fmt_f64(p), opt(nnd))?;
    }
    Ok(())
}

pub fn write_series_csv<W: Write>(mut w: W, result: &TrialResult) -> io::Result<()> {
    writeln!(w, "t,polarity,nnd")?;
    write_series_rows(&mut w, "", result)?;
    w.flush()
}

pub const SWEEP_HEADER: &str = "n_agents,repulsion_radius,alpha,effective_area,p_success,se_p,\
frac_arrived_given_success,mean_polarity,mean_nnd,n_trials,base_seed,p_trial_success,status";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let (p, se, frac, pol, nnd, pt) = match &r.stats {
            Some(s) => (
                fmt_f64(s.p_success),
                fmt_f64(s.se_p),
                opt(s.frac_arrived_given_success),
                opt(s.mean_polarity),
                opt(s.mean_nnd),
                fmt_f64(s.p_trial_success),
            ),
            None => {
                let nan = || "NaN".to_string();
                (nan(), nan(), nan(), nan(), nan(), nan())
            }
        };
        writeln!(
            w,
            "{},{},{},{},{p},{se},{frac},{pol},{nnd},{},{},{pt},{}",
            r.n_agents,
            fmt_f64(r.repulsion_radius),
            fmt_f64(r.alpha),
            fmt_f64(r.effective_area),
            r.n_trials,
            r.base_seed,
            r.status.replace(',', ";")
        )?;
    }
    w.flush()
}

/// Writes a binary grid snapshot with the documented 16-byte header.
pub fn write_grid_bin<W: Write>(
    mut w: W,
    magic: &[u8; 4],
    width: usize,
    height: usize,
    channels: &[&[f64]],
) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(width as u32).to_le_bytes())?;
    w.write_all(&(height as u32).to_le_bytes())?;
    w.write_all(&(channels.len() as u32).to_le_bytes())?;
    for ch in channels {
        if ch.len() != width * height {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "channel size mismatch",
            ));
        }
        for v in ch.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

/// Magic, width, height and one plane per channel.
pub type GridBin = ([u8; 4], usize, usize, Vec<Vec<f64>>);

/// Header and channels of a binary grid snapshot.
pub fn read_grid_bin(bytes: &[u8]) -> io::Result<GridBin> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    if bytes.len() < 16 {
        return Err(bad("truncated header"));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as usize;
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    let (width, height, channels) = (word(4), word(8), word(12));
    let body = &bytes[16..];
    if body.len() != width * height * channels * 8 {
        return Err(bad("payload size does not match header"));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = values.chunks(width * height).map(|c| c.to_vec()).collect();
    Ok((magic, width, height, data))
}

pub fn write_flow_bin<W: Write>(w: W, flow: &FlowField) -> io::Result<()> {
    let n = flow.grid_size();
    write_grid_bin(w, FLOW_MAGIC, n, n, &[flow.u_grid(), flow.v_grid()])
}

pub fn write_scalar_bin<W: Write>(w: W, scalar: &ScalarField) -> io::Result<()> {
    let n = scalar.grid_size();
    write_grid_bin(w, SCALAR_MAGIC, n, n, &[&scalar.concentration_grid()])
}

/// Fluctuating velocity at every flow grid node.
pub fn write_flow_csv<W: Write>(mut w: W, flow: &FlowField) -> io::Result<()> {
    let n = flow.grid_size();
    writeln!(w, "x,y,u,v")?;
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(i as f64 / n as f64),
                fmt_f64(j as f64 / n as f64),
                fmt_f64(flow.u_grid()[k]),
                fmt_f64(flow.v_grid()[k])
            )?;
        }
    }
    w.flush()
}

pub fn write_transects_csv<W: Write>(mut w: W, width: &FilamentWidth) -> io::Result<()> {
    writeln!(w, "transect_id,s,C")?;
    for t in &width.transects {
        for &(s, c) in &t.profile {
            writeln!(w, "{},{},{}", t.id, fmt_f64(s), fmt_f64(c))?;
        }
    }
    w.flush()
}
