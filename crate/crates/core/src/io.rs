//! On-disk CSV formats.
//!
//! Every file is a plain CSV: one header row, data rows, then trailing
//! comment lines starting with `# ` (tool version, config hash, and any
//! format-specific metadata such as the dataset noise level). Floats are
//! serialized with Rust's shortest round-trip formatting, so
//! `parse(format(x)) == x` bit-for-bit and files are lossless.
//!
//! Layouts:
//! - flow state / checkpoint: `snapshot_index,time,particle_index,x_1,..,x_d`
//! - snapshot dataset: `snapshot_index,time,obs_index,x_1,..,x_d` plus a
//!   `# noise_sigma=<v>` trailer line
//! - generic tables (loss logs, sweeps): caller-provided header and rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::cloud::{FlowState, ParticleCloud, SnapshotDataset, TimeGrid};
use crate::error::{Error, Result};

/// Shortest decimal serialization that parses back to the identical bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Parse a float serialized by [`fmt_f64`] (or any decimal literal).
pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("invalid float {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("invalid index {s:?}")))
}

/// Write a generic CSV table; trailer lines are emitted as `# <line>`.
pub fn write_table<W: Write>(
    w: &mut W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    trailer: &[String],
) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    let width = header.len();
    for row in rows {
        debug_assert_eq!(row.len(), width, "row width must match header");
        writeln!(w, "{}", row.join(","))?;
    }
    for line in trailer {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

struct ParsedCsv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    comments: Vec<String>,
}

fn parse_csv<R: BufRead>(r: R) -> Result<ParsedCsv> {
    let mut header = None;
    let mut rows = Vec::new();
    let mut comments = Vec::new();
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            comments.push(rest.trim().to_string());
            continue;
        }
        let cells: Vec<String> = trimmed.split(',').map(|c| c.trim().to_string()).collect();
        match &header {
            None => header = Some(cells),
            Some(h) => {
                if cells.len() != h.len() {
                    return Err(Error::Format(format!(
                        "row has {} cells, header has {}",
                        cells.len(),
                        h.len()
                    )));
                }
                rows.push(cells);
            }
        }
    }
    let header = header.ok_or_else(|| Error::Format("missing CSV header".into()))?;
    Ok(ParsedCsv { header, rows, comments })
}

fn expect_header(header: &[String], index_col: &str) -> Result<usize> {
    let fixed = ["snapshot_index", "time", index_col];
    if header.len() < 4 || header[..3] != fixed[..] {
        return Err(Error::Format(format!(
            "expected header starting snapshot_index,time,{index_col},x_1,.. got {header:?}"
        )));
    }
    for (i, name) in header[3..].iter().enumerate() {
        if *name != format!("x_{}", i + 1) {
            return Err(Error::Format(format!("coordinate column {i} named {name:?}")));
        }
    }
    Ok(header.len() - 3)
}

fn write_snapshots<W: Write>(
    w: &mut W,
    times: &TimeGrid,
    clouds: &[ParticleCloud],
    index_col: &str,
    trailer: &[String],
) -> Result<()> {
    let dim = clouds[0].dim();
    let mut header = vec!["snapshot_index".to_string(), "time".to_string(), index_col.to_string()];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows = clouds.iter().enumerate().flat_map(|(j, cloud)| {
        let t = fmt_f64(times.time(j));
        cloud.iter().enumerate().map(move |(b, p)| {
            let mut row = vec![j.to_string(), t.clone(), b.to_string()];
            row.extend(p.iter().map(|v| fmt_f64(*v)));
            row
        })
    });
    write_table(w, &header_refs, rows, trailer)
}

fn read_snapshots<R: BufRead>(
    r: R,
    index_col: &str,
) -> Result<(TimeGrid, Vec<ParticleCloud>, Vec<String>)> {
    let parsed = parse_csv(r)?;
    let dim = expect_header(&parsed.header, index_col)?;
    if parsed.rows.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut clouds: Vec<Vec<f64>> = Vec::new();
    for cells in &parsed.rows {
        let j = parse_usize(&cells[0])?;
        let t = parse_f64(&cells[1])?;
        let b = parse_usize(&cells[2])?;
        if j == clouds.len() {
            clouds.push(Vec::new());
            times.push(t);
        } else if j + 1 != clouds.len() {
            return Err(Error::Format(format!(
                "snapshot_index {j} out of order (expected {} or {})",
                clouds.len().saturating_sub(1),
                clouds.len()
            )));
        }
        if t != times[j] {
            return Err(Error::Format(format!(
                "snapshot {j} listed with times {} and {}",
                times[j], t
            )));
        }
        let expected_b = clouds[j].len() / dim;
        if b != expected_b {
            return Err(Error::Format(format!(
                "snapshot {j}: {index_col} {b} out of order (expected {expected_b})"
            )));
        }
        for cell in &cells[3..] {
            clouds[j].push(parse_f64(cell)?);
        }
    }
    let grid = TimeGrid::new(times)?;
    let clouds = clouds
        .into_iter()
        .map(|flat| ParticleCloud::new(dim, flat))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, clouds, parsed.comments))
}

/// Write a [`FlowState`] (fitted clouds or a checkpoint).
pub fn write_flow_state<W: Write>(w: &mut W, state: &FlowState, trailer: &[String]) -> Result<()> {
    write_snapshots(w, state.times(), state.clouds(), "particle_index", trailer)
}

/// Read a [`FlowState`]; returns the trailing comment lines too.
pub fn read_flow_state<R: BufRead>(r: R) -> Result<(FlowState, Vec<String>)> {
    let (times, clouds, comments) = read_snapshots(r, "particle_index")?;
    Ok((FlowState::new(times, clouds)?, comments))
}

/// Write a [`SnapshotDataset`]; the noise level rides in the trailer.
pub fn write_dataset<W: Write>(
    w: &mut W,
    data: &SnapshotDataset,
    trailer: &[String],
) -> Result<()> {
    let mut full = vec![format!("noise_sigma={}", fmt_f64(data.noise_sigma()))];
    full.extend_from_slice(trailer);
    write_snapshots(w, data.times(), data.snapshots(), "obs_index", &full)
}

/// Read a [`SnapshotDataset`] written by [`write_dataset`].
pub fn read_dataset<R: BufRead>(r: R) -> Result<(SnapshotDataset, Vec<String>)> {
    let (times, clouds, comments) = read_snapshots(r, "obs_index")?;
    let sigma = comments
        .iter()
        .find_map(|c| c.strip_prefix("noise_sigma="))
        .ok_or_else(|| Error::Format("missing noise_sigma trailer".into()))?;
    let sigma = parse_f64(sigma)?;
    Ok((SnapshotDataset::new(times, clouds, sigma)?, comments))
}

/// Path convenience wrappers (buffered).
pub fn write_flow_state_file(path: &Path, state: &FlowState, trailer: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_flow_state(&mut w, state, trailer)?;
    w.flush()?;
    Ok(())
}

pub fn read_flow_state_file(path: &Path) -> Result<(FlowState, Vec<String>)> {
    read_flow_state(BufReader::new(File::open(path)?))
}

pub fn write_dataset_file(path: &Path, data: &SnapshotDataset, trailer: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, data, trailer)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset_file(path: &Path) -> Result<(SnapshotDataset, Vec<String>)> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn write_table_file(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    trailer: &[String],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_table(&mut w, header, rows, trailer)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{FlowState, ParticleCloud, SnapshotDataset, TimeGrid};
    use rand::Rng;

    fn random_state(seed: u64) -> FlowState {
        let mut rng = crate::rng::RngStream::new(seed).rng();
        let clouds = (0..3)
            .map(|_| {
                let data: Vec<f64> = (0..10).map(|_| rng.gen::<f64>() * 1e3 - 500.0).collect();
                ParticleCloud::new(2, data).unwrap()
            })
            .collect();
        FlowState::new(TimeGrid::new(vec![0.125, 0.3, 1.0]).unwrap(), clouds).unwrap()
    }

    #[test]
    fn flow_state_round_trip_is_bit_exact() {
        let state = random_state(7);
        let mut buf = Vec::new();
        write_flow_state(&mut buf, &state, &["version=test".into()]).unwrap();
        let (back, comments) = read_flow_state(buf.as_slice()).unwrap();
        assert_eq!(back, state);
        assert_eq!(comments, vec!["version=test".to_string()]);
    }

    #[test]
    fn dataset_round_trip_keeps_noise_sigma() {
        let clouds = vec![
            ParticleCloud::new(1, vec![0.5, -0.25, 1.0 / 3.0]).unwrap(),
            ParticleCloud::new(1, vec![f64::MIN_POSITIVE, 1e300, -0.0]).unwrap(),
        ];
        let data =
            SnapshotDataset::new(TimeGrid::new(vec![0.1, 0.9]).unwrap(), clouds, 0.3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data, &[]).unwrap();
        let (back, _) = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn shortest_float_form_parses_back_exactly() {
        let mut rng = crate::rng::RngStream::new(3).rng();
        for _ in 0..1000 {
            let x = f64::from_bits(rng.gen::<u64>());
            if !x.is_finite() {
                continue;
            }
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad = "snapshot_index,time,particle_index,x_1\n0,0.0\n";
        assert!(matches!(read_flow_state(bad.as_bytes()), Err(Error::Format(_))));
        let bad = "snapshot_index,time,particle_index,x_1\n1,0.5,0,1.0\n";
        assert!(matches!(read_flow_state(bad.as_bytes()), Err(Error::Format(_))));
    }
}
