//! File formats: point-set CSV with a metadata header, and sweep tables.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::pointgen::{PointSet, Provenance};

/// Lossless decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `# lattice=<json>, generator=<name>, seed=<int>` and one row per point.
/// Readers skip any further lines starting with `#`.
pub fn write_pointset_csv<W: Write>(x: &PointSet, mut out: W) -> Result<()> {
    let lattice = serde_json::to_string(x.lattice())?;
    let prov = x.provenance();
    let generator = if prov.generator.is_empty() { "unknown" } else { &prov.generator };
    let seed = prov.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
    writeln!(out, "# lattice={lattice}, generator={generator}, seed={seed}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for p in x.points() {
        w.write_record(p.iter().map(|v| fmt_f64(*v)))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn pointset_to_csv_string(x: &PointSet) -> String {
    let mut buf = Vec::new();
    write_pointset_csv(x, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Parses the header written by [`write_pointset_csv`].
fn parse_header(line: &str) -> Result<(Lattice, Provenance)> {
    let rest = line
        .trim_end()
        .strip_prefix("# lattice=")
        .ok_or_else(|| Error::Parse("point file must start with '# lattice='".into()))?;
    let mut stream = serde_json::Deserializer::from_str(rest).into_iter::<Lattice>();
    let lattice = stream
        .next()
        .ok_or_else(|| Error::Parse("missing lattice JSON".into()))??;
    let tail = &rest[stream.byte_offset()..];
    let mut generator = String::new();
    let mut seed = None;
    for field in tail.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        match field.split_once('=') {
            Some(("generator", g)) => generator = g.to_string(),
            Some(("seed", "none")) => seed = None,
            Some(("seed", s)) => {
                seed = Some(s.parse().map_err(|_| Error::Parse(format!("bad seed '{s}'")))?);
            }
            _ => return Err(Error::Parse(format!("unrecognized header field '{field}'"))),
        }
    }
    Ok((lattice, Provenance::new(&generator, seed)))
}

pub fn read_pointset_csv<R: BufRead>(mut input: R) -> Result<PointSet> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let (lattice, provenance) = parse_header(&header)?;
    let d = lattice.dim();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut coords = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != d {
            return Err(Error::Parse(format!("row {}: expected {d} columns, got {}", i + 1, rec.len())));
        }
        for f in rec.iter() {
            coords.push(
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number '{f}'", i + 1)))?,
            );
        }
    }
    PointSet::from_flat(lattice, coords, provenance)
}

pub fn read_pointset_file(path: &std::path::Path) -> Result<PointSet> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_pointset_csv(std::io::BufReader::new(f))
}

/// One row of a variance sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub generator: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R_or_t")]
    pub r_or_t: f64,
    pub replicate: usize,
    pub variance: f64,
    pub error: f64,
}

/// One row of a worst-case-error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WceRow {
    pub generator: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub wce: f64,
    pub tail_bound: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generator", "d", "N", "R_or_t", "replicate", "variance", "error"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.generator.clone(),
            r.d.to_string(),
            r.n.to_string(),
            fmt_f64(r.r_or_t),
            r.replicate.to_string(),
            fmt_f64(r.variance),
            fmt_f64(r.error),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_wce_csv<W: Write>(rows: &[WceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generator", "d", "N", "alpha", "wce", "tail_bound"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.generator.clone(),
            r.d.to_string(),
            r.n.to_string(),
            fmt_f64(r.alpha),
            fmt_f64(r.wce),
            fmt_f64(r.tail_bound),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
