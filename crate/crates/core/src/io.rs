//! CSV and JSON artifacts. Every CSV starts with a `# jsplit <command>
//! seed=<seed>` line followed by the column header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::order::PointCloud;
use crate::transport::{EmpiricalMeasure, Provenance};

pub fn write_csv<I, R>(path: &Path, command: &str, seed: u64, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# jsplit {command} seed={seed}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Column names `x_1, ..., x_k`.
pub fn coord_header(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}_{i}")).collect()
}

pub fn write_measure(path: &Path, command: &str, seed: u64, mu: &EmpiricalMeasure) -> Result<()> {
    let mut header = coord_header("x", mu.dim());
    header.push("weight".into());
    let rows = mu.points().iter().zip(mu.weights()).map(|(p, w)| {
        p.iter()
            .chain(std::iter::once(w))
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
    });
    write_csv(path, command, seed, &header, rows)
}

/// Reads `x_1..x_k[,weight]` rows, skipping `#` lines; without a weight
/// column the measure is uniform.
pub fn read_measure(path: &Path) -> Result<EmpiricalMeasure> {
    let body: String = BufReader::new(File::open(path)?)
        .lines()
        .filter(|l| !l.as_ref().is_ok_and(|l| l.starts_with('#')))
        .collect::<std::io::Result<Vec<_>>>()?
        .join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.clone();
    let weighted = header.iter().next_back() == Some("weight");
    let k = header.len() - usize::from(weighted);
    if k == 0 {
        return Err(Error::usage("measure file has no coordinate columns"));
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::usage(format!("bad number in {}: {e}", path.display())))?;
        coords.extend_from_slice(&vals[..k]);
        if weighted {
            weights.push(vals[k]);
        }
    }
    let points = PointCloud::from_flat(k, coords)?;
    if weighted {
        EmpiricalMeasure::weighted(points, weights, Provenance::User)
    } else {
        EmpiricalMeasure::uniform(points, Provenance::User)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let pts = PointCloud::from_points(2, &[vec![0.1, -0.2], vec![1.0 / 3.0, 5e-300]]).unwrap();
        let mu = EmpiricalMeasure::weighted(pts, vec![0.25, 0.75], Provenance::User).unwrap();
        write_measure(&path, "stationary", 7, &mu).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# jsplit stationary seed=7\nx_1,x_2,weight\n"));
        let back = read_measure(&path).unwrap();
        assert_eq!(back.points(), mu.points());
        assert_eq!(back.weights(), mu.weights());
    }
}
