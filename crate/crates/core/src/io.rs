//! Serialization of field snapshots and reports.
//!
//! Binary layout for a space-time field, all little-endian, no magic or
//! padding:
//!
//! ```text
//! f64 half_width   spatial domain is [-half_width, half_width)
//! u64 n            spatial samples
//! f64 t_min        time window start
//! f64 t_max        time window end (exclusive)
//! u64 n_t          time samples
//! n * n_t complex samples, x-major (all times of x_0 first),
//!     each as re: f64, im: f64
//! ```
//!
//! A file is valid only if the payload length matches the header exactly and
//! the header passes the same grid validation as in-memory construction.
//! CSV export is meant for small fields and profiles (plotting, diffing);
//! numbers are printed with Rust's shortest round-trip formatting, so parsing
//! a CSV back reproduces the exact bits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField, SpatialGrid, TimeGrid};

/// Hard cap on `n * n_t` when reading, so a corrupt header cannot ask for an
/// absurd allocation (the cap itself is 4 GiB of samples).
const MAX_SAMPLES: u64 = 1 << 28;

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated header: missing {what}")))?;
    Ok(f64::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated header: missing {what}")))?;
    Ok(u64::from_le_bytes(buf))
}

/// Writes a field snapshot in the documented binary layout.
pub fn write_field(path: &Path, field: &SpaceTimeField) -> Result<()> {
    let grid = field.grid();
    let time = field.time();
    let mut w = BufWriter::new(File::create(path)?);
    write_f64(&mut w, grid.half_width())?;
    write_u64(&mut w, grid.n() as u64)?;
    write_f64(&mut w, time.t_min())?;
    write_f64(&mut w, time.t_max())?;
    write_u64(&mut w, time.n_t() as u64)?;
    for j in 0..grid.n() {
        for m in 0..time.n_t() {
            let v = field.values()[[j, m]];
            write_f64(&mut w, v.re)?;
            write_f64(&mut w, v.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a field snapshot, validating the header and the payload length.
pub fn read_field(path: &Path) -> Result<SpaceTimeField> {
    let mut r = BufReader::new(File::open(path)?);
    let half_width = read_f64(&mut r, "half_width")?;
    let n = read_u64(&mut r, "n")?;
    let t_min = read_f64(&mut r, "t_min")?;
    let t_max = read_f64(&mut r, "t_max")?;
    let n_t = read_u64(&mut r, "n_t")?;
    let samples = n
        .checked_mul(n_t)
        .filter(|&s| s <= MAX_SAMPLES)
        .ok_or_else(|| Error::Format(format!("header asks for {n} x {n_t} samples")))?;

    let grid = SpatialGrid::new(half_width, n as usize)
        .map_err(|e| Error::Format(format!("invalid spatial header: {e}")))?;
    let time = TimeGrid::new(t_min, t_max, n_t as usize)
        .map_err(|e| Error::Format(format!("invalid time header: {e}")))?;

    let mut payload = vec![0u8; samples as usize * 16];
    r.read_exact(&mut payload).map_err(|_| {
        Error::Format(format!("payload shorter than the {samples} samples promised"))
    })?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after the payload".into()));
    }

    let mut values = Array2::<Complex64>::zeros((n as usize, n_t as usize));
    for idx in 0..samples as usize {
        let re = f64::from_le_bytes(payload[idx * 16..idx * 16 + 8].try_into().unwrap());
        let im = f64::from_le_bytes(payload[idx * 16 + 8..idx * 16 + 16].try_into().unwrap());
        values[[idx / n_t as usize, idx % n_t as usize]] = Complex64::new(re, im);
    }
    SpaceTimeField::new(grid, time, values)
}

/// CSV dump of a field: one `x,t,re,im` row per sample, x-major like the
/// binary layout.
pub fn write_field_csv(path: &Path, field: &SpaceTimeField) -> Result<()> {
    let grid = field.grid();
    let time = field.time();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,t,re,im")?;
    for j in 0..grid.n() {
        for m in 0..time.n_t() {
            let v = field.values()[[j, m]];
            writeln!(w, "{},{},{},{}", grid.point(j), time.time(m), v.re, v.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV dump of a spatial profile: one `x,re,im` row per sample.
pub fn write_profile_csv(path: &Path, profile: &GridFunction) -> Result<()> {
    let grid = profile.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,re,im")?;
    for j in 0..grid.n() {
        let v = profile.values()[j];
        writeln!(w, "{},{},{}", grid.point(j), v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON report with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Format(format!("serialization failed: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sample_field() -> SpaceTimeField {
        let grid = SpatialGrid::new(2.0, 8).unwrap();
        let time = TimeGrid::new(-1.0, 1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        SpaceTimeField::from_fn(grid, time, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("gkdv-io-roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        let field = sample_field();
        write_field(&path, &field).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid(), field.grid());
        assert_eq!(back.time().t_min(), field.time().t_min());
        assert_eq!(back.time().t_max(), field.time().t_max());
        assert_eq!(back.values(), field.values());
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn header_bytes_follow_the_documented_layout() {
        let dir = std::env::temp_dir().join("gkdv-io-header");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        let field = sample_field();
        write_field(&path, &field).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let mut expect = Vec::new();
        expect.extend_from_slice(&2.0f64.to_le_bytes());
        expect.extend_from_slice(&8u64.to_le_bytes());
        expect.extend_from_slice(&(-1.0f64).to_le_bytes());
        expect.extend_from_slice(&1.0f64.to_le_bytes());
        expect.extend_from_slice(&8u64.to_le_bytes());
        assert_eq!(&bytes[..40], &expect[..]);
        assert_eq!(bytes.len(), 40 + 8 * 8 * 16);
        // First payload sample is field[[0, 0]].
        let re = f64::from_le_bytes(bytes[40..48].try_into().unwrap());
        assert_eq!(re, field.values()[[0, 0]].re);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn malformed_files_are_format_errors() {
        let dir = std::env::temp_dir().join("gkdv-io-malformed");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        let field = sample_field();
        write_field(&path, &field).unwrap();
        let good = std::fs::read(&path).unwrap();

        let check = |bytes: &[u8], what: &str| {
            std::fs::write(&path, bytes).unwrap();
            match read_field(&path) {
                Err(Error::Format(msg)) => msg,
                other => panic!("{what}: expected a format error, got {other:?}"),
            }
        };
        check(&good[..30], "short header");
        check(&good[..good.len() - 8], "short payload");
        let mut long = good.clone();
        long.push(0);
        check(&long, "trailing byte");
        // n = 12 is not a power of two: rejected at header validation.
        let mut bad_n = good.clone();
        bad_n[8..16].copy_from_slice(&12u64.to_le_bytes());
        check(&bad_n, "bad n");
        // Absurd sample count must fail before any allocation.
        let mut huge = good;
        huge[8..16].copy_from_slice(&(u64::MAX / 2).to_le_bytes());
        check(&huge, "huge n");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn csv_exports_have_one_row_per_sample_and_parse_back() {
        let dir = std::env::temp_dir().join("gkdv-io-csv");
        std::fs::create_dir_all(&dir).unwrap();
        let field = sample_field();
        let fpath = dir.join("field.csv");
        write_field_csv(&fpath, &field).unwrap();
        let text = std::fs::read_to_string(&fpath).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,t,re,im");
        assert_eq!(lines.len(), 1 + 8 * 8);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[0], field.grid().point(0));
        assert_eq!(first[2], field.values()[[0, 0]].re);

        let profile = GridFunction::from_real_fn(field.grid(), |x| x * x);
        let ppath = dir.join("profile.csv");
        write_profile_csv(&ppath, &profile).unwrap();
        let text = std::fs::read_to_string(&ppath).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        std::fs::remove_file(&fpath).unwrap();
        std::fs::remove_file(&ppath).unwrap();
    }

    #[test]
    fn json_reports_are_pretty_printed_with_final_newline() {
        let dir = std::env::temp_dir().join("gkdv-io-json");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        #[derive(Serialize)]
        struct Report {
            name: &'static str,
            value: f64,
        }
        write_json(
            &path,
            &Report {
                name: "demo",
                value: 0.5,
            },
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.contains("\"name\": \"demo\""));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["value"], 0.5);
        std::fs::remove_file(&path).unwrap();
    }
}
