// SPDX-License-Identifier: Apache-2.0

//! CSV artifacts.
//!
//! All files use `,` separators, LF line endings and `.` decimals. Numbers are
//! printed with the shortest round-tripping representation, in scientific
//! notation outside `[1e-5, 1e16)`, so identical inputs give identical bytes.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::bounds::{BoundCertificate, BoundKind};
use crate::detect_alg1::DetectionEvent;
use crate::detect_alg2::Alg2Event;
use crate::sampling::{Family, MeasurementRecord};
use crate::{Error, Result};

use super::run::RunReport;
use super::sweep::{Spread, SweepResult};

/// Canonical number formatting for every artifact.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::io(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `family,index,sensor_id,re,im,noise_re,noise_im`.
pub fn write_measurements(path: &Path, records: &[MeasurementRecord]) -> Result<()> {
    let header = strings(&["family", "index", "sensor_id", "re", "im", "noise_re", "noise_im"]);
    write_rows(
        path,
        &header,
        records.iter().map(|r| {
            vec![
                r.family.name().to_string(),
                r.index.to_string(),
                r.sensor_id.to_string(),
                fmt_num(r.value.re),
                fmt_num(r.value.im),
                fmt_num(r.noise.re),
                fmt_num(r.noise.im),
            ]
        }),
    )
}

/// Reads a measurement dump; `laplace` rows are assigned frequency index `k`.
pub fn read_measurements(path: &Path, k: i64) -> Result<Vec<MeasurementRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), message: format!("row {line}: {msg}") };
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::io(path, e))?;
        if row.len() != 7 {
            return Err(parse_err(line + 2, format!("expected 7 fields, found {}", row.len())));
        }
        let family = match &row[0] {
            "m" => Family::M,
            "s" => Family::S,
            "laplace0" => Family::Laplace { k: 0 },
            "laplace" => Family::Laplace { k },
            other => return Err(parse_err(line + 2, format!("unknown family `{other}`"))),
        };
        let num = |i: usize| row[i].parse::<f64>().map_err(|e| parse_err(line + 2, format!("field {i}: {e}")));
        out.push(MeasurementRecord {
            family,
            index: row[1].parse().map_err(|e| parse_err(line + 2, format!("index: {e}")))?,
            sensor_id: row[2].parse().map_err(|e| parse_err(line + 2, format!("sensor_id: {e}")))?,
            value: Complex64::new(num(3)?, num(4)?),
            noise: Complex64::new(num(5)?, num(6)?),
        });
    }
    Ok(out)
}

fn find_rhs(certs: &[BoundCertificate], j: usize, sensor: usize, kinds: &[BoundKind]) -> Option<f64> {
    certs
        .iter()
        .find(|c| c.event == Some(j) && c.sensor_id == Some(sensor) && kinds.contains(&c.kind))
        .map(|c| c.rhs)
}

/// `j,t_hat,rho_hat,sensor_id,f_j,case_tag,bound_coeff,bound_rho`, one row per
/// event and sensor.
pub fn write_events_alg1(path: &Path, events: &[DetectionEvent], certs: &[BoundCertificate]) -> Result<()> {
    let header = strings(&["j", "t_hat", "rho_hat", "sensor_id", "f_j", "case_tag", "bound_coeff", "bound_rho"]);
    let rows = events.iter().flat_map(|ev| {
        ev.coeffs.iter().map(move |c| {
            vec![
                ev.j.to_string(),
                fmt_num(ev.t_hat),
                fmt_opt(ev.rho_hat),
                c.sensor_id.to_string(),
                fmt_num(c.coeff),
                c.case_tag.as_str().to_string(),
                fmt_opt(find_rhs(certs, ev.j, c.sensor_id, &[BoundKind::Thm1Coeff])),
                fmt_opt(find_rhs(certs, ev.j, c.sensor_id, &[BoundKind::Thm1Rate])),
            ]
        })
    });
    write_rows(path, &header, rows)
}

/// The threshold-detector columns plus `im_residual,M_g`. `rho_hat` is the
/// sensor's own rate and `case_tag` is `full_recovery` or `coeff_zero`.
pub fn write_events_alg2(path: &Path, events: &[Alg2Event], certs: &[BoundCertificate]) -> Result<()> {
    let header = strings(&[
        "j",
        "t_hat",
        "rho_hat",
        "sensor_id",
        "f_j",
        "case_tag",
        "bound_coeff",
        "bound_rho",
        "im_residual",
        "M_g",
    ]);
    let rows = events.iter().flat_map(|ev| {
        ev.coeffs.iter().map(move |c| {
            vec![
                ev.j.to_string(),
                fmt_num(ev.t_hat),
                fmt_opt(c.rho),
                c.sensor_id.to_string(),
                fmt_num(c.coeff),
                if c.passed_gate { "full_recovery" } else { "coeff_zero" }.to_string(),
                fmt_opt(find_rhs(certs, ev.j, c.sensor_id, &[BoundKind::Thm2Coeff, BoundKind::PropCoeffZero])),
                fmt_opt(find_rhs(certs, ev.j, c.sensor_id, &[BoundKind::Thm2Rate])),
                fmt_num(c.im_residual),
                fmt_num(c.m_value),
            ]
        })
    });
    write_rows(path, &header, rows)
}

/// `j,catalyst,sensor_id,kind,rhs,observed,satisfied`; empty cells mark a
/// missed intake, a false alarm or a timing certificate.
pub fn write_certificates(path: &Path, certs: &[BoundCertificate]) -> Result<()> {
    let header = strings(&["j", "catalyst", "sensor_id", "kind", "rhs", "observed", "satisfied"]);
    let rows = certs.iter().map(|c| {
        vec![
            c.event.map(|j| j.to_string()).unwrap_or_default(),
            c.catalyst.map(|j| j.to_string()).unwrap_or_default(),
            c.sensor_id.map(|s| s.to_string()).unwrap_or_default(),
            c.kind.as_str().to_string(),
            fmt_num(c.rhs),
            fmt_num(c.observed),
            c.satisfied.to_string(),
        ]
    });
    write_rows(path, &header, rows)
}

/// `axis,value,seed,rel_coeff_err_g<r>,rho<j>_rel…,t<j>_err…,cert_pass_rate`;
/// failed runs leave the metric cells empty.
pub fn write_sweep(path: &Path, result: &SweepResult, reference_sensor: usize) -> Result<()> {
    let n = result.catalysts;
    let mut header = strings(&["axis", "value", "seed"]);
    header.push(format!("rel_coeff_err_g{}", reference_sensor + 1));
    header.extend((1..=n).map(|j| format!("rho{j}_rel")));
    header.extend((1..=n).map(|j| format!("t{j}_err")));
    header.push("cert_pass_rate".to_string());
    let rows = result.rows.iter().map(|r| {
        let mut row = vec![result.axis.as_str().to_string(), fmt_num(r.value), r.seed.to_string()];
        match &r.outcome {
            Ok(m) => {
                row.push(fmt_num(m.rel_coeff_err));
                row.extend((0..n).map(|j| fmt_opt(m.rho_rel.get(j).copied().flatten())));
                row.extend((0..n).map(|j| fmt_opt(m.t_err.get(j).copied().flatten())));
                row.push(fmt_num(m.cert_pass_rate));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 2 + 2 * n)),
        }
        row
    });
    write_rows(path, &header, rows)
}

fn spread_cells(s: Option<Spread>) -> [String; 3] {
    match s {
        Some(s) => [fmt_num(s.median), fmt_num(s.min), fmt_num(s.max)],
        None => Default::default(),
    }
}

/// Median, minimum and maximum per axis value.
pub fn write_sweep_summary(path: &Path, result: &SweepResult) -> Result<()> {
    let n = result.catalysts;
    let mut header = strings(&["axis", "value", "runs", "failed"]);
    let triple = |name: String| [format!("{name}_median"), format!("{name}_min"), format!("{name}_max")];
    header.extend(triple("rel_coeff_err".into()));
    for j in 1..=n {
        header.extend(triple(format!("rho{j}_rel")));
    }
    for j in 1..=n {
        header.extend(triple(format!("t{j}_err")));
    }
    header.push("cert_pass_rate_min".to_string());
    let rows = result.summary().into_iter().map(|p| {
        let mut row = vec![result.axis.as_str().to_string(), fmt_num(p.value), p.runs.to_string(), p.failed.to_string()];
        row.extend(spread_cells(p.rel_coeff_err));
        for s in &p.rho_rel {
            row.extend(spread_cells(*s));
        }
        for s in &p.t_err {
            row.extend(spread_cells(*s));
        }
        row.push(fmt_opt(p.cert_pass_rate_min));
        row
    });
    write_rows(path, &header, rows)
}

/// Writes the artifacts of one run into `outdir` and returns their paths:
/// `measurements.csv`, and per executed detector `events_alg<k>.csv` and
/// `certificates_alg<k>.csv`.
pub fn emit_run(report: &RunReport, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut paths = Vec::new();
    let path = outdir.join("measurements.csv");
    write_measurements(&path, &report.records)?;
    paths.push(path);
    if let Some(o) = &report.alg1 {
        let path = outdir.join("events_alg1.csv");
        write_events_alg1(&path, &o.events, &o.certificates)?;
        paths.push(path);
        let path = outdir.join("certificates_alg1.csv");
        write_certificates(&path, &o.certificates)?;
        paths.push(path);
    }
    if let Some(o) = &report.alg2 {
        let path = outdir.join("events_alg2.csv");
        write_events_alg2(&path, &o.events, &o.certificates)?;
        paths.push(path);
        let path = outdir.join("certificates_alg2.csv");
        write_certificates(&path, &o.certificates)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes `<prefix>sweep_<axis>_alg<k>.csv` and its `_summary` companion per
/// result.
pub fn emit_sweeps(
    results: &[SweepResult],
    reference_sensor: usize,
    outdir: &Path,
    prefix: &str,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut paths = Vec::new();
    for r in results {
        let stem = format!("{prefix}sweep_{}_alg{}", r.axis.file_label(), r.algorithm);
        let path = outdir.join(format!("{stem}.csv"));
        write_sweep(&path, r, reference_sensor)?;
        paths.push(path);
        let path = outdir.join(format!("{stem}_summary.csv"));
        write_sweep_summary(&path, r)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes a text file, surfacing the path on failure.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
