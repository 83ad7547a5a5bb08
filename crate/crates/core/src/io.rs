//! CSV and JSON artifacts. Numbers are written with 17 significant digits so
//! that every value reads back bit-for-bit.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticSeries;
use crate::dynamics::{Forcing, Trajectory};
use crate::error::{Error, Result};
use crate::ifb::{log_from_iterates, DiscreteEnergies, IterateLog, Perturbation};
use crate::problems::catalog;

/// Formats a number in scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata carried in the comment line of a trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub problem: String,
    pub alpha: f64,
    pub tol: f64,
    pub forcing: Forcing,
}

/// Metadata carried in the comment line of an iterate CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateHeader {
    pub problem: String,
    pub alpha: f64,
    pub step: f64,
    pub perturbation: Option<Perturbation>,
}

fn write_header<W: Write, H: Serialize>(w: &mut W, header: &H) -> Result<()> {
    writeln!(w, "# {}", serde_json::to_string(header)?)?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, cells: &[String]) -> Result<()> {
    writeln!(w, "{}", cells.join(","))?;
    Ok(())
}

fn split_header<R: Read, H: for<'de> Deserialize<'de>>(r: R) -> Result<(H, Vec<Vec<f64>>)> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let json = first
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing '# {…}' metadata line".into()))?;
    let header: H = serde_json::from_str(json)?;
    Ok((header, read_numeric(reader)?))
}

fn read_numeric<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number '{c}'", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `t,x_1..x_n,v_1..v_n` after a metadata line.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let header = TrajectoryHeader {
        problem: traj.problem().name().to_string(),
        alpha: traj.alpha(),
        tol: traj.integrator_tolerance(),
        forcing: traj.forcing().clone(),
    };
    write_header(&mut w, &header)?;
    let n = traj.dim();
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.extend((1..=n).map(|i| format!("v_{i}")));
    write_row(&mut w, &cols)?;
    for i in 0..traj.len() {
        let mut cells = vec![fmt_num(traj.times()[i])];
        cells.extend(traj.position(i).iter().map(|v| fmt_num(*v)));
        cells.extend(traj.velocity(i).iter().map(|v| fmt_num(*v)));
        write_row(&mut w, &cells)?;
    }
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory_csv`]; the problem is resolved
/// from the catalog and the result has no dense output.
pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Trajectory> {
    let (header, rows): (TrajectoryHeader, _) = split_header(r)?;
    let spec = catalog::problem(&header.problem)?;
    let n = spec.dim();
    if let Some(row) = rows.iter().find(|row| row.len() != 1 + 2 * n) {
        return Err(Error::DimensionMismatch {
            expected: 1 + 2 * n,
            got: row.len(),
        });
    }
    let times = rows.iter().map(|r| r[0]).collect();
    let xs = rows.iter().map(|r| r[1..=n].to_vec()).collect();
    let vs = rows.iter().map(|r| r[n + 1..].to_vec()).collect();
    Trajectory::from_samples(
        spec,
        header.alpha,
        header.tol,
        header.forcing,
        times,
        xs,
        vs,
    )
}

/// Writes `t,<name>` rows.
pub fn write_series_csv<W: Write>(series: &DiagnosticSeries, mut w: W) -> Result<()> {
    write_row(&mut w, &["t".into(), series.name.clone()])?;
    for (t, v) in series.times.iter().zip(&series.values) {
        write_row(&mut w, &[fmt_num(*t), fmt_num(*v)])?;
    }
    Ok(())
}

/// Reads a series written by [`write_series_csv`].
pub fn read_series_csv<R: Read>(r: R) -> Result<DiagnosticSeries> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let name = text
        .lines()
        .next()
        .and_then(|l| l.split(',').nth(1))
        .ok_or_else(|| Error::Parse("series CSV needs a 't,<name>' header".into()))?
        .trim()
        .to_string();
    let rows = read_numeric(text.as_bytes())?;
    if let Some(row) = rows.iter().find(|r| r.len() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: row.len(),
        });
    }
    Ok(DiagnosticSeries::new(
        name,
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
    ))
}

/// Writes `k,x_1..x_n,theta,dx_norm` after a metadata line.
pub fn write_iterates_csv<W: Write>(
    log: &IterateLog,
    perturbation: Option<&Perturbation>,
    mut w: W,
) -> Result<()> {
    if perturbation.is_some() != log.is_perturbed() {
        return Err(Error::InvalidParameter(
            "perturbation descriptor does not match the run".into(),
        ));
    }
    let header = IterateHeader {
        problem: log.problem().name().to_string(),
        alpha: log.alpha(),
        step: log.step(),
        perturbation: perturbation.cloned(),
    };
    write_header(&mut w, &header)?;
    let mut cols = vec!["k".to_string()];
    cols.extend((1..=log.dim()).map(|i| format!("x_{i}")));
    cols.extend(["theta".to_string(), "dx_norm".to_string()]);
    write_row(&mut w, &cols)?;
    for k in 0..=log.iterations() {
        let mut cells = vec![k.to_string()];
        cells.extend(log.x(k).iter().map(|v| fmt_num(*v)));
        cells.push(fmt_num(log.value(k)));
        cells.push(fmt_num(log.dx_norm(k)));
        write_row(&mut w, &cells)?;
    }
    Ok(())
}

/// Reads iterates written by [`write_iterates_csv`] and rebuilds the log.
pub fn read_iterates_csv<R: Read>(r: R) -> Result<IterateLog> {
    read_iterates_csv_with_header(r).map(|(_, log)| log)
}

/// Writes `k,W,h,E,E_tilde` (and `E_crit` when present); undefined entries are `NaN`.
pub fn write_energies_csv<W: Write>(en: &DiscreteEnergies, mut w: W) -> Result<()> {
    let mut cols: Vec<String> = ["k", "W", "h", "E", "E_tilde"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if en.e_crit.is_some() {
        cols.push("E_crit".into());
    }
    write_row(&mut w, &cols)?;
    for k in 0..en.w.len() {
        let mut cells = vec![
            k.to_string(),
            fmt_num(en.w[k]),
            fmt_num(en.h[k]),
            fmt_num(en.e[k]),
            fmt_num(en.e_tilde[k]),
        ];
        if let Some(c) = &en.e_crit {
            cells.push(fmt_num(c[k]));
        }
        write_row(&mut w, &cells)?;
    }
    Ok(())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Like [`read_iterates_csv`], also returning the metadata line.
pub fn read_iterates_csv_with_header<R: Read>(r: R) -> Result<(IterateHeader, IterateLog)> {
    let (header, rows): (IterateHeader, Vec<Vec<f64>>) = split_header(r)?;
    let log = iterates_from_rows(&header, &rows)?;
    Ok((header, log))
}

fn iterates_from_rows(header: &IterateHeader, rows: &[Vec<f64>]) -> Result<IterateLog> {
    let spec = catalog::problem(&header.problem)?;
    let n = spec.dim();
    if let Some(row) = rows.iter().find(|row| row.len() != n + 3) {
        return Err(Error::DimensionMismatch {
            expected: n + 3,
            got: row.len(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row[0] != i as f64 {
            return Err(Error::Parse(format!(
                "iterate rows must be k = 0, 1, …; found {} at row {i}",
                row[0]
            )));
        }
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| r[1..=n].to_vec()).collect();
    log_from_iterates(
        &spec,
        header.alpha,
        header.step,
        &xs,
        header.perturbation.as_ref(),
    )
}
