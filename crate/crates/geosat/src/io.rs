//! File formats: point CSV, DIMACS CNF, generator sidecar JSON, and
//! the results/curve CSV writers.
//!
//! Floats are written with 17 significant digits (scientific
//! notation), enough for exact f64 round trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{Curve, TrialBatch};
use crate::geometry::{Boundary, Point, PointSet};
use crate::models::{Clause, Formula, GeneratorRecord, Lit};

/// 17 significant digits; round-trips any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::Parse("csv io error".into()),
        }
    } else {
        Error::Parse(e.to_string())
    }
}

/// Writes `label,x1,...,xd` with one row per point.
pub fn write_points(path: &Path, points: &PointSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["label".to_string()];
    header.extend((1..=points.dimension).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (point, label) in points.points.iter().zip(&points.labels) {
        let mut row = vec![label.to_string()];
        row.extend(point.coords.iter().map(|&c| fmt_f64(c)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV back. The dimension comes from the header; the
/// label universe is the largest label present. Labels must be
/// positive and coordinates must lie in [0, 1].
pub fn read_points(path: &Path, boundary: Boundary) -> Result<PointSet> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    if header.is_empty() || &header[0] != "label" {
        return Err(Error::Parse("point csv must start with a label column".into()));
    }
    let dimension = header.len() - 1;
    if dimension == 0 {
        return Err(Error::Parse("point csv has no coordinate columns".into()));
    }
    for (i, field) in header.iter().skip(1).enumerate() {
        if field != format!("x{}", i + 1) {
            return Err(Error::Parse(format!(
                "unexpected coordinate column {field:?}, wanted x{}",
                i + 1
            )));
        }
    }
    let mut rows: Vec<(u32, Vec<f64>)> = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != dimension + 1 {
            return Err(Error::Parse(format!(
                "point row has {} fields, wanted {}",
                record.len(),
                dimension + 1
            )));
        }
        let label: u32 = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad label {:?}", &record[0])))?;
        if label == 0 {
            return Err(Error::Parse("labels start at 1".into()));
        }
        let mut coords = Vec::with_capacity(dimension);
        for field in record.iter().skip(1) {
            let c: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate {field:?}")))?;
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Parse(format!("coordinate {c} outside [0, 1]")));
            }
            coords.push(c);
        }
        rows.push((label, coords));
    }
    let universe = rows.iter().map(|(l, _)| *l).max().unwrap_or(0);
    let mut ps = PointSet::new(dimension, boundary, universe);
    for (label, coords) in rows {
        ps.push(Point::new(coords), label);
    }
    Ok(ps)
}

/// Writes DIMACS CNF. Tautologies and duplicate clauses are written
/// verbatim; nothing is cleaned up on the way out.
pub fn write_dimacs(path: &Path, formula: &Formula) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "p cnf {} {}", formula.n_vars, formula.clauses.len())?;
    for clause in &formula.clauses {
        for lit in &clause.literals {
            write!(w, "{} ", lit.to_dimacs())?;
        }
        writeln!(w, "0")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads DIMACS CNF. Comment lines and blank lines are skipped, the
/// `p cnf` header is required, clauses are 0-terminated and may span
/// lines, and the clause count and widths must be consistent (all
/// clauses the same width). An empty formula reads back with k = 2.
pub fn read_dimacs(path: &Path) -> Result<Formula> {
    let reader = BufReader::new(File::open(path)?);
    let mut header: Option<(u32, usize)> = None;
    let mut tokens: Vec<i64> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse("duplicate dimacs header".into()));
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(Error::Parse(format!("bad dimacs header {trimmed:?}")));
            }
            let n_vars: u32 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad variable count {:?}", fields[2])))?;
            let m: usize = fields[3]
                .parse()
                .map_err(|_| Error::Parse(format!("bad clause count {:?}", fields[3])))?;
            header = Some((n_vars, m));
            continue;
        }
        if header.is_none() {
            return Err(Error::Parse(format!(
                "clause data before dimacs header: {trimmed:?}"
            )));
        }
        for tok in trimmed.split_whitespace() {
            tokens.push(
                tok.parse()
                    .map_err(|_| Error::Parse(format!("bad literal {tok:?}")))?,
            );
        }
    }
    let (n_vars, m) = header.ok_or_else(|| Error::Parse("missing dimacs header".into()))?;

    let mut clauses = Vec::with_capacity(m);
    let mut current: Vec<Lit> = Vec::new();
    for tok in tokens {
        if tok == 0 {
            if current.is_empty() {
                return Err(Error::Parse("empty clause in dimacs input".into()));
            }
            clauses.push(Clause::new(std::mem::take(&mut current), Vec::new()));
            continue;
        }
        let lit = Lit::from_dimacs(tok)?;
        if lit.var > n_vars {
            return Err(Error::Parse(format!(
                "literal {tok} exceeds declared variable count {n_vars}"
            )));
        }
        current.push(lit);
    }
    if !current.is_empty() {
        return Err(Error::Parse("unterminated clause at end of dimacs input".into()));
    }
    if clauses.len() != m {
        return Err(Error::Parse(format!(
            "dimacs header declares {m} clauses, found {}",
            clauses.len()
        )));
    }
    let k = clauses.first().map_or(2, |c| c.literals.len());
    for clause in &clauses {
        if clause.literals.len() != k {
            return Err(Error::WrongClauseWidth {
                expected: k,
                found: clause.literals.len(),
            });
        }
    }
    Ok(Formula {
        n_vars,
        k,
        clauses,
        record: None,
    })
}

/// Writes the generator sidecar: flat JSON with the model parameters
/// and seed, sufficient to regenerate the exact instance.
pub fn write_record(path: &Path, record: &GeneratorRecord) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, record)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<GeneratorRecord> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

/// Writes `trial,seed,param,event,outcome,elapsed_ms` rows. Boolean
/// outcomes are written as 1/0.
pub fn write_trial_batch(path: &Path, batch: &TrialBatch) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "trial,seed,param,event,outcome,elapsed_ms")?;
    let param = fmt_f64(batch.config.params.param);
    let event = batch.config.event.label();
    for r in &batch.outcomes {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.trial,
            r.seed,
            param,
            event,
            r.outcome.numeric() as u64,
            r.elapsed_ms
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `param,p_hat,ci_lo,ci_hi,trials` rows.
pub fn write_curve(path: &Path, curve: &Curve) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "param,p_hat,ci_lo,ci_hi,trials")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(p.param),
            fmt_f64(p.p_hat),
            fmt_f64(p.ci_lo),
            fmt_f64(p.ci_hi),
            p.trials
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_f64_round_trips() {
        for &x in &[0.25, 1.0 / 3.0, 2f64.powf(-1.5), 1e-300, 12345.6789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn fmt_f64_has_17_significant_digits() {
        let s = fmt_f64(1.0 / 3.0);
        let mantissa = s.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(digits, 17);
    }
}
