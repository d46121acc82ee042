//! Recorded chains and their CSV form.
//!
//! The on-disk layout is one header row `iter,<coord names...>,log_target,
//! accepted` followed by one row per kept iteration. Floats are printed
//! with 17 significant digits so a written file parses back to the exact
//! same bits. The `accepted` column is a digit string with one 0/1 per
//! accept/reject decision in the iteration: a single digit for full-step
//! kernels, one digit per block for component-wise sweeps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{invalid_argument, Error, Result};
use crate::logdomain::LogDensity;

/// A recorded chain: positions, log-target values, and accept flags,
/// all of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub kernel_label: String,
    pub seed: u64,
    pub coord_names: Vec<String>,
    pub positions: Vec<Vec<f64>>,
    pub log_targets: Vec<LogDensity>,
    pub accept_flags: Vec<Vec<bool>>,
}

impl Trace {
    pub fn new(
        kernel_label: impl Into<String>,
        seed: u64,
        coord_names: Vec<String>,
    ) -> Self {
        Trace {
            kernel_label: kernel_label.into(),
            seed,
            coord_names,
            positions: Vec::new(),
            log_targets: Vec::new(),
            accept_flags: Vec::new(),
        }
    }

    pub fn push(&mut self, position: &[f64], log_target: LogDensity, flags: &[bool]) {
        self.positions.push(position.to_vec());
        self.log_targets.push(log_target);
        self.accept_flags.push(flags.to_vec());
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.coord_names.len()
    }

    /// Fraction of accepted decisions over every flag recorded.
    pub fn acceptance_rate(&self) -> f64 {
        let total: usize = self.accept_flags.iter().map(Vec::len).sum();
        if total == 0 {
            return 0.0;
        }
        let accepted: usize = self
            .accept_flags
            .iter()
            .flat_map(|row| row.iter())
            .filter(|&&f| f)
            .count();
        accepted as f64 / total as f64
    }

    /// Column of one coordinate across the whole trace.
    pub fn coordinate(&self, index: usize) -> Result<Vec<f64>> {
        if index >= self.dim() {
            return Err(invalid_argument(format!(
                "coordinate index {index} out of range for a {}-column trace",
                self.dim()
            )));
        }
        Ok(self.positions.iter().map(|row| row[index]).collect())
    }

    pub fn coordinate_by_name(&self, name: &str) -> Result<Vec<f64>> {
        match self.coord_names.iter().position(|c| c == name) {
            Some(index) => self.coordinate(index),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }

    /// Structural checks: nonempty, consistent widths, and rejected
    /// moves leaving the position in place.
    pub fn validate(&self) -> Result<()> {
        let t = self.len();
        if t == 0 {
            return Err(invalid_argument("trace must hold at least one iteration"));
        }
        if self.log_targets.len() != t || self.accept_flags.len() != t {
            return Err(invalid_argument(format!(
                "series lengths differ: {} positions, {} log-targets, {} flag rows",
                t,
                self.log_targets.len(),
                self.accept_flags.len()
            )));
        }
        let d = self.dim();
        if d == 0 {
            return Err(invalid_argument("trace needs at least one coordinate"));
        }
        for (i, row) in self.positions.iter().enumerate() {
            if row.len() != d {
                return Err(invalid_argument(format!(
                    "position row {i} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
        }
        let n_blocks = self.accept_flags[0].len();
        if n_blocks == 0 {
            return Err(invalid_argument("each iteration needs at least one accept flag"));
        }
        for (i, row) in self.accept_flags.iter().enumerate() {
            if row.len() != n_blocks {
                return Err(invalid_argument(format!(
                    "flag row {i} has {} entries, expected {n_blocks}",
                    row.len()
                )));
            }
        }
        for t in 1..self.len() {
            let flags = &self.accept_flags[t];
            if flags.len() == 1 && !flags[0] && self.positions[t] != self.positions[t - 1] {
                return Err(invalid_argument(format!(
                    "iteration {t} was rejected but the position moved"
                )));
            }
            if flags.len() == d {
                for (j, &fj) in flags.iter().enumerate() {
                    if !fj && self.positions[t][j] != self.positions[t - 1][j] {
                        return Err(invalid_argument(format!(
                            "iteration {t} rejected block {j} but coordinate {j} moved"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        self.validate()?;
        write!(out, "iter")?;
        for name in &self.coord_names {
            write!(out, ",{name}")?;
        }
        writeln!(out, ",log_target,accepted")?;
        for t in 0..self.len() {
            write!(out, "{}", t + 1)?;
            for value in &self.positions[t] {
                write!(out, ",{value:.16e}")?;
            }
            write!(out, ",{:.16e},", self.log_targets[t].value())?;
            for &flag in &self.accept_flags[t] {
                write!(out, "{}", flag as u8)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Parse the CSV form. The file does not carry the kernel label or
    /// seed, so those fields come back empty and zero.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(trace_format(1, "file is empty")),
        };
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() < 4
            || fields[0] != "iter"
            || fields[fields.len() - 2] != "log_target"
            || fields[fields.len() - 1] != "accepted"
        {
            return Err(trace_format(
                1,
                "header must be iter,<coord names...>,log_target,accepted",
            ));
        }
        let coord_names: Vec<String> = fields[1..fields.len() - 2]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let d = coord_names.len();

        let mut trace = Trace::new("", 0, coord_names);
        let mut n_blocks = None;
        for (line_index, line) in lines {
            let row = line_index + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 3 {
                return Err(trace_format(
                    row,
                    format!("expected {} fields, found {}", d + 3, fields.len()),
                ));
            }
            let iter: u64 = fields[0]
                .parse()
                .map_err(|_| trace_format(row, format!("bad iteration index {:?}", fields[0])))?;
            if iter != trace.len() as u64 + 1 {
                return Err(trace_format(
                    row,
                    format!("iteration index {iter} out of order, expected {}", trace.len() + 1),
                ));
            }
            let mut position = Vec::with_capacity(d);
            for field in &fields[1..=d] {
                position.push(parse_float(field, row)?);
            }
            let raw_log = parse_float(fields[d + 1], row)?;
            if raw_log.is_nan() || raw_log == f64::INFINITY {
                return Err(trace_format(
                    row,
                    format!("log_target must be finite or -inf, got {raw_log}"),
                ));
            }
            let log_target = LogDensity::new(raw_log);
            let flags = parse_flags(fields[d + 2], row)?;
            match n_blocks {
                None => n_blocks = Some(flags.len()),
                Some(n) if n != flags.len() => {
                    return Err(trace_format(
                        row,
                        format!("{} accept flags, previous rows had {n}", flags.len()),
                    ));
                }
                Some(_) => {}
            }
            trace.push(&position, log_target, &flags);
        }
        if trace.is_empty() {
            return Err(trace_format(2, "no data rows after the header"));
        }
        trace.validate().map_err(|e| trace_format(2, e.to_string()))?;
        Ok(trace)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }
}

fn trace_format(row: usize, message: impl Into<String>) -> Error {
    Error::TraceFormat {
        row,
        message: message.into(),
    }
}

fn parse_float(field: &str, row: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| trace_format(row, format!("bad numeric field {field:?}")))
}

fn parse_flags(field: &str, row: usize) -> Result<Vec<bool>> {
    if field.is_empty() {
        return Err(trace_format(row, "empty accepted field"));
    }
    field
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(trace_format(row, format!("bad accept flag {other:?}"))),
        })
        .collect()
}
