//! Solution CSV files and JSON output.
//!
//! A solution file has `#`-prefixed header lines followed by the columns
//! `x,V,dV,u_star`:
//!
//! ```text
//! # config_hash=0123abcd...
//! # params rho=0.03 b=0.65 c=1 sigma=0.1
//! x,V,dV,u_star
//! 0,-74.37,-3.42,0.29
//! ...
//! ```
//!
//! Floats use the shortest representation that round-trips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::{Grid, ValueFunction};
use crate::model::LakeParams;

pub fn write_solution<W: Write>(mut out: W, v: &ValueFunction, config_hash: &str) -> Result<()> {
    let p = v.params();
    writeln!(out, "# config_hash={config_hash}")?;
    writeln!(
        out,
        "# params rho={} b={} c={} sigma={}",
        p.rho, p.b, p.c, p.sigma
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "V", "dV", "u_star"])?;
    for ((x, value), slope) in v.grid().nodes().zip(v.values()).zip(v.slopes()) {
        w.write_record([
            x.to_string(),
            value.to_string(),
            slope.to_string(),
            (-1.0 / slope).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution_file(path: &Path, v: &ValueFunction, config_hash: &str) -> Result<()> {
    write_solution(BufWriter::new(File::create(path)?), v, config_hash)
}

/// Raw contents of a solution file, before any invariant is checked.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub params: Option<LakeParams>,
    pub config_hash: Option<String>,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl SolutionTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut params = None;
        let mut config_hash = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some(h) = body.strip_prefix("config_hash=") {
                config_hash = Some(h.to_string());
            } else if let Some(rest) = body.strip_prefix("params") {
                params = Some(parse_params(rest)?);
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("solution file lacks a `{name}` column")))
        };
        let (ix, iv) = (col("x")?, col("V")?);
        let mut x = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                let field = record.get(i).unwrap_or("").trim();
                field
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number `{field}` in solution file")))
            };
            x.push(num(ix)?);
            values.push(num(iv)?);
        }
        Ok(Self {
            params,
            config_hash,
            x,
            values,
        })
    }

    /// Uniform grid implied by the `x` column.
    pub fn grid(&self) -> Result<Grid> {
        if self.x.len() < 3 || self.x[0] != 0.0 {
            return Err(Error::InvalidValueFunction(
                "solution needs at least 3 nodes starting at x = 0".into(),
            ));
        }
        let n = self.x.len() - 1;
        let grid = Grid::new(self.x[n], n)?;
        let dx = grid.dx();
        for (i, &x) in self.x.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-9 * (1.0 + x.abs()) + 1e-6 * dx {
                return Err(Error::InvalidValueFunction(format!(
                    "grid is not uniform at node {i}"
                )));
            }
        }
        Ok(grid)
    }

    /// Validates the table as a value function. `fallback` supplies the
    /// parameters when the file carries none.
    pub fn into_value_function(self, fallback: Option<LakeParams>) -> Result<ValueFunction> {
        let params = self.params.or(fallback).ok_or_else(|| {
            Error::Config("solution file has no parameter header and none were given".into())
        })?;
        let grid = self.grid()?;
        ValueFunction::new(grid, self.values, params)
    }
}

fn parse_params(s: &str) -> Result<LakeParams> {
    let get = |key: &str| -> Result<f64> {
        s.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::Config(format!("parameter header lacks `{key}`")))?
            .parse()
            .map_err(|_| Error::Config(format!("bad `{key}` in parameter header")))
    };
    LakeParams::new(get("rho")?, get("b")?, get("c")?, get("sigma")?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
