//! Line-delimited JSON trace files.
//!
//! The first line is a header `{"N":..,"K":..,"T":..,"zero_count_class":".."}`;
//! every following line is one round `{"t":..,"available":[..],"loss":[..]}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Environment, RoundTrace, ZeroCountClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub zero_count_class: ZeroCountClass,
}

pub fn write_trace<W: Write>(env: &Environment, mut out: W) -> Result<()> {
    let header = TraceHeader {
        n: env.n,
        k: env.k,
        t: env.horizon(),
        zero_count_class: env.zero_count_class,
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for r in &env.rounds {
        writeln!(
            out,
            "{}",
            serde_json::to_string(r).expect("round serializes")
        )?;
    }
    Ok(())
}

pub fn to_trace_string(env: &Environment) -> String {
    let mut buf = Vec::new();
    write_trace(env, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Parses a trace, reporting the 1-based line of the first malformed record.
pub fn parse_trace(text: &str) -> Result<Environment> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, htext) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let header: TraceHeader = serde_json::from_str(htext).map_err(|e| Error::Parse {
        line: hline + 1,
        message: format!("bad header: {e}"),
    })?;
    let mut rounds = Vec::with_capacity(header.t);
    for (i, line) in lines {
        let round: RoundTrace = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        rounds.push(round);
    }
    if rounds.len() != header.t {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!(
                "header declares T = {} but {} rounds follow",
                header.t,
                rounds.len()
            ),
        });
    }
    let env = Environment {
        n: header.n,
        k: header.k,
        zero_count_class: header.zero_count_class,
        rounds,
    };
    crate::domain::validate_environment(&env).map_err(Error::InvalidEnvironment)?;
    Ok(env)
}

pub fn read_trace(path: &Path) -> Result<Environment> {
    parse_trace(&fs::read_to_string(path)?)
}

pub fn save_trace(env: &Environment, path: &Path) -> Result<()> {
    fs::write(path, to_trace_string(env))?;
    Ok(())
}
