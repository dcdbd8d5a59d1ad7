//! JSON Lines files for datasets and run traces.
//!
//! One round per line:
//! `{"A": [[...]], "b": [...], "u": [...], "blocks": [offsets]}`.
//! Doubles are written in scientific notation with 17 significant digits, so
//! reading a file back reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use saddleflow_core::linalg::Matrix;
use saddleflow_core::online::RunTrace;
use saddleflow_core::oracle::{RoundData, SimplexBlocks};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundLine {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    u: Vec<f64>,
    blocks: Vec<usize>,
}

/// Appends `v` with 17 significant digits.
pub fn push_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

pub fn push_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_f64(out, *v);
    }
    out.push(']');
}

fn push_matrix(out: &mut String, a: &Matrix) {
    out.push('[');
    for i in 0..a.rows() {
        if i > 0 {
            out.push(',');
        }
        push_array(out, a.row(i));
    }
    out.push(']');
}

/// The JSON line of one round, without the trailing newline.
pub fn round_to_line(round: &RoundData) -> String {
    let mut line = String::from("{\"A\":");
    push_matrix(&mut line, &round.a);
    line.push_str(",\"b\":");
    push_array(&mut line, &round.b);
    line.push_str(",\"u\":");
    push_array(&mut line, &round.u);
    line.push_str(",\"blocks\":[");
    let offsets: Vec<String> = round.blocks.offsets().iter().map(usize::to_string).collect();
    line.push_str(&offsets.join(","));
    line.push_str("]}");
    line
}

pub fn save_dataset(path: &Path, rounds: &[RoundData]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for round in rounds {
        writeln!(out, "{}", round_to_line(round)).map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Parses a dataset; blank lines are skipped and every round must share the
/// constraint dimension of the first.
pub fn parse_dataset(path: &Path, reader: impl BufRead) -> Result<Vec<RoundData>> {
    let mut rounds: Vec<RoundData> = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let format_error = |message: String| CliError::Format {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let parsed: RoundLine =
            serde_json::from_str(&line).map_err(|e| format_error(e.to_string()))?;
        let round = Matrix::from_rows(&parsed.a)
            .and_then(|a| {
                let blocks = SimplexBlocks::new(parsed.blocks)?;
                RoundData::new(a, parsed.b, parsed.u, blocks)
            })
            .map_err(|e| format_error(e.to_string()))?;
        if let Some(first) = rounds.first() {
            if first.m() != round.m() {
                return Err(format_error(format!(
                    "round has {} constraint rows, earlier rounds have {}",
                    round.m(),
                    first.m()
                )));
            }
        }
        rounds.push(round);
    }
    if rounds.is_empty() {
        return Err(CliError::NoRounds {
            path: path.to_path_buf(),
        });
    }
    Ok(rounds)
}

pub fn load_dataset(path: &Path) -> Result<Vec<RoundData>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_dataset(path, BufReader::new(file))
}

/// Writes one line per round: `t` (from 1), the action, the dual variable it
/// was computed with, the reward, the true residual and, for estimated runs,
/// the matrix estimate.
pub fn save_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (k, rec) in trace.rounds.iter().enumerate() {
        let mut line = format!("{{\"t\":{},\"x\":", k + 1);
        push_array(&mut line, &rec.x_hat);
        line.push_str(",\"lambda\":");
        push_array(&mut line, &rec.lambda_hat);
        line.push_str(",\"reward\":");
        push_f64(&mut line, rec.reward);
        line.push_str(",\"residual\":");
        push_array(&mut line, &rec.residual_true);
        if let Some(a_hat) = &rec.a_hat {
            line.push_str(",\"a_hat\":");
            push_matrix(&mut line, a_hat);
        }
        line.push('}');
        writeln!(out, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}
