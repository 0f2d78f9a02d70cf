//! Tab-separated tables, number formatting and sparsity-pattern grids.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::grid::StateLabels;
use crate::h2::{is_local, CARD_TOL};

/// Significant digits of every number written to a table.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed,
/// exponent notation only for very large or small magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A table with a header row, rendered as TSV.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Human-readable name of state `s`: `theta_g`, `omega_g`, `x_s`.
pub fn state_name(labels: &StateLabels, s: usize) -> String {
    if let Some(g) = labels.angles.iter().position(|&a| a == s) {
        format!("theta_{g}")
    } else if let Some(g) = labels.frequencies.iter().position(|&f| f == s) {
        format!("omega_{g}")
    } else {
        format!("x_{s}")
    }
}

fn input_name(labels: &StateLabels, i: usize) -> String {
    match labels.input_generator.get(i).copied().flatten() {
        Some(g) => format!("u_{i} (gen {g})"),
        None => format!("u_{i}"),
    }
}

/// Pattern grid of `k`: one row per input, one cell per state. Local cells
/// (input and state on the same generator) are framed in brackets, nonzeros
/// are `x`. The remote nonzeros are listed below the grid as
/// (actuating generator, measured state) pairs.
pub fn pattern_grid(k: &DMatrix<f64>, labels: &StateLabels, title: &str) -> String {
    let (p, n) = k.shape();
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    let _ = writeln!(out, "# [.] / [x]: local block (zero / nonzero), x : remote nonzero");
    let names: Vec<String> = (0..n).map(|s| state_name(labels, s)).collect();
    let _ = writeln!(out, "# columns: {}", names.join(" "));
    let width = (0..p).map(|i| input_name(labels, i).len()).max().unwrap_or(0);
    let mut remote = Vec::new();
    let mut local = 0;
    for i in 0..p {
        let _ = write!(out, "{:<width$} |", input_name(labels, i));
        for j in 0..n {
            let nz = k[(i, j)].abs() > CARD_TOL;
            let cell = match (is_local(labels, i, j), nz) {
                (true, true) => "[x]",
                (true, false) => "[.]",
                (false, true) => " x ",
                (false, false) => " . ",
            };
            out.push_str(cell);
            if nz {
                if is_local(labels, i, j) {
                    local += 1;
                } else {
                    remote.push((i, j));
                }
            }
        }
        out.push_str("|\n");
    }
    let _ = writeln!(out, "local nonzeros: {local}");
    let _ = writeln!(out, "remote nonzeros: {}", remote.len());
    for (i, j) in remote {
        let actuator = match labels.input_generator.get(i).copied().flatten() {
            Some(g) => format!("gen {g}"),
            None => format!("input {i}"),
        };
        let _ = writeln!(
            out,
            "remote: ({actuator}, {}) K[{i},{j}] = {}",
            names[j],
            fmt_num(k[(i, j)])
        );
    }
    out
}
