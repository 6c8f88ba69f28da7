//! CSV column layouts of every subcommand and the figure recipes a plotting
//! front end builds from them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SWEEP_C: &[&str] = &["c1", "c2", "c3", "I", "q"];
pub const INFO_QBER: &[&str] = &["gate", "q", "I"];
pub const RATE_DELTA: &[&str] = &["delta", "r_cstar", "r_ideal", "r_bb84"];
pub const NOISE_RATE: &[&str] = &["q", "r_bb84", "r_u2star_xyz", "r_u2star_xz"];
pub const LOSS_QBER: &[&str] = &["q", "c2", "q_e", "q_loss"];
pub const OPTIMIZE_RATE: &[&str] = &["q", "c1", "c2", "c3", "r", "r_bb84", "s", "q_e"];
pub const TABLE_NQ: &[&str] = &["q", "n"];
pub const EE_DEMO: &[&str] = &["alpha", "a", "e", "probability", "fidelity"];

/// `(subcommand, columns)` for every subcommand.
pub const SCHEMAS: &[(&str, &[&str])] = &[
    ("sweep-c", SWEEP_C),
    ("info-qber", INFO_QBER),
    ("rate-delta", RATE_DELTA),
    ("noise-rate", NOISE_RATE),
    ("loss-qber", LOSS_QBER),
    ("optimize-rate", OPTIMIZE_RATE),
    ("table-nq", TABLE_NQ),
    ("ee-demo", EE_DEMO),
];

pub fn columns(subcommand: &str) -> Option<&'static [&'static str]> {
    SCHEMAS
        .iter()
        .find(|(name, _)| *name == subcommand)
        .map(|(_, c)| *c)
}

/// Checks the header line of a CSV produced by `subcommand`.
pub fn check_header(subcommand: &str, header: &str) -> Result<()> {
    let expected = columns(subcommand)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown subcommand {subcommand:?}")))?;
    let found: Vec<&str> = header.trim_end_matches(['\r', '\n']).split(',').collect();
    if found != expected {
        return Err(Error::InvalidArgument(format!(
            "{subcommand}: expected columns {}, found {}",
            expected.join(","),
            found.join(",")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
    ];
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = *self as usize + 3;
        write!(f, "fig{k}")
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown figure {s:?}")))
    }
}

/// What a renderer needs to draw one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRecipe {
    pub figure: FigureId,
    /// Subcommand whose CSV feeds the figure.
    pub subcommand: &'static str,
    /// Extra flags the subcommand needs for this figure.
    pub flags: &'static [&'static str],
    pub x_column: &'static str,
    pub y_columns: &'static [&'static str],
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl FigureRecipe {
    pub fn columns(&self) -> &'static [&'static str] {
        columns(self.subcommand).expect("recipes name known subcommands")
    }

    /// Header check plus a non-empty body, as required before rendering.
    pub fn validate_csv(&self, text: &str) -> Result<()> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("{}: empty CSV", self.figure)))?;
        check_header(self.subcommand, header)?;
        if !lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "{}: CSV has no data rows",
                self.figure
            )));
        }
        Ok(())
    }
}

pub fn recipe(figure: FigureId) -> FigureRecipe {
    let base = |subcommand, x_column, y_columns, x_label, y_label, x_range, y_range| FigureRecipe {
        figure,
        subcommand,
        flags: &[],
        x_column,
        y_columns,
        x_label,
        y_label,
        x_range,
        y_range,
    };
    match figure {
        FigureId::Fig3 => base(
            "sweep-c",
            "q",
            &["I"],
            "QBER q",
            "I(A,E)",
            (0.0, 0.5),
            (0.0, 0.5),
        ),
        FigureId::Fig4 => base(
            "info-qber",
            "q",
            &["I"],
            "QBER q",
            "max I(A,E)",
            (0.0, 0.4),
            (0.0, 0.8),
        ),
        FigureId::Fig5 => base(
            "rate-delta",
            "delta",
            &["r_cstar", "r_ideal", "r_bb84"],
            "δ",
            "relative key rate r",
            (1.0, 3.0),
            (-0.2, 0.8),
        ),
        FigureId::Fig6 => base(
            "noise-rate",
            "q",
            &["r_bb84", "r_u2star_xyz", "r_u2star_xz"],
            "QBER q",
            "relative key rate r",
            (0.0, 0.25),
            (-0.5, 1.0),
        ),
        FigureId::Fig7 => base(
            "loss-qber",
            "c2",
            &["q_e"],
            "c2",
            "q_E",
            (0.0, std::f64::consts::PI),
            (0.0, 0.5),
        ),
        FigureId::Fig8 => base(
            "optimize-rate",
            "q",
            &["r", "r_bb84"],
            "QBER q",
            "relative key rate r",
            (0.0, 0.25),
            (-0.5, 1.0),
        ),
        FigureId::Fig9 => FigureRecipe {
            flags: &["--loss", "0.5", "--corr"],
            ..base(
                "optimize-rate",
                "q",
                &["r", "r_bb84"],
                "QBER q",
                "relative key rate r",
                (0.0, 0.25),
                (-0.5, 1.0),
            )
        },
    }
}
