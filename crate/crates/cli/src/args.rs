//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "finfree",
    version,
    about = "Finite free convolutions, β-corners sampling and their β → ∞ limits"
)]
pub struct Cli {
    /// Base seed; required by every stochastic command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (falls back to FINFREE_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected characteristic polynomial of A + B or AB under random rotation.
    Convolve(ConvolveArgs),
    /// Expected characteristic polynomial of the k × k corner.
    Project(ProjectArgs),
    /// Sample interlacing arrays from the β-corners process.
    Corners(CornersArgs),
    /// Compare corners samples at large β with the limiting lattice and field.
    Crystallize(CrystallizeArgs),
    /// Dump the limiting lattice, its Gaussian field, and optional field draws.
    Dgff(DgffArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpArg {
    Add,
    Mul,
}

/// A spectrum given inline as `1,2,3` or read from a file as `@path`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumArg(pub Vec<f64>);

fn parse_number_list(text: &str) -> Result<Vec<f64>, String> {
    let items: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err("expected at least one number".into());
    }
    items
        .iter()
        .map(|s| match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(format!("{v} is not finite")),
            Err(_) => Err(format!("'{s}' is not a number")),
        })
        .collect()
}

pub fn parse_spectrum(text: &str) -> Result<SpectrumArg, String> {
    let body = match text.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?
        }
        None => text.to_string(),
    };
    parse_number_list(&body).map(SpectrumArg)
}

/// A list of positive values such as a β ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveList(pub Vec<f64>);

pub fn parse_positive_list(text: &str) -> Result<PositiveList, String> {
    let v = parse_number_list(text)?;
    match v.iter().find(|&&b| b <= 0.0) {
        Some(b) => Err(format!("{b} is not positive")),
        None => Ok(PositiveList(v)),
    }
}

#[derive(Debug, Args)]
pub struct ConvolveArgs {
    #[arg(long, value_enum)]
    pub op: OpArg,
    /// Eigenvalues of A.
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub a: SpectrumArg,
    /// Eigenvalues of B.
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub b: SpectrumArg,
    /// Average over all permutations instead of the closed form.
    #[arg(long)]
    pub oracle: bool,
    /// Accept non-positive spectra for `mul` (no real-rootedness guarantee).
    #[arg(long)]
    pub allow_mixed_signs: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub a: SpectrumArg,
    /// Corner size.
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Exact,
    CriticalPoints,
}

/// Sampler overrides shared by `corners` and `crystallize`.
#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 400)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 1)]
    pub thinning: usize,
    #[arg(long, value_enum, default_value_t = StartArg::Exact)]
    pub start: StartArg,
}

#[derive(Debug, Args)]
pub struct CornersArgs {
    /// Top row y_1 < … < y_N.
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub top: SpectrumArg,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where the per-level e_ℓ summary goes in CSV mode (default: stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrystallizeArgs {
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub top: SpectrumArg,
    /// β ladder.
    #[arg(long, value_parser = parse_positive_list, default_value = "100,1000,10000", allow_hyphen_values = true)]
    pub betas: PositiveList,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DgffArgs {
    #[arg(long, value_parser = parse_spectrum, allow_hyphen_values = true)]
    pub top: SpectrumArg,
    /// Number of field draws to emit.
    #[arg(long, default_value_t = 0)]
    pub draws: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion number or a substring of its name, e.g. `5` or `dixon`.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_lists() {
        assert_eq!(parse_spectrum("1,-1").unwrap().0, vec![1.0, -1.0]);
        assert_eq!(parse_spectrum(" 1 2,3 ").unwrap().0, vec![1.0, 2.0, 3.0]);
        assert!(parse_spectrum("1,x").unwrap_err().contains("'x'"));
        assert!(parse_spectrum("").is_err());
        assert!(parse_spectrum("inf").is_err());
        assert!(parse_positive_list("1,0").is_err());
    }

    #[test]
    fn grammar_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
