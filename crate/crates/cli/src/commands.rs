//! Subcommand implementations. Each returns the bytes to write so that
//! outputs can be compared and pinned in tests.

use serde::Serialize;

use finfree_core::corners::{
    elementary_means, CornersSampler, McConfig, StartState, TriangularArray,
};
use finfree_core::finfree::{
    additive_convolution, multiplicative_convolution, permutation_oracle, projection_poly,
    ConvolutionResult, Method, Op,
};
use finfree_core::infinity::{
    build_lattice, build_precision, sample_fields, GaussianField, InftyLattice,
};
use finfree_core::rng::hash_key;
use finfree_core::stats::{fit_slope, RunningStats};
use finfree_core::{Error as CoreError, Spectrum};

use crate::acceptance;
use crate::args::{
    ConvolveArgs, CornersArgs, CrystallizeArgs, DgffArgs, McArgs, OpArg, ProjectArgs, SpectrumArg,
    StartArg, VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{
    emit, emit_stderr, format_f64, path_arg, to_json, CsvTable, Format, SCHEMA_VERSION,
};

/// Settings shared by all subcommands.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: Option<u64>,
    pub format: Format,
}

impl Context {
    fn require_seed(&self, command: &str) -> CliResult<u64> {
        self.seed.ok_or_else(|| {
            CliError::input(
                "--seed",
                format!("required by the stochastic command `{command}`"),
            )
        })
    }
}

fn spectrum(field: &str, arg: &SpectrumArg) -> CliResult<Spectrum> {
    Spectrum::from_slice(&arg.0).map_err(|e| CliError::from_core(field, e))
}

fn top_row(arg: &SpectrumArg) -> CliResult<Spectrum> {
    let top = spectrum("--top", arg)?;
    finfree_core::corners::check_top(&top)
        .map_err(|e| CliError::from_core("--top (β-corners top row)", e))?;
    Ok(top)
}

#[derive(Debug, Serialize)]
struct PolyOutput<'a> {
    schema_version: u32,
    command: &'a str,
    method: Method,
    /// Highest power first; monic.
    coefficients: &'a [f64],
    real_rooted: bool,
    /// Ascending; absent when the polynomial is not real-rooted.
    roots: Option<Vec<f64>>,
}

fn poly_output(command: &str, result: &ConvolutionResult, format: Format) -> CliResult<Vec<u8>> {
    let poly = &result.poly;
    let real_rooted = poly.cached_roots().is_some() || poly.is_real_rooted();
    let roots = if real_rooted {
        poly.real_roots().ok()
    } else {
        None
    };
    match format {
        Format::Json => to_json(&PolyOutput {
            schema_version: SCHEMA_VERSION,
            command,
            method: result.method,
            coefficients: poly.coeffs(),
            real_rooted,
            roots,
        }),
        Format::Csv => {
            let mut t = CsvTable::new(&["kind", "index", "value"])?;
            let n = poly.degree();
            for (i, &c) in poly.coeffs().iter().enumerate() {
                t.row(&[
                    "coefficient".to_string(),
                    (n - i).to_string(),
                    format_f64(c),
                ])?;
            }
            for (i, &r) in roots.iter().flatten().enumerate() {
                t.row(&["root".to_string(), (i + 1).to_string(), format_f64(r)])?;
            }
            t.into_bytes()
        }
    }
}

pub fn convolve(ctx: &Context, args: &ConvolveArgs) -> CliResult<Vec<u8>> {
    let a = spectrum("--a", &args.a)?;
    let b = spectrum("--b", &args.b)?;
    if a.len() != b.len() {
        return Err(CliError::input(
            "--b",
            format!("has {} eigenvalues but --a has {}", b.len(), a.len()),
        ));
    }
    let op = match args.op {
        OpArg::Add => Op::Add,
        OpArg::Mul => Op::Mul,
    };
    if op == Op::Mul && !args.allow_mixed_signs {
        for (field, s) in [("--a", &a), ("--b", &b)] {
            if let Some(v) = s.first_non_positive() {
                return Err(CliError::input(
                    field,
                    format!("eigenvalue {v} is not positive; multiplicative convolution needs positive spectra (pass --allow-mixed-signs to override)"),
                ));
            }
        }
    }
    let result = if args.oracle {
        permutation_oracle(&a, &b, op)
            .map_err(|e| CliError::from_core("--a (permutation oracle size)", e))?
    } else {
        match op {
            Op::Add => additive_convolution(&a, &b),
            Op::Mul => multiplicative_convolution(&a, &b, args.allow_mixed_signs),
        }
        .map_err(|e| CliError::from_core("--a/--b", e))?
    };
    poly_output("convolve", &result, ctx.format)
}

pub fn project(ctx: &Context, args: &ProjectArgs) -> CliResult<Vec<u8>> {
    let a = spectrum("--a", &args.a)?;
    let result =
        projection_poly(&a, args.k).map_err(|e| CliError::from_core("--k (corner size)", e))?;
    poly_output("project", &result, ctx.format)
}

/// Sampler configuration from the shared flags, with each failure attributed
/// to its flag.
fn mc_config(seed: u64, mc: &McArgs) -> CliResult<McConfig> {
    let cfg = McConfig {
        seed,
        sweeps: mc.sweeps,
        burn_in: mc.burn_in,
        chains: mc.chains,
        thinning: mc.thinning,
        start: match mc.start {
            StartArg::Exact => StartState::Exact,
            StartArg::CriticalPoints => StartState::CriticalPoints,
        },
    };
    if mc.sweeps <= mc.burn_in {
        return Err(CliError::input(
            "--sweeps",
            format!("{} must exceed --burn-in {}", mc.sweeps, mc.burn_in),
        ));
    }
    if mc.chains == 0 {
        return Err(CliError::input("--chains", "must be at least 1"));
    }
    if mc.thinning == 0 {
        return Err(CliError::input("--thinning", "must be at least 1"));
    }
    Ok(cfg)
}

fn sampler(top: &Spectrum, beta: f64, cfg: McConfig) -> CliResult<CornersSampler> {
    CornersSampler::new(top, beta, cfg).map_err(|e| match e {
        CoreError::NonPositive { .. } | CoreError::NonFinite(_) => {
            CliError::from_core("--beta (β-corners parameter)", e)
        }
        CoreError::Config(_) => CliError::from_core("--sweeps", e),
        _ => CliError::from_core("--top (β-corners top row)", e),
    })
}

#[derive(Debug, Serialize)]
struct LevelSummary {
    k: usize,
    /// Mean of e_ℓ at this level, ℓ = 1..k.
    mean: Vec<f64>,
    std_error: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CornersOutput<'a> {
    schema_version: u32,
    command: &'a str,
    top: &'a [f64],
    beta: f64,
    config: McConfig,
    labels: Vec<String>,
    /// One flattened array per draw, level-major.
    draws: Vec<Vec<f64>>,
    summary: Vec<LevelSummary>,
}

fn level_summaries(draws: &[TriangularArray]) -> Vec<LevelSummary> {
    elementary_means(draws)
        .into_iter()
        .enumerate()
        .map(|(i, lvl)| LevelSummary {
            k: i + 1,
            mean: lvl.iter().map(|m| m.mean).collect(),
            std_error: lvl.iter().map(|m| m.std_error).collect(),
        })
        .collect()
}

/// Writes draws and summary; the summary goes to `--summary` or stderr
/// in CSV mode and inline in JSON mode.
pub fn corners(ctx: &Context, args: &CornersArgs) -> CliResult<Vec<u8>> {
    let seed = ctx.require_seed("corners")?;
    if !(args.beta > 0.0 && args.beta.is_finite()) {
        return Err(CliError::input(
            "--beta",
            format!("β = {} must be positive and finite", args.beta),
        ));
    }
    let top = top_row(&args.top)?;
    let cfg = mc_config(seed, &args.mc)?;
    let draws = sampler(&top, args.beta, cfg)?.draws(args.draws);
    let labels = TriangularArray::labels(top.len());
    let summary = level_summaries(&draws);
    match ctx.format {
        Format::Json => to_json(&CornersOutput {
            schema_version: SCHEMA_VERSION,
            command: "corners",
            top: top.values(),
            beta: args.beta,
            config: cfg,
            labels,
            draws: draws.iter().map(TriangularArray::flatten).collect(),
            summary,
        }),
        Format::Csv => {
            let mut t = CsvTable::new(&labels)?;
            for d in &draws {
                t.numeric_row(&d.flatten())?;
            }
            let mut s = CsvTable::new(&["k", "l", "mean", "std_error"])?;
            for lvl in &summary {
                for (l, (m, se)) in lvl.mean.iter().zip(&lvl.std_error).enumerate() {
                    s.row(&[
                        lvl.k.to_string(),
                        (l + 1).to_string(),
                        format_f64(*m),
                        format_f64(*se),
                    ])?;
                }
            }
            let s = s.into_bytes()?;
            match &args.summary {
                Some(p) => emit(Some(p), &s)?,
                None => emit_stderr(&s),
            }
            t.into_bytes()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateStat {
    pub label: String,
    pub lattice: f64,
    pub mean: f64,
    pub abs_deviation: f64,
    /// Empirical standard deviation of √β·(x − lattice).
    pub empirical_std: f64,
    /// Limit standard deviation from the Gaussian field.
    pub reference_std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrystalRow {
    pub beta: f64,
    pub max_deviation: f64,
    pub coordinates: Vec<CoordinateStat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrystalTable {
    pub top: Vec<f64>,
    pub lattice: InftyLattice,
    pub rows: Vec<CrystalRow>,
    /// Least-squares slope of ln(max deviation) against ln β.
    pub slope: Option<f64>,
}

/// Seed of the sampler run at one rung of a β ladder.
pub fn ladder_seed(seed: u64, beta: f64) -> u64 {
    hash_key(&[seed, beta.to_bits()])
}

/// Rescaled fluctuations `√β (x − lattice)` of every free coordinate, one
/// row per draw.
pub fn rescaled_fluctuations(
    draws: &[TriangularArray],
    lattice: &InftyLattice,
    beta: f64,
) -> Vec<Vec<f64>> {
    let n = lattice.rank();
    let reference: Vec<f64> = (1..n)
        .flat_map(|k| lattice.level(k).iter().copied())
        .collect();
    let scale = beta.sqrt();
    draws
        .iter()
        .map(|d| {
            let flat = d.flatten();
            reference
                .iter()
                .zip(&flat)
                .map(|(r, x)| scale * (x - r))
                .collect()
        })
        .collect()
}

/// Sample means and fluctuation sizes across a β ladder.
pub fn crystallize_table(
    top: &Spectrum,
    betas: &[f64],
    draws: usize,
    cfg: McConfig,
) -> CliResult<CrystalTable> {
    let lattice = build_lattice(top);
    let n = top.len();
    let field: Option<GaussianField> = if n > 1 {
        Some(
            build_precision(&lattice)
                .map_err(|e| CliError::from_core("--top (lattice precision)", e))?,
        )
    } else {
        None
    };
    let reference_std: Vec<f64> = match &field {
        Some(f) => {
            let cov = f
                .covariance()
                .map_err(|e| CliError::from_core("--top", e))?;
            (0..cov.len()).map(|i| cov[i][i].sqrt()).collect()
        }
        None => Vec::new(),
    };
    let labels: Vec<String> = TriangularArray::labels(n)
        .into_iter()
        .take(n * (n - 1) / 2)
        .collect();
    let reference: Vec<f64> = (1..n)
        .flat_map(|k| lattice.level(k).iter().copied())
        .collect();
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let run = McConfig {
            seed: ladder_seed(cfg.seed, beta),
            ..cfg
        };
        let samples = sampler(top, beta, run)?.draws(draws);
        let fluct = rescaled_fluctuations(&samples, &lattice, beta);
        let mut coordinates = Vec::with_capacity(labels.len());
        for (j, label) in labels.iter().enumerate() {
            let stats: RunningStats = fluct.iter().map(|r| r[j]).collect();
            let mean = reference[j] + stats.mean() / beta.sqrt();
            coordinates.push(CoordinateStat {
                label: label.clone(),
                lattice: reference[j],
                mean,
                abs_deviation: (mean - reference[j]).abs(),
                empirical_std: stats.variance().sqrt(),
                reference_std: reference_std[j],
            });
        }
        let max_deviation = coordinates
            .iter()
            .map(|c| c.abs_deviation)
            .fold(0.0, f64::max);
        rows.push(CrystalRow {
            beta,
            max_deviation,
            coordinates,
        });
    }
    let usable: Vec<&CrystalRow> = rows.iter().filter(|r| r.max_deviation > 0.0).collect();
    let slope = (n > 1 && usable.len() >= 2).then(|| {
        let x: Vec<f64> = usable.iter().map(|r| r.beta.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.max_deviation.ln()).collect();
        fit_slope(&x, &y)
    });
    Ok(CrystalTable {
        top: top.values().to_vec(),
        lattice,
        rows,
        slope,
    })
}

#[derive(Debug, Serialize)]
struct CrystallizeOutput<'a> {
    schema_version: u32,
    command: &'a str,
    draws: usize,
    config: McConfig,
    #[serde(flatten)]
    table: &'a CrystalTable,
}

pub fn crystallize(ctx: &Context, args: &CrystallizeArgs) -> CliResult<Vec<u8>> {
    let seed = ctx.require_seed("crystallize")?;
    let top = top_row(&args.top)?;
    let cfg = mc_config(seed, &args.mc)?;
    let table = crystallize_table(&top, &args.betas.0, args.draws, cfg)?;
    match ctx.format {
        Format::Json => to_json(&CrystallizeOutput {
            schema_version: SCHEMA_VERSION,
            command: "crystallize",
            draws: args.draws,
            config: cfg,
            table: &table,
        }),
        Format::Csv => {
            let mut t = CsvTable::new(&[
                "beta",
                "coordinate",
                "lattice",
                "mean",
                "abs_deviation",
                "empirical_std",
                "reference_std",
                "max_deviation",
                "slope",
            ])?;
            let slope = table.slope.map(format_f64).unwrap_or_default();
            for row in &table.rows {
                for c in &row.coordinates {
                    t.row(&[
                        format_f64(row.beta),
                        c.label.clone(),
                        format_f64(c.lattice),
                        format_f64(c.mean),
                        format_f64(c.abs_deviation),
                        format_f64(c.empirical_std),
                        format_f64(c.reference_std),
                        format_f64(row.max_deviation),
                        slope.clone(),
                    ])?;
                }
            }
            t.into_bytes()
        }
    }
}

#[derive(Debug, Serialize)]
struct DgffOutput<'a> {
    schema_version: u32,
    command: &'a str,
    top: &'a [f64],
    lattice: &'a InftyLattice,
    /// Labels of the free coordinates, in field order.
    coordinates: Vec<String>,
    precision: Vec<Vec<f64>>,
    covariance: Vec<Vec<f64>>,
    min_pivot: f64,
    samples: Vec<Vec<f64>>,
}

/// Lattice table, or field draws in CSV mode when `--draws` is positive.
pub fn dgff(ctx: &Context, args: &DgffArgs) -> CliResult<Vec<u8>> {
    let top = top_row(&args.top)?;
    let n = top.len();
    let lattice = build_lattice(&top);
    let labels: Vec<String> = TriangularArray::labels(n);
    let free = n * (n - 1) / 2;
    let (precision, covariance, min_pivot, samples) = if n > 1 {
        let field = build_precision(&lattice)
            .map_err(|e| CliError::from_core("--top (lattice precision)", e))?;
        let cov = field
            .covariance()
            .map_err(|e| CliError::from_core("--top", e))?;
        let samples = if args.draws > 0 {
            sample_fields(&field, args.draws, ctx.require_seed("dgff --draws")?)
        } else {
            Vec::new()
        };
        (field.precision().to_vec(), cov, field.min_pivot(), samples)
    } else {
        if args.draws > 0 {
            ctx.require_seed("dgff --draws")?;
        }
        (
            Vec::new(),
            Vec::new(),
            f64::INFINITY,
            vec![Vec::new(); args.draws],
        )
    };
    match ctx.format {
        Format::Json => to_json(&DgffOutput {
            schema_version: SCHEMA_VERSION,
            command: "dgff",
            top: top.values(),
            lattice: &lattice,
            coordinates: labels[..free].to_vec(),
            precision,
            covariance,
            min_pivot,
            samples,
        }),
        Format::Csv if args.draws > 0 => {
            let mut t = CsvTable::new(&labels[..free])?;
            for s in &samples {
                t.numeric_row(s)?;
            }
            t.into_bytes()
        }
        Format::Csv => {
            let mut t = CsvTable::new(&["coordinate", "i", "k", "lattice", "variance"])?;
            let mut idx = 0;
            for k in 1..=n {
                for (i, &x) in lattice.level(k).iter().enumerate() {
                    let var = if k < n {
                        format_f64(covariance[idx][idx])
                    } else {
                        String::new()
                    };
                    t.row(&[
                        labels[idx].clone(),
                        (i + 1).to_string(),
                        k.to_string(),
                        format_f64(x),
                        var,
                    ])?;
                    idx += 1;
                }
            }
            t.into_bytes()
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    all_pass: bool,
    criteria: &'a [acceptance::CriterionReport],
}

/// Runs the selected criteria; progress lines go to stderr. Returns the
/// report bytes and the number of failures.
pub fn verify(ctx: &Context, args: &VerifyArgs) -> CliResult<(Vec<u8>, usize)> {
    let seed = ctx.seed.unwrap_or(acceptance::DEFAULT_SEED);
    let selected = acceptance::select(args.filter.as_deref());
    if selected.is_empty() {
        return Err(CliError::input(
            "--filter",
            format!(
                "'{}' matches no criterion",
                args.filter.as_deref().unwrap_or_default()
            ),
        ));
    }
    let mut reports = Vec::with_capacity(selected.len());
    for c in selected {
        let r = acceptance::run_criterion(c, seed);
        emit_stderr(format!("{}\n", r.line()).as_bytes());
        reports.push(r);
    }
    let failures = reports.iter().filter(|r| !r.pass).count();
    let bytes = match ctx.format {
        Format::Json => to_json(&VerifyOutput {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            seed,
            all_pass: failures == 0,
            criteria: &reports,
        })?,
        Format::Csv => {
            let mut t = CsvTable::new(&["id", "key", "pass", "seconds", "detail"])?;
            for r in &reports {
                t.row(&[
                    r.id.to_string(),
                    r.key.to_string(),
                    r.pass.to_string(),
                    format_f64(r.seconds),
                    r.detail.clone(),
                ])?;
            }
            t.into_bytes()?
        }
    };
    Ok((bytes, failures))
}

pub fn write(path: &Option<std::path::PathBuf>, bytes: &[u8]) -> CliResult<()> {
    emit(path_arg(path), bytes)
}
