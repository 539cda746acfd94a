//! The acceptance suite: eleven numbered criteria, each a self-contained
//! experiment with a fixed tolerance. Shared by `finfree verify` and the
//! `acceptance` test target.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;
use statrs::function::erf::erf;

use finfree_core::corners::{dixon_anderson_check, CornersSampler, McConfig, TriangularArray};
use finfree_core::finfree::{
    additive_convolution, additive_expected_elementary, mob_identity_check,
    multiplicative_convolution, multiplicative_expected_elementary, permutation_oracle,
    projection_expected_elementary, Op,
};
use finfree_core::infinity::{
    build_lattice, build_precision, hermite_roots, linear_term_cancellation_check,
    schur_elimination_check, stationarity_residual,
};
use finfree_core::matrix::{sample_operation, MatrixBeta, MatrixOp};
use finfree_core::numeric::max_relative_deviation;
use finfree_core::rng::{hash_key, stream, StreamRng};
use finfree_core::stats::{covariance, MeanEstimate, RunningStats};
use finfree_core::symfunc::{
    jack_in_monomials, verify_product_expectation, verify_projection_expectation, Basis, Partition,
    SymFnExpansion,
};
use finfree_core::Spectrum;

use crate::commands::{crystallize_table, ladder_seed, rescaled_fluctuations};

/// Base seed when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 1;

/// Monte Carlo agreement threshold in standard errors.
pub const Z_LIMIT: f64 = 3.0;

/// Sweeps per level used where the suite's runtime budget rules out the
/// sampler default. Each level starts from an exact conditional draw, so the
/// emitted law does not depend on this count.
pub const REDUCED_SWEEPS: usize = 20;
pub const REDUCED_BURN_IN: usize = 10;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub key: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub seconds: f64,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionReport {
    /// One human-readable status line.
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<24} {:>8.1}s  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.key,
            self.seconds,
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: u32,
    pub key: &'static str,
    pub title: &'static str,
    run: fn(u64) -> Outcome,
}

impl std::fmt::Debug for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Criterion({} {})", self.id, self.key)
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        key: "beta-independence",
        title: "Monte Carlo e_l means of ⊞, ⊠ and corners match the closed forms",
        run: beta_independence,
    },
    Criterion {
        id: 2,
        key: "oracle-equivalence",
        title: "Closed-form ⊞/⊠ coefficients match the permutation average",
        run: oracle_equivalence,
    },
    Criterion {
        id: 3,
        key: "product-sum-identity",
        title: "Multiplicative permutation sum equals the additive one at y = 0",
        run: product_sum_identity,
    },
    Criterion {
        id: 4,
        key: "real-rootedness",
        title: "Sturm check on ⊞ and ⊠ outputs",
        run: real_rootedness,
    },
    Criterion {
        id: 5,
        key: "dixon-anderson",
        title: "Dixon-Anderson integral by quadrature vs closed form",
        run: dixon_anderson,
    },
    Criterion {
        id: 6,
        key: "crystallization-lln",
        title: "Sample means approach the lattice at rate β^(-1/2)",
        run: crystallization_lln,
    },
    Criterion {
        id: 7,
        key: "crystallization-clt",
        title: "Rescaled fluctuations match the Gaussian field covariance",
        run: crystallization_clt,
    },
    Criterion {
        id: 8,
        key: "positive-definiteness",
        title: "Field precision admits a Cholesky factor",
        run: positive_definiteness,
    },
    Criterion {
        id: 9,
        key: "proof-machinery",
        title: "Stationarity, linear-term cancellation and Schur elimination",
        run: proof_machinery,
    },
    Criterion {
        id: 10,
        key: "jack-identities",
        title: "Jack expectation identities and θ limits",
        run: jack_identities,
    },
    Criterion {
        id: 11,
        key: "hermite-forward-shift",
        title: "Lattice of Hermite-10 roots consists of lower Hermite roots",
        run: hermite_forward_shift,
    },
];

/// Criteria matching `filter`: its number, or a case-insensitive substring
/// of the key or title. `None` selects all.
pub fn select(filter: Option<&str>) -> Vec<&'static Criterion> {
    let Some(f) = filter.map(str::trim).filter(|f| !f.is_empty()) else {
        return CRITERIA.iter().collect();
    };
    if let Ok(id) = f.parse::<u32>() {
        return CRITERIA.iter().filter(|c| c.id == id).collect();
    }
    let needle = f.to_lowercase();
    CRITERIA
        .iter()
        .filter(|c| c.key.contains(&needle) || c.title.to_lowercase().contains(&needle))
        .collect()
}

pub fn run_criterion(c: &Criterion, seed: u64) -> CriterionReport {
    let start = Instant::now();
    let outcome = (c.run)(hash_key(&[seed, u64::from(c.id)]));
    CriterionReport {
        id: c.id,
        key: c.key,
        title: c.title,
        pass: outcome.pass,
        seconds: start.elapsed().as_secs_f64(),
        detail: outcome.detail,
        metrics: outcome.metrics,
    }
}

fn case_rng(seed: u64, case: usize) -> StreamRng {
    stream(seed, &[0x6361_7365, case as u64])
}

/// `n` distinct integers from `lo..=hi`, as a spectrum.
fn distinct_integers(rng: &mut StreamRng, n: usize, lo: i64, hi: i64) -> Spectrum {
    let span = (hi - lo + 1) as usize;
    let values = sample_indices(rng, span, n)
        .into_iter()
        .map(|i| (lo + i as i64) as f64)
        .collect();
    Spectrum::new(values).expect("finite values")
}

fn uniform_spectrum(rng: &mut StreamRng, n: usize, lo: f64, hi: f64) -> Spectrum {
    Spectrum::new((0..n).map(|_| rng.random_range(lo..hi)).collect()).expect("finite values")
}

/// Tallies z-scores of Monte Carlo means against exact values.
#[derive(Debug, Default)]
struct ZTally {
    count: usize,
    exceed: usize,
    max_abs: f64,
}

impl ZTally {
    fn push(&mut self, est: &MeanEstimate, expected: f64) {
        // Quantities that are constant in law still carry rounding noise.
        let floor = 1e-9 * expected.abs().max(1.0);
        let z = est.z_score(expected, floor).abs();
        self.count += 1;
        self.max_abs = self.max_abs.max(z);
        if !(z < Z_LIMIT) {
            self.exceed += 1;
        }
    }
}

/// Means of e_1..e_N over spectra.
fn spectrum_elementary_means(draws: &[Spectrum]) -> Vec<MeanEstimate> {
    let n = draws.first().map_or(0, Spectrum::len);
    let mut acc = vec![RunningStats::new(); n];
    for d in draws {
        let e = d.elementary_all();
        for (l, s) in acc.iter_mut().enumerate() {
            s.push(e[l + 1]);
        }
    }
    acc.iter().map(RunningStats::summary).collect()
}

fn beta_independence(seed: u64) -> Outcome {
    const CASES: usize = 50;
    const DRAWS: usize = 10_000;
    const CORNER_BETAS: [f64; 4] = [0.5, 1.0, 2.0, 8.0];
    let start = Instant::now();
    let mut tally = ZTally::default();
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(2..=5);
        let a = distinct_integers(&mut rng, n, -6, 6);
        let b = distinct_integers(&mut rng, n, -6, 6);
        let ap = distinct_integers(&mut rng, n, 1, 9);
        let bp = distinct_integers(&mut rng, n, 1, 9);
        let add_exact = additive_expected_elementary(&a, &b).unwrap();
        let mul_exact = multiplicative_expected_elementary(&ap, &bp).unwrap();
        for beta in [MatrixBeta::Real, MatrixBeta::Complex] {
            let tag = beta.value().to_bits();
            for (op, base, exact, op_tag) in [
                (MatrixOp::Add(b.clone()), &a, &add_exact, 0u64),
                (MatrixOp::Mul(bp.clone()), &ap, &mul_exact, 1u64),
            ] {
                let s = hash_key(&[seed, case as u64, op_tag, tag]);
                let draws = sample_operation(base, &op, beta, DRAWS, s).unwrap();
                for (l, est) in spectrum_elementary_means(&draws).iter().enumerate() {
                    tally.push(est, exact[l + 1]);
                }
            }
        }
        for &beta in &CORNER_BETAS {
            let cfg = McConfig {
                seed: hash_key(&[seed, case as u64, 2, beta.to_bits()]),
                sweeps: REDUCED_SWEEPS,
                burn_in: REDUCED_BURN_IN,
                ..McConfig::default()
            };
            let draws = CornersSampler::new(&a, beta, cfg).unwrap().draws(DRAWS);
            let means = finfree_core::corners::elementary_means(&draws);
            for k in 1..n {
                let exact = projection_expected_elementary(&a, k).unwrap();
                for l in 1..=k {
                    tally.push(&means[k - 1][l - 1], exact[l]);
                }
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let expected_by_chance = tally.count as f64 * 2.0 * (1.0 - normal_cdf(Z_LIMIT));
    Outcome {
        pass: tally.exceed == 0 && seconds <= 120.0,
        detail: format!(
            "{} of {} comparisons beyond {Z_LIMIT} SE (about {expected_by_chance:.1} expected by chance), max |z| = {:.2}, {seconds:.0}s of 120s",
            tally.exceed, tally.count, tally.max_abs
        ),
        ..Default::default()
    }
    .metric("comparisons", tally.count as f64)
    .metric("exceedances", tally.exceed as f64)
    .metric("expected_exceedances", expected_by_chance)
    .metric("max_abs_z", tally.max_abs)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn oracle_equivalence(seed: u64) -> Outcome {
    const CASES: usize = 200;
    const TOL: f64 = 1e-10;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(1..=7);
        let a = uniform_spectrum(&mut rng, n, -5.0, 5.0);
        let b = uniform_spectrum(&mut rng, n, -5.0, 5.0);
        let ap = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let bp = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let add = additive_convolution(&a, &b).unwrap();
        let add_oracle = permutation_oracle(&a, &b, Op::Add).unwrap();
        let mul = multiplicative_convolution(&ap, &bp, false).unwrap();
        let mul_oracle = permutation_oracle(&ap, &bp, Op::Mul).unwrap();
        for (x, y) in [(&add, &add_oracle), (&mul, &mul_oracle)] {
            let dev = max_relative_deviation(x.poly.coeffs(), y.poly.coeffs(), 1.0);
            worst = worst.max(dev);
            if !(dev <= TOL) {
                failures += 1;
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures == 0 && seconds <= 30.0,
        detail: format!(
            "{failures} of {} pairs beyond {TOL:e}, worst {worst:.2e}, {seconds:.1}s of 30s",
            2 * CASES
        ),
        ..Default::default()
    }
    .metric("worst_rel_deviation", worst)
    .metric("failures", failures as f64)
}

fn product_sum_identity(seed: u64) -> Outcome {
    const CASES: usize = 100;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(1..=6);
        let a = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let b = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let r = mob_identity_check(&a, &b).unwrap();
        worst = worst.max(r.max_rel_deviation);
        if !r.pass {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{failures} of {CASES} pairs failed, worst deviation {worst:.2e}"),
        ..Default::default()
    }
    .metric("worst_rel_deviation", worst)
}

fn real_rootedness(seed: u64) -> Outcome {
    const CASES: usize = 500;
    let mut failures = 0;
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(1..=8);
        let a = uniform_spectrum(&mut rng, n, -5.0, 5.0);
        let b = uniform_spectrum(&mut rng, n, -5.0, 5.0);
        let ap = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let bp = uniform_spectrum(&mut rng, n, 0.1, 5.0);
        let add = additive_convolution(&a, &b).unwrap();
        let mul = multiplicative_convolution(&ap, &bp, false).unwrap();
        failures +=
            usize::from(!add.poly.is_real_rooted()) + usize::from(!mul.poly.is_real_rooted());
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{failures} of {} polynomials failed the Sturm check",
            2 * CASES
        ),
        ..Default::default()
    }
    .metric("failures", failures as f64)
}

fn dixon_anderson(seed: u64) -> Outcome {
    const CASES: usize = 10;
    let mut worst = [0.0f64; 2];
    let mut failures = 0;
    for (slot, (n, tol)) in [(1usize, 1e-8), (2, 1e-7)].into_iter().enumerate() {
        for case in 0..CASES {
            let mut rng = case_rng(seed, 100 * n + case);
            let mut nodes: Vec<f64> = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
            nodes.sort_by(f64::total_cmp);
            let alphas: Vec<f64> = (0..=n).map(|_| rng.random_range(0.5..3.0)).collect();
            let pole = match case % 3 {
                0 => f64::INFINITY,
                1 => nodes[n] + rng.random_range(0.1..3.0),
                _ => nodes[0] - rng.random_range(0.1..3.0),
            };
            let rel = match dixon_anderson_check(&nodes, &alphas, pole) {
                Ok(r) => r.rel_error,
                Err(_) => f64::INFINITY,
            };
            worst[slot] = worst[slot].max(rel);
            if !(rel < tol) {
                failures += 1;
            }
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{failures} of {} failed; worst rel. error {:.2e} (n=1), {:.2e} (n=2)",
            2 * CASES,
            worst[0],
            worst[1]
        ),
        ..Default::default()
    }
    .metric("worst_rel_error_n1", worst[0])
    .metric("worst_rel_error_n2", worst[1])
}

fn crystallization_lln(seed: u64) -> Outcome {
    const BETAS: [f64; 3] = [1e2, 1e3, 1e4];
    const DRAWS: usize = 10_000;
    let start = Instant::now();
    let top = Spectrum::from_slice(&[0.0, 1.0, 3.0, 6.0]).unwrap();
    let table =
        crystallize_table(&top, &BETAS, DRAWS, McConfig::with_seed(seed)).expect("valid top row");
    let seconds = start.elapsed().as_secs_f64();
    let slope = table.slope.unwrap_or(f64::NAN);
    let devs: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.2e}", r.max_deviation))
        .collect();
    let mut out = Outcome {
        pass: (slope + 0.5).abs() <= 0.1 && seconds <= 300.0,
        detail: format!(
            "slope {slope:.3} (target -0.5 ± 0.1); max deviations {}; {seconds:.0}s of 300s",
            devs.join(", ")
        ),
        ..Default::default()
    }
    .metric("slope", slope);
    for r in &table.rows {
        out = out.metric(&format!("max_deviation_beta_{}", r.beta), r.max_deviation);
    }
    out
}

fn crystallization_clt(seed: u64) -> Outcome {
    const BETA: f64 = 1e4;
    const DRAWS: usize = 10_000;
    let sample = |top: &[f64]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let top = Spectrum::from_slice(top).unwrap();
        let lattice = build_lattice(&top);
        let cfg = McConfig::with_seed(ladder_seed(seed, BETA + top.len() as f64));
        let draws: Vec<TriangularArray> =
            CornersSampler::new(&top, BETA, cfg).unwrap().draws(DRAWS);
        let cov = covariance(&rescaled_fluctuations(&draws, &lattice, BETA));
        let reference = build_precision(&lattice).unwrap().covariance().unwrap();
        (cov, reference)
    };
    let (cov2, _) = sample(&[0.0, 1.0]);
    let var2 = cov2[0][0];
    let beta_law = BETA / (4.0 * (BETA + 1.0));
    let rel2 = (var2 - beta_law).abs() / beta_law;
    let pass2 = rel2 <= 0.05;

    let (cov3, reference3) = sample(&[0.0, 1.0, 3.0]);
    let mut worst_ratio: f64 = 0.0;
    for (row, ref_row) in cov3.iter().zip(&reference3) {
        for (&c, &r) in row.iter().zip(ref_row) {
            let allowed = (0.1 * r.abs()).max(0.01);
            worst_ratio = worst_ratio.max((c - r).abs() / allowed);
        }
    }
    let pass3 = worst_ratio <= 1.0;
    Outcome {
        pass: pass2 && pass3,
        detail: format!(
            "N=2 variance {var2:.4} vs {beta_law:.4} ({:.1}% off, limit 5%); N=3 worst entry at {:.2} of its tolerance",
            100.0 * rel2,
            worst_ratio
        ),
        ..Default::default()
    }
    .metric("n2_variance", var2)
    .metric("n2_rel_error", rel2)
    .metric("n3_worst_tolerance_fraction", worst_ratio)
}

fn random_top(rng: &mut StreamRng, n: usize) -> Spectrum {
    loop {
        let s = uniform_spectrum(rng, n, -10.0, 10.0);
        if finfree_core::corners::check_top(&s).is_ok() {
            return s;
        }
    }
}

fn positive_definiteness(seed: u64) -> Outcome {
    const CASES: usize = 500;
    let mut failures = 0;
    let mut smallest_pivot = f64::INFINITY;
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(2..=10);
        let top = random_top(&mut rng, n);
        match build_precision(&build_lattice(&top)) {
            Ok(f) => smallest_pivot = smallest_pivot.min(f.min_pivot()),
            Err(_) => failures += 1,
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{failures} of {CASES} Cholesky failures; smallest pivot {smallest_pivot:.3e}"
        ),
        ..Default::default()
    }
    .metric("failures", failures as f64)
    .metric("smallest_pivot", smallest_pivot)
}

fn proof_machinery(seed: u64) -> Outcome {
    const CASES: usize = 100;
    let (mut stat, mut lin, mut schur) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..CASES {
        let mut rng = case_rng(seed, case);
        let n = rng.random_range(2..=8);
        let lat = build_lattice(&random_top(&mut rng, n));
        stat = stat.max(stationarity_residual(&lat).unwrap_or(f64::INFINITY));
        lin = lin.max(linear_term_cancellation_check(&lat).unwrap_or(f64::INFINITY));
        for k in 2..=n {
            let r = schur_elimination_check(&lat, k).map_or(f64::INFINITY, |r| r.rel_error);
            schur = schur.max(r);
        }
    }
    Outcome {
        pass: stat < 1e-8 && lin < 1e-8 && schur < 1e-9,
        detail: format!("stationarity {stat:.2e} (<1e-8), linear term {lin:.2e} (<1e-8), Schur {schur:.2e} (<1e-9)"),
        ..Default::default()
    }
    .metric("stationarity", stat)
    .metric("linear_term", lin)
    .metric("schur", schur)
}

fn jack_identities(seed: u64) -> Outcome {
    const DRAWS: usize = 100_000;
    let partitions: Vec<Partition> = [&[1][..], &[2], &[1, 1], &[2, 1]]
        .iter()
        .map(|p| Partition::new(p.to_vec()).unwrap())
        .collect();
    let a = Spectrum::from_slice(&[1.0, 2.0, 4.0]).unwrap();
    let b = Spectrum::from_slice(&[1.0, 3.0, 5.0]).unwrap();
    let mut tally = ZTally::default();
    let mut worst = String::new();
    for beta in [1.0, 2.0] {
        let mb = MatrixBeta::from_beta(beta).unwrap();
        let products = sample_operation(
            &a,
            &MatrixOp::Mul(b.clone()),
            mb,
            DRAWS,
            hash_key(&[seed, 0, beta.to_bits()]),
        )
        .unwrap();
        let corners = CornersSampler::new(
            &a,
            beta,
            McConfig::with_seed(hash_key(&[seed, 1, beta.to_bits()])),
        )
        .unwrap()
        .draws(DRAWS);
        for lam in &partitions {
            let mut reports = vec![(
                "product",
                3,
                verify_product_expectation(&a, &b, lam, beta, &products).unwrap(),
            )];
            for k in lam.length()..3 {
                reports.push((
                    "projection",
                    k,
                    verify_projection_expectation(&a, k, lam, beta, &corners).unwrap(),
                ));
            }
            for (kind, k, r) in reports {
                let before = tally.max_abs;
                tally.count += 1;
                tally.max_abs = tally.max_abs.max(r.z_score.abs());
                if !(r.z_score.abs() < Z_LIMIT) {
                    tally.exceed += 1;
                }
                if tally.max_abs > before {
                    worst = format!("{kind} {lam} k={k} β={beta}");
                }
            }
        }
    }
    let mut limit_gap: f64 = 0.0;
    for lam in &partitions {
        let big = 1e4;
        let small = 1e-4;
        let e = SymFnExpansion::single(Basis::Elementary, lam.conjugate()).to_monomial();
        let m = SymFnExpansion::single(Basis::Monomial, lam.clone());
        for (theta, target, tol) in [(big, &e, 10.0 / big), (small, &m, 10.0 * small)] {
            let j = jack_in_monomials(lam, theta, 3).unwrap();
            let gap = j
                .terms
                .keys()
                .chain(target.terms.keys())
                .map(|p| (j.coefficient(p) - target.coefficient(p)).abs())
                .fold(0.0, f64::max);
            limit_gap = limit_gap.max(gap / tol);
        }
    }
    Outcome {
        pass: tally.exceed == 0 && limit_gap <= 1.0,
        detail: format!(
            "{} of {} z-scores beyond {Z_LIMIT} (max |z| {:.2} at {worst}); θ-limit gaps at {limit_gap:.2} of tolerance",
            tally.exceed, tally.count, tally.max_abs
        ),
        ..Default::default()
    }
    .metric("max_abs_z", tally.max_abs)
    .metric("limit_gap_fraction", limit_gap)
}

fn hermite_forward_shift(_seed: u64) -> Outcome {
    let top = Spectrum::new(hermite_roots(10)).unwrap();
    let lat = build_lattice(&top);
    let worst = (1..=10)
        .map(|k| {
            let h = hermite_roots(k);
            lat.level(k)
                .iter()
                .zip(&h)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("max level deviation {worst:.2e} (limit 1e-8)"),
        ..Default::default()
    }
    .metric("max_deviation", worst)
}
