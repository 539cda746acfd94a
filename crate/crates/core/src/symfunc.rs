//! Partitions, monomial and elementary symmetric expansions, and Jack
//! polynomials in the monomial basis.
//!
//! Jack polynomials are parametrized by `θ`; the classical parameter is
//! `α = 1/θ`. They are computed in the normalization where the coefficient of
//! `m_λ` is 1, as the eigenfunctions of
//! `D = (α/2) Σ x_i² ∂_i² + Σ_{i≠j} x_i² / (x_i − x_j) ∂_i`,
//! which acts triangularly on monomials in dominance order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corners::TriangularArray;
use crate::error::{Error, Result};
use crate::poly::Spectrum;
use crate::stats::RunningStats;

/// Size limits of the Jack engine.
pub const MAX_JACK_SIZE: usize = 10;
pub const MAX_JACK_VARS: usize = 8;
/// Relative size below which an eigenvalue gap counts as a resonance.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Weakly decreasing positive parts; trailing zeros are dropped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Partition(format!(
                "{parts:?} is not weakly decreasing"
            )));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Self(parts))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn length(&self) -> usize {
        self.0.len()
    }

    pub fn part(&self, i: usize) -> usize {
        self.0.get(i).copied().unwrap_or(0)
    }

    /// Transposed diagram.
    pub fn conjugate(&self) -> Self {
        let first = self.part(0);
        Self(
            (1..=first)
                .map(|j| self.0.iter().filter(|&&p| p >= j).count())
                .collect(),
        )
    }

    /// `self ≥ other` in dominance order (same size assumed).
    pub fn dominates(&self, other: &Self) -> bool {
        let len = self.length().max(other.length());
        let (mut a, mut b) = (0, 0);
        for i in 0..len {
            a += self.part(i);
            b += other.part(i);
            if a < b {
                return false;
            }
        }
        true
    }

    /// Partitions of `n` with at most `max_len` parts, in decreasing
    /// lexicographic order (a linear extension of dominance).
    pub fn all_of(n: usize, max_len: usize) -> Vec<Self> {
        fn rec(
            rem: usize,
            max_part: usize,
            slots: usize,
            cur: &mut Vec<usize>,
            out: &mut Vec<Partition>,
        ) {
            if rem == 0 {
                out.push(Partition(cur.clone()));
                return;
            }
            if slots == 0 {
                return;
            }
            for p in (1..=max_part.min(rem)).rev() {
                cur.push(p);
                rec(rem - p, p, slots - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, n, max_len, &mut Vec::new(), &mut out);
        out
    }

    /// Parts padded with zeros to length `n`.
    fn padded(&self, n: usize) -> Vec<usize> {
        let mut v = self.0.clone();
        v.resize(n, 0);
        v
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `m_μ`
    Monomial,
    /// `e_μ = Π_i e_{μ_i}`
    Elementary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymFnExpansion {
    pub basis: Basis,
    pub terms: BTreeMap<Partition, f64>,
}

impl SymFnExpansion {
    pub fn single(basis: Basis, p: Partition) -> Self {
        Self {
            basis,
            terms: BTreeMap::from([(p, 1.0)]),
        }
    }

    pub fn coefficient(&self, p: &Partition) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Same function in the monomial basis.
    pub fn to_monomial(&self) -> Self {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::Elementary => {
                let mut terms = BTreeMap::new();
                for (mu, &c) in &self.terms {
                    for nu in Partition::all_of(mu.size(), mu.size().max(1)) {
                        let count = elementary_in_monomial(mu, &nu);
                        if count != 0 {
                            *terms.entry(nu).or_insert(0.0) += c * count as f64;
                        }
                    }
                }
                Self {
                    basis: Basis::Monomial,
                    terms,
                }
            }
        }
    }
}

/// Coefficient of `m_ν` in `e_μ`: the number of 0/1 matrices with row sums
/// `μ` and column sums `ν`.
fn elementary_in_monomial(mu: &Partition, nu: &Partition) -> u64 {
    fn rec(rows: &[usize], cols: &mut [usize]) -> u64 {
        let Some((&r, rest)) = rows.split_first() else {
            return u64::from(cols.iter().all(|&c| c == 0));
        };
        // choose r distinct columns with remaining capacity
        fn choose(start: usize, left: usize, rest: &[usize], cols: &mut [usize]) -> u64 {
            if left == 0 {
                return rec(rest, cols);
            }
            let mut total = 0;
            for c in start..cols.len() {
                if cols[c] > 0 {
                    cols[c] -= 1;
                    total += choose(c + 1, left - 1, rest, cols);
                    cols[c] += 1;
                }
            }
            total
        }
        choose(0, r, rest, cols)
    }
    if mu.size() != nu.size() {
        return 0;
    }
    let mut cols = nu.parts().to_vec();
    rec(mu.parts(), &mut cols)
}

/// `m_ν(x)` by enumerating the distinct rearrangements of `ν`; zero when
/// `ν` has more parts than `x` has entries.
pub fn monomial_symmetric(nu: &Partition, x: &[f64]) -> f64 {
    let n = x.len();
    if nu.length() > n {
        return 0.0;
    }
    let mut exps = nu.padded(n);
    exps.sort_unstable();
    let mut total = 0.0;
    loop {
        total += x
            .iter()
            .zip(&exps)
            .map(|(&xi, &e)| xi.powi(e as i32))
            .product::<f64>();
        if !next_permutation(&mut exps) {
            break;
        }
    }
    total
}

/// Lexicographic successor; `false` once the sequence is non-increasing.
fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub fn evaluate(exp: &SymFnExpansion, point: &[f64]) -> f64 {
    match exp.basis {
        Basis::Monomial => exp
            .terms
            .iter()
            .map(|(nu, &c)| c * monomial_symmetric(nu, point))
            .sum(),
        Basis::Elementary => {
            let s = Spectrum::from_slice(point).ok();
            let e = s.map(|s| s.elementary_all()).unwrap_or_default();
            let e_at = |r: usize| e.get(r).copied().unwrap_or(0.0);
            exp.terms
                .iter()
                .map(|(mu, &c)| c * mu.parts().iter().map(|&r| e_at(r)).product::<f64>())
                .sum()
        }
    }
}

/// `(t)_{λ;θ} = Π_{(i,j) ∈ λ} (t + (j − 1) − θ(i − 1))`.
pub fn gen_pochhammer(t: f64, lam: &Partition, theta: f64) -> f64 {
    lam.parts()
        .iter()
        .enumerate()
        .flat_map(|(i, &row)| (0..row).map(move |j| t + j as f64 - theta * i as f64))
        .product()
}

/// Eigenvalue of the operator on `m_μ` in `n` variables.
fn diagonal_eigenvalue(mu: &[usize], alpha: f64) -> f64 {
    let n = mu.len();
    mu.iter()
        .enumerate()
        .map(|(i, &m)| {
            let m = m as f64;
            0.5 * alpha * m * (m - 1.0) + (n - 1 - i) as f64 * m
        })
        .sum()
}

/// Off-diagonal column of the operator: the coefficients of `m_μ` (for
/// `μ > ν`) contributing to `m_ν`. A pair of exponent slots `(q, p)` with
/// `q < ν_i, ν_j < p` and `p + q = ν_i + ν_j` feeds `m_ν` with weight `p − q`.
fn raising_terms(nu: &[usize]) -> BTreeMap<Partition, f64> {
    let n = nu.len();
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let total = nu[i] + nu[j];
            for p in nu[i].max(nu[j]) + 1..=total {
                let q = total - p;
                let mut a = nu.to_vec();
                a[i] = p;
                a[j] = q;
                a.sort_unstable_by(|x, y| y.cmp(x));
                let mu = Partition::new(a).unwrap();
                *out.entry(mu).or_insert(0.0) += (p - q) as f64;
            }
        }
    }
    out
}

/// Jack polynomial `P_λ(·; θ)` in `n_vars` variables, expanded in monomials.
pub fn jack_in_monomials(lam: &Partition, theta: f64, n_vars: usize) -> Result<SymFnExpansion> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::NonPositive {
            what: "theta",
            value: theta,
        });
    }
    if lam.size() > MAX_JACK_SIZE {
        return Err(Error::Partition(format!(
            "|{lam}| = {} exceeds {MAX_JACK_SIZE}",
            lam.size()
        )));
    }
    if n_vars > MAX_JACK_VARS || lam.length() > n_vars {
        return Err(Error::Partition(format!(
            "{lam} in {n_vars} variables (at most {MAX_JACK_VARS} variables, and no more parts than variables)"
        )));
    }
    let alpha = 1.0 / theta;
    let target = diagonal_eigenvalue(&lam.padded(n_vars), alpha);
    let basis: Vec<Partition> = Partition::all_of(lam.size(), n_vars)
        .into_iter()
        .filter(|nu| lam.dominates(nu))
        .collect();
    let mut coeffs: BTreeMap<Partition, f64> = BTreeMap::new();
    for nu in &basis {
        if nu == lam {
            coeffs.insert(nu.clone(), 1.0);
            continue;
        }
        let padded = nu.padded(n_vars);
        let rhs: f64 = raising_terms(&padded)
            .iter()
            .map(|(mu, &w)| w * coeffs.get(mu).copied().unwrap_or(0.0))
            .sum();
        let pivot = target - diagonal_eigenvalue(&padded, alpha);
        if pivot.abs() < RESONANCE_TOL * target.abs().max(1.0) {
            return Err(Error::Resonance(pivot));
        }
        coeffs.insert(nu.clone(), rhs / pivot);
    }
    Ok(SymFnExpansion {
        basis: Basis::Monomial,
        terms: coeffs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub mc_mean: f64,
    pub std_error: f64,
    pub expected: f64,
    pub z_score: f64,
    pub draws: u64,
}

impl ExpectationReport {
    fn new(stats: RunningStats, expected: f64) -> Self {
        let s = stats.summary();
        let floor = 1e-12 * expected.abs().max(1e-300);
        Self {
            mc_mean: s.mean,
            std_error: s.std_error,
            expected,
            z_score: s.z_score(expected, floor),
            draws: s.count,
        }
    }
}

/// Monte Carlo check of `E P_λ(level k) = P_λ(a) (kθ)_λ / (Nθ)_λ`, `θ = β/2`,
/// over draws of arrays with top row `a`.
pub fn verify_projection_expectation(
    a: &Spectrum,
    k: usize,
    lam: &Partition,
    beta: f64,
    draws: &[TriangularArray],
) -> Result<ExpectationReport> {
    let n = a.len();
    if k < 1 || k > n || lam.length() > k {
        return Err(Error::OutOfRange {
            what: "projection level k",
            value: k,
            min: lam.length().max(1),
            max: n,
        });
    }
    let theta = beta / 2.0;
    let jack = jack_in_monomials(lam, theta, n)?;
    let expected = evaluate(&jack, a.values()) * gen_pochhammer(k as f64 * theta, lam, theta)
        / gen_pochhammer(n as f64 * theta, lam, theta);
    let stats: RunningStats = draws.iter().map(|d| evaluate(&jack, d.level(k))).collect();
    Ok(ExpectationReport::new(stats, expected))
}

/// Monte Carlo check of `E P_λ(a ⊠ b) = P_λ(a) P_λ(b) / P_λ(1, …, 1)`.
pub fn verify_product_expectation(
    a: &Spectrum,
    b: &Spectrum,
    lam: &Partition,
    beta: f64,
    draws: &[Spectrum],
) -> Result<ExpectationReport> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: b.len(),
        });
    }
    for s in [a, b] {
        if let Some(v) = s.first_non_positive() {
            return Err(Error::NonPositive {
                what: "spectrum entry",
                value: v,
            });
        }
    }
    let jack = jack_in_monomials(lam, beta / 2.0, n)?;
    let ones = vec![1.0; n];
    let expected =
        evaluate(&jack, a.values()) * evaluate(&jack, b.values()) / evaluate(&jack, &ones);
    let stats: RunningStats = draws.iter().map(|d| evaluate(&jack, d.values())).collect();
    Ok(ExpectationReport::new(stats, expected))
}
