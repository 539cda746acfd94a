//! The β-corners process: interlacing triangular arrays with a prescribed top
//! row, their exact density, and a level-by-level Monte Carlo sampler.
//!
//! Given level `k` with entries `y`, level `k − 1` has density proportional to
//! `Π_{i<j} (x_j − x_i) · Π_{a,b} |x_a − y_b|^{β/2 − 1}` on the product of the
//! gaps `(y_j, y_{j+1})`. The sampler starts each level from an exact draw
//! (the roots of `Σ w_i / (x − y_i)` with Dirichlet(β/2, …, β/2) weights have
//! this law) and then runs Metropolis-within-Gibbs sweeps on it.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ln_gamma;
use crate::poly::{critical_points, Spectrum};
use crate::quadrature::{Node, TanhSinh};
use crate::rng::{stream, StreamRng};
use crate::stats::{MeanEstimate, RunningStats};

/// Minimum relative gap between top-row entries.
pub const TOP_GAP_REL: f64 = 1e-12;
/// Proposals closer than this (relative to the level scale) to an interval
/// endpoint are resampled or rejected.
pub const BOUNDARY_BAND_REL: f64 = 1e-14;

/// Gelfand–Tsetlin pattern; `levels[k - 1]` holds the `k` entries of level `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularArray {
    levels: Vec<Vec<f64>>,
}

impl TriangularArray {
    /// Validates shape, ordering and (weak) interlacing.
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        for (k, level) in levels.iter().enumerate() {
            if level.len() != k + 1 {
                return Err(Error::SizeMismatch {
                    left: level.len(),
                    right: k + 1,
                });
            }
            if level.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("array"));
            }
        }
        let arr = Self { levels };
        if let Some((level, index)) = arr.first_violation(false) {
            return Err(Error::Interlacing { level, index });
        }
        Ok(arr)
    }

    pub(crate) fn from_levels_unchecked(levels: Vec<Vec<f64>>) -> Self {
        Self { levels }
    }

    /// Rank `N`.
    pub fn rank(&self) -> usize {
        self.levels.len()
    }

    /// Level `k` (1-based).
    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn top(&self) -> &[f64] {
        self.levels.last().map_or(&[], Vec::as_slice)
    }

    /// First `(level, index)` where ordering or interlacing fails; `strict`
    /// also rejects equalities.
    fn first_violation(&self, strict: bool) -> Option<(usize, usize)> {
        let bad = |lo: f64, hi: f64| if strict { lo >= hi } else { lo > hi };
        for (k0, level) in self.levels.iter().enumerate() {
            for i in 1..level.len() {
                if bad(level[i - 1], level[i]) {
                    return Some((k0 + 1, i + 1));
                }
            }
            if let Some(upper) = self.levels.get(k0 + 1) {
                for (i, &x) in level.iter().enumerate() {
                    if bad(upper[i], x) || bad(x, upper[i + 1]) {
                        return Some((k0 + 1, i + 1));
                    }
                }
            }
        }
        None
    }

    pub fn is_strictly_interlacing(&self) -> bool {
        self.first_violation(true).is_none()
    }

    /// Level-major flattening, level 1 first, top row last.
    pub fn flatten(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Labels `x_i_k` matching [`flatten`](Self::flatten).
    pub fn labels(rank: usize) -> Vec<String> {
        (1..=rank)
            .flat_map(|k| (1..=k).map(move |i| format!("x_{i}_{k}")))
            .collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            what: "beta",
            value: beta,
        })
    }
}

fn level_scale(y: &[f64]) -> f64 {
    let (first, last) = (y[0], y[y.len() - 1]);
    first.abs().max(last.abs()).max(last - first)
}

/// Rejects top rows whose neighbouring entries are closer than
/// `TOP_GAP_REL` times the scale of the row.
pub fn check_top(top: &Spectrum) -> Result<()> {
    let y = top.values();
    if y.is_empty() {
        return Err(Error::OutOfRange {
            what: "top row length",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let gap = TOP_GAP_REL * level_scale(y);
    for i in 1..y.len() {
        if y[i] - y[i - 1] <= gap {
            return Err(Error::CoincidentTop {
                i,
                j: i + 1,
                value: y[i],
            });
        }
    }
    Ok(())
}

/// `ln Z_N` for the density of the process with this top row.
pub fn log_normalization(top: &[f64], beta: f64) -> f64 {
    let n = top.len();
    let half = beta / 2.0;
    let mut z = 0.0;
    for k in 1..=n {
        z += k as f64 * ln_gamma(half) - ln_gamma(k as f64 * half);
    }
    for j in 0..n {
        for i in 0..j {
            z += (beta - 1.0) * (top[j] - top[i]).ln();
        }
    }
    z
}

/// Log of the joint density of the `N(N−1)/2` free entries, normalized.
///
/// Coincident entries give `−∞` for `β > 2`, an error for `β < 2`, and the
/// constant value of the density at `β = 2`.
pub fn log_density(arr: &TriangularArray, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let n = arr.rank();
    if n <= 1 {
        return Ok(0.0);
    }
    if !arr.is_strictly_interlacing() {
        if beta > 2.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if beta < 2.0 {
            return Err(Error::SingularDensity { beta });
        }
    }
    let mut s = 0.0;
    if beta != 2.0 {
        for k in 1..n {
            let level = arr.level(k);
            let upper = arr.level(k + 1);
            for j in 0..k {
                for i in 0..j {
                    s += (2.0 - beta) * (level[j] - level[i]).ln();
                }
                for &y in upper {
                    s += (beta / 2.0 - 1.0) * (level[j] - y).abs().ln();
                }
            }
        }
    }
    Ok(s - log_normalization(arr.top(), beta))
}

fn check_level_pair(lower: &[f64], upper: &[f64]) -> Result<()> {
    if upper.len() != lower.len() + 1 {
        return Err(Error::SizeMismatch {
            left: lower.len(),
            right: upper.len(),
        });
    }
    let k = upper.len();
    for i in 1..k {
        if upper[i] <= upper[i - 1] {
            return Err(Error::Interlacing {
                level: k,
                index: i + 1,
            });
        }
    }
    for (i, &x) in lower.iter().enumerate() {
        if !(upper[i] < x && x < upper[i + 1]) {
            return Err(Error::Interlacing {
                level: k - 1,
                index: i + 1,
            });
        }
    }
    Ok(())
}

/// Log of the normalized density of level `k − 1` (`lower`) given level `k`.
pub fn log_conditional_density(lower: &[f64], upper: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_level_pair(lower, upper)?;
    let gaps: Vec<f64> = upper.windows(2).map(|w| w[1] - w[0]).collect();
    let offsets: Vec<(f64, f64)> = lower
        .iter()
        .enumerate()
        .map(|(j, &x)| (x - upper[j], upper[j + 1] - x))
        .collect();
    Ok(log_conditional_offsets(&gaps, &offsets, beta))
}

/// Interlacing pair in translation-free form: the consecutive gaps of the
/// upper level, and for each lower entry its distances to the two ends of
/// its interval. All other differences are rebuilt as sums of these
/// positive quantities, which keeps them accurate near coincidences.
struct LevelPair<'a> {
    gaps: &'a [f64],
    offsets: &'a [(f64, f64)],
}

impl LevelPair<'_> {
    /// `y_b − y_a` for `a ≤ b`.
    fn upper_diff(&self, a: usize, b: usize) -> f64 {
        self.gaps[a..b].iter().sum()
    }

    /// `x_j − x_i` for `i < j`.
    fn lower_diff(&self, i: usize, j: usize) -> f64 {
        self.offsets[i].1 + self.upper_diff(i + 1, j) + self.offsets[j].0
    }

    /// `|x_a − y_b|`.
    fn cross_dist(&self, a: usize, b: usize) -> f64 {
        if b <= a {
            self.offsets[a].0 + self.upper_diff(b, a)
        } else {
            self.offsets[a].1 + self.upper_diff(a + 1, b)
        }
    }

    /// `ln [Π_{i<j}(x_j − x_i)^{own} Π_{a,b}|x_a − y_b|^{β/2−1}]`.
    fn log_kernel(&self, beta: f64, own: f64) -> f64 {
        let m = self.offsets.len();
        let mut s = 0.0;
        for j in 0..m {
            if own != 0.0 {
                for i in 0..j {
                    s += own * self.lower_diff(i, j).ln();
                }
            }
            if beta != 2.0 {
                let t: f64 = (0..=m).map(|b| self.cross_dist(j, b).ln()).sum();
                s += (beta / 2.0 - 1.0) * t;
            }
        }
        s
    }

    fn lower_gaps(&self) -> Vec<f64> {
        self.offsets.windows(2).map(|w| w[0].1 + w[1].0).collect()
    }
}

/// [`log_conditional_density`] in the form taken by [`LevelPair`].
pub(crate) fn log_conditional_offsets(gaps: &[f64], offsets: &[(f64, f64)], beta: f64) -> f64 {
    let pair = LevelPair { gaps, offsets };
    let k = gaps.len() + 1;
    let half = beta / 2.0;
    let mut s = ln_gamma(k as f64 * half) - k as f64 * ln_gamma(half);
    for j in 0..k {
        for i in 0..j {
            s -= (beta - 1.0) * pair.upper_diff(i, j).ln();
        }
    }
    s + pair.log_kernel(beta, 1.0)
}

/// Which state each level's Metropolis chain starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// Exact draw from the conditional law (Dirichlet-weighted secular roots).
    #[default]
    Exact,
    /// The conditional mode as `β → ∞`: critical points of the upper level.
    CriticalPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    /// Metropolis sweeps per level and draw.
    pub sweeps: usize,
    /// Leading sweeps counted as warm-up.
    pub burn_in: usize,
    pub chains: usize,
    /// Stride between the RNG counters of consecutive emitted draws.
    pub thinning: usize,
    pub start: StartState,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sweeps: 400,
            burn_in: 200,
            chains: 1,
            thinning: 1,
            start: StartState::Exact,
        }
    }
}

impl McConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::Config(format!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Level-by-level sampler for a fixed top row and β.
#[derive(Debug, Clone)]
pub struct CornersSampler {
    top: Vec<f64>,
    beta: f64,
    cfg: McConfig,
}

impl CornersSampler {
    pub fn new(top: &Spectrum, beta: f64, cfg: McConfig) -> Result<Self> {
        check_beta(beta)?;
        check_top(top)?;
        cfg.validate()?;
        Ok(Self {
            top: top.values().to_vec(),
            beta,
            cfg,
        })
    }

    pub fn rank(&self) -> usize {
        self.top.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    /// Draw `index` of `chain`; a pure function of the seed and these indices.
    pub fn draw(&self, chain: usize, index: usize) -> TriangularArray {
        let n = self.top.len();
        let mut levels = vec![Vec::new(); n];
        levels[n - 1] = self.top.clone();
        let counter = (index * self.cfg.thinning) as u64;
        for k in (2..=n).rev() {
            let mut rng = stream(self.cfg.seed, &[chain as u64, counter, k as u64]);
            levels[k - 2] = self.sample_level(&levels[k - 1], &mut rng);
        }
        let arr = TriangularArray::from_levels_unchecked(levels);
        debug_assert!(arr.is_strictly_interlacing(), "sampler broke interlacing");
        arr
    }

    /// `total` draws split over the chains, ordered by `(chain, draw)`.
    pub fn draws(&self, total: usize) -> Vec<TriangularArray> {
        self.draw_indices(total)
            .into_par_iter()
            .map(|(c, d)| self.draw(c, d))
            .collect()
    }

    /// `(chain, draw)` pairs in output order; chain `c` receives
    /// `total / chains` draws plus one if `c < total % chains`.
    pub fn draw_indices(&self, total: usize) -> Vec<(usize, usize)> {
        let chains = self.cfg.chains;
        (0..chains)
            .flat_map(|c| {
                let count = total / chains + usize::from(c < total % chains);
                (0..count).map(move |d| (c, d))
            })
            .collect()
    }

    fn sample_level(&self, upper: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        let mut level = LevelChain::new(upper, self.beta);
        match self.cfg.start {
            StartState::Exact => level.exact_start(rng),
            StartState::CriticalPoints => level.mode_start(),
        }
        level.tune();
        for _ in 0..self.cfg.sweeps {
            level.sweep(rng);
        }
        level.x
    }
}

/// Convenience wrapper: `draws` arrays from a fresh sampler.
pub fn sample(
    top: &Spectrum,
    beta: f64,
    cfg: McConfig,
    draws: usize,
) -> Result<Vec<TriangularArray>> {
    Ok(CornersSampler::new(top, beta, cfg)?.draws(draws))
}

/// Metropolis-within-Gibbs state for one level given the level above.
struct LevelChain<'a> {
    upper: &'a [f64],
    beta: f64,
    band: f64,
    x: Vec<f64>,
    step: Vec<f64>,
    /// Shape of the symmetric Beta independence proposal.
    shape: f64,
    beta_proposal: Option<Beta<f64>>,
}

impl<'a> LevelChain<'a> {
    fn new(upper: &'a [f64], beta: f64) -> Self {
        let shape = (beta / 2.0).min(1.0);
        let beta_proposal = (shape < 1.0).then(|| Beta::new(shape, shape).unwrap());
        Self {
            upper,
            beta,
            band: BOUNDARY_BAND_REL * level_scale(upper),
            x: Vec::new(),
            step: Vec::new(),
            shape,
            beta_proposal,
        }
    }

    fn clamp_to_band(&self, j: usize, x: f64) -> f64 {
        let (lo, hi) = (self.upper[j], self.upper[j + 1]);
        x.clamp(lo + self.band, hi - self.band)
    }

    fn mode_start(&mut self) {
        self.x = critical_points(self.upper);
        for j in 0..self.x.len() {
            self.x[j] = self.clamp_to_band(j, self.x[j]);
        }
    }

    fn exact_start(&mut self, rng: &mut StreamRng) {
        let gamma = Gamma::new(self.beta / 2.0, 1.0).unwrap();
        let mut w: Vec<f64> = (0..self.upper.len()).map(|_| gamma.sample(rng)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        self.x = (0..self.upper.len() - 1)
            .map(|j| {
                let r = weighted_secular_root(self.upper, &w, j);
                self.clamp_to_band(j, r)
            })
            .collect();
    }

    /// Random-walk scales from the local curvature of the log density.
    fn tune(&mut self) {
        let excess = self.beta / 2.0 - 1.0;
        self.step = (0..self.x.len())
            .map(|j| {
                let x = self.x[j];
                let len = self.upper[j + 1] - self.upper[j];
                let mut c: f64 = self
                    .x
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &w)| (x - w).powi(-2))
                    .sum();
                c += excess * self.upper.iter().map(|&y| (x - y).powi(-2)).sum::<f64>();
                if c > 0.0 {
                    (2.38 / c.sqrt()).min(len / 4.0)
                } else {
                    len / 4.0
                }
            })
            .collect();
    }

    fn sweep(&mut self, rng: &mut StreamRng) {
        for j in 0..self.x.len() {
            self.update(j, rng);
        }
    }

    fn in_band(&self, j: usize, x: f64) -> bool {
        x - self.upper[j] < self.band || self.upper[j + 1] - x < self.band
    }

    fn update(&mut self, j: usize, rng: &mut StreamRng) {
        let (lo, hi) = (self.upper[j], self.upper[j + 1]);
        let len = hi - lo;
        let cur = self.x[j];
        let mut log_ratio = 0.0;
        let prop = if rng.random::<bool>() {
            let mut p;
            loop {
                let u = match &self.beta_proposal {
                    Some(d) => d.sample(rng),
                    None => rng.random::<f64>(),
                };
                p = lo + len * u;
                if p > lo && p < hi && !self.in_band(j, p) {
                    break;
                }
            }
            if self.shape != 1.0 {
                let log_q = |x: f64| (self.shape - 1.0) * ((x - lo) * (hi - x)).ln();
                log_ratio += log_q(cur) - log_q(p);
            }
            p
        } else {
            let z: f64 = rng.sample(StandardNormal);
            let p = cur + self.step[j] * z;
            if p <= lo || p >= hi || self.in_band(j, p) {
                return;
            }
            p
        };
        log_ratio += self.log_target_ratio(j, cur, prop);
        if log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio {
            self.x[j] = prop;
        }
    }

    /// `ln π(new) − ln π(old)` for coordinate `j`, others fixed.
    fn log_target_ratio(&self, j: usize, old: f64, new: f64) -> f64 {
        let mut same = RatioProduct::default();
        for (i, &w) in self.x.iter().enumerate() {
            if i != j {
                same.mul(((new - w) / (old - w)).abs());
            }
        }
        let mut s = same.ln();
        if self.beta != 2.0 {
            let mut cross = RatioProduct::default();
            for &y in self.upper {
                cross.mul(((new - y) / (old - y)).abs());
            }
            s += (self.beta / 2.0 - 1.0) * cross.ln();
        }
        s
    }
}

/// Product of positive ratios, folded into a log before it can overflow.
#[derive(Default)]
struct RatioProduct {
    log: f64,
    prod: Option<f64>,
}

impl RatioProduct {
    fn mul(&mut self, r: f64) {
        let p = self.prod.unwrap_or(1.0) * r;
        if !(1e-100..=1e100).contains(&p) {
            self.log += p.ln();
            self.prod = Some(1.0);
        } else {
            self.prod = Some(p);
        }
    }

    fn ln(&self) -> f64 {
        self.log + self.prod.map_or(0.0, f64::ln)
    }
}

/// Root of `Σ_i w_i / (x − y_i)` in `(y_j, y_{j+1})`, bisected in the offset
/// from the nearer pole so that roots hugging a pole keep relative accuracy.
fn weighted_secular_root(y: &[f64], w: &[f64], j: usize) -> f64 {
    let (lo, hi) = (y[j], y[j + 1]);
    let len = hi - lo;
    // value at lo + u (from_left) or hi - u
    let f = |u: f64, from_left: bool| -> f64 {
        y.iter()
            .zip(w)
            .enumerate()
            .map(|(i, (&yi, &wi))| {
                let d = if from_left {
                    if i == j {
                        u
                    } else {
                        (lo - yi) + u
                    }
                } else if i == j + 1 {
                    -u
                } else {
                    (hi - yi) - u
                };
                wi / d
            })
            .sum()
    };
    let from_left = f(0.5 * len, true) < 0.0;
    // f decreases in x: it is positive next to the left pole and negative
    // next to the right one, so the near-pole sign is known in both frames.
    let (mut a, mut b) = (0.0, 0.5 * len);
    for _ in 0..2100 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= 2.0 * f64::EPSILON * b {
            break;
        }
        let v = f(mid, from_left);
        if (v > 0.0) == from_left {
            a = mid;
        } else {
            b = mid;
        }
    }
    let u = 0.5 * (a + b);
    if from_left {
        lo + u
    } else {
        hi - u
    }
}

/// Per-level means of `e_ℓ`, `ℓ = 1..k`, with standard errors;
/// `result[k − 1][ℓ − 1]` belongs to level `k`.
pub fn elementary_means(draws: &[TriangularArray]) -> Vec<Vec<MeanEstimate>> {
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    let n = first.rank();
    let mut acc: Vec<Vec<RunningStats>> = (1..=n).map(|k| vec![RunningStats::new(); k]).collect();
    for arr in draws {
        for k in 1..=n {
            let e = Spectrum::from_slice(arr.level(k)).unwrap().elementary_all();
            for l in 1..=k {
                acc[k - 1][l - 1].push(e[l]);
            }
        }
    }
    acc.iter()
        .map(|lvl| lvl.iter().map(RunningStats::summary).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub quadrature: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

impl QuadratureReport {
    fn new(quadrature: f64, closed_form: f64) -> Self {
        Self {
            quadrature,
            closed_form,
            rel_error: (quadrature - closed_form).abs() / closed_form.abs(),
        }
    }
}

/// Largest number of integration variables accepted by the quadrature checks.
pub const QUADRATURE_MAX_DIM: usize = 3;

/// Compares the Dixon–Anderson integral over `a_1 < t_1 < a_2 < … < t_n <
/// a_{n+1}` with its Gamma-function closed form. `pole` may be `±∞`, which
/// drops the `|pole − t_i|` factors.
pub fn dixon_anderson_check(nodes: &[f64], alphas: &[f64], pole: f64) -> Result<QuadratureReport> {
    let m = nodes.len();
    if !(2..=QUADRATURE_MAX_DIM + 1).contains(&m) {
        return Err(Error::OutOfRange {
            what: "Dixon-Anderson node count",
            value: m,
            min: 2,
            max: QUADRATURE_MAX_DIM + 1,
        });
    }
    if alphas.len() != m {
        return Err(Error::SizeMismatch {
            left: alphas.len(),
            right: m,
        });
    }
    if nodes.iter().any(|v| !v.is_finite()) || pole.is_nan() {
        return Err(Error::NonFinite("Dixon-Anderson input"));
    }
    for i in 1..m {
        if nodes[i] <= nodes[i - 1] {
            return Err(Error::Interlacing {
                level: m,
                index: i + 1,
            });
        }
    }
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::NonPositive {
            what: "Dixon-Anderson exponent",
            value: a,
        });
    }
    if pole >= nodes[0] && pole <= nodes[m - 1] {
        return Err(Error::Config(format!(
            "pole {pole} must lie outside [{}, {}]",
            nodes[0],
            nodes[m - 1]
        )));
    }
    let finite_pole = pole.is_finite();
    let total: f64 = alphas.iter().sum();

    let mut closed = alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(total);
    for j in 0..m {
        for i in 0..j {
            closed += (alphas[i] + alphas[j] - 1.0) * (nodes[j] - nodes[i]).ln();
        }
        if finite_pole {
            closed += (alphas[j] - total) * (pole - nodes[j]).abs().ln();
        }
    }

    let bounds: Vec<(f64, f64)> = nodes.windows(2).map(|w| (w[0], w[1])).collect();
    let q = TanhSinh::with_tol(1e-12);
    let value = q.integrate_box(&bounds, &mut |t: &[Node]| {
        let mut s = 0.0;
        for (i, ti) in t.iter().enumerate() {
            for tj in &t[..i] {
                s += (ti.x - tj.x).abs().ln();
            }
            for (j, (&a, &alpha)) in nodes.iter().zip(alphas).enumerate() {
                let d = if j == i {
                    ti.from_lo
                } else if j == i + 1 {
                    ti.to_hi
                } else {
                    (ti.x - a).abs()
                };
                s += (alpha - 1.0) * d.ln();
                if finite_pole {
                    s -= alpha * (pole - ti.x).abs().ln();
                }
            }
        }
        s.exp()
    })?;
    Ok(QuadratureReport::new(value, closed.exp()))
}

/// Integral of the unnormalized density over all levels below an upper
/// level given by its consecutive gaps.
fn unnormalized_mass(gaps: &[f64], beta: f64, q: &TanhSinh) -> Result<f64> {
    if gaps.is_empty() {
        return Ok(1.0);
    }
    let bounds: Vec<(f64, f64)> = gaps.iter().map(|&g| (0.0, g)).collect();
    let mut failure = None;
    let value = q.integrate_box(&bounds, &mut |t: &[Node]| {
        let offsets: Vec<(f64, f64)> = t.iter().map(|n| (n.from_lo, n.to_hi)).collect();
        let pair = LevelPair {
            gaps,
            offsets: &offsets,
        };
        let s = pair.log_kernel(beta, 2.0 - beta);
        match unnormalized_mass(&pair.lower_gaps(), beta, q) {
            Ok(inner) => s.exp() * inner,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Direct quadrature of the unnormalized density against `exp(ln Z_N)`.
pub fn normalization_check(top: &Spectrum, beta: f64) -> Result<QuadratureReport> {
    check_beta(beta)?;
    check_top(top)?;
    let n = top.len();
    let dims = n * (n - 1) / 2;
    if dims > QUADRATURE_MAX_DIM {
        return Err(Error::TooLarge { n, max: 3 });
    }
    let q = TanhSinh::with_tol(1e-10);
    let gaps: Vec<f64> = top.values().windows(2).map(|w| w[1] - w[0]).collect();
    let mass = unnormalized_mass(&gaps, beta, &q)?;
    Ok(QuadratureReport::new(
        mass,
        log_normalization(top.values(), beta).exp(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finfree::projection_expected_elementary;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::from_slice(v).unwrap()
    }

    fn arr(levels: &[&[f64]]) -> TriangularArray {
        TriangularArray::new(levels.iter().map(|l| l.to_vec()).collect()).unwrap()
    }

    fn beta_log_pdf(x: f64, a: f64) -> f64 {
        (a - 1.0) * (x.ln() + (1.0 - x).ln()) - (2.0 * ln_gamma(a) - ln_gamma(2.0 * a))
    }

    #[test]
    fn array_validation_and_labels() {
        assert!(matches!(
            TriangularArray::new(vec![vec![2.0], vec![0.0, 1.0]]),
            Err(Error::Interlacing { level: 1, index: 1 })
        ));
        let a = arr(&[&[0.5], &[0.0, 1.0]]);
        assert_eq!(a.flatten(), vec![0.5, 0.0, 1.0]);
        assert_eq!(TriangularArray::labels(2), vec!["x_1_1", "x_1_2", "x_2_2"]);
    }

    #[test]
    fn density_rank_one_and_two() {
        assert_eq!(log_density(&arr(&[&[3.0]]), 1.3).unwrap(), 0.0);
        let a = arr(&[&[0.3], &[0.0, 1.0]]);
        assert!(log_density(&a, 2.0).unwrap().abs() < 1e-14);
        for &beta in &[0.5, 1.0, 3.0, 7.0] {
            let lhs = log_density(&a, beta).unwrap();
            assert!((lhs - beta_log_pdf(0.3, beta / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn density_at_coincidences() {
        let a = arr(&[&[0.0], &[0.0, 1.0]]);
        assert_eq!(log_density(&a, 4.0).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            log_density(&a, 1.0),
            Err(Error::SingularDensity { .. })
        ));
        assert!(log_density(&a, 2.0).unwrap().is_finite());
    }

    #[test]
    fn conditional_examples() {
        assert!(
            log_conditional_density(&[0.3], &[0.0, 1.0], 2.0)
                .unwrap()
                .abs()
                < 1e-14
        );
        let x = 0.3_f64;
        let v = log_conditional_density(&[x], &[0.0, 1.0], 4.0).unwrap();
        assert!((v - (6.0 * x * (1.0 - x)).ln()).abs() < 1e-13);
        assert!(matches!(
            log_conditional_density(&[1.5], &[0.0, 1.0], 2.0),
            Err(Error::Interlacing { .. })
        ));
    }

    #[test]
    fn conditional_integrates_to_one() {
        let q = TanhSinh::with_tol(1e-9);
        let mass = q
            .integrate_box(&[(0.0, 1.0), (1.0, 3.0)], &mut |t: &[Node]| {
                let offsets = [(t[0].from_lo, t[0].to_hi), (t[1].from_lo, t[1].to_hi)];
                log_conditional_offsets(&[1.0, 2.0], &offsets, 1.0).exp()
            })
            .unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn normalization_matches_quadrature() {
        for &beta in &[0.5, 1.0, 2.0, 4.0] {
            for top in [&[0.0, 1.0][..], &[-1.0, 0.5, 2.0][..]] {
                let r = normalization_check(&spectrum(top), beta).unwrap();
                assert!(r.rel_error < 1e-6, "beta {beta} top {top:?}: {r:?}");
            }
        }
    }

    #[test]
    fn dixon_anderson_examples() {
        let r = dixon_anderson_check(&[0.0, 1.0], &[1.0, 1.0], f64::INFINITY).unwrap();
        assert!(r.rel_error < 1e-12);
        let r = dixon_anderson_check(&[0.0, 1.0], &[1.5, 0.7], 3.0).unwrap();
        assert!(r.rel_error < 1e-8, "{r:?}");
        let r = dixon_anderson_check(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0], f64::INFINITY).unwrap();
        assert!(r.rel_error < 1e-7, "{r:?}");
        let r = dixon_anderson_check(&[-1.0, 0.0, 1.0, 4.0], &[0.6, 1.2, 2.0, 0.9], -3.0).unwrap();
        assert!(r.rel_error < 1e-7, "{r:?}");
        assert!(dixon_anderson_check(&[0.0, 1.0], &[1.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn sampler_rejects_bad_input() {
        let cfg = McConfig::default();
        assert!(matches!(
            CornersSampler::new(&spectrum(&[0.0, 0.0]), 1.0, cfg),
            Err(Error::CoincidentTop { .. })
        ));
        assert!(matches!(
            CornersSampler::new(&spectrum(&[0.0, 1.0]), 0.0, cfg),
            Err(Error::NonPositive { .. })
        ));
        let bad = McConfig {
            sweeps: 10,
            burn_in: 10,
            ..cfg
        };
        assert!(CornersSampler::new(&spectrum(&[0.0, 1.0]), 1.0, bad).is_err());
    }

    #[test]
    fn secular_root_near_pole() {
        let y = [0.0, 1.0, 2.0];
        let w = [1e-40, 0.5, 0.5];
        let r = weighted_secular_root(&y, &w, 0);
        // w_0 / r ≈ 0.5/(1 − r) + 0.5/(2 − r) ⇒ r ≈ w_0 / 0.75
        assert!((r / (1e-40 / 0.75) - 1.0).abs() < 1e-10, "{r}");
        let r = weighted_secular_root(&[0.0, 1.0], &[0.5, 0.5], 0);
        assert!((r - 0.5).abs() < 1e-15);
    }

    fn moments(draws: &[TriangularArray]) -> (RunningStats, RunningStats) {
        let mut m1 = RunningStats::new();
        let mut m2 = RunningStats::new();
        for d in draws {
            let x = d.level(1)[0];
            m1.push(x);
            m2.push((x - 0.5).powi(2));
        }
        (m1, m2)
    }

    #[test]
    fn rank_two_matches_beta_law() {
        for (start, beta) in [
            (StartState::Exact, 2.0),
            (StartState::Exact, 0.5),
            (StartState::CriticalPoints, 0.5),
            (StartState::CriticalPoints, 6.0),
        ] {
            let cfg = McConfig {
                seed: 11,
                sweeps: 40,
                burn_in: 20,
                start,
                ..McConfig::default()
            };
            let draws = sample(&spectrum(&[0.0, 1.0]), beta, cfg, 20_000).unwrap();
            let (m1, m2) = moments(&draws);
            let var = 1.0 / (4.0 * (beta + 1.0));
            assert!(
                (m1.mean() - 0.5).abs() < 3.5 * m1.std_error(),
                "{start:?} {beta}"
            );
            assert!(
                (m2.mean() - var).abs() < 3.5 * m2.std_error(),
                "{start:?} {beta}"
            );
        }
    }

    #[test]
    fn uniform_marginals_at_beta_two() {
        let cfg = McConfig {
            seed: 5,
            sweeps: 20,
            burn_in: 10,
            ..McConfig::default()
        };
        let draws = sample(&spectrum(&[0.0, 1.0, 3.0]), 2.0, cfg, 100_000).unwrap();
        // Given level 2, x^1 is uniform on (x^2_1, x^2_2): bin the relative position.
        let bins = 20;
        let mut counts = vec![0u64; bins];
        for d in &draws {
            let (lo, hi) = (d.level(2)[0], d.level(2)[1]);
            let u = (d.level(1)[0] - lo) / (hi - lo);
            counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let (_, p) = crate::stats::chi_square_uniform(&counts);
        assert!(p > 1e-3, "p = {p}");
    }

    #[test]
    fn projection_moments_are_beta_free() {
        let top = spectrum(&[-1.0, 0.5, 2.0, 4.0]);
        for &beta in &[0.5, 1.0, 2.0, 8.0] {
            let cfg = McConfig {
                seed: 3,
                sweeps: 30,
                burn_in: 10,
                chains: 4,
                ..McConfig::default()
            };
            let draws = sample(&top, beta, cfg, 20_000).unwrap();
            let means = elementary_means(&draws);
            for k in 1..4 {
                let expected = projection_expected_elementary(&top, k).unwrap();
                for l in 1..=k {
                    let m = means[k - 1][l - 1];
                    let z = m.z_score(expected[l], 1e-12);
                    assert!(z.abs() < 4.0, "beta {beta} k {k} l {l}: z = {z}");
                }
            }
        }
    }

    #[test]
    fn draws_are_deterministic_and_order_free() {
        let top = spectrum(&[0.0, 1.0, 3.0]);
        let cfg = McConfig {
            seed: 99,
            sweeps: 10,
            burn_in: 5,
            chains: 3,
            ..McConfig::default()
        };
        let s = CornersSampler::new(&top, 1.5, cfg).unwrap();
        let all = s.draws(10);
        assert_eq!(all.len(), 10);
        let idx = s.draw_indices(10);
        for (arr, &(c, d)) in all.iter().zip(&idx).rev() {
            assert_eq!(arr, &s.draw(c, d));
            assert!(arr.is_strictly_interlacing());
        }
    }

    #[test]
    fn first_draws_are_pinned() {
        let cfg = McConfig {
            seed: 2024,
            sweeps: 50,
            burn_in: 25,
            ..McConfig::default()
        };
        let s = CornersSampler::new(&spectrum(&[0.0, 1.0, 3.0]), 1.5, cfg).unwrap();
        let expected = [
            [2.7293618518530525, 0.5879564753305767, 2.888440430228712],
            [1.253001435050627, 0.0067742505815438624, 2.6133065702675515],
            [1.530402215014187, 0.7087761876740113, 2.9407087127058302],
            [1.3917349526415896, 0.7736218636445643, 1.6770156640849185],
            [1.9422574035317792, 0.7513785064334085, 2.8759260851720128],
            [0.29209699347566387, 0.24694162688997068, 2.982996044030084],
            [1.7686885865650488, 0.205974940920917, 2.8540755344761077],
            [1.9784644486169691, 0.33337466823117695, 2.163918413134879],
            [
                0.7354351400630232,
                0.0008746795864132403,
                1.4940054544854267,
            ],
            [0.8547501512217361, 0.12252120045775572, 1.4727244107854003],
        ];
        for (d, e) in s.draws(10).iter().zip(&expected) {
            let f = d.flatten();
            for (a, b) in f.iter().zip(e) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn metropolis_from_mode_reaches_projection_moments() {
        let top = spectrum(&[-1.0, 0.5, 2.0, 4.0]);
        let cfg = McConfig {
            seed: 8,
            sweeps: 200,
            burn_in: 100,
            start: StartState::CriticalPoints,
            ..McConfig::default()
        };
        let draws = sample(&top, 1.0, cfg, 5_000).unwrap();
        let means = elementary_means(&draws);
        for k in 1..4 {
            let expected = projection_expected_elementary(&top, k).unwrap();
            for l in 1..=k {
                let z = means[k - 1][l - 1].z_score(expected[l], 1e-12);
                assert!(z.abs() < 4.0, "k {k} l {l}: z = {z}");
            }
        }
    }
}
