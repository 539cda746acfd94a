//! Monic real polynomials with real roots, and sorted spectra.
//!
//! Coefficients are stored highest degree first: `coeffs[0]` is the leading
//! coefficient (always exactly 1) and `coeffs[n]` the constant term, so
//! `p(z) = Σ_j coeffs[j] z^{n-j}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted tuple of real eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts the input; rejects NaN and infinities.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    /// `n` copies of `c`.
    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Smallest entry that is not strictly positive, if any.
    pub fn first_non_positive(&self) -> Option<f64> {
        self.values.iter().copied().find(|&v| v <= 0.0)
    }

    /// `true` when all entries are pairwise distinct with gap above
    /// `rel * (1 + max|s_i|)`.
    pub fn is_strictly_increasing(&self, rel: f64) -> bool {
        let thresh = rel * (1.0 + self.max_abs());
        self.values.windows(2).all(|w| w[1] - w[0] > thresh)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().copied())
    }

    /// `e_ℓ` of the entries.
    pub fn elementary(&self, l: usize) -> Result<f64> {
        elementary_symmetric(self, l)
    }

    /// All of `e_0, ..., e_N`.
    pub fn elementary_all(&self) -> Vec<f64> {
        let coeffs = expand_roots(&self.values);
        coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| if l % 2 == 0 { *c } else { -c })
            .collect()
    }
}

/// Roots of the derivative of Π(z − r_i) for sorted `roots`, found by
/// bisection on Σ_c m_c / (x − c) between consecutive distinct clusters.
/// A cluster of multiplicity m contributes itself m − 1 times.
pub fn critical_points(roots: &[f64]) -> Vec<f64> {
    let n = roots.len();
    if n <= 1 {
        return Vec::new();
    }
    let scale = roots.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    let gap = CLUSTER_REL * (1.0 + scale);
    // (position, multiplicity)
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || roots[i] - roots[i - 1] >= gap {
            let m = i - start;
            let c = roots[start..i].iter().sum::<f64>() / m as f64;
            clusters.push((c, m as f64));
            start = i;
        }
    }
    let secular = |x: f64| -> f64 { clusters.iter().map(|&(c, m)| m / (x - c)).sum() };
    let mut out = Vec::with_capacity(n - 1);
    for (w, &(c, m)) in clusters.iter().enumerate() {
        for _ in 1..m as usize {
            out.push(c);
        }
        if let Some(&(next, _)) = clusters.get(w + 1) {
            let (mut lo, mut hi) = (c, next);
            for _ in 0..BISECTION_MAX_ITER {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f = secular(mid);
                if f == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if f > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

/// Coefficients of Π(z - r_i), highest degree first, built incrementally.
fn expand_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = Vec::with_capacity(roots.len() + 1);
    c.push(1.0);
    for &r in roots {
        c.push(0.0);
        for j in (1..c.len()).rev() {
            c[j] -= r * c[j - 1];
        }
    }
    c
}

/// `e_ℓ(s)`: the signed coefficient of `z^{N-ℓ}` in Π(z - s_i).
pub fn elementary_symmetric(s: &Spectrum, l: usize) -> Result<f64> {
    if l > s.len() {
        return Err(Error::OutOfRange {
            what: "elementary symmetric degree",
            value: l,
            min: 0,
            max: s.len(),
        });
    }
    Ok(s.elementary_all()[l])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealRootedPoly {
    coeffs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    roots: Option<Vec<f64>>,
}

/// Absolute gap under which adjacent brackets are treated as one cluster.
pub const CLUSTER_REL: f64 = 1e-9;
pub const BISECTION_MAX_ITER: usize = 200;
/// Remainders below this (relative) terminate a Sturm chain.
const STURM_ZERO_REL: f64 = 1e-11;

impl RealRootedPoly {
    pub fn from_roots(s: &Spectrum) -> Self {
        Self {
            coeffs: expand_roots(s.values()),
            roots: Some(s.values().to_vec()),
        }
    }

    /// Normalizes by the leading coefficient.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficient"));
        }
        let lead = coeffs[0];
        if lead == 0.0 {
            return Err(Error::NonPositive {
                what: "leading coefficient magnitude",
                value: 0.0,
            });
        }
        let mut coeffs = coeffs;
        for c in coeffs.iter_mut() {
            *c /= lead;
        }
        coeffs[0] = 1.0;
        Ok(Self {
            coeffs,
            roots: None,
        })
    }

    pub(crate) fn from_monic_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs[0], 1.0);
        Self {
            coeffs,
            roots: None,
        }
    }

    pub(crate) fn with_roots(mut self, roots: Vec<f64>) -> Self {
        debug_assert_eq!(roots.len(), self.degree());
        self.roots = Some(roots);
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^m`.
    pub fn coeff_of_power(&self, m: usize) -> f64 {
        let n = self.degree();
        if m > n {
            0.0
        } else {
            self.coeffs[n - m]
        }
    }

    pub fn cached_roots(&self) -> Option<&[f64]> {
        self.roots.as_deref()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Product form when the factorization is cached, Horner otherwise.
    fn eval_accurate(&self, x: f64) -> f64 {
        match &self.roots {
            Some(r) => r.iter().map(|ri| x - ri).product(),
            None => self.eval(x),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Residual bound `1e-9 (1+|r|)^N max|c|` used for root validation.
    pub fn root_residual_bound(&self, r: f64) -> f64 {
        1e-9 * (1.0 + r.abs()).powi(self.degree() as i32) * self.max_abs_coeff()
    }

    /// Monic normalization of p′. A cached factorization is carried over
    /// through the critical points.
    pub fn derivative(&self) -> Result<Self> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::ConstantPolynomial);
        }
        let nf = n as f64;
        let coeffs = self.coeffs[..n]
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { 1.0 } else { c * (n - j) as f64 / nf })
            .collect();
        let roots = self.roots.as_deref().map(critical_points);
        Ok(Self { coeffs, roots })
    }

    /// Cauchy bound: every root lies in `[-B, B]`.
    pub fn root_bound(&self) -> f64 {
        1.0 + self.coeffs[1..]
            .iter()
            .fold(0.0, |m: f64, c| m.max(c.abs()))
    }

    /// Sign of p strictly to the right of the `i`-th smallest root (and left
    /// of the next one). The leading coefficient is positive.
    fn sign_right_of(&self, i: usize) -> f64 {
        if (self.degree() - 1 - i) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// One root per interval `(brackets[i], brackets[i+1])`.
    ///
    /// `brackets` must have `degree + 1` non-decreasing entries; `±∞` are
    /// replaced by the Cauchy bound. Adjacent brackets closer than
    /// `CLUSTER_REL·(1+max|b|)` pin the root to their midpoint, which is how
    /// repeated roots of the parent carry over to the derivative.
    pub fn real_roots_bracketed(&self, brackets: &[f64]) -> Result<Vec<f64>> {
        let n = self.degree();
        if brackets.len() != n + 1 {
            return Err(Error::OutOfRange {
                what: "bracket count",
                value: brackets.len(),
                min: n + 1,
                max: n + 1,
            });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        if brackets.iter().any(|x| x.is_nan()) {
            return Err(Error::NonFinite("bracket"));
        }
        let finite_max = brackets
            .iter()
            .filter(|x| x.is_finite())
            .fold(0.0, |m: f64, x| m.max(x.abs()));
        let bound = self.root_bound().max(finite_max) + 1.0;
        let b: Vec<f64> = brackets
            .iter()
            .map(|&x| match x {
                f64::INFINITY => bound,
                f64::NEG_INFINITY => -bound,
                _ => x,
            })
            .collect();
        for (i, w) in b.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::InvalidBracket {
                    index: i + 1,
                    at: w[1],
                });
            }
        }
        let cluster = CLUSTER_REL * (1.0 + finite_max);

        if n == 1 {
            let r = -self.coeffs[1];
            let tol = cluster;
            if r < b[0] - tol || r > b[1] + tol {
                return Err(Error::InvalidBracket { index: 0, at: b[0] });
            }
            return Ok(vec![r]);
        }

        let mut roots = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = (b[i], b[i + 1]);
            if hi - lo < cluster {
                roots.push(0.5 * (lo + hi));
                continue;
            }
            let right = self.sign_right_of(i);
            self.check_bracket_sign(lo, -right, i)?;
            self.check_bracket_sign(hi, right, i + 1)?;
            roots.push(self.bisect(lo, hi, right));
        }
        // Bisection of neighbouring intervals can meet at a shared endpoint.
        for i in 1..n {
            if roots[i] < roots[i - 1] {
                roots[i] = roots[i - 1];
            }
        }
        Ok(roots)
    }

    fn check_bracket_sign(&self, x: f64, expected: f64, index: usize) -> Result<()> {
        let v = self.eval_accurate(x);
        if v * expected < 0.0 && v.abs() > self.root_residual_bound(x) {
            return Err(Error::InvalidBracket { index, at: x });
        }
        Ok(())
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, right_sign: f64) -> f64 {
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.eval_accurate(mid);
            if v == 0.0 {
                return mid;
            }
            if v * right_sign > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Roots of a real-rooted polynomial, found through its derivative chain:
    /// the roots of p′ (padded with ±∞) bracket the roots of p.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        if let Some(r) = &self.roots {
            return Ok(r.clone());
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut chain = vec![self.clone()];
        for _ in 1..n {
            let d = chain.last().unwrap().derivative()?;
            chain.push(d);
        }
        // chain[n-1] is linear.
        let mut roots = vec![-chain[n - 1].coeffs[1]];
        for p in chain[..n - 1].iter().rev() {
            let mut brackets = Vec::with_capacity(roots.len() + 2);
            brackets.push(f64::NEG_INFINITY);
            brackets.extend_from_slice(&roots);
            brackets.push(f64::INFINITY);
            roots = p.real_roots_bracketed(&brackets)?;
        }
        Ok(roots)
    }

    /// Same polynomial with the root cache filled.
    pub fn with_computed_roots(self) -> Result<Self> {
        let r = self.real_roots()?;
        Ok(self.with_roots(r))
    }

    /// Whether every root is real, decided by Sturm sign-variation counts on
    /// a root-scaled copy. Multiple roots are handled through the gcd left at
    /// the end of the chain, which must itself be real-rooted.
    pub fn is_real_rooted(&self) -> bool {
        let n = self.degree();
        if n <= 1 {
            return true;
        }
        let scaled = scale_roots_to_unit(&self.coeffs);
        sturm_real_rooted(&scaled)
    }

    /// Number of distinct real roots according to the Sturm chain.
    pub fn distinct_real_root_count(&self) -> usize {
        if self.degree() == 0 {
            return 0;
        }
        let scaled = scale_roots_to_unit(&self.coeffs);
        let (chain, _) = sturm_chain(&scaled);
        sturm_count(&chain)
    }
}

/// Divides the variable by a root bound so that all roots land in [-1, 1]
/// and renormalizes to unit max coefficient.
fn scale_roots_to_unit(c: &[f64]) -> Vec<f64> {
    // Fujiwara bound.
    let mut s: f64 = 0.0;
    for (j, cj) in c.iter().enumerate().skip(1) {
        let t = (cj.abs() / c[0].abs()).powf(1.0 / j as f64);
        s = s.max(t);
    }
    s *= 2.0;
    if s == 0.0 {
        s = 1.0;
    }
    let mut out: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(j, cj)| cj / s.powi(j as i32))
        .collect();
    normalize_max(&mut out);
    out
}

fn normalize_max(p: &mut [f64]) {
    let m = p.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
    if m > 0.0 {
        for c in p.iter_mut() {
            *c /= m;
        }
    }
}

fn poly_derivative_raw(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    p[..n]
        .iter()
        .enumerate()
        .map(|(j, c)| c * (n - j) as f64)
        .collect()
}

/// Remainder of `a / b` (highest first), trimmed of negligible leading terms.
fn poly_rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let q = r[0] / b[0];
        for j in 0..b.len() {
            r[j] -= q * b[j];
        }
        r.remove(0);
    }
    r
}

fn trim_leading(mut p: Vec<f64>, tol: f64) -> Vec<f64> {
    while p.len() > 1 && p[0].abs() <= tol {
        p.remove(0);
    }
    p
}

/// Sturm chain of a unit-scaled polynomial. The second value is the final
/// (gcd) member when the chain terminated on a zero remainder.
fn sturm_chain(p: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut chain = vec![p.to_vec()];
    let mut d = poly_derivative_raw(p);
    normalize_max(&mut d);
    chain.push(d);
    loop {
        let k = chain.len();
        let last = &chain[k - 1];
        if last.len() == 1 {
            return (chain, vec![1.0]);
        }
        let prev_scale = chain[k - 2].iter().fold(0.0, |m: f64, c| m.max(c.abs()));
        let rem = poly_rem(&chain[k - 2], last);
        let rem_scale = rem.iter().fold(0.0, |m: f64, c| m.max(c.abs()));
        if rem_scale <= STURM_ZERO_REL * prev_scale {
            let g = chain[k - 1].clone();
            return (chain, g);
        }
        let mut next: Vec<f64> = rem.iter().map(|c| -c).collect();
        next = trim_leading(next, STURM_ZERO_REL * rem_scale);
        normalize_max(&mut next);
        chain.push(next);
    }
}

fn sign_changes(signs: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = 0.0;
    for s in signs {
        if s == 0.0 {
            continue;
        }
        if last != 0.0 && s * last < 0.0 {
            count += 1;
        }
        last = s;
    }
    count
}

fn sturm_count(chain: &[Vec<f64>]) -> usize {
    let at_pos = sign_changes(chain.iter().map(|p| p[0].signum()));
    let at_neg = sign_changes(chain.iter().map(|p| {
        let deg = p.len() - 1;
        if deg % 2 == 0 {
            p[0].signum()
        } else {
            -p[0].signum()
        }
    }));
    at_neg.saturating_sub(at_pos)
}

fn sturm_real_rooted(p: &[f64]) -> bool {
    let n = p.len() - 1;
    if n <= 1 {
        return true;
    }
    let (chain, g) = sturm_chain(p);
    let distinct = sturm_count(&chain);
    let gdeg = g.len() - 1;
    if distinct != n - gdeg {
        return false;
    }
    if gdeg <= 1 {
        return true;
    }
    let mut g = g;
    let lead = g[0];
    for c in g.iter_mut() {
        *c /= lead;
    }
    sturm_real_rooted(&scale_roots_to_unit(&g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::from_slice(v).unwrap()
    }

    #[test]
    fn from_roots_examples() {
        assert_eq!(RealRootedPoly::from_roots(&spectrum(&[])).coeffs(), &[1.0]);
        assert_eq!(
            RealRootedPoly::from_roots(&spectrum(&[0.0, 0.0])).coeffs(),
            &[1.0, 0.0, 0.0]
        );
        let p = RealRootedPoly::from_roots(&spectrum(&[1.0, 2.0, 3.0]));
        assert_eq!(p.coeffs(), &[1.0, -6.0, 11.0, -6.0]);
        assert_eq!(p.cached_roots(), Some(&[1.0, 2.0, 3.0][..]));
    }

    #[test]
    fn elementary_examples() {
        let s = spectrum(&[1.0, 2.0, 3.0]);
        assert_eq!(elementary_symmetric(&s, 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&s, 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&s, 3).unwrap(), 6.0);
        assert!(matches!(
            elementary_symmetric(&s, 4),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let p = RealRootedPoly::from_coeffs(vec![1.0, 0.0, -1.0]).unwrap();
        let d = p.derivative().unwrap();
        assert_eq!(d.coeffs(), &[1.0, 0.0]);
        assert!(d.cached_roots().is_none());

        let p = RealRootedPoly::from_roots(&spectrum(&[1.0, 2.0, 3.0]));
        let d = p.derivative().unwrap();
        assert_eq!(d.coeffs()[1], -4.0);
        assert!((d.coeffs()[2] - 11.0 / 3.0).abs() < 1e-15);

        let p = RealRootedPoly::from_roots(&Spectrum::constant(4, 1.5));
        let d = p.derivative().unwrap();
        let expect = RealRootedPoly::from_roots(&Spectrum::constant(3, 1.5));
        for (a, b) in d.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }

        let c = RealRootedPoly::from_coeffs(vec![1.0]).unwrap();
        assert_eq!(c.derivative(), Err(Error::ConstantPolynomial));
    }

    #[test]
    fn bracketed_examples() {
        let p = RealRootedPoly::from_coeffs(vec![1.0, 0.0, -1.0]).unwrap();
        let r = p.real_roots_bracketed(&[-10.0, 0.0, 10.0]).unwrap();
        assert!((r[0] + 1.0).abs() < 1e-13 && (r[1] - 1.0).abs() < 1e-13);

        let p = RealRootedPoly::from_coeffs(vec![1.0, -4.0, 11.0 / 3.0]).unwrap();
        let r = p.real_roots_bracketed(&[1.0, 2.0, 3.0]).unwrap();
        let d = 1.0 / 3f64.sqrt();
        assert!((r[0] - (2.0 - d)).abs() < 1e-13);
        assert!((r[1] - (2.0 + d)).abs() < 1e-13);

        let p = RealRootedPoly::from_coeffs(vec![1.0, 0.0]).unwrap();
        assert_eq!(p.real_roots_bracketed(&[-1.0, 1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn bracket_with_wrong_sign_is_reported() {
        // Both roots ±1 fall in the first interval.
        let p = RealRootedPoly::from_coeffs(vec![1.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            p.real_roots_bracketed(&[-2.0, 2.0, 3.0]),
            Err(Error::InvalidBracket { .. })
        ));
    }

    #[test]
    fn repeated_roots_survive_differentiation() {
        let s = spectrum(&[0.0, 1.0, 1.0, 1.0, 3.0]);
        let p = RealRootedPoly::from_roots(&s);
        let d = p.derivative().unwrap();
        let r = d.real_roots_bracketed(s.values()).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[1] - 1.0).abs() < 1e-12 && (r[2] - 1.0).abs() < 1e-12);
        assert!(r[0] > 0.0 && r[0] < 1.0 && r[3] > 1.0 && r[3] < 3.0);
    }

    #[test]
    fn critical_points_match_coefficient_route() {
        let s = spectrum(&[-3.0, -1.0, 0.5, 2.0, 4.0, 7.0]);
        let d = RealRootedPoly::from_roots(&s).derivative().unwrap();
        let a = d.real_roots_bracketed(s.values()).unwrap();
        let b = critical_points(s.values());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11);
        }
        assert_eq!(critical_points(&[0.0, 1.0]), vec![0.5]);
        let r = critical_points(&[0.0, 1.0, 1.0, 1.0, 3.0]);
        assert_eq!(r.len(), 4);
        assert_eq!((r[1], r[2]), (1.0, 1.0));
        assert!(critical_points(&[2.0]).is_empty());
    }

    #[test]
    fn real_roots_via_chain() {
        let s = spectrum(&[-3.0, -1.0, 0.5, 2.0, 2.0, 7.0]);
        let p =
            RealRootedPoly::from_coeffs(RealRootedPoly::from_roots(&s).coeffs().to_vec()).unwrap();
        let r = p.real_roots().unwrap();
        for (a, b) in r.iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn real_rootedness_examples() {
        assert!(!RealRootedPoly::from_coeffs(vec![1.0, 0.0, 1.0])
            .unwrap()
            .is_real_rooted());
        assert!(RealRootedPoly::from_coeffs(vec![1.0, 0.0, -1.0])
            .unwrap()
            .is_real_rooted());
        // (z-1)^2 (z^2+1): distinct count 1, gcd degree 1, not real-rooted.
        let p = RealRootedPoly::from_coeffs(vec![1.0, -2.0, 2.0, -2.0, 1.0]).unwrap();
        assert!(!p.is_real_rooted());
        // (z-1)^3 (z+2)^2
        let p = RealRootedPoly::from_roots(&spectrum(&[1.0, 1.0, 1.0, -2.0, -2.0]));
        assert!(p.is_real_rooted());
        assert_eq!(p.distinct_real_root_count(), 2);
    }

    proptest! {
        #[test]
        fn derivative_roots_interlace(mut v in proptest::collection::vec(-50.0f64..50.0, 2..9)) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            prop_assume!(v.len() >= 2);
            let s = Spectrum::new(v.clone()).unwrap();
            let d = RealRootedPoly::from_roots(&s).derivative().unwrap();
            let r = d.real_roots_bracketed(s.values()).unwrap();
            for i in 0..r.len() {
                prop_assert!(v[i] < r[i] && r[i] < v[i + 1]);
            }
        }

        #[test]
        fn round_trip_through_brackets(mut v in proptest::collection::vec(-20.0f64..20.0, 1..9)) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
            let s = Spectrum::new(v.clone()).unwrap();
            let p = RealRootedPoly::from_roots(&s);
            let d = p.derivative().unwrap();
            let inner = if d.degree() == 0 { vec![] } else {
                d.real_roots_bracketed(s.values()).unwrap()
            };
            let mut brackets = vec![f64::NEG_INFINITY];
            brackets.extend(inner);
            brackets.push(f64::INFINITY);
            let r = p.real_roots_bracketed(&brackets).unwrap();
            for (a, b) in r.iter().zip(&v) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{} vs {}", a, b);
            }
            for &x in &r {
                prop_assert!(p.eval(x).abs() <= p.root_residual_bound(x));
            }
        }

        #[test]
        fn elementary_matches_coefficients(v in proptest::collection::vec(-10.0f64..10.0, 0..10)) {
            let s = Spectrum::new(v).unwrap();
            let p = RealRootedPoly::from_roots(&s);
            let n = s.len();
            for l in 0..=n {
                let e = elementary_symmetric(&s, l).unwrap();
                let c = p.coeff_of_power(n - l) * if l % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert!((e - c).abs() <= 1e-12 * e.abs().max(1.0));
            }
        }

        #[test]
        fn sturm_counts_every_real_root(mut v in proptest::collection::vec(-10.0f64..10.0, 1..9)) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
            let s = Spectrum::new(v.clone()).unwrap();
            let p = RealRootedPoly::from_roots(&s);
            prop_assert_eq!(p.distinct_real_root_count(), v.len());
            prop_assert!(p.is_real_rooted());
        }
    }
}
