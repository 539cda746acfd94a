//! Finite free projection, additive and multiplicative convolution.
//!
//! Each operation has a closed-form coefficient route (used in production)
//! and an independent brute-force route averaging Π(z - a_i ∘ b_σ(i)) over
//! all permutations σ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, falling, CompensatedSum};
use crate::poly::{RealRootedPoly, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    PermutationOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Add,
    Mul,
}

impl Op {
    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Mul => a * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionResult {
    pub poly: RealRootedPoly,
    pub method: Method,
}

/// Largest N accepted by [`permutation_oracle`].
pub const ORACLE_MAX_N: usize = 9;

fn sign(l: usize) -> f64 {
    if l % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Q^{N→k}: the (N−k)-th derivative of Π(z − a_i), made monic. The root
/// cache is filled level by level, each level bracketed by the one above.
pub fn projection_poly(a: &Spectrum, k: usize) -> Result<ConvolutionResult> {
    let n = a.len();
    if k < 1 || k > n {
        return Err(Error::OutOfRange {
            what: "projection size k",
            value: k,
            min: 1,
            max: n,
        });
    }
    let mut p = RealRootedPoly::from_roots(a);
    let mut roots = a.values().to_vec();
    for _ in k..n {
        roots = crate::poly::critical_points(&roots);
        p = p.derivative()?.with_roots(roots.clone());
    }
    Ok(ConvolutionResult {
        poly: p,
        method: Method::ClosedForm,
    })
}

/// Weight N↓ℓ / (N↓p · N↓(ℓ−p)) multiplying e_p(a) e_{ℓ−p}(b) in E e_ℓ(a ⊞ b).
pub fn additive_weight(n: usize, l: usize, p: usize) -> f64 {
    falling(n, l) / (falling(n, p) * falling(n, l - p))
}

fn check_sizes(a: &Spectrum, b: &Spectrum) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.len())
}

/// Expected e_ℓ of a ⊞ b for ℓ = 0..=N.
pub fn additive_expected_elementary(a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
    let n = check_sizes(a, b)?;
    let ea = a.elementary_all();
    let eb = b.elementary_all();
    Ok((0..=n)
        .map(|l| {
            let mut s = CompensatedSum::new();
            for p in 0..=l {
                s.add(ea[p] * eb[l - p] * additive_weight(n, l, p));
            }
            s.value()
        })
        .collect())
}

/// Expected e_ℓ of a ⊠ b: e_ℓ(a) e_ℓ(b) / C(N, ℓ).
pub fn multiplicative_expected_elementary(a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
    let n = check_sizes(a, b)?;
    let ea = a.elementary_all();
    let eb = b.elementary_all();
    Ok((0..=n).map(|l| ea[l] * eb[l] / binomial(n, l)).collect())
}

/// Expected e_ℓ of the k-corner projection: e_ℓ(a) k↓ℓ / N↓ℓ, ℓ = 0..=k.
pub fn projection_expected_elementary(a: &Spectrum, k: usize) -> Result<Vec<f64>> {
    let n = a.len();
    if k < 1 || k > n {
        return Err(Error::OutOfRange {
            what: "projection size k",
            value: k,
            min: 1,
            max: n,
        });
    }
    let ea = a.elementary_all();
    Ok((0..=k)
        .map(|l| ea[l] * falling(k, l) / falling(n, l))
        .collect())
}

fn poly_from_elementary(e: &[f64]) -> RealRootedPoly {
    let coeffs = e
        .iter()
        .enumerate()
        .map(|(l, v)| if l == 0 { 1.0 } else { sign(l) * v })
        .collect();
    RealRootedPoly::from_monic_unchecked(coeffs)
}

/// Q^⊞(z) through the closed-form coefficient formula.
pub fn additive_convolution(a: &Spectrum, b: &Spectrum) -> Result<ConvolutionResult> {
    let e = additive_expected_elementary(a, b)?;
    Ok(ConvolutionResult {
        poly: poly_from_elementary(&e),
        method: Method::ClosedForm,
    })
}

/// Q^⊠(z). Both spectra must be positive unless `allow_mixed_signs` is set,
/// in which case the output carries no real-rootedness promise.
pub fn multiplicative_convolution(
    a: &Spectrum,
    b: &Spectrum,
    allow_mixed_signs: bool,
) -> Result<ConvolutionResult> {
    check_sizes(a, b)?;
    if !allow_mixed_signs {
        for s in [a, b] {
            if let Some(v) = s.first_non_positive() {
                return Err(Error::NonPositive {
                    what: "eigenvalue for multiplicative convolution",
                    value: v,
                });
            }
        }
    }
    let e = multiplicative_expected_elementary(a, b)?;
    Ok(ConvolutionResult {
        poly: poly_from_elementary(&e),
        method: Method::ClosedForm,
    })
}

/// Visits every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Σ_σ Π (z − a_i ∘ b_σ(i)) with compensated accumulation per coefficient
/// (not yet divided by N!).
fn permutation_sum(a: &[f64], b: &[f64], op: Op) -> Vec<CompensatedSum> {
    let n = a.len();
    let mut acc = vec![CompensatedSum::new(); n + 1];
    let mut c = vec![0.0; n + 1];
    for_each_permutation(n, |perm| {
        c.iter_mut().for_each(|x| *x = 0.0);
        c[0] = 1.0;
        for (i, &j) in perm.iter().enumerate() {
            let r = op.combine(a[i], b[j]);
            for m in (1..=i + 1).rev() {
                c[m] -= r * c[m - 1];
            }
        }
        for (s, &x) in acc.iter_mut().zip(&c) {
            s.add(x);
        }
    });
    acc
}

/// Exact average over all N! permutations.
pub fn permutation_oracle(a: &Spectrum, b: &Spectrum, op: Op) -> Result<ConvolutionResult> {
    let n = check_sizes(a, b)?;
    if n > ORACLE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let nfact = falling(n, n);
    let mut coeffs: Vec<f64> = permutation_sum(a.values(), b.values(), op)
        .iter()
        .map(|s| s.value() / nfact)
        .collect();
    coeffs[0] = 1.0;
    Ok(ConvolutionResult {
        poly: RealRootedPoly::from_monic_unchecked(coeffs),
        method: Method::PermutationOracle,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub pass: bool,
    pub max_rel_deviation: f64,
    /// Σ_σ Π(z − a_i b_σ(i)), highest power first.
    pub product_side: Vec<f64>,
    /// (Π b_i) Σ_σ Π(y − a_i + z/b_σ(i)) at y = 0, through the additive
    /// closed form.
    pub additive_side: Vec<f64>,
}

pub const IDENTITY_TOL: f64 = 1e-9;
pub const IDENTITY_MAX_N: usize = 8;

/// Checks that the multiplicative permutation sum equals (Π b_i) times the
/// additive permutation sum of `a` against the z-dependent spectrum
/// `c_i = −z / b_i`, evaluated at y = 0. The additive side is computed from
/// the ⊞ coefficient formula with e_m(c) = (−z)^m e_m(1/b), so the check
/// exercises both closed forms against each other.
pub fn mob_identity_check(a: &Spectrum, b: &Spectrum) -> Result<IdentityReport> {
    let n = check_sizes(a, b)?;
    if n > IDENTITY_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: IDENTITY_MAX_N,
        });
    }
    if let Some(&v) = b.values().iter().find(|&&v| v == 0.0) {
        return Err(Error::NonPositive {
            what: "|b_i| in the product/sum identity",
            value: v,
        });
    }
    let product_side: Vec<f64> = permutation_sum(a.values(), b.values(), Op::Mul)
        .iter()
        .map(CompensatedSum::value)
        .collect();

    let nfact = falling(n, n);
    let prod_b: f64 = b.values().iter().product();
    let inv_b = Spectrum::new(b.values().iter().map(|v| 1.0 / v).collect())?;
    let ea = a.elementary_all();
    let e_inv = inv_b.elementary_all();
    // Σ_σ Π(−a_i − c_σ(i)) = N! (−1)^N E e_N(a + c), and
    // E e_N(a + c) = Σ_p e_p(a) e_{N−p}(c) w(N, N, p) with e_m(c) = (−z)^m e_m(1/b).
    let mut additive_side = vec![0.0; n + 1];
    for p in 0..=n {
        let m = n - p;
        let coef = nfact * sign(n) * prod_b * ea[p] * sign(m) * e_inv[m] * additive_weight(n, n, p);
        // z^m sits at index n − m.
        additive_side[n - m] += coef;
    }
    let scale = product_side
        .iter()
        .chain(&additive_side)
        .fold(0.0, |m: f64, c| m.max(c.abs()));
    let max_rel_deviation =
        crate::numeric::max_relative_deviation(&product_side, &additive_side, 1e-12 * scale);
    Ok(IdentityReport {
        pass: max_rel_deviation <= IDENTITY_TOL,
        max_rel_deviation,
        product_side,
        additive_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::max_relative_deviation;
    use proptest::prelude::*;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::from_slice(v).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol * (1.0 + y.abs()), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn projection_examples() {
        let r = projection_poly(&spectrum(&[0.0, 1.0]), 1).unwrap();
        close(r.poly.coeffs(), &[1.0, -0.5], 1e-15);
        assert_eq!(r.poly.cached_roots(), Some(&[0.5][..]));

        let r = projection_poly(&spectrum(&[-1.0, 0.0, 1.0]), 2).unwrap();
        close(r.poly.coeffs(), &[1.0, 0.0, -1.0 / 3.0], 1e-15);
        let roots = r.poly.cached_roots().unwrap();
        close(roots, &[-1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()], 1e-13);

        let a = spectrum(&[-2.0, 0.5, 4.0]);
        let r = projection_poly(&a, 3).unwrap();
        assert_eq!(r.poly, RealRootedPoly::from_roots(&a));

        assert!(projection_poly(&a, 0).is_err());
        assert!(projection_poly(&a, 4).is_err());
    }

    #[test]
    fn additive_examples() {
        let a = spectrum(&[1.0, -1.0]);
        let r = additive_convolution(&a, &a).unwrap();
        close(r.poly.coeffs(), &[1.0, 0.0, -2.0], 1e-15);

        let b = spectrum(&[-1.0, 2.0, 5.0]);
        let r = additive_convolution(&Spectrum::constant(3, 0.0), &b).unwrap();
        close(
            r.poly.coeffs(),
            RealRootedPoly::from_roots(&b).coeffs(),
            1e-14,
        );

        let shifted = spectrum(&[1.5, 4.5, 7.5]);
        let r = additive_convolution(&Spectrum::constant(3, 2.5), &b).unwrap();
        close(
            r.poly.coeffs(),
            RealRootedPoly::from_roots(&shifted).coeffs(),
            1e-13,
        );
    }

    #[test]
    fn multiplicative_examples() {
        let r = multiplicative_convolution(&spectrum(&[1.0, 2.0]), &spectrum(&[3.0, 4.0]), false)
            .unwrap();
        close(r.poly.coeffs(), &[1.0, -10.5, 24.0], 1e-15);

        let a = spectrum(&[0.5, 2.0, 3.0]);
        let r = multiplicative_convolution(&a, &Spectrum::constant(3, 1.0), false).unwrap();
        close(
            r.poly.coeffs(),
            RealRootedPoly::from_roots(&a).coeffs(),
            1e-14,
        );

        let e = multiplicative_expected_elementary(
            &spectrum(&[1.0, 2.0, 3.0]),
            &spectrum(&[1.0, 1.0, 2.0]),
        )
        .unwrap();
        assert!((e[1] - 8.0).abs() < 1e-14);

        let err =
            multiplicative_convolution(&spectrum(&[1.0, -2.0]), &spectrum(&[1.0, 2.0]), false);
        assert!(matches!(err, Err(Error::NonPositive { .. })));
        assert!(
            multiplicative_convolution(&spectrum(&[1.0, -2.0]), &spectrum(&[1.0, 2.0]), true)
                .is_ok()
        );
        assert!(matches!(
            multiplicative_convolution(&spectrum(&[1.0]), &spectrum(&[1.0, 2.0]), false),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn oracle_examples() {
        let a = spectrum(&[0.0, 1.0]);
        let r = permutation_oracle(&a, &a, Op::Add).unwrap();
        assert_eq!(r.method, Method::PermutationOracle);
        close(r.poly.coeffs(), &[1.0, -2.0, 0.5], 1e-15);

        let r =
            permutation_oracle(&spectrum(&[1.0, 2.0]), &spectrum(&[3.0, 4.0]), Op::Mul).unwrap();
        close(r.poly.coeffs(), &[1.0, -10.5, 24.0], 1e-15);

        let r = permutation_oracle(&spectrum(&[2.0]), &spectrum(&[3.0]), Op::Mul).unwrap();
        assert_eq!(r.poly.coeffs(), &[1.0, -6.0]);
        let r = permutation_oracle(&spectrum(&[2.0]), &spectrum(&[3.0]), Op::Add).unwrap();
        assert_eq!(r.poly.coeffs(), &[1.0, -5.0]);

        let big = Spectrum::constant(10, 1.0);
        assert!(matches!(
            permutation_oracle(&big, &big, Op::Add),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn heap_visits_all_permutations() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(5, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 120);
    }

    #[test]
    fn identity_examples() {
        for (a, b) in [
            (vec![1.0, 2.0], vec![3.0, 4.0]),
            (vec![0.0], vec![5.0]),
            (vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0]),
        ] {
            let r = mob_identity_check(&spectrum(&a), &spectrum(&b)).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = mob_identity_check(&spectrum(&[0.0]), &spectrum(&[5.0])).unwrap();
        close(&r.product_side, &[1.0, 0.0], 0.0);
        close(&r.additive_side, &[1.0, 0.0], 1e-15);
        assert!(mob_identity_check(&spectrum(&[1.0]), &spectrum(&[0.0])).is_err());
    }

    #[test]
    fn degree_one_is_exact() {
        let a = spectrum(&[1.25]);
        let b = spectrum(&[-3.5]);
        assert_eq!(
            additive_convolution(&a, &b).unwrap().poly.coeffs(),
            &[1.0, 2.25]
        );
        assert_eq!(
            multiplicative_convolution(&a, &b, true)
                .unwrap()
                .poly
                .coeffs(),
            &[1.0, 4.375]
        );
    }

    fn int_spectrum(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-5i32..=5).prop_map(f64::from), n)
    }

    fn pair(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1..=max_n).prop_flat_map(|n| (int_spectrum(n), int_spectrum(n)))
    }

    proptest! {
        #[test]
        fn closed_form_matches_oracle((a, b) in pair(7)) {
            let (a, b) = (spectrum(&a), spectrum(&b));
            let c = additive_convolution(&a, &b).unwrap();
            let o = permutation_oracle(&a, &b, Op::Add).unwrap();
            prop_assert!(max_relative_deviation(c.poly.coeffs(), o.poly.coeffs(), 1.0) < 1e-10);
            let c = multiplicative_convolution(&a, &b, true).unwrap();
            let o = permutation_oracle(&a, &b, Op::Mul).unwrap();
            prop_assert!(max_relative_deviation(c.poly.coeffs(), o.poly.coeffs(), 1.0) < 1e-10);
        }

        #[test]
        fn convolutions_are_symmetric((a, b) in pair(8)) {
            let (a, b) = (spectrum(&a), spectrum(&b));
            let ab = additive_convolution(&a, &b).unwrap();
            let ba = additive_convolution(&b, &a).unwrap();
            prop_assert!(max_relative_deviation(ab.poly.coeffs(), ba.poly.coeffs(), 1.0) < 1e-12);
            let ab = multiplicative_convolution(&a, &b, true).unwrap();
            let ba = multiplicative_convolution(&b, &a, true).unwrap();
            prop_assert!(max_relative_deviation(ab.poly.coeffs(), ba.poly.coeffs(), 1.0) < 1e-12);
        }

        #[test]
        fn trace_law((a, b) in pair(8)) {
            let (a, b) = (spectrum(&a), spectrum(&b));
            let q = additive_convolution(&a, &b).unwrap();
            prop_assert_eq!(-q.poly.coeffs()[1], a.sum() + b.sum());
        }

        #[test]
        fn projection_composes_stepwise(mut v in proptest::collection::vec(-10.0f64..10.0, 2..8), k in 1usize..8) {
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let n = v.len();
            let k = 1 + k % n;
            let a = Spectrum::new(v).unwrap();
            let direct = projection_poly(&a, k).unwrap();
            let mut step = a.clone();
            for m in (k..n).rev() {
                let r = projection_poly(&step, m).unwrap();
                step = Spectrum::new(r.poly.cached_roots().unwrap().to_vec()).unwrap();
            }
            let stepwise = RealRootedPoly::from_roots(&step);
            let scale = 1.0 + a.max_abs().powi(k as i32);
            for (x, y) in direct.poly.coeffs().iter().zip(stepwise.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
            let closed = projection_expected_elementary(&a, k).unwrap();
            for (l, e) in closed.iter().enumerate() {
                let c = direct.poly.coeff_of_power(k - l) * sign(l);
                prop_assert!((c - e).abs() <= 1e-12 * scale);
            }
        }
    }
}
