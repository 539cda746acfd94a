//! The β = ∞ corners process: the deterministic lattice of roots of
//! successive derivatives of the top-row polynomial, and the Gaussian field of
//! fluctuations living on it.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corners::TriangularArray;
use crate::error::{Error, Result};
use crate::poly::{critical_points, Spectrum};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InftyLattice {
    pub levels: TriangularArray,
    pub source: Spectrum,
}

impl InftyLattice {
    pub fn rank(&self) -> usize {
        self.source.len()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        self.levels.level(k)
    }

    /// First level whose entries coincide with each other or with a
    /// neighbour on the level above.
    pub fn first_degenerate_level(&self) -> Option<usize> {
        let n = self.rank();
        for k in (1..=n).rev() {
            let level = self.level(k);
            if level.windows(2).any(|w| w[1] <= w[0]) {
                return Some(k);
            }
            if k < n {
                let upper = self.level(k + 1);
                if level
                    .iter()
                    .enumerate()
                    .any(|(i, &x)| x <= upper[i] || x >= upper[i + 1])
                {
                    return Some(k);
                }
            }
        }
        None
    }

    fn require_distinct(&self) -> Result<()> {
        match self.first_degenerate_level() {
            Some(level) => Err(Error::DegenerateLattice { level }),
            None => Ok(()),
        }
    }
}

/// Level `k` holds the roots of the `(N − k)`-th derivative of `Π(z − a_i)`.
pub fn build_lattice(a: &Spectrum) -> InftyLattice {
    let n = a.len();
    let mut levels = vec![Vec::new(); n];
    if n > 0 {
        levels[n - 1] = a.values().to_vec();
        for k in (1..n).rev() {
            levels[k - 1] = critical_points(&levels[k]);
        }
    }
    InftyLattice {
        levels: TriangularArray::from_levels_unchecked(levels),
        source: a.clone(),
    }
}

fn min_distance(x: f64, points: impl IntoIterator<Item = f64>) -> f64 {
    points
        .into_iter()
        .fold(f64::INFINITY, |m, p| m.min((x - p).abs()))
}

/// `max |Σ_j 1/(x_i^{k−1} − x_j^k)|`, each term scaled by the distance from
/// `x_i^{k−1}` to its nearest neighbour on level `k`.
pub fn stationarity_residual(lat: &InftyLattice) -> Result<f64> {
    lat.require_distinct()?;
    let mut worst: f64 = 0.0;
    for k in 2..=lat.rank() {
        let upper = lat.level(k);
        for &x in lat.level(k - 1) {
            let s: f64 = upper.iter().map(|&y| 1.0 / (x - y)).sum();
            worst = worst.max(s.abs() * min_distance(x, upper.iter().copied()));
        }
    }
    Ok(worst)
}

/// Coefficient of each free fluctuation in the first-order term of the
/// density expansion, scaled by the distance to the nearest point involved.
/// Returns the largest magnitude.
pub fn linear_term_cancellation_check(lat: &InftyLattice) -> Result<f64> {
    lat.require_distinct()?;
    let n = lat.rank();
    let mut worst: f64 = 0.0;
    for k in 1..n {
        let level = lat.level(k);
        let below: &[f64] = if k > 1 { lat.level(k - 1) } else { &[] };
        let above = lat.level(k + 1);
        for (i, &x) in level.iter().enumerate() {
            let same: f64 = level
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &w)| 1.0 / (x - w))
                .sum();
            let down: f64 = below.iter().map(|&w| 1.0 / (x - w)).sum();
            let up: f64 = above.iter().map(|&w| 1.0 / (x - w)).sum();
            let coeff = -same + 0.5 * down + 0.5 * up;
            let others = level
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &w)| w)
                .chain(below.iter().copied())
                .chain(above.iter().copied());
            worst = worst.max(coeff.abs() * min_distance(x, others));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub max_abs_diff: f64,
    pub scale: f64,
    pub rel_error: f64,
}

/// Eliminates level `k − 1` from the two-level form
/// `Σ_{a,b} (ζ_a − ξ_b)² / (x_a^k − x_b^{k−1})²` by Schur complement and
/// compares the result with the form `2 Σ_{a<b} (ζ_a − ζ_b)² / (x_a^k − x_b^k)²`.
/// Both are compared as symmetric matrices `v ↦ vᵀMv`.
pub fn schur_elimination_check(lat: &InftyLattice, k: usize) -> Result<SchurReport> {
    let n = lat.rank();
    if k < 2 || k > n {
        return Err(Error::OutOfRange {
            what: "level k",
            value: k,
            min: 2,
            max: n,
        });
    }
    lat.require_distinct()?;
    let upper = lat.level(k);
    let lower = lat.level(k - 1);
    let w: Vec<Vec<f64>> = upper
        .iter()
        .map(|&y| lower.iter().map(|&x| (y - x).powi(-2)).collect())
        .collect();
    let c: Vec<f64> = (0..k - 1).map(|b| (0..k).map(|a| w[a][b]).sum()).collect();
    let mut schur = vec![vec![0.0; k]; k];
    for a in 0..k {
        schur[a][a] = w[a].iter().sum();
        for a2 in 0..k {
            let corr: f64 = (0..k - 1).map(|b| w[a][b] * w[a2][b] / c[b]).sum();
            schur[a][a2] -= corr;
        }
    }
    let mut claimed = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let v = 2.0 * (upper[a] - upper[b]).powi(-2);
                claimed[a][b] = -v;
                claimed[a][a] += v;
            }
        }
    }
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            diff = diff.max((schur[a][b] - claimed[a][b]).abs());
            scale = scale.max(schur[a][b].abs());
        }
    }
    Ok(SchurReport {
        max_abs_diff: diff,
        scale,
        rel_error: if scale > 0.0 { diff / scale } else { diff },
    })
}

/// Position of a free coordinate in the field vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coordinate {
    /// 1-based index within the level.
    pub i: usize,
    pub k: usize,
    pub index: usize,
}

/// Level-major index of coordinate `i` (1-based) on level `k < N`.
pub fn coordinate_index(i: usize, k: usize) -> usize {
    k * (k - 1) / 2 + (i - 1)
}

/// Dense inverses are only formed up to this rank.
pub const DENSE_COVARIANCE_MAX_N: usize = 32;

/// Centered Gaussian vector on the free lattice sites with precision `P`,
/// `ξᵀPξ/2` equal to minus the exponent of the field density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianField {
    rank: usize,
    precision: Vec<Vec<f64>>,
    chol: Vec<Vec<f64>>,
    coordinates: Vec<Coordinate>,
}

/// Lower Cholesky factor, or the first failing pivot.
fn cholesky(p: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = p.len();
    let mut l = vec![vec![0.0; m]; m];
    for j in 0..m {
        let d = p[j][j] - l[j][..j].iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..m {
            let s: f64 = (0..j).map(|t| l[i][t] * l[j][t]).sum();
            l[i][j] = (p[i][j] - s) / djj;
        }
    }
    Ok(l)
}

/// Assembles the field precision; refuses lattices with coincident points.
pub fn build_precision(lat: &InftyLattice) -> Result<GaussianField> {
    lat.require_distinct()?;
    let n = lat.rank();
    let m = n * n.saturating_sub(1) / 2;
    let mut p = vec![vec![0.0; m]; m];
    let mut couple = |u: usize, v: Option<usize>, two_w: f64| {
        p[u][u] += two_w;
        if let Some(v) = v {
            p[v][v] += two_w;
            p[u][v] -= two_w;
            p[v][u] -= two_w;
        }
    };
    for k in 1..n {
        let level = lat.level(k);
        for j in 0..k {
            for i in 0..j {
                let d = level[j] - level[i];
                couple(
                    coordinate_index(i + 1, k),
                    Some(coordinate_index(j + 1, k)),
                    -1.0 / (d * d),
                );
            }
        }
        let above = lat.level(k + 1);
        for (a, &x) in level.iter().enumerate() {
            for (b, &y) in above.iter().enumerate() {
                let d = x - y;
                let other = (k + 1 < n).then(|| coordinate_index(b + 1, k + 1));
                couple(coordinate_index(a + 1, k), other, 1.0 / (2.0 * d * d));
            }
        }
    }
    let chol = cholesky(&p)?;
    let coordinates = (1..n)
        .flat_map(|k| {
            (1..=k).map(move |i| Coordinate {
                i,
                k,
                index: coordinate_index(i, k),
            })
        })
        .collect();
    Ok(GaussianField {
        rank: n,
        precision: p,
        chol,
        coordinates,
    })
}

impl GaussianField {
    pub fn dimension(&self) -> usize {
        self.precision.len()
    }

    pub fn precision(&self) -> &[Vec<f64>] {
        &self.precision
    }

    pub fn cholesky_factor(&self) -> &[Vec<f64>] {
        &self.chol
    }

    pub fn coordinates(&self) -> &[Coordinate] {
        &self.coordinates
    }

    /// Solves `P x = b` with the stored factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = self.forward(b);
        self.backward(&y)
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let m = self.dimension();
        let l = &self.chol;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|t| l[i][t] * y[t]).sum();
            y[i] = (b[i] - s) / l[i][i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    fn backward(&self, y: &[f64]) -> Vec<f64> {
        let m = self.dimension();
        let l = &self.chol;
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|t| l[t][i] * x[t]).sum();
            x[i] = (y[i] - s) / l[i][i];
        }
        x
    }

    /// `P⁻¹`, formed column by column.
    pub fn covariance(&self) -> Result<Vec<Vec<f64>>> {
        if self.rank > DENSE_COVARIANCE_MAX_N {
            return Err(Error::TooLarge {
                n: self.rank,
                max: DENSE_COVARIANCE_MAX_N,
            });
        }
        let m = self.dimension();
        let mut cov = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..m {
                cov[i][j] = col[i];
            }
        }
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (cov[i][j] + cov[j][i]);
                cov[i][j] = v;
                cov[j][i] = v;
            }
        }
        Ok(cov)
    }

    /// Smallest squared Cholesky pivot.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.chol[i][i].powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact draw `L⁻ᵀ z` from standard normals `z`.
    pub fn sample_with(&self, z: &[f64]) -> Vec<f64> {
        self.backward(z)
    }
}

/// Draw `index` of the field under `seed`.
pub fn sample_field(gf: &GaussianField, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = stream(seed, &[0x6766_66, index as u64]);
    let z: Vec<f64> = (0..gf.dimension())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    gf.sample_with(&z)
}

pub fn sample_fields(gf: &GaussianField, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..draws)
        .into_par_iter()
        .map(|i| sample_field(gf, seed, i))
        .collect()
}

/// Roots of the monic probabilists' Hermite polynomial `He_n`, by bisection
/// on the three-term recurrence `He_{m+1} = x He_m − m He_{m−1}`, using the
/// interlacing of consecutive degrees for brackets.
pub fn hermite_roots(n: usize) -> Vec<f64> {
    let eval = |deg: usize, x: f64| -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..deg {
            let next = x * cur - m as f64 * prev;
            prev = cur;
            cur = next;
        }
        cur
    };
    let mut roots: Vec<f64> = Vec::new();
    for deg in 1..=n {
        let bound = 2.0 * (deg as f64).sqrt() + 1.0;
        let mut brackets = vec![-bound];
        brackets.extend_from_slice(&roots);
        brackets.push(bound);
        roots = brackets
            .windows(2)
            .map(|w| {
                let (mut lo, mut hi) = (w[0], w[1]);
                let f_lo = eval(deg, lo);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if (eval(deg, mid) > 0.0) == (f_lo > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
    }
    roots
}
