//! Zone graph construction: Gaussian distance kernel, demographic correlation,
//! the enriched (thresholded Hadamard) adjacency, its rank-1 factorization, and
//! the per-zone fairness weights derived from the rank-1 factor.

use crate::error::{Error, Result};
use crate::mat::{norm2, Mat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Sparsity threshold applied to the enriched adjacency.
pub const ENRICH_THRESHOLD: f64 = 0.1;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

pub const METERS_PER_MILE: f64 = 1609.344;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Zone {
    pub id: u32,
    pub x_m: f64,
    pub y_m: f64,
}

/// Ordered set of zones with projected planar centroids in meters.
#[derive(Clone, Debug)]
pub struct ZoneSet {
    zones: Vec<Zone>,
    index: BTreeMap<u32, usize>,
}

impl ZoneSet {
    pub fn new(zones: Vec<Zone>) -> Result<Self> {
        if zones.is_empty() {
            return Err(Error::input("zone set must contain at least one zone"));
        }
        let mut index = BTreeMap::new();
        for (i, z) in zones.iter().enumerate() {
            if !z.x_m.is_finite() || !z.y_m.is_finite() {
                return Err(Error::input(format!("zone {} has non-finite centroid", z.id)));
            }
            if index.insert(z.id, i).is_some() {
                return Err(Error::input(format!("duplicate zone id {}", z.id)));
            }
        }
        Ok(ZoneSet { zones, index })
    }

    pub fn n(&self) -> usize {
        self.zones.len()
    }

    pub fn zone(&self, i: usize) -> &Zone {
        &self.zones[i]
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.zones.iter().map(|z| z.id).collect()
    }

    pub fn centroid_distance_m(&self, i: usize, j: usize) -> f64 {
        let a = &self.zones[i];
        let b = &self.zones[j];
        ((a.x_m - b.x_m).powi(2) + (a.y_m - b.y_m).powi(2)).sqrt()
    }

    /// Symmetric matrix of centroid distances in miles, zero diagonal.
    pub fn distances_mi(&self) -> Mat {
        let n = self.n();
        Mat::from_fn(n, n, |i, j| self.centroid_distance_m(i, j) / METERS_PER_MILE)
    }
}

/// Per-zone demographic vectors z_i of length 2N
/// (N years, each contributing a minority-race ratio and a poverty ratio).
#[derive(Clone, Debug)]
pub struct DemographicTable {
    vectors: Vec<Vec<f64>>,
}

impl DemographicTable {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::input("demographic table must be non-empty"));
        };
        let len = first.len();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != len {
                return Err(Error::input(format!(
                    "demographic vector {} has length {}, expected {}",
                    i,
                    v.len(),
                    len
                )));
            }
            if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::input(format!(
                    "demographic vector {} has entries outside [0, 1]",
                    i
                )));
            }
        }
        Ok(DemographicTable { vectors })
    }

    pub fn n_zones(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector_len(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjacencyKind {
    Distance,
    Enriched,
    Normalized,
}

/// Nonnegative dense adjacency with a tag recording which construction produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    kind: AdjacencyKind,
    mat: Mat,
}

impl AdjacencyMatrix {
    pub fn new(kind: AdjacencyKind, mat: Mat) -> Result<Self> {
        if mat.rows() != mat.cols() {
            return Err(Error::input("adjacency matrix must be square"));
        }
        if mat.values().any(|v| !v.is_finite() || v < 0.0) {
            return Err(Error::input(
                "adjacency entries must be finite and nonnegative",
            ));
        }
        Ok(AdjacencyMatrix { kind, mat })
    }

    pub fn kind(&self) -> AdjacencyKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }
}

/// Per-zone multipliers in [0.9, 1.0]; lower values mark advantaged zones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessWeights(Vec<f64>);

impl FairnessWeights {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::input("fairness weights must be non-empty"));
        }
        if omega.iter().any(|&w| !(0.9..=1.0).contains(&w)) {
            return Err(Error::input("fairness weights must lie in [0.9, 1.0]"));
        }
        Ok(FairnessWeights(omega))
    }

    /// All-ones weights (the unweighted baseline arm).
    pub fn uniform(n: usize) -> Self {
        FairnessWeights(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn gaussian_kernel(d: f64, sigma: f64) -> f64 {
    (-(d * d) / (sigma * sigma)).exp()
}

/// W_ij = exp(-d_ij^2 / sigma_d^2) over centroid distances, unit diagonal.
///
/// sigma_d is the population standard deviation of the n(n-1)/2 distinct
/// pairwise distances, computed once for the whole graph so that W stays
/// symmetric.
pub fn build_distance_adjacency(zones: &ZoneSet) -> Result<AdjacencyMatrix> {
    let n = zones.n();
    if n < 2 {
        return Err(Error::input(
            "distance adjacency needs at least two zones",
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(zones.centroid_distance_m(i, j));
        }
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    let var = dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / dists.len() as f64;
    let sigma = var.sqrt();
    if sigma <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "pairwise centroid distances have zero spread (sigma_d = 0)".into(),
        ));
    }
    let mat = Mat::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            gaussian_kernel(zones.centroid_distance_m(i, j), sigma)
        }
    });
    AdjacencyMatrix::new(AdjacencyKind::Distance, mat)
}

/// Pearson correlation between the demographic vectors of every zone pair.
///
/// An entry is set to 0 whenever either vector has zero variance; this covers
/// the all-zero vectors as a special case of the same degeneracy.
pub fn build_demo_correlation(demo: &DemographicTable) -> Result<Mat> {
    if demo.vector_len() < 2 {
        return Err(Error::input(
            "demographic vectors need at least two components",
        ));
    }
    let n = demo.n_zones();
    let len = demo.vector_len() as f64;

    // Centered copies and their norms, reused across pairs.
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let v = demo.vector(i);
            let mean = v.iter().sum::<f64>() / len;
            v.iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|v| norm2(v)).collect();

    let mut corr = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let value = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (cov / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            corr[(i, j)] = value;
            corr[(j, i)] = value;
        }
    }
    Ok(corr)
}

/// Hadamard product of W and Corr, keeping entries only when the product
/// reaches the 0.1 sparsity threshold. Negative products fall below the
/// threshold and are dropped with no special casing.
pub fn enrich_adjacency(w: &AdjacencyMatrix, corr: &Mat) -> Result<AdjacencyMatrix> {
    let n = w.n();
    if corr.rows() != n || corr.cols() != n {
        return Err(Error::input(format!(
            "correlation matrix is {}x{}, expected {}x{}",
            corr.rows(),
            corr.cols(),
            n,
            n
        )));
    }
    let mat = Mat::from_fn(n, n, |i, j| {
        let v = w.get(i, j) * corr[(i, j)];
        if v >= ENRICH_THRESHOLD {
            v
        } else {
            0.0
        }
    });
    AdjacencyMatrix::new(AdjacencyKind::Enriched, mat)
}

/// Leading singular triple of the enriched adjacency.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankOne {
    pub lambda: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl RankOne {
    /// Frobenius norm of M - lambda a b^T.
    pub fn residual(&self, m: &Mat) -> f64 {
        let mut sq = 0.0;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let r = m[(i, j)] - self.lambda * self.a[i] * self.b[j];
                sq += r * r;
            }
        }
        sq.sqrt()
    }
}

/// Best rank-1 approximation lambda * a b^T in Frobenius norm, via power
/// iteration on W*^T W* with a deterministic all-ones start. Sign convention:
/// the largest-magnitude entry of b is positive.
pub fn rank_one_decompose(w_star: &AdjacencyMatrix) -> Result<RankOne> {
    let m = w_star.mat();
    let n = w_star.n();
    if m.values().all(|v| v == 0.0) {
        return Err(Error::DegenerateGeometry(
            "rank-1 decomposition of the all-zero matrix".into(),
        ));
    }

    let mut b = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..POWER_MAX_ITERS {
        let mb = m.matvec(&b);
        let mut next = m.tr_matvec(&mb);
        let norm = norm2(&next);
        if norm == 0.0 {
            return Err(Error::DegenerateGeometry(
                "power iteration collapsed to the zero vector".into(),
            ));
        }
        for v in next.iter_mut() {
            *v /= norm;
        }
        let delta = next
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        b = next;
        if delta < POWER_TOL {
            break;
        }
    }

    // Fix the sign so the largest-magnitude entry of b is positive.
    let k = b
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.abs().partial_cmp(&y.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if b[k] < 0.0 {
        for v in b.iter_mut() {
            *v = -*v;
        }
    }

    let mb = m.matvec(&b);
    let lambda = norm2(&mb);
    if lambda <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "leading singular value is zero".into(),
        ));
    }
    let a = mb.iter().map(|v| v / lambda).collect();
    Ok(RankOne { lambda, a, b })
}

/// Min-max normalize b and map to omega_i = 1 - 0.1 * b_bar_i.
///
/// A constant b carries no disparity signal; every weight is then 1.
pub fn fairness_weights(b: &[f64]) -> Result<FairnessWeights> {
    if b.is_empty() {
        return Err(Error::input("fairness weights need at least one zone"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("rank-1 factor has non-finite entries"));
    }
    let min = b.iter().copied().fold(f64::INFINITY, f64::min);
    let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omega = if max == min {
        vec![1.0; b.len()]
    } else {
        b.iter()
            .map(|&v| 1.0 - 0.1 * ((v - min) / (max - min)))
            .collect()
    };
    FairnessWeights::new(omega)
}

/// Row-stochastic smoothing operator from W*: each row divided by its sum,
/// all-zero rows replaced by a self-loop.
pub fn normalize_adjacency(w_star: &AdjacencyMatrix) -> AdjacencyMatrix {
    let n = w_star.n();
    let mat = Mat::from_fn(n, n, |i, j| {
        let row_sum: f64 = (0..n).map(|k| w_star.get(i, k)).sum();
        if row_sum == 0.0 {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            w_star.get(i, j) / row_sum
        }
    });
    AdjacencyMatrix::new(AdjacencyKind::Normalized, mat).expect("normalized rows are nonnegative")
}
