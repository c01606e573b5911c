//! Distribution-comparison metrics between a real and a generated embedding
//! set.
//!
//! Fidelity: Fréchet distance over Gaussian moments and the biased MMD
//! V-statistic (linear or RBF kernel). Diversity: improved precision/recall
//! and density/coverage over k-nearest-neighbour balls, plus their F1 means.
//!
//! kNN membership uses closed balls (`distance <= radius`). Row-parallel loops
//! reduce each row in index order and then sum rows sequentially, so results
//! do not depend on the thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::EmbeddingSet;
use crate::matrix::{dot, sq_dist, DenseMatrix};

/// Sample mean and unbiased (N−1) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    pub cov: DenseMatrix,
}

pub fn moments(e: &EmbeddingSet) -> Result<MomentSummary> {
    moments_of(&e.matrix)
}

fn moments_of(x: &DenseMatrix) -> Result<MomentSummary> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::arg(format!("covariance needs at least 2 rows, got {n}")));
    }
    let d = x.cols();
    let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n as f64).collect();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centered.t_matmul(&centered)?;
    cov.scale(1.0 / (n - 1) as f64);
    Ok(MomentSummary {
        mean,
        cov: symmetrized(&cov, d),
    })
}

fn symmetrized(a: &DenseMatrix, d: usize) -> DenseMatrix {
    let mut s = a.clone();
    for i in 0..d {
        for j in i + 1..d {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Principal square root of a symmetric positive semi-definite matrix.
/// Eigenvalues below `1e-12·max(1, λ_max)` (including negative round-off)
/// are treated as zero.
pub fn matrix_sqrt_psd(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::shape(format!("square root of a {r}x{c} matrix")));
    }
    let tol = 1e-8 * a.max_abs().max(1.0);
    for i in 0..r {
        for j in i + 1..r {
            if (a[(i, j)] - a[(j, i)]).abs() > tol {
                return Err(Error::Numeric(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    if r == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    // Entries far below round-off of the largest one carry no information.
    let negligible = f64::EPSILON * 1e-3 * a.max_abs();
    let entry = |i: usize, j: usize| {
        let v = a[(i, j)];
        if v.abs() < negligible {
            0.0
        } else {
            v
        }
    };
    // Rows and columns that vanish form a zero block with zero eigenvalues.
    // Only the remaining block is decomposed: the QR iteration can underflow
    // to non-finite eigenvalues on matrices padded with many zero rows.
    let live: Vec<usize> = (0..r).filter(|&i| (0..r).any(|j| entry(i, j) != 0.0)).collect();
    let mut out = DenseMatrix::zeros(r, r);
    if live.is_empty() {
        return Ok(out);
    }
    let n = live.len();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| entry(live[i], live[j])));
    let lambda_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = 1e-12 * lambda_max.max(1.0);
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l < floor { 0.0 } else { l.sqrt() })
        .collect();
    let v = &eig.eigenvectors;
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)]).sum();
            out[(live[i], live[j])] = s;
            out[(live[j], live[i])] = s;
        }
    }
    if !out.is_finite() {
        return Err(Error::Numeric("eigendecomposition produced non-finite values".into()));
    }
    Ok(out)
}

/// Reference-side quantities of the Fréchet distance.
#[derive(Debug, Clone)]
struct FrechetReference {
    moments: MomentSummary,
    cov_sqrt: DenseMatrix,
}

impl FrechetReference {
    fn new(x: &DenseMatrix) -> Result<Self> {
        let moments = moments_of(x)?;
        let cov_sqrt = matrix_sqrt_psd(&moments.cov)?;
        Ok(Self { moments, cov_sqrt })
    }

    fn distance_to(&self, g: &DenseMatrix) -> Result<f64> {
        let other = moments_of(g)?;
        let d = self.moments.mean.len();
        if other.mean.len() != d {
            return Err(Error::arg(format!(
                "Fréchet distance between {d}- and {}-dimensional embeddings",
                other.mean.len()
            )));
        }
        let mean_term = sq_dist(&self.moments.mean, &other.mean);
        // tr((C_r C_g)^½) = tr((C_r^½ C_g C_r^½)^½), and the latter is symmetric
        // PSD. Both orientations are averaged so that swapping the arguments
        // gives a bit-identical result.
        let other_sqrt = matrix_sqrt_psd(&other.cov)?;
        let cross_trace = |a_sqrt: &DenseMatrix, b: &DenseMatrix| -> Result<f64> {
            let inner = a_sqrt.matmul(b)?.matmul(a_sqrt)?;
            Ok(matrix_sqrt_psd(&symmetrized(&inner, d))?.trace())
        };
        let cross = 0.5
            * (cross_trace(&self.cov_sqrt, &other.cov)? + cross_trace(&other_sqrt, &self.moments.cov)?);
        let traces = self.moments.cov.trace() + other.cov.trace();
        let total = mean_term + traces - 2.0 * cross;
        Ok(total.max(0.0))
    }
}

/// `‖μ_r − μ_g‖² + Tr(C_r + C_g − 2(C_r C_g)^½)`, clamped at 0.
pub fn frechet_distance(r: &EmbeddingSet, g: &EmbeddingSet) -> Result<f64> {
    if r.dim() != g.dim() {
        return Err(Error::arg(format!(
            "Fréchet distance between {}- and {}-dimensional embeddings",
            r.dim(),
            g.dim()
        )));
    }
    FrechetReference::new(&r.matrix)?.distance_to(&g.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelConfig {
    Linear,
    /// `exp(−‖x − y‖² / (2σ²))`
    Rbf { sigma: f64 },
}

impl KernelConfig {
    fn validate(self) -> Result<()> {
        match self {
            KernelConfig::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(Error::arg(format!("RBF bandwidth {sigma} must be finite and positive")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelConfig::Linear => dot(x, y),
            KernelConfig::Rbf { sigma } => (-sq_dist(x, y) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

/// `(1/(|X||Y|)) Σ_i Σ_j k(x_i, y_j)`
fn kernel_mean(kernel: KernelConfig, x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let row_sums: Vec<f64> = (0..x.rows())
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            y.iter_rows().map(|yj| kernel.eval(xi, yj)).sum::<f64>()
        })
        .collect();
    row_sums.iter().sum::<f64>() / (x.rows() * y.rows()) as f64
}

fn check_pair(r: &DenseMatrix, g: &DenseMatrix, what: &str) -> Result<()> {
    if r.rows() == 0 || g.rows() == 0 {
        return Err(Error::arg(format!("{what} needs non-empty sets")));
    }
    if r.cols() != g.cols() {
        return Err(Error::arg(format!(
            "{what} between {}- and {}-dimensional embeddings",
            r.cols(),
            g.cols()
        )));
    }
    Ok(())
}

/// Biased MMD V-statistic; diagonal terms included.
pub fn mmd(r: &EmbeddingSet, g: &EmbeddingSet, kernel: KernelConfig) -> Result<f64> {
    kernel.validate()?;
    check_pair(&r.matrix, &g.matrix, "MMD")?;
    let rr = kernel_mean(kernel, &r.matrix, &r.matrix);
    Ok(mmd_with_reference_term(kernel, rr, &r.matrix, &g.matrix))
}

fn mmd_with_reference_term(kernel: KernelConfig, rr: f64, r: &DenseMatrix, g: &DenseMatrix) -> f64 {
    let gg = kernel_mean(kernel, g, g);
    let gr = kernel_mean(kernel, g, r);
    rr + gg - 2.0 * gr
}

/// Median pairwise Euclidean distance among rows; 1.0 when that median is 0.
pub fn rbf_sigma(r: &EmbeddingSet) -> Result<f64> {
    let x = &r.matrix;
    let n = x.rows();
    if n < 2 {
        return Err(Error::arg("bandwidth heuristic needs at least 2 rows"));
    }
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(x.row(i), x.row(j)).sqrt())
        .collect();
    dists.sort_unstable_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    Ok(if median > 0.0 { median } else { 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

#[inline]
fn distance(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// `out[i][j] = ‖a_i − b_j‖`
fn cross_distances(a: &DenseMatrix, b: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows())
        .into_par_iter()
        .map(|i| b.iter_rows().map(|bj| distance(a.row(i), bj)).collect())
        .collect()
}

fn radii_from(self_dists: &[Vec<f64>], k: usize) -> Vec<f64> {
    self_dists
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            let (_, kth, _) = others.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

fn check_k(k: usize, n: usize, side: &str) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::arg(format!(
            "k = {k} needs 1 <= k < {side} set size {n}"
        )));
    }
    Ok(())
}

/// Distance from each row to its k-th nearest other row.
pub fn knn_radii(x: &EmbeddingSet, k: usize) -> Result<Vec<f64>> {
    check_k(k, x.len(), "embedding")?;
    Ok(radii_from(&cross_distances(&x.matrix, &x.matrix), k))
}

/// Fraction of rows of the queried set (given by their distances to each
/// ball centre) lying in at least one ball.
fn fraction_covered(dists_to_centres: &[Vec<f64>], radii: &[f64]) -> f64 {
    let hits = dists_to_centres
        .iter()
        .filter(|row| row.iter().zip(radii).any(|(d, r)| d <= r))
        .count();
    hits as f64 / dists_to_centres.len() as f64
}

/// Improved precision and recall over kNN manifolds.
pub fn precision_recall(r: &EmbeddingSet, g: &EmbeddingSet, cfg: KnnConfig) -> Result<(f64, f64)> {
    check_pair(&r.matrix, &g.matrix, "precision/recall")?;
    check_k(cfg.k, r.len(), "real")?;
    check_k(cfg.k, g.len(), "generated")?;
    let real_radii = knn_radii(r, cfg.k)?;
    Ok(precision_recall_with(&r.matrix, &real_radii, &g.matrix, cfg.k))
}

fn precision_recall_with(r: &DenseMatrix, real_radii: &[f64], g: &DenseMatrix, k: usize) -> (f64, f64) {
    let gen_radii = radii_from(&cross_distances(g, g), k);
    let g_to_r = cross_distances(g, r);
    let r_to_g = cross_distances(r, g);
    (
        fraction_covered(&g_to_r, real_radii),
        fraction_covered(&r_to_g, &gen_radii),
    )
}

/// Density (unclipped, may exceed 1) and coverage.
pub fn density_coverage(r: &EmbeddingSet, g: &EmbeddingSet, cfg: KnnConfig) -> Result<(f64, f64)> {
    check_pair(&r.matrix, &g.matrix, "density/coverage")?;
    check_k(cfg.k, r.len(), "real")?;
    let real_radii = knn_radii(r, cfg.k)?;
    Ok(density_coverage_with(&r.matrix, &real_radii, &g.matrix, cfg.k))
}

fn density_coverage_with(r: &DenseMatrix, real_radii: &[f64], g: &DenseMatrix, k: usize) -> (f64, f64) {
    let g_to_r = cross_distances(g, r);
    let memberships: usize = g_to_r
        .iter()
        .map(|row| row.iter().zip(real_radii).filter(|(d, rad)| d <= rad).count())
        .sum();
    let density = memberships as f64 / (k * g.rows()) as f64;
    let covered = (0..r.rows())
        .filter(|&j| g_to_r.iter().any(|row| row[j] <= real_radii[j]))
        .count();
    (density, covered as f64 / r.rows() as f64)
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Direction of a metric's raw score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Larger means more different (distances).
    DistanceUp,
    /// Larger means more similar; oriented as `1 − min(value, 1)`.
    SimilarityDown,
}

impl Orientation {
    pub fn orient(self, raw: f64) -> f64 {
        match self {
            Orientation::DistanceUp => raw,
            Orientation::SimilarityDown => 1.0 - raw.min(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Fd,
    MmdLinear,
    MmdRbf,
    Precision,
    Recall,
    F1Pr,
    Density,
    Coverage,
    F1Dc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 9] = [
        MetricKind::Fd,
        MetricKind::MmdLinear,
        MetricKind::MmdRbf,
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::F1Pr,
        MetricKind::Density,
        MetricKind::Coverage,
        MetricKind::F1Dc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Fd => "fd",
            MetricKind::MmdLinear => "mmd-linear",
            MetricKind::MmdRbf => "mmd-rbf",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::F1Pr => "f1-pr",
            MetricKind::Density => "density",
            MetricKind::Coverage => "coverage",
            MetricKind::F1Dc => "f1-dc",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::Fd | MetricKind::MmdLinear | MetricKind::MmdRbf => Orientation::DistanceUp,
            _ => Orientation::SimilarityDown,
        }
    }

    fn needs_pr(self) -> bool {
        matches!(self, MetricKind::Precision | MetricKind::Recall | MetricKind::F1Pr)
    }

    fn needs_dc(self) -> bool {
        matches!(self, MetricKind::Density | MetricKind::Coverage | MetricKind::F1Dc)
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric: MetricKind,
    pub raw: f64,
    pub oriented: f64,
}

/// Scores at one severity level, in configured metric order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scores: Vec<MetricScore>,
}

impl MetricReport {
    pub fn get(&self, metric: MetricKind) -> Option<&MetricScore> {
        self.scores.iter().find(|s| s.metric == metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPolicy {
    /// Median pairwise distance of the real embeddings.
    #[default]
    Median,
    Fixed(f64),
}

/// Which metrics to compute and with what parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub metrics: Vec<MetricKind>,
    pub knn: KnnConfig,
    pub rbf_sigma: SigmaPolicy,
}

impl Default for MetricSuite {
    fn default() -> Self {
        Self {
            metrics: MetricKind::ALL.to_vec(),
            knn: KnnConfig::default(),
            rbf_sigma: SigmaPolicy::Median,
        }
    }
}

impl MetricSuite {
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics configured".into()));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return Err(Error::Config(format!("metric {m} listed twice")));
            }
        }
        if self.knn.k == 0 {
            return Err(Error::Config("kNN k must be at least 1".into()));
        }
        if let SigmaPolicy::Fixed(s) = self.rbf_sigma {
            KernelConfig::Rbf { sigma: s }.validate()?;
        }
        Ok(())
    }

    /// Precompute everything that depends only on the real embeddings.
    pub fn prepare(&self, real: &EmbeddingSet) -> Result<PreparedReference> {
        self.validate()?;
        let x = &real.matrix;
        let wants = |f: fn(MetricKind) -> bool| self.metrics.iter().any(|&m| f(m));
        let frechet = if self.metrics.contains(&MetricKind::Fd) {
            Some(FrechetReference::new(x)?)
        } else {
            None
        };
        let rbf = if self.metrics.contains(&MetricKind::MmdRbf) {
            let sigma = match self.rbf_sigma {
                SigmaPolicy::Median => rbf_sigma(real)?,
                SigmaPolicy::Fixed(s) => s,
            };
            let kernel = KernelConfig::Rbf { sigma };
            Some((kernel, kernel_mean(kernel, x, x)))
        } else {
            None
        };
        let linear_rr = if self.metrics.contains(&MetricKind::MmdLinear) {
            Some(kernel_mean(KernelConfig::Linear, x, x))
        } else {
            None
        };
        let real_radii = if wants(MetricKind::needs_pr) || wants(MetricKind::needs_dc) {
            Some(knn_radii(real, self.knn.k)?)
        } else {
            None
        };
        Ok(PreparedReference {
            suite: self.clone(),
            real: real.matrix.clone(),
            frechet,
            linear_rr,
            rbf,
            real_radii,
        })
    }
}

/// Metric state tied to one real embedding set.
#[derive(Debug, Clone)]
pub struct PreparedReference {
    suite: MetricSuite,
    real: DenseMatrix,
    frechet: Option<FrechetReference>,
    linear_rr: Option<f64>,
    rbf: Option<(KernelConfig, f64)>,
    real_radii: Option<Vec<f64>>,
}

impl PreparedReference {
    pub fn rbf_sigma(&self) -> Option<f64> {
        match self.rbf {
            Some((KernelConfig::Rbf { sigma }, _)) => Some(sigma),
            _ => None,
        }
    }

    /// Score a generated set against the prepared real set.
    pub fn evaluate(&self, generated: &EmbeddingSet) -> Result<MetricReport> {
        let g = &generated.matrix;
        check_pair(&self.real, g, "metric evaluation")?;
        let k = self.suite.knn.k;
        let pr = if self.suite.metrics.iter().any(|m| m.needs_pr()) {
            check_k(k, g.rows(), "generated")?;
            let radii = self.real_radii.as_deref().unwrap_or_default();
            Some(precision_recall_with(&self.real, radii, g, k))
        } else {
            None
        };
        let dc = if self.suite.metrics.iter().any(|m| m.needs_dc()) {
            let radii = self.real_radii.as_deref().unwrap_or_default();
            Some(density_coverage_with(&self.real, radii, g, k))
        } else {
            None
        };
        let (precision, recall) = pr.unwrap_or_default();
        let (density, coverage) = dc.unwrap_or_default();

        let mut scores = Vec::with_capacity(self.suite.metrics.len());
        for &metric in &self.suite.metrics {
            let raw = match metric {
                MetricKind::Fd => self
                    .frechet
                    .as_ref()
                    .ok_or_else(|| Error::Config("Fréchet reference missing".into()))?
                    .distance_to(g)?,
                MetricKind::MmdLinear => mmd_with_reference_term(
                    KernelConfig::Linear,
                    self.linear_rr.unwrap_or_default(),
                    &self.real,
                    g,
                ),
                MetricKind::MmdRbf => {
                    let (kernel, rr) = self
                        .rbf
                        .ok_or_else(|| Error::Config("RBF reference missing".into()))?;
                    mmd_with_reference_term(kernel, rr, &self.real, g)
                }
                MetricKind::Precision => precision,
                MetricKind::Recall => recall,
                MetricKind::F1Pr => f1(precision, recall),
                MetricKind::Density => density,
                MetricKind::Coverage => coverage,
                MetricKind::F1Dc => f1(density.min(1.0), coverage),
            };
            if !raw.is_finite() {
                return Err(Error::Numeric(format!("metric {metric} is not finite")));
            }
            scores.push(MetricScore {
                metric,
                raw,
                oriented: metric.orientation().orient(raw),
            });
        }
        Ok(MetricReport { scores })
    }
}
