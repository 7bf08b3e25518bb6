//! Per-class PCA models scored by Mahalanobis reconstruction error, with
//! residual-eigenvalue order selection and Hotelling T² screening.

mod eigen;
pub mod precise;

pub use eigen::{jacobi_eigen, SymmetricEigen, JACOBI_TOLERANCE};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

pub const DEFAULT_RMSE_CAP: f64 = 0.10;
pub const DEFAULT_RIDGE: f64 = 1e-8;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Where a training vector came from; kept so evaluation can refuse
/// overlapping test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub snr_db: f64,
    pub soil: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub class_label: String,
    pub vectors: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

impl TrainingSet {
    pub fn new(class_label: impl Into<String>, vectors: Vec<Vec<f64>>) -> Self {
        Self {
            class_label: class_label.into(),
            vectors,
            provenance: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub rmse_cap: f64,
    /// Ridge added to S before inversion, as a fraction of trace(S)/n.
    pub ridge: f64,
    pub confidence: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            rmse_cap: DEFAULT_RMSE_CAP,
            ridge: DEFAULT_RIDGE,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaClassModel {
    pub class_label: String,
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "precise::vec")]
    pub psi: Vec<f64>,
    /// n×m, column-major.
    #[serde(rename = "U", serialize_with = "precise::vec")]
    pub u: Vec<f64>,
    /// All n eigenvalues, descending.
    #[serde(serialize_with = "precise::vec")]
    pub eigenvalues: Vec<f64>,
    /// Row-major n×n, 1/K normalization.
    #[serde(rename = "S", serialize_with = "precise::vec")]
    pub s: Vec<f64>,
    #[serde(rename = "S_inv", serialize_with = "precise::vec")]
    pub s_inv: Vec<f64>,
    #[serde(serialize_with = "precise::scalar")]
    pub rmse_at_m: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(serialize_with = "precise::scalar")]
    pub t2_threshold: f64,
    #[serde(serialize_with = "precise::scalar")]
    pub confidence: f64,
    #[serde(serialize_with = "precise::scalar")]
    pub ridge: f64,
    /// True when no m < n met the RMSE cap.
    #[serde(default)]
    pub flagged: bool,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_label: String,
    pub reconstruction_error: f64,
    pub t_squared: f64,
    pub t_squared_threshold: f64,
}

impl ClassScore {
    pub fn exceeds_t2(&self) -> bool {
        self.t_squared > self.t_squared_threshold
    }
}

/// RMSE(m) for m = 0..=n: the share of the spectrum left out when keeping
/// the m largest eigenvalues. Negative round-off eigenvalues count as zero.
pub fn rmse_curve(eigenvalues: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    (0..=clamped.len())
        .map(|m| {
            if total > 0.0 {
                clamped[m..].iter().fold(0.0, |a, b| a + b) / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Smallest m ≥ 1 with RMSE(m) < cap, and whether none below n qualified.
pub fn select_order(eigenvalues: &[f64], rmse_cap: f64) -> (usize, bool) {
    let n = eigenvalues.len();
    let curve = rmse_curve(eigenvalues);
    match (1..n).find(|&m| curve[m] < rmse_cap) {
        Some(m) => (m, false),
        None => (n, true),
    }
}

/// Mean and 1/K covariance (row-major) of equally sized vectors.
pub fn mean_and_covariance(vectors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = vectors.len() as f64;
    let n = vectors.first().map_or(0, Vec::len);
    let mut psi = vec![0.0; n];
    for v in vectors {
        for (p, x) in psi.iter_mut().zip(v) {
            *p += x;
        }
    }
    psi.iter_mut().for_each(|p| *p /= k);
    let mut s = vec![0.0; n * n];
    for v in vectors {
        for i in 0..n {
            let di = v[i] - psi[i];
            for j in i..n {
                s[i * n + j] += di * (v[j] - psi[j]);
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let x = s[i * n + j] / k;
            s[i * n + j] = x;
            s[j * n + i] = x;
        }
    }
    (psi, s)
}

pub fn train(set: &TrainingSet, rmse_cap: f64) -> Result<PcaClassModel> {
    train_with(
        set,
        &TrainOptions {
            rmse_cap,
            ..TrainOptions::default()
        },
    )
}

pub fn train_with(set: &TrainingSet, opts: &TrainOptions) -> Result<PcaClassModel> {
    let label = &set.class_label;
    let n = set.dimension();
    let k = set.vectors.len();
    if n == 0 {
        return Err(Error::InsufficientData {
            label: label.clone(),
            k,
            needed: 1,
        });
    }
    if k < n + 1 {
        return Err(Error::InsufficientData {
            label: label.clone(),
            k,
            needed: n + 1,
        });
    }
    if let Some(bad) = set.vectors.iter().position(|v| v.len() != n) {
        return Err(Error::param(format!(
            "class {label}: vector {bad} has dimension {} but the set has {n}",
            set.vectors[bad].len()
        )));
    }
    if set.vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::param(format!("class {label}: training vectors must be finite")));
    }
    if !(opts.rmse_cap > 0.0 && opts.rmse_cap <= 1.0) {
        return Err(Error::param("rmse_cap must lie in (0, 1]"));
    }
    if !(opts.ridge > 0.0) {
        return Err(Error::param("ridge must be positive"));
    }

    let (psi, s) = mean_and_covariance(&set.vectors);
    let trace: f64 = (0..n).map(|i| s[i * n + i]).sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateModel {
            label: label.clone(),
            reason: "covariance has rank 0 (all training vectors identical)".into(),
        });
    }
    let eig = jacobi_eigen(&s, n);
    let (m, flagged) = select_order(&eig.values, opts.rmse_cap);
    let rmse_at_m = rmse_curve(&eig.values)[m];
    let u = eig.vectors[..n * m].to_vec();
    let delta = opts.ridge * trace / n as f64;
    let s_inv = eig.compose(|l| 1.0 / (l.max(0.0) + delta));
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let t2 = t2_threshold(k, m, opts.confidence)?;
    Ok(PcaClassModel {
        class_label: label.clone(),
        n,
        m,
        psi,
        u,
        eigenvalues,
        s,
        s_inv,
        rmse_at_m,
        k,
        t2_threshold: t2,
        confidence: opts.confidence,
        ridge: opts.ridge,
        flagged,
        provenance: set.provenance.clone(),
    })
}

/// Parts of a projection onto a class subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub centered: Vec<f64>,
    pub scores: Vec<f64>,
    pub residual: Vec<f64>,
}

impl PcaClassModel {
    pub fn column(&self, k: usize) -> &[f64] {
        &self.u[k * self.n..(k + 1) * self.n]
    }

    pub fn rmse_curve(&self) -> Vec<f64> {
        rmse_curve(&self.eigenvalues)
    }

    pub fn project(&self, sample: &[f64]) -> Result<Projection> {
        if sample.len() != self.n {
            return Err(Error::param(format!(
                "class {}: sample has dimension {} but the model has {}",
                self.class_label,
                sample.len(),
                self.n
            )));
        }
        let x: Vec<f64> = sample.iter().zip(&self.psi).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = (0..self.m)
            .map(|k| self.column(k).iter().zip(&x).map(|(u, v)| u * v).sum())
            .collect();
        let residual = if self.m == self.n {
            vec![0.0; self.n]
        } else {
            let mut r = x.clone();
            for (k, yk) in y.iter().enumerate() {
                for (ri, ui) in r.iter_mut().zip(self.column(k)) {
                    *ri -= yk * ui;
                }
            }
            r
        };
        Ok(Projection {
            centered: x,
            scores: y,
            residual,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let bad = |what: &str| Err(Error::Schema(format!("class {}: {what}", self.class_label)));
        if n == 0 || self.m == 0 || self.m > n {
            return bad("order m must satisfy 1 <= m <= n");
        }
        if self.psi.len() != n || self.u.len() != n * self.m || self.eigenvalues.len() != n {
            return bad("psi, U or eigenvalues have the wrong length");
        }
        if self.s.len() != n * n || self.s_inv.len() != n * n {
            return bad("S or S_inv has the wrong length");
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.psi) && finite(&self.u) && finite(&self.eigenvalues) && finite(&self.s) && finite(&self.s_inv))
        {
            return bad("non-finite entries");
        }
        if self.eigenvalues[..self.m].iter().any(|&l| !(l > 0.0)) {
            return bad("retained eigenvalues must be positive");
        }
        Ok(())
    }
}

pub fn score(model: &PcaClassModel, sample: &[f64]) -> Result<ClassScore> {
    let p = model.project(sample)?;
    let n = model.n;
    let mut eps = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += model.s_inv[i * n + j] * p.residual[j];
        }
        eps += p.residual[i] * row;
    }
    let t2: f64 = p
        .scores
        .iter()
        .zip(&model.eigenvalues)
        .map(|(y, l)| y * y / l)
        .sum();
    Ok(ClassScore {
        class_label: model.class_label.clone(),
        reconstruction_error: eps.max(0.0),
        t_squared: t2,
        t_squared_threshold: model.t2_threshold,
    })
}

/// Hotelling T² upper control limit for a model trained on K vectors with
/// m retained components: m(K−1)(K+1) / (K(K−m)) · F_conf(m, K−m).
pub fn t2_threshold(k: usize, m: usize, confidence: f64) -> Result<f64> {
    if m < 1 || k <= m {
        return Err(Error::param(format!("T² limit needs K > m >= 1, got K = {k}, m = {m}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let (kf, mf) = (k as f64, m as f64);
    let f = FisherSnedecor::new(mf, kf - mf)
        .map_err(|e| Error::param(format!("F distribution: {e}")))?
        .inverse_cdf(confidence);
    Ok(mf * (kf - 1.0) * (kf + 1.0) / (kf * (kf - mf)) * f)
}

/// Population standard deviation σ, mean μ and index of dispersion σ²/μ.
pub fn dispersion_stats(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::param("dispersion of an empty list"));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::param(format!("dispersion index undefined for mean {mu}")));
    }
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    Ok((sigma, mu, var / mu))
}
