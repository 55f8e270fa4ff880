//! Behavioral goal selection from low-density regions of the achieved-goal
//! distribution, using a Gaussian kernel density estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MegaError {
    #[error("density model has no support points")]
    EmptySupport,
    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MegaConfig {
    pub enabled: bool,
    /// Fraction of training episodes driven by a selected behavioral goal.
    pub fraction: f64,
    pub bandwidth: f64,
    pub candidates: usize,
    pub kde_support: usize,
}

impl Default for MegaConfig {
    fn default() -> Self {
        MegaConfig { enabled: false, fraction: 0.5, bandwidth: 0.5, candidates: 100, kde_support: 10_000 }
    }
}

/// Reservoir sample of achieved goals plus a kernel bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    support: Vec<Vec2>,
    capacity: usize,
    seen: u64,
    bandwidth: f64,
}

impl DensityModel {
    pub fn new(capacity: usize, bandwidth: f64) -> Result<Self, MegaError> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(MegaError::BadBandwidth(bandwidth));
        }
        Ok(DensityModel { support: Vec::new(), capacity: capacity.max(1), seen: 0, bandwidth })
    }

    /// A model whose support is exactly `points`.
    pub fn from_points(points: &[Vec2], bandwidth: f64) -> Result<Self, MegaError> {
        let mut model = DensityModel::new(points.len(), bandwidth)?;
        model.support = points.to_vec();
        model.seen = points.len() as u64;
        Ok(model)
    }

    pub fn support(&self) -> &[Vec2] {
        &self.support
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Reservoir sampling (algorithm R) keeps a uniform sample of everything observed.
    pub fn observe<R: Rng + ?Sized>(&mut self, point: Vec2, rng: &mut R) {
        self.seen += 1;
        if self.support.len() < self.capacity {
            self.support.push(point);
        } else {
            let j = rng.gen_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.support[j as usize] = point;
            }
        }
    }

    pub fn density(&self, point: Vec2) -> Result<f64, MegaError> {
        kde_density(self, point)
    }
}

/// Standard 2D Gaussian KDE averaged over the support.
pub fn kde_density(model: &DensityModel, point: Vec2) -> Result<f64, MegaError> {
    if model.support.is_empty() {
        return Err(MegaError::EmptySupport);
    }
    let h2 = model.bandwidth * model.bandwidth;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h2);
    let sum: f64 = model
        .support
        .iter()
        .map(|x| (-(point - *x).norm_sq() / (2.0 * h2)).exp())
        .sum();
    Ok(norm * sum / model.support.len() as f64)
}

/// Draws `n_candidates` goals uniformly from `archive` and returns the one of
/// lowest estimated density (first one on ties). `None` when the archive or
/// the model support is empty, in which case the caller keeps the desired goal.
pub fn select_behavioral_goal<R: Rng + ?Sized>(
    model: &DensityModel,
    archive: &[Vec2],
    n_candidates: usize,
    rng: &mut R,
) -> Option<Vec2> {
    if archive.is_empty() || model.support.is_empty() {
        return None;
    }
    let mut best: Option<(f64, Vec2)> = None;
    for _ in 0..n_candidates.max(1) {
        let candidate = archive[rng.gen_range(0..archive.len())];
        let d = kde_density(model, candidate).ok()?;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, candidate));
        }
    }
    best.map(|(_, g)| g)
}
