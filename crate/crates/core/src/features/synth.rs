//! Synthetic multi-subject benchmark: class-conditional Gaussians with a
//! subject-specific mean shift and rotation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainData, LabelValue};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub epochs_per_subject: usize,
    /// Fraction of Class1 (target) epochs per subject.
    pub target_rate: f64,
    pub d_raw: usize,
    /// Scale of each subject's mean offset.
    pub shift_scale: f64,
    /// Scale of each subject's random rotation.
    pub rotation_scale: f64,
    pub noise_sigma: f64,
    /// Distance between the two shared class means.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 14,
            epochs_per_subject: 260,
            target_rate: 0.12,
            d_raw: 40,
            shift_scale: 0.5,
            rotation_scale: 0.5,
            noise_sigma: 1.0,
            class_separation: 3.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |flag: &str, msg: String| Err(Error::Config(format!("{flag}: {msg}")));
        if self.n_subjects == 0 {
            return bad("subjects", "must be at least 1".into());
        }
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return bad("target-rate", format!("must lie in (0, 1), got {}", self.target_rate));
        }
        let n = self.epochs_per_subject as f64;
        if self.target_rate * n < 2.0 || (1.0 - self.target_rate) * n < 1.0 {
            return bad(
                "target-rate",
                format!(
                    "{} epochs at rate {} do not contain both classes",
                    self.epochs_per_subject, self.target_rate
                ),
            );
        }
        if self.d_raw == 0 {
            return bad("d-raw", "must be at least 1".into());
        }
        if !(self.shift_scale >= 0.0 && self.shift_scale.is_finite()) {
            return bad("shift-scale", format!("must be >= 0, got {}", self.shift_scale));
        }
        if !(self.rotation_scale >= 0.0 && self.rotation_scale.is_finite()) {
            return bad("rotation-scale", format!("must be >= 0, got {}", self.rotation_scale));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise-sigma", format!("must be > 0, got {}", self.noise_sigma));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return bad("class-separation", format!("must be >= 0, got {}", self.class_separation));
        }
        Ok(())
    }

    pub fn subject_id(&self, s: usize) -> String {
        let width = self.n_subjects.to_string().len().max(2);
        format!("s{:0width$}", s + 1)
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Orthogonal matrix from the Cayley transform of a random skew-symmetric matrix.
fn random_rotation(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    if scale == 0.0 {
        return DMatrix::identity(d, d);
    }
    let entry_sd = scale / (d as f64).sqrt();
    let mut skew = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v: f64 = rng.sample::<f64, _>(StandardNormal) * entry_sd;
            skew[(i, j)] = v;
            skew[(j, i)] = -v;
        }
    }
    let eye = DMatrix::<f64>::identity(d, d);
    // I - A is invertible for skew-symmetric A.
    let inv = (&eye - &skew)
        .lu()
        .try_inverse()
        .expect("I - A is nonsingular for skew-symmetric A");
    inv * (eye + skew)
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Vec<DomainData>> {
    cfg.validate()?;
    let d = cfg.d_raw;
    let n = cfg.epochs_per_subject;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut direction = gaussian_vector(&mut rng, d);
    direction /= direction.norm();
    let mean_class1 = direction * cfg.class_separation;
    let mean_class2 = DVector::<f64>::zeros(d);

    let n_class1 = ((cfg.target_rate * n as f64).round() as usize).clamp(1, n - 1);

    let mut domains = Vec::with_capacity(cfg.n_subjects);
    for s in 0..cfg.n_subjects {
        // Subject parameters are drawn even at zero scale so that the noise
        // stream does not depend on the shift settings.
        let offset = gaussian_vector(&mut rng, d) * (cfg.shift_scale / (d as f64).sqrt() * 2.0);
        let rotation = random_rotation(&mut rng, d, cfg.rotation_scale);

        let mut labels: Vec<LabelValue> = (0..n)
            .map(|i| if i < n_class1 { LabelValue::Class1 } else { LabelValue::Class2 })
            .collect();
        labels.shuffle(&mut rng);

        let mut features = DMatrix::zeros(n, d);
        for (i, label) in labels.iter().enumerate() {
            let base = match label {
                LabelValue::Class1 => &mean_class1,
                _ => &mean_class2,
            };
            let latent = base + gaussian_vector(&mut rng, d) * cfg.noise_sigma;
            let x = &rotation * latent + &offset;
            features.set_row(i, &x.transpose());
        }
        domains.push(DomainData::new(cfg.subject_id(s), features, labels)?);
    }
    Ok(domains)
}
