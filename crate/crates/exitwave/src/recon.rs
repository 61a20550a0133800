//! Framework-free training mathematics: phase-component parameterization
//! and metrics, random-phase error baselines, adaptive learning rate
//! clipping (ALRC), GAN / cycle-consistency losses, and learning-rate
//! schedules.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReconError {
    #[error("amplitude must be non-negative, found {0}")]
    NegativeAmplitude(f64),
    #[error("phase pair has a pixel with both components below {eps}")]
    ZeroVector { eps: f64 },
    #[error("shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("loss must be non-negative and finite, got {0}")]
    NegativeLoss(f64),
    #[error("iteration {iteration} outside [0, {i_max}]")]
    BadIteration { iteration: usize, i_max: usize },
}

/// Predicted phase as separate cos/sin channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    pub cos_component: Array2<f64>,
    pub sin_component: Array2<f64>,
}

impl PhasePair {
    pub fn dim(&self) -> (usize, usize) {
        self.cos_component.dim()
    }

    fn check_shape(&self, other: &Self) -> Result<(), ReconError> {
        if self.dim() != other.dim() || self.sin_component.dim() != self.dim() {
            return Err(ReconError::ShapeMismatch {
                a: self.dim(),
                b: other.dim(),
            });
        }
        Ok(())
    }
}

/// Split a phase field into (cos theta, sin theta) channels; the
/// amplitude passes through unchanged (it must be non-negative).
pub fn phase_to_components(
    theta: &Array2<f64>,
    amplitude: &Array2<f64>,
) -> Result<(PhasePair, Array2<f64>), ReconError> {
    if let Some(&bad) = amplitude.iter().find(|a| **a < 0.0) {
        return Err(ReconError::NegativeAmplitude(bad));
    }
    Ok((
        PhasePair {
            cos_component: theta.map(|t| t.cos()),
            sin_component: theta.map(|t| t.sin()),
        },
        amplitude.clone(),
    ))
}

/// psi = A (cos theta + i sin theta).
pub fn components_to_wave(
    amplitude: &Array2<f64>,
    pair: &PhasePair,
) -> Result<Array2<Complex64>, ReconError> {
    if amplitude.dim() != pair.dim() {
        return Err(ReconError::ShapeMismatch {
            a: amplitude.dim(),
            b: pair.dim(),
        });
    }
    if let Some(&bad) = amplitude.iter().find(|a| **a < 0.0) {
        return Err(ReconError::NegativeAmplitude(bad));
    }
    Ok(ndarray::Zip::from(amplitude)
        .and(&pair.cos_component)
        .and(&pair.sin_component)
        .map_collect(|&a, &c, &s| Complex64::new(a * c, a * s)))
}

/// Guard below which a (cos, sin) pair counts as the zero vector.
pub const NORMALIZE_EPSILON: f64 = 1e-12;

/// Channelwise L2 normalization imposing cos^2 + sin^2 = 1 per pixel.
pub fn l2_normalize_pair(pair: &PhasePair) -> Result<PhasePair, ReconError> {
    let mut cos = pair.cos_component.clone();
    let mut sin = pair.sin_component.clone();
    for (c, s) in cos.iter_mut().zip(sin.iter_mut()) {
        let norm = (*c * *c + *s * *s).sqrt();
        if norm < NORMALIZE_EPSILON {
            return Err(ReconError::ZeroVector {
                eps: NORMALIZE_EPSILON,
            });
        }
        *c /= norm;
        *s /= norm;
    }
    Ok(PhasePair {
        cos_component: cos,
        sin_component: sin,
    })
}

/// Mean absolute error over both channels and all pixels.
pub fn phase_component_mae(predicted: &PhasePair, truth: &PhasePair) -> Result<f64, ReconError> {
    predicted.check_shape(truth)?;
    let n = 2 * predicted.cos_component.len();
    let sum: f64 = predicted
        .cos_component
        .iter()
        .zip(truth.cos_component.iter())
        .chain(predicted.sin_component.iter().zip(truth.sin_component.iter()))
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Analytic random-phase baseline: E|x - g(theta)|, E|x - g(theta)|^2,
/// and the implied standard deviation, for x ~ U[-1, 1] and theta
/// uniform on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineMoments {
    pub mean: f64,
    pub mean_square: f64,
    pub std: f64,
}

pub fn random_phase_baseline_moments() -> BaselineMoments {
    let mean = 0.75;
    let mean_square = 5.0 / 6.0;
    BaselineMoments {
        mean,
        mean_square,
        std: (mean_square - mean * mean).sqrt(),
    }
}

/// Monte-Carlo estimate of the same moments with `samples` draws.
pub fn random_phase_baseline_monte_carlo(samples: usize, seed: u64) -> BaselineMoments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let d = (x - theta.cos()).abs();
        sum += d;
        sum_sq += d * d;
    }
    let n = samples as f64;
    let mean = sum / n;
    let mean_square = sum_sq / n;
    BaselineMoments {
        mean,
        mean_square,
        std: (mean_square - mean * mean).max(0.0).sqrt(),
    }
}

/// The reference pipeline multiplies MSEs by this factor before ALRC.
pub const MSE_LOSS_SCALE: f64 = 10.0;

/// Whether ALRC updates its running moments with the raw loss before or
/// after computing the clip threshold for that loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlrcOrdering {
    /// Clip against the current threshold, then fold the raw loss into
    /// the moments.
    #[default]
    UpdateAfterClip,
    /// Fold the raw loss into the moments first, then clip against the
    /// refreshed threshold.
    UpdateBeforeClip,
}

/// Adaptive learning rate clipping state: running raw moments of the
/// loss stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlrcState {
    pub mu1: f64,
    pub mu2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub n_sigma: f64,
    pub ordering: AlrcOrdering,
}

impl Default for AlrcState {
    fn default() -> Self {
        Self {
            mu1: 25.0,
            mu2: 30.0,
            beta1: 0.999,
            beta2: 0.999,
            n_sigma: 3.0,
            ordering: AlrcOrdering::UpdateAfterClip,
        }
    }
}

impl AlrcState {
    /// T = mu1 + n_sigma * sqrt(max(mu2 - mu1^2, 0)).
    pub fn threshold(&self) -> f64 {
        self.mu1 + self.n_sigma * (self.mu2 - self.mu1 * self.mu1).max(0.0).sqrt()
    }

    fn update(&mut self, loss: f64) {
        self.mu1 = self.beta1 * self.mu1 + (1.0 - self.beta1) * loss;
        self.mu2 = self.beta2 * self.mu2 + (1.0 - self.beta2) * loss * loss;
    }
}

/// Clip one loss against the adaptive threshold; returns the clipped
/// loss and the advanced state.
pub fn alrc_apply(loss: f64, state: &AlrcState) -> Result<(f64, AlrcState), ReconError> {
    if !loss.is_finite() || loss < 0.0 {
        return Err(ReconError::NegativeLoss(loss));
    }
    let mut next = *state;
    let clipped = match state.ordering {
        AlrcOrdering::UpdateAfterClip => {
            let t = next.threshold();
            next.update(loss);
            loss.min(t)
        }
        AlrcOrdering::UpdateBeforeClip => {
            next.update(loss);
            loss.min(next.threshold())
        }
    };
    Ok((clipped, next))
}

/// Least-squares GAN losses:
/// L_D = (d_real - 1)^2 + d_fake^2, L_G = (d_fake - 1)^2.
pub fn gan_losses(d_real: f64, d_fake: f64) -> (f64, f64) {
    let l_d = (d_real - 1.0) * (d_real - 1.0) + d_fake * d_fake;
    let l_g = (d_fake - 1.0) * (d_fake - 1.0);
    (l_d, l_g)
}

/// eta_D' = eta_D / (1 + exp(-m (mu_D - c))), defaults m = 20, c = 0.5.
pub fn discriminator_lr(eta_d: f64, mu_d: f64, m: f64, c: f64) -> f64 {
    eta_d / (1.0 + (-m * (mu_d - c)).exp())
}

/// eta_0 * factor^floor(iteration / (i_max / steps)).
pub fn stepwise_lr(
    eta_0: f64,
    iteration: usize,
    i_max: usize,
    factor: f64,
    steps: usize,
) -> Result<f64, ReconError> {
    if iteration > i_max || i_max == 0 {
        return Err(ReconError::BadIteration { iteration, i_max });
    }
    let period = i_max as f64 / steps as f64;
    let exponent = (iteration as f64 / period).floor();
    Ok(eta_0 * factor.powf(exponent))
}

/// Appendix-style cycle-consistency losses.
///
/// L_D = d_real^2 + (d_fake - 1)^2 and
/// L_G = d_fake^2 + lambda * mean((recon_a - recon_b)^2).
pub fn cycle_losses(
    d_real: f64,
    d_fake: f64,
    recon_a: &Array2<f64>,
    recon_b: &Array2<f64>,
    lambda: f64,
) -> Result<(f64, f64), ReconError> {
    if recon_a.dim() != recon_b.dim() {
        return Err(ReconError::ShapeMismatch {
            a: recon_a.dim(),
            b: recon_b.dim(),
        });
    }
    let msd = recon_a
        .iter()
        .zip(recon_b.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / recon_a.len() as f64;
    let l_d = d_real * d_real + (d_fake - 1.0) * (d_fake - 1.0);
    let l_g = d_fake * d_fake + lambda * msd;
    Ok((l_d, l_g))
}

/// CTF-preserving spectrum division: FT^-1(FT(field) / c'), with bins
/// where |c'| < 1e-6 zeroed instead of divided.
pub fn ctf_preserving_divide(
    field: &Array2<Complex64>,
    ctf_spectrum: &Array2<Complex64>,
) -> Result<Array2<Complex64>, ReconError> {
    if field.dim() != ctf_spectrum.dim() {
        return Err(ReconError::ShapeMismatch {
            a: field.dim(),
            b: ctf_spectrum.dim(),
        });
    }
    let mut spectrum = crate::fft::fft2(field);
    spectrum.zip_mut_with(ctf_spectrum, |s, c| {
        if c.norm() < 1e-6 {
            *s = Complex64::new(0.0, 0.0);
        } else {
            *s /= c;
        }
    });
    Ok(crate::fft::ifft2(&spectrum))
}
