//! Four-class 2-D source/target generator.
//!
//! Classes 1 and 2 are Gaussian blobs that drift slightly between domains,
//! class 3 is a blob that moves far, and class 4 is a noisy half-moon that is
//! both translated and rotated. Sampling uses [`PortableRng`] so the output is
//! identical on every platform for a given seed.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DomainTag};
use crate::numerics::DenseMatrix;

/// Seedable generator with a fixed, documented algorithm: ChaCha8 keyed by
/// `seed_from_u64`, uniforms from the top 53 bits of each `u64` draw (offset
/// by half an ulp so they lie in the open interval (0, 1)), and standard
/// normals from the cosine branch of the Box–Muller transform.
#[derive(Debug, Clone)]
pub struct PortableRng {
    inner: ChaCha8Rng,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw in (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub samples_per_class: usize,
    /// Translation of classes 1 and 2 between domains (along the diagonal).
    pub shift_small: f64,
    /// Translation of class 3 between domains.
    pub shift_large: f64,
    /// Direction (radians from the first axis) of the class-3 translation.
    pub shift_large_angle: f64,
    /// Translation of the class-4 moon between domains.
    pub moon_shift: f64,
    /// Direction (radians from the first axis) of the moon translation.
    pub moon_shift_angle: f64,
    /// Rotation (radians) of the class-4 moon about its centre in the target.
    pub moon_rotation: f64,
    pub moon_radius: f64,
    pub moon_noise: f64,
    /// Standard deviation of the Gaussian blobs.
    pub cluster_std: f64,
    /// Distance between neighbouring class centres in the source domain.
    pub spacing: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples_per_class: 100,
            shift_small: 0.95,
            shift_large: 3.36,
            shift_large_angle: 1.28,
            moon_shift: 1.73,
            moon_shift_angle: -0.78,
            moon_rotation: 0.91,
            moon_radius: 2.0,
            moon_noise: 0.25,
            cluster_std: 0.6,
            spacing: 4.0,
        }
    }
}

impl SyntheticConfig {
    /// Same geometry with every source/target discrepancy switched off.
    pub fn without_shift(mut self) -> Self {
        self.shift_small = 0.0;
        self.shift_large = 0.0;
        self.moon_shift = 0.0;
        self.moon_rotation = 0.0;
        self
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.samples_per_class < 4 {
            return Err(DataError::InvalidSynthetic("samples_per_class must be at least 4".into()));
        }
        let positive = [
            ("moon_radius", self.moon_radius),
            ("moon_noise", self.moon_noise),
            ("cluster_std", self.cluster_std),
            ("spacing", self.spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DataError::InvalidSynthetic(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("shift_small", self.shift_small),
            ("shift_large_angle", self.shift_large_angle),
            ("moon_shift_angle", self.moon_shift_angle),
            ("shift_large", self.shift_large),
            ("moon_shift", self.moon_shift),
            ("moon_rotation", self.moon_rotation),
        ] {
            if !v.is_finite() {
                return Err(DataError::InvalidSynthetic(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

fn blob(rng: &mut PortableRng, centre: [f64; 2], std: f64, out: &mut Vec<f64>) {
    out.push(centre[0] + std * rng.gaussian());
    out.push(centre[1] + std * rng.gaussian());
}

fn moon_point(
    rng: &mut PortableRng,
    cfg: &SyntheticConfig,
    centre: [f64; 2],
    rotation: f64,
    out: &mut Vec<f64>,
) {
    // upper half circle, opening downwards
    let t = rng.uniform_range(0.0, std::f64::consts::PI);
    let px = cfg.moon_radius * t.cos() + cfg.moon_noise * rng.gaussian();
    let py = cfg.moon_radius * t.sin() + cfg.moon_noise * rng.gaussian() - 0.5 * cfg.moon_radius;
    let (s, c) = rotation.sin_cos();
    out.push(centre[0] + c * px - s * py);
    out.push(centre[1] + s * px + c * py);
}

fn domain(rng: &mut PortableRng, cfg: &SyntheticConfig, target: bool) -> (Vec<f64>, Vec<usize>) {
    let sp = cfg.spacing;
    let pick = |v: f64| if target { v } else { 0.0 };
    let small = pick(cfg.shift_small) / std::f64::consts::SQRT_2;
    let (s3, c3) = cfg.shift_large_angle.sin_cos();
    let (s4, c4) = cfg.moon_shift_angle.sin_cos();
    let large = pick(cfg.shift_large);
    let moon = pick(cfg.moon_shift);
    let centres = [
        [small, small],
        [sp + small, small],
        [large * c3, sp + large * s3],
    ];
    let moon_centre = [sp + moon * c4, sp + 0.5 * cfg.moon_radius + moon * s4];
    let n = cfg.samples_per_class;
    let mut points = Vec::with_capacity(8 * n);
    let mut labels = Vec::with_capacity(4 * n);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..n {
            blob(rng, *centre, cfg.cluster_std, &mut points);
            labels.push(c + 1);
        }
    }
    for _ in 0..n {
        moon_point(rng, cfg, moon_centre, pick(cfg.moon_rotation), &mut points);
        labels.push(4);
    }
    (points, labels)
}

/// Draws a labeled source and target domain. Both carry ground-truth labels;
/// the target's are for evaluation only.
pub fn make_synthetic(cfg: &SyntheticConfig) -> Result<(Dataset, Dataset), DataError> {
    cfg.validate()?;
    let mut rng = PortableRng::new(cfg.seed);
    let (xs, ys) = domain(&mut rng, cfg, false);
    let (xt, yt) = domain(&mut rng, cfg, true);
    let source = Dataset::new(
        "synthetic-source",
        DomainTag::Source,
        DenseMatrix::from_column_slice(2, ys.len(), &xs),
        Some(ys),
    )?;
    let target = Dataset::new(
        "synthetic-target",
        DomainTag::Target,
        DenseMatrix::from_column_slice(2, yt.len(), &xt),
        Some(yt),
    )?;
    Ok((source, target))
}
