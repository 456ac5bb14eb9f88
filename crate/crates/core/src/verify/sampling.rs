//! Reproducible random fields for sampling estimates and building initial data.
//!
//! Each coefficient is a complex Gaussian drawn from its own ChaCha stream
//! keyed by `(seed, mode, component)`, so the field drawn at order `N` is the
//! restriction of the field drawn at any larger order with the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::spectral::{ModeIndex, SpectralField, C64};

/// Amplitude envelope applied to the Gaussian coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `exp(-mu |k|) (1 + |k|)^(-q)`
    Isotropic { mu: f64, q: f64 },
    /// `exp(-mu |k'|) (1 + |k3|)^(-q)`: analytic horizontally, Sobolev in `z`.
    HorizontalAnalytic { mu: f64, q: f64 },
}

impl Envelope {
    pub fn amplitude(&self, m: &ModeIndex) -> f64 {
        match *self {
            Envelope::Isotropic { mu, q } => {
                let k = m.k_abs();
                (-mu * k).exp() * (1.0 + k).powf(-q)
            }
            Envelope::HorizontalAnalytic { mu, q } => {
                (-mu * m.kh_abs()).exp() * (1.0 + m.kz_abs()).powf(-q)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FieldSampler {
    pub envelope: Envelope,
}

fn stream_key(m: &ModeIndex, component: usize) -> u64 {
    let a = (m.m1 + 4096) as u64;
    let b = (m.m2 + 4096) as u64;
    let c = m.m3 as u64;
    (a << 40) | (b << 24) | (c << 8) | component as u64
}

impl FieldSampler {
    pub fn new(mu: f64, q: f64) -> Self {
        Self {
            envelope: Envelope::Isotropic { mu, q },
        }
    }

    pub fn with_envelope(envelope: Envelope) -> Self {
        Self { envelope }
    }

    fn coefficient(&self, seed: u64, m: &ModeIndex, component: usize) -> C64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_key(m, component));
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let amp = self.envelope.amplitude(m) * std::f64::consts::FRAC_1_SQRT_2;
        if m.is_horizontal_mean() {
            C64::new(re * amp * std::f64::consts::SQRT_2, 0.0)
        } else {
            C64::new(re * amp, im * amp)
        }
    }

    /// Real field with independent components.
    pub fn field<const C: usize>(&self, order: usize, seed: u64) -> SpectralField<C> {
        let mut f = SpectralField::<C>::from_fn(order, |m| {
            if m.is_canonical() {
                std::array::from_fn(|c| self.coefficient(seed, &m, c))
            } else {
                [C64::new(0.0, 0.0); C]
            }
        });
        f.mirror_from_canonical();
        f
    }

    pub fn vector(&self, order: usize, seed: u64, in_d0: bool) -> SpectralField<2> {
        let f = self.field::<2>(order, seed);
        if in_d0 {
            f.project_d0()
        } else {
            f
        }
    }

    pub fn scalar(&self, order: usize, seed: u64) -> SpectralField<1> {
        self.field::<1>(order, seed)
    }
}
