use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Generator for trajectory `index` of an ensemble with `master_seed`: the
/// master seed picks the key and the index picks an independent ChaCha
/// stream, so the draw of a trajectory does not depend on scheduling.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// `m_w` independent `N(0, dt)` samples.
pub fn wiener_increments(m_w: usize, dt: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("Wiener increment needs dt > 0, got {dt}")));
    }
    let sd = dt.sqrt();
    Ok((0..m_w)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        })
        .collect())
}

/// Supplier of Brownian increments for consecutive steps.
pub trait NoiseSource {
    fn next_increment(&mut self, dt: f64) -> Result<Vec<f64>>;
}

pub struct RngNoise {
    pub rng: ChaCha8Rng,
    pub m_w: usize,
}

impl RngNoise {
    pub fn new(rng: ChaCha8Rng, m_w: usize) -> Self {
        Self { rng, m_w }
    }
}

impl NoiseSource for RngNoise {
    fn next_increment(&mut self, dt: f64) -> Result<Vec<f64>> {
        if self.m_w == 0 {
            return Ok(Vec::new());
        }
        wiener_increments(self.m_w, dt, &mut self.rng)
    }
}

/// A pre-sampled Brownian path on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub increments: Vec<Vec<f64>>,
}

impl BrownianPath {
    pub fn sample(m_w: usize, dt: f64, steps: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let increments = (0..steps)
            .map(|_| {
                if m_w == 0 {
                    Ok(Vec::new())
                } else {
                    wiener_increments(m_w, dt, rng)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { dt, increments })
    }

    /// The same path on a grid twice as coarse: consecutive pairs of
    /// increments are summed. A trailing odd increment is dropped.
    pub fn coarsen(&self) -> Self {
        let increments = self
            .increments
            .chunks_exact(2)
            .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| a + b).collect())
            .collect();
        Self {
            dt: 2.0 * self.dt,
            increments,
        }
    }

    pub fn source(&self) -> PathNoise<'_> {
        PathNoise { path: self, pos: 0 }
    }
}

pub struct PathNoise<'a> {
    path: &'a BrownianPath,
    pos: usize,
}

impl NoiseSource for PathNoise<'_> {
    fn next_increment(&mut self, dt: f64) -> Result<Vec<f64>> {
        if (dt - self.path.dt).abs() > 1e-9 * self.path.dt {
            return Err(Error::InvalidArgument(format!(
                "path sampled at dt = {}, stepped with {dt}",
                self.path.dt
            )));
        }
        let inc = self
            .path
            .increments
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument("Brownian path exhausted".into()))?;
        self.pos += 1;
        Ok(inc)
    }
}
