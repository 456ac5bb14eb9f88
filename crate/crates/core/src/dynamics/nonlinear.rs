//! The hydrostatic nonlinearity `Q(f, g) = f . grad g - (int_0^z div f) d_z g`,
//! equivalently `f . grad g + w(f) d_z g` with `w(f)` the diagnostic vertical
//! velocity.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::*;
use crate::spectral::{
    analyze_even, grid_size, synthesize, vertical_velocity, Padding, Parity, VectorField, C64, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMethod {
    /// Convolution sum over all interacting triads. `O(N^6)`; the oracle.
    Direct,
    /// Products on a 3/2-padded grid.
    #[default]
    Pseudospectral,
}

/// `P_N Q(f, g)` for `f` in D0 and `f`, `g` of the same order.
pub fn nonlinear_q(f: &VectorField, g: &VectorField, method: QMethod) -> Result<VectorField> {
    if f.order() != g.order() {
        return Err(Error::InvalidArgument(format!(
            "Q needs equal orders, got {} and {}",
            f.order(),
            g.order()
        )));
    }
    match method {
        QMethod::Direct => direct(f, g),
        QMethod::Pseudospectral => pseudospectral(f, g),
    }
}

fn pseudospectral(f: &VectorField, g: &VectorField) -> Result<VectorField> {
    let w = vertical_velocity(f)?;
    let order = f.order();
    let m = grid_size(order, Padding::ThreeHalves);
    let modes = f.mode_set();
    let i_unit = C64::new(0.0, 1.0);

    // 0,1: f components; 2: w; then for each component of g: d_x, d_y, d_z
    let jobs: Vec<usize> = (0..9).collect();
    let grids: Vec<Vec<f64>> = par_iter!(jobs)
        .map(|&job| match job {
            0 | 1 => synthesize(modes, |i| f.coeffs()[i][job], Parity::Even, m),
            2 => synthesize(modes, |i| w.coeffs()[i], Parity::Odd, m),
            _ => {
                let c = (job - 3) / 3;
                match (job - 3) % 3 {
                    d @ (0 | 1) => synthesize(
                        modes,
                        |i| i_unit * modes.mode(i).kh()[d] * g.coeffs()[i][c],
                        Parity::Even,
                        m,
                    ),
                    // d_z of sqrt(2) cos(k3 z) is -k3 sqrt(2) sin(k3 z)
                    _ => synthesize(modes, |i| -modes.mode(i).kz_abs() * g.coeffs()[i][c], Parity::Odd, m),
                }
            }
        })
        .collect();

    let comps: Vec<Vec<C64>> = par_iter!([0usize, 1])
        .map(|&c| {
            let (gx, gy, gz) = (&grids[3 + 3 * c], &grids[4 + 3 * c], &grids[5 + 3 * c]);
            let q: Vec<f64> = (0..gx.len())
                .map(|p| grids[0][p] * gx[p] + grids[1][p] * gy[p] + grids[2][p] * gz[p])
                .collect();
            analyze_even(&q, m, modes)
        })
        .collect();
    let coeffs = (0..modes.len()).map(|i| [comps[0][i], comps[1][i]]).collect();
    VectorField::from_coeffs(order, coeffs)
}

/// Full-Fourier coefficients of an order-`N` field on the cube
/// `[-N, N]^3`, i.e. with the `z` cosine unfolded onto `+-k3`.
struct Unfolded {
    n: i32,
    side: usize,
    f: Vec<[C64; 2]>,
    g: Vec<[C64; 2]>,
    /// `int_0^z div f`, which is odd in `z` and has coefficient
    /// `(k'.F) / k3` at `k3 != 0`.
    i: Vec<C64>,
    points: Vec<[i32; 3]>,
}

impl Unfolded {
    fn idx(&self, a: i32, b: i32, c: i32) -> usize {
        let n = self.n;
        (((a + n) as usize * self.side) + (b + n) as usize) * self.side + (c + n) as usize
    }

    fn new(f: &VectorField, g: &VectorField) -> Self {
        let n = f.order() as i32;
        let side = (2 * n + 1) as usize;
        let mut u = Unfolded {
            n,
            side,
            f: vec![[ZERO; 2]; side.pow(3)],
            g: vec![[ZERO; 2]; side.pow(3)],
            i: vec![ZERO; side.pow(3)],
            points: Vec::new(),
        };
        for (s, mode) in f.modes().iter().enumerate() {
            let (a, b, c) = (mode.m1, mode.m2, mode.m3);
            let signs: &[i32] = if c == 0 { &[1] } else { &[1, -1] };
            let scale = if c == 0 { 1.0 } else { 1.0 / SQRT_2 };
            for &sgn in signs {
                let k = u.idx(a, b, sgn * c);
                let ff = f.coeffs()[s].map(|x| x * scale);
                u.f[k] = ff;
                u.g[k] = g.coeffs()[s].map(|x| x * scale);
                if c != 0 {
                    u.i[k] = (ff[0] * a as f64 + ff[1] * b as f64) / (sgn * c) as f64;
                }
                u.points.push([a, b, sgn * c]);
            }
        }
        u
    }

    fn contains(&self, p: [i32; 3]) -> bool {
        let r2 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as i64;
        r2 <= (self.n as i64) * (self.n as i64)
    }
}

fn direct(f: &VectorField, g: &VectorField) -> Result<VectorField> {
    let defect = f.d0_defect();
    if defect > crate::spectral::D0_TOLERANCE * f.max_abs().max(1.0) {
        return Err(Error::ContractViolation(format!(
            "Q(f, g) needs f in D0, mean divergence defect {defect:.3e}"
        )));
    }
    let u = Unfolded::new(f, g);
    let two_pi = 2.0 * std::f64::consts::PI;
    let modes = f.mode_set().clone();
    let canonical: Vec<usize> = (0..modes.len()).filter(|&s| modes.mode(s).is_canonical()).collect();

    let values: Vec<(usize, [C64; 2])> = par_iter!(canonical)
        .map(|&s| {
            let q = modes.mode(s);
            let mut acc = [ZERO; 2];
            for j in &u.points {
                let k = [q.m1 - j[0], q.m2 - j[1], q.m3 - j[2]];
                if !u.contains(k) {
                    continue;
                }
                let fj = u.f[u.idx(j[0], j[1], j[2])];
                let ij = u.i[u.idx(j[0], j[1], j[2])];
                let gk = u.g[u.idx(k[0], k[1], k[2])];
                // f . (i k') - I (i k3), all in physical wavenumbers
                let adv = fj[0] * C64::new(0.0, two_pi * k[0] as f64) + fj[1] * C64::new(0.0, two_pi * k[1] as f64)
                    - ij * C64::new(0.0, two_pi * k[2] as f64);
                for c in 0..2 {
                    acc[c] += adv * gk[c];
                }
            }
            let scale = if q.m3 == 0 { 1.0 } else { SQRT_2 };
            (s, acc.map(|a| a * scale))
        })
        .collect();

    let mut out = VectorField::zeros(f.order());
    for (s, a) in values {
        out.coeffs_mut()[s] = a;
    }
    out.mirror_from_canonical();
    Ok(out)
}
