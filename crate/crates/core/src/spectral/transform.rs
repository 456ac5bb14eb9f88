//! Collocation transforms between the cosine-basis coefficients and values on
//! an equispaced grid over the unit torus.
//!
//! Coefficients follow `f_hat(k) = int_{T3} exp(-i k.x) f dx`, so the
//! forward DFT is divided by `M^3` and the inverse is unscaled. Each 3D
//! transform is three passes of 1D FFTs over independent lines; lines are
//! distributed over the rayon pool when the `parallel` feature is on and
//! every line is transformed identically either way.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use super::field::{SpectralField, C64, ZERO};
use super::modes::ModeSet;
use crate::error::{Error, Result};
use crate::par::*;

/// Grid refinement relative to the minimal `(2N+2)^3` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Padding {
    /// `(2N+2)^3`: resolves every retained mode.
    None,
    /// `(3N+3)^3`: quadratic products of order-`N` fields are alias-free on
    /// the retained modes (the 2/3 rule).
    ThreeHalves,
}

pub fn grid_size(order: usize, padding: Padding) -> usize {
    match padding {
        Padding::None => 2 * order + 2,
        Padding::ThreeHalves => 3 * order + 3,
    }
}

/// Real samples of a `C`-component field on an `M^3` grid, index
/// `(i1 * M + i2) * M + i3` for the point `(i1, i2, i3) / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<const C: usize> {
    pub size: usize,
    pub padding: Padding,
    pub values: [Vec<f64>; C],
}

/// Parity of a field in `z`, which fixes how stored coefficients unfold onto
/// `k3` and `-k3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    /// `sqrt(2) cos(k3 z)` basis.
    Even,
    /// `sqrt(2) sin(k3 z)` basis.
    Odd,
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(m: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
        })
        .clone()
}

fn wrap(i: i32, m: usize) -> usize {
    i.rem_euclid(m as i32) as usize
}

/// In-place 3D FFT of an `M^3` cube.
pub(crate) fn fft3(data: &mut [C64], m: usize, inverse: bool) {
    let (fwd, inv) = plans(m);
    let plan = if inverse { inv } else { fwd };
    let plane = m * m;
    debug_assert_eq!(data.len(), plane * m);

    // axis 3: contiguous lines
    par_chunks_mut!(data, plane).for_each(|p| plan.process(p));

    // axis 2: transpose each plane, transform rows, transpose back
    par_chunks_mut!(data, plane).for_each(|p| {
        let mut t = vec![ZERO; plane];
        for i2 in 0..m {
            for i3 in 0..m {
                t[i3 * m + i2] = p[i2 * m + i3];
            }
        }
        plan.process(&mut t);
        for i2 in 0..m {
            for i3 in 0..m {
                p[i2 * m + i3] = t[i3 * m + i2];
            }
        }
    });

    // axis 1: gather pencils of stride M^2
    let mut pencils = vec![ZERO; plane * m];
    par_chunks_mut!(pencils, m).enumerate().for_each(|(j, line)| {
        for (i1, v) in line.iter_mut().enumerate() {
            *v = data[i1 * plane + j];
        }
    });
    par_chunks_mut!(pencils, plane).for_each(|p| plan.process(p));
    par_chunks_mut!(data, plane).enumerate().for_each(|(i1, p)| {
        for (j, v) in p.iter_mut().enumerate() {
            *v = pencils[j * m + i1];
        }
    });
}

/// Grid values of `sum_stored coeff(i) * basis_i` where the basis is the
/// cosine or sine family selected by `parity`.
pub(crate) fn synthesize(modes: &ModeSet, coeff: impl Fn(usize) -> C64, parity: Parity, m: usize) -> Vec<f64> {
    let mut spec = vec![ZERO; m * m * m];
    let idx = |a: i32, b: i32, c: i32| (wrap(a, m) * m + wrap(b, m)) * m + wrap(c, m);
    for (i, mode) in modes.modes().iter().enumerate() {
        let a = coeff(i);
        if a == ZERO {
            continue;
        }
        match (parity, mode.m3) {
            (Parity::Even, 0) => spec[idx(mode.m1, mode.m2, 0)] += a,
            (Parity::Odd, 0) => {}
            (Parity::Even, k3) => {
                let h = a * FRAC_1_SQRT_2;
                spec[idx(mode.m1, mode.m2, k3)] += h;
                spec[idx(mode.m1, mode.m2, -k3)] += h;
            }
            (Parity::Odd, k3) => {
                // sqrt(2) sin(k3 z) = (e^{ik3z} - e^{-ik3z}) / (i sqrt(2))
                let h = a * C64::new(0.0, -FRAC_1_SQRT_2);
                spec[idx(mode.m1, mode.m2, k3)] += h;
                spec[idx(mode.m1, mode.m2, -k3)] -= h;
            }
        }
    }
    fft3(&mut spec, m, true);
    spec.into_iter().map(|c| c.re).collect()
}

/// Cosine-basis coefficients (on the canonical half, mirrored) of real grid
/// values. Only the even-in-`z` part of the data survives.
pub(crate) fn analyze_even(values: &[f64], m: usize, modes: &ModeSet) -> Vec<C64> {
    let mut spec: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft3(&mut spec, m, false);
    let scale = 1.0 / (m * m * m) as f64;
    let at = |a: i32, b: i32, c: i32| spec[(wrap(a, m) * m + wrap(b, m)) * m + wrap(c, m)] * scale;
    let mut out = vec![ZERO; modes.len()];
    for (i, mode) in modes.modes().iter().enumerate() {
        if !mode.is_canonical() {
            continue;
        }
        let a = if mode.m3 == 0 {
            at(mode.m1, mode.m2, 0)
        } else {
            (at(mode.m1, mode.m2, mode.m3) + at(mode.m1, mode.m2, -mode.m3)) * FRAC_1_SQRT_2
        };
        let p = modes.partner_index(i);
        if p == i {
            out[i] = C64::new(a.re, 0.0);
        } else {
            out[i] = a;
            out[p] = a.conj();
        }
    }
    out
}

const REALITY_TOLERANCE: f64 = 1e-12;

pub fn to_grid<const C: usize>(field: &SpectralField<C>, padding: Padding) -> Result<GridField<C>> {
    if field.reality_defect() > REALITY_TOLERANCE * field.max_abs().max(1.0) {
        return Err(Error::InvalidArgument(
            "field does not satisfy the reality condition".into(),
        ));
    }
    let m = grid_size(field.order(), padding);
    let modes = field.mode_set();
    let values = std::array::from_fn(|c| synthesize(modes, |i| field.coeffs()[i][c], Parity::Even, m));
    Ok(GridField {
        size: m,
        padding,
        values,
    })
}

pub fn to_spectral<const C: usize>(grid: &GridField<C>, order: usize) -> Result<SpectralField<C>> {
    let expected = grid_size(order, grid.padding);
    if grid.size != expected {
        return Err(Error::InvalidArgument(format!(
            "grid of size {} does not match order {order} with padding {:?} (expected {expected})",
            grid.size, grid.padding
        )));
    }
    if grid.values.iter().any(|v| v.len() != expected.pow(3)) {
        return Err(Error::InvalidArgument("grid value array has the wrong length".into()));
    }
    let modes = ModeSet::shared(order);
    let comps: Vec<Vec<C64>> = grid
        .values
        .iter()
        .map(|v| analyze_even(v, grid.size, &modes))
        .collect();
    let coeffs = (0..modes.len())
        .map(|i| std::array::from_fn(|c| comps[c][i]))
        .collect();
    SpectralField::from_coeffs(order, coeffs)
}

/// Pointwise product of two scalar fields, computed without aliasing and
/// without truncation: the result lives at order `f.order() + g.order()`.
pub fn product(f: &SpectralField<1>, g: &SpectralField<1>) -> SpectralField<1> {
    let order = f.order() + g.order();
    let m = grid_size(order, Padding::None);
    let a = synthesize(f.mode_set(), |i| f.coeffs()[i][0], Parity::Even, m);
    let b = synthesize(g.mode_set(), |i| g.coeffs()[i][0], Parity::Even, m);
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let modes = ModeSet::shared(order);
    let coeffs = analyze_even(&ab, m, &modes).into_iter().map(|c| [c]).collect();
    SpectralField::from_coeffs(order, coeffs).expect("length matches mode set")
}
