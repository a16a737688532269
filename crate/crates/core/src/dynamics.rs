//! Single-excitation unitary dynamics from an eigendecomposition.
//!
//! The output amplitude is `⟨out|e^{-iHt}|in⟩ = Σ_k c_k e^{-iE_k t}` with
//! real weights `c_k`. [`TransitionSpectrum`] stores the pairs `(E_k, c_k)`,
//! built either from the full spectrum or from the two symmetry sectors.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::spectral::EigenDecomposition;

const MIN_GRID: usize = 4096;
const MAX_GRID: usize = 1 << 22;
/// Grid points per period of the fastest beat frequency.
const POINTS_PER_PERIOD: f64 = 16.0;
const REFINE_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-9;
const RESYNC_EVERY: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSpectrum {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TransitionSpectrum {
    pub fn from_full(dec: &EigenDecomposition, in_index: usize, out_index: usize) -> Self {
        let weights = (0..dec.dim())
            .map(|k| dec.component(out_index, k) * dec.component(in_index, k))
            .collect();
        Self {
            energies: dec.values.clone(),
            weights,
        }
    }

    /// Sector form: `(1/2)(Σ w⁺ e^{-iE⁺t} - Σ w⁻ e^{-iE⁻t})` with
    /// `w± = |⟨η±_k|±⟩|²`.
    pub fn from_sectors(
        plus: &EigenDecomposition,
        minus: &EigenDecomposition,
        pivot_plus: usize,
        pivot_minus: usize,
    ) -> Self {
        let mut energies = Vec::with_capacity(plus.dim() + minus.dim());
        let mut weights = Vec::with_capacity(plus.dim() + minus.dim());
        for k in 0..plus.dim() {
            energies.push(plus.values[k]);
            weights.push(0.5 * plus.component(pivot_plus, k).powi(2));
        }
        for k in 0..minus.dim() {
            energies.push(minus.values[k]);
            weights.push(-0.5 * minus.component(pivot_minus, k).powi(2));
        }
        Self { energies, weights }
    }

    pub fn amplitude(&self, t: f64) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (e, c) in self.energies.iter().zip(&self.weights) {
            let (s, co) = (e * t).sin_cos();
            re += c * co;
            im -= c * s;
        }
        (re, im)
    }

    pub fn population(&self, t: f64) -> f64 {
        let (re, im) = self.amplitude(t);
        re * re + im * im
    }

    /// Energy range, which bounds every beat frequency in the population.
    pub fn bandwidth(&self) -> f64 {
        let lo = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo).max(0.0)
    }

    /// Populations on a uniform grid `t_j = j·dt`, by phase recurrence with
    /// periodic exact resynchronisation.
    pub fn population_grid(&self, dt: f64, points: usize) -> Vec<f64> {
        let k = self.energies.len();
        let steps: Vec<(f64, f64)> = self
            .energies
            .iter()
            .map(|e| {
                let (s, c) = (e * dt).sin_cos();
                (c, -s)
            })
            .collect();
        let mut phase = vec![(1.0, 0.0); k];
        let mut out = Vec::with_capacity(points);
        for j in 0..points {
            if j % RESYNC_EVERY == 0 {
                let t = j as f64 * dt;
                for (p, e) in phase.iter_mut().zip(&self.energies) {
                    let (s, c) = (e * t).sin_cos();
                    *p = (c, -s);
                }
            }
            let mut re = 0.0;
            let mut im = 0.0;
            for (p, w) in phase.iter().zip(&self.weights) {
                re += w * p.0;
                im += w * p.1;
            }
            out.push(re * re + im * im);
            for (p, st) in phase.iter_mut().zip(&steps) {
                *p = (p.0 * st.0 - p.1 * st.1, p.0 * st.1 + p.1 * st.0);
            }
        }
        out
    }

    /// Infinite-time average of the population. Weights of levels closer than
    /// `degeneracy_tol` are merged before squaring, which is the exact average
    /// for degenerate spectra too. Returns the average and whether any merge
    /// happened.
    pub fn time_average(&self, degeneracy_tol: f64) -> (f64, bool) {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]).then(a.cmp(&b)));
        let mut total = 0.0;
        let mut merged = false;
        let mut i = 0;
        while i < order.len() {
            let mut acc = self.weights[order[i]];
            let mut j = i + 1;
            while j < order.len()
                && self.energies[order[j]] - self.energies[order[j - 1]] < degeneracy_tol
            {
                acc += self.weights[order[j]];
                merged = true;
                j += 1;
            }
            total += acc * acc;
            i = j;
        }
        (total, merged)
    }
}

/// `|⟨out|e^{-iHt}|in⟩|²`
pub fn output_population(dec: &EigenDecomposition, in_index: usize, out_index: usize, t: f64) -> f64 {
    TransitionSpectrum::from_full(dec, in_index, out_index).population(t)
}

/// Site amplitudes `⟨j|e^{-iHt}|in⟩` as `(re, im)` pairs.
pub fn evolve(dec: &EigenDecomposition, in_index: usize, t: f64) -> Vec<(f64, f64)> {
    let n = dec.dim();
    (0..n)
        .map(|j| {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..n {
                let c = dec.component(j, k) * dec.component(in_index, k);
                let (s, co) = (dec.values[k] * t).sin_cos();
                re += c * co;
                im -= c * s;
            }
            (re, im)
        })
        .collect()
}

/// Output population trace computed in the sector representation.
pub fn sector_efficiency(
    plus: &EigenDecomposition,
    minus: &EigenDecomposition,
    pivot_plus: usize,
    pivot_minus: usize,
    times: &[f64],
) -> Vec<f64> {
    let spec = TransitionSpectrum::from_sectors(plus, minus, pivot_plus, pivot_minus);
    times.iter().map(|&t| spec.population(t)).collect()
}

/// `T_R = π / 2V`
pub fn rabi_time(v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(format!("direct coupling must be positive (got {v})")));
    }
    Ok(PI / (2.0 * v))
}

/// `p_H = Σ_k |⟨out|η_k⟩⟨η_k|in⟩|²`
pub fn time_avg_output(dec: &EigenDecomposition, in_index: usize, out_index: usize) -> f64 {
    (0..dec.dim())
        .map(|k| (dec.component(out_index, k) * dec.component(in_index, k)).powi(2))
        .sum()
}

/// Maximum of the output population over a time interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakSearch {
    pub p: f64,
    pub t: f64,
}

fn golden_max(spec: &TransitionSpectrum, mut a: f64, mut b: f64, tol: f64) -> PeakSearch {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = spec.population(c);
    let mut fd = spec.population(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = spec.population(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = spec.population(d);
        }
    }
    let mut best = PeakSearch { p: fc, t: c };
    for t in [a, d, b] {
        let p = spec.population(t);
        if p > best.p {
            best = PeakSearch { p, t };
        }
    }
    best
}

/// Global maximum over `[0, horizon]`: a uniform grid resolving the fastest
/// beat frequency, then golden-section refinement of every grid local
/// maximum. Among refined maxima within `1e-9` of the best value the earliest
/// wins.
pub fn max_population(spec: &TransitionSpectrum, horizon: f64, time_scale: f64) -> PeakSearch {
    let wanted = (POINTS_PER_PERIOD * horizon * spec.bandwidth() / (2.0 * PI)).ceil();
    let points = if wanted.is_finite() {
        (wanted as usize).clamp(MIN_GRID, MAX_GRID)
    } else {
        MAX_GRID
    };
    let dt = horizon / (points - 1) as f64;
    let grid = spec.population_grid(dt, points);
    let tol = REFINE_TOL * time_scale;

    let mut candidates: Vec<PeakSearch> = Vec::new();
    for j in 0..points {
        let left = if j == 0 { f64::NEG_INFINITY } else { grid[j - 1] };
        let right = if j + 1 == points { f64::NEG_INFINITY } else { grid[j + 1] };
        if grid[j] >= left && grid[j] >= right && grid[j] > 0.0 {
            let a = if j == 0 { 0.0 } else { (j - 1) as f64 * dt };
            let b = if j + 1 == points { horizon } else { (j + 1) as f64 * dt };
            let refined = golden_max(spec, a, b, tol);
            let grid_pt = PeakSearch {
                p: grid[j],
                t: j as f64 * dt,
            };
            candidates.push(if refined.p >= grid_pt.p { refined } else { grid_pt });
        }
    }
    let best = candidates.iter().map(|c| c.p).fold(0.0, f64::max);
    candidates
        .into_iter()
        .filter(|c| c.p >= best - TIE_TOL)
        .min_by(|a, b| a.t.total_cmp(&b.t))
        .unwrap_or(PeakSearch { p: 0.0, t: 0.0 })
}

/// Windowed and restricted transfer efficiencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferEfficiency {
    /// Maximum over `[0, window_factor·T_R]` and its earliest maximizer.
    pub window: PeakSearch,
    /// Maximum over `[0, T_R]` and its earliest maximizer.
    pub restricted: PeakSearch,
}

pub fn transfer_efficiency_spectrum(
    spec: &TransitionSpectrum,
    t_rabi: f64,
    window_factor: f64,
) -> Result<TransferEfficiency> {
    if !(window_factor >= 1.0) {
        return Err(invalid(format!(
            "window_factor must be at least 1 (got {window_factor})"
        )));
    }
    if !(t_rabi > 0.0 && t_rabi.is_finite()) {
        return Err(invalid(format!("Rabi time must be positive (got {t_rabi})")));
    }
    let restricted = max_population(spec, t_rabi, t_rabi);
    let mut window = max_population(spec, window_factor * t_rabi, t_rabi);
    // The restricted interval is part of the window, so its peak competes
    // under the same earliest-maximizer rule.
    if restricted.p > window.p || (restricted.p >= window.p - TIE_TOL && restricted.t < window.t) {
        window = restricted;
    }
    Ok(TransferEfficiency { window, restricted })
}

pub fn transfer_efficiency(
    dec: &EigenDecomposition,
    in_index: usize,
    out_index: usize,
    t_rabi: f64,
    window_factor: f64,
) -> Result<TransferEfficiency> {
    let spec = TransitionSpectrum::from_full(dec, in_index, out_index);
    transfer_efficiency_spectrum(&spec, t_rabi, window_factor)
}

#[cfg(test)]
mod tests;
