//! Symmetric eigendecomposition and the dominant-doublet quantities:
//! doublet weights, perturbative level shifts and the renormalised splitting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::{deflate_sector, SectorBlocks};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Dense, SymmetricMatrix};

const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;
/// Resonance denominators below `DEGENERACY_GUARD · ξ` are treated as exact degeneracies.
pub const DEGENERACY_GUARD: f64 = 1e-12;

/// Ascending eigenvalues with eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Dense,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `⟨site|η_i⟩`
    #[inline]
    pub fn component(&self, site: usize, i: usize) -> f64 {
        self.vectors.get(site, i)
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k);
                }
                data[i * n + j] = acc;
            }
        }
        SymmetricMatrix::from_upper(n, data).expect("square buffer")
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps run in row-major `(p, q)` order until the off-diagonal Frobenius
/// norm drops below `1e-13 ‖A‖_F`. Each eigenvector is normalised so that its
/// largest-magnitude component (first one on ties) is positive.
pub fn eigh(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let n = a.dim();
    let mut m: Vec<f64> = a.as_slice().to_vec();
    let mut v = Dense::identity(n);
    let scale = a.frobenius();
    let threshold = JACOBI_TOL * scale;

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        s.sqrt()
    };

    let mut converged = n < 2 || off_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        converged = off_norm(&m) <= threshold;
    }
    if !converged {
        return Err(Error::ContractViolation(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Dense::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut lead = 0;
        for k in 1..n {
            if v.get(k, src).abs() > v.get(lead, src).abs() {
                lead = k;
            }
        }
        let sign = if v.get(lead, src) < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors.set(k, col, sign * v.get(k, src));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Largest squared overlap of a sector eigenvector with its pivot state, and
/// the index achieving it.
pub fn sector_weight(dec: &EigenDecomposition, pivot: usize) -> (f64, usize) {
    let mut best = (0.0, 0);
    for i in 0..dec.dim() {
        let w = dec.component(pivot, i).powi(2);
        if w > best.0 {
            best = (w, i);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubletWeights {
    pub alpha_plus: f64,
    pub idx_plus: usize,
    pub alpha_minus: f64,
    pub idx_minus: usize,
}

impl DoubletWeights {
    /// Acceptance statistic `min(α⁺, α⁻)`.
    pub fn min_weight(&self) -> f64 {
        self.alpha_plus.min(self.alpha_minus)
    }
}

pub fn doublet_weights(
    plus: &EigenDecomposition,
    minus: &EigenDecomposition,
    pivot_plus: usize,
    pivot_minus: usize,
) -> DoubletWeights {
    let (alpha_plus, idx_plus) = sector_weight(plus, pivot_plus);
    let (alpha_minus, idx_minus) = sector_weight(minus, pivot_minus);
    DoubletWeights {
        alpha_plus,
        idx_plus,
        alpha_minus,
        idx_minus,
    }
}

pub fn is_dominant_doublet(weights: &DoubletWeights, alpha: f64) -> bool {
    weights.min_weight() > alpha
}

/// Second-order shift and the closest resonance distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift {
    pub s: f64,
    pub d: f64,
}

fn projected_couplings(coupling: &[f64], sub: &EigenDecomposition) -> Result<Vec<f64>> {
    if coupling.len() != sub.dim() {
        return Err(invalid(format!(
            "coupling vector of length {} does not match sub-block dimension {}",
            coupling.len(),
            sub.dim()
        )));
    }
    Ok((0..sub.dim())
        .map(|i| {
            let proj: f64 = coupling
                .iter()
                .enumerate()
                .map(|(k, c)| c * sub.component(k, i))
                .sum();
            proj * proj
        })
        .collect())
}

fn denominators(e_pm_v: f64, sub: &EigenDecomposition, xi: f64) -> Result<Vec<f64>> {
    let guard = DEGENERACY_GUARD * xi;
    sub.values
        .iter()
        .enumerate()
        .map(|(index, &e)| {
            let gap = e_pm_v - e;
            if gap.abs() < guard {
                Err(Error::DegenerateDenominator {
                    index,
                    gap: gap.abs(),
                    guard,
                })
            } else {
                Ok(gap)
            }
        })
        .collect()
}

/// `s = Σ_i |⟨𝒱|ψ_i⟩|² / (E±V - e_i)` and `D = min_i |E±V - e_i|`.
pub fn perturbative_shift(
    e_pm_v: f64,
    coupling: &[f64],
    sub: &EigenDecomposition,
    xi: f64,
) -> Result<Shift> {
    let weights = projected_couplings(coupling, sub)?;
    let gaps = denominators(e_pm_v, sub, xi)?;
    let s = weights.iter().zip(&gaps).map(|(w, g)| w / g).sum();
    let d = gaps.iter().fold(f64::INFINITY, |acc, g| acc.min(g.abs()));
    Ok(Shift { s, d })
}

/// Degenerate-perturbation estimate of `1 - |⟨~±|±⟩|²`:
/// `(1/2) Σ_i (1 - [1 + 4|⟨𝒱|ψ_i⟩|²/(E±V - e_i)²]^{-1/2})`.
pub fn depletion_degenerate(
    e_pm_v: f64,
    coupling: &[f64],
    sub: &EigenDecomposition,
    xi: f64,
) -> Result<f64> {
    let weights = projected_couplings(coupling, sub)?;
    let gaps = denominators(e_pm_v, sub, xi)?;
    Ok(0.5
        * weights
            .iter()
            .zip(&gaps)
            .map(|(w, g)| 1.0 - 1.0 / (1.0 + 4.0 * w / (g * g)).sqrt())
            .sum::<f64>())
}

/// Non-degenerate estimate of the same depletion, `Σ_i |⟨𝒱|ψ_i⟩|²/(E±V - e_i)²`.
pub fn depletion_nondegenerate(
    e_pm_v: f64,
    coupling: &[f64],
    sub: &EigenDecomposition,
    xi: f64,
) -> Result<f64> {
    let weights = projected_couplings(coupling, sub)?;
    let gaps = denominators(e_pm_v, sub, xi)?;
    Ok(weights.iter().zip(&gaps).map(|(w, g)| w / (g * g)).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplittingTimes {
    /// `π / |E⁺ - E⁻|`
    pub t0: f64,
    /// `|2V + Δs|`
    pub renormalized: f64,
}

pub fn splitting_and_times(splitting: f64, v: f64, delta_s: f64) -> Result<SplittingTimes> {
    if !(splitting > 0.0) {
        return Err(Error::ZeroSplitting);
    }
    Ok(SplittingTimes {
        t0: PI / splitting,
        renormalized: (2.0 * v + delta_s).abs(),
    })
}

/// Per-realization doublet quantities. Shifts are `None` when a resonance
/// denominator hit the degeneracy guard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubletAnalysis {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub idx_plus: usize,
    pub idx_minus: usize,
    pub e_plus: f64,
    pub e_minus: f64,
    pub splitting: f64,
    pub e_plus_v: f64,
    pub e_minus_v: f64,
    pub s_plus: Option<f64>,
    pub s_minus: Option<f64>,
    pub delta_s: Option<f64>,
    pub coupling_norm_sq_plus: f64,
    pub coupling_norm_sq_minus: f64,
    pub d_plus: Option<f64>,
    pub d_minus: Option<f64>,
}

impl DoubletAnalysis {
    pub fn min_weight(&self) -> f64 {
        self.alpha_plus.min(self.alpha_minus)
    }

    pub fn degenerate(&self) -> bool {
        self.delta_s.is_none()
    }
}

/// Sector spectra together with the doublet analysis built on them.
#[derive(Clone, Debug)]
pub struct SectorSpectra {
    pub plus: EigenDecomposition,
    pub minus: EigenDecomposition,
    pub pivot: usize,
}

impl SectorSpectra {
    pub fn new(blocks: &SectorBlocks) -> Result<Self> {
        Ok(Self {
            plus: eigh(&blocks.plus)?,
            minus: eigh(&blocks.minus)?,
            pivot: blocks.pivot,
        })
    }

    pub fn weights(&self) -> DoubletWeights {
        doublet_weights(&self.plus, &self.minus, self.pivot, self.pivot)
    }
}

fn sector_shift(
    sector: &SymmetricMatrix,
    pivot: usize,
    xi: f64,
) -> Result<(f64, f64, Option<Shift>)> {
    let deflated = deflate_sector(sector, pivot)?;
    let norm_sq = deflated.coupling.iter().map(|c| c * c).sum();
    let shift = if deflated.sub.dim() == 0 {
        Some(Shift {
            s: 0.0,
            d: f64::INFINITY,
        })
    } else {
        let sub = eigh(&deflated.sub)?;
        match perturbative_shift(deflated.e_pm_v, &deflated.coupling, &sub, xi) {
            Ok(s) => Some(s),
            Err(Error::DegenerateDenominator { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    Ok((deflated.e_pm_v, norm_sq, shift))
}

pub fn analyze_doublet(
    blocks: &SectorBlocks,
    spectra: &SectorSpectra,
    xi: f64,
) -> Result<DoubletAnalysis> {
    let w = spectra.weights();
    let e_plus = spectra.plus.values[w.idx_plus];
    let e_minus = spectra.minus.values[w.idx_minus];
    let (e_plus_v, norm_plus, shift_plus) = sector_shift(&blocks.plus, blocks.pivot, xi)?;
    let (e_minus_v, norm_minus, shift_minus) = sector_shift(&blocks.minus, blocks.pivot, xi)?;
    let s_plus = shift_plus.map(|s| s.s);
    let s_minus = shift_minus.map(|s| s.s);
    Ok(DoubletAnalysis {
        alpha_plus: w.alpha_plus,
        alpha_minus: w.alpha_minus,
        idx_plus: w.idx_plus,
        idx_minus: w.idx_minus,
        e_plus,
        e_minus,
        splitting: (e_plus - e_minus).abs(),
        e_plus_v,
        e_minus_v,
        s_plus,
        s_minus,
        delta_s: s_plus.zip(s_minus).map(|(a, b)| a - b),
        coupling_norm_sq_plus: norm_plus,
        coupling_norm_sq_minus: norm_minus,
        d_plus: shift_plus.map(|s| s.d),
        d_minus: shift_minus.map(|s| s.d),
    })
}
