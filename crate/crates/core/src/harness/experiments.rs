//! Experiments built on the ensemble driver: spectral cusp, efficiency
//! scaling across ensembles, the α-versus-coupling fit and plot data for the
//! transfer-time histogram.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stats::{self, FitResult, Histogram};
use super::{collect_centro, run_ensemble, RunSummary, SamplingStats, TransferRecord};
use crate::ensemble::{deflate_sector, EnsembleConfig, Mode};
use crate::error::{invalid, Result};
use crate::par::Execution;
use crate::rng::derive_seed;
use crate::spectral::eigh;
use crate::theory;

/// Radius of the semicircle for the `(N/2 - 1)`-dimensional sector bulk.
pub fn sub_block_radius(n: usize, xi: f64) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * xi * ((half - 1.0) / half).sqrt()
}

/// Normalized semicircle density of radius `radius`.
pub fn semicircle_density(x: f64, radius: f64) -> f64 {
    if x.abs() >= radius {
        return 0.0;
    }
    2.0 / (PI * radius * radius) * (radius * radius - x * x).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CuspResult {
    pub histogram: Histogram,
    pub sampling: SamplingStats,
    /// The fixed value of `E + V`.
    pub target: f64,
    pub density_at_target: f64,
    pub semicircle_at_target: f64,
    /// Distance between the density maxima on either side of the target.
    pub cusp_width: Option<f64>,
    pub delta_loc: f64,
}

/// Histogram of the `+` sector bulk eigenvalues `e⁺_i` of accepted
/// realizations with `E + V` pinned to `config.fixed_e_plus_v`.
pub fn dos_cusp_experiment(
    config: &EnsembleConfig,
    exec: Execution,
    bins: Option<usize>,
) -> Result<CuspResult> {
    let target = config
        .fixed_e_plus_v
        .ok_or_else(|| invalid("the cusp experiment needs fixed_E_plus_V"))?;
    if config.mode == Mode::PlainGoe {
        return Err(invalid("the cusp experiment needs a centrosymmetric mode"));
    }
    let (levels, sampling) = collect_centro(config, exec, |real| {
        let d = deflate_sector(&real.blocks.plus, real.blocks.pivot)?;
        Ok(eigh(&d.sub)?.values)
    })?;
    let flat: Vec<f64> = levels.into_iter().flatten().collect();
    let radius = sub_block_radius(config.n, config.xi);
    let (data_lo, data_hi) = flat
        .iter()
        .fold((target.min(-radius), target.max(radius)), |(a, b), &x| (a.min(x), b.max(x)));
    let pad = 0.05 * radius;
    let (lo, hi) = (data_lo - pad, data_hi + pad);
    let histogram = match bins {
        Some(b) => Histogram::uniform(&flat, lo, hi, b)?,
        None if flat.is_empty() => Histogram::uniform(&flat, lo, hi, 1)?,
        None => Histogram::freedman_diaconis(&flat, Some((lo, hi)))?,
    };
    let density_at_target = histogram
        .bin_of(target)
        .map(|k| histogram.density[k])
        .unwrap_or(0.0);
    let centers = histogram.centers();
    let peak = |range: &mut dyn Iterator<Item = usize>| {
        range
            .max_by(|&a, &b| histogram.density[a].total_cmp(&histogram.density[b]).then(b.cmp(&a)))
            .map(|k| centers[k])
    };
    let left = peak(&mut (0..centers.len()).filter(|&k| centers[k] < target));
    let right = peak(&mut (0..centers.len()).filter(|&k| centers[k] > target));
    Ok(CuspResult {
        semicircle_at_target: semicircle_density(target, radius),
        density_at_target,
        cusp_width: left.zip(right).map(|(l, r)| r - l),
        delta_loc: theory::delta_loc(config.n, config.xi)?,
        target,
        histogram,
        sampling,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCell {
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: Mode,
    pub n_accepted: u64,
    pub n_sampled: u64,
    pub partial: bool,
    pub frac_efficient: f64,
    pub frac_efficient_stderr: f64,
    pub frac_fast: f64,
    pub frac_fast_stderr: f64,
    pub mean_coupling_norm_sq: Option<f64>,
    /// Published lower bound on `P(𝒫_H > 2α - 1)` for this cell's coupling.
    pub theory_lower_bound: Option<f64>,
    pub acceptance_rate: f64,
    pub acceptance_rate_stderr: f64,
}

fn mode_tag(mode: Mode) -> u64 {
    match mode {
        Mode::PlainGoe => 1,
        Mode::Centrosymmetric => 2,
        Mode::DominantDoublet => 3,
    }
}

/// Seed used for the `(N, mode)` cell of a scan.
pub fn cell_seed(master_seed: u64, n: usize, mode: Mode) -> u64 {
    derive_seed(master_seed, ((n as u64) << 8) | mode_tag(mode))
}

/// `P(𝒫_H > 2α - 1)` per system size and ensemble.
pub fn scaling_experiment(
    template: &EnsembleConfig,
    ns: &[usize],
    modes: &[Mode],
    exec: Execution,
) -> Result<Vec<ScalingCell>> {
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("system sizes must be strictly ascending"));
    }
    let mut cells = Vec::with_capacity(ns.len() * modes.len());
    for &n in ns {
        for &mode in modes {
            let mut config = template.clone();
            config.n = n;
            config.mode = mode;
            config.master_seed = cell_seed(template.master_seed, n, mode);
            let out = run_ensemble(&config, exec)?;
            cells.push(cell_from_summary(&out.summary));
        }
    }
    Ok(cells)
}

fn cell_from_summary(s: &RunSummary) -> ScalingCell {
    ScalingCell {
        n: s.config.n,
        mode: s.config.mode,
        n_accepted: s.n_accepted,
        n_sampled: s.n_sampled,
        partial: s.sampling.partial,
        frac_efficient: s.frac_efficient.unwrap_or(f64::NAN),
        frac_efficient_stderr: s.frac_efficient_stderr.unwrap_or(f64::NAN),
        frac_fast: s.frac_fast.unwrap_or(f64::NAN),
        frac_fast_stderr: s.frac_fast_stderr.unwrap_or(f64::NAN),
        mean_coupling_norm_sq: s.mean_coupling_norm_sq,
        theory_lower_bound: s.theory_lower_bound,
        acceptance_rate: s.sampling.acceptance_rate,
        acceptance_rate_stderr: s.sampling.acceptance_rate_stderr,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub xi: f64,
    pub alpha: f64,
    pub coupling_norm_sq_mean: f64,
    pub coupling_norm_sq_stderr: f64,
    /// `⟨‖𝒱‖²⟩ / ξ²`
    pub r: f64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitProtocol {
    pub points: Vec<FitPoint>,
    pub fit: FitResult,
    /// `(C - 2/π) / stderr_C`
    pub z_two_over_pi: f64,
}

/// The scan: α from 0.99 down to 0.80 at N = 14, ξ = 2, plus α from 0.94 to
/// 0.99 at N = 10, ξ = 20. Entries are `(N, ξ, α)`.
pub fn fit_scan() -> Vec<(usize, f64, f64)> {
    let mut scan: Vec<(usize, f64, f64)> = (0..20)
        .map(|k| (14, 2.0, (99 - k) as f64 / 100.0))
        .collect();
    scan.extend((94..=99).map(|a| (10, 20.0, a as f64 / 100.0)));
    scan
}

/// Measures ⟨‖𝒱‖²⟩ at one `(N, ξ, α)` point.
pub fn coupling_point(config: &EnsembleConfig, exec: Execution) -> Result<FitPoint> {
    let (norms, sampling) = collect_centro(config, exec, |real| {
        let p = deflate_sector(&real.blocks.plus, real.blocks.pivot)?;
        let m = deflate_sector(&real.blocks.minus, real.blocks.pivot)?;
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        Ok(0.5 * (sq(&p.coupling) + sq(&m.coupling)))
    })?;
    let mean = stats::stable_mean(&norms).ok_or_else(|| invalid("no accepted realizations"))?;
    let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
        / (norms.len().saturating_sub(1).max(1)) as f64;
    Ok(FitPoint {
        n: config.n,
        xi: config.xi,
        alpha: config.alpha,
        coupling_norm_sq_mean: mean,
        coupling_norm_sq_stderr: (var / norms.len() as f64).sqrt(),
        r: mean / (config.xi * config.xi),
        samples: sampling.n_accepted,
    })
}

pub fn fit_protocol(
    scan: &[(usize, f64, f64)],
    per_point: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<FitProtocol> {
    let mut points = Vec::with_capacity(scan.len());
    for (k, &(n, xi, alpha)) in scan.iter().enumerate() {
        let mut config = EnsembleConfig::new(n, xi, alpha, derive_seed(master_seed, k as u64), Mode::DominantDoublet);
        config.n_target = per_point;
        points.push(coupling_point(&config, exec)?);
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.r, p.alpha)).collect();
    let fit = stats::fit_alpha_vs_coupling(&pairs)?;
    let z = (fit.c - 2.0 / PI) / fit.stderr_c;
    Ok(FitProtocol {
        points,
        fit,
        z_two_over_pi: z,
    })
}

/// Histogram densities of `T_R/t` (spectral and dynamical) with the annealed
/// theory curve evaluated at bin centres. Densities are normalised by the
/// total record count, so they are directly comparable with the theory pdf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPlot {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub spectral: Vec<f64>,
    pub dynamical: Vec<f64>,
    pub theory: Vec<f64>,
    pub coupling_norm_sq_mean: f64,
}

pub fn ratio_plot_data(
    records: &[TransferRecord],
    window_factor: f64,
    bins: Option<usize>,
) -> Result<RatioPlot> {
    let first = records.first().ok_or_else(|| invalid("no records to plot"))?;
    let spectral: Vec<f64> = records.iter().map(|r| r.ratio_spectral).collect();
    let dynamical: Vec<f64> = records.iter().map(|r| r.ratio_dynamical).collect();
    let couplings: Vec<f64> = records
        .iter()
        .map(TransferRecord::coupling_norm_sq)
        .filter(|x| x.is_finite())
        .collect();
    let v2 = stats::stable_mean(&couplings)
        .ok_or_else(|| invalid("records carry no sector data"))?;
    let lo = 1.0 / window_factor;
    let hi = 20.0;
    let finite_spec: Vec<f64> = spectral.iter().copied().filter(|x| x.is_finite()).collect();
    let shape = match bins {
        Some(b) => Histogram::uniform(&finite_spec, lo, hi, b)?,
        None => Histogram::freedman_diaconis(&finite_spec, Some((lo, hi)))?,
    };
    let edges = shape.edges.clone();
    let total = records.len() as f64;
    let density = |xs: &[f64]| -> Result<Vec<f64>> {
        let h = Histogram::with_edges(xs, edges.clone())?;
        Ok(h
            .counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
            .collect())
    };
    let law = theory::transfer_time_dist(first.n, first.xi, v2)?;
    let centers = shape.centers();
    Ok(RatioPlot {
        theory: centers.iter().map(|&x| law.pdf(x)).collect(),
        spectral: density(&spectral)?,
        dynamical: density(&dynamical)?,
        centers,
        edges,
        coupling_norm_sq_mean: v2,
    })
}
