//! Monte Carlo driver: sampling, post-selection, per-realization records and
//! run summaries.

pub mod experiments;
pub mod io;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::dynamics::{rabi_time, transfer_efficiency_spectrum, TransitionSpectrum};
use crate::ensemble::{
    block_diagonalize, conditioned_acceptance_rate, sample_dominant_doublet,
    sample_goe_centrosymmetric, sample_plain_goe, CentroHamiltonian, EnsembleConfig, Mode,
    Network, Sampler, SectorBlocks,
};
use crate::error::Result;
use crate::par::Execution;
use crate::rng::substream;
use crate::spectral::{
    analyze_doublet, eigh, is_dominant_doublet, sector_weight, DoubletAnalysis, SectorSpectra,
    DEGENERACY_GUARD,
};
use crate::theory;

pub use stats::{FitResult, Histogram};

/// Bit set in [`TransferRecord::degeneracy_flag`] when a perturbative
/// denominator hit the degeneracy guard.
pub const FLAG_PERTURBATIVE: u32 = 1;
/// Bit set when the spectrum has (near-)degenerate levels.
pub const FLAG_DEGENERATE_SPECTRUM: u32 = 2;

/// Raw draws evaluated per batch in rejection mode. Fixed so that results do
/// not depend on the worker count.
const REJECTION_CHUNK: u64 = 4096;

/// One accepted realization. Sector quantities are NaN for plain GOE runs.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferRecord {
    pub realization_index: u64,
    pub n: usize,
    pub xi: f64,
    pub alpha_threshold: f64,
    pub e: f64,
    pub v: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub splitting: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub delta_s: f64,
    pub coupling_norm_sq_plus: f64,
    pub coupling_norm_sq_minus: f64,
    pub p_h_restricted: f64,
    pub p_h_window: f64,
    pub t: f64,
    pub t_r: f64,
    pub ratio_dynamical: f64,
    pub ratio_spectral: f64,
    pub p_h: f64,
    pub degeneracy_flag: u32,
}

impl TransferRecord {
    /// Transfer efficiency over the benchmark window.
    pub fn efficiency(&self) -> f64 {
        self.p_h_window
    }

    pub fn alpha_eff(&self) -> f64 {
        self.alpha_plus.min(self.alpha_minus)
    }

    /// `(‖𝒱⁺‖² + ‖𝒱⁻‖²) / 2`
    pub fn coupling_norm_sq(&self) -> f64 {
        0.5 * (self.coupling_norm_sq_plus + self.coupling_norm_sq_minus)
    }
}

fn finish_record(
    index: u64,
    config: &EnsembleConfig,
    e: f64,
    v: f64,
    spectrum: &TransitionSpectrum,
    analysis: Option<&DoubletAnalysis>,
) -> Result<TransferRecord> {
    let t_r = rabi_time(v)?;
    let eff = transfer_efficiency_spectrum(spectrum, t_r, config.window_factor)?;
    let (p_h, merged) = spectrum.time_average(DEGENERACY_GUARD * config.xi);
    let mut flag = if merged { FLAG_DEGENERATE_SPECTRUM } else { 0 };
    let nan = f64::NAN;
    let mut rec = TransferRecord {
        realization_index: index,
        n: config.n,
        xi: config.xi,
        alpha_threshold: config.alpha,
        e,
        v,
        alpha_plus: nan,
        alpha_minus: nan,
        e_plus: nan,
        e_minus: nan,
        splitting: nan,
        s_plus: nan,
        s_minus: nan,
        delta_s: nan,
        coupling_norm_sq_plus: nan,
        coupling_norm_sq_minus: nan,
        p_h_restricted: eff.restricted.p,
        p_h_window: eff.window.p,
        t: eff.window.t,
        t_r,
        ratio_dynamical: if eff.window.t > 0.0 {
            t_r / eff.window.t
        } else {
            f64::INFINITY
        },
        ratio_spectral: nan,
        p_h,
        degeneracy_flag: 0,
    };
    if let Some(a) = analysis {
        if a.degenerate() {
            flag |= FLAG_PERTURBATIVE;
        }
        rec.alpha_plus = a.alpha_plus;
        rec.alpha_minus = a.alpha_minus;
        rec.e_plus = a.e_plus;
        rec.e_minus = a.e_minus;
        rec.splitting = a.splitting;
        rec.s_plus = a.s_plus.unwrap_or(nan);
        rec.s_minus = a.s_minus.unwrap_or(nan);
        rec.delta_s = a.delta_s.unwrap_or(nan);
        rec.coupling_norm_sq_plus = a.coupling_norm_sq_plus;
        rec.coupling_norm_sq_minus = a.coupling_norm_sq_minus;
        rec.ratio_spectral = a.splitting / (2.0 * v);
    }
    rec.degeneracy_flag = flag;
    Ok(rec)
}

/// A centrosymmetric realization with its sector data computed.
#[derive(Clone, Debug)]
pub struct CentroRealization {
    pub index: u64,
    pub hamiltonian: CentroHamiltonian,
    pub blocks: SectorBlocks,
    pub spectra: SectorSpectra,
}

impl CentroRealization {
    pub fn new(index: u64, hamiltonian: CentroHamiltonian) -> Result<Self> {
        let blocks = block_diagonalize(&hamiltonian)?;
        let spectra = SectorSpectra::new(&blocks)?;
        Ok(Self {
            index,
            hamiltonian,
            blocks,
            spectra,
        })
    }

    pub fn analysis(&self, xi: f64) -> Result<DoubletAnalysis> {
        analyze_doublet(&self.blocks, &self.spectra, xi)
    }

    pub fn record(&self, config: &EnsembleConfig) -> Result<TransferRecord> {
        let analysis = self.analysis(config.xi)?;
        let spectrum = TransitionSpectrum::from_sectors(
            &self.spectra.plus,
            &self.spectra.minus,
            self.spectra.pivot,
            self.spectra.pivot,
        );
        finish_record(
            self.index,
            config,
            self.hamiltonian.e,
            self.hamiltonian.v,
            &spectrum,
            Some(&analysis),
        )
    }
}

pub fn plain_record(index: u64, net: &Network, config: &EnsembleConfig) -> Result<TransferRecord> {
    let dec = eigh(&net.matrix)?;
    let spectrum = TransitionSpectrum::from_full(&dec, net.in_index, net.out_index);
    finish_record(index, config, net.e, net.v, &spectrum, None)
}

/// Counters describing how the accepted realizations were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub sampler: String,
    /// Raw draws (rejection) or sector-pair proposals (conditioned).
    pub n_sampled: u64,
    pub n_accepted: u64,
    pub acceptance_rate: f64,
    pub acceptance_rate_stderr: f64,
    pub partial: bool,
}

/// Draws accepted centrosymmetric realizations and maps each through `f`.
///
/// Realization `r` always uses substream `r` of the master seed, so the
/// output depends only on the configuration.
pub fn collect_centro<T, F>(
    config: &EnsembleConfig,
    exec: Execution,
    f: F,
) -> Result<(Vec<T>, SamplingStats)>
where
    T: Send,
    F: Fn(&CentroRealization) -> Result<T> + Sync + Send,
{
    config.validate()?;
    let seed = config.master_seed;
    let target = config.n_target;
    match (config.mode, config.effective_sampler()) {
        (Mode::PlainGoe, _) => Err(crate::error::invalid(
            "plain_goe runs have no symmetry sectors",
        )),
        (Mode::Centrosymmetric, _) => {
            let out: Result<Vec<T>> = exec
                .map(0..target, |r| {
                    let h = sample_goe_centrosymmetric(config, &mut substream(seed, r));
                    f(&CentroRealization::new(r, h)?)
                })
                .into_iter()
                .collect();
            Ok((
                out?,
                SamplingStats {
                    sampler: "direct".into(),
                    n_sampled: target,
                    n_accepted: target,
                    acceptance_rate: 1.0,
                    acceptance_rate_stderr: 0.0,
                    partial: false,
                },
            ))
        }
        (Mode::DominantDoublet, Sampler::Conditioned) => {
            let draws: Result<Vec<(T, u64)>> = exec
                .map(0..target, |r| {
                    let draw = sample_dominant_doublet(config, &mut substream(seed, r))?;
                    let real = CentroRealization::new(r, draw.hamiltonian)?;
                    Ok((f(&real)?, draw.attempts))
                })
                .into_iter()
                .collect();
            let draws = draws?;
            let attempts: u64 = draws.iter().map(|d| d.1).sum();
            let q = if attempts > 0 {
                target as f64 / attempts as f64
            } else {
                0.0
            };
            let q_err = if attempts > 0 {
                (q * (1.0 - q) / attempts as f64).sqrt()
            } else {
                0.0
            };
            let rate = conditioned_acceptance_rate(config.n, config.alpha, q)?;
            let rate_err = if q > 0.0 { rate * q_err / q } else { 0.0 };
            Ok((
                draws.into_iter().map(|d| d.0).collect(),
                SamplingStats {
                    sampler: "conditioned".into(),
                    n_sampled: attempts,
                    n_accepted: target,
                    acceptance_rate: rate,
                    acceptance_rate_stderr: rate_err,
                    partial: false,
                },
            ))
        }
        (Mode::DominantDoublet, _) => collect_rejection(config, exec, f),
    }
}

fn collect_rejection<T, F>(
    config: &EnsembleConfig,
    exec: Execution,
    f: F,
) -> Result<(Vec<T>, SamplingStats)>
where
    T: Send,
    F: Fn(&CentroRealization) -> Result<T> + Sync + Send,
{
    let seed = config.master_seed;
    let target = config.n_target as usize;
    let budget = config.raw_budget();
    let mut accepted: Vec<T> = Vec::with_capacity(target);
    let mut next = 0u64;
    let mut n_sampled = 0u64;
    while accepted.len() < target && next < budget {
        let end = (next + REJECTION_CHUNK).min(budget);
        let batch: Vec<Option<Result<T>>> = exec.map(next..end, |r| {
            let h = sample_goe_centrosymmetric(config, &mut substream(seed, r));
            // Cheap screen on the + sector before touching the − sector.
            let blocks = match block_diagonalize(&h) {
                Ok(b) => b,
                Err(e) => return Some(Err(e)),
            };
            let plus = match eigh(&blocks.plus) {
                Ok(d) => d,
                Err(e) => return Some(Err(e)),
            };
            if sector_weight(&plus, blocks.pivot).0 <= config.alpha {
                return None;
            }
            let minus = match eigh(&blocks.minus) {
                Ok(d) => d,
                Err(e) => return Some(Err(e)),
            };
            let spectra = SectorSpectra {
                plus,
                minus,
                pivot: blocks.pivot,
            };
            if !is_dominant_doublet(&spectra.weights(), config.alpha) {
                return None;
            }
            let real = CentroRealization {
                index: r,
                hamiltonian: h,
                blocks,
                spectra,
            };
            Some(f(&real))
        });
        for (offset, item) in batch.into_iter().enumerate() {
            if accepted.len() == target {
                break;
            }
            n_sampled = next + offset as u64 + 1;
            if let Some(res) = item {
                accepted.push(res?);
            }
        }
        next = end;
    }
    let partial = accepted.len() < target;
    if partial {
        log::warn!(
            "sample budget of {budget} raw draws exhausted with {} of {target} realizations accepted",
            accepted.len()
        );
    }
    let n_accepted = accepted.len() as u64;
    let k = n_accepted as f64;
    let rate = if n_sampled > 0 { k / n_sampled as f64 } else { 0.0 };
    let rate_err = if n_sampled > 0 {
        (rate * (1.0 - rate) / n_sampled as f64).sqrt()
    } else {
        0.0
    };
    Ok((
        accepted,
        SamplingStats {
            sampler: "rejection".into(),
            n_sampled,
            n_accepted,
            acceptance_rate: rate,
            acceptance_rate_stderr: rate_err,
            partial,
        },
    ))
}

/// Plain GOE draws mapped through `f`; every draw is accepted.
pub fn collect_plain<T, F>(
    config: &EnsembleConfig,
    exec: Execution,
    f: F,
) -> Result<(Vec<T>, SamplingStats)>
where
    T: Send,
    F: Fn(u64, &Network) -> Result<T> + Sync + Send,
{
    config.validate()?;
    let seed = config.master_seed;
    let out: Result<Vec<T>> = exec
        .map(0..config.n_target, |r| {
            f(r, &sample_plain_goe(config.n, config.xi, &mut substream(seed, r)))
        })
        .into_iter()
        .collect();
    Ok((
        out?,
        SamplingStats {
            sampler: "direct".into(),
            n_sampled: config.n_target,
            n_accepted: config.n_target,
            acceptance_rate: 1.0,
            acceptance_rate_stderr: 0.0,
            partial: false,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: EnsembleConfig,
    pub seed: u64,
    pub sampling: SamplingStats,
    pub n_sampled: u64,
    pub n_accepted: u64,
    pub acceptance_rate: f64,
    /// Empirical ⟨‖𝒱‖²⟩ (centrosymmetric modes only).
    pub mean_coupling_norm_sq: Option<f64>,
    /// KS distance of `|E⁺-E⁻|/2V` against the annealed transfer-time law
    /// built from `mean_coupling_norm_sq`.
    pub ks_ratio_spectral: Option<f64>,
    /// `P(𝒫_H > 2α - 1)` with 𝒫_H taken over the full window.
    pub frac_efficient: Option<f64>,
    pub frac_efficient_stderr: Option<f64>,
    /// `P(T_R/t > 1)` from the time search.
    pub frac_fast: Option<f64>,
    pub frac_fast_stderr: Option<f64>,
    /// `P(|E⁺-E⁻|/2V > 1)`.
    pub frac_fast_spectral: Option<f64>,
    /// Published arctan form of `P(T_R/t > 1)`.
    pub theory_lower_bound: Option<f64>,
    /// Tail mass of the transfer-time law above 1.
    pub theory_prob_fast: Option<f64>,
    pub mean_p_h: Option<f64>,
    pub degenerate_records: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl RunSummary {
    /// Builds the summary from records alone; the result does not depend on
    /// record order.
    pub fn from_records(
        config: &EnsembleConfig,
        records: &[TransferRecord],
        sampling: &SamplingStats,
    ) -> Self {
        let finite = |xs: Vec<f64>| -> Vec<f64> { xs.into_iter().filter(|x| !x.is_nan()).collect() };
        let couplings = finite(records.iter().map(|r| r.coupling_norm_sq()).collect());
        let ratios = finite(records.iter().map(|r| r.ratio_spectral).collect());
        let efficiencies: Vec<f64> = records.iter().map(|r| r.p_h_window).collect();
        let dynamical: Vec<f64> = records.iter().map(|r| r.ratio_dynamical).collect();
        let p_h: Vec<f64> = records.iter().map(|r| r.p_h).collect();

        let mean_coupling = stats::stable_mean(&couplings);
        let bound = 2.0 * config.alpha - 1.0;
        let eff = stats::fraction(&efficiencies, |p| p > bound);
        let fast = stats::fraction(&dynamical, |x| x > 1.0);
        let fast_spec = stats::fraction(&ratios, |x| x > 1.0);

        let law = mean_coupling
            .filter(|_| config.n >= 4)
            .and_then(|v2| theory::transfer_time_dist(config.n, config.xi, v2).ok());
        let ks = law
            .as_ref()
            .and_then(|d| stats::ks_statistic(&ratios, |x| d.cdf(x)).ok());
        let (lower, prob) = match (mean_coupling, config.n >= 4) {
            (Some(v2), true) if v2 > 0.0 => (
                theory::prob_faster_than_rabi(config.n, config.xi, v2).ok(),
                theory::prob_faster_than_rabi_integral(config.n, config.xi, v2).ok(),
            ),
            _ => (None, None),
        };
        RunSummary {
            config: config.clone(),
            seed: config.master_seed,
            sampling: sampling.clone(),
            n_sampled: sampling.n_sampled,
            n_accepted: records.len() as u64,
            acceptance_rate: sampling.acceptance_rate,
            mean_coupling_norm_sq: mean_coupling,
            ks_ratio_spectral: ks,
            frac_efficient: eff.map(|e| e.0),
            frac_efficient_stderr: eff.map(|e| e.1),
            frac_fast: fast.map(|e| e.0),
            frac_fast_stderr: fast.map(|e| e.1),
            frac_fast_spectral: fast_spec.map(|e| e.0),
            theory_lower_bound: lower,
            theory_prob_fast: prob,
            mean_p_h: stats::stable_mean(&p_h),
            degenerate_records: records.iter().filter(|r| r.degeneracy_flag != 0).count() as u64,
            elapsed_seconds: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<TransferRecord>,
    pub summary: RunSummary,
}

/// Samples until `n_target` realizations are accepted (or the raw-draw budget
/// runs out) and simulates each one.
pub fn run_ensemble(config: &EnsembleConfig, exec: Execution) -> Result<RunOutput> {
    let (records, sampling) = match config.mode {
        Mode::PlainGoe => collect_plain(config, exec, |r, net| plain_record(r, net, config))?,
        _ => collect_centro(config, exec, |real| real.record(config))?,
    };
    let summary = RunSummary::from_records(config, &records, &sampling);
    Ok(RunOutput { records, summary })
}
