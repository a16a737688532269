//! Centrosymmetric GOE sampling, in/out identification and the reduction to
//! the two symmetry sectors.
//!
//! Site indices are 0-based. Sampled Hamiltonians are always relabelled so
//! that `in = 0` and `out = N - 1`; the exchange matrix maps `i ↦ N - 1 - i`.

mod conditioned;

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Dense, SymmetricMatrix};
use crate::rng::normal;

pub use conditioned::{conditioned_acceptance_rate, sample_dominant_doublet, ConditionedDraw};

/// Relative mirror asymmetry tolerated by [`block_diagonalize`].
const CENTRO_TOL: f64 = 1e-12;

/// Index map of the exchange matrix `J`.
pub fn exchange_matrix(n: usize) -> Result<Vec<usize>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid(format!("N must be even and at least 2 (got {n})")));
    }
    Ok((0..n).map(|i| n - 1 - i).collect())
}

pub fn apply_exchange(x: &[f64]) -> Vec<f64> {
    x.iter().rev().copied().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PlainGoe,
    Centrosymmetric,
    #[default]
    DominantDoublet,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::PlainGoe => "plain_goe",
            Mode::Centrosymmetric => "centrosymmetric",
            Mode::DominantDoublet => "dominant_doublet",
        }
    }
}

/// How dominant-doublet realizations are produced.
///
/// `Rejection` samples the centrosymmetric ensemble and discards failures.
/// `Conditioned` draws directly from the post-selected law (see
/// [`sample_dominant_doublet`]); it cannot honour the fixed-value overrides.
/// `Auto` picks `Conditioned` unless an override is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Auto,
    Rejection,
    Conditioned,
}

fn default_window_factor() -> f64 {
    1.7
}

fn default_alpha() -> f64 {
    0.95
}

fn default_xi() -> f64 {
    2.0
}

fn default_n_target() -> u64 {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_window_factor")]
    pub window_factor: f64,
    #[serde(default = "default_n_target")]
    pub n_target: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, rename = "fixed_E_plus_V")]
    pub fixed_e_plus_v: Option<f64>,
    #[serde(default, rename = "fixed_V_star")]
    pub fixed_v_star: Option<f64>,
    #[serde(default)]
    pub sampler: Sampler,
    /// Raw-draw budget for rejection sampling; defaults to `10⁴ · n_target`.
    #[serde(default)]
    pub max_raw_draws: Option<u64>,
}

impl EnsembleConfig {
    pub fn new(n: usize, xi: f64, alpha: f64, master_seed: u64, mode: Mode) -> Self {
        Self {
            n,
            xi,
            alpha,
            master_seed,
            window_factor: default_window_factor(),
            n_target: default_n_target(),
            mode,
            fixed_e_plus_v: None,
            fixed_v_star: None,
            sampler: Sampler::Auto,
            max_raw_draws: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return Err(invalid(format!("N must be even and at least 2 (got {})", self.n)));
        }
        if self.mode == Mode::DominantDoublet && self.n < 4 {
            return Err(invalid("dominant_doublet mode needs N >= 4"));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(invalid(format!("xi must be positive (got {})", self.xi)));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(invalid(format!(
                "alpha must lie in (1/2, 1) (got {})",
                self.alpha
            )));
        }
        if !(self.window_factor >= 1.0 && self.window_factor.is_finite()) {
            return Err(invalid(format!(
                "window_factor must be at least 1 (got {})",
                self.window_factor
            )));
        }
        if let Some(v) = self.fixed_v_star {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("fixed_V_star must be positive (got {v})")));
            }
        }
        if let Some(e) = self.fixed_e_plus_v {
            if !e.is_finite() {
                return Err(invalid("fixed_E_plus_V must be finite"));
            }
        }
        if self.mode == Mode::PlainGoe && self.has_overrides() {
            return Err(invalid("fixed-value overrides apply only to centrosymmetric modes"));
        }
        if self.sampler == Sampler::Conditioned && self.has_overrides() {
            return Err(invalid(
                "the conditioned sampler cannot honour fixed_E_plus_V / fixed_V_star",
            ));
        }
        Ok(())
    }

    pub fn has_overrides(&self) -> bool {
        self.fixed_e_plus_v.is_some() || self.fixed_v_star.is_some()
    }

    /// Sampler actually used for dominant-doublet runs.
    pub fn effective_sampler(&self) -> Sampler {
        match self.sampler {
            Sampler::Auto if self.has_overrides() => Sampler::Rejection,
            Sampler::Auto => Sampler::Conditioned,
            s => s,
        }
    }

    pub fn raw_budget(&self) -> u64 {
        self.max_raw_draws
            .unwrap_or_else(|| self.n_target.saturating_mul(10_000))
    }
}

/// Centrosymmetric Hamiltonian with `in = 0`, `out = N - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroHamiltonian {
    pub matrix: SymmetricMatrix,
    pub in_index: usize,
    pub out_index: usize,
    /// On-site energy of the in/out sites.
    pub e: f64,
    /// Direct in/out coupling, nonnegative.
    pub v: f64,
}

impl CentroHamiltonian {
    /// Wraps a matrix whose in/out sites are already at `0` and `N - 1`.
    pub fn from_matrix(matrix: SymmetricMatrix) -> Result<Self> {
        let n = matrix.dim();
        exchange_matrix(n)?;
        let asym = mirror_asymmetry(&matrix);
        if asym > CENTRO_TOL * matrix.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::ContractViolation(format!(
                "matrix is not centrosymmetric (mirror defect {asym:e})"
            )));
        }
        Ok(Self {
            e: matrix.get(0, 0),
            v: matrix.get(0, n - 1),
            in_index: 0,
            out_index: n - 1,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// A plain GOE network with the same in/out conventions (no centrosymmetry).
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub matrix: SymmetricMatrix,
    pub in_index: usize,
    pub out_index: usize,
    pub e: f64,
    pub v: f64,
}

/// `max |H(i,j) - H(N-1-i, N-1-j)|`
pub fn mirror_asymmetry(h: &SymmetricMatrix) -> f64 {
    let n = h.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h.get(i, j) - h.get(n - 1 - i, n - 1 - j)).abs());
        }
    }
    worst
}

/// Lowest index `k < N/2` minimizing `|H(k, N-1-k)|`.
fn weakest_pair(h: &SymmetricMatrix) -> usize {
    let n = h.dim();
    let mut best = 0;
    for k in 1..n / 2 {
        if h.get(k, n - 1 - k).abs() < h.get(best, n - 1 - best).abs() {
            best = k;
        }
    }
    best
}

/// Moves pair `(k, N-1-k)` to `(0, N-1)`; commutes with `J`.
fn pair_swap(n: usize, k: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(0, k);
    perm.swap(n - 1, n - 1 - k);
    perm
}

/// Relabels the weakest anti-diagonal pair to `(0, N-1)` and flips the global
/// sign when the in/out coupling is negative.
fn orient(h: SymmetricMatrix) -> SymmetricMatrix {
    let n = h.dim();
    let k = weakest_pair(&h);
    let h = if k == 0 { h } else { h.permuted(&pair_swap(n, k)) };
    if h.get(0, n - 1) < 0.0 {
        h.scaled(-1.0)
    } else {
        h
    }
}

fn apply_overrides(config: &EnsembleConfig, mut h: SymmetricMatrix) -> SymmetricMatrix {
    let n = h.dim();
    if let Some(v_star) = config.fixed_v_star {
        h.set(0, n - 1, v_star);
    }
    if let Some(target) = config.fixed_e_plus_v {
        let v = h.get(0, n - 1);
        h.set(0, 0, target - v);
        h.set(n - 1, n - 1, target - v);
    }
    h
}

/// Raw centrosymmetric GOE draw before any relabelling.
///
/// One Gaussian is drawn per mirror orbit `{(i,j), (N-1-i, N-1-j)}` of the
/// upper triangle, in row-major order, with variance `2ξ²/N` on the diagonal
/// and anti-diagonal and `ξ²/N` elsewhere.
pub fn draw_centrosymmetric<R: Rng + ?Sized>(n: usize, xi: f64, rng: &mut R) -> SymmetricMatrix {
    let sd = xi / (n as f64).sqrt();
    let sd_wide = sd * std::f64::consts::SQRT_2;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            // Upper-triangle representative of the mirrored position.
            let (mi, mj) = (n - 1 - j, n - 1 - i);
            if (mi, mj) < (i, j) {
                data[i * n + j] = data[mi * n + mj];
                continue;
            }
            let wide = i == j || i + j == n - 1;
            data[i * n + j] = normal(rng) * if wide { sd_wide } else { sd };
        }
    }
    SymmetricMatrix::from_upper(n, data).expect("square buffer")
}

pub fn sample_goe_centrosymmetric<R: Rng + ?Sized>(
    config: &EnsembleConfig,
    rng: &mut R,
) -> CentroHamiltonian {
    let h = orient(draw_centrosymmetric(config.n, config.xi, rng));
    let h = apply_overrides(config, h);
    CentroHamiltonian::from_matrix(h).expect("construction preserves centrosymmetry")
}

/// Plain GOE with the same variance profile, drawn entry by entry without
/// mirroring; in/out are chosen and oriented exactly as in the
/// centrosymmetric case.
pub fn sample_plain_goe<R: Rng + ?Sized>(n: usize, xi: f64, rng: &mut R) -> Network {
    let sd = xi / (n as f64).sqrt();
    let sd_wide = sd * std::f64::consts::SQRT_2;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let wide = i == j || i + j == n - 1;
            data[i * n + j] = normal(rng) * if wide { sd_wide } else { sd };
        }
    }
    let h = orient(SymmetricMatrix::from_upper(n, data).expect("square buffer"));
    Network {
        e: h.get(0, 0),
        v: h.get(0, n - 1),
        in_index: 0,
        out_index: n - 1,
        matrix: h,
    }
}

/// `|±⟩ = (|in⟩ ± |out⟩)/√2`.
pub fn plus_minus_states(n: usize, in_index: usize, out_index: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    exchange_matrix(n)?;
    if in_index >= n || out_index != n - 1 - in_index {
        return Err(invalid(format!(
            "in/out sites ({in_index}, {out_index}) are not an exchange pair for N = {n}"
        )));
    }
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    plus[in_index] = FRAC_1_SQRT_2;
    plus[out_index] = FRAC_1_SQRT_2;
    minus[in_index] = FRAC_1_SQRT_2;
    minus[out_index] = -FRAC_1_SQRT_2;
    Ok((plus, minus))
}

/// Output of [`block_diagonalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBlocks {
    /// `A + J'C`, the sector containing `|+⟩`.
    pub plus: SymmetricMatrix,
    /// `A - J'C`, the sector containing `|−⟩`.
    pub minus: SymmetricMatrix,
    /// `K = (1/√2) [[I, -J'], [I, J']]`; `K H Kᵀ = diag(H⁻, H⁺)`.
    pub k: Dense,
    /// Sector coordinate of `|±⟩` (`min(in, out)`; 0 after relabelling).
    pub pivot: usize,
}

/// The orthogonal transform that block-diagonalizes centrosymmetric matrices.
pub fn k_transform(n: usize) -> Result<Dense> {
    exchange_matrix(n)?;
    let h = n / 2;
    let mut k = Dense::zeros(n, n);
    for i in 0..h {
        k.set(i, i, FRAC_1_SQRT_2);
        k.set(i, n - 1 - i, -FRAC_1_SQRT_2);
        k.set(h + i, i, FRAC_1_SQRT_2);
        k.set(h + i, n - 1 - i, FRAC_1_SQRT_2);
    }
    Ok(k)
}

/// Splits a centrosymmetric matrix into its symmetry sectors. The blocks are
/// assembled from `A ± J'C` directly, so they are exactly symmetric.
pub fn block_diagonalize_matrix(h: &SymmetricMatrix, pivot: usize) -> Result<SectorBlocks> {
    let n = h.dim();
    exchange_matrix(n)?;
    let asym = mirror_asymmetry(h);
    if asym > CENTRO_TOL * h.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::ContractViolation(format!(
            "matrix is not centrosymmetric (mirror defect {asym:e})"
        )));
    }
    let m = n / 2;
    let mut plus = vec![0.0; m * m];
    let mut minus = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let a = h.get(i, j);
            let jc = h.get(n - 1 - i, j);
            plus[i * m + j] = a + jc;
            minus[i * m + j] = a - jc;
        }
    }
    Ok(SectorBlocks {
        plus: SymmetricMatrix::from_upper(m, plus)?,
        minus: SymmetricMatrix::from_upper(m, minus)?,
        k: k_transform(n)?,
        pivot,
    })
}

pub fn block_diagonalize(h: &CentroHamiltonian) -> Result<SectorBlocks> {
    block_diagonalize_matrix(&h.matrix, h.in_index.min(h.out_index))
}

/// Largest entry of the off-diagonal blocks of `K H Kᵀ`.
pub fn off_block_norm(h: &SymmetricMatrix, k: &Dense) -> f64 {
    let t = k.matmul(&h.to_dense()).matmul(&k.transpose());
    let n = h.dim();
    let m = n / 2;
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in m..n {
            worst = worst.max(t.get(i, j).abs()).max(t.get(j, i).abs());
        }
    }
    worst
}

/// A sector split into its pivot entry, pivot coupling row and bulk block.
#[derive(Clone, Debug, PartialEq)]
pub struct DeflatedSector {
    /// `⟨±|H±|±⟩ = E ± V`
    pub e_pm_v: f64,
    /// `𝒱±`, the pivot row without its diagonal entry.
    pub coupling: Vec<f64>,
    /// `H±_sub`
    pub sub: SymmetricMatrix,
}

impl DeflatedSector {
    /// Inverse of [`deflate_sector`] with the pivot placed at `pivot`.
    pub fn reassemble(&self, pivot: usize) -> SymmetricMatrix {
        let m = self.sub.dim() + 1;
        let others: Vec<usize> = (0..m).filter(|&i| i != pivot).collect();
        let mut data = vec![0.0; m * m];
        data[pivot * m + pivot] = self.e_pm_v;
        for (a, &i) in others.iter().enumerate() {
            data[pivot * m + i] = self.coupling[a];
            data[i * m + pivot] = self.coupling[a];
            for (b, &j) in others.iter().enumerate() {
                data[i * m + j] = self.sub.get(a, b);
            }
        }
        SymmetricMatrix::from_row_major(m, data).expect("assembled symmetric")
    }
}

pub fn deflate_sector(sector: &SymmetricMatrix, pivot: usize) -> Result<DeflatedSector> {
    let m = sector.dim();
    if m < 2 {
        return Err(invalid(format!("sector dimension {m} is below 2")));
    }
    if pivot >= m {
        return Err(invalid(format!("pivot {pivot} outside sector of dimension {m}")));
    }
    let others: Vec<usize> = (0..m).filter(|&i| i != pivot).collect();
    Ok(DeflatedSector {
        e_pm_v: sector.get(pivot, pivot),
        coupling: others.iter().map(|&j| sector.get(pivot, j)).collect(),
        sub: sector.principal(&others),
    })
}

#[cfg(test)]
mod tests;
