//! Closed-form predictions for the post-selected ensemble: level spacing near
//! the doublet, extreme-value statistics of the direct coupling, Cauchy shift
//! statistics, transfer-time distributions and doublet probabilities.
//!
//! Throughout, `v2` is the ensemble mean squared coupling norm ⟨‖𝒱‖²⟩ between
//! the in/out doublet and the bulk.

pub mod quad;
pub mod special;

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::uniform;

pub use quad::{integrate, integrate_to_infinity, DEFAULT_REL_TOL};

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("xi must be positive and finite (got {xi})")))
    }
}

fn bulk_dim(n: usize) -> Result<f64> {
    if n < 4 {
        return Err(invalid(format!("N must be at least 4 (got {n})")));
    }
    Ok(n as f64 / 2.0 - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyParams {
    pub location: f64,
    pub scale: f64,
}

impl CauchyParams {
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && location.is_finite()) {
            return Err(invalid(format!(
                "Cauchy needs finite location and positive scale (got {location}, {scale})"
            )));
        }
        Ok(Self { location, scale })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        1.0 / (PI * self.scale * (1.0 + z * z))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 + ((x - self.location) / self.scale).atan() / PI
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.location + self.scale * (PI * (p - 0.5)).tan()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(uniform(rng))
    }

    /// Difference of independent Cauchy variables: locations subtract, scales add.
    pub fn difference(&self, other: &CauchyParams) -> CauchyParams {
        CauchyParams {
            location: self.location - other.location,
            scale: self.scale + other.scale,
        }
    }
}

/// `|Y|` for `Y ~ Cauchy(center, width)`, supported on `[0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldedCauchy {
    pub center: f64,
    pub width: f64,
}

impl FoldedCauchy {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let w = self.width;
        let w2 = w * w;
        (w / (w2 + (self.center + x).powi(2)) + w / (w2 + (self.center - x).powi(2))) / PI
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (((x + self.center) / self.width).atan() + ((x - self.center) / self.width).atan()) / PI
    }

    /// `P(X > x)`, computed without cancellation for the heavy tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let w = self.width;
        let c = self.center;
        // π/2 - atan(z) = atan2(1, z) keeps precision when z is large.
        (w.atan2(x + c) + w.atan2(x - c)) / PI
    }
}

/// Local mean level spacing of the sub-block spectrum near `E ± V`.
pub fn delta_loc(n: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(2.0 * PI * xi / bulk_dim(n)?.sqrt())
}

/// Minimal resonance distance allowed by the doublet constraint.
pub fn d_min(n: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(PI * xi / bulk_dim(n)?.sqrt())
}

/// The same distance expressed through the coupling strength and threshold.
pub fn d_min_constrained(v2: f64, alpha: f64, n: usize) -> Result<f64> {
    if !(alpha < 1.0) {
        return Err(invalid(format!("alpha must be below 1 (got {alpha})")));
    }
    if v2 < 0.0 {
        return Err(invalid(format!("coupling norm must be nonnegative (got {v2})")));
    }
    Ok((2.0 * PI * v2).sqrt() / ((1.0 - alpha) * bulk_dim(n)?).sqrt())
}

/// `α ≈ 1 - (2/π) v2/ξ²`.
pub fn alpha_from_coupling(v2: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let alpha = 1.0 - 2.0 * v2 / (PI * xi * xi);
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(alpha)
    } else {
        Err(Error::OutOfRange {
            value: alpha,
            range: "(0, 1]",
        })
    }
}

/// Inverse of [`alpha_from_coupling`]: `v2 = π (1-α) ξ² / 2`.
pub fn coupling_from_alpha(alpha: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            value: alpha,
            range: "(0, 1]",
        });
    }
    Ok(PI * (1.0 - alpha) * xi * xi / 2.0)
}

fn check_min_coupling_args(n: usize, xi: f64) -> Result<()> {
    check_xi(xi)?;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid(format!("N must be even and at least 2 (got {n})")));
    }
    Ok(())
}

/// Density of `V = min_k |H(k, N+1-k)|` over the `N/2` anti-diagonal entries.
pub fn min_coupling_pdf(v: f64, n: usize, xi: f64) -> Result<f64> {
    check_min_coupling_args(n, xi)?;
    if v < 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let z = nf.sqrt() * v / (2.0 * xi);
    let tail = special::erfc(z);
    let body = if n == 2 { 1.0 } else { tail.powf(nf / 2.0 - 1.0) };
    Ok((-z * z).exp() * nf.powf(1.5) * body / (2.0 * PI.sqrt() * xi))
}

pub fn min_coupling_cdf(v: f64, n: usize, xi: f64) -> Result<f64> {
    check_min_coupling_args(n, xi)?;
    if v <= 0.0 {
        return Ok(0.0);
    }
    let z = (n as f64).sqrt() * v / (2.0 * xi);
    Ok(1.0 - special::erfc(z).powf(n as f64 / 2.0))
}

/// Mean minimal coupling by quadrature of `∫ V P(V) dV`.
pub fn vbar_exact(n: usize, xi: f64) -> Result<f64> {
    check_min_coupling_args(n, xi)?;
    // Integrate in the natural variable V' = √N V / 2ξ, then rescale.
    let scale = 2.0 * xi / (n as f64).sqrt();
    let integral = integrate_to_infinity(
        |u| u * min_coupling_pdf(u * scale, n, xi).unwrap_or(0.0) * scale,
        0.0,
        DEFAULT_REL_TOL,
    )?;
    Ok(integral * scale)
}

/// Large-N Laplace estimate of the mean minimal coupling.
pub fn vbar_asymptotic(n: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(2.0 * PI * xi / (E * n as f64 * bulk_dim(n)?.sqrt()))
}

/// Density of a single shift `s±` (a Cauchy law).
pub fn shift_pdf(s: f64, params: &CauchyParams) -> f64 {
    params.pdf(s)
}

/// Cauchy law of `Δs = s⁺ - s⁻` at direct coupling `v`.
pub fn delta_s_params(n: usize, xi: f64, v2: f64, v: f64) -> Result<CauchyParams> {
    let dl = delta_loc(n, xi)?;
    let location = 2.0 * v * v2 / (2.0 * xi * xi);
    let scale = 2.0 * PI * v2 / (bulk_dim(n)? * dl);
    CauchyParams::new(location, scale)
}

/// Width `s₀` of the transfer-time law after the annealed substitution `V → V̄`.
pub fn dist_s0(n: usize, xi: f64, v2: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(v2 * n as f64 * E / (4.0 * PI * xi * xi))
}

/// Shift `x₀` of the transfer-time law.
pub fn dist_x0(xi: f64, v2: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(v2 / (2.0 * xi * xi))
}

/// Fixed-coupling width `γ = π v2 / (V (N/2-1) Δ_loc)`.
pub fn gamma_fixed(v: f64, n: usize, xi: f64, v2: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(invalid(format!("direct coupling must be positive (got {v})")));
    }
    Ok(PI * v2 / (v * bulk_dim(n)? * delta_loc(n, xi)?))
}

/// Law of `x = T_R/t` with `V` annealed to its mean.
pub fn transfer_time_dist(n: usize, xi: f64, v2: f64) -> Result<FoldedCauchy> {
    let s0 = dist_s0(n, xi, v2)?;
    if !(s0 > 0.0) {
        return Err(invalid("transfer-time law needs a positive coupling norm"));
    }
    Ok(FoldedCauchy {
        center: 1.0 + dist_x0(xi, v2)?,
        width: s0,
    })
}

/// Law of `x = T_R/t` at a fixed direct coupling `v`.
pub fn transfer_time_dist_fixed_v(v: f64, n: usize, xi: f64, v2: f64) -> Result<FoldedCauchy> {
    let gamma = gamma_fixed(v, n, xi, v2)?;
    if !(gamma > 0.0) {
        return Err(invalid("transfer-time law needs a positive coupling norm"));
    }
    Ok(FoldedCauchy {
        center: 1.0 + dist_x0(xi, v2)?,
        width: gamma,
    })
}

pub fn transfer_time_pdf(x: f64, n: usize, xi: f64, v2: f64) -> Result<f64> {
    Ok(transfer_time_dist(n, xi, v2)?.pdf(x))
}

pub fn transfer_time_pdf_fixed_v(x: f64, v: f64, n: usize, xi: f64, v2: f64) -> Result<f64> {
    Ok(transfer_time_dist_fixed_v(v, n, xi, v2)?.pdf(x))
}

/// Published arctan form of `P(T_R/t > 1)`.
///
/// This is not the integral of [`transfer_time_pdf`] over `(1, ∞)`; see
/// [`prob_faster_than_rabi_integral`] for that.
pub fn prob_faster_than_rabi(n: usize, xi: f64, v2: f64) -> Result<f64> {
    let s0 = dist_s0(n, xi, v2)?;
    let x0 = dist_x0(xi, v2)?;
    Ok(1.0 - ((1.0 - x0) / s0).atan() / PI)
}

/// `P(T_R/t > 1)` as the exact tail mass of [`transfer_time_dist`].
pub fn prob_faster_than_rabi_integral(n: usize, xi: f64, v2: f64) -> Result<f64> {
    Ok(transfer_time_dist(n, xi, v2)?.sf(1.0))
}

/// Large-N form `1 - 4ξ²/(v2 N e)`.
pub fn prob_faster_than_rabi_asymptotic(n: usize, xi: f64, v2: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(1.0 - 4.0 * xi * xi / (v2 * n as f64 * E))
}

/// Published arctan form at fixed direct coupling `v_star`.
pub fn prob_faster_than_rabi_fixed_v(v_star: f64, n: usize, xi: f64, v2: f64) -> Result<f64> {
    check_xi(xi)?;
    let m = bulk_dim(n)?;
    let x0 = dist_x0(xi, v2)?;
    Ok(1.0 - (2.0 * v_star * xi * m.sqrt() / v2 * (1.0 - x0)).atan() / PI)
}

/// Large-N form `1/2 + v2 / (π V* ξ √(2N))`.
pub fn prob_faster_than_rabi_fixed_v_asymptotic(
    v_star: f64,
    n: usize,
    xi: f64,
    v2: f64,
) -> Result<f64> {
    check_xi(xi)?;
    Ok(0.5 + v2 / (PI * v_star * xi * (2.0 * n as f64).sqrt()))
}

/// Ensemble average of the time-averaged output population for a full GOE.
pub fn avg_return_population(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N must be positive"));
    }
    Ok(3.0 / (2.0 + n as f64))
}

/// The same average when eigenvectors live in two `N/2`-dimensional sectors.
pub fn avg_return_population_centro(n: usize) -> Result<f64> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid(format!("N must be even and at least 2 (got {n})")));
    }
    Ok(3.0 / (4.0 + n as f64))
}

fn check_doublet_args(n: usize, alpha: f64) -> Result<()> {
    if n < 4 {
        return Err(invalid(format!("N must be at least 4 (got {n})")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    Ok(())
}

/// Probability that one sector of dimension N/2 has an eigenvector with
/// weight above `alpha` on its pivot state, treating components as independent.
pub fn sector_doublet_probability(n: usize, alpha: f64) -> Result<f64> {
    check_doublet_args(n, alpha)?;
    let b = n as f64 / 4.0 - 0.5;
    let below = special::inc_beta(alpha, 0.5, b)?;
    Ok(1.0 - below.powf(n as f64 / 2.0))
}

/// Probability that both sectors carry a dominant doublet state.
pub fn doublet_probability(n: usize, alpha: f64) -> Result<f64> {
    Ok(sector_doublet_probability(n, alpha)?.powi(2))
}

/// Density of a squared eigenvector component of an N×N GOE matrix,
/// `Beta(1/2, (N-1)/2)`.
pub fn eigenvector_component_pdf(y: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("N must be at least 2 (got {n})")));
    }
    Ok(special::beta_pdf(y, 0.5, (n as f64 - 1.0) / 2.0))
}

pub fn eigenvector_component_cdf(y: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("N must be at least 2 (got {n})")));
    }
    special::inc_beta(y.clamp(0.0, 1.0), 0.5, (n as f64 - 1.0) / 2.0)
}

/// `2α - 1`.
pub fn efficiency_lower_bound(alpha: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (1/2, 1] (got {alpha})")));
    }
    Ok(2.0 * alpha - 1.0)
}

/// Every closed-form scale at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub xi: f64,
    pub coupling_norm_sq_mean: f64,
    pub delta_loc: f64,
    pub v_bar: f64,
    pub d_min: f64,
    pub s0_width: f64,
    pub x0_shift: f64,
    /// Fixed-coupling width at `v` (or at `v_bar` when no coupling is given).
    pub gamma_fixed: f64,
}

impl TheoryParams {
    pub fn new(n: usize, xi: f64, v2: f64, v: Option<f64>) -> Result<Self> {
        if !(v2 > 0.0) {
            return Err(invalid(format!("coupling norm must be positive (got {v2})")));
        }
        let v_bar = vbar_asymptotic(n, xi)?;
        Ok(Self {
            n,
            xi,
            coupling_norm_sq_mean: v2,
            delta_loc: delta_loc(n, xi)?,
            v_bar,
            d_min: d_min(n, xi)?,
            s0_width: dist_s0(n, xi, v2)?,
            x0_shift: dist_x0(xi, v2)?,
            gamma_fixed: gamma_fixed(v.unwrap_or(v_bar), n, xi, v2)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn delta_loc_examples() {
        assert!(close(delta_loc(10, 2.0).unwrap(), 2.0 * PI, 1e-12));
        let ratio = delta_loc(1000, 2.0).unwrap() / delta_loc(4000, 2.0).unwrap();
        assert!(close(ratio, 2.0, 2e-3));
        for n in [4, 6, 10, 32] {
            assert_eq!(delta_loc(n, 1.3).unwrap(), 2.0 * d_min(n, 1.3).unwrap());
        }
        assert!(delta_loc(2, 2.0).is_err());
        assert!(delta_loc(10, 0.0).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn d_min_examples() {
        assert!(close(d_min(10, 2.0).unwrap(), PI, 1e-12));
        let c = d_min_constrained(0.314, 0.95, 10).unwrap();
        assert!(close(c, 3.140, 2e-3), "{c}");
        assert!(d_min_constrained(0.314, 0.999_999, 10).unwrap() > 300.0);
        assert!(d_min_constrained(0.314, 1.0, 10).is_err());
    }

    #[test]
    fn constraint_closure() {
        for &alpha in &[0.8, 0.9, 0.95, 0.99] {
            for &xi in &[0.5, 2.0, 20.0] {
                for n in [4, 10, 14, 64] {
                    let v2 = coupling_from_alpha(alpha, xi).unwrap();
                    let a = d_min(n, xi).unwrap();
                    let b = d_min_constrained(v2, alpha, n).unwrap();
                    assert!(close(a, b, 1e-10 * a));
                }
            }
        }
    }

    #[test]
    fn alpha_coupling_examples() {
        // Value quoted with the transfer-time figure: ⟨‖𝒱‖²⟩ ≈ 0.31.
        let v2 = coupling_from_alpha(0.95, 2.0).unwrap();
        assert!(close(v2, 0.3142, 1e-4));
        assert!(close(v2, 0.31, 0.01));
        assert_eq!(alpha_from_coupling(0.0, 2.0).unwrap(), 1.0);
        for &x in &[0.01, 0.3, 1.7] {
            let back = coupling_from_alpha(alpha_from_coupling(x, 2.0).unwrap(), 2.0).unwrap();
            assert!(close(back, x, 1e-12));
        }
        assert!(matches!(
            alpha_from_coupling(10.0, 2.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(alpha_from_coupling(-1.0, 2.0).is_err());
    }

    #[test]
    fn min_coupling_density_is_normalized() {
        let total =
            integrate_to_infinity(|v| min_coupling_pdf(v, 10, 2.0).unwrap(), 0.0, 1e-10).unwrap();
        assert!(close(total, 1.0, 1e-6));
        // Density is the derivative of the CDF.
        let h = 1e-6;
        for &v in &[0.05, 0.2, 0.6] {
            let d = (min_coupling_cdf(v + h, 10, 2.0).unwrap()
                - min_coupling_cdf(v - h, 10, 2.0).unwrap())
                / (2.0 * h);
            assert!(close(d, min_coupling_pdf(v, 10, 2.0).unwrap(), 1e-6));
        }
    }

    #[test]
    fn vbar_exact_single_pair_is_half_normal_mean() {
        // N = 2: one half-normal with variance 2ξ²/N = ξ², mean ξ√(2/π).
        for &xi in &[0.5, 2.0, 7.0] {
            let want = xi * (2.0 / PI).sqrt();
            assert!(close(vbar_exact(2, xi).unwrap(), want, 1e-8 * want));
        }
    }

    #[test]
    fn vbar_asymptotic_examples() {
        let v = vbar_asymptotic(10, 2.0).unwrap();
        assert!(close(v, 4.0 * PI / (E * 20.0), 1e-12));
        assert!(close(v, 0.2312, 1e-4));
        let r = vbar_asymptotic(4000, 1.0).unwrap() / vbar_asymptotic(1000, 1.0).unwrap();
        assert!(close(r, 4f64.powf(-1.5), 1e-3 * r));
    }

    #[test]
    fn delta_s_example() {
        let p = delta_s_params(10, 2.0, 0.314, 0.2312).unwrap();
        assert!(close(p.location, 2.0 * 0.2312 * 0.314 / 8.0, 1e-12));
        assert!(close(p.location, 0.01815, 1e-5));
        assert!(close(p.scale, 0.0785, 1e-4));
        assert!(close(shift_pdf(p.location, &p), 1.0 / (PI * p.scale), 1e-12));
    }

    #[test]
    fn cauchy_cdf_and_quantile_invert() {
        let c = CauchyParams::new(0.3, 0.7).unwrap();
        for &p in &[0.01, 0.25, 0.5, 0.9] {
            assert!(close(c.cdf(c.quantile(p)), p, 1e-12));
        }
        assert!(CauchyParams::new(0.0, 0.0).is_err());
        let mut rng = substream(3, 0);
        let x = c.sample(&mut rng);
        assert!(x.is_finite());
    }

    #[test]
    fn transfer_time_examples() {
        let d = transfer_time_dist(10, 2.0, 0.31).unwrap();
        assert!(close(d.width, 0.31 * 10.0 * E / (16.0 * PI), 1e-12));
        assert!(close(d.width, 0.1677, 1e-4));
        assert!(close(d.center - 1.0, 0.03875, 1e-12));
        let total = integrate_to_infinity(|x| d.pdf(x), 0.0, 1e-10).unwrap();
        assert!(close(total, 1.0, 1e-6));
        // Mode sits at the Cauchy centre (the mirror lobe only tilts it slightly).
        let grid: Vec<f64> = (0..40_000).map(|i| i as f64 * 1e-4).collect();
        let mode = grid
            .iter()
            .copied()
            .max_by(|a, b| d.pdf(*a).total_cmp(&d.pdf(*b)))
            .unwrap();
        assert!(close(mode, d.center, 5e-3), "mode {mode}");
    }

    #[test]
    fn folded_cauchy_cdf_matches_density() {
        let d = FoldedCauchy {
            center: 1.04,
            width: 0.3,
        };
        for &x in &[0.2, 1.0, 3.0, 50.0] {
            let q = integrate(|t| d.pdf(t), 0.0, x, 1e-12).unwrap();
            assert!(close(q, d.cdf(x), 1e-10));
            assert!(close(d.sf(x), 1.0 - d.cdf(x), 1e-12));
        }
    }

    #[test]
    fn annealed_width_reproduces_fixed_coupling_form() {
        for n in [8, 10, 14, 40] {
            let v2 = 0.31;
            let vbar = vbar_asymptotic(n, 2.0).unwrap();
            let fixed = transfer_time_dist_fixed_v(vbar, n, 2.0, v2).unwrap();
            let annealed = transfer_time_dist(n, 2.0, v2).unwrap();
            assert!(close(fixed.width, annealed.width, 1e-12 * annealed.width));
            for &x in &[0.1, 0.9, 1.2, 5.0] {
                assert!(close(fixed.pdf(x), annealed.pdf(x), 1e-12));
            }
        }
    }

    #[test]
    fn published_rabi_probability_example() {
        let p = prob_faster_than_rabi(10, 2.0, 0.31).unwrap();
        assert!(close(p, 1.0 - 5.734f64.atan() / PI, 1e-3));
        assert!(close(p, 0.555, 1e-3));
    }

    #[test]
    fn integral_rabi_probability_matches_quadrature() {
        for n in [8, 10, 14] {
            let d = transfer_time_dist(n, 2.0, 0.31).unwrap();
            let q = integrate_to_infinity(|x| d.pdf(x), 1.0, 1e-10).unwrap();
            let p = prob_faster_than_rabi_integral(n, 2.0, 0.31).unwrap();
            assert!(close(p, q, 1e-6), "N={n}: {p} vs {q}");
        }
    }

    #[test]
    fn rabi_probability_asymptotics() {
        let n = 10_000;
        let exact = prob_faster_than_rabi(n, 2.0, 0.31).unwrap();
        let asym = prob_faster_than_rabi_asymptotic(n, 2.0, 0.31).unwrap();
        assert!((exact - asym).abs() / exact < 0.01);
        let fixed = prob_faster_than_rabi_fixed_v(0.2, 1_000_000, 2.0, 0.31).unwrap();
        assert!(fixed > 0.5 && fixed < 0.51);
        let fa = prob_faster_than_rabi_fixed_v_asymptotic(0.2, 1_000_000, 2.0, 0.31).unwrap();
        assert!(close(fixed, fa, 1e-3));
    }

    #[test]
    fn return_population_examples() {
        assert_eq!(avg_return_population(10).unwrap(), 0.25);
        assert_eq!(avg_return_population(1).unwrap(), 1.0);
        let seq: Vec<f64> = (1..50).map(|n| avg_return_population(n).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(avg_return_population(0).is_err());
    }

    #[test]
    fn eigenvector_component_beta() {
        let total = integrate(|y| eigenvector_component_pdf(y, 10).unwrap(), 0.0, 1.0, 1e-10)
            .unwrap();
        assert!(close(total, 1.0, 1e-8));
        let mean = integrate(
            |y| y * eigenvector_component_pdf(y, 10).unwrap(),
            0.0,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!(close(mean, 0.1, 1e-8));
        assert!(close(eigenvector_component_cdf(1.0, 10).unwrap(), 1.0, 0.0));
    }

    #[test]
    fn doublet_probability_shape() {
        let p8 = doublet_probability(8, 0.95).unwrap();
        assert!(p8 > 0.0 && p8 < 1e-2);
        let seq: Vec<f64> = [8, 10, 12, 14]
            .iter()
            .map(|&n| doublet_probability(n, 0.95).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(doublet_probability(8, 1.0).is_err());
        assert!(doublet_probability(2, 0.9).is_err());
    }

    #[test]
    fn efficiency_bound_examples() {
        assert!(close(efficiency_lower_bound(0.95).unwrap(), 0.9, 1e-15));
        assert_eq!(efficiency_lower_bound(1.0).unwrap(), 1.0);
        assert_eq!(efficiency_lower_bound(0.75).unwrap(), 0.5);
        assert!(efficiency_lower_bound(0.5).is_err());
    }

    #[test]
    fn theory_params_are_positive() {
        let t = TheoryParams::new(10, 2.0, 0.31, None).unwrap();
        for v in [
            t.delta_loc,
            t.v_bar,
            t.d_min,
            t.s0_width,
            t.x0_shift,
            t.gamma_fixed,
        ] {
            assert!(v > 0.0);
        }
        assert!(close(t.gamma_fixed, t.s0_width, 1e-12));
        assert!(TheoryParams::new(10, 2.0, 0.0, None).is_err());
    }
}
