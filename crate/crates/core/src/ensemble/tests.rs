use proptest::prelude::*;

use super::*;
use crate::rng::substream;
use crate::spectral::eigh;

fn config(n: usize) -> EnsembleConfig {
    EnsembleConfig::new(n, 2.0, 0.95, 1, Mode::Centrosymmetric)
}

#[test]
fn exchange_examples() {
    assert_eq!(exchange_matrix(4).unwrap(), vec![3, 2, 1, 0]);
    assert_eq!(exchange_matrix(2).unwrap(), vec![1, 0]);
    assert!(exchange_matrix(3).is_err());
    assert!(exchange_matrix(0).is_err());
    let x = [1.0, -2.0, 3.5, 0.25];
    assert_eq!(apply_exchange(&apply_exchange(&x)), x.to_vec());
}

#[test]
fn samples_are_exactly_centrosymmetric_and_oriented() {
    for n in [2, 4, 6, 10, 16] {
        let cfg = config(n);
        for r in 0..50 {
            let h = sample_goe_centrosymmetric(&cfg, &mut substream(3, r));
            let m = &h.matrix;
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(m.get(i, j), m.get(n - 1 - i, n - 1 - j));
                }
            }
            let weakest = (0..n / 2)
                .map(|i| m.get(i, n - 1 - i).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(h.v >= 0.0);
            assert_eq!(h.v, weakest);
            assert_eq!(h.v, m.get(h.in_index, h.out_index));
            assert_eq!(h.e, m.get(0, 0));
            assert_eq!(h.e, m.get(n - 1, n - 1));
        }
    }
}

#[test]
fn off_diagonal_variance_matches_profile() {
    // N = 4, ξ = 2: generic entries have variance ξ²/N = 1.
    let n = 4;
    let draws = 100_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut anti = 0.0;
    for r in 0..draws {
        let h = draw_centrosymmetric(n, 2.0, &mut substream(17, r));
        let x = h.get(0, 1);
        sum += x;
        sum_sq += x * x;
        anti += h.get(1, 2).powi(2);
    }
    let mean = sum / draws as f64;
    let var = sum_sq / draws as f64 - mean * mean;
    assert!((var - 1.0).abs() < 0.03, "variance {var}");
    let anti_var = anti / draws as f64;
    assert!((anti_var - 2.0).abs() < 0.06, "anti-diagonal variance {anti_var}");
}

#[test]
fn sector_variances_follow_goe() {
    // + sector of N = 10: off-diagonal variance 2ξ²/N = 0.8, diagonal 4ξ²/N = 1.6.
    let n = 10;
    let draws = 100_000;
    let (mut off, mut diag) = (0.0, 0.0);
    for r in 0..draws {
        let h = draw_centrosymmetric(n, 2.0, &mut substream(23, r));
        let b = block_diagonalize_matrix(&h, 0).unwrap();
        off += b.plus.get(1, 3).powi(2);
        diag += b.plus.get(2, 2).powi(2);
    }
    let off = off / draws as f64;
    let diag = diag / draws as f64;
    assert!((off / 0.8 - 1.0).abs() < 0.03, "off-diagonal {off}");
    assert!((diag / 1.6 - 1.0).abs() < 0.05, "diagonal {diag}");
}

#[test]
fn plus_minus_examples() {
    let (p, m) = plus_minus_states(2, 0, 1).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert_eq!(p, vec![s, s]);
    assert_eq!(m, vec![s, -s]);
    for n in [2, 4, 6, 12] {
        let (p, m) = plus_minus_states(n, 0, n - 1).unwrap();
        assert_eq!(crate::linalg::dot(&p, &m), 0.0);
        assert!((crate::linalg::norm(&p) - 1.0).abs() < 1e-15);
    }
    let (p, m) = plus_minus_states(6, 0, 5).unwrap();
    assert_eq!(apply_exchange(&m), m.iter().map(|x| -x).collect::<Vec<_>>());
    assert_eq!(apply_exchange(&p), p);
    assert!(plus_minus_states(6, 0, 4).is_err());
    assert!(plus_minus_states(5, 0, 4).is_err());
}

#[test]
fn two_site_block_form() {
    let (e, v) = (0.3, 0.7);
    let h = SymmetricMatrix::from_rows(&[&[e, v], &[v, e]]).unwrap();
    let b = block_diagonalize_matrix(&h, 0).unwrap();
    assert_eq!(b.plus.get(0, 0), e + v);
    assert_eq!(b.minus.get(0, 0), e - v);
}

#[test]
fn k_is_orthogonal_and_block_diagonalizes() {
    for n in [2, 4, 10, 14] {
        let k = k_transform(n).unwrap();
        assert!(k.orthogonality_defect() < 1e-15);
        let h = sample_goe_centrosymmetric(&config(n), &mut substream(8, n as u64));
        assert!(off_block_norm(&h.matrix, &k) < 1e-12 * h.matrix.max_abs());
    }
}

#[test]
fn k_maps_plus_minus_to_pivot_coordinates() {
    let n = 8;
    let k = k_transform(n).unwrap();
    let (p, m) = plus_minus_states(n, 0, n - 1).unwrap();
    let kp = k.mul_vec(&p);
    let km = k.mul_vec(&m);
    // Lower block is the + sector, upper block the − sector.
    assert!((kp[n / 2] - 1.0).abs() < 1e-15);
    assert!((km[0] - 1.0).abs() < 1e-15);
    assert!(kp.iter().map(|x| x.abs()).sum::<f64>() - 1.0 < 1e-15);
}

#[test]
fn blocks_match_explicit_transform() {
    let n = 10;
    let h = sample_goe_centrosymmetric(&config(n), &mut substream(4, 0));
    let b = block_diagonalize(&h).unwrap();
    let t = b.k.matmul(&h.matrix.to_dense()).matmul(&b.k.transpose());
    let m = n / 2;
    for i in 0..m {
        for j in 0..m {
            assert!((t.get(i, j) - b.minus.get(i, j)).abs() < 1e-12);
            assert!((t.get(m + i, m + j) - b.plus.get(i, j)).abs() < 1e-12);
        }
    }
    assert!((h.matrix.trace() - b.plus.trace() - b.minus.trace()).abs() < 1e-12);
}

#[test]
fn spectrum_splits_between_sectors() {
    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&config(10), &mut substream(5, r));
        let b = block_diagonalize(&h).unwrap();
        let mut joint: Vec<f64> = eigh(&b.plus).unwrap().values;
        joint.extend(eigh(&b.minus).unwrap().values);
        joint.sort_by(f64::total_cmp);
        let full = eigh(&h.matrix).unwrap().values;
        for (a, c) in joint.iter().zip(&full) {
            assert!((a - c).abs() < 1e-9);
        }
    }
}

#[test]
fn non_centrosymmetric_input_rejected() {
    let h = SymmetricMatrix::from_rows(&[
        &[1.0, 0.2, 0.3, 0.4],
        &[0.2, 2.0, 0.5, 0.3],
        &[0.3, 0.5, 2.0, 0.2],
        &[0.4, 0.3, 0.2, 1.5],
    ])
    .unwrap();
    assert!(matches!(
        block_diagonalize_matrix(&h, 0),
        Err(Error::ContractViolation(_))
    ));
    assert!(CentroHamiltonian::from_matrix(h).is_err());
}

#[test]
fn deflation_examples() {
    let s = SymmetricMatrix::from_rows(&[&[1.5, 0.2], &[0.2, -0.3]]).unwrap();
    let d = deflate_sector(&s, 0).unwrap();
    assert_eq!(d.e_pm_v, 1.5);
    assert_eq!(d.coupling, vec![0.2]);
    assert_eq!(d.sub.get(0, 0), -0.3);
    assert!(deflate_sector(&SymmetricMatrix::zeros(1), 0).is_err());
    assert!(deflate_sector(&s, 2).is_err());

    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&config(10), &mut substream(6, r));
        let b = block_diagonalize(&h).unwrap();
        let dp = deflate_sector(&b.plus, b.pivot).unwrap();
        let dm = deflate_sector(&b.minus, b.pivot).unwrap();
        assert!((dp.e_pm_v - (h.e + h.v)).abs() < 1e-12);
        assert!((dm.e_pm_v - (h.e - h.v)).abs() < 1e-12);
        let back = dp.reassemble(b.pivot);
        for i in 0..5 {
            for j in 0..5 {
                assert!((back.get(i, j) - b.plus.get(i, j)).abs() < 1e-12);
            }
        }
        // ⟨+|H|+⟩ in the full space agrees with the deflated entry.
        let (p, _) = plus_minus_states(10, 0, 9).unwrap();
        assert!((h.matrix.quadratic_form(&p) - dp.e_pm_v).abs() < 1e-12);
    }
}

#[test]
fn overrides_are_applied_after_orientation() {
    let mut cfg = config(10);
    cfg.fixed_v_star = Some(0.05);
    cfg.fixed_e_plus_v = Some(1.0);
    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&cfg, &mut substream(7, r));
        assert_eq!(h.v, 0.05);
        assert!((h.e + h.v - 1.0).abs() < 1e-15);
        assert_eq!(h.matrix.get(9, 9), h.e);
    }
}

#[test]
fn plain_goe_keeps_in_out_conventions() {
    for r in 0..20 {
        let net = sample_plain_goe(8, 2.0, &mut substream(12, r));
        let m = &net.matrix;
        let weakest = (0..4).map(|i| m.get(i, 7 - i).abs()).fold(f64::INFINITY, f64::min);
        assert_eq!(net.v, weakest);
        assert!(net.v >= 0.0);
        assert!(mirror_asymmetry(m) > 0.0);
    }
}

#[test]
fn config_validation() {
    let mut c = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    assert!(c.validate().is_ok());
    assert_eq!(c.effective_sampler(), Sampler::Conditioned);
    c.fixed_e_plus_v = Some(1.0);
    assert_eq!(c.effective_sampler(), Sampler::Rejection);
    c.sampler = Sampler::Conditioned;
    assert!(c.validate().is_err());
    let mut c = EnsembleConfig::new(2, 2.0, 0.95, 0, Mode::DominantDoublet);
    assert!(c.validate().is_err());
    c.mode = Mode::Centrosymmetric;
    assert!(c.validate().is_ok());
    c.window_factor = 0.5;
    assert!(c.validate().is_err());
    let c = EnsembleConfig::new(7, 2.0, 0.95, 0, Mode::Centrosymmetric);
    assert!(c.validate().is_err());
    let c = EnsembleConfig::new(8, 2.0, 0.4, 0, Mode::Centrosymmetric);
    assert!(c.validate().is_err());
}

#[test]
fn config_json_uses_documented_names() {
    let text = r#"{"N": 10, "xi": 2.0, "alpha": 0.95, "master_seed": 5,
                   "mode": "dominant_doublet", "fixed_E_plus_V": 1.0}"#;
    let c: EnsembleConfig = serde_json::from_str(text).unwrap();
    assert_eq!(c.n, 10);
    assert_eq!(c.window_factor, 1.7);
    assert_eq!(c.fixed_e_plus_v, Some(1.0));
    assert!(serde_json::from_str::<EnsembleConfig>(r#"{"N": 4, "bogus": 1}"#).is_err());
}

#[test]
fn conditioned_draws_are_accepted_doublets() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    for r in 0..50 {
        let draw = sample_dominant_doublet(&cfg, &mut substream(31, r)).unwrap();
        let h = &draw.hamiltonian;
        assert!(draw.attempts >= 1);
        assert!(h.v >= 0.0);
        let weakest = (0..5)
            .map(|i| h.matrix.get(i, 9 - i).abs())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(h.v, weakest);
        let b = block_diagonalize(h).unwrap();
        let pw = crate::spectral::sector_weight(&eigh(&b.plus).unwrap(), 0).0;
        let mw = crate::spectral::sector_weight(&eigh(&b.minus).unwrap(), 0).0;
        assert!(pw > 0.95 - 1e-12 && mw > 0.95 - 1e-12, "{pw} {mw}");
    }
}

#[test]
fn conditioned_and_rejection_samplers_agree_in_law() {
    // N = 6 accepts about 0.5 % of raw draws, cheap enough to compare.
    let n = 6;
    let mut cfg = EnsembleConfig::new(n, 2.0, 0.95, 99, Mode::DominantDoublet);
    cfg.n_target = 1500;
    let exec = crate::par::Execution::Parallel;
    let couplings = |cfg: &EnsembleConfig| {
        crate::harness::collect_centro(cfg, exec, |real| Ok((real.hamiltonian.v, real.hamiltonian.e)))
            .unwrap()
            .0
    };
    cfg.sampler = Sampler::Rejection;
    let rej = couplings(&cfg);
    cfg.sampler = Sampler::Conditioned;
    cfg.master_seed = 100;
    let con = couplings(&cfg);
    let v_rej: Vec<f64> = rej.iter().map(|x| x.0).collect();
    let v_con: Vec<f64> = con.iter().map(|x| x.0).collect();
    let e_rej: Vec<f64> = rej.iter().map(|x| x.1).collect();
    let e_con: Vec<f64> = con.iter().map(|x| x.1).collect();
    let ne = (v_rej.len() * v_con.len()) as f64 / (v_rej.len() + v_con.len()) as f64;
    for (a, b) in [(&v_rej, &v_con), (&e_rej, &e_con)] {
        let d = crate::harness::stats::ks_two_sample(a, b).unwrap();
        let p = crate::harness::stats::ks_p_value(d, ne);
        assert!(p > 1e-3, "KS distance {d}, p = {p}");
    }
}

#[test]
fn conditioned_sampler_rejects_overrides() {
    let mut cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    cfg.fixed_v_star = Some(0.1);
    assert!(sample_dominant_doublet(&cfg, &mut substream(0, 0)).is_err());
}

proptest! {
    #[test]
    fn relabelling_preserves_centrosymmetry(seed in 0u64..1000, half in 1usize..8) {
        let n = 2 * half;
        let h = sample_goe_centrosymmetric(&config(n), &mut substream(seed, 0));
        prop_assert_eq!(mirror_asymmetry(&h.matrix), 0.0);
        prop_assert!(h.v >= 0.0);
    }
}
