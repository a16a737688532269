use proptest::prelude::*;

use super::*;
use crate::ensemble::{
    block_diagonalize, sample_dominant_doublet, sample_goe_centrosymmetric, EnsembleConfig, Mode,
};
use crate::linalg::SymmetricMatrix;
use crate::rng::{substream, uniform};
use crate::spectral::{eigh, SectorSpectra};

fn rabi_pair(e: f64, v: f64) -> EigenDecomposition {
    eigh(&SymmetricMatrix::from_rows(&[&[e, v], &[v, e]]).unwrap()).unwrap()
}

#[test]
fn two_level_rabi_oscillation() {
    let v = 0.4;
    let d = rabi_pair(0.3, v);
    assert!(output_population(&d, 0, 1, 0.0).abs() < 1e-30);
    for &t in &[0.3, 1.1, 2.9] {
        let want = (v * t).sin().powi(2);
        assert!((output_population(&d, 0, 1, t) - want).abs() < 1e-14);
    }
    let tr = rabi_time(v).unwrap();
    assert!((output_population(&d, 0, 1, tr) - 1.0).abs() < 1e-14);

    let eff = transfer_efficiency(&d, 0, 1, tr, 1.7).unwrap();
    assert!((eff.window.p - 1.0).abs() < 1e-12);
    assert!((eff.window.t / tr - 1.0).abs() < 1e-5);
    assert!((eff.restricted.p - 1.0).abs() < 1e-12);
    assert!((time_avg_output(&d, 0, 1) - 0.5).abs() < 1e-15);
}

#[test]
fn rabi_time_examples() {
    assert!((rabi_time(0.5).unwrap() - std::f64::consts::PI).abs() < 1e-15);
    assert!((rabi_time(std::f64::consts::FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
    assert!(rabi_time(0.0).is_err());
    assert!(rabi_time(-1.0).is_err());
    let vbar = crate::theory::vbar_asymptotic(10, 2.0).unwrap();
    assert!((rabi_time(vbar).unwrap() * 2.0 * vbar - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn stationary_input_never_transfers() {
    // |in⟩ decoupled: it is an exact eigenvector.
    let h = SymmetricMatrix::from_rows(&[
        &[0.5, 0.0, 0.0],
        &[0.0, 0.1, 0.3],
        &[0.0, 0.3, -0.2],
    ])
    .unwrap();
    let d = eigh(&h).unwrap();
    let eff = transfer_efficiency(&d, 0, 2, 3.0, 1.7).unwrap();
    assert!(eff.window.p < 1e-20);
}

#[test]
fn unitarity_on_random_networks() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::Centrosymmetric);
    let mut rng = substream(3, 999);
    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&cfg, &mut substream(3, r));
        let d = eigh(&h.matrix).unwrap();
        for _ in 0..10 {
            let t = 50.0 * uniform(&mut rng);
            let total: f64 = evolve(&d, 0, t).iter().map(|(a, b)| a * a + b * b).sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!((output_population(&d, 0, 9, t) - output_population(&d, 0, 9, -t)).abs() < 1e-12);
        }
    }
}

#[test]
fn sector_form_matches_full_space() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::Centrosymmetric);
    let mut rng = substream(4, 999);
    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&cfg, &mut substream(4, r));
        let d = eigh(&h.matrix).unwrap();
        let s = SectorSpectra::new(&block_diagonalize(&h).unwrap()).unwrap();
        let times: Vec<f64> = (0..100).map(|_| 40.0 * uniform(&mut rng)).collect();
        let trace = sector_efficiency(&s.plus, &s.minus, 0, 0, &times);
        for (t, p) in times.iter().zip(&trace) {
            assert!((output_population(&d, 0, 9, *t) - p).abs() < 1e-10);
        }
        assert!(sector_efficiency(&s.plus, &s.minus, 0, 0, &[0.0])[0].abs() < 1e-28);
    }
}

#[test]
fn doublet_only_truncation() {
    // One level per sector with full weight: (1/2)(1 - cos(ΔE t)).
    let plus = eigh(&SymmetricMatrix::diagonal(&[0.7])).unwrap();
    let minus = eigh(&SymmetricMatrix::diagonal(&[0.2])).unwrap();
    for &t in &[0.0, 1.0, 4.0, 7.5] {
        let p = sector_efficiency(&plus, &minus, 0, 0, &[t])[0];
        assert!((p - 0.5 * (1.0 - (0.5 * t).cos())).abs() < 1e-15);
    }
}

#[test]
fn centrosymmetric_time_average_identity() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::Centrosymmetric);
    for r in 0..20 {
        let h = sample_goe_centrosymmetric(&cfg, &mut substream(5, r));
        let d = eigh(&h.matrix).unwrap();
        let direct = time_avg_output(&d, 0, 9);
        let quartic: f64 = (0..10).map(|k| d.component(0, k).powi(4)).sum();
        assert!((direct - quartic).abs() < 1e-10);
        let s = SectorSpectra::new(&block_diagonalize(&h).unwrap()).unwrap();
        let spec = TransitionSpectrum::from_sectors(&s.plus, &s.minus, 0, 0);
        assert!((spec.time_average(1e-12).0 - direct).abs() < 1e-10);
    }
}

#[test]
fn degenerate_levels_are_merged_in_time_average() {
    // Two levels at the same energy with opposite weights cancel exactly.
    let spec = TransitionSpectrum {
        energies: vec![0.0, 1.0, 1.0],
        weights: vec![0.5, 0.25, -0.25],
    };
    let (avg, merged) = spec.time_average(1e-12);
    assert!(merged);
    assert!((avg - 0.25).abs() < 1e-15);
    // Brute-force long-time average agrees.
    let samples = 200_000;
    let brute: f64 = (0..samples)
        .map(|k| spec.population(k as f64 * 0.0137))
        .sum::<f64>()
        / samples as f64;
    assert!((brute - avg).abs() < 1e-3);
}

#[test]
fn grid_recurrence_matches_direct_evaluation() {
    let cfg = EnsembleConfig::new(12, 2.0, 0.95, 0, Mode::Centrosymmetric);
    let h = sample_goe_centrosymmetric(&cfg, &mut substream(6, 0));
    let d = eigh(&h.matrix).unwrap();
    let spec = TransitionSpectrum::from_full(&d, 0, 11);
    let dt = 0.013;
    let grid = spec.population_grid(dt, 5000);
    for (j, p) in grid.iter().enumerate().step_by(97) {
        assert!((spec.population(j as f64 * dt) - p).abs() < 1e-12);
    }
}

#[test]
fn restricted_never_exceeds_window() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    for r in 0..40 {
        let h = sample_dominant_doublet(&cfg, &mut substream(8, r)).unwrap().hamiltonian;
        let s = SectorSpectra::new(&block_diagonalize(&h).unwrap()).unwrap();
        let spec = TransitionSpectrum::from_sectors(&s.plus, &s.minus, 0, 0);
        let tr = rabi_time(h.v).unwrap();
        let eff = transfer_efficiency_spectrum(&spec, tr, 1.7).unwrap();
        assert!(eff.restricted.p <= eff.window.p);
        assert!((0.0..=1.0 + 1e-12).contains(&eff.window.p));
        assert!(eff.window.t >= 0.0 && eff.window.t <= 1.7 * tr);
        assert!(eff.restricted.t <= tr);
        // The reported peak is not beaten anywhere on a fine independent grid.
        let fine = 20_000;
        for k in 0..=fine {
            let t = 1.7 * tr * k as f64 / fine as f64;
            assert!(spec.population(t) <= eff.window.p + 1e-9);
        }
    }
}

#[test]
fn efficient_when_splitting_exceeds_bare_coupling() {
    // 2α - 1 = 0.9 bound; allow 0.1 of perturbative slack.
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    for r in 0..200 {
        let h = sample_dominant_doublet(&cfg, &mut substream(9, r)).unwrap().hamiltonian;
        let b = block_diagonalize(&h).unwrap();
        let s = SectorSpectra::new(&b).unwrap();
        let a = crate::spectral::analyze_doublet(&b, &s, 2.0).unwrap();
        if a.splitting / (2.0 * h.v) <= 1.0 {
            continue;
        }
        let spec = TransitionSpectrum::from_sectors(&s.plus, &s.minus, 0, 0);
        let eff = transfer_efficiency_spectrum(&spec, rabi_time(h.v).unwrap(), 1.7).unwrap();
        assert!(eff.window.p >= 0.8, "P_H = {}", eff.window.p);
    }
}

#[test]
fn first_passage_estimate_predicts_maximizer() {
    let cfg = EnsembleConfig::new(10, 2.0, 0.95, 0, Mode::DominantDoublet);
    let total = 300;
    let mut hits = 0;
    for r in 0..total {
        let h = sample_dominant_doublet(&cfg, &mut substream(10, r)).unwrap().hamiltonian;
        let b = block_diagonalize(&h).unwrap();
        let s = SectorSpectra::new(&b).unwrap();
        let a = crate::spectral::analyze_doublet(&b, &s, 2.0).unwrap();
        let spec = TransitionSpectrum::from_sectors(&s.plus, &s.minus, 0, 0);
        let eff = transfer_efficiency_spectrum(&spec, rabi_time(h.v).unwrap(), 1.7).unwrap();
        let t0 = std::f64::consts::PI / a.splitting;
        if (eff.window.t - t0).abs() <= 0.1 * t0 {
            hits += 1;
        }
    }
    assert!(2 * hits >= total, "{hits} of {total}");
}

#[test]
fn window_factor_validated() {
    let d = rabi_pair(0.0, 0.5);
    assert!(transfer_efficiency(&d, 0, 1, 1.0, 0.9).is_err());
    assert!(transfer_efficiency(&d, 0, 1, 0.0, 1.7).is_err());
}

proptest! {
    #[test]
    fn populations_are_probabilities(seed in 0u64..300, t in 0.0f64..100.0) {
        let cfg = EnsembleConfig::new(8, 2.0, 0.95, 0, Mode::Centrosymmetric);
        let h = sample_goe_centrosymmetric(&cfg, &mut substream(seed, 2));
        let d = eigh(&h.matrix).unwrap();
        let p = output_population(&d, 0, 7, t);
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&p));
    }
}
