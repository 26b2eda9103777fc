use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

fn random_field(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> FieldState {
    let g = Grid1D::periodic(n).unwrap();
    FieldState::from_fn(g, |_| {
        let z: f64 = rng.sample(StandardNormal);
        sigma * z
    })
}

#[test]
fn roughness_examples() {
    let g = Grid1D::periodic(16).unwrap();
    assert_eq!(roughness(&FieldState::from_fn(g, |_| 3.0)), 0.0);
    let a = 2.5;
    let sine = FieldState::from_fn(g, |x| a * (2.0 * PI * x / 16.0).sin());
    assert!((roughness(&sine) - a / 2f64.sqrt()).abs() < 1e-10);
    let g8 = Grid1D::periodic(8).unwrap();
    let two_level = FieldState::from_fn(g8, |x| if x < 4.0 { 0.0 } else { 2.0 });
    assert_eq!(roughness(&two_level), 1.0);
}

#[test]
fn roughness_ignores_shifts_and_translations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_field(32, 1.0, &mut rng);
    let w = roughness(&f);
    let mut up = f.clone();
    up.values.iter_mut().for_each(|v| *v += 7.0);
    assert!((roughness(&up) - w).abs() < 1e-14);
    assert!((roughness(&f.shifted(5)) - w).abs() < 1e-14);
}

#[test]
fn parseval_per_snapshot() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [16usize, 60, 100] {
        let f = random_field(n, 3.0, &mut rng);
        let s = structure_factor(std::slice::from_ref(&f)).unwrap();
        let from_s = compensated_mean(&s.values) * (n - 1) as f64 / n as f64;
        assert!((from_s - roughness_sq(&f)).abs() < 1e-10);
    }
}

#[test]
fn pure_tone_has_two_peaks() {
    let n = 32;
    let g = Grid1D::periodic(n).unwrap();
    let a = 1.5;
    let k = 2.0 * PI * 3.0 / n as f64;
    let f = FieldState::from_fn(g, |x| a * (k * x).cos());
    let s = structure_factor(&[f]).unwrap();
    for (q, v) in s.abscissa.iter().zip(&s.values) {
        if (q.abs() - k).abs() < 1e-12 {
            assert!(*v > 1.0);
        } else {
            assert!(v.abs() < 1e-20, "k={q} S={v}");
        }
    }
    let total: f64 = s.values.iter().sum::<f64>() / n as f64;
    assert!((total - a * a / 2.0).abs() < 1e-12);
}

#[test]
fn zero_ensemble_has_zero_structure_factor() {
    let g = Grid1D::periodic(16).unwrap();
    let s = structure_factor(&vec![FieldState::zeros(g); 3]).unwrap();
    assert!(s.values.iter().all(|&v| v == 0.0));
    assert!(structure_factor(&[]).is_err());
}

#[test]
fn zero_lag_normalizations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records: Vec<Vec<FieldState>> = (0..3)
        .map(|_| {
            (0..6)
                .map(|j| {
                    let mut f = random_field(16, 1.0, &mut rng);
                    f.time = j as f64 * 0.5;
                    f
                })
                .collect()
        })
        .collect();
    for c in two_time_correlator(&records, &[1, 2, 7], 3).unwrap() {
        assert_eq!(c.values[0], 1.0);
        assert_eq!(c.abscissa, vec![0.0, 0.5, 1.0, 1.5]);
    }
    let p = return_probability(&records, 2).unwrap();
    assert!(p.values[0] > 0.0);
    assert_eq!(p.len(), 5);
    assert!(two_time_correlator(&records, &[0], 1).is_err());

    let snaps: Vec<FieldState> = records.concat();
    assert_eq!(height_difference(&snaps, &[0]).unwrap().values, vec![0.0]);
    assert_eq!(phase_correlator(&snaps, &[0]).unwrap().values, vec![1.0]);
    let g = Grid1D::periodic(16).unwrap();
    let zero = phase_correlator(&[FieldState::zeros(g)], &[0, 1, 5]).unwrap();
    assert_eq!(zero.values, vec![1.0; 3]);
}

#[test]
fn gaussian_phase_correlator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigma = 0.8f64;
    let snaps: Vec<FieldState> = (0..200)
        .map(|_| random_field(64, sigma, &mut rng))
        .collect();
    let c = phase_correlator(&snaps, &[1, 3, 10]).unwrap();
    // Difference of two independent N(0, σ²) has variance 2σ², so
    // E cos = exp(−σ²).
    let expected = (-sigma * sigma).exp();
    for (v, e) in c.values.iter().zip(&c.stderr) {
        assert!((v - expected).abs() < 3.0 * e, "{v} vs {expected} ± {e}");
    }
}

#[test]
fn stderr_shrinks_with_sample_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let snaps: Vec<FieldState> = (0..800).map(|_| random_field(32, 1.0, &mut rng)).collect();
    let small = height_difference(&snaps[..400], &[3]).unwrap().stderr[0];
    let large = height_difference(&snaps, &[3]).unwrap().stderr[0];
    let ratio = small / large;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn equilibration_heuristic_uses_linear_z() {
    let g = Grid1D::periodic(10).unwrap();
    let weak = EquationSpec::weak_charge(1.0, 1.0);
    let strong = EquationSpec::strong_charge(1.0, 1.0);
    assert_eq!(equilibration_time(&weak, &g, 0.1), 3.0 * 100.0 * 0.1);
    assert_eq!(equilibration_time(&strong, &g, 0.1), 3.0 * 1e4 * 0.1);
}
