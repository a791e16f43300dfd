use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;
use slowquench::clifford::{rotate_from_axis, rotate_to_axis, MatrixRep};
use slowquench::invariants::ring_winding;
use slowquench::lz::{bis_prefactor, sis_level, spin_factor, tasp, transition_probability, QuenchSpec};
use slowquench::models::Field;

fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-2.0..2.0f64, len).prop_filter("gapped", |h| Field::new(h).energy() > 1e-3)
}

proptest! {
    #[test]
    fn probability_increases_with_band_ratio(g in 0.01..8.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let p_lo = transition_probability(g, lo, 1.0).unwrap();
        let p_hi = transition_probability(g, hi, 1.0).unwrap();
        prop_assert!(p_hi >= p_lo);
        prop_assert!((0.0..=1.0).contains(&p_lo));
    }

    #[test]
    fn frame_covariance(h in (2usize..=5).prop_flat_map(field), g in 0.0..5.0f64, pick in 0usize..5) {
        let axis = pick % h.len();
        let direct = tasp(&h, &QuenchSpec::new(axis, g).unwrap()).unwrap();
        let mut rotated = h.clone();
        rotate_to_axis(&mut rotated, axis);
        let mut back = tasp(&rotated, &QuenchSpec::new(0, g).unwrap()).unwrap().tasp.to_vec();
        rotate_from_axis(&mut back, axis);
        for (x, y) in direct.tasp.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn polarization_is_negative_on_inversion_surfaces(g in 1e-3..20.0f64) {
        prop_assert!(bis_prefactor(g) < 0.0);
        let direct = (1.0 - (2.0 * PI * g).cosh()) / (2.0 * PI * g).sinh();
        if g < 5.0 {
            prop_assert!((bis_prefactor(g) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn spin_inversion_level_balances_bands(g in 1e-3..50.0f64) {
        let rho = sis_level(g).unwrap();
        prop_assert!(rho > -1.0 && rho < 0.0);
        prop_assert!(spin_factor(g, rho).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_squares_to_energy(h in field(5)) {
        let rep = MatrixRep::build(4).unwrap();
        let m = rep.hamiltonian(&h).unwrap();
        let e2 = Field::new(&h).energy().powi(2);
        let residual = &m * &m - rep.identity() * Complex64::new(e2, 0.0);
        prop_assert!(residual.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn winding_reverses_with_the_loop(n in 1i64..4, shift in 0usize..64, scale in 0.1..10.0f64) {
        let mut loop_values: Vec<[f64; 2]> = (0..64)
            .map(|i| {
                let a = n as f64 * 2.0 * PI * i as f64 / 64.0;
                [scale * a.cos(), scale * a.sin()]
            })
            .collect();
        loop_values.rotate_left(shift);
        prop_assert_eq!(ring_winding(&loop_values).unwrap(), n);
        loop_values.reverse();
        prop_assert_eq!(ring_winding(&loop_values).unwrap(), -n);
    }
}
