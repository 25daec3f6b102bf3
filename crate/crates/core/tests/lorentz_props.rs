use num_complex::Complex64;
use proptest::prelude::*;
use rankone::lorentz::{
    distribution, lorentz_norm, rearrangement, weak_norm_on_x, DomainTag, LorentzIndex, NaGrid,
    WeightedSamples,
};
use rankone::measure::{QuadratureSpec, Space};
use rankone::model::SpectralParam;
use rankone::transforms::PoissonModes;

fn samples() -> impl Strategy<Value = WeightedSamples> {
    prop::collection::vec((0.0f64..10.0, 0.01f64..5.0), 1..40)
        .prop_map(|e| WeightedSamples::from_entries(e, DomainTag::Abstract).unwrap())
}

proptest! {
    #[test]
    fn rearrangement_and_distribution_are_a_galois_pair(ws in samples(), s in 0.0f64..10.0, t in 0.0f64..50.0) {
        // f*(t) ≤ s  ⟺  d_f(s) ≤ t
        prop_assert_eq!(rearrangement(&ws, t) <= s, distribution(&ws, s) <= t);
    }

    #[test]
    fn distribution_is_nonincreasing(ws in samples(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(distribution(&ws, lo) >= distribution(&ws, hi));
    }

    #[test]
    fn rearrangement_is_equimeasurable(ws in samples(), p in 1.0f64..4.0) {
        // ∫ (f*)^p dt over the steps equals Σ v^p w
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (v, t) in ws.steps() {
            acc += v.powf(p) * (t - prev);
            prev = t;
        }
        let direct = ws.power_sum(p);
        prop_assert!((acc - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn lorentz_norms_are_nested(ws in samples()) {
        let n21 = lorentz_norm(&ws, LorentzIndex::new(2.0, 1.0).unwrap());
        let n22 = lorentz_norm(&ws, LorentzIndex::new(2.0, 2.0).unwrap());
        let n2w = lorentz_norm(&ws, LorentzIndex::weak(2.0));
        prop_assert!(n21 >= n22 * (1.0 - 1e-12));
        prop_assert!(n22 >= n2w * (1.0 - 1e-12));
        prop_assert!((n22 - ws.power_sum(2.0).sqrt()).abs() <= 1e-12 * n22.max(1e-300));
    }

    #[test]
    fn norms_are_homogeneous(ws in samples(), k in 0.1f64..10.0) {
        for idx in [LorentzIndex::new(2.0, 1.0).unwrap(), LorentzIndex::weak(2.0)] {
            let a = lorentz_norm(&ws.scaled(k), idx);
            let b = k * lorentz_norm(&ws, idx);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn order_of_samples_is_irrelevant(mut e in prop::collection::vec((0.0f64..10.0, 0.01f64..5.0), 1..30)) {
        let a = WeightedSamples::from_entries(e.clone(), DomainTag::Abstract).unwrap();
        e.reverse();
        let b = WeightedSamples::from_entries(e, DomainTag::Abstract).unwrap();
        prop_assert_eq!(a.steps(), b.steps());
    }
}

#[test]
fn phi_one_weak_norm_stabilizes() {
    let s = Space::h2();
    let q = QuadratureSpec::default();
    let modes = PoissonModes::build(&s, SpectralParam::real(1.0), 0, 40.0, 1.0 / 32.0, &q).unwrap();
    let one = [(0i64, Complex64::new(1.0, 0.0))];
    let w: Vec<f64> = [10.0, 20.0, 30.0]
        .iter()
        .map(|&t| {
            weak_norm_on_x(
                &s,
                |x| modes.evaluate(&s, &one, x),
                &NaGrid::new(16.0, -t, t, 0.2, 0.2),
            )
            .unwrap()
        })
        .collect();
    assert!(w[1] / w[0] - 1.0 < 0.05, "{w:?}");
    assert!(w[2] / w[1] - 1.0 < 0.02, "{w:?}");
}
