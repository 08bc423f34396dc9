use nonclass::criteria::identities::{check_origin_numeric, Identity};
use nonclass::criteria::{Registry, Tables};
use nonclass::moments::{
    add_noise, convert_moments, Conversion, MomentBasis, MomentTable, OrderingConvention, MAX_ORDER,
};
use nonclass::selftest::random_table;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table(seed: u64) -> MomentTable {
    random_table(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Moments of a classical intensity law with finitely many atoms.
fn classical(atoms: &[(f64, f64, f64)], order: usize) -> MomentTable {
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    MomentTable::from_fn(order, MomentBasis::Intensity, |k, l| {
        atoms.iter().map(|&(w, s, i)| w / total * s.powi(k as i32) * i.powi(l as i32)).sum()
    })
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stirling_round_trip(seed in any::<u64>()) {
        let t = table(seed);
        let photon = convert_moments(&t, Conversion::IntensityToPhoton).unwrap();
        let back = convert_moments(&photon, Conversion::PhotonToIntensity).unwrap();
        for k in 0..=t.order() {
            for l in 0..=t.order() - k {
                // the inverse cancels terms as large as the photon-number moment
                prop_assert!(close(back.get(k, l), t.get(k, l), photon.get(k, l).abs() + 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn identities_hold_numerically(seed in any::<u64>()) {
        let tabs = Tables::new(&table(seed)).unwrap();
        for i in Identity::all() {
            prop_assert!(i.check_numeric(&tabs, 1e-12).is_ok(), "{}", i.lhs);
        }
        for s in Registry::standard().specs() {
            prop_assert!(check_origin_numeric(s, &tabs, 1e-12).is_ok(), "{}", s.id);
        }
    }

    #[test]
    fn swapping_beams_maps_onto_mirror_criteria(seed in any::<u64>()) {
        let t = table(seed);
        let tabs = Tables::new(&t).unwrap();
        let swapped = Tables::new(&t.swapped()).unwrap();
        let reg = Registry::standard();
        let mut pairs = 0;
        for spec in reg.specs() {
            let mirror = spec.expr.swapped();
            let Some(other) = reg.specs().iter().find(|o| o.basis == spec.basis && o.expr == mirror) else { continue };
            let a = spec.evaluate(&swapped).unwrap();
            let b = other.evaluate(&tabs).unwrap();
            let scale = other.expr.eval_abs(tabs.select(other.basis));
            prop_assert!(close(a, b, scale, 1e-12), "{} vs {}: {a} {b}", spec.id, other.id);
            pairs += 1;
        }
        prop_assert!(pairs >= 20, "only {pairs} mirror pairs");
    }

    #[test]
    fn normalized_values_are_scale_free(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let t = table(seed);
        let tabs = Tables::new(&t).unwrap();
        let scaled = Tables::new(&t.scaled(lambda)).unwrap();
        for spec in Registry::standard().specs().iter().filter(|s| s.basis == MomentBasis::Intensity) {
            let Some(d) = spec.expr.homogeneous_degree() else { continue };
            let a = spec.result(&tabs).unwrap();
            let b = spec.result(&scaled).unwrap();
            let scale = spec.expr.eval_abs(&t) * lambda.powi(d as i32);
            prop_assert!(close(b.value, a.value * lambda.powi(d as i32), scale, 1e-11), "{}", spec.id);
            let nscale = spec.expr.eval_abs(&t) / t.mean_intensity().powi(d as i32);
            prop_assert!(close(b.normalized, a.normalized, nscale, 1e-11), "{}", spec.id);
        }
    }

    #[test]
    fn complex_gaussian_noise_adds(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let t = table(seed).truncated(5).unwrap();
        let conv = OrderingConvention::Laguerre;
        let two = add_noise(&add_noise(&t, a, conv).unwrap(), b, conv).unwrap();
        let one = add_noise(&t, a + b, conv).unwrap();
        for k in 0..=5 {
            for l in 0..=5 - k {
                prop_assert!(close(two.get(k, l), one.get(k, l), one.get(k, l).abs() + 1.0, 1e-10));
            }
        }
    }

    #[test]
    fn classical_states_violate_nothing(
        atoms in prop::collection::vec((0.01f64..1.0, 0.0f64..12.0, 0.0f64..12.0), 1..6),
    ) {
        let t = classical(&atoms, MAX_ORDER);
        let tabs = Tables::new(&t).unwrap();
        for spec in Registry::standard().specs() {
            let v = spec.evaluate(&tabs).unwrap();
            let scale = spec.expr.eval_abs(tabs.select(spec.basis));
            prop_assert!(v >= -1e-9 * scale, "{} = {v} on {atoms:?}", spec.id);
        }
    }
}

#[test]
fn noise_erases_violations_monotonically_for_e001() {
    // single-mode paired thermal, B = 1: <Ws^k Wi^l> = k! l! ... computed from diagonal p(n)
    let b: f64 = 1.0;
    let n = 400;
    let q = b / (1.0 + b);
    let t = MomentTable::from_fn(5, MomentBasis::Intensity, |k, l| {
        (0..n)
            .map(|m| {
                let p = q.powi(m as i32) / (1.0 + b);
                let ff = |j: usize| (0..j).map(|x| (m as f64) - x as f64).product::<f64>();
                p * ff(k) * ff(l)
            })
            .sum()
    });
    let spec = Registry::standard().require("E_001").unwrap();
    let mut prev = f64::NEG_INFINITY;
    for step in 0..=10 {
        let noisy = add_noise(&t, step as f64 * 0.2, OrderingConvention::default()).unwrap();
        let v = spec.evaluate(&Tables::new(&noisy).unwrap()).unwrap();
        assert!(v >= prev - 1e-9, "E_001 fell from {prev} to {v}");
        prev = v;
    }
}
