use cim_core::ising::*;
use proptest::prelude::*;

fn arb_model() -> impl Strategy<Value = IsingModel> {
    (2usize..=7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let k = pairs.len();
        (
            Just(n),
            Just(pairs),
            proptest::collection::vec(prop_oneof![Just(0i8), Just(1i8), Just(-1i8)], k),
            prop_oneof![Just(1.0), Just(0.5), Just(2.0)],
        )
            .prop_map(|(n, pairs, signs, j)| {
                let triples: Vec<(usize, usize, i8)> =
                    pairs.iter().zip(&signs).filter(|(_, &s)| s != 0).map(|(&(a, b), &s)| (a, b, s)).collect();
                IsingModel::new(n, &triples, j).unwrap()
            })
    })
}

fn all_configs(n: usize) -> impl Iterator<Item = SpinConfig> {
    (0..1u32 << n).map(move |m| SpinConfig::from_mask(m, n))
}

/// Direct double sum, independent of the library's coupling bookkeeping.
fn oracle_energy(model: &IsingModel, s: &SpinConfig) -> f64 {
    model
        .couplings()
        .iter()
        .map(|c| {
            let (a, b) = c.pair();
            f64::from(c.sign) * model.j() * f64::from(s.spins()[a]) * f64::from(s.spins()[b])
        })
        .sum()
}

#[test]
fn energy_examples() {
    let tri = IsingModel::all_to_all_afm(3).unwrap();
    let s = |v: &[i8]| SpinConfig::new(v.to_vec()).unwrap();
    assert_eq!(energy(&tri, &s(&[1, 1, 1])).unwrap(), 3.0);
    assert_eq!(energy(&tri, &s(&[1, 1, -1])).unwrap(), -1.0);
    let four = IsingModel::all_to_all_afm(4).unwrap();
    assert_eq!(energy(&four, &s(&[1, 1, -1, -1])).unwrap(), -2.0);
    assert!(energy(&four, &s(&[1, 1, -1])).is_err());
}

#[test]
fn spectrum_examples() {
    let levels = |n| -> Vec<(f64, usize)> {
        solve_exact(&IsingModel::all_to_all_afm(n).unwrap())
            .unwrap()
            .levels
            .iter()
            .map(|l| (l.energy, l.degeneracy()))
            .collect()
    };
    assert_eq!(levels(3), vec![(-1.0, 6), (3.0, 2)]);
    assert_eq!(levels(4), vec![(-2.0, 6), (0.0, 8), (6.0, 2)]);
    assert_eq!(levels(5), vec![(-2.0, 20), (2.0, 10), (10.0, 2)]);
    let fm = IsingModel::new(2, &[(0, 1, -1)], 1.0).unwrap();
    let sp = solve_exact(&fm).unwrap();
    assert_eq!((sp.ground_energy(), sp.ground().degeneracy()), (-1.0, 2));
    assert!(matches!(solve_exact(&IsingModel::new(25, &[], 1.0).unwrap()), Err(cim_core::Error::TooLarge(25))));
}

#[test]
fn flip_bookkeeping_examples() {
    let afm = |n| IsingModel::all_to_all_afm(n).unwrap();
    assert_eq!(minimum_possible_energy(&afm(3)), -3.0);
    assert_eq!(minimum_possible_energy(&afm(5)), -10.0);
    assert_eq!(minimum_possible_energy(&IsingModel::new(3, &[], 1.0).unwrap()), 0.0);
    assert_eq!(required_flips(&afm(3), -1.0).unwrap(), 1);
    assert_eq!(required_flips(&afm(4), -2.0).unwrap(), 2);
    assert_eq!(required_flips(&afm(5), 2.0).unwrap(), 6);
    assert!(required_flips(&afm(3), -5.0).is_err());
    assert!(required_flips(&afm(3), -2.0).is_err());
    for (n, want) in [(3, 1), (4, 2), (5, 4)] {
        let m = afm(n);
        let g = solve_exact(&m).unwrap().ground_energy();
        assert_eq!(required_flips(&m, g).unwrap(), want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_z2_symmetric(model in arb_model(), mask in any::<u32>()) {
        let s = SpinConfig::from_mask(mask, model.n_spins());
        prop_assert_eq!(energy(&model, &s).unwrap(), energy(&model, &s.flipped()).unwrap());
    }

    #[test]
    fn energy_counts_unsatisfied_couplings(model in arb_model(), mask in any::<u32>()) {
        let s = SpinConfig::from_mask(mask, model.n_spins());
        let e = energy(&model, &s).unwrap();
        let unsat = model.unsatisfied(&s).unwrap().len() as f64;
        prop_assert!((e - oracle_energy(&model, &s)).abs() < 1e-12);
        prop_assert!((e - minimum_possible_energy(&model) - 2.0 * model.j() * unsat).abs() < 1e-12);
    }

    #[test]
    fn spectrum_matches_enumeration(model in arb_model()) {
        let n = model.n_spins();
        let sp = solve_exact(&model).unwrap();
        let min = all_configs(n).map(|s| oracle_energy(&model, &s)).fold(f64::INFINITY, f64::min);
        prop_assert!((sp.ground_energy() - min).abs() < 1e-12);
        prop_assert_eq!(sp.total_states(), 1usize << n);
        for w in sp.levels.windows(2) {
            prop_assert!(w[0].energy < w[1].energy);
        }
        for l in &sp.levels {
            prop_assert_eq!(l.degeneracy() % 2, 0);
            let mut sorted = l.configs.clone();
            sorted.sort();
            prop_assert_eq!(&sorted, &l.configs);
            for c in &l.configs {
                prop_assert!((oracle_energy(&model, c) - l.energy).abs() < 1e-12);
            }
            let flips = required_flips(&model, l.energy).unwrap();
            prop_assert!((minimum_possible_energy(&model) + 2.0 * model.j() * flips as f64 - l.energy).abs() < 1e-12);
        }
    }
}
