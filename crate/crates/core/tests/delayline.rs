use cim_core::delayline::*;
use cim_core::dynamics::EngineParams;
use cim_core::frustration::{build_hyperspin, default_hyperspin_phases};
use cim_core::ising::IsingModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn closed_form(r: f64) -> (f64, f64) {
    let t = (1.0 - r * r).sqrt();
    (t * (t + r * r), t * (t - r * r))
}

#[test]
fn double_pass_coefficients_at_one_tenth() {
    let m = mode_coefficients(LineVariant::Double, &SplitterParams::new(0.1).unwrap());
    let (dark, bright) = closed_form(0.1);
    assert!((m.dark - dark).abs() < 1e-12 && (m.bright - bright).abs() < 1e-12);
    assert!((m.dark - 0.999949).abs() < 1e-6);
    assert!((m.bright - 0.980050).abs() < 1e-6);
}

#[test]
fn order_verification() {
    assert!(verify_dark_order(LineVariant::Double, &[0.05, 0.1, 0.2]).is_ok());
    let single = dark_order_report(LineVariant::Single, &[0.05, 0.1, 0.2]).unwrap();
    // The single line leaks the bright mode into the dark one at second order.
    assert!(single.rows.iter().all(|r| !r.cross_ok));
    assert!(verify_dark_order(LineVariant::Single, &[0.1]).is_err());
    assert!(dark_order_report(LineVariant::Double, &[0.0]).is_err());
    assert!(dark_order_report(LineVariant::Double, &[0.31]).is_err());
}

#[test]
fn slopes_over_the_design_range() {
    let rs: Vec<f64> = (0..=18).map(|k| 0.02 * (10f64).powf(k as f64 / 18.0)).collect();
    let dev: Vec<f64> = rs.iter().map(|&r| (closed_form(r).0 - 1.0).abs()).collect();
    let loss: Vec<f64> = rs.iter().map(|&r| 1.0 - closed_form(r).1).collect();
    assert!((log_log_slope(&rs, &dev) - 4.0).abs() < 0.1);
    assert!((log_log_slope(&rs, &loss) - 2.0).abs() < 0.1);
    let lib: Vec<ModeCoefficients> =
        rs.iter().map(|&r| mode_coefficients(LineVariant::Double, &SplitterParams::new(r).unwrap())).collect();
    for (m, (&d, &l)) in lib.iter().zip(dev.iter().zip(&loss)) {
        assert!((m.dark_deviation() - d).abs() < 1e-14 && (m.bright_loss() - l).abs() < 1e-14);
    }
}

#[test]
fn triangle_schedule_rebuilds_hyperspin_channels() {
    let m = IsingModel::all_to_all_afm(3).unwrap();
    let phases = default_hyperspin_phases(&m);
    let sched = compile_multiport(&m, &phases).unwrap();
    assert_eq!(sched.entries.len(), 6);
    let fw = sched.entries.iter().filter(|e| e.direction == Direction::Forward).count();
    assert_eq!(fw, 3);
    let fe = build_hyperspin(&m, &phases, &EngineParams::default()).unwrap();
    let rebuilt = sched.hyperspin_channels(3).unwrap();
    for (ch, want) in fe.network.channels().iter().zip(&rebuilt) {
        let got = ch.dense(5);
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).norm() < 1e-12, "{}: {a} vs {b}", ch.label);
        }
    }
    let parsed = PortSchedule::parse(&sched.to_text()).unwrap();
    assert_eq!(parsed.hyperspin_channels(3).unwrap(), rebuilt);
}

#[test]
fn empty_model_and_sign_flip() {
    let empty = IsingModel::new(2, &[], 1.0).unwrap();
    let s = compile_multiport(&empty, &Default::default()).unwrap();
    assert!(s.entries.is_empty());
    assert!(s.to_text().starts_with('#'));
    let fm = IsingModel::new(2, &[(0, 1, -1)], 1.0).unwrap();
    let s = compile_multiport(&fm, &[((0, 1), 0.0)].into_iter().collect()).unwrap();
    let v = s.coupling_vector(2, false).unwrap();
    assert!((v[0] - c(1.0, 0.0)).norm() < 1e-12 && (v[1] - c(-1.0, 0.0)).norm() < 1e-12);
    assert!(compile_multiport(&fm, &Default::default()).is_err());
}

proptest! {
    #[test]
    fn single_splitter_conserves_flux(r in 0.0f64..0.999, a in (-2.0f64..2.0, -2.0f64..2.0), b in (-2.0f64..2.0, -2.0f64..2.0)) {
        let p = SplitterParams::new(r).unwrap();
        prop_assert!((p.t() * p.t() + p.r() * p.r() - 1.0).abs() < 1e-12);
        let (a, b) = (c(a.0, a.1), c(b.0, b.1));
        let (x, y) = beam_splitter(&p, a, b);
        prop_assert!((x.norm_sqr() + y.norm_sqr() - a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn schedule_round_trip(n in 2usize..6, signs in proptest::collection::vec(prop_oneof![Just(0i8), Just(1), Just(-1)], 10), k in proptest::collection::vec(0i64..16, 10)) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let triples: Vec<(usize, usize, i8)> =
            pairs.iter().zip(&signs).filter(|(_, &s)| s != 0).map(|(&(a, b), &s)| (a, b, s)).collect();
        let m = IsingModel::new(n, &triples, 1.0).unwrap();
        let phases = triples.iter().zip(&k).map(|(t, &q)| ((t.0, t.1), q as f64 * std::f64::consts::PI / 8.0)).collect();
        let sched = compile_multiport(&m, &phases).unwrap();
        let parsed = PortSchedule::parse(&sched.to_text()).unwrap();
        for conj in [false, true] {
            let want: Vec<Complex64> = {
                let mut v = vec![c(0.0, 0.0); n];
                for &(a, b, s) in &triples {
                    let e = Complex64::from_polar(1.0, if conj { -1.0 } else { 1.0 } * phases[&(a, b)]);
                    v[a] += e;
                    v[b] += e * f64::from(s);
                }
                v
            };
            let got = parsed.coupling_vector(n, conj).unwrap();
            for (x, y) in got.iter().zip(&want) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
