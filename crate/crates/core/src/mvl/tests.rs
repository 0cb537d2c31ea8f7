use super::*;
use crate::device::LevelPulses;
use proptest::prelude::*;

fn array(rows: usize, cols: usize) -> Crossbar {
    Crossbar::new(rows, cols, DeviceParams::default(), VariationSpec::none(), 3).unwrap()
}

/// Independent decoder: sum of d * 3^i in u128.
fn value(digits: &[u8]) -> u128 {
    let mut p = 1u128;
    let mut v = 0u128;
    for &d in digits {
        v += d as u128 * p;
        p = p.saturating_mul(3);
    }
    v
}

#[test]
fn trit_vector_conversions() {
    let t = TritVector::from_u128(5, 3).unwrap();
    assert_eq!(t.digits(), [2, 1, 0]);
    assert_eq!(t.to_string(), "012");
    assert_eq!(t.to_u128(), Some(5));
    assert_eq!(TritVector::parse("0t12", 3).unwrap(), t);
    assert_eq!(TritVector::parse("5", 3).unwrap(), t);
    assert_eq!("012".parse::<TritVector>().unwrap(), t);
    assert!(matches!(
        TritVector::from_u128(27, 3),
        Err(MvlError::Overflow { trits: 3 })
    ));
    assert!(matches!(TritVector::parse("0t1000", 3), Err(MvlError::Overflow { .. })));
    assert!(matches!(TritVector::parse("0t13", 3), Err(MvlError::Parse(_))));
    assert!(matches!(
        TritVector::new(vec![0, 3]),
        Err(MvlError::Digit { index: 1, value: 3 })
    ));
}

#[test]
fn forty_one_trits_cover_u64() {
    let max = TritVector::from_u128(u64::MAX as u128, 41).unwrap();
    assert_eq!(max.len(), 41);
    assert!(TritVector::from_u128(u64::MAX as u128, 40).is_err());
    assert!(value(&[2; 41]) > u64::MAX as u128);
}

#[test]
fn zero_writes_level_zero() {
    let cfg = LevelConfig::six_level();
    let mut xb = array(1, 4);
    write_trits(&mut xb, (0, 0), &TritVector::zero(4), &cfg).unwrap();
    for c in 0..4 {
        assert_eq!(xb.read_level(0, c, &cfg).unwrap(), 0);
    }
}

#[test]
fn trits_round_trip() {
    let cfg = LevelConfig::six_level();
    let mut xb = array(2, 2);
    let v = TritVector::new(vec![2, 1, 0]).unwrap();
    write_trits(&mut xb, (0, 1), &v, &cfg).unwrap();
    assert_eq!(read_trits(&mut xb, (0, 1), 3, &cfg).unwrap(), v);
    assert!(matches!(
        write_trits(&mut xb, (1, 0), &v, &cfg),
        Err(MvlError::Capacity {
            required: 3,
            available: 2
        })
    ));
}

#[test]
fn two_level_ladder_is_rejected() {
    let cfg = LevelConfig::calibrate(&DeviceParams::default(), 2, LevelPulses::default()).unwrap();
    let mut xb = array(1, 2);
    assert!(matches!(
        write_trits(&mut xb, (0, 0), &TritVector::zero(1), &cfg),
        Err(MvlError::Config { field: "n_levels", .. })
    ));
}

#[test]
fn small_sums() {
    let cfg = LevelConfig::six_level();
    let mut xb = array(1, 4);
    let z = TritVector::zero(1);
    assert_eq!(ternary_add(&mut xb, &z, &z, &cfg).unwrap().digits(), [0, 0]);
    let one = TritVector::new(vec![1]).unwrap();
    let two = TritVector::new(vec![2]).unwrap();
    assert_eq!(ternary_add(&mut xb, &one, &two, &cfg).unwrap().digits(), [0, 1]);
    assert!(matches!(
        ternary_add(&mut xb, &one, &TritVector::zero(2), &cfg),
        Err(MvlError::LengthMismatch { a: 1, b: 2 })
    ));
    assert!(matches!(
        ternary_add(&mut xb, &TritVector::zero(2), &TritVector::zero(2), &cfg),
        Err(MvlError::Capacity {
            required: 7,
            available: 4
        })
    ));
}

#[test]
fn adder_exhaustive_up_to_three_trits() {
    let cfg = LevelConfig::six_level();
    let mut xb = array(1, 10);
    for n in 1..=3usize {
        let m = 3u128.pow(n as u32);
        for a in 0..m {
            for b in 0..m {
                let ta = TritVector::from_u128(a, n).unwrap();
                let tb = TritVector::from_u128(b, n).unwrap();
                let s = ternary_add(&mut xb, &ta, &tb, &cfg).unwrap();
                assert_eq!(s.len(), n + 1);
                assert_eq!(value(s.digits()), a + b);
            }
        }
    }
}

#[test]
fn c2c_misread_rate_is_measured() {
    let cfg = LevelConfig::six_level();
    let p = DeviceParams::default();
    let off = trit_error_rate(&p, &VariationSpec::none(), &cfg, 500, 1).unwrap();
    assert_eq!(off, 0.0);
    let on = VariationSpec {
        c2c: true,
        ..VariationSpec::none()
    };
    let rate = trit_error_rate(&p, &on, &cfg, 2000, 1).unwrap();
    assert!((0.0..0.05).contains(&rate), "{rate}");
}

#[test]
fn krinsky_rule_examples() {
    assert_eq!(krinsky_next(5, 5, Feedback::Penalty), 6);
    assert_eq!(action_of(6, 5), 2);
    assert_eq!(krinsky_next(6, 5, Feedback::Penalty), 5);
    assert_eq!(krinsky_next(3, 5, Feedback::Reward), 1);
    assert_eq!(krinsky_next(1, 5, Feedback::Reward), 1);
    assert_eq!(krinsky_next(7, 5, Feedback::Reward), 10);
    assert_eq!(krinsky_next(10, 5, Feedback::Reward), 10);
}

#[test]
fn krinsky_step_on_device() {
    let levels = LevelConfig::six_level();
    let cfg = AutomatonConfig::new(3, 0.2, 0.6);
    cfg.validate(&levels).unwrap();
    let mut xb = array(1, 1);
    xb.program_level(0, 0, &levels, 2).unwrap(); // state 3, action-1 boundary
    assert_eq!(
        krinsky_step(&mut xb, (0, 0), &cfg, &levels, Feedback::Penalty).unwrap(),
        4
    );
    assert_eq!(xb.read_level(0, 0, &levels).unwrap(), 3);
    assert_eq!(
        krinsky_step(&mut xb, (0, 0), &cfg, &levels, Feedback::Reward).unwrap(),
        6
    );
}

#[test]
fn off_map_level_is_corruption() {
    let levels = LevelConfig::calibrate(&DeviceParams::default(), 10, LevelPulses::default()).unwrap();
    let cfg = AutomatonConfig::new(3, 0.2, 0.6);
    let mut xb = array(1, 1);
    xb.program_level(0, 0, &levels, 8).unwrap();
    assert!(matches!(
        krinsky_step(&mut xb, (0, 0), &cfg, &levels, Feedback::Reward),
        Err(MvlError::StateCorruption { level: 8 })
    ));
}

#[test]
fn config_validation() {
    let levels = LevelConfig::six_level();
    assert!(AutomatonConfig::new(4, 0.2, 0.6).validate(&levels).is_err());
    assert!(AutomatonConfig::new(3, 1.2, 0.6).validate(&levels).is_err());
    let mut dup = AutomatonConfig::new(2, 0.2, 0.6);
    dup.level_map = vec![0, 1, 1, 2];
    assert!(matches!(
        dup.validate(&levels),
        Err(MvlError::Config { field: "level_map", .. })
    ));
}

#[test]
fn no_penalties_pin_the_automaton() {
    let cfg = AutomatonConfig::new(3, 0.0, 0.0);
    let run = run_software(&cfg, 200, 9);
    let pinned = run.trajectory[1].state;
    assert!(pinned == 1 || pinned == 6);
    assert!(run.trajectory[1..].iter().all(|r| r.state == pinned));
    let dev = run_automaton(
        &cfg,
        &LevelConfig::six_level(),
        &DeviceParams::default(),
        &VariationSpec::none(),
        200,
        9,
    )
    .unwrap();
    assert_eq!(dev.states(), run.states());
}

#[test]
fn device_matches_software_depth_five() {
    let levels = LevelConfig::calibrate(&DeviceParams::default(), 10, LevelPulses::default()).unwrap();
    let cfg = AutomatonConfig::new(5, 0.2, 0.6);
    for seed in 0..3 {
        let sw = run_software(&cfg, 2000, seed);
        let dev = run_automaton(
            &cfg,
            &levels,
            &DeviceParams::default(),
            &VariationSpec::none(),
            2000,
            seed,
        )
        .unwrap();
        assert_eq!(dev.trajectory, sw.trajectory);
        assert_eq!(dev.misdetections, 0);
    }
}

#[test]
fn c2c_perturbation_is_counted() {
    let cfg = AutomatonConfig::new(3, 0.2, 0.6);
    let on = VariationSpec {
        c2c: true,
        ..VariationSpec::none()
    };
    let run = run_automaton(&cfg, &LevelConfig::six_level(), &DeviceParams::default(), &on, 3000, 4).unwrap();
    let flagged = run.trajectory.iter().filter(|r| r.misread).count();
    assert_eq!(flagged, run.misdetections);
    assert_eq!(run.to_csv().lines().count(), 3001);
}

#[test]
fn expediency_grows_with_depth() {
    // Welch-style comparison of mean action-1 frequency over 30 seeds.
    let stats = |depth: usize| {
        let cfg = AutomatonConfig::new(depth, 0.2, 0.6);
        let f: Vec<f64> = (0..30)
            .map(|s| run_software(&cfg, 10_000, s).action1_frequency(1000))
            .collect();
        let m = f.iter().sum::<f64>() / f.len() as f64;
        let var = f.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (f.len() - 1) as f64;
        (m, var / f.len() as f64)
    };
    let all: Vec<(f64, f64)> = (1..=5).map(stats).collect();
    for w in all.windows(2) {
        let ((m0, v0), (m1, v1)) = (w[0], w[1]);
        assert!(m1 >= m0 - 1.96 * (v0 + v1).sqrt(), "{all:?}");
    }
    assert!(all[4].0 >= 0.8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adder_matches_integer_oracle(a in proptest::collection::vec(0u8..3, 41), b in proptest::collection::vec(0u8..3, 41)) {
        let cfg = LevelConfig::six_level();
        let mut xb = array(4, 32);
        let ta = TritVector::new(a.clone()).unwrap();
        let tb = TritVector::new(b.clone()).unwrap();
        let s = ternary_add(&mut xb, &ta, &tb, &cfg).unwrap();
        prop_assert_eq!(value(s.digits()), value(&a) + value(&b));
    }

    #[test]
    fn decimal_round_trip(v in any::<u64>()) {
        let t = TritVector::from_u128(v as u128, 41).unwrap();
        prop_assert_eq!(value(t.digits()), v as u128);
        prop_assert_eq!(TritVector::parse(&v.to_string(), 41).unwrap(), t.clone());
        prop_assert_eq!(TritVector::parse(&format!("0t{t}"), 41).unwrap(), t);
    }
}
