use proptest::prelude::*;
use sublis::exact::{lis_exact_dp, lis_length};
use sublis::harness::*;
use sublis::{RandomnessLedger, SequenceOracle};

fn oracle(v: &[u64]) -> SequenceOracle {
    SequenceOracle::from_values(v.to_vec()).unwrap()
}

#[test]
fn staircase_examples() {
    assert_eq!(gen_staircase(2, 2).unwrap(), vec![2, 1, 4, 3]);
    assert_eq!(lis_length(&gen_staircase(2, 2).unwrap()), 2);
    assert_eq!(gen_staircase(1, 5).unwrap(), vec![1, 2, 3, 4, 5]);
    assert_eq!(lis_length(&gen_staircase(4, 8).unwrap()), 8);
    assert!(gen_staircase(0, 3).is_err());
    assert!(gen_staircase(3, 0).is_err());
}

fn pair_violations<T: Ord>(v: &[T]) -> usize {
    (0..v.len())
        .map(|i| (i + 1..v.len()).filter(|&j| v[i] > v[j]).count())
        .sum()
}

#[test]
fn staircase_shift_preserves_order() {
    for k in 1..6i64 {
        for t in 1..8i64 {
            let unshifted: Vec<i64> = (0..t)
                .flat_map(|i| (0..k).map(move |j| i * k - j))
                .collect();
            let shifted = gen_staircase(k as u64, t as u64).unwrap();
            assert_eq!(pair_violations(&unshifted), pair_violations(&shifted));
            for a in 0..shifted.len() {
                for b in 0..shifted.len() {
                    assert_eq!(unshifted[a].cmp(&unshifted[b]), shifted[a].cmp(&shifted[b]));
                }
            }
        }
    }
}

#[test]
fn three_block_examples() {
    let one = gen_three_block(1).unwrap();
    assert_eq!(one.f.len(), 6);
    assert_eq!((lis_length(&one.f), lis_length(&one.f_prime)), (4, 2));
    let eight = gen_three_block(8).unwrap();
    assert_eq!((lis_length(&eight.f), lis_length(&eight.f_prime)), (32, 16));
    assert_eq!(eight.f[..24], eight.f_prime[..24]);
    for r in [1, 2, 4, 8, 16] {
        let tb = gen_three_block(r).unwrap();
        assert_eq!(lis_length(&tb.f) as u64, tb.lis_f);
        assert_eq!(lis_length(&tb.f_prime) as u64, tb.lis_f_prime);
        assert!(tb
            .f
            .iter()
            .chain(&tb.f_prime)
            .all(|&y| (1..=tb.valbound).contains(&y)));
        assert!(tb.f[3 * r as usize..].iter().all(|&y| y > r && y <= 99 * r));
        assert!(tb.f_prime[3 * r as usize..]
            .iter()
            .all(|&y| y > r && y <= 99 * r));
    }
    assert!(gen_three_block(0).is_err());
}

#[test]
fn corrupted_monotone_examples() {
    assert_eq!(
        gen_corrupted_monotone(100, 0.0, 7).unwrap(),
        (1..=100).collect::<Vec<_>>()
    );
    let v = gen_corrupted_monotone(1024, 0.1, 3).unwrap();
    assert_eq!(v, gen_corrupted_monotone(1024, 0.1, 3).unwrap());
    assert_ne!(v, gen_corrupted_monotone(1024, 0.1, 4).unwrap());
    let changed = v
        .iter()
        .enumerate()
        .filter(|&(i, &y)| y != i as u64 + 1)
        .count();
    assert!(changed <= 103);
    let eps_f = 1.0 - lis_length(&v) as f64 / 1024.0;
    assert!(eps_f <= 0.1 + 1e-9 && eps_f > 0.0);
    assert!(v.iter().all(|&y| (1..=1024).contains(&y)));
    assert!(gen_corrupted_monotone(10, 1.5, 0).is_err());
}

#[test]
fn permutation_is_a_permutation() {
    let mut p = gen_permutation(500, 9).unwrap();
    assert_eq!(p, gen_permutation(500, 9).unwrap());
    p.sort_unstable();
    assert_eq!(p, (1..=500).collect::<Vec<_>>());
}

#[test]
fn generators_report_exact_lis() {
    let specs = vec![
        GeneratorSpec::Staircase { k: 3, t: 40 },
        GeneratorSpec::ThreeBlock { r: 5, prime: false },
        GeneratorSpec::ThreeBlock { r: 5, prime: true },
        GeneratorSpec::Sorted { n: 77 },
        GeneratorSpec::Reversed { n: 77 },
        GeneratorSpec::CorruptedMonotone {
            n: 300,
            eps: 0.3,
            seed: 1,
        },
        GeneratorSpec::RandomPermutation { n: 300, seed: 1 },
    ];
    for spec in specs {
        let inst = spec.generate().unwrap();
        assert_eq!(Some(inst.values.len() as u64), spec.n());
        assert!(inst
            .values
            .iter()
            .all(|&y| (1..=inst.valbound).contains(&y)));
        if let Some(l) = inst.reported_lis {
            assert_eq!(l as usize, lis_length(&inst.values), "{spec:?}");
            assert_eq!(l as usize, lis_exact_dp(&inst.values, 4096).unwrap());
        }
        assert!(inst.oracle().is_ok());
    }
}

#[test]
fn naive_examples() {
    let v = gen_corrupted_monotone(200, 0.3, 2).unwrap();
    let o = oracle(&v);
    let l = RandomnessLedger::new(0);
    assert_eq!(naive_estimate(&o, &l, 200).unwrap(), lis_length(&v) as f64);
    let sorted = oracle(&gen_sorted(1000).unwrap());
    for m in [1, 17, 256, 1000] {
        assert_eq!(naive_estimate(&sorted, &l, m).unwrap(), 1000.0);
    }
    assert!(naive_estimate(&o, &l, 0).is_err());
    assert!(naive_estimate(&o, &l, 201).is_err());
}

#[test]
fn naive_overestimates_staircase() {
    let n = 1u64 << 14;
    let o = oracle(&gen_staircase(2, n / 2).unwrap());
    let ests: Vec<f64> = (0..50)
        .map(|s| naive_estimate(&o, &RandomnessLedger::new(s), 256).unwrap())
        .collect();
    assert!(median(&ests) >= 0.9 * n as f64);
}

#[test]
fn median_examples() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(&[]).is_nan());
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let v = gen_permutation(333, 5).unwrap();
    for name in ["a.txt", "a.u64"] {
        let path = dir.path().join(name);
        write_array(&path, &v).unwrap();
        assert_eq!(read_array(&path).unwrap(), v);
        let inst = GeneratorSpec::File { path: path.clone() }
            .generate()
            .unwrap();
        assert_eq!(inst.values, v);
        assert_eq!(inst.valbound, 333);
    }
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1\nx\n").unwrap();
    assert!(read_array(&bad).is_err());
    let odd = dir.path().join("odd.u64");
    std::fs::write(&odd, [1u8, 2, 3]).unwrap();
    assert!(read_array(&odd).is_err());
    assert!(read_array(&dir.path().join("missing.txt")).is_err());
    assert!(GeneratorSpec::File {
        path: dir.path().join("missing.txt")
    }
    .generate()
    .is_err());
}

#[test]
fn experiment_single_seed_and_determinism() {
    let spec = GeneratorSpec::CorruptedMonotone {
        n: 2048,
        eps: 0.1,
        seed: 3,
    };
    let one = run_experiment(&spec, Algo::Improved, &desk_profile(), &[7]).unwrap();
    assert_eq!(one.estimates.len(), 1);
    assert_eq!(one.n, 2048);
    let exact = one.exact_lis.unwrap();
    assert_eq!(
        one.summary.median_abs_error,
        Some((one.summary.median_estimate - exact as f64).abs())
    );
    let seeds = [1, 2, 3, 4, 5];
    for algo in [Algo::Basic, Algo::Improved, Algo::Naive] {
        let a = run_experiment(&spec, algo, &desk_profile(), &seeds)
            .unwrap()
            .without_timings();
        let b = run_experiment(&spec, algo, &desk_profile(), &seeds)
            .unwrap()
            .without_timings();
        assert_eq!(a, b);
        assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
    }
}

#[test]
fn reports_round_trip_through_json() {
    let spec = GeneratorSpec::Staircase { k: 2, t: 512 };
    let res = run_experiment(&spec, Algo::Naive, &AlgoParams::default(), &[1, 2, 3]).unwrap();
    let back: ExperimentResult = from_json(&to_json(&res).unwrap()).unwrap();
    assert_eq!(back, res);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    write_json(&path, &res).unwrap();
    let back: ExperimentResult = from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, res);
    let csv = experiments_csv(&[res]).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("generator,algo,n,"));
}

#[test]
fn scaling_examples() {
    let fam = |n| GeneratorSpec::CorruptedMonotone {
        n,
        eps: 0.1,
        seed: 1,
    };
    let single = query_scaling(
        fam,
        Algo::Improved,
        &desk_profile(),
        &[4096],
        &[1, 2, 3, 4, 5],
    )
    .unwrap();
    assert_eq!(single.rows.len(), 1);
    assert_eq!(single.rows[0].ratio, None);
    assert!(query_scaling(fam, Algo::Improved, &desk_profile(), &[4096, 1024], &[1]).is_err());

    let linear = AlgoParams {
        naive_fraction: Some(0.25),
        ..AlgoParams::default()
    };
    let t = query_scaling(
        fam,
        Algo::Naive,
        &linear,
        &[1024, 4096, 16384],
        &[1, 2, 3, 4, 5],
    )
    .unwrap();
    for row in &t.rows[1..] {
        let r = row.ratio.unwrap();
        assert!((r - 4.0).abs() < 1e-9, "{r}");
    }
    let csv = scaling_csv(&t).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let back: ScalingTable = from_json(&to_json(&t).unwrap()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn staircase_sweep_summary() {
    let mut prev = 0.0;
    for t in [64, 128, 256, 512] {
        let res = run_experiment(
            &GeneratorSpec::Staircase { k: 2, t },
            Algo::Improved,
            &AlgoParams::default(),
            &[1],
        )
        .unwrap();
        assert_eq!(res.exact_lis, Some(t));
        assert!(res.summary.median_estimate >= prev);
        prev = res.summary.median_estimate;
    }
}

#[test]
fn verify_suites_smoke() {
    let l = RandomnessLedger::new(11);
    for suite in [
        Suite::Splitter,
        Suite::Net,
        Suite::Grid,
        Suite::Dichotomy,
        Suite::GridApprox,
    ] {
        let r = verify_suite(suite, 10, &l).unwrap();
        assert_eq!(r.instances, 10);
        assert!(
            r.passed + r.failed == r.eligible && r.eligible <= r.instances,
            "{r:?}"
        );
        assert_eq!(r, verify_suite(suite, 10, &l).unwrap());
    }
}

#[test]
fn algo_params() {
    let p = AlgoParams::default();
    assert_eq!(p.naive_sample_size(100), 100);
    assert_eq!(p.naive_sample_size(1 << 20), 256);
    assert_eq!(
        AlgoParams {
            naive_fraction: Some(0.5),
            ..p.clone()
        }
        .naive_sample_size(64),
        32
    );
    assert!(p.parameter_set(Algo::Naive, 8, 8).is_err());
    let d = desk_profile()
        .parameter_set(Algo::Improved, 1 << 20, 1 << 20)
        .unwrap();
    assert_eq!((d.t_max, d.alpha, d.sigma), (2, 0.25, 8.0));
}

proptest! {
    #[test]
    fn staircase_lis_is_block_count(k in 1u64..20, t in 1u64..200) {
        let v = gen_staircase(k, t).unwrap();
        prop_assert_eq!(v.len() as u64, k * t);
        prop_assert_eq!(lis_length(&v) as u64, t);
    }
}
