use std::sync::Arc;
use sublis::{Error, IndexInterval, Key, Pid, RandomnessLedger, SequenceOracle};

#[test]
fn query_identity() {
    let o = SequenceOracle::from_values((1..=5).collect()).unwrap();
    assert_eq!(o.query(3), Ok(3));
    assert_eq!(o.query(0), Err(Error::IndexOutOfDomain { x: 0, n: 5 }));
    assert_eq!(o.query(6), Err(Error::IndexOutOfDomain { x: 6, n: 5 }));
}

#[test]
fn counters() {
    let o = SequenceOracle::from_values(vec![4, 4, 4]).unwrap();
    for _ in 0..10 {
        o.query(1).unwrap();
    }
    assert_eq!((o.total_queries(), o.distinct_queries()), (10, 1));
    o.query(3).unwrap();
    assert_eq!((o.total_queries(), o.distinct_queries()), (11, 2));
    let snapshot = o.snapshot();
    assert_eq!(snapshot, vec![4, 4, 4]);
    assert_eq!(o.total_queries(), 11);
    let f = o.fresh();
    assert_eq!((f.total_queries(), f.distinct_queries()), (0, 0));
}

#[test]
fn counters_are_shared_across_threads() {
    let o = Arc::new(SequenceOracle::from_values((1..=1000).collect()).unwrap());
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let o = Arc::clone(&o);
            std::thread::spawn(move || {
                for x in 1..=1000 {
                    o.query(x).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!((o.total_queries(), o.distinct_queries()), (4000, 1000));
}

#[test]
fn value_range_is_enforced() {
    assert!(SequenceOracle::from_values(vec![1, 0]).is_err());
    assert!(SequenceOracle::with_valbound(vec![1, 5], 4).is_err());
    assert!(SequenceOracle::from_values(vec![]).is_err());
    let lazy = SequenceOracle::from_fn(4, 3, |x| x).unwrap();
    assert_eq!(lazy.query(3), Ok(3));
    assert!(matches!(
        lazy.query(4),
        Err(Error::ValueOutOfRange { x: 4, .. })
    ));
}

#[test]
fn streams_are_pure() {
    let l = RandomnessLedger::new(42);
    let key = Key::new().u64(7).u64(3);
    let (mut a, mut b) = (
        l.stream_for(Pid::ApproxLis, &key),
        l.stream_for(Pid::ApproxLis, &key),
    );
    let (mut ba, mut bb) = ([0u8; 64], [0u8; 64]);
    a.fill_bytes(&mut ba);
    b.fill_bytes(&mut bb);
    assert_eq!(ba, bb);
    let mut c = RandomnessLedger::new(42).stream_for(Pid::ApproxLis, &key);
    let mut bc = [0u8; 64];
    c.fill_bytes(&mut bc);
    assert_eq!(ba, bc);
}

#[test]
fn streams_separate_keys() {
    let l = RandomnessLedger::new(42);
    let first = |pid, key: &Key| l.stream_for(pid, key).next_u64();
    let base = first(Pid::ApproxLis, &Key::new().u64(7).u64(3));
    assert_ne!(base, first(Pid::ApproxLis, &Key::new().u64(7).u64(4)));
    assert_ne!(base, first(Pid::FindSplitter, &Key::new().u64(7).u64(3)));
    assert_ne!(
        base,
        RandomnessLedger::new(43)
            .stream_for(Pid::ApproxLis, &Key::new().u64(7).u64(3))
            .next_u64()
    );
    assert_ne!(
        base,
        l.derive("trial", 0)
            .stream_for(Pid::ApproxLis, &Key::new().u64(7).u64(3))
            .next_u64()
    );
    assert_ne!(l.derive("trial", 0), l.derive("trial", 1));
}

#[test]
fn key_encoding_is_canonical() {
    use num_rational::Ratio;
    assert_eq!(
        Key::new().ratio(Ratio::new(2, 4)),
        Key::new().ratio(Ratio::new(1, 2))
    );
    assert_ne!(Key::new().real(0.5), Key::new().real(0.25));
    assert_eq!(Key::new().real(0.1), Key::new().real(0.1));
}

#[test]
fn unit_mean() {
    let mut s = RandomnessLedger::new(1).stream_for(Pid::Test, &Key::new());
    let m = 1_000_000;
    let mean: f64 = (0..m).map(|_| s.unit()).sum::<f64>() / m as f64;
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn sample_indices_singleton() {
    let mut s = RandomnessLedger::new(1).stream_for(Pid::Test, &Key::new());
    assert_eq!(
        s.sample_indices(IndexInterval { x_l: 0, x_r: 1 }, 3)
            .unwrap(),
        vec![1, 1, 1]
    );
    assert!(s
        .sample_indices(IndexInterval { x_l: 3, x_r: 3 }, 1)
        .is_err());
}

#[test]
fn sample_indices_uniform() {
    let mut s = RandomnessLedger::new(9).stream_for(Pid::Test, &Key::new().u64(1));
    let m = 100_000u64;
    let mut counts = [0u64; 5];
    for x in s
        .sample_indices(IndexInterval { x_l: 0, x_r: 4 }, m)
        .unwrap()
    {
        counts[x as usize] += 1;
    }
    assert_eq!(counts[0], 0);
    let sd = (m as f64 * 0.25 * 0.75).sqrt();
    for &c in &counts[1..] {
        assert!((c as f64 - m as f64 / 4.0).abs() <= 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn sample_indices_deterministic() {
    let draw = || {
        RandomnessLedger::new(5)
            .stream_for(Pid::Test, &Key::new().u64(2))
            .sample_indices(IndexInterval { x_l: 10, x_r: 90 }, 50)
            .unwrap()
    };
    let a = draw();
    assert_eq!(a, draw());
    assert!(a.iter().all(|&x| (11..=90).contains(&x)));
}

#[test]
fn sample_distinct_is_distinct() {
    let mut s = RandomnessLedger::new(3).stream_for(Pid::Test, &Key::new());
    let mut v = s.sample_distinct(100, 100).unwrap();
    v.sort_unstable();
    assert_eq!(v, (1..=100).collect::<Vec<_>>());
    let w = s.sample_distinct(1000, 10).unwrap();
    let mut u = w.clone();
    u.sort_unstable();
    u.dedup();
    assert_eq!(u.len(), 10);
    assert!(s.sample_distinct(3, 4).is_err());
}

#[test]
fn below_is_uniform_on_small_ranges() {
    let mut s = RandomnessLedger::new(11).stream_for(Pid::Test, &Key::new());
    let m = 60_000;
    let mut counts = [0u64; 3];
    for _ in 0..m {
        counts[s.below(3) as usize] += 1;
    }
    let sd = (m as f64 / 3.0 * (2.0 / 3.0)).sqrt();
    for c in counts {
        assert!((c as f64 - m as f64 / 3.0).abs() <= 4.0 * sd, "{counts:?}");
    }
}
