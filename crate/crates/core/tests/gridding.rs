use proptest::prelude::*;
use sublis::exact::{columns_are_fine, is_value_net, lis_length, points_in_box};
use sublis::gridding::*;
use sublis::model::{box_spanned, prec};
use sublis::{Box, Grid, Point, RandomnessLedger, SequenceOracle};

fn oracle(v: &[u64]) -> SequenceOracle {
    SequenceOracle::from_values(v.to_vec()).unwrap()
}

fn xi() -> FailureProb {
    FailureProb::new(1e-3)
}

#[test]
fn net_examples() {
    let l = RandomnessLedger::new(1);
    let v: Vec<u64> = (0..40u64).map(|i| (i * 13) % 40 + 1).collect();
    let o = oracle(&v);
    let b = Box::new(0, 40, 5, 30).unwrap();
    let whole = build_net(&o, &l, &b, 1.0, xi(), NET_SAMPLE_CAP).unwrap();
    assert!(whole.values.contains(&b.y_t()));
    assert!(whole.values.len() <= 4);
    assert!(is_value_net(&o, &b, &whole.values, 1.0).unwrap());

    let c = oracle(&[7; 64]);
    let cb = c.universe();
    for alpha in [0.5, 0.25, 0.1] {
        let net = build_net(&c, &l, &cb, alpha, xi(), NET_SAMPLE_CAP).unwrap();
        assert!(net.values.contains(&7));
        assert!(is_value_net(&c, &cb, &net.values, alpha).unwrap());
    }
    assert!(build_net(
        &o,
        &l,
        &Box::new(3, 3, 1, 2).unwrap(),
        0.5,
        xi(),
        NET_SAMPLE_CAP
    )
    .is_err());
}

#[test]
fn sampled_net_stays_in_range() {
    let n = 1 << 14;
    let v: Vec<u64> = (0..n as u64).map(|i| (i * 7919) % n as u64 + 1).collect();
    let o = oracle(&v);
    let b = Box::new(100, n as u64 - 100, 2000, 12000).unwrap();
    let alpha = 0.25;
    let net = build_net(&o, &RandomnessLedger::new(5), &b, alpha, xi(), 1024).unwrap();
    assert!(net.samples < b.width());
    assert!(net.effective_xi > 0.0);
    assert!(net.values.len() as f64 <= 4.0 * (1.0 / alpha).ceil());
    assert!(net.values.iter().all(|y| b.ys.contains(*y)));
    assert_eq!(net.values.last(), Some(&b.y_t()));
    assert!(net.values.windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn grid_examples() {
    let l = RandomnessLedger::new(2);
    let o = oracle(&(1..=16).collect::<Vec<_>>());
    let b = Box::new(0, 8, 1, 16).unwrap();
    let g = build_grid(&o, &l, &b, 0.5, xi(), NET_SAMPLE_CAP).unwrap();
    assert!(!g.full_refinement);
    assert!(g.grid.xs.contains(&4));
    assert!(columns_are_fine(&b, &g.grid.xs, 0.5));

    let b4 = Box::new(0, 4, 1, 16).unwrap();
    assert!(
        !build_grid(&o, &l, &b4, 0.5, xi(), NET_SAMPLE_CAP)
            .unwrap()
            .full_refinement
    );
    let full = build_grid(&o, &l, &b4, 0.25, xi(), NET_SAMPLE_CAP).unwrap();
    assert!(full.full_refinement);
    assert_eq!(full.grid.xs, vec![1, 2, 3]);
    assert_eq!(full.grid.ys, vec![1, 2, 3, 4, 16]);
    assert!(build_grid(
        &o,
        &l,
        &Box::new(2, 2, 1, 3).unwrap(),
        0.5,
        xi(),
        NET_SAMPLE_CAP
    )
    .is_err());
}

#[test]
fn failure_prob_for_grid() {
    let f = FailureProb::for_grid(1 << 10);
    assert!((f.ln_inv - 200.0 * std::f64::consts::LN_2).abs() < 1e-9);
    assert!((FailureProb::new(0.25).value() - 0.25).abs() < 1e-12);
}

#[test]
fn path_count_examples() {
    let b = Box::new(0, 6, 1, 10).unwrap();
    let one = GridDigraph::new(&Grid::new(vec![3], vec![2, 5, 10]), &b).unwrap();
    assert_eq!(one.path_count(), 3);
    let two = GridDigraph::new(&Grid::new(vec![2, 4], vec![3, 10]), &b).unwrap();
    // Row pairs (3,3), (3,10), (10,10).
    assert_eq!(two.path_count(), 3);
    let none = GridDigraph::new(&Grid::new(vec![], vec![10]), &b).unwrap();
    assert_eq!(none.path_count(), 1);
    assert!(GridDigraph::new(&Grid::new(vec![6], vec![10]), &b).is_err());
}

#[test]
fn arcs_only_join_adjacent_columns_upwards() {
    let b = Box::new(0, 9, 1, 20).unwrap();
    let dg = GridDigraph::new(&Grid::new(vec![3, 6], vec![4, 11, 20]), &b).unwrap();
    let arcs = dg.arcs();
    for (p, q, bx) in &arcs {
        assert!(p.x < q.x && p.y <= q.y);
        assert_eq!(*bx, box_spanned(*p, *q).unwrap());
    }
    assert_eq!(arcs.iter().filter(|(p, _, _)| *p == dg.source).count(), 3);
    assert_eq!(arcs.iter().filter(|(_, q, _)| *q == dg.sink).count(), 3);
    assert_eq!(arcs.len(), 3 + 6 + 3);
}

#[test]
fn zero_weights_pick_lowest_rows() {
    let b = Box::new(0, 9, 1, 20).unwrap();
    let dg = GridDigraph::new(&Grid::new(vec![3, 6], vec![4, 11, 20]), &b).unwrap();
    let (chain, total) = longest_path(&dg, |_| Ok(Weight::from_integer(0))).unwrap();
    assert_eq!(total, Weight::from_integer(0));
    assert_eq!(
        chain.points(),
        vec![
            Point::new(0, 1),
            Point::new(3, 4),
            Point::new(6, 4),
            Point::new(9, 20)
        ]
    );
}

#[test]
fn single_column_picks_argmax() {
    let b = Box::new(0, 4, 1, 10).unwrap();
    let dg = GridDigraph::new(&Grid::new(vec![2], vec![3, 6, 10]), &b).unwrap();
    let (chain, total) = longest_path(&dg, |bx| {
        Ok(Weight::from_integer(if bx.x_r() == 2 && bx.y_t() == 6 {
            5
        } else {
            1
        }))
    })
    .unwrap();
    assert_eq!(total, Weight::from_integer(6));
    assert_eq!(chain.points()[1], Point::new(2, 6));
}

fn arb_weight(seed: u64) -> impl Fn(&Box) -> i128 {
    move |bx: &Box| {
        let h = [bx.x_l(), bx.x_r(), bx.y_b(), bx.y_t()]
            .iter()
            .fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, &v| {
                (h ^ v).wrapping_mul(0x1000_0000_01b3).rotate_left(17)
            });
        (h % 13) as i128
    }
}

/// Every source-to-sink path, as its corner list.
fn all_paths(dg: &GridDigraph) -> Vec<Vec<Point>> {
    fn go(dg: &GridDigraph, i: usize, cur: &mut Vec<Point>, out: &mut Vec<Vec<Point>>) {
        let last = *cur.last().unwrap();
        if i == dg.columns.len() {
            if prec(last, dg.sink) {
                cur.push(dg.sink);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for q in dg.column(i) {
            if q.y >= last.y {
                cur.push(q);
                go(dg, i + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(dg, 0, &mut vec![dg.source], &mut out);
    out
}

fn arb_grid() -> impl Strategy<Value = (Box, Grid)> {
    (
        2u64..12,
        1u64..4,
        2u64..15,
        prop::collection::vec(0u64..40, 1..5),
        prop::collection::vec(0u64..40, 1..5),
    )
        .prop_map(|(w, yb, h, cols, rows)| {
            let b = Box::new(0, w, yb, yb + h).unwrap();
            let xs = cols.iter().map(|c| 1 + c % (w - 1)).collect();
            let mut ys: Vec<u64> = rows.iter().map(|r| yb + r % (h + 1)).collect();
            ys.push(b.y_t());
            (b, Grid::new(xs, ys))
        })
}

proptest! {
    #[test]
    fn longest_path_matches_enumeration((b, grid) in arb_grid(), seed in 0u64..1000) {
        let dg = GridDigraph::new(&grid, &b).unwrap();
        let wf = arb_weight(seed);
        let paths = all_paths(&dg);
        prop_assert_eq!(paths.len() as u128, dg.path_count());
        let brute = paths
            .iter()
            .map(|pts| pts.windows(2).map(|p| wf(&box_spanned(p[0], p[1]).unwrap())).sum::<i128>())
            .max()
            .unwrap();
        let (chain, total) = longest_path(&dg, |bx| Ok(Weight::from_integer(wf(bx)))).unwrap();
        prop_assert_eq!(total, Weight::from_integer(brute));
        prop_assert_eq!(chain.span(), b);
        let along: i128 = chain.boxes().iter().map(&wf).sum();
        prop_assert_eq!(along, brute);
        let first_optimal = paths
            .iter()
            .filter(|pts| pts.windows(2).map(|p| wf(&box_spanned(p[0], p[1]).unwrap())).sum::<i128>() == brute)
            .map(|pts| pts.iter().map(|p| p.y).collect::<Vec<_>>())
            .min()
            .unwrap();
        prop_assert_eq!(chain.points().iter().map(|p| p.y).collect::<Vec<_>>(), first_optimal);
    }

    #[test]
    fn grid_columns_are_fine(w in 1u64..400, k in 1u32..40) {
        let alpha = 1.0 / k as f64;
        let b = Box::new(7, 7 + w, 1, 5).unwrap();
        let xs = grid_columns(&b, alpha);
        prop_assert!(xs.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(xs.iter().all(|&x| x > b.x_l() && x < b.x_r()));
        if w as f64 >= 1.0 / alpha {
            prop_assert!(columns_are_fine(&b, &xs, alpha));
        }
    }

    #[test]
    fn full_refinement_chain_matches_generic(v in prop::collection::vec(1u64..30, 1..14), yb in 1u64..10, h in 0u64..25) {
        let n = v.len() as u64;
        let o = oracle(&v);
        let b = Box::new(0, n, yb, yb + h).unwrap();
        let (chain, len) = full_refinement_chain(&b, &v).unwrap();
        let inbox: Vec<u64> = v.iter().copied().filter(|y| b.ys.contains(*y)).collect();
        prop_assert_eq!(len as usize, lis_length(&inbox));
        let dg = GridDigraph::new(&full_refinement_grid(&b, &v), &b).unwrap();
        let (generic, total) = longest_path(&dg, |d| Ok(Weight::from_integer(points_in_box(&o, d)?.len() as i128))).unwrap();
        prop_assert_eq!(total, Weight::from_integer(len as i128));
        prop_assert_eq!(chain.span(), b);
        let along: usize = chain.boxes().iter().map(|d| points_in_box(&o, d).unwrap().len()).sum();
        prop_assert_eq!(along as u64, len);
        prop_assert_eq!(&chain, &generic);
    }

    #[test]
    fn built_grids_are_b_grids(v in prop::collection::vec(1u64..200, 8..600), k in 1u32..20, seed in 0u64..100) {
        let o = oracle(&v);
        let b = o.universe();
        let alpha = 1.0 / (k as f64 + 0.5);
        let out = build_grid(&o, &RandomnessLedger::new(seed), &b, alpha, xi(), NET_SAMPLE_CAP).unwrap();
        prop_assert!(out.grid.check_b_grid(&b).is_ok());
        prop_assert!(out.grid.ys.contains(&b.y_t()));
        prop_assert_eq!(out.full_refinement, b.width() as f64 <= 1.0 / alpha);
        if !out.full_refinement {
            prop_assert!(out.grid.xs.len() as f64 <= 1.0 + (1.0 / alpha).ceil());
            prop_assert!(out.grid.ys.len() as f64 <= 16.0 / (alpha * alpha));
        }
        let dg = GridDigraph::new(&out.grid, &b).unwrap();
        let (chain, _) = longest_path(&dg, |d| Ok(Weight::from_integer(points_in_box(&o, d)?.len() as i128))).unwrap();
        prop_assert_eq!(chain.span(), b);
    }
}
