use proptest::prelude::*;
use sublis::model::*;
use sublis::{Box, BoxChain, Error, IndexInterval, Point, StripDecomposition};

fn p(x: u64, y: u64) -> Point {
    Point::new(x, y)
}

#[test]
fn compare_points_examples() {
    assert_eq!(compare_points(p(1, 2), p(2, 3)), Relation::Prec);
    assert_eq!(compare_points(p(1, 5), p(2, 3)), Relation::SeViolation);
    assert_eq!(compare_points(p(3, 3), p(3, 3)), Relation::Equal);
    let rels = relations(p(3, 3), p(3, 3));
    assert!(rels.contains(&Relation::Equal) && rels.contains(&Relation::Leq));
}

#[test]
fn compare_points_equal_index() {
    // Same index, larger value on the right: only the starred relation holds.
    assert_eq!(compare_points(p(2, 2), p(2, 5)), Relation::Leq);
    assert!(se_star(p(2, 5), p(2, 2)));
    assert!(!se(p(2, 5), p(2, 2)));
}

#[test]
fn region_examples() {
    assert_eq!(region_of(p(2, 2), p(2, 2)), Region::Sw);
    assert_eq!(region_of(p(2, 2), p(2, 5)), Region::Nw);
    assert_eq!(region_of(p(2, 2), p(3, 2)), Region::Ne);
    assert_eq!(region_of(p(2, 2), p(3, 1)), Region::Se);
}

#[test]
fn regions_partition_neighbourhood() {
    let c = p(3, 3);
    for x in 1..=5 {
        for y in 1..=5 {
            let q = p(x, y);
            let memberships = [leq(q, c), prec(c, q), se_star(q, c), se(c, q)]
                .iter()
                .filter(|&&b| b)
                .count();
            assert_eq!(memberships, 1, "{q} relative to {c}");
            let expected = if leq(q, c) {
                Region::Sw
            } else if prec(c, q) {
                Region::Ne
            } else if se_star(q, c) {
                Region::Nw
            } else {
                Region::Se
            };
            assert_eq!(region_of(c, q), expected);
        }
    }
}

#[test]
fn box_spanned_examples() {
    let b = box_spanned(p(0, 1), p(4, 9)).unwrap();
    assert_eq!(b.width(), 4);
    assert_eq!(format!("{b}"), "(0,4]x[1,9]");
    assert!(b.contains(p(1, 1)));
    assert!(!b.contains(p(0, 5)));
    assert!(b.contains(b.tr()));
    assert!(!b.contains(b.bl()));
    assert!(box_spanned(p(4, 1), p(2, 9)).is_err());
    assert!(box_spanned(p(0, 5), p(4, 1)).is_err());
    let d = box_spanned(p(3, 2), p(3, 4)).unwrap();
    assert!(d.is_degenerate());
}

#[test]
fn chain_box_at_examples() {
    let chain = BoxChain::from_points(&[p(0, 1), p(4, 5), p(8, 9)]).unwrap();
    assert_eq!(*chain.box_at(4).unwrap(), chain.boxes()[0]);
    assert_eq!(*chain.box_at(5).unwrap(), chain.boxes()[1]);
    assert_eq!(chain.box_at(9), Err(Error::OutsideChain { x: 9 }));
    assert!(chain.box_at(0).is_err());
}

#[test]
fn chain_rejects_gaps() {
    let a = Box::new(0, 2, 1, 3).unwrap();
    let b = Box::new(2, 4, 4, 5).unwrap();
    assert!(BoxChain::new(vec![a, b]).is_err());
    assert!(BoxChain::new(vec![]).is_err());
}

#[test]
fn strip_decomposition_widths() {
    let parent = Box::new(0, 10, 1, 10).unwrap();
    let sd = StripDecomposition::new(parent, vec![0, 3, 4, 10]).unwrap();
    assert_eq!(sd.width_at(1), Some(3));
    assert_eq!(sd.width_at(3), Some(3));
    assert_eq!(sd.width_at(4), Some(1));
    assert_eq!(sd.width_at(10), Some(6));
    assert_eq!(sd.width_at(11), None);
    let widths: Vec<u64> = sd.strips().map(|s| s.width()).collect();
    assert_eq!(widths, vec![3, 1, 6]);
    assert!(StripDecomposition::new(parent, vec![0, 5, 5, 10]).is_err());
    assert!(StripDecomposition::new(parent, vec![1, 10]).is_err());
}

#[test]
fn interval_widths() {
    let i = IndexInterval::new(3, 7).unwrap();
    assert_eq!(i.width(), 4);
    assert!(!i.contains(3) && i.contains(7));
    assert!(IndexInterval::new(5, 4).is_err());
}

fn increasing_corners() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((1u64..5, 0u64..4), 1..8).prop_map(|steps| {
        let mut pts = vec![p(0, 1)];
        let (mut x, mut y) = (0, 1);
        for (dx, dy) in steps {
            x += dx;
            y += dy;
            pts.push(p(x, y));
        }
        pts
    })
}

proptest! {
    #[test]
    fn regions_partition_everywhere(px in 0u64..20, py in 0u64..20, qx in 0u64..20, qy in 0u64..20) {
        let (a, b) = (p(px, py), p(qx, qy));
        let memberships = [leq(b, a), prec(a, b), se_star(b, a), se(a, b)].iter().filter(|&&t| t).count();
        prop_assert_eq!(memberships, 1);
    }

    #[test]
    fn chain_round_trips_through_corners(pts in increasing_corners()) {
        let chain = BoxChain::from_points(&pts).unwrap();
        prop_assert_eq!(chain.points(), pts.clone());
        prop_assert_eq!(BoxChain::from_points(&chain.points()).unwrap(), chain);
    }

    #[test]
    fn consecutive_chain_boxes_are_ordered(pts in increasing_corners()) {
        let chain = BoxChain::from_points(&pts).unwrap();
        for pair in chain.boxes().windows(2) {
            let (l, r) = (pair[0], pair[1]);
            for x1 in l.indices() {
                for y1 in l.y_b()..=l.y_t() {
                    for x2 in r.indices() {
                        for y2 in r.y_b()..=r.y_t() {
                            prop_assert!(prec(p(x1, y1), p(x2, y2)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn box_at_finds_owner(pts in increasing_corners(), k in 0usize..64) {
        let chain = BoxChain::from_points(&pts).unwrap();
        let span = chain.span();
        let x = span.x_l() + 1 + (k as u64 % span.width());
        let b = chain.box_at(x).unwrap();
        prop_assert!(b.contains_index(x));
        prop_assert_eq!(chain.boxes().iter().filter(|b| b.contains_index(x)).count(), 1);
    }

    #[test]
    fn membership_matches_comprehension(qx in 0u64..6, qy in 1u64..6, dx in 0u64..6, dy in 0u64..6, x in 0u64..14, y in 0u64..14) {
        let (q, r) = (p(qx, qy), p(qx + dx, qy + dy));
        let b = box_spanned(q, r).unwrap();
        let pt = p(x, y);
        prop_assert_eq!(b.contains(pt), prec(q, pt) && leq(pt, r));
    }
}
