use probe_causality::causal::{Cell, Lattice, Region, Slice};
use proptest::prelude::*;

fn lattice_and_region() -> impl Strategy<Value = (Lattice, Region)> {
    (2usize..=4, 1usize..=4).prop_flat_map(|(w, t)| {
        let lattice = Lattice::new(w, t).unwrap();
        proptest::collection::vec(any::<bool>(), w * t).prop_map(move |mask| {
            let cells = lattice.cells().zip(mask).filter(|(_, m)| *m).map(|(c, _)| c);
            (lattice, Region::new(lattice, cells).unwrap())
        })
    })
}

/// Every time-maximal path, as a list of sites per layer.
fn all_paths(lattice: Lattice) -> Vec<Vec<usize>> {
    let mut paths: Vec<Vec<usize>> = (0..lattice.width()).map(|x| vec![x]).collect();
    for _ in 1..lattice.depth() {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                let x = *p.last().unwrap() as i64;
                (x - 1..=x + 1)
                    .filter(|&y| y >= 0 && y < lattice.width() as i64)
                    .map(move |y| {
                        let mut q = p.clone();
                        q.push(y as usize);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    paths
}

fn brute_future(lattice: Lattice, k: &Region) -> Vec<Cell> {
    lattice.cells().filter(|c| k.iter().any(|q| q.precedes(c))).collect()
}

fn brute_past(lattice: Lattice, k: &Region) -> Vec<Cell> {
    lattice.cells().filter(|c| k.iter().any(|q| c.precedes(q))).collect()
}

proptest! {
    #[test]
    fn cones_match_definition((lattice, k) in lattice_and_region()) {
        let fut: Vec<Cell> = lattice.causal_future(&k).iter().copied().collect();
        let past: Vec<Cell> = lattice.causal_past(&k).iter().copied().collect();
        let mut bf = brute_future(lattice, &k);
        let mut bp = brute_past(lattice, &k);
        bf.sort();
        bp.sort();
        prop_assert_eq!(fut, bf);
        prop_assert_eq!(past, bp);
    }

    #[test]
    fn complement_is_pointwise_spacelike((lattice, k) in lattice_and_region()) {
        let perp = lattice.causal_complement(&k);
        for c in lattice.cells() {
            let spacelike = k.iter().all(|q| q.spacelike_to(&c));
            prop_assert_eq!(perp.contains(&c), spacelike);
        }
        // K ⊆ K⊥⊥
        prop_assert!(k.is_subset(&lattice.causal_complement(&perp)));
    }

    #[test]
    fn cones_monotone_and_extensive((lattice, k) in lattice_and_region(), extra in (0usize..4, 0usize..4)) {
        let cell = Cell::new(extra.0 % lattice.width(), extra.1 % lattice.depth());
        let mut bigger = k.clone();
        bigger.insert(cell).unwrap();
        prop_assert!(k.is_subset(&lattice.causal_future(&k)));
        prop_assert!(lattice.causal_future(&k).is_subset(&lattice.causal_future(&bigger)));
        prop_assert!(lattice.causal_past(&k).is_subset(&lattice.causal_past(&bigger)));
        prop_assert!(lattice.causal_complement(&bigger).is_subset(&lattice.causal_complement(&k)));
    }

    #[test]
    fn hull_is_convex_and_idempotent((lattice, k) in lattice_and_region()) {
        let hull = lattice.causal_hull(&k);
        prop_assert!(k.is_subset(&hull));
        prop_assert!(lattice.is_causally_convex(&hull));
        prop_assert_eq!(lattice.causal_hull(&hull), hull);
    }

    #[test]
    fn domain_of_dependence_matches_paths((lattice, n) in lattice_and_region()) {
        let paths = all_paths(lattice);
        let d = lattice.domain_of_dependence(&n);
        for c in lattice.cells() {
            let through: Vec<&Vec<usize>> = paths.iter().filter(|p| p[c.t] == c.x).collect();
            let all_meet = through
                .iter()
                .all(|p| p.iter().enumerate().any(|(t, &x)| n.contains(&Cell::new(x, t))));
            prop_assert_eq!(d.contains(&c), all_meet, "cell {:?}", c);
        }
        prop_assert!(n.is_subset(&d));
    }

    #[test]
    fn cauchy_slices_match_paths(w in 2usize..=4, t in 1usize..=4, raw in proptest::collection::vec(0usize..4, 4)) {
        let lattice = Lattice::new(w, t).unwrap();
        let levels: Vec<usize> = raw[..w].iter().map(|l| l % t).collect();
        let slice = Slice::new(levels.clone());
        let once = all_paths(lattice)
            .iter()
            .all(|p| (0..w).filter(|&x| p[levels[x]] == x).count() == 1);
        prop_assert_eq!(lattice.is_cauchy_slice(&slice), once);
    }

    #[test]
    fn separating_slice_properties((lattice, k1) in lattice_and_region().prop_filter("small", |(_, k)| k.len() <= 2),
                                   seed in any::<u64>()) {
        let cells: Vec<Cell> = lattice.cells().collect();
        let pick = |i: u64| cells[(i % cells.len() as u64) as usize];
        let k2 = Region::new(lattice, [pick(seed)]).unwrap();
        let l = Region::new(lattice, [pick(seed / 7 + 3)]).unwrap();
        match lattice.find_separating_slice(&k1, &k2, &l) {
            Ok(s) => {
                prop_assert!(lattice.is_cauchy_slice(&s));
                let forbidden = lattice
                    .causal_past(&k1)
                    .union(&lattice.causal_future(&k2))
                    .union(&lattice.causal_future(&l));
                for c in s.cells() {
                    prop_assert!(!forbidden.contains(&c));
                }
                for c in k1.iter() {
                    prop_assert!(c.t < s.level(c.x));
                }
            }
            Err(probe_causality::Error::GeometryViolation(_)) => {
                let past = lattice.causal_past(&k1);
                prop_assert!(!k2.is_disjoint(&past) || !l.is_disjoint(&past));
            }
            Err(probe_causality::Error::NoSliceFound) => {}
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }

    #[test]
    fn causal_orders_satisfy_condition((lattice, a) in lattice_and_region(), seed in any::<u64>()) {
        let cells: Vec<Cell> = lattice.cells().collect();
        let b = Region::new(lattice, [cells[(seed % cells.len() as u64) as usize]]).unwrap();
        let c = Region::new(lattice, [cells[((seed >> 8) % cells.len() as u64) as usize]]).unwrap();
        let family = [a, b, c];
        for order in lattice.enumerate_causal_orders(&family) {
            let seq = order.regions(&family);
            for i in 0..seq.len() {
                for j in i + 1..seq.len() {
                    prop_assert!(lattice.causal_past(seq[i]).is_disjoint(&lattice.causal_future(seq[j])));
                }
            }
        }
    }
}
