mod common;

use common::{embed_gate, frob};
use probe_causality::causal::{Cell, Lattice};
use probe_causality::lattice_qft::SystemSpec;
use probe_causality::probes::{scattering_operator, Coupling, ProbeSpec};
use probe_causality::qop::{
    embed, gates, partial_trace, partial_trace_with, random_density_matrix, random_hermitian_matrix,
    random_unitary_matrix, tensor, Circuit, Gate, Operator, SlotLayout,
};
use probe_causality::rng::stream;
use proptest::prelude::*;

fn layout(dims: &[usize]) -> SlotLayout {
    SlotLayout::new(dims.iter().enumerate().map(|(i, &d)| (format!("q{i}"), d))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn embed_matches_index_loops(
        dims in proptest::collection::vec(2usize..=3, 2..=4),
        pick in proptest::collection::vec(any::<bool>(), 4),
        seed in any::<u64>(),
    ) {
        let mut positions: Vec<usize> = (0..dims.len()).filter(|&i| pick[i]).collect();
        if positions.is_empty() {
            positions.push(0);
        }
        if seed % 2 == 1 {
            positions.reverse();
        }
        let mut rng = stream(seed);
        let sub: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
        let n: usize = sub.iter().product();
        let m = random_hermitian_matrix(n, &mut rng);
        let sub_layout = SlotLayout::new(positions.iter().map(|&p| (format!("q{p}"), dims[p]))).unwrap();
        let got = embed(&Operator::new(m.clone(), sub_layout).unwrap(), &layout(&dims)).unwrap();
        let want = embed_gate(&m, &positions, &dims);
        prop_assert!(frob(&(got.matrix() - want)) < 1e-12);
    }

    #[test]
    fn partial_trace_of_product(da in 2usize..=3, db in 2usize..=3, seed in any::<u64>()) {
        let mut rng = stream(seed);
        let a = Operator::on_slot("a", random_hermitian_matrix(da, &mut rng)).unwrap();
        let b = Operator::on_slot("b", random_hermitian_matrix(db, &mut rng)).unwrap();
        let ab = tensor(&a, &b).unwrap();
        let left = partial_trace(&ab, &["b"]).unwrap();
        prop_assert!(left.distance(&a.scale(b.trace())) < 1e-12);
        let right = partial_trace(&ab, &["a"]).unwrap();
        prop_assert!(right.distance(&b.scale(a.trace())) < 1e-12);
        // weighted trace with w: Tr_b[(1 ⊗ w) (a ⊗ b)] = a Tr(w b)
        let w = Operator::on_slot("b", random_hermitian_matrix(db, &mut rng)).unwrap();
        let weighted = partial_trace_with(&ab, &w).unwrap();
        let tr = (w.matrix() * b.matrix()).trace();
        prop_assert!(weighted.distance(&a.scale(tr)) < 1e-12);
    }

    #[test]
    fn circuit_conjugation_is_automorphism(seed in any::<u64>()) {
        let mut rng = stream(seed);
        let l = layout(&[2, 3, 2]);
        let mut c = Circuit::new();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let g = random_unitary_matrix(l.slots()[a].dim * l.slots()[b].dim, &mut rng);
            c.push(Gate::new(&[format!("q{a}"), format!("q{b}")], g));
        }
        let x = Operator::new(random_hermitian_matrix(12, &mut rng), l.clone()).unwrap();
        let y = Operator::new(random_density_matrix(12, &mut rng), l.clone()).unwrap();
        let cx = c.conjugate(&x).unwrap();
        let cy = c.conjugate(&y).unwrap();
        prop_assert!(c.conjugate(&(&x * &y)).unwrap().distance(&(&cx * &cy)) < 1e-10);
        prop_assert!(c.conjugate(&x.adjoint()).unwrap().distance(&cx.adjoint()) < 1e-10);
        prop_assert!(c.conjugate_adjoint(&cx).unwrap().distance(&x) < 1e-10);
        let u = c.unitary(&l).unwrap();
        prop_assert!(cx.distance(&(&(&u * &x) * &u.adjoint())) < 1e-10);
    }
}

#[test]
fn theta_is_unital_automorphism() {
    for seed in 0..20 {
        let mut rng = stream(seed);
        let lattice = Lattice::new(3, 3).unwrap();
        let spec = SystemSpec::random(lattice, 2, &mut rng);
        let probe = ProbeSpec::new(
            "p",
            random_density_matrix(2, &mut rng),
            vec![
                Coupling::new(Cell::new(1, 0), random_unitary_matrix(4, &mut rng)),
                Coupling::new(Cell::new(2, 1), random_unitary_matrix(4, &mut rng)),
            ],
            false,
        )
        .unwrap();
        let theta = scattering_operator(&spec, &[&probe], 3).unwrap();
        let l = theta.layout().clone();
        let one = Operator::identity(l.clone());
        assert!(theta.apply(&one).unwrap().distance(&one) < 1e-12);
        let a = Operator::new(random_hermitian_matrix(16, &mut rng), l.clone()).unwrap();
        let b = Operator::new(random_hermitian_matrix(16, &mut rng), l.clone()).unwrap();
        let lhs = theta.apply(&(&a * &b)).unwrap();
        let rhs = &theta.apply(&a).unwrap() * &theta.apply(&b).unwrap();
        assert!(lhs.distance(&rhs) < 1e-10);
        assert!(theta.apply_inverse(&theta.apply(&a).unwrap()).unwrap().distance(&a) < 1e-10);
    }
}

#[test]
fn heisenberg_support_grows_at_most_one_site_per_layer() {
    for seed in 0..10 {
        let mut rng = stream(seed);
        for w in 2..=5 {
            for t in 1..=4 {
                let spec = SystemSpec::random(Lattice::new(w, t).unwrap(), 2, &mut rng);
                for x in 0..w {
                    for s in 0..=t {
                        for b in gates::gell_mann(2).iter().skip(1) {
                            let op = spec.heisenberg_pullback(b, x, s).unwrap();
                            let support = spec.support_of(&op, 1e-10).unwrap();
                            let lo = x.saturating_sub(s);
                            let hi = (x + s).min(w - 1);
                            assert!(support.iter().all(|&y| y >= lo && y <= hi), "w{w} t{s} x{x}: {support:?}");
                        }
                    }
                }
            }
        }
    }
}
