use super::campaign::{random_sorkin, random_theorem2, SorkinGeometry};
use super::*;
use crate::qop::{C64, ZERO};
use crate::rng::stream;

fn swap_observer(name: &str, cells: &[Cell], observable: Matrix) -> ObserverSpec {
    let couplings = cells.iter().map(|&c| Coupling::new(c, gates::swap(2))).collect();
    let probe = ProbeSpec::new(name, gates::projector(2, 0), couplings, !validate_probe_worldline(cells)).unwrap();
    ObserverSpec::new(name, probe, observable).unwrap()
}

#[test]
fn sorkin_standard_geometry_does_not_signal() {
    let g = SorkinGeometry::standard();
    for seed in 0..8 {
        let mut rng = substream(seed, "test", 0);
        let r = run_sorkin(&random_sorkin(&g, seed, 1e-9, &mut rng).unwrap()).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn alice_uncoupled_gives_zero_delta() {
    let mut rng = stream(3);
    let mut config = random_sorkin(&SorkinGeometry::standard(), 3, 1e-9, &mut rng).unwrap();
    config.alice = config.alice.switched_off();
    let r = run_sorkin(&config).unwrap();
    assert_eq!(r.delta, 0.0);
    assert_eq!(r.operator_delta, 0.0);
}

#[test]
fn charlie_in_alice_future_rejected() {
    let mut g = SorkinGeometry::standard();
    g.charlie = vec![Cell::new(1, 1)];
    let mut rng = stream(4);
    let config = random_sorkin(&g, 4, 1e-9, &mut rng).unwrap();
    match run_sorkin(&config) {
        Err(Error::GeometryViolation(v)) => assert!(v.iter().any(|s| s.starts_with("(d)")), "{v:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn charlie_below_bob_rejected() {
    let mut g = SorkinGeometry::standard();
    g.charlie = vec![Cell::new(4, 0), Cell::new(4, 1)];
    assert!(g.violations().iter().any(|s| s.starts_with("(c)")));
}

#[test]
fn charlie_not_localised_rejected() {
    let mut rng = stream(5);
    let mut config = random_sorkin(&SorkinGeometry::standard(), 5, 1e-9, &mut rng).unwrap();
    let spec = &config.system;
    // Z at (3,2) fits the time-zero footprint of (4,2) but not its algebra
    let op = spec.heisenberg_pullback(&gates::pauli_z(), 3, 2).unwrap();
    let region = Region::from_pairs(spec.lattice(), &[(4, 2)]).unwrap();
    config.charlie = Charlie::Local(LocalObservable::new(spec, op, region, 1e-9).unwrap());
    assert!(matches!(run_sorkin(&config), Err(Error::LocalizationViolation { .. })));
}

#[test]
fn probe_induced_charlie() {
    let mut rng = stream(6);
    let mut config = random_sorkin(&SorkinGeometry::standard(), 6, 1e-9, &mut rng).unwrap();
    let cells = [Cell::new(4, 2), Cell::new(4, 3)];
    config.charlie = Charlie::Probe(campaign::random_observer("charlie", 2, &cells, &mut rng).unwrap());
    let r = run_sorkin(&config).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn adversary_signals_and_repair_does_not() {
    let search = AdversarySearch::standard(2024);
    let outcome = run_adversary(&search).unwrap();
    assert!(outcome.report.delta > DEMONSTRATION_THRESHOLD);
    let repaired = outcome
        .witness
        .with_bob_cells(&[Cell::new(1, 1), Cell::new(2, 2)])
        .unwrap();
    assert!(!repaired.bob.probe().is_nonlocal());
    let r = run_sorkin(&repaired).unwrap();
    assert!(r.delta <= 1e-9, "{r:?}");
    assert!(matches!(run_sorkin(&outcome.witness), Err(Error::GeometryViolation(_))));
}

#[test]
fn adversary_identity_gates_inert() {
    let search = AdversarySearch::standard(1);
    let mut config = search.candidate(0).unwrap();
    let old = config.bob.probe().clone();
    let couplings = old
        .couplings()
        .iter()
        .map(|c| Coupling::new(c.cell, gates::identity(4)))
        .collect();
    let probe = ProbeSpec::new("bob", old.sigma().matrix().clone(), couplings, true).unwrap();
    config.bob = ObserverSpec::new("bob", probe, gates::pauli_z()).unwrap();
    let r = evaluate_adversary(&config, DEMONSTRATION_THRESHOLD).unwrap();
    assert!(r.delta < 1e-14, "{r:?}");
    assert!(!r.pass);
}

#[test]
fn adversary_budget_exhaustion_reported() {
    let mut search = AdversarySearch::standard(1);
    search.threshold = 10.0;
    search.budget = 2;
    assert!(matches!(run_adversary(&search), Err(Error::NoWitnessFound { budget: 2, .. })));
}

#[test]
fn theorem2_random_chain() {
    let mut rng = stream(7);
    let config = random_theorem2(7, 1e-9, &mut rng).unwrap();
    let r = run_theorem2(&config).unwrap();
    assert_eq!(r.deletions.len(), 1);
    assert_eq!(r.deletions[0].observer, "y");
    assert!(r.orders > 1);
    assert!(r.signalling.pass, "{r:?}");
}

#[test]
fn theorem2_uncoupled_spacelike_observer_is_exact() {
    let mut rng = stream(8);
    let mut config = random_theorem2(8, 1e-9, &mut rng).unwrap();
    config.observers[1] = config.observers[1].switched_off();
    config.spacelike = Some(vec![1]);
    let r = run_theorem2(&config).unwrap();
    assert_eq!(r.signalling.delta, 0.0);
}

#[test]
fn theorem2_disconnected_target_rejected() {
    let mut rng = stream(9);
    let mut config = random_theorem2(9, 1e-9, &mut rng).unwrap();
    config.observers[3] = swap_observer("b", &[Cell::new(3, 2), Cell::new(5, 2)], gates::pauli_z());
    config.spacelike = Some(vec![1]);
    assert!(matches!(run_theorem2(&config), Err(Error::GeometryViolation(_))));
    config.allow_disconnected = true;
    assert!(run_theorem2(&config).is_ok());
}

#[test]
fn theorem2_rejects_timelike_deletion() {
    let mut rng = stream(10);
    let mut config = random_theorem2(10, 1e-9, &mut rng).unwrap();
    config.spacelike = Some(vec![2]);
    assert!(matches!(run_theorem2(&config), Err(Error::GeometryViolation(_))));
}

#[test]
fn spacelike_product_state_conditioning_inert() {
    let mut rng = stream(11);
    let lattice = Lattice::new(5, 2).unwrap();
    let spec = SystemSpec::random(lattice, 2, &mut rng);
    let a = campaign::random_observer("a", 2, &[Cell::new(0, 0)], &mut rng).unwrap();
    let b = campaign::random_observer("b", 2, &[Cell::new(4, 0)], &mut rng).unwrap();
    let mut factors = Vec::new();
    for x in 0..5 {
        let m = crate::qop::random_density_matrix(2, &mut rng);
        factors.push(Operator::on_slot(crate::lattice_qft::site_slot(x), m).unwrap());
    }
    let omega = DensityState::new(tensor_all(factors.iter()).unwrap(), 1e-9).unwrap();
    let r = check_spacelike_commutation(&spec, &omega, &a, &b, 1e-10).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.conditional_shift.abs() <= 1e-10, "{r:?}");
}

#[test]
fn spacelike_bell_pair_conditioning_shifts() {
    let lattice = Lattice::new(5, 2).unwrap();
    let spec = SystemSpec::trivial(lattice, 2);
    let a = swap_observer("a", &[Cell::new(0, 0)], gates::projector(2, 0));
    let b = swap_observer("b", &[Cell::new(4, 0)], gates::pauli_z());
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = vec![ZERO; 32];
    psi[0] = h;
    psi[0b10001] = h;
    let omega = DensityState::pure(spec.layout(), &psi).unwrap();
    let r = check_spacelike_commutation(&spec, &omega, &a, &b, 1e-10).unwrap();
    assert!(r.pass, "{r:?}");
    assert!((r.conditional_shift - 1.0).abs() < 1e-10, "{r:?}");
    assert!(r.marginal_shift < 1e-10);
}

#[test]
fn spacelike_trivial_couplings_inert() {
    let lattice = Lattice::new(5, 2).unwrap();
    let spec = SystemSpec::trivial(lattice, 2);
    let a = ObserverSpec::new("a", ProbeSpec::uncoupled("a", gates::projector(2, 0)).unwrap(), gates::projector(2, 0)).unwrap();
    let b = ObserverSpec::new("b", ProbeSpec::uncoupled("b", gates::projector(2, 1)).unwrap(), gates::pauli_z()).unwrap();
    let mut rng = stream(12);
    let omega = random_density(spec.layout(), &mut rng);
    let r = check_spacelike_commutation(&spec, &omega, &a, &b, 1e-12).unwrap();
    assert_eq!(r.commutation_gap, 0.0);
    assert!(r.conditional_shift.abs() < 1e-12);
}

#[test]
fn spacelike_requires_spacelike_zones() {
    let lattice = Lattice::new(5, 2).unwrap();
    let spec = SystemSpec::trivial(lattice, 2);
    let a = swap_observer("a", &[Cell::new(0, 0)], gates::projector(2, 0));
    let b = swap_observer("b", &[Cell::new(1, 1)], gates::pauli_z());
    let omega = DensityState::maximally_mixed(spec.layout());
    assert!(matches!(
        check_spacelike_commutation(&spec, &omega, &a, &b, 1e-10),
        Err(Error::GeometryViolation(_))
    ));
}

#[test]
fn digest_is_stable_and_sensitive() {
    let mut r1 = stream(13);
    let mut r2 = stream(13);
    let a = random_sorkin(&SorkinGeometry::standard(), 13, 1e-9, &mut r1).unwrap();
    let b = random_sorkin(&SorkinGeometry::standard(), 13, 1e-9, &mut r2).unwrap();
    assert_eq!(a.digest(), b.digest());
    let mut c = b.clone();
    c.tol = 1e-8;
    assert_ne!(a.digest(), c.digest());
}
