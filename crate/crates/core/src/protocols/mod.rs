//! End-to-end no-signalling experiments.
//!
//! [`run_sorkin`] is the tripartite protocol: Alice and Bob measure
//! non-selectively, Charlie evaluates a system observable `C`, and the report
//! compares `ω_AB(C)` with `ω_B(C)`. [`run_adversary`] searches for a
//! non-local Bob that does signal, and [`run_theorem2`] deletes spacelike
//! observers from an N-observer chain.

pub mod campaign;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::causal::{validate_probe_worldline, Cell, Lattice, Region};
use crate::error::{Error, Result};
use crate::lattice_qft::{LocalObservable, SystemSpec};
use crate::probes::{induced_observable, scattering_operator, Coupling, ProbeSpec, ScatteringMap};
use crate::qop::{embed, gates, random_density, tensor_all, DensityState, Effect, Matrix, Operator, PHYSICS_TOL};
use crate::rng::substream;
use crate::updates::{
    compose_updates, conditional_expectation, expectation, n_observer_expectation, nonselective_update,
    ObserverSpec, UpdateMap,
};

/// Default `delta` a signalling witness must exceed.
pub const DEMONSTRATION_THRESHOLD: f64 = 0.01;

/// Charlie's system observable: either given directly with its region, or
/// induced by a probe measurement (localised in the probe's coupling zone).
#[derive(Clone, Debug, PartialEq)]
pub enum Charlie {
    Local(LocalObservable),
    Probe(ObserverSpec),
}

impl Charlie {
    pub fn region(&self, lattice: Lattice) -> Result<Region> {
        match self {
            Charlie::Local(c) => Ok(c.region().clone()),
            Charlie::Probe(o) => o.zone(lattice),
        }
    }

    pub fn system_observable(&self, spec: &SystemSpec) -> Result<Operator> {
        match self {
            Charlie::Local(c) => Ok(c.op().clone()),
            Charlie::Probe(o) => {
                let theta = scattering_operator(spec, &[o.probe()], spec.lattice().depth())?;
                induced_observable(&theta, o.observable())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SorkinConfig {
    pub system: SystemSpec,
    pub alice: ObserverSpec,
    pub bob: ObserverSpec,
    pub charlie: Charlie,
    pub omega: DensityState,
    pub tol: f64,
    pub seed: u64,
}

impl SorkinConfig {
    /// Checks the geometric hypotheses and the localisation of `C`. With
    /// `allow_nonlocal_bob` Bob's coupling cells need not form a worldline.
    pub fn validate(&self, allow_nonlocal_bob: bool) -> Result<()> {
        let lattice = self.system.lattice();
        let k1 = self.alice.zone(lattice)?;
        let k2 = self.bob.zone(lattice)?;
        let o3 = self.charlie.region(lattice)?;
        let mut failed = sorkin_violations(lattice, &k1, &k2, &o3);
        if self.alice.probe().is_nonlocal() {
            failed.push("Alice's probe is non-local".to_string());
        }
        if self.bob.probe().is_nonlocal() && !allow_nonlocal_bob {
            failed.push("Bob's probe is non-local".to_string());
        }
        if !failed.is_empty() {
            return Err(Error::GeometryViolation(failed));
        }
        let c = self.charlie.system_observable(&self.system)?;
        let deviation = self.system.commutant_deviation(&c, &o3, &[])?;
        if deviation > PHYSICS_TOL {
            return Err(Error::LocalizationViolation { deviation });
        }
        Ok(())
    }

    /// SHA-256 over every matrix and parameter that enters the computation.
    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("sorkin");
        f.system(&self.system);
        f.observer(&self.alice);
        f.observer(&self.bob);
        match &self.charlie {
            Charlie::Local(c) => {
                f.tag("local");
                f.matrix(c.op().matrix());
                for cell in c.region().iter() {
                    f.usize(cell.x);
                    f.usize(cell.t);
                }
            }
            Charlie::Probe(o) => {
                f.tag("probe");
                f.observer(o);
            }
        }
        f.matrix(self.omega.matrix());
        f.f64(self.tol);
        f.u64(self.seed);
        f.finish()
    }

    /// The same configuration with Bob's coupling gates moved to `cells`.
    pub fn with_bob_cells(&self, cells: &[Cell]) -> Result<SorkinConfig> {
        let old = self.bob.probe();
        if cells.len() != old.couplings().len() {
            return Err(Error::InvalidProbe {
                probe: old.id().to_string(),
                reason: format!("{} cells for {} couplings", cells.len(), old.couplings().len()),
            });
        }
        let couplings: Vec<Coupling> = old
            .couplings()
            .iter()
            .zip(cells)
            .map(|(c, &cell)| Coupling::new(cell, c.gate.clone()))
            .collect();
        let nonlocal = !validate_probe_worldline(cells);
        let probe = ProbeSpec::new(old.id(), old.sigma().matrix().clone(), couplings, nonlocal)?;
        let bob = ObserverSpec::new(self.bob.name(), probe, self.bob.observable().matrix().clone())?;
        Ok(SorkinConfig { bob, ..self.clone() })
    }
}

/// Failed hypotheses of the no-signalling theorem for zones `k1`, `k2` and
/// Charlie's region `o3`.
pub fn sorkin_violations(lattice: Lattice, k1: &Region, k2: &Region, o3: &Region) -> Vec<String> {
    let mut failed = Vec::new();
    if !k2.is_disjoint(&lattice.causal_past(k1)) {
        failed.push("(a) Bob's zone meets the causal past of Alice's zone".to_string());
    }
    if o3.is_empty() {
        failed.push("(b) Charlie's region is empty".to_string());
    }
    if !o3.is_disjoint(&lattice.causal_past(k2)) {
        failed.push("(c) Charlie's region meets the causal past of Bob's zone".to_string());
    }
    if !o3.is_subset(&lattice.causal_complement(k1)) {
        failed.push("(d) Charlie's region is not spacelike to Alice's zone".to_string());
    }
    failed
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignallingReport {
    pub omega_ab_of_c: f64,
    pub omega_b_of_c: f64,
    pub delta: f64,
    pub operator_delta: f64,
    pub pass: bool,
    pub seed: u64,
    pub digest: String,
}

/// `ω_AB(C)`, `ω_B(C)` and `‖(Θ̂₁∘Θ̂₂)(C) − Θ̂₂(C)‖_F`.
fn signalling_values(config: &SorkinConfig) -> Result<(f64, f64, f64)> {
    let spec = &config.system;
    let t = spec.lattice().depth();
    let c = config.charlie.system_observable(spec)?;
    let maps = [
        UpdateMap::nonselective(config.alice.clone()),
        UpdateMap::nonselective(config.bob.clone()),
    ];
    let omega_ab = compose_updates(spec, &maps, &config.omega, t)?;
    let omega_b = nonselective_update(spec, &config.omega, &config.bob, t)?;
    let ab = omega_ab.expect(&c)?.re;
    let b = omega_b.expect(&c)?.re;

    let theta1 = scattering_operator(spec, &[config.alice.probe()], t)?;
    let theta2 = scattering_operator(spec, &[config.bob.probe()], t)?;
    let both = theta1.compose(&theta2)?;
    let lhs = both.apply(&embed(&c, both.layout())?)?;
    let rhs = embed(&theta2.apply(&c)?, both.layout())?;
    Ok((ab, b, lhs.distance(&rhs)))
}

fn report(config: &SorkinConfig, pass: impl Fn(f64, f64) -> bool) -> Result<SignallingReport> {
    let (ab, b, operator_delta) = signalling_values(config)?;
    let delta = (ab - b).abs();
    Ok(SignallingReport {
        omega_ab_of_c: ab,
        omega_b_of_c: b,
        delta,
        operator_delta,
        pass: pass(delta, operator_delta),
        seed: config.seed,
        digest: config.digest(),
    })
}

/// Runs the protocol after validating every hypothesis; passes when both
/// gaps are within `config.tol`.
pub fn run_sorkin(config: &SorkinConfig) -> Result<SignallingReport> {
    config.validate(false)?;
    report(config, |d, o| d <= config.tol && o <= config.tol)
}

/// Evaluates a configuration whose Bob may be non-local; passes when `delta`
/// reaches `threshold`, i.e. when the configuration signals.
pub fn evaluate_adversary(config: &SorkinConfig, threshold: f64) -> Result<SignallingReport> {
    config.validate(true)?;
    report(config, |d, _| d >= threshold)
}

/// Seeded search space for a signalling non-local Bob on qubit sites: random
/// brickwork gates and initial state, Alice applying a probe-controlled flip
/// with `σ = |+⟩⟨+|`, Bob swapping a qubit probe in and out at `bob_cells`,
/// Charlie reading `Z` at `charlie_cell`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarySearch {
    pub lattice: Lattice,
    pub alice_cell: Cell,
    pub bob_cells: Vec<Cell>,
    pub charlie_cell: Cell,
    pub threshold: f64,
    pub budget: usize,
    pub seed: u64,
}

impl AdversarySearch {
    pub fn standard(seed: u64) -> Self {
        Self {
            lattice: Lattice::new(5, 4).expect("valid lattice"),
            alice_cell: Cell::new(0, 0),
            bob_cells: vec![Cell::new(1, 1), Cell::new(3, 1)],
            charlie_cell: Cell::new(4, 2),
            threshold: DEMONSTRATION_THRESHOLD,
            budget: 64,
            seed,
        }
    }

    /// Candidate number `attempt`; deterministic in `(seed, attempt)`.
    pub fn candidate(&self, attempt: usize) -> Result<SorkinConfig> {
        let mut rng = substream(self.seed, "adversary", attempt as u64);
        let system = SystemSpec::random(self.lattice, 2, &mut rng);
        let omega = random_density(system.layout(), &mut rng);
        let bob_sigma = random_density(crate::qop::SlotLayout::single("p:bob", 2)?, &mut rng);

        let plus = Matrix::from_element(2, 2, crate::qop::C64::new(0.5, 0.0));
        let alice_probe = ProbeSpec::new(
            "alice",
            plus,
            vec![Coupling::new(self.alice_cell, gates::probe_controlled_shift(2, 2))],
            false,
        )?;
        let alice = ObserverSpec::new("alice", alice_probe, gates::pauli_z())?;
        let couplings = self
            .bob_cells
            .iter()
            .map(|&c| Coupling::new(c, gates::swap(2)))
            .collect();
        let nonlocal = !validate_probe_worldline(&self.bob_cells);
        let bob_probe = ProbeSpec::new("bob", bob_sigma.into_operator().into_matrix(), couplings, nonlocal)?;
        let bob = ObserverSpec::new("bob", bob_probe, gates::pauli_z())?;
        let charlie = Charlie::Local(LocalObservable::at_cell(&system, &gates::pauli_z(), self.charlie_cell)?);
        Ok(SorkinConfig {
            system,
            alice,
            bob,
            charlie,
            omega,
            tol: 1e-9,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryOutcome {
    pub attempt: usize,
    pub witness: SorkinConfig,
    pub report: SignallingReport,
}

/// Tries candidates in order until one signals by more than the threshold.
pub fn run_adversary(search: &AdversarySearch) -> Result<AdversaryOutcome> {
    let mut best = 0.0f64;
    for attempt in 0..search.budget {
        let witness = search.candidate(attempt)?;
        let report = evaluate_adversary(&witness, search.threshold)?;
        if report.pass {
            return Ok(AdversaryOutcome {
                attempt,
                witness,
                report,
            });
        }
        best = best.max(report.delta);
    }
    Err(Error::NoWitnessFound {
        budget: search.budget,
        best_delta: best,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem2Config {
    pub system: SystemSpec,
    pub observers: Vec<ObserverSpec>,
    pub target: usize,
    /// Observers to delete. `None` selects every observer spacelike to the
    /// target.
    pub spacelike: Option<Vec<usize>>,
    pub omega: DensityState,
    pub tol: f64,
    pub seed: u64,
    /// Skips the connectedness requirement on the target's zone. No
    /// correctness claim is made in that regime.
    pub allow_disconnected: bool,
}

impl Theorem2Config {
    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("theorem2");
        f.system(&self.system);
        for o in &self.observers {
            f.observer(o);
        }
        f.usize(self.target);
        if let Some(s) = &self.spacelike {
            for &i in s {
                f.usize(i);
            }
        }
        f.matrix(self.omega.matrix());
        f.f64(self.tol);
        f.u64(self.seed);
        f.usize(self.allow_disconnected as usize);
        f.finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deletion {
    pub observer: String,
    pub expectation: f64,
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Report {
    /// Full chain against the chain with every selected observer deleted;
    /// `operator_delta` is the largest gap between induced system observables.
    pub signalling: SignallingReport,
    /// Successive deletions, one observer at a time.
    pub deletions: Vec<Deletion>,
    pub orders: usize,
    /// Largest spread of the target's expectation over all causal orders.
    pub order_spread: f64,
}

fn chain_expectation(
    spec: &SystemSpec,
    omega: &DensityState,
    observers: &[ObserverSpec],
    target: usize,
) -> Result<(f64, f64, usize)> {
    let lattice = spec.lattice();
    let zones = observers
        .iter()
        .map(|o| o.zone(lattice))
        .collect::<Result<Vec<_>>>()?;
    let orders = lattice.enumerate_causal_orders(&zones);
    let Some(first) = orders.first() else {
        return Err(Error::NotOrderable("observers admit no causal order".into()));
    };
    let t = lattice.depth();
    let value = n_observer_expectation(spec, omega, observers, first, target, t)?;
    let mut spread = 0.0f64;
    for order in &orders[1..] {
        let v = n_observer_expectation(spec, omega, observers, order, target, t)?;
        spread = spread.max((v - value).abs());
    }
    Ok((value, spread, orders.len()))
}

/// `Tr_P[(1 ⊗ σ) Θ_all(1 ⊗ O_target)]`.
fn super_induced(spec: &SystemSpec, observers: &[ObserverSpec], target: usize) -> Result<Operator> {
    let probes: Vec<&ProbeSpec> = observers.iter().map(|o| o.probe()).collect();
    let theta = scattering_operator(spec, &probes, spec.lattice().depth())?;
    induced_observable(&theta, observers[target].observable())
}

pub fn run_theorem2(config: &Theorem2Config) -> Result<Theorem2Report> {
    let spec = &config.system;
    let lattice = spec.lattice();
    let observers = &config.observers;
    if config.target >= observers.len() {
        return Err(Error::GeometryViolation(vec![format!(
            "target {} out of range for {} observers",
            config.target,
            observers.len()
        )]));
    }
    let zones = observers
        .iter()
        .map(|o| o.zone(lattice))
        .collect::<Result<Vec<_>>>()?;
    let kb = &zones[config.target];
    let mut failed = Vec::new();
    if !config.allow_disconnected && !lattice.is_connected(kb) {
        failed.push(format!("zone of `{}` is not connected", observers[config.target].name()));
    }
    let spacelike_to_target = |i: usize| kb.is_subset(&lattice.causal_complement(&zones[i]));
    let deleted: Vec<usize> = match &config.spacelike {
        Some(list) => {
            for &i in list {
                if i >= observers.len() || i == config.target || !spacelike_to_target(i) {
                    failed.push(format!("observer {i} is not spacelike to the target"));
                }
            }
            list.clone()
        }
        None => (0..observers.len())
            .filter(|&i| i != config.target && spacelike_to_target(i))
            .collect(),
    };
    if !failed.is_empty() {
        return Err(Error::GeometryViolation(failed));
    }

    let (full, order_spread, orders) = chain_expectation(spec, &config.omega, observers, config.target)?;
    let full_induced = super_induced(spec, observers, config.target)?;
    let mut remaining: Vec<usize> = (0..observers.len()).collect();
    let mut deletions = Vec::new();
    let mut last = full;
    let mut operator_delta = 0.0f64;
    let mut delta = 0.0f64;
    for &y in &deleted {
        remaining.retain(|&i| i != y);
        let family: Vec<ObserverSpec> = remaining.iter().map(|&i| observers[i].clone()).collect();
        let target = remaining.iter().position(|&i| i == config.target).expect("target kept");
        let (value, _, _) = chain_expectation(spec, &config.omega, &family, target)?;
        operator_delta = operator_delta.max(super_induced(spec, &family, target)?.distance(&full_induced));
        delta = delta.max((value - full).abs());
        deletions.push(Deletion {
            observer: observers[y].name().to_string(),
            expectation: value,
            shift: (value - full).abs(),
        });
        last = value;
    }
    let pass = delta <= config.tol && operator_delta <= config.tol && order_spread <= config.tol;
    Ok(Theorem2Report {
        signalling: SignallingReport {
            omega_ab_of_c: full,
            omega_b_of_c: last,
            delta,
            operator_delta,
            pass,
            seed: config.seed,
            digest: config.digest(),
        },
        deletions,
        orders,
        order_spread,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacelikeReport {
    /// `‖Θ̂_A∘Θ̂_B − Θ̂_B∘Θ̂_A‖` on generators, relative.
    pub commutation_gap: f64,
    /// `‖ε_{A,B}(E ⊗ O) − ε_A(E) ε_B(O)‖_F`.
    pub product_gap: f64,
    /// `𝔼(O_B | E_A) − 𝔼(O_B)`.
    pub conditional_shift: f64,
    /// `ω(ε_A(E) ε_B(O)) − ω(ε_A(E)) ω(ε_B(O))`.
    pub covariance: f64,
    /// `|p · shift − covariance|`: conditioning is inert exactly when the
    /// covariance vanishes.
    pub criterion_gap: f64,
    /// Change of `B`'s expectation when `A` is coupled.
    pub marginal_shift: f64,
    pub pass: bool,
}

/// Spacelike observers: commuting scattering maps, factorising induced
/// observables and the correlation criterion for conditioning. `obs_a`'s
/// observable must be an effect.
pub fn check_spacelike_commutation(
    spec: &SystemSpec,
    omega: &DensityState,
    obs_a: &ObserverSpec,
    obs_b: &ObserverSpec,
    tol: f64,
) -> Result<SpacelikeReport> {
    let lattice = spec.lattice();
    let ka = obs_a.zone(lattice)?;
    let kb = obs_b.zone(lattice)?;
    if !ka.is_subset(&lattice.causal_complement(&kb)) {
        return Err(Error::GeometryViolation(vec![format!(
            "zones of `{}` and `{}` are not spacelike",
            obs_a.name(),
            obs_b.name()
        )]));
    }
    let effect = obs_a.effect()?;
    let t = lattice.depth();
    let theta_a = scattering_operator(spec, &[obs_a.probe()], t)?;
    let theta_b = scattering_operator(spec, &[obs_b.probe()], t)?;
    let ab = theta_a.compose(&theta_b)?;
    let ba = theta_b.compose(&theta_a)?;
    let commutation_gap = generator_gap(spec, &ab, &ba, &[obs_a, obs_b])?;

    let eps_a = induced_observable(&theta_a, effect.operator())?;
    let eps_b = induced_observable(&theta_b, obs_b.observable())?;
    let joint = induced_observable(&ab, &tensor_all([effect.operator(), obs_b.observable()])?)?;
    let product = &eps_a * &eps_b;
    let product_gap = joint.distance(&product);

    let p = omega.expect(&eps_a)?.re;
    let mean_b = omega.expect(&eps_b)?.re;
    let covariance = omega.expect(&product)?.re - p * mean_b;
    let conditional = conditional_expectation(spec, omega, obs_a, &effect, obs_b, t)?;
    let conditional_shift = conditional - mean_b;
    let criterion_gap = (p * conditional_shift - covariance).abs();
    let coupled = crate::updates::super_observer_expectation(spec, omega, &[obs_a.clone(), obs_b.clone()], 1, t)?;
    let marginal_shift = (coupled - expectation(spec, omega, obs_b, t)?.re).abs();
    Ok(SpacelikeReport {
        commutation_gap,
        product_gap,
        conditional_shift,
        covariance,
        criterion_gap,
        marginal_shift,
        pass: commutation_gap <= tol && product_gap <= tol && criterion_gap <= tol && marginal_shift <= tol,
    })
}

fn generator_gap(spec: &SystemSpec, lhs: &ScatteringMap, rhs: &ScatteringMap, observers: &[&ObserverSpec]) -> Result<f64> {
    let layout = lhs.layout().clone();
    let mut worst = 0.0f64;
    let mut check = |g: Operator| -> Result<()> {
        let g = embed(&g, &layout)?;
        let a = lhs.apply(&g)?;
        let b = embed(&rhs.apply(&g)?, &layout)?;
        worst = worst.max(a.distance(&b) / g.frobenius());
        Ok(())
    };
    for x in 0..spec.lattice().width() {
        for b in gates::gell_mann(spec.site_dim()).iter().skip(1) {
            check(spec.site_operator(x, b)?)?;
        }
    }
    for o in observers {
        for g in o.probe().generators() {
            check(g)?;
        }
    }
    Ok(worst)
}

/// Incremental SHA-256 over configuration data, hex-encoded.
pub struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn new(tag: &str) -> Self {
        let mut f = Fingerprint(Sha256::new());
        f.tag(tag);
        f
    }

    pub fn tag(&mut self, s: &str) {
        self.usize(s.len());
        self.0.update(s.as_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn u64(&mut self, v: u64) {
        self.0.update(v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.0.update(v.to_bits().to_le_bytes());
    }

    pub fn matrix(&mut self, m: &Matrix) {
        self.usize(m.nrows());
        self.usize(m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)].re);
                self.f64(m[(r, c)].im);
            }
        }
    }

    pub fn system(&mut self, spec: &SystemSpec) {
        self.usize(spec.lattice().width());
        self.usize(spec.lattice().depth());
        self.usize(spec.site_dim());
        for layer in spec.layers() {
            for g in layer {
                self.matrix(g);
            }
        }
    }

    pub fn observer(&mut self, o: &ObserverSpec) {
        self.tag(o.name());
        let p = o.probe();
        self.tag(p.id());
        self.matrix(p.sigma().matrix());
        self.usize(p.is_nonlocal() as usize);
        for c in p.couplings() {
            self.usize(c.cell.x);
            self.usize(c.cell.t);
            self.matrix(&c.gate);
        }
        self.matrix(o.observable().matrix());
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

/// An effect on a single observer's probe.
pub fn probe_effect(obs: &ObserverSpec, m: Matrix) -> Result<Effect> {
    Effect::new(Operator::on_slot(obs.probe().slot(), m)?, PHYSICS_TOL)
}

#[cfg(test)]
mod tests;
