//! Pointlike probes, coupled circuits and scattering maps.
//!
//! A probe has no dynamics of its own; it interacts with the site of a
//! coupling cell through a gate on `site ⊗ probe`, applied just before the
//! free layer of that cell's time step. With `U_c` the coupled circuit and
//! `U_f` the free one, the scattering unitary is `S = U_c† (U_f ⊗ 1)` and
//! `Θ(A) = S A S†`.

use std::borrow::Borrow;
use std::collections::BTreeSet;

use rand::Rng;

use crate::causal::{validate_probe_worldline, Cell, Lattice, Region};
use crate::error::{Error, Result};
use crate::lattice_qft::{site_slot, SystemSpec, UNITARY_TOL};
use crate::qop::{
    embed, gates, partial_trace_with, tensor, tensor_all, unitarity_gap, Circuit, DensityState, Gate,
    Matrix, Operator, SlotLayout, C64, PHYSICS_TOL,
};

pub fn probe_slot(id: &str) -> String {
    format!("p:{id}")
}

/// One interaction: a unitary on `site ⊗ probe` at a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub cell: Cell,
    pub gate: Matrix,
}

impl Coupling {
    pub fn new(cell: Cell, gate: Matrix) -> Self {
        Self { cell, gate }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpec {
    id: String,
    dim: usize,
    sigma: DensityState,
    couplings: Vec<Coupling>,
    nonlocal: bool,
}

impl ProbeSpec {
    /// Validates unitarity of every gate and, unless `nonlocal`, that the
    /// coupling cells form a worldline.
    pub fn new(
        id: impl Into<String>,
        sigma: Matrix,
        couplings: Vec<Coupling>,
        nonlocal: bool,
    ) -> Result<Self> {
        let id = id.into();
        let dim = sigma.nrows();
        let invalid = |reason: String| Error::InvalidProbe {
            probe: id.clone(),
            reason,
        };
        let sigma = DensityState::new(Operator::on_slot(probe_slot(&id), sigma)?, PHYSICS_TOL)
            .map_err(|e| invalid(e.to_string()))?;
        for c in &couplings {
            if c.gate.nrows() != c.gate.ncols() || c.gate.nrows() % dim != 0 {
                return Err(invalid(format!(
                    "gate at ({}, {}) is {}x{}, not (site x {dim})-dimensional",
                    c.cell.x,
                    c.cell.t,
                    c.gate.nrows(),
                    c.gate.ncols()
                )));
            }
            let deviation = unitarity_gap(&c.gate);
            if deviation > UNITARY_TOL {
                return Err(invalid(format!(
                    "gate at ({}, {}) is not unitary (deviation {deviation:e})",
                    c.cell.x, c.cell.t
                )));
            }
        }
        if !nonlocal {
            let cells: Vec<Cell> = couplings.iter().map(|c| c.cell).collect();
            if !validate_probe_worldline(&cells) {
                return Err(invalid(
                    "coupling cells do not form a worldline; flag the probe nonlocal to allow this".into(),
                ));
            }
        }
        Ok(Self {
            id,
            dim,
            sigma,
            couplings,
            nonlocal,
        })
    }

    pub fn uncoupled(id: impl Into<String>, sigma: Matrix) -> Result<Self> {
        Self::new(id, sigma, Vec::new(), false)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn slot(&self) -> String {
        probe_slot(&self.id)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> &DensityState {
        &self.sigma
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn is_nonlocal(&self) -> bool {
        self.nonlocal
    }

    /// Same probe with its gates replaced by identities.
    pub fn switched_off(&self) -> ProbeSpec {
        let mut out = self.clone();
        out.couplings.clear();
        out
    }

    /// The cell set `K`.
    pub fn coupling_zone(&self, lattice: Lattice) -> Result<Region> {
        Region::new(lattice, self.couplings.iter().map(|c| c.cell))
    }

    pub fn max_coupling_time(&self) -> Option<usize> {
        self.couplings.iter().map(|c| c.cell.t).max()
    }

    /// Cells on which the probe's degrees of freedom live: a vertical line
    /// below the first coupling and above the last, joined by discrete
    /// straight segments between consecutive couplings in `(t, x)` order.
    /// Empty for an uncoupled probe.
    pub fn trajectory(&self, lattice: Lattice) -> Result<Region> {
        let mut cells: Vec<Cell> = self.couplings.iter().map(|c| c.cell).collect();
        cells.sort_by_key(|c| (c.t, c.x));
        let mut out = Region::empty(lattice);
        let (Some(first), Some(last)) = (cells.first().copied(), cells.last().copied()) else {
            return Ok(out);
        };
        for t in 0..=first.t {
            out.insert(Cell::new(first.x, t))?;
        }
        for w in cells.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dx = b.x as i64 - a.x as i64;
            let dt = (b.t - a.t) as i64;
            let n = dx.abs().max(dt);
            for i in 1..=n {
                let x = a.x as i64 + (i as f64 * dx as f64 / n as f64).round() as i64;
                let t = a.t as i64 + (i as f64 * dt as f64 / n as f64).round() as i64;
                out.insert(Cell::new(x as usize, t as usize))?;
            }
        }
        for t in last.t..lattice.depth() {
            out.insert(Cell::new(last.x, t))?;
        }
        Ok(out)
    }

    /// Gell-Mann basis on the probe slot, identity excluded.
    pub fn generators(&self) -> Vec<Operator> {
        gates::gell_mann(self.dim)
            .into_iter()
            .skip(1)
            .map(|m| Operator::on_slot(self.slot(), m).expect("square basis matrix"))
            .collect()
    }
}

/// `system ⊗ probe_1 ⊗ ⋯` in the given probe order.
pub fn joint_layout<P: Borrow<ProbeSpec>>(spec: &SystemSpec, probes: &[P]) -> Result<SlotLayout> {
    let mut layout = spec.layout();
    for p in probes {
        let p = p.borrow();
        layout = layout
            .concat(&SlotLayout::single(p.slot(), p.dim)?)
            .map_err(|_| Error::LayoutCollision(format!("probe `{}` appears twice", p.id)))?;
    }
    Ok(layout)
}

/// Coupled dynamics over layers `0..t_to` on [`joint_layout`]. At each time
/// step the coupling gates act first, ordered by `(probe id, x)`, then the
/// free brick layer.
pub fn coupled_circuit<P: Borrow<ProbeSpec>>(
    spec: &SystemSpec,
    probes: &[P],
    t_to: usize,
) -> Result<Circuit> {
    let lattice = spec.lattice();
    let window = Error::BadWindow {
        from: 0,
        to: t_to,
        depth: lattice.depth(),
    };
    if t_to > lattice.depth() {
        return Err(window);
    }
    joint_layout(spec, probes)?;
    let mut events: Vec<(usize, &str, usize, Gate)> = Vec::new();
    for p in probes {
        let p = p.borrow();
        for c in &p.couplings {
            lattice.check_cell(c.cell)?;
            if c.cell.t >= t_to {
                return Err(window.clone());
            }
            if c.gate.nrows() != spec.site_dim() * p.dim {
                return Err(Error::DimensionMismatch(format!(
                    "probe `{}` gate is {}-dimensional, expected {}",
                    p.id,
                    c.gate.nrows(),
                    spec.site_dim() * p.dim
                )));
            }
            events.push((
                c.cell.t,
                p.id.as_str(),
                c.cell.x,
                Gate::new(&[site_slot(c.cell.x), p.slot()], c.gate.clone()),
            ));
        }
    }
    events.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut circuit = Circuit::new();
    let mut next = events.into_iter().peekable();
    for t in 0..t_to {
        while let Some((_, _, _, g)) = next.next_if(|e| e.0 == t) {
            circuit.push(g);
        }
        for g in spec.layer_gates(t) {
            circuit.push(g);
        }
    }
    Ok(circuit)
}

/// `Θ(A) = S A S†`, stored as the circuit of `S`.
#[derive(Clone, Debug)]
pub struct ScatteringMap {
    layout: SlotLayout,
    system: SlotLayout,
    circuit: Circuit,
    probe_states: Vec<Operator>,
    t_to: usize,
}

/// Builds the scattering map of `probes` with out-slice `t_to`. Every coupling
/// must happen strictly before `t_to`.
pub fn scattering_operator<P: Borrow<ProbeSpec>>(
    spec: &SystemSpec,
    probes: &[P],
    t_to: usize,
) -> Result<ScatteringMap> {
    let coupled = coupled_circuit(spec, probes, t_to)?;
    let free = spec.free_circuit(0, t_to)?;
    Ok(ScatteringMap {
        layout: joint_layout(spec, probes)?,
        system: spec.layout(),
        circuit: free.then(&coupled.adjoint()),
        probe_states: probes.iter().map(|p| p.borrow().sigma.operator().clone()).collect(),
        t_to,
    })
}

impl ScatteringMap {
    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn system_layout(&self) -> &SlotLayout {
        &self.system
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn t_to(&self) -> usize {
        self.t_to
    }

    pub fn probe_slots(&self) -> Vec<String> {
        self.probe_states
            .iter()
            .map(|s| s.layout().slots()[0].id.clone())
            .collect()
    }

    /// `σ_1 ⊗ σ_2 ⊗ ⋯` in layout order.
    pub fn probe_state(&self) -> Operator {
        tensor_all(self.probe_states.iter()).expect("probe slots are distinct")
    }

    pub fn s_matrix(&self) -> Result<Operator> {
        self.circuit.unitary(&self.layout)
    }

    /// Picks the layout on which to act: the operand's own when it contains
    /// this map's slots (the trivially extended map), otherwise this map's.
    fn resolve(&self, a: &Operator) -> Result<Operator> {
        if self.layout.is_subset_of(a.layout()) {
            Ok(a.clone())
        } else if a.layout().is_subset_of(&self.layout) {
            embed(a, &self.layout)
        } else {
            Err(Error::LayoutCollision(format!(
                "operator on {} cannot be combined with map on {}",
                a.layout(),
                self.layout
            )))
        }
    }

    /// `Θ(a) = S a S†`.
    pub fn apply(&self, a: &Operator) -> Result<Operator> {
        self.circuit.conjugate(&self.resolve(a)?)
    }

    /// `Θ⁻¹(a) = S† a S`.
    pub fn apply_inverse(&self, a: &Operator) -> Result<Operator> {
        self.circuit.conjugate_adjoint(&self.resolve(a)?)
    }

    /// `self ∘ inner`, acting on the union of both layouts.
    pub fn compose(&self, inner: &ScatteringMap) -> Result<ScatteringMap> {
        let own = self.probe_slots();
        if let Some(s) = inner.probe_slots().iter().find(|s| own.contains(s)) {
            return Err(Error::LayoutCollision(format!("probe slot `{s}` in both maps")));
        }
        let layout = self.layout.union(&inner.layout)?;
        let mut probe_states = self.probe_states.clone();
        probe_states.extend(inner.probe_states.iter().cloned());
        let order: Vec<String> = layout.ids().skip(self.system.len()).map(String::from).collect();
        probe_states.sort_by_key(|s| order.iter().position(|o| *o == s.layout().slots()[0].id));
        Ok(ScatteringMap {
            layout,
            system: self.system.clone(),
            circuit: inner.circuit.then(&self.circuit),
            probe_states,
            t_to: self.t_to.max(inner.t_to),
        })
    }

    /// `ρ ⊗ σ_1 ⊗ ⋯`.
    pub fn joint_state(&self, rho: &DensityState) -> Result<Operator> {
        let joint = tensor(rho.operator(), &self.probe_state())?;
        embed(&joint, &self.layout)
    }

    /// `Tr_P[S† (ρ ⊗ σ) S]`.
    pub fn schrodinger(&self, rho: &DensityState) -> Result<Operator> {
        if self.circuit.is_empty() && rho.layout() == &self.system {
            return Ok(rho.operator().clone());
        }
        let evolved = self.apply_inverse(&self.joint_state(rho)?)?;
        partial_trace_with(&evolved, &Operator::identity(self.probe_layout()))
    }

    /// `Tr_P[S† (ρ ⊗ σ) S (1 ⊗ E)]` for `E` on some of the probe slots.
    pub fn schrodinger_with(&self, rho: &DensityState, effect: &Operator) -> Result<Operator> {
        let evolved = self.apply_inverse(&self.joint_state(rho)?)?;
        let e = embed(effect, &self.probe_layout())?;
        partial_trace_with(&evolved, &e)
    }

    pub fn probe_layout(&self) -> SlotLayout {
        self.layout.without(&self.system.ids().collect::<Vec<_>>()).expect("system slots present")
    }
}

/// `ε(o) = Tr_P[(1 ⊗ σ) Θ(1 ⊗ o)]` for `o` on some of the map's probe slots.
pub fn induced_observable(theta: &ScatteringMap, o: &Operator) -> Result<Operator> {
    let probes = theta.probe_layout();
    if !o.layout().is_subset_of(&probes) {
        return Err(Error::LayoutCollision(format!(
            "observable on {} is not on the probe slots {probes}",
            o.layout()
        )));
    }
    let lifted = theta.apply(&embed(o, theta.layout())?)?;
    partial_trace_with(&lifted, &theta.probe_state())
}

/// Outcome of the localisation checks on one probe's scattering map.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Report {
    /// Operators localised spacelike to `K` that were tested.
    pub spacelike_checked: usize,
    /// Largest `‖Θ(A) − A‖_F / ‖A‖_F` among them.
    pub spacelike_max_deviation: f64,
    /// Out-region cells whose image was tested against the in-region commutant.
    pub out_region_checked: usize,
    /// Out-region cells skipped because no in-region set has them in its
    /// domain of dependence on this lattice.
    pub out_region_skipped: usize,
    /// Largest relative commutator with the complement of the in-region set.
    pub out_region_max_deviation: f64,
    pub pass: bool,
}

/// Probe generators if the probe's trajectory meets `r`.
fn probe_generators_in(probe: &ProbeSpec, trajectory: &Region, r: &Region) -> Vec<Operator> {
    if trajectory.is_disjoint(r) {
        Vec::new()
    } else {
        probe.generators()
    }
}

fn system_generators(spec: &SystemSpec, r: &Region, layout: &SlotLayout) -> Result<Vec<Operator>> {
    let mut out = Vec::new();
    for c in r.iter() {
        for g in spec.cell_generators(*c)?.into_iter().skip(1) {
            out.push(embed(&g, layout)?);
        }
    }
    Ok(out)
}

fn random_combination<R: Rng + ?Sized>(pool: &[Operator], rng: &mut R) -> Operator {
    let mut acc = Operator::zeros(pool[0].layout().clone());
    for _ in 0..3 {
        let a = &pool[rng.random_range(0..pool.len())];
        let b = &pool[rng.random_range(0..pool.len())];
        let z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        acc = &acc + &(a * b).scale(z);
    }
    acc
}

/// Checks (i) that `Θ` fixes every generator localised in `K⊥` and (ii) that
/// generators at cells after the last coupling are mapped into the commutant
/// of the complement of `N⁻ = J⁻(N) ∖ J⁺(K)`, whenever `N ⊆ D(N⁻)`.
///
/// Both parts sweep every cell exhaustively; `trials` random products of
/// generators are added to each.
pub fn check_lemma1<R: Rng + ?Sized>(
    spec: &SystemSpec,
    probe: &ProbeSpec,
    trials: usize,
    rng: &mut R,
    tol: f64,
) -> Result<Lemma1Report> {
    let lattice = spec.lattice();
    let theta = scattering_operator(spec, &[probe], lattice.depth())?;
    let layout = theta.layout().clone();
    let k = probe.coupling_zone(lattice)?;
    let trajectory = probe.trajectory(lattice)?;

    let spacelike = lattice.causal_complement(&k);
    let mut pool = system_generators(spec, &spacelike, &layout)?;
    for g in probe_generators_in(probe, &trajectory, &spacelike) {
        pool.push(embed(&g, &layout)?);
    }
    let mut spacelike_max = 0.0f64;
    let mut spacelike_checked = 0;
    if !pool.is_empty() {
        let extra: Vec<Operator> = (0..trials).map(|_| random_combination(&pool, rng)).collect();
        for a in pool.iter().chain(&extra) {
            let norm = a.frobenius();
            if norm == 0.0 {
                continue;
            }
            spacelike_max = spacelike_max.max(theta.apply(a)?.distance(a) / norm);
            spacelike_checked += 1;
        }
    }

    let future_k = lattice.causal_future(&k);
    let after = probe.max_coupling_time().map_or(0, |t| t + 1);
    let mut out_checked = 0;
    let mut out_skipped = 0;
    let mut out_max = 0.0f64;
    for cell in lattice.cells().filter(|c| c.t >= after) {
        let n = Region::new(lattice, [cell])?;
        let n_minus = lattice.causal_past(&n).difference(&future_k);
        if !n.is_subset(&lattice.domain_of_dependence(&n_minus)) {
            out_skipped += 1;
            continue;
        }
        let mut gens = system_generators(spec, &n, &layout)?;
        for g in probe_generators_in(probe, &trajectory, &n) {
            gens.push(embed(&g, &layout)?);
        }
        let extra: Vec<Operator> = (0..trials.min(4)).map(|_| random_combination(&gens, rng)).collect();
        let complement = lattice.causal_complement(&n_minus);
        let mut tests = system_generators(spec, &complement, &layout)?;
        for g in probe_generators_in(probe, &trajectory, &complement) {
            tests.push(embed(&g, &layout)?);
        }
        for a in gens.iter().chain(&extra) {
            let image = theta.apply(a)?;
            let norm = image.frobenius();
            for g in &tests {
                out_max = out_max.max(image.commutator(g).frobenius() / norm);
            }
        }
        out_checked += 1;
    }

    Ok(Lemma1Report {
        spacelike_checked,
        spacelike_max_deviation: spacelike_max,
        out_region_checked: out_checked,
        out_region_skipped: out_skipped,
        out_region_max_deviation: out_max,
        pass: spacelike_max <= tol && out_max <= tol,
    })
}

/// Sites touched by any coupling.
pub fn coupled_sites(probes: &[ProbeSpec]) -> BTreeSet<usize> {
    probes
        .iter()
        .flat_map(|p| p.couplings.iter().map(|c| c.cell.x))
        .collect()
}
