//! Expectations, probabilities and state updates for one or many observers.
//!
//! An observer is a probe plus a probe observable read out after the
//! interaction. For causally ordered observers `X_1 ≲ ⋯ ≲ X_N` the combined
//! scattering map factorises as `Θ̂_{X_1} ∘ ⋯ ∘ Θ̂_{X_N}`, which turns the
//! single-shot super-observer description into successive updates.
//!
//! When `B` precedes `A` and `B` conditions on `A`'s outcome there is no
//! reduction to an updated state; [`conditional_expectation`] evaluates the
//! defining ratio directly in that case.

use crate::causal::{CausalOrder, Lattice, Region};
use crate::error::{Error, Result};
use crate::lattice_qft::SystemSpec;
use crate::probes::{induced_observable, scattering_operator, ProbeSpec, ScatteringMap};
use crate::qop::{
    effect_check, embed, gates, tensor_all, DensityState, Effect, Matrix, Operator, SlotLayout, C64, PHYSICS_TOL,
};

/// Probabilities at or below this are treated as zero.
pub const ZERO_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverSpec {
    name: String,
    probe: ProbeSpec,
    observable: Operator,
}

impl ObserverSpec {
    pub fn new(name: impl Into<String>, probe: ProbeSpec, observable: Matrix) -> Result<Self> {
        if observable.nrows() != probe.dim() || observable.ncols() != probe.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable is {}x{} but probe `{}` has dimension {}",
                observable.nrows(),
                observable.ncols(),
                probe.id(),
                probe.dim()
            )));
        }
        let observable = Operator::on_slot(probe.slot(), observable)?;
        Ok(Self {
            name: name.into(),
            probe,
            observable,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn probe(&self) -> &ProbeSpec {
        &self.probe
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn zone(&self, lattice: Lattice) -> Result<Region> {
        self.probe.coupling_zone(lattice)
    }

    pub fn is_hermitian(&self) -> bool {
        self.observable.is_hermitian(PHYSICS_TOL)
    }

    /// The observable as an effect, or `NotAnEffect`.
    pub fn effect(&self) -> Result<Effect> {
        Effect::new(self.observable.clone(), PHYSICS_TOL)
    }

    /// A copy with the probe decoupled.
    pub fn switched_off(&self) -> ObserverSpec {
        ObserverSpec {
            probe: self.probe.switched_off(),
            ..self.clone()
        }
    }

    /// A copy reading out `observable` instead.
    pub fn with_observable(&self, observable: Matrix) -> Result<ObserverSpec> {
        ObserverSpec::new(self.name.clone(), self.probe.clone(), observable)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum UpdateKind {
    Nonselective,
    /// Post-selection on an effect of the observer's probe.
    Selective(Effect),
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateMap {
    pub kind: UpdateKind,
    pub observer: ObserverSpec,
}

impl UpdateMap {
    pub fn nonselective(observer: ObserverSpec) -> Self {
        Self {
            kind: UpdateKind::Nonselective,
            observer,
        }
    }

    /// Checks that `effect` is an effect on this observer's probe slot.
    pub fn selective(observer: ObserverSpec, effect: Matrix) -> Result<Self> {
        let op = Operator::on_slot(observer.probe.slot(), effect)?;
        if op.dim() != observer.probe.dim() {
            return Err(Error::DimensionMismatch("effect does not match probe dimension".into()));
        }
        Ok(Self {
            kind: UpdateKind::Selective(Effect::new(op, PHYSICS_TOL)?),
            observer,
        })
    }

    /// The effect applied (identity for non-selective maps).
    fn effect_operator(&self) -> Operator {
        match &self.kind {
            UpdateKind::Nonselective => Operator::identity(
                SlotLayout::single(self.observer.probe.slot(), self.observer.probe.dim()).expect("valid slot"),
            ),
            UpdateKind::Selective(e) => e.operator().clone(),
        }
    }
}

fn single_map(spec: &SystemSpec, obs: &ObserverSpec, t_to: usize) -> Result<ScatteringMap> {
    scattering_operator(spec, &[obs.probe()], t_to)
}

fn super_map(spec: &SystemSpec, observers: &[&ObserverSpec], t_to: usize) -> Result<ScatteringMap> {
    let probes: Vec<&ProbeSpec> = observers.iter().map(|o| o.probe()).collect();
    scattering_operator(spec, &probes, t_to)
}

fn state_value(theta: &ScatteringMap, omega: &DensityState, probe_op: &Operator) -> Result<C64> {
    let lifted = theta.apply(&embed(probe_op, theta.layout())?)?;
    Ok(lifted.expectation(&theta.joint_state(omega)?))
}

fn as_state(op: Operator) -> DensityState {
    DensityState::new_unchecked(op.hermitian_part())
}

/// `(ω ⊗ σ)(Θ(1 ⊗ O))`. The imaginary part is zero up to rounding for
/// Hermitian observables.
pub fn expectation(spec: &SystemSpec, omega: &DensityState, obs: &ObserverSpec, t_to: usize) -> Result<C64> {
    state_value(&single_map(spec, obs, t_to)?, omega, obs.observable())
}

/// `Tr(ω ε(O))` with `ε` the induced observable.
pub fn expectation_via_induced(
    spec: &SystemSpec,
    omega: &DensityState,
    obs: &ObserverSpec,
    t_to: usize,
) -> Result<C64> {
    let eps = induced_observable(&single_map(spec, obs, t_to)?, obs.observable())?;
    omega.expect(&eps)
}

/// `ω′ = Tr_P[S† (ρ ⊗ σ) S]`, so that `ω′(C) = (ω ⊗ σ)(Θ(C ⊗ 1))`.
pub fn nonselective_update(
    spec: &SystemSpec,
    omega: &DensityState,
    obs: &ObserverSpec,
    t_to: usize,
) -> Result<DensityState> {
    Ok(as_state(single_map(spec, obs, t_to)?.schrodinger(omega)?))
}

/// Post-selected state `ω_{|E}(C) = (ω ⊗ σ)(Θ(C ⊗ E)) / p` and the success
/// probability `p`.
pub fn selective_update(
    spec: &SystemSpec,
    omega: &DensityState,
    obs: &ObserverSpec,
    effect: &Effect,
    t_to: usize,
) -> Result<(DensityState, f64)> {
    let theta = single_map(spec, obs, t_to)?;
    let unnormalised = theta.schrodinger_with(omega, effect.operator())?;
    let p = unnormalised.trace().re;
    if p <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { probability: p });
    }
    Ok((as_state(unnormalised.scale(C64::new(1.0 / p, 0.0))), p))
}

fn check_effect(o: &Operator) -> Result<()> {
    effect_check(o.matrix(), PHYSICS_TOL).map_err(|e| Error::NotAnEffect(e.to_string()))
}

/// Success probability of `observers[target]`'s effect with every observer
/// coupled in one super-circuit.
pub fn marginal_probability(
    spec: &SystemSpec,
    omega: &DensityState,
    observers: &[ObserverSpec],
    target: usize,
    t_to: usize,
) -> Result<f64> {
    let o = observers[target].observable();
    check_effect(o)?;
    let refs: Vec<&ObserverSpec> = observers.iter().collect();
    Ok(state_value(&super_map(spec, &refs, t_to)?, omega, o)?.re)
}

/// `(ω ⊗ σ)(Θ(1 ⊗ E_1 ⊗ ⋯))` for effects on any subset of the observers'
/// probes, with all observers coupled.
pub fn joint_probability(
    spec: &SystemSpec,
    omega: &DensityState,
    observers: &[ObserverSpec],
    effects: &[(usize, Matrix)],
    t_to: usize,
) -> Result<f64> {
    let mut ops = Vec::new();
    for (i, m) in effects {
        let op = Operator::on_slot(observers[*i].probe().slot(), m.clone())?;
        check_effect(&op)?;
        ops.push(op);
    }
    let refs: Vec<&ObserverSpec> = observers.iter().collect();
    let theta = super_map(spec, &refs, t_to)?;
    let product = if ops.is_empty() {
        Operator::identity(theta.probe_layout())
    } else {
        tensor_all(ops.iter())?
    };
    Ok(state_value(&theta, omega, &product)?.re)
}

/// `ω(ε_{A,B}(E ⊗ O_B)) / ω(ε_{A,B}(E ⊗ 1))` with both observers coupled.
pub fn conditional_expectation(
    spec: &SystemSpec,
    omega: &DensityState,
    obs_a: &ObserverSpec,
    effect_a: &Effect,
    obs_b: &ObserverSpec,
    t_to: usize,
) -> Result<f64> {
    let theta = super_map(spec, &[obs_a, obs_b], t_to)?;
    let e = embed(effect_a.operator(), &theta.probe_layout())?;
    let p = state_value(&theta, omega, &e)?.re;
    if p <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { probability: p });
    }
    let eo = tensor_all([effect_a.operator(), obs_b.observable()])?;
    Ok(state_value(&theta, omega, &eo)?.re / p)
}

/// The same quantity through the selective update of `A`; agrees with
/// [`conditional_expectation`] when `A` precedes `B`.
pub fn conditional_expectation_via_update(
    spec: &SystemSpec,
    omega: &DensityState,
    obs_a: &ObserverSpec,
    effect_a: &Effect,
    obs_b: &ObserverSpec,
    t_to: usize,
) -> Result<f64> {
    let (post, _) = selective_update(spec, omega, obs_a, effect_a, t_to)?;
    Ok(expectation(spec, &post, obs_b, t_to)?.re)
}

/// `Err(NotOrderable)` unless the observers' zones, in sequence, form a
/// causal order.
pub fn validate_sequence(lattice: Lattice, observers: &[&ObserverSpec]) -> Result<()> {
    let zones = observers
        .iter()
        .map(|o| o.zone(lattice))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..zones.len() {
        for j in i + 1..zones.len() {
            if !lattice.may_precede(&zones[i], &zones[j]) {
                return Err(Error::NotOrderable(format!(
                    "`{}` cannot precede `{}`",
                    observers[i].name(),
                    observers[j].name()
                )));
            }
        }
    }
    Ok(())
}

fn ordered<'a>(observers: &'a [ObserverSpec], order: &CausalOrder) -> Result<Vec<&'a ObserverSpec>> {
    let mut seen = vec![false; observers.len()];
    for &i in &order.indices {
        if i >= observers.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::NotOrderable(format!(
                "{:?} is not a permutation of {} observers",
                order.indices,
                observers.len()
            )));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::NotOrderable(format!(
            "{:?} is not a permutation of {} observers",
            order.indices,
            observers.len()
        )));
    }
    Ok(order.indices.iter().map(|&i| &observers[i]).collect())
}

fn apply_map(spec: &SystemSpec, omega: &DensityState, map: &UpdateMap, t_to: usize) -> Result<DensityState> {
    match &map.kind {
        UpdateKind::Nonselective => nonselective_update(spec, omega, &map.observer, t_to),
        UpdateKind::Selective(e) => Ok(selective_update(spec, omega, &map.observer, e, t_to)?.0),
    }
}

/// `(J_N ∘ ⋯ ∘ J_1)(ω)`, maps listed earliest first.
pub fn compose_updates(
    spec: &SystemSpec,
    maps: &[UpdateMap],
    omega: &DensityState,
    t_to: usize,
) -> Result<DensityState> {
    let observers: Vec<&ObserverSpec> = maps.iter().map(|m| &m.observer).collect();
    validate_sequence(spec.lattice(), &observers)?;
    let mut state = omega.clone();
    for m in maps {
        state = apply_map(spec, &state, m, t_to)?;
    }
    Ok(state)
}

/// Single-shot update with every probe in one circuit, post-selecting on the
/// product of the selective maps' effects. Returns the state and the joint
/// success probability.
pub fn super_update(
    spec: &SystemSpec,
    maps: &[UpdateMap],
    omega: &DensityState,
    t_to: usize,
) -> Result<(DensityState, f64)> {
    let observers: Vec<&ObserverSpec> = maps.iter().map(|m| &m.observer).collect();
    let theta = super_map(spec, &observers, t_to)?;
    if maps.is_empty() {
        return Ok((omega.clone(), 1.0));
    }
    let effects: Vec<Operator> = maps.iter().map(UpdateMap::effect_operator).collect();
    let product = tensor_all(effects.iter())?;
    let unnormalised = theta.schrodinger_with(omega, &product)?;
    let p = unnormalised.trace().re;
    if p <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { probability: p });
    }
    Ok((as_state(unnormalised.scale(C64::new(1.0 / p, 0.0))), p))
}

/// Successive selective updates; returns the final state and the product of
/// the step probabilities.
pub fn selective_chain(
    spec: &SystemSpec,
    omega: &DensityState,
    steps: &[(ObserverSpec, Effect)],
    t_to: usize,
) -> Result<(DensityState, f64)> {
    let observers: Vec<&ObserverSpec> = steps.iter().map(|s| &s.0).collect();
    validate_sequence(spec.lattice(), &observers)?;
    let mut state = omega.clone();
    let mut total = 1.0;
    for (obs, e) in steps {
        let (next, p) = selective_update(spec, &state, obs, e, t_to)?;
        state = next;
        total *= p;
    }
    Ok((state, total))
}

/// One post-selection on `E_1 ⊗ ⋯ ⊗ E_k` with all probes coupled.
pub fn joint_post_selection(
    spec: &SystemSpec,
    omega: &DensityState,
    steps: &[(ObserverSpec, Effect)],
    t_to: usize,
) -> Result<(DensityState, f64)> {
    let maps: Vec<UpdateMap> = steps
        .iter()
        .map(|(o, e)| UpdateMap {
            kind: UpdateKind::Selective(e.clone()),
            observer: o.clone(),
        })
        .collect();
    super_update(spec, &maps, omega, t_to)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorisationReport {
    pub generators: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Compares the super-observer map with `Θ̂_{X_1} ∘ ⋯ ∘ Θ̂_{X_N}` on a
/// generating set (single-site Gell-Mann operators at time zero and the
/// probes' bases). The order must be a causal order.
pub fn check_causal_factorisation(
    spec: &SystemSpec,
    observers: &[ObserverSpec],
    order: &CausalOrder,
    tol: f64,
) -> Result<FactorisationReport> {
    let seq = ordered(observers, order)?;
    validate_sequence(spec.lattice(), &seq)?;
    factorisation_gap(spec, observers, &seq, tol)
}

/// As [`check_causal_factorisation`] without validating the order, for
/// demonstrating that factorisation fails outside its hypotheses.
pub fn check_causal_factorisation_forced(
    spec: &SystemSpec,
    observers: &[ObserverSpec],
    order: &CausalOrder,
    tol: f64,
) -> Result<FactorisationReport> {
    let seq = ordered(observers, order)?;
    factorisation_gap(spec, observers, &seq, tol)
}

fn factorisation_gap(
    spec: &SystemSpec,
    observers: &[ObserverSpec],
    seq: &[&ObserverSpec],
    tol: f64,
) -> Result<FactorisationReport> {
    let t_to = spec.lattice().depth();
    let refs: Vec<&ObserverSpec> = observers.iter().collect();
    let whole = super_map(spec, &refs, t_to)?;
    let mut composed: Option<ScatteringMap> = None;
    for obs in seq.iter().rev() {
        let m = single_map(spec, obs, t_to)?;
        composed = Some(match composed {
            None => m,
            Some(inner) => m.compose(&inner)?,
        });
    }
    let layout = whole.layout().clone();
    let mut generators = Vec::new();
    for x in 0..spec.lattice().width() {
        for b in gates::gell_mann(spec.site_dim()).iter().skip(1) {
            generators.push(embed(&spec.site_operator(x, b)?, &layout)?);
        }
    }
    for obs in observers {
        for g in obs.probe().generators() {
            generators.push(embed(&g, &layout)?);
        }
    }
    let mut worst = 0.0f64;
    for g in &generators {
        let lhs = whole.apply(g)?;
        let rhs = match &composed {
            Some(c) => c.apply(g)?,
            None => g.clone(),
        };
        worst = worst.max(lhs.distance(&rhs) / g.frobenius());
    }
    Ok(FactorisationReport {
        generators: generators.len(),
        max_deviation: worst,
        pass: worst <= tol,
    })
}

/// Expectation of `observers[target]` given by successive non-selective
/// updates of the observers preceding it in `order`; later observers are
/// ignored.
pub fn n_observer_expectation(
    spec: &SystemSpec,
    omega: &DensityState,
    observers: &[ObserverSpec],
    order: &CausalOrder,
    target: usize,
    t_to: usize,
) -> Result<f64> {
    let seq = ordered(observers, order)?;
    validate_sequence(spec.lattice(), &seq)?;
    let pos = order
        .position(target)
        .ok_or_else(|| Error::NotOrderable(format!("target {target} missing from order")))?;
    let mut state = omega.clone();
    for obs in &seq[..pos] {
        state = nonselective_update(spec, &state, obs, t_to)?;
    }
    Ok(expectation(spec, &state, &observers[target], t_to)?.re)
}

/// `(ω ⊗ σ)(Θ(1 ⊗ Ô_B))` with every observer in one super-circuit.
pub fn super_observer_expectation(
    spec: &SystemSpec,
    omega: &DensityState,
    observers: &[ObserverSpec],
    target: usize,
    t_to: usize,
) -> Result<f64> {
    let refs: Vec<&ObserverSpec> = observers.iter().collect();
    let theta = super_map(spec, &refs, t_to)?;
    Ok(state_value(&theta, omega, observers[target].observable())?.re)
}
