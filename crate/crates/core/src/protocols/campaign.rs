//! Randomised campaigns over seeded configurations.
//!
//! Trial `i` draws everything from `substream(seed, stream, i)`, so results
//! do not depend on scheduling; trials run on the rayon pool and are
//! collected in index order.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    run_sorkin, run_theorem2, sorkin_violations, Charlie, SignallingReport, SorkinConfig, Theorem2Config,
};
use crate::causal::{validate_probe_worldline, CausalOrder, Cell, Lattice, Region};
use crate::error::Result;
use crate::lattice_qft::{LocalObservable, SystemSpec};
use crate::probes::{check_lemma1, Coupling, ProbeSpec};
use crate::qop::{
    random_density, random_density_matrix, random_effect_matrix, random_hermitian_matrix, random_unitary_matrix,
    Operator,
};
use crate::rng::{substream, StreamRng};
use crate::updates::{check_causal_factorisation, ObserverSpec};

/// Runs `f(i, rng_i)` for every trial and returns the results in order.
pub fn run_trials<T, F>(seed: u64, stream: &str, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, stream, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// A worldline of `len` cells with a uniformly random start and steps of at
/// most one site.
pub fn random_worldline<R: Rng + ?Sized>(lattice: Lattice, len: usize, rng: &mut R) -> Vec<Cell> {
    let len = len.clamp(1, lattice.depth());
    let mut x = rng.random_range(0..lattice.width());
    let t0 = rng.random_range(0..=lattice.depth() - len);
    let mut out = vec![Cell::new(x, t0)];
    for t in t0 + 1..t0 + len {
        let step: i64 = rng.random_range(-1..=1);
        x = (x as i64 + step).clamp(0, lattice.width() as i64 - 1) as usize;
        out.push(Cell::new(x, t));
    }
    out
}

/// Qubit probe named `name` with random state, random coupling gates at
/// `cells` and a random effect as its observable.
pub fn random_observer<R: Rng + ?Sized>(name: &str, site_dim: usize, cells: &[Cell], rng: &mut R) -> Result<ObserverSpec> {
    let sigma = random_density_matrix(2, rng);
    let couplings = cells
        .iter()
        .map(|&c| Coupling::new(c, random_unitary_matrix(2 * site_dim, rng)))
        .collect();
    let probe = ProbeSpec::new(name, sigma, couplings, !validate_probe_worldline(cells))?;
    ObserverSpec::new(name, probe, random_effect_matrix(2, rng))
}

/// Zones for Alice and Bob and Charlie's region.
#[derive(Clone, Debug, PartialEq)]
pub struct SorkinGeometry {
    pub lattice: Lattice,
    pub alice: Vec<Cell>,
    pub bob: Vec<Cell>,
    pub charlie: Vec<Cell>,
}

impl SorkinGeometry {
    /// Alice at the left edge, Bob in the middle two layers later, Charlie at
    /// the right edge after Bob.
    pub fn standard() -> Self {
        Self {
            lattice: Lattice::new(5, 4).expect("valid lattice"),
            alice: vec![Cell::new(0, 0)],
            bob: vec![Cell::new(2, 1), Cell::new(2, 2)],
            charlie: vec![Cell::new(4, 2), Cell::new(4, 3)],
        }
    }

    /// Rejection-samples short worldlines until the hypotheses hold.
    pub fn random<R: Rng + ?Sized>(lattice: Lattice, rng: &mut R) -> Self {
        loop {
            let alice = random_worldline(lattice, rng.random_range(1..=2), rng);
            let bob = random_worldline(lattice, rng.random_range(1..=2), rng);
            let charlie = random_worldline(lattice, rng.random_range(1..=2), rng);
            let g = Self {
                lattice,
                alice,
                bob,
                charlie,
            };
            if g.violations().is_empty() {
                return g;
            }
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let region = |cells: &[Cell]| Region::new(self.lattice, cells.iter().copied()).expect("cells in lattice");
        sorkin_violations(
            self.lattice,
            &region(&self.alice),
            &region(&self.bob),
            &region(&self.charlie),
        )
    }
}

/// Random qubit dynamics, state, couplings and Charlie observable on a given
/// geometry. `C` is a sum of random Hermitian operators at Charlie's cells.
pub fn random_sorkin<R: Rng + ?Sized>(geometry: &SorkinGeometry, seed: u64, tol: f64, rng: &mut R) -> Result<SorkinConfig> {
    let lattice = geometry.lattice;
    let system = SystemSpec::random(lattice, 2, rng);
    let omega = random_density(system.layout(), rng);
    let alice = random_observer("alice", 2, &geometry.alice, rng)?;
    let bob = random_observer("bob", 2, &geometry.bob, rng)?;
    let mut c = Operator::zeros(system.layout());
    for cell in &geometry.charlie {
        c = c + system.heisenberg_pullback(&random_hermitian_matrix(2, rng), cell.x, cell.t)?;
    }
    let region = Region::new(lattice, geometry.charlie.iter().copied())?;
    let charlie = Charlie::Local(LocalObservable::new(&system, c, region, 1e-9)?);
    Ok(SorkinConfig {
        system,
        alice,
        bob,
        charlie,
        omega,
        tol,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub max_delta: f64,
    pub max_operator_delta: f64,
    pub failures: usize,
    pub reports: Vec<SignallingReport>,
}

impl CampaignSummary {
    fn from_reports(reports: Vec<SignallingReport>) -> Self {
        Self {
            trials: reports.len(),
            max_delta: reports.iter().map(|r| r.delta).fold(0.0, f64::max),
            max_operator_delta: reports.iter().map(|r| r.operator_delta).fold(0.0, f64::max),
            failures: reports.iter().filter(|r| !r.pass).count(),
            reports,
        }
    }

    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Sorkin protocol on random configurations. With `geometry = None` every
/// trial also samples its own geometry on `lattice`.
pub fn sorkin_campaign(
    lattice: Lattice,
    geometry: Option<&SorkinGeometry>,
    seed: u64,
    trials: usize,
    tol: f64,
) -> Result<CampaignSummary> {
    let reports = run_trials(seed, "sorkin", trials, |_, rng| {
        let g = match geometry {
            Some(g) => g.clone(),
            None => SorkinGeometry::random(lattice, rng),
        };
        run_sorkin(&random_sorkin(&g, seed, tol, rng)?)
    });
    Ok(CampaignSummary::from_reports(reports.into_iter().collect::<Result<_>>()?))
}

/// Four observers on `W = 6, T = 4`: `x` at (5,0), `y` at (0,0) spacelike to
/// the target, `z` at (2,1),(2,2) between them, and the target `b` at
/// (4,2),(4,3).
pub fn random_theorem2<R: Rng + ?Sized>(seed: u64, tol: f64, rng: &mut R) -> Result<Theorem2Config> {
    let lattice = Lattice::new(6, 4)?;
    let system = SystemSpec::random(lattice, 2, rng);
    let omega = random_density(system.layout(), rng);
    let cells: [(&str, Vec<Cell>); 4] = [
        ("x", vec![Cell::new(5, 0)]),
        ("y", vec![Cell::new(0, 0)]),
        ("z", vec![Cell::new(2, 1), Cell::new(2, 2)]),
        ("b", vec![Cell::new(4, 2), Cell::new(4, 3)]),
    ];
    let observers = cells
        .iter()
        .map(|(n, c)| random_observer(n, 2, c, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Theorem2Config {
        system,
        observers,
        target: 3,
        spacelike: None,
        omega,
        tol,
        seed,
        allow_disconnected: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Summary {
    pub trials: usize,
    pub max_delta: f64,
    pub max_operator_delta: f64,
    pub max_order_spread: f64,
    pub failures: usize,
}

pub fn theorem2_campaign(seed: u64, trials: usize, tol: f64) -> Result<Theorem2Summary> {
    let reports = run_trials(seed, "theorem2", trials, |_, rng| {
        run_theorem2(&random_theorem2(seed, tol, rng)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Theorem2Summary {
        trials,
        max_delta: reports.iter().map(|r| r.signalling.delta).fold(0.0, f64::max),
        max_operator_delta: reports.iter().map(|r| r.signalling.operator_delta).fold(0.0, f64::max),
        max_order_spread: reports.iter().map(|r| r.order_spread).fold(0.0, f64::max),
        failures: reports.iter().filter(|r| !r.signalling.pass).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorisationSummary {
    pub trials: usize,
    pub pair_max: f64,
    pub triple_max: f64,
    /// Worst over both orders of a spacelike pair.
    pub spacelike_max: f64,
    pub pass: bool,
}

/// Ordered pairs (`t ≤ 1` then `t ≥ 2`), ordered triples (layers 0, 1–2, 3)
/// and spacelike pairs at opposite edges on `W = 4, T = 4`.
pub fn factorisation_campaign(seed: u64, trials: usize, tol: f64) -> Result<FactorisationSummary> {
    let lattice = Lattice::new(4, 4)?;
    let rows = run_trials(seed, "factorisation", trials, |_, rng| -> Result<[f64; 3]> {
        let system = SystemSpec::random(lattice, 2, rng);
        let band = |t0: usize, len: usize, rng: &mut StreamRng| -> Result<Vec<Cell>> {
            let sub = Lattice::new(lattice.width(), len)?;
            let cells = random_worldline(sub, rng.random_range(1..=len), rng);
            Ok(cells.into_iter().map(|c| Cell::new(c.x, c.t + t0)).collect())
        };
        let (a, b) = (band(0, 2, rng)?, band(2, 2, rng)?);
        let pair = [random_observer("a", 2, &a, rng)?, random_observer("b", 2, &b, rng)?];
        let pair_gap = check_causal_factorisation(&system, &pair, &order(&[0, 1]), tol)?.max_deviation;

        let (a, b, c) = (band(0, 1, rng)?, band(1, 2, rng)?, band(3, 1, rng)?);
        let triple = [
            random_observer("a", 2, &a, rng)?,
            random_observer("b", 2, &b, rng)?,
            random_observer("c", 2, &c, rng)?,
        ];
        let triple_gap = check_causal_factorisation(&system, &triple, &order(&[0, 1, 2]), tol)?.max_deviation;

        let t = rng.random_range(0..3);
        let spacelike = [
            random_observer("a", 2, &[Cell::new(0, t)], rng)?,
            random_observer("b", 2, &[Cell::new(3, t + rng.random_range(0..2))], rng)?,
        ];
        let mut spacelike_gap = 0.0f64;
        for o in [[0, 1], [1, 0]] {
            let r = check_causal_factorisation(&system, &spacelike, &order(&o), tol)?;
            spacelike_gap = spacelike_gap.max(r.max_deviation);
        }
        Ok([pair_gap, triple_gap, spacelike_gap])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
    let (pair_max, triple_max, spacelike_max) = (max(0), max(1), max(2));
    Ok(FactorisationSummary {
        trials,
        pair_max,
        triple_max,
        spacelike_max,
        pass: pair_max <= tol && triple_max <= tol && spacelike_max <= tol,
    })
}

fn order(indices: &[usize]) -> CausalOrder {
    CausalOrder {
        indices: indices.to_vec(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Summary {
    pub trials: usize,
    pub spacelike_max: f64,
    pub out_region_max: f64,
    pub spacelike_checked: usize,
    pub out_region_checked: usize,
    pub out_region_skipped: usize,
    pub failures: usize,
}

/// Localisation checks for random local probes with one to three couplings
/// on `W = 5, T = 4`.
pub fn lemma1_campaign(seed: u64, trials: usize, tol: f64) -> Result<Lemma1Summary> {
    let lattice = Lattice::new(5, 4)?;
    let reports = run_trials(seed, "lemma1", trials, |_, rng| {
        let system = SystemSpec::random(lattice, 2, rng);
        let len = rng.random_range(1..=3);
        let cells = random_worldline(lattice, len, rng);
        let probe = random_observer("p", 2, &cells, rng)?.probe().clone();
        check_lemma1(&system, &probe, 4, rng, tol)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Lemma1Summary {
        trials,
        spacelike_max: reports.iter().map(|r| r.spacelike_max_deviation).fold(0.0, f64::max),
        out_region_max: reports.iter().map(|r| r.out_region_max_deviation).fold(0.0, f64::max),
        spacelike_checked: reports.iter().map(|r| r.spacelike_checked).sum(),
        out_region_checked: reports.iter().map(|r| r.out_region_checked).sum(),
        out_region_skipped: reports.iter().map(|r| r.out_region_skipped).sum(),
        failures: reports.iter().filter(|r| !r.pass).count(),
    })
}
