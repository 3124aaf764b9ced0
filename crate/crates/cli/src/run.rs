//! Experiment execution and report assembly.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use probe_causality::causal::{CausalOrder, Cell, Lattice};
use probe_causality::lattice_qft::SystemSpec;
use probe_causality::protocols::campaign::{
    factorisation_campaign, lemma1_campaign, sorkin_campaign, theorem2_campaign, SorkinGeometry,
};
use probe_causality::protocols::{
    check_spacelike_commutation, evaluate_adversary, run_adversary, run_sorkin, run_theorem2, AdversarySearch,
    SorkinConfig, Theorem2Config,
};
use probe_causality::qop::DensityState;
use probe_causality::updates::{check_causal_factorisation, check_causal_factorisation_forced, ObserverSpec};
use probe_causality::Error;

use crate::build::Builder;
use crate::config::{CampaignKind, ExperimentConfig, ExperimentKind, ObserverConfig};
use crate::error::CliError;

pub const TOOL: &str = "probecheck";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ bound`.
    Le,
    /// `value ≥ bound`.
    Ge,
    /// `value > bound`.
    Gt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, bound: f64) -> Self {
        let pass = match relation {
            Relation::Le => value <= bound,
            Relation::Ge => value >= bound,
            Relation::Gt => value > bound,
        };
        Self {
            name: name.into(),
            value,
            bound,
            relation,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: usize,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub details: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// One row per check: `name,value,bound,relation,pass`.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["name", "value", "bound", "relation", "pass"]).map_err(io)?;
        for c in &self.checks {
            let relation = match c.relation {
                Relation::Le => "le",
                Relation::Ge => "ge",
                Relation::Gt => "gt",
            };
            w.write_record([
                c.name.clone(),
                format!("{:e}", c.value),
                format!("{:e}", c.bound),
                relation.to_string(),
                c.pass.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub trials: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(t) = self.tolerance {
            config.tolerance = t;
        }
        if let Some(n) = self.trials {
            config.trials = n;
        }
        config
    }
}

/// SHA-256 of the config's compact JSON form.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let text = serde_json::to_string(config).expect("config serialises");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn missing(section: &str) -> CliError {
    CliError::Schema {
        pointer: format!("/{section}"),
        message: format!("section `{section}` is required for this experiment"),
    }
}

struct Setup {
    system: SystemSpec,
    omega: DensityState,
}

fn setup(config: &ExperimentConfig, b: &mut Builder) -> Result<Option<Setup>, CliError> {
    let sys = config.system.as_ref().ok_or_else(|| missing("system"))?;
    let Some(system) = b.system(sys, "/system") else {
        return Ok(None);
    };
    let omega = match &config.initial_state {
        Some(m) => b.state(&system, m, "/initial_state"),
        None => Some(DensityState::maximally_mixed(system.layout())),
    };
    Ok(omega.map(|omega| Setup { system, omega }))
}

fn index_of(observers: &[ObserverConfig], name: &str, pointer: &str, b: &mut Builder) -> Option<usize> {
    let found = observers.iter().position(|o| o.name == name);
    if found.is_none() {
        b.violate(pointer, format!("no observer named `{name}`"));
    }
    found
}

fn sorkin_config(config: &ExperimentConfig) -> Result<SorkinConfig, CliError> {
    let section = config.sorkin.as_ref().ok_or_else(|| missing("sorkin"))?;
    let mut b = Builder::new(config.seed);
    let s = setup(config, &mut b)?;
    let built = s.and_then(|s| {
        let alice = b.observer(&s.system, &section.alice, "/sorkin/alice");
        let bob = b.observer(&s.system, &section.bob, "/sorkin/bob");
        let charlie = b.charlie(&s.system, &section.charlie, "/sorkin/charlie");
        Some(SorkinConfig {
            alice: alice?,
            bob: bob?,
            charlie: charlie?,
            system: s.system,
            omega: s.omega,
            tol: config.tolerance,
            seed: config.seed,
        })
    });
    b.finish()?;
    Ok(built.expect("builder reported no violation"))
}

fn theorem2_config(config: &ExperimentConfig) -> Result<Theorem2Config, CliError> {
    let section = config.theorem2.as_ref().ok_or_else(|| missing("theorem2"))?;
    let mut b = Builder::new(config.seed);
    let s = setup(config, &mut b)?;
    let target = index_of(&section.observers, &section.target, "/theorem2/target", &mut b);
    let spacelike: Option<Vec<Option<usize>>> = section.spacelike.as_ref().map(|names| {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| index_of(&section.observers, n, &format!("/theorem2/spacelike/{i}"), &mut b))
            .collect()
    });
    let built = s.and_then(|s| {
        let observers = b.observers(&s.system, &section.observers, "/theorem2/observers")?;
        let spacelike = match spacelike {
            Some(v) => Some(v.into_iter().collect::<Option<Vec<_>>>()?),
            None => None,
        };
        Some(Theorem2Config {
            system: s.system,
            observers,
            target: target?,
            spacelike,
            omega: s.omega,
            tol: config.tolerance,
            seed: config.seed,
            allow_disconnected: section.allow_disconnected,
        })
    });
    b.finish()?;
    Ok(built.expect("builder reported no violation"))
}

struct Factorisation {
    system: SystemSpec,
    observers: Vec<ObserverSpec>,
    order: CausalOrder,
    forced: bool,
}

fn factorisation_config(config: &ExperimentConfig) -> Result<Factorisation, CliError> {
    let section = config.factorisation.as_ref().ok_or_else(|| missing("factorisation"))?;
    let mut b = Builder::new(config.seed);
    let s = setup(config, &mut b)?;
    let indices: Vec<Option<usize>> = section
        .order
        .iter()
        .enumerate()
        .map(|(i, n)| index_of(&section.observers, n, &format!("/factorisation/order/{i}"), &mut b))
        .collect();
    if section.order.len() != section.observers.len() {
        b.violate("/factorisation/order", "order must list every observer exactly once");
    }
    let built = s.and_then(|s| {
        let observers = b.observers(&s.system, &section.observers, "/factorisation/observers")?;
        Some(Factorisation {
            system: s.system,
            observers,
            order: CausalOrder {
                indices: indices.into_iter().collect::<Option<Vec<_>>>()?,
            },
            forced: section.forced,
        })
    });
    b.finish()?;
    Ok(built.expect("builder reported no violation"))
}

fn spacelike_config(config: &ExperimentConfig) -> Result<(Setup, ObserverSpec, ObserverSpec), CliError> {
    let section = config.spacelike.as_ref().ok_or_else(|| missing("spacelike"))?;
    let mut b = Builder::new(config.seed);
    let s = setup(config, &mut b)?;
    let built = s.and_then(|s| {
        let a = b.observer(&s.system, &section.a, "/spacelike/a");
        let o = b.observer(&s.system, &section.b, "/spacelike/b");
        Some((s, a?, o?))
    });
    b.finish()?;
    Ok(built.expect("builder reported no violation"))
}

fn adversary_search(config: &ExperimentConfig) -> Result<(AdversarySearch, Option<Vec<Cell>>), CliError> {
    let section = config.adversary.as_ref().ok_or_else(|| missing("adversary"))?;
    let mut b = Builder::new(config.seed);
    let lattice = b.lattice(section.width, section.depth, "/adversary");
    let built = lattice.and_then(|lattice| {
        let alice = b.cell(lattice, section.alice_cell, "/adversary/alice_cell");
        let charlie = b.cell(lattice, section.charlie_cell, "/adversary/charlie_cell");
        let bob: Vec<Option<Cell>> = section
            .bob_cells
            .iter()
            .enumerate()
            .map(|(i, c)| b.cell(lattice, *c, &format!("/adversary/bob_cells/{i}")))
            .collect();
        let repair: Option<Vec<Option<Cell>>> = section.repair_cells.as_ref().map(|cells| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| b.cell(lattice, *c, &format!("/adversary/repair_cells/{i}")))
                .collect()
        });
        let search = AdversarySearch {
            lattice,
            alice_cell: alice?,
            bob_cells: bob.into_iter().collect::<Option<Vec<_>>>()?,
            charlie_cell: charlie?,
            threshold: section.threshold,
            budget: section.budget,
            seed: config.seed,
        };
        let repair = match repair {
            Some(r) => Some(r.into_iter().collect::<Option<Vec<_>>>()?),
            None => None,
        };
        Some((search, repair))
    });
    b.finish()?;
    Ok(built.expect("builder reported no violation"))
}

/// Builds every model object the config describes, reporting all physics
/// violations without running anything.
pub fn validate(config: &ExperimentConfig) -> Result<(), CliError> {
    match config.experiment {
        ExperimentKind::Sorkin => sorkin_config(config).map(drop),
        ExperimentKind::Theorem2 => theorem2_config(config).map(drop),
        ExperimentKind::Adversary => adversary_search(config).map(drop),
        ExperimentKind::Factorisation => factorisation_config(config).map(drop),
        ExperimentKind::Spacelike => spacelike_config(config).map(drop),
        ExperimentKind::Campaign => {
            config.campaign.as_ref().ok_or_else(|| missing("campaign"))?;
            if let Some(sys) = &config.system {
                let mut b = Builder::new(config.seed);
                b.lattice(sys.width, sys.depth, "/system");
                b.finish()?;
            }
            Ok(())
        }
    }
}

type Outcome = (Vec<Check>, Value);

fn sorkin(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let cfg = sorkin_config(config)?;
    let r = run_sorkin(&cfg)?;
    let tol = config.tolerance;
    let checks = vec![
        Check::new("delta", r.delta, Relation::Le, tol),
        Check::new("operator_delta", r.operator_delta, Relation::Le, tol),
    ];
    Ok((checks, json!({ "expected": "no_signalling", "signalling": r })))
}

fn adversary(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (search, repair) = adversary_search(config)?;
    let attempt = config.adversary.as_ref().and_then(|a| a.attempt);
    let (attempt, witness, report) = match attempt {
        Some(a) => {
            let w = search.candidate(a)?;
            let r = evaluate_adversary(&w, search.threshold)?;
            (a, w, r)
        }
        None => match run_adversary(&search) {
            Ok(o) => (o.attempt, o.witness, o.report),
            Err(Error::NoWitnessFound { budget, best_delta }) => {
                let checks = vec![Check::new("witness_delta", best_delta, Relation::Ge, search.threshold)];
                return Ok((checks, json!({ "expected": "signalling", "budget": budget, "witness": null })));
            }
            Err(e) => return Err(e.into()),
        },
    };
    let mut checks = vec![Check::new("witness_delta", report.delta, Relation::Ge, search.threshold)];
    let mut details = json!({
        "expected": "signalling",
        "attempt": attempt,
        "bob_nonlocal": witness.bob.probe().is_nonlocal(),
        "witness": report,
    });
    if let Some(cells) = repair {
        let repaired = witness.with_bob_cells(&cells)?;
        let repaired = SorkinConfig {
            tol: config.tolerance,
            ..repaired
        };
        let r = run_sorkin(&repaired)?;
        checks.push(Check::new("repair_delta", r.delta, Relation::Le, config.tolerance));
        checks.push(Check::new("repair_operator_delta", r.operator_delta, Relation::Le, config.tolerance));
        details["repair"] = serde_json::to_value(r).expect("report serialises");
    }
    Ok((checks, details))
}

fn theorem2(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let cfg = theorem2_config(config)?;
    let r = run_theorem2(&cfg)?;
    let tol = config.tolerance;
    let mut checks = vec![
        Check::new("delta", r.signalling.delta, Relation::Le, tol),
        Check::new("operator_delta", r.signalling.operator_delta, Relation::Le, tol),
        Check::new("order_spread", r.order_spread, Relation::Le, tol),
    ];
    for d in &r.deletions {
        checks.push(Check::new(format!("deletion/{}", d.observer), d.shift, Relation::Le, tol));
    }
    Ok((checks, json!({ "expected": "no_signalling", "theorem2": r })))
}

fn factorisation(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let f = factorisation_config(config)?;
    let tol = config.tolerance;
    let (r, check) = if f.forced {
        let r = check_causal_factorisation_forced(&f.system, &f.observers, &f.order, tol)?;
        let c = Check::new("deviation", r.max_deviation, Relation::Gt, tol);
        (r, c)
    } else {
        let r = check_causal_factorisation(&f.system, &f.observers, &f.order, tol)?;
        let c = Check::new("deviation", r.max_deviation, Relation::Le, tol);
        (r, c)
    };
    let order: Vec<&str> = f.order.indices.iter().map(|&i| f.observers[i].name()).collect();
    let details = json!({
        "expected": if f.forced { "violation" } else { "factorises" },
        "order": order,
        "generators": r.generators,
        "max_deviation": r.max_deviation,
    });
    Ok((vec![check], details))
}

fn spacelike(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (s, a, b) = spacelike_config(config)?;
    let tol = config.tolerance;
    let r = check_spacelike_commutation(&s.system, &s.omega, &a, &b, tol)?;
    let checks = vec![
        Check::new("commutation_gap", r.commutation_gap, Relation::Le, tol),
        Check::new("product_gap", r.product_gap, Relation::Le, tol),
        Check::new("criterion_gap", r.criterion_gap, Relation::Le, tol),
        Check::new("marginal_shift", r.marginal_shift, Relation::Le, tol),
    ];
    Ok((checks, json!({ "expected": "commuting", "spacelike": r })))
}

fn campaign(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let section = config.campaign.as_ref().ok_or_else(|| missing("campaign"))?;
    let (seed, trials, tol) = (config.seed, config.trials, config.tolerance);
    let kind = section.kind;
    match kind {
        CampaignKind::Sorkin | CampaignKind::SorkinRandomGeometry => {
            let (summary, lattice) = if kind == CampaignKind::Sorkin {
                let g = SorkinGeometry::standard();
                (sorkin_campaign(g.lattice, Some(&g), seed, trials, tol)?, g.lattice)
            } else {
                let lattice = match &config.system {
                    Some(s) => Lattice::new(s.width, s.depth)?,
                    None => SorkinGeometry::standard().lattice,
                };
                (sorkin_campaign(lattice, None, seed, trials, tol)?, lattice)
            };
            let mut checks = vec![
                Check::new("max_delta", summary.max_delta, Relation::Le, tol),
                Check::new("max_operator_delta", summary.max_operator_delta, Relation::Le, tol),
            ];
            for (i, r) in summary.reports.iter().enumerate() {
                checks.push(Check::new(format!("trial/{i}/delta"), r.delta, Relation::Le, tol));
                checks.push(Check::new(format!("trial/{i}/operator_delta"), r.operator_delta, Relation::Le, tol));
            }
            let details = json!({
                "kind": kind,
                "lattice": [lattice.width(), lattice.depth()],
                "failures": summary.failures,
            });
            Ok((checks, details))
        }
        CampaignKind::Theorem2 => {
            let s = theorem2_campaign(seed, trials, tol)?;
            let checks = vec![
                Check::new("max_delta", s.max_delta, Relation::Le, tol),
                Check::new("max_operator_delta", s.max_operator_delta, Relation::Le, tol),
                Check::new("max_order_spread", s.max_order_spread, Relation::Le, tol),
            ];
            Ok((checks, json!({ "kind": kind, "summary": s })))
        }
        CampaignKind::Factorisation => {
            let s = factorisation_campaign(seed, trials, tol)?;
            let checks = vec![
                Check::new("pair_max", s.pair_max, Relation::Le, tol),
                Check::new("triple_max", s.triple_max, Relation::Le, tol),
                Check::new("spacelike_max", s.spacelike_max, Relation::Le, tol),
            ];
            Ok((checks, json!({ "kind": kind, "summary": s })))
        }
        CampaignKind::Lemma1 => {
            let s = lemma1_campaign(seed, trials, tol)?;
            let checks = vec![
                Check::new("spacelike_max", s.spacelike_max, Relation::Le, tol),
                Check::new("out_region_max", s.out_region_max, Relation::Le, tol),
            ];
            Ok((checks, json!({ "kind": kind, "summary": s })))
        }
    }
}

/// Runs the experiment. With `timing` the report carries the wall time,
/// which makes it non-reproducible.
pub fn execute(config: &ExperimentConfig, timing: bool) -> Result<Report, CliError> {
    let start = Instant::now();
    let (checks, details) = match config.experiment {
        ExperimentKind::Sorkin => sorkin(config)?,
        ExperimentKind::Theorem2 => theorem2(config)?,
        ExperimentKind::Adversary => adversary(config)?,
        ExperimentKind::Factorisation => factorisation(config)?,
        ExperimentKind::Spacelike => spacelike(config)?,
        ExperimentKind::Campaign => campaign(config)?,
    };
    Ok(Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        experiment: config.experiment.name().into(),
        config_digest: config_digest(config),
        seed: config.seed,
        tolerance: config.tolerance,
        trials: config.trials,
        pass: checks.iter().all(|c| c.pass),
        checks,
        details,
        wall_time_ms: timing.then(|| start.elapsed().as_millis() as u64),
    })
}
