//! Acceptance criteria, one PASS/FAIL line each. Tolerances are pinned here
//! and do not follow any config.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{evolution, frob, joint, measure, probe_factor, trace, M};
use probe_causality::causal::{Cell, Lattice};
use probe_causality::lattice_qft::SystemSpec;
use probe_causality::probes::{Coupling, ProbeSpec};
use probe_causality::protocols::campaign::{
    factorisation_campaign, lemma1_campaign, random_observer, random_worldline, sorkin_campaign, theorem2_campaign,
    SorkinGeometry,
};
use probe_causality::qop::{
    gates, random_density, random_density_matrix, random_effect_matrix, random_unitary_matrix, DensityState, Effect,
};
use probe_causality::rng::substream;
use probe_causality::updates::{
    expectation, joint_post_selection, nonselective_update, selective_chain, selective_update, ObserverSpec,
};
use probecheck::{execute, parse_config, Overrides};
use rand::Rng;

const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn no_signalling() -> Outcome {
    let g = SorkinGeometry::standard();
    let start = Instant::now();
    let s = sorkin_campaign(g.lattice, Some(&g), SEED, 100, 1e-9).unwrap();
    let elapsed = start.elapsed();
    outcome(
        s.trials >= 100 && s.max_delta <= 1e-9 && s.max_operator_delta <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "trials={} max_delta={:.3e} max_operator_delta={:.3e} time={:.1}s (bounds 1e-9, 1e-9, 60s)",
            s.trials,
            s.max_delta,
            s.max_operator_delta,
            elapsed.as_secs_f64()
        ),
    )
}

fn localisation() -> Outcome {
    let s = lemma1_campaign(SEED, 50, 1e-10).unwrap();
    outcome(
        s.failures == 0 && s.spacelike_max <= 1e-10 && s.out_region_max <= 1e-10 && s.out_region_checked > 0,
        format!(
            "trials={} spacelike_max={:.3e} out_region_max={:.3e} checked={}/{} skipped={} (bound 1e-10)",
            s.trials, s.spacelike_max, s.out_region_max, s.spacelike_checked, s.out_region_checked, s.out_region_skipped
        ),
    )
}

fn factorisation() -> Outcome {
    let s = factorisation_campaign(SEED, 50, 1e-10).unwrap();
    outcome(
        s.pass,
        format!(
            "trials={} pair_max={:.3e} triple_max={:.3e} spacelike_both_orders_max={:.3e} (bound 1e-10)",
            s.trials, s.pair_max, s.triple_max, s.spacelike_max
        ),
    )
}

/// Random chain with one probe on a few random cells; qutrits on short chains.
fn oracle_case(seed: u64) -> (SystemSpec, ObserverSpec, M) {
    let mut rng = substream(seed, "acceptance-oracle", 0);
    let w = rng.random_range(2..=4);
    let t = rng.random_range(1..=3);
    let d = if w <= 3 && rng.random_bool(0.3) { 3 } else { 2 };
    let spec = SystemSpec::random(Lattice::new(w, t).unwrap(), d, &mut rng);
    let pd = rng.random_range(2..=3);
    let couplings = (0..rng.random_range(1..=2))
        .map(|_| {
            let c = Cell::new(rng.random_range(0..w), rng.random_range(0..t));
            Coupling::new(c, random_unitary_matrix(d * pd, &mut rng))
        })
        .collect();
    let probe = ProbeSpec::new("q", random_density_matrix(pd, &mut rng), couplings, true).unwrap();
    let obs = ObserverSpec::new("q", probe, random_effect_matrix(pd, &mut rng)).unwrap();
    let rho = random_density(spec.layout(), &mut rng).matrix().clone();
    (spec, obs, rho)
}

fn oracle() -> Outcome {
    let mut worst = 0.0f64;
    let configs = 120;
    for seed in 0..configs {
        let (spec, obs, rho) = oracle_case(seed);
        let omega = DensityState::new(
            probe_causality::qop::Operator::new(rho.clone(), spec.layout()).unwrap(),
            1e-9,
        )
        .unwrap();
        let t = spec.lattice().depth();
        let probes = [obs.probe()];
        let pd = obs.probe().dim();

        let u = evolution(&spec, &probes, true);
        let o = probe_factor(&probes, 0, obs.observable().matrix());
        let sys = M::identity(rho.nrows(), rho.nrows());
        let want = trace(&(&u * joint(&rho, &probes) * u.adjoint() * sys.kronecker(&o))).re;
        let got = expectation(&spec, &omega, &obs, t).unwrap();
        worst = worst.max((got.re - want).abs()).max(got.im.abs());

        let non = measure(&spec, &probes, &rho, &M::identity(pd, pd));
        let after = nonselective_update(&spec, &omega, &obs, t).unwrap();
        worst = worst.max(frob(&(after.matrix() - &non.interaction_state)));

        let sel = measure(&spec, &probes, &rho, obs.observable().matrix());
        let effect = obs.effect().unwrap();
        let (post, p) = selective_update(&spec, &omega, &obs, &effect, t).unwrap();
        worst = worst.max((p - sel.probability).abs());
        worst = worst.max(frob(&(post.matrix() - &sel.interaction_state)));
    }
    outcome(worst <= 1e-10, format!("configs={configs} max_gap={worst:.3e} (bound 1e-10)"))
}

fn update_soundness() -> Outcome {
    let lattice = Lattice::new(4, 4).unwrap();
    let (mut trace_gap, mut min_eig, mut chain_gap) = (0.0f64, f64::INFINITY, 0.0f64);
    for seed in 0..30 {
        let mut rng = substream(SEED, "acceptance-updates", seed);
        let spec = SystemSpec::random(lattice, 2, &mut rng);
        let omega = random_density(spec.layout(), &mut rng);
        let cells = random_worldline(lattice, rng.random_range(1..=3), &mut rng);
        let obs = random_observer("a", 2, &cells, &mut rng).unwrap();
        let after = nonselective_update(&spec, &omega, &obs, 4).unwrap();
        trace_gap = trace_gap.max((after.operator().trace() - 1.0).norm());
        min_eig = min_eig.min(after.min_eigenvalue());

        let bands = [(0, 1), (1, 2), (3, 1)];
        let steps: Vec<(ObserverSpec, Effect)> = bands
            .iter()
            .enumerate()
            .map(|(k, &(t0, len))| {
                let sub = Lattice::new(4, len).unwrap();
                let cells: Vec<Cell> = random_worldline(sub, rng.random_range(1..=len), &mut rng)
                    .into_iter()
                    .map(|c| Cell::new(c.x, c.t + t0))
                    .collect();
                let o = random_observer(&format!("o{k}"), 2, &cells, &mut rng).unwrap();
                let e = o.effect().unwrap();
                (o, e)
            })
            .collect();
        let (chain, p_chain) = selective_chain(&spec, &omega, &steps, 4).unwrap();
        let (single, p_single) = joint_post_selection(&spec, &omega, &steps, 4).unwrap();
        chain_gap = chain_gap
            .max((p_chain - p_single).abs())
            .max(chain.operator().distance(single.operator()));
    }
    outcome(
        trace_gap <= 1e-10 && min_eig >= -1e-10 && chain_gap <= 1e-10,
        format!(
            "trace_gap={trace_gap:.3e} min_eigenvalue={min_eig:.3e} chain_vs_joint={chain_gap:.3e} (bounds 1e-10, -1e-10, 1e-10)"
        ),
    )
}

fn theorem2() -> Outcome {
    let s = theorem2_campaign(SEED, 50, 1e-9).unwrap();
    outcome(
        s.trials >= 50 && s.failures == 0 && s.max_delta <= 1e-9,
        format!(
            "trials={} max_shift={:.3e} max_operator_delta={:.3e} max_order_spread={:.3e} (bound 1e-9)",
            s.trials, s.max_delta, s.max_operator_delta, s.max_order_spread
        ),
    )
}

fn examples() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn adversary() -> Outcome {
    let config = parse_config(&examples().join("adversary.json")).unwrap();
    let report = execute(&config, false).unwrap();
    let value = |n: &str| report.checks.iter().find(|c| c.name == n).map(|c| c.value).unwrap_or(f64::NAN);
    let (witness, repair) = (value("witness_delta"), value("repair_delta"));
    outcome(
        witness >= 0.01 && repair <= 1e-9 && report.details["bob_nonlocal"] == true,
        format!("witness_delta={witness:.4} repair_delta={repair:.3e} (bounds >= 0.01, <= 1e-9)"),
    )
}

fn light_cone() -> Outcome {
    let mut checked = 0usize;
    let mut violations = 0usize;
    for seed in 0..5 {
        let mut rng = substream(SEED, "acceptance-light-cone", seed);
        for w in 2..=5 {
            for t in 1..=4 {
                let spec = SystemSpec::random(Lattice::new(w, t).unwrap(), 2, &mut rng);
                for x in 0..w {
                    for s in 0..=t {
                        for b in gates::gell_mann(2).iter().skip(1) {
                            let op = spec.heisenberg_pullback(b, x, s).unwrap();
                            let support = spec.support_of(&op, 1e-10).unwrap();
                            let (lo, hi) = (x.saturating_sub(s), x + s);
                            checked += 1;
                            if support.iter().any(|&y| y < lo || y > hi) {
                                violations += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("pullbacks={checked} violations={violations} (W<=5, T<=4, all sites)"))
}

/// `(golden, config, trials override)`; mirrors the goldens of the CLI tests.
const GOLDENS: &[(&str, &str, Option<usize>)] = &[
    ("sorkin.json", "sorkin.json", None),
    ("adversary.json", "adversary.json", None),
    ("theorem2.json", "theorem2.json", None),
    ("factorisation.json", "factorisation.json", None),
    ("factorisation_forced.json", "factorisation_forced.json", None),
    ("spacelike.json", "spacelike.json", None),
    ("campaign.json", "campaign.json", Some(8)),
];

fn determinism(suite_start: Instant) -> Outcome {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut mismatched = Vec::new();
    for (golden, config, trials) in GOLDENS {
        let config = parse_config(&examples().join(config)).unwrap();
        let config = Overrides {
            trials: *trials,
            ..Overrides::default()
        }
        .apply(config);
        let first = execute(&config, false).unwrap().to_json();
        let second = execute(&config, false).unwrap().to_json();
        let expected = std::fs::read_to_string(golden_dir.join(golden)).unwrap_or_default();
        if first != second || first != expected {
            mismatched.push(*golden);
        }
    }
    let elapsed = suite_start.elapsed();
    outcome(
        mismatched.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "goldens={} mismatched={mismatched:?} acceptance_time={:.1}s (bound 300s)",
            GOLDENS.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut all = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all &= o.pass;
        println!("{} {n} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "no-signalling", no_signalling());
    report(2, "localisation", localisation());
    report(3, "causal factorisation", factorisation());
    report(4, "oracle equivalence", oracle());
    report(5, "update soundness", update_soundness());
    report(6, "spacelike deletion", theorem2());
    report(7, "impossible apparatus", adversary());
    report(8, "light cone", light_cone());
    report(9, "determinism", determinism(start));
    if !all {
        std::process::exit(1);
    }
}
