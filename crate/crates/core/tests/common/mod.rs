//! Dense reference simulation for qudit chains with attached probes.
//!
//! Everything here is built from explicit index loops over the tensor
//! product `s0 ⊗ ⋯ ⊗ s{W-1} ⊗ p_1 ⊗ ⋯`, with the first factor most
//! significant, and shares no code with the library's operator kernels.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use probe_causality::lattice_qft::SystemSpec;
use probe_causality::probes::ProbeSpec;

pub type M = DMatrix<Complex64>;

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

/// `gate` acting on tensor factors `positions` (in the gate's own order).
pub fn embed_gate(gate: &M, positions: &[usize], dims: &[usize]) -> M {
    let n: usize = dims.iter().product();
    let mut out = M::zeros(n, n);
    for r in 0..n {
        let dr = digits(r, dims);
        for c in 0..n {
            let dc = digits(c, dims);
            let others_equal = (0..dims.len()).all(|k| positions.contains(&k) || dr[k] == dc[k]);
            if !others_equal {
                continue;
            }
            let (mut gr, mut gc) = (0, 0);
            for &p in positions {
                gr = gr * dims[p] + dr[p];
                gc = gc * dims[p] + dc[p];
            }
            out[(r, c)] = gate[(gr, gc)];
        }
    }
    out
}

pub fn dims(spec: &SystemSpec, probes: &[&ProbeSpec]) -> Vec<usize> {
    let mut d = vec![spec.site_dim(); spec.lattice().width()];
    d.extend(probes.iter().map(|p| p.dim()));
    d
}

/// Time-ordered evolution up to the final layer: at each time the probe
/// couplings (ordered by probe id, then site) act before the brickwork layer.
pub fn evolution(spec: &SystemSpec, probes: &[&ProbeSpec], coupled: bool) -> M {
    let w = spec.lattice().width();
    let d = dims(spec, probes);
    let n: usize = d.iter().product();
    let mut u = M::identity(n, n);
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| probes[a].id().cmp(probes[b].id()));
    for t in 0..spec.lattice().depth() {
        if coupled {
            for &k in &order {
                let mut cs: Vec<_> = probes[k].couplings().iter().filter(|c| c.cell.t == t).collect();
                cs.sort_by_key(|c| c.cell.x);
                for c in cs {
                    u = embed_gate(&c.gate, &[c.cell.x, w + k], &d) * u;
                }
            }
        }
        let start = t % 2;
        for (i, g) in spec.layers()[t].iter().enumerate() {
            let a = start + 2 * i;
            u = embed_gate(g, &[a, a + 1], &d) * u;
        }
    }
    u
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// `ρ ⊗ σ_1 ⊗ ⋯`.
pub fn joint(rho: &M, probes: &[&ProbeSpec]) -> M {
    probes.iter().fold(rho.clone(), |acc, p| kron(&acc, p.sigma().matrix()))
}

/// `Tr_P[(1 ⊗ e) x]` with the probe block of dimension `pd` last.
pub fn weighted_trace_probes(x: &M, e: &M, pd: usize) -> M {
    let n = x.nrows() / pd;
    M::from_fn(n, n, |i, j| {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..pd {
            for l in 0..pd {
                s += x[(i * pd + k, j * pd + l)] * e[(l, k)];
            }
        }
        s
    })
}

pub fn trace(m: &M) -> Complex64 {
    m.diagonal().sum()
}

/// Probe-space operator with `o` on probe `k` and identities elsewhere.
pub fn probe_factor(probes: &[&ProbeSpec], k: usize, o: &M) -> M {
    let mut out = M::identity(1, 1);
    for (i, p) in probes.iter().enumerate() {
        let f = if i == k { o.clone() } else { M::identity(p.dim(), p.dim()) };
        out = kron(&out, &f);
    }
    out
}

/// Physical final state and the interaction-picture state `U_f† ρ(T) U_f`
/// after post-selecting on `effect` (a probe-space operator).
pub struct Outcome {
    pub probability: f64,
    pub interaction_state: M,
}

pub fn measure(spec: &SystemSpec, probes: &[&ProbeSpec], rho: &M, effect: &M) -> Outcome {
    let u = evolution(spec, probes, true);
    let evolved = &u * joint(rho, probes) * u.adjoint();
    let pd: usize = probes.iter().map(|p| p.dim()).product();
    let reduced = weighted_trace_probes(&evolved, effect, pd);
    let p = trace(&reduced).re;
    let uf = evolution(spec, &[], false);
    Outcome {
        probability: p,
        interaction_state: uf.adjoint() * reduced * &uf / Complex64::new(p, 0.0),
    }
}

/// `B` at cell `(x, t)` in the time-zero picture.
pub fn heisenberg(spec: &SystemSpec, b: &M, x: usize, t: usize) -> M {
    let d = dims(spec, &[]);
    let mut u = M::identity(d.iter().product(), d.iter().product());
    for s in 0..t {
        let start = s % 2;
        for (i, g) in spec.layers()[s].iter().enumerate() {
            let a = start + 2 * i;
            u = embed_gate(g, &[a, a + 1], &d) * u;
        }
    }
    u.adjoint() * embed_gate(b, &[x], &d) * u
}

pub fn frob(m: &M) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
