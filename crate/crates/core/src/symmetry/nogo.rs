//! Numeric search for a supermap realizing a reversal on unitary channels.
//!
//! An operation symmetry sends the unitary channel of `U` to the unitary
//! channel of `W f(U) V`, with `f(U) = U` (unitary kind) or `f(U) = U*`
//! (antiunitary kind). Reversing every unitary channel would need
//! `W f(U) V = e^{iγ(U)} g(U)` for all `U`, with `g(U) = U^dag` or `U^T`.
//! This module minimizes the worst violation
//!
//! `max_U min_γ ‖W f(U) V - e^{iγ} g(U)‖_F`
//!
//! over `(W, V)` for a fixed sample of `U`, which contains `I`, Haar draws,
//! and the candidate-dependent probes `U = W` and `U = W*`. A residual that
//! stays bounded away from zero across restarts is the numerical face of the
//! obstruction; the `Identity` target is a feasible control whose residual
//! must reach zero.

use rand_chacha::ChaCha20Rng;

use crate::matrix::{exp_i_hermitian, haar_unitary, orthonormalize_columns, seeded_rng, ComplexMatrix, C64, ONE, ZERO};

use super::SymmetryKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NogoTarget {
    /// `U ↦ U^dag`
    Dagger,
    /// `U ↦ U^T`
    Transpose,
    /// `U ↦ U`, reachable by `W = V = I`.
    Identity,
}

impl NogoTarget {
    pub fn name(self) -> &'static str {
        match self {
            NogoTarget::Dagger => "dagger",
            NogoTarget::Transpose => "transpose",
            NogoTarget::Identity => "identity",
        }
    }

    fn apply(self, u: &ComplexMatrix) -> ComplexMatrix {
        match self {
            NogoTarget::Dagger => u.dagger(),
            NogoTarget::Transpose => u.transpose(),
            NogoTarget::Identity => u.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NogoResult {
    pub d: usize,
    pub target: NogoTarget,
    pub seed: u64,
    /// Number of fixed probe unitaries (`I` plus Haar draws).
    pub sample_size: usize,
    /// Smallest worst-case residual found.
    pub residual: f64,
    pub best_w: ComplexMatrix,
    pub best_v: ComplexMatrix,
    pub best_kind: SymmetryKind,
    pub best_restart: usize,
    /// Per restart, the better of the two kinds.
    pub restart_residuals: Vec<f64>,
}

const TEMPERATURES: [f64; 5] = [4.0, 16.0, 64.0, 256.0, 1024.0];
const ITERATIONS_PER_STAGE: usize = 60;
const REFRESH_EVERY: usize = 20;
const ACTIVE_SET: usize = 24;
const FD_STEP: f64 = 1e-6;

fn mul_into(a: &[C64], b: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            let mut acc = ZERO;
            for k in 0..d {
                acc += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = acc;
        }
    }
}

/// `min_γ ‖W F V - e^{iγ} G‖_F²`, computed entry-wise to avoid the
/// cancellation in `2d - 2|Tr(G^dag W F V)|`.
fn residual_sq(w: &[C64], f: &[C64], v: &[C64], g: &[C64], d: usize, buf: &mut [C64]) -> f64 {
    let (t1, t2) = buf.split_at_mut(d * d);
    mul_into(w, f, t1, d);
    mul_into(t1, v, t2, d);
    let overlap: C64 = g.iter().zip(t2.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    g.iter().zip(t2.iter()).map(|(x, y)| (y - phase * x).norm_sqr()).sum()
}

struct Problem {
    d: usize,
    kind: SymmetryKind,
    target: NogoTarget,
    /// `f(U)` and `g(U)` for the fixed probes, flattened row-major.
    fs: Vec<Vec<C64>>,
    gs: Vec<Vec<C64>>,
}

impl Problem {
    fn new(d: usize, kind: SymmetryKind, target: NogoTarget, sample: &[ComplexMatrix]) -> Self {
        let f = |u: &ComplexMatrix| match kind {
            SymmetryKind::Unitary => u.clone(),
            SymmetryKind::Antiunitary => u.conj(),
        };
        Problem {
            d,
            kind,
            target,
            fs: sample.iter().map(|u| f(u).into_vec()).collect(),
            gs: sample.iter().map(|u| target.apply(u).into_vec()).collect(),
        }
    }

    fn dynamic_probes(&self, w: &[C64]) -> [(Vec<C64>, Vec<C64>); 2] {
        let wm = ComplexMatrix::new(self.d, self.d, w.to_vec()).expect("square");
        let probe = |u: ComplexMatrix| {
            let f = match self.kind {
                SymmetryKind::Unitary => u.clone(),
                SymmetryKind::Antiunitary => u.conj(),
            };
            (f.into_vec(), self.target.apply(&u).into_vec())
        };
        [probe(wm.clone()), probe(wm.conj())]
    }

    /// Squared residuals on the dynamic probes and the listed fixed probes.
    fn values(&self, w: &[C64], v: &[C64], active: &[usize], out: &mut Vec<f64>) {
        let d = self.d;
        let mut buf = vec![ZERO; 2 * d * d];
        out.clear();
        for (f, g) in self.dynamic_probes(w).iter() {
            out.push(residual_sq(w, f, v, g, d, &mut buf));
        }
        for &k in active {
            out.push(residual_sq(w, &self.fs[k], v, &self.gs[k], d, &mut buf));
        }
    }

    fn surrogate(&self, w: &[C64], v: &[C64], active: &[usize], t: f64, scratch: &mut Vec<f64>) -> f64 {
        self.values(w, v, active, scratch);
        let m = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + scratch.iter().map(|&x| (t * (x - m)).exp()).sum::<f64>().ln() / t
    }

    fn worst(&self, w: &[C64], v: &[C64]) -> f64 {
        let all: Vec<usize> = (0..self.fs.len()).collect();
        let mut vals = Vec::new();
        self.values(w, v, &all, &mut vals);
        vals.into_iter().fold(0.0, f64::max).sqrt()
    }

    /// Probe `0` (the identity) plus the `ACTIVE_SET` worst fixed probes.
    fn active_set(&self, w: &[C64], v: &[C64]) -> Vec<usize> {
        let d = self.d;
        let mut buf = vec![ZERO; 2 * d * d];
        let mut scored: Vec<(f64, usize)> = (1..self.fs.len())
            .map(|k| (residual_sq(w, &self.fs[k], v, &self.gs[k], d, &mut buf), k))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut active = vec![0];
        active.extend(scored.iter().take(ACTIVE_SET).map(|&(_, k)| k));
        active
    }
}

/// Orthonormal basis of the real space of `d x d` Hermitian matrices.
fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        out.push(ComplexMatrix::unit(d, j, j));
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(j, k)] = C64::new(h, 0.0);
            re[(k, j)] = C64::new(h, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(d, d);
            im[(j, k)] = C64::new(0.0, -h);
            im[(k, j)] = C64::new(0.0, h);
            out.push(im);
        }
    }
    out
}

struct Search {
    basis: Vec<ComplexMatrix>,
    plus: Vec<Vec<C64>>,
    minus: Vec<Vec<C64>>,
}

impl Search {
    fn new(d: usize) -> Self {
        let basis = hermitian_basis(d);
        let exp = |s: f64| -> Vec<Vec<C64>> {
            basis
                .iter()
                .map(|g| exp_i_hermitian(g, s).expect("hermitian").into_vec())
                .collect()
        };
        let plus = exp(FD_STEP);
        let minus = exp(-FD_STEP);
        Search { basis, plus, minus }
    }

    fn step(&self, u: &[C64], h: &ComplexMatrix, s: f64, d: usize) -> Vec<C64> {
        let e = exp_i_hermitian(h, s).expect("hermitian");
        let mut out = vec![ZERO; d * d];
        mul_into(u, e.as_slice(), &mut out, d);
        out
    }

    /// Local minimization of the smoothed worst case from `(w, v)`.
    fn run(&self, p: &Problem, mut w: Vec<C64>, mut v: Vec<C64>) -> (Vec<C64>, Vec<C64>) {
        let d = p.d;
        let n = self.basis.len();
        let mut scratch = Vec::new();
        let mut moved = vec![ZERO; d * d];
        for &t in &TEMPERATURES {
            let mut step = 0.5;
            let mut active = p.active_set(&w, &v);
            for it in 0..ITERATIONS_PER_STAGE {
                if it > 0 && it % REFRESH_EVERY == 0 {
                    active = p.active_set(&w, &v);
                }
                let f0 = p.surrogate(&w, &v, &active, t, &mut scratch);
                let mut grad = vec![0.0; 2 * n];
                for k in 0..n {
                    mul_into(&w, &self.plus[k], &mut moved, d);
                    let fp = p.surrogate(&moved, &v, &active, t, &mut scratch);
                    mul_into(&w, &self.minus[k], &mut moved, d);
                    let fm = p.surrogate(&moved, &v, &active, t, &mut scratch);
                    grad[k] = (fp - fm) / (2.0 * FD_STEP);
                    mul_into(&v, &self.plus[k], &mut moved, d);
                    let fp = p.surrogate(&w, &moved, &active, t, &mut scratch);
                    mul_into(&v, &self.minus[k], &mut moved, d);
                    let fm = p.surrogate(&w, &moved, &active, t, &mut scratch);
                    grad[n + k] = (fp - fm) / (2.0 * FD_STEP);
                }
                let gn2: f64 = grad.iter().map(|g| g * g).sum();
                if gn2 < 1e-28 {
                    break;
                }
                let mut hw = ComplexMatrix::zeros(d, d);
                let mut hv = ComplexMatrix::zeros(d, d);
                for k in 0..n {
                    hw = &hw - &self.basis[k].scale(grad[k]);
                    hv = &hv - &self.basis[k].scale(grad[n + k]);
                }
                let mut accepted = false;
                while step > 1e-14 {
                    let cw = self.step(&w, &hw, step, d);
                    let cv = self.step(&v, &hv, step, d);
                    let f1 = p.surrogate(&cw, &cv, &active, t, &mut scratch);
                    if f1 <= f0 - 1e-4 * step * gn2 {
                        w = cw;
                        v = cv;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            w = reunitarize(&w, d);
            v = reunitarize(&v, d);
        }
        (w, v)
    }
}

fn reunitarize(u: &[C64], d: usize) -> Vec<C64> {
    orthonormalize_columns(&ComplexMatrix::new(d, d, u.to_vec()).expect("square")).into_vec()
}

struct RestartOutcome {
    residual: f64,
    kind: SymmetryKind,
    w: Vec<C64>,
    v: Vec<C64>,
}

fn restart_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

/// Smallest worst-case residual over `restarts` independent local searches,
/// each trying both symmetry kinds. The fixed probes are `I` and
/// `unitary_sample_size` Haar unitaries drawn from `seed`; restart `r`
/// draws its starting point from its own stream, so results with fewer
/// restarts are prefixes of results with more.
pub fn nogo_residual(d: usize, target: NogoTarget, unitary_sample_size: usize, restarts: usize, seed: u64) -> NogoResult {
    assert!(d >= 1, "dimension must be positive");
    let restarts = restarts.max(1);
    if d == 1 {
        // all 1x1 unitaries are phases, which γ absorbs
        return NogoResult {
            d,
            target,
            seed,
            sample_size: unitary_sample_size + 1,
            residual: 0.0,
            best_w: ComplexMatrix::identity(1),
            best_v: ComplexMatrix::identity(1),
            best_kind: SymmetryKind::Unitary,
            best_restart: 0,
            restart_residuals: vec![0.0; restarts],
        };
    }
    let mut sample_rng = restart_rng(seed, 0);
    let mut sample = vec![ComplexMatrix::identity(d)];
    sample.extend((0..unitary_sample_size).map(|_| haar_unitary(d, &mut sample_rng)));
    let problems = [
        Problem::new(d, SymmetryKind::Unitary, target, &sample),
        Problem::new(d, SymmetryKind::Antiunitary, target, &sample),
    ];
    let search = Search::new(d);

    let outcomes: Vec<RestartOutcome> = (0..restarts)
        .map(|r| {
            let mut rng = restart_rng(seed, 1 + r as u64);
            let w0 = haar_unitary(d, &mut rng).into_vec();
            let v0 = haar_unitary(d, &mut rng).into_vec();
            let mut best: Option<RestartOutcome> = None;
            for p in &problems {
                let (w, v) = search.run(p, w0.clone(), v0.clone());
                let residual = p.worst(&w, &v);
                if best.as_ref().is_none_or(|b| residual < b.residual) {
                    best = Some(RestartOutcome { residual, kind: p.kind, w, v });
                }
            }
            best.expect("two kinds tried")
        })
        .collect();

    let (best_restart, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.residual.total_cmp(&b.1.residual).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    NogoResult {
        d,
        target,
        seed,
        sample_size: sample.len(),
        residual: best.residual,
        best_w: ComplexMatrix::new(d, d, best.w.clone()).expect("square"),
        best_v: ComplexMatrix::new(d, d, best.v.clone()).expect("square"),
        best_kind: best.kind,
        best_restart,
        restart_residuals: outcomes.iter().map(|o| o.residual).collect(),
    }
}
