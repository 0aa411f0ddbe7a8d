//! Time-symmetric operations and instruments.
//!
//! A quantum operation `Q: L(C^d_in) -> L(C^d_out)` is time-symmetric (TS)
//! when `Q^dag(I_out) <= I_in` and `Q(I_in/d_in) <= I_out/d_out`. The first
//! condition is the usual trace-non-increasing one, checked through
//! `Tr_out Choi <= I`, which has the same spectrum as `Q^dag(I)`. A TS channel
//! satisfies both with equality.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{
    complete_to_unitary, haar_unitary, hermitian_eig, hermitian_eig_tol, inner, kron,
    matrix_sqrt_psd, partial_trace, seeded_rng, vector_norm, ComplexMatrix, Keep, C64, ONE, ZERO,
};
use crate::operations::{
    apply_choi, choi_from_fn, CpMap, Instrument, QuantumOperation,
};
use crate::states::{maximally_mixed, random_density_rng, DensityMatrix};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsReport {
    pub is_ts_operation: bool,
    pub is_ts_channel: bool,
    /// `max(0, λ_max(Q^dag(I_out)) - 1)`.
    pub defect_in: f64,
    /// `max(0, λ_max(Q(I_in/d_in) - I_out/d_out))`.
    pub defect_out: f64,
}

/// TS predicate on a Hermitian Choi matrix.
pub fn ts_classify_choi(choi: &ComplexMatrix, d_in: usize, d_out: usize, tol: &Tolerances) -> TsReport {
    let lmax = |m: &ComplexMatrix| hermitian_eig_tol(m, f64::INFINITY).expect("square").max();
    let tr_out = partial_trace(choi, d_out, d_in, Keep::B).expect("shape checked");
    let defect_in = (lmax(&tr_out) - 1.0).max(0.0);
    let img = apply_choi(choi, d_in, d_out, &ComplexMatrix::identity(d_in).scale(1.0 / d_in as f64));
    let bound = ComplexMatrix::identity(d_out).scale(1.0 / d_out as f64);
    let gap = &img - &bound;
    let defect_out = lmax(&gap).max(0.0);
    let is_ts_operation = defect_in <= tol.psd_tol && defect_out <= tol.psd_tol;
    let is_ts_channel = is_ts_operation
        && tr_out.distance(&ComplexMatrix::identity(d_in)) <= tol.equality_tol
        && gap.frobenius_norm() <= tol.equality_tol;
    TsReport {
        is_ts_operation,
        is_ts_channel,
        defect_in,
        defect_out,
    }
}

pub fn ts_classify(q: &CpMap) -> TsReport {
    ts_classify_with(q, &Tolerances::DEFAULT)
}

pub fn ts_classify_with(q: &CpMap, tol: &Tolerances) -> TsReport {
    ts_classify_choi(q.choi(), q.d_in(), q.d_out(), tol)
}

/// Returns `NotTimeSymmetric` with both defects unless `q` is TS.
pub fn require_ts(q: &CpMap, tol: &Tolerances) -> Result<TsReport> {
    let r = ts_classify_with(q, tol);
    if !r.is_ts_operation {
        return Err(Error::NotTimeSymmetric {
            defect_in: r.defect_in,
            defect_out: r.defect_out,
        });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsInstrumentReport {
    pub valid: bool,
    pub branches: Vec<TsReport>,
    pub total: TsReport,
    /// First branch failing the TS operation test.
    pub first_defective: Option<usize>,
}

/// Every branch TS and the sum a TS channel.
pub fn validate_ts_instrument(inst: &Instrument, tol: &Tolerances) -> Result<TsInstrumentReport> {
    if inst.is_empty() {
        return Err(Error::EmptyInstrument);
    }
    let branches: Vec<TsReport> = inst.branches().iter().map(|b| ts_classify_with(b, tol)).collect();
    let total = ts_classify_with(&inst.total(), tol);
    let first_defective = branches.iter().position(|r| !r.is_ts_operation);
    Ok(TsInstrumentReport {
        valid: first_defective.is_none() && total.is_ts_channel,
        branches,
        total,
        first_defective,
    })
}

/// Projective measurement in an orthonormal basis: branch `n` is
/// `rho ↦ |n><n| <n|rho|n>`.
pub fn von_neumann_instrument(basis: &[Vec<C64>]) -> Result<Instrument> {
    let d = basis.first().map(|v| v.len()).unwrap_or(0);
    if basis.iter().any(|v| v.len() != d) {
        return Err(Error::dims("basis vectors have different lengths"));
    }
    let mut defect: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let want = if i == j { ONE } else { ZERO };
            defect = defect.max((inner(a, b) - want).norm());
        }
    }
    if defect > 1e-9 {
        return Err(Error::NotOrthonormal(defect));
    }
    if basis.len() != d || d == 0 {
        return Err(Error::Incomplete {
            got: basis.len(),
            dim: d,
        });
    }
    let branches = basis
        .iter()
        .map(|v| QuantumOperation::trusted_conjugation(&ComplexMatrix::outer(v)))
        .collect();
    Instrument::new(d, d, branches)
}

/// Lüders instrument `rho ↦ P_n rho P_n` for a complete set of orthogonal
/// projectors.
pub fn luders_instrument(projectors: &[ComplexMatrix]) -> Result<Instrument> {
    let Some(first) = projectors.first() else {
        return Err(Error::EmptyInstrument);
    };
    let d = first.require_square()?;
    for (index, p) in projectors.iter().enumerate() {
        if p.rows() != d || p.cols() != d {
            return Err(Error::dims(format!("projector {index} has the wrong shape")));
        }
        let defect = p.hermiticity_defect().max(p.matmul(p).distance(p));
        if defect > 1e-9 {
            return Err(Error::NotProjector { index, defect });
        }
    }
    for i in 0..projectors.len() {
        for j in i + 1..projectors.len() {
            let defect = projectors[i].matmul(&projectors[j]).frobenius_norm();
            if defect > 1e-9 {
                return Err(Error::NotOrthogonal {
                    first: i,
                    second: j,
                    defect,
                });
            }
        }
    }
    let mut sum = ComplexMatrix::zeros(d, d);
    for p in projectors {
        sum = &sum + p;
    }
    let defect = sum.distance(&ComplexMatrix::identity(d));
    if defect > 1e-9 {
        return Err(Error::NotComplete(defect));
    }
    let branches = projectors.iter().map(QuantumOperation::trusted_conjugation).collect();
    Instrument::new(d, d, branches)
}

/// Demolition measurement: one operation `rho ↦ Tr[P_n rho]` per effect,
/// with a one-dimensional output. The Choi matrix of branch `n` is `P_n^T`.
pub fn povm_to_ts_operations(effects: &[ComplexMatrix], tol: &Tolerances) -> Result<Vec<QuantumOperation>> {
    let Some(first) = effects.first() else {
        return Err(Error::EmptyInstrument);
    };
    let d = first.require_square()?;
    let mut sum = ComplexMatrix::zeros(d, d);
    for (index, p) in effects.iter().enumerate() {
        if p.rows() != d || p.cols() != d {
            return Err(Error::dims(format!("effect {index} has the wrong shape")));
        }
        let herm = p.hermiticity_defect();
        if herm > tol.hermiticity_tol {
            return Err(Error::NotPSDEffect { index, defect: herm });
        }
        let eig = hermitian_eig(p)?;
        let defect = (-eig.min()).max(eig.max() - 1.0);
        if defect > tol.psd_tol {
            return Err(Error::NotPSDEffect { index, defect });
        }
        sum = &sum + p;
    }
    let defect = sum.distance(&ComplexMatrix::identity(d));
    if defect > tol.equality_tol {
        return Err(Error::NotNormalizedPOVM(defect));
    }
    Ok(effects
        .iter()
        .map(|p| QuantumOperation::trusted(d, 1, p.hermitian_part().transpose()))
        .collect())
}

/// Largest `p` with `p |psi><psi| <= I/d` in the TS theory, which is `1/d`.
pub fn max_prep_probability(psi: &[C64], d: usize) -> Result<f64> {
    if psi.len() != d {
        return Err(Error::dims(format!("vector has length {}, expected {d}", psi.len())));
    }
    let n = vector_norm(psi);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitVector(n));
    }
    Ok(1.0 / d as f64)
}

/// Largest `p` with `p rho_hat <= I/d` for the normalized direction
/// `rho_hat = rho / Tr rho`, i.e. `(1/d) / λ_max(rho_hat)`.
pub fn max_prep_probability_state(rho: &ComplexMatrix) -> Result<f64> {
    let d = rho.require_square()?;
    let t = rho.trace().re;
    if t <= Tolerances::DEFAULT.support_cutoff {
        return Err(Error::ZeroTrace(t));
    }
    let lmax = hermitian_eig(&rho.scale(1.0 / t))?.max();
    Ok((1.0 / d as f64) / lmax)
}

/// Realization `Q(rho) = Tr_aux'[(I_out ⊗ P) U (rho ⊗ psi0) U^dag]` of a
/// quantum operation by a unitary on `H_in ⊗ C^aux_in = H_out ⊗ C^aux_out`,
/// a pure ancilla and a projective post-selection.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub d_in: usize,
    pub d_out: usize,
    pub aux_in: usize,
    pub aux_out: usize,
    pub u: ComplexMatrix,
    pub psi0: Vec<C64>,
    /// Projector on `C^aux_out` onto the labels carrying the Kraus
    /// operators of the original operation.
    pub p_effect: ComplexMatrix,
    /// `‖Choi(realized) - Choi(q)‖_F`.
    pub reconstruction_error: f64,
}

impl Dilation {
    /// The map obtained by applying the stated formula.
    pub fn realized_choi(&self) -> ComplexMatrix {
        let proj = kron(&ComplexMatrix::identity(self.d_out), &self.p_effect);
        let anc = ComplexMatrix::outer(&self.psi0);
        choi_from_fn(self.d_in, self.d_out, |e| {
            let evolved = self.u.conjugate(&kron(e, &anc));
            partial_trace(&proj.matmul(&evolved), self.d_out, self.aux_out, Keep::A)
                .expect("dilation shapes")
        })
    }
}

pub fn realize_via_dilation(q: &QuantumOperation) -> Dilation {
    let (d_in, d_out) = (q.d_in(), q.d_out());
    let mut ops = q.kraus_operators();
    let r = ops.len();
    let mut k_sum = ComplexMatrix::zeros(d_in, d_in);
    for k in &ops {
        k_sum = &k_sum + &k.dagger().matmul(k);
    }
    let deficit = (&ComplexMatrix::identity(d_in) - &k_sum).hermitian_part();
    if deficit.frobenius_norm() > 1e-12 {
        let root = matrix_sqrt_psd(&deficit).unwrap_or_else(|_| {
            // tiny negative eigenvalues from an almost-channel: clip them
            hermitian_eig_tol(&deficit, f64::INFINITY)
                .expect("square")
                .map_spectrum(|l| l.max(0.0).sqrt())
        });
        if d_out >= d_in {
            // canonical embedding C^d_in -> C^d_out
            let embed = ComplexMatrix::from_fn(d_out, d_in, |a, i| if a == i { ONE } else { ZERO });
            ops.push(embed.matmul(&root));
        } else {
            for j in 0..d_in {
                let row = ComplexMatrix::from_fn(d_out, d_in, |a, i| if a == 0 && i == j { ONE } else { ZERO });
                ops.push(row.matmul(&root));
            }
        }
    }
    let l = ops.len();
    let aux_out = (l..).find(|&lp| (d_out * lp) % d_in == 0).expect("some multiple exists");
    let aux_in = d_out * aux_out / d_in;
    let n = d_in * aux_in;
    let iso = ComplexMatrix::from_fn(n, d_in, |row, i| {
        let (x, lbl) = (row / aux_out, row % aux_out);
        if lbl < l {
            ops[lbl][(x, i)]
        } else {
            ZERO
        }
    });
    let w = complete_to_unitary(&iso);
    // Input column (i, 0) carries the isometry; the rest take the completion.
    let mut order = Vec::with_capacity(n);
    let mut extra = d_in;
    for col in 0..n {
        if col % aux_in == 0 {
            order.push(col / aux_in);
        } else {
            order.push(extra);
            extra += 1;
        }
    }
    let u = ComplexMatrix::from_fn(n, n, |row, col| w[(row, order[col])]);
    let mut psi0 = vec![ZERO; aux_in];
    psi0[0] = ONE;
    let p_effect = ComplexMatrix::from_fn(aux_out, aux_out, |a, b| if a == b && a < r { ONE } else { ZERO });
    let mut dil = Dilation {
        d_in,
        d_out,
        aux_in,
        aux_out,
        u,
        psi0,
        p_effect,
        reconstruction_error: 0.0,
    };
    dil.reconstruction_error = dil.realized_choi().distance(q.choi());
    dil
}

#[derive(Debug, Clone)]
pub struct TwirlResult {
    pub state: DensityMatrix,
    /// `‖T(rho) - I/d‖_F`.
    pub defect: f64,
}

/// Monte-Carlo average of `U rho U^dag` over `n_samples` Haar unitaries.
pub fn twirl<R: Rng + ?Sized>(rho: &DensityMatrix, n_samples: usize, rng: &mut R) -> TwirlResult {
    let d = rho.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for _ in 0..n_samples.max(1) {
        acc = &acc + &haar_unitary(d, rng).conjugate(rho.matrix());
    }
    let avg = acc.scale(1.0 / n_samples.max(1) as f64).hermitian_part();
    let defect = avg.distance(maximally_mixed(d).matrix());
    TwirlResult {
        state: DensityMatrix::from_trusted(avg),
        defect,
    }
}

/// Twirl of a random state drawn from the same seeded stream.
pub fn unitary_twirl_fixed_state(d: usize, n_samples: usize, seed: u64) -> TwirlResult {
    let mut rng = seeded_rng(seed);
    let rho = random_density_rng(d, &mut rng);
    twirl(&rho, n_samples, &mut rng)
}

impl QuantumOperation {
    /// `rho ↦ A rho A^dag` for a contraction `A` whose TNI property the
    /// caller guarantees.
    pub(crate) fn trusted_conjugation(a: &ComplexMatrix) -> QuantumOperation {
        let c = CpMap::conjugation(a);
        QuantumOperation::trusted(c.d_in(), c.d_out(), c.choi().clone())
    }
}
