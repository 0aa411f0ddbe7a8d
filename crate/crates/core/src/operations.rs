//! Completely positive maps, quantum operations and instruments.
//!
//! Maps are stored through their Choi matrix
//! `Choi(M) = Σ_ij M(|i><j|) ⊗ |i><j|` on `H_out ⊗ H_in`, unnormalized, so a
//! channel has `Tr Choi = d_in`. Kraus operators are derived on demand.
//!
//! Two record types exist. [`CpMap`] only promises complete positivity; it is
//! what the adjoint and transpose reversals return, since those can leave the
//! set of quantum operations. [`QuantumOperation`] additionally promises the
//! trace-non-increasing condition `Tr_out Choi <= I_in`.

use std::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{
    ginibre, haar_unitary, hermitian_eig, hermitian_eig_tol, partial_trace, seeded_rng,
    swap_operator, vec_identity, ComplexMatrix, Keep, C64, I as IM, ONE, ZERO,
};
use crate::states::{condition, DensityMatrix};
use crate::tolerance::Tolerances;
use crate::tsqt::{ts_classify_choi, TsReport};

/// Which transform produced a map, and with which reference states.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub transform: String,
    pub reference_states: Vec<(String, ComplexMatrix)>,
}

impl Provenance {
    pub fn new(transform: &str) -> Self {
        Provenance {
            transform: transform.to_string(),
            reference_states: Vec::new(),
        }
    }

    pub fn with_state(mut self, label: &str, state: &ComplexMatrix) -> Self {
        self.reference_states.push((label.to_string(), state.clone()));
        self
    }
}

/// A completely positive map `L(C^d_in) -> L(C^d_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpMap {
    d_in: usize,
    d_out: usize,
    choi: ComplexMatrix,
    provenance: Option<Provenance>,
}

fn check_choi_shape(d_in: usize, d_out: usize, choi: &ComplexMatrix) -> Result<()> {
    let n = d_in * d_out;
    if d_in == 0 || d_out == 0 || choi.rows() != n || choi.cols() != n {
        return Err(Error::dims(format!(
            "Choi matrix is {}x{}, expected {n}x{n} for d_in={d_in}, d_out={d_out}",
            choi.rows(),
            choi.cols()
        )));
    }
    Ok(())
}

impl CpMap {
    pub fn new(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(d_in, d_out, choi, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(
        d_in: usize,
        d_out: usize,
        choi: ComplexMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_choi_shape(d_in, d_out, &choi)?;
        let defect = choi.hermiticity_defect();
        if defect > tol.hermiticity_tol {
            return Err(Error::NotHermitian(defect));
        }
        let min = hermitian_eig(&choi)?.min();
        if min < -tol.psd_tol {
            return Err(Error::NotCP(min));
        }
        Ok(Self::trusted(d_in, d_out, choi))
    }

    /// Wraps a Choi matrix from a construction that is CP by design.
    pub(crate) fn trusted(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Self {
        debug_assert_eq!(choi.rows(), d_in * d_out);
        CpMap {
            d_in,
            d_out,
            choi: choi.hermitian_part(),
            provenance: None,
        }
    }

    /// Map with Kraus operators `ops` (each `d_out x d_in`).
    pub fn from_kraus_ops(d_in: usize, d_out: usize, ops: &[ComplexMatrix]) -> Result<Self> {
        check_kraus_shapes(d_in, d_out, ops)?;
        Ok(Self::trusted(d_in, d_out, choi_of_kraus_ops(d_in, d_out, ops)))
    }

    /// `rho ↦ A rho A^dag`.
    pub fn conjugation(a: &ComplexMatrix) -> Self {
        Self::trusted(a.cols(), a.rows(), choi_of_kraus_ops(a.cols(), a.rows(), std::slice::from_ref(a)))
    }

    pub fn zero(d_in: usize, d_out: usize) -> Self {
        Self::trusted(d_in, d_out, ComplexMatrix::zeros(d_in * d_out, d_in * d_out))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = Some(p);
        self
    }

    /// Action on an arbitrary `d_in x d_in` operator.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_choi(&self.choi, self.d_in, self.d_out, x)
    }

    pub fn scale(&self, s: f64) -> CpMap {
        assert!(s >= 0.0, "negative scale breaks complete positivity");
        Self::trusted(self.d_in, self.d_out, self.choi.scale(s))
    }

    /// `Tr_out Choi`, the transpose of `Σ K^dag K`.
    pub fn trace_out(&self) -> ComplexMatrix {
        partial_trace(&self.choi, self.d_out, self.d_in, Keep::B).expect("shape checked")
    }

    /// `M(I_in) = Tr_in Choi`.
    pub fn image_of_identity(&self) -> ComplexMatrix {
        partial_trace(&self.choi, self.d_out, self.d_in, Keep::A).expect("shape checked")
    }

    /// Excess of the largest eigenvalue of `Tr_out Choi` over one (clamped at 0).
    pub fn tni_excess(&self) -> f64 {
        (hermitian_eig(&self.trace_out()).map(|e| e.max()).unwrap_or(f64::INFINITY) - 1.0).max(0.0)
    }

    pub fn is_trace_nonincreasing(&self, tol: &Tolerances) -> bool {
        self.tni_excess() <= tol.psd_tol
    }

    pub fn tp_defect(&self) -> f64 {
        self.trace_out().distance(&ComplexMatrix::identity(self.d_in))
    }

    pub fn kraus_operators(&self) -> Vec<ComplexMatrix> {
        kraus_ops_of_choi(&self.choi, self.d_in, self.d_out, Tolerances::DEFAULT.support_cutoff)
    }

    pub fn classify(&self, tol: &Tolerances) -> Classification {
        classify_choi(&self.choi, self.d_in, self.d_out, tol)
    }

    /// Promotes to a [`QuantumOperation`] if the trace-non-increasing
    /// condition holds.
    pub fn into_operation(self) -> Result<QuantumOperation> {
        QuantumOperation::from_cp_map(self, &Tolerances::DEFAULT)
    }
}

/// A completely positive, trace-non-increasing map.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOperation(CpMap);

impl QuantumOperation {
    pub fn new(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(d_in, d_out, choi, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(
        d_in: usize,
        d_out: usize,
        choi: ComplexMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        Self::from_cp_map(CpMap::with_tolerances(d_in, d_out, choi, tol)?, tol)
    }

    pub fn from_cp_map(map: CpMap, tol: &Tolerances) -> Result<Self> {
        let excess = map.tni_excess();
        if excess > tol.psd_tol {
            return Err(Error::NotTraceNonIncreasing(excess));
        }
        Ok(QuantumOperation(map))
    }

    pub(crate) fn trusted(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Self {
        QuantumOperation(CpMap::trusted(d_in, d_out, choi))
    }

    pub fn as_map(&self) -> &CpMap {
        &self.0
    }

    pub fn into_map(self) -> CpMap {
        self.0
    }

    pub fn with_provenance(self, p: Provenance) -> Self {
        QuantumOperation(self.0.with_provenance(p))
    }

    /// Multiplies by `s ∈ [0, 1]`.
    pub fn scale(&self, s: f64) -> QuantumOperation {
        assert!((0.0..=1.0).contains(&s), "scale must lie in [0, 1]");
        QuantumOperation(self.0.scale(s))
    }

    pub fn is_channel(&self, tol: &Tolerances) -> bool {
        self.tp_defect() <= tol.equality_tol
    }
}

impl Deref for QuantumOperation {
    type Target = CpMap;
    fn deref(&self) -> &CpMap {
        &self.0
    }
}

impl AsRef<CpMap> for QuantumOperation {
    fn as_ref(&self) -> &CpMap {
        &self.0
    }
}

/// Kraus representation of a quantum operation.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausForm {
    d_in: usize,
    d_out: usize,
    ops: Vec<ComplexMatrix>,
}

fn check_kraus_shapes(d_in: usize, d_out: usize, ops: &[ComplexMatrix]) -> Result<()> {
    if ops.is_empty() {
        return Err(Error::dims("Kraus set is empty"));
    }
    for (k, op) in ops.iter().enumerate() {
        if op.rows() != d_out || op.cols() != d_in {
            return Err(Error::dims(format!(
                "Kraus operator {k} is {}x{}, expected {d_out}x{d_in}",
                op.rows(),
                op.cols()
            )));
        }
    }
    Ok(())
}

impl KrausForm {
    pub fn new(d_in: usize, d_out: usize, ops: Vec<ComplexMatrix>) -> Result<Self> {
        check_kraus_shapes(d_in, d_out, &ops)?;
        let mut sum = ComplexMatrix::zeros(d_in, d_in);
        for k in &ops {
            sum = &sum + &k.dagger().matmul(k);
        }
        let excess = hermitian_eig(&sum)?.max() - 1.0;
        if excess > Tolerances::DEFAULT.psd_tol {
            return Err(Error::InvalidKraus(excess));
        }
        Ok(KrausForm { d_in, d_out, ops })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// `Σ K rho K^dag`.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in &self.ops {
            out = &out + &k.conjugate(rho);
        }
        out
    }
}

/// `Σ_k (K_k ⊗ I)|I>><<I|(K_k ⊗ I)^dag`. `(K ⊗ I)|I>>` is the row-major
/// vectorization of `K`.
pub fn choi_of_kraus_ops(d_in: usize, d_out: usize, ops: &[ComplexMatrix]) -> ComplexMatrix {
    let n = d_in * d_out;
    let mut choi = ComplexMatrix::zeros(n, n);
    for k in ops {
        let v = k.as_slice();
        for r in 0..n {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..n {
                choi[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    choi
}

/// Action `M(x)[a,b] = Σ_ij Choi[(a,i),(b,j)] x[i,j]` of the linear map with
/// Choi matrix `choi`, i.e. `Tr_in[Choi (I ⊗ x^T)]`.
pub fn apply_choi(choi: &ComplexMatrix, d_in: usize, d_out: usize, x: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!((x.rows(), x.cols()), (d_in, d_in), "input has wrong dimension");
    ComplexMatrix::from_fn(d_out, d_out, |a, b| {
        let mut acc = ZERO;
        for i in 0..d_in {
            for j in 0..d_in {
                let xij = x[(i, j)];
                if xij != ZERO {
                    acc += choi[(a * d_in + i, b * d_in + j)] * xij;
                }
            }
        }
        acc
    })
}

/// `Σ_ij f(|i><j|) ⊗ |i><j|` for a linear `f: L(C^d_in) -> L(C^d_out)`.
pub fn choi_from_fn(
    d_in: usize,
    d_out: usize,
    mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
) -> ComplexMatrix {
    let n = d_in * d_out;
    let mut choi = ComplexMatrix::zeros(n, n);
    for i in 0..d_in {
        for j in 0..d_in {
            let img = f(&ComplexMatrix::unit(d_in, i, j));
            assert_eq!((img.rows(), img.cols()), (d_out, d_out));
            for a in 0..d_out {
                for b in 0..d_out {
                    choi[(a * d_in + i, b * d_in + j)] = img[(a, b)];
                }
            }
        }
    }
    choi
}

fn kraus_ops_of_choi(choi: &ComplexMatrix, d_in: usize, d_out: usize, cutoff: f64) -> Vec<ComplexMatrix> {
    let eig = hermitian_eig_tol(choi, f64::INFINITY).expect("square Choi");
    let ops: Vec<ComplexMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= cutoff)
        .map(|(k, &l)| {
            let v = crate::matrix::phase_fix_vector(&eig.vectors.col(k));
            ComplexMatrix::unvectorize(&v, d_out, d_in).scale(l.sqrt())
        })
        .collect();
    if ops.is_empty() {
        vec![ComplexMatrix::zeros(d_out, d_in)]
    } else {
        ops
    }
}

pub fn choi_from_kraus(k: &KrausForm) -> QuantumOperation {
    QuantumOperation::trusted(k.d_in, k.d_out, choi_of_kraus_ops(k.d_in, k.d_out, &k.ops))
}

/// Kraus operators from the eigendecomposition of the Choi matrix; one per
/// eigenvalue at or above `support_cutoff`. The null operation yields a
/// single zero operator.
pub fn kraus_from_choi(q: &QuantumOperation) -> KrausForm {
    KrausForm {
        d_in: q.d_in,
        d_out: q.d_out,
        ops: q.kraus_operators(),
    }
}

pub fn apply(q: &QuantumOperation, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != q.d_in {
        return Err(Error::dims(format!(
            "state has dim {}, operation expects {}",
            rho.dim(),
            q.d_in
        )));
    }
    Ok(DensityMatrix::from_trusted(q.apply_matrix(rho.matrix())))
}

/// Choi matrix of `second ∘ first`, built by pushing each block of
/// `Choi(first)` through `second`.
pub fn compose_maps(second: &CpMap, first: &CpMap) -> Result<CpMap> {
    if first.d_out != second.d_in {
        return Err(Error::dims(format!(
            "compose: first outputs dim {}, second expects {}",
            first.d_out, second.d_in
        )));
    }
    let choi = choi_from_fn(first.d_in, second.d_out, |e| {
        second.apply_matrix(&first.apply_matrix(e))
    });
    Ok(CpMap::trusted(first.d_in, second.d_out, choi))
}

/// `second ∘ first`.
pub fn compose(second: &QuantumOperation, first: &QuantumOperation) -> Result<QuantumOperation> {
    Ok(QuantumOperation(compose_maps(second, first)?))
}

/// Reorders `Choi(a) ⊗ Choi(b)` from `out_a ⊗ in_a ⊗ out_b ⊗ in_b` to
/// `(out_a ⊗ out_b) ⊗ (in_a ⊗ in_b)`.
pub fn tensor_maps(a: &CpMap, b: &CpMap) -> CpMap {
    let (ia, oa, ib, ob) = (a.d_in, a.d_out, b.d_in, b.d_out);
    let d_in = ia * ib;
    let d_out = oa * ob;
    let idx = |x: usize, y: usize, i: usize, j: usize| ((x * ob + y) * d_in) + i * ib + j;
    let n = d_in * d_out;
    let mut choi = ComplexMatrix::zeros(n, n);
    let ca = &a.choi;
    let cb = &b.choi;
    for x in 0..oa {
        for i in 0..ia {
            for xp in 0..oa {
                for ip in 0..ia {
                    let va = ca[(x * ia + i, xp * ia + ip)];
                    if va == ZERO {
                        continue;
                    }
                    for y in 0..ob {
                        for j in 0..ib {
                            for yp in 0..ob {
                                for jp in 0..ib {
                                    choi[(idx(x, y, i, j), idx(xp, yp, ip, jp))] =
                                        va * cb[(y * ib + j, yp * ib + jp)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    CpMap::trusted(d_in, d_out, choi)
}

pub fn tensor(a: &QuantumOperation, b: &QuantumOperation) -> QuantumOperation {
    QuantumOperation(tensor_maps(a, b))
}

fn require_cp(map: &CpMap) -> Result<()> {
    let min = hermitian_eig(&map.choi)?.min();
    if min < -Tolerances::DEFAULT.psd_tol {
        return Err(Error::NotCP(min));
    }
    Ok(())
}

/// `SWAP Choi SWAP^dag`, moving `H_out ⊗ H_in` to `H_in ⊗ H_out`.
fn swapped_choi(map: &CpMap) -> ComplexMatrix {
    let s = swap_operator(map.d_out, map.d_in);
    s.matmul(&map.choi).matmul(&s.transpose())
}

/// The adjoint `M^dag(rho) = Σ K^dag rho K`, from `L(H_out)` to `L(H_in)`.
/// Its Choi matrix is `[SWAP Choi(M) SWAP^dag]^T`. No trace condition is
/// imposed on the result.
pub fn adjoint_map(q: &CpMap) -> Result<CpMap> {
    require_cp(q)?;
    Ok(CpMap::trusted(q.d_out, q.d_in, swapped_choi(q).transpose())
        .with_provenance(Provenance::new("adjoint")))
}

/// The transpose `M^T(rho) = Σ K^T rho K*` in the computational basis. Its
/// Choi matrix is `SWAP Choi(M) SWAP^dag`.
pub fn transpose_map(q: &CpMap) -> Result<CpMap> {
    require_cp(q)?;
    Ok(CpMap::trusted(q.d_out, q.d_in, swapped_choi(q)).with_provenance(Provenance::new("transpose")))
}

/// Flags and defects of a linear map given by its (Hermitian) Choi matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub cp: bool,
    pub trace_nonincreasing: bool,
    pub trace_preserving: bool,
    pub bistochastic: bool,
    pub unitary: bool,
    pub time_symmetric: bool,
    /// Smallest eigenvalue of the Choi matrix.
    pub min_choi_eigenvalue: f64,
    /// `max(0, λ_max(Tr_out Choi) - 1)`.
    pub tni_excess: f64,
    /// `‖Tr_out Choi - I_in‖_F`.
    pub tp_defect: f64,
    /// `‖M(I_in) - I_out‖_F`, or infinity when `d_in != d_out`.
    pub unital_defect: f64,
    pub ts: TsReport,
}

/// Reports every predicate independently; never rejects (a non-Hermitian
/// input is reported with all flags false).
pub fn classify_choi(choi: &ComplexMatrix, d_in: usize, d_out: usize, tol: &Tolerances) -> Classification {
    let choi = choi.hermitian_part();
    let eig = hermitian_eig_tol(&choi, f64::INFINITY).expect("square Choi");
    let min = eig.min();
    let cp = min >= -tol.psd_tol;
    let tr_out = partial_trace(&choi, d_out, d_in, Keep::B).expect("shape checked");
    let tni_excess = (hermitian_eig_tol(&tr_out, f64::INFINITY)
        .expect("square")
        .max()
        - 1.0)
        .max(0.0);
    let trace_nonincreasing = tni_excess <= tol.psd_tol;
    let tp_defect = tr_out.distance(&ComplexMatrix::identity(d_in));
    let trace_preserving = tp_defect <= tol.equality_tol;
    let unital_defect = if d_in == d_out {
        partial_trace(&choi, d_out, d_in, Keep::A)
            .expect("shape checked")
            .distance(&ComplexMatrix::identity(d_out))
    } else {
        f64::INFINITY
    };
    let bistochastic = cp && trace_preserving && unital_defect <= tol.equality_tol;
    let d = d_in as f64;
    let unitary = cp
        && trace_preserving
        && d_in == d_out
        && (eig.max() - d).abs() <= tol.equality_tol * d
        && eig.values.get(1).is_none_or(|&l| l <= tol.rank_gap * d);
    let ts = ts_classify_choi(&choi, d_in, d_out, tol);
    Classification {
        cp,
        trace_nonincreasing,
        trace_preserving,
        bistochastic,
        unitary,
        time_symmetric: cp && ts.is_ts_operation,
        min_choi_eigenvalue: min,
        tni_excess,
        tp_defect,
        unital_defect,
        ts,
    }
}

pub fn classify(q: &CpMap, tol: &Tolerances) -> Classification {
    q.classify(tol)
}

/// A finite family of quantum operations with shared dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    d_in: usize,
    d_out: usize,
    branches: Vec<QuantumOperation>,
}

impl Instrument {
    /// Checks only that all branches share `d_in`/`d_out`; use
    /// [`validate_instrument`] for the channel condition.
    pub fn new(d_in: usize, d_out: usize, branches: Vec<QuantumOperation>) -> Result<Self> {
        for (n, b) in branches.iter().enumerate() {
            if b.d_in() != d_in || b.d_out() != d_out {
                return Err(Error::dims(format!(
                    "branch {n} maps {}->{}, instrument is {d_in}->{d_out}",
                    b.d_in(),
                    b.d_out()
                )));
            }
        }
        Ok(Instrument {
            d_in,
            d_out,
            branches,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn branches(&self) -> &[QuantumOperation] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Sum of all branches as a CP map.
    pub fn total(&self) -> CpMap {
        let n = self.d_in * self.d_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for b in &self.branches {
            choi = &choi + b.choi();
        }
        CpMap::trusted(self.d_in, self.d_out, choi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentReport {
    pub valid: bool,
    /// Smallest eigenvalue of the summed Choi matrix.
    pub min_choi_eigenvalue: f64,
    /// `‖Tr_out Σ Choi - I‖_F`.
    pub tp_defect: f64,
}

pub fn validate_instrument(inst: &Instrument, tol: &Tolerances) -> Result<InstrumentReport> {
    if inst.is_empty() {
        return Err(Error::EmptyInstrument);
    }
    let total = inst.total();
    let min = hermitian_eig(total.choi())?.min();
    let tp_defect = total.tp_defect();
    Ok(InstrumentReport {
        valid: min >= -tol.psd_tol && tp_defect <= tol.equality_tol,
        min_choi_eigenvalue: min,
        tp_defect,
    })
}

/// Born probabilities `Tr Q_n(rho)`, clamped at zero.
pub fn outcome_probabilities(inst: &Instrument, rho: &DensityMatrix) -> Result<Vec<f64>> {
    inst.branches
        .iter()
        .map(|b| Ok(apply(b, rho)?.trace().max(0.0)))
        .collect()
}

/// Draws outcome `n` with probability `Tr Q_n(rho)` and returns it with the
/// conditioned post-measurement state.
pub fn sample_instrument<R: Rng + ?Sized>(
    inst: &Instrument,
    rho: &DensityMatrix,
    rng: &mut R,
) -> Result<(usize, DensityMatrix)> {
    let report = validate_instrument(inst, &Tolerances::DEFAULT)?;
    if !report.valid {
        return Err(Error::InvalidInstrument(format!(
            "branches do not sum to a channel (tp defect {:e}, min eigenvalue {:e})",
            report.tp_defect, report.min_choi_eigenvalue
        )));
    }
    rho.require_normalized()?;
    let probs = outcome_probabilities(inst, rho)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInstrument(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut outcome = probs.len() - 1;
    for (n, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            outcome = n;
            break;
        }
    }
    // The last branch with non-zero weight absorbs floating-point slack.
    if probs[outcome] <= 0.0 {
        outcome = probs.iter().rposition(|&p| p > 0.0).unwrap_or(outcome);
    }
    let post = condition(&apply(&inst.branches[outcome], rho)?)?;
    Ok((outcome, post))
}

/// Random channel from a Haar isometry `H_in -> H_out ⊗ C^r`, where `r` is
/// `kraus_rank` raised if needed so that `d_out * r >= d_in`.
pub fn random_cptp_rng<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    kraus_rank: usize,
    rng: &mut R,
) -> QuantumOperation {
    assert!(kraus_rank >= 1 && d_in >= 1 && d_out >= 1);
    let r = kraus_rank.max(d_in.div_ceil(d_out));
    let u = haar_unitary(d_out * r, rng);
    let ops: Vec<ComplexMatrix> = (0..r)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |a, m| u[(a * r + k, m)]))
        .collect();
    QuantumOperation::trusted(d_in, d_out, choi_of_kraus_ops(d_in, d_out, &ops))
}

pub fn random_cptp(d_in: usize, d_out: usize, kraus_rank: usize, seed: u64) -> QuantumOperation {
    random_cptp_rng(d_in, d_out, kraus_rank, &mut seeded_rng(seed))
}

/// Random CP map with `rank` Ginibre Kraus operators (generally neither
/// trace-preserving nor trace-non-increasing).
pub fn random_cp_map_rng<R: Rng + ?Sized>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> CpMap {
    let ops: Vec<ComplexMatrix> = (0..rank).map(|_| ginibre(d_out, d_in, rng)).collect();
    CpMap::trusted(d_in, d_out, choi_of_kraus_ops(d_in, d_out, &ops))
}

/// Random quantum operation: a random channel scaled by a uniform factor in
/// `[0, 1)` and, with rank > 1, with one Kraus operator dropped.
pub fn random_operation_rng<R: Rng + ?Sized>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> QuantumOperation {
    let c = random_cptp_rng(d_in, d_out, rank + 1, rng);
    let mut ops = c.kraus_operators();
    ops.pop();
    if ops.is_empty() {
        ops = c.kraus_operators();
    }
    let s: f64 = rng.random();
    let choi = choi_of_kraus_ops(d_in, d_out, &ops).scale(s);
    QuantumOperation::trusted(d_in, d_out, choi)
}

pub fn identity_channel(d: usize) -> QuantumOperation {
    let v = vec_identity(d);
    QuantumOperation::trusted(d, d, v.matmul(&v.dagger()))
}

pub fn unitary_channel(u: &ComplexMatrix) -> QuantumOperation {
    QuantumOperation(CpMap::conjugation(u))
}

/// Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [ComplexMatrix; 4] {
    let mut y = ComplexMatrix::zeros(2, 2);
    y[(0, 1)] = -IM;
    y[(1, 0)] = IM;
    [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        y,
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
    ]
}

/// Uniform mixture of the four Pauli unitary channels; sends every qubit
/// state to `I/2`.
pub fn uniform_pauli_channel() -> QuantumOperation {
    let ops: Vec<ComplexMatrix> = paulis().iter().map(|p| p.scale(0.5)).collect();
    choi_from_kraus(&KrausForm::new(2, 2, ops).expect("valid Pauli Kraus set"))
}

/// `rho ↦ Tr[rho] |psi><psi|`.
pub fn discard_and_prepare(d_in: usize, psi: &[C64]) -> QuantumOperation {
    let d_out = psi.len();
    let ops: Vec<ComplexMatrix> = (0..d_in)
        .map(|i| ComplexMatrix::from_fn(d_out, d_in, |a, m| if m == i { psi[a] } else { ZERO }))
        .collect();
    QuantumOperation::trusted(d_in, d_out, choi_of_kraus_ops(d_in, d_out, &ops))
}

/// Discard a qubit and prepare `|0>`.
pub fn discard_and_prepare_zero() -> QuantumOperation {
    discard_and_prepare(2, &[ONE, ZERO])
}
