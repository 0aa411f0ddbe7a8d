//! Symmetries of state space and of the space of quantum operations.
//!
//! A state-space symmetry is `rho ↦ U rho U^dag` (unitary kind) or
//! `rho ↦ U rho^T U^dag` (antiunitary kind). Linear maps on operators are
//! represented as [`Superoperator`] matrices acting on row-major
//! vectorizations, `vec(A X B) = (A ⊗ B^T) vec(X)`.
//!
//! A [`SuperMap`] is a linear map on Choi matrices. Those of the form
//! `Q ↦ S2 ∘ Q ∘ S1` with `S1`, `S2` state symmetries of the same kind are
//! the symmetries of the set of quantum operations; [`decompose_operation_symmetry`]
//! recovers `S1` and `S2` from the supermap alone.

mod nogo;

pub use nogo::{nogo_residual, NogoResult, NogoTarget};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig_tol, partial_trace, seeded_rng, swap_operator, ComplexMatrix, Keep, ONE};
use crate::operations::{apply_choi, choi_from_fn, classify_choi, random_cptp_rng, CpMap};
use crate::states::DensityMatrix;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryKind {
    Unitary,
    Antiunitary,
}

impl SymmetryKind {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryKind::Unitary => "unitary",
            SymmetryKind::Antiunitary => "antiunitary",
        }
    }
}

/// Wigner symmetry of the states of `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSymmetry {
    pub kind: SymmetryKind,
    pub u: ComplexMatrix,
}

impl StateSymmetry {
    pub fn new(kind: SymmetryKind, u: ComplexMatrix) -> Result<Self> {
        u.require_square()?;
        let defect = u.unitarity_defect();
        if defect > 1e-9 {
            return Err(Error::not_symmetry("unitarity", format!("u^dag u - I has norm {defect:e}")));
        }
        Ok(StateSymmetry { kind, u })
    }

    pub fn identity(d: usize) -> Self {
        StateSymmetry {
            kind: SymmetryKind::Unitary,
            u: ComplexMatrix::identity(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    /// Action on an arbitrary operator (the map is linear in either case).
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        match self.kind {
            SymmetryKind::Unitary => self.u.conjugate(x),
            SymmetryKind::Antiunitary => self.u.conjugate(&x.transpose()),
        }
    }

    pub fn superoperator(&self) -> Superoperator {
        Superoperator::from_fn(self.dim(), self.dim(), |x| self.apply_matrix(x))
    }
}

pub fn apply_state_symmetry(s: &StateSymmetry, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != s.dim() {
        return Err(Error::dims(format!("state has dim {}, symmetry acts on {}", rho.dim(), s.dim())));
    }
    Ok(DensityMatrix::from_trusted(s.apply_matrix(rho.matrix())))
}

/// Linear map `L(C^d_in) -> L(C^d_out)` as a `d_out² x d_in²` matrix on
/// row-major vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub d_in: usize,
    pub d_out: usize,
    pub mat: ComplexMatrix,
}

impl Superoperator {
    pub fn new(d_in: usize, d_out: usize, mat: ComplexMatrix) -> Result<Self> {
        if mat.rows() != d_out * d_out || mat.cols() != d_in * d_in {
            return Err(Error::dims(format!(
                "superoperator is {}x{}, expected {}x{}",
                mat.rows(),
                mat.cols(),
                d_out * d_out,
                d_in * d_in
            )));
        }
        Ok(Superoperator { d_in, d_out, mat })
    }

    pub fn from_fn(d_in: usize, d_out: usize, mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let mut mat = ComplexMatrix::zeros(d_out * d_out, d_in * d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                let img = f(&ComplexMatrix::unit(d_in, i, j));
                for (r, z) in img.as_slice().iter().enumerate() {
                    mat[(r, i * d_in + j)] = *z;
                }
            }
        }
        Superoperator { d_in, d_out, mat }
    }

    /// The transpose map on `L(C^d)`.
    pub fn transpose(d: usize) -> Self {
        Superoperator::from_fn(d, d, |x| x.transpose())
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.mat.matmul(&x.vectorize());
        ComplexMatrix::unvectorize(v.as_slice(), self.d_out, self.d_out)
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &Superoperator) -> Superoperator {
        assert_eq!(first.d_out, self.d_in, "superoperator dimensions do not chain");
        Superoperator {
            d_in: first.d_in,
            d_out: self.d_out,
            mat: self.mat.matmul(&first.mat),
        }
    }

    /// Choi matrix `Σ_ij S(|i><j|) ⊗ |i><j|`.
    pub fn choi(&self) -> ComplexMatrix {
        let (di, d_o) = (self.d_in, self.d_out);
        ComplexMatrix::from_fn(di * d_o, di * d_o, |r, c| {
            let (a, i) = (r / di, r % di);
            let (b, j) = (c / di, c % di);
            self.mat[(a * d_o + b, i * di + j)]
        })
    }
}

/// If `choi` is rank one and PSD within `rank_gap`, returns `K` (phase
/// fixed) with `choi = vec(K) vec(K)^dag`.
fn rank_one_factor(choi: &ComplexMatrix, d_in: usize, d_out: usize, tol: &Tolerances) -> std::result::Result<ComplexMatrix, String> {
    let scale = choi.frobenius_norm().max(1.0);
    let herm = choi.hermiticity_defect();
    if herm > tol.hermiticity_tol * scale {
        return Err(format!("Choi matrix is not Hermitian (defect {herm:e})"));
    }
    let eig = hermitian_eig_tol(choi, f64::INFINITY).map_err(|e| e.to_string())?;
    let top = eig.max();
    if top <= 0.0 {
        return Err("Choi matrix has no positive eigenvalue".into());
    }
    let second = eig.values.get(1).copied().unwrap_or(0.0);
    if second > tol.rank_gap * top || eig.min() < -tol.rank_gap * top {
        let worst = second.max(-eig.min());
        return Err(format!("Choi matrix is not rank one (eigenvalue ratio {:e})", worst / top));
    }
    let k = ComplexMatrix::unvectorize(&eig.vectors.col(0), d_out, d_in).scale(top.sqrt());
    Ok(k.phase_fixed())
}

fn unitary_from_rank_one(s: &Superoperator, tol: &Tolerances) -> std::result::Result<ComplexMatrix, String> {
    let u = rank_one_factor(&s.choi(), s.d_in, s.d_out, tol)?;
    let defect = u.unitarity_defect();
    if defect > 1e-8 {
        return Err(format!("extracted operator is not unitary (defect {defect:e})"));
    }
    Ok(u)
}

/// Identifies a state-space symmetry from its superoperator: unitary if the
/// Choi matrix is rank one, antiunitary if that holds after precomposing
/// with the transpose.
pub fn classify_state_symmetry(s: &Superoperator) -> Result<StateSymmetry> {
    classify_state_symmetry_with(s, &Tolerances::DEFAULT)
}

pub fn classify_state_symmetry_with(s: &Superoperator, tol: &Tolerances) -> Result<StateSymmetry> {
    if s.d_in != s.d_out {
        return Err(Error::dims(format!(
            "state symmetry must act on one space, got {} -> {}",
            s.d_in, s.d_out
        )));
    }
    let unitary = match unitary_from_rank_one(s, tol) {
        Ok(u) => return Ok(StateSymmetry { kind: SymmetryKind::Unitary, u }),
        Err(e) => e,
    };
    let composed = s.after(&Superoperator::transpose(s.d_in));
    match unitary_from_rank_one(&composed, tol) {
        Ok(u) => Ok(StateSymmetry {
            kind: SymmetryKind::Antiunitary,
            u,
        }),
        Err(anti) => Err(Error::not_symmetry(
            "state-symmetry",
            format!("unitary branch: {unitary}; antiunitary branch: {anti}"),
        )),
    }
}

/// Linear map on Choi matrices, from maps `d_in -> d_out` to maps
/// `k_in -> k_out`, stored as a matrix on row-major vectorized Choi
/// matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperMap {
    pub in_dims: (usize, usize),
    pub out_dims: (usize, usize),
    pub op: ComplexMatrix,
}

impl SuperMap {
    pub fn new(in_dims: (usize, usize), out_dims: (usize, usize), op: ComplexMatrix) -> Result<Self> {
        let n_in = in_dims.0 * in_dims.1;
        let n_out = out_dims.0 * out_dims.1;
        if n_in == 0 || n_out == 0 || op.rows() != n_out * n_out || op.cols() != n_in * n_in {
            return Err(Error::dims(format!(
                "supermap matrix is {}x{}, expected {}x{} for {:?} -> {:?}",
                op.rows(),
                op.cols(),
                n_out * n_out,
                n_in * n_in,
                in_dims,
                out_dims
            )));
        }
        Ok(SuperMap { in_dims, out_dims, op })
    }

    /// Supermap acting on Choi matrices as `f`, which must be linear.
    pub fn from_choi_fn(
        in_dims: (usize, usize),
        out_dims: (usize, usize),
        f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Self {
        let s = Superoperator::from_fn(in_dims.0 * in_dims.1, out_dims.0 * out_dims.1, f);
        SuperMap {
            in_dims,
            out_dims,
            op: s.mat,
        }
    }

    pub fn identity(d_in: usize, d_out: usize) -> Self {
        let n = d_in * d_out;
        SuperMap {
            in_dims: (d_in, d_out),
            out_dims: (d_in, d_out),
            op: ComplexMatrix::identity(n * n),
        }
    }

    /// `Q ↦ τ ∘ Q ∘ τ`, i.e. transposition of the Choi matrix.
    pub fn double_transpose(d_in: usize, d_out: usize) -> Self {
        Self::from_choi_fn((d_in, d_out), (d_in, d_out), |c| c.transpose())
    }

    /// `Q ↦ Q^dag / d_in`.
    pub fn weak_adjoint(d_in: usize, d_out: usize) -> Self {
        let s = swap_operator(d_out, d_in);
        let st = s.transpose();
        let scale = 1.0 / d_in as f64;
        Self::from_choi_fn((d_in, d_out), (d_out, d_in), |c| s.matmul(c).matmul(&st).transpose().scale(scale))
    }

    pub fn apply_choi(&self, choi: &ComplexMatrix) -> ComplexMatrix {
        self.as_superoperator().apply(choi)
    }

    /// Image of a CP map, validated as CP.
    pub fn apply(&self, q: &CpMap) -> Result<CpMap> {
        if (q.d_in(), q.d_out()) != self.in_dims {
            return Err(Error::dims(format!(
                "map is {} -> {}, supermap expects {:?}",
                q.d_in(),
                q.d_out(),
                self.in_dims
            )));
        }
        CpMap::new(self.out_dims.0, self.out_dims.1, self.apply_choi(q.choi()))
    }

    /// The supermap viewed as a map on `L(H_out ⊗ H_in)`.
    pub fn as_superoperator(&self) -> Superoperator {
        Superoperator {
            d_in: self.in_dims.0 * self.in_dims.1,
            d_out: self.out_dims.0 * self.out_dims.1,
            mat: self.op.clone(),
        }
    }
}

/// `Q ↦ S2 ∘ Q ∘ S1`. Both symmetries must be of the same kind.
pub fn build_operation_symmetry(s1: &StateSymmetry, s2: &StateSymmetry) -> Result<SuperMap> {
    if s1.kind != s2.kind {
        return Err(Error::MixedKinds);
    }
    Ok(build_unchecked(s1, s2))
}

/// The composition supermap for any pair, including the mixed-kind pairs
/// that are not symmetries.
pub fn composition_supermap(s1: &StateSymmetry, s2: &StateSymmetry) -> SuperMap {
    build_unchecked(s1, s2)
}

fn build_unchecked(s1: &StateSymmetry, s2: &StateSymmetry) -> SuperMap {
    let (d_in, d_out) = (s1.dim(), s2.dim());
    SuperMap::from_choi_fn((d_in, d_out), (d_in, d_out), |c| {
        choi_from_fn(d_in, d_out, |e| {
            s2.apply_matrix(&apply_choi(c, d_in, d_out, &s1.apply_matrix(e)))
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub s1: StateSymmetry,
    pub s2: StateSymmetry,
    /// `‖build(s1, s2) - s‖_F`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPreservationReport {
    pub samples: usize,
    pub passed: usize,
    /// Largest trace-preservation defect among the images.
    pub worst_defect: f64,
}

impl ChannelPreservationReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.samples
    }
}

/// Applies `s` to `n_samples` random channels and checks that each image is
/// trace-preserving.
pub fn verify_channel_preservation(s: &SuperMap, n_samples: usize, seed: u64) -> ChannelPreservationReport {
    let tol = Tolerances::DEFAULT;
    let mut rng = seeded_rng(seed);
    let (d_in, d_out) = s.in_dims;
    let (k_in, k_out) = s.out_dims;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for n in 0..n_samples {
        let rank = 1 + n % (d_in * d_out);
        let c = random_cptp_rng(d_in, d_out, rank, &mut rng);
        let img = s.apply_choi(c.choi());
        let defect = classify_choi(&img, k_in, k_out, &tol).tp_defect;
        worst = worst.max(defect);
        if defect <= tol.equality_tol {
            passed += 1;
        }
    }
    ChannelPreservationReport {
        samples: n_samples,
        passed,
        worst_defect: worst,
    }
}

/// Recovers `(S1, S2)` with `s(Q) = S2 ∘ Q ∘ S1`.
///
/// Stages, each reported by name on failure: `channel-preservation`,
/// `tensor-space-symmetry` (the supermap itself must be a state symmetry of
/// `H_out ⊗ H_in`), `dimension-law`, `input-symmetry`, `output-symmetry`,
/// `product-verification`.
pub fn decompose_operation_symmetry(s: &SuperMap) -> Result<Decomposition> {
    decompose_operation_symmetry_with(s, &Tolerances::DEFAULT)
}

pub fn decompose_operation_symmetry_with(s: &SuperMap, tol: &Tolerances) -> Result<Decomposition> {
    let (d_in, d_out) = s.in_dims;
    let (k_in, k_out) = s.out_dims;
    if d_in * d_out != k_in * k_out {
        return Err(Error::dims(format!(
            "total dimensions differ: {d_in}*{d_out} vs {k_in}*{k_out}"
        )));
    }
    let report = verify_channel_preservation(s, 8, 0);
    if !report.all_passed() {
        return Err(Error::not_symmetry(
            "channel-preservation",
            format!(
                "{} of {} random channels map to non-channels (worst trace defect {:e})",
                report.samples - report.passed,
                report.samples,
                report.worst_defect
            ),
        ));
    }
    let whole = classify_state_symmetry_with(&s.as_superoperator(), tol).map_err(|e| match e {
        Error::NotASymmetry { detail, .. } => Error::not_symmetry("tensor-space-symmetry", detail),
        other => other,
    })?;
    if k_in != d_in || k_out != d_out {
        return Err(Error::not_symmetry(
            "dimension-law",
            format!("input dims {:?} map to {:?}", s.in_dims, s.out_dims),
        ));
    }
    let n = d_in * d_out;
    let unitary_part = match whole.kind {
        SymmetryKind::Unitary => s.as_superoperator(),
        SymmetryKind::Antiunitary => s.as_superoperator().after(&Superoperator::transpose(n)),
    };

    // J(rho) = Tr_out[S(I ⊗ rho)] / d_out
    let id_out = ComplexMatrix::identity(d_out);
    let j = Superoperator::from_fn(d_in, d_in, |x| {
        let img = unitary_part.apply(&crate::matrix::kron(&id_out, x));
        partial_trace(&img, d_out, d_in, Keep::B).expect("dims").scale(1.0 / d_out as f64)
    });
    let j_sym = classify_state_symmetry_with(&j, tol)
        .map_err(|e| Error::not_symmetry("input-symmetry", e.to_string()))?;
    if j_sym.kind != SymmetryKind::Unitary {
        return Err(Error::not_symmetry("input-symmetry", "input factor is antiunitary"));
    }
    // W^T(rho) = Tr_in[S(rho ⊗ |0><0|)]
    let p0 = ComplexMatrix::unit(d_in, 0, 0);
    let w = Superoperator::from_fn(d_out, d_out, |x| {
        let img = unitary_part.apply(&crate::matrix::kron(x, &p0));
        partial_trace(&img, d_out, d_in, Keep::A).expect("dims")
    });
    let w_sym = classify_state_symmetry_with(&w, tol)
        .map_err(|e| Error::not_symmetry("output-symmetry", e.to_string()))?;
    if w_sym.kind != SymmetryKind::Unitary {
        return Err(Error::not_symmetry("output-symmetry", "output factor is antiunitary"));
    }
    let a = j_sym.u.transpose();
    let (s1, s2) = match whole.kind {
        SymmetryKind::Unitary => (
            StateSymmetry { kind: SymmetryKind::Unitary, u: a.phase_fixed() },
            StateSymmetry { kind: SymmetryKind::Unitary, u: w_sym.u.phase_fixed() },
        ),
        SymmetryKind::Antiunitary => (
            StateSymmetry { kind: SymmetryKind::Antiunitary, u: a.conj().phase_fixed() },
            StateSymmetry { kind: SymmetryKind::Antiunitary, u: w_sym.u.phase_fixed() },
        ),
    };
    let rebuilt = build_unchecked(&s1, &s2);
    let residual = rebuilt.op.distance(&s.op);
    if residual > 1e-7 {
        return Err(Error::not_symmetry(
            "product-verification",
            format!("rebuilt supermap differs by {residual:e}"),
        ));
    }
    Ok(Decomposition { s1, s2, residual })
}

/// Distance between unitaries up to a global phase,
/// `min_γ ‖a - e^{iγ} b‖_F`.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let t = b.hs_inner(a);
    let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
    a.distance(&b.scale_c(phase))
}
