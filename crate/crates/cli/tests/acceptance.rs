//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! worst case and runtime. Runs without the libtest harness so the lines
//! are always printed; exits non-zero if any criterion fails.
//!
//! Set `EVOSYM_BLESS=1` to rewrite the golden CLI reports instead of
//! comparing against them.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use evosym::matrix::{
    haar_unitary, hermitian_eig, is_psd, kron, DetRng, partial_trace, random_vector, seeded_rng, swap_operator,
    ComplexMatrix, Keep, C64,
};
use evosym::operations::{
    adjoint_map, choi_from_fn, choi_of_kraus_ops, compose, discard_and_prepare_zero, random_cp_map_rng,
    random_cptp_rng, transpose_map, uniform_pauli_channel, unitary_channel, Instrument,
};
use evosym::reversal::{
    crooks_reversal, double_transpose, petz_reversal, petz_reversal_transpose, theta_prime_scaled,
    theta_scaled,
};
use evosym::states::{fidelity, maximally_mixed, random_density_rng};
use evosym::symmetry::{
    apply_state_symmetry, build_operation_symmetry, composition_supermap, decompose_operation_symmetry,
    nogo_residual, phase_distance, NogoTarget, StateSymmetry, SymmetryKind,
};
use evosym::tsqt::{
    luders_instrument, max_prep_probability, max_prep_probability_state, povm_to_ts_operations,
    realize_via_dilation, validate_ts_instrument, von_neumann_instrument,
};
use evosym::{Error, QuantumOperation, Tolerances};
use evosym_cli::report::numeric_mismatches;
use evosym_cli::spec_file;
use serde_json::{json, Value};

const TOL: Tolerances = Tolerances::DEFAULT;

/// Id, title, optional runtime budget and check.
type Criterion = (u8, &'static str, Option<Duration>, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn max_abs(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root")
}

fn random_bistochastic(d: usize, terms: usize, rng: &mut DetRng) -> QuantumOperation {
    let mut choi = ComplexMatrix::zeros(d * d, d * d);
    for _ in 0..terms {
        choi = &choi + &unitary_channel(&haar_unitary(d, rng)).choi().scale(1.0 / terms as f64);
    }
    QuantumOperation::new(d, d, choi).expect("mixture of unitary channels")
}

/// Kraus operators applied one by one, without any Choi matrix.
fn kraus_apply(ops: &[ComplexMatrix], x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(ops[0].rows(), ops[0].rows());
    for k in ops {
        out = &out + &k.matmul(x).matmul(&k.dagger());
    }
    out
}

fn c1_choi_kraus() -> Verdict {
    let mut rng = seeded_rng(101);
    let (mut round, mut via) = (0.0f64, 0.0f64);
    for n in 0..500 {
        let (d_in, d_out) = (1 + n % 3, 1 + (n / 3) % 3);
        let m = random_cp_map_rng(d_in, d_out, 1 + n % 4, &mut rng);
        let ops = m.kraus_operators();
        round = round.max(max_abs(&choi_of_kraus_ops(d_in, d_out, &ops), m.choi()));
        let rho = random_density_rng(d_in, &mut rng);
        via = via.max(max_abs(&m.apply_matrix(rho.matrix()), &kraus_apply(&ops, rho.matrix())));
    }
    verdict(
        round <= 1e-8 && via <= 1e-9,
        format!("worst round trip {round:.2e} (<= 1e-8), worst apply gap {via:.2e} (<= 1e-9)"),
    )
}

fn c2_swap_identities() -> Verdict {
    let mut rng = seeded_rng(102);
    let (mut worst_t, mut worst_a) = (0.0f64, 0.0f64);
    for n in 0..200 {
        let (d_in, d_out) = (1 + n % 3, 1 + (n / 3) % 3);
        let m = random_cp_map_rng(d_in, d_out, 2, &mut rng);
        let ops = m.kraus_operators();
        let s = swap_operator(d_out, d_in);
        let swapped = s.matmul(m.choi()).matmul(&s.transpose());
        // Q^T(X) = Σ K^T X K*, Q^dag(Y) = Σ K^dag Y K, built directly from Kraus operators
        let t_direct = choi_from_fn(d_out, d_in, |x| {
            ops.iter().fold(ComplexMatrix::zeros(d_in, d_in), |acc, k| {
                &acc + &k.transpose().matmul(x).matmul(&k.conj())
            })
        });
        let a_direct = choi_from_fn(d_out, d_in, |y| {
            ops.iter().fold(ComplexMatrix::zeros(d_in, d_in), |acc, k| {
                &acc + &k.dagger().matmul(y).matmul(k)
            })
        });
        let t_lib = transpose_map(&m).expect("CP");
        let a_lib = adjoint_map(&m).expect("CP");
        worst_t = worst_t
            .max(max_abs(&t_direct, &swapped))
            .max(max_abs(t_lib.choi(), &t_direct));
        worst_a = worst_a
            .max(max_abs(&a_direct, &swapped.transpose()))
            .max(max_abs(a_lib.choi(), &a_direct));
    }
    verdict(
        worst_t <= 1e-9 && worst_a <= 1e-9,
        format!("transpose {worst_t:.2e}, adjoint {worst_a:.2e} (<= 1e-9)"),
    )
}

fn c3_double_transpose() -> Verdict {
    let mut rng = seeded_rng(103);
    let mut worst = 0.0f64;
    for n in 0..200 {
        let (d_in, d_out) = (1 + n % 3, 1 + (n / 3) % 3);
        let q = evosym::operations::random_operation_rng(d_in, d_out, 1 + n % 3, &mut rng);
        let ops = q.kraus_operators();
        // τ ∘ Q ∘ τ applied directly: X ↦ (Σ K X^T K^dag)^T
        let direct = choi_from_fn(d_in, d_out, |x| kraus_apply(&ops, &x.transpose()).transpose());
        let lib = double_transpose(&q);
        worst = worst
            .max(max_abs(lib.choi(), &q.choi().transpose()))
            .max(max_abs(&direct, &q.choi().transpose()));
    }
    // The bare transpose map on a qubit has Choi matrix SWAP.
    let bare = choi_from_fn(2, 2, |x| x.transpose());
    let bare_psd = is_psd(&bare, TOL.psd_tol).expect("Hermitian");
    let min = hermitian_eig(&bare).expect("Hermitian").min();
    verdict(
        worst <= 1e-12 && !bare_psd,
        format!("worst {worst:.2e} (<= 1e-12); bare transpose min Choi eigenvalue {min}"),
    )
}

fn c4_c0_fixed_point() -> Verdict {
    let c0_lib = uniform_pauli_channel();
    let text = std::fs::read_to_string(root().join("fixtures/c0.json")).expect("fixture c0.json");
    let parsed = spec_file::parse_channel("c0.json", &text).expect("c0 parses");
    let c0_file = QuantumOperation::new(2, 2, parsed.choi()).expect("c0 is a quantum operation");
    let mut worst = max_abs(c0_file.choi(), c0_lib.choi());
    for c0 in [&c0_lib, &c0_file] {
        let t = theta_scaled(c0).expect("C0 is TS");
        let tp = theta_prime_scaled(c0).expect("C0 is TS");
        worst = worst.max(max_abs(t.choi(), c0.choi())).max(max_abs(tp.choi(), c0.choi()));
    }
    verdict(worst <= 1e-9, format!("worst {worst:.2e} (<= 1e-9)"))
}

fn c5_decomposition() -> Verdict {
    let mut rng = seeded_rng(105);
    let (mut worst, mut kinds_ok, mut cycles) = (0.0f64, true, 0);
    for (d_in, d_out) in [(2, 2), (2, 3), (3, 2)] {
        for n in 0..100 {
            let kind = if n % 2 == 0 {
                SymmetryKind::Unitary
            } else {
                SymmetryKind::Antiunitary
            };
            let a = haar_unitary(d_in, &mut rng);
            let b = haar_unitary(d_out, &mut rng);
            let s1 = StateSymmetry::new(kind, a.clone()).expect("unitary");
            let s2 = StateSymmetry::new(kind, b.clone()).expect("unitary");
            let s = build_operation_symmetry(&s1, &s2).expect("same kind");
            match decompose_operation_symmetry(&s) {
                Ok(d) => {
                    kinds_ok &= d.s1.kind == kind && d.s2.kind == kind;
                    worst = worst.max(phase_distance(&d.s1.u, &a)).max(phase_distance(&d.s2.u, &b));
                }
                Err(_) => kinds_ok = false,
            }
            cycles += 1;
        }
    }
    let mut rejected = 0;
    for n in 0..20 {
        let (d_in, d_out) = [(2, 2), (2, 3), (3, 2)][n % 3];
        let (k1, k2) = if n % 2 == 0 {
            (SymmetryKind::Unitary, SymmetryKind::Antiunitary)
        } else {
            (SymmetryKind::Antiunitary, SymmetryKind::Unitary)
        };
        let s1 = StateSymmetry::new(k1, haar_unitary(d_in, &mut rng)).expect("unitary");
        let s2 = StateSymmetry::new(k2, haar_unitary(d_out, &mut rng)).expect("unitary");
        let built = build_operation_symmetry(&s1, &s2);
        let fabricated = composition_supermap(&s1, &s2);
        if matches!(built, Err(Error::MixedKinds)) && decompose_operation_symmetry(&fabricated).is_err() {
            rejected += 1;
        }
    }
    verdict(
        kinds_ok && worst <= 1e-7 && rejected == 20,
        format!("{cycles} cycles, kinds exact: {kinds_ok}, worst phase distance {worst:.2e} (<= 1e-7); mixed kinds rejected {rejected}/20"),
    )
}

fn read_floor() -> (f64, f64) {
    let text = std::fs::read_to_string(root().join("fixtures/nogo_floor.json")).expect("fixtures/nogo_floor.json");
    let v: Value = serde_json::from_str(&text).expect("floor file is JSON");
    let get = |k: &str| v[k].as_str().and_then(|s| s.parse::<f64>().ok()).expect("numeric string");
    (get("floor"), get("control_max"))
}

fn c6_nogo() -> Verdict {
    let adj = adjoint_map(&discard_and_prepare_zero()).expect("CP");
    let cls = adj.classify(&TOL);
    let witness = !cls.trace_nonincreasing && (cls.tni_excess - 1.0).abs() <= 1e-12;
    let (floor, control_max) = read_floor();
    let mut lowest = f64::INFINITY;
    let mut observed = Vec::new();
    for target in [NogoTarget::Dagger, NogoTarget::Transpose] {
        for seed in 0..3 {
            let r = nogo_residual(2, target, 200, 20, seed);
            lowest = lowest.min(r.residual);
            observed.push(format!("{}/{seed}={:.4}", target.name(), r.residual));
        }
    }
    let control = nogo_residual(2, NogoTarget::Identity, 200, 20, 0).residual;
    verdict(
        witness && lowest >= floor && control <= control_max,
        format!(
            "adjoint tni excess {:.3} (tni={}); residuals [{}] >= floor {floor}; control {control:.2e} (<= {control_max:e})",
            cls.tni_excess,
            cls.trace_nonincreasing,
            observed.join(", ")
        ),
    )
}

fn c7_monotonicity() -> Verdict {
    let mut rng = seeded_rng(107);
    let (mut worst_drop, mut worst_sym) = (0.0f64, 0.0f64);
    for n in 0..300 {
        let (d_in, d_out) = (1 + n % 3, 1 + (n / 3) % 3);
        let j = random_cptp_rng(d_in, d_out, 1 + n % 3, &mut rng);
        let rho = random_density_rng(d_in, &mut rng);
        let sigma = random_density_rng(d_in, &mut rng);
        let before = fidelity(&rho, &sigma).expect("states");
        let after = fidelity(
            &evosym::operations::apply(&j, &rho).expect("apply"),
            &evosym::operations::apply(&j, &sigma).expect("apply"),
        )
        .expect("states");
        worst_drop = worst_drop.max(before - after);
        let kind = if n % 2 == 0 {
            SymmetryKind::Unitary
        } else {
            SymmetryKind::Antiunitary
        };
        let s = StateSymmetry::new(kind, haar_unitary(d_in, &mut rng)).expect("unitary");
        let f = fidelity(
            &apply_state_symmetry(&s, &rho).expect("apply"),
            &apply_state_symmetry(&s, &sigma).expect("apply"),
        )
        .expect("states");
        worst_sym = worst_sym.max((f - before).abs());
    }
    verdict(
        worst_drop <= 1e-9 && worst_sym <= 1e-9,
        format!("largest fidelity drop {worst_drop:.2e} (<= 1e-9); symmetry equality gap {worst_sym:.2e} (<= 1e-9)"),
    )
}

fn projector(u: &ComplexMatrix, cols: std::ops::Range<usize>) -> ComplexMatrix {
    let d = u.rows();
    let mut p = ComplexMatrix::zeros(d, d);
    for c in cols {
        p = &p + &ComplexMatrix::outer(&u.col(c));
    }
    p
}

fn c8_ts_suite() -> Verdict {
    let mut rng = seeded_rng(108);
    let mut failures: Vec<String> = Vec::new();
    let mut check = |label: String, inst: Result<Instrument, Error>| match inst
        .and_then(|i| validate_ts_instrument(&i, &TOL))
    {
        Ok(r) if r.valid => {}
        Ok(_) => failures.push(format!("{label} invalid")),
        Err(e) => failures.push(format!("{label}: {e}")),
    };
    for d in [2, 3, 4] {
        let u = haar_unitary(d, &mut rng);
        let basis: Vec<Vec<C64>> = (0..d).map(|c| u.col(c)).collect();
        check(format!("von Neumann d={d}"), von_neumann_instrument(&basis));
    }
    for (d, split) in [(3, 2), (4, 2), (4, 1)] {
        let u = haar_unitary(d, &mut rng);
        let projs = [projector(&u, 0..split), projector(&u, split..d)];
        check(format!("Lüders d={d}"), luders_instrument(&projs));
        // measure, rotate, measure again
        let luders = luders_instrument(&projs).expect("valid projectors");
        let v = unitary_channel(&haar_unitary(d, &mut rng));
        let mut seq = Vec::new();
        for first in luders.branches() {
            for second in luders.branches() {
                let mid = compose(&v, first).expect("dims");
                seq.push(compose(second, &mid).expect("dims"));
            }
        }
        check(format!("Lüders-U-Lüders d={d}"), Instrument::new(d, d, seq));
    }
    for d in [2, 3, 4] {
        let raw: Vec<ComplexMatrix> = (0..3)
            .map(|_| {
                let g = evosym::matrix::ginibre(d, d, &mut rng);
                g.matmul(&g.dagger())
            })
            .collect();
        let total = raw.iter().fold(ComplexMatrix::zeros(d, d), |a, p| &a + p);
        let inv_sqrt = hermitian_eig(&total).expect("PSD").map_spectrum(|l| 1.0 / l.sqrt());
        let effects: Vec<ComplexMatrix> = raw.iter().map(|p| inv_sqrt.matmul(p).matmul(&inv_sqrt)).collect();
        let ops = povm_to_ts_operations(&effects, &TOL);
        check(format!("POVM demolition d={d}"), ops.and_then(|o| Instrument::new(d, 1, o)));
    }
    let mut prep_gap = 0.0f64;
    for d in 2..=5 {
        let psi = random_vector(d, &mut rng);
        let p = max_prep_probability(&psi, d).expect("unit vector");
        if p != 1.0 / d as f64 {
            failures.push(format!("max_prep_probability d={d} gave {p}"));
        }
        let rho = ComplexMatrix::outer(&psi);
        prep_gap = prep_gap.max((max_prep_probability_state(&rho).expect("state") - p).abs());
        // p |psi><psi| <= I/d holds at p = 1/d and fails just above it
        let slack = |q: f64| hermitian_eig(&(&ComplexMatrix::identity(d).scale(1.0 / d as f64) - &rho.scale(q))).expect("Hermitian").min();
        if slack(p) < -1e-12 || slack(p + 1e-6) > -1e-9 {
            failures.push(format!("1/d is not the largest preparation probability at d={d}"));
        }
    }
    let mut disagreements = 0;
    for n in 0..200 {
        let d = 2 + n % 2;
        let c = if n % 2 == 0 {
            random_bistochastic(d, 1 + n % 4, &mut rng)
        } else {
            random_cptp_rng(d, d, 1 + n % 3, &mut rng)
        };
        let cls = c.classify(&TOL);
        if cls.ts.is_ts_channel != cls.bistochastic {
            disagreements += 1;
        }
    }
    let passed = failures.is_empty() && prep_gap <= 1e-12 && disagreements == 0;
    verdict(
        passed,
        format!(
            "instrument/prep failures [{}]; 1/d state-route gap {prep_gap:.2e}; TS vs bistochastic disagreements {disagreements}/200",
            failures.join("; ")
        ),
    )
}

fn c9_dilation() -> Verdict {
    let mut rng = seeded_rng(109);
    let (mut worst_choi, mut worst_state) = (0.0f64, 0.0f64);
    for n in 0..50 {
        let q = evosym::operations::random_operation_rng(2, 2, 1 + n % 4, &mut rng);
        let dil = realize_via_dilation(&q);
        worst_choi = worst_choi.max(dil.realized_choi().distance(q.choi()));
        // apply the stated formula to a state directly
        let rho = random_density_rng(2, &mut rng);
        let big = kron(rho.matrix(), &ComplexMatrix::outer(&dil.psi0));
        let evolved = dil.u.matmul(&big).matmul(&dil.u.dagger());
        let post = kron(&ComplexMatrix::identity(dil.d_out), &dil.p_effect).matmul(&evolved);
        let out = partial_trace(&post, dil.d_out, dil.aux_out, Keep::A).expect("shapes");
        worst_state = worst_state.max(max_abs(&out, &q.apply_matrix(rho.matrix())));
        worst_state = worst_state.max(dil.u.unitarity_defect());
    }
    verdict(
        worst_choi <= 1e-7 && worst_state <= 1e-7,
        format!("worst Choi error {worst_choi:.2e}, worst state-route error {worst_state:.2e} (<= 1e-7)"),
    )
}

fn c10_petz_crooks() -> Verdict {
    let mut rng = seeded_rng(110);
    let (mut crooks, mut petz) = (0.0f64, 0.0f64);
    for n in 0..100 {
        let (d_in, d_out) = (1 + n % 3, 1 + (n / 3) % 3);
        let c = random_cptp_rng(d_in, d_out, 1 + n % 3, &mut rng);
        let rho0 = random_density_rng(d_in, &mut rng);
        let r = crooks_reversal(&c, &rho0).expect("full-rank reference");
        crooks = crooks.max(max_abs(&r.apply_matrix(&c.apply_matrix(rho0.matrix())), rho0.matrix()));
        // ω = I/d is a fixed pair only when C(I/d) = I/d, so the theta
        // comparison uses bistochastic channels.
        let d = 2 + n % 2;
        let b = random_bistochastic(d, 1 + n % 4, &mut rng);
        let w = maximally_mixed(d);
        let p = petz_reversal(&b, &w, &w).expect("full rank");
        let pt = petz_reversal_transpose(&b, &w, &w).expect("full rank");
        petz = petz
            .max(max_abs(p.choi(), theta_scaled(&b).expect("TS").choi()))
            .max(max_abs(pt.choi(), theta_prime_scaled(&b).expect("TS").choi()));
    }
    verdict(
        crooks <= 1e-7 && petz <= 1e-9,
        format!("Crooks recovery {crooks:.2e} (<= 1e-7); Petz vs theta {petz:.2e} (<= 1e-9)"),
    )
}

struct Case {
    name: &'static str,
    args: Vec<String>,
    /// `--out` file compared against a golden copy.
    out: Option<&'static str>,
}

fn case(name: &'static str, args: &[&str]) -> Case {
    Case {
        name,
        args: args.iter().map(|s| s.to_string()).collect(),
        out: None,
    }
}

fn golden_cases(scratch: &str) -> Vec<Case> {
    let out = |file: &str| format!("{scratch}/{file}");
    let mut cases = vec![
        case("classify_identity", &["classify", "fixtures/identity.json", "--json"]),
        case("classify_c0", &["classify", "fixtures/c0.json", "--json"]),
        case("classify_discard_prepare", &["classify", "fixtures/discard_prepare.json", "--json"]),
        case(
            "classify_adjoint_discard_prepare",
            &["classify", "fixtures/adjoint_discard_prepare.json", "--json"],
        ),
        case("classify_transpose", &["classify", "fixtures/transpose.json", "--json"]),
        case("classify_malformed_dims", &["classify", "fixtures/malformed_dims.json", "--json"]),
        case(
            "reverse_theta_discard_prepare",
            &["reverse", "fixtures/discard_prepare.json", "--transform", "theta", "--json"],
        ),
        case("decompose_identity", &["decompose", "fixtures/supermap_identity.json", "--json"]),
        case(
            "decompose_double_transpose",
            &["decompose", "fixtures/supermap_double_transpose.json", "--json"],
        ),
        case("decompose_weak_adjoint", &["decompose", "fixtures/supermap_weak_adjoint.json", "--json"]),
        case(
            "nogo_control",
            &["nogo", "--target", "identity", "--samples", "20", "--restarts", "5", "--json"],
        ),
        case(
            "simulate_z_plus",
            &["simulate", "fixtures/instrument_z.json", "fixtures/state_plus.json", "--json"],
        ),
        case(
            "simulate_z_zero",
            &["simulate", "fixtures/instrument_z.json", "fixtures/state_zero.json", "--json"],
        ),
        case(
            "simulate_luders_d3",
            &["simulate", "fixtures/instrument_luders_d3.json", "fixtures/state_d3.json", "--json"],
        ),
        case(
            "simulate_ts_invalid",
            &[
                "simulate",
                "fixtures/instrument_ts_invalid.json",
                "fixtures/state_plus.json",
                "--require-ts",
                "--json",
            ],
        ),
    ];
    let reverse_cases: [(&'static str, &'static str, &[&str]); 6] = [
        ("reverse_theta_c0", "theta", &[]),
        ("reverse_theta_prime_c0", "theta-prime", &[]),
        ("reverse_double_transpose_c0", "double-transpose", &[]),
        ("reverse_weak_adjoint_c0", "weak-adjoint", &[]),
        (
            "reverse_petz_c0",
            "petz",
            &["--omega-a", "fixtures/state_mixed.json", "--omega-b", "fixtures/state_mixed.json"],
        ),
        ("reverse_crooks_c0", "crooks", &["--rho0", "fixtures/state_thermal.json"]),
    ];
    for (name, transform, extra) in reverse_cases {
        let mut args: Vec<String> = ["reverse", "fixtures/c0.json", "--transform", transform]
            .iter()
            .map(|s| s.to_string())
            .collect();
        args.extend(extra.iter().map(|s| s.to_string()));
        args.extend(["--out".to_string(), out(&format!("{name}.json")), "--json".to_string()]);
        cases.push(Case {
            name,
            args,
            out: Some(name),
        });
    }
    cases
}

fn run_cli(args: &[String]) -> (i32, Value) {
    let output = Command::new(env!("CARGO_BIN_EXE_evosym"))
        .args(args)
        .current_dir(root())
        .env_remove("EVOSYM_EQUALITY_TOL")
        .output()
        .expect("evosym runs");
    let report = serde_json::from_slice(&output.stdout).unwrap_or(Value::Null);
    (output.status.code().unwrap_or(-1), report)
}

fn read_json(path: &Path) -> Option<Value> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

fn born_within_3_sigma(report: &Value, shots: f64) -> bool {
    report["outputs"]["outcomes"].as_array().is_some_and(|outs| {
        outs.iter().all(|o| {
            let p: f64 = o["born_probability"].as_str().and_then(|s| s.parse().ok()).unwrap_or(f64::NAN);
            let count = o["count"].as_f64().unwrap_or(f64::NAN);
            (count - shots * p).abs() <= 3.0 * (shots * p * (1.0 - p)).sqrt() + 1e-9
        })
    })
}

fn c11_cli_contract() -> Verdict {
    let bless = std::env::var("EVOSYM_BLESS").is_ok_and(|v| v == "1");
    let golden_dir = root().join("fixtures/golden");
    let scratch = tempfile::tempdir().expect("temp dir");
    let scratch_path = scratch.path().to_string_lossy().into_owned();
    let mut problems = Vec::new();
    let cases = golden_cases(&scratch_path);
    for c in &cases {
        let (code, report) = run_cli(&c.args);
        let produced = json!({
            "exit_code": code,
            "report": report,
            "output_file": c.out.map(|n| read_json(&scratch.path().join(format!("{n}.json"))).unwrap_or(Value::Null)),
        });
        let path = golden_dir.join(format!("{}.json", c.name));
        if bless {
            std::fs::create_dir_all(&golden_dir).expect("golden dir");
            std::fs::write(&path, spec_file::to_pretty(&produced)).expect("write golden");
            continue;
        }
        match read_json(&path) {
            None => problems.push(format!("{}: missing golden (run with EVOSYM_BLESS=1)", c.name)),
            Some(expected) => {
                let diffs = numeric_mismatches(&expected, &produced, 1e-9, &["out"]);
                if !diffs.is_empty() {
                    problems.push(format!("{}: {}", c.name, diffs.join("; ")));
                }
            }
        }
    }
    // theta fixes C0, and the double transpose applied twice is the identity
    let c0 = read_json(&root().join("fixtures/c0.json"));
    let c0_choi = |v: &Value| {
        spec_file::parse_channel("c0", &v.to_string())
            .map(|p| p.choi())
            .ok()
    };
    let theta_out = read_json(&scratch.path().join("reverse_theta_c0.json"));
    let first = scratch.path().join("reverse_double_transpose_c0.json").to_string_lossy().into_owned();
    let twice = scratch.path().join("twice.json").to_string_lossy().into_owned();
    let (code, _) = run_cli(&[
        "reverse".into(),
        first,
        "--transform".into(),
        "double-transpose".into(),
        "--out".into(),
        twice.clone(),
        "--json".into(),
    ]);
    let twice_out = read_json(Path::new(&twice));
    let reference = c0.as_ref().and_then(c0_choi);
    for (label, v) in [("theta(C0)", theta_out), ("double transpose twice", twice_out)] {
        match (v.as_ref().and_then(c0_choi), &reference) {
            (Some(a), Some(b)) if max_abs(&a, b) <= 1e-9 => {}
            _ => problems.push(format!("{label} does not reproduce C0")),
        }
    }
    if code != 0 {
        problems.push(format!("second double transpose exited {code}"));
    }
    // Born-rule statistics at 10^4 shots
    for c in ["simulate_z_plus", "simulate_luders_d3"] {
        let args = cases.iter().find(|x| x.name == c).expect("case").args.clone();
        let (_, report) = run_cli(&args);
        if !born_within_3_sigma(&report, 1e4) {
            problems.push(format!("{c}: histogram outside 3 sigma"));
        }
    }
    if bless {
        return verdict(problems.is_empty(), format!("blessed {} golden reports", cases.len()));
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} golden reports match at 1e-9; Born histograms within 3 sigma", cases.len())
        } else {
            problems.join(" | ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "Choi/Kraus fidelity", Some(Duration::from_secs(10)), c1_choi_kraus),
        (2, "transpose and adjoint Choi identities", None, c2_swap_identities),
        (3, "double transpose", None, c3_double_transpose),
        (4, "C0 fixed by theta and theta'", None, c4_c0_fixed_point),
        (5, "symmetry build/decompose round trip", Some(Duration::from_secs(60)), c5_decomposition),
        (6, "no-go witness", Some(Duration::from_secs(180)), c6_nogo),
        (7, "fidelity monotonicity", None, c7_monotonicity),
        (8, "time-symmetric instruments and preparations", None, c8_ts_suite),
        (9, "dilation reconstruction", None, c9_dilation),
        (10, "Petz and Crooks reversals", None, c10_petz_crooks),
        (11, "CLI contract", None, c11_cli_contract),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (id, title, budget, run) in criteria {
        let t = Instant::now();
        let v = run();
        let elapsed = t.elapsed();
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let ok = v.passed && in_budget;
        if !ok {
            failed += 1;
        }
        let budget_note = budget.map_or(String::new(), |b| format!(" of {}s budget", b.as_secs()));
        println!(
            "[{}] {id:>2} {title}: {} ({:.2}s{budget_note})",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        11 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
