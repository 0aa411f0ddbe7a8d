//! Command implementations. Each returns an [`Outcome`]: an exit code and a
//! report, which `main` prints as text or JSON.

use std::collections::BTreeMap;

use evosym::error::Error;
use evosym::matrix::seeded_rng;
use evosym::operations::{
    classify_choi, outcome_probabilities, sample_instrument, validate_instrument, Instrument,
};
use evosym::reversal;
use evosym::symmetry::{decompose_operation_symmetry_with, nogo_residual, NogoTarget, SuperMap};
use evosym::tsqt::validate_ts_instrument;
use evosym::{ComplexMatrix, CpMap, DensityMatrix, QuantumOperation, Tolerances};
use serde_json::{json, Value};

use crate::report::{matrix, num, Report};
use crate::spec_file::{self, channel_file, MapData, ParseError};

/// Environment variable overriding the default equality tolerance.
pub const EQUALITY_TOL_VAR: &str = "EVOSYM_EQUALITY_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_NOT_SYMMETRY: i32 = 5;

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    Parse(ParseError),
    Usage(String),
    Invariant(Error),
    Precondition(Error),
    NotSymmetry(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) | Failure::Usage(_) => EXIT_PARSE,
            Failure::Invariant(_) => EXIT_INVARIANT,
            Failure::Precondition(_) => EXIT_PRECONDITION,
            Failure::NotSymmetry(_) => EXIT_NOT_SYMMETRY,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Parse(e) => {
                let mut v = json!({"name": "ParseError", "message": e.to_string()});
                match e {
                    ParseError::Io { path, .. } => v["path"] = json!(path),
                    ParseError::Syntax { path, line, column, .. } => {
                        v["path"] = json!(path);
                        v["line"] = json!(line);
                        v["column"] = json!(column);
                    }
                    ParseError::Field { path, line, field, .. } => {
                        v["path"] = json!(path);
                        v["line"] = json!(line);
                        v["field"] = json!(field);
                    }
                }
                v
            }
            Failure::Usage(msg) => json!({"name": "UsageError", "message": msg}),
            Failure::Invariant(e) | Failure::Precondition(e) | Failure::NotSymmetry(e) => error_json(e),
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Parse(e) => e.to_string(),
            Failure::Usage(m) => m.clone(),
            Failure::Invariant(e) | Failure::Precondition(e) | Failure::NotSymmetry(e) => {
                format!("{}: {e}", e.name())
            }
        }
    }
}

fn error_json(e: &Error) -> Value {
    let mut v = json!({"name": e.name(), "message": e.to_string()});
    match e {
        Error::NotASymmetry { stage, detail } => {
            v["stage"] = json!(stage);
            v["detail"] = json!(detail);
        }
        Error::NotTimeSymmetric { defect_in, defect_out } => {
            v["defect_in"] = num(*defect_in);
            v["defect_out"] = num(*defect_out);
        }
        Error::NotHermitian(d)
        | Error::NotPSD(d)
        | Error::NotCP(d)
        | Error::NotTraceNonIncreasing(d)
        | Error::NotChannel(d)
        | Error::SupportMismatch(d)
        | Error::NotComplementary(d)
        | Error::TraceAboveOne(d)
        | Error::NotNormalized(d) => v["defect"] = num(*d),
        _ => {}
    }
    v
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e)
    }
}

/// Exit code plus report; a failed command still carries whatever the
/// report had gathered before the failure.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Report,
    pub failure: Option<Failure>,
}

fn finish(mut report: Report, result: Result<(), Failure>) -> Outcome {
    match result {
        Ok(()) => Outcome {
            code: EXIT_OK,
            report,
            failure: None,
        },
        Err(f) => {
            report.error = Some(f.to_json());
            Outcome {
                code: f.exit_code(),
                report,
                failure: Some(f),
            }
        }
    }
}

/// Default tolerances, with the equality tolerance overridable from the
/// environment.
pub fn tolerances() -> Result<Tolerances, Failure> {
    match std::env::var(EQUALITY_TOL_VAR) {
        Err(_) => Ok(Tolerances::DEFAULT),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Ok(Tolerances::DEFAULT.with_equality_tol(x)),
            _ => Err(Failure::Usage(format!(
                "{EQUALITY_TOL_VAR}=`{s}` is not a positive number"
            ))),
        },
    }
}

pub fn load_operation(path: &str, tol: &Tolerances) -> Result<QuantumOperation, Failure> {
    let text = spec_file::read_file(path)?;
    let parsed = spec_file::parse_channel(path, &text)?;
    QuantumOperation::with_tolerances(parsed.spec.d_in, parsed.spec.d_out, parsed.choi(), tol)
        .map_err(Failure::Invariant)
}

pub fn load_state(path: &str, tol: &Tolerances) -> Result<DensityMatrix, Failure> {
    let text = spec_file::read_file(path)?;
    let (_, m) = spec_file::parse_state(path, &text)?;
    DensityMatrix::with_tolerances(m, tol).map_err(Failure::Invariant)
}

pub fn classify(input: &str, tol: &Tolerances) -> Outcome {
    let mut report = Report::new("classify");
    report.input("path", input);
    let result = (|| {
        let text = spec_file::read_file(input)?;
        let parsed = spec_file::parse_channel(input, &text)?;
        let (d_in, d_out) = (parsed.spec.d_in, parsed.spec.d_out);
        report.input("name", parsed.spec.name.as_str()).input("d_in", d_in).input("d_out", d_out);
        let choi = parsed.choi();
        let herm = choi.hermiticity_defect();
        report.defect("choi_hermiticity_defect", herm);
        if herm > tol.hermiticity_tol {
            return Err(Failure::Invariant(Error::NotHermitian(herm)));
        }
        let c = classify_choi(&choi, d_in, d_out, tol);
        report.classification(&c);
        QuantumOperation::with_tolerances(d_in, d_out, choi, tol).map_err(Failure::Invariant)?;
        Ok(())
    })();
    finish(report, result)
}

/// Reversal transforms exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    DoubleTranspose,
    Theta,
    ThetaPrime,
    WeakAdjoint,
    Petz,
    PetzTranspose,
    Crooks,
    CrooksOperation,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::DoubleTranspose => "double-transpose",
            Transform::Theta => "theta",
            Transform::ThetaPrime => "theta-prime",
            Transform::WeakAdjoint => "weak-adjoint",
            Transform::Petz => "petz",
            Transform::PetzTranspose => "petz-transpose",
            Transform::Crooks => "crooks",
            Transform::CrooksOperation => "crooks-operation",
        }
    }
}

/// Reference inputs needed by the state-dependent transforms.
#[derive(Debug, Clone, Default)]
pub struct ReverseInputs {
    pub omega_a: Option<String>,
    pub omega_b: Option<String>,
    pub rho0: Option<String>,
    pub complement: Option<String>,
    pub out: Option<String>,
}

fn required<'a>(flag: &str, v: &'a Option<String>, t: Transform) -> Result<&'a str, Failure> {
    v.as_deref()
        .ok_or_else(|| Failure::Usage(format!("--transform {} requires --{flag}", t.name())))
}

pub fn reverse(input: &str, transform: Transform, extra: &ReverseInputs, tol: &Tolerances) -> Outcome {
    let mut report = Report::new("reverse");
    report.input("path", input).input("transform", transform.name());
    let result = (|| {
        let q = load_operation(input, tol)?;
        report.input("d_in", q.d_in()).input("d_out", q.d_out());
        let mut refs: BTreeMap<String, Value> = BTreeMap::new();
        let mut state = |flag: &str, v: &Option<String>| -> Result<DensityMatrix, Failure> {
            let path = required(flag, v, transform)?;
            let key = flag.replace('-', "_");
            report.input(&key, path);
            refs.insert(key, json!(path));
            load_state(path, tol)
        };
        let pre = Failure::Precondition;
        let map: CpMap = match transform {
            Transform::DoubleTranspose => reversal::double_transpose(&q).into_map(),
            Transform::Theta => reversal::theta_scaled_with(&q, tol).map_err(pre)?.into_map(),
            Transform::ThetaPrime => reversal::theta_prime_scaled_with(&q, tol).map_err(pre)?.into_map(),
            Transform::WeakAdjoint => reversal::weak_adjoint(&q).map_err(pre)?.into_map(),
            Transform::Petz | Transform::PetzTranspose => {
                let wa = state("omega-a", &extra.omega_a)?;
                let wb = state("omega-b", &extra.omega_b)?;
                if transform == Transform::Petz {
                    reversal::petz_reversal_with(&q, &wa, &wb, tol).map_err(pre)?
                } else {
                    reversal::petz_reversal_transpose_with(&q, &wa, &wb, tol).map_err(pre)?
                }
            }
            Transform::Crooks => {
                let rho0 = state("rho0", &extra.rho0)?;
                reversal::crooks_reversal_with(&q, &rho0, tol).map_err(pre)?
            }
            Transform::CrooksOperation => {
                let rho0 = state("rho0", &extra.rho0)?;
                let c0_path = required("complement", &extra.complement, transform)?;
                report.input("complement", c0_path);
                refs.insert("complement".into(), json!(c0_path));
                let c0 = load_operation(c0_path, tol)?;
                reversal::crooks_reversal_operation_with(&q, &c0, &rho0, tol)
                    .map_err(pre)?
                    .into_map()
            }
        };
        let c = map.classify(tol);
        report.classification(&c);
        report.output("d_in", map.d_in()).output("d_out", map.d_out());
        let mut metadata = BTreeMap::new();
        metadata.insert("transform".to_string(), json!(transform.name()));
        metadata.insert("source".to_string(), json!(input));
        if !refs.is_empty() {
            metadata.insert("reference_states".to_string(), json!(refs));
        }
        let file = channel_file(
            &format!("{}({})", transform.name(), file_stem(input)),
            map.d_in(),
            map.d_out(),
            &MapData::Choi(map.choi().clone()),
            metadata,
        );
        match &extra.out {
            Some(out) => {
                std::fs::write(out, spec_file::to_pretty(&file)).map_err(|e| {
                    Failure::Usage(format!("cannot write {out}: {e}"))
                })?;
                report.output("out", out.as_str());
            }
            None => {
                report.output("choi", matrix(map.choi()));
            }
        }
        Ok(())
    })();
    finish(report, result)
}

fn file_stem(path: &str) -> String {
    std::path::Path::new(path)
        .file_stem()
        .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn decompose(input: &str, tol: &Tolerances) -> Outcome {
    let mut report = Report::new("decompose");
    report.input("path", input);
    let result = (|| {
        let text = spec_file::read_file(input)?;
        let (spec, op) = spec_file::parse_supermap(input, &text)?;
        report
            .input("name", spec.name.as_str())
            .input("in_dims", json!(spec.in_dims))
            .input("out_dims", json!(spec.out_dims));
        let s = SuperMap::new(
            (spec.in_dims[0], spec.in_dims[1]),
            (spec.out_dims[0], spec.out_dims[1]),
            op,
        )
        .map_err(Failure::Invariant)?;
        let d = decompose_operation_symmetry_with(&s, tol).map_err(Failure::NotSymmetry)?;
        report
            .output("kind", d.s1.kind.name())
            .output("s1", json!({"kind": d.s1.kind.name(), "u": matrix(&d.s1.u)}))
            .output("s2", json!({"kind": d.s2.kind.name(), "u": matrix(&d.s2.u)}))
            .defect("residual", d.residual);
        Ok(())
    })();
    finish(report, result)
}

/// Parameters of a no-go search.
#[derive(Debug, Clone, Copy)]
pub struct NogoArgs {
    pub dim: usize,
    pub target: NogoTarget,
    pub samples: usize,
    pub restarts: usize,
    pub seed: u64,
    pub floor: Option<f64>,
}

pub fn nogo(args: &NogoArgs) -> Outcome {
    let mut report = Report::new("nogo");
    report
        .input("dim", args.dim)
        .input("target", args.target.name())
        .input("samples", args.samples)
        .input("restarts", args.restarts)
        .input("seed", args.seed);
    let result = (|| {
        if args.dim < 2 {
            return Err(Failure::Precondition(Error::DimensionMismatch(format!(
                "no-go search needs dimension at least 2, got {}",
                args.dim
            ))));
        }
        let r = nogo_residual(args.dim, args.target, args.samples, args.restarts, args.seed);
        if let Some(floor) = args.floor {
            report.input("floor", num(floor));
            report.flag("above_floor", r.residual >= floor);
        }
        report
            .output("residual", num(r.residual))
            .output("sample_size", r.sample_size)
            .output("best_kind", r.best_kind.name())
            .output("best_restart", r.best_restart)
            .output("best_w", matrix(&r.best_w))
            .output("best_v", matrix(&r.best_v))
            .output(
                "restart_residuals",
                Value::Array(r.restart_residuals.iter().map(|&x| num(x)).collect()),
            );
        Ok(())
    })();
    finish(report, result)
}

/// Parameters of an instrument simulation.
#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub instrument: String,
    pub state: String,
    pub shots: usize,
    pub seed: u64,
    pub require_ts: bool,
}

pub fn simulate(args: &SimulateArgs, tol: &Tolerances) -> Outcome {
    let mut report = Report::new("simulate");
    report
        .input("instrument", args.instrument.as_str())
        .input("state", args.state.as_str())
        .input("shots", args.shots)
        .input("seed", args.seed)
        .input("require_ts", args.require_ts);
    let result = (|| {
        let text = spec_file::read_file(&args.instrument)?;
        let (spec, chois) = spec_file::parse_instrument(&args.instrument, &text)?;
        let rho = load_state(&args.state, tol)?;
        let mut branches = Vec::with_capacity(chois.len());
        for (n, c) in chois.into_iter().enumerate() {
            let b = QuantumOperation::with_tolerances(spec.d_in, spec.d_out, c, tol).map_err(|e| {
                Failure::Invariant(Error::InvalidInstrument(format!(
                    "branch {n} (`{}`): {}: {e}",
                    spec.branches[n].name,
                    e.name()
                )))
            })?;
            branches.push(b);
        }
        let inst = Instrument::new(spec.d_in, spec.d_out, branches).map_err(Failure::Invariant)?;
        let valid = validate_instrument(&inst, tol).map_err(Failure::Invariant)?;
        report
            .flag("instrument_valid", valid.valid)
            .defect("instrument_tp_defect", valid.tp_defect)
            .defect("instrument_min_choi_eigenvalue", valid.min_choi_eigenvalue);
        if !valid.valid {
            return Err(Failure::Invariant(Error::InvalidInstrument(format!(
                "branches do not sum to a channel (tp defect {:e}, min eigenvalue {:e})",
                valid.tp_defect, valid.min_choi_eigenvalue
            ))));
        }
        let ts = validate_ts_instrument(&inst, tol).map_err(Failure::Invariant)?;
        report.flag("ts_valid", ts.valid);
        if args.require_ts && !ts.valid {
            let (defect_in, defect_out, which) = match ts.first_defective {
                Some(n) => (
                    ts.branches[n].defect_in,
                    ts.branches[n].defect_out,
                    format!("branch {n} (`{}`)", spec.branches[n].name),
                ),
                None => (ts.total.defect_in, ts.total.defect_out, "the summed channel".to_string()),
            };
            return Err(Failure::Invariant(Error::InvalidInstrument(format!(
                "{which} is not time-symmetric (defect_in {defect_in:e}, defect_out {defect_out:e})"
            ))));
        }
        if rho.dim() != spec.d_in {
            return Err(Failure::Precondition(Error::DimensionMismatch(format!(
                "state has dimension {}, instrument input is {}",
                rho.dim(),
                spec.d_in
            ))));
        }
        if !rho.is_normalized(tol.equality_tol) {
            return Err(Failure::Invariant(Error::NotNormalized(rho.trace())));
        }
        let probs = outcome_probabilities(&inst, &rho).map_err(Failure::Invariant)?;
        let mut counts = vec![0usize; inst.len()];
        let mut sums = vec![ComplexMatrix::zeros(spec.d_out, spec.d_out); inst.len()];
        let mut rng = seeded_rng(args.seed);
        for _ in 0..args.shots {
            let (n, post) = sample_instrument(&inst, &rho, &mut rng).map_err(Failure::Invariant)?;
            counts[n] += 1;
            sums[n] = &sums[n] + post.matrix();
        }
        let shots = args.shots as f64;
        let mut within = true;
        let outcomes: Vec<Value> = (0..inst.len())
            .map(|n| {
                let p = probs[n];
                let sigma = (p * (1.0 - p) / shots).sqrt();
                let freq = if args.shots == 0 { 0.0 } else { counts[n] as f64 / shots };
                let dev = (freq - p).abs();
                within &= dev <= 3.0 * sigma + 1e-12;
                let mean = if counts[n] == 0 {
                    Value::Null
                } else {
                    matrix(&sums[n].scale(1.0 / counts[n] as f64))
                };
                json!({
                    "index": n,
                    "name": spec.branches[n].name,
                    "count": counts[n],
                    "frequency": num(freq),
                    "born_probability": num(p),
                    "sigma": num(sigma),
                    "mean_post_state": mean,
                })
            })
            .collect();
        report
            .flag("within_3_sigma", within)
            .output("histogram", Value::Array(counts.iter().map(|&c| json!(c)).collect()))
            .output("outcomes", Value::Array(outcomes));
        Ok(())
    })();
    finish(report, result)
}
