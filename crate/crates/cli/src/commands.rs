use std::path::Path;

use num_complex::Complex64;
use qlevy_core::algebra::{self, FiniteStarBialgebra};
use qlevy_core::cocycle::{self, CocycleSpec, MatrixSumKernel, StepFunction};
use qlevy_core::convolution::{self, ExpMethod, Functional, MatrixValuedMap};
use qlevy_core::io::{self, Document, EvaluationRow, ParseOptions};
use qlevy_core::linalg::{self, CMat};
use qlevy_core::perturb::{self, diamond_conjugate, weyl_generator};
use qlevy_core::report::Report;
use qlevy_core::schurmann::{self, CPCTuple, SchurmannTriple};
use qlevy_core::Error;
use serde_json::{json, Value};

use crate::{Cli, Command, Evaluation, ExpRoute, Route};

pub const TOL_ENV: &str = "QLEVY_TOL";
/// Agreement of two routes beyond the certified tail.
const TOL_ROUTES: f64 = 1e-8;
/// Target for the automatically chosen Guichardet level.
const TAIL_TARGET: f64 = 1e-10;
/// Largest `(1 + n_k)^{2n}·(d + 1)` the automatic level choice will allocate.
const KERNEL_BUDGET: usize = 1 << 22;
const LEVEL_CAP: usize = 12;

#[derive(Debug)]
pub enum Failure {
    /// Exit 2.
    Input(String),
    /// Exit 1.
    Verdict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Verification(_) | Error::NotPositive(_) | Error::SeriesNotConverged { .. } => Failure::Verdict(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub artifact: String,
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

impl Outcome {
    fn json(v: Value, passed: bool) -> Self {
        Self {
            artifact: io::to_json_string(&v),
            passed,
            diagnostics: Vec::new(),
        }
    }

    fn with_failures(mut self, report: &Report) -> Self {
        self.diagnostics
            .extend(report.failures().map(|c| format!("failed: {} (residual {:e}, tolerance {:e})", c.name, c.residual, c.tolerance)));
        self
    }
}

type Run = Result<Outcome, Failure>;

struct Context {
    opts: ParseOptions,
    tol: Option<f64>,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self, Failure> {
        let tol = match cli.tol {
            Some(t) => Some(t),
            None => match std::env::var(TOL_ENV) {
                Ok(s) => Some(
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Failure::Input(format!("{TOL_ENV}={s:?} is not a number")))?,
                ),
                Err(_) => None,
            },
        };
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::Input(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(Self {
            opts: ParseOptions {
                allow_invalid: cli.allow_invalid,
                ..ParseOptions::default()
            },
            tol,
        })
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn parse(&self, path: &Path) -> Result<Document, Failure> {
        io::parse_file(path, self.opts).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    /// The document and the bialgebra it lives on, `--algebra` taking precedence.
    fn parse_on(&self, path: &Path, algebra: Option<&Path>) -> Result<(Document, FiniteStarBialgebra), Failure> {
        let doc = self.parse(path)?;
        let alg = match algebra {
            Some(p) => match self.parse(p)? {
                Document::Bialgebra(a) => a,
                other => return Err(Failure::Input(format!("{}: expected a bialgebra, got {}", p.display(), other.kind()))),
            },
            None => doc
                .algebra()
                .cloned()
                .ok_or_else(|| Failure::Input(format!("{}: no bialgebra; embed one under \"algebra\" or pass --algebra", path.display())))?,
        };
        Ok((doc, alg))
    }

    fn spec(&self, path: &Path, algebra: Option<&Path>) -> Result<CocycleSpec, Failure> {
        let (doc, alg) = self.parse_on(path, algebra)?;
        let phi = generator_of(&doc, &alg)?;
        Ok(CocycleSpec::new(alg, phi)?)
    }

    fn triple(&self, path: &Path, algebra: Option<&Path>) -> Result<(SchurmannTriple, FiniteStarBialgebra), Failure> {
        let (doc, alg) = self.parse_on(path, algebra)?;
        let triple = match doc {
            Document::SchurmannTriple { triple, .. } => triple,
            Document::Functional { functional, .. } => schurmann::gns_reconstruct(&alg, &functional, algebra::DEFAULT_TOL_EXACT)?,
            Document::StructureMap { map, .. } => schurmann::StructureMap::new(map).to_triple(&alg)?,
            other => return Err(Failure::Input(format!("{}: a {} does not define a Schürmann triple", path.display(), other.kind()))),
        };
        Ok((triple, alg))
    }

    fn step(&self, arg: &str, noise_dim: usize) -> Result<StepFunction, Failure> {
        if arg == "const0" {
            return Ok(StepFunction::zero(noise_dim));
        }
        match self.parse(Path::new(arg))? {
            Document::StepFunction(f) if f.noise_dim() == noise_dim => Ok(f),
            Document::StepFunction(f) => Err(Failure::Input(format!(
                "{arg}: step function takes values in ℂ^{} but the noise dimension is {noise_dim}",
                f.noise_dim()
            ))),
            other => Err(Failure::Input(format!("{arg}: expected a step_function, got {}", other.kind()))),
        }
    }

    fn cpc_tuple(&self, path: &Path, algebra: Option<&Path>) -> Result<(CPCTuple, FiniteStarBialgebra), Failure> {
        match self.parse_on(path, algebra)? {
            (Document::CpcTuple { tuple, .. }, alg) => Ok((tuple, alg)),
            (other, _) => Err(Failure::Input(format!("{}: expected a cpc_tuple, got {}", path.display(), other.kind()))),
        }
    }
}

/// Functionals go through the GNS construction; CPC tuples give their generator.
fn generator_of(doc: &Document, alg: &FiniteStarBialgebra) -> Result<MatrixValuedMap, Failure> {
    Ok(match doc {
        Document::StructureMap { map, .. } => map.clone(),
        Document::SchurmannTriple { triple, .. } => schurmann::triple_to_structure_map(alg, triple)?.map,
        Document::Functional { functional, .. } => {
            let triple = schurmann::gns_reconstruct(alg, functional, algebra::DEFAULT_TOL_EXACT)?;
            schurmann::triple_to_structure_map(alg, &triple)?.map
        }
        Document::CpcTuple { tuple, .. } => tuple.to_generator(alg)?,
        other => return Err(Failure::Input(format!("a {} does not define a generator", other.kind()))),
    })
}

fn basis_indices(alg: &FiniteStarBialgebra, label: Option<&str>) -> Result<Vec<usize>, Failure> {
    match label {
        None => Ok((0..alg.dim()).collect()),
        Some(l) => alg
            .label_index(l)
            .map(|i| vec![i])
            .ok_or_else(|| Failure::Input(format!("unknown basis label {l:?}; labels are {}", alg.labels().join(", ")))),
    }
}

fn check_times(ts: &[f64]) -> Result<(), Failure> {
    match ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        Some(t) => Err(Failure::Input(format!("times must be finite and nonnegative, got {t}"))),
        None => Ok(()),
    }
}

fn csv_outcome(rows: &[EvaluationRow], passed: bool, diagnostics: Vec<String>) -> Outcome {
    Outcome {
        artifact: io::csv_string(rows),
        passed,
        diagnostics,
    }
}

pub fn run(cli: &Cli) -> Run {
    let cx = Context::new(cli)?;
    match &cli.command {
        Command::Validate { input } => validate(&cx, input),
        Command::Haar { input } => haar(&cx, input),
        Command::Expstar { input, algebra, t, a, method } => expstar(&cx, input, algebra.as_deref(), t, a.as_deref(), *method),
        Command::Reconstruct { input, algebra } => reconstruct(&cx, input, algebra.as_deref()),
        Command::Evaluate { eval, method, n_max } => evaluate(&cx, eval, *method, *n_max),
        Command::CheckMultiplicative { spec, algebra, n_max } => check_multiplicative(&cx, spec, algebra.as_deref(), *n_max),
        Command::Perturb { spec, algebra, euclidean } => perturb_cmd(&cx, spec, algebra.as_deref(), euclidean),
        Command::Dilate { input, algebra } => dilate(&cx, input, algebra.as_deref()),
        Command::Stinespring { input, algebra, b } => stinespring(&cx, input, algebra.as_deref(), b.as_deref()),
        Command::OppositeCheck { eval } => opposite_check(&cx, eval),
    }
}

fn validate(cx: &Context, input: &Path) -> Run {
    // Axiom failures are the verdict here, not an input error.
    let lenient = ParseOptions {
        allow_invalid: true,
        ..cx.opts
    };
    let doc = io::parse_file(input, lenient).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let alg = doc
        .algebra()
        .ok_or_else(|| Failure::Input(format!("{}: a {} names no bialgebra", input.display(), doc.kind())))?;
    let report = algebra::validate(alg, cx.tol(algebra::DEFAULT_TOL_EXACT));
    let passed = report.passed();
    Ok(Outcome::json(
        json!({
            "kind": "validation",
            "name": alg.name(),
            "dim": alg.dim(),
            "hopf": alg.antipode().is_some(),
            "report": io::report_to_value(&report),
        }),
        passed,
    )
    .with_failures(&report))
}

fn haar(cx: &Context, input: &Path) -> Run {
    let doc = cx.parse(input)?;
    let alg = doc
        .algebra()
        .ok_or_else(|| Failure::Input(format!("{}: a {} names no bialgebra", input.display(), doc.kind())))?;
    let tol = cx.tol(algebra::DEFAULT_TOL_EXACT);
    Ok(match algebra::haar_state(alg, tol) {
        Some(h) => {
            let positive = h.is_positive(tol);
            let mut out = Outcome::json(
                json!({
                    "kind": "haar",
                    "exists": true,
                    "functional": io::vector_to(&h.functional),
                    "residual": h.residual,
                    "gram_min_eigenvalue": h.gram_min_eigenvalue,
                    "positive": positive,
                }),
                positive,
            );
            if !positive {
                out.diagnostics.push(format!("failed: Haar functional is not positive (Gram eigenvalue {:e})", h.gram_min_eigenvalue));
            }
            out
        }
        None => {
            let mut out = Outcome::json(json!({"kind": "haar", "exists": false}), false);
            out.diagnostics.push("failed: no invariant functional".into());
            out
        }
    })
}

fn expstar(cx: &Context, input: &Path, algebra: Option<&Path>, ts: &[f64], label: Option<&str>, route: ExpRoute) -> Run {
    check_times(ts)?;
    let (doc, alg) = cx.parse_on(input, algebra)?;
    let gamma: Functional = match doc {
        Document::Functional { functional, .. } => functional,
        other => return Err(Failure::Input(format!("{}: expected a functional, got {}", input.display(), other.kind()))),
    };
    let indices = basis_indices(&alg, label)?;
    let tol = cx.tol(1e-9);
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut passed = true;
    for &t in ts {
        let series = matches!(route, ExpRoute::Series | ExpRoute::Both)
            .then(|| convolution::exp_star_series(&alg, &gamma, t, 1e-12))
            .transpose()?;
        let semigroup = matches!(route, ExpRoute::Semigroup | ExpRoute::Both)
            .then(|| convolution::exp_star(&alg, &gamma, t, ExpMethod::Semigroup, 1e-12))
            .transpose()?;
        for &i in &indices {
            let label = alg.labels()[i].clone();
            if let Some(s) = &series {
                rows.push(EvaluationRow {
                    basis_label: label.clone(),
                    t,
                    value: s.functional.value(i),
                    method: "series".into(),
                    tail_bound: Some(s.tail_bound),
                });
            }
            if let Some(g) = &semigroup {
                rows.push(EvaluationRow {
                    basis_label: label.clone(),
                    t,
                    value: g.value(i),
                    method: "semigroup".into(),
                    tail_bound: None,
                });
            }
            if let (Some(s), Some(g)) = (&series, &semigroup) {
                let gap = (s.functional.value(i) - g.value(i)).norm();
                if gap > tol {
                    passed = false;
                    diagnostics.push(format!("failed: routes differ by {gap:e} at {label}, t = {t}"));
                }
            }
        }
    }
    Ok(csv_outcome(&rows, passed, diagnostics))
}

fn reconstruct(cx: &Context, input: &Path, algebra: Option<&Path>) -> Run {
    let (doc, alg) = cx.parse_on(input, algebra)?;
    let gamma = match doc {
        Document::Functional { functional, .. } => functional,
        other => return Err(Failure::Input(format!("{}: expected a functional, got {}", input.display(), other.kind()))),
    };
    let tol = cx.tol(1e-9);
    let cp = schurmann::is_conditionally_positive(&alg, &gamma, algebra::DEFAULT_TOL_EXACT)?;
    if !cp.verdict {
        let mut out = Outcome::json(
            json!({"kind": "reconstruction", "conditionally_positive": false, "min_eigenvalue": cp.min_eigenvalue}),
            false,
        );
        out.diagnostics
            .push(format!("failed: not conditionally positive (Gram eigenvalue {:e})", cp.min_eigenvalue));
        return Ok(out);
    }
    let triple = schurmann::gns_reconstruct(&alg, &gamma, algebra::DEFAULT_TOL_EXACT)?;
    let report = triple.check(&alg, tol);
    let passed = report.passed();
    Ok(Outcome::json(
        json!({
            "kind": "reconstruction",
            "conditionally_positive": true,
            "min_eigenvalue": cp.min_eigenvalue,
            "noise_dim": triple.noise_dim(),
            "triple": io::to_value(&Document::SchurmannTriple { algebra: Some(alg), triple }),
            "report": io::report_to_value(&report),
        }),
        passed,
    )
    .with_failures(&report))
}

/// Smallest level meeting the tail target within the allocation budget.
fn auto_level(spec: &CocycleSpec, kernel_cert: cocycle::GrowthCertificate, f: &StepFunction, g: &StepFunction, t: f64) -> usize {
    let h = spec.hat_dim();
    let mut cap = 0;
    while cap < LEVEL_CAP {
        let size = h.saturating_pow(2 * (cap as u32 + 1)).saturating_mul(spec.algebra.dim() + 1);
        if size > KERNEL_BUDGET {
            break;
        }
        cap += 1;
    }
    cocycle::levels_for_tail(kernel_cert, f, g, t, TAIL_TARGET, cap).unwrap_or(cap)
}

fn evaluate(cx: &Context, eval: &Evaluation, route: Route, n_max: Option<usize>) -> Run {
    check_times(&eval.t)?;
    let spec = cx.spec(&eval.spec, eval.algebra.as_deref())?;
    let f = cx.step(&eval.f, spec.noise_dim())?;
    let g = cx.step(&eval.g, spec.noise_dim())?;
    let indices = basis_indices(&spec.algebra, eval.a.as_deref())?;
    let tol = cx.tol(TOL_ROUTES);
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut passed = true;
    for &i in &indices {
        let a = spec.algebra.basis(i);
        let label = spec.algebra.labels()[i].clone();
        let guichardet_levels: Option<(MatrixSumKernel, Vec<usize>)> = if route == Route::Semigroup {
            None
        } else {
            let cert = cocycle::upsilon_certificate(&spec, &a);
            let levels: Vec<usize> = eval.t.iter().map(|&t| n_max.unwrap_or_else(|| auto_level(&spec, cert, &f, &g, t))).collect();
            let top = levels.iter().copied().max().unwrap_or(0);
            Some((cocycle::kernel_from_generator(&spec, &a, top)?, levels))
        };
        for (k, &t) in eval.t.iter().enumerate() {
            let semigroup = (route != Route::Guichardet)
                .then(|| cocycle::evaluate_semigroup_decomposition(&spec, &a, &f, &g, t))
                .transpose()?;
            if let Some(v) = semigroup {
                rows.push(EvaluationRow {
                    basis_label: label.clone(),
                    t,
                    value: v,
                    method: "semigroup".into(),
                    tail_bound: None,
                });
            }
            if let Some((kernel, levels)) = &guichardet_levels {
                let gv = cocycle::evaluate_guichardet(kernel, &f, &g, t, levels[k])?;
                rows.push(EvaluationRow {
                    basis_label: label.clone(),
                    t,
                    value: gv.value,
                    method: "guichardet".into(),
                    tail_bound: Some(gv.tail_bound),
                });
                if let Some(v) = semigroup {
                    let gap = (v - gv.value).norm();
                    if !(gap <= gv.tail_bound + tol) {
                        passed = false;
                        diagnostics.push(format!(
                            "failed: routes differ by {gap:e} at {label}, t = {t} (tail bound {:e})",
                            gv.tail_bound
                        ));
                    }
                }
            }
        }
    }
    Ok(csv_outcome(&rows, passed, diagnostics))
}

fn check_multiplicative(cx: &Context, path: &Path, algebra: Option<&Path>, n_max: usize) -> Run {
    let spec = cx.spec(path, algebra)?;
    let report = cocycle::check_multiplicative(&spec, n_max, cx.tol(1e-10))?;
    let passed = report.passed();
    Ok(Outcome::json(
        json!({
            "kind": "multiplicativity",
            "n_max": n_max,
            "noise_dim": spec.noise_dim(),
            "report": io::report_to_value(&report),
        }),
        passed,
    )
    .with_failures(&report))
}

fn perturb_cmd(cx: &Context, path: &Path, algebra: Option<&Path>, euclidean: &Path) -> Run {
    let (triple, alg) = cx.triple(path, algebra)?;
    let e = match cx.parse(euclidean)? {
        Document::Euclidean(e) => e,
        other => return Err(Failure::Input(format!("{}: expected a euclidean element, got {}", euclidean.display(), other.kind()))),
    };
    let tol = cx.tol(1e-10);
    let moved = perturb::euclidean_action(&alg, &triple, &e)?;
    let mut report = Report::new();
    report.extend_prefixed("triple.", &moved.check(&alg, tol));
    let phi = schurmann::triple_to_structure_map(&alg, &moved)?.map;
    report.extend_prefixed("structure.", &schurmann::check_structure_relation(&alg, &phi, tol)?);
    let original = schurmann::triple_to_structure_map(&alg, &triple)?.map;
    let w = weyl_generator(&e);
    let conjugated = diamond_conjugate(&alg, &original, Some(&w.adjoint()), Some(&w))?;
    report.record("diamond_conjugate", conjugated.max_diff(&phi), tol);
    let passed = report.passed();
    Ok(Outcome::json(
        json!({
            "kind": "perturbation",
            "triple": io::to_value(&Document::SchurmannTriple { algebra: Some(alg), triple: moved }),
            "structure_map": io::matrices_to(phi.mats()),
            "report": io::report_to_value(&report),
        }),
        passed,
    )
    .with_failures(&report))
}

fn dilate(cx: &Context, path: &Path, algebra: Option<&Path>) -> Run {
    let (tuple, alg) = cx.cpc_tuple(path, algebra)?;
    let res = perturb::dilate_cpc(&alg, &tuple, cx.tol(1e-9))?;
    let passed = res.report.passed();
    Ok(Outcome::json(io::dilation_to_value(&res), passed).with_failures(&res.report))
}

fn stinespring(cx: &Context, path: &Path, algebra: Option<&Path>, b_path: Option<&Path>) -> Run {
    let (tuple, alg) = cx.cpc_tuple(path, algebra)?;
    let b = match b_path {
        None => CMat::zeros(tuple.noise_dim(), tuple.k_dim()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            io::matrix_from(&v, "b").map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
    };
    let res = perturb::stinespring_generators(&alg, &tuple, &b, cx.tol(1e-10))?;
    let passed = res.report.passed();
    Ok(Outcome::json(
        json!({
            "kind": "stinespring",
            "tau": io::matrix_to(&res.tau),
            "contraction": io::matrix_to(&res.contraction),
            "contraction_max_eigenvalue": linalg::max_eigenvalue(&linalg::hermitian_part(&res.contraction)),
            "theta": io::matrices_to(res.theta.mats()),
            "report": io::report_to_value(&res.report),
        }),
        passed,
    )
    .with_failures(&res.report))
}

fn opposite_check(cx: &Context, eval: &Evaluation) -> Run {
    check_times(&eval.t)?;
    let spec = cx.spec(&eval.spec, eval.algebra.as_deref())?;
    let f = cx.step(&eval.f, spec.noise_dim())?;
    let g = cx.step(&eval.g, spec.noise_dim())?;
    let indices = basis_indices(&spec.algebra, eval.a.as_deref())?;
    let opposite = CocycleSpec::new(spec.algebra.opposite(), spec.phi.clone())?;
    let tol = cx.tol(1e-10);
    let mut rows = Vec::new();
    let mut report = Report::new();
    for &t in &eval.t {
        let (fr, gr) = (f.time_reverse(t)?, g.time_reverse(t)?);
        for &i in &indices {
            let a = spec.algebra.basis(i);
            let label = &spec.algebra.labels()[i];
            let routes: [(&str, Complex64); 3] = [
                ("opposite", cocycle::evaluate_opposite(&spec, &a, &f, &g, t)?),
                ("opposite_algebra", cocycle::evaluate_semigroup_decomposition(&opposite, &a, &f, &g, t)?),
                ("time_reversed", cocycle::evaluate_semigroup_decomposition(&spec, &a, &fr, &gr, t)?),
            ];
            for (method, value) in routes {
                rows.push(EvaluationRow {
                    basis_label: label.clone(),
                    t,
                    value,
                    method: method.into(),
                    tail_bound: None,
                });
            }
            let gap = (routes[0].1 - routes[1].1).norm().max((routes[0].1 - routes[2].1).norm());
            report.record(format!("{label}@{t}"), gap, tol);
        }
    }
    let passed = report.passed();
    let mut out = csv_outcome(&rows, passed, Vec::new()).with_failures(&report);
    if spec.algebra.is_cocommutative(algebra::DEFAULT_TOL_EXACT) {
        out.diagnostics.push("note: the bialgebra is cocommutative, so all routes coincide with the forward cocycle".into());
    }
    Ok(out)
}
