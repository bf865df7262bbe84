//! JSON documents and CSV tables.
//!
//! Every document carries a top-level `"kind"`. Complex numbers are `[re, im]`
//! pairs, vectors are arrays of pairs and matrices are arrays of rows. Objects
//! are written with sorted keys and floats in shortest round-trip form.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::algebra::{self, BialgebraParts, FiniteStarBialgebra, Flags};
use crate::cocycle::StepFunction;
use crate::convolution::{Functional, MatrixValuedMap};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::perturb::{DilationResult, EuclideanElement};
use crate::report::Report;
use crate::schurmann::{CPCTuple, SchurmannTriple};

/// A parsed document. Maps on a bialgebra may embed it under `"algebra"`.
#[derive(Debug, Clone)]
pub enum Document {
    Bialgebra(FiniteStarBialgebra),
    Functional {
        algebra: Option<FiniteStarBialgebra>,
        functional: Functional,
    },
    StructureMap {
        algebra: Option<FiniteStarBialgebra>,
        map: MatrixValuedMap,
    },
    SchurmannTriple {
        algebra: Option<FiniteStarBialgebra>,
        triple: SchurmannTriple,
    },
    StepFunction(StepFunction),
    CpcTuple {
        algebra: Option<FiniteStarBialgebra>,
        tuple: CPCTuple,
    },
    Euclidean(EuclideanElement),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Bialgebra(_) => "bialgebra",
            Document::Functional { .. } => "functional",
            Document::StructureMap { .. } => "structure_map",
            Document::SchurmannTriple { .. } => "schurmann_triple",
            Document::StepFunction(_) => "step_function",
            Document::CpcTuple { .. } => "cpc_tuple",
            Document::Euclidean(_) => "euclidean",
        }
    }

    /// The bialgebra the document lives on, if it names one.
    pub fn algebra(&self) -> Option<&FiniteStarBialgebra> {
        match self {
            Document::Bialgebra(a) => Some(a),
            Document::Functional { algebra, .. }
            | Document::StructureMap { algebra, .. }
            | Document::SchurmannTriple { algebra, .. }
            | Document::CpcTuple { algebra, .. } => algebra.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Accept bialgebras that fail an axiom.
    pub allow_invalid: bool,
    pub tol: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            allow_invalid: false,
            tol: algebra::DEFAULT_TOL_EXACT,
        }
    }
}

fn schema(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Schema(format!("field `{field}`: {msg}"))
}

fn get<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| schema(field, "missing"))
}

pub fn complex_from(v: &Value, field: &str) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(schema(field, "complex entries must be numbers")),
        },
        _ => Err(schema(field, "expected a complex number [re, im]")),
    }
}

pub fn complex_to(z: C64) -> Value {
    json!([z.re, z.im])
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(field, "expected an array"))
}

pub fn vector_from(v: &Value, field: &str) -> Result<CVec> {
    let items = array(v, field)?;
    let zs = items.iter().map(|z| complex_from(z, field)).collect::<Result<Vec<_>>>()?;
    Ok(CVec::from_vec(zs))
}

pub fn vector_to(v: &CVec) -> Value {
    Value::Array(v.iter().map(|&z| complex_to(z)).collect())
}

pub fn matrix_from(v: &Value, field: &str) -> Result<CMat> {
    let rows = array(v, field)?;
    let parsed = rows.iter().map(|r| vector_from(r, field)).collect::<Result<Vec<_>>>()?;
    let ncols = parsed.first().map_or(0, |r| r.len());
    if parsed.iter().any(|r| r.len() != ncols) {
        return Err(schema(field, "matrix rows have different lengths"));
    }
    Ok(CMat::from_fn(parsed.len(), ncols, |i, j| parsed[i][j]))
}

pub fn matrix_to(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to(m[(i, j)])).collect()))
            .collect(),
    )
}

fn matrices_from(v: &Value, field: &str) -> Result<Vec<CMat>> {
    array(v, field)?.iter().map(|m| matrix_from(m, field)).collect()
}

pub fn matrices_to(ms: &[CMat]) -> Value {
    Value::Array(ms.iter().map(matrix_to).collect())
}

fn number(obj: &Map<String, Value>, field: &str) -> Result<f64> {
    get(obj, field)?.as_f64().ok_or_else(|| schema(field, "expected a number"))
}

fn table_from(v: &Value) -> Result<Vec<Vec<usize>>> {
    array(v, "table")?
        .iter()
        .map(|row| {
            array(row, "table")?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| schema("table", "entries must be nonnegative integers")))
                .collect()
        })
        .collect()
}

/// `[d][d][d]` nested array of complex numbers, flattened row-major.
fn cube_from(v: &Value, field: &str, d: usize) -> Result<Vec<C64>> {
    let outer = array(v, field)?;
    if outer.len() != d {
        return Err(schema(field, format!("expected {d} slices")));
    }
    let mut flat = Vec::with_capacity(d * d * d);
    for slice in outer {
        let m = matrix_from(slice, field)?;
        if m.shape() != (d, d) && d > 0 {
            return Err(schema(field, format!("each slice must be {d}×{d}")));
        }
        for j in 0..d {
            for k in 0..d {
                flat.push(m[(j, k)]);
            }
        }
    }
    Ok(flat)
}

fn cube_to(flat: &[C64], d: usize) -> Value {
    Value::Array(
        (0..d)
            .map(|i| matrix_to(&CMat::from_fn(d, d, |j, k| flat[(i * d + j) * d + k])))
            .collect(),
    )
}

fn checked_bialgebra(a: FiniteStarBialgebra, opts: ParseOptions) -> Result<FiniteStarBialgebra> {
    if opts.allow_invalid {
        return Ok(a);
    }
    let report = algebra::validate(&a, opts.tol);
    let failure = report.failures().next().map(|c| format!("{} (residual {:e})", c.name, c.residual));
    match failure {
        None => Ok(a),
        Some(msg) => Err(Error::Axiom(msg)),
    }
}

fn bialgebra_from(obj: &Map<String, Value>) -> Result<FiniteStarBialgebra> {
    let dim = get(obj, "dim")?.as_u64().ok_or_else(|| schema("dim", "expected a positive integer"))? as usize;
    let labels = match obj.get("labels") {
        Some(v) => array(v, "labels")?
            .iter()
            .map(|l| l.as_str().map(str::to_owned).ok_or_else(|| schema("labels", "expected strings")))
            .collect::<Result<Vec<_>>>()?,
        None => (0..dim).map(|i| format!("e{i}")).collect(),
    };
    if labels.len() != dim {
        return Err(schema("labels", format!("expected {dim} labels")));
    }
    let flags = match obj.get("flags") {
        Some(v) => serde_json::from_value::<Flags>(v.clone()).map_err(|e| schema("flags", e))?,
        None => Flags::default(),
    };
    let antipode = match obj.get("antipode") {
        Some(Value::Null) | None => None,
        Some(v) => Some(matrix_from(v, "antipode")?),
    };
    let parts = BialgebraParts {
        name: obj.get("name").and_then(Value::as_str).unwrap_or("A").to_owned(),
        labels,
        mult: cube_from(get(obj, "mult")?, "mult", dim)?,
        unit: vector_from(get(obj, "unit")?, "unit")?,
        coproduct: cube_from(get(obj, "coproduct")?, "coproduct", dim)?,
        counit: vector_from(get(obj, "counit")?, "counit")?,
        involution: matrix_from(get(obj, "involution")?, "involution")?,
        antipode,
        flags,
    };
    FiniteStarBialgebra::from_parts(parts)
}

fn optional_algebra(obj: &Map<String, Value>, opts: ParseOptions) -> Result<Option<FiniteStarBialgebra>> {
    match obj.get("algebra") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => match parse_value(v, opts)? {
            Document::Bialgebra(a) => Ok(Some(a)),
            other => Err(schema("algebra", format!("expected a bialgebra document, got {}", other.kind()))),
        },
    }
}

fn check_on(algebra: &Option<FiniteStarBialgebra>, d: usize, field: &str) -> Result<()> {
    match algebra {
        Some(a) if a.dim() != d => Err(schema(field, format!("has {d} entries but the bialgebra has dimension {}", a.dim()))),
        _ => Ok(()),
    }
}

/// Parses a document already decoded as JSON.
pub fn parse_value(v: &Value, opts: ParseOptions) -> Result<Document> {
    let obj = v.as_object().ok_or_else(|| schema("kind", "document must be a JSON object"))?;
    let kind = get(obj, "kind")?.as_str().ok_or_else(|| schema("kind", "expected a string"))?;
    match kind {
        "group_bialgebra" => Ok(Document::Bialgebra(checked_bialgebra(
            algebra::build_group_bialgebra(&table_from(get(obj, "table")?)?)?,
            opts,
        )?)),
        "function_bialgebra" => Ok(Document::Bialgebra(checked_bialgebra(
            algebra::build_function_bialgebra(&table_from(get(obj, "table")?)?)?,
            opts,
        )?)),
        "bialgebra" => Ok(Document::Bialgebra(checked_bialgebra(bialgebra_from(obj)?, opts)?)),
        "functional" => {
            let algebra = optional_algebra(obj, opts)?;
            let values = vector_from(get(obj, "values")?, "values")?;
            check_on(&algebra, values.len(), "values")?;
            Ok(Document::Functional {
                algebra,
                functional: Functional::functional(&values),
            })
        }
        "structure_map" => {
            let algebra = optional_algebra(obj, opts)?;
            let mats = matrices_from(get(obj, "mats")?, "mats")?;
            check_on(&algebra, mats.len(), "mats")?;
            Ok(Document::StructureMap {
                algebra,
                map: MatrixValuedMap::new(mats)?,
            })
        }
        "schurmann_triple" => {
            let algebra = optional_algebra(obj, opts)?;
            let gamma = vector_from(get(obj, "gamma")?, "gamma")?;
            let delta = array(get(obj, "delta")?, "delta")?
                .iter()
                .map(|x| vector_from(x, "delta"))
                .collect::<Result<Vec<_>>>()?;
            let rho = matrices_from(get(obj, "rho")?, "rho")?;
            check_on(&algebra, gamma.len(), "gamma")?;
            Ok(Document::SchurmannTriple {
                algebra,
                triple: SchurmannTriple::new(Functional::functional(&gamma), delta, rho)?,
            })
        }
        "step_function" => {
            let breakpoints = array(get(obj, "breakpoints")?, "breakpoints")?
                .iter()
                .map(|b| b.as_f64().ok_or_else(|| schema("breakpoints", "expected numbers")))
                .collect::<Result<Vec<_>>>()?;
            let values = array(get(obj, "values")?, "values")?
                .iter()
                .map(|x| vector_from(x, "values"))
                .collect::<Result<Vec<_>>>()?;
            let noise_dim = match obj.get("noise_dim") {
                Some(n) => n.as_u64().ok_or_else(|| schema("noise_dim", "expected an integer"))? as usize,
                None => values
                    .first()
                    .map(|v| v.len())
                    .ok_or_else(|| schema("noise_dim", "required when there are no values"))?,
            };
            Ok(Document::StepFunction(StepFunction::new(breakpoints, values, noise_dim)?))
        }
        "cpc_tuple" => {
            let algebra = optional_algebra(obj, opts)?;
            let rho = matrices_from(get(obj, "rho")?, "rho")?;
            check_on(&algebra, rho.len(), "rho")?;
            let tuple = CPCTuple::new(
                rho,
                matrix_from(get(obj, "d_mat")?, "d_mat")?,
                vector_from(get(obj, "xi")?, "xi")?,
                vector_from(get(obj, "d_vec")?, "d_vec")?,
                vector_from(get(obj, "e_vec")?, "e_vec")?,
                number(obj, "t")?,
            )?;
            Ok(Document::CpcTuple { algebra, tuple })
        }
        "euclidean" => {
            let v = vector_from(get(obj, "v")?, "v")?;
            let big_v = matrix_from(get(obj, "V")?, "V")?;
            let big_v = if v.is_empty() { CMat::zeros(0, 0) } else { big_v };
            Ok(Document::Euclidean(EuclideanElement::new(number(obj, "mu")?, v, big_v)?))
        }
        other => Err(schema("kind", format!("unknown kind `{other}`"))),
    }
}

/// Parses a document from JSON text; syntax errors carry line and column.
pub fn parse_str(text: &str, opts: ParseOptions) -> Result<Document> {
    let v: Value = serde_json::from_str(text)?;
    parse_value(&v, opts)
}

pub fn parse_file(path: &Path, opts: ParseOptions) -> Result<Document> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text, opts).map_err(|e| match e {
        Error::Json(j) => Error::Schema(format!("{}: {j}", path.display())),
        other => other,
    })
}

pub fn bialgebra_to_value(a: &FiniteStarBialgebra) -> Value {
    let p = a.to_parts();
    let d = p.dim();
    let mut obj = Map::new();
    obj.insert("kind".into(), json!("bialgebra"));
    obj.insert("name".into(), json!(p.name));
    obj.insert("dim".into(), json!(d));
    obj.insert("labels".into(), json!(p.labels));
    obj.insert("mult".into(), cube_to(&p.mult, d));
    obj.insert("unit".into(), vector_to(&p.unit));
    obj.insert("coproduct".into(), cube_to(&p.coproduct, d));
    obj.insert("counit".into(), vector_to(&p.counit));
    obj.insert("involution".into(), matrix_to(&p.involution));
    if let Some(s) = &p.antipode {
        obj.insert("antipode".into(), matrix_to(s));
    }
    obj.insert("flags".into(), serde_json::to_value(p.flags).expect("flags serialize"));
    Value::Object(obj)
}

pub fn step_function_to_value(f: &StepFunction) -> Value {
    json!({
        "kind": "step_function",
        "breakpoints": f.breakpoints(),
        "values": f.values().iter().map(vector_to).collect::<Vec<_>>(),
        "noise_dim": f.noise_dim(),
    })
}

fn with_algebra(mut v: Value, algebra: &Option<FiniteStarBialgebra>) -> Value {
    if let (Some(a), Value::Object(obj)) = (algebra, &mut v) {
        obj.insert("algebra".into(), bialgebra_to_value(a));
    }
    v
}

pub fn to_value(doc: &Document) -> Value {
    match doc {
        Document::Bialgebra(a) => bialgebra_to_value(a),
        Document::Functional { algebra, functional } => with_algebra(
            json!({"kind": "functional", "values": vector_to(&functional.values())}),
            algebra,
        ),
        Document::StructureMap { algebra, map } => with_algebra(json!({"kind": "structure_map", "mats": matrices_to(map.mats())}), algebra),
        Document::SchurmannTriple { algebra, triple } => with_algebra(
            json!({
                "kind": "schurmann_triple",
                "gamma": vector_to(&triple.gamma.values()),
                "delta": triple.delta.iter().map(vector_to).collect::<Vec<_>>(),
                "rho": matrices_to(&triple.rho),
            }),
            algebra,
        ),
        Document::StepFunction(f) => step_function_to_value(f),
        Document::CpcTuple { algebra, tuple } => with_algebra(
            json!({
                "kind": "cpc_tuple",
                "rho": matrices_to(&tuple.rho),
                "d_mat": matrix_to(&tuple.d_mat),
                "xi": vector_to(&tuple.xi),
                "d_vec": vector_to(&tuple.d_vec),
                "e_vec": vector_to(&tuple.e_vec),
                "t": tuple.t,
            }),
            algebra,
        ),
        Document::Euclidean(e) => json!({
            "kind": "euclidean",
            "mu": e.mu(),
            "v": vector_to(e.v()),
            "V": matrix_to(e.big_v()),
        }),
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

pub fn report_to_value(report: &Report) -> Value {
    let checks: Map<String, Value> = report
        .checks
        .iter()
        .map(|c| {
            (
                c.name.clone(),
                json!({"residual": finite_or_string(c.residual), "tolerance": c.tolerance, "passed": c.passed}),
            )
        })
        .collect();
    json!({"passed": report.passed(), "checks": checks})
}

/// JSON has no infinities; they are written as strings.
pub fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn dilation_to_value(res: &DilationResult) -> Value {
    let mut residuals = Map::new();
    for c in &res.report.checks {
        residuals.insert(c.name.clone(), finite_or_string(c.residual));
    }
    json!({
        "kind": "dilation",
        "k0_dim": res.k0_dim,
        "noise_dim": res.noise_dim,
        "residuals": residuals,
        "passed": res.report.passed(),
        "tuple": to_value(&Document::CpcTuple { algebra: None, tuple: res.tuple.clone() }),
        "psi": matrices_to(res.psi.mats()),
    })
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub basis_label: String,
    pub t: f64,
    pub value: C64,
    pub method: String,
    /// Absent for routes without a truncation.
    pub tail_bound: Option<f64>,
}

pub const CSV_HEADER: [&str; 6] = ["basis_label", "t", "re", "im", "method", "tail_bound"];

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(out: W, rows: &[EvaluationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.basis_label.clone(),
            format_float(r.t),
            format_float(r.value.re),
            format_float(r.value.im),
            r.method.clone(),
            r.tail_bound.map(format_float).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[EvaluationRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_function_bialgebra, cyclic_table, s3_table};
    use crate::linalg::{re, real_vec};

    #[test]
    fn group_bialgebra_document() {
        let doc = parse_str(r#"{"kind": "group_bialgebra", "table": [[0,1],[1,0]]}"#, ParseOptions::default()).unwrap();
        let a = doc.algebra().unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.labels(), &["L0".to_string(), "L1".to_string()]);
    }

    #[test]
    fn step_function_document() {
        let doc = parse_str(r#"{"kind": "step_function", "breakpoints": [0,1], "values": [[[1,0]]]}"#, ParseOptions::default()).unwrap();
        let Document::StepFunction(f) = doc else { panic!("wrong kind") };
        assert_eq!(f.value_at(0.5)[0], re(1.0));
        assert_eq!(f.value_at(1.0)[0], re(0.0));
        let err = parse_str(
            r#"{"kind": "step_function", "breakpoints": [0,2,1], "values": [[[1,0]],[[2,0]]]}"#,
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("breakpoints not strictly increasing"));
    }

    #[test]
    fn errors_name_position_and_field() {
        let err = parse_str("{\"kind\": \"functional\",\n \"values\": [1, }", ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_str(r#"{"kind": "cpc_tuple", "rho": []}"#, ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("d_mat"), "{err}");
        let err = parse_str(r#"{"kind": "nonsense"}"#, ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("nonsense"));
    }

    #[test]
    fn invalid_bialgebra_names_the_axiom() {
        let a = build_function_bialgebra(&cyclic_table(2)).unwrap();
        let mut p = a.to_parts();
        *p.coproduct_mut(1, 0, 1) += 1e-3;
        let doc = bialgebra_to_value(&FiniteStarBialgebra::from_parts(p).unwrap());
        let err = parse_value(&doc, ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Axiom(ref m) if m.contains("coassociativity")), "{err}");
        let lenient = ParseOptions {
            allow_invalid: true,
            ..ParseOptions::default()
        };
        assert!(parse_value(&doc, lenient).is_ok());
    }

    #[test]
    fn round_trips_are_bit_exact() {
        let a = build_function_bialgebra(&s3_table()).unwrap();
        let text = to_json_string(&bialgebra_to_value(&a));
        let Document::Bialgebra(b) = parse_str(&text, ParseOptions::default()).unwrap() else { panic!() };
        assert_eq!(a.to_parts(), b.to_parts());
        assert_eq!(text, to_json_string(&bialgebra_to_value(&b)));

        let awkward = [0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-300, 6.02214076e23];
        let tuple = CPCTuple::new(
            vec![CMat::from_fn(2, 2, |i, j| C64::new(awkward[i + j], awkward[4 - i]))],
            CMat::from_fn(2, 1, |i, _| re(awkward[i + 2])),
            CVec::from_fn(2, |i, _| C64::new(awkward[i], -awkward[i + 1])),
            real_vec(&[0.7]),
            real_vec(&[1.0 / 7.0]),
            -0.3,
        )
        .unwrap();
        let doc = Document::CpcTuple { algebra: None, tuple: tuple.clone() };
        let text = to_json_string(&to_value(&doc));
        let Document::CpcTuple { tuple: back, .. } = parse_str(&text, ParseOptions::default()).unwrap() else { panic!() };
        assert_eq!(back, tuple);
    }

    #[test]
    fn keys_are_sorted() {
        let e = EuclideanElement::identity(1);
        let text = to_json_string(&to_value(&Document::Euclidean(e)));
        let positions: Vec<usize> = ["\"V\"", "\"kind\"", "\"mu\"", "\"v\""].iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
    }

    #[test]
    fn csv_tables() {
        assert_eq!(csv_string(&[]), "basis_label,t,re,im,method,tail_bound\n");
        let row = EvaluationRow {
            basis_label: "L1".into(),
            t: 1.0,
            value: re((-1.0f64).exp()),
            method: "semigroup".into(),
            tail_bound: None,
        };
        let text = csv_string(&[row.clone(), EvaluationRow { tail_bound: Some(0.5), ..row }]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "L1,1.0000000000000000e0,3.6787944117144233e-1,0.0000000000000000e0,semigroup,");
        assert!(lines[2].ends_with(",5.0000000000000000e-1"));
        let parsed: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, (-1.0f64).exp());
    }
}
