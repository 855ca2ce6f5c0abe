//! Problem files: TOML naming an operator, a start point, a schedule and
//! solver settings.
//!
//! ```toml
//! name = "skew"
//! x0 = [0.0, 0.0]
//! schedule = "sqrt"            # sqrt[:SCALE] | harmonic | power:EXP[:SCALE] | geometric:RATIO[:SCALE]
//!
//! [operator]
//! kind = "affine"              # identity | zero | constant | affine | subgradient | catalog | sum | shift | scale
//! matrix = [[0.0, -1.0], [1.0, 0.0]]
//! offset = [1.0, 0.0]
//!
//! [config]
//! max_evals = 500000
//! ```

use std::fmt;
use std::ops::Range;
use std::path::Path;

use regpath::catalog;
use regpath::operators::{
    affine_map, constant_map, identity_map, scale_map, shift_map, subgradient_map, sum_map, zero_map, ConvexFn,
    ConvexTerm,
};
use regpath::{nalgebra::DMatrix, Op, Schedule, SolveConfig, Vector};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub source: String,
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: field `{}`: {}", self.source, line, self.field, self.message),
            None => write!(f, "{}: field `{}`: {}", self.source, self.field, self.message),
        }
    }
}

impl std::error::Error for SpecError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: Option<String>,
    x0: Option<Spanned<Vec<f64>>>,
    schedule: Option<Spanned<String>>,
    operator: Spanned<OperatorSpec>,
    config: Option<Spanned<SolveConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity { dim: usize },
    Zero { dim: usize },
    Constant { value: Vec<f64> },
    Affine { matrix: Vec<Vec<f64>>, offset: Option<Vec<f64>> },
    Subgradient { dim: usize, terms: Vec<TermSpec> },
    Catalog { name: String },
    Sum { terms: Vec<OperatorSpec> },
    Shift { by: Vec<f64>, inner: Box<OperatorSpec> },
    Scale { factor: f64, inner: Box<OperatorSpec> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TermSpec {
    Quadratic { matrix: Vec<Vec<f64>>, linear: Option<Vec<f64>> },
    Norm { weight: f64 },
    Huber { weight: f64, delta: f64 },
    Max { weight: f64 },
}

/// A parsed, validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub op: Op,
    pub x0: Vector,
    pub schedule: Schedule,
    pub schedule_name: String,
    pub config: SolveConfig,
}

struct Ctx<'a> {
    source: &'a str,
    text: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Option<&Range<usize>>, field: &str, message: impl Into<String>) -> SpecError {
        SpecError {
            source: self.source.to_string(),
            line: span.map(|s| self.line_of(s)),
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub fn load(path: &Path) -> Result<Problem, SpecError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| SpecError {
        source: source.clone(),
        line: None,
        field: "-".into(),
        message: e.to_string(),
    })?;
    parse(&text, &source)
}

pub fn parse(text: &str, source: &str) -> Result<Problem, SpecError> {
    let ctx = Ctx { source, text };
    let raw: RawSpec = toml::from_str(text).map_err(|e| {
        let field = e.message().split('`').nth(1).unwrap_or("-").to_string();
        ctx.err(e.span().as_ref(), &field, e.message().trim())
    })?;

    let op_span = raw.operator.span();
    let (op, fixture_x0) =
        build_operator(raw.operator.get_ref(), "operator").map_err(|(field, msg)| ctx.err(Some(&op_span), &field, msg))?;

    let x0 = match (&raw.x0, fixture_x0) {
        (Some(x0), _) => {
            let v = Vector::from_vec(x0.get_ref().clone());
            if v.len() != op.dim() {
                return Err(ctx.err(
                    Some(&x0.span()),
                    "x0",
                    format!("has {} entries but the operator acts on R^{}", v.len(), op.dim()),
                ));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(ctx.err(Some(&x0.span()), "x0", "entries must be finite"));
            }
            v
        }
        (None, Some(v)) => v,
        (None, None) => return Err(ctx.err(None, "x0", "missing (required unless the operator is a catalog fixture)")),
    };

    let (schedule, schedule_name) = match &raw.schedule {
        Some(s) => {
            let sched = Schedule::parse(s.get_ref()).map_err(|e| ctx.err(Some(&s.span()), "schedule", e.to_string()))?;
            (sched, s.get_ref().clone())
        }
        None => (Schedule::sqrt(), "sqrt".to_string()),
    };
    if let Err(e) = schedule.ensure_valid() {
        let span = raw.schedule.as_ref().map(|s| s.span());
        return Err(ctx.err(span.as_ref(), "schedule", e.to_string()));
    }

    let config = match raw.config {
        Some(c) => {
            let span = c.span();
            let cfg = c.into_inner();
            cfg.validate().map_err(|e| ctx.err(Some(&span), "config", e.to_string()))?;
            cfg
        }
        None => SolveConfig::default(),
    };

    Ok(Problem {
        name: raw.name.unwrap_or_else(|| default_name(source)),
        op,
        x0,
        schedule,
        schedule_name,
        config,
    })
}

fn default_name(source: &str) -> String {
    Path::new(source)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| source.to_string())
}

type BuildError = (String, String);

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, BuildError> {
    let n = rows.len();
    if n == 0 {
        return Err((field.into(), "matrix has no rows".into()));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err((field.into(), format!("row {i} has {} entries, expected {n} (square matrix)", row.len())));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn sized(v: &[f64], dim: usize, field: &str) -> Result<Vector, BuildError> {
    if v.len() != dim {
        return Err((field.into(), format!("has {} entries, expected {dim}", v.len())));
    }
    Ok(Vector::from_vec(v.to_vec()))
}

fn core<T>(r: regpath::Result<T>, field: &str) -> Result<T, BuildError> {
    r.map_err(|e| (field.to_string(), e.to_string()))
}

/// Builds the operator; a catalog reference also yields its start point.
pub fn build_operator(spec: &OperatorSpec, field: &str) -> Result<(Op, Option<Vector>), BuildError> {
    let f = |name: &str| format!("{field}.{name}");
    let op = match spec {
        OperatorSpec::Identity { dim } | OperatorSpec::Zero { dim } if *dim == 0 => {
            return Err((f("dim"), "must be positive".into()))
        }
        OperatorSpec::Identity { dim } => identity_map(*dim),
        OperatorSpec::Zero { dim } => zero_map(*dim),
        OperatorSpec::Constant { value } => core(constant_map(Vector::from_vec(value.clone())), &f("value"))?,
        OperatorSpec::Affine { matrix: rows, offset } => {
            let m = matrix(rows, &f("matrix"))?;
            let b = match offset {
                Some(b) => sized(b, m.nrows(), &f("offset"))?,
                None => Vector::zeros(m.nrows()),
            };
            core(affine_map(m, b), &f("matrix"))?
        }
        OperatorSpec::Subgradient { dim, terms } => {
            let mut out = Vec::with_capacity(terms.len());
            for (i, t) in terms.iter().enumerate() {
                let tf = format!("{field}.terms[{i}]");
                out.push(match t {
                    TermSpec::Quadratic { matrix: rows, linear } => {
                        let m = matrix(rows, &format!("{tf}.matrix"))?;
                        if m.nrows() != *dim {
                            return Err((format!("{tf}.matrix"), format!("is {0}x{0}, expected {dim}x{dim}", m.nrows())));
                        }
                        let linear = match linear {
                            Some(b) => sized(b, *dim, &format!("{tf}.linear"))?,
                            None => Vector::zeros(*dim),
                        };
                        ConvexTerm::Quadratic { matrix: m, linear }
                    }
                    TermSpec::Norm { weight } => ConvexTerm::Norm { weight: *weight },
                    TermSpec::Huber { weight, delta } => ConvexTerm::Huber { weight: *weight, delta: *delta },
                    TermSpec::Max { weight } => ConvexTerm::MaxCoord { weight: *weight },
                });
            }
            core(subgradient_map(&ConvexFn::new(*dim, out)), &f("terms"))?
        }
        OperatorSpec::Catalog { name } => {
            let fx = catalog::fixture(name).ok_or_else(|| (f("name"), format!("no catalog fixture named {name:?}")))?;
            return Ok((fx.op, Some(fx.x0)));
        }
        OperatorSpec::Sum { terms } => {
            let mut iter = terms.iter().enumerate();
            let (_, first) = iter.next().ok_or_else(|| (f("terms"), "needs at least one operator".to_string()))?;
            let mut acc = build_operator(first, &format!("{field}.terms[0]"))?.0;
            for (i, t) in iter {
                let next = build_operator(t, &format!("{field}.terms[{i}]"))?.0;
                acc = core(sum_map(acc, next), &format!("{field}.terms[{i}]"))?;
            }
            acc
        }
        OperatorSpec::Shift { by, inner } => {
            let (op, _) = build_operator(inner, &f("inner"))?;
            let s = sized(by, op.dim(), &f("by"))?;
            core(shift_map(op, s), &f("by"))?
        }
        OperatorSpec::Scale { factor, inner } => {
            let (op, _) = build_operator(inner, &f("inner"))?;
            core(scale_map(op, *factor), &f("factor"))?
        }
    };
    Ok((op, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_problem_parses() {
        let p = parse(
            "name = \"skew\"\nx0 = [0.0, 0.0]\n[operator]\nkind = \"affine\"\nmatrix = [[0.0, -1.0], [1.0, 0.0]]\noffset = [1.0, 0.0]\n",
            "skew.toml",
        )
        .unwrap();
        assert_eq!(p.name, "skew");
        assert_eq!(p.op.dim(), 2);
        assert_eq!(p.schedule_name, "sqrt");
        assert_eq!(p.config, SolveConfig::default());
    }

    #[test]
    fn catalog_reference_supplies_start() {
        let p = parse("[operator]\nkind = \"catalog\"\nname = \"constant-2d\"\n", "c.toml").unwrap();
        assert_eq!(p.x0.as_slice(), &[1.0, 1.0]);
        assert_eq!(p.name, "c");
    }

    #[test]
    fn nested_combinators_parse() {
        let text = r#"
x0 = [1.0]
schedule = "power:0.6"
[operator]
kind = "sum"
terms = [
  { kind = "identity", dim = 1 },
  { kind = "scale", factor = 2.0, inner = { kind = "constant", value = [1.0] } },
]
[config]
max_evals = 1000
"#;
        let p = parse(text, "s.toml").unwrap();
        assert_eq!(p.op.eval(&Vector::from_vec(vec![1.0]))[0], 3.0);
        assert_eq!(p.config.max_evals, 1000);
    }

    #[test]
    fn dimension_mismatch_cites_x0_line() {
        let e = parse("\n\nx0 = [1.0, 2.0, 3.0]\n[operator]\nkind = \"identity\"\ndim = 2\n", "p.toml").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field, "x0");
    }

    #[test]
    fn non_monotone_matrix_is_rejected_with_field() {
        let e = parse("x0 = [0.0]\n[operator]\nkind = \"affine\"\nmatrix = [[-1.0]]\n", "p.toml").unwrap_err();
        assert_eq!(e.field, "operator.matrix");
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains(">= 0"), "{}", e.message);
    }

    #[test]
    fn syntax_and_unknown_fields_are_located() {
        let e = parse("x0 = [1.0\n", "p.toml").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse("x0 = [1.0]\nbogus = 1\n[operator]\nkind = \"identity\"\ndim = 1\n", "p.toml").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.field, "bogus");
    }

    #[test]
    fn bad_schedule_is_rejected() {
        let e = parse("x0 = [1.0]\nschedule = \"harmonic\"\n[operator]\nkind = \"identity\"\ndim = 1\n", "p.toml")
            .unwrap_err();
        assert_eq!(e.field, "schedule");
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("rho"), "{}", e.message);
    }

    #[test]
    fn bad_config_is_rejected() {
        let e = parse("x0 = [1.0]\n[operator]\nkind = \"identity\"\ndim = 1\n[config]\nmax_evals = 0\n", "p.toml")
            .unwrap_err();
        assert_eq!(e.field, "config");
    }
}
