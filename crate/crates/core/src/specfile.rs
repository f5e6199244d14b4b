//! Metric spec files.
//!
//! A spec file is TOML. Either a builtin metric is named, or the metric is
//! given component by component over a chart box:
//!
//! ```toml
//! name = "conformally flat"
//!
//! [chart]
//! lo = [-1, -1, -1, -1]
//! hi = [1, 1, 1, 1]
//!
//! [metric]
//! g11 = "exp(x1)"
//! g22 = "exp(x1)"
//! g33 = "-exp(x1)"
//! g44 = "-exp(x1)"
//! ```
//!
//! Missing components are zero and `gJI` may stand in for `gIJ`; giving
//! both with different expressions is an error. An optional `[triple]`
//! table holds `J1`, `J2`, `J3` as 4×4 arrays of expression strings.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::builtin::Builtin;
use crate::error::{Error, Result};
use crate::expr::{ExprError, ScalarField, COORDS};
use crate::geometry::{ChartBounds, MetricSpec};
use crate::parahermitian::{EndoField, HyperTriple};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: Option<String>,
    builtin: Option<Spanned<String>>,
    chart: Option<Spanned<RawChart>>,
    metric: Option<Spanned<BTreeMap<String, Spanned<String>>>>,
    triple: Option<RawTriple>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    lo: Spanned<Vec<f64>>,
    hi: Spanned<Vec<f64>>,
}

type RawMatrix = Spanned<Vec<Spanned<Vec<Spanned<String>>>>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTriple {
    #[serde(rename = "J1")]
    j1: RawMatrix,
    #[serde(rename = "J2")]
    j2: RawMatrix,
    #[serde(rename = "J3")]
    j3: RawMatrix,
}

/// A parsed spec file.
#[derive(Debug, Clone)]
pub struct MetricSpecFile {
    pub name: String,
    pub metric: MetricSpec,
    pub triple: HyperTriple,
    /// The file contents, used for the report digest.
    pub text: String,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Error::SpecFile {
            line,
            column,
            message: message.into(),
        }
    }

    fn at(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        self.error(span.start, message)
    }

    /// Parses an expression string, reporting errors at their position
    /// inside the quoted literal.
    fn expression(&self, value: &Spanned<String>) -> Result<ScalarField> {
        ScalarField::parse(value.get_ref()).map_err(|e| {
            let offset = value.span().start + 1 + e.offset().unwrap_or(0);
            self.error(offset, expr_message(&e))
        })
    }
}

fn expr_message(e: &ExprError) -> String {
    format!("invalid expression: {e}")
}

fn component_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('g')?;
    let bytes = rest.as_bytes();
    if bytes.len() != 2 {
        return None;
    }
    let digit = |b: u8| (b'1'..=b'4').contains(&b).then(|| (b - b'1') as usize);
    Some((digit(bytes[0])?, digit(bytes[1])?))
}

fn canonical(field: &ScalarField) -> String {
    field.expr().display_with(&COORDS).to_string()
}

impl MetricSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let src = Source { text };
        let raw: RawSpec = toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            src.error(offset, e.message().to_string())
        })?;
        let bounds = raw.chart.as_ref().map(|c| chart_bounds(&src, c)).transpose()?;

        let metric = match (&raw.builtin, &raw.metric) {
            (Some(b), Some(m)) => {
                return Err(src.at(
                    m.span(),
                    format!("`builtin = \"{}\"` and a [metric] table are exclusive", b.get_ref()),
                ));
            }
            (None, None) => return Err(src.error(0, "expected `builtin` or a [metric] table")),
            (Some(b), None) => {
                let builtin = Builtin::parse(b.get_ref()).map_err(|e| src.at(b.span(), e.to_string()))?;
                let mut spec = builtin.metric().map_err(|e| src.at(b.span(), e.to_string()))?;
                if let Some(bounds) = bounds {
                    spec.bounds = bounds;
                }
                spec
            }
            (None, Some(m)) => {
                let Some(bounds) = bounds else {
                    return Err(src.at(m.span(), "an explicit metric needs a [chart] table"));
                };
                let name = raw.name.clone().unwrap_or_else(|| "metric".to_string());
                MetricSpec::from_upper(&name, metric_components(&src, m)?, bounds)
            }
        };
        let triple = match &raw.triple {
            Some(t) => HyperTriple::explicit([
                matrix(&src, &t.j1, "J1")?,
                matrix(&src, &t.j2, "J2")?,
                matrix(&src, &t.j3, "J3")?,
            ]),
            None => HyperTriple::Asd,
        };
        let name = raw
            .name
            .or_else(|| raw.builtin.as_ref().map(|b| b.get_ref().clone()))
            .unwrap_or_else(|| "metric".to_string());
        Ok(MetricSpecFile {
            name,
            metric,
            triple,
            text: text.to_string(),
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::SpecFile {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }
}

fn chart_bounds(src: &Source, chart: &Spanned<RawChart>) -> Result<ChartBounds> {
    let side = |v: &Spanned<Vec<f64>>| -> Result<[f64; 4]> {
        <[f64; 4]>::try_from(v.get_ref().as_slice()).map_err(|_| src.at(v.span(), "expected four numbers"))
    };
    let c = chart.get_ref();
    let bounds = ChartBounds {
        lo: side(&c.lo)?,
        hi: side(&c.hi)?,
    };
    if bounds.is_empty() {
        return Err(src.at(chart.span(), "chart box is empty: every lo must be below its hi"));
    }
    Ok(bounds)
}

fn metric_components(
    src: &Source,
    table: &Spanned<BTreeMap<String, Spanned<String>>>,
) -> Result<[[ScalarField; 4]; 4]> {
    let mut upper: [[Option<(ScalarField, String)>; 4]; 4] = Default::default();
    for (key, value) in table.get_ref() {
        let Some((i, j)) = component_key(key) else {
            return Err(src.at(
                value.span(),
                format!("unknown metric component `{key}` (expected g11 .. g44)"),
            ));
        };
        let (a, b) = (i.min(j), i.max(j));
        let field = src.expression(value)?;
        if let Some((prev, prev_key)) = &upper[a][b] {
            if canonical(prev) != canonical(&field) {
                return Err(src.at(
                    value.span(),
                    format!("`{key}` conflicts with `{prev_key}`: the metric must be symmetric"),
                ));
            }
            continue;
        }
        upper[a][b] = Some((field, key.clone()));
    }
    Ok(upper.map(|row| row.map(|c| c.map_or_else(|| ScalarField::constant(0.0, 4), |(f, _)| f))))
}

fn matrix(src: &Source, raw: &RawMatrix, name: &str) -> Result<EndoField> {
    let rows = raw.get_ref();
    if rows.len() != 4 {
        return Err(src.at(raw.span(), format!("{name} must have four rows")));
    }
    let mut out: Vec<[ScalarField; 4]> = Vec::with_capacity(4);
    for row in rows {
        if row.get_ref().len() != 4 {
            return Err(src.at(row.span(), format!("{name} rows must have four entries")));
        }
        let mut cols = Vec::with_capacity(4);
        for value in row.get_ref() {
            cols.push(src.expression(value)?);
        }
        out.push(cols.try_into().expect("four entries"));
    }
    Ok(out.try_into().expect("four rows"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{metric_at, Point4};

    const CONFORMAL: &str = r#"
name = "conformal"

[chart]
lo = [-1, -1, -1, -1]
hi = [1, 1, 1, 1]

[metric]
g11 = "exp(x1)"
g22 = "exp(x1)"
g33 = "-exp(x1)"
g44 = "-exp(x1)"
"#;

    fn err(text: &str) -> (usize, usize, String) {
        match MetricSpecFile::parse(text).unwrap_err() {
            Error::SpecFile { line, column, message } => (line, column, message),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn explicit_metric() {
        let f = MetricSpecFile::parse(CONFORMAL).unwrap();
        assert_eq!(f.name, "conformal");
        let g = metric_at(&f.metric, &Point4::origin()).unwrap().g;
        assert_eq!(g[(2, 2)], -1.0);
        assert_eq!(g[(0, 1)], 0.0);
        assert!(matches!(f.triple, HyperTriple::Asd));
    }

    #[test]
    fn builtin_with_chart_override() {
        let f = MetricSpecFile::parse(
            "builtin = \"constcurv:1\"\n[chart]\nlo = [-0.2,-0.2,-0.2,-0.2]\nhi = [0.2,0.2,0.2,0.2]\n",
        )
        .unwrap();
        assert_eq!(f.metric.bounds.hi, [0.2; 4]);
        assert_eq!(f.name, "constcurv:1");
    }

    #[test]
    fn lower_triangle_may_stand_in() {
        let text = CONFORMAL.replace("g22 = \"exp(x1)\"", "g22 = \"exp(x1)\"\ng21 = \"0.1\"");
        let f = MetricSpecFile::parse(&text).unwrap();
        assert_eq!(metric_at(&f.metric, &Point4::origin()).unwrap().g[(0, 1)], 0.1);
    }

    #[test]
    fn symmetry_conflict_is_rejected() {
        let text = CONFORMAL.replace("g22 = \"exp(x1)\"", "g22 = \"exp(x1)\"\ng12 = \"0.1\"\ng21 = \"0.2\"");
        let (line, _, message) = err(&text);
        assert!(message.contains("conflicts"), "{message}");
        assert_eq!(line, 12);
    }

    #[test]
    fn expression_errors_carry_position() {
        let text = CONFORMAL.replace("g22 = \"exp(x1)\"", "g22 = \"exp(x1) + y\"");
        let (line, column, message) = err(&text);
        assert_eq!((line, column), (10, 18), "{message}");
    }

    #[test]
    fn toml_syntax_errors_carry_position() {
        let (line, _, _) = err("name = \"x\"\n[chart\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn structural_errors() {
        assert!(err("name = \"x\"\n").2.contains("builtin"));
        assert!(err("[metric]\ng11 = \"1\"\n").2.contains("chart"));
        assert!(err(&CONFORMAL.replace("g11", "g15")).2.contains("unknown"));
        assert!(err(&CONFORMAL.replace("hi = [1, 1, 1, 1]", "hi = [1, 1, 1]"))
            .2
            .contains("four"));
        assert!(err("builtin = \"sphere\"\n").2.contains("sphere"));
    }

    #[test]
    fn explicit_triple() {
        let k = crate::bivector::s_endos();
        let row = |m: &nalgebra::Matrix4<f64>, r: usize| {
            format!(
                "[{}]",
                (0..4)
                    .map(|c| format!("\"{}\"", m[(r, c)]))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        };
        let block =
            |m: &nalgebra::Matrix4<f64>| format!("[{}]", (0..4).map(|r| row(m, r)).collect::<Vec<_>>().join(", "));
        let text = format!(
            "builtin = \"flat\"\n[triple]\nJ1 = {}\nJ2 = {}\nJ3 = {}\n",
            block(&k[0]),
            block(&k[1]),
            block(&k[2])
        );
        let f = MetricSpecFile::parse(&text).unwrap();
        let r = crate::parahermitian::verify_triple(&f.metric, &f.triple, 3, 1).unwrap();
        assert!(r.max() < 1e-12);
    }
}
