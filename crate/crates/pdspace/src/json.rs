//! JSON encodings of pairs, points, diagrams, matchings and approximations.
//!
//! Reals are written with 17 significant digits so every emitted document
//! re-parses to the same values. Non-finite reals are written as the strings
//! `"inf"`, `"-inf"` and `"nan"`.

use std::io;
use std::sync::Arc;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};

use pdspace_core::gh::PairApproximation;
use pdspace_core::metric_pair::FiniteSpace;
use pdspace_core::{Diagram, Exponent, Matching, MetricPair, PairKind, Point};

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("{source_name}: line {line}, column {column}: {message}")]
    Syntax {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] pdspace_core::Error),
}

pub type Result<T> = std::result::Result<T, JsonError>;

fn schema<T>(msg: impl Into<String>) -> Result<T> {
    Err(JsonError::Schema(msg.into()))
}

/// Parses a document, reporting syntax errors by line and column.
pub fn parse(text: &str, source_name: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| JsonError::Syntax {
        source_name: source_name.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact encoding with sorted keys and 17 significant digits.
pub fn to_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17);
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Reads a real, accepting the strings written by [`num`].
pub fn real(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| schema(format!("{what}: not a real")), Ok),
        Value::String(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            _ => schema(format!("{what}: expected a number, got \"{s}\"")),
        },
        _ => schema(format!("{what}: expected a number")),
    }
}

fn index(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|i| i as usize)
        .map_or_else(|| schema(format!("{what}: expected a non-negative integer")), Ok)
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().map_or_else(|| schema(format!("{what}: expected an array")), Ok)
}

fn field<'a>(v: &'a Value, key: &str, what: &str) -> Result<&'a Value> {
    v.get(key).map_or_else(|| schema(format!("{what}: missing field \"{key}\"")), Ok)
}

fn reals(v: &Value, what: &str) -> Result<Vec<f64>> {
    array(v, what)?.iter().map(|x| real(x, what)).collect()
}

pub fn exponent_to_json(p: Exponent) -> Value {
    match p {
        Exponent::Infinity => json!("inf"),
        Exponent::Finite(p) => num(p),
    }
}

/// A number, `"inf"` or a rational string such as `"3/2"`.
pub fn exponent_from_json(v: &Value) -> Result<Exponent> {
    match v {
        Value::Number(n) => Ok(Exponent::finite(n.as_f64().unwrap_or(f64::NAN))?),
        Value::String(s) => Ok(s.parse()?),
        _ => schema("p: expected a number or \"inf\""),
    }
}

pub fn pair_from_json(v: &Value) -> Result<MetricPair> {
    let kind = field(v, "kind", "pair")?
        .as_str()
        .map_or_else(|| schema("pair: \"kind\" must be a string"), Ok)?;
    let half = || -> Result<usize> { index(field(v, "n", kind)?, "n") };
    let pair = match kind {
        "euclidean-delta" => MetricPair::new(PairKind::EuclideanDelta { n: half()? })?,
        "euclidean-halfplane-delta" => MetricPair::new(PairKind::EuclideanHalfplaneDelta { n: half()? })?,
        "euclidean-quadrant-delta" => MetricPair::new(PairKind::EuclideanQuadrantDelta { n: half()? })?,
        "ray-origin" => MetricPair::ray(),
        "linf-plane-delta" => MetricPair::linf_plane(),
        "finite" => {
            let matrix = array(field(v, "D", kind)?, "D")?
                .iter()
                .map(|row| reals(row, "D"))
                .collect::<Result<Vec<_>>>()?;
            let subset = array(field(v, "A", kind)?, "A")?
                .iter()
                .map(|i| index(i, "A"))
                .collect::<Result<Vec<_>>>()?;
            let semi = v.get("semimetric").and_then(Value::as_bool).unwrap_or(false);
            let space = if semi {
                FiniteSpace::semimetric(matrix, subset)?
            } else {
                FiniteSpace::new(matrix, subset)?
            };
            MetricPair::finite(space)
        }
        "disjoint-union" => {
            let left = pair_from_json(field(v, "left", kind)?)?;
            let right = pair_from_json(field(v, "right", kind)?)?;
            let p = v.get("p").map(exponent_from_json).transpose()?.unwrap_or(Exponent::TWO);
            MetricPair::disjoint_union(left, right, p)
        }
        other => return schema(format!("pair: unknown kind \"{other}\"")),
    };
    Ok(match v.get("name").and_then(Value::as_str) {
        Some(name) => pair.with_name(name),
        None => pair,
    })
}

pub fn pair_to_json(pair: &MetricPair) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(pair.kind_name()));
    match pair.kind() {
        PairKind::EuclideanDelta { n }
        | PairKind::EuclideanHalfplaneDelta { n }
        | PairKind::EuclideanQuadrantDelta { n } => {
            m.insert("n".into(), json!(n));
        }
        PairKind::RayOrigin | PairKind::LinfPlaneDelta => {}
        PairKind::Finite(space) => {
            let d: Vec<Value> = space
                .to_matrix()
                .iter()
                .map(|row| Value::Array(row.iter().map(|&x| num(x)).collect()))
                .collect();
            m.insert("D".into(), Value::Array(d));
            m.insert("A".into(), json!(space.subset()));
            if !space.is_metric() {
                m.insert("semimetric".into(), json!(true));
            }
        }
        PairKind::DisjointUnion { left, right, p } => {
            m.insert("left".into(), pair_to_json(left));
            m.insert("right".into(), pair_to_json(right));
            m.insert("p".into(), exponent_to_json(*p));
        }
    }
    if let Some(name) = pair.name() {
        m.insert("name".into(), json!(name));
    }
    Value::Object(m)
}

pub fn point_from_json(pair: &MetricPair, v: &Value) -> Result<Point> {
    let x = match pair.kind() {
        PairKind::RayOrigin => match v {
            Value::Array(_) => Point::Coords(reals(v, "point")?),
            _ => Point::scalar(real(v, "point")?),
        },
        PairKind::Finite(_) => Point::Index(index(v, "point")?),
        PairKind::DisjointUnion { left, right, .. } => match (v.get("left"), v.get("right")) {
            (Some(x), None) => Point::Left(Box::new(point_from_json(left, x)?)),
            (None, Some(y)) => Point::Right(Box::new(point_from_json(right, y)?)),
            _ => return schema("point: union points are {\"left\": ...} or {\"right\": ...}"),
        },
        _ => Point::Coords(reals(v, "point")?),
    };
    pair.validate_point(&x)?;
    Ok(x)
}

pub fn point_to_json(x: &Point) -> Value {
    match x {
        Point::Coords(c) if c.len() == 1 => num(c[0]),
        Point::Coords(c) => Value::Array(c.iter().map(|&t| num(t)).collect()),
        Point::Index(i) => json!(i),
        Point::Left(x) => json!({ "left": point_to_json(x) }),
        Point::Right(y) => json!({ "right": point_to_json(y) }),
    }
}

/// Diagram points over a known pair. Points on `A` are dropped with a
/// warning on standard error.
pub fn points_from_json(pair: &Arc<MetricPair>, v: &Value, what: &str) -> Result<Diagram> {
    let points = array(v, what)?
        .iter()
        .map(|x| point_from_json(pair, x))
        .collect::<Result<Vec<_>>>()?;
    let (d, dropped) = Diagram::ingest(pair.clone(), points)?;
    if dropped > 0 {
        eprintln!("warning: {what}: dropped {dropped} point(s) lying on A");
    }
    Ok(d)
}

/// `{"pair": ..., "points": [...]}`.
pub fn diagram_from_json(v: &Value) -> Result<Diagram> {
    let pair = Arc::new(pair_from_json(field(v, "pair", "diagram")?)?);
    points_from_json(&pair, field(v, "points", "diagram")?, "diagram")
}

pub fn diagram_points_json(d: &Diagram) -> Value {
    Value::Array(d.points().iter().map(point_to_json).collect())
}

pub fn diagram_to_json(d: &Diagram) -> Value {
    json!({ "pair": pair_to_json(d.pair()), "points": diagram_points_json(d) })
}

pub fn matching_to_json(m: &Matching) -> Value {
    json!({
        "pairs": m.pairs.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
        "sigma_to_A": m.sigma_to_a,
        "tau_to_A": m.tau_to_a,
        "p": exponent_to_json(m.p),
        "cost": num(m.cost),
    })
}

pub fn matching_from_json(v: &Value) -> Result<Matching> {
    let idx = |key: &str| -> Result<Vec<usize>> {
        array(field(v, key, "matching")?, key)?.iter().map(|i| index(i, key)).collect()
    };
    let pairs = array(field(v, "pairs", "matching")?, "pairs")?
        .iter()
        .map(|ij| match array(ij, "pairs")?.as_slice() {
            [i, j] => Ok((index(i, "pairs")?, index(j, "pairs")?)),
            _ => schema("pairs: entries are [i, j]"),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Matching {
        pairs,
        sigma_to_a: idx("sigma_to_A")?,
        tau_to_a: idx("tau_to_A")?,
        p: exponent_from_json(field(v, "p", "matching")?)?,
        cost: real(field(v, "cost", "matching")?, "cost")?,
    })
}

/// `{"source", "target", "map": [[x, f(x)], ...], "eps", "R"}` with an
/// optional `"target_sample"`.
pub fn approximation_from_json(v: &Value) -> Result<PairApproximation> {
    let source = Arc::new(pair_from_json(field(v, "source", "approximation")?)?);
    let target = Arc::new(pair_from_json(field(v, "target", "approximation")?)?);
    let map = array(field(v, "map", "approximation")?, "map")?
        .iter()
        .map(|xy| match array(xy, "map")?.as_slice() {
            [x, y] => Ok((point_from_json(&source, x)?, point_from_json(&target, y)?)),
            _ => schema("map: entries are [source point, target point]"),
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = real(field(v, "eps", "approximation")?, "eps")?;
    let radius = real(field(v, "R", "approximation")?, "R")?;
    let apx = PairApproximation::new(source, target.clone(), map, eps, radius)?;
    match v.get("target_sample") {
        Some(s) => {
            let sample = array(s, "target_sample")?
                .iter()
                .map(|y| point_from_json(&target, y))
                .collect::<Result<Vec<_>>>()?;
            Ok(apx.with_target_sample(sample)?)
        }
        None => Ok(apx),
    }
}

pub fn approximation_to_json(apx: &PairApproximation) -> Value {
    let mut v = json!({
        "source": pair_to_json(&apx.source),
        "target": pair_to_json(&apx.target),
        "map": apx.map.iter().map(|(x, y)| json!([point_to_json(x), point_to_json(y)])).collect::<Vec<_>>(),
        "eps": num(apx.eps),
        "R": num(apx.radius),
    });
    if !apx.target_sample.is_empty() {
        v["target_sample"] = Value::Array(apx.target_sample.iter().map(point_to_json).collect());
    }
    v
}
