//! Scenario files: JSON descriptions of a foliated space(time) and its grids.
//!
//! ```json
//! {
//!   "name": "warped_circle",
//!   "n": 1,
//!   "L": 16,
//!   "circumference": ["2*pi"],
//!   "spin_structure": ["antiperiodic"],
//!   "metric": { "kind": "constant_diagonal", "scale": ["1 + 0.3*sin(t)"] },
//!   "lapse": { "kind": "time_only", "expr": "1", "bounds": [0.5, 2] },
//!   "time": { "kind": "circle", "T_per": "2*pi", "Nt": 16, "spin_structure": "antiperiodic" },
//!   "signature": "riemannian",
//!   "algebra": ["cos(x1)"],
//!   "time_function": "cos(t)"
//! }
//! ```
//!
//! `metric.scale` lists the frame scales `a_j` (the metric is `diag(a_j^2)`).
//! Interval time domains use `"range": [T0, T1]` instead of `T_per`. Numeric
//! fields accept either numbers or constant expressions. Optional fields:
//! `circumference` (default `2*pi` per axis), `lapse.bounds`, `time.spin_structure`
//! (default antiperiodic), `algebra` (default `cos(x1)`), `time_function`
//! (default `cos(t)`), `step` (centered-difference step for `d/dt`, default
//! `1e-3` times the time scale), `resolutions` (list of `[L, Nt]` pairs used by
//! the verification suite) and `oracle` (default true; false skips dense
//! eigensolves).

use crate::assembler::TimeGrid;
use crate::clifford::{build_odd_rep, CliffordRep, Signature, SignatureKind};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lattice::{
    LapseFamily, LapseKind, MetricFamily, MetricKind, SpatialGrid, SpinStructure, TimeDerivative,
    TimeDomain,
};
use serde_json::{json, Map, Value};
use std::path::Path;

const BUNDLED: &[(&str, &str)] = &[
    ("flat_t2_riemannian", include_str!("../scenarios/flat_t2_riemannian.json")),
    ("flat_t2_lorentzian", include_str!("../scenarios/flat_t2_lorentzian.json")),
    ("warped_circle", include_str!("../scenarios/warped_circle.json")),
    ("exponential", include_str!("../scenarios/exponential.json")),
    ("torus3_identities", include_str!("../scenarios/torus3_identities.json")),
    ("lapse_circle", include_str!("../scenarios/lapse_circle.json")),
];

#[derive(Debug, Clone)]
pub struct TimeSpec {
    pub domain: TimeDomain,
    pub nt: usize,
    pub spin: SpinStructure,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub points: usize,
    pub circumference: Vec<f64>,
    pub spin: Vec<SpinStructure>,
    pub metric_kind: MetricKind,
    pub metric_scale: Vec<Expr>,
    pub lapse_kind: LapseKind,
    pub lapse_expr: Expr,
    pub lapse_bounds: Option<(f64, f64)>,
    pub time: TimeSpec,
    pub signature: Signature,
    pub algebra: Vec<Expr>,
    pub time_function: Expr,
    pub step: Option<f64>,
    pub resolutions: Vec<(usize, usize)>,
    pub oracle: bool,
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: &str) -> Result<Self> {
        match v.as_object() {
            Some(map) => Ok(Obj {
                map,
                path: path.to_string(),
            }),
            None => Err(Error::input(path, "expected an object")),
        }
    }

    fn field(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    /// `null` counts as absent.
    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn req(&self, key: &str) -> Result<&'a Value> {
        self.get(key)
            .ok_or_else(|| Error::input(self.field(key), "missing required field"))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.req(key)?;
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::input(self.field(key), format!("expected a nonnegative integer, got {v}")))
    }

    fn string(&self, key: &str) -> Result<&'a str> {
        let v = self.req(key)?;
        v.as_str()
            .ok_or_else(|| Error::input(self.field(key), format!("expected a string, got {v}")))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.map.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::input(self.field(k), "unknown field"));
            }
        }
        Ok(())
    }
}

fn number(v: &Value, field: &str) -> Result<f64> {
    if let Some(x) = v.as_f64() {
        return Ok(x);
    }
    if let Some(s) = v.as_str() {
        let e = Expr::parse(s, 0).map_err(|e| e.within(field))?;
        return Ok(e.eval(0.0, &[]));
    }
    Err(Error::input(field, format!("expected a number or constant expression, got {v}")))
}

fn expr(v: &Value, field: &str, axes: usize) -> Result<Expr> {
    if let Some(x) = v.as_f64() {
        return Ok(Expr::constant(x));
    }
    match v.as_str() {
        Some(s) => Expr::parse(s, axes).map_err(|e| e.within(field)),
        None => Err(Error::input(field, format!("expected an expression string, got {v}"))),
    }
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::input(field, format!("expected an array, got {v}")))
}

fn spin(v: &Value, field: &str) -> Result<SpinStructure> {
    match v.as_str() {
        Some("periodic") => Ok(SpinStructure::Periodic),
        Some("antiperiodic") => Ok(SpinStructure::Antiperiodic),
        _ => Err(Error::input(field, format!("expected \"periodic\" or \"antiperiodic\", got {v}"))),
    }
}

pub fn parse_signature(s: &str) -> Option<Signature> {
    match s {
        "riemannian" => Some(Signature::new(SignatureKind::Riemannian)),
        "lorentzian" => Some(Signature::new(SignatureKind::Lorentzian)),
        _ => None,
    }
}

fn spin_name(s: SpinStructure) -> &'static str {
    match s {
        SpinStructure::Periodic => "periodic",
        SpinStructure::Antiperiodic => "antiperiodic",
    }
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v)
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Names of the scenarios shipped with the crate.
    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|b| b.0).collect()
    }

    pub fn bundled(name: &str) -> Option<Scenario> {
        BUNDLED
            .iter()
            .find(|b| b.0 == name)
            .map(|b| Self::from_json_str(b.1).expect("bundled scenario parses"))
    }

    pub fn from_value(v: &Value) -> Result<Scenario> {
        let root = Obj::new(v, "")?;
        root.check_keys(&[
            "name", "description", "n", "L", "circumference", "spin_structure", "metric", "lapse",
            "time", "signature", "algebra", "time_function", "step", "resolutions", "oracle",
        ])?;
        let name = match root.get("name") {
            Some(_) => root.string("name")?.to_string(),
            None => "scenario".to_string(),
        };
        let n = root.usize("n")?;
        if n == 0 || n % 2 == 0 {
            return Err(Error::input("n", format!("spatial dimension must be odd and positive, got {n}")));
        }
        let points = root.usize("L")?;
        let circumference = match root.get("circumference") {
            None => vec![2.0 * std::f64::consts::PI; n],
            Some(c) => {
                let items = array(c, "circumference")?;
                if items.len() != n {
                    return Err(Error::input("circumference", format!("expected {n} entries")));
                }
                items
                    .iter()
                    .enumerate()
                    .map(|(i, x)| number(x, &format!("circumference[{i}]")))
                    .collect::<Result<_>>()?
            }
        };
        let spins = array(root.req("spin_structure")?, "spin_structure")?;
        if spins.len() != n {
            return Err(Error::input("spin_structure", format!("expected {n} entries")));
        }
        let spin_list = spins
            .iter()
            .enumerate()
            .map(|(i, s)| spin(s, &format!("spin_structure[{i}]")))
            .collect::<Result<Vec<_>>>()?;

        let metric = Obj::new(root.req("metric")?, "metric")?;
        metric.check_keys(&["kind", "scale"])?;
        let metric_kind = match metric.string("kind")? {
            "constant_diagonal" => MetricKind::ConstantDiagonal,
            "diagonal_field" => MetricKind::DiagonalField,
            other => {
                return Err(Error::input(
                    "metric.kind",
                    format!("expected constant_diagonal or diagonal_field, got {other:?}"),
                ))
            }
        };
        let scales = array(metric.req("scale")?, "metric.scale")?;
        if scales.len() != n {
            return Err(Error::input("metric.scale", format!("expected {n} entries")));
        }
        let metric_scale = scales
            .iter()
            .enumerate()
            .map(|(i, s)| expr(s, &format!("metric.scale[{i}]"), n))
            .collect::<Result<Vec<_>>>()?;

        let lapse = Obj::new(root.req("lapse")?, "lapse")?;
        lapse.check_keys(&["kind", "expr", "bounds"])?;
        let lapse_kind = match lapse.string("kind")? {
            "time_only" => LapseKind::TimeOnly,
            "space_time" => LapseKind::SpaceTime,
            other => {
                return Err(Error::input(
                    "lapse.kind",
                    format!("expected time_only or space_time, got {other:?}"),
                ))
            }
        };
        let lapse_expr = expr(lapse.req("expr")?, "lapse.expr", n)?;
        let lapse_bounds = match lapse.get("bounds") {
            None => None,
            Some(b) => {
                let items = array(b, "lapse.bounds")?;
                if items.len() != 2 {
                    return Err(Error::input("lapse.bounds", "expected [N1, N2]"));
                }
                Some((number(&items[0], "lapse.bounds[0]")?, number(&items[1], "lapse.bounds[1]")?))
            }
        };

        let time = Obj::new(root.req("time")?, "time")?;
        time.check_keys(&["kind", "T_per", "range", "Nt", "spin_structure"])?;
        let domain = match time.string("kind")? {
            "circle" => TimeDomain::Circle {
                period: number(time.req("T_per")?, "time.T_per")?,
            },
            "interval" => {
                let r = array(time.req("range")?, "time.range")?;
                if r.len() != 2 {
                    return Err(Error::input("time.range", "expected [T0, T1]"));
                }
                TimeDomain::Interval {
                    start: number(&r[0], "time.range[0]")?,
                    end: number(&r[1], "time.range[1]")?,
                }
            }
            other => {
                return Err(Error::input("time.kind", format!("expected circle or interval, got {other:?}")))
            }
        };
        let time_spin = match time.get("spin_structure") {
            None => SpinStructure::Antiperiodic,
            Some(s) => spin(s, "time.spin_structure")?,
        };
        let nt = time.usize("Nt")?;

        let signature = parse_signature(root.string("signature")?).ok_or_else(|| {
            Error::input("signature", "expected \"riemannian\" or \"lorentzian\"")
        })?;
        let algebra = match root.get("algebra") {
            None => vec![Expr::parse("cos(x1)", n)?],
            Some(a) => array(a, "algebra")?
                .iter()
                .enumerate()
                .map(|(i, s)| expr(s, &format!("algebra[{i}]"), n))
                .collect::<Result<_>>()?,
        };
        let time_function = match root.get("time_function") {
            None => Expr::parse("cos(t)", 0)?,
            Some(s) => expr(s, "time_function", 0)?,
        };
        let step = root.get("step").map(|s| number(s, "step")).transpose()?;
        let resolutions = match root.get("resolutions") {
            None => vec![(points, nt)],
            Some(r) => array(r, "resolutions")?
                .iter()
                .enumerate()
                .map(|(i, pair)| {
                    let field = format!("resolutions[{i}]");
                    let p = array(pair, &field)?;
                    match (p.first().and_then(Value::as_u64), p.get(1).and_then(Value::as_u64), p.len()) {
                        (Some(a), Some(b), 2) => Ok((a as usize, b as usize)),
                        _ => Err(Error::input(field, "expected [L, Nt]")),
                    }
                })
                .collect::<Result<_>>()?,
        };
        let oracle = match root.get("oracle") {
            None => true,
            Some(b) => b
                .as_bool()
                .ok_or_else(|| Error::input("oracle", "expected a boolean"))?,
        };
        let sc = Scenario {
            name,
            n,
            points,
            circumference,
            spin: spin_list,
            metric_kind,
            metric_scale,
            lapse_kind,
            lapse_expr,
            lapse_bounds,
            time: TimeSpec {
                domain,
                nt,
                spin: time_spin,
            },
            signature,
            algebra,
            time_function,
            step,
            resolutions,
            oracle,
        };
        sc.metric().map_err(|e| e.within("metric"))?;
        sc.lapse().map_err(|e| e.within("lapse"))?;
        Ok(sc)
    }

    /// Same scenario at another resolution.
    pub fn with_resolution(&self, points: usize, nt: usize) -> Scenario {
        let mut s = self.clone();
        s.points = points;
        s.time.nt = nt;
        s
    }

    pub fn with_signature(&self, sig: Signature) -> Scenario {
        let mut s = self.clone();
        s.signature = sig;
        s
    }

    pub fn metric(&self) -> Result<MetricFamily> {
        MetricFamily::new(self.metric_kind, self.metric_scale.clone(), self.time.domain)
    }

    pub fn lapse(&self) -> Result<LapseFamily> {
        LapseFamily::new(self.lapse_kind, self.lapse_expr.clone(), self.lapse_bounds)
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.points, self.circumference.clone(), self.spin.clone())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.domain, self.time.nt, self.time.spin)
    }

    pub fn rep(&self) -> Result<CliffordRep> {
        build_odd_rep(self.n)
    }

    /// Centered-difference step for time derivatives.
    pub fn time_step(&self) -> f64 {
        self.step.unwrap_or(1e-3 * self.time.domain.timescale())
    }

    pub fn time_derivative(&self, analytic: bool) -> TimeDerivative {
        if analytic {
            TimeDerivative::Analytic
        } else {
            TimeDerivative::Centered {
                step: self.time_step(),
            }
        }
    }

    /// Flat metric, unit lapse and matching circle time.
    pub fn is_flat(&self) -> bool {
        let unit = |e: &Expr| !e.depends_on_space() && !e.depends_on(crate::expr::Var::T) && e.eval(0.0, &[]) == 1.0;
        self.metric_scale.iter().all(unit) && unit(&self.lapse_expr) && matches!(self.time.domain, TimeDomain::Circle { .. })
    }

    pub fn lapse_is_constant(&self) -> bool {
        !self.lapse_expr.depends_on_space() && !self.lapse_expr.depends_on(crate::expr::Var::T)
    }

    pub fn to_json(&self) -> Value {
        let time = match self.time.domain {
            TimeDomain::Circle { period } => json!({"kind": "circle", "T_per": period, "Nt": self.time.nt, "spin_structure": spin_name(self.time.spin)}),
            TimeDomain::Interval { start, end } => json!({"kind": "interval", "range": [start, end], "Nt": self.time.nt, "spin_structure": spin_name(self.time.spin)}),
        };
        json!({
            "name": self.name,
            "n": self.n,
            "L": self.points,
            "circumference": self.circumference,
            "spin_structure": self.spin.iter().map(|s| spin_name(*s)).collect::<Vec<_>>(),
            "metric": {
                "kind": match self.metric_kind { MetricKind::ConstantDiagonal => "constant_diagonal", MetricKind::DiagonalField => "diagonal_field" },
                "scale": self.metric_scale.iter().map(|e| e.source().to_string()).collect::<Vec<_>>(),
            },
            "lapse": {
                "kind": match self.lapse_kind { LapseKind::TimeOnly => "time_only", LapseKind::SpaceTime => "space_time" },
                "expr": self.lapse_expr.source(),
                "bounds": self.lapse_bounds.map(|(a, b)| vec![a, b]),
            },
            "time": time,
            "signature": self.signature.name(),
            "algebra": self.algebra.iter().map(|e| e.source().to_string()).collect::<Vec<_>>(),
            "time_function": self.time_function.source(),
            "step": self.step,
            "resolutions": self.resolutions.iter().map(|(a, b)| vec![*a, *b]).collect::<Vec<_>>(),
            "oracle": self.oracle,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for name in Scenario::bundled_names() {
            let s = Scenario::bundled(name).unwrap();
            s.grid().unwrap();
            s.time_grid().unwrap();
            let back = Scenario::from_value(&s.to_json()).unwrap();
            assert_eq!(back.to_json(), s.to_json());
        }
    }

    fn base() -> Value {
        serde_json::from_str(include_str!("../scenarios/warped_circle.json")).unwrap()
    }

    fn field_of(v: Value) -> String {
        match Scenario::from_value(&v) {
            Err(Error::Input { field, .. }) => field,
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let mut v = base();
        v["metric"]["scale"][0] = json!("1 + 0.3*sin(t");
        assert_eq!(field_of(v), "metric.scale[0]");
        let mut v = base();
        v["time"]["Nt"] = json!("many");
        assert_eq!(field_of(v), "time.Nt");
        let mut v = base();
        v["lapse"]["expr"] = json!("2 + cos(x2)");
        assert_eq!(field_of(v), "lapse.expr");
        let mut v = base();
        v["n"] = json!(2);
        assert_eq!(field_of(v), "n");
        let mut v = base();
        v["bogus"] = json!(1);
        assert_eq!(field_of(v), "bogus");
        let mut v = base();
        v["metric"]["scale"][0] = json!("1 + cos(x1)");
        assert_eq!(field_of(v), "metric.scale[0]");
    }
}
