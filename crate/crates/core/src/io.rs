//! JSON input formats.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::chabauty::FiniteMetricSpace;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::SurfaceSpec;
use crate::graph::{Generator, GeneratorRoot, Graph, RootedGraph};
use crate::group::FiniteGroup;
use crate::mass_transport::{Atom, CoreMass, Measure, Space};
use crate::poisson::WeightedSpace;
use crate::sasaki::CoordinateMetric;
use crate::schreier::{GroupGenerators, Irs};
use crate::util::parse_q;

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn from_value<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    Ok(T::deserialize(v)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelSpec {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSpec {
    vertices: usize,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    root: usize,
    #[serde(default)]
    labels: BTreeMap<String, LabelSpec>,
    marks: Option<Vec<u32>>,
}

fn parse_pair(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Malformed(format!("label key {key:?} is not of the form \"u-v\""));
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// `{"vertices": n, "edges": [[u,v],...], "root": r, "labels": {"u-v": "s" | [...]}, "marks": [...]}`.
/// A labeled pair becomes directed arcs `u -s-> v`; the remaining edges stay undirected.
pub fn graph_from_value(v: &Value) -> Result<RootedGraph> {
    let s: GraphSpec = from_value(v)?;
    let mut arcs = Vec::new();
    let mut labeled = BTreeSet::new();
    for (key, l) in &s.labels {
        let (a, b) = parse_pair(key)?;
        labeled.insert((a.min(b), a.max(b)));
        let syms = match l {
            LabelSpec::One(x) => vec![x.clone()],
            LabelSpec::Many(xs) => xs.clone(),
        };
        arcs.extend(syms.into_iter().map(|x| (a, b, x)));
    }
    let edges: Vec<(usize, usize)> = s
        .edges
        .iter()
        .map(|e| (e[0], e[1]))
        .filter(|&(a, b)| !labeled.contains(&(a.min(b), a.max(b))))
        .collect();
    let mut g = Graph::labeled(s.vertices, &edges, &arcs)?;
    if let Some(m) = s.marks {
        g = g.with_marks(m)?;
    }
    if s.root >= s.vertices {
        return Err(Error::Malformed(format!("root {} out of range", s.root)));
    }
    g.rooted(s.root)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorSpec {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

/// `{"name": "integer_line" | "grid2d" | "regular_tree" | "marked_line", "params": {...}}`
/// with `params.k` for the tree degree and `params.marked` for the marked integers.
pub fn generator_from_value(v: &Value) -> Result<Generator> {
    let s: GeneratorSpec = from_value(v)?;
    let param = |k: &str| s.params.get(k).ok_or_else(|| Error::Malformed(format!("{} needs params.{k}", s.name)));
    Ok(match s.name.as_str() {
        "integer_line" => Generator::IntegerLine,
        "grid2d" => Generator::Grid2d,
        "regular_tree" => {
            let k: u8 = from_value(param("k")?)?;
            if k < 2 {
                return Err(Error::Malformed("regular_tree needs k >= 2".into()));
            }
            Generator::RegularTree(k)
        }
        "marked_line" => Generator::MarkedLine(from_value::<BTreeSet<i64>>(param("marked")?)?),
        other => return Err(Error::Malformed(format!("unknown generator {other:?}"))),
    })
}

fn core_mass(v: &Value) -> Result<CoreMass> {
    match v {
        Value::String(s) if s == "zero" => Ok(CoreMass::Zero),
        Value::String(s) if s == "infinite" => Ok(CoreMass::Infinite),
        Value::Number(_) => Ok(CoreMass::Count(from_value(v)?)),
        _ => Err(Error::Malformed(format!("core_mass must be \"zero\", \"infinite\" or a count, got {v}"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomSpec {
    graph: Option<Value>,
    generator: Option<Value>,
    core_mass: Option<Value>,
    weight: Value,
}

fn weight(v: &Value) -> Result<crate::util::Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        _ => Err(Error::Malformed(format!("weight must be a string or number, got {v}"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureSpec {
    atoms: Vec<AtomSpec>,
    #[serde(default = "yes")]
    probability: bool,
}

fn yes() -> bool {
    true
}

/// `{"atoms": [{"graph": <graph>, "weight": "p/q"}], "probability": true}`; an atom may
/// instead carry `"generator"` (rooted at the origin) and an optional `"core_mass"`.
pub fn measure_from_value(v: &Value) -> Result<Measure> {
    let s: MeasureSpec = from_value(v)?;
    let mut atoms = Vec::new();
    for a in &s.atoms {
        let space = match (&a.graph, &a.generator) {
            (Some(g), None) => Space::Finite(graph_from_value(g)?),
            (None, Some(g)) => Space::Generator {
                root: GeneratorRoot::at_origin(generator_from_value(g)?),
                core_mass: a.core_mass.as_ref().map(core_mass).transpose()?,
            },
            _ => return Err(Error::Malformed("an atom needs exactly one of graph, generator".into())),
        };
        atoms.push(Atom { space, weight: weight(&a.weight)? });
    }
    Measure::new(atoms, s.probability)
}

/// What a JSON file describes, told apart by its keys.
pub enum Source {
    Graph(RootedGraph),
    Measure(Measure),
    Generator(Generator),
}

pub fn source_from_value(v: &Value) -> Result<Source> {
    let has = |k: &str| v.get(k).is_some();
    if has("atoms") {
        Ok(Source::Measure(measure_from_value(v)?))
    } else if has("name") {
        Ok(Source::Generator(generator_from_value(v)?))
    } else if has("vertices") {
        Ok(Source::Graph(graph_from_value(v)?))
    } else {
        Err(Error::Malformed("expected a graph, measure or generator".into()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupSpec {
    order: usize,
    mult: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratingSet {
    names: Vec<String>,
    elements: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IrsAtom {
    generators: Vec<usize>,
    weight: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IrsSpec {
    group: GroupSpec,
    generating_set: Option<GeneratingSet>,
    atoms: Vec<IrsAtom>,
}

/// `{"group": {"order": n, "mult": [[...]]}, "atoms": [{"generators": [g,...], "weight": "p/q"}]}`.
/// Each atom is the subgroup generated by the listed elements. The Schreier graphs use
/// `"generating_set": {"names", "elements"}` when given, otherwise every non-identity element.
pub fn irs_from_value(v: &Value) -> Result<(Irs, GroupGenerators)> {
    let s: IrsSpec = from_value(v)?;
    if s.group.mult.len() != s.group.order {
        return Err(Error::Malformed(format!(
            "multiplication table has {} rows for order {}",
            s.group.mult.len(),
            s.group.order
        )));
    }
    let group = Arc::new(FiniteGroup::from_table(s.group.mult)?);
    let n = group.order();
    let mut atoms = Vec::new();
    for a in &s.atoms {
        if let Some(&g) = a.generators.iter().find(|&&g| g >= n) {
            return Err(Error::Malformed(format!("element {g} out of range")));
        }
        atoms.push((group.generated(&a.generators), weight(&a.weight)?));
    }
    let gens = match s.generating_set {
        Some(gs) => GroupGenerators::new(&group, gs.names, gs.elements)?,
        None => {
            let e = group.identity();
            let elems: Vec<usize> = (0..n).filter(|&g| g != e).collect();
            let names = elems.iter().map(|g| format!("g{g}")).collect();
            GroupGenerators::new(&group, names, elems)?
        }
    };
    Ok((Irs { group, atoms }, gens))
}

/// Poisson input: `{"weights": [...], "region": [...], "other": [...], "automorphisms": [[...]]}`.
/// Without `region` the whole space is audited.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSpec {
    pub weights: Vec<f64>,
    pub region: Option<Vec<usize>>,
    pub other: Option<Vec<usize>>,
    pub automorphisms: Option<Vec<Vec<usize>>>,
}

impl PoissonSpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        from_value(v)
    }

    pub fn space(&self) -> Result<WeightedSpace> {
        WeightedSpace::new(self.weights.clone(), self.automorphisms.clone())
    }

    pub fn region(&self) -> Vec<usize> {
        self.region.clone().unwrap_or_else(|| (0..self.weights.len()).collect())
    }
}

/// Chabauty input: `{"dist": [[...]], "base": p}`, optionally with a set `"limit"` and a
/// `"sequence"` of sets for the convergence test.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpaceSpec {
    pub dist: Vec<Vec<f64>>,
    pub base: usize,
    pub limit: Option<Vec<usize>>,
    pub sequence: Option<Vec<Vec<usize>>>,
    pub radii: Option<Vec<f64>>,
}

impl MetricSpaceSpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        from_value(v)
    }

    pub fn space(&self) -> Result<FiniteMetricSpace> {
        FiniteMetricSpace::new(self.dist.clone(), self.base)
    }
}

pub fn surface_from_value(v: &Value) -> Result<SurfaceSpec> {
    let s: SurfaceSpec = from_value(v)?;
    s.validate()?;
    Ok(s)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSpec {
    dim: usize,
    entries: Vec<String>,
    patch: Vec<[f64; 2]>,
}

/// `{"dim": 2, "entries": ["1/(y*y)", "0", "0", "1/(y*y)"], "patch": [[x0,x1],[y0,y1]]}`.
pub fn metric_from_value(v: &Value) -> Result<CoordinateMetric> {
    let s: MetricSpec = from_value(v)?;
    if s.dim != 2 {
        return Err(Error::Malformed(format!("expression metrics are two-dimensional, got dim {}", s.dim)));
    }
    if s.entries.len() != 4 || s.patch.len() != 2 {
        return Err(Error::Malformed("need 4 entries and a 2-interval patch".into()));
    }
    let es = s.entries.iter().map(|e| Expr::parse(e)).collect::<Result<Vec<_>>>()?;
    CoordinateMetric::from_exprs(&es, s.patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::path;
    use serde_json::json;

    #[test]
    fn graph_and_measure_round_trip() {
        let g = graph_from_value(&json!({"vertices": 3, "edges": [[0, 1], [1, 2]], "root": 1})).unwrap();
        assert_eq!(g.code(), path(3).rooted(1).unwrap().code());
        let m = measure_from_value(&json!({
            "atoms": [
                {"graph": {"vertices": 3, "edges": [[0, 1], [1, 2]], "root": 0}, "weight": "2/3"},
                {"graph": {"vertices": 3, "edges": [[0, 1], [1, 2]], "root": 1}, "weight": "1/3"}
            ],
            "probability": true
        }))
        .unwrap();
        assert_eq!(m.atoms.len(), 2);
        let bad = json!({"atoms": [{"graph": {"vertices": 2, "edges": [[0, 1]]}, "weight": "1/2"}]});
        assert!(matches!(measure_from_value(&bad), Err(Error::Malformed(_))));
        assert!(matches!(graph_from_value(&json!({"vertices": "x"})), Err(Error::Json(_))));
    }

    #[test]
    fn labels_loops_and_generators() {
        let g = graph_from_value(&json!({"vertices": 1, "labels": {"0-0": ["a", "b"]}})).unwrap();
        assert_eq!(g.graph.arcs().count(), 2);
        let m = measure_from_value(&json!({
            "atoms": [{"generator": {"name": "marked_line", "params": {"marked": [0]}}, "core_mass": 1, "weight": 1}],
            "probability": false
        }))
        .unwrap();
        assert!(matches!(&m.atoms[0].space, Space::Generator { core_mass: Some(CoreMass::Count(1)), .. }));
        assert!(generator_from_value(&json!({"name": "regular_tree"})).is_err());
        assert!(generator_from_value(&json!({"name": "regular_tree", "params": {"k": 3}})).is_ok());
    }

    #[test]
    fn irs_defaults_to_all_elements() {
        let (irs, gens) = irs_from_value(&json!({
            "group": {"order": 2, "mult": [[0, 1], [1, 0]]},
            "atoms": [{"generators": [], "weight": "1"}]
        }))
        .unwrap();
        assert_eq!(gens.elements, vec![1]);
        assert_eq!(irs.atoms[0].0.order(), 1);
    }

    #[test]
    fn metric_spec() {
        let g = metric_from_value(&json!({
            "dim": 2, "entries": ["1/(y*y)", "0", "0", "1/(y*y)"], "patch": [[-1, 1], [0.5, 2]]
        }))
        .unwrap();
        assert!((g.at(&[0.0, 1.0]).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        let e = metric_from_value(&json!({"dim": 2, "entries": ["1", "0", "0", "q"], "patch": [[0, 1], [0, 1]]}));
        assert!(matches!(e, Err(Error::Expr(_))));
    }
}
