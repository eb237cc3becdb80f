//! Rooted measures, transport kernels and the mass transport principle.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::{BigRational, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BallCode, DoublyRootedGraph, Graph, GeneratorRoot, RootedGraph};
use crate::group::FiniteGroup;
use crate::util::{chunks, fmt_q, fnv64, q, q_int, stream_rng, Q, STREAMS};

/// Declared number of core vertices for an infinite generator-backed atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreMass {
    Zero,
    Count(u64),
    Infinite,
}

/// The rooted structure carried by one atom.
#[derive(Clone, Debug)]
pub enum Space {
    Finite(RootedGraph),
    Generator {
        root: GeneratorRoot,
        core_mass: Option<CoreMass>,
    },
    /// A ball of an infinite graph, exact up to `radius`.
    Truncated { ball: RootedGraph, radius: usize },
}

impl Space {
    /// A finite rooted graph whose `r`-ball about the root equals the true one.
    pub fn view(&self, r: usize) -> Result<RootedGraph> {
        match self {
            Space::Finite(g) => Ok(g.ball(r)),
            Space::Generator { root, .. } => root.generator.ball(&root.handle, r),
            Space::Truncated { ball, radius } => {
                if r > *radius {
                    Err(Error::RangeExceeded {
                        needed: r,
                        available: *radius,
                    })
                } else {
                    Ok(ball.ball(r))
                }
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, Space::Finite(_))
    }

    fn key(&self) -> String {
        match self {
            Space::Finite(g) => format!("F{}", g.code().hex()),
            Space::Generator { root, .. } => format!("G{}@{}", root.generator.name(), root.handle),
            Space::Truncated { ball, radius } => format!("T{radius}:{}", ball.code().hex()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Space::Finite(g) => format!(
                "finite graph, {} vertices, {} edges",
                g.graph.vertex_count(),
                g.graph.edges().len() + g.graph.arcs().count()
            ),
            Space::Generator { root, .. } => format!("{} at {}", root.generator.name(), root.handle),
            Space::Truncated { ball, radius } => format!(
                "ball of radius {radius} ({} vertices) of an infinite graph",
                ball.graph.vertex_count()
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub space: Space,
    pub weight: Q,
}

/// A finitely supported measure on rooted graphs.
#[derive(Clone, Debug)]
pub struct Measure {
    pub atoms: Vec<Atom>,
    pub probability: bool,
}

impl Measure {
    /// Merges atoms of isomorphic rooted graphs; checks weights are positive and,
    /// for a probability measure, sum to one.
    pub fn new(atoms: Vec<Atom>, probability: bool) -> Result<Measure> {
        let mut merged: BTreeMap<String, Atom> = BTreeMap::new();
        let mut order = Vec::new();
        for a in atoms {
            if !a.weight.is_positive() {
                return Err(Error::Malformed(format!("nonpositive weight {}", fmt_q(&a.weight))));
            }
            let k = a.space.key();
            match merged.get_mut(&k) {
                Some(b) => b.weight += a.weight,
                None => {
                    order.push(k.clone());
                    merged.insert(k, a);
                }
            }
        }
        let atoms: Vec<Atom> = order.into_iter().map(|k| merged.remove(&k).unwrap()).collect();
        let m = Measure { atoms, probability };
        if probability && m.total_mass() != q_int(1) {
            return Err(Error::Malformed(format!(
                "probability weights sum to {}",
                fmt_q(&m.total_mass())
            )));
        }
        Ok(m)
    }

    pub fn point(space: Space) -> Measure {
        Measure {
            atoms: vec![Atom {
                space,
                weight: q_int(1),
            }],
            probability: true,
        }
    }

    pub fn total_mass(&self) -> Q {
        self.atoms.iter().map(|a| a.weight.clone()).sum()
    }

    pub fn normalize(&self) -> Result<Measure> {
        let t = self.total_mass();
        if t.is_zero() {
            return Err(Error::Precondition("cannot normalize the zero measure".into()));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                space: a.space.clone(),
                weight: &a.weight / &t,
            })
            .collect();
        Measure::new(atoms, true)
    }

    /// Convex (or general nonnegative) combination.
    pub fn mix(parts: &[(Measure, Q)]) -> Result<Measure> {
        let mut atoms = Vec::new();
        for (m, w) in parts {
            if w.is_zero() {
                continue;
            }
            for a in &m.atoms {
                atoms.push(Atom {
                    space: a.space.clone(),
                    weight: &a.weight * w,
                });
            }
        }
        let prob = parts.iter().all(|(m, _)| m.probability)
            && parts.iter().map(|(_, w)| w.clone()).sum::<Q>() == q_int(1);
        Measure::new(atoms, prob)
    }
}

/// Rooted measure of a finite graph with a uniformly random root.
pub fn uniform_root_measure(g: &Graph) -> Result<Measure> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.vertex_count() as i64;
    let atoms = (0..g.vertex_count())
        .map(|v| Atom {
            space: Space::Finite(g.clone().rooted(v).unwrap()),
            weight: q(1, n),
        })
        .collect();
    Measure::new(atoms, true)
}

/// A doubly rooted ball together with its canonical code.
#[derive(Clone, Debug)]
pub struct DoubleBall {
    pub graph: DoublyRootedGraph,
    pub code: BallCode,
}

impl DoubleBall {
    fn new(graph: DoublyRootedGraph) -> Self {
        let code = graph.code();
        DoubleBall { graph, code }
    }
}

type KernelFn = dyn Fn(&DoubleBall) -> Q + Send + Sync;

/// A nonnegative function of doubly rooted balls of radius `range`,
/// vanishing when the second root is farther than `range`.
#[derive(Clone)]
pub struct TransportKernel {
    pub range: usize,
    eval: Arc<KernelFn>,
}

impl std::fmt::Debug for TransportKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TransportKernel(range {})", self.range)
    }
}

impl TransportKernel {
    /// Kernel given by a function of the doubly rooted ball `(B_r(p), p, q)`.
    pub fn from_graph_fn(
        range: usize,
        f: impl Fn(&DoublyRootedGraph) -> Q + Send + Sync + 'static,
    ) -> Self {
        TransportKernel {
            range,
            eval: Arc::new(move |b: &DoubleBall| f(&b.graph)),
        }
    }

    pub fn from_code_fn(range: usize, f: impl Fn(&BallCode) -> Q + Send + Sync + 'static) -> Self {
        TransportKernel {
            range,
            eval: Arc::new(move |b: &DoubleBall| f(&b.code)),
        }
    }

    pub fn from_table(range: usize, table: HashMap<BallCode, Q>) -> Self {
        Self::from_code_fn(range, move |c| table.get(c).cloned().unwrap_or_else(Q::zero))
    }

    pub fn indicator(range: usize, code: BallCode) -> Self {
        Self::from_code_fn(range, move |c| if *c == code { q_int(1) } else { Q::zero() })
    }

    /// Pseudo-random rational values in `{0, 1/6, ..., 7}` determined by the code and seed.
    pub fn hashed(range: usize, seed: u64) -> Self {
        Self::from_code_fn(range, move |c| {
            let h = fnv64(seed, &c.0);
            let num = (h % 8) as i64;
            let den = 1 + ((h >> 8) % 6) as i64;
            q(num, den)
        })
    }

    pub fn eval(&self, b: &DoubleBall) -> Q {
        (self.eval)(b)
    }
}

/// For one rooted graph: the balls `(B_r(root), root, q)` and `(B_r(q), q, root)`
/// over all `q` within distance `r` of the root.
#[derive(Clone, Debug)]
pub struct TransportFrame {
    pub outgoing: Vec<DoubleBall>,
    pub incoming: Vec<DoubleBall>,
}

pub fn transport_frame(space: &Space, r: usize) -> Result<TransportFrame> {
    let view = space.view(2 * r)?;
    Ok(frame_of(&view.graph, view.root, r))
}

fn frame_of(g: &Graph, root: usize, r: usize) -> TransportFrame {
    let dist = g.distances(root);
    let (own, own_idx) = g.ball_indexed(root, r).unwrap();
    let mut outgoing = Vec::new();
    let mut incoming = Vec::new();
    for (q, d) in dist.iter().enumerate() {
        match d {
            Some(d) if *d <= r => {}
            _ => continue,
        }
        outgoing.push(DoubleBall::new(
            DoublyRootedGraph::new(own.graph.clone(), 0, own_idx[&q]).unwrap(),
        ));
        let (theirs, idx) = g.ball_indexed(q, r).unwrap();
        incoming.push(DoubleBall::new(
            DoublyRootedGraph::new(theirs.graph, 0, idx[&root]).unwrap(),
        ));
    }
    TransportFrame { outgoing, incoming }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtpSides {
    pub left: Q,
    pub right: Q,
    pub gap: Q,
}

/// Exact sides of the transport identity: expected mass sent from the root
/// versus expected mass received by it.
pub fn mtp_sides(mu: &Measure, f: &TransportKernel) -> Result<MtpSides> {
    let frames = measure_frames(mu, f.range)?;
    Ok(sides_on_frames(mu, &frames, f))
}

pub fn measure_frames(mu: &Measure, r: usize) -> Result<Vec<TransportFrame>> {
    mu.atoms.iter().map(|a| transport_frame(&a.space, r)).collect()
}

pub fn sides_on_frames(mu: &Measure, frames: &[TransportFrame], f: &TransportKernel) -> MtpSides {
    let mut left = Q::zero();
    let mut right = Q::zero();
    for (a, fr) in mu.atoms.iter().zip(frames) {
        let l: Q = fr.outgoing.iter().map(|b| f.eval(b)).sum();
        let r: Q = fr.incoming.iter().map(|b| f.eval(b)).sum();
        left += &a.weight * l;
        right += &a.weight * r;
    }
    let gap = (&left - &right).abs();
    MtpSides { left, right, gap }
}

/// Random roots for Monte Carlo estimates.
#[derive(Clone, Debug)]
pub enum Sampler {
    /// Draw an atom with probability proportional to its weight.
    Atoms(Measure),
    /// Uniformly random root of a finite connected graph.
    UniformRoot(Graph),
}

impl Sampler {
    pub fn uniform_root(g: Graph) -> Result<Sampler> {
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(Sampler::UniformRoot(g))
    }

    /// Number of distinct outcomes and a sampler of their indices.
    pub(crate) fn outcomes(&self) -> usize {
        match self {
            Sampler::Atoms(m) => m.atoms.len(),
            Sampler::UniformRoot(g) => g.vertex_count(),
        }
    }

    pub(crate) fn cumulative(&self) -> Vec<f64> {
        match self {
            Sampler::Atoms(m) => {
                let total = crate::util::to_f64(&m.total_mass());
                let mut acc = 0.0;
                m.atoms
                    .iter()
                    .map(|a| {
                        acc += crate::util::to_f64(&a.weight) / total;
                        acc
                    })
                    .collect()
            }
            Sampler::UniformRoot(g) => {
                let n = g.vertex_count();
                (1..=n).map(|i| i as f64 / n as f64).collect()
            }
        }
    }

    pub(crate) fn draw<R: Rng>(cum: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random();
        cum.partition_point(|&c| c <= u).min(cum.len() - 1)
    }

    /// Like [`Sampler::space`] but for finite graphs returns only the `r`-ball.
    pub(crate) fn local(&self, i: usize, r: usize) -> Result<RootedGraph> {
        match self {
            Sampler::Atoms(m) => m.atoms[i].space.view(r),
            Sampler::UniformRoot(g) => g.ball(i, r),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtpEstimate {
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    /// Standard error of the signed difference `left - right`.
    pub sigma: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of both transport sides. Per-outcome sums are memoized,
/// streams are split deterministically from `seed`.
pub fn mtp_sides_mc(
    s: &Sampler,
    f: &TransportKernel,
    samples: usize,
    seed: u64,
) -> Result<MtpEstimate> {
    if samples < 2 {
        return Err(Error::Precondition("need at least two samples".into()));
    }
    let cum = s.cumulative();
    let draws: Vec<Vec<usize>> = chunks(samples, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| {
            let mut rng = stream_rng(seed, i as u64);
            (0..k).map(|_| Sampler::draw(&cum, &mut rng)).collect()
        })
        .collect();
    let mut needed: Vec<bool> = vec![false; s.outcomes()];
    for d in draws.iter().flatten() {
        needed[*d] = true;
    }
    let idx: Vec<usize> = (0..needed.len()).filter(|&i| needed[i]).collect();
    let sums: Vec<(usize, (f64, f64))> = idx
        .par_iter()
        .map(|&i| {
            let view = s.local(i, 2 * f.range)?;
            let fr = frame_of(&view.graph, view.root, f.range);
            let l: Q = fr.outgoing.iter().map(|b| f.eval(b)).sum();
            let r: Q = fr.incoming.iter().map(|b| f.eval(b)).sum();
            Ok((i, (crate::util::to_f64(&l), crate::util::to_f64(&r))))
        })
        .collect::<Result<_>>()?;
    let memo: HashMap<usize, (f64, f64)> = sums.into_iter().collect();
    let n = samples as f64;
    let (mut sl, mut sr, mut sd, mut sd2) = (0.0, 0.0, 0.0, 0.0);
    for d in draws.iter().flatten() {
        let (l, r) = memo[d];
        sl += l;
        sr += r;
        sd += l - r;
        sd2 += (l - r) * (l - r);
    }
    let mean_d = sd / n;
    let var = ((sd2 / n - mean_d * mean_d) * n / (n - 1.0)).max(0.0);
    Ok(MtpEstimate {
        left: sl / n,
        right: sr / n,
        gap: mean_d.abs(),
        sigma: (var / n).sqrt(),
        samples,
    })
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub code: BallCode,
    pub left: Q,
    pub right: Q,
    pub example: DoublyRootedGraph,
}

#[derive(Clone, Debug)]
pub struct UnimodularVerdict {
    pub pass: bool,
    pub radius: usize,
    pub types: usize,
    pub max_gap: Q,
    pub witness: Option<Witness>,
}

/// Checks the transport identity for the indicator of every doubly rooted
/// `r`-ball type in the support. Any range-`r` kernel is a nonnegative
/// combination of these, so the family is complete at radius `r`.
pub fn is_unimodular(mu: &Measure, r: usize, tol: &Q) -> Result<UnimodularVerdict> {
    if r == 0 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let frames: Vec<TransportFrame> = mu
        .atoms
        .par_iter()
        .map(|a| transport_frame(&a.space, r))
        .collect::<Result<_>>()?;
    let mut table: BTreeMap<BallCode, (Q, Q, DoublyRootedGraph)> = BTreeMap::new();
    for (a, fr) in mu.atoms.iter().zip(&frames) {
        for b in &fr.outgoing {
            let e = table
                .entry(b.code.clone())
                .or_insert_with(|| (Q::zero(), Q::zero(), b.graph.clone()));
            e.0 += &a.weight;
        }
        for b in &fr.incoming {
            let e = table
                .entry(b.code.clone())
                .or_insert_with(|| (Q::zero(), Q::zero(), b.graph.clone()));
            e.1 += &a.weight;
        }
    }
    let mut max_gap = Q::zero();
    let mut witness = None;
    for (code, (l, rr, g)) in &table {
        let gap = (l - rr).abs();
        if gap > max_gap {
            max_gap = gap;
            witness = Some(Witness {
                code: code.clone(),
                left: l.clone(),
                right: rr.clone(),
                example: g.clone(),
            });
        }
    }
    let pass = max_gap <= *tol;
    Ok(UnimodularVerdict {
        pass,
        radius: r,
        types: table.len(),
        max_gap,
        witness: if pass { None } else { witness },
    })
}

type BallFn<T> = dyn Fn(&RootedGraph) -> T + Send + Sync;

/// A function of the rooted `radius`-ball.
#[derive(Clone)]
pub struct BallFunction<T> {
    pub radius: usize,
    f: Arc<BallFn<T>>,
}

impl<T> BallFunction<T> {
    pub fn new(radius: usize, f: impl Fn(&RootedGraph) -> T + Send + Sync + 'static) -> Self {
        BallFunction {
            radius,
            f: Arc::new(f),
        }
    }

    /// Value at vertex `v` of `g`.
    pub fn at(&self, g: &Graph, v: usize) -> T {
        (self.f)(&g.ball(v, self.radius).unwrap())
    }
}

impl BallFunction<f64> {
    /// Pseudo-random values in `[0, 1)` determined by the ball code and seed.
    pub fn hashed(radius: usize, seed: u64) -> Self {
        BallFunction::new(radius, move |b| {
            (fnv64(seed, &b.code().0) >> 11) as f64 / (1u64 << 53) as f64
        })
    }
}

/// `|E[F ΔH] - E[ΔF H]|` with the graph Laplacian `ΔF(p) = Σ_{q~p} (F(q) - F(p))`.
/// The sum is accumulated exactly from the double values.
pub fn laplacian_selfadjoint_gap(
    mu: &Measure,
    f: &BallFunction<f64>,
    h: &BallFunction<f64>,
) -> Result<f64> {
    let r = f.radius.max(h.radius) + 1;
    let mut total = Q::zero();
    for a in &mu.atoms {
        let view = a.space.view(r)?;
        let (g, p) = (&view.graph, view.root);
        let fp = exact(f.at(g, p));
        let hp = exact(h.at(g, p));
        let mut s = Q::zero();
        for q in g.neighbors(p) {
            s += &fp * exact(h.at(g, q)) - exact(f.at(g, q)) * &hp;
        }
        total += &a.weight * s;
    }
    Ok(crate::util::to_f64(&total.abs()))
}

fn exact(x: f64) -> Q {
    BigRational::from_float(x).unwrap_or_else(Q::zero)
}

/// Keeps only atoms whose graph satisfies `pred`; weights are not renormalized.
/// `pred` must not depend on the root, which is checked by re-rooting each atom.
pub fn restrict_saturated(
    mu: &Measure,
    pred: impl Fn(&RootedGraph) -> bool,
) -> Result<Measure> {
    let mut atoms = Vec::new();
    for (i, a) in mu.atoms.iter().enumerate() {
        let Space::Finite(g) = &a.space else {
            return Err(Error::Precondition(
                "saturated restriction is only defined on finite atoms".into(),
            ));
        };
        let v0 = pred(g);
        for v in 0..g.graph.vertex_count() {
            if pred(&g.reroot(v)) != v0 {
                return Err(Error::NotSaturated(i));
            }
        }
        if v0 {
            atoms.push(a.clone());
        }
    }
    let mut m = Measure::new(atoms, false)?;
    m.probability = mu.probability && m.total_mass() == q_int(1);
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreValue {
    Finite(u64),
    Infinite,
}

#[derive(Clone, Debug)]
pub struct CoreRow {
    pub atom: usize,
    pub description: String,
    pub mass: CoreValue,
    pub infinite_graph: bool,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct CoreReport {
    pub rows: Vec<CoreRow>,
    pub consistent: bool,
    pub probability: bool,
    pub caveat: Option<String>,
}

const CORE_WINDOW: usize = 48;
// Exponential-growth generators stop widening the window once it gets this big.
const CORE_WINDOW_VERTICES: usize = 50_000;

/// Core mass of every atom; an atom is flagged when its graph is infinite but
/// carries a finite nonzero amount of core.
pub fn no_core_audit(mu: &Measure, core: &BallFunction<bool>) -> Result<CoreReport> {
    let mut rows = Vec::new();
    for (i, a) in mu.atoms.iter().enumerate() {
        let mass = match &a.space {
            Space::Finite(g) => {
                let n = (0..g.graph.vertex_count())
                    .filter(|&v| core.at(&g.graph, v))
                    .count();
                CoreValue::Finite(n as u64)
            }
            Space::Generator { root, core_mass } => {
                let declared = core_mass.clone().ok_or(Error::MissingCoreOracle(i))?;
                check_declared(root, core, &declared)?;
                match declared {
                    CoreMass::Zero => CoreValue::Finite(0),
                    CoreMass::Count(n) => CoreValue::Finite(n),
                    CoreMass::Infinite => CoreValue::Infinite,
                }
            }
            Space::Truncated { .. } => return Err(Error::MissingCoreOracle(i)),
        };
        let infinite_graph = a.space.is_infinite();
        let flagged = infinite_graph && matches!(mass, CoreValue::Finite(n) if n > 0);
        rows.push(CoreRow {
            atom: i,
            description: a.space.describe(),
            mass,
            infinite_graph,
            flagged,
        });
    }
    let consistent = rows.iter().all(|r| !r.flagged);
    let caveat = (!mu.probability).then(|| {
        "measure is not a probability measure: a finite nonempty core on an infinite \
         graph is possible only because the no-core principle needs finite total mass"
            .to_string()
    });
    Ok(CoreReport {
        rows,
        consistent,
        probability: mu.probability,
        caveat,
    })
}

/// Cross-checks a declared core mass against the core vertices visible in a large window.
fn check_declared(root: &GeneratorRoot, core: &BallFunction<bool>, declared: &CoreMass) -> Result<()> {
    let mut reach = 1;
    while reach < CORE_WINDOW
        && root.generator.ball(&root.handle, reach + 1 + core.radius)?.graph.vertex_count() <= CORE_WINDOW_VERTICES
    {
        reach += 1;
    }
    let window = root.generator.ball(&root.handle, reach + core.radius)?;
    let dist = window.graph.distances(window.root);
    let seen = (0..window.graph.vertex_count())
        .filter(|&v| dist[v].is_some_and(|d| d <= reach))
        .filter(|&v| core.at(&window.graph, v))
        .count() as u64;
    let ok = match declared {
        CoreMass::Zero => seen == 0,
        CoreMass::Count(n) => seen <= *n,
        CoreMass::Infinite => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "declared core mass {declared:?} contradicts {seen} core vertices seen near {}",
            root.generator.name()
        )))
    }
}

/// A graph with group-valued voltages on oriented edges; loops and parallel edges allowed.
#[derive(Clone, Debug)]
pub struct VoltageGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, usize)>,
}

/// The derived cover: vertex `(v, g)` is `v * |Γ| + g`, and an edge `u -a-> v`
/// lifts to `(u, g) ~ (v, g·a)`.
pub fn derived_cover(base: &VoltageGraph, group: &FiniteGroup) -> Result<Graph> {
    let k = group.order();
    let mut edges = Vec::new();
    for &(u, v, a) in &base.edges {
        if u >= base.vertices || v >= base.vertices || a >= k {
            return Err(Error::Malformed(format!("voltage edge {u}-{v} ({a}) out of range")));
        }
        for g in 0..k {
            edges.push((u * k + g, v * k + group.mul(g, a)));
        }
    }
    let g = Graph::new(base.vertices * k, &edges)
        .map_err(|e| Error::Precondition(format!("cover is not a simple graph: {e}")))?;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(g)
}

/// Push-forward of the uniform root on the base to the cover, merged by isomorphism type.
pub fn cover_measure(base: &VoltageGraph, group: &FiniteGroup) -> Result<Measure> {
    let cover = derived_cover(base, group)?;
    let k = group.order();
    let n = base.vertices as i64;
    let e = group.identity();
    let atoms = (0..base.vertices)
        .map(|v| Atom {
            space: Space::Finite(RootedGraph {
                graph: cover.clone(),
                root: v * k + e,
            }),
            weight: q(1, n),
        })
        .collect();
    Measure::new(atoms, true)
}
