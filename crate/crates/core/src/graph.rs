//! Finite rooted graphs, balls, canonical codes, lazily generated infinite graphs
//! and the local distance between rooted graphs.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num::{BigInt, BigRational, Zero};
use rand::Rng;

use crate::error::{Error, Result};

const NO_LABEL: u32 = u32::MAX;

/// Direction tag of an adjacency entry: undirected edge, outgoing arc, incoming arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Dir {
    Both = 0,
    Out = 1,
    In = 2,
}

/// A finite graph. Unlabeled edges are undirected and simple; labeled arcs
/// (Schreier graphs) may be loops or parallel.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    arcs: Vec<(usize, usize, u32)>,
    symbols: Vec<String>,
    marks: Option<Vec<u32>>,
    adj: Vec<Vec<(usize, Dir, u32)>>,
}

impl Graph {
    /// Simple undirected graph.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        Self::build(n, edges, &[], None)
    }

    /// Graph with undirected simple edges plus labeled arcs `u -s-> v`.
    pub fn labeled(
        n: usize,
        edges: &[(usize, usize)],
        arcs: &[(usize, usize, String)],
    ) -> Result<Graph> {
        Self::build(n, edges, arcs, None)
    }

    pub fn with_marks(mut self, marks: Vec<u32>) -> Result<Graph> {
        if marks.len() != self.n {
            return Err(Error::Malformed(format!(
                "{} marks for {} vertices",
                marks.len(),
                self.n
            )));
        }
        self.marks = Some(marks);
        Ok(self)
    }

    fn build(
        n: usize,
        edges: &[(usize, usize)],
        arcs: &[(usize, usize, String)],
        marks: Option<Vec<u32>>,
    ) -> Result<Graph> {
        if n == 0 {
            return Err(Error::Malformed("graph has no vertices".into()));
        }
        let mut seen = BTreeSet::new();
        let mut es = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Malformed(format!("edge {u}-{v} out of range")));
            }
            if u == v {
                return Err(Error::Malformed(format!("loop at {u} in unlabeled graph")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Malformed(format!("multi-edge {}-{}", e.0, e.1)));
            }
            es.push(e);
        }
        let symbols: Vec<String> = arcs
            .iter()
            .map(|a| a.2.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut ar = Vec::with_capacity(arcs.len());
        for (u, v, s) in arcs {
            if *u >= n || *v >= n {
                return Err(Error::Malformed(format!("arc {u}-{v} out of range")));
            }
            let l = symbols.binary_search(s).unwrap() as u32;
            ar.push((*u, *v, l));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &es {
            adj[u].push((v, Dir::Both, NO_LABEL));
            adj[v].push((u, Dir::Both, NO_LABEL));
        }
        for &(u, v, l) in &ar {
            adj[u].push((v, Dir::Out, l));
            adj[v].push((u, Dir::In, l));
        }
        Ok(Graph {
            n,
            edges: es,
            arcs: ar,
            symbols,
            marks,
            adj,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Labeled arcs as `(from, to, label)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, &str)> + '_ {
        self.arcs
            .iter()
            .map(|&(u, v, l)| (u, v, self.symbols[l as usize].as_str()))
    }

    pub fn is_labeled(&self) -> bool {
        !self.arcs.is_empty()
    }

    pub fn marks(&self) -> Option<&[u32]> {
        self.marks.as_deref()
    }

    /// Distinct neighbours other than `v` itself, in increasing order.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let s: BTreeSet<usize> = self.adj[v]
            .iter()
            .map(|e| e.0)
            .filter(|&w| w != v)
            .collect();
        s.into_iter().collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Out-labels and in-labels at `v`, each sorted.
    pub fn label_profile(&self, v: usize) -> (Vec<&str>, Vec<&str>) {
        let mut out = Vec::new();
        let mut inc = Vec::new();
        for &(_, d, l) in &self.adj[v] {
            match d {
                Dir::Out => out.push(self.symbols[l as usize].as_str()),
                Dir::In => inc.push(self.symbols[l as usize].as_str()),
                Dir::Both => {}
            }
        }
        out.sort();
        inc.sort();
        (out, inc)
    }

    /// BFS distances from `v`; `None` for unreachable vertices.
    pub fn distances(&self, v: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[v] = Some(0);
        let mut q = VecDeque::from([v]);
        while let Some(u) = q.pop_front() {
            let du = dist[u].unwrap();
            for &(w, _, _) in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    q.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances(0).iter().all(|d| d.is_some())
    }

    /// Largest distance from `v` to any reachable vertex.
    pub fn eccentricity(&self, v: usize) -> usize {
        self.distances(v).iter().flatten().copied().max().unwrap_or(0)
    }

    /// Induced subgraph on the vertices within distance `r` of `v`, rooted at `v`.
    /// Vertices are renumbered in BFS order so the root becomes 0.
    pub fn ball(&self, v: usize, r: usize) -> Result<RootedGraph> {
        Ok(self.ball_indexed(v, r)?.0)
    }

    /// Like [`Graph::ball`], also returning the map from old to new vertex indices.
    pub fn ball_indexed(&self, v: usize, r: usize) -> Result<(RootedGraph, HashMap<usize, usize>)> {
        if v >= self.n {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        let mut idx: HashMap<usize, usize> = HashMap::new();
        let mut order = vec![v];
        let mut dist = vec![0usize];
        idx.insert(v, 0);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            let du = dist[head];
            head += 1;
            if du == r {
                continue;
            }
            for &(w, _, _) in &self.adj[u] {
                if !idx.contains_key(&w) {
                    idx.insert(w, order.len());
                    order.push(w);
                    dist.push(du + 1);
                }
            }
        }
        let rg = RootedGraph {
            graph: self.induced(&order, &idx),
            root: 0,
        };
        Ok((rg, idx))
    }

    fn induced(&self, order: &[usize], idx: &HashMap<usize, usize>) -> Graph {
        // Walks only the adjacency of `order`, so balls cost O(ball) rather than O(graph).
        let mut edges = Vec::new();
        let mut arcs = Vec::new();
        for &u in order {
            for &(w, d, l) in &self.adj[u] {
                let Some(&j) = idx.get(&w) else { continue };
                let i = idx[&u];
                match d {
                    Dir::Both if u < w => edges.push((i, j)),
                    Dir::Out => arcs.push((i, j, self.symbols[l as usize].clone())),
                    _ => {}
                }
            }
        }
        let marks = self
            .marks
            .as_ref()
            .map(|m| order.iter().map(|&u| m[u]).collect());
        Graph::build(order.len(), &edges, &arcs, marks).expect("induced subgraph is valid")
    }

    /// Copy with vertices renamed by `perm` (vertex `v` becomes `perm[v]`).
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let arcs: Vec<(usize, usize, String)> = self
            .arcs
            .iter()
            .map(|&(a, b, l)| (perm[a], perm[b], self.symbols[l as usize].clone()))
            .collect();
        let marks = self.marks.as_ref().map(|m| {
            let mut out = vec![0; self.n];
            for v in 0..self.n {
                out[perm[v]] = m[v];
            }
            out
        });
        Graph::build(self.n, &edges, &arcs, marks).expect("permuted graph is valid")
    }

    /// The graph with all labels forgotten: labeled arcs become simple
    /// undirected edges; loops and parallel arcs collapse.
    pub fn unlabeled(&self) -> Graph {
        let mut set: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        for &(a, b, _) in &self.arcs {
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        Graph::build(self.n, &edges, &[], self.marks.clone()).expect("projection is valid")
    }

    pub fn rooted(self, root: usize) -> Result<RootedGraph> {
        RootedGraph::new(self, root)
    }
}

/// A finite connected graph with a root.
#[derive(Clone, Debug)]
pub struct RootedGraph {
    pub graph: Graph,
    pub root: usize,
}

impl RootedGraph {
    pub fn new(graph: Graph, root: usize) -> Result<RootedGraph> {
        if root >= graph.vertex_count() {
            return Err(Error::UnknownVertex(root.to_string()));
        }
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(RootedGraph { graph, root })
    }

    pub fn ball(&self, r: usize) -> RootedGraph {
        self.graph.ball(self.root, r).expect("root is valid")
    }

    pub fn code(&self) -> BallCode {
        canonical_code(&self.graph, &[self.root])
    }

    pub fn reroot(&self, v: usize) -> RootedGraph {
        RootedGraph {
            graph: self.graph.clone(),
            root: v,
        }
    }
}

/// A rooted graph with a second distinguished vertex.
#[derive(Clone, Debug)]
pub struct DoublyRootedGraph {
    pub graph: Graph,
    pub root: usize,
    pub second: usize,
}

impl DoublyRootedGraph {
    pub fn new(graph: Graph, root: usize, second: usize) -> Result<Self> {
        let n = graph.vertex_count();
        if root >= n || second >= n {
            return Err(Error::UnknownVertex(format!("{root}/{second}")));
        }
        Ok(DoublyRootedGraph {
            graph,
            root,
            second,
        })
    }

    pub fn code(&self) -> BallCode {
        canonical_code(&self.graph, &[self.root, self.second])
    }

    pub fn distance(&self) -> usize {
        self.graph.distances(self.root)[self.second].unwrap_or(usize::MAX)
    }
}

/// Canonical byte string of a graph with an ordered list of individualized roots.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallCode(pub Vec<u8>);

impl BallCode {
    pub fn hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for BallCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = self.hex();
        if h.len() > 24 {
            write!(f, "BallCode({}..{} bytes)", &h[..24], self.0.len())
        } else {
            write!(f, "BallCode({h})")
        }
    }
}

/// Canonical code of `g` with `roots` individualized in order. Two inputs get
/// the same code iff there is a label-, mark- and root-preserving isomorphism.
pub fn canonical_code(g: &Graph, roots: &[usize]) -> BallCode {
    Canon::new(g, roots).run()
}

struct Canon<'a> {
    g: &'a Graph,
    roots: &'a [usize],
    nbrs: Vec<Vec<(u8, u32, usize)>>,
    first: Option<(Vec<u8>, Vec<usize>)>,
    best: Option<(Vec<u8>, Vec<usize>)>,
}

impl<'a> Canon<'a> {
    fn new(g: &'a Graph, roots: &'a [usize]) -> Self {
        let nbrs = g
            .adj
            .iter()
            .map(|a| a.iter().map(|&(w, d, l)| (d as u8, l, w)).collect())
            .collect();
        Canon {
            g,
            roots,
            nbrs,
            first: None,
            best: None,
        }
    }

    fn run(mut self) -> BallCode {
        let n = self.g.n;
        let dist = self.roots.first().map(|&r| self.g.distances(r));
        let keys: Vec<(usize, usize, u32)> = (0..n)
            .map(|v| {
                let rpos = self
                    .roots
                    .iter()
                    .position(|&r| r == v)
                    .unwrap_or(self.roots.len());
                let d = dist
                    .as_ref()
                    .map(|d| d[v].unwrap_or(usize::MAX))
                    .unwrap_or(0);
                let m = self.g.marks.as_ref().map(|m| m[v]).unwrap_or(0);
                (rpos, d, m)
            })
            .collect();
        let colors = rank(&keys);
        let mut path = Vec::new();
        self.search(colors, &mut path);
        BallCode(self.best.unwrap().0)
    }

    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = colors.len();
        let mut k = count_distinct(&colors);
        loop {
            if k == n {
                return colors;
            }
            let sigs: Vec<(u32, Vec<(u8, u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut s: Vec<(u8, u32, u32)> = self.nbrs[v]
                        .iter()
                        .map(|&(d, l, w)| (d, l, colors[w]))
                        .collect();
                    s.sort_unstable();
                    (colors[v], s)
                })
                .collect();
            let next = rank(&sigs);
            let k2 = count_distinct(&next);
            colors = next;
            if k2 == k {
                return colors;
            }
            k = k2;
        }
    }

    fn search(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) -> Option<usize> {
        let colors = self.refine(colors);
        let n = colors.len();
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let target = counts.iter().position(|&c| c > 1);
        let Some(c) = target else {
            return self.leaf(&colors, path);
        };
        let c = c as u32;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == c).collect();
        for v in cell {
            let child: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(w, &x)| {
                    if x > c || (x == c && w != v) {
                        x + 1
                    } else {
                        x
                    }
                })
                .collect();
            path.push(v);
            let r = self.search(child, path);
            path.pop();
            if let Some(l) = r {
                if l < path.len() {
                    return Some(l);
                }
            }
        }
        None
    }

    fn leaf(&mut self, colors: &[u32], path: &[usize]) -> Option<usize> {
        let cert = self.certificate(colors);
        match (&self.first, &self.best) {
            (None, _) => {
                self.first = Some((cert.clone(), path.to_vec()));
                self.best = Some((cert, path.to_vec()));
                None
            }
            (Some(f), Some(b)) => {
                if cert == f.0 {
                    return Some(common_prefix(path, &f.1));
                }
                if cert == b.0 {
                    return Some(common_prefix(path, &b.1));
                }
                if cert < b.0 {
                    self.best = Some((cert, path.to_vec()));
                }
                None
            }
            _ => unreachable!(),
        }
    }

    fn certificate(&self, pos: &[u32]) -> Vec<u8> {
        let g = self.g;
        let mut used: BTreeSet<u32> = BTreeSet::new();
        for &(_, _, l) in &g.arcs {
            used.insert(l);
        }
        let mut out = Vec::with_capacity(16 + 12 * (g.edges.len() + g.arcs.len()));
        push_u32(&mut out, used.len() as u32);
        for &l in &used {
            let s = g.symbols[l as usize].as_bytes();
            push_u32(&mut out, s.len() as u32);
            out.extend_from_slice(s);
        }
        push_u32(&mut out, g.n as u32);
        push_u32(&mut out, self.roots.len() as u32);
        for &r in self.roots {
            push_u32(&mut out, pos[r]);
        }
        match &g.marks {
            None => out.push(0),
            Some(m) => {
                out.push(1);
                let mut inv = vec![0u32; g.n];
                for v in 0..g.n {
                    inv[pos[v] as usize] = m[v];
                }
                for x in inv {
                    push_u32(&mut out, x);
                }
            }
        }
        let mut es: Vec<(u32, u32)> = g
            .edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (pos[a], pos[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        es.sort_unstable();
        push_u32(&mut out, es.len() as u32);
        for (x, y) in es {
            push_u32(&mut out, x);
            push_u32(&mut out, y);
        }
        let mut ar: Vec<(u32, u32, u32)> = g
            .arcs
            .iter()
            .map(|&(a, b, l)| (pos[a], pos[b], l))
            .collect();
        ar.sort_unstable();
        push_u32(&mut out, ar.len() as u32);
        for (x, y, l) in ar {
            push_u32(&mut out, x);
            push_u32(&mut out, y);
            push_u32(&mut out, l);
        }
        out
    }
}

fn push_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_be_bytes());
}

fn rank<T: Ord>(keys: &[T]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut out = vec![0u32; keys.len()];
    let mut c = 0u32;
    for i in 0..order.len() {
        if i > 0 && keys[order[i]] != keys[order[i - 1]] {
            c += 1;
        }
        out[order[i]] = c;
    }
    out
}

fn count_distinct(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

fn common_prefix(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Vertex handle of a generator-backed infinite graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Handle {
    Int(i64),
    Pair(i64, i64),
    /// Reduced word over the involutive generators of a regular tree.
    Word(Vec<u8>),
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Handle::Int(i) => write!(f, "{i}"),
            Handle::Pair(x, y) => write!(f, "({x},{y})"),
            Handle::Word(w) => write!(f, "{w:?}"),
        }
    }
}

/// Lazily generated locally finite infinite graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    IntegerLine,
    Grid2d,
    RegularTree(u8),
    MarkedLine(BTreeSet<i64>),
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::IntegerLine => "integer_line".into(),
            Generator::Grid2d => "grid2d".into(),
            Generator::RegularTree(k) => format!("regular_tree({k})"),
            Generator::MarkedLine(c) => format!("marked_line({c:?})"),
        }
    }

    pub fn origin(&self) -> Handle {
        match self {
            Generator::IntegerLine | Generator::MarkedLine(_) => Handle::Int(0),
            Generator::Grid2d => Handle::Pair(0, 0),
            Generator::RegularTree(_) => Handle::Word(Vec::new()),
        }
    }

    /// Whether every vertex looks the same (so one handle represents all roots).
    pub fn is_transitive(&self) -> bool {
        !matches!(self, Generator::MarkedLine(_))
    }

    fn check(&self, h: &Handle) -> Result<()> {
        let ok = match (self, h) {
            (Generator::IntegerLine | Generator::MarkedLine(_), Handle::Int(_)) => true,
            (Generator::Grid2d, Handle::Pair(..)) => true,
            (Generator::RegularTree(k), Handle::Word(w)) => {
                w.iter().all(|&s| s < *k) && w.windows(2).all(|p| p[0] != p[1])
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("{h} for {}", self.name())))
        }
    }

    fn neighbors(&self, h: &Handle) -> Vec<Handle> {
        match (self, h) {
            (Generator::IntegerLine | Generator::MarkedLine(_), Handle::Int(i)) => {
                vec![Handle::Int(i - 1), Handle::Int(i + 1)]
            }
            (Generator::Grid2d, Handle::Pair(x, y)) => vec![
                Handle::Pair(x - 1, *y),
                Handle::Pair(x + 1, *y),
                Handle::Pair(*x, y - 1),
                Handle::Pair(*x, y + 1),
            ],
            (Generator::RegularTree(k), Handle::Word(w)) => {
                let mut out = Vec::with_capacity(*k as usize);
                if let Some((_, rest)) = w.split_last() {
                    out.push(Handle::Word(rest.to_vec()));
                }
                for s in 0..*k {
                    if w.last() != Some(&s) {
                        let mut x = w.clone();
                        x.push(s);
                        out.push(Handle::Word(x));
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    fn mark(&self, h: &Handle) -> u32 {
        match (self, h) {
            (Generator::MarkedLine(core), Handle::Int(i)) => core.contains(i) as u32,
            _ => 0,
        }
    }

    /// The `r`-ball around `h`, rooted at vertex 0.
    pub fn ball(&self, h: &Handle, r: usize) -> Result<RootedGraph> {
        self.check(h)?;
        let mut idx: HashMap<Handle, usize> = HashMap::new();
        let mut order = vec![h.clone()];
        let mut dist = vec![0usize];
        idx.insert(h.clone(), 0);
        let mut head = 0;
        while head < order.len() {
            let du = dist[head];
            let u = order[head].clone();
            head += 1;
            if du == r {
                continue;
            }
            for w in self.neighbors(&u) {
                if !idx.contains_key(&w) {
                    idx.insert(w.clone(), order.len());
                    order.push(w);
                    dist.push(du + 1);
                }
            }
        }
        let mut edges = Vec::new();
        for (i, u) in order.iter().enumerate() {
            for w in self.neighbors(u) {
                if let Some(&j) = idx.get(&w) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        let mut g = Graph::new(order.len(), &edges)?;
        if matches!(self, Generator::MarkedLine(_)) {
            g = g.with_marks(order.iter().map(|u| self.mark(u)).collect())?;
        }
        Ok(RootedGraph { graph: g, root: 0 })
    }
}

/// Anything that can produce the ball of a given radius around its root.
pub trait BallSource {
    fn root_ball(&self, r: usize) -> Result<RootedGraph>;
}

impl BallSource for RootedGraph {
    fn root_ball(&self, r: usize) -> Result<RootedGraph> {
        Ok(self.ball(r))
    }
}

/// A generator together with the vertex used as root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorRoot {
    pub generator: Generator,
    pub handle: Handle,
}

impl GeneratorRoot {
    pub fn new(generator: Generator, handle: Handle) -> Result<Self> {
        generator.check(&handle)?;
        Ok(GeneratorRoot { generator, handle })
    }

    pub fn at_origin(generator: Generator) -> Self {
        let handle = generator.origin();
        GeneratorRoot { generator, handle }
    }
}

impl BallSource for GeneratorRoot {
    fn root_ball(&self, r: usize) -> Result<RootedGraph> {
        self.generator.ball(&self.handle, r)
    }
}

/// `1/(1+R)` where `R` is the smallest radius at which the root balls differ,
/// or 0 when they agree up to `r_max`.
pub fn rooted_distance(
    a: &dyn BallSource,
    b: &dyn BallSource,
    r_max: usize,
) -> Result<BigRational> {
    for r in 0..=r_max {
        if a.root_ball(r)?.code() != b.root_ball(r)?.code() {
            return Ok(BigRational::new(BigInt::from(1), BigInt::from(r as u64 + 1)));
        }
    }
    Ok(BigRational::zero())
}

/// Standard finite families.
pub mod families {
    use super::*;

    pub fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &e).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3);
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &e).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        Graph::new(n, &e).unwrap()
    }

    /// `K_{1,k}` with the centre at vertex 0.
    pub fn star(k: usize) -> Graph {
        let e: Vec<_> = (1..=k).map(|i| (0, i)).collect();
        Graph::new(k + 1, &e).unwrap()
    }

    /// `n x n` discrete torus.
    pub fn torus(n: usize) -> Graph {
        assert!(n >= 3);
        let id = |x: usize, y: usize| (x % n) * n + (y % n);
        let mut e = Vec::new();
        for x in 0..n {
            for y in 0..n {
                e.push((id(x, y), id(x + 1, y)));
                e.push((id(x, y), id(x, y + 1)));
            }
        }
        Graph::new(n * n, &e).unwrap()
    }

    /// `w x h` grid patch (no wrap-around).
    pub fn grid(w: usize, h: usize) -> Graph {
        let id = |x: usize, y: usize| x * h + y;
        let mut e = Vec::new();
        for x in 0..w {
            for y in 0..h {
                if x + 1 < w {
                    e.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < h {
                    e.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Graph::new(w * h, &e).unwrap()
    }

    /// Two `n x n` grid patches joined corner to corner by a path of `n` edges.
    pub fn barbell(n: usize) -> Graph {
        assert!(n >= 2);
        let block = n * n;
        let mut e: Vec<(usize, usize)> = grid(n, n).edges().to_vec();
        e.extend(grid(n, n).edges().iter().map(|&(a, b)| (a + block, b + block)));
        // the path uses n - 1 fresh interior vertices
        let mut prev = block - 1;
        for i in 0..n - 1 {
            let v = 2 * block + i;
            e.push((prev, v));
            prev = v;
        }
        e.push((prev, block));
        Graph::new(2 * block + n - 1, &e).unwrap()
    }

    /// Random connected graph: a random labelled tree plus independent extra edges.
    pub fn random_connected<R: Rng>(n: usize, p_extra: f64, rng: &mut R) -> Graph {
        let mut set = BTreeSet::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            set.insert((u, v));
        }
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p_extra {
                    set.insert((u, v));
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let e: Vec<_> = set.into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
        Graph::new(n, &e).unwrap()
    }

    pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        perm
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force rooted isomorphism by trying every bijection.
    fn brute_iso(a: &Graph, ra: &[usize], b: &Graph, rb: &[usize]) -> bool {
        let n = a.vertex_count();
        if n != b.vertex_count() || a.edges().len() != b.edges().len() {
            return false;
        }
        let eb: BTreeSet<(usize, usize)> = b.edges().iter().copied().collect();
        let mut perm: Vec<usize> = (0..n).collect();
        fn rec(
            k: usize,
            perm: &mut Vec<usize>,
            a: &Graph,
            eb: &BTreeSet<(usize, usize)>,
            ra: &[usize],
            rb: &[usize],
        ) -> bool {
            let n = perm.len();
            if k == n {
                let ok_roots = ra.iter().zip(rb).all(|(&x, &y)| perm[x] == y);
                return ok_roots
                    && a.edges().iter().all(|&(u, v)| {
                        let (x, y) = (perm[u], perm[v]);
                        eb.contains(&(x.min(y), x.max(y)))
                    });
            }
            for i in k..n {
                perm.swap(k, i);
                if rec(k + 1, perm, a, eb, ra, rb) {
                    return true;
                }
                perm.swap(k, i);
            }
            false
        }
        rec(0, &mut perm, a, &eb, ra, rb)
    }

    #[test]
    fn ball_of_c6_is_p5_centered() {
        let b = cycle(6).ball(0, 2).unwrap();
        assert_eq!(b.graph.vertex_count(), 5);
        let p5 = path(5).rooted(2).unwrap();
        assert_eq!(b.code(), p5.code());
    }

    #[test]
    fn zero_ball_is_single_vertex() {
        let b = torus(4).ball(5, 0).unwrap();
        assert_eq!(b.graph.vertex_count(), 1);
        assert!(b.graph.edges().is_empty());
    }

    #[test]
    fn tree_ball_sizes() {
        let t = Generator::RegularTree(3);
        let b = t.ball(&t.origin(), 2).unwrap();
        assert_eq!(b.graph.vertex_count(), 10);
        let b3 = t.ball(&Handle::Word(vec![0, 1]), 3).unwrap();
        assert_eq!(b3.graph.vertex_count(), 1 + 3 + 6 + 12);
    }

    #[test]
    fn generator_balls_restrict_consistently() {
        for g in [
            Generator::IntegerLine,
            Generator::Grid2d,
            Generator::RegularTree(3),
            Generator::MarkedLine([0, 2].into()),
        ] {
            let h = g.origin();
            for r in 1..4 {
                let big = g.ball(&h, r).unwrap();
                let small = g.ball(&h, r - 1).unwrap();
                assert_eq!(big.ball(r - 1).code(), small.code(), "{}", g.name());
            }
        }
    }

    #[test]
    fn unknown_handle_rejected() {
        assert!(Generator::Grid2d.ball(&Handle::Int(0), 1).is_err());
        assert!(Generator::RegularTree(3).ball(&Handle::Word(vec![1, 1]), 1).is_err());
        assert!(path(3).ball(7, 1).is_err());
    }

    #[test]
    fn p3_end_vs_center() {
        let p = path(3);
        assert_ne!(canonical_code(&p, &[0]), canonical_code(&p, &[1]));
        assert_eq!(canonical_code(&p, &[0]), canonical_code(&p, &[2]));
    }

    #[test]
    fn codes_match_brute_force_isomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut graphs = Vec::new();
        for _ in 0..40 {
            let n = rng.random_range(2..7);
            graphs.push(random_connected(n, 0.3, &mut rng));
        }
        for a in &graphs {
            for b in &graphs {
                if a.vertex_count() != b.vertex_count() {
                    continue;
                }
                for ra in 0..a.vertex_count() {
                    let rb = ra % b.vertex_count();
                    let same = canonical_code(a, &[ra]) == canonical_code(b, &[rb]);
                    assert_eq!(same, brute_iso(a, &[ra], b, &[rb]));
                }
            }
        }
    }

    #[test]
    fn labels_distinguish_orientation() {
        let a = Graph::labeled(3, &[], &[(0, 1, "s".into()), (1, 2, "s".into()), (2, 0, "s".into())])
            .unwrap();
        let b = Graph::labeled(3, &[], &[(1, 0, "s".into()), (2, 1, "s".into()), (0, 2, "s".into())])
            .unwrap();
        // reversing every arc of a directed triangle gives an isomorphic graph
        assert_eq!(canonical_code(&a, &[0]), canonical_code(&b, &[0]));
        let c = Graph::labeled(3, &[], &[(0, 1, "s".into()), (1, 2, "s".into()), (0, 2, "s".into())])
            .unwrap();
        assert_ne!(canonical_code(&a, &[0]), canonical_code(&c, &[0]));
        let d = Graph::labeled(3, &[], &[(0, 1, "t".into()), (1, 2, "t".into()), (2, 0, "t".into())])
            .unwrap();
        assert_ne!(canonical_code(&a, &[0]), canonical_code(&d, &[0]));
    }

    #[test]
    fn complete_graph_is_fast() {
        let k = complete(12);
        let c = canonical_code(&k, &[0]);
        assert_eq!(c, canonical_code(&k, &[7]));
    }

    #[test]
    fn rooted_distance_examples() {
        let line = GeneratorRoot::at_origin(Generator::IntegerLine);
        let c10 = cycle(10).rooted(0).unwrap();
        let c3 = cycle(3).rooted(0).unwrap();
        assert!(rooted_distance(&c10, &line, 3).unwrap().is_zero());
        assert_eq!(
            rooted_distance(&c3, &line, 3).unwrap(),
            BigRational::new(1.into(), 2.into())
        );
        assert!(rooted_distance(&c3, &c3, 3).unwrap().is_zero());
    }

    #[test]
    fn barbell_shape() {
        let b = barbell(4);
        assert_eq!(b.vertex_count(), 2 * 16 + 3);
        assert!(b.is_connected());
        let d = b.distances(15);
        assert_eq!(d[16], Some(4));
    }
}
