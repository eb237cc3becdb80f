//! Schreier graphs of subgroups and the passage from invariant random
//! subgroups to unimodular random Schreier graphs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use num::Zero;

use crate::error::{Error, Result};
use crate::graph::{Graph, RootedGraph};
use crate::group::{FiniteGroup, Subgroup};
use crate::mass_transport::{Atom, Measure, Space};
use crate::util::{fmt_q, q, q_int, Q};

/// Symbols with an involution `s ↔ s⁻¹` (fixed points allowed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    pub symbols: Vec<String>,
    pub inverse: Vec<usize>,
}

impl GeneratorSet {
    pub fn new(symbols: Vec<String>, inverse: Vec<usize>) -> Result<Self> {
        let k = symbols.len();
        if inverse.len() != k || inverse.iter().enumerate().any(|(s, &t)| t >= k || inverse[t] != s) {
            return Err(Error::Malformed("inverse pairing is not an involution".into()));
        }
        if symbols.iter().collect::<BTreeSet<_>>().len() != k {
            return Err(Error::Malformed("repeated generator symbol".into()));
        }
        Ok(GeneratorSet { symbols, inverse })
    }

    /// `{+1, -1}` generating the integers.
    pub fn plus_minus() -> Self {
        GeneratorSet::new(vec!["+1".into(), "-1".into()], vec![1, 0]).unwrap()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Generators of a finite group, one element per symbol.
#[derive(Clone, Debug)]
pub struct GroupGenerators {
    pub set: GeneratorSet,
    pub elements: Vec<usize>,
}

impl GroupGenerators {
    /// The pairing is read off from the group; the elements must generate it.
    pub fn new(group: &FiniteGroup, names: Vec<String>, elements: Vec<usize>) -> Result<Self> {
        if names.len() != elements.len() || elements.iter().any(|&e| e >= group.order()) {
            return Err(Error::Malformed("generator names and elements disagree".into()));
        }
        let mut inverse = Vec::new();
        for &e in &elements {
            let t = elements
                .iter()
                .position(|&f| f == group.inv(e))
                .ok_or_else(|| Error::Malformed(format!("inverse of element {e} is not a generator")))?;
            inverse.push(t);
        }
        if group.generated(&elements).order() != group.order() {
            return Err(Error::Precondition("generators do not generate the group".into()));
        }
        Ok(GroupGenerators {
            set: GeneratorSet::new(names, inverse)?,
            elements,
        })
    }
}

/// Right action of each symbol on coset indices `0..m`; coset 0 is the subgroup itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetTable {
    pub action: Vec<Vec<usize>>,
}

impl CosetTable {
    pub fn index(&self) -> usize {
        self.action.first().map_or(1, |a| a.len())
    }

    pub fn validate(&self, s: &GeneratorSet) -> Result<()> {
        let m = self.index();
        if self.action.len() != s.len() || self.action.iter().any(|a| a.len() != m) {
            return Err(Error::Malformed("coset table shape does not match generators".into()));
        }
        for (i, a) in self.action.iter().enumerate() {
            let b = &self.action[s.inverse[i]];
            for (c, &d) in a.iter().enumerate() {
                if d >= m || b[d] != c {
                    return Err(Error::Malformed(format!(
                        "coset {c}: {} then its inverse is not the identity",
                        s.symbols[i]
                    )));
                }
            }
        }
        let mut seen = vec![false; m];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(c) = queue.pop_front() {
            for a in &self.action {
                if !seen[a[c]] {
                    seen[a[c]] = true;
                    queue.push_back(a[c]);
                }
            }
        }
        if seen.iter().any(|x| !x) {
            return Err(Error::Precondition("coset table is intransitive".into()));
        }
        Ok(())
    }

    /// Right cosets `Hg` of a subgroup of a finite group, enumerated from `H`.
    pub fn of_subgroup(group: &FiniteGroup, h: &Subgroup, gens: &GroupGenerators) -> CosetTable {
        let coset = |g: usize| -> Vec<usize> {
            let mut v: Vec<usize> = h.elements().iter().map(|&x| group.mul(x, g)).collect();
            v.sort_unstable();
            v
        };
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut reps = vec![group.identity()];
        ids.insert(coset(group.identity()), 0);
        let mut head = 0;
        while head < reps.len() {
            let g = reps[head];
            head += 1;
            for &s in &gens.elements {
                let c = coset(group.mul(g, s));
                if !ids.contains_key(&c) {
                    ids.insert(c, reps.len());
                    reps.push(group.mul(g, s));
                }
            }
        }
        let action = gens
            .elements
            .iter()
            .map(|&s| reps.iter().map(|&g| ids[&coset(group.mul(g, s))]).collect())
            .collect();
        CosetTable { action }
    }
}

/// A subgroup given concretely enough to build its Schreier graph.
#[derive(Clone, Debug)]
pub enum SubgroupRep {
    Cosets(CosetTable),
    InGroup {
        group: Arc<FiniteGroup>,
        subgroup: Subgroup,
        generators: GroupGenerators,
    },
    /// Trivial subgroup of the group presented by `S` with only the relations `s·s⁻¹ = 1`;
    /// its Schreier graph is a tree and needs a truncation radius.
    FreeTrivial,
}

/// Schreier graph: cosets as vertices, an arc `Hg -s-> Hgs` for every symbol,
/// rooted at the subgroup itself.
pub fn schreier_graph(
    h: &SubgroupRep,
    s: &GeneratorSet,
    truncation: Option<usize>,
) -> Result<RootedGraph> {
    let table = match h {
        SubgroupRep::Cosets(t) => t.clone(),
        SubgroupRep::InGroup {
            group,
            subgroup,
            generators,
        } => {
            if generators.set != *s {
                return Err(Error::Malformed("generator set differs from the subgroup's".into()));
            }
            CosetTable::of_subgroup(group, subgroup, generators)
        }
        SubgroupRep::FreeTrivial => {
            let r = truncation.ok_or_else(|| {
                Error::Precondition("infinite index subgroup needs a truncation radius".into())
            })?;
            return Ok(free_ball(s, r));
        }
    };
    table.validate(s)?;
    let m = table.index();
    let mut arcs = Vec::with_capacity(m * s.len());
    for (i, a) in table.action.iter().enumerate() {
        for (c, &d) in a.iter().enumerate() {
            arcs.push((c, d, s.symbols[i].clone()));
        }
    }
    let g = Graph::labeled(m, &[], &arcs)?;
    let full = RootedGraph::new(g, 0)?;
    Ok(match truncation {
        Some(r) => full.ball(r),
        None => full,
    })
}

fn free_ball(s: &GeneratorSet, r: usize) -> RootedGraph {
    // vertices are reduced words; appending s to a word ending in s⁻¹ cancels
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::from([(Vec::new(), 0)]);
    let mut arcs = Vec::new();
    let mut head = 0;
    while head < words.len() {
        let w = words[head].clone();
        head += 1;
        for (k, sym) in s.symbols.iter().enumerate() {
            let mut x = w.clone();
            if x.last() == Some(&s.inverse[k]) {
                x.pop();
            } else {
                x.push(k);
            }
            if x.len() > r {
                continue;
            }
            let j = *ids.entry(x.clone()).or_insert_with(|| {
                words.push(x);
                words.len() - 1
            });
            arcs.push((ids[&w], j, sym.clone()));
        }
    }
    let g = Graph::labeled(words.len(), &[], &arcs).unwrap();
    RootedGraph { graph: g, root: 0 }
}

/// A finitely supported measure on subgroups of a finite group.
#[derive(Clone, Debug)]
pub struct Irs {
    pub group: Arc<FiniteGroup>,
    pub atoms: Vec<(Subgroup, Q)>,
}

impl Irs {
    /// Uniform measure on the conjugacy class of `h`.
    pub fn conjugacy_class(group: Arc<FiniteGroup>, h: &Subgroup) -> Irs {
        let class: BTreeSet<Subgroup> = (0..group.order()).map(|g| group.conjugate(h, g)).collect();
        let n = class.len() as i64;
        let atoms = class.into_iter().map(|k| (k, q(1, n))).collect();
        Irs { group, atoms }
    }

    fn weights(&self) -> BTreeMap<Subgroup, Q> {
        let mut w: BTreeMap<Subgroup, Q> = BTreeMap::new();
        for (h, x) in &self.atoms {
            *w.entry(h.clone()).or_insert_with(Q::zero) += x;
        }
        w
    }

    /// Weights sum to one and are constant on conjugacy classes; missing subgroups weigh 0.
    pub fn check_invariance(&self) -> Result<()> {
        let total: Q = self.atoms.iter().map(|a| a.1.clone()).sum();
        if total != q_int(1) {
            return Err(Error::Malformed(format!("weights sum to {}", fmt_q(&total))));
        }
        let w = self.weights();
        for g in 0..self.group.order() {
            for (i, (h, _)) in self.atoms.iter().enumerate() {
                let c = self.group.conjugate(h, g);
                if w.get(&c).cloned().unwrap_or_else(Q::zero) != w[h] {
                    return Err(Error::NotInvariant {
                        conjugator: g,
                        atom: i,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Push-forward of an invariant random subgroup to rooted labeled Schreier graphs.
pub fn irs_to_ursg(irs: &Irs, gens: &GroupGenerators) -> Result<Measure> {
    irs.check_invariance()?;
    let mut atoms = Vec::new();
    for (h, w) in &irs.atoms {
        if w.is_zero() {
            continue;
        }
        let rep = SubgroupRep::InGroup {
            group: irs.group.clone(),
            subgroup: h.clone(),
            generators: gens.clone(),
        };
        atoms.push(Atom {
            space: Space::Finite(schreier_graph(&rep, &gens.set, None)?),
            weight: w.clone(),
        });
    }
    Measure::new(atoms, true)
}

/// Quotients `X/H` rooted at the classes of a fundamental domain of `Γ`,
/// with `H` distributed by the invariant random subgroup. `action[g]` is the
/// vertex permutation of `g`, composed as a right action.
pub fn urm_from_discrete_irs(x: &Graph, action: &[Vec<usize>], irs: &Irs) -> Result<Measure> {
    let group = &irs.group;
    let n = x.vertex_count();
    if action.len() != group.order() {
        return Err(Error::Malformed("one permutation per group element is required".into()));
    }
    let edges: BTreeSet<(usize, usize)> = x.edges().iter().copied().collect();
    for (g, p) in action.iter().enumerate() {
        if p.len() != n || p.iter().collect::<BTreeSet<_>>().len() != n || p.iter().any(|&v| v >= n) {
            return Err(Error::Malformed(format!("action of {g} is not a permutation")));
        }
        for &(a, b) in &edges {
            let (c, d) = (p[a], p[b]);
            if !edges.contains(&(c.min(d), c.max(d))) {
                return Err(Error::Malformed(format!("element {g} is not a graph automorphism")));
            }
        }
        if g != group.identity() {
            if let Some(v) = (0..n).find(|&v| p[v] == v) {
                return Err(Error::NotFree { element: g, vertex: v });
            }
        }
    }
    for a in 0..group.order() {
        for b in 0..group.order() {
            let ab = &action[group.mul(a, b)];
            if (0..n).any(|v| ab[v] != action[b][action[a][v]]) {
                return Err(Error::Malformed("permutations do not form a right action".into()));
            }
        }
    }
    irs.check_invariance()?;
    let mut domain = Vec::new();
    let mut covered = vec![false; n];
    for v in 0..n {
        if !covered[v] {
            domain.push(v);
            for p in action {
                covered[p[v]] = true;
            }
        }
    }
    let mut atoms = Vec::new();
    for (h, w) in &irs.atoms {
        let quotient = quotient_graph(x, action, h)?;
        for &v in &domain {
            atoms.push(Atom {
                space: Space::Finite(RootedGraph::new(quotient.0.clone(), quotient.1[v])?),
                weight: w / q_int(domain.len() as i64),
            });
        }
    }
    Measure::new(atoms, true)
}

/// `X/H` and the class of every vertex; fails if the quotient has loops or parallel edges.
fn quotient_graph(x: &Graph, action: &[Vec<usize>], h: &Subgroup) -> Result<(Graph, Vec<usize>)> {
    let n = x.vertex_count();
    let rep: Vec<usize> = (0..n)
        .map(|v| h.elements().iter().map(|&g| action[g][v]).min().unwrap())
        .collect();
    let reps: BTreeSet<usize> = rep.iter().copied().collect();
    let dense: BTreeMap<usize, usize> = reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let class: Vec<usize> = rep.iter().map(|r| dense[r]).collect();
    let mut mult: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(a, b) in x.edges() {
        let (c, d) = (class[a], class[b]);
        if c == d {
            return Err(Error::Precondition("quotient graph has a loop".into()));
        }
        *mult.entry((c.min(d), c.max(d))).or_default() += 1;
    }
    if mult.values().any(|&m| m != h.order()) {
        return Err(Error::Precondition("quotient graph has parallel edges".into()));
    }
    let e: Vec<(usize, usize)> = mult.keys().copied().collect();
    Ok((Graph::new(reps.len(), &e)?, class))
}

/// The symmetric, dihedral and cyclic examples with their standard generating sets.
pub mod catalog {
    use super::*;
    use crate::group::{dihedral, find_perm, symmetric};

    pub struct Example {
        pub name: &'static str,
        pub group: Arc<FiniteGroup>,
        pub gens: GroupGenerators,
        pub perms: Vec<Vec<usize>>,
    }

    fn build(name: &'static str, gp: (FiniteGroup, Vec<Vec<usize>>), named: &[(&str, Vec<usize>)]) -> Example {
        let (g, perms) = gp;
        let names = named.iter().map(|(n, _)| n.to_string()).collect();
        let elems = named.iter().map(|(_, p)| find_perm(&perms, p).unwrap()).collect();
        let gens = GroupGenerators::new(&g, names, elems).unwrap();
        Example {
            name,
            group: Arc::new(g),
            gens,
            perms,
        }
    }

    /// `S3` with `{(12), (123), (132)}`.
    pub fn s3() -> Example {
        build(
            "S3",
            symmetric(3),
            &[("(12)", vec![1, 0, 2]), ("(123)", vec![1, 2, 0]), ("(132)", vec![2, 0, 1])],
        )
    }

    /// `S4` with `{(12), (1234), (1432)}`.
    pub fn s4() -> Example {
        build(
            "S4",
            symmetric(4),
            &[
                ("(12)", vec![1, 0, 2, 3]),
                ("(1234)", vec![1, 2, 3, 0]),
                ("(1432)", vec![3, 0, 1, 2]),
            ],
        )
    }

    /// Symmetries of the square with `{r, r⁻¹, s}`.
    pub fn d4() -> Example {
        build(
            "D4",
            dihedral(4),
            &[("r", vec![1, 2, 3, 0]), ("r^-1", vec![3, 0, 1, 2]), ("s", vec![0, 3, 2, 1])],
        )
    }

    pub fn all() -> Vec<Example> {
        vec![s3(), s4(), d4()]
    }
}

#[cfg(test)]
mod tests {
    use super::catalog::*;
    use super::*;
    use crate::graph::families::cycle;
    use crate::mass_transport::{is_unimodular, uniform_root_measure};

    fn in_out_bijection(g: &RootedGraph, s: &GeneratorSet) -> bool {
        let mut syms = s.symbols.clone();
        syms.sort();
        (0..g.graph.vertex_count()).all(|v| {
            let (o, i) = g.graph.label_profile(v);
            o == syms.iter().map(|x| x.as_str()).collect::<Vec<_>>()
                && i == syms.iter().map(|x| x.as_str()).collect::<Vec<_>>()
        })
    }

    #[test]
    fn three_z_in_z_is_triangle() {
        let s = GeneratorSet::plus_minus();
        let t = CosetTable {
            action: vec![vec![1, 2, 0], vec![2, 0, 1]],
        };
        let g = schreier_graph(&SubgroupRep::Cosets(t), &s, None).unwrap();
        assert_eq!(g.graph.vertex_count(), 3);
        assert_eq!(g.graph.unlabeled().edges().len(), 3);
        assert!(in_out_bijection(&g, &s));
    }

    #[test]
    fn full_group_is_one_vertex_with_loops() {
        let s = GeneratorSet::plus_minus();
        let t = CosetTable {
            action: vec![vec![0], vec![0]],
        };
        let g = schreier_graph(&SubgroupRep::Cosets(t), &s, None).unwrap();
        assert_eq!(g.graph.vertex_count(), 1);
        assert_eq!(g.graph.arcs().count(), 2);
    }

    #[test]
    fn bad_tables() {
        let s = GeneratorSet::plus_minus();
        let broken = CosetTable {
            action: vec![vec![1, 2, 0], vec![1, 2, 0]],
        };
        assert!(schreier_graph(&SubgroupRep::Cosets(broken), &s, None).is_err());
        let intransitive = CosetTable {
            action: vec![vec![0, 1], vec![0, 1]],
        };
        assert!(matches!(
            schreier_graph(&SubgroupRep::Cosets(intransitive), &s, None),
            Err(Error::Precondition(_))
        ));
        assert!(schreier_graph(&SubgroupRep::FreeTrivial, &s, None).is_err());
    }

    #[test]
    fn free_tree_truncated() {
        let s = GeneratorSet::plus_minus();
        let g = schreier_graph(&SubgroupRep::FreeTrivial, &s, Some(3)).unwrap();
        assert_eq!(g.graph.vertex_count(), 7);
        let two = GeneratorSet::new(vec!["a".into(), "A".into(), "b".into(), "B".into()], vec![1, 0, 3, 2])
            .unwrap();
        let g = schreier_graph(&SubgroupRep::FreeTrivial, &two, Some(2)).unwrap();
        assert_eq!(g.graph.vertex_count(), 1 + 4 + 12);
    }

    #[test]
    fn transposition_subgroup_of_s3() {
        let ex = s3();
        let t = find(&ex, &[1, 0, 2]);
        let h = ex.group.generated(&[t]);
        let rep = SubgroupRep::InGroup {
            group: ex.group.clone(),
            subgroup: h.clone(),
            generators: ex.gens.clone(),
        };
        let g = schreier_graph(&rep, &ex.gens.set, None).unwrap();
        assert_eq!(g.graph.vertex_count(), 3);
        assert!(in_out_bijection(&g, &ex.gens.set));

        let irs = Irs::conjugacy_class(ex.group.clone(), &h);
        assert_eq!(irs.atoms.len(), 3);
        let m = irs_to_ursg(&irs, &ex.gens).unwrap();
        // same labeled triangle-with-loop, rooted at each of its three vertices
        assert_eq!(m.atoms.len(), 3);
        assert!(m.atoms.iter().all(|a| a.weight == q(1, 3)));
        assert!(is_unimodular(&m, 3, &Q::zero()).unwrap().pass);

        let mut skew = irs.clone();
        skew.atoms[0].1 = q(1, 2);
        skew.atoms[1].1 = q(1, 2);
        skew.atoms.truncate(2);
        assert!(matches!(irs_to_ursg(&skew, &ex.gens), Err(Error::NotInvariant { .. })));
    }

    fn find(ex: &Example, p: &[usize]) -> usize {
        crate::group::find_perm(&ex.perms, p).unwrap()
    }

    #[test]
    fn normal_subgroup_single_atom() {
        let ex = s3();
        let c = find(&ex, &[1, 2, 0]);
        let a3 = ex.group.generated(&[c]);
        let irs = Irs {
            group: ex.group.clone(),
            atoms: vec![(a3, q_int(1))],
        };
        let m = irs_to_ursg(&irs, &ex.gens).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert!(is_unimodular(&m, 3, &Q::zero()).unwrap().pass);
    }

    #[test]
    fn conjugates_give_isomorphic_graphs() {
        for ex in all() {
            for class in ex.group.subgroup_classes() {
                let codes: BTreeSet<_> = class
                    .iter()
                    .map(|h| {
                        let rep = SubgroupRep::InGroup {
                            group: ex.group.clone(),
                            subgroup: h.clone(),
                            generators: ex.gens.clone(),
                        };
                        let g = schreier_graph(&rep, &ex.gens.set, None).unwrap();
                        assert!(in_out_bijection(&g, &ex.gens.set));
                        // conjugate subgroups share the graph up to moving the root
                        let all: BTreeSet<_> =
                            (0..g.graph.vertex_count()).map(|v| g.reroot(v).code()).collect();
                        all
                    })
                    .collect();
                assert_eq!(codes.len(), 1, "{}", ex.name);
            }
        }
    }

    fn rotations(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|k| (0..n).map(|v| (v + k) % n).collect()).collect()
    }

    #[test]
    fn quotients_of_c6() {
        let z6 = Arc::new(FiniteGroup::cyclic(6));
        let order2 = z6.generated(&[3]);
        let irs = Irs {
            group: z6.clone(),
            atoms: vec![(order2, q_int(1))],
        };
        let m = urm_from_discrete_irs(&cycle(6), &rotations(6), &irs).unwrap();
        assert_eq!(m.atoms.len(), 1);
        let Space::Finite(g) = &m.atoms[0].space else { panic!() };
        assert_eq!(g.code(), cycle(3).rooted(0).unwrap().code());

        let order3 = Irs {
            group: z6.clone(),
            atoms: vec![(z6.generated(&[2]), q_int(1))],
        };
        assert!(urm_from_discrete_irs(&cycle(6), &rotations(6), &order3).is_err());

        let trivial = Irs {
            group: z6.clone(),
            atoms: vec![(z6.trivial_subgroup(), q_int(1))],
        };
        let m = urm_from_discrete_irs(&cycle(6), &rotations(6), &trivial).unwrap();
        let u = uniform_root_measure(&cycle(6)).unwrap();
        assert_eq!(m.atoms.len(), u.atoms.len());
    }

    #[test]
    fn non_free_action_rejected() {
        let z2 = Arc::new(FiniteGroup::cyclic(2));
        let reflect = vec![vec![0, 1, 2, 3, 4, 5], vec![0, 5, 4, 3, 2, 1]];
        let irs = Irs {
            group: z2.clone(),
            atoms: vec![(z2.trivial_subgroup(), q_int(1))],
        };
        assert!(matches!(
            urm_from_discrete_irs(&cycle(6), &reflect, &irs),
            Err(Error::NotFree { element: 1, vertex: 0 })
        ));
    }
}
