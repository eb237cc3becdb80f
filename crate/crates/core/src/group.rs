//! Finite groups given by multiplication tables, and their subgroups.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// A finite group with elements `0..order`; `mul[a][b]` is the product `a·b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    mul: Vec<Vec<usize>>,
    identity: usize,
    inv: Vec<usize>,
}

/// A subgroup stored as its sorted element list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subgroup(Vec<usize>);

impl Subgroup {
    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.0.binary_search(&g).is_ok()
    }
}

impl FiniteGroup {
    /// Validates closure, associativity, identity and inverses.
    pub fn from_table(mul: Vec<Vec<usize>>) -> Result<FiniteGroup> {
        let n = mul.len();
        if n == 0 || mul.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(Error::Malformed("multiplication table is not n x n over 0..n".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| mul[e][a] == a && mul[a][e] == a))
            .ok_or_else(|| Error::Malformed("no identity element".into()))?;
        let mut inv = vec![usize::MAX; n];
        for a in 0..n {
            for b in 0..n {
                if mul[a][b] == identity && mul[b][a] == identity {
                    inv[a] = b;
                }
            }
            if inv[a] == usize::MAX {
                return Err(Error::Malformed(format!("element {a} has no inverse")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(Error::Malformed(format!("not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { mul, identity, inv })
    }

    /// Closure of a set of permutations of `0..m`. The product `a·b` applies `a` first.
    /// Returns the group and the permutation of every element; element 0 is the identity.
    pub fn from_permutations(gens: &[Vec<usize>]) -> Result<(FiniteGroup, Vec<Vec<usize>>)> {
        let m = gens.first().map_or(0, |g| g.len());
        for g in gens {
            let s: BTreeSet<_> = g.iter().copied().collect();
            if g.len() != m || s.len() != m || s.iter().any(|&x| x >= m) {
                return Err(Error::Malformed("generator is not a permutation".into()));
            }
        }
        let id: Vec<usize> = (0..m).collect();
        let mut elems = vec![id.clone()];
        let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::from([(id, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in gens {
                let p = compose(&elems[i], g);
                if !index.contains_key(&p) {
                    index.insert(p.clone(), elems.len());
                    queue.push_back(elems.len());
                    elems.push(p);
                }
            }
        }
        let mul = elems
            .iter()
            .map(|a| elems.iter().map(|b| index[&compose(a, b)]).collect())
            .collect();
        Ok((FiniteGroup::from_table(mul)?, elems))
    }

    pub fn cyclic(n: usize) -> FiniteGroup {
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        FiniteGroup::from_table(mul).unwrap()
    }

    /// Direct product; element `(a, b)` is `a * other.order() + b`.
    pub fn product(&self, other: &FiniteGroup) -> FiniteGroup {
        let (n, m) = (self.order(), other.order());
        let mul = (0..n * m)
            .map(|x| {
                (0..n * m)
                    .map(|y| self.mul(x / m, y / m) * m + other.mul(x % m, y % m))
                    .collect()
            })
            .collect();
        FiniteGroup::from_table(mul).unwrap()
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.mul
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup(vec![self.identity])
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup((0..self.order()).collect())
    }

    pub fn generated(&self, gens: &[usize]) -> Subgroup {
        let mut set = BTreeSet::from([self.identity]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if set.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Subgroup(set.into_iter().collect())
    }

    /// `g H g⁻¹`.
    pub fn conjugate(&self, h: &Subgroup, g: usize) -> Subgroup {
        let gi = self.inv(g);
        let mut v: Vec<usize> = h.0.iter().map(|&x| self.mul(self.mul(g, x), gi)).collect();
        v.sort_unstable();
        Subgroup(v)
    }

    pub fn is_normal(&self, h: &Subgroup) -> bool {
        (0..self.order()).all(|g| self.conjugate(h, g) == *h)
    }

    /// Every subgroup, found by adjoining one element at a time to the trivial group.
    pub fn all_subgroups(&self) -> Vec<Subgroup> {
        let mut found = BTreeSet::from([self.trivial_subgroup()]);
        let mut queue = VecDeque::from([self.trivial_subgroup()]);
        while let Some(h) = queue.pop_front() {
            for g in 0..self.order() {
                if h.contains(g) {
                    continue;
                }
                let mut gens = h.0.clone();
                gens.push(g);
                let k = self.generated(&gens);
                if found.insert(k.clone()) {
                    queue.push_back(k);
                }
            }
        }
        found.into_iter().collect()
    }

    /// Subgroups grouped into conjugacy classes; classes and members are sorted.
    pub fn subgroup_classes(&self) -> Vec<Vec<Subgroup>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for h in self.all_subgroups() {
            if seen.contains(&h) {
                continue;
            }
            let class: BTreeSet<Subgroup> =
                (0..self.order()).map(|g| self.conjugate(&h, g)).collect();
            seen.extend(class.iter().cloned());
            out.push(class.into_iter().collect());
        }
        out
    }
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().map(|&i| b[i]).collect()
}

/// Symmetric group on `m` points with the generators used for its Schreier graphs.
pub fn symmetric(m: usize) -> (FiniteGroup, Vec<Vec<usize>>) {
    let mut t: Vec<usize> = (0..m).collect();
    t.swap(0, 1);
    let c: Vec<usize> = (0..m).map(|i| (i + 1) % m).collect();
    FiniteGroup::from_permutations(&[t, c]).unwrap()
}

/// Dihedral group of the `m`-gon acting on its vertices.
pub fn dihedral(m: usize) -> (FiniteGroup, Vec<Vec<usize>>) {
    let r: Vec<usize> = (0..m).map(|i| (i + 1) % m).collect();
    let s: Vec<usize> = (0..m).map(|i| (m - i) % m).collect();
    FiniteGroup::from_permutations(&[r, s]).unwrap()
}

/// Index of the element acting as `perm`.
pub fn find_perm(perms: &[Vec<usize>], perm: &[usize]) -> Option<usize> {
    perms.iter().position(|p| p == perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subgroup_counts() {
        assert_eq!(symmetric(3).0.all_subgroups().len(), 6);
        assert_eq!(symmetric(4).0.all_subgroups().len(), 30);
        assert_eq!(dihedral(4).0.all_subgroups().len(), 10);
        assert_eq!(symmetric(4).0.subgroup_classes().len(), 11);
        assert_eq!(dihedral(4).0.subgroup_classes().len(), 8);
        assert_eq!(FiniteGroup::cyclic(6).all_subgroups().len(), 4);
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![0]]).is_err());
    }

    #[test]
    fn a3_is_normal() {
        let (g, perms) = symmetric(3);
        let c = find_perm(&perms, &[1, 2, 0]).unwrap();
        let a3 = g.generated(&[c]);
        assert_eq!(a3.order(), 3);
        assert!(g.is_normal(&a3));
        let t = find_perm(&perms, &[1, 0, 2]).unwrap();
        assert!(!g.is_normal(&g.generated(&[t])));
    }
}
