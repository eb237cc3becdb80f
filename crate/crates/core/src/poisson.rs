//! Poisson processes on finite weighted spaces.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson as PoissonLaw};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::util::{chunks, stream_rng, Q, STREAMS};
use num::Zero;

/// Finitely many points with positive weights and optional weight-preserving symmetries.
#[derive(Clone, Debug)]
pub struct WeightedSpace {
    pub weights: Vec<f64>,
    pub automorphisms: Option<Vec<Vec<usize>>>,
}

impl WeightedSpace {
    pub fn new(weights: Vec<f64>, automorphisms: Option<Vec<Vec<usize>>>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Malformed("weights must be positive and finite".into()));
        }
        if let Some(auts) = &automorphisms {
            let n = weights.len();
            for p in auts {
                let mut seen = vec![false; n];
                if p.len() != n || p.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                    return Err(Error::Malformed("automorphism is not a permutation".into()));
                }
                if (0..n).any(|i| weights[p[i]] != weights[i]) {
                    return Err(Error::Malformed("automorphism does not preserve weights".into()));
                }
            }
        }
        Ok(WeightedSpace {
            weights,
            automorphisms,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The space `(A, weights|A)`.
    pub fn restrict(&self, a: &[usize]) -> Result<WeightedSpace> {
        check_region(self, a)?;
        WeightedSpace::new(a.iter().map(|&i| self.weights[i]).collect(), None)
    }
}

/// Number of Poisson arrivals at every point; the random set is the support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointProcessSample {
    pub arrivals: Vec<u32>,
}

impl PointProcessSample {
    pub fn subset(&self) -> Vec<usize> {
        (0..self.arrivals.len()).filter(|&i| self.arrivals[i] > 0).collect()
    }

    pub fn mask(&self) -> u64 {
        self.subset().iter().fold(0u64, |m, &i| m | (1 << i))
    }
}

/// Independent `Poisson(w_i)` arrivals at every point, so each point is present
/// with probability `1 - e^{-w_i}`.
pub fn sample_poisson<R: Rng>(x: &WeightedSpace, rng: &mut R) -> PointProcessSample {
    let arrivals = x
        .weights
        .iter()
        .map(|&w| Poisson::new(w).expect("positive rate").sample(rng) as u32)
        .collect();
    PointProcessSample { arrivals }
}

/// Samples drawn over deterministic parallel streams.
pub fn sample_many(x: &WeightedSpace, n: usize, seed: u64) -> Vec<PointProcessSample> {
    chunks(n, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| {
            let mut rng = stream_rng(seed, i as u64);
            (0..k).map(|_| sample_poisson(x, &mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

fn check_region(x: &WeightedSpace, a: &[usize]) -> Result<()> {
    let mut seen = vec![false; x.len()];
    for &i in a {
        if i >= x.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Malformed(format!("region index {i} is out of range or repeated")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson statistic after pooling adjacent cells until each expects at least 5.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> ChiSquare {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (x, y) in observed.iter().zip(expected) {
        o += x;
        e += y;
        if e >= 5.0 {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
            *lo += o;
            *le += e;
        } else {
            obs.push(o);
            exp.push(e);
        }
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).unwrap().sf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Asymptotic Kolmogorov tail `P(K > t)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * t * t).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Clone, Debug)]
pub struct Correlation {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct PoissonAudit {
    pub volume: f64,
    pub samples: usize,
    pub count_hist: Vec<u64>,
    pub expected_hist: Vec<f64>,
    pub count_chi2: ChiSquare,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
    pub empty_frequency: f64,
    pub empty_expected: f64,
    pub empty_sigma: f64,
    /// Placement of arrivals in `A` against the normalized weights.
    pub janossy: Option<ChiSquare>,
    pub correlation: Option<Correlation>,
}

/// Audits the arrival count in `A` against `Poisson(vol A)` and the placement
/// of arrivals against the weights; with `b`, also the count correlation of
/// two disjoint regions.
pub fn poisson_audit(
    x: &WeightedSpace,
    a: &[usize],
    b: Option<&[usize]>,
    n: usize,
    seed: u64,
) -> Result<PoissonAudit> {
    check_region(x, a)?;
    if let Some(b) = b {
        check_region(x, b)?;
        if b.iter().any(|i| a.contains(i)) {
            return Err(Error::Malformed("regions must be disjoint".into()));
        }
    }
    if n < 1000 {
        return Err(Error::Precondition("at least 1000 samples are required".into()));
    }
    let samples = sample_many(x, n, seed);
    let count_in = |s: &PointProcessSample, r: &[usize]| r.iter().map(|&i| s.arrivals[i] as u64).sum::<u64>();
    let counts: Vec<u64> = samples.iter().map(|s| count_in(s, a)).collect();
    let vol: f64 = a.iter().map(|&i| x.weights[i]).sum();
    let kmax = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; kmax + 1];
    for &c in &counts {
        hist[c as usize] += 1;
    }
    let nf = n as f64;
    let (expected, count_chi2, ks_statistic) = if vol > 0.0 {
        let law = PoissonLaw::new(vol).unwrap();
        let mut exp: Vec<f64> = (0..=kmax).map(|k| nf * law.pmf(k as u64)).collect();
        // the last cell absorbs the upper tail
        *exp.last_mut().unwrap() += nf * law.sf(kmax as u64);
        let obs: Vec<f64> = hist.iter().map(|&h| h as f64).collect();
        let chi = chi_square(&obs, &exp);
        let mut acc = 0u64;
        let mut d: f64 = 0.0;
        for (k, &h) in hist.iter().enumerate() {
            acc += h;
            d = d.max((acc as f64 / nf - law.cdf(k as u64)).abs());
        }
        (exp, chi, d)
    } else {
        (
            vec![nf],
            ChiSquare {
                statistic: 0.0,
                dof: 0,
                p_value: 1.0,
            },
            0.0,
        )
    };
    let ks_pvalue = kolmogorov_sf(nf.sqrt() * ks_statistic);
    let empty = hist[0] as f64 / nf;
    let p0 = (-vol).exp();
    let janossy = (a.len() >= 2).then(|| {
        let mut placed = vec![0f64; a.len()];
        for s in &samples {
            for (j, &i) in a.iter().enumerate() {
                placed[j] += s.arrivals[i] as f64;
            }
        }
        let total: f64 = placed.iter().sum();
        let exp: Vec<f64> = a.iter().map(|&i| total * x.weights[i] / vol).collect();
        chi_square(&placed, &exp)
    });
    let correlation = b.map(|b| {
        let cb: Vec<f64> = samples.iter().map(|s| count_in(s, b) as f64).collect();
        let ca: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Correlation {
            value: pearson(&ca, &cb),
            sigma: 1.0 / nf.sqrt(),
        }
    });
    Ok(PoissonAudit {
        volume: vol,
        samples: n,
        count_hist: hist,
        expected_hist: expected,
        count_chi2,
        ks_statistic,
        ks_pvalue,
        empty_frequency: empty,
        empty_expected: p0,
        empty_sigma: (p0 * (1.0 - p0) / nf).sqrt(),
        janossy,
        correlation,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Two-sample chi-square comparing the count in `A` under the process on `X`
/// with the total count of the process on `(A, weights|A)`.
pub fn restriction_audit(x: &WeightedSpace, a: &[usize], n: usize, seed: u64) -> Result<ChiSquare> {
    let sub = x.restrict(a)?;
    let full = sample_many(x, n, seed);
    let part = sample_many(&sub, n, seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut h1: BTreeMap<u64, f64> = BTreeMap::new();
    let mut h2: BTreeMap<u64, f64> = BTreeMap::new();
    for s in &full {
        *h1.entry(a.iter().map(|&i| s.arrivals[i] as u64).sum()).or_default() += 1.0;
    }
    for s in &part {
        *h2.entry(s.arrivals.iter().map(|&c| c as u64).sum()).or_default() += 1.0;
    }
    let kmax = h1.keys().chain(h2.keys()).copied().max().unwrap_or(0);
    let o1: Vec<f64> = (0..=kmax).map(|k| h1.get(&k).copied().unwrap_or(0.0)).collect();
    let o2: Vec<f64> = (0..=kmax).map(|k| h2.get(&k).copied().unwrap_or(0.0)).collect();
    // equal sample sizes: compare each histogram with the pooled mean
    let pooled: Vec<f64> = o1.iter().zip(&o2).map(|(a, b)| (a + b) / 2.0).collect();
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut c1, mut c2, mut cp) = (0.0, 0.0, 0.0);
    for k in 0..o1.len() {
        c1 += o1[k];
        c2 += o2[k];
        cp += pooled[k];
        if cp >= 5.0 || k + 1 == o1.len() {
            obs.push((c1, c2));
            exp.push(cp);
            c1 = 0.0;
            c2 = 0.0;
            cp = 0.0;
        }
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .filter(|(_, e)| **e > 0.0)
        .map(|((a, b), e)| ((a - e) * (a - e) + (b - e) * (b - e)) / e)
        .sum();
    let dof = obs.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).unwrap().sf(statistic)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// `P(D ≠ ∅) = 1 - e^{-vol}`.
pub fn p_nonempty(vol: f64) -> f64 {
    -(-vol).exp_m1()
}

/// `1 / (1 - e^{-vol})`, the weight that turns the process conditioned on
/// being nonempty back into the unconditioned one.
pub fn desingularization_weight(vol: f64) -> Result<f64> {
    if vol.is_nan() || vol <= 0.0 {
        return Err(Error::Precondition(format!("volume must be positive, got {vol}")));
    }
    Ok(1.0 / p_nonempty(vol))
}

/// The weight as the exact reciprocal of the double `P(D ≠ ∅)`, so the
/// product with that probability is exactly one.
pub fn desingularization_weight_exact(vol: f64) -> Result<(Q, Q)> {
    desingularization_weight(vol)?;
    let p = Q::from_float(p_nonempty(vol)).ok_or_else(|| Error::Precondition("probability underflow".into()))?;
    if p.is_zero() {
        return Err(Error::Precondition(format!("volume {vol} too small to represent")));
    }
    Ok((p.recip(), p))
}

/// All automorphisms of a small graph, by backtracking over images.
pub fn automorphisms(g: &Graph, limit: usize) -> Result<Vec<Vec<usize>>> {
    let n = g.vertex_count();
    if n > limit {
        return Err(Error::Precondition(format!(
            "{n} vertices exceed the brute-force limit of {limit}"
        )));
    }
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|u| {
            let nb = g.neighbors(u);
            (0..n).map(|v| nb.contains(&v)).collect()
        })
        .collect();
    let deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut out = Vec::new();
    let mut img = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(
        k: usize,
        img: &mut Vec<usize>,
        used: &mut Vec<bool>,
        adj: &[Vec<bool>],
        deg: &[usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = img.len();
        if k == n {
            out.push(img.clone());
            return;
        }
        for c in 0..n {
            if used[c] || deg[c] != deg[k] {
                continue;
            }
            if (0..k).any(|j| adj[k][j] != adj[c][img[j]]) {
                continue;
            }
            img[k] = c;
            used[c] = true;
            rec(k + 1, img, used, adj, deg, out);
            used[c] = false;
        }
        img[k] = usize::MAX;
    }
    rec(0, &mut img, &mut used, &adj, &deg, &mut out);
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct StabilizerClass {
    pub stabilizer_order: usize,
    pub empirical: f64,
    pub exact: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct StabilizerReport {
    pub automorphism_order: usize,
    pub nonempty_samples: usize,
    pub classes: Vec<StabilizerClass>,
    /// Largest |empirical - exact| / sigma over classes.
    pub max_z: f64,
}

fn stabilizer_order(auts: &[Vec<usize>], mask: u64) -> usize {
    auts.iter()
        .filter(|p| {
            let mut m = 0u64;
            for (i, &j) in p.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    m |= 1 << j;
                }
            }
            m == mask
        })
        .count()
}

/// Distribution of the stabilizer order of the random set under `Aut(G)`,
/// conditioned on the set being nonempty; every vertex has weight `w`.
pub fn stabilizer_statistics(g: &Graph, w: f64, n: usize, seed: u64) -> Result<StabilizerReport> {
    let auts = automorphisms(g, 10)?;
    let nv = g.vertex_count();
    let space = WeightedSpace::new(vec![w; nv], Some(auts.clone()))?;
    let p_in = p_nonempty(w);
    let p_empty = (-(nv as f64) * w).exp();
    let mut exact: BTreeMap<usize, f64> = BTreeMap::new();
    for mask in 1u64..(1 << nv) {
        let k = mask.count_ones() as i32;
        let prob = p_in.powi(k) * (1.0 - p_in).powi(nv as i32 - k) / (1.0 - p_empty);
        *exact.entry(stabilizer_order(&auts, mask)).or_default() += prob;
    }
    let samples = sample_many(&space, n, seed);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut nonempty = 0usize;
    for s in &samples {
        let m = s.mask();
        if m != 0 {
            nonempty += 1;
            *counts.entry(stabilizer_order(&auts, m)).or_default() += 1;
        }
    }
    let ne = nonempty.max(1) as f64;
    let mut classes = Vec::new();
    let mut max_z: f64 = 0.0;
    for (&order, &p) in &exact {
        let emp = counts.get(&order).copied().unwrap_or(0) as f64 / ne;
        let sigma = (p * (1.0 - p) / ne).sqrt();
        if sigma > 0.0 {
            max_z = max_z.max((emp - p).abs() / sigma);
        } else if emp != p {
            max_z = f64::INFINITY;
        }
        classes.push(StabilizerClass {
            stabilizer_order: order,
            empirical: emp,
            exact: p,
            sigma,
        });
    }
    for order in counts.keys() {
        if !exact.contains_key(order) {
            max_z = f64::INFINITY;
        }
    }
    Ok(StabilizerReport {
        automorphism_order: auts.len(),
        nonempty_samples: nonempty,
        classes,
        max_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    #[test]
    fn ln2_point_present_half_the_time() {
        let x = WeightedSpace::new(vec![std::f64::consts::LN_2], None).unwrap();
        let s = sample_many(&x, 100_000, 3);
        let p = s.iter().filter(|s| s.arrivals[0] > 0).count() as f64 / 1e5;
        assert!((p - 0.5).abs() < 4.0 * (0.25f64 / 1e5).sqrt());
    }

    #[test]
    fn split_ln2_empty_half() {
        let w = std::f64::consts::LN_2 / 2.0;
        let x = WeightedSpace::new(vec![w, w], None).unwrap();
        let a = poisson_audit(&x, &[0, 1], None, 100_000, 1).unwrap();
        assert!((a.empty_expected - 0.5).abs() < 1e-15);
        assert!((a.empty_frequency - 0.5).abs() < 4.0 * a.empty_sigma);
    }

    #[test]
    fn tiny_weights_mostly_empty() {
        let x = WeightedSpace::new(vec![1e-9; 5], None).unwrap();
        let s = sample_many(&x, 10_000, 2);
        assert!(s.iter().all(|s| s.subset().is_empty()));
    }

    #[test]
    fn empty_region_and_bad_regions() {
        let x = WeightedSpace::new(vec![0.5, 0.5, 1.0], None).unwrap();
        let a = poisson_audit(&x, &[], None, 1000, 1).unwrap();
        assert_eq!(a.count_hist, vec![1000]);
        assert!(poisson_audit(&x, &[0, 0], None, 1000, 1).is_err());
        assert!(poisson_audit(&x, &[5], None, 1000, 1).is_err());
        assert!(poisson_audit(&x, &[0], None, 10, 1).is_err());
        assert!(WeightedSpace::new(vec![0.0], None).is_err());
    }

    #[test]
    fn unit_volume_and_disjoint_regions() {
        let x = WeightedSpace::new(vec![0.25, 0.75, 0.4, 0.6], None).unwrap();
        let a = poisson_audit(&x, &[0, 1], Some(&[2, 3]), 100_000, 17).unwrap();
        assert!((a.empty_expected - (-1f64).exp()).abs() < 1e-15);
        assert!((a.empty_frequency - a.empty_expected).abs() < 4.0 * a.empty_sigma);
        let c = a.correlation.unwrap();
        assert!(c.value.abs() < 4.0 * c.sigma);
        assert!(a.count_chi2.p_value > 1e-4);
        assert!(a.janossy.unwrap().p_value > 1e-4);
    }

    #[test]
    fn restriction_matches_subspace() {
        let x = WeightedSpace::new(vec![0.3, 0.9, 0.2, 1.1], None).unwrap();
        let c = restriction_audit(&x, &[1, 3], 50_000, 4).unwrap();
        assert!(c.p_value > 1e-4);
    }

    #[test]
    fn desingularization_examples() {
        let w = desingularization_weight(std::f64::consts::LN_2).unwrap();
        assert!((w - 2.0).abs() < 1e-14);
        let w = desingularization_weight((4.0f64 / 3.0).ln()).unwrap();
        assert!((w - 4.0).abs() < 1e-13);
        assert_eq!(desingularization_weight(f64::INFINITY).unwrap(), 1.0);
        assert!(desingularization_weight(1e-12).unwrap() > 1e11);
        assert!(desingularization_weight(0.0).is_err());
        for v in [1e-9, 0.1, 4.479_157_710_739_52, 12.19, 700.0, f64::INFINITY] {
            let (w, p) = desingularization_weight_exact(v).unwrap();
            assert!(num::One::is_one(&(w * p)));
        }
        assert!(desingularization_weight(-1.0).is_err());
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphisms(&cycle(4), 10).unwrap().len(), 8);
        assert_eq!(automorphisms(&complete(4), 10).unwrap().len(), 24);
        assert_eq!(automorphisms(&path(5), 10).unwrap().len(), 2);
        assert!(automorphisms(&path(11), 10).is_err());
    }

    #[test]
    fn stabilizers_of_k2() {
        let r = stabilizer_statistics(&path(2), 1.0, 50_000, 8).unwrap();
        assert_eq!(r.automorphism_order, 2);
        let orders: Vec<usize> = r.classes.iter().map(|c| c.stabilizer_order).collect();
        assert_eq!(orders, vec![1, 2]);
        // one vertex: 2 p(1-p); both: p²; conditioned on nonempty
        let p = p_nonempty(1.0);
        let z = 1.0 - (1.0 - p) * (1.0 - p);
        assert!((r.classes[1].exact - p * p / z).abs() < 1e-12);
        assert!(r.max_z < 4.0);
    }

    #[test]
    fn asymmetric_graph_trivial_stabilizers() {
        // smallest asymmetric tree has 7 vertices
        let g = Graph::new(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)]).unwrap();
        assert_eq!(automorphisms(&g, 10).unwrap().len(), 1);
        let r = stabilizer_statistics(&g, 0.7, 5000, 2).unwrap();
        assert_eq!(r.classes.len(), 1);
        assert_eq!(r.classes[0].stabilizer_order, 1);
        assert!((r.classes[0].empirical - 1.0).abs() < 1e-15);
    }
}
