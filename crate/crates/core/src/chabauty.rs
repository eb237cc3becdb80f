//! Hausdorff and hypograph distances on finite metric spaces, the tapered
//! pseudo-metrics `d̂_R`, and audits of the comparison inequalities.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::stream_rng;

const METRIC_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    pub dist: Vec<Vec<f64>>,
    pub base: usize,
}

impl FiniteMetricSpace {
    pub fn new(dist: Vec<Vec<f64>>, base: usize) -> Result<Self> {
        let n = dist.len();
        if n == 0 || base >= n {
            return Err(Error::Malformed("empty space or base out of range".into()));
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed("distance matrix is not square".into()));
            }
            if row[i] != 0.0 {
                return Err(Error::Malformed(format!("nonzero diagonal at {i}")));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 || d != dist[j][i] || (i != j && d == 0.0) {
                    return Err(Error::Malformed(format!("bad distance at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + METRIC_TOL {
                        return Err(Error::Malformed(format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { dist, base })
    }

    /// Points of the real line with the absolute-value metric.
    pub fn line(xs: &[f64], base: usize) -> Result<Self> {
        let dist = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        Self::new(dist, base)
    }

    pub fn plane(pts: &[[f64; 2]], base: usize) -> Result<Self> {
        let dist = pts
            .iter()
            .map(|a| pts.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect())
            .collect();
        Self::new(dist, base)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    /// Smallest `λ` with `|φ(x) − φ(y)| ≤ λ d(x,y)`.
    pub fn lipschitz_constant(&self, phi: &UscFunction) -> f64 {
        let n = self.len();
        let mut l: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                l = l.max((phi.0[i] - phi.0[j]).abs() / self.dist[i][j]);
            }
        }
        l
    }
}

/// A `[0,1]`-valued function on the points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UscFunction(pub Vec<f64>);

impl UscFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Malformed("function values must lie in [0,1]".into()));
        }
        Ok(UscFunction(values))
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        for &i in set {
            v[i] = 1.0;
        }
        UscFunction(v)
    }

    /// `φ · 1_A`.
    pub fn restricted(&self, set: &[usize]) -> Self {
        let mut v = vec![0.0; self.0.len()];
        for &i in set {
            v[i] = self.0[i];
        }
        UscFunction(v)
    }
}

fn check_set(k: &FiniteMetricSpace, a: &[usize]) -> Result<()> {
    match a.iter().find(|&&i| i >= k.len()) {
        Some(i) => Err(Error::Malformed(format!("point {i} is not in the space"))),
        None => Ok(()),
    }
}

fn directed_hausdorff(k: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .map(|&x| b.iter().map(|&y| k.d(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff(k: &FiniteMetricSpace, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("Hausdorff distance needs nonempty sets".into()));
    }
    check_set(k, a)?;
    check_set(k, b)?;
    Ok(directed_hausdorff(k, a, b).max(directed_hausdorff(k, b, a)))
}

/// The farthest a top point `(x, φ(x))` of one hypograph is from the other:
/// reaching `(y, t)` with `t ≤ ψ(y)` costs `d(x,y) + max(0, φ(x) − ψ(y))`.
fn directed_usc(k: &FiniteMetricSpace, phi: &[f64], psi: &[f64]) -> f64 {
    let n = k.len();
    (0..n)
        .map(|x| {
            (0..n)
                .map(|y| k.d(x, y) + (phi[x] - psi[y]).max(0.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between hypographs in `K × [0,1]` with the sum metric.
pub fn usc_distance(k: &FiniteMetricSpace, phi: &UscFunction, psi: &UscFunction) -> Result<f64> {
    if phi.0.len() != k.len() || psi.0.len() != k.len() {
        return Err(Error::Malformed("function length differs from the space".into()));
    }
    Ok(directed_usc(k, &phi.0, &psi.0).max(directed_usc(k, &psi.0, &phi.0)))
}

/// Hypograph distance with the value axis replaced by the grid `hℤ ∩ [0,1]`;
/// within `h` of the exact distance.
pub fn usc_distance_grid(k: &FiniteMetricSpace, phi: &UscFunction, psi: &UscFunction, h: f64) -> f64 {
    let n = k.len();
    let snap = |v: f64| (v / h).floor() * h;
    let directed = |f: &[f64], g: &[f64]| {
        let tops: Vec<f64> = g.iter().map(|&v| snap(v)).collect();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            let levels = (f[x] / h).floor() as usize;
            for j in 0..=levels {
                let s = j as f64 * h;
                let mut best = f64::INFINITY;
                for y in 0..n {
                    // nearest grid level at or below g(y)
                    let gap = if s <= tops[y] { 0.0 } else { s - tops[y] };
                    best = best.min(k.d(x, y) + gap);
                }
                worst = worst.max(best);
            }
        }
        worst
    };
    directed(&phi.0, &psi.0).max(directed(&psi.0, &phi.0))
}

pub fn weighted_hausdorff(k: &FiniteMetricSpace, a: &[usize], b: &[usize], phi: &UscFunction) -> Result<f64> {
    check_set(k, a)?;
    check_set(k, b)?;
    usc_distance(k, &phi.restricted(a), &phi.restricted(b))
}

/// `φ_R(x) = max(0, (R − d(p,x)) / R)`.
pub fn taper(k: &FiniteMetricSpace, r: f64) -> Result<UscFunction> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Precondition(format!("taper radius must be positive, got {r}")));
    }
    Ok(UscFunction(
        (0..k.len()).map(|x| ((r - k.d(k.base, x)) / r).max(0.0)).collect(),
    ))
}

/// `d̂_R(A, B)`.
pub fn tapered_pseudometric(k: &FiniteMetricSpace, a: &[usize], b: &[usize], r: f64) -> Result<f64> {
    weighted_hausdorff(k, a, b, &taper(k, r)?)
}

/// The untapered `min{1, d_Haus(A ∩ B̄(p,R), B ∩ B̄(p,R))}`; empty against empty is 0,
/// empty against nonempty is 1.
pub fn truncated_distance(k: &FiniteMetricSpace, a: &[usize], b: &[usize], r: f64) -> Result<f64> {
    check_set(k, a)?;
    check_set(k, b)?;
    let cut = |s: &[usize]| s.iter().copied().filter(|&x| k.d(k.base, x) <= r).collect::<Vec<_>>();
    let (a, b) = (cut(a), cut(b));
    Ok(match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (false, false) => hausdorff(k, &a, &b)?.min(1.0),
        _ => 1.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LemchabInstance {
    pub space: FiniteMetricSpace,
    pub phi: UscFunction,
    pub psi: UscFunction,
    pub lambda: f64,
    pub c: f64,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub enum LemchabOutcome {
    Holds { lhs: f64, rhs: f64 },
    Violated { lhs: f64, rhs: f64 },
    HypothesisViolated { reason: String, lhs: f64, rhs: f64 },
}

impl LemchabInstance {
    /// Checks the hypotheses, then `d^φ(A,B) ≤ max{C, λ+1} · d^ψ(A,B)`.
    pub fn check(&self) -> Result<LemchabOutcome> {
        let k = &self.space;
        let lhs = weighted_hausdorff(k, &self.a, &self.b, &self.phi)?;
        let rhs = self.c.max(self.lambda + 1.0) * weighted_hausdorff(k, &self.a, &self.b, &self.psi)?;
        let lip = k.lipschitz_constant(&self.phi);
        if lip > self.lambda + METRIC_TOL {
            return Ok(LemchabOutcome::HypothesisViolated {
                reason: format!("phi is {lip}-lipschitz, claimed {}", self.lambda),
                lhs,
                rhs,
            });
        }
        if let Some(x) = (0..k.len()).find(|&x| self.phi.0[x] > self.c * self.psi.0[x] + METRIC_TOL) {
            return Ok(LemchabOutcome::HypothesisViolated {
                reason: format!("phi > C psi at point {x}"),
                lhs,
                rhs,
            });
        }
        Ok(if lhs <= rhs + METRIC_TOL {
            LemchabOutcome::Holds { lhs, rhs }
        } else {
            LemchabOutcome::Violated { lhs, rhs }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport<T> {
    pub trials: usize,
    pub violations: usize,
    pub hypothesis_violations: usize,
    /// Largest `lhs / rhs` seen among trials with a positive right side.
    pub worst_ratio: f64,
    pub certificate: Option<T>,
}

/// A random space of `n` points: planar, linear or a weighted-graph metric.
pub fn random_space<R: Rng>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    let base = rng.random_range(0..n);
    match rng.random_range(0..3) {
        0 => {
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0])
                .collect();
            FiniteMetricSpace::plane(&pts, base)
        }
        1 => {
            let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect();
            FiniteMetricSpace::line(&xs, base)
        }
        _ => {
            let mut d = vec![vec![f64::INFINITY; n]; n];
            for i in 0..n {
                d[i][i] = 0.0;
                for j in 0..i {
                    let w = 0.05 + rng.random::<f64>() * 1.5;
                    d[i][j] = w;
                    d[j][i] = w;
                }
            }
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i][m] + d[m][j];
                        if via < d[i][j] {
                            d[i][j] = via;
                        }
                    }
                }
            }
            FiniteMetricSpace::new(d, base)
        }
    }
    .expect("generated spaces are metric")
}

pub fn random_subset<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let p = rng.random::<f64>();
    (0..n).filter(|_| rng.random::<f64>() < p).collect()
}

/// `φ(x) = min_y [φ₀(y) + λ d(x,y)]` is `λ`-lipschitz and bounded by `φ₀`.
pub fn inf_convolution(k: &FiniteMetricSpace, phi0: &[f64], lambda: f64) -> UscFunction {
    let n = k.len();
    UscFunction(
        (0..n)
            .map(|x| (0..n).map(|y| phi0[y] + lambda * k.d(x, y)).fold(f64::INFINITY, f64::min))
            .collect(),
    )
}

/// Random instance satisfying both hypotheses: `φ` by infimal convolution,
/// and `ψ ≥ φ / C` at every point.
pub fn random_lemchab_instance<R: Rng>(n: usize, rng: &mut R) -> LemchabInstance {
    let space = random_space(n, rng);
    let lambda = 0.1 + rng.random::<f64>() * 4.0;
    let phi0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let phi = inf_convolution(&space, &phi0, lambda);
    let c = 1.0 + rng.random::<f64>() * 3.0;
    let psi = UscFunction(
        phi.0
            .iter()
            .map(|&f| {
                let lo = f / c;
                if rng.random::<f64>() < 0.3 {
                    lo
                } else {
                    lo + (1.0 - lo) * rng.random::<f64>()
                }
            })
            .collect(),
    );
    let a = random_subset(n, rng);
    let b = random_subset(n, rng);
    LemchabInstance {
        space,
        phi,
        psi,
        lambda,
        c,
        a,
        b,
    }
}

fn merge_outcomes<T: Clone>(items: Vec<(Option<f64>, bool, bool, T)>) -> AuditReport<T> {
    let mut rep = AuditReport {
        trials: items.len(),
        violations: 0,
        hypothesis_violations: 0,
        worst_ratio: 0.0,
        certificate: None,
    };
    for (ratio, violated, hyp, inst) in items {
        if let Some(r) = ratio {
            rep.worst_ratio = rep.worst_ratio.max(r);
        }
        if hyp {
            rep.hypothesis_violations += 1;
        }
        if violated {
            rep.violations += 1;
            if rep.certificate.is_none() {
                rep.certificate = Some(inst);
            }
        }
    }
    rep
}

pub fn lemchab_audit(trials: usize, points: usize, seed: u64) -> AuditReport<LemchabInstance> {
    let items = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let inst = random_lemchab_instance(points, &mut rng);
            let out = inst.check().expect("instance is well formed");
            let (lhs, rhs, bad, hyp) = match out {
                LemchabOutcome::Holds { lhs, rhs } => (lhs, rhs, false, false),
                LemchabOutcome::Violated { lhs, rhs } => (lhs, rhs, true, false),
                LemchabOutcome::HypothesisViolated { lhs, rhs, .. } => (lhs, rhs, false, true),
            };
            let ratio = (rhs > 0.0).then(|| lhs / rhs);
            (ratio, bad, hyp, inst)
        })
        .collect();
    merge_outcomes(items)
}

/// Two points at distance `delta`, `φ = 1_{x}` claimed 1-lipschitz and `ψ ≡ 1`.
pub fn lemchab_necessity_demo(delta: f64) -> Result<(LemchabInstance, LemchabOutcome)> {
    let space = FiniteMetricSpace::line(&[0.0, delta], 0)?;
    let inst = LemchabInstance {
        space,
        phi: UscFunction(vec![1.0, 0.0]),
        psi: UscFunction(vec![1.0, 1.0]),
        lambda: 1.0,
        c: 1.0,
        a: vec![0],
        b: vec![1],
    };
    let out = inst.check()?;
    Ok((inst, out))
}

/// A map from the points of `source` to points of `target`, defined at least on
/// the closed `R₁`-ball around the source base.
#[derive(Clone, Debug, Serialize)]
pub struct BallMap {
    pub source: FiniteMetricSpace,
    pub target: FiniteMetricSpace,
    pub image: Vec<Option<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionCertificate {
    pub c: Vec<usize>,
    pub d: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

impl BallMap {
    /// Preconditions of the distortion inequality, checked on the sample.
    pub fn check(&self, lambda: f64, r1: f64, r2: f64) -> Result<()> {
        let (s, t) = (&self.source, &self.target);
        if self.image.len() != s.len() {
            return Err(Error::Malformed("map length differs from source".into()));
        }
        if r1 < 1.0 || r2 < lambda * r1 {
            return Err(Error::Precondition(format!(
                "need R1 >= 1 and R2 >= lambda R1, got R1={r1}, R2={r2}, lambda={lambda}"
            )));
        }
        if self.image[s.base] != Some(t.base) {
            return Err(Error::Precondition("base point must map to base point".into()));
        }
        let ball: Vec<usize> = (0..s.len()).filter(|&x| s.d(s.base, x) <= r1).collect();
        let mut imgs = Vec::new();
        for &x in &ball {
            match self.image[x] {
                Some(y) if y < t.len() => imgs.push(y),
                Some(_) => return Err(Error::Malformed("image out of range".into())),
                None => return Err(Error::Precondition(format!("map undefined at {x} in the R1-ball"))),
            }
        }
        let mut sorted = imgs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != imgs.len() {
            return Err(Error::Precondition("map is not injective on the R1-ball".into()));
        }
        for (i, &x) in ball.iter().enumerate() {
            for &y in &ball[..i] {
                let ratio = t.d(imgs[i], self.image[y].unwrap()) / s.d(x, y);
                if ratio > lambda * (1.0 + METRIC_TOL) || ratio < (1.0 - METRIC_TOL) / lambda {
                    return Err(Error::Precondition(format!(
                        "distance ratio {ratio} at ({x},{y}) outside [1/lambda, lambda]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `f⁻¹(C)` restricted to the source.
    pub fn preimage(&self, c: &[usize]) -> Vec<usize> {
        (0..self.source.len())
            .filter(|&x| self.image[x].is_some_and(|y| c.contains(&y)))
            .collect()
    }

    /// `(d̂_{R₁}(f⁻¹C, f⁻¹D), d̂_{R₂}(C, D))`.
    pub fn sides(&self, c: &[usize], d: &[usize], r1: f64, r2: f64) -> Result<(f64, f64)> {
        let lhs = tapered_pseudometric(&self.source, &self.preimage(c), &self.preimage(d), r1)?;
        let rhs = tapered_pseudometric(&self.target, c, d, r2)?;
        Ok((lhs, rhs))
    }
}

/// Samples random pairs `(C, D)` of target subsets and checks
/// `d̂_{R₁}(f⁻¹C, f⁻¹D) ≤ factor · d̂_{R₂}(C, D)`.
pub fn distortion_audit(
    f: &BallMap,
    lambda: f64,
    factor: f64,
    r1: f64,
    r2: f64,
    trials: usize,
    seed: u64,
) -> Result<AuditReport<DistortionCertificate>> {
    f.check(lambda, r1, r2)?;
    let n = f.target.len();
    let items: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let c = random_subset(n, &mut rng);
            let d = if rng.random::<f64>() < 0.05 {
                c.clone()
            } else {
                random_subset(n, &mut rng)
            };
            let (lhs, rhs) = f.sides(&c, &d, r1, r2).expect("sets index the target");
            let rhs = factor * rhs;
            let ratio = (rhs > 0.0).then(|| lhs / rhs);
            (ratio, lhs > rhs + METRIC_TOL, false, DistortionCertificate { c, d, lhs, rhs })
        })
        .collect();
    Ok(merge_outcomes(items))
}

/// Scaling `x ↦ s·x` from the grid `{k·h : |k| ≤ m}` onto its image.
pub fn scaling_map(h: f64, m: i64, s: f64) -> Result<BallMap> {
    let xs: Vec<f64> = (-m..=m).map(|k| k as f64 * h).collect();
    let ys: Vec<f64> = xs.iter().map(|x| s * x).collect();
    let base = m as usize;
    Ok(BallMap {
        source: FiniteMetricSpace::line(&xs, base)?,
        target: FiniteMetricSpace::line(&ys, base)?,
        image: (0..xs.len()).map(Some).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub distances: Vec<f64>,
    /// Combinatorial gap on the open ball: how far points of either set inside
    /// `B(p,R)` are from the other set, capped at 1.
    pub gaps: Vec<f64>,
    pub converged: bool,
    pub combinatorial_converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceVerdict {
    pub converged: bool,
    pub witness_radius: Option<f64>,
    pub rows: Vec<RadiusRow>,
    /// `d̂_R(Aᵢ, A) ≤ (1 + 1/R) · gap_{R'}(Aᵢ, A)` for every `R ≤ R'` and `i`.
    pub bound_consistent: bool,
}

fn combinatorial_gap(k: &FiniteMetricSpace, ai: &[usize], a: &[usize], r: f64) -> f64 {
    let near = |x: usize, s: &[usize]| s.iter().map(|&y| k.d(x, y)).fold(f64::INFINITY, f64::min).min(1.0);
    let inside = |x: &&usize| k.d(k.base, **x) < r;
    let g1 = ai.iter().filter(inside).map(|&x| near(x, a)).fold(0.0, f64::max);
    let g2 = a.iter().filter(inside).map(|&x| near(x, ai)).fold(0.0, f64::max);
    g1.max(g2)
}

/// Non-increasing over the second half and ending at most `tol`.
fn settles(xs: &[f64], tol: f64) -> bool {
    let start = xs.len() / 2;
    let tail = &xs[start..];
    tail.windows(2).all(|w| w[1] <= w[0] + METRIC_TOL) && tail.last().is_none_or(|&v| v <= tol)
}

/// Treats the finite sequence as a tail and decides convergence to `A` for every
/// listed radius.
pub fn chabauty_convergence_test(
    k: &FiniteMetricSpace,
    seq: &[Vec<usize>],
    a: &[usize],
    radii: &[f64],
    tol: f64,
) -> Result<ConvergenceVerdict> {
    check_set(k, a)?;
    for s in seq {
        check_set(k, s)?;
    }
    let mut rows = Vec::new();
    for &r in radii {
        let distances = seq
            .iter()
            .map(|s| tapered_pseudometric(k, s, a, r))
            .collect::<Result<Vec<_>>>()?;
        let gaps: Vec<f64> = seq.iter().map(|s| combinatorial_gap(k, s, a, r)).collect();
        rows.push(RadiusRow {
            radius: r,
            converged: settles(&distances, tol),
            combinatorial_converged: settles(&gaps, tol),
            distances,
            gaps,
        });
    }
    let mut bound_consistent = true;
    for lo in &rows {
        for hi in rows.iter().filter(|h| h.radius >= lo.radius) {
            for (d, g) in lo.distances.iter().zip(&hi.gaps) {
                if *d > (1.0 + 1.0 / lo.radius) * g + METRIC_TOL {
                    bound_consistent = false;
                }
            }
        }
    }
    let witness_radius = rows.iter().find(|r| !r.converged).map(|r| r.radius);
    Ok(ConvergenceVerdict {
        converged: witness_radius.is_none(),
        witness_radius,
        rows,
        bound_consistent,
    })
}

/// Checks `d̂_R ≤ 2 d̂_{R'}` for all listed `1 ≤ R ≤ R'` on random set pairs.
pub fn taper_monotonicity_audit(trials: usize, points: usize, radii: &[f64], seed: u64) -> AuditReport<LemchabInstance> {
    let items = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let space = random_space(points, &mut rng);
            let a = random_subset(points, &mut rng);
            let b = random_subset(points, &mut rng);
            let mut worst: Option<f64> = None;
            let mut bad = None;
            for &r in radii.iter().filter(|&&r| r >= 1.0) {
                for &r2 in radii.iter().filter(|&&r2| r2 >= r) {
                    let lhs = tapered_pseudometric(&space, &a, &b, r).unwrap();
                    let rhs = 2.0 * tapered_pseudometric(&space, &a, &b, r2).unwrap();
                    if rhs > 0.0 {
                        worst = Some(worst.unwrap_or(0.0).max(lhs / rhs));
                    }
                    if lhs > rhs + METRIC_TOL && bad.is_none() {
                        bad = Some((r, r2));
                    }
                }
            }
            let (lambda, c) = bad.map(|(r, _)| (1.0 / r, 1.0)).unwrap_or((0.0, 0.0));
            let phi = bad.map(|(r, _)| taper(&space, r).unwrap()).unwrap_or(UscFunction(vec![]));
            let psi = bad.map(|(_, r2)| taper(&space, r2).unwrap()).unwrap_or(UscFunction(vec![]));
            (
                worst,
                bad.is_some(),
                false,
                LemchabInstance {
                    space,
                    phi,
                    psi,
                    lambda,
                    c,
                    a,
                    b,
                },
            )
        })
        .collect();
    merge_outcomes(items)
}

/// Random subset pairs with a nonempty member; the identity
/// `d_usc(1_A, 1_B) = min{1, d_Haus(A,B)}` is compared bit for bit.
pub fn indicator_identity_audit(trials: usize, points: usize, seed: u64) -> AuditReport<(FiniteMetricSpace, Vec<usize>, Vec<usize>)> {
    let items = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let k = random_space(points, &mut rng);
            let mut idx: Vec<usize> = (0..points).collect();
            let pick = |rng: &mut rand_chacha::ChaCha8Rng, idx: &mut Vec<usize>| {
                idx.shuffle(rng);
                let m = rng.random_range(1..=points);
                let mut s = idx[..m].to_vec();
                s.sort_unstable();
                s
            };
            let a = pick(&mut rng, &mut idx);
            let b = pick(&mut rng, &mut idx);
            let lhs = usc_distance(&k, &UscFunction::indicator(points, &a), &UscFunction::indicator(points, &b)).unwrap();
            let rhs = hausdorff(&k, &a, &b).unwrap().min(1.0);
            (None, lhs != rhs, false, (k, a, b))
        })
        .collect();
    merge_outcomes(items)
}

/// Largest gap between the closed form and the grid oracle over random instances.
pub fn grid_oracle_gap(trials: usize, points: usize, h: f64, seed: u64) -> f64 {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let k = random_space(points, &mut rng);
            let f = UscFunction((0..points).map(|_| rng.random::<f64>()).collect());
            let g = UscFunction((0..points).map(|_| rng.random::<f64>()).collect());
            (usc_distance(&k, &f, &g).unwrap() - usc_distance_grid(&k, &f, &g, h)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let m = ((hi - lo) / step).round() as i64;
        (0..=m).map(|k| lo + k as f64 * step).collect()
    }

    #[test]
    fn hausdorff_examples() {
        let k = FiniteMetricSpace::line(&[0.0, 1.0], 0).unwrap();
        assert_eq!(hausdorff(&k, &[0], &[1]).unwrap(), 1.0);
        assert_eq!(hausdorff(&k, &[0, 1], &[0, 1]).unwrap(), 0.0);
        assert!(hausdorff(&k, &[], &[1]).is_err());
        let k = FiniteMetricSpace::line(&[0.0, 0.3, 1.0, 2.5], 0).unwrap();
        // A ⊂ B: brute-force max over B of distance to A
        let (a, b) = (vec![0, 2], vec![0, 1, 2, 3]);
        let brute = b
            .iter()
            .map(|&y| a.iter().map(|&x| k.d(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert_eq!(hausdorff(&k, &a, &b).unwrap(), brute);
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], 0).is_err());
        assert!(FiniteMetricSpace::new(
            vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]],
            0
        )
        .is_err());
        assert!(UscFunction::new(vec![1.5]).is_err());
    }

    #[test]
    fn spike_falls_to_baseline() {
        let xs = grid(-1.0, 1.0, 0.1);
        let k = FiniteMetricSpace::line(&xs, 10).unwrap();
        let at = |x: f64| xs.iter().position(|y| (y - x).abs() < 1e-9).unwrap();
        let mut f = vec![0.0; xs.len()];
        let mut g = vec![0.0; xs.len()];
        f[at(0.5)] = 0.5;
        g[at(0.9)] = 0.1;
        let d = usc_distance(&k, &UscFunction(f.clone()), &UscFunction(g.clone())).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!((usc_distance_grid(&k, &UscFunction(f), &UscFunction(g), 1e-4) - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn weighted_reductions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let k = random_space(6, &mut rng);
            let a = random_subset(6, &mut rng);
            let b = random_subset(6, &mut rng);
            let zero = UscFunction(vec![0.0; 6]);
            assert_eq!(weighted_hausdorff(&k, &a, &b, &zero).unwrap(), 0.0);
            if !a.is_empty() && !b.is_empty() {
                let one = UscFunction(vec![1.0; 6]);
                let w = weighted_hausdorff(&k, &a, &b, &one).unwrap();
                assert_eq!(w, hausdorff(&k, &a, &b).unwrap().min(1.0));
            }
            // support off A ∪ B
            let mut off = vec![0.0; 6];
            for x in 0..6 {
                if !a.contains(&x) && !b.contains(&x) {
                    off[x] = rng.random();
                }
            }
            assert_eq!(weighted_hausdorff(&k, &a, &b, &UscFunction(off)).unwrap(), 0.0);
        }
    }

    #[test]
    fn taper_ignores_far_points_and_decreases() {
        let xs: Vec<f64> = vec![0.0, 0.5, 1.5, 2.0];
        let k = FiniteMetricSpace::line(&xs, 0).unwrap();
        assert_eq!(tapered_pseudometric(&k, &[2], &[3], 1.0).unwrap(), 0.0);
        assert!(tapered_pseudometric(&k, &[1], &[1], 0.0).is_err());

        let mut xs = vec![0.0, 0.5];
        xs.extend((1..=20).map(|i| 0.5 + 1.0 / i as f64));
        let k = FiniteMetricSpace::line(&xs, 0).unwrap();
        let vals: Vec<f64> = (2..xs.len())
            .map(|j| tapered_pseudometric(&k, &[1], &[j], 1.0).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        // horizontal offset 1/i plus a drop of 1/i in the taper: min(1/2, 2/i)
        for (j, v) in vals.iter().enumerate() {
            let i = (j + 1) as f64;
            assert!((v - (2.0 / i).min(0.5)).abs() < 1e-12, "{v} at i = {i}");
        }
        assert!(vals[19] < vals[9] && vals[9] < vals[4]);
    }

    #[test]
    fn taper_removes_boundary_jump() {
        // x on the sphere of radius 1, x_i outside approaching it
        let mut xs = vec![0.0, 1.0];
        xs.extend((1..=30).map(|i| 1.0 + 1.0 / (i * i) as f64));
        let k = FiniteMetricSpace::line(&xs, 0).unwrap();
        let hat: Vec<f64> = (2..xs.len()).map(|j| tapered_pseudometric(&k, &[j], &[1], 1.0).unwrap()).collect();
        let raw: Vec<f64> = (2..xs.len()).map(|j| truncated_distance(&k, &[j], &[1], 1.0).unwrap()).collect();
        assert!(raw.iter().all(|&v| v == 1.0));
        assert!(hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lemchab_equal_functions_and_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut inst = random_lemchab_instance(8, &mut rng);
        inst.psi = inst.phi.clone();
        inst.c = 1.0;
        assert!(matches!(inst.check().unwrap(), LemchabOutcome::Holds { .. }));
        let rep = lemchab_audit(300, 8, 2);
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.hypothesis_violations, 0);
    }

    #[test]
    fn necessity_demo_is_flagged() {
        let (_, out) = lemchab_necessity_demo(1e-3).unwrap();
        match out {
            LemchabOutcome::HypothesisViolated { lhs, rhs, .. } => {
                assert_eq!(lhs, 1.0);
                assert!(lhs > rhs);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn psi_zero_where_phi_positive_breaks_the_bound() {
        // φ ≤ Cψ only on {ψ > 0}: ψ vanishes at x while φ(x) = 1/2
        let k = FiniteMetricSpace::line(&[0.0, 1.0], 0).unwrap();
        let inst = LemchabInstance {
            space: k.clone(),
            phi: UscFunction(vec![0.5, 0.0]),
            psi: UscFunction(vec![0.0, 1.0]),
            lambda: 0.5,
            c: 1.0,
            a: vec![0],
            b: vec![],
        };
        let lhs = weighted_hausdorff(&k, &inst.a, &inst.b, &inst.phi).unwrap();
        let rhs = weighted_hausdorff(&k, &inst.a, &inst.b, &inst.psi).unwrap();
        assert_eq!((lhs, rhs), (0.5, 0.0));
        assert!(matches!(inst.check().unwrap(), LemchabOutcome::HypothesisViolated { .. }));
    }

    #[test]
    fn identity_map_gives_equal_sides() {
        let f = scaling_map(0.1, 15, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = random_subset(31, &mut rng);
            let d = random_subset(31, &mut rng);
            let (l, r) = f.sides(&c, &d, 1.0, 1.0).unwrap();
            assert_eq!(l, r);
            assert_eq!(f.sides(&c, &c, 1.0, 1.0).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn scaling_audit_and_preconditions() {
        let f = scaling_map(0.1, 15, 1.5).unwrap();
        let rep = distortion_audit(&f, 1.5, 1.5, 1.0, 1.5, 200, 9).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(matches!(
            distortion_audit(&f, 1.5, 1.5, 1.0, 1.2, 10, 9),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            distortion_audit(&f, 1.2, 1.2, 1.0, 1.5, 10, 9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn random_bilipschitz_maps_respect_lambda_plus_one() {
        // random perturbations of scalings; the lemma yields λ+1 in general
        let mut worst: f64 = 0.0;
        for s in 0..200u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
            let lambda = 1.0 + rng.random::<f64>();
            let scale = 1.0 + (lambda - 1.0) * rng.random::<f64>();
            let xs: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.1).collect();
            let mut ys: Vec<f64> = xs.iter().map(|x| scale * x).collect();
            for y in ys.iter_mut().skip(13) {
                *y += 0.01 * rng.random::<f64>();
            }
            let m = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for k in 13..25 {
                ys[k] = ys[k].min(m);
            }
            for k in 14..25 {
                if ys[k] <= ys[k - 1] {
                    ys[k] = ys[k - 1] + 1e-3;
                }
            }
            let f = BallMap {
                source: FiniteMetricSpace::line(&xs, 12).unwrap(),
                target: FiniteMetricSpace::line(&ys, 12).unwrap(),
                image: (0..25).map(Some).collect(),
            };
            let lam = (0..25)
                .flat_map(|i| (0..i).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let r = f.target.d(i, j) / f.source.d(i, j);
                    r.max(1.0 / r)
                })
                .fold(1.0, f64::max);
            for t in 0..20 {
                let mut rng = stream_rng(s, t);
                let c = random_subset(25, &mut rng);
                let d = random_subset(25, &mut rng);
                let (l, r) = f.sides(&c, &d, 1.0, lam).unwrap();
                assert!(l <= (lam + 1.0) * r + 1e-12);
                if r > 0.0 {
                    worst = worst.max(l / (lam * r));
                }
            }
        }
        eprintln!("largest lhs / (lambda rhs) over random maps: {worst}");
    }

    #[test]
    fn convergence_verdicts() {
        let xs = grid(0.0, 2.0, 0.05);
        let k = FiniteMetricSpace::line(&xs, 0).unwrap();
        let x = 10; // 0.5
        let radii = [0.75, 1.0, 2.0];
        let constant = vec![vec![x, 20]; 6];
        let v = chabauty_convergence_test(&k, &constant, &[x, 20], &radii, 0.0).unwrap();
        assert!(v.converged && v.bound_consistent);

        let sliding: Vec<Vec<usize>> = (0..=8).map(|i| vec![x + 8 - i]).collect();
        let v = chabauty_convergence_test(&k, &sliding, &[x], &radii, 1e-12).unwrap();
        assert!(v.converged && v.bound_consistent);
        assert!(v.rows.iter().all(|r| r.combinatorial_converged));

        let alternating: Vec<Vec<usize>> = (0..9).map(|i| if i % 2 == 0 { vec![x] } else { vec![x, 5] }).collect();
        let v = chabauty_convergence_test(&k, &alternating, &[x], &radii, 1e-12).unwrap();
        assert!(!v.converged);
        assert_eq!(v.witness_radius, Some(0.75));
        assert!(v.bound_consistent);
    }

    #[test]
    fn identity_and_grid_oracle() {
        let rep = indicator_identity_audit(200, 7, 4);
        assert_eq!(rep.violations, 0);
        assert!(grid_oracle_gap(20, 6, 1e-4, 5) < 1e-4);
    }

    #[test]
    fn taper_monotone() {
        let rep = taper_monotonicity_audit(200, 8, &[1.0, 1.3, 2.0, 3.5], 6);
        assert_eq!(rep.violations, 0);
    }
}
