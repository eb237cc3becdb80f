//! Sasaki lifts of coordinate metrics and the derivative information they carry.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::expr::Expr;
use crate::{Error, Result};

pub type Mat = DMatrix<f64>;
type Eval = Arc<dyn Fn(&[f64]) -> Result<Mat> + Send + Sync>;
type Deriv = Arc<dyn Fn(&[f64]) -> Vec<Mat> + Send + Sync>;

/// Finite-difference step for Christoffel symbols (with one Richardson level).
pub const STEP: f64 = 1e-4;
/// Half-width of the fiber box `[-V, V]^d` used for lifted patches.
pub const FIBER: f64 = 1.0;

/// A Riemannian metric in coordinates on a box.
#[derive(Clone)]
pub struct CoordinateMetric {
    pub dim: usize,
    pub patch: Vec<[f64; 2]>,
    eval: Eval,
    deriv: Option<Deriv>,
}

impl std::fmt::Debug for CoordinateMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoordinateMetric").field("dim", &self.dim).field("patch", &self.patch).finish()
    }
}

fn check_patch(dim: usize, patch: &[[f64; 2]]) -> Result<()> {
    if dim == 0 || patch.len() != dim {
        return Err(Error::Malformed(format!("patch has {} sides for dimension {dim}", patch.len())));
    }
    for s in patch {
        if !(s[0] < s[1]) || !s[0].is_finite() || !s[1].is_finite() {
            return Err(Error::Malformed(format!("bad patch side {s:?}")));
        }
    }
    Ok(())
}

impl CoordinateMetric {
    pub fn new<F>(dim: usize, patch: Vec<[f64; 2]>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Mat + Send + Sync + 'static,
    {
        check_patch(dim, &patch)?;
        Ok(CoordinateMetric { dim, patch, eval: Arc::new(move |x| Ok(f(x))), deriv: None })
    }

    fn fallible(dim: usize, patch: Vec<[f64; 2]>, eval: Eval) -> Self {
        CoordinateMetric { dim, patch, eval, deriv: None }
    }

    /// Attaches exact first derivatives `x ↦ [∂₁g, …, ∂_d g]`.
    pub fn with_derivatives<F>(mut self, d: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<Mat> + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn has_derivatives(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn euclidean(dim: usize, patch: Vec<[f64; 2]>) -> Result<Self> {
        Ok(CoordinateMetric::new(dim, patch, move |_| Mat::identity(dim, dim))?
            .with_derivatives(move |_| vec![Mat::zeros(dim, dim); dim]))
    }

    /// `(dx² + dy²) / y²` on a patch of the upper half-plane.
    pub fn hyperbolic(patch: Vec<[f64; 2]>) -> Result<Self> {
        if patch.len() == 2 && patch[1][0] <= 0.0 {
            return Err(Error::Precondition("hyperbolic patch must lie in y > 0".into()));
        }
        Ok(CoordinateMetric::new(2, patch, |x| Mat::identity(2, 2) / (x[1] * x[1]))?.with_derivatives(|x| {
            let y3 = x[1].powi(3);
            vec![Mat::zeros(2, 2), Mat::identity(2, 2) * (-2.0 / y3)]
        }))
    }

    /// Entries `[g11, g12, g21, g22]` as expressions in `x, y`.
    pub fn from_exprs(entries: &[Expr], patch: Vec<[f64; 2]>) -> Result<Self> {
        if entries.len() != 4 {
            return Err(Error::Malformed(format!("expected 4 metric entries, got {}", entries.len())));
        }
        let e: Vec<Expr> = entries.to_vec();
        CoordinateMetric::new(2, patch, move |x| {
            Mat::from_row_slice(2, 2, &[e[0].eval(x[0], x[1]), e[1].eval(x[0], x[1]), e[2].eval(x[0], x[1]), e[3].eval(x[0], x[1])])
        })
    }

    /// `c · g`.
    pub fn scaled(&self, c: f64) -> Self {
        let base = self.clone();
        let mut out = CoordinateMetric::fallible(self.dim, self.patch.clone(), Arc::new(move |x| Ok(base.raw(x)? * c)));
        if let Some(d) = self.deriv.clone() {
            out.deriv = Some(Arc::new(move |x| d(x).into_iter().map(|m| m * c).collect()));
        }
        out
    }

    /// `g + ε b(x) I` with a Gaussian bump `b` of the given center and width.
    pub fn bumped(&self, eps: f64, center: Vec<f64>, width: f64) -> Self {
        let base = self.clone();
        let dim = self.dim;
        let bump = move |x: &[f64]| {
            let r2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
            (-r2 / (width * width)).exp()
        };
        CoordinateMetric::fallible(dim, self.patch.clone(), Arc::new(move |x| Ok(base.raw(x)? + Mat::identity(dim, dim) * (eps * bump(x)))))
    }

    /// Raw matrix without validation.
    pub fn raw(&self, x: &[f64]) -> Result<Mat> {
        (self.eval)(x)
    }

    /// `g(x)`, checked symmetric and positive definite.
    pub fn at(&self, x: &[f64]) -> Result<Mat> {
        let g = self.raw(x)?;
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::Malformed(format!("metric returned a {}x{} matrix", g.nrows(), g.ncols())));
        }
        if g != g.transpose() {
            return Err(Error::Precondition(format!("metric is not symmetric at {x:?}")));
        }
        if g.iter().any(|v| !v.is_finite()) || g.clone().cholesky().is_none() {
            return Err(Error::Precondition(format!("metric is not positive definite at {x:?}")));
        }
        Ok(g)
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim && x.iter().zip(&self.patch).all(|(v, s)| *v >= s[0] + margin && *v <= s[1] - margin)
    }

    fn interior(&self, x: &[f64], margin: f64) -> Result<()> {
        if self.contains(x, margin) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{x:?} is within {margin} of the patch boundary")))
        }
    }

    /// `[∂₁g, …, ∂_d g]` at `x`: exact when attached, otherwise central
    /// differences at `h` and `h/2` combined by Richardson extrapolation.
    pub fn derivatives(&self, x: &[f64], h: f64) -> Result<Vec<Mat>> {
        if let Some(d) = &self.deriv {
            return Ok(d(x));
        }
        self.interior(x, 2.0 * h)?;
        (0..self.dim).map(|a| richardson(|p| self.raw(p), x, a, h)).collect()
    }

    /// Box shrunk by `m` on every side.
    pub fn shrunk(&self, m: f64) -> Vec<[f64; 2]> {
        self.patch.iter().map(|s| [s[0] + m, s[1] - m]).collect()
    }
}

fn central<F: Fn(&[f64]) -> Result<Mat>>(f: &F, x: &[f64], a: usize, h: f64) -> Result<Mat> {
    let mut p = x.to_vec();
    p[a] = x[a] + h;
    let fp = f(&p)?;
    p[a] = x[a] - h;
    let fm = f(&p)?;
    Ok((fp - fm) / (2.0 * h))
}

fn richardson<F: Fn(&[f64]) -> Result<Mat>>(f: F, x: &[f64], a: usize, h: f64) -> Result<Mat> {
    let d1 = central(&f, x, a, h)?;
    let d2 = central(&f, x, a, h / 2.0)?;
    Ok((d2 * 4.0 - d1) / 3.0)
}

/// Five-point stencil, kept separate from the Christoffel differences so it can serve as an oracle.
fn five_point<F: Fn(&[f64]) -> Result<Mat>>(f: F, x: &[f64], a: usize, h: f64) -> Result<Mat> {
    let at = |s: f64| {
        let mut p = x.to_vec();
        p[a] += s;
        f(&p)
    };
    Ok((at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h))
}

#[derive(Clone, Debug)]
pub struct Christoffels {
    pub dim: usize,
    /// `Γ_{k,αj}` at `[k][α][j]`, first index lowered.
    pub first: Vec<f64>,
    /// `Γ^β_{αj}` at `[β][α][j]`.
    pub second: Vec<f64>,
}

impl Christoffels {
    fn ix(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    pub fn first(&self, k: usize, a: usize, j: usize) -> f64 {
        self.first[self.ix(k, a, j)]
    }

    pub fn second(&self, b: usize, a: usize, j: usize) -> f64 {
        self.second[self.ix(b, a, j)]
    }
}

pub fn christoffels(g: &CoordinateMetric, x: &[f64], h: f64) -> Result<Christoffels> {
    g.interior(x, 2.0 * h)?;
    let m = g.at(x)?;
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Precondition(format!("metric is singular at {x:?}")))?;
    let dg = g.derivatives(x, h)?;
    let d = g.dim;
    let mut first = vec![0.0; d * d * d];
    for k in 0..d {
        for a in 0..d {
            for j in 0..d {
                first[(k * d + a) * d + j] = 0.5 * (dg[a][(j, k)] + dg[j][(a, k)] - dg[k][(a, j)]);
            }
        }
    }
    let mut second = vec![0.0; d * d * d];
    for b in 0..d {
        for a in 0..d {
            for j in 0..d {
                second[(b * d + a) * d + j] = (0..d).map(|k| inv[(b, k)] * first[(k * d + a) * d + j]).sum();
            }
        }
    }
    Ok(Christoffels { dim: d, first, second })
}

/// The Sasaki matrix `g¹(x, v)`, assembled component by component.
pub fn sasaki_matrix(g: &CoordinateMetric, x: &[f64], v: &[f64], h: f64) -> Result<Mat> {
    let d = g.dim;
    if v.len() != d {
        return Err(Error::Malformed(format!("fiber vector has length {}, expected {d}", v.len())));
    }
    let gx = g.at(x)?;
    let c = christoffels(g, x, h)?;
    let mut out = Mat::zeros(2 * d, 2 * d);
    // w^γ_i = Σ_α Γ^γ_{αi} v_α
    let mut w = Mat::zeros(d, d);
    for gam in 0..d {
        for i in 0..d {
            w[(gam, i)] = (0..d).map(|a| c.second(gam, a, i) * v[a]).sum();
        }
    }
    let quad = w.transpose() * &gx * &w;
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = gx[(i, j)] + quad[(i, j)];
            let off: f64 = (0..d).map(|a| c.first(j, a, i) * v[a]).sum();
            out[(i, d + j)] = off;
            out[(d + j, i)] = off;
            out[(d + i, d + j)] = gx[(i, j)];
        }
    }
    // roundoff in the quadratic block can break exact symmetry
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}

/// `g¹` as a coordinate metric on `TU ≅ U × [-V, V]^d`, with the base directions
/// shrunk so nested differences stay inside the patch.
pub fn sasaki_lift(g: &CoordinateMetric) -> CoordinateMetric {
    let d = g.dim;
    let mut patch = g.shrunk(4.0 * STEP);
    patch.extend(std::iter::repeat([-FIBER, FIBER]).take(d));
    let base = g.clone();
    CoordinateMetric::fallible(2 * d, patch, Arc::new(move |p| sasaki_matrix(&base, &p[..d], &p[d..], STEP)))
}

/// `g^k` for `k ≤ 2`.
pub fn iterated(g: &CoordinateMetric, k: usize) -> Result<CoordinateMetric> {
    match k {
        0 => Ok(g.clone()),
        1 => Ok(sasaki_lift(g)),
        2 => Ok(sasaki_lift(&sasaki_lift(g))),
        _ => Err(Error::Precondition(format!("order {k} lifts are not supported"))),
    }
}

// ---------------------------------------------------------------- sampling

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Point `i` of the Halton sequence mapped into the box.
pub fn halton(i: usize, patch: &[[f64; 2]]) -> Vec<f64> {
    patch
        .iter()
        .enumerate()
        .map(|(k, s)| s[0] + (s[1] - s[0]) * radical_inverse(i as u64 + 1, PRIMES[k % PRIMES.len()]))
        .collect()
}

// ---------------------------------------------------------------- identities

#[derive(Clone, Debug, Serialize)]
pub struct IdentityFailure {
    pub alpha: usize,
    pub i: usize,
    pub j: usize,
    pub lifted: f64,
    pub oracle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationshipReport {
    pub point: Vec<f64>,
    pub samples: usize,
    /// Largest `|g¹_{d+i,d+j}(x, v) − g_ij(x)|` over the sampled `v`.
    pub block_error: f64,
    /// Largest derivative mismatch relative to `max(1, max|g_ij(x)|)`.
    pub derivative_error: f64,
    pub worst: Option<IdentityFailure>,
    pub passes: bool,
}

pub const RELATIONSHIP_TOL: f64 = 1e-6;

/// Checks `g_ij(x) = g¹_{d+i,d+j}(x, v)` and
/// `∂_α g_ij(x) = g¹_{i,d+j}(x, e_α) + g¹_{j,d+i}(x, e_α)`, the latter against a
/// five-point difference oracle.
pub fn relationship_audit(g: &CoordinateMetric, x: &[f64], samples: usize) -> Result<RelationshipReport> {
    let d = g.dim;
    g.interior(x, 1e-2)?;
    let gx = g.at(x)?;
    let scale = gx.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let fiber = vec![[-FIBER, FIBER]; d];
    let mut block_error: f64 = 0.0;
    for s in 0..samples {
        let v = halton(s, &fiber);
        let l = sasaki_matrix(g, x, &v, STEP)?;
        for i in 0..d {
            for j in 0..d {
                block_error = block_error.max((l[(d + i, d + j)] - gx[(i, j)]).abs());
            }
        }
    }
    let mut derivative_error: f64 = 0.0;
    let mut worst = None;
    for a in 0..d {
        let mut e = vec![0.0; d];
        e[a] = 1.0;
        let l = sasaki_matrix(g, x, &e, STEP)?;
        let oracle = five_point(|p| g.raw(p), x, a, 1e-3)?;
        for i in 0..d {
            for j in 0..d {
                let lifted = l[(i, d + j)] + l[(j, d + i)];
                let err = (lifted - oracle[(i, j)]).abs() / scale;
                if err > derivative_error {
                    derivative_error = err;
                    worst = Some(IdentityFailure { alpha: a, i, j, lifted, oracle: oracle[(i, j)] });
                }
            }
        }
    }
    let passes = block_error <= RELATIONSHIP_TOL * scale && derivative_error <= RELATIONSHIP_TOL;
    Ok(RelationshipReport { point: x.to_vec(), samples, block_error, derivative_error, worst, passes })
}

/// `I + 0.3 BᵀB` with `B` a 2×2 matrix of random quadratics in `(x, y)`.
pub fn random_polynomial_metric<R: Rng>(rng: &mut R, patch: Vec<[f64; 2]>) -> Result<CoordinateMetric> {
    let coef: Vec<[f64; 6]> = (0..4).map(|_| std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0)).collect();
    CoordinateMetric::new(2, patch, move |p| {
        let (x, y) = (p[0], p[1]);
        let mono = [1.0, x, y, x * x, x * y, y * y];
        let b = Mat::from_fn(2, 2, |r, c| coef[2 * r + c].iter().zip(&mono).map(|(a, m)| a * m).sum());
        Mat::identity(2, 2) + b.transpose() * b * 0.3
    })
}

// ---------------------------------------------------------------- bilipschitz

#[derive(Clone, Debug, Serialize)]
pub struct BilipschitzEstimate {
    pub k: usize,
    pub lambda: f64,
    pub samples: usize,
    /// Base point in `T^k U` and tangent direction attaining the estimate.
    pub witness_point: Vec<f64>,
    pub witness_direction: Vec<f64>,
}

/// Extreme generalized eigenvalues of `(h, g)` with the eigenvector of the
/// more distorted one, as a tangent vector.
fn distortion_at(g: &Mat, h: &Mat) -> Result<(f64, Vec<f64>)> {
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("metric is not positive definite".into()))?
        .l();
    let linv = l.try_inverse().ok_or_else(|| Error::Precondition("singular Cholesky factor".into()))?;
    let m = &linv * h * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let (mut best, mut col) = (0.0, 0);
    for (c, &mu) in eig.eigenvalues.iter().enumerate() {
        if !(mu > 0.0) {
            return Err(Error::Precondition("second metric is not positive definite".into()));
        }
        let r = mu.max(1.0 / mu);
        if r > best {
            best = r;
            col = c;
        }
    }
    let dir: DVector<f64> = linv.transpose() * eig.eigenvectors.column(col);
    let n = dir.norm();
    Ok((best.sqrt(), dir.iter().map(|v| v / n).collect()))
}

/// `sup max(h^k(v,v)/g^k(v,v), g^k(v,v)/h^k(v,v))^{1/2}` over quasi-random base
/// points of `T^k U`; for each base point the sup over `v` is exact.
pub fn bilipschitz_ratio(g: &CoordinateMetric, h: &CoordinateMetric, k: usize, samples: usize) -> Result<BilipschitzEstimate> {
    if g.dim != h.dim {
        return Err(Error::Precondition("metrics have different dimensions".into()));
    }
    let (gk, hk) = (iterated(g, k)?, iterated(h, k)?);
    let margin = 4.0 * STEP;
    let box_ = gk.shrunk(margin);
    let mut best = BilipschitzEstimate { k, lambda: 1.0, samples: 0, witness_point: vec![], witness_direction: vec![] };
    for i in 0..samples {
        let p = halton(i, &box_);
        if !hk.contains(&p, margin) {
            return Err(Error::Precondition(format!("{p:?} lies outside the second metric's patch")));
        }
        let (lam, dir) = distortion_at(&gk.at(&p)?, &hk.at(&p)?)?;
        best.samples += 1;
        if lam > best.lambda || best.witness_point.is_empty() {
            best.lambda = lam.max(best.lambda);
            best.witness_point = p;
            best.witness_direction = dir;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioCertificate {
    pub point: Vec<f64>,
    pub alphas: Vec<usize>,
    pub i: usize,
    pub j: usize,
    pub dg: f64,
    pub dh: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioAudit {
    pub k: usize,
    pub lambda: f64,
    pub checked: usize,
    /// Entries where both derivatives vanish, so the ratio is undefined.
    pub skipped: usize,
    pub violations: usize,
    /// Ratio farthest outside (or closest to the edge of) `[1/λ², λ²]`.
    pub worst: Option<RatioCertificate>,
}

/// Values below this are treated as zero derivatives.
pub const ZERO_TOL: f64 = 1e-6;

/// All partial derivatives of order `≤ k` of the entries, indexed by the
/// nondecreasing derivative multi-index.
fn derivative_table(g: &CoordinateMetric, x: &[f64], k: usize) -> Result<Vec<(Vec<usize>, Mat)>> {
    let mut out = vec![(vec![], g.at(x)?)];
    if k >= 1 {
        let d1 = g.derivatives(x, STEP)?;
        for (a, m) in d1.into_iter().enumerate() {
            out.push((vec![a], m));
        }
    }
    if k >= 2 {
        for a in 0..g.dim {
            // second derivatives from first ones at a coarser step
            let d2 = richardson(|p| Ok(g.derivatives(p, STEP)?.swap_remove(a)), x, a, 1e-3)?;
            out.push((vec![a, a], d2));
            for b in a + 1..g.dim {
                let d2 = richardson(|p| Ok(g.derivatives(p, STEP)?.swap_remove(a)), x, b, 1e-3)?;
                out.push((vec![a, b], d2));
            }
        }
    }
    Ok(out)
}

/// Checks `1/λ² ≤ |∂^l g_ij / ∂^l h_ij| ≤ λ²` for all `l ≤ k` at `points`
/// quasi-random base points.
pub fn derivative_ratio_audit(g: &CoordinateMetric, h: &CoordinateMetric, lambda: f64, k: usize, points: usize) -> Result<RatioAudit> {
    if k > 2 {
        return Err(Error::Precondition(format!("order {k} is not supported")));
    }
    let box_ = g.shrunk(0.01);
    let (lo, hi) = (1.0 / (lambda * lambda), lambda * lambda);
    let mut rep = RatioAudit { k, lambda, checked: 0, skipped: 0, violations: 0, worst: None };
    let mut worst_excess = f64::NEG_INFINITY;
    for s in 0..points {
        let x = halton(s, &box_);
        let (tg, th) = (derivative_table(g, &x, k)?, derivative_table(h, &x, k)?);
        for ((alphas, mg), (_, mh)) in tg.iter().zip(&th) {
            for i in 0..g.dim {
                for j in i..g.dim {
                    let (a, b) = (mg[(i, j)], mh[(i, j)]);
                    if a.abs() <= ZERO_TOL && b.abs() <= ZERO_TOL {
                        rep.skipped += 1;
                        continue;
                    }
                    rep.checked += 1;
                    let ratio = if b.abs() <= ZERO_TOL {
                        f64::INFINITY
                    } else if a.abs() <= ZERO_TOL {
                        0.0
                    } else {
                        (a / b).abs()
                    };
                    // log-distance outside the band, positive when violated
                    let excess = if ratio == 0.0 || ratio.is_infinite() {
                        f64::INFINITY
                    } else {
                        (lo.ln() - ratio.ln()).max(ratio.ln() - hi.ln())
                    };
                    if excess > 1e-9 {
                        rep.violations += 1;
                    }
                    if excess > worst_excess {
                        worst_excess = excess;
                        rep.worst = Some(RatioCertificate { point: x.clone(), alphas: alphas.clone(), i, j, dg: a, dh: b, ratio });
                    }
                }
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------- distortion of maps

type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;

/// A smooth map between coordinate patches of equal dimension.
#[derive(Clone)]
pub struct PatchMap {
    pub dim: usize,
    f: MapFn,
    jac: Option<JacFn>,
}

impl PatchMap {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        PatchMap { dim, f: Arc::new(f), jac: None }
    }

    pub fn with_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&[f64]) -> Mat + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(j));
        self
    }

    pub fn identity(dim: usize) -> Self {
        PatchMap::new(dim, |x| x.to_vec()).with_jacobian(move |_| Mat::identity(dim, dim))
    }

    /// `x ↦ c + A (x − c)`.
    pub fn affine(a: Mat, c: Vec<f64>) -> Self {
        let dim = c.len();
        let a2 = a.clone();
        PatchMap::new(dim, move |x| {
            let v = DVector::from_iterator(dim, x.iter().zip(&c).map(|(p, q)| p - q));
            (&a * v).iter().zip(&c).map(|(p, q)| p + q).collect()
        })
        .with_jacobian(move |_| a2.clone())
    }

    pub fn rotation(angle: f64, c: Vec<f64>) -> Self {
        let (s, co) = angle.sin_cos();
        PatchMap::affine(Mat::from_row_slice(2, 2, &[co, -s, s, co]), c)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Mat {
        if let Some(j) = &self.jac {
            return j(x);
        }
        let mut m = Mat::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            let col = richardson(|p| Ok(Mat::from_column_slice(self.dim, 1, &self.apply(p))), x, a, 1e-5).unwrap();
            m.set_column(a, &col.column(0));
        }
        m
    }
}

/// `f*h = Dfᵀ h(f) Df` on the patch of `g`.
pub fn pullback(f: &PatchMap, h: &CoordinateMetric, patch: Vec<[f64; 2]>) -> Result<CoordinateMetric> {
    check_patch(f.dim, &patch)?;
    let (f, h) = (f.clone(), h.clone());
    Ok(CoordinateMetric::fallible(
        f.dim,
        patch,
        Arc::new(move |x| {
            let y = f.apply(x);
            if !h.contains(&y, 0.0) {
                return Err(Error::Precondition(format!("image {y:?} leaves the target patch")));
            }
            let j = f.jacobian(x);
            let m = j.transpose() * h.raw(&y)? * &j;
            Ok((&m + m.transpose()) * 0.5)
        }),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct Distortion {
    pub k: usize,
    pub radius: f64,
    pub log_lambda: f64,
    pub estimate: BilipschitzEstimate,
}

fn injectivity_check(f: &PatchMap, pts: &[Vec<f64>]) -> Result<()> {
    let imgs: Vec<Vec<f64>> = pts.iter().map(|p| f.apply(p)).collect();
    for i in 0..pts.len() {
        for j in 0..i {
            let dx: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let dy: f64 = imgs[i].iter().zip(&imgs[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dx > 1e-9 && dy <= 1e-12 * dx.max(1.0) {
                return Err(Error::Precondition(format!("map is not injective: {:?} and {:?} collide", pts[i], pts[j])));
            }
        }
    }
    Ok(())
}

/// `log λ` for `D^k f` between `(U, g)` and `(V, h)` on the coordinate
/// `R`-ball around `base`, via the pullback identity `(D^k f)^* h^k = (f^* h)^k`.
pub fn order_k_distortion(
    f: &PatchMap,
    g: &CoordinateMetric,
    h: &CoordinateMetric,
    base: &[f64],
    radius: f64,
    k: usize,
    samples: usize,
) -> Result<Distortion> {
    if !(1..=2).contains(&k) {
        return Err(Error::Precondition(format!("order {k} is outside 1..=2")));
    }
    if !g.contains(base, radius + 8.0 * STEP) {
        return Err(Error::Precondition(format!("the {radius}-ball around {base:?} leaves the patch")));
    }
    let fb = f.apply(base);
    if fb.iter().zip(base).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Precondition(format!("map moves the base point to {fb:?}")));
    }
    let ball_box: Vec<[f64; 2]> = base.iter().map(|c| [c - radius, c + radius]).collect();
    let probe: Vec<Vec<f64>> = (0..200)
        .map(|i| halton(i, &ball_box))
        .filter(|p| p.iter().zip(base).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= radius * radius)
        .collect();
    injectivity_check(f, &probe)?;
    let pb = pullback(f, h, g.patch.clone())?;
    let est = bilipschitz_in_ball(g, &pb, k, samples, base, radius)?;
    Ok(Distortion { k, radius, log_lambda: est.lambda.ln(), estimate: est })
}

/// Base points restricted to the base ball; fiber coordinates range over the whole box.
fn bilipschitz_in_ball(
    g: &CoordinateMetric,
    h: &CoordinateMetric,
    k: usize,
    samples: usize,
    base: &[f64],
    radius: f64,
) -> Result<BilipschitzEstimate> {
    let (gk, hk) = (iterated(g, k)?, iterated(h, k)?);
    let d = g.dim;
    let mut box_ = gk.shrunk(4.0 * STEP);
    for (a, c) in base.iter().enumerate() {
        box_[a] = [c - radius, c + radius];
    }
    let mut best = BilipschitzEstimate { k, lambda: 1.0, samples: 0, witness_point: vec![], witness_direction: vec![] };
    let mut i = 0;
    while best.samples < samples {
        let p = halton(i, &box_);
        i += 1;
        let r2: f64 = p[..d].iter().zip(base).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 > radius * radius {
            continue;
        }
        let (lam, dir) = distortion_at(&gk.at(&p)?, &hk.at(&p)?)?;
        best.samples += 1;
        if lam > best.lambda || best.witness_point.is_empty() {
            best.lambda = lam.max(best.lambda);
            best.witness_point = p;
            best.witness_direction = dir;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothDistance {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
    /// `Σ_{k=1,2} 2^{-k} min{log λ_k(f) + log λ_k(f⁻¹), 1}`.
    pub truncated: f64,
}

/// Symmetrized two-term surrogate of the smooth distance built from `f` and its inverse.
pub fn smooth_distance_surrogate(
    f: &PatchMap,
    f_inv: &PatchMap,
    g: &CoordinateMetric,
    h: &CoordinateMetric,
    base: &[f64],
    radius: f64,
    samples: usize,
) -> Result<SmoothDistance> {
    let mut out = SmoothDistance { forward: vec![], backward: vec![], truncated: 0.0 };
    for k in 1..=2 {
        let a = order_k_distortion(f, g, h, base, radius, k, samples)?.log_lambda;
        let b = order_k_distortion(f_inv, h, g, base, radius, k, samples)?.log_lambda;
        out.forward.push(a);
        out.backward.push(b);
        out.truncated += 0.5f64.powi(k as i32) * (a + b).min(1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn hyp() -> CoordinateMetric {
        CoordinateMetric::hyperbolic(vec![[-1.0, 1.0], [0.5, 2.0]]).unwrap()
    }

    fn hyp_fd() -> CoordinateMetric {
        CoordinateMetric::new(2, vec![[-1.0, 1.0], [0.5, 2.0]], |x| Mat::identity(2, 2) / (x[1] * x[1])).unwrap()
    }

    #[test]
    fn flat_christoffels_vanish_and_lift_is_identity() {
        let e = CoordinateMetric::euclidean(2, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let c = christoffels(&e, &[0.1, 0.2], STEP).unwrap();
        assert!(c.first.iter().chain(&c.second).all(|v| *v == 0.0));
        for i in 0..50 {
            let p = halton(i, &[[-0.5, 0.5], [-0.5, 0.5], [-3.0, 3.0], [-3.0, 3.0]]);
            assert_eq!(sasaki_matrix(&e, &p[..2], &p[2..], STEP).unwrap(), Mat::identity(4, 4));
        }
        let fd = CoordinateMetric::new(2, vec![[-1.0, 1.0], [-1.0, 1.0]], |_| Mat::identity(2, 2)).unwrap();
        assert_eq!(sasaki_matrix(&fd, &[0.0, 0.0], &[0.7, -0.2], STEP).unwrap(), Mat::identity(4, 4));
    }

    #[test]
    fn hyperbolic_christoffels() {
        for g in [hyp(), hyp_fd()] {
            let c = christoffels(&g, &[0.0, 1.0], STEP).unwrap();
            // x = 0, y = 1
            assert!((c.second(0, 0, 1) + 1.0).abs() < 1e-6);
            assert!((c.second(0, 1, 0) + 1.0).abs() < 1e-6);
            assert!((c.second(1, 0, 0) - 1.0).abs() < 1e-6);
            assert!((c.second(1, 1, 1) + 1.0).abs() < 1e-6);
            assert!(c.second(0, 0, 0).abs() < 1e-6 && c.second(1, 0, 1).abs() < 1e-6);
        }
        assert!(christoffels(&hyp_fd(), &[0.0, 0.5], STEP).is_err());
        let sing = CoordinateMetric::new(2, vec![[-1.0, 1.0], [-1.0, 1.0]], |_| Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(christoffels(&sing, &[0.0, 0.0], STEP).is_err());
    }

    #[test]
    fn christoffels_are_symmetric_on_random_metrics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let g = random_polynomial_metric(&mut rng, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
            let x = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let c = christoffels(&g, &x, STEP).unwrap();
            for b in 0..2 {
                for a in 0..2 {
                    for j in 0..2 {
                        assert!((c.second(b, a, j) - c.second(b, j, a)).abs() < 1e-12);
                        assert!((c.first(b, a, j) - c.first(b, j, a)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_fiber_gives_block_diagonal_lift() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = random_polynomial_metric(&mut rng, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let x = [0.2, -0.3];
        let l = sasaki_matrix(&g, &x, &[0.0, 0.0], STEP).unwrap();
        let gx = g.at(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(l[(i, j)], gx[(i, j)]);
                assert_eq!(l[(i, 2 + j)], 0.0);
                assert_eq!(l[(2 + i, 2 + j)], gx[(i, j)]);
            }
        }
    }

    #[test]
    fn hyperbolic_lift_encodes_derivative() {
        let g = hyp();
        let l = sasaki_matrix(&g, &[0.0, 1.0], &[0.0, 1.0], STEP).unwrap();
        // ∂_y g_xx at y = 1 is −2
        assert!((l[(0, 2)] + l[(0, 2)] + 2.0).abs() < 1e-6);
        let r = relationship_audit(&g, &[0.0, 1.0], 100).unwrap();
        assert!(r.passes, "{r:?}");
        let r = relationship_audit(&hyp_fd(), &[0.3, 1.2], 100).unwrap();
        assert!(r.passes, "{r:?}");
        assert_eq!(r.block_error, 0.0);
    }

    #[test]
    fn lift_is_symmetric_positive_definite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g = random_polynomial_metric(&mut rng, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let l = sasaki_lift(&g);
        let b = l.shrunk(1e-3);
        for i in 0..1000 {
            let m = l.at(&halton(i, &b)).unwrap();
            assert_eq!(m, m.transpose());
        }
        let l2 = iterated(&hyp(), 2).unwrap();
        assert_eq!(l2.dim, 8);
        let m = l2.at(&halton(5, &l2.shrunk(1e-3))).unwrap();
        assert!(m.clone().cholesky().is_some());
    }

    #[test]
    fn random_patches_satisfy_relationship() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_polynomial_metric(&mut rng, vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
            let x = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            let r = relationship_audit(&g, &x, 100).unwrap();
            assert!(r.passes, "{r:?}");
        }
    }

    #[test]
    fn conformal_scaling_is_tight() {
        let g = hyp();
        let c = 1.3f64;
        let h = g.scaled(c * c);
        for k in 0..=2 {
            let est = bilipschitz_ratio(&g, &h, k, 40).unwrap();
            assert!((est.lambda - c).abs() < 1e-6, "k={k} {est:?}");
            let audit = derivative_ratio_audit(&g, &h, est.lambda, k, 10).unwrap();
            assert_eq!(audit.violations, 0, "{audit:?}");
            let w = audit.worst.unwrap();
            assert!((w.ratio - 1.0 / (c * c)).abs() < 1e-6);
        }
        let same = bilipschitz_ratio(&g, &g, 1, 20).unwrap();
        assert!((same.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_entries_break_the_entrywise_ratio_bound() {
        // constant metrics: every Sasaki lift is block-diagonal copies of g
        let p = vec![[-1.0, 1.0], [-1.0, 1.0]];
        let g = CoordinateMetric::euclidean(2, p.clone()).unwrap();
        let h = CoordinateMetric::new(2, p, |_| Mat::from_row_slice(2, 2, &[1.0, 0.05, 0.05, 1.0])).unwrap();
        let est = bilipschitz_ratio(&g, &h, 1, 20).unwrap();
        assert!((est.lambda - (1.0f64 / 0.95).sqrt()).abs() < 1e-9);
        let audit = derivative_ratio_audit(&g, &h, est.lambda, 1, 5).unwrap();
        assert!(audit.violations > 0);
        let w = audit.worst.unwrap();
        assert_eq!((w.i, w.j, w.ratio), (0, 1, 0.0));
    }

    #[test]
    fn bump_perturbation_breaks_the_entrywise_ratio_bound() {
        // ∂_x g_xx = 0 for the hyperbolic metric while the bump gives ∂_x h_xx ≠ 0
        let g = hyp();
        let h = g.bumped(0.01, vec![0.1, 1.2], 0.4);
        for k in 1..=2 {
            let est = bilipschitz_ratio(&g, &h, k, 200).unwrap();
            assert!(est.lambda > 1.0 && est.lambda < 1.1, "{est:?}");
            let audit = derivative_ratio_audit(&g, &h, est.lambda, k, 20).unwrap();
            assert!(audit.violations > 0);
            let w = audit.worst.unwrap();
            assert_eq!((w.alphas, w.dg, w.ratio), (vec![0], 0.0, 0.0));
        }
    }

    #[test]
    fn map_distortion_examples() {
        let p = vec![[-2.0, 2.0], [-2.0, 2.0]];
        let e = CoordinateMetric::euclidean(2, p.clone()).unwrap();
        let id = PatchMap::identity(2);
        for k in 1..=2 {
            assert_eq!(order_k_distortion(&id, &e, &e, &[0.0, 0.0], 1.0, k, 30).unwrap().log_lambda, 0.0);
            let rot = PatchMap::rotation(0.7, vec![0.0, 0.0]);
            let r = order_k_distortion(&rot, &e, &e, &[0.0, 0.0], 1.0, k, 30).unwrap();
            assert!(r.log_lambda.abs() < 1e-9, "{r:?}");
        }
        let s = 0.2f64;
        let h = hyp();
        let hs = h.scaled((2.0 * s).exp());
        let r = order_k_distortion(&id, &h, &hs, &[0.0, 1.0], 0.3, 1, 30).unwrap();
        assert!((r.log_lambda - s).abs() < 1e-9, "{r:?}");
        let sur = smooth_distance_surrogate(&id, &id, &h, &hs, &[0.0, 1.0], 0.3, 20).unwrap();
        assert!((sur.truncated - 0.75 * 2.0 * s).abs() < 1e-6, "{sur:?}");
        let fold = PatchMap::new(2, |x| vec![x[0] * x[0], x[1]]);
        assert!(order_k_distortion(&fold, &e, &e, &[0.0, 0.0], 1.0, 1, 10).is_err());
    }

    #[test]
    fn expression_metrics() {
        let es: Vec<Expr> = ["1/(y*y)", "0", "0", "1/(y*y)"].iter().map(|s| Expr::parse(s).unwrap()).collect();
        let g = CoordinateMetric::from_exprs(&es, vec![[-1.0, 1.0], [0.5, 2.0]]).unwrap();
        let a = g.at(&[0.2, 1.5]).unwrap();
        let b = hyp().at(&[0.2, 1.5]).unwrap();
        assert!((a - b).abs().max() < 1e-15);
        let bad: Vec<Expr> = ["1", "x", "0", "1"].iter().map(|s| Expr::parse(s).unwrap()).collect();
        let g = CoordinateMetric::from_exprs(&bad, vec![[-1.0, 1.0], [0.5, 2.0]]).unwrap();
        assert!(g.at(&[0.5, 1.0]).is_err());
        let neg: Vec<Expr> = ["-1", "0", "0", "1"].iter().map(|s| Expr::parse(s).unwrap()).collect();
        let g = CoordinateMetric::from_exprs(&neg, vec![[-1.0, 1.0], [0.5, 2.0]]).unwrap();
        assert!(g.at(&[0.5, 1.0]).is_err());
    }
}
