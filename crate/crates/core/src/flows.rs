//! Geodesic flow on the flat unit torus and the one-dimensional transport identity.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::expr::Expr;
use crate::poisson::{chi_square, kolmogorov_sf, ChiSquare};
use crate::util::{chunks, stream_rng, STREAMS};
use crate::{Error, Result};

const GRID: usize = 256;

/// Periodic probability density on the unit square, given by an expression in `x, y`.
#[derive(Clone, Debug)]
pub struct TorusDensity {
    expr: Expr,
    norm: f64,
    envelope: f64,
}

impl TorusDensity {
    pub fn new(expr: Expr) -> Result<Self> {
        let h = 1.0 / GRID as f64;
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..GRID {
            for j in 0..GRID {
                let v = expr.eval((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if !v.is_finite() {
                    return Err(Error::Precondition(format!("density {} is not finite", expr.source())));
                }
                sum += v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo < 0.0 {
            return Err(Error::Precondition(format!("density {} takes the negative value {lo}", expr.source())));
        }
        let norm = sum * h * h;
        if norm <= 0.0 {
            return Err(Error::Precondition(format!("density {} has zero mass", expr.source())));
        }
        // grid maxima of smooth densities undershoot the true sup slightly
        Ok(TorusDensity { expr, norm, envelope: 1.25 * hi / norm })
    }

    pub fn parse(src: &str) -> Result<Self> {
        TorusDensity::new(Expr::parse(src)?)
    }

    pub fn uniform() -> Self {
        TorusDensity::parse("1").unwrap()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.expr.eval(x.rem_euclid(1.0), y.rem_euclid(1.0)) / self.norm
    }

    /// Unnormalized mass from the defining grid.
    pub fn raw_mass(&self) -> f64 {
        self.norm
    }

    pub fn source(&self) -> &str {
        self.expr.source()
    }

    /// Footpoint by rejection from the uniform square.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(f64, f64)> {
        loop {
            let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
            let f = self.eval(x, y);
            if f > self.envelope {
                return Err(Error::Precondition(format!(
                    "density {} exceeds its rejection envelope at ({x}, {y})",
                    self.source()
                )));
            }
            if rng.random::<f64>() * self.envelope < f {
                return Ok((x, y));
            }
        }
    }

    /// `∫₀ˣ ∫₀¹ f` by the midpoint rule on `m` cells in `x`.
    fn x_cdf(&self, m: usize) -> Vec<f64> {
        let h = 1.0 / m as f64;
        let mut out = vec![0.0; m + 1];
        for i in 0..m {
            let col: f64 = (0..64).map(|j| self.eval((i as f64 + 0.5) * h, (j as f64 + 0.5) / 64.0)).sum::<f64>() / 64.0;
            out[i + 1] = out[i] + col * h;
        }
        let total = out[m];
        out.iter().map(|v| v / total).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitTangentSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl UnitTangentSample {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !((0.0..1.0).contains(&x) && (0.0..1.0).contains(&y) && (0.0..TAU).contains(&theta)) {
            return Err(Error::Precondition(format!("({x}, {y}, {theta}) is outside [0,1)²×[0,2π)")));
        }
        Ok(UnitTangentSample { x, y, theta })
    }
}

/// `g_t`: translate the footpoint by `t e_θ` modulo 1.
pub fn flow(s: &UnitTangentSample, t: f64) -> UnitTangentSample {
    let wrap = |v: f64| {
        let w = v.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        if w >= 1.0 {
            0.0
        } else {
            w
        }
    };
    UnitTangentSample { x: wrap(s.x + t * s.theta.cos()), y: wrap(s.y + t * s.theta.sin()), theta: s.theta }
}

/// Distance on the circle `ℝ/ℤ`.
pub fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// One sample of the uniform lift of a footpoint law.
pub fn lift_with<R: Rng>(rng: &mut R, footpoint: (f64, f64)) -> UnitTangentSample {
    let theta = rng.random::<f64>() * TAU;
    UnitTangentSample { x: footpoint.0, y: footpoint.1, theta: if theta >= TAU { 0.0 } else { theta } }
}

/// `n` samples of the uniform lift of `mu`, split over fixed seeded streams.
pub fn uniform_lift(mu: &TorusDensity, n: usize, seed: u64) -> Result<Vec<UnitTangentSample>> {
    let parts: Result<Vec<Vec<UnitTangentSample>>> = chunks(n, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| {
            let mut rng = stream_rng(seed, i as u64);
            (0..k)
                .map(|_| {
                    let p = mu.sample(&mut rng)?;
                    Ok(lift_with(&mut rng, p))
                })
                .collect()
        })
        .collect();
    Ok(parts?.concat())
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftAudit {
    pub samples: usize,
    pub angle_chi2: ChiSquare,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

/// Directions against 12 equal angular bins and the `x` marginal of the footpoints
/// against the quadrature CDF of `mu`.
pub fn lift_audit(mu: &TorusDensity, lift: &[UnitTangentSample]) -> LiftAudit {
    let mut bins = [0.0; 12];
    for s in lift {
        bins[((s.theta / TAU * 12.0) as usize).min(11)] += 1.0;
    }
    let n = lift.len();
    let angle_chi2 = chi_square(&bins, &[n as f64 / 12.0; 12]);
    let m = 4096;
    let cdf = mu.x_cdf(m);
    let mut xs: Vec<f64> = lift.iter().map(|s| s.x).collect();
    xs.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let pos = x * m as f64;
        let k = (pos as usize).min(m - 1);
        let f = cdf[k] + (cdf[k + 1] - cdf[k]) * (pos - k as f64);
        d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
    }
    LiftAudit { samples: n, angle_chi2, ks_statistic: d, ks_pvalue: kolmogorov_sf(d * (n as f64).sqrt()) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bins {
    pub k: usize,
    pub m: usize,
}

impl Bins {
    pub const DEFAULT: Bins = Bins { k: 4, m: 8 };

    fn len(&self) -> usize {
        self.k * self.k * self.m
    }

    fn index(&self, s: &UnitTangentSample) -> usize {
        let c = |v: f64, n: usize| ((v * n as f64) as usize).min(n - 1);
        (c(s.x, self.k) * self.k + c(s.y, self.k)) * self.m + c(s.theta / TAU, self.m)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceDefect {
    pub t: f64,
    pub bins: Bins,
    pub samples: usize,
    /// Binned total variation between the lift and its push-forward.
    pub defect: f64,
    pub sigma: f64,
    /// Largest `|in − out| / √(in + out)` over the bins.
    pub max_bin_z: f64,
}

/// Binned TV between the law of the lift and its `g_t` push-forward, both
/// estimated from the same samples.
pub fn invariance_defect(mu: &TorusDensity, t: f64, bins: Bins, n: usize, seed: u64) -> Result<InvarianceDefect> {
    if n < 100_000 {
        return Err(Error::Precondition(format!("invariance_defect needs at least 1e5 samples, got {n}")));
    }
    if bins.k == 0 || bins.m == 0 {
        return Err(Error::Precondition("empty bin partition".into()));
    }
    let lift = uniform_lift(mu, n, seed)?;
    Ok(defect_of(&lift, t, bins))
}

pub fn defect_of(lift: &[UnitTangentSample], t: f64, bins: Bins) -> InvarianceDefect {
    let mut inflow = vec![0u64; bins.len()];
    let mut outflow = vec![0u64; bins.len()];
    for s in lift {
        let (a, b) = (bins.index(s), bins.index(&flow(s, t)));
        if a != b {
            outflow[a] += 1;
            inflow[b] += 1;
        }
    }
    let n = lift.len() as f64;
    let (mut abs, mut var, mut max_z) = (0.0, 0.0, 0.0f64);
    for (i, o) in inflow.iter().zip(&outflow) {
        let d = (*i as f64 - *o as f64).abs();
        let v = (*i + *o) as f64;
        abs += d;
        var += v;
        if v > 0.0 {
            max_z = max_z.max(d / v.sqrt());
        }
    }
    InvarianceDefect { t, bins, samples: lift.len(), defect: 0.5 * abs / n, sigma: 0.5 * var.sqrt() / n, max_bin_z: max_z }
}

/// Binned TV between the lift and its push-forward by midpoint quadrature with
/// `r` nodes per bin side, using the push-forward density `f(p − t e_θ)`.
pub fn defect_quadrature(mu: &TorusDensity, t: f64, bins: Bins, r: usize) -> f64 {
    let (nx, nt) = (bins.k * r, bins.m * r);
    let hx = 1.0 / nx as f64;
    let ht = TAU / nt as f64;
    let pts: Vec<(f64, f64)> = (0..nx * nx)
        .map(|c| (((c / nx) as f64 + 0.5) * hx, ((c % nx) as f64 + 0.5) * hx))
        .collect();
    let spatial = |c: usize| (c / nx / r) * bins.k + (c % nx) / r;
    let mut pre = vec![0.0; bins.k * bins.k];
    for (c, &(x, y)) in pts.iter().enumerate() {
        pre[spatial(c)] += mu.eval(x, y) * hx * hx;
    }
    let post: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|a| {
            let th = (a as f64 + 0.5) * ht;
            let (dx, dy) = (t * th.cos(), t * th.sin());
            let mut acc = vec![0.0; bins.k * bins.k];
            for (c, &(x, y)) in pts.iter().enumerate() {
                acc[spatial(c)] += mu.eval(x - dx, y - dy) * hx * hx;
            }
            acc
        })
        .collect();
    let mut tv = 0.0;
    for l in 0..bins.m {
        for s in 0..bins.k * bins.k {
            let q: f64 = (l * r..(l + 1) * r).map(|a| post[a][s]).sum::<f64>() * ht / TAU;
            tv += (pre[s] / bins.m as f64 - q).abs();
        }
    }
    0.5 * tv
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectBound {
    pub quadrature: f64,
    pub quadrature_error: f64,
    /// Quadrature value less its resolution error and four sampling sigmas.
    pub lower_bound: f64,
    pub estimate: InvarianceDefect,
    pub exceeds: bool,
}

pub fn defect_lower_bound(mu: &TorusDensity, t: f64, bins: Bins, n: usize, seed: u64) -> Result<DefectBound> {
    let estimate = invariance_defect(mu, t, bins, n, seed)?;
    let (q1, q2) = (defect_quadrature(mu, t, bins, 8), defect_quadrature(mu, t, bins, 16));
    let err = (q2 - q1).abs();
    let lower = q2 - err - 4.0 * estimate.sigma;
    Ok(DefectBound { quadrature: q2, quadrature_error: err, lower_bound: lower, exceeds: estimate.defect > lower, estimate })
}

// ---------------------------------------------------------------- d = 1

/// Probability measure on rooted connected 1-manifolds: circles of diameter `x`
/// (circumference `2x`) and the line (`x = ∞`).
#[derive(Clone, Debug, Serialize)]
pub struct OneManifoldMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl OneManifoldMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Precondition("empty measure".into()));
        }
        let mut total = 0.0;
        for &(x, w) in &atoms {
            if !(x > 0.0) || !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Precondition(format!("bad atom (diameter {x}, weight {w})")));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("weights sum to {total}")));
        }
        Ok(OneManifoldMeasure { atoms })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct M1Sides {
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    pub h: f64,
}

/// Adaptive Simpson on `[a, b]`.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Both sides of the transport identity for `ν` and a kernel `f(x, y)` of the
/// diameter and the distance between the roots. The left side integrates `f`
/// against twice Lebesgue measure on `[0, x]`; the right side sums `f` over
/// ordered pairs of a grid of spacing about `h` on each circle (and on the
/// line, where `f(∞, ·)` must vanish beyond `support`).
pub fn m1_mtp_sides<F>(nu: &OneManifoldMeasure, f: F, support: Option<f64>, h: f64) -> Result<M1Sides>
where
    F: Fn(f64, f64) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Precondition("h must be positive".into()));
    }
    let (mut left, mut right) = (0.0, 0.0);
    for &(x, w) in &nu.atoms {
        let (l, r) = if x.is_finite() {
            let l = simpson(&|y| 2.0 * f(x, y), 0.0, x, 1e-13);
            let n = ((2.0 * x / h).round() as usize).max(2);
            let s = 2.0 * x / n as f64;
            // every root is equivalent, so the ordered-pair average is the sum from one root
            let r: f64 = (0..n).map(|k| f(x, k.min(n - k) as f64 * s)).sum::<f64>() * s;
            (l, r)
        } else {
            let y = support.ok_or_else(|| Error::Precondition("line atom needs a kernel of bounded support".into()))?;
            let l = simpson(&|v| 2.0 * f(x, v), 0.0, y, 1e-13);
            let k = (y / h).ceil() as i64 + 1;
            let r: f64 = (-k..=k).map(|j| f(x, j.unsigned_abs() as f64 * h)).sum::<f64>() * h;
            (l, r)
        };
        left += w * l;
        right += w * r;
    }
    Ok(M1Sides { left, right, gap: (left - right).abs(), h })
}

/// Log–log slopes of `gap(h)` between consecutive resolutions.
pub fn gap_slopes(rows: &[M1Sides]) -> Vec<f64> {
    rows.windows(2).map(|w| (w[0].gap / w[1].gap).ln() / (w[0].h / w[1].h).ln()).collect()
}

/// The standard point-mass stand-in: all footpoints at one point of the torus.
pub fn point_mass_lift(p: (f64, f64), n: usize, seed: u64) -> Vec<UnitTangentSample> {
    chunks(n, STREAMS)
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| {
            let mut rng = stream_rng(seed, i as u64);
            (0..k).map(|_| lift_with(&mut rng, p)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn density_normalizes() {
        let mu = TorusDensity::parse("1+0.5*cos(2*pi*x)").unwrap();
        let h = 1.0 / 300.0;
        let mut s = 0.0;
        for i in 0..300 {
            for j in 0..300 {
                s += mu.eval((i as f64 + 0.5) * h, (j as f64 + 0.5) * h) * h * h;
            }
        }
        assert!((s - 1.0).abs() < 1e-6);
        assert!(TorusDensity::parse("cos(2*pi*x)").is_err());
        assert!(TorusDensity::parse("0").is_err());
        assert!(matches!(TorusDensity::parse("1+"), Err(Error::Expr(_))));
    }

    #[test]
    fn flow_laws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = UnitTangentSample::new(rng.random(), rng.random(), rng.random::<f64>() * TAU).unwrap();
            assert_eq!(flow(&s, 0.0), s);
            let a = flow(&flow(&s, 0.7), 0.3);
            let b = flow(&s, 1.0);
            assert!(circle_gap(a.x, b.x) < 1e-12 && circle_gap(a.y, b.y) < 1e-12);
            assert_eq!(a.theta, s.theta);
            assert!((0.0..1.0).contains(&a.x) && (0.0..1.0).contains(&a.y));
        }
        let s = UnitTangentSample::new(0.25, 0.6, 0.0).unwrap();
        let w = flow(&s, 1.0);
        assert!(circle_gap(w.x, 0.25) < 1e-15 && w.y == 0.6);
        assert!(UnitTangentSample::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn lift_marginals() {
        let mu = TorusDensity::parse("1+0.5*cos(2*pi*x)").unwrap();
        let lift = uniform_lift(&mu, 100_000, 5).unwrap();
        let a = lift_audit(&mu, &lift);
        assert!(a.angle_chi2.p_value > 1e-3, "{a:?}");
        assert!(a.ks_pvalue > 1e-3, "{a:?}");
        // a wrong marginal is detected
        let uni = lift_audit(&TorusDensity::uniform(), &lift);
        assert!(uni.ks_pvalue < 1e-6);
        let pm = point_mass_lift((0.3, 0.4), 100_000, 6);
        let chi = lift_audit(&TorusDensity::uniform(), &pm).angle_chi2;
        assert!(chi.p_value > 1e-3, "{chi:?}");
        assert_eq!(uniform_lift(&mu, 1000, 9).unwrap(), uniform_lift(&mu, 1000, 9).unwrap());
    }

    #[test]
    fn quadrature_defect_vanishes_for_uniform_and_full_wraps() {
        let uni = TorusDensity::uniform();
        assert!(defect_quadrature(&uni, 0.37, Bins::DEFAULT, 8) < 1e-12);
        // an x-only density is invariant under the axis direction θ = 0 at t = 1,
        // but oblique directions still move mass
        let mu = TorusDensity::parse("1+0.5*cos(2*pi*x)").unwrap();
        let s = UnitTangentSample::new(0.1, 0.2, 0.0).unwrap();
        assert!((mu.eval(flow(&s, 1.0).x, 0.2) - mu.eval(0.1, 0.2)).abs() < 1e-12);
        assert!(defect_quadrature(&mu, 1.0, Bins::DEFAULT, 16) > 0.01);
    }

    #[test]
    fn perturbed_density_defect_exceeds_quadrature_bound() {
        let mu = TorusDensity::parse("1+0.5*cos(2*pi*x)").unwrap();
        for t in [0.37, 1.0] {
            let b = defect_lower_bound(&mu, t, Bins::DEFAULT, 200_000, 3).unwrap();
            assert!(b.lower_bound > 0.0 && b.exceeds, "{b:?}");
        }
        let u = defect_lower_bound(&TorusDensity::uniform(), 0.37, Bins::DEFAULT, 200_000, 3).unwrap();
        assert!(u.estimate.max_bin_z < 4.0 && u.lower_bound < 0.0, "{u:?}");
    }

    #[test]
    fn one_manifold_examples() {
        let circle = OneManifoldMeasure::new(vec![(1.0, 1.0)]).unwrap();
        let ind = |_: f64, y: f64| if y <= 0.5 { 1.0 } else { 0.0 };
        let s = m1_mtp_sides(&circle, ind, None, 1e-3).unwrap();
        assert!((s.left - 1.0).abs() < 1e-12);
        assert!(s.gap <= 1e-3 + 1e-12);
        for x in [0.3, 1.0, 2.5] {
            let nu = OneManifoldMeasure::new(vec![(x, 1.0)]).unwrap();
            let s = m1_mtp_sides(&nu, |_, _| 1.0, None, 1e-2).unwrap();
            assert!((s.left - 2.0 * x).abs() < 1e-12 && (s.right - 2.0 * x).abs() < 1e-9);
        }
        // linearity in ν
        let k = |x: f64, y: f64| (-y).exp() * x.min(3.0);
        let a = OneManifoldMeasure::new(vec![(0.7, 1.0)]).unwrap();
        let b = OneManifoldMeasure::new(vec![(f64::INFINITY, 1.0)]).unwrap();
        let ab = OneManifoldMeasure::new(vec![(0.7, 0.25), (f64::INFINITY, 0.75)]).unwrap();
        let kb = |x: f64, y: f64| if y > 40.0 { 0.0 } else { k(x, y) };
        let (sa, sb, sab) = (
            m1_mtp_sides(&a, kb, Some(40.0), 1e-3).unwrap(),
            m1_mtp_sides(&b, kb, Some(40.0), 1e-3).unwrap(),
            m1_mtp_sides(&ab, kb, Some(40.0), 1e-3).unwrap(),
        );
        assert!((sab.left - 0.25 * sa.left - 0.75 * sb.left).abs() < 1e-12);
        assert!((sab.right - 0.25 * sa.right - 0.75 * sb.right).abs() < 1e-12);
        assert!((sb.left - 6.0).abs() < 1e-9);
        assert!(m1_mtp_sides(&b, kb, None, 1e-3).is_err());
        assert!(OneManifoldMeasure::new(vec![(1.0, 0.5)]).is_err());
    }

    #[test]
    fn gap_is_first_order() {
        let nu = OneManifoldMeasure::new(vec![(1.0, 1.0)]).unwrap();
        let ind = |_: f64, y: f64| if y <= 0.5 { 1.0 } else { 0.0 };
        let rows: Vec<M1Sides> = [1e-2, 1e-3, 1e-4].iter().map(|&h| m1_mtp_sides(&nu, ind, None, h).unwrap()).collect();
        for s in gap_slopes(&rows) {
            assert!((s - 1.0).abs() < 0.1, "{rows:?}");
        }
    }
}
