//! Constant-curvature model computations: divergence of geodesics, thin parts
//! of hyperbolic surfaces, the volume-pushing map and circumcenters.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::stream_rng;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub eps0: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, eps: f64, eps0: f64) -> Result<Self> {
        if !(b > 0.0 && a >= b && a.is_finite()) {
            return Err(Error::Malformed(format!("need a >= b > 0, got a={a}, b={b}")));
        }
        if !(eps > 0.0 && eps <= eps0 && eps0.is_finite()) {
            return Err(Error::Malformed(format!("need 0 < eps <= eps0, got {eps}, {eps0}")));
        }
        Ok(ModelParams { a, b, eps, eps0 })
    }
}

// ---------------------------------------------------------------- comparison

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonMode {
    /// Two geodesics leaving a point at angle `θ`.
    Angle,
    /// Two geodesics leaving a third one orthogonally, `d₀` apart, on the same side.
    Orthogonal,
    /// Two geodesics from a common ideal point starting on one horosphere, `d₀` apart.
    Horospherical,
}

impl ComparisonMode {
    pub const ALL: [ComparisonMode; 3] = [ComparisonMode::Angle, ComparisonMode::Orthogonal, ComparisonMode::Horospherical];

    pub fn name(self) -> &'static str {
        match self {
            ComparisonMode::Angle => "angle",
            ComparisonMode::Orthogonal => "orthogonal",
            ComparisonMode::Horospherical => "horospherical",
        }
    }
}

/// Distance at time `t` in curvature `−a²`.
///
/// All three cases reduce to `sinh(a d / 2) = k · sinh(x)`: angle with
/// `k = sinh(at)`, `x = θ/2` (sine instead of sinh), orthogonal with `k = cosh(at)`,
/// horospherical with `k = e^{at}`.
pub fn divergence_exact(mode: ComparisonMode, param: f64, t: f64, a: f64) -> f64 {
    let s = match mode {
        ComparisonMode::Angle => (a * t).sinh() * (param / 2.0).sin(),
        ComparisonMode::Orthogonal => (a * t).cosh() * (a * param / 2.0).sinh(),
        ComparisonMode::Horospherical => (a * t).exp() * (a * param / 2.0).sinh(),
    };
    2.0 * s.asinh() / a
}

pub fn divergence_bound(mode: ComparisonMode, param: f64, t: f64, a: f64) -> f64 {
    match mode {
        ComparisonMode::Angle => param * (a * t).sinh() / a,
        ComparisonMode::Orthogonal => param * (a * t).cosh(),
        ComparisonMode::Horospherical => param * (a * t).exp(),
    }
}

/// Geodesic of the upper half plane with metric `(dx² + dy²) / (a² y²)`, stored
/// as `(x, ln y, heading)`; unit speed means Euclidean speed `a·y`.
#[derive(Clone, Copy, Debug)]
struct Flow {
    x: f64,
    u: f64,
    psi: f64,
}

impl Flow {
    fn deriv(&self, a: f64) -> [f64; 3] {
        let y = self.u.exp();
        [a * y * self.psi.cos(), a * self.psi.sin(), -a * self.psi.cos()]
    }

    fn rk4(&mut self, a: f64, h: f64) {
        let add = |f: &Flow, k: [f64; 3], s: f64| Flow {
            x: f.x + s * k[0],
            u: f.u + s * k[1],
            psi: f.psi + s * k[2],
        };
        let k1 = self.deriv(a);
        let k2 = add(self, k1, h / 2.0).deriv(a);
        let k3 = add(self, k2, h / 2.0).deriv(a);
        let k4 = add(self, k3, h).deriv(a);
        self.x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        self.u += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        self.psi += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    }

    fn dist(&self, o: &Flow, a: f64) -> f64 {
        let (y1, y2) = (self.u.exp(), o.u.exp());
        let e = ((self.x - o.x).powi(2) + (y1 - y2).powi(2)).sqrt();
        2.0 * (e / (2.0 * (y1 * y2).sqrt())).asinh() / a
    }
}

fn initial_pair(mode: ComparisonMode, param: f64, a: f64) -> (Flow, Flow) {
    match mode {
        ComparisonMode::Angle => (
            Flow { x: 0.0, u: 0.0, psi: PI / 2.0 },
            Flow { x: 0.0, u: 0.0, psi: PI / 2.0 - param },
        ),
        // both leave the imaginary axis horizontally, a·d₀ apart in log-height
        ComparisonMode::Orthogonal => (
            Flow { x: 0.0, u: 0.0, psi: 0.0 },
            Flow { x: 0.0, u: a * param, psi: 0.0 },
        ),
        // horosphere y = 1 about ∞, moving straight down
        ComparisonMode::Horospherical => (
            Flow { x: 0.0, u: 0.0, psi: -PI / 2.0 },
            Flow { x: 2.0 * (a * param / 2.0).sinh(), u: 0.0, psi: -PI / 2.0 },
        ),
    }
}

/// Distances at the requested increasing times by integrating both geodesics.
pub fn divergence_ode(mode: ComparisonMode, param: f64, times: &[f64], a: f64, h: f64) -> Vec<f64> {
    let (mut p, mut q) = initial_pair(mode, param, a);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = ((t - now) / h).ceil().max(0.0) as usize;
        if steps > 0 {
            let dt = (t - now) / steps as f64;
            for _ in 0..steps {
                p.rk4(a, dt);
                q.rk4(a, dt);
            }
        }
        now = t;
        out.push(p.dist(&q, a));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonCell {
    pub mode: ComparisonMode,
    pub param: f64,
    pub t: f64,
    pub a: f64,
    pub exact: f64,
    pub bound: f64,
    pub ode: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub mode: ComparisonMode,
    pub cells: usize,
    pub violations: usize,
    pub max_ode_error: f64,
    /// Largest `exact / bound` over cells with a positive bound.
    pub max_ratio: f64,
    pub worst: Option<ComparisonCell>,
}

/// Every `(param, t, a)` cell of the grid: exact value against the bound and the
/// integrated geodesics.
pub fn comparison_audit(mode: ComparisonMode, params: &[f64], times: &[f64], curvatures: &[f64]) -> ComparisonReport {
    let cells: Vec<ComparisonCell> = curvatures
        .iter()
        .flat_map(|&a| params.iter().map(move |&p| (a, p)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(a, p)| {
            let ode = divergence_ode(mode, p, times, a, 2e-3 / a);
            times
                .iter()
                .zip(ode)
                .map(move |(&t, o)| ComparisonCell {
                    mode,
                    param: p,
                    t,
                    a,
                    exact: divergence_exact(mode, p, t, a),
                    bound: divergence_bound(mode, p, t, a),
                    ode: o,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut rep = ComparisonReport {
        mode,
        cells: cells.len(),
        violations: 0,
        max_ode_error: 0.0,
        max_ratio: 0.0,
        worst: None,
    };
    for c in cells {
        rep.max_ode_error = rep.max_ode_error.max((c.exact - c.ode).abs());
        // relative slack for rounding in the closed forms
        let bad = c.exact > c.bound * (1.0 + 1e-12) + 1e-15;
        if c.bound > 0.0 {
            rep.max_ratio = rep.max_ratio.max(c.exact / c.bound);
        }
        if bad {
            rep.violations += 1;
            if rep.worst.is_none() {
                rep.worst = Some(c);
            }
        }
    }
    rep
}

/// `δ` such that geodesics within `δ` on `[0,1]` stay within `ε` on `[0,T]`.
///
/// For `T > 1` the triangle through `α(0), α(1), β(1)` has angle at most
/// `arcsin δ` at `α(0)`, and similarly at `β(1)`; spreading both angles gives
/// `d(α(t),β(t)) ≤ δ + arcsin(δ)(sinh(aT) + sinh(a(T−1)))/a`.
pub fn fellow_travel_delta(eps: f64, t_max: f64, a: f64) -> Result<f64> {
    if !(eps > 0.0 && t_max > 0.0 && a > 0.0) {
        return Err(Error::Precondition("eps, T and a must be positive".into()));
    }
    if t_max <= 1.0 {
        return Ok(eps);
    }
    let spread = ((a * t_max).sinh() + (a * (t_max - 1.0)).sinh()) / a;
    let g = |d: f64| d + d.asin() * spread;
    let (mut lo, mut hi) = (0.0, eps.min(0.5));
    if g(hi) <= eps {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Points of the hyperboloid `−x₀² + x₁² + x₂² = −1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyp(pub [f64; 3]);

pub fn mink(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    -p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
}

impl Hyp {
    pub fn origin() -> Hyp {
        Hyp([1.0, 0.0, 0.0])
    }

    /// Curvature −1 distance, stable for nearby points.
    pub fn dist(&self, o: &Hyp) -> f64 {
        let d = [self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]];
        2.0 * (mink(&d, &d).max(0.0).sqrt() / 2.0).asinh()
    }

    /// Unit tangent vectors at this point in the directions `(cos θ, sin θ)`
    /// of an orthonormal frame.
    pub fn frame(&self) -> ([f64; 3], [f64; 3]) {
        let p = self.0;
        let e1 = normalize_tangent(&p, [p[1], 1.0 + p[1] * p[1] / (1.0 + p[0]), p[1] * p[2] / (1.0 + p[0])]);
        let mut e2 = [p[2], p[1] * p[2] / (1.0 + p[0]), 1.0 + p[2] * p[2] / (1.0 + p[0])];
        let c = mink(&e2, &e1);
        for i in 0..3 {
            e2[i] -= c * e1[i];
        }
        (e1, normalize_tangent(&p, e2))
    }

    pub fn exp(&self, v: &[f64; 3], s: f64) -> Hyp {
        let (c, sh) = (s.cosh(), s.sinh());
        let (x1, x2) = (c * self.0[1] + sh * v[1], c * self.0[2] + sh * v[2]);
        // recompute the time coordinate so rounding cannot leave the sheet
        Hyp([(1.0 + x1 * x1 + x2 * x2).sqrt(), x1, x2])
    }

    pub fn to_half_plane(&self) -> HyperbolicPoint {
        let y = 1.0 / (self.0[0] - self.0[1]);
        HyperbolicPoint { x: self.0[2] * y, y }
    }
}

fn normalize_tangent(p: &[f64; 3], mut v: [f64; 3]) -> [f64; 3] {
    let c = mink(&v, p);
    for i in 0..3 {
        v[i] += c * p[i];
    }
    let n = mink(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn tangent_dir(e: &([f64; 3], [f64; 3]), theta: f64) -> [f64; 3] {
    let (c, s) = (theta.cos(), theta.sin());
    [c * e.0[0] + s * e.1[0], c * e.0[1] + s * e.1[1], c * e.0[2] + s * e.1[2]]
}

/// Parallel transport of `v` at `p` along the geodesic to `q`.
fn transport(p: &Hyp, q: &Hyp, v: &[f64; 3]) -> [f64; 3] {
    let c = -mink(&p.0, &q.0);
    let f = mink(&q.0, v) / (1.0 + c);
    [
        v[0] - f * (p.0[0] + q.0[0]),
        v[1] - f * (p.0[1] + q.0[1]),
        v[2] - f * (p.0[2] + q.0[2]),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct FellowTravelReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `d(α(T), β(T)) / ε` seen.
    pub max_ratio: f64,
}

/// Random geodesic pairs within `δ` at times 0 and 1 (hence on `[0,1]` by
/// convexity), checked at `T` (hence on `[1,T]`).
pub fn fellow_travel_simulation(pairs: usize, seed: u64) -> FellowTravelReport {
    let res: Vec<(bool, f64)> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let a = [0.5, 1.0, 2.0][rng.random_range(0..3)];
            let eps = 0.01 + 0.5 * rng.random::<f64>();
            let t_max = 1.0 + 3.0 * rng.random::<f64>();
            let delta = fellow_travel_delta(eps, t_max, a).unwrap();
            loop {
                // work in curvature −1 with times scaled by a and distances by 1/a
                let p = Hyp::origin();
                let fp = p.frame();
                let v = tangent_dir(&fp, rng.random::<f64>() * 2.0 * PI);
                let off = tangent_dir(&fp, rng.random::<f64>() * 2.0 * PI);
                let q = p.exp(&off, a * delta * rng.random::<f64>());
                let vq = transport(&p, &q, &v);
                // tilt the transported direction by a small angle
                let tilt = (rng.random::<f64>() * 2.0 - 1.0) * 2.0 * delta;
                let w = rotate(&q, &vq, tilt);
                let d1 = p.exp(&v, a).dist(&q.exp(&w, a)) / a;
                if d1 > delta {
                    continue;
                }
                let dt = p.exp(&v, a * t_max).dist(&q.exp(&w, a * t_max)) / a;
                return (dt > eps * (1.0 + 1e-12), dt / eps);
            }
        })
        .collect();
    FellowTravelReport {
        pairs,
        violations: res.iter().filter(|r| r.0).count(),
        max_ratio: res.iter().map(|r| r.1).fold(0.0, f64::max),
    }
}

fn rotate(p: &Hyp, v: &[f64; 3], angle: f64) -> [f64; 3] {
    let e = p.frame();
    let (c1, c2) = (mink(v, &e.0), mink(v, &e.1));
    tangent_dir(&e, c2.atan2(c1) + angle)
}

// ---------------------------------------------------------------- surfaces

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub genus: u32,
    pub cusps: u32,
    #[serde(default)]
    pub short_geodesics: Vec<f64>,
    #[serde(default = "default_eps0")]
    pub epsilon0: f64,
}

fn default_eps0() -> f64 {
    0.2
}

impl SurfaceSpec {
    pub fn new(genus: u32, cusps: u32, short_geodesics: Vec<f64>, epsilon0: f64) -> Result<Self> {
        let s = SurfaceSpec {
            genus,
            cusps,
            short_geodesics,
            epsilon0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let chi = 2 * self.genus as i64 - 2 + self.cusps as i64;
        if chi <= 0 {
            return Err(Error::Malformed("surface is not hyperbolic: need 2g - 2 + c > 0".into()));
        }
        let max_curves = 3 * self.genus as i64 - 3 + self.cusps as i64;
        if self.short_geodesics.len() as i64 > max_curves {
            return Err(Error::Malformed(format!(
                "at most {max_curves} disjoint simple closed geodesics fit"
            )));
        }
        let cap = 2.0 * 1f64.asinh();
        if self.short_geodesics.iter().any(|&l| !(l > 0.0 && l < cap)) {
            return Err(Error::Malformed(format!("short geodesic lengths must lie in (0, {cap})")));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 < 1f64.asinh()) {
            return Err(Error::Malformed("epsilon0 must lie in (0, arcsinh 1)".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        2.0 * PI * (2.0 * self.genus as f64 - 2.0 + self.cusps as f64)
    }

    pub fn thrice_punctured_sphere() -> Self {
        SurfaceSpec::new(0, 3, vec![], 0.2).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThinPiece {
    Tube { length: f64, width: f64, area: f64 },
    Cusp { height: f64, area: f64 },
}

impl ThinPiece {
    pub fn area(&self) -> f64 {
        match *self {
            ThinPiece::Tube { area, .. } | ThinPiece::Cusp { area, .. } => area,
        }
    }
}

/// Half-width of the collar where `sinh(ℓ/2) cosh r < sinh ε`.
pub fn collar_width(length: f64, eps: f64) -> Option<f64> {
    let ratio = eps.sinh() / (length / 2.0).sinh();
    (ratio > 1.0).then(|| ratio.acosh())
}

/// Height above which a unit-translation cusp is `ε`-thin: `1/(2 sinh ε)`.
pub fn cusp_height(eps: f64) -> f64 {
    1.0 / (2.0 * eps.sinh())
}

pub fn thin_decomposition(s: &SurfaceSpec, eps: f64) -> Result<Vec<ThinPiece>> {
    s.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    if eps > s.epsilon0 {
        return Err(Error::Precondition(format!("eps {eps} exceeds epsilon0 {}", s.epsilon0)));
    }
    let mut out = Vec::new();
    for &l in &s.short_geodesics {
        if let Some(w) = collar_width(l, eps) {
            out.push(ThinPiece::Tube {
                length: l,
                width: w,
                area: 2.0 * l * w.sinh(),
            });
        }
    }
    for _ in 0..s.cusps {
        out.push(ThinPiece::Cusp {
            height: cusp_height(eps),
            area: 2.0 * eps.sinh(),
        });
    }
    Ok(out)
}

pub fn thin_area(s: &SurfaceSpec, eps: f64) -> Result<f64> {
    Ok(thin_decomposition(s, eps)?.iter().map(|p| p.area()).sum())
}

pub fn thin_fraction(s: &SurfaceSpec, eps: f64) -> Result<f64> {
    Ok(thin_area(s, eps)? / s.area())
}

/// Monte Carlo area of the `ε`-thin part of one tube, sampled in the annulus
/// `1 ≤ |z| < e^ℓ` of the upper half plane modulo `z ↦ e^ℓ z`.
pub fn tube_area_mc<R: Rng>(length: f64, eps: f64, n: usize, rng: &mut R) -> f64 {
    let el = length.exp();
    // thin iff sin φ ≥ s_min; sample |cot φ| ≤ 1.25 cot(asin s_min)
    let s_min = (el - 1.0) / (2.0 * el * ((2.0 * eps).cosh() - 1.0)).sqrt();
    if s_min >= 1.0 {
        return 0.0;
    }
    let cmax = 1.25 * (1.0 - s_min * s_min).sqrt() / s_min;
    let mut hits = 0usize;
    for _ in 0..n {
        let _log_rho = rng.random::<f64>() * length;
        let cot = (2.0 * rng.random::<f64>() - 1.0) * cmax;
        let sin2 = 1.0 / (1.0 + cot * cot);
        let cosh_d = 1.0 + (el - 1.0).powi(2) / (2.0 * el * sin2);
        if cosh_d.acosh() / 2.0 < eps {
            hits += 1;
        }
    }
    hits as f64 / n as f64 * length * 2.0 * cmax
}

/// Monte Carlo area of the `ε`-thin part of a cusp `z ↦ z + 1`, sampled over
/// `0 ≤ x < 1`, `y ≥ y₁` with `1/y` uniform.
pub fn cusp_area_mc<R: Rng>(eps: f64, n: usize, rng: &mut R) -> f64 {
    let y1 = 0.8 / (2.0 * eps.sinh());
    let mut hits = 0usize;
    for _ in 0..n {
        let _x = rng.random::<f64>();
        let y = 1.0 / (rng.random::<f64>() / y1);
        let cosh_d = 1.0 + 1.0 / (2.0 * y * y);
        if cosh_d.acosh() / 2.0 < eps {
            hits += 1;
        }
    }
    hits as f64 / n as f64 / y1
}

pub fn thin_area_mc(s: &SurfaceSpec, eps: f64, n: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 0);
    let tubes: f64 = s.short_geodesics.iter().map(|&l| tube_area_mc(l, eps, n, &mut rng)).sum();
    let cusps: f64 = (0..s.cusps).map(|_| cusp_area_mc(eps, n, &mut rng)).sum();
    tubes + cusps
}

pub fn random_surface<R: Rng>(rng: &mut R) -> SurfaceSpec {
    loop {
        let genus = rng.random_range(0..4u32);
        let cusps = rng.random_range(0..5u32);
        if 2 * genus as i64 - 2 + cusps as i64 <= 0 {
            continue;
        }
        let max_curves = (3 * genus as i64 - 3 + cusps as i64) as u32;
        let k = rng.random_range(0..=max_curves.min(3));
        let ls = (0..k).map(|_| 0.005 + 0.35 * rng.random::<f64>()).collect();
        return SurfaceSpec::new(genus, cusps, ls, 0.2).unwrap();
    }
}

/// Exact cusp leaf distance between the `ε`- and `ε₀`-thin boundaries.
pub fn leaf_distance_cusp(eps: f64, eps0: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= eps0) {
        return Err(Error::Precondition(format!("need 0 < eps <= eps0, got {eps}, {eps0}")));
    }
    Ok((eps0.sinh() / eps.sinh()).ln())
}

/// `(1/a) log(a ε₀ / ε)`.
pub fn leaf_distance_bound(eps: f64, eps0: f64, a: f64) -> f64 {
    (a * eps0 / eps).ln() / a
}

pub fn leaf_distance_tube(length: f64, eps: f64, eps0: f64) -> Option<f64> {
    Some(collar_width(length, eps0)? - collar_width(length, eps)?)
}

// ---------------------------------------------------------------- g_M

/// `t' = R_{ε₀} − 1 + e^{b(t − R_ε)}` for `t ≤ R_ε`.
pub fn gmap_profile(t: f64, r_eps: f64, r_eps0: f64, b: f64) -> Result<f64> {
    if t > r_eps {
        return Err(Error::Precondition(format!("t = {t} lies beyond R_eps = {r_eps}")));
    }
    Ok(r_eps0 - 1.0 + (b * (t - r_eps)).exp())
}

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LeafGeometry {
    /// Leaves leave the core geodesic of this length; `t` is the distance to it.
    Tube { length: f64 },
    /// `t = −ln(2y)`: leaves run down from the cusp and horocycle length is `e^t`.
    Cusp,
}

impl LeafGeometry {
    /// `(R_ε, R_{ε₀})` on the leaf parametrization.
    pub fn radii(&self, eps: f64, eps0: f64) -> Result<(f64, f64)> {
        match *self {
            LeafGeometry::Tube { length } => {
                let w = collar_width(length, eps)
                    .ok_or_else(|| Error::Precondition(format!("no eps-thin collar for length {length}")))?;
                Ok((w, collar_width(length, eps0).unwrap()))
            }
            LeafGeometry::Cusp => Ok(((2.0 * eps.sinh()).ln(), (2.0 * eps0.sinh()).ln())),
        }
    }

    /// Length growth of a unit orthogonal Jacobi field from `t` to `t'`.
    fn transverse(&self, t: f64, t2: f64) -> f64 {
        match self {
            LeafGeometry::Tube { .. } => t2.cosh() / t.cosh(),
            LeafGeometry::Cusp => (t2 - t).exp(),
        }
    }

    pub fn lowest_t(&self, r_eps: f64) -> f64 {
        match self {
            LeafGeometry::Tube { .. } => 0.0,
            LeafGeometry::Cusp => r_eps - 30.0,
        }
    }
}

/// `|det dg_M|` at leaf parameter `t` on a curvature −1 surface.
pub fn gmap_jacobian(geom: LeafGeometry, t: f64, eps: f64, eps0: f64, b: f64) -> Result<f64> {
    let (r, r0) = geom.radii(eps, eps0)?;
    let t2 = gmap_profile(t, r, r0, b)?;
    Ok(b * (b * (t - r)).exp() * geom.transverse(t, t2))
}

/// `D(ε) = e^{b((R_{ε₀} − R_ε) − 1)}`.
pub fn gmap_d(geom: LeafGeometry, eps: f64, eps0: f64, b: f64) -> Result<f64> {
    let (r, r0) = geom.radii(eps, eps0)?;
    Ok((b * ((r0 - r) - 1.0)).exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobianAudit {
    pub geometry: LeafGeometry,
    pub eps: f64,
    pub eps0: f64,
    pub d: f64,
    pub samples: usize,
    pub violations: usize,
    pub min_jacobian: f64,
    pub argmin_t: f64,
}

pub fn gmap_audit(geom: LeafGeometry, eps: f64, eps0: f64, samples: usize) -> Result<JacobianAudit> {
    let (r, _) = geom.radii(eps, eps0)?;
    let d = gmap_d(geom, eps, eps0, 1.0)?;
    let lo = geom.lowest_t(r);
    let mut rep = JacobianAudit {
        geometry: geom,
        eps,
        eps0,
        d,
        samples,
        violations: 0,
        min_jacobian: f64::INFINITY,
        argmin_t: lo,
    };
    for i in 0..samples {
        let t = (lo + (r - lo) * i as f64 / (samples - 1).max(1) as f64).min(r);
        let j = gmap_jacobian(geom, t, eps, eps0, 1.0)?;
        if j < rep.min_jacobian {
            rep.min_jacobian = j;
            rep.argmin_t = t;
        }
        if j < d {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------- thickbase

/// Area of a hyperbolic disk of radius `r`.
pub fn disk_area(r: f64) -> f64 {
    2.0 * PI * (r.cosh() - 1.0)
}

/// `V(1) / (D(ε) V(δ))` with the leaf distance bound `C(ε) = (1/a) log(aε₀/ε)`,
/// `D = e^{b(C − 1)}` and `δ = a ε₀ e^{−a}`, the choice making `C(δ) = 1`.
pub fn thickbase_bound(p: &ModelParams) -> f64 {
    let c = leaf_distance_bound(p.eps, p.eps0, p.a);
    let d = (p.b * (c - 1.0)).exp();
    let delta = p.a * p.eps0 * (-p.a).exp();
    disk_area(1.0) / (d * disk_area(delta))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThickbaseRow {
    pub eps: f64,
    pub thin_area: f64,
    pub fraction: f64,
    pub bound: f64,
    pub leaf_distance: Option<f64>,
    pub delta: f64,
}

/// Same chain with the surface's own leaf distances and the injectivity radius
/// one unit inside the `ε₀`-thin boundary.
pub fn thickbase_row(s: &SurfaceSpec, eps: f64) -> Result<ThickbaseRow> {
    let pieces = thin_decomposition(s, eps)?;
    let mut leaf: Option<f64> = None;
    let mut delta = s.epsilon0;
    let mut take = |c: f64, dl: f64| {
        leaf = Some(leaf.map_or(c, |v: f64| v.min(c)));
        delta = delta.min(dl);
    };
    for p in &pieces {
        match *p {
            ThinPiece::Cusp { .. } => {
                take(leaf_distance_cusp(eps, s.epsilon0)?, (s.epsilon0.sinh() / 1f64.exp()).asinh());
            }
            ThinPiece::Tube { length, .. } => {
                let w0 = collar_width(length, s.epsilon0).unwrap();
                let inj = ((length / 2.0).sinh() * (w0 - 1.0).max(0.0).cosh()).asinh();
                take(leaf_distance_tube(length, eps, s.epsilon0).unwrap(), inj);
            }
        }
    }
    let thin: f64 = pieces.iter().map(|p| p.area()).sum();
    let bound = match leaf {
        Some(c) => disk_area(1.0) / ((c - 1.0).exp() * disk_area(delta)),
        None => 0.0,
    };
    Ok(ThickbaseRow {
        eps,
        thin_area: thin,
        fraction: thin / s.area(),
        bound,
        leaf_distance: leaf,
        delta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThickbaseAudit {
    pub rows: Vec<ThickbaseRow>,
    pub violations: usize,
    pub bound_decreasing: bool,
}

pub fn thickbase_audit(s: &SurfaceSpec, eps: &[f64]) -> Result<ThickbaseAudit> {
    let rows = eps.iter().map(|&e| thickbase_row(s, e)).collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| r.fraction > r.bound).count();
    let mut sorted: Vec<&ThickbaseRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let bound_decreasing = sorted.windows(2).all(|w| w[0].bound <= w[1].bound);
    Ok(ThickbaseAudit {
        rows,
        violations,
        bound_decreasing,
    })
}

// ---------------------------------------------------------------- circumcenter

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPoint {
    pub x: f64,
    pub y: f64,
}

impl HyperbolicPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::Malformed(format!("({x}, {y}) is not in the upper half plane")));
        }
        Ok(HyperbolicPoint { x, y })
    }

    pub fn dist(&self, o: &HyperbolicPoint) -> f64 {
        let e = (self.x - o.x).hypot(self.y - o.y);
        2.0 * (e / (2.0 * (self.y * o.y).sqrt())).asinh()
    }

    pub fn to_hyp(&self) -> Hyp {
        let r2 = self.x * self.x + self.y * self.y;
        Hyp([(r2 + 1.0) / (2.0 * self.y), (r2 - 1.0) / (2.0 * self.y), self.x / self.y])
    }
}

fn radius(q: &Hyp, pts: &[Hyp]) -> f64 {
    let r = pts.iter().map(|a| q.dist(a)).fold(0.0, f64::max);
    if q.0.iter().all(|v| v.is_finite()) && q.0[0] > 0.0 {
        r
    } else {
        f64::INFINITY
    }
}

/// Unit tangent at `q` pointing to `a`.
fn toward(q: &Hyp, a: &Hyp) -> [f64; 3] {
    let c = mink(&q.0, &a.0);
    let v = [a.0[0] + c * q.0[0], a.0[1] + c * q.0[1], a.0[2] + c * q.0[2]];
    let n = mink(&v, &v).max(1e-300).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Minimum-norm point of the convex hull of planar vectors (Gilbert iterations).
fn min_norm_hull(vs: &[[f64; 2]]) -> [f64; 2] {
    let mut x = vs[0];
    for _ in 0..500 {
        let (s, _) = vs
            .iter()
            .map(|v| (*v, v[0] * x[0] + v[1] * x[1]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let d = [s[0] - x[0], s[1] - x[1]];
        let dd = d[0] * d[0] + d[1] * d[1];
        if dd < 1e-30 {
            break;
        }
        let lam = (-(x[0] * d[0] + x[1] * d[1]) / dd).clamp(0.0, 1.0);
        if lam <= 0.0 {
            break;
        }
        x = [x[0] + lam * d[0], x[1] + lam * d[1]];
    }
    x
}

/// Point equidistant from `a`, `b`, `c` (normal of their Minkowski plane), if any.
fn equidistant3(a: &Hyp, b: &Hyp, c: &Hyp) -> Option<Hyp> {
    let u = [b.0[0] - a.0[0], b.0[1] - a.0[1], b.0[2] - a.0[2]];
    let v = [c.0[0] - a.0[0], c.0[1] - a.0[1], c.0[2] - a.0[2]];
    let cr = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    // Minkowski normal: raise the first index
    let mut n = [-cr[0], cr[1], cr[2]];
    let q = mink(&n, &n);
    if q >= 0.0 {
        return None;
    }
    let s = (-q).sqrt() * if n[0] < 0.0 { -1.0 } else { 1.0 };
    for x in n.iter_mut() {
        *x /= s;
    }
    Some(Hyp(n))
}

fn midpoint(a: &Hyp, b: &Hyp) -> Hyp {
    let s = [a.0[0] + b.0[0], a.0[1] + b.0[1], a.0[2] + b.0[2]];
    let n = (-mink(&s, &s)).sqrt();
    Hyp([s[0] / n, s[1] / n, s[2] / n])
}

/// Minimizer of `q ↦ max_a d(q, a)`: ε-subgradient descent along geodesics with
/// Armijo steps, then an exact solve on the active set.
pub fn circumcenter(pts: &[HyperbolicPoint], tol: f64) -> Result<HyperbolicPoint> {
    if pts.is_empty() {
        return Err(Error::Precondition("circumcenter of an empty set".into()));
    }
    let hs: Vec<Hyp> = pts.iter().map(|p| p.to_hyp()).collect();
    if hs.len() == 1 {
        return Ok(pts[0]);
    }
    // start at the normalized Minkowski mean
    let mut s = [0.0; 3];
    for h in &hs {
        for i in 0..3 {
            s[i] += h.0[i];
        }
    }
    let n = (-mink(&s, &s)).sqrt();
    let mut q = Hyp([s[0] / n, s[1] / n, s[2] / n]);
    let mut f = radius(&q, &hs);
    let mut band = f.max(1e-3) * 0.1;
    for _ in 0..20_000 {
        let frame = q.frame();
        let grads: Vec<[f64; 2]> = hs
            .iter()
            .filter(|a| q.dist(a) >= f - band)
            .map(|a| {
                let u = toward(&q, a);
                [-mink(&u, &frame.0), -mink(&u, &frame.1)]
            })
            .collect();
        let g = min_norm_hull(&grads);
        let gn = g[0].hypot(g[1]);
        if gn < 1e-12 {
            if band < tol * 1e-3 {
                break;
            }
            band *= 0.5;
            continue;
        }
        let dir = tangent_dir(&frame, (-g[1]).atan2(-g[0]));
        let mut step = f.max(band);
        let mut moved = false;
        while step > 1e-16 {
            let q2 = q.exp(&dir, step);
            let f2 = radius(&q2, &hs);
            if f2 <= f - 1e-4 * step * gn {
                // progress at rounding level means the band is too wide
                moved = f - f2 > 1e-14;
                q = q2;
                f = f2;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            if band < tol * 1e-3 {
                break;
            }
            band *= 0.5;
        }
    }
    // exact candidates from near-active pairs and triples
    let active: Vec<usize> = (0..hs.len()).filter(|&i| q.dist(&hs[i]) >= f - 1e-3 * f.max(1.0)).collect();
    let mut best = (f, q);
    let mut consider = |c: Hyp| {
        let r = radius(&c, &hs);
        if r < best.0 {
            best = (r, c);
        }
    };
    for (i, &a) in active.iter().enumerate() {
        for (j, &b) in active.iter().enumerate().skip(i + 1) {
            consider(midpoint(&hs[a], &hs[b]));
            for &c in &active[j + 1..] {
                if let Some(c) = equidistant3(&hs[a], &hs[b], &hs[c]) {
                    consider(c);
                }
            }
        }
    }
    Ok(best.1.to_half_plane())
}

/// Independent oracle. In hyperboloid coordinates `(q₁, q₂)` the objective
/// `max_a cosh d(q, a) = max_a (a₀ √(1 + |q|²) − a₁q₁ − a₂q₂)` is convex, so a
/// coarse grid followed by the ellipsoid method finds its minimizer.
pub fn circumcenter_grid(pts: &[HyperbolicPoint]) -> HyperbolicPoint {
    let hs: Vec<Hyp> = pts.iter().map(|p| p.to_hyp()).collect();
    let eval = |q: [f64; 2]| {
        let r = (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt();
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, a) in hs.iter().enumerate() {
            let v = a.0[0] * r - a.0[1] * q[0] - a.0[2] * q[1];
            if v > best.0 {
                best = (v, i);
            }
        }
        (best.0, best.1, r)
    };
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for h in &hs {
        for k in 0..2 {
            lo[k] = lo[k].min(h.0[k + 1]);
            hi[k] = hi[k].max(h.0[k + 1]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-6);
    for k in 0..2 {
        lo[k] -= span;
        hi[k] += span;
    }
    let m = 60;
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..=m {
        for j in 0..=m {
            let q = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / m as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / m as f64,
            ];
            let v = eval(q).0;
            if v < best.0 {
                best = (v, q);
            }
        }
    }
    // ellipsoid {c + B u : |u| ≤ 1} containing the padded box, in factored form
    let mut c = best.1;
    let r = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let mut bm = [[r, 0.0], [0.0, r]];
    let (k1, k2) = (2.0 / 3f64.sqrt(), 2.0 / 3.0 - 2.0 / 3f64.sqrt());
    for _ in 0..4000 {
        let (v, i, rr) = eval(c);
        if v < best.0 {
            best = (v, c);
        }
        let a = &hs[i].0;
        let g = [a[0] * c[0] / rr - a[1], a[0] * c[1] / rr - a[2]];
        // ξ = Bᵀg / |Bᵀg|
        let bt = [bm[0][0] * g[0] + bm[1][0] * g[1], bm[0][1] * g[0] + bm[1][1] * g[1]];
        let nb = bt[0].hypot(bt[1]);
        if !(nb > 0.0) {
            break;
        }
        let xi = [bt[0] / nb, bt[1] / nb];
        let bxi = [bm[0][0] * xi[0] + bm[0][1] * xi[1], bm[1][0] * xi[0] + bm[1][1] * xi[1]];
        c = [c[0] - bxi[0] / 3.0, c[1] - bxi[1] / 3.0];
        for x in 0..2 {
            for y in 0..2 {
                bm[x][y] = k1 * bm[x][y] + k2 * bxi[x] * xi[y];
            }
        }
        let size = bm[0][0].abs() + bm[0][1].abs() + bm[1][0].abs() + bm[1][1].abs();
        if size < 1e-15 {
            break;
        }
    }
    let q = best.1;
    Hyp([(1.0 + q[0] * q[0] + q[1] * q[1]).sqrt(), q[0], q[1]]).to_half_plane()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    #[test]
    fn trivial_divergences() {
        for m in ComparisonMode::ALL {
            assert_eq!(divergence_exact(m, 0.0, 2.0, 1.0), 0.0);
        }
        for m in [ComparisonMode::Orthogonal, ComparisonMode::Horospherical] {
            assert!((divergence_exact(m, 0.7, 0.0, 1.3) - 0.7).abs() < 1e-15);
            assert!((divergence_bound(m, 0.7, 0.0, 1.3) - 0.7).abs() < 1e-15);
        }
        // law of cosines form
        let (t, th, a) = (1.3f64, 0.9f64, 0.7f64);
        let c = (a * t).cosh().powi(2) - (a * t).sinh().powi(2) * th.cos();
        assert!((divergence_exact(ComparisonMode::Angle, th, t, a) - c.acosh() / a).abs() < 1e-12);
    }

    #[test]
    fn comparison_grid_small() {
        let params = linspace(0.0, PI, 12);
        let times = linspace(0.0, 5.0, 10);
        for m in ComparisonMode::ALL {
            let p = if m == ComparisonMode::Angle { params.clone() } else { linspace(0.0, 2.0, 12) };
            let r = comparison_audit(m, &p, &times, &[0.5, 1.0, 2.0]);
            assert_eq!(r.violations, 0, "{m:?}");
            assert!(r.max_ode_error < 1e-6, "{m:?} {}", r.max_ode_error);
        }
    }

    #[test]
    fn angle_ratio_tends_to_one() {
        let r1 = divergence_exact(ComparisonMode::Angle, 1e-6, 2.0, 1.0) / divergence_bound(ComparisonMode::Angle, 1e-6, 2.0, 1.0);
        assert!((r1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fellow_travel_properties() {
        assert_eq!(fellow_travel_delta(0.3, 0.8, 1.0).unwrap(), 0.3);
        let d1 = fellow_travel_delta(0.3, 2.0, 1.0).unwrap();
        let d2 = fellow_travel_delta(0.3, 4.0, 1.0).unwrap();
        assert!(d2 < d1);
        assert!(fellow_travel_delta(0.4, 2.0, 1.0).unwrap() >= d1);
        assert!(fellow_travel_delta(0.0, 2.0, 1.0).is_err());
        // flat limit: the sharp Euclidean answer is ε / (2T − 1)
        let (eps, t) = (0.1, 3.0);
        let d = fellow_travel_delta(eps, t, 1e-6).unwrap();
        let flat = eps / (2.0 * t - 1.0);
        assert!(d <= flat && d > 0.5 * flat);
        let rep = fellow_travel_simulation(2000, 3);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn hyperboloid_frame_is_orthonormal() {
        let q = HyperbolicPoint { x: 0.3, y: 2.0 }.to_hyp();
        assert!((mink(&q.0, &q.0) + 1.0).abs() < 1e-12);
        let (e1, e2) = q.frame();
        assert!((mink(&e1, &e1) - 1.0).abs() < 1e-12);
        assert!((mink(&e2, &e2) - 1.0).abs() < 1e-12);
        assert!(mink(&e1, &e2).abs() < 1e-12);
        assert!(mink(&e1, &q.0).abs() < 1e-12);
        let p = q.to_half_plane();
        assert!((p.x - 0.3).abs() < 1e-12 && (p.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thrice_punctured_sphere() {
        let s = SurfaceSpec::thrice_punctured_sphere();
        let pieces = thin_decomposition(&s, 0.1).unwrap();
        assert_eq!(pieces.len(), 3);
        assert!((thin_area(&s, 0.1).unwrap() - 6.0 * 0.1f64.sinh()).abs() < 1e-14);
        assert!((s.area() - 2.0 * PI).abs() < 1e-15);
        assert!((thin_fraction(&s, 0.1).unwrap() - 6.0 * 0.1f64.sinh() / (2.0 * PI)).abs() < 1e-15);
        let mc = thin_area_mc(&s, 0.1, 200_000, 1);
        assert!((mc / thin_area(&s, 0.1).unwrap() - 1.0).abs() < 0.01);
        assert!(thin_decomposition(&s, 0.3).is_err());
    }

    #[test]
    fn collar_boundary_and_genus_two() {
        let s = SurfaceSpec::new(2, 0, vec![0.1], 0.2).unwrap();
        assert!(thin_decomposition(&s, 0.05).unwrap().is_empty());
        let s = SurfaceSpec::new(2, 0, vec![0.01], 0.2).unwrap();
        let p = thin_decomposition(&s, 0.2).unwrap();
        let w = (0.2f64.sinh() / 0.005f64.sinh()).acosh();
        assert_eq!(p, vec![ThinPiece::Tube { length: 0.01, width: w, area: 0.02 * w.sinh() }]);
        let mc = thin_area_mc(&s, 0.2, 200_000, 2);
        assert!((mc / p[0].area() - 1.0).abs() < 0.01, "{mc} {}", p[0].area());
        assert!(SurfaceSpec::new(0, 2, vec![], 0.2).is_err());
        assert!(SurfaceSpec::new(1, 1, vec![2.0], 0.2).is_err());
    }

    #[test]
    fn fraction_monotone_and_vanishing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = random_surface(&mut rng);
            let fr: Vec<f64> = linspace(0.0, 0.2, 20).iter().map(|&e| thin_fraction(&s, e).unwrap()).collect();
            assert!(fr.windows(2).all(|w| w[0] <= w[1]));
            assert!(thin_fraction(&s, 1e-9).unwrap() < 1e-6);
        }
        let s = SurfaceSpec::new(2, 0, vec![0.3], 0.2).unwrap();
        assert_eq!(thin_fraction(&s, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn leaf_distance_checks() {
        assert_eq!(leaf_distance_cusp(0.2, 0.2).unwrap(), 0.0);
        assert_eq!(leaf_distance_bound(0.2, 0.2, 1.0), 0.0);
        assert!(leaf_distance_cusp(0.2 / 1f64.exp(), 0.2).unwrap() >= 1.0);
        for i in 0..1000 {
            let e = 1e-4 + (0.2 - 1e-4) * i as f64 / 1000.0;
            assert!(leaf_distance_cusp(e, 0.2).unwrap() >= leaf_distance_bound(e, 0.2, 1.0));
        }
        assert!(leaf_distance_cusp(0.3, 0.2).is_err());
    }

    #[test]
    fn profile_and_cusp_jacobian() {
        assert!((gmap_profile(2.0, 2.0, 5.0, 1.0).unwrap() - 5.0).abs() < 1e-15);
        assert!(gmap_profile(2.1, 2.0, 5.0, 1.0).is_err());
        let rep = gmap_audit(LeafGeometry::Cusp, 0.05, 0.2, 2000).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_jacobian >= rep.d);
    }

    #[test]
    fn tube_jacobian_dips_below_d_near_core() {
        // cosh t' ≥ e^{t'} fails; near the core the Jacobian is about D/2
        let geom = LeafGeometry::Tube { length: 0.01 };
        let rep = gmap_audit(geom, 0.05, 0.2, 2000).unwrap();
        assert!(rep.violations > 0);
        assert!(rep.min_jacobian > 0.45 * rep.d && rep.min_jacobian < 0.6 * rep.d);
        let j_end = gmap_jacobian(geom, geom.radii(0.05, 0.2).unwrap().0, 0.05, 0.2, 1.0).unwrap();
        assert!(j_end >= rep.d);
    }

    #[test]
    fn thickbase() {
        let s = SurfaceSpec::thrice_punctured_sphere();
        let a = thickbase_audit(&s, &[0.2, 0.1, 0.05, 0.01]).unwrap();
        assert_eq!(a.violations, 0);
        assert!(a.bound_decreasing);
        let b = |e: f64| thickbase_bound(&ModelParams::new(1.0, 1.0, e, 0.2).unwrap());
        assert!(b(1e-6) < b(1e-3) && b(1e-3) < b(0.1));
        assert!(b(1e-12) < 1e-6);
        // δ = a ε₀ e^{−a} makes C(δ) = 1
        for a in [0.5, 1.0, 2.0] {
            let delta = a * 0.2 * (-a as f64).exp();
            assert!((leaf_distance_bound(delta, 0.2, a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circumcenter_examples() {
        let p = HyperbolicPoint::new(0.3, 1.7).unwrap();
        assert_eq!(circumcenter(&[p], 1e-9).unwrap(), p);
        let e = 1f64.exp();
        let c = circumcenter(&[HyperbolicPoint { x: 0.0, y: 1.0 }, HyperbolicPoint { x: 0.0, y: e }], 1e-9).unwrap();
        assert!(c.x.abs() < 1e-9 && (c.y - e.sqrt()).abs() < 1e-9);
        assert!(circumcenter(&[], 1e-9).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let pts: Vec<HyperbolicPoint> = (0..3)
                .map(|_| HyperbolicPoint {
                    x: rng.random::<f64>() * 4.0 - 2.0,
                    y: (rng.random::<f64>() * 3.0 - 1.5).exp(),
                })
                .collect();
            let c = circumcenter(&pts, 1e-7).unwrap();
            let g = circumcenter_grid(&pts);
            let f = |q: &HyperbolicPoint| pts.iter().map(|p| q.dist(p)).fold(0.0, f64::max);
            assert!(c.dist(&g) < 1e-6, "{c:?} {g:?} {} {} {pts:?}", f(&c), f(&g));
        }
    }
}
