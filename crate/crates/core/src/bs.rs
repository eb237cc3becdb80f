//! Ball statistics and the Benjamini–Schramm distance.

use std::collections::{BTreeMap, HashMap};

use num::{BigInt, BigRational, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BallCode, Graph, GeneratorRoot};
use crate::mass_transport::{Measure, Sampler};
use crate::util::{chunks, q, q_int, stream_rng, to_f64, wilson, Q, STREAMS};

/// A measure whose ball statistics can be computed exactly.
#[derive(Clone, Debug)]
pub enum ExactSource {
    Measure(Measure),
    Generator(GeneratorRoot),
    /// Finite graph with a uniformly random root, enumerated vertex by vertex.
    UniformRoot(Graph),
}

/// Distribution of the rooted `radius`-ball.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStats {
    pub radius: usize,
    pub freq: BTreeMap<BallCode, Q>,
}

pub fn ball_statistics(src: &ExactSource, r: usize) -> Result<ExactStats> {
    let mut freq: BTreeMap<BallCode, Q> = BTreeMap::new();
    match src {
        ExactSource::Measure(m) => {
            let total = m.total_mass();
            if total.is_zero() {
                return Err(Error::Precondition("zero measure has no ball statistics".into()));
            }
            for a in &m.atoms {
                let c = a.space.view(r)?.code();
                *freq.entry(c).or_insert_with(Q::zero) += &a.weight / &total;
            }
        }
        ExactSource::Generator(g) => {
            freq.insert(g.generator.ball(&g.handle, r)?.code(), q_int(1));
        }
        ExactSource::UniformRoot(g) => {
            if !g.is_connected() {
                return Err(Error::Disconnected);
            }
            let n = g.vertex_count();
            let codes: Vec<BallCode> = (0..n)
                .into_par_iter()
                .map(|v| g.ball(v, r).unwrap().code())
                .collect();
            for c in codes {
                *freq.entry(c).or_insert_with(Q::zero) += q(1, n as i64);
            }
        }
    }
    Ok(ExactStats { radius: r, freq })
}

/// Roots drawn by Monte Carlo with their ball codes at radii `1..=r_max`.
#[derive(Clone, Debug)]
pub struct McSample {
    pub r_max: usize,
    pub draws: Vec<usize>,
    codes: HashMap<usize, Vec<BallCode>>,
}

impl McSample {
    pub fn draw(s: &Sampler, r_max: usize, samples: usize, seed: u64) -> Result<McSample> {
        if samples == 0 {
            return Err(Error::Precondition("need at least one sample".into()));
        }
        let cum = s.cumulative();
        let draws: Vec<usize> = chunks(samples, STREAMS)
            .into_par_iter()
            .enumerate()
            .map(|(i, k)| {
                let mut rng = stream_rng(seed, i as u64);
                (0..k).map(|_| Sampler::draw(&cum, &mut rng)).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat();
        let mut distinct: Vec<usize> = draws.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let codes: HashMap<usize, Vec<BallCode>> = distinct
            .par_iter()
            .map(|&i| {
                let big = s.local(i, r_max)?;
                let cs = (1..=r_max).map(|r| big.ball(r).code()).collect();
                Ok((i, cs))
            })
            .collect::<Result<_>>()?;
        Ok(McSample {
            r_max,
            draws,
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn code(&self, sample: usize, r: usize) -> &BallCode {
        &self.codes[&self.draws[sample]][r - 1]
    }

    pub fn stats(&self, r: usize) -> McStats {
        let mut counts: BTreeMap<BallCode, u64> = BTreeMap::new();
        for i in 0..self.len() {
            *counts.entry(self.code(i, r).clone()).or_default() += 1;
        }
        McStats {
            radius: r,
            counts,
            samples: self.len() as u64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McStats {
    pub radius: usize,
    pub counts: BTreeMap<BallCode, u64>,
    pub samples: u64,
}

impl McStats {
    pub fn freq(&self, c: &BallCode) -> f64 {
        self.counts.get(c).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// Wilson interval at `z` for each observed code.
    pub fn intervals(&self, z: f64) -> BTreeMap<BallCode, (f64, f64)> {
        self.counts
            .iter()
            .map(|(c, &k)| (c.clone(), wilson(k, self.samples, z)))
            .collect()
    }
}

/// Total variation between two exact ball distributions.
pub fn tv_exact(a: &ExactStats, b: &ExactStats) -> Q {
    let mut s = Q::zero();
    for (c, p) in &a.freq {
        s += (p - b.freq.get(c).cloned().unwrap_or_else(Q::zero)).abs();
    }
    for (c, p) in &b.freq {
        if !a.freq.contains_key(c) {
            s += p;
        }
    }
    s / q_int(2)
}

/// Either side of a distance computation.
#[derive(Clone, Debug)]
pub enum Side {
    Exact(ExactSource),
    Mc(McSample),
}

#[derive(Clone, Debug)]
pub struct BsRow {
    pub radius: usize,
    pub tv: f64,
    pub tv_exact: Option<Q>,
    pub weight: Q,
    pub contribution: f64,
}

#[derive(Clone, Debug)]
pub struct BsDistance {
    pub rows: Vec<BsRow>,
    pub value: f64,
    pub exact: Option<Q>,
    /// Standard error when a Monte Carlo side is involved.
    pub sigma: Option<f64>,
}

/// `Σ_{R=1}^{r_max} 2^{-R} TV(stats_R(a), stats_R(b))`.
pub fn bs_distance(a: &Side, b: &Side, r_max: usize) -> Result<BsDistance> {
    if let Side::Mc(s) = a {
        if s.r_max < r_max {
            return Err(Error::Precondition("sample was drawn for a smaller radius".into()));
        }
    }
    if let Side::Mc(s) = b {
        if s.r_max < r_max {
            return Err(Error::Precondition("sample was drawn for a smaller radius".into()));
        }
    }
    let mut rows = Vec::new();
    let mut exact_total = Some(Q::zero());
    // per-radius signs for the delta-method variance
    let mut signs: Vec<BTreeMap<BallCode, f64>> = Vec::new();
    for r in 1..=r_max {
        let weight = BigRational::new(BigInt::from(1), BigInt::from(2).pow(r as u32));
        let da = dist_of(a, r)?;
        let db = dist_of(b, r)?;
        let (tv, tv_exact, sg) = match (&da, &db) {
            (Dist::Exact(x), Dist::Exact(y)) => {
                let t = tv_exact(x, y);
                (to_f64(&t), Some(t), BTreeMap::new())
            }
            _ => {
                let mut sg = BTreeMap::new();
                for c in da.keys().into_iter().chain(db.keys()) {
                    let d = da.p(&c) - db.p(&c);
                    sg.insert(c, d);
                }
                let tv = sg.values().map(|d| d.abs()).sum::<f64>() / 2.0;
                let sg = sg.into_iter().map(|(c, d)| (c, if d >= 0.0 { 1.0 } else { -1.0 })).collect();
                (tv, None, sg)
            }
        };
        signs.push(sg);
        exact_total = match (exact_total, &tv_exact) {
            (Some(t), Some(x)) => Some(t + &weight * x),
            _ => None,
        };
        let contribution = to_f64(&weight) * tv;
        rows.push(BsRow {
            radius: r,
            tv,
            tv_exact,
            weight,
            contribution,
        });
    }
    let value = match &exact_total {
        Some(t) => to_f64(t),
        None => rows.iter().map(|r| r.contribution).sum(),
    };
    let sigma = if exact_total.is_some() {
        None
    } else {
        let mut var = 0.0;
        for (side, sgn) in [(a, 1.0), (b, -1.0)] {
            if let Side::Mc(s) = side {
                var += side_variance(s, &signs, sgn);
            }
        }
        Some(var.sqrt())
    };
    Ok(BsDistance {
        rows,
        value,
        exact: exact_total,
        sigma,
    })
}

fn side_variance(s: &McSample, signs: &[BTreeMap<BallCode, f64>], sgn: f64) -> f64 {
    let n = s.len() as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..s.len() {
        let mut y = 0.0;
        for (k, sg) in signs.iter().enumerate() {
            let r = k + 1;
            let w = 0.5f64.powi(r as i32);
            y += w * 0.5 * sgn * sg.get(s.code(i, r)).copied().unwrap_or(0.0);
        }
        m1 += y;
        m2 += y * y;
    }
    let mean = m1 / n;
    ((m2 / n - mean * mean).max(0.0)) / n
}

enum Dist {
    Exact(ExactStats),
    Mc(McStats),
}

impl Dist {
    fn keys(&self) -> Vec<BallCode> {
        match self {
            Dist::Exact(e) => e.freq.keys().cloned().collect(),
            Dist::Mc(m) => m.counts.keys().cloned().collect(),
        }
    }

    fn p(&self, c: &BallCode) -> f64 {
        match self {
            Dist::Exact(e) => e.freq.get(c).map(to_f64).unwrap_or(0.0),
            Dist::Mc(m) => m.freq(c),
        }
    }
}

fn dist_of(s: &Side, r: usize) -> Result<Dist> {
    Ok(match s {
        Side::Exact(e) => Dist::Exact(ball_statistics(e, r)?),
        Side::Mc(m) => Dist::Mc(m.stats(r)),
    })
}

#[derive(Clone, Debug)]
pub struct DiagnosticRow {
    pub label: String,
    pub vertices: usize,
    pub distance: Q,
}

/// Exact distance of each finite graph (uniform root) to the candidate limit.
pub fn limit_diagnostic(
    family: &[(String, Graph)],
    candidate: &ExactSource,
    r_max: usize,
) -> Result<Vec<DiagnosticRow>> {
    family
        .par_iter()
        .map(|(label, g)| {
            let d = bs_distance(
                &Side::Exact(ExactSource::UniformRoot(g.clone())),
                &Side::Exact(candidate.clone()),
                r_max,
            )?;
            Ok(DiagnosticRow {
                label: label.clone(),
                vertices: g.vertex_count(),
                distance: d.exact.expect("both sides exact"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::graph::Generator;
    use crate::mass_transport::uniform_root_measure;

    fn line() -> Side {
        Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::IntegerLine)))
    }

    fn cyc(n: usize) -> Side {
        Side::Exact(ExactSource::UniformRoot(cycle(n)))
    }

    #[test]
    fn statistics_examples() {
        let s = ball_statistics(&ExactSource::UniformRoot(cycle(10)), 2).unwrap();
        assert_eq!(s.freq.len(), 1);
        assert_eq!(s.freq.keys().next().unwrap(), &path(5).rooted(2).unwrap().code());
        let s = ball_statistics(&ExactSource::UniformRoot(path(4)), 1).unwrap();
        assert_eq!(s.freq.values().cloned().collect::<Vec<_>>(), vec![q(1, 2), q(1, 2)]);
        let m = ball_statistics(&ExactSource::Measure(uniform_root_measure(&path(4)).unwrap()), 1).unwrap();
        assert_eq!(m, s);
    }

    #[test]
    fn distance_examples() {
        assert!(bs_distance(&cyc(10), &line(), 3).unwrap().exact.unwrap().is_zero());
        assert_eq!(bs_distance(&cyc(3), &line(), 2).unwrap().exact.unwrap(), q(3, 4));
        assert_eq!(bs_distance(&cyc(3), &line(), 3).unwrap().exact.unwrap(), q(7, 8));
        assert_eq!(bs_distance(&cyc(4), &line(), 3).unwrap().exact.unwrap(), q(3, 8));
        assert!(bs_distance(&cyc(5), &cyc(5), 3).unwrap().exact.unwrap().is_zero());
    }

    #[test]
    fn tori_converge_to_grid() {
        let fam: Vec<(String, Graph)> = [3, 6, 12].iter().map(|&n| (format!("T{n}"), torus(n))).collect();
        let grid = ExactSource::Generator(GeneratorRoot::at_origin(Generator::Grid2d));
        let rows = limit_diagnostic(&fam, &grid, 2).unwrap();
        assert!(rows[2].distance.is_zero());
        assert!(!rows[0].distance.is_zero());
    }

    #[test]
    fn mc_matches_exact_for_point_mass_limit() {
        let g = barbell(4);
        let s = McSample::draw(&Sampler::uniform_root(g.clone()).unwrap(), 3, 20_000, 5).unwrap();
        let grid = Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::Grid2d)));
        let mc = bs_distance(&Side::Mc(s), &grid, 3).unwrap();
        let ex = bs_distance(&Side::Exact(ExactSource::UniformRoot(g)), &grid, 3).unwrap();
        let sigma = mc.sigma.unwrap();
        assert!(sigma > 0.0);
        assert!((mc.value - ex.value).abs() <= 4.0 * sigma, "{} vs {}", mc.value, ex.value);
    }
}
