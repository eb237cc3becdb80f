//! The acceptance battery: eleven sections, each a list of checks.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bs::{bs_distance, ExactSource, McSample, Side};
use crate::chabauty::{distortion_audit, grid_oracle_gap, indicator_identity_audit, lemchab_audit, scaling_map};
use crate::error::Result;
use crate::flows::{defect_lower_bound, gap_slopes, invariance_defect, m1_mtp_sides, Bins, OneManifoldMeasure, TorusDensity};
use crate::geometry::{
    comparison_audit, fellow_travel_simulation, gmap_audit, leaf_distance_bound, leaf_distance_cusp, random_surface,
    thickbase_audit, thickbase_bound, thin_area, thin_area_mc, thin_fraction, ComparisonMode, LeafGeometry, ModelParams,
    SurfaceSpec,
};
use crate::graph::families::{barbell, complete, cycle, grid, path, random_connected, star};
use crate::graph::{Generator, GeneratorRoot, Graph, RootedGraph};
use crate::group::{symmetric, FiniteGroup};
use crate::mass_transport::{
    cover_measure, is_unimodular, laplacian_selfadjoint_gap, measure_frames, no_core_audit, sides_on_frames,
    uniform_root_measure, Atom, BallFunction, CoreMass, CoreValue, Measure, Sampler, Space, TransportKernel,
    VoltageGraph,
};
use crate::poisson::{desingularization_weight_exact, poisson_audit, WeightedSpace};
use crate::report::{num, Check, RunReport, Section};
use crate::sasaki::{
    bilipschitz_ratio, derivative_ratio_audit, halton, iterated, random_polynomial_metric, relationship_audit,
    sasaki_matrix, CoordinateMetric, Mat, RELATIONSHIP_TOL, STEP,
};
use crate::schreier::{catalog, irs_to_ursg, Irs};
use crate::util::{fmt_q, fnv64, q, q_int, stream_rng};

fn sub(seed: u64, tag: u64) -> u64 {
    fnv64(seed, &tag.to_le_bytes())
}

fn section(name: &str, body: Result<Vec<Check>>) -> Section {
    match body {
        Ok(checks) => Section::new(name, checks),
        Err(e) => Section::new(name, vec![Check::new("completed without error", false, e.to_string(), "no error")]),
    }
}

fn graph_json(g: &Graph) -> Value {
    json!({ "vertices": g.vertex_count(), "edges": g.edges() })
}

// ---------------------------------------------------------------- 1

pub fn mtp_exactness(seed: u64) -> Section {
    section("mtp exactness", mtp_exactness_checks(seed))
}

fn mtp_exactness_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(seed, 1);
    let graphs: Vec<Graph> = (0..50)
        .map(|_| {
            let n = rng.random_range(2..=12);
            random_connected(n, 0.25, &mut rng)
        })
        .collect();
    let kernels: Vec<(usize, u64)> = (0..20).map(|j| (1 + j % 3, sub(seed, 100 + j as u64))).collect();
    let per_graph: Vec<Vec<(usize, Value)>> = graphs
        .par_iter()
        .map(|g| {
            let mu = uniform_root_measure(g)?;
            let frames = (1..=3).map(|r| measure_frames(&mu, r)).collect::<Result<Vec<_>>>()?;
            let mut bad = Vec::new();
            for (j, &(r, s)) in kernels.iter().enumerate() {
                let sides = sides_on_frames(&mu, &frames[r - 1], &TransportKernel::hashed(r, s));
                if !sides.gap.is_zero() {
                    bad.push((j, json!({ "left": fmt_q(&sides.left), "right": fmt_q(&sides.right) })));
                }
            }
            Ok(bad)
        })
        .collect::<Result<_>>()?;
    let failures: usize = per_graph.iter().map(Vec::len).sum();
    let mut check = Check::new("rational gap is zero", failures == 0, json!({ "pairs": 50 * 20, "nonzero_gaps": failures }), "0 exactly")
        .details(json!({ "max_vertices": graphs.iter().map(Graph::vertex_count).max(), "kernel_ranges": [1, 2, 3] }));
    if let Some((i, (j, sides))) = per_graph.iter().enumerate().find_map(|(i, v)| v.first().map(|x| (i, x))) {
        let (r, s) = kernels[*j];
        check = check.certificate(json!({ "graph": graph_json(&graphs[i]), "kernel": { "hashed_range": r, "seed": s }, "sides": sides }));
    }
    Ok(vec![check])
}

// ---------------------------------------------------------------- 2 and 3

/// Covers of small voltage graphs and the push-forwards of every conjugacy-class
/// IRS of `S3`, `S4`, `D4` (plus the uniform mixture of all classes).
pub fn unimodular_corpus(seed: u64) -> Result<Vec<(String, Measure)>> {
    let mut out = Vec::new();
    let groups: Vec<(&str, FiniteGroup)> =
        vec![("Z2", FiniteGroup::cyclic(2)), ("Z3", FiniteGroup::cyclic(3)), ("S3", symmetric(3).0)];
    let bases: Vec<(&str, usize, Vec<(usize, usize)>)> = vec![
        ("triangle", 3, cycle(3).edges().to_vec()),
        ("square", 4, cycle(4).edges().to_vec()),
        ("K4", 4, complete(4).edges().to_vec()),
        ("theta", 2, vec![(0, 1), (0, 1), (0, 1)]),
        ("bouquet", 1, vec![(0, 0), (0, 0)]),
    ];
    let mut rng = stream_rng(seed, 2);
    for (bn, nv, edges) in &bases {
        for (gn, group) in &groups {
            for _ in 0..50 {
                let vg = VoltageGraph {
                    vertices: *nv,
                    edges: edges.iter().map(|&(u, v)| (u, v, rng.random_range(0..group.order()))).collect(),
                };
                if let Ok(m) = cover_measure(&vg, group) {
                    out.push((format!("cover {bn}/{gn} {:?}", vg.edges), m));
                    break;
                }
            }
        }
    }
    for ex in catalog::all() {
        let classes = ex.group.subgroup_classes();
        let mut mix = Vec::new();
        let k = classes.len() as i64;
        for (c, class) in classes.iter().enumerate() {
            let irs = Irs::conjugacy_class(ex.group.clone(), &class[0]);
            mix.extend(irs.atoms.iter().map(|(h, w)| (h.clone(), w * q(1, k))));
            out.push((format!("irs {} class {c} (order {})", ex.name, class[0].order()), irs_to_ursg(&irs, &ex.gens)?));
        }
        let irs = Irs { group: ex.group.clone(), atoms: mix };
        out.push((format!("irs {} uniform mixture of classes", ex.name), irs_to_ursg(&irs, &ex.gens)?));
    }
    Ok(out)
}

fn p3_center() -> Result<Measure> {
    Ok(Measure::point(Space::Finite(path(3).rooted(1)?)))
}

pub const CERTIFY_RADIUS: usize = 3;

pub fn unimodularity(seed: u64) -> Section {
    section("unimodularity certification", unimodularity_checks(seed))
}

fn unimodularity_checks(seed: u64) -> Result<Vec<Check>> {
    let corpus = unimodular_corpus(seed)?;
    let zero = q_int(0);
    let verdicts = corpus
        .par_iter()
        .map(|(_, m)| is_unimodular(m, CERTIFY_RADIUS, &zero))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for kind in ["cover", "irs"] {
        let idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus[i].0.starts_with(kind)).collect();
        let failed: Vec<usize> = idx.iter().copied().filter(|&i| !verdicts[i].pass).collect();
        let mut c = Check::new(
            format!("{kind} measures pass"),
            failed.is_empty() && !idx.is_empty(),
            json!({ "measures": idx.len(), "failed": failed.len() }),
            "every measure passes at gap 0",
        )
        .details(json!(idx.iter().map(|&i| json!({ "measure": corpus[i].0, "types": verdicts[i].types })).collect::<Vec<_>>()));
        if let Some(&i) = failed.first() {
            c = c.certificate(json!({ "measure": corpus[i].0, "max_gap": fmt_q(&verdicts[i].max_gap) }));
        }
        checks.push(c);
    }
    let v = is_unimodular(&p3_center()?, 1, &zero)?;
    let w = v.witness.as_ref();
    checks.push(
        Check::new("(P3, center) fails with gap 2", !v.pass && v.max_gap == q_int(2), json!(fmt_q(&v.max_gap)), "2 exactly")
            .details(json!({
                "verdict": if v.pass { "PASS" } else { "FAIL" },
                "witness": w.map(|w| json!({
                    "doubly_rooted_code": w.code.hex(),
                    "left": fmt_q(&w.left),
                    "right": fmt_q(&w.right),
                    "distance": w.example.distance(),
                })),
            })),
    );
    Ok(checks)
}

pub fn laplacian(seed: u64) -> Section {
    section("laplacian self-adjointness", laplacian_checks(seed))
}

fn laplacian_checks(seed: u64) -> Result<Vec<Check>> {
    let zero = q_int(0);
    let corpus: Vec<(String, Measure)> = unimodular_corpus(seed)?
        .into_par_iter()
        .map(|(l, m)| Ok((is_unimodular(&m, CERTIFY_RADIUS, &zero)?.pass, l, m)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|x| x.0)
        .map(|x| (x.1, x.2))
        .collect();
    let pairs: Vec<(BallFunction<f64>, BallFunction<f64>)> = (0..20)
        .map(|j| {
            (
                BallFunction::hashed(j % 3, sub(seed, 300 + 2 * j as u64)),
                BallFunction::hashed((j + 1) % 3, sub(seed, 301 + 2 * j as u64)),
            )
        })
        .collect();
    let gaps = corpus
        .par_iter()
        .map(|(_, m)| {
            let mut worst = (0.0f64, 0usize);
            for (j, (f, h)) in pairs.iter().enumerate() {
                let g = laplacian_selfadjoint_gap(m, f, h)?;
                if g > worst.0 {
                    worst = (g, j);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let (i, &(max, j)) = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("corpus is nonempty");
    let mut c = Check::new("max |E[F ΔH] - E[ΔF H]|", max <= 1e-12, num(max), 1e-12)
        .details(json!({ "measures": corpus.len(), "pairs_per_measure": pairs.len() }));
    if max > 1e-12 {
        c = c.certificate(json!({ "measure": corpus[i].0, "pair": j }));
    }
    Ok(vec![c])
}

// ---------------------------------------------------------------- 4

pub fn benjamini_schramm(seed: u64) -> Section {
    section("benjamini-schramm", benjamini_schramm_checks(seed))
}

fn line() -> Side {
    Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::IntegerLine)))
}

fn cycle_distance(n: usize) -> Result<crate::util::Q> {
    let d = bs_distance(&Side::Exact(ExactSource::UniformRoot(cycle(n))), &line(), 3)?;
    Ok(d.exact.expect("both sides exact"))
}

fn benjamini_schramm_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let large = [8usize, 9, 10, 12, 16, 32];
    let vals = large.iter().map(|&n| cycle_distance(n)).collect::<Result<Vec<_>>>()?;
    let nonzero: Vec<usize> = large.iter().zip(&vals).filter(|(_, v)| !v.is_zero()).map(|(n, _)| *n).collect();
    checks.push(Check::new("d(C_n, Z) = 0 for n >= 8", nonzero.is_empty(), json!({ "n": large, "nonzero_at": nonzero }), "0 exactly"));
    let small: Vec<Value> = (3..8).map(|n| Ok(json!({ "n": n, "distance": fmt_q(&cycle_distance(n)?) }))).collect::<Result<_>>()?;
    let d3 = cycle_distance(3)?;
    checks.push(
        Check::new("d(C_3, Z) = 3/4 at R_max = 3", d3 == q(3, 4), json!(fmt_q(&d3)), "3/4 exactly")
            .details(json!({ "small_cycles": small })),
    );
    let grid2d = Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(Generator::Grid2d)));
    let rows = [4usize, 8, 16]
        .par_iter()
        .map(|&n| {
            let s = McSample::draw(&Sampler::uniform_root(barbell(n))?, 3, 100_000, sub(seed, 400 + n as u64))?;
            let d = bs_distance(&Side::Mc(s), &grid2d, 3)?;
            Ok((n, d.value, d.sigma.unwrap_or(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<bool> = rows.windows(2).map(|w| w[0].1 - w[1].1 > 4.0 * w[0].2.hypot(w[1].2)).collect();
    checks.push(
        Check::new(
            "barbell distance to grid2d decreases",
            steps.iter().all(|&b| b),
            json!(rows.iter().map(|r| json!({ "n": r.0, "distance": r.1, "sigma": r.2 })).collect::<Vec<_>>()),
            "each step down exceeds 4 sigma",
        )
        .details(json!({ "samples": 100_000, "r_max": 3 })),
    );
    Ok(checks)
}

// ---------------------------------------------------------------- 5

pub fn poisson(seed: u64) -> Section {
    section("poisson", poisson_checks(seed))
}

fn poisson_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(seed, 5);
    let spaces: Vec<WeightedSpace> = (0..20)
        .map(|_| {
            let n = rng.random_range(2..=8);
            WeightedSpace::new((0..n).map(|_| 0.05 + 0.55 * rng.random::<f64>()).collect(), None)
        })
        .collect::<Result<_>>()?;
    let audits = spaces
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let all: Vec<usize> = (0..x.len()).collect();
            poisson_audit(x, &all, None, 100_000, sub(seed, 500 + i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let z: Vec<f64> = audits.iter().map(|a| (a.empty_frequency - a.empty_expected).abs() / a.empty_sigma).collect();
    let zmax = z.iter().copied().fold(0.0, f64::max);
    let mut checks = vec![Check::new("empty frequency within 4 sigma of e^-vol", zmax <= 4.0, num(zmax), "4 sigma on every space")
        .details(json!(audits.iter().map(|a| json!({ "volume": a.volume, "empty": a.empty_frequency, "expected": a.empty_expected })).collect::<Vec<_>>()))];
    let ps: Vec<f64> = audits.iter().map(|a| a.janossy.as_ref().map_or(1.0, |c| c.p_value)).collect();
    let good = ps.iter().filter(|&&p| p > 1e-3).count();
    checks.push(Check::new("janossy placement p > 1e-3", good >= 18, json!({ "passing": good, "spaces": 20 }), ">= 18 of 20").details(json!(ps)));
    let mut exact = 0;
    for x in &spaces {
        let (w, p) = desingularization_weight_exact(x.volume())?;
        if w * p == q_int(1) {
            exact += 1;
        }
    }
    checks.push(Check::new("desingularization weight times P(nonempty) = 1", exact == spaces.len(), json!({ "exact": exact, "spaces": spaces.len() }), "1 exactly"));
    Ok(checks)
}

// ---------------------------------------------------------------- 6

pub fn chabauty(seed: u64) -> Section {
    section("chabauty", chabauty_checks(seed))
}

fn chabauty_checks(seed: u64) -> Result<Vec<Check>> {
    let id = indicator_identity_audit(200, 7, sub(seed, 600));
    let lc = lemchab_audit(1000, 8, sub(seed, 601));
    let f = scaling_map(0.1, 15, 1.5)?;
    let da = distortion_audit(&f, 1.5, 1.5, 1.0, 1.5, 500, sub(seed, 602))?;
    let gap = grid_oracle_gap(20, 6, 1e-4, sub(seed, 603));
    let cert = |v: Value| v;
    let mut checks = vec![
        Check::new("d_usc(1_A, 1_B) = min(1, d_Haus(A, B))", id.violations == 0, json!({ "instances": id.trials, "violations": id.violations }), "exact"),
        Check::new("weighted Hausdorff comparison", lc.violations == 0, json!({ "instances": lc.trials, "violations": lc.violations }), 0)
            .details(json!({ "hypothesis_violations": lc.hypothesis_violations, "worst_ratio": num(lc.worst_ratio) })),
        Check::new("distortion of tapered distances", da.violations == 0, json!({ "pairs": da.trials, "violations": da.violations }), 0)
            .details(json!({ "map": "x -> 1.5 x on {0.1 k : |k| <= 15}", "lambda": 1.5, "r1": 1.0, "r2": 1.5, "worst_ratio": num(da.worst_ratio) })),
        Check::new("closed form vs s-grid oracle", gap <= 1e-4, num(gap), 1e-4),
    ];
    if id.violations > 0 {
        checks[0] = checks[0].clone().certificate(cert(serde_json::to_value(&id.certificate)?));
    }
    if lc.violations > 0 {
        checks[1] = checks[1].clone().certificate(cert(serde_json::to_value(&lc.certificate)?));
    }
    if da.violations > 0 {
        checks[2] = checks[2].clone().certificate(cert(serde_json::to_value(&da.certificate)?));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- 7

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

pub fn comparison_grid(mode: ComparisonMode) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let params = match mode {
        ComparisonMode::Angle => linspace(0.0, PI, 25),
        _ => linspace(0.0, 2.0, 25),
    };
    (params, linspace(0.0, 5.0, 40), vec![0.5, 1.0, 1.5, 2.0])
}

pub fn comparisons(seed: u64) -> Section {
    section("comparison lemma", comparison_checks(seed, 10_000))
}

pub fn comparison_checks(seed: u64, pairs: usize) -> Result<Vec<Check>> {
    let reps: Vec<_> = ComparisonMode::ALL
        .iter()
        .map(|&m| {
            let (p, t, a) = comparison_grid(m);
            comparison_audit(m, &p, &t, &a)
        })
        .collect();
    let cells: usize = reps.iter().map(|r| r.cells).sum();
    let violations: usize = reps.iter().map(|r| r.violations).sum();
    let ode = reps.iter().map(|r| r.max_ode_error).fold(0.0, f64::max);
    let mut bounds = Check::new("bounds hold on the grid", violations == 0 && cells >= 10_000, json!({ "cells": cells, "violations": violations }), ">= 1e4 cells, 0 violations")
        .details(json!(reps.iter().map(|r| json!({ "mode": r.mode, "cells": r.cells, "max_ratio": num(r.max_ratio) })).collect::<Vec<_>>()));
    if let Some(w) = reps.iter().find_map(|r| r.worst.clone()) {
        bounds = bounds.certificate(serde_json::to_value(w)?);
    }
    let ft = fellow_travel_simulation(pairs, sub(seed, 700));
    Ok(vec![
        bounds,
        Check::new("closed form vs geodesic ODE", ode <= 1e-6, num(ode), 1e-6),
        Check::new("fellow travelling", ft.violations == 0, json!({ "pairs": ft.pairs, "violations": ft.violations }), 0)
            .details(json!({ "max_ratio": num(ft.max_ratio) })),
    ])
}

// ---------------------------------------------------------------- 8

pub fn thin_thick(seed: u64) -> Section {
    section("thin/thick", thin_thick_checks(seed))
}

fn thin_thick_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = stream_rng(seed, 8);
    let surfaces: Vec<(SurfaceSpec, f64)> = (0..50).map(|_| (random_surface(&mut rng), 0.02 + 0.18 * rng.random::<f64>())).collect();
    let mc = surfaces
        .par_iter()
        .enumerate()
        .map(|(i, (s, eps))| {
            let exact = thin_area(s, *eps)?;
            let est = thin_area_mc(s, *eps, 200_000, sub(seed, 800 + i as u64));
            let rel = if exact > 0.0 { (est / exact - 1.0).abs() } else if est == 0.0 { 0.0 } else { f64::INFINITY };
            Ok(rel)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst_i, worst) = mc.iter().copied().enumerate().fold((0, 0.0), |a, (i, r)| if r > a.1 { (i, r) } else { a });
    let mut checks = vec![Check::new("thin area formula vs Monte Carlo", worst <= 0.01, num(worst), "1% relative")
        .details(json!({ "surfaces": 50, "samples_per_piece": 200_000 }))];
    if worst > 0.01 {
        checks[0] = checks[0].clone().certificate(json!({ "surface": surfaces[worst_i].0, "eps": surfaces[worst_i].1 }));
    }

    let sweep = linspace(0.0, 0.2, 40);
    let mut non_monotone = Vec::new();
    for (s, _) in &surfaces {
        let fr = sweep.iter().map(|&e| thin_fraction(s, e)).collect::<Result<Vec<_>>>()?;
        if fr.windows(2).any(|w| w[1] < w[0]) {
            non_monotone.push(serde_json::to_value(s)?);
        }
    }
    let mut c = Check::new("thin fraction monotone in eps", non_monotone.is_empty(), json!({ "surfaces": 50, "eps_values": 40, "non_monotone": non_monotone.len() }), "monotone");
    if let Some(s) = non_monotone.first() {
        c = c.certificate(s.clone());
    }
    checks.push(c);

    let mut leaf_bad = None;
    let mut leaf_n = 0;
    for eps0 in [0.1, 0.2, 0.4] {
        for e in linspace(0.0, eps0, 1000) {
            leaf_n += 1;
            let (d, b) = (leaf_distance_cusp(e, eps0)?, leaf_distance_bound(e, eps0, 1.0));
            if d < b && leaf_bad.is_none() {
                leaf_bad = Some(json!({ "eps": e, "eps0": eps0, "distance": d, "bound": b }));
            }
        }
    }
    let mut c = Check::new("cusp leaf distance >= (1/a) log(a eps0 / eps)", leaf_bad.is_none(), json!({ "points": leaf_n }), "a = 1, every point");
    if let Some(b) = leaf_bad {
        c = c.certificate(b);
    }
    checks.push(c);

    let eps0 = 0.2;
    let mut geoms = vec![LeafGeometry::Cusp];
    geoms.extend([0.001, 0.01, 0.05].map(|length| LeafGeometry::Tube { length }));
    let mut audits = Vec::new();
    for g in &geoms {
        for e in [0.2, 0.1, 0.05, 0.02, 0.01] {
            if let Ok(a) = gmap_audit(*g, e, eps0, 2000) {
                audits.push(a);
            }
        }
    }
    let samples: usize = audits.iter().map(|a| a.samples).sum();
    let violations: usize = audits.iter().map(|a| a.violations).sum();
    let worst = audits.iter().min_by(|a, b| (a.min_jacobian / a.d).total_cmp(&(b.min_jacobian / b.d))).expect("some leaf has a thin part");
    let mut c = Check::new("gmap Jacobian >= D(eps)", violations == 0, json!({ "samples": samples, "violations": violations, "min_ratio": num(worst.min_jacobian / worst.d) }), "every sample")
        .details(json!(audits.iter().map(|a| json!({ "geometry": a.geometry, "eps": a.eps, "violations": a.violations, "min_ratio": num(a.min_jacobian / a.d) })).collect::<Vec<_>>()));
    if violations > 0 {
        c = c.certificate(json!({ "geometry": worst.geometry, "eps": worst.eps, "eps0": worst.eps0, "t": worst.argmin_t, "jacobian": worst.min_jacobian, "d": worst.d }));
    }
    checks.push(c);

    let eps_list = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005];
    let mut tb_viol = 0;
    let mut tb_dec = true;
    let mut tb_cert = None;
    for (s, _) in &surfaces {
        let a = thickbase_audit(s, &eps_list)?;
        tb_viol += a.violations;
        tb_dec &= a.bound_decreasing;
        if (a.violations > 0 || !a.bound_decreasing) && tb_cert.is_none() {
            tb_cert = Some(json!({ "surface": s, "rows": a.rows }));
        }
    }
    let model: Vec<f64> = (1..=12).map(|k| thickbase_bound(&ModelParams::new(1.0, 1.0, 0.2 * 10f64.powi(-k), 0.2).expect("valid"))).collect();
    let model_ok = model.windows(2).all(|w| w[1] < w[0]) && *model.last().unwrap() < 1e-6;
    let mut c = Check::new(
        "thickbase: fraction <= bound, bound -> 0",
        tb_viol == 0 && tb_dec && model_ok,
        json!({ "violations": tb_viol, "surface_bounds_decreasing": tb_dec, "model_bound_at_eps_2e-13": num(*model.last().unwrap()) }),
        "0 violations, bound decreasing to below 1e-6",
    );
    if let Some(x) = tb_cert {
        c = c.certificate(x);
    }
    checks.push(c);
    Ok(checks)
}

// ---------------------------------------------------------------- 9

pub const PERTURBED: &str = "1+0.5*cos(2*pi*x)";

pub fn flows(seed: u64) -> Section {
    section("flows", flow_checks(seed))
}

fn indicator_half(_: f64, y: f64) -> f64 {
    if y <= 0.5 {
        1.0
    } else {
        0.0
    }
}

pub fn m1_rows() -> Result<Vec<crate::flows::M1Sides>> {
    let nu = OneManifoldMeasure::new(vec![(1.0, 1.0)])?;
    [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&h| m1_mtp_sides(&nu, indicator_half, None, h)).collect()
}

fn flow_checks(seed: u64) -> Result<Vec<Check>> {
    let uniform = TorusDensity::uniform();
    let ts = [0.1, 0.37, 1.7];
    let defects = ts
        .iter()
        .enumerate()
        .map(|(i, &t)| invariance_defect(&uniform, t, Bins::DEFAULT, 1_000_000, sub(seed, 900 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let max = defects.iter().map(|d| d.defect).fold(0.0, f64::max);
    let mut checks = vec![Check::new("uniform lift: invariance defect < 0.01", max < 0.01, num(max), 0.01)
        .details(serde_json::to_value(&defects)?)];
    let mu = TorusDensity::parse(PERTURBED)?;
    let b = defect_lower_bound(&mu, 0.37, Bins::DEFAULT, 1_000_000, sub(seed, 910))?;
    checks.push(
        Check::new("perturbed density: defect exceeds quadrature lower bound", b.exceeds && b.lower_bound > 0.0, json!({ "defect": b.estimate.defect, "lower_bound": b.lower_bound }), "defect > lower bound > 0")
            .details(json!({ "density": PERTURBED, "t": 0.37, "quadrature": b.quadrature, "quadrature_error": b.quadrature_error, "sigma": b.estimate.sigma })),
    );
    let rows = m1_rows()?;
    let slopes = gap_slopes(&rows);
    let ok = slopes.iter().all(|s| (s - 1.0).abs() <= 0.1);
    checks.push(
        Check::new("one-manifold transport gap linear in h", ok, json!(slopes.iter().map(|&s| num(s)).collect::<Vec<_>>()), "log-log slope 1 +- 0.1")
            .details(json!(rows.iter().map(|r| json!({ "h": r.h, "gap": r.gap })).collect::<Vec<_>>())),
    );
    Ok(checks)
}

// ---------------------------------------------------------------- 10

pub fn sasaki(seed: u64) -> Section {
    section("sasaki", sasaki_checks(seed))
}

pub fn hyperbolic_patch() -> Vec<[f64; 2]> {
    vec![[-1.0, 1.0], [0.5, 2.0]]
}

/// Flat, hyperbolic (analytic and finite-difference) and 20 random polynomial metrics,
/// each with the point where the audit runs.
pub fn metric_corpus(seed: u64) -> Result<Vec<(String, CoordinateMetric, Vec<f64>)>> {
    let square = vec![[-1.0, 1.0], [-1.0, 1.0]];
    let mut out = vec![
        ("flat".to_string(), CoordinateMetric::euclidean(2, square.clone())?, vec![0.1, -0.2]),
        ("hyperbolic".to_string(), CoordinateMetric::hyperbolic(hyperbolic_patch())?, vec![0.0, 1.0]),
        (
            "hyperbolic, finite differences".to_string(),
            CoordinateMetric::new(2, hyperbolic_patch(), |x| Mat::identity(2, 2) / (x[1] * x[1]))?,
            vec![0.3, 1.2],
        ),
    ];
    let mut rng = stream_rng(seed, 10);
    for i in 0..20 {
        let g = random_polynomial_metric(&mut rng, square.clone())?;
        let x = vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
        out.push((format!("random {i}"), g, x));
    }
    Ok(out)
}

pub fn ratio_pairs() -> Result<Vec<(String, CoordinateMetric, CoordinateMetric)>> {
    let h = CoordinateMetric::hyperbolic(hyperbolic_patch())?;
    Ok(vec![
        ("hyperbolic vs itself".into(), h.clone(), h.clone()),
        ("hyperbolic vs 1.69 hyperbolic".into(), h.clone(), h.scaled(1.69)),
        ("hyperbolic vs 0.01 bump".into(), h.clone(), h.bumped(0.01, vec![0.1, 1.2], 0.4)),
    ])
}

fn sasaki_checks(seed: u64) -> Result<Vec<Check>> {
    let corpus = metric_corpus(seed)?;
    let reps = corpus
        .par_iter()
        .map(|(_, g, x)| relationship_audit(g, x, 100))
        .collect::<Result<Vec<_>>>()?;
    let worst = reps.iter().map(|r| r.derivative_error.max(r.block_error)).fold(0.0, f64::max);
    let failing: Vec<&str> = corpus.iter().zip(&reps).filter(|(_, r)| !r.passes).map(|(c, _)| c.0.as_str()).collect();
    let mut c = Check::new("relationship identities", failing.is_empty(), json!({ "metrics": corpus.len(), "max_relative_error": num(worst) }), RELATIONSHIP_TOL);
    if let Some(i) = reps.iter().position(|r| !r.passes) {
        c = c.certificate(json!({ "metric": corpus[i].0, "report": reps[i] }));
    }
    let mut checks = vec![c];

    let e = CoordinateMetric::euclidean(2, vec![[-1.0, 1.0], [-1.0, 1.0]])?;
    let id4 = Mat::identity(4, 4);
    let mut off = None;
    for i in 0..1000 {
        let p = halton(i, &[[-0.5, 0.5], [-0.5, 0.5], [-3.0, 3.0], [-3.0, 3.0]]);
        if sasaki_matrix(&e, &p[..2], &p[2..], STEP)? != id4 {
            off = Some(p);
            break;
        }
    }
    let e2 = iterated(&e, 2)?;
    let id8 = Mat::identity(8, 8);
    let box2 = e2.shrunk(0.01);
    for i in 0..200 {
        let p = halton(i, &box2);
        if off.is_none() && e2.at(&p)? != id8 {
            off = Some(p);
        }
    }
    let mut c = Check::new("euclidean lift is the identity", off.is_none(), json!({ "first_order_points": 1000, "second_order_points": 200 }), "exact equality");
    if let Some(p) = off {
        c = c.certificate(json!({ "point": p }));
    }
    checks.push(c);

    let pairs = ratio_pairs()?;
    let mut rows = Vec::new();
    let mut cert = None;
    for (name, g, h) in &pairs {
        for k in 1..=2 {
            let est = bilipschitz_ratio(g, h, k, 200)?;
            let audit = derivative_ratio_audit(g, h, est.lambda, k, 20)?;
            if audit.violations > 0 && cert.is_none() {
                cert = Some(json!({ "pair": name, "k": k, "lambda": est.lambda, "lambda_witness": est, "entry": audit.worst }));
            }
            rows.push(json!({ "pair": name, "k": k, "lambda": est.lambda, "checked": audit.checked, "skipped": audit.skipped, "violations": audit.violations }));
        }
    }
    let total: u64 = rows.iter().map(|r| r["violations"].as_u64().unwrap_or(0)).sum();
    let mut c = Check::new("derivative ratios within [1/lambda^2, lambda^2]", total == 0, json!({ "audits": rows.len(), "violations": total }), "every audited entry")
        .details(json!(rows));
    if let Some(x) = cert {
        c = c.certificate(x);
    }
    checks.push(c);
    Ok(checks)
}

// ---------------------------------------------------------------- 11

/// Degree-one vertices, or marked vertices when the graph carries marks.
pub fn core_predicate() -> BallFunction<bool> {
    BallFunction::new(1, |b: &RootedGraph| match b.graph.marks() {
        Some(m) => m[b.root] == 1,
        None => b.graph.degree(b.root) == 1,
    })
}

pub fn marked_line_demo() -> Measure {
    Measure {
        atoms: vec![Atom {
            space: Space::Generator {
                root: GeneratorRoot::at_origin(Generator::MarkedLine([0].into())),
                core_mass: Some(CoreMass::Count(1)),
            },
            weight: q_int(1),
        }],
        probability: false,
    }
}

pub fn probability_corpus(seed: u64) -> Result<Vec<(String, Measure)>> {
    let mut out: Vec<(String, Measure)> = vec![
        ("P5".into(), uniform_root_measure(&path(5))?),
        ("C6".into(), uniform_root_measure(&cycle(6))?),
        ("star(4)".into(), uniform_root_measure(&star(4))?),
        ("grid 3x3".into(), uniform_root_measure(&grid(3, 3))?),
        ("barbell(3)".into(), uniform_root_measure(&barbell(3))?),
    ];
    for (name, g) in [("integer line", Generator::IntegerLine), ("grid2d", Generator::Grid2d), ("3-regular tree", Generator::RegularTree(3))] {
        out.push((
            name.into(),
            Measure::point(Space::Generator { root: GeneratorRoot::at_origin(g), core_mass: Some(CoreMass::Zero) }),
        ));
    }
    out.push((
        "unmarked line as marked_line".into(),
        Measure::point(Space::Generator {
            root: GeneratorRoot::at_origin(Generator::MarkedLine(Default::default())),
            core_mass: Some(CoreMass::Zero),
        }),
    ));
    out.extend(unimodular_corpus(seed)?.into_iter().take(4));
    Ok(out)
}

pub fn no_core(seed: u64) -> Section {
    section("no-core audit", no_core_checks(seed))
}

fn no_core_checks(seed: u64) -> Result<Vec<Check>> {
    let core = core_predicate();
    let corpus = probability_corpus(seed)?;
    let mut inconsistent = Vec::new();
    for (name, m) in &corpus {
        let r = no_core_audit(m, &core)?;
        if !r.consistent || !r.probability {
            inconsistent.push(name.clone());
        }
    }
    let mut checks = vec![Check::new("probability measures are consistent", inconsistent.is_empty(), json!({ "measures": corpus.len(), "inconsistent": inconsistent }), "all CONSISTENT")];
    let r = no_core_audit(&marked_line_demo(), &core)?;
    let flagged: Vec<Value> = r
        .rows
        .iter()
        .filter(|x| x.flagged)
        .map(|x| json!({ "atom": x.atom, "description": x.description, "core": match x.mass { CoreValue::Finite(n) => json!(n), CoreValue::Infinite => json!("infinite") } }))
        .collect();
    checks.push(
        Check::new("sigma-finite marked line is flagged with caveat", !r.consistent && r.caveat.is_some(), json!({ "flagged": flagged }), "flagged, caveat present")
            .details(json!({ "caveat": r.caveat })),
    );
    Ok(checks)
}

// ---------------------------------------------------------------- battery

pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub limit: Duration,
    pub run: fn(u64) -> Section,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "mtp exactness", limit: Duration::from_secs(10), run: mtp_exactness },
    Criterion { id: 2, title: "unimodularity certification", limit: Duration::from_secs(20), run: unimodularity },
    Criterion { id: 3, title: "laplacian self-adjointness", limit: Duration::from_secs(5), run: laplacian },
    Criterion { id: 4, title: "benjamini-schramm", limit: Duration::from_secs(30), run: benjamini_schramm },
    Criterion { id: 5, title: "poisson", limit: Duration::from_secs(60), run: poisson },
    Criterion { id: 6, title: "chabauty", limit: Duration::from_secs(30), run: chabauty },
    Criterion { id: 7, title: "comparison lemma", limit: Duration::from_secs(60), run: comparisons },
    Criterion { id: 8, title: "thin/thick", limit: Duration::from_secs(60), run: thin_thick },
    Criterion { id: 9, title: "flows", limit: Duration::from_secs(60), run: flows },
    Criterion { id: 10, title: "sasaki", limit: Duration::from_secs(30), run: sasaki },
    Criterion { id: 11, title: "no-core audit", limit: Duration::from_secs(5), run: no_core },
];

/// Runs every criterion in order; the durations are kept out of the report.
pub fn run_suite(seed: u64, mut progress: impl FnMut(&Criterion, &Section, Duration)) -> (RunReport, Vec<Duration>) {
    let mut sections = Vec::new();
    let mut times = Vec::new();
    for c in &CRITERIA {
        let t0 = Instant::now();
        let s = (c.run)(seed);
        let dt = t0.elapsed();
        progress(c, &s, dt);
        sections.push(s);
        times.push(dt);
    }
    (RunReport::new("suite", json!({ "seed": seed }), vec![seed], sections), times)
}
