use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mtlab::bs::{bs_distance, ExactSource, McSample, Side};
use mtlab::chabauty::{
    chabauty_convergence_test, distortion_audit, indicator_identity_audit, lemchab_audit, lemchab_necessity_demo,
    scaling_map, FiniteMetricSpace, LemchabOutcome,
};
use mtlab::flows::{defect_lower_bound, lift_audit, uniform_lift, Bins, TorusDensity};
use mtlab::geometry::{thickbase_audit, thin_area_mc};
use mtlab::graph::GeneratorRoot;
use mtlab::io::{self, MetricSpaceSpec, PoissonSpec, Source};
use mtlab::mass_transport::{is_unimodular, mtp_sides, uniform_root_measure, Measure, Sampler, Space, TransportKernel};
use mtlab::poisson::{poisson_audit, restriction_audit};
use mtlab::report::{num, Check, RunReport, Section, Verdict};
use mtlab::sasaki::{bilipschitz_ratio, derivative_ratio_audit, halton, relationship_audit, RELATIONSHIP_TOL};
use mtlab::schreier::irs_to_ursg;
use mtlab::suite::run_suite;
use mtlab::util::{fmt_q, fnv64, parse_q, to_f64};
use mtlab::{Error, Result};

#[derive(Parser)]
#[command(name = "mtlab", version, about = "Desk-scale checks for unimodular random graphs and their geometric relatives")]
struct Cli {
    /// Pretty-print the JSON report with this many spaces.
    #[arg(long, global = true)]
    json_indent: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Lemchab,
    Distortion,
    Convergence,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify the mass transport principle for a measure up to a ball radius.
    MtpCheck {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 3)]
        radius: usize,
        /// Allowed rational gap, e.g. 0 or 1/1000.
        #[arg(long, default_value = "0")]
        tol: String,
        /// Hashed kernels evaluated in addition to the certificate.
        #[arg(long, default_value_t = 20)]
        kernels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Benjamini-Schramm distance between two graphs, measures or generators.
    BsDistance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 3)]
        rmax: usize,
        /// Estimate finite-graph sides by Monte Carlo with this many roots.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Push an invariant random subgroup to its Schreier graphs and certify unimodularity.
    Schreier {
        #[arg(long)]
        irs: PathBuf,
        #[arg(long, default_value_t = 3)]
        radius: usize,
        #[arg(long, default_value = "0")]
        tol: String,
    },
    /// Audit the Poisson point process on a weighted finite space.
    PoissonAudit {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Audit tapered Chabauty distances.
    ChabautyAudit {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Space with `sequence` and `limit` for the convergence test.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Thin part areas, fractions and the thick-base bound.
    Thinthick {
        #[arg(long)]
        surface: PathBuf,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Curvature comparison bounds on a grid, against the geodesic ODE, plus fellow travelling.
    Comparisons {
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Geodesic-flow invariance of the uniform lift of a torus density.
    FlowInvariance {
        /// Density expression in x and y, e.g. "1+0.5*cos(2*pi*x)".
        #[arg(long)]
        density: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Sasaki lift identities and derivative ratio containment.
    SasakiCheck {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// The full acceptance battery.
    Suite {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Output {
    Report(RunReport),
    Csv(String, i32),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let t0 = Instant::now();
    let out = run(cli.cmd);
    eprintln!("elapsed {:.3}s", t0.elapsed().as_secs_f64());
    match out {
        Ok(Output::Report(r)) => {
            println!("{}", r.to_json(cli.json_indent));
            ExitCode::from(r.exit_code() as u8)
        }
        Ok(Output::Csv(s, code)) => {
            print!("{s}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Malformed(_) | Error::Expr(_) | Error::Json(_) | Error::Io(_) => 2,
                _ => 3,
            })
        }
    }
}

fn load(p: &Path) -> Result<Value> {
    io::read_json(p)
}

fn report(command: &str, config: Value, seeds: Vec<u64>, sections: Vec<Section>, csv: Option<String>) -> Output {
    let r = RunReport::new(command, config, seeds, sections);
    match csv {
        Some(s) => Output::Csv(s, r.exit_code()),
        None => Output::Report(r),
    }
}

fn measure_of(src: Source) -> Result<Measure> {
    match src {
        Source::Measure(m) => Ok(m),
        Source::Graph(g) => uniform_root_measure(&g.graph),
        Source::Generator(g) => Ok(Measure::point(Space::Generator { root: GeneratorRoot::at_origin(g), core_mass: None })),
    }
}

fn run(cmd: Cmd) -> Result<Output> {
    match cmd {
        Cmd::MtpCheck { measure, radius, tol, kernels, seed } => {
            let mu = measure_of(io::source_from_value(&load(&measure)?)?)?;
            let tol_q = parse_q(&tol)?;
            let v = is_unimodular(&mu, radius, &tol_q)?;
            let mut cert = Check::new(
                format!("transport gap up to radius {radius}"),
                v.pass,
                json!(fmt_q(&v.max_gap)),
                json!(fmt_q(&tol_q)),
            )
            .details(json!({ "types": v.types }));
            if let Some(w) = &v.witness {
                cert = cert.certificate(json!({
                    "doubly_rooted_code": w.code.hex(),
                    "distance": w.example.distance(),
                    "left": fmt_q(&w.left),
                    "right": fmt_q(&w.right),
                }));
            }
            let mut rows = Vec::new();
            let mut worst = num::zero();
            for j in 0..kernels {
                let r = 1 + j % radius.max(1);
                let s = fnv64(seed, &(j as u64).to_le_bytes());
                let sides = mtp_sides(&mu, &TransportKernel::hashed(r, s))?;
                let gap = num::abs(sides.gap.clone());
                if gap > worst {
                    worst = gap.clone();
                }
                rows.push(json!({ "range": r, "seed": s, "left": fmt_q(&sides.left), "right": fmt_q(&sides.right) }));
            }
            let kernel = Check::new("hashed kernels", worst <= tol_q, json!(fmt_q(&worst)), json!(fmt_q(&tol_q))).details(json!(rows));
            Ok(report(
                "mtp-check",
                json!({ "measure": measure, "radius": radius, "tol": tol, "kernels": kernels }),
                vec![seed],
                vec![Section::new("mass transport", vec![cert, kernel])],
                None,
            ))
        }
        Cmd::BsDistance { a, b, rmax, samples, seed, csv } => {
            let side = |p: &Path, tag: u64| -> Result<Side> {
                Ok(match io::source_from_value(&load(p)?)? {
                    Source::Graph(g) => match samples {
                        Some(n) => Side::Mc(McSample::draw(&Sampler::uniform_root(g.graph)?, rmax, n, fnv64(seed, &tag.to_le_bytes()))?),
                        None => Side::Exact(ExactSource::UniformRoot(g.graph)),
                    },
                    Source::Measure(m) => Side::Exact(ExactSource::Measure(m)),
                    Source::Generator(g) => Side::Exact(ExactSource::Generator(GeneratorRoot::at_origin(g))),
                })
            };
            let d = bs_distance(&side(&a, 0)?, &side(&b, 1)?, rmax)?;
            let rows: Vec<Value> = d
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "radius": r.radius,
                        "tv": num(r.tv),
                        "tv_exact": r.tv_exact.as_ref().map(fmt_q),
                        "weight": fmt_q(&r.weight),
                        "contribution": num(r.contribution),
                    })
                })
                .collect();
            let table = csv.then(|| {
                let mut s = String::from("R,tv,weight,contribution\n");
                for r in &d.rows {
                    s.push_str(&format!("{},{},{},{}\n", r.radius, r.tv, to_f64(&r.weight), r.contribution));
                }
                s
            });
            let c = Check::new("distance", true, num(d.value), Value::Null).details(json!({
                "exact": d.exact.as_ref().map(fmt_q),
                "sigma": d.sigma.map(num),
                "rows": rows,
            }));
            Ok(report(
                "bs-distance",
                json!({ "a": a, "b": b, "rmax": rmax, "samples": samples }),
                vec![seed],
                vec![Section::new("benjamini-schramm", vec![c])],
                table,
            ))
        }
        Cmd::Schreier { irs, radius, tol } => {
            let (irs_v, gens) = io::irs_from_value(&load(&irs)?)?;
            irs_v.check_invariance()?;
            let mu = irs_to_ursg(&irs_v, &gens)?;
            let tol_q = parse_q(&tol)?;
            let v = is_unimodular(&mu, radius, &tol_q)?;
            let atoms: Vec<Value> = irs_v
                .atoms
                .iter()
                .map(|(h, w)| json!({ "subgroup_order": h.order(), "index": irs_v.group.order() / h.order(), "weight": fmt_q(w) }))
                .collect();
            let mut c = Check::new("schreier graph measure is unimodular", v.pass, json!(fmt_q(&v.max_gap)), json!(fmt_q(&tol_q)))
                .details(json!({ "group_order": irs_v.group.order(), "generators": gens.set.symbols, "atoms": atoms, "types": v.types }));
            if let Some(w) = &v.witness {
                c = c.certificate(json!({ "doubly_rooted_code": w.code.hex(), "left": fmt_q(&w.left), "right": fmt_q(&w.right) }));
            }
            Ok(report("schreier", json!({ "irs": irs, "radius": radius, "tol": tol }), vec![], vec![Section::new("schreier", vec![c])], None))
        }
        Cmd::PoissonAudit { space, samples, seed } => {
            let spec = PoissonSpec::from_value(&load(&space)?)?;
            let x = spec.space()?;
            let region = spec.region();
            let a = poisson_audit(&x, &region, spec.other.as_deref(), samples, seed)?;
            let z = (a.empty_frequency - a.empty_expected).abs() / a.empty_sigma;
            let mut checks = vec![
                Check::new("count law Poisson(vol)", a.count_chi2.p_value > 1e-3, num(a.count_chi2.p_value), "p > 1e-3")
                    .details(json!({ "volume": a.volume, "histogram": a.count_hist, "expected": a.expected_hist, "ks_statistic": a.ks_statistic, "ks_p": num(a.ks_pvalue) })),
                Check::new("empty frequency vs e^-vol", z <= 4.0, num(a.empty_frequency), json!({ "expected": a.empty_expected, "sigmas": 4 })),
            ];
            if let Some(j) = &a.janossy {
                checks.push(Check::new("placement follows the weights", j.p_value > 1e-3, num(j.p_value), "p > 1e-3").details(serde_json::to_value(j)?));
            }
            if let Some(c) = &a.correlation {
                checks.push(Check::new("disjoint regions uncorrelated", c.value.abs() <= 4.0 * c.sigma, num(c.value), json!({ "sigmas": 4, "sigma": c.sigma })));
            }
            if region.len() < x.len() {
                let r = restriction_audit(&x, &region, samples, fnv64(seed, b"restriction"))?;
                checks.push(Check::new("restriction is the process of the restricted measure", r.p_value > 1e-3, num(r.p_value), "p > 1e-3"));
            }
            Ok(report("poisson-audit", json!({ "space": space, "samples": samples }), vec![seed], vec![Section::new("poisson", checks)], None))
        }
        Cmd::ChabautyAudit { which, trials, seed, space, tol } => {
            let checks = match which {
                Which::Lemchab => {
                    let r = lemchab_audit(trials, 8, seed);
                    let id = indicator_identity_audit(trials, 7, fnv64(seed, b"identity"));
                    let mut c = Check::new("weighted comparison bound", r.violations == 0, json!({ "trials": r.trials, "violations": r.violations }), 0)
                        .details(json!({ "hypothesis_violations": r.hypothesis_violations, "worst_ratio": num(r.worst_ratio) }));
                    if r.violations > 0 {
                        c = c.certificate(serde_json::to_value(&r.certificate)?);
                    }
                    let (inst, out) = lemchab_necessity_demo(0.5)?;
                    let demo = Check {
                        verdict: match out {
                            LemchabOutcome::HypothesisViolated { .. } => Verdict::HypothesisViolated,
                            LemchabOutcome::Holds { .. } => Verdict::Pass,
                            LemchabOutcome::Violated { .. } => Verdict::Fail,
                        },
                        ..Check::new("bound without the support hypothesis", true, serde_json::to_value(&out)?, Value::Null)
                    }
                    .details(serde_json::to_value(&inst)?);
                    vec![
                        c,
                        Check::new("indicator distance equals capped Hausdorff", id.violations == 0, json!({ "trials": id.trials, "violations": id.violations }), 0),
                        demo,
                    ]
                }
                Which::Distortion => {
                    let f = scaling_map(0.1, 15, 1.5)?;
                    let r = distortion_audit(&f, 1.5, 1.5, 1.0, 1.5, trials, seed)?;
                    let mut c = Check::new("tapered distance distortion", r.violations == 0, json!({ "pairs": r.trials, "violations": r.violations }), 0)
                        .details(json!({ "map": "x -> 1.5 x", "worst_ratio": num(r.worst_ratio) }));
                    if r.violations > 0 {
                        c = c.certificate(serde_json::to_value(&r.certificate)?);
                    }
                    vec![c]
                }
                Which::Convergence => {
                    let (k, seq, a, radii) = match &space {
                        Some(p) => {
                            let s = MetricSpaceSpec::from_value(&load(p)?)?;
                            let (Some(seq), Some(a)) = (s.sequence.clone(), s.limit.clone()) else {
                                return Err(Error::Malformed("convergence needs \"sequence\" and \"limit\"".into()));
                            };
                            (s.space()?, seq, a, s.radii.clone().unwrap_or(vec![1.0, 2.0, 4.0]))
                        }
                        None => convergence_demo()?,
                    };
                    let v = chabauty_convergence_test(&k, &seq, &a, &radii, tol)?;
                    let mut c = Check::new("sequence converges at every radius", v.converged, json!({ "witness_radius": v.witness_radius }), tol)
                        .details(serde_json::to_value(&v.rows)?);
                    if let Some(r) = v.witness_radius {
                        c = c.certificate(json!({ "radius": r }));
                    }
                    vec![c, Check::new("tapered distance dominated by ball gaps", v.bound_consistent, v.bound_consistent, true)]
                }
            };
            Ok(report("chabauty-audit", json!({ "trials": trials, "space": space, "tol": tol }), vec![seed], vec![Section::new("chabauty", checks)], None))
        }
        Cmd::Thinthick { surface, eps, samples, seed, csv } => {
            let s = io::surface_from_value(&load(&surface)?)?;
            let mut sorted = eps.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let tb = thickbase_audit(&s, &sorted)?;
            let mut worst: f64 = 0.0;
            let mut mc_rows = Vec::new();
            for (i, row) in tb.rows.iter().enumerate() {
                let est = thin_area_mc(&s, row.eps, samples, fnv64(seed, &(i as u64).to_le_bytes()));
                let rel = if row.thin_area > 0.0 { (est / row.thin_area - 1.0).abs() } else if est == 0.0 { 0.0 } else { f64::INFINITY };
                worst = worst.max(rel);
                mc_rows.push(json!({ "eps": row.eps, "formula": row.thin_area, "monte_carlo": est }));
            }
            let monotone = tb.rows.windows(2).all(|w| w[1].fraction <= w[0].fraction);
            let table = csv.then(|| {
                let mut out = String::from("eps,thin_area,fraction,bound\n");
                for r in tb.rows.iter().rev() {
                    out.push_str(&format!("{},{},{},{}\n", r.eps, r.thin_area, r.fraction, r.bound));
                }
                out
            });
            let checks = vec![
                Check::new("thin area formula vs Monte Carlo", worst <= 0.01, num(worst), "1% relative").details(json!(mc_rows)),
                Check::new("thin fraction monotone in eps", monotone, monotone, true),
                Check::new("fraction within thick-base bound", tb.violations == 0, json!({ "violations": tb.violations }), 0)
                    .details(serde_json::to_value(&tb.rows)?),
                Check::new("bound decreases with eps", tb.bound_decreasing, tb.bound_decreasing, true),
            ];
            Ok(report("thinthick", json!({ "surface": surface, "eps": eps, "samples": samples }), vec![seed], vec![Section::new("thin/thick", checks)], table))
        }
        Cmd::Comparisons { pairs, seed } => {
            let checks = mtlab::suite::comparison_checks(seed, pairs)?;
            Ok(report("comparisons", json!({ "pairs": pairs }), vec![seed], vec![Section::new("comparison lemma", checks)], None))
        }
        Cmd::FlowInvariance { density, t, samples, seed, tol, csv } => {
            let mu = TorusDensity::parse(&density)?;
            let lift = lift_audit(&mu, &uniform_lift(&mu, samples.min(100_000), fnv64(seed, b"lift"))?);
            let b = defect_lower_bound(&mu, t, Bins::DEFAULT, samples, seed)?;
            let e = &b.estimate;
            let table = csv.then(|| {
                format!(
                    "t,defect,sigma,quadrature,lower_bound\n{},{},{},{},{}\n",
                    t, e.defect, e.sigma, b.quadrature, b.lower_bound
                )
            });
            let mut inv = Check::new("invariance defect", e.defect < tol && b.lower_bound <= 0.0, num(e.defect), tol)
                .details(json!({ "sigma": e.sigma, "max_bin_z": e.max_bin_z, "quadrature": b.quadrature, "quadrature_error": b.quadrature_error }));
            if b.lower_bound > 0.0 {
                inv = inv.certificate(json!({ "lower_bound": b.lower_bound, "reason": "the defect is provably positive" }));
            }
            let checks = vec![
                Check::new("lift angles uniform", lift.angle_chi2.p_value > 1e-3, num(lift.angle_chi2.p_value), "p > 1e-3"),
                inv,
            ];
            Ok(report("flow-invariance", json!({ "density": density, "t": t, "samples": samples, "tol": tol }), vec![seed], vec![Section::new("flows", checks)], table))
        }
        Cmd::SasakiCheck { metric, against, k, points } => {
            let g = io::metric_from_value(&load(&metric)?)?;
            let inner = g.shrunk(0.1);
            let mut worst = 0.0f64;
            let mut failing = None;
            let mut reps = Vec::new();
            for i in 0..points.max(1) {
                let x = halton(i, &inner);
                let r = relationship_audit(&g, &x, 50)?;
                worst = worst.max(r.block_error).max(r.derivative_error);
                if !r.passes && failing.is_none() {
                    failing = Some(serde_json::to_value(&r)?);
                }
                reps.push(json!({ "point": x, "block_error": num(r.block_error), "derivative_error": num(r.derivative_error) }));
            }
            let mut c = Check::new("lift relationship identities", failing.is_none(), num(worst), RELATIONSHIP_TOL).details(json!(reps));
            if let Some(f) = failing {
                c = c.certificate(f);
            }
            let mut checks = vec![c];
            if let Some(h_path) = &against {
                let h = io::metric_from_value(&load(h_path)?)?;
                let est = bilipschitz_ratio(&g, &h, k, 200)?;
                let a = derivative_ratio_audit(&g, &h, est.lambda, k, points)?;
                let mut c = Check::new(
                    format!("order-{k} derivative ratios within [1/lambda^2, lambda^2]"),
                    a.violations == 0,
                    json!({ "checked": a.checked, "skipped": a.skipped, "violations": a.violations }),
                    json!({ "lambda": est.lambda }),
                );
                if let Some(w) = &a.worst {
                    if a.violations > 0 {
                        c = c.certificate(serde_json::to_value(w)?);
                    }
                }
                checks.push(c);
            }
            Ok(report("sasaki-check", json!({ "metric": metric, "against": against, "k": k, "points": points }), vec![], vec![Section::new("sasaki", checks)], None))
        }
        Cmd::Suite { seed } => {
            let (r, _) = run_suite(seed, |c, s, dt| {
                eprintln!("{} criterion {:>2} {:<28} {:.2}s", s.verdict.as_str(), c.id, c.title, dt.as_secs_f64());
            });
            Ok(Output::Report(r))
        }
    }
}

/// `{1/i}` on the line converging to `{0}`.
fn convergence_demo() -> Result<(FiniteMetricSpace, Vec<Vec<usize>>, Vec<usize>, Vec<f64>)> {
    let mut xs = vec![0.0, 3.0];
    xs.extend((1..=64).map(|i| 1.0 / i as f64));
    let k = FiniteMetricSpace::line(&xs, 0)?;
    let seq = (2..66).map(|i| vec![i, 1]).collect();
    Ok((k, seq, vec![0, 1], vec![1.0, 2.0, 4.0]))
}
