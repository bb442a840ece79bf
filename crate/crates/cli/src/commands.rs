use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use roe_core::files::{certificate_to_json, graph_to_json, read_bijection, read_iso, read_space, write_iso};
use roe_core::iso::{goal_table, random_phases, Direction, GoalRow, SetSampler, SpatialIsomorphism};
use roe_core::rigidity::{
    audit_certificate, extract as run_extract, ExtractParams, Strategy, DEFAULT_EPS_GRID, DEFAULT_M_GRID,
    DEFAULT_R_GRID,
};
use roe_core::selftest::{self, Fault};
use roe_core::space::generators::{
    cycle_graph, grid_graph, path_graph, random_bce, random_geometric_graph, random_regular_graph, tree_graph,
};
use roe_core::space::{CoarseMap, FiniteMetricSpace, PointSet};
use roe_core::Error;

use crate::{ExtractArgs, FaultArg, Format, GenArgs, GoalArgs, IsoArgs, Phases, SelftestArgs, StrategyArg};

pub const GOAL_CSV_SCHEMA: &str = "# roe-goal-csv v1";
const GOAL_DELTAS: [f64; 3] = [0.9, 0.5, 0.1];
const PROFILE_RADII: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

fn param<T: std::str::FromStr>(params: &[String], k: usize, name: &str) -> Result<T> {
    let raw = params.get(k).with_context(|| format!("missing parameter {name}"))?;
    raw.parse().map_err(|_| anyhow::anyhow!("parameter {name}: cannot parse {raw:?}"))
}

fn arity(kind: &str, params: &[String], n: usize) -> Result<()> {
    if params.len() != n {
        bail!("{kind} takes {n} parameter(s), got {}", params.len());
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<ExitCode> {
    let p = &a.params;
    let g = match a.kind.as_str() {
        "path" => {
            arity("path", p, 1)?;
            path_graph(param(p, 0, "N")?)?
        }
        "cycle" => {
            arity("cycle", p, 1)?;
            cycle_graph(param(p, 0, "N")?)?
        }
        "grid" => {
            arity("grid", p, 2)?;
            grid_graph(param(p, 0, "W")?, param(p, 1, "H")?)?
        }
        "tree" => {
            arity("tree", p, 2)?;
            tree_graph(param(p, 0, "ARITY")?, param(p, 1, "DEPTH")?)?
        }
        "random-geometric" => {
            arity("random-geometric", p, 3)?;
            random_geometric_graph(param(p, 0, "N")?, param(p, 1, "THRESHOLD")?, param(p, 2, "SEED")?)?
        }
        "expander-sample" => {
            arity("expander-sample", p, 3)?;
            random_regular_graph(param(p, 0, "N")?, param(p, 1, "DEGREE")?, param(p, 2, "SEED")?)?
        }
        other => bail!("unknown space kind {other:?}"),
    };
    let space = g.to_space()?;
    fs::write(&a.out, graph_to_json(&g)?).with_context(|| format!("writing {}", a.out.display()))?;
    println!("{}: {} points, diameter {}", space.label(), space.len(), space.diameter());
    for r in 1..=5 {
        println!("growth({r}) = {}", space.growth(r as f64));
    }
    Ok(ExitCode::SUCCESS)
}

fn max_displacement(f: &CoarseMap) -> f64 {
    let s = f.domain();
    (0..s.len()).map(|x| s.dist(x, f.apply(x))).fold(0.0, f64::max)
}

pub fn iso(a: &IsoArgs) -> Result<ExitCode> {
    let space = Arc::new(read_space(&a.space).with_context(|| format!("reading {}", a.space.display()))?);
    let n = space.len();
    let f = match (&a.random_bce, a.bijection.as_deref()) {
        (Some(d), _) => {
            let f = random_bce(space.clone(), *d, a.seed)?;
            let moved = max_displacement(&f);
            if moved > *d {
                bail!("generated bijection moves a point by {moved} > {d}");
            }
            f
        }
        (None, None | Some("identity")) => CoarseMap::identity(space.clone()),
        (None, Some("reversal")) => CoarseMap::from_fn(space.clone(), space.clone(), |x| n - 1 - x)?,
        (None, Some(path)) => read_bijection(Path::new(path), &space)?,
    };
    let phases = (a.phases == Phases::Random).then(|| random_phases(n, a.seed.wrapping_add(1)));
    let mut iso = SpatialIsomorphism::from_bijection(&f, phases.as_deref())?;
    if let Some(r) = a.perturb {
        iso = iso.perturb_locally(r, a.seed.wrapping_add(2))?;
    }
    write_iso(&iso, &a.out, &a.space, &a.space)?;

    println!("bijection: max displacement {}", max_displacement(&f));
    let prof = f.expansion_profile(&PROFILE_RADII)?;
    let inv = f.inverse()?.expansion_profile(&PROFILE_RADII)?;
    for ((r, s), (_, t)) in prof.samples.iter().zip(&inv.samples) {
        println!("expansion({r}) = {s}, inverse {t}");
    }
    if let Some(p) = iso.provenance().perturbation_propagation {
        println!("perturbation propagation {p}");
    }
    Ok(ExitCode::SUCCESS)
}

fn ids(space: &FiniteMetricSpace, set: &PointSet) -> String {
    set.iter().map(|&x| space.id(x).to_string()).collect::<Vec<_>>().join(" ")
}

pub fn extract(a: &ExtractArgs) -> Result<ExitCode> {
    if a.format != Format::Json {
        bail!("extract writes JSON only");
    }
    let iso = read_iso(&a.iso).with_context(|| format!("reading {}", a.iso.display()))?;
    let params = ExtractParams {
        strategy: match a.strategy {
            StrategyArg::Support => Strategy::Support,
            StrategyArg::Flattened => Strategy::Flattened,
        },
        eps_grid: a.grid.eps.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec()),
        m_grid: a.grid.m.clone().unwrap_or_else(|| DEFAULT_M_GRID.to_vec()),
        r_grid: a.r.clone().unwrap_or_else(|| DEFAULT_R_GRID.to_vec()),
        delta: a.delta,
        sampler: SetSampler::new(a.grid.seed),
        ..ExtractParams::default()
    };
    let cert = match run_extract(&iso, &params) {
        Ok(c) => c,
        Err(Error::ExtractionFailed(fail)) => {
            eprintln!("extraction failed at stage {}", fail.stage);
            let (dom, cod) = match fail.stage {
                roe_core::rigidity::Stage::HallForward => (iso.source(), iso.target()),
                roe_core::rigidity::Stage::HallBackward => (iso.target(), iso.source()),
            };
            let last = fail.attempts.last().expect("failure has attempts");
            eprintln!(
                "witness: {{{}}} ({} points) maps into {{{}}} ({} points)",
                ids(dom, &fail.witness),
                fail.witness.len(),
                ids(cod, &last.neighborhood),
                last.neighborhood.len()
            );
            eprintln!("{} parameter choices tried", fail.attempts.len());
            for row in &fail.residuals {
                eprintln!(
                    "eps {}: single-point residual forward {:.6}, backward {:.6}",
                    row.eps, row.forward, row.backward
                );
            }
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };
    let truth = iso.generating_map();
    let report = audit_certificate(&cert, &iso, truth.as_ref())?;
    emit(a.out.as_deref(), &certificate_to_json(&cert, &report)?)?;

    let mut summary = format!(
        "h found with {:?}; closeness(h, f_raw) {}; goal residual {}; verified {}",
        cert.params,
        cert.closeness_h_f,
        cert.goal.residual,
        report.passed()
    );
    if let Some(c) = report.closeness_to_truth {
        summary += &format!("; closeness to generating bijection {c}");
    }
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    for c in report.failures() {
        eprintln!("check {} failed: expected {}, found {}", c.name, c.expected, c.found);
    }
    Ok(ExitCode::SUCCESS)
}

fn goal_csv(iso: &SpatialIsomorphism, rows: &[GoalRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "eps".to_string(),
        "m".into(),
        "residual".into(),
        "forward_residual".into(),
        "backward_residual".into(),
        "worst_direction".into(),
        "worst_set".into(),
    ];
    header.extend(GOAL_DELTAS.iter().map(|d| format!("feasible_{d}")));
    w.write_record(&header)?;
    for row in rows {
        let e = &row.estimate;
        let space = match e.worst_direction {
            Direction::Forward => iso.source(),
            Direction::Backward => iso.target(),
        };
        let mut rec = vec![
            format!("{}", row.eps),
            format!("{}", row.m),
            format!("{:.16e}", e.residual),
            format!("{:.16e}", e.forward_residual),
            format!("{:.16e}", e.backward_residual),
            e.worst_direction.to_string(),
            ids(space, &e.worst_set),
        ];
        rec.extend(GOAL_DELTAS.iter().map(|&d| (e.residual < d).to_string()));
        w.write_record(&rec)?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok(format!("{GOAL_CSV_SCHEMA}\n{body}"))
}

fn goal_json(iso: &SpatialIsomorphism, rows: &[GoalRow]) -> Result<String> {
    let rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let e = &row.estimate;
            let space = match e.worst_direction {
                Direction::Forward => iso.source(),
                Direction::Backward => iso.target(),
            };
            let worst: Vec<_> = e.worst_set.iter().map(|&x| space.id(x).clone()).collect();
            serde_json::json!({
                "eps": row.eps,
                "m": row.m,
                "residual": e.residual,
                "forward_residual": e.forward_residual,
                "backward_residual": e.backward_residual,
                "worst_direction": e.worst_direction.to_string(),
                "worst_set": worst,
                "exhaustive": e.exhaustive,
            })
        })
        .collect();
    let doc = serde_json::json!({ "schema": "roe-goal v1", "rows": rows });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn goal(a: &GoalArgs) -> Result<ExitCode> {
    let iso = read_iso(&a.iso).with_context(|| format!("reading {}", a.iso.display()))?;
    let eps = a.grid.eps.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
    let ms = a.grid.m.clone().unwrap_or_else(|| DEFAULT_M_GRID.to_vec());
    if eps.is_empty() || ms.is_empty() {
        bail!("eps and m grids must be nonempty");
    }
    let rows = goal_table(&iso, &eps, &ms, &SetSampler::new(a.grid.seed))?;
    let text = match a.format {
        Format::Csv => goal_csv(&iso, &rows)?,
        Format::Json => goal_json(&iso, &rows)?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn selftest(a: &SelftestArgs) -> Result<ExitCode> {
    let fault = a.fault.map(|f| match f {
        FaultArg::TieBreak => Fault::TieBreak,
        FaultArg::Unitarity => Fault::Unitarity,
    });
    let checks = selftest::run(fault);
    let mut failed = 0;
    for c in &checks {
        if c.passed {
            println!("PASS {}", c.name);
        } else {
            failed += 1;
            println!("FAIL {}: {}", c.name, c.detail);
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
