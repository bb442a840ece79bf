//! On-disk formats: space JSON, isomorphism sidecar plus binary matrix, and
//! certificate JSON.
//!
//! Space files hold `{"label", "points", "edges" | "dist"}` with exactly one
//! of the last two. An isomorphism is a JSON sidecar
//! `{"source_space", "target_space", "matrix", "provenance"}` whose paths are
//! relative to the sidecar's directory; the matrix uses
//! [`operator::io`](crate::operator::io). Maps are JSON objects keyed by
//! point id, in point order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iso::{Provenance, ProvenanceKind, SpatialIsomorphism, SupportParams};
use crate::operator::{io, C64};
use crate::rigidity::{BijectionCertificate, CertificateReport};
use crate::space::{CoarseMap, FiniteMetricSpace, Graph, PointId};

pub const CERTIFICATE_SCHEMA: &str = "roe-certificate v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    label: String,
    points: Vec<PointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[PointId; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dist: Option<Vec<Vec<f64>>>,
}

pub fn space_from_json(text: &str) -> Result<FiniteMetricSpace> {
    let file: SpaceFile = serde_json::from_str(text)?;
    match (file.edges, file.dist) {
        (Some(edges), None) => {
            let space_index = |id: &PointId| {
                file.points
                    .iter()
                    .position(|p| p == id)
                    .ok_or_else(|| Error::UnknownPoint(id.to_string()))
            };
            let pairs = edges
                .iter()
                .map(|[a, b]| Ok((space_index(a)?, space_index(b)?)))
                .collect::<Result<Vec<_>>>()?;
            let g = Graph::from_edges(file.label, file.points, &pairs)?;
            g.to_space()
        }
        (None, Some(dist)) => FiniteMetricSpace::build(file.label, file.points, &dist),
        (Some(_), Some(_)) => Err(Error::Format("space file has both \"edges\" and \"dist\"".into())),
        (None, None) => Err(Error::Format("space file needs \"edges\" or \"dist\"".into())),
    }
}

pub fn read_space(path: &Path) -> Result<FiniteMetricSpace> {
    space_from_json(&fs::read_to_string(path)?)
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    let file = SpaceFile {
        label: g.label.clone(),
        points: g.points.clone(),
        edges: Some(
            g.edges()
                .into_iter()
                .map(|(a, b)| [g.points[a].clone(), g.points[b].clone()])
                .collect(),
        ),
        dist: None,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn space_to_json(s: &FiniteMetricSpace) -> Result<String> {
    let file = SpaceFile {
        label: s.label().to_string(),
        points: s.points().to_vec(),
        edges: None,
        dist: Some(s.to_table()),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

fn map_json(m: &CoarseMap) -> IndexMap<String, PointId> {
    (0..m.domain().len())
        .map(|x| (m.domain().id(x).to_string(), m.codomain().id(m.apply(x)).clone()))
        .collect()
}

fn map_from_json(
    table: &IndexMap<String, PointId>,
    domain: &Arc<FiniteMetricSpace>,
    codomain: &Arc<FiniteMetricSpace>,
) -> Result<Vec<usize>> {
    let mut out = vec![None; domain.len()];
    for (k, v) in table {
        let x = (0..domain.len())
            .find(|&x| domain.id(x).to_string() == *k)
            .ok_or_else(|| Error::UnknownPoint(k.clone()))?;
        out[x] = Some(codomain.index_of(v)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(x, y)| y.ok_or_else(|| Error::Format(format!("map misses point {}", domain.id(x)))))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindJson {
    Bijection,
    Perturbed,
    File,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProvenanceJson {
    kind: KindJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f: Option<IndexMap<String, PointId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phases: Option<IndexMap<String, [f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perturbation_propagation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IsoFile {
    source_space: String,
    target_space: String,
    matrix: String,
    provenance: ProvenanceJson,
}

/// `path` as seen from `dir` when it lies below it, else as given.
fn relative_to(path: &Path, dir: &Path) -> String {
    let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let (p, d) = (abs(path), abs(dir));
    p.strip_prefix(&d).unwrap_or(&p).to_string_lossy().into_owned()
}

fn sidecar_dir(path: &Path) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf()
}

/// Writes the sidecar at `path` and the matrix next to it with extension
/// `.bin`. The space files must already exist.
pub fn write_iso(iso: &SpatialIsomorphism, path: &Path, source_space: &Path, target_space: &Path) -> Result<()> {
    let dir = sidecar_dir(path);
    let bin = path.with_extension("bin");
    fs::write(&bin, io::encode_matrix(iso.matrix()))?;
    let p = iso.provenance();
    let src = iso.source();
    let f = iso.generating_map().map(|m| map_json(&m));
    let phases = p.phases.as_ref().map(|ph| {
        ph.iter()
            .enumerate()
            .map(|(x, z)| (src.id(x).to_string(), [z.re, z.im]))
            .collect()
    });
    let file = IsoFile {
        source_space: relative_to(source_space, &dir),
        target_space: relative_to(target_space, &dir),
        matrix: relative_to(&bin, &dir),
        provenance: ProvenanceJson {
            kind: match p.kind {
                ProvenanceKind::Bijection => KindJson::Bijection,
                ProvenanceKind::Perturbed => KindJson::Perturbed,
                ProvenanceKind::File => KindJson::File,
            },
            f,
            phases,
            radius: p.radius,
            seed: p.seed,
            perturbation_propagation: p.perturbation_propagation,
        },
    };
    fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

/// Reads a sidecar and everything it names. A shared space file yields one
/// shared space.
pub fn read_iso(path: &Path) -> Result<SpatialIsomorphism> {
    let file: IsoFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let dir = sidecar_dir(path);
    let src_path = dir.join(&file.source_space);
    let tgt_path = dir.join(&file.target_space);
    let source = Arc::new(read_space(&src_path)?);
    let target = if src_path == tgt_path {
        source.clone()
    } else {
        Arc::new(read_space(&tgt_path)?)
    };
    let u = io::read_matrix(fs::File::open(dir.join(&file.matrix))?)?;
    let pj = file.provenance;
    let f = pj.f.as_ref().map(|t| map_from_json(t, &source, &target)).transpose()?;
    let phases = match &pj.phases {
        None => None,
        Some(t) => {
            let mut out = vec![C64::new(1.0, 0.0); source.len()];
            for (k, [re, im]) in t {
                let x = source.index_of(&k_to_id(k, &source)?)?;
                out[x] = C64::new(*re, *im);
            }
            Some(out)
        }
    };
    let provenance = Provenance {
        kind: match pj.kind {
            KindJson::Bijection => ProvenanceKind::Bijection,
            KindJson::Perturbed => ProvenanceKind::Perturbed,
            KindJson::File => ProvenanceKind::File,
        },
        f,
        phases,
        radius: pj.radius,
        seed: pj.seed,
        perturbation_propagation: pj.perturbation_propagation,
    };
    SpatialIsomorphism::new(source, target, u, provenance)
}

fn k_to_id(k: &str, space: &FiniteMetricSpace) -> Result<PointId> {
    space
        .points()
        .iter()
        .find(|p| p.to_string() == k)
        .cloned()
        .ok_or_else(|| Error::UnknownPoint(k.to_string()))
}

/// Reads a bijection `{id: id}` on `space`.
pub fn read_bijection(path: &Path, space: &Arc<FiniteMetricSpace>) -> Result<CoarseMap> {
    let table: IndexMap<String, PointId> = serde_json::from_str(&fs::read_to_string(path)?)?;
    let t = map_from_json(&table, space, space)?;
    let f = CoarseMap::new(space.clone(), space.clone(), t)?;
    f.inverse()?;
    Ok(f)
}

#[derive(Serialize)]
struct ParamsJson {
    strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    delta: f64,
    tie_break: String,
    sampler_seed: u64,
}

#[derive(Serialize)]
struct WitnessJson {
    direction: String,
    set: Vec<PointId>,
}

#[derive(Serialize)]
struct AttemptJson {
    #[serde(flatten)]
    params: IndexMap<String, f64>,
    stage: String,
    deficiency: Vec<PointId>,
    neighborhood: Vec<PointId>,
}

#[derive(Serialize)]
struct FailureJson {
    check: String,
    expected: String,
    found: String,
}

#[derive(Serialize)]
struct CertificateJson {
    schema: &'static str,
    h: IndexMap<String, PointId>,
    f_raw: IndexMap<String, PointId>,
    g_raw: IndexMap<String, PointId>,
    params: ParamsJson,
    closeness_h_f: f64,
    goal_residual: f64,
    goal_met: bool,
    goal_witness: WitnessJson,
    goal_exhaustive: bool,
    expansion: IndexMap<String, f64>,
    expansion_inv: IndexMap<String, f64>,
    attempts: Vec<AttemptJson>,
    verified: bool,
    failures: Vec<FailureJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closeness_to_truth: Option<f64>,
}

fn params_map(p: SupportParams) -> IndexMap<String, f64> {
    match p {
        SupportParams::Support { eps, m } => IndexMap::from([("eps".into(), eps), ("m".into(), m)]),
        SupportParams::Flattened { r, threshold } => {
            IndexMap::from([("r".into(), r), ("threshold".into(), threshold)])
        }
        SupportParams::Explicit => IndexMap::new(),
    }
}

fn ids(space: &FiniteMetricSpace, set: &crate::space::PointSet) -> Vec<PointId> {
    set.iter().map(|&x| space.id(x).clone()).collect()
}

/// Radius keys are printed as they would be typed: `1`, `2.5`.
fn radius_key(r: f64) -> String {
    format!("{r}")
}

/// The certificate as JSON, with the verdict of `report`.
pub fn certificate_to_json(cert: &BijectionCertificate, report: &CertificateReport) -> Result<String> {
    let src = cert.h.domain();
    let tgt = cert.h.codomain();
    let pm = params_map(cert.params);
    let witness_space = match cert.goal.worst_direction {
        crate::iso::Direction::Forward => src,
        crate::iso::Direction::Backward => tgt,
    };
    let doc = CertificateJson {
        schema: CERTIFICATE_SCHEMA,
        h: map_json(&cert.h),
        f_raw: map_json(&cert.f_raw),
        g_raw: map_json(&cert.g_raw),
        params: ParamsJson {
            strategy: cert.strategy.to_string(),
            eps: pm.get("eps").copied(),
            m: pm.get("m").copied(),
            r: pm.get("r").copied(),
            threshold: pm.get("threshold").copied(),
            delta: cert.delta,
            tie_break: cert.tie_break.to_string(),
            sampler_seed: cert.sampler.seed,
        },
        closeness_h_f: cert.closeness_h_f,
        goal_residual: cert.goal.residual,
        goal_met: cert.goal_met(),
        goal_witness: WitnessJson {
            direction: cert.goal.worst_direction.to_string(),
            set: ids(witness_space, &cert.goal.worst_set),
        },
        goal_exhaustive: cert.goal.exhaustive,
        expansion: cert.expansion_h.samples.iter().map(|&(r, s)| (radius_key(r), s)).collect(),
        expansion_inv: cert.expansion_h_inv.samples.iter().map(|&(r, s)| (radius_key(r), s)).collect(),
        attempts: cert
            .attempts
            .iter()
            .map(|a| {
                let (dom, cod) = match a.stage {
                    crate::rigidity::Stage::HallForward => (src, tgt),
                    crate::rigidity::Stage::HallBackward => (tgt, src),
                };
                AttemptJson {
                    params: params_map(a.params),
                    stage: a.stage.to_string(),
                    deficiency: ids(dom, &a.deficiency),
                    neighborhood: ids(cod, &a.neighborhood),
                }
            })
            .collect(),
        verified: report.passed(),
        failures: report
            .failures()
            .map(|c| FailureJson {
                check: c.name.to_string(),
                expected: c.expected.clone(),
                found: c.found.clone(),
            })
            .collect(),
        closeness_to_truth: report.closeness_to_truth,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}
