//! Release gate: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roe_core::files::certificate_to_json;
use roe_core::functions::separated_family;
use roe_core::iso::{goal_table, random_phases, SetSampler, SpatialIsomorphism, SupportFamily};
use roe_core::operator::{op_norm, LinearOperator, C64};
use roe_core::rigidity::{
    audit_certificate, csb_combine, extract, hall_check, ExtractParams, HallWitness, DEFAULT_EPS_GRID,
    DEFAULT_M_GRID,
};
use roe_core::space::generators::{grid, path, random_bce};
use roe_core::space::{closeness, CoarseMap, FiniteMetricSpace, PointSet};
use roe_core::Error;

type Outcome = Result<String, String>;

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn ok_or<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn round_trip_exactness() -> Outcome {
    let s = Arc::new(ok_or(grid(8, 8))?);
    let mut slowest = Duration::ZERO;
    for seed in 0..50 {
        let f = ok_or(random_bce(s.clone(), 3.0, seed))?;
        let moved = (0..64).map(|x| s.dist(x, f.apply(x))).fold(0.0, f64::max);
        if moved > 3.0 {
            return fail(format!("seed {seed}: generator moved a point by {moved}"));
        }
        let start = Instant::now();
        let iso = ok_or(SpatialIsomorphism::from_bijection(&f, None))?;
        let cert = ok_or(extract(&iso, &ExtractParams::fixed(0.5, 0.0)))?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        if cert.h != f {
            return fail(format!("seed {seed}: h differs from f"));
        }
        if cert.goal_residual() != 0.0 {
            return fail(format!("seed {seed}: goal residual {}", cert.goal_residual()));
        }
        if took >= Duration::from_secs(5) {
            return fail(format!("seed {seed}: run took {took:?}"));
        }
    }
    Ok(format!("50/50 exact, slowest run {slowest:.2?}"))
}

fn phase_invariance() -> Outcome {
    let s = Arc::new(ok_or(path(20))?);
    let f = ok_or(random_bce(s.clone(), 3.0, 99))?;
    let certificate = |phases: Option<&[C64]>| -> Result<String, String> {
        let iso = ok_or(SpatialIsomorphism::from_bijection(&f, phases))?;
        let cert = ok_or(extract(&iso, &ExtractParams::default()))?;
        let report = ok_or(audit_certificate(&cert, &iso, Some(&f)))?;
        ok_or(certificate_to_json(&cert, &report))
    };
    let plain = certificate(None)?;
    for seed in 0..20 {
        let phases = random_phases(20, seed);
        if certificate(Some(&phases))? != plain {
            return fail(format!("phase seed {seed}: certificate bytes differ"));
        }
    }
    Ok(format!("20/20 byte-identical ({} bytes)", plain.len()))
}

/// One of the eight symmetries of a `w × w` grid.
fn dihedral(s: &Arc<FiniteMetricSpace>, w: usize, k: u64) -> Result<CoarseMap, String> {
    ok_or(CoarseMap::from_fn(s.clone(), s.clone(), |x| {
        let (r, c) = (x / w, x % w);
        let m = w - 1;
        let (r, c) = match k % 8 {
            0 => (r, c),
            1 => (c, m - r),
            2 => (m - r, m - c),
            3 => (m - c, r),
            4 => (r, m - c),
            5 => (m - r, c),
            6 => (c, r),
            _ => (m - c, m - r),
        };
        r * w + c
    }))
}

fn perturbation_robustness() -> Outcome {
    let w = 6;
    let s = Arc::new(ok_or(grid(w, w))?);
    let runs = 30;
    let mut successes = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut notes = Vec::new();
    for seed in 0..runs {
        let f_true = dihedral(&s, w, seed)?;
        if ok_or(f_true.expansion_profile(&[1.0]))?.samples[0].1 != 1.0 {
            return fail("grid symmetry is not an isometry");
        }
        let iso = ok_or(
            SpatialIsomorphism::from_bijection(&f_true, Some(&random_phases(w * w, seed + 1000)))
                .and_then(|i| i.perturb_locally(1.0, seed)),
        )?;
        match extract(&iso, &ExtractParams::default()) {
            Ok(cert) => {
                let roe_core::iso::SupportParams::Support { m, .. } = cert.params else {
                    return fail("unexpected parameter kind");
                };
                let c = ok_or(closeness(&cert.h, &f_true))?;
                let bound = 2.0 * (m + 1.0);
                worst_ratio = worst_ratio.max(c / bound);
                if m <= 3.0 && c <= bound {
                    successes += 1;
                } else {
                    notes.push(format!("seed {seed}: m {m}, closeness {c} vs bound {bound}"));
                }
            }
            Err(Error::ExtractionFailed(d)) => {
                notes.push(format!(
                    "seed {seed}: extraction failed at {} after {} attempts, witness {:?}",
                    d.stage,
                    d.attempts.len(),
                    d.witness
                ));
            }
            Err(e) => return fail(format!("seed {seed}: {e}")),
        }
    }
    for n in &notes {
        println!("    {n}");
    }
    let rate = successes as f64 / runs as f64;
    let msg = format!("{successes}/{runs} recovered, worst closeness/bound {worst_ratio:.2}");
    if rate >= 0.9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn enumerate_hall(fam: &SupportFamily) -> bool {
    let n = fam.len();
    (1u32..(1 << n)).all(|mask| {
        let a: PointSet = (0..n).filter(|&k| mask >> k & 1 == 1).collect();
        a.len() <= fam.image(&a).len()
    })
}

fn hall_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut matched, mut deficient) = (0, 0);
    for trial in 0..500 {
        let nx = rng.random_range(1..=12);
        let ny = rng.random_range(1..=12);
        let p = rng.random_range(0.02..0.5);
        let sets: Vec<PointSet> = (0..nx).map(|_| (0..ny).filter(|_| rng.random_bool(p)).collect()).collect();
        let fam = ok_or(SupportFamily::new(Arc::new(ok_or(path(nx))?), Arc::new(ok_or(path(ny))?), sets))?;
        let truth = enumerate_hall(&fam);
        match hall_check(&fam) {
            HallWitness::Matching(m) => {
                let distinct: PointSet = m.iter().copied().collect();
                if !truth || distinct.len() != nx || (0..nx).any(|x| !fam.get(x).contains(&m[x])) {
                    return fail(format!("trial {trial}: matching disagrees with enumeration"));
                }
                matched += 1;
            }
            HallWitness::Deficiency { set, neighborhood } => {
                let counted = fam.image(&set);
                if truth || counted != neighborhood || set.len() <= counted.len() {
                    return fail(format!("trial {trial}: deficiency does not re-verify"));
                }
                deficient += 1;
            }
        }
    }
    Ok(format!("500/500 agree ({matched} matchings, {deficient} deficiencies)"))
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
    v
}

fn csb_dichotomy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let n = rng.random_range(1..=30);
        let x = Arc::new(ok_or(path(n))?);
        let y = Arc::new(ok_or(path(n))?);
        let f = ok_or(CoarseMap::new(x.clone(), y.clone(), random_permutation(&mut rng, n)))?;
        let g = ok_or(CoarseMap::new(y.clone(), x.clone(), random_permutation(&mut rng, n)))?;
        let h = ok_or(csb_combine(&f, &g))?;
        if !h.is_bijective() {
            return fail(format!("trial {trial}: h not bijective"));
        }
        for p in 0..n {
            let via_g = (0..n).find(|&q| g.apply(q) == p);
            if h.apply(p) != f.apply(p) && Some(h.apply(p)) != via_g {
                return fail(format!("trial {trial}: h({p}) is neither f({p}) nor g⁻¹({p})"));
            }
        }
        let h_inv = ok_or(csb_combine(&f, &ok_or(f.inverse())?))?;
        if h_inv != f {
            return fail(format!("trial {trial}: mutually inverse pair did not give f"));
        }
    }
    Ok("200/200 pairs".into())
}

fn random_complex(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn numerical_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = Arc::new(ok_or(path(20))?);
    let mut worst_norm: f64 = 0.0;
    let mut worst_ce: f64 = 0.0;
    for trial in 0..100 {
        let m = random_complex(&mut rng, 20, 20);
        let oracle = m.clone().singular_values().max();
        let ours = ok_or(op_norm(&m))?;
        worst_norm = worst_norm.max((ours - oracle).abs());
        if (ours - oracle).abs() > 1e-8 {
            return fail(format!("trial {trial}: op_norm {ours} vs SVD {oracle}"));
        }

        let a = ok_or(LinearOperator::on(s.clone(), m))?;
        let e = ok_or(a.conditional_expectation())?;
        let ee = ok_or(e.conditional_expectation())?;
        let fd: Vec<C64> = (0..20).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let gd: Vec<C64> = (0..20).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let f = ok_or(LinearOperator::diagonal(s.clone(), &fd))?;
        let g = ok_or(LinearOperator::diagonal(s.clone(), &gd))?;
        let fag = ok_or(f.compose(&a).and_then(|x| x.compose(&g)))?;
        let lhs = ok_or(fag.conditional_expectation())?;
        let rhs = ok_or(f.compose(&e).and_then(|x| x.compose(&g)))?;
        let idem = max_entry(&(ee.entries() - e.entries()));
        let bimod = max_entry(&(lhs.entries() - rhs.entries()));
        let contraction = ok_or(e.op_norm())? - ok_or(a.op_norm())?;
        worst_ce = worst_ce.max(idem).max(bimod).max(contraction);
        if idem > 1e-9 || bimod > 1e-9 || contraction > 1e-9 {
            return fail(format!("trial {trial}: idempotence {idem:e}, bimodule {bimod:e}, contraction {contraction:e}"));
        }
    }

    let mut worst_iso: f64 = 0.0;
    for trial in 0..100u64 {
        let iso = ok_or(
            SpatialIsomorphism::from_bijection(&ok_or(random_bce(s.clone(), 2.0, trial))?, Some(&random_phases(20, trial)))
                .and_then(|i| i.perturb_locally(1.0 + (trial % 3) as f64, trial)),
        )?;
        let band = (trial % 4) as f64 + 1.0;
        let keep: PointSet = (0..20).filter(|_| rng.random_bool(0.5)).collect();
        let dense = random_complex(&mut rng, 20, 20);
        let banded = DMatrix::from_fn(20, 20, |i, j| {
            if s.dist(i, j) <= band && keep.contains(&j) {
                dense[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let a = ok_or(LinearOperator::on(s.clone(), banded))?;
        let image = ok_or(iso.apply(&a))?;
        let gap = (ok_or(image.op_norm())? - ok_or(a.op_norm())?).abs();
        worst_iso = worst_iso.max(gap);
        if gap > 1e-8 {
            return fail(format!("trial {trial}: norm changed by {gap:e}"));
        }
        let (ra, rb) = (ok_or(a.numerical_rank(1e-8))?, ok_or(image.numerical_rank(1e-8))?);
        if ra != rb {
            return fail(format!("trial {trial}: rank {ra} became {rb}"));
        }
    }
    Ok(format!(
        "worst op_norm error {worst_norm:.1e}, conditional expectation {worst_ce:.1e}, isometry {worst_iso:.1e}"
    ))
}

fn variation_bound() -> Outcome {
    let s = Arc::new(ok_or(path(200))?);
    let fam = separated_family(&s, 3, 1.0);
    if fam.sets.len() != 3 || !fam.gaps_hold(&s) {
        return fail("could not place three separated sets");
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let need = 2.0 * (fam.scales[i] + fam.scales[j]) as f64;
            if s.set_distance(&fam.sets[i], &fam.sets[j]) < need {
                return fail(format!("sets {i}, {j} closer than {need}"));
            }
        }
    }
    let g = ok_or(fam.bump_sum(s.clone()))?;
    let mut checked = 0;
    for n in [2usize, 3] {
        let excluded = fam.exclusion(&s, n);
        for r in 1..n {
            let v = g.so_variation(r as f64, &excluded);
            if v > r as f64 / n as f64 {
                return fail(format!("n {n}, r {r}: variation {v} > {}", r as f64 / n as f64));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (n, r) pairs within r/n"))
}

fn goal_monotonicity() -> Outcome {
    let spaces = [ok_or(grid(4, 4))?, ok_or(grid(5, 4))?, ok_or(path(12))?, ok_or(path(30))?, ok_or(grid(6, 6))?];
    let eps = DEFAULT_EPS_GRID;
    let ms = DEFAULT_M_GRID;
    let mut rows = 0;
    for k in 0..10u64 {
        let s = Arc::new(spaces[k as usize % spaces.len()].clone());
        let f = ok_or(random_bce(s.clone(), 1.0, k))?;
        let iso = ok_or(
            SpatialIsomorphism::from_bijection(&f, Some(&random_phases(s.len(), k)))
                .and_then(|i| i.perturb_locally(1.0 + (k % 2) as f64, k)),
        )?;
        let t = ok_or(goal_table(&iso, &eps, &ms, &SetSampler::new(k)))?;
        let at = |i: usize, j: usize| t[i * ms.len() + j].estimate.residual;
        for i in 0..eps.len() {
            for j in 0..ms.len() {
                if j + 1 < ms.len() && at(i, j + 1) > at(i, j) + 1e-9 {
                    return fail(format!("iso {k}: residual grows from m {} to {}", ms[j], ms[j + 1]));
                }
                if i + 1 < eps.len() && at(i + 1, j) > at(i, j) + 1e-9 {
                    return fail(format!("iso {k}: residual grows from eps {} to {}", eps[i], eps[i + 1]));
                }
            }
        }
        rows += t.len();
    }
    Ok(format!("10 tables, {rows} rows antitone"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("round-trip exactness", round_trip_exactness),
        ("phase invariance", phase_invariance),
        ("perturbation robustness", perturbation_robustness),
        ("hall oracle equivalence", hall_oracle),
        ("csb dichotomy", csb_dichotomy),
        ("numerical invariants", numerical_invariants),
        ("variation bound", variation_bound),
        ("goal monotonicity", goal_monotonicity),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{:.2?}]", k + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{:.2?}]", k + 1, start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
