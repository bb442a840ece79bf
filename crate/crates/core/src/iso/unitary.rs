use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operator::{LinearOperator, C64};
use crate::space::{FiniteMetricSpace, DIST_TOL};

/// Greedy partition into cells of diameter `≤ radius`: each unassigned point
/// (in index order) opens a cell and absorbs every later unassigned point
/// within `radius` of all current members.
pub fn local_partition(space: &FiniteMetricSpace, radius: f64) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut assigned = vec![false; n];
    let mut cells = Vec::new();
    for p in 0..n {
        if assigned[p] {
            continue;
        }
        assigned[p] = true;
        let mut cell = vec![p];
        for q in (p + 1)..n {
            if !assigned[q] && cell.iter().all(|&c| space.dist(c, q) <= radius + DIST_TOL) {
                assigned[q] = true;
                cell.push(q);
            }
        }
        cells.push(cell);
    }
    cells
}

/// Haar-distributed `k × k` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<C64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(k, k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..k {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..k {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Unit-modulus phases `e^{iθ_x}` with `θ_x` uniform, seeded.
pub fn random_phases(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// Block-diagonal unitary over [`local_partition`] cells with an independent
/// Haar block per cell; propagation is at most `radius`. Deterministic per
/// seed.
pub fn random_local_unitary(
    space: Arc<FiniteMetricSpace>,
    radius: f64,
    seed: u64,
) -> Result<LinearOperator> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParams(format!("negative radius {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let mut w = DMatrix::zeros(n, n);
    for cell in local_partition(&space, radius) {
        let block = haar_unitary(cell.len(), &mut rng);
        for (i, &y) in cell.iter().enumerate() {
            for (j, &x) in cell.iter().enumerate() {
                w[(y, x)] = block[(i, j)];
            }
        }
    }
    LinearOperator::on(space, w)
}
