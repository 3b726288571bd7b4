//! Obfuscation mechanisms over grid cells.
//!
//! A [`MechanismMatrix`] maps each secret cell to a probability vector over
//! report cells. Infinite distances are `f64::INFINITY` and always map to
//! probability exactly zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geogrid::{offset_length, CellId, GridSpec, PlanarPoint};
use crate::metric::MetricGraph;

const ROW_TOLERANCE: f64 = 1e-9;

/// Loss (or utility distance) between a true cell and a guessed/reported one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    /// 0 on an exact hit, 1 otherwise.
    Binary,
    /// Distance between cell centers, in meters.
    Euclidean,
    /// 0 when the centers are closer than `r` meters, 1 otherwise.
    Threshold(f64),
}

impl Loss {
    pub fn threshold(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("threshold must be positive, got {r}")));
        }
        Ok(Loss::Threshold(r))
    }

    #[inline]
    pub fn eval(&self, grid: &GridSpec, x: CellId, y: CellId) -> f64 {
        match *self {
            Loss::Binary => (x != y) as u8 as f64,
            Loss::Euclidean => grid.euclidean_unchecked(x, y),
            Loss::Threshold(r) => (grid.euclidean_unchecked(x, y) >= r) as u8 as f64,
        }
    }
}

/// Row-stochastic matrix from secrets to reports, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismMatrix {
    grid: GridSpec,
    secrets: Vec<CellId>,
    reports: Vec<CellId>,
    probs: Vec<f64>,
}

impl MechanismMatrix {
    /// `probs` is row-major, one row of `reports.len()` entries per secret.
    /// Secrets and reports must be strictly increasing cell lists.
    pub fn new(grid: GridSpec, secrets: Vec<CellId>, reports: Vec<CellId>, probs: Vec<f64>) -> Result<Self> {
        check_cells(&grid, &secrets, "secrets")?;
        check_cells(&grid, &reports, "reports")?;
        if reports.is_empty() {
            return Err(Error::EmptyReports);
        }
        if probs.len() != secrets.len() * reports.len() {
            return Err(Error::DomainMismatch("matrix size differs from secrets × reports"));
        }
        for (i, row) in probs.chunks(reports.len()).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return Err(Error::InvalidParameter(format!("row of {} has a negative entry", secrets[i])));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::InvalidParameter(format!("row of {} sums to {s}", secrets[i])));
            }
        }
        Ok(Self { grid, secrets, reports, probs })
    }

    /// The mechanism that always reports the true cell.
    pub fn identity(grid: GridSpec, cells: Vec<CellId>) -> Result<Self> {
        let n = cells.len();
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            probs[i * n + i] = 1.0;
        }
        Self::new(grid, cells.clone(), cells, probs)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn secrets(&self) -> &[CellId] {
        &self.secrets
    }

    pub fn reports(&self) -> &[CellId] {
        &self.reports
    }

    pub fn secret_index(&self, x: CellId) -> Option<usize> {
        self.secrets.binary_search(&x).ok()
    }

    pub fn report_index(&self, z: CellId) -> Option<usize> {
        self.reports.binary_search(&z).ok()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.reports.len();
        &self.probs[i * n..(i + 1) * n]
    }

    pub fn row_of(&self, x: CellId) -> Result<&[f64]> {
        let i = self.secret_index(x).ok_or(Error::UnknownSecret { cell: x })?;
        Ok(self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (CellId, &[f64])> {
        self.secrets.iter().copied().zip(self.probs.chunks(self.reports.len()))
    }
}

fn check_cells(grid: &GridSpec, cells: &[CellId], what: &'static str) -> Result<()> {
    for &c in cells {
        grid.check(c)?;
    }
    if cells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

fn sorted_unique(cells: &[CellId]) -> Vec<CellId> {
    let mut v = cells.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Normalizes `weights` in place, summing left to right.
fn normalize(weights: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for &w in weights.iter() {
        total += w;
    }
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
    total
}

#[inline]
fn half_decay(d: f64) -> f64 {
    if d == f64::INFINITY {
        0.0
    } else {
        libm::exp(-0.5 * d)
    }
}

/// One exponential-mechanism row, `K(x)(z) ∝ exp(-dX(x, z) / 2)`, given the
/// distances from `x` to every cell.
pub fn exponential_row_from(distances: &[f64], x: CellId, reports: &[CellId]) -> Result<Vec<f64>> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let mut row: Vec<f64> = reports.iter().map(|z| half_decay(distances[z.index()])).collect();
    if normalize(&mut row) == 0.0 {
        return Err(Error::UnreachableSecret { cell: x });
    }
    Ok(row)
}

/// Exponential mechanism over the metric induced by `g`.
pub fn exponential_mechanism(g: &MetricGraph, secrets: &[CellId], reports: &[CellId]) -> Result<MechanismMatrix> {
    let secrets = sorted_unique(secrets);
    let reports = sorted_unique(reports);
    check_cells(g.grid(), &secrets, "secrets")?;
    check_cells(g.grid(), &reports, "reports")?;
    let mut probs = Vec::with_capacity(secrets.len() * reports.len());
    for &x in &secrets {
        let dist = g.distances_from(x)?;
        probs.extend(exponential_row_from(&dist, x, &reports)?);
    }
    MechanismMatrix::new(*g.grid(), secrets, reports, probs)
}

/// A secret pair and report where the dX-privacy ratio bound fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyViolation {
    pub x: CellId,
    pub x_prime: CellId,
    pub report: CellId,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks `K(x)(z) <= exp(dX(x, x'))·K(x')(z) + tolerance` for all secret
/// pairs and reports. With `dX = ∞` the bound is vacuous.
pub fn verify_dx_privacy(k: &MechanismMatrix, g: &MetricGraph, tolerance: f64) -> Result<Vec<PrivacyViolation>> {
    if k.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::new();
    for (i, &x) in k.secrets().iter().enumerate() {
        let dist = g.distances_from(x)?;
        let row_x = k.row(i);
        for (j, &xp) in k.secrets().iter().enumerate() {
            if i == j {
                continue;
            }
            let d = dist[xp.index()];
            if d == f64::INFINITY {
                continue;
            }
            let factor = libm::exp(d);
            let row_xp = k.row(j);
            for (zi, (&p, &q)) in row_x.iter().zip(row_xp).enumerate() {
                let rhs = factor * q;
                if p > rhs + tolerance {
                    out.push(PrivacyViolation { x, x_prime: xp, report: k.reports()[zi], lhs: p, rhs });
                }
            }
        }
    }
    Ok(out)
}

/// Distinguishability rate for planar Laplace, in 1/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonConfig {
    epsilon: f64,
}

impl EpsilonConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    /// `ε = l_star / r_star`: level `l_star` is reached at `r_star` meters.
    pub fn from_radius(l_star: f64, r_star: f64) -> Result<Self> {
        if !(r_star > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r_star}")));
        }
        Self::new(l_star / r_star)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Continuous planar Laplace draw around `x`.
///
/// The angle is uniform; the radius is Gamma(2, 1/ε), drawn as the sum of
/// two Exp(ε) variables.
pub fn planar_laplace_sample<R: Rng + ?Sized>(x: PlanarPoint, cfg: &EpsilonConfig, rng: &mut R) -> PlanarPoint {
    let theta = TAU * rng.gen::<f64>();
    // gen::<f64>() is in [0, 1), so 1 - u is in (0, 1].
    let e1 = -libm::log(1.0 - rng.gen::<f64>());
    let e2 = -libm::log(1.0 - rng.gen::<f64>());
    let r = (e1 + e2) / cfg.epsilon;
    PlanarPoint::new(x.east + r * libm::cos(theta), x.north + r * libm::sin(theta))
}

/// Per-offset planar Laplace weights `exp(-ε·d)` indexed by
/// `|Δrow| * nx + |Δcol|`.
pub(crate) fn laplace_offset_weights(grid: &GridSpec, epsilon: f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut w = Vec::with_capacity(grid.len());
    for dr in 0..ny {
        for dc in 0..nx {
            w.push(libm::exp(-epsilon * offset_length(dc, dr) * grid.cell_size()));
        }
    }
    w
}

#[inline]
pub(crate) fn offset_slot(grid: &GridSpec, x: CellId, z: CellId) -> usize {
    let (cx, rx) = grid.col_row(x);
    let (cz, rz) = grid.col_row(z);
    rx.abs_diff(rz) as usize * grid.nx() as usize + cx.abs_diff(cz) as usize
}

/// Discretized planar Laplace: `K(x)(z) ∝ exp(-ε·d_euc(x, z))` over cell
/// centers, renormalized over `reports`.
pub fn planar_laplace_matrix(
    spec: &GridSpec,
    cfg: &EpsilonConfig,
    secrets: &[CellId],
    reports: &[CellId],
) -> Result<MechanismMatrix> {
    let secrets = sorted_unique(secrets);
    let reports = sorted_unique(reports);
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    check_cells(spec, &secrets, "secrets")?;
    check_cells(spec, &reports, "reports")?;
    let weights = laplace_offset_weights(spec, cfg.epsilon);
    let mut probs = Vec::with_capacity(secrets.len() * reports.len());
    for &x in &secrets {
        let start = probs.len();
        probs.extend(reports.iter().map(|&z| weights[offset_slot(spec, x, z)]));
        if normalize(&mut probs[start..]) == 0.0 {
            return Err(Error::UnreachableSecret { cell: x });
        }
    }
    MechanismMatrix::new(*spec, secrets, reports, probs)
}

/// `E_K(x) = Σ_z K(x)(z)·loss(x, z)`.
pub fn expected_error(k: &MechanismMatrix, x: CellId, loss: &Loss) -> Result<f64> {
    let row = k.row_of(x)?;
    let mut total = 0.0;
    for (&z, &p) in k.reports().iter().zip(row) {
        total += p * loss.eval(k.grid(), x, z);
    }
    Ok(total)
}

/// Level reached after `n` uses of a mechanism at level `dx`.
pub fn compose_level(dx: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("composition needs at least one use".into()));
    }
    if !(dx >= 0.0) {
        return Err(Error::Negative { what: "level", value: dx });
    }
    Ok(n as f64 * dx)
}

/// Inverse-CDF draw of an index from a probability row.
pub fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
