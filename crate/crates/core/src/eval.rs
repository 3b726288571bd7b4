//! Bayesian privacy and utility evaluation.
//!
//! Privacy is the expected loss of an adversary who knows a prior over the
//! user's location, observes a report, and remaps it with the strategy that
//! minimizes its expected loss. Utility is the expected loss between the
//! true and the reported cell, without remapping.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geogrid::{CellId, GeoCoord, GridSpec};
use crate::mech::{laplace_offset_weights, offset_slot, EpsilonConfig, Loss, MechanismMatrix};

const PRIOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckinRecord {
    pub user: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub coord: GeoCoord,
    pub venue: String,
}

impl CheckinRecord {
    pub fn new(user: impl Into<String>, timestamp: i64, lat: f64, lon: f64, venue: impl Into<String>) -> Result<Self> {
        Ok(Self { user: user.into(), timestamp, coord: GeoCoord::new(lat, lon)?, venue: venue.into() })
    }
}

/// Probability distribution over grid cells, supported inside a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    grid: GridSpec,
    p: Vec<f64>,
    region: Vec<CellId>,
}

impl Prior {
    /// `p` holds one entry per grid cell; entries outside `region` must be 0.
    pub fn new(grid: GridSpec, p: Vec<f64>, region: &[CellId]) -> Result<Self> {
        if p.len() != grid.len() {
            return Err(Error::DomainMismatch("prior length differs from grid size"));
        }
        let region = sorted_region(&grid, region)?;
        let mut inside = vec![false; grid.len()];
        for c in &region {
            inside[c.index()] = true;
        }
        let mut total = 0.0;
        for (i, &v) in p.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Negative { what: "probability", value: v });
            }
            if v > 0.0 && !inside[i] {
                return Err(Error::DomainMismatch("prior mass outside its region"));
            }
            total += v;
        }
        if (total - 1.0).abs() > PRIOR_TOLERANCE {
            return Err(Error::InvalidParameter(alloc::format!("prior sums to {total}")));
        }
        Ok(Self { grid, p, region })
    }

    /// Prior proportional to nonnegative `weights` over `region`.
    pub fn from_weights(grid: GridSpec, weights: &[(CellId, f64)], region: &[CellId]) -> Result<Self> {
        let mut p = vec![0.0; grid.len()];
        for &(c, w) in weights {
            grid.check(c)?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Negative { what: "weight", value: w });
            }
            p[c.index()] += w;
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        for v in &mut p {
            *v /= total;
        }
        Self::new(grid, p, region)
    }

    pub fn uniform(grid: GridSpec, cells: &[CellId]) -> Result<Self> {
        let w: Vec<(CellId, f64)> = cells.iter().map(|&c| (c, 1.0)).collect();
        Self::from_weights(grid, &w, cells)
    }

    pub fn point(grid: GridSpec, x: CellId) -> Result<Self> {
        Self::uniform(grid, &[x])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn prob(&self, c: CellId) -> f64 {
        self.p[c.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn region(&self) -> &[CellId] {
        &self.region
    }

    /// Cells with positive probability, in increasing order.
    pub fn support(&self) -> Vec<CellId> {
        self.region.iter().copied().filter(|c| self.p[c.index()] > 0.0).collect()
    }

    /// `α·self + (1 − α)·other`, over the union of both regions.
    pub fn mix(&self, other: &Prior, alpha: f64) -> Result<Prior> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(alloc::format!("mixing weight {alpha} outside [0, 1]")));
        }
        let p = self.p.iter().zip(&other.p).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let mut region = self.region.clone();
        region.extend_from_slice(&other.region);
        Prior::new(self.grid, p, &region)
    }
}

fn sorted_region(grid: &GridSpec, region: &[CellId]) -> Result<Vec<CellId>> {
    let mut r = region.to_vec();
    for &c in &r {
        grid.check(c)?;
    }
    r.sort_unstable();
    r.dedup();
    Ok(r)
}

/// Snaps every check-in to its cell and counts those inside `region`.
fn region_counts<'a, I>(records: I, spec: &GridSpec, inside: &[bool]) -> Result<(Vec<f64>, usize)>
where
    I: IntoIterator<Item = &'a CheckinRecord>,
{
    let mut counts = vec![0.0; spec.len()];
    let mut n = 0;
    for r in records {
        let p = spec.project(r.coord.lat, r.coord.lon)?;
        if let Some(c) = spec.cell_of(p) {
            if inside[c.index()] {
                counts[c.index()] += 1.0;
                n += 1;
            }
        }
    }
    Ok((counts, n))
}

fn region_mask(spec: &GridSpec, region: &[CellId]) -> Vec<bool> {
    let mut inside = vec![false; spec.len()];
    for c in region {
        inside[c.index()] = true;
    }
    inside
}

/// Empirical frequency of check-ins per cell inside `region`.
pub fn build_prior(records: &[CheckinRecord], spec: &GridSpec, region: &[CellId]) -> Result<Prior> {
    let region = sorted_region(spec, region)?;
    let inside = region_mask(spec, &region);
    let (mut counts, n) = region_counts(records, spec, &inside)?;
    if n == 0 {
        return Err(Error::EmptyRegion { cells: region.len() });
    }
    for v in &mut counts {
        *v /= n as f64;
    }
    Prior::new(*spec, counts, &region)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPrior {
    pub user: String,
    /// Check-ins of this user inside the region.
    pub checkins: usize,
    pub prior: Prior,
}

/// Per-user priors from each user's own in-region check-ins, ordered by user
/// id. Users with fewer than `min_checkins` in-region check-ins are dropped.
pub fn user_priors(
    records: &[CheckinRecord],
    spec: &GridSpec,
    region: &[CellId],
    min_checkins: usize,
) -> Result<Vec<UserPrior>> {
    let region = sorted_region(spec, region)?;
    let inside = region_mask(spec, &region);
    let mut by_user: BTreeMap<&str, Vec<&CheckinRecord>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user.as_str()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (user, recs) in by_user {
        let (mut counts, n) = region_counts(recs.iter().copied(), spec, &inside)?;
        if n == 0 || n < min_checkins {
            continue;
        }
        for v in &mut counts {
            *v /= n as f64;
        }
        out.push(UserPrior { user: user.into(), checkins: n, prior: Prior::new(*spec, counts, &region)? });
    }
    Ok(out)
}

/// Adversary remapping: one guess per report of a mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemapStrategy {
    reports: Vec<CellId>,
    guesses: Vec<CellId>,
}

impl RemapStrategy {
    pub fn new(reports: Vec<CellId>, guesses: Vec<CellId>) -> Result<Self> {
        if reports.len() != guesses.len() {
            return Err(Error::DomainMismatch("strategy must map every report"));
        }
        Ok(Self { reports, guesses })
    }

    pub fn identity(reports: &[CellId]) -> Self {
        Self { reports: reports.to_vec(), guesses: reports.to_vec() }
    }

    pub fn reports(&self) -> &[CellId] {
        &self.reports
    }

    pub fn guesses(&self) -> &[CellId] {
        &self.guesses
    }

    pub fn guess(&self, report_index: usize) -> CellId {
        self.guesses[report_index]
    }
}

/// Where the adversary's guesses may fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuessSet {
    /// Cells with positive prior probability.
    #[default]
    Support,
    /// Every grid cell.
    AllCells,
}

fn check_prior_within(k: &MechanismMatrix, prior: &Prior) -> Result<Vec<(usize, CellId, f64)>> {
    if k.grid() != prior.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::new();
    for x in prior.support() {
        let i = k.secret_index(x).ok_or(Error::DomainMismatch("prior support outside the mechanism's secrets"))?;
        out.push((i, x, prior.prob(x)));
    }
    Ok(out)
}

/// The loss-minimizing strategy `h*` for prior `prior`, guesses restricted to
/// the prior's support.
pub fn optimal_remap(k: &MechanismMatrix, prior: &Prior, loss: &Loss) -> Result<RemapStrategy> {
    optimal_remap_with(k, prior, loss, GuessSet::Support)
}

/// [`optimal_remap`] with an explicit guess set.
///
/// Each report is remapped independently to the guess minimizing
/// `Σ_x π(x)·K(x)(z)·loss(x, guess)`; ties go to the smallest cell index.
/// Reports that no secret in the support can produce keep the identity.
pub fn optimal_remap_with(k: &MechanismMatrix, prior: &Prior, loss: &Loss, guesses: GuessSet) -> Result<RemapStrategy> {
    let support = check_prior_within(k, prior)?;
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let candidates: Vec<CellId> = match guesses {
        GuessSet::Support => support.iter().map(|&(_, x, _)| x).collect(),
        GuessSet::AllCells => k.grid().cells().collect(),
    };
    let grid = k.grid();
    let mut weights: Vec<(CellId, f64)> = Vec::with_capacity(support.len());
    let mut out = Vec::with_capacity(k.reports().len());
    for (zi, &z) in k.reports().iter().enumerate() {
        weights.clear();
        for &(i, x, px) in &support {
            let w = px * k.row(i)[zi];
            if w > 0.0 {
                weights.push((x, w));
            }
        }
        if weights.is_empty() {
            out.push(z);
            continue;
        }
        let mut best = candidates[0];
        let mut best_cost = f64::INFINITY;
        for &g in &candidates {
            let mut cost = 0.0;
            for &(x, w) in &weights {
                cost += w * loss.eval(grid, x, g);
            }
            if cost < best_cost {
                best_cost = cost;
                best = g;
            }
        }
        out.push(best);
    }
    RemapStrategy::new(k.reports().to_vec(), out)
}

/// `Σ_{x,z} π(x)·K(x)(z)·loss(x, h(z))`.
pub fn adv_error(k: &MechanismMatrix, prior: &Prior, h: &RemapStrategy, loss: &Loss) -> Result<f64> {
    if h.reports() != k.reports() {
        return Err(Error::DomainMismatch("strategy reports differ from the mechanism's"));
    }
    let support = check_prior_within(k, prior)?;
    let grid = k.grid();
    let mut total = 0.0;
    for &(i, x, px) in &support {
        let mut inner = 0.0;
        for (zi, &p) in k.row(i).iter().enumerate() {
            if p > 0.0 {
                inner += p * loss.eval(grid, x, h.guess(zi));
            }
        }
        total += px * inner;
    }
    Ok(total)
}

/// Adversary error per user when the strategy is fitted to the global prior.
pub fn per_user_adv_error(
    k: &MechanismMatrix,
    global: &Prior,
    users: &[Prior],
    loss: &Loss,
) -> Result<Vec<f64>> {
    let h = optimal_remap(k, global, loss)?;
    let region = global.region();
    for u in users {
        if u.support().iter().any(|c| region.binary_search(c).is_err()) {
            return Err(Error::DomainMismatch("user prior outside the global region"));
        }
    }
    users.iter().map(|u| adv_error(k, u, &h, loss)).collect()
}

/// `Σ_{x,z} π(x)·K(x)(z)·loss(x, z)`.
pub fn utility(k: &MechanismMatrix, prior: &Prior, loss: &Loss) -> Result<f64> {
    let support = check_prior_within(k, prior)?;
    let grid = k.grid();
    let mut total = 0.0;
    for &(i, x, px) in &support {
        let mut inner = 0.0;
        for (&z, &p) in k.reports().iter().zip(k.row(i)) {
            inner += p * loss.eval(grid, x, z);
        }
        total += px * inner;
    }
    Ok(total)
}

/// Utility of the discretized planar Laplace mechanism over `reports`.
///
/// Equal, operation for operation, to building [`planar_laplace_matrix`]
/// and calling [`utility`], without materializing the matrix.
///
/// [`planar_laplace_matrix`]: crate::mech::planar_laplace_matrix
pub fn pl_utility(spec: &GridSpec, epsilon: f64, prior: &Prior, reports: &[CellId], loss: &Loss) -> Result<f64> {
    if prior.grid() != spec {
        return Err(Error::GridMismatch);
    }
    let reports = sorted_region(spec, reports)?;
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let weights = laplace_offset_weights(spec, epsilon);
    let mut row = vec![0.0; reports.len()];
    let mut total = 0.0;
    for x in prior.support() {
        let mut norm = 0.0;
        for (slot, &z) in row.iter_mut().zip(&reports) {
            *slot = weights[offset_slot(spec, x, z)];
            norm += *slot;
        }
        if norm == 0.0 {
            return Err(Error::UnreachableSecret { cell: x });
        }
        let mut inner = 0.0;
        for (&w, &z) in row.iter().zip(&reports) {
            inner += (w / norm) * loss.eval(spec, x, z);
        }
        total += prior.prob(x) * inner;
    }
    Ok(total)
}

const BISECTION_STEPS: usize = 200;
const MONOTONE_PROBES: usize = 16;

/// Finds ε with `utility_at(ε)` equal to `target`, by bisection over
/// `bounds`, for a utility that decreases in ε.
///
/// Stops once `|utility − target| <= max(1e-6·target, 1e-9)`.
pub fn calibrate_epsilon<F>(mut utility_at: F, target: f64, bounds: (f64, f64)) -> Result<EpsilonConfig>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("invalid epsilon bracket [{lo}, {hi}]")));
    }
    let u_lo = utility_at(lo)?;
    let u_hi = utility_at(hi)?;
    if !(target > 0.0 && target <= u_lo && target >= u_hi) {
        return Err(Error::TargetOutOfRange { target, low: u_hi, high: u_lo });
    }
    // Geometric probes across the bracket must be nonincreasing.
    let ratio = libm::pow(hi / lo, 1.0 / MONOTONE_PROBES as f64);
    let mut prev = u_lo;
    let mut eps = lo;
    for _ in 0..MONOTONE_PROBES {
        eps *= ratio;
        let u = utility_at(eps.min(hi))?;
        if u > prev * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::NotMonotone { epsilon: eps });
        }
        prev = u;
    }

    let tol = (1e-6 * target).max(1e-9);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let u = utility_at(mid)?;
        if (u - target).abs() <= tol {
            return EpsilonConfig::new(mid);
        }
        if u > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::InvalidParameter(alloc::format!(
        "bisection did not converge within {BISECTION_STEPS} steps"
    )))
}

/// Calibrates discretized planar Laplace over the whole grid to `target`
/// utility under `prior` and `loss`.
pub fn calibrate_pl(
    target: f64,
    prior: &Prior,
    spec: &GridSpec,
    loss: &Loss,
    bounds: (f64, f64),
) -> Result<EpsilonConfig> {
    let reports: Vec<CellId> = spec.cells().collect();
    calibrate_epsilon(|eps| pl_utility(spec, eps, prior, &reports, loss), target, bounds)
}

/// Five-number summary, quartiles by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        Some(Self {
            count: v.len(),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
            mean,
        })
    }
}
