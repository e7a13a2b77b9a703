//! Occurrences of local configurations in a field: copy counts, the
//! neighborhood detectors for weight-filtered families, the spaced grid of
//! candidate centers, explicit exponential bounds on the probability that no
//! light configuration occurs near a vertex, and Poisson comparison of copy
//! counts.

use serde::{Deserialize, Serialize};

use crate::configs::{filter_by_weight, GibbsParams, LocalConfig, LocalFrame, WeightMode};
use crate::error::{Error, Result};
use crate::event::EventPredicate;
use crate::field::SpinField;
use crate::lattice::{Lattice, Vertex};
use crate::measure::{occurrence_constants, ExactMeasure};
use crate::sampler::{self, ChainSettings, Estimate, Method};
use crate::stats::{self, LogSumExp};

/// Where a detector fired: the center and the packed configuration found there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub center: Vertex,
    pub config: u64,
}

/// Packed pattern of `field` on `B(y, r)` in canonical order.
pub fn ball_pattern(lattice: &Lattice, frame: &LocalFrame, field: &SpinField, y: Vertex) -> u64 {
    frame
        .ball_shifts()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &s)| acc | (field.get(lattice.add(y, s)) as u64) << i)
}

/// A precomputed search for members of a configuration family centered at a
/// fixed list of vertices. Owns its data, so it can back an
/// [`EventPredicate`].
#[derive(Debug, Clone)]
pub struct OccurrenceScan {
    centers: Vec<Vertex>,
    balls: Vec<Vertex>,
    beta: usize,
    keys: Vec<u64>,
}

impl OccurrenceScan {
    pub fn new(
        lattice: &Lattice,
        frame: &LocalFrame,
        family: &[LocalConfig],
        centers: Vec<Vertex>,
    ) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::EmptyFamily(
                "no local configuration passes the weight filter".into(),
            ));
        }
        let mut keys: Vec<u64> = family.iter().map(|c| c.bits()).collect();
        keys.sort_unstable();
        keys.dedup();
        let balls = centers
            .iter()
            .flat_map(|&y| frame.ball_shifts().iter().map(move |&s| lattice.add(y, s)))
            .collect();
        Ok(OccurrenceScan {
            centers,
            balls,
            beta: frame.beta(),
            keys,
        })
    }

    pub fn centers(&self) -> &[Vertex] {
        &self.centers
    }

    /// Vertices read by the scan, sorted.
    pub fn scope(&self) -> Vec<Vertex> {
        let mut s = self.balls.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    #[inline]
    fn pattern(&self, field: &SpinField, i: usize) -> u64 {
        self.balls[i * self.beta..(i + 1) * self.beta]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &v)| acc | (field.get(v) as u64) << j)
    }

    /// All matches in center order.
    pub fn matches<'s>(&'s self, field: &'s SpinField) -> impl Iterator<Item = Witness> + 's {
        (0..self.centers.len()).filter_map(move |i| {
            let p = self.pattern(field, i);
            self.keys.binary_search(&p).ok().map(|_| Witness {
                center: self.centers[i],
                config: p,
            })
        })
    }

    pub fn first(&self, field: &SpinField) -> Option<Witness> {
        self.matches(field).next()
    }

    pub fn count(&self, field: &SpinField) -> usize {
        self.matches(field).count()
    }

    /// The event "some member occurs at some center".
    pub fn into_event(self, label: impl Into<String>) -> EventPredicate {
        let scope = self.scope();
        EventPredicate::from_fn(label, scope, move |f| self.first(f).is_some())
    }
}

/// `X(eta)`: number of centers whose ball carries `eta`.
pub fn count_copies(lattice: &Lattice, frame: &LocalFrame, field: &SpinField, eta: &LocalConfig) -> usize {
    copy_centers(lattice, frame, field, eta).len()
}

pub fn copy_centers(lattice: &Lattice, frame: &LocalFrame, field: &SpinField, eta: &LocalConfig) -> Vec<Vertex> {
    (0..lattice.n_sites())
        .filter(|&y| ball_pattern(lattice, frame, field, y) == eta.bits())
        .collect()
}

/// Smallest graph distance between two distinct copy centers of `eta`.
pub fn min_copy_distance(
    lattice: &Lattice,
    frame: &LocalFrame,
    field: &SpinField,
    eta: &LocalConfig,
) -> Option<usize> {
    let centers = copy_centers(lattice, frame, field, eta);
    let mut best: Option<usize> = None;
    for (i, &x) in centers.iter().enumerate() {
        for &y in &centers[i + 1..] {
            let d = lattice.graph_distance(x, y);
            if best.is_none_or(|b| d < b) {
                best = Some(d);
                if d == 1 {
                    return best;
                }
            }
        }
    }
    best
}

/// Centers of the neighborhood detector: `B(x, R - r)`.
pub fn neighborhood_centers(lattice: &Lattice, frame: &LocalFrame, x: Vertex, big_r: usize) -> Result<Vec<Vertex>> {
    let r = frame.radius();
    if big_r < r {
        return Err(Error::InvalidArgument(format!("detection radius {big_r} below r = {r}")));
    }
    Ok(lattice.within(x, big_r - r))
}

/// Centers of the ring detectors: `R(x, 2r, R - r)`.
pub fn ring_centers(lattice: &Lattice, frame: &LocalFrame, x: Vertex, big_r: usize) -> Result<Vec<Vertex>> {
    let r = frame.radius();
    if big_r < 3 * r + 1 {
        return Err(Error::InvalidArgument(format!(
            "ring detection needs R >= 3r + 1 = {}, got {big_r}",
            3 * r + 1
        )));
    }
    lattice.ring(x, 2 * r, big_r - r)
}

/// Some member of `family` occurs centered in `B(x, R - r)`.
pub fn detect_a(
    lattice: &Lattice,
    frame: &LocalFrame,
    field: &SpinField,
    x: Vertex,
    big_r: usize,
    family: &[LocalConfig],
) -> Result<Option<Witness>> {
    let centers = neighborhood_centers(lattice, frame, x, big_r)?;
    Ok(OccurrenceScan::new(lattice, frame, family, centers)?.first(field))
}

/// Some member of `family` occurs centered in the ring `2r < dist(x, y) <= R - r`.
pub fn detect_a_ring(
    lattice: &Lattice,
    frame: &LocalFrame,
    field: &SpinField,
    x: Vertex,
    big_r: usize,
    family: &[LocalConfig],
) -> Result<Option<Witness>> {
    let centers = ring_centers(lattice, frame, x, big_r)?;
    Ok(OccurrenceScan::new(lattice, frame, family, centers)?.first(field))
}

/// A positive vertex `y` with `r_in < dist(x, y) <= r_out`.
pub fn detect_plus_in_ring(
    lattice: &Lattice,
    field: &SpinField,
    x: Vertex,
    r_in: usize,
    r_out: usize,
) -> Result<Option<Vertex>> {
    Ok(lattice.ring(x, r_in, r_out)?.into_iter().find(|&y| field.get(y)))
}

/// Owned copy of the graph-distance table, for use inside events.
#[derive(Debug, Clone)]
struct DistanceTable {
    n: usize,
    d: usize,
    from_origin: Vec<u32>,
}

impl DistanceTable {
    fn new(lattice: &Lattice) -> Self {
        DistanceTable {
            n: lattice.side(),
            d: lattice.dim(),
            from_origin: lattice.origin_distances().to_vec(),
        }
    }

    fn distance(&self, mut x: Vertex, mut y: Vertex) -> usize {
        let n = self.n;
        let (mut diff, mut stride) = (0, 1);
        for _ in 0..self.d {
            diff += ((y % n + n - x % n) % n) * stride;
            stride *= n;
            x /= n;
            y /= n;
        }
        self.from_origin[diff] as usize
    }
}

/// Two matches in the ring of [`ring_centers`] at mutual distance in `(2r, ell]`.
#[derive(Debug, Clone)]
pub struct PairScan {
    scan: OccurrenceScan,
    table: DistanceTable,
    r: usize,
    ell: usize,
}

impl PairScan {
    pub fn new(
        lattice: &Lattice,
        frame: &LocalFrame,
        x: Vertex,
        big_r: usize,
        ell: usize,
        family: &[LocalConfig],
    ) -> Result<Self> {
        let r = frame.radius();
        if ell <= 2 * r {
            return Err(Error::InvalidArgument(format!(
                "pair distance bound {ell} must exceed 2r = {}",
                2 * r
            )));
        }
        let centers = ring_centers(lattice, frame, x, big_r)?;
        Ok(PairScan {
            scan: OccurrenceScan::new(lattice, frame, family, centers)?,
            table: DistanceTable::new(lattice),
            r,
            ell,
        })
    }

    pub fn find(&self, field: &SpinField) -> Option<(Witness, Witness)> {
        let hits: Vec<Witness> = self.scan.matches(field).collect();
        for (i, &a) in hits.iter().enumerate() {
            for &b in &hits[i + 1..] {
                let d = self.table.distance(a.center, b.center);
                if d > 2 * self.r && d <= self.ell {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn into_event(self, label: impl Into<String>) -> EventPredicate {
        let scope = self.scan.scope();
        EventPredicate::from_fn(label, scope, move |f| self.find(f).is_some())
    }
}

/// Two members of `family` at centers in the ring with `2r < dist(y, y') <= ell`.
pub fn detect_h(
    lattice: &Lattice,
    frame: &LocalFrame,
    field: &SpinField,
    x: Vertex,
    big_r: usize,
    ell: usize,
    family: &[LocalConfig],
) -> Result<Option<(Witness, Witness)>> {
    Ok(PairScan::new(lattice, frame, x, big_r, ell, family)?.find(field))
}

/// Spaced grid of candidate centers inside `B(0, R - r)` whose balls are
/// pairwise V-disjoint.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    /// `rho (2r + 1) + 1`.
    pub spacing: usize,
    /// Largest multiplier `m`: members are `i * spacing` with `|i_j| <= m`.
    pub half_width: usize,
    /// Members as shifts of the origin, sorted.
    pub members: Vec<Vertex>,
    pub tau_n: usize,
    /// `tau_n / R^d`.
    pub tau: f64,
}

impl GridSpec {
    /// Members translated to `x`.
    pub fn centers_at(&self, lattice: &Lattice, x: Vertex) -> Vec<Vertex> {
        self.members.iter().map(|&s| lattice.add(x, s)).collect()
    }
}

pub fn build_grid(lattice: &Lattice, frame: &LocalFrame, big_r: usize) -> Result<GridSpec> {
    let r = frame.radius();
    let rho = lattice.spec().rho;
    let d = lattice.dim();
    if big_r < r {
        return Err(Error::InvalidArgument(format!("grid radius {big_r} below r = {r}")));
    }
    let spacing = rho * (2 * r + 1) + 1;
    let steps = rho * big_r / spacing;
    if steps == 0 {
        return Err(Error::DegenerateGrid(format!(
            "rho R = {} is below the spacing {spacing}",
            rho * big_r
        )));
    }
    let half_width = steps - 1;
    let side = 2 * half_width + 1;
    let mut members = Vec::new();
    for idx in 0..side.pow(d as u32) {
        let mut rest = idx;
        let coords: Vec<i64> = (0..d)
            .map(|_| {
                let i = (rest % side) as i64 - half_width as i64;
                rest /= side;
                i * spacing as i64
            })
            .collect();
        let v = lattice.index(&coords);
        if lattice.graph_distance(0, v) <= big_r - r {
            members.push(v);
        }
    }
    members.sort_unstable();
    members.dedup();
    if members.is_empty() {
        return Err(Error::DegenerateGrid("no grid point lies in B(0, R - r)".into()));
    }
    for (i, &y) in members.iter().enumerate() {
        for &z in &members[i + 1..] {
            if lattice.graph_distance(y, z) <= 2 * r + 1 {
                return Err(Error::DegenerateGrid(format!(
                    "grid points {y} and {z} are too close on a torus of side {}",
                    lattice.side()
                )));
            }
        }
    }
    let tau_n = members.len();
    Ok(GridSpec {
        spacing,
        half_width,
        tau: tau_n as f64 / (big_r as f64).powi(d as i32),
        members,
        tau_n,
    })
}

/// Explicit constants of the exponential bounds, in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub epsilon: f64,
    /// `log K`, `K = (2 rho)^d (1 - eps)^-1 c_r^-1 C_r`.
    pub log_k: f64,
    /// `log K'`, `K' = tau c_r`.
    pub log_k_prime: f64,
    pub tau: f64,
}

pub fn bound_constants(lattice: &Lattice, frame: &LocalFrame, epsilon: f64, grid: &GridSpec) -> Result<BoundConstants> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let c = occurrence_constants(frame);
    let d = lattice.dim() as f64;
    let rho = lattice.spec().rho as f64;
    Ok(BoundConstants {
        epsilon,
        log_k: d * (2.0 * rho).ln() - (1.0 - epsilon).ln() - c.log_lower + c.log_upper,
        log_k_prime: grid.tau.ln() + c.log_lower,
        tau: grid.tau,
    })
}

/// Which sides of the exponential sandwich to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSides {
    /// Both bounds; requires `W <= eps c_r / C_r`.
    Sandwich,
    /// Upper bound only; the weight ceiling is not required.
    UpperOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsenceBoundReport {
    pub n: usize,
    pub big_r: usize,
    pub log_w: f64,
    pub family_size: usize,
    pub constants: BoundConstants,
    pub tau_n: usize,
    /// Exact or estimated probability that no member of `C_r(W)` occurs
    /// centered in `B(0, R - r)`.
    pub estimate: Estimate,
    /// `exp(-K R^d W)`, absent in upper-only mode.
    pub lower: Option<f64>,
    /// `exp(-K' R^d W)`.
    pub upper: f64,
    pub holds_lower: Option<bool>,
    pub holds_upper: bool,
    /// Whether `W <= eps c_r / C_r`.
    pub below_ceiling: bool,
}

impl AbsenceBoundReport {
    pub fn holds(&self) -> bool {
        self.holds_upper && self.holds_lower.unwrap_or(true)
    }
}

/// How an absence probability is obtained.
#[derive(Debug, Clone)]
pub enum Evaluation {
    Exact,
    Mcmc(ChainSettings),
}

/// Checks `exp(-K R^d W) <= mu(no member of C_r(W) centered in B(0, R - r))
/// <= exp(-K' R^d W)`. Refuses to run outside `a < 0`, `a + 2 V b <= 0`, or
/// when `W` is below every weight (empty family); in sandwich mode also when
/// `W > eps c_r / C_r`.
#[allow(clippy::too_many_arguments)]
pub fn verify_absence_bounds(
    lattice: &Lattice,
    frame: &LocalFrame,
    p: &GibbsParams,
    big_r: usize,
    log_w: f64,
    epsilon: f64,
    sides: BoundSides,
    evaluation: &Evaluation,
) -> Result<AbsenceBoundReport> {
    let degree = lattice.degree();
    if p.a() >= 0.0 {
        return Err(Error::Hypothesis(format!("magnetic field must be negative, got {}", p.a())));
    }
    if !p.satisfies_double(degree) {
        return Err(Error::Hypothesis(format!("a + 2Vb = {} > 0", p.a() + 2.0 * degree as f64 * p.b())));
    }
    let all = frame.enumerate(crate::configs::DEFAULT_ENUMERATION_CAP_LOG2)?;
    let min_lw = all.iter().map(|c| c.log_weight(p)).fold(f64::INFINITY, f64::min);
    let family = filter_by_weight(&all, p, log_w, WeightMode::AtMost);
    if family.is_empty() || log_w < min_lw - 1e-12 * min_lw.abs().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "threshold log W = {log_w} is below the minimal log-weight {min_lw}"
        )));
    }
    let oc = occurrence_constants(frame);
    let log_ceiling = epsilon.ln() + oc.log_lower - oc.log_upper;
    let below_ceiling = log_w <= log_ceiling + 1e-12 * log_ceiling.abs();
    if sides == BoundSides::Sandwich && !below_ceiling {
        return Err(Error::Hypothesis(format!(
            "threshold log W = {log_w} exceeds log(eps c_r / C_r) = {log_ceiling}"
        )));
    }
    let grid = build_grid(lattice, frame, big_r)?;
    let constants = bound_constants(lattice, frame, epsilon, &grid)?;
    let centers = neighborhood_centers(lattice, frame, 0, big_r)?;
    let absent = OccurrenceScan::new(lattice, frame, &family.members, centers)?
        .into_event(format!("no C_r(W) copy in B(0,{big_r}-r)"))
        .not();

    let estimate = match evaluation {
        Evaluation::Exact => Estimate::exact(ExactMeasure::new(lattice, *p)?.probability(&absent)?),
        Evaluation::Mcmc(s) => sampler::estimate_event(lattice, p, &absent, s)?,
    };
    let log_rdw = lattice.dim() as f64 * (big_r as f64).ln() + log_w;
    let lower = (sides == BoundSides::Sandwich).then(|| (-(constants.log_k + log_rdw).exp()).exp());
    let upper = (-(constants.log_k_prime + log_rdw).exp()).exp();
    let slack = match estimate.method {
        Method::Exact => 1e-12,
        Method::Mcmc => 3.0 * effective_se(&estimate),
    };
    Ok(AbsenceBoundReport {
        n: lattice.side(),
        big_r,
        log_w,
        family_size: family.members.len(),
        constants,
        tau_n: grid.tau_n,
        holds_lower: lower.map(|l| l <= estimate.mean + slack),
        holds_upper: estimate.mean - slack <= upper,
        lower,
        upper,
        estimate,
        below_ceiling,
    })
}

/// Standard error floored at `1 / N` so that an estimate with no observed
/// variation still carries the resolution of its sample size.
pub fn effective_se(e: &Estimate) -> f64 {
    match (&e.method, &e.diagnostics) {
        (Method::Mcmc, Some(d)) if d.n_samples > 0 => e.std_error.max(1.0 / d.n_samples as f64),
        _ => e.std_error,
    }
}

/// `-sum_{eta' : k(eta') = k(eta)} exp(-2b (gamma(eta') - gamma(eta)))`.
pub fn log_probability_limit(configs: &[LocalConfig], eta: &LocalConfig, b: f64) -> f64 {
    -configs
        .iter()
        .filter(|c| c.k() == eta.k())
        .map(|c| (-2.0 * b * (c.gamma() as f64 - eta.gamma() as f64)).exp())
        .sum::<f64>()
}

/// Distance between the copy-count law of `eta` and Poisson(`lambda`).
#[derive(Debug, Clone, Serialize)]
pub struct PoissonReport {
    pub n: usize,
    pub lambda: f64,
    pub tv: f64,
    pub tv_se: f64,
    pub mean_count: f64,
    pub histogram: Vec<usize>,
    /// Poisson mass beyond the truncation point.
    pub truncation_tail: f64,
    pub samples: usize,
    pub method: Method,
}

pub const POISSON_TAIL: f64 = 1e-6;

/// Checks `n^d W(eta) = lambda` (relative tolerance `1e-9`) and `a + 2Vb <= 0`.
pub fn check_poisson_regime(lattice: &Lattice, p: &GibbsParams, eta: &LocalConfig, lambda: f64) -> Result<()> {
    let log_mass = lattice.dim() as f64 * (lattice.side() as f64).ln() + eta.log_weight(p);
    if lambda <= 0.0 || (log_mass - lambda.ln()).abs() > 1e-9 {
        return Err(Error::Hypothesis(format!(
            "n^d W(eta) = {} differs from lambda = {lambda}",
            log_mass.exp()
        )));
    }
    if !p.satisfies_double(lattice.degree()) {
        return Err(Error::Hypothesis("a + 2Vb > 0".into()));
    }
    Ok(())
}

/// Monte Carlo TV distance between `X(eta)` and Poisson(`lambda`), with a
/// delete-one-batch jackknife standard error.
pub fn poisson_distance(
    lattice: &Lattice,
    frame: &LocalFrame,
    p: &GibbsParams,
    eta: &LocalConfig,
    settings: &ChainSettings,
    lambda: f64,
) -> Result<PoissonReport> {
    check_poisson_regime(lattice, p, eta, lambda)?;
    let scan = OccurrenceScan::new(lattice, frame, std::slice::from_ref(eta), (0..lattice.n_sites()).collect())?;
    let out = sampler::run_chains(lattice, p, settings, |f| scan.count(f))?;
    Ok(poisson_report(lattice.side(), lambda, &out.per_chain))
}

/// TV distance to Poisson(`lambda`) of recorded copy counts, one vector per
/// chain. The standard error is a delete-one-batch jackknife over the same
/// batches used for batch means.
pub fn poisson_report(n: usize, lambda: f64, per_chain: &[Vec<usize>]) -> PoissonReport {
    let (masses, tail) = stats::poisson_masses(lambda, POISSON_TAIL);
    let per = sampler::MIN_BATCHES.div_ceil(per_chain.len().max(1));
    let groups: Vec<Vec<usize>> = per_chain
        .iter()
        .filter(|c| !c.is_empty())
        .flat_map(|c| {
            let size = (c.len() / per).max(1);
            c.chunks(size).map(|ch| ch.to_vec()).collect::<Vec<_>>()
        })
        .collect();
    let tv_of = |kept: &[&Vec<usize>]| {
        let h = stats::histogram(kept.iter().flat_map(|g| g.iter().copied()));
        stats::total_variation(&h, &masses, tail)
    };
    let all: Vec<&Vec<usize>> = groups.iter().collect();
    let counts: Vec<usize> = per_chain.iter().flatten().copied().collect();
    PoissonReport {
        n,
        lambda,
        tv: tv_of(&all),
        tv_se: stats::jackknife_se(&groups, tv_of),
        mean_count: counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
        histogram: stats::histogram(counts.iter().copied()),
        truncation_tail: tail,
        samples: counts.len(),
        method: Method::Mcmc,
    }
}

/// Exact law of `X(eta)` by enumeration: entry `k` is `mu(X = k)`.
pub fn exact_count_distribution(measure: &ExactMeasure, frame: &LocalFrame, eta: &LocalConfig) -> Result<Vec<f64>> {
    let lattice = measure.lattice();
    let scan = OccurrenceScan::new(lattice, frame, std::slice::from_ref(eta), (0..lattice.n_sites()).collect())?;
    let mut acc = vec![LogSumExp::new(); lattice.n_sites() + 1];
    let mut field = SpinField::minus(lattice.n_sites());
    for s in 0..measure.n_states() {
        field.load_state(s);
        acc[scan.count(&field)].push(measure.log_prob_state(s));
    }
    let mut probs: Vec<f64> = acc.iter().map(|a| a.value().exp()).collect();
    while probs.len() > 1 && probs.last() == Some(&0.0) {
        probs.pop();
    }
    Ok(probs)
}

/// Exact TV distance between `X(eta)` and Poisson(`lambda`).
pub fn exact_poisson_distance(measure: &ExactMeasure, frame: &LocalFrame, eta: &LocalConfig, lambda: f64) -> Result<f64> {
    let law = exact_count_distribution(measure, frame, eta)?;
    let (masses, tail) = stats::poisson_masses(lambda, POISSON_TAIL);
    let len = law.len().max(masses.len());
    let sum: f64 = (0..len)
        .map(|k| (law.get(k).copied().unwrap_or(0.0) - masses.get(k).copied().unwrap_or(0.0)).abs())
        .sum();
    Ok(0.5 * (sum + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::PatchConfig;
    use crate::lattice::{LatticeSpec, Norm};

    fn square(n: usize) -> Lattice {
        Lattice::new(LatticeSpec::new(2, n, Norm::Inf, 1)).unwrap()
    }

    #[test]
    fn copies_on_simple_fields() {
        let l = square(7);
        let f = LocalFrame::new(&l, 1).unwrap();
        let minus = SpinField::minus(49);
        assert_eq!(count_copies(&l, &f, &minus, &f.negative()), 49);
        assert_eq!(count_copies(&l, &f, &minus, &f.single_center_plus()), 0);
        let mut one = minus.clone();
        one.set(l.index(&[3, 3]), true);
        assert_eq!(count_copies(&l, &f, &one, &f.single_center_plus()), 1);
        assert_eq!(min_copy_distance(&l, &f, &one, &f.single_center_plus()), None);
        assert_eq!(min_copy_distance(&l, &f, &minus, &f.negative()), Some(1));
    }

    #[test]
    fn planted_distance() {
        let l = square(16);
        let f = LocalFrame::new(&l, 1).unwrap();
        let mut field = SpinField::minus(256);
        field.set(l.index(&[2, 2]), true);
        field.set(l.index(&[7, 4]), true);
        let eta = f.single_center_plus();
        assert_eq!(min_copy_distance(&l, &f, &field, &eta), Some(5));
    }

    #[test]
    fn neighborhood_detector_range() {
        let l = Lattice::new(LatticeSpec::new(1, 30, Norm::Inf, 1)).unwrap();
        let f = LocalFrame::new(&l, 1).unwrap();
        let eta = f.single_center_plus();
        let big_r = 5;
        let mut field = SpinField::minus(30);
        field.set(4, true); // center at distance R - r = 4
        let w = detect_a(&l, &f, &field, 0, big_r, &[eta]).unwrap().unwrap();
        assert_eq!(w.center, 4);
        let mut far = SpinField::minus(30);
        far.set(5, true);
        assert!(detect_a(&l, &f, &far, 0, big_r, &[eta]).unwrap().is_none());
        assert!(detect_a(&l, &f, &SpinField::minus(30), 0, 3, &[f.negative()]).unwrap().is_some());
        assert!(matches!(detect_a(&l, &f, &far, 0, big_r, &[]), Err(Error::EmptyFamily(_))));
    }

    #[test]
    fn ring_and_pair_detectors() {
        let l = Lattice::new(LatticeSpec::new(1, 40, Norm::Inf, 1)).unwrap();
        let f = LocalFrame::new(&l, 1).unwrap();
        let eta = f.single_center_plus();
        let mut at2 = SpinField::minus(40);
        at2.set(2, true);
        assert!(detect_a_ring(&l, &f, &at2, 0, 8, &[eta]).unwrap().is_none());
        let mut at3 = SpinField::minus(40);
        at3.set(3, true);
        assert!(detect_a_ring(&l, &f, &at3, 0, 8, &[eta]).unwrap().is_some());

        let mut pair2 = SpinField::minus(40);
        pair2.set(4, true);
        pair2.set(6, true);
        assert!(detect_h(&l, &f, &pair2, 0, 12, 5, &[eta]).unwrap().is_none());
        let mut pair3 = SpinField::minus(40);
        pair3.set(4, true);
        pair3.set(7, true);
        let (a, b) = detect_h(&l, &f, &pair3, 0, 12, 5, &[eta]).unwrap().unwrap();
        assert_eq!((a.center, b.center), (4, 7));
        assert!(detect_h(&l, &f, &at3, 0, 12, 5, &[eta]).unwrap().is_none());
        assert!(detect_h(&l, &f, &at3, 0, 12, 2, &[eta]).is_err());
        assert_eq!(detect_plus_in_ring(&l, &at3, 0, 1, 4).unwrap(), Some(3));
    }

    #[test]
    fn grid_members() {
        let l = Lattice::new(LatticeSpec::new(1, 40, Norm::Inf, 1)).unwrap();
        let f = LocalFrame::new(&l, 1).unwrap();
        let g = build_grid(&l, &f, 8).unwrap();
        assert_eq!(g.spacing, 4);
        assert_eq!(g.members, vec![0, 4, 36]);
        assert_eq!(g.tau_n, 3);
        assert!(matches!(build_grid(&l, &f, 3), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn constants_d1() {
        let l = Lattice::new(LatticeSpec::new(1, 40, Norm::Inf, 1)).unwrap();
        let f = LocalFrame::new(&l, 1).unwrap();
        let g = build_grid(&l, &f, 8).unwrap();
        let k = bound_constants(&l, &f, 0.5, &g).unwrap();
        assert!((k.log_k.exp() - 2048.0).abs() < 1e-9);
        assert!(k.log_k > k.log_k_prime);
        assert!(bound_constants(&l, &f, 1.0, &g).is_err());
    }

    #[test]
    fn limit_sum() {
        let l = Lattice::new(LatticeSpec::new(1, 9, Norm::Inf, 1)).unwrap();
        let f = LocalFrame::new(&l, 1).unwrap();
        let all = f.enumerate(26).unwrap();
        let eta = f.single_center_plus();
        assert_eq!(log_probability_limit(&all, &eta, 0.0), -3.0);
        // every one-plus configuration has perimeter 2 in d = 1
        assert!((log_probability_limit(&all, &eta, 0.3) + 3.0).abs() < 1e-15);
        let pair = f.config(0b011).unwrap();
        // k = 2: {011, 110} have gamma 2, {101} has gamma 4
        let expected = -(2.0 + (-2.0 * 0.3 * 2.0f64).exp());
        assert!((log_probability_limit(&all, &pair, 0.3) - expected).abs() < 1e-15);
    }

    #[test]
    fn pattern_event_scope() {
        let l = square(7);
        let f = LocalFrame::new(&l, 1).unwrap();
        let centers = neighborhood_centers(&l, &f, 0, 2).unwrap();
        let ev = OccurrenceScan::new(&l, &f, &[f.single_center_plus()], centers)
            .unwrap()
            .into_event("a");
        ev.probe_scope(49, 10, 0).unwrap();
        assert_eq!(ev.scope().len(), 25);
        let p = PatchConfig::new(vec![(0, true)]).unwrap();
        assert!(EventPredicate::pattern(p).holds(&SpinField::from_spins(&[true; 49])));
    }
}
