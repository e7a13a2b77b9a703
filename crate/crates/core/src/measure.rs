//! The Gibbs measure `mu(sigma) ∝ exp(a sum sigma + b sum_edges sigma sigma)`
//! by exhaustive enumeration at small sizes, the closed-form conditional
//! occurrence probability, and exhaustive checks of the Markov property and
//! positive association.

use rayon::prelude::*;
use serde::Serialize;

use crate::configs::{GibbsParams, LocalConfig, LocalFrame, PatchConfig};
use crate::error::{Error, Result};
use crate::event::EventPredicate;
use crate::field::SpinField;
use crate::lattice::{Lattice, Vertex};
use crate::stats::LogSumExp;

/// Default cap on the number of sites for exhaustive enumeration.
pub const DEFAULT_SITE_CAP: usize = 24;

/// Largest scope (or conditioning set) scanned exhaustively.
pub const MAX_SCAN_SCOPE: usize = 20;

const CHUNK_LOG2: u32 = 14;

/// Exact Gibbs measure on a torus small enough to enumerate.
#[derive(Debug, Clone)]
pub struct ExactMeasure<'a> {
    lattice: &'a Lattice,
    params: GibbsParams,
    sites: usize,
    /// For each vertex, the mask of neighbors with a larger index.
    forward: Vec<u64>,
    log_z: f64,
}

impl<'a> ExactMeasure<'a> {
    pub fn new(lattice: &'a Lattice, params: GibbsParams) -> Result<Self> {
        Self::with_cap(lattice, params, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(lattice: &'a Lattice, params: GibbsParams, cap: usize) -> Result<Self> {
        let sites = lattice.n_sites();
        if sites > cap.min(63) {
            return Err(Error::CapExceeded {
                size: sites,
                cap: cap.min(63),
            });
        }
        let forward = (0..sites)
            .map(|x| {
                lattice
                    .neighbors(x)
                    .iter()
                    .filter(|&&y| y as usize > x)
                    .fold(0u64, |m, &y| m | 1 << y)
            })
            .collect();
        let mut m = ExactMeasure {
            lattice,
            params,
            sites,
            forward,
            log_z: 0.0,
        };
        m.log_z = m.partition_from_histogram();
        Ok(m)
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice
    }

    pub fn params(&self) -> &GibbsParams {
        &self.params
    }

    pub fn n_states(&self) -> u64 {
        1u64 << self.sites
    }

    /// Number of disagreeing edges of a packed state.
    #[inline]
    fn disagreements(&self, state: u64) -> u32 {
        let mut e = 0;
        for (x, &fw) in self.forward.iter().enumerate() {
            let nb = if state >> x & 1 == 1 { !state } else { state };
            e += (nb & fw).count_ones();
        }
        e
    }

    #[inline]
    fn energy_of(&self, plus: u32, disagree: u32) -> f64 {
        let n = self.sites as i64;
        let edges = self.lattice.edges().len() as i64;
        self.params.a() * (2 * plus as i64 - n) as f64
            + self.params.b() * (edges - 2 * disagree as i64) as f64
    }

    /// Unnormalized log-probability of a packed state.
    #[inline]
    pub fn energy(&self, state: u64) -> f64 {
        self.energy_of(state.count_ones(), self.disagreements(state))
    }

    /// `log mu(state)`.
    pub fn log_prob_state(&self, state: u64) -> f64 {
        self.energy(state) - self.log_z
    }

    /// `log Z`.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let total = self.n_states();
        let size = 1u64 << CHUNK_LOG2.min(self.sites as u32);
        (0..total.div_ceil(size))
            .map(|c| (c * size, ((c + 1) * size).min(total)))
            .collect()
    }

    /// `log Z` summed over the histogram of (plus count, disagreement count),
    /// with terms added in increasing order. The ordering makes the value
    /// invariant under the spin-flip symmetry `(sigma, a) -> (-sigma, -a)`.
    fn partition_from_histogram(&self) -> f64 {
        let max_e = self.lattice.edges().len();
        let width = max_e + 1;
        let hist = self
            .chunks()
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut h = vec![0u64; (self.sites + 1) * width];
                for s in lo..hi {
                    h[s.count_ones() as usize * width + self.disagreements(s) as usize] += 1;
                }
                h
            })
            .reduce(
                || vec![0u64; (self.sites + 1) * width],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        let mut terms: Vec<(f64, u64)> = hist
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (self.energy_of((i / width) as u32, (i % width) as u32), c))
            .collect();
        terms.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut acc = LogSumExp::new();
        for (e, c) in terms {
            acc.push_weighted(e, c as f64);
        }
        acc.value()
    }

    /// Log-masses grouped by the assignment on `cond`, for the whole space and
    /// for each event. Chunks are merged in index order, so results are
    /// deterministic.
    pub fn conditional_table(
        &self,
        cond: &[Vertex],
        events: &[&EventPredicate],
    ) -> Result<ConditionalTable> {
        if cond.len() > MAX_SCAN_SCOPE {
            return Err(Error::ScopeTooLarge {
                size: cond.len(),
                max: MAX_SCAN_SCOPE,
            });
        }
        let keys = 1usize << cond.len();
        let slots = keys * (1 + events.len());
        let partials: Vec<Vec<LogSumExp>> = self
            .chunks()
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut acc = vec![LogSumExp::new(); slots];
                let mut field = SpinField::minus(self.sites);
                for s in lo..hi {
                    field.load_state(s);
                    let key = field.restrict(cond) as usize;
                    let e = self.energy(s);
                    acc[key].push(e);
                    for (j, ev) in events.iter().enumerate() {
                        if ev.holds(&field) {
                            acc[(j + 1) * keys + key].push(e);
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![LogSumExp::new(); slots];
        for p in &partials {
            total.iter_mut().zip(p).for_each(|(t, x)| t.merge(x));
        }
        let values: Vec<f64> = total.iter().map(|a| a.value()).collect();
        Ok(ConditionalTable {
            vertices: cond.to_vec(),
            log_mass: values[..keys].to_vec(),
            log_event_mass: (0..events.len())
                .map(|j| values[(j + 1) * keys..(j + 2) * keys].to_vec())
                .collect(),
        })
    }

    /// `log mu(e)`.
    pub fn log_probability(&self, e: &EventPredicate) -> Result<f64> {
        let t = self.conditional_table(&[], &[e])?;
        Ok(t.log_event_mass[0][0] - self.log_z)
    }

    /// `mu(e)`.
    pub fn probability(&self, e: &EventPredicate) -> Result<f64> {
        Ok(self.log_probability(e)?.exp())
    }

    /// Joint probabilities of several events from one scan.
    pub fn probabilities(&self, events: &[&EventPredicate]) -> Result<Vec<f64>> {
        let t = self.conditional_table(&[], events)?;
        Ok(t.log_event_mass
            .iter()
            .map(|m| (m[0] - self.log_z).exp())
            .collect())
    }

    /// `log sum_sigma mu(sigma)` accumulated state by state (0 up to rounding).
    pub fn log_total_mass(&self) -> f64 {
        let partials: Vec<LogSumExp> = self
            .chunks()
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut acc = LogSumExp::new();
                for s in lo..hi {
                    acc.push(self.log_prob_state(s));
                }
                acc
            })
            .collect();
        let mut acc = LogSumExp::new();
        for p in &partials {
            acc.merge(p);
        }
        acc.value()
    }

    /// `log mu(state)` for every packed state.
    pub fn log_prob_table(&self) -> Result<Vec<f64>> {
        if self.sites > MAX_SCAN_SCOPE {
            return Err(Error::ScopeTooLarge {
                size: self.sites,
                max: MAX_SCAN_SCOPE,
            });
        }
        Ok((0..self.n_states()).map(|s| self.log_prob_state(s)).collect())
    }
}

/// Masses of events grouped by the assignment on a set of vertices.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    pub vertices: Vec<Vertex>,
    /// `log mu(sigma_cond = key)`, unnormalized (add `-log Z` for probabilities).
    pub log_mass: Vec<f64>,
    /// `log mu(event, sigma_cond = key)`, unnormalized.
    pub log_event_mass: Vec<Vec<f64>>,
}

impl ConditionalTable {
    /// `mu(event | sigma_cond = key)`.
    pub fn conditional(&self, event: usize, key: usize) -> f64 {
        (self.log_event_mass[event][key] - self.log_mass[key]).exp()
    }
}

/// Log-weights of `eta'_x sigma` relative to a fixed boundary, for every
/// `eta'` of the frame, indexed by packed bits. `boundary[j]` is the spin of
/// the `j`-th boundary vertex in the frame's boundary order.
fn conditional_log_weights(
    frame: &LocalFrame,
    p: &GibbsParams,
    boundary: &[bool],
) -> Result<Vec<f64>> {
    let expected = frame.boundary_shifts().len();
    if boundary.len() != expected {
        return Err(Error::IncompleteBoundary {
            expected,
            got: boundary.len(),
        });
    }
    let plus_links: Vec<f64> = frame
        .boundary_links()
        .iter()
        .map(|l| l.iter().filter(|&&j| boundary[j]).count() as f64)
        .collect();
    let beta = frame.beta();
    (0..1u64 << beta)
        .map(|bits| {
            let c = frame.config(bits)?;
            let conn: f64 = (0..beta)
                .filter(|&i| bits >> i & 1 == 1)
                .map(|i| plus_links[i])
                .sum();
            Ok(c.log_weight(p) + 4.0 * p.b() * conn)
        })
        .collect()
}

/// `log mu(I_x^eta = 1 | sigma on delta B(x, r))` from the ratio of weights
/// `W(eta_x sigma) / sum_{eta'} W(eta'_x sigma)`; no global enumeration.
pub fn log_conditional_occurrence(
    frame: &LocalFrame,
    p: &GibbsParams,
    eta: &LocalConfig,
    boundary: &[bool],
) -> Result<f64> {
    let lw = conditional_log_weights(frame, p, boundary)?;
    let norm = crate::stats::log_sum_exp(&lw);
    Ok(lw[eta.bits() as usize] - norm)
}

/// [`log_conditional_occurrence`] as a probability.
pub fn conditional_occurrence(
    frame: &LocalFrame,
    p: &GibbsParams,
    eta: &LocalConfig,
    boundary: &[bool],
) -> Result<f64> {
    Ok(log_conditional_occurrence(frame, p, eta, boundary)?.exp())
}

/// Conditional law of the ball configuration given the boundary, indexed by
/// packed bits.
pub fn conditional_distribution(
    frame: &LocalFrame,
    p: &GibbsParams,
    boundary: &[bool],
) -> Result<Vec<f64>> {
    let lw = conditional_log_weights(frame, p, boundary)?;
    let norm = crate::stats::log_sum_exp(&lw);
    Ok(lw.iter().map(|l| (l - norm).exp()).collect())
}

/// Boundary spins of `B(x, r)` read from a patch that must cover the boundary.
pub fn boundary_spins(
    lattice: &Lattice,
    frame: &LocalFrame,
    x: Vertex,
    patch: &PatchConfig,
) -> Result<Vec<bool>> {
    let shifts = frame.boundary_shifts();
    let spins: Vec<Option<bool>> = shifts
        .iter()
        .map(|&s| patch.spin_at(lattice.add(x, s)))
        .collect();
    let got = spins.iter().filter(|s| s.is_some()).count();
    if got != shifts.len() {
        return Err(Error::IncompleteBoundary {
            expected: shifts.len(),
            got,
        });
    }
    Ok(spins.into_iter().map(|s| s.unwrap_or(false)).collect())
}

/// Constants `c_r <= mu(I = 1 | sigma) / W` and `mu(I = 1) / W <= C_r`, in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccurrenceConstants {
    /// `log c_r = -beta_r log 2`.
    pub log_lower: f64,
    /// `log C_r = V beta_r log 2`.
    pub log_upper: f64,
}

pub fn occurrence_constants(frame: &LocalFrame) -> OccurrenceConstants {
    let beta = frame.beta() as f64;
    OccurrenceConstants {
        log_lower: -beta * std::f64::consts::LN_2,
        log_upper: frame.degree() as f64 * beta * std::f64::consts::LN_2,
    }
}

/// Result of checking `mu(I_V^omega = 1) <= C_V W(omega)`.
#[derive(Debug, Clone, Serialize)]
pub struct PatchBoundReport {
    pub log_probability: f64,
    /// `log C_V + log W(omega)` with `C_V = 2^(V |V|)`.
    pub log_bound: f64,
    pub holds: bool,
}

/// Exact check of the support bound for an arbitrary patch. Requires
/// `a + 2 V b <= 0`.
pub fn patch_bound_check(measure: &ExactMeasure, omega: &PatchConfig) -> Result<PatchBoundReport> {
    let lattice = measure.lattice();
    let p = measure.params();
    if !p.satisfies_double(lattice.degree()) {
        return Err(Error::Hypothesis(format!(
            "a + 2Vb = {} > 0",
            p.a() + 2.0 * lattice.degree() as f64 * p.b()
        )));
    }
    let log_probability = measure.log_probability(&EventPredicate::pattern(omega.clone()))?;
    let log_bound = (lattice.degree() * omega.len()) as f64 * std::f64::consts::LN_2
        + omega.log_weight(lattice, p);
    Ok(PatchBoundReport {
        log_probability,
        log_bound,
        holds: log_probability <= log_bound + 1e-12 * log_bound.abs().max(1.0),
    })
}

/// Deviations measured by [`verify_markov`].
#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    /// `max |mu(A | F(V')) - mu(A | F(delta U))|`, also over `B` and `V`.
    pub single_deviation: f64,
    /// `max |mu(A ∩ B | F(V')) - mu(A | F(V')) mu(B | F(V'))|`.
    pub pair_deviation: f64,
    pub assignments: usize,
    pub passed: bool,
}

pub const MARKOV_TOL: f64 = 1e-10;

fn subset_of(a: &[Vertex], b: &[Vertex]) -> bool {
    a.iter().all(|x| b.contains(x))
}

fn disjoint(a: &[Vertex], b: &[Vertex]) -> bool {
    a.iter().all(|x| !b.contains(x))
}

/// Exhaustive check of both Markov identities for `A ∈ F(U)`, `B ∈ F(V)`
/// conditioned on `V'`. Hypotheses: `U`, `V` are V-disjoint, neither meets
/// `V'`, and `delta U ∪ delta V ⊆ V'`.
pub fn verify_markov(
    measure: &ExactMeasure,
    u: &[Vertex],
    v: &[Vertex],
    v_prime: &[Vertex],
    ea: &EventPredicate,
    eb: &EventPredicate,
) -> Result<MarkovReport> {
    let lattice = measure.lattice();
    if !subset_of(ea.scope(), u) || !subset_of(eb.scope(), v) {
        return Err(Error::Hypothesis("event scopes must lie in U and V".into()));
    }
    if !lattice.v_disjoint(u, v) {
        return Err(Error::Hypothesis("U and V are not V-disjoint".into()));
    }
    if !disjoint(u, v_prime) || !disjoint(v, v_prime) {
        return Err(Error::Hypothesis("U or V meets the conditioning set".into()));
    }
    let du = lattice.boundary(u);
    let dv = lattice.boundary(v);
    if !subset_of(&du, v_prime) || !subset_of(&dv, v_prime) {
        return Err(Error::Hypothesis(
            "conditioning set does not contain the boundaries of U and V".into(),
        ));
    }
    let ab = ea.and(eb);
    let full = measure.conditional_table(v_prime, &[ea, eb, &ab])?;
    let on_du = measure.conditional_table(&du, &[ea])?;
    let on_dv = measure.conditional_table(&dv, &[eb])?;
    let pos_du: Vec<usize> = du.iter().map(|x| v_prime.iter().position(|y| y == x).unwrap()).collect();
    let pos_dv: Vec<usize> = dv.iter().map(|x| v_prime.iter().position(|y| y == x).unwrap()).collect();
    let project = |key: usize, pos: &[usize]| {
        pos.iter()
            .enumerate()
            .fold(0usize, |acc, (i, &j)| acc | (key >> j & 1) << i)
    };
    let mut single: f64 = 0.0;
    let mut pair: f64 = 0.0;
    let mut assignments = 0;
    for key in 0..full.log_mass.len() {
        if full.log_mass[key] == f64::NEG_INFINITY {
            continue;
        }
        assignments += 1;
        let pa = full.conditional(0, key);
        let pb = full.conditional(1, key);
        let pab = full.conditional(2, key);
        single = single
            .max((pa - on_du.conditional(0, project(key, &pos_du))).abs())
            .max((pb - on_dv.conditional(0, project(key, &pos_dv))).abs());
        pair = pair.max((pab - pa * pb).abs());
    }
    Ok(MarkovReport {
        single_deviation: single,
        pair_deviation: pair,
        assignments,
        passed: single <= MARKOV_TOL && pair <= MARKOV_TOL,
    })
}

/// Monotonicity class of an event under the coordinatewise order `- < +`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    Neither,
}

/// Exhaustive scan over the scope (outside spins held at `-`): checks every
/// single `- -> +` flip. Flips generate the order, so this covers all pairs.
pub fn monotonicity(sites: usize, e: &EventPredicate) -> Result<Monotonicity> {
    let scope = e.scope();
    if scope.len() > MAX_SCAN_SCOPE {
        return Err(Error::ScopeTooLarge {
            size: scope.len(),
            max: MAX_SCAN_SCOPE,
        });
    }
    let mut field = SpinField::minus(sites);
    let table: Vec<bool> = (0..1usize << scope.len())
        .map(|key| {
            for (i, &v) in scope.iter().enumerate() {
                field.set(v, key >> i & 1 == 1);
            }
            e.holds(&field)
        })
        .collect();
    let (mut up, mut down) = (true, true);
    for (key, &t) in table.iter().enumerate() {
        for i in 0..scope.len() {
            if key >> i & 1 == 0 {
                let t2 = table[key | 1 << i];
                up &= !t || t2;
                down &= t || !t2;
            }
        }
    }
    Ok(match (up, down) {
        (true, true) => Monotonicity::Constant,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (false, false) => Monotonicity::Neither,
    })
}

pub fn is_increasing(sites: usize, e: &EventPredicate) -> Result<bool> {
    Ok(matches!(
        monotonicity(sites, e)?,
        Monotonicity::Increasing | Monotonicity::Constant
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct FkgReport {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// `mu(A ∩ B) - mu(A) mu(B)`.
    pub margin: f64,
    pub holds: bool,
}

pub const FKG_TOL: f64 = 1e-12;

/// Positive association for a pair of events that are both increasing or both
/// decreasing (checked exhaustively first).
pub fn verify_fkg(measure: &ExactMeasure, ea: &EventPredicate, eb: &EventPredicate) -> Result<FkgReport> {
    use Monotonicity::*;
    let sites = measure.lattice().n_sites();
    let ma = monotonicity(sites, ea)?;
    let mb = monotonicity(sites, eb)?;
    let compatible = !matches!(
        (ma, mb),
        (Neither, _) | (_, Neither) | (Increasing, Decreasing) | (Decreasing, Increasing)
    );
    if !compatible {
        return Err(Error::NonMonotone(format!(
            "`{}` is {ma:?} and `{}` is {mb:?}",
            ea.label(),
            eb.label()
        )));
    }
    let ab = ea.and(eb);
    let probs = measure.probabilities(&[ea, eb, &ab])?;
    let margin = probs[2] - probs[0] * probs[1];
    Ok(FkgReport {
        p_a: probs[0],
        p_b: probs[1],
        p_ab: probs[2],
        margin,
        holds: margin >= -FKG_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::DEFAULT_ENUMERATION_CAP_LOG2;
    use crate::lattice::{LatticeSpec, Norm};

    fn ring(n: usize) -> Lattice {
        Lattice::new(LatticeSpec::new(1, n, Norm::Inf, 1)).unwrap()
    }

    #[test]
    fn trivial_partition_functions() {
        let l = ring(6);
        let z = ExactMeasure::new(&l, GibbsParams::new(0.0, 0.0).unwrap()).unwrap();
        assert!((z.log_partition() - 6.0 * 2f64.ln()).abs() < 1e-12);
        let a = -0.8;
        let m = ExactMeasure::new(&l, GibbsParams::new(a, 0.0).unwrap()).unwrap();
        let closed = 6.0 * (a.exp() + (-a).exp()).ln();
        assert!((m.log_partition() - closed).abs() < 1e-12);
        assert!(m.log_total_mass().abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let l = ring(30);
        assert!(matches!(
            ExactMeasure::new(&l, GibbsParams::new(-1.0, 0.1).unwrap()),
            Err(Error::CapExceeded { size: 30, .. })
        ));
    }

    #[test]
    fn event_probabilities() {
        let l = ring(5);
        let a = -0.6;
        let m = ExactMeasure::new(&l, GibbsParams::new(a, 0.0).unwrap()).unwrap();
        let p = m.probability(&EventPredicate::site_plus(2)).unwrap();
        assert!((p - a.exp() / (a.exp() + (-a).exp())).abs() < 1e-12);
        assert!((m.probability(&EventPredicate::always()).unwrap() - 1.0).abs() < 1e-12);

        let frame = LocalFrame::new(&l, 1).unwrap();
        let u = ExactMeasure::new(&l, GibbsParams::new(0.0, 0.0).unwrap()).unwrap();
        let eta = frame.config(0b101).unwrap();
        let occ = EventPredicate::occurrence(&l, &frame, &eta, 0);
        assert!((u.probability(&occ).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn conditional_sums_to_one() {
        let l = ring(7);
        let frame = LocalFrame::new(&l, 1).unwrap();
        let p = GibbsParams::new(-1.0, 0.1).unwrap();
        for bnd in 0..4u32 {
            let boundary = [bnd & 1 == 1, bnd & 2 == 2];
            let dist = conditional_distribution(&frame, &p, &boundary).unwrap();
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            conditional_occurrence(&frame, &p, &frame.negative(), &[true]),
            Err(Error::IncompleteBoundary { expected: 2, got: 1 })
        ));
        let uniform = GibbsParams::new(0.0, 0.0).unwrap();
        let all = frame.enumerate(DEFAULT_ENUMERATION_CAP_LOG2).unwrap();
        for eta in &all {
            let c = conditional_occurrence(&frame, &uniform, eta, &[true, false]).unwrap();
            assert!((c - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn constants() {
        let l = ring(7);
        let c = occurrence_constants(&LocalFrame::new(&l, 1).unwrap());
        assert!((c.log_lower.exp() - 0.125).abs() < 1e-15);
        assert!((c.log_upper.exp() - 64.0).abs() < 1e-12);
        let l2 = Lattice::new(LatticeSpec::new(2, 5, Norm::Inf, 1)).unwrap();
        let c2 = occurrence_constants(&LocalFrame::new(&l2, 1).unwrap());
        assert!((c2.log_lower - (-9.0 * 2f64.ln())).abs() < 1e-12);
        assert!((c2.log_upper - 72.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_classes() {
        let l = ring(7);
        let frame = LocalFrame::new(&l, 1).unwrap();
        let plus = EventPredicate::site_plus(3);
        assert_eq!(monotonicity(7, &plus).unwrap(), Monotonicity::Increasing);
        let neg = EventPredicate::occurrence(&l, &frame, &frame.negative(), 0);
        assert_eq!(monotonicity(7, &neg).unwrap(), Monotonicity::Decreasing);
        assert_eq!(monotonicity(7, &EventPredicate::always()).unwrap(), Monotonicity::Constant);
        let single = EventPredicate::occurrence(&l, &frame, &frame.single_center_plus(), 0);
        assert_eq!(monotonicity(7, &single).unwrap(), Monotonicity::Neither);
    }

    #[test]
    fn fkg_rejects_mixed_pairs() {
        let l = ring(6);
        let m = ExactMeasure::new(&l, GibbsParams::new(-0.3, 0.4).unwrap()).unwrap();
        let a = EventPredicate::site_plus(0);
        let r = verify_fkg(&m, &a, &EventPredicate::site_plus(2)).unwrap();
        assert!(r.margin > 0.0);
        assert!(matches!(verify_fkg(&m, &a, &a.not()), Err(Error::NonMonotone(_))));
    }

    #[test]
    fn markov_guard() {
        let l = ring(9);
        let m = ExactMeasure::new(&l, GibbsParams::new(-0.5, 0.3).unwrap()).unwrap();
        let u = l.ball(0, 1).unwrap();
        let v = l.ball(2, 1).unwrap();
        let res = verify_markov(
            &m,
            &u,
            &v,
            &[4, 5, 6],
            &EventPredicate::site_plus(0),
            &EventPredicate::site_plus(2),
        );
        assert!(matches!(res, Err(Error::Hypothesis(_))));
    }
}
