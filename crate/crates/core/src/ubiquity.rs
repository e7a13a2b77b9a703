//! Block decomposition of the torus into balls of radius `R(n)` with
//! `n = 2^v (2R + 1)`, the map sending a field to the set of blocks that
//! contain a copy of a local configuration, the induced (pushforward) measure
//! on block fields and the classification of size schedules into regimes.
//!
//! Only `rho = 1` and the `L_inf` norm are accepted: the balls `B(x, R)` are
//! then cubes of side `2R + 1` and tile the torus.

use serde::Serialize;

use crate::configs::{GibbsParams, LocalConfig, LocalFrame};
use crate::error::{Error, Result};
use crate::field::SpinField;
use crate::geography::{ball_pattern, Evaluation};
use crate::lattice::{Lattice, Norm, Vertex};
use crate::measure::ExactMeasure;
use crate::sampler::{self, Estimate};
use crate::stats::LogSumExp;

/// Largest block count for which block fields are enumerated.
pub const MAX_EXACT_BLOCKS: usize = 20;

/// `n = 2^v (2R + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockSize {
    pub n: usize,
    pub v: u32,
    pub radius: usize,
}

pub fn decompose(n: usize) -> Result<BlockSize> {
    if n == 0 {
        return Err(Error::InvalidArgument("size must be positive".into()));
    }
    let v = n.trailing_zeros();
    let odd = n >> v;
    Ok(BlockSize {
        n,
        v,
        radius: (odd - 1) / 2,
    })
}

/// `g(k + 1) = 2^(v(g(k)) + 1) (2 (R(g(k)) + 1) + 1)`, starting from `g1`.
pub fn adequate_sequence(g1: usize, count: usize) -> Result<Vec<BlockSize>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least one".into()));
    }
    let mut out = vec![decompose(g1)?];
    while out.len() < count {
        let last = out[out.len() - 1];
        let next = 1usize
            .checked_shl(last.v + 1)
            .filter(|&p| p != 0 && last.v + 1 < usize::BITS)
            .and_then(|p| p.checked_mul(2 * (last.radius + 1) + 1))
            .ok_or_else(|| Error::Overflow(format!("sequence term after {} overflows", last.n)))?;
        out.push(decompose(next)?);
    }
    Ok(out)
}

/// Block centers `i (2R + 1)`, `i ∈ {0, .., n / (2R + 1) - 1}^d`, and their
/// adjacency (centers at `L_inf` distance `2R + 1`, periodically).
#[derive(Debug, Clone, Serialize)]
pub struct BlockSpec {
    pub size: BlockSize,
    pub d: usize,
    /// Blocks per axis, `2^v`.
    pub per_side: usize,
    pub centers: Vec<Vertex>,
    /// Site -> block index.
    #[serde(skip)]
    owner: Vec<usize>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl BlockSpec {
    pub fn new(lattice: &Lattice) -> Result<Self> {
        let spec = lattice.spec();
        if spec.rho != 1 || spec.q != Norm::Inf {
            return Err(Error::InvalidArgument(
                "block decomposition requires rho = 1 and the L_inf norm".into(),
            ));
        }
        let size = decompose(spec.n)?;
        let d = spec.d;
        let side = 2 * size.radius + 1;
        let per_side = spec.n / side;
        let count = per_side.pow(d as u32);
        let block_coords = |mut b: usize| -> Vec<usize> {
            (0..d)
                .map(|_| {
                    let c = b % per_side;
                    b /= per_side;
                    c
                })
                .collect()
        };
        let pack = |c: &[usize]| c.iter().rev().fold(0usize, |acc, &x| acc * per_side + x);
        let centers: Vec<Vertex> = (0..count)
            .map(|b| {
                let c: Vec<i64> = block_coords(b).iter().map(|&i| (i * side) as i64).collect();
                lattice.index(&c)
            })
            .collect();
        let owner = (0..lattice.n_sites())
            .map(|x| {
                let c: Vec<usize> = lattice
                    .coords(x)
                    .iter()
                    .map(|&xi| ((xi + size.radius) % spec.n) / side)
                    .collect();
                pack(&c)
            })
            .collect();
        let adjacency = (0..count)
            .map(|b| {
                let c = block_coords(b);
                let mut nb: Vec<usize> = (0..3usize.pow(d as u32))
                    .filter_map(|m| {
                        let mut rest = m;
                        let shifted: Vec<usize> = c
                            .iter()
                            .map(|&ci| {
                                let step = rest % 3;
                                rest /= 3;
                                (ci + per_side + step - 1) % per_side
                            })
                            .collect();
                        let o = pack(&shifted);
                        (o != b).then_some(o)
                    })
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();
        Ok(BlockSpec {
            size,
            d,
            per_side,
            centers,
            owner,
            adjacency,
        })
    }

    pub fn block_count(&self) -> usize {
        self.centers.len()
    }

    pub fn radius(&self) -> usize {
        self.size.radius
    }

    /// Index of the block whose ball contains `x`.
    pub fn block_of(&self, x: Vertex) -> usize {
        self.owner[x]
    }

    /// Neighboring blocks in the supergraph.
    pub fn neighbors(&self, b: usize) -> &[usize] {
        &self.adjacency[b]
    }

    /// `delta U` in the supergraph, sorted.
    pub fn boundary(&self, blocks: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = blocks
            .iter()
            .flat_map(|&b| self.adjacency[b].iter().copied())
            .filter(|b| !blocks.contains(b))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Checks that the balls `B(x, R)` around the centers cover every site
    /// exactly once.
    pub fn check_partition(&self, lattice: &Lattice) -> Result<()> {
        let mut hits = vec![0usize; lattice.n_sites()];
        for &c in &self.centers {
            for y in lattice.within(c, self.size.radius) {
                hits[y] += 1;
            }
        }
        match hits.iter().position(|&h| h != 1) {
            None => Ok(()),
            Some(x) => Err(Error::InvalidArgument(format!(
                "site {x} is covered {} times",
                hits[x]
            ))),
        }
    }
}

/// Assignment of `+` (a copy is present) or `-` to each block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BlockField {
    pub plus: Vec<bool>,
}

impl BlockField {
    pub fn all(count: usize, plus: bool) -> Self {
        BlockField {
            plus: vec![plus; count],
        }
    }

    /// Packed key, bit `b` set when block `b` is `+`.
    pub fn key(&self) -> u64 {
        self.plus
            .iter()
            .enumerate()
            .fold(0u64, |acc, (b, &s)| acc | (s as u64) << b)
    }

    pub fn from_key(count: usize, key: u64) -> Self {
        BlockField {
            plus: (0..count).map(|b| key >> b & 1 == 1).collect(),
        }
    }
}

/// Precomputed data for the block map of a fixed configuration.
#[derive(Debug, Clone)]
pub struct BlockMap<'a> {
    lattice: &'a Lattice,
    frame: &'a LocalFrame,
    blocks: &'a BlockSpec,
    eta: LocalConfig,
}

impl<'a> BlockMap<'a> {
    /// Requires `n > 2 (R + r)` so that detection windows do not wrap onto
    /// themselves.
    pub fn new(lattice: &'a Lattice, frame: &'a LocalFrame, blocks: &'a BlockSpec, eta: LocalConfig) -> Result<Self> {
        let window = blocks.radius() + frame.radius();
        if lattice.side() <= 2 * window {
            return Err(Error::InvalidArgument(format!(
                "detection window B(x, {window}) wraps on a torus of side {}",
                lattice.side()
            )));
        }
        Ok(BlockMap {
            lattice,
            frame,
            blocks,
            eta,
        })
    }

    /// Block `x` is `+` iff a copy of `eta` is centered in `B(x, R)`.
    pub fn apply(&self, field: &SpinField) -> BlockField {
        let mut plus = vec![false; self.blocks.block_count()];
        for y in 0..self.lattice.n_sites() {
            if ball_pattern(self.lattice, self.frame, field, y) == self.eta.bits() {
                plus[self.blocks.block_of(y)] = true;
            }
        }
        BlockField { plus }
    }
}

/// Exact pushforward law on block fields, indexed by [`BlockField::key`].
pub fn induced_measure_exact(measure: &ExactMeasure, map: &BlockMap) -> Result<Vec<f64>> {
    let count = map.blocks.block_count();
    if count > MAX_EXACT_BLOCKS {
        return Err(Error::CapExceeded {
            size: count,
            cap: MAX_EXACT_BLOCKS,
        });
    }
    let mut acc = vec![LogSumExp::new(); 1 << count];
    let mut field = SpinField::minus(measure.lattice().n_sites());
    for s in 0..measure.n_states() {
        field.load_state(s);
        acc[map.apply(&field).key() as usize].push(measure.log_prob_state(s));
    }
    Ok(acc.iter().map(|a| a.value().exp()).collect())
}

/// `mu~(target)` exactly or by Monte Carlo.
pub fn induced_probability(
    lattice: &Lattice,
    p: &GibbsParams,
    map: &BlockMap,
    target: &BlockField,
    evaluation: &Evaluation,
) -> Result<Estimate> {
    match evaluation {
        Evaluation::Exact => {
            let m = ExactMeasure::new(lattice, *p)?;
            let law = induced_measure_exact(&m, map)?;
            Ok(Estimate::exact(law[target.key() as usize]))
        }
        Evaluation::Mcmc(s) => {
            let out = sampler::run_chains(lattice, p, s, |f| {
                if &map.apply(f) == target {
                    1.0
                } else {
                    0.0
                }
            })?;
            Ok(sampler::summarize(&out, s))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockMarkovReport {
    /// `max |mu~(A | F(V)) - mu~(A | F(delta U))|` over assignments of `V`.
    pub deviation: f64,
    pub assignments: usize,
    pub passed: bool,
}

/// Exhaustive comparison of `mu~(A | F(V))` and `mu~(A | F(delta U))` for an
/// event `A` on the blocks `U`, given the exact pushforward law. Requires
/// `U ∩ V = ∅` and `delta U ⊆ V` in the supergraph.
pub fn verify_block_markov(
    blocks: &BlockSpec,
    law: &[f64],
    u: &[usize],
    v: &[usize],
    event: &dyn Fn(&BlockField) -> bool,
) -> Result<BlockMarkovReport> {
    if u.iter().any(|b| v.contains(b)) {
        return Err(Error::Hypothesis("U and V overlap".into()));
    }
    let du = blocks.boundary(u);
    if !du.iter().all(|b| v.contains(b)) {
        return Err(Error::Hypothesis("V does not contain the boundary of U".into()));
    }
    let count = blocks.block_count();
    let restrict = |key: u64, set: &[usize]| {
        set.iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((key >> b & 1) as usize) << i)
    };
    let tables = |set: &[usize]| {
        let mut mass = vec![0.0; 1 << set.len()];
        let mut hit = vec![0.0; 1 << set.len()];
        for (key, &pr) in law.iter().enumerate() {
            let k = restrict(key as u64, set);
            mass[k] += pr;
            if event(&BlockField::from_key(count, key as u64)) {
                hit[k] += pr;
            }
        }
        (mass, hit)
    };
    let (mv, hv) = tables(v);
    let (md, hd) = tables(&du);
    let pos: Vec<usize> = du.iter().map(|b| v.iter().position(|c| c == b).unwrap()).collect();
    let mut deviation: f64 = 0.0;
    let mut assignments = 0;
    for k in 0..mv.len() {
        if mv[k] <= 0.0 {
            continue;
        }
        assignments += 1;
        let kd = pos
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &j)| acc | (k >> j & 1) << i);
        deviation = deviation.max((hv[k] / mv[k] - hd[kd] / md[kd]).abs());
    }
    Ok(BlockMarkovReport {
        deviation,
        assignments,
        passed: deviation <= crate::measure::MARKOV_TOL,
    })
}

/// `|mu~(b1 = +, b2 = +) - mu~(b1 = +) mu~(b2 = +)|`.
pub fn block_dependence(law: &[f64], b1: usize, b2: usize) -> f64 {
    let (mut p1, mut p2, mut p12) = (0.0, 0.0, 0.0);
    for (key, &pr) in law.iter().enumerate() {
        let (s1, s2) = (key >> b1 & 1 == 1, key >> b2 & 1 == 1);
        if s1 {
            p1 += pr;
        }
        if s2 {
            p2 += pr;
        }
        if s1 && s2 {
            p12 += pr;
        }
    }
    (p12 - p1 * p2).abs()
}

/// Asymptotic regime of a schedule, judged on a finite grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `n^d W -> 0`: no copy anywhere, `mu~(all minus) -> 1`.
    Absence,
    /// `n^d W -> inf` without the ubiquity condition: `mu~(all minus) -> 0`.
    Presence,
    /// `R^d W / ln(n / R) -> inf`: `mu~(all plus) -> 1`.
    Ubiquity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    /// Final value below which a decreasing quantity counts as vanishing.
    pub vanish: f64,
    /// Final value above which an increasing quantity counts as diverging.
    pub diverge: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            vanish: 0.1,
            diverge: 1.0,
        }
    }
}

/// The driving quantities at one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrivingQuantities {
    /// `n^d W`.
    pub occupancy: f64,
    /// `R^d W / ln(n / R)`, zero when `R = 0`.
    pub ubiquity: f64,
}

pub fn driving_quantities(d: usize, n: usize, radius: usize, log_w: f64) -> DrivingQuantities {
    let w = log_w.exp();
    let ubiquity = if radius == 0 || n <= radius {
        0.0
    } else {
        (radius as f64).powi(d as i32) * w / (n as f64 / radius as f64).ln()
    };
    DrivingQuantities {
        occupancy: (n as f64).powi(d as i32) * w,
        ubiquity,
    }
}

fn strictly(values: &[f64], increasing: bool) -> bool {
    values
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Classifies `(n, R, log W)` points. Divergence means strict increase with
/// a final value above `diverge`; vanishing means strict decrease with a final
/// value below `vanish`. Unclassifiable grids are rejected.
pub fn classify_regime(
    d: usize,
    points: &[(usize, usize, f64)],
    thresholds: RegimeThresholds,
) -> Result<(Regime, Vec<DrivingQuantities>)> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("regime classification needs at least two sizes".into()));
    }
    let q: Vec<DrivingQuantities> = points
        .iter()
        .map(|&(n, r, lw)| driving_quantities(d, n, r, lw))
        .collect();
    let occ: Vec<f64> = q.iter().map(|x| x.occupancy).collect();
    let ubi: Vec<f64> = q.iter().map(|x| x.ubiquity).collect();
    let last = q.len() - 1;
    let regime = if strictly(&ubi, true) && ubi[last] >= thresholds.diverge {
        Regime::Ubiquity
    } else if strictly(&occ, true) && occ[last] >= thresholds.diverge {
        Regime::Presence
    } else if strictly(&occ, false) && occ[last] <= thresholds.vanish {
        Regime::Absence
    } else {
        return Err(Error::InvalidArgument(format!(
            "schedule is not classifiable: occupancy {occ:?}, ubiquity {ubi:?}"
        )));
    };
    Ok((regime, q))
}
