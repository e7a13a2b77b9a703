//! Local configurations on the canonical ball `B(0, r)` and finite patches:
//! positive-vertex counts, perimeters, weights, connections and composition.
//!
//! Weights are carried in the log domain, `log W = 2 a k - 2 b gamma`. The
//! perimeter is always measured in the torus graph, so a patch weight is the
//! Gibbs weight of the patch extended by minus spins, relative to the all-minus
//! field.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeSpec, Vertex};

/// Default cap on `beta_r` for enumeration (2^26 configurations).
pub const DEFAULT_ENUMERATION_CAP_LOG2: usize = 26;

/// Relative tolerance used when two log-weights are declared equal.
pub const WEIGHT_EQ_RTOL: f64 = 1e-12;

/// Magnetic field `a` and pair potential `b >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    a: f64,
    b: f64,
}

impl GibbsParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite potentials a={a} b={b}")));
        }
        if b < 0.0 {
            return Err(Error::InvalidParams(format!("pair potential must be >= 0, got {b}")));
        }
        Ok(GibbsParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `2 a k - 2 b gamma`.
    #[inline]
    pub fn log_weight(&self, k: usize, gamma: usize) -> f64 {
        2.0 * self.a * k as f64 - 2.0 * self.b * gamma as f64
    }

    /// `a + V b <= 0`.
    pub fn satisfies_single(&self, degree: usize) -> bool {
        self.a + degree as f64 * self.b <= 0.0
    }

    /// `a + 2 V b <= 0`.
    pub fn satisfies_double(&self, degree: usize) -> bool {
        self.a + 2.0 * degree as f64 * self.b <= 0.0
    }

    /// Parameters with `a` negated (spin-flip dual).
    pub fn flipped(&self) -> Self {
        GibbsParams { a: -self.a, b: self.b }
    }
}

/// The ball `B(0, r)` of a lattice with the adjacency data needed by local
/// configurations.
#[derive(Debug, Clone)]
pub struct LocalFrame {
    spec: LatticeSpec,
    r: usize,
    degree: usize,
    ball: Vec<Vertex>,
    offsets: Vec<Vec<i64>>,
    internal_edges: Vec<(usize, usize)>,
    boundary: Vec<Vertex>,
    links: Vec<Vec<usize>>,
}

impl LocalFrame {
    pub fn new(lattice: &Lattice, r: usize) -> Result<Self> {
        let ball = lattice.ball_offsets(r)?;
        if ball.len() > 64 {
            return Err(Error::InvalidArgument(format!(
                "ball of radius {r} has {} vertices; packed configurations hold at most 64",
                ball.len()
            )));
        }
        let offsets = ball.iter().map(|&v| lattice.offset_of(v)).collect();
        let pos = |v: Vertex| ball.iter().position(|&w| w == v);
        let mut internal_edges = Vec::new();
        for (i, &x) in ball.iter().enumerate() {
            for &y in lattice.neighbors(x) {
                if let Some(j) = pos(y as usize) {
                    if i < j {
                        internal_edges.push((i, j));
                    }
                }
            }
        }
        let boundary = lattice.boundary(&ball);
        let links = ball
            .iter()
            .map(|&x| {
                let mut l: Vec<usize> = lattice
                    .neighbors(x)
                    .iter()
                    .filter_map(|&y| boundary.binary_search(&(y as usize)).ok())
                    .collect();
                l.sort_unstable();
                l
            })
            .collect();
        Ok(LocalFrame {
            spec: *lattice.spec(),
            r,
            degree: lattice.degree(),
            ball,
            offsets,
            internal_edges,
            boundary,
            links,
        })
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn beta(&self) -> usize {
        self.ball.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Ball shifts from the origin in canonical order.
    pub fn ball_shifts(&self) -> &[Vertex] {
        &self.ball
    }

    /// `delta B(0, r)`, sorted.
    pub fn boundary_shifts(&self) -> &[Vertex] {
        &self.boundary
    }

    /// For each ball position, the boundary positions adjacent to it.
    pub fn boundary_links(&self) -> &[Vec<usize>] {
        &self.links
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    /// Index of the center in canonical order.
    pub fn center_index(&self) -> usize {
        self.ball.iter().position(|&v| v == 0).expect("origin is in its own ball")
    }

    fn check_bits(&self, bits: u64) -> Result<()> {
        if self.beta() < 64 && bits >> self.beta() != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit pattern {bits:#x} exceeds a ball of {} vertices",
                self.beta()
            )));
        }
        Ok(())
    }

    /// Builds the local configuration whose bit `i` is the spin (1 = +) of the
    /// `i`-th ball vertex in canonical order.
    pub fn config(&self, bits: u64) -> Result<LocalConfig> {
        self.check_bits(bits)?;
        let k = bits.count_ones() as usize;
        let internal = self
            .internal_edges
            .iter()
            .filter(|&&(i, j)| bits >> i & 1 == 1 && bits >> j & 1 == 1)
            .count();
        Ok(LocalConfig {
            r: self.r,
            bits,
            k,
            gamma: self.degree * k - 2 * internal,
        })
    }

    /// All-minus configuration `eta_-`.
    pub fn negative(&self) -> LocalConfig {
        self.config(0).expect("zero pattern fits")
    }

    /// The configuration with a single positive vertex at the center.
    pub fn single_center_plus(&self) -> LocalConfig {
        self.config(1u64 << self.center_index()).expect("center bit fits")
    }

    /// Positions (canonical indices) of positive vertices.
    pub fn plus_positions(&self, c: &LocalConfig) -> Vec<usize> {
        (0..self.beta()).filter(|&i| c.bits >> i & 1 == 1).collect()
    }

    /// Every configuration of `C_r` in lexicographic order of the packed bits.
    pub fn enumerate(&self, cap_log2: usize) -> Result<Vec<LocalConfig>> {
        let beta = self.beta();
        if beta > cap_log2 {
            return Err(Error::CapExceeded { size: beta, cap: cap_log2 });
        }
        (0..1u64 << beta).map(|bits| self.config(bits)).collect()
    }

    /// `eta_x`: the configuration carried onto `B(x, r)`.
    pub fn translate(&self, lattice: &Lattice, c: &LocalConfig, x: Vertex) -> PatchConfig {
        let entries = self
            .ball
            .iter()
            .enumerate()
            .map(|(i, &s)| (lattice.add(x, s), c.bits >> i & 1 == 1))
            .collect();
        PatchConfig::new(entries).expect("translated ball has distinct vertices")
    }

    /// ASCII rendering (`+` / `-`) for d <= 2; rows are the second coordinate.
    pub fn render(&self, c: &LocalConfig) -> String {
        match self.spec.d {
            1 => (0..self.beta())
                .map(|i| if c.bits >> i & 1 == 1 { '+' } else { '-' })
                .collect(),
            2 => {
                let reach = (self.spec.rho * self.r) as i64;
                let mut out = String::new();
                for y in -reach..=reach {
                    let row: String = (-reach..=reach)
                        .map(|x| {
                            match self.offsets.iter().position(|o| o[0] == x && o[1] == y) {
                                Some(i) if c.bits >> i & 1 == 1 => '+',
                                Some(_) => '-',
                                None => ' ',
                            }
                        })
                        .collect();
                    out.push_str(row.trim_end());
                    out.push('\n');
                }
                out
            }
            _ => c.to_string(),
        }
    }

    /// Parses the record written by [`LocalConfig`]'s `Display` (`r=1:010`).
    pub fn parse_config(&self, s: &str) -> Result<LocalConfig> {
        let (head, spins) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected r=<radius>:<bits>, got `{s}`")))?;
        let r: usize = head
            .trim()
            .strip_prefix("r=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad radius field `{head}`")))?;
        if r != self.r {
            return Err(Error::Parse(format!("radius {r} does not match frame radius {}", self.r)));
        }
        if spins.len() != self.beta() {
            return Err(Error::Parse(format!(
                "expected {} spins, got {}",
                self.beta(),
                spins.len()
            )));
        }
        let mut bits = 0u64;
        for (i, ch) in spins.chars().enumerate() {
            match ch {
                '1' | '+' => bits |= 1 << i,
                '0' | '-' => {}
                other => return Err(Error::Parse(format!("bad spin character `{other}`"))),
            }
        }
        self.config(bits)
    }
}

/// A spin pattern on `B(0, r)` with its positive count and perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalConfig {
    r: usize,
    bits: u64,
    k: usize,
    gamma: usize,
}

impl LocalConfig {
    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Number of positive vertices.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Perimeter.
    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn is_negative(&self) -> bool {
        self.bits == 0
    }

    pub fn log_weight(&self, p: &GibbsParams) -> f64 {
        p.log_weight(self.k, self.gamma)
    }

    /// `V_+(eta) ⊆ V_+(other)`.
    pub fn plus_subset_of(&self, other: &LocalConfig) -> bool {
        self.bits & !other.bits == 0
    }
}

impl fmt::Display for LocalConfig {
    /// `r=<radius>:<spins>` with one `0`/`1` per ball vertex in canonical order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = (64 - self.bits.leading_zeros()) as usize;
        write!(f, "r={}:", self.r)?;
        // The frame knows beta; without it, print at least the significant bits.
        let beta = f.width().unwrap_or(width.max(1));
        for i in 0..beta {
            f.write_str(if self.bits >> i & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl LocalFrame {
    /// Canonical record with exactly `beta` spin characters.
    pub fn record(&self, c: &LocalConfig) -> String {
        format!("{:width$}", c, width = self.beta())
    }
}

/// Spin assignment on an arbitrary finite support, sorted by vertex.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatchConfig {
    entries: Vec<(Vertex, bool)>,
}

impl PatchConfig {
    pub fn new(mut entries: Vec<(Vertex, bool)>) -> Result<Self> {
        entries.sort_unstable_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::OverlappingSupports(w[0].0));
        }
        Ok(PatchConfig { entries })
    }

    pub fn empty() -> Self {
        PatchConfig::default()
    }

    /// All vertices of `support` set to the given spin.
    pub fn uniform(support: &[Vertex], plus: bool) -> Result<Self> {
        PatchConfig::new(support.iter().map(|&v| (v, plus)).collect())
    }

    pub fn entries(&self) -> &[(Vertex, bool)] {
        &self.entries
    }

    pub fn support(&self) -> Vec<Vertex> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn spin_at(&self, v: Vertex) -> Option<bool> {
        self.entries
            .binary_search_by_key(&v, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    fn is_plus(&self, v: Vertex) -> bool {
        self.spin_at(v) == Some(true)
    }

    pub fn plus_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.entries.iter().filter(|e| e.1).map(|e| e.0)
    }

    pub fn k(&self) -> usize {
        self.plus_vertices().count()
    }

    /// Edges from a positive support vertex to a vertex that is not positive in
    /// the patch (negative in the support, or outside it).
    pub fn perimeter(&self, lattice: &Lattice) -> usize {
        self.plus_vertices()
            .map(|x| {
                lattice
                    .neighbors(x)
                    .iter()
                    .filter(|&&y| !self.is_plus(y as usize))
                    .count()
            })
            .sum()
    }

    pub fn log_weight(&self, lattice: &Lattice, p: &GibbsParams) -> f64 {
        p.log_weight(self.k(), self.perimeter(lattice))
    }

    fn check_disjoint(&self, other: &PatchConfig) -> Result<()> {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i].0, other.entries[j].0);
            match a.cmp(&b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Err(Error::OverlappingSupports(a)),
            }
        }
        Ok(())
    }

    /// `conn(self, other)`: edges joining a positive vertex of each patch.
    pub fn connection(&self, lattice: &Lattice, other: &PatchConfig) -> Result<usize> {
        self.check_disjoint(other)?;
        Ok(self
            .plus_vertices()
            .map(|x| {
                lattice
                    .neighbors(x)
                    .iter()
                    .filter(|&&y| other.is_plus(y as usize))
                    .count()
            })
            .sum())
    }

    /// The patch equal to `self` on its support and to `other` on its support.
    pub fn compose(&self, other: &PatchConfig) -> Result<PatchConfig> {
        self.check_disjoint(other)?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        PatchConfig::new(entries)
    }
}

/// Selection mode for [`filter_by_weight`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `C_r(W)`: weight at most `W`.
    AtMost,
    /// `D_r(W)`: weight equal to `W`.
    Exactly,
}

/// A weight-filtered family with its index (largest positive count).
#[derive(Debug, Clone)]
pub struct WeightFamily {
    pub members: Vec<LocalConfig>,
    pub mode: WeightMode,
    pub log_threshold: f64,
    pub index: Option<usize>,
}

impl WeightFamily {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn weight_tolerance(log_w: f64) -> f64 {
    WEIGHT_EQ_RTOL * log_w.abs().max(1.0)
}

/// Keeps the configurations whose weight is at most (or equal to) `exp(log_w)`.
pub fn filter_by_weight(
    configs: &[LocalConfig],
    p: &GibbsParams,
    log_w: f64,
    mode: WeightMode,
) -> WeightFamily {
    let tol = weight_tolerance(log_w);
    let members: Vec<LocalConfig> = configs
        .iter()
        .filter(|c| {
            let lw = c.log_weight(p);
            match mode {
                WeightMode::AtMost => lw <= log_w + tol,
                WeightMode::Exactly => (lw - log_w).abs() <= tol,
            }
        })
        .copied()
        .collect();
    let index = members.iter().map(|c| c.k()).max();
    WeightFamily {
        members,
        mode,
        log_threshold: log_w,
        index,
    }
}
