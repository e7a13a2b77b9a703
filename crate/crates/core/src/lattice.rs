//! Torus geometry: vertices of `{0,..,n-1}^d` with periodic boundary, the
//! `L_q` / reach-`rho` neighborhood, graph distance, balls, rings and
//! boundaries.
//!
//! Vertices are packed into a single index in `[0, n^d)` by mixed-radix
//! encoding, dimension 0 least significant.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Packed vertex index.
pub type Vertex = usize;

/// Norm used to define the neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    /// `L_q` with finite `q >= 1`.
    L(u32),
    /// `L_infinity` (Chebyshev).
    Inf,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L(q) => write!(f, "{q}"),
            Norm::Inf => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "inf" || t == "infinity" {
            return Ok(Norm::Inf);
        }
        let q: u32 = t
            .parse()
            .map_err(|_| Error::Parse(format!("norm exponent `{s}`")))?;
        if q == 0 {
            return Err(Error::Parse("norm exponent must be >= 1".into()));
        }
        Ok(Norm::L(q))
    }
}

impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Norm::L(q) => s.serialize_u32(*q),
            Norm::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct NormVisitor;

        impl Visitor<'_> for NormVisitor {
            type Value = Norm;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Norm, E> {
                if v == 0 || v > u32::MAX as u64 {
                    return Err(E::custom("norm exponent out of range"));
                }
                Ok(Norm::L(v as u32))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Norm, E> {
                if v <= 0 {
                    return Err(E::custom("norm exponent must be >= 1"));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Norm, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(NormVisitor)
    }
}

/// Plain description of a torus: dimension, side, norm and reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub d: usize,
    pub n: usize,
    pub q: Norm,
    pub rho: usize,
}

impl LatticeSpec {
    pub fn new(d: usize, n: usize, q: Norm, rho: usize) -> Self {
        LatticeSpec { d, n, q, rho }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.rho == 0 {
            return Err(Error::InvalidLattice(format!(
                "d, n and rho must be positive ({self})"
            )));
        }
        if let Norm::L(q) = self.q {
            if q == 0 {
                return Err(Error::InvalidLattice("q must be >= 1".into()));
            }
            let bound = (self.rho as u128)
                .checked_pow(q)
                .and_then(|p| p.checked_mul(self.d as u128));
            if bound.is_none() {
                return Err(Error::InvalidLattice(format!(
                    "rho^q overflows exact integer arithmetic for q={q}; use q=inf"
                )));
            }
        }
        let sites = (self.n as u128).checked_pow(self.d as u32);
        match sites {
            Some(s) if s <= u32::MAX as u128 => Ok(()),
            _ => Err(Error::InvalidLattice(format!("n^d too large ({self})"))),
        }
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} n={} q={} rho={}", self.d, self.n, self.q, self.rho)
    }
}

impl FromStr for LatticeSpec {
    type Err = Error;

    /// Parses `d=2 n=16 q=inf rho=1` (whitespace or comma separated, any order).
    fn from_str(s: &str) -> Result<Self> {
        let (mut d, mut n, mut q, mut rho) = (None, None, None, None);
        for tok in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))?;
            let int = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad integer `{v}` for `{key}`")))
            };
            match key.trim() {
                "d" => d = Some(int(value)?),
                "n" => n = Some(int(value)?),
                "q" => q = Some(value.parse::<Norm>()?),
                "rho" => rho = Some(int(value)?),
                other => return Err(Error::Parse(format!("unknown lattice field `{other}`"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing lattice field `{name}`"));
        let spec = LatticeSpec {
            d: d.ok_or_else(|| missing("d"))?,
            n: n.ok_or_else(|| missing("n"))?,
            q: q.ok_or_else(|| missing("q"))?,
            rho: rho.ok_or_else(|| missing("rho"))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Minimal residue of `c` modulo `n`, in `(-n/2, n/2]`.
fn min_residue(c: usize, n: usize) -> i64 {
    if 2 * c <= n {
        c as i64
    } else {
        c as i64 - n as i64
    }
}

/// Built torus with its neighbor table and distance table from the origin.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    sites: usize,
    degree: usize,
    /// Neighbors of the origin, as packed vertices.
    shifts: Vec<Vertex>,
    neighbors: Vec<u32>,
    edges: Vec<(u32, u32)>,
    origin_dist: Vec<u32>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let sites = spec.n.pow(spec.d as u32);
        let mut lat = Lattice {
            spec,
            sites,
            degree: 0,
            shifts: Vec::new(),
            neighbors: Vec::new(),
            edges: Vec::new(),
            origin_dist: Vec::new(),
        };

        let mut shifts: Vec<Vertex> = (1..sites).filter(|&v| lat.is_neighbor_shift(v)).collect();
        shifts.sort_unstable();
        lat.degree = shifts.len();

        let mut neighbors = Vec::with_capacity(sites * shifts.len());
        for x in 0..sites {
            for &s in &shifts {
                neighbors.push(lat.add(x, s) as u32);
            }
        }
        lat.shifts = shifts;
        lat.neighbors = neighbors;

        let mut edges = Vec::with_capacity(sites * lat.degree / 2);
        for x in 0..sites {
            for &y in lat.neighbors(x) {
                if (x as u32) < y {
                    edges.push((x as u32, y));
                }
            }
        }
        lat.edges = edges;
        lat.origin_dist = lat.bfs(0);
        Ok(lat)
    }

    fn is_neighbor_shift(&self, v: Vertex) -> bool {
        let rho = self.spec.rho as u128;
        let n = self.spec.n;
        let res: Vec<u128> = self
            .coords(v)
            .into_iter()
            .map(|c| min_residue(c, n).unsigned_abs() as u128)
            .collect();
        if res.iter().any(|&m| m > rho) {
            return false;
        }
        match self.spec.q {
            Norm::Inf => true,
            Norm::L(q) => {
                let total: u128 = res.iter().map(|m| m.pow(q)).sum();
                total <= rho.pow(q)
            }
        }
    }

    fn bfs(&self, src: Vertex) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.sites];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x];
            for &y in self.neighbors(x) {
                let y = y as usize;
                if dist[y] == u32::MAX {
                    dist[y] = dx + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn side(&self) -> usize {
        self.spec.n
    }

    pub fn n_sites(&self) -> usize {
        self.sites
    }

    /// Common neighbor count of every vertex.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, x: Vertex) -> &[u32] {
        &self.neighbors[x * self.degree..(x + 1) * self.degree]
    }

    pub fn neighbor_set(&self, x: Vertex) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self.neighbors(x).iter().map(|&y| y as usize).collect();
        v.sort_unstable();
        v
    }

    pub fn is_edge(&self, x: Vertex, y: Vertex) -> bool {
        x != y && self.graph_distance(x, y) == 1
    }

    pub fn coords(&self, mut v: Vertex) -> Vec<usize> {
        let n = self.spec.n;
        (0..self.spec.d)
            .map(|_| {
                let c = v % n;
                v /= n;
                c
            })
            .collect()
    }

    /// Packs coordinates (any integers, reduced modulo n).
    pub fn index(&self, coords: &[i64]) -> Vertex {
        let n = self.spec.n as i64;
        coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * n as usize + c.rem_euclid(n) as usize)
    }

    /// Coordinates of `v` as minimal residues, i.e. the offset from the origin.
    pub fn offset_of(&self, v: Vertex) -> Vec<i64> {
        self.coords(v)
            .into_iter()
            .map(|c| min_residue(c, self.spec.n))
            .collect()
    }

    /// `x + y` componentwise modulo n.
    #[inline]
    pub fn add(&self, mut x: Vertex, mut y: Vertex) -> Vertex {
        let n = self.spec.n;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.spec.d {
            let c = (x % n + y % n) % n;
            out += c * stride;
            stride *= n;
            x /= n;
            y /= n;
        }
        out
    }

    /// `y - x` componentwise modulo n.
    #[inline]
    pub fn sub(&self, mut y: Vertex, mut x: Vertex) -> Vertex {
        let n = self.spec.n;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.spec.d {
            let c = (y % n + n - x % n) % n;
            out += c * stride;
            stride *= n;
            x /= n;
            y /= n;
        }
        out
    }

    pub fn graph_distance(&self, x: Vertex, y: Vertex) -> usize {
        self.origin_dist[self.sub(y, x)] as usize
    }

    /// Distance from the origin, indexed by packed vertex.
    pub fn origin_distances(&self) -> &[u32] {
        &self.origin_dist
    }

    fn check_radius(&self, r: usize) -> Result<()> {
        if self.spec.n > 2 * self.spec.rho * r {
            Ok(())
        } else {
            Err(Error::SelfOverlap {
                n: self.spec.n,
                rho: self.spec.rho,
                r,
            })
        }
    }

    /// `B(0, r)` in canonical order: lexicographic in the offset vector,
    /// highest dimension most significant (row-major for d = 2).
    pub fn ball_offsets(&self, r: usize) -> Result<Vec<Vertex>> {
        self.check_radius(r)?;
        let mut ball: Vec<Vertex> = (0..self.sites)
            .filter(|&v| self.origin_dist[v] as usize <= r)
            .collect();
        ball.sort_by_key(|&v| {
            let mut o = self.offset_of(v);
            o.reverse();
            o
        });
        Ok(ball)
    }

    /// `|B(x, r)|`.
    pub fn beta(&self, r: usize) -> Result<usize> {
        Ok(self.ball_offsets(r)?.len())
    }

    /// `B(x, r)` in canonical order (the translate of [`Lattice::ball_offsets`]).
    pub fn ball(&self, x: Vertex, r: usize) -> Result<Vec<Vertex>> {
        Ok(self
            .ball_offsets(r)?
            .into_iter()
            .map(|o| self.add(x, o))
            .collect())
    }

    /// Shifts `s` from the origin with `lo < dist(0, s) <= hi` (`lo = None` means
    /// no lower bound). No self-overlap restriction.
    pub fn shifts_between(&self, lo: Option<usize>, hi: usize) -> Vec<Vertex> {
        (0..self.sites)
            .filter(|&v| {
                let d = self.origin_dist[v] as usize;
                d <= hi && lo.is_none_or(|l| d > l)
            })
            .collect()
    }

    /// `{ y : dist(x, y) <= r }` without the self-overlap check, sorted.
    pub fn within(&self, x: Vertex, r: usize) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = self
            .shifts_between(None, r)
            .into_iter()
            .map(|s| self.add(x, s))
            .collect();
        v.sort_unstable();
        v
    }

    /// `{ y : r_in < dist(x, y) <= r_out }`, sorted.
    pub fn ring(&self, x: Vertex, r_in: usize, r_out: usize) -> Result<Vec<Vertex>> {
        if r_in >= r_out {
            return Err(Error::InvalidRing { r_in, r_out });
        }
        let mut v: Vec<Vertex> = self
            .shifts_between(Some(r_in), r_out)
            .into_iter()
            .map(|s| self.add(x, s))
            .collect();
        v.sort_unstable();
        Ok(v)
    }

    /// `delta V`: vertices outside `set` adjacent to some member, sorted.
    pub fn boundary(&self, set: &[Vertex]) -> Vec<Vertex> {
        let mut inside = vec![false; self.sites];
        for &x in set {
            inside[x] = true;
        }
        let mut mark = vec![false; self.sites];
        for &x in set {
            for &y in self.neighbors(x) {
                let y = y as usize;
                if !inside[y] {
                    mark[y] = true;
                }
            }
        }
        (0..self.sites).filter(|&y| mark[y]).collect()
    }

    /// `V ∪ delta V`, sorted.
    pub fn closure(&self, set: &[Vertex]) -> Vec<Vertex> {
        let mut v: Vec<Vertex> = set.to_vec();
        v.extend(self.boundary(set));
        v.sort_unstable();
        v.dedup();
        v
    }

    /// No vertex of `u` lies in the closure of `v`.
    pub fn v_disjoint(&self, u: &[Vertex], v: &[Vertex]) -> bool {
        let mut mark = vec![false; self.sites];
        for x in self.closure(v) {
            mark[x] = true;
        }
        u.iter().all(|&x| !mark[x])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(d: usize, n: usize, q: Norm, rho: usize) -> Lattice {
        Lattice::new(LatticeSpec::new(d, n, q, rho)).unwrap()
    }

    #[test]
    fn neighbor_counts() {
        assert_eq!(lat(2, 10, Norm::Inf, 1).degree(), 8);
        assert_eq!(lat(2, 10, Norm::L(1), 1).degree(), 4);
        assert_eq!(lat(2, 10, Norm::L(2), 2).degree(), 12);
        let l = lat(1, 10, Norm::L(2), 2);
        assert_eq!(l.neighbor_set(0), vec![1, 2, 8, 9]);
    }

    #[test]
    fn regular_degree() {
        let l = lat(3, 6, Norm::L(2), 1);
        for x in 0..l.n_sites() {
            assert_eq!(l.neighbor_set(x).len(), 6);
        }
    }

    #[test]
    fn balls_and_rings() {
        let l = lat(2, 10, Norm::Inf, 1);
        assert_eq!(l.beta(2).unwrap(), 25);
        assert_eq!(l.ball(37, 0).unwrap(), vec![37]);
        assert_eq!(l.ring(0, 1, 2).unwrap().len(), 16);
        let diamond = lat(2, 10, Norm::L(1), 1);
        assert_eq!(diamond.beta(1).unwrap(), 5);
        assert!(matches!(l.ball(0, 5), Err(Error::SelfOverlap { .. })));
        assert!(matches!(l.ring(0, 2, 2), Err(Error::InvalidRing { .. })));
    }

    #[test]
    fn ring_zero_is_punctured_ball() {
        let l = lat(2, 11, Norm::L(1), 2);
        let x = l.index(&[3, 7]);
        let mut ball = l.ball(x, 2).unwrap();
        ball.retain(|&y| y != x);
        ball.sort_unstable();
        assert_eq!(l.ring(x, 0, 2).unwrap(), ball);
    }

    #[test]
    fn distances() {
        let l = lat(1, 10, Norm::Inf, 1);
        assert_eq!(l.graph_distance(0, 9), 1);
        assert_eq!(l.graph_distance(4, 4), 0);
        let l2 = lat(2, 10, Norm::Inf, 1);
        assert_eq!(l2.graph_distance(0, l2.index(&[2, 3])), 3);
    }

    #[test]
    fn boundary_of_ball_is_next_ring() {
        let l = lat(2, 12, Norm::L(1), 1);
        let x = l.index(&[5, 5]);
        let b = l.ball(x, 2).unwrap();
        assert_eq!(l.boundary(&b), l.ring(x, 2, 3).unwrap());
        let all: Vec<Vertex> = (0..l.n_sites()).collect();
        assert!(l.boundary(&all).is_empty());
        assert!(l.boundary(&[]).is_empty());
        let mut closed = l.ball(x, 3).unwrap();
        closed.sort_unstable();
        assert_eq!(l.closure(&b), closed);
    }

    #[test]
    fn ball_disjointness_threshold() {
        let l = lat(1, 30, Norm::Inf, 1);
        let r = 2;
        let b0 = l.ball(0, r).unwrap();
        let far = l.ball(2 * r + 2, r).unwrap();
        let near = l.ball(2 * r + 1, r).unwrap();
        assert!(l.v_disjoint(&b0, &far));
        assert!(!l.v_disjoint(&b0, &near));
        assert!(l.v_disjoint(&[], &b0));
    }

    #[test]
    fn spec_round_trip() {
        let s: LatticeSpec = "d=2 n=16 q=inf rho=1".parse().unwrap();
        assert_eq!(s, LatticeSpec::new(2, 16, Norm::Inf, 1));
        assert_eq!(s.to_string().parse::<LatticeSpec>().unwrap(), s);
        let t: LatticeSpec = "d=3,n=5,q=2,rho=1".parse().unwrap();
        assert_eq!(t.q, Norm::L(2));
        assert!("d=2 n=16 q=0 rho=1".parse::<LatticeSpec>().is_err());
        assert!("d=2 n=16 rho=1".parse::<LatticeSpec>().is_err());
    }
}
