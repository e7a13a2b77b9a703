//! Full spin assignments on the torus, bit-packed (bit set = `+1`).

use crate::configs::{GibbsParams, PatchConfig};
use crate::lattice::{Lattice, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinField {
    sites: usize,
    words: Vec<u64>,
}

impl SpinField {
    /// All spins `-1`.
    pub fn minus(sites: usize) -> Self {
        SpinField {
            sites,
            words: vec![0; sites.div_ceil(64)],
        }
    }

    /// All spins `+1`.
    pub fn plus(sites: usize) -> Self {
        let mut f = SpinField::minus(sites);
        for v in 0..sites {
            f.set(v, true);
        }
        f
    }

    pub fn from_spins(spins: &[bool]) -> Self {
        let mut f = SpinField::minus(spins.len());
        for (v, &s) in spins.iter().enumerate() {
            f.set(v, s);
        }
        f
    }

    /// The field whose vertex `v` is positive iff bit `v` of `state` is set.
    /// Requires at most 64 sites.
    pub fn from_state(sites: usize, state: u64) -> Self {
        let mut f = SpinField::minus(sites);
        f.load_state(state);
        f
    }

    /// Overwrites the field with a packed state (at most 64 sites).
    #[inline]
    pub fn load_state(&mut self, state: u64) {
        assert!(self.sites <= 64, "packed states hold at most 64 sites");
        if self.sites > 0 {
            self.words[0] = state;
        }
    }

    /// Packed state of a field with at most 64 sites.
    pub fn state(&self) -> u64 {
        assert!(self.sites <= 64, "packed states hold at most 64 sites");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn n_sites(&self) -> usize {
        self.sites
    }

    /// `true` for `+1`.
    #[inline]
    pub fn get(&self, v: Vertex) -> bool {
        self.words[v >> 6] >> (v & 63) & 1 == 1
    }

    /// `+1` or `-1`.
    #[inline]
    pub fn spin(&self, v: Vertex) -> i32 {
        if self.get(v) {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn set(&mut self, v: Vertex, plus: bool) {
        let mask = 1u64 << (v & 63);
        if plus {
            self.words[v >> 6] |= mask;
        } else {
            self.words[v >> 6] &= !mask;
        }
    }

    pub fn flip(&mut self, v: Vertex) {
        self.words[v >> 6] ^= 1u64 << (v & 63);
    }

    /// The field with every spin reversed.
    pub fn flipped(&self) -> Self {
        let mut f = self.clone();
        for v in 0..self.sites {
            f.flip(v);
        }
        f
    }

    pub fn plus_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn plus_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.sites).filter(|&v| self.get(v))
    }

    /// Mean spin.
    pub fn magnetization(&self) -> f64 {
        if self.sites == 0 {
            return 0.0;
        }
        (2.0 * self.plus_count() as f64 - self.sites as f64) / self.sites as f64
    }

    /// `a * sum sigma + b * sum_edges sigma sigma`.
    pub fn energy(&self, lattice: &Lattice, p: &GibbsParams) -> f64 {
        let m = self.plus_count() as i64;
        let disagree = lattice
            .edges()
            .iter()
            .filter(|&&(x, y)| self.get(x as usize) != self.get(y as usize))
            .count() as i64;
        let edges = lattice.edges().len() as i64;
        p.a() * (2 * m - self.sites as i64) as f64 + p.b() * (edges - 2 * disagree) as f64
    }

    /// Writes the patch spins into the field.
    pub fn apply(&mut self, patch: &PatchConfig) {
        for &(v, s) in patch.entries() {
            self.set(v, s);
        }
    }

    /// `I_V^omega`: the field agrees with the patch on its support.
    pub fn matches(&self, patch: &PatchConfig) -> bool {
        patch.entries().iter().all(|&(v, s)| self.get(v) == s)
    }

    /// Restriction to `vertices`, packed: bit `i` is the spin of `vertices[i]`.
    pub fn restrict(&self, vertices: &[Vertex]) -> u64 {
        vertices
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| acc | (self.get(v) as u64) << i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, Norm};

    #[test]
    fn bits_and_counts() {
        let mut f = SpinField::minus(130);
        f.set(0, true);
        f.set(64, true);
        f.set(129, true);
        assert_eq!(f.plus_count(), 3);
        assert!(f.get(129) && !f.get(128));
        f.flip(129);
        assert_eq!(f.plus_vertices().collect::<Vec<_>>(), vec![0, 64]);
        assert_eq!(f.flipped().plus_count(), 128);
        assert_eq!(SpinField::plus(70).plus_count(), 70);
        assert_eq!(f.restrict(&[64, 1, 0]), 0b101);
    }

    #[test]
    fn energy_of_uniform_fields() {
        let l = Lattice::new(LatticeSpec::new(1, 5, Norm::Inf, 1)).unwrap();
        let p = GibbsParams::new(-1.0, 0.25).unwrap();
        assert!((SpinField::minus(5).energy(&l, &p) - (5.0 + 5.0 * 0.25)).abs() < 1e-15);
        assert!((SpinField::plus(5).energy(&l, &p) - (-5.0 + 5.0 * 0.25)).abs() < 1e-15);
        let one = SpinField::from_state(5, 0b00100);
        assert!((one.energy(&l, &p) - (3.0 + 0.25)).abs() < 1e-15);
    }
}
