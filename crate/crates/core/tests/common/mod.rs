//! Brute-force reference implementations built from coordinates alone, with
//! no use of the crate's lattice, energy or enumeration code.

#![allow(dead_code)]

/// Neighbor lists of the `L_inf` (king) or `L_1` (nearest-neighbor) torus
/// with radius one, vertex index `sum_i c_i n^i`.
pub struct Torus {
    pub d: usize,
    pub n: usize,
    pub neighbors: Vec<Vec<usize>>,
}

impl Torus {
    pub fn new(d: usize, n: usize, chebyshev: bool) -> Self {
        let sites = n.pow(d as u32);
        let mut neighbors = vec![Vec::new(); sites];
        for (x, list) in neighbors.iter_mut().enumerate() {
            let cx = Self::coords_of(d, n, x);
            for y in 0..sites {
                if y == x {
                    continue;
                }
                let cy = Self::coords_of(d, n, y);
                let steps: Vec<usize> = cx
                    .iter()
                    .zip(&cy)
                    .map(|(&a, &b)| {
                        let diff = a.abs_diff(b);
                        diff.min(n - diff)
                    })
                    .collect();
                let near = if chebyshev {
                    steps.iter().all(|&s| s <= 1)
                } else {
                    steps.iter().sum::<usize>() == 1
                };
                if near {
                    list.push(y);
                }
            }
        }
        Torus { d, n, neighbors }
    }

    fn coords_of(d: usize, n: usize, mut x: usize) -> Vec<usize> {
        (0..d)
            .map(|_| {
                let c = x % n;
                x /= n;
                c
            })
            .collect()
    }

    pub fn coords(&self, x: usize) -> Vec<usize> {
        Self::coords_of(self.d, self.n, x)
    }

    pub fn index(&self, coords: &[i64]) -> usize {
        let n = self.n as i64;
        coords
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * self.n + c.rem_euclid(n) as usize)
    }

    pub fn sites(&self) -> usize {
        self.neighbors.len()
    }

    /// `a sum sigma + b sum_{edges} sigma sigma`, each edge once.
    pub fn hamiltonian(&self, spins: &[i32], a: f64, b: f64) -> f64 {
        let mut h = a * spins.iter().sum::<i32>() as f64;
        for (x, list) in self.neighbors.iter().enumerate() {
            for &y in list {
                if x < y {
                    h += b * (spins[x] * spins[y]) as f64;
                }
            }
        }
        h
    }

    /// Normalized probabilities of every state (bit `x` set means `+` at `x`).
    pub fn law(&self, a: f64, b: f64) -> Vec<f64> {
        let sites = self.sites();
        let energies: Vec<f64> = (0..1u64 << sites)
            .map(|s| self.hamiltonian(&spins(s, sites), a, b))
            .collect();
        let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = energies.iter().map(|e| (e - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        weights.iter().map(|w| w / z).collect()
    }

    /// Vertices at `L_inf` coordinate distance at most `r` from `x`, listed
    /// in lexicographic offset order with the first axis varying slowest.
    pub fn cube(&self, x: usize, r: usize) -> Vec<usize> {
        let cx: Vec<i64> = self.coords(x).iter().map(|&c| c as i64).collect();
        let r = r as i64;
        let mut out = Vec::new();
        let mut offset = vec![-r; self.d];
        loop {
            let c: Vec<i64> = cx.iter().zip(&offset).map(|(a, b)| a + b).collect();
            out.push(self.index(&c));
            let mut i = self.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if offset[i] < r {
                    offset[i] += 1;
                    break;
                }
                offset[i] = -r;
            }
        }
    }
}

pub fn spins(state: u64, sites: usize) -> Vec<i32> {
    (0..sites).map(|x| if state >> x & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn is_plus(state: u64, x: usize) -> bool {
    state >> x & 1 == 1
}

/// Pushforward law computed from the coordinate oracle and the literal
/// definition "block x is + iff some y with |y - x|_inf <= R has eta at y".
pub fn brute_pushforward(n: usize, r_block: usize, eta_bits: u64, a: f64, b: f64) -> Vec<f64> {
    let oracle = Torus::new(1, n, true);
    let law = oracle.law(a, b);
    let blocks = n / (2 * r_block + 1);
    let mut out = vec![0.0; 1 << blocks];
    for (s, &w) in law.iter().enumerate() {
        let s = s as u64;
        let mut key = 0u64;
        for i in 0..blocks {
            let center = i * (2 * r_block + 1);
            let hit = oracle.cube(center, r_block).iter().any(|&y| {
                oracle
                    .cube(y, 1)
                    .iter()
                    .enumerate()
                    .all(|(j, &z)| is_plus(s, z) == (eta_bits >> j & 1 == 1))
            });
            if hit {
                key |= 1 << i;
            }
        }
        out[key as usize] += w;
    }
    out
}
