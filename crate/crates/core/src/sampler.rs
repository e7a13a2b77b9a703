//! Single-site heat-bath dynamics with optional clamped vertices.
//!
//! Sites are updated in raster order (increasing packed index). Chain `i` of
//! a run draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so chains
//! never share random numbers and every run is reproducible from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configs::{GibbsParams, LocalConfig, LocalFrame, PatchConfig};
use crate::error::{Error, Result};
use crate::event::EventPredicate;
use crate::field::SpinField;
use crate::lattice::{Lattice, Vertex};
use crate::stats;

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_THINNING: usize = 10;
/// Minimum number of batches pooled over all chains.
pub const MIN_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub seed: u64,
    pub burn_in_sweeps: usize,
    /// Total number of recorded samples over all chains.
    pub n_samples: usize,
    pub thinning_sweeps: usize,
    pub chains: usize,
    /// Frozen region; never updated.
    #[serde(skip)]
    pub clamp: Option<PatchConfig>,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            seed: 0,
            burn_in_sweeps: DEFAULT_BURN_IN,
            n_samples: 10_000,
            thinning_sweeps: DEFAULT_THINNING,
            chains: 1,
            clamp: None,
        }
    }
}

impl ChainSettings {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        ChainSettings {
            seed,
            n_samples,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidSettings("n_samples must be positive".into()));
        }
        if self.thinning_sweeps == 0 {
            return Err(Error::InvalidSettings("thinning must be at least one sweep".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidSettings("at least one chain is required".into()));
        }
        Ok(())
    }

    /// Samples assigned to chain `i`: an even split, earlier chains taking the
    /// remainder.
    fn samples_for(&self, i: usize) -> usize {
        self.n_samples / self.chains + usize::from(i < self.n_samples % self.chains)
    }

    /// Settings with an additional frozen region merged into the clamp.
    pub fn with_clamp(&self, extra: &PatchConfig) -> Result<Self> {
        let clamp = match &self.clamp {
            None => extra.clone(),
            Some(c) => {
                let mut entries = c.entries().to_vec();
                for &(v, s) in extra.entries() {
                    match c.spin_at(v) {
                        Some(t) if t != s => {
                            return Err(Error::ClampConflict(format!(
                                "vertex {v} is already clamped to the opposite spin"
                            )))
                        }
                        Some(_) => {}
                        None => entries.push((v, s)),
                    }
                }
                PatchConfig::new(entries)?
            }
        };
        Ok(ChainSettings {
            clamp: Some(clamp),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub seed: u64,
    pub chains: usize,
    pub burn_in_sweeps: usize,
    pub thinning_sweeps: usize,
    pub n_samples: usize,
    pub batches: usize,
    /// Lag-1 autocorrelation of the magnetization between recorded samples,
    /// averaged over chains.
    pub magnetization_lag1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_effective: f64,
    pub method: Method,
    pub diagnostics: Option<ChainDiagnostics>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            n_effective: f64::INFINITY,
            method: Method::Exact,
            diagnostics: None,
        }
    }
}

/// Probability of `+` at a site whose neighbors sum to `s`.
#[inline]
pub fn plus_probability(p: &GibbsParams, s: i32) -> f64 {
    1.0 / (1.0 + (-2.0 * (p.a() + p.b() * s as f64)).exp())
}

/// One heat-bath update at `x` driven by the uniform draw `u ∈ [0, 1)`.
pub fn heat_bath_update(field: &mut SpinField, lattice: &Lattice, p: &GibbsParams, x: Vertex, u: f64) {
    let s: i32 = lattice.neighbors(x).iter().map(|&y| field.spin(y as usize)).sum();
    field.set(x, u < plus_probability(p, s));
}

/// A single chain: the field, the frozen mask and its random stream.
pub struct Chain<'a> {
    lattice: &'a Lattice,
    field: SpinField,
    free: Vec<Vertex>,
    /// `P(+)` indexed by `(S + V) / 2`, the number of positive neighbors.
    table: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Chain<'a> {
    pub fn new(lattice: &'a Lattice, p: &GibbsParams, clamp: Option<&PatchConfig>, seed: u64, stream: u64) -> Self {
        let mut field = SpinField::minus(lattice.n_sites());
        let mut frozen = vec![false; lattice.n_sites()];
        if let Some(c) = clamp {
            field.apply(c);
            for v in c.support() {
                frozen[v] = true;
            }
        }
        let degree = lattice.degree() as i32;
        let table = (0..=degree).map(|plus| plus_probability(p, 2 * plus - degree)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Chain {
            lattice,
            field,
            free: (0..lattice.n_sites()).filter(|&v| !frozen[v]).collect(),
            table,
            rng,
        }
    }

    pub fn field(&self) -> &SpinField {
        &self.field
    }

    pub fn sweep(&mut self) {
        for &x in &self.free {
            let plus = self
                .lattice
                .neighbors(x)
                .iter()
                .filter(|&&y| self.field.get(y as usize))
                .count();
            let u: f64 = self.rng.gen();
            self.field.set(x, u < self.table[plus]);
        }
    }

    pub fn sweeps(&mut self, count: usize) {
        for _ in 0..count {
            self.sweep();
        }
    }
}

/// Per-chain recorded observations and magnetizations.
#[derive(Debug, Clone)]
pub struct ChainOutput<T> {
    pub per_chain: Vec<Vec<T>>,
    pub magnetization: Vec<Vec<f64>>,
}

/// Runs the chains described by `settings` and records `observe(field)` after
/// every thinning interval.
pub fn run_chains<T, F>(
    lattice: &Lattice,
    p: &GibbsParams,
    settings: &ChainSettings,
    observe: F,
) -> Result<ChainOutput<T>>
where
    T: Send,
    F: Fn(&SpinField) -> T + Sync,
{
    settings.validate()?;
    let runs: Vec<(Vec<T>, Vec<f64>)> = (0..settings.chains)
        .into_par_iter()
        .map(|i| {
            let mut chain = Chain::new(lattice, p, settings.clamp.as_ref(), settings.seed, i as u64);
            chain.sweeps(settings.burn_in_sweeps);
            let n = settings.samples_for(i);
            let mut obs = Vec::with_capacity(n);
            let mut mags = Vec::with_capacity(n);
            for _ in 0..n {
                chain.sweeps(settings.thinning_sweeps);
                obs.push(observe(chain.field()));
                mags.push(chain.field().magnetization());
            }
            (obs, mags)
        })
        .collect();
    let (per_chain, magnetization) = runs.into_iter().unzip();
    Ok(ChainOutput {
        per_chain,
        magnetization,
    })
}

/// Batch means per chain, pooled so that at least [`MIN_BATCHES`] batches
/// exist overall (fewer only when there are fewer samples).
pub fn pooled_batch_means(per_chain: &[Vec<f64>]) -> Vec<f64> {
    let per = MIN_BATCHES.div_ceil(per_chain.len().max(1));
    per_chain
        .iter()
        .filter(|c| !c.is_empty())
        .flat_map(|c| stats::batch_means(c, per))
        .collect()
}

/// Mean, batch-means standard error, effective sample size and diagnostics
/// for scalar observations.
pub fn summarize(values: &ChainOutput<f64>, settings: &ChainSettings) -> Estimate {
    let all: Vec<f64> = values.per_chain.iter().flatten().copied().collect();
    let mean = stats::mean(&all);
    let batches = pooled_batch_means(&values.per_chain);
    let std_error = stats::batch_standard_error(&batches);
    let var = stats::variance(&all);
    let n_effective = if std_error > 0.0 {
        (var / (std_error * std_error)).min(all.len() as f64)
    } else {
        all.len() as f64
    };
    let lag1: Vec<f64> = values
        .magnetization
        .iter()
        .map(|m| stats::lag1_autocorrelation(m))
        .collect();
    Estimate {
        mean,
        std_error,
        n_effective,
        method: Method::Mcmc,
        diagnostics: Some(ChainDiagnostics {
            seed: settings.seed,
            chains: settings.chains,
            burn_in_sweeps: settings.burn_in_sweeps,
            thinning_sweeps: settings.thinning_sweeps,
            n_samples: all.len(),
            batches: batches.len(),
            magnetization_lag1: stats::mean(&lag1),
        }),
    }
}

/// Monte Carlo estimate of `mu(e)`.
pub fn estimate_event(
    lattice: &Lattice,
    p: &GibbsParams,
    e: &EventPredicate,
    settings: &ChainSettings,
) -> Result<Estimate> {
    let out = run_chains(lattice, p, settings, |f| if e.holds(f) { 1.0 } else { 0.0 })?;
    Ok(summarize(&out, settings))
}

/// Monte Carlo estimates of several events from the same chains.
pub fn estimate_events(
    lattice: &Lattice,
    p: &GibbsParams,
    events: &[&EventPredicate],
    settings: &ChainSettings,
) -> Result<Vec<Estimate>> {
    let out = run_chains(lattice, p, settings, |f| {
        events.iter().map(|e| if e.holds(f) { 1.0 } else { 0.0 }).collect::<Vec<f64>>()
    })?;
    Ok((0..events.len())
        .map(|j| {
            let column = ChainOutput {
                per_chain: out
                    .per_chain
                    .iter()
                    .map(|c| c.iter().map(|row| row[j]).collect())
                    .collect(),
                magnetization: out.magnetization.clone(),
            };
            summarize(&column, settings)
        })
        .collect())
}

/// Monte Carlo estimate of `mu(e | I_x^eta = 1)`: by the Markov property the
/// conditioned measure is the Gibbs dynamics with `B(x, r)` frozen at `eta_x`.
pub fn estimate_conditional(
    lattice: &Lattice,
    p: &GibbsParams,
    frame: &LocalFrame,
    e: &EventPredicate,
    eta: &LocalConfig,
    x: Vertex,
    settings: &ChainSettings,
) -> Result<Estimate> {
    let clamped = settings.with_clamp(&frame.translate(lattice, eta, x))?;
    estimate_event(lattice, p, e, &clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, Norm};

    fn ring(n: usize) -> Lattice {
        Lattice::new(LatticeSpec::new(1, n, Norm::Inf, 1)).unwrap()
    }

    #[test]
    fn update_probabilities() {
        let p = GibbsParams::new(-0.4, 0.0).unwrap();
        let closed = (-0.4f64).exp() / ((-0.4f64).exp() + 0.4f64.exp());
        for s in [-2, 0, 2] {
            assert!((plus_probability(&p, s) - closed).abs() < 1e-15);
        }
        let q = GibbsParams::new(0.0, 0.3).unwrap();
        let v: f64 = 8.0 * 0.3;
        assert!((plus_probability(&q, 8) - v.exp() / (v.exp() + (-v).exp())).abs() < 1e-15);
    }

    #[test]
    fn update_only_touches_the_site() {
        let l = ring(5);
        let p = GibbsParams::new(-0.4, 0.2).unwrap();
        let mut f = SpinField::from_state(5, 0b10110);
        heat_bath_update(&mut f, &l, &p, 0, 0.0);
        assert_eq!(f.state(), 0b10111);
        heat_bath_update(&mut f, &l, &p, 0, 0.999_999_9);
        assert_eq!(f.state(), 0b10110);
    }

    #[test]
    fn seeds_are_reproducible() {
        let l = ring(8);
        let p = GibbsParams::new(-0.3, 0.2).unwrap();
        let s = ChainSettings {
            burn_in_sweeps: 5,
            n_samples: 50,
            chains: 2,
            ..ChainSettings::new(7, 50)
        };
        let a = run_chains(&l, &p, &s, |f| f.state()).unwrap();
        let b = run_chains(&l, &p, &s, |f| f.state()).unwrap();
        assert_eq!(a.per_chain, b.per_chain);
        assert_ne!(a.per_chain[0], a.per_chain[1]);
        let c = run_chains(&l, &p, &ChainSettings { seed: 8, ..s.clone() }, |f| f.state()).unwrap();
        assert_ne!(a.per_chain, c.per_chain);
    }

    #[test]
    fn clamped_sites_stay_frozen() {
        let l = ring(8);
        let p = GibbsParams::new(-1.0, 0.2).unwrap();
        let clamp = PatchConfig::new(vec![(2, true), (3, false)]).unwrap();
        let s = ChainSettings {
            burn_in_sweeps: 3,
            clamp: Some(clamp.clone()),
            ..ChainSettings::new(1, 40)
        };
        let out = run_chains(&l, &p, &s, |f| f.matches(&clamp)).unwrap();
        assert!(out.per_chain[0].iter().all(|&m| m));
        let conflict = PatchConfig::new(vec![(2, false)]).unwrap();
        assert!(matches!(s.with_clamp(&conflict), Err(Error::ClampConflict(_))));
    }

    #[test]
    fn settings_validation() {
        assert!(ChainSettings::new(0, 0).validate().is_err());
        let s = ChainSettings {
            thinning_sweeps: 0,
            ..ChainSettings::new(0, 10)
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn always_true_has_zero_error() {
        let l = ring(6);
        let p = GibbsParams::new(-0.5, 0.1).unwrap();
        let s = ChainSettings {
            burn_in_sweeps: 10,
            ..ChainSettings::new(3, 200)
        };
        let est = estimate_event(&l, &p, &EventPredicate::always(), &s).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.method, Method::Mcmc);
    }
}
