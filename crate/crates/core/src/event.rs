//! Events as predicates on spin fields with a declared scope.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::configs::{LocalConfig, LocalFrame, PatchConfig};
use crate::error::{Error, Result};
use crate::field::SpinField;
use crate::lattice::{Lattice, Vertex};

type Test = Arc<dyn Fn(&SpinField) -> bool + Send + Sync>;

/// An event measurable with respect to the spins on `scope`.
#[derive(Clone)]
pub struct EventPredicate {
    scope: Vec<Vertex>,
    label: String,
    test: Test,
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventPredicate")
            .field("label", &self.label)
            .field("scope", &self.scope)
            .finish()
    }
}

fn merge_scopes(a: &[Vertex], b: &[Vertex]) -> Vec<Vertex> {
    let mut s = a.to_vec();
    s.extend_from_slice(b);
    s.sort_unstable();
    s.dedup();
    s
}

impl EventPredicate {
    /// Wraps an arbitrary test. The caller promises that `test` only reads the
    /// spins in `scope`; [`EventPredicate::probe_scope`] checks the promise.
    pub fn from_fn<F>(label: impl Into<String>, mut scope: Vec<Vertex>, test: F) -> Self
    where
        F: Fn(&SpinField) -> bool + Send + Sync + 'static,
    {
        scope.sort_unstable();
        scope.dedup();
        EventPredicate {
            scope,
            label: label.into(),
            test: Arc::new(test),
        }
    }

    pub fn always() -> Self {
        EventPredicate::from_fn("always", Vec::new(), |_| true)
    }

    pub fn never() -> Self {
        EventPredicate::from_fn("never", Vec::new(), |_| false)
    }

    /// `{sigma(x) = +1}`.
    pub fn site_plus(x: Vertex) -> Self {
        EventPredicate::from_fn(format!("plus@{x}"), vec![x], move |f| f.get(x))
    }

    /// `{I_V^omega = 1}`: the field agrees with the patch on its support.
    pub fn pattern(patch: PatchConfig) -> Self {
        let scope = patch.support();
        EventPredicate::from_fn(format!("pattern[{}]", patch.len()), scope, move |f| {
            f.matches(&patch)
        })
    }

    /// `{I_x^eta = 1}`.
    pub fn occurrence(lattice: &Lattice, frame: &LocalFrame, eta: &LocalConfig, x: Vertex) -> Self {
        let patch = frame.translate(lattice, eta, x);
        let label = format!("occurrence[{}]@{x}", frame.record(eta));
        let scope = patch.support();
        EventPredicate::from_fn(label, scope, move |f| f.matches(&patch))
    }

    /// Union over `etas` of `{I_x^eta = 1}`.
    pub fn any_occurrence(
        lattice: &Lattice,
        frame: &LocalFrame,
        etas: &[LocalConfig],
        x: Vertex,
    ) -> Self {
        let ball = frame
            .ball_shifts()
            .iter()
            .map(|&s| lattice.add(x, s))
            .collect::<Vec<_>>();
        let mut keys: Vec<u64> = etas.iter().map(|e| e.bits()).collect();
        keys.sort_unstable();
        keys.dedup();
        let scope = ball.clone();
        EventPredicate::from_fn(format!("any_occurrence[{}]@{x}", keys.len()), scope, move |f| {
            keys.binary_search(&f.restrict(&ball)).is_ok()
        })
    }

    pub fn and(&self, other: &EventPredicate) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        EventPredicate {
            scope: merge_scopes(&self.scope, &other.scope),
            label: format!("({} & {})", self.label, other.label),
            test: Arc::new(move |f| a(f) && b(f)),
        }
    }

    pub fn or(&self, other: &EventPredicate) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        EventPredicate {
            scope: merge_scopes(&self.scope, &other.scope),
            label: format!("({} | {})", self.label, other.label),
            test: Arc::new(move |f| a(f) || b(f)),
        }
    }

    pub fn not(&self) -> Self {
        let a = self.test.clone();
        EventPredicate {
            scope: self.scope.clone(),
            label: format!("!{}", self.label),
            test: Arc::new(move |f| !a(f)),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scope(&self) -> &[Vertex] {
        &self.scope
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn holds(&self, field: &SpinField) -> bool {
        (self.test)(field)
    }

    /// Checks on `trials` random fields that flipping any vertex outside the
    /// scope never changes the outcome. Returns the first offending vertex.
    pub fn probe_scope(&self, sites: usize, trials: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inside = vec![false; sites];
        for &v in &self.scope {
            if v >= sites {
                return Err(Error::InvalidArgument(format!(
                    "scope vertex {v} outside a field of {sites} sites"
                )));
            }
            inside[v] = true;
        }
        let mut field = SpinField::minus(sites);
        for _ in 0..trials {
            for v in 0..sites {
                field.set(v, rng.gen_bool(0.5));
            }
            let base = self.holds(&field);
            for v in (0..sites).filter(|&v| !inside[v]) {
                field.flip(v);
                let changed = self.holds(&field) != base;
                field.flip(v);
                if changed {
                    return Err(Error::InvalidArgument(format!(
                        "event `{}` depends on vertex {v} outside its scope",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }
}
