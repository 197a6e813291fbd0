/// Caps on the exhaustive enumerations.
///
/// Every search is either completed exactly or aborted with
/// [`Error::BudgetExceeded`](crate::Error::BudgetExceeded); nothing is ever
/// truncated silently. Constructions themselves (pullbacks, path objects,
/// dependent products) are not size-capped except where noted, since their
/// cost is polynomial in the input tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    /// Largest groupoid (object count) a search is willing to traverse.
    pub max_objects: usize,
    /// Largest groupoid (morphism count) a search is willing to traverse.
    pub max_morphisms: usize,
    /// Most partial sections enumerated over a single fiber or base morphism
    /// when building a dependent product.
    pub section_cap: usize,
    /// Largest fiber a map may have and still count as small.
    pub max_fiber: usize,
    /// Backtracking-node cap for functor searches.
    pub node_cap: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_objects: 64,
            max_morphisms: 4096,
            section_cap: 4096,
            max_fiber: 16,
            node_cap: 4_000_000,
        }
    }
}

impl Budget {
    /// Scale every cap by one multiplier. The single knob the CLI exposes.
    pub fn scaled(multiplier: f64) -> Self {
        let base = Budget::default();
        let scale = |n: usize| ((n as f64) * multiplier).round().max(1.0) as usize;
        Budget {
            max_objects: scale(base.max_objects),
            max_morphisms: scale(base.max_morphisms),
            section_cap: scale(base.section_cap),
            max_fiber: scale(base.max_fiber),
            node_cap: scale(base.node_cap),
        }
    }
}
