//! Aggregation-outcome experiments: random populations of hash multisets,
//! collision counts per aggregation function, associativity checks and the
//! choice of `f_w`/`f_a` per engine.

mod assoc;
mod engines;
mod population;
mod simulation;
mod svg;

pub use assoc::{
    classify_associativity, find_counterexample, random_split_check, Associativity, Counterexample,
};
pub use engines::{recommend_pair, recommendation_text, Engine, PREFERENCE};
pub use population::{generate_population, Individual, Origin, PopulationSpec, VariantPlan};
pub use simulation::{
    collisions, outcome, run_simulation, simulate_population, FunctionStats, SimulationReport,
    HISTOGRAM_BUCKETS,
};
pub use svg::{collision_histogram, strip_plot};

use crate::formula::AggFn;

/// Functions plotted for a plan: the token-range wrap of `sum` on full-range
/// hashes, plain `sum` on partial-range ones.
pub fn plan_functions(plan: VariantPlan) -> Vec<AggFn> {
    let skip = match plan {
        VariantPlan::Full => AggFn::Sum,
        VariantPlan::Reduced => AggFn::ModularSum,
    };
    AggFn::ALL.into_iter().filter(|&f| f != skip).collect()
}
