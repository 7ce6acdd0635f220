use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::population::{generate_population, Individual, PopulationSpec};
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::formula::{aggregate, AggFn, Num};

pub const HISTOGRAM_BUCKETS: usize = 32;

/// Integer outcome of `f` on a multiset, reduced to the token range.
/// `None` stands for SQL NULL.
pub fn outcome(f: AggFn, values: &[u64], token_bits: u32) -> Option<u64> {
    let nums: Vec<Num> = values.iter().map(|&v| Num::Int(v)).collect();
    let raw = match aggregate(f, &nums) {
        Num::Null => return None,
        Num::Int(i) => i,
        Num::Real(r) => r.trunc() as i64 as u64,
    };
    Some(if token_bits >= 64 {
        raw
    } else {
        raw & ((1 << token_bits) - 1)
    })
}

pub fn collisions(outcomes: &[Option<u64>]) -> usize {
    outcomes.len() - outcomes.iter().collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionStats {
    pub function: AggFn,
    pub associative: bool,
    pub collisions: usize,
    pub distinct: usize,
    /// Outcome counts over equal-width buckets of the token range.
    pub histogram: Vec<usize>,
    pub outcomes: Vec<Option<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub spec: PopulationSpec,
    /// Choices the protocol leaves open.
    pub notes: Vec<String>,
    pub population_size: usize,
    pub functions: Vec<FunctionStats>,
}

impl SimulationReport {
    pub fn stats(&self, f: AggFn) -> Option<&FunctionStats> {
        self.functions.iter().find(|s| s.function == f)
    }

    pub fn collisions(&self, f: AggFn) -> Option<usize> {
        self.stats(f).map(|s| s.collisions)
    }

    /// Functions by increasing collision count, ties kept in input order.
    pub fn ranking(&self) -> Vec<(AggFn, usize)> {
        let mut r: Vec<(AggFn, usize)> = self
            .functions
            .iter()
            .map(|s| (s.function, s.collisions))
            .collect();
        r.sort_by_key(|&(_, c)| c);
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:?} plan, {} individuals, seed {}\n",
            self.spec.plan, self.population_size, self.spec.rng_seed
        );
        for (f, c) in self.ranking() {
            out.push_str(&format!("{:<14}{c:>6}\n", f.sql_name()));
        }
        out
    }
}

fn notes(spec: &PopulationSpec) -> Vec<String> {
    vec![
        "rng: ChaCha8 keyed by (seed, individual index, lane)".into(),
        format!(
            "set sizes: uniform in 1..{} (bound excluded), values distinct in 1..2^{}",
            spec.max_set_size, spec.hash_bits
        ),
        "bit flips: position uniform over the hash bits".into(),
        "quartiles: linear interpolation between closest ranks".into(),
        "real outcomes are truncated toward zero before reduction".into(),
    ]
}

fn histogram(outcomes: &[Option<u64>], token_bits: u32) -> Vec<usize> {
    let mut h = vec![0; HISTOGRAM_BUCKETS];
    let width = ((1u128 << token_bits.min(64)) / HISTOGRAM_BUCKETS as u128).max(1);
    for v in outcomes.iter().flatten() {
        let b = (*v as u128 / width).min(HISTOGRAM_BUCKETS as u128 - 1);
        h[b as usize] += 1;
    }
    h
}

pub fn simulate_population(
    spec: &PopulationSpec,
    population: &[Individual],
    functions: &[AggFn],
    execution: Execution,
) -> SimulationReport {
    let stats = exec::map(functions, execution, |&f| {
        let outcomes: Vec<Option<u64>> = population
            .iter()
            .map(|ind| outcome(f, &ind.values, spec.token_bits))
            .collect();
        let collisions = collisions(&outcomes);
        FunctionStats {
            function: f,
            associative: f.is_associative(),
            collisions,
            distinct: outcomes.len() - collisions,
            histogram: histogram(&outcomes, spec.token_bits),
            outcomes,
        }
    });
    SimulationReport {
        spec: spec.clone(),
        notes: notes(spec),
        population_size: population.len(),
        functions: stats,
    }
}

pub fn run_simulation(
    spec: &PopulationSpec,
    functions: &[AggFn],
    execution: Execution,
) -> Result<SimulationReport> {
    let population = generate_population(spec, execution)?;
    Ok(simulate_population(spec, &population, functions, execution))
}
