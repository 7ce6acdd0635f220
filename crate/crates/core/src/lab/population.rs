use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantPlan {
    /// Full-range hashes: 16-bit hashes and tokens, 900 + 100 individuals.
    Full,
    /// Partial-range hashes: 10-bit hashes, 16-bit tokens, 450 + 50 individuals.
    Reduced,
}

impl std::str::FromStr for VariantPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(VariantPlan::Full),
            "reduced" => Ok(VariantPlan::Reduced),
            other => Err(Error::Config(format!(
                "unknown plan {other:?} (full or reduced)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub plan: VariantPlan,
    pub hash_bits: u32,
    pub token_bits: u32,
    pub n_base: usize,
    /// Split between the four perturbations in order, as evenly as possible.
    pub n_variants: usize,
    /// Exclusive bound: base sets hold `1..max_set_size` values.
    pub max_set_size: usize,
    /// Percentage of base individuals hit by the fallback constant.
    pub fallback_individuals_pct: u32,
    /// Percentage of their elements replaced by it.
    pub fallback_elements_pct: u32,
    pub fallback_value: u64,
    pub rng_seed: u64,
}

impl PopulationSpec {
    pub fn full(seed: u64) -> Self {
        PopulationSpec {
            plan: VariantPlan::Full,
            hash_bits: 16,
            token_bits: 16,
            n_base: 900,
            n_variants: 100,
            max_set_size: 100,
            fallback_individuals_pct: 10,
            fallback_elements_pct: 50,
            fallback_value: 1 << 14,
            rng_seed: seed,
        }
    }

    pub fn reduced(seed: u64) -> Self {
        PopulationSpec {
            plan: VariantPlan::Reduced,
            hash_bits: 10,
            token_bits: 16,
            n_base: 450,
            n_variants: 50,
            max_set_size: 50,
            fallback_value: 1 << 8,
            ..Self::full(seed)
        }
    }

    pub fn for_plan(plan: VariantPlan, seed: u64) -> Self {
        match plan {
            VariantPlan::Full => Self::full(seed),
            VariantPlan::Reduced => Self::reduced(seed),
        }
    }

    pub fn size(&self) -> usize {
        self.n_base + self.n_variants
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("population: {m}")));
        if !(1..=32).contains(&self.hash_bits) || !(1..=64).contains(&self.token_bits) {
            return bad("hash bits must be in 1..=32 and token bits in 1..=64");
        }
        if self.max_set_size < 2 || self.max_set_size as u64 >= (1u64 << self.hash_bits) {
            return bad("set size must be at least 2 and below the hash range");
        }
        if self.n_base == 0 {
            return bad("needs base individuals");
        }
        if self.fallback_individuals_pct > 100 || self.fallback_elements_pct > 100 {
            return bad("percentages above 100");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parent", rename_all = "snake_case")]
pub enum Origin {
    Base,
    RemoveOne(usize),
    RemoveTwo(usize),
    FlipOne(usize),
    FlipTwo(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Individual {
    pub origin: Origin,
    pub values: Vec<u64>,
}

fn stream(seed: u64, index: usize, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(index as u64).to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const BASE_LANE: u64 = 1;
const FALLBACK_LANE: u64 = 2;
const VARIANT_LANE: u64 = 3;

fn base_individual(spec: &PopulationSpec, index: usize) -> Individual {
    let mut rng = stream(spec.rng_seed, index, BASE_LANE);
    let size = rng.gen_range(1..spec.max_set_size);
    let range = (1usize << spec.hash_bits) - 1;
    let values = sample(&mut rng, range, size)
        .into_iter()
        .map(|v| v as u64 + 1)
        .collect();
    Individual {
        origin: Origin::Base,
        values,
    }
}

fn variant(spec: &PopulationSpec, base: &[Individual], index: usize) -> Individual {
    let mut rng = stream(spec.rng_seed, index, VARIANT_LANE);
    let kind = index * 4 / spec.n_variants;
    let min_len = if kind == 1 { 3 } else { 2 };
    let parent = loop {
        let p = rng.gen_range(0..base.len());
        if base[p].values.len() >= min_len {
            break p;
        }
    };
    let mut values = base[parent].values.clone();
    let flip = |rng: &mut ChaCha8Rng, v: &mut u64| *v ^= 1 << rng.gen_range(0..spec.hash_bits);
    let origin = match kind {
        0 => {
            values.remove(rng.gen_range(0..values.len()));
            Origin::RemoveOne(parent)
        }
        1 => {
            for _ in 0..2 {
                values.remove(rng.gen_range(0..values.len()));
            }
            Origin::RemoveTwo(parent)
        }
        2 => {
            let i = rng.gen_range(0..values.len());
            flip(&mut rng, &mut values[i]);
            Origin::FlipOne(parent)
        }
        _ => {
            for i in sample(&mut rng, values.len(), 2) {
                flip(&mut rng, &mut values[i]);
            }
            Origin::FlipTwo(parent)
        }
    };
    Individual { origin, values }
}

/// Base individuals first, then the variants grouped by perturbation.
pub fn generate_population(spec: &PopulationSpec, execution: Execution) -> Result<Vec<Individual>> {
    spec.validate()?;
    let indices: Vec<usize> = (0..spec.n_base).collect();
    let mut base = exec::map(&indices, execution, |&i| base_individual(spec, i));

    let mut rng = stream(spec.rng_seed, 0, FALLBACK_LANE);
    let hit = spec.n_base * spec.fallback_individuals_pct as usize / 100;
    let mut chosen = sample(&mut rng, spec.n_base, hit).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let values = &mut base[i].values;
        let n = (values.len() * spec.fallback_elements_pct as usize).div_ceil(100);
        for j in sample(&mut rng, values.len(), n) {
            values[j] = spec.fallback_value;
        }
    }

    let indices: Vec<usize> = (0..spec.n_variants).collect();
    let variants = exec::map(&indices, execution, |&i| variant(spec, &base, i));
    base.extend(variants);
    Ok(base)
}
