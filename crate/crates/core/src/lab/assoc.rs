use rand::Rng;
use serde::Serialize;

use crate::formula::{aggregate, AggFn, Num};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Associativity {
    Associative,
    NonAssociative,
}

pub fn classify_associativity(f: AggFn) -> Associativity {
    if f.is_associative() {
        Associativity::Associative
    } else {
        Associativity::NonAssociative
    }
}

/// `values` where the slice `start..end` collapses into `f` of itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub function: AggFn,
    pub values: Vec<u64>,
    pub start: usize,
    pub end: usize,
    pub flat: Option<f64>,
    pub nested: Option<f64>,
}

fn as_f64(n: Num) -> Option<f64> {
    match n {
        Num::Null => None,
        Num::Int(i) => Some(i as f64),
        Num::Real(r) => Some(r),
    }
}

fn nested_differs(f: AggFn, values: &[u64], start: usize, end: usize) -> Option<Counterexample> {
    let nums: Vec<Num> = values.iter().map(|&v| Num::Int(v)).collect();
    let flat = aggregate(f, &nums);
    let mut outer: Vec<Num> = nums[..start].to_vec();
    outer.push(aggregate(f, &nums[start..end]));
    outer.extend_from_slice(&nums[end..]);
    let nested = aggregate(f, &outer);
    let same = match (flat, nested) {
        (Num::Int(a), Num::Int(b)) => a == b,
        (a, b) => as_f64(a) == as_f64(b),
    };
    (!same).then(|| Counterexample {
        function: f,
        values: values.to_vec(),
        start,
        end,
        flat: as_f64(flat),
        nested: as_f64(nested),
    })
}

/// Exhaustive search over sequences of `len` values in `0..=max_value` and
/// every proper sub-slice of length at least 2.
pub fn find_counterexample(f: AggFn, len: usize, max_value: u64) -> Option<Counterexample> {
    let base = max_value + 1;
    let total = base.checked_pow(len as u32)?;
    for code in 0..total {
        let mut c = code;
        let values: Vec<u64> = (0..len)
            .map(|_| {
                let v = c % base;
                c /= base;
                v
            })
            .collect();
        for start in 0..len {
            for end in start + 2..=len {
                if end - start == len {
                    continue;
                }
                if let Some(ce) = nested_differs(f, &values, start, end) {
                    return Some(ce);
                }
            }
        }
    }
    None
}

/// Random nested splits of random multisets; returns the first mismatch.
pub fn random_split_check<R: Rng>(
    f: AggFn,
    trials: usize,
    value_bits: u32,
    rng: &mut R,
) -> Option<Counterexample> {
    for _ in 0..trials {
        let len = rng.gen_range(3..=12);
        let values: Vec<u64> = (0..len)
            .map(|_| rng.gen_range(0..1u64 << value_bits))
            .collect();
        let start = rng.gen_range(0..len - 1);
        let end = rng.gen_range(start + 2..=len);
        if end - start == len {
            continue;
        }
        if let Some(ce) = nested_differs(f, &values, start, end) {
            return Some(ce);
        }
    }
    None
}
