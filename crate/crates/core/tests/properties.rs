//! Property tests over the fingerprinting pipeline.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqlab_core::crypto::{
    decrypt_probe, encrypt_message_with, salt_apply, string_hash, HashConfig, SaltSpec,
};
use sqlab_core::formula::{
    aggregate, reference_token, AggFn, FormulaClass, FormulaKind, HashRow, Num,
};
use sqlab_core::lab::outcome;
use sqlab_core::sql::{execute_token, inject_formula, parse_select, star, Catalog};

fn agg_fn() -> impl Strategy<Value = AggFn> {
    prop::sample::select(AggFn::ALL.to_vec())
}

fn row(hashes: &[Option<u64>]) -> HashRow {
    ["A", "B"]
        .iter()
        .map(|a| a.to_string())
        .zip(hashes.iter().copied())
        .collect()
}

fn groups_strategy() -> impl Strategy<Value = Vec<Vec<[Option<u64>; 2]>>> {
    let hash = prop::option::weighted(0.9, 1u64..1 << 40);
    prop::collection::vec(prop::collection::vec([hash.clone(), hash], 1..5), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn token_ignores_row_and_group_order(groups in groups_strategy(), seed in any::<u64>()) {
        let cfg = HashConfig::default();
        let salt = SaltSpec::derive(42, seed, 0).unwrap();
        let as_rows = |g: &Vec<Vec<[Option<u64>; 2]>>| -> Vec<Vec<HashRow>> {
            g.iter().map(|rows| rows.iter().map(|r| row(r)).collect()).collect()
        };
        let mut shuffled = groups.clone();
        shuffled.reverse();
        for g in &mut shuffled {
            g.rotate_left(1);
        }
        let swapped: Vec<Vec<[Option<u64>; 2]>> =
            groups.iter().map(|g| g.iter().map(|[a, b]| [*b, *a]).collect()).collect();
        for class in [
            FormulaClass::new(FormulaKind::Basic, 2).unwrap(),
            FormulaClass::new(FormulaKind::Agg, 2).unwrap(),
        ] {
            let t = reference_token(&class, &salt, &as_rows(&groups), None, &cfg);
            prop_assert_eq!(t, reference_token(&class, &salt, &as_rows(&shuffled), None, &cfg));
            prop_assert_eq!(t, reference_token(&class, &salt, &as_rows(&swapped), None, &cfg));
        }
    }

    #[test]
    fn salt_is_an_involution(x in any::<u64>(), y in 1u64..1 << 48, task in 0u16..1000) {
        let cfg = HashConfig::default();
        let salt = SaltSpec::new(task, y).unwrap();
        prop_assert_eq!(salt_apply(&salt, Some(salt_apply(&salt, Some(x), &cfg)), &cfg), x);
    }

    #[test]
    fn string_hash_stays_in_range(s in ".*", bits in 8u32..=48) {
        let cfg = HashConfig::new(bits, 1).unwrap();
        let h = string_hash(&s, &cfg);
        prop_assert!(h < 1 << bits);
        prop_assert_eq!(h, string_hash(&s, &cfg));
    }

    #[test]
    fn modular_sum_wraps_at_token_bits(
        values in prop::collection::vec(0u64..1 << 16, 1..100),
        bits in 8u32..=40,
    ) {
        let wide: u128 = values.iter().map(|&v| v as u128).sum();
        let expect = (wide % (1u128 << bits)) as u64;
        prop_assert_eq!(outcome(AggFn::ModularSum, &values, bits), Some(expect));
    }

    #[test]
    fn associative_functions_survive_any_partition(
        f in agg_fn(),
        values in prop::collection::vec(0u64..1 << 20, 2..40),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
    ) {
        prop_assume!(f.is_associative());
        let nums: Vec<Num> = values.iter().map(|&v| Num::Int(v)).collect();
        let mut bounds: Vec<usize> = cuts.iter().map(|i| i.index(values.len())).collect();
        bounds.extend([0, values.len()]);
        bounds.sort_unstable();
        bounds.dedup();
        let parts: Vec<Num> = bounds.windows(2).map(|w| aggregate(f, &nums[w[0]..w[1]])).collect();
        prop_assert_eq!(aggregate(f, &parts), aggregate(f, &nums));
    }

    #[test]
    fn xor_cancels_pairs(x in any::<u64>()) {
        prop_assert_eq!(aggregate(AggFn::BitXor, &[Num::Int(x), Num::Int(x)]), Num::Int(0));
    }

    #[test]
    fn envelopes_open_only_under_their_token(
        token in any::<u64>(),
        other in any::<u64>(),
        text in "\\PC{0,200}",
        seed in any::<u64>(),
    ) {
        prop_assume!(token != other);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = encrypt_message_with(token, &text, &mut rng);
        prop_assert_eq!(decrypt_probe(token, &env), Some(text));
        prop_assert_eq!(decrypt_probe(other, &env), None);
        let mut tampered = env.clone();
        if let Some(b) = tampered.ciphertext.first_mut() {
            *b ^= 1;
        }
        prop_assert_eq!(decrypt_probe(token, &tampered), None);
    }
}

fn where_clause() -> impl Strategy<Value = String> {
    let cond = prop::sample::select(vec![
        "A.salary > 30000",
        "A.sex = 'F'",
        "A.dpt_id = 5",
        "A.supervisor_id IS NULL",
        "A.address LIKE '%Houston%'",
        "A.birth < '1960-01-01'",
    ]);
    prop::collection::vec(cond, 0..3).prop_map(|cs| {
        if cs.is_empty() {
            String::new()
        } else {
            format!(" WHERE {}", cs.join(" AND "))
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn starring_is_idempotent(filter in where_clause(), grouped in any::<bool>()) {
        let (conn, _) = common::game();
        let catalog = Catalog::from_connection(&conn).unwrap();
        let (q, kind) = if grouped {
            (format!("SELECT dpt_id, count(*) FROM employee A{filter} GROUP BY dpt_id ORDER BY 2 LIMIT 3"), FormulaKind::Agg)
        } else {
            (format!("SELECT DISTINCT emp_name FROM employee A{filter} ORDER BY 1"), FormulaKind::Basic)
        };
        let class = FormulaClass::new(kind, 1).unwrap();
        let once = star(&parse_select(&q).unwrap(), &class, &catalog).unwrap();
        let twice = star(&parse_select(&once).unwrap(), &class, &catalog).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn injection_leaves_the_query_text_alone(filter in where_clause()) {
        let q = format!("SELECT emp_name, salary\n  FROM employee A{filter}\n ORDER BY salary");
        let ast = parse_select(&q).unwrap();
        let out = inject_formula(&ast, "f(A.hash) AS token");
        let at = out.find(", f(A.hash) AS token").unwrap();
        prop_assert_eq!(format!("{}{}", &out[..at], &out[at + ", f(A.hash) AS token".len()..]), q);
    }

    /// The engine and the pure evaluation agree on tokens of filtered scans.
    #[test]
    fn engine_matches_reference_evaluation(filter in where_clause(), grouped in any::<bool>()) {
        let (conn, manifest) = common::game();
        let cfg = manifest.hash.clone();
        let salt = *manifest.salt(27).unwrap();
        let kind = if grouped { FormulaKind::Agg } else { FormulaKind::Basic };
        let class = FormulaClass::new(kind, 1).unwrap();
        let q = if grouped {
            format!("SELECT dpt_id, count(*) FROM employee A{filter} GROUP BY dpt_id")
        } else {
            format!("SELECT emp_name FROM employee A{filter}")
        };
        let engine = execute_token(&conn, &common::augmented(&manifest, 27, &class, &q)).unwrap();

        let mut stmt = conn.prepare(&format!("SELECT A.dpt_id, A.hash FROM employee A{filter}")).unwrap();
        let mut by_group: BTreeMap<i64, Vec<HashRow>> = BTreeMap::new();
        for r in stmt.query_map([], |r| Ok((r.get::<_, i64>(0)?, r.get::<_, Option<i64>>(1)?))).unwrap() {
            let (dpt, h) = r.unwrap();
            let key = if grouped { dpt } else { 0 };
            by_group.entry(key).or_default().push(HashRow::from([("A".to_owned(), h.map(|h| h as u64))]));
        }
        let groups: Vec<Vec<HashRow>> = by_group.into_values().collect();
        if groups.is_empty() {
            prop_assert_eq!(engine, None);
        } else {
            prop_assert_eq!(engine, Some(reference_token(&class, &salt, &groups, None, &cfg)));
        }
    }
}
