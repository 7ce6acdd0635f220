//! Hash values frozen from `tests/oracles/reference_hash.py`.

use rusqlite::types::Value;
use sqlab_core::crypto::{row_hash, string_hash, HashConfig};
use sqlab_core::formula::{substitute_control, ControlBinding, ControlValue};

const ABC: u64 = 420_671_919_533;
const ABD: u64 = 576_222_153_161;
const EMPTY: u64 = 117_982_804_053;
const DATE_PLACEHOLDER: u64 = 1_038_047_757_295;
const DEPARTMENT_ROW: u64 = 434_022_326_357;
const UNICODE_ROW: u64 = 211_345_025_919;
const ABC_16_BITS: u64 = 5_549;

#[test]
fn string_hashes_match_reference() {
    let cfg = HashConfig::default();
    assert_eq!(string_hash("abc", &cfg), ABC);
    assert_eq!(string_hash("abc", &cfg), string_hash("abc", &cfg));
    assert_eq!(string_hash("abd", &cfg), ABD);
    assert_ne!(ABC, ABD);
    assert_eq!(string_hash("", &cfg), EMPTY);
    assert_eq!(
        string_hash("abc", &HashConfig::new(16, 42).unwrap()),
        ABC_16_BITS
    );
}

#[test]
fn row_hashes_match_reference() {
    let cfg = HashConfig::default();
    let research = [
        Value::Text("Research".into()),
        Value::Integer(5),
        Value::Text("333445555".into()),
        Value::Text("1988-05-22".into()),
    ];
    assert_eq!(
        row_hash("department", &research, &cfg).unwrap(),
        DEPARTMENT_ROW
    );
    let unicode = [Value::Text("Zoë".into()), Value::Null, Value::Real(32.5)];
    assert_eq!(row_hash("t", &unicode, &cfg).unwrap(), UNICODE_ROW);
}

#[test]
fn text_control_goes_through_string_hash() {
    let cfg = HashConfig::default();
    let binding = ControlBinding {
        value: ControlValue::Text("YYYY-MM-DD".into()),
        instruction: "the date".into(),
    };
    let out = substitute_control(
        "salt_001((0.0) + sum(nn(A.hash)) OVER ()) AS token",
        &binding,
        &cfg,
    )
    .unwrap();
    assert_eq!(
        out.text,
        format!("salt_001(({DATE_PLACEHOLDER}) + sum(nn(A.hash)) OVER ()) AS token")
    );
    assert!(!out.missing_control);
}
