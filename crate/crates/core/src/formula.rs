//! Token formulas: selection, rendering, control substitution and a pure
//! reference evaluator that mirrors the engine's arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use rusqlite::types::Value;
use serde::{Deserialize, Serialize};

use crate::crypto::{salt_apply, string_hash, HashConfig, SaltSpec};
use crate::error::{Error, Result};

pub const PLACEHOLDER: &str = "(0.0)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFn {
    Avg,
    Count,
    Max,
    Min,
    Sum,
    ModularSum,
    #[serde(rename = "quartile_1")]
    Quartile1,
    Median,
    #[serde(rename = "quartile_3")]
    Quartile3,
    Iqr,
    BitAnd,
    BitOr,
    BitXor,
    ChecksumAgg,
}

impl AggFn {
    pub const ALL: [AggFn; 14] = [
        AggFn::Avg,
        AggFn::Count,
        AggFn::Max,
        AggFn::Min,
        AggFn::Sum,
        AggFn::ModularSum,
        AggFn::Quartile1,
        AggFn::Median,
        AggFn::Quartile3,
        AggFn::Iqr,
        AggFn::BitAnd,
        AggFn::BitOr,
        AggFn::BitXor,
        AggFn::ChecksumAgg,
    ];

    pub fn sql_name(self) -> &'static str {
        match self {
            AggFn::Avg => "avg",
            AggFn::Count => "count",
            AggFn::Max => "max",
            AggFn::Min => "min",
            AggFn::Sum => "sum",
            AggFn::ModularSum => "modular_sum",
            AggFn::Quartile1 => "quartile_1",
            AggFn::Median => "median",
            AggFn::Quartile3 => "quartile_3",
            AggFn::Iqr => "iqr",
            AggFn::BitAnd => "bit_and",
            AggFn::BitOr => "bit_or",
            AggFn::BitXor => "bit_xor",
            AggFn::ChecksumAgg => "checksum_agg",
        }
    }

    pub fn from_name(name: &str) -> Option<AggFn> {
        let lower = name.to_ascii_lowercase();
        AggFn::ALL.into_iter().find(|f| f.sql_name() == lower)
    }

    /// `A(x1, ..., A(xi, ..., xj), ..., xn) = A(x1, ..., xn)`.
    pub fn is_associative(self) -> bool {
        matches!(
            self,
            AggFn::Sum
                | AggFn::ModularSum
                | AggFn::BitXor
                | AggFn::Max
                | AggFn::Min
                | AggFn::BitOr
                | AggFn::BitAnd
        )
    }
}

impl fmt::Display for AggFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.sql_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaKind {
    Basic,
    Agg,
    BasicCtrl,
    AggCtrl,
    ExprOnly,
}

impl FormulaKind {
    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            FormulaKind::BasicCtrl | FormulaKind::AggCtrl | FormulaKind::ExprOnly
        )
    }

    pub fn is_agg(self) -> bool {
        matches!(self, FormulaKind::Agg | FormulaKind::AggCtrl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Add,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaClass {
    pub kind: FormulaKind,
    pub dimension: usize,
    pub fw: Option<AggFn>,
    pub fa: Option<AggFn>,
    pub fv: Combiner,
    pub fc: Option<Combiner>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormulaDefaults {
    pub basic_fw: AggFn,
    pub agg_fw: AggFn,
    pub agg_fa: AggFn,
}

impl Default for FormulaDefaults {
    fn default() -> Self {
        FormulaDefaults {
            basic_fw: AggFn::Sum,
            agg_fw: AggFn::BitXor,
            agg_fa: AggFn::Sum,
        }
    }
}

impl FormulaClass {
    /// Builds a class with the default aggregation choices and checks it.
    pub fn new(kind: FormulaKind, dimension: usize) -> Result<Self> {
        Self::with_defaults(kind, dimension, &FormulaDefaults::default())
    }

    pub fn with_defaults(
        kind: FormulaKind,
        dimension: usize,
        defaults: &FormulaDefaults,
    ) -> Result<Self> {
        let (fw, fa) = match kind {
            FormulaKind::ExprOnly => (None, None),
            FormulaKind::Basic | FormulaKind::BasicCtrl => (Some(defaults.basic_fw), None),
            FormulaKind::Agg | FormulaKind::AggCtrl => {
                (Some(defaults.agg_fw), Some(defaults.agg_fa))
            }
        };
        let class = Self::unchecked(kind, dimension, fw, fa);
        class.validate()?;
        Ok(class)
    }

    /// No invariant checks; used to reproduce deliberately bad pairings.
    pub fn unchecked(
        kind: FormulaKind,
        dimension: usize,
        fw: Option<AggFn>,
        fa: Option<AggFn>,
    ) -> Self {
        FormulaClass {
            kind,
            dimension,
            fw,
            fa,
            fv: Combiner::Add,
            fc: kind.is_controlled().then_some(Combiner::Add),
        }
    }

    pub fn with_aggregates(mut self, fw: AggFn, fa: Option<AggFn>) -> Result<Self> {
        self.fw = Some(fw);
        self.fa = fa;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Formula(m));
        match (self.kind, self.dimension) {
            (FormulaKind::ExprOnly, 0) => {}
            (FormulaKind::ExprOnly, d) => {
                return bad(format!("expression-only formula with dimension {d}"))
            }
            (_, 0) => return bad("table formulas need at least one table".into()),
            _ => {}
        }
        if self.kind.is_agg() != self.fa.is_some() {
            return bad("the inner aggregate is required exactly for grouped classes".into());
        }
        if (self.kind == FormulaKind::ExprOnly) == self.fw.is_some() {
            return bad("the outer window aggregate is required exactly for table classes".into());
        }
        if self.kind.is_controlled() != self.fc.is_some() {
            return bad("the control combiner is required exactly for controlled classes".into());
        }
        if let (Some(fw), Some(fa)) = (self.fw, self.fa) {
            if fw == AggFn::Sum && fa == AggFn::Count {
                return bad("sum(count(...)) counts rows regardless of grouping".into());
            }
            if fw == fa && fw.is_associative() {
                return bad(format!("{fw}({fw}(...)) is blind to grouping"));
            }
            if fa == AggFn::BitXor {
                return bad("bit_xor cancels duplicated rows inside a group".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryTraits {
    pub n_outer_tables: usize,
    pub has_outer_grouping_or_aggregation: bool,
    pub post_select_ops: bool,
}

pub fn select_formula(traits: QueryTraits) -> FormulaClass {
    select_formula_with(traits, &FormulaDefaults::default())
        .expect("default aggregation choices satisfy the pairing rules")
}

pub fn select_formula_with(
    traits: QueryTraits,
    defaults: &FormulaDefaults,
) -> Result<FormulaClass> {
    let kind = if traits.n_outer_tables == 0 {
        FormulaKind::ExprOnly
    } else {
        match (
            traits.has_outer_grouping_or_aggregation,
            traits.post_select_ops,
        ) {
            (false, false) => FormulaKind::Basic,
            (false, true) => FormulaKind::BasicCtrl,
            (true, false) => FormulaKind::Agg,
            (true, true) => FormulaKind::AggCtrl,
        }
    };
    FormulaClass::with_defaults(kind, traits.n_outer_tables, defaults)
}

pub fn default_aliases(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let letter = (b'A' + (i % 26) as u8) as char;
            if i < 26 {
                letter.to_string()
            } else {
                format!("{letter}{}", i / 26)
            }
        })
        .collect()
}

pub fn render_formula<S: AsRef<str>>(
    class: &FormulaClass,
    salt: &SaltSpec,
    aliases: &[S],
) -> Result<String> {
    if aliases.len() != class.dimension {
        return Err(Error::Formula(format!(
            "formula of dimension {} given {} aliases",
            class.dimension,
            aliases.len()
        )));
    }
    let salt_name = salt.function_name();
    let fv = aliases
        .iter()
        .map(|a| format!("nn({}.hash)", a.as_ref()))
        .collect::<Vec<_>>()
        .join(" + ");
    let ctrl = if class.kind.is_controlled() {
        format!("{PLACEHOLDER} + ")
    } else {
        String::new()
    };
    let missing = || Error::Formula("missing aggregation function".into());
    let text = match class.kind {
        FormulaKind::ExprOnly => format!("{salt_name}({PLACEHOLDER}) AS token"),
        FormulaKind::Basic | FormulaKind::BasicCtrl => {
            let fw = class.fw.ok_or_else(missing)?;
            format!("{salt_name}({ctrl}{fw}({fv}) OVER ()) AS token")
        }
        FormulaKind::Agg | FormulaKind::AggCtrl => {
            let fw = class.fw.ok_or_else(missing)?;
            let fa = class.fa.ok_or_else(missing)?;
            format!("{salt_name}({ctrl}{fw}({fa}({fv})) OVER ()) AS token")
        }
    };
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl ControlValue {
    /// Parses the right-hand side of a control line: integers, reals,
    /// quoted strings, NULL, otherwise raw text.
    pub fn parse(text: &str) -> ControlValue {
        let t = text.trim();
        if t.eq_ignore_ascii_case("null") || t.eq_ignore_ascii_case("none") {
            return ControlValue::Null;
        }
        if let Ok(i) = t.parse::<i64>() {
            return ControlValue::Integer(i);
        }
        if let Ok(r) = t.parse::<f64>() {
            if r.is_finite() {
                return ControlValue::Real(r);
            }
        }
        let unquoted = ['"', '\'']
            .iter()
            .find_map(|q| t.strip_prefix(*q).and_then(|s| s.strip_suffix(*q)))
            .unwrap_or(t);
        ControlValue::Text(unquoted.to_owned())
    }

    pub fn from_sql(value: &Value) -> ControlValue {
        match value {
            Value::Null => ControlValue::Null,
            Value::Integer(i) => ControlValue::Integer(*i),
            Value::Real(r) => ControlValue::Real(*r),
            Value::Text(s) => ControlValue::Text(s.clone()),
            Value::Blob(b) => ControlValue::Text(hex::encode(b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlBinding {
    pub value: ControlValue,
    pub instruction: String,
}

impl ControlBinding {
    pub fn missing() -> Self {
        ControlBinding {
            value: ControlValue::Real(0.0),
            instruction: String::new(),
        }
    }

    pub fn is_missing(&self) -> bool {
        match self.value {
            ControlValue::Null => true,
            ControlValue::Real(r) => r == 0.0,
            _ => false,
        }
    }

    fn literal(&self, cfg: &HashConfig) -> String {
        match &self.value {
            ControlValue::Null => "(0)".to_owned(),
            ControlValue::Integer(i) => format!("({i})"),
            ControlValue::Real(r) => format!("({r:?})"),
            ControlValue::Text(s) => format!("({})", string_hash(s, cfg)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    pub text: String,
    pub missing_control: bool,
}

pub fn substitute_control(
    formula_text: &str,
    binding: &ControlBinding,
    cfg: &HashConfig,
) -> Result<Substitution> {
    let count = formula_text.matches(PLACEHOLDER).count();
    if count != 1 {
        return Err(Error::Formula(format!(
            "expected exactly one {PLACEHOLDER} placeholder, found {count}"
        )));
    }
    let missing_control = binding.is_missing();
    let text = if matches!(binding.value, ControlValue::Real(r) if r == 0.0) {
        formula_text.to_owned()
    } else {
        formula_text.replacen(PLACEHOLDER, &binding.literal(cfg), 1)
    };
    Ok(Substitution {
        text,
        missing_control,
    })
}

/// Engine-side numeric value, following the engine's typing rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    Null,
    Int(u64),
    Real(f64),
}

impl Num {
    fn as_f64(self) -> Option<f64> {
        match self {
            Num::Null => None,
            Num::Int(i) => Some(i as i64 as f64),
            Num::Real(r) => Some(r),
        }
    }

    fn as_bits(self) -> Option<u64> {
        match self {
            Num::Null => None,
            Num::Int(i) => Some(i),
            Num::Real(r) => Some(r as i64 as u64),
        }
    }

    fn add(self, other: Num) -> Num {
        match (self, other) {
            (Num::Null, _) | (_, Num::Null) => Num::Null,
            (Num::Int(a), Num::Int(b)) => Num::Int(a.wrapping_add(b)),
            (a, b) => Num::Real(a.as_f64().unwrap_or(0.0) + b.as_f64().unwrap_or(0.0)),
        }
    }
}

/// Converts an engine value into the salt function's integer input.
pub fn token_input(value: &Value, cfg: &HashConfig) -> Option<u64> {
    match value {
        Value::Null => None,
        Value::Integer(i) => Some(*i as u64),
        Value::Real(r) => Some(*r as i64 as u64),
        Value::Text(s) => Some(string_hash(s, cfg)),
        Value::Blob(b) => Some(string_hash(&hex::encode(b), cfg)),
    }
}

/// 64-bit finalizer used as the per-value mix of `checksum_agg`.
pub fn avalanche(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Applies one aggregate with SQL null handling: nulls are skipped, and an
/// empty input yields NULL except for `count`.
pub fn aggregate(f: AggFn, values: &[Num]) -> Num {
    let present: Vec<Num> = values.iter().copied().filter(|v| *v != Num::Null).collect();
    if f == AggFn::Count {
        return Num::Int(present.len() as u64);
    }
    if present.is_empty() {
        return Num::Null;
    }
    let all_int = present.iter().all(|v| matches!(v, Num::Int(_)));
    let reals = || present.iter().filter_map(|v| v.as_f64());
    let bits = || present.iter().filter_map(|v| v.as_bits());
    let sorted = || {
        let mut v: Vec<f64> = reals().collect();
        v.sort_by(f64::total_cmp);
        v
    };
    match f {
        AggFn::Sum | AggFn::ModularSum if all_int => Num::Int(bits().fold(0u64, u64::wrapping_add)),
        AggFn::Sum | AggFn::ModularSum => Num::Real(reals().sum()),
        AggFn::Avg => Num::Real(reals().sum::<f64>() / present.len() as f64),
        AggFn::Max | AggFn::Min => {
            let pick = present
                .iter()
                .copied()
                .reduce(|a, b| {
                    let ord = a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap());
                    let keep_a = if f == AggFn::Max {
                        ord.is_ge()
                    } else {
                        ord.is_le()
                    };
                    if keep_a {
                        a
                    } else {
                        b
                    }
                })
                .unwrap();
            pick
        }
        AggFn::BitAnd => Num::Int(bits().fold(u64::MAX, |a, b| a & b)),
        AggFn::BitOr => Num::Int(bits().fold(0, |a, b| a | b)),
        AggFn::BitXor => Num::Int(bits().fold(0, |a, b| a ^ b)),
        AggFn::ChecksumAgg => Num::Int(bits().map(avalanche).fold(0, u64::wrapping_add)),
        AggFn::Quartile1 => Num::Real(quantile(&sorted(), 0.25)),
        AggFn::Median => Num::Real(quantile(&sorted(), 0.5)),
        AggFn::Quartile3 => Num::Real(quantile(&sorted(), 0.75)),
        AggFn::Iqr => {
            let s = sorted();
            Num::Real(quantile(&s, 0.75) - quantile(&s, 0.25))
        }
        AggFn::Count => unreachable!(),
    }
}

/// One result row seen by the formula: alias to nullable hash.
pub type HashRow = BTreeMap<String, Option<u64>>;

/// Pure evaluation of `f_s(f_c(x, f_w(f_a(f_v(f*(h))))))`.
pub fn reference_token(
    class: &FormulaClass,
    salt: &SaltSpec,
    groups: &[Vec<HashRow>],
    control: Option<&ControlBinding>,
    cfg: &HashConfig,
) -> u64 {
    let row_value = |row: &HashRow| {
        Num::Int(
            row.values()
                .map(|h| crate::crypto::nn(*h, cfg))
                .fold(0u64, u64::wrapping_add),
        )
    };
    let inner = match class.kind {
        FormulaKind::ExprOnly => Num::Int(0),
        FormulaKind::Basic | FormulaKind::BasicCtrl => {
            let rows: Vec<Num> = groups.iter().flatten().map(row_value).collect();
            aggregate(class.fw.unwrap_or(AggFn::Sum), &rows)
        }
        FormulaKind::Agg | FormulaKind::AggCtrl => {
            let fa = class.fa.unwrap_or(AggFn::Sum);
            let per_group: Vec<Num> = groups
                .iter()
                .map(|g| aggregate(fa, &g.iter().map(row_value).collect::<Vec<_>>()))
                .collect();
            aggregate(class.fw.unwrap_or(AggFn::BitXor), &per_group)
        }
    };
    let combined = if class.kind.is_controlled() {
        let x = match control.map(|c| &c.value) {
            None | Some(ControlValue::Null) => Num::Int(0),
            Some(ControlValue::Integer(i)) => Num::Int(*i as u64),
            Some(ControlValue::Real(r)) if *r == 0.0 => Num::Real(0.0),
            Some(ControlValue::Real(r)) => Num::Real(*r),
            Some(ControlValue::Text(s)) => Num::Int(string_hash(s, cfg)),
        };
        if class.kind == FormulaKind::ExprOnly {
            x
        } else {
            x.add(inner)
        }
    } else {
        inner
    };
    salt_apply(salt, combined.as_bits(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn salt(n: u16, y: u64) -> SaltSpec {
        SaltSpec::new(n, y).unwrap()
    }

    #[test]
    fn selects_classes_from_traits() {
        let t = |n, g, p| QueryTraits {
            n_outer_tables: n,
            has_outer_grouping_or_aggregation: g,
            post_select_ops: p,
        };
        assert_eq!(select_formula(t(1, false, false)).kind, FormulaKind::Basic);
        let fig2 = select_formula(t(2, true, true));
        assert_eq!((fig2.kind, fig2.dimension), (FormulaKind::AggCtrl, 2));
        assert_eq!(
            select_formula(t(0, false, true)).kind,
            FormulaKind::ExprOnly
        );
    }

    #[test]
    fn renders_published_formulas() {
        let basic = FormulaClass::new(FormulaKind::Basic, 1).unwrap();
        assert_eq!(
            render_formula(&basic, &salt(42, 0), &["A"]).unwrap(),
            "salt_042(sum(nn(A.hash)) OVER ()) AS token"
        );
        let agg = FormulaClass::new(FormulaKind::AggCtrl, 2).unwrap();
        assert_eq!(
            render_formula(&agg, &salt(50, 0), &["A", "B"]).unwrap(),
            "salt_050((0.0) + bit_xor(sum(nn(A.hash) + nn(B.hash))) OVER ()) AS token"
        );
        let three = FormulaClass::new(FormulaKind::AggCtrl, 3).unwrap();
        assert_eq!(
            render_formula(&three, &salt(42, 0), &default_aliases(3)).unwrap(),
            "salt_042((0.0) + bit_xor(sum(nn(A.hash) + nn(B.hash) + nn(C.hash))) OVER ()) AS token"
        );
        let expr = FormulaClass::new(FormulaKind::ExprOnly, 0).unwrap();
        assert_eq!(
            render_formula(&expr, &salt(7, 0), &[] as &[&str]).unwrap(),
            "salt_007((0.0)) AS token"
        );
        assert!(render_formula(&basic, &salt(42, 0), &["A", "B"]).is_err());
    }

    #[test]
    fn pairing_rules() {
        let agg = FormulaClass::new(FormulaKind::Agg, 1).unwrap();
        assert!(agg
            .clone()
            .with_aggregates(AggFn::Sum, Some(AggFn::Count))
            .is_err());
        assert!(agg
            .clone()
            .with_aggregates(AggFn::Sum, Some(AggFn::Sum))
            .is_err());
        assert!(agg
            .clone()
            .with_aggregates(AggFn::Sum, Some(AggFn::BitXor))
            .is_err());
        assert!(agg
            .clone()
            .with_aggregates(AggFn::Sum, Some(AggFn::Avg))
            .is_ok());
        assert!(agg
            .with_aggregates(AggFn::ChecksumAgg, Some(AggFn::ChecksumAgg))
            .is_ok());
        assert!(FormulaClass::new(FormulaKind::ExprOnly, 1).is_err());
        assert!(FormulaClass::new(FormulaKind::Basic, 0).is_err());
    }

    #[test]
    fn substitution() {
        let cfg = HashConfig::default();
        let f = "salt_050((0.0) + bit_xor(sum(nn(A.hash) + nn(B.hash))) OVER ()) AS token";
        let one = ControlBinding {
            value: ControlValue::Integer(1),
            instruction: String::new(),
        };
        let s = substitute_control(f, &one, &cfg).unwrap();
        assert_eq!(
            s.text,
            "salt_050((1) + bit_xor(sum(nn(A.hash) + nn(B.hash))) OVER ()) AS token"
        );
        assert!(!s.missing_control);
        let zero = substitute_control(f, &ControlBinding::missing(), &cfg).unwrap();
        assert_eq!(zero.text, f);
        assert!(zero.missing_control);
        let null = ControlBinding {
            value: ControlValue::Null,
            instruction: String::new(),
        };
        assert!(substitute_control(f, &null, &cfg).unwrap().missing_control);
        assert!(substitute_control("salt_001(1) AS token", &one, &cfg).is_err());
        assert!(substitute_control("(0.0) + (0.0)", &one, &cfg).is_err());
    }

    #[test]
    fn control_value_parsing() {
        assert_eq!(ControlValue::parse("350"), ControlValue::Integer(350));
        assert_eq!(ControlValue::parse("2.5"), ControlValue::Real(2.5));
        assert_eq!(
            ControlValue::parse("'Fred'"),
            ControlValue::Text("Fred".into())
        );
        assert_eq!(ControlValue::parse("NULL"), ControlValue::Null);
    }

    #[test]
    fn reference_examples() {
        let cfg = HashConfig::default();
        let basic = FormulaClass::new(FormulaKind::Basic, 1).unwrap();
        let row = |h: u64| HashRow::from([("A".to_owned(), Some(h))]);
        let groups = vec![vec![row(3), row(5)]];
        assert_eq!(reference_token(&basic, &salt(1, 0), &groups, None, &cfg), 8);

        let agg = FormulaClass::new(FormulaKind::Agg, 1).unwrap();
        let y = 0xABCD;
        assert_eq!(reference_token(&agg, &salt(1, y), &[], None, &cfg), 42 ^ y);
        assert_eq!(
            reference_token(&agg, &salt(1, y), &[vec![]], None, &cfg),
            42 ^ y
        );
    }

    #[test]
    fn quartiles_interpolate() {
        let v: Vec<Num> = [1u64, 2, 3, 4].iter().map(|&x| Num::Int(x)).collect();
        assert_eq!(aggregate(AggFn::Median, &v), Num::Real(2.5));
        assert_eq!(aggregate(AggFn::Quartile1, &v), Num::Real(1.75));
        assert_eq!(aggregate(AggFn::Iqr, &v), Num::Real(1.5));
        assert_eq!(aggregate(AggFn::Count, &[Num::Null]), Num::Int(0));
        assert_eq!(aggregate(AggFn::Sum, &[Num::Null]), Num::Null);
    }
}
