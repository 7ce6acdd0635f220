use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{AggFn, FormulaDefaults};

/// Functions by increasing collisions in the partial-range experiment.
pub const PREFERENCE: [AggFn; 13] = [
    AggFn::ChecksumAgg,
    AggFn::Sum,
    AggFn::BitXor,
    AggFn::Iqr,
    AggFn::Quartile3,
    AggFn::Quartile1,
    AggFn::Median,
    AggFn::Avg,
    AggFn::Min,
    AggFn::Max,
    AggFn::Count,
    AggFn::BitOr,
    AggFn::BitAnd,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    DuckDb,
    Db2,
    MySql,
    Oracle,
    PostgreSql,
    Snowflake,
    SqlServer,
    Sqlite,
}

const CORE: [AggFn; 5] = [AggFn::Avg, AggFn::Count, AggFn::Max, AggFn::Min, AggFn::Sum];
const BITWISE: [AggFn; 3] = [AggFn::BitAnd, AggFn::BitOr, AggFn::BitXor];
const PERCENTILES: [AggFn; 4] = [
    AggFn::Quartile1,
    AggFn::Median,
    AggFn::Quartile3,
    AggFn::Iqr,
];

impl Engine {
    pub const ALL: [Engine; 8] = [
        Engine::DuckDb,
        Engine::Db2,
        Engine::MySql,
        Engine::Oracle,
        Engine::PostgreSql,
        Engine::Snowflake,
        Engine::SqlServer,
        Engine::Sqlite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::DuckDb => "DuckDB",
            Engine::Db2 => "IBM Db2",
            Engine::MySql => "MySQL",
            Engine::Oracle => "Oracle",
            Engine::PostgreSql => "PostgreSQL",
            Engine::Snowflake => "Snowflake",
            Engine::SqlServer => "SQL Server",
            Engine::Sqlite => "SQLite",
        }
    }

    fn has_percentiles(self) -> bool {
        !matches!(self, Engine::MySql | Engine::Sqlite)
    }

    fn has_bitwise(self) -> bool {
        matches!(
            self,
            Engine::DuckDb | Engine::MySql | Engine::PostgreSql | Engine::Snowflake
        )
    }

    fn has_checksum(self) -> bool {
        matches!(self, Engine::Snowflake | Engine::SqlServer)
    }

    /// Built-in numeric aggregates, percentiles included.
    pub fn builtin(self) -> Vec<AggFn> {
        let mut v = CORE.to_vec();
        if self.has_percentiles() {
            v.extend(PERCENTILES);
        }
        if self.has_bitwise() {
            v.extend(BITWISE);
        }
        if self.has_checksum() {
            v.push(AggFn::ChecksumAgg);
        }
        v
    }

    /// Built-ins that can be nested as `f_w(f_a(...)) OVER ()`. Percentiles
    /// are ordered-set aggregates and cannot.
    pub fn nestable(self) -> Vec<AggFn> {
        self.builtin()
            .into_iter()
            .filter(|f| !PERCENTILES.contains(f))
            .collect()
    }

    /// Local spelling of a function in the recommendation.
    pub fn spelling(self, f: AggFn) -> &'static str {
        match (self, f) {
            (Engine::Snowflake, AggFn::ChecksumAgg) => "hash_agg",
            _ => f.sql_name(),
        }
    }
}

/// Picks `f_w` for the basic formulas and `(f_w, f_a)` for the grouped ones.
pub fn recommend_pair(available: &[AggFn]) -> Result<FormulaDefaults> {
    let ranked: Vec<AggFn> = PREFERENCE
        .into_iter()
        .filter(|f| available.contains(f))
        .collect();
    let &first = ranked
        .first()
        .ok_or_else(|| Error::Formula("no ranked aggregation function is available".into()))?;
    let second = if first.is_associative() {
        *ranked
            .iter()
            .skip(1)
            .find(|&&f| !(first == AggFn::Sum && f == AggFn::Count))
            .ok_or_else(|| Error::Formula(format!("no partner for {first}")))?
    } else {
        first
    };
    let (fw, fa) = if second == AggFn::BitXor {
        (second, first)
    } else {
        (first, second)
    };
    if fa == AggFn::BitXor {
        return Err(Error::Formula("bit_xor is the only inner candidate".into()));
    }
    Ok(FormulaDefaults {
        basic_fw: first,
        agg_fw: fw,
        agg_fa: fa,
    })
}

/// Both formulas as `(f_w(), f_w(f_a()))` in the engine's spelling.
pub fn recommendation_text(engine: Engine) -> Result<(String, String)> {
    let d = recommend_pair(&engine.nestable())?;
    Ok((
        format!("{}()", engine.spelling(d.basic_fw)),
        format!(
            "{}({}())",
            engine.spelling(d.agg_fw),
            engine.spelling(d.agg_fa)
        ),
    ))
}
