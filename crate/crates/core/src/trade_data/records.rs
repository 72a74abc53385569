//! Ingestion of raw `(year, country, product, value)` export records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowDiagnostic};

/// Product classification scheme of the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Sitc4,
    Hs4,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sitc4" | "sitc" => Ok(Scheme::Sitc4),
            "hs4" | "hs" | "hs92" => Ok(Scheme::Hs4),
            other => Err(Error::InvalidConfig(format!("unknown classification scheme `{other}`"))),
        }
    }
}

/// One country's exports of one product in one year, in USD.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub year: i32,
    pub country: String,
    pub product: String,
    pub scheme: Scheme,
    pub value: Decimal,
}

/// Header names for the four required columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub year: String,
    pub country: String,
    pub product: String,
    pub value: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            year: "year".into(),
            country: "country".into(),
            product: "product".into(),
            value: "value".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeCsvOptions {
    pub columns: ColumnMapping,
    /// Rejected rows tolerated before ingestion fails outright.
    pub max_rejected: usize,
}

impl Default for TradeCsvOptions {
    fn default() -> Self {
        TradeCsvOptions {
            columns: ColumnMapping::default(),
            max_rejected: 100,
        }
    }
}

/// Result of ingesting a trade file.
#[derive(Debug, Clone)]
pub struct LoadedTrade {
    /// Unique `(year, country, product)` records, duplicates summed, sorted.
    pub records: Vec<TradeRecord>,
    /// Data rows that parsed successfully (before duplicate merging).
    pub accepted_rows: usize,
    pub rejected: Vec<RowDiagnostic>,
}

pub fn load_trade_csv(path: impl AsRef<Path>, scheme: Scheme) -> Result<LoadedTrade> {
    load_trade_csv_with(path, scheme, &TradeCsvOptions::default())
}

pub fn load_trade_csv_with(path: impl AsRef<Path>, scheme: Scheme, opts: &TradeCsvOptions) -> Result<LoadedTrade> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trade_csv(file, scheme, opts)
}

pub fn read_trade_csv<R: Read>(reader: R, scheme: Scheme, opts: &TradeCsvOptions) -> Result<LoadedTrade> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::MalformedHeader(format!(
                "missing column `{name}` (found: {})",
                headers.iter().collect::<Vec<_>>().join(",")
            ))
        })
    };
    let (iy, ic, ip, iv) = (
        col(&opts.columns.year)?,
        col(&opts.columns.country)?,
        col(&opts.columns.product)?,
        col(&opts.columns.value)?,
    );

    let mut merged: BTreeMap<(i32, String, String), Decimal> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut accepted_rows = 0usize;

    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row, iy, ic, ip, iv) {
            Ok((year, country, product, value)) => {
                accepted_rows += 1;
                *merged.entry((year, country, product)).or_default() += value;
            }
            Err(reason) => {
                rejected.push(RowDiagnostic { line, reason });
                if rejected.len() > opts.max_rejected {
                    return Err(Error::ErrorBudgetExceeded {
                        budget: opts.max_rejected,
                        rejected,
                    });
                }
            }
        }
    }

    let records = merged
        .into_iter()
        .map(|((year, country, product), value)| TradeRecord {
            year,
            country,
            product,
            scheme,
            value,
        })
        .collect();
    Ok(LoadedTrade {
        records,
        accepted_rows,
        rejected,
    })
}

fn parse_row(
    row: &csv::StringRecord,
    iy: usize,
    ic: usize,
    ip: usize,
    iv: usize,
) -> std::result::Result<(i32, String, String, Decimal), String> {
    let field = |i: usize, name: &str| row.get(i).ok_or_else(|| format!("missing `{name}` field"));
    let year_s = field(iy, "year")?;
    let year = year_s
        .parse::<i32>()
        .map_err(|_| format!("non-integer year `{year_s}`"))?;
    let country = field(ic, "country")?;
    if country.is_empty() {
        return Err("empty country code".into());
    }
    let product = field(ip, "product")?;
    if product.is_empty() {
        return Err("empty product code".into());
    }
    let value_s = field(iv, "value")?;
    let value = parse_decimal(value_s).ok_or_else(|| format!("non-numeric value `{value_s}`"))?;
    if value.is_sign_negative() && !value.is_zero() {
        return Err(format!("negative value `{value_s}`"));
    }
    Ok((year, country.to_string(), product.to_string(), value))
}

/// Parses plain or scientific decimal notation exactly.
pub fn parse_decimal(s: &str) -> Option<Decimal> {
    Decimal::from_str(s).or_else(|_| Decimal::from_scientific(s)).ok()
}
