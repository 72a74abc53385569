//! Per-country, per-year covariates (income, population, factors, governance).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six governance indicators. Absent before the indicators exist.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Governance {
    pub rule_of_law: Option<f64>,
    pub voice_accountability: Option<f64>,
    pub control_of_corruption: Option<f64>,
    pub regulatory_quality: Option<f64>,
    pub government_effectiveness: Option<f64>,
    pub political_stability: Option<f64>,
}

impl Governance {
    pub const COLUMNS: [&'static str; 6] = [
        "rule_of_law",
        "voice_accountability",
        "control_of_corruption",
        "regulatory_quality",
        "government_effectiveness",
        "political_stability",
    ];

    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "rule_of_law" => self.rule_of_law,
            "voice_accountability" => self.voice_accountability,
            "control_of_corruption" => self.control_of_corruption,
            "regulatory_quality" => self.regulatory_quality,
            "government_effectiveness" => self.government_effectiveness,
            "political_stability" => self.political_stability,
            _ => None,
        }
    }

    fn slot(&mut self, column: &str) -> Option<&mut Option<f64>> {
        Some(match column {
            "rule_of_law" => &mut self.rule_of_law,
            "voice_accountability" => &mut self.voice_accountability,
            "control_of_corruption" => &mut self.control_of_corruption,
            "regulatory_quality" => &mut self.regulatory_quality,
            "government_effectiveness" => &mut self.government_effectiveness,
            "political_stability" => &mut self.political_stability,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryMeta {
    pub country: String,
    pub year: i32,
    /// Real GDP per capita, constant USD.
    pub gdp_pc: Option<f64>,
    /// Persons.
    pub population: Option<f64>,
    pub human_capital: Option<f64>,
    /// Constant USD per worker.
    pub capital_per_worker: Option<f64>,
    pub governance: Governance,
}

impl CountryMeta {
    pub fn new(country: impl Into<String>, year: i32) -> Self {
        CountryMeta {
            country: country.into(),
            year,
            gdp_pc: None,
            population: None,
            human_capital: None,
            capital_per_worker: None,
            governance: Governance::default(),
        }
    }
}

/// Covariates keyed by `(country, year)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetaTable {
    rows: BTreeMap<(String, i32), CountryMeta>,
}

impl MetaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, meta: CountryMeta) {
        self.rows.insert((meta.country.clone(), meta.year), meta);
    }

    pub fn get(&self, country: &str, year: i32) -> Option<&CountryMeta> {
        self.rows.get(&(country.to_string(), year))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CountryMeta> {
        self.rows.values()
    }

    /// All rows for one year, keyed by country.
    pub fn for_year(&self, year: i32) -> BTreeMap<String, CountryMeta> {
        self.rows
            .values()
            .filter(|m| m.year == year)
            .map(|m| (m.country.clone(), m.clone()))
            .collect()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.rows.keys().map(|&(_, y)| y).collect();
        y.sort_unstable();
        y.dedup();
        y
    }

    /// Merges governance columns from `other` into existing rows, creating
    /// rows that do not exist yet.
    pub fn merge_governance(&mut self, other: &MetaTable) {
        for m in other.iter() {
            let entry = self
                .rows
                .entry((m.country.clone(), m.year))
                .or_insert_with(|| CountryMeta::new(m.country.clone(), m.year));
            for col in Governance::COLUMNS {
                if let Some(v) = m.governance.get(col) {
                    *entry.governance.slot(col).expect("known column") = Some(v);
                }
            }
        }
    }
}

impl FromIterator<CountryMeta> for MetaTable {
    fn from_iter<T: IntoIterator<Item = CountryMeta>>(iter: T) -> Self {
        let mut t = MetaTable::new();
        for m in iter {
            t.insert(m);
        }
        t
    }
}

/// Loads a covariates CSV with columns `country,year` plus any of
/// `gdp_pc, population, human_capital, capital_per_worker` and the six
/// governance columns. Empty cells are treated as missing.
pub fn load_covariates_csv(path: impl AsRef<Path>) -> Result<MetaTable> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_covariates_csv(f)
}

pub fn read_covariates_csv<R: Read>(reader: R) -> Result<MetaTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |n: &str| headers.iter().position(|h| h == n);
    let ic = find("country").ok_or_else(|| Error::MalformedHeader("missing column `country`".into()))?;
    let iy = find("year").ok_or_else(|| Error::MalformedHeader("missing column `year`".into()))?;
    let known = ["gdp_pc", "population", "human_capital", "capital_per_worker"];
    for h in &headers {
        if h != "country" && h != "year" && !known.contains(&h.as_str()) && !Governance::COLUMNS.contains(&h.as_str()) {
            return Err(Error::MalformedHeader(format!("unknown covariate column `{h}`")));
        }
    }

    let mut table = MetaTable::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| Error::domain(format!("covariates line {line}: {msg}"));
        let country = row.get(ic).unwrap_or("").to_string();
        if country.is_empty() {
            return Err(bad("empty country".into()));
        }
        let year: i32 = row
            .get(iy)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("non-integer year".into()))?;
        let mut m = CountryMeta::new(country, year);
        for (i, h) in headers.iter().enumerate() {
            if i == ic || i == iy {
                continue;
            }
            let cell = row.get(i).unwrap_or("");
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| bad(format!("non-numeric {h} `{cell}`")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite {h}")));
            }
            match h.as_str() {
                "gdp_pc" if v <= 0.0 => return Err(bad("gdp_pc must be positive".into())),
                "population" if v <= 0.0 => return Err(bad("population must be positive".into())),
                "gdp_pc" => m.gdp_pc = Some(v),
                "population" => m.population = Some(v),
                "human_capital" => m.human_capital = Some(v),
                "capital_per_worker" => m.capital_per_worker = Some(v),
                col => *m.governance.slot(col).expect("validated header") = Some(v),
            }
        }
        table.insert(m);
    }
    Ok(table)
}
