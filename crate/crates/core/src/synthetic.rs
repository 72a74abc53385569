//! Seeded synthetic trade matrices and country panels for tests, benchmarks,
//! and demos. Same seed, same output, on every platform.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rust_decimal::Decimal;

use crate::error::{Error, Result};
use crate::trade_data::{CountryMeta, Governance, MetaTable, Scheme, TradeMatrix, TradeRecord};

/// Random matrix with roughly `density` nonzero cells, lognormal values in
/// whole USD, and no empty row or column.
pub fn random_trade_matrix(seed: u64, n_countries: usize, n_products: usize, density: f64) -> TradeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = LogNormal::new(13.0, 1.5).expect("valid lognormal");
    let countries: Vec<String> = (0..n_countries).map(|i| format!("C{i:04}")).collect();
    let products: Vec<String> = (0..n_products).map(|i| format!("P{i:04}")).collect();
    let mut triplets = Vec::new();
    for c in 0..n_countries {
        for p in 0..n_products {
            let forced = p == c % n_products || c == p % n_countries;
            if forced || rng.random::<f64>() < density {
                let v: f64 = size.sample(&mut rng);
                triplets.push((
                    countries[c].clone(),
                    products[p].clone(),
                    Decimal::from(v.round().max(1.0) as i64),
                ));
            }
        }
    }
    TradeMatrix::from_triplets(0, triplets).expect("nonempty")
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub seed: u64,
    pub n_countries: usize,
    pub n_products: usize,
    pub start_year: i32,
    pub end_year: i32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 7,
            n_countries: 30,
            n_products: 60,
            start_year: 1993,
            end_year: 2013,
        }
    }
}

/// Trade records and covariates for a toy world in which more capable
/// countries export more (and harder) products and grow faster.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub records: Vec<TradeRecord>,
    pub meta: MetaTable,
}

pub fn synthetic_world(cfg: &WorldConfig) -> SyntheticWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let countries: Vec<String> = (0..cfg.n_countries).map(|i| format!("K{i:02}")).collect();
    let capability: Vec<f64> = (0..cfg.n_countries).map(|_| rng.random::<f64>()).collect();
    let scale: Vec<f64> = (0..cfg.n_countries)
        .map(|_| 18.0 + 1.5 * noise.sample(&mut rng))
        .collect();
    let difficulty: Vec<f64> = (0..cfg.n_products).map(|_| rng.random::<f64>()).collect();
    let market: Vec<f64> = (0..cfg.n_products).map(|_| 0.8 * noise.sample(&mut rng)).collect();
    let population: Vec<f64> = (0..cfg.n_countries)
        .map(|_| (16.0 + 1.2 * noise.sample(&mut rng)).exp())
        .collect();
    let mut log_gdp: Vec<f64> = capability
        .iter()
        .map(|a| 7.5 + 2.5 * a + 0.4 * noise.sample(&mut rng))
        .collect();

    let mut records = Vec::new();
    let mut meta = MetaTable::new();
    for year in cfg.start_year..=cfg.end_year {
        let drift = f64::from(year - cfg.start_year) * 0.01;
        for c in 0..cfg.n_countries {
            let a = capability[c] + drift * capability[c];
            for p in 0..cfg.n_products {
                let reach = a + 0.25 - difficulty[p];
                let exported = reach > 0.0 || rng.random::<f64>() < 0.15;
                if !exported {
                    continue;
                }
                let log_v = scale[c] + market[p] + 2.0 * reach.min(0.5) + 0.6 * noise.sample(&mut rng);
                let v = log_v.exp().round().max(0.0);
                records.push(TradeRecord {
                    year,
                    country: countries[c].clone(),
                    product: format!("{:04}", 1000 + p),
                    scheme: Scheme::Sitc4,
                    value: Decimal::from(v as i64),
                });
            }

            let mut m = CountryMeta::new(countries[c].clone(), year);
            m.gdp_pc = Some(log_gdp[c].exp());
            m.population = Some(population[c] * (1.0 + 0.015 * f64::from(year - cfg.start_year)));
            m.human_capital = Some(1.2 + 2.0 * capability[c] + 0.1 * noise.sample(&mut rng));
            m.capital_per_worker = Some((9.0 + 2.0 * capability[c] + 0.2 * noise.sample(&mut rng)).exp());
            if year >= 1996 {
                let g = capability[c] - 0.5;
                m.governance = Governance {
                    rule_of_law: Some(g + 0.3 * noise.sample(&mut rng)),
                    voice_accountability: Some(g + 0.3 * noise.sample(&mut rng)),
                    control_of_corruption: Some(g + 0.3 * noise.sample(&mut rng)),
                    regulatory_quality: Some(g + 0.3 * noise.sample(&mut rng)),
                    government_effectiveness: Some(g + 0.3 * noise.sample(&mut rng)),
                    political_stability: Some(g + 0.3 * noise.sample(&mut rng)),
                };
            }
            meta.insert(m);

            // convergence plus a capability premium
            let growth =
                0.02 + 0.04 * (capability[c] - 0.5) - 0.004 * (log_gdp[c] - 9.0) + 0.01 * noise.sample(&mut rng);
            log_gdp[c] += growth;
        }
    }
    SyntheticWorld { records, meta }
}

/// Writes records as `year,country,product,value`.
pub fn write_trade_csv<W: Write>(records: &[TradeRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", "country", "product", "value"])?;
    for r in records {
        w.write_record([
            r.year.to_string(),
            r.country.clone(),
            r.product.clone(),
            r.value.normalize().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}

/// Writes covariates with every column the loader understands.
pub fn write_covariates_csv<W: Write>(meta: &MetaTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "country",
        "year",
        "gdp_pc",
        "population",
        "human_capital",
        "capital_per_worker",
    ];
    header.extend(Governance::COLUMNS);
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in meta.iter() {
        let mut row = vec![
            m.country.clone(),
            m.year.to_string(),
            cell(m.gdp_pc),
            cell(m.population),
            cell(m.human_capital),
            cell(m.capital_per_worker),
        ];
        row.extend(Governance::COLUMNS.iter().map(|c| cell(m.governance.get(c))));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))
}
