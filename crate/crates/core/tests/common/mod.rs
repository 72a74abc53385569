#![allow(dead_code)]

pub mod oracles;

use ecomplex::complexity::BinaryMatrix;
use ecomplex::trade_data::TradeMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

pub fn trade(rows: &[Vec<f64>]) -> TradeMatrix {
    let c = labels("c", rows.len());
    let p = labels("p", rows[0].len());
    let cr: Vec<&str> = c.iter().map(String::as_str).collect();
    let pr: Vec<&str> = p.iter().map(String::as_str).collect();
    TradeMatrix::from_dense(2010, &cr, &pr, rows).unwrap()
}

pub fn trade_labeled(rows: &[Vec<f64>], countries: &[String], products: &[String]) -> TradeMatrix {
    let cr: Vec<&str> = countries.iter().map(String::as_str).collect();
    let pr: Vec<&str> = products.iter().map(String::as_str).collect();
    TradeMatrix::from_dense(2010, &cr, &pr, rows).unwrap()
}

pub fn binary(rows: &[Vec<f64>]) -> BinaryMatrix {
    let c = labels("c", rows.len());
    let p = labels("p", rows[0].len());
    let cr: Vec<&str> = c.iter().map(String::as_str).collect();
    let pr: Vec<&str> = p.iter().map(String::as_str).collect();
    let u: Vec<Vec<u8>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| u8::from(v != 0.0)).collect())
        .collect();
    BinaryMatrix::from_rows(&cr, &pr, &u).unwrap()
}

/// Dense positive matrix with entries spanning a few orders of magnitude.
/// Values are whole numbers so the decimal and float views agree exactly.
pub fn random_positive(rng: &mut ChaCha8Rng, nc: usize, np: usize) -> Vec<Vec<f64>> {
    (0..nc)
        .map(|_| {
            (0..np)
                .map(|_| (10f64.powf(rng.random_range(0.0..4.0)) * 100.0).round())
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
