//! Revealed comparative advantage, the binary specialization matrix, and
//! diversity/ubiquity.

use nalgebra::DMatrix;
use rust_decimal::prelude::ToPrimitive;

use super::metric::{IterationDiagnostics, MetricName, MetricVector};
use crate::error::{Error, Result};
use crate::trade_data::TradeMatrix;

/// `R[c,p] = X[c,p] * X / (X[c,.] * X[.,p])`, zero exactly where `X` is.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Entries are 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
}

pub fn rca(matrix: &TradeMatrix) -> Result<RcaMatrix> {
    if let Some(&c) = matrix.empty_rows().first() {
        return Err(Error::domain(format!(
            "country `{}` has no exports",
            matrix.countries()[c]
        )));
    }
    if let Some(&p) = matrix.empty_columns().first() {
        return Err(Error::domain(format!(
            "product `{}` has no exports",
            matrix.products()[p]
        )));
    }
    let to_f = |d: rust_decimal::Decimal| d.to_f64().unwrap_or(f64::NAN);
    let rows: Vec<f64> = matrix.row_totals().into_iter().map(to_f).collect();
    let cols: Vec<f64> = matrix.column_totals().into_iter().map(to_f).collect();
    let total = to_f(matrix.total());

    let mut values = DMatrix::zeros(matrix.n_countries(), matrix.n_products());
    for (c, row) in matrix.rows_f64().into_iter().enumerate() {
        for (p, x) in row {
            values[(c, p)] = x * total / (rows[c] * cols[p]);
        }
    }
    Ok(RcaMatrix {
        countries: matrix.countries().to_vec(),
        products: matrix.products().to_vec(),
        values,
    })
}

/// `M = 1` where `R >= 1`.
pub fn binarize(rca: &RcaMatrix) -> BinaryMatrix {
    BinaryMatrix {
        countries: rca.countries.clone(),
        products: rca.products.clone(),
        values: rca.values.map(|r| if r >= 1.0 { 1.0 } else { 0.0 }),
    }
}

impl BinaryMatrix {
    /// Builds from 0/1 rows; any nonzero entry counts as 1.
    pub fn from_rows(countries: &[&str], products: &[&str], rows: &[Vec<u8>]) -> Result<Self> {
        if rows.len() != countries.len() || rows.iter().any(|r| r.len() != products.len()) {
            return Err(Error::domain("row/column counts do not match the labels"));
        }
        let values = DMatrix::from_fn(countries.len(), products.len(), |c, p| {
            f64::from(u8::from(rows[c][p] != 0))
        });
        Ok(BinaryMatrix {
            countries: countries.iter().map(|s| s.to_string()).collect(),
            products: products.iter().map(|s| s.to_string()).collect(),
            values,
        })
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    /// Per country, the indices of products with `M = 1`.
    pub(crate) fn country_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n_countries())
            .map(|c| (0..self.n_products()).filter(|&p| self.values[(c, p)] != 0.0).collect())
            .collect()
    }

    pub(crate) fn product_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n_products())
            .map(|p| {
                (0..self.n_countries())
                    .filter(|&c| self.values[(c, p)] != 0.0)
                    .collect()
            })
            .collect()
    }

    /// Removes all-zero rows and columns, returning the reduced matrix and
    /// the removed labels (`country:X` / `product:Y`).
    pub(crate) fn without_empty(&self) -> (BinaryMatrix, Vec<String>) {
        let kc: Vec<usize> = (0..self.n_countries())
            .filter(|&c| self.values.row(c).iter().any(|&v| v != 0.0))
            .collect();
        let kp: Vec<usize> = (0..self.n_products())
            .filter(|&p| self.values.column(p).iter().any(|&v| v != 0.0))
            .collect();
        let mut dropped: Vec<String> = (0..self.n_countries())
            .filter(|c| !kc.contains(c))
            .map(|c| format!("country:{}", self.countries[c]))
            .collect();
        dropped.extend(
            (0..self.n_products())
                .filter(|p| !kp.contains(p))
                .map(|p| format!("product:{}", self.products[p])),
        );
        if dropped.is_empty() {
            return (self.clone(), dropped);
        }
        let values = DMatrix::from_fn(kc.len(), kp.len(), |i, j| self.values[(kc[i], kp[j])]);
        let reduced = BinaryMatrix {
            countries: kc.iter().map(|&c| self.countries[c].clone()).collect(),
            products: kp.iter().map(|&p| self.products[p].clone()).collect(),
            values,
        };
        (reduced, dropped)
    }
}

/// `k_c`, the number of products with `M = 1` per country. Countries with
/// zero diversity are listed in the `zero_diversity` flag.
pub fn diversity(m: &BinaryMatrix) -> MetricVector {
    let values: Vec<f64> = m.values.row_iter().map(|r| r.sum()).collect();
    let mut diag = IterationDiagnostics::direct();
    for (c, &k) in values.iter().enumerate() {
        if k == 0.0 {
            diag.flags.push(format!("zero_diversity:{}", m.countries[c]));
        }
    }
    MetricVector::new(MetricName::Diversity, m.countries.clone(), values, diag)
}

/// `k_p`, the number of countries with `M = 1` per product.
pub fn ubiquity(m: &BinaryMatrix) -> MetricVector {
    let values: Vec<f64> = m.values.column_iter().map(|c| c.sum()).collect();
    let mut diag = IterationDiagnostics::direct();
    for (p, &k) in values.iter().enumerate() {
        if k == 0.0 {
            diag.flags.push(format!("zero_ubiquity:{}", m.products[p]));
        }
    }
    MetricVector::new(MetricName::Ubiquity, m.products.clone(), values, diag)
}
