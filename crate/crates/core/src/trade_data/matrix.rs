//! Sparse country × product export matrix for a single year.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use super::records::{parse_decimal, TradeRecord};
use crate::error::{Error, Result};

/// Nonnegative export values in USD, stored row-wise with only the nonzero
/// cells kept. Row and column labels are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeMatrix {
    year: i32,
    countries: Vec<String>,
    products: Vec<String>,
    /// Per country, `(product index, value)` sorted by product index.
    rows: Vec<Vec<(usize, Decimal)>>,
}

impl TradeMatrix {
    /// Builds a matrix from triplets. Zero-valued triplets keep their labels
    /// but store no cell; duplicate cells are summed.
    pub fn from_triplets<I, C, P>(year: i32, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, P, Decimal)>,
        C: Into<String>,
        P: Into<String>,
    {
        let mut cells: BTreeMap<(String, String), Decimal> = BTreeMap::new();
        for (c, p, v) in triplets {
            if v.is_sign_negative() && !v.is_zero() {
                return Err(Error::domain(format!("negative export value {v}")));
            }
            *cells.entry((c.into(), p.into())).or_default() += v;
        }
        let countries: Vec<String> = cells
            .keys()
            .map(|(c, _)| c.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let products: Vec<String> = cells
            .keys()
            .map(|(_, p)| p.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pidx: BTreeMap<&str, usize> = products.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let cidx: BTreeMap<&str, usize> = countries.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut rows = vec![Vec::new(); countries.len()];
        for ((c, p), v) in &cells {
            if !v.is_zero() {
                rows[cidx[c.as_str()]].push((pidx[p.as_str()], *v));
            }
        }
        for r in &mut rows {
            r.sort_by_key(|&(p, _)| p);
        }
        Ok(TradeMatrix {
            year,
            countries,
            products,
            rows,
        })
    }

    /// Dense constructor, mostly for tests and synthetic data. Values are
    /// converted to exact decimals.
    pub fn from_dense(year: i32, countries: &[&str], products: &[&str], values: &[Vec<f64>]) -> Result<Self> {
        if values.len() != countries.len() || values.iter().any(|r| r.len() != products.len()) {
            return Err(Error::domain("dense matrix shape does not match labels"));
        }
        let uniq = |v: &[&str]| v.iter().collect::<BTreeSet<_>>().len() == v.len();
        if !uniq(countries) || !uniq(products) {
            return Err(Error::domain("duplicate labels"));
        }
        let mut rows = Vec::with_capacity(countries.len());
        for r in values {
            let mut row = Vec::new();
            for (p, &v) in r.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::domain(format!("invalid export value {v}")));
                }
                if v > 0.0 {
                    let d = Decimal::from_f64_retain(v)
                        .ok_or_else(|| Error::domain(format!("value {v} not representable")))?;
                    row.push((p, d));
                }
            }
            rows.push(row);
        }
        Ok(TradeMatrix {
            year,
            countries: countries.iter().map(|s| s.to_string()).collect(),
            products: products.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Nonzero cells of country `c` as `(product index, value)`.
    pub fn row(&self, c: usize) -> &[(usize, Decimal)] {
        &self.rows[c]
    }

    pub fn get(&self, c: usize, p: usize) -> Decimal {
        match self.rows[c].binary_search_by_key(&p, |&(j, _)| j) {
            Ok(i) => self.rows[c][i].1,
            Err(_) => Decimal::ZERO,
        }
    }

    pub fn country_index(&self, label: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == label)
    }

    pub fn product_index(&self, label: &str) -> Option<usize> {
        self.products.iter().position(|p| p == label)
    }

    /// Total exports per country.
    pub fn row_totals(&self) -> Vec<Decimal> {
        self.rows.iter().map(|r| r.iter().map(|&(_, v)| v).sum()).collect()
    }

    /// World exports per product.
    pub fn column_totals(&self) -> Vec<Decimal> {
        let mut t = vec![Decimal::ZERO; self.products.len()];
        for r in &self.rows {
            for &(p, v) in r {
                t[p] += v;
            }
        }
        t
    }

    pub fn total(&self) -> Decimal {
        self.rows.iter().flatten().map(|&(_, v)| v).sum()
    }

    /// Nonzero cells per product (number of exporting countries).
    pub fn column_nonzero_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.products.len()];
        for r in &self.rows {
            for &(p, _) in r {
                n[p] += 1;
            }
        }
        n
    }

    /// Row-wise `(product index, value as f64)` view used by the metric code.
    pub fn rows_f64(&self) -> Vec<Vec<(usize, f64)>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(p, v)| (p, v.to_f64().unwrap_or(f64::NAN))).collect())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.countries.len(), self.products.len());
        for (c, r) in self.rows.iter().enumerate() {
            for &(p, v) in r {
                m[(c, p)] = v.to_f64().unwrap_or(f64::NAN);
            }
        }
        m
    }

    /// Multiplies every cell by `factor`.
    pub fn scaled(&self, factor: Decimal) -> Result<Self> {
        if factor <= Decimal::ZERO {
            return Err(Error::domain("scale factor must be positive"));
        }
        let mut out = self.clone();
        for r in &mut out.rows {
            for cell in r.iter_mut() {
                cell.1 = cell
                    .1
                    .checked_mul(factor)
                    .ok_or_else(|| Error::domain("decimal overflow while scaling"))?;
            }
        }
        Ok(out)
    }

    /// Keeps the listed rows and columns (given as sorted index sets) and
    /// relabels accordingly.
    pub fn select(&self, keep_countries: &[usize], keep_products: &[usize]) -> Self {
        let mut new_p = vec![usize::MAX; self.products.len()];
        for (i, &p) in keep_products.iter().enumerate() {
            new_p[p] = i;
        }
        let rows = keep_countries
            .iter()
            .map(|&c| {
                self.rows[c]
                    .iter()
                    .filter(|&&(p, _)| new_p[p] != usize::MAX)
                    .map(|&(p, v)| (new_p[p], v))
                    .collect()
            })
            .collect();
        TradeMatrix {
            year: self.year,
            countries: keep_countries.iter().map(|&c| self.countries[c].clone()).collect(),
            products: keep_products.iter().map(|&p| self.products[p].clone()).collect(),
            rows,
        }
    }

    /// Replaces cell values via `f`; cells mapped to zero are removed.
    pub(crate) fn map_cells(&mut self, mut f: impl FnMut(usize, usize, Decimal) -> Decimal) {
        for (c, r) in self.rows.iter_mut().enumerate() {
            r.retain_mut(|(p, v)| {
                *v = f(c, *p, *v);
                !v.is_zero()
            });
        }
    }

    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.countries.len()).filter(|&c| self.rows[c].is_empty()).collect()
    }

    pub fn empty_columns(&self) -> Vec<usize> {
        let counts = self.column_nonzero_counts();
        (0..self.products.len()).filter(|&p| counts[p] == 0).collect()
    }

    /// Writes `country,product,value` triplets for nonzero cells.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["country", "product", "value"])?;
        for (c, r) in self.rows.iter().enumerate() {
            for &(p, v) in r {
                w.write_record([
                    self.countries[c].as_str(),
                    self.products[p].as_str(),
                    &v.normalize().to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads triplets written by [`TradeMatrix::write_csv`]. Lines starting
    /// with `#` are ignored.
    pub fn read_csv<R: Read>(year: i32, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["country", "product", "value"] {
            return Err(Error::MalformedHeader(format!(
                "expected country,product,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut triplets = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let v = parse_decimal(&row[2])
                .ok_or_else(|| Error::domain(format!("line {line}: non-numeric value `{}`", &row[2])))?;
            triplets.push((row[0].to_string(), row[1].to_string(), v));
        }
        Self::from_triplets(year, triplets)
    }
}

/// Materializes the records of `year` as a matrix with lexicographic labels.
pub fn build_matrix(records: &[TradeRecord], year: i32) -> Result<TradeMatrix> {
    let triplets: Vec<_> = records
        .iter()
        .filter(|r| r.year == year)
        .map(|r| (r.country.clone(), r.product.clone(), r.value))
        .collect();
    if triplets.is_empty() {
        return Err(Error::EmptyYear(year));
    }
    TradeMatrix::from_triplets(year, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trade_data::Scheme;

    fn rec(year: i32, c: &str, p: &str, v: i64) -> TradeRecord {
        TradeRecord {
            year,
            country: c.into(),
            product: p.into(),
            scheme: Scheme::Sitc4,
            value: Decimal::from(v),
        }
    }

    #[test]
    fn two_by_two_direct() {
        let m = build_matrix(&[rec(2010, "A", "p1", 10), rec(2010, "B", "p2", 20)], 2010).unwrap();
        assert_eq!(m.countries(), ["A", "B"]);
        assert_eq!(m.products(), ["p1", "p2"]);
        let d = m.to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 20.0]));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn missing_year_is_error() {
        let err = build_matrix(&[rec(2009, "A", "p1", 10)], 2010).unwrap_err();
        assert!(matches!(err, Error::EmptyYear(2010)));
    }

    #[test]
    fn single_country_row() {
        let recs = [
            rec(2010, "A", "p3", 1),
            rec(2010, "A", "p1", 2),
            rec(2010, "A", "p2", 3),
        ];
        let m = build_matrix(&recs, 2010).unwrap();
        assert_eq!((m.n_countries(), m.n_products()), (1, 3));
        assert_eq!(m.products(), ["p1", "p2", "p3"]);
        assert_eq!(m.get(0, 2), Decimal::from(1));
    }

    #[test]
    fn other_years_ignored() {
        let recs = [rec(2010, "A", "p1", 1), rec(2011, "B", "p2", 2)];
        let m = build_matrix(&recs, 2010).unwrap();
        assert_eq!(m.countries(), ["A"]);
    }

    #[test]
    fn csv_round_trip() {
        let m = TradeMatrix::from_dense(
            2001,
            &["X", "Y"],
            &["1", "2", "3"],
            &[vec![1.5, 0.0, 2.0], vec![0.0, 7.0, 0.25]],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = TradeMatrix::read_csv(2001, &buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn select_relabels() {
        let m = TradeMatrix::from_dense(
            2001,
            &["X", "Y"],
            &["1", "2", "3"],
            &[vec![1.0, 0.0, 2.0], vec![0.0, 7.0, 3.0]],
        )
        .unwrap();
        let s = m.select(&[1], &[1, 2]);
        assert_eq!(s.countries(), ["Y"]);
        assert_eq!(s.products(), ["2", "3"]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(1, 2, &[7.0, 3.0]));
    }
}
