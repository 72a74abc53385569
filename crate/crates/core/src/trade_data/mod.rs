//! Trade records, country covariates, and the sample filters.

mod filters;
mod matrix;
mod meta;
mod records;

pub use filters::{
    apply_static_filters, apply_static_filters_with_exports, apply_yearly_filters, reference_exports, Coverage,
    DropReason, DroppedEntity, FilterConfig, FilterReport, FILTER_ORDER,
};
pub use matrix::{build_matrix, TradeMatrix};
pub use meta::{load_covariates_csv, read_covariates_csv, CountryMeta, Governance, MetaTable};
pub use records::{
    load_trade_csv, load_trade_csv_with, parse_decimal, read_trade_csv, ColumnMapping, LoadedTrade, Scheme,
    TradeCsvOptions, TradeRecord,
};
