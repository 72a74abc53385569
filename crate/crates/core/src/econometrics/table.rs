//! Plain-text regression tables: coefficient with stars, standard error in
//! parentheses underneath, fit statistics at the bottom.

use super::ols::{Estimator, RegressionResult};

/// Three significant figures, no exponent.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn label(name: &str) -> String {
    match name {
        "initial_metric" => "Initial metric".into(),
        "gdp_x_metric" => "Initial GDPpc x metric".into(),
        "initial_log_gdp_pc" => "Initial log GDPpc".into(),
        "human_capital" => "Initial human capital".into(),
        "population" => "Initial population".into(),
        "capital_per_worker" => "Initial capital per worker".into(),
        "const" => "Constant".into(),
        other => other.replace('_', " "),
    }
}

/// Renders results side by side; `titles` label the columns.
pub fn render_table(results: &[RegressionResult], titles: &[String]) -> String {
    let mut rows: Vec<String> = Vec::new();
    for r in results {
        for n in &r.names {
            if !n.starts_with("year_") && n != "const" && !rows.contains(n) {
                rows.push(n.clone());
            }
        }
    }
    rows.push("const".into());

    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(titles.iter().cloned());
    lines.push(header);
    for name in &rows {
        let mut coef_line = vec![label(name)];
        let mut se_line = vec![String::new()];
        for r in results {
            match r.index(name) {
                Some(i) => {
                    coef_line.push(format!("{}{}", sig3(r.coefficients[i]), r.stars(i)));
                    se_line.push(format!("({})", sig3(r.se[i])));
                }
                None => {
                    coef_line.push(String::new());
                    se_line.push(String::new());
                }
            }
        }
        lines.push(coef_line);
        lines.push(se_line);
    }
    let rule = lines.len();
    let stat = |name: &str, f: &dyn Fn(&RegressionResult) -> String| {
        let mut l = vec![name.to_string()];
        l.extend(results.iter().map(f));
        l
    };
    lines.push(stat("Estimator", &|r| {
        match r.estimator {
            Estimator::PooledOls => "OLS",
            Estimator::FixedEffects => "FE",
        }
        .into()
    }));
    lines.push(stat("Year FE", &|r| {
        if r.year_dummies.is_empty() { "No" } else { "Yes" }.into()
    }));
    lines.push(stat("Observations", &|r| r.n_obs.to_string()));
    lines.push(stat("Adjusted R2", &|r| format!("{:.3}", r.r2_adjusted)));
    // panel R2 rows only when some column is a fixed-effects fit
    if results.iter().any(|r| r.r2_within.is_some()) {
        lines.push(stat("R2 within", &|r| {
            r.r2_within.map(|v| format!("{v:.3}")).unwrap_or_default()
        }));
        lines.push(stat("R2 between", &|r| {
            r.r2_between.map(|v| format!("{v:.3}")).unwrap_or_default()
        }));
        lines.push(stat("R2 overall", &|r| {
            r.r2_overall.map(|v| format!("{v:.3}")).unwrap_or_default()
        }));
    }
    lines.push(stat("RMSE", &|r| sig3(r.rmse)));
    lines.push(stat("N clusters", &|r| r.n_clusters.to_string()));

    let ncol = results.len() + 1;
    let widths: Vec<usize> = (0..ncol)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let total: usize = widths.iter().sum::<usize>() + 2 * (ncol - 1);
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        if i == 1 || i == rule {
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out.push_str("Robust-clustered standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.10\n");
    out
}
