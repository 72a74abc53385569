//! Fitness and product complexity (`F`, `Q`) from the nonlinear map
//!
//! ```text
//! F~_c(N) = sum_p M_cp Q_p(N-1)
//! Q~_p(N) = 1 / sum_c M_cp / F_c(N-1)
//! ```
//!
//! with both normalized to mean 1 after every step, starting from all ones.
//!
//! On nested matrices some fitnesses decay to zero only algebraically
//! (like `1/N`), so they never get below any practical floor within
//! `max_iter`. We detect that at power-of-two checkpoints: a country whose
//! fitness fell by at least a factor `sqrt(2)` over each of the last two
//! doublings of `N` is clamped to [`FITNESS_FLOOR`], as is any fitness that
//! drops below the floor directly. Clamped countries stay clamped and are
//! reported in `degenerate_entities`.

use super::metric::{mean, IterationDiagnostics, MetricName, MetricVector, SolverConfig};
use super::rca::BinaryMatrix;
use crate::error::{Error, Result};

pub const FITNESS_FLOOR: f64 = 1e-13;

const FIRST_CHECKPOINT: usize = 64;
const DECAY_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn fitness(m: &BinaryMatrix, cfg: &SolverConfig) -> Result<(MetricVector, MetricVector)> {
    fitness_observed(m, cfg, |_, _, _| {})
}

/// As [`fitness`], calling `observer(N, F, Q)` after every normalized step.
pub fn fitness_observed(
    m: &BinaryMatrix,
    cfg: &SolverConfig,
    mut observer: impl FnMut(usize, &[f64], &[f64]),
) -> Result<(MetricVector, MetricVector)> {
    cfg.validate()?;
    let (m, dropped) = m.without_empty();
    let (n_c, n_p) = (m.n_countries(), m.n_products());
    if n_c == 0 {
        return Err(Error::domain("fitness needs at least one country with exports"));
    }
    let by_country = m.country_lists();
    let by_product = m.product_lists();

    let mut f = vec![1.0; n_c];
    let mut q = vec![1.0; n_p];
    let mut pinned = vec![false; n_c];
    // F at N = 1, 2, 4, ...
    let mut checkpoints: Vec<Vec<f64>> = Vec::new();
    let mut diag = IterationDiagnostics {
        tolerance: cfg.tol,
        dropped,
        ..Default::default()
    };

    for n in 1..=cfg.max_iter {
        let mut f_new: Vec<f64> = by_country.iter().map(|ps| ps.iter().map(|&p| q[p]).sum()).collect();
        let mut q_new: Vec<f64> = by_product
            .iter()
            .map(|cs| 1.0 / cs.iter().map(|&c| 1.0 / f[c]).sum::<f64>())
            .collect();
        let mf = mean(&f_new);
        f_new.iter_mut().for_each(|x| *x /= mf);
        let mq = mean(&q_new);
        q_new.iter_mut().for_each(|x| *x /= mq);

        let mut newly = vec![false; n_c];
        for c in 0..n_c {
            newly[c] = !pinned[c] && f_new[c] < FITNESS_FLOOR;
        }
        if n >= FIRST_CHECKPOINT && n.is_power_of_two() {
            let k = n.trailing_zeros() as usize;
            let (half, quarter) = (&checkpoints[k - 1], &checkpoints[k - 2]);
            let decaying: Vec<bool> = (0..n_c)
                .map(|c| !pinned[c] && f_new[c] <= half[c] * DECAY_RATIO && half[c] <= quarter[c] * DECAY_RATIO)
                .collect();
            let remaining = (0..n_c).filter(|&c| !pinned[c] && !newly[c] && !decaying[c]).count();
            if remaining > 0 {
                for c in 0..n_c {
                    newly[c] |= decaying[c];
                }
            }
        }
        let any_new = newly.iter().any(|&b| b);
        for c in 0..n_c {
            pinned[c] |= newly[c];
        }
        if pinned.iter().any(|&b| b) {
            clamp_and_rescale(&mut f_new, &pinned);
        }

        let residual = f_new
            .iter()
            .zip(&f)
            .chain(q_new.iter().zip(&q))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if n.is_power_of_two() {
            checkpoints.push(f_new.clone());
        }
        observer(n, &f_new, &q_new);
        f = f_new;
        q = q_new;
        diag.iterations = n;
        diag.final_residual = residual;
        if residual <= cfg.tol && !any_new {
            diag.converged = true;
            break;
        }
    }

    let mut q_diag = diag.clone();
    if pinned.iter().any(|&b| b) {
        diag.flags.push("fitness_floor".into());
        q_diag.flags.push("fitness_floor".into());
        diag.degenerate_entities = (0..n_c)
            .filter(|&c| pinned[c])
            .map(|c| m.countries[c].clone())
            .collect();
        q_diag.degenerate_entities = (0..n_p)
            .filter(|&p| by_product[p].iter().any(|&c| pinned[c]))
            .map(|p| m.products[p].clone())
            .collect();
    }
    Ok((
        MetricVector::new(MetricName::Fitness, m.countries.clone(), f, diag),
        MetricVector::new(MetricName::Q, m.products.clone(), q, q_diag),
    ))
}

/// Sets pinned entries to the floor and rescales the rest so the mean stays 1.
fn clamp_and_rescale(f: &mut [f64], pinned: &[bool]) {
    let n_pinned = pinned.iter().filter(|&&b| b).count();
    let target = f.len() as f64 - n_pinned as f64 * FITNESS_FLOOR;
    let free: f64 = f.iter().zip(pinned).filter(|(_, &p)| !p).map(|(x, _)| x).sum();
    for (x, &p) in f.iter_mut().zip(pinned) {
        *x = if p { FITNESS_FLOOR } else { *x * target / free };
    }
}
