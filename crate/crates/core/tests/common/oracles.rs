//! Straight-line reference implementations of each metric, written from the
//! defining equations on dense `Vec<Vec<f64>>` input without touching the
//! library's solvers.

#![allow(dead_code)]

/// Neumaier-compensated sum.
pub fn ksum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn row_sums(x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().map(|r| ksum(r.iter().copied())).collect()
}

pub fn col_sums(x: &[Vec<f64>]) -> Vec<f64> {
    (0..x[0].len()).map(|p| ksum(x.iter().map(|r| r[p]))).collect()
}

pub fn rca(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = row_sums(x);
    let cols = col_sums(x);
    let total = ksum(rows.iter().copied());
    x.iter()
        .enumerate()
        .map(|(c, r)| {
            r.iter()
                .enumerate()
                .map(|(p, &v)| {
                    let expected = rows[c] * cols[p] / total;
                    v / expected
                })
                .collect()
        })
        .collect()
}

pub fn binarize(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    r.iter()
        .map(|row| row.iter().map(|&v| if v >= 1.0 { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = ksum(v.iter().copied()) / n;
    let sd = (ksum(v.iter().map(|x| (x - mean) * (x - mean))) / n).sqrt();
    v.iter().map(|x| (x - mean) / sd).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let za = zscore(a);
    let zb = zscore(b);
    ksum(za.iter().zip(&zb).map(|(x, y)| x * y)) / a.len() as f64
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors (as columns of the second value).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// The country-country matrix `M~[c][c'] = sum_p M_cp M_c'p / (k_c k_p)`.
pub fn m_tilde(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let kc = row_sums(m);
    let kp = col_sums(m);
    let n = m.len();
    (0..n)
        .map(|c| {
            (0..n)
                .map(|d| ksum((0..kp.len()).map(|p| m[c][p] * m[d][p] / kp[p])) / kc[c])
                .collect()
        })
        .collect()
}

/// ECI and PCI, or `None` when the second eigenvalue is not separated by
/// at least `min_gap` from its neighbours.
pub fn eci_pci(m: &[Vec<f64>], min_gap: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let kc = row_sums(m);
    let kp = col_sums(m);
    let mt = m_tilde(m);
    let n = m.len();
    // S = D^1/2 M~ D^-1/2 is symmetric
    let s: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| mt[i][j] * kc[i].sqrt() / kc[j].sqrt()).collect())
        .collect();
    let (vals, vecs) = jacobi_eigen(&s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let l2 = vals[order[1]];
    if vals[order[0]] - l2 < min_gap || (n > 2 && l2 - vals[order[2]] < min_gap) || l2.abs() < min_gap {
        return None;
    }
    let v: Vec<f64> = (0..n).map(|c| vecs[c][order[1]] / kc[c].sqrt()).collect();
    let mut eci = zscore(&v);
    let flat = kc.iter().all(|&k| k == kc[0]);
    let corr = if flat { 0.0 } else { pearson(&eci, &kc) };
    // rows carry lexicographically ordered labels, so row 0 wins ties
    let lead = eci.iter().copied().find(|v| v.abs() > 1e-9).unwrap_or(0.0);
    if corr < -1e-12 || (corr.abs() <= 1e-12 && lead < 0.0) {
        eci.iter_mut().for_each(|x| *x = -*x);
    }
    let pci_raw: Vec<f64> = (0..kp.len())
        .map(|p| ksum((0..n).map(|c| m[c][p] * eci[c])) / kp[p])
        .collect();
    Some((eci, zscore(&pci_raw)))
}

pub const FLOOR: f64 = 1e-13;

/// Fitness and Q by direct iteration of the map, with the same vanishing
/// rule as the library: at N = 64, 128, ... a country whose F fell by a
/// factor of at least sqrt(2) across each of the last two doublings of N is
/// clamped at the floor, as is any F below the floor.
pub fn fitness(m: &[Vec<f64>], tol: f64, max_iter: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let (nc, np) = (m.len(), m[0].len());
    let mut f = vec![1.0; nc];
    let mut q = vec![1.0; np];
    let mut clamped = vec![false; nc];
    let mut history: std::collections::HashMap<usize, Vec<f64>> = Default::default();
    for n in 1..=max_iter {
        let ft: Vec<f64> = (0..nc).map(|c| ksum((0..np).map(|p| m[c][p] * q[p]))).collect();
        let qt: Vec<f64> = (0..np)
            .map(|p| 1.0 / ksum((0..nc).filter(|&c| m[c][p] != 0.0).map(|c| 1.0 / f[c])))
            .collect();
        let mf = ksum(ft.iter().copied()) / nc as f64;
        let mq = ksum(qt.iter().copied()) / np as f64;
        let mut fnew: Vec<f64> = ft.iter().map(|x| x / mf).collect();
        let qnew: Vec<f64> = qt.iter().map(|x| x / mq).collect();

        let mut fresh = false;
        let mut candidates: Vec<usize> = (0..nc).filter(|&c| !clamped[c] && fnew[c] < FLOOR).collect();
        if n >= 64 && n.is_power_of_two() {
            let half = &history[&(n / 2)];
            let quarter = &history[&(n / 4)];
            let decaying: Vec<usize> = (0..nc)
                .filter(|&c| !clamped[c] && fnew[c] <= half[c] / 2f64.sqrt() && half[c] <= quarter[c] / 2f64.sqrt())
                .collect();
            let would_remain = (0..nc)
                .filter(|c| !clamped[*c] && !candidates.contains(c) && !decaying.contains(c))
                .count();
            if would_remain > 0 {
                candidates.extend(decaying);
            }
        }
        for c in candidates {
            if !clamped[c] {
                clamped[c] = true;
                fresh = true;
            }
        }
        if clamped.iter().any(|&b| b) {
            let nclamped = clamped.iter().filter(|&&b| b).count() as f64;
            let free = ksum((0..nc).filter(|&c| !clamped[c]).map(|c| fnew[c]));
            let target = nc as f64 - nclamped * FLOOR;
            for c in 0..nc {
                fnew[c] = if clamped[c] { FLOOR } else { fnew[c] * target / free };
            }
        }
        let change = (0..nc)
            .map(|c| (fnew[c] - f[c]).abs())
            .chain((0..np).map(|p| (qnew[p] - q[p]).abs()))
            .fold(0.0, f64::max);
        if n.is_power_of_two() {
            history.insert(n, fnew.clone());
        }
        f = fnew;
        q = qnew;
        if change <= tol && !fresh {
            break;
        }
    }
    let pinned = (0..nc).filter(|&c| clamped[c]).collect();
    (f, q, pinned)
}

fn geo_normalize(v: &mut [f64]) {
    let g = (ksum(v.iter().map(|x| x.ln())) / v.len() as f64).exp();
    v.iter_mut().for_each(|x| *x /= g);
}

/// Country map iterated to a tight tolerance.
pub fn eci_plus(x: &[Vec<f64>]) -> Vec<f64> {
    let (nc, np) = (x.len(), x[0].len());
    let mut xc = row_sums(x);
    geo_normalize(&mut xc);
    for _ in 0..200_000 {
        let mut next: Vec<f64> = (0..nc)
            .map(|c| {
                ksum((0..np).filter(|&p| x[c][p] != 0.0).map(|p| {
                    let denom = ksum((0..nc).map(|d| x[d][p] / xc[d]));
                    x[c][p] / denom
                }))
            })
            .collect();
        geo_normalize(&mut next);
        let change = next
            .iter()
            .zip(&xc)
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0, f64::max);
        xc = next;
        if change < 1e-15 {
            break;
        }
    }
    let world = col_sums(x);
    (0..nc)
        .map(|c| xc[c].ln() - ksum((0..np).map(|p| x[c][p] / world[p])).ln())
        .collect()
}

/// Product map iterated to a tight tolerance.
pub fn pci_plus(x: &[Vec<f64>]) -> Vec<f64> {
    let (nc, np) = (x.len(), x[0].len());
    let totals = row_sums(x);
    let mut xp: Vec<f64> = (0..np).map(|p| ksum((0..nc).map(|c| x[c][p] / totals[c]))).collect();
    geo_normalize(&mut xp);
    for _ in 0..200_000 {
        let mut next: Vec<f64> = (0..np)
            .map(|p| {
                ksum((0..nc).filter(|&c| x[c][p] != 0.0).map(|c| {
                    let denom = ksum((0..np).map(|q| x[c][q] / xp[q]));
                    x[c][p] / denom
                }))
            })
            .collect();
        geo_normalize(&mut next);
        let change = next
            .iter()
            .zip(&xp)
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0, f64::max);
        xp = next;
        if change < 1e-15 {
            break;
        }
    }
    let world = col_sums(x);
    (0..np).map(|p| world[p].ln() - xp[p].ln()).collect()
}

/// Explicit-summation cluster sandwich with the G/(G-1)(N-1)/(N-K) factor.
/// `x` is row-major N x K.
pub fn sandwich(x: &[Vec<f64>], resid: &[f64], cluster: &[usize], k_correction: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let k = x[0].len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| ksum((0..n).map(|i| x[i][a] * x[i][b]))).collect())
        .collect();
    let inv = invert(&xtx);
    let groups: std::collections::BTreeSet<usize> = cluster.iter().copied().collect();
    let mut meat = vec![vec![0.0; k]; k];
    for &g in &groups {
        let s: Vec<f64> = (0..k)
            .map(|a| ksum((0..n).filter(|&i| cluster[i] == g).map(|i| x[i][a] * resid[i])))
            .collect();
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    let g = groups.len() as f64;
    let factor = g / (g - 1.0) * (n as f64 - 1.0) / (n as f64 - k_correction as f64);
    let left = matmul(&inv, &meat);
    let v = matmul(&left, &inv);
    v.into_iter()
        .map(|r| r.into_iter().map(|e| e * factor).collect())
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| ksum((0..m).map(|k| a[i][k] * b[k][j]))).collect())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        aug[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// OLS by normal equations; returns coefficients and residuals.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let k = x[0].len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| ksum((0..n).map(|i| x[i][a] * x[i][b]))).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|a| ksum((0..n).map(|i| x[i][a] * y[i]))).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| ksum((0..k).map(|b| inv[a][b] * xty[b]))).collect();
    let resid = (0..n).map(|i| y[i] - ksum((0..k).map(|a| x[i][a] * beta[a]))).collect();
    (beta, resid)
}
