//! Univariate monotone-density MLE via the least concave majorant.
//!
//! For d = 1 the likelihood maximizer over non-increasing densities is the
//! left derivative of the least concave majorant of the empirical CDF.
//! This is computed directly from the order statistics with a monotone
//!  hull scan, independent of the mixture solver, and serves as its oracle.

use crate::error::{Error, Result};

/// Fitted density values at the data points, in input order.
pub fn grenander_1d(data: &[f64]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("grenander needs data"));
    }
    for (index, &value) in data.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::BadCoordinate { index, value });
        }
    }
    let n = data.len();

    // ECDF knots at the sorted unique values, plus the origin.
    let mut sorted: Vec<f64> = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    let mut seen = 0usize;
    let mut k = 0usize;
    while k < n {
        let v = sorted[k];
        let mut count = 0usize;
        while k < n && sorted[k] == v {
            count += 1;
            k += 1;
        }
        seen += count;
        xs.push(v);
        ys.push(seen as f64 / n as f64);
    }

    // Upper concave hull of the knots: slopes strictly decreasing.
    let slope = |a: usize, b: usize, hull: &[usize]| -> f64 {
        let (i, j) = (hull[a], hull[b]);
        (ys[j] - ys[i]) / (xs[j] - xs[i])
    };
    let mut hull: Vec<usize> = vec![0];
    for i in 1..xs.len() {
        hull.push(i);
        while hull.len() >= 3 {
            let m = hull.len();
            let s_prev = slope(m - 3, m - 2, &hull);
            let s_cur = slope(m - 2, m - 1, &hull);
            if s_prev <= s_cur {
                hull.remove(m - 2);
            } else {
                break;
            }
        }
    }

    // Left derivative at each unique value: the slope of the hull segment
    // whose half-open interval (prev, cur] contains it.
    let mut slope_at = vec![0.0; xs.len()];
    let mut seg = 1usize;
    for i in 1..xs.len() {
        if xs[i] > xs[hull[seg]] {
            seg += 1;
        }
        slope_at[i] = slope(seg - 1, seg, &hull);
    }

    // Map back to input order.
    let mut out = Vec::with_capacity(n);
    for &v in data {
        let idx = xs
            .binary_search_by(|c| c.partial_cmp(&v).expect("finite"))
            .expect("input value is a knot");
        out.push(slope_at[idx]);
    }
    Ok(out)
}
