//! Oracle-approximating shrinkage (OAS) covariance estimation.

use crate::geometry::{CorrMatrix, SpdMatrix, SymMatrix};
use crate::{Error, Result};

fn check_series(x: &[Vec<f64>]) -> Result<(usize, usize)> {
    let t = x.len();
    let d = x.first().map_or(0, Vec::len);
    if t < 2 || d == 0 {
        return Err(Error::invalid("need at least 2 time points and 1 channel"));
    }
    if x.iter().any(|row| row.len() != d) {
        return Err(Error::invalid("ragged time series"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite entry in time series"));
    }
    Ok((t, d))
}

/// Mean-removed sample covariance with divisor `T`.
fn sample_covariance(x: &[Vec<f64>], t: usize, d: usize) -> Vec<f64> {
    let mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / t as f64).collect();
    let mut s = vec![0.0; d * d];
    for row in x {
        for a in 0..d {
            let da = row[a] - mean[a];
            for b in 0..=a {
                s[a * d + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = s[a * d + b] / t as f64;
            s[a * d + b] = v;
            s[b * d + a] = v;
        }
    }
    s
}

/// Shrinkage coefficient for sample covariance `s` (`d×d`, row-major) from `t` samples.
///
/// `ρ = min(1, [(1−2/d)·tr(S²) + tr²(S)] / [(T+1−2/d)·(tr(S²) − tr²(S)/d)])`,
/// taken as 1 when the denominator vanishes (S already a scaled identity).
pub fn oas_shrinkage(s: &[f64], d: usize, t: usize) -> f64 {
    let df = d as f64;
    let tr: f64 = (0..d).map(|i| s[i * d + i]).sum();
    let tr_s2: f64 = s.iter().map(|v| v * v).sum();
    let num = (1.0 - 2.0 / df) * tr_s2 + tr * tr;
    let den = (t as f64 + 1.0 - 2.0 / df) * (tr_s2 - tr * tr / df);
    if !(den > 1e-14 * tr_s2.max(f64::MIN_POSITIVE)) {
        return 1.0;
    }
    (num / den).clamp(0.0, 1.0)
}

fn oas_from(x: &[Vec<f64>], t: usize, d: usize) -> SymMatrix {
    let s = sample_covariance(x, t, d);
    let rho = oas_shrinkage(&s, d, t);
    let mu = (0..d).map(|i| s[i * d + i]).sum::<f64>() / d as f64;
    let mut out: Vec<f64> = s.iter().map(|v| (1.0 - rho) * v).collect();
    for i in 0..d {
        out[i * d + i] += rho * mu;
    }
    SymMatrix::from_symmetric_unchecked(d, out)
}

/// OAS covariance of a `T×d` series given as `T` rows of `d` channels.
pub fn oas_covariance(x: &[Vec<f64>]) -> Result<SpdMatrix> {
    let (t, d) = check_series(x)?;
    SpdMatrix::new(oas_from(x, t, d))
}

/// Z-scores each channel, applies OAS, and rescales to unit diagonal.
pub fn corr_from_timeseries(x: &[Vec<f64>]) -> Result<CorrMatrix> {
    let (t, d) = check_series(x)?;
    let mut z: Vec<Vec<f64>> = x.to_vec();
    for j in 0..d {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / t as f64;
        let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / t as f64;
        let scale = mean.abs().max(1.0);
        if !(var.sqrt() > 1e-12 * scale) {
            return Err(Error::DegenerateChannel(j));
        }
        let sd = var.sqrt();
        for row in &mut z {
            row[j] = (row[j] - mean) / sd;
        }
    }
    CorrMatrix::from_sym(oas_from(&z, t, d).normalize_unit_diag()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_series(t: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..t)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect()
    }

    #[test]
    fn consistent_for_white_noise() {
        let c = oas_covariance(&gaussian_series(100_000, 4, 1)).unwrap();
        assert!(c.as_sym().dist_frobenius(&SymMatrix::identity(4)) < 0.02);
    }

    #[test]
    fn rank_one_sample_covariance_shrinks_by_closed_form() {
        // Two time points give a rank-one S, for which tr(S²) = tr²(S) and
        // ρ = (2 − 2/d) / ((T + 1 − 2/d)(1 − 1/d)) = 1.8 / 2.52 at d = 10.
        let x = gaussian_series(2, 10, 2);
        let (t, d) = check_series(&x).unwrap();
        let s = sample_covariance(&x, t, d);
        assert!((oas_shrinkage(&s, d, t) - 1.8 / 2.52).abs() < 1e-12);
        let c = oas_covariance(&x).unwrap();
        assert!(c.as_sym().eig().unwrap().min() > 0.0);
    }

    #[test]
    fn scaled_identity_gets_full_shrinkage() {
        let s = [2.0, 0.0, 0.0, 2.0];
        assert_eq!(oas_shrinkage(&s, 2, 10), 1.0);
    }

    #[test]
    fn corr_has_exact_unit_diagonal() {
        let mut x = gaussian_series(500, 5, 3);
        for row in &mut x {
            row[1] = 3.0 * row[0] + 0.1 * row[1] + 7.0;
        }
        let c = corr_from_timeseries(&x).unwrap();
        assert!(c.as_sym().diag().iter().all(|&v| v == 1.0));
        assert!(c.as_sym().get(0, 1) > 0.9);
    }

    #[test]
    fn constant_channel_is_degenerate() {
        let mut x = gaussian_series(20, 3, 4);
        for row in &mut x {
            row[2] = 5.0;
        }
        assert!(matches!(corr_from_timeseries(&x), Err(Error::DegenerateChannel(2))));
        assert!(oas_covariance(&x).is_ok());
    }
}
