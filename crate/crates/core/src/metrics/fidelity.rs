use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// α-precision and β-recall curves with their scalar summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub alphas: Vec<f64>,
    pub precision_curve: Vec<f64>,
    pub recall_curve: Vec<f64>,
    pub alpha_precision: f64,
    pub beta_recall: f64,
    pub ab_f1: f64,
}

/// `{0.05, 0.10, …, 0.95}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

fn check_set(points: &[Vec<f64>], what: &str) -> Result<usize> {
    let dim = points
        .first()
        .ok_or_else(|| Error::invalid(format!("{what} set is empty")))?
        .len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid(format!("{what} points differ in dimension")));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} set has non-finite coordinates")));
    }
    Ok(dim)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Fraction of `probe` inside the α-quantile balls of `support`, per α.
///
/// The ball is centred at the empirical mean of `support`; its radius is the
/// `⌈α·n⌉`-th smallest support-to-centre distance.
fn coverage_curve(support: &[Vec<f64>], probe: &[Vec<f64>], alphas: &[f64]) -> Vec<f64> {
    let dim = support[0].len();
    let n = support.len();
    let centre: Vec<f64> = (0..dim)
        .map(|j| support.iter().map(|p| p[j]).sum::<f64>() / n as f64)
        .collect();
    let mut radii: Vec<f64> = support.iter().map(|p| dist(p, &centre)).collect();
    radii.sort_by(f64::total_cmp);
    let mut probe_d: Vec<f64> = probe.iter().map(|p| dist(p, &centre)).collect();
    probe_d.sort_by(f64::total_cmp);
    alphas
        .iter()
        .map(|&a| {
            let k = ((a * n as f64).ceil() as usize).clamp(1, n);
            let r = radii[k - 1];
            probe_d.partition_point(|&d| d <= r) as f64 / probe.len() as f64
        })
        .collect()
}

fn summary(curve: &[f64], alphas: &[f64]) -> f64 {
    let dev = curve.iter().zip(alphas).map(|(c, a)| (c - a).abs()).sum::<f64>() / alphas.len() as f64;
    (1.0 - 2.0 * dev).clamp(0.0, 1.0)
}

/// Harmonic mean of precision and recall summaries; zero when both are zero.
pub fn ab_f1(p: f64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!(
            "precision {p} and recall {r} must lie in [0, 1]"
        )));
    }
    if p + r == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * p * r / (p + r))
}

pub fn precision_recall_curves(real: &[Vec<f64>], gen: &[Vec<f64>], alphas: &[f64]) -> Result<FidelityReport> {
    let d_real = check_set(real, "real")?;
    let d_gen = check_set(gen, "generated")?;
    if d_real != d_gen {
        return Err(Error::invalid(format!(
            "real dimension {d_real} differs from generated {d_gen}"
        )));
    }
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
        return Err(Error::invalid("alpha grid must be non-empty with values in (0, 1]"));
    }
    let precision_curve = coverage_curve(real, gen, alphas);
    let recall_curve = coverage_curve(gen, real, alphas);
    let alpha_precision = summary(&precision_curve, alphas);
    let beta_recall = summary(&recall_curve, alphas);
    Ok(FidelityReport {
        alphas: alphas.to_vec(),
        ab_f1: ab_f1(alpha_precision, beta_recall)?,
        precision_curve,
        recall_curve,
        alpha_precision,
        beta_recall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, dim: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, 0);
        (0..n)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        shift + {
                            let e: f64 = StandardNormal.sample(&mut r);
                            e
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn harmonic_mean_cases() {
        assert!((ab_f1(0.3, 0.3).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(ab_f1(0.0, 0.8).unwrap(), 0.0);
        assert_eq!(ab_f1(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(format!("{:.2}", ab_f1(0.77, 0.48).unwrap()), "0.59");
        assert!(ab_f1(1.2, 0.5).is_err());
    }

    #[test]
    fn identical_distributions_track_the_diagonal() {
        let all = gaussian(4000, 3, 0.0, 1);
        let (a, b) = all.split_at(2000);
        let rep = precision_recall_curves(a, b, &default_alpha_grid()).unwrap();
        for ((p, r), alpha) in rep.precision_curve.iter().zip(&rep.recall_curve).zip(&rep.alphas) {
            assert!((p - alpha).abs() <= 0.1 && (r - alpha).abs() <= 0.1);
        }
        assert!(rep.ab_f1 > 0.8);
    }

    #[test]
    fn displaced_generator_has_no_precision() {
        let real = gaussian(300, 2, 0.0, 2);
        let gen = gaussian(300, 2, 100.0, 3);
        let rep = precision_recall_curves(&real, &gen, &default_alpha_grid()).unwrap();
        assert!(rep.alpha_precision < 1e-12);
        assert_eq!(rep.ab_f1, 0.0);
    }

    #[test]
    fn brute_force_membership() {
        let real = gaussian(10, 2, 0.0, 4);
        let gen = gaussian(10, 2, 0.5, 5);
        let alphas = default_alpha_grid();
        let rep = precision_recall_curves(&real, &gen, &alphas).unwrap();
        let centre = [
            real.iter().map(|p| p[0]).sum::<f64>() / 10.0,
            real.iter().map(|p| p[1]).sum::<f64>() / 10.0,
        ];
        for (k, &a) in alphas.iter().enumerate() {
            // Smallest radius covering at least α·n real points.
            let rd: Vec<f64> = real.iter().map(|p| dist(p, &centre)).collect();
            let need = (a * 10.0).ceil() as usize;
            let r = rd
                .iter()
                .copied()
                .filter(|&c| rd.iter().filter(|&&x| x <= c).count() >= need)
                .fold(f64::INFINITY, f64::min);
            let inside = gen.iter().filter(|p| dist(p, &centre) <= r).count();
            assert_eq!(rep.precision_curve[k], inside as f64 / 10.0);
        }
    }

    #[test]
    fn swap_symmetry_and_errors() {
        let a = gaussian(50, 2, 0.0, 6);
        let b = gaussian(70, 2, 0.3, 7);
        let g = default_alpha_grid();
        let ab = precision_recall_curves(&a, &b, &g).unwrap();
        let ba = precision_recall_curves(&b, &a, &g).unwrap();
        assert_eq!(ab.precision_curve, ba.recall_curve);
        assert_eq!(ab.recall_curve, ba.precision_curve);
        assert!(precision_recall_curves(&a, &gaussian(5, 3, 0.0, 8), &g).is_err());
        assert!(precision_recall_curves(&[], &a, &g).is_err());
    }
}
