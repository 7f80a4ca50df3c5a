//! Fixed-step Runge–Kutta integration of the learned field in the embedded
//! space, sampling back onto the manifold, and a Riemannian Runge–Kutta
//! reference integrator that works directly on matrices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{ConditionalGaussianSource, Embedding, VectorFieldModel};
use crate::geometry::{
    phi, phi_inv, pullback_exp, pullback_pt_tangent, tangent_from_embedded, EmbeddedVector, ManifoldMatrix, TangentSym,
};
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_STEPS: usize = 100;
/// Trajectories whose sup-norm exceeds this are reported as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Midpoint,
    #[default]
    Rk4,
}

/// Explicit Butcher tableau: `a` strictly lower triangular, weights `b`, nodes `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Scheme {
    pub fn tableau(self) -> Tableau {
        match self {
            Scheme::Euler => Tableau {
                a: vec![vec![]],
                b: vec![1.0],
                c: vec![0.0],
            },
            Scheme::Midpoint => Tableau {
                a: vec![vec![], vec![0.5]],
                b: vec![0.0, 1.0],
                c: vec![0.0, 0.5],
            },
            Scheme::Rk4 => Tableau {
                a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
                b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
                c: vec![0.0, 0.5, 0.5, 1.0],
            },
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Midpoint => "midpoint",
            Scheme::Rk4 => "rk4",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "midpoint" => Ok(Scheme::Midpoint),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub steps: usize,
}

impl IntegratorSpec {
    pub fn new(scheme: Scheme, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("integration needs at least one step"));
        }
        Ok(IntegratorSpec { scheme, steps })
    }

    pub fn step_size(&self) -> f64 {
        1.0 / self.steps as f64
    }
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            scheme: Scheme::Rk4,
            steps: DEFAULT_STEPS,
        }
    }
}

fn check_state(z: &[f64], step: usize) -> Result<()> {
    if z.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(Error::DivergedTrajectory { step })
    }
}

/// All iterates `z_0, …, z_L` of the scheme on `[0, 1]` with `h = 1/L`.
pub fn integrate_path<F>(field: F, z0: &[f64], spec: IntegratorSpec) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    if spec.steps == 0 {
        return Err(Error::invalid("integration needs at least one step"));
    }
    check_state(z0, 0)?;
    let tab = spec.scheme.tableau();
    let h = spec.step_size();
    let mut path = Vec::with_capacity(spec.steps + 1);
    path.push(z0.to_vec());
    let mut z = z0.to_vec();
    for step in 0..spec.steps {
        let t = step as f64 * h;
        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(tab.b.len());
        for (i, row) in tab.a.iter().enumerate() {
            let mut point = z.clone();
            for (a, k) in row.iter().zip(&stages) {
                if *a != 0.0 {
                    point.iter_mut().zip(k).for_each(|(p, kv)| *p += h * a * kv);
                }
            }
            let k = field(t + tab.c[i] * h, &point)?;
            if k.len() != z.len() {
                return Err(Error::invalid("field returned a vector of the wrong length"));
            }
            check_state(&k, step)?;
            stages.push(k);
        }
        for (b, k) in tab.b.iter().zip(&stages) {
            z.iter_mut().zip(k).for_each(|(zv, kv)| *zv += h * b * kv);
        }
        check_state(&z, step)?;
        path.push(z.clone());
    }
    Ok(path)
}

/// Final iterate `z_L` for a class-conditional field.
pub fn integrate<F>(field: F, z0: &EmbeddedVector, label: i64, spec: IntegratorSpec) -> Result<EmbeddedVector>
where
    F: Fn(f64, &[f64], i64) -> Result<Vec<f64>>,
{
    let mut path = integrate_path(|t, z| field(t, z, label), z0.values(), spec)?;
    z0.with_values(path.pop().expect("path holds z0"))
}

/// Integrated embedded samples, one per entry of `labels`.
///
/// Sample `i` draws its source point from RNG stream `i` of `seed`, so the
/// result does not depend on thread scheduling.
pub fn sample_embedded(
    model: &VectorFieldModel,
    source: &ConditionalGaussianSource,
    labels: &[i64],
    spec: IntegratorSpec,
    seed: u64,
) -> Result<Vec<EmbeddedVector>> {
    model.check_source(source)?;
    labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut r = rng::sample_stream(seed, i);
            let z0 = EmbeddedVector::new(model.manifold, model.dim_matrix, source.class(label)?.sample(&mut r))?;
            integrate(|t, z, y| model.velocity(t, z, y), &z0, label, spec)
        })
        .collect()
}

/// Manifold samples for the given labels: source draw, integration, `φ⁻¹`.
pub fn sample_labels(
    model: &VectorFieldModel,
    source: &ConditionalGaussianSource,
    labels: &[i64],
    spec: IntegratorSpec,
    seed: u64,
) -> Result<Vec<ManifoldMatrix>> {
    if model.embedding != Embedding::Diffeo {
        return Err(Error::invalid("manifold sampling needs a diffeomorphic embedding"));
    }
    sample_embedded(model, source, labels, spec, seed)?
        .par_iter()
        .map(phi_inv)
        .collect()
}

/// `n` manifold samples of class `label`.
pub fn sample_manifold(
    model: &VectorFieldModel,
    source: &ConditionalGaussianSource,
    label: i64,
    n: usize,
    spec: IntegratorSpec,
    seed: u64,
) -> Result<Vec<ManifoldMatrix>> {
    sample_labels(model, source, &vec![label; n], spec, seed)
}

/// Riemannian Runge–Kutta iterates `x_0, …, x_L` of the model's pulled-back field.
pub fn riemannian_rk_oracle(
    model: &VectorFieldModel,
    x0: &ManifoldMatrix,
    label: i64,
    spec: IntegratorSpec,
) -> Result<Vec<ManifoldMatrix>> {
    if model.embedding != Embedding::Diffeo {
        return Err(Error::invalid("the Riemannian oracle needs a diffeomorphic embedding"));
    }
    if x0.manifold() != model.manifold || x0.dim() != model.dim_matrix {
        return Err(Error::invalid("starting point does not live on the model's manifold"));
    }
    riemannian_rk(|t, z| model.velocity_embedded(t, z, label), x0, spec)
}

/// Runs an explicit scheme on the manifold for an embedded-space field.
///
/// Stage `i` sits at `exp_{x_ℓ}(h Σ_j a_ij k_j)`, its velocity is
/// `(Dφ)⁻¹ u^E` there, transported back to `x_ℓ`; the step ends at
/// `exp_{x_ℓ}(h Σ_i b_i k_i)`.
pub fn riemannian_rk<F>(field: F, x0: &ManifoldMatrix, spec: IntegratorSpec) -> Result<Vec<ManifoldMatrix>>
where
    F: Fn(f64, &EmbeddedVector) -> Result<EmbeddedVector>,
{
    if spec.steps == 0 {
        return Err(Error::invalid("integration needs at least one step"));
    }
    let tab = spec.scheme.tableau();
    let h = spec.step_size();
    let mut iterates = Vec::with_capacity(spec.steps + 1);
    iterates.push(x0.clone());
    let mut x = x0.clone();
    for step in 0..spec.steps {
        let t = step as f64 * h;
        let mut stages: Vec<TangentSym> = Vec::with_capacity(tab.b.len());
        for (i, row) in tab.a.iter().enumerate() {
            let k = if row.iter().all(|&a| a == 0.0) {
                tangent_from_embedded(&x, &field(t + tab.c[i] * h, &phi(&x)?)?)?
            } else {
                let mut xi = TangentSym::zero(x.clone());
                for (a, k) in row.iter().zip(&stages) {
                    xi = xi.add_scaled(k, h * a);
                }
                let point = pullback_exp(&x, &xi)?;
                let u = field(t + tab.c[i] * h, &phi(&point)?)?;
                pullback_pt_tangent(&point, &x, &tangent_from_embedded(&point, &u)?)?
            };
            stages.push(k);
        }
        let mut xi = TangentSym::zero(x.clone());
        for (b, k) in tab.b.iter().zip(&stages) {
            xi = xi.add_scaled(k, h * b);
        }
        x = pullback_exp(&x, &xi).map_err(|e| match e {
            Error::InvalidInput(_) | Error::StepFailure => e,
            _ => Error::DivergedTrajectory { step },
        })?;
        iterates.push(x.clone());
    }
    Ok(iterates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::ClassGaussian;
    use crate::geometry::{Manifold, SymMatrix};
    use crate::nn::MlpParams;

    fn all_schemes() -> [Scheme; 3] {
        [Scheme::Euler, Scheme::Midpoint, Scheme::Rk4]
    }

    #[test]
    fn zero_and_constant_fields() {
        let z0 = [0.3, -1.0];
        for s in all_schemes() {
            let spec = IntegratorSpec::new(s, 7).unwrap();
            let path = integrate_path(|_, z| Ok(vec![0.0; z.len()]), &z0, spec).unwrap();
            assert_eq!(path.last().unwrap(), &z0.to_vec());
            let end = integrate_path(|_, _| Ok(vec![2.0, -0.5]), &z0, spec)
                .unwrap()
                .pop()
                .unwrap();
            assert!((end[0] - 2.3).abs() < 1e-14 && (end[1] + 1.5).abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn exponential_growth() {
        let spec = IntegratorSpec::new(Scheme::Rk4, 100).unwrap();
        let end = integrate_path(|_, z| Ok(z.to_vec()), &[1.0, -2.0], spec)
            .unwrap()
            .pop()
            .unwrap();
        let e = std::f64::consts::E;
        assert!((end[0] - e).abs() < 1e-8 * e);
        assert!((end[1] + 2.0 * e).abs() < 2e-8 * e);
    }

    #[test]
    fn time_dependent_field_orders() {
        // z' = 3t², z(1) = 1 exactly for rk4 and midpoint's error is O(h²).
        let f = |t: f64, _: &[f64]| Ok(vec![3.0 * t * t]);
        let rk4 = integrate_path(f, &[0.0], IntegratorSpec::new(Scheme::Rk4, 3).unwrap()).unwrap();
        assert!((rk4[3][0] - 1.0).abs() < 1e-14);
        let mid = integrate_path(f, &[0.0], IntegratorSpec::new(Scheme::Midpoint, 4).unwrap()).unwrap();
        assert!((mid[4][0] - (1.0 - 1.0 / 64.0)).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let spec = IntegratorSpec::new(Scheme::Euler, 10).unwrap();
        let err = integrate_path(|_, z| Ok(vec![1e7 * (1.0 + z[0].abs())]), &[0.0], spec).unwrap_err();
        assert!(matches!(err, Error::DivergedTrajectory { step: 0 }));
        let err = integrate_path(|t, _| Ok(vec![if t > 0.45 { f64::NAN } else { 0.0 }]), &[0.0], spec).unwrap_err();
        assert!(matches!(err, Error::DivergedTrajectory { step: 5 }));
        assert!(IntegratorSpec::new(Scheme::Rk4, 0).is_err());
    }

    fn constant_model(manifold: Manifold, d: usize, velocity: &[f64]) -> VectorFieldModel {
        let m = manifold.embed_dim(d);
        let mut params = MlpParams::zeros(&[m + 2, m]).unwrap();
        let (_, b) = params.layer_range(0);
        params.values_mut()[b].copy_from_slice(velocity);
        VectorFieldModel::new(params, manifold, d, vec![0], Embedding::Diffeo, 0).unwrap()
    }

    fn point_source(manifold: Manifold, d: usize, mean: Vec<f64>) -> ConditionalGaussianSource {
        let m = mean.len();
        let class = ClassGaussian {
            label: 0,
            mean,
            factor: vec![0.0; m * m],
            count: 1,
        };
        ConditionalGaussianSource::new(manifold, d, vec![class]).unwrap()
    }

    #[test]
    fn constant_field_transports_point_mass() {
        let (mu0, mu1) = (vec![0.1, -0.2, 0.3], vec![0.9, 0.4, -0.6]);
        let delta: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
        let model = constant_model(Manifold::Corr, 3, &delta);
        let source = point_source(Manifold::Corr, 3, mu0);
        let target = phi_inv(&EmbeddedVector::new(Manifold::Corr, 3, mu1).unwrap()).unwrap();
        let out = sample_manifold(&model, &source, 0, 5, IntegratorSpec::default(), 1).unwrap();
        for x in out {
            assert!(x.as_sym().dist_frobenius(target.as_sym()) < 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_checks_class() {
        let model = VectorFieldModel::init(Manifold::Spd, 2, vec![0], &[4], Embedding::Diffeo, 2).unwrap();
        let mut source = point_source(Manifold::Spd, 2, vec![0.0; 3]);
        source.classes[0].factor = vec![0.5, 0.0, 0.0, 0.1, 0.4, 0.0, 0.0, 0.2, 0.3];
        let spec = IntegratorSpec::new(Scheme::Midpoint, 5).unwrap();
        let a = sample_manifold(&model, &source, 0, 8, spec, 3).unwrap();
        assert_eq!(a, sample_manifold(&model, &source, 0, 8, spec, 3).unwrap());
        assert_ne!(a[0], a[1]);
        assert!(matches!(
            sample_manifold(&model, &source, 1, 2, spec, 3),
            Err(Error::MissingClass(1))
        ));
    }

    #[test]
    fn riemannian_zero_field_is_stationary_and_euler_is_exp() {
        let x0 = phi_inv(&EmbeddedVector::new(Manifold::Spd, 2, vec![0.2, 0.1, -0.3]).unwrap()).unwrap();
        let zero = constant_model(Manifold::Spd, 2, &[0.0; 3]);
        let iterates = riemannian_rk_oracle(&zero, &x0, 0, IntegratorSpec::new(Scheme::Rk4, 3).unwrap()).unwrap();
        assert_eq!(iterates.len(), 4);
        for x in &iterates {
            assert!(x.as_sym().dist_frobenius(x0.as_sym()) < 1e-12);
        }

        let model = constant_model(Manifold::Spd, 2, &[0.5, -0.4, 0.3]);
        let spec = IntegratorSpec::new(Scheme::Euler, 1).unwrap();
        let one = riemannian_rk_oracle(&model, &x0, 0, spec).unwrap();
        let u = model.velocity_embedded(0.0, &phi(&x0).unwrap(), 0).unwrap();
        let expected = pullback_exp(&x0, &tangent_from_embedded(&x0, &u).unwrap()).unwrap();
        assert!(one[1].as_sym().dist_frobenius(expected.as_sym()) < 1e-12);
    }

    #[test]
    fn riemannian_iterates_track_euclidean_ones() {
        let model = VectorFieldModel::init(Manifold::Corr, 3, vec![0], &[8], Embedding::Diffeo, 5).unwrap();
        let x0 = ManifoldMatrix::new(
            Manifold::Corr,
            SymMatrix::new(3, vec![1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0]).unwrap(),
        )
        .unwrap();
        let spec = IntegratorSpec::new(Scheme::Midpoint, 4).unwrap();
        let riem = riemannian_rk_oracle(&model, &x0, 0, spec).unwrap();
        let eucl = integrate_path(|t, z| model.velocity(t, z, 0), phi(&x0).unwrap().values(), spec).unwrap();
        for (x, z) in riem.iter().zip(&eucl) {
            let back = phi_inv(&EmbeddedVector::new(Manifold::Corr, 3, z.clone()).unwrap()).unwrap();
            assert!(x.as_sym().dist_frobenius(back.as_sym()) < 1e-5);
        }
    }
}
