//! Central finite-difference checks of analytic gradients (64-bit).

use rand::Rng;

use super::{seeded_rng, Tensor};

/// Worst relative error seen for one parameter group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub group: usize,
    pub checked: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub step: f64,
    pub rel_tol: f64,
    /// Coordinates probed per group; `None` probes every coordinate.
    pub coords_per_group: Option<usize>,
    /// Random unit directions probed per group.
    pub directions: usize,
    /// Retries of a failing probe, each with a 10× smaller step. A step that
    /// straddles a ReLU or max-pool switch gives a meaningless difference
    /// quotient; a smaller step moves the interval off the switch point.
    pub refinements: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_tol: 1e-6,
            coords_per_group: None,
            directions: 3,
            refinements: 2,
            seed: 0,
        }
    }
}

/// Compares `analytic` against central differences of `loss`.
///
/// A probe passes when `|a − fd| ≤ rel_tol·max(|a|, |fd|) + r`, where
/// `r = 16·ε·max(|L|, 1)/h` is the rounding floor of the difference
/// quotient at step `h`. The reported error is the smallest
/// `|a − fd| / max(|a|, |fd|, r/rel_tol)` over the tried steps.
pub fn check_gradients<M: Clone>(
    model: &M,
    analytic: &[Tensor<f64>],
    params_mut: impl Fn(&mut M) -> Vec<&mut Tensor<f64>>,
    loss: impl Fn(&M) -> f64,
    cfg: &GradCheckConfig,
) -> Vec<GroupCheck> {
    let base = loss(model);
    let floor_at = |h: f64| 16.0 * f64::EPSILON * base.abs().max(1.0) / h;
    let mut rng = seeded_rng(cfg.seed, 7);
    let mut out = Vec::with_capacity(analytic.len());
    for (gi, ga) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        let mut passed = true;
        // Central difference along `dir` (sparse or dense), refined on failure.
        let mut probe = |a: f64, apply: &dyn Fn(&mut Tensor<f64>, f64)| {
            let mut best = f64::INFINITY;
            let mut ok = false;
            let mut h = cfg.step;
            for _ in 0..=cfg.refinements {
                let mut plus = model.clone();
                apply(params_mut(&mut plus)[gi], h);
                let mut minus = model.clone();
                apply(params_mut(&mut minus)[gi], -h);
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let floor = floor_at(h);
                let scale = a.abs().max(fd.abs());
                let diff = (a - fd).abs();
                best = best.min(diff / scale.max(floor / cfg.rel_tol));
                if diff <= cfg.rel_tol * scale + floor {
                    ok = true;
                    break;
                }
                h /= 10.0;
            }
            passed &= ok;
            worst = worst.max(best);
        };
        let coords: Vec<usize> = match cfg.coords_per_group {
            Some(n) if n < ga.len() => (0..n).map(|_| rng.random_range(0..ga.len())).collect(),
            _ => (0..ga.len()).collect(),
        };
        for &idx in &coords {
            probe(ga.data()[idx], &|t: &mut Tensor<f64>, h: f64| t.data_mut()[idx] += h);
            checked += 1;
        }
        for _ in 0..cfg.directions {
            let mut dir: Vec<f64> = (0..ga.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            dir.iter_mut().for_each(|v| *v /= norm);
            let a: f64 = ga.data().iter().zip(&dir).map(|(g, d)| g * d).sum();
            probe(a, &|t: &mut Tensor<f64>, h: f64| {
                for (p, d) in t.data_mut().iter_mut().zip(&dir) {
                    *p += h * d;
                }
            });
            checked += 1;
        }
        out.push(GroupCheck {
            group: gi,
            checked,
            max_rel_error: worst,
            passed,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(m: &mut Vec<Tensor<f64>>) -> Vec<&mut Tensor<f64>> {
        m.iter_mut().collect()
    }

    #[test]
    fn quadratic_passes_and_wrong_gradient_fails() {
        let model = vec![Tensor::from_vec(vec![3], vec![0.5, -1.0, 2.0])];
        let loss = |m: &Vec<Tensor<f64>>| m[0].data().iter().map(|v| v * v).sum::<f64>();
        let good = vec![Tensor::from_vec(vec![3], vec![1.0, -2.0, 4.0])];
        let r = check_gradients(&model, &good, pm, loss, &GradCheckConfig::default());
        assert!(r[0].passed && r[0].max_rel_error < 1e-6);
        let bad = vec![Tensor::from_vec(vec![3], vec![1.0, -2.0, 4.001])];
        assert!(!check_gradients(&model, &bad, pm, loss, &GradCheckConfig::default())[0].passed);
    }

    #[test]
    fn refinement_steps_off_a_kink_but_not_off_a_wrong_gradient() {
        // relu(x) with x 3e-6 above the kink: a 1e-5 step straddles it.
        let model = vec![Tensor::from_vec(vec![1], vec![3e-6])];
        let loss = |m: &Vec<Tensor<f64>>| m[0].data()[0].max(0.0) * 2.0;
        let exact = vec![Tensor::from_vec(vec![1], vec![2.0])];
        let strict = GradCheckConfig {
            refinements: 0,
            directions: 0,
            ..GradCheckConfig::default()
        };
        assert!(!check_gradients(&model, &exact, pm, loss, &strict)[0].passed);
        let refined = GradCheckConfig {
            directions: 0,
            ..GradCheckConfig::default()
        };
        assert!(check_gradients(&model, &exact, pm, loss, &refined)[0].passed);
        let wrong = vec![Tensor::from_vec(vec![1], vec![1.9])];
        assert!(!check_gradients(&model, &wrong, pm, loss, &refined)[0].passed);
    }
}
