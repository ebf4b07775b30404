//! Integrated Gradients with a midpoint Riemann sum.

use super::AttributionError;

/// A scalar function of a list of token vectors with an exact gradient.
pub trait Differentiable {
    fn value(&self, input: &[Vec<f64>]) -> f64;
    /// Same shape as `input`.
    fn gradient(&self, input: &[Vec<f64>]) -> Vec<Vec<f64>>;
}

/// `F(x) = bias + Σ w_ij x_ij`; weights have the input's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: f64,
}

impl Differentiable for LinearModel {
    fn value(&self, input: &[Vec<f64>]) -> f64 {
        self.bias + self.weights.iter().zip(input).flat_map(|(w, x)| w.iter().zip(x).map(|(a, b)| a * b)).sum::<f64>()
    }

    fn gradient(&self, _input: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.weights.clone()
    }
}

fn same_shape(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len())
}

/// `IG_ij = (x_ij - x'_ij) * mean_k ∂F/∂x_ij (x' + α_k (x - x'))` with
/// `α_k = (k + 1/2) / steps`. `baseline = None` means all zeros.
pub fn integrated_gradients<M: Differentiable + ?Sized>(
    model: &M,
    input: &[Vec<f64>],
    baseline: Option<&[Vec<f64>]>,
    steps: usize,
) -> Result<Vec<Vec<f64>>, AttributionError> {
    if steps == 0 {
        return Err(AttributionError::NoSteps);
    }
    let zeros: Vec<Vec<f64>>;
    let base = match baseline {
        Some(b) => b,
        None => {
            zeros = input.iter().map(|r| vec![0.0; r.len()]).collect();
            &zeros
        }
    };
    if !same_shape(input, base) {
        return Err(AttributionError::Shape("input and baseline differ in shape".into()));
    }

    let delta: Vec<Vec<f64>> = input.iter().zip(base).map(|(x, b)| x.iter().zip(b).map(|(x, b)| x - b).collect()).collect();
    let mut acc: Vec<Vec<f64>> = input.iter().map(|r| vec![0.0; r.len()]).collect();
    let mut point = base.to_vec();
    for k in 0..steps {
        let alpha = (k as f64 + 0.5) / steps as f64;
        for ((p, b), d) in point.iter_mut().zip(base).zip(&delta) {
            for ((p, b), d) in p.iter_mut().zip(b).zip(d) {
                *p = b + alpha * d;
            }
        }
        let g = model.gradient(&point);
        if !same_shape(&g, input) {
            return Err(AttributionError::Shape("model gradient differs in shape from input".into()));
        }
        for (a, g) in acc.iter_mut().zip(&g) {
            a.iter_mut().zip(g).for_each(|(a, g)| *a += g);
        }
    }
    for (a, d) in acc.iter_mut().zip(&delta) {
        a.iter_mut().zip(d).for_each(|(a, d)| *a = *a / steps as f64 * d);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_closed_form() {
        let m = LinearModel { weights: vec![vec![2.0, 3.0]], bias: 0.0 };
        for steps in [1, 2, 7, 50] {
            let ig = integrated_gradients(&m, &[vec![1.0, 1.0]], None, steps).unwrap();
            assert_eq!(ig, vec![vec![2.0, 3.0]]);
        }
    }

    #[test]
    fn input_equals_baseline() {
        let m = LinearModel { weights: vec![vec![2.0, -1.0]], bias: 1.0 };
        let x = vec![vec![0.3, 0.4]];
        let ig = integrated_gradients(&m, &x, Some(&x), 10).unwrap();
        assert!(ig[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_and_steps_errors() {
        let m = LinearModel { weights: vec![vec![1.0]], bias: 0.0 };
        assert_eq!(integrated_gradients(&m, &[vec![1.0]], None, 0), Err(AttributionError::NoSteps));
        assert!(matches!(integrated_gradients(&m, &[vec![1.0]], Some(&[vec![1.0, 2.0]]), 3), Err(AttributionError::Shape(_))));
    }
}
