use serde::{Deserialize, Serialize};

use super::Hyperparams;

/// `[bias, w_distance, w_effort_angle]` over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: [f64; 3],
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logit(w: &[f64; 3], x: [f64; 2]) -> f64 {
    w[0] + w[1] * x[0] + w[2] * x[1]
}

/// Mean log-loss plus (l2/2)·(w₁² + w₂²). The bias is not penalized.
pub fn log_loss(w: &[f64; 3], points: &[[f64; 2]], labels: &[u8], l2: f64) -> f64 {
    let n = points.len() as f64;
    let data: f64 = points
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = logit(w, *x);
            softplus(z) - f64::from(y) * z
        })
        .sum();
    data / n + 0.5 * l2 * (w[1] * w[1] + w[2] * w[2])
}

/// Analytic gradient of [`log_loss`].
pub fn log_loss_gradient(w: &[f64; 3], points: &[[f64; 2]], labels: &[u8], l2: f64) -> [f64; 3] {
    let n = points.len() as f64;
    let mut g = [0.0; 3];
    for (x, &y) in points.iter().zip(labels) {
        let r = sigmoid(logit(w, *x)) - f64::from(y);
        g[0] += r;
        g[1] += r * x[0];
        g[2] += r * x[1];
    }
    [g[0] / n, g[1] / n + l2 * w[1], g[2] / n + l2 * w[2]]
}

impl LogisticModel {
    /// Full-batch gradient descent from zero weights.
    pub fn fit(points: &[[f64; 2]], labels: &[u8], hp: &Hyperparams) -> Self {
        let mut w = [0.0; 3];
        for _ in 0..hp.max_epochs {
            let g = log_loss_gradient(&w, points, labels, hp.l2);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < hp.gradient_tolerance {
                break;
            }
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= hp.learning_rate * gi;
            }
        }
        LogisticModel { weights: w }
    }

    pub fn score(&self, z: [f64; 2]) -> f64 {
        sigmoid(logit(&self.weights, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_softplus_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!(softplus(800.0).is_finite());
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn descent_lowers_the_loss() {
        let points: Vec<[f64; 2]> = (0..60).map(|i| [i as f64 / 30.0 - 1.0, ((i * 7) % 11) as f64 / 5.0 - 1.0]).collect();
        let labels: Vec<u8> = points.iter().map(|p| u8::from(p[0] + 0.3 * p[1] < 0.1)).collect();
        let hp = Hyperparams::default();
        let model = LogisticModel::fit(&points, &labels, &hp);
        let start = log_loss(&[0.0; 3], &points, &labels, hp.l2);
        let end = log_loss(&model.weights, &points, &labels, hp.l2);
        assert!(end < 0.5 * start, "{end} vs {start}");
        assert!(model.weights[1] < 0.0);
    }
}
