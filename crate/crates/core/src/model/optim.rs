use serde::{Deserialize, Serialize};

/// AdaMax hyperparameters; defaults are the optimizer's canonical ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaMaxConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdaMaxConfig {
    fn default() -> Self {
        Self {
            lr: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdaMaxConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(format!("step size must be positive, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return Err(format!("epsilon must be positive, got {}", self.eps));
        }
        Ok(())
    }
}

/// First moments `m`, infinity norms `u` and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaMaxState {
    pub m: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdaMaxState {
    pub fn new<'a>(shapes: impl IntoIterator<Item = &'a Vec<f64>>) -> Self {
        let m: Vec<Vec<f64>> = shapes.into_iter().map(|p| vec![0.0; p.len()]).collect();
        Self { u: m.clone(), m, t: 0 }
    }
}

/// One update: m ← β₁m + (1−β₁)g; u ← max(β₂u, |g|); θ ← θ − α/(1−β₁ᵗ) · m/(u+ε).
pub fn adamax_step(params: &mut [&mut Vec<f64>], grads: &[Vec<f64>], state: &mut AdaMaxState, cfg: &AdaMaxConfig) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient tensor count");
    assert_eq!(params.len(), state.m.len(), "parameter/state tensor count");
    state.t += 1;
    let step = cfg.lr / (1.0 - cfg.beta1.powi(state.t.min(i32::MAX as u64) as i32));
    for (((p, g), m), u) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.u) {
        assert_eq!(p.len(), g.len(), "tensor shape");
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            u[i] = (cfg.beta2 * u[i]).max(g[i].abs());
            p[i] -= step * m[i] / (u[i] + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_hand_computation() {
        let mut w = vec![1.0];
        let mut st = AdaMaxState::new([&w]);
        adamax_step(&mut [&mut w], &[vec![0.5]], &mut st, &AdaMaxConfig::default());
        assert!((st.m[0][0] - 0.05).abs() < 1e-15);
        assert_eq!(st.u[0][0], 0.5);
        assert_eq!(st.t, 1);
        // 1 − 0.02 · (0.05 / (0.5 + 1e-8))
        assert!((w[0] - 0.998).abs() < 1e-9, "{}", w[0]);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut a = vec![0.3, -1.2];
        let mut b = vec![7.0];
        let mut st = AdaMaxState::new([&a, &b]);
        adamax_step(&mut [&mut a, &mut b], &[vec![0.0, 0.0], vec![0.0]], &mut st, &AdaMaxConfig::default());
        assert_eq!((a, b), (vec![0.3, -1.2], vec![7.0]));
        assert!(st.u.iter().flatten().all(|&u| u >= 0.0));
    }

    #[test]
    fn ten_steps_are_reproducible() {
        let run = || {
            let mut w = vec![0.5, -0.25, 2.0];
            let mut st = AdaMaxState::new([&w]);
            for k in 0..10 {
                let g: Vec<f64> = w.iter().map(|x| 2.0 * x + k as f64 * 0.01).collect();
                adamax_step(&mut [&mut w], &[g], &mut st, &AdaMaxConfig::default());
            }
            w.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn validation() {
        assert!(AdaMaxConfig::default().validate().is_ok());
        assert!(AdaMaxConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(AdaMaxConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(AdaMaxConfig { eps: -1.0, ..Default::default() }.validate().is_err());
    }
}
