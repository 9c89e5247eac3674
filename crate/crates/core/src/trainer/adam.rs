use crate::ansatz::ParameterSet;

/// Adam with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(size: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: vec![0.0; size],
            v: vec![0.0; size],
        }
    }

    pub fn step(&mut self, params: &mut ParameterSet, grad: &ParameterSet) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let values = params.theta.iter_mut().chain(params.phi.iter_mut());
        let grads = grad.theta.iter().chain(&grad.phi);
        for (((p, &g), m), v) in values.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the first update is lr * g / (|g| + eps).
        let mut params = ParameterSet::from_vecs(1, 1, 1, vec![1.0], vec![-1.0]).unwrap();
        let grad = ParameterSet::from_vecs(1, 1, 1, vec![0.5], vec![-2.0]).unwrap();
        let mut adam = Adam::new(2, 0.01, 0.9, 0.999, 1e-8);
        adam.step(&mut params, &grad);
        assert!((params.theta[0] - (1.0 - 0.01)).abs() < 1e-9);
        assert!((params.phi[0] - (-1.0 + 0.01)).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut params = ParameterSet::from_vecs(1, 1, 2, vec![0.3, 0.1], vec![0.2, 0.0]).unwrap();
        let before = params.clone();
        let grad = ParameterSet::zeros(1, 1, 2);
        let mut adam = Adam::new(4, 0.1, 0.9, 0.999, 1e-8);
        for _ in 0..5 {
            adam.step(&mut params, &grad);
        }
        assert_eq!(params, before);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut params = ParameterSet::from_vecs(1, 1, 1, vec![3.0], vec![-2.0]).unwrap();
        let mut adam = Adam::new(2, 0.05, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            let grad =
                ParameterSet::from_vecs(1, 1, 1, vec![2.0 * params.theta[0]], vec![2.0 * params.phi[0]]).unwrap();
            adam.step(&mut params, &grad);
        }
        assert!(params.theta[0].abs() < 1e-2 && params.phi[0].abs() < 1e-2);
    }
}
