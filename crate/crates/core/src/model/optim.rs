use crate::model::ClassifierHead;

/// Adam with decoupled weight decay. Decay applies to weights, not biases.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m_w: Vec<[f64; 2]>,
    v_w: Vec<[f64; 2]>,
    m_b: [f64; 2],
    v_b: [f64; 2],
}

impl AdamW {
    pub fn new(input_dim: usize, weight_decay: f64) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m_w: vec![[0.0; 2]; input_dim],
            v_w: vec![[0.0; 2]; input_dim],
            m_b: [0.0; 2],
            v_b: [0.0; 2],
        }
    }

    pub fn update(&mut self, head: &mut ClassifierHead, grad_w: &[[f64; 2]], grad_b: [f64; 2], lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let adam = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64, decay: f64| {
            *p -= lr * decay * *p;
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };
        for (i, row) in head.weights.iter_mut().enumerate() {
            for k in 0..2 {
                adam(&mut row[k], grad_w[i][k], &mut self.m_w[i][k], &mut self.v_w[i][k], self.weight_decay);
            }
        }
        for k in 0..2 {
            adam(&mut head.bias[k], grad_b[k], &mut self.m_b[k], &mut self.v_b[k], 0.0);
        }
    }
}
