use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::NetParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for a list of networks, flattened per network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, nets: &[&NetParams]) -> Self {
        let zeros: Vec<Vec<f64>> = nets.iter().map(|n| vec![0.0; n.total_count()]).collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    /// One bias-corrected Adam update. `grads[i]` is the flat gradient of
    /// `nets[i]`. Nothing is modified if any gradient entry is non-finite.
    pub fn step(&mut self, nets: &mut [&mut NetParams], grads: &[Vec<f64>]) -> Result<()> {
        if nets.len() != self.first_moment.len() || grads.len() != nets.len() {
            return Err(Error::Config("optimizer state does not match networks".into()));
        }
        for (i, (net, g)) in nets.iter().zip(grads).enumerate() {
            if g.len() != self.first_moment[i].len() || g.len() != net.total_count() {
                return Err(Error::Config(format!(
                    "network {i}: gradient length does not match parameters"
                )));
            }
            if let Some(k) = g.iter().position(|v| !v.is_finite()) {
                let offs = net.layer_offsets();
                let layer = offs.windows(2).position(|w| k >= w[0] && k < w[1]).unwrap_or(0);
                return Err(Error::Numerical(format!(
                    "non-finite gradient in network {i}, layer {layer}"
                )));
            }
        }

        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (i, net) in nets.iter_mut().enumerate() {
            let mut flat = net.to_flat();
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            for k in 0..flat.len() {
                let g = grads[i][k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                flat[k] -= lr * mh / (vh.sqrt() + eps);
            }
            net.set_flat(&flat);
        }
        Ok(())
    }
}
