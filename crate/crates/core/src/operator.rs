//! Branch–trunk operator networks.

use dool_nn::{Activation, LayerShape, Matrix, NetParams, NetVars, Tape, Var};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyper-parameters shared by every sub-network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// Number of hidden layers `L`.
    pub depth: usize,
    /// Hidden width `W`.
    pub width: usize,
    /// Latent width `p`.
    pub latent: usize,
    pub activation: Activation,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::invalid("net.depth", "must be at least 1"));
        }
        if self.width == 0 {
            return Err(Error::invalid("net.width", "must be at least 1"));
        }
        if self.latent == 0 {
            return Err(Error::invalid("net.latent", "must be at least 1"));
        }
        if self.activation == Activation::Identity {
            return Err(Error::invalid("net.activation", "must be tanh or sin"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorNet {
    /// One branch (state) or two (state, scalar parameter).
    pub branches: Vec<NetParams>,
    pub trunk: NetParams,
    pub latent: usize,
    /// Number of flux components; the trunk emits `flux_dim · latent` values.
    pub flux_dim: usize,
}

/// Handles for an [`OperatorNet`] registered on a tape.
#[derive(Debug, Clone)]
pub struct OperatorVars {
    pub branches: Vec<NetVars>,
    pub trunk: NetVars,
}

impl OperatorNet {
    /// Xavier-initialized network. Sub-network `i` is seeded with `seed + i`
    /// (branches first, trunk last).
    pub fn new(
        arch: &Architecture,
        branch_inputs: &[usize],
        trunk_input: usize,
        flux_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        arch.validate()?;
        if branch_inputs.is_empty() || branch_inputs.len() > 2 {
            return Err(Error::Config("an operator net has one or two branches".into()));
        }
        if flux_dim == 0 {
            return Err(Error::Config("flux_dim must be positive".into()));
        }
        let branches = branch_inputs
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                NetParams::init(
                    &LayerShape::stack(n, arch.width, arch.depth, arch.latent, arch.activation),
                    seed.wrapping_add(i as u64),
                )
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let trunk = NetParams::init(
            &LayerShape::stack(
                trunk_input,
                arch.width,
                arch.depth,
                flux_dim * arch.latent,
                arch.activation,
            ),
            seed.wrapping_add(branch_inputs.len() as u64),
        )?;
        Ok(Self {
            branches,
            trunk,
            latent: arch.latent,
            flux_dim,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() || self.branches.len() > 2 {
            return Err(Error::Config("an operator net has one or two branches".into()));
        }
        for b in &self.branches {
            b.validate()?;
            if b.output_dim() != self.latent {
                return Err(Error::Config("branch output width differs from p".into()));
            }
        }
        self.trunk.validate()?;
        if self.trunk.output_dim() != self.flux_dim * self.latent {
            return Err(Error::Config("trunk output width differs from d·p".into()));
        }
        Ok(())
    }

    pub fn nets(&self) -> Vec<&NetParams> {
        self.branches.iter().chain(std::iter::once(&self.trunk)).collect()
    }

    pub fn nets_mut(&mut self) -> Vec<&mut NetParams> {
        self.branches
            .iter_mut()
            .chain(std::iter::once(&mut self.trunk))
            .collect()
    }

    pub fn total_count(&self) -> usize {
        self.nets().iter().map(|n| n.total_count()).sum()
    }

    /// Trunk outputs at the given points (`n × d·p`).
    pub fn trunk_features(&self, points: &Matrix) -> Result<Matrix> {
        Ok(self.trunk.forward_batch(points)?)
    }

    /// Combined branch features for one input per branch (`1 × p`).
    pub fn branch_features(&self, inputs: &[&[f64]]) -> Result<Vec<f64>> {
        if inputs.len() != self.branches.len() {
            return Err(Error::Config(format!(
                "{} branch inputs for {} branches",
                inputs.len(),
                self.branches.len()
            )));
        }
        let mut b = vec![1.0; self.latent];
        for (net, x) in self.branches.iter().zip(inputs) {
            let y = net.forward(x)?;
            for (o, v) in b.iter_mut().zip(y) {
                *o *= v;
            }
        }
        Ok(b)
    }

    /// Contracts branch features with precomputed trunk features.
    pub fn flux_from_features(&self, b: &[f64], trunk: &Matrix) -> Vec<Vec<f64>> {
        let p = self.latent;
        (0..self.flux_dim)
            .map(|d| {
                (0..trunk.rows())
                    .map(|r| {
                        let t = &trunk.row(r)[d * p..(d + 1) * p];
                        t.iter().zip(b).map(|(x, y)| x * y).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// `Σ_k b_k t_k(y)` at each point, one vector per flux component.
    pub fn eval_flux(&self, inputs: &[&[f64]], points: &Matrix) -> Result<Vec<Vec<f64>>> {
        let b = self.branch_features(inputs)?;
        let t = self.trunk_features(points)?;
        Ok(self.flux_from_features(&b, &t))
    }

    pub fn register(&self, tape: &mut Tape) -> OperatorVars {
        OperatorVars {
            branches: self.branches.iter().map(|b| b.register(tape)).collect(),
            trunk: self.trunk.register(tape),
        }
    }

    /// Records the batched flux on the tape. With one branch, `inputs[0]` is
    /// `n × in` and each returned node is `n × n_points`. With two branches
    /// the rows enumerate all pairs, row `i·n_2 + l` pairing `inputs[0]` row
    /// `i` with `inputs[1]` row `l`.
    pub fn flux_graph(
        &self,
        tape: &mut Tape,
        vars: &OperatorVars,
        inputs: &[Matrix],
        points: &Matrix,
    ) -> Vec<Var> {
        let feats: Vec<Var> = self
            .branches
            .iter()
            .zip(&vars.branches)
            .zip(inputs)
            .map(|((net, v), x)| {
                let xi = tape.constant(x.clone());
                net.forward_tape(tape, v, xi)
            })
            .collect();
        let b = if feats.len() == 2 {
            tape.pair_product(feats[0], feats[1])
        } else {
            feats[0]
        };
        let pi = tape.constant(points.clone());
        let t = self.trunk.forward_tape(tape, &vars.trunk, pi);
        if self.flux_dim == 1 {
            return vec![tape.matmul_nt(b, t)];
        }
        (0..self.flux_dim)
            .map(|d| {
                let td = tape.columns(t, d * self.latent, self.latent);
                tape.matmul_nt(b, td)
            })
            .collect()
    }

    /// Flat gradients in the order of [`nets`](Self::nets).
    pub fn vars_list(vars: &OperatorVars) -> Vec<NetVars> {
        vars.branches
            .iter()
            .cloned()
            .chain(std::iter::once(vars.trunk.clone()))
            .collect()
    }
}
