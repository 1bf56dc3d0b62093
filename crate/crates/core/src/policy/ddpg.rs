//! Deterministic policy gradient learner with soft-updated target networks.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamParams};
use super::network::{NetKind, Network, NetworkSpec, GOAL_DIM};
use super::replay::TrainBatch;
use super::PolicyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgParams {
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
}

impl Default for DdpgParams {
    fn default() -> Self {
        DdpgParams {
            gamma: 0.99,
            tau: 0.005,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            batch_size: 128,
            buffer_capacity: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossStats {
    pub critic_loss: f64,
    /// Mean `Q(o, μ(o))` before the actor step.
    pub actor_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: Network,
    pub critic: Network,
    pub actor_target: Network,
    pub critic_target: Network,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub params: DdpgParams,
    pub updates: u64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        spec: &NetworkSpec,
        rows: usize,
        beams: usize,
        params: DdpgParams,
        rng: &mut R,
    ) -> Result<Agent, PolicyError> {
        let actor = Network::new(NetKind::Actor, spec, rows, beams, rng)?;
        let critic = Network::new(NetKind::Critic, spec, rows, beams, rng)?;
        Ok(Agent {
            actor_opt: Adam::new(AdamParams::with_lr(params.lr_actor), &actor),
            critic_opt: Adam::new(AdamParams::with_lr(params.lr_critic), &critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            params,
            updates: 0,
        })
    }

    /// Bootstrapped critic targets `r + γ (1 − done) Q'(o', μ'(o'))`.
    pub fn targets(&self, batch: &TrainBatch) -> Result<ndarray::Array1<f64>, PolicyError> {
        let next_a = self.actor_target.forward(batch.next.scans.view(), batch.next.goals.view(), None)?;
        let q_next = self
            .critic_target
            .forward(batch.next.scans.view(), batch.next.goals.view(), Some(next_a.view()))?;
        let q_next = q_next.index_axis(Axis(1), 0).to_owned();
        Ok(&batch.rewards + &(q_next * (1.0 - &batch.done) * self.params.gamma))
    }

    /// Mean squared TD error of the online critic on `batch`.
    pub fn critic_loss(&self, batch: &TrainBatch) -> Result<f64, PolicyError> {
        let y = self.targets(batch)?;
        let q = self
            .critic
            .forward(batch.obs.scans.view(), batch.obs.goals.view(), Some(batch.actions.view()))?;
        Ok(q.index_axis(Axis(1), 0).iter().zip(&y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / y.len() as f64)
    }

    /// One critic step, one actor step, then soft target updates.
    pub fn update(&mut self, batch: &TrainBatch) -> Result<LossStats, PolicyError> {
        let n = batch.obs.len();
        if n == 0 {
            return Err(PolicyError::BatchTooLarge { batch: 0, occupancy: 0 });
        }
        let inv_n = 1.0 / n as f64;
        let obs = (&batch.obs.scans, &batch.obs.goals);

        let y = self.targets(batch)?;
        let (q, cache) = self
            .critic
            .forward_cached(obs.0.view(), obs.1.view(), Some(batch.actions.view()))?;
        let mut grad = Array2::<f64>::zeros((n, 1));
        let mut critic_loss = 0.0;
        for i in 0..n {
            let e = q[[i, 0]] - y[i];
            critic_loss += e * e * inv_n;
            grad[[i, 0]] = 2.0 * e * inv_n;
        }
        self.critic.zero_grad();
        self.critic.backward(&cache, &grad, true);
        self.critic_opt.step(&mut self.critic);

        let (a, actor_cache) = self.actor.forward_cached(obs.0.view(), obs.1.view(), None)?;
        let (q_pi, critic_cache) = self.critic.forward_cached(obs.0.view(), obs.1.view(), Some(a.view()))?;
        let actor_objective = q_pi.sum() * inv_n;
        let dq = Array2::<f64>::from_elem((n, 1), -inv_n);
        let d_extra = self.critic.backward(&critic_cache, &dq, false);
        let d_action = d_extra.slice(s![.., GOAL_DIM..]).to_owned();
        self.actor.zero_grad();
        self.actor.backward(&actor_cache, &d_action, true);
        self.actor_opt.step(&mut self.actor);

        let tau = self.params.tau;
        self.critic_target.soft_update_from(&self.critic, tau);
        self.actor_target.soft_update_from(&self.actor, tau);
        self.updates += 1;
        Ok(LossStats {
            critic_loss,
            actor_objective,
        })
    }
}
