//! Tiny networks and batches shared by the learning tests.

use ndarray::{Array1, Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use socnav::policy::ddpg::{Agent, DdpgParams};
use socnav::policy::network::{ConvSpec, FeatureBatch, NetKind, Network, NetworkSpec, OutputActivation};
use socnav::policy::replay::TrainBatch;

pub const ROWS: usize = 4;
pub const BEAMS: usize = 16;
pub const H: f64 = 1e-5;

pub fn tiny_spec(output: OutputActivation, pool: bool) -> NetworkSpec {
    NetworkSpec {
        conv: vec![
            ConvSpec {
                kernel: [2, 3],
                stride: [1, 2],
                channels: 2,
                pool: pool.then_some([1, 2]),
            },
            ConvSpec {
                kernel: [2, 2],
                stride: [1, 1],
                channels: 3,
                pool: None,
            },
        ],
        dense: vec![6, 5],
        actor_output: output,
        head_init: 0.5,
    }
}

pub fn random_batch(n: usize, rng: &mut ChaCha8Rng) -> (Array4<f64>, Array2<f64>, Array2<f64>) {
    let scans = Array4::from_shape_fn((n, 1, ROWS, BEAMS), |_| rng.random_range(0.01..1.0));
    let goals = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
    let actions = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.5..1.5));
    (scans, goals, actions)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-7)
}

pub fn weighted_output(net: &Network, s: &Array4<f64>, g: &Array2<f64>, a: Option<&Array2<f64>>, w: &Array2<f64>) -> f64 {
    let out = net.forward(s.view(), g.view(), a.map(|a| a.view())).unwrap();
    (&out * w).sum()
}

/// Central difference of `f` at 0. ReLU and max-pool kinks make `f` only
/// piecewise smooth; when the one-sided slopes disagree a kink lies inside
/// the step, so the step shrinks until it no longer straddles one.
pub fn central_difference(mut f: impl FnMut(f64) -> f64) -> f64 {
    let f0 = f(0.0);
    let mut h = H;
    for _ in 0..3 {
        let (up, down) = (f(h), f(-h));
        let (right, left) = ((up - f0) / h, (f0 - down) / h);
        if (right - left).abs() <= 1e-3 * (right.abs() + left.abs()) + 1e-9 {
            return (up - down) / (2.0 * h);
        }
        h /= 100.0;
    }
    (f(h) - f(-h)) / (2.0 * h)
}

/// Compares every parameter gradient and every goal/action input gradient
/// of `L = Σ w ⊙ net(x)` with central differences.
pub fn check_gradients(kind: NetKind, spec: &NetworkSpec, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(kind, spec, ROWS, BEAMS, &mut rng).unwrap();
    let (s, g, a) = random_batch(3, &mut rng);
    let a = (kind == NetKind::Critic).then_some(a);
    let w = Array2::from_shape_fn((3, net.outputs()), |_| rng.random_range(-1.0..1.0));

    let (_, cache) = net.forward_cached(s.view(), g.view(), a.as_ref().map(|a| a.view())).unwrap();
    net.zero_grad();
    let extra = net.backward(&cache, &w, true);
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();

    let mut worst = (0.0, String::new());
    for (pi, grads) in analytic.iter().enumerate() {
        for j in 0..grads.len() {
            let orig = net.params()[pi].value[j];
            let numeric = central_difference(|d| {
                net.params_mut()[pi].value[j] = orig + d;
                weighted_output(&net, &s, &g, a.as_ref(), &w)
            });
            net.params_mut()[pi].value[j] = orig;
            let e = rel_err(grads[j], numeric);
            if e > worst.0 {
                worst = (e, format!("{}[{j}]: {} vs {numeric}", net.params()[pi].name, grads[j]));
            }
        }
    }
    if worst.0 >= 1e-4 {
        return Err(format!("parameter gradient mismatch {}", worst.1));
    }

    // goal columns, then action columns for the critic
    let mut inputs = vec![g.clone()];
    inputs.extend(a.clone());
    for (block, base) in inputs.iter().enumerate() {
        for i in 0..3 {
            for k in 0..2 {
                let probe = |delta: f64| {
                    let mut m = base.clone();
                    m[[i, k]] += delta;
                    if block == 0 {
                        weighted_output(&net, &s, &m, a.as_ref(), &w)
                    } else {
                        weighted_output(&net, &s, &g, Some(&m), &w)
                    }
                };
                let numeric = central_difference(probe);
                let analytic = extra[[i, block * 2 + k]];
                if rel_err(analytic, numeric) >= 1e-4 {
                    return Err(format!("input gradient block {block} [{i},{k}]: {analytic} vs {numeric}"));
                }
            }
        }
    }
    Ok(())
}

pub fn tiny_agent(gamma: f64, tau: f64, seed: u64) -> Agent {
    let params = DdpgParams {
        gamma,
        tau,
        batch_size: 8,
        buffer_capacity: 64,
        ..DdpgParams::default()
    };
    let spec = tiny_spec(OutputActivation::ScaledTanh { scale: 1.5 }, true);
    Agent::new(&spec, ROWS, BEAMS, params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub fn tiny_train_batch(n: usize, done: f64, seed: u64) -> TrainBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, g, a) = random_batch(n, &mut rng);
    let (s2, g2, _) = random_batch(n, &mut rng);
    TrainBatch {
        obs: FeatureBatch { scans: s, goals: g },
        actions: a,
        rewards: Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0)),
        next: FeatureBatch { scans: s2, goals: g2 },
        done: Array1::from_elem(n, done),
    }
}

