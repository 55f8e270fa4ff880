//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use gber::agent::{ACTOR_OUTPUT, CRITIC_OUTPUT};
use gber::geom::Vec2;
use gber::nn::{Mlp, OutputActivation};
use gber::replay::Transition;
use gber::trainer::Policy;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Scalar forward pass straight from the flat parameter layout
/// (per layer: row-major `out x in` weights, then biases).
pub fn naive_forward(sizes: &[usize], output: OutputActivation, params: &[f64], input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    let mut off = 0;
    let layers = sizes.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let w = &params[off..off + n_in * n_out];
        let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
        off += n_in * n_out + n_out;
        let mut y = vec![0.0; n_out];
        for o in 0..n_out {
            let mut z = b[o];
            for i in 0..n_in {
                z += w[o * n_in + i] * x[i];
            }
            y[o] = if l + 1 < layers {
                z.max(0.0)
            } else {
                match output {
                    OutputActivation::Linear => z,
                    OutputActivation::Tanh { scale } => scale * z.tanh(),
                }
            };
        }
        x = y;
    }
    x
}

pub fn naive_critic_loss(sizes: &[usize], params: &[f64], batch: &[Transition], targets: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let q = naive_forward(sizes, CRITIC_OUTPUT, params, &[t.state.x, t.state.y, t.goal.x, t.goal.y, t.action.x, t.action.y])[0];
        sum += (q - y) * (q - y);
    }
    sum / batch.len() as f64
}

pub fn naive_actor_loss(
    actor_sizes: &[usize],
    actor_params: &[f64],
    critic_sizes: &[usize],
    critic_params: &[f64],
    batch: &[Transition],
    action_l2: f64,
) -> f64 {
    let mut sum = 0.0;
    for t in batch {
        let obs = [t.state.x, t.state.y, t.goal.x, t.goal.y];
        let a = naive_forward(actor_sizes, ACTOR_OUTPUT, actor_params, &obs);
        let q = naive_forward(critic_sizes, CRITIC_OUTPUT, critic_params, &[obs[0], obs[1], obs[2], obs[3], a[0], a[1]])[0];
        sum += -q + action_l2 * (a[0] * a[0] + a[1] * a[1]);
    }
    sum / batch.len() as f64
}

/// Central differences of `f` around `params`.
pub fn finite_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, or 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn random_vec2<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Vec2 {
    Vec2::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

pub fn random_batch<R: Rng>(rng: &mut R, n: usize) -> Vec<Transition> {
    (0..n)
        .map(|_| Transition {
            state: random_vec2(rng, 0.0, 5.0),
            goal: random_vec2(rng, 0.0, 5.0),
            action: random_vec2(rng, -1.0, 1.0),
            reward: if rng.gen_bool(0.3) { 0.0 } else { -1.0 },
            next_state: random_vec2(rng, 0.0, 5.0),
            done: false,
            collided: false,
        })
        .collect()
}

pub fn random_mlp<R: Rng>(rng: &mut R, input: usize, output: usize, act: OutputActivation) -> Mlp {
    let depth = rng.gen_range(1..=2);
    let mut sizes = vec![input];
    for _ in 0..depth {
        sizes.push(rng.gen_range(2..=8));
    }
    sizes.push(output);
    let mut net = Mlp::new(&sizes, act, rng).unwrap();
    // Larger output weights than the default init, so gradients are not tiny.
    for p in net.params_mut() {
        *p += rng.gen_range(-0.3..0.3);
    }
    net
}

/// Uniformly random point inside a free cell.
pub fn random_free_point<R: Rng>(cells: &[(usize, usize)], rng: &mut R) -> Vec2 {
    let (c, r) = cells[rng.gen_range(0..cells.len())];
    Vec2::new(c as f64 + rng.gen::<f64>(), r as f64 + rng.gen::<f64>())
}

/// Uniform random actions in the unit box.
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn action(&self, _state: Vec2, _goal: Vec2, rng: &mut ChaCha8Rng, _explore: bool) -> Vec2 {
        Vec2::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
    }
}

/// Reward recomputed from scratch: 0 within the closed radius, -1 outside.
pub fn brute_force_reward(achieved: Vec2, goal: Vec2, radius: f64) -> f64 {
    let dx = achieved.x - goal.x;
    let dy = achieved.y - goal.y;
    if (dx * dx + dy * dy).sqrt() <= radius {
        0.0
    } else {
        -1.0
    }
}

/// Largest-remainder apportionment computed with exact rational comparisons.
pub fn reference_apportion(ratios: &[u32; 6], batch: usize) -> [usize; 6] {
    let total: u128 = ratios.iter().map(|&r| r as u128).sum();
    let mut counts = [0usize; 6];
    let mut rems: Vec<(u128, usize)> = Vec::new();
    for i in 0..6 {
        let num = ratios[i] as u128 * batch as u128;
        counts[i] = (num / total) as usize;
        rems.push((num % total, i));
    }
    let left = batch - counts.iter().sum::<usize>();
    // Largest remainder first; equal remainders go to the lower index.
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(left) {
        counts[i] += 1;
    }
    counts
}

/// Compares analytic critic and actor gradients with central differences on
/// one random pair of small networks; returns both relative errors.
pub fn gradient_check(seed: u64, h: f64) -> (f64, f64) {
    use gber::agent::{actor_loss_and_grad, critic_loss_and_grad};
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actor = random_mlp(&mut rng, 4, 2, ACTOR_OUTPUT);
    let critic = random_mlp(&mut rng, 6, 1, CRITIC_OUTPUT);
    let n = rng.gen_range(1..=6);
    let batch = random_batch(&mut rng, n);
    let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..0.0)).collect();
    let action_l2 = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1.0) };

    let (loss, grad) = critic_loss_and_grad(&critic, &batch, &targets);
    assert!((loss - naive_critic_loss(critic.sizes(), critic.params(), &batch, &targets)).abs() <= 1e-9 * loss.abs().max(1.0));
    let fd = finite_difference(critic.params(), h, |p| naive_critic_loss(critic.sizes(), p, &batch, &targets));
    let critic_err = relative_error(&grad, &fd);

    let (_, grad) = actor_loss_and_grad(&actor, &critic, &batch, action_l2);
    let fd = finite_difference(actor.params(), h, |p| {
        naive_actor_loss(actor.sizes(), p, critic.sizes(), critic.params(), &batch, action_l2)
    });
    let actor_err = relative_error(&grad, &fd);
    (critic_err, actor_err)
}
