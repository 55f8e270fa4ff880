mod common;

use common::*;
use gber::agent::{compute_targets, Agent, HyperParams, ACTOR_OUTPUT};
use gber::config::RunConfig;
use gber::geom::Vec2;
use gber::maze::{sparse_reward, EnvState, MazeSpec};
use gber::mega::{kde_density, select_behavioral_goal, DensityModel};
use gber::nn::soft_update;
use gber::replay::{BufferSet, Category, RingBuffer, StrategyRatios};
use gber::trainer::{rollout_episode, train_in_memory};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAZES: [&str; 5] = ["square_d", "square_d_4", "square_large", "experiment_9_9_6", "experiment_3_3_2"];

fn maze_strategy() -> impl Strategy<Value = MazeSpec> {
    prop::sample::select(MAZES.to_vec()).prop_map(|n| MazeSpec::from_name(n, 0.5).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walls_are_impermeable_and_steps_reverse(maze in maze_strategy(), seed in any::<u64>()) {
        let cells: Vec<(usize, usize)> = maze.free_cells().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2_000 {
            let s = random_free_point(&cells, &mut rng);
            // Actions past the box exercise clipping too.
            let a = random_vec2(&mut rng, -1.5, 1.5);
            let g = random_free_point(&cells, &mut rng);
            let out = maze.step(EnvState { position: s }, a, g);
            let p = out.next_state.position;
            prop_assert!(maze.is_free_point(p), "{p:?} is inside a wall");
            prop_assert_eq!(out.success, out.reward == 0.0);
            prop_assert_eq!(out.reward, sparse_reward(p, g, maze.success_radius));
            prop_assert_eq!(maze.step(EnvState { position: s }, a, g), out);
            if !out.collided {
                let a = a.clamp_components(1.0);
                let back = maze.step(out.next_state, -a, g).next_state.position;
                prop_assert!((back - s).x.abs() < 1e-9 && (back - s).y.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stored_transitions_respect_windows(maze in maze_strategy(), seed in any::<u64>(), ratios in prop::array::uniform6(0u32..4)) {
        prop_assume!(ratios.iter().any(|&r| r > 0));
        let ratios = StrategyRatios::new(ratios).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buffers = BufferSet::new(10_000, maze.success_radius);
        for _ in 0..20 {
            let (s0, g) = maze.reset(&mut rng);
            let horizon = rng.gen_range(1..=30);
            let ep = rollout_episode(&maze, &RandomPolicy, s0.position, g, g, horizon, &mut rng, true);
            buffers.store_episode(&ep, &ratios, &mut rng).unwrap();
            for c in Category::ALL {
                let buf = buffers.buffer(c);
                if !ratios.is_active(c) {
                    prop_assert!(buf.is_empty());
                    continue;
                }
                for t in 0..ep.len() {
                    let tr = buf.get(buf.len() - ep.len() + t).unwrap();
                    prop_assert_eq!(tr.reward, brute_force_reward(tr.next_state, tr.goal, maze.success_radius));
                    let idx: Vec<usize> = (0..ep.achieved_goals.len()).filter(|&k| ep.achieved_goals[k] == tr.goal).collect();
                    match c {
                        Category::Future => prop_assert!(idx.iter().any(|&k| k > t)),
                        Category::Backstep => {
                            prop_assert!(idx.iter().any(|&k| k <= t));
                            prop_assert_eq!(tr.action, -ep.actions[t]);
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    #[test]
    fn ring_buffer_keeps_most_recent(cap in 1usize..50, n in 0usize..200) {
        let mut buf = RingBuffer::new(cap);
        for i in 0..n {
            buf.push(i);
            prop_assert!(buf.len() <= cap);
        }
        let kept: Vec<usize> = buf.iter().copied().collect();
        let expected: Vec<usize> = (n.saturating_sub(cap)..n).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn targets_are_bounded(seed in any::<u64>(), gamma in 0.5f64..0.999) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ta = random_mlp(&mut rng, 4, 2, ACTOR_OUTPUT);
        let mut tc = random_mlp(&mut rng, 6, 1, gber::agent::CRITIC_OUTPUT);
        // Wild critic outputs in both directions.
        let scale = rng.gen_range(-1e3..1e3);
        for p in tc.params_mut() {
            *p *= scale;
        }
        let batch = random_batch(&mut rng, 32);
        for y in compute_targets(&batch, &ta, &tc, gamma) {
            prop_assert!(y >= -1.0 / (1.0 - gamma) && y <= 0.0);
        }
    }

    #[test]
    fn soft_update_is_convex(seed in any::<u64>(), tau in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = random_mlp(&mut rng, 4, 2, ACTOR_OUTPUT);
        let mut target = online.clone();
        for p in target.params_mut() {
            *p = rng.gen_range(-2.0..2.0);
        }
        let updated = soft_update(&online, &target, tau).unwrap();
        for ((u, o), t) in updated.params().iter().zip(online.params()).zip(target.params()) {
            prop_assert!(*u >= o.min(*t) && *u <= o.max(*t));
        }
    }

    #[test]
    fn actions_are_bounded(seed in any::<u64>(), scale in -1e6f64..1e6, explore in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hp = HyperParams { hidden_sizes: vec![8, 8], ..Default::default() };
        let mut agent = Agent::new(hp, &mut rng).unwrap();
        for p in agent.actor.params_mut() {
            *p *= scale;
        }
        for _ in 0..20 {
            let a = agent.select_action(random_vec2(&mut rng, -10.0, 10.0), random_vec2(&mut rng, -10.0, 10.0), &mut rng, explore);
            prop_assert!(a.x.abs() <= 1.0 && a.y.abs() <= 1.0);
        }
    }

    #[test]
    fn updates_are_reproducible(seed in any::<u64>()) {
        let hp = HyperParams { hidden_sizes: vec![8], batch_size: 8, ..Default::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut agent = Agent::new(hp.clone(), &mut rng).unwrap();
            for _ in 0..5 {
                let batch = random_batch(&mut rng, 8);
                agent.train_step(&batch).unwrap();
            }
            agent
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.actor.params(), b.actor.params());
        prop_assert_eq!(a.target_critic.params(), b.target_critic.params());
    }

    #[test]
    fn behavioral_goal_comes_from_archive(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let archive: Vec<Vec2> = (0..n).map(|_| random_vec2(&mut rng, 0.0, 10.0)).collect();
        let model = DensityModel::from_points(&archive, 0.5).unwrap();
        let g = select_behavioral_goal(&model, &archive, 20, &mut rng).unwrap();
        prop_assert!(archive.contains(&g));
        let q = random_vec2(&mut rng, 0.0, 10.0);
        prop_assert!(kde_density(&model, q).unwrap() > 0.0);
    }

    #[test]
    fn rare_cluster_wins_when_sampled(big in 2usize..20, small in 1usize..5, seed in any::<u64>()) {
        prop_assume!(big > small);
        let mut archive = vec![Vec2::ZERO; big];
        archive.extend(std::iter::repeat_n(Vec2::new(20.0, 20.0), small));
        let model = DensityModel::from_points(&archive, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Enough candidates that the rare cluster is all but certain to be drawn.
        let g = select_behavioral_goal(&model, &archive, 1_000, &mut rng).unwrap();
        prop_assert_eq!(g, Vec2::new(20.0, 20.0));
    }
}

fn small_run(seed: u64, eval_episodes: usize) -> RunConfig {
    let mut c = RunConfig::new("experiment_2_2_1", "1_4_3_1_1_5".parse().unwrap());
    c.agent.hidden_sizes = vec![16];
    c.agent.batch_size = 16;
    c.agent.warmup_steps = 130;
    c.train.total_timesteps = 600;
    c.train.eval_every = 150;
    c.train.eval_episodes = eval_episodes;
    c.train.seed = seed;
    c.mega.enabled = true;
    c
}

#[test]
fn step_accounting_and_update_cadence() {
    for seed in 0..3 {
        let c = small_run(seed, 2);
        let r = train_in_memory(&c).unwrap();
        assert_eq!(r.timesteps, c.train.total_timesteps);
        assert_eq!(r.episode_log.iter().map(|e| e.0 as u64).sum::<u64>(), r.timesteps);
        assert_eq!(r.episode_log.iter().map(|e| e.1 as u64).sum::<u64>(), r.updates);
        let mut steps = 0;
        for &(len, n) in &r.episode_log {
            assert!(len >= 1 && len <= c.train.horizon);
            steps += len as u64;
            assert_eq!(n, if steps >= c.agent.warmup_steps { len } else { 0 });
        }
        let evals: Vec<u64> = r.points.iter().map(|p| p.timestep).collect();
        assert_eq!(evals, [0, 150, 300, 450, 600]);
    }
}

#[test]
fn evaluation_does_not_perturb_training() {
    // Training losses depend only on the training streams, so changing the
    // number of evaluation episodes must leave them and the weights untouched.
    let a = train_in_memory(&small_run(5, 1)).unwrap();
    let b = train_in_memory(&small_run(5, 7)).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.actor_loss, q.actor_loss);
        assert_eq!(p.critic_loss, q.critic_loss);
    }
    assert_eq!(a.agent.actor.params(), b.agent.actor.params());
}

#[test]
fn strategies_actually_differ() {
    let a = train_in_memory(&small_run(1, 2)).unwrap();
    let mut c = small_run(1, 2);
    c.strategy.ratios = "1_4_0_0_0_0".parse().unwrap();
    let b = train_in_memory(&c).unwrap();
    assert_ne!(a.agent.actor.params(), b.agent.actor.params());
}
