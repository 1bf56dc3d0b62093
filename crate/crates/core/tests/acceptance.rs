//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line reaches the output even
//! when all criteria pass. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::nets::*;
use common::rotation::check_rotation_sequence;
use common::*;
use socnav::baselines::{GreedyParams, GreedyPolicy};
use socnav::crowd::{Behavior, BodyShape, Crowd, CrowdConfig, Pedestrian, ScenarioKind};
use socnav::eval::{compute_metrics, run_suite, Suite};
use socnav::geometry::{ray_cast, rects_intersect, OrientedRect, Shape};
use socnav::policy::network::{NetKind, OutputActivation};
use socnav::policy::train::{desk_env, NullSink};
use socnav::policy::{train, ActorPolicy, Checkpoint, CheckpointMeta, Stage, TrainConfig};
use socnav::rewards::{
    assess, ego_reward_from_distance, goal_reward, social_reward, social_zone, RewardMode, RewardParams, SceneState,
    SocialAgent,
};
use socnav::seed::{rng_for, Stream};
use socnav::{Circle, Vec2};

/// Environment steps for the ego stage of the desk experiment.
const EGO_BUDGET: u64 = 100_000;
/// Environment steps for the social stage, warm-started from the ego policy.
const SOCIAL_BUDGET: u64 = 20_000;
const TRAIN_SEED: u64 = 1;
/// Root seed of the held-out evaluation maps; training never draws from it.
const HELD_OUT_SEED: u64 = 101;
const CROSSING_SEED: u64 = 202;

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Verdict {
        Verdict {
            ok,
            detail: detail.into(),
        }
    }
}

fn check(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn summarize(failures: Vec<String>, passed: String) -> Verdict {
    if failures.is_empty() {
        Verdict::new(true, passed)
    } else {
        let shown: Vec<_> = failures.iter().take(3).cloned().collect();
        Verdict::new(false, format!("{} failure(s): {}", failures.len(), shown.join("; ")))
    }
}

fn within_time(v: Verdict, elapsed: Duration, limit: Duration) -> Verdict {
    if v.ok && elapsed > limit {
        Verdict::new(false, format!("{} but took {:.1?} (limit {:?})", v.detail, elapsed, limit))
    } else {
        v
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

// ---------------------------------------------------------------- 1

fn random_agent(rng: &mut ChaCha8Rng, extent: f64) -> SocialAgent {
    SocialAgent {
        position: Vec2::new(rng.random_range(-extent..extent), rng.random_range(-extent..extent)),
        heading: rng.random_range(-PI..PI),
        radius: rng.random_range(0.15..0.5),
        speed: rng.random_range(0.0..1.5),
    }
}

fn zone_of(a: &SocialAgent, p: &RewardParams) -> [P; 4] {
    social_zone_polygon(
        (a.position.x, a.position.y),
        a.heading,
        a.radius,
        a.speed,
        p.headway_time,
        p.min_safe_distance,
    )
}

fn reward_formulas() -> Verdict {
    let p = RewardParams::default();
    let mut f = Vec::new();

    // substitution examples
    check(&mut f, ego_reward_from_distance(0.0, 0.3, &p) == (-10.0, true), "ego at contact");
    check(&mut f, ego_reward_from_distance(0.7, 0.3, &p) == (0.0, false), "ego on the zone boundary");
    let (r, inside) = ego_reward_from_distance(0.35, 0.3, &p);
    check(&mut f, close(r, -0.125) && inside, format!("ego r=0.3 d=0.35 gave {r}"));

    let z = social_zone(Vec2::ZERO, 0.0, 0.3, 1.0, 0.77, 0.5);
    check(&mut f, close(z.length, 1.42) && z.half_width == 0.3, format!("zone length {}", z.length));
    let z0 = social_zone(Vec2::ZERO, 0.0, 0.3, 0.0, 0.77, 0.5);
    check(&mut f, close(z0.length, 0.15 + 0.5), "zero-speed zone");
    let z2 = social_zone(Vec2::ZERO, 0.0, 0.3, 2.0, 0.77, 0.5);
    check(&mut f, close(z2.length - z.length, 0.77), "doubling the speed");

    let robot = SocialAgent {
        position: Vec2::ZERO,
        heading: 0.0,
        radius: 0.3,
        speed: 1.0,
    };
    check(&mut f, social_reward(&robot, &[], &p).reward == 0.0, "empty scene");
    // two pedestrians walking straight at the robot, six far behind it
    let mut peds: Vec<SocialAgent> = [0.5, -0.5]
        .iter()
        .map(|&y| SocialAgent {
            position: Vec2::new(1.2, y * 0.4),
            heading: PI,
            radius: 0.3,
            speed: 1.0,
        })
        .collect();
    peds.extend((0..6).map(|i| SocialAgent {
        position: Vec2::new(-8.0 - i as f64, 0.0),
        heading: PI,
        radius: 0.3,
        speed: 1.0,
    }));
    let out = social_reward(&robot, &peds, &p);
    check(
        &mut f,
        out.violations == 2 && close(out.reward, -0.025),
        format!("2 of 8 gave {} violations, {}", out.violations, out.reward),
    );
    let far: Vec<SocialAgent> = (0..3)
        .map(|i| SocialAgent {
            position: Vec2::new(7.5 + i as f64, 0.0),
            heading: 0.0,
            radius: 0.3,
            speed: 1.0,
        })
        .collect();
    let stationary = SocialAgent { speed: 0.0, ..robot };
    check(&mut f, social_reward(&stationary, &far, &p).violations == 0, "far crowd");

    let (p0, goal) = (Vec2::new(-1.0, 2.0), Vec2::new(3.0, -1.0));
    check(&mut f, goal_reward(p0, goal, p0, true, &p) == 10.0, "goal reached");
    check(&mut f, close(goal_reward(p0, goal, p0, false, &p), -0.01), "goal at start");
    let half = (p0 + goal) * 0.5;
    check(&mut f, close(goal_reward(half, goal, p0, false, &p), -0.005), "goal halfway");

    // randomized states against independent oracles
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut outside_disc = 0;
    for n in 0..10_000 {
        let obstacles = random_scene(&mut rng);
        let obstacle_shapes: Vec<Shape> = obstacles.iter().map(Body::to_shape).collect();
        let agents: Vec<SocialAgent> = (0..rng.random_range(0..10)).map(|_| random_agent(&mut rng, 6.0)).collect();
        let bodies: Vec<Shape> = agents
            .iter()
            .map(|a| Circle::new(a.position, a.radius).unwrap().into())
            .collect();
        let start = Vec2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let goal = start + Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(1.0..10.0);
        let radius = (start - goal).norm();
        // every position no farther from the goal than the start
        let position = goal + Vec2::from_angle(rng.random_range(-PI..PI)) * (radius * rng.random::<f64>().sqrt());
        let robot = SocialAgent {
            position,
            radius: rng.random_range(0.1..0.5),
            ..random_agent(&mut rng, 6.0)
        };
        let reached = rng.random_bool(0.1);
        let scene = SceneState {
            robot,
            pedestrian_bodies: &bodies,
            pedestrians: &agents,
            obstacles: &obstacle_shapes,
            start,
            goal,
            reached,
        };
        let a = assess(&scene, RewardMode::Social, &p);
        let (e, s, g) = (a.parts.ego, a.parts.social, a.parts.goal);
        check(&mut f, e == -10.0 || (-0.25..=0.0).contains(&e), format!("state {n}: R_e {e}"));
        check(&mut f, (-0.1..=0.0).contains(&s), format!("state {n}: R_s {s}"));
        check(&mut f, g == 10.0 || (-0.01..=0.0).contains(&g), format!("state {n}: R_g {g}"));
        check(&mut f, a.total() == e + s + g, format!("state {n}: total"));
        check(&mut f, a.violations <= a.considered_pedestrians, format!("state {n}: counts"));

        // ego term from the oracle clearance
        let mut all = obstacles.clone();
        all.extend(agents.iter().map(|a| Body::Disc {
            center: (a.position.x, a.position.y),
            radius: a.radius,
        }));
        let oracle = scene_distance(&all, (position.x, position.y)) - robot.radius;
        if oracle.abs() > 1e-9 {
            let zone = robot.radius + p.ego_margin;
            let want = if oracle <= 0.0 {
                -10.0
            } else if oracle < zone {
                -0.25 * (1.0 - oracle / zone)
            } else {
                0.0
            };
            check(&mut f, (e - want).abs() <= 1e-9, format!("state {n}: R_e {e} vs oracle {want}"));
        }
        // social term from brute-force zone overlap
        let rz = zone_of(&robot, &p);
        let count = agents
            .iter()
            .filter(|q| q.position.distance(position) <= p.social_radius)
            .filter(|q| polygons_overlap(&rz, &zone_of(q, &p)))
            .count();
        let want = if agents.is_empty() { 0.0 } else { -0.1 * count as f64 / agents.len() as f64 };
        check(&mut f, a.violations == count && close(s, want), format!("state {n}: R_s {s} vs {want}"));
        // goal term from the written formula
        let want = if reached { 10.0 } else { -0.01 * position.distance(goal) / radius };
        check(&mut f, close(g, want), format!("state {n}: R_g {g} vs {want}"));

        // beyond the start-goal disc the shaping term keeps growing
        let away = goal + (start - goal) * 1.5;
        let r = goal_reward(away, goal, start, false, &p);
        check(&mut f, close(r, -0.015), format!("state {n}: R_g beyond start {r}"));
        outside_disc += usize::from(r < -0.01);
    }
    summarize(
        f,
        format!("9 substitution examples, 10^4 random states in bounds and equal to oracles ({outside_disc} probes beyond the start confirm R_g < -0.01 there)"),
    )
}

// ---------------------------------------------------------------- 2

fn geometry_oracles() -> Verdict {
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let scene = random_scene(&mut rng);
        let shapes: Vec<Shape> = scene.iter().map(Body::to_shape).collect();
        for _ in 0..8 {
            let origin = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let angle = rng.random_range(-PI..PI);
            let got = ray_cast(Vec2::new(origin.0, origin.1), Vec2::from_angle(angle), &shapes, 10.0);
            let want = marched_range(&scene, origin, angle, 10.0);
            worst = worst.max((got - want).abs());
            check(&mut f, (got - want).abs() <= 1e-3, format!("scene {n}: ray {got} vs {want}"));
        }
    }

    let samples = 200;
    let mut band = 0;
    for n in 0..100 {
        let rect = |r: &mut ChaCha8Rng| {
            let c = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let (h, hl, hw) = (r.random_range(-PI..PI), r.random_range(0.1..1.5), r.random_range(0.1..1.5));
            (
                rect_corners(c, h, hl, hw),
                OrientedRect::centered(Vec2::new(c.0, c.1), h, hl, hw).unwrap(),
            )
        };
        let (ca, a) = rect(&mut rng);
        let (cb, b) = rect(&mut rng);
        let sampled = sampled_overlap(&ca, &cb, samples) || sampled_overlap(&cb, &ca, samples);
        let sat = rects_intersect(&a, &b);
        if sat != sampled {
            // a disagreement is only allowed inside the sampler's resolution band
            let in_band = polygon_gap(&ca, &cb) <= 3.0 / samples as f64;
            band += usize::from(in_band);
            check(&mut f, sat && in_band, format!("rect scene {n}: SAT {sat}, sampled {sampled}"));
        }
    }

    let params = RewardParams::default();
    for n in 0..100 {
        let robot = random_agent(&mut rng, 4.0);
        let peds: Vec<SocialAgent> = (0..rng.random_range(1..10)).map(|_| random_agent(&mut rng, 4.0)).collect();
        let rz = zone_of(&robot, &params);
        let expected = peds
            .iter()
            .filter(|q| q.position.distance(robot.position) <= params.social_radius)
            .filter(|q| polygons_overlap(&rz, &zone_of(q, &params)))
            .count();
        let got = social_reward(&robot, &peds, &params).violations;
        check(&mut f, got == expected, format!("social scene {n}: {got} vs {expected}"));
    }
    summarize(
        f,
        format!("8000 rays (worst error {worst:.1e} m), 100 rectangle pairs ({band} inside the sampling band), 100 social scenes exact"),
    )
}

// ---------------------------------------------------------------- 3

fn calibration() -> Verdict {
    let mut f = Vec::new();
    for seed in 0..100 {
        let (beams, step) = if seed % 2 == 0 { (180, 2) } else { (1080, 4) };
        if let Err(e) = check_rotation_sequence(beams, step, 3000 + seed) {
            f.push(format!("sequence {seed}: {e}"));
        }
    }
    summarize(f, "100 rotation sequences, all 40 rows agree on unfilled beams".into())
}

// ---------------------------------------------------------------- 4

fn walker(id: u64, position: Vec2, goal: Vec2) -> Pedestrian {
    Pedestrian {
        id,
        position,
        velocity: Vec2::ZERO,
        pref_speed: 1.0,
        radius: 0.3,
        goal,
        shape: BodyShape::Circle,
        heading: (goal - position).angle(),
        behavior: Behavior::Walking,
    }
}

fn orca_sanity() -> Verdict {
    let mut f = Vec::new();
    let cfg = CrowdConfig {
        stop_go_probability: 0.0,
        ..CrowdConfig::default()
    };
    // point symmetric about the origin, slightly offset so the pair must pick a side
    let a = walker(0, Vec2::new(-4.0, 0.05), Vec2::new(16.0, 0.05));
    let b = walker(1, Vec2::new(4.0, -0.05), Vec2::new(-16.0, -0.05));
    let mut crowd = Crowd::from_pedestrians(vec![a, b], cfg.clone(), None, rng_for(4, Stream::Crowd, 0));
    let mut min_gap = f64::INFINITY;
    let mut asym: f64 = 0.0;
    let mut max_lateral: f64 = 0.0;
    for step in 0..500 {
        crowd.step(&[], 0.025);
        let [a, b] = [&crowd.pedestrians[0], &crowd.pedestrians[1]];
        asym = asym.max((a.position + b.position).norm()).max((a.velocity + b.velocity).norm());
        max_lateral = max_lateral.max(a.velocity.y.abs());
        if a.velocity.y != 0.0 {
            check(
                &mut f,
                a.velocity.y.signum() == -b.velocity.y.signum(),
                format!("step {step}: lateral velocities share a sign"),
            );
        }
        min_gap = min_gap.min(a.position.distance(b.position) - a.radius - b.radius);
    }
    let passed = crowd.pedestrians[0].position.x > 4.0 && crowd.pedestrians[1].position.x < -4.0;
    check(&mut f, asym <= 1e-9, format!("asymmetry {asym:.1e}"));
    check(&mut f, max_lateral > 0.05, "no sideways avoidance");
    check(&mut f, min_gap >= -1e-9, format!("penetration {:.2e} m", -min_gap));
    check(&mut f, passed, "agents did not pass each other");

    let crowd_cfg = CrowdConfig {
        count: 8,
        ..CrowdConfig::default()
    };
    let mut crowd = Crowd::new(crowd_cfg, None, rng_for(4, Stream::Crowd, 1));
    let steps = 10_000;
    let mut bad_steps = 0;
    for _ in 0..steps {
        crowd.step(&[], 0.025);
        let p = &crowd.pedestrians;
        let bad = (0..p.len())
            .any(|i| (i + 1..p.len()).any(|j| p[i].position.distance(p[j].position) < p[i].radius + p[j].radius - 1e-2));
        bad_steps += usize::from(bad);
    }
    let rate = bad_steps as f64 / steps as f64;
    check(&mut f, rate < 0.01, format!("penetration in {:.2}% of crowd steps", rate * 100.0));
    summarize(
        f,
        format!(
            "head-on pair symmetric to {asym:.1e}, min gap {min_gap:.3} m, peak lateral speed {max_lateral:.2} m/s; crowd of 8 penetrates in {:.2}% of 10^4 steps",
            rate * 100.0
        ),
    )
}

// ---------------------------------------------------------------- 5

fn learning_machinery() -> Verdict {
    let mut f = Vec::new();
    let tanh = OutputActivation::ScaledTanh { scale: 1.5 };
    for seed in 0..3 {
        for (kind, out, pool) in [
            (NetKind::Actor, tanh, true),
            (NetKind::Critic, OutputActivation::Linear, true),
            (NetKind::Actor, tanh, false),
            (NetKind::Critic, OutputActivation::Linear, false),
        ] {
            if let Err(e) = check_gradients(kind, &tiny_spec(out, pool), seed) {
                f.push(format!("{kind:?} pool={pool}: {e}"));
            }
        }
    }

    let mut agent = tiny_agent(0.0, 0.005, 9);
    let batch = tiny_train_batch(16, 0.0, 10);
    let first = agent.critic_loss(&batch).unwrap();
    let mut prev = first;
    for i in 0..100 {
        agent.update(&batch).unwrap();
        let loss = agent.critic_loss(&batch).unwrap();
        check(&mut f, loss < prev, format!("frozen-batch update {i}: {loss} >= {prev}"));
        prev = loss;
    }

    let meta = CheckpointMeta {
        stage: Stage::Ego,
        network: agent.actor.spec.clone(),
        input: [ROWS, BEAMS],
        ddpg: agent.params.clone(),
        env_steps: 0,
        updates: agent.updates,
        episodes: 0,
        config_hash: String::new(),
    };
    let ckpt = Checkpoint::from_agent(&agent, meta);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ckpt");
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    check(&mut f, loaded == ckpt, "checkpoint differs after reload");
    let before = agent.actor.forward(batch.obs.scans.view(), batch.obs.goals.view(), None).unwrap();
    let after = loaded.actor().unwrap().forward(batch.obs.scans.view(), batch.obs.goals.view(), None).unwrap();
    check(
        &mut f,
        before.iter().zip(&after).all(|(x, y)| x.to_bits() == y.to_bits()),
        "reloaded actor output differs",
    );
    summarize(
        f,
        format!("12 gradient checks, critic loss {first:.3e} -> {prev:.3e} strictly decreasing, checkpoint bitwise"),
    )
}

// ---------------------------------------------------------------- 6, 7

struct Trained {
    ego: Checkpoint,
    social: Option<Checkpoint>,
    ego_time: Duration,
    social_time: Duration,
}

fn train_policies() -> Trained {
    let env = desk_env();
    let cfg = TrainConfig {
        budget: EGO_BUDGET,
        seed: TRAIN_SEED,
        ..TrainConfig::desk()
    };
    let t = Instant::now();
    let ego = train(&cfg, Stage::Ego, &env, None, true, &mut NullSink).expect("ego training");
    let ego_time = t.elapsed();
    let t = Instant::now();
    let social_cfg = TrainConfig {
        budget: SOCIAL_BUDGET,
        ..cfg
    };
    let social = train(&social_cfg, Stage::Social, &env, Some(&ego.checkpoint), true, &mut NullSink)
        .map(|o| o.checkpoint)
        .map_err(|e| eprintln!("social training failed: {e}"))
        .ok();
    Trained {
        ego: ego.checkpoint,
        social,
        ego_time,
        social_time: t.elapsed(),
    }
}

fn ego_vs_greedy(t: &Trained) -> Verdict {
    let base = desk_env();
    let ego = ActorPolicy::from_checkpoint("ego", &t.ego).unwrap();
    let greedy = GreedyPolicy {
        params: GreedyParams::default(),
        lidar: base.lidar.clone(),
    };
    let rate = |p: &dyn socnav::policy::Policy| {
        compute_metrics(&run_suite(p, &Suite::Mapless, &base, 10, HELD_OUT_SEED, true).unwrap())
            .unwrap()
            .success_rate
    };
    let (e, g) = (rate(&ego), rate(&greedy));
    Verdict::new(
        e >= g && g >= 50.0,
        format!(
            "ego {e:.0}% vs greedy {g:.0}% on 10 held-out maps (ego trained {EGO_BUDGET} steps in {:.0?})",
            t.ego_time
        ),
    )
}

fn social_vs_ego(t: &Trained) -> Verdict {
    let Some(social) = &t.social else {
        return Verdict::new(false, "social stage did not train");
    };
    let base = desk_env();
    let suite = Suite::Crowd {
        kind: ScenarioKind::Crossing,
        count: 8,
    };
    let score = |c: &Checkpoint| {
        let p = ActorPolicy::from_checkpoint("p", c).unwrap();
        compute_metrics(&run_suite(&p, &suite, &base, 20, CROSSING_SEED, true).unwrap()).unwrap()
    };
    let (s, e) = (score(social), score(&t.ego));
    Verdict::new(
        s.social_score >= e.social_score,
        format!(
            "social score {:.2} (social policy, success {:.0}%) vs {:.2} (ego policy, success {:.0}%) over 20 crossing runs (social stage {SOCIAL_BUDGET} steps in {:.0?})",
            s.social_score, s.success_rate, e.social_score, e.success_rate, t.social_time
        ),
    )
}

// ---------------------------------------------------------------- 8

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Process::new(env!("CARGO_BIN_EXE_socnav"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Verdict {
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("c.toml");
    fs::write(&cfg, "[train]\nbudget = 0\n").unwrap();
    let train_dir = work.path().join("train");
    let p = |x: &Path| x.to_str().unwrap().to_string();
    if let Err(e) = cli(&["train", "--stage", "ego", "--config", &p(&cfg), "--out", &p(&train_dir)]) {
        return Verdict::new(false, format!("train failed: {e}"));
    }
    let ckpt = p(&train_dir.join("ego.ckpt"));
    let mut f = Vec::new();
    let mut files = 0;
    for policy in ["greedy", ckpt.as_str()] {
        let runs: Vec<_> = (0..2)
            .map(|i| {
                let out = work.path().join(format!("{}-{i}", if policy == "greedy" { "g" } else { "c" }));
                cli(&[
                    "eval",
                    "--config",
                    &p(&cfg),
                    "--policy",
                    policy,
                    "--suite",
                    "combined:crossing:8",
                    "--runs",
                    "10",
                    "--seed",
                    "8",
                    "--single-thread",
                    "--out",
                    &p(&out),
                ])
                .map(|_| dir_bytes(&out))
            })
            .collect();
        match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) => {
                files += a.len();
                check(&mut f, a == b, format!("{policy}: outputs differ"));
            }
            (Err(e), _) | (_, Err(e)) => f.push(format!("{policy}: eval failed: {e}")),
        }
    }
    summarize(f, format!("two invocations per policy (greedy, checkpoint) byte-identical across {files} files"))
}

fn main() {
    let mut all_ok = true;
    let mut report = |n: usize, name: &str, v: Verdict| {
        all_ok &= v.ok;
        println!("criterion {n} [{name}]: {} - {}", if v.ok { "PASS" } else { "FAIL" }, v.detail);
    };
    let timed = |limit: u64, run: fn() -> Verdict| {
        let t = Instant::now();
        let v = run();
        within_time(v, t.elapsed(), Duration::from_secs(limit))
    };

    report(1, "reward formulas", timed(10, reward_formulas));
    report(2, "geometry oracles", timed(120, geometry_oracles));
    report(3, "calibration", timed(30, calibration));
    report(4, "ORCA sanity", timed(60, orca_sanity));
    report(5, "learning machinery", timed(120, learning_machinery));
    let trained = train_policies();
    report(6, "ego vs greedy", ego_vs_greedy(&trained));
    report(7, "social score ordering", social_vs_ego(&trained));
    report(8, "determinism", timed(60, determinism));
    if !all_ok {
        std::process::exit(1);
    }
}
