//! Acceptance checks, one PASS/FAIL line each.
//!
//! Pass criterion names as arguments to run a subset, for example
//! `cargo test --test acceptance -- sliding horizon`.

use std::time::Instant;

use multigoal_core::agent::replay::{her_relabel_all, Batch, Episode};
use multigoal_core::agent::{AgentConfig, Ddpg, Mlp, Trainer};
use multigoal_core::curriculum::CurriculumSchedule;
use multigoal_core::env::{compute_reward, make_env, EnvConfig, Task};
use multigoal_core::harness::{run_benchmark, RunConfig};
use multigoal_core::sim::{step_world, Block, GripperCommand, SimParams, WorldState, PUCK_HEIGHT};
use multigoal_core::{init_schedule, Vec3, TABLE_CENTRE};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Outcome;

const SEEDS: [u64; 4] = [0, 1, 2, 3];

fn reward_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut sparse_bad, mut dense_err) = (0usize, 0.0f64);
    let mut near = 0usize;
    for i in 0..100_000 {
        let dim = [3, 4, 6, 7, 16][i % 5];
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.3..0.3)).collect();
        let scale = rng.random_range(0.0..0.2);
        let d: Vec<f64> = a
            .iter()
            .map(|x| x + scale * rng.random_range(-1.0..1.0))
            .collect();
        let delta = rng.random_range(0.01..0.2);
        let mut sq = 0.0;
        for k in 0..dim {
            sq += (a[k] - d[k]) * (a[k] - d[k]);
        }
        let dist = sq.sqrt();
        near += usize::from(dist <= delta);
        let want_sparse = if dist > delta { -1.0 } else { 0.0 };
        let got_sparse = compute_reward(&a, &d, delta, true).unwrap();
        sparse_bad += usize::from(got_sparse != want_sparse);
        let got_dense = compute_reward(&a, &d, delta, false).unwrap();
        dense_err = dense_err.max((got_dense + dist).abs());
    }
    outcome(
        sparse_bad == 0 && dense_err <= 1e-12,
        format!(
            "100000 pairs ({near} within threshold): sparse mismatches {sparse_bad}, max dense error {dense_err:.1e} (tol 1e-12)"
        ),
    )
}

fn her_enumeration() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let delta = 0.05;
    let reward = |a: &[f64], d: &[f64]| compute_reward(a, d, delta, true).unwrap();
    let mut checked = 0usize;
    let mut problems = Vec::new();
    for trial in 0..200 {
        let n = 1 + trial % 5;
        let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let base = rng.random_range(0..3) as f64 * 0.03;
            vec![base, rng.random_range(0.0..0.04), 0.0]
        };
        let ep = Episode {
            obs: (0..=n).map(|t| vec![t as f64, trial as f64]).collect(),
            achieved: (0..=n).map(|_| point(&mut rng)).collect(),
            actions: (0..n).map(|t| vec![t as f64 * 0.1]).collect(),
            goal: point(&mut rng),
        };
        let got = her_relabel_all(&ep, &reward);
        let mut want: Vec<(usize, Vec<f64>)> = Vec::new();
        for t in 0..n {
            want.push((t, ep.goal.clone()));
            for tp in t + 1..=n {
                want.push((t, ep.achieved[tp].clone()));
            }
        }
        let key = |t: usize, g: &[f64]| format!("{t}:{g:?}");
        let mut got_keys: Vec<String> = got
            .iter()
            .map(|tr| key(tr.state[0] as usize, &tr.desired_goal))
            .collect();
        let mut want_keys: Vec<String> = want.iter().map(|(t, g)| key(*t, g)).collect();
        got_keys.sort();
        want_keys.sort();
        if got_keys != want_keys {
            problems.push(format!("length {n}: transition set differs"));
        }
        for tr in &got {
            let t = tr.state[0] as usize;
            let ok = tr.next_state == ep.obs[t + 1]
                && tr.action == ep.actions[t]
                && tr.achieved_goal_next == ep.achieved[t + 1]
                && tr.reward
                    == compute_reward(&ep.achieved[t + 1], &tr.desired_goal, delta, true).unwrap();
            if !ok {
                problems.push(format!("length {n}: inconsistent transition at t = {t}"));
            }
        }
        checked += got.len();
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        problems.is_empty() && secs < 1.0,
        format!(
            "200 episodes of length 1..=5, {checked} transitions, {} problems, {secs:.3}s (limit 1s){}",
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn fd_relative_error(loss: &dyn Fn(&Mlp) -> f64, net: &Mlp, analytic: &[f64]) -> f64 {
    let p = net.flat();
    let h = 1e-5;
    let mut q = net.clone();
    let mut pp = p.clone();
    let mut diff = 0.0;
    let (mut na, mut nf) = (0.0, 0.0);
    for i in 0..p.len() {
        pp[i] = p[i] + h;
        q.set_flat(&pp).unwrap();
        let up = loss(&q);
        pp[i] = p[i] - h;
        q.set_flat(&pp).unwrap();
        let down = loss(&q);
        pp[i] = p[i];
        let fd = (up - down) / (2.0 * h);
        diff += (analytic[i] - fd).powi(2);
        na += analytic[i] * analytic[i];
        nf += fd * fd;
    }
    diff.sqrt() / na.sqrt().max(nf.sqrt()).max(1e-300)
}

fn gradient_check() -> Outcome {
    let (obs, goal, act, n) = (10, 3, 4, 16);
    let (mut worst_actor, mut worst_critic) = (0.0f64, 0.0f64);
    for draw in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + draw);
        let cfg = AgentConfig {
            hidden: vec![16, 16],
            action_l2: rng.random_range(0.0..2.0),
            ..AgentConfig::default()
        };
        let mut agent = Ddpg::new(obs, goal, act, 50, &cfg, &mut rng);
        for _ in 0..20 {
            let o: Vec<f64> = (0..obs).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g: Vec<f64> = (0..goal).map(|_| rng.random_range(-0.5..0.5)).collect();
            agent.o_norm.update(&o);
            agent.g_norm.update(&g);
        }
        let mut m = |c: usize, lo: f64, hi: f64| {
            Array2::from_shape_simple_fn((n, c), || rng.random_range(lo..hi))
        };
        let batch = Batch {
            obs: m(obs, -2.0, 2.0),
            next_obs: m(obs, -2.0, 2.0),
            goals: m(goal, -0.5, 0.5),
            actions: m(act, -1.0, 1.0),
            rewards: (0..n).map(|i| -((i % 2) as f64)).collect(),
        };
        let y: Vec<f64> = (0..n).map(|i| -(i as f64) * 0.7).collect();
        let (_, gc) = agent.critic_loss_grad(&batch, &y).unwrap();
        let critic_loss = |net: &Mlp| {
            let mut a = agent.clone();
            a.critic = net.clone();
            a.critic_loss_grad(&batch, &y).unwrap().0
        };
        worst_critic = worst_critic.max(fd_relative_error(&critic_loss, &agent.critic, &gc.flat()));
        let (_, ga) = agent.actor_loss_grad(&batch).unwrap();
        let actor_loss = |net: &Mlp| {
            let mut a = agent.clone();
            a.actor = net.clone();
            a.actor_loss_grad(&batch).unwrap().0
        };
        worst_actor = worst_actor.max(fd_relative_error(&actor_loss, &agent.actor, &ga.flat()));
    }
    outcome(
        worst_actor <= 1e-4 && worst_critic <= 1e-4,
        format!("100 draws: worst relative error actor {worst_actor:.2e}, critic {worst_critic:.2e} (tol 1e-4)"),
    )
}

/// Episode length: 50 for single-step tasks; multi-step tasks add 25 per
/// block beyond the smallest goal (one block for stacking and rearranging,
/// zero blocks with only the door for the chest tasks).
fn horizon_oracle(task: Task, n: usize) -> usize {
    match task {
        Task::Reach | Task::Push | Task::Slide | Task::PickAndPlace => 50,
        Task::BlockStack | Task::BlockRearrange => 50 + 25 * (n - 1),
        Task::ChestPickAndPlace | Task::ChestPush => 50 + 25 * n,
    }
}

fn horizon_law() -> Outcome {
    let mut bad = Vec::new();
    let mut cases = 0;
    for task in Task::ALL {
        let (lo, hi) = task.block_range();
        for n in lo..=hi {
            cases += 1;
            let mut env = make_env(EnvConfig::new(task).with_blocks(n)).unwrap();
            env.reset().unwrap();
            let mut steps = 0;
            let a = vec![0.0; env.action_dim()];
            while !env.step(&a).unwrap().done {
                steps += 1;
            }
            steps += 1;
            let want = horizon_oracle(task, n);
            if env.horizon() != want || steps != want {
                bad.push(format!(
                    "{task}/{n}: horizon {} ran {steps}, want {want}",
                    env.horizon()
                ));
            }
        }
    }
    let stack2 = make_env(EnvConfig::new(Task::BlockStack).with_blocks(2))
        .unwrap()
        .horizon();
    outcome(
        bad.is_empty() && stack2 == 75,
        format!(
            "{cases} task/block combinations, two-block stacking = {stack2}; {} mismatches {bad:?}",
            bad.len()
        ),
    )
}

/// Probability vector the schedule must show after `generated` goals.
fn schedule_oracle(quotas: &[u64], generated: &[u64]) -> Vec<f64> {
    let l = quotas.len();
    let mut p = vec![0.0; l];
    let Some(lo) = (0..l).find(|&i| generated[i] < quotas[i]) else {
        return p;
    };
    let next = (lo + 1..l).find(|&i| generated[i] < quotas[i]);
    match next {
        Some(nx) if generated[lo] * 2 > quotas[lo] => {
            p[lo] = 0.5;
            p[nx] = 0.5;
        }
        _ => p[lo] = 1.0,
    }
    p
}

/// Whether a deduplicated probability trace starts at `{1.0}` on level 0,
/// only ever moves `{1.0 at l}` → `{0.5, 0.5 at l, l+1}` → `{1.0 at l+1}` or
/// `{0.5, 0.5 at l+1, l+2}`, visits every level and ends all zero.
fn trace_is_valid(trace: &[Vec<f64>], levels: usize) -> bool {
    let state = |p: &Vec<f64>| -> Option<(usize, bool)> {
        let active: Vec<usize> = (0..levels).filter(|&l| p[l] > 0.0).collect();
        match active.as_slice() {
            [] => None,
            [l] if p[*l] == 1.0 => Some((*l, false)),
            [l, m] if *m == l + 1 && p[*l] == 0.5 && p[*m] == 0.5 => Some((*l, true)),
            _ => Some((usize::MAX, false)),
        }
    };
    let states: Vec<Option<(usize, bool)>> = trace.iter().map(state).collect();
    if states.first() != Some(&Some((0, false))) || states.last() != Some(&None) {
        return false;
    }
    let last = levels - 1;
    states.windows(2).all(|w| match (w[0], w[1]) {
        (Some((l, false)), Some((m, true))) => m == l,
        (Some((l, true)), Some((m, false))) => m == l + 1,
        (Some((l, true)), Some((m, true))) => m == l + 1,
        (Some((l, false)), None) => l == last,
        _ => false,
    })
}

fn curriculum_schedule() -> Outcome {
    let mut problems = Vec::new();
    let cases = [
        (Task::ChestPush, 1, 1000u64),
        (Task::BlockStack, 2, 2000),
        (Task::BlockRearrange, 3, 1001),
        (Task::ChestPickAndPlace, 5, 12_345),
        (Task::BlockStack, 5, 100_000),
    ];
    for (i, &(task, n, total)) in cases.iter().enumerate() {
        let mut s = init_schedule(task, n, total).unwrap();
        let levels = s.num_levels();
        let base = total / levels as u64;
        let mut want_q = vec![base; levels];
        want_q[levels - 1] = total - base * (levels as u64 - 1);
        if s.quotas() != want_q.as_slice() {
            problems.push(format!(
                "{task}/{n}: quotas {:?} want {want_q:?}",
                s.quotas()
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let mut trace: Vec<Vec<f64>> = vec![s.probs().to_vec()];
        let mut lowest = 0;
        let mut count = 0u64;
        while !s.is_finished() {
            let lv = s.sample_level(&mut rng).unwrap();
            s.record_and_update(lv).unwrap();
            count += 1;
            let p = s.probs().to_vec();
            if p != schedule_oracle(s.quotas(), s.generated()) {
                problems.push(format!(
                    "{task}/{n}: probabilities {p:?} after {count} goals"
                ));
                break;
            }
            let sum: f64 = p.iter().sum();
            let active: Vec<usize> = (0..levels).filter(|&l| p[l] > 0.0).collect();
            if !s.is_finished() && (sum != 1.0 || active.len() > 2 || active[0] < lowest) {
                problems.push(format!(
                    "{task}/{n}: invariant broken after {count} goals: {p:?}"
                ));
                break;
            }
            if let Some(&a) = active.first() {
                lowest = a;
            }
            if trace.last() != Some(&p) {
                trace.push(p);
            }
        }
        if count != total || s.generated() != want_q.as_slice() {
            problems.push(format!(
                "{task}/{n}: generated {:?} in {count} draws",
                s.generated()
            ));
        }
        if !trace_is_valid(&trace, levels) {
            problems.push(format!("{task}/{n}: trace {trace:?}"));
        }
    }
    let mut cfg = EnvConfig::new(Task::BlockStack).with_blocks(2);
    cfg.use_curriculum = true;
    cfg.num_goals_to_generate = 600;
    let mut env = make_env(cfg).unwrap();
    let mut levels_seen = [0u64; 2];
    for _ in 0..600 {
        env.reset().unwrap();
        let a = vec![0.0; env.action_dim()];
        let t = env.step(&a).unwrap();
        levels_seen[t.info.level.unwrap()] += 1;
    }
    let sched: &CurriculumSchedule = env.schedule().unwrap();
    if levels_seen != [300, 300] || sched.generated() != [300, 300] || !sched.is_finished() {
        problems.push(format!("environment resets generated {levels_seen:?}"));
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} schedules plus 600 environment resets: {} problems{}",
            cases.len(),
            problems.len(),
            problems
                .first()
                .map(|p| format!("; first: {p}"))
                .unwrap_or_default()
        ),
    )
}

fn epochs_for(episodes: usize, cfg: &AgentConfig) -> usize {
    episodes / cfg.episodes_per_epoch()
}

fn single_step_learning() -> Outcome {
    let cfg = AgentConfig::desk();
    let mut reach = Vec::new();
    let mut reach_ok = true;
    for seed in SEEDS {
        let t0 = Instant::now();
        let mut t = Trainer::new(EnvConfig::new(Task::Reach), cfg.clone(), seed).unwrap();
        let mut hit = None;
        for _ in 0..epochs_for(5000, &cfg) {
            let s = t.run_epoch().unwrap();
            if s.test_success_rate >= 0.95 {
                hit = Some(s.episodes_seen);
                break;
            }
        }
        let secs = t0.elapsed().as_secs_f64();
        reach_ok &= hit.is_some() && secs <= 900.0;
        reach.push(match hit {
            Some(e) => format!("seed {seed}: {e} episodes {secs:.0}s"),
            None => format!("seed {seed}: not reached in 5000 episodes ({secs:.0}s)"),
        });
    }
    let final_rate = |her_k: usize| {
        let c = AgentConfig {
            her_k,
            ..cfg.clone()
        };
        let mut t = Trainer::new(EnvConfig::new(Task::PickAndPlace), c.clone(), 0).unwrap();
        for _ in 0..epochs_for(20_000, &c) {
            t.run_epoch().unwrap();
        }
        (t.evaluate(200).unwrap().0, t.episodes_seen)
    };
    let (her, eh) = final_rate(cfg.her_k);
    let (plain, ep) = final_rate(0);
    let gap = her - plain;
    outcome(
        reach_ok && gap >= 0.3 && eh == 20_000 && ep == 20_000,
        format!(
            "Reach >= 0.95: [{}]; PickAndPlace after 20000 episodes (200 greedy test episodes): HER {her:.3}, no HER {plain:.3}, gap {gap:.3} (need >= 0.3)",
            reach.join(", ")
        ),
    )
}

fn multi_step_without_curriculum() -> Outcome {
    let cfg = AgentConfig::desk();
    let env = EnvConfig::new(Task::BlockStack).with_blocks(2);
    let mut peaks = Vec::new();
    for seed in SEEDS {
        let mut t = Trainer::new(env.clone(), cfg.clone(), seed).unwrap();
        let mut peak = 0.0f64;
        for _ in 0..epochs_for(20_000, &cfg) {
            peak = peak.max(t.run_epoch().unwrap().test_success_rate);
        }
        assert_eq!(t.episodes_seen, 20_000);
        peaks.push(peak);
    }
    outcome(
        peaks.iter().all(|&p| p <= 0.05),
        format!("two-block stacking, 20000 episodes per seed, peak test success per seed {peaks:?} (limit 0.05)"),
    )
}

fn chest_curriculum_level0() -> Outcome {
    let cfg = AgentConfig::desk();
    let mut env = EnvConfig::new(Task::ChestPush).with_blocks(1);
    env.use_curriculum = true;
    env.num_goals_to_generate = 16_000;
    let mut results = Vec::new();
    let mut ok = true;
    for seed in SEEDS {
        let mut t = Trainer::new(env.clone(), cfg.clone(), seed).unwrap();
        let mut best = 0.0f64;
        let mut reached = None;
        loop {
            let s = t.run_epoch().unwrap();
            if s.level_probs.as_deref() != Some(&[1.0, 0.0][..]) {
                break;
            }
            best = best.max(s.test_success_rate);
            if s.test_success_rate >= 0.5 {
                reached = Some(s.episodes_seen);
                break;
            }
        }
        ok &= reached.is_some();
        results.push(match reached {
            Some(e) => format!("seed {seed}: {e} episodes"),
            None => format!("seed {seed}: best {best:.2} before level 1 began"),
        });
    }
    outcome(
        ok,
        format!(
            "door-opening phase reaches test success >= 0.5: [{}]",
            results.join(", ")
        ),
    )
}

fn sliding_stopping_distance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v0 = rng.random_range(0.2..1.0);
        let mu = rng.random_range(0.3..1.0);
        let angle = rng.random_range(0.6..2.5) + std::f64::consts::FRAC_PI_2;
        let dir = Vec3::new(angle.cos(), angle.sin(), 0.0);
        let p = SimParams {
            dt: 1e-4,
            friction: mu,
            ..SimParams::default()
        };
        let mut w = WorldState::new(TABLE_CENTRE + Vec3::new(0.1, 0.0, 0.1), 0.04);
        let start = TABLE_CENTRE + Vec3::new(-0.05, 0.0, PUCK_HEIGHT / 2.0);
        let mut puck = Block::puck(start);
        puck.velocity = dir * v0;
        w.blocks.push(puck);
        let still = GripperCommand::cartesian(Vec3::ZERO);
        let mut steps = 0;
        while w.blocks[0].velocity.norm() > 0.0 {
            w = step_world(&w, &still, &p).unwrap();
            steps += 1;
            assert!(steps < 10_000_000);
        }
        let d = (w.blocks[0].position() - start).norm();
        let analytic = v0 * v0 / (2.0 * mu * p.gravity);
        worst = worst.max((d - analytic).abs() / analytic);
    }
    outcome(
        worst <= 0.01,
        format!("20 launches at dt = 1e-4: worst relative error {worst:.2e} (tol 1e-2)"),
    )
}

fn benchmark_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let runs: Vec<_> = dirs
        .iter()
        .map(|d| {
            run_benchmark(&RunConfig::new(
                EnvConfig::new(Task::Reach),
                AgentConfig::desk(),
                5,
                d.path(),
            ))
            .unwrap()
        })
        .collect();
    let files: Vec<_> = runs[0]
        .seed_csvs
        .iter()
        .chain(&runs[0].aggregates)
        .collect();
    let others: Vec<_> = runs[1]
        .seed_csvs
        .iter()
        .chain(&runs[1].aggregates)
        .collect();
    let mut same = files.len() == 5 && others.len() == 5;
    let mut bytes = 0;
    for (a, b) in files.iter().zip(&others) {
        let (x, y) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        bytes += x.len();
        same &= x == y && a.file_name() == b.file_name();
    }
    outcome(
        same,
        format!("4-seed Reach benchmark run twice, 5 epochs: {} CSV files ({bytes} bytes) identical = {same}", files.len()),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria: [(&str, Check); 10] = [
        ("reward_oracle", reward_oracle),
        ("her_enumeration", her_enumeration),
        ("gradient_check", gradient_check),
        ("horizon_law", horizon_law),
        ("curriculum_schedule", curriculum_schedule),
        ("sliding_stopping_distance", sliding_stopping_distance),
        ("benchmark_determinism", benchmark_determinism),
        ("chest_curriculum_level0", chest_curriculum_level0),
        ("single_step_learning", single_step_learning),
        (
            "multi_step_without_curriculum",
            multi_step_without_curriculum,
        ),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let o = check();
        ran += 1;
        failed += usize::from(!o.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
