use skillweave::env::*;
use skillweave::expert::*;
use skillweave::harness::*;
use skillweave::numkit::{SeededRng, SimplexVector};
use skillweave::planner::WorldModelConfig;
use skillweave::router::*;
use std::time::Instant;

fn desk(steps: usize, hyper: RewardHyper) -> TrainConfig {
    TrainConfig {
        steps,
        warmup_steps: 600,
        warmup_action_hold: 15,
        actor_delay_updates: 1500,
        eval_interval: steps,
        eval_episodes: 3,
        episode_len: Some(200),
        gamma: 0.99,
        lr_policy: 3e-4,
        policy_adam_eps: 1e-3,
        lr_value: 1e-3,
        polyak_rate: 0.01,
        reward_hyper: hyper,
        world: WorldModelConfig { latent_dim: 16, encoder_hidden: vec![32], model_hidden: vec![32] },
        policy_hidden: vec![32, 32],
        value_hidden: vec![32, 32],
        ..TrainConfig::default()
    }
}

fn arrival_step(trace: &skillweave::env::EpisodeTrace, target: [f64; 2], radius: f64) -> Option<usize> {
    for s in &trace.states {
        let d = ((s.q[0] - target[0]).powi(2) + (s.q[1] - target[1]).powi(2)).sqrt();
        if d < radius { return Some(s.t); }
    }
    None
}

fn main() {
    let t0 = Instant::now();
    let skills = [Skill::Stand, Skill::Walk, Skill::Reach];
    let door = composite_door_env();
    let w = match &door.kind { EnvKind::CompositeDoor(p) => p.waypoint, _ => unreachable!() };

    for (label, hyper) in [
        ("bv1.0 lv0.5", RewardHyper { w_scale: 1.0, alpha_pos: 2.0, beta_vel: 1.0, lambda_vel: 0.5 }),
        ("bv1.5 lv0.75", RewardHyper { w_scale: 1.0, alpha_pos: 2.0, beta_vel: 1.5, lambda_vel: 0.75 }),
    ] {
        let mut experts = Vec::new();
        for skill in skills {
            let spec = skill_env(skill);
            let reference = spec.reference.clone().unwrap();
            let (e, c) = train_expert(&spec, Some(&reference), skill, &desk(4000, hyper), 0).unwrap();
            print!("{label} {skill}: {:.0}->{:.0}  ", c.first().unwrap().mean_return, c.last().unwrap().mean_return);
            experts.push(e);
        }
        println!();
        // Solo arrival + success.
        for (i, skill) in skills.iter().enumerate() {
            let mut arr = vec![];
            let mut succ = 0;
            let root = SeededRng::new(50);
            for ep in 0..5 {
                let mut rng = root.derive(ep);
                let mut weigher = |_o: &[f64], _p: f64| Ok(SimplexVector::one_hot(3, i));
                let (trace, _) = rollout_routed(&door, &experts, &mut weigher, &mut rng).unwrap();
                arr.push(arrival_step(&trace, w, 0.3));
                if success(&door, &trace) { succ += 1; }
            }
            println!("  solo {skill:>5}: arrivals {arr:?} succ {succ}/5");
        }
        // Rule schedule.
        let sched = parse_schedule("0.17(S) -> 0.74(W) -> 2.0(R)", &default_letter_map()).unwrap();
        let mut succ = 0;
        let mut arr = vec![];
        let root = SeededRng::new(60);
        for ep in 0..6 {
            let mut rng = root.derive(ep);
            let mut weigher = |_o: &[f64], phase: f64| {
                let skill = sched.skill_at_progress(phase);
                let idx = skills.iter().position(|&x| x == skill).unwrap();
                Ok(SimplexVector::one_hot(3, idx))
            };
            let (trace, _) = rollout_routed(&door, &experts, &mut weigher, &mut rng).unwrap();
            arr.push(arrival_step(&trace, w, 0.3));
            if success(&door, &trace) { succ += 1; }
        }
        println!("  rule-schedule: arrivals {arr:?} succ {succ}/6");
    }
    println!("elapsed {:.1?}", t0.elapsed());
}
