//! Router distillation: gradient descent on the combined task-level and
//! demonstration-level losses over states drawn half from on-router rollouts
//! and half from the demonstrations.

use serde::{Deserialize, Serialize};

use crate::env::trace::EpisodeTrace;
use crate::env::{observe, reset, step, EnvSpec};
use crate::error::{Error, Result};
use crate::expert::{CurvePoint, TrainedExpert};
use crate::numkit::{kl_categorical, softmax, Adam, NetGrads, SeededRng, SimplexVector};
use crate::planner::concat;
use crate::router::{
    compose_action, demo_loss, demo_prior, task_loss, task_loss_logit_grad, DemoSet,
    PhaseSchedule, Router, RouterLossCfg, SemanticOracle,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterTrainConfig {
    /// Gradient iterations; zero leaves the router at initialization.
    pub iters: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: Vec<usize>,
    /// Collect a fresh on-router episode every this many iterations.
    pub rollout_interval: usize,
    /// Cap on pooled rollout states.
    pub rollout_pool: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub loss: RouterLossCfg,
    pub episode_len: Option<usize>,
}

impl Default for RouterTrainConfig {
    fn default() -> Self {
        Self {
            iters: 600,
            batch_size: 64,
            lr: 3e-3,
            hidden: vec![32],
            rollout_interval: 50,
            rollout_pool: 4096,
            eval_interval: 150,
            eval_episodes: 4,
            loss: RouterLossCfg::default(),
            episode_len: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RouterTrainOutcome {
    pub router: Router,
    /// Task return of the routed mixture at evaluation intervals.
    pub curve: Vec<CurvePoint>,
    /// (iteration, unified loss) per iteration.
    pub loss_curve: Vec<(usize, f64)>,
    /// The demonstration prior actually distilled against.
    pub demo_schedule: PhaseSchedule,
}

/// Run one episode with per-step weights from `weigher(obs, phase)`,
/// composing expert mean actions. Returns the trace and the argmax expert
/// index at each step.
pub fn rollout_routed<F>(
    spec: &EnvSpec,
    experts: &[TrainedExpert],
    weigher: &mut F,
    rng: &mut SeededRng,
) -> Result<(EpisodeTrace, Vec<usize>)>
where
    F: FnMut(&[f64], f64) -> Result<SimplexVector>,
{
    let mut s = reset(spec, rng);
    let mut trace = EpisodeTrace::new(s.clone());
    let mut labels = Vec::new();
    loop {
        let obs = observe(spec, &s);
        let w = weigher(&obs, s.phase)?;
        labels.push(w.argmax());
        let action = compose_action(experts, &w, &obs, &spec.action_limits)?;
        let r = step(spec, &s, &action)?;
        trace.push(action, &r);
        s = r.next;
        if r.done {
            break;
        }
    }
    Ok((trace, labels))
}

fn evaluate_router(
    spec: &EnvSpec,
    experts: &[TrainedExpert],
    router: &Router,
    embedding: &[f64],
    episodes: usize,
    root: &SeededRng,
    at_step: usize,
) -> Result<CurvePoint> {
    let mut returns = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut rng = root.derive(0x00EE_0000 + ep as u64);
        let mut weigher = |obs: &[f64], _phase: f64| router.route(obs, embedding);
        let (trace, _) = rollout_routed(spec, experts, &mut weigher, &mut rng)?;
        returns.push(trace.total_reward());
    }
    let n = returns.len();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let stderr = if n < 2 {
        0.0
    } else {
        let var = returns.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Ok(CurvePoint {
        step: at_step,
        mean_return: mean,
        stderr,
    })
}

/// Average `KL(route(s) || prior at s's phase)` over a set of states. Used
/// to measure distillation progress on held-out demonstration states.
pub fn mean_demo_kl(
    router: &Router,
    embedding: &[f64],
    states: &[(Vec<f64>, f64)],
    schedule: &PhaseSchedule,
) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptyInput("demo states"));
    }
    let mut acc = 0.0;
    for (obs, phase) in states {
        let w = router.route(obs, embedding)?;
        acc += kl_categorical(&w, schedule.at_phase(*phase));
    }
    Ok(acc / states.len() as f64)
}

/// Distill the router against the oracle's task prior and the demonstration
/// prior. The demonstration prior is computed from the labeled demos when
/// any are given; otherwise the oracle's stored schedule is used directly.
/// Deterministic given the seed. Experts stay frozen throughout.
pub fn train_router(
    experts: &[TrainedExpert],
    spec: &EnvSpec,
    oracle: &SemanticOracle,
    demos: &DemoSet,
    cfg: &RouterTrainConfig,
    seed: u64,
) -> Result<RouterTrainOutcome> {
    if experts.is_empty() {
        return Err(Error::EmptyInput("expert pool"));
    }
    if oracle.n_experts() != experts.len() {
        return Err(Error::ShapeMismatch {
            what: "oracle expert count",
            expected: experts.len(),
            got: oracle.n_experts(),
        });
    }
    oracle.validate()?;
    cfg.loss.validate()?;
    let mut spec = spec.clone();
    if let Some(len) = cfg.episode_len {
        spec.episode_len = len;
    }
    spec.validate()?;

    let k = experts.len();
    let schedule = if demos.is_empty() {
        oracle.demo_prior.clone()
    } else {
        demo_prior(demos, k, cfg.loss.n_phase_bins)?
    };

    // Demo states: observation and phase at each labeled decision point.
    let mut demo_states: Vec<(Vec<f64>, f64)> = Vec::with_capacity(demos.n_steps());
    for ep in &demos.episodes {
        for i in 0..ep.labels.len() {
            let st = &ep.trace.states[i];
            demo_states.push((observe(&spec, st), st.phase));
        }
    }

    let root = SeededRng::new(seed);
    let mut init_rng = root.derive(1);
    let mut router = Router::init(
        crate::env::OBS_DIM,
        oracle.embedding.len(),
        k,
        &cfg.hidden,
        &mut init_rng,
    )?;
    let mut opt = Adam::new(router.net.param_count(), cfg.lr);
    let mut rollout_rng = root.derive(2);
    let mut batch_rng = root.derive(3);

    let mut rollout_states: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut loss_curve = Vec::with_capacity(cfg.iters);
    let mut curve = Vec::new();
    curve.push(evaluate_router(
        &spec,
        experts,
        &router,
        &oracle.embedding,
        cfg.eval_episodes,
        &root,
        0,
    )?);

    for t in 0..cfg.iters {
        if cfg.rollout_interval > 0 && t % cfg.rollout_interval == 0 {
            let frozen = router.clone();
            let emb = oracle.embedding.clone();
            let mut weigher = move |obs: &[f64], _phase: f64| frozen.route(obs, &emb);
            let (trace, _) = rollout_routed(&spec, experts, &mut weigher, &mut rollout_rng)?;
            for i in 0..trace.len() {
                let st = &trace.states[i];
                rollout_states.push((observe(&spec, st), st.phase));
            }
            if rollout_states.len() > cfg.rollout_pool {
                let drop = rollout_states.len() - cfg.rollout_pool;
                rollout_states.drain(..drop);
            }
        }

        let mut grads = NetGrads::zeros_like(&router.net);
        let mut l_task_sum = 0.0;
        let mut l_demo_sum = 0.0;
        let b = cfg.batch_size.max(1);
        for i in 0..b {
            let use_rollout = i % 2 == 1 && !rollout_states.is_empty();
            let (obs, phase) = if use_rollout {
                let idx = batch_rng.usize_below(rollout_states.len());
                rollout_states[idx].clone()
            } else if !demo_states.is_empty() {
                let idx = batch_rng.usize_below(demo_states.len());
                demo_states[idx].clone()
            } else if !rollout_states.is_empty() {
                let idx = batch_rng.usize_below(rollout_states.len());
                rollout_states[idx].clone()
            } else {
                return Err(Error::EmptyInput("router training states"));
            };

            let input = concat(&obs, &oracle.embedding);
            let trace = router.net.forward_trace(&input)?;
            let p = softmax(trace.output());
            let prior = schedule.at_phase(phase);

            let (l_task, l_demo, dl_dlogits) = if cfg.loss.reverse_kl {
                // Reversed direction: gradient of KL(q || softmax(l)) is p - q.
                let lt = kl_categorical(&oracle.task_prior, &p);
                let ld = kl_categorical(prior, &p);
                let lam = super::lambda_at(&cfg.loss, t);
                let g: Vec<f64> = (0..k)
                    .map(|j| {
                        lam * (p[j] - oracle.task_prior[j]) + (p[j] - prior[j])
                    })
                    .collect();
                (lt, ld, g)
            } else {
                let lt = task_loss(&p, &oracle.task_prior, cfg.loss.beta_ent);
                let ld = demo_loss(&p, prior);
                let lam = super::lambda_at(&cfg.loss, t);
                let tg = task_loss_logit_grad(&p, &oracle.task_prior, cfg.loss.beta_ent);
                let dg = crate::numkit::kl_softmax_grad(&p, prior);
                let g: Vec<f64> = tg.iter().zip(&dg).map(|(a, b)| lam * a + b).collect();
                (lt, ld, g)
            };
            l_task_sum += l_task;
            l_demo_sum += l_demo;
            let g = router.net.backward(&trace, &dl_dlogits)?;
            grads.add_scaled(&g, 1.0 / b as f64);
        }

        let unified = super::unified_loss(l_task_sum / b as f64, l_demo_sum / b as f64, t, &cfg.loss);
        if !unified.is_finite() {
            return Err(Error::TrainingAbort(format!(
                "non-finite router loss at iteration {t}"
            )));
        }
        loss_curve.push((t, unified));
        opt.step(&mut router.net, &grads);

        if (t + 1) % cfg.eval_interval == 0 || t + 1 == cfg.iters {
            curve.push(evaluate_router(
                &spec,
                experts,
                &router,
                &oracle.embedding,
                cfg.eval_episodes,
                &root,
                t + 1,
            )?);
        }
    }

    Ok(RouterTrainOutcome {
        router,
        curve,
        loss_curve,
        demo_schedule: schedule,
    })
}
