"""Pre-training loop, baselines, task regression and fine-tuning.

One pre-training step:

1. at episode start draw a task vector ``w`` (and a skill for DIAYN)
2. the controller picks the acting agent from the exploiter's value-promise
   discrepancy (or the starting-mode / always-explore rules)
3. the chosen agent acts, the reward-free environment steps
4. the transition goes to the replay buffer(s) of the variant
5. every ``train_every`` steps after warm-up both agents train: exploiter
   features, exploiter successor features on the exploitation reward,
   explorer on its own reward (features/skills only if the variant trains them)

A snapshot of the exploiter is taken at ``snapshot_fraction`` of the run.
Fine-tuning regresses ``w`` from extrinsic rewards on the frozen features and
keeps improving ``psi`` by TD under that ``w``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .controller import HomeoState, Mode, SwitchState, select_mode
from .envs import reward_free
from .explorer import (
    ExplorerKind,
    SkillSchedule,
    discriminator_accuracy,
    explorer_act,
    explorer_rewards,
    explorer_update,
    make_explorer,
)
from .features import TaskVector, encode, encode_batch, init_feature_map, sample_task, train_feature
from .intrinsic import KnnConfig, apt_rewards_batch, visr_rewards_batch
from .replay import ReplayBuffers, ReplayConfig, Sharing, Transition
from .sf_agent import (
    PolicyConfig,
    PromiseWindow,
    SuccessorTable,
    act,
    action_probs,
    q_td_update_batch,
    q_values,
    state_value,
    td_update_batch,
    value_promise,
)
from .snapshot import Snapshot
from .variants import ActionSource, VariantConfig, parse_variant

__all__ = [
    "BaselineKind",
    "FinetuneConfig",
    "FinetuneResult",
    "PretrainConfig",
    "PretrainResult",
    "aps_rewards",
    "evaluate_skills",
    "finetune",
    "pretrain",
    "run_baseline",
    "solve_w",
]

log = logging.getLogger(__name__)

LOG_COLUMNS = (
    "step", "episode", "mode", "trigger", "promise", "exploit_reward",
    "train_exploit_reward", "train_explor_reward", "exploit_reward_source",
    "explor_reward_source", "exploit_batch_source", "explor_batch_source", "coverage",
)


@dataclass(frozen=True)
class PretrainConfig:
    total_steps: int = 100_000
    warmup_steps: int = 500
    train_every: int = 2
    batch_size: int = 64
    capacity: int = 100_000
    gamma: float = 0.99
    sf_lr: float | None = None          # 0.1 tabular, 0.01 linear
    explorer_lr: float | None = None    # same defaults as sf_lr
    feature_lr: float = 0.05
    discriminator_lr: float = 0.5
    tau_exploit: float = 0.1
    tau_explor: float = 0.3
    explorer_q_init: float = 100.0
    promise_k: int = 10
    promise_reward_source: str = "exploitation"
    explore_duration: int = 100
    starting_fraction: float = 0.05
    snapshot_fraction: float = 0.5
    task_resample_steps: int | None = None  # None: once per episode
    skill_period: int = 50
    knn_k: int = 12
    knn_n_h: int = 2
    knn_average: bool = True
    apt_log_transform: bool = False
    entropy_window: int = 10_000
    exploit_only: bool = False           # ablation: the explorer never acts

    def __post_init__(self):
        if self.promise_reward_source not in ("exploitation", "zero"):
            raise ValueError("promise_reward_source must be 'exploitation' or 'zero'")
        if not 0.0 <= self.starting_fraction < 1.0:
            raise ValueError("starting_fraction must lie in [0, 1)")
        if not 0.0 < self.snapshot_fraction <= 1.0:
            raise ValueError("snapshot_fraction must lie in (0, 1]")
        if self.train_every < 1 or self.batch_size < 1:
            raise ValueError("train_every and batch_size must be >= 1")

    @property
    def knn(self) -> KnnConfig:
        return KnnConfig(self.knn_k, self.knn_n_h, self.knn_average, self.apt_log_transform)

    @property
    def starting_steps(self) -> int:
        return 0 if self.exploit_only else int(round(self.starting_fraction * self.total_steps))


@dataclass
class PretrainResult:
    snapshot: Snapshot
    log: dict[str, list]
    final_snapshot: Snapshot
    explorer: object | None
    stats: dict = field(default_factory=dict)


def _state_handle(env, state):
    return env.state_index(state.observation) if env.tabular else state.observation


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _freq_entropy(actions, num_actions: int) -> float:
    if len(actions) == 0:
        return float("nan")
    counts = np.bincount(np.asarray(actions, dtype=int), minlength=num_actions)
    return _entropy(counts / counts.sum())


def _make_snapshot(fmap, table, meta: dict, step: int, extras=None) -> Snapshot:
    return Snapshot(fmap, None if table is None else table.copy(), {**meta, "step": step},
                    dict(extras or {}))


def _validate(variant: VariantConfig, env, cfg: PretrainConfig):
    need = cfg.starting_steps + cfg.warmup_steps
    if cfg.total_steps < need:
        raise ValueError(f"total_steps={cfg.total_steps} is shorter than starting window + warm-up ({need})")
    if cfg.capacity < cfg.batch_size:
        raise ValueError("capacity must be >= batch_size")
    if variant.explorer_reward is ExplorerKind.APS and cfg.knn_k > cfg.batch_size:
        raise ValueError("knn_k cannot exceed batch_size")


def pretrain(variant, env, rho: float, seed: int, cfg: PretrainConfig = PretrainConfig()) -> PretrainResult:
    """Run the two-agent reward-free pre-training loop for one (variant, rho, seed)."""
    if isinstance(variant, str):
        variant = parse_variant(variant)
    _validate(variant, env, cfg)
    env = reward_free(env)
    spec = env.spec
    tabular = env.tabular
    n_inputs = env.num_states if tabular else spec.obs_dim
    sf_lr = cfg.sf_lr if cfg.sf_lr is not None else (0.1 if tabular else 0.01)
    ex_lr = cfg.explorer_lr if cfg.explorer_lr is not None else sf_lr

    root = np.random.default_rng(seed)
    init_rng, act_rng, ctrl_rng, replay_rng, task_rng, skill_rng, env_rng = root.spawn(7)

    fmap = init_feature_map(spec.obs_dim, variant.feature_dim, init_rng, learning_rate=cfg.feature_lr)
    table = SuccessorTable(n_inputs, spec.num_actions, variant.feature_dim, cfg.gamma, sf_lr, tabular)
    explorer = make_explorer(
        variant.explorer_reward, spec.obs_dim, n_inputs, spec.num_actions, init_rng,
        feature_dim=variant.feature_dim, skill_dim=variant.skill_dim or 16,
        feature_lr=cfg.feature_lr, discriminator_lr=cfg.discriminator_lr,
        trainable=variant.explorer_feature_trainable, tabular=tabular, gamma=cfg.gamma,
        learning_rate=ex_lr, temperature=cfg.tau_explor, knn=cfg.knn, q_init=cfg.explorer_q_init)
    diayn = variant.explorer_reward is ExplorerKind.DIAYN
    skills = SkillSchedule(variant.skill_dim, skill_rng, cfg.skill_period) if diayn else None

    always = variant.action_source is ActionSource.ALWAYS_EXPLORER
    buffers = ReplayBuffers(ReplayConfig(cfg.capacity, variant.buffer_sharing, cfg.batch_size),
                            mirror_explor_to_exploit=always)
    sw = SwitchState(explore_duration=cfg.explore_duration, starting_mode_steps=cfg.starting_steps,
                     always_explore=always)
    homeo = HomeoState(rho)
    window = PromiseWindow(cfg.promise_k)
    exploit_policy = PolicyConfig(cfg.tau_exploit)

    meta = {"variant": variant.name, "rho": rho, "seed": seed, "env": spec.kind.value,
            "layout": spec.layout, "config": asdict(cfg)}
    snapshot_step = max(1, int(round(cfg.snapshot_fraction * cfg.total_steps)))
    snapshot = None
    logs = {c: [] for c in LOG_COLUMNS}
    visited = set()
    source_counts = {"exploit": {}, "explor": {}}
    ent_start = cfg.total_steps - cfg.entropy_window
    ent = {"exploit": [], "explor": []}
    acts_taken = {Mode.EXPLOIT: [], Mode.EXPLOR: []}

    state = None
    episode = -1
    w = None
    for t in range(cfg.total_steps):
        if state is None or state.episode_done:
            episode += 1
            state = env.reset(int(env_rng.integers(2**63)))
            visited.add(env.coverage_key(state))
            w = sample_task(variant.feature_dim, task_rng).w
            window.clear()
            window.record(state_value(table, _state_handle(env, state), w))
        elif cfg.task_resample_steps and state.step_index % cfg.task_resample_steps == 0:
            w = sample_task(variant.feature_dim, task_rng).w
            window.clear()
            window.record(state_value(table, _state_handle(env, state), w))
        skill = skills.current(state.step_index) if diayn else None
        s = _state_handle(env, state)

        promise = value_promise(window, cfg.gamma)
        if cfg.exploit_only:
            mode, triggered = Mode.EXPLOIT, False
        else:
            mode, sw, homeo = select_mode(sw, homeo, promise, t, ctrl_rng)
            triggered = sw.triggered
        if mode is Mode.EXPLOIT:
            action = act(table, s, w, exploit_policy, act_rng)
        else:
            action = explorer_act(explorer, s, skill if diayn else w, act_rng)

        if t >= ent_start:
            ent["exploit"].append(_entropy(action_probs(q_values(table, s, w), exploit_policy)))
            ent["explor"].append(_entropy(action_probs(
                explorer.q_values(s, skill if diayn else w), PolicyConfig(explorer.temperature))))
            acts_taken[mode].append(action)

        nxt, done = env.step(state, action)
        s_next = _state_handle(env, nxt)
        buffers.push(Transition(
            state.observation, action, nxt.observation, w, mode, t, skill, nxt.terminal,
            s if tabular else -1, s_next if tabular else -1))
        visited.add(env.coverage_key(nxt))

        r_exploit = float(encode(fmap, nxt.observation) @ w)
        window.record(state_value(table, s_next, w),
                      r_exploit if cfg.promise_reward_source == "exploitation" else 0.0)

        row_train = (None, None, "", "", "", "")
        if t >= cfg.warmup_steps and t % cfg.train_every == 0:
            fmap, row_train = _train_both(fmap, table, explorer, buffers, replay_rng,
                                          train_explorer=not cfg.exploit_only)
            for who, src in (("exploit", row_train[4]), ("explor", row_train[5])):
                if src:
                    source_counts[who][src] = source_counts[who].get(src, 0) + 1

        logs["step"].append(t)
        logs["episode"].append(episode)
        logs["mode"].append(mode.value)
        logs["trigger"].append(int(triggered))
        logs["promise"].append(promise)
        logs["exploit_reward"].append(r_exploit)
        for col, v in zip(LOG_COLUMNS[6:12], row_train):
            logs[col].append(v)
        logs["coverage"].append(len(visited))

        if t + 1 == snapshot_step:
            snapshot = _make_snapshot(fmap, table, meta, t + 1)
        state = nxt

    final = _make_snapshot(fmap, table, meta, cfg.total_steps)
    stats = {
        "coverage": len(visited),
        "exploit_policy_entropy": float(np.mean(ent["exploit"])) if ent["exploit"] else float("nan"),
        "explor_policy_entropy": float(np.mean(ent["explor"])) if ent["explor"] else float("nan"),
        "exploit_action_entropy": _freq_entropy(acts_taken[Mode.EXPLOIT], spec.num_actions),
        "explor_action_entropy": _freq_entropy(acts_taken[Mode.EXPLOR], spec.num_actions),
        "explor_fraction": float(np.mean([m == Mode.EXPLOR.value for m in logs["mode"]])),
        "batch_sources": source_counts,
    }
    return PretrainResult(snapshot, logs, final, explorer, stats)


def _train_both(fmap, table, explorer, buffers: ReplayBuffers, rng, train_explorer: bool = True):
    """One update of both agents; returns the new exploiter features and a log fragment."""
    ex_r = xr_r = None
    ex_src = xr_src = ex_kind = xr_kind = ""
    b = buffers.sample_for(Mode.EXPLOIT, rng)
    if b is not None:
        fmap = train_feature(fmap, b.next_obs, b.ws)
        phi = encode_batch(fmap, b.next_obs)
        td_update_batch(table, b.states, b.actions, b.next_states, phi, b.ws, b.terminals)
        ex_r = float(np.mean(visr_rewards_batch(phi, b.ws)))
        ex_src, ex_kind = b.source, "visr"
    if train_explorer:
        b = buffers.sample_for(Mode.EXPLOR, rng)
        if b is not None:
            rewards, xr_kind = explorer_rewards(explorer, b)
            explorer_update(explorer, b, rewards, xr_kind)
            xr_r = float(np.mean(rewards))
            xr_src = b.source
    return fmap, (ex_r, xr_r, ex_kind, xr_kind, ex_src, xr_src)


# ----------------------------------------------------------------------------- baselines

class BaselineKind:
    APS_MONOLITHIC = "ApsMonolithic"
    DIAYN_STANDALONE = "DiaynStandalone"
    ALL = ("ApsMonolithic", "DiaynStandalone")
    ALIASES = {"APS": "ApsMonolithic", "DIAYN": "DiaynStandalone",
               "ApsMonolithic": "ApsMonolithic", "DiaynStandalone": "DiaynStandalone"}


def aps_rewards(fmap, next_obs, ws, knn: KnnConfig):
    """Exploitation, exploration and combined rewards on a batch (memory = the batch)."""
    phi = encode_batch(fmap, next_obs)
    visr = visr_rewards_batch(phi, ws)
    apt = apt_rewards_batch(phi, None, knn)
    return visr, apt, visr + apt


def run_baseline(kind: str, env, steps: int, seed: int, cfg: PretrainConfig | None = None,
                 num_skills: int = 16, feature_dim: int = 10) -> PretrainResult:
    """Single-agent baselines sharing the pre-training harness.

    ``ApsMonolithic`` trains one successor-feature agent on the summed reward;
    the exploration part enters the cumulant along ``w`` so that
    ``cumulant @ w`` equals the combined reward. ``DiaynStandalone`` trains
    only a skill agent and its discriminator.
    """
    kind = BaselineKind.ALIASES.get(kind)
    if kind is None:
        raise ValueError(f"unknown baseline; expected one of {BaselineKind.ALL}")
    cfg = replace(cfg or PretrainConfig(), total_steps=steps)
    if steps < cfg.warmup_steps:
        raise ValueError(f"steps={steps} is shorter than the warm-up ({cfg.warmup_steps})")
    env = reward_free(env)
    spec = env.spec
    tabular = env.tabular
    n_inputs = env.num_states if tabular else spec.obs_dim
    sf_lr = cfg.sf_lr if cfg.sf_lr is not None else (0.1 if tabular else 0.01)
    root = np.random.default_rng(seed)
    init_rng, act_rng, _, replay_rng, task_rng, skill_rng, env_rng = root.spawn(7)

    meta = {"variant": "APS" if kind == BaselineKind.APS_MONOLITHIC else "DIAYN", "rho": None,
            "seed": seed, "env": spec.kind.value, "layout": spec.layout, "config": asdict(cfg)}
    buffers = ReplayBuffers(ReplayConfig(cfg.capacity, Sharing.EXPLOIT_COMMON, cfg.batch_size))
    snapshot_step = max(1, int(round(cfg.snapshot_fraction * steps)))
    logs = {c: [] for c in LOG_COLUMNS}
    visited = set()
    knn = cfg.knn

    if kind == BaselineKind.APS_MONOLITHIC:
        fmap = init_feature_map(spec.obs_dim, feature_dim, init_rng, learning_rate=cfg.feature_lr)
        table = SuccessorTable(n_inputs, spec.num_actions, feature_dim, cfg.gamma, sf_lr, tabular)
        policy = PolicyConfig(cfg.tau_exploit)
        agent = None
    else:
        agent = make_explorer(ExplorerKind.DIAYN, spec.obs_dim, n_inputs, spec.num_actions, init_rng,
                              skill_dim=num_skills, discriminator_lr=cfg.discriminator_lr,
                              tabular=tabular, gamma=cfg.gamma, learning_rate=sf_lr,
                              temperature=cfg.tau_explor, q_init=cfg.explorer_q_init)
        skills = SkillSchedule(num_skills, skill_rng, cfg.skill_period)
        fmap = table = None

    def snap(step):
        if agent is None:
            return _make_snapshot(fmap, table, meta, step)
        return _make_snapshot(None, None, meta, step, {
            "discriminator": agent.discriminator.weights.copy(), "skill_q": agent.q.copy()})

    snapshot = None
    state = None
    episode = -1
    for t in range(steps):
        if state is None or state.episode_done:
            episode += 1
            state = env.reset(int(env_rng.integers(2**63)))
            visited.add(env.coverage_key(state))
            w = sample_task(feature_dim, task_rng).w
        s = _state_handle(env, state)
        skill = None
        if agent is None:
            action = act(table, s, w, policy, act_rng)
        else:
            skill = skills.current(state.step_index)
            action = explorer_act(agent, s, skill, act_rng)
        nxt, _ = env.step(state, action)
        s_next = _state_handle(env, nxt)
        buffers.push(Transition(state.observation, action, nxt.observation, w, Mode.EXPLOR, t, skill,
                                nxt.terminal, s if tabular else -1, s_next if tabular else -1))
        visited.add(env.coverage_key(nxt))

        r_step = float(encode(fmap, nxt.observation) @ w) if agent is None else None
        tr = (None, None, "", "", "", "")
        if t >= cfg.warmup_steps and t % cfg.train_every == 0:
            b = buffers.sample_for(Mode.EXPLOIT, replay_rng)
            if b is not None:
                if agent is None:
                    fmap = train_feature(fmap, b.next_obs, b.ws)
                    visr, apt, combined = aps_rewards(fmap, b.next_obs, b.ws, knn)
                    phi = encode_batch(fmap, b.next_obs)
                    cumulant = phi + apt[:, None] * b.ws
                    td_update_batch(table, b.states, b.actions, b.next_states, phi, b.ws,
                                    b.terminals, cumulants=cumulant)
                    tr = (float(np.mean(combined)), None, "visr+apt", "", b.source, "")
                else:
                    rewards, rk = explorer_rewards(agent, b)
                    explorer_update(agent, b, rewards, rk)
                    tr = (None, float(np.mean(rewards)), "", rk, "", b.source)

        logs["step"].append(t)
        logs["episode"].append(episode)
        logs["mode"].append("")
        logs["trigger"].append(None)
        logs["promise"].append(None)
        logs["exploit_reward"].append(r_step)
        for col, v in zip(LOG_COLUMNS[6:12], tr):
            logs[col].append(v)
        logs["coverage"].append(len(visited))
        if t + 1 == snapshot_step:
            snapshot = snap(t + 1)
        state = nxt

    stats = {"coverage": len(visited)}
    if agent is not None:
        stats["discriminator_accuracy"] = evaluate_skills(agent, env, seed + 10_007, episodes_per_skill=4)
    return PretrainResult(snapshot, logs, snap(steps), agent, stats)


def evaluate_skills(agent, env, seed: int, episodes_per_skill: int = 4) -> float:
    """Discriminator accuracy on fresh rollouts of every skill (held-out visited states).

    Skills are held fixed for whole episodes; states are those reached by the
    skill policy, excluding the shared start state.
    """
    env = reward_free(env)
    rng = np.random.default_rng(seed)
    obs, labels = [], []
    for z in range(agent.skill_dim):
        for _ in range(episodes_per_skill):
            state = env.reset(int(rng.integers(2**63)))
            while not state.episode_done:
                a = explorer_act(agent, _state_handle(env, state), z, rng)
                state, _ = env.step(state, a)
                obs.append(state.observation)
                labels.append(z)
    return discriminator_accuracy(agent.discriminator, np.array(obs), labels)


# ----------------------------------------------------------------------------- fine-tuning

def solve_w(features, rewards, ridge: float = 1e-6) -> TaskVector:
    """Ridge regression ``argmin_w |features @ w - rewards|^2 + ridge |w|^2``."""
    phi = np.atleast_2d(np.asarray(features, dtype=float))
    r = np.asarray(rewards, dtype=float)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    gram = phi.T @ phi
    if ridge == 0 and np.linalg.matrix_rank(gram) < phi.shape[1]:
        raise np.linalg.LinAlgError("feature matrix is rank deficient; use ridge > 0")
    w = np.linalg.solve(gram + ridge * np.eye(phi.shape[1]), phi.T @ r)
    return TaskVector(w, "regressed")


@dataclass(frozen=True)
class FinetuneConfig:
    budget_steps: int = 20_000
    w_refresh_steps: int = 500
    ridge: float = 1e-6
    ls_batch_size: int = 4096
    epsilon: float = 0.1
    train_every: int = 1
    batch_size: int = 64
    sf_lr: float | None = None
    eval_interval: int = 1000
    eval_episodes: int = 5
    final_window: int = 5


@dataclass
class FinetuneResult:
    curve: list[tuple[int, float, float]]
    w: np.ndarray
    successor: SuccessorTable | None
    stats: dict = field(default_factory=dict)

    @property
    def final_return(self) -> float:
        return float(self.curve[-1][1]) if self.curve else float("nan")


def _evaluate(env, policy_fn, episodes: int, rng) -> tuple[float, float]:
    returns = []
    for _ in range(episodes):
        state = env.reset(int(rng.integers(2**63)))
        total = 0.0
        while not state.episode_done:
            state, r, _ = env.step(state, policy_fn(state))
            total += r
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))


def finetune(snapshot: Snapshot, env, cfg: FinetuneConfig = FinetuneConfig(), seed: int = 0) -> FinetuneResult:
    """Adapt a pre-trained exploiter to the environment's extrinsic reward.

    Phase 1 collects reward-labelled transitions with uniformly random
    actions (seed frames). Every ``w_refresh_steps`` steps ``w`` is re-solved
    on the latest ``ls_batch_size`` transitions, provided that window holds a
    non-zero reward. The first solve turns the pre-trained successor features
    into a zero-shot value ``Q = psi @ w``. Phase 2 then acts
    epsilon-greedily on ``Q`` and trains ``psi`` by Q-learning on the
    extrinsic reward through that parametrisation (features frozen); later
    solves re-express the learned values along the new ``w``. Every
    ``eval_interval`` steps a batch of greedy evaluation episodes adds a point
    to the curve.
    """
    if snapshot.successor is None:
        return _finetune_skills(snapshot, env, cfg, seed)
    fmap = snapshot.feature_map
    table = snapshot.successor.copy()
    if cfg.sf_lr is not None:
        table.learning_rate = cfg.sf_lr
    if fmap.obs_dim != env.spec.obs_dim or table.num_actions != env.spec.num_actions:
        raise ValueError("snapshot does not match the environment")
    tabular = env.tabular
    rng = np.random.default_rng(seed)
    act_rng, replay_rng, env_rng, eval_rng = rng.spawn(4)
    d = table.feature_dim
    w = np.zeros(d)
    task_known = False
    nA = env.spec.num_actions

    cap = cfg.budget_steps
    obs_dim = env.spec.obs_dim
    X = np.zeros((cap, obs_dim))
    Xn = np.zeros((cap, obs_dim))
    A = np.zeros(cap, dtype=int)
    R = np.zeros(cap)
    T = np.zeros(cap, dtype=bool)
    S = np.zeros(cap, dtype=int)
    Sn = np.zeros(cap, dtype=int)
    n = 0

    def greedy(state):
        return int(np.argmax(q_values(table, _state_handle(env, state), w)))

    curve = []
    state = None
    solves = 0
    for t in range(cfg.budget_steps):
        if state is None or state.episode_done:
            state = env.reset(int(env_rng.integers(2**63)))
        s = _state_handle(env, state)
        if not task_known or act_rng.random() < cfg.epsilon:
            action = int(act_rng.integers(nA))
        else:
            action = int(np.argmax(q_values(table, s, w)))
        nxt, r, _ = env.step(state, action)
        X[n], Xn[n], A[n], R[n], T[n] = state.observation, nxt.observation, action, r, nxt.terminal
        if tabular:
            S[n], Sn[n] = s, _state_handle(env, nxt)
        n += 1
        state = nxt

        if (t + 1) % cfg.w_refresh_steps == 0:
            lo = max(0, n - cfg.ls_batch_size)
            # a reward-free window carries no task information: keep the last w
            if np.any(R[lo:n] != 0):
                w_new = solve_w(encode_batch(fmap, Xn[lo:n]), R[lo:n], cfg.ridge).w
                if task_known:
                    _reexpress(table, w, w_new)
                w = w_new
                solves += 1
                task_known = True
        if task_known and (t + 1) % cfg.train_every == 0:
            idx = replay_rng.integers(0, n, size=cfg.batch_size)
            states = S[idx] if tabular else X[idx]
            nstates = Sn[idx] if tabular else Xn[idx]
            q_td_update_batch(table, states, A[idx], nstates, R[idx], w, T[idx])
        if (t + 1) % cfg.eval_interval == 0:
            mean, std = _evaluate(env, greedy, cfg.eval_episodes, eval_rng)
            curve.append((t + 1, mean, std))
    return FinetuneResult(curve, w, table, {"w_solves": solves, "rewards_seen": int(np.count_nonzero(R[:n])),
                                            "task_identified": task_known})


def _reexpress(table: SuccessorTable, w_old, w_new):
    """Store the current values ``psi @ w_old`` along a re-solved task vector.

    After the call ``psi @ w_new`` equals the old ``psi @ w_old`` exactly, so
    a refresh never undoes what fine-tuning has learned; it only changes the
    direction along which later TD corrections are written.
    """
    wn = float(w_new @ w_new)
    if wn == 0.0:
        return
    q_old = np.einsum("rad,d->ra", table.psi, w_old)
    q_new = np.einsum("rad,d->ra", table.psi, w_new)
    table.psi += (q_old - q_new)[..., None] * (w_new / wn)


def _finetune_skills(snapshot: Snapshot, env, cfg: FinetuneConfig, seed: int) -> FinetuneResult:
    """Fine-tune a skill-agent snapshot: pick the best skill, then Q-learn on extrinsic reward."""
    q = snapshot.extras["skill_q"].copy()
    num_skills = q.shape[0]
    tabular = env.tabular
    rng = np.random.default_rng(seed)
    act_rng, env_rng, eval_rng = rng.spawn(3)
    lr = cfg.sf_lr if cfg.sf_lr is not None else (0.1 if tabular else 0.01)
    gamma = float(snapshot.metadata.get("config", {}).get("gamma", 0.99))
    nA = env.spec.num_actions

    def inputs(state):
        if tabular:
            return _state_handle(env, state)
        return np.append(state.observation, 1.0)

    def qv(qz, state):
        x = inputs(state)
        return qz[x] if tabular else x @ qz

    probe = cfg.w_refresh_steps
    scores = np.zeros(num_skills)
    per = max(1, probe // num_skills)
    for z in range(num_skills):
        steps, total, state = 0, 0.0, None
        while steps < per:
            if state is None or state.episode_done:
                state = env.reset(int(env_rng.integers(2**63)))
            state, r, _ = env.step(state, int(np.argmax(qv(q[z], state))))
            total += r
            steps += 1
        scores[z] = total
    qz = q[int(np.argmax(scores))].copy()

    curve = []
    state = None
    for t in range(cfg.budget_steps):
        if state is None or state.episode_done:
            state = env.reset(int(env_rng.integers(2**63)))
        if act_rng.random() < cfg.epsilon:
            a = int(act_rng.integers(nA))
        else:
            a = int(np.argmax(qv(qz, state)))
        nxt, r, _ = env.step(state, a)
        target = r + (0.0 if nxt.terminal else gamma * float(np.max(qv(qz, nxt))))
        x = inputs(state)
        if tabular:
            qz[x, a] += lr * (target - qz[x, a])
        else:
            qz[:, a] += lr * (target - float(x @ qz[:, a])) * x
        state = nxt
        if (t + 1) % cfg.eval_interval == 0:
            mean, std = _evaluate(env, lambda st: int(np.argmax(qv(qz, st))), cfg.eval_episodes, eval_rng)
            curve.append((t + 1, mean, std))
    return FinetuneResult(curve, np.zeros(0), None, {"skill": int(np.argmax(scores))})
