"""Soft actor-critic trainer for the localization environment.

Standard off-policy SAC: replay buffer, twin critics with Polyak-averaged
targets, squashed-Gaussian actor, automatic entropy-coefficient tuning.
Training is seeded and bit-reproducible in single-threaded mode.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .env import LocalizationEnv, TerminalKind

OBS_DIM = 9
ACT_DIM = 3
LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0

# tip-frame point coordinates (obs[3:]) are tens of mm; bring them to O(1)
OBS_SCALE = np.array([1.0, 1.0, 1.0] + [1.0 / 50.0] * 6, dtype=np.float32)


@dataclass(frozen=True)
class SacConfig:
    episodes: int = 1000
    gamma: float = 0.99
    tau: float = 0.005
    replay_capacity: int = 100_000
    batch_size: int = 256
    hidden: int = 64
    lr: float = 3e-4
    target_entropy: float = -float(ACT_DIM)
    warmup_steps: int = 6000
    updates_per_step: int = 1
    reward_scale: float = 0.01  # critic-side scaling; logged rewards stay raw


def _mlp(sizes, out_dim):
    layers: list[nn.Module] = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        layers += [nn.Linear(a, b), nn.ReLU()]
    layers.append(nn.Linear(sizes[-1], out_dim))
    return nn.Sequential(*layers)


class Actor(nn.Module):
    def __init__(self, hidden: int = 64):
        super().__init__()
        self.body = _mlp([OBS_DIM, hidden], hidden)
        self.mean = nn.Linear(hidden, ACT_DIM)
        self.log_std = nn.Linear(hidden, ACT_DIM)

    def forward(self, obs):
        h = F.relu(self.body(obs))
        return self.mean(h), torch.clamp(self.log_std(h), LOG_STD_MIN, LOG_STD_MAX)

    def sample(self, obs):
        mean, log_std = self(obs)
        std = log_std.exp()
        noise = torch.randn_like(mean)
        pre = mean + std * noise
        action = torch.tanh(pre)
        logp = (-0.5 * (noise**2) - log_std - 0.5 * math.log(2 * math.pi)).sum(-1)
        logp = logp - torch.log(1.0 - action**2 + 1e-6).sum(-1)
        return action, logp

    def deterministic(self, obs):
        mean, _ = self(obs)
        return torch.tanh(mean)


class Critic(nn.Module):
    def __init__(self, hidden: int = 64):
        super().__init__()
        self.q = _mlp([OBS_DIM + ACT_DIM, hidden, hidden], 1)

    def forward(self, obs, act):
        return self.q(torch.cat([obs, act], dim=-1)).squeeze(-1)


class ReplayBuffer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, OBS_DIM), dtype=np.float32)
        self.act = np.zeros((capacity, ACT_DIM), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.nobs = np.zeros((capacity, OBS_DIM), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self.ptr = 0

    def add(self, o, a, r, no, d):
        i = self.ptr
        self.obs[i] = o
        self.act[i] = a
        self.rew[i] = r
        self.nobs[i] = no
        self.done[i] = d
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, gen: torch.Generator):
        idx = torch.randint(0, self.size, (batch,), generator=gen).numpy()
        to = torch.from_numpy
        return (to(self.obs[idx]), to(self.act[idx]), to(self.rew[idx]),
                to(self.nobs[idx]), to(self.done[idx]))


@dataclass
class TrainingCurves:
    episodes: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        cols = ["episode", "reward", "length", "critic_loss", "actor_loss", "alpha"]
        lines = [",".join(cols)]
        for row in self.episodes:
            lines.append(",".join(repr(row[c]) for c in cols))
        return "\n".join(lines) + "\n"

    def rewards(self) -> np.ndarray:
        return np.array([r["reward"] for r in self.episodes])

    def lengths(self) -> np.ndarray:
        return np.array([r["length"] for r in self.episodes])


class Policy:
    """Trained actor plus twin critics and training metadata."""

    def __init__(self, actor: Actor, q1: Critic, q2: Critic, meta: dict):
        self.actor = actor
        self.q1 = q1
        self.q2 = q2
        self.meta = meta

    def act(self, obs: np.ndarray, deterministic: bool = True,
            gen: torch.Generator | None = None) -> np.ndarray:
        o = torch.from_numpy((np.asarray(obs, dtype=np.float32) * OBS_SCALE)[None])
        with torch.no_grad():
            if deterministic:
                a = self.actor.deterministic(o)
            else:
                mean, log_std = self.actor(o)
                noise = torch.randn(mean.shape, generator=gen)
                a = torch.tanh(mean + log_std.exp() * noise)
        return a.numpy()[0].astype(np.float64)

    # -- serialization (versioned JSON weight document) ----------------------

    def to_json(self) -> str:
        def dump(module):
            return {k: v.tolist() for k, v in module.state_dict().items()}

        doc = {
            "schema": "cathtwin-weights",
            "version": 1,
            "kind": "sac-policy",
            "hidden": self.meta.get("hidden", 64),
            "actor": dump(self.actor),
            "q1": dump(self.q1),
            "q2": dump(self.q2),
            "meta": {k: v for k, v in self.meta.items() if k != "curves"},
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Policy":
        doc = json.loads(text)
        if doc.get("schema") != "cathtwin-weights" or doc.get("kind") != "sac-policy":
            raise ValueError("not a sac-policy weight document")
        if doc.get("version") != 1:
            raise ValueError(f"unsupported weight-document version {doc.get('version')}")
        hidden = doc.get("hidden", 64)
        actor, q1, q2 = Actor(hidden), Critic(hidden), Critic(hidden)
        for module, key in ((actor, "actor"), (q1, "q1"), (q2, "q2")):
            module.load_state_dict(
                {k: torch.tensor(v, dtype=torch.float32) for k, v in doc[key].items()}
            )
        return cls(actor, q1, q2, doc.get("meta", {}))


def init_policy(seed: int, hidden: int = 64) -> Policy:
    torch.manual_seed(seed)
    return Policy(Actor(hidden), Critic(hidden), Critic(hidden),
                  meta={"seed": seed, "hidden": hidden, "episodes": 0})


def train_sac(env: LocalizationEnv, cfg: SacConfig = SacConfig(),
              seed: int = 0) -> tuple[Policy, TrainingCurves]:
    """Train SAC on the environment; returns the policy and per-episode curves.

    Raises FloatingPointError with the episode index if a loss diverges.
    Timeout terminations bootstrap (the time limit is not part of the state);
    success and max-bend are absorbing.
    """
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        return _train(env, cfg, seed)
    finally:
        torch.set_num_threads(n_threads)


def _train(env: LocalizationEnv, cfg: SacConfig, seed: int):
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed + 1)
    env.seed(seed)

    actor = Actor(cfg.hidden)
    q1, q2 = Critic(cfg.hidden), Critic(cfg.hidden)
    q1_t, q2_t = Critic(cfg.hidden), Critic(cfg.hidden)
    q1_t.load_state_dict(q1.state_dict())
    q2_t.load_state_dict(q2.state_dict())
    log_alpha = torch.zeros(1, requires_grad=True)

    opt_actor = torch.optim.Adam(actor.parameters(), lr=cfg.lr)
    opt_q = torch.optim.Adam(list(q1.parameters()) + list(q2.parameters()), lr=cfg.lr)
    opt_alpha = torch.optim.Adam([log_alpha], lr=cfg.lr)

    buffer = ReplayBuffer(cfg.replay_capacity)
    curves = TrainingCurves()
    total_steps = 0

    def scaled(obs):
        return (obs.astype(np.float32) * OBS_SCALE)

    for episode in range(cfg.episodes):
        obs = scaled(env.reset())
        ep_reward = 0.0
        ep_len = 0
        losses_q, losses_pi = [], []
        while env.terminal == TerminalKind.running:
            if total_steps < cfg.warmup_steps:
                action = (torch.rand(ACT_DIM, generator=gen).numpy() * 2.0 - 1.0)
            else:
                with torch.no_grad():
                    mean, log_std = actor(torch.from_numpy(obs[None]))
                    noise = torch.randn(mean.shape, generator=gen)
                    action = torch.tanh(mean + log_std.exp() * noise).numpy()[0]
            out = env.step(action.astype(np.float64))
            next_obs = scaled(out.observation)
            r = out.reward.total
            done = out.terminal in (TerminalKind.success, TerminalKind.max_bend,
                                    TerminalKind.collision)
            buffer.add(obs, action.astype(np.float32), r, next_obs, float(done))
            obs = next_obs
            ep_reward += r
            ep_len += 1
            total_steps += 1

            if buffer.size >= cfg.batch_size and total_steps >= cfg.warmup_steps:
                for _ in range(cfg.updates_per_step):
                    lq, lp = _update(buffer, cfg, gen, actor, q1, q2, q1_t, q2_t,
                                     log_alpha, opt_actor, opt_q, opt_alpha)
                    if not (math.isfinite(lq) and math.isfinite(lp)):
                        raise FloatingPointError(
                            f"training diverged at episode {episode}"
                        )
                    losses_q.append(lq)
                    losses_pi.append(lp)

        curves.episodes.append({
            "episode": episode,
            "reward": float(ep_reward),
            "length": int(ep_len),
            "critic_loss": float(np.mean(losses_q)) if losses_q else 0.0,
            "actor_loss": float(np.mean(losses_pi)) if losses_pi else 0.0,
            "alpha": float(log_alpha.exp().item()),
        })

    meta = {"seed": seed, "hidden": cfg.hidden, "episodes": cfg.episodes,
            "reward_scale": cfg.reward_scale}
    return Policy(actor, q1, q2, meta), curves


def _update(buffer, cfg, gen, actor, q1, q2, q1_t, q2_t, log_alpha,
            opt_actor, opt_q, opt_alpha):
    obs, act, rew, nobs, done = buffer.sample(cfg.batch_size, gen)
    alpha = log_alpha.exp().detach()

    with torch.no_grad():
        mean, log_std = actor(nobs)
        noise = torch.randn(mean.shape, generator=gen)
        pre = mean + log_std.exp() * noise
        nact = torch.tanh(pre)
        logp_n = (-0.5 * noise**2 - log_std - 0.5 * math.log(2 * math.pi)).sum(-1)
        logp_n = logp_n - torch.log(1.0 - nact**2 + 1e-6).sum(-1)
        q_next = torch.min(q1_t(nobs, nact), q2_t(nobs, nact)) - alpha * logp_n
        y = rew * cfg.reward_scale + cfg.gamma * (1.0 - done) * q_next

    loss_q = F.mse_loss(q1(obs, act), y) + F.mse_loss(q2(obs, act), y)
    opt_q.zero_grad()
    loss_q.backward()
    opt_q.step()

    mean, log_std = actor(obs)
    noise = torch.randn(mean.shape, generator=gen)
    pre = mean + log_std.exp() * noise
    a_new = torch.tanh(pre)
    logp = (-0.5 * noise**2 - log_std - 0.5 * math.log(2 * math.pi)).sum(-1)
    logp = logp - torch.log(1.0 - a_new**2 + 1e-6).sum(-1)
    q_new = torch.min(q1(obs, a_new), q2(obs, a_new))
    loss_pi = (alpha * logp - q_new).mean()
    opt_actor.zero_grad()
    loss_pi.backward()
    opt_actor.step()

    loss_alpha = -(log_alpha * (logp.detach() + cfg.target_entropy)).mean()
    opt_alpha.zero_grad()
    loss_alpha.backward()
    opt_alpha.step()

    with torch.no_grad():
        for net, net_t in ((q1, q1_t), (q2, q2_t)):
            for p, p_t in zip(net.parameters(), net_t.parameters()):
                p_t.mul_(1.0 - cfg.tau).add_(cfg.tau * p)

    return float(loss_q.item()), float(loss_pi.item())
