"""Value-factorization learner.

Per-agent recurrent utility networks feed a state-conditioned mixing
network whose weights are produced by hypernetworks and passed through an
absolute value, so the joint value is monotone in every agent utility.
Training minimizes a masked half mean-squared TD error against a
hard-copied target pair (agent nets + mixer).
"""
from __future__ import annotations

import numpy as np

from ..errors import DimMismatchError
from ..nn import autodiff as ad
from ..nn import Adam, ParameterStore, Tape, Var
from ..replay import EpisodeBatch
from ..rng import RngStream
from .common import (MultiAgentNet, QmixConfig, RunningMeanStd, episode_inputs, epsilon,
                     select_actions, stack_agent_inputs)


class MonotonicMixer:
    """State-conditioned two-layer mixer with nonnegative mixing weights.

    Layer weights come from hypernetworks on the global state; absolute
    values keep them nonnegative while biases stay unconstrained, so
    d(joint)/d(utility) >= 0 everywhere. The hidden nonlinearity is ELU
    (strictly increasing, so it preserves monotonicity).
    """

    def __init__(self, state_dim: int, n_agents: int, mixing_dim: int = 32,
                 hyper_dim: int = 64, hyper_layers: int = 2,
                 rng: RngStream | None = None):
        if hyper_layers not in (1, 2):
            raise DimMismatchError(f"hypernet_layers must be 1 or 2, got {hyper_layers}")
        self.state_dim = state_dim
        self.n_agents = n_agents
        self.mixing_dim = mixing_dim
        self.hyper_layers = hyper_layers
        store = ParameterStore()
        for head, width in (("w1", n_agents * mixing_dim), ("w2", mixing_dim)):
            if hyper_layers == 2:
                store.add(f"{head}_h", (state_dim, hyper_dim))
                store.add(f"{head}_hb", (hyper_dim,))
                store.add(f"{head}_o", (hyper_dim, width))
            else:
                store.add(f"{head}_o", (state_dim, width))
            store.add(f"{head}_ob", (width,))
        store.add("b1", (state_dim, mixing_dim))
        store.add("b1_b", (mixing_dim,))
        store.add("v_h", (state_dim, mixing_dim))
        store.add("v_hb", (mixing_dim,))
        store.add("v_o", (mixing_dim, 1))
        store.add("v_ob", (1,))
        if rng is not None:
            store.init_uniform(rng)
        self.store = store

    def _params(self, tape: Tape, frozen: bool) -> dict[str, Var]:
        if frozen:
            return {name: tape.const(self.store.view(name)) for name in self.store.names}
        return {name: self.store.var(tape, name) for name in self.store.names}

    def _head(self, p: dict[str, Var], name: str, states: Var) -> Var:
        if self.hyper_layers == 2:
            hid = ad.relu(ad.matmul(states, p[f"{name}_h"]) + p[f"{name}_hb"])
            return ad.matmul(hid, p[f"{name}_o"]) + p[f"{name}_ob"]
        return ad.matmul(states, p[f"{name}_o"]) + p[f"{name}_ob"]

    def mix(self, qs: Var, states: np.ndarray, tape: Tape, frozen: bool = False) -> Var:
        """Combine utilities (batch, n_agents) under states (batch, state_dim)."""
        if qs.shape != (states.shape[0], self.n_agents):
            raise DimMismatchError(f"utilities shape {qs.shape} does not match batch")
        b, m, n = states.shape[0], self.mixing_dim, self.n_agents
        p = self._params(tape, frozen)
        sv = tape.const(np.asarray(states, dtype=np.float64))
        w1 = ad.absolute(ad.reshape(self._head(p, "w1", sv), (b, n, m)))
        b1 = ad.reshape(ad.matmul(sv, p["b1"]) + p["b1_b"], (b, 1, m))
        hid = ad.elu(ad.matmul(ad.reshape(qs, (b, 1, n)), w1) + b1)
        w2 = ad.absolute(ad.reshape(self._head(p, "w2", sv), (b, m, 1)))
        v = ad.relu(ad.matmul(sv, p["v_h"]) + p["v_hb"])
        v = ad.reshape(ad.matmul(v, p["v_o"]) + p["v_ob"], (b, 1, 1))
        return ad.reshape(ad.matmul(hid, w2) + v, (b,))


class QmixLearner:
    """Greedy-decentralizable joint Q-learning over episode batches."""

    def __init__(self, env_info: dict, cfg: QmixConfig, rng: RngStream):
        self.cfg = cfg.validated()
        self.n_agents = int(env_info["n_agents"])
        self.n_actions = int(env_info["n_actions"])
        self.obs_dim = int(env_info["obs_dim"])
        self.state_dim = int(env_info["state_dim"])
        in_dim = self.obs_dim
        in_dim += self.n_actions if cfg.obs_last_action else 0
        in_dim += self.n_agents if cfg.obs_agent_id else 0
        self.agents = MultiAgentNet(in_dim, self.n_actions, self.n_agents, cfg.hidden_dim,
                                    cfg.share_parameters, cfg.recurrent, rng)
        self.target_agents = MultiAgentNet(in_dim, self.n_actions, self.n_agents,
                                           cfg.hidden_dim, cfg.share_parameters, cfg.recurrent)
        self.mixer = MonotonicMixer(self.state_dim, self.n_agents, cfg.mixing_dim,
                                    cfg.hypernet_dim, cfg.hypernet_layers, rng)
        self.target_mixer = MonotonicMixer(self.state_dim, self.n_agents, cfg.mixing_dim,
                                           cfg.hypernet_dim, cfg.hypernet_layers)
        self._sync_targets()
        self.optimizers = [Adam(store, lr=cfg.lr)
                           for store in self.agents.stores() + [self.mixer.store]]
        self.reward_stats = RunningMeanStd() if cfg.standardize_rewards else None
        self.update_calls = 0

    def _sync_targets(self) -> None:
        self.target_agents.copy_from(self.agents)
        self.target_mixer.store.copy_from(self.mixer.store)

    def zero_hidden(self, n_envs: int = 1) -> np.ndarray | None:
        return self.agents.zero_hidden(n_envs)

    def act(self, obs: np.ndarray, last_actions: np.ndarray | None,
            hidden: np.ndarray | None, rng: RngStream, *, explore: bool,
            env_step: int = 0) -> tuple[np.ndarray, np.ndarray | None]:
        """Greedy or epsilon-greedy joint actions.

        obs is (n_agents, n_envs, obs_dim); returns ((n_envs, n_agents)
        actions, next hidden).
        """
        cfg = self.cfg
        eps = (epsilon(env_step, cfg.eps_start, cfg.eps_end, cfg.eps_anneal_steps)
               if explore else cfg.eval_eps)
        inputs = stack_agent_inputs(obs, last_actions, self.n_actions,
                                    cfg.obs_agent_id, cfg.obs_last_action)
        values, hidden = self.agents.act_values(inputs, hidden)
        actions = np.empty((obs.shape[1], self.n_agents), dtype=np.int64)
        for e in range(obs.shape[1]):
            actions[e] = select_actions(values[:, e], rng, eps)
        return actions, hidden

    def _chosen(self, outs: list[Var], actions: np.ndarray, t: int, b: int) -> Var:
        idx = actions[:, t].T.reshape(self.n_agents * b, 1)
        qs = ad.reshape(ad.gather_last(outs[t], idx), (self.n_agents, b))
        return ad.transpose2(qs)

    def _target_totals(self, batch: EpisodeBatch, inputs: np.ndarray,
                       online_outs: list[Var]) -> np.ndarray:
        """Bootstrapped joint values for slots 1..T, shape (T, batch)."""
        b, t_len = batch.rewards.shape
        tgt_outs, _ = self.target_agents.unroll(inputs, frozen=True)
        totals = np.empty((t_len, b))
        scratch = Tape()
        for t in range(1, t_len + 1):
            tq = tgt_outs[t].data.reshape(self.n_agents, b, self.n_actions)
            if self.cfg.double_q:
                best = online_outs[t].data.argmax(axis=-1).reshape(self.n_agents, b)
                best_q = np.take_along_axis(tq, best[..., None], axis=-1)[..., 0]
            else:
                best_q = tq.max(axis=-1)
            mixed = self.target_mixer.mix(scratch.const(best_q.T), batch.state[:, t],
                                          scratch, frozen=True)
            totals[t - 1] = mixed.data
        return totals

    def update(self, batch: EpisodeBatch, weights: np.ndarray | None = None) -> dict:
        """One gradient step on a padded episode batch.

        `weights` (per-episode importance weights from prioritized
        sampling) scale each episode's squared-error terms; None means
        uniform. Returns the scalar loss plus per-episode mean absolute
        TD errors (used as replay priorities when prioritization is on).
        """
        cfg = self.cfg
        b, t_len = batch.rewards.shape
        rewards = batch.rewards
        if self.reward_stats is not None:
            self.reward_stats.update(rewards[batch.mask > 0.5])
            rewards = self.reward_stats.normalize(rewards)
        inputs = episode_inputs(batch, self.n_actions, cfg.obs_agent_id, cfg.obs_last_action)
        online_outs, tape = self.agents.unroll(inputs)
        targets = self._target_totals(batch, inputs, online_outs)
        mask_sum = float(batch.mask.sum())
        loss_acc = None
        abs_td = np.zeros((t_len, b))
        for t in range(t_len):
            q_tot = self.mixer.mix(self._chosen(online_outs, batch.actions, t, b),
                                   batch.state[:, t], tape)
            y = rewards[:, t] + cfg.gamma * (1.0 - batch.terminated[:, t]) * targets[t]
            delta = q_tot - tape.const(y)
            abs_td[t] = np.abs(delta.data) * batch.mask[:, t]
            scale = batch.mask[:, t] if weights is None else batch.mask[:, t] * weights
            piece = ad.total(ad.mul(ad.square(delta), tape.const(scale)))
            loss_acc = piece if loss_acc is None else loss_acc + piece
        loss = loss_acc * (0.5 / mask_sum)
        for store in self.agents.stores() + [self.mixer.store]:
            store.zero_grad()
        tape.backward(loss)
        for opt in self.optimizers:
            opt.step()
        self.update_calls += 1
        if self.update_calls % cfg.target_update_interval == 0:
            self._sync_targets()
        valid = np.maximum(batch.mask.sum(axis=1), 1.0)
        return {
            "loss": float(loss.data),
            "td_errors": abs_td.sum(axis=0) / valid,
            "updates": self.update_calls,
        }

    def checkpoint_entries(self) -> dict:
        entries: dict = self.agents.checkpoint_entries("agents")
        entries["mixer"] = self.mixer.store
        return entries

    def load_entries(self, entries: dict) -> None:
        for i, net in enumerate(self.agents.nets):
            net.store.copy_from(entries[f"agents.{i}"].store)
        self.mixer.store.copy_from(entries["mixer"])
        self._sync_targets()
