"""On-policy learners: advantage actor-critic and its proximally-clipped
variant.

Both use decentralized recurrent policies and a centralized feedforward
critic on the global state. Returns are n-step with truncation-aware
bootstrapping from a hard-copied target critic: a true terminal ends the
sum with no bootstrap, while running out of steps (or hitting a time
limit) bootstraps the value of the next state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import autodiff as ad
from ..nn import Adam, FEEDFORWARD, NetSpec, Network, Tape, Var
from ..replay import EpisodeBatch
from ..rng import RngStream
from .common import (ActorCriticConfig, MultiAgentNet, PPOConfig, RunningMeanStd,
                     episode_inputs, sample_actions, stack_agent_inputs)


@dataclass(frozen=True)
class Rollout:
    """An on-policy episode batch plus collection-time log-probabilities."""

    batch: EpisodeBatch
    behavior_logp: np.ndarray  # (batch, T, n_agents)


def n_step_returns(rewards: np.ndarray, terminated: np.ndarray, mask: np.ndarray,
                   bootstrap: np.ndarray, gamma: float, n_step: int) -> np.ndarray:
    """Discounted n-step targets per valid slot.

    rewards/terminated/mask are (batch, T); bootstrap is (batch, T+1) state
    values. A terminal inside the window stops the sum with no bootstrap;
    otherwise the value of the first unconsumed state is appended, which
    covers both full windows and episodes cut by a time limit.
    """
    b, t_len = rewards.shape
    out = np.zeros((b, t_len))
    for i in range(b):
        length = int(round(mask[i].sum()))
        for t in range(length):
            acc = 0.0
            k = 0
            ended = False
            while k < n_step and t + k < length:
                acc += gamma ** k * rewards[i, t + k]
                if terminated[i, t + k] > 0.5:
                    ended = True
                    break
                k += 1
            if not ended:
                acc += gamma ** k * bootstrap[i, t + k]
            out[i, t] = acc
    return out


class ActorCriticLearner:
    """Synchronous advantage actor-critic with a centralized critic."""

    def __init__(self, env_info: dict, cfg: ActorCriticConfig, rng: RngStream):
        self.cfg = cfg.validated()
        self.n_agents = int(env_info["n_agents"])
        self.n_actions = int(env_info["n_actions"])
        self.obs_dim = int(env_info["obs_dim"])
        self.state_dim = int(env_info["state_dim"])
        in_dim = self.obs_dim
        in_dim += self.n_actions if cfg.obs_last_action else 0
        in_dim += self.n_agents if cfg.obs_agent_id else 0
        self.policy = MultiAgentNet(in_dim, self.n_actions, self.n_agents, cfg.hidden_dim,
                                    cfg.share_parameters, cfg.recurrent, rng)
        critic_spec = NetSpec(self.state_dim, 1, cfg.hidden_dim, FEEDFORWARD)
        self.critic = Network(critic_spec, rng)
        self.target_critic = Network(critic_spec)
        self.target_critic.store.copy_from(self.critic.store)
        self.optimizers = [Adam(store, lr=cfg.lr)
                           for store in self.policy.stores() + [self.critic.store]]
        self.reward_stats = RunningMeanStd() if cfg.standardize_rewards else None
        self.update_calls = 0

    def zero_hidden(self, n_envs: int) -> np.ndarray | None:
        return self.policy.zero_hidden(n_envs)

    def act(self, obs: np.ndarray, last_actions: np.ndarray | None,
            hidden: np.ndarray | None, rng: RngStream, *, explore: bool,
            env_step: int = 0) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
        """Sample (training) or argmax (evaluation) joint actions.

        obs is (n_agents, n_envs, obs_dim); returns ((n_envs, n_agents)
        actions, next hidden, (n_envs, n_agents) chosen log-probs).
        """
        inputs = stack_agent_inputs(obs, last_actions, self.n_actions,
                                    self.cfg.obs_agent_id, self.cfg.obs_last_action)
        logits, hidden = self.policy.act_values(inputs, hidden)
        n_envs = obs.shape[1]
        actions = np.empty((n_envs, self.n_agents), dtype=np.int64)
        logp = np.empty((n_envs, self.n_agents))
        for e in range(n_envs):
            actions[e], logp[e] = sample_actions(logits[:, e], rng, greedy=not explore)
        return actions, hidden, logp

    def _critic_values(self, states: np.ndarray, tape: Tape | None = None,
                       frozen: bool = False, net: Network | None = None):
        """Values over (batch, T, state_dim) slots as a (batch*T, 1) Var."""
        b, t_len, s = states.shape
        out, _, tape = (net or self.critic).forward(states.reshape(b * t_len, s),
                                                    tape=tape, frozen=frozen)
        return ad.reshape(out, (b, t_len)), tape

    def _returns(self, batch: EpisodeBatch, rewards: np.ndarray) -> np.ndarray:
        boot, _ = self._critic_values(batch.state, frozen=True, net=self.target_critic)
        return n_step_returns(rewards, batch.terminated, batch.mask, boot.data,
                              self.cfg.gamma, self.cfg.n_step)

    def _standardized(self, batch: EpisodeBatch) -> np.ndarray:
        if self.reward_stats is None:
            return batch.rewards
        self.reward_stats.update(batch.rewards[batch.mask > 0.5])
        return self.reward_stats.normalize(batch.rewards)

    def _agent_major(self, per_episode: np.ndarray) -> list[np.ndarray]:
        """Tile (batch, T) weights to per-step agent-major (n_agents*batch,) rows."""
        return [np.tile(per_episode[:, t], self.n_agents) for t in range(per_episode.shape[1])]

    def _policy_terms(self, outs: list[Var], actions: np.ndarray,
                      advantage: np.ndarray, mask: np.ndarray) -> tuple[Var, Var]:
        """Masked mean of log-prob-weighted advantages and of entropy."""
        b, t_len = mask.shape
        adv_rows = self._agent_major(advantage * mask)
        mask_rows = self._agent_major(mask)
        denom = self.n_agents * float(mask.sum())
        score_acc = None
        ent_acc = None
        for t in range(t_len):
            tape = outs[t]._tape
            log_probs = ad.log_softmax(outs[t])
            idx = actions[:, t].T.reshape(self.n_agents * b, 1)
            lp = ad.reshape(ad.gather_last(log_probs, idx), (self.n_agents * b,))
            score = ad.total(ad.mul(lp, tape.const(adv_rows[t])))
            ent_rows = -ad.sum_along(ad.mul(ad.softmax(outs[t]), log_probs), -1)
            ent = ad.total(ad.mul(ent_rows, tape.const(mask_rows[t])))
            score_acc = score if score_acc is None else score_acc + score
            ent_acc = ent if ent_acc is None else ent_acc + ent
        return score_acc * (1.0 / denom), ent_acc * (1.0 / denom)

    def _value_loss(self, batch: EpisodeBatch, returns: np.ndarray, tape: Tape) -> Var:
        values, _ = self._critic_values(batch.state[:, :-1], tape=tape)
        err = ad.square(values - tape.const(returns))
        return ad.total(ad.mul(err, tape.const(batch.mask))) * (1.0 / float(batch.mask.sum()))

    def _step_optimizers(self, loss: Var, tape: Tape) -> None:
        for store in self.policy.stores() + [self.critic.store]:
            store.zero_grad()
        tape.backward(loss)
        for opt in self.optimizers:
            opt.step()

    def _after_update(self) -> None:
        self.update_calls += 1
        if self.update_calls % self.cfg.target_update_interval == 0:
            self.target_critic.store.copy_from(self.critic.store)

    def update(self, rollout: Rollout) -> dict:
        """One gradient step on a batch of fresh on-policy episodes."""
        batch = rollout.batch
        rewards = self._standardized(batch)
        returns = self._returns(batch, rewards)
        tape = Tape()
        inputs = episode_inputs(batch, self.n_actions, self.cfg.obs_agent_id,
                                self.cfg.obs_last_action)
        outs, tape = self.policy.unroll(inputs[:-1], tape=tape)
        values, _ = self._critic_values(batch.state[:, :-1], frozen=True)
        advantage = returns - values.data
        score, entropy = self._policy_terms(outs, batch.actions, advantage, batch.mask)
        value_loss = self._value_loss(batch, returns, tape)
        loss = -score - self.cfg.entropy_coef * entropy + value_loss
        self._step_optimizers(loss, tape)
        self._after_update()
        return {
            "policy_loss": float(-score.data),
            "value_loss": float(value_loss.data),
            "entropy": float(entropy.data),
            "updates": self.update_calls,
        }

    def checkpoint_entries(self) -> dict:
        entries: dict = self.policy.checkpoint_entries("policy")
        entries["critic"] = self.critic
        return entries

    def load_entries(self, entries: dict) -> None:
        for i, net in enumerate(self.policy.nets):
            net.store.copy_from(entries[f"policy.{i}"].store)
        self.critic.store.copy_from(entries["critic"].store)
        self.target_critic.store.copy_from(self.critic.store)


class PPOLearner(ActorCriticLearner):
    """Clipped-ratio variant that reuses each batch for several epochs."""

    def __init__(self, env_info: dict, cfg: PPOConfig, rng: RngStream):
        super().__init__(env_info, cfg, rng)
        self.cfg: PPOConfig = cfg.validated()

    def _surrogate_terms(self, outs: list[Var], actions: np.ndarray,
                         advantage: np.ndarray, mask: np.ndarray,
                         behavior_logp: np.ndarray) -> tuple[Var, Var]:
        """Masked means of the clipped surrogate and of entropy."""
        cfg = self.cfg
        b, t_len = mask.shape
        adv_rows = self._agent_major(advantage * mask)
        mask_rows = self._agent_major(mask)
        denom = self.n_agents * float(mask.sum())
        surr_acc = None
        ent_acc = None
        for t in range(t_len):
            tape = outs[t]._tape
            log_probs = ad.log_softmax(outs[t])
            idx = actions[:, t].T.reshape(self.n_agents * b, 1)
            lp = ad.reshape(ad.gather_last(log_probs, idx), (self.n_agents * b,))
            old = tape.const(behavior_logp[:, t].T.reshape(self.n_agents * b))
            ratio = ad.exp(lp - old)
            adv = tape.const(adv_rows[t])
            plain = ad.mul(ratio, adv)
            clipped = ad.mul(ad.clip(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio), adv)
            surr = ad.total(ad.minimum(plain, clipped))
            ent_rows = -ad.sum_along(ad.mul(ad.softmax(outs[t]), log_probs), -1)
            ent = ad.total(ad.mul(ent_rows, tape.const(mask_rows[t])))
            surr_acc = surr if surr_acc is None else surr_acc + surr
            ent_acc = ent if ent_acc is None else ent_acc + ent
        return surr_acc * (1.0 / denom), ent_acc * (1.0 / denom)

    def update(self, rollout: Rollout) -> dict:
        batch = rollout.batch
        cfg = self.cfg
        rewards = self._standardized(batch)
        returns = self._returns(batch, rewards)
        values, _ = self._critic_values(batch.state[:, :-1], frozen=True)
        advantage = returns - values.data
        inputs = episode_inputs(batch, self.n_actions, cfg.obs_agent_id, cfg.obs_last_action)
        result = {}
        for _ in range(cfg.epochs):
            tape = Tape()
            outs, tape = self.policy.unroll(inputs[:-1], tape=tape)
            surrogate, entropy = self._surrogate_terms(outs, batch.actions, advantage,
                                                       batch.mask, rollout.behavior_logp)
            value_loss = self._value_loss(batch, returns, tape)
            loss = -surrogate - cfg.entropy_coef * entropy + value_loss
            self._step_optimizers(loss, tape)
            result = {
                "policy_loss": float(-surrogate.data),
                "value_loss": float(value_loss.data),
                "entropy": float(entropy.data),
            }
        self._after_update()
        result["updates"] = self.update_calls
        return result
