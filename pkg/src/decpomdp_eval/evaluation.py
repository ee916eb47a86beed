"""Regularized TD(0) policy evaluation: centralized, diffusion, and CTDE baseline drivers.

Each ``step_*`` function advances a :class:`SimState` by one iteration and
returns the new state with a :class:`MetricsRow`. Every random draw is taken
from a :class:`~decpomdp_eval.streams.Streams` substream keyed by
(agent, iteration, phase), so diffusion and baseline runs with the same seed
see identical observations, actions and transitions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from . import streams as st
from .analysis import agreement_error, kl_divergence, mean_centroid_distance, sbe
from .filtering import (
    DEFAULT_ENUMERATION_CAP,
    DEFAULT_MC_SAMPLES,
    centralized_adapt,
    centralized_evolve,
    dhs_adapt,
    dhs_combine,
    dhs_evolve,
    local_transition_model,
)
from .model import DecPomdpModel, sample_action, sample_next_state, sample_observation, uniform_belief
from .network import CombinationMatrix


class RegimeWarning(RuntimeWarning):
    pass


class FeatureMap(Protocol):
    dim: int
    b_phi: float
    l_phi: float

    def __call__(self, mu: np.ndarray) -> np.ndarray: ...


class IdentityFeatures:
    """Use the belief itself as the feature vector."""

    b_phi = 1.0
    l_phi = 1.0

    def __init__(self, num_states: int):
        self.dim = int(num_states)

    def __call__(self, mu):
        return mu


@dataclass(frozen=True)
class LearnerConfig:
    alpha: float
    rho: float
    gamma: float
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def check_regime(self, features: FeatureMap, warn: bool = True) -> bool:
        ok = self.rho >= 0.75 * self.gamma * features.b_phi * features.l_phi
        if not ok and warn:
            warnings.warn(
                f"rho={self.rho} < 0.75*gamma*B_phi*L_phi="
                f"{0.75 * self.gamma * features.b_phi * features.l_phi}; "
                "parameter-boundedness guarantees do not apply",
                RegimeWarning,
                stacklevel=2,
            )
        return ok


@dataclass(frozen=True)
class Marginalization:
    mode: str = "exact"
    samples: int = DEFAULT_MC_SAMPLES
    cap: int = DEFAULT_ENUMERATION_CAP


# ---------------------------------------------------------------------------
# primitive updates


def td_error(r: float, phi_eta_next, phi_mu, w, gamma: float) -> float:
    phi_eta_next, phi_mu, w = np.asarray(phi_eta_next), np.asarray(phi_mu), np.asarray(w)
    if not (phi_eta_next.shape == phi_mu.shape == w.shape):
        raise ValueError(f"dimension mismatch: {phi_eta_next.shape}, {phi_mu.shape}, {w.shape}")
    return float(r + gamma * (phi_eta_next @ w) - phi_mu @ w)


def local_adapt(w, delta: float, phi_mu, cfg: LearnerConfig) -> np.ndarray:
    return (1.0 - 2.0 * cfg.rho * cfg.alpha) * np.asarray(w) + cfg.alpha * delta * np.asarray(phi_mu)


def param_combine(zs: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    Z = np.asarray(zs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != len(weights):
        raise ValueError("need one parameter vector per weight")
    return weights @ Z


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class AgentState:
    w: np.ndarray
    mu: np.ndarray | None
    eta: np.ndarray
    last_action: int | None = None
    last_reward: float | None = None


@dataclass(frozen=True)
class CentralState:
    """Fusion-center quantities: the joint belief chain and one parameter vector."""

    w: np.ndarray
    mu: np.ndarray | None
    eta: np.ndarray


@dataclass(frozen=True)
class SimState:
    iteration: int
    s: int
    agents: tuple[AgentState, ...] | None = None
    central: CentralState | None = None


@dataclass
class MetricsRow:
    iteration: int
    deltas: np.ndarray
    sbe: float
    centroid_norm: float
    param_norm: float
    agreement_error: float | None = None
    mean_distance: float | None = None
    mean_kl_to_central: float | None = None
    kl_per_agent: np.ndarray | None = None
    kl_infinite: int = 0
    baseline_gap: float | None = None
    rewards: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


Trace = Callable[[str, int, int, object], None]


def _initial_state(model: DecPomdpModel, streams: st.Streams) -> int:
    S = model.num_states
    return int(streams.get(st.ENV, 0, st.INIT).integers(S))


def init_centralized(model: DecPomdpModel, features: FeatureMap, streams: st.Streams) -> SimState:
    central = CentralState(w=np.zeros(features.dim), mu=None, eta=uniform_belief(model.num_states))
    return SimState(iteration=0, s=_initial_state(model, streams), central=central)


def init_network(
    model: DecPomdpModel, features: FeatureMap, streams: st.Streams, with_central: bool = True
) -> SimState:
    """Uniform priors and zero parameters for every agent (and the fusion center)."""
    S = model.num_states
    agents = tuple(
        AgentState(w=np.zeros(features.dim), mu=None, eta=uniform_belief(S)) for _ in range(model.num_agents)
    )
    central = CentralState(w=np.zeros(features.dim), mu=None, eta=uniform_belief(S)) if with_central else None
    return SimState(iteration=0, s=_initial_state(model, streams), agents=agents, central=central)


# ---------------------------------------------------------------------------
# shared phases


def _observe(model, s, i, streams):
    return [
        sample_observation(model.likelihoods, k, s, streams.get(k, i, st.OBSERVE))
        for k in range(model.num_agents)
    ]


def _act(model, beliefs, i, streams, trace):
    actions = []
    for k, mu in enumerate(beliefs):
        if trace is not None:
            trace("act", i, k, mu)
        actions.append(sample_action(model.policies[k], mu, streams.get(k, i, st.ACT)))
    return tuple(actions)


def _environment(model, s, joint, i, streams):
    s_next = sample_next_state(model.transition, s, joint, streams.get(st.ENV, i, st.TRANSITION))
    rewards = np.array([model.rewards(k, s, joint, s_next) for k in range(model.num_agents)])
    return s_next, rewards


def _local_beliefs(state, model, C, cfg, streams, marg, trace):
    """Phases shared by diffusion and baseline: observe, adapt/combine, act, move, evolve."""
    i, K = state.iteration, model.num_agents
    xi = _observe(model, state.s, i, streams)
    psis = [dhs_adapt(a.eta, xi[k], model.likelihoods[k], cfg.beta) for k, a in enumerate(state.agents)]
    mus = []
    for k in range(K):
        nbrs = C.neighbors(k)
        mus.append(dhs_combine([psis[l] for l in nbrs], C.weights[nbrs, k]))
        if trace is not None:
            trace("combine", i, k, mus[-1])
    joint = _act(model, mus, i, streams, trace)
    s_next, rewards = _environment(model, state.s, joint, i, streams)
    etas = []
    for k in range(K):
        a_n = {l: joint[l] for l in C.neighbors(k)}
        a_n[k] = joint[k]
        rng = streams.get(k, i, st.MARGINALIZE) if marg.mode == "monte-carlo" else None
        local = local_transition_model(
            model, k, a_n, mode=marg.mode, samples=marg.samples, rng=rng, cap=marg.cap
        )
        if trace is not None:
            trace("local_model", i, k, local.mode)
        etas.append(dhs_evolve(mus[k], local))
    return xi, mus, etas, joint, s_next, rewards


def _central_update(central, model, xi, joint, r_avg, features, cfg):
    """Fusion-center adapt/evolve plus one regularized TD(0) step on ``w``."""
    mu = centralized_adapt(central.eta, xi, model.likelihoods)
    eta_next = centralized_evolve(mu, joint, model.transition)
    phi_mu = features(mu)
    delta = td_error(r_avg, features(eta_next), phi_mu, central.w, cfg.gamma)
    w = local_adapt(central.w, delta, phi_mu, cfg)
    return CentralState(w=w, mu=mu, eta=eta_next), delta


def _kl_stats(mu_central, mus):
    kls = np.array([kl_divergence(mu_central, m) for m in mus])
    finite = kls[np.isfinite(kls)]
    mean = float(finite.mean()) if len(finite) else math.inf
    return kls, mean, int(len(kls) - len(finite))


# ---------------------------------------------------------------------------
# drivers


def step_centralized(
    state: SimState,
    model: DecPomdpModel,
    cfg: LearnerConfig,
    streams: st.Streams,
    features: FeatureMap | None = None,
    trace: Trace | None = None,
) -> tuple[SimState, MetricsRow]:
    features = features or IdentityFeatures(model.num_states)
    i, c = state.iteration, state.central
    xi = _observe(model, state.s, i, streams)
    mu = centralized_adapt(c.eta, xi, model.likelihoods)
    joint = _act(model, [mu] * model.num_agents, i, streams, trace)
    s_next, rewards = _environment(model, state.s, joint, i, streams)
    eta_next = centralized_evolve(mu, joint, model.transition)
    r_avg = float(np.mean(rewards))
    phi_mu = features(mu)
    delta = td_error(r_avg, features(eta_next), phi_mu, c.w, cfg.gamma)
    w = local_adapt(c.w, delta, phi_mu, cfg)
    new = SimState(iteration=i + 1, s=s_next, central=CentralState(w=w, mu=mu, eta=eta_next))
    norm = float(np.linalg.norm(w))
    row = MetricsRow(i, np.array([delta]), sbe([delta]), norm, norm, rewards=rewards)
    return new, row


def step_diffusion(
    state: SimState,
    model: DecPomdpModel,
    C: CombinationMatrix,
    cfg: LearnerConfig,
    streams: st.Streams,
    features: FeatureMap | None = None,
    marginalization: Marginalization | None = None,
    trace: Trace | None = None,
) -> tuple[SimState, MetricsRow]:
    """One iteration of diffusion policy evaluation.

    If ``state.central`` is set it is advanced as a shadow fusion center fed
    with the same observations and executed actions. It never influences the
    agents; it only supplies the KL and baseline-gap instrumentation.
    """
    features = features or IdentityFeatures(model.num_states)
    marg = marginalization or Marginalization()
    i, K = state.iteration, model.num_agents
    xi, mus, etas, joint, s_next, rewards = _local_beliefs(state, model, C, cfg, streams, marg, trace)

    deltas = np.empty(K)
    zs = []
    for k, agent in enumerate(state.agents):
        phi_mu = features(mus[k])
        deltas[k] = td_error(rewards[k], features(etas[k]), phi_mu, agent.w, cfg.gamma)
        zs.append(local_adapt(agent.w, deltas[k], phi_mu, cfg))
    ws = [param_combine([zs[l] for l in C.neighbors(k)], C.weights[C.neighbors(k), k]) for k in range(K)]
    agents = tuple(
        AgentState(w=ws[k], mu=mus[k], eta=etas[k], last_action=joint[k], last_reward=float(rewards[k]))
        for k in range(K)
    )
    if trace is not None:
        trace("param_combine", i, -1, ws)

    centroid = np.mean(ws, axis=0)
    row = MetricsRow(
        iteration=i,
        deltas=deltas,
        sbe=sbe(deltas),
        centroid_norm=float(np.linalg.norm(centroid)),
        param_norm=float(np.linalg.norm(np.concatenate(ws))),
        agreement_error=agreement_error(ws),
        mean_distance=mean_centroid_distance(ws),
        rewards=rewards,
    )
    central = None
    if state.central is not None:
        central, _ = _central_update(state.central, model, xi, joint, float(np.mean(rewards)), features, cfg)
        row.kl_per_agent, row.mean_kl_to_central, row.kl_infinite = _kl_stats(central.mu, mus)
        row.baseline_gap = float(np.linalg.norm(centroid - central.w))
        row.extra["w_star"] = central.w
    row.extra["centroid"] = centroid
    return SimState(iteration=i + 1, s=s_next, agents=agents, central=central), row


def step_baseline(
    state: SimState,
    model: DecPomdpModel,
    C: CombinationMatrix,
    cfg: LearnerConfig,
    streams: st.Streams,
    features: FeatureMap | None = None,
    marginalization: Marginalization | None = None,
    trace: Trace | None = None,
) -> tuple[SimState, MetricsRow]:
    """Centralized training for decentralized execution.

    Local DHS beliefs choose the actions; the fusion center's joint belief
    and the averaged reward drive the single parameter vector ``w*``.
    """
    features = features or IdentityFeatures(model.num_states)
    marg = marginalization or Marginalization()
    if state.central is None:
        raise ValueError("baseline needs a central state")
    i = state.iteration
    xi, mus, etas, joint, s_next, rewards = _local_beliefs(state, model, C, cfg, streams, marg, trace)
    central, delta = _central_update(state.central, model, xi, joint, float(np.mean(rewards)), features, cfg)
    agents = tuple(
        replace(a, mu=mus[k], eta=etas[k], last_action=joint[k], last_reward=float(rewards[k]))
        for k, a in enumerate(state.agents)
    )
    norm = float(np.linalg.norm(central.w))
    row = MetricsRow(i, np.array([delta]), sbe([delta]), norm, norm, rewards=rewards)
    row.kl_per_agent, row.mean_kl_to_central, row.kl_infinite = _kl_stats(central.mu, mus)
    row.extra["w_star"] = central.w
    return SimState(iteration=i + 1, s=s_next, agents=agents, central=central), row
