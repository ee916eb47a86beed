"""Belief recursions: centralized Bayes filter and the diffusion HMM strategy (DHS).

All products of likelihoods and beliefs are formed as sums of logs and
normalized once at the end of each operation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import DecPomdpModel, LikelihoodModel, TransitionKernel, ModelError

DEFAULT_ENUMERATION_CAP = 10**6
DEFAULT_MC_SAMPLES = 1000


class FilteringError(ArithmeticError):
    pass


class EnumerationCapError(FilteringError):
    pass


def to_log(mu: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(mu, dtype=float))


def normalize_log(log_belief: np.ndarray) -> np.ndarray:
    """Map (unnormalized) log-probabilities to a point on the simplex."""
    m = np.max(log_belief)
    if not np.isfinite(m):
        raise FilteringError("belief has no positive mass; cannot normalize")
    p = np.exp(log_belief - m)
    return p / p.sum()


# ---------------------------------------------------------------------------
# centralized filter


def centralized_adapt(
    eta: np.ndarray, observations: Sequence[int], likelihoods: Sequence[LikelihoodModel]
) -> np.ndarray:
    if len(observations) != len(likelihoods):
        raise ModelError(f"got {len(observations)} observations for {len(likelihoods)} agents")
    log_mu = to_log(eta)
    for xi, lik in zip(observations, likelihoods):
        log_mu = log_mu + lik.log_table[int(xi)]
    return normalize_log(log_mu)


def centralized_evolve(mu: np.ndarray, joint, kernel: TransitionKernel) -> np.ndarray:
    eta = kernel.matrix(tuple(joint)) @ mu
    return eta / eta.sum()


# ---------------------------------------------------------------------------
# DHS


def dhs_adapt(eta_k: np.ndarray, xi_k: int, lik: LikelihoodModel, beta: float) -> np.ndarray:
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return normalize_log(to_log(eta_k) + beta * lik.log_table[int(xi_k)])


def dhs_combine(psis: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Weighted geometric average of neighbor beliefs."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("combination weights must be non-negative and sum to 1")
    log_mu = np.zeros(len(psis[0]))
    for psi, c in zip(psis, weights):
        if c > 0:
            log_mu = log_mu + c * to_log(psi)
    return normalize_log(log_mu)


@dataclass(frozen=True)
class LocalTransitionMatrix:
    """Column-stochastic ``T_k(s | s', a_N)`` plus how it was obtained."""

    matrix: np.ndarray
    mode: str
    samples: int | None = None


def dhs_evolve(mu_k: np.ndarray, local_kernel: LocalTransitionMatrix | np.ndarray) -> np.ndarray:
    T = local_kernel.matrix if isinstance(local_kernel, LocalTransitionMatrix) else local_kernel
    eta = T @ mu_k
    return eta / eta.sum()


# ---------------------------------------------------------------------------
# local transition model


def _deterministic_actions(table: np.ndarray) -> np.ndarray | None:
    """Per-state action if the policy is deterministic on every one-hot belief."""
    if np.all(table.max(axis=1) == 1.0):
        return table.argmax(axis=1)
    return None


def local_transition_model(
    model: DecPomdpModel,
    k: int,
    a_neighbors: Mapping[int, int],
    mode: str = "exact",
    samples: int = DEFAULT_MC_SAMPLES,
    rng: np.random.Generator | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> LocalTransitionMatrix:
    """Marginalize the joint kernel over the actions of agents outside ``a_neighbors``.

    Non-neighbor actions at each previous state ``s'`` are weighted by
    ``prod_l pi_l(a_l | one_hot(s'))``. The neighbors' own factor
    ``pi(a_N | s')`` is constant in ``s`` and drops out of the per-``s'``
    normalization, so it is not applied (it may be zero for deterministic
    policies, which would leave columns empty).

    In ``"exact"`` mode ``cap`` bounds the number of positive-probability
    non-neighbor tuples enumerated for any single ``s'``.
    """
    K, S = model.num_agents, model.num_states
    if k not in a_neighbors:
        raise ModelError(f"agent {k} must be part of its own neighborhood")
    for l, a in a_neighbors.items():
        if not 0 <= l < K:
            raise ModelError(f"neighbor index {l} out of range")
        if not 0 <= a < model.action_sizes[l]:
            raise ModelError(f"action {a} of agent {l} out of range")
    others = [l for l in range(K) if l not in a_neighbors]
    base = np.zeros(K, dtype=np.int64)
    for l, a in a_neighbors.items():
        base[l] = a

    tables = model.policy_state_tables()
    det = {l: _deterministic_actions(tables[l]) for l in others}
    if mode not in ("exact", "monte-carlo"):
        raise ValueError(f"unknown marginalization mode {mode!r}")
    if mode == "monte-carlo" and (samples is None or samples < 1):
        raise ValueError("monte-carlo mode needs a positive sample count")

    if all(det[l] is not None for l in others):
        # every non-neighbor action is a function of s': one tuple per column
        s_prev = np.arange(S)
        joints = np.tile(base, (S, 1))
        for l in others:
            joints[:, l] = det[l]
        weights = np.ones(S)
    else:
        if mode == "monte-carlo" and rng is None:
            raise ValueError("monte-carlo mode needs a random generator")
        s_list, j_list, w_list = [], [], []
        for sp in range(S):
            combos, w = (
                _enumerate_column(tables, others, sp, cap)
                if mode == "exact"
                else _sample_column(tables, others, sp, samples, rng)
            )
            j = np.tile(base, (len(w), 1))
            j[:, others] = combos
            s_list.append(np.full(len(w), sp))
            j_list.append(j)
            w_list.append(w)
        s_prev = np.concatenate(s_list)
        joints = np.concatenate(j_list)
        weights = np.concatenate(w_list)

    cols = model.transition.columns(s_prev, joints)
    acc = np.zeros((S, S))
    np.add.at(acc, s_prev, weights[:, None] * cols)
    acc /= acc.sum(axis=1, keepdims=True)
    return LocalTransitionMatrix(
        matrix=acc.T.copy(), mode=mode, samples=samples if mode == "monte-carlo" else None
    )


def _enumerate_column(tables, others, sp, cap):
    supports = [np.flatnonzero(tables[l][sp] > 0) for l in others]
    count = 1
    for sup in supports:
        count *= len(sup)
    if count > cap:
        raise EnumerationCapError(
            f"{count} non-neighbor action tuples at s'={sp} exceed the enumeration cap {cap}; "
            "use monte-carlo mode or raise the cap"
        )
    combos = np.array(list(itertools.product(*supports)), dtype=np.int64).reshape(count, len(others))
    w = np.ones(count)
    for j, l in enumerate(others):
        w *= tables[l][sp, combos[:, j]]
    return combos, w


def _sample_column(tables, others, sp, n, rng):
    draws = np.empty((n, len(others)), dtype=np.int64)
    for j, l in enumerate(others):
        p = tables[l][sp]
        if p.max() == 1.0:
            draws[:, j] = int(p.argmax())
        else:
            c = np.cumsum(p)
            draws[:, j] = np.minimum(np.searchsorted(c, rng.random(n) * c[-1], side="right"), len(p) - 1)
    combos, counts = np.unique(draws, axis=0, return_counts=True)
    return combos, counts / n
