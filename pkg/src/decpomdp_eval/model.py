"""Dec-POMDP data model: transition kernels, likelihoods, rewards, policies.

Conditional probability tables are stored outcome-first, i.e. ``table[x, y]``
holds ``P(x | y)`` and columns sum to one. This matches the column-stochastic
convention ``T[s, s']`` used throughout the filtering code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# joint actions


class JointActionCodec:
    """Mixed-radix codec between K-tuples of action indices and flat indices."""

    def __init__(self, action_sizes: Sequence[int]):
        self.action_sizes = tuple(int(a) for a in action_sizes)
        if not self.action_sizes or min(self.action_sizes) < 1:
            raise ModelError("every agent needs a nonempty action set")
        self.size = int(np.prod(self.action_sizes, dtype=np.int64))

    def encode(self, joint) -> int:
        joint = tuple(int(a) for a in joint)
        self.check(joint)
        return int(np.ravel_multi_index(joint, self.action_sizes))

    def encode_many(self, joints: np.ndarray) -> np.ndarray:
        joints = np.asarray(joints, dtype=np.int64)
        return np.ravel_multi_index(tuple(joints.T), self.action_sizes)

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise ModelError(f"joint action index {index} out of range [0, {self.size})")
        return tuple(int(a) for a in np.unravel_index(index, self.action_sizes))

    def check(self, joint) -> None:
        if len(joint) != len(self.action_sizes):
            raise ModelError(
                f"joint action has {len(joint)} entries, expected {len(self.action_sizes)}"
            )
        for k, (a, n) in enumerate(zip(joint, self.action_sizes)):
            if not 0 <= a < n:
                raise ModelError(f"action {a} of agent {k} out of range [0, {n})")


# ---------------------------------------------------------------------------
# transition kernels


class TransitionKernel(Protocol):
    num_states: int
    action_sizes: tuple[int, ...]

    def columns(self, s_prev: np.ndarray, joints: np.ndarray) -> np.ndarray:
        """Rows ``T(. | s_prev[n], joints[n])``, shape (N, S)."""
        ...

    def matrix(self, joint) -> np.ndarray:
        """Column-stochastic ``T[s, s']`` for one joint action."""
        ...

    def distinct_matrices(self):
        """Yield ``(label, matrix)`` for every distinct per-action matrix."""
        ...


class TabularTransition:
    """Dense kernel indexed by flat joint action: ``table[a, s, s']``."""

    def __init__(self, table, action_sizes: Sequence[int]):
        self.table = np.array(table, dtype=float)
        self.codec = JointActionCodec(action_sizes)
        self.action_sizes = self.codec.action_sizes
        if self.table.ndim != 3 or self.table.shape[1] != self.table.shape[2]:
            raise ModelError("transition table must have shape (A, S, S)")
        if self.table.shape[0] != self.codec.size:
            raise ModelError(
                f"transition table has {self.table.shape[0]} joint actions, "
                f"action sizes imply {self.codec.size}"
            )
        self.table.setflags(write=False)
        self.num_states = self.table.shape[1]

    def columns(self, s_prev, joints):
        idx = self.codec.encode_many(np.atleast_2d(joints))
        return self.table[idx, :, np.asarray(s_prev, dtype=np.int64)]

    def matrix(self, joint):
        return self.table[self.codec.encode(joint)]

    def distinct_matrices(self):
        for a in range(self.codec.size):
            yield self.codec.decode(a), self.table[a]


# ---------------------------------------------------------------------------
# likelihoods, rewards, policies


@dataclass(frozen=True)
class LikelihoodModel:
    """One agent's observation table ``L[xi, s]``."""

    table: np.ndarray
    log_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2:
            raise ModelError("likelihood table must be 2-D (observations x states)")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        with np.errstate(divide="ignore"):
            log_table = np.log(table)
        log_table.setflags(write=False)
        object.__setattr__(self, "log_table", log_table)

    @property
    def num_observations(self) -> int:
        return self.table.shape[0]

    @property
    def num_states(self) -> int:
        return self.table.shape[1]


class RewardModel(Protocol):
    def __call__(self, k: int, s: int, joint, s_next: int) -> float: ...

    def value_range(self) -> tuple[float, float]: ...


class TabularReward:
    """Per-agent rewards ``table[k, a, s, s_next]``."""

    def __init__(self, table, action_sizes: Sequence[int]):
        self.table = np.array(table, dtype=float)
        self.codec = JointActionCodec(action_sizes)
        if self.table.ndim != 4 or self.table.shape[1] != self.codec.size:
            raise ModelError("reward table must have shape (K, A, S, S)")
        self.table.setflags(write=False)

    def __call__(self, k, s, joint, s_next):
        return float(self.table[k, self.codec.encode(joint), s, s_next])

    def value_range(self):
        return float(self.table.min()), float(self.table.max())


class Policy(Protocol):
    num_actions: int

    def distribution(self, mu: np.ndarray) -> np.ndarray: ...


class MixturePolicy:
    """``pi(a | mu) = sum_s mu(s) P[s, a]``; reduces to ``P[s]`` on one-hot beliefs."""

    def __init__(self, table):
        self.table = np.array(table, dtype=float)
        if self.table.ndim != 2:
            raise ModelError("policy table must have shape (S, A)")
        self.table.setflags(write=False)
        self.num_actions = self.table.shape[1]

    def distribution(self, mu):
        p = np.asarray(mu) @ self.table
        return p / p.sum()


class MapPolicy:
    """Deterministic: act ``action_of_state[argmax mu]``; ties go to the lowest index."""

    def __init__(self, action_of_state, num_actions: int):
        self.action_of_state = np.array(action_of_state, dtype=np.int64)
        self.action_of_state.setflags(write=False)
        self.num_actions = int(num_actions)

    def distribution(self, mu):
        p = np.zeros(self.num_actions)
        p[self.action_of_state[int(np.argmax(mu))]] = 1.0
        return p


def state_action_table(policy: Policy, num_states: int) -> np.ndarray:
    """``pi(. | one_hot(s))`` stacked over s, shape (S, A)."""
    return np.stack([policy.distribution(one_hot_belief(s, num_states)) for s in range(num_states)])


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True, eq=False)
class DecPomdpModel:
    num_states: int
    action_sizes: tuple[int, ...]
    transition: TransitionKernel
    likelihoods: tuple[LikelihoodModel, ...]
    rewards: RewardModel
    policies: tuple[Policy, ...]
    gamma: float
    r_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "action_sizes", tuple(int(a) for a in self.action_sizes))
        object.__setattr__(self, "likelihoods", tuple(self.likelihoods))
        object.__setattr__(self, "policies", tuple(self.policies))
        if self.num_states < 1:
            raise ModelError("need at least one state")
        if not self.action_sizes:
            raise ModelError("need at least one agent")
        if len(self.likelihoods) != self.num_agents or len(self.policies) != self.num_agents:
            raise ModelError("one likelihood and one policy per agent required")

    @property
    def num_agents(self) -> int:
        return len(self.action_sizes)

    @property
    def codec(self) -> JointActionCodec:
        return JointActionCodec(self.action_sizes)

    def policy_state_tables(self) -> list[np.ndarray]:
        cached = self.__dict__.get("_policy_state_tables")
        if cached is None:
            cached = [state_action_table(p, self.num_states) for p in self.policies]
            object.__setattr__(self, "_policy_state_tables", cached)
        return cached


# ---------------------------------------------------------------------------
# validation


@dataclass
class Violation:
    kind: str
    message: str
    where: tuple = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind, message, where=()):
        self.violations.append(Violation(kind, message, tuple(where)))

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self):
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "message": v.message, "where": list(v.where)} for v in self.violations
            ],
        }


def validate_model(model: DecPomdpModel) -> ValidationReport:
    report = ValidationReport()
    S = model.num_states
    if not 0.0 <= model.gamma < 1.0:
        report.add("discount", f"gamma={model.gamma} outside [0, 1)")
    if model.r_max < 0:
        report.add("reward_range", f"r_max={model.r_max} is negative")

    if model.transition.num_states != S:
        report.add("shape", f"transition kernel has {model.transition.num_states} states, model has {S}")
    else:
        for label, T in model.transition.distinct_matrices():
            if np.any(T < 0):
                report.add("transition_negative", "negative transition entry", (label,))
            sums = T.sum(axis=0)
            for s_prev in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
                report.add(
                    "transition_row_sum",
                    f"T(.|s'={s_prev}, a={label}) sums to {sums[s_prev]!r}",
                    (label, int(s_prev)),
                )

    for k, lik in enumerate(model.likelihoods):
        if lik.num_states != S:
            report.add("shape", f"likelihood of agent {k} covers {lik.num_states} states", (k,))
            continue
        if np.any(lik.table < 0):
            report.add("likelihood_negative", f"negative likelihood entry for agent {k}", (k,))
        sums = lik.table.sum(axis=0)
        for s in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
            report.add("likelihood_row_sum", f"L_{k}(.|s={s}) sums to {sums[s]!r}", (k, int(s)))
        # every observation is in the declared support; a zero breaks |log L| <= B
        for xi, s in zip(*np.nonzero(lik.table == 0)):
            report.add(
                "likelihood_unbounded_log",
                f"L_{k}(xi={xi}|s={s}) = 0 makes |log L| unbounded",
                (k, int(xi), int(s)),
            )

    lo, hi = model.rewards.value_range()
    if lo < 0 or hi > model.r_max:
        report.add("reward_range", f"rewards span [{lo}, {hi}], outside [0, {model.r_max}]")

    for k, (pol, n) in enumerate(zip(model.policies, model.action_sizes)):
        if pol.num_actions != n:
            report.add("policy_shape", f"policy of agent {k} has {pol.num_actions} actions, expected {n}", (k,))
            continue
        table = model.policy_state_tables()[k]
        bad = np.flatnonzero(np.abs(table.sum(axis=1) - 1.0) > ROW_SUM_TOL)
        for s in bad:
            report.add("policy_sum", f"pi_{k}(.|s={s}) does not sum to 1", (k, int(s)))
    return report


# ---------------------------------------------------------------------------
# sampling


def draw_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw consuming exactly one uniform from ``rng``."""
    c = np.cumsum(p)
    idx = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(idx, len(p) - 1)


def _check_state(s: int, S: int) -> int:
    s = int(s)
    if not 0 <= s < S:
        raise ModelError(f"state index {s} out of range [0, {S})")
    return s


def sample_next_state(kernel: TransitionKernel, s_prev: int, joint, rng: np.random.Generator) -> int:
    s_prev = _check_state(s_prev, kernel.num_states)
    JointActionCodec(kernel.action_sizes).check(tuple(joint))
    p = kernel.columns(np.array([s_prev]), np.array([joint]))[0]
    return draw_index(p, rng)


def sample_observation(
    likelihoods: Sequence[LikelihoodModel], k: int, s: int, rng: np.random.Generator
) -> int:
    if not 0 <= k < len(likelihoods):
        raise ModelError(f"agent index {k} out of range [0, {len(likelihoods)})")
    lik = likelihoods[k]
    s = _check_state(s, lik.num_states)
    return draw_index(lik.table[:, s], rng)


def sample_action(policy: Policy, mu: np.ndarray, rng: np.random.Generator) -> int:
    return draw_index(policy.distribution(mu), rng)


def one_hot_belief(s: int, S: int) -> np.ndarray:
    s = _check_state(s, S)
    mu = np.zeros(S)
    mu[s] = 1.0
    return mu


def uniform_belief(S: int) -> np.ndarray:
    return np.full(S, 1.0 / S)


def is_belief(mu, tol: float = 1e-10) -> bool:
    mu = np.asarray(mu)
    return bool(np.all(np.isfinite(mu)) and np.all(mu >= 0) and abs(mu.sum() - 1.0) <= tol)


def random_model(
    num_states: int,
    action_sizes: Sequence[int],
    num_observations: int | Sequence[int],
    rng: np.random.Generator,
    gamma: float = 0.9,
    concentration: float = 1.0,
    min_prob: float = 1e-3,
    policy: str = "mixture",
) -> DecPomdpModel:
    """Random fully-supported model; every probability is at least ``min_prob``-ish."""
    S = int(num_states)
    action_sizes = tuple(int(a) for a in action_sizes)
    K = len(action_sizes)
    if isinstance(num_observations, int):
        num_observations = [num_observations] * K
    codec = JointActionCodec(action_sizes)

    def stochastic(n_out, *lead):
        p = rng.dirichlet(np.full(n_out, concentration), size=lead) + min_prob
        p /= p.sum(axis=-1, keepdims=True)
        return p

    # dirichlet draws are over the last axis; move outcome first
    trans = np.moveaxis(stochastic(S, codec.size, S), -1, 1)
    liks = [LikelihoodModel(stochastic(n, S).T) for n in num_observations]
    rewards = TabularReward(rng.random((K, codec.size, S, S)), action_sizes)
    if policy == "mixture":
        pols = [MixturePolicy(stochastic(a, S)) for a in action_sizes]
    elif policy == "map":
        pols = [MapPolicy(rng.integers(0, a, size=S), a) for a in action_sizes]
    else:
        raise ModelError(f"unknown policy kind {policy!r}")
    return DecPomdpModel(
        num_states=S,
        action_sizes=action_sizes,
        transition=TabularTransition(trans, action_sizes),
        likelihoods=tuple(liks),
        rewards=rewards,
        policies=tuple(pols),
        gamma=gamma,
        r_max=1.0,
    )
