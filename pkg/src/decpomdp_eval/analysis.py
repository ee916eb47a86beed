"""Disagreement metrics and the theoretical constants/bounds they are compared to."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .filtering import local_transition_model
from .model import DecPomdpModel
from .network import hop_sets, min_degree, mixing_rate

DEFAULT_SBE_WINDOW = 20
DEFAULT_TAU_CAP = 200_000


class BoundError(ValueError):
    pass


class TauEnumerationError(BoundError):
    pass


# ---------------------------------------------------------------------------
# empirical metrics


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """``KL(p || q)`` with ``0 log 0 = 0``; returns ``inf`` when ``supp(p)`` is not in ``supp(q)``.

    ``math.isinf`` on the result is the support-violation flag.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def agreement_error(ws: Sequence[np.ndarray]) -> float:
    W = np.asarray(ws, dtype=float)
    dev = W - W.mean(axis=0)
    return float(np.mean(np.sum(dev * dev, axis=1)))


def mean_centroid_distance(ws: Sequence[np.ndarray]) -> float:
    """``(1/K) sum_k ||w_k - w_c||``, the un-squared quantity in the network-agreement bound."""
    W = np.asarray(ws, dtype=float)
    return float(np.mean(np.linalg.norm(W - W.mean(axis=0), axis=1)))


def sbe(deltas: Sequence[float]) -> float:
    d = np.asarray(deltas, dtype=float)
    return float(np.mean(d * d))


def running_window_mean(values: Sequence[float], window: int = DEFAULT_SBE_WINDOW) -> np.ndarray:
    """Trailing mean over the last ``window`` entries (fewer at the start)."""
    if window < 1:
        raise ValueError("window must be at least 1")
    v = np.asarray(values, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def lemma1_gap(mu_k, eta_k_next, mu, eta_next, features, gamma: float) -> float:
    """Spectral norm of ``H_k - H*`` with ``H = phi(mu) phi(mu)^T - gamma phi(mu) phi(eta')^T``."""
    a, b = features(mu_k), features(eta_k_next)
    c, d = features(mu), features(eta_next)
    H_k = np.outer(a, a) - gamma * np.outer(a, b)
    H_c = np.outer(c, c) - gamma * np.outer(c, d)
    return float(np.linalg.norm(H_k - H_c, 2))


# ---------------------------------------------------------------------------
# model constants


def dobrushin_coefficient(T: np.ndarray, tol: float = 1e-10) -> float:
    """``max_{s', s''} 0.5 * sum_s |T[s, s'] - T[s, s'']|`` for column-stochastic ``T``."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise BoundError("transition matrix must be square")
    if np.any(T < 0) or np.max(np.abs(T.sum(axis=0) - 1.0)) > tol:
        raise BoundError("transition matrix must be column-stochastic")
    S = T.shape[0]
    best = 0.0
    # chunk over s' so memory stays at S^2 per block
    for j in range(S):
        tv = 0.5 * np.abs(T[:, j:j + 1] - T[:, j:]).sum(axis=0)
        best = max(best, float(tv.max()))
    return best


def kernel_dobrushin(model: DecPomdpModel) -> float:
    return max(dobrushin_coefficient(T) for _, T in model.transition.distinct_matrices())


def estimate_B(model: DecPomdpModel) -> float:
    best = 0.0
    for lik in model.likelihoods:
        pos = lik.table[lik.table > 0]
        best = max(best, float(np.max(np.abs(np.log(pos)))))
    return best


def estimate_tau(model: DecPomdpModel, C, cap: int = DEFAULT_TAU_CAP, enum_cap: int | None = None) -> float:
    """Largest ``|log T_k(n-hop) / T_k((n+1)-hop)|`` over agents, hops, states and joint actions.

    Raises :class:`TauEnumerationError` when the number of joint actions exceeds
    ``cap``; supply tau yourself (or use :func:`tau_kernel_bound`) in that case.
    """
    K = model.num_agents
    pairs = []
    for k in range(K):
        hops = hop_sets(C, k)
        for n in range(len(hops) - 1):
            pairs.append((k, hops[n], hops[n + 1]))
    if not pairs:
        return 0.0
    codec = model.codec
    if codec.size > cap:
        raise TauEnumerationError(
            f"{codec.size} joint actions exceed the tau enumeration cap {cap}; "
            "set theory.tau in the config instead"
        )
    kwargs = {} if enum_cap is None else {"cap": enum_cap}
    cache: dict = {}

    def local(k, members, joint):
        key = (k, tuple(members), tuple(joint[m] for m in members))
        if key not in cache:
            a_n = {int(m): int(joint[m]) for m in members}
            cache[key] = local_transition_model(model, k, a_n, mode="exact", **kwargs).matrix
        return cache[key]

    tau = 0.0
    for idx in range(codec.size):
        joint = codec.decode(idx)
        for k, inner, outer in pairs:
            A, B = local(k, inner, joint), local(k, outer, joint)
            pa, pb = A > 0, B > 0
            if np.any(pa != pb):
                return math.inf
            if np.any(pa):
                tau = max(tau, float(np.max(np.abs(np.log(A[pa]) - np.log(B[pa])))))
    return tau


def tau_kernel_bound(model: DecPomdpModel) -> float:
    """Upper bound on tau from the spread of ``T(s | s', a)`` across joint actions.

    Every local model column is a convex combination of the columns
    ``T(. | s', a)``, so any ratio of two of them is bracketed by
    ``min_a T / max_a T`` and ``max_a T / min_a T`` entrywise.
    """
    lo = hi = None
    for _, T in model.transition.distinct_matrices():
        lo = T.copy() if lo is None else np.minimum(lo, T)
        hi = T.copy() if hi is None else np.maximum(hi, T)
    if np.any((lo == 0) & (hi > 0)):
        return math.inf
    mask = hi > 0
    return float(np.max(np.log(hi[mask]) - np.log(lo[mask])))


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class TheoryConstants:
    B: float
    tau: float
    kappa: float
    lambda2: float
    d_min: int
    K: int
    beta: float
    B_phi: float = 1.0
    L_phi: float = 1.0
    R_max: float = 1.0
    gamma: float = 0.9
    alpha: float = 0.1
    rho: float = 0.0
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise BoundError(f"Dobrushin coefficient {self.kappa} outside [0, 1]")
        if self.B < 0 or self.tau < 0 or self.lambda2 < 0:
            raise BoundError("B, tau and lambda2 must be non-negative")

    @property
    def lam(self) -> float:
        return max(abs(1.0 - self.K / self.beta), self.lambda2)

    @property
    def regime_ok(self) -> bool:
        return self.rho >= 0.75 * self.gamma * self.B_phi * self.L_phi

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = self.lam
        d["regime_ok"] = self.regime_ok
        return d


def _require_contracting(c: TheoryConstants):
    if c.kappa >= 1.0:
        raise BoundError("bounds need a Dobrushin coefficient strictly below 1")


def _exponents(c: TheoryConstants) -> tuple[float, float]:
    _require_contracting(c)
    net = 2.0 * math.sqrt(c.K) * c.beta * c.lam * c.B
    hop = (c.K - c.d_min) * c.tau if c.K > c.d_min else 0.0
    return (net + hop) / (1.0 - c.kappa), (c.kappa * net + hop) / (1.0 - c.kappa)


def theorem1_bounds(c: TheoryConstants) -> tuple[float, float]:
    """Asymptotic bounds on ``E KL(mu || mu_k)`` and ``E KL(eta || eta_k)``."""
    return _exponents(c)


def btv_constants(c: TheoryConstants) -> tuple[float, float]:
    j, jt = _exponents(c)
    return 2.0 * math.sqrt(1.0 - math.exp(-j)), 2.0 * math.sqrt(1.0 - math.exp(-jt))


def _check_network_bound(c: TheoryConstants):
    if c.gamma <= 0:
        raise BoundError("bound is undefined for gamma = 0")
    if c.lambda2 >= 1.0:
        raise BoundError("bound needs lambda2 < 1")


def theorem2_bound(c: TheoryConstants, b_tv: float | None = None) -> float:
    """Leading term of the mean distance to the network centroid (the O(alpha^2) part is dropped)."""
    _check_network_bound(c)
    if b_tv is None:
        b_tv = btv_constants(c)[0]
    eps = c.R_max * c.B_phi * (2.0 * b_tv * (1.0 + c.gamma) / (0.08 * c.gamma) + 1.0)
    return c.alpha * c.lambda2 * eps / (1.0 - c.lambda2)


def theorem3_bound(c: TheoryConstants, b_tv: float | None = None) -> float:
    """Bound on ``E ||w* - w_c||`` after the transient.

    Uses the constant ``eps'`` as stated with the result. The derivation arrives at
    a variant that folds ``B_TV`` in differently; that variant is not implemented.
    """
    if c.gamma <= 0:
        raise BoundError("bound is undefined for gamma = 0")
    if b_tv is None:
        b_tv = btv_constants(c)[0]
    eps_prime = 2.0 * c.B_phi * (1.0 + c.gamma) / (0.08 * c.gamma) + c.L_phi
    return b_tv * c.R_max * eps_prime / (0.08 * c.gamma * c.B_phi * c.L_phi)


def lemma1_bound(c: TheoryConstants, b_tv: float | None = None) -> float:
    if b_tv is None:
        b_tv = btv_constants(c)[0]
    return 2.0 * c.B_phi * c.L_phi * b_tv * (1.0 + c.gamma)


def parameter_norm_bound(c: TheoryConstants) -> float:
    """``||col{w_k}|| <= sqrt(K) R_max / (0.08 gamma L_phi)`` in the regularized regime."""
    if c.gamma <= 0:
        raise BoundError("bound is undefined for gamma = 0")
    return math.sqrt(c.K) * c.R_max / (0.08 * c.gamma * c.L_phi)


@dataclass
class BoundReport:
    J_bound: float
    Jtilde_bound: float
    B_TV: float
    B_TV_tilde: float
    network_agreement_bound: float | None
    baseline_gap_bound: float | None
    lemma1_gap_bound: float
    parameter_norm_bound: float | None
    regime_ok: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def bound_report(c: TheoryConstants) -> BoundReport:
    J, Jt = theorem1_bounds(c)
    b_tv, b_tv_t = btv_constants(c)
    notes = []
    if not c.regime_ok:
        notes.append("rho < 0.75*gamma*B_phi*L_phi: network and baseline bounds are outside their stated regime")
    try:
        t2 = theorem2_bound(c, b_tv)
    except BoundError as exc:
        t2 = None
        notes.append(f"network agreement bound unavailable: {exc}")
    try:
        t3 = theorem3_bound(c, b_tv)
        pn = parameter_norm_bound(c)
    except BoundError as exc:
        t3 = pn = None
        notes.append(f"baseline gap bound unavailable: {exc}")
    notes.append("network agreement bound omits its O(alpha^2) remainder")
    return BoundReport(
        J_bound=J,
        Jtilde_bound=Jt,
        B_TV=b_tv,
        B_TV_tilde=b_tv_t,
        network_agreement_bound=t2,
        baseline_gap_bound=t3,
        lemma1_gap_bound=lemma1_bound(c, b_tv),
        parameter_norm_bound=pn,
        regime_ok=c.regime_ok,
        notes=notes,
    )


def theory_constants(
    model: DecPomdpModel,
    C,
    *,
    beta: float,
    alpha: float,
    rho: float,
    gamma: float,
    B_phi: float = 1.0,
    L_phi: float = 1.0,
    tau: float | None = None,
    tau_cap: int = DEFAULT_TAU_CAP,
) -> TheoryConstants:
    """Collect every constant from a model and network; tau is enumerated, supplied, or bounded."""
    prov = {"B": "enumerated", "kappa": "enumerated", "lambda2": "eigendecomposition"}
    if tau is not None:
        prov["tau"] = "supplied"
    else:
        try:
            tau = estimate_tau(model, C, cap=tau_cap)
            prov["tau"] = "enumerated"
        except TauEnumerationError:
            tau = tau_kernel_bound(model)
            prov["tau"] = "kernel-spread upper bound"
    return TheoryConstants(
        B=estimate_B(model),
        tau=tau,
        kappa=kernel_dobrushin(model),
        lambda2=mixing_rate(C),
        d_min=min_degree(C),
        K=model.num_agents,
        beta=beta,
        B_phi=B_phi,
        L_phi=L_phi,
        R_max=model.r_max,
        gamma=gamma,
        alpha=alpha,
        rho=rho,
        provenance=prov,
    )

