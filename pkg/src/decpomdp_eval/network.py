"""Combination matrices over the communication graph and their diagnostics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components, shortest_path

STOCHASTIC_TOL = 1e-12


class NetworkError(ValueError):
    pass


class SinkhornError(NetworkError):
    pass


@dataclass(frozen=True)
class NetworkDiagnostics:
    lambda2: float
    d_min: int
    connected: bool


@dataclass
class CombinationReport:
    errors: list[str] = field(default_factory=list)
    diagnostics: NetworkDiagnostics | None = None

    @property
    def ok(self) -> bool:
        return not self.errors


class CombinationMatrix:
    """Symmetric doubly-stochastic weights ``C[l, k]`` (weight agent k gives to l)."""

    def __init__(self, weights, validate: bool = True):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise NetworkError("combination matrix must be square")
        w.setflags(write=False)
        self.weights = w
        if validate:
            report = validate_combination(w)
            if not report.ok:
                raise NetworkError("; ".join(report.errors))

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self.weights > 0

    def neighbors(self, k: int) -> list[int]:
        """Agents ``l`` with ``c_{lk} > 0``, including ``k`` when it has a self-loop."""
        return [int(l) for l in np.flatnonzero(self.weights[:, k] > 0)]

    def column(self, k: int) -> np.ndarray:
        return self.weights[:, k]

    def diagnostics(self) -> NetworkDiagnostics:
        return NetworkDiagnostics(mixing_rate(self), min_degree(self), is_connected(self.weights))

    def to_json(self) -> str:
        return json.dumps({"K": self.K, "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "CombinationMatrix":
        doc = json.loads(text)
        w = np.array(doc["weights"], dtype=float)
        if w.shape != (doc["K"], doc["K"]):
            raise NetworkError(f"weights shape {w.shape} does not match K={doc['K']}")
        return cls(w)


def _as_array(C) -> np.ndarray:
    return C.weights if isinstance(C, CombinationMatrix) else np.asarray(C, dtype=float)


def is_connected(weights: np.ndarray) -> bool:
    n, _ = connected_components(np.asarray(weights) > 0, directed=False)
    return n == 1


def validate_combination(C) -> CombinationReport:
    w = _as_array(C)
    report = CombinationReport()
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        report.errors.append("matrix is not square")
        return report
    if np.any(w < 0):
        report.errors.append("negative weights")
    if not np.allclose(w, w.T, rtol=0, atol=STOCHASTIC_TOL):
        report.errors.append("not symmetric")
    if np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
        report.errors.append("columns do not sum to 1")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        report.errors.append("rows do not sum to 1 (not doubly-stochastic)")
    connected = is_connected(w)
    if not connected:
        report.errors.append("graph is not connected")
    if not np.any(np.diag(w) > 0):
        report.errors.append("no positive self-loop; matrix is not primitive")
    if report.ok:
        report.diagnostics = NetworkDiagnostics(mixing_rate(w), min_degree(w), connected)
    return report


def mixing_rate(C) -> float:
    """Second largest eigenvalue modulus, computed as ``||C - 11^T/K||_2``."""
    w = _as_array(C)
    K = w.shape[0]
    dev = w - np.full((K, K), 1.0 / K)
    return float(np.max(np.abs(np.linalg.eigvalsh(dev))))


def min_degree(C) -> int:
    """Minimum neighbor count over agents, self included when ``c_kk > 0``."""
    return int((_as_array(C) > 0).sum(axis=0).min())


def hop_sets(C, k: int) -> list[list[int]]:
    """``[N_k^1, N_k^2, ...]`` up to the hop that reaches every agent (self always included)."""
    w = _as_array(C)
    dist = shortest_path(w > 0, unweighted=True, directed=False, indices=k)
    if not np.all(np.isfinite(dist)):
        raise NetworkError("graph is not connected")
    far = int(dist.max())
    return [[int(l) for l in np.flatnonzero(dist <= n)] for n in range(1, max(far, 1) + 1)]


# ---------------------------------------------------------------------------
# constructors


def build_uniform(K: int) -> CombinationMatrix:
    if K < 1:
        raise NetworkError("K must be at least 1")
    return CombinationMatrix(np.full((K, K), 1.0 / K))


def sinkhorn_balance(raw, tol: float = STOCHASTIC_TOL, max_iter: int = 10_000) -> CombinationMatrix:
    """Symmetric Sinkhorn-Knopp scaling ``D A D`` to a doubly-stochastic matrix.

    Uses the symmetric fixed point ``d <- sqrt(d / (A d))``; the sparsity
    pattern and symmetry of ``A`` are kept.
    """
    A = np.array(raw, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SinkhornError("input must be square")
    if np.any(A < 0) or not np.array_equal(A, A.T):
        raise SinkhornError("input must be symmetric and non-negative")
    if np.any(np.diag(A) <= 0):
        raise SinkhornError("input needs a positive diagonal")
    if not is_connected(A):
        raise SinkhornError("input is reducible (graph not connected)")

    d = 1.0 / np.sqrt(A.sum(axis=1))
    for _ in range(max_iter):
        d = np.sqrt(d / (A @ d))
        C = d[:, None] * A * d[None, :]
        C = 0.5 * (C + C.T)
        if np.max(np.abs(C.sum(axis=1) - 1.0)) <= tol:
            return CombinationMatrix(C)
    raise SinkhornError(f"Sinkhorn balancing did not converge in {max_iter} iterations")


def l1_distance_matrix(positions) -> np.ndarray:
    P = np.asarray(positions, dtype=float)
    return np.abs(P[:, None, :] - P[None, :, :]).sum(axis=-1)


def smallest_connecting_threshold(positions) -> float:
    """Smallest distance cutoff for which the cutoff graph is connected."""
    D = l1_distance_matrix(positions)
    if len(D) == 1:
        return 0.0
    for t in np.unique(D[D > 0]):
        if is_connected(D <= t):
            return float(t)
    raise NetworkError("positions cannot be connected")  # unreachable for finite positions


def build_from_positions(positions, threshold: float | None = None) -> CombinationMatrix:
    """Distance-based weights ``~ 1 / l1-distance``, cut at ``threshold``, then balanced.

    ``threshold=None`` picks :func:`smallest_connecting_threshold`. Each self-loop
    starts at the largest incident raw weight (or 1 for an isolated single agent).
    """
    P = np.asarray(positions, dtype=float)
    K = len(P)
    if K < 1:
        raise NetworkError("need at least one agent")
    D = l1_distance_matrix(P)
    off = ~np.eye(K, dtype=bool)
    if np.any(D[off] == 0):
        raise NetworkError("agent positions must be distinct")
    if threshold is None:
        threshold = smallest_connecting_threshold(P)
    raw = np.zeros((K, K))
    keep = off & (D <= threshold)
    raw[keep] = 1.0 / D[keep]
    if not is_connected(raw + np.eye(K)):
        raise NetworkError(
            f"distance threshold {threshold} leaves the graph disconnected; use a larger threshold "
            f"(smallest connecting value is {smallest_connecting_threshold(P)})"
        )
    diag = raw.max(axis=1)
    diag[diag == 0] = 1.0
    raw[np.diag_indices(K)] = diag
    return sinkhorn_balance(raw)


def build_path(K: int) -> CombinationMatrix:
    """Balanced path graph ``0 - 1 - ... - K-1`` with self-loops."""
    if K == 1:
        return build_uniform(1)
    raw = np.zeros((K, K))
    for k in range(K - 1):
        raw[k, k + 1] = raw[k + 1, k] = 1.0
    raw[np.diag_indices(K)] = 1.0
    return sinkhorn_balance(raw)
