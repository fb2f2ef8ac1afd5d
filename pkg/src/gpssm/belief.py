"""Joint Gaussian belief over inducing values and state, and GP prediction from it.

The belief is stored as a mean vector and a lower Cholesky factor of the joint
covariance.  Inducing rows come first, grouped by output dimension in
increasing order; the state occupies the trailing ``d_x`` rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import cho_solve

from . import linalg
from .errors import DimensionMismatch, NotPositiveDefinite, SingularKernelMatrix
from .kernels import HeteroKernel

__all__ = [
    "InducingSet",
    "JointBelief",
    "GPPrediction",
    "kernel_chol",
    "gp_predict",
    "novelty",
    "save_snapshot",
    "load_snapshot",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_VERSION = 1


def _token(kernel: HeteroKernel, k: int) -> tuple[int, int]:
    kern = kernel.kernel(k)
    return id(kern), kern.version


@dataclass
class InducingSet:
    """Per-dimension inducing inputs plus the row map into the joint belief.

    ``serials`` records insertion order so that ties can be broken
    oldest-first.  Factors of the per-dimension Gram matrices are cached and
    carried across additions and deletions.
    """

    inputs: list[np.ndarray]
    serials: list[np.ndarray]
    next_serial: int = 0
    _chol: dict[int, tuple[tuple[int, int], np.ndarray]] = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def empty(cls, kernel: HeteroKernel) -> "InducingSet":
        return cls(
            [np.zeros((0, kernel.input_dim(k))) for k in range(kernel.d_f)],
            [np.zeros(0, dtype=np.int64) for _ in range(kernel.d_f)],
        )

    @property
    def d_f(self) -> int:
        return len(self.inputs)

    @property
    def counts(self) -> list[int]:
        return [len(z) for z in self.inputs]

    @property
    def n_total(self) -> int:
        return int(sum(self.counts))

    def offset(self, k: int) -> int:
        return int(sum(self.counts[:k]))

    def rows(self, k: int) -> slice:
        start = self.offset(k)
        return slice(start, start + len(self.inputs[k]))

    def row(self, k: int, j: int) -> int:
        if not 0 <= j < len(self.inputs[k]):
            raise IndexError(f"dimension {k} has no inducing point {j}")
        return self.offset(k) + j

    def locate(self, row: int) -> tuple[int, int]:
        for k, n in enumerate(self.counts):
            if row < n:
                return k, row
            row -= n
        raise IndexError("row outside the inducing block")

    def dims(self) -> np.ndarray:
        """Output dimension of every inducing row."""
        return np.repeat(np.arange(self.d_f), self.counts).astype(int)

    def all_serials(self) -> np.ndarray:
        return np.concatenate(self.serials) if self.serials else np.zeros(0, dtype=np.int64)

    def copy(self) -> "InducingSet":
        return InducingSet(
            [z.copy() for z in self.inputs],
            [s.copy() for s in self.serials],
            self.next_serial,
            dict(self._chol),
        )

    def with_added(self, kernel: HeteroKernel, k: int, z: np.ndarray) -> tuple["InducingSet", int]:
        """New set with ``z`` appended to dimension ``k``, and the joint row it occupies."""
        z = np.asarray(z, dtype=float).reshape(1, kernel.input_dim(k))
        out = self.copy()
        cached = self._chol.get(k)
        if cached is not None and cached[0] == _token(kernel, k):
            Zk = self.inputs[k]
            Lk = linalg.chol_insert_block(
                cached[1], len(Zk), kernel.eval_block(k, Zk, z), kernel.eval_block(k, z, z), np.zeros((0, 1))
            )
            out._chol[k] = (cached[0], Lk)
        else:
            out._chol.pop(k, None)
        at = self.offset(k) + len(self.inputs[k])
        out.inputs[k] = np.vstack([self.inputs[k], z])
        out.serials[k] = np.r_[self.serials[k], self.next_serial].astype(np.int64)
        out.next_serial = self.next_serial + 1
        return out, at

    def with_removed(self, kernel: HeteroKernel | None, rows: Sequence[int]) -> "InducingSet":
        """New set without the given joint rows (all must be inducing rows)."""
        out = self.copy()
        by_dim: dict[int, list[int]] = {}
        for r in rows:
            k, j = self.locate(int(r))
            by_dim.setdefault(k, []).append(j)
        for k, local in by_dim.items():
            keep = np.setdiff1d(np.arange(len(self.inputs[k])), local)
            out.inputs[k] = self.inputs[k][keep]
            out.serials[k] = self.serials[k][keep]
            cached = self._chol.get(k)
            if kernel is not None and cached is not None and cached[0] == _token(kernel, k):
                out._chol[k] = (cached[0], linalg.chol_delete_block(cached[1], local))
            else:
                out._chol.pop(k, None)
        return out


def kernel_chol(inducing: InducingSet, kernel: HeteroKernel, k: int) -> np.ndarray:
    """Cached Cholesky factor of the dimension-``k`` inducing Gram matrix."""
    token = _token(kernel, k)
    cached = inducing._chol.get(k)
    if cached is not None and cached[0] == token and cached[1].shape[0] == len(inducing.inputs[k]):
        return cached[1]
    Zk = inducing.inputs[k]
    try:
        Lk = linalg.cholesky(kernel.eval_block(k, Zk, Zk))
    except NotPositiveDefinite as exc:
        raise SingularKernelMatrix(f"Gram matrix of dimension {k} is singular") from exc
    inducing._chol[k] = (token, Lk)
    return Lk


@dataclass
class JointBelief:
    """Gaussian over ``(u, x)`` stored as ``mean`` and lower factor ``factor``."""

    mean: np.ndarray
    factor: np.ndarray
    inducing: InducingSet

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.factor = np.asarray(self.factor, dtype=float)
        n = self.mean.size
        if self.factor.shape != (n, n):
            raise DimensionMismatch(f"factor shape {self.factor.shape} does not match mean length {n}")
        if self.inducing.n_total > n:
            raise DimensionMismatch("more inducing rows than belief rows")

    @classmethod
    def initial(cls, kernel: HeteroKernel, mean_x, cov_x) -> "JointBelief":
        """Belief over the state alone, with an empty inducing set."""
        mean_x = np.atleast_1d(np.asarray(mean_x, dtype=float))
        cov_x = np.atleast_2d(np.asarray(cov_x, dtype=float))
        return cls(mean_x.copy(), linalg.cholesky(cov_x), InducingSet.empty(kernel))

    @property
    def n_u(self) -> int:
        return self.inducing.n_total

    @property
    def d_x(self) -> int:
        return self.mean.size - self.n_u

    @property
    def mean_u(self) -> np.ndarray:
        return self.mean[: self.n_u]

    @property
    def mean_x(self) -> np.ndarray:
        return self.mean[self.n_u :]

    def covariance(self) -> np.ndarray:
        return self.factor @ self.factor.T

    def state_covariance(self) -> np.ndarray:
        Lx = self.factor[self.n_u :]
        return Lx @ Lx.T

    def copy(self) -> "JointBelief":
        return JointBelief(self.mean.copy(), self.factor.copy(), self.inducing.copy())


class GPPrediction(NamedTuple):
    mean: np.ndarray
    cov_fx: np.ndarray
    cov_fu: np.ndarray
    cov_ff: np.ndarray


def _group(test: Sequence[tuple[int, np.ndarray]]) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for i, (k, _) in enumerate(test):
        groups.setdefault(int(k), []).append(i)
    return groups


def projection(belief: JointBelief, kernel: HeteroKernel, test) -> tuple[np.ndarray, np.ndarray]:
    """``K_{*u} K_uu^{-1}`` (n_test x n_u) and the block-diagonal ``K_{*u} K_uu^{-1} K_{u*}``."""
    ind = belief.inducing
    n_t = len(test)
    G = np.zeros((n_t, ind.n_total))
    Q = np.zeros((n_t, n_t))
    for k, idx in _group(test).items():
        if len(ind.inputs[k]) == 0:
            continue
        Zt = np.array([np.asarray(test[i][1], dtype=float).reshape(kernel.input_dim(k)) for i in idx])
        Kx = kernel.eval_block(k, Zt, ind.inputs[k])
        alpha = cho_solve((kernel_chol(ind, kernel, k), True), Kx.T, check_finite=False)
        G[np.ix_(idx, np.arange(ind.rows(k).start, ind.rows(k).stop))] = alpha.T
        Q[np.ix_(idx, idx)] = Kx @ alpha
    return G, Q


def gp_predict(belief: JointBelief, kernel: HeteroKernel, test: Sequence[tuple[int, np.ndarray]]) -> GPPrediction:
    """Moments of latent values at ``test`` under the factorized posterior.

    ``test`` is a list of ``(output_dim, input)`` pairs.  The returned
    covariances are with the state, with the inducing values, and among the
    test values themselves.
    """
    n_u = belief.n_u
    G, Q = projection(belief, kernel, test)
    L = belief.factor
    W = G @ L[:n_u]
    cross = W @ L.T
    Kss = kernel.eval_multi(test, test)
    cov_ff = Kss - Q + W @ W.T
    cov_ff = 0.5 * (cov_ff + cov_ff.T)
    return GPPrediction(G @ belief.mean_u, cross[:, n_u:], cross[:, :n_u], cov_ff)


def novelty(belief: JointBelief | InducingSet, kernel: HeteroKernel, x_mean, c=None) -> np.ndarray:
    """Prior conditional variance of each output at ``phi_k(x_mean, c)`` given the inducing set."""
    ind = belief.inducing if isinstance(belief, JointBelief) else belief
    out = np.empty(kernel.d_f)
    for k, z in enumerate(kernel.inputs(x_mean, c)):
        z = z.reshape(1, -1)
        kzz = kernel.eval_block(k, z, z)[0, 0]
        if len(ind.inputs[k]) == 0:
            out[k] = kzz
            continue
        v = linalg.tri_solve(kernel_chol(ind, kernel, k), kernel.eval_block(k, ind.inputs[k], z))
        out[k] = kzz - float(v[:, 0] @ v[:, 0])
    return np.maximum(out, 0.0)


def save_snapshot(path: str | Path, belief: JointBelief, kernel: HeteroKernel | None = None) -> None:
    """Write the belief, its inducing set and optionally the kernel hyperparameters as JSON."""
    ind = belief.inducing
    doc = {
        "format": "gpssm-belief",
        "version": SNAPSHOT_VERSION,
        "mean": belief.mean.tolist(),
        "factor": belief.factor.tolist(),
        "inducing": {
            "inputs": [z.tolist() for z in ind.inputs],
            "input_dims": [int(z.shape[1]) for z in ind.inputs],
            "serials": [s.tolist() for s in ind.serials],
            "next_serial": ind.next_serial,
        },
    }
    if kernel is not None:
        doc["kernel_theta"] = kernel.theta.tolist()
    Path(path).write_text(json.dumps(doc))


def load_snapshot(path: str | Path, kernel: HeteroKernel | None = None) -> JointBelief:
    """Restore a belief written by :func:`save_snapshot`.

    When ``kernel`` is given and the snapshot stored hyperparameters, they are
    assigned to it.
    """
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "gpssm-belief" or doc.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot {doc.get('format')!r} v{doc.get('version')}")
    raw = doc["inducing"]
    inputs = [np.asarray(z, dtype=float).reshape(-1, d) for z, d in zip(raw["inputs"], raw["input_dims"])]
    serials = [np.asarray(s, dtype=np.int64) for s in raw["serials"]]
    ind = InducingSet(inputs, serials, int(raw["next_serial"]))
    if kernel is not None and "kernel_theta" in doc:
        kernel.theta = np.asarray(doc["kernel_theta"], dtype=float)
    return JointBelief(np.asarray(doc["mean"]), np.asarray(doc["factor"]).reshape(len(doc["mean"]), -1), ind)
