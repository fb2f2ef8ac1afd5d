"""Single-output kernels, input maps and the block-diagonal multi-output kernel.

Each output dimension ``k`` of the latent function owns a kernel with its own
hyperparameters and an input map ``phi_k(x, c) -> z_k``.  Prior covariance
between different output dimensions is exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, Unsupported

__all__ = [
    "RbfParams",
    "BasisKernelParams",
    "RBF",
    "RBFBasis",
    "CustomKernel",
    "AffineInputMap",
    "FunctionInputMap",
    "KernelBlock",
    "HeteroKernel",
]


def _as_points(Z, dim: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, dim) if dim > 0 else Z.reshape(-1, 0)
    if Z.ndim != 2 or Z.shape[1] != dim:
        raise DimensionMismatch(f"expected inputs of dimension {dim}, got shape {Z.shape}")
    return Z


def _as_point(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != dim:
        raise DimensionMismatch(f"expected a {dim}-d input, got {z.size} values")
    return z


# ---------------------------------------------------------------------------
# input maps


@dataclass
class AffineInputMap:
    """``z = state_weights @ x + control_weights @ c + offset``."""

    state_weights: np.ndarray
    control_weights: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        self.state_weights = np.atleast_2d(np.asarray(self.state_weights, dtype=float))
        dz = self.state_weights.shape[0]
        if self.control_weights is not None:
            self.control_weights = np.asarray(self.control_weights, dtype=float).reshape(dz, -1)
        self.offset = np.zeros(dz) if self.offset is None else np.asarray(self.offset, float).reshape(dz)

    is_affine = True

    @property
    def input_dim(self) -> int:
        return self.state_weights.shape[0]

    @classmethod
    def identity(cls, d_x: int) -> "AffineInputMap":
        return cls(np.eye(d_x))

    @classmethod
    def control_only(cls, d_x: int, control_weights) -> "AffineInputMap":
        """Input that ignores the state and reads (part of) the exogenous input."""
        cw = np.atleast_2d(np.asarray(control_weights, dtype=float))
        return cls(np.zeros((cw.shape[0], d_x)), cw)

    def _control_term(self, c) -> np.ndarray:
        if self.control_weights is None or self.control_weights.shape[1] == 0:
            return self.offset
        return self.control_weights @ np.asarray(c, dtype=float).reshape(-1) + self.offset

    def __call__(self, x, c=None) -> np.ndarray:
        return self.state_weights @ np.asarray(x, dtype=float) + self._control_term(c)

    def batch(self, X: np.ndarray, c=None) -> np.ndarray:
        return X @ self.state_weights.T + self._control_term(c)

    def jac_x(self, x, c=None) -> np.ndarray:
        return self.state_weights


@dataclass
class FunctionInputMap:
    """Arbitrary input map; the state Jacobian falls back to central differences."""

    fn: Callable[[np.ndarray, np.ndarray | None], np.ndarray]
    input_dim: int
    jac: Callable[[np.ndarray, np.ndarray | None], np.ndarray] | None = None

    is_affine = False

    def __call__(self, x, c=None) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float), c), dtype=float).reshape(self.input_dim)

    def batch(self, X: np.ndarray, c=None) -> np.ndarray:
        return np.array([self(x, c) for x in X]).reshape(len(X), self.input_dim)

    def jac_x(self, x, c=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.asarray(self.jac(x, c), dtype=float).reshape(self.input_dim, x.size)
        from .model import central_difference

        return central_difference(lambda v: self(v, c), x)


# ---------------------------------------------------------------------------
# single-output kernels


@dataclass
class RbfParams:
    """Log-space hyperparameters of a squared-exponential kernel."""

    log_sigma2: float
    log_lengthscales: np.ndarray

    def __post_init__(self):
        self.log_sigma2 = float(self.log_sigma2)
        self.log_lengthscales = np.atleast_1d(np.asarray(self.log_lengthscales, dtype=float))
        if not (np.isfinite(self.log_sigma2) and np.all(np.isfinite(self.log_lengthscales))):
            raise ValueError("kernel hyperparameters must be finite")

    @property
    def sigma2(self) -> float:
        return float(np.exp(self.log_sigma2))

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)


@dataclass
class BasisKernelParams:
    """Feature map and weight prior of a finite basis-function kernel."""

    basis: Callable[[np.ndarray], np.ndarray]
    weight_cov: np.ndarray

    def __post_init__(self):
        self.weight_cov = np.atleast_2d(np.asarray(self.weight_cov, dtype=float))
        w = self.weight_cov
        if w.shape[0] != w.shape[1] or not np.allclose(w, w.T):
            raise ValueError("basis weight covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(w)) <= 0.0:
            raise ValueError("basis weight covariance must be positive definite")

    def features(self, Z: np.ndarray) -> np.ndarray:
        return np.array([np.asarray(self.basis(z), dtype=float).reshape(-1) for z in Z]).reshape(
            len(Z), self.weight_cov.shape[0]
        )


class RBF:
    """Squared-exponential kernel ``s2 * exp(-0.5 * sum((z - z')^2 / l^2))``."""

    kind = "rbf"
    differentiable = True

    def __init__(self, variance: float = 1.0, lengthscales=1.0, input_dim: int | None = None):
        ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        if input_dim is not None and ls.size == 1:
            ls = np.full(input_dim, ls[0])
        if np.any(ls <= 0) or variance <= 0:
            raise ValueError("variance and length scales must be positive")
        self.params = RbfParams(np.log(variance), np.log(ls))
        self.version = 0

    @property
    def input_dim(self) -> int:
        return self.params.log_lengthscales.size

    @property
    def theta(self) -> np.ndarray:
        return np.r_[self.params.log_sigma2, self.params.log_lengthscales]

    @theta.setter
    def theta(self, value) -> None:
        value = np.asarray(value, dtype=float).reshape(1 + self.input_dim)
        self.params = RbfParams(value[0], value[1:])
        self.version += 1

    @property
    def param_names(self) -> list[str]:
        return ["log_sigma2"] + [f"log_lengthscale_{i}" for i in range(self.input_dim)]

    def _scaled_sqdist(self, Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
        inv_l = 1.0 / self.params.lengthscales
        diff = (Z1[:, None, :] - Z2[None, :, :]) * inv_l
        return np.einsum("ijk,ijk->ij", diff, diff)

    def rbf_part(self, Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
        return self.params.sigma2 * np.exp(-0.5 * self._scaled_sqdist(Z1, Z2))

    def __call__(self, Z1, Z2) -> np.ndarray:
        Z1 = _as_points(Z1, self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        return self.rbf_part(Z1, Z2)

    def diag(self, Z) -> np.ndarray:
        Z = _as_points(Z, self.input_dim)
        return np.full(Z.shape[0], self.params.sigma2)

    def grad_params(self, Z1, Z2) -> np.ndarray:
        """Derivatives of the Gram matrix w.r.t. ``theta``, shape (n_params, n1, n2)."""
        Z1 = _as_points(Z1, self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        K = self.rbf_part(Z1, Z2)
        inv_l = 1.0 / self.params.lengthscales
        sq = ((Z1[:, None, :] - Z2[None, :, :]) * inv_l) ** 2
        return np.concatenate([K[None], np.moveaxis(sq, -1, 0) * K[None]], axis=0)

    def grad_input(self, z, Z2) -> np.ndarray:
        """Derivative of ``k(z, Z2)`` w.r.t. ``z``, shape (n2, input_dim)."""
        z = np.asarray(z, dtype=float).reshape(1, self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        k = self.rbf_part(z, Z2)[0]
        return -k[:, None] * (z - Z2) / self.params.lengthscales**2


class RBFBasis(RBF):
    """Squared-exponential kernel plus a finite basis-function kernel.

    Only the squared-exponential hyperparameters are adapted; the basis
    weight covariance stays fixed.
    """

    kind = "rbf+basis"

    def __init__(self, basis: Callable, weight_cov, variance: float = 1.0, lengthscales=1.0, input_dim=None):
        super().__init__(variance, lengthscales, input_dim)
        self.basis = BasisKernelParams(basis, weight_cov)

    def _basis_part(self, Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
        P1 = self.basis.features(Z1)
        P2 = P1 if Z2 is Z1 else self.basis.features(Z2)
        return P1 @ self.basis.weight_cov @ P2.T

    def __call__(self, Z1, Z2) -> np.ndarray:
        Z1 = _as_points(Z1, self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        return self.rbf_part(Z1, Z2) + self._basis_part(Z1, Z2)

    def diag(self, Z) -> np.ndarray:
        Z = _as_points(Z, self.input_dim)
        P = self.basis.features(Z)
        return self.params.sigma2 + np.einsum("ij,jk,ik->i", P, self.basis.weight_cov, P)

    def grad_input(self, z, Z2) -> np.ndarray:
        from .model import central_difference

        z = np.asarray(z, dtype=float).reshape(self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        P2 = self.basis.features(Z2) @ self.basis.weight_cov
        dphi = central_difference(lambda v: self.basis.features(v[None])[0], z)
        return super().grad_input(z, Z2) + P2 @ dphi


class CustomKernel:
    """User-supplied covariance function ``fn(Z1, Z2) -> Gram matrix``.

    Custom kernels carry no adaptable hyperparameters.
    """

    kind = "custom"
    differentiable = False

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], input_dim: int):
        self.fn = fn
        self._input_dim = int(input_dim)
        self.version = 0

    @property
    def input_dim(self) -> int:
        return self._input_dim

    theta = property(lambda self: np.zeros(0))
    param_names: list[str] = []

    def __call__(self, Z1, Z2) -> np.ndarray:
        Z1 = _as_points(Z1, self.input_dim)
        Z2 = _as_points(Z2, self.input_dim)
        return np.asarray(self.fn(Z1, Z2), dtype=float).reshape(len(Z1), len(Z2))

    def diag(self, Z) -> np.ndarray:
        Z = _as_points(Z, self.input_dim)
        return np.array([self.fn(z[None], z[None])[0, 0] for z in Z])

    def grad_params(self, Z1, Z2) -> np.ndarray:
        raise Unsupported("custom kernels have no hyperparameter gradient")

    def grad_input(self, z, Z2) -> np.ndarray:
        from .model import central_difference

        Z2 = _as_points(Z2, self.input_dim)
        return central_difference(lambda v: self(v[None], Z2)[0], np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# multi-output kernel


@dataclass
class KernelBlock:
    kernel: RBF | CustomKernel
    input_map: AffineInputMap | FunctionInputMap

    def __post_init__(self):
        if self.kernel.input_dim != self.input_map.input_dim:
            raise DimensionMismatch(
                f"kernel expects {self.kernel.input_dim}-d inputs, map produces {self.input_map.input_dim}"
            )


@dataclass
class HeteroKernel:
    """Block-diagonal multi-output kernel with one :class:`KernelBlock` per output."""

    blocks: list[KernelBlock] = field(default_factory=list)

    @property
    def d_f(self) -> int:
        return len(self.blocks)

    def input_dim(self, k: int) -> int:
        return self.blocks[k].kernel.input_dim

    def kernel(self, k: int):
        return self.blocks[k].kernel

    def inputs(self, x, c=None) -> list[np.ndarray]:
        """Per-dimension kernel inputs ``phi_k(x, c)``."""
        return [b.input_map(x, c) for b in self.blocks]

    def eval_block(self, k: int, Z1, Z2) -> np.ndarray:
        return self.blocks[k].kernel(Z1, Z2)

    def eval_multi(self, spec1: Sequence[tuple[int, np.ndarray]], spec2: Sequence[tuple[int, np.ndarray]]) -> np.ndarray:
        """Covariance between two lists of ``(output_dim, input)`` pairs."""
        out = np.zeros((len(spec1), len(spec2)))
        dims1 = np.array([k for k, _ in spec1], dtype=int)
        dims2 = np.array([k for k, _ in spec2], dtype=int)
        for k in sorted(set(dims1.tolist()) & set(dims2.tolist())):
            i1 = np.flatnonzero(dims1 == k)
            i2 = np.flatnonzero(dims2 == k)
            dz = self.input_dim(k)
            Z1 = np.array([_as_point(spec1[i][1], dz) for i in i1])
            Z2 = np.array([_as_point(spec2[i][1], dz) for i in i2])
            out[np.ix_(i1, i2)] = self.eval_block(k, Z1, Z2)
        for k, z in list(spec1) + list(spec2):
            if not 0 <= k < self.d_f:
                raise DimensionMismatch(f"output dimension {k} outside 0..{self.d_f - 1}")
            _as_point(z, self.input_dim(k))
        return out

    def grad_hyper(self, k: int, Z1, Z2) -> np.ndarray:
        kern = self.blocks[k].kernel
        if not kern.differentiable:
            raise Unsupported(f"kernel of dimension {k} is not differentiable")
        return kern.grad_params(Z1, Z2)

    # hyperparameter vector across all dimensions

    def param_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            n = b.kernel.theta.size
            out.append(slice(start, start + n))
            start += n
        return out

    @property
    def theta(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate([b.kernel.theta for b in self.blocks])

    @theta.setter
    def theta(self, value) -> None:
        value = np.asarray(value, dtype=float)
        for b, sl in zip(self.blocks, self.param_slices()):
            if sl.stop > sl.start:
                b.kernel.theta = value[sl]

    def supports_exact_moments(self) -> bool:
        """True when every block is a pure squared-exponential on an affine input."""
        return all(b.kernel.kind == "rbf" and b.input_map.is_affine for b in self.blocks)
