"""Low-rank + sparse matrix decomposition via Principal Component Pursuit.

Solves  min ||N||_* + lambda * ||A||_1  subject to  X = N + A
with an inexact augmented Lagrangian scheme: singular value thresholding
on the low-rank part, elementwise soft thresholding on the sparse part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def default_lambda(rows: int, cols: int, C: float = 2.0) -> float:
    """Weight for the sparse term: C / sqrt(max(rows, cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    if C <= 0:
        raise ValueError("C must be positive")
    return C / math.sqrt(max(rows, cols))


@dataclass(frozen=True)
class PcpConfig:
    C: float = 2.0
    lambda_override: float | None = None
    tol: float = 1e-7
    max_iters: int = 500
    mu_init: float | None = None  # default 1.25 / sigma_1(X)
    rho: float = 1.5
    # grow mu only once the sparse iterate has settled; unconditional growth
    # can reach feasibility before the objective is minimized
    mu_growth_gate: float = 1e-6
    keep_history: bool = False

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rho <= 1:
            raise ValueError("rho must be > 1")

    def lam(self, rows: int, cols: int) -> float:
        if self.lambda_override is not None:
            return self.lambda_override
        return default_lambda(rows, cols, self.C)


@dataclass
class PcpDecomposition:
    N_matrix: np.ndarray
    A_matrix: np.ndarray
    lam: float
    iterations: int
    converged: bool
    residual: float
    objective_history: list[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        """Final value of ||N||_* + lambda * ||A||_1."""
        nuclear = np.linalg.svd(self.N_matrix, compute_uv=False).sum()
        return float(nuclear + self.lam * np.abs(self.A_matrix).sum())


def _svt(M: np.ndarray, tau: float) -> tuple[np.ndarray, float]:
    """Singular value thresholding; returns the matrix and its nuclear norm."""
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    if not keep.any():
        return np.zeros_like(M), 0.0
    return (U[:, keep] * s[keep]) @ Vt[keep, :], float(s.sum())


def _shrink(M: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def pcp_decompose(X: np.ndarray, cfg: PcpConfig = PcpConfig()) -> PcpDecomposition:
    """Split X into a low-rank and a sparse component.

    Non-convergence within cfg.max_iters is reported through the
    ``converged`` flag rather than raised; the best iterate is returned.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite entries")

    rows, cols = X.shape
    lam = cfg.lam(rows, cols)
    x_fro = float(np.linalg.norm(X))
    if x_fro == 0.0:
        return PcpDecomposition(
            N_matrix=np.zeros_like(X), A_matrix=np.zeros_like(X),
            lam=lam, iterations=0, converged=True, residual=0.0,
            objective_history=[0.0] if cfg.keep_history else [],
        )

    sigma1 = float(np.linalg.norm(X, 2))
    mu = cfg.mu_init if cfg.mu_init is not None else 1.25 / sigma1
    N = np.zeros_like(X)
    A = np.zeros_like(X)
    # dual start scaled so the first iterates are well conditioned
    Y = X / max(sigma1, np.max(np.abs(X)) / lam)

    history: list[float] = []
    residual = math.inf
    nuclear = 0.0
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        if __debug__:
            gap0 = X - N - A
            lagr_before = (nuclear + lam * np.abs(A).sum()
                           + np.vdot(Y, gap0) + 0.5 * mu * np.vdot(gap0, gap0))
        A_prev = A
        N, nuclear = _svt(X - A + Y / mu, 1.0 / mu)
        A = _shrink(X - N + Y / mu, lam / mu)
        gap = X - N - A
        if __debug__:
            # each half-step is an exact prox minimizer, so the augmented
            # Lagrangian under the current (Y, mu) cannot go up
            lagr_after = (nuclear + lam * np.abs(A).sum()
                          + np.vdot(Y, gap) + 0.5 * mu * np.vdot(gap, gap))
            assert lagr_after <= lagr_before + 1e-9 * max(1.0, abs(lagr_before)), \
                "augmented Lagrangian increased within an iteration"
        Y = Y + mu * gap
        if mu * float(np.linalg.norm(A - A_prev)) / x_fro < cfg.mu_growth_gate:
            mu *= cfg.rho
        residual = float(np.linalg.norm(gap)) / x_fro
        if cfg.keep_history:
            history.append(nuclear + lam * float(np.abs(A).sum()))
        if residual <= cfg.tol:
            break

    return PcpDecomposition(
        N_matrix=N, A_matrix=A, lam=lam, iterations=iters,
        converged=residual <= cfg.tol, residual=residual,
        objective_history=history,
    )


def vote_floor(X: np.ndarray) -> float:
    """Positive entries of A at or below this level are solver noise."""
    X = np.asarray(X, dtype=float)
    rms = np.linalg.norm(X) / math.sqrt(X.size)
    return 1e-6 * max(1.0, float(rms))
