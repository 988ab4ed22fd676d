"""
Spherical spline interpolation of scalp potentials

The potential at a unit vector r is modelled as
    V(r) = c0 + sum_j c_j g_m(cos(r, r_j))
with the kernel
    g_m(x) = 1/(4 pi) sum_{n=1}^{n_terms} (2n+1) / (n(n+1))^m P_n(x).
Coefficients solve the symmetric augmented system
    [[G_ss + lambda I, 1], [1^T, 0]] [c; c0] = [v; 0].
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from config import settings
from src.exceptions import SingularSystemError, SignalError

logger = logging.getLogger(__name__)

MIN_TERMS = 7
MIN_SOURCES = 4
_MAX_CONDITION = 1e13


def legendre(n: int, x) -> np.ndarray:
    """P_n(x) by the Bonnet recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}"""
    x = np.asarray(x, dtype=np.float64)
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    if np.any(np.abs(x) > 1.0):
        raise ValueError("legendre argument must satisfy |x| <= 1")
    p_prev, p = np.ones_like(x), x.copy()
    if n == 0:
        return p_prev
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


def legendre_series(n_terms: int, x: np.ndarray) -> np.ndarray:
    """Stack of P_1(x) .. P_{n_terms}(x) along a new leading axis"""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((n_terms,) + x.shape)
    p_prev, p = np.ones_like(x), x.copy()
    out[0] = p
    for k in range(1, n_terms):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        out[k] = p
    return out


def spline_kernel(x, m: int = settings.SPLINE_ORDER, n_terms: int = settings.SPLINE_TERMS) -> np.ndarray:
    """Truncated spherical spline kernel g_m(x)"""
    if m < 2:
        raise ValueError(f"spline order m must be >= 2, got {m}")
    if n_terms < MIN_TERMS:
        raise ValueError(f"n_terms must be >= {MIN_TERMS}, got {n_terms}")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("kernel argument must satisfy |x| <= 1")
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    weights = (2 * n + 1) / (n * (n + 1)) ** m
    series = legendre_series(n_terms, x)
    return np.tensordot(weights, series, axes=1) / (4 * np.pi)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cosines of the angles between unit vectors, clipped into [-1, 1]"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    return np.clip(a @ b.T, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class SplineModel:
    """Fitted spline; ``c`` is (N,) for one field or (N, T) for T samples"""
    m: int
    lam: float
    n_terms: int
    c0: np.ndarray
    c: np.ndarray


class SplineSolver:
    """Factorizes the augmented system once for a fixed source geometry

    The matrix depends only on electrode positions, so one LU factorization
    serves every time sample of a recording.
    """

    def __init__(self,
                 src_positions: np.ndarray,
                 m: int = settings.SPLINE_ORDER,
                 lam: float = settings.SPLINE_LAMBDA,
                 n_terms: int = settings.SPLINE_TERMS) -> None:
        src = np.asarray(src_positions, dtype=np.float64)
        if src.ndim != 2 or src.shape[1] != 3:
            raise ValueError(f"source positions must be (N, 3), got {src.shape}")
        if src.shape[0] < MIN_SOURCES:
            raise SingularSystemError(f"need at least {MIN_SOURCES} source positions, got {src.shape[0]}")
        if lam < 0:
            raise ValueError(f"lambda must be >= 0, got {lam}")
        self.src = src / np.linalg.norm(src, axis=1, keepdims=True)
        self.m, self.lam, self.n_terms = m, float(lam), n_terms

        diffs = self.src[:, None, :] - self.src[None, :, :]
        dist = np.linalg.norm(diffs, axis=-1) + np.eye(len(self.src))
        if dist.min() < 1e-9:
            raise SingularSystemError("singular system: coincident source positions")

        n = len(self.src)
        g_ss = spline_kernel(cosine_matrix(self.src, self.src), m, n_terms)
        self.system = np.zeros((n + 1, n + 1))
        self.system[:n, :n] = g_ss + self.lam * np.eye(n)
        self.system[:n, n] = 1.0
        self.system[n, :n] = 1.0

        condition = np.linalg.cond(self.system)
        if not np.isfinite(condition) or condition > _MAX_CONDITION:
            raise SingularSystemError(f"singular system: condition number {condition:.3g}")
        try:
            self._lu = lu_factor(self.system, check_finite=True)
        except (LinAlgWarning, ValueError) as e:
            raise SingularSystemError(f"singular system: {e}") from e
        logger.debug(f"Spline system for {n} sources factorized (cond={condition:.3g})")

    def fit(self, values: np.ndarray) -> SplineModel:
        """Solve for coefficients; ``values`` is (N,) or (N, T)"""
        values = np.asarray(values, dtype=np.float64)
        n = len(self.src)
        if values.shape[0] != n:
            raise ValueError(f"expected {n} source values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise SignalError("spline values must be finite")
        rhs = np.concatenate([values, np.zeros((1,) + values.shape[1:])], axis=0)
        sol = lu_solve(self._lu, rhs)
        residual = np.linalg.norm(self.system @ sol - rhs)
        logger.debug(f"Spline solve residual {residual:.3g}")
        return SplineModel(m=self.m, lam=self.lam, n_terms=self.n_terms, c0=sol[n], c=sol[:n])

    def interpolate(self, model: SplineModel, dst_positions: np.ndarray) -> np.ndarray:
        return interpolate_at(model, self.src, dst_positions)


def fit_spline(src_positions: np.ndarray,
               values: np.ndarray,
               m: int = settings.SPLINE_ORDER,
               lam: float = settings.SPLINE_LAMBDA,
               n_terms: Optional[int] = None) -> SplineModel:
    """Fit a spherical spline to values observed at ``src_positions``"""
    solver = SplineSolver(src_positions, m=m, lam=lam, n_terms=n_terms or settings.SPLINE_TERMS)
    return solver.fit(values)


def interpolate_at(model: SplineModel, src_positions: np.ndarray, dst_positions: np.ndarray) -> np.ndarray:
    """Evaluate a fitted spline at destination electrodes: G_ds c + c0"""
    g_ds = spline_kernel(cosine_matrix(dst_positions, src_positions), model.m, model.n_terms)
    return g_ds @ model.c + model.c0
