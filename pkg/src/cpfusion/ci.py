"""Covariance intersection for estimates of possibly different dimension.

Given ``N(a, A)`` over the full state and ``N(b, B)`` over an observed
subspace ``b ~ H a``, the fused estimate is

    C^-1 = w A^-1 + (1 - w) H' B^-1 H
    c    = C (w A^-1 a + (1 - w) H' B^-1 b)

with ``w`` in [0, 1] chosen to minimise det(C) (or trace(C) on request).

The weight is found on the generalised spectrum of the information pencil:
whitening ``A^-1`` turns ``H' B^-1 H`` into a diagonal matrix with
eigenvalues ``lam_i``, after which

    log det C(w) = const - sum_i log(w + (1 - w) lam_i)

is convex in ``w`` and cheap to evaluate. Endpoints are decided from the
sign of the derivative so that w = 0 and w = 1 are returned exactly; any
interior optimum is located by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericSingularityError
from .geometry import GaussianEstimate, check_covariance, symmetrize

OMEGA_TOL = 1e-9
MAX_CONDITION = 1e12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CiResult:
    fused: GaussianEstimate
    omega: float


def inverse_spd(matrix: np.ndarray, *, check_condition: bool = False) -> np.ndarray:
    """Invert a symmetric positive-definite matrix via Cholesky.

    One retry with ``1e-12 * trace`` added to the diagonal is made before
    giving up with :class:`NumericSingularityError`.
    """
    m = symmetrize(np.asarray(matrix, dtype=float))
    n = m.shape[0]
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * max(float(np.trace(m)), 1e-300)
        try:
            chol = np.linalg.cholesky(m + jitter * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise NumericSingularityError("matrix is not positive definite") from exc
    if check_condition:
        eig = np.linalg.eigvalsh(m)
        if eig[0] <= 0.0 or eig[-1] / eig[0] >= MAX_CONDITION:
            raise NumericSingularityError(
                f"matrix condition number exceeds {MAX_CONDITION:.0e}"
            )
    chol_inv = np.linalg.inv(chol)
    return chol_inv.T @ chol_inv


def golden_section(f, lo: float, hi: float, tol: float = OMEGA_TOL) -> float:
    """Minimise a unimodal scalar function on [lo, hi] to interval width ``tol``."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)


def _pencil_spectrum(x: np.ndarray, y: np.ndarray):
    """Eigenvalues of ``y`` whitened by ``x`` plus the trace weights.

    ``x`` must be positive definite. Returns ``(lam, c)`` where
    ``(w x + (1-w) y)^-1`` has trace ``sum c_i / (w + (1-w) lam_i)``.
    """
    chol = np.linalg.cholesky(x)
    chol_inv = np.linalg.inv(chol)
    whitened = symmetrize(chol_inv @ y @ chol_inv.T)
    lam, vecs = np.linalg.eigh(whitened)
    lam = np.clip(lam, 0.0, None)
    back = chol_inv.T @ vecs
    c = np.einsum("ij,ij->j", back, back)
    return lam.tolist(), c.tolist()


def _objective(lam, c, criterion: str):
    """Objective with its first two derivatives in ``w``, all convex forms."""
    if criterion == "det":

        def f(w):
            total = 0.0
            for v in lam:
                d = w + (1.0 - w) * v
                if d <= 0.0:
                    return math.inf
                total -= math.log(d)
            return total

        def derivs(w):
            g = h = 0.0
            for v in lam:
                d = w + (1.0 - w) * v
                r = (1.0 - v) / d
                g -= r
                h += r * r
            return g, h

    elif criterion == "trace":

        def f(w):
            total = 0.0
            for ci, v in zip(c, lam):
                d = w + (1.0 - w) * v
                if d <= 0.0:
                    return math.inf
                total += ci / d
            return total

        def derivs(w):
            g = h = 0.0
            for ci, v in zip(c, lam):
                d = w + (1.0 - w) * v
                r = (1.0 - v) / d
                g -= ci * r / d
                h += 2.0 * ci * r * r / d
            return g, h

    else:
        raise InvalidArgumentError(f"unknown criterion {criterion!r}")
    return f, derivs


def _search_key(lam, c, criterion: str):
    """Cheap function with the same minimiser as the objective on [0, 1].

    ``-log`` is decreasing, so minimising ``-sum log d_i`` is the same as
    maximising ``prod d_i``; the product avoids a logarithm per term.
    """
    if criterion != "det":
        return _objective(lam, c, criterion)[0]

    def key(w):
        p = 1.0
        for v in lam:
            p *= w + (1.0 - w) * v
        return -p

    return key


def _omega_from_spectrum(lam, c, criterion: str, tol: float) -> float:
    _, derivs = _objective(lam, c, criterion)
    f = _search_key(lam, c, criterion)
    scale = len(lam) + sum(lam)
    if criterion == "trace":
        scale *= sum(c)
    slope_tol = 1e-10 * scale
    if derivs(1.0)[0] <= slope_tol:
        return 1.0
    if min(lam) > 0.0 and derivs(0.0)[0] >= -slope_tol:
        return 0.0
    w = golden_section(f, 0.0, 1.0, tol)
    # Newton polish: the bracket is only 1e-9 wide, and re-fusion relies on
    # the first-order condition holding to round-off. Objective values are
    # flat to round-off here, so progress is judged by the slope, which is
    # monotone for these convex objectives.
    g, h = derivs(w)
    for _ in range(8):
        if h <= 0.0 or g == 0.0:
            break
        cand = min(max(w - g / h, 0.0), 1.0)
        gc, hc = derivs(cand)
        if not abs(gc) < abs(g):
            break
        w, g, h = cand, gc, hc
    return w


def optimize_omega(
    a_inv: np.ndarray,
    b_projected_inv: np.ndarray,
    criterion: str = "det",
    tol: float = OMEGA_TOL,
) -> float:
    """Weight in [0, 1] minimising det (or trace) of the CI covariance.

    ``a_inv`` is the information matrix of the full-state estimate and
    ``b_projected_inv`` is ``H' B^-1 H``. At least one of them must be
    positive definite.
    """
    x = check_covariance(a_inv, "a_inv")
    y = check_covariance(b_projected_inv, "b_projected_inv")
    if x.shape != y.shape:
        raise InvalidArgumentError(
            f"information matrices differ in shape: {x.shape} vs {y.shape}"
        )
    return solve_omega(x, y, criterion, tol)


def solve_omega(x: np.ndarray, y: np.ndarray, criterion: str = "det", tol: float = OMEGA_TOL) -> float:
    """:func:`optimize_omega` without input validation, for inner loops."""
    try:
        lam, c = _pencil_spectrum(x, y)
        return _omega_from_spectrum(lam, c, criterion, tol)
    except np.linalg.LinAlgError:
        pass
    try:
        # x is singular: solve the mirrored problem with the roles swapped.
        lam, c = _pencil_spectrum(y, x)
        return 1.0 - _omega_from_spectrum(lam, c, criterion, tol)
    except np.linalg.LinAlgError as exc:
        raise NumericSingularityError(
            "neither information matrix is positive definite"
        ) from exc


def solve_omega_cov(
    a: np.ndarray, b: np.ndarray, criterion: str = "det", tol: float = OMEGA_TOL
) -> float:
    """CI weight for covariance ``a`` fused with ``b`` observing its leading block.

    Same answer as :func:`solve_omega` on ``(a^-1, H' b^-1 H)`` with
    ``H = [I 0]``, computed without forming inverses: with ``a = M M'`` the
    pencil eigenvalues are those of ``(H M)' b^-1 (H M)`` and the trace
    weights are the squared column norms of ``M V``. Both covariances must be
    positive definite.
    """
    return float(solve_omega_cov_many(a[None], b[None], criterion, tol)[0])


def solve_omega_cov_many(
    a: np.ndarray, b: np.ndarray, criterion: str = "det", tol: float = OMEGA_TOL
) -> np.ndarray:
    """:func:`solve_omega_cov` over stacks ``a`` of shape (k, n, n) and ``b`` (k, m, m)."""
    m = b.shape[-1]
    try:
        ma = np.linalg.cholesky(a)
        mb = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise NumericSingularityError("covariance is not positive definite") from exc
    z = np.linalg.solve(mb, ma[:, :m, :])
    lam, vecs = np.linalg.eigh(np.swapaxes(z, 1, 2) @ z)
    lam = np.clip(lam, 0.0, None)
    back = ma @ vecs
    c = np.einsum("kij,kij->kj", back, back)
    return np.array(
        [
            _omega_from_spectrum(lk, ck, criterion, tol)
            for lk, ck in zip(lam.tolist(), c.tolist())
        ]
    )


def _check_observation(h: np.ndarray, m: int, n: int) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (m, n):
        raise InvalidArgumentError(f"H must be {m}x{n}, got {h.shape}")
    if m > n or np.linalg.matrix_rank(h) != m:
        raise InvalidArgumentError("H must have full row rank with rows <= cols")
    return h


def ci_fuse(
    a: GaussianEstimate,
    b: GaussianEstimate,
    h: np.ndarray | None = None,
    *,
    criterion: str = "det",
) -> CiResult:
    """Fuse ``a`` (full state) with ``b`` (observed through ``h``) by CI.

    The result has the dimension of ``a``. ``h`` defaults to the identity
    when both estimates have the same dimension.
    """
    n, m = a.dim, b.dim
    if h is None:
        if m != n:
            raise InvalidArgumentError("H is required when dimensions differ")
        h = np.eye(n)
    h = _check_observation(h, m, n)
    a_inv = inverse_spd(a.cov, check_condition=True)
    b_inv = inverse_spd(b.cov, check_condition=True)
    projected = symmetrize(h.T @ b_inv @ h)
    omega = optimize_omega(a_inv, projected, criterion)
    if omega == 1.0:
        return CiResult(GaussianEstimate(a.mean.copy(), a.cov.copy()), 1.0)
    info = omega * a_inv + (1.0 - omega) * projected
    cov = inverse_spd(info)
    mean = cov @ (omega * a_inv @ a.mean + (1.0 - omega) * h.T @ b_inv @ b.mean)
    return CiResult(GaussianEstimate(mean, symmetrize(cov)), omega)
