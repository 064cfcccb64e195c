"""Choosing the matrix scale ``s`` and rotation constant ``c``.

Three strategies:

* ``adapt``: eigenvalue-free. ``s = 2**-n_r / d_tilde_min`` and
  ``c = 2**-n_r`` using only the diagonal of ``A``.
* ``perturbed``: first-order perturbative estimates of the extreme
  eigenvalues from the extreme diagonal entries.
* ``exact``: full diagonalization (baseline).

The two eigenvalue-driven strategies share one rule: ``s`` is the largest
power of two keeping ``s * lambda_max`` at least a few grid cells below 1,
and ``c`` is ``s * lambda_min`` rounded down onto the clock grid.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .problem import ProblemInstance


@dataclass
class ScalingPlan:
    s: float
    c: float
    n_r: int
    strategy: str
    d_tilde_min: Optional[float] = None
    lambda_est_min: Optional[float] = None
    lambda_est_max: Optional[float] = None
    kappa: Optional[float] = None
    clip_angles: bool = False
    warnings: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)

    def scaled(self, A) -> np.ndarray:
        return self.s * _matrix(A)


@dataclass
class ScalingReport:
    in_range: bool
    under_represented: bool
    min_scaled: float
    max_scaled: float
    max_rounding_error: float
    predicted_norm_loss: float
    scaled_eigenvalues: list

    def as_dict(self) -> dict:
        return asdict(self)


def _matrix(A) -> np.ndarray:
    if isinstance(A, ProblemInstance):
        return A.A
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if np.max(np.abs(A - A.conj().T)) > 1e-10:
        raise ValueError("matrix must be Hermitian")
    return A


def _check_n_r(n_r):
    if int(n_r) != n_r or n_r < 1:
        raise ValueError(f"n_r must be a positive integer, got {n_r}")
    return int(n_r)


def adapt_scaling(A, n_r: int, d_tilde_min="use_d_min") -> ScalingPlan:
    """Eigenvalue-free scaling from the diagonal.

    ``d_tilde_min`` is ``"use_d_min"`` (default) or an explicit positive
    value. Raises if ``2**-n_r * d_max / d_tilde_min >= 1`` and reports the
    smallest ``n_r`` that would work.
    """
    n_r = _check_n_r(n_r)
    A = _matrix(A)
    diag = np.real(np.diag(A))
    if np.any(diag <= 0):
        raise ValueError("adaptive scaling needs a positive diagonal")
    d_min, d_max = float(diag.min()), float(diag.max())
    if d_tilde_min in (None, "use_d_min"):
        dt = d_min
    else:
        dt = float(d_tilde_min)
        if dt <= 0:
            raise ValueError("d_tilde_min must be positive")
    grid = 2.0 ** -n_r
    ratio = d_max / dt
    if grid * ratio >= 1:
        need = math.floor(math.log2(ratio)) + 1
        raise ValueError(
            f"largest scaled diagonal entry 2^-{n_r} * {d_max:.6g} / {dt:.6g} = {grid * ratio:.4g} "
            f"is not below 1; use n_r >= {need}"
        )
    plan = ScalingPlan(
        s=grid / dt, c=grid, n_r=n_r, strategy="adapt", d_tilde_min=dt,
        assumptions=["|lambda_max| >= d_max and |lambda_min| <= d_min (not verified)"],
    )
    if not (d_min >= dt > grid * d_max):
        plan.warnings.append(
            f"d_tilde_min={dt:.6g} lies outside the window ({grid * d_max:.6g}, {d_min:.6g}]"
        )
    return plan


def _shifted_estimate(A, pick, xi):
    diag = np.real(np.diag(A))
    target = pick(diag)
    idx = np.flatnonzero(diag == target)
    i = int(idx[0])
    bdiag = diag.copy()
    for m, j in enumerate(idx[1:], start=1):
        bdiag[j] = diag[j] - m * xi
    lam = diag[i]
    for j in range(len(diag)):
        if j == i:
            continue
        denom = bdiag[i] - bdiag[j]
        w = abs(A[i, j]) ** 2
        if w == 0:
            continue
        if denom == 0:
            raise ZeroDivisionError(
                f"perturbation denominator b_{i}{i} - b_{j}{j} vanishes; choose a different xi"
            )
        lam += w / denom
    return float(lam)


def perturbed_eigen_estimates(A, xi: float = 1.0):
    """Perturbative ``(lambda_min, lambda_max)`` from the extreme diagonal entries.

    Repeats of an extreme value after its first (lowest-index) occurrence are
    shifted down by ``m * xi`` for the m-th repeat before the second-order
    sum is evaluated.
    """
    if not 0 < xi <= 1:
        raise ValueError("xi must lie in (0, 1]")
    A = _matrix(A)
    return _shifted_estimate(A, np.min, xi), _shifted_estimate(A, np.max, xi)


def _spectral_plan(lam_min, lam_max, n_r, strategy, guard=None):
    grid = 2.0 ** -n_r
    if guard is None:
        guard = min(4 * grid, 0.25)
    if lam_min <= 0 or lam_max <= 0:
        raise ValueError(f"eigenvalue estimates must be positive, got ({lam_min}, {lam_max})")
    s = 2.0 ** math.floor(math.log2((1 - guard) / lam_max))
    c = max(1, math.floor(s * lam_min / grid + 1e-9)) * grid
    return ScalingPlan(
        s=s, c=c, n_r=n_r, strategy=strategy, lambda_est_min=float(lam_min),
        lambda_est_max=float(lam_max), kappa=float(lam_max / lam_min), clip_angles=True,
    )


def perturbed_scaling(A, n_r: int, xi: float = 1.0) -> ScalingPlan:
    n_r = _check_n_r(n_r)
    lo, hi = perturbed_eigen_estimates(A, xi)
    plan = _spectral_plan(lo, hi, n_r, "perturbed")
    plan.assumptions.append("true spectrum not constrained to (0, 1); check with validate_scaling")
    return plan


def exact_scaling(A, n_r: int) -> ScalingPlan:
    n_r = _check_n_r(n_r)
    w = np.linalg.eigvalsh(_matrix(A))
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (smallest eigenvalue {w[0]:.6g})")
    return _spectral_plan(float(w[0]), float(w[-1]), n_r, "exact")


def rounding_predicted_norm(A, plan: ScalingPlan, b) -> tuple:
    """``(|| x ||, || x_rounded ||)`` with eigenvalues rounded to the clock grid."""
    w, v = np.linalg.eigh(plan.scaled(A))
    beta = v.conj().T @ (np.asarray(b, dtype=complex) / np.linalg.norm(b))
    k = 1 << plan.n_r
    rounded = np.round(w * k) / k
    exact = np.linalg.norm(beta / w)
    with np.errstate(divide="ignore"):
        inv = np.where(rounded > 0, 1 / np.where(rounded > 0, rounded, 1), 0.0)
    return float(exact), float(np.linalg.norm(beta * inv))


def validate_scaling(A, plan: ScalingPlan, b=None) -> ScalingReport:
    """Diagnose a plan by diagonalizing ``sA`` (desk-scale check only)."""
    M = _matrix(A)
    w = np.linalg.eigvalsh(plan.scaled(M))
    k = 1 << plan.n_r
    if b is None:
        b = np.zeros(M.shape[0])
        b[-1] = 1.0
    exact, rounded = rounding_predicted_norm(M, plan, b)
    return ScalingReport(
        in_range=bool(w[0] > 0 and w[-1] < 1),
        under_represented=bool(w[0] < plan.c - 1e-15),
        min_scaled=float(w[0]),
        max_scaled=float(w[-1]),
        max_rounding_error=float(np.max(np.abs(w - np.round(w * k) / k))),
        predicted_norm_loss=abs(rounded - exact) / exact * 100.0,
        scaled_eigenvalues=[float(x) for x in w],
    )


def make_plan(strategy: str, A, n_r: int, d_tilde_min="use_d_min", xi: float = 1.0) -> ScalingPlan:
    if strategy == "adapt":
        return adapt_scaling(A, n_r, d_tilde_min)
    if strategy == "perturbed":
        return perturbed_scaling(A, n_r, xi)
    if strategy == "exact":
        return exact_scaling(A, n_r)
    raise ValueError(f"unknown scaling strategy {strategy!r}")
