"""Fixed-point solvers for the load-coupled demand scaling problem.

Under a fixed association the maximum scaling factor for a target set ``S``
is the limit of the joint iteration::

    alpha <- 1 / H(F_alpha(mu))
    mu    <- F_alpha(mu) / H(F_alpha(mu))

whose limit meets every scaled demand with equality and fills the most loaded
RRH exactly to its limit. :func:`oracle_max_alpha` recomputes the same value
by bisection over plain fixed-point feasibility checks and is meant for
cross-validation on small instances only.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateImageError, NonConvergentError, OracleGuardError
from .network import (
    Association,
    NetworkInstance,
    f_alpha,
    h_max_load,
    interference_map,
    scaled_demand_map,
    target_mask,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 10_000
DIVERGENCE_LIMIT = 1e6
INFEASIBLE_MARGIN = 1e-9

__all__ = [
    "IterationTrace",
    "ScalingProblem",
    "MaxAlphaResult",
    "fixed_point",
    "normalized_fixed_point",
    "solve_max_alpha",
    "oracle_max_alpha",
    "t_map",
    "p_map",
]


@dataclass
class IterationTrace:
    """Per-step record of an iteration: ``k``, ``alpha``, ``mu``, residual, ``H``."""

    k: list[int] = field(default_factory=list)
    alpha: list[float] = field(default_factory=list)
    mu: list[np.ndarray] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    h: list[float] = field(default_factory=list)

    def append(self, k, alpha, mu, residual, h):
        self.k.append(int(k))
        self.alpha.append(float(alpha))
        self.mu.append(np.array(mu, dtype=float))
        self.residual.append(float(residual))
        self.h.append(float(h))

    def __len__(self):
        return len(self.k)

    def rows(self):
        return zip(self.k, self.alpha, self.residual, self.h)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "alpha", "residual", "H"])
        for k, a, r, h in self.rows():
            w.writerow([k, repr(a), repr(r), repr(h)])
        return buf.getvalue()

    def to_dict(self, include_mu: bool = False) -> dict:
        doc = {"k": self.k, "alpha": self.alpha, "residual": self.residual, "H": self.h}
        if include_mu:
            doc["mu"] = [m.tolist() for m in self.mu]
        return doc

    def eventually_monotone(self, tail_fraction: float = 0.5) -> bool:
        """True if the last ``tail_fraction`` of residuals never increases."""
        r = np.asarray(self.residual)
        if r.size < 2:
            return True
        start = min(int(math.floor(r.size * (1.0 - tail_fraction))), r.size - 1)
        return bool(np.all(np.diff(r[start:]) <= 0.0))


@dataclass(frozen=True)
class ScalingProblem:
    """Target set, tolerance and starting point for a max-alpha solve."""

    target_set: tuple[int, ...]
    epsilon: float = 1e-4
    alpha0: float = 1.0
    mu0: np.ndarray | None = None

    def __post_init__(self):
        s = tuple(sorted(set(int(j) for j in self.target_set)))
        if not s:
            raise ValueError("target set must be non-empty")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        object.__setattr__(self, "target_set", s)

    def initial_mu(self, num_ues: int) -> np.ndarray:
        if self.mu0 is None:
            return np.zeros(num_ues)
        mu0 = np.asarray(self.mu0, dtype=float)
        if mu0.shape != (num_ues,) or np.any(mu0 < 0):
            raise ValueError("mu0 must be a non-negative vector with one entry per UE")
        return mu0.copy()

    def mask(self, num_ues: int) -> np.ndarray:
        return target_mask(num_ues, self.target_set)


@dataclass
class MaxAlphaResult:
    alpha_star: float
    mu_star: np.ndarray
    trace: IterationTrace
    converged: bool
    iterations: int

    @property
    def infeasible(self) -> bool:
        """Unscaled demands already overload the network (beyond round-off)."""
        return self.alpha_star < 1.0 - INFEASIBLE_MARGIN

    def optimality_gaps(self, instance: NetworkInstance, assoc: Association, target_set) -> dict:
        """Residuals of the optimality conditions at the returned pair.

        ``h_gap`` is ``|H(mu*) - 1|``; ``equality_gap`` is the largest
        ``|mu_j - alpha* f_j(mu*)|`` over ``S`` and ``|mu_j - f_j(mu*)|`` off it;
        ``binding_gap`` is the smallest such gap restricted to ``S``.
        """
        mask = target_mask(instance.num_ues, target_set)
        f = interference_map(instance, assoc, self.mu_star)
        gap = np.abs(self.mu_star - np.where(mask, self.alpha_star, 1.0) * f)
        loads = assoc.kappa @ self.mu_star
        return {
            "h_gap": abs(h_max_load(assoc, self.mu_star, instance.load_limit) - 1.0),
            "equality_gap": float(gap.max()),
            "binding_gap": float(gap[mask].min()),
            "full_load_gap": float(np.abs(loads - instance.load_limit).min()),
        }

    def to_dict(self, include_trace: bool = True) -> dict:
        doc = {
            "alpha_star": self.alpha_star,
            "mu_star": self.mu_star.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "infeasible": self.infeasible,
        }
        if include_trace:
            doc["trace"] = self.trace.to_dict()
        return doc


def fixed_point(
    mapping: Callable[[np.ndarray], np.ndarray],
    mu0,
    epsilon: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    h: Callable[[np.ndarray], float] | None = None,
):
    """Plain iteration ``mu <- mapping(mu)`` until ``||mu_k - mu_{k-1}||_inf < epsilon``.

    Returns ``(mu, trace)``. Raises :class:`NonConvergentError` after
    ``max_iters`` steps or once an iterate exceeds the divergence limit.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    mu = np.array(mu0, dtype=float)
    trace = IterationTrace()
    for k in range(1, max_iters + 1):
        nxt = np.asarray(mapping(mu), dtype=float)
        res = float(np.max(np.abs(nxt - mu))) if nxt.size else 0.0
        hk = h(nxt) if h is not None else float("nan")
        trace.append(k, float("nan"), nxt, res, hk)
        mu = nxt
        if not np.all(np.isfinite(mu)) or np.max(mu, initial=0.0) > DIVERGENCE_LIMIT:
            raise NonConvergentError(f"iterates diverged at step {k}", mu, trace)
        if res < epsilon:
            return mu, trace
    raise NonConvergentError(f"no convergence within {max_iters} iterations", mu, trace)


def normalized_fixed_point(
    instance: NetworkInstance,
    assoc: Association,
    target_set,
    alpha: float,
    mu0=None,
    epsilon: float = 1e-10,
    max_iters: int = DEFAULT_MAX_ITERS,
):
    """Conditional eigenpair of ``F_alpha`` with ``H(mu) = 1``.

    Iterates ``mu <- F_alpha(mu) / H(F_alpha(mu))`` and returns
    ``(mu_alpha, lambda_alpha)`` with ``F_alpha(mu_alpha) = lambda_alpha * mu_alpha``.
    """
    assoc.require_served()
    rho_bar = instance.load_limit
    mu = np.zeros(instance.num_ues) if mu0 is None else np.array(mu0, dtype=float)

    def image(x):
        fx = f_alpha(instance, assoc, x, alpha, target_set)
        hx = h_max_load(assoc, fx, rho_bar)
        if not hx > 0:
            raise DegenerateImageError("H(F_alpha(mu)) vanished")
        return fx, hx

    for _ in range(max_iters):
        fx, hx = image(mu)
        nxt = fx / hx
        res = float(np.max(np.abs(nxt - mu)))
        mu = nxt
        if res < epsilon:
            _, lam = image(mu)
            return mu, lam
    raise NonConvergentError(f"normalized iteration did not converge within {max_iters} steps", mu)


def t_map(instance, assoc, target_set, alpha, epsilon=1e-12, mu0=None):
    """``T(alpha) = 1 / H(F_alpha(mu_alpha))``, i.e. the reciprocal eigenvalue."""
    _, lam = normalized_fixed_point(instance, assoc, target_set, alpha, mu0=mu0, epsilon=epsilon)
    return 1.0 / lam


def p_map(instance, assoc, target_set, alpha, mu):
    """``P(alpha) = 1 / H(F_alpha(mu))`` for a frozen allocation ``mu``."""
    return 1.0 / h_max_load(assoc, f_alpha(instance, assoc, mu, alpha, target_set), instance.load_limit)


def solve_max_alpha(
    instance: NetworkInstance,
    assoc: Association,
    problem: ScalingProblem,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> MaxAlphaResult:
    """Maximum demand scaling factor for ``problem.target_set`` under ``assoc``.

    Runs the joint ``(alpha, mu)`` iteration until the infinity norm of the
    step on the concatenated vector ``[alpha, mu]`` drops below
    ``problem.epsilon``. The returned ``alpha_star`` may be below 1, which
    means the unscaled demands are already infeasible.
    """
    assoc.require_served()
    n = instance.num_ues
    mask = problem.mask(n)
    rho_bar = instance.load_limit
    alpha = float(problem.alpha0)
    mu = problem.initial_mu(n)
    trace = IterationTrace()

    for k in range(1, max_iters + 1):
        fa = f_alpha(instance, assoc, mu, alpha, mask)
        hf = h_max_load(assoc, fa, rho_bar)
        if not hf > 0:
            raise DegenerateImageError("H(F_alpha(mu)) vanished")
        if not math.isfinite(hf) or hf > DIVERGENCE_LIMIT:
            partial = MaxAlphaResult(alpha, mu, trace, False, k - 1)
            raise NonConvergentError(f"max load of image diverged at step {k}", mu, trace, partial)
        new_alpha = 1.0 / hf
        new_mu = fa / hf
        res = max(abs(new_alpha - alpha), float(np.max(np.abs(new_mu - mu))))
        alpha, mu = new_alpha, new_mu
        trace.append(k, alpha, mu, res, h_max_load(assoc, mu, rho_bar))
        if res < problem.epsilon:
            return MaxAlphaResult(alpha, mu, trace, True, k)

    partial = MaxAlphaResult(alpha, mu, trace, False, max_iters)
    raise NonConvergentError(f"no convergence within {max_iters} iterations", mu, trace, partial)


def oracle_max_alpha(
    instance: NetworkInstance,
    assoc: Association,
    target_set,
    epsilon: float = 1e-9,
    max_inner: int = 200_000,
    alpha_cap: float = 2.0**20,
) -> float:
    """Bisection oracle for the maximum scaling factor (small instances only).

    A trial ``alpha`` is feasible when the plain fixed-point iteration of
    ``mu -> (alpha f_j on S, f_j elsewhere)`` from zero converges with
    ``H(mu) <= 1 + epsilon``. Returns the largest feasible ``alpha`` to
    bracket width ``epsilon``, or ``0.0`` if even ``1 / alpha_cap`` is
    infeasible.
    """
    m, n = instance.shape
    if m * n > 64:
        raise OracleGuardError(f"oracle limited to m*n <= 64, got {m}x{n}")
    assoc.require_served()
    mask = target_mask(n, target_set)
    rho_bar = instance.load_limit
    inner_tol = min(epsilon * 1e-3, 1e-12)

    def feasible(alpha: float) -> bool:
        mu = np.zeros(n)
        for _ in range(max_inner):
            nxt = scaled_demand_map(instance, assoc, mu, alpha, mask)
            # iterates from zero increase monotonically toward the fixed point
            if h_max_load(assoc, nxt, rho_bar) > 1.0 + epsilon:
                return False
            if np.max(np.abs(nxt - mu)) < inner_tol:
                return True
            mu = nxt
        return False

    if feasible(1.0):
        lo, hi = 1.0, 2.0
        while feasible(hi):
            lo, hi = hi, 2.0 * hi
            if hi > alpha_cap:
                log.warning("oracle: alpha feasible up to cap %g", alpha_cap)
                return alpha_cap
    else:
        hi, lo = 1.0, 0.5
        while not feasible(lo):
            hi, lo = lo, 0.5 * lo
            if lo < 1.0 / alpha_cap:
                return 0.0
    while hi - lo > epsilon:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo
