"""CoMP link selection.

:func:`check_add_link` is the admission test for one candidate link. It runs,
from the converged allocation ``mu*`` under ``kappa``::

    rho(k) = kappa  @ mu(k-1)              # loads under the old association
    mu(k)  = Phi(rho(k); kappa')           # allocation with the link added

where ``Phi`` gives the resource fraction each UE needs at the scaled demand
(``alpha * F_alpha``). It accepts at the first ``k`` for which the candidate
RRH's load under ``kappa'`` is no larger than ``rho_i(k)``. At that point
``mu(k)`` is a super-solution of the ``kappa'`` fixed point, so adding the
link cannot raise any RRH load.

:func:`joint_optimize` sweeps candidates pass after pass, adds every link the
test admits and re-solves the maximum scaling factor after each addition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroGainsError, ZeroCapacityError
from .network import Association, NetworkInstance, allocation_from_load
from .solver import DEFAULT_MAX_ITERS, MaxAlphaResult, ScalingProblem, solve_max_alpha

log = logging.getLogger(__name__)

ORDERINGS = ("row-major", "by-gain-descending")


@dataclass(frozen=True)
class LinkCandidate:
    rrh: int
    ue: int


@dataclass
class LinkCheck:
    """Outcome of the admission test for one candidate."""

    accepted: bool
    witness_k: int | None
    iterations: int
    reason: str = ""


@dataclass
class AcceptedLink:
    rrh: int
    ue: int
    witness_k: int
    alpha_after: float


@dataclass
class JointResult:
    kappa_star: Association
    mu_star: np.ndarray
    alpha_star: float
    passes: int
    accepted_links: list[AcceptedLink] = field(default_factory=list)
    alpha_history: list[float] = field(default_factory=list)
    pass_alphas: list[float] = field(default_factory=list)
    baseline: MaxAlphaResult | None = None
    inner_iterations: int = 0

    @property
    def comp_ues(self) -> list[int]:
        return self.kappa_star.comp_ues()

    def to_dict(self) -> dict:
        return {
            "alpha_star": self.alpha_star,
            "mu_star": self.mu_star.tolist(),
            "kappa_star": self.kappa_star.to_list(),
            "passes": self.passes,
            "accepted_links": [
                {"rrh": a.rrh, "ue": a.ue, "witness_k": a.witness_k, "alpha_after": a.alpha_after}
                for a in self.accepted_links
            ],
            "alpha_history": self.alpha_history,
            "pass_alphas": self.pass_alphas,
            "comp_ues": self.comp_ues,
            "inner_iterations": self.inner_iterations,
        }


def best_rrh_association(instance: NetworkInstance) -> Association:
    """Serve each UE by its strongest RRH (``p_i |h_ij|^2``); ties go to the lower index."""
    rx = instance.rx_power
    dead = np.flatnonzero(~(rx > 0).any(axis=0))
    if dead.size:
        raise AllZeroGainsError(dead)
    best = np.argmax(rx, axis=0)  # argmax returns the first maximum
    kappa = np.zeros(instance.shape, dtype=bool)
    kappa[best, np.arange(instance.num_ues)] = True
    return Association(kappa)


def _demand_scale(n: int, target_set, alpha: float) -> np.ndarray:
    scale = np.ones(n)
    scale[list(target_set)] = alpha
    return scale


def check_add_link(
    instance: NetworkInstance,
    kappa: Association,
    candidate: LinkCandidate,
    mu_star,
    alpha: float,
    target_set,
    epsilon: float = 1e-4,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> LinkCheck:
    """Admission test for adding ``candidate`` to ``kappa``.

    ``mu_star`` must be the converged allocation under ``kappa`` at scaling
    ``alpha`` for ``target_set``. The load comparison allows a slack of
    ``epsilon * load_limit`` to absorb fixed-point noise.
    """
    i, j = candidate.rrh, candidate.ue
    k_old = kappa.kappa
    if k_old[i, j]:
        raise ValueError(f"link ({i}, {j}) already present")
    k_new = k_old.copy()
    k_new[i, j] = True
    scale = _demand_scale(instance.num_ues, target_set, alpha)
    slack = epsilon * instance.load_limit
    served_new = k_new[i]

    mu_prev = np.asarray(mu_star, dtype=float)
    for k in range(1, max_iters + 1):
        rho = k_old @ mu_prev
        try:
            mu = allocation_from_load(instance, k_new, rho) * scale
        except ZeroCapacityError as exc:
            return LinkCheck(False, None, k, f"zero capacity: {exc}")
        if not np.all(np.isfinite(mu)):
            return LinkCheck(False, None, k, "non-finite iterate")
        if mu[served_new].sum() <= rho[i] + slack:
            return LinkCheck(True, k, k, "load of candidate RRH did not increase")
        if np.max(np.abs(mu - mu_prev)) < epsilon:
            return LinkCheck(False, None, k, "sequences converged without load improvement")
        mu_prev = mu
    return LinkCheck(False, None, max_iters, "non-convergent: iteration budget exhausted")


def candidate_links(instance: NetworkInstance, kappa: Association, ordering: str = "row-major"):
    if ordering not in ORDERINGS:
        raise ValueError(f"ordering must be one of {ORDERINGS}")
    ii, jj = np.nonzero(~kappa.kappa)  # row-major order
    if ordering == "by-gain-descending":
        gain = instance.rx_power[ii, jj]
        order = np.argsort(-gain, kind="stable")
        ii, jj = ii[order], jj[order]
    return [LinkCandidate(int(i), int(j)) for i, j in zip(ii, jj)]


def joint_optimize(
    instance: NetworkInstance,
    kappa0: Association,
    problem: ScalingProblem,
    max_passes: int = 100,
    max_iters: int = DEFAULT_MAX_ITERS,
    ordering: str = "row-major",
    baseline: MaxAlphaResult | None = None,
) -> JointResult:
    """Alternate CoMP link admission and max-alpha re-solves until a pass adds nothing.

    ``baseline`` may carry an already computed solve under ``kappa0`` for the
    same problem; it is reused as the starting point.
    """
    kappa0.require_served()
    eps = problem.epsilon
    if baseline is None:
        baseline = solve_max_alpha(instance, kappa0, problem, max_iters)
    kappa = kappa0
    alpha, mu = baseline.alpha_star, baseline.mu_star
    inner = baseline.iterations
    result = JointResult(kappa, mu, alpha, 0, baseline=baseline, alpha_history=[alpha])

    for pass_no in range(1, max_passes + 1):
        result.passes = pass_no
        added = 0
        for cand in candidate_links(instance, kappa, ordering):
            if kappa.kappa[cand.rrh, cand.ue]:
                continue
            chk = check_add_link(instance, kappa, cand, mu, alpha, problem.target_set, eps, max_iters)
            inner += chk.iterations
            if not chk.accepted:
                continue
            new_kappa = kappa.with_link(cand.rrh, cand.ue)
            warm = ScalingProblem(problem.target_set, eps, alpha0=alpha, mu0=mu)
            sol = solve_max_alpha(instance, new_kappa, warm, max_iters)
            inner += sol.iterations
            kappa, alpha, mu = new_kappa, sol.alpha_star, sol.mu_star
            result.accepted_links.append(AcceptedLink(cand.rrh, cand.ue, chk.witness_k, alpha))
            log.debug("pass %d: added link (%d, %d), alpha=%.8g", pass_no, cand.rrh, cand.ue, alpha)
            result.alpha_history.append(alpha)
            added += 1
        result.pass_alphas.append(alpha)
        if added == 0:
            break

    result.kappa_star, result.mu_star, result.alpha_star = kappa, mu, alpha
    result.inner_iterations = inner
    return result


def complexity_budget(m: int, n: int, epsilon: float, constant: float = 50.0) -> float:
    """Iteration envelope ``C * m^2 n^2 log(1/epsilon)``."""
    return constant * m * m * n * n * math.log(1.0 / epsilon)
