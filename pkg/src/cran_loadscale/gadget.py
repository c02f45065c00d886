"""Network instances encoding a 3-SAT formula.

For ``N1`` variables and ``N2`` clauses the instance has ``N1 + N2 + 1`` UEs
and ``2 N1 + N2 + 1`` RRHs. Each variable UE picks one of two RRHs (one per
literal); a clause UE becomes overloaded exactly when the RRHs of all three
of its literals are active, and the hub UE ``v0`` becomes overloaded when any
variable UE is served by both of its RRHs. All rates are normalized
(``M * B = 1``).

UE order: ``v0, v1..vN1, clause UEs``. RRH order: ``a0, a1, a1', ..., aN1,
aN1', clause RRHs``, where ``ai`` is the RRH of literal ``bi`` and ``ai'`` the
RRH of its negation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .network import Association, NetworkInstance

VARIABLE_DEMAND = 2.0
UNIT_DEMAND = 1.0
LITERAL_POWER = 3.0
CROSS_GAIN = 1.0 / 3.0


@dataclass(frozen=True)
class SatFormula:
    """CNF formula with exactly three distinct literals per clause.

    Literals are non-zero signed 1-based variable indices (``-3`` is the
    negation of variable 3).
    """

    num_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        clauses = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3 or len(set(c)) != 3:
                raise ValueError(f"clause {c} must have exactly three distinct literals")
            if any(x == 0 or abs(x) > self.num_vars for x in c):
                raise ValueError(f"clause {c} references a variable outside 1..{self.num_vars}")
        if self.num_vars < 1 or not clauses:
            raise ValueError("formula needs at least one variable and one clause")
        object.__setattr__(self, "clauses", clauses)

    @classmethod
    def parse(cls, text: str, num_vars: int | None = None) -> "SatFormula":
        """Parse DIMACS-like text: one clause per line, optional trailing 0.

        ``c`` comment lines are skipped and a ``p cnf V C`` header sets the
        variable count. Parentheses are tolerated, so ``(1 2 -3)`` parses.
        """
        clauses = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("c") or line.startswith("%"):
                continue
            if line.startswith("p"):
                parts = line.split()
                num_vars = int(parts[2])
                continue
            lits = [int(t) for t in re.findall(r"-?\d+", line)]
            if lits and lits[-1] == 0:
                lits = lits[:-1]
            if lits:
                clauses.append(tuple(lits))
        if num_vars is None:
            num_vars = max(abs(x) for c in clauses for x in c) if clauses else 0
        return cls(num_vars, tuple(clauses))

    @classmethod
    def read(cls, path) -> "SatFormula":
        return cls.parse(Path(path).read_text())

    def satisfied_by(self, assignment: Mapping[int, bool]) -> bool:
        return all(any(assignment[abs(x)] == (x > 0) for x in c) for c in self.clauses)


@dataclass
class Gadget:
    formula: SatFormula
    instance: NetworkInstance
    candidates: list[list[int]]  # per UE, the RRHs allowed to serve it
    rrh_labels: list[str]
    ue_labels: list[str]

    @property
    def hub_rrh(self) -> int:
        return 0

    def literal_rrh(self, literal: int) -> int:
        """RRH index of literal ``x`` (positive for ``b``, negative for its negation)."""
        v = abs(literal)
        return 2 * v - 1 if literal > 0 else 2 * v

    def clause_rrh(self, c: int) -> int:
        return 1 + 2 * self.formula.num_vars + c

    def clause_ue(self, c: int) -> int:
        return 1 + self.formula.num_vars + c

    def association(self, serving: Mapping[int, Iterable[int]]) -> Association:
        """Fixed links plus, per variable ``v``, the RRHs in ``serving[v]`` for UE ``v``.

        Entries of ``serving[v]`` are literals: ``v`` selects ``a_v``, ``-v``
        selects ``a_v'``.
        """
        n1 = self.formula.num_vars
        kappa = np.zeros(self.instance.shape, dtype=bool)
        kappa[0, 0] = True
        for c in range(len(self.formula.clauses)):
            kappa[self.clause_rrh(c), self.clause_ue(c)] = True
        for v in range(1, n1 + 1):
            for lit in serving.get(v, ()):
                if abs(lit) != v:
                    raise ValueError(f"UE v{v} can only use literals of variable {v}")
                kappa[self.literal_rrh(lit), v] = True
        return Association(kappa)

    def association_for_assignment(self, assignment: Mapping[int, bool]) -> Association:
        """Variable ``b_v`` true -> ``v`` served by ``a_v'``, leaving ``a_v`` idle."""
        return self.association({v: (-v if assignment[v] else v,)
                                 for v in range(1, self.formula.num_vars + 1)})

    def to_dict(self) -> dict:
        return {
            "num_vars": self.formula.num_vars,
            "clauses": [list(c) for c in self.formula.clauses],
            "candidates": self.candidates,
            "rrh_labels": self.rrh_labels,
            "ue_labels": self.ue_labels,
        }


def gadget_from_sat(formula: SatFormula) -> Gadget:
    n1 = formula.num_vars
    n2 = len(formula.clauses)
    m, n = 2 * n1 + n2 + 1, n1 + n2 + 1

    power = np.full(m, LITERAL_POWER)
    power[0] = 3.0 * n1 + 1.0
    gain2 = np.zeros((m, n))
    gain2[0, 0] = 1.0
    for v in range(1, n1 + 1):
        for rrh in (2 * v - 1, 2 * v):
            gain2[rrh, 0] = 1.0
            gain2[rrh, v] = 1.0
    for c, clause in enumerate(formula.clauses):
        rrh, ue = 1 + 2 * n1 + c, 1 + n1 + c
        gain2[rrh, ue] = 1.0
        for lit in clause:
            v = abs(lit)
            gain2[2 * v - 1 if lit > 0 else 2 * v, ue] = CROSS_GAIN

    demand = np.full(n, UNIT_DEMAND)
    demand[1:n1 + 1] = VARIABLE_DEMAND

    instance = NetworkInstance(
        power=power,
        amp_gain=np.sqrt(gain2),
        noise_power=1.0,
        num_rbs=1,
        rb_bandwidth=1.0,
        demand=demand,
        load_limit=1.0,
    )
    candidates = [[0]] + [[2 * v - 1, 2 * v] for v in range(1, n1 + 1)] \
        + [[1 + 2 * n1 + c] for c in range(n2)]
    rrh_labels = ["a0"] + [lab for v in range(1, n1 + 1) for lab in (f"a{v}", f"a{v}'")] \
        + [f"a{n1 + c + 1}" for c in range(n2)]
    ue_labels = [f"v{j}" for j in range(n)]
    return Gadget(formula, instance, candidates, rrh_labels, ue_labels)
