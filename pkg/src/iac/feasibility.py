"""Existence test for closed-form IAC transceivers and the optimal 2M tuples."""

import itertools
from dataclasses import dataclass, field

from .system_model import SystemConfig, compute_k_iac


@dataclass(frozen=True)
class Inequality:
    which: str  # "EQ9(k=..)", "EQ10" or "EQ11"
    lhs: int
    rhs: int

    @property
    def holds(self):
        return self.lhs <= self.rhs

    def to_dict(self):
        return {"which": self.which, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    k_iac: int
    failed_inequalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "k_iac": self.k_iac,
            "failed_inequalities": [q.to_dict() for q in self.failed_inequalities],
            "inequalities": [q.to_dict() for q in self.inequalities],
        }


def feasibility_inequalities(config):
    """Evaluate every inequality of the existence theorem for ``config``.

    With ``k_iac = 0`` only the dimension bound on the undecoded tail is
    checked; the per-receiver and counting bounds are vacuous.
    """
    d = (0,) + config.d  # 1-based view
    K, M = config.K, config.M
    k_iac = compute_k_iac(config)
    out = []
    for k in range(1, k_iac + 1):
        out.append(Inequality(f"EQ9(k={k})", d[k] + max(d[k + 1:K + 1]), M))
    out.append(Inequality("EQ10", sum(d[k_iac + 1:K + 1]), M))
    if k_iac >= 1:
        lhs = (d[1]
               + sum((k - 1) * d[k] for k in range(1, k_iac + 1))
               + sum((k_iac - 1) * d[k] for k in range(k_iac + 1, K + 1)))
        out.append(Inequality("EQ11", lhs, k_iac * M))
    return k_iac, out


def check_feasibility(config):
    k_iac, ineqs = feasibility_inequalities(config)
    failed = [q for q in ineqs if not q.holds]
    return FeasibilityVerdict(not failed, k_iac, failed, ineqs)


def _compositions(total, parts, cap):
    """Tuples of ``parts`` integers in [1, cap] summing to ``total`` (lex order)."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    lo = max(1, total - cap * (parts - 1))
    hi = min(cap, total - (parts - 1))
    for first in range(lo, hi + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def enumerate_optimal_tuples(M, K):
    """All DoF tuples reaching 2M with two cancellation stages, lexicographic.

    Users 3..K share M streams with at most floor(M/2) each; users 1 and 2
    split the other M, each leaving room for the largest later user.
    """
    if K < 4 or M < 2:
        return []
    cap = M // 2
    out = []
    for d1 in range(1, M):
        d2 = M - d1
        for tail in _compositions(M, K - 2, cap):
            t = max(tail)
            if d1 <= M - t and d2 <= M - t:
                out.append((d1, d2) + tail)
    return out


def is_optimal_tuple(config):
    d, M = config.d, config.M
    if config.K < 4 or sum(d) != 2 * M:
        return False
    tail = d[2:]
    t = max(tail)
    return (d[0] + d[1] == M and sum(tail) == M and t <= M // 2
            and d[0] <= M - t and d[1] <= M - t)


def all_tuples(M, K):
    """Every tuple in [1, M]^K, as configs (for exhaustive small-case sweeps)."""
    for d in itertools.product(range(1, M + 1), repeat=K):
        yield SystemConfig(K, M, d)
