"""Numerical certification of a finished design.

Checks, per instance: every alignment equation holds as a span equality,
every receiver nulls its uncancelled interference, the effective desired
channel has full rank, and signal plus interference fit in M dimensions
without overlapping.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ZeroVector
from .solver import interference_matrix
from .system_model import SystemConfig, compute_k_iac, compute_overhead


@dataclass(frozen=True)
class Tolerances:
    alignment: float = 1e-8
    zero_forcing: float = 1e-8
    sigma_min: float = 1e-6
    rank: float = 1e-8

    @classmethod
    def from_env(cls, environ):
        """Override defaults from ``IAC_TOL_<FIELD>`` environment variables."""
        kw = {}
        for name in ("alignment", "zero_forcing", "sigma_min", "rank"):
            key = f"IAC_TOL_{name.upper()}"
            if key in environ:
                kw[name] = float(environ[key])
        return cls(**kw)


@dataclass
class ReceiverCheck:
    k: int
    max_zf_residual: float
    max_raw_residual: float
    sigma_min_effective: float
    interference_rank: int
    signal_rank: int
    independent: bool


@dataclass
class DesignReport:
    k_iac: int
    overhead_packets: int
    per_equation_residuals: list
    per_receiver: list
    total_dof_claimed: int
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self):
        doc = asdict(self)
        doc["pass"] = doc.pop("passed")
        return doc

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        doc["passed"] = doc.pop("pass")
        doc["per_receiver"] = [ReceiverCheck(**r) for r in doc["per_receiver"]]
        return cls(**doc)


def span_residual(a, b):
    """Sine of the angle between the complex lines spanned by ``a`` and ``b``.

    Equals ``sqrt(1 - |a^H b|^2 / (|a|^2 |b|^2))`` but is evaluated through
    the Lagrange identity on the unit vectors, sum_{i<j} |a_i b_j - a_j b_i|^2,
    which keeps full relative accuracy near zero and is exactly symmetric.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("span residual of a zero vector")
    ua, ub = a / na, b / nb
    # fixed argument order makes the result bit-identical under swapping
    if ua.tobytes() > ub.tobytes():
        ua, ub = ub, ua
    W = np.outer(ua, ub)
    iu = np.triu_indices(len(ua), 1)
    s2 = float(np.sum(np.abs((W - W.T)[iu]) ** 2))
    return float(min(1.0, np.sqrt(s2)))


def numerical_rank(A, tol=1e-8):
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _config_from(channels, precoders):
    return SystemConfig(channels.K, channels.M, tuple(v.shape[1] for v in precoders.V))


def check_dimension_condition(channels, precoders, k, tol=1e-8):
    """Signal and uncancelled-interference ranks at receiver ``k``.

    ``ok`` requires a full-rank signal block, total dimension within M and
    the two blocks being linearly independent.
    """
    config = _config_from(channels, precoders)
    S = channels(k, k) @ precoders[k]
    I = interference_matrix(channels, precoders, config, k)
    rs = numerical_rank(S, tol)
    ri = numerical_rank(I, tol)
    rj = numerical_rank(np.hstack([S, I]), tol)
    ok = rs == config.dof(k) and rs + ri <= config.M and rj == rs + ri
    return {"signal_rank": rs, "interference_rank": ri, "ok": bool(ok)}


def verify_design(channels, precoders, receivers, equations, config, tolerances=None):
    """Evaluate a complete design and report, never raise, on failures."""
    tol = tolerances or Tolerances()
    k_iac = compute_k_iac(config)
    failures = []

    eq_res = []
    for q in equations.equations:
        a = channels(q.receiver, q.reference.j) @ precoders.column(q.reference)
        b = channels(q.receiver, q.aligned.j) @ precoders.column(q.aligned)
        r = span_residual(a, b)
        eq_res.append({"equation": q.to_dict(), "sin_angle": r})
        if not r < tol.alignment:
            failures.append(f"equation {q.to_dict()} residual {r:.3e}")

    per_rx = []
    for k in range(1, config.K + 1):
        U = receivers[k]
        I = interference_matrix(channels, precoders, config, k, k_iac)
        zf = 0.0
        if I.shape[1]:
            zf = float(np.max(np.linalg.norm(U.conj().T @ I, axis=0) / np.linalg.norm(I, axis=0)))
        raw = 0.0
        for j in range(1, config.K + 1):
            if j == k:
                continue
            X = channels(k, j) @ precoders[j]
            raw = max(raw, float(np.max(np.linalg.norm(U.conj().T @ X, axis=0)
                                        / np.linalg.norm(X, axis=0))))
        G = U.conj().T @ channels(k, k) @ precoders[k]
        smin = float(np.linalg.svd(G, compute_uv=False)[-1])
        dim = check_dimension_condition(channels, precoders, k, tol.rank)
        per_rx.append(ReceiverCheck(k, zf, raw, smin, dim["interference_rank"],
                                    dim["signal_rank"], dim["ok"]))
        if not zf < tol.zero_forcing:
            failures.append(f"receiver {k}: zero-forcing residual {zf:.3e}")
        if not smin > tol.sigma_min:
            failures.append(f"receiver {k}: effective sigma_min {smin:.3e}")
        if not dim["ok"]:
            failures.append(f"receiver {k}: dimension check failed {dim}")

    return DesignReport(
        k_iac=k_iac,
        overhead_packets=compute_overhead(config),
        per_equation_residuals=eq_res,
        per_receiver=per_rx,
        total_dof_claimed=config.total_dof,
        passed=not failures,
        failures=failures,
    )
