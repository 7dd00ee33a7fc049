"""Problem configuration, channel generation and the closed-form scalar
quantities of an IAC system (decoding threshold ``k_iac`` and backhaul
overhead).

Users and streams are 1-based everywhere a value leaves this package
(JSON, DOT, CLI output). Internally, ``StreamId(j, l)`` also stores the
1-based pair so that log output can be read directly against hand
calculations.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidConfig, RedrawBudgetExhausted

#: smallest accepted sigma_min / sigma_max for any channel matrix
COND_FLOOR = 1e-10
_MAX_REDRAWS = 100


class StreamId(NamedTuple):
    """A precoded stream: transmitter ``j`` and stream index ``l`` (1-based)."""

    j: int
    l: int

    def __str__(self):
        return f"v_{self.j}_{self.l}"


@dataclass(frozen=True)
class SystemConfig:
    """K-user MIMO interference channel with M antennas per node.

    Parameters
    ----------
    K : int
        Number of transmitter/receiver pairs (>= 2).
    M : int
        Antennas at every transmitter and receiver.
    d : tuple of int
        Streams per user, ``1 <= d[j] <= M``.
    """

    K: int
    M: int
    d: tuple

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if self.K < 2:
            raise InvalidConfig(f"need K >= 2, got K={self.K}")
        if self.M < 1:
            raise InvalidConfig(f"need M >= 1, got M={self.M}")
        if len(self.d) != self.K:
            raise InvalidConfig(f"d has {len(self.d)} entries, expected K={self.K}")
        for j, dj in enumerate(self.d, start=1):
            if not 1 <= dj <= self.M:
                raise InvalidConfig(f"d_{j}={dj} outside [1, M={self.M}]")

    @classmethod
    def from_tuple(cls, M, d):
        return cls(K=len(d), M=M, d=tuple(d))

    @property
    def total_dof(self):
        return sum(self.d)

    def dof(self, j):
        """Streams of user ``j`` (1-based)."""
        return self.d[j - 1]

    def streams(self, j):
        return [StreamId(j, l) for l in range(1, self.d[j - 1] + 1)]

    def streams_of_users(self, first, last=None):
        """All streams of users ``first..last`` inclusive, in (j, l) order."""
        last = self.K if last is None else last
        return [s for j in range(first, last + 1) for s in self.streams(j)]

    def to_dict(self):
        return {"K": self.K, "M": self.M, "d": list(self.d)}

    @classmethod
    def from_dict(cls, doc):
        try:
            d = [int(x) for x in doc["d"]]
            M = int(doc["M"])
            K = int(doc.get("K", len(d)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed config document: {exc!r}") from exc
        return cls(K=K, M=M, d=tuple(d))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Channel matrices ``H[k-1, j-1]`` from transmitter j to receiver k.

    ``H`` has shape (K, K, M, M) and is made read-only on construction.
    """

    H: np.ndarray
    seed: int = None

    def __post_init__(self):
        H = np.array(self.H, dtype=np.complex128)
        if H.ndim != 4 or H.shape[0] != H.shape[1] or H.shape[2] != H.shape[3]:
            raise InvalidConfig(f"channel array must be (K, K, M, M), got {H.shape}")
        if not np.all(np.isfinite(H)):
            raise InvalidConfig("channel array has non-finite entries")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[2]

    def __call__(self, k, j):
        """Channel from transmitter ``j`` to receiver ``k`` (both 1-based)."""
        return self.H[k - 1, j - 1]

    def scaled(self, k, j, factor):
        """Copy with H_kj multiplied by ``factor`` (used by invariance checks)."""
        H = self.H.copy()
        H[k - 1, j - 1] *= factor
        return ChannelSet(H, self.seed)

    def to_dict(self):
        flat = self.H.reshape(-1)
        return {
            "seed": self.seed,
            "K": self.K,
            "M": self.M,
            "layout": "row-major [k][j][row][col]",
            "data": [[float(z.real), float(z.imag)] for z in flat],
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            K, M = int(doc["K"]), int(doc["M"])
            pairs = np.asarray(doc["data"], dtype=float)
            H = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(K, K, M, M)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidConfig(f"malformed channel document: {exc!r}") from exc
        return cls(H, doc.get("seed"))


def well_conditioned(A, floor=COND_FLOOR):
    s = np.linalg.svd(A, compute_uv=False)
    return s[-1] > floor * s[0]


def generate_channels(config, seed):
    """Draw i.i.d. CN(0, 1) channel matrices for every (receiver, transmitter) pair.

    Each matrix is re-drawn (up to a fixed budget) if its conditioning falls
    below ``COND_FLOOR``; with continuous entries this essentially never
    happens.
    """
    rng = np.random.default_rng(seed)
    K, M = config.K, config.M
    H = np.empty((K, K, M, M), dtype=np.complex128)
    for k in range(K):
        for j in range(K):
            for _ in range(_MAX_REDRAWS):
                A = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / np.sqrt(2)
                if well_conditioned(A):
                    H[k, j] = A
                    break
            else:
                raise RedrawBudgetExhausted(f"H_{k + 1}{j + 1}: no invertible draw in {_MAX_REDRAWS} tries")
    return ChannelSet(H, seed)


def compute_k_iac(config):
    """Index of the last receiver that needs alignment.

    Returns ``k* - 1`` where ``k*`` is the first receiver whose remaining
    streams (its own plus all later users') fit into M dimensions.
    """
    tail = 0
    k_star = config.K + 1
    # walk backwards accumulating sum_{j=k}^{K} d_j
    for k in range(config.K, 0, -1):
        tail += config.dof(k)
        if tail > config.M:
            break
        k_star = k
    return k_star - 1


def compute_overhead(config):
    """Backhaul packets forwarded: sum over j <= k_iac of (K - j) d_j."""
    k_iac = compute_k_iac(config)
    return sum((config.K - j) * config.dof(j) for j in range(1, k_iac + 1))


def cancelled_users(config, k, k_iac=None):
    """Users whose signals receiver ``k`` subtracts using backhaul packets."""
    k_iac = compute_k_iac(config) if k_iac is None else k_iac
    return list(range(1, min(k - 1, k_iac) + 1))


def aligned_interferers(config, k, k_iac=None):
    """Users left as interference at receiver ``k`` after cancellation.

    Receivers up to ``k_iac`` decode one at a time and see every later user;
    the remaining receivers decode together after only users 1..k_iac have
    been cancelled.
    """
    k_iac = compute_k_iac(config) if k_iac is None else k_iac
    if k <= k_iac:
        return list(range(k + 1, config.K + 1))
    return [j for j in range(k_iac + 1, config.K + 1) if j != k]
