"""Link-level Monte-Carlo of the two-step IAC decoder.

Receivers 1..k_iac decode one after another, each subtracting the users
already decoded upstream (their packets arrive over an ideal backhaul).
Receivers k_iac+1..K then decode in parallel after subtracting users
1..k_iac. Every receiver projects onto its zero-forcing filter ``U_k`` and
equalizes with ``(U_k^H H_kk V_k)^{-1}``.

Under GENIE cancellation the per-stream SINR is evaluated from the exact
linear model, so the reported rates carry no Monte-Carlo noise. The sampled
decode path still runs every trial and is used for the residual checks and
for the DETECTED mode.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidConfig, MissingPoint, SingularEffectiveChannel
from .system_model import aligned_interferers, compute_k_iac, compute_overhead

#: smallest accepted sigma_min / sigma_max of an effective desired channel
EQUALIZER_COND_FLOOR = 1e-10


class SymbolModel(str, Enum):
    GAUSSIAN = "GAUSSIAN"
    QPSK = "QPSK"


class Cancellation(str, Enum):
    GENIE = "GENIE"
    DETECTED = "DETECTED"


@dataclass(frozen=True)
class SimParams:
    """Monte-Carlo settings.

    Parameters
    ----------
    snr_db_points : tuple of float
        Per-antenna SNR values; noise variance is ``10**(-snr/10)`` with
        unit power per stream.
    trials : int
        Trials averaged at each SNR point.
    symbols : SymbolModel
    cancellation : Cancellation
        DETECTED subtracts hard QPSK decisions and therefore needs QPSK.
    seed : int
    block_length : int
        Symbol vectors drawn per trial on the sampled decode path.
    infinite_snr : bool
        Drop the noise entirely (the zero-noise limit).
    """

    snr_db_points: tuple = (40.0, 60.0)
    trials: int = 50
    symbols: SymbolModel = SymbolModel.GAUSSIAN
    cancellation: Cancellation = Cancellation.GENIE
    seed: int = 0
    block_length: int = 16
    infinite_snr: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snr_db_points", tuple(float(s) for s in self.snr_db_points))
        object.__setattr__(self, "symbols", SymbolModel(self.symbols))
        object.__setattr__(self, "cancellation", Cancellation(self.cancellation))
        if self.trials < 1:
            raise InvalidConfig(f"trials must be >= 1, got {self.trials}")
        if self.block_length < 1:
            raise InvalidConfig(f"block_length must be >= 1, got {self.block_length}")
        if not self.snr_db_points:
            raise InvalidConfig("need at least one SNR point")
        if self.cancellation is Cancellation.DETECTED and self.symbols is not SymbolModel.QPSK:
            raise InvalidConfig("DETECTED cancellation requires QPSK symbols")

    def noise_variance(self, snr_db):
        if self.infinite_snr:
            return 0.0
        return 10.0 ** (-snr_db / 10.0)


@dataclass
class TrialResult:
    """One trial at one SNR point.

    ``sinr[k-1]`` holds the d_k per-stream SINRs of receiver k (linear).
    ``residual_ratio[k-1]`` is, per stream, the sampled post-equalizer
    error power (interference plus any cancellation leftover, noise
    excluded) relative to the desired symbol power.
    """

    snr_db: float
    sinr: list
    per_user_rate: list
    sum_rate: float
    packets_shared: int
    residual_ratio: list
    symbol_errors: int = 0


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    total_dof: int = None

    def row(self, snr_db):
        for r in self.rows:
            if math.isclose(r["snr_db"], snr_db, abs_tol=1e-9):
                return r
        raise MissingPoint(f"no sweep row at {snr_db} dB")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snr_db", "sum_rate_bits", "slope_ref"])
        for r in self.rows:
            w.writerow([repr(r["snr_db"]), repr(r["mean_sum_rate_bits"]),
                        "" if self.total_dof is None else self.total_dof])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"total_dof": self.total_dof, "rows": self.rows}, indent=2)


def _symbols(rng, model, shape):
    if model is SymbolModel.QPSK:
        bits = rng.integers(0, 2, size=(2,) + shape)
        return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _qpsk_decide(z):
    re = np.where(z.real >= 0, 1.0, -1.0)
    im = np.where(z.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) / np.sqrt(2)


def equalizer(channels, precoders, receivers, k):
    """``W_k = (U_k^H H_kk V_k)^{-1}``; raises on a near-singular block."""
    G = receivers[k].conj().T @ channels(k, k) @ precoders[k]
    s = np.linalg.svd(G, compute_uv=False)
    if s[-1] <= EQUALIZER_COND_FLOOR * s[0]:
        raise SingularEffectiveChannel(
            f"receiver {k}: effective channel sigma ratio {s[-1] / s[0]:.3e}")
    return np.linalg.inv(G)


def genie_sinr(channels, precoders, receivers, config, k, noise_var, k_iac=None):
    """Per-stream SINR of receiver ``k`` after perfect cancellation.

    Each stream has unit power and unit gain after equalization, so the
    SINR is ``1 / (interference + noise)`` read off the rows of the
    equalized filter.
    """
    W = equalizer(channels, precoders, receivers, k)
    WU = W @ receivers[k].conj().T
    leak = np.zeros(config.dof(k))
    for j in aligned_interferers(config, k, k_iac):
        leak += np.sum(np.abs(WU @ channels(k, j) @ precoders[j]) ** 2, axis=1)
    noise = noise_var * np.sum(np.abs(WU) ** 2, axis=1)
    denom = leak + noise
    with np.errstate(divide="ignore"):
        return np.where(denom > 0, 1.0 / denom, np.inf)


def simulate_trial(channels, precoders, receivers, config, params, trial_seed, snr_db=None):
    """Draw symbols and noise for one trial and run the two-step decoder.

    Parameters
    ----------
    snr_db : float, optional
        Defaults to the first point of ``params.snr_db_points``.

    Returns
    -------
    TrialResult
    """
    snr_db = params.snr_db_points[0] if snr_db is None else float(snr_db)
    noise_var = params.noise_variance(snr_db)
    k_iac = compute_k_iac(config)
    K, M, B = config.K, config.M, params.block_length
    rng = np.random.default_rng(trial_seed)

    x = [_symbols(rng, params.symbols, (config.dof(j), B)) for j in range(1, K + 1)]
    n = [(rng.standard_normal((M, B)) + 1j * rng.standard_normal((M, B)))
         * np.sqrt(noise_var / 2) for _ in range(K)]
    y = []
    for k in range(1, K + 1):
        yk = n[k - 1].copy()
        for j in range(1, K + 1):
            yk += channels(k, j) @ precoders[j] @ x[j - 1]
        y.append(yk)

    genie = params.cancellation is Cancellation.GENIE
    decided = {}
    sinr = [None] * K
    residual = [None] * K
    errors = 0

    def decode(k, cancel):
        nonlocal errors
        yk = y[k - 1].copy()
        for j in cancel:
            xj = x[j - 1] if genie else decided[j]
            yk -= channels(k, j) @ precoders[j] @ xj
        W = equalizer(channels, precoders, receivers, k)
        WU = W @ receivers[k].conj().T
        z = WU @ yk
        # noise-free copy of the same chain isolates interference leftovers
        z_clean = z - WU @ n[k - 1]
        err = np.mean(np.abs(z_clean - x[k - 1]) ** 2, axis=1)
        residual[k - 1] = err / np.mean(np.abs(x[k - 1]) ** 2, axis=1)
        if genie:
            sinr[k - 1] = genie_sinr(channels, precoders, receivers, config, k, noise_var, k_iac)
        else:
            mse = np.mean(np.abs(z - x[k - 1]) ** 2, axis=1)
            with np.errstate(divide="ignore"):
                sinr[k - 1] = np.where(mse > 0, 1.0 / mse, np.inf)
        if params.symbols is SymbolModel.QPSK:
            decided[k] = _qpsk_decide(z)
            errors += int(np.count_nonzero(decided[k] != x[k - 1]))

    # step 1: sequential decoding with backhaul cancellation
    for k in range(1, k_iac + 1):
        decode(k, range(1, k))
    # step 2: everyone else cancels users 1..k_iac and decodes at once
    for k in range(k_iac + 1, K + 1):
        decode(k, range(1, k_iac + 1))

    per_user = [float(np.sum(np.log2(1.0 + s))) for s in sinr]
    return TrialResult(
        snr_db=snr_db,
        sinr=[s.tolist() for s in sinr],
        per_user_rate=per_user,
        sum_rate=float(sum(per_user)),
        packets_shared=compute_overhead(config),
        residual_ratio=[r.tolist() for r in residual],
        symbol_errors=errors,
    )


def trial_seed(seed, snr_index, trial_index):
    """Independent per-trial seed derived from the sweep coordinates."""
    return np.random.SeedSequence([seed, snr_index, trial_index])


def snr_sweep(channels, design, config, params):
    """Average :func:`simulate_trial` over ``params.trials`` at every SNR.

    ``design`` is anything with ``precoders`` and ``receivers`` attributes.
    Rows come out sorted by SNR and are bit-identical for identical inputs.
    """
    precoders, receivers = design.precoders, design.receivers
    overhead = compute_overhead(config)
    rows = []
    for i, snr in sorted(enumerate(params.snr_db_points), key=lambda p: p[1]):
        sum_rate = 0.0
        per_user = np.zeros(config.K)
        sinr_lin = np.zeros(config.total_dof)
        for t in range(params.trials):
            res = simulate_trial(channels, precoders, receivers, config, params,
                                 trial_seed(params.seed, i, t), snr)
            if res.packets_shared != overhead:
                raise AssertionError("packet count drifted between trials")
            sum_rate += res.sum_rate
            per_user += res.per_user_rate
            sinr_lin += np.concatenate(res.sinr)
        with np.errstate(divide="ignore"):
            sinr_db = 10 * np.log10(sinr_lin / params.trials)
        rows.append({
            "snr_db": snr,
            "mean_sum_rate_bits": sum_rate / params.trials,
            "per_user_rate": (per_user / params.trials).tolist(),
            "per_stream_sinr_db": sinr_db.tolist(),
            "packets_shared": overhead,
        })
    return SweepResult(rows, config.total_dof)


def estimate_dof_slope(sweep, lo_db, hi_db):
    """Rate gained per doubling of SNR between two sweep points."""
    if not hi_db > lo_db:
        raise ValueError(f"need hi > lo, got lo={lo_db}, hi={hi_db}")
    r_lo = sweep.row(lo_db)["mean_sum_rate_bits"]
    r_hi = sweep.row(hi_db)["mean_sum_rate_bits"]
    return (r_hi - r_lo) / math.log2(10 ** ((hi_db - lo_db) / 10))
