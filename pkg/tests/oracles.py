"""Reference implementations written independently of the package.

Nothing here imports from ``iac``; each oracle recomputes its quantity from
first principles so that tests compare two separate derivations.
"""

import cmath
import itertools
import math
from fractions import Fraction

import numpy as np


def inv2_adjugate(A):
    """Inverse of a 2x2 matrix via the adjugate formula."""
    a, b = A[0, 0], A[0, 1]
    c, d = A[1, 0], A[1, 1]
    det = a * d - b * c
    return np.array([[d, -b], [-c, a]]) / det


def eig2_closed_form(F):
    """Eigenpairs of a 2x2 complex matrix from the characteristic quadratic.

    Returns a list of (lambda, unit vector) sorted by |lambda| descending.
    """
    a, b = F[0, 0], F[0, 1]
    c, d = F[1, 0], F[1, 1]
    tr, det = a + d, a * d - b * c
    disc = cmath.sqrt(tr * tr - 4 * det)
    out = []
    for lam in ((tr + disc) / 2, (tr - disc) / 2):
        # (F - lam I) v = 0: take the row with the larger entries for stability
        if abs(b) + abs(a - lam) >= abs(c) + abs(d - lam):
            v = np.array([b, lam - a])
        else:
            v = np.array([lam - d, c])
        out.append((lam, v / np.linalg.norm(v)))
    return sorted(out, key=lambda p: -abs(p[0]))


def k_iac_oracle(M, d):
    K = len(d)
    for k in range(1, K + 1):
        if sum(d[k - 1:]) <= M:
            return k - 1
    return K


def feasible_oracle(M, d):
    """Brute evaluation of the three inequality families."""
    K = len(d)
    k0 = k_iac_oracle(M, d)
    D = dict(enumerate(d, start=1))
    for k in range(1, k0 + 1):
        if D[k] + max(D[j] for j in range(k + 1, K + 1)) > M:
            return False
    if sum(D[j] for j in range(k0 + 1, K + 1)) > M:
        return False
    if k0 >= 1:
        lhs = D[1]
        for k in range(1, K + 1):
            lhs += (k - 1) * D[k] if k <= k0 else (k0 - 1) * D[k]
        if lhs > k0 * M:
            return False
    return True


def overhead_oracle(M, d):
    K = len(d)
    return sum((K - j) * d[j - 1] for j in range(1, k_iac_oracle(M, d) + 1))


def optimal_tuples_oracle(M, K):
    """Filter all of [1, M]^K by the 2M-tuple constraints."""
    if K < 4 or M < 2:
        return []
    out = []
    for d in itertools.product(range(1, M + 1), repeat=K):
        t = max(d[2:])
        if (d[0] + d[1] == M and sum(d[2:]) == M and 2 * t <= M
                and d[0] <= M - t and d[1] <= M - t):
            out.append(d)
    return out


def rank_gauss(rows):
    """Exact rank of an integer matrix by fraction-valued row reduction."""
    A = [[Fraction(x) for x in r] for r in rows]
    if not A:
        return 0
    n_rows, n_cols = len(A), len(A[0])
    rank = 0
    for c in range(n_cols):
        piv = next((r for r in range(rank, n_rows) if A[r][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for r in range(n_rows):
            if r != rank and A[r][c] != 0:
                f = A[r][c] / A[rank][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[rank])]
        rank += 1
    return rank


def fold_transfers(transfers):
    """Left fold of a list of matrices: T_n ... T_2 T_1."""
    F = np.eye(transfers[0].shape[0], dtype=complex)
    for T in transfers:
        F = T @ F
    return F


def sin_angle(a, b):
    """Principal-angle sine as the length of b's component orthogonal to a.

    The cosine form sqrt(1 - cos^2) loses about half the digits near zero,
    so the residual of the orthogonal projection is used instead.
    """
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(np.linalg.norm(b - np.vdot(a, b) * a))


def sin_angle_cosine_form(a, b):
    """Textbook form, accurate away from zero only."""
    c = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.sqrt(max(0.0, 1.0 - c * c))


def zf_mimo_rates(H, V, U, noise_var):
    """Per-stream SINR of an interference-free zero-forcing MIMO link.

    With orthonormal U the projected noise stays white, so the post-ZF noise
    on stream l is ``noise_var * [(G^H G)^{-1}]_ll`` with ``G = U^H H V``.
    """
    G = U.conj().T @ H @ V
    C = np.linalg.inv(G.conj().T @ G)
    return 1.0 / (noise_var * np.real(np.diag(C)))
