"""Closed-form precoders and zero-forcing receivers from an IAC graph.

Every edge ``span(H_ka v_a) == span(H_kb v_b)`` fixes ``v_b`` up to scale as
``H_kb^{-1} H_ka v_a``. Trees are solved by propagating from an arbitrary
root vector; a subgraph with one loop needs its anchor to be an
eigenvector of the product of transfers around the loop. Scale factors are
dropped: every solved vector is renormalized to unit length.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateEigenproblem, DimensionOverflow, DuplicateAssignment,
                     RankDeficientPrecoder, SingularChannel)
from .graph import ONE_LOOP, TREE, classify_subgraphs
from .system_model import COND_FLOOR, StreamId, aligned_interferers, compute_k_iac

EIG_RESIDUAL_TOL = 1e-8
RANK_TOL = 1e-8
SEPARATION_TOL = 1e-6


@dataclass(frozen=True)
class PrecoderSet:
    """``V[j-1]`` is the M x d_j precoder of transmitter j."""

    V: tuple

    def __getitem__(self, j):
        return self.V[j - 1]

    def column(self, s):
        return self.V[s.j - 1][:, s.l - 1]

    def to_dict(self):
        return {"V": [matrix_to_json(v) for v in self.V]}

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple(matrix_from_json(v) for v in doc["V"]))


@dataclass(frozen=True)
class ReceiverSet:
    """``U[k-1]`` is the M x d_k orthonormal zero-forcing filter of receiver k."""

    U: tuple

    def __getitem__(self, k):
        return self.U[k - 1]

    def to_dict(self):
        return {"U": [matrix_to_json(u) for u in self.U]}

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple(matrix_from_json(u) for u in doc["U"]))


@dataclass(frozen=True)
class LoopMatrix:
    F: np.ndarray
    cycle: tuple
    anchor: StreamId


def matrix_to_json(A):
    A = np.asarray(A)
    return {"shape": list(A.shape),
            "data": [[float(z.real), float(z.imag)] for z in A.reshape(-1)]}


def matrix_from_json(doc):
    pairs = np.asarray(doc["data"], dtype=float).reshape(-1, 2)
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(doc["shape"])


def _solve(A, B):
    """A^{-1} B, refusing matrices below the conditioning floor."""
    s = np.linalg.svd(A, compute_uv=False)
    if not s[-1] > COND_FLOOR * s[0]:
        raise SingularChannel(f"sigma_min/sigma_max = {s[-1] / s[0]:.3e} below {COND_FLOOR}")
    return np.linalg.solve(A, B)


def step_transfer(channels, label, src, dst):
    """Map taking v_src's direction to v_dst's direction across one edge.

    ``H_{label,dst.j}^{-1} H_{label,src.j}``; the same formula serves both
    traversal directions since span equality is symmetric.
    """
    return _solve(channels(label, dst.j), channels(label, src.j))


def edge_transfer(edge, channels):
    """Transfer from the reference stream to the aligned stream of ``edge``."""
    return step_transfer(channels, edge.label, edge.ref, edge.aligned)


def random_unit_vector(rng, M):
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return v / np.linalg.norm(v)


def _unit(v):
    return v / np.linalg.norm(v)


def propagate(subgraph_edges, start, start_vec, channels, skip=None):
    """Breadth-first fill of every vertex reachable from ``start``.

    ``skip`` is an edge left out of the traversal (the closing edge of a
    loop), so the traversed edges form a spanning tree.
    """
    adj = {}
    for e in subgraph_edges:
        if e is skip:
            continue
        adj.setdefault(e.ref, []).append(e)
        adj.setdefault(e.aligned, []).append(e)
    out = {start: _unit(np.asarray(start_vec, dtype=complex))}
    queue = [start]
    while queue:
        v = queue.pop(0)
        for e in adj.get(v, ()):
            w = e.other(v)
            if w in out:
                continue
            out[w] = _unit(step_transfer(channels, e.label, v, w) @ out[v])
            queue.append(w)
    return out


def solve_tree_subgraph(subgraph, channels, seed=0, rng=None, phase=0.0):
    """Assign unit vectors to a loop-free subgraph from a random root."""
    rng = np.random.default_rng(seed) if rng is None else rng
    root = min(subgraph.vertices)
    v0 = random_unit_vector(rng, channels.M) * np.exp(1j * phase)
    return propagate(subgraph.edges, root, v0, channels)


def build_loop_matrix(cycle, channels, anchor=None):
    """Ordered product of step transfers around a loop.

    ``cycle`` is either a ONE_LOOP :class:`~iac.graph.Subgraph` or a sequence
    of edges walked from ``anchor``. The first step is applied first, so
    ``F = T_n ... T_2 T_1`` and a valid anchor satisfies span(F v) = span(v).
    """
    if hasattr(cycle, "cycle"):
        anchor, cycle = cycle.anchor, cycle.cycle
    F = np.eye(channels.M, dtype=complex)
    v = anchor
    for e in cycle:
        w = e.other(v)
        F = step_transfer(channels, e.label, v, w) @ F
        v = w
    if v != anchor:
        raise ValueError("edge sequence does not return to the anchor")
    return LoopMatrix(F, tuple(cycle), anchor)


def ranked_eigenpairs(F):
    """Eigenpairs of F ordered by |lambda| descending (ties: larger real part,
    then larger imaginary part), each with a unit eigenvector."""
    w, vecs = np.linalg.eig(F)
    order = sorted(range(len(w)), key=lambda i: (-abs(w[i]), -w[i].real, -w[i].imag))
    return [(w[i], _unit(vecs[:, i])) for i in order]


def _check_eigenpair(F, lam, v):
    norm_F = np.linalg.norm(F, 2)
    res = np.linalg.norm(F @ v - lam * v)
    if not res < EIG_RESIDUAL_TOL * norm_F:
        raise DegenerateEigenproblem(f"eigen residual {res:.3e} vs |F| = {norm_F:.3e}")


def pick_eigenvector(F, choice="max_modulus"):
    """Eigenpair of F selected by a deterministic rule.

    ``choice="max_modulus"`` takes the largest |lambda|; an integer picks
    that position in the same ordering. Returns (lambda, unit vector).
    """
    pairs = ranked_eigenpairs(F)
    lam, v = pairs[0 if choice == "max_modulus" else int(choice)]
    _check_eigenpair(F, lam, v)
    return lam, v


def solve_loop_subgraph(subgraph, channels, eigen_choice="max_modulus", phase=0.0):
    """Anchor the loop on an eigenvector of its loop matrix, then propagate."""
    return next(_loop_candidates(subgraph, channels, eigen_choice, phase))


def _loop_candidates(subgraph, channels, eigen_choice="max_modulus", phase=0.0):
    """Solutions of a one-loop subgraph, one per eigenpair, preferred first."""
    if subgraph.kind != ONE_LOOP:
        raise ValueError(f"subgraph {subgraph.id} is {subgraph.kind}")
    F = build_loop_matrix(subgraph, channels).F
    pairs = ranked_eigenpairs(F)
    start = 0 if eigen_choice == "max_modulus" else int(eigen_choice) % len(pairs)
    closing = subgraph.cycle[-1]
    for lam, v in pairs[start:] + pairs[:start]:
        _check_eigenpair(F, lam, v)
        yield propagate(subgraph.edges, subgraph.anchor, v * np.exp(1j * phase), channels,
                        skip=closing)


def _separation(solved, candidate):
    """Worst relative sigma_min over users, stacking candidate streams with
    streams of the same user solved earlier."""
    worst = np.inf
    for j in {s.j for s in candidate}:
        cols = [v for s, v in solved.items() if s.j == j]
        cols += [v for s, v in candidate.items() if s.j == j]
        if len(cols) < 2:
            continue
        sv = np.linalg.svd(np.column_stack(cols), compute_uv=False)
        worst = min(worst, sv[-1] / sv[0])
    return worst


def complement_basis(A, M, tol=RANK_TOL):
    """Orthonormal basis of the orthogonal complement of span(columns of A).

    Returns (basis, rank). An empty ``A`` has rank 0 and complement I.

    The basis depends only on span(A), not on how A's columns are scaled or
    phased: the projector onto the complement is applied to the identity,
    the largest projected columns are orthonormalized and each basis vector's
    phase is fixed by a real positive R diagonal. Downstream per-stream rates
    are then invariant to the eigenvector phase ambiguity.
    """
    if A is None or A.size == 0:
        return np.eye(M, dtype=complex), 0
    U, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    if rank == M:
        return U[:, M:], rank
    Q = U[:, :rank]
    P = np.eye(M, dtype=complex) - Q @ Q.conj().T
    cols = np.argsort(-np.linalg.norm(P, axis=0), kind="stable")[:M - rank]
    B, R = np.linalg.qr(P[:, np.sort(cols)])
    ph = np.diag(R) / np.abs(np.diag(R))
    return B * ph.conj(), rank


def solve_first_user(channels, interference_directions, d1):
    """Precoder of user 1: its received signal lands orthogonal to the
    interference seen at receiver 1."""
    M = channels.M
    A = np.column_stack(interference_directions) if len(interference_directions) else None
    B, rank = complement_basis(A, M)
    if B.shape[1] < d1:
        raise DimensionOverflow(
            f"interference rank {rank} at receiver 1 leaves {B.shape[1]} < d1={d1} dimensions")
    V1 = _solve(channels(1, 1), B[:, :d1])
    return V1 / np.linalg.norm(V1, axis=0)


def assemble_precoders(solutions, V1, config):
    """Collect per-stream vectors into per-user matrices.

    ``solutions`` is an iterable of {StreamId: vector} maps (one per
    subgraph); a stream assigned twice is an error.
    """
    merged = {}
    for part in solutions:
        for s, v in part.items():
            if s in merged:
                raise DuplicateAssignment(f"{s} assigned by two subgraphs")
            merged[s] = v
    V = [np.asarray(V1, dtype=complex)]
    for j in range(2, config.K + 1):
        missing = [s for s in config.streams(j) if s not in merged]
        if missing:
            raise RankDeficientPrecoder(f"streams {missing} never solved")
        V.append(np.column_stack([merged[s] for s in config.streams(j)]))
    for j, Vj in enumerate(V, start=1):
        if Vj.shape != (config.M, config.dof(j)):
            raise RankDeficientPrecoder(f"V_{j} has shape {Vj.shape}")
        if not np.allclose(np.linalg.norm(Vj, axis=0), 1.0, rtol=0, atol=1e-12):
            raise RankDeficientPrecoder(f"V_{j} columns are not unit norm")
        s = np.linalg.svd(Vj, compute_uv=False)
        if not s[-1] > RANK_TOL * s[0]:
            raise RankDeficientPrecoder(f"V_{j} is column-rank deficient (sigma_min={s[-1]:.3e})")
    return PrecoderSet(tuple(V))


def solve_precoders(graph, channels, config, seed=0, eigen_choice="max_modulus", phase=0.0):
    """Solve every subgraph, then user 1, and assemble the precoder set.

    ``phase`` rotates every tree root and loop anchor by ``exp(1j*phase)``;
    spans are unaffected, which makes it handy for invariance checks.
    """
    rng = np.random.default_rng(seed)
    parts = []
    solved = {}
    for sub in classify_subgraphs(graph):
        if sub.kind == TREE:
            part = solve_tree_subgraph(sub, channels, rng=rng, phase=phase)
        else:
            # loops with the same transfer sequence share a loop matrix; take
            # the first eigenpair that keeps each user's streams independent
            best, best_sep = None, -1.0
            for cand in _loop_candidates(sub, channels, eigen_choice, phase):
                sep = _separation(solved, cand)
                if sep > SEPARATION_TOL:
                    best = cand
                    break
                if sep > best_sep:
                    best, best_sep = cand, sep
            part = best
        parts.append(part)
        solved.update(part)
    interf = [channels(1, s.j) @ v for s, v in sorted(solved.items())]
    V1 = solve_first_user(channels, interf, config.dof(1))
    return assemble_precoders(parts, V1, config)


def interference_matrix(channels, precoders, config, k, k_iac=None):
    """Columns H_kj v_jl over the streams left uncancelled at receiver k."""
    cols = [channels(k, j) @ precoders[j] for j in aligned_interferers(config, k, k_iac)]
    return np.hstack(cols) if cols else np.zeros((config.M, 0), dtype=complex)


def design_receivers(channels, precoders, config):
    """Zero-forcing filters orthogonal to each receiver's uncancelled interference."""
    k_iac = compute_k_iac(config)
    U = []
    for k in range(1, config.K + 1):
        B, rank = complement_basis(interference_matrix(channels, precoders, config, k, k_iac),
                                   config.M)
        if B.shape[1] < config.dof(k):
            raise DimensionOverflow(
                f"receiver {k}: interference rank {rank} leaves {B.shape[1]} < d_{k}="
                f"{config.dof(k)} dimensions")
        U.append(B[:, :config.dof(k)])
    return ReceiverSet(tuple(U))
