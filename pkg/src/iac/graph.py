"""IAC graph: streams of users 2..K as vertices, alignment equations as
labelled edges.

An edge ``Edge(ref, aligned, label=k)`` stands for the equation
``span(H_k,ref.j @ v_ref) == span(H_k,aligned.j @ v_aligned)`` enforced at
receiver ``k``. A connected subgraph is solvable in closed form iff it has
at most one cycle, so every builder here keeps ``edges <= vertices`` per
component.

Two builders are provided:

* :func:`build_graph_general` - randomized reference selection receiver by
  receiver, with bounded restarts.
* :func:`build_graph_optimal` - deterministic round-robin wiring for the
  two-stage (``k_iac == 2``) tuples that reach 2M streams.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConstructionExhausted, InfeasibleConfig, MalformedGraph
from .feasibility import check_feasibility, is_optimal_tuple
from .system_model import StreamId, compute_k_iac
from .unionfind import UnionFind

log = logging.getLogger(__name__)

DEFAULT_RETRY_BUDGET = 64
# consecutive re-draws of one receiver's references before starting over
# from receiver 1
REDRAWS_PER_RECEIVER = 2

TREE = "TREE"
ONE_LOOP = "ONE_LOOP"


class Edge(NamedTuple):
    ref: StreamId
    aligned: StreamId
    label: int

    def other(self, v):
        return self.aligned if v == self.ref else self.ref

    def to_dict(self):
        return {"a": {"j": self.ref.j, "l": self.ref.l},
                "b": {"j": self.aligned.j, "l": self.aligned.l},
                "label": self.label}


@dataclass(frozen=True)
class IacGraph:
    vertices: tuple
    edges: tuple

    def partition(self):
        """Union-find over vertices joined by edges."""
        uf = UnionFind(self.vertices)
        for e in self.edges:
            uf.add_edge(e.ref, e.aligned)
        return uf

    def edges_with_label(self, k):
        return [e for e in self.edges if e.label == k]

    def to_dict(self):
        return {"vertices": [{"j": v.j, "l": v.l} for v in self.vertices],
                "edges": [e.to_dict() for e in self.edges]}

    @classmethod
    def from_dict(cls, doc):
        verts = tuple(StreamId(int(v["j"]), int(v["l"])) for v in doc["vertices"])
        edges = tuple(Edge(StreamId(int(e["a"]["j"]), int(e["a"]["l"])),
                           StreamId(int(e["b"]["j"]), int(e["b"]["l"])),
                           int(e["label"])) for e in doc["edges"])
        return cls(verts, edges)

    def to_dot(self):
        lines = ["graph iac {"]
        for v in self.vertices:
            lines.append(f'  "{v}";')
        for e in self.edges:
            lines.append(f'  "{e.ref}" -- "{e.aligned}" [label="rx {e.label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class Equation(NamedTuple):
    receiver: int
    reference: StreamId
    aligned: StreamId

    def to_dict(self):
        return {"receiver": self.receiver,
                "reference": [self.reference.j, self.reference.l],
                "aligned": [self.aligned.j, self.aligned.l]}


@dataclass(frozen=True)
class AlignmentEquationSet:
    """Span-equality equations, one per graph edge, grouped by receiver."""

    equations: tuple

    @classmethod
    def from_graph(cls, graph):
        return cls(tuple(Equation(e.label, e.ref, e.aligned) for e in graph.edges))

    def for_receiver(self, k):
        return [q for q in self.equations if q.receiver == k]

    def counts(self, k_iac):
        return tuple(len(self.for_receiver(k)) for k in range(1, k_iac + 1))

    def __len__(self):
        return len(self.equations)

    def to_dict(self):
        return {"equations": [q.to_dict() for q in self.equations]}


@dataclass
class ReceiverTrace:
    receiver: int
    references: list = field(default_factory=list)
    redraws: int = 0
    merges: int = 0
    loops_closed: int = 0


@dataclass
class ConstructionTrace:
    method: str
    receivers: list = field(default_factory=list)
    restarts: int = 0
    full_restarts: int = 0
    retry_budget: int = 0
    fallback: bool = False

    def receiver(self, k):
        for r in self.receivers:
            if r.receiver == k:
                return r
        raise KeyError(k)


def expected_equation_count(config, k):
    """|Phi_k|: non-basis interference vectors at receiver k."""
    return sum(config.d[k:]) - (config.M - config.dof(k))


def graph_vertices(config):
    return tuple(config.streams_of_users(2))



# ---------------------------------------------------------------------------
# loop words
# ---------------------------------------------------------------------------
#
# Walking an edge with label k from a stream of transmitter a to one of
# transmitter b multiplies by H_kb^{-1} H_ka, so a loop's matrix depends only
# on the cyclic sequence of (k, a, b) letters. Two consecutive letters with
# the same label collapse: (k, a, r)(k, r, b) == (k, a, b). If the reduced
# cyclic word is a proper power u^m, streams one period apart share a
# transmitter and are forced collinear for every eigenvector choice, so such
# loops are rejected during construction.

def path_steps(edges, src, dst):
    """(edge, from, to) steps along the unique path src -> dst in a forest."""
    adj = {}
    for e in edges:
        adj.setdefault(e.ref, []).append(e)
        adj.setdefault(e.aligned, []).append(e)
    prev = {src: None}
    queue = [src]
    while queue:
        v = queue.pop(0)
        if v == dst:
            break
        for e in adj.get(v, ()):
            w = e.other(v)
            if w not in prev:
                prev[w] = (e, v)
                queue.append(w)
    if dst not in prev:
        return None
    steps = []
    v = dst
    while prev[v] is not None:
        e, u = prev[v]
        steps.append((e, u, v))
        v = u
    return steps[::-1]


def reduce_loop_word(letters):
    """Cyclically reduce a sequence of (label, from_tx, to_tx) letters."""
    stack = []
    for cur in letters:
        while cur is not None and stack and stack[-1][0] == cur[0]:
            prev = stack.pop()
            cur = (cur[0], prev[1], cur[2])
            if cur[1] == cur[2]:
                cur = None
        if cur is not None:
            stack.append(cur)
    while len(stack) >= 2 and stack[0][0] == stack[-1][0]:
        last, first = stack.pop(), stack.pop(0)
        cur = (last[0], last[1], first[2])
        if cur[1] != cur[2]:
            stack.append(cur)
    return tuple(stack)


def is_proper_power(word):
    n = len(word)
    return any(n % p == 0 and word[p:] + word[:p] == word for p in range(1, n))


def degenerate_loop(letters):
    """True if a loop with these letters cannot give independent streams."""
    word = reduce_loop_word(letters)
    return len(word) == 0 or is_proper_power(word)


def _closing_letters(edges, ref, aligned, label):
    """Letters of the loop that a new edge ref-aligned would close."""
    steps = path_steps(edges, aligned, ref)
    letters = [(e.label, u.j, w.j) for e, u, w in steps]
    letters.append((label, ref.j, aligned.j))
    return letters


def _admissible(uf, edges, ref, aligned, label):
    nv, ne = uf.counts_after_edge(ref, aligned)
    if ne > nv:
        return False
    if uf.same(ref, aligned):
        return not degenerate_loop(_closing_letters(edges, ref, aligned, label))
    return True


# ---------------------------------------------------------------------------
# general randomized construction
# ---------------------------------------------------------------------------

#: reference choices tried (search nodes) per draw of R_k before re-drawing
SEARCH_NODES_PER_DRAW = 256


def _connect_receiver(config, k, uf, edges, rng, rtrace):
    """Add the label-k edges for one draw of reference vertices.

    Pending streams are wired in a seeded random order; each takes an
    admissible reference tried in random order, backtracking over earlier
    choices up to ``SEARCH_NODES_PER_DRAW`` nodes. Returns the updated
    ``(uf, edges)`` or ``None`` on a dead end; the inputs are not modified.
    """
    eta = config.streams_of_users(k + 1)
    n_ref = config.M - config.dof(k)
    picks = rng.choice(len(eta), size=n_ref, replace=False)
    refs = sorted(eta[i] for i in picks)
    ref_set = set(refs)
    rtrace.references = refs

    pending = [v for v in eta if v not in ref_set]
    # visit subgraph by subgraph (as they stand before this receiver)
    groups = {}
    for v in pending:
        groups.setdefault(uf.find(v), []).append(v)
    roots = list(groups)
    rng.shuffle(roots)
    order = []
    for root in roots:
        members = groups[root]
        rng.shuffle(members)
        order.extend(members)
    # one fixed candidate order per stream keeps the search deterministic
    cand_order = {}
    for v in order:
        c = [r for r in refs if r.j != v.j]
        rng.shuffle(c)
        cand_order[v] = c

    # references owned by each transmitter, then grown as siblings use them
    used = {}
    for r in refs:
        used.setdefault(r.j, set()).add(r)
    budget = [SEARCH_NODES_PER_DRAW]

    def search(i, uf, edges):
        if i == len(order):
            return uf, edges
        v = order[i]
        taken = used.setdefault(v.j, set())
        for r in cand_order[v]:
            if r in taken or not _admissible(uf, edges, r, v, k):
                continue
            if budget[0] <= 0:
                return None
            budget[0] -= 1
            uf2 = uf.copy()
            uf2.add_edge(r, v)
            taken.add(r)
            found = search(i + 1, uf2, edges + [Edge(r, v, k)])
            taken.discard(r)
            if found is not None:
                return found
        return None

    found = search(0, uf, list(edges))
    if found is None:
        return None
    new_uf, new_edges = found
    replay = uf.copy()
    for e in new_edges[len(edges):]:
        if replay.add_edge(e.ref, e.aligned):
            rtrace.merges += 1
        else:
            rtrace.loops_closed += 1
    return new_uf, new_edges


def build_graph_general(config, seed=0, retry_budget=DEFAULT_RETRY_BUDGET):
    """Randomized IAC graph construction for any feasible tuple.

    Receivers 1..k_iac are processed in order. For each, ``M - d_k``
    reference streams are drawn uniformly from users k+1..K and every other
    stream of those users is attached to one admissible reference: not
    from its own transmitter, not already used by a sibling stream at this
    receiver, and not pushing its component past one cycle. On a dead end
    the receiver's references are re-drawn; after ``REDRAWS_PER_RECEIVER``
    consecutive failures at one receiver the whole build restarts from
    receiver 1. Every re-draw counts against ``retry_budget``.

    Returns
    -------
    (IacGraph, AlignmentEquationSet, ConstructionTrace)
    """
    verdict = check_feasibility(config)
    if not verdict.feasible:
        raise InfeasibleConfig(
            "tuple violates " + ", ".join(q.which for q in verdict.failed_inequalities))
    k_iac = verdict.k_iac
    vertices = graph_vertices(config)
    trace = ConstructionTrace("general", retry_budget=retry_budget)
    if k_iac == 0:
        graph = IacGraph(vertices, ())
        return graph, AlignmentEquationSet.from_graph(graph), trace

    rng = np.random.default_rng(seed)
    while True:
        uf = UnionFind(vertices)
        edges = []
        trace.receivers = []
        k = 1
        stalls = 0
        while k <= k_iac:
            rtrace = ReceiverTrace(k)
            found = _connect_receiver(config, k, uf, edges, rng, rtrace)
            if found is not None:
                rtrace.redraws = stalls
                trace.receivers.append(rtrace)
                uf, edges = found
                k += 1
                stalls = 0
                continue
            trace.restarts += 1
            if trace.restarts > retry_budget:
                raise ConstructionExhausted(
                    f"no admissible wiring at receiver {k} after {retry_budget} restarts",
                    receiver=k)
            stalls += 1
            if stalls >= REDRAWS_PER_RECEIVER:
                trace.full_restarts += 1
                log.debug("receiver %d stuck, restarting from receiver 1", k)
                break
        else:
            graph = IacGraph(vertices, tuple(edges))
            return graph, AlignmentEquationSet.from_graph(graph), trace


# ---------------------------------------------------------------------------
# optimal (k_iac == 2) construction
# ---------------------------------------------------------------------------

def build_graph_optimal(config, seed=0):
    """Structured construction for tuples with ``d1 + d2 = M`` and
    ``d3 + ... + dK = M``.

    Receiver 1 uses all of user 2's streams as references and wires the
    streams of users 3..K onto them round-robin, giving ``d2`` star-shaped
    trees. Receiver 2 picks one stream per tree to align and closes a loop
    inside the tree when it can; otherwise it merges the tree into one that
    already closed its loop.

    Raises
    ------
    InfeasibleConfig
        If the tuple is not an optimal 2M tuple.
    ConstructionExhausted
        If the merge pass finds no admissible reference. Callers usually
        fall back to :func:`build_graph_general`.
    """
    if not is_optimal_tuple(config):
        raise InfeasibleConfig(f"{config.d} is not an optimal 2M tuple for M={config.M}")
    rng = np.random.default_rng(seed)
    d2 = config.dof(2)
    vertices = graph_vertices(config)
    uf = UnionFind(vertices)
    edges = []
    trace = ConstructionTrace("optimal")

    # receiver 1: round-robin onto v_{2,l2}, l2 = ((c - 1) mod d2) + 1
    r1 = ReceiverTrace(1, references=config.streams(2))
    tail = config.streams_of_users(3)
    for c, v in enumerate(tail, start=1):
        ref = StreamId(2, (c - 1) % d2 + 1)
        uf.add_edge(ref, v)
        r1.merges += 1
        edges.append(Edge(ref, v, 1))
    trace.receivers.append(r1)

    # receiver 2: one aligned stream per subgraph, the rest are references
    groups = {}
    for v in tail:
        groups.setdefault(uf.find(v), []).append(v)
    subgraphs = [groups[uf.find(StreamId(2, l))] for l in range(1, d2 + 1)]
    aligned = [members[rng.integers(len(members))] for members in subgraphs]
    refs = sorted(set(tail) - set(aligned))
    r2 = ReceiverTrace(2, references=refs)
    used = {}
    for r in refs:
        used.setdefault(r.j, set()).add(r)

    # pass 1: close a loop inside the subgraph
    leftover = []
    looped = []
    for members, v in zip(subgraphs, aligned):
        taken = used.setdefault(v.j, set())
        local = [r for r in refs if r in members and r not in taken
                 and _admissible(uf, edges, r, v, 2)]
        if local:
            r = local[rng.integers(len(local))]
            uf.add_edge(r, v)
            edges.append(Edge(r, v, 2))
            taken.add(r)
            r2.loops_closed += 1
            looped.append(members)
        else:
            leftover.append(v)

    # pass 2: merge loop-free subgraphs into one that already has its loop
    for v in leftover:
        taken = used.setdefault(v.j, set())
        cands = [r for members in looped for r in members
                 if r in refs and r not in taken]
        if not cands:
            raise ConstructionExhausted(
                f"no admissible reference for {v} at receiver 2", receiver=2)
        r = cands[rng.integers(len(cands))]
        uf.add_edge(r, v)
        edges.append(Edge(r, v, 2))
        taken.add(r)
        r2.merges += 1
    trace.receivers.append(r2)

    graph = IacGraph(vertices, tuple(edges))
    return graph, AlignmentEquationSet.from_graph(graph), trace


def build_graph(config, seed=0, retry_budget=DEFAULT_RETRY_BUDGET, optimal=False):
    """Dispatch to the optimal builder when asked and applicable, else general."""
    if optimal and is_optimal_tuple(config):
        try:
            return build_graph_optimal(config, seed)
        except ConstructionExhausted:
            log.info("optimal construction stuck, falling back to general builder")
            graph, eqs, trace = build_graph_general(config, seed, retry_budget)
            trace.fallback = True
            return graph, eqs, trace
    return build_graph_general(config, seed, retry_budget)


# ---------------------------------------------------------------------------
# validation and classification
# ---------------------------------------------------------------------------

def _label_clashes(graph, k):
    """Components of the label-k subgraph holding two streams of one transmitter."""
    es = graph.edges_with_label(k)
    uf = UnionFind()
    for e in es:
        uf.add(e.ref)
        uf.add(e.aligned)
        uf.add_edge(e.ref, e.aligned)
    out = []
    for members in uf.groups().values():
        tx = [v.j for v in members]
        if len(tx) != len(set(tx)):
            out.append(members)
    return out


def validate_graph(graph, config):
    """Return a list of human-readable violations (empty iff valid)."""
    problems = []
    expected = set(graph_vertices(config))
    verts = set(graph.vertices)
    if len(graph.vertices) != len(verts):
        problems.append("duplicate vertices")
    if verts != expected:
        extra = sorted(verts - expected)
        missing = sorted(expected - verts)
        if any(v.j == 1 for v in extra):
            problems.append("user 1 stream present as vertex")
        if extra or missing:
            problems.append(f"vertex set mismatch: extra={extra}, missing={missing}")

    k_iac = compute_k_iac(config)
    for e in graph.edges:
        if e.ref not in verts or e.aligned not in verts:
            problems.append(f"edge {e} has an endpoint outside the vertex set")
        if e.ref.j == e.aligned.j:
            problems.append(f"edge {e} joins two streams of transmitter {e.ref.j}")
        if not 1 <= e.label <= k_iac:
            problems.append(f"edge {e} label outside [1, k_iac={k_iac}]")
        if e.ref.j <= e.label or e.aligned.j <= e.label:
            problems.append(f"edge {e} involves a user already decoded at receiver {e.label}")

    uf = UnionFind(verts)
    for e in graph.edges:
        uf.add(e.ref)
        uf.add(e.aligned)
        uf.add_edge(e.ref, e.aligned)
    for members in uf.groups().values():
        nv, ne = uf.counts(members[0])
        if ne > nv:
            problems.append(f"second loop in subgraph containing {members[0]} "
                            f"({ne} edges on {nv} vertices)")
    if not any(p.startswith("second loop") for p in problems):
        try:
            subs = classify_subgraphs(graph)
        except MalformedGraph:
            subs = []
        for sub in subs:
            if sub.kind == ONE_LOOP and degenerate_loop(
                    [(e.label, u.j, w.j) for e, u, w in sub.cycle_walk()]):
                problems.append(f"degenerate loop in subgraph containing {sub.anchor}: "
                                f"its transfer word is periodic")

    for k in range(1, k_iac + 1):
        for members in _label_clashes(graph, k):
            problems.append(f"same-label transmitter clash at receiver {k}: {members}")
        got = len(graph.edges_with_label(k))
        want = expected_equation_count(config, k)
        if got != want:
            problems.append(f"receiver {k} has {got} equations, expected {want}")
    return problems


@dataclass(frozen=True)
class Subgraph:
    id: int
    vertices: tuple
    edges: tuple
    kind: str
    cycle: tuple = ()  # edges around the loop, in walking order from the anchor
    anchor: StreamId = None

    def cycle_walk(self):
        """Yield (edge, from_vertex, to_vertex) around the loop from the anchor."""
        v = self.anchor
        for e in self.cycle:
            w = e.other(v)
            yield e, v, w
            v = w


def _find_cycle(vertices, edges):
    """Unique cycle of a unicyclic multigraph, by pruning degree-1 vertices."""
    alive = set(range(len(edges)))
    incident = {v: set() for v in vertices}
    for i, e in enumerate(edges):
        incident[e.ref].add(i)
        incident[e.aligned].add(i)
    stack = [v for v in vertices if len(incident[v]) == 1]
    while stack:
        v = stack.pop()
        if len(incident[v]) != 1:
            continue
        (i,) = incident[v]
        alive.discard(i)
        incident[v].clear()
        w = edges[i].other(v)
        incident[w].discard(i)
        if len(incident[w]) == 1:
            stack.append(w)
    on_cycle = sorted(v for v in vertices if incident[v])
    anchor = on_cycle[0]
    key = lambda i: (edges[i].label, edges[i].ref, edges[i].aligned)
    order = []
    seen = set()
    v = anchor
    while True:
        nxt = sorted((i for i in incident[v] if i not in seen), key=key)
        if not nxt:
            break
        i = nxt[0]
        seen.add(i)
        order.append(edges[i])
        v = edges[i].other(v)
        if v == anchor:
            break
    return anchor, tuple(order)


def classify_subgraphs(graph):
    """Split into connected subgraphs and tag each as TREE or ONE_LOOP."""
    uf = graph.partition()
    by_root = {}
    for e in graph.edges:
        by_root.setdefault(uf.find(e.ref), []).append(e)
    out = []
    groups = sorted(uf.groups().values())
    for q, members in enumerate(groups, start=1):
        es = tuple(by_root.get(uf.find(members[0]), ()))
        nv, ne = len(members), len(es)
        if ne == nv - 1:
            out.append(Subgraph(q, tuple(members), es, TREE))
        elif ne == nv:
            anchor, cycle = _find_cycle(members, es)
            out.append(Subgraph(q, tuple(members), es, ONE_LOOP, cycle, anchor))
        else:
            raise MalformedGraph(f"subgraph {q} has {ne} edges on {nv} vertices")
    return out


def subgraph_counts_after(graph, k):
    """(vertices, edges, subgraphs) of the graph restricted to labels <= k.

    Only subgraphs touched by at least one edge are counted, matching the
    way component counts are quoted for intermediate construction stages.
    """
    partial = IacGraph(graph.vertices, tuple(e for e in graph.edges if e.label <= k))
    subs = classify_subgraphs(partial)
    touched = [s for s in subs if s.edges]
    return sum(len(s.vertices) for s in touched), len(partial.edges), len(touched)
