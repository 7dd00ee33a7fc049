"""Disjoint-set forest that also tracks vertex and edge counts per set.

The edge count lets the graph builder test, before inserting an edge,
whether the merged component would exceed one independent cycle
(``edges <= vertices``).
"""


class UnionFind:
    def __init__(self, items=()):
        self._parent = {}
        self._rank = {}
        self._nverts = {}
        self._nedges = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self._parent:
            self._parent[x] = x
            self._rank[x] = 0
            self._nverts[x] = 1
            self._nedges[x] = 0

    def __contains__(self, x):
        return x in self._parent

    def find(self, x):
        root = x
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[x] != root:
            self._parent[x], x = root, self._parent[x]
        return root

    def same(self, a, b):
        return self.find(a) == self.find(b)

    def counts(self, x):
        """(vertices, edges) of the set containing ``x``."""
        r = self.find(x)
        return self._nverts[r], self._nedges[r]

    def counts_after_edge(self, a, b):
        """(vertices, edges) of the set that would result from adding edge a-b."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return self._nverts[ra], self._nedges[ra] + 1
        return (self._nverts[ra] + self._nverts[rb],
                self._nedges[ra] + self._nedges[rb] + 1)

    def add_edge(self, a, b):
        """Record an edge a-b, merging the two sets if needed.

        Returns True when the edge merged two sets, False when it closed a
        cycle inside one set.
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            self._nedges[ra] += 1
            return False
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._nverts[ra] += self._nverts.pop(rb)
        self._nedges[ra] += self._nedges.pop(rb) + 1
        del self._rank[rb]
        return True

    def groups(self):
        """Mapping root -> sorted list of members."""
        out = {}
        for x in self._parent:
            out.setdefault(self.find(x), []).append(x)
        return {r: sorted(v) for r, v in out.items()}

    def copy(self):
        other = UnionFind()
        other._parent = dict(self._parent)
        other._rank = dict(self._rank)
        other._nverts = dict(self._nverts)
        other._nedges = dict(self._nedges)
        return other
