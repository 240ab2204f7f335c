"""Graph topologies, discrete gradients, and level-set partitions.

Signals live on the vertices of a fixed undirected graph. Edges are stored
once with an orientation, and the discrete gradient of a signal x assigns
each oriented edge (i, j) the difference x[i] - x[j]. Equality of endpoint
values is always exact (bitwise); there is no tolerance anywhere in this
module, because support counts feed penalty terms and stopping rules.
"""

import numpy as np

__all__ = [
    "GraphTopology",
    "Partition",
    "line_graph",
    "lattice_graph",
    "gradient",
    "gradient_support_size",
    "induced_partition",
]


class GraphError(ValueError):
    pass


class GraphTopology:
    """An undirected graph on vertices 0..p-1 with oriented edge storage.

    edges is an (m, 2) int array; each row (i, j) is one undirected edge
    stored with a fixed orientation. Self loops and duplicate edges (in
    either orientation) are rejected.
    """

    def __init__(self, p, edges):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if p < 1:
            raise GraphError("vertex count must be positive, got %d" % p)
        if edges.size and (edges.min() < 0 or edges.max() >= p):
            raise GraphError("edge endpoint out of range for p=%d" % p)
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("self loops are not allowed")
        key = np.minimum(edges[:, 0], edges[:, 1]) * p + np.maximum(edges[:, 0], edges[:, 1])
        if len(np.unique(key)) != len(key):
            raise GraphError("duplicate edges are not allowed")
        self.p = int(p)
        self.edges = edges
        self.edges.setflags(write=False)

    @property
    def n_edges(self):
        return len(self.edges)

    def degrees(self):
        deg = np.zeros(self.p, dtype=np.int64)
        np.add.at(deg, self.edges.ravel(), 1)
        return deg

    def __repr__(self):
        return "GraphTopology(p=%d, edges=%d)" % (self.p, self.n_edges)


def line_graph(p):
    """Path graph on p vertices: edges (i, i+1) for i = 0..p-2."""
    if p < 1:
        raise GraphError("vertex count must be positive, got %d" % p)
    i = np.arange(p - 1, dtype=np.int64)
    return GraphTopology(p, np.stack([i, i + 1], axis=1))


def lattice_graph(n1, n2):
    """4-neighbor grid graph on n1 x n2 vertices in row-major order.

    Vertex (r, c) has index r*n2 + c. Horizontal edges come first, then
    vertical, each block in row-major order; every edge is oriented from
    the smaller to the larger index.
    """
    if n1 < 1 or n2 < 1:
        raise GraphError("lattice dimensions must be positive")
    idx = np.arange(n1 * n2, dtype=np.int64).reshape(n1, n2)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return GraphTopology(n1 * n2, np.concatenate([horiz, vert], axis=0))


def _check_signal(topology, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (topology.p,):
        raise GraphError(
            "signal length %s does not match vertex count %d" % (x.shape, topology.p)
        )
    return x


def gradient(topology, x):
    """Discrete gradient: entry e is x[i] - x[j] for oriented edge (i, j)."""
    x = _check_signal(topology, x)
    if topology.n_edges == 0:
        return np.zeros(0)
    return x[topology.edges[:, 0]] - x[topology.edges[:, 1]]


def gradient_support_size(topology, x):
    """Number of edges whose endpoint values differ (exact comparison)."""
    x = _check_signal(topology, x)
    if topology.n_edges == 0:
        return 0
    return int(np.count_nonzero(x[topology.edges[:, 0]] != x[topology.edges[:, 1]]))


class Partition:
    """Vertex partition into connected equal-value blocks.

    labels[i] is the block id of vertex i; ids are 0..n_blocks-1, assigned
    in order of first appearance by vertex index.
    """

    def __init__(self, labels, n_blocks):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.n_blocks = int(n_blocks)

    def block(self, b):
        return np.flatnonzero(self.labels == b)

    def __repr__(self):
        return "Partition(p=%d, blocks=%d)" % (len(self.labels), self.n_blocks)


def induced_partition(topology, x):
    """Connected components of the subgraph of edges with equal endpoint values.

    Two vertices share a block iff they are joined by a path of edges whose
    endpoints agree exactly. Distinct blocks may still carry equal values if
    they are not connected through equal-valued edges.
    """
    x = _check_signal(topology, x)
    parent = np.arange(topology.p, dtype=np.int64)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in topology.edges:
        if x[i] == x[j]:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[rj] = ri

    roots = np.array([find(i) for i in range(topology.p)], dtype=np.int64)
    order = {}
    labels = np.empty(topology.p, dtype=np.int64)
    for i, r in enumerate(roots):
        if r not in order:
            order[r] = len(order)
        labels[i] = order[r]
    return Partition(labels, len(order))
