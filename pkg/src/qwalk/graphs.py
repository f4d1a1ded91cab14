"""Network builders and coupling (Laplacian-type) matrices.

Every graph family used by the simulation layer is constructed here as an
immutable weighted undirected graph: deterministic families (rings, lattices,
stars, dendrimers, Husimi cacti, glued Cayley trees, dual Sierpinski gaskets,
Vicsek fractals, Apollonian networks, hypercycles), seeded random families
(small-world, Erdos-Renyi, Watts-Strogatz, preferential-attachment scale-free)
and weighted families (long-range rings/chains, 2m-neighbor rings, random
geometric graphs in a 3D box).

Conventions
-----------
- Nodes are numbered 1..N.  Builders use a canonical breadth-first numbering
  so per-node observables are comparable across runs.
- The coupling matrix is the weighted graph Laplacian scaled by a rate
  ``gamma``: diagonal = gamma * (sum of incident edge weights), off-diagonal
  (j,k) = -gamma * weight(j,k).  Row sums are exactly zero.
- Random builders are pure functions of (parameters, seed); the generator is
  PCG64 (numpy default), documented here so streams are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "CouplingMatrix",
    "ClusterPartition",
    "CollapsedMatrix",
    "ring",
    "line",
    "lattice2d",
    "star",
    "complete",
    "dendrimer",
    "husimi",
    "glued_cayley",
    "glued_cayley_partition",
    "dsg",
    "vicsek",
    "apollonian",
    "hypercycle",
    "small_world",
    "erdos_renyi",
    "watts_strogatz",
    "scale_free",
    "long_range_ring",
    "long_range_chain",
    "m_neighbor_ring",
    "random_geometric",
    "coupling_matrix",
    "collapse_clusters",
    "graph_to_json",
    "graph_from_json",
]


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph with 1-based node labels.

    ``edges`` holds (i, j, weight) with i < j, no duplicates, weights > 0.
    ``coordinates`` is an (N, 3) array for geometric families, else None.
    """

    n_nodes: int
    edges: tuple
    family: str
    params: dict = field(default_factory=dict)
    coordinates: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for i, j, w in self.edges:
            if not (1 <= i < j <= self.n_nodes):
                raise ValueError(f"bad edge ({i},{j}): indices must satisfy 1<=i<j<=N")
            if w <= 0:
                raise ValueError(f"edge ({i},{j}) has nonpositive weight {w}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
        if self.coordinates is not None and len(self.coordinates) != self.n_nodes:
            raise ValueError("coordinates must cover every node")

    def degrees(self) -> np.ndarray:
        """Number of bonds emanating from each node (unweighted)."""
        d = np.zeros(self.n_nodes, dtype=int)
        for i, j, _ in self.edges:
            d[i - 1] += 1
            d[j - 1] += 1
        return d

    def adjacency(self) -> np.ndarray:
        """Dense weighted adjacency matrix (0-based array)."""
        a = np.zeros((self.n_nodes, self.n_nodes))
        for i, j, w in self.edges:
            a[i - 1, j - 1] = w
            a[j - 1, i - 1] = w
        return a


@dataclass(frozen=True)
class CouplingMatrix:
    """Laplacian-type generator: symmetric, PSD, zero row sums."""

    n: int
    entries: np.ndarray
    rate_gamma: float = 1.0

    def __post_init__(self):
        m = self.entries
        if m.shape != (self.n, self.n):
            raise ValueError("entry matrix has wrong shape")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("coupling matrix must be symmetric")

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class ClusterPartition:
    """Ordered partition of nodes into clusters with consecutive-only bonds."""

    clusters: tuple  # tuple of frozensets of 1-based node labels

    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.clusters)


@dataclass(frozen=True)
class CollapsedMatrix:
    """Symmetric tridiagonal matrix of a walk collapsed onto clusters.

    Not a Laplacian in general (row sums need not vanish), hence a distinct
    type from CouplingMatrix.
    """

    n: int
    entries: np.ndarray
    d_k: tuple
    b_k: tuple

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


def _mk(n, pairs, family, params, coords=None, seed=None, weights=None):
    """Normalize an edge list (any orientation, possible repeats) to a Graph."""
    ed = {}
    if weights is None:
        for i, j in pairs:
            a, b = (i, j) if i < j else (j, i)
            ed[(a, b)] = 1.0
    else:
        for (i, j), w in zip(pairs, weights):
            a, b = (i, j) if i < j else (j, i)
            ed[(a, b)] = w
    edges = tuple((i, j, ed[(i, j)]) for i, j in sorted(ed))
    return Graph(n, edges, family, dict(params), coords, seed)


# ---------------------------------------------------------------------------
# deterministic families
# ---------------------------------------------------------------------------


def ring(n: int) -> Graph:
    """Cycle of N nodes (N>=3; N in {1,2} degenerate but allowed)."""
    if n < 1:
        raise ValueError("ring needs n >= 1")
    if n == 1:
        return _mk(1, [], "ring", {"n": 1})
    if n == 2:
        return _mk(2, [(1, 2)], "ring", {"n": 2})
    pairs = [(k, k + 1) for k in range(1, n)] + [(1, n)]
    return _mk(n, pairs, "ring", {"n": n})


def line(n: int) -> Graph:
    """Open chain of N nodes."""
    if n < 1:
        raise ValueError("line needs n >= 1")
    return _mk(n, [(k, k + 1) for k in range(1, n)], "line", {"n": n})


def lattice2d(m: int, n: int, periodic_x: bool = False, periodic_y: bool = False) -> Graph:
    """M x N square lattice; per-axis periodic flags (torus/cylinder/open).

    Node (x, y) with x in [1,M], y in [1,N] gets label (x-1)*N + y.
    """
    if m < 1 or n < 1:
        raise ValueError("lattice needs positive extents")
    if (periodic_x and m < 3) or (periodic_y and n < 3):
        raise ValueError("periodic axis needs extent >= 3")

    def lab(x, y):
        return (x - 1) * n + y

    pairs = []
    for x in range(1, m + 1):
        for y in range(1, n + 1):
            if x < m:
                pairs.append((lab(x, y), lab(x + 1, y)))
            elif periodic_x:
                pairs.append((lab(x, y), lab(1, y)))
            if y < n:
                pairs.append((lab(x, y), lab(x, y + 1)))
            elif periodic_y:
                pairs.append((lab(x, y), lab(x, 1)))
    return _mk(m * n, pairs, "lattice2d",
               {"m": m, "n": n, "periodic_x": periodic_x, "periodic_y": periodic_y})


def star(n: int) -> Graph:
    """Star of N nodes: hub node 1 bonded to nodes 2..N."""
    if n < 2:
        raise ValueError("star needs n >= 2")
    return _mk(n, [(1, k) for k in range(2, n + 1)], "star", {"n": n})


def complete(n: int) -> Graph:
    """Complete graph K_N."""
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return _mk(n, pairs, "complete", {"n": n})


def dendrimer(f: int, generations: int) -> Graph:
    """Dendrimer: central node of functionality f, G shells, outward branching f-1.

    Node count 1 + f*((f-1)^G - 1)/(f-2) (= 3*2^G - 2 for f=3).  Breadth-first
    numbering: node 1 is the core, then shell by shell.
    """
    if f < 3:
        raise ValueError("dendrimer needs functionality f >= 3")
    if generations < 1:
        raise ValueError("dendrimer needs at least one generation")
    pairs = []
    prev_shell = [1]
    next_label = 2
    for g in range(1, generations + 1):
        branch = f if g == 1 else f - 1
        shell = []
        for parent in prev_shell:
            for _ in range(branch):
                pairs.append((parent, next_label))
                shell.append(next_label)
                next_label += 1
        prev_shell = shell
    return _mk(next_label - 1, pairs, "dendrimer", {"f": f, "generations": generations})


def husimi(generations: int) -> Graph:
    """Husimi cactus: line graph of the f=3 dendrimer of the given generation.

    Nodes are dendrimer bonds; two are bonded when the dendrimer bonds share a
    node.  Gives 3*(2^G - 1) nodes, every node in one or two triangles.
    """
    d = dendrimer(3, generations)
    bonds = [(i, j) for i, j, _ in d.edges]
    nb = len(bonds)
    pairs = []
    for a in range(nb):
        for b in range(a + 1, nb):
            if set(bonds[a]) & set(bonds[b]):
                pairs.append((a + 1, b + 1))
    return _mk(nb, pairs, "husimi", {"generations": generations})


def glued_cayley(generations: int) -> Graph:
    """Two binary Cayley trees of generation G glued at their 2^G leaves.

    Left tree: root plus G levels of binary branching; the right tree is a
    mirror image sharing the leaf level one-to-one in canonical (breadth-first)
    order.  Node count 3*2^G - 2.  Numbering: left root 1, then left levels
    outward, then right levels inward ending at the right root.
    """
    G = generations
    if G < 1:
        raise ValueError("glued Cayley tree needs generation >= 1")
    pairs = []
    # left tree: levels 0..G, level l has 2^l nodes (level G = shared leaves)
    level_start = [1]
    for l in range(1, G + 1):
        level_start.append(level_start[-1] + 2 ** (l - 1))
    for l in range(1, G + 1):
        for k in range(2 ** l):
            child = level_start[l] + k
            parent = level_start[l - 1] + k // 2
            pairs.append((parent, child))
    # right tree levels G-1..0, numbered after the leaves
    n_left = level_start[G] + 2 ** G - 1
    prev = list(range(level_start[G], level_start[G] + 2 ** G))  # leaf labels
    next_label = n_left + 1
    for l in range(G - 1, -1, -1):
        cur = []
        for k in range(2 ** l):
            cur.append(next_label)
            pairs.append((prev[2 * k], next_label))
            pairs.append((prev[2 * k + 1], next_label))
            next_label += 1
        prev = cur
    return _mk(next_label - 1, pairs, "glued_cayley", {"generations": G})


def glued_cayley_partition(generations: int) -> ClusterPartition:
    """Transverse transport clusters of the glued Cayley tree.

    Cluster 1 holds the first half of the shared leaves, cluster 2G+1 the
    second half; in between, each cluster pairs the matching half of one tree
    level with its mirror image in the other tree, and the middle cluster holds
    the two roots.  Sizes are (2^{G-1}, 2^{G-1+...}, ..., 2, 2, 2, ..., 2^{G-1}),
    i.e. d_1 = d_{2G+1} = 2^{G-1}, d_k = 2^{G-k+1} for 2 <= k <= G, d_{G+1}=2.
    """
    G = generations
    g = glued_cayley(G)
    level_start = [1]
    for l in range(1, G + 1):
        level_start.append(level_start[-1] + 2 ** (l - 1))
    n_left = level_start[G] + 2 ** G - 1
    # right-tree level l (l = G-1..0) starts after all deeper right levels
    right_start = {}
    start = n_left + 1
    for l in range(G - 1, -1, -1):
        right_start[l] = start
        start += 2 ** l
    assert start - 1 == g.n_nodes

    def level_half(l, second):
        """First or second half of left level l plus the mirror right level."""
        half = 2 ** (l - 1)
        left = range(level_start[l] + (half if second else 0),
                     level_start[l] + (2 * half if second else half))
        rs = right_start[l]
        right = range(rs + (half if second else 0),
                      rs + (2 * half if second else half))
        return frozenset(left) | frozenset(right)

    leaf0 = level_start[G]
    half_leaves = 2 ** (G - 1)
    clusters = [frozenset(range(leaf0, leaf0 + half_leaves))]
    for l in range(G - 1, 0, -1):
        clusters.append(level_half(l, second=False))
    clusters.append(frozenset({1, g.n_nodes}))  # the two roots
    for l in range(1, G):
        clusters.append(level_half(l, second=True))
    clusters.append(frozenset(range(leaf0 + half_leaves, leaf0 + 2 ** G)))
    return ClusterPartition(tuple(clusters))


def dsg(generation: int) -> Graph:
    """Dual Sierpinski gasket of generation g (3^g nodes, degrees 2 or 3).

    Recursive construction: three copies of generation g-1 joined by one bond
    between each pair of copies at designated corner nodes; generation 1 is a
    triangle.
    """
    if generation < 1:
        raise ValueError("dual Sierpinski gasket needs generation >= 1")

    def build(g):
        # returns (n, pairs, corners) with corners = (c0, c1, c2)
        if g == 1:
            return 3, [(1, 2), (1, 3), (2, 3)], (1, 2, 3)
        n0, p0, c0 = build(g - 1)
        pairs = []
        corners = []
        for copy in range(3):
            off = copy * n0
            pairs.extend((i + off, j + off) for i, j in p0)
            corners.append(tuple(c + off for c in c0))
        # join copy i's corner j with copy j's corner i
        for i in range(3):
            for j in range(i + 1, 3):
                pairs.append((corners[i][j], corners[j][i]))
        return 3 * n0, pairs, tuple(corners[i][i] for i in range(3))

    n, pairs, _ = build(generation)
    return _mk(n, pairs, "dsg", {"generation": generation})


def vicsek(f: int, generation: int) -> Graph:
    """Vicsek-type hyperbranched fractal with (f+1)^g nodes.

    Generation 1 is a star of f+1 nodes.  Generation g+1 takes f+1 copies of
    generation g (one central, f peripheral) and bonds each peripheral copy to
    the central copy through peripheral (outermost, degree-1) nodes.  Node 1 is
    the central node at every generation.
    """
    if f < 3:
        raise ValueError("vicsek fractal needs f >= 3")
    if generation < 1:
        raise ValueError("vicsek fractal needs generation >= 1")

    def build(g):
        # returns (n, pairs, ports) where ports[i], i in 0..f-1, is a distinct
        # degree-1 node used for outward attachment in direction i
        if g == 1:
            return f + 1, [(1, k) for k in range(2, f + 2)], tuple(range(2, f + 2))
        n0, p0, ports0 = build(g - 1)
        pairs = []
        offs = [copy * n0 for copy in range(f + 1)]  # copy 0 is central
        for off in offs:
            pairs.extend((i + off, j + off) for i, j in p0)
        for i in range(f):
            central_port = ports0[i]
            periph = offs[i + 1]
            pairs.append((central_port, periph + ports0[i]))
        # new outward ports: one unused port per peripheral copy
        ports = tuple(offs[i + 1] + ports0[(i + 1) % f] for i in range(f))
        return (f + 1) * n0, pairs, ports

    n, pairs, _ = build(generation)
    return _mk(n, pairs, "vicsek", {"f": f, "generation": generation})


def apollonian(generation: int) -> Graph:
    """Apollonian network: start from a triangle, each step inserts one node
    per active triangle, bonded to its three corners.  N = 3 + (3^G - 1)/2."""
    if generation < 0:
        raise ValueError("apollonian generation must be >= 0")
    pairs = [(1, 2), (1, 3), (2, 3)]
    triangles = [(1, 2, 3)]
    next_label = 4
    for _ in range(generation):
        new_triangles = []
        for (a, b, c) in triangles:
            d = next_label
            next_label += 1
            pairs.extend([(a, d), (b, d), (c, d)])
            new_triangles.extend([(a, b, d), (a, c, d), (b, c, d)])
        triangles = new_triangles
    return _mk(next_label - 1, pairs, "apollonian", {"generation": generation})


def hypercycle(n: int, d: int) -> Graph:
    """d-dimensional hypercycle: d-fold Cartesian product of an N-ring
    (N copies of the (d-1)-dimensional structure with matching nodes bonded)."""
    if n < 3:
        raise ValueError("hypercycle needs ring length >= 3")
    if d < 1:
        raise ValueError("hypercycle needs dimension >= 1")
    total = n ** d
    pairs = []
    for idx in range(total):
        digits = []
        r = idx
        for _ in range(d):
            digits.append(r % n)
            r //= n
        for axis in range(d):
            nb = idx + ((digits[axis] + 1) % n - digits[axis]) * (n ** axis)
            pairs.append((idx + 1, nb + 1))
    return _mk(total, pairs, "hypercycle", {"n": n, "d": d})


# ---------------------------------------------------------------------------
# random families
# ---------------------------------------------------------------------------


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def small_world(n: int, extra_bonds: int, seed: int) -> Graph:
    """Ring of N nodes plus exactly B extra distinct non-ring bonds."""
    max_extra = n * (n - 3) // 2
    if extra_bonds < 0 or extra_bonds > max_extra:
        raise ValueError(f"extra bond count must be in [0, {max_extra}]")
    base = {(i, j) for i, j, _ in ring(n).edges}
    rng = _rng(seed)
    chosen = set()
    tries = 0
    while len(chosen) < extra_bonds:
        i = int(rng.integers(1, n + 1))
        j = int(rng.integers(1, n + 1))
        if i == j:
            continue
        e = (min(i, j), max(i, j))
        if e in base or e in chosen:
            tries += 1
            if tries > 1000 * (extra_bonds + 1) + 10000:
                raise RuntimeError("exhausted retries drawing distinct extra bonds")
            continue
        chosen.add(e)
    pairs = sorted(base | chosen)
    return _mk(n, pairs, "small_world", {"n": n, "extra_bonds": extra_bonds}, seed=seed)


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(N, p) random graph."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0,1]")
    rng = _rng(seed)
    pairs = []
    for i in range(1, n + 1):
        draws = rng.random(n - i)
        for k, u in enumerate(draws):
            if u < p:
                pairs.append((i, i + 1 + k))
    return _mk(n, pairs, "erdos_renyi", {"n": n, "p": p}, seed=seed)


def watts_strogatz(n: int, p_rewire: float, seed: int) -> Graph:
    """Ring with each bond rewired (one endpoint moved) with probability p."""
    if not 0.0 <= p_rewire <= 1.0:
        raise ValueError("rewiring probability must be in [0,1]")
    rng = _rng(seed)
    edges = set((i, j) for i, j, _ in ring(n).edges)
    for e in sorted(edges):
        if rng.random() >= p_rewire:
            continue
        i, j = e
        edges.discard(e)
        for _ in range(100):
            k = int(rng.integers(1, n + 1))
            cand = (min(i, k), max(i, k))
            if k != i and cand not in edges:
                edges.add(cand)
                break
        else:
            edges.add(e)  # could not relocate; keep the original bond
    return _mk(n, sorted(edges), "watts_strogatz", {"n": n, "p_rewire": p_rewire}, seed=seed)


def scale_free(n: int, seed: int) -> Graph:
    """Preferential-attachment tree: each new node attaches one bond to an
    existing node with probability proportional to its degree (P(k) ~ k^-3)."""
    if n < 2:
        raise ValueError("scale-free tree needs n >= 2")
    rng = _rng(seed)
    deg = np.zeros(n + 1)
    pairs = [(1, 2)]
    deg[1] = deg[2] = 1
    for new in range(3, n + 1):
        probs = deg[1:new] / deg[1:new].sum()
        target = int(rng.choice(np.arange(1, new), p=probs))
        pairs.append((target, new))
        deg[target] += 1
        deg[new] = 1
    return _mk(n, pairs, "scale_free", {"n": n}, seed=seed)


# ---------------------------------------------------------------------------
# weighted families
# ---------------------------------------------------------------------------


def long_range_ring(n: int, exponent: float, r_max: int | None = None) -> Graph:
    """Ring with bonds of weight R^-exponent between nodes at ring distance R,
    up to R_max (default floor(N/2); the single antipodal bond for even N is
    counted once)."""
    if exponent < 2 and not np.isinf(exponent):
        raise ValueError("long-range exponent must be >= 2 (or inf)")
    if r_max is None:
        r_max = n // 2
    if not 1 <= r_max <= n // 2:
        raise ValueError("r_max out of range")
    if np.isinf(exponent):
        return ring(n)
    pairs, weights = [], []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            dist = min(j - i, n - (j - i))
            if dist <= r_max:
                pairs.append((i, j))
                weights.append(float(dist) ** (-exponent))
    return _mk(n, pairs, "long_range_ring",
               {"n": n, "exponent": exponent, "r_max": r_max}, weights=weights)


def long_range_chain(n: int, exponent: float) -> Graph:
    """Open chain with all-pair bonds of weight |k-j|^-exponent (no wraparound)."""
    if exponent < 2:
        raise ValueError("long-range exponent must be >= 2")
    pairs, weights = [], []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            pairs.append((i, j))
            weights.append(float(j - i) ** (-exponent))
    return _mk(n, pairs, "long_range_chain", {"n": n, "exponent": exponent}, weights=weights)


def m_neighbor_ring(n: int, m: int) -> Graph:
    """Ring where every node is bonded to its 2m nearest neighbors."""
    if not 1 <= m < n / 2:
        raise ValueError("need 1 <= m < N/2")
    pairs = []
    for i in range(1, n + 1):
        for r in range(1, m + 1):
            j = (i - 1 + r) % n + 1
            pairs.append((min(i, j), max(i, j)))
    return _mk(n, set(pairs), "m_neighbor_ring", {"n": n, "m": m})


def random_geometric(n: int, seed: int, coordinates: np.ndarray | None = None) -> Graph:
    """N nodes uniform in the box [0,N]^3, all pairs bonded with weight R^-3."""
    if n < 2:
        raise ValueError("random geometric graph needs n >= 2")
    if coordinates is None:
        coordinates = _rng(seed).uniform(0.0, float(n), size=(n, 3))
    coords = np.asarray(coordinates, dtype=float)
    pairs, weights = [], []
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(coords[i] - coords[j]))
            if r == 0.0:
                raise ValueError("coincident nodes in geometric graph")
            pairs.append((i + 1, j + 1))
            weights.append(r ** -3)
    return _mk(n, pairs, "random_geometric", {"n": n}, coords=coords, seed=seed,
               weights=weights)


# ---------------------------------------------------------------------------
# coupling matrices
# ---------------------------------------------------------------------------


def coupling_matrix(g: Graph, gamma: float = 1.0) -> CouplingMatrix:
    """Weighted Laplacian scaled by the transfer rate gamma."""
    if gamma <= 0:
        raise ValueError("rate gamma must be positive")
    a = g.adjacency()
    h = np.diag(a.sum(axis=1)) - a
    return CouplingMatrix(g.n_nodes, gamma * h, gamma)


def collapse_clusters(g: Graph, p: ClusterPartition, gamma: float = 1.0) -> CollapsedMatrix:
    """Collapse a walk onto totally symmetric cluster states.

    With clusters of sizes d_k and b_k bonds between consecutive clusters, the
    collapsed matrix is tridiagonal with the common node functionality on the
    diagonal and -b_k/sqrt(d_k d_{k+1}) next to it.  Raises if the partition
    mixes functionalities inside a cluster or links non-consecutive clusters.
    """
    clusters = [sorted(c) for c in p.clusters]
    flat = [v for c in clusters for v in c]
    if sorted(flat) != list(range(1, g.n_nodes + 1)):
        raise ValueError("clusters must partition the node set")
    where = {}
    for k, c in enumerate(clusters):
        for v in c:
            where[v] = k
    nc = len(clusters)
    bonds = np.zeros((nc, nc))
    for i, j, w in g.edges:
        a, b = where[i], where[j]
        bonds[a, b] += w
        bonds[b, a] += w
    for a in range(nc):
        for b in range(a + 2, nc):
            if bonds[a, b] != 0:
                raise ValueError("partition links non-consecutive clusters")
    for k in range(nc - 1):
        if bonds[k, k + 1] == 0:
            raise ValueError("consecutive clusters must be connected")
    deg = g.degrees()
    f_k = []
    for c in clusters:
        fs = {deg[v - 1] for v in c}
        if len(fs) != 1:
            raise ValueError("mixed functionality inside a cluster")
        f_k.append(fs.pop())
    d_k = [len(c) for c in clusters]
    m = np.zeros((nc, nc))
    for k in range(nc):
        m[k, k] = f_k[k]
        if k + 1 < nc:
            off = -bonds[k, k + 1] / np.sqrt(d_k[k] * d_k[k + 1])
            m[k, k + 1] = m[k + 1, k] = off
    b_list = tuple(float(bonds[k, k + 1]) for k in range(nc - 1))
    return CollapsedMatrix(nc, gamma * m, tuple(d_k), b_list)


# ---------------------------------------------------------------------------
# JSON exchange
# ---------------------------------------------------------------------------


def graph_to_json(g: Graph) -> str:
    """Serialize to the stable exchange format (1-based, sorted edges)."""
    obj = {
        "n": g.n_nodes,
        "edges": [[i, j, w] for i, j, w in sorted(g.edges)],
        "family": g.family,
        "params": g.params,
    }
    if g.coordinates is not None:
        obj["coords"] = [list(map(float, c)) for c in g.coordinates]
    if g.seed is not None:
        obj["seed"] = g.seed
    return json.dumps(obj, sort_keys=True)


def graph_from_json(text: str) -> Graph:
    obj = json.loads(text)
    coords = np.asarray(obj["coords"], dtype=float) if "coords" in obj else None
    edges = tuple((int(i), int(j), float(w)) for i, j, w in obj["edges"])
    return Graph(int(obj["n"]), edges, obj.get("family", "custom"),
                 dict(obj.get("params", {})), coords, obj.get("seed"))
