"""Discrete fundamental domains and finite cover patches.

A domain is a weighted graph: an N x N chamber with 2r neck strips (one
"left" and one "right" per generator) whose terminal layer is marked as
ports.  The junction parameter scales the thin part of a neck: edges incident
to a port carry weight epsilon and port vertices carry mass epsilon/2, so a
junction shrinks in conductance and volume together while its internal
dynamics stay order one.  Identifying the left and right ports of a copy
restores full junction mass epsilon; gluing word-ball translates of the
domain yields a finite patch of the covering graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, StructuralError
from .groups import GroupElement, GroupSpec, compose, inverse, word_norms


@dataclass(frozen=True)
class PortRole:
    generator: int
    side: str  # "left" | "right"
    slot: int


@dataclass(eq=False)
class DiscretizedDomain:
    """Weighted-graph fundamental domain with paired port vertex sets."""

    weights: np.ndarray                      # vertex masses
    roles: list[PortRole | None]             # None marks an interior vertex
    edges: list[tuple[int, int, float]]
    epsilon: float
    generator_count: int
    port_width: int
    chamber_size: int = 0
    neck_length: int = 0

    @property
    def vertex_count(self) -> int:
        return len(self.weights)

    def interior_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is None]

    def port_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is not None]

    def port_pairs(self) -> dict[tuple[int, int], tuple[int, int]]:
        """(generator, slot) -> (left vertex, right vertex)."""
        left, right = {}, {}
        for i, r in enumerate(self.roles):
            if r is None:
                continue
            (left if r.side == "left" else right)[(r.generator, r.slot)] = i
        if sorted(left) != sorted(right):
            raise StructuralError("left/right port sets are not in bijection")
        return {key: (left[key], right[key]) for key in sorted(left)}


def build_domain(chamber_size: int, generator_count: int, port_width: int,
                 epsilon: float, neck_length: int) -> DiscretizedDomain:
    """Chamber grid with 2r neck strips, terminal layers marked as ports.

    Vertices are ordered chamber row-major, then necks by (generator, side,
    layer, slot); neck attachment sites are evenly spaced along the boundary
    cycle in the order gen-0 left, gen-0 right, gen-1 left, ...
    """
    N, r, w, L = chamber_size, generator_count, port_width, neck_length
    if N < 2:
        raise StructuralError(f"chamber_size must be >= 2, got {N}")
    if r < 1 or w < 1 or L < 1:
        raise StructuralError("generator_count, port_width and neck_length must be >= 1")
    if not 0.0 < epsilon <= 1.0:
        raise StructuralError(f"epsilon must lie in (0, 1], got {epsilon}")

    weights: list[float] = []
    roles: list[PortRole | None] = []
    index: dict = {}

    def add(key, mass, role=None):
        index[key] = len(weights)
        weights.append(mass)
        roles.append(role)

    for i in range(N):
        for j in range(N):
            add(("chamber", i, j), 1.0)
    edges: list[tuple[int, int, float]] = []
    for i in range(N):
        for j in range(N):
            if j + 1 < N:
                edges.append((index[("chamber", i, j)], index[("chamber", i, j + 1)], 1.0))
            if i + 1 < N:
                edges.append((index[("chamber", i, j)], index[("chamber", i + 1, j)], 1.0))

    cycle = boundary_cycle(N)
    P = len(cycle)
    if 2 * r * w > P:
        raise StructuralError(
            f"{2 * r} ports of width {w} do not fit on a boundary of {P} vertices")
    sites = [(k * P) // (2 * r) for k in range(2 * r)]
    spans = [set((s + j) % P for j in range(w)) for s in sites]
    for a in range(len(spans)):
        for b in range(a + 1, len(spans)):
            if spans[a] & spans[b]:
                raise StructuralError("port attachment sites overlap")

    half_port = 0.5 * epsilon
    necks = [(g, side) for g in range(r) for side in ("left", "right")]
    for k, (g, side) in enumerate(necks):
        for layer in range(1, L + 1):
            for slot in range(w):
                is_port = layer == L
                add(("neck", k, layer, slot),
                    half_port if is_port else 1.0,
                    PortRole(g, side, slot) if is_port else None)
        for slot in range(w):
            boundary_vertex = index[("chamber",) + cycle[(sites[k] + slot) % P]]
            edges.append((boundary_vertex, index[("neck", k, 1, slot)],
                          epsilon if L == 1 else 1.0))
            for layer in range(1, L):
                edges.append((index[("neck", k, layer, slot)],
                              index[("neck", k, layer + 1, slot)],
                              epsilon if layer + 1 == L else 1.0))
        for layer in range(1, L + 1):
            for slot in range(w - 1):
                edges.append((index[("neck", k, layer, slot)],
                              index[("neck", k, layer, slot + 1)],
                              epsilon if layer == L else 1.0))

    return DiscretizedDomain(
        weights=np.array(weights),
        roles=roles,
        edges=edges,
        epsilon=epsilon,
        generator_count=r,
        port_width=w,
        chamber_size=N,
        neck_length=L,
    )


def boundary_cycle(N: int) -> list[tuple[int, int]]:
    """Perimeter vertices of the N x N grid in cyclic order, starting at (0,0)."""
    if N == 2:
        return [(0, 0), (0, 1), (1, 1), (1, 0)]
    out = [(0, j) for j in range(N)]
    out += [(i, N - 1) for i in range(1, N)]
    out += [(N - 1, j) for j in range(N - 2, -1, -1)]
    out += [(i, 0) for i in range(N - 2, 0, -1)]
    return out


@dataclass
class DomainValidation:
    ok: bool
    violations: list[str]


def validate_domain(domain: DiscretizedDomain) -> DomainValidation:
    """Check the structural invariants of a domain; report, never raise."""
    v: list[str] = []
    try:
        pairs = domain.port_pairs()
    except StructuralError as exc:
        return DomainValidation(False, [str(exc)])
    per_gen: dict[int, set[int]] = {}
    for (g, slot), _ in pairs.items():
        per_gen.setdefault(g, set()).add(slot)
    for g, slots in per_gen.items():
        if slots != set(range(domain.port_width)):
            v.append(f"generator {g} port slots {sorted(slots)} != 0..{domain.port_width - 1}")
    if set(per_gen) != set(range(domain.generator_count)):
        v.append("ports do not cover every generator")
    port_set = set(domain.port_indices())
    expected_edge = domain.epsilon
    for u, vtx, w in domain.edges:
        touches_port = u in port_set or vtx in port_set
        if touches_port and abs(w - expected_edge) > 1e-12:
            v.append(f"neck edge ({u},{vtx}) weight {w} != epsilon {expected_edge}")
        if w <= 0:
            v.append(f"edge ({u},{vtx}) has non-positive weight")
    half = 0.5 * domain.epsilon
    for i in port_set:
        if abs(domain.weights[i] - half) > 1e-12:
            v.append(f"port vertex {i} mass {domain.weights[i]} != epsilon/2 = {half}")
    for i, mass in enumerate(domain.weights):
        if mass <= 0:
            v.append(f"vertex {i} has non-positive mass")
    if not _connected(domain.vertex_count, domain.edges):
        v.append("domain graph is not connected")
    return DomainValidation(not v, v)


def _connected(n, edges) -> bool:
    if n == 0:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == n


# ---------------------------------------------------------------------------
# cover patches


@dataclass(eq=False)
class CoverPatch:
    """Word-ball truncation of the covering graph.

    Vertices are classes of (group element, domain vertex) pairs; the right
    port (i, s) of copy gamma is the same cover point as the left port (i, s)
    of copy eps_i * gamma whenever both copies lie in the ball.  The group
    acts on copy labels by right multiplication, which is the unique action
    compatible with that seam rule for non-abelian groups.
    """

    domain: DiscretizedDomain
    spec: GroupSpec
    radius: int
    ball: list[GroupElement]
    copy_norm: dict[GroupElement, int]
    vertex_index: dict[tuple[GroupElement, int], int]
    vertex_keys: list[tuple[GroupElement, int]]
    weights: np.ndarray
    edges: list[tuple[int, int, float]]
    # every (copy, domain vertex) decomposition of each cover vertex;
    # identified seam vertices have two, all others one
    aliases: list[list[tuple[GroupElement, int]]] = field(default_factory=list)
    _left_of: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return len(self.weights)

    def canonical_key(self, gamma: GroupElement, vid: int) -> tuple[GroupElement, int]:
        """Resolve a (copy, domain vertex) pair through the seam identification."""
        role = self.domain.roles[vid]
        if role is not None and role.side == "right":
            target = compose(self.spec.generators[role.generator], gamma, self.spec)
            if target in self.copy_norm:
                return (target, self._left_of[(role.generator, role.slot)])
        return (gamma, vid)

    def index_of(self, gamma: GroupElement, vid: int) -> int:
        return self.vertex_index[self.canonical_key(gamma, vid)]

    def fully_identified(self, idx: int) -> bool:
        """True unless the vertex is a seam point whose partner copy was truncated."""
        copy, vid = self.vertex_keys[idx]
        role = self.domain.roles[vid]
        if role is None:
            return True
        if role.side == "right":
            return False   # a canonical right-port key only survives when dangling
        partner = compose(inverse(self.spec.generators[role.generator], self.spec),
                          copy, self.spec)
        return partner in self.copy_norm


def build_cover_patch(domain: DiscretizedDomain, spec: GroupSpec, radius: int) -> CoverPatch:
    """Glue one copy of the domain per word-ball element.

    Identified port pairs recombine their epsilon/2 masses into the full
    junction mass; ports on the truncation boundary stay half-weight.
    """
    if radius < 0:
        raise PreconditionError(f"radius must be >= 0, got {radius}")
    if spec.generator_count != domain.generator_count:
        raise StructuralError(
            f"domain has {domain.generator_count} port pairs but the group has "
            f"{spec.generator_count} generators")
    norm = word_norms(spec, radius)
    ball = sorted(norm, key=lambda e: (norm[e], e.lattice, e.finite))
    left_of = {key: pair[0] for key, pair in domain.port_pairs().items()}
    patch = CoverPatch(
        domain=domain, spec=spec, radius=radius, ball=ball, copy_norm=norm,
        vertex_index={}, vertex_keys=[], weights=np.zeros(0), edges=[],
        _left_of=left_of,
    )
    weights: list[float] = []
    for gamma in ball:
        for vid in range(domain.vertex_count):
            key = patch.canonical_key(gamma, vid)
            if key not in patch.vertex_index:
                patch.vertex_index[key] = len(weights)
                patch.vertex_keys.append(key)
                patch.aliases.append([])
                weights.append(0.0)
            idx = patch.vertex_index[key]
            weights[idx] += float(domain.weights[vid])
            patch.aliases[idx].append((gamma, vid))
    patch.weights = np.array(weights)
    for gamma in ball:
        for u, v, w in domain.edges:
            patch.edges.append((patch.index_of(gamma, u), patch.index_of(gamma, v), w))
    return patch


def translate(point: int, gamma: GroupElement, patch: CoverPatch) -> int | None:
    """Image of a patch vertex under the deck transformation by gamma.

    Copy labels multiply on the right; returns None when the image leaves the
    truncated ball.
    """
    copy, vid = patch.vertex_keys[point]
    target = compose(copy, gamma, patch.spec)
    key = patch.canonical_key(target, vid)
    if key[0] not in patch.copy_norm:
        return None
    idx = patch.vertex_index.get(key)
    return idx


# ---------------------------------------------------------------------------
# JSON round trip


def domain_to_json(domain: DiscretizedDomain) -> str:
    doc = {
        "epsilon": domain.epsilon,
        "generator_count": domain.generator_count,
        "port_width": domain.port_width,
        "chamber_size": domain.chamber_size,
        "neck_length": domain.neck_length,
        "vertices": [
            {
                "id": i,
                "weight": float(domain.weights[i]),
                "role": None if r is None else
                    {"generator": r.generator, "side": r.side, "slot": r.slot},
            }
            for i, r in enumerate(domain.roles)
        ],
        "edges": [[u, v, w] for u, v, w in domain.edges],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def domain_from_json(text: str) -> DiscretizedDomain:
    doc = json.loads(text)
    vertices = sorted(doc["vertices"], key=lambda x: x["id"])
    roles: list[PortRole | None] = []
    weights = []
    for v in vertices:
        weights.append(float(v["weight"]))
        role = v["role"]
        roles.append(None if role is None else
                     PortRole(int(role["generator"]), role["side"], int(role["slot"])))
    return DiscretizedDomain(
        weights=np.array(weights),
        roles=roles,
        edges=[(int(u), int(v), float(w)) for u, v, w in doc["edges"]],
        epsilon=float(doc["epsilon"]),
        generator_count=int(doc["generator_count"]),
        port_width=int(doc["port_width"]),
        chamber_size=int(doc.get("chamber_size", 0)),
        neck_length=int(doc.get("neck_length", 0)),
    )
