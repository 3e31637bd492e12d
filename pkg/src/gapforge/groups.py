"""Finitely generated type-I groups: an abelian lattice part Z^d extended by a
finite group acting through integer matrices.

Elements are pairs (lattice vector, finite index) with the product

    (a, f) * (b, g) = (a + act(f) b, f g),

so ``product_kind="abelian"`` means a trivial finite part, ``"direct"`` a
finite part acting trivially, and ``"semidirect"`` the general split case.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StructuralError

MAX_FINITE_ORDER = 48

# A relation word is a sequence of (generator index, +1 | -1) letters whose
# product is the identity; fibers re-check these on their matrices.
Word = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class GroupElement:
    """One group element: integer lattice vector plus finite-part index."""

    lattice: tuple[int, ...]
    finite: int = 0

    def __repr__(self):
        return f"({','.join(str(x) for x in self.lattice)};{self.finite})"


@dataclass(eq=False)
class GroupSpec:
    """A finitely generated group given as Z^d extended by an explicit finite part.

    Attributes:
        abelian_rank: rank d of the lattice part.
        finite_table: multiplication table over indices 0..|F|-1, identity at 0.
        action: one integer d x d matrix per finite index (automorphisms of Z^d).
        generators: the ordered gluing generators; their count r fixes the
            number of port pairs on any fundamental domain built for this group.
        product_kind: "abelian", "direct" or "semidirect".
        relations: relation words used to validate representation fibers.
        finite_name: catalogue label of the finite part ("trivial", "cyclic:4",
            "dihedral:3", "S3"); representation fibers are only available for
            catalogue finite parts.
    """

    name: str
    abelian_rank: int
    finite_table: tuple[tuple[int, ...], ...]
    action: tuple[np.ndarray, ...]
    generators: tuple[GroupElement, ...]
    product_kind: str
    relations: tuple[Word, ...] = ()
    finite_name: str = "trivial"
    finite_labels: tuple[str, ...] = field(default=())

    @property
    def finite_order(self) -> int:
        return len(self.finite_table)

    @property
    def generator_count(self) -> int:
        return len(self.generators)

    @property
    def is_abelian_kind(self) -> bool:
        return self.finite_order == 1

    def finite_mul(self, f: int, g: int) -> int:
        return self.finite_table[f][g]

    def finite_inv(self, f: int) -> int:
        return self.finite_table[f].index(0)


def identity(spec: GroupSpec) -> GroupElement:
    return GroupElement((0,) * spec.abelian_rank, 0)


def compose(g: GroupElement, h: GroupElement, spec: GroupSpec) -> GroupElement:
    """Group law (a,f)*(b,g) = (a + act(f) b, fg)."""
    _check_element(g, spec)
    _check_element(h, spec)
    lat = np.asarray(g.lattice, dtype=int) + spec.action[g.finite] @ np.asarray(h.lattice, dtype=int)
    return GroupElement(tuple(int(x) for x in lat), spec.finite_mul(g.finite, h.finite))


def inverse(g: GroupElement, spec: GroupSpec) -> GroupElement:
    """(a,f)^-1 = (-act(f^-1) a, f^-1)."""
    _check_element(g, spec)
    fi = spec.finite_inv(g.finite)
    lat = -(spec.action[fi] @ np.asarray(g.lattice, dtype=int))
    return GroupElement(tuple(int(x) for x in lat), fi)


def evaluate_word(word: Word, spec: GroupSpec) -> GroupElement:
    """Product of generators^(+-1) along a relation word."""
    out = identity(spec)
    for gen_idx, sign in word:
        step = spec.generators[gen_idx]
        if sign < 0:
            step = inverse(step, spec)
        out = compose(out, step, spec)
    return out


def word_norms(spec: GroupSpec, radius: int) -> dict[GroupElement, int]:
    """Word norm of every element of the radius-`radius` generator ball."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    steps = [g for g in spec.generators]
    steps += [inverse(g, spec) for g in spec.generators]
    norm = {identity(spec): 0}
    frontier = [identity(spec)]
    for dist in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in steps:
                h = compose(g, s, spec)
                if h not in norm:
                    norm[h] = dist
                    nxt.append(h)
        frontier = nxt
    return norm


def word_ball(spec: GroupSpec, radius: int) -> list[GroupElement]:
    """All products of at most `radius` generators or inverse generators.

    Returned sorted by (word norm, lattice, finite index) so downstream
    enumeration is deterministic.
    """
    norm = word_norms(spec, radius)
    return sorted(norm, key=lambda e: (norm[e], e.lattice, e.finite))


@dataclass
class GroupValidation:
    ok: bool
    violations: list[str]


def validate_group_spec(spec: GroupSpec) -> GroupValidation:
    """Check every structural invariant; report violations instead of raising."""
    v: list[str] = []
    n = spec.finite_order
    if n < 1 or n > MAX_FINITE_ORDER:
        v.append(f"finite part order {n} outside 1..{MAX_FINITE_ORDER}")
        return GroupValidation(False, v)
    table = spec.finite_table
    if any(len(row) != n for row in table):
        v.append("finite table is not square")
        return GroupValidation(False, v)
    if any(x < 0 or x >= n for row in table for x in row):
        v.append("finite table entry out of range")
        return GroupValidation(False, v)
    for f in range(n):
        if table[0][f] != f or table[f][0] != f:
            v.append(f"index 0 is not an identity at {f}")
    for f in range(n):
        if sorted(table[f]) != list(range(n)):
            v.append(f"row {f} is not a permutation")
        if sorted(table[g][f] for g in range(n)) != list(range(n)):
            v.append(f"column {f} is not a permutation")
    for a, b, c in itertools.product(range(n), repeat=3):
        if table[table[a][b]][c] != table[a][table[b][c]]:
            v.append(f"non-associative triple ({a},{b},{c})")
            break
    d = spec.abelian_rank
    if len(spec.action) != n:
        v.append("action must give one matrix per finite element")
    else:
        for f, mat in enumerate(spec.action):
            if mat.shape != (d, d):
                v.append(f"action[{f}] has shape {mat.shape}, expected ({d},{d})")
                continue
            if not np.issubdtype(mat.dtype, np.integer):
                v.append(f"action[{f}] is not integer")
            if abs(round(float(np.linalg.det(mat)))) != 1:
                v.append(f"action[{f}] has determinant != +-1")
        if not v:
            if not np.array_equal(spec.action[0], np.eye(d, dtype=int)):
                v.append("identity must act as the identity matrix")
            for f, g in itertools.product(range(n), repeat=2):
                if not np.array_equal(spec.action[table[f][g]], spec.action[f] @ spec.action[g]):
                    v.append(f"action is not a homomorphism at ({f},{g})")
                    break
    for i, gen in enumerate(spec.generators):
        if len(gen.lattice) != d:
            v.append(f"generator {i} lattice length {len(gen.lattice)} != rank {d}")
        if gen.finite < 0 or gen.finite >= n:
            v.append(f"generator {i} finite index out of range")
    if not v:
        closure = {0}
        frontier = {0}
        gens_f = {g.finite for g in spec.generators}
        while frontier:
            nxt = set()
            for f in frontier:
                for h in gens_f:
                    nxt.add(table[f][h])
                    nxt.add(table[h][f])
            frontier = nxt - closure
            closure |= nxt
        if closure != set(range(n)):
            v.append("generators do not generate the finite part")
    if spec.product_kind not in ("abelian", "direct", "semidirect"):
        v.append(f"unknown product_kind {spec.product_kind!r}")
    elif spec.product_kind == "abelian" and n != 1:
        v.append("abelian product_kind requires a trivial finite part")
    elif spec.product_kind == "direct":
        if any(not np.array_equal(m, np.eye(d, dtype=int)) for m in spec.action):
            v.append("direct product_kind requires a trivial action")
    if not v:
        for w, word in enumerate(spec.relations):
            if evaluate_word(word, spec) != identity(spec):
                v.append(f"relation word {w} does not evaluate to the identity")
    return GroupValidation(not v, v)


def _check_element(g: GroupElement, spec: GroupSpec) -> None:
    if len(g.lattice) != spec.abelian_rank:
        raise StructuralError(
            f"element lattice length {len(g.lattice)} does not match rank {spec.abelian_rank}")
    if g.finite < 0 or g.finite >= spec.finite_order:
        raise StructuralError(f"finite index {g.finite} out of range for |F|={spec.finite_order}")


# ---------------------------------------------------------------------------
# finite-part tables


def cyclic_table(m: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple((i + j) % m for j in range(m)) for i in range(m))


def dihedral_table(m: int) -> tuple[tuple[int, ...], ...]:
    """Dihedral group of order 2m; index j is rot^j, index m+j is ref*rot^j."""

    def mul(a, b):
        ra, ja = divmod(a, m)
        rb, jb = divmod(b, m)
        if ra == 0 and rb == 0:
            return (ja + jb) % m
        if ra == 0 and rb == 1:
            return m + (jb - ja) % m
        if ra == 1 and rb == 0:
            return m + (ja + jb) % m
        return (jb - ja) % m

    return tuple(tuple(mul(a, b) for b in range(2 * m)) for a in range(2 * m))


_S3_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def s3_table() -> tuple[tuple[int, ...], ...]:
    """S3 on permutation tuples in lexicographic order (identity first)."""
    idx = {p: i for i, p in enumerate(_S3_PERMS)}

    def mul(a, b):
        pa, pb = _S3_PERMS[a], _S3_PERMS[b]
        return idx[tuple(pa[pb[i]] for i in range(3))]

    return tuple(tuple(mul(a, b) for b in range(6)) for a in range(6))


def _commutator_words(r: int) -> tuple[Word, ...]:
    words = []
    for i in range(r):
        for j in range(i + 1, r):
            words.append(((i, 1), (j, 1), (i, -1), (j, -1)))
    return tuple(words)


def _basis(d: int, i: int) -> tuple[int, ...]:
    return tuple(1 if k == i else 0 for k in range(d))


# ---------------------------------------------------------------------------
# built-in catalogue


def builtin_group(name: str) -> GroupSpec:
    """Construct a built-in group spec by name.

    Supported names: "Z1".."Z3" / "Zd:1".."Zd:3", "cyclic:m" (m <= 12),
    "dihedral:m" (m <= 6), "S3", "inf-dihedral", "Z2xZ2-semidirect".
    """
    trivial = ((0,),)
    if name in ("Z1", "Z2", "Z3") or name.startswith("Zd:"):
        d = int(name[1]) if name.startswith("Z") and ":" not in name else int(name.split(":")[1])
        if d < 1 or d > 3:
            raise ValueError(f"lattice rank {d} outside 1..3")
        return GroupSpec(
            name=f"Zd:{d}",
            abelian_rank=d,
            finite_table=trivial,
            action=(np.eye(d, dtype=int),),
            generators=tuple(GroupElement(_basis(d, i), 0) for i in range(d)),
            product_kind="abelian",
            relations=_commutator_words(d),
            finite_name="trivial",
        )
    if name.startswith("cyclic:"):
        m = int(name.split(":")[1])
        if m < 1 or m > 12:
            raise ValueError(f"cyclic order {m} outside 1..12")
        return GroupSpec(
            name=name,
            abelian_rank=0,
            finite_table=cyclic_table(m),
            action=tuple(np.zeros((0, 0), dtype=int) for _ in range(m)),
            generators=(GroupElement((), 1 % m),),
            product_kind="direct",
            relations=(tuple((0, 1) for _ in range(m)),),
            finite_name=name,
            finite_labels=tuple(f"g^{j}" for j in range(m)),
        )
    if name.startswith("dihedral:"):
        m = int(name.split(":")[1])
        if m < 1 or m > 6:
            raise ValueError(f"dihedral order parameter {m} outside 1..6")
        rot, ref = GroupElement((), 1 % m), GroupElement((), m)
        relations = (
            tuple((0, 1) for _ in range(m)),        # rot^m
            ((1, 1), (1, 1)),                       # ref^2
            ((1, 1), (0, 1), (1, 1), (0, 1)),       # (ref*rot)^2
        )
        labels = tuple(f"rot^{j}" for j in range(m)) + tuple(f"ref*rot^{j}" for j in range(m))
        return GroupSpec(
            name=name,
            abelian_rank=0,
            finite_table=dihedral_table(m),
            action=tuple(np.zeros((0, 0), dtype=int) for _ in range(2 * m)),
            generators=(rot, ref),
            product_kind="direct",
            relations=relations,
            finite_name=name,
            finite_labels=labels,
        )
    if name == "S3":
        # generators: 3-cycle (1,2,0) at index 3, transposition (1,0,2) at index 2
        relations = (
            ((0, 1), (0, 1), (0, 1)),
            ((1, 1), (1, 1)),
            ((1, 1), (0, 1), (1, 1), (0, 1)),
        )
        return GroupSpec(
            name="S3",
            abelian_rank=0,
            finite_table=s3_table(),
            action=tuple(np.zeros((0, 0), dtype=int) for _ in range(6)),
            generators=(GroupElement((), 3), GroupElement((), 2)),
            product_kind="direct",
            relations=relations,
            finite_name="S3",
            finite_labels=tuple("".join(map(str, p)) for p in _S3_PERMS),
        )
    if name == "inf-dihedral":
        # Z x| Z2 with the flip negating the lattice; generators: translation, flip
        return GroupSpec(
            name=name,
            abelian_rank=1,
            finite_table=cyclic_table(2),
            action=(np.eye(1, dtype=int), -np.eye(1, dtype=int)),
            generators=(GroupElement((1,), 0), GroupElement((0,), 1)),
            product_kind="semidirect",
            relations=(
                ((1, 1), (1, 1)),                   # s^2
                ((1, 1), (0, 1), (1, 1), (0, 1)),   # s t s t = e, i.e. s t s = t^-1
            ),
            finite_name="cyclic:2",
            finite_labels=("e", "s"),
        )
    if name == "Z2xZ2-semidirect":
        # Z^2 x| Z2, flip acting by negation; two point-flip generators
        return GroupSpec(
            name=name,
            abelian_rank=2,
            finite_table=cyclic_table(2),
            action=(np.eye(2, dtype=int), -np.eye(2, dtype=int)),
            generators=(GroupElement((1, 0), 1), GroupElement((0, 1), 1)),
            product_kind="semidirect",
            relations=(
                ((0, 1), (0, 1)),
                ((1, 1), (1, 1)),
            ),
            finite_name="cyclic:2",
            finite_labels=("e", "s"),
        )
    raise ValueError(f"unknown built-in group {name!r}")


BUILTIN_NAMES = (
    "Z1", "Z2", "Z3",
    "cyclic:2", "cyclic:3", "cyclic:4", "cyclic:6", "cyclic:12",
    "dihedral:3", "dihedral:4", "dihedral:6",
    "S3", "inf-dihedral", "Z2xZ2-semidirect",
)


def group_from_config(obj) -> GroupSpec:
    """Build a GroupSpec from a config value: a name string or an inline object.

    Inline form:
        {"abelian_rank": d, "finite_part": "<catalogue name>",
         "action": [[..d x d..], ...],   # one per finite element, optional
         "generators": [{"lattice": [...], "finite": k}, ...],
         "product_kind": "direct" | "semidirect"}
    """
    if isinstance(obj, str):
        return builtin_group(obj)
    if not isinstance(obj, dict):
        raise StructuralError("group config must be a name string or an object")
    required = {"abelian_rank", "finite_part", "generators", "product_kind"}
    unknown = set(obj) - required - {"action", "name"}
    if unknown:
        raise StructuralError(f"unknown group config keys: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise StructuralError(f"missing group config keys: {sorted(missing)}")
    base = builtin_group(obj["finite_part"]) if obj["finite_part"] != "trivial" else None
    if base is not None and base.abelian_rank != 0:
        raise StructuralError("finite_part must name a rank-0 catalogue group")
    table = base.finite_table if base is not None else ((0,),)
    labels = base.finite_labels if base is not None else ()
    d = int(obj["abelian_rank"])
    nf = len(table)
    if "action" in obj:
        action = tuple(np.asarray(m, dtype=int) for m in obj["action"])
    else:
        action = tuple(np.eye(d, dtype=int) for _ in range(nf))
    gens = tuple(
        GroupElement(tuple(int(x) for x in g["lattice"]), int(g.get("finite", 0)))
        for g in obj["generators"]
    )
    spec = GroupSpec(
        name=obj.get("name", "custom"),
        abelian_rank=d,
        finite_table=table,
        action=action,
        generators=gens,
        product_kind=obj["product_kind"],
        relations=(),
        finite_name=obj["finite_part"],
        finite_labels=labels,
    )
    report = validate_group_spec(spec)
    if not report.ok:
        raise StructuralError("invalid group config: " + "; ".join(report.violations))
    return spec
