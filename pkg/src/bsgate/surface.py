"""Data model and validation for branched-surface complexes.

A complex is presented combinatorially: *sectors* (compact connected
surfaces with genus and cyclic boundary words), *branch segments* (the
smooth pieces of the branch locus, each with a merged ``one`` side and an
``up``/``lo`` pair of branching sides), and signed *double points* where
two branch curves cross transversally.

Boundary words are read counterclockwise (sector interior on the left).
Along a segment the ``one``-side edge runs from ``end0`` to ``end1``; the
``up`` and ``lo`` edges run the other way.  Input documents are expected
to orient their ``end0``/``end1`` labels accordingly; ``validate`` checks
this by matching the vertex items flanking every edge item against the
segment's declared ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Union

from .errors import AmbiguousRoles, NoConsistentRoles

SIDES = ("one", "up", "lo")

ROLES = ("z", "x", "u", "v", "w", "y")


@dataclass(frozen=True)
class SegItem:
    """Edge item: one side of a branch segment on a sector boundary."""

    seg: str
    side: str  # 'one' | 'up' | 'lo'


@dataclass(frozen=True)
class FreeItem:
    """Edge item: a boundary arc away from the branch locus."""

    label: str


EdgeItem = Union[SegItem, FreeItem]


@dataclass(frozen=True)
class BoundaryWord:
    """Cyclic alternation of edge items and vertex items.

    ``verts[i]`` sits between ``items[i]`` and ``items[(i+1) % n]``; a
    vertex is a double-point id or ``None`` for a smooth vertex.
    """

    items: tuple[EdgeItem, ...]
    verts: tuple[Union[str, None], ...]

    def __post_init__(self):
        if len(self.items) != len(self.verts):
            raise ValueError("boundary word needs one vertex per edge item")


@dataclass(frozen=True)
class Sector:
    id: str
    genus: int
    words: tuple[BoundaryWord, ...]

    def euler(self) -> int:
        return 2 - 2 * self.genus - len(self.words)


@dataclass(frozen=True)
class SegmentEnd:
    """Arc-segment endpoint: a double-point slot or a free end."""

    dp: Union[str, None]  # None = free end
    slot: Union[int, None] = None


FREE_END = SegmentEnd(None, None)


@dataclass(frozen=True)
class BranchSegment:
    id: str
    kind: str  # 'arc' | 'circle'
    one: str
    up: str
    lo: str
    end0: Union[SegmentEnd, None] = None  # None for circles
    end1: Union[SegmentEnd, None] = None

    def side(self, role: str) -> str:
        return {"one": self.one, "up": self.up, "lo": self.lo}[role]


@dataclass(frozen=True)
class DoublePoint:
    id: str
    sign: int  # +1 | -1


@dataclass(frozen=True)
class RoleAssignment:
    """Corner roles at a double point.

    ``z`` is the sector meeting both merged sides, ``x``/``v`` its
    neighbours across the two branch curves, ``u`` the opposite quadrant,
    and ``w``/``y`` the two sheets passing over/under the curves.
    ``base_slot`` is the slot whose germ carries ``z`` paired with the
    ``w``-sheet curve; ``w_side`` is the vertical side ('up'/'lo') on
    which the ``w``-sheet sits.
    """

    dp: str
    z: str
    x: str
    u: str
    v: str
    w: str
    y: str
    base_slot: int
    w_side: str

    def as_dict(self) -> dict[str, str]:
        return {r: getattr(self, r) for r in ROLES}

    def mirrored_map(self) -> dict[str, str]:
        m = self.as_dict()
        return {"z": m["z"], "u": m["u"], "x": m["v"], "v": m["x"],
                "w": m["y"], "y": m["w"]}

    def corner_coeffs(self) -> dict[str, int]:
        """Sparse coefficients of the corner form z + u - x - v."""
        out: dict[str, int] = {}
        for s, c in ((self.z, 1), (self.u, 1), (self.x, -1), (self.v, -1)):
            out[s] = out.get(s, 0) + c
        return {s: c for s, c in out.items() if c}


@dataclass(frozen=True)
class BranchedSurfaceComplex:
    name: str
    sectors: tuple[Sector, ...]
    segments: tuple[BranchSegment, ...]
    dps: tuple[DoublePoint, ...]

    @cached_property
    def sector_by_id(self) -> dict[str, Sector]:
        return {s.id: s for s in self.sectors}

    @cached_property
    def segment_by_id(self) -> dict[str, BranchSegment]:
        return {g.id: g for g in self.segments}

    @cached_property
    def dp_by_id(self) -> dict[str, DoublePoint]:
        return {d.id: d for d in self.dps}

    @cached_property
    def dp_slots(self) -> dict[str, list]:
        """Per double point: slot -> (segment id, end index) or None."""
        table: dict[str, list] = {d.id: [None] * 4 for d in self.dps}
        for g in self.segments:
            for ei, end in ((0, g.end0), (1, g.end1)):
                if end is None or end.dp is None:
                    continue
                if end.dp in table and end.slot is not None and 0 <= end.slot < 4:
                    if table[end.dp][end.slot] is None:
                        table[end.dp][end.slot] = (g.id, ei)
        return table

    def iter_items(self) -> Iterator[tuple[str, int, int, EdgeItem]]:
        """Yield (sector id, word index, item index, item)."""
        for s in self.sectors:
            for wi, w in enumerate(s.words):
                for ii, it in enumerate(w.items):
                    yield s.id, wi, ii, it


def _end_of_item(seg: BranchSegment, side: str, which: str) -> Union[SegmentEnd, None]:
    """Segment end at the 'prev'/'next' vertex of a word item.

    one-side runs end0->end1, so its prev vertex sits at end0; up/lo run
    the other way.  Circles return None (no ends).
    """
    if seg.kind == "circle":
        return None
    if side == "one":
        return seg.end0 if which == "prev" else seg.end1
    return seg.end1 if which == "prev" else seg.end0


def _germ(cx: BranchedSurfaceComplex, dp_id: str, slot_entry) -> tuple[str, str, str]:
    gid, _ei = slot_entry
    g = cx.segment_by_id[gid]
    return (g.one, g.up, g.lo)


_PATTERN = (
    # (constraint role, (germ offset a, field b), (germ offset c, field d))
    # fields: 0 = one, 1 = eps side, 2 = opposite of eps
    ("z", (0, 0), (1, 0)),
    ("w", (0, 1), (2, 1)),
    ("y", (1, 2), (3, 2)),
    ("u", (2, 2), (3, 1)),
    ("x", (2, 0), (1, 1)),
    ("v", (3, 0), (0, 2)),
)


def _match_pattern(germs, a: int, eps: str):
    """Try to read corner roles with germ ``a`` as the base and the
    w-sheet on vertical side ``eps``.  Returns role dict or None."""
    def fld(germ, code):
        one, up, lo = germ
        if code == 0:
            return one
        if code == 1:
            return up if eps == "up" else lo
        return lo if eps == "up" else up

    roles = {}
    for role, (ga, fa), (gb, fb) in _PATTERN:
        va = fld(germs[(a + ga) % 4], fa)
        vb = fld(germs[(a + gb) % 4], fb)
        if va != vb:
            return None
        roles[role] = va
    return roles


def derive_roles(cx: BranchedSurfaceComplex, dp_id: str) -> RoleAssignment:
    """Derive the corner-role assignment at a double point.

    Searches the eight local patterns (four rotations of the slot cycle,
    two vertical sides).  The result is unique up to the symmetry
    swapping x with v and y with w; genuinely different matches raise
    :class:`AmbiguousRoles`, no match raises :class:`NoConsistentRoles`.
    """
    slots = cx.dp_slots.get(dp_id)
    if slots is None:
        raise NoConsistentRoles(f"unknown double point {dp_id}")
    if any(e is None for e in slots):
        raise NoConsistentRoles(f"double point {dp_id} does not have four ends")
    germs = [_germ(cx, dp_id, e) for e in slots]

    found: list[tuple[int, str, dict[str, str]]] = []
    for a in range(4):
        for eps in ("up", "lo"):
            roles = _match_pattern(germs, a, eps)
            if roles is not None:
                found.append((a, eps, roles))
    if not found:
        raise NoConsistentRoles(f"role derivation failed at dp:{dp_id}")

    def canon(m: dict[str, str]) -> tuple:
        mirror = {"z": m["z"], "u": m["u"], "x": m["v"], "v": m["x"],
                  "w": m["y"], "y": m["w"]}
        key = tuple(sorted(m.items()))
        mkey = tuple(sorted(mirror.items()))
        return min(key, mkey)

    canonical = {canon(m) for _a, _e, m in found}
    if len(canonical) > 1:
        raise AmbiguousRoles(f"role derivation ambiguous at dp:{dp_id}")

    a, eps, roles = min(found, key=lambda t: (t[0], t[1] != "up"))
    return RoleAssignment(dp=dp_id, base_slot=a, w_side=eps, **roles)


def derive_all_roles(cx: BranchedSurfaceComplex) -> dict[str, RoleAssignment]:
    return {d.id: derive_roles(cx, d.id) for d in cx.dps}


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def validate(cx: BranchedSurfaceComplex) -> ValidationReport:
    """Check every structural invariant; returns the list of violations.

    A clean report (empty list) is the precondition for the weight,
    assembly and splitting operations.
    """
    rep = ValidationReport()

    # identifier uniqueness
    for kind, ids in (("sector", [s.id for s in cx.sectors]),
                      ("segment", [g.id for g in cx.segments]),
                      ("dp", [d.id for d in cx.dps])):
        seen = set()
        for i in ids:
            if i in seen:
                rep.add(f"duplicate {kind} id {i}")
            seen.add(i)

    # reference resolution
    for g in cx.segments:
        for role in SIDES:
            sid = g.side(role)
            if sid not in cx.sector_by_id:
                rep.add(f"dangling reference: segment {g.id} side {role} "
                        f"names unknown sector {sid}")
        if g.kind == "circle":
            if g.end0 is not None or g.end1 is not None:
                rep.add(f"circle segment {g.id} must not declare ends")
        elif g.kind == "arc":
            for label, end in (("end0", g.end0), ("end1", g.end1)):
                if end is None:
                    rep.add(f"arc segment {g.id} missing {label}")
                elif end.dp is not None:
                    if end.dp not in cx.dp_by_id:
                        rep.add(f"dangling reference: segment {g.id} {label} "
                                f"names unknown dp {end.dp}")
                    elif not (end.slot is not None and 0 <= end.slot < 4):
                        rep.add(f"segment {g.id} {label} has bad slot")
        else:
            rep.add(f"segment {g.id} has unknown kind {g.kind}")

    for d in cx.dps:
        if d.sign not in (1, -1):
            rep.add(f"dp {d.id} has invalid sign")

    for s in cx.sectors:
        if s.genus < 0:
            rep.add(f"sector {s.id} has negative genus")
        for wi, w in enumerate(s.words):
            if not w.items:
                rep.add(f"sector {s.id} word {wi} is empty")
            for it in w.items:
                if isinstance(it, SegItem):
                    if it.seg not in cx.segment_by_id:
                        rep.add(f"dangling reference: sector {s.id} word {wi} "
                                f"names unknown segment {it.seg}")
                    elif it.side not in SIDES:
                        rep.add(f"sector {s.id} word {wi}: bad side {it.side}")
            for v in w.verts:
                if v is not None and v not in cx.dp_by_id:
                    rep.add(f"dangling reference: sector {s.id} word {wi} "
                            f"names unknown dp {v}")
    if rep.violations:
        return rep  # later checks assume resolvable references

    # four ends per double point, one per slot
    end_count: dict[str, int] = {d.id: 0 for d in cx.dps}
    slot_fill: dict[str, list[int]] = {d.id: [0] * 4 for d in cx.dps}
    for g in cx.segments:
        for end in (g.end0, g.end1):
            if end is not None and end.dp is not None:
                end_count[end.dp] += 1
                slot_fill[end.dp][end.slot] += 1
    for d in cx.dps:
        if end_count[d.id] != 4 or slot_fill[d.id] != [1, 1, 1, 1]:
            rep.add(f"dp {d.id} has wrong end arity "
                    f"(slots filled {slot_fill[d.id]})")

    # opposite slots belong to the two distinct crossing curves: checked
    # implicitly by role derivation; here check slots resolve pairwise.

    # side multiplicity: each (segment, side) appears exactly once, in the
    # declared sector's words
    occurrences: dict[tuple[str, str], list[str]] = {}
    for sid, wi, ii, it in cx.iter_items():
        if isinstance(it, SegItem) and it.side in SIDES:
            occurrences.setdefault((it.seg, it.side), []).append(sid)
    for g in cx.segments:
        for role in SIDES:
            occ = occurrences.get((g.id, role), [])
            want = g.side(role)
            if len(occ) != 1 or occ[0] != want:
                rep.add(f"segment {g.id} side {role} must appear exactly once "
                        f"on sector {want}'s boundary (found {occ})")
    for (gid, side), occ in occurrences.items():
        if side not in SIDES:
            continue
        g = cx.segment_by_id.get(gid)
        if g is None:
            continue

    # vertex/end flank consistency and circle-word shape
    for s in cx.sectors:
        for wi, w in enumerate(s.words):
            n = len(w.items)
            for ii, it in enumerate(w.items):
                prev_v = w.verts[(ii - 1) % n]
                next_v = w.verts[ii]
                if isinstance(it, FreeItem):
                    if prev_v is not None or next_v is not None:
                        rep.add(f"sector {s.id} word {wi}: free edge "
                                f"{it.label} abuts a double-point vertex")
                    continue
                g = cx.segment_by_id[it.seg]
                if g.kind == "circle":
                    if n != 1:
                        rep.add(f"sector {s.id} word {wi}: circle side "
                                f"{it.seg}:{it.side} must fill a whole word")
                    elif w.verts[0] is not None:
                        rep.add(f"sector {s.id} word {wi}: circle basepoint "
                                f"must be smooth")
                    continue
                for which, v in (("prev", prev_v), ("next", next_v)):
                    end = _end_of_item(g, it.side, which)
                    want = None if end.dp is None else end.dp
                    if v != want:
                        rep.add(
                            f"sector {s.id} word {wi} item {ii} "
                            f"({it.seg}:{it.side}): {which} vertex is "
                            f"{v or 'smooth'} but segment end is "
                            f"{'free' if want is None else 'dp:' + want}")

    if rep.violations:
        return rep

    # corner roles must derive uniquely at every double point
    for d in cx.dps:
        try:
            derive_roles(cx, d.id)
        except AmbiguousRoles:
            rep.add(f"role derivation failed at dp:{d.id} (ambiguous)")
        except NoConsistentRoles:
            rep.add(f"role derivation failed at dp:{d.id}")

    return rep
