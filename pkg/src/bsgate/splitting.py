"""Elementary splitting moves along a directed arc through a sector.

A move pushes the branch locus through a sector ``Z`` from an *entry*
edge (one whose merged side faces into ``Z``) to an *exit* edge.  The
over and under moves slide the entering branch curve across the exit
curve, creating a pair of new double points of opposite sign; the
neutral move stops short of the exit curve and merges the flanking
sheets instead.

The local rewrite is encoded as word-splice tables below.  Conventions
worth keeping in mind when reading them:

* the cut along the arc follows the canonical representative that, when
  entry and exit share a boundary word, severs a planar piece carrying
  the word segment running forward from the entry;
* for the over move the new left double point is negative and the right
  one positive; the under move mirrors this;
* every output complex is re-validated, so a template error surfaces as
  ``InvariantViolation`` rather than silent corruption.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    BadMove,
    BsgateError,
    InvalidLocus,
    InvariantViolation,
    MalformedSystem,
    PreconditionFailed,
)
from .surface import (
    BoundaryWord,
    BranchSegment,
    BranchedSurfaceComplex,
    DoublePoint,
    SegItem,
    SegmentEnd,
    Sector,
    validate,
)
from .weights import Verdict, criterion

OVER = "over"
UNDER = "under"
NEUTRAL = "neutral"
CHOICES = (OVER, UNDER, NEUTRAL)

Position = tuple[int, int]  # (word index, item index) on the sector boundary


@dataclass(frozen=True)
class SplitLocus:
    """A directed arc through ``sector`` from ``entry`` to ``exit``."""

    sector: str
    entry: Position
    exit: Position


@dataclass(frozen=True)
class SplitRecord:
    """Bookkeeping from one split, enough to pull weights back."""

    sector: str
    entry_segment: str
    exit_segment: str
    choice: str
    sector_images: tuple[tuple[str, str], ...]  # original id -> new id
    new_sectors: tuple[str, ...]
    dp_left: Optional[str]
    dp_right: Optional[str]

    def image(self, sector_id: str) -> str:
        for old, new in self.sector_images:
            if old == sector_id:
                return new
        raise KeyError(sector_id)


@dataclass(frozen=True)
class SplitResult:
    complex: BranchedSurfaceComplex
    dp_left: Optional[str]
    dp_right: Optional[str]
    record: SplitRecord


@dataclass(frozen=True)
class SafeSplitResult:
    split: SplitResult
    choice: str
    verdicts: tuple[tuple[str, Verdict], ...]

    @property
    def complex(self) -> BranchedSurfaceComplex:
        return self.split.complex


@dataclass(frozen=True)
class ScheduleStep:
    index: int
    locus: SplitLocus
    choice: str
    verdicts: tuple[tuple[str, Verdict], ...]


@dataclass(frozen=True)
class ScheduleResult:
    complex: BranchedSurfaceComplex
    steps: tuple[ScheduleStep, ...]


def _resolve(cx: BranchedSurfaceComplex, locus: SplitLocus):
    sec = cx.sector_by_id.get(locus.sector)
    if sec is None:
        raise InvalidLocus(f"unknown sector {locus.sector}")

    def item_at(pos: Position, label: str):
        wi, ii = pos
        if not 0 <= wi < len(sec.words):
            raise InvalidLocus(
                f"{label} word index {wi} out of range for sector {sec.id}")
        word = sec.words[wi]
        if not 0 <= ii < len(word.items):
            raise InvalidLocus(
                f"{label} item index {ii} out of range in word {wi}")
        return word.items[ii]

    ent = item_at(locus.entry, "entry")
    ext = item_at(locus.exit, "exit")
    if locus.entry == locus.exit:
        raise InvalidLocus("entry and exit positions coincide")
    if not isinstance(ent, SegItem) or ent.side != "one":
        raise InvalidLocus(
            "entry edge must carry the merged side of its segment")
    if not isinstance(ext, SegItem):
        raise InvalidLocus("exit edge is a free boundary arc")
    return sec, ent, ext


def is_bad_move(cx: BranchedSurfaceComplex, locus: SplitLocus) -> bool:
    """True when the exit edge branches outward for the locus sector."""
    _, _, ext = _resolve(cx, locus)
    return ext.side != "one"


def all_loci(cx: BranchedSurfaceComplex) -> list[SplitLocus]:
    """Every resolvable locus: inward entry, any segment edge as exit."""
    out = []
    for s in cx.sectors:
        seg_positions = []
        entries = []
        for wi, w in enumerate(s.words):
            for ii, it in enumerate(w.items):
                if isinstance(it, SegItem):
                    seg_positions.append((wi, ii))
                    if it.side == "one":
                        entries.append((wi, ii))
        for e in entries:
            for x in seg_positions:
                if x != e:
                    out.append(SplitLocus(s.id, e, x))
    return out


def good_loci(cx: BranchedSurfaceComplex) -> list[SplitLocus]:
    return [loc for loc in all_loci(cx) if not is_bad_move(cx, loc)]


# -- locus text form (used by the command line and plan files) ---------------

def parse_position(text: str) -> tuple[Position, str]:
    parts = text.split(":")
    if len(parts) != 3 or parts[2] not in ("one", "up", "lo"):
        raise InvalidLocus(
            f"bad position {text!r}, expected <word>:<item>:<one|up|lo>")
    try:
        wi, ii = int(parts[0]), int(parts[1])
    except ValueError:
        raise InvalidLocus(f"bad position {text!r}, indices must be integers")
    return (wi, ii), parts[2]


def locus_from_strings(cx: BranchedSurfaceComplex, sector: str,
                       entry: str, exit: str) -> SplitLocus:
    (e_pos, e_side) = parse_position(entry)
    (x_pos, x_side) = parse_position(exit)
    locus = SplitLocus(sector, e_pos, x_pos)
    _, ent, ext = _resolve(cx, locus)
    if ent.side != e_side:
        raise InvalidLocus(
            f"entry side mismatch: declared {e_side}, found {ent.side}")
    if ext.side != x_side:
        raise InvalidLocus(
            f"exit side mismatch: declared {x_side}, found {ext.side}")
    return locus


def format_locus(cx: BranchedSurfaceComplex, locus: SplitLocus) -> str:
    sec = cx.sector_by_id[locus.sector]

    def pos(p: Position) -> str:
        it = sec.words[p[0]].items[p[1]]
        return f"{p[0]}:{p[1]}:{it.side}"

    return f"{locus.sector} {pos(locus.entry)} {pos(locus.exit)}"


# -- the rewrite --------------------------------------------------------------

# Working form of a boundary word: a list of (item, following vertex).
_Pairs = list[tuple[SegItem, Optional[str]]]


class _Piece:
    """A sector of the output complex while words are under surgery."""

    def __init__(self, genus: int, words: list[_Pairs],
                 members: tuple[str, ...], tags: frozenset = frozenset()):
        self.genus = genus
        self.words = words
        self.members = members
        self.tags = tags


def _pairs(word: BoundaryWord) -> _Pairs:
    return list(zip(word.items, word.verts))


def _word(pairs: _Pairs) -> BoundaryWord:
    return BoundaryWord(tuple(p[0] for p in pairs),
                        tuple(p[1] for p in pairs))


def _forward(pairs: _Pairs, i: int, j: int) -> _Pairs:
    """Pairs strictly between positions i and j, walking forward."""
    m = len(pairs)
    out, k = [], (i + 1) % m
    while k != j:
        out.append(pairs[k])
        k = (k + 1) % m
    return out


def _find(pool: list[_Piece], seg: str, side: str):
    for piece in pool:
        for wi, pairs in enumerate(piece.words):
            for ii, (it, _) in enumerate(pairs):
                if isinstance(it, SegItem) and it.seg == seg and it.side == side:
                    return piece, wi, ii
    raise InvariantViolation(f"lost track of edge {seg}:{side} during splice")


def _replace_item(pairs: _Pairs, i: int, seq: _Pairs) -> _Pairs:
    return pairs[:i] + seq + pairs[i + 1:]


def _fuse_adjacent(pool: list[_Piece], first: SegItem, second: SegItem,
                   merged: SegItem) -> None:
    """Collapse ``first, smooth vertex, second`` into ``merged`` everywhere."""
    for piece in pool:
        for wi, pairs in enumerate(piece.words):
            m = len(pairs)
            for i in range(m):
                it, vert = pairs[i]
                j = (i + 1) % m
                if it == first and vert is None and pairs[j][0] == second:
                    rot = pairs[i:] + pairs[:i]
                    piece.words[wi] = [(merged, rot[1][1])] + rot[2:]
                    return
    raise InvariantViolation(f"no fusion site for {merged.seg}:{merged.side}")


def _allocate_names(cx: BranchedSurfaceComplex, z: str, gin: BranchSegment,
                    choice: str) -> tuple[dict[str, str], int]:
    sec_ids = set(cx.sector_by_id)
    seg_ids = set(cx.segment_by_id)
    dp_ids = set(cx.dp_by_id)
    n = 1
    while True:
        if choice == NEUTRAL:
            secs = {"zl": f"{z}_l{n}", "zr": f"{z}_r{n}",
                    "xm": f"{gin.up}_m{n}", "ym": f"{gin.lo}_m{n}"}
            segs = {k: f"{k}{n}" for k in ("fl", "fr", "fn")}
            dps: dict[str, str] = {}
        else:
            secs = {"zl": f"{z}_l{n}", "zr": f"{z}_r{n}", "slv": f"slv{n}"}
            segs = {k: f"{k}{n}"
                    for k in ("fl", "fr", "flr", "gl", "gm", "gr", "gf", "tg")}
            dps = {"L": f"L{n}", "R": f"R{n}"}
        clash = (set(secs.values()) & sec_ids or
                 set(segs.values()) & seg_ids or
                 set(dps.values()) & dp_ids)
        if not clash:
            return {**secs, **segs, **dps}, n
        n += 1


def split(cx: BranchedSurfaceComplex, locus: SplitLocus,
          choice: str) -> SplitResult:
    if choice not in CHOICES:
        raise InvalidLocus(f"unknown move choice {choice!r}")
    report = validate(cx)
    if report.violations:
        raise InvalidLocus(
            "input complex fails validation: " + report.violations[0])
    sec, ent, ext = _resolve(cx, locus)
    if ext.side != "one":
        raise BadMove(
            f"exit edge {ext.seg}:{ext.side} branches outward "
            f"for sector {sec.id}")

    gin = cx.segment_by_id[ent.seg]
    gout = cx.segment_by_id[ext.seg]
    entry_circle = gin.kind == "circle"
    exit_circle = gout.kind == "circle"
    names, _ = _allocate_names(cx, sec.id, gin, choice)
    over_like = choice in (OVER, UNDER)
    lvert: Optional[str] = names["L"] if over_like else None
    rvert: Optional[str] = names["R"] if over_like else None

    def seg_item(key: str, side: str) -> SegItem:
        return SegItem(names[key], side)

    # one pool piece per input sector; the locus sector is rebuilt below
    pool: list[_Piece] = []
    piece_of: dict[str, _Piece] = {}
    for s in cx.sectors:
        tags = frozenset({"zl"}) if s.id == sec.id else frozenset()
        piece = _Piece(s.genus, [_pairs(w) for w in s.words], (s.id,), tags)
        pool.append(piece)
        piece_of[s.id] = piece

    # --- cut the locus sector along the arc -------------------------------
    zp = piece_of[sec.id]
    (ew, ei), (xw, xi) = locus.entry, locus.exit
    fl_one = seg_item("fl", "one")
    fr_one = seg_item("fr", "one")
    if over_like:
        gl_one = seg_item("gl", "one")
        gr_one = seg_item("gr", "one")
    if ew == xw:
        w = zp.words[ew]
        if over_like:
            right = ([(gr_one, rvert), (fr_one, w[ei][1])]
                     + _forward(w, ei, xi))
            left = ([(fl_one, lvert), (gl_one, w[xi][1])]
                    + _forward(w, xi, ei))
        else:
            right = [(fr_one, w[ei][1])] + _forward(w, ei, xi)
            left = [(fl_one, w[xi][1])] + _forward(w, xi, ei)
        zp.words[ew] = left
        zr = _Piece(0, [right], (), frozenset({"zr"}))
        pool.insert(pool.index(zp) + 1, zr)
    else:
        we, wx = zp.words[ew], zp.words[xw]
        fused = [(fr_one, we[ei][1])] + _forward(we, ei, ei)
        if over_like:
            fused += [(fl_one, lvert), (gl_one, wx[xi][1])]
            fused += _forward(wx, xi, xi) + [(gr_one, rvert)]
        else:
            fused += [(fl_one, wx[xi][1])] + _forward(wx, xi, xi)
        zp.words[ew] = fused
        del zp.words[xw]
        zp.genus = sec.genus  # arc between distinct words keeps the genus

    # --- lateral rewrites at the entry and exit ----------------------------
    if over_like:
        gm_one = seg_item("gm", "one")
        tg_one = seg_item("tg", "one")
        if choice == OVER:
            entry_mid = {"up": seg_item("tg", "up"), "lo": gm_one}
            exit_mid = {"up": tg_one, "lo": seg_item("gm", "lo")}
            sliver = [(seg_item("tg", "lo"), lvert),
                      (seg_item("gm", "up"), rvert)]
        else:
            entry_mid = {"up": gm_one, "lo": seg_item("tg", "lo")}
            exit_mid = {"up": seg_item("gm", "up"), "lo": tg_one}
            sliver = [(seg_item("tg", "up"), lvert),
                      (seg_item("gm", "lo"), rvert)]
        for side in ("up", "lo"):
            piece, wi, ii = _find(pool, gin.id, side)
            after = piece.words[wi][ii][1]
            piece.words[wi] = _replace_item(
                piece.words[wi], ii,
                [(seg_item("fr", side), rvert), (entry_mid[side], lvert),
                 (seg_item("fl", side), after)])
            piece, wi, ii = _find(pool, gout.id, side)
            after = piece.words[wi][ii][1]
            piece.words[wi] = _replace_item(
                piece.words[wi], ii,
                [(seg_item("gl", side), lvert), (exit_mid[side], rvert),
                 (seg_item("gr", side), after)])
        pool.append(_Piece(0, [sliver], (), frozenset({"slv"})))
    else:
        for side in ("up", "lo"):
            pa, wa, ia = _find(pool, gin.id, side)
            pb, wb, ib = _find(pool, gout.id, side)
            frs, fls = seg_item("fr", side), seg_item("fl", side)
            if pa is pb and wa == wb:
                w = pa.words[wa]
                w1 = [(frs, w[ib][1])] + _forward(w, ib, ia)
                w2 = [(fls, w[ia][1])] + _forward(w, ia, ib)
                pa.words[wa] = w1
                pa.words.insert(wa + 1, w2)
            else:
                wordb = pb.words[wb]
                splice = ([(frs, wordb[ib][1])] + _forward(wordb, ib, ib)
                          + [(fls, pa.words[wa][ia][1])])
                pa.words[wa] = _replace_item(pa.words[wa], ia, splice)
                del pb.words[wb]
                if pa is pb:
                    pa.genus += 1  # self-fusion across two words
                else:
                    pa.genus += pb.genus
                    pa.words.extend(pb.words)
                    pa.members += pb.members
                    pa.tags |= pb.tags
                    pool.remove(pb)
                    for sid in pb.members:
                        piece_of[sid] = pa

    # --- circle entries and exits fuse the severed halves ------------------
    if entry_circle:
        key = "flr" if over_like else "fn"
        _fuse_adjacent(pool, fr_one, fl_one, seg_item(key, "one"))
        for side in ("up", "lo"):
            _fuse_adjacent(pool, seg_item("fl", side), seg_item("fr", side),
                           seg_item(key, side))
    if exit_circle and over_like:
        _fuse_adjacent(pool, gl_one, gr_one, seg_item("gf", "one"))
        for side in ("up", "lo"):
            _fuse_adjacent(pool, seg_item("gr", side), seg_item("gl", side),
                           seg_item("gf", side))
    elif exit_circle and not entry_circle:
        _fuse_adjacent(pool, fl_one, fr_one, seg_item("fn", "one"))
        for side in ("up", "lo"):
            _fuse_adjacent(pool, seg_item("fr", side), seg_item("fl", side),
                           seg_item("fn", side))

    # --- name the pieces and emit sectors ----------------------------------
    new_sector_names: list[str] = []

    def piece_name(piece: _Piece) -> str:
        if "zl" in piece.tags:
            return names["zl"]
        if "zr" in piece.tags:
            return names["zr"]
        if "slv" in piece.tags:
            return names["slv"]
        if len(piece.members) == 1:
            return piece.members[0]
        if gin.up in piece.members:
            return names["xm"]
        if gin.lo in piece.members:
            return names["ym"]
        raise InvariantViolation("merged piece with no naming anchor")

    order = {s.id: i for i, s in enumerate(cx.sectors)}
    emitted: list[Sector] = []
    done: set[int] = set()
    for piece in pool:
        if id(piece) in done:
            continue
        if piece.members:
            first = min(piece.members, key=order.__getitem__)
            anchor = piece_of[first]
            if anchor is not piece:
                continue
        done.add(id(piece))
        name = piece_name(piece)
        if name not in cx.sector_by_id:
            new_sector_names.append(name)
        emitted.append(Sector(name, piece.genus,
                              tuple(_word(p) for p in piece.words)))
        piece.final_name = name  # type: ignore[attr-defined]

    # --- rebuild segments from where their edges now sit --------------------
    occ: dict[tuple[str, str], str] = {}
    for s in emitted:
        for w in s.words:
            for it in w.items:
                if isinstance(it, SegItem):
                    occ[(it.seg, it.side)] = s.id

    def sheets(seg_id: str) -> dict[str, str]:
        try:
            return {side: occ[(seg_id, side)] for side in ("one", "up", "lo")}
        except KeyError as missing:
            raise InvariantViolation(f"edge {missing.args[0]} unplaced")

    def end(dp_key: str, slot: int) -> SegmentEnd:
        return SegmentEnd(names[dp_key], slot)

    new_segments: list[BranchSegment] = []
    if over_like:
        table = {
            "fl": ("arc", gin.end0, end("L", 3)),
            "fr": ("arc", end("R", 3), gin.end1),
            "flr": ("arc", end("R", 3), end("L", 3)),
            "gl": ("arc", end("L", 2), gout.end1),
            "gr": ("arc", gout.end0, end("R", 0)),
            "gf": ("arc", end("L", 2), end("R", 0)),
            "gm": ("arc", end("R", 2), end("L", 0)),
            "tg": ("arc", end("L", 1), end("R", 1)),
        }
        wanted = (["flr"] if entry_circle else ["fl", "fr"])
        wanted += (["gf"] if exit_circle else ["gl", "gr"])
        wanted += ["gm", "tg"]
    else:
        table = {
            "fl": ("arc", gin.end0, gout.end1),
            "fr": ("arc", gout.end0, gin.end1),
            "fn": (("circle", None, None) if entry_circle and exit_circle
                   else ("arc", gout.end0, gout.end1) if entry_circle
                   else ("arc", gin.end0, gin.end1)),
        }
        wanted = ["fn"] if (entry_circle or exit_circle) else ["fl", "fr"]
    for key in wanted:
        kind, e0, e1 = table[key]
        sh = sheets(names[key])
        new_segments.append(BranchSegment(
            names[key], kind, sh["one"], sh["up"], sh["lo"], e0, e1))

    segments = []
    for g in cx.segments:
        if g.id in (gin.id, gout.id):
            continue
        sh = sheets(g.id)
        segments.append(replace(g, one=sh["one"], up=sh["up"], lo=sh["lo"]))
    segments.extend(new_segments)

    dps = list(cx.dps)
    if over_like:
        lsign = -1 if choice == OVER else 1
        dps.append(DoublePoint(names["L"], lsign))
        dps.append(DoublePoint(names["R"], -lsign))

    out = BranchedSurfaceComplex(cx.name, tuple(emitted), tuple(segments),
                                 tuple(dps))
    report = validate(out)
    if report.violations:
        raise InvariantViolation(
            "split output fails validation: " + "; ".join(report.violations))
    if over_like and len(out.dps) != len(cx.dps) + 2:
        raise InvariantViolation("double-point count did not grow by two")

    images: dict[str, str] = {}
    for s in cx.sectors:
        images[s.id] = piece_of[s.id].final_name  # type: ignore[attr-defined]
    if over_like:
        entry_key = "flr" if entry_circle else "fr"
        exit_key = "gf" if exit_circle else "gr"
    else:
        entry_key = exit_key = (
            "fn" if (entry_circle or exit_circle) else "fr")
    images[gout.up] = occ[(names[exit_key], "up")]
    images[gout.lo] = occ[(names[exit_key], "lo")]
    images[gin.up] = occ[(names[entry_key], "up")]
    images[gin.lo] = occ[(names[entry_key], "lo")]
    images[sec.id] = names["zl"]

    record = SplitRecord(
        sector=sec.id, entry_segment=gin.id, exit_segment=gout.id,
        choice=choice,
        sector_images=tuple(sorted(images.items())),
        new_sectors=tuple(new_sector_names),
        dp_left=names["L"] if over_like else None,
        dp_right=names["R"] if over_like else None)
    return SplitResult(out, record.dp_left, record.dp_right, record)


def pushforward_weights(cxp: BranchedSurfaceComplex,
                        weights: Mapping[str, int],
                        record: SplitRecord) -> dict[str, int]:
    """Pull a weight vector on the split complex back to the original.

    Each original sector reads off the weight of its canonical image
    piece.  Under the segment equalities of the split complex the halves
    of the severed sector are forced equal, so this reproduces every
    closed-surface solution's preimage.
    """
    known = {s.id for s in cxp.sectors}
    for key in weights:
        if key not in known:
            raise MalformedSystem(f"unknown sector {key} in weight vector")
    return {old: weights.get(new, 0) for old, new in record.sector_images}


def safe_split(cx: BranchedSurfaceComplex, locus: SplitLocus) -> SafeSplitResult:
    """Split so the result stays clean, trying over before under."""
    if not criterion(cx).passes:
        raise PreconditionFailed(
            "criterion fails on the input complex; nothing to preserve")
    over_res = split(cx, locus, OVER)
    v_over = criterion(over_res.complex)
    if v_over.passes:
        return SafeSplitResult(over_res, OVER, (("over", v_over),))
    under_res = split(cx, locus, UNDER)
    v_under = criterion(under_res.complex)
    if v_under.passes:
        return SafeSplitResult(under_res, UNDER,
                               (("over", v_over), ("under", v_under)))
    err = InvariantViolation(
        "neither the over nor the under move stays clean at "
        f"{locus.sector} {locus.entry}->{locus.exit}; "
        f"over witness {dict(v_over.neg_tisc.witness or {})}, "
        f"under witness {dict(v_under.neg_tisc.witness or {})}")
    err.verdicts = {"over": v_over, "under": v_under}  # type: ignore
    raise err


def run_schedule(cx: BranchedSurfaceComplex,
                 schedule: Sequence[SplitLocus]) -> ScheduleResult:
    """Fold safe_split over a schedule, tagging failures with the step."""
    if not criterion(cx).passes:
        raise PreconditionFailed("criterion fails on the initial complex")
    cur = cx
    steps: list[ScheduleStep] = []
    for i, locus in enumerate(schedule):
        try:
            res = safe_split(cur, locus)
        except BsgateError as exc:
            raise type(exc)(f"step {i}: {exc}") from exc
        steps.append(ScheduleStep(i, locus, res.choice, res.verdicts))
        cur = res.complex
    return ScheduleResult(cur, tuple(steps))


def run_plan(cx: BranchedSurfaceComplex,
             rows: Iterable[tuple[str, str, str]]) -> ScheduleResult:
    """Like run_schedule, but each row names its locus in text form
    against the complex as it stands at that step."""
    if not criterion(cx).passes:
        raise PreconditionFailed("criterion fails on the initial complex")
    cur = cx
    steps: list[ScheduleStep] = []
    for i, (sector, entry, exit_) in enumerate(rows):
        try:
            locus = locus_from_strings(cur, sector, entry, exit_)
            res = safe_split(cur, locus)
        except BsgateError as exc:
            raise type(exc)(f"step {i}: {exc}") from exc
        steps.append(ScheduleStep(i, locus, res.choice, res.verdicts))
        cur = res.complex
    return ScheduleResult(cur, tuple(steps))
