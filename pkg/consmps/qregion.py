# consmps/qregion.py
"""Integer lattice geometry: quantum numbers, boxes and QRegions in Z^M.

A quantum number (QN) is a plain tuple of ints. An :class:`IntBox` is an
inclusive hyperrectangle ``[lo, hi]``; a :class:`QRegion` is a finite union of
pairwise disjoint boxes kept in a canonical form, so two regions compare equal
exactly when they cover the same lattice points.

The canonical form slices along axis 0: maximal runs of consecutive
coordinates that share an identical (recursively canonical) cross-section
become one box column. Boxes are then sorted by ``(lo, hi)``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import DimensionMismatch, InstanceError, ResourceLimitExceeded

QN = tuple

COORD_LIMIT = 2**40
DEFAULT_ENUMERATION_LIMIT = 10**6


def _as_qn(coords) -> tuple[int, ...]:
    if not hasattr(coords, "__iter__"):
        coords = (coords,)
    qn = tuple(int(c) for c in coords)
    for c in qn:
        if abs(c) > COORD_LIMIT:
            raise ResourceLimitExceeded(f"coordinate {c} exceeds the supported magnitude 2**40")
    return qn


def _check_dims(a: int, b: int):
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} != {b}")


@dataclass(frozen=True, order=True)
class IntBox:
    """Inclusive integer box ``[lo, hi]``; never empty."""
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo, hi = _as_qn(self.lo), _as_qn(self.hi)
        if not lo:
            raise DimensionMismatch("boxes need at least one dimension")
        _check_dims(len(lo), len(hi))
        if any(l > h for l, h in zip(lo, hi)):
            raise ValueError(f"empty box: lo={lo} hi={hi}")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def size(self) -> int:
        return math.prod(h - l + 1 for l, h in zip(self.lo, self.hi))

    def __contains__(self, point) -> bool:
        point = _as_qn(point)
        _check_dims(len(point), self.ndim)
        return all(l <= p <= h for l, p, h in zip(self.lo, point, self.hi))

    def overlaps(self, other: IntBox) -> bool:
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def shift(self, offset) -> IntBox:
        offset = _as_qn(offset)
        _check_dims(len(offset), self.ndim)
        return IntBox(tuple(l + o for l, o in zip(self.lo, offset)),
                      tuple(h + o for h, o in zip(self.hi, offset)))

    def remove(self, other: IntBox) -> list[IntBox]:
        """Guillotine subtraction: disjoint boxes covering ``self - other``."""
        inter = box_intersect(self, other)
        if inter is None:
            return [self]
        pieces = []
        lo, hi = list(self.lo), list(self.hi)
        for k in range(self.ndim):
            if lo[k] < inter.lo[k]:
                below_hi = hi.copy()
                below_hi[k] = inter.lo[k] - 1
                pieces.append(IntBox(tuple(lo), tuple(below_hi)))
                lo[k] = inter.lo[k]
            if hi[k] > inter.hi[k]:
                above_lo = lo.copy()
                above_lo[k] = inter.hi[k] + 1
                pieces.append(IntBox(tuple(above_lo), tuple(hi)))
                hi[k] = inter.hi[k]
        return pieces

    def points(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def __str__(self):
        return f"[({','.join(map(str, self.lo))}),({','.join(map(str, self.hi))})]"


def box_intersect(a: IntBox, b: IntBox) -> IntBox | None:
    """Componentwise ``[max(lo), min(hi)]``, or None when the boxes are disjoint."""
    _check_dims(a.ndim, b.ndim)
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if any(l > h for l, h in zip(lo, hi)):
        return None
    return IntBox(lo, hi)


def _canonical(boxes: list[tuple[tuple[int, ...], tuple[int, ...]]]):
    if not boxes:
        return ()
    if len(boxes[0][0]) == 1:
        merged: list[list[int]] = []
        for lo, hi in sorted(boxes):
            if merged and lo[0] <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], hi[0])
            else:
                merged.append([lo[0], hi[0]])
        return tuple(((a,), (b,)) for a, b in merged)

    cuts = sorted({lo[0] for lo, _ in boxes} | {hi[0] + 1 for _, hi in boxes})
    slabs: list[list] = []
    for start, stop in zip(cuts, cuts[1:]):
        cross = _canonical([(lo[1:], hi[1:]) for lo, hi in boxes if lo[0] <= start <= hi[0]])
        if not cross:
            continue
        if slabs and slabs[-1][1] == start - 1 and slabs[-1][2] == cross:
            slabs[-1][1] = stop - 1
        else:
            slabs.append([start, stop - 1, cross])
    return tuple(sorted(((a,) + lo, (b,) + hi) for a, b, cross in slabs for lo, hi in cross))


@dataclass(frozen=True)
class QRegion:
    """Finite union of disjoint integer boxes, stored canonically."""
    boxes: tuple[IntBox, ...]
    ndim: int

    def __post_init__(self):
        if self.ndim < 1:
            raise DimensionMismatch("QRegions need at least one dimension")
        boxes = tuple(b if isinstance(b, IntBox) else IntBox(*b) for b in self.boxes)
        for b in boxes:
            _check_dims(b.ndim, self.ndim)
        canon = _canonical([(b.lo, b.hi) for b in boxes])
        object.__setattr__(self, 'boxes', tuple(IntBox(lo, hi) for lo, hi in canon))

    @classmethod
    def _from_canonical(cls, boxes: tuple[IntBox, ...], ndim: int) -> QRegion:
        region = object.__new__(cls)
        object.__setattr__(region, 'boxes', boxes)
        object.__setattr__(region, 'ndim', ndim)
        return region

    @classmethod
    def empty(cls, ndim: int) -> QRegion:
        return cls((), ndim)

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    def __bool__(self):
        return bool(self.boxes)

    @cached_property
    def bounds(self) -> IntBox | None:
        if not self.boxes:
            return None
        lo = tuple(min(b.lo[k] for b in self.boxes) for k in range(self.ndim))
        hi = tuple(max(b.hi[k] for b in self.boxes) for k in range(self.ndim))
        return IntBox(lo, hi)

    def n_points(self) -> int:
        return sum(b.size() for b in self.boxes)

    def first_point(self) -> tuple[int, ...]:
        return self.boxes[0].lo

    def might_overlap(self, other: QRegion) -> bool:
        return bool(self.boxes) and bool(other.boxes) and self.bounds.overlaps(other.bounds)

    def __contains__(self, point) -> bool:
        return contains_point(self, point)

    def __and__(self, other):
        return intersect(self, other)

    def __or__(self, other):
        return union(self, other)

    def __sub__(self, other):
        return difference(self, other)

    def __add__(self, other):
        return add(self, other)

    def __le__(self, other):
        return is_subset(self, other)

    def __str__(self):
        return format_qregion(self)


def from_box(lo, hi) -> QRegion:
    box = IntBox(lo, hi)
    return QRegion._from_canonical((box,), box.ndim)


def point(p) -> QRegion:
    p = _as_qn(p)
    return from_box(p, p)


def normalize(boxes: QRegion | Iterable[IntBox], ndim: int | None = None) -> QRegion:
    """Canonical disjoint form of a (possibly overlapping) collection of boxes."""
    if isinstance(boxes, QRegion):
        return QRegion(boxes.boxes, boxes.ndim)
    boxes = [b if isinstance(b, IntBox) else IntBox(*b) for b in boxes]
    if ndim is None:
        if not boxes:
            raise DimensionMismatch("cannot infer the dimension of an empty box list")
        ndim = boxes[0].ndim
    return QRegion(tuple(boxes), ndim)


def intersect(a: QRegion, b: QRegion) -> QRegion:
    _check_dims(a.ndim, b.ndim)
    if not a.might_overlap(b):
        return QRegion.empty(a.ndim)
    pieces = []
    for x in a.boxes:
        for y in b.boxes:
            inter = box_intersect(x, y)
            if inter is not None:
                pieces.append(inter)
    return QRegion(tuple(pieces), a.ndim)


def union(a: QRegion, b: QRegion) -> QRegion:
    _check_dims(a.ndim, b.ndim)
    return QRegion(a.boxes + b.boxes, a.ndim)


def difference(a: QRegion, b: QRegion) -> QRegion:
    _check_dims(a.ndim, b.ndim)
    if not a.might_overlap(b):
        return a
    pieces = list(a.boxes)
    for y in b.boxes:
        pieces = [part for x in pieces for part in x.remove(y)]
        if not pieces:
            break
    return QRegion(tuple(pieces), a.ndim)


def symdiff(a: QRegion, b: QRegion) -> tuple[QRegion, QRegion]:
    """``(a - b, b - a)``; with ``a & b`` these partition ``a | b``."""
    return difference(a, b), difference(b, a)


def shift(a: QRegion, v) -> QRegion:
    v = _as_qn(v)
    _check_dims(len(v), a.ndim)
    return QRegion._from_canonical(tuple(b.shift(v) for b in a.boxes), a.ndim)


def add(a: QRegion, b: QRegion) -> QRegion:
    """Minkowski sum ``{p + q : p in a, q in b}``."""
    _check_dims(a.ndim, b.ndim)
    boxes = [IntBox(tuple(p + q for p, q in zip(x.lo, y.lo)), tuple(p + q for p, q in zip(x.hi, y.hi)))
             for x in a.boxes for y in b.boxes]
    return QRegion(tuple(boxes), a.ndim)


def is_subset(a: QRegion, b: QRegion) -> bool:
    _check_dims(a.ndim, b.ndim)
    if a.is_empty:
        return True
    return difference(a, b).is_empty


def contains_point(a: QRegion, p) -> bool:
    p = _as_qn(p)
    _check_dims(len(p), a.ndim)
    return any(all(l <= c <= h for l, c, h in zip(b.lo, p, b.hi)) for b in a.boxes)


def enumerate_points(a: QRegion, limit: int = DEFAULT_ENUMERATION_LIMIT) -> list[tuple[int, ...]]:
    """All lattice points of ``a``, each once, in lexicographic order."""
    total = a.n_points()
    if total > limit:
        raise ResourceLimitExceeded(f"region holds {total} points, above the enumeration limit {limit}")
    return sorted(p for b in a.boxes for p in b.points())


# --- Text Format ---
# A box is "[(c1,..,cM),(d1,..,dM)]", boxes are joined by "u" and the empty
# region is "{}". One-dimensional boxes may also be written "[c,d]".

def format_qregion(a: QRegion) -> str:
    if a.is_empty:
        return "{}"
    return "u".join(str(b) for b in a.boxes)


_BOX_RE = re.compile(r"\[\(([^()]*)\),\(([^()]*)\)\]|\[(-?\d+),(-?\d+)\]")


def _parse_coords(text: str, offset: int) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in text.split(','))
    except ValueError:
        raise InstanceError(f"bad coordinate list '{text}' at offset {offset}") from None


def parse_qregion(text: str, ndim: int | None = None) -> QRegion:
    """Inverse of :func:`format_qregion`; whitespace is ignored."""
    compact = re.sub(r"\s+", "", text)
    if compact in ("{}", "∅"):
        if ndim is None:
            raise InstanceError("the empty region needs an explicit dimension")
        return QRegion.empty(ndim)
    boxes = []
    pos = 0
    while pos < len(compact):
        if boxes:
            if compact[pos] != 'u':
                raise InstanceError(f"expected 'u' between boxes at offset {pos} in '{text}'")
            pos += 1
        match = _BOX_RE.match(compact, pos)
        if match is None:
            raise InstanceError(f"malformed box at offset {pos} in '{text}'")
        if match.group(1) is not None:
            lo = _parse_coords(match.group(1), match.start(1))
            hi = _parse_coords(match.group(2), match.start(2))
        else:
            lo, hi = (int(match.group(3)),), (int(match.group(4)),)
        try:
            boxes.append(IntBox(lo, hi))
        except ValueError as e:
            raise InstanceError(f"{e} at offset {pos} in '{text}'") from None
        pos = match.end()
    if not boxes:
        raise InstanceError(f"no boxes in '{text}'")
    dim = boxes[0].ndim if ndim is None else ndim
    for b in boxes:
        if b.ndim != dim:
            raise InstanceError(f"box {b} has dimension {b.ndim}, expected {dim}")
    return QRegion(tuple(boxes), dim)


def region_key(a: QRegion):
    """Sort key used to order QRegions inside a link index."""
    return tuple((b.lo, b.hi) for b in a.boxes)

