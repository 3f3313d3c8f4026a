"""Finite integer sets and functions on 1-D and 2-D windows.

Grid arrays are indexed ``[x - x_lo, y - y_lo]`` so axis 0 is the first
coordinate throughout the package.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class GridWindow:
    x_lo: int
    x_hi: int
    y_lo: int
    y_hi: int

    def __post_init__(self):
        if self.x_lo > self.x_hi or self.y_lo > self.y_hi:
            raise ValueError(f"empty window {self}")

    @classmethod
    def square(cls, lo: int, hi: int) -> "GridWindow":
        return cls(lo, hi, lo, hi)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x_hi - self.x_lo + 1, self.y_hi - self.y_lo + 1)

    @property
    def area(self) -> int:
        w, h = self.shape
        return w * h

    def contains(self, x: int, y: int) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    def union(self, other: "GridWindow") -> "GridWindow":
        return GridWindow(min(self.x_lo, other.x_lo), max(self.x_hi, other.x_hi),
                          min(self.y_lo, other.y_lo), max(self.y_hi, other.y_hi))

    def as_list(self) -> list[int]:
        return [self.x_lo, self.x_hi, self.y_lo, self.y_hi]


def embed(arr: np.ndarray, src: GridWindow, dst: GridWindow, fill=0) -> np.ndarray:
    """Copy ``arr`` (indexed on ``src``) into a fresh array indexed on ``dst``.

    Entries of ``arr`` that fall outside ``dst`` are dropped.
    """
    out = np.full(dst.shape, fill, dtype=arr.dtype)
    x0 = max(src.x_lo, dst.x_lo)
    x1 = min(src.x_hi, dst.x_hi)
    y0 = max(src.y_lo, dst.y_lo)
    y1 = min(src.y_hi, dst.y_hi)
    if x0 > x1 or y0 > y1:
        return out
    out[x0 - dst.x_lo:x1 - dst.x_lo + 1, y0 - dst.y_lo:y1 - dst.y_lo + 1] = \
        arr[x0 - src.x_lo:x1 - src.x_lo + 1, y0 - src.y_lo:y1 - src.y_lo + 1]
    return out


class GridSet:
    """Immutable finite subset of a 2-D window, backed by a boolean mask."""

    __slots__ = ("window", "_mask", "__dict__")

    def __init__(self, window: GridWindow, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != window.shape:
            raise ValueError(f"mask shape {mask.shape} does not match window {window.shape}")
        mask = mask.copy()
        mask.setflags(write=False)
        self.window = window
        self._mask = mask

    @classmethod
    def from_points(cls, points: Iterable, window: GridWindow | None = None) -> "GridSet":
        pts = np.asarray(list(points), dtype=np.int64).reshape(-1, 2)
        if window is None:
            if len(pts) == 0:
                raise ValueError("window required for an empty point set")
            window = GridWindow(int(pts[:, 0].min()), int(pts[:, 0].max()),
                                int(pts[:, 1].min()), int(pts[:, 1].max()))
        mask = np.zeros(window.shape, dtype=bool)
        if len(pts):
            ix = pts[:, 0] - window.x_lo
            iy = pts[:, 1] - window.y_lo
            w, h = window.shape
            if ix.min() < 0 or iy.min() < 0 or ix.max() >= w or iy.max() >= h:
                raise ValueError("point outside window")
            mask[ix, iy] = True
        return cls(window, mask)

    @classmethod
    def full(cls, window: GridWindow) -> "GridSet":
        return cls(window, np.ones(window.shape, dtype=bool))

    @classmethod
    def empty(cls, window: GridWindow) -> "GridSet":
        return cls(window, np.zeros(window.shape, dtype=bool))

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @cached_property
    def points(self) -> tuple[tuple[int, int], ...]:
        idx = np.argwhere(self._mask)
        return tuple((int(i) + self.window.x_lo, int(j) + self.window.y_lo) for i, j in idx)

    def __len__(self) -> int:
        return int(self._mask.sum())

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p) -> bool:
        x, y = p
        if not self.window.contains(x, y):
            return False
        return bool(self._mask[x - self.window.x_lo, y - self.window.y_lo])

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self) -> str:
        return f"GridSet(window={self.window.as_list()}, size={len(self)})"

    def mask_on(self, window: GridWindow) -> np.ndarray:
        return embed(self._mask, self.window, window, fill=False)

    def with_window(self, window: GridWindow) -> "GridSet":
        if len(self) and not all(window.contains(x, y) for x, y in self.points):
            raise ValueError("points fall outside the new window")
        return GridSet(window, self.mask_on(window))

    def translate(self, dx: int, dy: int) -> "GridSet":
        w = self.window
        return GridSet(GridWindow(w.x_lo + dx, w.x_hi + dx, w.y_lo + dy, w.y_hi + dy), self._mask)

    def density(self) -> float:
        return len(self) / self.window.area

    def intersect(self, other: "GridSet") -> "GridSet":
        return GridSet(self.window, self._mask & other.mask_on(self.window))

    def issubset(self, other: "GridSet") -> bool:
        return bool(np.all(~self._mask | other.mask_on(self.window)))

    # serialization
    def to_text(self) -> str:
        return "".join(f"{x} {y}\n" for x, y in self.points)

    @classmethod
    def from_text(cls, text: str, window: GridWindow | None = None) -> "GridSet":
        pts = [tuple(int(t) for t in line.split()) for line in text.splitlines() if line.strip()]
        return cls.from_points(pts, window)

    def to_json(self) -> dict:
        return {"window": self.window.as_list(), "points": [list(p) for p in self.points]}

    @classmethod
    def from_json(cls, obj) -> "GridSet":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_points([tuple(p) for p in obj["points"]], GridWindow(*obj["window"]))


def product_set(E1: "IntSet", E2: "IntSet") -> GridSet:
    win = GridWindow(E1.lo, E1.hi, E2.lo, E2.hi)
    return GridSet(win, np.outer(E1.mask, E2.mask))


def reflect(A: GridSet) -> GridSet:
    """Point reflection (x, y) -> (-x, -y); swaps the sign of corner differences."""
    w = A.window
    return GridSet(GridWindow(-w.x_hi, -w.x_lo, -w.y_hi, -w.y_lo), A.mask[::-1, ::-1])


def shear(A: GridSet) -> GridSet:
    """(x, y) -> (x, y - x)."""
    w = A.window
    win = GridWindow(w.x_lo, w.x_hi, w.y_lo - w.x_hi, w.y_hi - w.x_lo)
    pts = [(x, y - x) for x, y in A.points]
    return GridSet.from_points(pts, win)


def to_coefficients(A: GridSet) -> GridSet:
    """Coordinates of plane points in the basis (1,0), (0,-1): (x, y) -> (x, -y)."""
    w = A.window
    return GridSet(GridWindow(w.x_lo, w.x_hi, -w.y_hi, -w.y_lo), A.mask[:, ::-1])


@dataclass(frozen=True)
class IntSet:
    """Sorted finite set of integers inside the closed window [lo, hi]."""

    values: tuple
    lo: int
    hi: int

    def __post_init__(self):
        vals = tuple(sorted(set(int(v) for v in self.values)))
        if self.lo > self.hi:
            raise ValueError("empty window")
        if vals and (vals[0] < self.lo or vals[-1] > self.hi):
            raise ValueError("value outside window")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_iter(cls, values, lo: int | None = None, hi: int | None = None) -> "IntSet":
        vals = [int(v) for v in values]
        if lo is None:
            lo = min(vals) if vals else 0
        if hi is None:
            hi = max(vals) if vals else lo
        return cls(tuple(vals), lo, hi)

    @classmethod
    def from_mask(cls, mask, lo: int) -> "IntSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(tuple(int(i) + lo for i in np.flatnonzero(mask)), lo, lo + len(mask) - 1)

    @classmethod
    def interval(cls, lo: int, hi: int) -> "IntSet":
        return cls(tuple(range(lo, hi + 1)), lo, hi)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, v):
        return self.lo <= v <= self.hi and bool(self.mask[v - self.lo])

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.hi - self.lo + 1, dtype=bool)
        if self.values:
            m[np.asarray(self.values) - self.lo] = True
        m.setflags(write=False)
        return m

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    def mask_on(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo + 1, dtype=bool)
        a = max(lo, self.lo)
        b = min(hi, self.hi)
        if a <= b:
            out[a - lo:b - lo + 1] = self.mask[a - self.lo:b - self.lo + 1]
        return out

    def shift(self, t: int) -> "IntSet":
        return IntSet(tuple(v + t for v in self.values), self.lo + t, self.hi + t)

    def to_text(self) -> str:
        return "".join(f"{v}\n" for v in self.values)

    def to_json(self) -> dict:
        return {"window": [self.lo, self.hi], "values": list(self.values)}


@dataclass(frozen=True, eq=False)
class SuppFn:
    """Finitely supported complex function on Z: ``values[i]`` sits at ``offset + i``."""

    offset: int
    values: np.ndarray
    disk: bool = False

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=complex)).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.disk and v.size and np.abs(v).max() > 1 + 1e-12:
            raise ValueError("disk-valued function exceeds modulus 1")

    @classmethod
    def indicator(cls, S, lo: int | None = None, hi: int | None = None) -> "SuppFn":
        if isinstance(S, IntSet):
            lo = S.lo if lo is None else lo
            hi = S.hi if hi is None else hi
            return cls(lo, S.mask_on(lo, hi).astype(complex))
        vals = sorted(int(s) for s in S)
        if lo is None:
            lo = vals[0] if vals else 0
        if hi is None:
            hi = vals[-1] if vals else lo
        m = np.zeros(hi - lo + 1, dtype=complex)
        m[np.asarray(vals, dtype=np.int64) - lo] = 1
        return cls(lo, m)

    @property
    def hi(self) -> int:
        return self.offset + len(self.values) - 1

    @property
    def span(self) -> int:
        return len(self.values)

    def support_points(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.values))

    def __call__(self, n: int) -> complex:
        i = n - self.offset
        if 0 <= i < len(self.values):
            return complex(self.values[i])
        return 0j

    def to_csv(self) -> str:
        return "".join(f"{x},{v.real!r},{v.imag!r}\n"
                       for x, v in zip(self.support_points(), self.values) if v != 0)


@dataclass(frozen=True, eq=False)
class GridFn:
    """Complex function on a 2-D window, dense storage; zero outside."""

    window: GridWindow
    values: np.ndarray
    disk: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        if v.shape != self.window.shape:
            raise ValueError("values shape does not match window")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.disk and v.size and np.abs(v).max() > 1 + 1e-12:
            raise ValueError("disk-valued function exceeds modulus 1")

    @classmethod
    def from_set(cls, A: GridSet, weight: complex = 1.0) -> "GridFn":
        return cls(A.window, A.mask.astype(complex) * weight)

    def on(self, window: GridWindow) -> np.ndarray:
        return embed(self.values, self.window, window, fill=0)

    def __call__(self, x: int, y: int) -> complex:
        if not self.window.contains(x, y):
            return 0j
        return complex(self.values[x - self.window.x_lo, y - self.window.y_lo])

    def to_csv(self) -> str:
        rows = []
        for i, j in np.argwhere(self.values != 0):
            v = self.values[i, j]
            rows.append(f"{i + self.window.x_lo},{j + self.window.y_lo},{v.real!r},{v.imag!r}\n")
        return "".join(rows)


def as_grid_fn(f) -> GridFn:
    if isinstance(f, GridFn):
        return f
    if isinstance(f, GridSet):
        return GridFn.from_set(f)
    raise TypeError(f"expected GridSet or GridFn, got {type(f).__name__}")


def balanced_fn(A: GridSet, E1: IntSet, E2: IntSet) -> tuple[GridFn, float]:
    """Balanced function (A - delta) on the product E1 x E2, and delta."""
    P = product_set(E1, E2)
    a = A.mask_on(P.window) & P.mask
    size = int(P.mask.sum())
    delta = a.sum() / size if size else 0.0
    vals = (a.astype(float) - delta) * P.mask
    return GridFn(P.window, vals), float(delta)
