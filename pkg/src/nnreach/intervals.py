"""Interval vectors, the southeast order, and matrix sign/Metzler splittings.

Boxes are the set representation used everywhere else; the southeast order
on stacked (lower, upper) states is the order in which all containment and
refinement statements are phrased; the two matrix splittings are what turn
affine maps into monotone maps on stacked states.

Entries that are exactly zero always go to the nonnegative (``plus`` /
``mzl``) part, so both splits are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


def _vector(v, name="vector"):
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Box:
    """Axis-aligned interval vector [lower, upper], lower <= upper componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _vector(self.lower, "lower")
        hi = _vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionMismatch(
                f"lower has dimension {lo.shape[0]}, upper has {hi.shape[0]}"
            )
        if np.any(lo > hi):
            bad = np.nonzero(lo > hi)[0]
            raise ValueError(f"lower > upper in coordinates {bad.tolist()}")
        lo = lo.copy()
        hi = hi.copy()
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    def volume(self):
        return float(np.prod(self.width))

    def contains_point(self, x, atol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )

    def sample(self, rng, count):
        """Uniform samples, shape (count, dim). Degenerate axes stay constant."""
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))

    @classmethod
    def hull(cls, boxes):
        boxes = list(boxes)
        if not boxes:
            raise ValueError("hull of an empty collection")
        lo = np.min([b.lower for b in boxes], axis=0)
        hi = np.max([b.upper for b in boxes], axis=0)
        return cls(lo, hi)

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


@dataclass(frozen=True)
class EmbeddingState:
    """Stacked (x, xhat) pair; the moving corners of a box-valued trajectory."""

    x: np.ndarray
    xhat: np.ndarray

    def __post_init__(self):
        x = _vector(self.x, "x")
        xh = _vector(self.xhat, "xhat")
        if x.shape != xh.shape:
            raise DimensionMismatch(
                f"x has dimension {x.shape[0]}, xhat has {xh.shape[0]}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xhat", xh)

    @property
    def dim(self):
        return self.x.shape[0]

    def stacked(self):
        return np.concatenate([self.x, self.xhat])

    @classmethod
    def from_stacked(cls, v):
        v = _vector(v, "stacked state")
        if v.shape[0] % 2:
            raise DimensionMismatch("stacked state must have even length")
        n = v.shape[0] // 2
        return cls(v[:n], v[n:])

    @classmethod
    def from_box(cls, box):
        return cls(box.lower, box.upper)

    def to_box(self):
        return Box(np.minimum(self.x, self.xhat), np.maximum(self.x, self.xhat))


@dataclass(frozen=True)
class SignedMatrixSplit:
    """Entrywise nonnegative/nonpositive parts; plus + minus == source exactly."""

    plus: np.ndarray
    minus: np.ndarray


@dataclass(frozen=True)
class MetzlerSplit:
    """Metzler part (full diagonal, nonnegative off-diagonals) and remainder."""

    mzl: np.ndarray
    nonmzl: np.ndarray


def signed_split(M):
    """Split a matrix into entrywise max(M, 0) and min(M, 0)."""
    M = np.asarray(M, dtype=float)
    plus = np.where(M >= 0, M, 0.0)
    minus = np.where(M < 0, M, 0.0)
    return SignedMatrixSplit(plus, minus)


def metzler_split(A):
    """Split a square matrix into its Metzler and non-Metzler parts.

    The diagonal stays in the Metzler part regardless of sign; nonnegative
    off-diagonal entries go to the Metzler part, negative ones to the
    remainder. Entries are copied, never recomputed, so mzl + nonmzl == A
    without floating error.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"metzler_split needs a square matrix, got {A.shape}")
    eye = np.eye(A.shape[0], dtype=bool)
    keep = (A >= 0) | eye
    mzl = np.where(keep, A, 0.0)
    nonmzl = np.where(keep, 0.0, A)
    return MetzlerSplit(mzl, nonmzl)


def replace_coord(v, i, w):
    """Copy of v with coordinate i replaced by w[i]."""
    v = _vector(v, "v")
    w = _vector(w, "w")
    if v.shape != w.shape:
        raise DimensionMismatch("v and w must have the same length")
    if not 0 <= i < v.shape[0]:
        raise IndexError(f"coordinate {i} out of range for dimension {v.shape[0]}")
    out = v.copy()
    out[i] = w[i]
    return out


def se_leq(a: EmbeddingState, b: EmbeddingState) -> bool:
    """Southeast order: a.x <= b.x and b.xhat <= a.xhat componentwise."""
    if a.dim != b.dim:
        raise DimensionMismatch("states have different dimensions")
    return bool(np.all(a.x <= b.x) and np.all(b.xhat <= a.xhat))


def box_contains(outer: Box, inner: Box, atol=0.0) -> bool:
    """True iff inner is a subset of outer (with optional slack)."""
    if outer.dim != inner.dim:
        raise DimensionMismatch("boxes have different dimensions")
    return bool(
        np.all(outer.lower - atol <= inner.lower)
        and np.all(inner.upper <= outer.upper + atol)
    )
