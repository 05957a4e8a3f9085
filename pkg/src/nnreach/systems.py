"""Open-loop plant models: vector fields and their decomposition functions.

A decomposition function F(x, xhat, u, uhat, w, what) agrees with the vector
field on the diagonal and is monotone in the mixed-monotone sense: its rows
give tight lower (ordered arguments) or upper (reversed arguments) bounds on
the field over the argument intervals.  Built-ins: a kinematic vehicle with a
hand-derived trigonometric decomposition, and a generic linear system whose
decomposition comes from the Metzler/sign splittings.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch
from .intervals import metzler_split, signed_split

_TWO_PI = 2.0 * math.pi


def _extremum_in_interval(theta0, a, b):
    """True iff theta0 + 2*pi*k lies in [a, b] for some integer k."""
    if b < a:
        a, b = b, a
    k = math.ceil((a - theta0) / _TWO_PI)
    return theta0 + k * _TWO_PI <= b


def d_cos(a, ahat):
    """Minimum of cos over [a, ahat] when a <= ahat, maximum over [ahat, a]
    otherwise.  Total on both orderings."""
    if a <= ahat:
        if _extremum_in_interval(math.pi, a, ahat):
            return -1.0
        return min(math.cos(a), math.cos(ahat))
    if _extremum_in_interval(0.0, ahat, a):
        return 1.0
    return max(math.cos(a), math.cos(ahat))


def d_sin(a, ahat):
    """As d_cos but with the extrema of sin (at -pi/2 and +pi/2 mod 2*pi)."""
    if a <= ahat:
        if _extremum_in_interval(-0.5 * math.pi, a, ahat):
            return -1.0
        return min(math.sin(a), math.sin(ahat))
    if _extremum_in_interval(0.5 * math.pi, ahat, a):
        return 1.0
    return max(math.sin(a), math.sin(ahat))


def d_bilinear(v, c, vhat, chat):
    """Tight decomposition of the product v*c over corner candidates.

    Ordered arguments (v <= vhat and c <= chat) give the minimum over the four
    corners, consistently reversed arguments the maximum; mixed orderings are
    rejected.
    """
    corners = (v * c, v * chat, vhat * c, vhat * chat)
    if v <= vhat and c <= chat:
        return min(corners)
    if v >= vhat and c >= chat:
        return max(corners)
    raise ValueError(
        f"d_bilinear needs consistently ordered pairs, got ({v}, {vhat}) and ({c}, {chat})"
    )


def _ordered_pair(lo, hi, descending):
    """Sort a mathematically ordered pair into the block's orientation; absorbs
    sub-ulp inversions from upstream float noise."""
    if descending:
        return (lo, hi) if lo >= hi else (hi, lo)
    return (lo, hi) if lo <= hi else (hi, lo)


class SystemModel:
    """Base class: dimensions, an exact vector field, and a decomposition."""

    n = 0
    p = 0
    q = 0
    name = "system"
    state_labels = ()

    def vector_field(self, x, u, w):
        raise NotImplementedError

    def decomposition(self, x, xhat, u, uhat, w, what):
        raise NotImplementedError

    def _w_component(self, w):
        w = np.asarray(w, dtype=float)
        if w.ndim == 0:
            return w
        if w.shape[-1] != self.q:
            raise DimensionMismatch(
                f"disturbance must have last dimension {self.q}, got {w.shape}"
            )
        return w[..., 0] if self.q == 1 else w


class VehicleModel(SystemModel):
    """Planar kinematic vehicle: state (px, py, phi, v), inputs (force, steer),
    additive force disturbance.

    The slip angle is beta(u2) = arctan(l_f / (l_f + l_r) * tan(u2)); see the
    docs for the alternative l_r-numerator convention, selectable via the
    wheelbase parameters.
    """

    n = 4
    p = 2
    q = 1
    name = "vehicle"
    state_labels = ("px", "py", "phi", "v")

    def __init__(self, l_f=1.0, l_r=1.0):
        if l_f <= 0 or l_r <= 0:
            raise ValueError("wheelbase lengths must be positive")
        self.l_f = float(l_f)
        self.l_r = float(l_r)
        self._beta_gain = self.l_f / (self.l_f + self.l_r)

    def beta(self, u2):
        u2 = np.asarray(u2, dtype=float)
        if np.any(np.abs(u2) >= 0.5 * math.pi):
            raise ValueError("steering angle must lie strictly inside (-pi/2, pi/2)")
        return np.arctan(self._beta_gain * np.tan(u2))

    def vector_field(self, x, u, w):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v = x[..., 3]
        heading = x[..., 2] + self.beta(u[..., 1])
        b = self.beta(u[..., 1])
        out = np.empty_like(x)
        out[..., 0] = v * np.cos(heading)
        out[..., 1] = v * np.sin(heading)
        out[..., 2] = v / self.l_r * np.sin(b)
        out[..., 3] = u[..., 0] + self._w_component(w)
        return out

    def decomposition(self, x, xhat, u, uhat, w, what):
        x = np.asarray(x, dtype=float)
        xhat = np.asarray(xhat, dtype=float)
        u = np.asarray(u, dtype=float)
        uhat = np.asarray(uhat, dtype=float)
        w0 = float(self._w_component(w))

        up = bool(np.all(x <= xhat) and np.all(u <= uhat))
        down = bool(np.all(xhat <= x) and np.all(uhat <= u))
        if not (up or down):
            raise ValueError("decomposition arguments must be consistently ordered")
        desc = not up  # point case falls into the ascending branch

        b = float(self.beta(u[1]))
        bh = float(self.beta(uhat[1]))
        phi, phih = float(x[2]), float(xhat[2])
        v, vh = float(x[3]), float(xhat[3])
        a, ah = phi + b, phih + bh

        cos_pair = _ordered_pair(d_cos(a, ah), d_cos(ah, a), desc)
        sin_pair = _ordered_pair(d_sin(a, ah), d_sin(ah, a), desc)
        sb_pair = _ordered_pair(d_sin(b, bh), d_sin(bh, b), desc)

        return np.array(
            [
                d_bilinear(v, cos_pair[0], vh, cos_pair[1]),
                d_bilinear(v, sin_pair[0], vh, sin_pair[1]),
                d_bilinear(v / self.l_r, sb_pair[0], vh / self.l_r, sb_pair[1]),
                float(u[0]) + w0,
            ]
        )


class LinearSystemModel(SystemModel):
    """Linear plant  xdot = A x + B u + C w + c  with the Metzler/sign-split
    decomposition."""

    name = "linear"

    def __init__(self, A, B, C=None, c=None, name="linear", state_labels=None):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        n = A.shape[0]
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {B.shape}")
        if C is None:
            C = np.zeros((n, 1))
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != n:
            raise DimensionMismatch(f"C must have {n} rows, got {C.shape}")
        self.A = A
        self.B = B
        self.C = C
        self.c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
        if self.c.shape != (n,):
            raise DimensionMismatch(f"offset c must have shape ({n},)")
        self.n = n
        self.p = B.shape[1]
        self.q = C.shape[1]
        self.name = name
        self.state_labels = tuple(state_labels or (f"x{i}" for i in range(n)))
        ms = metzler_split(A)
        self._A_mzl, self._A_nonmzl = ms.mzl, ms.nonmzl
        sb = signed_split(B)
        self._Bp, self._Bm = sb.plus, sb.minus
        sc = signed_split(C)
        self._Cp, self._Cm = sc.plus, sc.minus

    def vector_field(self, x, u, w):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        return x @ self.A.T + u @ self.B.T + w @ self.C.T + self.c

    def decomposition(self, x, xhat, u, uhat, w, what):
        return (
            self._A_mzl @ np.asarray(x, dtype=float)
            + self._A_nonmzl @ np.asarray(xhat, dtype=float)
            + self._Bp @ np.asarray(u, dtype=float)
            + self._Bm @ np.asarray(uhat, dtype=float)
            + self._Cp @ np.asarray(w, dtype=float)
            + self._Cm @ np.asarray(what, dtype=float)
            + self.c
        )


def vehicle_field(model: VehicleModel, x, u, w):
    return model.vector_field(x, u, w)


def vehicle_decomposition(model: VehicleModel, x, xhat, u, uhat, w, what):
    return model.decomposition(x, xhat, u, uhat, w, what)


def linear_decomposition(model: LinearSystemModel, x, xhat, u, uhat, w, what):
    return model.decomposition(x, xhat, u, uhat, w, what)


def tight_decomposition_oracle(
    field, x, xhat, u, uhat, w, what, i, grid=21, budget=10_000_000
):
    """Brute-force row of the tight open-loop decomposition, for tests.

    Grids the constrained set  z in [x, xhat] with z_i pinned to x_i,
    eta in [u, uhat], xi in [w, what]  and returns the minimum of field row i
    (ordered arguments) or the maximum (consistently reversed arguments).
    Degenerate axes collapse to a single grid point.  Any valid decomposition's
    lower output is <= this value at the same arguments.
    """
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    u = np.asarray(u, dtype=float)
    uhat = np.asarray(uhat, dtype=float)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    what = np.atleast_1d(np.asarray(what, dtype=float))

    up = bool(np.all(x <= xhat) and np.all(u <= uhat) and np.all(w <= what))
    down = bool(np.all(xhat <= x) and np.all(uhat <= u) and np.all(what <= w))
    if not (up or down):
        raise ValueError("oracle arguments must be consistently ordered")

    def axis(lo, hi):
        if lo == hi:
            return np.array([lo])
        return np.linspace(lo, hi, grid)

    lo_x, hi_x = (x, xhat) if up else (xhat, x)
    lo_u, hi_u = (u, uhat) if up else (uhat, u)
    lo_w, hi_w = (w, what) if up else (what, w)

    axes = []
    for j in range(x.shape[0]):
        if j == i:
            axes.append(np.array([x[j]]))
        else:
            axes.append(axis(lo_x[j], hi_x[j]))
    axes += [axis(a, b) for a, b in zip(lo_u, hi_u)]
    axes += [axis(a, b) for a, b in zip(lo_w, hi_w)]

    total = 1
    for ax in axes:
        total *= ax.shape[0]
    if total > budget:
        raise ValueError(f"grid of {total} evaluations exceeds budget {budget}")

    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    nx = x.shape[0]
    nu = u.shape[0]
    z = pts[:, :nx]
    eta = pts[:, nx : nx + nu]
    xi = pts[:, nx + nu :]
    values = np.asarray(field(z, eta, xi))[..., i]
    return float(values.min() if up else values.max())
