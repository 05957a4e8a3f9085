"""Pre-activation interval bounds, backward linear bound propagation, and the
two network inclusion functions built from them.

``crown_bounds`` produces affine envelopes  A_lower x + b_lower <= N(x) <=
A_upper x + b_upper  valid on a given input box, by propagating linear
coefficients backward through the layers and replacing each activation with a
per-neuron linear envelope chosen by coefficient sign.  ``inclusion_G``
evaluates those envelopes at interval corners to bound the network over any
sub-interval; ``inclusion_H`` recomputes the envelopes on the queried interval
itself, which makes it valid everywhere at the cost of one backward pass per
call.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import BoundsEscape, ConfigError, DimensionMismatch
from .intervals import Box
from .network import FeedForwardNetwork, apply_activation


class _CallCounter:
    """Thread-safe counter for backward-pass invocations (reported by the CLI)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def bump(self):
        with self._lock:
            self._count += 1

    def read(self):
        with self._lock:
            return self._count

    def reset(self):
        with self._lock:
            self._count = 0


crown_call_counter = _CallCounter()

# Lower-slope rule for unstable ReLU neurons in the backward pass.  The
# classic adaptive choice (slope 1 when U >= |L|, else 0) gives the tightest
# per-neuron envelope but depends on the box, which breaks the monotone
# tightening property that all strategy-ordering results rest on: shrinking a
# box can flip the choice and locally loosen a bound.  A box-independent
# slope keeps the envelope family pointwise monotone, so nested boxes always
# tighten and the global/hybrid/local dominance chain holds.  "zero" is the
# default; "adaptive" remains available where only single-box soundness
# matters.
DEFAULT_RELU_LOWER = "zero"


# ---------------------------------------------------------------------------
# per-neuron relaxations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayerRelaxation:
    """Per-neuron linear envelopes for one activation layer.

    The envelope lines are ``alpha * (z + beta)``; when ``alpha`` is zero the
    line degenerates to the constant ``beta`` (the convention under which
    plain interval propagation is the alpha = 0 special case).
    """

    alpha_U: np.ndarray
    beta_U: np.ndarray
    alpha_L: np.ndarray
    beta_L: np.ndarray

    def upper_line(self, z):
        return np.where(self.alpha_U != 0, self.alpha_U * (z + self.beta_U), self.beta_U)

    def lower_line(self, z):
        return np.where(self.alpha_L != 0, self.alpha_L * (z + self.beta_L), self.beta_L)

    def slopes_intercepts(self):
        """(a_U, c_U, a_L, c_L) with lines written as a*z + c."""
        cU = np.where(self.alpha_U != 0, self.alpha_U * self.beta_U, self.beta_U)
        cL = np.where(self.alpha_L != 0, self.alpha_L * self.beta_L, self.beta_L)
        return self.alpha_U, cU, self.alpha_L, cL


def relu_relaxation(L, U, lower_slope="adaptive"):
    """ReLU envelope parameters (alpha_U, beta_U, alpha_L, beta_L) on [L, U].

    Stable-inactive neurons get the zero function on both sides, stable-active
    neurons the identity.  For unstable neurons the upper line is the chord
    through (L, 0) and (U, U); the lower slope is either adaptive (1 when
    U >= |L|, ties to 1, else 0) or the fixed value named by ``lower_slope``
    ("zero" / "one"), see DEFAULT_RELU_LOWER for why the backward pass uses a
    fixed rule.
    """
    L = np.asarray(L, dtype=float)
    U = np.asarray(U, dtype=float)
    if np.any(L > U):
        raise ValueError("relaxation requires L <= U")
    aU = np.zeros_like(L)
    bU = np.zeros_like(L)
    aL = np.zeros_like(L)
    bL = np.zeros_like(L)
    active = L >= 0
    aU[active] = 1.0
    aL[active] = 1.0
    unstable = (~active) & (U > 0)
    if np.any(unstable):
        Lu = L[unstable]
        Uu = U[unstable]
        aU[unstable] = Uu / (Uu - Lu)
        bU[unstable] = -Lu
        if lower_slope == "adaptive":
            aL[unstable] = (Uu >= -Lu).astype(float)
        elif lower_slope == "one":
            aL[unstable] = 1.0
        elif lower_slope != "zero":
            raise ConfigError(f"unknown ReLU lower-slope rule {lower_slope!r}")
    return aU, bU, aL, bL


def _identity_relaxation(L, U):
    ones = np.ones_like(np.asarray(L, dtype=float))
    zeros = np.zeros_like(ones)
    return ones, zeros, ones, zeros


def _tangent_point(phi, dphi, anchor, lo, hi, iters=64):
    """Vectorized bisection for the point d in [lo, hi] where the line through
    (anchor, phi(anchor)) is tangent to phi.  g(lo) >= 0 >= g(hi) is assumed;
    returns the g >= 0 bracket end so the resulting slope stays on the sound
    side."""
    a = np.asarray(lo, dtype=float).copy()
    b = np.asarray(hi, dtype=float).copy()
    fa = phi(anchor)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        g = dphi(mid) * (mid - anchor) - (phi(mid) - fa)
        pos = g >= 0
        a = np.where(pos, mid, a)
        b = np.where(pos, b, mid)
    return a


def _sshape_relaxation(phi, dphi, L, U):
    """Tangent/secant envelopes for an s-shaped activation (sigmoid, tanh).

    Convex below zero, concave above; tangent lines bound the curved side and
    secants the other, with anchored tangents on sign-crossing intervals.
    Returns slope/intercept arrays (a_U, c_U, a_L, c_L).
    """
    L = np.asarray(L, dtype=float)
    U = np.asarray(U, dtype=float)
    aU = np.empty_like(L)
    cU = np.empty_like(L)
    aL = np.empty_like(L)
    cL = np.empty_like(L)

    def chord(lo, hi):
        wid = hi - lo
        slope = np.where(wid > 0, (phi(hi) - phi(lo)) / np.where(wid > 0, wid, 1.0), dphi(lo))
        return slope, phi(lo) - slope * lo

    def tangent(at):
        slope = dphi(at)
        return slope, phi(at) - slope * at

    point = L == U
    if np.any(point):
        a, c = tangent(L[point])
        aU[point] = a
        cU[point] = c
        aL[point] = a
        cL[point] = c

    concave = (~point) & (L >= 0)
    if np.any(concave):
        a, c = tangent(0.5 * (L[concave] + U[concave]))
        aU[concave] = a
        cU[concave] = c
        a, c = chord(L[concave], U[concave])
        aL[concave] = a
        cL[concave] = c

    convex = (~point) & (U <= 0)
    if np.any(convex):
        a, c = chord(L[convex], U[convex])
        aU[convex] = a
        cU[convex] = c
        a, c = tangent(0.5 * (L[convex] + U[convex]))
        aL[convex] = a
        cL[convex] = c

    cross = ~(point | concave | convex)
    if np.any(cross):
        Lc = L[cross]
        Uc = U[cross]
        slope_ch, icpt_ch = chord(Lc, Uc)
        # upper side: the chord is sound iff the curve is still at least as
        # steep at U; otherwise anchor a tangent at (L, phi(L)).
        chord_ok = dphi(Uc) >= slope_ch
        d = _tangent_point(phi, dphi, Lc, np.zeros_like(Uc), Uc)
        a_t = dphi(d)
        c_t = phi(Lc) - a_t * Lc
        aU[cross] = np.where(chord_ok, slope_ch, a_t)
        cU[cross] = np.where(chord_ok, icpt_ch, c_t)
        # lower side mirrors with the anchor at (U, phi(U)).
        chord_ok = dphi(Lc) >= slope_ch
        d = -_tangent_point(
            lambda z: -phi(-z), lambda z: dphi(-z), -Uc, np.zeros_like(Lc), -Lc
        )
        a_t = dphi(d)
        c_t = phi(Uc) - a_t * Uc
        aL[cross] = np.where(chord_ok, slope_ch, a_t)
        cL[cross] = np.where(chord_ok, icpt_ch, c_t)
    return aU, cU, aL, cL


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _dsigmoid(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


def _dtanh(z):
    t = np.tanh(np.asarray(z, dtype=float))
    return 1.0 - t * t


def activation_relaxation(act, L, U, mode="linear", relu_lower=None) -> LayerRelaxation:
    """Envelope for one activation layer on pre-activation interval [L, U].

    ``mode="constant"`` replaces the lines by the constant post-activation
    bounds (alpha = 0, beta = phi(L) / phi(U)), which reduces the backward
    pass to plain interval propagation.
    """
    L = np.asarray(L, dtype=float)
    U = np.asarray(U, dtype=float)
    if np.any(L > U):
        raise ValueError("relaxation requires L <= U")
    if mode == "constant":
        zeros = np.zeros_like(L)
        return LayerRelaxation(zeros, apply_activation(act, U), zeros.copy(), apply_activation(act, L))
    if act == "relu":
        aU, bU, aL, bL = relu_relaxation(L, U, relu_lower or DEFAULT_RELU_LOWER)
        return LayerRelaxation(aU, bU, aL, bL)
    if act == "identity":
        aU, bU, aL, bL = _identity_relaxation(L, U)
        return LayerRelaxation(aU, bU, aL, bL)
    if act == "sigmoid":
        aU, cU, aL, cL = _sshape_relaxation(_sigmoid, _dsigmoid, L, U)
    elif act == "tanh":
        aU, cU, aL, cL = _sshape_relaxation(np.tanh, _dtanh, L, U)
    else:
        raise ConfigError(f"no relaxation table for activation {act!r}")
    bU = np.where(aU != 0, cU / np.where(aU != 0, aU, 1.0), cU)
    bL = np.where(aL != 0, cL / np.where(aL != 0, aL, 1.0), cL)
    return LayerRelaxation(aU, bU, aL, bL)


# ---------------------------------------------------------------------------
# interval bound propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreActivationBounds:
    """Interval bounds per affine-map output, the last entry being the network
    output itself."""

    layers: tuple  # of (L, U) pairs

    def hidden(self):
        return self.layers[:-1]

    def output_box(self):
        L, U = self.layers[-1]
        return Box(L, U)


def _affine_interval(W, b, lo, hi):
    Wp = np.maximum(W, 0.0)
    Wn = np.minimum(W, 0.0)
    return Wp @ lo + Wn @ hi + b, Wp @ hi + Wn @ lo + b


def ibp_bounds(net: FeedForwardNetwork, box: Box) -> PreActivationBounds:
    """Layer-by-layer interval propagation through affine maps and monotone
    activations."""
    if box.dim != net.input_dim:
        raise DimensionMismatch(
            f"network expects input dimension {net.input_dim}, got {box.dim}"
        )
    lo, hi = box.lower, box.upper
    pairs = []
    for layer in net.layers:
        L, U = _affine_interval(layer.W, layer.b, lo, hi)
        pairs.append((L, U))
        lo = apply_activation(layer.act, L)
        hi = apply_activation(layer.act, U)
    pairs.append(_affine_interval(net.out_W, net.out_b, lo, hi))
    return PreActivationBounds(tuple(pairs))


# ---------------------------------------------------------------------------
# backward linear bound propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearBounds:
    """Affine envelopes of the network over ``valid_on``.

    The signed splits of both coefficient matrices are cached at construction
    because corner evaluations happen in integrator inner loops.
    """

    A_lower: np.ndarray
    b_lower: np.ndarray
    A_upper: np.ndarray
    b_upper: np.ndarray
    valid_on: Box

    def __post_init__(self):
        for name in ("A_lower", "A_upper"):
            A = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, A)
        object.__setattr__(self, "_Alp", np.maximum(self.A_lower, 0.0))
        object.__setattr__(self, "_Aln", np.minimum(self.A_lower, 0.0))
        object.__setattr__(self, "_Aup", np.maximum(self.A_upper, 0.0))
        object.__setattr__(self, "_Aun", np.minimum(self.A_upper, 0.0))

    @property
    def input_dim(self):
        return self.A_lower.shape[1]

    @property
    def output_dim(self):
        return self.A_lower.shape[0]

    def output_box(self) -> Box:
        lo, hi = inclusion_G(self, self.valid_on.lower, self.valid_on.upper)
        return Box(lo, hi)

    def to_dict(self):
        return {
            "A_lower": self.A_lower.tolist(),
            "b_lower": self.b_lower.tolist(),
            "A_upper": self.A_upper.tolist(),
            "b_upper": self.b_upper.tolist(),
            "valid_on": {
                "lower": self.valid_on.lower.tolist(),
                "upper": self.valid_on.upper.tolist(),
            },
        }


def _relax_layers(net, pre, mode, relu_lower):
    return [
        activation_relaxation(layer.act, L, U, mode, relu_lower).slopes_intercepts()
        for layer, (L, U) in zip(net.layers, pre)
    ]


def _backward_to_input(net, target, relaxes):
    """Propagate the affine map ``target`` backward to the input.

    Returns (A_l, c_l, A_u, c_u) such that on the box the relaxations were
    built for, A_l x + c_l <= (output of affine map ``target``) <= A_u x + c_u.
    """
    W, b = net.affine(target)
    A_u = W
    c_u = b
    A_l = W
    c_l = b
    for j in range(target - 1, -1, -1):
        aU, cU, aL, cL = relaxes[j]
        Aup = np.maximum(A_u, 0.0)
        Aun = np.minimum(A_u, 0.0)
        Alp = np.maximum(A_l, 0.0)
        Aln = np.minimum(A_l, 0.0)
        c_u = c_u + (Aup @ cU + Aun @ cL)
        c_l = c_l + (Alp @ cL + Aln @ cU)
        A_u = Aup * aU + Aun * aL
        A_l = Alp * aL + Aln * aU
        Wj, bj = net.affine(j)
        c_u = c_u + A_u @ bj
        c_l = c_l + A_l @ bj
        A_u = A_u @ Wj
        A_l = A_l @ Wj
    return A_l, c_l, A_u, c_u


def _concretize(A_l, c_l, A_u, c_u, box):
    lo = np.maximum(A_l, 0.0) @ box.lower + np.minimum(A_l, 0.0) @ box.upper + c_l
    hi = np.maximum(A_u, 0.0) @ box.upper + np.minimum(A_u, 0.0) @ box.lower + c_u
    return lo, hi


def crown_bounds(
    net: FeedForwardNetwork,
    box: Box,
    intermediate: str = "ibp",
    relaxation: str = "linear",
    relu_lower: str | None = None,
) -> LinearBounds:
    """Backward linear bound propagation over an input box.

    Args:
        net: the network to bound.
        box: input interval the bounds must hold on.
        intermediate: where per-layer pre-activation intervals come from;
            ``"ibp"`` uses interval propagation (cheap), ``"crown"`` runs the
            backward pass recursively on each truncated network (tighter).
        relaxation: ``"linear"`` for the usual envelopes, ``"constant"`` to
            force constant lines (reproduces interval propagation exactly).
        relu_lower: lower-slope rule for unstable ReLU neurons; defaults to
            DEFAULT_RELU_LOWER.
    """
    if box.dim != net.input_dim:
        raise DimensionMismatch(
            f"network expects input dimension {net.input_dim}, got {box.dim}"
        )
    if intermediate not in ("ibp", "crown"):
        raise ConfigError(f"unknown intermediate mode {intermediate!r}")
    crown_call_counter.bump()
    if intermediate == "ibp":
        pre = list(ibp_bounds(net, box).hidden())
    else:
        pre = []
        relaxes = []
        for t in range(net.depth):
            A_l, c_l, A_u, c_u = _backward_to_input(net, t, relaxes)
            L, U = _concretize(A_l, c_l, A_u, c_u, box)
            pre.append((L, U))
            relaxes.append(
                activation_relaxation(
                    net.layers[t].act, L, U, relaxation, relu_lower
                ).slopes_intercepts()
            )
    relaxes = _relax_layers(net, pre, relaxation, relu_lower)
    A_l, c_l, A_u, c_u = _backward_to_input(net, net.depth, relaxes)
    return LinearBounds(A_l, c_l, A_u, c_u, box)


def inclusion_G(lb: LinearBounds, eta, etahat, check=True):
    """Bound N over [eta, etahat] using envelopes precomputed on lb.valid_on.

    lower = [A_lower]+ eta + [A_lower]- etahat + b_lower and mirrored for the
    upper bound.  The queried interval must sit inside lb.valid_on.
    """
    eta = np.asarray(eta, dtype=float)
    etahat = np.asarray(etahat, dtype=float)
    if check:
        tol = 1e-9
        low_ok = eta >= lb.valid_on.lower - tol
        high_ok = etahat <= lb.valid_on.upper + tol
        if not (np.all(low_ok) and np.all(high_ok)):
            bad = np.nonzero(~(low_ok & high_ok))[0]
            amounts = np.maximum(
                lb.valid_on.lower - eta, etahat - lb.valid_on.upper
            )[bad]
            raise BoundsEscape(
                f"query interval leaves the bound validity box in coordinates "
                f"{bad.tolist()} by {amounts.tolist()}",
                dims=bad.tolist(),
                amounts=amounts.tolist(),
            )
    lower = lb._Alp @ eta + lb._Aln @ etahat + lb.b_lower
    upper = lb._Aup @ etahat + lb._Aun @ eta + lb.b_upper
    return lower, upper


def inclusion_H(net: FeedForwardNetwork, x, xhat, intermediate="ibp"):
    """Bound N over [x, xhat], recomputing envelopes on the queried interval.

    Valid for any ordered pair; collapses to the exact network value on
    degenerate intervals.
    """
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    if np.any(x > xhat):
        raise ValueError("inclusion_H requires x <= xhat componentwise")
    lb = crown_bounds(net, Box(x, xhat), intermediate=intermediate)
    return inclusion_G(lb, x, xhat, check=False)
