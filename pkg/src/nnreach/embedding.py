"""Closed-loop embedding right-hand sides.

Given a plant decomposition F and network envelopes, each strategy builds the
2n-dimensional vector field whose single trajectory carries the moving lower
and upper corners of a reachable-set over-approximation:

* ``global``: one envelope per evaluation, applied at the full interval
  corners for every row.
* ``hybrid``: one envelope per evaluation, applied at coordinate-pinched
  corners per row (tighter, same cost).
* ``local``: a fresh envelope per pinched sub-interval and row (tightest,
  2n backward passes per evaluation).
* ``frozen-hybrid``: ``hybrid`` with envelopes frozen on a partition box for
  one actuation step; evaluation outside that box is an error.
* ``linear`` / ``linear-hybrid``: closed forms for linear plants, combining
  the plant matrix with the envelope matrices before (resp. after) the
  Metzler splitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import LinearBounds, crown_bounds, inclusion_G
from .errors import BoundsEscape, ConfigError, DimensionMismatch, OrderingViolation
from .intervals import Box, metzler_split
from .network import FeedForwardNetwork, forward
from .systems import LinearSystemModel, SystemModel

STRATEGIES = (
    "global",
    "hybrid",
    "local",
    "frozen-hybrid",
    "linear",
    "linear-hybrid",
)

STRATEGY_ALIASES = {
    "G": "global",
    "H": "hybrid",
    "L": "local",
    "Bs": "frozen-hybrid",
    "Lin": "linear",
    "LinH": "linear-hybrid",
}

LIVE_STRATEGIES = ("global", "hybrid", "local", "linear", "linear-hybrid")


def canonical_strategy(name: str) -> str:
    name = STRATEGY_ALIASES.get(name, name)
    if name not in STRATEGIES:
        raise ConfigError(
            f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}"
        )
    return name


@dataclass
class EmbeddingRHS:
    """Callable right-hand side of the 2n embedding system.

    Stateless and pure given its immutable context; safe to evaluate from
    concurrent partition branches.
    """

    strategy: str
    system: SystemModel
    net: FeedForwardNetwork
    disturbance: Box
    frozen: LinearBounds | None = None
    intermediate: str = "ibp"
    drift_tol: float = 1e-9
    _eval: callable = field(init=False, repr=False)

    def __post_init__(self):
        self.strategy = canonical_strategy(self.strategy)
        if self.disturbance.dim != self.system.q:
            raise DimensionMismatch(
                f"disturbance box has dimension {self.disturbance.dim}, "
                f"system expects {self.system.q}"
            )
        if self.net.input_dim != self.system.n or self.net.output_dim != self.system.p:
            raise DimensionMismatch(
                f"network maps {self.net.input_dim} -> {self.net.output_dim}, "
                f"plant expects {self.system.n} -> {self.system.p}"
            )
        if self.strategy == "frozen-hybrid" and self.frozen is None:
            raise ConfigError("frozen-hybrid needs precomputed bounds (frozen=...)")
        if self.strategy in ("linear", "linear-hybrid") and not isinstance(
            self.system, LinearSystemModel
        ):
            raise ConfigError(f"strategy {self.strategy!r} requires a linear plant")
        self._eval = {
            "global": self._eval_global,
            "hybrid": self._eval_hybrid,
            "local": self._eval_local,
            "frozen-hybrid": self._eval_hybrid,
            "linear": self._eval_linear,
            "linear-hybrid": self._eval_linear,
        }[self.strategy]

    # -- plumbing -----------------------------------------------------------

    def _split_state(self, state):
        state = np.asarray(state, dtype=float)
        n = self.system.n
        if state.shape != (2 * n,):
            raise DimensionMismatch(
                f"embedding state must have shape ({2 * n},), got {state.shape}"
            )
        x, xh = state[:n], state[n:]
        gap = x - xh
        if np.any(gap > self.drift_tol):
            bad = np.nonzero(gap > self.drift_tol)[0]
            raise OrderingViolation(
                f"embedding state lost ordering in coordinates {bad.tolist()} "
                f"by {gap[bad].tolist()}"
            )
        # inversions inside the drift tolerance are reordered, not clamped away
        return np.minimum(x, xh), np.maximum(x, xh)

    def _bounds_for(self, lo, hi):
        if self.frozen is not None:
            tol = self.drift_tol
            below = lo < self.frozen.valid_on.lower - tol
            above = hi > self.frozen.valid_on.upper + tol
            if np.any(below) or np.any(above):
                bad = np.nonzero(below | above)[0]
                amounts = np.maximum(
                    self.frozen.valid_on.lower - lo, hi - self.frozen.valid_on.upper
                )[bad]
                raise BoundsEscape(
                    "state escaped the frozen-bounds box in coordinates "
                    f"{bad.tolist()} by {amounts.tolist()}; increase the "
                    "partition count or shrink the actuation step",
                    dims=bad.tolist(),
                    amounts=amounts.tolist(),
                )
            return self.frozen
        return crown_bounds(self.net, Box(lo, hi), intermediate=self.intermediate)

    def __call__(self, state):
        lo, hi = self._split_state(state)
        return self._eval(lo, hi)

    # -- strategies ----------------------------------------------------------

    def _eval_global(self, lo, hi):
        lb = self._bounds_for(lo, hi)
        nl, nu = inclusion_G(lb, lo, hi, check=False)
        wl, wu = self.disturbance.lower, self.disturbance.upper
        lower = self.system.decomposition(lo, hi, nl, nu, wl, wu)
        upper = self.system.decomposition(hi, lo, nu, nl, wu, wl)
        return np.concatenate([lower, upper])

    def _pinched_envelopes(self, lb, lo, hi):
        """Envelope corners at the 2n coordinate-pinched evaluation points.

        Row i of the first two matrices bounds the network over
        [lo, hi with coordinate i pinned to lo]; the last two mirror it for
        the upper block.
        """
        base_l = lb._Alp @ lo + lb._Aln @ hi + lb.b_lower
        base_u = lb._Aup @ hi + lb._Aun @ lo + lb.b_upper
        d = hi - lo
        low_pin_l = base_l[None, :] - d[:, None] * lb._Aln.T
        low_pin_u = base_u[None, :] - d[:, None] * lb._Aup.T
        up_pin_u = base_u[None, :] + d[:, None] * lb._Aun.T
        up_pin_l = base_l[None, :] + d[:, None] * lb._Alp.T
        return low_pin_l, low_pin_u, up_pin_l, up_pin_u

    def _eval_hybrid(self, lo, hi):
        lb = self._bounds_for(lo, hi)
        low_l, low_u, up_l, up_u = self._pinched_envelopes(lb, lo, hi)
        wl, wu = self.disturbance.lower, self.disturbance.upper
        n = self.system.n
        out = np.empty(2 * n)
        for i in range(n):
            out[i] = self.system.decomposition(lo, hi, low_l[i], low_u[i], wl, wu)[i]
            out[n + i] = self.system.decomposition(hi, lo, up_u[i], up_l[i], wu, wl)[i]
        return out

    def _eval_local(self, lo, hi):
        wl, wu = self.disturbance.lower, self.disturbance.upper
        n = self.system.n
        out = np.empty(2 * n)
        for i in range(n):
            pin_hi = hi.copy()
            pin_hi[i] = lo[i]
            lb = crown_bounds(self.net, Box(lo, pin_hi), intermediate=self.intermediate)
            nl, nu = inclusion_G(lb, lo, pin_hi, check=False)
            out[i] = self.system.decomposition(lo, hi, nl, nu, wl, wu)[i]

            pin_lo = lo.copy()
            pin_lo[i] = hi[i]
            lb = crown_bounds(self.net, Box(pin_lo, hi), intermediate=self.intermediate)
            nl, nu = inclusion_G(lb, pin_lo, hi, check=False)
            out[n + i] = self.system.decomposition(hi, lo, nu, nl, wu, wl)[i]
        return out

    def _eval_linear(self, lo, hi):
        sys: LinearSystemModel = self.system
        lb = self._bounds_for(lo, hi)
        R = sys._Bp @ lb.A_lower + sys._Bm @ lb.A_upper
        S = sys._Bp @ lb.A_upper + sys._Bm @ lb.A_lower
        wl, wu = self.disturbance.lower, self.disturbance.upper
        bias_l = sys._Bp @ lb.b_lower + sys._Bm @ lb.b_upper + sys._Cp @ wl + sys._Cm @ wu + sys.c
        bias_u = sys._Bp @ lb.b_upper + sys._Bm @ lb.b_lower + sys._Cm @ wl + sys._Cp @ wu + sys.c
        if self.strategy == "linear":
            mr = metzler_split(sys.A + R)
            ms = metzler_split(sys.A + S)
            lower = mr.mzl @ lo + mr.nonmzl @ hi + bias_l
            upper = ms.nonmzl @ lo + ms.mzl @ hi + bias_u
        else:
            mr = metzler_split(R)
            ms = metzler_split(S)
            lower = (sys._A_mzl + mr.mzl) @ lo + (sys._A_nonmzl + mr.nonmzl) @ hi + bias_l
            upper = (sys._A_nonmzl + ms.nonmzl) @ lo + (sys._A_mzl + ms.mzl) @ hi + bias_u
        return np.concatenate([lower, upper])


def make_rhs(
    strategy,
    system,
    net,
    disturbance: Box,
    frozen: LinearBounds | None = None,
    intermediate: str = "ibp",
) -> EmbeddingRHS:
    """Build the embedding right-hand side for a strategy tag (long or short)."""
    return EmbeddingRHS(
        strategy=strategy,
        system=system,
        net=net,
        disturbance=disturbance,
        frozen=frozen,
        intermediate=intermediate,
    )


def closed_loop_field(system: SystemModel, net: FeedForwardNetwork):
    """The true closed loop xdot = f(x, N(x), w); x may be batched."""

    def field(x, w):
        return system.vector_field(x, forward(net, x), w)

    return field
