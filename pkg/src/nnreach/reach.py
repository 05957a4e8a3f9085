"""Fixed-step integration of embedding systems, the two-level partition
driver, reach-tube assembly, Monte Carlo falsification, and safety checking.

The driver re-hulls the current frame at every actuation step, splits the
hull into ``partitions`` cells (network envelopes are computed per cell for
the frozen strategy), splits each cell into ``subpartitions`` sub-cells, and
integrates every sub-cell for one actuation step.  Branches are independent
and may run on a thread pool; frames are assembled in branch-index order so
results are identical for any worker count.
"""

from __future__ import annotations

import concurrent.futures
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import crown_bounds, crown_call_counter
from .config import ScenarioConfig
from .embedding import EmbeddingRHS, closed_loop_field, make_rhs
from .errors import (
    BranchError,
    ConfigError,
    DimensionMismatch,
    NNReachError,
    NumericsError,
    OrderingViolation,
)
from .intervals import Box, EmbeddingState
from .network import forward

log = logging.getLogger("nnreach.reach")


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorConfig:
    """Explicit fixed-step scheme: forward Euler or classical RK4."""

    method: str = "rk4"
    step: float = 0.01

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ConfigError(f"unknown integrator {self.method!r}")
        if not self.step > 0:
            raise ConfigError("integrator step must be positive")


def _step_once(f, y, h, method):
    if method == "euler":
        return y + h * f(y)
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_count(duration, step):
    k = int(round(duration / step))
    if k < 0 or abs(k * step - duration) > 1e-9 * max(1.0, abs(duration)):
        raise ConfigError(
            f"duration {duration} is not an integer multiple of step {step}"
        )
    return k


def integrate_embedding(rhs: EmbeddingRHS, init, duration, cfg: IntegratorConfig):
    """Integrate the 2n embedding ODE for ``duration`` and return the final
    state.  Asserts ordering (up to 1e-9 drift) and finiteness after every
    step; violations abort the run rather than being clamped away."""
    if isinstance(init, EmbeddingState):
        y = init.stacked()
    else:
        y = np.asarray(init, dtype=float).copy()
    n = y.shape[0] // 2
    if np.any(y[:n] > y[n:]):
        raise OrderingViolation("initial embedding state is not ordered")
    for _ in range(_step_count(duration, cfg.step)):
        y = _step_once(rhs, y, cfg.step, cfg.method)
        if not np.all(np.isfinite(y)):
            raise NumericsError("embedding state became non-finite")
        gap = y[:n] - y[n:]
        if np.any(gap > 1e-9):
            bad = np.nonzero(gap > 1e-9)[0]
            raise OrderingViolation(
                f"embedding ordering violated in coordinates {bad.tolist()} "
                f"by {gap[bad].tolist()}"
            )
    return EmbeddingState(y[:n], y[n:])


# ---------------------------------------------------------------------------
# partitioning
# ---------------------------------------------------------------------------

def uniform_partition(box: Box, count: int):
    """Deterministic grid partition of a box into exactly ``count`` cells.

    The widest axis (current cell width, lowest index on ties) is halved
    until the grid has at least ``count`` cells; counts that cannot be met
    exactly this way (anything but a product of per-axis powers of two) are
    rejected.  Cells tile the box exactly and are emitted in lexicographic
    axis order.
    """
    if count < 1:
        raise ConfigError("partition count must be >= 1")
    if count == 1:
        return [box]
    cuts = np.ones(box.dim, dtype=int)
    width = box.width.astype(float)
    while int(np.prod(cuts)) < count:
        cell = width / cuts
        axis = int(np.argmax(cell))
        cuts[axis] *= 2
    if int(np.prod(cuts)) != count:
        raise ConfigError(
            f"partition count {count} is not reachable by halving the widest "
            "axis; use a product of per-axis powers of two (1, 2, 4, 8, 16, ...)"
        )
    edges = [
        np.linspace(box.lower[j], box.upper[j], cuts[j] + 1) for j in range(box.dim)
    ]
    cells = []
    idx = np.zeros(box.dim, dtype=int)
    total = int(np.prod(cuts))
    for _ in range(total):
        lo = np.array([edges[j][idx[j]] for j in range(box.dim)])
        hi = np.array([edges[j][idx[j] + 1] for j in range(box.dim)])
        cells.append(Box(lo, hi))
        for j in range(box.dim - 1, -1, -1):
            idx[j] += 1
            if idx[j] < cuts[j]:
                break
            idx[j] = 0
    return cells


# ---------------------------------------------------------------------------
# reach tube
# ---------------------------------------------------------------------------

@dataclass
class ReachTube:
    """Time-indexed unions of boxes, one frame per actuation instant
    (including t = 0)."""

    times: np.ndarray
    frames: list  # list of lists of Box
    strategy: str
    scenario: dict
    stats: dict = field(default_factory=dict)

    def hulls(self):
        return [Box.hull(frame) for frame in self.frames]

    def num_frames(self):
        return len(self.frames)

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "scenario": self.scenario,
            "times": [float(t) for t in self.times],
            "frames": [
                [
                    {"lower": b.lower.tolist(), "upper": b.upper.tolist()}
                    for b in frame
                ]
                for frame in self.frames
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        frames = [
            [Box(entry["lower"], entry["upper"]) for entry in frame]
            for frame in doc["frames"]
        ]
        return cls(
            times=np.asarray(doc["times"], dtype=float),
            frames=frames,
            strategy=doc.get("strategy", "unknown"),
            scenario=doc.get("scenario", {}),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("time,branch,dim,lower,upper\n")
            for t, frame in zip(self.times, self.frames):
                for k, b in enumerate(frame):
                    for d in range(b.dim):
                        fh.write(
                            f"{float(t)!r},{k},{d},{b.lower[d]!r},{b.upper[d]!r}\n"
                        )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def _integrate_branch(rhs, sub: Box, dt, integ):
    final = integrate_embedding(rhs, EmbeddingState.from_box(sub), dt, integ)
    return final.to_box()


def run_algorithm1(sc: ScenarioConfig, workers: int = 1) -> ReachTube:
    """Partitioned over-approximation of the closed-loop reach sets.

    Returns the full tube (every actuation instant, not only the final
    frame).  Per-frame wall time and envelope-computation counts are attached
    as ``tube.stats`` but never serialized with the tube, so output files are
    reproducible byte for byte.
    """
    n_steps = _step_count(sc.horizon, sc.actuation_step)
    frames = []
    cells0 = [
        sub
        for cell in uniform_partition(sc.initial_set, sc.partitions)
        for sub in uniform_partition(cell, sc.subpartitions)
    ]
    frames.append(cells0)
    times = [0.0]
    stats = {"frame_seconds": [], "crown_calls": 0, "branches_per_frame": len(cells0)}
    start_calls = crown_call_counter.read()

    live_rhs = None
    if sc.strategy != "frozen-hybrid":
        live_rhs = make_rhs(sc.strategy, sc.system, sc.network, sc.disturbance)

    pool = None
    if workers > 1:
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    try:
        for j in range(1, n_steps + 1):
            t0 = time.perf_counter()
            hull = Box.hull(frames[-1])
            branches = []
            for k, cell in enumerate(uniform_partition(hull, sc.partitions)):
                if sc.strategy == "frozen-hybrid":
                    rhs = make_rhs(
                        "frozen-hybrid",
                        sc.system,
                        sc.network,
                        sc.disturbance,
                        frozen=crown_bounds(sc.network, cell),
                    )
                else:
                    rhs = live_rhs
                for l, sub in enumerate(uniform_partition(cell, sc.subpartitions)):
                    branches.append((k, l, sub, rhs))

            def work(item, frame=j):
                k, l, sub, rhs = item
                try:
                    return _integrate_branch(rhs, sub, sc.actuation_step, sc.integrator)
                except NNReachError as e:
                    raise BranchError(frame, k, l, e) from e

            if pool is None:
                boxes = [work(item) for item in branches]
            else:
                boxes = list(pool.map(work, branches))
            frames.append(boxes)
            times.append(j * sc.actuation_step)
            stats["frame_seconds"].append(time.perf_counter() - t0)
            log.info("frame %d/%d: %d branches", j, n_steps, len(boxes))
    finally:
        if pool is not None:
            pool.shutdown()

    stats["crown_calls"] = crown_call_counter.read() - start_calls
    return ReachTube(
        times=np.asarray(times),
        frames=frames,
        strategy=sc.strategy,
        scenario=sc.snapshot(),
        stats=stats,
    )


# ---------------------------------------------------------------------------
# Monte Carlo falsification
# ---------------------------------------------------------------------------

def monte_carlo_trajectories(sc: ScenarioConfig, count: int, seed: int = 0):
    """Sampled true closed-loop trajectories at the actuation instants.

    Initial states are uniform in the initial box; the disturbance is
    piecewise constant per actuation step, uniform in the disturbance box.
    The integrator matches the scenario's, so tube containment can be checked
    without discretization mismatch.  Returns (times, states) with states of
    shape (count, n_frames, n).
    """
    n_steps = _step_count(sc.horizon, sc.actuation_step)
    rng = np.random.default_rng(seed)
    n = sc.system.n
    states = np.empty((count, n_steps + 1, n))
    times = np.arange(n_steps + 1) * sc.actuation_step
    if count == 0:
        return times, states
    x = sc.initial_set.sample(rng, count)
    states[:, 0] = x
    substeps = _step_count(sc.actuation_step, sc.integrator.step)
    fcl = closed_loop_field(sc.system, sc.network)
    for j in range(1, n_steps + 1):
        w = sc.disturbance.sample(rng, count)
        f = lambda xb: fcl(xb, w)  # noqa: E731 - w is fixed within the step
        for _ in range(substeps):
            x = _step_once(f, x, sc.integrator.step, sc.integrator.method)
        if not np.all(np.isfinite(x)):
            bad = np.nonzero(~np.all(np.isfinite(x), axis=1))[0]
            raise NumericsError(
                f"closed-loop integration blew up for samples {bad.tolist()} "
                f"at t={j * sc.actuation_step}"
            )
        states[:, j] = x
    return times, states


def validate_containment(tube: ReachTube, states, slack: float = 1e-7) -> dict:
    """Check sampled trajectories against the tube's frame hulls.

    Returns a report with per-frame violation counts and the maximum margin by
    which any sample leaves a hull (negative margins mean strictly inside).
    """
    hulls = tube.hulls()
    if states.shape[1] != len(hulls):
        raise DimensionMismatch(
            f"trajectories have {states.shape[1]} instants, tube has {len(hulls)}"
        )
    per_frame = []
    worst = -np.inf
    total = 0
    for j, hull in enumerate(hulls):
        pts = states[:, j, :]
        over = np.maximum(hull.lower - pts, pts - hull.upper)
        margin = over.max(axis=1) if pts.size else np.zeros(0)
        bad = int(np.sum(margin > slack))
        worst = max(worst, float(margin.max()) if margin.size else -np.inf)
        per_frame.append(bad)
        total += bad
    return {
        "frames": len(hulls),
        "samples": int(states.shape[0]),
        "violations": total,
        "violations_per_frame": per_frame,
        "max_margin": worst,
        "slack": slack,
    }


# ---------------------------------------------------------------------------
# safety checking
# ---------------------------------------------------------------------------

def check_safety(tube: ReachTube, obstacles) -> dict:
    """Conservative disjointness check of every frame box against padded
    circular obstacles.

    Verdicts are ``safe`` (certified) or ``unknown`` (possible overlap);
    over-approximations can never certify unsafety.  A box that only touches
    the padded boundary counts as unknown.
    """
    n = tube.frames[0][0].dim if tube.frames and tube.frames[0] else 0
    for obs in obstacles:
        if max(obs.dims) >= n:
            raise ConfigError(
                f"obstacle dims {obs.dims} outside state dimension {n}"
            )
    frame_verdicts = []
    for frame in tube.frames:
        clear = True
        for b in frame:
            for obs in obstacles:
                lo = b.lower[list(obs.dims)]
                hi = b.upper[list(obs.dims)]
                closest = np.clip(np.asarray(obs.center, dtype=float), lo, hi)
                dist = float(np.linalg.norm(closest - np.asarray(obs.center)))
                if not dist > obs.radius * (1.0 + obs.padding):
                    clear = False
                    break
            if not clear:
                break
        frame_verdicts.append("safe" if clear else "unknown")
    overall = "safe" if all(v == "safe" for v in frame_verdicts) else "unknown"
    return {
        "overall": overall,
        "frames": frame_verdicts,
        "obstacles": [
            {
                "center": list(map(float, o.center)),
                "radius": o.radius,
                "padding": o.padding,
                "dims": list(o.dims),
            }
            for o in obstacles
        ],
    }
