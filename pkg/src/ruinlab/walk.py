"""Monte Carlo sampling for the simple random walk on Z^N.

One step moves a single uniformly chosen coordinate by +-1, so a draw is
one integer u in [0, 2N) decoded as (axis, sign) = (u // 2, +1 if u is
even else -1).  Samplers produce exit times from L-infinity balls, running
maxima over fixed horizons, and the coupled construction that realizes the
N-dimensional walk from N independent one-dimensional walks plus a uniform
coordinate selector.

Reproducibility: every stream is a Philox4x64 counter-based generator
keyed by the pair (seed, stream_index).  Batched estimates split the
sample budget into fixed-size blocks, block i drawing from
``stream(seed, i)``, and combine block partials with exact summation in
block order -- so results are bit-identical for any worker count or
scheduling.

Walks are almost surely finite but a hard per-path step cap (default 1e9)
turns "almost surely" into an auditable :class:`StepBudgetError` instead
of a silent loop.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

DEFAULT_STEP_CAP = 10 ** 9
BLOCK_SAMPLES = 4096
_CHUNK = 256
_M64 = (1 << 64) - 1


class StepBudgetError(RuntimeError):
    """A path exceeded the hard step cap before terminating."""


def stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for logical stream ``index`` of ``seed``.

    The derivation is the documented reproducibility contract: a Philox4x64
    bit generator keyed by the two 64-bit words (seed, index).
    """
    key = np.array([seed & _M64, index & _M64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def decode_direction(u: int, dim: int) -> tuple[int, int]:
    """Map a uniform draw in [0, 2*dim) to (axis, sign)."""
    if not 0 <= u < 2 * dim:
        raise ValueError(f"direction code {u} outside [0, {2 * dim})")
    return u // 2, 1 if u % 2 == 0 else -1


@dataclass
class WalkState:
    """Lattice position plus elapsed step count."""

    position: np.ndarray
    time: int

    @classmethod
    def origin(cls, dim: int) -> "WalkState":
        return cls(position=np.zeros(dim, dtype=np.int64), time=0)


def step(state: WalkState, u: int) -> WalkState:
    """Advance one step along the decoded direction (total function)."""
    axis, sign = decode_direction(u, state.position.size)
    pos = state.position.copy()
    pos[axis] += sign
    return WalkState(position=pos, time=state.time + 1)


@dataclass(frozen=True)
class CoupledSample:
    """One draw of the coupled realization.

    ``exit_time`` and ``running_max`` belong to the N-dimensional walk
    built from the coordinate walks; ``coord_exit_times`` and
    ``coord_running_maxima`` are each coordinate walk's own exit time and
    own running max over the first ``horizon`` of its private clock.
    Pathwise: exit_time <= sum(coord_exit_times) - (N-1) and
    running_max <= max(coord_running_maxima).
    """

    exit_time: int
    coord_exit_times: tuple[int, ...]
    running_max: int
    coord_running_maxima: tuple[int, ...]


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo estimate of a scaled p-th moment with its provenance."""

    mean: float
    std_error: float
    n_samples: int
    p: int
    scale: float
    seed: int

    def __post_init__(self):
        if self.std_error < 0.0 or self.mean < 0.0:
            raise ValueError("mean and std_error must be non-negative")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")


# ---------------------------------------------------------------------------
# Vectorized block samplers
# ---------------------------------------------------------------------------

def _decode_block(draws):
    axes = draws >> 1
    signs = np.where(draws & 1, -1, 1).astype(np.int64)
    return axes, signs


def _exit_block(dim, radius, count, rng, step_cap):
    """Exit times from the radius ball for ``count`` walks (vectorized)."""
    out = np.empty(count, dtype=np.int64)
    pos = np.zeros((count, dim), dtype=np.int64)
    alive = np.arange(count)
    t_base = 0
    while alive.size:
        if t_base >= step_cap:
            raise StepBudgetError(
                f"exit sampling passed {step_cap} steps with {alive.size} paths alive"
            )
        draws = rng.integers(0, 2 * dim, size=(alive.size, _CHUNK), dtype=np.int64)
        axes, signs = _decode_block(draws)
        over = None
        ends = np.empty((alive.size, dim), dtype=np.int64)
        for n in range(dim):
            inc = signs if dim == 1 else np.where(axes == n, signs, 0)
            path = np.cumsum(inc, axis=1)
            path += pos[:, n, None]
            ends[:, n] = path[:, -1]
            hit = np.abs(path) > radius
            over = hit if over is None else (over | hit)
        exited = over.any(axis=1)
        first = over.argmax(axis=1)
        out[alive[exited]] = t_base + first[exited] + 1
        keep = ~exited
        alive = alive[keep]
        pos = ends[keep]
        t_base += _CHUNK
    return out


def _max_block(dim, horizon, count, rng):
    """Running maxima over ``horizon`` steps for ``count`` walks."""
    pos = np.zeros((count, dim), dtype=np.int64)
    best = np.zeros(count, dtype=np.int64)
    done = 0
    while done < horizon:
        c = min(_CHUNK, horizon - done)
        draws = rng.integers(0, 2 * dim, size=(count, c), dtype=np.int64)
        axes, signs = _decode_block(draws)
        for n in range(dim):
            inc = signs if dim == 1 else np.where(axes == n, signs, 0)
            path = np.cumsum(inc, axis=1)
            path += pos[:, n, None]
            pos[:, n] = path[:, -1]
            np.maximum(best, np.abs(path).max(axis=1), out=best)
        done += c
    return best


def sample_exit_time(dim: int, radius: int, rng: np.random.Generator,
                     step_cap: int = DEFAULT_STEP_CAP) -> int:
    """First time the walk leaves the L-infinity ball of radius ``radius``.

    Postcondition: the walk stayed inside the ball strictly before the
    returned time and sits at norm radius+1 when it exits.
    """
    if dim < 1 or radius < 1:
        raise ValueError("need dim >= 1 and radius >= 1")
    return int(_exit_block(dim, radius, 1, rng, step_cap)[0])


def sample_running_max(dim: int, horizon: int, rng: np.random.Generator) -> int:
    """Largest L-infinity norm over steps 1..horizon (always in [1, horizon])."""
    if dim < 1 or horizon < 1:
        raise ValueError("need dim >= 1 and horizon >= 1")
    return int(_max_block(dim, horizon, 1, rng)[0])


# ---------------------------------------------------------------------------
# Coupled construction
# ---------------------------------------------------------------------------

def _coord_walk(radius, horizon, rng, step_cap):
    """One 1-D walk run to max(own exit, horizon) on its private clock.

    Returns (exit time, running-max prefix over steps 1..horizon).
    """
    segments = []
    tau = None
    total = 0
    last = 0
    while tau is None or total < horizon:
        if total >= step_cap:
            raise StepBudgetError(f"coordinate walk passed {step_cap} steps")
        c = max(_CHUNK, horizon - total)
        draws = rng.integers(0, 2, size=c, dtype=np.int64)
        s = last + np.cumsum(np.where(draws & 1, -1, 1).astype(np.int64))
        if tau is None:
            over = np.abs(s) > radius
            if over.any():
                tau = total + int(over.argmax()) + 1
        segments.append(s)
        last = int(s[-1])
        total += c
    path = np.concatenate(segments)[:horizon]
    return tau, np.maximum.accumulate(np.abs(path))


def sample_coupled(dim: int, radius: int, horizon: int, rng: np.random.Generator,
                   step_cap: int = DEFAULT_STEP_CAP) -> CoupledSample:
    """Draw the coupled realization of the N-dimensional walk.

    ``dim`` independent 1-D walks are drawn first (each run to
    max(own exit, horizon) of its private clock), then an independent
    uniform coordinate selector.  The N-dimensional walk moves coordinate
    d_s at step s by that coordinate's next private increment, so its exit
    happens at the selector step where the first coordinate exhausts its
    own exit count, and its running max at the horizon is the max over
    coordinates of each private running max at the coordinate's local
    time.
    """
    if dim < 1 or radius < 1 or horizon < 1:
        raise ValueError("need dim >= 1, radius >= 1, horizon >= 1")
    taus = np.empty(dim, dtype=np.int64)
    prefix_max = []
    for n in range(dim):
        taus[n], rm = _coord_walk(radius, horizon, rng, step_cap)
        prefix_max.append(rm)

    counts = np.zeros(dim, dtype=np.int64)
    exit_time = None
    k_at_horizon = None
    s_done = 0
    while exit_time is None or s_done < horizon:
        if s_done >= step_cap:
            raise StepBudgetError(f"selector sequence passed {step_cap} steps")
        c = max(_CHUNK, horizon - s_done)
        d = rng.integers(0, dim, size=c, dtype=np.int64)
        if s_done < horizon <= s_done + c:
            k_at_horizon = counts + np.bincount(d[: horizon - s_done], minlength=dim)
        if exit_time is None:
            candidates = []
            for n in range(dim):
                need = int(taus[n] - counts[n])
                occ = np.flatnonzero(d == n)
                if 1 <= need <= occ.size:
                    candidates.append(s_done + int(occ[need - 1]) + 1)
            if candidates:
                exit_time = min(candidates)
        counts += np.bincount(d, minlength=dim)
        s_done += c

    running_max = 0
    for n in range(dim):
        k = int(k_at_horizon[n])
        if k >= 1:
            running_max = max(running_max, int(prefix_max[n][min(k, horizon) - 1]))
    return CoupledSample(
        exit_time=int(exit_time),
        coord_exit_times=tuple(int(v) for v in taus),
        running_max=running_max,
        coord_running_maxima=tuple(int(rm[horizon - 1]) for rm in prefix_max),
    )


def coupled_direction_codes(dim: int, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """One-step direction codes of the walk built by the coupled construction.

    Selector draws pick the coordinate; each coordinate's private +-1
    stream is consumed in selection order.  Used to check that the coupled
    construction has the same one-step law as direct simulation.
    """
    d = rng.integers(0, dim, size=n_steps, dtype=np.int64)
    codes = np.empty(n_steps, dtype=np.int64)
    for n in range(dim):
        mask = d == n
        signs = rng.integers(0, 2, size=int(mask.sum()), dtype=np.int64)
        codes[mask] = 2 * n + signs
    return codes


# ---------------------------------------------------------------------------
# Batched estimation
# ---------------------------------------------------------------------------

def batch_estimate(kind: str, dim: int, param: int, p: int, n_samples: int,
                   seed: int, *, workers: int = 1,
                   step_cap: int = DEFAULT_STEP_CAP) -> MomentEstimate:
    """Scaled p-th moment estimate from ``n_samples`` independent walks.

    kind="exit_moment" samples exit times at radius ``param`` and scales
    by param^(2p); kind="max_moment" samples running maxima at horizon
    ``param`` and scales by param^(p/2).  The sample budget is split into
    fixed blocks of ``BLOCK_SAMPLES``; block i uses ``stream(seed, i)``
    and partial sums are combined with math.fsum in block order, making
    the estimate independent of ``workers``.
    """
    if kind not in ("exit_moment", "max_moment"):
        raise ValueError(f"unknown kind {kind!r}")
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError("moment order p must be an integer >= 1")
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if dim < 1 or param < 1:
        raise ValueError("need dim >= 1 and param >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    scale = float(param) ** (2 * p) if kind == "exit_moment" else float(param) ** (p / 2.0)
    sizes = [BLOCK_SAMPLES] * (n_samples // BLOCK_SAMPLES)
    if n_samples % BLOCK_SAMPLES:
        sizes.append(n_samples % BLOCK_SAMPLES)

    def run_block(i):
        g = stream(seed, i)
        if kind == "exit_moment":
            vals = _exit_block(dim, param, sizes[i], g, step_cap)
        else:
            vals = _max_block(dim, param, sizes[i], g)
        x = vals.astype(np.float64) ** p / scale
        return float(x.sum()), float(np.square(x).sum())

    if workers == 1:
        partials = [run_block(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run_block, range(len(sizes))))

    total = math.fsum(s for s, _ in partials)
    total_sq = math.fsum(q for _, q in partials)
    mean = total / n_samples
    var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    return MomentEstimate(mean=mean, std_error=math.sqrt(var / n_samples),
                          n_samples=n_samples, p=int(p), scale=scale, seed=int(seed))
