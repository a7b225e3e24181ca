"""Fixed-step simulation core: two-rate clock, transport delays, channel logging.

Conventions used throughout the package:

- Time is seconds from run start; sample ``i`` of a log is taken at the start
  of inner step ``i``, i.e. at ``t = i * dt_inner``.
- All evolution is explicit and single threaded within a run, so two runs with
  identical configuration produce bit-identical logs.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SimulationError",
    "SimClock",
    "DelayLine",
    "SimLog",
    "run_loop",
]

# Slack for zero-order-hold lookups so reads landing on a push instant pick up
# the sample pushed there despite binary rounding of t = i * dt.
_TIME_EPS = 1e-9


class SimulationError(RuntimeError):
    """A run must abort: non-finite state, undersized buffer, bad posture."""


@dataclass(frozen=True)
class SimClock:
    """Two-rate fixed-step schedule.

    ``dt_inner`` drives plant integration and logging, ``dt_outer`` the task
    reasoning layer. ``dt_outer`` must be an integer multiple of ``dt_inner``.
    The first ``t_stabilize`` seconds are simulated and logged but excluded
    from every metric window.
    """

    dt_inner: float = 0.001
    dt_outer: float = 0.01
    t_end: float = 22.0
    t_stabilize: float = 2.0

    def __post_init__(self) -> None:
        if self.dt_inner <= 0.0:
            raise ValueError("dt_inner must be positive")
        ratio = self.dt_outer / self.dt_inner
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(
                f"dt_outer={self.dt_outer} is not an integer multiple of dt_inner={self.dt_inner}"
            )
        if not 0.0 <= self.t_stabilize < self.t_end:
            raise ValueError("require 0 <= t_stabilize < t_end")

    @property
    def inner_per_outer(self) -> int:
        return round(self.dt_outer / self.dt_inner)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt_inner)


class DelayLine:
    """Pure transport delay over a monotonically pushed sample stream.

    ``read(t)`` returns the value the stream had at ``t - delay``, with
    zero-order hold between stored samples and ``initial_value`` for times
    before the first push. History older than ``delay + retain`` is evicted;
    ``retain`` must cover any backward-offset reads the caller performs.
    """

    def __init__(self, delay: float, initial_value: float = 0.0, retain: float = 0.05):
        if delay < 0.0:
            raise ValueError("delay must be nonnegative")
        self.delay = delay
        self.initial_value = initial_value
        self._retain = retain
        self._times: deque[float] = deque()
        self._values: deque[float] = deque()
        self._t_first: float | None = None

    def push(self, t: float, value: float) -> None:
        if self._times and t < self._times[-1] - _TIME_EPS:
            raise SimulationError(f"delay line pushes must be monotonic (t={t})")
        if self._t_first is None:
            self._t_first = t
        self._times.append(t)
        self._values.append(value)
        horizon = t - self.delay - self._retain
        while len(self._times) >= 2 and self._times[1] <= horizon:
            self._times.popleft()
            self._values.popleft()

    def read(self, t: float) -> float:
        ts = t - self.delay
        if self._t_first is None or ts < self._t_first - _TIME_EPS:
            return self.initial_value
        if ts < self._times[0] - _TIME_EPS:
            raise SimulationError(
                f"delay line history exhausted: asked for t={ts:.6f}, "
                f"oldest retained sample is t={self._times[0]:.6f}"
            )
        idx = bisect_right(self._times, ts + _TIME_EPS) - 1
        return self._values[max(idx, 0)]


class SimLog:
    """Named channels sampled uniformly at the inner step rate.

    Channels are registered once (name plus units) and every append must
    supply exactly the registered set, which keeps all channels the same
    length by construction.
    """

    def __init__(self) -> None:
        self._names: list[str] = []
        self._units: dict[str, str] = {}
        self._data: dict[str, list[float]] = {}
        self._time: list[float] = []

    def register(self, name: str, units: str = "") -> None:
        if name in self._units:
            raise ValueError(f"duplicate channel name {name!r}")
        self._names.append(name)
        self._units[name] = units
        self._data[name] = []

    @property
    def channel_names(self) -> list[str]:
        return list(self._names)

    @property
    def n_samples(self) -> int:
        return len(self._time)

    def units(self, name: str) -> str:
        return self._units[name]

    def append(self, t: float, sample: dict[str, float]) -> None:
        if sample.keys() != self._data.keys():
            missing = self._data.keys() - sample.keys()
            extra = sample.keys() - self._data.keys()
            raise ValueError(f"sample keys mismatch: missing={missing}, extra={extra}")
        self._time.append(t)
        for name in self._names:
            self._data[name].append(sample[name])

    def time(self) -> np.ndarray:
        return np.asarray(self._time)

    def channel(self, name: str) -> np.ndarray:
        if name not in self._data:
            raise KeyError(f"no channel named {name!r}")
        return np.asarray(self._data[name])

    def to_csv(self, path) -> None:
        """Write ``time,<channel>,...`` rows with 12 significant digits."""
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("time," + ",".join(self._names) + "\n")
            cols = [self._time] + [self._data[n] for n in self._names]
            for row in zip(*cols):
                f.write(",".join(f"{v:.12g}" for v in row) + "\n")


def run_loop(
    clock: SimClock,
    outer_step: Callable[[float], None],
    inner_step: Callable[[float], dict[str, float]],
    log: SimLog,
) -> SimLog:
    """Drive the two callbacks on the fixed two-rate schedule.

    ``outer_step`` runs at every ``dt_outer`` boundary (including t=0) before
    the inner step of the same instant. ``inner_step`` returns the channel
    sample for its instant; any non-finite value aborts with a diagnostic
    naming the channel and time.
    """
    ratio = clock.inner_per_outer
    dt = clock.dt_inner
    for i in range(clock.n_steps):
        t = i * dt
        if i % ratio == 0:
            outer_step(t)
        sample = inner_step(t)
        for name, value in sample.items():
            if not math.isfinite(value):
                raise SimulationError(f"non-finite value in channel {name!r} at t={t:.6f} s")
        log.append(t, sample)
    return log
