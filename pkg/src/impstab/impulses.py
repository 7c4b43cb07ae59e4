"""Admissible jump-time sequences, counting, and strong time.

Counting uses intervals open on the left and closed on the right, so a
jump exactly at the start of a window is never counted and one exactly
at the end always is.  Sequences are either finite and explicit or
backed by a generator that must produce every time up to a requested
horizon; materialized prefixes are cached and treated as immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import HorizonExceeded, InvalidInterval, InvalidPhi


def _validated_times(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what}: expected a 1-d array of times")
    if arr.size:
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{what}: times must be finite")
        if arr[0] <= 0.0:
            # time 0 is the conventional origin; a jump there is inadmissible
            raise ValueError(f"{what}: times must be strictly positive")
        if np.any(np.diff(arr) <= 0.0):
            raise ValueError(f"{what}: times must be strictly increasing")
    return arr


class ImpulseSequence:
    """Strictly increasing positive jump times, finite or generated."""

    def __init__(
        self,
        times=None,
        generator: Callable[[float], np.ndarray] | None = None,
        declared_unbounded: bool = False,
        description: str = "",
    ):
        if (times is None) == (generator is None):
            raise ValueError("provide exactly one of times or generator")
        if times is not None:
            self._times = _validated_times(np.asarray(times, dtype=float), "sequence")
            self._times.setflags(write=False)
        else:
            self._times = None
        self._generator = generator
        self.declared_unbounded = bool(declared_unbounded)
        self.description = description
        self._cache_horizon = -math.inf
        self._cache = np.empty(0)

    @classmethod
    def from_times(cls, times, description: str = "") -> "ImpulseSequence":
        return cls(times=times, description=description)

    @classmethod
    def from_generator(
        cls, generator, declared_unbounded: bool = True, description: str = ""
    ) -> "ImpulseSequence":
        return cls(
            generator=generator,
            declared_unbounded=declared_unbounded,
            description=description,
        )

    @property
    def is_finite(self) -> bool:
        return self._times is not None

    def materialize(self, horizon: float) -> np.ndarray:
        """All jump times <= horizon, ascending.

        Generator-backed sequences raise HorizonExceeded when they cannot
        cover the horizon.  Results are cached grow-only, so repeated
        calls with any horizon up to the largest one seen are cheap.
        """
        horizon = float(horizon)
        if not math.isfinite(horizon):
            raise InvalidInterval("horizon must be finite")
        if self._times is not None:
            return self._times[: int(np.searchsorted(self._times, horizon, "right"))]
        if horizon <= self._cache_horizon:
            cut = int(np.searchsorted(self._cache, horizon, "right"))
            return self._cache[:cut]
        fresh = _validated_times(
            np.asarray(self._generator(horizon), dtype=float), "generated sequence"
        )
        if fresh.size and fresh[-1] > horizon:
            fresh = fresh[: int(np.searchsorted(fresh, horizon, "right"))]
        fresh.setflags(write=False)
        self._cache = fresh
        self._cache_horizon = horizon
        return fresh

    def to_json(self) -> dict:
        if self._times is None:
            raise ValueError("only finite sequences serialize to JSON")
        return {"times": [float(t) for t in self._times]}

    @classmethod
    def from_json(cls, data) -> "ImpulseSequence":
        if isinstance(data, dict):
            data = data["times"]
        return cls.from_times(np.asarray(data, dtype=float))

    def __repr__(self) -> str:
        if self._times is not None:
            head = np.array2string(self._times[:4], precision=4)
            return f"ImpulseSequence(times={head}{'...' if self._times.size > 4 else ''})"
        return f"ImpulseSequence(generator, {self.description or 'unnamed'})"


def count_jumps(sigma: ImpulseSequence, t0: float, t: float) -> int:
    """Number of jump times in (t0, t].  Zero-width windows count zero."""
    if t < t0:
        raise InvalidInterval(f"window end {t} precedes start {t0}")
    times = sigma.materialize(t)
    hi = int(np.searchsorted(times, t, "right"))
    lo = int(np.searchsorted(times, t0, "right"))
    return hi - lo


def count_jumps_at(
    times: np.ndarray, t0: float, t: np.ndarray | float
) -> np.ndarray | int:
    """Vectorized jump count against pre-materialized times."""
    hi = np.searchsorted(times, t, "right")
    lo = np.searchsorted(times, t0, "right")
    return hi - lo


def strong_time(sigma: ImpulseSequence, t0: float, t: float) -> float:
    """Elapsed time plus the number of jumps in (t0, t]."""
    return (t - t0) + count_jumps(sigma, t0, t)


def strong_time_schedule(
    sigma: ImpulseSequence, t0: float, increment: float, count: int
) -> list[float]:
    """Times [s_0, ..., s_count] where strong time accrues by ``increment``.

    Each s_i is the exact infimum of {t >= s_{i-1} : (t - s_{i-1}) +
    n(s_{i-1}, t] >= increment}, found by case analysis rather than
    stepping: the crossing happens either at a jump time or at
    s_{i-1} + (increment - jumps so far).  Every increment of strong
    time over a step lies in [increment, increment + 1].
    """
    if increment <= 0:
        raise InvalidInterval("increment must be positive")
    if count < 0:
        raise InvalidInterval("count must be nonnegative")
    schedule = [float(t0)]
    for _ in range(count):
        s_prev = schedule[-1]
        # jumps cannot push strong time past increment before this bound
        reach = s_prev + increment
        times = sigma.materialize(reach)
        start = int(np.searchsorted(times, s_prev, "right"))
        n = 0
        s_next = None
        for tau in times[start:]:
            flow_cross = s_prev + (increment - n)
            if flow_cross < tau:
                s_next = flow_cross
                break
            n += 1
            if (tau - s_prev) + n >= increment:
                s_next = float(tau)
                break
        if s_next is None:
            s_next = s_prev + (increment - n)
        schedule.append(s_next)
    return schedule


@dataclass
class UibReport:
    passed: bool
    checked: int
    violation: dict | None = None


def uib_check(
    family,
    phi: Callable[[float], float],
    sample_count: int = 200,
    horizon: float = 50.0,
    seed: int = 0,
) -> UibReport:
    """Sample windows against a claimed jump-count envelope.

    For each sampled sequence, windows are drawn both at random and
    hugging jump times from below, which is where the count-to-length
    ratio peaks.  A single window with count above phi(length) refutes
    the envelope; passing is sampling evidence only.
    """
    probe = np.geomspace(1e-6, horizon, 16)
    pv = np.array([float(phi(float(s))) for s in probe])
    if np.any(~np.isfinite(pv)) or np.any(pv < 0):
        raise InvalidPhi("envelope must be finite and nonnegative")
    if np.any(np.diff(pv) < -1e-12 * (1.0 + np.abs(pv[:-1]))):
        raise InvalidPhi("envelope must be nondecreasing")

    rng = np.random.default_rng(seed)
    checked = 0
    seq_draws = max(1, sample_count // 50)
    for k in range(seq_draws):
        sigma = family.sampler(seed * 1009 + k, horizon)
        times = sigma.materialize(horizon)
        windows = []
        for _ in range(sample_count // seq_draws):
            a, b = np.sort(rng.uniform(0.0, horizon, 2))
            if b > a:
                windows.append((float(a), float(b)))
        # adversarial: start just below one jump, end exactly on another
        for i in range(min(len(times), 12)):
            a = float(times[i]) - 1e-9
            for j in range(i, min(len(times), i + 8)):
                windows.append((max(a, 0.0), float(times[j])))
        for a, b in windows:
            n = int(count_jumps_at(times, a, b))
            bound = float(phi(b - a)) if b > a else 0.0
            checked += 1
            if n > bound + 1e-9:
                return UibReport(
                    passed=False,
                    checked=checked,
                    violation={
                        "sequence": sigma.description or "sampled",
                        "t0": a,
                        "t": b,
                        "count": n,
                        "bound": bound,
                    },
                )
    return UibReport(passed=True, checked=checked)


# ---------------------------------------------------------------------------
# Families.


@dataclass(frozen=True)
class ImpulseFamily:
    """A seedable distribution over admissible sequences."""

    sampler: Callable[[int, float], ImpulseSequence]
    description: str
    uib_phi: Callable[[float], float] | None = None
    config: dict | None = None


def empty_family() -> ImpulseFamily:
    empty = ImpulseSequence.from_times((), description="empty")
    return ImpulseFamily(
        sampler=lambda seed, horizon: empty,
        description="no jumps",
        uib_phi=lambda s: 0.0,
        config={"name": "empty"},
    )


def periodic_family(period: float) -> ImpulseFamily:
    if period <= 0:
        raise ValueError("period must be positive")

    def gen(horizon: float) -> np.ndarray:
        n = int(math.floor(horizon / period + 1e-9))
        return period * np.arange(1, n + 1)

    def sample(seed: int, horizon: float) -> ImpulseSequence:
        return ImpulseSequence.from_generator(
            gen, declared_unbounded=True, description=f"periodic({period:g})"
        )

    return ImpulseFamily(
        sampler=sample,
        description=f"jumps every {period:g} time units",
        uib_phi=lambda s: math.ceil(s / period),
        config={"name": "periodic", "period": period},
    )


def dwell_family(min_gap: float, max_gap: float) -> ImpulseFamily:
    """Randomized gaps, each at least min_gap."""
    if not (0 < min_gap <= max_gap):
        raise ValueError("need 0 < min_gap <= max_gap")

    def sample(seed: int, horizon: float) -> ImpulseSequence:
        def gen(h: float) -> np.ndarray:
            rng = np.random.default_rng([7841, seed])
            out = []
            t = 0.0
            while t <= h:
                t += float(rng.uniform(min_gap, max_gap))
                if t <= h:
                    out.append(t)
            return np.asarray(out)

        return ImpulseSequence.from_generator(
            gen, declared_unbounded=True, description=f"dwell({min_gap:g},{max_gap:g})"
        )

    return ImpulseFamily(
        sampler=sample,
        description=f"random gaps in [{min_gap:g}, {max_gap:g}]",
        uib_phi=lambda s: math.floor(s / min_gap) + 1.0,
        config={"name": "dwell", "min_gap": min_gap, "max_gap": max_gap},
    )


def finite_random_family(count: int, spread: float) -> ImpulseFamily:
    """A fixed number of jump times scattered over (0, spread]."""
    if count < 0 or spread <= 0:
        raise ValueError("need count >= 0 and spread > 0")

    def sample(seed: int, horizon: float) -> ImpulseSequence:
        rng = np.random.default_rng([1139, seed])
        times = np.sort(rng.uniform(0.0, spread, count))
        times = times[times > 0.0]
        while np.any(np.diff(times) <= 0.0):
            times = np.sort(rng.uniform(0.0, spread, count))
            times = times[times > 0.0]
        return ImpulseSequence.from_times(times, description=f"finite({count})")

    return ImpulseFamily(
        sampler=sample,
        description=f"{count} random jumps within (0, {spread:g}]",
        uib_phi=lambda s: float(count),
        config={"name": "finite-random", "count": count, "spread": spread},
    )


def shrinking_gap_family(first_gap: float, min_gap: float) -> ImpulseFamily:
    """Gaps that halve toward a strictly positive floor; never Zeno."""
    if not (0 < min_gap <= first_gap):
        raise ValueError("need 0 < min_gap <= first_gap")

    def sample(seed: int, horizon: float) -> ImpulseSequence:
        def gen(h: float) -> np.ndarray:
            out = []
            t = 0.0
            k = 0
            while t <= h:
                gap = min_gap + (first_gap - min_gap) * 0.5**k
                t += gap
                k += 1
                if t <= h:
                    out.append(t)
            return np.asarray(out)

        return ImpulseSequence.from_generator(
            gen,
            declared_unbounded=True,
            description=f"shrinking({first_gap:g}->{min_gap:g})",
        )

    return ImpulseFamily(
        sampler=sample,
        description=f"gaps shrinking from {first_gap:g} toward {min_gap:g}",
        uib_phi=lambda s: math.floor(s / min_gap) + 1.0,
        config={"name": "shrinking-gap", "first_gap": first_gap, "min_gap": min_gap},
    )


def family_generators() -> dict[str, ImpulseFamily]:
    """Representative instances of every stock family."""
    return {
        "empty": empty_family(),
        "periodic-1": periodic_family(1.0),
        "dwell-0.5-2": dwell_family(0.5, 2.0),
        "finite-random-5": finite_random_family(5, 10.0),
        "shrinking-gap": shrinking_gap_family(1.0, 0.1),
    }


def family_from_config(cfg: dict) -> ImpulseFamily:
    name = cfg.get("name")
    if name == "empty":
        return empty_family()
    if name == "periodic":
        return periodic_family(float(cfg["period"]))
    if name == "dwell":
        return dwell_family(float(cfg["min_gap"]), float(cfg["max_gap"]))
    if name == "finite-random":
        return finite_random_family(int(cfg["count"]), float(cfg["spread"]))
    if name == "shrinking-gap":
        return shrinking_gap_family(float(cfg["first_gap"]), float(cfg["min_gap"]))
    raise ValueError(f"unknown impulse family {name!r}")
