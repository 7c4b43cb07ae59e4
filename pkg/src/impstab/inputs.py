"""Piecewise-constant input signals, hybrid inputs, and energy norms.

Signals are right-continuous: the value at a breakpoint is the value of
the piece that starts there, and the last piece extends to infinity.
Before the first breakpoint the signal is zero.  Restricting to
piecewise-constant inputs makes every energy integral a finite sum that
is evaluated exactly, so the norm identities (additivity over adjacent
windows, agreement with truncation) hold to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .comparison import ComparisonFn, eval_array
from .errors import InvalidInterval
from .impulses import ImpulseSequence


@dataclass(frozen=True)
class InputSignal:
    breakpoints: np.ndarray  # (k,), strictly increasing
    values: np.ndarray  # (k, m); row j applies on [b_j, b_{j+1})

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if bp.ndim != 1 or vals.ndim != 2 or len(bp) != len(vals):
            raise ValueError("breakpoints and values must align 1-to-1")
        if len(bp) == 0:
            raise ValueError("a signal needs at least one piece")
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(vals)):
            raise ValueError("breakpoints and values must be finite")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def value_at(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.breakpoints, t, "right")) - 1
        if idx < 0:
            return np.zeros(self.dim)
        return self.values[idx]

    def norm_at(self, t: float) -> float:
        return float(np.linalg.norm(self.value_at(t)))

    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def piece_table(self, a: float, b: float):
        """(starts, ends, rows) covering [a, b] including the implicit
        zero piece before the first breakpoint."""
        if b < a:
            raise InvalidInterval(f"window end {b} precedes start {a}")
        bp = self.breakpoints
        starts = [a]
        rows = []
        first = int(np.searchsorted(bp, a, "right")) - 1
        rows.append(self.values[first] if first >= 0 else np.zeros(self.dim))
        inside = bp[(bp > a) & (bp < b)]
        for t in inside:
            starts.append(float(t))
            rows.append(self.values[int(np.searchsorted(bp, t, "right")) - 1])
        ends = starts[1:] + [b]
        return np.asarray(starts), np.asarray(ends), np.asarray(rows)

    def canonical(self) -> "InputSignal":
        """Merge adjacent pieces with equal values; drop a leading zero piece."""
        keep = [0]
        for j in range(1, len(self.breakpoints)):
            if not np.array_equal(self.values[j], self.values[keep[-1]]):
                keep.append(j)
        bp = self.breakpoints[keep]
        vals = self.values[keep]
        if len(bp) > 1 and np.all(vals[0] == 0.0):
            bp, vals = bp[1:], vals[1:]
        return InputSignal(bp, vals)

    def scaled(self, factor: float) -> "InputSignal":
        return InputSignal(self.breakpoints.copy(), factor * self.values)

    def to_json(self) -> dict:
        return {
            "breakpoints": [float(t) for t in self.breakpoints],
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_json(cls, data: dict) -> "InputSignal":
        return cls(
            np.asarray(data["breakpoints"], dtype=float),
            np.asarray(data["values"], dtype=float),
        )


def zero_signal(dim: int = 1) -> InputSignal:
    return InputSignal(np.array([0.0]), np.zeros((1, dim)))


def constant_signal(value, start: float = 0.0) -> InputSignal:
    row = np.atleast_1d(np.asarray(value, dtype=float))
    return InputSignal(np.array([start]), row[None, :])


def pulse_train(
    amplitude: float,
    period: float,
    width: float,
    count: int,
    start: float = 0.0,
    dim: int = 1,
) -> InputSignal:
    """``count`` rectangular pulses of the given width, one per period."""
    if width <= 0 or period <= 0 or width > period or count < 1:
        raise ValueError("need 0 < width <= period and count >= 1")
    bps = [start - 1.0]
    vals = [np.zeros(dim)]
    for k in range(count):
        on = start + k * period
        bps.append(on)
        vals.append(amplitude * np.ones(dim))
        bps.append(on + width)
        vals.append(np.zeros(dim))
    return InputSignal(np.asarray(bps), np.asarray(vals)).canonical()


def decaying_burst(
    amplitude: float,
    ratio: float,
    period: float,
    width: float,
    count: int,
    start: float = 0.0,
    dim: int = 1,
) -> InputSignal:
    """Pulses whose amplitude shrinks geometrically; finite total energy
    for identity-like gauges even as count grows."""
    if not (0 < ratio < 1):
        raise ValueError("ratio must lie in (0, 1)")
    if width <= 0 or period <= 0 or width > period or count < 1:
        raise ValueError("need 0 < width <= period and count >= 1")
    bps = [start - 1.0]
    vals = [np.zeros(dim)]
    for k in range(count):
        on = start + k * period
        bps.append(on)
        vals.append(amplitude * ratio**k * np.ones(dim))
        bps.append(on + width)
        vals.append(np.zeros(dim))
    return InputSignal(np.asarray(bps), np.asarray(vals)).canonical()


def signal_from_config(cfg, dim: int = 1) -> InputSignal:
    if cfg is None or cfg == "zero":
        return zero_signal(dim)
    if isinstance(cfg, dict) and "preset" in cfg:
        preset = cfg["preset"]
        if preset == "zero":
            return zero_signal(int(cfg.get("dim", dim)))
        if preset == "constant":
            return constant_signal(cfg.get("value", 1.0), float(cfg.get("start", 0.0)))
        if preset == "pulse-train":
            return pulse_train(
                float(cfg.get("amplitude", 1.0)),
                float(cfg.get("period", 1.0)),
                float(cfg.get("width", 0.5)),
                int(cfg.get("count", 4)),
                float(cfg.get("start", 0.0)),
                int(cfg.get("dim", dim)),
            )
        if preset == "decaying-burst":
            return decaying_burst(
                float(cfg.get("amplitude", 1.0)),
                float(cfg.get("ratio", 0.5)),
                float(cfg.get("period", 1.0)),
                float(cfg.get("width", 0.5)),
                int(cfg.get("count", 4)),
                float(cfg.get("start", 0.0)),
                int(cfg.get("dim", dim)),
            )
        raise ValueError(f"unknown input preset {preset!r}")
    if isinstance(cfg, dict):
        return InputSignal.from_json(cfg)
    raise ValueError(f"cannot interpret input config {cfg!r}")


@dataclass(frozen=True)
class HybridInput:
    """The pair driving a trajectory: a signal and the jump times."""

    u: InputSignal
    sigma: ImpulseSequence

    @property
    def dim(self) -> int:
        return self.u.dim


def truncate(w: HybridInput, t0: float, t: float) -> HybridInput:
    """Zero the signal outside (t0, t]; jump times are left alone.

    The restricted signal keeps the original values on [t0, t) and is
    zero from t on, which preserves every energy evaluation over
    sub-windows of (t0, t] exactly.
    """
    if t < t0:
        raise InvalidInterval(f"window end {t} precedes start {t0}")
    if t == t0:
        return HybridInput(zero_signal(w.u.dim), w.sigma)
    bp = [t0]
    vals = [w.u.value_at(t0)]
    inner = w.u.breakpoints[(w.u.breakpoints > t0) & (w.u.breakpoints < t)]
    for b in inner:
        bp.append(float(b))
        vals.append(w.u.value_at(float(b)))
    bp.append(t)
    vals.append(np.zeros(w.u.dim))
    return HybridInput(InputSignal(np.asarray(bp), np.asarray(vals)), w.sigma)


class EnergyProfile:
    """Cumulative energy of a hybrid input over (t0, .] up to a horizon.

    The flow part is a piecewise-linear polyline (the integrand is
    constant per piece), so evaluation anywhere is exact interpolation.
    The jump part is a step function over the jump times.
    """

    def __init__(
        self,
        w: HybridInput,
        rho1: ComparisonFn,
        rho2: ComparisonFn,
        t0: float,
        horizon: float,
    ):
        if horizon < t0:
            raise InvalidInterval(f"horizon {horizon} precedes start {t0}")
        self.t0 = float(t0)
        self.horizon = float(horizon)
        starts, ends, rows = w.u.piece_table(self.t0, self.horizon)
        rates = eval_array(rho1, np.linalg.norm(rows, axis=1))
        knots = [self.t0]
        cum = [0.0]
        acc = 0.0
        for s, e, rate in zip(starts, ends, rates):
            if e > s:
                acc += (e - s) * float(rate)
                knots.append(float(e))
                cum.append(acc)
        self._knots = np.asarray(knots)
        self._cum = np.asarray(cum)
        taus = w.sigma.materialize(self.horizon)
        taus = taus[taus > self.t0]
        self._taus = taus
        if taus.size:
            mags = np.array([float(np.linalg.norm(w.u.value_at(float(t)))) for t in taus])
            self._jump_cum = np.concatenate(([0.0], np.cumsum(eval_array(rho2, mags))))
        else:
            self._jump_cum = np.zeros(1)

    def flow_part(self, t):
        return np.interp(t, self._knots, self._cum)

    def at(self, t):
        """Energy over (t0, t] for scalar or array t within the horizon."""
        idx = np.searchsorted(self._taus, t, "right")
        return self.flow_part(t) + self._jump_cum[idx]

    def before_jump(self, tau: float) -> float:
        """Energy over (t0, tau): the jump term at tau itself excluded."""
        idx = int(np.searchsorted(self._taus, tau, "left"))
        return float(self.flow_part(tau)) + float(self._jump_cum[idx])


def energy_norm(
    w: HybridInput,
    rho1: ComparisonFn,
    rho2: ComparisonFn,
    t0: float,
    t: float,
) -> float:
    """Flow energy plus jump energy of w over the window (t0, t].

    Both gauges are applied to the Euclidean norm of the signal value;
    at jump times the right-continuous value is used.
    """
    if t < t0:
        raise InvalidInterval(f"window end {t} precedes start {t0}")
    if t == t0:
        return 0.0
    return float(EnergyProfile(w, rho1, rho2, t0, t).at(t))
