"""Fixed-step simulation of flow-plus-jump dynamics.

Solutions are right-continuous: integrate the flow between jump times,
then apply the jump map at each time in the sequence, recording the
pre- and post-jump states.  Segment boundaries land exactly on every
jump time and input breakpoint, so the integrator never steps across a
discontinuity; within a segment the input is constant.  A jump exactly
at the start time is not applied (windows are open on the left), one
exactly at the horizon is.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInterval, InvalidSystem, NonFiniteState
from .inputs import HybridInput
from .systems import ImpulsiveSystem

STATUS_COMPLETE = "complete-to-horizon"
STATUS_DIVERGED = "diverged"
STATUS_STEP_FAILURE = "step-failure"

DIVERGENCE_RADIUS = 1e12
_DIVERGE_SQ = DIVERGENCE_RADIUS**2


@dataclass(frozen=True)
class JumpRecord:
    time: float
    x_pre: np.ndarray
    x_post: np.ndarray


@dataclass
class Trajectory:
    t0: float
    times: np.ndarray  # (k,)
    states: np.ndarray  # (k, n), right-continuous values
    jumps: tuple[JumpRecord, ...]
    status: str
    step: float
    input_used: HybridInput | None = None

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def pre_states(self) -> dict[float, np.ndarray]:
        return {rec.time: rec.x_pre for rec in self.jumps}

    def to_csv(self, path) -> None:
        """One row per sample; jump times get a pre row then a post row."""
        pre = self.pre_states()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)] + ["is_post_jump"])
            for t, row in zip(self.times, self.states):
                tf = float(t)
                if tf in pre and tf > self.t0:
                    writer.writerow([repr(tf)] + [repr(float(v)) for v in pre[tf]] + [0])
                    writer.writerow([repr(tf)] + [repr(float(v)) for v in row] + [1])
                else:
                    writer.writerow([repr(tf)] + [repr(float(v)) for v in row] + [0])

    @classmethod
    def from_csv(cls, path, t0: float | None = None, step: float = 0.0) -> "Trajectory":
        times: list[float] = []
        states: list[list[float]] = []
        jumps: list[JumpRecord] = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            dim = len(header) - 2
            pending_pre: tuple[float, list[float]] | None = None
            for row in reader:
                t = float(row[0])
                x = [float(v) for v in row[1 : 1 + dim]]
                post = int(row[-1])
                if post:
                    if pending_pre is None or pending_pre[0] != t:
                        raise ValueError("post-jump row without matching pre row")
                    jumps.append(
                        JumpRecord(t, np.asarray(pending_pre[1]), np.asarray(x))
                    )
                    times.append(t)
                    states.append(x)
                    pending_pre = None
                else:
                    if pending_pre is not None:
                        times.append(pending_pre[0])
                        states.append(pending_pre[1])
                    pending_pre = (t, x)
            if pending_pre is not None:
                times.append(pending_pre[0])
                states.append(pending_pre[1])
        return cls(
            t0=float(times[0]) if t0 is None else float(t0),
            times=np.asarray(times),
            states=np.asarray(states),
            jumps=tuple(jumps),
            status=STATUS_COMPLETE,
            step=step,
        )

    def to_json(self, path) -> None:
        payload = {
            "t0": self.t0,
            "step": self.step,
            "status": self.status,
            "times": [float(t) for t in self.times],
            "states": [[float(v) for v in row] for row in self.states],
            "jumps": [
                {
                    "time": rec.time,
                    "x_pre": [float(v) for v in rec.x_pre],
                    "x_post": [float(v) for v in rec.x_post],
                }
                for rec in self.jumps
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def _segment_bounds(
    t0: float, horizon: float, jump_times: np.ndarray, breakpoints: np.ndarray
):
    """Boundaries [t0, ..., horizon] hitting every event exactly once."""
    events = np.unique(
        np.concatenate(
            (
                jump_times[(jump_times > t0) & (jump_times <= horizon)],
                breakpoints[(breakpoints > t0) & (breakpoints < horizon)],
            )
        )
    )
    inner = events[events < horizon]
    return np.concatenate(([t0], inner, [horizon]))


def simulate(
    system: ImpulsiveSystem,
    t0: float,
    x0,
    w: HybridInput,
    horizon: float,
    step: float,
    strict: bool = True,
) -> Trajectory:
    """Integrate the flow with classical RK4 and apply jumps exactly.

    The state is carried as a plain list of floats; the flow and jump
    maps are called as h(t, x, u) with sequences and must return a
    sequence of the state dimension.  If |x| leaves the divergence
    radius the run stops with status "diverged" (the crossing sample is
    kept).  A NaN or infinite state raises NonFiniteState when strict,
    otherwise the run stops with status "step-failure" at the last
    finite sample.
    """
    if horizon < t0:
        raise InvalidInterval(f"horizon {horizon} precedes start {t0}")
    if step <= 0:
        raise InvalidInterval("step must be positive")
    x = [float(v) for v in np.atleast_1d(np.asarray(x0, dtype=float))]
    if len(x) != system.dim_x:
        raise InvalidSystem(
            f"x0 has dimension {len(x)}, system expects {system.dim_x}"
        )
    if w.u.dim != system.dim_u:
        raise InvalidSystem(
            f"input has dimension {w.u.dim}, system expects {system.dim_u}"
        )
    jump_times = w.sigma.materialize(horizon)
    bounds = _segment_bounds(t0, horizon, jump_times, w.u.breakpoints)
    jump_set = set(float(t) for t in jump_times if t > t0)

    f = system.flow
    g = system.jump
    times = [float(t0)]
    states = [list(x)]
    records: list[JumpRecord] = []
    status = STATUS_COMPLETE

    def abort_nonfinite(t_at: float) -> str:
        if strict:
            raise NonFiniteState(f"state became non-finite at t={t_at:.6g}")
        return STATUS_STEP_FAILURE

    done = False
    for a, b in zip(bounds[:-1], bounds[1:]):
        a = float(a)
        b = float(b)
        if b <= a:  # degenerate window (horizon == t0)
            continue
        useg = tuple(float(v) for v in w.u.value_at(a))
        nsub = max(1, math.ceil((b - a) / step - 1e-9))
        h = (b - a) / nsub
        h2 = 0.5 * h
        h6 = h / 6.0
        for i in range(nsub):
            t = a + i * h
            k1 = f(t, x, useg)
            x2 = [xi + h2 * ki for xi, ki in zip(x, k1)]
            k2 = f(t + h2, x2, useg)
            x3 = [xi + h2 * ki for xi, ki in zip(x, k2)]
            k3 = f(t + h2, x3, useg)
            x4 = [xi + h * ki for xi, ki in zip(x, k3)]
            k4 = f(t + h, x4, useg)
            x = [
                xi + h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
                for xi, a1, a2, a3, a4 in zip(x, k1, k2, k3, k4)
            ]
            t_next = float(b) if i == nsub - 1 else a + (i + 1) * h
            s2 = math.fsum(v * v for v in x)
            if not s2 <= _DIVERGE_SQ:
                if all(math.isfinite(v) for v in x):
                    times.append(t_next)
                    states.append(list(x))
                    status = STATUS_DIVERGED
                else:
                    status = abort_nonfinite(t_next)
                done = True
                break
            times.append(t_next)
            states.append(list(x))
        if done:
            break
        bf = float(b)
        if bf in jump_set:
            upost = tuple(float(v) for v in w.u.value_at(bf))
            incr = g(bf, x, upost)
            x_post = [xi + gi for xi, gi in zip(x, incr)]
            s2 = math.fsum(v * v for v in x_post)
            if not s2 <= _DIVERGE_SQ:
                if all(math.isfinite(v) for v in x_post):
                    records.append(
                        JumpRecord(bf, np.asarray(x, dtype=float), np.asarray(x_post))
                    )
                    states[-1] = list(x_post)
                    status = STATUS_DIVERGED
                else:
                    # drop the bad post-jump value, keep the pre state
                    status = abort_nonfinite(bf)
                break
            records.append(
                JumpRecord(bf, np.asarray(x, dtype=float), np.asarray(x_post, dtype=float))
            )
            states[-1] = list(x_post)
            x = x_post

    return Trajectory(
        t0=float(t0),
        times=np.asarray(times),
        states=np.asarray(states),
        jumps=tuple(records),
        status=status,
        step=float(step),
        input_used=w,
    )


def integral_residual(
    traj: Trajectory, system: ImpulsiveSystem, w: HybridInput | None = None
) -> float:
    """Worst defect of the integral identity along the samples.

    Reconstructs x(t) - x(t0) as the quadrature of the flow along the
    sampled path plus the recorded jump increments, and returns the
    largest Euclidean mismatch.  Quadrature is Simpson with a Hermite
    midpoint, fourth order, so the defect measures the trajectory, not
    the quadrature.
    """
    if w is None:
        w = traj.input_used
    if w is None:
        raise InvalidSystem("no input attached to the trajectory or supplied")
    ts = traj.times
    xs = traj.states
    k = len(ts)
    pre = traj.pre_states()
    f = system.flow
    jump_incr = {rec.time: rec.x_post - rec.x_pre for rec in traj.jumps}

    cum = np.zeros(traj.dim)
    jsum = np.zeros(traj.dim)
    worst = 0.0
    x0 = xs[0]
    for i in range(k - 1):
        tL = float(ts[i])
        tR = float(ts[i + 1])
        hseg = tR - tL
        useg = tuple(w.u.value_at(tL))
        xL = xs[i]
        xR = pre.get(tR, xs[i + 1])
        fL = np.asarray(f(tL, xL.tolist(), useg), dtype=float)
        fR = np.asarray(f(tR, xR.tolist(), useg), dtype=float)
        xm = 0.5 * (xL + xR) + (hseg / 8.0) * (fL - fR)
        fm = np.asarray(f(tL + 0.5 * hseg, xm.tolist(), useg), dtype=float)
        cum = cum + (hseg / 6.0) * (fL + 4.0 * fm + fR)
        if tR in jump_incr:
            defect_pre = np.linalg.norm(xR - (x0 + cum + jsum))
            worst = max(worst, float(defect_pre))
            jsum = jsum + jump_incr[tR]
        defect = np.linalg.norm(xs[i + 1] - (x0 + cum + jsum))
        worst = max(worst, float(defect))
    return worst


def closed_form_linear_impulsive(
    a: float,
    jump_factor: float,
    t0: float,
    x0,
    w: HybridInput,
    horizon: float,
    step: float,
) -> Trajectory:
    """Exact solution of dx/dt = a x + u with x -> jump_factor * x.

    Variation of constants per constant-input segment, jump factor at
    each jump time; sampled on the very same grid `simulate` uses so the
    two trajectories compare sample-by-sample.
    """
    if horizon < t0:
        raise InvalidInterval(f"horizon {horizon} precedes start {t0}")
    if step <= 0:
        raise InvalidInterval("step must be positive")
    if w.u.dim != 1:
        raise InvalidSystem("closed form is for scalar input")
    x_arr = np.atleast_1d(np.asarray(x0, dtype=float))
    if x_arr.shape != (1,):
        raise InvalidSystem("closed form is for scalar state")
    jump_times = w.sigma.materialize(horizon)
    bounds = _segment_bounds(t0, horizon, jump_times, w.u.breakpoints)
    jump_set = set(float(t) for t in jump_times if t > t0)

    x = float(x_arr[0])
    times = [float(t0)]
    vals = [x]
    records: list[JumpRecord] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:  # degenerate window (horizon == t0)
            continue
        u0 = float(w.u.value_at(float(lo))[0])
        nsub = max(1, math.ceil((hi - lo) / step - 1e-9))
        h = (hi - lo) / nsub
        offs = np.arange(1, nsub + 1) * h
        offs[-1] = hi - lo
        if a != 0.0:
            grow = np.exp(a * offs)
            seg_vals = grow * x + (u0 / a) * (grow - 1.0)
        else:
            seg_vals = x + u0 * offs
        node_ts = lo + offs
        node_ts[-1] = hi
        times.extend(float(t) for t in node_ts)
        vals.extend(float(v) for v in seg_vals)
        x = float(seg_vals[-1])
        bf = float(hi)
        if bf in jump_set:
            x_pre = x
            x = jump_factor * x
            records.append(
                JumpRecord(bf, np.array([x_pre]), np.array([x]))
            )
            vals[-1] = x
    return Trajectory(
        t0=float(t0),
        times=np.asarray(times),
        states=np.asarray(vals)[:, None],
        jumps=tuple(records),
        status=STATUS_COMPLETE,
        step=float(step),
        input_used=w,
    )
