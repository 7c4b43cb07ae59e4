"""Comparison functions (class K / K-infinity / KL) and their algebra.

Functions are wrapped with a declared class and a finite domain hint so
that membership can be probed numerically.  Probing a finite grid can
never prove monotonicity or unboundedness; the checks here are designed
so that failures are conclusive while passes are evidence.  Inversion is
by bisection and never requires a symbolic inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ClassViolation, ConfigError, InvalidPhi, NotMonotone, OutOfRange

GRID_POINTS = 64
INVERT_TOL = 1e-10
# enough bisection steps to resolve roots down to subnormal scale from
# a bracket of width ~1e6; typical calls break out after ~60
INVERT_MAX_ITER = 1200

# Growth demanded across the nine decades above the domain hint before a
# declared-unbounded function is believed.  Saturating shapes like
# r/(1+r) stall well below this; slow growers like log(1+r) clear it.
_GROWTH_RATIO = 1.0 + 1e-4


@dataclass(frozen=True)
class ComparisonFn:
    """A scalar function declared to lie in class K or K-infinity.

    ``evaluator`` should accept a float; accepting numpy arrays as well
    makes the vectorized check paths cheaper but is not required.
    """

    evaluator: Callable
    declared_class: str = "Kinf"  # "K" or "Kinf"
    domain_hint: float = 1e6
    name: str = ""
    config: dict | None = field(default=None, compare=False)

    def __call__(self, r):
        return self.evaluator(r)

    def validate(self) -> None:
        """Probe zero-at-zero, strict increase, and (for Kinf) growth.

        Raises ClassViolation with the offending sample in the message.
        """
        if self.declared_class not in ("K", "Kinf"):
            raise ClassViolation(f"unknown declared class {self.declared_class!r}")
        if not (self.domain_hint > 0 and math.isfinite(self.domain_hint)):
            raise ClassViolation("domain hint must be positive and finite")
        v0 = float(self.evaluator(0.0))
        if not math.isfinite(v0) or abs(v0) > 1e-12:
            raise ClassViolation(f"{self._label()}: value at 0 is {v0!r}, expected 0")
        grid = np.geomspace(1e-9, self.domain_hint, GRID_POINTS)
        vals = eval_array(self, grid)
        if not np.all(np.isfinite(vals)):
            raise ClassViolation(f"{self._label()}: non-finite value on the probe grid")
        joined = np.concatenate(([v0], vals))
        diffs = np.diff(joined)
        if np.any(diffs <= 0):
            bad = int(np.argmax(diffs <= 0))
            at = 0.0 if bad == 0 else grid[bad - 1]
            raise ClassViolation(
                f"{self._label()}: not strictly increasing near r={at:.6g}"
            )
        if self.declared_class == "Kinf":
            self._check_growth(float(vals[-1]))

    def _check_growth(self, value_at_hint: float) -> None:
        ext = np.geomspace(self.domain_hint, self.domain_hint * 1e9, 10)
        try:
            with np.errstate(over="ignore"):
                vals = eval_array(self, ext)
        except OutOfRange:
            # inverse-backed evaluators cannot reach past their hint;
            # boundedness beyond the certified range stays undecided and
            # the declared class is taken at its word there
            return
        if np.any(np.isnan(vals)):
            raise ClassViolation(f"{self._label()}: NaN beyond the domain hint")
        if np.any(np.isinf(vals)):
            return  # overflowed float range, certainly unbounded
        if not float(vals[-1]) >= _GROWTH_RATIO * max(value_at_hint, 1e-300):
            raise ClassViolation(
                f"{self._label()}: growth stalls above the domain hint "
                f"({value_at_hint:.6g} -> {float(vals[-1]):.6g}); "
                "not accepted as K-infinity"
            )

    def _label(self) -> str:
        return self.name or "comparison function"


@dataclass(frozen=True)
class KLFn:
    """A two-argument bound: class K-infinity in r, decreasing to 0 in s."""

    evaluator: Callable
    r_hint: float = 1e6
    s_hint: float = 1e4
    name: str = ""
    config: dict | None = field(default=None, compare=False)

    def __call__(self, r, s):
        return self.evaluator(r, s)

    def validate(self) -> None:
        """Check the KL shape on a 20x20 logarithmic grid."""
        r_grid = np.geomspace(1e-6, self.r_hint, 20)
        s_grid = np.concatenate(([0.0], np.geomspace(1e-6, self.s_hint, 19)))
        # fast decay underflows to exactly 0 at large s, where strict
        # increase in r is unobservable; validate the increase at the
        # largest s that still yields representable values
        s_top = float(self.s_hint)
        while s_top > 1.0 and not self._resolvable_at(s_top):
            s_top /= 4.0
        for s in (0.0, min(1.0, s_top), s_top):
            slice_fn = ComparisonFn(
                lambda r, _s=s: self.evaluator(r, _s),
                declared_class="Kinf",
                domain_hint=self.r_hint,
                name=f"{self._label()} at s={s:g}",
            )
            slice_fn.validate()
        for r in r_grid[:: max(1, len(r_grid) // 6)]:
            vals = eval_kl_array(self, float(r), s_grid)
            if not np.all(np.isfinite(vals)):
                raise ClassViolation(f"{self._label()}: non-finite on the s grid")
            if np.any(np.diff(vals) > 1e-12 * (1.0 + np.abs(vals[:-1]))):
                raise ClassViolation(
                    f"{self._label()}: not nonincreasing in s at r={r:.6g}"
                )
            tail = float(self.evaluator(float(r), max(1e8, 100.0 * self.s_hint)))
            if not tail <= 1e-3 * (1.0 + float(vals[0])):
                raise ClassViolation(
                    f"{self._label()}: does not decay to 0 in s at r={r:.6g} "
                    f"(tail value {tail:.6g})"
                )

    def _resolvable_at(self, s: float) -> bool:
        try:
            return float(self.evaluator(1e-9, float(s))) > 1e-280
        except Exception:
            return False

    def _label(self) -> str:
        return self.name or "KL function"


def eval_array(f: ComparisonFn, x: np.ndarray) -> np.ndarray:
    """Evaluate on an array, falling back to a scalar loop."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(f.evaluator(x), dtype=float)
        if out.shape == x.shape:
            return out
    except Exception:
        pass
    return np.array([float(f.evaluator(float(v))) for v in x.ravel()]).reshape(x.shape)


def eval_kl_array(beta: KLFn, r: float, s: np.ndarray) -> np.ndarray:
    """Evaluate beta(r, s) over an array of s values."""
    s = np.asarray(s, dtype=float)
    try:
        out = np.asarray(beta.evaluator(r, s), dtype=float)
        if out.shape == s.shape:
            return out
    except Exception:
        pass
    return np.array([float(beta.evaluator(r, float(v))) for v in s.ravel()]).reshape(
        s.shape
    )


def invert(
    f: ComparisonFn,
    y: float,
    tol: float | None = None,
    max_iter: int = INVERT_MAX_ITER,
) -> float:
    """Solve f(r) = y for r in [0, domain_hint] by bisection.

    The result satisfies |f(r) - y| <= 1e-10 * (1 + y).  Raises
    OutOfRange when y is negative or above f(domain_hint), and
    NotMonotone when the evaluator contradicts the bracketing order.
    """
    y = float(y)
    if not math.isfinite(y) or y < 0:
        raise OutOfRange(f"cannot invert at y={y!r}")
    if tol is None:
        tol = INVERT_TOL * (1.0 + y)
    lo, hi = 0.0, float(f.domain_hint)
    flo = float(f.evaluator(lo))
    fhi = float(f.evaluator(hi))
    # only targets at or below f(0) map to 0: tiny positive targets are
    # resolved by bisection so inverse-backed gauges stay strictly
    # increasing near zero instead of flattening within the tolerance
    if y <= flo:
        return lo
    if abs(fhi - y) <= tol:
        return hi
    if y > fhi:
        raise OutOfRange(
            f"y={y:.6g} exceeds the reachable value {fhi:.6g} at the domain hint"
        )
    if y < flo:
        raise NotMonotone("value at 0 exceeds the target; not a class-K shape")
    # refine the bracket all the way down rather than stopping at the
    # residual tolerance: near-exact roots keep inverse-backed
    # evaluators monotone at the resolution the class probes use
    slack = 1e-12 * (1.0 + abs(fhi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = float(f.evaluator(mid))
        if fmid < flo - slack or fmid > fhi + slack:
            raise NotMonotone(
                f"evaluator leaves the bracket at r={mid:.6g} (f={fmid:.6g})"
            )
        if fmid < y:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        # purely relative width: tiny roots are resolved instead of
        # quantized, which keeps inverse-backed gauges strictly
        # increasing all the way down the probe grid
        if hi - lo <= 1e-13 * hi:
            break
    mid = 0.5 * (lo + hi)
    if abs(float(f.evaluator(mid)) - y) <= tol:
        return mid
    raise NotMonotone(
        f"bisection failed to reach tolerance at y={y:.6g}; "
        "the evaluator may be discontinuous"
    )


def invert_array(f: ComparisonFn, y: np.ndarray) -> np.ndarray:
    """Vectorized bisection; one pass over all targets at once."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return np.zeros_like(y)
    if np.any(~np.isfinite(y)) or np.any(y < 0):
        raise OutOfRange("cannot invert at negative or non-finite targets")
    hi0 = float(f.domain_hint)
    fhi0 = float(f.evaluator(hi0))
    tol = INVERT_TOL * (1.0 + y)
    if np.any(y > fhi0 + tol):
        worst = float(np.max(y))
        raise OutOfRange(
            f"target {worst:.6g} exceeds the reachable value {fhi0:.6g} "
            "at the domain hint"
        )
    lo = np.zeros_like(y)
    hi = np.full_like(y, hi0)
    at_zero = y <= float(f.evaluator(0.0))
    for _ in range(INVERT_MAX_ITER):
        if np.all((hi - lo <= 1e-13 * hi) | at_zero):
            break
        mid = 0.5 * (lo + hi)
        fmid = eval_array(f, mid)
        go_up = fmid < y
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    out = np.where(at_zero, 0.0, 0.5 * (lo + hi))
    residual = np.abs(eval_array(f, out) - y)
    bad = np.flatnonzero((residual > tol) & ~at_zero)
    for i in bad:
        # scalar path re-derives the root or raises a precise error
        out.flat[i] = invert(f, float(y.flat[i]))
    return out


def compose(outer: ComparisonFn, inner: ComparisonFn, name: str = "") -> ComparisonFn:
    """outer after inner; K-infinity survives only if both have it."""
    cls = "Kinf" if (outer.declared_class == inner.declared_class == "Kinf") else "K"
    return ComparisonFn(
        lambda r: outer.evaluator(inner.evaluator(r)),
        declared_class=cls,
        domain_hint=inner.domain_hint,
        name=name or f"compose({outer._label()}, {inner._label()})",
    )


def inverse_fn(f: ComparisonFn) -> ComparisonFn:
    """Numeric inverse as a first-class function (bisection per call)."""

    def ev(y):
        if isinstance(y, np.ndarray):
            return invert_array(f, y)
        return invert(f, float(y))

    hint = float(f.evaluator(float(f.domain_hint)))
    return ComparisonFn(
        ev,
        declared_class=f.declared_class,
        domain_hint=hint,
        name=f"inverse({f._label()})",
    )


def require_kinf(f: ComparisonFn, role: str) -> None:
    """Reject functions that do not hold up as K-infinity."""
    if f.declared_class != "Kinf":
        raise ClassViolation(f"{role} must be declared K-infinity, got {f.declared_class!r}")
    f.validate()


# ---------------------------------------------------------------------------
# Certificate-transforming constructions.


def guas_decay_from_iiss(alpha: ComparisonFn, beta: KLFn) -> KLFn:
    """Decay bound implied by a gain pair: alpha-inverse composed with beta.

    With zero input the gain estimate alpha(|x|) <= beta(|x0|, s) collapses
    to |x| <= alpha^{-1}(beta(|x0|, s)), which is again a KL shape.
    """

    def ev(r, s):
        if isinstance(s, np.ndarray):
            return invert_array(alpha, eval_kl_array(beta, float(r), s))
        return invert(alpha, float(beta.evaluator(float(r), float(s))))

    # cap the r range so every inversion target stays reachable
    alpha_top = float(alpha.evaluator(float(alpha.domain_hint)))
    beta0 = ComparisonFn(
        lambda r: beta.evaluator(r, 0.0),
        declared_class="Kinf",
        domain_hint=beta.r_hint,
    )
    if float(beta0.evaluator(beta.r_hint)) > alpha_top:
        r_cap = invert(beta0, alpha_top)
    else:
        r_cap = beta.r_hint
    return KLFn(
        ev,
        r_hint=r_cap,
        s_hint=beta.s_hint,
        name=f"inverse({alpha._label()}) o {beta._label()}",
    )


def ubebs_alpha_from_iiss(alpha: ComparisonFn, beta: KLFn) -> ComparisonFn:
    """Overshoot gauge built from a gain pair.

    psi(r) = min( beta0^{-1}(alpha(r)/2), alpha(r)/2 ) with
    beta0(r) = beta(r, 0).  Then psi(|x|) <= |x0| + energy + 0 holds
    whenever the gain estimate does, because one of the two minimands is
    dominated by the matching term of the estimate.
    """
    beta0 = ComparisonFn(
        lambda r: beta.evaluator(r, 0.0),
        declared_class="Kinf",
        domain_hint=beta.r_hint,
        name=f"{beta._label()} at s=0",
    )
    beta0_top = float(beta0.evaluator(beta0.domain_hint))

    def ev(r):
        if isinstance(r, np.ndarray):
            half = 0.5 * eval_array(alpha, r)
            return np.minimum(invert_array(beta0, half), half)
        half = 0.5 * float(alpha.evaluator(float(r)))
        return min(invert(beta0, half), half)

    # keep the certified range within both minimands; callers that need
    # values at larger arguments should clip to the domain hint, which
    # only lowers the gauge and keeps violation reports genuine
    alpha_top = float(alpha.evaluator(float(alpha.domain_hint)))
    cap = min(
        float(alpha.domain_hint),
        invert(alpha, min(2.0 * beta0_top, alpha_top)),
    )
    return ComparisonFn(
        ev,
        declared_class="Kinf",
        domain_hint=cap,
        name=f"overshoot gauge from ({alpha._label()}, {beta._label()})",
    )


def lift_weak_beta(
    beta: KLFn, phi: Callable[[float], float], s_probe: float | None = None
) -> KLFn:
    """Convert an elapsed-time bound into a jump-counting one.

    ``phi`` must be a nondecreasing envelope on the number of jumps in
    any window of a given length.  The lifted bound evaluates beta at
    g(v) = inf{s >= 0 : s + phi(s) >= v}; bisection returns the left
    endpoint of the final bracket, which keeps the lift conservative:
    beta(r, s) <= lifted(r, s + phi(s)) pointwise.
    """
    probe_hi = float(s_probe if s_probe is not None else beta.s_hint)
    probe = np.concatenate(
        ([1e-9], np.geomspace(1e-6, max(probe_hi, 1.0), 40))
    )
    pv = np.array([float(phi(float(s))) for s in probe])
    if np.any(~np.isfinite(pv)) or np.any(pv < 0):
        raise InvalidPhi("envelope must be finite and nonnegative")
    if np.any(np.diff(pv) < -1e-12 * (1.0 + np.abs(pv[:-1]))):
        at = probe[int(np.argmax(np.diff(pv) < 0))]
        raise InvalidPhi(f"envelope decreases near s={at:.6g}")

    phi0 = float(phi(1e-12))  # limit from the right at 0

    def g_scalar(v: float) -> float:
        if v <= phi0:
            return 0.0
        lo, hi = 0.0, 1.0
        for _ in range(200):
            if hi + float(phi(hi)) >= v:
                break
            hi *= 2.0
        else:
            raise InvalidPhi("envelope fails to grow past the target")
        for _ in range(INVERT_MAX_ITER):
            if hi - lo <= 1e-10 * (1.0 + hi):
                break
            mid = 0.5 * (lo + hi)
            if mid + float(phi(mid)) >= v:
                hi = mid
            else:
                lo = mid
        return lo

    def g_vec(v: np.ndarray) -> np.ndarray:
        return np.array([g_scalar(float(x)) for x in v.ravel()]).reshape(v.shape)

    def ev(r, s):
        if isinstance(s, np.ndarray):
            return eval_kl_array(beta, float(r), g_vec(s))
        return beta.evaluator(float(r), g_scalar(float(s)))

    return KLFn(
        ev,
        r_hint=beta.r_hint,
        s_hint=beta.s_hint,
        name=f"lift({beta._label()})",
    )


# ---------------------------------------------------------------------------
# Stock families and config parsing.


def linear(k: float = 1.0, domain_hint: float = 1e6) -> ComparisonFn:
    if k <= 0:
        raise ConfigError("linear gain must be positive")
    return ComparisonFn(
        lambda r: k * r,
        declared_class="Kinf",
        domain_hint=domain_hint,
        name=f"linear(k={k:g})",
        config={"kind": "linear", "k": k},
    )


def identity() -> ComparisonFn:
    return ComparisonFn(
        lambda r: r,
        declared_class="Kinf",
        domain_hint=1e6,
        name="identity",
        config={"kind": "identity"},
    )


def power(p: float, scale: float = 1.0, domain_hint: float = 1e6) -> ComparisonFn:
    if p <= 0 or scale <= 0:
        raise ConfigError("power family needs positive exponent and scale")
    return ComparisonFn(
        lambda r: scale * r**p,
        declared_class="Kinf",
        domain_hint=domain_hint,
        name=f"power(p={p:g})",
        config={"kind": "power", "p": p, "scale": scale},
    )


def saturating(scale: float = 1.0) -> ComparisonFn:
    """scale * r / (1 + r): class K but bounded, so never K-infinity."""
    if scale <= 0:
        raise ConfigError("saturating scale must be positive")
    return ComparisonFn(
        lambda r: scale * r / (1.0 + r),
        declared_class="K",
        domain_hint=1e6,
        name=f"saturating(scale={scale:g})",
        config={"kind": "saturating", "scale": scale},
    )


def log_growth(scale: float = 1.0) -> ComparisonFn:
    """scale * log(1 + r): slowly growing but genuinely unbounded."""
    return ComparisonFn(
        lambda r: scale * np.log1p(r),
        declared_class="Kinf",
        domain_hint=1e6,
        name=f"log-growth(scale={scale:g})",
        config={"kind": "log-growth", "scale": scale},
    )


def exp_decay_kl(amp: float = 1.0, rate: float = 1.0) -> KLFn:
    if amp <= 0 or rate <= 0:
        raise ConfigError("exp-decay needs positive amplitude and rate")
    return KLFn(
        lambda r, s: amp * r * np.exp(-rate * s),
        name=f"exp-decay(amp={amp:g}, rate={rate:g})",
        config={"kind": "exp-decay", "amp": amp, "rate": rate},
    )


def rational_decay_kl(amp: float = 1.0, p: float = 1.0) -> KLFn:
    if amp <= 0 or p <= 0:
        raise ConfigError("rational-decay needs positive amplitude and power")
    return KLFn(
        lambda r, s: amp * r / (1.0 + s) ** p,
        name=f"rational-decay(amp={amp:g}, p={p:g})",
        config={"kind": "rational-decay", "amp": amp, "p": p},
    )


def comparison_from_config(cfg: dict) -> ComparisonFn:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"expected a mapping with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    if kind == "identity":
        return identity()
    if kind == "linear":
        return linear(float(cfg.get("k", 1.0)), float(cfg.get("domain_hint", 1e6)))
    if kind == "power":
        return power(
            float(cfg["p"]),
            float(cfg.get("scale", 1.0)),
            float(cfg.get("domain_hint", 1e6)),
        )
    if kind == "saturating":
        return saturating(float(cfg.get("scale", 1.0)))
    if kind == "log-growth":
        return log_growth(float(cfg.get("scale", 1.0)))
    raise ConfigError(f"unknown comparison function kind {kind!r}")


def kl_from_config(cfg: dict) -> KLFn:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"expected a mapping with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    if kind == "exp-decay":
        return exp_decay_kl(float(cfg.get("amp", 1.0)), float(cfg.get("rate", 1.0)))
    if kind == "rational-decay":
        return rational_decay_kl(float(cfg.get("amp", 1.0)), float(cfg.get("p", 1.0)))
    raise ConfigError(f"unknown KL function kind {kind!r}")
