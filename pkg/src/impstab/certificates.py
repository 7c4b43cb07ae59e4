"""Stability certificates: checking along trajectories and falsification.

Three certificate shapes are supported: a zero-input decay bound (a KL
function of |x0| and either strong time or elapsed time), a bounded-
energy bound (a gauge on |x| against |x0| + energy + offset), and a
gain estimate combining both.  Checks evaluate the defining inequality
at every sample of a trajectory, including the pre-jump value at each
jump time, with tolerance 1e-9 * (1 + |rhs|) per point.  A check can
pass, be violated (with a replayable witness), or be inconclusive when
the trajectory ended early without any violated sample.

Falsification searches over start times, initial states, inputs, and
sequences drawn from a family, mixing uniform random trials,
low-discrepancy trials, and adversarial presets.  Trial seeds derive
from (master seed, trial index) so any one trial reproduces on its own.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .comparison import (
    ComparisonFn,
    KLFn,
    comparison_from_config,
    eval_array,
    eval_kl_array,
    guas_decay_from_iiss,
    kl_from_config,
    lift_weak_beta,
    require_kinf,
    ubebs_alpha_from_iiss,
)
from .errors import (
    ClassViolation,
    ConfigError,
    InconsistentInput,
    NonZeroInput,
    OutOfRange,
)
from .impulses import ImpulseFamily, ImpulseSequence, count_jumps_at
from .inputs import EnergyProfile, HybridInput, InputSignal, zero_signal
from .sim import DIVERGENCE_RADIUS, STATUS_COMPLETE, Trajectory, simulate
from .systems import ImpulsiveSystem

TOL_SCALE = 1e-9

MODES = ("strong", "weak")


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ClassViolation(f"mode must be one of {MODES}, got {mode!r}")
    return mode


@dataclass(frozen=True)
class GuasCertificate:
    """Zero-input decay bound |x(t)| <= beta(|x0|, time argument)."""

    beta: KLFn
    mode: str = "strong"

    def __post_init__(self):
        _check_mode(self.mode)
        self.beta.validate()


@dataclass(frozen=True)
class UbebsCertificate:
    """Energy bound alpha(|x(t)|) <= |x0| + energy + c."""

    alpha: ComparisonFn
    rho1: ComparisonFn
    rho2: ComparisonFn
    c: float = 0.0

    def __post_init__(self):
        require_kinf(self.alpha, "alpha")
        require_kinf(self.rho1, "rho1")
        require_kinf(self.rho2, "rho2")
        if self.c < 0:
            raise ClassViolation("offset c must be nonnegative")


@dataclass(frozen=True)
class IissCertificate:
    """Gain estimate alpha(|x(t)|) <= beta(|x0|, time argument) + energy."""

    alpha: ComparisonFn
    beta: KLFn
    rho1: ComparisonFn
    rho2: ComparisonFn
    mode: str = "strong"

    def __post_init__(self):
        _check_mode(self.mode)
        require_kinf(self.alpha, "alpha")
        require_kinf(self.rho1, "rho1")
        require_kinf(self.rho2, "rho2")
        self.beta.validate()


Certificate = GuasCertificate | UbebsCertificate | IissCertificate


@dataclass
class Witness:
    """Everything needed to re-simulate and re-check one violation."""

    check: str
    t: float
    side: str  # "post" for a sample value, "pre" for a pre-jump value
    lhs: float
    rhs: float
    margin: float
    t0: float
    x0: list
    horizon: float
    step: float
    sigma_times: list
    u: dict | None
    trial: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Witness":
        return cls(**data)


@dataclass
class CheckReport:
    verdict: str  # "pass" | "violated" | "inconclusive"
    kind: str
    worst_margin: float
    trials: int = 1
    samples: int = 0
    witness: Witness | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "kind": self.kind,
            "worst_margin": self.worst_margin,
            "trials": self.trials,
            "samples": self.samples,
            "details": self.details,
        }
        out["witness"] = self.witness.to_dict() if self.witness else None
        return out


def _check_points(traj: Trajectory, sigma: ImpulseSequence, mode: str):
    """Evaluation points: every sample plus the pre-jump values.

    Returns times, state norms, time arguments (strong or elapsed), and
    a side array (0 = pre-jump entry, 1 = sample), sorted so pre-jump
    entries come directly before their post-jump sample.
    """
    ts = traj.times
    norms = traj.norms()
    taus = sigma.materialize(traj.end_time)
    counts = count_jumps_at(taus, traj.t0, ts)
    elapsed = ts - traj.t0
    sargs = elapsed + counts if mode == "strong" else elapsed
    side = np.ones(len(ts), dtype=int)
    if traj.jumps:
        jt = np.array([rec.time for rec in traj.jumps])
        jn = np.array([float(np.linalg.norm(rec.x_pre)) for rec in traj.jumps])
        jel = jt - traj.t0
        jc = count_jumps_at(taus, traj.t0, jt) - 1  # jump at jt not yet counted
        jargs = jel + jc if mode == "strong" else jel
        ts = np.concatenate((ts, jt))
        norms = np.concatenate((norms, jn))
        sargs = np.concatenate((sargs, jargs))
        side = np.concatenate((side, np.zeros(len(jt), dtype=int)))
    order = np.lexsort((side, ts))
    return ts[order], norms[order], sargs[order], side[order]


def _scan(
    kind: str,
    traj: Trajectory,
    sigma: ImpulseSequence,
    times: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    side: np.ndarray,
) -> CheckReport:
    margins = lhs - rhs
    tol = TOL_SCALE * (1.0 + np.abs(rhs))
    viol = margins > tol
    worst = float(np.max(margins)) if margins.size else 0.0
    samples = int(len(times))
    if np.any(viol):
        idx = int(np.argmax(viol))  # arrays are time-ordered: first violation
        wit = Witness(
            check=kind,
            t=float(times[idx]),
            side="pre" if side[idx] == 0 else "post",
            lhs=float(lhs[idx]),
            rhs=float(rhs[idx]),
            margin=float(margins[idx]),
            t0=traj.t0,
            x0=[float(v) for v in traj.x0],
            horizon=traj.end_time,
            step=traj.step,
            sigma_times=[float(t) for t in sigma.materialize(traj.end_time)],
            u=traj.input_used.u.to_json() if traj.input_used else None,
        )
        return CheckReport(
            verdict="violated",
            kind=kind,
            worst_margin=worst,
            samples=samples,
            witness=wit,
        )
    verdict = "pass" if traj.status == STATUS_COMPLETE else "inconclusive"
    details = {}
    if verdict == "inconclusive":
        details["note"] = f"trajectory ended early with status {traj.status!r}"
    return CheckReport(
        verdict=verdict,
        kind=kind,
        worst_margin=worst,
        samples=samples,
        details=details,
    )


def _gauge_values(fn: ComparisonFn, norms: np.ndarray) -> np.ndarray:
    # clip to the certified range: this can only lower the left side,
    # so a reported violation is genuine even past the gauge's hint
    return eval_array(fn, np.minimum(norms, fn.domain_hint))


def _guard_r0(r0: float, beta: KLFn) -> None:
    if r0 > beta.r_hint:
        raise OutOfRange(
            f"|x0|={r0:.6g} exceeds the decay bound's certified range {beta.r_hint:.6g}"
        )


def check_guas(
    cert: GuasCertificate, traj: Trajectory, sigma: ImpulseSequence | None = None
) -> CheckReport:
    """Check |x(t)| <= beta(|x0|, .) pointwise on a zero-input trajectory."""
    if traj.input_used is None:
        raise NonZeroInput("trajectory carries no input record; cannot confirm zero input")
    if not traj.input_used.u.is_zero():
        raise NonZeroInput("decay check requires a zero-input trajectory")
    if sigma is None:
        sigma = traj.input_used.sigma
    times, norms, sargs, side = _check_points(traj, sigma, cert.mode)
    r0 = float(np.linalg.norm(traj.x0))
    _guard_r0(r0, cert.beta)
    rhs = eval_kl_array(cert.beta, r0, sargs)
    kind = f"guas-{cert.mode}"
    return _scan(kind, traj, sigma, times, norms, rhs, side)


def _resolve_input(traj: Trajectory, w: HybridInput | None) -> HybridInput:
    if w is None:
        if traj.input_used is None:
            raise InconsistentInput("no input attached to the trajectory or supplied")
        return traj.input_used
    used = traj.input_used
    if used is not None and used is not w:
        same_u = np.array_equal(used.u.breakpoints, w.u.breakpoints) and np.array_equal(
            used.u.values, w.u.values
        )
        same_sigma = np.array_equal(
            used.sigma.materialize(traj.end_time), w.sigma.materialize(traj.end_time)
        )
        if not (same_u and same_sigma):
            raise InconsistentInput(
                "supplied input differs from the one the trajectory was driven by"
            )
    return w


def check_ubebs(
    cert: UbebsCertificate, traj: Trajectory, w: HybridInput | None = None
) -> CheckReport:
    """Check alpha(|x(t)|) <= |x0| + energy over (t0, t] + c pointwise."""
    w = _resolve_input(traj, w)
    sigma = w.sigma
    times, norms, sargs, side = _check_points(traj, sigma, "strong")
    profile = EnergyProfile(w, cert.rho1, cert.rho2, traj.t0, traj.end_time)
    energy = np.where(
        side == 1,
        profile.at(times),
        [profile.before_jump(float(t)) for t in times],
    )
    r0 = float(np.linalg.norm(traj.x0))
    lhs = _gauge_values(cert.alpha, norms)
    rhs = r0 + energy + cert.c
    return _scan("ubebs", traj, sigma, times, lhs, rhs, side)


def check_iiss(
    cert: IissCertificate, traj: Trajectory, w: HybridInput | None = None
) -> CheckReport:
    """Check alpha(|x(t)|) <= beta(|x0|, .) + energy over (t0, t]."""
    w = _resolve_input(traj, w)
    sigma = w.sigma
    times, norms, sargs, side = _check_points(traj, sigma, cert.mode)
    profile = EnergyProfile(w, cert.rho1, cert.rho2, traj.t0, traj.end_time)
    energy = np.where(
        side == 1,
        profile.at(times),
        [profile.before_jump(float(t)) for t in times],
    )
    r0 = float(np.linalg.norm(traj.x0))
    _guard_r0(r0, cert.beta)
    lhs = _gauge_values(cert.alpha, norms)
    rhs = eval_kl_array(cert.beta, r0, sargs) + energy
    kind = f"iiss-{cert.mode}"
    return _scan(kind, traj, sigma, times, lhs, rhs, side)


def check_certificate(
    cert: Certificate, traj: Trajectory, w: HybridInput | None = None
) -> CheckReport:
    if isinstance(cert, GuasCertificate):
        return check_guas(cert, traj, w.sigma if w is not None else None)
    if isinstance(cert, UbebsCertificate):
        return check_ubebs(cert, traj, w)
    if isinstance(cert, IissCertificate):
        return check_iiss(cert, traj, w)
    raise ConfigError(f"unknown certificate type {type(cert).__name__}")


# ---------------------------------------------------------------------------
# Derived certificates.


def derive_guas_from_iiss(cert: IissCertificate) -> GuasCertificate:
    """Zero input kills the energy term; invert the gauge on what is left."""
    return GuasCertificate(
        beta=guas_decay_from_iiss(cert.alpha, cert.beta), mode=cert.mode
    )


def derive_ubebs_from_iiss(cert: IissCertificate) -> UbebsCertificate:
    """Overshoot gauge from the gain pair, same energy gauges, zero offset."""
    return UbebsCertificate(
        alpha=ubebs_alpha_from_iiss(cert.alpha, cert.beta),
        rho1=cert.rho1,
        rho2=cert.rho2,
        c=0.0,
    )


def derive_strong_from_weak(cert: GuasCertificate, phi) -> GuasCertificate:
    """Lift an elapsed-time bound to strong time with a count envelope."""
    if cert.mode != "weak":
        raise ClassViolation("lifting applies to weak-mode certificates")
    return GuasCertificate(beta=lift_weak_beta(cert.beta, phi), mode="strong")


def certificate_from_config(cfg: dict) -> Certificate:
    kind = cfg.get("kind")
    if kind == "guas":
        return GuasCertificate(
            beta=kl_from_config(cfg["beta"]), mode=cfg.get("mode", "strong")
        )
    if kind == "ubebs":
        return UbebsCertificate(
            alpha=comparison_from_config(cfg["alpha"]),
            rho1=comparison_from_config(cfg["rho1"]),
            rho2=comparison_from_config(cfg["rho2"]),
            c=float(cfg.get("c", 0.0)),
        )
    if kind == "iiss":
        return IissCertificate(
            alpha=comparison_from_config(cfg["alpha"]),
            beta=kl_from_config(cfg["beta"]),
            rho1=comparison_from_config(cfg["rho1"]),
            rho2=comparison_from_config(cfg["rho2"]),
            mode=cfg.get("mode", "strong"),
        )
    raise ConfigError(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# Falsification.


@dataclass(frozen=True)
class SearchRanges:
    """Bounds on the quantifier space a falsification run explores."""

    t0_max: float = 2.0
    x0_max: float = 5.0
    u_amp_max: float = 2.0
    horizon: float = 10.0
    step: float = 1e-2
    max_input_pieces: int = 6


def _direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    vec = rng.standard_normal(dim)
    n = float(np.linalg.norm(vec))
    if n == 0.0:
        vec = np.zeros(dim)
        vec[0] = 1.0
        return vec
    return vec / n


def _random_signal(
    rng: np.random.Generator,
    dim: int,
    t0: float,
    t_end: float,
    amp: float,
    max_pieces: int,
) -> InputSignal:
    n = int(rng.integers(1, max_pieces + 1))
    bps = np.unique(rng.uniform(t0, t_end, n))
    if bps.size == 0 or amp <= 0.0:
        return zero_signal(dim)
    vals = rng.uniform(-amp, amp, (bps.size, dim))
    return InputSignal(bps, vals)


def _pulses_at_jumps(
    sigma: ImpulseSequence,
    dim: int,
    amp: float,
    width: float,
    t0: float,
    t_end: float,
) -> InputSignal:
    taus = sigma.materialize(t_end)
    taus = taus[taus > t0]
    if taus.size == 0 or amp <= 0.0:
        return zero_signal(dim)
    edges = np.unique(np.concatenate((taus - width, taus + width)))
    rows = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        j = int(np.searchsorted(taus, mid))
        near = min(
            abs(mid - taus[j - 1]) if j > 0 else math.inf,
            abs(taus[j] - mid) if j < taus.size else math.inf,
        )
        rows.append(amp * np.ones(dim) if near <= width else np.zeros(dim))
    rows.append(np.zeros(dim))
    return InputSignal(edges, np.asarray(rows)).canonical()


def _trial_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial + 1


def falsify(
    cert: Certificate,
    system: ImpulsiveSystem,
    family: ImpulseFamily,
    budget: int,
    ranges: SearchRanges = SearchRanges(),
    seed: int = 0,
) -> CheckReport:
    """Search for a quantifier assignment violating the certificate.

    Stops at the first violated trial and returns its witness (first
    violating sample in time order), annotated with the trial index and
    master seed; otherwise reports a pass with the trial count.  Trials
    cycle uniform random, low-discrepancy, and adversarial presets
    (corner initial states, pulses synchronized with jump times, start
    times hugging a jump, constant worst-amplitude input).
    """
    if budget < 1:
        raise ConfigError("budget must be at least 1")
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    zero_only = isinstance(cert, GuasCertificate)
    kind = {
        GuasCertificate: "falsify-guas",
        UbebsCertificate: "falsify-ubebs",
        IissCertificate: "falsify-iiss",
    }[type(cert)]
    halton = qmc.Halton(d=4, scramble=True, seed=seed).random(budget)
    worst = -math.inf
    inconclusive = 0
    for trial in range(budget):
        rng = np.random.default_rng([seed, trial])
        style = trial % 3
        sigma = family.sampler(
            _trial_seed(seed, trial), ranges.t0_max + ranges.horizon + 1.0
        )
        amp = ranges.u_amp_max
        if style == 0:
            t0 = float(rng.uniform(0.0, ranges.t0_max))
            x0n = float(rng.uniform(0.0, ranges.x0_max))
            amp = float(rng.uniform(0.0, ranges.u_amp_max))
        elif style == 1:
            row = halton[trial]
            t0 = float(row[0] * ranges.t0_max)
            x0n = float(row[1] * ranges.x0_max)
            amp = float(row[2] * ranges.u_amp_max)
        else:
            variant = (trial // 3) % 4
            t0 = 0.0
            x0n = ranges.x0_max
            if variant == 2:
                taus = sigma.materialize(ranges.t0_max + 1.0)
                if taus.size:
                    t0 = max(0.0, float(taus[0]) - 0.5 * ranges.step)
        horizon = t0 + ranges.horizon
        x0 = x0n * _direction(rng, system.dim_x)
        if zero_only:
            u = zero_signal(system.dim_u)
        elif style == 2:
            variant = (trial // 3) % 4
            if variant == 0:
                u = zero_signal(system.dim_u)
            elif variant == 1:
                u = _pulses_at_jumps(
                    sigma, system.dim_u, amp, 2.0 * ranges.step, t0, horizon
                )
            elif variant == 3:
                u = InputSignal(
                    np.array([t0]), amp * np.ones((1, system.dim_u))
                )
            else:
                u = _random_signal(
                    rng, system.dim_u, t0, horizon, amp, ranges.max_input_pieces
                )
        else:
            u = _random_signal(
                rng, system.dim_u, t0, horizon, amp, ranges.max_input_pieces
            )
        w = HybridInput(u, sigma)
        traj = simulate(system, t0, x0, w, horizon, ranges.step, strict=False)
        rep = check_certificate(cert, traj, w)
        if rep.verdict == "violated":
            wit = rep.witness
            wit.trial = trial
            wit.seed = seed
            wit.horizon = horizon
            wit.sigma_times = [float(t) for t in sigma.materialize(horizon)]
            return CheckReport(
                verdict="violated",
                kind=kind,
                worst_margin=rep.worst_margin,
                trials=trial + 1,
                samples=rep.samples,
                witness=wit,
                details={"trial_style": ("random", "low-discrepancy", "adversarial")[style]},
            )
        worst = max(worst, rep.worst_margin)
        if rep.verdict == "inconclusive":
            inconclusive += 1
    return CheckReport(
        verdict="pass",
        kind=kind,
        worst_margin=worst,
        trials=budget,
        details={
            "note": "no violation found within budget",
            "inconclusive_trials": inconclusive,
        },
    )


def replay_witness(
    witness: Witness, cert: Certificate, system: ImpulsiveSystem
) -> dict:
    """Re-simulate a witness and compare the violation margin.

    The stored sequence times, input, horizon, and step pin the grid
    exactly, so a faithful implementation reproduces the margin to
    rounding error.
    """
    sigma = (
        ImpulseSequence.from_times(witness.sigma_times)
        if witness.sigma_times
        else ImpulseSequence.from_times(())
    )
    u = (
        InputSignal.from_json(witness.u)
        if witness.u is not None
        else zero_signal(system.dim_u)
    )
    w = HybridInput(u, sigma)
    traj = simulate(
        system,
        witness.t0,
        np.asarray(witness.x0, dtype=float),
        w,
        witness.horizon,
        witness.step,
        strict=False,
    )
    rep = check_certificate(cert, traj, w)
    if rep.witness is None:
        return {
            "matches": False,
            "verdict": rep.verdict,
            "stored_margin": witness.margin,
            "replayed_margin": None,
        }
    new = rep.witness
    return {
        "matches": bool(
            abs(new.margin - witness.margin) <= 1e-9 and abs(new.t - witness.t) <= 1e-9
        ),
        "verdict": rep.verdict,
        "stored_margin": witness.margin,
        "replayed_margin": new.margin,
        "replayed_t": new.t,
        "margin_gap": abs(new.margin - witness.margin),
    }


# ---------------------------------------------------------------------------
# The three limit conditions and settling-time estimation.


@dataclass(frozen=True)
class EpsDeltaConfig:
    """Grids and sampling bounds for the three limit conditions.

    alpha_tilde is the candidate gauge for the convergence condition;
    the energy of sampled inputs is measured over the whole simulated
    window, which for generator-backed sequences means every jump up to
    the trial horizon contributes.
    """

    alpha_tilde: ComparisonFn
    T_grid: tuple = (2.0, 6.0, 12.0)
    r_grid: tuple = (0.5, 2.0)
    s_grid: tuple = (0.5, 2.0)
    eps_grid: tuple = (0.2, 1.0)
    t0_max: float = 1.0
    horizon: float = 12.0
    step: float = 1e-2
    delta_init: float = 1.0
    delta_levels: int = 16
    zero_input: bool = False


def _scaled_to_energy(
    sig: InputSignal,
    sigma: ImpulseSequence,
    gain: tuple[ComparisonFn, ComparisonFn],
    t0: float,
    t_end: float,
    target: float,
) -> tuple[InputSignal, float]:
    """Scale a signal so its energy over (t0, t_end] is at most target."""
    if target <= 0.0 or sig.is_zero():
        z = zero_signal(sig.dim)
        return z, 0.0
    rho1, rho2 = gain

    def energy_of(scale: float) -> float:
        w = HybridInput(sig.scaled(scale), sigma)
        return float(EnergyProfile(w, rho1, rho2, t0, t_end).at(t_end))

    base = energy_of(1.0)
    if base <= target:
        return sig, base
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if energy_of(mid) <= target:
            lo = mid
        else:
            hi = mid
    return sig.scaled(lo), energy_of(lo)


def _sample_x0(rng: np.random.Generator, dim: int, r: float, k: int) -> np.ndarray:
    norm = r if k % 4 == 0 else float(rng.uniform(0.0, r))
    return norm * _direction(rng, dim)


@dataclass
class _ScanResult:
    threshold: float
    saturated: bool
    max_seen: float
    violations: int


def _gain_violation_scan(
    system: ImpulsiveSystem,
    family: ImpulseFamily,
    alpha: ComparisonFn,
    gain: tuple[ComparisonFn, ComparisonFn] | None,
    r: float,
    eps: float,
    t0_max: float,
    horizon: float,
    step: float,
    zero_input: bool,
    trials: int,
    seed_path: list[int],
) -> _ScanResult:
    """Largest strong time at which alpha(|x|) still exceeds eps + energy.

    Saturation means some trial's violations persist into the edge of
    its observable strong-time window, i.e. no settling was seen.
    """
    worst_T = 0.0
    max_seen = 0.0
    nviol = 0
    saturated = False
    for k in range(trials):
        rng = np.random.default_rng(seed_path + [k])
        t0 = float(rng.uniform(0.0, t0_max)) if t0_max > 0 else 0.0
        x0 = _sample_x0(rng, system.dim_x, r, k)
        sigma = family.sampler(_trial_seed(seed_path[-1], k), t0 + horizon + 1.0)
        if zero_input or gain is None:
            u = zero_signal(system.dim_u)
            wnorm = 0.0
        else:
            u = _random_signal(rng, system.dim_u, t0, t0 + horizon, 1.0, 5)
            w_full = HybridInput(u, sigma)
            wnorm = float(
                EnergyProfile(w_full, gain[0], gain[1], t0, t0 + horizon).at(t0 + horizon)
            )
        w = HybridInput(u, sigma)
        traj = simulate(system, t0, x0, w, t0 + horizon, step, strict=False)
        times, norms, sargs, side = _check_points(traj, sigma, "strong")
        lhs = _gauge_values(alpha, norms)
        rhs = eps + wnorm
        viol = lhs > rhs + TOL_SCALE * (1.0 + rhs)
        trial_max = float(np.max(sargs)) if sargs.size else 0.0
        max_seen = max(max_seen, trial_max)
        if np.any(viol):
            t_v = float(np.max(sargs[viol]))
            worst_T = max(worst_T, t_v)
            nviol += int(np.sum(viol))
            edge = max(4.0 * step, 0.02 * trial_max)
            if t_v >= trial_max - edge:
                saturated = True
    return _ScanResult(worst_T, saturated, max_seen, nviol)


def check_eps_delta_conditions(
    system: ImpulsiveSystem,
    gain: tuple[ComparisonFn, ComparisonFn],
    family: ImpulseFamily,
    config: EpsDeltaConfig,
    budget: int = 32,
    seed: int = 0,
) -> tuple[CheckReport, CheckReport, CheckReport]:
    """Sample the three limit conditions behind the gain estimate.

    (i) boundedness: on each (T, r, s) cell the largest |x| over the
    samples with strong time at most T, from |x0| <= r and energy <= s.
    (ii) stability at zero: for each eps, a delta such that |x0| <= delta
    and energy <= delta kept every sample below eps; delta halves until
    one works.  (iii) convergence: for each (r, eps), the largest strong
    time where alpha_tilde(|x|) still exceeded eps + energy; saturation
    of that threshold at the observable window is reported as violated.

    ``budget`` is the number of trials per grid cell (per level for
    item ii).  Passing is sampling evidence; violations carry data.
    """
    cfg = config
    rho1, rho2 = gain

    # item i: uniform bound over strong-time sublevels
    c_grid = {}
    verdict_i = "pass"
    worst_i = -math.inf
    details_i: dict = {}
    cell = 0
    for T in cfg.T_grid:
        for r in cfg.r_grid:
            for s in cfg.s_grid:
                cmax = 0.0
                for k in range(budget):
                    rng = np.random.default_rng([seed, 11, cell, k])
                    t0 = float(rng.uniform(0.0, cfg.t0_max))
                    x0 = _sample_x0(rng, system.dim_x, r, k)
                    sigma = family.sampler(
                        _trial_seed(seed, 101 * cell + k), t0 + cfg.horizon + 1.0
                    )
                    if cfg.zero_input:
                        u = zero_signal(system.dim_u)
                    else:
                        raw = _random_signal(
                            rng, system.dim_u, t0, t0 + cfg.horizon, 1.0, 5
                        )
                        u, _ = _scaled_to_energy(
                            raw, sigma, gain, t0, t0 + cfg.horizon, s
                        )
                    w = HybridInput(u, sigma)
                    traj = simulate(
                        system, t0, x0, w, t0 + cfg.horizon, cfg.step, strict=False
                    )
                    times, norms, sargs, side = _check_points(traj, sigma, "strong")
                    mask = sargs <= T + 1e-12
                    if np.any(mask):
                        cmax = max(cmax, float(np.max(norms[mask])))
                c_grid[f"T={T:g},r={r:g},s={s:g}"] = cmax
                if cmax >= DIVERGENCE_RADIUS:
                    verdict_i = "violated"
                worst_i = max(worst_i, cmax)
                cell += 1
    details_i["C"] = c_grid
    report_i = CheckReport(
        verdict=verdict_i,
        kind="eps-delta-bounded",
        worst_margin=worst_i,
        trials=budget * cell,
        details=details_i,
    )

    # item ii: a delta for every eps
    verdict_ii = "pass"
    delta_map = {}
    details_ii: dict = {}
    trials_ii = 0
    for e_idx, eps in enumerate(cfg.eps_grid):
        delta = cfg.delta_init
        found = None
        for level in range(cfg.delta_levels):
            ok = True
            for k in range(budget):
                rng = np.random.default_rng([seed, 22, e_idx, level, k])
                t0 = float(rng.uniform(0.0, cfg.t0_max))
                x0 = _sample_x0(rng, system.dim_x, delta, k)
                sigma = family.sampler(
                    _trial_seed(seed, 7919 * e_idx + 131 * level + k),
                    t0 + cfg.horizon + 1.0,
                )
                if cfg.zero_input:
                    u = zero_signal(system.dim_u)
                else:
                    raw = _random_signal(
                        rng, system.dim_u, t0, t0 + cfg.horizon, 1.0, 5
                    )
                    u, _ = _scaled_to_energy(
                        raw, sigma, gain, t0, t0 + cfg.horizon, delta
                    )
                w = HybridInput(u, sigma)
                traj = simulate(
                    system, t0, x0, w, t0 + cfg.horizon, cfg.step, strict=False
                )
                trials_ii += 1
                times, norms, sargs, side = _check_points(traj, sigma, "strong")
                if norms.size and float(np.max(norms)) > eps:
                    ok = False
                    break
            if ok:
                found = delta
                break
            delta *= 0.5
        delta_map[f"eps={eps:g}"] = found
        if found is None:
            verdict_ii = "violated"
    details_ii["delta"] = delta_map
    report_ii = CheckReport(
        verdict=verdict_ii,
        kind="eps-delta-stability",
        worst_margin=0.0,
        trials=trials_ii,
        details=details_ii,
    )

    # item iii: settling of the gauge below eps + energy
    verdict_iii = "pass"
    t_map = {}
    sat_map = {}
    details_iii: dict = {}
    cell = 0
    for r in cfg.r_grid:
        for eps in cfg.eps_grid:
            scan = _gain_violation_scan(
                system,
                family,
                cfg.alpha_tilde,
                gain,
                r,
                eps,
                cfg.t0_max,
                cfg.horizon,
                cfg.step,
                cfg.zero_input,
                budget,
                [seed, 33, cell],
            )
            key = f"r={r:g},eps={eps:g}"
            t_map[key] = scan.threshold
            sat_map[key] = scan.saturated
            if scan.saturated:
                verdict_iii = "violated"
            cell += 1
    details_iii["T"] = t_map
    details_iii["saturated"] = sat_map
    report_iii = CheckReport(
        verdict=verdict_iii,
        kind="eps-delta-convergence",
        worst_margin=max(t_map.values()) if t_map else 0.0,
        trials=budget * cell,
        details=details_iii,
    )
    return report_i, report_ii, report_iii


@dataclass(frozen=True)
class SettlingConfig:
    gain: tuple[ComparisonFn, ComparisonFn] | None = None
    zero_input: bool = True
    t0_max: float = 0.0
    horizon: float = 12.0
    step: float = 1e-2


@dataclass
class SettlingEstimate:
    value: float
    saturated: bool
    trials: int
    max_strong_time: float

    def __float__(self) -> float:
        return float(self.value)


def estimate_settling_time(
    system: ImpulsiveSystem,
    family: ImpulseFamily,
    alpha: ComparisonFn,
    r: float,
    eps: float,
    config: SettlingConfig = SettlingConfig(),
    budget: int = 64,
    seed: int = 0,
) -> SettlingEstimate:
    """Largest sampled strong time with alpha(|x|) above eps (+ energy).

    Raw sampling estimate: no smoothing across (r, eps).  A saturated
    result means violations persisted to the edge of the observable
    window, so no finite settling threshold was seen within budget.
    """
    if r <= 0 or eps <= 0:
        raise OutOfRange("need r > 0 and eps > 0")
    scan = _gain_violation_scan(
        system,
        family,
        alpha,
        config.gain,
        r,
        eps,
        config.t0_max,
        config.horizon,
        config.step,
        config.zero_input,
        budget,
        [seed, 44],
    )
    return SettlingEstimate(
        value=scan.threshold,
        saturated=scan.saturated,
        trials=budget,
        max_strong_time=scan.max_seen,
    )


def settling_time_profile(
    system: ImpulsiveSystem,
    family: ImpulseFamily,
    alpha: ComparisonFn,
    r_grid,
    eps_grid,
    config: SettlingConfig = SettlingConfig(),
    budget: int = 32,
    seed: int = 0,
) -> dict:
    """Settling estimates over a grid, with monotonicity flags.

    The underlying quantity is nondecreasing in r and nonincreasing in
    eps; sampled estimates are reported raw and simply flagged when
    they wobble beyond the sampling tolerance, not adjusted.
    """
    est = []
    sat = []
    for r in r_grid:
        row = []
        satrow = []
        for eps in eps_grid:
            e = estimate_settling_time(
                system, family, alpha, float(r), float(eps), config, budget, seed
            )
            row.append(e.value)
            satrow.append(e.saturated)
        est.append(row)
        sat.append(satrow)
    arr = np.asarray(est)
    band = 2.0 * config.step + 1e-9
    mono_r = bool(np.all(np.diff(arr, axis=0) >= -band)) if arr.shape[0] > 1 else True
    mono_eps = bool(np.all(np.diff(arr, axis=1) <= band)) if arr.shape[1] > 1 else True
    return {
        "r_grid": [float(r) for r in r_grid],
        "eps_grid": [float(e) for e in eps_grid],
        "estimates": [[float(v) for v in row] for row in est],
        "saturated": [[bool(v) for v in row] for row in sat],
        "monotone_in_r": mono_r,
        "monotone_in_eps": mono_eps,
        "tolerance": band,
        "note": "raw sampled estimates; wobble within tolerance is sampling noise",
    }
