"""Trajectory classification, Fourier spectra, parameter sweeps,
multistability detection, and adiabatic branch following.

Classification thresholds (see the package defaults below): a trajectory is
Stationary when every component's late-tail standard deviation is below
``stationary_tol``; a LimitCycle when the spectral peaks of the tail form a
single harmonic comb of at most ``max_harmonics`` peaks; QuasiPeriodic when
two incommensurate base frequencies generate all peaks; Undetermined
otherwise (straddling cases are reported, never guessed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import _fast
from .meanfield import Trajectory, setup2_phases_to_state
from .model import BLOCH_RADIUS, SQRT2, ModelParams, SimGrid

#: tail standard deviation below which every component counts as stationary
STATIONARY_TOL = 1e-6
#: peaks below this fraction of the dominant peak are ignored
PEAK_REL_HEIGHT = 0.01
#: a comb with more peaks than this is not called a limit cycle
MAX_HARMONICS = 12
#: relative tolerance for harmonic/combination frequency matching
HARMONIC_TOL = 1e-3

STATIONARY = "Stationary"
LIMIT_CYCLE = "LimitCycle"
QUASI_PERIODIC = "QuasiPeriodic"
UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class PhaseLabel:
    kind: str
    amplitude: float
    dominant_frequency: float          # angular frequency, rad / time unit
    peak_count: int
    residual_drift: float
    base_frequencies: tuple = ()

    @property
    def oscillatory(self) -> bool:
        return self.kind in (LIMIT_CYCLE, QUASI_PERIODIC)


def fourier_spectrum(traj_or_times, series=None, component=None,
                     tail_fraction: float = 0.5):
    """One-sided magnitude spectrum of the detrended, Hann-windowed tail.

    Accepts a Trajectory plus a component index, or plain (times, values).
    Returns (angular_frequencies, magnitudes).  Non-uniform sampling is
    rejected.
    """
    if isinstance(traj_or_times, Trajectory):
        times = traj_or_times.times
        values = traj_or_times.states[:, component if component is not None else 5]
    else:
        times = np.asarray(traj_or_times, float)
        values = np.asarray(series, float)
        dt_all = np.diff(times)
        if dt_all.size == 0 or not np.allclose(dt_all, dt_all[0], rtol=1e-8, atol=1e-12):
            raise ValueError("fourier_spectrum requires uniform sampling")
    i0 = int(math.floor(times.size * (1.0 - tail_fraction)))
    v = values[i0:] - values[i0:].mean()
    if v.size < 8:
        raise ValueError("tail too short for a spectrum")
    dt = times[1] - times[0]
    win = np.hanning(v.size)
    mag = np.abs(np.fft.rfft(v * win))
    omega = 2.0 * np.pi * np.fft.rfftfreq(v.size, dt)
    return omega, mag


def _refined_peaks(omega, mag, rel_height):
    """Peak angular frequencies with parabolic sub-bin refinement."""
    if mag.size < 4:
        return np.array([]), np.array([])
    top = mag[1:].max() if mag.size > 1 else 0.0
    if top <= 0.0:
        return np.array([]), np.array([])
    idx, _ = find_peaks(mag, height=rel_height * top, prominence=0.5 * rel_height * top)
    idx = idx[idx >= 1]
    freqs, heights = [], []
    dw = omega[1] - omega[0]
    for i in idx:
        if 1 <= i < mag.size - 1 and mag[i - 1] > 0 and mag[i + 1] > 0:
            la, lb, lc = np.log(mag[i - 1]), np.log(mag[i]), np.log(mag[i + 1])
            den = la - 2.0 * lb + lc
            shift = 0.5 * (la - lc) / den if den != 0.0 else 0.0
            shift = float(np.clip(shift, -0.5, 0.5))
        else:
            shift = 0.0
        freqs.append(omega[i] + shift * dw)
        heights.append(mag[i])
    return np.asarray(freqs), np.asarray(heights)


def _is_comb(freqs, base, tol_abs):
    ratios = freqs / base
    return bool(np.all(np.abs(ratios - np.round(ratios)) * base <= tol_abs))


def classify(times, values, tail_fraction: float = 0.5, *,
             stationary_tol: float = STATIONARY_TOL,
             peak_rel_height: float = PEAK_REL_HEIGHT,
             max_harmonics: int = MAX_HARMONICS,
             harmonic_tol: float = HARMONIC_TOL) -> PhaseLabel:
    """Label the asymptotic behavior of a uniformly sampled multicomponent
    series from its trailing window."""
    times = np.asarray(times, float)
    vals = np.asarray(values, float)
    if vals.ndim == 1:
        vals = vals[:, None]
    n = times.size
    i0 = int(math.floor(n * (1.0 - tail_fraction)))
    tail = vals[i0:]
    m = tail.shape[0]
    late = tail[m // 2:]
    amplitude = float(np.max(tail.max(axis=0) - tail.min(axis=0)))
    drift = float(np.max(np.abs(late.mean(axis=0) - tail[: m // 2].mean(axis=0))))

    late_std = float(late.std(axis=0).max())
    if late_std < stationary_tol:
        return PhaseLabel(STATIONARY, amplitude, 0.0, 0, drift)

    # decaying transient: oscillation amplitude still shrinking fast
    early_std = float(tail[: m // 2].std(axis=0).max())
    if early_std > 0 and late_std / early_std < 0.1:
        return PhaseLabel(UNDETERMINED, amplitude, 0.0, 0, drift)

    dt = times[1] - times[0]
    win = np.hanning(m)
    detrended = tail - tail.mean(axis=0)
    power = np.zeros(m // 2 + 1)
    for c in range(detrended.shape[1]):
        power += np.abs(np.fft.rfft(detrended[:, c] * win)) ** 2
    mag = np.sqrt(power)
    omega = 2.0 * np.pi * np.fft.rfftfreq(m, dt)
    freqs, heights = _refined_peaks(omega, mag, peak_rel_height)
    if freqs.size == 0:
        return PhaseLabel(UNDETERMINED, amplitude, 0.0, 0, drift)

    dominant = float(freqs[int(np.argmax(heights))])
    dw = omega[1] - omega[0]
    tol_abs = harmonic_tol * dominant + 0.25 * dw

    base = float(freqs.min())
    if _is_comb(freqs, base, tol_abs):
        if freqs.size <= max_harmonics:
            return PhaseLabel(LIMIT_CYCLE, amplitude, dominant, int(freqs.size),
                              drift, (base,))
        return PhaseLabel(UNDETERMINED, amplitude, dominant, int(freqs.size), drift, (base,))

    # not a single comb: quasi-periodic once a second incommensurate base
    # exists (the reduced dynamics is two-dimensional, so chaos is excluded
    # and dense non-comb spectra are combination lines of two bases)
    order = np.argsort(heights)[::-1]
    f1 = float(freqs[order[0]])
    f2 = None
    for k in order[1:]:
        r = freqs[k] / f1
        if abs(r - round(r)) * f1 > tol_abs:
            f2 = float(freqs[k])
            break
    if f2 is not None:
        return PhaseLabel(QUASI_PERIODIC, amplitude, dominant, int(freqs.size),
                          drift, (f1, f2))
    return PhaseLabel(UNDETERMINED, amplitude, dominant, int(freqs.size), drift)


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------

_AXIS_NAMES = {"j_xy", "j_z", "omega", "omega1", "omega2", "n", "n1", "n2"}


def _apply_axis(p: ModelParams, name: str, value: float) -> ModelParams:
    if name == "omega":
        return p.replace(omega1=value, omega2=value)
    if name == "n":
        return p.replace(n1=value, n2=value)
    if name in _AXIS_NAMES:
        return p.replace(**{name: value})
    raise ValueError(f"unknown sweep axis {name!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Grid specification and protocol of one sweep.

    The protocol is the paper's: every grid point starts from the same
    initial condition (all atoms in the ground state unless overridden).
    With ``zipped`` the axes co-vary instead of forming a product grid
    (e.g. a diagonal cut j_xy + j_z = const).
    """

    params: ModelParams
    setup: int
    axes: tuple               # ((name, values), ...) one or two axes
    t1: float = 1000.0
    dt_out: float = 0.1
    rtol: float = 1e-8
    atol: float = 1e-10
    tail_fraction: float = 0.5
    seed: int = 0
    zipped: bool = False
    with_correlations: bool = False
    correlation_t1: float = 200.0
    correlation_dt: float = 0.05
    correlation_rtol: float = 1e-10

    def __post_init__(self):
        if self.zipped:
            lengths = {len(v) for _, v in self.axes}
            if len(lengths) != 1:
                raise ValueError("zipped axes must have equal lengths")

    def shape(self) -> tuple[int, ...]:
        if self.zipped:
            return (len(self.axes[0][1]),)
        return tuple(len(v) for _, v in self.axes)

    def point_params(self, idx) -> ModelParams:
        p = self.params
        if self.zipped:
            for name, values in self.axes:
                p = _apply_axis(p, name, float(values[idx[0]]))
        else:
            for (name, values), i in zip(self.axes, idx):
                p = _apply_axis(p, name, float(values[i]))
        return p


@dataclass
class SweepResult:
    spec: SweepSpec
    labels: np.ndarray         # object array of PhaseLabel
    wbar: np.ndarray
    ebar: np.ndarray
    dbar: np.ndarray | None = None
    jbar: np.ndarray | None = None
    nbar: np.ndarray | None = None
    errors: list = field(default_factory=list)

    def rows(self):
        """Per-point CSV rows (axis values, label, averages, metrics)."""
        axes = self.spec.axes
        for idx in np.ndindex(self.labels.shape):
            lab = self.labels[idx]
            if self.spec.zipped:
                row = [float(values[idx[0]]) for _, values in axes]
            else:
                row = [float(values[i]) for (_, values), i in zip(axes, idx)]
            if lab is None:
                row += ["Error", "", "", "", ""]
            else:
                row += [lab.kind, self.wbar[idx], self.ebar[idx],
                        lab.dominant_frequency, lab.amplitude]
            if self.dbar is not None:
                row += [self.dbar[idx], self.jbar[idx], self.nbar[idx]]
            yield row

    def header(self):
        cols = [name for name, _ in self.spec.axes]
        cols += ["label", "wbar", "Ebar", "omega_dom", "amplitude"]
        if self.dbar is not None:
            cols += ["Dbar", "Jclbar", "Nbar"]
        return cols


def _evaluate_point(spec: SweepSpec, idx) -> dict:
    """One grid point: integrate on the reduced manifold, label the tail,
    and time-average work and stored energy over the trailing window."""
    from .thermo import time_average

    p = spec.point_params(idx)
    nu_k = p.kappa * p.nu
    if spec.setup == 1:
        y0 = np.array([0.0, 0.0, -BLOCH_RADIUS])
        times, ys = _fast.integrate_fast("sym3", y0, p, 0.0, spec.t1,
                                         spec.dt_out, spec.rtol, spec.atol)
        label = classify(times, ys, spec.tail_fraction)
        qdot_tot = -2.0 * nu_k * (ys[:, 0] ** 2 + ys[:, 1] ** 2)
        # u_s' analytically from the reduced RHS (both ensembles identical)
        mzdot = -p.kappa * SQRT2 * (ys[:, 0] ** 2 + ys[:, 1] ** 2) + p.omega1 * ys[:, 1]
        us_dot = SQRT2 * p.omega_at * mzdot
        us = SQRT2 * p.omega_at * ys[:, 2]
        stored = us - us[0]
    elif spec.setup == 2:
        times, fs = _fast.integrate_fast("phase2", np.zeros(2), p, 0.0, spec.t1,
                                         spec.dt_out, spec.rtol, spec.atol)
        m0 = -BLOCH_RADIUS
        s1, c1 = np.sin(fs[:, 0]), np.cos(fs[:, 0])
        s2, c2 = np.sin(fs[:, 1]), np.cos(fs[:, 1])
        comps = np.column_stack([m0 * s1, m0 * c1, m0 * s2, m0 * c2])
        label = classify(times, comps, spec.tail_fraction)
        qdot_tot = -nu_k * (comps[:, 0] ** 2 + comps[:, 2] ** 2)
        f1dot = -p.j_xy * s2 - p.kappa * s1
        f2dot = p.j_xy * s1 - p.kappa * s2 - p.omega2
        us_dot = (p.omega_at / SQRT2) * (-m0) * (s1 * f1dot + s2 * f2dot)
        stored = (p.omega_at / SQRT2) * (comps[:, 1] - comps[0, 1])
    else:
        raise ValueError("sweep setup must be 1 or 2")

    wbar = time_average(times, us_dot - qdot_tot, spec.tail_fraction)
    ebar = time_average(times, stored, spec.tail_fraction)
    out = {"idx": idx, "label": label, "wbar": wbar, "ebar": ebar}

    if spec.with_correlations:
        out.update(_point_correlations(p, spec))
    return out


def _point_correlations(p: ModelParams, spec: SweepSpec) -> dict:
    """Time-averaged discord, classical correlations, and negativity from a
    joint mean-field + covariance integration at one parameter point."""
    from .fluctuations import bosonic_series, initial_covariance_ground, integrate_joint
    from .gaussian import correlation_report
    from .model import MeanFieldState
    from .thermo import time_average

    grid = SimGrid(0.0, spec.correlation_t1, spec.correlation_dt,
                   rtol=spec.correlation_rtol, atol=spec.correlation_rtol)
    joint = integrate_joint(MeanFieldState.ground(), initial_covariance_ground(),
                            p, grid, with_rotation=True)
    sig = bosonic_series(joint)
    n = sig.shape[0]
    ds = np.empty(n)
    js = np.empty(n)
    ns = np.empty(n)
    for i in range(n):
        rep = correlation_report(sig[i])
        ds[i], js[i], ns[i] = rep.discord, rep.classical, rep.negativity
    return {
        "dbar": time_average(joint.times, ds, 0.5),
        "jbar": time_average(joint.times, js, 0.5),
        "nbar": time_average(joint.times, ns, 0.5),
    }


def sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate the full grid; per-point failures are recorded and the sweep
    continues.  Results are independent of worker count and seed-stable."""
    shape = spec.shape()
    labels = np.empty(shape, dtype=object)
    wbar = np.full(shape, np.nan)
    ebar = np.full(shape, np.nan)
    with_corr = spec.with_correlations
    dbar = np.full(shape, np.nan) if with_corr else None
    jbar = np.full(shape, np.nan) if with_corr else None
    nbar = np.full(shape, np.nan) if with_corr else None
    errors = []
    indices = list(np.ndindex(shape))

    def fill(res):
        idx = res["idx"]
        labels[idx] = res["label"]
        wbar[idx] = res["wbar"]
        ebar[idx] = res["ebar"]
        if with_corr:
            dbar[idx] = res["dbar"]
            jbar[idx] = res["jbar"]
            nbar[idx] = res["nbar"]

    if threads > 1:
        import multiprocessing as mp
        with mp.Pool(threads) as pool:
            results = pool.starmap(_evaluate_point_safe,
                                   [(spec, idx) for idx in indices])
        for res in results:
            if "error" in res:
                errors.append((res["idx"], res["error"]))
            else:
                fill(res)
    else:
        _fast.warmup()
        for idx in indices:
            res = _evaluate_point_safe(spec, idx)
            if "error" in res:
                errors.append((res["idx"], res["error"]))
            else:
                fill(res)
    return SweepResult(spec, labels, wbar, ebar, dbar, jbar, nbar, errors)


def _evaluate_point_safe(spec: SweepSpec, idx) -> dict:
    try:
        return _evaluate_point(spec, idx)
    except Exception as exc:  # per-point failures must not kill the sweep
        return {"idx": idx, "error": f"{type(exc).__name__}: {exc}"}


# ---------------------------------------------------------------------------
# multistability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultistabilityResult:
    variance: float
    trial_averages: np.ndarray
    initial_states: np.ndarray


def random_bloch_states(n_trials: int, seed: int) -> np.ndarray:
    """Uniform directions on the product of Bloch spheres, radius 1/sqrt(2);
    counter-based seeding makes every trial reproducible."""
    out = np.empty((n_trials, 6))
    for k in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        for j in range(2):
            v = rng.normal(size=3)
            out[k, 3 * j:3 * j + 3] = v * (BLOCH_RADIUS / np.linalg.norm(v))
    return out


def multistability_scan(p: ModelParams, n_trials: int = 20, seed: int = 0, *,
                        t1: float = 200.0, window: tuple = (180.0, 200.0),
                        dt_out: float = 0.05, rtol: float = 1e-8) -> MultistabilityResult:
    """Variance over random initial conditions of the time-averaged charger
    magnetization m_z^(2); zero variance means a unique attractor."""
    if n_trials < 2:
        raise ValueError("need at least two trials")
    ics = random_bloch_states(n_trials, seed)
    avgs = np.empty(n_trials)
    for k in range(n_trials):
        times, ys = _fast.integrate_fast("full6", ics[k], p, 0.0, t1, dt_out,
                                         rtol, 1e-10)
        sel = (times >= window[0]) & (times <= window[1])
        if sel.sum() < 2:
            raise ValueError("averaging window contains fewer than 2 samples")
        avgs[k] = np.trapezoid(ys[sel, 5], times[sel]) / (times[sel][-1] - times[sel][0])
    return MultistabilityResult(float(np.var(avgs)), avgs, ics)


# ---------------------------------------------------------------------------
# adiabatic branch following
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchRecord:
    value: float
    label: PhaseLabel
    final_state: np.ndarray
    ebar: float


@dataclass(frozen=True)
class BranchResult:
    records: list
    collapse_value: float | None   # parameter where the followed branch died


def adiabatic_follow(p: ModelParams, axis: str, values, m0, *,
                     setup: int = 1, t_relax: float = 300.0, dt_out: float = 0.1,
                     tail_fraction: float = 0.5, rtol: float = 1e-9) -> BranchResult:
    """Follow an attractor along a parameter path: the final state of each
    step seeds the next.  Records where an oscillatory branch collapses onto
    the stationary one."""
    from .thermo import time_average

    state = np.asarray(m0.m if hasattr(m0, "m") else m0, float)
    records = []
    collapse = None
    prev_osc = False
    for v in values:
        pv = _apply_axis(p, axis, float(v))
        times, ys = _fast.integrate_fast("full6", state, pv, 0.0, t_relax,
                                         dt_out, rtol, 1e-11)
        label = classify(times, ys, tail_fraction)
        h_ref = (1, 2) if setup == 1 else (1,)
        cols = [3 * (j - 1) + 2 for j in h_ref]
        stored = (pv.omega_at / SQRT2) * (ys[:, cols].sum(axis=1) - ys[0, cols].sum())
        ebar = time_average(times, stored, tail_fraction)
        records.append(BranchRecord(float(v), label, ys[-1].copy(), float(ebar)))
        if prev_osc and label.kind == STATIONARY and collapse is None:
            collapse = float(v)
        prev_osc = label.oscillatory
        state = ys[-1]
    return BranchResult(records, collapse)
