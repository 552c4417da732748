"""Mean-field dynamics of the two coupled ensembles.

Implements the full six-component equations of motion, the reduced systems
valid on the symmetric manifold (setup 1: both ensembles driven identically)
and on the two-phase manifold (setup 2: undriven battery + driven charger),
the conserved quantity of the symmetric system, closed-form stationary
solutions with stability flags, and the critical coupling of setup 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import (
    BLOCH_RADIUS,
    SQRT2,
    MeanFieldState,
    ModelParams,
    SimGrid,
    coupling_matrix,
    dissipation_matrices,
    field_vector,
    spin_symplectic,
)


class IntegrationError(RuntimeError):
    """Adaptive integration failed (step-size underflow or solver abort)."""


class ManifoldError(ValueError):
    """Parameters or state violate the preconditions of a reduced system."""


class SingularInputError(ValueError):
    """Input lies on a singularity of the requested expression."""


MANIFOLD_TOL = 1e-12


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def rhs_full(m, p: ModelParams) -> np.ndarray:
    """Full mean-field derivative for the 6-vector [x1,y1,z1,x2,y2,z2].

    Polynomial in m, hence always finite; independent of n1, n2.
    """
    mv = m.m if isinstance(m, MeanFieldState) else m
    x1, y1, z1, x2, y2, z2 = mv
    j, jz, k, d = p.j_xy, p.j_z, p.kappa, p.delta
    o1, o2 = p.omega1, p.omega2
    s2 = SQRT2
    return np.array([
        -jz * s2 * y1 * z2 + j * s2 * y2 * z1 - d * y1 + k * s2 * x1 * z1,
        -j * s2 * z1 * x2 + jz * s2 * x1 * z2 - o1 * z1 + d * x1 + k * s2 * y1 * z1,
        j * s2 * (y1 * x2 - y2 * x1) + o1 * y1 - k * s2 * (x1 * x1 + y1 * y1),
        -jz * s2 * y2 * z1 + j * s2 * y1 * z2 - d * y2 + k * s2 * x2 * z2,
        -j * s2 * z2 * x1 + jz * s2 * x2 * z1 - o2 * z2 + d * x2 + k * s2 * y2 * z2,
        j * s2 * (y2 * x1 - y1 * x2) + o2 * y2 - k * s2 * (x2 * x2 + y2 * y2),
    ])


def rhs_full_vec(states: np.ndarray, p: ModelParams) -> np.ndarray:
    """Vectorized rhs_full over an (n, 6) array of states."""
    x1, y1, z1, x2, y2, z2 = (states[:, i] for i in range(6))
    j, jz, k, d = p.j_xy, p.j_z, p.kappa, p.delta
    o1, o2 = p.omega1, p.omega2
    s2 = SQRT2
    out = np.empty_like(states)
    out[:, 0] = -jz * s2 * y1 * z2 + j * s2 * y2 * z1 - d * y1 + k * s2 * x1 * z1
    out[:, 1] = -j * s2 * z1 * x2 + jz * s2 * x1 * z2 - o1 * z1 + d * x1 + k * s2 * y1 * z1
    out[:, 2] = j * s2 * (y1 * x2 - y2 * x1) + o1 * y1 - k * s2 * (x1 ** 2 + y1 ** 2)
    out[:, 3] = -jz * s2 * y2 * z1 + j * s2 * y1 * z2 - d * y2 + k * s2 * x2 * z2
    out[:, 4] = -j * s2 * z2 * x1 + jz * s2 * x2 * z1 - o2 * z2 + d * x2 + k * s2 * y2 * z2
    out[:, 5] = j * s2 * (y2 * x1 - y1 * x2) + o2 * y2 - k * s2 * (x2 ** 2 + y2 ** 2)
    return out


def _require_setup1(p: ModelParams):
    if abs(p.delta) > MANIFOLD_TOL or abs(p.omega1 - p.omega2) > MANIFOLD_TOL:
        raise ManifoldError(
            "setup-1 reduction needs delta = 0 and omega1 = omega2 "
            f"(got delta={p.delta}, omega1={p.omega1}, omega2={p.omega2})"
        )


def _require_setup2(p: ModelParams):
    if (abs(p.delta) > MANIFOLD_TOL or abs(p.j_z) > MANIFOLD_TOL
            or abs(p.omega1) > MANIFOLD_TOL):
        raise ManifoldError(
            "setup-2 reduction needs delta = j_z = 0 and omega1 = 0 "
            f"(got delta={p.delta}, j_z={p.j_z}, omega1={p.omega1})"
        )


def rhs_setup1(m3, p: ModelParams) -> np.ndarray:
    """Derivative of the symmetric manifold (m identical in both ensembles)."""
    _require_setup1(p)
    x, y, z = m3
    j, jz, k, o = p.j_xy, p.j_z, p.kappa, p.omega1
    s2 = SQRT2
    return np.array([
        (j - jz) * s2 * y * z + k * s2 * x * z,
        (jz - j) * s2 * x * z + k * s2 * y * z - o * z,
        -k * s2 * (x * x + y * y) + o * y,
    ])


def rhs_setup2(f, p: ModelParams) -> np.ndarray:
    """Phase derivatives (f1, f2) of the battery/charger manifold."""
    _require_setup2(p)
    f1, f2 = f
    j, k, o = p.j_xy, p.kappa, p.omega2
    return np.array([
        -j * math.sin(f2) - k * math.sin(f1),
        j * math.sin(f1) - k * math.sin(f2) - o,
    ])


def setup2_phases_to_state(f) -> np.ndarray:
    """Lift phases (f1, f2) to the 6-vector: battery in the x-z plane,
    charger in the y-z plane, both with Bloch radius 1/sqrt(2) and m0 < 0."""
    m0 = -BLOCH_RADIUS
    f1, f2 = f
    return np.array([
        m0 * math.sin(f1), 0.0, m0 * math.cos(f1),
        0.0, m0 * math.sin(f2), m0 * math.cos(f2),
    ])


def lift_symmetric(m3) -> np.ndarray:
    """Duplicate a symmetric-manifold 3-vector into the full 6-vector."""
    m3 = np.asarray(m3, float)
    return np.concatenate([m3, m3])


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled mean-field trajectory."""

    times: np.ndarray
    states: np.ndarray          # shape (n, 6)
    params: ModelParams

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        dt = np.diff(t)
        if dt.size and not np.allclose(dt, dt[0], rtol=1e-8, atol=1e-12):
            raise ValueError("trajectory sampling must be uniform")
        if self.states.shape != (t.size, 6):
            raise ValueError(f"states must be (n, 6), got {self.states.shape}")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def state(self, i: int) -> MeanFieldState:
        return MeanFieldState(self.states[i])

    def block(self, j: int) -> np.ndarray:
        """(n, 3) samples of ensemble j."""
        return self.states[:, 3 * (j - 1):3 * (j - 1) + 3]

    def norms(self) -> np.ndarray:
        """(n, 2) per-ensemble Bloch norms."""
        return np.stack([np.linalg.norm(self.block(1), axis=1),
                         np.linalg.norm(self.block(2), axis=1)], axis=1)


def _solve(rhs, y0, grid: SimGrid, method="DOP853"):
    times = grid.times()
    sol = solve_ivp(rhs, (grid.t0, grid.t1), y0, method=method,
                    t_eval=times, rtol=grid.rtol, atol=grid.atol)
    if not sol.success:
        raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else grid.t0:.6g}: "
                               f"{sol.message}")
    return times, sol.y.T


def integrate(m0, p: ModelParams, grid: SimGrid) -> Trajectory:
    """Adaptive high-order integration of the full mean-field equations,
    resampled onto the uniform output grid."""
    y0 = m0.m if isinstance(m0, MeanFieldState) else np.asarray(m0, float)
    times, states = _solve(lambda t, y: rhs_full(y, p), y0, grid)
    return Trajectory(times, states, p)


def integrate_setup1(m3_0, p: ModelParams, grid: SimGrid) -> Trajectory:
    """Integrate the symmetric 3-component system; returned trajectory holds
    the lifted 6-vector states."""
    _require_setup1(p)
    times, s3 = _solve(lambda t, y: rhs_setup1(y, p), np.asarray(m3_0, float), grid)
    return Trajectory(times, np.hstack([s3, s3]), p)


def integrate_setup2(f0, p: ModelParams, grid: SimGrid) -> tuple[Trajectory, np.ndarray]:
    """Integrate the setup-2 phase equations from phases f0 = (f1, f2).

    Returns the lifted trajectory and the (n, 2) phase samples.
    """
    _require_setup2(p)
    times, fs = _solve(lambda t, y: rhs_setup2(y, p), np.asarray(f0, float), grid)
    m0 = -BLOCH_RADIUS
    states = np.empty((times.size, 6))
    states[:, 0] = m0 * np.sin(fs[:, 0])
    states[:, 1] = 0.0
    states[:, 2] = m0 * np.cos(fs[:, 0])
    states[:, 3] = 0.0
    states[:, 4] = m0 * np.sin(fs[:, 1])
    states[:, 5] = m0 * np.cos(fs[:, 1])
    return Trajectory(times, states, p), fs


# ---------------------------------------------------------------------------
# conserved quantity of the symmetric system
# ---------------------------------------------------------------------------

def _gamma_args(m3, p: ModelParams):
    x, y = float(m3[0]), float(m3[1])
    lam_p = SQRT2 * (p.kappa + 1j * (p.j_xy - p.j_z))
    lam_m = SQRT2 * (p.kappa - 1j * (p.j_xy - p.j_z))
    eta_p = (1j * x + y) / SQRT2
    eta_m = (-1j * x + y) / SQRT2
    zp = lam_p * eta_p - p.omega1 / SQRT2
    zm = lam_m * eta_m - p.omega1 / SQRT2
    return lam_p, lam_m, zp, zm


def conserved_gamma(m3, p: ModelParams, eps: float = 1e-12) -> complex:
    """Conserved quantity of the symmetric mean-field flow (principal branch).

    Singular when either log argument vanishes; along a trajectory the value
    is continuous only after branch unwinding, see :func:`gamma_series`.
    """
    _require_setup1(p)
    lam_p, lam_m, zp, zm = _gamma_args(m3, p)
    if abs(zp) < eps or abs(zm) < eps:
        raise SingularInputError("log argument of the conserved quantity vanishes")
    return 1j * (lam_m * np.log(zp) - lam_p * np.log(zm))


def gamma_series(traj: Trajectory, eps: float = 1e-12) -> np.ndarray:
    """Branch-continued conserved quantity along a symmetric trajectory.

    The two complex log arguments are tracked separately and their phases
    unwrapped in time, which removes the 2*pi jumps of the principal branch.
    """
    p = traj.params
    _require_setup1(p)
    m3 = traj.states[:, :3]
    lam_p = SQRT2 * (p.kappa + 1j * (p.j_xy - p.j_z))
    lam_m = SQRT2 * (p.kappa - 1j * (p.j_xy - p.j_z))
    x, y = m3[:, 0], m3[:, 1]
    zp = lam_p * (1j * x + y) / SQRT2 - p.omega1 / SQRT2
    zm = lam_m * (-1j * x + y) / SQRT2 - p.omega1 / SQRT2
    if np.any(np.abs(zp) < eps) or np.any(np.abs(zm) < eps):
        raise SingularInputError("trajectory crosses a branch-point of the conserved quantity")
    log_p = np.log(np.abs(zp)) + 1j * np.unwrap(np.angle(zp))
    log_m = np.log(np.abs(zm)) + 1j * np.unwrap(np.angle(zm))
    return 1j * (lam_m * log_p - lam_p * log_m)


# ---------------------------------------------------------------------------
# stationary solutions, stability, critical lines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryPoint:
    m: MeanFieldState
    stable: bool
    jacobian_eigs: np.ndarray
    #: eigen-directions with |Re| below the zero threshold (conserved-norm
    #: manifolds force such modes); not counted as unstable.
    n_marginal: int = 0
    marginal: bool = False


#: threshold on |Re(eigenvalue)| below which a mode counts as marginal
STABILITY_TOL = 1e-8


def jacobian_full(m, p: ModelParams) -> np.ndarray:
    """Exact Jacobian of rhs_full at m (the RHS is quadratic, so columns are
    assembled from directional derivatives of the bilinear structure)."""
    mv = m.m if isinstance(m, MeanFieldState) else np.asarray(m, float)
    mm = coupling_matrix(p)
    msym = mm + mm.T
    _, b = dissipation_matrices(p)
    h = field_vector(p)
    dl = -spin_symplectic(h) / SQRT2
    dm_m = -spin_symplectic(msym @ mv)
    db_m = -spin_symplectic(b @ mv)
    jac = np.empty((6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        jac[:, k] = (dl @ e + dm_m @ e + db_m @ e
                     - spin_symplectic(msym @ e) @ mv
                     - spin_symplectic(b @ e) @ mv)
    return jac


def _classify_point(mvec, p: ModelParams, stable_hint=None) -> StationaryPoint:
    eigs = np.linalg.eigvals(jacobian_full(mvec, p))
    re = eigs.real
    n_marginal = int(np.sum(np.abs(re) < STABILITY_TOL))
    unstable = bool(np.any(re >= STABILITY_TOL))
    stable = (not unstable) if stable_hint is None else stable_hint
    return StationaryPoint(MeanFieldState(mvec), stable, eigs, n_marginal,
                           marginal=(not unstable) and n_marginal > 2)


def stationary_setup1(p: ModelParams) -> list[StationaryPoint]:
    """Closed-form stationary magnetizations of the symmetric system.

    Empty when (j_z - j_xy)^2 + kappa^2 < omega^2; the degenerate boundary
    returns the single m_z = 0 point flagged marginal.
    """
    _require_setup1(p)
    o = p.omega1
    dd = (p.j_z - p.j_xy) ** 2 + p.kappa ** 2
    disc = 1.0 - o * o / dd
    if disc < 0.0:
        return []
    mx = o * (p.j_z - p.j_xy) / (SQRT2 * dd)
    my = p.kappa * o / (SQRT2 * dd)
    if disc == 0.0:
        mvec = lift_symmetric([mx, my, 0.0])
        pt = _classify_point(mvec, p)
        return [StationaryPoint(pt.m, False, pt.jacobian_eigs, pt.n_marginal, marginal=True)]
    mz = math.sqrt(disc) / SQRT2
    out = []
    for sign in (-1.0, +1.0):
        mvec = lift_symmetric([mx, my, sign * mz])
        out.append(_classify_point(mvec, p, stable_hint=(sign < 0)))
    return out


def stationary_setup2(p: ModelParams) -> list[StationaryPoint]:
    """Stationary points of the setup-2 phase equations, lifted to 6-vectors.

    Both cosine branches of each phase are stationary; stability comes from
    the 2x2 Jacobian of the phase system (only the branch with both m_z
    negative is stable). Empty when either existence condition fails.
    """
    _require_setup2(p)
    j, k, o = p.j_xy, p.kappa, p.omega2
    dd = j * j + k * k
    sin_f1 = j * o / dd
    sin_f2 = -k * o / dd
    if abs(sin_f1) > 1.0 or abs(sin_f2) > 1.0:
        return []
    out = []
    c1 = math.sqrt(max(0.0, 1.0 - sin_f1 ** 2))
    c2 = math.sqrt(max(0.0, 1.0 - sin_f2 ** 2))
    for s1 in (+1.0, -1.0):
        for s2 in (+1.0, -1.0):
            cos_f1, cos_f2 = s1 * c1, s2 * c2
            jac2 = np.array([[-k * cos_f1, -j * cos_f2],
                             [j * cos_f1, -k * cos_f2]])
            stable = bool(np.all(np.linalg.eigvals(jac2).real < -STABILITY_TOL))
            f1 = math.atan2(sin_f1, cos_f1)
            f2 = math.atan2(sin_f2, cos_f2)
            mvec = setup2_phases_to_state((f1, f2))
            pt = _classify_point(mvec, p, stable_hint=stable)
            out.append(pt)
    return out


def critical_coupling_setup2(omega: float, kappa: float) -> float | None:
    """Critical coupling separating stationary from non-stationary phases.

    Largest real branch of J = sqrt(omega*kappa - kappa^2) and
    2J = omega + sqrt(omega^2 - 4 kappa^2); None when both are non-real
    (omega < kappa), in which case the system is stationary for every J.
    """
    if omega < 0:
        raise ValueError("omega must be >= 0")
    branches = []
    d1 = omega * kappa - kappa * kappa
    if d1 >= 0.0:
        branches.append(math.sqrt(d1))
    d2 = omega * omega - 4.0 * kappa * kappa
    if d2 >= 0.0:
        branches.append(0.5 * (omega + math.sqrt(d2)))
    return max(branches) if branches else None
