"""Quantum-fluctuation dynamics: drift matrices, the Lyapunov equation for
the 6x6 covariance, and the co-moving (bosonic) frame.

The drift pieces are all built from the block spin-symplectic map s(.):

    D_L = -s(h)/sqrt(2)        (linear drive and detuning)
    D_M = -s((M + M^T) m)      (quadratic coupling, mean part)
    D_B = -s(B m)              (dissipative mean part)
    C   =  s(M + M^T)          (coupling felt only by fluctuations)

with D = D_L + D_M + D_B antisymmetric and m' = D(m) m recovering the full
mean-field flow.  The covariance obeys  G' = P G + G P^T - s A s  with
P = D + C + sB.

Index order everywhere: [x1, y1, z1, x2, y2, z2]; after rotation the
per-ensemble triples read (x_j, p_j, w_j) and the w directions decouple from
the bosonic sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .meanfield import IntegrationError, ManifoldError, Trajectory, rhs_full
from .model import (
    BLOCH_RADIUS,
    SQRT2,
    CovarianceState,
    MeanFieldState,
    ModelParams,
    SimGrid,
    coupling_matrix,
    dissipation_matrices,
    field_vector,
    spin_symplectic,
)

#: 4x4 canonical symplectic form on (x1, p1, x2, p2), [x_j, p_k] = i delta_jk
SIGMA_CANONICAL = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
])

#: indices of the bosonic (x, p) directions inside the rotated 6-vector
BOSONIC_IDX = np.array([0, 1, 3, 4])

_UPPER_I, _UPPER_J = np.triu_indices(6)


@dataclass(frozen=True)
class DriftMatrices:
    """The four matrices assembling the fluctuation generator."""

    d_l: np.ndarray
    d_m: np.ndarray
    d_b: np.ndarray
    c: np.ndarray
    s_b: np.ndarray

    @property
    def d(self) -> np.ndarray:
        """Antisymmetric mean-field generator, m' = d @ m."""
        return self.d_l + self.d_m + self.d_b

    @property
    def p_total(self) -> np.ndarray:
        """Lyapunov drift P = D + C + sB."""
        return self.d + self.c + self.s_b


def drift(m, p: ModelParams) -> DriftMatrices:
    """Drift matrices at mean field ``m`` (state or plain 6-array)."""
    mv = m.m if isinstance(m, MeanFieldState) else np.asarray(m, float)
    mm = coupling_matrix(p)
    msym = mm + mm.T
    _, b = dissipation_matrices(p)
    d_l = -spin_symplectic(field_vector(p)) / SQRT2
    d_m = -spin_symplectic(msym @ mv)
    d_b = -spin_symplectic(b @ mv)
    s = spin_symplectic(mv)
    return DriftMatrices(d_l, d_m, d_b, s @ msym, s @ b)


def lyapunov_rhs(g, m, p: ModelParams) -> np.ndarray:
    """Symmetrized time derivative of the covariance at (g, m)."""
    gv = g.g if isinstance(g, CovarianceState) else np.asarray(g, float)
    mv = m.m if isinstance(m, MeanFieldState) else np.asarray(m, float)
    pt = drift(mv, p).p_total
    a, _ = dissipation_matrices(p)
    s = spin_symplectic(mv)
    dg = pt @ gv + gv @ pt.T - s @ a @ s
    return 0.5 * (dg + dg.T)


def initial_covariance_ground() -> CovarianceState:
    """Covariance of the product ground state: vacuum transverse noise,
    sharp z components, no cross-ensemble blocks."""
    return CovarianceState(np.diag([0.5, 0.5, 0.0, 0.5, 0.5, 0.0]))


def vacuum_covariance(m0) -> CovarianceState:
    """Covariance of a product of fully polarized states along m0's blocks."""
    q = initial_gauge(m0)
    g0 = np.diag([0.5, 0.5, 0.0, 0.5, 0.5, 0.0])
    return CovarianceState(q @ g0 @ q.T)


# ---------------------------------------------------------------------------
# joint integration of mean field + covariance (+ rotation)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointTrajectory:
    """Mean-field trajectory with per-sample covariances and, optionally,
    the numeric rotation R(t) solving R' = D R, R(0) = I."""

    trajectory: Trajectory
    covariances: np.ndarray          # (n, 6, 6)
    rotations: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def states(self) -> np.ndarray:
        return self.trajectory.states


def _pack_sym(g: np.ndarray) -> np.ndarray:
    return g[_UPPER_I, _UPPER_J]

def _unpack_sym(v: np.ndarray) -> np.ndarray:
    g = np.zeros((6, 6))
    g[_UPPER_I, _UPPER_J] = v
    g = g + g.T
    g[np.diag_indices(6)] *= 0.5
    return g


def integrate_joint(m0, g0, p: ModelParams, grid: SimGrid,
                    with_rotation: bool = True) -> JointTrajectory:
    """Co-integrate the 6 mean-field components, the 21 independent
    covariance entries, and (optionally) the 36 rotation entries with one
    adaptive stepper, so the fluctuation drift sees the exact m(t)."""
    mv = np.asarray(m0.m if isinstance(m0, MeanFieldState) else m0, float)
    gv = np.asarray(g0.g if isinstance(g0, CovarianceState) else g0, float)
    if not np.allclose(gv, gv.T, atol=1e-12):
        raise ValueError("initial covariance must be symmetric")

    mm = coupling_matrix(p)
    msym = mm + mm.T
    a_mat, b_mat = dissipation_matrices(p)
    d_l = -spin_symplectic(field_vector(p)) / SQRT2

    def rhs(_t, y):
        m = y[:6]
        g = _unpack_sym(y[6:27])
        s = spin_symplectic(m)
        d = d_l - spin_symplectic(msym @ m) - spin_symplectic(b_mat @ m)
        pt = d + s @ msym + s @ b_mat
        dm = d @ m
        dg = pt @ g + g @ pt.T - s @ a_mat @ s
        dg = 0.5 * (dg + dg.T)
        out = [dm, _pack_sym(dg)]
        if with_rotation:
            r = y[27:].reshape(6, 6)
            out.append((d @ r).ravel())
        return np.concatenate(out)

    y0 = [mv, _pack_sym(gv)]
    if with_rotation:
        y0.append(np.eye(6).ravel())
    times = grid.times()
    sol = solve_ivp(rhs, (grid.t0, grid.t1), np.concatenate(y0),
                    method="DOP853", t_eval=times, rtol=grid.rtol, atol=grid.atol)
    if not sol.success:
        raise IntegrationError(f"joint integration failed: {sol.message}")
    ys = sol.y.T
    traj = Trajectory(times, ys[:, :6], p)
    covs = np.array([_unpack_sym(row) for row in ys[:, 6:27]])
    rots = ys[:, 27:].reshape(-1, 6, 6) if with_rotation else None
    return JointTrajectory(traj, covs, rots)


def rotation_numeric(traj: Trajectory, rtol: float = 1e-10,
                     atol: float = 1e-10) -> np.ndarray:
    """R(t) with R' = D(m(t)) R and R(0) = I, co-integrated with the mean
    field from the trajectory's initial state; (n, 6, 6) array."""
    p = traj.params
    mm = coupling_matrix(p)
    msym = mm + mm.T
    _, b_mat = dissipation_matrices(p)
    d_l = -spin_symplectic(field_vector(p)) / SQRT2

    def rhs(_t, y):
        m = y[:6]
        r = y[6:].reshape(6, 6)
        d = d_l - spin_symplectic(msym @ m) - spin_symplectic(b_mat @ m)
        return np.concatenate([d @ m, (d @ r).ravel()])

    y0 = np.concatenate([traj.states[0], np.eye(6).ravel()])
    sol = solve_ivp(rhs, (traj.times[0], traj.times[-1]), y0, method="DOP853",
                    t_eval=traj.times, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"rotation integration failed: {sol.message}")
    return sol.y.T[:, 6:].reshape(-1, 6, 6)


# ---------------------------------------------------------------------------
# gauge and analytic rotations
# ---------------------------------------------------------------------------

def _block_gauge(m3: np.ndarray) -> np.ndarray:
    """Rotation taking the z axis onto the direction of m3 (Rodrigues)."""
    r = np.linalg.norm(m3)
    mhat = m3 / r
    c = mhat[2]
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross([0.0, 0.0, 1.0], mhat)
    s = np.linalg.norm(axis)
    axis = axis / s
    k = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def initial_gauge(m0, tol: float = 1e-8) -> np.ndarray:
    """Constant block rotation Q with Q^T s(m0) Q canonical.

    Requires both ensembles fully polarized (|m0^(j)| = 1/sqrt(2)); for mixed
    initial states the rotated commutators are not canonical and the bosonic
    analysis does not apply.
    """
    mv = np.asarray(m0.m if isinstance(m0, MeanFieldState) else m0, float)
    q = np.zeros((6, 6))
    for j in range(2):
        blk = mv[3 * j:3 * j + 3]
        if abs(np.linalg.norm(blk) - BLOCH_RADIUS) > tol:
            raise ManifoldError(
                f"ensemble {j + 1} is not fully polarized "
                f"(|m| = {np.linalg.norm(blk):.6g}, need 1/sqrt(2))"
            )
        q[3 * j:3 * j + 3, 3 * j:3 * j + 3] = _block_gauge(blk)
    return q


def _block_rotation_yz(m3) -> np.ndarray:
    """Analytic co-moving block for motion in the y-z plane."""
    _, my, mz = m3
    return SQRT2 * np.array([
        [1.0 / SQRT2, 0.0, 0.0],
        [0.0, mz, my],
        [0.0, -my, mz],
    ])


def _block_rotation_xz(m3) -> np.ndarray:
    """Analytic co-moving block for motion in the x-z plane."""
    mx, _, mz = m3
    return SQRT2 * np.array([
        [mz, 0.0, mx],
        [0.0, 1.0 / SQRT2, 0.0],
        [-mx, 0.0, mz],
    ])


def rotation_setup1_analytic(m, tol: float = 1e-8) -> np.ndarray:
    """Closed-form rotation on the synchronized manifold (j_xy = j_z, ground
    start), where m_x vanishes identically in both ensembles."""
    mv = np.asarray(m.m if isinstance(m, MeanFieldState) else m, float)
    r = np.zeros((6, 6))
    for j in range(2):
        blk = mv[3 * j:3 * j + 3]
        if abs(blk[0]) > tol:
            raise ManifoldError(f"ensemble {j + 1} has m_x = {blk[0]:.3g} != 0; "
                                "analytic rotation needs y-z plane motion")
        r[3 * j:3 * j + 3, 3 * j:3 * j + 3] = _block_rotation_yz(blk)
    return r


def rotation_setup2_analytic(m, tol: float = 1e-8) -> np.ndarray:
    """Closed-form rotation on the battery/charger manifold.

    The battery (ensemble 1) moves in the x-z plane and the charger
    (ensemble 2) in the y-z plane, so the x-z block applies to ensemble 1 and
    the y-z block to ensemble 2; this assignment is fixed by requiring
    R^T s R to be canonical.
    """
    mv = np.asarray(m.m if isinstance(m, MeanFieldState) else m, float)
    if abs(mv[1]) > tol or abs(mv[3]) > tol:
        raise ManifoldError("state off the battery/charger manifold "
                            f"(m_y1 = {mv[1]:.3g}, m_x2 = {mv[3]:.3g})")
    r = np.zeros((6, 6))
    r[:3, :3] = _block_rotation_xz(mv[:3])
    r[3:, 3:] = _block_rotation_yz(mv[3:])
    return r


# ---------------------------------------------------------------------------
# bosonic-frame covariance
# ---------------------------------------------------------------------------

def rotated_covariance(g, r) -> np.ndarray:
    """Full 6x6 covariance in the rotated frame, R^T G R."""
    gv = g.g if isinstance(g, CovarianceState) else np.asarray(g, float)
    return r.T @ gv @ r

def bosonic_covariance(g, r) -> np.ndarray:
    """4x4 two-mode covariance 2*Gbar restricted to (x1, p1, x2, p2)."""
    gb = rotated_covariance(g, r)
    return 2.0 * gb[np.ix_(BOSONIC_IDX, BOSONIC_IDX)]


def bosonic_series(joint: JointTrajectory, gauge: np.ndarray | None = None) -> np.ndarray:
    """Per-sample 4x4 bosonic covariances from a joint integration.

    The numeric rotation (R(0) = I) is gauge-fixed by a constant right
    rotation built from the initial state, so the rotated symplectic form is
    canonical along the whole trajectory.
    """
    if joint.rotations is None:
        raise ValueError("joint trajectory was integrated without rotations")
    if gauge is None:
        gauge = initial_gauge(joint.states[0])
    out = np.empty((joint.times.size, 4, 4))
    for i in range(joint.times.size):
        rt = joint.rotations[i] @ gauge
        out[i] = bosonic_covariance(joint.covariances[i], rt)
    return out


def rotated_symplectic_defect(joint: JointTrajectory,
                              gauge: np.ndarray | None = None) -> np.ndarray:
    """Max deviation of R^T s R from the canonical form, per sample."""
    if joint.rotations is None:
        raise ValueError("joint trajectory was integrated without rotations")
    if gauge is None:
        gauge = initial_gauge(joint.states[0])
    defects = np.empty(joint.times.size)
    for i in range(joint.times.size):
        rt = joint.rotations[i] @ gauge
        sig = (rt.T @ spin_symplectic(joint.states[i]) @ rt)
        defects[i] = np.max(np.abs(sig[np.ix_(BOSONIC_IDX, BOSONIC_IDX)] - SIGMA_CANONICAL))
    return defects


# ---------------------------------------------------------------------------
# effective generator of the bosonic fluctuations
# ---------------------------------------------------------------------------

def effective_fluctuation_hamiltonian(setup: int, m, p: ModelParams) -> tuple[float, float]:
    """Quadratic-form coefficients (c_xx, c_pp) of the rotated-frame
    Hamiltonian c_xx*x1*x2 + c_pp*p1*p2.

    Setup 1 (synchronized manifold, j_xy = j_z): time-independent (J, J).
    Setup 2: (J*sqrt(2)*m_z1, J*sqrt(2)*m_z2), time dependent through the
    mean field.  The pairing refers to the quadratures of the analytic
    rotation blocks; a simultaneous 90-degree rotation of both modes (which
    leaves every Gaussian correlation measure unchanged) exchanges the two
    coefficients.
    """
    mv = np.asarray(m.m if isinstance(m, MeanFieldState) else m, float)
    if setup == 1:
        if abs(p.j_xy - p.j_z) > 1e-12:
            raise ManifoldError("setup-1 effective Hamiltonian needs j_xy = j_z")
        return (p.j_xy, p.j_xy)
    if setup == 2:
        if abs(p.j_z) > 1e-12 or abs(p.omega1) > 1e-12:
            raise ManifoldError("setup-2 effective Hamiltonian needs j_z = 0, omega1 = 0")
        return (p.j_xy * SQRT2 * mv[2], p.j_xy * SQRT2 * mv[5])
    raise ValueError("setup must be 1 or 2")


def effective_jump_vectors(setup: int, m, p: ModelParams
                           ) -> list[tuple[float, np.ndarray]]:
    """Bosonic-frame jump operators as (rate, coefficient-vector) pairs.

    Each collective decay/excitation channel F_x -+ i F_y is carried into the
    co-moving frame by the analytic block rotations; the w component commutes
    with the bosonic sector and is dropped.  On a y-z block the decay channel
    reads x_j - i*sqrt(2)*m_z^(j)*p_j (the printed form); on an x-z block it
    reads sqrt(2)*m_z^(j)*x_j - i*p_j.
    """
    mv = np.asarray(m.m if isinstance(m, MeanFieldState) else m, float)
    if setup == 1:
        blocks = (_block_rotation_yz, _block_rotation_yz)
    elif setup == 2:
        blocks = (_block_rotation_xz, _block_rotation_yz)
    else:
        raise ValueError("setup must be 1 or 2")
    out = []
    for j, n in ((0, p.n1), (1, p.n2)):
        r = blocks[j](mv[3 * j:3 * j + 3])
        for sign, rate in ((-1.0, p.kappa * (1.0 + n)), (+1.0, p.kappa * n)):
            c3 = r.T @ np.array([1.0, sign * 1j, 0.0])
            c4 = np.zeros(4, dtype=complex)
            c4[2 * j] = c3[0]
            c4[2 * j + 1] = c3[1]
            out.append((rate, c4))
    return out


def effective_bosonic_generator(setup: int, m, p: ModelParams
                                ) -> tuple[np.ndarray, np.ndarray]:
    """Drift and noise of the bosonic covariance in the analytic co-moving
    frame, built from the effective Hamiltonian and jump operators.

    Returns (A, Dn) such that d/dt Gbar_bos = A Gbar + Gbar A^T + Dn, in the
    normalization where the vacuum covariance is I/2.

    For setup 1 the co-moving frame adds the local term
    -(J/2) * sum_j (x_j^2 + p_j^2) to the printed exchange Hamiltonian: the
    analytic rotation spins each mode at rate J relative to the frame in
    which the Hamiltonian is pure exchange.  Setup 2 has no such term.
    """
    cxx, cpp = effective_fluctuation_hamiltonian(setup, m, p)
    lam = np.zeros((4, 4))
    lam[0, 2] = lam[2, 0] = cxx
    lam[1, 3] = lam[3, 1] = cpp
    if setup == 1:
        lam -= p.j_xy * np.eye(4)
    cmat = np.zeros((4, 4), dtype=complex)
    for rate, c4 in effective_jump_vectors(setup, m, p):
        cmat += rate * np.outer(c4, c4.conj())
    a = SIGMA_CANONICAL @ (lam - cmat.imag)
    dn = SIGMA_CANONICAL @ cmat.real @ SIGMA_CANONICAL.T
    return a, dn
