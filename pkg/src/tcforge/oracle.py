"""Exact finite-N Lindblad evolution of the two coupled collective spins.

The Hamiltonian and all jump operators are collective, so the permutation
symmetric (spin-N/2) sector of each ensemble is invariant and the full
dynamics lives on a (N+1)^2-dimensional Hilbert space.  This module is the
brute-force ground truth used to verify the mean-field, fluctuation, and
heat-current formulas at moderate N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .meanfield import IntegrationError
from .model import SQRT2, ModelParams, SimGrid

#: default cap on the per-ensemble atom number (memory / runtime guard)
N_CAP = 24


class ResourceCapError(RuntimeError):
    """Requested ensemble size exceeds the configured memory cap."""


class PositivityError(RuntimeError):
    """Evolved density matrix lost positivity beyond tolerance."""


def spin_matrices(n_atoms: int) -> dict[str, np.ndarray]:
    """Dense spin-(N/2) matrices in the collective normalization
    S_a = sqrt(2) * J_a, so that [S_x, S_y] = i*sqrt(2)*S_z."""
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    j = 0.5 * n_atoms
    mvals = j - np.arange(n_atoms + 1)          # j, j-1, ..., -j
    jz = np.diag(mvals)
    # <j, m+1 | J+ | j, m> = sqrt(j(j+1) - m(m+1)); basis ordered by falling m
    cp = np.sqrt(j * (j + 1.0) - mvals[1:] * (mvals[1:] + 1.0))
    jp = np.zeros((n_atoms + 1, n_atoms + 1))
    jp[np.arange(n_atoms), np.arange(1, n_atoms + 1)] = cp
    jm = jp.T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    return {
        "sx": SQRT2 * jx.astype(complex),
        "sy": SQRT2 * jy,
        "sz": SQRT2 * jz.astype(complex),
        "sp": SQRT2 * jp.astype(complex),
        "sm": SQRT2 * jm.astype(complex),
    }


@dataclass(frozen=True)
class CollectiveOps:
    """Two-ensemble operator set on the product of symmetric sectors."""

    n_atoms: int
    ops1: dict[str, np.ndarray]
    ops2: dict[str, np.ndarray]

    @classmethod
    def build(cls, n_atoms: int, n_cap: int = N_CAP) -> "CollectiveOps":
        if n_atoms > n_cap:
            raise ResourceCapError(f"N = {n_atoms} exceeds the cap {n_cap}")
        single = spin_matrices(n_atoms)
        eye = np.eye(n_atoms + 1, dtype=complex)
        ops1 = {k: np.kron(v, eye) for k, v in single.items()}
        ops2 = {k: np.kron(eye, v) for k, v in single.items()}
        # commutation check of the collective normalization
        comm = ops1["sx"] @ ops1["sy"] - ops1["sy"] @ ops1["sx"]
        if not np.allclose(comm, 1j * SQRT2 * ops1["sz"], atol=1e-10):
            raise AssertionError("collective commutation relations violated")
        return cls(n_atoms, ops1, ops2)

    def ops(self, j: int) -> dict[str, np.ndarray]:
        return self.ops1 if j == 1 else self.ops2

    @property
    def dim(self) -> int:
        return (self.n_atoms + 1) ** 2


def hamiltonian(ops: CollectiveOps, p: ModelParams) -> np.ndarray:
    """Rotating-frame Hamiltonian: drives, detunings, and the collective
    exchange/Ising couplings scaled by 1/N."""
    n = ops.n_atoms
    o1, o2 = ops.ops1, ops.ops2
    h = (p.omega1 / SQRT2) * o1["sx"] + (p.omega2 / SQRT2) * o2["sx"]
    h = h + (p.delta / SQRT2) * (o1["sz"] + o2["sz"])
    h = h + (p.j_xy / n) * (o1["sx"] @ o2["sx"] + o1["sy"] @ o2["sy"])
    h = h + (p.j_z / n) * (o1["sz"] @ o2["sz"])
    return h


def jump_operators(ops: CollectiveOps, p: ModelParams) -> list[np.ndarray]:
    """Collective raising/lowering jumps, sqrt(kappa n_j / N) S+ and
    sqrt(kappa (1+n_j) / N) S-."""
    n = ops.n_atoms
    out = []
    for j, occ in ((1, p.n1), (2, p.n2)):
        o = ops.ops(j)
        out.append(np.sqrt(p.kappa * (1.0 + occ) / n) * o["sm"])
        if occ > 0.0:
            out.append(np.sqrt(p.kappa * occ / n) * o["sp"])
    return out


def build_liouvillian(p: ModelParams, n_atoms: int, n_cap: int = N_CAP):
    """Matrix-free action rho -> L[rho] of the master equation.

    Returns (apply, ops); the superoperator is never materialized, each call
    costs a handful of dense dim^3 multiplications.
    """
    ops = CollectiveOps.build(n_atoms, n_cap)
    h = hamiltonian(ops, p)
    jumps = jump_operators(ops, p)
    jump_pairs = [(l_op, l_op.conj().T @ l_op) for l_op in jumps]

    def apply(rho: np.ndarray) -> np.ndarray:
        drho = -1j * (h @ rho - rho @ h)
        for l_op, ldl in jump_pairs:
            drho += l_op @ rho @ l_op.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        return drho

    return apply, ops


def ground_state(n_atoms: int) -> np.ndarray:
    """Both ensembles fully polarized down (projector, trace one)."""
    dim = (n_atoms + 1) ** 2
    rho = np.zeros((dim, dim), dtype=complex)
    rho[dim - 1, dim - 1] = 1.0
    return rho


@dataclass(frozen=True)
class OracleTrajectory:
    times: np.ndarray
    rhos: np.ndarray                 # (n, dim, dim) complex
    params: ModelParams
    n_atoms: int


def evolve(rho0: np.ndarray, p: ModelParams, n_atoms: int, grid: SimGrid,
           n_cap: int = N_CAP, check_positivity: bool = True) -> OracleTrajectory:
    """Adaptive integration of the master equation in the symmetric sector.

    Hermiticity is enforced by symmetrization at each output sample; trace
    preservation and approximate positivity are checked and violations abort.
    """
    lindblad, ops = build_liouvillian(p, n_atoms, n_cap)
    dim = ops.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 must be {dim}x{dim} for N = {n_atoms}")

    def rhs(_t, y):
        return lindblad(y.reshape(dim, dim)).ravel()

    times = grid.times()
    sol = solve_ivp(rhs, (grid.t0, grid.t1), rho0.ravel(), method="DOP853",
                    t_eval=times, rtol=grid.rtol, atol=grid.atol)
    if not sol.success:
        raise IntegrationError(f"oracle integration failed: {sol.message}")
    rhos = sol.y.T.reshape(-1, dim, dim)
    rhos = 0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2)))
    traces = np.einsum("tii->t", rhos).real
    if np.max(np.abs(traces - 1.0)) > 1e-8:
        raise IntegrationError(
            f"trace drifted by {np.max(np.abs(traces - 1.0)):.2e}; tighten tolerances")
    if check_positivity:
        w = np.linalg.eigvalsh(rhos[-1])
        if w.min() < -1e-8:
            raise PositivityError(f"final state has eigenvalue {w.min():.2e}")
    return OracleTrajectory(times, rhos, p, n_atoms)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

def _expect(rho: np.ndarray, op: np.ndarray) -> float:
    return float(np.trace(op @ rho).real)


def observables(rho: np.ndarray, p: ModelParams, n_atoms: int,
                ops: CollectiveOps | None = None):
    """Intensive magnetizations, N-rescaled connected covariance, and the
    exact heat currents of both environments.

    Returns (m, g, qdot) with m the 6-vector <S_a^(j)>/N, g the 6x6 matrix
    N * (<S_a S_b>_sym / N^2 - m_a m_b), and qdot the two heat rates
    -(kappa nu / N) <S_x^2 + S_y^2 + sqrt(2) (2n_j+1) S_z>.
    """
    if ops is None:
        ops = CollectiveOps.build(n_atoms)
    n = float(n_atoms)
    svecs = [ops.ops1["sx"], ops.ops1["sy"], ops.ops1["sz"],
             ops.ops2["sx"], ops.ops2["sy"], ops.ops2["sz"]]
    m = np.array([_expect(rho, s) for s in svecs]) / n
    g = np.empty((6, 6))
    for a in range(6):
        for b in range(a, 6):
            sym = 0.5 * (svecs[a] @ svecs[b] + svecs[b] @ svecs[a])
            g[a, b] = g[b, a] = (_expect(rho, sym) / n ** 2 - m[a] * m[b]) * n
    qdot = []
    for j, occ in ((1, p.n1), (2, p.n2)):
        o = ops.ops(j)
        q_op = o["sx"] @ o["sx"] + o["sy"] @ o["sy"] + SQRT2 * (2.0 * occ + 1.0) * o["sz"]
        qdot.append(-(p.kappa * p.nu / n) * _expect(rho, q_op))
    return m, g, np.array(qdot)


def observable_series(traj: OracleTrajectory):
    """(m, g, qdot) arrays along an oracle trajectory."""
    ops = CollectiveOps.build(traj.n_atoms)
    ms = np.empty((traj.times.size, 6))
    gs = np.empty((traj.times.size, 6, 6))
    qs = np.empty((traj.times.size, 2))
    for i, rho in enumerate(traj.rhos):
        ms[i], gs[i], qs[i] = observables(rho, traj.params, traj.n_atoms, ops)
    return ms, gs, qs


# ---------------------------------------------------------------------------
# convergence vs the mean-field / fluctuation modules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    n_list: list[int]
    mz_errors: np.ndarray            # sup-norm error of m_z1(t) per N
    cov_errors: np.ndarray           # sup-norm error of the covariance per N
    monotone: bool
    fit_coefficient: float           # a in err ~ a/N + b
    fit_offset: float
    fit_r2: float


def convergence_report(p: ModelParams, n_list, grid: SimGrid,
                       n_cap: int = N_CAP) -> ConvergenceReport:
    """Exact-vs-mean-field error table over ascending ensemble sizes.

    Compares m_z(t) with the mean-field trajectory and the N-rescaled
    connected correlations with the Lyapunov covariance, both from the
    all-down initial state, and fits the magnetization error to a/N + b.
    """
    from .fluctuations import initial_covariance_ground, integrate_joint
    from .model import MeanFieldState

    n_list = list(n_list)
    if sorted(n_list) != n_list:
        raise ValueError("n_list must be ascending")
    joint = integrate_joint(MeanFieldState.ground(), initial_covariance_ground(),
                            p, grid, with_rotation=False)
    mz_err = np.empty(len(n_list))
    cov_err = np.empty(len(n_list))
    for i, n in enumerate(n_list):
        tr = evolve(ground_state(n), p, n, grid, n_cap=n_cap)
        ms, gs, _ = observable_series(tr)
        mz_err[i] = np.max(np.abs(ms[:, 2] - joint.states[:, 2]))
        cov_err[i] = np.max(np.abs(gs - joint.covariances))
    x = 1.0 / np.asarray(n_list, float)
    a, b = np.polyfit(x, mz_err, 1)
    resid = mz_err - (a * x + b)
    ss_tot = float(np.sum((mz_err - mz_err.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    mono = bool(np.all(np.diff(mz_err) < 0))
    return ConvergenceReport(n_list, mz_err, cov_err, mono, float(a), float(b), float(r2))
