"""Entropies, mutual information, one-way discord, classical correlations,
and logarithmic negativity of a two-mode Gaussian state.

All functions take the 4x4 covariance ``sigma2`` on (x1, p1, x2, p2) in the
normalization where the vacuum is the identity (sigma2 = 2*Gbar restricted
to the bosonic directions).  Natural logarithms throughout, so entropies are
in nats and the negativity uses -ln.

Physicality handling: symplectic eigenvalues and block determinants may dip
below their bounds by integration noise; violations within ``CLAMP_TOL`` are
clamped silently, anything larger raises ``PhysicalityError`` with
diagnostics rather than masquerading as negative entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: clamp window below the physical bounds (integration noise allowance)
CLAMP_TOL = 1e-9


class PhysicalityError(ValueError):
    """Covariance violates a physicality bound beyond tolerance."""


class BranchSingularityError(ZeroDivisionError):
    """Measured-mode purity c_beta = 1 with correlations present; the first
    discord branch divides by (c_beta - 1)^2."""


def symplectic_invariants(sigma2: np.ndarray) -> tuple[float, float, float, float, float]:
    """(c_alpha, c_beta, c_gamma, c_delta, Delta): determinants of the 2x2
    blocks, of the full matrix, and Delta = c_alpha + c_beta + 2 c_gamma."""
    s = np.asarray(sigma2, float)
    if s.shape != (4, 4):
        raise ValueError(f"two-mode covariance must be 4x4, got {s.shape}")
    c_a = float(np.linalg.det(s[:2, :2]))
    c_b = float(np.linalg.det(s[2:, 2:]))
    c_g = float(np.linalg.det(s[:2, 2:]))
    c_d = float(np.linalg.det(s))
    return c_a, c_b, c_g, c_d, c_a + c_b + 2.0 * c_g


def _eigs_from_invariants(delta: float, c_d: float, clamp_tol: float) -> tuple[float, float]:
    disc = delta * delta - 4.0 * c_d
    if disc < 0.0:
        if disc < -clamp_tol * max(1.0, delta * delta):
            raise PhysicalityError(
                f"discriminant {disc:.3e} strongly negative (Delta={delta:.6g}, "
                f"det={c_d:.6g}); covariance is not a physical two-mode state")
        disc = 0.0
    root = math.sqrt(disc)
    lp = math.sqrt(max(0.0, 0.5 * (delta + root)))
    lm = math.sqrt(max(0.0, 0.5 * (delta - root)))
    return lp, lm


def symplectic_eigenvalues(sigma2: np.ndarray,
                           clamp_tol: float = CLAMP_TOL) -> tuple[float, float]:
    """(lambda_+, lambda_-) with lambda_+ >= lambda_- >= 0."""
    _, _, _, c_d, delta = symplectic_invariants(sigma2)
    return _eigs_from_invariants(delta, c_d, clamp_tol)


def entropy_f(x: float, clamp_tol: float = CLAMP_TOL) -> float:
    """Thermal-mode entropy function; f(1) = 0 with the 0 log 0 convention."""
    if x < 1.0 - clamp_tol:
        raise PhysicalityError(f"entropy argument {x!r} below 1 beyond tolerance")
    if x <= 1.0:
        return 0.0
    a = 0.5 * (x + 1.0)
    b = 0.5 * (x - 1.0)
    return a * math.log(a) - (b * math.log(b) if b > 0.0 else 0.0)


def check_physical(sigma2: np.ndarray, clamp_tol: float = CLAMP_TOL) -> None:
    """Raise unless c_alpha, c_beta >= 1 and lambda_+- >= 1 within tolerance."""
    c_a, c_b, _, c_d, delta = symplectic_invariants(sigma2)
    lp, lm = _eigs_from_invariants(delta, c_d, clamp_tol)
    for name, val in (("c_alpha", c_a), ("c_beta", c_b),
                      ("lambda_+", lp), ("lambda_-", lm)):
        if val < 1.0 - clamp_tol * max(1.0, abs(val)):
            raise PhysicalityError(f"{name} = {val:.12g} < 1; unphysical covariance "
                                   f"(invariants: ca={c_a:.6g} cb={c_b:.6g} det={c_d:.6g})")


def entropies(sigma2: np.ndarray, clamp_tol: float = CLAMP_TOL
              ) -> tuple[float, float, float]:
    """(S_total, S_A, S_B) in nats."""
    c_a, c_b, _, c_d, delta = symplectic_invariants(sigma2)
    lp, lm = _eigs_from_invariants(delta, c_d, clamp_tol)
    s_tot = entropy_f(lp, clamp_tol) + entropy_f(lm, clamp_tol)
    return (s_tot,
            entropy_f(math.sqrt(max(c_a, 0.0)), clamp_tol),
            entropy_f(math.sqrt(max(c_b, 0.0)), clamp_tol))


@dataclass(frozen=True)
class DiscordDetail:
    discord: float
    classical: float
    e_min: float
    branch: int
    #: both branches evaluated near the selector boundary disagreed by more
    #: than 1e-8 (known numerical trouble spot)
    boundary_flag: bool


def _e_min(c_a, c_b, c_g, c_d) -> tuple[float, int, bool]:
    lhs = (c_d - c_a * c_b) ** 2
    rhs = (1.0 + c_b) * (c_g * c_g) * (c_a + c_d)
    scale = max(1.0, abs(lhs), abs(rhs))

    def branch1():
        den = (c_b - 1.0) ** 2
        if den == 0.0:
            raise BranchSingularityError(
                "c_beta = 1 exactly with c_gamma != 0: branch-1 discord formula "
                "divides by (c_beta - 1)^2")
        rad = c_g * c_g + (c_b - 1.0) * (c_d - c_a)
        return (2.0 * c_g * c_g + (c_b - 1.0) * (c_d - c_a)
                + 2.0 * abs(c_g) * math.sqrt(max(rad, 0.0))) / den

    def branch2():
        rad = (c_g ** 4 + (c_d - c_a * c_b) ** 2
               - 2.0 * c_g * c_g * (c_a * c_b + c_d))
        return (c_a * c_b - c_g * c_g + c_d
                - math.sqrt(max(rad, 0.0))) / (2.0 * c_b)

    near_boundary = abs(lhs - rhs) <= 1e-8 * scale
    flag = False
    if near_boundary and c_b != 1.0:
        e1, e2 = branch1(), branch2()
        flag = abs(e1 - e2) > 1e-8 * max(1.0, abs(e1), abs(e2))
    if lhs <= rhs:
        if c_g == 0.0 and c_b == 1.0:
            # pure uncorrelated measured mode: measurement reveals nothing
            return c_a, 1, flag
        return branch1(), 1, flag
    return branch2(), 2, flag


def discord_detail(sigma2: np.ndarray, clamp_tol: float = CLAMP_TOL) -> DiscordDetail:
    """One-way quantum discord and classical correlations with branch
    diagnostics; measurements act on mode B."""
    c_a, c_b, c_g, c_d, delta = symplectic_invariants(sigma2)
    lp, lm = _eigs_from_invariants(delta, c_d, clamp_tol)
    if c_g == 0.0:
        # product state: E_min = c_alpha, both correlations vanish exactly
        return DiscordDetail(0.0, 0.0, c_a, 1, False)
    e_min, branch, flag = _e_min(c_a, c_b, c_g, c_d)
    e_min = max(e_min, 1.0)
    sq = math.sqrt
    d = (entropy_f(sq(max(c_b, 1.0)), clamp_tol) - entropy_f(lp, clamp_tol)
         - entropy_f(lm, clamp_tol) + entropy_f(sq(e_min), clamp_tol))
    j = entropy_f(sq(max(c_a, 1.0)), clamp_tol) - entropy_f(sq(e_min), clamp_tol)
    if d < -1e-10 or j < -1e-10:
        raise PhysicalityError(f"negative correlation measure (D={d:.3e}, J={j:.3e})")
    return DiscordDetail(max(d, 0.0), max(j, 0.0), e_min, branch, flag)


def discord_and_classical(sigma2: np.ndarray,
                          clamp_tol: float = CLAMP_TOL) -> tuple[float, float]:
    det = discord_detail(sigma2, clamp_tol)
    return det.discord, det.classical


def log_negativity(sigma2: np.ndarray, clamp_tol: float = CLAMP_TOL) -> float:
    """max(0, -ln lambda-tilde_-) from the partial transpose (c_gamma -> -c_gamma)."""
    c_a, c_b, c_g, c_d, _ = symplectic_invariants(sigma2)
    delta_pt = c_a + c_b - 2.0 * c_g
    _, lm = _eigs_from_invariants(delta_pt, c_d, clamp_tol)
    if lm <= 0.0:
        raise PhysicalityError("partially transposed covariance degenerate")
    return max(0.0, -math.log(lm))


@dataclass(frozen=True)
class CorrelationReport:
    """All Gaussian correlation measures of one two-mode covariance."""

    entropy_total: float
    entropy_a: float
    entropy_b: float
    mutual_information: float
    discord: float
    classical: float
    negativity: float
    boundary_flag: bool = False

    def as_row(self) -> list[float]:
        return [self.entropy_total, self.entropy_a, self.entropy_b,
                self.mutual_information, self.discord, self.classical,
                self.negativity]


#: CSV column names matching CorrelationReport.as_row()
REPORT_COLUMNS = ["S", "SA", "SB", "I", "D", "Jcl", "N"]


def correlation_report(sigma2: np.ndarray,
                       clamp_tol: float = CLAMP_TOL) -> CorrelationReport:
    s_tot, s_a, s_b = entropies(sigma2, clamp_tol)
    det = discord_detail(sigma2, clamp_tol)
    return CorrelationReport(
        entropy_total=s_tot,
        entropy_a=s_a,
        entropy_b=s_b,
        mutual_information=s_a + s_b - s_tot,
        discord=det.discord,
        classical=det.classical,
        negativity=log_negativity(sigma2, clamp_tol),
        boundary_flag=det.boundary_flag,
    )
