"""Model parameters, state containers, and the constant matrices of the
two-ensemble collective-spin model.

Conventions used throughout the package:

* Collective operators are normalized as S_a = (1/sqrt(2)) * sum_m sigma_a,
  so [S_x, S_y] = i*sqrt(2)*S_z and intensive magnetizations
  m_a = <S_a>/N live in [-1/sqrt(2), 1/sqrt(2)].
* The 6-component index order is fixed repo-wide as
  [x1, y1, z1, x2, y2, z2].
* kappa sets the rate unit; all frequencies are quoted in units of kappa.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

SQRT2 = math.sqrt(2.0)

#: Largest allowed per-ensemble Bloch norm (1/sqrt(2)), plus slack used by
#: state validation.
BLOCH_RADIUS = 1.0 / SQRT2
NORM_TOL = 1e-9


class ConfigError(ValueError):
    """Raised for malformed parameter sets or config documents."""


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the coupled-ensemble model.

    The detuning is derived (``delta = omega_at - omega_las``) and never
    stored, which keeps the three frequencies consistent by construction.
    """

    omega1: float = 0.0
    omega2: float = 0.0
    j_xy: float = 0.0
    j_z: float = 0.0
    kappa: float = 1.0
    n1: float = 0.0
    n2: float = 0.0
    nu: float = 1.0
    omega_at: float = 1.0
    omega_las: float = 1.0

    def __post_init__(self):
        for f_ in fields(self):
            v = getattr(self, f_.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"parameter {f_.name!r} must be finite, got {v!r}")
            object.__setattr__(self, f_.name, float(v))
        if self.kappa <= 0.0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        if self.n1 < 0.0 or self.n2 < 0.0:
            raise ConfigError("occupation numbers n1, n2 must be >= 0")

    @property
    def delta(self) -> float:
        """Detuning between the atomic splitting and the laser frequency."""
        return self.omega_at - self.omega_las

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Build parameters from a JSON-style dict.

        Keys must exactly match field names; ``delta`` may be given instead
        of ``omega_las`` (but not both).  Unknown keys are an error so typos
        in sweep configs fail loudly.
        """
        if not isinstance(data, dict):
            raise ConfigError(f"parameter block must be an object, got {type(data).__name__}")
        known = {f_.name for f_ in fields(cls)}
        d = dict(data)
        delta = d.pop("delta", None)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        if delta is not None:
            if "omega_las" in d:
                raise ConfigError("give either 'delta' or 'omega_las', not both")
            omega_at = d.get("omega_at", 1.0)
            d["omega_las"] = omega_at - float(delta)
        elif "omega_las" not in d and "omega_at" in d:
            # default to resonance when only the bare splitting is given
            d["omega_las"] = d["omega_at"]
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ModelParams":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f_.name: getattr(self, f_.name) for f_ in fields(self)}

    def replace(self, **kw) -> "ModelParams":
        d = self.to_dict()
        if "delta" in kw:
            d["omega_las"] = d.get("omega_at", self.omega_at) - kw.pop("delta")
        # a replaced omega_at shifts omega_las along unless given explicitly,
        # so that a configured detuning survives parameter sweeps
        if "omega_at" in kw and "omega_las" not in kw:
            d["omega_las"] = kw["omega_at"] - self.delta
        d.update(kw)
        return ModelParams(**d)


@dataclass(frozen=True)
class MeanFieldState:
    """Intensive magnetizations of both ensembles, ordered [x1,y1,z1,x2,y2,z2]."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (6,):
            raise ValueError(f"mean-field state must have 6 components, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("mean-field state has non-finite components")
        for j in (0, 1):
            r = float(np.linalg.norm(m[3 * j:3 * j + 3]))
            if r > BLOCH_RADIUS + 1e-6:
                raise ValueError(
                    f"ensemble {j + 1} Bloch norm {r:.6g} exceeds 1/sqrt(2)"
                )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def ground(cls) -> "MeanFieldState":
        """Both ensembles fully polarized down (all atoms in the ground state)."""
        return cls(np.array([0.0, 0.0, -BLOCH_RADIUS, 0.0, 0.0, -BLOCH_RADIUS]))

    @classmethod
    def from_blocks(cls, m1, m2) -> "MeanFieldState":
        return cls(np.concatenate([np.asarray(m1, float), np.asarray(m2, float)]))

    def block(self, j: int) -> np.ndarray:
        """3-vector of ensemble j (j = 1 or 2)."""
        if j not in (1, 2):
            raise ValueError("ensemble index must be 1 or 2")
        return self.m[3 * (j - 1):3 * (j - 1) + 3]

    def norms(self) -> tuple[float, float]:
        return (float(np.linalg.norm(self.m[:3])), float(np.linalg.norm(self.m[3:])))


@dataclass(frozen=True)
class CovarianceState:
    """Symmetric 6x6 matrix of fluctuation second moments G_jk = <{F_j,F_k}>/2."""

    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape != (6, 6):
            raise ValueError(f"covariance must be 6x6, got {g.shape}")
        if not np.allclose(g, g.T, atol=1e-10):
            raise ValueError("covariance matrix is not symmetric")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


@dataclass(frozen=True)
class SimGrid:
    """Time window and integrator tolerances; dt_out is the uniform output step."""

    t0: float = 0.0
    t1: float = 100.0
    dt_out: float = 0.01
    rtol: float = 1e-10
    atol: float = 1e-10

    def __post_init__(self):
        if not (self.t1 > self.t0):
            raise ConfigError(f"need t1 > t0, got [{self.t0}, {self.t1}]")
        if self.dt_out <= 0:
            raise ConfigError("dt_out must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ConfigError("integrator tolerances must be positive")

    def times(self) -> np.ndarray:
        """Uniform output instants t0, t0+dt_out, ..., up through t1."""
        n = int(math.floor((self.t1 - self.t0) / self.dt_out + 1e-9)) + 1
        return self.t0 + self.dt_out * np.arange(n)

    @classmethod
    def from_dict(cls, data: dict) -> "SimGrid":
        if not isinstance(data, dict):
            raise ConfigError("grid block must be an object")
        known = {f_.name for f_ in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {f_.name: getattr(self, f_.name) for f_ in fields(self)}


# ---------------------------------------------------------------------------
# constant / state-dependent matrices
# ---------------------------------------------------------------------------

def coupling_matrix(params: ModelParams) -> np.ndarray:
    """Symmetric 6x6 quadratic-coupling matrix M.

    The interaction Hamiltonian is sum_jk (M_jk/N) S_j S_k; the 1/2 on each
    entry compensates the double counting of the symmetric placement.
    """
    m = np.zeros((6, 6))
    m[0, 3] = m[3, 0] = 0.5 * params.j_xy
    m[1, 4] = m[4, 1] = 0.5 * params.j_xy
    m[2, 5] = m[5, 2] = 0.5 * params.j_z
    return m


def field_vector(params: ModelParams) -> np.ndarray:
    """Linear drive/detuning vector h = [Omega1, 0, delta, Omega2, 0, delta]."""
    d = params.delta
    return np.array([params.omega1, 0.0, d, params.omega2, 0.0, d])


def dissipation_matrices(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal dissipation matrices (A, B).

    A^(j) = kappa*(2 n_j + 1) * diag(1, 1, 0) carries the temperature;
    B^(j) = kappa * [[0,-1,0],[1,0,0],[0,0,0]] is the temperature-free part
    that survives in the mean-field equations.
    """
    k = params.kappa
    a = np.zeros((6, 6))
    b = np.zeros((6, 6))
    for j, n in ((0, params.n1), (1, params.n2)):
        i = 3 * j
        a[i, i] = a[i + 1, i + 1] = k * (2.0 * n + 1.0)
        b[i, i + 1] = -k
        b[i + 1, i] = k
    return a, b


def _hat3(v) -> np.ndarray:
    """3x3 antisymmetric matrix with (hat v)_ab = sum_c eps_abc v_c."""
    return np.array([
        [0.0, v[2], -v[1]],
        [-v[2], 0.0, v[0]],
        [v[1], -v[0], 0.0],
    ])


def spin_symplectic(m) -> np.ndarray:
    """Block-diagonal symplectic form of the fluctuations at mean field ``m``.

    s_ab^(j) = sqrt(2) * sum_c eps_abc m_c^(j); accepts a MeanFieldState or a
    plain 6-array and is linear in m.
    """
    mv = m.m if isinstance(m, MeanFieldState) else np.asarray(m, float)
    s = np.zeros((6, 6))
    s[:3, :3] = SQRT2 * _hat3(mv[:3])
    s[3:, 3:] = SQRT2 * _hat3(mv[3:])
    return s


# the spec-level name: the symplectic form evaluated on a state
symplectic_of_state = spin_symplectic
