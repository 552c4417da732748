import json

import numpy as np
import pytest

from tcforge.model import (
    BLOCH_RADIUS,
    ConfigError,
    MeanFieldState,
    ModelParams,
    SimGrid,
    coupling_matrix,
    dissipation_matrices,
    field_vector,
    spin_symplectic,
    symplectic_of_state,
)

SQ2 = np.sqrt(2.0)


class TestModelParams:
    def test_delta_derived(self):
        p = ModelParams(omega_at=1.0, omega_las=0.7)
        assert p.delta == pytest.approx(0.3)

    def test_defaults_resonant(self):
        assert ModelParams().delta == 0.0

    def test_invalid_kappa(self):
        with pytest.raises(ConfigError):
            ModelParams(kappa=0.0)
        with pytest.raises(ConfigError):
            ModelParams(kappa=-1.0)

    def test_negative_occupation_rejected(self):
        with pytest.raises(ConfigError):
            ModelParams(n1=-0.1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ConfigError):
            ModelParams(omega1=float("nan"))

    def test_from_dict_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown parameter keys"):
            ModelParams.from_dict({"omega1": 1.0, "omgea2": 2.0})

    def test_from_dict_delta(self):
        p = ModelParams.from_dict({"omega_at": 1.0, "delta": 0.25})
        assert p.omega_las == pytest.approx(0.75)
        assert p.delta == pytest.approx(0.25)

    def test_from_dict_delta_and_omega_las_conflict(self):
        with pytest.raises(ConfigError):
            ModelParams.from_dict({"delta": 0.1, "omega_las": 1.0})

    def test_json_roundtrip(self, tmp_path):
        p = ModelParams(omega1=2.0, j_xy=1.5, n1=0.3)
        f = tmp_path / "p.json"
        f.write_text(json.dumps(p.to_dict()))
        assert ModelParams.from_json(f) == p

    def test_replace_keeps_detuning(self):
        p = ModelParams.from_dict({"omega_at": 1.0, "delta": 0.25})
        q = p.replace(omega_at=2.0)
        assert q.delta == pytest.approx(0.25)


class TestStates:
    def test_ground(self):
        g = MeanFieldState.ground()
        assert g.m[2] == pytest.approx(-BLOCH_RADIUS)
        assert g.norms() == pytest.approx((BLOCH_RADIUS, BLOCH_RADIUS))

    def test_norm_validated(self):
        with pytest.raises(ValueError, match="Bloch norm"):
            MeanFieldState(np.array([1.0, 0, 0, 0, 0, 0]))

    def test_immutable(self):
        g = MeanFieldState.ground()
        with pytest.raises(ValueError):
            g.m[0] = 1.0

    def test_blocks(self):
        s = MeanFieldState.from_blocks([0.1, 0.2, 0.3], [0.0, 0.0, -0.5])
        assert s.block(2)[2] == -0.5

    def test_grid_validation(self):
        with pytest.raises(ConfigError):
            SimGrid(t0=1.0, t1=0.0)
        with pytest.raises(ConfigError):
            SimGrid(dt_out=-1.0)

    def test_grid_times_uniform(self):
        t = SimGrid(0.0, 1.0, 0.25).times()
        assert t == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


class TestCouplingMatrix:
    def test_zero_coupling(self):
        m = coupling_matrix(ModelParams(j_xy=0.0, j_z=0.0))
        assert np.all(m == 0.0)

    def test_entries(self):
        # direct transcription: J/2 on the xy cross entries, J_z/2 on zz
        m = coupling_matrix(ModelParams(j_xy=2.0, j_z=1.0))
        expect = np.zeros((6, 6))
        expect[0, 3] = expect[3, 0] = 1.0
        expect[1, 4] = expect[4, 1] = 1.0
        expect[2, 5] = expect[5, 2] = 0.5
        assert np.array_equal(m, expect)
        assert np.count_nonzero(m) == 6

    def test_symmetric(self, rng):
        for _ in range(5):
            m = coupling_matrix(ModelParams(j_xy=rng.normal(), j_z=rng.normal()))
            assert np.array_equal(m, m.T)

    def test_pure_function(self):
        p = ModelParams(j_xy=1.3, j_z=-0.4)
        assert np.array_equal(coupling_matrix(p), coupling_matrix(p))


class TestFieldVector:
    def test_zero(self):
        assert np.all(field_vector(ModelParams()) == 0.0)

    def test_fig2_drive(self):
        # both ensembles driven at 2*kappa, resonant
        h = field_vector(ModelParams(omega1=2.0, omega2=2.0))
        assert h == pytest.approx([2, 0, 0, 2, 0, 0])

    def test_charger_only(self):
        h = field_vector(ModelParams(omega1=2.5, omega2=0.0))
        assert h == pytest.approx([2.5, 0, 0, 0, 0, 0])

    def test_detuning_slots(self):
        h = field_vector(ModelParams(omega_at=1.0, omega_las=0.6))
        assert h[2] == pytest.approx(0.4)
        assert h[5] == pytest.approx(0.4)


class TestDissipationMatrices:
    def test_zero_temperature(self):
        a, _ = dissipation_matrices(ModelParams(kappa=1.0))
        assert np.allclose(a, np.diag([1, 1, 0, 1, 1, 0]))

    def test_hot_first_bath(self):
        a, _ = dissipation_matrices(ModelParams(kappa=1.0, n1=1.0))
        assert np.allclose(a[:3, :3], np.diag([3, 3, 0]))
        assert np.allclose(a[3:, 3:], np.diag([1, 1, 0]))

    def test_b_antisymmetric_blocks(self, rng):
        for _ in range(5):
            _, b = dissipation_matrices(ModelParams(kappa=rng.uniform(0.1, 3)))
            assert np.allclose(b + b.T, 0.0)
            assert np.all(b[:3, 3:] == 0.0)

    def test_a_psd(self):
        a, _ = dissipation_matrices(ModelParams(kappa=0.7, n1=0.4, n2=2.0))
        assert np.all(np.linalg.eigvalsh(a) >= 0.0)


class TestSymplectic:
    def test_ground_block(self):
        s = symplectic_of_state(MeanFieldState.ground())
        blk = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], float)
        assert np.allclose(s[:3, :3], blk)
        assert np.allclose(s[3:, 3:], blk)
        assert np.all(s[:3, 3:] == 0.0)

    def test_zero_state(self):
        assert np.all(spin_symplectic(np.zeros(6)) == 0.0)

    def test_antisymmetric(self, rng):
        for _ in range(10):
            m = rng.normal(size=6) * 0.2
            s = spin_symplectic(m)
            assert np.allclose(s, -s.T)

    def test_linear(self, rng):
        m = rng.normal(size=6) * 0.2
        lam = 1.7
        assert np.allclose(spin_symplectic(lam * m), lam * spin_symplectic(m))

    def test_cyclic_entry(self):
        # s_xy = sqrt(2) m_z and cyclic permutations
        m = np.array([0.1, 0.2, 0.3, 0.0, 0.0, 0.0])
        s = spin_symplectic(m)
        assert s[0, 1] == pytest.approx(SQ2 * 0.3)
        assert s[1, 2] == pytest.approx(SQ2 * 0.1)
        assert s[2, 0] == pytest.approx(SQ2 * 0.2)
