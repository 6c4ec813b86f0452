import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from yieldlab.bv1d import (
    DisplacementField1D,
    brute_force_oracle_1d,
    bv_norm_1d,
    energy_relaxed_1d,
    energy_sharp_1d,
    minimize_relaxed_1d,
    sweep_min1d,
)
from yieldlab.errors import DomainError, OracleTooLarge
from yieldlab.laws import BulkLaw, CohesiveLaw, build_envelope

F2 = BulkLaw.power(2)
F3 = BulkLaw.power(3)
G_EXP = CohesiveLaw.exponential()
PAIRS = [(F, G) for F in (F2, F3) for G in (G_EXP, CohesiveLaw.parabola(0.4), CohesiveLaw.cusp())]


def pair_id(pair):
    return f"{pair[0].label}-{pair[1].label}"


class TestDisplacementField:
    def test_jump_snapped_to_cell_midpoint(self):
        u = DisplacementField1D(1.0, np.zeros(5), jumps=((0.3, 1.0),))
        assert u.jumps[0][0] == pytest.approx(0.375)

    def test_jump_outside_domain(self):
        with pytest.raises(DomainError):
            DisplacementField1D(1.0, np.zeros(5), jumps=((1.0, 1.0),))

    def test_two_jumps_in_one_cell(self):
        with pytest.raises(DomainError):
            DisplacementField1D(1.0, np.zeros(5), jumps=((0.3, 1.0), (0.4, 1.0)))

    def test_boundary_identity(self):
        u = DisplacementField1D.with_single_jump(2.0, 0.3, 0.7)
        ac = np.sum(u.slopes) * u.h
        assert u.boundary_displacement() == pytest.approx(ac + 0.7, abs=1e-14)
        assert u.boundary_displacement() == pytest.approx(1.3, abs=1e-14)


class TestEnergies:
    def test_sharp_examples(self):
        u = DisplacementField1D.affine(1.0, 0.5)
        assert energy_sharp_1d(u, F2, G_EXP).total == pytest.approx(0.125, abs=1e-15)
        v = DisplacementField1D.with_single_jump(1.0, 0.5, 1.0)
        assert energy_sharp_1d(v, F2, G_EXP).total == pytest.approx(0.125 + 0.63212, abs=1e-5)
        assert energy_sharp_1d(DisplacementField1D.affine(1.0, 0.0), F2, G_EXP).total == 0.0

    def test_sharp_rejects_cantor(self):
        u = DisplacementField1D(1.0, np.zeros(3), cantor_mass=0.1)
        with pytest.raises(DomainError):
            energy_sharp_1d(u, F2, G_EXP)

    def test_relaxed_examples(self):
        env = build_envelope(F2, G_EXP)
        assert energy_relaxed_1d(DisplacementField1D.affine(1.0, 2.0), env, G_EXP).bulk == pytest.approx(1.5)
        assert energy_relaxed_1d(DisplacementField1D.affine(1.0, 0.5), env, G_EXP).bulk == pytest.approx(0.125)
        u = DisplacementField1D(1.0, np.zeros(9), cantor_mass=0.3)
        e = energy_relaxed_1d(u, env, G_EXP)
        assert e.total == pytest.approx(0.3) and e.cantor == pytest.approx(0.3)

    def test_breakdown_sums_exactly(self):
        env = build_envelope(F3, G_EXP)
        u = DisplacementField1D(1.0, np.linspace(0, 2, 9) ** 2, jumps=((0.4, 0.3),), cantor_mass=0.2)
        e = energy_relaxed_1d(u, env, G_EXP)
        assert e.total == e.bulk + e.jump + e.cantor

    @given(st.floats(0, 3), st.floats(-2, 2))
    @settings(max_examples=50, deadline=None)
    def test_relaxed_never_exceeds_sharp(self, slope, jump):
        env = build_envelope(F2, G_EXP)
        u = DisplacementField1D.with_single_jump(1.0, slope, jump)
        assert energy_relaxed_1d(u, env, G_EXP).total <= energy_sharp_1d(u, F2, G_EXP).total + 1e-14


class TestBVNorm:
    def test_examples(self):
        assert bv_norm_1d(DisplacementField1D.affine(1.0, 0.0)) == 0.0
        assert bv_norm_1d(DisplacementField1D.affine(1.0, 1.0)) == pytest.approx(1.5, abs=1e-14)
        step = DisplacementField1D.with_single_jump(1.0, 0.0, 2.0, n_cells=65)
        assert bv_norm_1d(step) == pytest.approx(3.0, abs=1e-14)

    def test_sign_change_against_quad(self):
        x = np.linspace(0.0, 1.0, 11)
        u = DisplacementField1D(1.0, np.sin(7 * x) - 0.2)
        interp = lambda s: np.interp(s, x, u.values)
        y = u.values
        cross = [x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]) for i in range(10) if y[i] * y[i + 1] < 0]
        kinks = np.sort(np.concatenate([x[1:-1], cross]))
        oracle = quad(lambda s: abs(interp(s)), 0, 1, points=kinks, limit=200, epsabs=1e-13)[0]
        oracle += np.sum(np.abs(np.diff(u.values)))
        assert bv_norm_1d(u) == pytest.approx(oracle, abs=1e-10)


class TestMinimizer:
    def test_elastic_branch(self):
        m = minimize_relaxed_1d(F2, G_EXP, 1.0, 0.5)
        assert (m.e_star, m.s_star, m.c_star) == pytest.approx((0.5, 0.0, 0.0), abs=1e-9)
        assert m.energy == pytest.approx(0.125, abs=1e-12)

    def test_zero_load(self):
        m = minimize_relaxed_1d(F2, G_EXP, 1.0, 0.0)
        assert (m.e_star, m.s_star, m.c_star, m.energy) == (0.0, 0.0, 0.0, 0.0)

    def test_negative_load_rejected(self):
        with pytest.raises(DomainError):
            minimize_relaxed_1d(F2, G_EXP, 1.0, -1.0)

    def test_fractured_branch_matches_oracle(self):
        m = minimize_relaxed_1d(F2, G_EXP, 1.0, 3.0)
        o = brute_force_oracle_1d(F2, G_EXP, 1.0, 3.0, K=2, resolution=2000)
        assert m.e_star <= 1 + 1e-6 and m.c_star == 0.0
        assert m.energy <= o.energy + 1e-9
        assert o.energy - m.energy <= 1e-6 + o.grid_gap

    @pytest.mark.parametrize("pair", PAIRS, ids=pair_id)
    def test_yield_bound_and_stress_bound(self, pair):
        F, G = pair
        for t in np.linspace(0, 3, 16):
            m = minimize_relaxed_1d(F, G, 1.0, t)
            assert m.e_star <= m.e_M + 1e-6
            assert m.c_star == 0.0
            assert F.deriv(m.e_star) <= G.slope0 + 1e-6

    @pytest.mark.parametrize("pair", PAIRS, ids=pair_id)
    def test_reconstruction_energy(self, pair):
        F, G = pair
        env = build_envelope(F, G)
        for t in (0.4, 1.7, 2.9):
            m = minimize_relaxed_1d(F, G, 1.0, t)
            assert m.field.boundary_displacement() == pytest.approx(t, abs=1e-12)
            relaxed = energy_relaxed_1d(m.field, env, G).total
            assert relaxed == pytest.approx(m.energy, abs=1e-12)
            assert energy_sharp_1d(m.field, F, G).total == pytest.approx(relaxed, abs=1e-12)

    @pytest.mark.parametrize("pair", PAIRS, ids=pair_id)
    def test_energy_monotone_in_load(self, pair):
        rows = sweep_min1d(*pair, 1.0, np.linspace(0, 3, 31))
        energies = np.array([r[4] for r in rows])
        assert np.all(np.diff(energies) >= -1e-12)

    def test_sweep_rows(self):
        rows = sweep_min1d(F2, G_EXP, 1.0, [0.0, 0.5])
        assert rows[1][:4] == pytest.approx((0.5, 0.5, 0.0, 0.0), abs=1e-9)
        assert rows[1][5] == pytest.approx(1.0)

    @given(st.floats(0.25, 4.0), st.floats(0.0, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_dominates_coarse_oracle(self, l, t):
        m = minimize_relaxed_1d(F2, G_EXP, l, t)
        o = brute_force_oracle_1d(F2, G_EXP, l, t, K=1, resolution=400)
        assert m.energy <= o.energy + 1e-9


class TestOracle:
    def test_elastic_configuration(self):
        o = brute_force_oracle_1d(F2, G_EXP, 1.0, 0.5, K=1, resolution=2000)
        assert o.jumps == () and o.cantor == 0.0
        assert o.energy == pytest.approx(0.125, abs=o.grid_gap)

    def test_two_jumps_never_beat_one(self):
        one = brute_force_oracle_1d(F2, G_EXP, 1.0, 3.0, K=1, resolution=1000)
        two = brute_force_oracle_1d(F2, G_EXP, 1.0, 3.0, K=2, resolution=1000)
        assert two.energy >= one.energy - 1e-9
        assert len(two.jumps) <= 1

    def test_zero(self):
        assert brute_force_oracle_1d(F2, G_EXP, 1.0, 0.0).energy == 0.0

    def test_resource_cap(self):
        with pytest.raises(OracleTooLarge):
            brute_force_oracle_1d(F2, G_EXP, 1.0, 1.0, K=3, resolution=4096)
        with pytest.raises(OracleTooLarge):
            brute_force_oracle_1d(F2, G_EXP, 1.0, 1.0, K=1, resolution=5000)
