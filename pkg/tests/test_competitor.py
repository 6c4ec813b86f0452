import json

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from yieldlab.competitor import (
    ALPHA_GRID,
    AUDIT,
    BUMP,
    PROFILE,
    SUBLEVEL,
    Family,
    build_region,
    bv_distance,
    bv_distance_bound,
    case3_flux_check,
    closed_form_gap_profile,
    closed_form_gap_rect,
    closed_form_gap_sublevel,
    divergence_identity_residual,
    energy_gap,
    largest_certified_sigma,
    measure_constants,
    profile_sigma_threshold,
    rect_min_half_width,
    scan_family,
    search_certificate,
    tau_gap,
)
from yieldlab.competitor.search import alpha_candidates, choose_eps, sigma_candidates
from yieldlab.errors import DomainError, PreconditionError, RegionError
from yieldlab.field2d import SampledField2D
from yieldlab.field2d.geometry import profile_phi
from yieldlab.laws import BulkLaw, CohesiveLaw, build_envelope, effective_c

F2 = BulkLaw.power(2)
G_EXP = CohesiveLaw.exponential()
G_PAR = CohesiveLaw.parabola(0.4)
G_CUSP = CohesiveLaw.cusp()
ENV = build_envelope(F2, G_EXP)


def affine(lam):
    return SampledField2D.affine(lam)


class TestClosedForms:
    def test_profile_value(self):
        assert closed_form_gap_profile(1, 2, 0.08, 0.6, 2, 0.4) == pytest.approx(3.2768e-4, abs=1e-12)

    def test_profile_against_integrand_quadrature(self):
        # (1 - alpha) lam int [2 c1 (1 - alpha) lam sigma^2 phi^2 - 4 sigma^3 phi^3 ... ] reduced to phi^2 on (r, R)
        r, R, s, a, lam, c1 = 1.0, 2.0, 0.08, 0.6, 2.0, 0.4
        k = 4.0 / (R - r) ** 2
        integrand = lambda rho: (1 - a) * lam * (2 * c1 * (1 - a) * lam * s**2 - k * s**3) * profile_phi(r, R, rho)[0] ** 2
        val, _ = quad(integrand, r, R, epsabs=1e-15)
        assert val == pytest.approx(3.2768e-4, abs=1e-12)

    def test_profile_threshold(self):
        s = profile_sigma_threshold(1, 2, 0.6, 2, 0.4)
        assert s == pytest.approx(0.16, abs=1e-15)
        assert abs(closed_form_gap_profile(1, 2, 0.16, 0.6, 2, 0.4)) <= 1e-15
        assert closed_form_gap_profile(1, 2, 0.17, 0.6, 2, 0.4) < 0

    def test_profile_preconditions(self):
        with pytest.raises(DomainError):
            closed_form_gap_profile(1, 2, 0.08, 0.6, 0.9, 0.4)
        with pytest.raises(DomainError):
            closed_form_gap_profile(1, 2, 0.08, 0.4, 2, 0.4)
        with pytest.raises(DomainError):
            closed_form_gap_profile(2, 1, 0.08, 0.6, 2, 0.4)
        with pytest.raises(DomainError):
            closed_form_gap_profile(1, 2, 0.08, 0.6, 2, 0.4, t_valid=0.01)

    def test_rect_negative_for_narrow_rectangles(self):
        S = 0.25
        assert S < rect_min_half_width(0.6, 2, 0.6)
        deltas = np.linspace(1e-4, 0.1, 1000)
        assert np.all(closed_form_gap_rect(S, deltas, 0.6, 2, 0.6) < 0)

    def test_rect_wide(self):
        # 1 / (2 * 0.4 * 2 * 0.6) = 1 / 0.96
        assert rect_min_half_width(0.6, 2, 0.6) == pytest.approx(1 / 0.96)
        assert closed_form_gap_rect(10, 0.01, 0.6, 2, 0.6) > 0
        assert closed_form_gap_rect(1.03, 1e-6, 0.6, 2, 0.6) < 0
        assert closed_form_gap_rect(1.05, 1e-6, 0.6, 2, 0.6) > 0
        assert closed_form_gap_rect(10, 0.01, 1.0, 2, 0.6) == 0

    def test_sublevel_sign(self):
        assert closed_form_gap_sublevel(0.01, 0.5, 100.0, 3.8, 1.0) > 0
        assert closed_form_gap_sublevel(0.01, 0.5, 0.1, 3.8, 1.0) < 0


class TestRegions:
    def test_profile_area(self):
        reg = build_region(PROFILE, affine(2), {"sigma": 0.1, "R": 2, "r": 1})
        assert reg.area() == pytest.approx(0.2 * (1 + 1 / 3), abs=1e-3)
        assert reg.area() == pytest.approx(0.2 * (1 + 1 / 3), abs=1e-12)

    def test_sublevel_is_slab_in_ball(self):
        reg = build_region(SUBLEVEL, affine(2), {"sigma": 0.2, "R": 1, "eps": 0.25})
        rng = np.random.default_rng(3)
        p = rng.uniform(-1, 1, (4000, 2))
        slab = (p[:, 1] > 0) & (p[:, 1] < 0.1) & (np.hypot(*p.T) < 1)
        assert np.array_equal(reg.contains(p), slab)
        oracle, _ = dblquad(lambda y, x: 1.0, -1, 1, 0, lambda x: min(0.1, np.sqrt(max(1 - x * x, 0))))
        exact = 0.1 * np.sqrt(1 - 0.01) + np.arcsin(0.1)
        assert oracle == pytest.approx(exact, abs=1e-8)
        assert reg.area() == pytest.approx(exact, abs=1e-10)

    def test_bump_collapses(self):
        u = affine(2)
        areas = [build_region(BUMP, u, {"sigma": s, "R": 2, "r": 1}).area() for s in (0.08, 0.02, 0.005)]
        assert areas[0] > areas[1] > areas[2] > 0
        assert areas[2] < 0.01

    def test_bump_top_is_level_set(self):
        reg = build_region(BUMP, affine(2), {"sigma": 0.08, "R": 2, "r": 1})
        x = np.linspace(-1.9, 1.9, 41)
        y = reg.top.y(x)
        p = np.stack([x, y], axis=-1)
        assert np.max(np.abs(reg.top_field.value(p))) < 1e-12

    def test_sigma_too_large(self):
        with pytest.raises(RegionError, match="sigma too large"):
            build_region(SUBLEVEL, affine(2), {"sigma": 1.5, "R": 2})
        with pytest.raises(RegionError):
            build_region(PROFILE, affine(2), {"sigma": 0.5, "R": 2, "r": 1})

    def test_containment(self):
        small = SampledField2D.affine(2.0, (-1, 1, -1, 1))
        with pytest.raises(RegionError):
            build_region(PROFILE, small, {"sigma": 0.1, "R": 2, "r": 1})

    def test_bad_radii(self):
        with pytest.raises(DomainError):
            build_region(BUMP, affine(2), {"sigma": 0.1, "R": 2, "r": 2})

    def test_localisation_enforced(self):
        curved = SampledField2D.analytic(
            lambda p: 2 * p[..., 1] + 0.3 * p[..., 0] ** 2,
            lambda p: np.stack([0.6 * p[..., 0], np.full(p.shape[:-1], 2.0)], axis=-1),
            (-2.5, 2.5, -2.5, 2.5),
        )
        with pytest.raises(PreconditionError):
            build_region(SUBLEVEL, curved, {"sigma": 0.1, "R": 2})

    def test_measured_constants(self):
        pc = measure_constants(affine(2), SUBLEVEL, 0.25, 2.0)
        assert pc.delta == pytest.approx(1.0)
        # lateral arcs of height sigma at radius 2: length -> 2 sigma / cos(0) per side
        assert 1.0 < pc.L < 1.1
        assert pc.M > 2 * 2.0


class TestEnergyGap:
    def test_alpha_one_is_exactly_zero(self):
        u = affine(2)
        for tag, extra in ((PROFILE, {"r": 1}), (SUBLEVEL, {}), (BUMP, {"r": 1})):
            reg = build_region(tag, u, {"sigma": 0.08, "R": 2, **extra})
            assert energy_gap(u, reg, 1.0, ENV, G_EXP).gap == 0.0
            assert bv_distance(u, reg, 1.0) == 0.0

    def test_profile_gap_above_bound(self):
        u = affine(2)
        reg = build_region(PROFILE, u, {"sigma": 0.08, "R": 2, "r": 1})
        res = energy_gap(u, reg, 0.6, ENV, G_EXP, h=1 / 256)
        assert res.gap > 0
        assert res.gap >= closed_form_gap_profile(1, 2, 0.08, 0.6, 2, 0.4) - 5e-5
        assert res.gap == pytest.approx(res.bulk_saving - res.jump_cost, abs=1e-15)

    def test_profile_gap_against_scipy(self):
        lam, s, a = 2.0, 0.08, 0.6
        u = affine(lam)
        reg = build_region(PROFILE, u, {"sigma": s, "R": 2, "r": 1})
        phi = lambda x: profile_phi(1, 2, abs(x))
        area = 2 * s * (1 + 1 / 3)
        bulk = area * (ENV.value(lam) - ENV.value(a * lam))
        top = lambda x: G_EXP.value((1 - a) * lam * s * phi(x)[0]) * np.sqrt(1 + (s * phi(x)[1]) ** 2)
        cost = sum(quad(top, lo, hi, epsabs=1e-14)[0] for lo, hi in ((-2, -1), (-1, 1), (1, 2)))
        assert energy_gap(u, reg, a, ENV, G_EXP).gap == pytest.approx(bulk - cost, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 0.7, 0.9])
    def test_below_yield_gaps_negative(self, alpha):
        u = affine(0.9)
        env = build_envelope(F2, G_EXP)
        for s in (0.005, 0.02, 0.08, 0.3):
            reg = build_region(PROFILE, u, {"sigma": s, "R": 2, "r": 1})
            assert energy_gap(u, reg, alpha, env, G_EXP).gap < 0

    def test_bv_distance_sublevel_oracle(self):
        lam, s, a = 2.0, 0.2, 0.6
        u = affine(lam)
        reg = build_region(SUBLEVEL, u, {"sigma": s, "R": 1})
        top = s / lam
        vol, _ = dblquad(lambda y, x: lam * y + lam, -1, 1, 0, lambda x: min(top, np.sqrt(1 - x * x)), epsabs=1e-12)
        # level set u = sigma inside the ball, plus the two lateral arcs
        half = np.sqrt(1 - top**2)
        surf = s * 2 * half
        arc, _ = quad(lambda t: lam * np.sin(t), 0, np.arcsin(top), epsabs=1e-14)
        surf += 2 * arc
        oracle = (1 - a) * (vol + surf)
        assert bv_distance(u, reg, a) == pytest.approx(oracle, abs=1e-6)
        assert bv_distance(u, reg, a) <= bv_distance_bound(u, reg, a)

    def test_sublevel_cusp_bound(self):
        lam, a = 2.0, 0.5
        u = affine(lam)
        pc = measure_constants(u, SUBLEVEL, 0.25, 2.0)
        env = build_envelope(F2, G_CUSP)
        for s in (1e-4, 1e-3):
            reg = build_region(SUBLEVEL, u, {"sigma": s, "R": 2})
            c = effective_c(G_CUSP, (1 - a) * s)
            gap = energy_gap(u, reg, a, env, G_CUSP).gap
            assert gap >= closed_form_gap_sublevel(s, a, c, pc.K_eps_R, pc.L) - 1e-12
            assert gap > 0

    def test_foreign_region_rejected(self):
        reg = build_region(PROFILE, affine(2), {"sigma": 0.08, "R": 2, "r": 1})
        with pytest.raises(ValueError):
            energy_gap(affine(2), reg, 0.6, ENV, G_EXP)


class TestDivergenceIdentity:
    def test_sublevel_slab(self):
        u = affine(2)
        reg = build_region(SUBLEVEL, u, {"sigma": 0.2, "R": 1})
        assert divergence_identity_residual(u, reg, 1 / 256) <= 5e-3

    def test_profile(self):
        u = affine(2)
        reg = build_region(PROFILE, u, {"sigma": 0.08, "R": 2, "r": 1})
        assert divergence_identity_residual(u, reg, 1 / 128) <= 1e-2

    def test_requires_steep_field(self):
        u = affine(0.9)
        reg = build_region(PROFILE, u, {"sigma": 0.08, "R": 2, "r": 1})
        with pytest.raises(PreconditionError):
            divergence_identity_residual(u, reg, 1 / 64)


class TestFluxCheck:
    def test_coarse_check_holds(self):
        chk = case3_flux_check(affine(2), 2.0, 1.0, sigmas=(0.04,), h=1 / 64)
        assert chk.holds()
        assert chk.rows[0][1] > 0
        assert chk.C >= 0


class TestScanGrids:
    def test_eps_and_alpha(self):
        assert choose_eps(2.0, 1.0, "above") == 0.25
        assert choose_eps(1.2, 1.0, "above") == pytest.approx(0.1)
        assert choose_eps(0.9, 1.0, AUDIT) == 0.25
        al = alpha_candidates(1.2, 0.1, 1.0, "above")
        assert al == sorted(al, reverse=True)
        assert all(a * 1.1 > 1 for a in al)
        assert len(alpha_candidates(0.9, 0.25, 1.0, AUDIT)) == len(ALPHA_GRID)

    def test_sigma_grid(self):
        s = sigma_candidates(0.5)
        assert s[0] == 1e-4 and s[-1] < 0.5 and 2 * s[-1] >= 0.5
        assert np.allclose(np.diff(np.log2(s)), 1.0)

    def test_tau(self):
        assert tau_gap(0.5, 2.0, 0.1) == pytest.approx(1e-8)


class TestSearch:
    def test_profile_certificate(self):
        u = affine(2)
        cert = search_certificate(u, ENV, G_EXP, [Family(PROFILE)], eta=1.0)
        assert cert is not None and cert.case == PROFILE
        assert cert.gap > cert.tau_gap and cert.bv_distance < 1.0
        assert cert.alpha * (2 - cert.eps) > 1
        assert cert.revalidate(u, ENV, G_EXP)
        d = json.loads(cert.to_json())
        assert set(d) >= {"case", "alpha", "sigma", "gap", "bv_distance", "eta", "constants"}
        assert set(d["constants"]) == {"r", "R", "eps", "delta", "c1", "c2", "k"}

    def test_zero_budget(self):
        assert search_certificate(affine(2), ENV, G_EXP, eta=0.0) is None

    def test_below_yield_profile_none(self):
        u = affine(0.9)
        rows, cert = scan_family(u, ENV, G_EXP, Family(PROFILE), 1.0, AUDIT, stop_at_first=False)
        assert cert is None
        assert rows and all(r.gap <= 0 for r in rows if np.isfinite(r.gap))

    def test_threads_do_not_change_results(self):
        u = affine(1.5)
        one = scan_family(u, ENV, G_PAR, Family(PROFILE), 1.0, AUDIT, workers=1, stop_at_first=False)[0]
        four = scan_family(u, ENV, G_PAR, Family(PROFILE), 1.0, AUDIT, workers=4, stop_at_first=False)[0]
        assert one == four

    def test_first_hit_order(self):
        u = affine(2)
        rows, cert = scan_family(u, ENV, G_EXP, Family(PROFILE), 1.0)
        assert rows[-1].certified and not any(r.certified for r in rows[:-1])
        assert (cert.alpha, cert.sigma) == (rows[-1].alpha, rows[-1].sigma)

    def test_cusp_sublevel_certificate(self):
        u = affine(1.5)
        env = build_envelope(F2, G_CUSP)
        cert = search_certificate(u, env, G_CUSP, [Family(SUBLEVEL, 2.0, None)])
        assert cert is not None and cert.case == SUBLEVEL and cert.curvature_class == "Infinite"
        assert cert.revalidate(u, env, G_CUSP)

    def test_shrinking_window(self):
        alpha = 0.9375
        sig = [largest_certified_sigma(affine(lam), ENV, G_EXP, Family(PROFILE), alpha, n=24) for lam in (1.2, 1.5, 2.0, 3.0)]
        assert all(s > 0 for s in sig)
        assert sig == sorted(sig)

    def test_cusp_below_yield_certificate_is_genuine(self):
        # with G(t) = t - t^1.5 a jump costs far less than G'(0) t, so scaling
        # down a thick profile region pays off even below yield
        lam, a, s = 0.9, 0.5, 0.4096
        u = affine(lam)
        env = build_envelope(F2, G_CUSP)
        reg = build_region(PROFILE, u, {"sigma": s, "R": 2, "r": 1, "eps": 0.25})
        gap = energy_gap(u, reg, a, env, G_CUSP).gap
        area = 2 * s * (1 + 1 / 3)
        bulk = area * (env.value(lam) - env.value(a * lam))
        phi = lambda x: profile_phi(1, 2, abs(x))
        top = lambda x: G_CUSP.value((1 - a) * lam * s * phi(x)[0]) * np.sqrt(1 + (s * phi(x)[1]) ** 2)
        cost = sum(quad(top, lo, hi, epsabs=1e-14, limit=200)[0] for lo, hi in ((-2, -1), (-1, 1), (1, 2)))
        assert gap == pytest.approx(bulk - cost, abs=1e-10)
        assert gap > 0.02 > tau_gap(a, lam, s)
