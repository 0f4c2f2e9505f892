"""Sphere frames, extremal flow, conjugate times, radial comparison.

Test categories:
  1. Quaternionic frame identities at arbitrary points
  2. Initial covector construction
  3. Conservation along the extremal flow
  4. Effective curvature constants along an extremal
  5. Conjugate time against the scalar bounds
  6. Canonical splitting frame
  7. Structural reductions along an actual geodesic (exactness)
  8. Radial sub-Laplacian comparison

The geodesic-level reduction tests are the integration point of the
whole package: curvature blocks, structural pair, Jacobi propagator and
scalar models all have to agree for them to pass.
"""

import math

import numpy as np
import pytest

from fatcomp.curvature import curvature_blocks, qhf_curvature_inputs
from fatcomp.hopf import (
    DomainError,
    build_frames,
    canonical_splitting,
    conjugate_time,
    initial_state,
    integrate_extremal,
    qhf_kappas,
    reeb_generators,
    sublaplacian_along,
)
from fatcomp.models import blowup_time_kab, eval_s_kc
from fatcomp.riccati import integrate_jacobi, riccati_solution
from fatcomp.structure import (
    FatDims,
    build_structural,
    motion_row_residual,
    traced_typeII,
    typeI_residual,
    typeII_residual,
)


def random_unit(rng, m):
    q = rng.standard_normal(m)
    return q / np.linalg.norm(q)


def qhf_jacobi_quotient(d, v, t_max):
    """Riccati quotient of the structural Jacobi system for momentum v."""
    dims = FatDims(k=4 * d, n=4 * d + 3)
    pair = build_structural(dims)
    blocks = curvature_blocks(np.asarray(v, dtype=float), qhf_curvature_inputs(d, v))
    sol = integrate_jacobi(
        pair.A, pair.B, lambda t: blocks.assemble(t), t_max=t_max, tol=1e-11
    )
    return dims, blocks, riccati_solution(sol)


# ----------------------------------------------------------------------
# Test Class: frame identities
# ----------------------------------------------------------------------

class TestFrames:

    def test_generator_commutator(self):
        KI, KJ, KK = reeb_generators(2)
        assert np.abs(KI @ KJ - KJ @ KI + 2.0 * KK).max() == 0.0

    def test_reeb_frame_is_orthonormal(self):
        fr = build_frames(random_unit(np.random.default_rng(4), 12), 2)
        G = np.vstack([fr.q, fr.xis]) @ np.vstack([fr.q, fr.xis]).T
        assert np.abs(G - np.eye(4)).max() < 1e-12

    def test_phi_squares_to_minus_identity_on_horizontal(self):
        rng = np.random.default_rng(9)
        fr = build_frames(random_unit(rng, 8), 1)
        X = fr.pr(rng.standard_normal(8))
        for alpha in ("I", "J", "K"):
            assert np.abs(fr.phi(alpha, fr.phi(alpha, X)) + X).max() < 1e-12

    def test_phi_composition_is_quaternionic(self):
        rng = np.random.default_rng(10)
        fr = build_frames(random_unit(rng, 12), 2)
        X = fr.pr(rng.standard_normal(12))
        got = fr.phi("I", fr.phi("J", X))
        assert np.abs(got - fr.phi("K", X)).max() < 1e-12

    def test_projection_is_idempotent(self):
        rng = np.random.default_rng(11)
        fr = build_frames(random_unit(rng, 8), 1)
        X = rng.standard_normal(8)
        assert np.abs(fr.pr(fr.pr(X)) - fr.pr(X)).max() < 1e-12
        assert np.abs(fr.pr(fr.xi_J)).max() < 1e-12
        assert np.abs(fr.eta(fr.xi_K) - np.array([0.0, 0.0, 1.0])).max() < 1e-12

    def test_rejects_bad_points(self):
        with pytest.raises(DomainError):
            build_frames(np.ones(8), 1)
        with pytest.raises(ValueError):
            build_frames(random_unit(np.random.default_rng(0), 8), 2)


# ----------------------------------------------------------------------
# Test Class: initial covector
# ----------------------------------------------------------------------

class TestInitialState:

    def test_unit_energy_and_momentum_recovery(self):
        for d, v in ((1, [0.0, 0.0, 0.0]), (2, [0.4, -0.7, 0.25])):
            st0 = initial_state(d, v)
            assert abs(st0.H - 0.5) < 1e-12, f"H = {st0.H}"
            assert np.abs(st0.v - np.asarray(v)).max() < 1e-12
            gd = st0.gdot
            assert abs(gd @ gd - 1.0) < 1e-12
            fr = build_frames(st0.q, d)
            assert np.abs(fr.eta(gd)).max() < 1e-12, "velocity not horizontal"

    def test_custom_footpoint(self):
        rng = np.random.default_rng(21)
        q = random_unit(rng, 12)
        st0 = initial_state(2, [0.1, 0.2, 0.3], q=q, seed_direction=rng.standard_normal(12))
        assert np.abs(st0.q - q).max() == 0.0
        assert abs(st0.H - 0.5) < 1e-12

    def test_rejects_degenerate_seed(self):
        with pytest.raises(DomainError):
            initial_state(1, [0, 0, 0], seed_direction=np.zeros(8))
        q0 = np.zeros(8)
        q0[0] = 1.0
        with pytest.raises(DomainError):
            initial_state(1, [0, 0, 0], q=q0, seed_direction=q0)


# ----------------------------------------------------------------------
# Test Class: extremal flow
# ----------------------------------------------------------------------

class TestExtremalFlow:

    def test_zero_momentum_traces_a_great_circle(self):
        res = integrate_extremal(initial_state(1, [0, 0, 0]), 2.0 * math.pi)
        assert np.abs(res.states[-1].q - res.states[0].q).max() < 1e-7
        # halfway around, the point is antipodal
        mid = res.states[len(res.states) // 2]
        assert np.abs(mid.q + res.states[0].q).max() < 1e-6

    def test_conserved_quantities(self):
        st0 = initial_state(2, [0.5, -0.2, 0.3], seed_direction=np.arange(12.0) + 1.0)
        res = integrate_extremal(st0, 4.0)
        assert res.h_drift < 1e-8, f"H drift {res.h_drift}"
        assert res.v_drift < 1e-8, f"vertical momentum drift {res.v_drift}"
        assert res.norm_drift < 1e-8
        assert res.gauge_drift < 1e-8

    def test_rejects_non_unit_covector(self):
        st0 = initial_state(1, [0.3, 0.0, 0.0])
        bad = type(st0)(d=st0.d, q=st0.q, p=2.0 * st0.p)
        with pytest.raises(DomainError):
            integrate_extremal(bad, 1.0)


# ----------------------------------------------------------------------
# Test Class: effective constants
# ----------------------------------------------------------------------

class TestEffectiveConstants:

    def test_zero_momentum(self):
        assert qhf_kappas([0.0, 0.0, 0.0]) == (0.0, 4.0, 1.0)

    def test_unit_momentum(self):
        ka, kb, kc = qhf_kappas([1.0, 0.0, 0.0])
        assert ka == pytest.approx(-3.875)
        assert kb == pytest.approx(9.0)
        assert kc == pytest.approx(2.0)

    def test_direction_independence(self):
        a = qhf_kappas([0.7, 0.0, 0.0])
        b = qhf_kappas([0.0, 0.7, 0.0])
        c = qhf_kappas(np.array([0.7, 0.0, 0.0]) / math.sqrt(2.0) * math.sqrt(2.0))
        assert a == b == c


# ----------------------------------------------------------------------
# Test Class: conjugate time
# ----------------------------------------------------------------------

class TestConjugateTime:

    def test_zero_momentum_gives_half_circle(self):
        res = conjugate_time(2, [0.0, 0.0, 0.0])
        assert abs(res.t_star - math.pi) < 1e-6, f"t* = {res.t_star}"
        assert res.margin_kc is not None and res.margin_kc >= -1e-6
        assert res.margin_kab >= -1e-6

    def test_decoupled_pair_saturates_the_bound(self):
        # for d >= 2 the conjugate point comes from the single-frequency
        # pair, so t* equals pi/sqrt(1 + |v|^2) up to solver tolerance
        v = [0.8, -0.1, 0.3]
        res = conjugate_time(2, v)
        s = float(np.dot(v, v))
        assert abs(res.t_star - math.pi / math.sqrt(1.0 + s)) < 1e-6
        assert res.bound_kc == pytest.approx(math.pi / math.sqrt(1.0 + s))

    def test_minimal_dimension_has_no_single_frequency_bound(self):
        res = conjugate_time(1, [0.3, 0.0, 0.0])
        assert res.bound_kc is None and res.margin_kc is None
        assert res.t_star <= math.pi + 1e-9
        assert res.margin_kab >= -1e-6
        assert res.bound_kab.is_finite

    def test_reported_kappas(self):
        res = conjugate_time(1, [0.5, 0.0, 0.0])
        assert res.kappas == qhf_kappas([0.5, 0.0, 0.0])


# ----------------------------------------------------------------------
# Test Class: canonical splitting
# ----------------------------------------------------------------------

class TestCanonicalSplitting:

    def test_shapes_and_orthogonality(self):
        rng = np.random.default_rng(31)
        st0 = initial_state(
            2, [0.4, -0.2, 0.7], q=random_unit(rng, 12),
            seed_direction=rng.standard_normal(12),
        )
        sp = canonical_splitting(st0)
        assert sp.f_a.shape == (3, 12)
        assert np.abs(sp.f_b @ sp.f_b.T - np.eye(3)).max() < 1e-12
        assert np.abs(sp.f_c @ sp.f_c.T - np.eye(5)).max() < 1e-12
        assert np.abs(sp.f_c @ sp.f_b.T).max() < 1e-12
        assert np.abs(sp.f_b @ sp.gdot).max() < 1e-12
        assert np.abs(sp.f_c[-1] - sp.gdot).max() < 1e-12, "motion direction must sit last"

    def test_rejects_non_unit_covector(self):
        st0 = initial_state(1, [0.0, 0.0, 0.0])
        bad = type(st0)(d=st0.d, q=st0.q, p=1.1 * st0.p)
        with pytest.raises(DomainError):
            canonical_splitting(bad)


# ----------------------------------------------------------------------
# Test Class: structural reductions along a geodesic
# ----------------------------------------------------------------------

class TestReductionsAlongGeodesic:
    """Exactness of the traced reductions on the assembled system."""

    def test_motion_row_is_exact(self):
        dims, _, ric = qhf_jacobi_quotient(2, [0.6, -0.3, 0.2], t_max=1.5)
        worst = max(motion_row_residual(ric.V(t), dims, t) for t in (0.4, 0.9, 1.4))
        assert worst < 1e-10, f"motion row residual {worst}"

    def test_traced_typeII_equals_single_frequency_model(self):
        # the c' pairs decouple: their trace average IS the scalar model
        v = [0.6, -0.3, 0.2]
        dims, _, ric = qhf_jacobi_quotient(2, v, t_max=1.5)
        kc = 1.0 + float(np.dot(v, v))
        for t in (0.5, 1.0):
            got = traced_typeII(ric.V(t)[dims.sl_cprime, dims.sl_cprime], dims)
            assert abs(got - eval_s_kc(kc, t)) < 1e-9, f"decoupling broken at t={t}"

    def test_typeI_reduction_residual(self):
        v = [0.6, -0.3, 0.2]
        dims, blocks, ric = qhf_jacobi_quotient(2, v, t_max=1.2)
        res = typeI_residual(ric.V, lambda t: blocks.assemble(t), 0.8, dims)
        assert res < 1e-6, f"type-I residual {res}"

    def test_typeII_reduction_residual(self):
        v = [0.6, -0.3, 0.2]
        dims, blocks, ric = qhf_jacobi_quotient(2, v, t_max=1.2)
        res = typeII_residual(ric.V, lambda t: blocks.assemble(t), 0.8, dims)
        assert res < 1e-8, f"type-II residual {res}"


# ----------------------------------------------------------------------
# Test Class: radial comparison
# ----------------------------------------------------------------------

class TestSublaplacian:

    def test_margin_and_small_radius_limit(self):
        rep = sublaplacian_along(2, [0.0, 0.0, 0.0], np.linspace(0.2, 2.8, 8))
        assert rep.margin.min() >= -1e-6, f"margin dips to {rep.margin.min()}"
        assert np.abs(rep.margin).max() < 1e-4, "comparison should be near-Exact at v=0"
        small = sublaplacian_along(2, [0.0, 0.0, 0.0], [1e-3])
        assert abs(small.r_times_lhs[0] - 16.0) < 1e-3

    def test_nonzero_momentum_margin(self):
        rep = sublaplacian_along(2, [0.5, 0.0, 0.0], np.linspace(0.3, 2.0, 5))
        assert rep.margin.min() >= -1e-6

    def test_domain_guards(self):
        with pytest.raises(DomainError):
            sublaplacian_along(2, [0, 0, 0], [])
        with pytest.raises(DomainError):
            sublaplacian_along(2, [0, 0, 0], [5.0])
        with pytest.raises(DomainError):
            sublaplacian_along(2, [0, 0, 0], [-0.5, 0.5])
