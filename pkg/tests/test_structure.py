"""Block layout, structural pair, traced reductions, trace inequality.

Test categories:
  1. Dimension bookkeeping and its guards
  2. Structural pair algebra (nilpotency, idempotency, controllability)
  3. Invariant splitting and trace compressions
  4. Effective potentials: both corrections are positive semidefinite
  5. Motion-direction row
  6. Symmetric-pair trace inequality, including its equality cases
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fatcomp.riccati import kalman_steps
from fatcomp.structure import (
    BlockMatrix,
    FatDims,
    build_structural,
    effective_potential_typeI,
    effective_potential_typeII,
    motion_row_residual,
    split_I_II,
    trace_inequality_check,
    traced_typeI,
    traced_typeII,
    typeI_pair,
)

# Seeds feed a local generator; matrices built this way shrink poorly but
# the properties under test are symmetric in the entries anyway.
matrix_seed = st.integers(min_value=0, max_value=10**6)
block_size = st.sampled_from([2, 3, 5])

DIMS_D1 = FatDims(k=4, n=7)
DIMS_D2 = FatDims(k=8, n=11)


def random_symmetric(rng, n, scale=1.0):
    X = rng.standard_normal((n, n)) * scale
    return 0.5 * (X + X.T)


# ----------------------------------------------------------------------
# Test Class: dimension bookkeeping
# ----------------------------------------------------------------------

class TestFatDims:

    def test_minimal_corank_one(self):
        d = DIMS_D1
        assert (d.na, d.nb, d.nc, d.m2) == (3, 3, 1, 0)
        assert d.idx_motion == 6
        assert d.sl_c == slice(6, 7)

    def test_quaternionic_d2(self):
        d = DIMS_D2
        assert (d.na, d.nb, d.nc, d.m2) == (3, 3, 5, 4)
        assert d.sl_a == slice(0, 3)
        assert d.sl_b == slice(3, 6)
        assert d.sl_cprime == slice(6, 10)
        assert d.idx_motion == 10

    @pytest.mark.parametrize("k,n", [(2, 4), (4, 4), (5, 4), (4, 8), (3, 6)])
    def test_rejects_inadmissible_dimensions(self, k, n):
        with pytest.raises(ValueError):
            FatDims(k=k, n=n)

    def test_block_accessor_names(self):
        d = DIMS_D2
        M = BlockMatrix(M=np.arange(121.0).reshape(11, 11), dims=d)
        assert M.block("a", "b").shape == (3, 3)
        assert M.block("cprime", "c").shape == (4, 5)
        assert np.array_equal(M.block("a", "a"), M.M[:3, :3])
        with pytest.raises(ValueError, match="unknown block group"):
            M.block("a", "z")

    def test_block_matrix_shape_guard(self):
        with pytest.raises(ValueError):
            BlockMatrix(M=np.zeros((7, 7)), dims=DIMS_D2)


# ----------------------------------------------------------------------
# Test Class: structural pair
# ----------------------------------------------------------------------

class TestStructuralPair:

    def test_shapes_and_sparsity(self):
        pair = build_structural(DIMS_D2)
        A, B = pair.A, pair.B
        assert A.shape == B.shape == (11, 11)
        # A maps the b group into the a group and nothing else
        assert np.array_equal(A[DIMS_D2.sl_a, DIMS_D2.sl_b], np.eye(3))
        assert np.count_nonzero(A) == 3

    def test_a_is_nilpotent_b_is_projection(self):
        pair = build_structural(DIMS_D1)
        assert np.array_equal(pair.A @ pair.A, np.zeros((7, 7)))
        assert np.array_equal(pair.B @ pair.B, pair.B)
        assert np.array_equal(pair.B, pair.B.T)
        assert np.trace(pair.B) == DIMS_D1.nb + DIMS_D1.nc

    @pytest.mark.parametrize("dims", [DIMS_D1, DIMS_D2])
    def test_controllable_in_one_bracket(self, dims):
        pair = build_structural(dims)
        assert kalman_steps(pair.A, pair.B) == 1

    def test_scalar_pair_mirrors_structure(self):
        a, b = typeI_pair()
        assert np.array_equal(a @ a, np.zeros((2, 2)))
        assert np.array_equal(b @ b, b)
        assert kalman_steps(a, b) == 1


# ----------------------------------------------------------------------
# Test Class: splitting and trace compressions
# ----------------------------------------------------------------------

class TestSplitAndTrace:

    def test_split_shapes(self):
        M = np.arange(121.0).reshape(11, 11)
        top, bottom = split_I_II(M, DIMS_D2)
        assert top.shape == (6, 6)
        assert bottom.shape == (5, 5)
        assert np.array_equal(bottom, M[6:, 6:])

    def test_split_requires_dims_for_plain_arrays(self):
        with pytest.raises(ValueError, match="dims"):
            split_I_II(np.zeros((11, 11)))

    def test_split_accepts_block_matrix(self):
        bm = BlockMatrix(M=np.eye(7), dims=DIMS_D1)
        top, bottom = split_I_II(bm)
        assert top.shape == (6, 6) and bottom.shape == (1, 1)

    def test_traced_typeI_is_blockwise_trace_average(self):
        rng = np.random.default_rng(11)
        V = random_symmetric(rng, 6)
        traced = traced_typeI(V, DIMS_D2)
        assert traced.shape == (2, 2)
        assert abs(traced[0, 0] - np.trace(V[:3, :3]) / 3.0) < 1e-14
        assert abs(traced[0, 1] - np.trace(V[:3, 3:]) / 3.0) < 1e-14

    def test_traced_typeII_average(self):
        assert traced_typeII(2.0 * np.eye(4), DIMS_D2) == pytest.approx(2.0)

    def test_traced_typeII_empty_for_corank_one(self):
        with pytest.raises(ValueError, match="type-II"):
            traced_typeII(np.zeros((0, 0)), DIMS_D1)

    def test_traced_shape_guards(self):
        with pytest.raises(ValueError):
            traced_typeI(np.zeros((5, 5)), DIMS_D2)
        with pytest.raises(ValueError):
            traced_typeII(np.zeros((3, 3)), DIMS_D2)


# ----------------------------------------------------------------------
# Test Class: effective potentials
# ----------------------------------------------------------------------

class TestEffectivePotentials:
    """The two correction terms must be PSD: that is what turns the traced
    reduction into a comparison statement."""

    @given(matrix_seed)
    @settings(max_examples=100)
    def test_typeI_corrections_are_psd(self, seed):
        rng = np.random.default_rng(seed)
        V = random_symmetric(rng, 11, scale=2.0)
        R = random_symmetric(rng, 11)
        _, gram, cov = effective_potential_typeI(V, R, DIMS_D2)
        scale = max(1.0, np.abs(V).max() ** 2)
        for name, C in (("gram", gram), ("cov", cov)):
            lam = np.linalg.eigvalsh(0.5 * (C + C.T)).min()
            assert lam > -1e-10 * scale, f"{name} correction not PSD: {lam}"

    @given(matrix_seed)
    @settings(max_examples=100)
    def test_typeII_variance_term_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        V = random_symmetric(rng, 11)
        pot_zero_R = effective_potential_typeII(V, np.zeros((11, 11)), DIMS_D2)
        Vcb = V[DIMS_D2.sl_cprime, DIMS_D2.sl_b]
        base = float(np.sum(Vcb * Vcb)) / DIMS_D2.m2
        # with R = 0 the potential is base + variance; variance >= 0
        assert pot_zero_R >= base - 1e-12 * max(1.0, abs(pot_zero_R))

    def test_typeI_reduces_to_trace_blocks_for_block_scalar_V(self):
        # V proportional to the identity has no traceless part and no
        # off-diagonal coupling, so both corrections vanish
        V = 3.0 * np.eye(11)
        R = random_symmetric(np.random.default_rng(5), 11)
        r_I, gram, cov = effective_potential_typeI(V, R, DIMS_D2)
        assert np.abs(gram).max() < 1e-12
        assert np.abs(cov).max() < 1e-12

    def test_typeII_rejects_corank_one(self):
        with pytest.raises(ValueError):
            effective_potential_typeII(np.eye(7), np.eye(7), DIMS_D1)


# ----------------------------------------------------------------------
# Test Class: motion row
# ----------------------------------------------------------------------

class TestMotionRow:

    def test_exact_motion_row(self):
        t = 1.7
        V = np.zeros((7, 7))
        V[6, 6] = 1.0 / t
        assert motion_row_residual(V, DIMS_D1, t) == 0.0

    def test_detects_coupling(self):
        V = np.zeros((7, 7))
        V[6, 6] = 1.0
        V[0, 6] = 0.5
        assert motion_row_residual(V, DIMS_D1, 1.0) == pytest.approx(0.5)


# ----------------------------------------------------------------------
# Test Class: trace inequality
# ----------------------------------------------------------------------

class TestTraceInequality:

    def test_equality_when_second_is_identity(self):
        X = random_symmetric(np.random.default_rng(2), 3)
        slack, ok = trace_inequality_check(X, np.eye(3))
        assert ok
        assert abs(slack) < 1e-12 * max(1.0, np.abs(X).max() ** 4)

    def test_equality_when_arguments_coincide(self):
        X = random_symmetric(np.random.default_rng(3), 4)
        slack, ok = trace_inequality_check(X, X.copy())
        assert ok
        assert abs(slack) < 1e-10 * max(1.0, np.abs(X).max() ** 4)

    @given(matrix_seed, block_size)
    @settings(max_examples=200)
    def test_holds_for_random_symmetric_pairs(self, seed, m):
        rng = np.random.default_rng(seed)
        X = random_symmetric(rng, m, scale=3.0)
        Y = random_symmetric(rng, m, scale=0.5)
        slack, ok = trace_inequality_check(X, Y)
        assert ok, f"trace inequality violated: slack = {slack} (m = {m})"

    def test_rejects_asymmetric_input(self):
        with pytest.raises(ValueError, match="symmetric"):
            trace_inequality_check(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            trace_inequality_check(np.eye(2), np.eye(3))
