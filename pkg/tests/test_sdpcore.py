import numpy as np
import pytest

from bq.qmat import ComplexMatrix, DensityMatrix, fidelity_eigen
from bq.sdpcore import (
    SdpConstraint,
    SdpProblem,
    SdpSolverError,
    derealify,
    dump_realified,
    entry_functionals,
    fidelity_sdp,
    realify,
    solve,
)
from conftest import rand_density, rand_hermitian

PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def eye_c(d):
    return np.eye(d, dtype=complex)


def trace_one_problem(c):
    d = c.shape[0]
    return SdpProblem(
        (("X", d),), {"X": c}, (SdpConstraint({"X": eye_c(d)}, 1.0),)
    )


# --- realify ---------------------------------------------------------------


def test_realify_identity():
    np.testing.assert_allclose(realify(eye_c(2)), np.eye(4))


def test_realify_pauli_y_eigenvalues():
    out = realify(PAULI_Y)
    assert out.dtype == np.float64
    np.testing.assert_allclose(out, out.T)
    np.testing.assert_allclose(np.linalg.eigvalsh(out), [-1, -1, 1, 1], atol=1e-12)


def test_realify_real_diagonal():
    np.testing.assert_allclose(
        realify(np.diag([2.0, 5.0]).astype(complex)), np.diag([2.0, 5.0, 2.0, 5.0])
    )


def test_realify_doubles_trace(rng):
    h = rand_hermitian(rng, 4)
    assert np.trace(realify(h)) == pytest.approx(2 * np.trace(h).real, abs=1e-12)


def test_realify_preserves_psd(rng):
    for _ in range(10):
        h = rand_hermitian(rng, 3)
        wc = np.linalg.eigvalsh(h)
        wr = np.linalg.eigvalsh(realify(h))
        np.testing.assert_allclose(wr, np.sort(np.repeat(wc, 2)), atol=1e-10)


def test_realify_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        realify(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


def test_derealify_roundtrip(rng):
    h = rand_hermitian(rng, 5)
    np.testing.assert_allclose(derealify(realify(h)), h, atol=1e-14)


# --- entry functionals -----------------------------------------------------


def test_entry_functionals_extract_coordinates(rng):
    h = rand_hermitian(rng, 4)
    for k, l, kind, p in entry_functionals(4):
        val = np.trace(p @ h).real
        expect = h[k, l].real if kind == "re" else h[k, l].imag
        assert val == pytest.approx(expect, abs=1e-13)


# --- problem validation ----------------------------------------------------


def test_problem_rejects_non_hermitian_coefficient():
    bad = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(ValueError, match="Hermitian"):
        SdpProblem((("X", 2),), {"X": bad}, (SdpConstraint({"X": eye_c(2)}, 1.0),))


def test_problem_rejects_unknown_block():
    with pytest.raises(ValueError, match="unknown block"):
        SdpProblem((("X", 2),), {}, (SdpConstraint({"Y": eye_c(2)}, 1.0),))


def test_problem_requires_constraints():
    with pytest.raises(ValueError, match="constraint"):
        SdpProblem((("X", 2),), {"X": eye_c(2)}, ())


def test_problem_rejects_side_mismatch():
    with pytest.raises(ValueError, match="side"):
        SdpProblem((("X", 2),), {"X": eye_c(3)}, (SdpConstraint({"X": eye_c(2)}, 1.0),))


# --- solve -----------------------------------------------------------------


def test_solve_largest_eigenvalue():
    sol = solve(trace_one_problem(np.diag([1.0, 3.0]).astype(complex)), 1e-8)
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(3.0, abs=1e-7)
    assert sol.primal_residual <= 1e-8


def test_solve_tol_range():
    p = trace_one_problem(eye_c(2))
    with pytest.raises(ValueError, match="tol"):
        solve(p, 1e-3)
    with pytest.raises(ValueError, match="tol"):
        solve(p, 0.0)


def test_solve_detects_infeasible():
    p = SdpProblem(
        (("X", 2),), {"X": eye_c(2)}, (SdpConstraint({"X": eye_c(2)}, -1.0),)
    )
    assert solve(p, 1e-8).status == "infeasible"


def test_solve_detects_unbounded():
    sz = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    p = SdpProblem((("X", 2),), {"X": eye_c(2)}, (SdpConstraint({"X": sz}, 0.0),))
    assert solve(p, 1e-8).status == "unbounded"


def test_solve_deterministic():
    c = np.array([[1.0, 0.5j], [-0.5j, 2.0]])
    p = trace_one_problem(c)
    s1 = solve(p, 1e-8)
    s2 = solve(p, 1e-8)
    assert s1.status == s2.status
    assert s1.primal_value == s2.primal_value
    assert s1.dual_value == s2.dual_value


def test_solution_contract(rng):
    for _ in range(5):
        c = rand_hermitian(rng, 4)
        sol = solve(trace_one_problem(c), 1e-8)
        assert sol.status == "optimal"
        assert sol.primal_residual <= 1e-8
        assert sol.gap <= 1e-7 * max(1.0, abs(sol.primal_value))
        w = np.linalg.eigvalsh(sol.blocks["X"])
        assert w[0] >= -1e-9
        # the optimum of this family is the top eigenvalue
        assert sol.primal_value == pytest.approx(
            float(np.linalg.eigvalsh(c)[-1]), abs=1e-6
        )


def test_weak_duality_direction(rng):
    # for a maximization primal, a feasible dual value can only sit above
    for _ in range(5):
        c = rand_hermitian(rng, 3)
        sol = solve(trace_one_problem(c), 1e-8)
        assert sol.primal_value <= sol.dual_value + 1e-9


def test_multiblock_solve():
    # two independent eigenvalue problems sharing one SdpProblem
    p = SdpProblem(
        (("X", 2), ("Y", 2)),
        {"X": np.diag([1.0, 2.0]).astype(complex), "Y": np.diag([5.0, 3.0]).astype(complex)},
        (
            SdpConstraint({"X": eye_c(2)}, 1.0),
            SdpConstraint({"Y": eye_c(2)}, 1.0),
        ),
    )
    sol = solve(p, 1e-8)
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(7.0, abs=1e-6)


# --- fidelity SDP ----------------------------------------------------------


def test_fidelity_sdp_self(rng):
    rho = rand_density(rng, (4,))
    assert fidelity_sdp(rho, rho) == pytest.approx(1.0, abs=1e-6)


def test_fidelity_sdp_orthogonal():
    zero = DensityMatrix.from_array(np.diag([1.0, 0.0]).astype(complex), (2,))
    one = DensityMatrix.from_array(np.diag([0.0, 1.0]).astype(complex), (2,))
    assert fidelity_sdp(zero, one) == pytest.approx(0.0, abs=1e-6)


def test_fidelity_sdp_pure_vs_mixed():
    zero = DensityMatrix.from_array(np.diag([1.0, 0.0]).astype(complex), (2,))
    mixed = DensityMatrix.from_array(np.eye(2) / 2, (2,))
    assert fidelity_sdp(zero, mixed) == pytest.approx(0.7071067811865476, abs=1e-7)


def test_fidelity_sdp_matches_eigen_oracle(rng):
    for _ in range(10):
        d = int(rng.integers(2, 9))
        rho = rand_density(rng, (d,))
        sigma = rand_density(rng, (d,))
        assert fidelity_sdp(rho, sigma) == pytest.approx(
            fidelity_eigen(rho, sigma), abs=1e-6
        )


def test_fidelity_sdp_symmetric(rng):
    rho = rand_density(rng, (3,))
    sigma = rand_density(rng, (3,))
    assert fidelity_sdp(rho, sigma) == pytest.approx(
        fidelity_sdp(sigma, rho), abs=1e-7
    )


def test_fidelity_sdp_dimension_mismatch():
    a = DensityMatrix.from_array(np.eye(2) / 2, (2,))
    b = DensityMatrix.from_array(np.eye(3) / 3, (3,))
    with pytest.raises(ValueError, match="mismatch"):
        fidelity_sdp(a, b)


# --- debug dump ------------------------------------------------------------


def test_dump_realified_mentions_structure():
    p = trace_one_problem(np.diag([1.0, 3.0]).astype(complex))
    text = dump_realified(p)
    assert "blocks: X:4" in text
    assert "constraints: 1" in text
    assert "rhs=2" in text
