"""Optimal broadcasting of bipartite states by one local channel.

A broadcaster is a channel from one system A to n copies A_1..A_n, carried
here as its Choi matrix on (A, A_1..A_n).  The central objects are
semidefinite programs for the best achievable fidelity between the input
state and each receiver's share: the general program couples a fidelity
block to the broadcast marginal through the channel variable, the pure-state
program collapses to a linear objective in the Choi variable alone (whose
equality multipliers assemble an explicit dual certificate), and the
ensemble program shares one channel across several fidelity blocks.

Permutation symmetry of the receivers is what makes these programs small:
averaging any feasible channel over receiver relabelings never lowers the
objective, so the Choi variable can be confined to the fixed-point subspace
of the relabeling action.  The solver works with PSD blocks and linear
equalities only, so membership in the fixed subspace is imposed by zeroing
the coordinates along an orthonormal basis of its orthogonal complement;
an entry-anchored formulation of the same constraint is kept behind
symmetry_mode="explicit" for cross-checking.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sdpcore
from .qmat import (
    ComplexMatrix,
    DensityMatrix,
    Permutation,
    embed_factors,
    fidelity_eigen,
    is_pure,
    matrix_from_json,
    matrix_to_json,
    maximally_entangled,
    partial_trace_array,
    partial_transpose_array,
)
from .sdpcore import SdpConstraint, SdpProblem, SdpSolverError, embed_block, entry_functionals

CP_TOL = 1e-9
TP_TOL = 1e-8
SYMMETRY_TOL = 1e-8
MAX_PARTS = 5
REALIFIED_SIDE_GUARD = 4096

__all__ = [
    "ChoiMatrix",
    "BroadcastResult",
    "Ensemble",
    "SizeLimitError",
    "identity_choi",
    "apply_channel",
    "symmetrize_choi",
    "unilocal_fidelity",
    "unilocal_fidelity_pure_dual",
    "pure_dual_certificate",
    "unilocal_fidelity_piani_variant",
    "uqcm_choi",
    "xi_choi",
    "ensemble_fidelity",
    "broadcasting_power_sampled",
    "broadcasting_power_detail",
    "random_pure_state",
    "random_mixed_state",
    "choi_to_json",
    "choi_from_json",
]


class SizeLimitError(RuntimeError):
    """The requested program exceeds the dense-solve size guard."""


@dataclass(frozen=True)
class ChoiMatrix:
    """Channel representation on (input, receiver_1, ..., receiver_n).

    Valid instances are completely positive (smallest eigenvalue at least
    -1e-9) and trace preserving (tracing out every receiver leaves the
    identity on the input, entrywise within 1e-8); violations are reported
    with their measured size.
    """

    mat: ComplexMatrix

    def __post_init__(self):
        m = self.mat
        if not m.is_square:
            raise ValueError(f"Choi matrix must be square, got {m.rows}x{m.cols}")
        dims = m.require_dims()
        if len(dims) < 2:
            raise ValueError(
                "Choi matrix needs an input factor and at least one receiver factor"
            )
        arr = m.entries
        herm = float(np.max(np.abs(arr - arr.conj().T)))
        if herm > 1e-9:
            raise ValueError(
                f"Choi matrix is not Hermitian: max |J - J^dag| = {herm:.3e}"
            )
        min_eig = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0])
        if min_eig < -CP_TOL:
            raise ValueError(
                f"channel is not completely positive: smallest Choi eigenvalue "
                f"{min_eig:.3e} is below -{CP_TOL:g}"
            )
        marginal = partial_trace_array(arr, dims, keep=[0])
        tp_dev = float(np.max(np.abs(marginal - np.eye(dims[0]))))
        if tp_dev > TP_TOL:
            raise ValueError(
                f"channel is not trace preserving: input marginal deviates from "
                f"identity by {tp_dev:.3e} (tol {TP_TOL:g})"
            )

    @classmethod
    def from_array(cls, entries, in_dim: int, out_dims: Sequence[int]) -> "ChoiMatrix":
        dims = (int(in_dim),) + tuple(int(d) for d in out_dims)
        return cls(ComplexMatrix(entries, dims))

    @property
    def entries(self) -> np.ndarray:
        return self.mat.entries

    @property
    def in_dim(self) -> int:
        return self.mat.dims[0]  # type: ignore[index]

    @property
    def out_dims(self) -> tuple[int, ...]:
        return self.mat.dims[1:]  # type: ignore[index]

    @property
    def n_out(self) -> int:
        return len(self.out_dims)


@dataclass(frozen=True)
class BroadcastResult:
    """Solved broadcasting program: optimal value, optimizer channel, and
    the dual value whose agreement certifies optimality."""

    value: float
    choi: ChoiMatrix
    dual_value: float
    gap: float

    @property
    def certified(self) -> bool:
        return self.gap <= 1e-6


@dataclass(frozen=True)
class Ensemble:
    """Finite list of (probability, state) pairs on a common system."""

    items: tuple[tuple[float, DensityMatrix], ...]

    def __post_init__(self):
        items = tuple((float(p), rho) for p, rho in self.items)
        if not items:
            raise ValueError("ensemble must contain at least one state")
        for p, _ in items:
            if p < -1e-12:
                raise ValueError(f"negative probability {p}")
        total = sum(p for p, _ in items)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1 (tol 1e-9)")
        d0 = items[0][1].dim
        for _, rho in items:
            if rho.dim != d0:
                raise ValueError(
                    f"ensemble states must share a dimension, got {rho.dim} and {d0}"
                )
        object.__setattr__(self, "items", items)

    @property
    def dim(self) -> int:
        return self.items[0][1].dim


# ---------------------------------------------------------------------------
# channels and their action


def identity_choi(d: int) -> ChoiMatrix:
    """Choi matrix of the identity channel: the unnormalized maximally
    entangled projector sum_ij |ii><jj|."""
    d = int(d)
    arr = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            arr[i * d + i, j * d + j] = 1.0
    return ChoiMatrix.from_array(arr, d, (d,))


def _reorder_factors(arr: np.ndarray, dims: Sequence[int], order: Sequence[int]):
    """Relabel tensor factors; order[i] is the source factor placed at slot i."""
    dims = tuple(dims)
    n = len(dims)
    t = arr.reshape(dims + dims)
    perm = list(order) + [n + j for j in order]
    t = np.transpose(t, perm)
    d = math.prod(dims)
    return np.ascontiguousarray(t.reshape(d, d)), tuple(dims[j] for j in order)


def _clean_state(arr: np.ndarray, dims, context: str) -> DensityMatrix:
    """Wrap a numerically near-valid state, absorbing channel-level noise.

    Hermitizes, clamps eigenvalues at zero, and renormalizes the trace, but
    only when the deviations are consistent with the Choi tolerances;
    anything larger is an error carrying the measured violation.
    """
    herm = float(np.max(np.abs(arr - arr.conj().T)))
    if herm > 1e-8:
        raise ValueError(f"{context}: output Hermiticity violation {herm:.3e}")
    h = (arr + arr.conj().T) / 2
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > 1e-7:
        raise ValueError(f"{context}: output trace {tr} is not 1 (dev {abs(tr-1):.3e})")
    w, v = np.linalg.eigh(h)
    if w[0] < -1e-8:
        raise ValueError(f"{context}: output eigenvalue {w[0]:.3e} below -1e-8")
    w = np.clip(w, 0.0, None)
    h = (v * w) @ v.conj().T
    h /= float(np.trace(h).real)
    return DensityMatrix.from_array(h, dims)


def apply_channel(j: ChoiMatrix, rho: DensityMatrix, factor: int = 0) -> DensityMatrix:
    """Act with the channel on one tensor factor of a state.

    The acted factor is replaced, in place, by the channel's receiver
    factors; remaining factors ride along untouched.  With the identity
    channel this is an exact round trip, which pins down the convention
    tying a Choi matrix J to its channel: the output is the input-transposed
    J contracted against the state on the input factor.
    """
    dims = rho.dims
    n_fac = len(dims)
    if not 0 <= factor < n_fac:
        raise ValueError(f"factor {factor} out of range for {n_fac} factors")
    da = j.in_dim
    if dims[factor] != da:
        raise ValueError(
            f"channel input dimension {da} does not match factor {factor} "
            f"of dimension {dims[factor]}"
        )
    n = j.n_out
    rest = [i for i in range(n_fac) if i != factor]
    rest_dims = tuple(dims[i] for i in rest)
    arr1, _ = _reorder_factors(rho.entries, dims, [factor] + rest)
    lift_dims = (da,) + j.out_dims + rest_dims
    lift = np.kron(j.entries, np.eye(int(math.prod(rest_dims)) if rest_dims else 1))
    lift_t = partial_transpose_array(lift, lift_dims, 0)
    rho_lift = embed_factors(
        arr1, (da,) + rest_dims, [0] + list(range(n + 1, n + 1 + len(rest))), lift_dims
    )
    out = partial_trace_array(lift_t @ rho_lift, lift_dims, keep=range(1, len(lift_dims)))
    # receivers currently lead; slot them where the acted factor sat
    cur = [("out", k) for k in range(n)] + [("orig", i) for i in rest]
    tgt = (
        [("orig", i) for i in range(factor)]
        + [("out", k) for k in range(n)]
        + [("orig", i) for i in range(factor + 1, n_fac)]
    )
    order = [cur.index(t) for t in tgt]
    out2, _ = _reorder_factors(out, j.out_dims + rest_dims, order)
    final_dims = dims[:factor] + j.out_dims + dims[factor + 1 :]
    return _clean_state(out2, final_dims, "apply_channel")


def broadcast_marginal(j: ChoiMatrix, rho: DensityMatrix, recipient: int = 0) -> DensityMatrix:
    """State shared by one receiver and the untouched side after broadcasting."""
    if len(rho.dims) != 2:
        raise ValueError("broadcast input must have exactly two factors")
    if not 0 <= recipient < j.n_out:
        raise ValueError(f"recipient {recipient} out of range for {j.n_out} receivers")
    tau = apply_channel(j, rho, factor=0)
    return DensityMatrix(
        ComplexMatrix(
            partial_trace_array(tau.entries, tau.dims, keep=[recipient, j.n_out]),
            (tau.dims[recipient], tau.dims[j.n_out]),
        )
    )


# ---------------------------------------------------------------------------
# receiver-permutation symmetry


def _conjugate_receivers(arr: np.ndarray, dims, perm: Permutation) -> np.ndarray:
    """Conjugate by the unitary permuting the receiver factors (input fixed)."""
    images = perm.images
    order = [0] + [1 + images[i] for i in range(len(images))]
    out, _ = _reorder_factors(arr, dims, order)
    return out


def _reynolds(arr: np.ndarray, dims) -> np.ndarray:
    """Average over all receiver relabelings; the orthogonal projector onto
    the symmetric-channel subspace."""
    n = len(dims) - 1
    acc = np.zeros_like(arr)
    count = 0
    for perm in Permutation.all_of(n):
        acc += _conjugate_receivers(arr, dims, perm)
        count += 1
    return acc / count


@functools.lru_cache(maxsize=32)
def _sym_projector_matrix(d: int, n: int) -> np.ndarray:
    """Projector onto the symmetric subspace of n receiver factors of dim d."""
    total = d**n
    acc = np.zeros((total, total), dtype=complex)
    dims = (d,) * n
    for perm in Permutation.all_of(n):
        images = perm.images
        w = np.zeros((total, total), dtype=complex)
        inv = perm.inverse()
        for col, js in enumerate(np.ndindex(*dims)):
            ks = tuple(js[inv.images[i]] for i in range(n))
            w[np.ravel_multi_index(ks, dims), col] = 1.0
        acc += w
    return acc / math.factorial(n)


def _compress_receivers(arr: np.ndarray, dims) -> np.ndarray:
    """Compress onto the symmetric subspace of the receivers (both sides)."""
    d = dims[1]
    n = len(dims) - 1
    pi = embed_factors(_sym_projector_matrix(d, n), (d,) * n, list(range(1, n + 1)), dims)
    return pi @ arr @ pi


def _hermitian_unit_basis(d: int) -> list[np.ndarray]:
    """Orthonormal basis of Hermitian d x d matrices under tr(AB)."""
    out = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    r = 1.0 / math.sqrt(2.0)
    for k in range(d):
        for l in range(k + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = r
            e[l, k] = r
            out.append(e)
            f = np.zeros((d, d), dtype=complex)
            f[k, l] = 1.0j * r
            f[l, k] = -1.0j * r
            out.append(f)
    return out


def _herm_coords(mats: list[np.ndarray], side: int) -> np.ndarray:
    """Real coordinates of Hermitian matrices in the orthonormal unit basis."""
    iu = np.triu_indices(side, k=1)
    cols = []
    for m in mats:
        cols.append(
            np.concatenate(
                [
                    np.diag(m).real,
                    math.sqrt(2.0) * m[iu].real,
                    math.sqrt(2.0) * m[iu].imag,
                ]
            )
        )
    return np.stack(cols, axis=1)


def _herm_from_coords(vec: np.ndarray, side: int) -> np.ndarray:
    iu = np.triu_indices(side, k=1)
    n_off = iu[0].size
    m = np.zeros((side, side), dtype=complex)
    m[np.diag_indices(side)] = vec[:side]
    upper = (vec[side : side + n_off] + 1j * vec[side + n_off :]) / math.sqrt(2.0)
    m[iu] = upper
    m[(iu[1], iu[0])] = upper.conj()
    return m


@functools.lru_cache(maxsize=32)
def _fixed_complement_basis(in_dim: int, d: int, n: int, variant: str):
    """Orthonormal Hermitian basis of the orthogonal complement of the
    symmetric-channel fixed subspace on (input, receivers).

    variant "standard" uses the relabeling average; "compressed" the
    two-sided symmetric-subspace compression, whose fixed space is smaller.
    """
    dims = (in_dim,) + (d,) * n
    side = in_dim * d**n
    project = _reynolds if variant == "standard" else _compress_receivers
    basis = []
    for a in _hermitian_unit_basis(side):
        basis.append(project(a, dims))
    # the projector matrix in orthonormal coordinates; eigenvalue 1 marks the
    # fixed subspace, eigenvalue 0 its complement
    pmat = _herm_coords(basis, side)
    pmat = (pmat + pmat.T) / 2
    w, v = np.linalg.eigh(pmat)
    comp = [
        _herm_from_coords(v[:, i], side) for i in range(w.size) if w[i] < 0.5
    ]
    for c in comp:
        c.setflags(write=False)
    return tuple(comp)


def symmetrize_choi(j: ChoiMatrix) -> ChoiMatrix:
    """Average the channel over all receiver relabelings.

    Idempotent; preserves Hermiticity, PSD-ness, trace, and trace
    preservation, and fixes exactly the symmetric channels.
    """
    dims = j.mat.dims
    out_dims = set(j.out_dims)
    if len(out_dims) != 1:
        raise ValueError(f"receiver dimensions must all match, got {j.out_dims}")
    return ChoiMatrix(ComplexMatrix(_reynolds(j.entries, dims), dims))


def is_symmetric_choi(j: ChoiMatrix, tol: float = SYMMETRY_TOL) -> bool:
    if len(set(j.out_dims)) != 1:
        return False
    dev = float(np.max(np.abs(j.entries - _reynolds(j.entries, j.mat.dims))))
    return dev <= tol


# ---------------------------------------------------------------------------
# program assembly

# The broadcast marginal seen by receiver 1 and the untouched side B is a
# linear map of the Choi variable.  Each real coordinate functional of that
# marginal (and the pure-state objective, which is one fixed functional of
# it) pulls back to a Hermitian coefficient on the Choi space:
#   tr(P tau_hat) = tr(J tr_B[ (rho_lift P_lift)^{T_in} ]).


def _marginal_coefficient(
    p: np.ndarray, rho_arr: np.ndarray, da: int, db: int, n: int
) -> np.ndarray:
    full_dims = (da,) * (n + 1) + (db,)
    rho_lift = embed_factors(rho_arr, (da, db), [0, n + 1], full_dims)
    p_lift = embed_factors(p, (da, db), [1, n + 1], full_dims)
    prod = partial_transpose_array(rho_lift @ p_lift, full_dims, 0)
    raw = partial_trace_array(prod, full_dims, keep=range(n + 1))
    return (raw + raw.conj().T) / 2


def _tp_constraints(da: int, n: int) -> list[SdpConstraint]:
    j_dims = (da,) * (n + 1)
    out = []
    for h in _hermitian_unit_basis(da):
        coeff = embed_factors(h, (da,), [0], j_dims)
        out.append(SdpConstraint({"J": coeff}, float(np.trace(h).real)))
    return out


def _symmetry_constraints(da: int, d: int, n: int, variant: str, mode: str):
    if mode == "subspace":
        comp = _fixed_complement_basis(da, d, n, variant)
        return [SdpConstraint({"J": b}, 0.0) for b in comp]
    if mode != "explicit":
        raise ValueError(f"unknown symmetry_mode {mode!r}")
    # entry-anchored fallback: pin J - avg(J) entrywise, rank-filtered down
    # to an independent subset
    dims = (da,) + (d,) * n
    side = da * d**n
    project = _reynolds if variant == "standard" else _compress_receivers
    candidates = []
    for k, l, kind, p in entry_functionals(side):
        img = p - project(p, dims)
        if float(np.max(np.abs(img))) < 1e-14:
            continue
        candidates.append((img + img.conj().T) / 2)
    comp = _fixed_complement_basis(da, d, n, variant)
    rank = len(comp)
    coords = _herm_coords(candidates, side)
    _, _, piv = __import__("scipy.linalg", fromlist=["qr"]).qr(
        coords, mode="economic", pivoting=True
    )
    chosen = [candidates[i] for i in sorted(piv[:rank])]
    return [SdpConstraint({"J": b}, 0.0) for b in chosen]


def _guard_size(*realified_sides: int):
    total = sum(realified_sides)
    if total > REALIFIED_SIDE_GUARD:
        raise SizeLimitError(
            f"program size {total} exceeds the dense-solve guard "
            f"{REALIFIED_SIDE_GUARD} (realified block sides "
            f"{list(realified_sides)})"
        )


def _check_parts(n: int):
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 receivers, got {n}")
    if n > MAX_PARTS:
        raise ValueError(f"receiver count {n} exceeds the cap {MAX_PARTS}")
    return n


def _fidelity_objective(side: int) -> np.ndarray:
    c = np.zeros((2 * side, 2 * side), dtype=complex)
    c[:side, side:] = np.eye(side) / 2
    c[side:, :side] = np.eye(side) / 2
    return c


def _broadcast_problem(rho: DensityMatrix, n: int, variant: str, mode: str):
    da, db = rho.dims
    mj = da ** (n + 1)
    dab = da * db
    _guard_size(2 * mj, 4 * dab)
    constraints = []
    for k, l, kind, p in entry_functionals(dab):
        target = rho.entries[k, l]
        rhs = target.real if kind == "re" else target.imag
        constraints.append(SdpConstraint({"G": embed_block(p, 2 * dab, 0)}, rhs))
    for k, l, kind, p in entry_functionals(dab):
        coeff_j = _marginal_coefficient(p, rho.entries, da, db, n)
        constraints.append(
            SdpConstraint({"G": embed_block(p, 2 * dab, dab), "J": -coeff_j}, 0.0)
        )
    constraints.extend(_tp_constraints(da, n))
    constraints.extend(_symmetry_constraints(da, da, n, variant, mode))
    problem = SdpProblem(
        (("J", mj), ("G", 2 * dab)),
        {"G": _fidelity_objective(dab)},
        tuple(constraints),
    )
    return problem


def _finish_choi(j_arr: np.ndarray, da: int, n: int, variant: str) -> ChoiMatrix:
    dims = (da,) + (da,) * n
    h = (j_arr + j_arr.conj().T) / 2
    if variant == "standard":
        h = _reynolds(h, dims)
    else:
        h = _compress_receivers(h, dims)
        h = (h + h.conj().T) / 2
    return ChoiMatrix(ComplexMatrix(h, dims))


def _solved(problem: SdpProblem, tol: float, what: str) -> "sdpcore.SdpSolution":
    sol = sdpcore.solve(problem, tol)
    if sol.status != "optimal":
        raise SdpSolverError(f"{what} ended with status {sol.status!r}")
    return sol


def unilocal_fidelity(
    rho: DensityMatrix,
    n: int = 2,
    *,
    variant: str = "standard",
    symmetry_mode: str = "subspace",
    tol: float = 1e-9,
) -> BroadcastResult:
    """Best fidelity between a bipartite state and each receiver's share,
    over all symmetric channels broadcasting the first factor to n receivers.

    variant "standard" symmetrizes by relabeling-averaging; "compressed"
    restricts the channel to the symmetric receiver subspace, a smaller
    feasible set whose value can only be lower or equal.
    """
    if len(rho.dims) != 2:
        raise ValueError("state must have exactly two factors (copied, untouched)")
    n = _check_parts(n)
    if variant not in ("standard", "compressed"):
        raise ValueError(f"unknown variant {variant!r}")
    problem = _broadcast_problem(rho, n, variant, symmetry_mode)
    sol = _solved(problem, tol, "broadcast fidelity solve")
    da = rho.dims[0]
    choi = _finish_choi(sol.blocks["J"], da, n, variant)
    raw = float(sol.primal_value)
    return BroadcastResult(
        value=min(max(raw, 0.0), 1.0),
        choi=choi,
        dual_value=float(sol.dual_value),
        gap=float(abs(sol.primal_value - sol.dual_value)),
    )


def unilocal_fidelity_piani_variant(rho: DensityMatrix, n: int = 2, **kw) -> float:
    """Fidelity over channels supported on the symmetric receiver subspace.

    Never exceeds the relabeling-averaged value; the two agree on every case
    checked numerically, but only the ordering is guaranteed here.
    """
    return unilocal_fidelity(rho, n, variant="compressed", **kw).value


# --- pure-state route ------------------------------------------------------


@dataclass(frozen=True)
class PureDualCertificate:
    """Dual pair for the pure-state program.

    value is sqrt of the dual objective tr(y_mat); feasibility of
    (y_mat, z_mat) for the dual constraints can be checked directly via
    slack_eigenvalue, which is the largest eigenvalue of
    K - y_mat x I + z_mat - avg(z_mat) and must be <= 0 up to tolerance.
    """

    value: float
    primal_value: float
    dual_value: float
    gap: float
    y_mat: np.ndarray
    z_mat: np.ndarray
    objective: np.ndarray
    choi: ChoiMatrix

    @property
    def slack_eigenvalue(self) -> float:
        da = self.y_mat.shape[0]
        n = len(self.choi.out_dims)
        dims = (da,) + (da,) * n
        lifted_y = embed_factors(self.y_mat, (da,), [0], dims)
        slack = self.objective - lifted_y + self.z_mat - _reynolds(self.z_mat, dims)
        return float(np.linalg.eigvalsh((slack + slack.conj().T) / 2)[-1])


def _pure_problem(psi: DensityMatrix, n: int, mode: str):
    da, db = psi.dims
    mj = da ** (n + 1)
    _guard_size(2 * mj)
    objective = _marginal_coefficient(psi.entries, psi.entries, da, db, n)
    tp = _tp_constraints(da, n)
    sym = _symmetry_constraints(da, da, n, "standard", mode)
    problem = SdpProblem(
        (("J", mj),), {"J": objective}, tuple(tp) + tuple(sym)
    )
    return problem, objective, len(tp), sym


def pure_dual_certificate(
    psi: DensityMatrix, n: int = 2, *, symmetry_mode: str = "subspace", tol: float = 1e-9
) -> PureDualCertificate:
    """Solve the pure-state program and assemble the explicit dual pair.

    The objective of the pure-state program is tr(J K) with K the pullback
    of the input projector through the broadcast marginal, so the optimal
    value is the squared fidelity.  The trace-preservation multipliers
    assemble y_mat over an orthonormal Hermitian basis of the input space;
    the symmetry multipliers assemble z_mat in the fixed-subspace
    complement, where subtracting its relabeling average recovers exactly
    the combination the solver used.
    """
    if len(psi.dims) != 2:
        raise ValueError("state must have exactly two factors (copied, untouched)")
    if not is_pure(psi):
        w = np.linalg.eigvalsh(psi.entries)
        raise ValueError(
            f"state is not pure: second-largest eigenvalue {float(w[-2]):.3e} "
            "exceeds 1e-10"
        )
    n = _check_parts(n)
    problem, objective, n_tp, sym = _pure_problem(psi, n, symmetry_mode)
    sol = _solved(problem, tol, "pure-state broadcast solve")
    da = psi.dims[0]
    y = sol.dual_multipliers
    y_mat = np.zeros((da, da), dtype=complex)
    for coef, h in zip(y[:n_tp], _hermitian_unit_basis(da)):
        y_mat = y_mat + coef * h
    z_mat = np.zeros((da ** (n + 1), da ** (n + 1)), dtype=complex)
    for coef, con in zip(y[n_tp:], sym):
        z_mat = z_mat - coef * con.coeffs["J"]
    dual_sq = float(sol.dual_value)
    primal_sq = float(sol.primal_value)
    choi = _finish_choi(sol.blocks["J"], da, n, "standard")
    return PureDualCertificate(
        value=math.sqrt(max(dual_sq, 0.0)),
        primal_value=math.sqrt(min(max(primal_sq, 0.0), 1.0)),
        dual_value=math.sqrt(max(dual_sq, 0.0)),
        gap=abs(primal_sq - dual_sq),
        y_mat=y_mat,
        z_mat=z_mat,
        objective=objective,
        choi=choi,
    )


def unilocal_fidelity_pure_dual(psi: DensityMatrix, n: int = 2, **kw) -> float:
    """Dual-side optimum of the pure-state program: sqrt(tr y_mat).

    Refuses mixed input rather than silently generalizing.
    """
    return pure_dual_certificate(psi, n, **kw).value


# ---------------------------------------------------------------------------
# named channels


def uqcm_choi(d: int) -> ChoiMatrix:
    """Choi matrix of the optimal universal symmetric 1-to-2 cloner.

    Rank d, spanned by one vector per input basis state; each receiver sees
    the depolarizing channel (d+2)/(2d+2) rho + 1/(2d+2) I.
    """
    d = int(d)
    if d < 2:
        raise ValueError(f"need input dimension >= 2, got {d}")
    dims = (d, d, d)
    total = d**3
    norm = 1.0 / math.sqrt(2.0 * (d + 1))
    arr = np.zeros((total, total), dtype=complex)
    for i in range(d):
        v = np.zeros(total, dtype=complex)
        v[np.ravel_multi_index((i, i, i), dims)] = 2.0 * norm
        for jj in range(d):
            if jj == i:
                continue
            v[np.ravel_multi_index((jj, i, jj), dims)] += norm
            v[np.ravel_multi_index((jj, jj, i), dims)] += norm
        arr += np.outer(v, v.conj())
    return ChoiMatrix.from_array(arr, d, (d, d))


def xi_choi() -> ChoiMatrix:
    """Rank-one symmetric qubit broadcaster optimal for weakly entangled
    Schmidt-angle states: |v> = |000> + (|101> + |110>)/sqrt(2)."""
    v = np.zeros(8, dtype=complex)
    v[0] = 1.0
    v[5] = 1.0 / math.sqrt(2.0)
    v[6] = 1.0 / math.sqrt(2.0)
    return ChoiMatrix.from_array(np.outer(v, v.conj()), 2, (2, 2))


# ---------------------------------------------------------------------------
# ensembles


def ensemble_fidelity(
    eta: Ensemble,
    n: int = 2,
    *,
    symmetry_mode: str = "subspace",
    tol: float = 1e-9,
) -> BroadcastResult:
    """Best probability-weighted average fidelity when one symmetric channel
    broadcasts every state of the ensemble to n receivers."""
    n = _check_parts(n)
    da = eta.dim
    mj = da ** (n + 1)
    sides = [2 * mj] + [4 * da] * len(eta.items)
    _guard_size(*sides)
    blocks = [("J", mj)]
    objective = {}
    constraints = list(_tp_constraints(da, n))
    constraints.extend(_symmetry_constraints(da, da, n, "standard", symmetry_mode))
    for idx, (p_i, rho_i) in enumerate(eta.items):
        name = f"G{idx}"
        blocks.append((name, 2 * da))
        objective[name] = p_i * _fidelity_objective(da)
        arr = rho_i.entries
        for k, l, kind, p in entry_functionals(da):
            target = arr[k, l]
            rhs = target.real if kind == "re" else target.imag
            constraints.append(SdpConstraint({name: embed_block(p, 2 * da, 0)}, rhs))
        for k, l, kind, p in entry_functionals(da):
            coeff_j = _marginal_coefficient(p, arr, da, 1, n)
            constraints.append(
                SdpConstraint({name: embed_block(p, 2 * da, da), "J": -coeff_j}, 0.0)
            )
    problem = SdpProblem(tuple(blocks), objective, tuple(constraints))
    sol = _solved(problem, tol, "ensemble broadcast solve")
    choi = _finish_choi(sol.blocks["J"], da, n, "standard")
    raw = float(sol.primal_value)
    return BroadcastResult(
        value=min(max(raw, 0.0), 1.0),
        choi=choi,
        dual_value=float(sol.dual_value),
        gap=float(abs(sol.primal_value - sol.dual_value)),
    )


# ---------------------------------------------------------------------------
# broadcasting power


def random_pure_state(rng: np.random.Generator, dims) -> DensityMatrix:
    """Haar-random pure state: a normalized complex Gaussian vector."""
    d = int(math.prod(dims))
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return DensityMatrix.from_array(np.outer(v, v.conj()), dims)


def random_mixed_state(rng: np.random.Generator, dims) -> DensityMatrix:
    """Random mixed state: partial trace of a Haar pure state on a doubled
    environment."""
    d = int(math.prod(dims))
    env = d
    v = rng.standard_normal(d * env) + 1j * rng.standard_normal(d * env)
    v /= np.linalg.norm(v)
    full = np.outer(v, v.conj())
    arr = partial_trace_array(full, (d, env), keep=[0])
    return DensityMatrix.from_array(arr, dims)


@dataclass(frozen=True)
class PowerSample:
    kind: str
    fidelity: float


def broadcasting_power_detail(
    j: ChoiMatrix, samples: int, seed: int
) -> tuple[float, tuple[PowerSample, ...]]:
    """Sampled upper bound on the worst-case broadcast fidelity of a fixed
    symmetric two-receiver channel.

    Sample 0 is always the maximally entangled state; the rest alternate
    Haar-random pure and random mixed states on matching d x d systems.
    Deterministic for a fixed seed.
    """
    if int(samples) < 1:
        raise ValueError(f"need at least 1 sample, got {samples}")
    d = j.in_dim
    if j.out_dims != (d, d):
        raise ValueError(
            f"channel must have two receivers of the input dimension, "
            f"got input {d} and receivers {j.out_dims}"
        )
    if not is_symmetric_choi(j):
        raise ValueError(
            "channel is not symmetric under receiver relabeling "
            f"(deviation exceeds {SYMMETRY_TOL:g})"
        )
    rng = np.random.default_rng(int(seed))
    out = []
    states = [("mes", maximally_entangled(d))]
    for k in range(int(samples)):
        if k % 2 == 0:
            states.append(("pure", random_pure_state(rng, (d, d))))
        else:
            states.append(("mixed", random_mixed_state(rng, (d, d))))
    for kind, rho in states:
        marg = broadcast_marginal(j, rho)
        out.append(PowerSample(kind, fidelity_eigen(rho, marg)))
    best = min(s.fidelity for s in out)
    return best, tuple(out)


def broadcasting_power_sampled(j: ChoiMatrix, samples: int, seed: int) -> float:
    """Minimum broadcast fidelity over the sampled states; see
    broadcasting_power_detail."""
    value, _ = broadcasting_power_detail(j, samples, seed)
    return value


# ---------------------------------------------------------------------------
# JSON interchange


def choi_to_json(j: ChoiMatrix) -> dict:
    out = matrix_to_json(j.mat)
    out["kind"] = "choi"
    out["in_dim"] = j.in_dim
    out["out_dims"] = list(j.out_dims)
    return out


def choi_from_json(obj) -> ChoiMatrix:
    if not isinstance(obj, dict):
        raise ValueError("Choi JSON must be an object")
    if obj.get("kind") != "choi":
        raise ValueError('field "kind" must be "choi"')
    if "in_dim" not in obj or "out_dims" not in obj:
        raise ValueError('Choi JSON needs "in_dim" and "out_dims" fields')
    m = matrix_from_json(obj)
    in_dim = int(obj["in_dim"])
    out_dims = tuple(int(x) for x in obj["out_dims"])
    dims = (in_dim,) + out_dims
    if m.dims is not None and m.dims != dims:
        raise ValueError(
            f'field "dims" {list(m.dims)} disagrees with in_dim/out_dims {list(dims)}'
        )
    return ChoiMatrix.from_array(m.entries, in_dim, out_dims)
