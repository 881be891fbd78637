"""Dense complex matrices with tensor-factor metadata, and the standard
quantum-information primitives built on them.

Everything here is small and dense (total dimension at most a few hundred),
so the implementations favor clarity over asymptotics: reshape/einsum for
partial operations, eigendecompositions for functions of Hermitian matrices.
Partial operations never guess a tensor factorization; the factor dimensions
travel with the matrix and their absence is an error.

Logarithms are base 2 throughout, so entropies are in bits.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-10
PURITY_TOL = 1e-10

__all__ = [
    "ComplexMatrix",
    "DensityMatrix",
    "Permutation",
    "kron",
    "partial_trace",
    "partial_transpose",
    "permutation_operator",
    "embed_factors",
    "von_neumann_entropy",
    "mutual_information",
    "fidelity_eigen",
    "is_pure",
    "maximally_entangled",
    "two_qubit_schmidt",
    "classical_correlated",
    "product_zero_plus",
    "matrix_from_json",
    "matrix_to_json",
    "density_from_json",
]


def _as_complex_array(entries) -> np.ndarray:
    arr = np.array(entries, dtype=np.complex128, order="C")
    if arr.ndim != 2:
        raise ValueError(f"matrix entries must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError("matrix entries must be finite")
    return arr


@dataclass(frozen=True)
class ComplexMatrix:
    """A dense complex matrix, optionally annotated with tensor-factor dims.

    ``dims`` lists the local dimensions of the tensor factors of the row
    (and, for square matrices, column) space; their product must equal the
    number of rows.  The entries array is made read-only so instances can be
    shared freely.
    """

    entries: np.ndarray
    dims: tuple[int, ...] | None = None

    def __post_init__(self):
        arr = _as_complex_array(self.entries)
        if self.dims is not None:
            dims = tuple(int(d) for d in self.dims)
            if any(d < 1 for d in dims):
                raise ValueError(f"factor dimensions must be positive, got {dims}")
            if math.prod(dims) != arr.shape[0]:
                raise ValueError(
                    f"product of dims {dims} is {math.prod(dims)}, "
                    f"but the matrix has {arr.shape[0]} rows"
                )
            object.__setattr__(self, "dims", dims)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def require_dims(self) -> tuple[int, ...]:
        """Return the factor dimensions, failing loudly if absent."""
        if self.dims is None:
            raise ValueError(
                "operation needs tensor-factor dims but the matrix carries none"
            )
        return self.dims

    def dagger(self) -> "ComplexMatrix":
        return ComplexMatrix(self.entries.conj().T, self.dims if self.is_square else None)


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit trace, positive semidefinite.

    Construction fails with a message naming every violated invariant and the
    measured violation, so malformed inputs are diagnosable at the boundary.
    """

    mat: ComplexMatrix

    def __post_init__(self):
        m = self.mat
        if not m.is_square:
            raise ValueError(f"density matrix must be square, got {m.rows}x{m.cols}")
        m.require_dims()
        arr = m.entries
        failures = []
        herm = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
        if herm > HERMITICITY_TOL:
            failures.append(
                f"Hermiticity violation {herm:.3e} exceeds {HERMITICITY_TOL:g}"
            )
        tr_dev = abs(float(np.trace(arr).real) - 1.0) + abs(float(np.trace(arr).imag))
        if tr_dev > TRACE_TOL:
            failures.append(f"trace deviates from 1 by {tr_dev:.3e} (tol {TRACE_TOL:g})")
        if not failures:
            min_eig = float(np.linalg.eigvalsh((arr + arr.conj().T) / 2)[0])
            if min_eig < -PSD_TOL:
                failures.append(
                    f"smallest eigenvalue {min_eig:.3e} is below -{PSD_TOL:g}"
                )
        if failures:
            raise ValueError("not a valid density matrix: " + "; ".join(failures))

    @classmethod
    def from_array(cls, entries, dims: Sequence[int]) -> "DensityMatrix":
        return cls(ComplexMatrix(entries, tuple(dims)))

    @property
    def entries(self) -> np.ndarray:
        return self.mat.entries

    @property
    def dims(self) -> tuple[int, ...]:
        return self.mat.dims  # type: ignore[return-value]

    @property
    def dim(self) -> int:
        return self.mat.rows


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``n`` tensor factors, 0-indexed by images.

    ``images[j]`` is where factor ``j`` is sent.
    """

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        n = len(images)
        if sorted(images) != list(range(n)):
            raise ValueError(f"images {images} are not a permutation of 0..{n - 1}")
        object.__setattr__(self, "images", images)

    @property
    def size(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j]

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for j, i in enumerate(self.images):
            inv[i] = j
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Return self after other: (self.compose(other))(j) = self(other(j))."""
        if self.size != other.size:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[other.images[j]] for j in range(self.size)))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def all_of(cls, n: int):
        """All n! permutations of n factors."""
        for images in itertools.permutations(range(n)):
            yield cls(images)


# ---------------------------------------------------------------------------
# structural operations


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    entries = np.kron(a.entries, b.entries)
    dims = None
    if a.is_square and b.is_square:
        da = a.dims if a.dims is not None else (a.rows,)
        db = b.dims if b.dims is not None else (b.rows,)
        dims = da + db
    return ComplexMatrix(entries, dims)


def _check_factor_indices(indices: Iterable[int], n: int, what: str) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise ValueError(f"{what} indices contain duplicates: {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise ValueError(f"{what} index {i} out of range for {n} factors")
    return idx


def partial_trace_array(arr: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace on a raw array; ``keep`` lists the factors retained."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(_check_factor_indices(keep, n, "keep"))
    tensor = arr.reshape(dims + dims)
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise ValueError("too many tensor factors for the einsum formulation")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row + col) + "->" + out, tensor)
    d_keep = math.prod(dims[i] for i in keep)
    return np.ascontiguousarray(reduced.reshape(d_keep, d_keep))


def partial_trace(m: ComplexMatrix, keep: Iterable[int]) -> ComplexMatrix:
    """Trace out all factors not listed in ``keep`` (kept order preserved)."""
    if not m.is_square:
        raise ValueError("partial trace needs a square matrix")
    dims = m.require_dims()
    keep = sorted(_check_factor_indices(keep, len(dims), "keep"))
    reduced = partial_trace_array(m.entries, dims, keep)
    return ComplexMatrix(reduced, tuple(dims[i] for i in keep))


def partial_transpose_array(arr: np.ndarray, dims: Sequence[int], sys: int) -> np.ndarray:
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    (sys,) = _check_factor_indices([sys], n, "transpose")
    tensor = arr.reshape(dims + dims)
    tensor = np.swapaxes(tensor, sys, n + sys)
    d = math.prod(dims)
    return np.ascontiguousarray(tensor.reshape(d, d))


def partial_transpose(m: ComplexMatrix, sys: int) -> ComplexMatrix:
    """Transpose a single tensor factor in place."""
    if not m.is_square:
        raise ValueError("partial transpose needs a square matrix")
    dims = m.require_dims()
    return ComplexMatrix(partial_transpose_array(m.entries, dims, sys), dims)


def permutation_operator(p: Permutation, local_dim: int) -> ComplexMatrix:
    """Unitary that permutes ``p.size`` factors of equal dimension.

    Acting on product basis states it sends |j_0 ... j_{n-1}> to the state
    whose i-th slot holds j at the preimage of i, so conjugation by the
    operator realizes the factor relabeling given by ``p``.
    """
    n = p.size
    d = int(local_dim)
    if d < 1:
        raise ValueError(f"local dimension must be positive, got {d}")
    dims = (d,) * n
    total = d**n
    inv = p.inverse()
    w = np.zeros((total, total), dtype=np.complex128)
    for col, js in enumerate(np.ndindex(*dims)):
        ks = tuple(js[inv.images[i]] for i in range(n))
        w[np.ravel_multi_index(ks, dims), col] = 1.0
    return ComplexMatrix(w, dims)


def embed_factors(
    op: np.ndarray,
    op_dims: Sequence[int],
    positions: Sequence[int],
    total_dims: Sequence[int],
) -> np.ndarray:
    """Place an operator on selected tensor factors, identity elsewhere.

    ``op`` acts on the factors listed in ``positions`` (in that order) of a
    system with factor dimensions ``total_dims``.
    """
    op_dims = tuple(int(d) for d in op_dims)
    total_dims = tuple(int(d) for d in total_dims)
    n = len(total_dims)
    positions = list(_check_factor_indices(positions, n, "position"))
    if len(positions) != len(op_dims):
        raise ValueError("positions and op_dims must have the same length")
    for p, d in zip(positions, op_dims):
        if total_dims[p] != d:
            raise ValueError(
                f"operator factor of dimension {d} does not fit slot {p} "
                f"of dimension {total_dims[p]}"
            )
    rest = [i for i in range(n) if i not in positions]
    rest_dim = math.prod(total_dims[i] for i in rest)
    big = np.kron(op, np.eye(rest_dim))
    order = positions + rest
    tens_dims = [total_dims[i] for i in order]
    t = big.reshape(tens_dims + tens_dims)
    perm = [order.index(i) for i in range(n)]
    t = np.transpose(t, perm + [n + q for q in perm])
    total = math.prod(total_dims)
    return np.ascontiguousarray(t.reshape(total, total))


# ---------------------------------------------------------------------------
# spectral functions


def _clamped_eigvals(arr: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh((arr + arr.conj().T) / 2)
    return np.clip(w, 0.0, None)


def psd_sqrt(arr: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (eigenvalues clamped)."""
    h = (arr + arr.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def entropy_from_array(arr: np.ndarray) -> float:
    w = _clamped_eigvals(arr)
    nz = w[w > 0]
    if nz.size == 0:
        return 0.0
    return max(float(-(nz * np.log2(nz)).sum()), 0.0)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits; zero eigenvalues contribute nothing."""
    return entropy_from_array(rho.entries)


def mutual_information(
    rho: DensityMatrix,
    cut: tuple[Sequence[int], Sequence[int]] | None = None,
) -> float:
    """H(A) + H(B) - H(AB) across a bipartition of the tensor factors.

    For a two-factor state the cut defaults to first factor versus second;
    with more factors an explicit bipartition is required.
    """
    dims = rho.dims
    n = len(dims)
    if cut is None:
        if n != 2:
            raise ValueError(
                f"state has {n} factors; an explicit bipartition is required"
            )
        cut = ((0,), (1,))
    part_a = _check_factor_indices(cut[0], n, "cut")
    part_b = _check_factor_indices(cut[1], n, "cut")
    if sorted(part_a + part_b) != list(range(n)):
        raise ValueError(
            f"cut {cut} does not partition the {n} tensor factors"
        )
    arr = rho.entries
    ha = entropy_from_array(partial_trace_array(arr, dims, part_a))
    hb = entropy_from_array(partial_trace_array(arr, dims, part_b))
    hab = entropy_from_array(arr)
    return ha + hb - hab


def fidelity_from_arrays(rho: np.ndarray, sigma: np.ndarray) -> float:
    a = psd_sqrt(rho)
    m = a @ sigma @ a
    w = _clamped_eigvals(m)
    f = float(np.sqrt(w).sum())
    return min(1.0, max(0.0, f))


def fidelity_eigen(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)) via eigendecomposition."""
    if rho.dim != sigma.dim:
        raise ValueError(
            f"dimension mismatch: {rho.dim} vs {sigma.dim}"
        )
    return fidelity_from_arrays(rho.entries, sigma.entries)


def is_pure(rho: DensityMatrix, tol: float = PURITY_TOL) -> bool:
    """True when all but the largest eigenvalue sit below ``tol``."""
    w = np.linalg.eigvalsh((rho.entries + rho.entries.conj().T) / 2)
    return bool(w[-2] <= tol) if w.size > 1 else True


def pure_vector(rho: DensityMatrix, tol: float = PURITY_TOL) -> np.ndarray:
    """Unit vector of a pure state; rejects mixed input."""
    h = (rho.entries + rho.entries.conj().T) / 2
    w, v = np.linalg.eigh(h)
    if w.size > 1 and w[-2] > tol:
        raise ValueError(
            f"state is not pure: second-largest eigenvalue {w[-2]:.3e} exceeds {tol:g}"
        )
    vec = v[:, -1]
    # fix the global phase so the largest-magnitude entry is real positive
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    return vec / phase


# ---------------------------------------------------------------------------
# built-in states


def maximally_entangled(d: int) -> DensityMatrix:
    """(1/sqrt(d)) sum_i |ii> as a density matrix on d x d."""
    d = int(d)
    if d < 2:
        raise ValueError(f"need local dimension >= 2, got {d}")
    vec = np.zeros(d * d, dtype=np.complex128)
    for i in range(d):
        vec[i * d + i] = 1.0
    vec /= np.sqrt(d)
    return DensityMatrix.from_array(np.outer(vec, vec.conj()), (d, d))


def two_qubit_schmidt(theta: float) -> DensityMatrix:
    """cos(theta)|00> + sin(theta)|11> as a two-qubit density matrix."""
    vec = np.zeros(4, dtype=np.complex128)
    vec[0] = np.cos(theta)
    vec[3] = np.sin(theta)
    return DensityMatrix.from_array(np.outer(vec, vec.conj()), (2, 2))


def classical_correlated() -> DensityMatrix:
    """(|00><00| + |11><11|)/2, the maximally correlated classical state."""
    arr = np.zeros((4, 4), dtype=np.complex128)
    arr[0, 0] = 0.5
    arr[3, 3] = 0.5
    return DensityMatrix.from_array(arr, (2, 2))


def product_zero_plus() -> DensityMatrix:
    """|0><0| tensor |+><+|, a correlation-free product state."""
    zero = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
    plus = np.full((2, 2), 0.5, dtype=np.complex128)
    return DensityMatrix.from_array(np.kron(zero, plus), (2, 2))


# ---------------------------------------------------------------------------
# JSON interchange

# Matrix files are {"dims": [...], "re": [[...]], "im": [[...]]}; "im" may be
# omitted for real matrices.  Parsing reports the offending field by name.


def matrix_from_json(obj) -> ComplexMatrix:
    if not isinstance(obj, dict):
        raise ValueError("matrix JSON must be an object")
    if "re" not in obj:
        raise ValueError('matrix JSON is missing the "re" field')
    try:
        re = np.array(obj["re"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValueError(f'field "re" is not a numeric table: {exc}') from exc
    if re.ndim != 2:
        raise ValueError(f'field "re" must be a 2-d table, got shape {re.shape}')
    if "im" in obj and obj["im"] is not None:
        try:
            im = np.array(obj["im"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ValueError(f'field "im" is not a numeric table: {exc}') from exc
        if im.shape != re.shape:
            raise ValueError(
                f'field "im" has shape {im.shape} but "re" has shape {re.shape}'
            )
    else:
        im = np.zeros_like(re)
    dims = None
    if "dims" in obj and obj["dims"] is not None:
        raw = obj["dims"]
        if not isinstance(raw, (list, tuple)) or not all(
            isinstance(d, int) and d > 0 for d in raw
        ):
            raise ValueError(f'field "dims" must be a list of positive integers, got {raw!r}')
        dims = tuple(raw)
        if math.prod(dims) != re.shape[0]:
            raise ValueError(
                f'field "dims" {list(dims)} has product {math.prod(dims)}, '
                f"but the matrix has {re.shape[0]} rows"
            )
    return ComplexMatrix(re + 1j * im, dims)


def matrix_to_json(m: ComplexMatrix) -> dict:
    out = {
        "dims": list(m.dims) if m.dims is not None else None,
        "re": m.entries.real.tolist(),
        "im": m.entries.imag.tolist(),
    }
    if out["dims"] is None:
        del out["dims"]
    return out


def density_from_json(obj) -> DensityMatrix:
    m = matrix_from_json(obj)
    if m.dims is None:
        raise ValueError(
            'field "dims" is required for a state (partial operations never guess)'
        )
    return DensityMatrix(m)
