"""Primal-dual interior-point solver for small dense semidefinite programs
over complex Hermitian matrix blocks.

A problem is stated as

    maximize    sum_b <C_b, X_b>
    subject to  sum_b <A_ib, X_b> = b_i   (i = 1..m, real equalities)
                X_b >= 0                  (Hermitian PSD blocks)

with Hermitian coefficient matrices and the real trace inner product
<A, X> = tr(AX).  At solve time every Hermitian coefficient H is embedded as
the real symmetric matrix [[Re H, -Im H], [Im H, Re H]] of twice the side.
The embedding doubles trace inner products, so constraint right-hand sides
are doubled going in and objective values halved coming out; the optimizer
is mapped back by averaging the two diagonal real blocks.

The iteration is path following with the HKM scaling direction and the
Mehrotra predictor-corrector, run from an infeasible scaled-identity start.
Each step eliminates down to the dense Schur complement
M_ij = tr(A_i X A_j S^-1), which is symmetric positive definite while the
constraints are linearly independent and is factored by Cholesky; a factor
failure surfaces as SdpSolverError rather than being absorbed by a silent
perturbation.

The dual of the problem above is  minimize b.y  subject to
sum_i y_i A_i - C = S >= 0, so any dual-feasible value upper-bounds the
primal optimum.  On an "optimal" exit the returned pair is polished past the
requested tol down to a relative gap of at most 1e-7 and a primal residual
of at most 1e-8 (the solution quality the rest of the package relies on);
tol only ever tightens this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .qmat import ComplexMatrix, DensityMatrix

COEFF_HERMITICITY_TOL = 1e-12
MAX_ITERATIONS = 200

__all__ = [
    "SdpConstraint",
    "SdpProblem",
    "SdpSolution",
    "SdpSolverError",
    "realify",
    "derealify",
    "solve",
    "fidelity_sdp",
    "dump_realified",
    "entry_functionals",
]


class SdpSolverError(RuntimeError):
    """The Newton system could not be solved reliably."""


def _as_coeff(arr, what: str) -> np.ndarray:
    a = np.array(arr, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if dev > COEFF_HERMITICITY_TOL:
        raise ValueError(
            f"{what} is not Hermitian: max |H - H^dag| = {dev:.3e} "
            f"exceeds {COEFF_HERMITICITY_TOL:g}"
        )
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SdpConstraint:
    """One equality sum_b <coeffs[b], X_b> = rhs; omitted blocks contribute 0."""

    coeffs: Mapping[str, np.ndarray]
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    """Validated immutable problem data.

    blocks: (name, complex side) pairs for the Hermitian PSD variables.
    objective: Hermitian coefficient per block name (missing means zero).
    constraints: at least one SdpConstraint.
    """

    blocks: tuple[tuple[str, int], ...]
    objective: Mapping[str, np.ndarray]
    constraints: tuple[SdpConstraint, ...]

    def __post_init__(self):
        blocks = tuple((str(nm), int(side)) for nm, side in self.blocks)
        if not blocks:
            raise ValueError("at least one block is required")
        names = [nm for nm, _ in blocks]
        if len(set(names)) != len(names):
            raise ValueError(f"block names must be unique, got {names}")
        sides = dict(blocks)
        for nm, side in blocks:
            if side < 1:
                raise ValueError(f"block {nm!r} has side {side} < 1")
        objective = {}
        for nm, coeff in dict(self.objective).items():
            if nm not in sides:
                raise ValueError(f"objective references unknown block {nm!r}")
            a = _as_coeff(coeff, f"objective coefficient for block {nm!r}")
            if a.shape[0] != sides[nm]:
                raise ValueError(
                    f"objective coefficient for block {nm!r} has side "
                    f"{a.shape[0]}, expected {sides[nm]}"
                )
            objective[nm] = a
        constraints = tuple(self.constraints)
        if not constraints:
            raise ValueError("at least one constraint is required")
        checked = []
        for i, con in enumerate(constraints):
            coeffs = {}
            for nm, coeff in dict(con.coeffs).items():
                if nm not in sides:
                    raise ValueError(
                        f"constraint {i} references unknown block {nm!r}"
                    )
                a = _as_coeff(coeff, f"constraint {i} coefficient for block {nm!r}")
                if a.shape[0] != sides[nm]:
                    raise ValueError(
                        f"constraint {i} coefficient for block {nm!r} has side "
                        f"{a.shape[0]}, expected {sides[nm]}"
                    )
                coeffs[nm] = a
            checked.append(SdpConstraint(coeffs, float(con.rhs)))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "constraints", tuple(checked))


@dataclass
class SdpSolution:
    """Solve result.

    primal_residual and dual_residual are relative norms on the complex
    scale.  When status is "optimal" the primal residual is at most 1e-8 and
    |primal_value - dual_value| <= 1e-7 * max(1, |primal_value|); other
    statuses carry the best iterate found and its residuals.
    """

    status: str
    primal_value: float
    dual_value: float
    blocks: dict[str, np.ndarray]
    dual_multipliers: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)


def realify(h) -> np.ndarray:
    """Embed a Hermitian matrix as [[Re h, -Im h], [Im h, Re h]].

    The output is real symmetric with the eigenvalues of h doubled in
    multiplicity, and tr(out) = 2 tr(h).
    """
    arr = h.entries if isinstance(h, ComplexMatrix) else np.asarray(h, dtype=complex)
    _as_coeff(arr, "realify input")
    re, im = arr.real, arr.imag
    return np.block([[re, -im], [im, re]])


def derealify(y: np.ndarray) -> np.ndarray:
    """Inverse of realify on matrices commuting with the embedding symmetry.

    Averages the two real diagonal blocks and antisymmetrizes the imaginary
    part, which preserves PSD-ness and every embedded trace inner product.
    """
    y = np.asarray(y, dtype=float)
    n2 = y.shape[0]
    if n2 % 2:
        raise ValueError(f"realified matrix must have even side, got {n2}")
    n = n2 // 2
    re = (y[:n, :n] + y[n:, n:]) / 2
    im = (y[n:, :n] - y[n:, :n].T) / 2
    return re + 1j * im


def entry_functionals(dim: int):
    """Hermitian matrices P with tr(P H) = Re H_kl or Im H_kl for k <= l.

    Yields (k, l, kind, P) covering every independent real coordinate of a
    Hermitian matrix of the given side; used to pin matrix entries with
    real equality constraints.
    """
    out = []
    for k in range(dim):
        for l in range(k, dim):
            p = np.zeros((dim, dim), dtype=complex)
            if k == l:
                p[k, k] = 1.0
                out.append((k, l, "re", p))
            else:
                p[k, l] = 0.5
                p[l, k] = 0.5
                out.append((k, l, "re", p))
                q = np.zeros((dim, dim), dtype=complex)
                q[k, l] = 0.5j
                q[l, k] = -0.5j
                out.append((k, l, "im", q))
    return out


# ---------------------------------------------------------------------------
# the interior-point iteration (real symmetric data)


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _maxstep(x: np.ndarray, d: np.ndarray) -> float:
    """Largest a with x + a d PSD, for x positive definite."""
    try:
        fac = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_sym(x))
        floor = max(float(w[-1]), 1.0) * 1e-15
        fac = v * np.sqrt(np.clip(w, floor, None))
    w1 = np.linalg.solve(fac, d)
    w2 = np.linalg.solve(fac, w1.T).T
    lam = float(np.linalg.eigvalsh(_sym(w2))[0])
    if lam >= -1e-13:
        return math.inf
    return -1.0 / lam


def _ipm(sides, Cs, Amats, b, tol):
    """Run the predictor-corrector iteration on realified data.

    sides: realified block sides; Cs: symmetric objective blocks;
    Amats: per block an (m, side^2) stack of vectorized symmetric
    constraint coefficients; b: realified right-hand sides.
    """
    m = b.size
    norm_b = float(np.linalg.norm(b))
    norm_C = math.sqrt(sum(float(np.sum(C * C)) for C in Cs))
    ntot = sum(sides)

    def a_of(mats):
        out = np.zeros(m)
        for am, x in zip(Amats, mats):
            out += am @ x.reshape(-1)
        return out

    def at_of(y):
        return [_sym((am.T @ y).reshape(n, n)) for am, n in zip(Amats, sides)]

    # scaled-identity start in the style of the classic dense solvers
    xs, ss = [], []
    for k, n in enumerate(sides):
        row_norms = np.linalg.norm(Amats[k], axis=1)
        denom = 1.0 + row_norms
        xi = max(10.0, math.sqrt(n), n * float(np.max((1.0 + np.abs(b)) / denom)))
        normC = float(np.linalg.norm(Cs[k]))
        eta = max(10.0, math.sqrt(n), 1.0 + max(normC, float(np.max(row_norms, initial=0.0))))
        xs.append(xi * np.eye(n))
        ss.append(eta * np.eye(n))
    y = np.zeros(m)

    # targets derived from tol; the floor is the documented solution contract,
    # accepted when degeneracy stops the iteration short of the target
    eps_gap = min(tol, 1e-7)
    eps_p = min(10.0 * tol, 1e-8)
    eps_d = min(10.0 * tol, 1e-7)
    floor_gap, floor_p, floor_d = 1e-7, 1e-8, 1e-7

    best = None
    best_merit = math.inf
    hist = []
    status = "max-iterations"
    it = 0

    def best_meets_floor():
        if best is None:
            return False
        _, _, _, _, rp_b, rd_b, gap_b, _ = best
        return gap_b <= floor_gap and rp_b <= floor_p and rd_b <= floor_d

    for it in range(MAX_ITERATIONS):
        rp = b - a_of(xs)
        aty = at_of(y)
        rd = [C - at + s for C, at, s in zip(Cs, aty, ss)]
        pobj = sum(float(np.sum(C * x)) for C, x in zip(Cs, xs))
        dobj = float(b @ y)
        mu = sum(float(np.sum(x * s)) for x, s in zip(xs, ss)) / ntot
        p_c, d_c = pobj / 2.0, dobj / 2.0
        gap_rel = abs(p_c - d_c) / max(1.0, abs(p_c))
        rp_rel = (float(np.linalg.norm(rp)) / 2.0) / (1.0 + norm_b / 2.0)
        rd_rel = (
            math.sqrt(sum(float(np.sum(r * r)) for r in rd)) / 2.0
        ) / (1.0 + norm_C / 2.0)
        merit = max(gap_rel, rp_rel, rd_rel)
        if merit < best_merit:
            best_merit = merit
            best = ([x.copy() for x in xs], y.copy(), p_c, d_c, rp_rel, rd_rel, gap_rel, it)
        if gap_rel <= eps_gap and rp_rel <= eps_p and rd_rel <= eps_d:
            status = "optimal"
            break

        hist.append((p_c, d_c, rp_rel, rd_rel))
        if it >= 10:
            scale = 1.0 + norm_b / 2.0 + norm_C / 2.0
            recent_p = [h[2] for h in hist[-8:]]
            recent_d = [h[3] for h in hist[-8:]]
            # dual objective diving with a stuck primal residual: no primal
            # feasible point exists (weak duality would bound it below)
            if d_c < -1e7 * scale and rd_rel < 1e-5 and rp_rel > 1e-6 and rp_rel > 0.25 * max(recent_p[:-1]):
                status = "infeasible"
                break
            if p_c > 1e7 * scale and rp_rel < 1e-5 and rd_rel > 1e-6 and rd_rel > 0.25 * max(recent_d[:-1]):
                status = "unbounded"
                break
        if mu < 1e-18 * (1.0 + norm_b + norm_C):
            break

        try:
            s_chol = [sla.cho_factor(s, lower=True, check_finite=False) for s in ss]
        except (np.linalg.LinAlgError, ValueError) as exc:
            if best_meets_floor():
                status = "optimal"
                break
            raise SdpSolverError(
                f"dual block lost positive definiteness at iteration {it}: {exc}"
            ) from None
        sinvs = [_sym(sla.cho_solve(ch, np.eye(n), check_finite=False))
                 for ch, n in zip(s_chol, sides)]

        mmat = np.zeros((m, m))
        for k, n in enumerate(sides):
            g = Amats[k].reshape(m, n, n)
            t = np.matmul(np.matmul(sinvs[k], g), xs[k])
            mmat += Amats[k] @ t.reshape(m, n * n).T
        mmat = _sym(mmat)
        try:
            m_chol = sla.cho_factor(mmat, lower=True, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            if best_meets_floor():
                status = "optimal"
                break
            raise SdpSolverError(
                f"Schur complement Cholesky failed at iteration {it} "
                f"(constraints dependent or iterate degenerate): {exc}"
            ) from None

        rd_term = a_of([x @ r @ si for x, r, si in zip(xs, rd, sinvs)])

        # predictor
        dy_aff = sla.cho_solve(m_chol, -b + rd_term, check_finite=False)
        at_aff = at_of(dy_aff)
        ds_aff = [at - r for at, r in zip(at_aff, rd)]
        dx_aff = [_sym(-(x + x @ ds @ si)) for x, ds, si in zip(xs, ds_aff, sinvs)]
        ap_aff = min(1.0, _min_step(xs, dx_aff))
        ad_aff = min(1.0, _min_step(ss, ds_aff))
        mu_aff = sum(
            float(np.sum((x + ap_aff * dx) * (s + ad_aff * ds)))
            for x, dx, s, ds in zip(xs, dx_aff, ss, ds_aff)
        ) / ntot
        sigma = min(1.0, max((max(mu_aff, 0.0) / mu) ** 3, 1e-12))

        # corrector
        sinv_term = a_of(sinvs)
        corr = a_of([dx @ ds @ si for dx, ds, si in zip(dx_aff, ds_aff, sinvs)])
        rhs = sigma * mu * sinv_term - b + rd_term - corr
        dy = sla.cho_solve(m_chol, rhs, check_finite=False)
        at_c = at_of(dy)
        ds = [at - r for at, r in zip(at_c, rd)]
        dx = [
            _sym(sigma * mu * si - x - x @ d @ si - dxa @ dsa @ si)
            for x, d, si, dxa, dsa in zip(xs, ds, sinvs, dx_aff, ds_aff)
        ]

        tau = 0.9 if it < 2 else 0.98
        alpha_p = min(1.0, tau * _min_step(xs, dx))
        alpha_d = min(1.0, tau * _min_step(ss, ds))
        if alpha_p < 1e-10 and alpha_d < 1e-10:
            break
        xs = [x + alpha_p * d for x, d in zip(xs, dx)]
        y = y + alpha_d * dy
        ss = [s + alpha_d * d for s, d in zip(ss, ds)]

    if status == "max-iterations" and best_meets_floor():
        status = "optimal"
    if status in ("infeasible", "unbounded"):
        # divergence statuses report the diverging iterate, not the best one
        return status, xs, y, p_c, d_c, rp_rel, rd_rel, it
    bx, by, bp, bd, brp, brd, _, _ = best
    return status, bx, by, bp, bd, brp, brd, it


def _min_step(mats, dirs) -> float:
    return min((_maxstep(x, d) for x, d in zip(mats, dirs)), default=math.inf)


def solve(problem: SdpProblem, tol: float = 1e-8) -> SdpSolution:
    """Solve the maximization problem to the requested relative gap.

    tol must lie in (0, 1e-4].  The run is deterministic for fixed inputs.
    """
    if not (0.0 < tol <= 1e-4):
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    names = [nm for nm, _ in problem.blocks]
    sides_r = [2 * side for _, side in problem.blocks]
    cs = []
    for nm, side in problem.blocks:
        coeff = problem.objective.get(nm)
        cs.append(realify(coeff) if coeff is not None else np.zeros((2 * side, 2 * side)))
    m = len(problem.constraints)
    amats = [np.zeros((m, n * n)) for n in sides_r]
    b = np.zeros(m)
    for i, con in enumerate(problem.constraints):
        b[i] = 2.0 * con.rhs
        for k, (nm, side) in enumerate(problem.blocks):
            coeff = con.coeffs.get(nm)
            if coeff is not None:
                amats[k][i] = realify(coeff).reshape(-1)

    status, xs, y, p_c, d_c, rp_rel, rd_rel, iters = _ipm(sides_r, cs, amats, b, tol)
    blocks = {nm: derealify(x) for nm, x in zip(names, xs)}
    return SdpSolution(
        status=status,
        primal_value=p_c,
        dual_value=d_c,
        blocks=blocks,
        dual_multipliers=np.asarray(y, dtype=float),
        iterations=iters,
        primal_residual=rp_rel,
        dual_residual=rd_rel,
    )


# ---------------------------------------------------------------------------
# the fidelity program


def embed_block(p: np.ndarray, total: int, offset: int) -> np.ndarray:
    """Place a square matrix on the diagonal of a larger zero matrix."""
    d = p.shape[0]
    out = np.zeros((total, total), dtype=complex)
    out[offset : offset + d, offset : offset + d] = p
    return out


def fidelity_block_problem(rho: np.ndarray, sigma: np.ndarray) -> SdpProblem:
    """maximize (1/2) tr(X + X^dag)  s.t.  [[rho, X], [X^dag, sigma]] >= 0.

    The 2d x 2d Hermitian variable G holds rho and sigma pinned on its
    diagonal blocks, leaving the off-diagonal X free.
    """
    d = rho.shape[0]
    c = np.zeros((2 * d, 2 * d), dtype=complex)
    c[:d, d:] = np.eye(d) / 2
    c[d:, :d] = np.eye(d) / 2
    constraints = []
    for k, l, kind, p in entry_functionals(d):
        target_r = rho[k, l]
        target_s = sigma[k, l]
        constraints.append(
            SdpConstraint(
                {"G": embed_block(p, 2 * d, 0)},
                target_r.real if kind == "re" else target_r.imag,
            )
        )
        constraints.append(
            SdpConstraint(
                {"G": embed_block(p, 2 * d, d)},
                target_s.real if kind == "re" else target_s.imag,
            )
        )
    return SdpProblem((("G", 2 * d),), {"G": c}, tuple(constraints))


def fidelity_sdp(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Fidelity as the optimal value of the coupled-block program.

    Agrees with the eigendecomposition route to well within 1e-6; the two
    paths stay deliberately independent so each can check the other.
    """
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    problem = fidelity_block_problem(rho.entries, sigma.entries)
    sol = solve(problem, tol=1e-9)
    if sol.status != "optimal":
        raise SdpSolverError(f"fidelity solve ended with status {sol.status!r}")
    return float(sol.primal_value)


def dump_realified(problem: SdpProblem) -> str:
    """Plain-text dump of the realified problem for external cross-checks."""
    lines = []
    lines.append(
        "blocks: "
        + ", ".join(f"{nm}:{2 * side}" for nm, side in problem.blocks)
    )
    lines.append(f"constraints: {len(problem.constraints)}")
    fmt = dict(precision=12, suppress_small=False, max_line_width=10**6, threshold=10**7)
    for nm, side in problem.blocks:
        coeff = problem.objective.get(nm)
        mat = realify(coeff) if coeff is not None else np.zeros((2 * side, 2 * side))
        lines.append(f"objective {nm}:")
        lines.append(np.array2string(mat, **fmt))
    for i, con in enumerate(problem.constraints):
        lines.append(f"constraint {i}: rhs={2.0 * con.rhs:.12g}")
        for nm, side in problem.blocks:
            coeff = con.coeffs.get(nm)
            if coeff is None:
                continue
            lines.append(f"  block {nm}:")
            lines.append(np.array2string(realify(coeff), **fmt))
    return "\n".join(lines) + "\n"
