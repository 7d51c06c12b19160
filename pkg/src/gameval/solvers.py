"""Deterministic interior-point solvers for LPs and small dense SDPs.

Both problem classes are solved by one primal-dual path-following iteration
over a product cone: at most one dense positive-semidefinite block plus a
nonnegative orthant.  An LP is the special case with no PSD block; entrywise
nonnegativity constraints on SDP variables become orthant slacks.  The PSD
block uses Nesterov-Todd scaling; the orthant the usual x/s scaling.  All
linear algebra is dense double precision with fixed, randomness-free kernels,
so re-solving the same problem reproduces the same iterates exactly.

Conventions: problems are stated as maximization.  `solve_lp` maximizes
c.x subject to E x = f, x >= 0.  `solve_sdp` maximizes <C, X> subject to
<A_i, X> = b_i, optional entrywise X_pq >= 0, and X PSD.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"

_BLOWUP = 1e12
_MIN_SIGMA, _MAX_SIGMA = 1e-10, 0.999
_STEP_FRACTION = 0.98


class SolverError(RuntimeError):
    pass


class SolverConvergenceError(SolverError):
    """A solve that was required to reach optimality did not."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


class DimensionCapError(SolverError):
    """Problem exceeds the configured size cap."""


@dataclass(frozen=True)
class SolveReport:
    value: float
    iterations: int
    primal_residual: float
    dual_residual: float
    duality_gap: float
    status: str


@dataclass(frozen=True)
class LinearProgram:
    """maximize c.x  subject to  E x = f,  x >= 0."""
    c: np.ndarray
    E: object  # dense array or scipy sparse matrix, shape (m, n)
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        E = self.E
        if not scipy.sparse.issparse(E):
            E = np.asarray(E, dtype=float)
        object.__setattr__(self, "E", E)
        m, n = self.E.shape
        if self.c.shape != (n,) or self.f.shape != (m,):
            raise ValueError("inconsistent LP dimensions")


@dataclass(frozen=True)
class SymmetricConstraint:
    """<A, X> = rhs with A symmetric, stored as upper-triangle entries.

    Each (r, c, v) with r <= c sets A[r, c] = A[c, r] = v; unlisted entries
    are zero.  For r < c the functional therefore reads 2 v X[r, c].
    """
    entries: tuple[tuple[int, int, float], ...]
    rhs: float

    @staticmethod
    def from_dense(A: np.ndarray, rhs: float, zero_tol: float = 0.0) -> "SymmetricConstraint":
        A = np.asarray(A, dtype=float)
        if A.shape[0] != A.shape[1] or not np.array_equal(A, A.T):
            raise ValueError("constraint matrix must be symmetric")
        ent = [(r, c, float(A[r, c]))
               for r in range(A.shape[0]) for c in range(r, A.shape[0])
               if abs(A[r, c]) > zero_tol]
        return SymmetricConstraint(tuple(ent), float(rhs))


@dataclass(frozen=True)
class SemidefiniteProgram:
    """maximize <C, X>  subject to  <A_i, X> = b_i,  X_pq >= 0 (listed),  X PSD."""
    d: int
    C: np.ndarray
    equalities: tuple[SymmetricConstraint, ...]
    entrywise_nonneg: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.shape != (self.d, self.d) or not np.allclose(C, C.T, atol=0, rtol=0):
            raise ValueError("objective matrix must be symmetric d x d")
        object.__setattr__(self, "C", C)
        for con in self.equalities:
            for (r, c, _) in con.entries:
                if not (0 <= r <= c < self.d):
                    raise ValueError(f"constraint entry ({r},{c}) out of range")


# ---------------------------------------------------------------------------
# Core iteration.

class _ConeProblem:
    """Internal minimization form over PSD(d) x R^nlp_+ .

    minimize <Cmin, X> + cmin.x   s.t.   A(X) + E x = b,  X PSD,  x >= 0.
    """

    def __init__(self, d, Cmin, constraints, E, cmin, b):
        self.d = d
        self.m = len(b)
        self.b = np.asarray(b, dtype=float)
        self.Cmin = Cmin if Cmin is not None else np.zeros((0, 0))
        self.E = scipy.sparse.csr_matrix(E) if E is not None else None
        self.nlp = self.E.shape[1] if self.E is not None else 0
        self.cmin = np.asarray(cmin, dtype=float) if cmin is not None else np.zeros(0)
        if self.m == 0:
            raise ValueError("at least one equality constraint is required")

        # Directed entry expansion of the symmetric constraint matrices: each
        # upper off-diagonal entry appears twice, once per orientation, so a
        # plain sparse matrix over flattened indices implements both <A_i, T>
        # and sum_i y_i A_i without special-casing the factor 2.
        if d > 0:
            rows, flat, vals = [], [], []
            self._per_con = []
            for i, con in enumerate(constraints):
                rr, cc, vv = [], [], []
                for (r, c, v) in con.entries:
                    rr.append(r); cc.append(c); vv.append(v)
                    if r != c:
                        rr.append(c); cc.append(r); vv.append(v)
                rr = np.array(rr, dtype=np.intp)
                cc = np.array(cc, dtype=np.intp)
                vv = np.array(vv, dtype=float)
                self._per_con.append((rr, cc, vv))
                rows.extend([i] * len(rr))
                flat.extend(rr * d + cc)
                vals.extend(vv)
            self._A = scipy.sparse.csr_matrix(
                (vals, (rows, flat)), shape=(self.m, d * d))
        else:
            self._A = None
            self._per_con = []

    def apply_A(self, T: np.ndarray) -> np.ndarray:
        return self._A @ T.reshape(-1)

    def apply_At(self, y: np.ndarray) -> np.ndarray:
        return (self._A.T @ y).reshape(self.d, self.d)

    def schur_psd(self, W: np.ndarray) -> np.ndarray:
        """M[i, j] = <A_i, W A_j W> for the NT-scaled normal equations."""
        d, m = self.d, self.m
        Y = np.empty((m, d * d))
        for i, (rr, cc, vv) in enumerate(self._per_con):
            Y[i] = (W[:, rr] @ (W[:, cc] * vv).T).reshape(-1)
        M = (self._A @ Y.T).T
        return 0.5 * (M + M.T)


def _max_step_psd(L: np.ndarray, Delta: np.ndarray) -> float:
    """Largest alpha with X + alpha*Delta PSD, given X = L L^T."""
    K = scipy.linalg.solve_triangular(L, Delta, lower=True)
    K = scipy.linalg.solve_triangular(L, K.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (K + K.T))[0]
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _max_step_orthant(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _nt_scaling(X, S):
    """NT scaling W with W S W = X, plus Cholesky factor of X and S^{-1}."""
    Lx = np.linalg.cholesky(X)
    Ls = np.linalg.cholesky(S)
    G = Ls.T @ Lx
    U, sig, Vt = np.linalg.svd(G)
    R = Lx @ (Vt.T / np.sqrt(sig))
    W = R @ R.T
    eye = np.eye(X.shape[0])
    Sinv = scipy.linalg.cho_solve((Ls, True), eye)
    Sinv = 0.5 * (Sinv + Sinv.T)
    return W, Lx, Sinv


def _solve_ipm(prob: _ConeProblem, tol: float, max_iter: int):
    """Run the predictor-centering NT iteration; returns (X, x, y, report)."""
    d, m, nlp = prob.d, prob.m, prob.nlp
    has_psd, has_lp = d > 0, nlp > 0

    scale_p = max(1.0, float(np.max(np.abs(prob.b))))
    data_max = 0.0
    if has_psd:
        data_max = max(data_max, float(np.max(np.abs(prob.Cmin))) if prob.Cmin.size else 0.0)
    if has_lp:
        data_max = max(data_max, float(np.max(np.abs(prob.cmin))) if prob.cmin.size else 0.0)
    scale_d = max(1.0, data_max)

    X = scale_p * np.eye(d) if has_psd else None
    S = scale_d * np.eye(d) if has_psd else None
    x = np.full(nlp, scale_p)
    s = np.full(nlp, scale_d)
    y = np.zeros(m)
    cone_size = d + nlp

    def residuals():
        r_p = prob.b.copy()
        if has_psd:
            r_p -= prob.apply_A(X)
        if has_lp:
            r_p -= prob.E @ x
        R_d = prob.Cmin - S - prob.apply_At(y) if has_psd else None
        r_d = prob.cmin - (prob.E.T @ y) - s if has_lp else np.zeros(0)
        return r_p, R_d, r_d

    def objectives():
        pobj = 0.0
        if has_psd:
            pobj += float(np.sum(prob.Cmin * X))
        if has_lp:
            pobj += float(prob.cmin @ x)
        return pobj, float(prob.b @ y)

    it = 0
    status = MAX_ITER
    pres = dres = gap = np.inf
    for it in range(max_iter + 1):
        r_p, R_d, r_d = residuals()
        pobj, dobj = objectives()
        pres = float(np.max(np.abs(r_p)))
        dres = 0.0
        if has_psd:
            dres = max(dres, float(np.max(np.abs(R_d))))
        if has_lp and r_d.size:
            dres = max(dres, float(np.max(np.abs(r_d))))
        gap = abs(pobj - dobj)
        if pres <= tol * scale_p and dres <= tol * scale_d and \
                gap <= tol * max(1.0, abs(pobj), abs(dobj)):
            status = OPTIMAL
            break
        big = max(float(np.max(np.abs(x))) if nlp else 0.0,
                  float(np.max(np.abs(X))) if has_psd else 0.0,
                  float(np.max(np.abs(y))))
        if big > _BLOWUP:
            status = INFEASIBLE
            break
        if it == max_iter:
            break

        mu = 0.0
        if has_psd:
            mu += float(np.sum(X * S))
        if has_lp:
            mu += float(x @ s)
        mu /= cone_size

        if has_psd:
            W, Lx, Sinv = _nt_scaling(X, S)
            M = prob.schur_psd(W)
        else:
            W = Lx = Sinv = None
            M = np.zeros((m, m))
        if has_lp:
            dvec = x / s
            Ed = prob.E.multiply(dvec[np.newaxis, :])
            M = M + (Ed @ prob.E.T).toarray()

        factor = None
        for reg in (0.0, 1e-14, 1e-12, 1e-10, 1e-8):
            try:
                shift = reg * max(1.0, float(np.max(np.diag(M))))
                factor = scipy.linalg.cho_factor(
                    M + shift * np.eye(m), lower=True)
                break
            except np.linalg.LinAlgError:
                continue
        if factor is None:
            raise SolverError("normal equations are numerically singular")

        def newton(Rc_m, rc_l):
            T = Rc_m - W @ R_d @ W if has_psd else None
            t = rc_l - dvec * r_d if has_lp else None
            g = r_p.copy()
            if has_psd:
                g -= prob.apply_A(T)
            if has_lp:
                g -= prob.E @ t
            dy = scipy.linalg.cho_solve(factor, g)
            dX = dS = dx = ds = None
            if has_psd:
                Aty = prob.apply_At(dy)
                dS = R_d - Aty
                dX = T + W @ Aty @ W
                dX = 0.5 * (dX + dX.T)
            if has_lp:
                ds = r_d - (prob.E.T @ dy)
                dx = t + dvec * (prob.E.T @ dy)
            return dX, dx, dy, dS, ds

        def max_steps(dX, dx, dS, ds):
            ap = ad = np.inf
            if has_psd:
                ap = min(ap, _max_step_psd(Lx, dX))
                ad = min(ad, _max_step_psd(np.linalg.cholesky(S), dS))
            if has_lp:
                ap = min(ap, _max_step_orthant(x, dx))
                ad = min(ad, _max_step_orthant(s, ds))
            return ap, ad

        # Predictor: pure affine step fixes the centering weight.
        Rc_aff = -X if has_psd else None
        rc_aff = -x if has_lp else None
        dXa, dxa, dya, dSa, dsa = newton(Rc_aff, rc_aff)
        ap, ad = max_steps(dXa, dxa, dSa, dsa)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = 0.0
        if has_psd:
            mu_aff += float(np.sum((X + ap * dXa) * (S + ad * dSa)))
        if has_lp:
            mu_aff += float((x + ap * dxa) @ (s + ad * dsa))
        mu_aff /= cone_size
        sigma = (max(mu_aff, 0.0) / mu) ** 3 if mu > 0 else _MIN_SIGMA
        sigma = min(max(sigma, _MIN_SIGMA), _MAX_SIGMA)

        Rc = sigma * mu * Sinv - X if has_psd else None
        rc = sigma * mu / s - x if has_lp else None
        dX, dx, dy, dS, ds = newton(Rc, rc)
        ap, ad = max_steps(dX, dx, dS, ds)
        ap = min(1.0, _STEP_FRACTION * ap)
        ad = min(1.0, _STEP_FRACTION * ad)

        if has_psd:
            X = X + ap * dX
            S = S + ad * dS
        if has_lp:
            x = x + ap * dx
            s = s + ad * ds
        y = y + ad * dy

    pobj, dobj = objectives()
    report = SolveReport(value=-pobj, iterations=it,
                         primal_residual=pres, dual_residual=dres,
                         duality_gap=gap, status=status)
    return X, x, y, report


# ---------------------------------------------------------------------------
# LP front end.


def _presolve_rows(E, f):
    """Drop linearly dependent rows of (E, f); None if they are inconsistent.

    Uses a pivoted QR of E^T to pick an independent row subset, then checks
    that every dropped row is a consistent combination of the kept ones.
    """
    Ed = E.toarray() if scipy.sparse.issparse(E) else np.asarray(E, float)
    m = Ed.shape[0]
    _, R, piv = scipy.linalg.qr(Ed.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    thresh = max(Ed.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > thresh))
    keep = np.sort(piv[:rank])
    if rank == m:
        return np.arange(m), E, f
    lam, *_ = np.linalg.lstsq(Ed[keep].T, Ed.T, rcond=None)
    recon = lam.T @ f[keep]
    if np.max(np.abs(recon - f)) > 1e-8 * max(1.0, float(np.max(np.abs(f)))):
        return None, None, None
    return keep, Ed[keep], f[keep]


def solve_lp(lp: LinearProgram, tol: float = 1e-8, max_iter: int = 500,
             presolve: bool = True):
    """Solve an LP; returns (x, SolveReport).

    status `optimal` certifies primal/dual residuals and the primal-dual
    objective gap at or below tol.  Redundant equality rows are removed by a
    rank presolve when the fast full-rank path fails; inconsistent rows give
    status `infeasible`.
    """
    E, f = lp.E, lp.f
    if presolve:
        EET = (E @ E.T).toarray() if scipy.sparse.issparse(E) else E @ E.T
        try:
            L = np.linalg.cholesky(EET + 0.0 * np.eye(E.shape[0]))
            dg = np.diag(L)
            ok = np.min(dg) > 1e-7 * max(1.0, np.max(dg))
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            keep, E, f = _presolve_rows(lp.E, lp.f)
            if keep is None:
                report = SolveReport(value=np.nan, iterations=0,
                                     primal_residual=np.inf, dual_residual=np.inf,
                                     duality_gap=np.inf, status=INFEASIBLE)
                return np.zeros(lp.c.shape[0]), report
    prob = _ConeProblem(0, None, (), E, -lp.c, f)
    _, x, _, report = _solve_ipm(prob, tol, max_iter)
    value = float(lp.c @ x)
    report = SolveReport(value=value, iterations=report.iterations,
                         primal_residual=report.primal_residual,
                         dual_residual=report.dual_residual,
                         duality_gap=report.duality_gap, status=report.status)
    return x, report


def solve_sdp(sdp: SemidefiniteProgram, tol: float = 1e-8, max_iter: int = 500,
              max_dim: int = 256):
    """Solve an SDP; returns (X, SolveReport).

    Entrywise nonnegativity constraints are enforced through orthant slack
    variables w with X_pq - w = 0, sharing the PSD path's normal equations.
    """
    if sdp.d > max_dim:
        raise DimensionCapError(
            f"Gram dimension {sdp.d} exceeds the cap of {max_dim}")
    cons = list(sdp.equalities)
    nslack = len(sdp.entrywise_nonneg)
    b = [con.rhs for con in cons]
    if nslack:
        for (p, q) in sdp.entrywise_nonneg:
            r, c = min(p, q), max(p, q)
            v = 1.0 if r == c else 0.5
            cons.append(SymmetricConstraint(((r, c, v),), 0.0))
            b.append(0.0)
        m = len(cons)
        E = scipy.sparse.lil_matrix((m, nslack))
        for j in range(nslack):
            E[m - nslack + j, j] = -1.0
        E = E.tocsr()
        cmin = np.zeros(nslack)
    else:
        E, cmin = None, None
    prob = _ConeProblem(sdp.d, -sdp.C, tuple(cons), E, cmin, np.array(b))
    X, _, _, report = _solve_ipm(prob, tol, max_iter)
    X = 0.5 * (X + X.T)
    value = float(np.sum(sdp.C * X))
    report = SolveReport(value=value, iterations=report.iterations,
                         primal_residual=report.primal_residual,
                         dual_residual=report.dual_residual,
                         duality_gap=report.duality_gap, status=report.status)
    return X, report


# ---------------------------------------------------------------------------
# Problem dumps for external cross-checking.


def lp_to_json(lp: LinearProgram) -> str:
    E = lp.E.toarray() if scipy.sparse.issparse(lp.E) else np.asarray(lp.E)
    doc = {
        "type": "linear_program", "sense": "maximize",
        "n": int(E.shape[1]), "m": int(E.shape[0]),
        "c": [float(f"{v:.17g}") for v in lp.c],
        "E_row_major": [float(f"{v:.17g}") for v in E.reshape(-1)],
        "f": [float(f"{v:.17g}") for v in lp.f],
    }
    return json.dumps(doc, sort_keys=True)


def sdp_to_json(sdp: SemidefiniteProgram) -> str:
    doc = {
        "type": "semidefinite_program", "sense": "maximize",
        "d": sdp.d,
        "C_row_major": [float(f"{v:.17g}") for v in sdp.C.reshape(-1)],
        "equalities": [
            {"entries": [[int(r), int(c), float(f"{v:.17g}")]
                         for (r, c, v) in con.entries],
             "rhs": float(f"{con.rhs:.17g}")}
            for con in sdp.equalities],
        "entrywise_nonneg": [[int(p), int(q)] for (p, q) in sdp.entrywise_nonneg],
    }
    return json.dumps(doc, sort_keys=True)
