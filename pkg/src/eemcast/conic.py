"""Solver boundary: small dense LPs and small complex-Hermitian SDPs.

solve_lp runs an in-house bounded-variable two-phase simplex (the LPs here
have <= ~10 variables, and per-call overhead dominates everything else in a
Monte Carlo campaign). solve_sdp hands a real-symmetric embedding of the
Hermitian blocks to Clarabel and verifies the returned solution against the
requested tolerances.

Problem data can span many orders of magnitude after path loss, so both
entry points rescale internally (variables into bound/budget units, rows to
unit size) and unscale before reporting. Residuals and gaps in SolveStatus
are relative to that internal scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

_SQRT2 = math.sqrt(2.0)


class SolverFailure(RuntimeError):
    """A conic solve ended in a numerical failure the caller cannot act on."""


@dataclass
class LinearProgram:
    """min c.x  s.t.  A x >= b,  0 <= x <= upper (upper entries may be inf)."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.shape[0])
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.b.shape[0] != self.A.shape[0] or self.upper.shape[0] != self.c.shape[0]:
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))
                and np.all(np.isfinite(self.A))):
            raise ValueError("c, A and b must be finite")
        if np.any(np.isnan(self.upper)) or np.any(self.upper < 0.0):
            raise ValueError("upper bounds must be nonnegative (inf allowed)")


@dataclass
class SdpConstraint:
    """sum_n trace(coeffs[n] @ W_n) {>=,<=} rhs; coeffs[n] is Hermitian or None."""

    coeffs: list
    sense: str          # "ge" | "le"
    rhs: float

    def __post_init__(self):
        if self.sense not in ("ge", "le"):
            raise ValueError("sense must be 'ge' or 'le'")
        self.rhs = float(self.rhs)


@dataclass
class SdpProblem:
    """min sum_n trace(C_n W_n) over Hermitian PSD blocks W_n (sizes `blocks`),
    subject to linear trace constraints."""

    blocks: list[int]
    C: list[np.ndarray]
    constraints: list[SdpConstraint] = field(default_factory=list)

    def __post_init__(self):
        self.blocks = [int(s) for s in self.blocks]
        if any(s < 1 for s in self.blocks):
            raise ValueError("block sizes must be positive")
        self.C = [_check_hermitian(c, s) for c, s in zip(self.C, self.blocks)]
        if len(self.C) != len(self.blocks):
            raise ValueError("need one objective matrix per block")
        for con in self.constraints:
            if len(con.coeffs) != len(self.blocks):
                raise ValueError("each constraint needs one coefficient slot per block")
            con.coeffs = [None if a is None else _check_hermitian(a, s)
                          for a, s in zip(con.coeffs, self.blocks)]


@dataclass
class SolveStatus:
    status: str
    objective: float | None
    solution: object            # ndarray for LPs, list of Hermitian blocks for SDPs
    feas_residual: float
    duality_gap: float


def _check_hermitian(mat, size: int) -> np.ndarray:
    m = np.asarray(mat, dtype=complex)
    if m.shape != (size, size):
        raise ValueError("coefficient matrix has the wrong block size")
    if np.max(np.abs(m - m.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(m))):
        raise ValueError("coefficient matrices must be Hermitian")
    return 0.5 * (m + m.conj().T)


# ---------------------------------------------------------------------------
# LP: bounded-variable two-phase revised simplex
# ---------------------------------------------------------------------------

def _simplex(c, A, b, upper, tol=1e-9, max_iter=None):
    """Core simplex on scaled data. Returns (status, x or None).

    Standard form uses surplus columns (A x - s = b); nonbasic variables sit
    at either bound and entering variables may flip bounds without a basis
    change. A crash start at the upper bounds skips phase 1 whenever that
    point is feasible (always the case for min-power problems with
    nonnegative rows); otherwise artificial columns are added.
    """
    m, n = A.shape
    if m == 0:
        if np.any((c < 0.0) & ~np.isfinite(upper)):
            return NUMERICAL_FAILURE, None
        return OPTIMAL, np.where(c < 0.0, upper, 0.0)

    x0 = np.where(np.isfinite(upper), upper, 0.0)
    s0 = A @ x0 - b
    crash = bool(np.all(s0 >= 0.0))

    if crash:
        n_art = 0
        T = np.hstack([A, -np.eye(m)])
        nt = n + m
        ub = np.concatenate([upper, np.full(m, np.inf)])
        basis = np.arange(n, n + m)
        xval = np.concatenate([x0, s0])
        at_upper = np.zeros(nt, dtype=bool)
        at_upper[:n] = np.isfinite(upper)
    else:
        need_art = b > 0.0
        n_art = int(need_art.sum())
        art_cols = np.zeros((m, n_art))
        art_rows = np.flatnonzero(need_art)
        art_cols[art_rows, np.arange(n_art)] = 1.0
        T = np.hstack([A, -np.eye(m), art_cols])
        nt = n + m + n_art
        ub = np.concatenate([upper, np.full(m + n_art, np.inf)])
        basis = np.empty(m, dtype=int)
        basis[art_rows] = np.arange(n + m, nt)
        slack_rows = np.flatnonzero(~need_art)
        basis[slack_rows] = n + slack_rows
        xval = np.zeros(nt)
        xval[basis[art_rows]] = b[art_rows]
        xval[basis[slack_rows]] = -b[slack_rows]
        at_upper = np.zeros(nt, dtype=bool)
    art_idx = np.arange(n + m, nt)
    in_basis = np.zeros(nt, dtype=bool)
    in_basis[basis] = True

    if max_iter is None:
        max_iter = 200 + 50 * (n + m)

    tt = np.empty(m)
    ninf = -np.inf

    def run_phase(cost, movable, bland_from):
        iters = 0
        use_bland = False
        not_movable = ~movable
        try:
            binv = np.linalg.inv(T[:, basis])
        except np.linalg.LinAlgError:
            return "singular"
        while True:
            iters += 1
            if iters > max_iter:
                return "iterlimit"
            if iters % 50 == 0:       # refactorize to cap product-form drift
                try:
                    binv = np.linalg.inv(T[:, basis])
                except np.linalg.LinAlgError:
                    return "singular"
            y = cost[basis] @ binv
            red = cost - y @ T
            viol = np.where(at_upper, red, -red)
            viol[in_basis] = ninf
            viol[not_movable] = ninf
            if use_bland:
                idx = np.flatnonzero(viol > tol)
                if idx.size == 0:
                    return "optimal"
                e = int(idx[0])
            else:
                e = int(np.argmax(viol))
                if viol[e] <= tol:
                    return "optimal"
            dire = -1.0 if at_upper[e] else 1.0
            w = binv @ T[:, e]
            # ratio test: blocking basic variable vs. a bound flip of e
            dw = dire * w
            bidx = basis
            with np.errstate(divide="ignore", invalid="ignore"):
                np.divide(xval[bidx], dw, out=tt)
            tt[dw <= tol] = np.inf
            neg = dw < -tol
            if np.any(neg):
                room = ub[bidx[neg]] - xval[bidx[neg]]
                tt[neg] = np.where(np.isfinite(room), room / (-dw[neg]), np.inf)
            leave = int(np.argmin(tt))
            theta = tt[leave]
            flip = ub[e]
            if np.isfinite(flip) and flip < theta - 1e-12:
                theta = flip
                leave = -1
            if not np.isfinite(theta):
                return "unbounded"
            theta = max(theta, 0.0)
            if theta <= 1e-12 and iters >= bland_from:
                use_bland = True
            xval[bidx] -= theta * dw
            xval[e] += dire * theta
            if leave < 0:
                at_upper[e] = not at_upper[e]
            else:
                lv = bidx[leave]
                xval[lv] = ub[lv] if dw[leave] < 0 else 0.0
                at_upper[lv] = dw[leave] < 0
                in_basis[lv] = False
                basis[leave] = e
                in_basis[e] = True
                at_upper[e] = False
                # product-form update of the basis inverse
                piv = w[leave]
                if abs(piv) < 1e-11:
                    try:
                        binv = np.linalg.inv(T[:, basis])
                    except np.linalg.LinAlgError:
                        return "singular"
                else:
                    brow = binv[leave] / piv
                    binv -= np.outer(w, brow)
                    binv[leave] = brow

    if n_art:
        cost1 = np.zeros(nt)
        cost1[art_idx] = 1.0
        out = run_phase(cost1, ub > tol, bland_from=20 + 4 * (n + m))
        if out != "optimal":          # phase-1 objective is bounded below by 0
            return NUMERICAL_FAILURE, None
        # threshold strictly below the residual verification in solve_lp, so a
        # hairline-infeasible problem resolves as infeasible instead of
        # slipping into phase 2 and failing the final check
        if xval[art_idx].sum() > 1e-9:
            return INFEASIBLE, None
        ub[art_idx] = 0.0
        xval[art_idx] = 0.0

    cost2 = np.zeros(nt)
    cost2[:n] = c
    movable = ub > tol
    movable[art_idx] = False
    out = run_phase(cost2, movable, bland_from=20 + 4 * (n + m))
    if out == "optimal":
        # recompute basic values against the final basis: nonbasics sit exactly
        # at bounds, so this removes any accumulated drift
        nb = ~in_basis
        try:
            xval[basis] = np.linalg.solve(T[:, basis], b - T[:, nb] @ xval[nb])
        except np.linalg.LinAlgError:
            return NUMERICAL_FAILURE, None
        return OPTIMAL, xval[:n].copy()
    return NUMERICAL_FAILURE, None


def solve_lp(lp: LinearProgram, feas_tol: float = 1e-8, gap_tol: float = 1e-8) -> SolveStatus:
    """Solve a small dense LP to vertex quality.

    Infeasibility is reported through `status`, never raised: callers use it
    as a feasibility oracle. Unbounded problems cannot occur for box-bounded
    variables and are reported as numerical-failure if detected.
    """
    c, A, b, upper = lp.c, lp.A, lp.b, lp.upper
    n = c.shape[0]
    # scale columns into bound units, rows to unit magnitude
    colmax = np.max(np.abs(A), axis=0) if A.shape[0] else np.zeros(n)
    d = np.where(np.isfinite(upper) & (upper > 0.0), upper, np.maximum(colmax, 1.0))
    A1 = A * d[None, :]
    u1 = np.where(np.isfinite(upper), upper / d, np.inf)
    r = np.maximum(np.max(np.abs(A1), axis=1, initial=0.0), np.abs(b))
    r = np.maximum(r, 1e-12)
    status, xs = _simplex(c * d, A1 / r[:, None], b / r, u1)
    if status != OPTIMAL:
        return SolveStatus(status, None, None, math.inf, math.inf)
    x = np.clip(xs * d, 0.0, np.where(np.isfinite(upper), upper, np.inf))
    resid = 0.0
    if A.shape[0]:
        resid = float(np.max((b - A @ x) / np.maximum(1.0, np.abs(b)), initial=0.0))
        resid = max(resid, 0.0)
    if resid > feas_tol:
        return SolveStatus(NUMERICAL_FAILURE, None, None, resid, math.inf)
    return SolveStatus(OPTIMAL, float(c @ x), x, resid, 0.0)


# ---------------------------------------------------------------------------
# SDP: complex-Hermitian blocks via the real-symmetric embedding
# ---------------------------------------------------------------------------

def _embed(H: np.ndarray) -> np.ndarray:
    """[[Re, -Im], [Im, Re]] embedding; doubles traces of Hermitian products."""
    X, Y = H.real, H.imag
    return np.block([[X, -Y], [Y, X]])


def _unembed(S: np.ndarray, size: int) -> np.ndarray:
    """Project a symmetric 2m x 2m matrix back to the Hermitian m x m block."""
    s11 = S[:size, :size]
    s22 = S[size:, size:]
    s21 = S[size:, :size]
    return 0.5 * (s11 + s22) + 0.5j * (s21 - s21.T)


def _tri_index(dim: int):
    iu = np.triu_indices(dim)
    # clarabel stores the upper triangle column-wise, off-diagonals scaled by sqrt(2)
    order = np.lexsort((iu[0], iu[1]))
    rows, cols = iu[0][order], iu[1][order]
    scale = np.where(rows == cols, 1.0, _SQRT2)
    return rows, cols, scale


def _scs_perm(dim: int) -> np.ndarray:
    """Index map from the clarabel triangle layout to the scs one (lower
    triangle column-wise); both scale off-diagonals by sqrt(2)."""
    rows, cols, _ = _tri_index(dim)
    pos = {(int(r), int(c)): i for i, (r, c) in enumerate(zip(rows, cols))}
    il = np.tril_indices(dim)
    order = np.lexsort((il[0], il[1]))
    lr, lc = il[0][order], il[1][order]
    return np.array([pos[(int(c), int(r))] for r, c in zip(lr, lc)])


def _svec(S: np.ndarray, tri) -> np.ndarray:
    rows, cols, scale = tri
    return S[rows, cols] * scale


def _smat(v: np.ndarray, dim: int, tri) -> np.ndarray:
    rows, cols, scale = tri
    S = np.zeros((dim, dim))
    vals = v / scale
    S[rows, cols] = vals
    S[cols, rows] = vals
    return S


def solve_sdp(sdp: SdpProblem, feas_tol: float = 1e-7, gap_tol: float = 1e-7) -> SolveStatus:
    """Solve the block SDP; returns Hermitian PSD blocks in `solution`.

    The reported objective equals sum_n trace(C_n W_n) in complex arithmetic:
    the embedding's trace doubling is compensated when the problem is built.
    """
    sizes = sdp.blocks
    dims = [2 * s for s in sizes]
    tris = [_tri_index(dm) for dm in dims]
    tri_len = [dm * (dm + 1) // 2 for dm in dims]
    offs = np.concatenate([[0], np.cumsum(tri_len)])
    nv = int(offs[-1])

    # variable scale: express blocks in units of the largest <=-budget
    pos_le = [con.rhs for con in sdp.constraints if con.sense == "le" and con.rhs > 0.0]
    beta = max(pos_le) if pos_le else 1.0

    q = np.concatenate([_svec(_embed(C), tri) * 0.5 for C, tri in zip(sdp.C, tris)])

    m_lin = len(sdp.constraints)
    rows = np.zeros((m_lin, nv))
    rhs = np.zeros(m_lin)
    for j, con in enumerate(sdp.constraints):
        for nblk, a in enumerate(con.coeffs):
            if a is None:
                continue
            rows[j, offs[nblk]:offs[nblk + 1]] = _svec(_embed(a), tris[nblk]) * 0.5
        rj = con.rhs / beta
        if con.sense == "ge":
            rows[j] = -rows[j]
            rj = -rj
        rho = max(np.max(np.abs(rows[j]), initial=0.0), abs(rj), 1e-12)
        rows[j] /= rho
        rhs[j] = rj / rho

    parts = []
    cones = []
    if m_lin:
        parts.append(sparse.csc_matrix(rows))
        cones.append(clarabel.NonnegativeConeT(m_lin))
    parts.append(-sparse.identity(nv, format="csc"))
    cones.extend(clarabel.PSDTriangleConeT(dm) for dm in dims)
    A = sparse.vstack(parts).tocsc()
    bvec = np.concatenate([rhs, np.zeros(nv)])

    outcome = _run_clarabel(A, bvec, q, cones, feas_tol, gap_tol)
    if outcome is None:
        # near-boundary instances can stall the default settings; a lightly
        # regularized retry resolves them (any wrong "solved" answer is still
        # caught by the residual verification below)
        outcome = _run_clarabel(A, bvec, q, cones, feas_tol, gap_tol, static_reg=1e-7)
    if outcome is None:
        outcome = _run_scs(rows, rhs, q, dims, offs, m_lin)
    if outcome is None:
        return SolveStatus(NUMERICAL_FAILURE, None, None, math.inf, math.inf)
    kind, x, pobj, dobj = outcome
    if kind == "infeasible":
        return SolveStatus(INFEASIBLE, None, None, math.inf, math.inf)
    blocks = []
    for nblk, size in enumerate(sizes):
        S = _smat(x[offs[nblk]:offs[nblk + 1]], dims[nblk], tris[nblk])
        W = _unembed(S, size) * beta
        blocks.append(0.5 * (W + W.conj().T))

    objective = float(sum(np.trace(C @ W).real for C, W in zip(sdp.C, blocks)))
    resid = 0.0
    for con in sdp.constraints:
        val = sum(np.trace(a @ W).real for a, W in zip(con.coeffs, blocks) if a is not None)
        gap = (con.rhs - val) if con.sense == "ge" else (val - con.rhs)
        resid = max(resid, gap / max(1.0, abs(con.rhs), beta))
    for W in blocks:
        lam_min = float(np.linalg.eigvalsh(W)[0])
        resid = max(resid, -lam_min / max(1.0, beta))
    dgap = abs(pobj - dobj) / max(1.0, abs(pobj))
    if resid > feas_tol or dgap > gap_tol:
        return SolveStatus(NUMERICAL_FAILURE, None, None, resid, dgap)
    return SolveStatus(OPTIMAL, objective, blocks, resid, dgap)


def _run_clarabel(A, bvec, q, cones, feas_tol, gap_tol, static_reg=None):
    """One clarabel attempt. Returns ("ok"|"infeasible", x, pobj, dobj) or
    None when the solver fails, including hard panics from its Rust core on
    badly conditioned data (those surface as BaseException)."""
    nv = q.shape[0]
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = min(1e-8, feas_tol)
    settings.tol_gap_rel = min(1e-8, gap_tol)
    settings.tol_gap_abs = min(1e-8, gap_tol)
    if static_reg is not None:
        settings.static_regularization_constant = static_reg
    solver = clarabel.DefaultSolver(sparse.csc_matrix((nv, nv)), q, A, bvec,
                                    cones, settings)
    try:
        sol = solver.solve()
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException:
        return None
    st = sol.status
    if st in (clarabel.SolverStatus.PrimalInfeasible,
              clarabel.SolverStatus.AlmostPrimalInfeasible):
        return "infeasible", None, 0.0, 0.0
    if st not in (clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved):
        return None
    return "ok", np.asarray(sol.x), float(sol.obj_val), float(sol.obj_val_dual)


def _run_scs(rows, rhs, q, dims, offs, m_lin):
    """Fallback first-order solve via scs (same data, its triangle layout)."""
    import scs

    nv = q.shape[0]
    perm_rows = []
    for nblk, dm in enumerate(dims):
        base = int(offs[nblk])
        perm_rows.extend(base + int(i) for i in _scs_perm(dm))
    psd_part = -sparse.identity(nv, format="csr")[perm_rows]
    parts = ([sparse.csc_matrix(rows), psd_part.tocsc()] if m_lin
             else [psd_part.tocsc()])
    A = sparse.vstack(parts).tocsc()
    bvec = np.concatenate([rhs, np.zeros(nv)])
    cone = {"l": m_lin, "s": list(dims)}
    try:
        out = scs.solve(dict(A=A, b=bvec, c=q), cone, verbose=False,
                        eps_abs=1e-9, eps_rel=1e-9, max_iters=50_000,
                        time_limit_secs=5.0)
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException:
        return None
    status = out["info"]["status"].lower()
    if "infeasible" in status:
        return "infeasible", None, 0.0, 0.0
    if not status.startswith("solved"):
        return None
    return "ok", np.asarray(out["x"]), float(out["info"]["pobj"]), float(out["info"]["dobj"])
