"""Convex linearly-constrained quadratic programs.

Two solvers share one result contract (:class:`QPSolution`):

* :func:`solve` -- a primal-dual interior-point method (Mehrotra
  predictor-corrector) for the general problem, followed by an active-set
  polish that re-solves the KKT system on the identified active set, so
  that variables sitting on a bound come back exactly on it.
* :func:`solve_box_single_equality` -- SMO-type decomposition with
  second-order working-set selection, for ``0 <= x <= C``, ``y^T x = 0``.

Residual conventions (used by both solvers and by tests):

``feasibility_residual``
    max over constraint groups of the violation divided by ``1 + |rhs|_inf``
    of that group.
``kkt_residual``
    max of stationarity ``|Qx + c + A_eq^T y + A_in^T z - z_l + z_u|_inf``
    over ``1 + max(|Qx|_inf, |c|_inf)``, complementarity ``max |mult * slack|``
    over ``1 + |objective|``, and sign violations of the multipliers over
    ``1 + |c|_inf``.
"""

from __future__ import annotations

import enum
import io
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from .errors import SolverError
from .kernels import jitter


class QPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


def _as2d(M, n):
    if M is None:
        return np.zeros((0, n))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return M


def _as1d(v, m, fill=0.0):
    if v is None:
        return np.full(m, fill)
    return np.asarray(v, dtype=float).ravel()


@dataclass(frozen=True)
class QuadraticProgram:
    """minimize ``0.5 x^T Q x + c^T x`` subject to

    ``A_eq x = b_eq``, ``A_in x <= b_in`` and ``lower <= x <= upper``.
    Infinite bounds are allowed.
    """

    Q: np.ndarray
    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_in: Optional[np.ndarray] = None
    b_in: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ValueError(f"Q must be square, got {Q.shape}")
        if n and np.max(np.abs(Q - Q.T)) > 1e-10 * max(1.0, np.max(np.abs(Q))):
            raise ValueError("Q is not symmetric")
        c = _as1d(self.c, n)
        A_eq = _as2d(self.A_eq, n)
        A_in = _as2d(self.A_in, n)
        b_eq = _as1d(self.b_eq, A_eq.shape[0])
        b_in = _as1d(self.b_in, A_in.shape[0])
        lo = _as1d(self.lower, n, -np.inf)
        up = _as1d(self.upper, n, np.inf)
        if c.shape != (n,) or lo.shape != (n,) or up.shape != (n,):
            raise ValueError("c, lower and upper must have length n")
        if A_eq.shape[1] != n or A_in.shape[1] != n:
            raise ValueError("constraint matrices must have n columns")
        if b_eq.shape != (A_eq.shape[0],) or b_in.shape != (A_in.shape[0],):
            raise ValueError("right-hand sides do not match constraint rows")
        if np.any(lo > up):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(lo == np.inf) or np.any(up == -np.inf):
            raise ValueError("bounds must not exclude every real value")
        for name, v in (("Q", Q), ("c", c), ("A_eq", A_eq), ("b_eq", b_eq), ("A_in", A_in), ("b_in", b_in)):
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains NaN or Inf")
        for name, v in (("Q", 0.5 * (Q + Q.T)), ("c", c), ("A_eq", A_eq), ("b_eq", b_eq),
                        ("A_in", A_in), ("b_in", b_in), ("lower", lo), ("upper", up)):
            v = np.array(v, copy=True)
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def scaled(self, s: float) -> "QuadraticProgram":
        """Same feasible set, objective multiplied by ``s``."""
        return QuadraticProgram(s * self.Q, s * self.c, self.A_eq, self.b_eq,
                                self.A_in, self.b_in, self.lower, self.upper)

    def to_text(self) -> str:
        """Plain-text dump; see :func:`dump_qp`."""
        buf = io.StringIO()
        dump_qp(self, buf)
        return buf.getvalue()


def dump_qp(qp: QuadraticProgram, fh) -> None:
    """Write ``qp`` as sections of whitespace-separated rows.

    Format: a ``QP n p q`` header line, then sections ``Q`` (n rows), ``c``,
    ``A_eq`` (p rows), ``b_eq``, ``A_in`` (q rows), ``b_in``, ``lower``,
    ``upper``, each introduced by its name on its own line. Numbers are
    written with ``repr``; infinities as ``inf`` / ``-inf``.
    """
    fmt = lambda v: " ".join(repr(float(t)) for t in np.ravel(v))  # noqa: E731
    fh.write(f"QP {qp.n} {qp.A_eq.shape[0]} {qp.A_in.shape[0]}\n")
    for name in ("Q", "c", "A_eq", "b_eq", "A_in", "b_in", "lower", "upper"):
        v = getattr(qp, name)
        fh.write(name + "\n")
        if v.ndim == 2:
            for row in v:
                fh.write(fmt(row) + "\n")
        else:
            fh.write(fmt(v) + "\n")


def load_qp(fh) -> QuadraticProgram:
    lines = [ln.strip() for ln in fh.read().splitlines()]
    head = lines[0].split()
    if head[0] != "QP":
        raise ValueError("not a QP dump")
    n, p, q = (int(t) for t in head[1:4])
    rows = {"Q": n, "c": 1, "A_eq": p, "b_eq": 1, "A_in": q, "b_in": 1, "lower": 1, "upper": 1}
    out, i = {}, 1
    for name, nrows in rows.items():
        if lines[i] != name:
            raise ValueError(f"expected section {name!r}, found {lines[i]!r}")
        i += 1
        vals = []
        for _ in range(nrows):
            vals.append([float(t) for t in lines[i].split()])
            i += 1
        if name in ("Q", "A_eq", "A_in"):
            out[name] = np.array(vals, dtype=float).reshape(nrows, n)
        else:
            out[name] = np.array(vals[0], dtype=float)
    return QuadraticProgram(**out)


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    objective: float
    kkt_residual: float
    feasibility_residual: float
    iterations: int
    status: QPStatus
    y_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    z_in: np.ndarray = field(default_factory=lambda: np.zeros(0))
    z_lower: np.ndarray = field(default_factory=lambda: np.zeros(0))
    z_upper: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.status is QPStatus.OPTIMAL

    def dual_objective(self, qp: QuadraticProgram) -> float:
        """Lagrangian lower bound implied by the returned multipliers."""
        x = self.x
        val = -0.5 * x @ qp.Q @ x - qp.b_eq @ self.y_eq - qp.b_in @ self.z_in
        lo_f = np.isfinite(qp.lower)
        up_f = np.isfinite(qp.upper)
        val += qp.lower[lo_f] @ self.z_lower[lo_f] - qp.upper[up_f] @ self.z_upper[up_f]
        return float(val)


# --------------------------------------------------------------------------
# residuals

def feasibility_residual(qp: QuadraticProgram, x) -> float:
    x = np.asarray(x, dtype=float)
    res = 0.0
    if qp.A_eq.shape[0]:
        res = max(res, np.max(np.abs(qp.A_eq @ x - qp.b_eq)) / (1.0 + np.max(np.abs(qp.b_eq))))
    if qp.A_in.shape[0]:
        res = max(res, np.max(np.maximum(qp.A_in @ x - qp.b_in, 0.0)) / (1.0 + np.max(np.abs(qp.b_in))))
    lo_f = np.isfinite(qp.lower)
    up_f = np.isfinite(qp.upper)
    if lo_f.any():
        res = max(res, np.max(np.maximum(qp.lower[lo_f] - x[lo_f], 0.0)) / (1.0 + np.max(np.abs(qp.lower[lo_f]))))
    if up_f.any():
        res = max(res, np.max(np.maximum(x[up_f] - qp.upper[up_f], 0.0)) / (1.0 + np.max(np.abs(qp.upper[up_f]))))
    return float(res)


def kkt_residual(qp: QuadraticProgram, x, y_eq, z_in, z_lower, z_upper) -> float:
    x = np.asarray(x, dtype=float)
    Qx = qp.Q @ x
    obj = 0.5 * x @ Qx + qp.c @ x
    lo_f = np.isfinite(qp.lower)
    up_f = np.isfinite(qp.upper)
    zl = np.where(lo_f, z_lower, 0.0)
    zu = np.where(up_f, z_upper, 0.0)
    rd = Qx + qp.c + qp.A_eq.T @ y_eq + qp.A_in.T @ z_in - zl + zu
    scale_d = 1.0 + max(np.max(np.abs(Qx), initial=0.0), np.max(np.abs(qp.c), initial=0.0))
    stat = np.max(np.abs(rd), initial=0.0) / scale_d
    comp = 0.0
    if qp.A_in.shape[0]:
        comp = max(comp, np.max(np.abs(z_in * (qp.b_in - qp.A_in @ x))))
    if lo_f.any():
        comp = max(comp, np.max(np.abs(zl[lo_f] * (x[lo_f] - qp.lower[lo_f]))))
    if up_f.any():
        comp = max(comp, np.max(np.abs(zu[up_f] * (qp.upper[up_f] - x[up_f]))))
    comp /= 1.0 + abs(obj)
    sign = max(np.max(-z_in, initial=0.0), np.max(-zl, initial=0.0), np.max(-zu, initial=0.0), 0.0)
    sign /= scale_d
    return float(max(stat, comp, sign))


def _finish(qp, x, y, z, zl, zu, iters, tol_kkt, tol_feas, status=None) -> QPSolution:
    kkt = kkt_residual(qp, x, y, z, zl, zu)
    feas = feasibility_residual(qp, x)
    if status is None:
        status = QPStatus.OPTIMAL if (kkt <= tol_kkt and feas <= tol_feas) else QPStatus.MAX_ITERATIONS
    return QPSolution(np.array(x), qp.objective(x), kkt, feas, int(iters), status,
                      np.array(y), np.array(z), np.array(zl), np.array(zu))


# --------------------------------------------------------------------------
# phase one

def is_feasible(qp: QuadraticProgram, tol: float = 1e-8) -> bool:
    """Linear feasibility check of the constraint set (objective ignored)."""
    n = qp.n
    # elastic LP: minimise total violation t >= 0 on every row
    p, q = qp.A_eq.shape[0], qp.A_in.shape[0]
    if p == 0 and q == 0:
        return True
    nt = 2 * p + q
    cost = np.concatenate([np.zeros(n), np.ones(nt)])
    A_ub = np.hstack([qp.A_in, np.zeros((q, 2 * p)), -np.eye(q)]) if q else None
    b_ub = qp.b_in if q else None
    if p:
        A_eq = np.hstack([qp.A_eq, np.eye(p), -np.eye(p), np.zeros((p, q))])
        b_eq = qp.b_eq
    else:
        A_eq = b_eq = None
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u)
              for l, u in zip(qp.lower, qp.upper)] + [(0, None)] * nt
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return False
    scale = 1.0 + max(np.max(np.abs(qp.b_eq), initial=0.0), np.max(np.abs(qp.b_in), initial=0.0))
    return bool(res.fun <= tol * scale)


# --------------------------------------------------------------------------
# interior point

class _KKT:
    """Newton system ``[[H, A^T], [A, 0]]`` solved through a regularised factorisation.

    The factorised matrix carries ``+reg`` on the primal and ``-reg`` on the
    dual diagonal, which keeps it quasi-definite when ``Q`` is singular (for
    instance when kernel columns nearly coincide). It is solved by a
    Cholesky factor of the primal block plus a small Schur complement for
    the equality rows, or by LU when the Cholesky factorisation breaks
    down. Iterative refinement against the unregularised matrix removes
    the bias the regularisation introduces.
    """

    def __init__(self, H, A, reg):
        n, p = H.shape[0], A.shape[0]
        self.n, self.H, self.A = n, H, A
        self.chol = None
        try:
            self.chol = self._cholesky(H + reg * np.eye(n))
            if p:
                HiAt = sla.cho_solve(self.chol, A.T, check_finite=False)
                self.HiAt = HiAt
                self.S = self._factor(A @ HiAt + reg * np.eye(p))
        except np.linalg.LinAlgError:
            self.chol = None
        if self.chol is None:
            K = self.matrix()
            K[:n, :n] += reg * np.eye(n)
            K[n:, n:] -= reg * np.eye(p)
            try:
                self.lu = self._factor(K)
            except np.linalg.LinAlgError:
                K[:n, :n] += jitter(H) * np.eye(n)
                self.lu = self._factor(K)

    def matrix(self) -> np.ndarray:
        n, p = self.n, self.A.shape[0]
        K = np.zeros((n + p, n + p))
        K[:n, :n] = self.H
        K[:n, n:] = self.A.T
        K[n:, :n] = self.A
        return K

    @staticmethod
    def _cholesky(M):
        c = sla.cho_factor(M, check_finite=False)
        d = np.abs(np.diag(c[0]))
        if d.min() <= 1e-150 * d.max():
            raise np.linalg.LinAlgError("numerically singular primal block")
        return c

    @staticmethod
    def _factor(K):
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                lu = sla.lu_factor(K, check_finite=False)
            except sla.LinAlgWarning as exc:
                raise np.linalg.LinAlgError(str(exc)) from None
        d = np.abs(np.diag(lu[0]))
        if d.size and (d.min() == 0.0 or d.min() < 1e-300 * d.max()):
            raise np.linalg.LinAlgError("singular KKT matrix")
        return lu

    def _approx(self, r1, r2):
        if self.chol is None:
            sol = sla.lu_solve(self.lu, np.concatenate([r1, r2]), check_finite=False)
            return sol[:self.n], sol[self.n:]
        u = sla.cho_solve(self.chol, r1, check_finite=False)
        if not r2.size:
            return u, r2.copy()
        dy = sla.lu_solve(self.S, self.A @ u - r2, check_finite=False)
        return u - self.HiAt @ dy, dy

    def solve(self, r1, r2):
        dx, dy = self._approx(r1, r2)
        scale = 1.0 + max(np.max(np.abs(r1), initial=0.0), np.max(np.abs(r2), initial=0.0))
        prev = np.inf
        for _ in range(8):
            e1 = r1 - self.H @ dx - self.A.T @ dy
            e2 = r2 - self.A @ dx
            err = max(np.max(np.abs(e1), initial=0.0), np.max(np.abs(e2), initial=0.0))
            # stop at rounding level or once refinement stops paying off
            if err <= 1e-15 * scale or err > 0.5 * prev:
                break
            prev = err
            c1, c2 = self._approx(e1, e2)
            dx, dy = dx + c1, dy + c2
        return dx, dy


def _start_point(lo, up):
    x = np.zeros_like(lo)
    both = np.isfinite(lo) & np.isfinite(up)
    only_lo = np.isfinite(lo) & ~np.isfinite(up)
    only_up = ~np.isfinite(lo) & np.isfinite(up)
    width = up - lo
    x[both] = lo[both] + 0.5 * width[both]
    x[only_lo] = lo[only_lo] + 1.0
    x[only_up] = up[only_up] - 1.0
    fixed = both & (width == 0)
    x[fixed] = lo[fixed]
    return x


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _ipm(qp: QuadraticProgram, Q, max_iter: int, target: float):
    n = qp.n
    A, b = qp.A_eq, qp.b_eq
    G, h = qp.A_in, qp.b_in
    lo, up = qp.lower, qp.upper
    fixed = np.isfinite(lo) & np.isfinite(up) & (lo == up)
    L = np.isfinite(lo) & ~fixed
    U = np.isfinite(up) & ~fixed
    # variables with lo == up are pinned through extra equality rows
    if fixed.any():
        E = np.eye(n)[fixed]
        A = np.vstack([A, E])
        b = np.concatenate([b, lo[fixed]])
    p, q = A.shape[0], G.shape[0]

    x = _start_point(lo, up)
    y = np.zeros(p)
    s = np.maximum(h - G @ x, 1.0) if q else np.zeros(0)
    z = np.ones(q)
    zl = np.ones(int(L.sum()))
    zu = np.ones(int(U.sum()))
    m = q + zl.size + zu.size

    scale_b = 1.0 + np.max(np.abs(b), initial=0.0)
    scale_h = 1.0 + np.max(np.abs(h), initial=0.0)
    scale_c = 1.0 + np.max(np.abs(qp.c), initial=0.0)
    reg = 1e-10 * (1.0 + np.max(np.abs(np.diag(Q)), initial=0.0))

    it = 0
    best = None
    stall = 0
    for it in range(1, max_iter + 1):
        xl = x[L] - lo[L]
        xu = up[U] - x[U]
        Qx = Q @ x
        rd = Qx + qp.c + A.T @ y + G.T @ z
        rd[L] -= zl
        rd[U] += zu
        rp = A @ x - b
        rg = G @ x + s - h
        mu = (s @ z + xl @ zl + xu @ zu) / m if m else 0.0
        obj = 0.5 * x @ Qx + qp.c @ x
        pres = max(np.max(np.abs(rp), initial=0.0) / scale_b, np.max(np.abs(rg), initial=0.0) / scale_h)
        dres = np.max(np.abs(rd), initial=0.0) / (scale_c + np.max(np.abs(Qx), initial=0.0))
        cres = mu / (1.0 + abs(obj))
        if pres <= target and dres <= target and cres <= target:
            best = None
            break
        merit = max(pres, dres, cres)
        stall = 0 if best is None or merit < 0.95 * best[0] else stall + 1
        if best is None or merit < best[0]:
            best = (merit, x.copy(), y.copy(), z.copy(), s.copy(), zl.copy(), zu.copy())
        if stall >= 5 and (best[0] < 1e-5 or stall >= 30):
            # degenerate problems can stall once the barrier terms dominate;
            # the active-set polish takes over from the best iterate
            break

        d = np.zeros(n)
        d[L] += zl / xl
        d[U] += zu / xu
        W = z / s if q else np.zeros(0)
        H = Q + (G.T * W) @ G + np.diag(d)
        kkt = _KKT(H, A, reg)

        def direction(rc_s, rc_l, rc_u):
            r1 = -rd.copy()
            if q:
                r1 -= G.T @ ((rc_s + z * rg) / s)
            r1[L] += rc_l / xl
            r1[U] -= rc_u / xu
            dx, dy = kkt.solve(r1, -rp)
            ds = -rg - G @ dx if q else np.zeros(0)
            dz = (rc_s - z * ds) / s if q else np.zeros(0)
            dzl = (rc_l - zl * dx[L]) / xl
            dzu = (rc_u + zu * dx[U]) / xu
            return dx, dy, ds, dz, dzl, dzu

        def step_len(dx, ds, dz, dzl, dzu):
            return min(_max_step(s, ds), _max_step(z, dz), _max_step(xl, dx[L]),
                       _max_step(xu, -dx[U]), _max_step(zl, dzl), _max_step(zu, dzu))

        # predictor
        dx, dy, ds, dz, dzl, dzu = direction(-s * z, -xl * zl, -xu * zu)
        a_aff = step_len(dx, ds, dz, dzl, dzu)
        if m:
            mu_aff = ((s + a_aff * ds) @ (z + a_aff * dz)
                      + (xl + a_aff * dx[L]) @ (zl + a_aff * dzl)
                      + (xu - a_aff * dx[U]) @ (zu + a_aff * dzu)) / m
            sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
            # corrector
            dx, dy, ds, dz, dzl, dzu = direction(
                sigma * mu - s * z - ds * dz,
                sigma * mu - xl * zl - dx[L] * dzl,
                sigma * mu - xu * zu + dx[U] * dzu,
            )
        a = min(1.0, 0.995 * step_len(dx, ds, dz, dzl, dzu))
        if a < 1e-10:
            # a collapsed step means the Newton system is no longer informative
            break
        x = x + a * dx
        y = y + a * dy
        s = s + a * ds
        z = z + a * dz
        zl = zl + a * dzl
        zu = zu + a * dzu
        # keep strictly interior w.r.t. bounds despite rounding
        x[L] = np.maximum(x[L], np.nextafter(lo[L], np.inf))
        x[U] = np.minimum(x[U], np.nextafter(up[U], -np.inf))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            break
    if best is not None:
        _, x, y, z, s, zl, zu = best
    zl_full = np.zeros(n)
    zu_full = np.zeros(n)
    zl_full[L] = zl
    zu_full[U] = zu
    y_out = y[:qp.A_eq.shape[0]]
    if fixed.any():
        # multipliers of the pinning rows become bound multipliers
        yf = y[qp.A_eq.shape[0]:]
        zl_full[fixed] = np.maximum(-yf, 0.0)
        zu_full[fixed] = np.maximum(yf, 0.0)
        x[fixed] = lo[fixed]
    return x, y_out, z, s, zl_full, zu_full, it


def _polish_sets(qp: QuadraticProgram, Q, x, lam0, at_lo, at_up, act):
    """Newton correction with the given active set held as equalities.

    Returns the unclipped primal point and the multipliers implied by it.
    """
    n = qp.n
    lo, up = qp.lower, qp.upper
    free = ~(at_lo | at_up)
    xp = x.copy()
    xp[at_lo] = lo[at_lo]
    xp[at_up] = up[at_up]
    F = np.flatnonzero(free)
    Aeq = qp.A_eq
    C = np.vstack([Aeq, qp.A_in[act]])
    rhs_c = np.concatenate([qp.b_eq, qp.b_in[act]])
    nf, nc = F.size, C.shape[0]
    r_stat = (Q @ xp + qp.c + C.T @ lam0)[F]
    r_prim = C @ xp - rhs_c
    K = np.zeros((nf + nc, nf + nc))
    K[:nf, :nf] = Q[np.ix_(F, F)]
    K[:nf, nf:] = C[:, F].T
    K[nf:, :nf] = C[:, F]
    rhs = -np.concatenate([r_stat, r_prim])
    if K.size:
        delta = sla.lstsq(K, rhs, lapack_driver="gelsy", check_finite=False)[0]
    else:
        delta = np.zeros(0)
    xp[F] += delta[:nf]
    lam = lam0 + delta[nf:]
    yp = lam[:Aeq.shape[0]]
    zp = np.zeros(qp.A_in.shape[0])
    zp[act] = lam[Aeq.shape[0]:]
    g = Q @ xp + qp.c + qp.A_eq.T @ yp + qp.A_in.T @ zp
    zlp = np.zeros(n)
    zup = np.zeros(n)
    zlp[at_lo] = g[at_lo]
    zup[at_up] = -g[at_up]
    return xp, yp, zp, zlp, zup


def _polish(qp: QuadraticProgram, Q, x, y, z, s, zl, zu, tol_kkt, tol_feas, rounds: int = 10):
    """Re-solve the KKT conditions on the active set guessed from the IPM iterate.

    When the guess is slightly off the solve repeats with a corrected set:
    free variables that cross a bound and held constraints with
    wrong-signed multipliers switch sides. If the guess is sign-consistent
    but leaves stationarity residual on the free variables (too many free
    variables for a rank-deficient Q), the few worst are tried pinned to
    their nearer bound and the best trial is kept. Returns the best
    candidate found, or ``None`` when every candidate was unusable.
    """
    lo, up = qp.lower, qp.upper
    at_lo = np.isfinite(lo) & (x - lo < zl)
    at_up = np.isfinite(up) & (up - x < zu) & ~at_lo
    act = (s < z) if s.size else np.zeros(0, dtype=bool)
    lam = np.concatenate([y, z[act]])
    tiny = 1e-9 * (1.0 + np.max(np.abs(qp.c), initial=0.0))
    best = [np.inf, None]

    def attempt(xs, lam, at_lo, at_up, act):
        xp, yp, zp, zlp, zup = _polish_sets(qp, Q, xs, lam, at_lo, at_up, act)
        if not np.all(np.isfinite(xp)):
            return np.inf, None
        cand = _finish(qp, np.clip(xp, lo, up), yp, np.maximum(zp, 0.0), np.maximum(zlp, 0.0),
                       np.maximum(zup, 0.0), 0, tol_kkt, tol_feas)
        score = max(cand.kkt_residual / tol_kkt, cand.feasibility_residual / tol_feas)
        if score < best[0]:
            best[:] = [score, cand]
        return score, (xp, yp, zp, zlp, zup)

    xs = x
    for _ in range(rounds):
        score, raw = attempt(xs, lam, at_lo, at_up, act)
        if raw is None or score <= 1.0:
            break
        xp, yp, zp, zlp, zup = raw
        free = ~(at_lo | at_up)
        below = free & (xp < lo)
        above = free & (xp > up)
        bad_lo = at_lo & (zlp < -tiny)
        bad_up = at_up & (zup < -tiny)
        bad_act = act & (zp < -tiny)
        new_act = ~act & (qp.A_in @ xp - qp.b_in > tiny)
        xs = np.clip(xp, lo, up)
        if below.any() or above.any() or bad_lo.any() or bad_up.any() or bad_act.any() or new_act.any():
            at_lo = (at_lo & ~bad_lo) | below
            at_up = (at_up & ~bad_up) | above
            act = (act & ~bad_act) | new_act
            lam = np.concatenate([yp, zp[act]])
            continue
        g = Q @ xp + qp.c + qp.A_eq.T @ yp + qp.A_in.T @ zp
        r = np.where(free, np.abs(g), 0.0)
        trials = []
        for j in np.argsort(-r)[:min(8, int(free.sum()))]:
            tl, tu = at_lo.copy(), at_up.copy()
            if xp[j] - lo[j] <= up[j] - xp[j]:
                tl[j] = True
            else:
                tu[j] = True
            trials.append((attempt(xs, lam, tl, tu, act)[0], int(j), tl, tu))
        if not trials:
            break
        _, _, at_lo, at_up = min(trials, key=lambda t: t[:2])
    if best[1] is None:
        return None
    sol = best[1]
    return sol.x, sol.y_eq, sol.z_in, sol.z_lower, sol.z_upper


def solve(
    qp: QuadraticProgram,
    tol_kkt: float = 1e-6,
    tol_feas: float = 1e-8,
    max_iter: int = 50000,
    ridge: float = 0.0,
    check_feasibility: bool = True,
) -> QPSolution:
    """Solve a convex LCQP by interior point plus active-set polish.

    ``ridge`` adds ``ridge * I`` to Q. With ``check_feasibility`` an elastic
    LP runs first and an infeasible constraint set returns status
    ``INFEASIBLE`` without iterating. ``MAX_ITERATIONS`` results carry the
    last iterate with its true residuals.
    """
    Q = np.array(qp.Q)
    if ridge:
        Q = Q + ridge * np.eye(qp.n)
        qp = QuadraticProgram(Q, qp.c, qp.A_eq, qp.b_eq, qp.A_in, qp.b_in, qp.lower, qp.upper)
    n = qp.n
    if check_feasibility and not is_feasible(qp, tol_feas):
        x = np.clip(np.zeros(n), qp.lower, qp.upper)
        return _finish(qp, x, np.zeros(qp.A_eq.shape[0]), np.zeros(qp.A_in.shape[0]),
                       np.zeros(n), np.zeros(n), 0, tol_kkt, tol_feas, QPStatus.INFEASIBLE)
    if n == 0:
        return _finish(qp, np.zeros(0), np.zeros(qp.A_eq.shape[0]), np.zeros(qp.A_in.shape[0]),
                       np.zeros(0), np.zeros(0), 0, tol_kkt, tol_feas, QPStatus.OPTIMAL)
    ipm_iters = min(max_iter, 200)
    target = min(1e-11, 1e-3 * tol_feas)
    # non-finite steps are detected inside and the best iterate is kept
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        x, y, z, s, zl, zu, it = _ipm(qp, Q, ipm_iters, target)
    best = _finish(qp, x, y, z, zl, zu, it, tol_kkt, tol_feas)
    pol = _polish(qp, Q, x, y, z, s, zl, zu, tol_kkt, tol_feas)
    if pol is not None:
        cand = _finish(qp, *pol, it, tol_kkt, tol_feas)
        if cand.feasibility_residual <= max(tol_feas, best.feasibility_residual) and \
                cand.kkt_residual <= max(tol_kkt, best.kkt_residual):
            best = cand
    return best


# --------------------------------------------------------------------------
# SMO

def solve_box_single_equality(
    Q,
    c,
    y,
    C_upper,
    tol_kkt: float = 1e-6,
    tol_feas: float = 1e-8,
    max_iter: int = 50000,
) -> QPSolution:
    """minimize ``0.5 x^T Q x + c^T x`` s.t. ``y^T x = 0``, ``0 <= x <= C_upper``.

    ``y`` has entries +-1 and ``Q`` is the label-scaled matrix. Pairs are
    picked by the maximal-violating-pair / second-order rule and updated
    analytically; iteration stops when the violation gap is below
    ``1e-3 * tol_kkt`` (relative to the gradient scale).
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = c.shape[0]
    Cu = np.broadcast_to(np.asarray(C_upper, dtype=float), (n,)).copy()
    if Q.shape != (n, n) or y.shape != (n,):
        raise ValueError("shape mismatch")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("y must be +-1")
    if np.any(Cu < 0):
        raise ValueError("C_upper must be non-negative")
    qp = QuadraticProgram(Q, c, y.reshape(1, -1), np.zeros(1), None, None, np.zeros(n), Cu)

    alpha = np.zeros(n)
    G = c.copy()
    QD = np.diag(Q).copy()
    eps = 1e-3 * tol_kkt * (1.0 + np.max(np.abs(c), initial=0.0))
    tau = 1e-12
    it = 0
    for it in range(1, max_iter + 1):
        yG = -y * G
        up_mask = ((y > 0) & (alpha < Cu)) | ((y < 0) & (alpha > 0))
        low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < Cu))
        if not up_mask.any() or not low_mask.any():
            break
        yG_up = np.where(up_mask, yG, -np.inf)
        i = int(np.argmax(yG_up))
        m_val = yG_up[i]
        M_val = np.min(np.where(low_mask, yG, np.inf))
        if m_val - M_val < eps:
            break
        # second-order choice of j among violating partners
        b_t = m_val - yG
        cand = low_mask & (b_t > 0)
        a_t = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a_t = np.where(a_t > 0, a_t, tau)
        score = np.where(cand, -(b_t * b_t) / a_t, np.inf)
        j = int(np.argmin(score))
        Ci, Cj = Cu[i], Cu[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else tau
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else tau
            delta = (G[i] - G[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Q[:, i] * (ai - ai_old) + Q[:, j] * (aj - aj_old)
    else:
        it = max_iter

    # snap values within rounding of a bound, then recover multipliers
    alpha = np.clip(alpha, 0.0, Cu)
    G = Q @ alpha + c
    yG = -y * G
    free = (alpha > 0) & (alpha < Cu)
    if free.any():
        nu = float(np.mean(yG[free]))
    else:
        up_mask = ((y > 0) & (alpha < Cu)) | ((y < 0) & (alpha > 0))
        low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < Cu))
        hi = np.max(yG[up_mask]) if up_mask.any() else np.inf
        lo_ = np.min(yG[low_mask]) if low_mask.any() else -np.inf
        if np.isfinite(hi) and np.isfinite(lo_):
            nu = 0.5 * (hi + lo_)
        else:
            nu = float(hi if np.isfinite(hi) else (lo_ if np.isfinite(lo_) else 0.0))
    r = G + nu * y
    at_lo = alpha <= 0.0
    at_up = alpha >= Cu
    # a zero-width box is at both bounds and takes either sign of r
    zl = np.where(at_lo, np.maximum(r, 0.0), 0.0)
    zu = np.where(at_up, np.maximum(-r, 0.0), 0.0)
    sol = _finish(qp, alpha, np.array([nu]), np.zeros(0), zl, zu, it, tol_kkt, tol_feas)
    return sol


def require_optimal(sol: QPSolution, what: str = "QP") -> QPSolution:
    if not sol.ok:
        raise SolverError(
            f"{what} ended with status {sol.status.value} "
            f"(kkt={sol.kkt_residual:.2e}, feas={sol.feasibility_residual:.2e}, iters={sol.iterations})",
            solution=sol,
        )
    return sol
