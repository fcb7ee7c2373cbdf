"""Embedded conic solver: homogeneous self-dual interior-point method.

Solves min c'x s.t. Ax = b, x in K (free x nonneg x SOC x rotated-SOC)
with Nesterov-Todd scaling on second-order blocks and a Mehrotra-style
predictor-corrector.  The homogeneous embedding produces Farkas
certificates for infeasible programs instead of failing, which the
scenario studies rely on.

Rotated cones are reduced to plain second-order cones up front by the
orthogonal-ish change of variables (v, w, u) -> ((v+w)/s2, (v-w)/s2,
s2*u); solutions and dual slacks are mapped back before returning.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .conic import FREE, NONNEG, RSOC, SOC, ConicProgram

__all__ = [
    "SolveSettings",
    "SolveStatus",
    "Residuals",
    "SolveResult",
    "solve",
    "check_certificate",
]

_STEP_FRACTION = 0.99
_STALL_STEP = 1e-8
_MIN_MU = 1e-16


@dataclass(frozen=True)
class SolveSettings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    infeas_cert_tol: float = 1e-8
    max_iterations: int = 200
    static_regularization: float = 1e-10

    def __post_init__(self):
        for fld in ("feas_tol", "gap_tol", "infeas_cert_tol", "static_regularization"):
            if getattr(self, fld) <= 0:
                raise ValueError(f"{fld} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    NUMERICAL_LIMIT = "numerical_limit"


@dataclass(frozen=True)
class Residuals:
    primal: float
    dual: float
    gap: float


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    primal_x: np.ndarray
    dual_y: np.ndarray
    dual_slack_s: np.ndarray
    objective_primal: float
    objective_dual: float
    residuals: Residuals
    iterations: int


# ---------------------------------------------------------------------------
# Jordan-algebra helpers for a single second-order cone block.
# For u = (u0, u1): det(u) = u0^2 - |u1|^2, J u = (u0, -u1) and
# P(u) v = 2 u (u.v) - det(u) J v is the quadratic representation.


def _jdet(u: np.ndarray) -> float:
    return float(u[0] * u[0] - u[1:] @ u[1:])


def _japply(u: np.ndarray, det_u: float, v: np.ndarray) -> np.ndarray:
    out = (2.0 * (u @ v)) * u
    out[0] -= det_u * v[0]
    out[1:] += det_u * v[1:]
    return out


def _jsqrt(u: np.ndarray, det_u: float) -> np.ndarray:
    v0 = math.sqrt(max((u[0] + math.sqrt(max(det_u, 0.0))) / 2.0, 0.0))
    v = np.empty_like(u)
    v[0] = v0
    v[1:] = u[1:] / (2.0 * v0)
    return v


def _jinv(u: np.ndarray, det_u: float) -> np.ndarray:
    v = -u / det_u
    v[0] = u[0] / det_u
    return v


def _jprod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = a[0] * b
    out[0] = a @ b
    out[1:] += b[0] * a[1:]
    return out


def _jdivide(lam: np.ndarray, d: np.ndarray) -> np.ndarray:
    det = _jdet(lam)
    u0 = (lam[0] * d[0] - lam[1:] @ d[1:]) / det
    u = np.empty_like(d)
    u[0] = u0
    u[1:] = (d[1:] - u0 * lam[1:]) / lam[0]
    return u


class _SocScaling:
    """Nesterov-Todd scaling data for one SOC block."""

    __slots__ = ("lam", "w2inv", "_r", "_r_inv", "_det_r", "_lam_isq", "_det_lisq")

    def __init__(self, x: np.ndarray, s: np.ndarray):
        det_x, det_s = _jdet(x), _jdet(s)
        if det_x <= 0 or det_s <= 0 or x[0] <= 0 or s[0] <= 0:
            raise FloatingPointError("iterate left the cone interior")
        xb = x / math.sqrt(det_x)
        sb = s / math.sqrt(det_s)
        gamma = math.sqrt((1.0 + xb @ sb) / 2.0)
        wb = np.empty_like(x)
        wb[0] = (xb[0] + sb[0]) / (2.0 * gamma)
        wb[1:] = (xb[1:] - sb[1:]) / (2.0 * gamma)
        eta = (det_x / det_s) ** 0.25
        w = eta * wb
        det_w = eta * eta

        self._r = _jsqrt(w, det_w)
        self._det_r = _jdet(self._r)
        self._r_inv = _jinv(self._r, self._det_r)
        self.lam = _japply(self._r_inv, 1.0 / self._det_r, x)

        w_inv = _jinv(w, det_w)
        self.w2inv = 2.0 * np.outer(w_inv, w_inv)
        det_winv = 1.0 / det_w
        self.w2inv[0, 0] -= det_winv
        idx = np.arange(1, len(w))
        self.w2inv[idx, idx] += det_winv

        lam_sq = _jsqrt(self.lam, _jdet(self.lam))
        det_lsq = _jdet(lam_sq)
        self._lam_isq = _jinv(lam_sq, det_lsq)
        self._det_lisq = _jdet(self._lam_isq)

    def w_apply(self, v: np.ndarray) -> np.ndarray:
        return _japply(self._r, self._det_r, v)

    def w_inv_apply(self, v: np.ndarray) -> np.ndarray:
        return _japply(self._r_inv, 1.0 / self._det_r, v)

    def max_step(self, d_scaled: np.ndarray) -> float:
        # lam + a*d in K  iff  1 + a*eigmin(P(lam^-1/2) d) >= 0
        g = _japply(self._lam_isq, self._det_lisq, d_scaled)
        m = g[0] - float(np.linalg.norm(g[1:]))
        return math.inf if m >= 0 else 1.0 / (-m)


class _Layout:
    """Column layout of a reduced (free/nonneg/soc) program."""

    def __init__(self, cones):
        free, nn, soc = [], [], []
        at = 0
        for cone in cones:
            if cone.kind == FREE:
                free.extend(range(at, at + cone.dim))
            elif cone.kind == NONNEG:
                nn.extend(range(at, at + cone.dim))
            elif cone.kind == SOC:
                soc.append((at, at + cone.dim))
            else:
                raise ValueError("layout expects a reduced program")
            at += cone.dim
        self.n = at
        self.free = np.array(free, dtype=int)
        self.nn = np.array(nn, dtype=int)
        self.soc = soc
        self.conic = np.concatenate(
            [self.nn] + [np.arange(a, b) for a, b in soc]
        ) if (len(nn) or soc) else np.array([], dtype=int)
        self.nu = len(nn) + len(soc)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[self.nn] = 1.0
        for a, _ in self.soc:
            e[a] = 1.0
        return e


def _rsoc_transform(dim: int) -> np.ndarray:
    a = 1.0 / math.sqrt(2.0)
    t = np.zeros((dim, dim))
    t[0, 0] = t[0, 1] = t[1, 0] = a
    t[1, 1] = -a
    for j in range(2, dim):
        t[j, j] = math.sqrt(2.0)
    return t


def _reduce_rsoc(program: ConicProgram):
    """Rewrite rotated cones as plain SOCs; returns (A, b, c, cones, blocks)."""
    A = program.equality_A.toarray()
    c = program.objective_c.copy()
    cones = []
    blocks = []  # (start, T, Tinv) per rotated block, for the post-solve map
    at = 0
    from .conic import Cone

    for cone in program.cone_spec:
        if cone.kind == RSOC:
            T = _rsoc_transform(cone.dim)
            Tinv = np.linalg.inv(T)
            sl = slice(at, at + cone.dim)
            A[:, sl] = A[:, sl] @ Tinv
            c[sl] = Tinv.T @ c[sl]
            blocks.append((at, T, Tinv))
            cones.append(Cone(SOC, cone.dim))
        else:
            cones.append(cone)
        at += cone.dim
    return A, program.equality_b.copy(), c, tuple(cones), blocks


def _post_map(blocks, x: np.ndarray, s: np.ndarray):
    for at, T, Tinv in blocks:
        sl = slice(at, at + T.shape[0])
        x[sl] = Tinv @ x[sl]
        s[sl] = T.T @ s[sl]
    return x, s


def _original_residuals(program: ConicProgram, x, y, s) -> tuple[Residuals, float, float]:
    A, b, c = program.equality_A, program.equality_b, program.objective_c
    pres = np.linalg.norm(A @ x - b) / (1.0 + np.linalg.norm(b))
    dres = np.linalg.norm(A.T @ y + s - c) / (1.0 + np.linalg.norm(c))
    pobj = float(c @ x)
    dobj = float(b @ y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return Residuals(float(pres), float(dres), float(gap)), pobj, dobj


def solve(
    program: ConicProgram,
    settings: SolveSettings | None = None,
    iter_log=None,
) -> SolveResult:
    """Solve a canonical conic program to the configured tolerances.

    Deterministic for identical inputs and settings.  ``iter_log`` may be a
    writable text stream receiving per-iteration CSV diagnostics.
    """
    st = settings or SolveSettings()
    if not (np.all(np.isfinite(program.objective_c)) and np.all(np.isfinite(program.equality_b))):
        raise ValueError("program data must be finite")

    A, b, c, cones, rsoc_blocks = _reduce_rsoc(program)
    m, n = A.shape
    lay = _Layout(cones)
    delta = st.static_regularization
    norm_a = 1.0 + float(np.linalg.norm(A))

    x = lay.identity()
    s = lay.identity()
    y = np.zeros(m)
    tau, kap = 1.0, 1.0

    dim = n + m
    K = np.zeros((dim, dim))
    K[:n, n:] = A.T
    K[n:, :n] = A
    diag = np.arange(n)
    K[n + np.arange(m), n + np.arange(m)] = -delta

    if iter_log is not None:
        iter_log.write("iteration,mu,res_primal,res_dual,res_gap,tau,kappa,step\n")

    def finish(status, xs, ys, ss, iters):
        xo, so = _post_map(rsoc_blocks, xs.copy(), ss.copy())
        res, pobj, dobj = _original_residuals(program, xo, ys, so)
        Ao = program.equality_A
        if status is SolveStatus.PRIMAL_INFEASIBLE:
            # residuals carry the Farkas residual; objectives are undefined
            res = Residuals(math.nan, float(np.linalg.norm(Ao.T @ ys + so)), math.nan)
            pobj = dobj = math.nan
        elif status is SolveStatus.DUAL_INFEASIBLE:
            res = Residuals(float(np.linalg.norm(Ao @ xo)), math.nan, math.nan)
            pobj = dobj = math.nan
        elif status is SolveStatus.NUMERICAL_LIMIT:
            pobj = dobj = math.nan
        return SolveResult(
            status=status,
            primal_x=xo,
            dual_y=ys.copy(),
            dual_slack_s=so,
            objective_primal=pobj,
            objective_dual=dobj,
            residuals=res,
            iterations=iters,
        )

    def k_true_mv(v: np.ndarray) -> np.ndarray:
        out = K @ v
        out[:n] -= delta * v[:n]
        out[n:] += delta * v[n:]
        return out

    def k_solve(lu, rhs: np.ndarray) -> np.ndarray:
        sol = sla.lu_solve(lu, rhs)
        for _ in range(2):
            resid = rhs - k_true_mv(sol)
            if np.linalg.norm(resid) <= 1e-12 * (1.0 + np.linalg.norm(rhs)):
                break
            sol = sol + sla.lu_solve(lu, resid)
        return sol

    alpha = 0.0
    it = 0
    for it in range(st.max_iterations):
        r_p = A @ x - b * tau
        r_d = -(A.T @ y) - s + c * tau
        r_g = float(c @ x - b @ y + kap)
        mu = (float(x[lay.conic] @ s[lay.conic]) + tau * kap) / (lay.nu + 1)

        # -- termination tests on the original-space candidate points
        xo, so = _post_map(rsoc_blocks, (x / tau).copy(), (s / tau).copy())
        res, pobj, dobj = _original_residuals(program, xo, y / tau, so)
        if iter_log is not None:
            iter_log.write(
                f"{it},{mu:.3e},{res.primal:.3e},{res.dual:.3e},{res.gap:.3e},"
                f"{tau:.3e},{kap:.3e},{alpha:.3e}\n"
            )
        if res.primal <= st.feas_tol and res.dual <= st.feas_tol and res.gap <= st.gap_tol:
            return finish(SolveStatus.OPTIMAL, x / tau, y / tau, s / tau, it)

        ratio_gate = tau <= math.sqrt(st.infeas_cert_tol) * max(1.0, kap)
        by = float(b @ y)
        if ratio_gate and by > 0:
            if np.linalg.norm(A.T @ y + s) <= st.infeas_cert_tol * norm_a * by:
                return finish(
                    SolveStatus.PRIMAL_INFEASIBLE, x, y / by, s / by, it
                )
        cx = float(c @ x)
        if ratio_gate and cx < 0:
            if np.linalg.norm(A @ x) <= st.infeas_cert_tol * norm_a * (-cx):
                return finish(
                    SolveStatus.DUAL_INFEASIBLE, x / (-cx), y, s / (-cx), it
                )
        if mu < _MIN_MU:
            break

        # -- Nesterov-Todd scalings
        try:
            nn_x, nn_s = x[lay.nn], s[lay.nn]
            if (nn_x <= 0).any() or (nn_s <= 0).any():
                raise FloatingPointError("iterate left the cone interior")
            v_nn = nn_s / nn_x
            lam_nn = np.sqrt(nn_x * nn_s)
            w_nn = np.sqrt(nn_x / nn_s)
            socs = [_SocScaling(x[a:e], s[a:e]) for a, e in lay.soc]
        except FloatingPointError:
            break

        K[diag, diag] = delta
        K[lay.nn, lay.nn] = v_nn + delta
        for (a, e), sc in zip(lay.soc, socs):
            K[a:e, a:e] = sc.w2inv
            K[np.arange(a, e), np.arange(a, e)] += delta
        try:
            lu = sla.lu_factor(K)
        except (ValueError, np.linalg.LinAlgError):
            break

        sol2 = k_solve(lu, np.concatenate([-c, b]))
        u2, z2 = sol2[:n], sol2[n:]
        denom = float(c @ u2 + b @ z2) - kap / tau

        def direction(rhs_d, rhs_p, rhs_g, ds_nn, ds_socs, d_kap):
            r1 = rhs_d.copy()
            if len(lay.nn):
                r1[lay.nn] += ds_nn / (lam_nn * w_nn)  # W^-1 (lam \ ds)
            for (a, e), sc, dsb in zip(lay.soc, socs, ds_socs):
                r1[a:e] += sc.w_inv_apply(_jdivide(sc.lam, dsb))
            sol1 = k_solve(lu, np.concatenate([r1, rhs_p]))
            u1, z1 = sol1[:n], sol1[n:]
            dtau = (rhs_g - d_kap / tau - float(c @ u1 + b @ z1)) / denom
            dx = u1 + dtau * u2
            dy = -(z1 + dtau * z2)
            ds = np.zeros(n)
            if len(lay.nn):
                ds[lay.nn] = ds_nn / (lam_nn * w_nn) - v_nn * dx[lay.nn]
            for (a, e), sc, dsb in zip(lay.soc, socs, ds_socs):
                ds[a:e] = sc.w_inv_apply(_jdivide(sc.lam, dsb)) - sc.w2inv @ dx[a:e]
            dkap = (d_kap - kap * dtau) / tau
            return dx, dy, ds, dtau, dkap

        def max_step(dx, ds, dtau, dkap):
            am = math.inf
            if dtau < 0:
                am = min(am, -tau / dtau)
            if dkap < 0:
                am = min(am, -kap / dkap)
            if len(lay.nn):
                dxs = dx[lay.nn] / w_nn
                dss = ds[lay.nn] * w_nn
                for dv in (dxs, dss):
                    neg = dv < 0
                    if neg.any():
                        am = min(am, float(np.min(-lam_nn[neg] / dv[neg])))
            for (a, e), sc in zip(lay.soc, socs):
                am = min(am, sc.max_step(sc.w_inv_apply(dx[a:e])))
                am = min(am, sc.max_step(sc.w_apply(ds[a:e])))
            return am

        # predictor (affine scaling) direction
        ds_nn_aff = -lam_nn * lam_nn
        ds_soc_aff = [-_jprod(sc.lam, sc.lam) for sc in socs]
        aff = direction(-r_d, -r_p, -r_g, ds_nn_aff, ds_soc_aff, -tau * kap)
        dx_a, dy_a, ds_a, dtau_a, dkap_a = aff
        a_aff = min(1.0, max_step(dx_a, ds_a, dtau_a, dkap_a))
        mu_aff = (
            float((x + a_aff * dx_a)[lay.conic] @ (s + a_aff * ds_a)[lay.conic])
            + (tau + a_aff * dtau_a) * (kap + a_aff * dkap_a)
        ) / (lay.nu + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector + centering
        ds_nn = sigma * mu - lam_nn * lam_nn - (dx_a[lay.nn] / w_nn) * (ds_a[lay.nn] * w_nn)
        ds_socs = []
        for (a, e), sc, base in zip(lay.soc, socs, ds_soc_aff):
            corr = _jprod(sc.w_inv_apply(dx_a[a:e]), sc.w_apply(ds_a[a:e]))
            d = base - corr
            d[0] += sigma * mu
            ds_socs.append(d)
        eta = 1.0 - sigma
        d_kap = sigma * mu - tau * kap - dtau_a * dkap_a
        dx, dy, ds, dtau, dkap = direction(
            -eta * r_d, -eta * r_p, -eta * r_g, ds_nn, ds_socs, d_kap
        )
        alpha = min(1.0, _STEP_FRACTION * max_step(dx, ds, dtau, dkap))
        if alpha <= _STALL_STEP:
            break
        x += alpha * dx
        y += alpha * dy
        s += alpha * ds
        tau += alpha * dtau
        kap += alpha * dkap

    return finish(SolveStatus.NUMERICAL_LIMIT, x / tau, y / tau, s / tau, it)


def _cone_violation(kind: str, v: np.ndarray, dual: bool) -> float:
    """Distance-like violation of cone (or dual cone) membership."""
    if kind == FREE:
        return float(np.max(np.abs(v))) if dual and len(v) else 0.0
    if kind == NONNEG:
        return max(0.0, float(-v.min())) if len(v) else 0.0
    if kind == SOC:
        return max(0.0, float(np.linalg.norm(v[1:]) - v[0]))
    if kind == RSOC:
        T = _rsoc_transform(len(v))
        z = (np.linalg.inv(T) @ v) if dual else (T @ v)
        return max(0.0, float(np.linalg.norm(z[1:]) - z[0]))
    raise ValueError(kind)


def _membership(program: ConicProgram, v: np.ndarray, dual: bool, tol: float) -> bool:
    at = 0
    for cone in program.cone_spec:
        if _cone_violation(cone.kind, v[at : at + cone.dim], dual) > tol:
            return False
        at += cone.dim
    return True


def check_certificate(
    program: ConicProgram, result: SolveResult, settings: SolveSettings | None = None
) -> bool:
    """Re-verify an optimality or infeasibility certificate from scratch.

    Uses only the program data and the result vectors; no solver state.
    """
    st = settings or SolveSettings()
    A, b, c = program.equality_A, program.equality_b, program.objective_c
    if result.status is SolveStatus.OPTIMAL:
        x, y, s = result.primal_x, result.dual_y, result.dual_slack_s
        res, pobj, dobj = _original_residuals(program, x, y, s)
        scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
        dscale = 1.0 + float(np.max(np.abs(s), initial=0.0))
        return (
            res.primal <= st.feas_tol
            and res.dual <= st.feas_tol
            and res.gap <= st.gap_tol
            and _membership(program, x, dual=False, tol=st.feas_tol * scale)
            and _membership(program, s, dual=True, tol=st.feas_tol * dscale)
        )
    if result.status is SolveStatus.PRIMAL_INFEASIBLE:
        y, s = result.dual_y, result.dual_slack_s
        by = float(b @ y)
        if by <= 0:
            return False
        yn, sn = y / by, s / by  # scale-invariant normalization
        tol = st.infeas_cert_tol * (1.0 + float(np.linalg.norm(A.toarray())) * np.linalg.norm(yn))
        if np.linalg.norm(A.T @ yn + sn) > tol:
            return False
        sscale = 1.0 + float(np.max(np.abs(sn), initial=0.0))
        return _membership(program, sn, dual=True, tol=st.infeas_cert_tol * sscale)
    raise ValueError(f"no certificate check for status {result.status.name}")
