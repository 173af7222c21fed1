"""
Dense active-set solver for small strictly convex QPs::

    minimize    0.5 x'Hx + g'x
    subject to  A x + c >= 0

Dual active-set iteration in the style of Goldfarb and Idnani: start at the
unconstrained minimizer and add the most violated constraint, dropping
constraints whose multipliers would turn negative. No feasible starting
point is needed and an empty feasible set is detected directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


KKT_TOL = 1e-8  # acceptance level for each KKT residual


class QpError(RuntimeError):
    pass


class InfeasibleQP(QpError):
    """The constraint polyhedron is empty."""


class QpIterationLimit(QpError):
    pass


@dataclass(frozen=True, eq=False)
class QpSubproblem:
    hessian: np.ndarray
    gradient: np.ndarray
    constraint_normals: np.ndarray
    constraint_offsets: np.ndarray

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.hessian @ x + self.gradient @ x)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return self.constraint_normals @ x + self.constraint_offsets


def kkt_residuals(qp: QpSubproblem, x: np.ndarray, mu: np.ndarray) -> dict[str, float]:
    """Stationarity, primal/dual feasibility and complementarity errors."""
    s = qp.residuals(x)
    return {
        "stationarity": float(np.linalg.norm(qp.hessian @ x + qp.gradient - qp.constraint_normals.T @ mu)),
        "primal": float(max(0.0, -s.min())) if len(s) else 0.0,
        "dual": float(max(0.0, -mu.min())) if len(mu) else 0.0,
        "complementarity": float(np.abs(mu * s).max()) if len(mu) else 0.0,
    }


def active_set_solve(qp: QpSubproblem, tol: float = 1e-12, max_iter: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Return the minimizer and one multiplier per constraint row."""
    H = np.asarray(qp.hessian, dtype=float)
    g = np.asarray(qp.gradient, dtype=float)
    A = np.asarray(qp.constraint_normals, dtype=float).reshape(-1, len(g))
    c = np.asarray(qp.constraint_offsets, dtype=float).reshape(-1)
    m = len(c)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise QpError("QP Hessian is not positive definite") from exc

    def hsolve(v):
        return np.linalg.solve(L.T, np.linalg.solve(L, v))

    x = -hsolve(g)
    active: list[int] = []
    u = np.zeros(0)
    scale = 1.0 + np.linalg.norm(A, axis=1)

    for _ in range(max_iter):
        s = A @ x + c
        viol = np.full(m, np.inf)
        inactive = [j for j in range(m) if j not in active]
        if inactive:
            viol[inactive] = s[inactive] / scale[inactive]
        p = int(np.argmin(viol)) if m else -1
        if m == 0 or viol[p] >= -tol:
            mu = np.zeros(m)
            mu[active] = u
            return x, mu

        n_p = A[p]
        u_p = 0.0
        while True:
            Hinp = hsolve(n_p)
            if active:
                N = A[active]
                HiNt = hsolve(N.T)
                r = np.linalg.solve(N @ HiNt, N @ Hinp)
                z = Hinp - HiNt @ r
            else:
                r = np.zeros(0)
                z = Hinp

            # dual step length: largest t keeping active multipliers >= 0
            t1, k_drop = np.inf, -1
            for idx, rj in enumerate(r):
                if rj > tol:
                    ratio = u[idx] / rj
                    if ratio < t1:
                        t1, k_drop = ratio, idx

            zn = float(z @ n_p)
            if zn <= 1e-12 * float(n_p @ Hinp):
                # n_p is dependent on the active normals
                if k_drop < 0:
                    raise InfeasibleQP(f"constraint {p} cannot be satisfied together with {active}")
                u = u - t1 * r
                u_p += t1
                del active[k_drop]
                u = np.delete(u, k_drop)
                continue

            t2 = -float(n_p @ x + c[p]) / zn
            t = min(t1, t2)
            x = x + t * z
            u = u - t * r
            u_p += t
            if t2 <= t1:
                active.append(p)
                u = np.append(u, u_p)
                break
            del active[k_drop]
            u = np.delete(u, k_drop)
    raise QpIterationLimit(f"active-set iteration cap of {max_iter} exceeded")
