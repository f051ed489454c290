"""Derivative-free simplex descent (Nelder-Mead with shrink and restart)."""

import numpy as np

from .errors import ConvergenceError


def nelder_mead(f, x0, step, xtol, max_eval=2000, restarts=1):
    """Minimize f over R^2 starting from x0.

    Standard reflect/expand/contract/shrink simplex; converged when the
    simplex diameter drops below xtol.  After convergence the search is
    restarted ``restarts`` times from the incumbent with a 100x smaller
    simplex to shake off premature shrinkage.  Returns (x, fx, n_eval).
    """
    x0 = np.asarray(x0, dtype=float)
    n_eval = 0

    def run(start, scale):
        nonlocal n_eval
        pts = [start.copy()]
        for i in range(start.size):
            p = start.copy()
            p[i] += scale
            pts.append(p)
        simplex = np.array(pts)
        values = np.array([f(p) for p in simplex])
        n_eval += len(simplex)
        while n_eval < max_eval:
            order = np.argsort(values, kind="stable")
            simplex, values = simplex[order], values[order]
            diam = max(np.linalg.norm(simplex[i] - simplex[0])
                       for i in range(1, len(simplex)))
            if diam < xtol:
                return simplex[0], values[0], True
            centroid = simplex[:-1].mean(axis=0)
            worst = simplex[-1]
            refl = centroid + (centroid - worst)
            f_refl = f(refl)
            n_eval += 1
            if f_refl < values[0]:
                expd = centroid + 2.0 * (centroid - worst)
                f_expd = f(expd)
                n_eval += 1
                if f_expd < f_refl:
                    simplex[-1], values[-1] = expd, f_expd
                else:
                    simplex[-1], values[-1] = refl, f_refl
            elif f_refl < values[-2]:
                simplex[-1], values[-1] = refl, f_refl
            else:
                contr = centroid + 0.5 * (worst - centroid)
                f_contr = f(contr)
                n_eval += 1
                if f_contr < values[-1]:
                    simplex[-1], values[-1] = contr, f_contr
                else:
                    for i in range(1, len(simplex)):
                        simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                        values[i] = f(simplex[i])
                    n_eval += len(simplex) - 1
        return simplex[np.argmin(values)], values.min(), False

    best, f_best, ok = run(x0, step)
    for _ in range(restarts):
        if not ok:
            break
        best, f_best, ok = run(best, max(step * 1e-2, xtol * 100.0))
    if not ok:
        raise ConvergenceError(
            f"simplex descent exhausted {max_eval} evaluations before the "
            f"simplex diameter reached {xtol:g}")
    return best, f_best, n_eval
