"""SMO solver for the soft-margin SVM dual on pair data.

Training rows are pairs ``(left, right)`` of points. For the RBF kernel on the
concatenated pair, ``K((a, b), (c, d)) = k(a, c) * k(b, d)``, so a kernel entry
is two lookups into the small point-level Gram matrix ``Kb``.

Working-set selection uses second-order information (Fan, Chen & Lin, 2005),
as in LIBSVM, without shrinking.
"""
from __future__ import annotations

import numpy as np
from numba import njit

TAU = 1e-12


@njit(cache=True)
def smo_pairs(Kb, li, ri, y, C, eps, max_iter):
    """Solve ``min 0.5 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0``.

    Returns ``(alpha, rho, n_iter, converged)``; the decision function is
    ``sum_t y_t alpha_t K(x_t, x) - rho``.
    """
    M = y.shape[0]
    alpha = np.zeros(M)
    G = -np.ones(M)
    Ki = np.empty(M)
    Kj = np.empty(M)
    n_iter = 0
    converged = False
    while n_iter < max_iter:
        # i: maximal violating index in I_up
        Gmax = -np.inf
        i = -1
        for t in range(M):
            if y[t] > 0:
                if alpha[t] < C:
                    v = -G[t]
                    if v > Gmax:
                        Gmax = v
                        i = t
            else:
                if alpha[t] > 0:
                    v = G[t]
                    if v > Gmax:
                        Gmax = v
                        i = t
        if i < 0:
            converged = True
            break
        a_i = li[i]
        b_i = ri[i]
        for t in range(M):
            Ki[t] = Kb[a_i, li[t]] * Kb[b_i, ri[t]]
        Kii = Ki[i]

        # j: second-order choice among I_low
        Gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(M):
            in_low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
            if not in_low:
                continue
            yG = y[t] * G[t]
            if yG > Gmax2:
                Gmax2 = yG
            grad_diff = Gmax + yG
            if grad_diff > 0:
                Ktt = Kb[li[t], li[t]] * Kb[ri[t], ri[t]]
                quad = Kii + Ktt - 2.0 * Ki[t]
                if quad <= 0:
                    quad = TAU
                obj = -(grad_diff * grad_diff) / quad
                if obj < obj_min:
                    obj_min = obj
                    j = t
        if Gmax + Gmax2 < eps or j < 0:
            converged = True
            break

        a_j = li[j]
        b_j = ri[j]
        for t in range(M):
            Kj[t] = Kb[a_j, li[t]] * Kb[b_j, ri[t]]
        Kjj = Kj[j]
        Kij = Ki[j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        yi = y[i]
        yj = y[j]

        if yi != yj:
            quad = Kii + Kjj - 2.0 * Kij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = Kii + Kjj - 2.0 * Kij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s

        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        ci = yi * dai
        cj = yj * daj
        for t in range(M):
            G[t] += y[t] * (ci * Ki[t] + cj * Kj[t])
        n_iter += 1

    # rho from free vectors, or midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    s_free = 0.0
    for t in range(M):
        yG = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            n_free += 1
            s_free += yG
    if n_free > 0:
        rho = s_free / n_free
    else:
        rho = (ub + lb) / 2.0
    return alpha, rho, n_iter, converged
