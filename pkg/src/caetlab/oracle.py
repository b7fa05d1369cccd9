"""Cost-aware characteristic time and optimal sampling proportions.

For a tie-free mean vector ``mu`` with partition ``m`` and costs ``c``,
the allocation problem is

    max_{w in simplex over P}  min_{(a, b) in I_m}  pair_value(w; a, b)

where ``P`` holds the arms of the partition's support with positive cost
and the pair value is the cost-weighted transportation cost of swapping
the pair:

* both arms paid:  p d(mu_a, x) + q d(mu_b, x), with p = w_a / c_a,
  q = w_b / c_b and x = (p mu_a + q mu_b) / (p + q)
* only a paid:     p d(mu_a, mu_b)
* only b paid:     q d(mu_b, mu_a)

The optimum value is ``1 / T*`` and ``u* = G_c(w*)`` rescales the weights
by inverse cost into the pulling proportion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from scipy.optimize import minimize

from .errors import InfeasibleTask, InvalidArgument, SolverFailure, TieError, UnsupportedError
from .exp_family import RewardFamily
from .task import PairwiseTask, classify, pairs_of, support

ETA0 = 0.5
MAX_ITER = 50_000
PATIENCE = 500
GOLDEN_TOL = 1e-12

_BOTH, _A_ONLY, _B_ONLY = 0, 1, 2
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OracleResult:
    omega_star: np.ndarray
    u_star: np.ndarray
    t_star: float
    inner_value: float
    iterations: int = 0
    converged: bool = True
    positive_support: tuple = ()

    def to_dict(self) -> dict:
        return {
            "omega_star": [float(x) for x in self.omega_star],
            "u_star": [float(x) for x in self.u_star],
            "t_star": float(self.t_star),
            "inner_value": float(self.inner_value),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


class PairObjective:
    """The min-over-pairs objective restricted to the positive-cost arms.

    Weights are passed as a sequence over ``self.active`` (the positive
    support, in increasing arm order). Evaluation uses plain floats because
    it sits inside the per-step loop of the sequential algorithm.
    """

    def __init__(self, family: RewardFamily, c, mu, pairs, arms):
        self.family = family
        c = [float(x) for x in c]
        mu = [float(x) for x in mu]
        self.active = tuple(sorted(a for a in arms if c[a] > 0.0))
        if not self.active:
            raise InfeasibleTask("no arm of the support has positive cost")
        pos = {a: i for i, a in enumerate(self.active)}
        self.terms = []
        for a, b in pairs:
            pa, pb = a in pos, b in pos
            if pa and pb:
                const = 0.0
                if family.is_gaussian:
                    const = (mu[a] - mu[b]) ** 2 / (2.0 * family.sigma**2)
                self.terms.append((_BOTH, pos[a], pos[b], 1.0 / c[a], 1.0 / c[b], mu[a], mu[b], const))
            elif pa:
                self.terms.append((_A_ONLY, pos[a], -1, 1.0 / c[a], 0.0, mu[a], mu[b], family.d(mu[a], mu[b])))
            elif pb:
                self.terms.append((_B_ONLY, -1, pos[b], 0.0, 1.0 / c[b], mu[a], mu[b], family.d(mu[b], mu[a])))
            else:
                raise InfeasibleTask(f"pair ({a}, {b}) has both arms at zero cost")
        self.n = len(self.active)

    def _term(self, term, w):
        kind, ia, ib, inv_ca, inv_cb, mua, mub, const = term
        if kind == _A_ONLY:
            return w[ia] * inv_ca * const
        if kind == _B_ONLY:
            return w[ib] * inv_cb * const
        p = w[ia] * inv_ca
        q = w[ib] * inv_cb
        s = p + q
        if s <= 0.0:
            return 0.0
        if self.family.is_gaussian:
            return p * q / s * const
        x = (p * mua + q * mub) / s
        return p * self.family.d(mua, x) + q * self.family.d(mub, x)

    def value(self, w) -> tuple[float, int]:
        """Objective value and the index of the first minimising pair."""
        best, arg = math.inf, -1
        for k, term in enumerate(self.terms):
            v = self._term(term, w)
            if v < best:
                best, arg = v, k
        return best, arg

    def gradient(self, w, k: int) -> list[float]:
        """Gradient of pair term ``k``: a supergradient of the objective."""
        kind, ia, ib, inv_ca, inv_cb, mua, mub, const = self.terms[k]
        g = [0.0] * self.n
        if kind == _A_ONLY:
            g[ia] = inv_ca * const
        elif kind == _B_ONLY:
            g[ib] = inv_cb * const
        else:
            p = w[ia] * inv_ca
            q = w[ib] * inv_cb
            s = p + q
            # Envelope theorem: the derivative in p is d(mu_a, x) at the optimal x.
            x = (p * mua + q * mub) / s if s > 0.0 else 0.5 * (mua + mub)
            g[ia] = inv_ca * self.family.d(mua, x)
            g[ib] = inv_cb * self.family.d(mub, x)
        return g

    def batch_value(self, W: np.ndarray) -> np.ndarray:
        """Vectorised objective over the rows of ``W`` (shape ``(m, n)``)."""
        out = np.full(W.shape[0], np.inf)
        for kind, ia, ib, inv_ca, inv_cb, mua, mub, const in self.terms:
            if kind == _A_ONLY:
                v = W[:, ia] * (inv_ca * const)
            elif kind == _B_ONLY:
                v = W[:, ib] * (inv_cb * const)
            else:
                p = W[:, ia] * inv_ca
                q = W[:, ib] * inv_cb
                s = p + q
                safe = np.where(s > 0.0, s, 1.0)
                if self.family.is_gaussian:
                    v = p * q / safe * const
                else:
                    x = (p * mua + q * mub) / safe
                    v = p * self.family.d_array(mua, x) + q * self.family.d_array(mub, x)
                v = np.where(s > 0.0, v, 0.0)
            np.minimum(out, v, out=out)
        return out


def _setup(task, family, c, mu, pid=None):
    c = np.asarray(c, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if c.shape != (task.K,) or mu.shape != (task.K,):
        raise InvalidArgument(f"costs and means must have length {task.K}")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise InvalidArgument("costs must be finite and nonnegative")
    if pid is None:
        pid = classify(task, mu)
    pairs = pairs_of(task, pid)
    return PairObjective(family, c, mu, pairs, support(task, pid)), c, mu


def _embed(obj: PairObjective, w_active, K: int) -> np.ndarray:
    w = np.zeros(K)
    for a, x in zip(obj.active, w_active):
        w[a] = x
    return w


def inner_inf(task: PairwiseTask, family: RewardFamily, c, mu, w) -> float:
    """Infimum over the alternative set of the cost-weighted divergence sum."""
    obj, _, _ = _setup(task, family, c, mu)
    w = np.asarray(w, dtype=float)
    return obj.value([float(w[a]) for a in obj.active])[0]


def project_simplex(v: Sequence[float]) -> list[float]:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = sorted(v, reverse=True)
    css = 0.0
    theta = 0.0
    for k, x in enumerate(u, start=1):
        css += x
        t = (css - 1.0) / k
        if x - t > 0.0:
            theta = t
    return [max(x - theta, 0.0) for x in v]


def _golden(f, lo: float = 0.0, hi: float = 1.0, tol: float = GOLDEN_TOL):
    """Maximise a unimodal scalar function on [lo, hi]."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    it = 0
    while hi - lo > tol:
        it += 1
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    candidates = [(f(x), x), (f(0.0), 0.0), (f(1.0), 1.0)]
    fx, x = max(candidates)
    return x, fx, it


def maximize(obj: PairObjective, tol: float = 1e-8, max_iter: int = MAX_ITER, init=None):
    """Maximise ``obj`` over the simplex on its active arms.

    Returns ``(w_active, value, iterations, converged)``.
    """
    n = obj.n
    if n == 1:
        return [1.0], obj.value([1.0])[0], 0, True
    if n == 2:
        x, fx, it = _golden(lambda x: obj.value((x, 1.0 - x))[0])
        return [x, 1.0 - x], fx, it, True

    w = list(init) if init is not None else [1.0 / n] * n
    val, arg = obj.value(w)
    best_val, best_w = val, list(w)
    checkpoint = best_val
    for k in range(1, max_iter + 1):
        g = obj.gradient(w, arg)
        mean = sum(g) / n
        g = [x - mean for x in g]
        norm = math.sqrt(sum(x * x for x in g))
        if norm == 0.0:
            return best_w, best_val, k, True
        step = ETA0 / math.sqrt(k) / norm
        w = project_simplex([wi + step * gi for wi, gi in zip(w, g)])
        val, arg = obj.value(w)
        if val > best_val:
            best_val, best_w = val, list(w)
        if k % PATIENCE == 0:
            if best_val - checkpoint < tol:
                return best_w, best_val, k, True
            checkpoint = best_val
    return best_w, best_val, max_iter, False


def maximize_slsqp(obj: PairObjective, tol: float = 1e-12, max_iter: int = 200, init=None):
    """Epigraph form ``max s  s.t.  pair_k(w) >= s`` solved by SLSQP.

    Much faster than subgradient ascent on supports of three or more arms
    and usually more accurate, since the optimum sits on a kink where
    several pair values tie. Same return shape as ``maximize``.
    """
    n = obj.n
    if n <= 2:
        return maximize(obj, init=init)
    m = len(obj.terms)
    w0 = list(init) if init is not None else [1.0 / n] * n
    start = obj.value(w0)[0]
    # Work with pair values of order one; SLSQP tolerances are absolute.
    scale = 1.0 / start if start > 0 else 1.0 / max(obj.value([1.0 / n] * n)[0], 1e-300)
    x0 = np.append(w0, start * scale)

    def pair_values(x):
        w = x[:n]
        return scale * np.array([obj._term(t, w) for t in obj.terms]) - x[n]

    def pair_jac(x):
        w = x[:n]
        J = np.empty((m, n + 1))
        for k in range(m):
            J[k, :n] = obj.gradient(w, k)
        J[:, :n] *= scale
        J[:, n] = -1.0
        return J

    obj_grad = np.append(np.zeros(n), -1.0)
    res = minimize(
        lambda x: -x[n],
        x0,
        jac=lambda x: obj_grad,
        bounds=[(0.0, 1.0)] * n + [(None, None)],
        constraints=[
            {"type": "ineq", "fun": pair_values, "jac": pair_jac},
            {"type": "eq", "fun": lambda x: x[:n].sum() - 1.0, "jac": lambda x: np.append(np.ones(n), 0.0)},
        ],
        method="SLSQP",
        options={"ftol": tol, "maxiter": max_iter},
    )
    w = np.clip(res.x[:n], 0.0, None)
    w = list(w / w.sum())
    val = obj.value(w)[0]
    if val < start:
        w, val = w0, start
    if res.success:
        return w, val, int(res.nit), True
    # Line-search stalls happen on badly scaled instances; finish by ascent.
    w2, val2, it2, converged = maximize(obj, init=w)
    if val2 > val:
        w, val = w2, val2
    return w, val, int(res.nit) + it2, converged


def transform_gc(c, omega, support_positive) -> np.ndarray:
    """Rescale weights by inverse cost on the positive support and renormalise."""
    c = np.asarray(c, dtype=float)
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    idx = sorted(support_positive)
    if any(c[i] <= 0 for i in idx):
        raise InvalidArgument("transform needs positive costs on its support")
    ratio = omega[idx] / c[idx]
    total = ratio.sum()
    if not total > 0:
        raise InvalidArgument("weights vanish on the positive support")
    out[idx] = ratio / total
    return out


def mix_alpha(alpha: float, u_star, zero_support) -> np.ndarray:
    """Spread mass ``alpha`` uniformly over zero-cost arms, ``1 - alpha`` by ``u_star``."""
    u_star = np.asarray(u_star, dtype=float)
    zero = sorted(zero_support)
    if not zero:
        return u_star.copy()
    out = (1.0 - alpha) * u_star
    out[zero] = alpha / len(zero)
    return out


def solve_optimal(
    task: PairwiseTask,
    family: RewardFamily,
    c,
    mu,
    tol: float = 1e-8,
    *,
    max_iter: int = MAX_ITER,
    pid=None,
    init=None,
    method: str = "subgradient",
) -> OracleResult:
    """Optimal weights, pulling proportion and characteristic time.

    Supports of size one are solved exactly, size two by golden-section
    search, larger ones by projected subgradient ascent with step
    ``0.5 / sqrt(k)`` along the normalised subgradient, stopping once the
    best value gains less than ``tol`` over 500 iterations. ``SolverFailure``
    (carrying the best iterate) is raised at the iteration cap.
    ``method="slsqp"`` swaps the ascent for ``maximize_slsqp``.
    """
    if method not in ("subgradient", "slsqp"):
        raise InvalidArgument(f"unknown method {method!r}")
    obj, c, mu = _setup(task, family, c, mu, pid)
    if init is not None:
        init = [float(init[a]) for a in obj.active]
        s = sum(init)
        init = [x / s for x in init] if s > 0 else None
    if method == "slsqp":
        w, val, it, converged = maximize_slsqp(obj, init=init)
    else:
        w, val, it, converged = maximize(obj, tol, max_iter, init)
    omega = _embed(obj, w, task.K)
    result = OracleResult(
        omega_star=omega,
        u_star=transform_gc(c, omega, obj.active),
        t_star=1.0 / val if val > 0 else math.inf,
        inner_value=val,
        iterations=it,
        converged=converged,
        positive_support=obj.active,
    )
    if not converged:
        raise SolverFailure(f"no convergence within {max_iter} iterations", best=result)
    return result


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    if parts == 2:
        i = np.arange(total + 1)
        return np.stack([i, total - i], axis=1)
    r, s = np.triu_indices(total + 1)
    return np.stack([r, s - r, total - s], axis=1)


def grid_oracle(task, family, c, mu, resolution: float = 1e-3):
    """Brute-force maximum of the objective over a regular simplex grid.

    Returns ``(omega, value)``. The grid has spacing ``resolution`` on the
    positive-cost support, which may have at most four arms.
    """
    obj, _, _ = _setup(task, family, c, mu)
    n = obj.n
    if n > 4:
        raise UnsupportedError(f"grid search over {n} arms is not supported")
    N = int(round(1.0 / resolution))
    best_val, best_w = -math.inf, None
    if n <= 3:
        chunks = [(None, _compositions(N, n))]
    else:
        chunks = ((i, _compositions(N - i, 3)) for i in range(N + 1))
    for head, block in chunks:
        W = block.astype(float) / N
        if head is not None:
            W = np.hstack([np.full((W.shape[0], 1), head / N), W])
        vals = obj.batch_value(W)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_w = float(vals[k]), W[k]
    return _embed(obj, best_w, task.K), best_val


def three_arm_closed_form(delta2: float, delta3: float):
    """Closed form for 3-arm unit-variance Gaussian ranking with gap costs.

    The best arm costs nothing and arms 2, 3 cost their gaps
    ``0 < delta2 < delta3``. Returns ``(u_star, 1 / T*)``.
    """
    if not 0 < delta2 < delta3:
        raise InvalidArgument(f"need 0 < delta2 < delta3, got {delta2}, {delta3}")
    if delta3 <= (3.0 + math.sqrt(5.0)) / 2.0 * delta2:
        s2, s3 = math.sqrt(delta2), math.sqrt(delta3)
        u = np.array([0.0, s3 / (s2 + s3), s2 / (s2 + s3)])
        return u, (s2 - s3) ** 2 / 2.0
    gap = (delta3 - delta2) ** 2
    u = np.array([0.0, (delta3**2 - 2.0 * delta2 * delta3) / gap, delta2**2 / gap])
    return u, delta2 / 2.0 * (delta3 - 2.0 * delta2) / (delta3 - delta2)


def bai_gap_characteristic(family: RewardFamily, mu) -> float:
    """Regret constant sum_a gap_a / d(mu_a, mu_best) over suboptimal arms."""
    mu = [float(x) for x in mu]
    top = max(mu)
    if mu.count(top) > 1:
        raise TieError("best arm is not unique")
    total = 0.0
    for x in mu:
        gap = top - x
        if gap == 0.0:
            continue
        if gap < 1e-9:
            return math.inf
        total += gap / family.d(x, top)
    return total
