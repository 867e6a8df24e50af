"""(mu/mu_w, lambda) CMA-ES with rank-one + rank-mu covariance adaptation
and cumulative step-size adaptation.

Deterministic given the seed: candidates are drawn once per generation from a
PCG64 stream and fitness reduction happens in candidate order, so evaluation
may be farmed out to any number of workers without changing the result.
Non-finite objective values are treated as +inf fitness, never as errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EIGEN_FLOOR = 1e-20


@dataclass
class CmaesHistory:
    gen_best: list[float] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)
    sigma: list[float] = field(default_factory=list)


@dataclass
class CmaesState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int
    seed: int


class Cmaes:
    """Ask/tell interface; see cmaes_minimize for the one-call form."""

    def __init__(self, x0: np.ndarray, sigma0: float, population: int, seed: int):
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.ndim != 1 or x0.size < 1:
            raise ValueError("x0 must be a non-empty 1-D vector")
        if population < 4:
            raise ValueError("population must be >= 4")
        if not sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        n = x0.size
        self.n = n
        self.lam = int(population)
        self.mu = self.lam // 2
        w = np.log((self.lam + 1) / 2.0) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / np.sum(self.weights ** 2)

        self.c_sigma = (self.mueff + 2.0) / (n + self.mueff + 5.0)
        self.d_sigma = (1.0 + 2.0 * max(0.0, np.sqrt((self.mueff - 1.0) / (n + 1.0)) - 1.0)
                        + self.c_sigma)
        self.c_c = (4.0 + self.mueff / n) / (n + 4.0 + 2.0 * self.mueff / n)
        self.c_1 = 2.0 / ((n + 1.3) ** 2 + self.mueff)
        self.c_mu = min(1.0 - self.c_1,
                        2.0 * (self.mueff - 2.0 + 1.0 / self.mueff)
                        / ((n + 2.0) ** 2 + self.mueff))
        self.chi_n = np.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

        self.state = CmaesState(
            mean=x0.copy(), sigma=float(sigma0), C=np.eye(n),
            p_sigma=np.zeros(n), p_c=np.zeros(n), generation=0, seed=int(seed))
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self.best_x = x0.copy()
        self.best_f = np.inf
        self.history = CmaesHistory()
        self._B = np.eye(n)
        self._D = np.ones(n)
        self._decompose()

    def _decompose(self):
        C = self.state.C
        C = 0.5 * (C + C.T)
        self.state.C = C
        vals, vecs = np.linalg.eigh(C)
        vals = np.maximum(vals, _EIGEN_FLOOR)
        self._B = vecs
        self._D = np.sqrt(vals)

    def ask(self) -> np.ndarray:
        """(lambda, n) candidate matrix for the current generation."""
        z = self._rng.standard_normal((self.lam, self.n))
        y = z * self._D[None, :] @ self._B.T
        self._y = y
        return self.state.mean[None, :] + self.state.sigma * y

    def tell(self, fitness: np.ndarray) -> None:
        f = np.asarray(fitness, dtype=np.float64).copy()
        f[~np.isfinite(f)] = np.inf
        order = np.argsort(f, kind="stable")
        st = self.state
        xs = st.mean[None, :] + st.sigma * self._y

        if f[order[0]] < self.best_f:
            self.best_f = float(f[order[0]])
            self.best_x = xs[order[0]].copy()

        y_sel = self._y[order[:self.mu]]
        y_w = self.weights @ y_sel
        st.mean = st.mean + st.sigma * y_w

        # C^(-1/2) y_w through the eigen basis
        c_inv_sqrt_yw = self._B @ ((self._B.T @ y_w) / self._D)
        st.p_sigma = ((1.0 - self.c_sigma) * st.p_sigma
                      + np.sqrt(self.c_sigma * (2.0 - self.c_sigma) * self.mueff)
                      * c_inv_sqrt_yw)
        g = st.generation + 1
        ps_norm = np.linalg.norm(st.p_sigma)
        denom = np.sqrt(1.0 - (1.0 - self.c_sigma) ** (2.0 * g))
        h_sigma = ps_norm / denom < (1.4 + 2.0 / (self.n + 1.0)) * self.chi_n
        st.p_c = ((1.0 - self.c_c) * st.p_c
                  + (np.sqrt(self.c_c * (2.0 - self.c_c) * self.mueff) * y_w
                     if h_sigma else 0.0))

        delta_h = (1.0 - h_sigma) * self.c_c * (2.0 - self.c_c)
        rank_mu = (y_sel.T * self.weights) @ y_sel
        st.C = ((1.0 - self.c_1 - self.c_mu) * st.C
                + self.c_1 * (np.outer(st.p_c, st.p_c) + delta_h * st.C)
                + self.c_mu * rank_mu)
        st.sigma = st.sigma * float(np.exp((self.c_sigma / self.d_sigma)
                                           * (ps_norm / self.chi_n - 1.0)))
        st.generation = g
        self._decompose()

        self.history.gen_best.append(float(f[order[0]]))
        self.history.best_so_far.append(self.best_f)
        self.history.sigma.append(st.sigma)


def cmaes_minimize(objective, x0, sigma0, population, iterations, seed,
                   parallel_map=None):
    """Minimize objective; returns (best_x, best_f, history).

    objective: vector -> float. parallel_map, when given, is a map(fn,
    iterable) replacement used to evaluate each generation's candidates;
    results are consumed in candidate order so scheduling cannot change the
    outcome. x0 is evaluated first so the result can never be worse than the
    starting point.
    """
    es = Cmaes(np.asarray(x0, dtype=np.float64), sigma0, population, seed)
    mapper = parallel_map if parallel_map is not None else map
    f0 = float(objective(es.state.mean.copy()))
    if np.isfinite(f0):
        es.best_f = f0
        es.best_x = es.state.mean.copy()
    for _ in range(int(iterations)):
        xs = es.ask()
        fs = np.fromiter(mapper(objective, [xs[k] for k in range(xs.shape[0])]),
                         dtype=np.float64, count=xs.shape[0])
        es.tell(fs)
    return es.best_x.copy(), es.best_f, es.history
