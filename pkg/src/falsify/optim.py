"""Box-constrained derivative-free minimizers and initial-sample generators.

All optimizers drive a TrackedObjective: they call eval(x) to score a
point and poll should_stop() before every evaluation, so budget limits,
the stall rule, and early exit on a negative score live in one place.
Scores are extended reals; -inf means immediate success, +inf never
improves the incumbent.  Every evaluated point lies inside the box.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)


@dataclass(frozen=True)
class SearchSpace:
    """Axis-aligned box in R^d; bounds has shape (d, 2) with lo < hi."""

    bounds: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=np.float64)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ValueError(f"bounds must have shape (d, 2), got {b.shape}")
        if np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("each dimension needs lo < hi")
        object.__setattr__(self, "bounds", b)

    @property
    def d(self) -> int:
        return self.bounds.shape[0]

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]

    @property
    def widths(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)


@dataclass(frozen=True)
class OptimizerBudget:
    """Evaluation limit plus optional stall rule.

    With stall_threshold set, evaluation stops once the running best is
    stall_threshold candidates old (counting the best itself), i.e. after
    scores [5,4,4,4] a threshold of 3 stops the stream.
    """

    max_evals: int
    stall_threshold: int | None = None

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.stall_threshold is not None and self.stall_threshold < 1:
            raise ValueError("stall_threshold must be >= 1")


class TrackedObjective:
    """Wraps a score function with candidate recording and stop rules."""

    def __init__(self, fn, budget: OptimizerBudget):
        self.fn = fn
        self.budget = budget
        self.points: list[np.ndarray] = []
        self.scores: list[float] = []
        self.best_index: int | None = None

    def eval(self, x: np.ndarray) -> float:
        x = np.array(x, dtype=np.float64, copy=True)
        score = float(self.fn(x))
        self.points.append(x)
        self.scores.append(score)
        if self.best_index is None or score < self.scores[self.best_index]:
            self.best_index = len(self.scores) - 1
        return score

    @property
    def evals(self) -> int:
        return len(self.scores)

    @property
    def best_score(self) -> float:
        return math.inf if self.best_index is None else self.scores[self.best_index]

    def should_stop(self) -> bool:
        if self.best_index is not None and self.scores[self.best_index] < 0.0:
            return True
        if self.evals >= self.budget.max_evals:
            return True
        st = self.budget.stall_threshold
        if st is not None and self.best_index is not None and self.evals - self.best_index >= st:
            return True
        return False


def uniform_samples(space: SearchSpace, n: int, rng: np.random.Generator) -> list:
    """n i.i.d. uniform points in the box."""
    if n <= 0:
        return []
    pts = rng.uniform(space.lo, space.hi, size=(n, space.d))
    return [pts[i].copy() for i in range(n)]


def corner_samples(space: SearchSpace) -> list:
    """All 2^d vertices of the box in lexicographic order (lo before hi)."""
    if space.d > 20:
        raise ValueError(f"corner enumeration limited to d <= 20, got {space.d}")
    corners = []
    for choice in itertools.product(*[(lo, hi) for lo, hi in space.bounds]):
        corners.append(np.array(choice, dtype=np.float64))
    return corners


def _halton_point(space: SearchSpace, index: int) -> np.ndarray:
    x = np.empty(space.d)
    for i in range(space.d):
        base = _PRIMES[i % len(_PRIMES)]
        f, r, k = 1.0, 0.0, index
        while k > 0:
            f /= base
            r += f * (k % base)
            k //= base
        x[i] = r
    return space.lo + x * space.widths


def _seed_order(objective, seeds, seed_scores):
    """Seeds sorted best-first with their scores, evaluating if needed.

    When scores were not supplied, each seed costs one evaluation; seeds
    not reached before a stop are dropped.
    """
    if seed_scores is None:
        scores = []
        for s in seeds:
            if objective.should_stop():
                break
            scores.append(objective.eval(s))
        seeds = seeds[: len(scores)]
    else:
        scores = [float(s) for s in seed_scores]
    order = sorted(range(len(seeds)), key=lambda i: (scores[i], i))
    pts = [np.asarray(seeds[i], dtype=np.float64) for i in order]
    return pts, [scores[i] for i in order]


def nelder_mead(objective, space: SearchSpace, seeds, rng, seed_scores=None):
    """Global Nelder-Mead: standard moves plus deterministic restarts.

    Coefficients (reflection, expansion, contraction, shrink) =
    (1, 2, 0.5, 0.5).  The first simplex grows around the best seed with a
    5%-of-range perturbation per axis; when the simplex collapses below
    1e-6 of the range it restarts from the next-best unused seed and, once
    seeds run out, from successive Halton points.  Fully deterministic:
    the rng argument is unused.
    """
    if not seeds:
        raise ValueError("nelder_mead needs at least one seed")
    d = space.d
    ordered, _ = _seed_order(objective, seeds, seed_scores)
    restarts = iter(ordered)
    halton_index = 0

    def next_start():
        nonlocal halton_index
        try:
            return next(restarts)
        except StopIteration:
            halton_index += 1
            return _halton_point(space, halton_index)

    while not objective.should_stop():
        x0 = space.clamp(next_start())
        verts = [x0]
        for i in range(d):
            step = 0.05 * space.widths[i]
            x = x0.copy()
            x[i] = x[i] + step if x[i] + step <= space.hi[i] else x[i] - step
            verts.append(x)
        fvals = []
        for v in verts:
            if objective.should_stop():
                return
            fvals.append(objective.eval(v))

        while not objective.should_stop():
            order = sorted(range(d + 1), key=lambda i: (fvals[i], i))
            verts = [verts[i] for i in order]
            fvals = [fvals[i] for i in order]
            spread = max(
                float(np.max(np.abs(verts[i] - verts[0]) / space.widths))
                for i in range(1, d + 1)
            )
            if spread < 1e-6:
                break  # collapsed; restart elsewhere

            centroid = np.mean(verts[:-1], axis=0)
            xr = space.clamp(centroid + (centroid - verts[-1]))
            fr = objective.eval(xr)
            if fr < fvals[0]:
                if objective.should_stop():
                    return
                xe = space.clamp(centroid + 2.0 * (centroid - verts[-1]))
                fe = objective.eval(xe)
                if fe < fr:
                    verts[-1], fvals[-1] = xe, fe
                else:
                    verts[-1], fvals[-1] = xr, fr
            elif fr < fvals[-2]:
                verts[-1], fvals[-1] = xr, fr
            else:
                if objective.should_stop():
                    return
                if fr < fvals[-1]:
                    xc = space.clamp(centroid + 0.5 * (xr - centroid))
                else:
                    xc = space.clamp(centroid - 0.5 * (centroid - verts[-1]))
                fc = objective.eval(xc)
                if fc < min(fr, fvals[-1]):
                    verts[-1], fvals[-1] = xc, fc
                else:
                    for i in range(1, d + 1):
                        if objective.should_stop():
                            return
                        verts[i] = space.clamp(verts[0] + 0.5 * (verts[i] - verts[0]))
                        fvals[i] = objective.eval(verts[i])


def _reflect_into(x: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Fold a point back into the box by reflecting at the walls."""
    width = space.widths
    y = np.mod(x - space.lo, 2.0 * width)
    y = np.where(y > width, 2.0 * width - y, y)
    return space.lo + y


def simulated_annealing(objective, space: SearchSpace, seeds, rng: np.random.Generator, seed_scores=None):
    """Metropolis search with Gaussian proposals and geometric cooling.

    sigma = 0.1 * range per coordinate; T_0 is the spread of the seed
    scores (fallback 1.0) and decays so that the final temperature is
    1e-3 * T_0 at budget end.  Proposals are reflected into the box.
    """
    if not seeds:
        raise ValueError("simulated_annealing needs at least one seed")
    ordered, ordered_scores = _seed_order(objective, seeds, seed_scores)
    if objective.should_stop() or not ordered:
        return
    x, fx = ordered[0], ordered_scores[0]

    finite = [s for s in ordered_scores if math.isfinite(s)]
    spread = (max(finite) - min(finite)) if len(finite) >= 2 else 0.0
    t0 = spread if spread > 0.0 else 1.0
    remaining = max(objective.budget.max_evals - objective.evals, 1)
    alpha = (1e-3) ** (1.0 / remaining)

    sigma = 0.1 * space.widths
    k = 0
    temp = t0
    while not objective.should_stop():
        y = _reflect_into(x + rng.normal(0.0, sigma), space)
        fy = objective.eval(y)
        accept = fy < fx
        if not accept:
            delta = fy - fx
            if math.isfinite(delta) and temp > 0.0:
                accept = rng.random() < math.exp(-delta / temp)
        if accept:
            x, fx = y, fy
        k += 1
        temp = t0 * alpha**k


def cma_es(objective, space: SearchSpace, seeds, rng: np.random.Generator, seed_scores=None):
    """Minimal (mu/mu_w, lambda) CMA-ES in box-normalized coordinates.

    lambda = 4 + floor(3 ln d), log-linear recombination weights, rank-1
    plus rank-mu covariance update, cumulative step-size adaptation.
    Initial mean is the best seed, initial sigma 0.3 of the range.
    Out-of-box samples are redrawn up to 10 times, then clamped.
    """
    if not seeds:
        raise ValueError("cma_es needs at least one seed")
    d = space.d
    ordered, _ = _seed_order(objective, seeds, seed_scores)
    if objective.should_stop() or not ordered:
        return

    lam = max(4, 4 + int(3 * math.log(d)))
    mu = lam // 2
    raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / float(np.sum(weights**2))

    c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
    c_1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

    mean = (ordered[0] - space.lo) / space.widths
    sigma = 0.3
    cov = np.eye(d)
    p_sigma = np.zeros(d)
    p_c = np.zeros(d)
    gen = 0

    while not objective.should_stop():
        cov = 0.5 * (cov + cov.T)
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 1e-20)
        sqrt_d = np.sqrt(eigvals)
        inv_sqrt_cov = eigvecs @ np.diag(1.0 / sqrt_d) @ eigvecs.T

        zs, xs, fs = [], [], []
        stopped = False
        for _ in range(lam):
            if objective.should_stop():
                stopped = True
                break
            for _attempt in range(10):
                z = rng.standard_normal(d)
                step = eigvecs @ (sqrt_d * z)
                x = mean + sigma * step
                if np.all((x >= 0.0) & (x <= 1.0)):
                    break
            x = np.clip(x, 0.0, 1.0)
            fs.append(objective.eval(space.lo + x * space.widths))
            xs.append(x)
        if stopped or len(xs) < mu:
            return

        order = sorted(range(len(xs)), key=lambda i: (fs[i], i))[:mu]
        selected = np.array([xs[i] for i in order])
        old_mean = mean
        mean = weights @ selected

        y = (mean - old_mean) / sigma
        p_sigma = (1.0 - c_sigma) * p_sigma + math.sqrt(
            c_sigma * (2.0 - c_sigma) * mu_eff
        ) * (inv_sqrt_cov @ y)
        gen += 1
        h_sigma = float(
            np.linalg.norm(p_sigma) / math.sqrt(1.0 - (1.0 - c_sigma) ** (2 * gen))
            < (1.4 + 2.0 / (d + 1.0)) * chi_n
        )
        p_c = (1.0 - c_c) * p_c + h_sigma * math.sqrt(c_c * (2.0 - c_c) * mu_eff) * y

        arts = (selected - old_mean) / sigma
        rank_mu = sum(w * np.outer(a, a) for w, a in zip(weights, arts))
        cov = (
            (1.0 - c_1 - c_mu) * cov
            + c_1 * (np.outer(p_c, p_c) + (1.0 - h_sigma) * c_c * (2.0 - c_c) * cov)
            + c_mu * rank_mu
        )
        sigma *= math.exp((c_sigma / d_sigma) * (np.linalg.norm(p_sigma) / chi_n - 1.0))
        sigma = float(min(max(sigma, 1e-12), 1.0))


def enumeration(points):
    """Optimizer that scores a fixed candidate list in order (oracle mode)."""
    pts = [np.asarray(p, dtype=np.float64) for p in points]

    def run(objective, space, seeds, rng, seed_scores=None):
        for p in pts:
            if objective.should_stop():
                return
            objective.eval(p)

    return run


OPTIMIZERS = {
    "gnm": nelder_mead,
    "sa": simulated_annealing,
    "cma_es": cma_es,
}
