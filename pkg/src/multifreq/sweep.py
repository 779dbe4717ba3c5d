"""Uniform frequency grids, minimal-n search and holomorphic lower-bound constants."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .constraints import CompletenessReport, ZetaMap, certify_complete
from .errors import NearEigenvalue, NotReached
from .fem import CoefficientSet, solve_helmholtz
from .mesh import InteriorRegion, Mesh
from .spectrum import AdmissibleRange, SpectrumEstimate

COARSE_NS = (2, 3, 5, 9, 17, 33, 65)
N_MAX_LIMIT = 64


@dataclass(frozen=True)
class FrequencyGrid:
    range: AdmissibleRange
    n: int
    frequencies: np.ndarray


def make_grid(rng: AdmissibleRange, n: int) -> FrequencyGrid:
    """``K^(n)``: ``n`` equispaced frequencies including both endpoints."""
    if int(n) != n or n < 2:
        raise ValueError("n must be an integer >= 2")
    n = int(n)
    i = np.arange(n)
    freqs = rng.k_min + (i / (n - 1)) * (rng.k_max - rng.k_min)
    freqs[-1] = rng.k_max
    return FrequencyGrid(rng, n, freqs)


@dataclass(eq=False)
class Problem:
    """Everything needed to certify a measurement set on one mesh.

    Solutions are cached per frequency so grids sharing frequencies reuse
    them; frequencies rejected by the spectral guard are remembered as
    ``None``.
    """

    mesh: Mesh
    coeffs: CoefficientSet
    illuminations: list
    zeta: ZetaMap
    region: InteriorRegion
    spectrum: SpectrumEstimate | None = None
    gap_tol: float | None = None
    threshold_fraction: float = 0.5
    jobs: int = 1
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.illuminations) != self.zeta.b:
            raise ValueError(f"{self.zeta.kind} needs {self.zeta.b} illuminations")

    def _solve_one(self, omega: float):
        try:
            return [solve_helmholtz(self.mesh, self.coeffs, omega, phi,
                                    spectrum=self.spectrum, gap_tol=self.gap_tol)
                    for phi in self.illuminations]
        except NearEigenvalue:
            return None

    def solutions(self, frequencies) -> dict:
        """Solve at every uncached frequency (in parallel when ``jobs > 1``)."""
        todo = [float(w) for w in frequencies if float(w) not in self._cache]
        if self.jobs > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.jobs) as pool:
                results = list(pool.map(self._solve_one, todo))
        else:
            results = [self._solve_one(w) for w in todo]
        self._cache.update(zip(todo, results))
        return {float(w): self._cache[float(w)] for w in frequencies}

    def certify(self, frequencies) -> CompletenessReport | None:
        sols = self.solutions(frequencies)
        kept = {w: f for w, f in sols.items() if f is not None}
        if not kept:
            return None
        report = certify_complete(self.zeta, kept, self.region, self.mesh,
                                  self.threshold_fraction)
        report.dropped_frequencies = sorted(w for w, f in sols.items() if f is None)
        return report

    @property
    def n_solved(self) -> int:
        return sum(1 for v in self._cache.values() if v is not None)


def find_min_n(problem: Problem, rng: AdmissibleRange, C_target: float, n_max: int = 16):
    """Smallest ``n`` whose grid ``K^(n)`` certifies ``achieved_C >= C_target``.

    Grids ``n = 2, 3, 5, 9, ...`` are tried first; once one passes, every
    smaller untried ``n`` is checked in ascending order, so the result is the
    exact minimum and is monotone in ``C_target``.

    Raises
    ------
    NotReached
        no ``n <= n_max`` reaches the target; carries the best report
    """
    if not 2 <= n_max <= N_MAX_LIMIT:
        raise ValueError(f"n_max must lie in [2, {N_MAX_LIMIT}]")
    if C_target < 0:
        raise ValueError("C_target must be nonnegative")
    reports: dict[int, CompletenessReport | None] = {}

    def passes(n):
        if n not in reports:
            reports[n] = problem.certify(make_grid(rng, n).frequencies)
        r = reports[n]
        return r is not None and r.achieved_C >= C_target

    coarse = [n for n in COARSE_NS if n <= n_max]
    hi = next((n for n in coarse if passes(n)), None)
    for n in range(2, hi if hi is not None else n_max + 1):
        if passes(n):
            return n, reports[n]
    if hi is not None:
        return hi, reports[hi]
    scored = [(r.achieved_C, n) for n, r in reports.items() if r is not None]
    best_n = max(scored)[1] if scored else None
    raise NotReached(n_max, best_n, reports.get(best_n))


def sweep_report(n: int, report: CompletenessReport, momm=None) -> dict:
    out = {"n": n, "achieved_C": report.achieved_C, "complete": report.complete,
           "frequencies": report.frequencies.tolist(),
           "worst_ratio": None, "calibrated_C_tilde": None}
    if momm is not None:
        out["worst_ratio"] = momm.worst_ratio
        out["calibrated_C_tilde"] = momm.calibrated_C_tilde
    return out


# ---------------------------------------------------------------------------
# holomorphic lower bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MommBoundInput:
    """Data of the quantitative unique-continuation bound on the unit disk.

    ``C0``: lower bound of ``|g(0)|``; ``D``: sup bound on the disk;
    ``theta``: left end of the interval ``[theta, (1+theta)/2]``;
    ``C_tilde``: the absolute constant (calibrated, never known exactly).
    """

    C0: float
    D: float
    theta: float
    C_tilde: float

    def __post_init__(self):
        if not (self.C0 > 0 and self.D >= self.C0):
            raise ValueError("need D >= C0 > 0")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.C_tilde < 0:
            raise ValueError("C_tilde must be nonnegative")


def momm_constant(inp: MommBoundInput) -> float:
    """``C0 * (D / C0) ** (-C_tilde / (1 - theta))``."""
    return inp.C0 * (inp.D / inp.C0) ** (-inp.C_tilde / (1.0 - inp.theta))


@dataclass
class MommResult:
    worst_ratio: float
    calibrated_C_tilde: float
    ratios: np.ndarray = field(repr=False)
    theta: float = 0.5
    D: float = 1.0


def _circle_sup_factor(degree: int, n_circle: int) -> float:
    # sampled max of a degree-d polynomial at N roots of unity underestimates
    # the true max by at most this factor (N > d)
    return 1.0 / math.cos(math.pi * degree / (2 * n_circle))


def empirical_momm(theta: float, D: float, trials: int, degree: int, seed: int,
                   grid_points: int = 1000, circle_points: int = 4096) -> MommResult:
    """Worst interval maximum of random holomorphic polynomials.

    Each trial draws complex Gaussian coefficients ``c_0..c_degree`` from its
    own stream derived from ``seed`` and normalizes to ``g(0) = 1``, giving
    ``g = 1 + p``. The trial's family is the ray ``{1 + t p : 0 <= t <= t_D}``
    where ``t_D`` is the largest scaling keeping ``sup_{|z|<1} |g| <= D``;
    the trial reports the smallest value over that family of
    ``max_{[theta, (1+theta)/2]} |g|`` (a convex function of ``t``). Families
    are nested in ``D``, so for one seed the worst ratio cannot increase
    with ``D``.

    ``calibrated_C_tilde`` is the smallest ``C_tilde`` with
    ``momm_constant(1, D, theta, C_tilde) <= worst_ratio``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if D < 1:
        raise ValueError("D must be >= 1 (|g(0)| = 1)")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    powers = np.arange(degree + 1)
    z_circle = np.exp(2j * np.pi * np.arange(circle_points) / circle_points)
    V_circle = z_circle[:, None] ** powers[None, 1:]
    x_int = np.linspace(theta, 0.5 * (1 + theta), grid_points)
    V_int = x_int[:, None] ** powers[None, 1:]
    sup_factor = _circle_sup_factor(degree, circle_points)

    streams = np.random.SeedSequence(seed).spawn(trials)
    ratios = np.empty(trials)
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
        p_coef = c[1:] / c[0]
        p_circle = V_circle @ p_coef
        p_int = V_int @ p_coef
        if degree == 0 or not np.any(p_int):
            ratios[k] = 1.0
            continue

        def f(t):
            return float(np.abs(1.0 + t * p_int).max())

        def circle_sup(t):
            return float(np.abs(1.0 + t * p_circle).max()) * sup_factor

        # largest admissible scaling by bisection (circle_sup is convex, = sup_factor at 0)
        lo, hi = 0.0, (D + 1.0) / (np.abs(p_circle).max())
        if circle_sup(0.0) > D:
            t_D = 0.0
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                if circle_sup(mid) <= D:
                    lo = mid
                else:
                    hi = mid
            t_D = lo
        # unconstrained minimizer of the convex interval max on [0, 2 / max|p|]
        t_cap = 2.0 / np.abs(p_int).max()
        t_star = minimize_scalar(f, bounds=(0.0, t_cap), method="bounded",
                                 options={"xatol": 1e-12 * t_cap}).x
        ratios[k] = min(f(min(t_star, t_D)), 1.0)
    worst = float(ratios.min())
    if D == 1.0 or worst >= 1.0:
        c_tilde = 0.0
    else:
        c_tilde = -(1.0 - theta) * math.log(worst) / math.log(D)
    return MommResult(worst, c_tilde, ratios, theta, D)


def momm_report(result: MommResult) -> str:
    return json.dumps({"theta": result.theta, "D": result.D,
                       "worst_ratio": result.worst_ratio,
                       "calibrated_C_tilde": result.calibrated_C_tilde}, sort_keys=True)
