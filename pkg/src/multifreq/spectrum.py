"""Dirichlet spectrum of the pencil (a, eps) and eigenvalue-free frequency ranges."""

from __future__ import annotations

import json
import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import NearEigenvalue, NoGap, SpectrumError
from .fem import CoefficientSet, assemble_mass, assemble_stiffness
from .mesh import Mesh

#: relative downward shift applied to each discrete eigenvalue by the guard,
#: covering the overestimation of conforming P1 eigenvalues
DEFLATION = 0.02
#: the spectrum below M**2 counts as captured once lambda_max > COVER_FACTOR * M**2
COVER_FACTOR = 1.2
DENSE_LIMIT = 400


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    eigenvalues: np.ndarray
    mesh_h: float

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, float)
        if ev.ndim != 1 or len(ev) < 1:
            raise SpectrumError("a spectrum estimate needs at least one eigenvalue")
        if np.any(ev <= 0) or np.any(np.diff(ev) < 0):
            raise SpectrumError("eigenvalues must be positive and ascending")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def scaled(self, t: float) -> "SpectrumEstimate":
        return SpectrumEstimate(t * self.eigenvalues, self.mesh_h)


@dataclass(frozen=True)
class AdmissibleRange:
    """Frequency interval ``[k_min, k_max]`` inside the ball of radius ``M``."""

    k_min: float
    k_max: float
    M: float | None = None

    def __post_init__(self):
        M = self.k_max if self.M is None else self.M
        object.__setattr__(self, "M", float(M))
        if not (0 < self.k_min < self.k_max <= self.M):
            raise ValueError("need 0 < k_min < k_max <= M")

    @property
    def width(self) -> float:
        return self.k_max - self.k_min

    @property
    def squared(self) -> tuple[float, float]:
        return self.k_min**2, self.k_max**2


def _interior_pencil(mesh: Mesh, coeffs: CoefficientSet):
    inner = mesh.interior
    K = assemble_stiffness(mesh, coeffs.a)[inner][:, inner]
    Mm = assemble_mass(mesh, coeffs.eps)[inner][:, inner]
    return K.tocsc(), Mm.tocsc()


def estimate_spectrum(mesh: Mesh, coeffs: CoefficientSet, count: int) -> SpectrumEstimate:
    """The ``count`` smallest generalized eigenvalues of (stiffness_a, mass_eps).

    Sigma plays no role. Uses shift-invert Lanczos about zero with a fixed
    start vector, or a dense solver on small meshes.
    """
    n_int = len(mesh.interior)
    if int(count) != count or count < 1:
        raise SpectrumError("count must be a positive integer")
    if count > n_int:
        raise SpectrumError(f"count={count} exceeds the {n_int} interior vertices")
    K, Mm = _interior_pencil(mesh, coeffs)
    if n_int <= DENSE_LIMIT or count >= n_int - 1:
        ev = sla.eigh(K.toarray(), Mm.toarray(), eigvals_only=True, subset_by_index=[0, count - 1])
    else:
        v0 = np.random.default_rng(0).standard_normal(n_int)
        ev = spla.eigsh(K, k=int(count), M=Mm, sigma=0.0, which="LM", v0=v0,
                        return_eigenvectors=False)
    return SpectrumEstimate(np.sort(ev), mesh.h)


def estimate_spectrum_covering(mesh: Mesh, coeffs: CoefficientSet, M: float,
                               count: int = 8) -> SpectrumEstimate:
    """Grow ``count`` until the largest eigenvalue exceeds ``1.2 * M**2``."""
    n_int = len(mesh.interior)
    count = min(count, n_int)
    while True:
        spec = estimate_spectrum(mesh, coeffs, count)
        if spec.eigenvalues[-1] > COVER_FACTOR * M**2 or count == n_int:
            return spec
        count = min(2 * count, n_int)


def spectral_distance(omega_sq: float, spec: SpectrumEstimate, deflation: float = DEFLATION) -> float:
    """Distance of ``omega_sq`` to the union of the intervals ``[(1-deflation) lam, lam]``."""
    lam = spec.eigenvalues
    lo = (1.0 - deflation) * lam
    d = np.maximum.reduce([lo - omega_sq, omega_sq - lam, np.zeros_like(lam)])
    return float(d.min())


def default_gap_tol(spec: SpectrumEstimate) -> float:
    return 1e-3 * float(spec.eigenvalues[0])


_guard_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def guard_spectrum(mesh: Mesh, coeffs: CoefficientSet, omega: float) -> SpectrumEstimate:
    """Cached spectrum estimate covering ``omega``, shared across solves."""
    per_mesh = _guard_cache.setdefault(mesh, weakref.WeakKeyDictionary())
    spec = per_mesh.get(coeffs)
    if spec is None or (spec.eigenvalues[-1] <= COVER_FACTOR * omega**2
                        and spec.count < len(mesh.interior)):
        spec = estimate_spectrum_covering(mesh, coeffs, max(omega, 1e-12),
                                          count=8 if spec is None else 2 * spec.count)
        per_mesh[coeffs] = spec
    return spec


def check_spectral_gap(mesh, coeffs, omega, spectrum=None, gap_tol=None) -> float:
    """Raise :class:`NearEigenvalue` if ``omega**2`` is too close to the spectrum.

    Returns the (deflated) spectral distance otherwise.
    """
    spec = spectrum if spectrum is not None else guard_spectrum(mesh, coeffs, omega)
    tol = default_gap_tol(spec) if gap_tol is None else gap_tol
    d = spectral_distance(omega**2, spec)
    if d < tol:
        raise NearEigenvalue(omega, d, tol)
    return d


def weyl_check(spec: SpectrumEstimate) -> tuple[float, float]:
    """Tightest ``C1, C2`` with ``C1 * l <= lambda_l <= C2 * l`` (two dimensions)."""
    if spec.count < 5:
        raise SpectrumError("weyl_check needs at least 5 eigenvalues")
    ratios = spec.eigenvalues / np.arange(1, spec.count + 1)
    c1, c2 = float(ratios.min()), float(ratios.max())
    l = np.arange(1, spec.count + 1)
    assert np.all(c1 * l <= spec.eigenvalues * (1 + 1e-14))
    assert np.all(spec.eigenvalues <= c2 * l * (1 + 1e-14))
    return c1, c2


def admissible_subinterval(rng: AdmissibleRange, spec: SpectrumEstimate) -> AdmissibleRange:
    """Eigenvalue-free subrange chosen by the gap-selection construction.

    Among the gaps ``(lambda_l, lambda_{l+1})`` (with ``lambda_0 = 0``) pick the
    one whose intersection ``[p, q]`` with the squared range is longest, and
    return the range whose square is ``[p + s, q - s]`` with
    ``s = |range^2| / (3 (N + 1))``. The open gap above ``lambda_N`` is never
    used, since the estimate says nothing about the spectrum there.
    """
    lo2, hi2 = rng.squared
    lam = spec.eigenvalues
    N = spec.count
    shrink = (hi2 - lo2) / (3.0 * (N + 1))
    bounds = np.concatenate([[0.0], lam])
    p_all = np.maximum(lo2, bounds[:-1])
    q_all = np.minimum(hi2, bounds[1:])
    lengths = q_all - p_all
    best = int(np.argmax(lengths))
    if lengths[best] <= 0:
        raise NoGap("the squared range meets no spectral gap below lambda_N")
    p, q = p_all[best] + shrink, q_all[best] - shrink
    if not p < q:
        raise NoGap(f"gap of length {lengths[best]:.4g} is consumed by the shrink {shrink:.4g}")
    dist = float(np.min(np.minimum(np.abs(lam - p), np.abs(lam - q))))
    inside = np.any((lam > p) & (lam < q))
    assert not inside and dist >= shrink * (1 - 1e-12), "distance postcondition violated"
    return AdmissibleRange(math.sqrt(p), math.sqrt(q), rng.M)


def spectrum_report(spec: SpectrumEstimate) -> dict:
    out = {"eigenvalues": spec.eigenvalues.tolist(), "mesh_h": spec.mesh_h,
           "C1": None, "C2": None}
    if spec.count >= 5:
        out["C1"], out["C2"] = weyl_check(spec)
    return out


def spectrum_report_json(spec: SpectrumEstimate) -> str:
    return json.dumps(spectrum_report(spec), sort_keys=True, indent=2)
