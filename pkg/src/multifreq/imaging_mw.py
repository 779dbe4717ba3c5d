"""Microwave imaging by ultrasound modulation: energies to ``a/eps`` and ``eps``.

With lossless solutions ``u^1..u^3`` the internal data at one frequency are

    e^{ij} = eps u^i u^j,      E^{ij} = a grad u^i . grad u^j.

The contrast ``a/eps`` follows algebraically from ``(e, E)``; ``log eps`` then
solves a divergence-form equation whose coefficients are built from the data
summed over frequencies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyMask, ModeDivergenceWarning
from .fem import (CoefficientSet, ComplexField, Illumination, dirichlet_solve,
                  divergence_form_system, gradient_operators, p1_element_gradients,
                  recover_nodal_gradient)
from .mesh import InteriorRegion, Mesh, submesh

EXPONENT_MODES = ("omega_squared", "omega_literal")
MODE_DIVERGENCE_TOL = 0.10


@dataclass(frozen=True, eq=False)
class InternalDataMw:
    """Energies at one frequency; ``e`` and ``E`` have shape (n_vertices, 3, 3)."""

    mesh: Mesh = field(repr=False)
    omega: float
    e: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.mesh.n_vertices
        for name in ("e", "E"):
            arr = np.asarray(getattr(self, name), complex)
            if arr.shape != (n, 3, 3):
                raise ValueError(f"{name} must have shape ({n}, 3, 3)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def scaled(self, c: float) -> "InternalDataMw":
        return InternalDataMw(self.mesh, self.omega, c * self.e, c * self.E)


def mw_data_from_values(mesh: Mesh, omega: float, u, grad_u, eps, a) -> InternalDataMw:
    """Energies from nodal values ``u`` (n, 3), gradients (n, 2, 3) and coefficients (n,)."""
    u = np.asarray(u)
    g = np.asarray(grad_u)
    eps = np.asarray(eps, float)
    a = np.asarray(a, float)
    e = eps[:, None, None] * u[:, :, None] * u[:, None, :]
    E = a[:, None, None] * np.einsum("nki,nkj->nij", g, g)
    return InternalDataMw(mesh, float(omega), e, E)


def synthesize_mw(mesh: Mesh, solutions: Sequence[ComplexField],
                  coeffs: CoefficientSet) -> InternalDataMw:
    """Internal energies of three lossless solutions at one frequency."""
    if len(solutions) != 3:
        raise ValueError("microwave data use exactly three illuminations")
    if not coeffs.is_scalar_a:
        raise ValueError("microwave data require a scalar coefficient a")
    if not coeffs.lossless:
        raise ValueError("microwave data require sigma = 0")
    omegas = {complex(f.omega) for f in solutions}
    if len(omegas) != 1:
        raise ValueError("solutions belong to different frequencies")
    u = np.stack([f.nodal_values for f in solutions], axis=1)
    g = np.stack([recover_nodal_gradient(f, mesh) for f in solutions], axis=2)
    a = coeffs.nodal("a", mesh)
    if a.ndim > 1:
        a = a[:, 0, 0]
    return mw_data_from_values(mesh, omegas.pop().real, u, g, coeffs.nodal("eps", mesh), a)


@dataclass
class ContrastResult:
    """Reconstructed ``a/eps``; ``values`` is NaN off the mask."""

    values: np.ndarray
    mask: np.ndarray
    denominator: np.ndarray = field(repr=False)
    region: InteriorRegion = field(repr=False)
    omega: float | tuple = 0.0

    @property
    def masked_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def reconstruct_contrast(data: InternalDataMw, region: InteriorRegion,
                         floor_tol: float = 1e-6, method: str = "average") -> ContrastResult:
    """``a/eps = 2 (tr e tr E - tr(e E)) / (tr(e)^2 |grad(e / tr e)|^2)``.

    Vertices where ``tr e`` or ``|grad(e / tr e)|^2`` falls below
    ``floor_tol`` times its maximum over the region are masked out.

    Raises
    ------
    EmptyMask
        the floor excludes the whole region
    """
    mesh = data.mesh
    e, E = data.e, data.E
    tr_e = np.trace(e, axis1=1, axis2=2)
    tr_E = np.trace(E, axis1=1, axis2=2)
    num = 2.0 * (tr_e * tr_E - np.einsum("nij,nji->n", e, E))
    safe = np.where(tr_e == 0, 1.0, tr_e)
    P = (e / safe[:, None, None]).reshape(len(e), 9)
    Dx, Dy = gradient_operators(mesh, method)
    grad_sq = (np.abs(Dx @ P) ** 2 + np.abs(Dy @ P) ** 2).sum(axis=1)
    den = np.abs(tr_e) ** 2 * grad_sq

    idx = region.vertices
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    ok = (np.abs(tr_e[idx]) >= floor_tol * np.abs(tr_e[idx]).max()) & \
         (grad_sq[idx] >= floor_tol * grad_sq[idx].max()) & (den[idx] > 0)
    mask[idx[ok]] = True
    if not mask.any():
        raise EmptyMask("contrast mask excludes every region vertex")
    values = np.full(mesh.n_vertices, np.nan)
    values[mask] = (num[mask] / den[mask]).real
    return ContrastResult(values, mask, den, region, data.omega)


def combine_contrast(results: Sequence[ContrastResult]) -> ContrastResult:
    """Per vertex, keep the frequency with the largest denominator."""
    if not results:
        raise ValueError("nothing to combine")
    den = np.stack([np.where(r.mask, r.denominator, -np.inf) for r in results])
    best = np.argmax(den, axis=0)
    mask = np.any([r.mask for r in results], axis=0)
    vals = np.stack([r.values for r in results])[best, np.arange(den.shape[1])]
    vals[~mask] = np.nan
    return ContrastResult(vals, mask, den.max(axis=0), results[0].region,
                          tuple(float(r.omega) for r in results))


@dataclass
class EpsilonResult:
    """``eps`` on the submesh spanned by the masked region."""

    mesh: Mesh = field(repr=False)
    parent_index: np.ndarray = field(repr=False)
    epsilon: np.ndarray
    log_epsilon: np.ndarray
    exponent_mode: str
    other_mode_epsilon: np.ndarray = field(repr=False)
    mode_divergence: float = 0.0


def _log_eps_system(data: Sequence[InternalDataMw], contrast: ContrastResult, mode: str):
    if mode not in EXPONENT_MODES:
        raise ValueError(f"exponent_mode must be one of {EXPONENT_MODES}")
    mesh = data[0].mesh
    if any(d.mesh is not mesh for d in data):
        raise ValueError("all frequencies must share one mesh")
    sub, parent = submesh(mesh, contrast.masked_vertices)
    s11 = sum(d.e[parent, 0, 0].real for d in data)
    power = 2 if mode == "omega_squared" else 1
    f = 2.0 * sum(d.E[parent, 0, 0].real - d.omega**power * d.e[parent, 0, 0].real
                  for d in data)
    c_elem = sub.element_average(contrast.values[parent])
    A = c_elem * sub.element_average(s11)
    F = -c_elem[:, None] * p1_element_gradients(sub, s11)
    K, b = divergence_form_system(sub, A, F, f)
    return sub, parent, K, b


def log_eps_residual(data: Sequence[InternalDataMw], contrast: ContrastResult, log_eps,
                     exponent_mode: str = "omega_squared") -> float:
    """Euclidean norm of the interior load residual ``K l - b`` at given nodal ``log eps``.

    ``log_eps`` is a callable on (n, 2) points (e.g. an :class:`Illumination`)
    or an array over the parent mesh.
    """
    sub, parent, K, b = _log_eps_system(data, contrast, exponent_mode)
    if callable(log_eps):
        ell = np.asarray(log_eps(sub.vertices))
    else:
        ell = np.asarray(log_eps)[parent]
    r = (K @ ell - b)[sub.interior]
    return float(np.linalg.norm(r))


def reconstruct_epsilon(data: Sequence[InternalDataMw], contrast: ContrastResult,
                        boundary_logeps: Illumination,
                        exponent_mode: str = "omega_squared") -> EpsilonResult:
    """Solve for ``log eps`` on the masked region and exponentiate.

    The equation is

        -div(c S grad l) = -div(c grad S) + 2 sum_omega (E^11 - omega^p e^11)

    with ``c = a/eps``, ``S = sum_omega e^11`` and ``p = 2`` (``omega_squared``)
    or ``p = 1`` (``omega_literal``). Both modes are solved; a
    :class:`ModeDivergenceWarning` is issued if they differ by more than 10%.
    """
    fields = {}
    for mode in EXPONENT_MODES:
        sub, parent, K, b = _log_eps_system(data, contrast, mode)
        g = boundary_logeps(sub.vertices[sub.boundary])
        ell, _ = dirichlet_solve(sub, K, b, g)
        fields[mode] = ell.real
    other = EXPONENT_MODES[1 - EXPONENT_MODES.index(exponent_mode)]
    eps = np.exp(fields[exponent_mode])
    eps_other = np.exp(fields[other])
    divergence = float(np.max(np.abs(eps - eps_other) / np.abs(eps)))
    if divergence > MODE_DIVERGENCE_TOL:
        warnings.warn(f"source-term modes differ by {divergence:.1%}", ModeDivergenceWarning,
                      stacklevel=2)
    return EpsilonResult(sub, parent, eps, fields[exponent_mode], exponent_mode,
                         eps_other, divergence)
