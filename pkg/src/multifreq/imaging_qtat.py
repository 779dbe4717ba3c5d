"""Quantitative thermo-acoustic tomography: polarized absorption data to ``sigma``.

With ``a = eps = 1`` the solutions satisfy ``-Lap u - (omega^2 + i omega sigma) u = 0``
and the data are ``e^{ij} = sigma u^i conj(u^j)``. The ratios
``alpha^i = e^{i1} / e^{11} = u^i / u^1`` obey ``Lap alpha^i = grad alpha^i . v`` with
``v = -2 grad log u^1``, so ``v`` follows from a 2x2 solve per vertex and
``sigma = (-Re v . Im v + div Im v) / (2 omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyMask
from .fem import CoefficientSet, ComplexField, gradient_operators, nodal_laplacian
from .mesh import InteriorRegion, Mesh


@dataclass(frozen=True, eq=False)
class InternalDataQtat:
    """Absorption data at one frequency; ``e`` has shape (n_vertices, 3, 3)."""

    mesh: Mesh = field(repr=False)
    omega: float
    e: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.e, complex)
        n = self.mesh.n_vertices
        if arr.ndim != 3 or arr.shape[0] != n or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"e must have shape ({n}, b, b)")
        arr.setflags(write=False)
        object.__setattr__(self, "e", arr)

    @property
    def hermitian_defect(self) -> float:
        scale = np.abs(self.e).max() or 1.0
        return float(np.abs(self.e - np.conj(np.swapaxes(self.e, 1, 2))).max() / scale)


def qtat_data_from_values(mesh: Mesh, omega: float, u, sigma) -> InternalDataQtat:
    """Data ``sigma u^i conj(u^j)`` from nodal values ``u`` (n, b) and ``sigma`` (n,)."""
    u = np.asarray(u, complex)
    sigma = np.asarray(sigma, float)
    e = sigma[:, None, None] * u[:, :, None] * np.conj(u[:, None, :])
    # rounding leaves ~1e-17 anti-Hermitian residue; the data are Hermitian by definition
    e = 0.5 * (e + np.conj(np.swapaxes(e, 1, 2)))
    return InternalDataQtat(mesh, float(omega), e)


def synthesize_qtat(mesh: Mesh, solutions: Sequence[ComplexField],
                    coeffs: CoefficientSet) -> InternalDataQtat:
    """Absorption data of ``d + 1 = 3`` solutions at one frequency."""
    if len(solutions) != 3:
        raise ValueError("absorption data use exactly three illuminations in two dimensions")
    if not (np.all(coeffs.a == np.eye(2)) and np.all(coeffs.eps == 1.0)):
        raise ValueError("the thermo-acoustic model requires a = eps = 1")
    if coeffs.lossless:
        raise ValueError("the thermo-acoustic model requires sigma > 0")
    omegas = {complex(f.omega) for f in solutions}
    if len(omegas) != 1:
        raise ValueError("solutions belong to different frequencies")
    u = np.stack([f.nodal_values for f in solutions], axis=1)
    return qtat_data_from_values(mesh, omegas.pop().real, u, coeffs.nodal("sigma", mesh))


@dataclass
class SigmaResult:
    """Reconstructed ``sigma``; ``values`` is NaN off the mask.

    ``imag_ratio`` is ``||Im s|| / ||Re s||`` on the mask for the complex
    expression ``s = (div v / 2 - v.v / 4 - omega^2) / (i omega)``, whose real
    part is the reconstruction and whose imaginary part vanishes exactly.
    """

    values: np.ndarray
    mask: np.ndarray
    imag_ratio: float
    velocity: np.ndarray = field(repr=False)
    det_A: np.ndarray = field(repr=False)
    omega: float = 0.0

    @property
    def masked_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def reconstruct_sigma(data: InternalDataQtat, region: InteriorRegion,
                      method: str = "average", det_tol: float = 1e-8,
                      floor_tol: float = 1e-6) -> SigmaResult:
    """Explicit reconstruction of ``sigma`` at the region vertices.

    ``A = [grad alpha^2, grad alpha^3]`` (columns); ``v`` solves
    ``A^T v = (Lap alpha^2, Lap alpha^3)``. Vertices with ``|e^11|`` or
    ``|det A|`` below ``floor_tol`` / ``det_tol`` times their region maximum
    are masked out.

    Parameters
    ----------
    method : ``"average"`` (two gradient-recovery passes) or ``"patch"``
        (quadratic least-squares fit)

    Raises
    ------
    EmptyMask
        the mask excludes the whole region
    """
    mesh = data.mesh
    omega = data.omega
    if omega <= 0:
        raise ValueError("reconstruction needs omega > 0")
    e = data.e
    if e.shape[1] != 3:
        raise ValueError("two-dimensional reconstruction takes three illuminations")
    e11 = e[:, 0, 0]
    safe = np.where(e11 == 0, 1.0, e11)
    alpha = e[:, :, 0] / safe[:, None]
    Dx, Dy = gradient_operators(mesh, method)
    ratios = alpha[:, 1:]
    A = np.stack([Dx @ ratios, Dy @ ratios], axis=1)  # (n, component, column)
    lap = nodal_laplacian(mesh, ratios, method)
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]

    idx = region.vertices
    ok = (np.abs(e11[idx]) >= floor_tol * np.abs(e11[idx]).max()) & \
         (np.abs(det[idx]) >= det_tol * np.abs(det[idx]).max()) & (det[idx] != 0)
    mask = np.zeros(mesh.n_vertices, dtype=bool)
    mask[idx[ok]] = True
    if not mask.any():
        raise EmptyMask("sigma mask excludes every region vertex")

    # v is needed on neighbours of masked vertices for div Im v; solve everywhere
    # the determinant is nonzero and leave the rest at zero
    solvable = det != 0
    v = np.zeros((mesh.n_vertices, 2), complex)
    AT = np.swapaxes(A[solvable], 1, 2)
    v[solvable] = np.linalg.solve(AT, lap[solvable][..., None])[..., 0]
    div_v = Dx @ v[:, 0] + Dy @ v[:, 1]
    s = (0.5 * div_v - 0.25 * (v * v).sum(axis=1) - omega**2) / (1j * omega)
    sigma = np.full(mesh.n_vertices, np.nan)
    sigma[mask] = s[mask].real
    imag_ratio = float(np.linalg.norm(s[mask].imag) / np.linalg.norm(s[mask].real))
    return SigmaResult(sigma, mask, imag_ratio, v, det, omega)


def relative_l2_error(result: SigmaResult, truth) -> float:
    """Discrete relative L2 error over the masked vertices."""
    m = result.mask
    truth = np.asarray(truth)
    return float(np.linalg.norm(result.values[m] - truth[m]) / np.linalg.norm(truth[m]))
