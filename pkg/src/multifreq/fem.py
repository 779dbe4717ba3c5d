"""P1 finite elements for the Dirichlet Helmholtz and conductivity problems.

The discrete problem is

    (K_a - omega**2 M_eps - i omega M_sigma) u = b,   u = phi on the boundary,

with coefficients sampled once per element (centroid) and integrated
exactly. Solutions are stored as :class:`ComplexField` objects carrying
nodal values and the exact per-element P1 gradients.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularSystem
from .mesh import Mesh

RESIDUAL_TOL = 1e-10

# 7-point degree-5 rule on the reference triangle (barycentric coords, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
QUAD7_BARY = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
        [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
    ]
)
QUAD7_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


# ---------------------------------------------------------------------------
# Illuminations
# ---------------------------------------------------------------------------

ILLUMINATION_KINDS = ("constant_one", "coordinate", "linear_combo", "custom_samples", "function")


@dataclass(frozen=True, eq=False)
class Illumination:
    """Dirichlet boundary datum.

    Use the constructors :meth:`one`, :meth:`coordinate`, :meth:`linear`,
    :meth:`from_samples` and :meth:`from_function` rather than the raw
    initializer.
    """

    kind: str
    params: tuple = ()
    func: Callable | None = None
    sample_points: np.ndarray | None = None
    sample_values: np.ndarray | None = None
    name: str = ""

    @classmethod
    def one(cls):
        return cls("constant_one", name="1")

    @classmethod
    def coordinate(cls, axis: int):
        if axis not in (0, 1):
            raise ValueError("axis must be 0 or 1")
        return cls("coordinate", (axis,), name=f"x{axis + 1}")

    @classmethod
    def linear(cls, c0, c1, c2):
        return cls("linear_combo", (c0, c1, c2), name=f"{c0}+{c1}*x1+{c2}*x2")

    @classmethod
    def from_samples(cls, points, values, name="samples"):
        return cls("custom_samples", sample_points=np.asarray(points, float),
                   sample_values=np.asarray(values), name=name)

    @classmethod
    def from_function(cls, func, name="function"):
        return cls("function", func=func, name=name)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "constant_one":
            out = np.ones(len(pts))
        elif self.kind == "coordinate":
            out = (x, y)[self.params[0]].copy()
        elif self.kind == "linear_combo":
            c0, c1, c2 = self.params
            out = c0 + c1 * x + c2 * y
        elif self.kind == "function":
            out = np.broadcast_to(np.asarray(self.func(x, y)), x.shape).copy()
        elif self.kind == "custom_samples":
            from scipy.spatial import cKDTree

            dist, idx = cKDTree(self.sample_points).query(pts)
            scale = max(1.0, float(np.abs(self.sample_points).max()))
            if np.any(dist > 1e-9 * scale):
                raise ValueError("illumination samples do not cover the requested points")
            out = self.sample_values[idx]
        else:
            raise ValueError(f"unknown illumination kind {self.kind!r}")
        if not np.all(np.isfinite(out)):
            raise ValueError("illumination produced non-finite values")
        return out


def standard_illuminations(d: int = 2) -> list[Illumination]:
    """The preset ``{1, x_1, ..., x_d}``."""
    return [Illumination.one()] + [Illumination.coordinate(k) for k in range(d)]


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


def bump(points, center=(0.5, 0.5), radius=0.25, amplitude=1.0):
    """Smooth compactly supported bump with peak ``amplitude`` at ``center``."""
    pts = np.atleast_2d(np.asarray(points, float))
    rho2 = ((pts - np.asarray(center, float)) ** 2).sum(axis=1) / radius**2
    out = np.zeros(len(pts))
    inside = rho2 < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


def _preset_function(spec):
    """Turn a coefficient spec into a function of (n, 2) points, or None for arrays."""
    if callable(spec):
        return lambda p: np.asarray(spec(p[:, 0], p[:, 1]))
    if isinstance(spec, dict):
        kind = spec.get("type", "constant")
        if kind == "constant":
            value = np.asarray(spec["value"], float)
            return lambda p: np.broadcast_to(value, (len(p),) + value.shape).copy()
        if kind == "bump":
            base = float(spec.get("base", 1.0))
            kw = {k: spec[k] for k in ("center", "radius", "amplitude") if k in spec}
            return lambda p: base + bump(p, **kw)
        if kind == "array":
            return None
        raise ValueError(f"unknown coefficient preset {kind!r}")
    value = np.asarray(spec, float)
    return lambda p: np.broadcast_to(value, (len(p),) + value.shape).copy()


def _element_values(spec, mesh):
    if not callable(spec) and not isinstance(spec, dict):
        arr = np.asarray(spec, float)
        if arr.ndim == 1 or (arr.ndim == 3 and arr.shape[0] == mesh.n_triangles):
            if arr.shape[0] != mesh.n_triangles:
                raise ValueError("per-element coefficient array has the wrong length")
            return arr, None
    f = _preset_function(spec)
    if f is not None:
        return np.asarray(f(mesh.centroids), float), f
    values = spec["values"] if isinstance(spec, dict) else spec
    values = np.asarray(values, float)
    if values.shape[0] != mesh.n_triangles:
        raise ValueError("per-element coefficient array has the wrong length")
    return values, None


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Per-element coefficients ``a`` (2x2), ``eps``, ``sigma`` and their bound Lambda.

    Construct with :meth:`build`; the initializer validates the ellipticity
    and boundedness assumptions and raises ``ValueError`` on violation.
    """

    a: np.ndarray
    eps: np.ndarray
    sigma: np.ndarray
    lambda_bound: float
    evaluators: dict = field(default_factory=dict, repr=False)
    spec: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        a = np.asarray(self.a, float)
        if a.ndim == 1:
            a = a[:, None, None] * np.eye(2)
        if a.shape[1:] != (2, 2):
            raise ValueError("a must be scalar or 2x2 per element")
        eps = np.asarray(self.eps, float)
        sigma = np.asarray(self.sigma, float)
        if not (len(a) == len(eps) == len(sigma)):
            raise ValueError("coefficient arrays have inconsistent lengths")
        for arr in (a, eps, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "sigma", sigma)
        lam = float(self.lambda_bound)
        if not np.allclose(a, np.swapaxes(a, 1, 2), rtol=0, atol=1e-14):
            raise ValueError("a must be symmetric")
        ev = np.linalg.eigvalsh(a)
        tol = 1e-12
        if ev.min() < 1 / lam - tol or ev.max() > lam + tol:
            raise ValueError("a violates the ellipticity bound Lambda")
        if eps.min() < 1 / lam - tol or eps.max() > lam + tol:
            raise ValueError("eps violates the bounds [1/Lambda, Lambda]")
        if not self.lossless and (sigma.min() < 1 / lam - tol or sigma.max() > lam + tol):
            raise ValueError("sigma must vanish identically or lie in [1/Lambda, Lambda]")

    @classmethod
    def build(cls, mesh: Mesh, a=1.0, eps=1.0, sigma=0.0, lambda_bound=None):
        """Sample coefficient specs at element centroids.

        Each spec may be a number, a 2x2 matrix (``a`` only), a callable
        ``f(x, y)``, a preset dict (``{"type": "constant", "value": v}``,
        ``{"type": "bump", "center": c, "radius": r, "amplitude": s, "base": b}``)
        or ``{"type": "array", "values": per_element}``.
        """
        vals, evals = {}, {}
        for name, spec in (("a", a), ("eps", eps), ("sigma", sigma)):
            vals[name], evals[name] = _element_values(spec, mesh)
        if lambda_bound is None:
            lambda_bound = minimal_lambda(vals["a"], vals["eps"], vals["sigma"])
        spec = {k: v for k, v in (("a", a), ("eps", eps), ("sigma", sigma))
                if isinstance(v, (dict, int, float, list))}
        return cls(vals["a"], vals["eps"], vals["sigma"], lambda_bound,
                   {k: f for k, f in evals.items() if f is not None}, spec)

    @property
    def lossless(self) -> bool:
        return bool(np.all(self.sigma == 0.0))

    @property
    def is_scalar_a(self) -> bool:
        off = np.abs(self.a[:, 0, 1]).max()
        return bool(off == 0.0 and np.array_equal(self.a[:, 0, 0], self.a[:, 1, 1]))

    def nodal(self, name: str, mesh: Mesh) -> np.ndarray:
        """Vertex values: exact for analytic presets, area-averaged otherwise."""
        if name in self.evaluators:
            return np.asarray(self.evaluators[name](mesh.vertices), float)
        values = {"a": self.a, "eps": self.eps, "sigma": self.sigma}[name]
        return mesh.nodal_average(values)

    def to_json(self) -> str:
        data = dict(self.spec)
        data.setdefault("a", {"type": "array", "values": self.a.tolist()})
        data.setdefault("eps", {"type": "array", "values": self.eps.tolist()})
        data.setdefault("sigma", {"type": "array", "values": self.sigma.tolist()})
        data["lambda"] = self.lambda_bound
        return json.dumps(data)

    @classmethod
    def from_json(cls, mesh: Mesh, text) -> "CoefficientSet":
        data = json.loads(text) if isinstance(text, str) else dict(text)
        return cls.build(mesh, data.get("a", 1.0), data.get("eps", 1.0),
                         data.get("sigma", 0.0), data.get("lambda"))


def minimal_lambda(a, eps, sigma) -> float:
    """Smallest Lambda >= 1 for which the coefficient bounds hold."""
    a = np.asarray(a, float)
    if a.ndim == 1:
        a = a[:, None, None] * np.eye(2)
    ev = np.linalg.eigvalsh(0.5 * (a + np.swapaxes(a, 1, 2)))
    vals = [ev.ravel(), np.asarray(eps, float)]
    sigma = np.asarray(sigma, float)
    if np.any(sigma != 0):
        vals.append(sigma)
    v = np.concatenate(vals)
    if v.min() <= 0:
        raise ValueError("coefficients must be positive")
    return float(max(1.0, v.max(), 1.0 / v.min()))


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Nodal P1 field with its exact element gradients."""

    nodal_values: np.ndarray
    element_gradients: np.ndarray
    omega: complex = 0.0
    illumination_id: str = ""
    residual: float = 0.0

    def __post_init__(self):
        for arr in (self.nodal_values, self.element_gradients):
            arr.setflags(write=False)

    @classmethod
    def from_values(cls, mesh: Mesh, values, omega=0.0, illumination_id="", residual=0.0):
        values = np.asarray(values, dtype=complex).copy()
        return cls(values, p1_element_gradients(mesh, values), omega, illumination_id, residual)

    def scaled(self, mesh: Mesh, c: complex) -> "ComplexField":
        return ComplexField.from_values(mesh, c * self.nodal_values, self.omega,
                                        self.illumination_id, self.residual)


def p1_element_gradients(mesh: Mesh, values) -> np.ndarray:
    values = np.asarray(values)
    return np.einsum("eik,ei->ek", mesh.grad_bary, values[mesh.triangles])


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def assemble_stiffness(mesh: Mesh, a) -> sp.csr_matrix:
    """Stiffness matrix of ``-div(a grad .)``; ``a`` scalar or (m,2,2) per element."""
    a = np.asarray(a)
    if a.ndim == 0:
        a = np.full(mesh.n_triangles, a)
    g = mesh.grad_bary
    if a.ndim == 1:
        local = a[:, None, None] * np.einsum("eik,ejk->eij", g, g)
    else:
        local = np.einsum("eik,ekl,ejl->eij", g, a, g)
    return _scatter(mesh, local * mesh.signed_areas[:, None, None])


_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def assemble_mass(mesh: Mesh, rho=1.0) -> sp.csr_matrix:
    """Consistent P1 mass matrix with piecewise-constant density ``rho``."""
    rho = np.broadcast_to(np.asarray(rho), (mesh.n_triangles,))
    local = (rho * mesh.signed_areas)[:, None, None] * _MASS_REF
    return _scatter(mesh, local)


def load_vector(mesh: Mesh, f: Callable) -> np.ndarray:
    """``b_i = int f phi_i`` with the 7-point rule; ``f(x, y)`` may be complex."""
    p = mesh.vertices[mesh.triangles]
    qp = np.einsum("qi,eik->eqk", QUAD7_BARY, p)
    fq = np.asarray(f(qp[..., 0], qp[..., 1]))
    local = np.einsum("eq,qi,q->ei", fq, QUAD7_BARY, QUAD7_WEIGHTS) * mesh.signed_areas[:, None]
    b = np.zeros(mesh.n_vertices, dtype=np.result_type(local, float))
    np.add.at(b, mesh.triangles, local)
    return b


def helmholtz_operator(mesh: Mesh, coeffs: CoefficientSet, omega) -> sp.csr_matrix:
    K = assemble_stiffness(mesh, coeffs.a)
    A = K - omega**2 * assemble_mass(mesh, coeffs.eps)
    if not coeffs.lossless:
        A = A - 1j * omega * assemble_mass(mesh, coeffs.sigma)
    return A.astype(complex)


def dirichlet_solve(mesh: Mesh, A: sp.spmatrix, b: np.ndarray, g_boundary: np.ndarray):
    """Solve ``A u = b`` on interior vertices with ``u = g`` on the boundary.

    Returns the full nodal vector and the relative residual of the reduced
    system.
    """
    A = sp.csr_matrix(A, dtype=complex)
    inner, bdry = mesh.interior, mesh.boundary
    u = np.zeros(mesh.n_vertices, dtype=complex)
    u[bdry] = g_boundary
    if len(inner) == 0:
        return u, 0.0
    A_ii = A[inner][:, inner].tocsc()
    rhs = np.asarray(b, dtype=complex)[inner] - A[inner][:, bdry] @ u[bdry]
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return u, 0.0
    try:
        lu = spla.splu(A_ii)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    x = lu.solve(rhs)
    res = np.linalg.norm(A_ii @ x - rhs) / norm
    if not res <= RESIDUAL_TOL:
        # one step of iterative refinement before giving up
        x = x + lu.solve(rhs - A_ii @ x)
        res = np.linalg.norm(A_ii @ x - rhs) / norm
    if not (np.all(np.isfinite(x)) and res <= RESIDUAL_TOL):
        raise SingularSystem(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    u[inner] = x
    return u, float(res)


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def solve_helmholtz(mesh: Mesh, coeffs: CoefficientSet, omega: float, phi: Illumination,
                    *, source: Callable | None = None, spectrum=None, gap_tol=None,
                    check_spectrum: bool = True) -> ComplexField:
    """Galerkin solution of ``-div(a grad u) - (omega^2 eps + i omega sigma) u = f``.

    Parameters
    ----------
    source : optional right-hand side ``f(x, y)`` (manufactured solutions)
    spectrum : a :class:`~multifreq.spectrum.SpectrumEstimate` for the guard;
        estimated on demand (and cached per mesh/coefficients) when omitted
    gap_tol : minimum admissible distance of ``omega**2`` to the deflated
        spectrum; defaults to ``1e-3 * lambda_1``

    Raises
    ------
    NearEigenvalue
        lossless problem with ``omega**2`` within ``gap_tol`` of the spectrum
    SingularSystem
        factorization failure or residual above 1e-10
    """
    omega = float(omega)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if coeffs.lossless and omega > 0 and check_spectrum:
        from .spectrum import check_spectral_gap

        check_spectral_gap(mesh, coeffs, omega, spectrum=spectrum, gap_tol=gap_tol)
    A = helmholtz_operator(mesh, coeffs, omega)
    b = load_vector(mesh, source) if source is not None else np.zeros(mesh.n_vertices)
    g = phi(mesh.vertices[mesh.boundary])
    u, res = dirichlet_solve(mesh, A, b, g)
    return ComplexField.from_values(mesh, u, omega, phi.name, res)


def solve_conductivity(mesh: Mesh, coeffs: CoefficientSet, phi: Illumination) -> ComplexField:
    """The ``omega = 0`` problem ``-div(a grad u) = 0``."""
    return solve_helmholtz(mesh, coeffs, 0.0, phi)


def divergence_form_system(mesh: Mesh, aniso, rhs_div, rhs_scalar):
    """Stiffness matrix and load vector of ``-div(A grad u) = div F + f``.

    Parameters
    ----------
    aniso : per-element scalar or 2x2 tensor ``A``
    rhs_div : per-element vector field ``F``, shape (m, 2), or None
    rhs_scalar : per-vertex ``f`` (array, scalar, or callable ``f(x, y)``), or None
    """
    K = assemble_stiffness(mesh, aniso)
    b = np.zeros(mesh.n_vertices, dtype=complex)
    if rhs_div is not None:
        F = np.broadcast_to(np.asarray(rhs_div), (mesh.n_triangles, 2))
        local = -np.einsum("eik,ek->ei", mesh.grad_bary, F) * mesh.signed_areas[:, None]
        np.add.at(b, mesh.triangles, local)
    if rhs_scalar is not None:
        if callable(rhs_scalar):
            b += load_vector(mesh, rhs_scalar)
        else:
            f = np.broadcast_to(np.asarray(rhs_scalar), (mesh.n_vertices,))
            b += assemble_mass(mesh) @ f
    return K, b


def solve_divergence_form(mesh: Mesh, aniso, rhs_div, rhs_scalar, dirichlet: Illumination
                          ) -> ComplexField:
    """Solve ``-div(A grad u) = div F + f`` with ``u = g`` on the boundary.

    Arguments as in :func:`divergence_form_system`; ``dirichlet`` is the
    boundary datum ``g``.
    """
    K, b = divergence_form_system(mesh, aniso, rhs_div, rhs_scalar)
    g = dirichlet(mesh.vertices[mesh.boundary])
    u, res = dirichlet_solve(mesh, K, b, g)
    return ComplexField.from_values(mesh, u, 0.0, dirichlet.name, res)


# ---------------------------------------------------------------------------
# Gradient recovery
# ---------------------------------------------------------------------------

_operator_cache: "weakref.WeakKeyDictionary[Mesh, dict]" = weakref.WeakKeyDictionary()


def _cache(mesh):
    return _operator_cache.setdefault(mesh, {})


def element_gradient_operators(mesh: Mesh):
    """Sparse (m, n) maps from nodal values to the x/y element gradients."""
    rows = np.repeat(np.arange(mesh.n_triangles), 3)
    cols = mesh.triangles.ravel()
    shape = (mesh.n_triangles, mesh.n_vertices)
    g = mesh.grad_bary
    return (sp.csr_matrix((g[..., 0].ravel(), (rows, cols)), shape=shape),
            sp.csr_matrix((g[..., 1].ravel(), (rows, cols)), shape=shape))


def averaging_operator(mesh: Mesh) -> sp.csr_matrix:
    """Area-weighted element-to-vertex averaging, shape (n, m)."""
    c = _cache(mesh)
    if "avg" not in c:
        w = mesh.vertex_element_matrix
        c["avg"] = sp.diags(1.0 / np.asarray(w.sum(axis=1)).ravel()) @ w
    return c["avg"]


def gradient_operators(mesh: Mesh, method: str = "average"):
    """Sparse (n, n) nodal derivative operators ``(Dx, Dy)``.

    ``"average"`` averages adjacent P1 element gradients weighted by area;
    ``"patch"`` differentiates a local quadratic least-squares fit.
    """
    c = _cache(mesh)
    if method == "average":
        if "grad_avg" not in c:
            W = averaging_operator(mesh)
            Gx, Gy = element_gradient_operators(mesh)
            c["grad_avg"] = ((W @ Gx).tocsr(), (W @ Gy).tocsr())
        return c["grad_avg"]
    if method == "patch":
        ops = patch_operators(mesh)
        return ops["x"], ops["y"]
    raise ValueError(f"unknown differentiation method {method!r}")


def patch_operators(mesh: Mesh) -> dict:
    """Derivative operators from quadratic least-squares fits on 2-ring patches.

    Returns sparse (n, n) matrices keyed ``x, y, xx, xy, yy``.
    """
    c = _cache(mesh)
    if "patch" in c:
        return c["patch"]
    nbr = mesh.vertex_neighbors
    v = mesh.vertices
    rows, cols, vals = [], [], {k: [] for k in ("x", "y", "xx", "xy", "yy")}
    for i in range(mesh.n_vertices):
        ring = set(nbr[i].tolist())
        for j in nbr[i]:
            ring.update(nbr[j].tolist())
        ring.add(i)
        idx = np.fromiter(sorted(ring), dtype=np.int64)
        d = v[idx] - v[i]
        s = np.abs(d).max()
        dx, dy = d[:, 0] / s, d[:, 1] / s
        V = np.column_stack([np.ones_like(dx), dx, dy, dx * dx, dx * dy, dy * dy])
        P = np.linalg.pinv(V)
        rows.append(np.full(len(idx), i))
        cols.append(idx)
        vals["x"].append(P[1] / s)
        vals["y"].append(P[2] / s)
        vals["xx"].append(2 * P[3] / s**2)
        vals["xy"].append(P[4] / s**2)
        vals["yy"].append(2 * P[5] / s**2)
    r, cc = np.concatenate(rows), np.concatenate(cols)
    n = mesh.n_vertices
    c["patch"] = {k: sp.csr_matrix((np.concatenate(w), (r, cc)), shape=(n, n))
                  for k, w in vals.items()}
    return c["patch"]


def nodal_gradient(mesh: Mesh, values, method: str = "average") -> np.ndarray:
    """Recovered gradient of nodal values, shape ``values.shape[:1] + (2,) ...``."""
    Dx, Dy = gradient_operators(mesh, method)
    values = np.asarray(values)
    return np.stack([Dx @ values, Dy @ values], axis=1)


def nodal_laplacian(mesh: Mesh, values, method: str = "average") -> np.ndarray:
    """Laplacian by two recovery passes (``average``) or the patch Hessian."""
    values = np.asarray(values)
    if method == "patch":
        ops = patch_operators(mesh)
        return ops["xx"] @ values + ops["yy"] @ values
    Dx, Dy = gradient_operators(mesh, method)
    return Dx @ (Dx @ values) + Dy @ (Dy @ values)


def recover_nodal_gradient(field: ComplexField, mesh: Mesh) -> np.ndarray:
    """Area-weighted average of the adjacent element gradients at each vertex."""
    W = averaging_operator(mesh)
    return np.asarray(W @ field.element_gradients)


# ---------------------------------------------------------------------------
# Error norms
# ---------------------------------------------------------------------------


def l2_error(mesh: Mesh, values, exact: Callable) -> float:
    """``||u_h - u||_{L2}`` with the 7-point rule on every triangle."""
    p = mesh.vertices[mesh.triangles]
    qp = np.einsum("qi,eik->eqk", QUAD7_BARY, p)
    uh = np.einsum("qi,ei->eq", QUAD7_BARY, np.asarray(values)[mesh.triangles])
    diff = uh - exact(qp[..., 0], qp[..., 1])
    return float(np.sqrt((np.abs(diff) ** 2 @ QUAD7_WEIGHTS * mesh.signed_areas).sum()))
