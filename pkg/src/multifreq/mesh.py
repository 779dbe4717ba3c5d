"""Conforming triangulations of 2D model domains.

Three generators are provided (structured rectangle, disk refined from a
hexagonal seed, convex polygon refined from a centroid fan), together with
the interior-region extractor used to discretize compactly contained
subdomains and a submesh helper for solving on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import EmptyRegionError

DOMAIN_TAGS = ("rectangle", "disk", "polygon", "submesh")
MAX_DISK_REFINEMENT = 9


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable P1 triangulation.

    Parameters
    ----------
    vertices : (n, 2) float array
    triangles : (m, 3) int array, counter-clockwise
    boundary : sorted int array of boundary vertex indices
    domain_tag : one of ``DOMAIN_TAGS``
    geometry : analytic description of the domain (used for distances)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    domain_tag: str = "polygon"
    geometry: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        b = np.unique(np.asarray(self.boundary, dtype=np.int64))
        for arr in (v, t, b):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary", b)
        if self.domain_tag not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain tag {self.domain_tag!r}")
        self._validate()

    # -- validation -----------------------------------------------------

    def _validate(self):
        v, t = self.vertices, self.triangles
        if v.ndim != 2 or v.shape[1] != 2 or t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("vertices must be (n, 2) and triangles (m, 3)")
        if t.size == 0:
            raise ValueError("mesh has no triangles")
        if t.min() < 0 or t.max() >= len(v):
            raise ValueError("triangle index out of range")
        if np.any(self.signed_areas <= 0.0):
            raise ValueError("triangles must have strictly positive signed area")
        if len(np.unique(t)) != len(v):
            raise ValueError("unreferenced vertices")
        # each undirected edge used at most twice, and in opposite directions
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        if len(np.unique(directed, axis=0)) != len(directed):
            raise ValueError("inconsistent orientation or duplicated triangles")
        _, counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
        if counts.max() > 2:
            raise ValueError("non-manifold edge shared by more than two triangles")
        if not np.array_equal(self._topological_boundary(), self.boundary):
            raise ValueError("boundary set does not match the mesh boundary edges")
        if self.domain_tag in ("rectangle", "disk", "polygon"):
            dist = self.distance_to_boundary()
            tol = 1e-12 * self.diameter
            on_bdry = np.flatnonzero(np.abs(dist) < tol)
            # a hanging vertex shows up as a boundary-edge endpoint away from the boundary
            if not np.array_equal(on_bdry, self.boundary):
                raise ValueError("non-conforming mesh: boundary edges leave the domain boundary")

    def _topological_boundary(self):
        return np.unique(self.boundary_edges)

    # -- geometry -------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @property
    def total_area(self) -> float:
        return float(self.signed_areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def grad_bary(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (m, 3, 2)."""
        p = self.vertices[self.triangles]
        x, y = p[..., 0], p[..., 1]
        two_a = 2.0 * self.signed_areas
        g = np.empty((self.n_triangles, 3, 2))
        g[:, 0, 0] = y[:, 1] - y[:, 2]
        g[:, 0, 1] = x[:, 2] - x[:, 1]
        g[:, 1, 0] = y[:, 2] - y[:, 0]
        g[:, 1, 1] = x[:, 0] - x[:, 2]
        g[:, 2, 0] = y[:, 0] - y[:, 1]
        g[:, 2, 1] = x[:, 1] - x[:, 0]
        return g / two_a[:, None, None]

    @cached_property
    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    @cached_property
    def h(self) -> float:
        """Maximum edge length."""
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return float(np.sqrt((d**2).sum(axis=1)).max())

    @cached_property
    def diameter(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    @cached_property
    def vertex_element_matrix(self) -> sp.csr_matrix:
        """Sparse (n, m) matrix with entry |T| where vertex i belongs to T."""
        m = self.n_triangles
        rows = self.triangles.ravel()
        cols = np.repeat(np.arange(m), 3)
        vals = np.repeat(self.signed_areas, 3)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_vertices, m))

    @cached_property
    def vertex_neighbors(self) -> list:
        """Sorted 1-ring neighbour lists."""
        e = self.edges
        adj = sp.coo_matrix(
            (np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
            shape=(self.n_vertices,) * 2,
        ).tocsr()
        return [adj.indices[adj.indptr[i] : adj.indptr[i + 1]] for i in range(self.n_vertices)]

    def element_average(self, nodal: np.ndarray) -> np.ndarray:
        """Mean of the three vertex values on each triangle."""
        return np.asarray(nodal)[self.triangles].mean(axis=1)

    def nodal_average(self, per_element: np.ndarray) -> np.ndarray:
        """Area-weighted average of element values at each vertex."""
        w = self.vertex_element_matrix
        per_element = np.asarray(per_element)
        num = w @ per_element.reshape(self.n_triangles, -1)
        den = np.asarray(w.sum(axis=1)).ravel()
        return (num / den[:, None]).reshape((self.n_vertices,) + per_element.shape[1:])

    def distance_to_boundary(self, points=None) -> np.ndarray:
        """Distance from points (default: vertices) to the domain boundary.

        Signed for analytic domains (negative outside), unsigned for submeshes.
        """
        pts = self.vertices if points is None else np.atleast_2d(np.asarray(points, float))
        g = self.geometry
        if self.domain_tag == "rectangle":
            x0, y0 = g["origin"]
            x = pts[:, 0] - x0
            y = pts[:, 1] - y0
            return np.minimum.reduce([x, g["width"] - x, y, g["height"] - y])
        if self.domain_tag == "disk":
            c = np.asarray(g["center"], float)
            return g["radius"] - np.hypot(*(pts - c).T)
        if self.domain_tag == "polygon" and "corners" in g:
            corners = np.asarray(g["corners"], float)
            segs = np.stack([corners, np.roll(corners, -1, axis=0)], axis=1)
            d = _segment_distance(pts, segs)
            # convex, counter-clockwise corners: inside iff left of every edge
            e = segs[:, 1] - segs[:, 0]
            rel = pts[:, None, :] - segs[None, :, 0]
            cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
            inside = np.all(cross >= -1e-14 * self.diameter**2, axis=1)
            return np.where(inside, d, -d)
        segs = self.vertices[self.boundary_edges]
        return _segment_distance(pts, segs)

    @property
    def inradius(self) -> float:
        g = self.geometry
        if self.domain_tag == "rectangle":
            return 0.5 * min(g["width"], g["height"])
        if self.domain_tag == "disk":
            return float(g["radius"])
        return float(self.distance_to_boundary().max())

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": self.boundary.tolist(),
            "domain_tag": self.domain_tag,
            "geometry": _jsonable(self.geometry),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "Mesh":
        return cls(
            vertices=np.asarray(data["vertices"], float),
            triangles=np.asarray(data["triangles"], np.int64),
            boundary=np.asarray(data["boundary"], np.int64),
            domain_tag=data.get("domain_tag", "submesh"),
            geometry=data.get("geometry", {}),
        )

    @classmethod
    def from_json(cls, source) -> "Mesh":
        """Load from a JSON string or a path to a JSON file."""
        if isinstance(source, str) and source.lstrip().startswith("{"):
            return cls.from_dict(json.loads(source))
        with open(source) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class InteriorRegion:
    """Vertex set of a compactly contained subdomain and its boundary margin."""

    vertices: np.ndarray
    margin: float

    def __len__(self):
        return len(self.vertices)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _segment_distance(points, segments):
    a = segments[:, 0]
    ab = segments[:, 1] - a
    ap = points[:, None, :] - a[None]
    len2 = (ab**2).sum(axis=1)
    t = np.clip((ap * ab[None]).sum(axis=2) / len2[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.sqrt(((points[:, None, :] - closest) ** 2).sum(axis=2)).min(axis=1)


def _refine(vertices, triangles):
    """Red (midpoint) refinement. Returns new arrays plus, per new vertex, its parent edge."""
    t = triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    edges, inverse = np.unique(e, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    n = len(vertices)
    mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    m = len(t)
    m01 = n + inverse[:m]
    m12 = n + inverse[m : 2 * m]
    m20 = n + inverse[2 * m :]
    a, b, c = t.T
    new_t = np.concatenate(
        [
            np.stack([a, m01, m20], axis=1),
            np.stack([m01, b, m12], axis=1),
            np.stack([m20, m12, c], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ]
    )
    return np.vstack([vertices, mids]), new_t, edges


def _boundary_from_topology(triangles):
    t = triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return np.unique(uniq[counts == 1])


def generate_rectangle(nx: int, ny: int, width: float = 1.0, height: float = 1.0,
                       origin=(0.0, 0.0)) -> Mesh:
    """Structured triangulation of ``[x0, x0+width] x [y0, y0+height]``.

    Each cell is split by one diagonal whose direction alternates in a
    checkerboard pattern, so interior vertex patches are point-symmetric.
    Doubling ``nx, ny`` yields a nested refinement.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive integers")
    if not (width > 0 and height > 0):
        raise ValueError("width and height must be positive")
    nx, ny = int(nx), int(ny)
    xs = origin[0] + width * np.arange(nx + 1) / nx
    ys = origin[1] + height * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    even = (i + j) % 2 == 0
    # even cells: diagonal v00-v11, odd cells: diagonal v10-v01
    t1 = np.where(even[:, None], np.stack([v00, v10, v11], 1), np.stack([v00, v10, v01], 1))
    t2 = np.where(even[:, None], np.stack([v00, v11, v01], 1), np.stack([v10, v11, v01], 1))
    triangles = np.vstack([t1, t2])

    iv = np.tile(np.arange(nx + 1), ny + 1)
    jv = np.repeat(np.arange(ny + 1), nx + 1)
    on_edge = (iv == 0) | (iv == nx) | (jv == 0) | (jv == ny)
    return Mesh(
        vertices,
        triangles,
        np.flatnonzero(on_edge),
        "rectangle",
        {"origin": list(map(float, origin)), "width": float(width), "height": float(height),
         "nx": nx, "ny": ny},
    )


def generate_disk(refinement: int, radius: float = 1.0, center=(0.0, 0.0)) -> Mesh:
    """Disk mesh from a hexagonal seed refined ``refinement`` times.

    New boundary midpoints are projected radially onto the circle after
    every refinement step.
    """
    if int(refinement) != refinement or refinement < 0:
        raise ValueError("refinement must be a nonnegative integer")
    if refinement > MAX_DISK_REFINEMENT:
        raise ValueError(f"refinement > {MAX_DISK_REFINEMENT} is not supported")
    if not radius > 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, float)
    ang = np.arange(6) * np.pi / 3
    vertices = np.vstack([[0.0, 0.0], np.column_stack([np.cos(ang), np.sin(ang)])])
    triangles = np.array([[0, 1 + k, 1 + (k + 1) % 6] for k in range(6)])
    for _ in range(int(refinement)):
        vertices, triangles = _refine(vertices, triangles)[:2]
        bdry = _boundary_from_topology(triangles)
        r = np.hypot(*vertices[bdry].T)
        vertices[bdry] /= r[:, None]
    bdry = _boundary_from_topology(triangles)
    vertices = c + radius * vertices
    # exact projection in the final coordinates
    d = vertices[bdry] - c
    vertices[bdry] = c + radius * d / np.hypot(*d.T)[:, None]
    return Mesh(vertices, triangles, bdry, "disk",
                {"center": c.tolist(), "radius": float(radius), "refinement": int(refinement)})


def generate_polygon(corners, refinement: int = 3) -> Mesh:
    """Convex polygon from a centroid fan refined ``refinement`` times."""
    corners = np.asarray(corners, float)
    if corners.ndim != 2 or corners.shape[1] != 2 or len(corners) < 3:
        raise ValueError("need at least three 2D corners")
    e = np.roll(corners, -1, axis=0) - corners
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.all(cross < 0):
        corners = corners[::-1]
    elif not np.all(cross > 0):
        raise ValueError("polygon must be strictly convex")
    k = len(corners)
    vertices = np.vstack([corners.mean(axis=0), corners])
    triangles = np.array([[0, 1 + i, 1 + (i + 1) % k] for i in range(k)])
    for _ in range(int(refinement)):
        vertices, triangles = _refine(vertices, triangles)[:2]
    return Mesh(vertices, triangles, _boundary_from_topology(triangles), "polygon",
                {"corners": corners.tolist(), "refinement": int(refinement)})


def interior_region(mesh: Mesh, margin: float) -> InteriorRegion:
    """All vertices at distance >= ``margin`` from the boundary."""
    if not margin > 0:
        raise ValueError("margin must be positive")
    dist = mesh.distance_to_boundary()
    # tolerance absorbs round-off for vertices placed exactly at the margin
    idx = np.flatnonzero(dist >= margin - 1e-12 * mesh.diameter)
    if len(idx) == 0:
        raise EmptyRegionError(
            f"margin {margin:g} leaves no vertices (inradius ~ {mesh.inradius:g})"
        )
    return InteriorRegion(idx, float(margin))


def submesh(mesh: Mesh, vertex_ids) -> tuple[Mesh, np.ndarray]:
    """Triangles whose three vertices lie in ``vertex_ids``.

    Returns the submesh and ``parent_index`` with
    ``submesh.vertices[k] == mesh.vertices[parent_index[k]]``.
    """
    keep = np.zeros(mesh.n_vertices, dtype=bool)
    keep[np.asarray(vertex_ids)] = True
    tri = mesh.triangles[keep[mesh.triangles].all(axis=1)]
    if len(tri) == 0:
        raise EmptyRegionError("vertex set spans no complete triangle")
    parent = np.unique(tri)
    local = -np.ones(mesh.n_vertices, dtype=np.int64)
    local[parent] = np.arange(len(parent))
    tri = local[tri]
    return (
        Mesh(mesh.vertices[parent], tri, _boundary_from_topology(tri), "submesh", {}),
        parent,
    )
