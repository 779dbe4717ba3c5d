"""Pointwise non-zero constraints on solution tuples and completeness certificates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fem import ComplexField, recover_nodal_gradient
from .mesh import InteriorRegion, Mesh

# kind -> (r components, b solutions, growth exponent s in d=2)
ZETA_KINDS = {
    "zeta_det": (3, 3, 3),
    "zeta_cross": (2, 3, 2),
    "zeta_det_prime": (2, 3, 3),
    "zeta_modulus": (1, 1, 1),
}


@dataclass(frozen=True)
class ZetaMap:
    """One of the built-in constraint maps (all use values and first derivatives)."""

    kind: str
    c_zeta: float | None = None

    def __post_init__(self):
        if self.kind not in ZETA_KINDS:
            raise ValueError(f"unknown zeta map {self.kind!r}; choose from {sorted(ZETA_KINDS)}")

    @property
    def r(self) -> int:
        return ZETA_KINDS[self.kind][0]

    @property
    def b(self) -> int:
        return ZETA_KINDS[self.kind][1]

    @property
    def s(self) -> int:
        return ZETA_KINDS[self.kind][2]

    @property
    def kappa(self) -> int:
        return 0 if self.kind == "zeta_modulus" else 1


@dataclass(frozen=True)
class MeasurementSet:
    """Frequencies times boundary illuminations."""

    frequencies: tuple
    illuminations: tuple

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(w) for w in self.frequencies))
        object.__setattr__(self, "illuminations", tuple(self.illuminations))

    def check(self, zmap: ZetaMap | None = None, admissible=None):
        if zmap is not None and len(self.illuminations) != zmap.b:
            raise ValueError(f"{zmap.kind} needs {zmap.b} illuminations, got {len(self.illuminations)}")
        if admissible is not None:
            lo, hi = admissible.k_min, admissible.k_max
            if any(w < lo - 1e-12 or w > hi + 1e-12 for w in self.frequencies):
                raise ValueError("frequencies outside the admissible range")
        return self


def _bordered_det(u, g):
    """det [[u1 u2 u3], [d1 u1 d1 u2 d1 u3], [d2 u1 d2 u2 d2 u3]] per point."""
    M = np.stack([u, g[:, 0, :], g[:, 1, :]], axis=1)  # (npts, 3 rows, 3 cols)
    return np.linalg.det(M)


def eval_zeta(zmap: ZetaMap, fields: Sequence[ComplexField], points: InteriorRegion,
              mesh: Mesh) -> np.ndarray:
    """Values of each constraint component at the region vertices, shape (npts, r)."""
    if len(fields) != zmap.b:
        raise ValueError(f"{zmap.kind} takes {zmap.b} fields, got {len(fields)}")
    idx = points.vertices
    u = np.stack([f.nodal_values[idx] for f in fields], axis=1)  # (npts, b)
    if zmap.kind == "zeta_modulus":
        return u[:, :1].copy()
    g = np.stack([recover_nodal_gradient(f, mesh)[idx] for f in fields], axis=2)  # (npts, 2, b)
    cross = g[:, 0, 1] * g[:, 1, 2] - g[:, 1, 1] * g[:, 0, 2]
    if zmap.kind == "zeta_cross":
        return np.column_stack([u[:, 0], cross])
    bordered = _bordered_det(u, g)
    if zmap.kind == "zeta_det_prime":
        return np.column_stack([u[:, 0], bordered])
    return np.column_stack([u[:, 0], cross, bordered])


def min_modulus(zmap, fields, points, mesh) -> np.ndarray:
    """``min_j |zeta^j|`` at every region vertex."""
    return np.abs(eval_zeta(zmap, fields, points, mesh)).min(axis=1)


@dataclass
class CompletenessReport:
    achieved_C: float
    complete: bool
    region_vertices: np.ndarray
    frequencies: np.ndarray
    per_point_scores: np.ndarray
    cover: np.ndarray
    frequency_scores: np.ndarray = field(repr=False)
    threshold_fraction: float = 0.5
    dropped_frequencies: list = field(default_factory=list)

    @property
    def subdomains(self) -> dict:
        """``Omega'_omega``: region vertices with ``min_j |zeta^j| > fraction * C``."""
        thr = self.threshold_fraction * self.achieved_C
        return {float(w): self.region_vertices[self.frequency_scores[k] > thr]
                for k, w in enumerate(self.frequencies)}

    @property
    def frequencies_used(self) -> np.ndarray:
        return np.unique(self.cover)

    def to_dict(self) -> dict:
        return {
            "achieved_C": float(self.achieved_C),
            "complete": bool(self.complete),
            "frequencies": self.frequencies.tolist(),
            "threshold_fraction": self.threshold_fraction,
            "cover": [[int(v), float(w)] for v, w in zip(self.region_vertices, self.cover)],
            "scores": self.per_point_scores.tolist(),
            "dropped_frequencies": [float(w) for w in self.dropped_frequencies],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, mesh: Mesh) -> str:
        lines = ["vertex_id,x,y,score,omega"]
        for v, s, w in zip(self.region_vertices, self.per_point_scores, self.cover):
            x, y = mesh.vertices[v].tolist()
            lines.append(f"{int(v)},{x!r},{y!r},{float(s)!r},{float(w)!r}")
        return "\n".join(lines) + "\n"


def certify_complete(zmap: ZetaMap, solutions: Mapping[float, Sequence[ComplexField]],
                     points: InteriorRegion, mesh: Mesh,
                     threshold_fraction: float = 0.5) -> CompletenessReport:
    """Score every region vertex by its best frequency.

    ``score(x) = max_omega min_j |zeta^j(u_omega)(x)|``; the achieved constant
    is the minimum score, and each vertex is assigned the frequency attaining
    its maximum (ties go to the lowest frequency).
    """
    if not 0 < threshold_fraction <= 1:
        raise ValueError("threshold_fraction must lie in (0, 1]")
    if len(solutions) == 0:
        raise ValueError("certify_complete needs at least one frequency")
    freqs = np.array(sorted(float(w) for w in solutions))
    by_freq = {float(w): f for w, f in solutions.items()}
    for w in freqs:
        if len(by_freq[w]) != zmap.b:
            raise ValueError(f"frequency {w:g} carries {len(by_freq[w])} fields, need {zmap.b}")
    table = np.stack([min_modulus(zmap, by_freq[w], points, mesh) for w in freqs])
    best = np.argmax(table, axis=0)  # first maximum = lowest frequency
    scores = table[best, np.arange(table.shape[1])]
    achieved = float(scores.min())
    return CompletenessReport(
        achieved_C=achieved,
        complete=bool(achieved > 0),
        region_vertices=np.asarray(points.vertices),
        frequencies=freqs,
        per_point_scores=scores,
        cover=freqs[best],
        frequency_scores=table,
        threshold_fraction=threshold_fraction,
    )


def min_gradient_check(field: ComplexField, points: InteriorRegion, mesh: Mesh) -> float:
    """Minimum of the recovered gradient modulus over the region vertices."""
    g = recover_nodal_gradient(field, mesh)[points.vertices]
    return float(np.sqrt((np.abs(g) ** 2).sum(axis=1)).min())
