"""Linear subspaces of R^d held as orthonormal frames.

Distances follow the sup/min definition

    dist(E, F) = max( sup_{v in E, |v|=1} dist(v, F), sup_{v in F, |v|=1} dist(v, E) )

which for frames reduces to the spectral norm of the residual
``(I - P_F) frame_E``; for equal dimensions this is the sine of the largest
principal angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    AmbientMismatch,
    NotComplementary,
    NotGeneralPosition,
    NotTransverse,
    RankDeficient,
    ZeroVector,
)

RANK_TOL = 1e-10
SINGULAR_TOL = 1e-8
ORTHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of R^d given by a d x k frame with orthonormal columns.

    ``k == 0`` is reserved for the zero subspace, which is only produced by
    :meth:`zero` (the certificate returned for a trivial transverse
    intersection).
    """

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=float, copy=True)
        if f.ndim != 2:
            raise ValueError("frame must be a d x k matrix")
        d, k = f.shape
        if d < 1 or k > d:
            raise ValueError(f"invalid frame shape {f.shape}")
        if k:
            err = np.abs(f.T @ f - np.eye(k)).max()
            if err > ORTHO_TOL * max(1, k):
                raise ValueError(f"frame columns are not orthonormal (error {err:.2e})")
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def whole(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.T

    def complement(self) -> "Subspace":
        """Orthogonal complement in the ambient inner product."""
        return Subspace(_complement_frame(self.frame))

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _complement_frame(frame: np.ndarray) -> np.ndarray:
    d, k = frame.shape
    if k == 0:
        return np.eye(d)
    q, _ = np.linalg.qr(frame, mode="complete")
    return q[:, k:]


def _positive_qr(a: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(a)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


def orthonormalize(vectors: Sequence[np.ndarray] | np.ndarray) -> Subspace:
    """Orthonormal frame for the span of linearly independent vectors.

    ``vectors`` is a sequence of d-vectors (or a d x k matrix of columns).
    The frame is the Gram-Schmidt output, so an already orthonormal input
    comes back unchanged.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        a = np.asarray(vectors, dtype=float)
    else:
        a = np.column_stack([np.asarray(v, dtype=float).ravel() for v in vectors])
    if a.shape[1] == 0:
        raise RankDeficient("no vectors given")
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > RANK_TOL * max(s[0], np.finfo(float).tiny)))
    if s[0] == 0 or rank < a.shape[1]:
        raise RankDeficient(f"numerical rank {rank} < {a.shape[1]} vectors")
    return Subspace(_positive_qr(a))


def _check_ambient(*spaces: Subspace) -> int:
    d = spaces[0].ambient_dim
    for s in spaces[1:]:
        if s.ambient_dim != d:
            raise AmbientMismatch(f"ambient dimensions differ: {d} vs {s.ambient_dim}")
    return d


def _one_sided(a: np.ndarray, b: np.ndarray) -> float:
    # sup over unit v in span(a) of dist(v, span(b))
    if a.shape[1] == 0:
        return 0.0
    resid = a - b @ (b.T @ a) if b.shape[1] else a
    return float(np.linalg.norm(resid, 2))


def subspace_distance(E: Subspace, F: Subspace) -> float:
    """Symmetric sup/min distance between two subspaces, in [0, 1]."""
    _check_ambient(E, F)
    dist = max(_one_sided(E.frame, F.frame), _one_sided(F.frame, E.frame))
    return float(min(1.0, max(0.0, dist)))


def containment_residual(inner: Subspace, outer: Subspace) -> float:
    """sup over unit v in ``inner`` of dist(v, ``outer``); zero iff inner <= outer."""
    _check_ambient(inner, outer)
    return _one_sided(inner.frame, outer.frame)


def direct_sum(spaces: Sequence[Subspace]) -> Subspace:
    frames = [s.frame for s in spaces if s.dim]
    if not frames:
        return Subspace.zero(spaces[0].ambient_dim)
    return orthonormalize(np.hstack(frames))


def apply_matrix(A: np.ndarray, E: Subspace) -> Subspace:
    """Image ``A E`` re-orthonormalized."""
    return orthonormalize(np.asarray(A, dtype=float) @ E.frame)


@dataclass(frozen=True, eq=False)
class GraphMap:
    """L : E -> E^perp whose graph {u + Lu : u in E} is another subspace.

    ``map_matrix`` is written in the orthonormal coordinates given by
    ``base.frame`` (domain) and ``complement_frame`` (codomain).
    """

    base: Subspace
    complement_frame: np.ndarray
    map_matrix: np.ndarray
    operator_norm: float

    def ambient(self) -> np.ndarray:
        """L as a d x d operator (zero on E^perp)."""
        return self.complement_frame @ self.map_matrix @ self.base.frame.T

    def graph(self) -> Subspace:
        cols = self.base.frame + self.complement_frame @ self.map_matrix
        return orthonormalize(cols)

    def distance_sandwich(self) -> tuple[float, float]:
        """(|L|/sqrt(1+|L|^2), |L|), the bracket around dist(E, graph)."""
        n = self.operator_norm
        return n / np.sqrt(1.0 + n * n), n


def graph_map(E: Subspace, F: Subspace) -> GraphMap:
    """The linear map E -> E^perp whose graph is F."""
    d = _check_ambient(E, F)
    if E.dim != F.dim:
        raise NotTransverse(f"dimension mismatch {E.dim} vs {F.dim}")
    perp = _complement_frame(E.frame)
    a = E.frame.T @ F.frame
    b = perp.T @ F.frame
    if E.dim and np.linalg.svd(a, compute_uv=False).min() < SINGULAR_TOL:
        raise NotTransverse("F meets the orthogonal complement of E")
    if E.dim == 0:
        L = np.zeros((d, 0))
    else:
        L = np.linalg.solve(a.T, b.T).T
    norm = float(np.linalg.norm(L, 2)) if L.size else 0.0
    return GraphMap(E, perp, L, norm)


def _check_complementary(E: Subspace, F: Subspace) -> None:
    d = _check_ambient(E, F)
    if E.dim + F.dim != d or E.dim == 0 or F.dim == 0:
        raise NotComplementary(f"dims {E.dim} + {F.dim} != {d}")
    s = np.linalg.svd(np.hstack([E.frame, F.frame]), compute_uv=False)
    if s.min() < SINGULAR_TOL:
        raise NotComplementary("subspaces intersect nontrivially")


def max_pair_cosine(E: Subspace, F: Subspace) -> float:
    """Largest |<v, w>| over unit v in E, w in F (cosine of the smallest angle).

    The sup is used rather than the inf: for dim >= 2 the inf is always 0.
    """
    _check_complementary(E, F)
    c = np.linalg.svd(E.frame.T @ F.frame, compute_uv=False).max()
    return float(min(1.0, c))


class ComponentSplit(NamedTuple):
    v: np.ndarray
    w: np.ndarray
    ratio: float


def component_norm_bound(E: Subspace, F: Subspace, u: np.ndarray) -> ComponentSplit:
    """Split u = v + w along E (+) F and return max(|v|, |w|) / |u|.

    The ratio never exceeds 1 / (1 - max_pair_cosine(E, F)); a violation
    would mean a numerical breakdown and raises ``ArithmeticError``.
    """
    _check_complementary(E, F)
    u = np.asarray(u, dtype=float).ravel()
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ZeroVector("u must be nonzero")
    coef = np.linalg.solve(np.hstack([E.frame, F.frame]), u)
    v = E.frame @ coef[: E.dim]
    w = F.frame @ coef[E.dim:]
    ratio = max(np.linalg.norm(v), np.linalg.norm(w)) / nu
    bound = 1.0 / (1.0 - max_pair_cosine(E, F))
    if ratio > bound * (1 + 1e-9):
        raise ArithmeticError(f"component ratio {ratio} exceeds angle bound {bound}")
    return ComponentSplit(v, w, float(ratio))


def oblique_projection_norm(E: Subspace, F: Subspace) -> float:
    """sup |v| / |v + w| over v in E, w in F, for complementary E, F."""
    _check_complementary(E, F)
    basis = np.hstack([E.frame, F.frame])
    coef = np.linalg.inv(basis)[: E.dim]
    return float(np.linalg.norm(E.frame @ coef, 2))


def grassmann_intersect(Vplus: Subspace, Vminus: Subspace) -> Subspace:
    """Intersection of two subspaces in general position.

    Expected dimension is r = k+ + k- - d. Returns ``Subspace.zero(d)`` when
    r == 0 and raises ``NotGeneralPosition`` when the numerical intersection
    has any other dimension than r.
    """
    d = _check_ambient(Vplus, Vminus)
    r = Vplus.dim + Vminus.dim - d
    if r < 0:
        raise NotGeneralPosition(f"dims {Vplus.dim} + {Vminus.dim} < {d}")
    perp = _complement_frame(Vminus.frame)
    if perp.shape[1] == 0:
        return Vplus
    constraint = perp.T @ Vplus.frame
    _, s, vt = np.linalg.svd(constraint)
    if s.size and s.min() < SINGULAR_TOL:
        raise NotGeneralPosition(
            f"intersection larger than expected dimension {r} (sigma_min={s.min():.2e})"
        )
    if r == 0:
        return Subspace.zero(d)
    null = vt[-r:].T
    return Subspace(_positive_qr(Vplus.frame @ null))
