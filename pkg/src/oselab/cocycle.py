"""Linear cocycles over a base map and their iterates.

A point of the base is a 1-D numpy array whose layout is owned by the
system (torus coordinates, or a cursor followed by a symbol window for shift
spaces).  Every callable on a :class:`CocycleSystem` is vectorized over any
leading batch axes, so ``generator`` maps an array of shape ``(..., p)`` to
matrices of shape ``(..., d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from .errors import DomainError, NotInvertible, Overflow
from .reports import BoundReport

OVERFLOW_NORM = 1e300

PointMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CocycleSystem:
    """Base map, base metric and matrix generator, with regularity data.

    ``lipschitz_L`` plays both roles it has in the iterate-Hölder estimate:
    a Lipschitz constant of ``step`` and a bound for ``|A(x)|``.
    ``holder_c0`` and ``holder_nu`` satisfy |A(x) - A(y)| <= c0 d(x, y)^nu.
    """

    dim: int
    step: PointMap
    metric: Callable[[np.ndarray, np.ndarray], np.ndarray]
    generator: PointMap
    lipschitz_L: float
    holder_c0: float
    holder_nu: float
    inverse_step: PointMap | None = None
    kind: str = "custom"
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None
    neighbor: Callable[[np.random.Generator, np.ndarray, np.ndarray], np.ndarray] | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be positive")
        if not self.lipschitz_L >= 1:
            raise DomainError("lipschitz_L must be >= 1")
        if not self.holder_c0 > 0:
            raise DomainError("holder_c0 must be > 0")
        if not 0 < self.holder_nu <= 1:
            raise DomainError("holder_nu must lie in (0, 1]")

    @property
    def invertible(self) -> bool:
        return self.inverse_step is not None

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.sampler is None:
            raise NotImplementedError(f"system {self.kind!r} has no sampler")
        return self.sampler(rng, count)


def forward_orbit(sys: CocycleSystem, x: np.ndarray, n: int) -> np.ndarray:
    """Points x_0, ..., x_{n-1}, stacked on axis -2."""
    pts = []
    cur = np.asarray(x)
    for _ in range(n):
        pts.append(cur)
        cur = sys.step(cur)
    if not pts:
        return np.empty(np.shape(x)[:-1] + (0, np.shape(x)[-1]), dtype=np.asarray(x).dtype)
    return np.stack(pts, axis=-2)


def backward_orbit(sys: CocycleSystem, x: np.ndarray, n: int) -> np.ndarray:
    """Points x_{-n}, ..., x_{-1} in increasing time order."""
    if not sys.invertible:
        raise NotInvertible(f"system {sys.kind!r} has no inverse step")
    pts = []
    cur = np.asarray(x)
    for _ in range(n):
        cur = sys.inverse_step(cur)
        pts.append(cur)
    if not pts:
        return np.empty(np.shape(x)[:-1] + (0, np.shape(x)[-1]), dtype=np.asarray(x).dtype)
    return np.stack(pts[::-1], axis=-2)


def orbit_segment(sys: CocycleSystem, x: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Points x_start, ..., x_{stop-1} for start <= 0 <= stop."""
    if start > 0 or stop < 0:
        raise ValueError("segment must contain time 0 in [start, stop]")
    fwd = forward_orbit(sys, x, stop)
    if start == 0:
        return fwd
    return np.concatenate([backward_orbit(sys, x, -start), fwd], axis=-2)


def iterate(sys: CocycleSystem, x: np.ndarray, n: int) -> np.ndarray:
    """The n-fold product A^n(x) (n may be negative for invertible systems)."""
    d = sys.dim
    out = np.eye(d)
    if n == 0:
        return out
    if n > 0:
        mats = sys.generator(forward_orbit(sys, x, n))
        for A in mats:
            out = A @ out
            if not np.all(np.isfinite(out)) or np.linalg.norm(out, 2) > OVERFLOW_NORM:
                raise Overflow(f"partial product exceeded {OVERFLOW_NORM:g}")
        return out
    if not sys.invertible:
        raise NotInvertible("negative iterates need an invertible base map")
    mats = sys.generator(backward_orbit(sys, x, -n))
    # A^{-n}(x) = A(x_{-n})^{-1} ... A(x_{-1})^{-1}; x_{-1} acts first
    for A in mats[::-1]:
        out = np.linalg.solve(A, out)
        if not np.all(np.isfinite(out)) or np.linalg.norm(out, 2) > OVERFLOW_NORM:
            raise Overflow(f"partial product exceeded {OVERFLOW_NORM:g}")
    return out


def holder_iterate_constant(c0: float, nu: float, L: float, eps: float) -> float:
    """Growth constant c1 = max(e^eps, L^(1+nu), 1+c0) of the Hölder constants of A^n."""
    if not c0 > 0:
        raise DomainError("c0 must be > 0")
    if not 0 < nu <= 1:
        raise DomainError("nu must lie in (0, 1]")
    if not L >= 1:
        raise DomainError("L must be >= 1")
    if not eps >= 0:
        raise DomainError("eps must be >= 0")
    return float(max(np.exp(eps), L ** (1.0 + nu), 1.0 + c0))


def verify_iterate_holder(
    sys: CocycleSystem,
    pairs: Iterable[tuple[np.ndarray, np.ndarray]],
    n_max: int,
    eps: float = 0.0,
) -> BoundReport:
    """Check |A^n(x) - A^n(y)| <= c1^n d(x,y)^nu for 1 <= n <= n_max on every pair.

    The reported entry is the (pair, n) with the smallest margin relative to
    max(1, bound); ``context['violations']`` counts every failing check.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    c1 = holder_iterate_constant(sys.holder_c0, sys.holder_nu, sys.lipschitz_L, eps)
    worst = None
    violations = 0
    checks = 0
    for idx, (x, y) in enumerate(pairs):
        dxy = float(sys.metric(np.asarray(x), np.asarray(y)))
        if not dxy > 0:
            raise DomainError(f"pair {idx} has zero base distance")
        ax = sys.generator(forward_orbit(sys, x, n_max))
        ay = sys.generator(forward_orbit(sys, y, n_max))
        px = np.eye(sys.dim)
        py = np.eye(sys.dim)
        for n in range(1, n_max + 1):
            px = ax[n - 1] @ px
            py = ay[n - 1] @ py
            if max(np.abs(px).max(), np.abs(py).max()) > OVERFLOW_NORM:
                raise Overflow(f"partial product exceeded {OVERFLOW_NORM:g}")
            lhs = float(np.linalg.norm(px - py, 2))
            rhs = float(c1**n * dxy**sys.holder_nu)
            checks += 1
            if lhs > rhs * (1 + 1e-9):
                violations += 1
            score = (rhs - lhs) / max(1.0, rhs)
            if worst is None or score < worst[0]:
                worst = (score, rhs, lhs, idx, n, dxy)
    if worst is None:
        raise DomainError("no pairs supplied")
    _, rhs, lhs, idx, n, dxy = worst
    return BoundReport(
        bound_value=rhs,
        measured=lhs,
        context={
            "lemma": "iterate_holder",
            "c1": c1,
            "nu": sys.holder_nu,
            "pair_index": idx,
            "n": n,
            "base_distance": dxy,
            "checks": checks,
            "violations": violations,
        },
    )


def check_system(sys: CocycleSystem, points: np.ndarray, tol: float = 1e-10) -> None:
    """Spot-check the structural invariants of ``sys`` on sample points.

    Raises ``DomainError`` describing the first failure.
    """
    pts = np.asarray(points)
    mats = sys.generator(pts)
    if np.abs(np.linalg.det(mats)).min() <= 1e-14:
        raise DomainError("generator is (nearly) singular")
    a, b = pts[:-1], pts[1:]
    if not np.allclose(sys.metric(a, b), sys.metric(b, a), rtol=0, atol=tol):
        raise DomainError("metric is not symmetric")
    if np.abs(sys.metric(pts, pts)).max() > tol:
        raise DomainError("metric does not vanish on the diagonal")
    if sys.invertible:
        back = sys.step(sys.inverse_step(pts))
        if np.max(sys.metric(back, pts)) > tol:
            raise DomainError("step(inverse_step(x)) != x")
