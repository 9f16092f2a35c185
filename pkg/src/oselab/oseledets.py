"""Lyapunov spectra, Oseledets filtrations and splittings.

Everything here is driven by orthogonalized products over finite orbit
windows:

* the spectrum comes from the QR cascade ``A(x_j) Q_j = Q_{j+1} R_j``;
* the forward filtration at x comes from a sweep with the inverse matrices
  from x_{n} back to x.  The leading columns of the resulting frame are the
  directions most expanded by A^{-n}, so the first dim F^i columns span F^i;
* the backward flag comes from a forward sweep from x_{-n} to x.  Its
  leading columns are the fastest directions, so the trailing
  ``dim F^{i-1}`` columns span the orthogonal complement of the fastest
  ``d - dim F^{i-1}`` directions;
* E^i is the intersection of F^i with that fast subspace, which is the
  (k-i+1)-th member of the backward flag counted from the fast end.

Batched helpers work on arrays of points and are shared with the
regular-block code so that frames are computed identically everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cocycle import CocycleSystem, forward_orbit, orbit_segment
from .errors import DomainError, HorizonTooShort, NotInvertible, SeparationFailure
from .grassmann import (
    Subspace,
    apply_matrix,
    direct_sum,
    grassmann_intersect,
    subspace_distance,
)

DEFAULT_GAP_TOL = 0.05
DEFAULT_WARMUP = 100
SEPARATION_FACTOR = 1e3


@dataclass(frozen=True)
class Spectrum:
    """Distinct exponents chi_1 < ... < chi_k with multiplicities."""

    exponents: tuple[float, ...]
    multiplicities: tuple[int, ...]
    horizon: int = 0
    residual: float = 0.0
    raw_rates: tuple[float, ...] = ()

    def __post_init__(self):
        exps = tuple(float(e) for e in self.exponents)
        mults = tuple(int(m) for m in self.multiplicities)
        if not exps or len(exps) != len(mults):
            raise DomainError("exponents and multiplicities must be nonempty and equally long")
        if any(m < 1 for m in mults):
            raise DomainError("multiplicities must be positive")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise DomainError("exponents must be strictly increasing")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "multiplicities", mults)

    @classmethod
    def from_exponents(cls, exponents: Sequence[float], multiplicities: Sequence[int] | None = None):
        """A known spectrum (no horizon, zero residual)."""
        if multiplicities is None:
            multiplicities = [1] * len(exponents)
        return cls(tuple(exponents), tuple(multiplicities))

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @property
    def flag_dims(self) -> tuple[int, ...]:
        """dim F^1, ..., dim F^k."""
        return tuple(int(v) for v in np.cumsum(self.multiplicities))

    @property
    def min_gap(self) -> float:
        if self.k == 1:
            return float("inf")
        return float(np.min(np.diff(self.exponents)))

    def determinant_rate(self) -> float:
        return float(np.dot(self.exponents, self.multiplicities))

    def to_dict(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "multiplicities": list(self.multiplicities),
            "horizon": self.horizon,
            "residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class OseledetsData:
    at: np.ndarray
    spectrum: Spectrum
    flags: tuple[Subspace, ...]
    splitting: tuple[Subspace, ...] | None = None
    window: int = 0
    equivariance_defect: float | None = None

    def flag_residual(self) -> float:
        """max_j dist(F^j, E^1 + ... + E^j); zero when no splitting is present."""
        if self.splitting is None:
            return 0.0
        return max(
            subspace_distance(self.flags[j], direct_sum(self.splitting[: j + 1]))
            for j in range(len(self.flags))
        )


# ---------------------------------------------------------------- batched QR


def generic_frame(d: int) -> np.ndarray:
    """Fixed orthogonal matrix in general position, used to start every sweep.

    Starting from the identity would keep coordinate axes invariant under
    diagonal products and never reorder them by growth.
    """
    g = np.random.default_rng(20240607).standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def qr_positive(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched thin QR with a nonnegative diagonal; returns (Q, log|diag R|).

    Small frames use modified Gram-Schmidt with one reorthogonalization pass,
    which is much faster than LAPACK on stacks of tiny matrices.
    """
    a = np.asarray(a, dtype=float)
    d, c = a.shape[-2:]
    if d > 4:
        q, r = np.linalg.qr(a)
        diag = np.diagonal(r, axis1=-2, axis2=-1)
        s = np.where(diag < 0, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            return q * s[..., None, :], np.log(np.abs(diag))
    q = np.empty(a.shape[:-2] + (d, c))
    logs = np.empty(a.shape[:-2] + (c,))
    for j in range(c):
        v = a[..., :, j].copy()
        for _ in range(2):
            for i in range(j):
                qi = q[..., :, i]
                v -= np.sum(qi * v, axis=-1, keepdims=True) * qi
        nrm = np.sqrt(np.sum(v * v, axis=-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            q[..., :, j] = v / nrm[..., None]
            logs[..., j] = np.log(nrm)
    return q, logs


def forward_flag_sweep(inv_mats: np.ndarray, targets: np.ndarray, window: int):
    """Frames whose leading columns span the forward filtration at each target.

    ``inv_mats[..., t, :, :]`` holds A(x_t)^{-1} along a stored orbit.  The
    frame at index t uses A(x_t)^{-1} ... A(x_{t+window-1})^{-1}.  Returns
    (Q, rates) with rates ascending (forward growth rates of the columns).
    """
    targets = np.asarray(targets)
    batch = inv_mats.shape[:-3]
    d = inv_mats.shape[-1]
    q = np.broadcast_to(generic_frame(d), batch + (targets.size, d, d)).copy()
    acc = np.zeros(batch + (targets.size, d))
    for s in range(window - 1, -1, -1):
        q, logs = qr_positive(inv_mats[..., targets + s, :, :] @ q)
        acc += logs
    return q, -acc / window


def backward_flag_sweep(mats: np.ndarray, targets: np.ndarray, window: int):
    """Frames with the fastest directions first, from A(x_{t-window}) ... A(x_{t-1}).

    Returns (Q, rates) with rates descending.
    """
    targets = np.asarray(targets)
    batch = mats.shape[:-3]
    d = mats.shape[-1]
    q = np.broadcast_to(generic_frame(d), batch + (targets.size, d, d)).copy()
    acc = np.zeros(batch + (targets.size, d))
    for s in range(window, 0, -1):
        q, logs = qr_positive(mats[..., targets - s, :, :] @ q)
        acc += logs
    return q, acc / window


def splitting_from_sweeps(qf: np.ndarray, qb: np.ndarray, flag_dims: Sequence[int]) -> list[np.ndarray]:
    """Frames of E^i = F^i intersected with the complement of the slow backward directions."""
    d = qf.shape[-1]
    frames = []
    prev = 0
    for f in flag_dims:
        phi = qf[..., :, :f]
        if prev == 0:
            frames.append(phi)
        else:
            perp = qb[..., :, d - prev:]
            constraint = np.swapaxes(perp, -1, -2) @ phi
            _, _, vt = np.linalg.svd(constraint)
            null = np.swapaxes(vt[..., prev:, :], -1, -2)
            frames.append(phi @ null)
        prev = f
    return frames


def default_window(spectrum: Spectrum, floor: int = 20, cap: int = 400) -> int:
    """Window length giving e^(-window * mingap) far below double precision."""
    if spectrum.k == 1:
        return floor
    return int(min(cap, max(floor, np.ceil(40.0 / spectrum.min_gap))))


# ---------------------------------------------------------------- spectrum


def _cluster(rates: np.ndarray, gap_tol: float) -> list[list[float]]:
    groups: list[list[float]] = [[rates[0]]]
    for r in rates[1:]:
        if r - groups[-1][0] < gap_tol:
            groups[-1].append(r)
        else:
            groups.append([r])
    return groups


def lyapunov_spectrum(
    sys: CocycleSystem,
    x: np.ndarray,
    n: int = 2000,
    gap_tol: float = DEFAULT_GAP_TOL,
    warmup: int = DEFAULT_WARMUP,
) -> Spectrum:
    """Exponents from the QR cascade along the orbit of x.

    The first ``warmup`` steps only align the frame; rates are averaged over
    the next n steps.  The residual is the larger of the drift of the running
    averages over the last quarter and the mismatch of the determinant
    identity against (1/n) log|det A^n(x)|.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not gap_tol > 0:
        raise DomainError("gap_tol must be > 0")
    if warmup < 0:
        raise DomainError("warmup must be >= 0")
    d = sys.dim
    mats = sys.generator(forward_orbit(sys, np.asarray(x), warmup + n))
    q = generic_frame(d)
    for A in mats[:warmup]:
        q, _ = qr_positive(A @ q)
    logs = np.empty((n, d))
    for t, A in enumerate(mats[warmup:]):
        q, logs[t] = qr_positive(A @ q)
    if not np.all(np.isfinite(logs)):
        raise DomainError("degenerate product along the orbit")
    cums = np.cumsum(logs, axis=0)
    rates = np.sort(cums[-1] / n)
    start = max(0, (3 * n) // 4 - 1)
    t = np.arange(start + 1, n + 1)[:, None]
    running = np.sort(cums[start:] / t, axis=1)
    drift = float(np.max(np.abs(running - rates)))
    _, logdet = np.linalg.slogdet(mats[:n])
    det_gap = abs(float(np.sum(rates)) - float(np.sum(logdet)) / n)
    scale = max(1.0, float(np.max(np.abs(rates))))
    residual = max(drift, det_gap, 1e-12 * scale)
    if residual > gap_tol / 2:
        raise HorizonTooShort(f"residual {residual:.3g} exceeds gap_tol/2 = {gap_tol / 2:.3g}")
    groups = _cluster(rates, gap_tol)
    return Spectrum(
        exponents=tuple(float(np.mean(g)) for g in groups),
        multiplicities=tuple(len(g) for g in groups),
        horizon=n,
        residual=residual,
        raw_rates=tuple(float(r) for r in rates),
    )


# ---------------------------------------------------------------- filtrations


def _check_separation(rates: np.ndarray, spectrum: Spectrum, n: int, gap_tol: float) -> None:
    if spectrum.k == 1:
        return
    if n * spectrum.min_gap <= np.log(SEPARATION_FACTOR):
        raise SeparationFailure(
            f"horizon {n} too short for gap {spectrum.min_gap:.3g} "
            f"(need n * gap > log {SEPARATION_FACTOR:g})"
        )
    for f in spectrum.flag_dims[:-1]:
        gap = abs(rates[f] - rates[f - 1])
        if gap < gap_tol:
            raise SeparationFailure(f"singular rates across flag boundary {f} differ by {gap:.3g}")


def _check_dims(sys: CocycleSystem, spectrum: Spectrum) -> None:
    if spectrum.dim != sys.dim:
        raise DomainError(f"spectrum dimension {spectrum.dim} != system dimension {sys.dim}")


def forward_filtration(
    sys: CocycleSystem,
    x: np.ndarray,
    n: int,
    spectrum: Spectrum,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> list[Subspace]:
    """Nested F^1 < ... < F^k at x from the inverse sweep over x_n, ..., x_0."""
    _check_dims(sys, spectrum)
    if n < 1:
        raise DomainError("n must be >= 1")
    if spectrum.k == 1:
        return [Subspace.whole(sys.dim)]
    mats = sys.generator(forward_orbit(sys, np.asarray(x), n))
    q, rates = forward_flag_sweep(np.linalg.inv(mats), np.array([0]), n)
    _check_separation(rates[0], spectrum, n, gap_tol)
    return [Subspace(q[0][:, :f]) for f in spectrum.flag_dims]


def _backward_frame(sys, x, n, spectrum, gap_tol):
    if not sys.invertible:
        raise NotInvertible(f"system {sys.kind!r} has no inverse step")
    _check_dims(sys, spectrum)
    if n < 1:
        raise DomainError("n must be >= 1")
    if spectrum.k == 1:
        raise SeparationFailure("a single exponent leaves nothing to separate")
    mats = sys.generator(orbit_segment(sys, np.asarray(x), -n, 0))
    q, rates = backward_flag_sweep(mats, np.array([n]), n)
    _check_separation(rates[0][::-1], spectrum, n, gap_tol)
    return q[0]


def backward_filtration(
    sys: CocycleSystem,
    x: np.ndarray,
    n: int,
    spectrum: Spectrum,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> list[Subspace]:
    """Backward flag G^1 < ... < G^k at x, G^j spanned by the j fastest groups.

    G^j = E^k + ... + E^{k-j+1}, so E^i = F^i & G^{k-i+1}.  These are the
    directions whose backward rates are at most -chi_{k-j+1}.
    """
    q = _backward_frame(sys, x, n, spectrum, gap_tol)
    dims = np.cumsum(spectrum.multiplicities[::-1])
    return [Subspace(q[:, :g]) for g in dims]


def splitting(
    sys: CocycleSystem,
    x: np.ndarray,
    n: int,
    spectrum: Spectrum,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> OseledetsData:
    """Oseledets splitting at x by intersecting forward and backward flags."""
    x = np.asarray(x)
    flags = forward_filtration(sys, x, n, spectrum, gap_tol)
    back = backward_filtration(sys, x, n, spectrum, gap_tol)
    k = spectrum.k
    parts = tuple(grassmann_intersect(flags[i], back[k - i - 1]) for i in range(k))
    data = OseledetsData(x, spectrum, tuple(flags), parts, window=n)
    fx = sys.step(x)
    nxt = tuple(
        grassmann_intersect(F, G)
        for F, G in zip(
            forward_filtration(sys, fx, n, spectrum, gap_tol),
            backward_filtration(sys, fx, n, spectrum, gap_tol)[::-1],
        )
    )
    A = sys.generator(x)
    defect = max(subspace_distance(apply_matrix(A, E), F) for E, F in zip(parts, nxt))
    return OseledetsData(x, spectrum, tuple(flags), parts, window=n, equivariance_defect=defect)


def filtration_data(sys: CocycleSystem, x: np.ndarray, n: int, spectrum: Spectrum,
                    gap_tol: float = DEFAULT_GAP_TOL) -> OseledetsData:
    """Forward filtration only (the non-invertible case)."""
    flags = forward_filtration(sys, x, n, spectrum, gap_tol)
    return OseledetsData(np.asarray(x), spectrum, tuple(flags), None, window=n)


def batch_splitting_frames(sys: CocycleSystem, points: np.ndarray, spectrum: Spectrum,
                           window: int) -> list[np.ndarray]:
    """Frames of E^1..E^k at each of a batch of points, shape (P, d, m_i)."""
    if not sys.invertible:
        raise NotInvertible(f"system {sys.kind!r} has no inverse step")
    points = np.asarray(points)
    if spectrum.k == 1:
        return [np.broadcast_to(np.eye(sys.dim), (points.shape[0], sys.dim, sys.dim)).copy()]
    mats = sys.generator(orbit_segment(sys, points, -window, window))
    qf, _ = forward_flag_sweep(np.linalg.inv(mats), np.array([window]), window)
    qb, _ = backward_flag_sweep(mats, np.array([window]), window)
    return [f[:, 0] for f in splitting_from_sweeps(qf, qb, spectrum.flag_dims)]


def batch_filtration_frames(sys: CocycleSystem, points: np.ndarray, spectrum: Spectrum,
                            window: int) -> list[np.ndarray]:
    """Frames of F^1..F^k at each of a batch of points, shape (P, d, dim F^i)."""
    points = np.asarray(points)
    mats = sys.generator(forward_orbit(sys, points, window))
    qf, _ = forward_flag_sweep(np.linalg.inv(mats), np.array([0]), window)
    return [qf[:, 0, :, :f] for f in spectrum.flag_dims]
