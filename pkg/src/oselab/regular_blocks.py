"""Membership tests for regular blocks.

A point belongs to the block with constants (eps, ell) when the growth of
the cocycle along its filtration (or splitting) stays within ell e^{eps|m|}
of the exponential rates, for every orbit shift m and time n up to the
horizon, and (invertible case) the splitting keeps its angles away from
zero.

Growth is measured on the restricted cocycle.  Frames of the invariant
subspaces are recomputed at every orbit point from windows of fixed length,
and the small matrices U(x_{j+1})^T A(x_j) U(x_j) are multiplied out.  Extreme
singular values of these products give the exact sup and inf of
|A^n(x_m) v| / |v| over each tested subspace.  Multiplying the full matrices
instead would let round-off in the slow directions be swamped by the fast
ones.

All clauses are computed once per point into a :class:`BlockProfile`.
Membership for any ell and any horizon up to the computed one is read off
the profile, so it is monotone in both by construction.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .cocycle import CocycleSystem, forward_orbit, orbit_segment
from .errors import DomainError, NotInvertible, SubsetBlowup
from .oseledets import (
    OseledetsData,
    Spectrum,
    backward_flag_sweep,
    default_window,
    forward_flag_sweep,
    qr_positive,
    splitting_from_sweeps,
)
from .reports import BoundReport

SLACK_TOL = 1e-9
MAX_EXHAUSTIVE_K = 12
SAMPLED_SUBSETS = 4096


class ClauseKind(enum.Enum):
    FILTRATION_UPPER = "filtration_upper"
    COMPLEMENT_UPPER = "complement_upper"
    COMPLEMENT_LOWER = "complement_lower"
    FORWARD_UPPER = "forward_upper"
    FORWARD_LOWER = "forward_lower"
    BACKWARD_UPPER = "backward_upper"
    BACKWARD_LOWER = "backward_lower"
    ANGLE = "angle"


_KINDS = list(ClauseKind)


@dataclass(frozen=True)
class Clause:
    """One tested inequality: its family, the subspace index i (1-based) and (m, n)."""

    kind: ClauseKind
    i: int
    m: int
    n: int

    def __str__(self) -> str:
        return f"{self.kind.value}(i={self.i}, m={self.m}, n={self.n})"


@dataclass(frozen=True)
class RegularBlockParams:
    eps: float
    ell: float
    spectrum: Spectrum
    horizon: int = 50
    L_bound: float | None = None
    window: int | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError("eps must be > 0")
        if self.spectrum.k > 1 and not self.eps < self.spectrum.min_gap / 10:
            raise DomainError(
                f"eps={self.eps:g} must be below min gap / 10 = {self.spectrum.min_gap / 10:g}"
            )
        if not self.ell >= 1:
            raise DomainError("ell must be >= 1")
        if self.horizon < 0:
            raise DomainError("horizon must be >= 0")
        natural = self.natural_L()
        if self.L_bound is None:
            object.__setattr__(self, "L_bound", natural)
        elif self.L_bound < natural * (1 - 1e-12):
            warnings.warn(
                f"L_bound={self.L_bound:g} is below e^(2(chi_k - chi_1)) = {natural:g}",
                stacklevel=2,
            )
        if self.window is None:
            object.__setattr__(self, "window", default_window(self.spectrum))
        elif self.window < 1:
            raise DomainError("window must be >= 1")

    def natural_L(self) -> float:
        ex = self.spectrum.exponents
        return float(np.exp(2 * (ex[-1] - ex[0])))


@dataclass(frozen=True, eq=False)
class BlockMembership:
    point: np.ndarray
    passed: bool
    worst_violation: float
    failing_clause: Clause | None
    required_ell: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "failing_clause": None if self.failing_clause is None else str(self.failing_clause),
            "required_ell": self.required_ell,
        }


@dataclass(frozen=True, eq=False)
class BlockProfile:
    """Per-point clause data from which membership at any (ell, horizon) follows.

    ``growth[p, r]`` is the largest log-excess over growth clauses with
    max(|m|, |n|) == r, i.e. the log ell those clauses need.  ``clause[p, r]``
    holds (kind, i, m, n) of that maximizer.  ``cosines[p, n + H]`` is the
    largest cosine over subset pairs at x_n (invertible case only).
    """

    points: np.ndarray
    eps: float
    horizon: int
    invertible: bool
    growth: np.ndarray
    clause: np.ndarray
    cosines: np.ndarray | None
    cosine_subset: np.ndarray | None = None
    subsets: Sequence[tuple[int, ...]] = field(default_factory=tuple)

    def __len__(self) -> int:
        return self.points.shape[0]

    def _check_h(self, horizon):
        h = self.horizon if horizon is None else int(horizon)
        if not 0 <= h <= self.horizon:
            raise DomainError(f"horizon must lie in [0, {self.horizon}]")
        return h

    def slacks(self, ell: float, horizon: int | None = None):
        """(worst slack, index of binding growth radius, binding angle time or -1 - 2 horizon)."""
        h = self._check_h(horizon)
        g = self.growth[:, : h + 1]
        r = np.argmax(g, axis=1)
        worst = np.log(ell) - g[np.arange(len(self)), r]
        angle_n = np.full(len(self), -1 - 2 * self.horizon)
        if self.cosines is not None:
            ns = np.arange(-h, h + 1)
            cos = self.cosines[:, self.horizon - h: self.horizon + h + 1]
            s = (1 - np.exp(-self.eps * np.abs(ns)) / ell) - cos
            j = np.argmin(s, axis=1)
            sa = s[np.arange(len(self)), j]
            use = sa < worst
            worst = np.where(use, sa, worst)
            angle_n = np.where(use, ns[j], -1 - 2 * self.horizon)
        return worst, r, angle_n

    def passing(self, ell: float, horizon: int | None = None) -> np.ndarray:
        return self.slacks(ell, horizon)[0] >= -SLACK_TOL

    def fraction(self, ell: float, horizon: int | None = None) -> float:
        return float(np.mean(self.passing(ell, horizon)))

    def required_ell(self, horizon: int | None = None) -> np.ndarray:
        """Smallest ell (>= 1) passing every clause up to ``horizon``."""
        h = self._check_h(horizon)
        need = np.exp(np.max(self.growth[:, : h + 1], axis=1))
        if self.cosines is not None:
            ns = np.arange(-h, h + 1)
            cos = self.cosines[:, self.horizon - h: self.horizon + h + 1]
            with np.errstate(divide="ignore"):
                ang = np.exp(-self.eps * np.abs(ns)) / np.maximum(1 - cos, 0.0)
            need = np.maximum(need, ang.max(axis=1))
        return np.maximum(need, 1.0)

    def memberships(self, ell: float, horizon: int | None = None) -> list[BlockMembership]:
        worst, r, angle_n = self.slacks(ell, horizon)
        need = self.required_ell(horizon)
        out = []
        for p in range(len(self)):
            passed = bool(worst[p] >= -SLACK_TOL)
            clause = None
            if not passed:
                if angle_n[p] >= -self.horizon:
                    n = int(angle_n[p])
                    sub = self.subsets[int(self.cosine_subset[p, n + self.horizon])]
                    clause = Clause(ClauseKind.ANGLE, int(sub[0]) + 1, 0, n)
                else:
                    kind, i, m, n = (int(v) for v in self.clause[p, r[p]])
                    clause = Clause(_KINDS[kind], i + 1, m, n)
            out.append(BlockMembership(self.points[p], passed, float(worst[p]), clause, float(need[p])))
        return out


# ---------------------------------------------------------------- products


def _log_svals(prods: list[np.ndarray], scales: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    p = np.stack(prods, axis=-3)
    s = np.stack(scales, axis=-1)
    if p.shape[-1] == 1 and p.shape[-2] == 1:
        sv = np.abs(p[..., 0, 0])
        smax = smin = sv
    else:
        sv = np.linalg.svd(p, compute_uv=False)
        smax, smin = sv[..., 0], sv[..., -1]
    with np.errstate(divide="ignore"):
        return np.log(smax) + s, np.log(smin) + s


def _run_products(maps: np.ndarray, starts: np.ndarray, steps: int, inverse: bool):
    """Restricted products along shifted windows.

    ``maps[..., j, :, :]`` is the one-step map at stored index j.  For each
    start s the products M_{s+n-1} ... M_s (or the inverse products going
    backward) are formed for n = 0..steps and their (log smax, log smin)
    returned with shape (..., len(starts), steps + 1).
    """
    batch = maps.shape[:-3]
    c = maps.shape[-1]
    prod = np.broadcast_to(np.eye(c), batch + (starts.size, c, c)).copy()
    scale = np.zeros(batch + (starts.size,))
    prods, scales = [prod.copy()], [scale.copy()]
    if inverse:
        maps = np.linalg.inv(maps)
    for n in range(steps):
        idx = starts - n - 1 if inverse else starts + n
        prod = maps[..., idx, :, :] @ prod
        nrm = np.sqrt(np.sum(prod * prod, axis=(-2, -1)))
        prod /= nrm[..., None, None]
        scale = scale + np.log(nrm)
        prods.append(prod.copy())
        scales.append(scale.copy())
    return _log_svals(prods, scales)


def _reduce_by_radius(excess: np.ndarray, kinds: np.ndarray, ms: np.ndarray, ns: np.ndarray, H: int):
    """Max over clauses of equal radius max(|m|, |n|).

    ``excess`` has shape (B, C) over C flattened clauses, each described by
    kinds/i/m/n arrays of shape (C, 4) passed as ``kinds``.
    """
    radius = np.maximum(np.abs(ms), np.abs(ns))
    B = excess.shape[0]
    growth = np.full((B, H + 1), -np.inf)
    clause = np.zeros((B, H + 1, 4), dtype=np.int64)
    for r in range(H + 1):
        sel = np.flatnonzero(radius == r)
        if sel.size == 0:
            continue
        sub = excess[:, sel]
        j = np.argmax(sub, axis=1)
        growth[:, r] = sub[np.arange(B), j]
        clause[:, r] = kinds[sel[j]]
    return growth, clause


def _growth_clauses(ls_max, ls_min, chi, eps, ms, ns, upper_kind, lower_kind, i):
    """Excess arrays (B, M, N) for an upper and a lower clause family."""
    rate = chi * ns[None, :]
    slackterm = eps * np.abs(ns)[None, :] + eps * np.abs(ms)[:, None]
    upper = ls_max - rate - slackterm
    lower = rate - slackterm - ls_min
    out = []
    for kind, ex in ((upper_kind, upper), (lower_kind, lower)):
        if kind is None:
            continue
        mm, nn = np.meshgrid(ms, ns, indexing="ij")
        desc = np.stack(
            [np.full(mm.size, _KINDS.index(kind)), np.full(mm.size, i), mm.ravel(), nn.ravel()], axis=1
        )
        out.append((ex.reshape(ex.shape[0], -1), desc, mm.ravel(), nn.ravel()))
    return out


def _subsets(k: int, exhaustive: bool | None, rng: np.random.Generator | None):
    """Proper subsets I containing index 0 (I and its complement give the same angle)."""
    if k < 2:
        return []
    if k <= MAX_EXHAUSTIVE_K:
        rest = range(1, k)
        subs = []
        for size in range(0, k - 1):
            for comb in itertools.combinations(rest, size):
                subs.append((0,) + comb)
        return subs
    if exhaustive:
        raise SubsetBlowup(f"{2 ** (k - 1) - 1} subsets for k={k}; request sampled mode")
    rng = rng or np.random.default_rng(0)
    subs = set()
    target = min(SAMPLED_SUBSETS, 2 ** (k - 1) - 1)
    while len(subs) < target:
        mask = rng.random(k - 1) < 0.5
        if mask.all():
            continue
        subs.add((0,) + tuple(int(j) + 1 for j in np.flatnonzero(mask)))
    return sorted(subs)


def _max_cosines(frames: list[np.ndarray], subsets):
    """Largest cosine between sum of E^i (i in I) and the rest, over all I."""
    best = None
    arg = None
    k = len(frames)
    for sid, sub in enumerate(subsets):
        inside = np.concatenate([frames[i] for i in sub], axis=-1)
        outside = np.concatenate([frames[j] for j in range(k) if j not in sub], axis=-1)
        q1, _ = qr_positive(inside)
        q2, _ = qr_positive(outside)
        c = np.swapaxes(q1, -1, -2) @ q2
        if c.shape[-1] == 1 or c.shape[-2] == 1:
            cos = np.sqrt(np.sum(c * c, axis=(-2, -1)))
        else:
            cos = np.linalg.svd(c, compute_uv=False)[..., 0]
        cos = np.minimum(cos, 1.0)
        if best is None:
            best, arg = cos, np.zeros(cos.shape, dtype=np.int64)
        else:
            upd = cos > best
            best = np.where(upd, cos, best)
            arg = np.where(upd, sid, arg)
    return best, arg


def _invertible_chunk(sys, pts, spectrum, eps, H, N, subsets):
    B = pts.shape[0]
    off = 2 * H + N
    mats = sys.generator(orbit_segment(sys, pts, -off, off + 1))
    idx = np.arange(-2 * H, 2 * H + 1) + off
    qf, _ = forward_flag_sweep(np.linalg.inv(mats), idx, N)
    qb, _ = backward_flag_sweep(mats, idx, N)
    frames = splitting_from_sweeps(qf, qb, spectrum.flag_dims)
    A = mats[:, off - 2 * H: off + 2 * H]
    ms = np.arange(-H, H + 1)
    starts = ms + 2 * H
    pieces = []
    for i, (V, chi) in enumerate(zip(frames, spectrum.exponents)):
        maps = np.swapaxes(V[:, 1:], -1, -2) @ A @ V[:, :-1]
        fmax, fmin = _run_products(maps, starts, H, inverse=False)
        bmax, bmin = _run_products(maps, starts, H, inverse=True)
        pieces += _growth_clauses(fmax, fmin, chi, eps, ms, np.arange(H + 1),
                                  ClauseKind.FORWARD_UPPER, ClauseKind.FORWARD_LOWER, i)
        pieces += _growth_clauses(bmax[..., 1:], bmin[..., 1:], chi, eps, ms, -np.arange(1, H + 1),
                                  ClauseKind.BACKWARD_UPPER, ClauseKind.BACKWARD_LOWER, i)
    growth, clause = _collect(pieces, B, H)
    cos = arg = None
    if subsets:
        mid = [f[:, H: 3 * H + 1] for f in frames]
        cos, arg = _max_cosines(mid, subsets)
    return growth, clause, cos, arg


def _noninvertible_chunk(sys, pts, spectrum, eps, H, N):
    B = pts.shape[0]
    mats = sys.generator(forward_orbit(sys, pts, 2 * H + N))
    idx = np.arange(0, 2 * H + 1)
    q, _ = forward_flag_sweep(np.linalg.inv(mats), idx, N)
    A = mats[:, : 2 * H]
    full = np.swapaxes(q[:, 1:], -1, -2) @ A @ q[:, :-1]
    ms = np.arange(H + 1)
    ns = np.arange(H + 1)
    pieces = []
    prev = 0
    for i, (f, chi) in enumerate(zip(spectrum.flag_dims, spectrum.exponents)):
        maps = full[..., :f, :f]
        umax, _ = _run_products(maps, ms, H, inverse=False)
        pieces += _growth_clauses(umax, umax, chi, eps, ms, ns, ClauseKind.FILTRATION_UPPER, None, i)
        wmax, wmin = _run_products_block(maps, ms, H, prev, f)
        pieces += _growth_clauses(wmax, wmin, chi, eps, ms, ns,
                                  ClauseKind.COMPLEMENT_UPPER, ClauseKind.COMPLEMENT_LOWER, i)
        prev = f
    growth, clause = _collect(pieces, B, H)
    return growth, clause


def _run_products_block(maps, starts, steps, lo, hi):
    """Like _run_products, measuring only the columns lo:hi of each product."""
    batch = maps.shape[:-3]
    c = maps.shape[-1]
    prod = np.broadcast_to(np.eye(c)[:, lo:hi], batch + (starts.size, c, hi - lo)).copy()
    scale = np.zeros(batch + (starts.size,))
    prods, scales = [prod.copy()], [scale.copy()]
    for n in range(steps):
        prod = maps[..., starts + n, :, :] @ prod
        nrm = np.sqrt(np.sum(prod * prod, axis=(-2, -1)))
        prod /= nrm[..., None, None]
        scale = scale + np.log(nrm)
        prods.append(prod.copy())
        scales.append(scale.copy())
    p = np.stack(prods, axis=-3)
    s = np.stack(scales, axis=-1)
    if p.shape[-1] == 1:
        sv = np.sqrt(np.sum(p * p, axis=(-2, -1)))
        smax = smin = sv
    else:
        sv = np.linalg.svd(p, compute_uv=False)
        smax, smin = sv[..., 0], sv[..., -1]
    with np.errstate(divide="ignore"):
        return np.log(smax) + s, np.log(smin) + s


def _collect(pieces, B, H):
    excess = np.concatenate([p[0] for p in pieces], axis=1)
    desc = np.concatenate([p[1] for p in pieces], axis=0)
    ms = np.concatenate([p[2] for p in pieces])
    ns = np.concatenate([p[3] for p in pieces])
    return _reduce_by_radius(excess, desc, ms, ns, H)


def block_profile(
    sys: CocycleSystem,
    points: np.ndarray,
    spectrum: Spectrum,
    eps: float,
    horizon: int,
    window: int | None = None,
    invertible: bool | None = None,
    chunk: int = 32,
    exhaustive: bool | None = None,
) -> BlockProfile:
    """Compute every clause for a batch of points up to ``horizon``."""
    points = np.asarray(points)
    if points.ndim == 1:
        points = points[None]
    if spectrum.dim != sys.dim:
        raise DomainError("spectrum dimension does not match the system")
    if invertible is None:
        invertible = sys.invertible
    if invertible and not sys.invertible:
        raise NotInvertible(f"system {sys.kind!r} has no inverse step")
    N = default_window(spectrum) if window is None else int(window)
    H = int(horizon)
    subsets = _subsets(spectrum.k, exhaustive, None) if invertible else []
    growth, clause, cos, arg = [], [], [], []
    for start in range(0, points.shape[0], chunk):
        pts = points[start: start + chunk]
        if invertible:
            g, c, co, a = _invertible_chunk(sys, pts, spectrum, eps, H, N, subsets)
            cos.append(co)
            arg.append(a)
        else:
            g, c = _noninvertible_chunk(sys, pts, spectrum, eps, H, N)
        growth.append(g)
        clause.append(c)
    has_angle = invertible and bool(subsets)
    return BlockProfile(
        points=points,
        eps=eps,
        horizon=H,
        invertible=invertible,
        growth=np.concatenate(growth),
        clause=np.concatenate(clause),
        cosines=np.concatenate(cos) if has_angle else None,
        cosine_subset=np.concatenate(arg) if has_angle else None,
        subsets=tuple(subsets),
    )


# ---------------------------------------------------------------- public tests


def _check_data(data: OseledetsData, p: RegularBlockParams):
    if tuple(data.spectrum.multiplicities) != tuple(p.spectrum.multiplicities):
        raise DomainError("OseledetsData and params disagree on multiplicities")


def membership_noninvertible(sys: CocycleSystem, x: np.ndarray, data: OseledetsData,
                             p: RegularBlockParams) -> BlockMembership:
    """Filtration inequalities for 0 <= m, n <= horizon."""
    _check_data(data, p)
    prof = block_profile(sys, x, p.spectrum, p.eps, p.horizon, p.window, invertible=False)
    return prof.memberships(p.ell)[0]


def membership_invertible(sys: CocycleSystem, x: np.ndarray, data: OseledetsData,
                          p: RegularBlockParams, exhaustive: bool | None = None) -> BlockMembership:
    """Two-sided splitting inequalities for |m|, |n| <= horizon plus the angle clause."""
    if not sys.invertible:
        raise NotInvertible(f"system {sys.kind!r} has no inverse step")
    if data.splitting is None:
        raise DomainError("membership_invertible needs a splitting")
    _check_data(data, p)
    prof = block_profile(sys, x, p.spectrum, p.eps, p.horizon, p.window, invertible=True,
                         exhaustive=exhaustive)
    return prof.memberships(p.ell)[0]


def norm_growth_check(sys: CocycleSystem, x: np.ndarray, p: RegularBlockParams) -> BoundReport:
    """|A^n(x_m)| <= ell L^|n| e^(eps |m|) over the tested (m, n)."""
    H = p.horizon
    x = np.asarray(x)
    L = float(p.L_bound)
    if sys.invertible:
        mats = sys.generator(orbit_segment(sys, x, -2 * H, 2 * H))
        ms = np.arange(-H, H + 1)
        starts = ms + 2 * H
        fmax, _ = _run_products(mats, starts, H, inverse=False)
        bmax, _ = _run_products(mats, starts, H, inverse=True)
        logs = np.concatenate([bmax[:, :0:-1], fmax], axis=1)
        ns = np.arange(-H, H + 1)
    else:
        mats = sys.generator(forward_orbit(sys, x, 2 * H))
        ms = np.arange(H + 1)
        logs, _ = _run_products(mats, ms, H, inverse=False)
        ns = np.arange(H + 1)
    bound_log = np.log(p.ell) + np.abs(ns)[None, :] * np.log(L) + p.eps * np.abs(ms)[:, None]
    gap = bound_log - logs
    a, b = np.unravel_index(np.argmin(gap), gap.shape)
    return BoundReport(
        bound_value=float(np.exp(bound_log[a, b])),
        measured=float(np.exp(logs[a, b])),
        context={"m": int(ms[a]), "n": int(ns[b]), "L": L, "ell": p.ell, "eps": p.eps,
                 "log_margin": float(gap[a, b])},
    )


@dataclass(frozen=True, eq=False)
class BlockResult:
    entries: list[tuple[np.ndarray, BlockMembership]]

    @property
    def fraction(self) -> float:
        if not self.entries:
            return 0.0
        return float(np.mean([m.passed for _, m in self.entries]))

    def passing_points(self) -> list[np.ndarray]:
        return [x for x, m in self.entries if m.passed]

    def __iter__(self) -> Iterator[tuple[np.ndarray, BlockMembership]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def summary(self) -> dict:
        return {"n_samples": len(self), "n_passing": int(sum(m.passed for _, m in self.entries)),
                "fraction": self.fraction}


def build_block(
    sys: CocycleSystem,
    samples: Sequence[np.ndarray] | np.ndarray,
    data_fn: Callable[[np.ndarray], OseledetsData] | None,
    p: RegularBlockParams,
    invertible: bool | None = None,
) -> BlockResult:
    """Membership verdicts for every sample, in input order.

    ``data_fn`` supplies Oseledets data per point; when it is None the
    frames are computed in batch from ``p.spectrum`` directly.
    """
    pts = np.asarray(samples)
    if pts.ndim == 1:
        pts = pts[None]
    if pts.shape[0] == 0:
        raise DomainError("samples must be nonempty")
    inv = sys.invertible if invertible is None else invertible
    if data_fn is not None:
        out = []
        for x in pts:
            data = data_fn(x)
            fn = membership_invertible if inv else membership_noninvertible
            out.append((x, fn(sys, x, data, p)))
        return BlockResult(out)
    prof = block_profile(sys, pts, p.spectrum, p.eps, p.horizon, p.window, invertible=inv)
    return BlockResult(list(zip(pts, prof.memberships(p.ell))))
