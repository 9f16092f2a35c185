"""Bundled example systems with known ground truth.

Kinds:

``constant``           fixed matrix over a chosen base (cat map, doubling, rotation)
``cat_map``            derivative cocycle of a hyperbolic toral automorphism
``doubling``           fixed matrix over x -> 2x mod 1 (non-invertible)
``shift_iid``          one-sided Bernoulli shift, matrix chosen by the first symbol
``shift_holder``       one-sided shift, D R(rho theta(x)) with theta Hölder in 2^-n
``perturbed_diagonal`` cat map base, D R(rho theta(x)) with a Weierstrass-type theta
``linear_flow``        time-tau map of a linear flow over a torus translation
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .cocycle import CocycleSystem
from .errors import DomainError, InvalidSpec

KINDS = (
    "constant",
    "cat_map",
    "doubling",
    "shift_iid",
    "shift_holder",
    "perturbed_diagonal",
    "linear_flow",
)

# a Hölder constant of exactly zero is not admissible; locally constant
# generators carry this "0+" value
ZERO_PLUS = 1e-12

DEFAULT_CAT = ((2.0, 1.0), (1.0, 1.0))


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class LinearFlow:
    """Flow x -> x + t*drift on a torus with cocycle P exp(t diag(rates)) P^-1."""

    rates: Sequence[float]
    drift: Sequence[float] = (1.0, np.sqrt(2.0))
    conjugator: np.ndarray | None = None


# ---------------------------------------------------------------- torus tools


def torus_metric(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Flat Euclidean distance on R^p / Z^p."""
    delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    delta -= np.round(delta)
    return np.sqrt(np.sum(delta * delta, axis=-1))


def _torus_sampler(p: int):
    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.random((count, p))

    return sample


def _torus_neighbor(p: int):
    def neighbor(rng: np.random.Generator, x: np.ndarray, dist: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dist = np.asarray(dist, dtype=float)
        direction = rng.standard_normal(x.shape)
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        return np.mod(x + dist[..., None] * direction, 1.0)

    return neighbor


def _linear_torus_map(M: np.ndarray):
    M = np.asarray(M, dtype=float)

    def step(x: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(x, dtype=float) @ M.T, 1.0)

    return step


def _check_unimodular(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidSpec("base matrix must be square")
    if not np.allclose(M, np.round(M)) or abs(abs(np.linalg.det(M)) - 1) > 1e-9:
        raise InvalidSpec("base matrix must be an integer matrix with det +-1")
    return np.round(M)


def weierstrass_field(p: int, nu: float, base: int = 2, terms: int = 20):
    """theta(x) = sum_k base^(-nu k) (cos 2pi base^k x_0 + sin 2pi base^k x_1 + ...).

    Returns (theta, H) with |theta(x) - theta(y)| <= H * torus_metric(x, y)^nu.
    """
    k = np.arange(terms)
    amp = float(base) ** (-nu * k)
    freq = 2 * np.pi * float(base) ** k

    def theta(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape[:-1])
        for c in range(p):
            phase = x[..., c, None] * freq
            wave = np.cos(phase) if c % 2 == 0 else np.sin(phase)
            total += wave @ amp
        return total

    if nu < 1:
        per_coord = 2 * np.pi / (1 - base ** (nu - 1)) + 2 / (1 - base ** (-nu))
    else:
        per_coord = 2 * np.pi * terms + 2 / (1 - 1.0 / base)
    return theta, p * per_coord


# ---------------------------------------------------------------- shift tools


def _shift_sampler(probs: np.ndarray, window: int):
    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.zeros((count, window + 1), dtype=np.int64)
        out[:, 1:] = rng.choice(len(probs), size=(count, window), p=probs)
        return out

    return sample


def _shift_step(x: np.ndarray) -> np.ndarray:
    y = np.array(x, dtype=np.int64, copy=True)
    y[..., 0] += 1
    return y


def _symbols_ahead(x: np.ndarray, count: int, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Symbols at offsets 0..count-1 from the cursor, with a validity mask."""
    x = np.asarray(x)
    window = x.shape[-1] - 1
    idx = x[..., :1] + np.arange(count)
    valid = idx < window
    if strict and not np.all(valid[..., 0]):
        raise DomainError("symbol window exhausted; increase the shift window")
    sym = np.take_along_axis(x[..., 1:], np.minimum(idx, window - 1), axis=-1)
    return np.where(valid, sym, 0), valid


def shift_metric(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """2^(-k) where k is the first offset from the cursor at which x and y differ."""
    x = np.asarray(x)
    y = np.asarray(y)
    x, y = np.broadcast_arrays(x, y)
    span = x.shape[-1] - 1
    sx, vx = _symbols_ahead(x, span, strict=False)
    sy, vy = _symbols_ahead(y, span, strict=False)
    differ = (sx != sy) & vx & vy
    first = np.argmax(differ, axis=-1)
    any_diff = differ.any(axis=-1)
    return np.where(any_diff, 2.0 ** (-first.astype(float)), 0.0)


def _shift_neighbor(n_symbols: int, probs: np.ndarray):
    def neighbor(rng: np.random.Generator, x: np.ndarray, dist: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=np.int64, copy=True)
        dist = np.broadcast_to(np.asarray(dist, dtype=float), x.shape[:-1])
        flat = x.reshape(-1, x.shape[-1])
        window = x.shape[-1] - 1
        for row, dd in zip(flat, dist.ravel()):
            k = int(max(0, round(-np.log2(dd))))
            pos = row[0] + k
            if pos >= window:
                raise DomainError("requested distance finer than the symbol window")
            old = row[1 + pos]
            row[1 + pos] = (old + rng.integers(1, n_symbols)) % n_symbols
            tail = window - pos - 1
            if tail > 0:
                row[2 + pos:] = rng.choice(n_symbols, size=tail, p=probs)
        return flat.reshape(x.shape)

    return neighbor


# ---------------------------------------------------------------- generators


def rotation(angle: np.ndarray | float, dim: int = 2) -> np.ndarray:
    """Rotation by ``angle`` in the (0, 1) coordinate plane of R^dim."""
    angle = np.asarray(angle, dtype=float)
    out = np.zeros(angle.shape + (dim, dim))
    idx = np.arange(dim)
    out[..., idx, idx] = 1.0
    c, s = np.cos(angle), np.sin(angle)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _constant_generator(M: np.ndarray):
    M = np.asarray(M, dtype=float)

    def generator(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return np.broadcast_to(M, x.shape[:-1] + M.shape)

    return generator


def _matrix(value: Any, name: str) -> np.ndarray:
    a = np.asarray(value, dtype=float)
    if a.ndim == 1:
        n = int(round(np.sqrt(a.size)))
        if n * n != a.size:
            raise InvalidSpec(f"{name}: {a.size} entries do not form a square matrix")
        a = a.reshape(n, n)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidSpec(f"{name}: expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidSpec(f"{name}: non-finite entries")
    if abs(np.linalg.det(a)) <= 1e-14:
        raise InvalidSpec(f"{name}: matrix is not invertible")
    return a


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def _base(params: Mapping[str, Any]):
    """(step, inverse_step, metric, p, lipschitz, sampler, neighbor) for a named base."""
    name = params.get("base", "cat_map")
    if name == "cat_map":
        M = _check_unimodular(_matrix(params.get("base_matrix", DEFAULT_CAT), "base_matrix"))
        p = M.shape[0]
        return (
            _linear_torus_map(M),
            _linear_torus_map(np.round(np.linalg.inv(M))),
            torus_metric,
            p,
            _opnorm(M),
            _torus_sampler(p),
            _torus_neighbor(p),
        )
    if name == "doubling":
        return (
            lambda x: np.mod(2.0 * np.asarray(x, dtype=float), 1.0),
            None,
            torus_metric,
            1,
            2.0,
            _torus_sampler(1),
            _torus_neighbor(1),
        )
    if name == "rotation":
        alpha = float(params.get("alpha", (np.sqrt(5.0) - 1) / 2))
        return (
            lambda x: np.mod(np.asarray(x, dtype=float) + alpha, 1.0),
            lambda x: np.mod(np.asarray(x, dtype=float) - alpha, 1.0),
            torus_metric,
            1,
            1.0,
            _torus_sampler(1),
            _torus_neighbor(1),
        )
    raise InvalidSpec(f"unknown base {name!r}")


def _build(kind, dim, base, generator, L_extra, c0, nu, metadata) -> CocycleSystem:
    step, inv, metric, p, lip, sampler, neighbor = base
    return CocycleSystem(
        dim=dim,
        step=step,
        metric=metric,
        generator=generator,
        lipschitz_L=max(1.0, lip, L_extra),
        holder_c0=c0,
        holder_nu=nu,
        inverse_step=inv,
        kind=kind,
        sampler=sampler,
        neighbor=neighbor,
        metadata={"base_lipschitz": lip, "point_dim": p, **metadata},
    )


def make_system(spec: SystemSpec) -> CocycleSystem:
    """Construct a :class:`CocycleSystem` with consistent (c0, nu, L) metadata."""
    kind = spec.kind
    params = dict(spec.params)
    try:
        if kind == "constant":
            M = _matrix(params.get("matrix", [[2.0, 0.0], [0.0, 0.5]]), "matrix")
            return _build(kind, M.shape[0], _base(params), _constant_generator(M), _opnorm(M),
                          ZERO_PLUS, 1.0, {"matrix": M.tolist()})
        if kind == "cat_map":
            M = _check_unimodular(_matrix(params.get("matrix", DEFAULT_CAT), "matrix"))
            base = _base({"base": "cat_map", "base_matrix": M})
            return _build(kind, M.shape[0], base, _constant_generator(M), _opnorm(M),
                          ZERO_PLUS, 1.0, {"matrix": M.tolist()})
        if kind == "doubling":
            M = _matrix(params.get("matrix", [[2.0, 0.0], [0.0, 0.5]]), "matrix")
            return _build(kind, M.shape[0], _base({"base": "doubling"}), _constant_generator(M),
                          _opnorm(M), ZERO_PLUS, 1.0, {"matrix": M.tolist()})
        if kind == "shift_iid":
            return _shift_iid(params)
        if kind == "shift_holder":
            return _shift_holder(params)
        if kind == "perturbed_diagonal":
            return _perturbed_diagonal(params)
        if kind == "linear_flow":
            tau = float(params.get("tau", 1.0))
            flow = LinearFlow(
                rates=tuple(float(r) for r in params.get("rates", (-1.0, 1.0))),
                drift=tuple(float(v) for v in params.get("drift", (1.0, np.sqrt(2.0)))),
                conjugator=None if params.get("conjugator") is None
                else _matrix(params["conjugator"], "conjugator"),
            )
            return flow_time_map(flow, tau)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpec):
            raise
        raise InvalidSpec(f"{kind}: {exc}") from exc
    raise InvalidSpec(f"unknown system kind {kind!r}; expected one of {', '.join(KINDS)}")


def _probabilities(params, n_symbols):
    probs = np.asarray(params.get("probabilities", np.full(n_symbols, 1.0 / n_symbols)), dtype=float)
    if probs.shape != (n_symbols,) or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-9:
        raise InvalidSpec("probabilities must be a distribution over the symbols")
    return probs / probs.sum()


def _shift_iid(params) -> CocycleSystem:
    raw = params.get("matrices")
    if raw is None:
        raise InvalidSpec("shift_iid needs 'matrices'")
    mats = np.stack([_matrix(m, f"matrices[{i}]") for i, m in enumerate(raw)])
    if len({m.shape for m in mats}) != 1:
        raise InvalidSpec("matrices must share a shape")
    n_symbols = mats.shape[0]
    if n_symbols < 2:
        raise InvalidSpec("shift_iid needs at least two matrices")
    probs = _probabilities(params, n_symbols)
    window = int(params.get("window", 4096))
    diffs = [_opnorm(mats[i] - mats[j]) for i in range(n_symbols) for j in range(n_symbols)]
    c0 = max(max(diffs), ZERO_PLUS)

    def generator(x: np.ndarray) -> np.ndarray:
        sym, _ = _symbols_ahead(x, 1)
        return mats[sym[..., 0]]

    return CocycleSystem(
        dim=mats.shape[1],
        step=_shift_step,
        metric=shift_metric,
        generator=generator,
        lipschitz_L=max(2.0, max(_opnorm(m) for m in mats)),
        holder_c0=c0,
        holder_nu=1.0,
        kind="shift_iid",
        sampler=_shift_sampler(probs, window),
        neighbor=_shift_neighbor(n_symbols, probs),
        metadata={"base_lipschitz": 2.0, "window": window, "n_symbols": n_symbols},
    )


def _diag(params, default):
    D = np.asarray(params.get("diag", default), dtype=float)
    if D.ndim != 1 or D.size < 2 or np.any(D == 0):
        raise InvalidSpec("diag must list at least two nonzero entries")
    return D


def _rho_nu(params):
    rho = float(params.get("rho", 0.01))
    nu = float(params.get("nu", 0.5))
    if rho < 0:
        raise InvalidSpec("rho must be >= 0")
    if not 0 < nu <= 1:
        raise InvalidSpec("nu must lie in (0, 1]")
    return rho, nu


def _shift_holder(params) -> CocycleSystem:
    D = _diag(params, (2.0, 0.5))
    rho, nu = _rho_nu(params)
    window = int(params.get("window", 4096))
    terms = int(params.get("terms", 60))
    weights = 2.0 ** (-nu * np.arange(terms))
    dim = D.size
    Dm = np.diag(D)

    def generator(x: np.ndarray) -> np.ndarray:
        sym, valid = _symbols_ahead(x, terms)
        theta = (sym * valid) @ weights
        return Dm @ rotation(rho * theta, dim)

    probs = np.array([0.5, 0.5])
    c0 = max(float(np.abs(D).max()) * rho / (1 - 2.0 ** (-nu)), ZERO_PLUS)
    return CocycleSystem(
        dim=dim,
        step=_shift_step,
        metric=shift_metric,
        generator=generator,
        lipschitz_L=max(2.0, float(np.abs(D).max())),
        holder_c0=c0,
        holder_nu=nu,
        kind="shift_holder",
        sampler=_shift_sampler(probs, window),
        neighbor=_shift_neighbor(2, probs),
        metadata={"base_lipschitz": 2.0, "window": window, "rho": rho},
    )


def _perturbed_diagonal(params) -> CocycleSystem:
    D = _diag(params, (4.0, 0.25))
    rho, nu = _rho_nu(params)
    base = _base({"base": "cat_map", "base_matrix": params.get("base_matrix", DEFAULT_CAT)})
    p = base[3]
    theta, h_theta = weierstrass_field(p, nu, terms=int(params.get("terms", 20)))
    dim = D.size
    Dm = np.diag(D)

    def generator(x: np.ndarray) -> np.ndarray:
        return Dm @ rotation(rho * theta(x), dim)

    dnorm = float(np.abs(D).max())
    c0 = max(dnorm * rho * h_theta, ZERO_PLUS)
    return _build("perturbed_diagonal", dim, base, generator, dnorm, c0, nu,
                  {"rho": rho, "theta_holder_constant": h_theta})


def flow_time_map(flow: LinearFlow, tau: float) -> CocycleSystem:
    """Time-tau map of a linear flow; its exponents are tau times the flow rates."""
    if not tau > 0:
        raise InvalidSpec("tau must be > 0")
    rates = np.asarray(flow.rates, dtype=float)
    if rates.ndim != 1 or rates.size < 1:
        raise InvalidSpec("rates must be a nonempty list")
    drift = np.asarray(flow.drift, dtype=float)
    p = drift.size
    P = np.eye(rates.size) if flow.conjugator is None else np.asarray(flow.conjugator, dtype=float)
    if P.shape != (rates.size, rates.size):
        raise InvalidSpec("conjugator shape does not match rates")
    A = P @ np.diag(np.exp(tau * rates)) @ np.linalg.inv(P)
    shift = tau * drift

    def step(x):
        return np.mod(np.asarray(x, dtype=float) + shift, 1.0)

    def inverse_step(x):
        return np.mod(np.asarray(x, dtype=float) - shift, 1.0)

    base = (step, inverse_step, torus_metric, p, 1.0, _torus_sampler(p), _torus_neighbor(p))
    return _build("linear_flow", rates.size, base, _constant_generator(A), _opnorm(A),
                  ZERO_PLUS, 1.0, {"time_step": tau, "flow_rates": rates.tolist(),
                                   "time_rescaling": f"s = {tau:g} * t"})
