"""Randomized instances of the three distance estimates and sweep runners.

Every instance is a pair of matrix sequences A^n and B^n = R A^n R^T, where R
is a small rotation.  A is built from orthonormal frames of its invariant
subspaces with prescribed eigenvalue bands, so the growth constants are known
by construction.  Some instances are deliberately generated outside the
hypotheses (perturbation too large, constants too small); the verifiers must
reject those, and a sweep counts them separately from passes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bounds import (
    MatrixSequence,
    MetricRates,
    PairRates,
    TripleRates,
    metric_distance,
    metric_lemma_bound,
    pair_lemma_bound,
    triple_delta0,
    verify_metric_lemma,
    verify_pair_lemma,
    verify_triple_lemma,
    window_index,
)
from .errors import DomainError, HypothesisFailure
from .grassmann import Subspace, direct_sum, oblique_projection_norm, orthonormalize
from .reports import PASS_RTOL

LEMMAS = ("pair", "triple", "metric")
# instances whose growth spread exceeds this are not resolvable in double precision
MAX_SPREAD = 1e10
SWEEP_COLUMNS = ("instance_id", "lemma", "subspace", "delta", "n", "measured", "bound", "status", "clause")


@dataclass(frozen=True)
class SweepRow:
    instance_id: int
    lemma: str
    subspace: str
    delta: float
    n: int
    measured: float
    bound: float
    status: str  # pass | violation | rejected
    clause: str = ""

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in SWEEP_COLUMNS)


@dataclass
class SweepResult:
    lemma: str
    rows: list[SweepRow] = field(default_factory=list)
    attempts: int = 0

    def _count(self, status: str) -> int:
        return len({r.instance_id for r in self.rows if r.status == status})

    @property
    def accepted(self) -> int:
        return len({r.instance_id for r in self.rows if r.status != "rejected"})

    @property
    def violations(self) -> int:
        return self._count("violation")

    @property
    def rejected(self) -> int:
        return self._count("rejected")

    def rejected_by_clause(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            if r.status == "rejected":
                out[r.clause] = out.get(r.clause, 0) + 1
        return dict(sorted(out.items()))

    def summary(self) -> dict:
        worst = min((r.bound - r.measured) / max(abs(r.bound), 1e-300)
                    for r in self.rows if r.status != "rejected") if self.accepted else None
        return {
            "lemma": self.lemma,
            "attempts": self.attempts,
            "accepted": self.accepted,
            "violations": self.violations,
            "rejected": self.rejected,
            "rejected_by_clause": self.rejected_by_clause(),
            "worst_relative_margin": worst,
        }


# ---------------------------------------------------------------- building blocks


def random_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return q * np.sign(np.diag(r))


def small_rotation(rng: np.random.Generator, n: int, theta: float) -> np.ndarray:
    """exp(theta K) for a random skew K with |K| = 1, so |R - I| <= theta."""
    g = rng.standard_normal((n, n))
    K = g - g.T
    K /= np.linalg.norm(K, 2)
    return scipy.linalg.expm(theta * K)


def _band(rng, lo, hi, count):
    vals = np.exp(rng.uniform(math.log(lo), math.log(hi), count))
    vals[0] = lo
    if count > 1:
        vals[-1] = hi
    return vals


def _assemble(frames, values):
    S = np.hstack(frames)
    vals = np.concatenate(values)
    Sinv = np.linalg.inv(S)

    def seq(m: int) -> np.ndarray:
        return (S * vals ** int(m)) @ Sinv

    return seq(1), seq


def _conjugated(seq, R):
    return lambda m: R @ seq(m) @ R.T


def _dims(rng, total, parts):
    cuts = np.sort(rng.choice(np.arange(1, total), parts - 1, replace=False))
    return np.diff(np.concatenate([[0], cuts, [total]])).astype(int)


def _split_const(S: Subspace, T: Subspace) -> float:
    W = direct_sum([S, T]).frame
    Sc, Tc = orthonormalize(W.T @ S.frame), orthonormalize(W.T @ T.frame)
    return max(oblique_projection_norm(Sc, Tc), oblique_projection_norm(Tc, Sc))


def _theta_budget(seq, delta, a, times):
    # largest rotation keeping |A_m - R A_m R^T| <= delta a^|m| at every listed time
    return min(delta * a ** abs(m) / (2 * np.linalg.norm(seq(m), 2)) for m in times)


def _perturbation_scale(rng) -> float:
    # fraction of the closeness budget; one instance in ten is pushed far past it
    if rng.random() < 0.1:
        return float(rng.uniform(3.0, 30.0))
    return float(rng.uniform(0.05, 1.0))


# ---------------------------------------------------------------- instances


@dataclass
class PairInstance:
    A_seq: MatrixSequence
    B_seq: MatrixSequence
    E: Subspace
    E_prime: Subspace
    F: Subspace
    F_prime: Subspace
    rates: PairRates
    n: int


def pair_instance(rng: np.random.Generator) -> PairInstance:
    while True:
        N = int(rng.integers(2, 5))
        p = int(rng.integers(1, N))
        SE, SEp = random_frame(rng, N, p), random_frame(rng, N, N - p)
        E, Ep = Subspace(SE), Subspace(SEp)
        try:
            d_true = _split_const(E, Ep)
        except ValueError:
            continue
        if d_true > 20:
            continue
        lam = math.exp(rng.uniform(-1.0, 1.0))
        mu = lam * math.exp(rng.uniform(0.3, 2.0))
        A, seq = _assemble([SE, SEp], [_band(rng, lam * math.exp(-rng.uniform(0, 0.5)), lam, p),
                                  _band(rng, mu, mu * math.exp(rng.uniform(0, 0.5)), N - p)])
        a = mu * math.exp(rng.uniform(0.1, 1.5))
        delta = math.exp(-rng.uniform(1.0, 12.0))
        n = window_index(delta, lam / a)
        if not 1 <= n <= 40:
            continue
        C = math.exp(rng.uniform(0.0, 0.5))
        d = d_true * math.exp(rng.uniform(0.0, 0.3))
        theta = _perturbation_scale(rng) * _theta_budget(seq, delta, a, [n])
        R = small_rotation(rng, N, theta)
        return PairInstance(seq, _conjugated(seq, R), E, Ep, Subspace(orthonormalize(R @ SE).frame),
                            Subspace(orthonormalize(R @ SEp).frame),
                            PairRates(lam, mu, C, d, a, delta), n)


@dataclass
class TripleInstance:
    A_seq: MatrixSequence
    B_seq: MatrixSequence
    split_A: tuple[Subspace, Subspace, Subspace]
    split_B: tuple[Subspace, Subspace, Subspace]
    rates: TripleRates
    n: int


def triple_instance(rng: np.random.Generator) -> TripleInstance:
    while True:
        N = int(rng.integers(3, 6))
        dims = _dims(rng, N, 3)
        frames = [random_frame(rng, N, k) for k in dims]
        spaces = [Subspace(f) for f in frames]
        try:
            d_true = max(_split_const(spaces[0], direct_sum(spaces[1:])),
                         _split_const(spaces[1], spaces[2]),
                         _split_const(direct_sum(spaces[:2]), spaces[2]),
                         _split_const(spaces[0], spaces[1]))
        except ValueError:
            continue
        if d_true > 6:
            continue
        for _ in range(50):
            logs = np.cumsum(rng.uniform(0.2, 1.5, 6)) + rng.uniform(-4.0, -1.0)
            r = np.exp(logs)
            A, seq = _assemble(frames, [_band(rng, r[0], r[1], dims[0]),
                                        _band(rng, r[2], r[3], dims[1]),
                                        _band(rng, r[4], r[5], dims[2])])
            floor = r[1] + 1 / r[1] + r[4]
            a = max(floor, np.linalg.norm(A, 2), np.linalg.norm(seq(-1), 2)) * math.exp(rng.uniform(0.01, 0.7))
            d = d_true * math.exp(rng.uniform(0.01, 0.3))
            # the combined subspaces grow within 2d of their slowest member
            C = 2 * d * math.exp(rng.uniform(0.01, 0.3))
            d0 = triple_delta0(TripleRates(*r, C=C, d=d, a=a, delta=0.0))
            delta = d0 * math.exp(-rng.uniform(0.05, 3.0))
            if not delta > 1e-14:
                continue
            n_E = window_index(delta, r[1] / a)
            n_V = window_index(delta, 1 / (a * r[2]))
            n_G = window_index(delta, 1 / (a * r[4]))
            if (r[5] / r[0]) ** max(n_E, n_V, n_G) <= MAX_SPREAD:
                break
        else:
            continue
        rates = TripleRates(*r, C=C, d=d, a=a, delta=delta)
        n = 1
        times = [t for m in (n, n_E, n_V, n_G) for t in (m, -m)]
        theta = _perturbation_scale(rng) * _theta_budget(seq, delta, a, times)
        R = small_rotation(rng, N, theta)
        split_B = tuple(Subspace(orthonormalize(R @ f).frame) for f in frames)
        return TripleInstance(seq, _conjugated(seq, R), tuple(spaces), split_B, rates, n)


@dataclass
class MetricInstance:
    hE: np.ndarray
    hF: np.ndarray
    h0: np.ndarray
    E: Subspace
    F: Subspace
    rates: MetricRates
    n: int


def metric_instance(rng: np.random.Generator) -> MetricInstance:
    N = int(rng.integers(2, 5))
    p = int(rng.integers(1, N))
    Q = random_frame(rng, N, N)
    lam = math.exp(rng.uniform(-1.0, 0.5))
    mu = lam * math.exp(rng.uniform(0.3, 2.0))
    vals = np.concatenate([_band(rng, lam * math.exp(-rng.uniform(0, 0.5)), lam, p),
                           _band(rng, mu, mu * math.exp(rng.uniform(0, 0.5)), N - p)])
    spread = vals.max() / vals.min()
    n_cap = max(1, min(8, int(math.log(math.sqrt(MAX_SPREAD)) / math.log(spread))))
    n = int(rng.integers(1, n_cap + 1))
    theta = math.exp(rng.uniform(math.log(1e-6), math.log(1e-1)))
    R = small_rotation(rng, N, theta)
    hE = (Q * vals ** (2 * n)) @ Q.T
    hF = R @ hE @ R.T
    Abase = math.exp(rng.uniform(math.log(1.5), math.log(10.0)))
    delta = Abase ** (-n) * rng.uniform(1.0, Abase)
    scale = delta * Abase**n
    need = math.expm1(metric_distance(hE, hF)) / scale
    # about one instance in ten understates C2 and must be rejected
    C2 = need * (math.exp(rng.uniform(0.0, 0.5)) if rng.random() > 0.1 else rng.uniform(0.2, 0.9))
    C = math.exp(rng.uniform(0.0, 0.3))
    E = Subspace(Q[:, :p])
    F = Subspace(orthonormalize(R @ Q[:, :p]).frame)
    return MetricInstance(hE, hF, np.eye(N), E, F, MetricRates(lam, mu, C, C2, Abase, delta), n)


# ---------------------------------------------------------------- evaluation


def _status(measured: float, bound: float) -> str:
    return "pass" if measured <= bound + PASS_RTOL * abs(bound) else "violation"


def evaluate_instance(lemma: str, rng: np.random.Generator, instance_id: int) -> list[SweepRow]:
    """Generate one instance and verify it; hypothesis failures become rejected rows."""
    if lemma == "pair":
        inst = pair_instance(rng)
        p = inst.rates
        try:
            rep = verify_pair_lemma(inst.A_seq, inst.B_seq, inst.E,
                                    inst.E_prime, inst.F, inst.F_prime, p, inst.n)
        except HypothesisFailure as exc:
            return [SweepRow(instance_id, lemma, "E", p.delta, inst.n, math.nan,
                             pair_lemma_bound(p), "rejected", exc.clause)]
        return [SweepRow(instance_id, lemma, "E", p.delta, inst.n, rep.measured, rep.bound_value,
                         _status(rep.measured, rep.bound_value))]
    if lemma == "triple":
        inst = triple_instance(rng)
        p = inst.rates
        try:
            rep = verify_triple_lemma(inst.A_seq, inst.B_seq,
                                      inst.split_A, inst.split_B, p, inst.n)
        except HypothesisFailure as exc:
            return [SweepRow(instance_id, lemma, "EFG", p.delta, inst.n, math.nan, math.nan,
                             "rejected", exc.clause)]
        return [SweepRow(instance_id, lemma, name, p.delta, inst.n, r.measured, r.bound_value,
                         _status(r.measured, r.bound_value))
                for name, r in zip("EFG", (rep.E, rep.F, rep.G))]
    if lemma == "metric":
        inst = metric_instance(rng)
        p = inst.rates
        try:
            rep = verify_metric_lemma(inst.hE, inst.hF, inst.h0, inst.E, inst.F, p, inst.n)
        except HypothesisFailure as exc:
            return [SweepRow(instance_id, lemma, "E", p.delta, inst.n, math.nan,
                             metric_lemma_bound(p), "rejected", exc.clause)]
        return [SweepRow(instance_id, lemma, "E", p.delta, inst.n, rep.measured, rep.bound_value,
                         _status(rep.measured, rep.bound_value))]
    raise DomainError(f"unknown lemma {lemma!r}; expected one of {', '.join(LEMMAS)}")


def run_lemma_sweep(lemma: str, count: int, seed: int = 0, threads: int = 1,
                    block: int = 64, max_attempts: int | None = None) -> SweepResult:
    """Evaluate instances until ``count`` satisfy the hypotheses.

    Attempt j draws from its own child seed, and attempts are evaluated in
    fixed blocks whose results are ordered by attempt index, so the output
    does not depend on the thread count.
    """
    if lemma not in LEMMAS:
        raise DomainError(f"unknown lemma {lemma!r}; expected one of {', '.join(LEMMAS)}")
    if count < 1:
        raise DomainError("count must be >= 1")
    max_attempts = 20 * count if max_attempts is None else max_attempts
    result = SweepResult(lemma)
    accepted = 0

    def job(j: int) -> list[SweepRow]:
        return evaluate_instance(lemma, np.random.default_rng([seed, j]), j)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        start = 0
        while accepted < count and start < max_attempts:
            ids = range(start, min(start + block, max_attempts))
            for rows in pool.map(job, ids):
                if accepted >= count:
                    break
                result.rows.extend(rows)
                result.attempts += 1
                if rows[0].status != "rejected":
                    accepted += 1
            start += block
    return result
