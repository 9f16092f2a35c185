"""Distance bounds for subspaces separated by exponential growth rates.

Three estimates are implemented as closed-form bounds plus verifiers that
check every hypothesis on concrete data before comparing the conclusion:

* the pair estimate: two sequences A_n, B_n that are close, each with a slow
  subspace (rate lambda) and a fast complement (rate mu), have slow
  subspaces at distance (2+d) C^2 (mu/lambda) delta^{log(mu/lambda)/log(a/lambda)};
* the three-bundle estimate for bi-infinite invertible sequences with
  splittings E + F + G;
* the metric-sequence estimate, where growth is measured through a
  sequence of inner products.

Verifiers never report a pass when a hypothesis fails: they raise
:class:`HypothesisFailure` naming the clause instead.  Besides the stated
hypotheses they check the conditions the arguments actually use:

* the time index n sits in the window (lambda/a)^{n+1} < delta <= (lambda/a)^n,
  which makes the slow subspace of one sequence lie in the 2C lambda^n cone
  of the other;
* the three-bundle verifier applies the pair estimate four times, to
  E vs F+G forward, F+G vs E backward, G vs E+F backward, and F vs G after
  conjugating B by the graph map of F+G.  For each application the growth
  bounds on the combined subspaces and the closeness of the sequences are
  checked at that application's own window index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import DeltaTooLarge, DomainError, HypothesisFailure, NotPositiveDefinite
from .grassmann import (
    Subspace,
    direct_sum,
    graph_map,
    oblique_projection_norm,
    orthonormalize,
    subspace_distance,
)
from .oseledets import Spectrum
from .reports import BoundReport

CHECK_RTOL = 1e-9
PD_TOL = 1e-12

MatrixSequence = Callable[[int], np.ndarray]


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class PairRates:
    lam: float
    mu: float
    C: float
    d: float
    a: float
    delta: float

    def __post_init__(self):
        if not 0 < self.lam < self.mu:
            raise DomainError("need 0 < lambda < mu")
        if not self.C >= 1:
            raise DomainError("need C >= 1")
        if not self.d > 0:
            raise DomainError("need d > 0")
        if not 0 < self.delta <= 1:
            raise DomainError("need delta in (0, 1]")
        if not self.a >= self.lam:
            raise DomainError("need a >= lambda")


@dataclass(frozen=True)
class TripleRates:
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    C: float = 1.0
    d: float = 1.0
    a: float | None = None
    delta: float = 0.0

    def __post_init__(self):
        r = (self.lambda1, self.lambda2, self.mu1, self.mu2, self.sigma1, self.sigma2)
        if not (0 < r[0] and all(x < y for x, y in zip(r, r[1:]))):
            raise DomainError("need 0 < lambda1 < lambda2 < mu1 < mu2 < sigma1 < sigma2")
        floor = self.lambda2 + 1 / self.lambda2 + self.sigma1
        if self.a is None:
            object.__setattr__(self, "a", 2 * floor)
        elif not self.a > floor:
            raise DomainError(f"need a > lambda2 + 1/lambda2 + sigma1 = {floor:g}")
        if not self.C >= 1:
            raise DomainError("need C >= 1")
        if not self.d > 0:
            raise DomainError("need d > 0")
        if not 0 <= self.delta < 1:
            raise DomainError("need delta in [0, 1)")


@dataclass(frozen=True)
class MetricRates:
    lam: float
    mu: float
    C: float
    C2: float
    A: float
    delta: float

    def __post_init__(self):
        if not 0 < self.lam < self.mu:
            raise DomainError("need 0 < lambda < mu")
        if not self.A > 1:
            raise DomainError("need A > 1")
        if not 0 < self.delta <= 1:
            raise DomainError("need delta in (0, 1]")
        if not self.C > 0 or not self.C2 >= 0:
            raise DomainError("need C > 0 and C2 >= 0")


# ---------------------------------------------------------------- formulas


def pair_exponent(lam: float, mu: float, a: float) -> float:
    if not a > lam:
        raise DomainError("need a > lambda for a decaying window")
    return math.log(mu / lam) / math.log(a / lam)


def pair_lemma_bound(p: PairRates) -> float:
    """(2+d) C^2 (mu/lambda) delta^{log(mu/lambda)/log(a/lambda)}."""
    e = pair_exponent(p.lam, p.mu, p.a)
    return (2 + p.d) * p.C**2 * (p.mu / p.lam) * p.delta**e


def triple_lemma_exponents(p: TripleRates) -> tuple[float, float, float, float]:
    """(alpha, eta, gamma, beta) for the E, (F, auxiliary), G and F estimates."""
    a = p.a
    g1 = math.log(p.mu1 / p.lambda2)
    g2 = math.log(p.sigma1 / p.mu2)
    alpha = g1 / math.log(a / p.lambda2)
    eta = g2 / math.log(a / p.mu2)
    gamma = g2 / math.log(a * p.sigma1)
    beta = g1 * g2 / (math.log(a * p.mu1) * math.log(a / p.mu2))
    return alpha, eta, gamma, beta


def _v_exponent(p: TripleRates) -> float:
    # decay exponent of dist(F+G for A, F+G for B)
    return math.log(p.mu1 / p.lambda2) / math.log(p.a * p.mu1)


def triple_delta0(p: TripleRates) -> float:
    """Largest delta for which the a-priori bound on dist(F+G, F'+G') forces |L| < 1/2.

    With D = (2+d) C^2 (mu1/lambda2) delta^omega bounding that distance, the
    graph map satisfies |L| <= D / sqrt(1 - D^2), which is below 1/2 exactly
    when D < 1/sqrt(5).  The second running requirement, |L| omega(L) < 1/2,
    depends on the measured |L| and is checked per instance by
    :func:`verify_triple_lemma`.
    """
    coef = (2 + p.d) * p.C**2 * p.mu1 / p.lambda2
    d0 = (1 / (math.sqrt(5) * coef)) ** (1 / _v_exponent(p))
    return float(min(d0, 1.0))


def triple_lemma_bounds(p: TripleRates) -> tuple[float, float, float]:
    """(boundE, boundF, boundG) at p.delta; raises DeltaTooLarge above delta0."""
    d0 = triple_delta0(p)
    if not p.delta < d0:
        raise DeltaTooLarge(p.delta, d0)
    alpha, eta, gamma, beta = triple_lemma_exponents(p)
    C, d, delta = p.C, p.d, p.delta
    bE = (2 + d) * C**2 * (p.mu1 / p.lambda2) * delta**alpha
    bF = (
        4.5
        * (2 + 3 * d) ** (1 + eta)
        * C ** (2 * (1 + eta))
        * p.sigma1
        * p.mu1**eta
        / (p.mu2 * p.lambda2**eta)
        * delta**beta
    )
    bG = (2 + d) * C**2 * (p.sigma1 / p.mu2) * delta**gamma
    return bE, bF, bG


def tau_conjugation(d: float, L_norm: float) -> float:
    """d (1+|L|)/(1-|L|): splitting constant after conjugating by I + L."""
    if not 0 <= L_norm < 1:
        raise DomainError("need 0 <= |L| < 1")
    return d * (1 + L_norm) / (1 - L_norm)


def omega_L(L_norm: float, delta: float) -> float:
    """1/(1-|L|) + 1/(1-|L|)^2 + delta (1+|L|)/(1-|L|)."""
    if not 0 <= L_norm < 1:
        raise DomainError("need 0 <= |L| < 1")
    q = 1 - L_norm
    return 1 / q + 1 / q**2 + delta * (1 + L_norm) / q


def metric_lemma_bound(p: MetricRates) -> float:
    """C^2 (2 + C2 A) delta^{log(mu/lambda)/log A}."""
    return p.C**2 * (2 + p.C2 * p.A) * p.delta ** (math.log(p.mu / p.lam) / math.log(p.A))


def window_index(delta: float, ratio: float) -> int:
    """The n with ratio^{n+1} < delta <= ratio^n, for ratio in (0, 1)."""
    if not 0 < ratio < 1:
        raise DomainError("window ratio must lie in (0, 1)")
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    n = int(math.floor(math.log(delta) / math.log(ratio)))
    while n > 0 and ratio**n < delta:
        n -= 1
    while ratio ** (n + 1) >= delta:
        n += 1
    return n


# ---------------------------------------------------------------- helpers


def _le(x: float, y: float) -> bool:
    return x <= y + CHECK_RTOL * max(abs(y), 1e-300)


def _svals(M: np.ndarray, S: Subspace) -> tuple[float, float]:
    """(sup, inf) of |M u| / |u| over u in S."""
    s = np.linalg.svd(np.asarray(M) @ S.frame, compute_uv=False)
    return float(s[0]), float(s[-1])


def _require(ok: bool, clause: str, detail: str) -> None:
    if not ok:
        raise HypothesisFailure(clause, detail)


def _upper(M, S, bound, clause):
    hi, _ = _svals(M, S)
    _require(_le(hi, bound), clause, f"sup growth {hi:.6g} > {bound:.6g}")
    return hi


def _lower(M, S, bound, clause):
    _, lo = _svals(M, S)
    _require(_le(bound, lo), clause, f"inf growth {lo:.6g} < {bound:.6g}")
    return lo


def _split_bound(S: Subspace, T: Subspace, d: float, clause: str) -> float:
    """Both components of u = v + w along S + T are at most d |u|.

    S and T need not span the whole space; the bound is taken inside S + T.
    """
    try:
        W = direct_sum([S, T]).frame
        Sc = orthonormalize(W.T @ S.frame)
        Tc = orthonormalize(W.T @ T.frame)
        c = max(oblique_projection_norm(Sc, Tc), oblique_projection_norm(Tc, Sc))
    except ValueError as exc:
        raise HypothesisFailure(clause, str(exc)) from exc
    _require(_le(c, d), clause, f"component bound {c:.6g} > d = {d:.6g}")
    return c


def _closeness(A: np.ndarray, B: np.ndarray, bound: float, clause: str) -> float:
    diff = float(np.linalg.norm(np.asarray(A) - np.asarray(B), 2))
    _require(_le(diff, bound), clause, f"|A_n - B_n| = {diff:.6g} > {bound:.6g}")
    return diff


def matrix_powers(M: np.ndarray) -> MatrixSequence:
    """n -> M^n for integer n (negative n uses the inverse)."""
    M = np.asarray(M, dtype=float)
    Minv = np.linalg.inv(M)

    def seq(n: int) -> np.ndarray:
        return np.linalg.matrix_power(M if n >= 0 else Minv, abs(int(n)))

    return seq


# ---------------------------------------------------------------- pair


def _pair_core(A_n, B_n, E, Ep, F, Fp, lam, mu, C, d, a, delta, n, tag=""):
    """Check one application of the pair estimate at time n; return its data."""
    _require(n >= 1, tag + "window", f"time index {n} < 1")
    lam_n, mu_n, a_n = lam**n, mu**n, a**n
    _upper(A_n, E, C * lam_n, tag + "growth_E")
    _lower(A_n, Ep, mu_n / C, tag + "growth_E_prime")
    _upper(B_n, F, C * lam_n, tag + "growth_F")
    _lower(B_n, Fp, mu_n / C, tag + "growth_F_prime")
    cE = _split_bound(E, Ep, d, tag + "splitting_E")
    cF = _split_bound(F, Fp, d, tag + "splitting_F")
    _require((lam / a) ** (n + 1) < delta, tag + "window_lower",
             f"(lambda/a)^(n+1) = {(lam / a) ** (n + 1):.6g} >= delta = {delta:.6g}")
    diff = _closeness(A_n, B_n, delta * a_n, tag + "perturbation")
    _require(_le(delta * a_n, C * lam_n), tag + "cone_window",
             f"delta a^n = {delta * a_n:.6g} > C lambda^n = {C * lam_n:.6g}")
    # the slow subspace of each sequence lies in the 2C lambda^n cone of the other
    cone_F, _ = _svals(A_n, F)
    cone_E, _ = _svals(B_n, E)
    return {
        "n": n,
        "perturbation": diff,
        "split_constants": (cE, cF),
        "cone_F_in_Q": cone_F <= 2 * C * lam_n * (1 + CHECK_RTOL),
        "cone_E_in_R": cone_E <= 2 * C * lam_n * (1 + CHECK_RTOL),
        "cone_ratios": (cone_F / (C * lam_n), cone_E / (C * lam_n)),
        "intermediate_bound": (2 + d) * C**2 * (lam / mu) ** n,
    }


def verify_pair_lemma(
    A_seq: MatrixSequence,
    B_seq: MatrixSequence,
    E: Subspace,
    E_prime: Subspace,
    F: Subspace,
    F_prime: Subspace,
    p: PairRates,
    n: int | None = None,
) -> BoundReport:
    """Check the pair estimate on data at time n (default: the window index)."""
    if n is None:
        n = window_index(p.delta, p.lam / p.a)
    info = _pair_core(A_seq(n), B_seq(n), E, E_prime, F, F_prime,
                      p.lam, p.mu, p.C, p.d, p.a, p.delta, n)
    measured = subspace_distance(E, F)
    bound = pair_lemma_bound(p)
    return BoundReport(bound, measured, {"lemma": "pair", "exponent": pair_exponent(p.lam, p.mu, p.a),
                                          **info})


# ---------------------------------------------------------------- triple


class TripleLemmaReport(NamedTuple):
    E: BoundReport
    F: BoundReport
    G: BoundReport
    proof: dict


def _restrict(M: np.ndarray, frame: np.ndarray, image: np.ndarray | None = None) -> np.ndarray:
    image = frame if image is None else image
    return image.T @ M @ frame


def verify_triple_lemma(
    A_seq: MatrixSequence,
    B_seq: MatrixSequence,
    split_A: Sequence[Subspace],
    split_B: Sequence[Subspace],
    p: TripleRates,
    n: int,
    n_max: int | None = None,
) -> TripleLemmaReport:
    """Check the three-bundle estimate on data.

    ``split_A`` and ``split_B`` are (E, F, G) for each sequence.  Growth
    hypotheses are checked for 1 <= m <= n_max, which defaults to the largest
    time index used anywhere in the argument.
    """
    EA, FA, GA = split_A
    EB, FB, GB = split_B
    C, d, a, delta = p.C, p.d, p.a, p.delta
    if not delta > 0:
        raise DomainError("need delta > 0")
    d0 = triple_delta0(p)
    if not delta < d0:
        raise DeltaTooLarge(delta, d0)
    bE, bF, bG = triple_lemma_bounds(p)
    if n < 1:
        raise HypothesisFailure("time_index", "n must be >= 1")

    UA, UB = direct_sum([EA, FA]), direct_sum([EB, FB])
    VA, VB = direct_sum([FA, GA]), direct_sum([FB, GB])
    for tag, E_, F_, G_, U_, V_ in (("A", EA, FA, GA, UA, VA), ("B", EB, FB, GB, UB, VB)):
        _split_bound(E_, V_, d, f"splitting_{tag}_E_vs_FG")
        _split_bound(F_, G_, d, f"splitting_{tag}_F_vs_G")
        _split_bound(U_, G_, d, f"splitting_{tag}_EF_vs_G")
        _split_bound(E_, F_, d, f"splitting_{tag}_E_vs_F")

    n_E = window_index(delta, p.lambda2 / a)
    n_V = window_index(delta, 1 / (a * p.mu1))
    n_G = window_index(delta, 1 / (a * p.sigma1))
    horizon = max(n, n_E, n_V, n_G) if n_max is None else n_max

    rates = ((p.lambda1, p.lambda2), (p.mu1, p.mu2), (p.sigma1, p.sigma2))
    for m in range(1, horizon + 1):
        for tag, seq, spaces in (("A", A_seq, (EA, FA, GA)), ("B", B_seq, (EB, FB, GB))):
            fwd, bwd = seq(m), seq(-m)
            for name, S, (r1, r2) in zip("EFG", spaces, rates):
                _lower(fwd, S, r1**m / C, f"growth_{tag}_{name}_forward_lower")
                _upper(fwd, S, C * r2**m, f"growth_{tag}_{name}_forward_upper")
                _lower(bwd, S, r2 ** (-m) / C, f"growth_{tag}_{name}_backward_lower")
                _upper(bwd, S, C * r1 ** (-m), f"growth_{tag}_{name}_backward_upper")

    An, Amn = A_seq(n), A_seq(-n)
    _require(_le(np.linalg.norm(An, 2), a**n) and _le(np.linalg.norm(Amn, 2), a**n),
             "norm_bound", f"|A_(+-n)| exceeds a^n at n={n}")
    _closeness(An, B_seq(n), delta * a**n, "perturbation_forward")
    _closeness(Amn, B_seq(-n), delta * a**n, "perturbation_backward")

    # E vs F+G, forward
    pe = _pair_core(A_seq(n_E), B_seq(n_E), EA, VA, EB, VB,
                    p.lambda2, p.mu1, C, d, a, delta, n_E, "proof_E_")
    # F+G vs E, backward
    pv = _pair_core(A_seq(-n_V), B_seq(-n_V), VA, EA, VB, EB,
                    1 / p.mu1, 1 / p.lambda2, C, d, a, delta, n_V, "proof_V_")
    # G vs E+F, backward
    pg = _pair_core(A_seq(-n_G), B_seq(-n_G), GA, UA, GB, UB,
                    1 / p.sigma1, 1 / p.mu2, C, d, a, delta, n_G, "proof_G_")

    # F vs G inside F+G after conjugation by the graph map of F+G
    gm = graph_map(VA, VB)
    Ln = gm.operator_norm
    dist_V = subspace_distance(VA, VB)
    _require(Ln < 0.5, "proof_graph_small", f"|L| = {Ln:.6g} >= 1/2")
    om = omega_L(Ln, delta)
    dprime = Ln * om
    _require(dprime < 0.5, "proof_graph_small", f"|L| omega(L) = {dprime:.6g} >= 1/2")
    tau = tau_conjugation(d, Ln)
    Lamb = gm.ambient()
    Phi = VA.frame
    phi = Phi + Lamb @ Phi  # V^A coordinates -> V^B
    fpath = {"L_norm": Ln, "tau": tau, "tau_le_3d": tau <= 3 * d * (1 + CHECK_RTOL),
             "omega_L": om, "delta_prime": dprime, "dist_V": dist_V}
    if dprime > 0:
        n_F = window_index(dprime, p.mu2 / a)
        Bn = B_seq(n_F)
        An_F = A_seq(n_F)
        inv_res = float(np.linalg.norm(Bn @ phi - VB.frame @ (VB.frame.T @ Bn @ phi), 2))
        _require(inv_res <= 1e-9 * max(1.0, float(np.linalg.norm(Bn, 2))), "proof_F_invariance",
                 f"B_n does not preserve F+G (residual {inv_res:.3g})")
        inv_res = float(np.linalg.norm(An_F @ Phi - Phi @ (Phi.T @ An_F @ Phi), 2))
        _require(inv_res <= 1e-9 * max(1.0, float(np.linalg.norm(An_F, 2))), "proof_F_invariance",
                 f"A_n does not preserve F+G (residual {inv_res:.3g})")
        A_hat = Phi.T @ An_F @ Phi
        B_hat = Phi.T @ Bn @ phi
        FA_c = orthonormalize(Phi.T @ FA.frame)
        GA_c = orthonormalize(Phi.T @ GA.frame)
        FB_hat = orthonormalize(Phi.T @ FB.frame)
        GB_hat = orthonormalize(Phi.T @ GB.frame)
        Cp = C * (1 + Ln)
        pf = _pair_core(A_hat, B_hat, FA_c, GA_c, FB_hat, GB_hat,
                        p.mu2, p.sigma1, Cp, tau, a, dprime, n_F, "proof_F_")
        hatF_dist = subspace_distance(Subspace(Phi @ FB_hat.frame), FB)
        eta = math.log(p.sigma1 / p.mu2) / math.log(a / p.mu2)
        fpath.update({
            "n_F": n_F,
            "dist_F_hat": subspace_distance(Subspace(Phi @ FA_c.frame), Subspace(Phi @ FB_hat.frame)),
            "dist_F_hat_bound": (2 + tau) * Cp**2 * (p.sigma1 / p.mu2) * dprime**eta,
            "dist_hatF_F": hatF_dist,
            "pair": pf,
        })

    ctx = {"delta": delta, "delta0": d0, "n": n, "windows": {"E": n_E, "V": n_V, "G": n_G}}
    rE = BoundReport(bE, subspace_distance(EA, EB), {"lemma": "triple", "subspace": "E", **ctx})
    rF = BoundReport(bF, subspace_distance(FA, FB), {"lemma": "triple", "subspace": "F", **ctx})
    rG = BoundReport(bG, subspace_distance(GA, GB), {"lemma": "triple", "subspace": "G", **ctx})
    proof = {"E": pe, "V": pv, "G": pg, "F": fpath}
    return TripleLemmaReport(rE, rF, rG, proof)


# ---------------------------------------------------------------- metrics


def _check_pd(h: np.ndarray, name: str) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NotPositiveDefinite(f"{name} must be a square matrix")
    if not np.allclose(h, h.T, rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    h = (h + h.T) / 2
    lo = np.linalg.eigvalsh(h)[0]
    if not lo > PD_TOL:
        raise NotPositiveDefinite(f"{name} has min eigenvalue {lo:.3g}")
    return h


def metric_distance(h1: np.ndarray, h2: np.ndarray) -> float:
    """log of the largest norm distortion between two inner products."""
    h1 = _check_pd(h1, "h1")
    h2 = _check_pd(h2, "h2")
    ev = scipy.linalg.eigh(h2, h1, eigvals_only=True)
    return float(max(0.0, 0.5 * math.log(max(ev[-1], 1 / ev[0]))))


def _transform(h: np.ndarray) -> np.ndarray:
    # R with h = R^T R: h-geometry becomes Euclidean in coordinates y = R v
    return np.linalg.cholesky(h).T


def metric_subspace_distance(h: np.ndarray, E: Subspace, F: Subspace) -> float:
    """Subspace distance measured with the inner product h."""
    R = _transform(_check_pd(h, "h"))
    return subspace_distance(orthonormalize(R @ E.frame), orthonormalize(R @ F.frame))


def _ratio_range(h_num: np.ndarray, h_den: np.ndarray, basis: np.ndarray) -> tuple[float, float]:
    """(sup, inf) of |v|_{h_num} / |v|_{h_den} over the span of basis."""
    a = basis.T @ h_num @ basis
    b = basis.T @ h_den @ basis
    ev = scipy.linalg.eigh((a + a.T) / 2, (b + b.T) / 2, eigvals_only=True)
    return float(math.sqrt(ev[-1])), float(math.sqrt(max(ev[0], 0.0)))


def _h_complement(h0: np.ndarray, S: Subspace) -> np.ndarray:
    R = _transform(h0)
    perp = orthonormalize(R @ S.frame).complement().frame
    return np.linalg.solve(R, perp)


def verify_metric_lemma(
    hE: np.ndarray,
    hF: np.ndarray,
    h0: np.ndarray,
    E: Subspace,
    F: Subspace,
    p: MetricRates,
    n: int | None = None,
) -> BoundReport:
    """Check the metric-sequence estimate at a single time n.

    ``hE`` and ``hF`` are the metrics h_n^E, h_n^F at that n.  The time must
    satisfy 1 <= delta A^n < A; by default the unique such n is used.
    """
    h0 = _check_pd(h0, "h0")
    hE = _check_pd(hE, "hE")
    hF = _check_pd(hF, "hF")
    if n is None:
        n = max(0, math.ceil(-math.log(p.delta) / math.log(p.A) - 1e-12))
    scale = p.delta * p.A**n
    _require(_le(1.0, scale) and scale < p.A, "time_window", f"delta A^n = {scale:.6g} not in [1, A)")
    md = metric_distance(hE, hF)
    _require(_le(md, math.log1p(p.C2 * scale)), "metric_closeness",
             f"dist(h_E, h_F) = {md:.6g} > log(1 + delta C2 A^n) = {math.log1p(p.C2 * scale):.6g}")
    for tag, h, S in (("E", hE, E), ("F", hF, F)):
        hi, _ = _ratio_range(h, h0, S.frame)
        _require(_le(hi, p.C * p.lam**n), f"growth_{tag}",
                 f"sup ratio {hi:.6g} > C lambda^n = {p.C * p.lam**n:.6g}")
        if S.dim < S.ambient_dim:
            _, lo = _ratio_range(h, h0, _h_complement(h0, S))
            _require(_le(p.mu**n / p.C, lo), f"growth_{tag}_perp",
                     f"inf ratio {lo:.6g} < mu^n / C = {p.mu**n / p.C:.6g}")
    measured = metric_subspace_distance(h0, E, F)
    return BoundReport(metric_lemma_bound(p), measured,
                       {"lemma": "metric", "n": n, "metric_distance": md})


# ---------------------------------------------------------------- theorem


@dataclass(frozen=True)
class Prediction:
    """Predicted Hölder exponent (before multiplying by nu) for one subspace."""

    index: int
    subspace: str
    kind: str
    exponent: float
    rate_factor: float
    eta: float | None = None
    extras: dict = field(default_factory=dict)

    def constant(self, ell: float) -> float:
        """Constant multiplying d(x, y)^(nu * exponent) for block constant ell."""
        if self.kind == "omega":
            return 3 * ell**2 * self.rate_factor
        if self.kind in ("alpha", "gamma"):
            return (2 + ell) * ell**2 * self.rate_factor
        eta = self.eta
        return 4.5 * (2 + 3 * ell) ** (1 + eta) * ell ** (2 * (1 + eta)) * self.rate_factor

    def to_dict(self) -> dict:
        return {"index": self.index, "subspace": self.subspace, "kind": self.kind,
                "exponent": self.exponent, "rate_factor": self.rate_factor, "eta": self.eta}


def theorem_exponents(spectrum: Spectrum | Sequence[float], eps: float, log_a: float,
                      invertible: bool) -> list[Prediction]:
    """Predicted Hölder exponents of the Oseledets subspaces on a regular block.

    Non-invertible: omega_i for F^i, i = 1..k-1.  Invertible: alpha for E^1,
    beta (with its auxiliary eta) for middle E^i, gamma for E^k.
    """
    chi = list(spectrum.exponents) if isinstance(spectrum, Spectrum) else [float(c) for c in spectrum]
    k = len(chi)
    if k >= 2:
        gap = min(b - a for a, b in zip(chi, chi[1:]))
        if not eps < gap / 2:
            raise DomainError(f"eps = {eps:g} must be below min gap / 2 = {gap / 2:g}")
    if not eps > 0:
        raise DomainError("eps must be > 0")
    if not log_a > chi[-1] + eps:
        raise DomainError(f"log_a must exceed chi_k + eps = {chi[-1] + eps:g}")

    def gap_i(i):  # chi_{i+1} - chi_i - 2 eps, 0-based i
        return chi[i + 1] - chi[i] - 2 * eps

    def frac(num, den, name):
        if not den > 0:
            raise DomainError(f"log_a too small: nonpositive denominator in {name}")
        val = num / den
        if not 0 < val < 1:
            raise DomainError(f"{name} = {val:g} outside (0, 1); increase log_a")
        return val

    out: list[Prediction] = []
    if not invertible:
        for i in range(k - 1):
            eta = gap_i(i)
            w = frac(eta, log_a - chi[i] - eps, f"omega_{i + 1}")
            out.append(Prediction(i + 1, f"F^{i + 1}", "omega", w, math.exp(eta), eta))
        return out
    if k < 2:
        return out
    for i in range(k):
        if i == 0:
            g = gap_i(0)
            e = frac(g, log_a - chi[0] - eps, "alpha")
            out.append(Prediction(1, "E^1", "alpha", e, math.exp(g)))
        elif i == k - 1:
            g = gap_i(k - 2)
            e = frac(g, log_a + chi[-1] - eps, "gamma")
            out.append(Prediction(k, f"E^{k}", "gamma", e, math.exp(g)))
        else:
            eta = frac(gap_i(i), log_a - chi[i] - eps, f"eta_{i + 1}")
            w = frac(gap_i(i - 1), chi[i] - eps + log_a, f"omega_{i + 1}")
            out.append(Prediction(i + 1, f"E^{i + 1}", "beta", eta * w,
                                  math.exp(gap_i(i) + eta * gap_i(i - 1)), eta))
    return out


def theorem_delta_limit(spectrum: Spectrum | Sequence[float], c1: float) -> float:
    """Upper limit for delta = d(x, y)^nu, read as min(|chi_1| / c1, 1)."""
    chi = spectrum.exponents if isinstance(spectrum, Spectrum) else spectrum
    return float(min(abs(chi[0]) / c1, 1.0))


def theorem_log_a(c1: float, spectrum: Spectrum | Sequence[float], eps: float) -> float:
    """log a for the predictions: log c1, nudged above chi_k + eps when needed."""
    chi = spectrum.exponents if isinstance(spectrum, Spectrum) else spectrum
    return float(max(math.log(c1), chi[-1] + eps + 1e-9))
