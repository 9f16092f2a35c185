"""Experiment driver: sample pairs on a regular block, fit Hölder exponents,
compare against the predicted exponents and write reports.

Config files are flat ``key = value`` tables.  Values are JSON literals
(numbers, strings, lists, true/false/null) or bare words; ``#`` starts a
comment; ``[section]`` headers prefix the keys that follow with ``section.``.
Keys under ``system.`` are passed to :func:`make_system`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .bounds import Prediction, theorem_delta_limit, theorem_exponents, theorem_log_a
from .cocycle import CocycleSystem, holder_iterate_constant
from .errors import ConfigError, DomainError, EmptyBlock, InsufficientData, OselabError, StageError
from .grassmann import subspace_distance, Subspace
from .oseledets import (
    Spectrum,
    batch_filtration_frames,
    batch_splitting_frames,
    default_window,
    lyapunov_spectrum,
)
from .regular_blocks import BlockProfile, block_profile
from .reports import BoundReport, PASS_RTOL, _jsonable
from .systems import KINDS, SystemSpec, make_system

SCHEMA_VERSION = 1
PAIR_COLUMNS = ("pair_id", "d_base", "dist_subspace", "i_index", "x_id", "y_id")
ZERO_DIST = 1e-14
DEFAULT_WINDOW = (1e-6, 1e-2)

# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; see the README for the key reference."""

    system: SystemSpec = field(default_factory=lambda: SystemSpec("cat_map"))
    name: str = "experiment"
    experiment: str = "holder"
    eps: float = 0.1
    ell: float | None = None
    ell_sweep: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0)
    block_target: float = 0.9
    horizon: int = 50
    horizon_sweep: tuple[int, ...] = (10, 25, 50)
    sample_count: int = 2000
    d_min: float = DEFAULT_WINDOW[0]
    d_max: float = DEFAULT_WINDOW[1]
    seed: int = 0
    subspace: int = 1
    spectrum_horizon: int = 2000
    gap_tol: float = 0.05
    slack: float = 0.1
    threads: int = 1
    chunk: int = 32
    lemma: str = "triple"
    instances: int = 1000
    n_max: int = 10
    out: str = "results"
    pairs_csv: str = "pairs.csv"
    report: str = "report.json"

    def __post_init__(self):
        _validate(self)

    @property
    def window(self) -> tuple[float, float]:
        return (self.d_min, self.d_max)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_SECTION = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_.]*)\]$")
_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {"horizon", "sample_count", "seed", "subspace", "spectrum_horizon", "threads",
             "chunk", "instances", "n_max"}
_FLOAT_KEYS = {"eps", "block_target", "d_min", "d_max", "gap_tol", "slack"}
_STR_KEYS = {"name", "experiment", "lemma", "out", "pairs_csv", "report"}


def _validate(cfg: ExperimentConfig) -> None:
    def bad(name, msg):
        raise ConfigError(msg, field=name)

    if cfg.experiment not in ("holder", "lemma_sweep"):
        bad("experiment", "experiment must be 'holder' or 'lemma_sweep'")
    if cfg.system.kind not in KINDS:
        bad("system.kind", f"unknown system kind {cfg.system.kind!r}")
    if not cfg.eps > 0:
        bad("eps", "eps must be > 0")
    if cfg.ell is not None and not cfg.ell >= 1:
        bad("ell", "ell must be >= 1")
    if not cfg.ell_sweep or any(not v >= 1 for v in cfg.ell_sweep):
        bad("ell_sweep", "ell_sweep must be a nonempty list of values >= 1")
    if not 0 < cfg.block_target <= 1:
        bad("block_target", "block_target must lie in (0, 1]")
    if cfg.horizon < 1:
        bad("horizon", "horizon must be >= 1")
    if any(h < 1 or h > cfg.horizon for h in cfg.horizon_sweep):
        bad("horizon_sweep", "horizon_sweep entries must lie in [1, horizon]")
    if cfg.sample_count < 2:
        bad("sample_count", "sample_count must be >= 2")
    if not 0 < cfg.d_min < cfg.d_max:
        bad("d_min", "need 0 < d_min < d_max")
    if not 0 <= cfg.seed < 2**64:
        bad("seed", "seed must be an unsigned 64-bit integer")
    if cfg.subspace < 1:
        bad("subspace", "subspace index must be >= 1")
    if cfg.spectrum_horizon < 100:
        bad("spectrum_horizon", "spectrum_horizon must be >= 100")
    if cfg.slack < 0:
        bad("slack", "slack must be >= 0")
    if cfg.threads < 1:
        bad("threads", "threads must be >= 1")
    if cfg.chunk < 1:
        bad("chunk", "chunk must be >= 1")
    if cfg.lemma not in ("pair", "triple", "metric", "iterate"):
        bad("lemma", "lemma must be one of pair, triple, metric, iterate")
    if cfg.instances < 1 or cfg.n_max < 1:
        bad("instances", "instances and n_max must be >= 1")


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\-]*", raw):
        return raw
    raise ValueError(f"cannot parse value {raw!r}")


def _coerce(key: str, value):
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ValueError("expected an integer")
        return int(value)
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError("expected a number")
        return float(value)
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ValueError("expected a string")
        return value
    if key == "ell":
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError("expected a number or null")
        return float(value)
    if key == "ell_sweep":
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) for v in value):
            raise ValueError("expected a list of numbers")
        return tuple(float(v) for v in value)
    if key == "horizon_sweep":
        if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
            raise ValueError("expected a list of integers")
        return tuple(int(v) for v in value)
    raise KeyError(key)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat key table into an :class:`ExperimentConfig`."""
    values: dict[str, Any] = {}
    where: dict[str, int] = {}
    system: dict[str, Any] = {}
    prefix = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        m = _SECTION.match(body)
        if m:
            prefix = m.group(1) + "."
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError("malformed key", line=lineno, field=key or None)
        key = prefix + key
        if key in where:
            raise ConfigError(f"duplicate key (first set on line {where[key]})", line=lineno, field=key)
        where[key] = lineno
        if not raw:
            raise ConfigError("missing value", line=lineno, field=key)
        try:
            value = _parse_value(raw)
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, field=key) from None
        if key.startswith("system."):
            system[key[len("system."):]] = value
            continue
        if key not in _FIELDS or key == "system":
            raise ConfigError("unknown key", line=lineno, field=key)
        try:
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, field=key) from None
    kind = system.pop("kind", None)
    if kind is None:
        raise ConfigError("system.kind is required", field="system.kind")
    sys_seed = system.pop("seed", 0)
    if not isinstance(sys_seed, int) or isinstance(sys_seed, bool):
        raise ConfigError("expected an integer", line=where.get("system.seed"), field="system.seed")
    try:
        return ExperimentConfig(system=SystemSpec(str(kind), system, sys_seed), **values)
    except ConfigError as exc:
        raise ConfigError(exc.detail, line=where.get(exc.field or ""), field=exc.field) from None


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def bundled_config(name: str) -> ExperimentConfig:
    """Load one of the configs shipped with the package (e.g. ``cat_constant``)."""
    from importlib import resources

    res = resources.files("oselab") / "configs" / f"{name}.cfg"
    if not res.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return parse_config(res.read_text())


def bundled_config_names() -> list[str]:
    from importlib import resources

    root = resources.files("oselab") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


# ---------------------------------------------------------------- parallel helpers


def _chunked_map(fn: Callable[[np.ndarray], Any], items: np.ndarray, chunk: int, threads: int) -> list:
    """fn over fixed consecutive chunks; results come back in chunk order."""
    starts = range(0, len(items), chunk)
    parts = [items[s: s + chunk] for s in starts]
    if threads <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))


def _merge_profiles(parts: Sequence[BlockProfile]) -> BlockProfile:
    first = parts[0]
    has_angle = first.cosines is not None
    return BlockProfile(
        points=np.concatenate([p.points for p in parts]),
        eps=first.eps,
        horizon=first.horizon,
        invertible=first.invertible,
        growth=np.concatenate([p.growth for p in parts]),
        clause=np.concatenate([p.clause for p in parts]),
        cosines=np.concatenate([p.cosines for p in parts]) if has_angle else None,
        cosine_subset=np.concatenate([p.cosine_subset for p in parts]) if has_angle else None,
        subsets=first.subsets,
    )


# ---------------------------------------------------------------- pipeline stages


class PairRecord(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    d_base: float
    dist: float
    pair_id: int
    x_id: int
    y_id: int
    i_index: int


@dataclass
class PairSample:
    """Pairs drawn on a regular block, with the block data that produced them."""

    pairs: list[PairRecord]
    spectrum: Spectrum
    profile: BlockProfile
    ell: float
    horizon: int
    window: tuple[float, float]
    ell_fractions: dict[float, float]
    horizon_fractions: dict[int, float]
    n_candidates: int
    n_in_block: int

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def d_base(self) -> np.ndarray:
        return np.array([p.d_base for p in self.pairs], dtype=float)

    @property
    def dist(self) -> np.ndarray:
        return np.array([p.dist for p in self.pairs], dtype=float)

    def block_summary(self) -> dict:
        return {
            "ell": self.ell,
            "horizon": self.horizon,
            "n_samples": int(len(self.profile)),
            "n_in_block": self.n_in_block,
            "fraction": self.profile.fraction(self.ell, self.horizon),
            "ell_sweep": {_key(k): v for k, v in self.ell_fractions.items()},
            "horizon_sweep": {str(k): v for k, v in self.horizon_fractions.items()},
            "n_candidate_pairs": self.n_candidates,
            "n_pairs": len(self.pairs),
        }


def _key(v: float) -> str:
    return f"{v:g}"


def estimate_spectrum(sys: CocycleSystem, cfg: ExperimentConfig) -> Spectrum:
    """Spectrum at a reference point drawn from its own seed stream."""
    rng = np.random.default_rng([cfg.seed, 1])
    x0 = sys.sample(rng, 1)[0]
    return lyapunov_spectrum(sys, x0, n=cfg.spectrum_horizon, gap_tol=cfg.gap_tol)


def draw_candidates(sys: CocycleSystem, cfg: ExperimentConfig):
    """Anchors and partners at log-uniform distances in the pair window.

    Half of ``sample_count`` points are anchors; partner j sits next to anchor
    j.  Point ids are anchors 0..h-1 then partners h..2h-1.
    """
    if sys.neighbor is None:
        raise DomainError(f"system {sys.kind!r} cannot produce nearby points")
    rng = np.random.default_rng([cfg.seed, 2])
    half = cfg.sample_count // 2
    anchors = sys.sample(rng, half)
    target = np.exp(rng.uniform(math.log(cfg.d_min), math.log(cfg.d_max), half))
    partners = sys.neighbor(rng, anchors, target)
    return np.concatenate([anchors, partners]), half


def profile_points(sys: CocycleSystem, points: np.ndarray, spectrum: Spectrum,
                   cfg: ExperimentConfig) -> BlockProfile:
    def run(pts):
        return block_profile(sys, pts, spectrum, cfg.eps, cfg.horizon, chunk=cfg.chunk)

    return _merge_profiles(_chunked_map(run, points, cfg.chunk, cfg.threads))


def choose_ell(profile: BlockProfile, cfg: ExperimentConfig) -> tuple[float, dict[float, float]]:
    """The configured ell, or the smallest swept ell whose block holds block_target of the samples."""
    fractions = {float(v): profile.fraction(v, cfg.horizon) for v in sorted(cfg.ell_sweep)}
    if cfg.ell is not None:
        return float(cfg.ell), fractions
    for v, frac in fractions.items():
        if frac >= cfg.block_target:
            return v, fractions
    return max(fractions), fractions


def subspace_frames(sys: CocycleSystem, points: np.ndarray, spectrum: Spectrum, index: int,
                    cfg: ExperimentConfig) -> np.ndarray:
    """Frames of E^index (invertible) or F^index at each point, shape (P, d, m)."""
    window = default_window(spectrum)
    if not 1 <= index <= spectrum.k:
        raise DomainError(f"subspace index {index} outside 1..{spectrum.k}")
    frames_of = batch_splitting_frames if sys.invertible else batch_filtration_frames

    def run(pts):
        return frames_of(sys, pts, spectrum, window)[index - 1]

    parts = _chunked_map(run, points, cfg.chunk, cfg.threads)
    return np.concatenate(parts) if parts else np.empty((0, sys.dim, 0))


def sample_block_pairs(sys: CocycleSystem, cfg: ExperimentConfig,
                       spectrum: Spectrum | None = None) -> PairSample:
    """Pairs (x, y, d, dist_i) of block points within the distance window.

    Raises EmptyBlock when no sample passes membership at the chosen ell.
    """
    if spectrum is None:
        spectrum = estimate_spectrum(sys, cfg)
    points, half = draw_candidates(sys, cfg)
    profile = profile_points(sys, points, spectrum, cfg)
    ell, ell_fractions = choose_ell(profile, cfg)
    horizon_fractions = {int(h): profile.fraction(ell, int(h)) for h in sorted(cfg.horizon_sweep)}
    ok = profile.passing(ell, cfg.horizon)
    if not ok.any():
        raise EmptyBlock(f"no sample passes membership at ell = {ell:g}, horizon = {cfg.horizon}")
    d_base = np.asarray(sys.metric(points[:half], points[half: 2 * half]), dtype=float)
    keep = [j for j in range(half)
            if ok[j] and ok[half + j] and cfg.d_min <= d_base[j] <= cfg.d_max]
    ids = sorted({j for j in keep} | {half + j for j in keep})
    pos = {pid: n for n, pid in enumerate(ids)}
    frames = subspace_frames(sys, points[ids], spectrum, cfg.subspace, cfg) if ids else None
    pairs = []
    for pair_id, j in enumerate(keep):
        fx, fy = frames[pos[j]], frames[pos[half + j]]
        dist = subspace_distance(Subspace(fx), Subspace(fy))
        pairs.append(PairRecord(points[j], points[half + j], float(d_base[j]), float(dist),
                                pair_id, j, half + j, cfg.subspace))
    return PairSample(pairs, spectrum, profile, ell, cfg.horizon, cfg.window, ell_fractions,
                      horizon_fractions, half, int(ok.sum()))


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class HolderFit:
    """Least-squares line log dist = intercept_log + slope log d."""

    slope: float
    intercept_log: float
    r_squared: float
    n_pairs: int
    distance_window: tuple[float, float]
    n_zero: int = 0

    @property
    def constant(self) -> float:
        return math.exp(self.intercept_log)

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept_log": self.intercept_log, "r2": self.r_squared,
                "n_pairs": self.n_pairs, "n_zero": self.n_zero,
                "distance_window": list(self.distance_window)}


def _pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, PairSample):
        return pairs.d_base, pairs.dist
    if isinstance(pairs, np.ndarray) and pairs.ndim == 2 and pairs.shape[1] == 2:
        return pairs[:, 0].astype(float), pairs[:, 1].astype(float)
    d, dist = [], []
    for p in pairs:
        if isinstance(p, PairRecord):
            d.append(p.d_base)
            dist.append(p.dist)
        else:
            d.append(p[-2])
            dist.append(p[-1])
    return np.asarray(d, dtype=float), np.asarray(dist, dtype=float)


def holder_fit(pairs, window: tuple[float, float] = DEFAULT_WINDOW, min_pairs: int = 10) -> HolderFit:
    """Fit log dist against log d over pairs with d in ``window``.

    ``pairs`` is a PairSample, a sequence of PairRecord or of tuples ending
    in (d, dist), or an (n, 2) array.  Pairs with dist <= 1e-14 are left out
    of the regression and counted in ``n_zero``.
    """
    d, dist = _pair_arrays(pairs)
    lo, hi = window
    inside = (d > 0) & (d >= lo) & (d <= hi)
    zero = inside & (dist <= ZERO_DIST)
    use = inside & ~zero
    n_use, n_zero = int(use.sum()), int(zero.sum())
    if n_use < min_pairs:
        raise InsufficientData(f"{n_use} usable pairs (need {min_pairs}); {n_zero} zero-distance",
                               n_usable=n_use, n_zero=n_zero)
    x, y = np.log(d[use]), np.log(dist[use])
    if np.ptp(x) == 0:
        raise InsufficientData("all usable pairs share one base distance", n_usable=n_use, n_zero=n_zero)
    res = stats.linregress(x, y)
    return HolderFit(float(res.slope), float(res.intercept), float(res.rvalue**2), n_use,
                     (float(lo), float(hi)), n_zero)


@dataclass(frozen=True)
class TheoremComparison(BoundReport):
    """Pointwise bound check at the worst pair plus the slope criterion.

    ``bound_value``/``measured`` are the predicted curve and the distance at
    the pair closest to (or furthest past) the curve.  The comparison passes
    if the slope criterion holds or no pair violates the curve.
    """

    slope_ok: bool = False
    pointwise_ok: bool = False
    violation_fraction: float = 0.0

    @property
    def passed(self) -> bool:
        return self.slope_ok or self.pointwise_ok

    def to_dict(self) -> dict:
        out = super().to_dict()
        out.update(slope_ok=self.slope_ok, pointwise_ok=self.pointwise_ok,
                   violation_fraction=self.violation_fraction)
        return out


def compare_to_theorem(fit: HolderFit | None, predicted: Prediction, nu: float, pairs=None,
                       ell: float = 1.0, slack: float = 0.1) -> TheoremComparison:
    """Compare a fit (and optionally the raw pairs) against a predicted exponent.

    Pointwise: dist <= C(ell) d^(nu omega) for every pair, with the predicted
    constant.  Slope: fitted slope >= nu omega - slack.  A missing fit (all
    distances zero, say) leaves only the pointwise check.
    """
    target = nu * predicted.exponent
    const = predicted.constant(ell)
    if pairs is not None:
        d, dist = _pair_arrays(pairs)
    else:
        d, dist = np.empty(0), np.empty(0)
    bound = const * d**target
    ratio = np.where(bound > 0, dist / np.where(bound > 0, bound, 1.0), np.inf)
    bad = dist > bound * (1 + PASS_RTOL)
    frac = float(bad.mean()) if d.size else 0.0
    if d.size:
        w = int(np.argmax(ratio))
        bval, meas = float(bound[w]), float(dist[w])
    else:
        bval, meas = 0.0, 0.0
    slope_ok = fit is not None and fit.slope >= target - slack
    ctx = {
        "predicted_slope": target,
        "omega_i": predicted.exponent,
        "nu": nu,
        "constant": const,
        "ell": ell,
        "slack": slack,
        "fit_slope": None if fit is None else fit.slope,
        "n_checked": int(d.size),
        "n_violations": int(bad.sum()),
    }
    return TheoremComparison(bval, meas, ctx, slope_ok=bool(slope_ok), pointwise_ok=not bad.any(),
                             violation_fraction=frac)


# ---------------------------------------------------------------- runs


@dataclass
class ExperimentResult:
    report: dict
    csv_text: str
    paths: dict[str, Path] = field(default_factory=dict)
    pairs: PairSample | None = None


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def pairs_csv(sample: PairSample) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PAIR_COLUMNS)
    for p in sample.pairs:
        w.writerow([p.pair_id, _fmt(p.d_base), _fmt(p.dist), p.i_index, p.x_id, p.y_id])
    return buf.getvalue()


def rows_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _clean(obj):
    obj = _jsonable(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dump_report(report: Mapping) -> str:
    return json.dumps(_clean(report), indent=2) + "\n"


def _stage(name: str, fn: Callable, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except OselabError as exc:
        raise StageError(name, exc) from exc


def _prediction_for(spectrum: Spectrum, sys: CocycleSystem, cfg: ExperimentConfig):
    c1 = holder_iterate_constant(sys.holder_c0, sys.holder_nu, sys.lipschitz_L, cfg.eps)
    log_a = theorem_log_a(c1, spectrum, cfg.eps)
    preds = theorem_exponents(spectrum, cfg.eps, log_a, sys.invertible)
    match = [p for p in preds if p.index == cfg.subspace]
    info = {"c1": c1, "log_a": log_a, "delta_limit": theorem_delta_limit(spectrum, c1)}
    return (match[0] if match else None), info


def holder_experiment(cfg: ExperimentConfig) -> tuple[dict, PairSample]:
    """Run spectrum -> block -> pairs -> fit -> compare and return (report, pairs)."""
    sys = _stage("systems.make_system", make_system, cfg.system)
    spectrum = _stage("oseledets.lyapunov_spectrum", estimate_spectrum, sys, cfg)
    sample = _stage("harness.sample_block_pairs", sample_block_pairs, sys, cfg, spectrum)
    try:
        fit = holder_fit(sample, cfg.window)
    except InsufficientData as exc:
        fit = None
        fit_note = {"error": str(exc), "n_usable": exc.n_usable, "n_zero": exc.n_zero}
    else:
        fit_note = {}
    pred, pinfo = _stage("bounds.theorem_exponents", _prediction_for, spectrum, sys, cfg)
    nu = sys.holder_nu
    window_ok = cfg.d_max**nu < pinfo["delta_limit"]
    prediction = {"omega_i": None, "nu": nu, "constant": None, "subspace": cfg.subspace,
                  "window_within_delta_limit": window_ok, **pinfo}
    if pred is None:
        verdict = {"status": "no_prediction",
                   "detail": f"no exponent is predicted for subspace {cfg.subspace}"}
    else:
        cmp = compare_to_theorem(fit, pred, nu, sample, ell=sample.ell, slack=cfg.slack)
        prediction.update(omega_i=pred.exponent, constant=pred.constant(sample.ell),
                          kind=pred.kind, predicted_slope=nu * pred.exponent)
        if len(sample) == 0:
            status = "inconclusive"
        else:
            status = "pass" if cmp.passed else "fail"
        verdict = {"status": status, "slope_ok": cmp.slope_ok, "pointwise_ok": cmp.pointwise_ok,
                   "pointwise_pass_fraction": 1.0 - cmp.violation_fraction,
                   "violation_fraction": cmp.violation_fraction,
                   "worst_pair": {"bound": cmp.bound_value, "measured": cmp.measured}}
    fit_dict = fit.to_dict() if fit is not None else {"slope": None, "intercept_log": None,
                                                      "r2": None, "n_pairs": 0, **fit_note}
    report = {
        "name": cfg.name,
        "experiment": "holder",
        "system": {"kind": cfg.system.kind, "params": dict(cfg.system.params),
                   "c0": sys.holder_c0, "nu": nu, "L": sys.lipschitz_L,
                   "invertible": sys.invertible},
        "spectrum": spectrum.to_dict(),
        "block_summary": sample.block_summary(),
        "fit": fit_dict,
        "prediction": prediction,
        "verdict": verdict,
        "config": {"seed": cfg.seed, "eps": cfg.eps, "sample_count": cfg.sample_count,
                   "window": list(cfg.window)},
        "versions": versions(),
    }
    return report, sample


def lemma_sweep_experiment(cfg: ExperimentConfig) -> tuple[dict, str]:
    """Randomized lemma sweep (or iterate-Hölder check); returns (report, csv text)."""
    from .sweeps import SWEEP_COLUMNS, run_lemma_sweep

    if cfg.lemma == "iterate":
        return iterate_experiment(cfg)
    res = _stage(f"sweeps.{cfg.lemma}", run_lemma_sweep, cfg.lemma, cfg.instances, cfg.seed,
                 cfg.threads)
    summary = res.summary()
    report = {
        "name": cfg.name,
        "experiment": "lemma_sweep",
        "sweep": summary,
        "verdict": {"status": "pass" if res.violations == 0 and res.accepted >= cfg.instances
                    else "fail"},
        "versions": versions(),
    }
    return report, rows_csv(SWEEP_COLUMNS, (r.as_tuple() for r in res.rows))


def iterate_pairs(sys: CocycleSystem, count: int, seed: int,
                  window: tuple[float, float] = (1e-8, 0.5)) -> list[tuple[np.ndarray, np.ndarray]]:
    """Half anchors with partners at log-uniform distances in ``window``."""
    rng = np.random.default_rng([seed, 3])
    xs = sys.sample(rng, count)
    dist = np.exp(rng.uniform(math.log(window[0]), math.log(window[1]), count))
    ys = sys.neighbor(rng, xs, dist)
    return list(zip(xs, ys))


def iterate_experiment(cfg: ExperimentConfig) -> tuple[dict, str]:
    from .cocycle import verify_iterate_holder

    sys = _stage("systems.make_system", make_system, cfg.system)
    pairs = iterate_pairs(sys, cfg.instances, cfg.seed)
    rep = _stage("cocycle.verify_iterate_holder", verify_iterate_holder, sys, pairs, cfg.n_max, cfg.eps)
    report = {
        "name": cfg.name,
        "experiment": "iterate_holder",
        "result": rep.to_dict(),
        "verdict": {"status": "pass" if rep.context["violations"] == 0 else "fail"},
        "versions": versions(),
    }
    rows = [("worst", rep.context["pair_index"], rep.context["n"], rep.context["base_distance"],
             rep.measured, rep.bound_value, rep.context["violations"])]
    csv_text = rows_csv(("entry", "pair_index", "n", "d_base", "measured", "bound", "violations"), rows)
    return report, csv_text


def versions() -> dict:
    from . import __version__

    return {"schema": SCHEMA_VERSION, "oselab": __version__, "numpy": np.__version__}


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None,
                   write: bool = True) -> ExperimentResult:
    """Run the configured experiment and write the CSV and report into ``out``.

    Holder experiments write the pair CSV; lemma sweeps write one row per
    instance.  Both are deterministic given the seed, whatever the thread count.
    """
    if cfg.experiment == "holder":
        report, sample = holder_experiment(cfg)
        csv_text = pairs_csv(sample)
    else:
        report, csv_text = lemma_sweep_experiment(cfg)
        sample = None
    result = ExperimentResult(report, csv_text, pairs=sample)
    if write:
        out_dir = Path(out if out is not None else cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path, rep_path = out_dir / cfg.pairs_csv, out_dir / cfg.report
        csv_path.write_text(csv_text)
        rep_path.write_text(dump_report(report))
        result.paths = {"csv": csv_path, "report": rep_path}
    return result


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    out["system"] = {"kind": cfg.system.kind, "params": dict(cfg.system.params), "seed": cfg.system.seed}
    return out
