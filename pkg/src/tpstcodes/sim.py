"""Monte Carlo campaigns: FER, genie-aided bounds, threshold learning, rate allocation.

Every trial draws from its own generator seeded by ``(master_seed, point, trial)``,
so results do not depend on how trials are spread over worker processes.
Trials run in ordered blocks and the error-count stop rule is applied to the
ordered outcomes, never to completion order.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from .channel import SnrMode, sigma_for
from .tpst import TpstSpec, encode_bits, scl_raw

log = logging.getLogger(__name__)

BLOCK = 256


@dataclass(frozen=True)
class ExperimentConfig:
    spec: TpstSpec
    snr_points: tuple[float, ...]
    snr_mode: SnrMode = "ebn0"
    master_seed: int = 0
    max_trials: int = 1000
    max_errors: int | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_points", tuple(float(s) for s in self.snr_points))
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if self.max_errors is not None and self.max_errors < 1:
            raise ValueError("max_errors must be >= 1 when given")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")

    def sigma(self, snr_db: float) -> float:
        return sigma_for(snr_db, self.snr_mode, self.spec.rate)

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)


@dataclass(frozen=True)
class FerRecord:
    snr_db: float
    trials: int
    frame_errors: int
    fer: float
    avg_list_size: float
    early_term_rate: float
    e2_count: int
    std_err: float = field(default=0.0)


@dataclass(frozen=True)
class BoundRecord:
    snr_db: float
    trials: int
    event_count: int
    estimate: float
    std_err: float
    k: int = 0
    l_max: int = 0

    @classmethod
    def from_counts(cls, snr_db: float, trials: int, events: int, k: int = 0, l_max: int = 0) -> "BoundRecord":
        p = events / trials
        return cls(snr_db, trials, events, p, math.sqrt(p * (1 - p) / trials), k, l_max)


# seed stream for threshold learning, so calibration never reuses the noise of a campaign
CALIBRATION_STREAM = 1


def trial_rng(master_seed: int, point: int, trial: int, stream: int = 0) -> np.random.Generator:
    key = [master_seed, point, trial] + ([stream] if stream else [])
    return np.random.default_rng(key)


# -- per-trial bodies (module level so worker processes can import them) --------


def _fer_trial(spec: TpstSpec, sigma: float, rng: np.random.Generator, _extra) -> tuple:
    u = rng.integers(0, 2, spec.k, dtype=np.uint8)
    c = encode_bits(u, spec)
    y = (1.0 - 2.0 * c) + sigma * rng.standard_normal(c.size)
    c_hat, _, _, used, early, ll, _ = scl_raw(y, spec, sigma)
    err = not np.array_equal(c_hat, c)
    e2 = err and ll > K.loglik(y, c, sigma)
    return int(err), int(used), int(early), int(e2)


def _interfered_layer0(spec: TpstSpec, sigma: float, rng: np.random.Generator):
    """Layer 0 over the binary-interference channel with i.u.d. c1."""
    b0 = spec.basic0
    u0 = rng.integers(0, 2, b0.info_len, dtype=np.uint8)
    v0 = K.encode_punctured(u0, b0.info_len, b0.memory, b0.tap_masks, b0.kept)
    c1 = rng.integers(0, 2, spec.n, dtype=np.uint8)
    c0 = v0 ^ (c1 & spec.s_diag)
    y = (1.0 - 2.0 * np.concatenate([c0, c1])) + sigma * rng.standard_normal(2 * spec.n)
    llr = K.depuncture(K.layer0_llr(y[: spec.n], y[spec.n:], spec.s_diag, sigma), b0.kept, b0.mother_len)
    return u0, llr


def _genie0_trial(spec: TpstSpec, sigma: float, rng: np.random.Generator, l_max: int) -> tuple:
    b0 = spec.basic0
    u0, llr = _interfered_layer0(spec, sigma, rng)
    rank = K.list_rank(llr, K.bits_to_info(u0), l_max, b0.out_pat, b0.memory, b0.info_len, b0.streams)
    return (int(rank),)


def _genie1_trial(spec: TpstSpec, sigma: float, rng: np.random.Generator, _extra) -> tuple:
    b1 = spec.basic1
    u1 = rng.integers(0, 2, b1.info_len, dtype=np.uint8)
    v1 = K.encode_punctured(u1, b1.info_len, b1.memory, b1.tap_masks, b1.kept)
    v0 = rng.integers(0, 2, spec.n, dtype=np.uint8)
    w0 = rng.integers(0, 2, spec.n, dtype=np.uint8)
    c1 = v1 ^ w0
    c0 = v0 ^ (c1 & spec.s_diag)
    y = (1.0 - 2.0 * np.concatenate([c0, c1])) + sigma * rng.standard_normal(2 * spec.n)
    lam = K.layer1_llr(y[: spec.n], y[spec.n:], v0, w0, spec.s_diag, sigma)
    _, info = K.viterbi_info(K.depuncture(lam, b1.kept, b1.mother_len), b1.out_pat, b1.memory, b1.info_len, b1.streams)
    return (int(info != K.bits_to_info(u1)),)


def _edf_trial(spec: TpstSpec, sigma: float, rng: np.random.Generator, _extra) -> tuple:
    u = rng.integers(0, 2, spec.k, dtype=np.uint8)
    c = encode_bits(u, spec)
    y = (1.0 - 2.0 * c) + sigma * rng.standard_normal(c.size)
    return (float(K.edf_value(y, c, sigma)),)


TRIALS: dict[str, Callable] = {
    "fer": _fer_trial,
    "genie0": _genie0_trial,
    "genie1": _genie1_trial,
    "edf": _edf_trial,
}


def _run_block(kind: str, spec: TpstSpec, sigma: float, seed: int, point: int,
               start: int, stop: int, extra, stream: int = 0) -> np.ndarray:
    body = TRIALS[kind]
    return np.array([body(spec, sigma, trial_rng(seed, point, t, stream), extra) for t in range(start, stop)],
                    dtype=np.float64)


def run_point(
    kind: str,
    config: ExperimentConfig,
    point: int,
    error_col: int | None = 0,
    extra=None,
    pool: ProcessPoolExecutor | None = None,
    stream: int = 0,
) -> np.ndarray:
    """Ordered per-trial outcome rows for one SNR point, truncated by the stop rule."""
    sigma = config.sigma(config.snr_points[point])
    rows: list[np.ndarray] = []
    errors = 0
    done = 0
    while done < config.max_trials:
        width = BLOCK * config.workers
        stop = min(config.max_trials, done + width)
        bounds = [(a, min(a + BLOCK, stop)) for a in range(done, stop, BLOCK)]
        args = [(kind, config.spec, sigma, config.master_seed, point, a, b, extra, stream) for a, b in bounds]
        if pool is None:
            blocks = [_run_block(*a) for a in args]
        else:
            blocks = list(pool.map(_run_block, *zip(*args)))
        block = np.concatenate(blocks)
        if config.max_errors is not None and error_col is not None:
            hits = np.cumsum(block[:, error_col] > 0) + errors
            reached = np.flatnonzero(hits >= config.max_errors)
            if reached.size:
                rows.append(block[: reached[0] + 1])
                break
            errors = int(hits[-1])
        rows.append(block)
        done = stop
    return np.concatenate(rows)


def _with_pool(config: ExperimentConfig, fn):
    if config.workers == 1:
        return fn(None)
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return fn(pool)


def simulate_fer(config: ExperimentConfig) -> list[FerRecord]:
    """End-to-end SCL decoding FER with list-size, early-termination and E2 statistics."""

    def go(pool):
        out = []
        for p, snr in enumerate(config.snr_points):
            rows = run_point("fer", config, p, 0, None, pool)
            n = len(rows)
            errs = int(rows[:, 0].sum())
            fer = errs / n
            out.append(FerRecord(
                snr_db=snr, trials=n, frame_errors=errs, fer=fer,
                avg_list_size=float(rows[:, 1].mean()), early_term_rate=float(rows[:, 2].mean()),
                e2_count=int(rows[:, 3].sum()), std_err=math.sqrt(fer * (1 - fer) / n),
            ))
            log.info("fer snr=%.2f trials=%d errors=%d", snr, n, errs)
        return out

    return _with_pool(config, go)


def genie_bound_layer0_sweep(config: ExperimentConfig, l_values: Sequence[int]) -> list[list[BoundRecord]]:
    """P(E0) for several list sizes from one set of trials; one inner list per SNR point.

    The stop rule, if any, is applied to the smallest list size (the most frequent event).
    """
    l_values = sorted(set(int(l) for l in l_values))
    if l_values[0] < 1:
        raise ValueError("list sizes must be >= 1")
    l_top = l_values[-1]

    def go(pool):
        out = []
        for p, snr in enumerate(config.snr_points):
            rows = run_point("genie0", config, p, None, l_top, pool)
            ranks = rows[:, 0]
            if config.max_errors is not None:
                miss = (ranks == 0) | (ranks > l_values[0])
                hit = np.flatnonzero(np.cumsum(miss) >= config.max_errors)
                if hit.size:
                    ranks = ranks[: hit[0] + 1]
            recs = [BoundRecord.from_counts(snr, len(ranks), int(((ranks == 0) | (ranks > l)).sum()),
                                            config.spec.k0, l) for l in l_values]
            out.append(recs)
        return out

    return _with_pool(config, go)


def genie_bound_layer0(config: ExperimentConfig, l_max: int | None = None) -> list[BoundRecord]:
    """Genie-aided layer-0 list error rate P(E0), one record per SNR point."""
    l_max = config.spec.l_max if l_max is None else l_max
    return [recs[0] for recs in genie_bound_layer0_sweep(config, [l_max])]


def genie_bound_layer1(config: ExperimentConfig) -> list[BoundRecord]:
    """Genie-aided layer-1 error rate P(E1) over the repetition channel."""

    def go(pool):
        out = []
        for p, snr in enumerate(config.snr_points):
            rows = run_point("genie1", config, p, 0, None, pool)
            out.append(BoundRecord.from_counts(snr, len(rows), int(rows[:, 0].sum()), config.spec.k1, 1))
        return out

    return _with_pool(config, go)


def ml_lower_bound(config: ExperimentConfig) -> list[BoundRecord]:
    """P(E2): frequency of decoding to a strictly more likely codeword (no early termination)."""
    cfg = config.replace(spec=config.spec.with_options(threshold=math.inf))
    return [
        BoundRecord.from_counts(r.snr_db, r.trials, r.e2_count, config.spec.k, config.spec.l_max)
        for r in simulate_fer(cfg)
    ]


def edf_samples(config: ExperimentConfig, stream: int = CALIBRATION_STREAM) -> np.ndarray:
    """EDF of the transmitted codeword, ``max_trials`` samples per SNR point, pooled."""

    def go(pool):
        return np.concatenate([run_point("edf", config, p, None, None, pool, stream)[:, 0]
                               for p in range(len(config.snr_points))])

    return _with_pool(config, go)


CALIBRATION_MARGIN = 1e-6


def threshold_from_samples(samples: np.ndarray, epsilon: float) -> float:
    """Largest sample value rejecting at most an ``epsilon`` fraction of ``samples``.

    Rejection means ``D <= T``. With fewer than one allowed rejection the result
    sits ``CALIBRATION_MARGIN`` below the minimum; a constant sample gives that
    constant minus the margin.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    d = np.sort(np.asarray(samples, np.float64))
    if d.size == 0:
        raise ValueError("no samples")
    if d[0] == d[-1]:
        return float(d[0] - CALIBRATION_MARGIN)
    r = int(math.floor(epsilon * d.size))
    while r > 0 and r < d.size and d[r] == d[r - 1]:
        r -= 1  # ties straddling the cut would reject more than allowed
    if r == 0:
        return float(d[0] - CALIBRATION_MARGIN)
    return float(d[r - 1])


def calibrate_threshold(config: ExperimentConfig, epsilon: float) -> float:
    """Off-line EDF threshold: the empirical epsilon-quantile of true-codeword EDFs."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return threshold_from_samples(edf_samples(config), epsilon)


# -- rate allocation ---------------------------------------------------------------


class InfeasibleAllocation(ValueError):
    """No table entry meets the design target; ``best_gap_db`` says how close it got."""

    def __init__(self, message: str, best_gap_db: float):
        super().__init__(message)
        self.best_gap_db = best_gap_db


@dataclass(frozen=True)
class Allocation:
    k0: int
    k1: int
    l_max: int
    layer1_snr: float
    layer0_snr: float

    @property
    def margin_db(self) -> float:
        return self.layer0_snr - self.layer1_snr


Curve = Sequence[tuple[float, float]]


def achieving_snr(curve: Curve | Iterable[BoundRecord], target_fer: float) -> float:
    """Lowest SNR at which an error-rate curve reaches ``target_fer`` (log-linear interpolation).

    Returns ``inf`` when the curve never gets there.
    """
    pts = sorted((r.snr_db, r.estimate) if isinstance(r, BoundRecord) else (float(r[0]), float(r[1]))
                 for r in curve)
    prev = None
    for snr, fer in pts:
        if fer <= target_fer:
            if prev is None or prev[1] <= 0 or fer <= 0:
                return snr
            s0, f0 = prev
            t = (math.log(f0) - math.log(target_fer)) / (math.log(f0) - math.log(fer))
            return s0 + t * (snr - s0)
        prev = (snr, fer)
    return math.inf


def _snr_of(entry, target_fer: float) -> float:
    if isinstance(entry, (int, float)):
        return float(entry)
    return achieving_snr(entry, target_fer)


def rate_allocate(
    layer1_table: Mapping[int, float | Curve],
    layer0_table: Mapping[tuple[int, int], float | Curve],
    k: int,
    target_fer: float,
    snr_budget: float | None = None,
    margin_db: float = 0.1,
) -> Allocation:
    """Pick (k0, k1, l_max) from genie-bound tables.

    Table values are achieving SNRs for ``target_fer`` or raw ``(snr, fer)``
    curves. Layer 1 gets the largest ``k1`` whose achieving SNR fits inside
    ``snr_budget`` (without a budget: the ``k1`` with the lowest achieving SNR).
    Layer 0 then gets ``k0 = k - k1`` and the smallest list size whose achieving
    SNR is within ``margin_db`` of layer 1's.
    """
    l1 = {int(k1): _snr_of(v, target_fer) for k1, v in layer1_table.items()}
    feasible = {k1: s for k1, s in l1.items() if math.isfinite(s) and 0 < k1 < k}
    if snr_budget is not None:
        feasible = {k1: s for k1, s in feasible.items() if s <= snr_budget}
    if not feasible:
        finite = [s for s in l1.values() if math.isfinite(s)]
        gap = (min(finite) - snr_budget) if finite and snr_budget is not None else math.inf
        raise InfeasibleAllocation(f"no layer-1 dimension reaches FER {target_fer:g} within the budget", gap)
    if snr_budget is not None:
        k1 = max(feasible)
    else:
        k1 = min(feasible, key=lambda kk: (feasible[kk], -kk))
    k0 = k - k1
    l0 = {int(l): _snr_of(v, target_fer) for (kk, l), v in layer0_table.items() if int(kk) == k0}
    if not l0:
        raise InfeasibleAllocation(f"layer-0 table has no entries for k0={k0}", math.inf)
    ok = sorted(l for l, s in l0.items() if s <= feasible[k1] + margin_db)
    if not ok:
        best = min(l0.values())
        raise InfeasibleAllocation(
            f"no list size for k0={k0} gets within {margin_db} dB of layer 1 "
            f"({feasible[k1]:.2f} dB); best layer-0 gap {best - feasible[k1]:.2f} dB",
            best - feasible[k1],
        )
    return Allocation(k0, k1, ok[0], feasible[k1], l0[ok[0]])


# -- CSV --------------------------------------------------------------------------

BOUND_COLUMNS = ["k", "l_max", "snr_db", "trials", "events", "estimate", "std_err"]


def write_bound_csv(path: str | Path, records: Iterable[BoundRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOUND_COLUMNS)
        for r in records:
            w.writerow([r.k, r.l_max, repr(r.snr_db), r.trials, r.event_count, repr(r.estimate), repr(r.std_err)])


def read_bound_csv(path: str | Path) -> list[BoundRecord]:
    with open(path, newline="") as fh:
        return [
            BoundRecord(float(row["snr_db"]), int(row["trials"]), int(row["events"]),
                        float(row["estimate"]), float(row["std_err"]), int(row["k"]), int(row["l_max"]))
            for row in csv.DictReader(fh)
        ]


def bound_tables(records: Iterable[BoundRecord]) -> dict:
    """Group records into ``{(k, l_max): [(snr, estimate), ...]}`` curves."""
    out: dict = {}
    for r in records:
        out.setdefault((r.k, r.l_max), []).append((r.snr_db, r.estimate))
    return out


def record_dict(rec) -> dict:
    return asdict(rec)
