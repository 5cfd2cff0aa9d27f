"""Monte-Carlo symbol-error-rate simulation over random MIMO channels.

Channels are drawn per trial, noise per frame.  Every trial consumes its
own counter-based random stream keyed by (seed, trial index), so serial
and parallel executions produce bit-identical results and trials can be
merged in any order.  The ML brute-force detector serves as the
performance oracle.
"""

import concurrent.futures
import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .equalize import EqualizerSpec, build_detector, detect_block
from .model import (
    Constellation,
    MimoChannel,
    complex_matrix_to_real,
    make_ask_constellation,
)

ML_ORACLE_ID = "ml"
_ML_SEARCH_LIMIT = 10**6
_ML_CHUNK = 1 << 17

# SNR convention: snr_db = 10 log10(symbol_var * n_tx / noise_var) with
# n_tx counting complex transmit antennas and the variances per real
# component.  Total transmit energy over one complex symbol vector is
# then snr * noise_var referred to one complex noise component.
SNR_DEFINITION = "snr_db = 10*log10(symbol_var * n_tx / noise_var)"


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; dimensions count complex antennas."""

    n_tx: int
    n_rx: int
    order: int
    snr_db: tuple
    trials: int
    frames_per_channel: int
    seed: int
    specs: tuple
    oracle: bool = False

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < self.n_tx:
            raise ValueError(
                f"need 1 <= n_tx <= n_rx, got n_tx={self.n_tx}, n_rx={self.n_rx}"
            )
        snrs = tuple(float(s) for s in self.snr_db)
        if len(snrs) == 0 or any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("snr_db must be a non-empty strictly ascending sequence")
        if self.trials < 1 or self.frames_per_channel < 1:
            raise ValueError("trials and frames_per_channel must be >= 1")
        specs = tuple(self.specs)
        if not specs:
            raise ValueError("at least one equalizer spec is required")
        ids = [s.spec_id for s in specs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate equalizer specs: {ids}")
        make_ask_constellation(self.order)  # validates the order
        object.__setattr__(self, "snr_db", snrs)
        object.__setattr__(self, "specs", specs)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {
            "n_tx", "n_rx", "order", "snr_db", "trials",
            "frames_per_channel", "seed", "specs", "oracle",
        }
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        specs = tuple(EqualizerSpec.from_dict(d) for d in data["specs"])
        return cls(
            n_tx=int(data["n_tx"]),
            n_rx=int(data["n_rx"]),
            order=int(data["order"]),
            snr_db=tuple(data["snr_db"]),
            trials=int(data["trials"]),
            frames_per_channel=int(data["frames_per_channel"]),
            seed=int(data["seed"]),
            specs=specs,
            oracle=bool(data.get("oracle", False)),
        )


@dataclass(frozen=True)
class SimPoint:
    """Error counts for one (detector, SNR) cell."""

    spec_id: str
    snr_db: float
    symbols: int
    errors: int
    frames: int
    vector_errors: int

    @property
    def ser(self) -> float:
        return self.errors / self.symbols

    @property
    def ci95(self) -> float:
        p = self.ser
        return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / self.symbols)


@dataclass
class SimResult:
    """All cells of a finished run plus per-detector clip counts."""

    points: list
    clipped: dict
    meta: dict = field(default_factory=dict)

    def point(self, spec_id: str, snr_db: float) -> SimPoint:
        for p in self.points:
            if p.spec_id == spec_id and p.snr_db == snr_db:
                return p
        raise KeyError(f"no cell for ({spec_id!r}, {snr_db})")

    def ser_curve(self, spec_id: str):
        pts = [p for p in self.points if p.spec_id == spec_id]
        return np.array([p.snr_db for p in pts]), np.array([p.ser for p in pts])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial; independent of worker layout."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, trial))))


def draw_channel(
    rng: np.random.Generator,
    n_rx: int,
    n_tx: int,
    symbol_var: float = 1.0,
    noise_var: float = 1.0,
) -> MimoChannel:
    """Draw an iid circularly-symmetric complex channel in real form.

    Entries have unit complex variance (1/2 per real part); the returned
    real model has dimensions (2 n_rx, 2 n_tx).  Rank-deficient draws
    (probability zero) are redrawn.
    """
    while True:
        hc = (rng.normal(size=(n_rx, n_tx)) + 1j * rng.normal(size=(n_rx, n_tx))) / np.sqrt(2.0)
        try:
            return MimoChannel(
                matrix=complex_matrix_to_real(hc),
                noise_var=noise_var,
                symbol_var=symbol_var,
            )
        except ValueError:
            continue


def ml_bruteforce_detect(
    matrix: np.ndarray, observation: np.ndarray, constellation: Constellation
) -> np.ndarray:
    """Maximum-likelihood detection by exhaustive search.

    Minimizes the Euclidean distance over every constellation vector; ties
    resolve to the lexicographically smallest candidate (points ascending,
    first component most significant).  Raises when the search space
    exceeds 10^6 candidates.
    """
    y = np.asarray(observation, dtype=float)
    return _ml_detect_block(matrix, y[:, None], constellation)[:, 0]


def _ml_detect_block(matrix, observations, constellation) -> np.ndarray:
    h = np.asarray(matrix, dtype=float)
    ys = np.asarray(observations, dtype=float)
    n = h.shape[1]
    total = constellation.order**n
    if total > _ML_SEARCH_LIMIT:
        raise ValueError(
            f"ML search space {constellation.order}^{n} = {total} exceeds {_ML_SEARCH_LIMIT}"
        )
    grids = np.meshgrid(*([constellation.points] * n), indexing="ij")
    cands = np.stack(grids, axis=-1).reshape(-1, n)
    n_frames = ys.shape[1]
    best_val = np.full(n_frames, np.inf)
    best_idx = np.zeros(n_frames, dtype=np.int64)
    for start in range(0, total, _ML_CHUNK):
        chunk = cands[start : start + _ML_CHUNK]
        images = chunk @ h.T
        # ||y - s||^2 up to the frame-constant ||y||^2
        d = (images**2).sum(axis=1)[:, None] - 2.0 * (images @ ys)
        k = np.argmin(d, axis=0)
        val = d[k, np.arange(n_frames)]
        better = val < best_val  # strict: earlier (lexicographic) candidate wins ties
        best_val[better] = val[better]
        best_idx[better] = k[better] + start
    return cands[best_idx].T.copy()


def run_monte_carlo(config: SimConfig, workers: int = 1) -> SimResult:
    """Run the full trial grid and aggregate counters.

    ``workers`` > 1 distributes trials over processes; because every trial
    owns a (seed, trial)-keyed stream and integer counters merge
    commutatively, the result is bit-identical for any worker count.
    """
    start = time.perf_counter()
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    ids = _result_ids(config)
    if workers == 1:
        outcomes = [_run_trial(config, t) for t in range(config.trials)]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(_run_trial_args, [(config, t) for t in range(config.trials)], chunksize=8)
            )
    errors = np.zeros((len(ids), len(config.snr_db)), dtype=np.int64)
    vec_errors = np.zeros_like(errors)
    clipped = np.zeros(len(ids), dtype=np.int64)
    redraws = 0
    for trial_err, trial_vec, trial_clip, trial_redraws in outcomes:
        errors += trial_err
        vec_errors += trial_vec
        clipped += trial_clip
        redraws += trial_redraws
    n_real = 2 * config.n_tx
    frames_total = config.trials * config.frames_per_channel
    points = [
        SimPoint(
            spec_id=ids[i],
            snr_db=config.snr_db[j],
            symbols=frames_total * n_real,
            errors=int(errors[i, j]),
            frames=frames_total,
            vector_errors=int(vec_errors[i, j]),
        )
        for i in range(len(ids))
        for j in range(len(config.snr_db))
    ]
    meta = {
        "seed": config.seed,
        "snr_definition": SNR_DEFINITION,
        "channel_redraws": redraws,
        "wall_clock_s": time.perf_counter() - start,
        "workers": workers,
    }
    return SimResult(
        points=points,
        clipped={ids[i]: int(clipped[i]) for i in range(len(ids))},
        meta=meta,
    )


def _result_ids(config: SimConfig):
    ids = [s.spec_id for s in config.specs]
    if config.oracle:
        ids.append(ML_ORACLE_ID)
    return ids


def _run_trial_args(args):
    return _run_trial(*args)


def _run_trial(config: SimConfig, trial: int):
    rng = trial_rng(config.seed, trial)
    constellation = make_ask_constellation(config.order)
    sv = constellation.variance
    n_specs = len(config.specs)
    n_ids = n_specs + (1 if config.oracle else 0)
    errors = np.zeros((n_ids, len(config.snr_db)), dtype=np.int64)
    vec_errors = np.zeros_like(errors)
    clipped = np.zeros(n_ids, dtype=np.int64)

    redraws = 0
    while True:
        channel = draw_channel(rng, config.n_rx, config.n_tx, symbol_var=sv)
        try:
            detectors = []
            for j, snr in enumerate(config.snr_db):
                noise_var = sv * config.n_tx / (10.0 ** (snr / 10.0))
                ch = replace(channel, noise_var=noise_var)
                detectors.append([build_detector(spec, ch) for spec in config.specs])
        except (ValueError, ArithmeticError):
            # Reduction or factorization failed for this draw; count and redraw.
            redraws += 1
            continue
        break

    n_real_tx = 2 * config.n_tx
    frames = config.frames_per_channel
    h = channel.matrix
    for j, snr in enumerate(config.snr_db):
        noise_var = sv * config.n_tx / (10.0 ** (snr / 10.0))
        idx = rng.integers(0, config.order, size=(n_real_tx, frames))
        sent = constellation.points[idx]
        noise = rng.normal(0.0, np.sqrt(noise_var), size=(2 * config.n_rx, frames))
        received = h @ sent + noise
        for i, det in enumerate(detectors[j]):
            a_hat, _, nclip = detect_block(det, received, constellation)
            wrong = a_hat != sent
            errors[i, j] += int(wrong.sum())
            vec_errors[i, j] += int(wrong.any(axis=0).sum())
            clipped[i] += nclip
        if config.oracle:
            a_ml = _ml_detect_block(h, received, constellation)
            wrong = a_ml != sent
            errors[n_specs, j] += int(wrong.sum())
            vec_errors[n_specs, j] += int(wrong.any(axis=0).sum())
    return errors, vec_errors, clipped, redraws


def emit_results(result: SimResult, path: str) -> None:
    """Write one CSV row per (detector, SNR) cell.

    Floats are written in repr form so a parse-back reproduces the
    in-memory values exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["spec_id", "snr_db", "symbols", "errors", "ser", "ci95"])
        for p in result.points:
            writer.writerow(
                [p.spec_id, repr(p.snr_db), p.symbols, p.errors, repr(p.ser), repr(p.ci95)]
            )


@dataclass(frozen=True)
class ReductionDelta:
    """Paired SER difference (original minus augmented target) at one SNR."""

    snr_db: float
    ser_original: float
    ser_augmented: float
    delta: float
    ci95: float


@dataclass
class ReductionComparison:
    result: SimResult
    deltas: list


def compare_reduction_targets(config: SimConfig, workers: int = 1) -> ReductionComparison:
    """Reduction-aided MMSE DFE with original- vs augmented-matrix reduction.

    Both detectors run on identical channel and noise realizations (common
    random numbers).  The delta confidence interval combines the two
    binomial variances and is conservative because it ignores the positive
    coupling induced by the shared frames.
    """
    pair = (
        EqualizerSpec.from_dict(
            {"structure": "dfe", "criterion": "mmse", "lra": True, "reduction_target": "orig"}
        ),
        EqualizerSpec.from_dict(
            {"structure": "dfe", "criterion": "mmse", "lra": True, "reduction_target": "aug"}
        ),
    )
    config = replace(config, specs=pair)
    result = run_monte_carlo(config, workers=workers)
    deltas = []
    for snr in config.snr_db:
        p_orig = result.point(pair[0].spec_id, snr)
        p_aug = result.point(pair[1].spec_id, snr)
        ci = math.sqrt(p_orig.ci95**2 + p_aug.ci95**2)
        deltas.append(
            ReductionDelta(
                snr_db=snr,
                ser_original=p_orig.ser,
                ser_augmented=p_aug.ser,
                delta=p_orig.ser - p_aug.ser,
                ci95=ci,
            )
        )
    return ReductionComparison(result=result, deltas=deltas)
