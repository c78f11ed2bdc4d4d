"""Monte Carlo estimation of ergodic MIMO capacity under Rayleigh fast fading.

Channel entries are i.i.d. circularly symmetric complex Gaussian with unit
variance (real and imaginary parts each have variance 1/2).  The ergodic
capacity of an m x n channel at signal-to-noise ratio ``snr`` is

    E[ logdet(I + snr * H H^dagger) ]

with the expectation over H.  All rates in this module are in nats; report
layers convert to bits on output.

Draws come from counter-based Philox streams keyed by
``(seed, hop_index, block_index)``.  Work is split into fixed-size blocks and
per-block partial sums are combined in block order, so results are
bit-identical for any worker count and for any consumer that replays the same
blocks.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

#: Number of channel draws generated per RNG block.  Fixed so that the
#: partition of work into blocks (and hence the draws) never depends on the
#: requested sample count or worker count.
BLOCK_SIZE = 4096

_JITTER = 1e-12
_LOG2 = math.log(2.0)

_BASES = ("nats", "bits")


def rate_scale(log_base: str) -> float:
    """Multiplier taking a rate in nats to the requested base."""
    if log_base not in _BASES:
        raise ValueError(f"log_base must be one of {_BASES}, got {log_base!r}")
    return 1.0 if log_base == "nats" else 1.0 / _LOG2


@dataclass(frozen=True)
class ChannelSample:
    """One channel realization.

    Attributes:
        entries: Complex matrix of fading coefficients, shape (m, n).
        hop_index: Which hop's stream the draw came from.
        draw_index: Position of the draw within that stream.
    """

    entries: np.ndarray
    hop_index: int = 0
    draw_index: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _check_dims(m: int, n: int) -> None:
    if m < 0 or n < 0:
        raise ValueError(f"channel dimensions must be nonnegative, got ({m}, {n})")


def _check_seed(seed: int) -> None:
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")


def _block_rng(seed: int, hop_index: int, block_index: int) -> np.random.Generator:
    # spawn_key makes streams for distinct (hop, block) pairs independent
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(hop_index, block_index))
    return np.random.Generator(np.random.Philox(ss))


def sample_channel_block(
    m: int, n: int, seed: int, block_index: int, hop_index: int = 0
) -> np.ndarray:
    """Generate one full block of i.i.d. channel draws.

    Args:
        m: Receive dimension.
        n: Transmit dimension.
        seed: Base seed shared by every stream of the experiment.
        block_index: Which block of the stream to generate.
        hop_index: Stream selector; draws for distinct hops are independent.

    Returns:
        Complex array of shape (BLOCK_SIZE, m, n) with unit-variance entries.
    """
    _check_dims(m, n)
    _check_seed(seed)
    g = _block_rng(seed, hop_index, block_index)
    z = g.standard_normal((BLOCK_SIZE, m, n, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_channel(
    m: int, n: int, seed: int, draw_index: int = 0, hop_index: int = 0
) -> ChannelSample:
    """Return the draw at a given index of a stream.

    The draw is located inside its enclosing block, so
    ``sample_channel(m, n, s, i)`` agrees with the i-th matrix seen by any
    block-based consumer with the same seed and hop.
    """
    if draw_index < 0:
        raise ValueError(f"draw_index must be nonnegative, got {draw_index}")
    block, offset = divmod(draw_index, BLOCK_SIZE)
    entries = sample_channel_block(m, n, seed, block, hop_index)[offset]
    return ChannelSample(entries=entries, hop_index=hop_index, draw_index=draw_index)


def gram_logdet(channels: np.ndarray, snr: float, side: str = "auto") -> np.ndarray:
    """logdet(I + snr * H H^dagger) for a batch of channel matrices, in nats.

    The determinant is evaluated through the Gram matrix of the smaller side
    (the two orderings agree by Sylvester's identity), via a Cholesky
    factorization.  A failed factorization is retried once with a small
    diagonal jitter and logged; non-finite inputs are rejected.

    Args:
        channels: Array of shape (..., m, n).
        snr: Nonnegative signal-to-noise ratio.
        side: "auto" picks the smaller Gram side; "rows" forces the m x m
            receive-side Gram, "cols" the n x n transmit side.  The forced
            variants exist so consistency of the two routes can be checked.

    Returns:
        Array of shape (...,) of nonnegative rates in nats.
    """
    H = np.asarray(channels)
    if H.ndim < 2:
        raise ValueError("channels must have at least 2 dimensions")
    m, n = H.shape[-2:]
    batch_shape = H.shape[:-2]
    if snr < 0:
        raise ValueError(f"snr must be nonnegative, got {snr}")
    if m == 0 or n == 0 or snr == 0.0:
        return np.zeros(batch_shape)
    if not np.isfinite(H).all():
        raise ValueError("channel matrix contains non-finite entries")

    if side == "auto":
        use_rows = m <= n
    elif side == "rows":
        use_rows = True
    elif side == "cols":
        use_rows = False
    else:
        raise ValueError(f"side must be 'auto', 'rows' or 'cols', got {side!r}")

    Hc = H.conj()
    if use_rows:
        G = H @ np.swapaxes(Hc, -1, -2)
    else:
        G = np.swapaxes(Hc, -1, -2) @ H
    d = G.shape[-1]
    idx = np.arange(d)
    G = G * snr
    G[..., idx, idx] += 1.0
    if d == 1:
        return np.log(G[..., 0, 0].real)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        logger.warning(
            "Cholesky of I + snr*Gram failed; retrying with diagonal jitter %g", _JITTER
        )
        G[..., idx, idx] += _JITTER
        L = np.linalg.cholesky(G)
    diag = np.diagonal(L, axis1=-2, axis2=-1).real
    return 2.0 * np.sum(np.log(diag), axis=-1)


def logdet_capacity(
    channel: ChannelSample | np.ndarray, snr: float, log_base: str = "nats"
) -> float:
    """Instantaneous capacity of a single channel realization."""
    H = channel.entries if isinstance(channel, ChannelSample) else np.asarray(channel)
    return float(gram_logdet(H, snr)) * rate_scale(log_base)


@dataclass(frozen=True)
class CapacityEstimate:
    """Sample mean and standard error of an ergodic capacity, in nats."""

    mean: float
    std_error: float
    num_samples: int
    dims: tuple[int, int]
    snr: float

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "snr": self.snr,
            "num_samples": self.num_samples,
            "mean": self.mean,
            "std_error": self.std_error,
        }


def _num_blocks(num_samples: int) -> int:
    return -(-num_samples // BLOCK_SIZE)


def _block_bounds(block_index: int, num_samples: int) -> tuple[int, int]:
    lo = block_index * BLOCK_SIZE
    return lo, min(lo + BLOCK_SIZE, num_samples)


def _partial_stats(values: np.ndarray) -> tuple[int, float, float]:
    # np.sum uses pairwise summation; per-block partials are combined with
    # math.fsum so the final mean does not depend on how blocks were scheduled
    return len(values), float(np.sum(values)), float(np.sum(values * values))


def _combine_stats(partials: list[tuple[int, float, float]]) -> tuple[int, float, float]:
    """Combine ordered per-block (count, sum, sum of squares) partials."""
    n = sum(p[0] for p in partials)
    total = math.fsum(p[1] for p in partials)
    total_sq = math.fsum(p[2] for p in partials)
    mean = total / n
    if n > 1:
        var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return n, mean, se


def _stream_stats(values: np.ndarray) -> tuple[float, float]:
    """Mean / standard error of a value array, chunked exactly like the
    block-wise estimators so both paths agree bitwise on shared draws."""
    n = len(values)
    partials = []
    for b in range(_num_blocks(n)):
        lo, hi = _block_bounds(b, n)
        partials.append(_partial_stats(values[lo:hi]))
    _, mean, se = _combine_stats(partials)
    return mean, se


def _map_blocks(task, num_blocks: int, workers: int) -> list:
    """Run ``task(block_index)`` for every block, results in block order."""
    if workers <= 1:
        return [task(b) for b in range(num_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(num_blocks)))


def estimate_ergodic_capacity(
    m: int,
    n: int,
    snr: float,
    num_samples: int,
    seed: int,
    hop_index: int = 0,
    workers: int = 1,
) -> CapacityEstimate:
    """Monte Carlo estimate of the ergodic capacity of an m x n channel.

    Args:
        m: Receive dimension.
        n: Transmit dimension.
        snr: Nonnegative signal-to-noise ratio.
        num_samples: Number of channel draws, must be positive.
        seed: Stream seed.
        hop_index: Stream selector.
        workers: Thread count.  Output is bit-identical for any value.

    Returns:
        CapacityEstimate with mean and standard error in nats.  Degenerate
        cases (a zero dimension, or snr == 0) return an exact zero without
        sampling.
    """
    _check_dims(m, n)
    _check_seed(seed)
    if num_samples <= 0:
        raise ValueError(f"num_samples must be positive, got {num_samples}")
    if snr < 0:
        raise ValueError(f"snr must be nonnegative, got {snr}")
    if m == 0 or n == 0 or snr == 0.0:
        return CapacityEstimate(0.0, 0.0, num_samples, (m, n), snr)

    def task(b: int) -> tuple[int, float, float]:
        lo, hi = _block_bounds(b, num_samples)
        draws = sample_channel_block(m, n, seed, b, hop_index)[: hi - lo]
        return _partial_stats(gram_logdet(draws, snr))

    partials = _map_blocks(task, _num_blocks(num_samples), workers)
    total, mean, se = _combine_stats(partials)
    assert total == num_samples
    return CapacityEstimate(mean, se, num_samples, (m, n), snr)


def siso_capacity_oracle(snr: float) -> float:
    """Ergodic 1 x 1 capacity by quadrature, in nats.

    Integrates log(1 + snr*x) exp(-x) over x >= 0, the exact expectation for
    an exponentially distributed channel power.  Serves as an independent
    check on the Monte Carlo path.
    """
    if snr < 0:
        raise ValueError(f"snr must be nonnegative, got {snr}")
    if snr == 0.0:
        return 0.0
    val, err = integrate.quad(
        lambda x: math.log1p(snr * x) * math.exp(-x), 0.0, np.inf,
        epsabs=1e-10, limit=200,
    )
    if err > 1e-8:
        logger.warning("siso_capacity_oracle quadrature error %g at snr=%g", err, snr)
    return val


@dataclass(frozen=True)
class SamplePool:
    """A fixed set of max_dim x max_dim channel draws shared across estimates.

    Every capacity table derived from one pool sees the same realizations, so
    differences of table entries are common-random-number differences and
    structural inequalities between entries hold draw by draw.
    """

    max_dim: int
    num_samples: int
    seed: int
    hop_index: int
    draws: np.ndarray  # (num_samples, max_dim, max_dim) complex

    @classmethod
    def build(
        cls,
        max_dim: int,
        num_samples: int,
        seed: int,
        hop_index: int = 0,
        workers: int = 1,
    ) -> "SamplePool":
        if max_dim <= 0:
            raise ValueError(f"max_dim must be positive, got {max_dim}")
        if num_samples <= 0:
            raise ValueError(f"num_samples must be positive, got {num_samples}")
        _check_seed(seed)

        def task(b: int) -> np.ndarray:
            return sample_channel_block(max_dim, max_dim, seed, b, hop_index)

        blocks = _map_blocks(task, _num_blocks(num_samples), workers)
        draws = np.concatenate(blocks, axis=0)[:num_samples]
        return cls(max_dim, num_samples, seed, hop_index, draws)


def _window_values(draws: np.ndarray, m: int, n: int, snr: float) -> np.ndarray:
    """Per-draw m x n capacity values symmetrized over cyclic windows.

    For each pooled draw P the value is the average of
    logdet(I + snr * W W^dagger) over every m x n and n x m cyclic window of
    P (rows r..r+m-1, columns c..c+n-1, indices mod max_dim).  Averaging over
    the window group makes the entries of a table share exact structural
    relations on every draw:

      * (m, n) and (n, m) give the same value (the window sets are mirrors),
      * growing m or n can only add rows or columns to each window,
      * complementary row ranges of a column window partition it.

    Windows whose dimension equals max_dim are all equal up to a row or
    column rotation, which leaves the Gram spectrum unchanged; only one
    representative per rotation class is evaluated.
    """
    K = draws.shape[-1]
    orientations = [(m, n)] if m == n else [(m, n), (n, m)]
    pieces: list[tuple[int, np.ndarray]] = []
    for a, b in orientations:
        row_starts = [0] if a == K else list(range(K))
        col_starts = [0] if b == K else list(range(K))
        mult = (K // len(row_starts)) * (K // len(col_starts))
        for r in row_starts:
            rows = (r + np.arange(a)) % K
            for c in col_starts:
                cols = (c + np.arange(b)) % K
                if a == K and b == K:
                    W = draws
                else:
                    # advanced indexing reorders memory (draw axis becomes
                    # fastest); force C layout so the logdet kernel sees the
                    # same accumulation order as on freshly sampled blocks
                    W = np.ascontiguousarray(draws[:, rows[:, None], cols[None, :]])
                pieces.append((mult, gram_logdet(W, snr)))
    if len(pieces) == 1:
        # single representative: return the raw values so the full-size entry
        # is bitwise identical to a direct estimate on the same draws
        return pieces[0][1]
    total_weight = sum(w for w, _ in pieces)
    acc = np.zeros(len(draws))
    for w, vals in pieces:
        acc += w * vals
    return acc / total_weight


class CapacityTable:
    """Ergodic capacities for every dimension pair (m, n) with m, n <= max_dim.

    Entries are estimated from one shared pool of draws via cyclic-window
    symmetrization (see ``_window_values``), so on every single draw the table
    is symmetric, monotone in each dimension, and superadditive in the row
    split.  Index 0 rows and columns are exactly zero.

    Attributes:
        means: (max_dim+1, max_dim+1) array of entry means in nats.
        std_errors: matching standard errors.
        per_draw: optional (num_samples, max_dim+1, max_dim+1) array of the
            per-draw entry values; needed for common-random-number error bars
            and for draw-level property checks.
        pool: the SamplePool the table was built from, if retained.
    """

    def __init__(
        self,
        max_dim: int,
        snr: float,
        num_samples: int,
        seed: int,
        hop_index: int,
        means: np.ndarray,
        std_errors: np.ndarray,
        per_draw: np.ndarray | None = None,
        pool: SamplePool | None = None,
    ):
        self.max_dim = max_dim
        self.snr = snr
        self.num_samples = num_samples
        self.seed = seed
        self.hop_index = hop_index
        self.means = means
        self.std_errors = std_errors
        self.per_draw = per_draw
        self.pool = pool

    @classmethod
    def from_pool(
        cls, pool: SamplePool, snr: float, keep_per_draw: bool = True
    ) -> "CapacityTable":
        if snr < 0:
            raise ValueError(f"snr must be nonnegative, got {snr}")
        K = pool.max_dim
        N = pool.num_samples
        per_draw = np.zeros((N, K + 1, K + 1))
        means = np.zeros((K + 1, K + 1))
        ses = np.zeros((K + 1, K + 1))
        for m in range(1, K + 1):
            for n in range(1, m + 1):
                vals = _window_values(pool.draws, m, n, snr)
                per_draw[:, m, n] = vals
                # stats come from the contiguous array, not the strided
                # per_draw column: np.sum's pairwise order differs on
                # non-contiguous views, and the full-size entry must match a
                # direct block-wise estimate bit for bit
                means[m, n], ses[m, n] = _stream_stats(vals)
                if n != m:
                    per_draw[:, n, m] = vals  # symmetry is exact by sharing
                    means[n, m], ses[n, m] = means[m, n], ses[m, n]
        return cls(
            K, snr, N, pool.seed, pool.hop_index, means, ses,
            per_draw=per_draw if keep_per_draw else None,
            pool=pool,
        )

    def _check_entry(self, m: int, n: int) -> None:
        if not (0 <= m <= self.max_dim and 0 <= n <= self.max_dim):
            raise ValueError(
                f"entry ({m}, {n}) outside table range 0..{self.max_dim}"
            )

    def mean(self, m: int, n: int) -> float:
        self._check_entry(m, n)
        return float(self.means[m, n])

    def std_error(self, m: int, n: int) -> float:
        self._check_entry(m, n)
        return float(self.std_errors[m, n])

    def estimate(self, m: int, n: int) -> CapacityEstimate:
        self._check_entry(m, n)
        return CapacityEstimate(
            self.mean(m, n), self.std_error(m, n), self.num_samples, (m, n), self.snr
        )

    def as_dict(self) -> dict:
        entries = [
            {
                "dims": [m, n],
                "mean": self.mean(m, n),
                "std_error": self.std_error(m, n),
            }
            for m in range(self.max_dim + 1)
            for n in range(self.max_dim + 1)
        ]
        return {
            "schema": "relaycap/capacity-table/1",
            "max_dim": self.max_dim,
            "snr": self.snr,
            "num_samples": self.num_samples,
            "seed": self.seed,
            "hop_index": self.hop_index,
            "entries": entries,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CapacityTable":
        K = data["max_dim"]
        means = np.zeros((K + 1, K + 1))
        ses = np.zeros((K + 1, K + 1))
        for e in data["entries"]:
            m, n = e["dims"]
            means[m, n] = e["mean"]
            ses[m, n] = e["std_error"]
        return cls(
            K, data["snr"], data["num_samples"], data["seed"],
            data.get("hop_index", 0), means, ses,
        )

    @classmethod
    def from_json(cls, text: str) -> "CapacityTable":
        return cls.from_dict(json.loads(text))


def build_capacity_table(
    max_dim: int,
    snr: float,
    num_samples: int,
    seed: int,
    hop_index: int = 0,
    workers: int = 1,
    keep_per_draw: bool = True,
) -> CapacityTable:
    """Build a pool of shared draws and the capacity table over it."""
    pool = SamplePool.build(max_dim, num_samples, seed, hop_index, workers)
    return CapacityTable.from_pool(pool, snr, keep_per_draw=keep_per_draw)


class TableCache:
    """Capacity tables at several snr values over one shared pool."""

    def __init__(self, pool: SamplePool):
        self.pool = pool
        self._tables: dict[float, CapacityTable] = {}

    def at(self, snr: float) -> CapacityTable:
        key = float(snr)
        if key not in self._tables:
            self._tables[key] = CapacityTable.from_pool(self.pool, key)
        return self._tables[key]
