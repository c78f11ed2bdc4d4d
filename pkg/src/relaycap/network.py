"""Layered Gaussian relay networks and their cut values.

A network has a K-antenna source, D - 1 layers of K single-antenna relays,
and a K-antenna destination, with i.i.d. Rayleigh fading between consecutive
layers only.  A vertex cut is summarized by a profile (M_1, ..., M_{D-1})
counting the relays of each layer on the source side; its value is the sum of
the ergodic capacities of the per-hop blocks crossing the cut,

    sum_i C(K - M_{i+1}, M_i)      with M_0 = K, M_D = 0,

optionally minus a per-node penalty for counted relays.  Capacities are read
from a CapacityTable so that all cuts share the same channel draws.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .mimo import (
    CapacityEstimate,
    CapacityTable,
    _block_bounds,
    _combine_stats,
    _num_blocks,
    _partial_stats,
    _stream_stats,
    gram_logdet,
    sample_channel_block,
)

#: Cap on the brute-force cut enumeration, (K+1)**(D-1) profiles.
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class NetworkParams:
    """Shape and operating point of a layered relay network.

    Attributes:
        relays_per_layer: K, antennas at source and destination and relays in
            each intermediate layer.
        num_hops: D, number of hops from source to destination; D - 1 relay
            layers.
        power: Per-node transmit power.
        noise_var: Receiver noise variance.
        log_base: Base used by report layers, "nats" or "bits".  Internal
            computations are always in nats.
    """

    relays_per_layer: int
    num_hops: int
    power: float = 10.0
    noise_var: float = 1.0
    log_base: str = "nats"

    def __post_init__(self):
        if self.relays_per_layer <= 0:
            raise ValueError(
                f"relays_per_layer must be positive, got {self.relays_per_layer}"
            )
        if self.num_hops <= 0:
            raise ValueError(f"num_hops must be positive, got {self.num_hops}")
        if self.power < 0:
            raise ValueError(f"power must be nonnegative, got {self.power}")
        if self.noise_var <= 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if self.log_base not in ("nats", "bits"):
            raise ValueError(
                f"log_base must be 'nats' or 'bits', got {self.log_base!r}"
            )

    @property
    def snr(self) -> float:
        return self.power / self.noise_var


@dataclass(frozen=True)
class CutProfile:
    """Relay counts on the source side of a cut, one per relay layer."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"profile counts must be nonnegative, got {counts}")

    def __len__(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    @classmethod
    def all_source_side(cls, num_hops: int, relays_per_layer: int) -> "CutProfile":
        """Every relay on the source side: only the last hop crosses."""
        return cls((relays_per_layer,) * (num_hops - 1))

    @classmethod
    def all_destination_side(cls, num_hops: int) -> "CutProfile":
        """Every relay on the destination side: only the first hop crosses."""
        return cls((0,) * (num_hops - 1))


@dataclass(frozen=True)
class CutValue:
    """Value of one cut profile.

    Attributes:
        value: Sum of crossing-block capacities minus penalties, nats.
        std_error: Standard error.  Computed from per-draw values when the
            tables retain them (common random numbers), otherwise by adding
            per-block errors in quadrature.
        profile: The evaluated profile.
        per_block: ((m, n), capacity) for each hop's crossing block.
    """

    value: float
    std_error: float
    profile: CutProfile
    per_block: tuple[tuple[tuple[int, int], float], ...]

    def as_dict(self) -> dict:
        return {
            "profile": list(self.profile.counts),
            "value": self.value,
            "std_error": self.std_error,
            "per_block": [
                {"dims": list(dims), "capacity": cap} for dims, cap in self.per_block
            ],
        }


def _hop_tables(
    table: CapacityTable | list[CapacityTable], params: NetworkParams
) -> list[CapacityTable]:
    """Normalize a single shared table or a per-hop list, with checks."""
    D = params.num_hops
    tables = list(table) if isinstance(table, (list, tuple)) else [table] * D
    if len(tables) != D:
        raise ValueError(
            f"expected one capacity table or {D} per-hop tables, got {len(tables)}"
        )
    for t in tables:
        if t.max_dim < params.relays_per_layer:
            raise ValueError(
                f"table max_dim {t.max_dim} is smaller than relays_per_layer "
                f"{params.relays_per_layer}"
            )
    return tables


def _check_profile(profile: CutProfile, params: NetworkParams) -> None:
    K, D = params.relays_per_layer, params.num_hops
    if len(profile) != D - 1:
        raise ValueError(
            f"profile length {len(profile)} does not match num_hops {D} "
            f"(expected {D - 1} relay layers)"
        )
    if any(c > K for c in profile.counts):
        raise ValueError(
            f"profile counts {profile.counts} exceed relays_per_layer {K}"
        )


def _block_dims(profile: CutProfile, params: NetworkParams) -> list[tuple[int, int]]:
    K = params.relays_per_layer
    bounds = [K, *profile.counts, 0]
    return [(K - bounds[i + 1], bounds[i]) for i in range(params.num_hops)]


def _shared_pool(tables: list[CapacityTable]) -> bool:
    """True when every table carries per-draw values over the same draws."""
    if any(t.per_draw is None for t in tables):
        return False
    first = tables[0]
    return all(
        t.num_samples == first.num_samples
        and t.seed == first.seed
        and t.hop_index == first.hop_index
        for t in tables
    )


def cut_profile_draws(
    profile: CutProfile,
    params: NetworkParams,
    tables: list[CapacityTable],
    node_penalty: float = 0.0,
) -> np.ndarray:
    """Per-draw cut values across shared draws (tables must retain them)."""
    if not _shared_pool(tables):
        raise ValueError("per-draw cut values need tables built over shared draws")
    acc = np.zeros(tables[0].num_samples)
    for i, (m, n) in enumerate(_block_dims(profile, params)):
        acc += tables[i].per_draw[:, m, n]
    return acc - node_penalty * sum(profile.counts)


def cut_value(
    profile: CutProfile,
    params: NetworkParams,
    table: CapacityTable | list[CapacityTable],
    node_penalty: float = 0.0,
) -> CutValue:
    """Evaluate one cut profile against a capacity table.

    Args:
        profile: Relay counts on the source side, length num_hops - 1.
        params: Network shape.
        table: Shared CapacityTable, or one table per hop (hop i read from
            table i; the per-hop form supports an unquantized final hop).
        node_penalty: Rate subtracted per counted relay, nats.

    Returns:
        CutValue; its value sums the per-hop block capacities from last hop
        to first, matching the dynamic program's accumulation order exactly.
    """
    _check_profile(profile, params)
    tables = _hop_tables(table, params)
    dims = _block_dims(profile, params)
    per_block = tuple(
        ((m, n), tables[i].mean(m, n)) for i, (m, n) in enumerate(dims)
    )
    total = 0.0
    for i in reversed(range(params.num_hops)):
        contrib = per_block[i][1]
        if 1 <= i + 1 <= params.num_hops - 1:
            contrib -= node_penalty * profile.counts[i]
        total = contrib + total
    if _shared_pool(tables):
        draws = cut_profile_draws(profile, params, tables)
        _, se = _stream_stats(draws)
    else:
        se = math.sqrt(
            sum(tables[i].std_error(m, n) ** 2 for i, (m, n) in enumerate(dims))
        )
    return CutValue(total, se, profile, per_block)


def _edge_weight(
    tables: list[CapacityTable],
    params: NetworkParams,
    node_penalty: float,
    hop: int,
    cur: int,
    nxt: int,
) -> float:
    """Contribution of hop ``hop`` when M_hop = cur and M_{hop+1} = nxt."""
    K = params.relays_per_layer
    w = float(tables[hop].means[K - nxt, cur])
    if hop + 1 <= params.num_hops - 1:
        w -= node_penalty * nxt
    return w


def min_cut_dp(
    params: NetworkParams,
    table: CapacityTable | list[CapacityTable],
    node_penalty: float = 0.0,
) -> tuple[float, CutProfile]:
    """Minimize the penalized cut value over all profiles by dynamic program.

    The objective is sum_i C(K - M_{i+1}, M_i) - node_penalty * sum_i M_i
    with M_0 = K and M_D = 0.  Runs in O(D * K^2) table lookups.  Among
    minimizing profiles the lexicographically smallest is returned; floating
    point sums are associated exactly as in ``cut_value`` so the result
    matches brute-force enumeration bitwise.

    Returns:
        (minimum value in nats, argmin profile).
    """
    K, D = params.relays_per_layer, params.num_hops
    tables = _hop_tables(table, params)

    def states(layer: int) -> list[int]:
        if layer == 0:
            return [K]
        if layer == D:
            return [0]
        return list(range(K + 1))

    # backward pass: g[layer][m] = min remaining value from (layer, m)
    g: dict[int, dict[int, float]] = {D: {0: 0.0}}
    for layer in reversed(range(D)):
        g[layer] = {}
        for m in states(layer):
            best = None
            for nxt in states(layer + 1):
                v = _edge_weight(tables, params, node_penalty, layer, m, nxt) + g[layer + 1][nxt]
                if best is None or v < best:
                    best = v
            g[layer][m] = best

    # forward reconstruction; picking the smallest next state at each layer
    # yields the lexicographically smallest argmin
    profile = []
    cur = K
    for layer in range(D):
        for nxt in states(layer + 1):
            v = _edge_weight(tables, params, node_penalty, layer, cur, nxt) + g[layer + 1][nxt]
            if v == g[layer][cur]:
                break
        else:  # pragma: no cover - reconstruction always finds its own minimum
            raise RuntimeError("min-cut reconstruction failed")
        if layer + 1 <= D - 1:
            profile.append(nxt)
        cur = nxt
    return g[0][K], CutProfile(tuple(profile))


def brute_force_min_cut(
    params: NetworkParams,
    table: CapacityTable | list[CapacityTable],
    node_penalty: float = 0.0,
) -> tuple[float, CutProfile]:
    """Exhaustive minimum over all (K+1)**(D-1) profiles.

    Guard: raises ValueError when the enumeration would exceed
    BRUTE_FORCE_LIMIT profiles.  Sums are accumulated from the last hop to
    the first, like the dynamic program, so the two agree bitwise.
    """
    K, D = params.relays_per_layer, params.num_hops
    count = (K + 1) ** (D - 1)
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force would enumerate {count} profiles "
            f"(limit {BRUTE_FORCE_LIMIT}); use min_cut_dp"
        )
    tables = _hop_tables(table, params)
    best = None
    best_profile = None
    for counts in itertools.product(range(K + 1), repeat=D - 1):
        bounds = (K, *counts, 0)
        total = 0.0
        for hop in reversed(range(D)):
            total = (
                _edge_weight(tables, params, node_penalty, hop, bounds[hop], bounds[hop + 1])
                + total
            )
        if best is None or total < best:
            best = total
            best_profile = counts
    return best, CutProfile(best_profile)


@dataclass(frozen=True)
class PropertyReport:
    """Draw-level structural checks of a capacity table.

    All quantities are worst cases over every draw of the table's pool and
    every admissible dimension triple up to ``max_dim``:

      * symmetry_error: |logdet via receive-side Gram of W - same of
        W^dagger| for x by y corners W of the pooled draws,
      * monotonicity_violation: max of C_draw(x, y) - C_draw(z, y) for x < z
        (growing a dimension must not lose rate),
      * split_violation: max of C_draw(K, y) - C_draw(x, y) - C_draw(rest, y)
        for complementary row blocks (the split must not beat the whole).

    Negative violations are reported as observed (no clamping); the table
    passes when every worst case is at most ``tolerance``.
    """

    symmetry_error: float
    monotonicity_violation: float
    split_violation: float
    num_draws: int
    max_dim: int
    snr: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "symmetry_error": self.symmetry_error,
            "monotonicity_violation": self.monotonicity_violation,
            "split_violation": self.split_violation,
            "num_draws": self.num_draws,
            "max_dim": self.max_dim,
            "snr": self.snr,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def check_capacity_properties(
    table: CapacityTable,
    max_dim: int | None = None,
    tolerance: float = 1e-9,
) -> PropertyReport:
    """Verify symmetry, monotonicity and split superadditivity per draw.

    Checks run on the raw pooled draws (corner submatrices, both Gram
    orderings computed independently), not on the symmetrized table entries,
    so they exercise the logdet kernel itself.  Requires a table whose pool
    was retained.

    Raises:
        ValueError: if the table lacks shared draws.
    """
    if table.pool is None:
        raise ValueError("property checks need a table built with shared draws")
    K = table.pool.max_dim if max_dim is None else max_dim
    if not (1 <= K <= table.pool.max_dim):
        raise ValueError(f"max_dim must be in 1..{table.pool.max_dim}, got {max_dim}")
    P = table.pool.draws
    snr = table.snr

    tops = {}
    for x in range(K + 1):
        for y in range(1, K + 1):
            tops[(x, y)] = gram_logdet(P[:, :x, :y], snr)

    sym_err = 0.0
    for x in range(1, K + 1):
        for y in range(1, K + 1):
            W = P[:, :x, :y]
            via_rows = gram_logdet(W, snr, side="rows")
            via_cols = gram_logdet(W, snr, side="cols")
            sym_err = max(sym_err, float(np.max(np.abs(via_rows - via_cols))))

    mono = -math.inf
    for y in range(1, K + 1):
        for x in range(K):
            for z in range(x + 1, K + 1):
                mono = max(mono, float(np.max(tops[(x, y)] - tops[(z, y)])))

    split = -math.inf
    for y in range(1, K + 1):
        whole = tops[(K, y)]
        for x in range(K + 1):
            bottom = gram_logdet(P[:, x:, :y], snr)
            split = max(split, float(np.max(whole - tops[(x, y)] - bottom)))

    passed = (
        sym_err <= tolerance and mono <= tolerance and split <= tolerance
    )
    return PropertyReport(
        sym_err, mono, split, table.pool.num_samples, K, snr, tolerance, passed
    )


def node_cut_value_mc(
    params: NetworkParams,
    layer_subsets: list[set[int] | frozenset[int]],
    num_samples: int,
    seed: int,
) -> CapacityEstimate:
    """Monte Carlo value of an explicit node-level cut.

    Args:
        params: Network shape; relays are indexed 0..K-1 within each layer.
        layer_subsets: For each relay layer 1..D-1, the indices of relays on
            the source side of the cut.  The source's antennas are always on
            the source side and the destination's on the other.
        num_samples: Channel draws per hop.
        seed: Seed; hop i uses stream hop_index = i, independent across hops.

    Returns:
        CapacityEstimate of the crossing-block capacity sum.  ``dims`` holds
        the total (receive, transmit) sizes across hops.
    """
    K, D = params.relays_per_layer, params.num_hops
    if len(layer_subsets) != D - 1:
        raise ValueError(
            f"expected {D - 1} relay-layer subsets, got {len(layer_subsets)}"
        )
    subsets = [frozenset(range(K))]  # source side of layer 0: all antennas
    for s in layer_subsets:
        s = frozenset(int(i) for i in s)
        if any(i < 0 or i >= K for i in s):
            raise ValueError(f"relay indices must be in 0..{K - 1}, got {sorted(s)}")
        subsets.append(s)
    subsets.append(frozenset())  # destination contributes no source-side nodes

    cols = [sorted(subsets[i]) for i in range(D)]
    rows = [sorted(set(range(K)) - subsets[i + 1]) for i in range(D)]
    if num_samples <= 0:
        raise ValueError(f"num_samples must be positive, got {num_samples}")

    partials = []
    for b in range(_num_blocks(num_samples)):
        lo, hi = _block_bounds(b, num_samples)
        acc = np.zeros(hi - lo)
        for hop in range(D):
            if not rows[hop] or not cols[hop]:
                continue
            draws = sample_channel_block(K, K, seed, b, hop_index=hop)[: hi - lo]
            W = draws[:, np.asarray(rows[hop])[:, None], np.asarray(cols[hop])[None, :]]
            acc += gram_logdet(W, params.snr)
        partials.append(_partial_stats(acc))
    total, mean, se = _combine_stats(partials)
    dims = (sum(len(r) for r in rows), sum(len(c) for c in cols))
    return CapacityEstimate(mean, se, num_samples, dims, params.snr)
