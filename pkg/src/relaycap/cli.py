"""Command line interface.

Subcommands: capacity, mincut, rate, sweep, verify, line.  Every run is
driven by a fully resolved ExperimentConfig; precedence is package defaults,
then a --config JSON file, then explicit flags.  Outputs embed the resolved
config, and identical configs produce byte-identical output for any worker
count.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field

from . import line as line_mod
from . import mimo, network, rates

SUBCOMMANDS = ("capacity", "mincut", "rate", "sweep", "verify", "line")

#: Mandated sweep / rate row layout.
RATE_HEADER = "K,D,snr,q,upper,lower,gap,thm_bound,prior_cf_bound,alignment_bound,std_error"

_DEFAULTS: dict = {
    "K": 2,
    "D": (4,),
    "snr": (10.0,),
    "q": None,
    "q_policy": ("fixed_1", "depth_matched"),
    "q_grid": None,
    "num_samples": 100000,
    "seed": 0,
    "log_base": "nats",
    "out": None,
    "format": "csv",
    "workers": 1,
    "penalty": 0.0,
    "m": None,
    "n": None,
    "gains": None,
    "max_dim": 4,
    "mode": "per_cut_exact",
    "destination_quantizes": True,
}

# verify exercises small dimensions across a spread of snrs by default
_VERIFY_DEFAULTS = {"snr": (0.1, 1.0, 10.0), "num_samples": 10000}

_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """A config key failed validation; the message names the key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one CLI run.

    ``D``, ``snr``, ``q_policy`` and list-like fields are tuples; single
    values are singleton tuples.  ``explicit`` records which keys were given
    by the user rather than defaulted.  ``explicit``, ``workers`` and ``out``
    are excluded from equality and from the echoed config: they control how
    and where results are produced, never what they are.
    """

    subcommand: str
    K: int
    D: tuple[int, ...]
    snr: tuple[float, ...]
    q: float | None
    q_policy: tuple[str, ...]
    q_grid: tuple[float, ...] | None
    num_samples: int
    seed: int
    log_base: str
    out: str | None = field(compare=False)
    format: str
    workers: int = field(compare=False)
    penalty: float
    m: int | None
    n: int | None
    gains: tuple[float, ...] | None
    max_dim: int
    mode: str
    destination_quantizes: bool
    explicit: frozenset = field(default_factory=frozenset, compare=False)

    def as_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            if f.name in ("explicit", "workers", "out"):
                continue
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d

    def single_depth(self) -> int:
        if len(self.D) != 1:
            raise ConfigError("D", f"this subcommand needs a single depth, got {list(self.D)}")
        return self.D[0]


def _as_int(key: str, v, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        try:
            iv = int(str(v))
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected an integer, got {v!r}") from None
    else:
        iv = v
    if minimum is not None and iv < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {iv}")
    return iv


def _as_float(key: str, v, positive: bool = False, nonnegative: bool = False) -> float:
    try:
        fv = float(v)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {v!r}") from None
    if not math.isfinite(fv):
        raise ConfigError(key, f"must be finite, got {fv}")
    if positive and not fv > 0:
        raise ConfigError(key, f"must satisfy the constraint > 0, got {fv}")
    if nonnegative and fv < 0:
        raise ConfigError(key, f"must be >= 0, got {fv}")
    return fv


def _as_tuple(v) -> tuple:
    if isinstance(v, (list, tuple)):
        return tuple(v)
    if isinstance(v, str) and "," in v:
        return tuple(t for t in v.split(",") if t != "")
    return (v,)


def _as_choice(key: str, v, choices: tuple[str, ...]) -> str:
    if v not in choices:
        raise ConfigError(key, f"must be one of {choices}, got {v!r}")
    return v


def validate_config(data: dict, subcommand: str | None = None) -> ExperimentConfig:
    """Resolve a raw config dict into an ExperimentConfig.

    Unknown keys and constraint violations raise ConfigError naming the key.
    An empty dict is valid and yields all defaults.  ``subcommand`` given by
    the caller must agree with one present in the data.
    """
    data = dict(data)
    ssub = data.pop("subcommand", None)
    if ssub is not None:
        ssub = _as_choice("subcommand", ssub, SUBCOMMANDS)
    if subcommand is not None and ssub is not None and subcommand != ssub:
        raise ConfigError(
            "subcommand", f"config says {ssub!r} but the command line says {subcommand!r}"
        )
    sub = subcommand or ssub or "rate"

    unknown = set(data) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    explicit = frozenset(data) | ({"subcommand"} if ssub is not None else frozenset())

    merged = dict(_DEFAULTS)
    if sub == "verify":
        merged.update({k: v for k, v in _VERIFY_DEFAULTS.items() if k not in data})
    merged.update({k: v for k, v in data.items() if v is not None})

    K = _as_int("K", merged["K"], minimum=1)
    D = tuple(_as_int("D", d, minimum=1) for d in _as_tuple(merged["D"]))
    snr = tuple(_as_float("snr", s, nonnegative=True) for s in _as_tuple(merged["snr"]))
    q = merged["q"]
    if q is not None:
        q = _as_float("q", q, positive=True)
    q_policy = tuple(
        rates.resolve_policy(str(p)) for p in _as_tuple(merged["q_policy"])
    )
    q_grid = merged["q_grid"]
    if q_grid is not None:
        q_grid = tuple(_as_float("q_grid", g, positive=True) for g in _as_tuple(q_grid))
        if not q_grid:
            raise ConfigError("q_grid", "must be nonempty when given")
    gains = merged["gains"]
    if gains is not None:
        gains = tuple(_as_float("gains", g, nonnegative=True) for g in _as_tuple(gains))
        if not gains:
            raise ConfigError("gains", "must be nonempty when given")
    out = merged["out"]
    if out is not None and not isinstance(out, str):
        raise ConfigError("out", f"expected a path string, got {out!r}")
    dq = merged["destination_quantizes"]
    if not isinstance(dq, bool):
        raise ConfigError("destination_quantizes", f"expected true or false, got {dq!r}")

    if sub == "line" and gains is not None:
        if "D" in data:
            if len(D) != 1 or D[0] != len(gains):
                raise ConfigError(
                    "gains", f"length {len(gains)} does not match D={list(D)}"
                )
        else:
            D = (len(gains),)

    m = merged["m"]
    n = merged["n"]
    cfg = ExperimentConfig(
        subcommand=sub,
        K=K,
        D=D,
        snr=snr,
        q=q,
        q_policy=q_policy,
        q_grid=q_grid,
        num_samples=_as_int("num_samples", merged["num_samples"], minimum=1),
        seed=_as_int("seed", merged["seed"], minimum=0),
        log_base=_as_choice("log_base", merged["log_base"], ("nats", "bits")),
        out=out,
        format=_as_choice("format", merged["format"], _FORMATS),
        workers=_as_int("workers", merged["workers"], minimum=1),
        penalty=_as_float("penalty", merged["penalty"], nonnegative=True),
        m=None if m is None else _as_int("m", m, minimum=0),
        n=None if n is None else _as_int("n", n, minimum=0),
        gains=gains,
        max_dim=_as_int("max_dim", merged["max_dim"], minimum=1),
        mode=_as_choice("mode", merged["mode"], ("per_cut_exact", "split_bound")),
        destination_quantizes=dq,
        explicit=explicit,
    )
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _config_json(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.as_dict(), sort_keys=True, separators=(",", ":"))


def _render_csv(schema: str, cfg: ExperimentConfig, header: str, rows: list[list]) -> str:
    lines = [f"# schema={schema}", f"# config={_config_json(cfg)}", header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _render_json(schema: str, cfg: ExperimentConfig, results) -> str:
    doc = {"schema": schema, "config": cfg.as_dict(), "results": results}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _scheme_for(cfg: ExperimentConfig, num_hops: int) -> rates.QuantizationScheme:
    if cfg.q is not None:
        return rates.QuantizationScheme(cfg.q, cfg.destination_quantizes)
    return rates.QuantizationScheme.depth_matched(num_hops, cfg.destination_quantizes)


def run_capacity(cfg: ExperimentConfig) -> int:
    m = cfg.K if cfg.m is None else cfg.m
    n = cfg.K if cfg.n is None else cfg.n
    scale = mimo.rate_scale(cfg.log_base)
    rows, results = [], []
    for snr in cfg.snr:
        est = mimo.estimate_ergodic_capacity(
            m, n, snr, cfg.num_samples, cfg.seed, workers=cfg.workers
        )
        rows.append([m, n, snr, est.mean * scale, est.std_error * scale, est.num_samples, cfg.seed])
        d = est.as_dict()
        d["mean"] *= scale
        d["std_error"] *= scale
        d["seed"] = cfg.seed
        d["log_base"] = cfg.log_base
        results.append(d)
    schema = "relaycap/capacity/1"
    if cfg.format == "csv":
        _emit(cfg, _render_csv(schema, cfg, "m,n,snr,mean,std_error,num_samples,seed", rows))
    else:
        _emit(cfg, _render_json(schema, cfg, results))
    return 0


def run_mincut(cfg: ExperimentConfig) -> int:
    D = cfg.single_depth()
    scale = mimo.rate_scale(cfg.log_base)
    rows, results = [], []
    for snr in cfg.snr:
        params = network.NetworkParams(cfg.K, D, power=snr, noise_var=1.0, log_base=cfg.log_base)
        table = mimo.build_capacity_table(cfg.K, snr, cfg.num_samples, cfg.seed, workers=cfg.workers)
        value, profile = network.min_cut_dp(params, table, node_penalty=cfg.penalty)
        cut = network.cut_value(profile, params, table, node_penalty=cfg.penalty)
        rows.append(
            [cfg.K, D, snr, cfg.penalty, value * scale, cut.std_error * scale,
             "|".join(str(c) for c in profile.counts)]
        )
        d = cut.as_dict()
        d["value"] *= scale
        d["std_error"] *= scale
        d["per_block"] = [
            {"dims": b["dims"], "capacity": b["capacity"] * scale} for b in d["per_block"]
        ]
        d.update({"K": cfg.K, "D": D, "snr": snr, "penalty": cfg.penalty, "log_base": cfg.log_base})
        results.append(d)
    schema = "relaycap/mincut/1"
    if cfg.format == "csv":
        _emit(cfg, _render_csv(schema, cfg, "K,D,snr,penalty,value,std_error,profile", rows))
    else:
        _emit(cfg, _render_json(schema, cfg, results))
    return 0


def run_rate(cfg: ExperimentConfig) -> int:
    D = cfg.single_depth()
    rows, results = [], []
    for snr in cfg.snr:
        params = network.NetworkParams(cfg.K, D, power=snr, noise_var=1.0, log_base=cfg.log_base)
        report = rates.rate_report(
            params, _scheme_for(cfg, D), cfg.num_samples, cfg.seed,
            mode=cfg.mode, workers=cfg.workers,
        )
        rows.append(
            [cfg.K, D, snr, report.noise_ratio, report.upper, report.lower, report.gap,
             report.thm_bound, report.prior_cf_bound, report.alignment_bound, report.std_error]
        )
        results.append(report.as_dict())
    schema = "relaycap/rate/1"
    if cfg.format == "csv":
        _emit(cfg, _render_csv(schema, cfg, RATE_HEADER, rows))
    else:
        _emit(cfg, _render_json(schema, cfg, results))
    return 0


def run_sweep(cfg: ExperimentConfig) -> int:
    scale = mimo.rate_scale(cfg.log_base)
    rows, results = [], []
    for snr in cfg.snr:
        for policy in cfg.q_policy:
            points = rates.gap_trend(
                cfg.K, list(cfg.D), snr, policy, cfg.num_samples, cfg.seed,
                mode=cfg.mode, workers=cfg.workers,
            )
            for p in points:
                thm = rates.depth_gap_bound(cfg.K, p.num_hops, cfg.log_base)
                prior = rates.prior_cf_gap_bound(cfg.K, p.num_hops)
                align = rates.alignment_gap_bound(cfg.K, cfg.log_base)
                rows.append(
                    [cfg.K, p.num_hops, snr, p.noise_ratio, p.upper * scale,
                     p.lower * scale, p.gap * scale, thm, prior, align,
                     p.std_error * scale]
                )
                d = p.as_dict()
                d.update(
                    {"upper": p.upper * scale, "lower": p.lower * scale,
                     "gap": p.gap * scale, "std_error": p.std_error * scale,
                     "thm_bound": thm, "prior_cf_bound": prior,
                     "alignment_bound": align, "log_base": cfg.log_base}
                )
                results.append(d)
    schema = "relaycap/sweep/1"
    if cfg.format == "csv":
        _emit(cfg, _render_csv(schema, cfg, RATE_HEADER, rows))
    else:
        _emit(cfg, _render_json(schema, cfg, results))
    return 0


def run_line(cfg: ExperimentConfig) -> int:
    D = cfg.single_depth()
    gains = (1.0,) * D if cfg.gains is None else cfg.gains
    scale = mimo.rate_scale(cfg.log_base)
    rows, results = [], []
    for snr in cfg.snr:
        net = line_mod.LineNetwork(gains, power=snr, noise_var=1.0)
        q = cfg.q if cfg.q is not None else float(max(D - 1, 1))
        cap = line_mod.line_capacity(net)
        simple = line_mod.line_nnc_rate(
            net, q, mode="simple_cuts", destination_quantizes=cfg.destination_quantizes
        )
        full = line_mod.line_nnc_rate(
            net, q, mode="all_cuts", destination_quantizes=cfg.destination_quantizes
        )
        bound = (math.log(D) + 1.0) * scale
        rows.append(
            [D, snr, q, cap * scale, simple * scale, full * scale,
             (cap - simple) * scale, bound]
        )
        results.append(
            {"D": D, "snr": snr, "q": q, "gains": list(gains),
             "capacity": cap * scale, "rate": simple * scale,
             "all_cuts_rate": full * scale, "gap": (cap - simple) * scale,
             "depth_bound": bound, "log_base": cfg.log_base,
             "destination_quantizes": cfg.destination_quantizes}
        )
    schema = "relaycap/line/1"
    if cfg.format == "csv":
        _emit(
            cfg,
            _render_csv(
                schema, cfg,
                "D,snr,q,capacity,rate,all_cuts_rate,gap,depth_bound", rows,
            ),
        )
    else:
        _emit(cfg, _render_json(schema, cfg, results))
    return 0


def run_verify(cfg: ExperimentConfig) -> int:
    checks = []

    def record(name: str, passed: bool, detail: str) -> None:
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    pool = mimo.SamplePool.build(cfg.max_dim, cfg.num_samples, cfg.seed, workers=cfg.workers)
    tables = {}
    for snr in cfg.snr:
        table = mimo.CapacityTable.from_pool(pool, snr)
        tables[snr] = table
        rep = network.check_capacity_properties(table)
        record(
            f"draw_properties_snr_{snr:g}",
            rep.passed,
            f"symmetry={rep.symmetry_error:.3e} monotonicity={rep.monotonicity_violation:.3e} "
            f"split={rep.split_violation:.3e} tol={rep.tolerance:g}",
        )

    mid_snr = cfg.snr[len(cfg.snr) // 2]
    table = tables[mid_snr]
    for K in range(1, min(3, cfg.max_dim) + 1):
        for D in (2, 3, 4):
            for pen in (0.0, math.log(1.5)):
                params = network.NetworkParams(K, D, power=mid_snr, noise_var=1.0)
                dp_val, dp_prof = network.min_cut_dp(params, table, node_penalty=pen)
                bf_val, bf_prof = network.brute_force_min_cut(params, table, node_penalty=pen)
                ok = dp_val == bf_val and dp_prof == bf_prof
                record(
                    f"dp_equals_brute_force_K{K}_D{D}_pen{pen:.3f}",
                    ok,
                    f"dp={dp_val!r} brute={bf_val!r} "
                    f"profiles {dp_prof.counts} vs {bf_prof.counts}",
                )
                if pen == 0.0:
                    full = table.mean(K, K)
                    ok = abs(dp_val - full) <= 1e-9
                    record(
                        f"min_cut_equals_full_capacity_K{K}_D{D}",
                        ok,
                        f"min_cut={dp_val!r} C(K,K)={full!r}",
                    )

    failed = [c for c in checks if not c["passed"]]
    if cfg.format == "json":
        text = _render_json("relaycap/verify/1", cfg, checks)
    else:
        lines = [
            f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['detail']}"
            for c in checks
        ]
        lines.append(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
        text = "\n".join(lines) + "\n"
    _emit(cfg, text)
    return 1 if failed else 0


_RUNNERS = {
    "capacity": run_capacity,
    "mincut": run_mincut,
    "rate": run_rate,
    "sweep": run_sweep,
    "verify": run_verify,
    "line": run_line,
}


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--K", help="antennas per terminal and relays per layer")
    p.add_argument("--D", help="number of hops; comma list for sweeps")
    p.add_argument("--snr", help="signal-to-noise ratio; comma list allowed")
    p.add_argument("--q", help="quantization noise ratio (default: depth matched)")
    p.add_argument("--q-policy", dest="q_policy",
                   help="sweep policies: fixed_1, depth_matched (alias d_minus_1), optimized")
    p.add_argument("--q-grid", dest="q_grid", help="comma list of candidate ratios")
    p.add_argument("--samples", dest="num_samples", help="Monte Carlo draws")
    p.add_argument("--seed", help="base RNG seed")
    p.add_argument("--base", dest="log_base", help="output rate unit: nats or bits")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", help="output format: csv or json")
    p.add_argument("--workers", help="threads; never changes output bytes")
    p.add_argument("--penalty", help="per-relay rate penalty for mincut")
    p.add_argument("--m", help="receive dimension (capacity)")
    p.add_argument("--n", help="transmit dimension (capacity)")
    p.add_argument("--gains", help="comma list of line link gains |h|^2")
    p.add_argument("--max-dim", dest="max_dim", help="largest dimension verify checks")
    p.add_argument("--mode", help="bound mode: per_cut_exact or split_bound")
    p.add_argument("--no-destination-quantization", dest="destination_quantizes",
                   action="store_false", default=None,
                   help="final hop runs at full snr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaycap",
        description="Capacity bounds for layered relay networks under relay quantization.",
    )
    _add_common_flags(parser)
    sub = parser.add_subparsers(dest="subcommand")
    helps = {
        "capacity": "ergodic MIMO capacity of one dimension pair",
        "mincut": "minimum penalized cut of a layered network",
        "rate": "upper/lower bounds and gap guarantees for one network",
        "sweep": "gap versus depth under quantization policies",
        "verify": "internal consistency checks (draw-level properties, DP vs brute force)",
        "line": "closed-form rates of a single-antenna relay chain",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        _add_common_flags(sp)
    return parser


def _merge_args(args: argparse.Namespace) -> tuple[dict, str | None]:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as e:
            raise ConfigError("config", f"cannot read {args.config}: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"invalid JSON in {args.config}: {e}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level must be a JSON object")
        data.update(loaded)
    for key in _DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    return data, args.subcommand


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        data, subcommand = _merge_args(args)
        cfg = validate_config(data, subcommand)
        return _RUNNERS[cfg.subcommand](cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
