"""Command-line entry point: instance generators, builds, verification and baseline tables."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .audit import exact_stretch, lightness
from .base import complete_hierarchical_spanner, greedy_hierarchical_spanner
from .decompose import build_light_spanner, decompose, decompose_params, estimate_ddim
from .graph import SpannerGraph
from .hierarchy import build_hierarchy
from .metric import RTOL, MetricError, MetricSpace, load_points, log2_ceil, normalize, save_points
from .nrtree import mst
from .sparse import PROFILES, check_eps

SCHEMA = 1
KINDS = ("line", "cube", "clusters", "grid")
CONSTANTS = ("c", "c1", "c2", "b", "b2", "f", "a", "L", "c_dec", "gap", "kappa", "sub_eps")
METHODS = ("complete", "greedy", "light")


class UsageError(ValueError):
    """Bad command-line values."""


# --- generators --------------------------------------------------------------


def generate(kind: str, n: int, *, seed: int = 0, dim: int = 2, clusters: int = 4, spread: float = 50.0) -> np.ndarray:
    """Deterministic point coordinates for ``kind`` (see ``KINDS``)."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if dim < 1:
        raise UsageError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "line":
        return np.arange(n, dtype=float)[:, None]
    if kind == "cube":
        return rng.random((n, dim))
    if kind == "clusters":
        if clusters < 1:
            raise UsageError("clusters must be >= 1")
        centers = rng.random((clusters, dim)) * spread
        sizes = np.full(clusters, n // clusters)
        sizes[: n % clusters] += 1
        return np.concatenate([c + rng.normal(size=(m, dim)) for c, m in zip(centers, sizes)])
    if kind == "grid":
        side = int(np.ceil(n ** (1.0 / dim)))
        axes = np.meshgrid(*[np.arange(side, dtype=float)] * dim, indexing="ij")
        return np.column_stack([a.ravel() for a in axes])[:n]
    raise UsageError(f"unknown kind {kind!r}; expected one of {KINDS}")


# --- config ------------------------------------------------------------------


def parse_overrides(items: list[str] | None) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in CONSTANTS:
            raise UsageError(f"--set expects <const>=<value> with const in {CONSTANTS}, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"--set {key}: {value!r} is not a number") from None
    return out


def resolved_config(args, overrides: dict) -> dict:
    return {
        "eps": args.eps,
        "profile": args.profile,
        "overrides": dict(sorted(overrides.items())),
        "seed": args.seed,
        "input": str(args.inp) if getattr(args, "inp", None) else None,
    }


def _load(path: Path) -> MetricSpace:
    return normalize(load_points(path))


def _write_json(obj, path: Path | None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=1, default=_json_default)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")
    return text


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _finite(x: float):
    return x if np.isfinite(x) else "inf"


# --- commands ----------------------------------------------------------------


def cmd_generate(args) -> int:
    pts = generate(args.kind, args.n, seed=args.seed, dim=args.dim, clusters=args.clusters, spread=args.spread)
    save_points(pts, args.out)
    return 0


def cmd_build(args) -> int:
    overrides = parse_overrides(args.set)
    space = _load(args.inp)
    scale = space.scale_factor
    t0 = time.perf_counter()
    try:
        R, info = build_light_spanner(space, args.eps, profile=args.profile, overrides=overrides)
    except Exception as exc:
        raise RuntimeError(f"build: {exc}") from exc
    seconds = time.perf_counter() - t0
    try:
        rep = exact_stretch(R, space, seed=args.seed)
    except Exception as exc:
        raise RuntimeError(f"audit: {exc}") from exc
    R.to_tsv(args.out, scale=scale)
    stats = {
        "schema": SCHEMA,
        "config": resolved_config(args, overrides),
        "n": space.n,
        "eps": args.eps,
        "profile": args.profile,
        "edges": len(R),
        "weight": R.weight * scale,
        "mst_weight": info.get("mst_weight", 0.0) * scale,
        "lightness": info.get("lightness", 0.0),
        "max_stretch": _finite(rep.max_stretch),
        "stretch_witness": rep.witness,
        "stretch_sampled": rep.sampled,
        "wall_seconds": seconds,
        "stage_counts": R.stage_counts(),
        "details": {k: v for k, v in info.items() if k not in ("n", "eps", "profile", "edges", "weight", "mst_weight", "lightness", "seconds")},
    }
    _write_json(stats, args.stats)
    return 0


def cmd_verify(args) -> int:
    space = _load(args.inp)
    try:
        R = SpannerGraph.from_tsv(args.edges, space.n, scale=space.scale_factor)
        R.check_metric(space)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rep = exact_stretch(R, space, seed=args.seed)
    ok = rep.max_stretch <= (1 + args.eps) * (1 + RTOL)
    report = {
        "schema": SCHEMA,
        "pass": bool(ok),
        "eps": args.eps,
        "max_stretch": _finite(rep.max_stretch),
        "witness": rep.witness,
        "p50": _finite(rep.p50),
        "p95": _finite(rep.p95),
        "pairs": rep.pairs,
        "sampled": rep.sampled,
        "lightness": _finite(lightness(R, space)),
        "edges": len(R),
    }
    _write_json(report, args.stats)
    return 0 if ok else 1


def compare_rows(kind: str, sizes: list[int], methods: list[str], eps: float, *, profile: str = "desk", seed: int = 0, dim: int = 2, overrides: dict | None = None) -> list[dict]:
    """One row per size; ``complete`` and ``greedy`` use ``c = 64/eps`` and ``b = eps/12``."""
    rows = []
    for n in sizes:
        space = normalize(MetricSpace.from_coords(generate(kind, n, seed=seed, dim=dim)))
        row: dict = {"kind": kind, "n": n, "eps": eps}
        mst_w = mst(space).weight
        for method in methods:
            t0 = time.perf_counter()
            if method == "light":
                R, _ = build_light_spanner(space, eps, profile=profile, overrides=overrides)
            else:
                h = build_hierarchy(space)
                if method == "complete":
                    R = complete_hierarchical_spanner(h, 64 / eps)
                else:
                    R = greedy_hierarchical_spanner(h, 64 / eps, eps / 12)
            row[f"{method}_time"] = round(time.perf_counter() - t0, 6)
            row[f"{method}_lightness"] = lightness(R, space, mst_weight=mst_w)
            row[f"{method}_stretch"] = exact_stretch(R, space, seed=seed).max_stretch
            row[f"{method}_edges"] = len(R)
        rows.append(row)
    return rows


def cmd_compare(args) -> int:
    overrides = parse_overrides(args.set)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; expected a subset of {METHODS}")
    sizes = [int(x) for x in args.sizes.split(",")]
    rows = compare_rows(args.kind, sizes, methods, args.eps, profile=args.profile, seed=args.seed, dim=args.dim, overrides=overrides)
    fields = ["kind", "n", "eps"] + [f"{m}_{col}" for m in methods for col in ("lightness", "stretch", "edges", "time")]
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if args.out:
            out.close()
    return 0


def cmd_decompose_dump(args) -> int:
    overrides = parse_overrides(args.set)
    space = _load(args.inp)
    n = space.n
    cutoff = build_hierarchy(space).H - log2_ceil(float(max(n, 2)) ** 2)
    h = build_hierarchy(space, L=int(overrides.get("L", min(-4, cutoff))))
    ddim = estimate_ddim(space) if args.profile == "faithful" else None
    params = decompose_params(args.eps, args.profile, ddim=ddim, overrides=overrides)
    dec = decompose(space, h, params, G=h.members(cutoff + 1))
    doc = json.loads(dec.to_json(space))
    doc["config"] = resolved_config(args, overrides)
    doc["params"] = {"f": params.f, "c": params.c, "gap": params.gap, "kappa": params.kappa, "a": params.a, "ddim_est": ddim}
    _write_json(doc, args.out)
    return 0


# --- parser ------------------------------------------------------------------


def _eps(text: str) -> float:
    x = float(text)
    try:
        check_eps(x)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lightspan", description="Light (1+eps)-spanners for doubling metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, needs_input=True):
        p.add_argument("--eps", type=_eps, default=0.5)
        p.add_argument("--profile", choices=PROFILES, default="desk")
        p.add_argument("--set", action="append", metavar="CONST=VALUE", help=f"override a constant ({', '.join(CONSTANTS)})")
        p.add_argument("--seed", type=int, default=0)
        if needs_input:
            p.add_argument("--in", dest="inp", type=Path, required=True, help="point file (CSV coordinates or JSON matrix)")

    g = sub.add_parser("generate", help="write a deterministic point file")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--clusters", type=int, default=4)
    g.add_argument("--spread", type=float, default=50.0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="build a light spanner and write edges plus stats")
    common(b)
    b.add_argument("--out", type=Path, required=True, help="edge TSV: u, v, weight, stage")
    b.add_argument("--stats", type=Path, help="stats JSON (stdout when omitted)")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="exact stretch check of an edge file; exit 0 iff stretch <= 1+eps")
    common(v)
    v.add_argument("--edges", type=Path, required=True)
    v.add_argument("--stats", type=Path, help="report JSON (stdout when omitted)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="CSV table of complete, greedy and light spanners over sizes")
    common(c, needs_input=False)
    c.add_argument("--kind", choices=KINDS, default="line")
    c.add_argument("--sizes", default="256,1024,4096")
    c.add_argument("--dim", type=int, default=2)
    c.add_argument("--methods", default=",".join(METHODS))
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("decompose-dump", help="JSON listing of the decomposition subsets")
    common(d)
    d.add_argument("--out", type=Path)
    d.set_defaults(func=cmd_decompose_dump)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
