"""Command-line driver: generate, truth, run, verify, replay, bench."""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
from fractions import Fraction

from .config import ConfigError, DetectorConfig
from .powerlaw import ClogError
from .runner import events_csv, read_events_csv, read_truth_csv, run_detector, verify
from .workload import (
    SpecError,
    StreamSpec,
    file_sha256,
    generate,
    label_key,
    oracle_events,
    read_stream,
    write_stream,
)

MODE_NAMES = {"online": "online", "time-stretch": "time_stretch", "power-law": "power_law"}
DIST_NAMES = {"uniform": "uniform", "powerlaw": "power_law", "power-law": "power_law", "planted": "planted"}


def count_arg(s: str) -> int:
    """Integer that may be written in float notation, e.g. 1e6."""
    v = float(s)
    if not v.is_integer():
        raise argparse.ArgumentTypeError(f"{s} is not an integer")
    return int(v)


def int_list(s: str):
    return [count_arg(x) for x in s.split(",") if x]


def str_list(s: str):
    return [x for x in s.split(",") if x]


def parse_planted(s: str):
    out = {}
    for part in s.split(","):
        label, _, cnt = part.partition(":")
        if not cnt:
            raise SpecError(f"planted entry {part!r} must look like key:count")
        out[label_key(label)] = int(cnt)
    return out


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _die(msg: str, code: int = 2):
    print(f"error: {msg}", file=sys.stderr)
    return code


# ---- generate / truth ---------------------------------------------------------

def cmd_generate(args) -> int:
    dist = "planted" if args.planted and args.dist is None else DIST_NAMES[args.dist or "uniform"]
    try:
        planted = parse_planted(args.planted) if args.planted else {}
        spec = StreamSpec(
            n=args.n,
            distribution=dist,
            u=args.u,
            theta=args.theta,
            planted=planted,
            order=args.order.replace("-", "_"),
            seed=args.seed,
        )
        stream = generate(spec)
    except SpecError as exc:
        return _die(str(exc))
    write_stream(args.output, stream)
    if args.truth:
        if args.t is None:
            return _die("--truth needs --t")
        gt = oracle_events(stream, args.t, Fraction(args.alpha))
        with open(args.truth, "w") as fh:
            fh.write(gt.to_csv())
    return 0


def cmd_truth(args) -> int:
    stream = read_stream(args.stream)
    gt = oracle_events(stream, args.t, Fraction(args.alpha))
    with open(args.output, "w") as fh:
        fh.write(gt.to_csv())
    return 0


# ---- run / replay -------------------------------------------------------------

def config_from_args(args, n) -> DetectorConfig:
    eps = None if args.epsilon in (None, "exact") else args.epsilon
    return DetectorConfig(
        n=n,
        m=args.m,
        b=args.b,
        r=args.r,
        t=args.t,
        phi=args.phi,
        epsilon=eps,
        mode=MODE_NAMES[args.mode],
        q=args.q,
        alpha=args.alpha,
        theta=args.theta,
        dynamic=args.dynamic,
    )


def execute(config: DetectorConfig, stream_path: str, out_dir: str, plot: bool = False) -> dict:
    """Run one configuration and write events, I/O stats, truth and manifest."""
    stream = read_stream(stream_path)
    if len(stream) > config.n:
        raise ConfigError(f"stream has {len(stream)} items but N = {config.n}")
    reports, det = run_detector(config, stream)
    os.makedirs(out_dir, exist_ok=True)
    ev_text = events_csv(reports)
    io_text = det.io.to_csv()
    with open(os.path.join(out_dir, "events.csv"), "w") as fh:
        fh.write(ev_text)
    with open(os.path.join(out_dir, "iostats.csv"), "w") as fh:
        fh.write(io_text)

    alpha = config.alpha_eff if config.mode == "time_stretch" else Fraction(0)
    truth = oracle_events(stream, config.threshold, alpha)
    with open(os.path.join(out_dir, "truth.csv"), "w") as fh:
        fh.write(truth.to_csv())
    forbidden = None if config.exact else config.report_threshold - 1
    verdict = verify(reports, truth.events, config.mode, config.n, truth.counts, forbidden)

    counters = {"reports": len(reports)}
    if config.mode == "online":
        counters.update(queries=det.queries, crossings=det.crossings)
    if config.mode == "power_law":
        counters.update(sweeps=det.sweeps, merges=det.merges)
        if config.dynamic:
            with open(os.path.join(out_dir, "thresholds.csv"), "w") as fh:
                fh.write("merge,tau\n")
                for idx, taus in det.trace:
                    fh.write(f"{idx},{' '.join(map(str, taus))}\n")
    if plot:
        from .report import plot_delays

        plot_delays(reports, truth.events, os.path.join(out_dir, "delays.png"))

    manifest = {
        "config": config.to_dict(),
        "stream": os.path.abspath(stream_path),
        "stream_sha256": file_sha256(stream_path),
        "events": "events.csv",
        "events_sha256": _sha(ev_text),
        "iostats": det.io.summary(),
        "iostats_sha256": _sha(io_text),
        "counters": counters,
        "verdict": verdict.summary(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def cmd_run(args) -> int:
    n = args.n
    if n is None:
        if not args.stream:
            return _die("need a stream file or --n")
        n = len(read_stream(args.stream))
    try:
        config = config_from_args(args, n).validate()
    except ConfigError as exc:
        return _die(str(exc))
    if not args.stream:
        return _die("no stream file given")
    try:
        manifest = execute(config, args.stream, args.out, plot=args.plot)
    except ClogError as exc:
        return _die(f"{exc} (level {exc.level})", 3)
    except ConfigError as exc:
        return _die(str(exc))
    bad = {k: v for k, v in manifest["verdict"].items() if v}
    print(f"{manifest['counters']['reports']} events, {manifest['iostats']['total_reads']} reads, "
          f"{manifest['iostats']['total_writes']} writes -> {args.out}")
    if bad:
        print("verification failed: " + ", ".join(f"{k}={v}" for k, v in bad.items()))
        return 1
    return 0


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    if file_sha256(manifest["stream"]) != manifest["stream_sha256"]:
        return _die("stream file changed since the manifest was written")
    config = DetectorConfig(**manifest["config"])
    again = execute(config, manifest["stream"], args.out)
    same = all(again[k] == manifest[k] for k in ("events_sha256", "iostats_sha256"))
    print("identical" if same else "MISMATCH")
    return 0 if same else 1


# ---- verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    reports = read_events_csv(args.events)
    truth = read_truth_csv(args.truth)
    mode = MODE_NAMES[args.mode]
    counts = forbidden = None
    if args.stream:
        stream = read_stream(args.stream)
        n = args.n or len(stream)
        counts = {}
        for x in stream.tolist():
            counts[x] = counts.get(x, 0) + 1
    else:
        n = args.n
    if args.epsilon not in (None, "exact"):
        if counts is None or args.phi is None:
            return _die("approximate verification needs --stream and --phi")
        forbidden = int((Fraction(args.phi) - Fraction(args.epsilon)) * n // 1)
    if n is None:
        n = max([e.trigger_time for e in truth] + [r.report_time for r in reports] + [0])
    v = verify(reports, truth, mode, n, counts, forbidden)
    for line in v.lines():
        print(line)
    print("PASS" if v.ok else "FAIL")
    return 0 if v.ok else 1


# ---- bench --------------------------------------------------------------------

BENCH_HEADER = "mode,n,m,b,r,param,blocks_per_item,queries,sweeps"


def bench_rows(modes, ns, ms, bs, rs, params, phi, epsilon, dist, theta, seed, stream_path=None):
    rows = []
    cache = {}
    for mode, n, m, b, r, p in itertools.product(modes, ns, ms, bs, rs, params or [None]):
        mode = MODE_NAMES.get(mode, mode)
        if stream_path:
            stream = cache.setdefault(stream_path, read_stream(stream_path))
            n = len(stream)
        else:
            key = (n, dist, theta, seed)
            if key not in cache:
                cache[key] = generate(
                    StreamSpec(n=n, distribution=dist, u=n if dist == "uniform" else None, theta=theta, seed=seed)
                )
            stream = cache[key]
        kw = dict(n=n, m=m, b=b, r=r, phi=phi, epsilon=epsilon, mode=mode)
        if mode == "time_stretch":
            kw["q"] = int(p) if p is not None else 2
        elif mode == "power_law":
            kw["theta"] = float(p) if p is not None else theta
        config = DetectorConfig(**kw)
        _, det = run_detector(config, stream)
        rows.append(
            {
                "mode": mode,
                "n": n,
                "m": m,
                "b": b,
                "r": r,
                "param": "" if p is None else p,
                "blocks_per_item": det.io.total / n,
                "queries": getattr(det, "queries", 0),
                "sweeps": getattr(det, "sweeps", 0),
            }
        )
    return rows


def cmd_bench(args) -> int:
    try:
        rows = bench_rows(
            str_list(args.mode),
            int_list(args.n),
            int_list(args.m),
            int_list(args.b),
            [float(x) for x in str_list(args.r)],
            str_list(args.param) if args.param else None,
            args.phi,
            None if args.epsilon == "exact" else args.epsilon,
            DIST_NAMES[args.dist],
            args.theta,
            args.seed,
            args.stream,
        )
    except (ConfigError, SpecError, ClogError) as exc:
        return _die(str(exc))
    lines = [BENCH_HEADER]
    for row in rows:
        lines.append(",".join(
            f"{row[c]:.6f}" if c == "blocks_per_item" else str(row[c]) for c in BENCH_HEADER.split(",")
        ))
    text = "\n".join(lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    if args.plot:
        from .report import plot_bench

        plot_bench(rows, args.plot)
    return 0


# ---- parser -------------------------------------------------------------------

def add_detector_flags(p):
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="online")
    p.add_argument("--m", type=count_arg, required=True, help="RAM size in entries")
    p.add_argument("--b", type=count_arg, default=64, help="block size in entries")
    p.add_argument("--r", type=float, default=2.0, help="level growth factor")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=count_arg, help="reporting threshold T")
    g.add_argument("--phi", help="reporting fraction; T = ceil(phi N)")
    p.add_argument("--epsilon", default="exact", help="'exact' (1/N) or a fraction like 1/64")
    p.add_argument("--n", type=count_arg, help="declared stream length (default: stream file length)")
    p.add_argument("--q", type=int, help="time-stretch bins per level")
    p.add_argument("--alpha", help="time-stretch slack; q = ceil((alpha+1)/alpha)")
    p.add_argument("--theta", type=float, help="power-law exponent for static thresholds")
    p.add_argument("--dynamic", action="store_true", help="learn power-law thresholds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eventcascade", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="write a synthetic stream")
    p.add_argument("--dist", choices=sorted(DIST_NAMES))
    p.add_argument("--n", type=count_arg, required=True)
    p.add_argument("--u", type=count_arg, help="universe size")
    p.add_argument("--theta", type=float, default=2.5)
    p.add_argument("--planted", help="exact counts, e.g. a:3,b:1")
    p.add_argument("--order", default="shuffled", choices=["shuffled", "adversarial-burst", "round-robin"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="stream.txt", help=".bin for packed uint64, else text")
    p.add_argument("--truth", help="also write ground-truth CSV here")
    p.add_argument("--t", type=count_arg)
    p.add_argument("--alpha", default="0")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("truth", help="ground-truth events of a stream")
    p.add_argument("stream")
    p.add_argument("--t", type=count_arg, required=True)
    p.add_argument("--alpha", default="0")
    p.add_argument("-o", "--output", default="truth.csv")
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("run", help="run a detector over a stream file")
    add_detector_flags(p)
    p.add_argument("stream", nargs="?")
    p.add_argument("--out", default="run_out")
    p.add_argument("--plot", action="store_true", help="write delays.png")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check an events CSV against ground truth")
    p.add_argument("events")
    p.add_argument("truth")
    p.add_argument("--mode", choices=sorted(MODE_NAMES), default="online")
    p.add_argument("--n", type=count_arg)
    p.add_argument("--stream", help="stream file, for approximate-mode count checks")
    p.add_argument("--phi")
    p.add_argument("--epsilon", default="exact")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--out", default="replay_out")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="amortized I/O over a parameter grid")
    p.add_argument("--mode", default="online", help="comma list of modes")
    p.add_argument("--n", default="32768")
    p.add_argument("--m", default="256")
    p.add_argument("--b", default="64")
    p.add_argument("--r", default="2")
    p.add_argument("--param", help="q (time-stretch) or theta (power-law), comma list")
    p.add_argument("--phi", default="1/16")
    p.add_argument("--epsilon", default="exact")
    p.add_argument("--dist", default="uniform", choices=sorted(DIST_NAMES))
    p.add_argument("--theta", type=float, default=2.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--plot", help="write a blocks/item figure here")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
