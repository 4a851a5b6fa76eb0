"""Command-line interface.

Subcommands: ``svd``, ``compress``, ``pca-train``, ``pca-query``, ``bench``
and ``generate {tensor,faces,video}`` for synthetic inputs.

Exit codes: 0 success, 2 usage, 3 I/O or file format, 4 precondition or
shape, 5 numerical, 6 capacity. Identical arguments give bit-identical
files; the only exceptions are wall-clock fields (``timing.json`` and the
``seconds`` CSV columns).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .einstein import SplitTensor, exact_einstein_svd, exact_singular_values
from .errors import EinsvdError, PreconditionError
from .lanczos import aelb, convergence_tol, gres_norm, res_norm
from .pipelines.compress import compress_sweep
from .pipelines import images, pca
from .ritz import RestartConfig, lbr
from .rng import randn
from .tensor import read_eten, write_eten

log = logging.getLogger("einsvd")

CSV_VERSION = 1
EXIT_IO = 3


def parse_shape(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}; expected e.g. 50x20x50x20")
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}")
    return dims


def parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")


def _threads(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _write_json(path: Path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_tensor(args) -> SplitTensor:
    if args.input:
        data = read_eten(args.input)
    elif args.shape:
        data = randn(args.shape, args.seed)
    else:
        raise PreconditionError("give --input FILE.eten or --shape for a synthetic tensor")
    split = args.split if args.split is not None else data.ndim // 2
    if not 1 <= split < data.ndim:
        raise PreconditionError(f"--split must be in 1..{data.ndim - 1}")
    return SplitTensor(data, split)


def _solve(a: SplitTensor, args):
    """Run the requested method; returns (triplets, iterations, converged)."""
    if args.method == "exact":
        dec = exact_einstein_svd(a, full_matrices=False)
        trip = dec.triplets()
        trip = trip[: args.k] if args.target == "largest" else trip[-args.k:]
        return trip, 1, True
    if args.m is None:
        args.m = pca.default_m(args.k, min(a.matrix.shape), args.method)
    if args.method == "lb":
        if args.target != "largest":
            raise PreconditionError("method lb approximates the largest triplets only; use ritz")
        trip = aelb(a, args.m, args.k, eps=args.eps, seed=args.seed)
        return trip, 1, all(t.converged for t in trip)
    cfg = RestartConfig(m=args.m, k=args.k, epsilon=args.eps, max_restarts=args.max_restarts,
                        target=args.target, seed=args.seed)
    trip, report = lbr(a, cfg)
    return trip, report.iterations, report.converged


def cmd_svd(args) -> int:
    a = _load_tensor(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    trip, iterations, converged = _solve(a, args)
    seconds = time.perf_counter() - t0
    rows = []
    for i, t in enumerate(trip, 1):
        write_eten(out / f"u_{i:04d}.eten", t.left)
        write_eten(out / f"v_{i:04d}.eten", t.right)
        rows.append((i, t.value, res_norm(a, t), t.residual_estimate, int(t.converged)))
    _write_csv(out / "values.csv", ["index", "value", "res_norm", "residual_estimate", "converged"], rows)
    gres = gres_norm(a, trip)
    _write_json(out / "summary.json", {
        "csv_version": CSV_VERSION, "method": args.method, "shape": list(a.shape),
        "split": a.row_order, "m": args.m, "k": args.k, "eps": args.eps, "target": args.target,
        "seed": args.seed, "gres_norm": gres, "iterations": iterations, "converged": converged,
        "convergence_tol": convergence_tol(a, args.eps),
    })
    _write_json(out / "timing.json", {"wall_time": seconds})
    for t in trip:
        print(repr(t.value))
    log.info("gres=%.3e iterations=%d converged=%s", gres, iterations, converged)
    return 0


def cmd_compress(args) -> int:
    src = Path(args.input)
    data = images.ingest_video(src) if src.is_dir() else read_eten(src)
    a = SplitTensor(data, args.split)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    approx, report = compress_sweep(
        a, args.k, args.method, m=args.m, eps=args.eps, seed=args.seed, max_restarts=args.max_restarts)
    _write_csv(out / "compress.csv", ["k", "relative_error", "seconds"], report.rows())
    _write_json(out / "summary.json", {
        "csv_version": CSV_VERSION, "method": args.method, "shape": list(a.shape), "split": a.row_order,
        "ks": report.ks, "relative_errors": report.relative_errors, "converged": report.converged,
    })
    if args.save_frames:
        if data.ndim != 4 or data.shape[2] != 3:
            raise PreconditionError("--save-frames needs an l x w x 3 x T video tensor")
        for k, ak in zip(report.ks, approx):
            images.export_video(out / f"k_{k:04d}", ak.data)
    for k, err in zip(report.ks, report.relative_errors):
        print(f"{k},{err!r}")
    return 0


def cmd_pca_train(args) -> int:
    train = images.load_dataset(args.input)
    model = pca.pca_train(train, args.k, args.method, m=args.m, eps=args.eps,
                          seed=args.seed, max_restarts=args.max_restarts)
    pca.save_model(args.output, model)
    log.info("trained %s model: k=%d on %d images, converged=%s", args.method, model.k, len(train), model.converged)
    return 0


def cmd_pca_query(args) -> int:
    model = pca.load_model(args.model)
    src = Path(args.input)
    if src.is_dir():
        ds = images.load_dataset(src)
        names = [str(i) for i in range(len(ds))]
        queries, truth = ds.images, ds.labels
    else:
        names, queries, truth = [src.name], [images.read_ppm(src)], None
    results = [pca.pca_query(model, img) for img in queries]
    rows = [(n, lab, d, truth[i] if truth else "") for i, (n, (lab, d)) in enumerate(zip(names, results))]
    summary = {"count": len(rows), "k": model.k, "method": model.method}
    if truth:
        summary["identification_rate"] = pca.identification_rate([r[0] for r in results], truth)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "predictions.csv", ["image", "predicted", "distance", "true_label"], rows)
        _write_json(out / "summary.json", summary)
    for r in rows:
        print(f"{r[0]},{r[1]},{r[2]!r}")
    if truth:
        print(f"IR={summary['identification_rate']!r}")
    return 0


def cmd_bench(args) -> int:
    data = randn(args.shape, args.seed)
    split = args.split if args.split is not None else data.ndim // 2
    a = SplitTensor(data, split)
    rows = []
    for method in args.methods:
        ms = [""] if method == "exact" else args.m_list
        for m in ms:
            if method == "ritz" and m <= args.k:
                log.warning("skipping ritz at m=%d: the restarted solver needs m > k=%d", m, args.k)
                continue
            t0 = time.perf_counter()
            if method == "exact":
                dec = exact_einstein_svd(a, full_matrices=False)
                trip, iterations = dec.triplets(args.k), 1
            elif method == "lb":
                trip, iterations = aelb(a, m, args.k, eps=args.eps, seed=args.seed), 1
            else:
                cfg = RestartConfig(m=m, k=args.k, epsilon=args.eps, max_restarts=args.max_restarts,
                                    target=args.target, seed=args.seed)
                trip, report = lbr(a, cfg)
                iterations = report.iterations
            seconds = time.perf_counter() - t0
            rows.append((method, m, args.k, gres_norm(a, trip), iterations, seconds))
            log.info("%s m=%s: %.3fs", method, m, seconds)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, ["method", "m", "k", "gres", "iterations", "seconds"], rows)
    for r in rows:
        print(",".join(repr(x) if isinstance(x, float) else str(x) for x in r))
    return 0


def cmd_generate(args) -> int:
    if args.kind == "tensor":
        if not args.shape:
            raise PreconditionError("generate tensor needs --shape")
        write_eten(args.output, randn(args.shape, args.seed))
    elif args.kind == "faces":
        ds = images.synthetic_faces(args.classes, args.per_class, tuple(args.size), seed=args.seed)
        images.save_dataset(args.output, ds)
    else:
        h, w, t = args.shape or (20, 24, 15)
        images.export_video(args.output, images.synthetic_video(h, w, t, seed=args.seed))
    return 0


def _solver_flags(p, method_default="ritz"):
    p.add_argument("--method", choices=["exact", "lb", "ritz"], default=method_default)
    p.add_argument("-m", type=int, default=None, help="Lanczos steps per cycle")
    p.add_argument("--eps", type=float, default=1e-8, help="convergence tolerance (scaled by max(1, ||A||_F))")
    p.add_argument("--max-restarts", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="einsvd", description=__doc__.split("\n")[0])
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("svd", help="extremal singular triplets of an ETEN tensor")
    p.add_argument("--input", help="ETEN tensor file")
    p.add_argument("--shape", type=parse_shape, help="synthetic randn tensor, e.g. 20x10x20x10")
    p.add_argument("--split", type=int, default=None, help="number of leading row modes")
    _solver_flags(p)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--target", choices=["largest", "smallest"], default="largest")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("compress", help="truncated-SVD compression with a k sweep")
    p.add_argument("--input", required=True, help="directory of PPM frames or an ETEN file")
    p.add_argument("--split", type=int, default=2)
    _solver_flags(p, "exact")
    p.add_argument("-k", type=parse_ints, required=True, help="comma-separated ranks, e.g. 10,20,30")
    p.add_argument("--output", required=True)
    p.add_argument("--save-frames", action="store_true", help="write reconstructed frames per k")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("pca-train", help="train a recognition model on <root>/<label>/*.ppm")
    p.add_argument("--input", required=True)
    _solver_flags(p, "exact")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--output", required=True, help="model bundle path")
    p.set_defaults(func=cmd_pca_train)

    p = sub.add_parser("pca-query", help="nearest-neighbour labels for one image or a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="PPM file or <root>/<label>/*.ppm directory")
    p.add_argument("--output", help="directory for predictions.csv and summary.json")
    p.set_defaults(func=cmd_pca_query)

    p = sub.add_parser("bench", help="time exact vs approximate solvers on a synthetic tensor")
    p.add_argument("--shape", type=parse_shape, required=True)
    p.add_argument("--split", type=int, default=None)
    p.add_argument("--methods", type=lambda s: s.split(","), default=["exact", "lb", "ritz"])
    p.add_argument("-m", dest="m_list", type=parse_ints, default=[5], help="comma-separated step counts")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-restarts", type=int, default=1000)
    p.add_argument("--target", choices=["largest", "smallest"], default="largest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write synthetic inputs")
    p.add_argument("kind", choices=["tensor", "faces", "video"])
    p.add_argument("--shape", type=parse_shape, help="tensor shape, or HxWxT for video")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--per-class", type=int, default=5)
    p.add_argument("--size", type=parse_shape, default=(16, 16))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _threads(args.threads):
            return args.func(args)
    except EinsvdError as exc:
        print(f"einsvd: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"einsvd: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
