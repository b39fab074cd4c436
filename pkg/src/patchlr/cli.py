"""Command-line interface.

Subcommands: inpaint, superres, ct, project, ssl, psnr, mask, phantom.
Options can come from a ``--config`` key=value file; explicit flags win.
Every run that produces an output file also writes ``<output>.meta.json``
with the fully resolved configuration, enough to reproduce the run.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure, 4 bad file
format.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .backend import active_backend
from .ct import FanBeamGeometry, build_system_matrix, forward_project
from .errors import FormatError, InvalidArgumentError, NumericalError
from .formats import (
    read_idx,
    read_pgm,
    read_sinogram,
    write_accuracy_csv,
    write_labels_csv,
    write_pgm,
    write_sinogram,
)
from .harmonic import harmonic_extension
from .inpaint import InpaintProblem, SolverParams, initialize_fill, solve_inpaint
from .linalg import cg_solve, read_matrix_market, write_matrix_market
from .linop import LinearDegradation, LinopProblem, build_average_operator, solve_linop
from .metrics import psnr
from .patches import PatchConfig
from .ssl import nearest_label_init, random_labeled_subset, solve_ssl
from .sweeps import build_sweep_operators
from .synth import MaskSpec, gen_mask, make_phantom

# shared option table: name, type, default, help
_SOLVER_OPTS = [
    ("patch-size", int, None, "odd patch width (default 11 for >=256px images, else 7)"),
    ("knn", int, 20, "neighbors per patch"),
    ("lambda", float, 0.0, "diffusion weight (negative sharpens)"),
    ("mu", float, 1.0, "augmented-Lagrangian weight"),
    ("mu2", float, 1.0, "fidelity weight for linear-operator solves"),
    ("outer", int, 6, "outer (manifold rebuild) iterations"),
    ("inner", int, 1, "inner sweeps per outer iteration"),
    ("tol", float, 1e-6, "inner linear-solver relative tolerance"),
    ("seed", int, 0, "random seed"),
]


def _add_options(parser, names, extra=()):
    table = {name: (typ, default, help_) for name, typ, default, help_ in _SOLVER_OPTS}
    for name in names:
        typ, default, help_ = table[name]
        parser.add_argument(f"--{name}", type=typ, default=None, help=help_)
    for name, typ, default, help_ in extra:
        parser.add_argument(f"--{name}", type=typ, default=None, help=help_)
    parser.add_argument("--config", default=None, help="key=value defaults file")
    parser.set_defaults(
        _option_table={
            **{n: table[n] for n in names},
            **{n: (t, d, h) for n, t, d, h in extra},
        }
    )


def _read_config_file(path):
    entries = {}
    with open(path, "r") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidArgumentError(
                    f"{path}:{ln}: expected key=value, got {raw.rstrip()!r}"
                )
            key, _, value = line.partition("=")
            entries[key.strip()] = (value.strip(), ln)
    return entries


def _resolve_options(args):
    """Merge CLI flags over config-file entries over defaults."""
    table = args._option_table
    resolved = {}
    config = _read_config_file(args.config) if args.config else {}
    for key, (value, ln) in config.items():
        if key not in table:
            raise InvalidArgumentError(
                f"{args.config}:{ln}: unknown option {key!r}"
            )
    for name, (typ, default, _) in table.items():
        cli_value = getattr(args, name.replace("-", "_"))
        if cli_value is not None:
            resolved[name] = cli_value
        elif name in config:
            raw, ln = config[name]
            try:
                resolved[name] = typ(raw)
            except ValueError as exc:
                raise InvalidArgumentError(
                    f"{args.config}:{ln}: bad value for {name}: {raw!r}"
                ) from exc
        else:
            resolved[name] = default
    return resolved


def _patch_config(opts, shape):
    tau = opts.get("patch-size")
    if tau is None:
        tau = 11 if min(shape) >= 256 else 7
        opts["patch-size"] = tau
    return PatchConfig.from_patch_size(tau, opts["knn"])


def _write_sidecar(output, command, opts, inputs, derived=None):
    meta = {
        "tool": f"patchlr {__version__}",
        "backend": active_backend(),
        "command": command,
        "options": {k: opts[k] for k in sorted(opts)},
        "inputs": inputs,
    }
    if derived:
        meta["derived"] = derived
    with open(f"{output}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_size(text):
    try:
        a, _, b = text.lower().partition("x")
        return int(a), int(b)
    except ValueError as exc:
        raise InvalidArgumentError(f"bad size {text!r}, expected MxN") from exc


def _cmd_inpaint(args):
    opts = _resolve_options(args)
    h = read_pgm(args.input)
    known = read_pgm(args.mask) > 0
    if known.shape != h.shape:
        raise InvalidArgumentError(
            f"mask shape {known.shape} does not match image {h.shape}"
        )
    cfg = _patch_config(opts, h.shape)
    prob = InpaintProblem(data=h, known=known, cfg=cfg)
    trace = None
    if args.method == "harmonic":
        f0 = initialize_fill(prob, opts["seed"])
        ops = build_sweep_operators(f0, cfg, need_graph=True)
        out = harmonic_extension(h, known, ops.graph, tol=opts["tol"])
    else:
        params = SolverParams(
            lam=opts["lambda"],
            mu=opts["mu"],
            outer_iters=opts["outer"],
            inner_iters=opts["inner"],
            tol=opts["tol"],
            seed=opts["seed"],
        )
        out, trace = solve_inpaint(prob, params)
    write_pgm(out, args.output)
    if args.trace_out and trace is not None:
        trace.write_csv(args.trace_out)
    if args.ref:
        ref = read_pgm(args.ref)
        print(f"psnr_db={psnr(out, ref)!r}")
    _write_sidecar(
        args.output,
        "inpaint",
        opts,
        {"input": args.input, "mask": args.mask, "method": args.method},
    )


def _cmd_superres(args):
    opts = _resolve_options(args)
    low = read_pgm(args.input)
    s = args.factor
    if s < 1:
        raise InvalidArgumentError(f"factor must be >= 1, got {s}")
    ml, nl = low.shape
    m, n = ml * s, nl * s
    cfg = _patch_config(opts, (m, n))
    trace = None
    if args.mode == "grid":
        h = np.zeros((m, n))
        h[::s, ::s] = low
        known = gen_mask(MaskSpec(kind="grid", stride=s), m, n)
        prob = InpaintProblem(data=h, known=known, cfg=cfg)
        if args.method == "harmonic":
            f0 = initialize_fill(prob, opts["seed"])
            ops = build_sweep_operators(f0, cfg, need_graph=True)
            out = harmonic_extension(h, known, ops.graph, tol=opts["tol"])
        else:
            params = SolverParams(
                lam=opts["lambda"],
                mu=opts["mu"],
                outer_iters=opts["outer"],
                inner_iters=opts["inner"],
                tol=opts["tol"],
                seed=opts["seed"],
            )
            out, trace = solve_inpaint(prob, params)
    else:
        if args.method == "harmonic":
            raise InvalidArgumentError("harmonic baseline applies to grid mode only")
        op = build_average_operator(m, n, s)
        prob = LinopProblem(
            op=op,
            g=low.ravel(),
            cfg=cfg,
            mu1=opts["mu"],
            mu2=opts["mu2"],
            outer_iters=opts["outer"],
            inner_iters=opts["inner"],
            tol=opts["tol"],
            seed=opts["seed"],
        )
        out, trace = solve_linop(prob)
    write_pgm(out, args.output)
    if args.trace_out and trace is not None:
        trace.write_csv(args.trace_out)
    if args.ref:
        print(f"psnr_db={psnr(out, read_pgm(args.ref))!r}")
    _write_sidecar(
        args.output,
        "superres",
        opts,
        {"input": args.input, "mode": args.mode, "factor": s, "method": args.method},
    )


def _geometry_from(opts, n):
    return FanBeamGeometry.standard(
        n,
        views=opts["views"],
        detectors=opts.get("detectors"),
        source_radius=opts.get("source-radius"),
        detector_radius=opts.get("detector-radius"),
    )


_CT_GEO_OPTS = [
    ("views", int, 30, "projection views over a full turn"),
    ("detectors", int, None, "detector cells per view (default 2N, 512 at N>=256)"),
    ("source-radius", float, None, "source circle radius in pixels (default 2N)"),
    ("detector-radius", float, None, "isocenter-to-detector distance (default 2N)"),
]


def _cmd_project(args):
    opts = _resolve_options(args)
    img = read_pgm(args.input)
    if img.shape[0] != img.shape[1]:
        raise InvalidArgumentError("projection needs a square image")
    geo = _geometry_from(opts, img.shape[0])
    a = build_system_matrix(geo)
    sino = forward_project(a, img).reshape(geo.views, geo.detectors)
    write_sinogram(sino, args.output)
    if args.matrix_out:
        write_matrix_market(a, args.matrix_out)
    _write_sidecar(
        args.output, "project", opts, {"input": args.input}, derived=geo.metadata()
    )


def _cmd_ct(args):
    opts = _resolve_options(args)
    sino = read_sinogram(args.input)
    views, detectors = sino.shape
    n = args.size
    if args.matrix:
        a = read_matrix_market(args.matrix)
        if a.shape != (views * detectors, n * n):
            raise InvalidArgumentError(
                f"matrix shape {a.shape} does not match sinogram "
                f"{views}x{detectors} on a {n}x{n} image"
            )
        derived = {"matrix": args.matrix}
    else:
        opts["views"] = views
        opts["detectors"] = detectors
        geo = _geometry_from(opts, n)
        a = build_system_matrix(geo)
        derived = geo.metadata()
    g = sino.ravel()
    op = LinearDegradation.from_sparse(a, (n, n))
    trace = None
    if args.method == "ls":
        normal_rhs = op.adjoint(g).ravel()

        def normal_apply(v):
            return op.adjoint(op.apply(v.reshape(n, n))).ravel()

        try:
            out = cg_solve(
                normal_apply, normal_rhs, tol=1e-12, max_iter=args.ls_iters
            ).reshape(n, n)
        except NumericalError as exc:
            out = getattr(exc, "iterate", None)
            if out is None:
                raise
            out = out.reshape(n, n)
    else:
        prob = LinopProblem(
            op=op,
            g=g,
            cfg=_patch_config(opts, (n, n)),
            mu1=opts["mu"],
            mu2=opts["mu2"],
            outer_iters=opts["outer"],
            inner_iters=opts["inner"],
            tol=opts["tol"],
            seed=opts["seed"],
        )
        out, trace = solve_linop(prob)
    write_pgm(out, args.output)
    if args.trace_out and trace is not None:
        trace.write_csv(args.trace_out)
    if args.ref:
        print(f"psnr_db={psnr(out, read_pgm(args.ref))!r}")
    _write_sidecar(
        args.output,
        "ct",
        opts,
        {"input": args.input, "method": args.method, "size": n},
        derived=derived,
    )


def _cmd_ssl(args):
    opts = _resolve_options(args)
    dims, images = read_idx(args.data)
    _, labels = read_idx(args.labels)
    if labels.ndim != 1 or labels.size != dims[0]:
        raise InvalidArgumentError(
            f"{labels.size} labels for {dims[0]} images"
        )
    points = images.reshape(dims[0], -1).astype(np.float64).T
    n_classes = int(labels.max()) + 1
    truth = labels.astype(np.int64)
    lab = random_labeled_subset(truth, args.labeled, n_classes, opts["seed"])
    estimated = solve_ssl(
        points,
        lab,
        k=opts["knn"],
        mu=opts["mu"],
        outer_iters=opts["outer"],
        inner_iters=opts["inner"],
    )
    write_labels_csv(estimated, args.output)
    correct = int((estimated == truth).sum())
    if args.accuracy_out:
        write_accuracy_csv(truth.size, lab.indices.size, correct, args.accuracy_out)
    init_correct = int((nearest_label_init(points, lab) == truth).sum())
    print(
        f"accuracy={correct / truth.size!r} "
        f"nearest_init_accuracy={init_correct / truth.size!r}"
    )
    _write_sidecar(
        args.output,
        "ssl",
        opts,
        {"data": args.data, "labels": args.labels, "labeled": args.labeled},
    )


def _cmd_psnr(args):
    value = psnr(read_pgm(args.input), read_pgm(args.ref))
    print(f"psnr_db={value!r}")


def _cmd_mask(args):
    opts = _resolve_options(args)
    if args.size:
        m, n = _parse_size(args.size)
    elif args.input:
        m, n = read_pgm(args.input).shape
    else:
        raise InvalidArgumentError("mask needs --size MxN or --input image")
    spec = MaskSpec(
        kind=args.kind, rate=opts["rate"], stride=opts["stride"], seed=opts["seed"]
    )
    mask = gen_mask(spec, m, n)
    write_pgm(np.where(mask, 255.0, 0.0), args.output)
    _write_sidecar(
        args.output,
        "mask",
        opts,
        {"kind": args.kind, "size": f"{m}x{n}", "input": args.input},
    )


def _cmd_phantom(args):
    opts = _resolve_options(args)
    kind = {"shepp": "shepp-like"}.get(args.kind, args.kind)
    img = make_phantom(kind, args.size)
    write_pgm(img, args.output)
    _write_sidecar(args.output, "phantom", opts, {"kind": kind, "size": args.size})


def build_parser():
    parser = argparse.ArgumentParser(
        prog="patchlr",
        description="patch-manifold local low-rank restoration toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inpaint", help="fill missing pixels")
    p.add_argument("--input", required=True)
    p.add_argument("--mask", required=True, help="PGM mask, nonzero = known")
    p.add_argument("--output", required=True)
    p.add_argument("--ref", default=None, help="ground truth for PSNR report")
    p.add_argument("--trace-out", default=None)
    p.add_argument("--method", choices=("mlr", "harmonic"), default="mlr")
    _add_options(
        p, ["patch-size", "knn", "lambda", "mu", "outer", "inner", "tol", "seed"]
    )
    p.set_defaults(func=_cmd_inpaint)

    p = sub.add_parser("superres", help="upscale a low-resolution image")
    p.add_argument("--input", required=True, help="low-resolution PGM")
    p.add_argument("--output", required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--mode", choices=("grid", "average"), default="grid")
    p.add_argument("--ref", default=None)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--method", choices=("mlr", "harmonic"), default="mlr")
    _add_options(
        p,
        ["patch-size", "knn", "lambda", "mu", "mu2", "outer", "inner", "tol", "seed"],
    )
    p.set_defaults(func=_cmd_superres)

    p = sub.add_parser("project", help="fan-beam forward projection")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help=".csv or raw sinogram path")
    p.add_argument("--matrix-out", default=None, help="also export the system matrix")
    _add_options(p, ["seed"], extra=_CT_GEO_OPTS)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("ct", help="fan-beam reconstruction from a sinogram")
    p.add_argument("--input", required=True, help="sinogram (.csv or raw)")
    p.add_argument("--size", type=int, required=True, help="image side in pixels")
    p.add_argument("--output", required=True)
    p.add_argument("--matrix", default=None, help="Matrix Market system matrix")
    p.add_argument("--ref", default=None)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--method", choices=("mlr", "ls"), default="mlr")
    p.add_argument("--ls-iters", type=int, default=200)
    _add_options(
        p,
        ["patch-size", "knn", "mu", "mu2", "outer", "inner", "tol", "seed"],
        extra=[opt for opt in _CT_GEO_OPTS if opt[0] not in ("views", "detectors")],
    )
    p.set_defaults(func=_cmd_ct)

    p = sub.add_parser("ssl", help="semi-supervised label completion")
    p.add_argument("--data", required=True, help="IDX image tensor")
    p.add_argument("--labels", required=True, help="IDX label array (ground truth)")
    p.add_argument("--labeled", type=int, required=True, help="labeled subset size")
    p.add_argument("--output", required=True, help="labels CSV")
    p.add_argument("--accuracy-out", default=None)
    _add_options(p, ["knn", "mu", "outer", "inner", "seed"])
    p.set_defaults(func=_cmd_ssl)

    p = sub.add_parser("psnr", help="peak signal-to-noise ratio of two images")
    p.add_argument("--input", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=_cmd_psnr, _option_table={})

    p = sub.add_parser("mask", help="generate a sampling mask")
    p.add_argument("--kind", choices=("random", "grid"), required=True)
    p.add_argument("--size", default=None, help="MxN")
    p.add_argument("--input", default=None, help="take the size from this image")
    p.add_argument("--output", required=True)
    _add_options(
        p,
        ["seed"],
        extra=[
            ("rate", float, 0.2, "known-pixel fraction for random masks"),
            ("stride", int, 2, "grid stride for grid masks"),
        ],
    )
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("phantom", help="write an analytic test image")
    p.add_argument("--kind", choices=("disk", "shepp", "texture"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--output", required=True)
    _add_options(p, ["seed"])
    p.set_defaults(func=_cmd_phantom)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
