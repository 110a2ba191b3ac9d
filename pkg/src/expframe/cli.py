"""Command-line front end.

    expframe construct --input spectrum.json --out run.json
    expframe certify   --input run.json
    expframe verify    --input run.json --count 200
    expframe density   --input run.json
    expframe schedule  --delta 0.001 --format csv

Exit status: 0 on pass, 1 on input errors, 2 when certification or
verification fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path


from expframe.errors import ExpFrameError, GridTooCoarse, InputError, NoCertifiedPartition
from expframe.matrix_core import FrequencySet, RowSelection, frame_certificate, gram_spectrum
from expframe.selection import SelectionConfig, compute_schedule, select_rows
from expframe.spectrum import (
    GridSpectrum,
    grid_cover,
    normalize_to_window,
    search_grid_cover,
    spectrum_from_json,
)
from expframe.verification import (
    density_report,
    extremal_witness,
    pw_monte_carlo,
    rayleigh_matrix_samples,
    window_count_check,
    witness_ratio,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class CheckFailed(Exception):
    def __init__(self, doc, message):
        super().__init__(message)
        self.doc = doc


def _load_input(raw: str | None) -> dict:
    if raw is None:
        raise InputError("--input is required")
    text = raw if raw.lstrip()[:1] in ("{", "[") else Path(raw).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"input is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("input JSON must be an object")
    return obj


def _selection_config(args) -> SelectionConfig:
    return SelectionConfig(
        method=args.method, seed=args.seed, max_attempts=args.max_attempts, slack=args.slack
    )


def _grid_and_J(args, obj: dict) -> tuple[GridSpectrum, RowSelection]:
    if "grid" not in obj:
        raise InputError("input needs a 'grid' entry")
    grid = spectrum_from_json({"grid": obj["grid"]})
    if args.J is not None:
        J = [int(x) for x in args.J.split(",") if x.strip()]
    elif "J" in obj:
        J = obj["J"]
    elif "frequency_set" in obj:
        J = obj["frequency_set"]["J"]
    else:
        raise InputError("no row selection: pass --J or include 'J' in the input")
    if any(int(j) >= grid.m for j in J):
        raise InputError(f"J has entries outside [0, {grid.m - 1}]")
    return grid, RowSelection(tuple(J))


def _frequency_doc(grid: GridSpectrum, J: RowSelection) -> dict:
    F = FrequencySet(J.J, grid.m, grid.d)
    return {
        **F.to_json(),
        "description": f"{{(j + {grid.m}k)/{grid.d!r} : j in J, k in Z}}",
        "separation": F.separation,
        "density": F.density,
    }


def cmd_construct(args) -> dict:
    obj = _load_input(args.input)
    source = spectrum_from_json(obj)
    cfg = _selection_config(args)
    config = {"selection": cfg.to_json(), "m": args.m, "epsilon_cover": args.epsilon_cover, "d": args.d}
    if isinstance(source, GridSpectrum):
        grid = source
        spectrum_doc = {"input": obj, "shift": 0.0, "d": grid.d, "excess": 0.0, "measure": grid.measure}
    else:
        moved, shift, d_fit = normalize_to_window(source)
        if args.d is None:
            # integer frequencies whenever the spectrum fits a 2*pi window
            d = max(1.0, d_fit)
        elif args.d < d_fit:
            raise InputError(f"--d {args.d} is too small; the spectrum needs d >= {d_fit}")
        else:
            d = args.d
        if args.m is not None:
            grid, excess = grid_cover(moved, d, args.m, tolerance=args.epsilon_cover)
        else:
            try:
                grid, excess = search_grid_cover(moved, d, epsilon_cover=args.epsilon_cover)
            except GridTooCoarse:
                if args.d is not None or d == d_fit:
                    raise
                # small spectra: finer cells from the tight window
                d = d_fit
                grid, excess = search_grid_cover(moved, d, epsilon_cover=args.epsilon_cover)
        spectrum_doc = {
            "input": obj,
            "shift": shift,
            "d": d,
            "excess": excess,
            "measure": moved.measure,
        }
    try:
        J, cert, trace = select_rows(grid, cfg)
    except NoCertifiedPartition as exc:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "construct",
            "config": config,
            "spectrum": spectrum_doc,
            "grid": grid.to_json(),
            "trace": None if exc.trace is None else exc.trace.to_json(),
        }
        raise CheckFailed(doc, f"halving stage: {exc}") from exc
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "construct",
        "config": config,
        "spectrum": spectrum_doc,
        "grid": grid.to_json(),
        "frequency_set": _frequency_doc(grid, J),
        "certificate": cert.to_json(),
        "trace": trace.to_json(),
    }


def cmd_certify(args) -> dict:
    obj = _load_input(args.input)
    grid, J = _grid_and_J(args, obj)
    cert = frame_certificate(grid, J)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "certify",
        "config": {"J": list(J.J), "seed": args.seed},
        "grid": grid.to_json(),
        "frequency_set": _frequency_doc(grid, J),
        "certificate": cert.to_json(),
        "gram_spectrum": gram_spectrum(grid, J.J).tolist(),
    }
    if not cert.is_frame:
        raise CheckFailed(doc, "certificate stage: lambda_min = 0, the system is not a frame")
    return doc


def cmd_verify(args) -> dict:
    obj = _load_input(args.input)
    grid, J = _grid_and_J(args, obj)
    cert = frame_certificate(grid, J)
    R = 50.0 * grid.m / grid.d if args.R is None else args.R
    mc = pw_monte_carlo(grid, J, count=args.count, K=args.K, R=R, seed=args.seed, tol=args.tol)
    ray = rayleigh_matrix_samples(grid, J, args.count, seed=args.seed)
    slack = 1e-9 * grid.m
    ray_ok = all(cert.lambda_min - slack <= v <= cert.lambda_max + slack for v in ray)
    witnesses = {}
    wit_ok = True
    for side, target, pw_target in (
        ("min", cert.lambda_min, cert.a_sampling),
        ("max", cert.lambda_max, cert.A_sampling),
    ):
        _, value = extremal_witness(grid, J, side)
        ratio, tail = witness_ratio(grid, J, side, K=args.K, R=R, seed=args.seed)
        matrix_ok = abs(value - target) <= 1e-9 * max(cert.lambda_max, 1.0)
        pw_ok = pw_target * (1 - args.tol) - tail <= ratio <= pw_target * (1 + args.tol) + 1e-12
        wit_ok = wit_ok and matrix_ok and pw_ok
        witnesses[side] = {
            "matrix_value": value,
            "certified": target,
            "pw_ratio": ratio,
            "pw_certified": pw_target,
            "tail": tail,
            "pass": matrix_ok and pw_ok,
        }
    passed = mc.passed and ray_ok and wit_ok and cert.is_frame
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "config": {
            "J": list(J.J), "seed": args.seed, "count": args.count, "K": args.K, "R": R, "tol": args.tol,
        },
        "grid": grid.to_json(),
        "certificate": cert.to_json(),
        "monte_carlo": mc.to_json(),
        "rayleigh": {"min": min(ray), "max": max(ray), "pass": ray_ok},
        "witnesses": witnesses,
        "pass": passed,
    }
    if not passed:
        raise CheckFailed(doc, "verification stage: a sampling check failed")
    return doc


def cmd_density(args) -> dict:
    obj = _load_input(args.input)
    grid, J = _grid_and_J(args, obj)
    cert = frame_certificate(grid, J)
    F = FrequencySet(J.J, grid.m, grid.d)
    window = grid.m / grid.d if args.window is None else args.window
    rep = density_report(F, grid.measure, window, (0.0, 40.0 * window), n=grid.n, certificate=cert)
    counts = window_count_check(grid, J)
    passed = bool(rep.landau_ok is not False and rep.J_covers_n and rep.upper_ok and counts["ok_frame"])
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "density",
        "config": {"J": list(J.J), "seed": args.seed, "window": window},
        "grid": grid.to_json(),
        "density": rep.to_json(),
        "window_count": counts,
        "pass": passed,
    }
    if not passed:
        raise CheckFailed(doc, "density stage: a density bound failed")
    return doc


def cmd_schedule(args) -> dict:
    if args.delta is None:
        raise InputError("schedule needs --delta")
    s = compute_schedule(args.delta)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "schedule",
        "config": {"delta": args.delta, "seed": args.seed},
        "schedule": s.to_json(),
    }


def _csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cmd = doc["command"]
    if cmd == "schedule":
        s = doc["schedule"]
        w.writerow(["j", "alpha", "beta"])
        for j, (a, b) in enumerate(zip(s["alphas"], s["betas"])):
            w.writerow([j, repr(a), repr(b)])
    elif cmd in ("certify", "construct") and "gram_spectrum" in doc:
        # one eigenvalue per line, ascending
        for v in doc["gram_spectrum"]:
            w.writerow([repr(v)])
    elif cmd == "construct":
        w.writerow(["J"])
        for j in doc.get("frequency_set", {}).get("J", []):
            w.writerow([j])
    elif cmd == "verify":
        w.writerow(["trial", "ratio"])
        for i, q in enumerate(doc["monte_carlo"]["ratios"]):
            w.writerow([i, repr(q)])
    elif cmd == "density":
        w.writerow(["offset", "count"])
        for x, c in zip(doc["density"]["offsets"], doc["density"]["counts"]):
            w.writerow([repr(x), c])
    return buf.getvalue()


def _emit(doc: dict, args) -> None:
    text = _csv(doc) if args.format == "csv" else json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="JSON file or inline JSON object")
    common.add_argument("--m", type=int, help="fixed grid order (default: search from 64)")
    common.add_argument("--epsilon-cover", type=float, help="allowed excess measure of the grid cover")
    common.add_argument("--d", type=float, help="frequency scale; Lambda lies in (1/d)Z")
    common.add_argument("--J", help="comma-separated residues for certify/verify/density")
    common.add_argument("--method", default="random_certified",
                        choices=["exhaustive", "random_certified", "greedy_swap"])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-attempts", type=int, default=1000)
    common.add_argument("--slack", type=float, default=0.05)
    common.add_argument("--count", type=int, default=200)
    common.add_argument("--K", type=int, default=4)
    common.add_argument("--R", type=float)
    common.add_argument("--tol", type=float, default=0.02)
    common.add_argument("--delta", type=float, help="schedule parameter")
    common.add_argument("--window", type=float, help="density window length (default m/d)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(prog="expframe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("construct", "certify", "verify", "density", "schedule"):
        sub.add_parser(name, parents=[common])
    return parser


COMMANDS = {
    "construct": cmd_construct,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "density": cmd_density,
    "schedule": cmd_schedule,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = COMMANDS[args.subcommand](args)
    except CheckFailed as exc:
        _emit(exc.doc, args)
        print(f"expframe: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, GridTooCoarse, OSError) as exc:
        print(f"expframe: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ExpFrameError as exc:
        print(f"expframe: {exc.stage} stage: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(doc, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
