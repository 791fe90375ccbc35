"""Command-line driver: mframes {lattice,cubature,frame,sample,verify,report}.

Settings come from an optional JSON ``--config`` file overlaid by explicit
flags. Exit codes: 0 when every check passes, 1 on a failed check or a
numerical failure, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cubature import auto_rho, compute_weights
from .errors import MFramesError, UsageError
from .frames import build_frame, localization_profile
from .io import (
    dumps, lattice_from_json, lattice_to_json, load_frame, read_json, rule_from_json,
    rule_to_json, save_frame, write_json,
)
from .lattice import generate_lattice, verify_lattice
from .manifolds import SpectralCoefficients, get_manifold, random_bandlimited
from .records import CSV_HELP, FORMATS, ExperimentConfig, ResultRecord, load_config, parse_records, report
from .sampling import build_sampling_scheme, discrete_representation, reconstruct
from .suites import (
    LOCALIZATION_BOUND, LOCALIZATION_RADIUS, SHANNON_TOL, SUITES, frame_checks, item_rng,
    lmax_to_omega, run_suites,
)

log = logging.getLogger("mframes")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _rho(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _common(p, *names):
    """Add shared options; defaults are suppressed so only explicit flags override the config."""
    S = argparse.SUPPRESS
    opts = {
        "manifold": dict(help="circle, torus2 or sphere2"),
        "omega": dict(type=float, help="band: eigenvalues <= omega"),
        "Omega": dict(type=float, help="design band of the sampling scheme"),
        "lmax": dict(type=int, help="sphere degree; sets omega = lmax (lmax + 1)"),
        "a": dict(type=float, help="lattice constant (default per manifold)"),
        "rho": dict(type=_rho, help="lattice spacing"),
        "strategy": dict(choices=("grid", "farthest"), help="lattice generator"),
        "trials": dict(type=int, help="random trials per check"),
        "points": dict(type=int, help="test points"),
        "j": dict(type=int, help="scale index"),
        "k": dict(type=int, help="atom index within the scale"),
        "j-max": dict(type=int, help="top scale of the filter bank"),
        "probe-count": dict(type=int, help="probe points for lattice or profile checks"),
        "guard-scales": dict(type=int, help="extra filter scales beyond the target band"),
        "lattice-in": dict(metavar="PATH"),
        "lattice-out": dict(metavar="PATH"),
        "rule-in": dict(metavar="PATH"),
        "rule-out": dict(metavar="PATH"),
        "signal": dict(metavar="PATH"),
        "frame-dir": dict(metavar="DIR"),
        "out": dict(metavar="PATH", help="CSV output"),
    }
    for name in names:
        p.add_argument(f"--{name}", default=S, dest=name.replace("-", "_"), **opts[name])


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    shared.add_argument("--config", metavar="PATH", help="JSON config; explicit flags win")
    shared.add_argument("--record", metavar="PATH", help="write result records as JSON")
    shared.add_argument("--seed", type=int, default=S)
    shared.add_argument("--tol", type=float, default=S)
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mframes", description=__doc__.splitlines()[0],
        epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, helptext, *opts, parent=sub):
        p = parent.add_parser(name, parents=[shared], help=helptext, epilog=CSV_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p, *opts)
        return p

    add("lattice", "generate or check a rho-lattice",
        "manifold", "rho", "strategy", "probe-count", "lattice-in", "lattice-out")
    add("cubature", "positive cubature exact on E_omega",
        "manifold", "omega", "rho", "strategy", "lattice-in", "rule-out")

    frame = sub.add_parser("frame", help="build, verify or profile a Parseval frame")
    fsub = frame.add_subparsers(dest="action", required=True)
    add("build", "construct and save a frame", "manifold", "omega", "lmax", "a",
        "guard-scales", "frame-dir", parent=fsub)
    add("verify", "Parseval and roundtrip checks on a saved frame", "frame-dir", "trials",
        parent=fsub)
    add("profile", "atom magnitude against scaled distance", "frame-dir", "j", "k",
        "probe-count", "out", parent=fsub)

    sample = sub.add_parser("sample", help="Shannon reconstruction and discrete Fourier coefficients")
    ssub = sample.add_subparsers(dest="action", required=True)
    add("run", "reconstruct a random E_omega signal from its samples", "manifold", "omega",
        "Omega", "a", "points", "out", parent=ssub)
    fourier = add("fourier", "coefficients from samples at cubature nodes", "omega", parent=ssub)
    fourier.add_argument("--rule", dest="rule_in", default=S, metavar="PATH")
    fourier.add_argument("--signal", dest="signal", default=S, metavar="PATH")

    verify = add("verify", "run named verification suites", "manifold", "omega", "Omega",
                 "lmax", "a", "trials", "points", "j", "k", "j-max", "probe-count",
                 "guard-scales")
    verify.add_argument("--suite", default=S, choices=(*SUITES, "all"))

    rep = sub.add_parser("report", help="render saved records", epilog=CSV_HELP,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    rep.add_argument("records", nargs="+", metavar="RECORDS.json")
    rep.add_argument("--format", default="table", choices=FORMATS)
    rep.add_argument("--out", metavar="PATH")
    return parser


_META = {"config", "record", "verbose", "command", "action", "records", "format"}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_config(args.config) if getattr(args, "config", None) else {}
    command = args.command if getattr(args, "action", None) is None else f"{args.command} {args.action}"
    data = {**data, **{k: v for k, v in vars(args).items() if k not in _META}, "command": command}
    return ExperimentConfig.from_mapping(data, args.config or "flags")


def _require(config, field, flag=None):
    value = getattr(config, field)
    if value is None:
        raise UsageError(f"{config.command} needs --{flag or field.replace('_', '-')}")
    return value


def _record(config, name, measured, checks, rows=()):
    return ResultRecord(name=name, command=config.command, config=config.to_dict(),
                        measured=measured, checks=checks, rows=list(rows), seed=config.seed)


def cmd_lattice(config):
    if config.lattice_in:
        lattice = lattice_from_json(read_json(config.lattice_in), config.lattice_in)
        rho = lattice.rho
    else:
        rho = _require(config, "rho")
        if rho == "auto":
            raise UsageError("lattice needs a numeric --rho")
        man = get_manifold(_require(config, "manifold"))
        lattice = generate_lattice(man, rho, config.strategy or "farthest", config.seed)
    if config.lattice_out:
        write_json(config.lattice_out, lattice_to_json(lattice))
    rep = verify_lattice(lattice, config.probe_count)
    measured = {"manifold": lattice.manifold.name, "rho": rho, "points": rep.point_count,
                "min_separation": rep.min_separation, "covering_radius": rep.covering_radius,
                "multiplicity": rep.multiplicity, "cover_multiplicity": rep.cover_multiplicity}
    return [_record(config, "lattice", measured, {"separated": rep.separated,
                                                  "covering": rep.covering})]


def cmd_cubature(config):
    omega = _require(config, "omega")
    if config.lattice_in:
        lattice = lattice_from_json(read_json(config.lattice_in), config.lattice_in)
        man = lattice.manifold
    else:
        man = get_manifold(_require(config, "manifold"))
        rho = config.rho if config.rho not in (None, "auto") else auto_rho(man, omega)
        strategy = config.strategy or ("farthest" if man.name == "sphere2" else "grid")
        lattice = generate_lattice(man, rho, strategy, config.seed)
    rule = compute_weights(man, lattice, omega, config.tol)
    if config.rule_out:
        write_json(config.rule_out, rule_to_json(rule))
    c1, c2 = rule.weight_constants()
    measured = {"manifold": man.name, "omega": omega, "rho": lattice.rho, "nodes": len(rule),
                "residual": rule.residual, "min_weight": float(rule.weights.min()),
                "weight_ratio": rule.weight_ratio(), "c1": c1, "c2": c2, "solver": rule.solver}
    return [_record(config, "cubature", measured, {"exact": rule.residual <= config.tol,
                                                   "positive": bool(rule.weights.min() > 0)})]


def cmd_frame_build(config):
    omega = lmax_to_omega(config.lmax) if config.lmax is not None else _require(config, "omega")
    directory = _require(config, "frame_dir")
    frame = build_frame(_require(config, "manifold"), omega, a=config.a, tol=config.tol,
                        seed=config.seed, guard_scales=config.guard_scales)
    save_frame(frame, directory)
    rows = [{"j": s.j, "rho": s.rule.lattice.rho, "nodes": s.count, "exact_on": s.rule.omega,
             "residual": s.rule.residual, "weight_ratio": s.rule.weight_ratio()}
            for s in frame.scales]
    measured = {"manifold": frame.manifold.name, "omega": omega, "j_max": frame.j_max,
                "a": frame.a, "atoms": frame.atom_count(), "covered_band": frame.covered_band}
    checks = {"cubature": all(r["residual"] <= config.tol for r in rows)}
    return [_record(config, "frame build", measured, checks, rows)]


def cmd_frame_verify(config):
    frame = load_frame(_require(config, "frame_dir"))
    measured, checks = frame_checks(frame, item_rng(config.seed, "frame verify"),
                                    config.trials or 100)
    return [_record(config, "frame verify", measured, checks)]


def cmd_frame_profile(config):
    frame = load_frame(_require(config, "frame_dir"))
    j = _require(config, "j")
    prof = localization_profile(frame, j, config.k, probe_count=config.probe_count or 20000)
    if config.out:
        _write_csv(config.out, ["scaled_distance", "magnitude"], prof.rows())
    measured = {"manifold": frame.manifold.name, "j": j, "k": config.k,
                "center_value": prof.center_value, "probes": int(prof.magnitude.size),
                **{f"mass_outside_{r}": v for r, v in prof.mass_outside.items()}}
    checks = {"peak_at_center": bool(prof.peak_at_center)}
    if LOCALIZATION_RADIUS in prof.mass_outside:
        checks["mass_outside"] = prof.mass_outside[LOCALIZATION_RADIUS] < LOCALIZATION_BOUND
    return [_record(config, "frame profile", measured, checks)]


def cmd_sample_run(config):
    man = get_manifold(_require(config, "manifold"))
    Omega = _require(config, "Omega")
    omega = config.omega if config.omega is not None else Omega
    rng = item_rng(config.seed, "sample run")
    scheme = build_sampling_scheme(man, Omega, config.a, config.tol, config.seed)
    f = random_bandlimited(man, omega, rng)
    pts = man.random_points(rng, config.points)
    truth = f.evaluate(pts)
    approx = reconstruct(scheme, f.evaluate(scheme.nodes), pts)
    err = np.abs(approx - truth)
    if config.out:
        coords = [f"x{i}" for i in range(man.coord_dim)]
        _write_csv(config.out, [*coords, "true", "reconstructed", "abs_error"],
                   np.column_stack([pts, truth, approx, err]).tolist())
    rel = float(err.max() / np.abs(truth).max())
    measured = {"manifold": man.name, "omega": omega, "Omega": Omega, "nodes": scheme.node_count,
                "points": config.points, "max_abs_error": float(err.max()),
                "relative_sup_error": rel}
    if omega > Omega:
        log.warning("signal band %g exceeds design band %g; expect aliasing", omega, Omega)
    return [_record(config, "sample run", measured, {"reconstruction": rel < SHANNON_TOL})]


def cmd_sample_fourier(config):
    rule = rule_from_json(read_json(_require(config, "rule_in", "rule")), config.rule_in)
    signal = read_json(_require(config, "signal"))
    man = rule.manifold
    expected = None
    if "coeffs" in signal:
        f = SpectralCoefficients(signal.get("manifold", man.name), float(signal["omega"]),
                                 signal["coeffs"])
        samples = f.evaluate(rule.points)
        expected = f.coeffs
        omega = f.omega if config.omega is None else config.omega
    elif "samples" in signal:
        samples = np.asarray(signal["samples"], dtype=float)
        omega = config.omega if config.omega is not None else signal.get("omega")
        if omega is None:
            raise UsageError("signal samples need an 'omega' field or --omega")
    else:
        raise UsageError(f"{config.signal}: expected a 'coeffs' or 'samples' field")
    coeffs = discrete_representation(rule, samples, float(omega))
    rows = [{"m": e.m, "lambda": e.eigenvalue, "label": e.label_str(), "coefficient": c}
            for e, c in zip(coeffs.entries, coeffs.coeffs)]
    measured = {"manifold": man.name, "omega": omega, "nodes": len(rule)}
    checks = {}
    if expected is not None:
        ref = SpectralCoefficients(man, f.omega, expected).with_band(omega).coeffs
        measured["max_coefficient_error"] = float(np.abs(coeffs.coeffs - ref).max())
        checks["coefficients"] = measured["max_coefficient_error"] < 1e-10
    return [_record(config, "sample fourier", measured, checks, rows)]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([repr(float(v)) for v in row] for row in rows)


COMMANDS = {
    "lattice": cmd_lattice, "cubature": cmd_cubature,
    "frame build": cmd_frame_build, "frame verify": cmd_frame_verify,
    "frame profile": cmd_frame_profile,
    "sample run": cmd_sample_run, "sample fourier": cmd_sample_fourier,
    "verify": run_suites,
}


def run(config: ExperimentConfig) -> list[ResultRecord]:
    """Dispatch a resolved config to its command and return the records."""
    try:
        func = COMMANDS[config.command]
    except KeyError:
        raise UsageError(f"unknown command {config.command!r}") from None
    if config.command == "verify":
        return func(config)
    start = time.perf_counter()
    records = func(config)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    for rec in records:
        rec.wall_clock = time.perf_counter() - start
        rec.timestamp = stamp
    return records


def _report(args) -> int:
    records = []
    for path in args.records:
        records += parse_records(Path(path).read_text())
    text = report(records, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return _report(args)
        config = resolve_config(args)
        records = run(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MFramesError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.record:
        Path(args.record).write_text(dumps([r.to_dict() for r in records]) + "\n")
    sys.stdout.write(report(records, "table"))
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
