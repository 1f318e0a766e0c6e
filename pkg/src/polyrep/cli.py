"""Command-line front end.

Exit codes: 0 success, 2 bad input or usage, 3 verification failed,
4 the oracle could not decide a step, 5 the set violates ``n < s``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import construct as C
from . import plotting
from . import verify as V
from .expr import leading_scale
from .oracle import OracleConfig, certify_enclosure, estimate_n_X
from .system import SemiAlgebraicSystem, SystemFormatError, load_points

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3
EXIT_UNKNOWN = 4
EXIT_HYPOTHESIS = 5

log = logging.getLogger("polyrep")

_GRID_DEFAULTS = {"resolution": 201, "pad": 0.5, "tol": 1e-7, "plot_resolution": 101}


class UsageError(ValueError):
    pass


@dataclass
class JobConfig:
    command: str
    input: Path | None
    output: Path | None
    oracle: OracleConfig
    grid: dict = field(default_factory=lambda: dict(_GRID_DEFAULTS))
    flags: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args) -> JobConfig:
        data = {}
        if args.config:
            try:
                data = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config: {exc}") from exc
            if not isinstance(data, dict):
                raise UsageError("config must be a JSON object")
        grid = dict(_GRID_DEFAULTS)
        grid.update(data.pop("grid", {}) or {})
        if int(grid["resolution"]) < 2 or int(grid["plot_resolution"]) < 2:
            raise UsageError("grid resolutions must be at least 2")
        if float(grid["pad"]) < 0 or float(grid["tol"]) < 0:
            raise UsageError("grid pad and tol must be nonnegative")
        try:
            oracle = OracleConfig.from_dict(data.pop("oracle", data))
            if args.seed is not None:
                oracle = oracle.replace(seed=args.seed)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad oracle config: {exc}") from exc
        inp = Path(args.input) if getattr(args, "input", None) else None
        if inp is not None and not inp.exists():
            raise UsageError(f"no such file: {inp}")
        out = Path(args.out) if args.out else None
        flags = {k: v for k, v in vars(args).items()
                 if k not in {"command", "input", "out", "config", "seed", "func", "verbose"}}
        return cls(args.command, inp, out, oracle, grid, flags)


def _load_system(path: Path) -> SemiAlgebraicSystem:
    return SemiAlgebraicSystem.load(path)


_out = None


def _say(text: str) -> None:
    """Write a line of command output (never mixed with solver chatter)."""
    stream = _out or sys.stdout
    stream.write(text + "\n")
    stream.flush()


def _emit(job: JobConfig, text: str) -> None:
    if job.output is None:
        _say(text)
    else:
        job.output.write_text(text + "\n")
        _say(f"wrote {job.output}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# -- commands ----------------------------------------------------------------------

def cmd_n_of(job: JobConfig) -> int:
    S = _load_system(job.input)
    ctx = C.prepare(S, job.oracle)
    est = estimate_n_X(list(S), ctx.box.pad(10 * max(job.oracle.tol, 1e-12)), job.oracle)
    if est.verdict.is_unknown and est.n == 0:
        raise C.PipelineError(est.verdict.reason, "estimate_n_X", est.verdict)
    report = est.to_dict()
    report["s"] = S.s
    if job.flags.get("json"):
        _emit(job, _dump(report))
        return EXIT_OK
    _say(f"n = {est.n}  (s = {S.s})")
    if est.finite:
        _say(f"X: {len(est.X)} point(s)")
        for v in est.X:
            _say("  " + " ".join(f"{c:.9g}" for c in v))
    else:
        _say("X: infinite")
    if job.output is not None:
        job.output.write_text(_dump(report) + "\n")
        _say(f"wrote {job.output}")
    return EXIT_OK


def _plot_stem(job: JobConfig, default_name: str) -> Path | None:
    stem = job.flags.get("plot")
    if stem:
        return Path(stem)
    if job.output is not None:
        return job.output.with_name(job.output.stem + "_" + default_name)
    return None


def cmd_reduce(job: JobConfig) -> int:
    S = _load_system(job.input)
    mode = C.Mode(job.flags["mode"])
    X = load_points(job.flags["X"]) if job.flags.get("X") else None
    if mode == C.Mode.N_PLUS_1:
        if X is not None:
            log.warning("--X is ignored in mode n+1")
        red = C.reduce_n_plus_1(S, job.oracle)
    else:
        red = C.reduce_n(S, X, job.oracle)
    audit = C.audit_parameters(red)
    box = V._fast_box(S, job.grid["pad"], job.oracle)
    rep = V.verify_reduction(red, box, int(job.grid["resolution"]), float(job.grid["tol"]))
    red.verification = {"equivalence": rep.to_dict(), "audit": audit}
    _emit(job, red.dumps())
    stem = _plot_stem(job, "q")
    if stem is not None:
        q = red.normalized[0]
        files = plotting.emit(stem, q.evaluate_many, box, int(job.grid["plot_resolution"]),
                              title=f"first output, mode {mode.value}", marks=red.X)
        _say("plot: " + ", ".join(files.values()))
    print(f"{len(red.outputs)} polynomial(s); grid check "
          f"{'passed' if rep.passed else 'FAILED'}; audit "
          f"{'passed' if all(audit.values()) else 'FAILED'}", file=sys.stderr)
    return EXIT_OK if rep.passed and all(audit.values()) else EXIT_VERIFY


def cmd_approx(job: JobConfig) -> int:
    eps = job.flags["eps"]
    if not eps > 0:
        raise UsageError("--eps must be positive")
    S = _load_system(job.input)
    at = job.flags.get("vanish_at")
    if at:
        X = load_points(at)
        ap = V.approx_polynomial_vanishing(S, X, eps, job.oracle)
    else:
        X = None
        ap = V.approx_polynomial(S, eps, job.oracle)
    out = ap.to_dict()
    out["target"] = eps
    if X is not None:
        out["values_at_X"] = [float(v) for v in ap.q.evaluate_many(np.asarray(X, dtype=float)) / leading_scale(ap.q)]
    _emit(job, _dump(out))
    stem = _plot_stem(job, "grid") if job.flags.get("grid") is None else Path(job.flags["grid"])
    if stem is not None:
        files = plotting.emit(stem, ap.q.evaluate_many, ap.box, int(job.grid["plot_resolution"]),
                              title=f"approximation, eps = {eps:g}", marks=X)
        _say("grid: " + ", ".join(files.values()))
    h = ap.hausdorff
    print(f"Hausdorff estimate {h.estimate:.4g}, upper bound {h.upper:.4g} (target {eps:g})",
          file=sys.stderr)
    return EXIT_OK if h.upper <= eps else EXIT_VERIFY


def cmd_verify(job: JobConfig) -> int:
    try:
        data = json.loads(job.input.read_text())
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or not data.get("outputs"):
        raise UsageError("the reduction has no output polynomials")
    try:
        red = C.Reduction.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemFormatError(f"malformed reduction: {exc}") from exc
    box = V._fast_box(red.system, job.grid["pad"], job.oracle)
    rep = V.grid_equivalence(red.system, red, box, int(job.grid["resolution"]), float(job.grid["tol"]))
    _emit(job, _dump(rep.to_dict()))
    print(f"closed disagreements {rep.closed_disagree}, open disagreements {rep.open_disagree}",
          file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_certify_bounded(job: JobConfig) -> int:
    S = _load_system(job.input)
    M, eps = job.flags["M"], job.flags["eps"]
    if M < 0 or not eps > 0:
        raise UsageError("need M >= 0 and eps > 0")
    res = certify_enclosure(list(S), M, eps, r_max=job.flags.get("r_max"), cfg=job.oracle)
    _emit(job, _dump(res.to_dict()))
    if res.verdict.is_unknown:
        raise C.PipelineError(res.verdict.reason, "certify_enclosure", res.verdict)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="JSON file with oracle settings and an optional 'grid' block",
                   **({"default": None} if not suppress else d))
    p.add_argument("--seed", type=int, help="seed for every random choice",
                   **({"default": None} if not suppress else d))
    p.add_argument("--out", help="output file (stdout when omitted)",
                   **({"default": None} if not suppress else d))
    p.add_argument("-v", "--verbose", action="store_true",
                   **({"default": False} if not suppress else d))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyrep", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.add_argument("input", help="system or reduction JSON file")
        p.set_defaults(func=func)
        return p

    p = add("n-of", cmd_n_of, "maximal number of active constraints and where it is attained")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = add("reduce", cmd_reduce, "compute a shorter representation and check it on a grid")
    p.add_argument("--mode", choices=[m.value for m in C.Mode], default="n")
    p.add_argument("--X", help="JSON point list of maximally active points (mode n)")
    p.add_argument("--plot", help="stem for CSV/PNG grid samples of the first output")

    p = add("approx", cmd_approx, "single polynomial approximating the set")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--vanish-at", help="JSON point list where the polynomial must vanish")
    p.add_argument("--grid", help="stem for CSV/PNG grid samples of the polynomial")

    add("verify", cmd_verify, "re-check a reduction file against its system")

    p = add("certify-bounded", cmd_certify_bounded, "decide boundedness of the relaxed set")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--r-max", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    global _out
    saved = _quiet_stdout()
    try:
        job = JobConfig.from_args(args)
        return args.func(job)
    except C.HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except C.PipelineError as exc:
        print(f"error: pipeline stopped at {exc.step or '?'}: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (UsageError, SystemFormatError, C.InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if saved is not None:
            _out.close()
            sys.stdout.flush()
            os.dup2(saved, 1)
            os.close(saved)
            _out = None


def _quiet_stdout() -> int | None:
    """Point fd 1 at stderr so native solver logs cannot corrupt the output;
    results go to a duplicate of the original stdout. Returns that duplicate."""
    global _out
    try:
        fd = sys.stdout.fileno()
    except (AttributeError, OSError, ValueError):
        return None
    if fd != 1:
        return None
    sys.stdout.flush()
    saved = os.dup(1)
    os.dup2(2, 1)
    _out = os.fdopen(os.dup(saved), "w")
    return saved


if __name__ == "__main__":
    sys.exit(main())
