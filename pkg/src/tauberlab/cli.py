"""Command-line front end: configuration, dispatch, and result emission.

Exit codes: 0 success, 1 domain/contract errors, 2 resource/precision
errors, 64 usage errors. All failures print a single-line JSON object
{"code": ..., "message": ...} to standard error. Outputs carry no
timestamps, so identical invocations produce byte-identical files.

Configuration is a flat `key = value` file ('#' starts a comment); file
values overlay the defaults and command-line flags overlay both. The
effective configuration and tool version are embedded in every report.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, ContractError, TauberlabError

_VERSION = "0.1.0"
_CONFIG_KEYS = ("cache_dir", "prime_limit", "length", "order", "abs_tol", "max_terms", "format")


@dataclass
class RunConfig:
    """Tool-wide knobs; field names double as the config-file keys."""

    cache_dir: Optional[str] = None
    prime_limit: int = 100_000_000
    length: float = 8.0 * math.pi
    order: int = 64
    abs_tol: float = 1e-10
    max_terms: int = 1_000_000
    format: str = "json"

    def validate(self) -> "RunConfig":
        if self.prime_limit < 2:
            raise ConfigError(f"prime_limit must be >= 2, got {self.prime_limit}")
        if not (self.length > 0):
            raise ConfigError(f"length must be positive, got {self.length}")
        if self.order < 0:
            raise ConfigError(f"order must be >= 0, got {self.order}")
        if not (0 < self.abs_tol <= 1e-4):
            raise ConfigError(f"abs_tol must lie in (0, 1e-4], got {self.abs_tol}")
        if self.max_terms < 100:
            raise ConfigError(f"max_terms must be >= 100, got {self.max_terms}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        return self

    def tolerance(self):
        from .special import EvalTolerance

        return EvalTolerance(abs_tol=self.abs_tol, max_terms=self.max_terms)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path: Optional[str]) -> RunConfig:
    """Defaults overlaid by the flat key-value file (if given)."""
    cfg = RunConfig()
    if path is None:
        return cfg.validate()
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            if key in ("prime_limit", "order", "max_terms"):
                setattr(cfg, key, int(value))
            elif key in ("length", "abs_tol"):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return cfg.validate()


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code the tool's taxonomy wants (64)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def _shared_flags(p: argparse.ArgumentParser, suppress: bool = False) -> None:
    # Subparser copies default to SUPPRESS: a value parsed before the
    # subcommand name must survive the subparser's own defaulting pass.
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--config", help="flat key = value config file", **d)
    p.add_argument("--jobs", type=int, help="cap worker threads (set before numeric libraries load)", **d)
    p.add_argument("--cache-dir", help="prime table cache directory", **d)
    p.add_argument("--prime-limit", type=int, help="sieve/table limit", **d)
    p.add_argument("--format", choices=["json", "csv"], help="stdout format for sequences", **d)


def _build_parser() -> _Parser:
    shared = argparse.ArgumentParser(add_help=False)
    _shared_flags(shared, suppress=True)
    p = _Parser(prog="tauberlab", description="Numerical laboratory for ratio limits, transforms, and truncated convolution operators.")
    _shared_flags(p)
    p.add_argument("--version", action="version", version=f"tauberlab {_VERSION}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def leaf(parent, name, **kw):
        return parent.add_parser(name, parents=[shared], **kw)

    sp = leaf(sub, "primes", help="prime counting against the cached table")
    sp.add_argument("--count", type=float, required=True, metavar="X", help="count primes <= X")

    sp = sub.add_parser("special", help="zeta-family special functions")
    ssub = sp.add_subparsers(dest="special_command", parser_class=_Parser)
    se = leaf(ssub, "eval", help="evaluate one function at s = sigma + it")
    se.add_argument("--fn", required=True, choices=["zeta", "zetad", "pzeta", "pzetad", "psi", "psip"])
    se.add_argument("--sigma", type=float, required=True)
    se.add_argument("--t", type=float, default=0.0)

    sp = sub.add_parser("transform", help="Laplace-type transforms of counting functions")
    tsub = sp.add_subparsers(dest="transform_command", parser_class=_Parser)
    te = leaf(tsub, "eval", help="evaluate a transform at s = sigma + it")
    te.add_argument("--source", required=True, choices=["integers", "primes", "wprimes", "file"])
    te.add_argument("--file", help="step function as CSV lines x_j,a_j (for --source file)")
    te.add_argument("--sigma", type=float, required=True)
    te.add_argument("--t", type=float, default=0.0)

    sp = sub.add_parser("operator", help="assemble truncations, diagonals, spectra")
    osub = sp.add_subparsers(dest="operator_command", parser_class=_Parser)
    for name, hlp in (("assemble", "full matrix"), ("diag", "diagonal sequence"), ("spectrum", "eigenvalues")):
        op = leaf(osub, name, help=hlp)
        op.add_argument("--source", required=True, help="one of: " + ", ".join(_SOURCE_NAMES))
        op.add_argument("--length", type=float, help="interval length L")
        op.add_argument("--eps", type=float, required=True)
        op.add_argument("--order", type=int, help="truncation order N")
        if name != "diag":
            op.add_argument("--route", choices=["kernel", "frequency"], default="frequency")
        else:
            op.add_argument("--A", type=float, default=0.0, help="identity multiple to subtract")
        op.add_argument("--out", help="write CSV here instead of stdout")

    sp = sub.add_parser("experiment", help="theorem-level experiments")
    esub = sp.add_subparsers(dest="experiment_command", parser_class=_Parser)
    for name in ("forward", "converse", "pnt", "battery"):
        ep = leaf(esub, name)
        if name in ("forward", "converse"):
            ep.add_argument("--source", required=True, help="one of: " + ", ".join(_SOURCE_NAMES))
        ep.add_argument("--length", type=float)
        ep.add_argument("--order", type=int)
        ep.add_argument("--umax", type=float)
        ep.add_argument("--report", help="write the full JSON report here (plus .ratio.csv companion)")
    return p


_SOURCE_NAMES = ("linear", "integers", "wprimes", "sqrt_mix", "log_osc", "single_jump", "slow")


def _overlay(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "cache_dir", None) is not None:
        cfg.cache_dir = args.cache_dir
    if getattr(args, "prime_limit", None) is not None:
        cfg.prime_limit = args.prime_limit
    if getattr(args, "format", None) is not None:
        cfg.format = args.format
    if getattr(args, "length", None) is not None:
        cfg.length = args.length
    if getattr(args, "order", None) is not None:
        cfg.order = args.order
    return cfg.validate()


def _table(cfg: RunConfig):
    from .arith import build_prime_table

    return build_prime_table(cfg.prime_limit, cache_dir=cfg.cache_dir)


def _source(name: str, cfg: RunConfig):
    from . import transform as tr

    if name == "linear":
        return tr.source_identity()
    if name == "integers":
        return tr.source_integers()
    if name == "wprimes":
        return tr.source_primes_weighted(_table(cfg))
    if name == "sqrt_mix":
        return tr.source_sqrt_mix(1.0, 1.0)
    if name == "log_osc":
        return tr.source_log_oscillation(0.5)
    if name == "single_jump":
        return tr.source_single_jump()
    if name == "slow":
        return tr.source_slow_approach()
    raise ContractError(f"unknown source {name!r}; expected one of: " + ", ".join(_SOURCE_NAMES))


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _emit_sequence(values, cfg: RunConfig, out: Optional[str], header: str) -> None:
    if out or cfg.format == "csv":
        lines = [header] + [f"{i},{v:.17g}" for i, v in enumerate(values)]
        text = "\n".join(lines) + "\n"
        if out:
            from .tauber import _atomic_write
            from pathlib import Path

            _atomic_write(Path(out), text)
        else:
            sys.stdout.write(text)
    else:
        _emit([float(v) for v in values])


def _cmd_primes(args, cfg: RunConfig) -> int:
    from .arith import count_primes

    print(int(count_primes(args.count, _table(cfg))))
    return 0


def _cmd_special(args, cfg: RunConfig) -> int:
    from . import special as sp

    s = complex(args.sigma, args.t)
    tol = cfg.tolerance()
    fn = args.fn
    if fn == "zeta":
        val = sp.zeta(s, tol)
    elif fn == "zetad":
        val = sp.zeta_deriv(s, tol)
    elif fn == "pzeta":
        val = sp.prime_zeta(s, _table(cfg), tol)
    elif fn == "pzetad":
        val = sp.prime_zeta_deriv(s, _table(cfg), tol)
    elif fn == "psi":
        val = sp.psi_entire(s, tol)
    else:
        val = sp.psi_prime_part(s, _table(cfg), tol)
    val = complex(val)
    _emit({"re": val.real, "im": val.imag, "est_error": tol.abs_tol})
    return 0


def _load_step_file(path: str):
    import numpy as np

    from .arith import StepFunction

    if not path:
        raise ContractError("--source file needs --file with x_j,a_j lines")
    xs, js = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ContractError(f"{path}:{lineno}: expected 'x,jump', got {raw.strip()!r}")
            try:
                xs.append(float(parts[0]))
                js.append(float(parts[1]))
            except ValueError as exc:
                raise ContractError(f"{path}:{lineno}: bad number in {raw.strip()!r}") from exc
    return StepFunction(np.asarray(xs), np.asarray(js))


def _cmd_transform(args, cfg: RunConfig) -> int:
    from . import transform as tr

    s = complex(args.sigma, args.t)
    tol = cfg.tolerance()
    if args.source == "integers":
        val = tr.transform_integers(s, tol)
    elif args.source == "primes":
        val = tr.transform_primes(s, _table(cfg), tol)
    elif args.source == "wprimes":
        val = tr.transform_weighted_primes(s, _table(cfg), tol)
    else:
        step = _load_step_file(args.file)
        val = tr.transform_step_sum(step, s, tol=tol)
    val = complex(val)
    _emit({"re": val.real, "im": val.imag, "est_error": tol.abs_tol})
    return 0


def _cmd_operator(args, cfg: RunConfig) -> int:
    from .operators import (
        IntervalSpec,
        assemble_frequency_route,
        assemble_kernel_route,
        diagonal_sequence,
        spectrum,
    )

    S = _source(args.source, cfg)
    I = IntervalSpec(cfg.length)
    N = cfg.order
    cmd = args.operator_command
    if cmd == "diag":
        vals = diagonal_sequence(S, I, args.eps, args.A, N, tol=cfg.tolerance())
        _emit_sequence(vals, cfg, args.out, f"# tauberlab-diag v1, L={cfg.length!r}, eps={args.eps!r}, N={N}, source={S.label}, A={args.A!r}")
        return 0
    if args.route == "kernel":
        W = assemble_kernel_route(S, I, args.eps, N, tol=cfg.tolerance())
    else:
        W = assemble_frequency_route(S, I, args.eps, N, tol=cfg.tolerance())
    if cmd == "assemble":
        if args.out:
            W.to_csv(args.out)
        else:
            sys.stdout.write(W.csv_text())
        return 0
    vals = spectrum(W)
    _emit_sequence(vals, cfg, args.out, f"# tauberlab-spectrum v1, L={cfg.length!r}, eps={args.eps!r}, N={N}, source={S.label}, route={W.route}")
    return 0


def _report_extra(cfg: RunConfig) -> dict:
    return {"config": cfg.as_dict(), "version": _VERSION}


def _cmd_experiment(args, cfg: RunConfig) -> int:
    from . import tauber as tb

    cmd = args.experiment_command
    u_max = args.umax
    if cmd == "battery":
        bat = tb.run_battery(L=cfg.length, N=cfg.order)
        if args.report:
            bat.save_json(args.report, extra=_report_extra(cfg))
        _emit({"all_equivalent": bat.all_equivalent, "equivalence": bat.equivalence})
        return 0
    if cmd == "pnt":
        kwargs = {"L": cfg.length} if args.length is not None else {}
        if args.order is not None:
            kwargs["N"] = cfg.order
        if u_max is not None:
            kwargs["u_max"] = u_max
        rep = tb.pnt_pipeline(_table(cfg), **kwargs)
    elif cmd == "forward":
        S = _source(args.source, cfg)
        rep = tb.forward_experiment(
            S, S.ratio_limit_A, L=cfg.length, N=cfg.order,
            **({"u_max": u_max} if u_max is not None else {}),
        )
    else:
        S = _source(args.source, cfg)
        rep = tb.converse_experiment(
            S, L=cfg.length, N=cfg.order,
            **({"u_max": u_max} if u_max is not None else {}),
        )
    if args.report:
        rep.save_json(args.report, extra=_report_extra(cfg))
        stem = args.report[:-5] if args.report.endswith(".json") else args.report
        rep.save_ratio_csv(stem + ".ratio.csv")
    _emit(
        {
            "source": rep.source,
            "A_estimate": rep.A_estimate,
            "A_method": rep.A_method,
            "diag_decay": rep.diag_decay,
            "ratio_limit": rep.ratio_limit,
            "consistent": rep.consistent,
        }
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.jobs is not None:
        if args.jobs < 1:
            print(json.dumps({"code": "config", "message": "--jobs must be >= 1"}), file=sys.stderr)
            return 1
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.jobs)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 64
    try:
        cfg = _overlay(load_config(args.config), args)
        if args.command == "primes":
            return _cmd_primes(args, cfg)
        if args.command == "special":
            if args.special_command != "eval":
                parser.print_usage(sys.stderr)
                return 64
            return _cmd_special(args, cfg)
        if args.command == "transform":
            if args.transform_command != "eval":
                parser.print_usage(sys.stderr)
                return 64
            return _cmd_transform(args, cfg)
        if args.command == "operator":
            if args.operator_command is None:
                parser.print_usage(sys.stderr)
                return 64
            return _cmd_operator(args, cfg)
        if args.command == "experiment":
            if args.experiment_command is None:
                parser.print_usage(sys.stderr)
                return 64
            return _cmd_experiment(args, cfg)
        parser.print_usage(sys.stderr)
        return 64
    except TauberlabError as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # keep the taxonomy: unexpected -> resource-class
        print(json.dumps({"code": "internal", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
