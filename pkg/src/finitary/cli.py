"""Command-line front end.

Wire format: symbol streams are whitespace-separated 1-based integers on
stdin/stdout; stdout carries only data, diagnostics go to stderr.  Exit codes:
0 success, 1 input error, 2 window exhausted, 3 verification failure.
Reports are TAB-separated key/value lines.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import calibration, dyadic, engine
from .core import ProbabilityVector, parse_bits, parse_rational
from .extractor import PatternConfig, extract

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_WINDOW = 2
EXIT_VERIFY = 3

_CONFIG_KEYS = {"a", "q", "eps", "t", "seed", "max_window"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    alphabet_size: int
    target: ProbabilityVector
    entropy_gap: Fraction | None = None
    marker_len: int | None = None
    seed: int | None = None
    max_window: int = engine.DEFAULT_MAX_WINDOW

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise ConfigError("a must be >= 2")
        if self.marker_len is None:
            if self.entropy_gap is None:
                raise ConfigError("eps is required when t is not set")
            if self.entropy_gap <= 0:
                raise ConfigError("eps must be > 0")
        if self.marker_len is not None and self.marker_len < 1:
            raise ConfigError("t must be >= 1")
        if self.max_window < 0:
            raise ConfigError("max_window must be >= 0")


def parse_config(text: str) -> Config:
    """Parse ``key=value`` lines; blank lines and #-comments are skipped."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in fields:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = value
    for required in ("a", "q"):
        if required not in fields:
            raise ConfigError(f"missing required key {required!r}")
    try:
        alphabet_size = int(fields["a"])
        target = ProbabilityVector.parse(fields["q"])
        gap = parse_rational(fields["eps"]) if "eps" in fields else None
        marker = int(fields["t"]) if "t" in fields else None
        seed = int(fields["seed"]) if "seed" in fields else None
        max_window = (
            int(fields["max_window"])
            if "max_window" in fields
            else engine.DEFAULT_MAX_WINDOW
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Config(
        alphabet_size=alphabet_size,
        target=target,
        entropy_gap=gap,
        marker_len=marker,
        seed=seed,
        max_window=max_window,
    )


def _report(out, **fields) -> None:
    for key, value in fields.items():
        out.write(f"{key}\t{value}\n")


def _resolve_seed(args, config: Config | None) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    if config is not None and config.seed is not None:
        return config.seed
    env = os.environ.get("FINITARY_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"FINITARY_SEED is not an integer: {env!r}") from None
    return 0


def _load_config(args) -> Config | None:
    path = getattr(args, "config", None)
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finitary",
        description="Finitary stream transform and its verification tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="transform a symbol stream from stdin")
    enc.add_argument("--config", help="key=value config file")
    enc.add_argument("--a", type=int, help="source alphabet size")
    enc.add_argument("--q", help="target distribution, comma-separated rationals")
    enc.add_argument("--eps", help="entropy gap (rational), used to choose t")
    enc.add_argument("--t", type=int, help="marker length override")
    enc.add_argument("--max-window", type=int, dest="max_window")
    enc.add_argument(
        "--report",
        action="store_true",
        help="emit index<TAB>symbol<TAB>radius lines instead of bare symbols",
    )

    sim = sub.add_parser("simulate", help="run the bit-fed simulator on stdin bits")
    sim.add_argument("--q", required=True)
    sim.add_argument("--horizon", type=int, default=1, help="symbols to draw")

    ext = sub.add_parser("extract", help="extract bits from a pattern-free word")
    ext.add_argument("--a", type=int, required=True)
    ext.add_argument("--t", type=int, required=True)
    ext.add_argument("--word", required=True, help="whitespace-separated symbols")

    sel = sub.add_parser("select-t", help="derive a certified-safe marker length")
    sel.add_argument("--q", required=True)
    sel.add_argument("--eps", required=True)
    sel.add_argument("--a", type=int, required=True)

    cert = sub.add_parser("certify-t", help="empirically certify a marker length")
    cert.add_argument("--p", required=True, help="source distribution to test")
    cert.add_argument("--q", required=True)
    cert.add_argument("--t", type=int, required=True)
    cert.add_argument("--trials", type=int, default=10000)
    cert.add_argument("--seed", type=int)
    cert.add_argument("--config")

    ver = sub.add_parser("verify-bounds", help="exact stopping-time bound checks")
    ver.add_argument("--q", required=True)
    ver.add_argument("--kmax", type=int, default=20)

    ana = sub.add_parser("analyze", help="chi-square a symbol stream against q")
    ana.add_argument("--q", required=True)
    ana.add_argument("--alpha", type=float, help="fail (exit 3) when p-value < alpha")

    tls = sub.add_parser("tails", help="fit the tail of integer samples from stdin")
    return parser


def _merge_encode_config(args) -> Config:
    config = _load_config(args)
    fields = dict(
        alphabet_size=config.alphabet_size if config else None,
        target=config.target if config else None,
        entropy_gap=config.entropy_gap if config else None,
        marker_len=config.marker_len if config else None,
        seed=config.seed if config else None,
        max_window=config.max_window if config else engine.DEFAULT_MAX_WINDOW,
    )
    if args.a is not None:
        fields["alphabet_size"] = args.a
    if args.q is not None:
        fields["target"] = ProbabilityVector.parse(args.q)
    if args.eps is not None:
        fields["entropy_gap"] = parse_rational(args.eps)
    if args.t is not None:
        fields["marker_len"] = args.t
    if args.max_window is not None:
        fields["max_window"] = args.max_window
    if fields["alphabet_size"] is None or fields["target"] is None:
        raise ConfigError("encode needs a and q (via --config or flags)")
    return Config(**fields)


def _cmd_encode(args, stdin, stdout) -> int:
    config = _merge_encode_config(args)
    t = config.marker_len
    if t is None:
        t = calibration.select_marker_length(
            config.target, config.entropy_gap, config.alphabet_size
        )
    cfg = PatternConfig(config.alphabet_size, t)
    tokens = stdin.read().split()
    if not tokens:
        return EXIT_OK
    symbols = [int(tok) for tok in tokens]
    result = engine.map_range(
        symbols,
        cfg,
        config.target,
        0,
        len(symbols) - 1,
        max_window=config.max_window,
    )
    for i in sorted(result.outputs):
        if args.report:
            stdout.write(f"{i}\t{result.outputs[i]}\t{result.reports[i].radius}\n")
        else:
            stdout.write(f"{result.outputs[i]}\n")
    return EXIT_OK


def _cmd_simulate(args, stdin, stdout) -> int:
    q = ProbabilityVector.parse(args.q)
    if args.horizon < 1:
        raise ValueError("horizon must be >= 1")
    bits = parse_bits(stdin.read())
    cursor = dyadic.DyadicCursor(q, args.horizon)
    for bit in bits:
        cursor.feed(bit)
        if cursor.successful:
            break
    if not cursor.successful:
        raise dyadic.InsufficientBitsError("insufficient bits")
    _report(
        stdout,
        T=cursor.bits_consumed,
        S=" ".join(str(s) for s in cursor.emitted),
    )
    return EXIT_OK


def _cmd_extract(args, stdin, stdout) -> int:
    cfg = PatternConfig(args.a, args.t)
    word = tuple(int(tok) for tok in args.word.split())
    triple = extract(word, cfg)
    bits = "".join(str(b) for b in triple.bits)
    stdout.write(f"N={triple.num_bits} F={bits} G={triple.class_id}\n")
    return EXIT_OK


def _cmd_select_t(args, stdin, stdout) -> int:
    q = ProbabilityVector.parse(args.q)
    eps = parse_rational(args.eps)
    t = calibration.select_marker_length(q, eps, args.a)
    _report(stdout, t=t, a=args.a, eps=eps, q=args.q)
    return EXIT_OK


def _cmd_certify_t(args, stdin, stdout) -> int:
    config = _load_config(args)
    p = ProbabilityVector.parse(args.p)
    q = ProbabilityVector.parse(args.q)
    seed = _resolve_seed(args, config)
    report = calibration.certify_marker_length(p, q, args.t, args.trials, seed)
    _report(
        stdout,
        t=report.marker_len,
        trials=report.trials,
        seed=report.seed,
        mean_bits=f"{report.mean_bits:.6f}",
        stderr_bits=f"{report.stderr_bits:.6f}",
        sim_bound=f"{report.sim_bound:.6f}",
        expected_block_len=report.expected_block_len,
        mean_block_len=f"{report.mean_block_len:.6f}",
        margin=f"{report.margin:.6f}",
        status=report.status,
    )
    return EXIT_VERIFY if report.status == "fail" else EXIT_OK


def _cmd_verify_bounds(args, stdin, stdout) -> int:
    q = ProbabilityVector.parse(args.q)
    report = calibration.verify_simu1(q, args.kmax)
    _report(
        stdout,
        q=args.q,
        kmax=report.kmax,
        dyadic_interior=report.dyadic_interior,
        tight_bound_ok=report.tight_bound_ok,
        loose_bound_ok=report.loose_bound_ok,
        mean_lo=f"{float(report.mean_lo):.9f}",
        mean_hi=f"{float(report.mean_hi):.9f}",
        entropy_bound=f"{report.entropy_bound:.9f}",
        mean_ok=report.mean_ok,
    )
    for k, s in enumerate(report.survival):
        stdout.write(f"survival_{k}\t{s}\n")
    ok = report.loose_bound_ok and report.mean_ok
    if report.dyadic_interior:
        ok = ok  # tight bound exempt when an interior point is dyadic
    else:
        ok = ok and report.tight_bound_ok
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_analyze(args, stdin, stdout) -> int:
    q = ProbabilityVector.parse(args.q)
    symbols = [int(tok) for tok in stdin.read().split()]
    if not symbols:
        raise ValueError("empty stream")
    counts = [0] * q.size
    for s in symbols:
        if not 1 <= s <= q.size:
            raise ValueError(f"symbol {s} outside 1..{q.size}")
        counts[s - 1] += 1
    report = calibration.chi_square(counts, q)
    _report(
        stdout,
        n=len(symbols),
        counts=",".join(str(c) for c in counts),
        statistic=f"{report.statistic:.6f}",
        df=report.df,
        p_value=f"{report.p_value:.6e}",
    )
    if args.alpha is not None and report.p_value < args.alpha:
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_tails(args, stdin, stdout) -> int:
    samples = [int(tok) for tok in stdin.read().split()]
    fit = calibration.tail_fit(samples)
    _report(
        stdout,
        n=len(samples),
        slope=f"{fit.slope:.6f}",
        intercept=f"{fit.intercept:.6f}",
        r_squared=f"{fit.r_squared:.6f}",
    )
    return EXIT_OK


_COMMANDS = {
    "encode": _cmd_encode,
    "simulate": _cmd_simulate,
    "extract": _cmd_extract,
    "select-t": _cmd_select_t,
    "certify-t": _cmd_certify_t,
    "verify-bounds": _cmd_verify_bounds,
    "analyze": _cmd_analyze,
    "tails": _cmd_tails,
}


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args, stdin, stdout)
    except engine.WindowExhausted as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_WINDOW
    except (ValueError, OSError, RuntimeError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
