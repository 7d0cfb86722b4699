"""Batch experiment driver: compute EC curves, validations, lemma checks,
pairing sweeps, and special-function self-tests, emitting machine-readable
CSV.

Output contract (stable):
  header  rho_db,scheme,user,beta,metric,value,std_error,n_samples,seed,pass
  UTF-8, '.' decimal separator, floats with 9 significant digits; std_error
  and n_samples are empty for deterministic (closed-form) metrics.  When an
  --output file is given, a `<output>.manifest` sidecar records the resolved
  configuration, seed, git-describe string, and wall time.

Exit status: 0 success; 2 when at least one emitted row has pass=false
(CI-friendly); 64 usage/configuration errors; 70 numeric failures
(domain/convergence); 74 I/O errors.

Reruns with identical configuration and seed produce byte-identical CSV.
SNR grids are given in dB as start:stop:step (stop inclusive).  The default
seed is 12345, overridable by the NOMA_EC_SEED environment variable, a
config file, or --seed (increasing precedence).  Config files are flat
`key = value` text; flags override file values.
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass
from typing import Optional

from . import __version__
from .asymptotics import (
    LEMMA_IDS,
    LemmaConfig,
    LemmaReport,
    check_lemma,
    user_ec,
)
from .channel import sample_ordered
from .engine import DEFAULT_SAMPLES, DelayProfile, RateSpec, ec_monte_carlo
from .errors import ConvergenceError, DomainError, NoCrossingError
from .pairing import PairingLayout, enumerate_pairings, total_ec_pairs_detail
from .rates import PowerAllocation, TransmitSnr
from .special_functions import (
    gamma_moment_integral,
    hyp_u,
    upper_gamma,
    whittaker_w_reduced,
)

__all__ = ["ExperimentConfig", "UsageError", "main", "run"]

CSV_HEADER = (
    "rho_db", "scheme", "user", "beta", "metric",
    "value", "std_error", "n_samples", "seed", "pass",
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_USAGE = 64
EXIT_NUMERIC = 70
EXIT_IO = 74

_COMMANDS = ("curves", "validate", "lemma", "pairing", "special-selftest")
_DEFAULT_SEED = 12345
_SEED_ENV = "NOMA_EC_SEED"

# per-command default SNR grids (start, stop, step) in dB
_DEFAULT_GRIDS = {
    "curves": (-10.0, 30.0, 1.0),
    "validate": (-10.0, 30.0, 5.0),
    "pairing": (-10.0, 40.0, 5.0),
}


class UsageError(Exception):
    """Bad flags, bad config file, or invalid configuration values."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run configuration (flags > config file > defaults)."""

    command: str
    snr_db: Optional[tuple] = None  # (start, stop, step), None = command default
    p1: float = 0.2
    betas: tuple = (-1.0,)
    schemes: tuple = ("noma", "oma")
    users: tuple = (1, 2)
    lemma_id: str = "all"
    m_users: int = 4
    mc_samples: int = DEFAULT_SAMPLES
    seed: int = _DEFAULT_SEED
    output: Optional[str] = None
    oma_variant: str = "consistent"

    def __post_init__(self) -> None:
        if self.command not in _COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.snr_db is not None:
            start, stop, step = self.snr_db
            if step <= 0.0:
                raise UsageError(f"snr step must be > 0, got {step!r}")
            if stop < start:
                raise UsageError(f"empty snr range {start}:{stop}:{step}")
        if not 0.0 < self.p1 < 1.0:
            raise UsageError(f"p1 must be in (0,1), got {self.p1!r}")
        if self.command == "pairing" and self.p1 > 0.5:
            raise UsageError("pairing requires the weak-user fraction p1 <= 1/2")
        if not self.betas or len(self.betas) > 2:
            raise UsageError("beta takes one shared or two per-user values")
        for b in self.betas:
            if not math.isfinite(b) or b >= 0.0:
                raise UsageError(f"beta values must be finite and < 0, got {b!r}")
        if not self.schemes or any(s not in ("noma", "oma") for s in self.schemes):
            raise UsageError(f"scheme must be a subset of noma,oma, got {self.schemes!r}")
        if not self.users or any(u not in (1, 2) for u in self.users):
            raise UsageError(f"user must be a subset of 1,2, got {self.users!r}")
        if self.m_users % 2 != 0 or not 2 <= self.m_users <= 12:
            raise UsageError(f"M must be even and in 2..12, got {self.m_users!r}")
        if self.mc_samples < 10**3:
            raise UsageError(f"mc-samples must be >= 1000, got {self.mc_samples!r}")
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.oma_variant not in ("consistent", "doubled"):
            raise UsageError(
                f"oma-variant must be 'consistent' or 'doubled', got {self.oma_variant!r}"
            )
        key = self.lemma_id.strip().lower()
        if key != "all" and key not in LEMMA_IDS and not (
            key.isdigit() and any(i.startswith(key) for i in LEMMA_IDS)
        ):
            raise UsageError(f"unknown lemma id {self.lemma_id!r}")

    @property
    def beta1(self) -> float:
        return self.betas[0]

    @property
    def beta2(self) -> float:
        return self.betas[-1]

    def grid_db(self) -> list:
        """The SNR grid in dB (explicit or the command default)."""
        rng = self.snr_db if self.snr_db is not None else _DEFAULT_GRIDS.get(self.command)
        if rng is None:
            raise UsageError(f"command {self.command!r} needs an explicit --snr-db")
        start, stop, step = rng
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]

    def lemma_config(self) -> LemmaConfig:
        return LemmaConfig(
            p1=self.p1,
            beta1=self.beta1,
            beta2=self.beta2,
            variant=self.oma_variant,
            n_samples=self.mc_samples,
            seed=self.seed,
        )


# ---------------------------------------------------------------------------
# flag / config-file parsing


def _parse_range(text: str) -> tuple:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            return (v, v, 1.0)
        if len(parts) == 3:
            return (float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise UsageError(f"expected start:stop:step dB range, got {text!r}")


def _parse_floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _parse_names(text: str) -> tuple:
    return tuple(v.strip().lower() for v in text.split(",") if v.strip() != "")


_VALUE_FLAGS = {
    "--snr-db", "--beta", "--p1", "--seed", "--mc-samples", "--scheme",
    "--user", "--id", "--m", "--output", "-o", "--config", "--oma-variant",
}


def _preprocess_argv(argv) -> list:
    """Join value flags with negative-number-like values ('--beta -1').

    argparse treats a following token that starts with '-' as a new option;
    dB ranges and negative exponents are exactly that shape, so they are
    glued into '--flag=value' tokens up front.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            nxt = argv[i + 1]
            if len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit(2); we map to 64
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="noma-ec", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"noma-ec {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--snr-db", help="dB grid start:stop:step (stop inclusive)")
    common.add_argument("--beta", help="delay exponent(s) < 0: shared, or 'b1,b2'")
    common.add_argument("--p1", type=float, help="weak-user power fraction (default 0.2)")
    common.add_argument("--mc-samples", type=int, help="Monte Carlo sample count (>= 1000)")
    common.add_argument("--seed", type=int, help="RNG seed (default env NOMA_EC_SEED or 12345)")
    common.add_argument("--output", "-o", help="CSV output path (default stdout)")
    common.add_argument("--config", help="flat key = value config file; flags override")
    common.add_argument(
        "--oma-variant",
        help="TDMA closed-form exponent convention: consistent (default) or doubled",
    )

    p = sub.add_parser("curves", parents=[common],
                       help="per-user EC curves over an SNR grid (closed forms)")
    p.add_argument("--scheme", help="comma list from {noma,oma} (default both)")

    p = sub.add_parser("validate", parents=[common],
                       help="closed forms vs seeded Monte Carlo with pass/fail rows")
    p.add_argument("--scheme", help="comma list from {noma,oma} (default noma)")
    p.add_argument("--user", help="comma list from {1,2} (default both)")

    p = sub.add_parser("lemma", parents=[common],
                       help="asymptotic-claim checks; --id picks one, a group, or all")
    p.add_argument("--id", help="lemma id ('2b'), group ('4'), or 'all' (default)")

    p = sub.add_parser("pairing", parents=[common],
                       help="W_N - W_O for every pair partition of M users")
    p.add_argument("--m", type=int, help="number of users, even, 2..12 (default 4)")

    sub.add_parser("special-selftest", parents=[common],
                   help="special-function identity checks")
    return parser


def _read_config_file(path: str) -> dict:
    """Parse flat `key = value` lines; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


_CONFIG_KEYS = {
    "snr_db", "beta", "p1", "mc_samples", "seed", "output",
    "scheme", "user", "id", "m", "oma_variant",
}


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge flags > config file > environment seed > defaults."""
    file_vals: dict = {}
    if getattr(args, "config", None):
        file_vals = _read_config_file(args.config)
        unknown = set(file_vals) - _CONFIG_KEYS
        if unknown:
            raise UsageError(
                f"unknown config keys: {', '.join(sorted(unknown))} "
                f"(valid: {', '.join(sorted(_CONFIG_KEYS))})"
            )

    def pick(flag_name: str, file_key: str):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag, True
        if file_key in file_vals:
            return file_vals[file_key], True
        return None, False

    kwargs: dict = {"command": args.command}

    raw, given = pick("snr_db", "snr_db")
    if given:
        kwargs["snr_db"] = _parse_range(raw) if isinstance(raw, str) else raw
    raw, given = pick("beta", "beta")
    if given:
        kwargs["betas"] = _parse_floats(raw) if isinstance(raw, str) else raw
    raw, given = pick("p1", "p1")
    if given:
        try:
            kwargs["p1"] = float(raw)
        except ValueError:
            raise UsageError(f"p1 must be a number, got {raw!r}")
    raw, given = pick("mc_samples", "mc_samples")
    if given:
        try:
            kwargs["mc_samples"] = int(raw)
        except ValueError:
            raise UsageError(f"mc-samples must be an integer, got {raw!r}")
    raw, given = pick("scheme", "scheme")
    if given:
        kwargs["schemes"] = _parse_names(raw) if isinstance(raw, str) else raw
    elif args.command == "validate":
        kwargs["schemes"] = ("noma",)
    raw, given = pick("user", "user")
    if given:
        kwargs["users"] = _parse_ints(raw) if isinstance(raw, str) else raw
    raw, given = pick("id", "id")
    if given:
        kwargs["lemma_id"] = str(raw)
    raw, given = pick("m", "m")
    if given:
        try:
            kwargs["m_users"] = int(raw)
        except ValueError:
            raise UsageError(f"M must be an integer, got {raw!r}")
    raw, given = pick("output", "output")
    if given:
        kwargs["output"] = str(raw)
    raw, given = pick("oma_variant", "oma_variant")
    if given:
        kwargs["oma_variant"] = str(raw).strip().lower()

    raw, given = pick("seed", "seed")
    if given:
        try:
            kwargs["seed"] = int(raw)
        except ValueError:
            raise UsageError(f"seed must be an integer, got {raw!r}")
    elif os.environ.get(_SEED_ENV):
        try:
            kwargs["seed"] = int(os.environ[_SEED_ENV])
        except ValueError:
            raise UsageError(
                f"{_SEED_ENV} must be an integer, got {os.environ[_SEED_ENV]!r}"
            )

    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# row production


def _row(rho_db="", scheme="", user="", beta="", metric="", value="",
         std_error="", n_samples="", seed="", passed="") -> dict:
    return {
        "rho_db": rho_db, "scheme": scheme, "user": user, "beta": beta,
        "metric": metric, "value": value, "std_error": std_error,
        "n_samples": n_samples, "seed": seed, "pass": passed,
    }


def _run_curves(cfg: ExperimentConfig) -> list:
    lemma_cfg = cfg.lemma_config()
    rows = []
    for db in cfg.grid_db():
        rho = TransmitSnr.from_db(db)
        for scheme in cfg.schemes:
            for user in (1, 2):
                beta = cfg.beta1 if user == 1 else cfg.beta2
                value = user_ec(scheme, user, lemma_cfg, rho)
                rows.append(_row(rho_db=db, scheme=scheme, user=user,
                                 beta=beta, metric="ec", value=value))
    return rows


def _run_validate(cfg: ExperimentConfig) -> list:
    lemma_cfg = cfg.lemma_config()
    p = PowerAllocation.two_user(cfg.p1)
    batch = sample_ordered(2, cfg.mc_samples, cfg.seed)
    rows = []
    for db in cfg.grid_db():
        rho = TransmitSnr.from_db(db)
        for scheme in cfg.schemes:
            for user in cfg.users:
                beta = cfg.beta1 if user == 1 else cfg.beta2
                closed = user_ec(scheme, user, lemma_cfg, rho)
                spec = (
                    RateSpec("noma", user, power=p)
                    if scheme == "noma"
                    else RateSpec("oma", user, m_total=2)
                )
                est = ec_monte_carlo(spec, DelayProfile.from_beta(beta), rho, batch)
                diff = abs(closed - est.value)
                bound = max(3.0 * est.std_error, 2e-3)
                common = dict(rho_db=db, scheme=scheme, user=user, beta=beta)
                rows.append(_row(metric="ec_closed", value=closed, **common))
                rows.append(_row(metric="ec_mc", value=est.value,
                                 std_error=est.std_error, n_samples=est.n_samples,
                                 seed=cfg.seed, **common))
                rows.append(_row(metric="abs_diff", value=diff,
                                 passed=diff <= bound, **common))
                rows.append(_row(metric="bound", value=bound, **common))
    return rows


def _lemma_rows(report: LemmaReport, cfg: ExperimentConfig) -> list:
    rho_db = report.details.get("rho_db", "")
    if not isinstance(rho_db, (int, float)):
        rho_db = ""
    common = dict(rho_db=rho_db, scheme="lemma", beta=cfg.beta1)
    return [
        _row(metric=f"{report.lemma_id}_predicted", value=report.predicted, **common),
        _row(metric=f"{report.lemma_id}_measured", value=report.measured,
             seed=cfg.seed, passed=report.passed, **common),
    ]


def _run_lemma(cfg: ExperimentConfig) -> list:
    grid = cfg.grid_db() if cfg.snr_db is not None else None
    reports = check_lemma(cfg.lemma_id, grid=grid, config=cfg.lemma_config())
    rows = []
    for report in reports:
        rows.extend(_lemma_rows(report, cfg))
    return rows


def _run_pairing(cfg: ExperimentConfig) -> list:
    batch = sample_ordered(cfg.m_users, cfg.mc_samples, cfg.seed)
    layouts = [
        PairingLayout.uniform(pairs, p1=cfg.p1, beta1=cfg.beta1, beta2=cfg.beta2)
        for pairs in enumerate_pairings(cfg.m_users)
    ]
    rows = []
    for db in cfg.grid_db():
        rho = TransmitSnr.from_db(db)
        for layout in layouts:
            est = total_ec_pairs_detail(layout, rho, batch)
            label = "+".join(f"{a}-{b}" for a, b in layout.pairs)
            rows.append(_row(rho_db=db, scheme=label, beta=cfg.beta1,
                             metric="w_n_minus_w_o", value=est.gap,
                             std_error=est.gap_se, n_samples=est.n_samples,
                             seed=cfg.seed))
    return rows


def _run_selftest(cfg: ExperimentConfig) -> list:
    """Identity checks on the special-function layer, one row each."""
    z_grid = [10.0 ** (k / 4.0) for k in range(-12, 9)]  # 1e-3 .. 1e2

    err_u = max(abs(z * hyp_u(1.0, 2.0, z) - 1.0) for z in z_grid)

    err_rec = 0.0
    for s in (-1.5, 0.5, 2.5):
        for x in (0.1, 1.0, 5.0):
            lhs = upper_gamma(s + 1.0, x)
            rhs = s * upper_gamma(s, x) + x**s * math.exp(-x)
            err_rec = max(err_rec, abs(lhs - rhs) / max(abs(lhs), 1e-300))

    err_w = 0.0
    for z in (0.25, 1.0, 4.0):
        # u = 1/2 and u = 1 collapse to elementary closed forms
        err_w = max(err_w, abs(whittaker_w_reduced(0.5, z) - math.exp(-z / 2.0)))
        exact = math.exp(-z / 2.0) * (1.0 + z) / math.sqrt(z)
        err_w = max(err_w, abs(whittaker_w_reduced(1.0, z) - exact) / exact)

    from scipy import integrate

    err_m = 0.0
    for b, a, c in ((1.0, 1.0, 0.5), (0.5, 1.5, 1.0), (-0.25, 2.0, 0.2)):
        direct, _ = integrate.quad(
            lambda y: y**b * upper_gamma(a, y), c, c + 60.0, limit=200
        )
        closed = gamma_moment_integral(b, a, c)
        err_m = max(err_m, abs(closed - direct) / max(abs(direct), 1e-300))

    checks = (
        ("u_reciprocal_identity", err_u, 1e-10),
        ("gamma_recurrence", err_rec, 1e-10),
        ("whittaker_reduction", err_w, 1e-10),
        ("gamma_moment_vs_quadrature", err_m, 1e-8),
    )
    return [
        _row(scheme="selftest", metric=name, value=err, passed=err <= tol)
        for name, err, tol in checks
    ]


# ---------------------------------------------------------------------------
# output


def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _emit_csv(rows: list, stream) -> None:
    stream.write(",".join(CSV_HEADER) + "\n")
    for row in rows:
        stream.write(",".join(_format_cell(row[key]) for key in CSV_HEADER) + "\n")


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def _write_manifest(path: str, cfg: ExperimentConfig, n_rows: int,
                    wall_time: float) -> None:
    lines = [
        f"tool = noma-ec {__version__}",
        f"command = {cfg.command}",
        f"snr_db = {cfg.snr_db if cfg.snr_db is not None else 'default'}",
        f"p1 = {cfg.p1!r}",
        f"betas = {','.join(repr(b) for b in cfg.betas)}",
        f"schemes = {','.join(cfg.schemes)}",
        f"users = {','.join(str(u) for u in cfg.users)}",
        f"lemma_id = {cfg.lemma_id}",
        f"m_users = {cfg.m_users}",
        f"mc_samples = {cfg.mc_samples}",
        f"seed = {cfg.seed}",
        f"oma_variant = {cfg.oma_variant}",
        f"git_describe = {_git_describe()}",
        f"rows = {n_rows}",
        f"wall_time_s = {wall_time:.3f}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_RUNNERS = {
    "curves": _run_curves,
    "validate": _run_validate,
    "lemma": _run_lemma,
    "pairing": _run_pairing,
    "special-selftest": _run_selftest,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute a resolved configuration; returns the process exit status."""
    start = time.monotonic()
    rows = _RUNNERS[cfg.command](cfg)
    if cfg.output is None:
        _emit_csv(rows, sys.stdout)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            _emit_csv(rows, fh)
        _write_manifest(cfg.output + ".manifest", cfg, len(rows),
                        time.monotonic() - start)
    if any(row["pass"] is False for row in rows):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(_preprocess_argv(argv))
        if args.command is None:
            raise UsageError("a command is required (see --help)")
        cfg = _resolve_config(args)
    except UsageError as exc:
        print(f"noma-ec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:  # unreadable config file
        print(f"noma-ec: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        return run(cfg)
    except (DomainError, ConvergenceError, NoCrossingError, ArithmeticError) as exc:
        print(f"noma-ec: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"noma-ec: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
