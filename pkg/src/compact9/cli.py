"""Command-line front end.

Subcommands::

    compact9 solve  --eps E --a A --b B --f F --g G --N 64 [--out grid.txt]
    compact9 study  --eps E --a A --b B --f F --g G --N 16..256 [--format csv|json]
    compact9 mms    --eps E --a A --b B --u U --N 16..256 [--format csv|json]
    compact9 verify [--samples 1000] [--seed 7]

Exit codes: 0 ok, 2 config error, 3 parse error, 4 solver failure,
5 verification violation. Failures also print a one-line JSON record on stderr.
The thread count for multi-mesh studies is read from ``COMPACT9_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass

from .assembly import AssemblyError, ProblemSpec, assemble, build_mesh, write_grid
from .field import EvaluationError, ParseError, as_field
from .solver import DEFAULT_TOL, Method, SolverError, solve
from .stencil import CaseTag, DomainError
from .verify import load_report, mms_study, richardson_study, verify_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4
EXIT_VIOLATION = 5

SUBCOMMANDS = ("solve", "study", "mms", "verify")
FORMATS = ("csv", "json")
METHODS = ("auto",) + tuple(m.value for m in Method)
CASES = {"a>=b": CaseTag.AGE_B, "age-b": CaseTag.AGE_B,
         "a<=b": CaseTag.ALE_B, "ale-b": CaseTag.ALE_B}

_PROBLEM = {"eps", "a", "b"}
_REQUIRED = {
    "solve": _PROBLEM | {"f", "g", "N"},
    "study": _PROBLEM | {"f", "g", "N"},
    "mms": _PROBLEM | {"u", "N"},
    "verify": set(),
}
_OPTIONAL = {
    "solve": {"tol", "method", "out", "force_case", "allow_small"},
    "study": {"tol", "method", "out", "format", "force_case", "allow_small"},
    "mms": {"tol", "method", "out", "format", "force_case"},
    "verify": {"samples", "seed", "out", "format"},
}
_FLAG = {"allow_small": "--allow-small-coefficients", "force_case": "--force-case"}


class ConfigError(ValueError):
    pass


def parse_n(text: str) -> tuple[int, ...]:
    """``"64"``, ``"16,32,64"`` or ``"lo..hi"`` (powers of two from lo to hi)."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split(".."))
            if not (_is_pow2(lo) and _is_pow2(hi)) or lo > hi:
                raise ConfigError(f"N range {text!r} needs powers of two lo <= hi")
            Ns = []
            while lo <= hi:
                Ns.append(lo)
                lo *= 2
            return tuple(Ns)
        return tuple(int(t) for t in text.split(","))
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"cannot read N from {text!r}") from err


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    eps: float | None = None
    a: float | None = None
    b: float | None = None
    f: str | None = None
    g: str | None = None
    u: str | None = None
    N: tuple[int, ...] | None = None
    tol: float | None = None
    method: str | None = None
    out: str | None = None
    format: str | None = None
    force_case: str | None = None
    allow_small: bool | None = None
    samples: int | None = None
    seed: int | None = None

    def present(self) -> set[str]:
        return {k for k, v in self.__dict__.items()
                if k != "subcommand" and v is not None and v is not False}

    def validate(self) -> "RunConfig":
        cmd = self.subcommand
        if cmd not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {cmd!r}")
        have = self.present()
        missing = _REQUIRED[cmd] - have
        extra = have - _REQUIRED[cmd] - _OPTIONAL[cmd]
        if missing:
            raise ConfigError(f"{cmd} needs {_flags(missing)}")
        if extra:
            raise ConfigError(f"{cmd} does not take {_flags(extra)}")
        for name in ("eps", "a", "b"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"--{name} must be positive, got {v:g}")
        if self.N is not None:
            if any(n < 2 for n in self.N):
                raise ConfigError(f"N values must be >= 2, got {list(self.N)}")
            if cmd == "solve" and len(self.N) != 1:
                raise ConfigError("solve takes a single N")
            if cmd == "study":
                if len(self.N) < 2 or not all(_is_pow2(n) for n in self.N):
                    raise ConfigError("study needs at least two powers of two for N")
                Ns = sorted(self.N)
                if any(hi != 2 * lo for lo, hi in zip(Ns, Ns[1:])):
                    raise ConfigError("study meshes must double in size")
            if len(set(self.N)) != len(self.N):
                raise ConfigError("N values must be distinct")
        if self.tol is not None and not 1e-15 <= self.tol <= 1e-6:
            raise ConfigError(f"--tol must lie in [1e-15, 1e-6], got {self.tol:g}")
        if self.method is not None and self.method not in METHODS:
            raise ConfigError(f"--method must be one of {', '.join(METHODS)}")
        if self.format is not None and self.format not in FORMATS:
            raise ConfigError(f"--format must be csv or json")
        if cmd == "verify" and self.format == "csv":
            raise ConfigError("verify writes JSON only")
        if self.force_case is not None and self.force_case not in CASES:
            raise ConfigError(f"--force-case must be one of {', '.join(CASES)}")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("--samples must be >= 1")
        return self

    @property
    def solver_method(self) -> Method | None:
        if self.method in (None, "auto"):
            return None
        return Method(self.method)

    def problem(self, f=None, g=None) -> ProblemSpec:
        case = CASES[self.force_case] if self.force_case else None
        return ProblemSpec(self.eps, self.a, self.b,
                           as_field(self.f if f is None else f),
                           as_field(self.g if g is None else g),
                           allow_small=bool(self.allow_small), force_case=case)


def _flags(names) -> str:
    return ", ".join(_FLAG.get(n, f"--{n}") for n in sorted(names))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compact9", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--eps", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--f", help="source term, e.g. 'sin(pi*x)*sin(pi*y)'")
        p.add_argument("--g", help="Dirichlet data as a 2D expression")
        p.add_argument("--u", help="manufactured solution (mms only)")
        p.add_argument("--N", type=parse_n, help="N, a comma list, or lo..hi")
        p.add_argument("--tol", type=float)
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--force-case", dest="force_case", choices=sorted(CASES))
        p.add_argument("--allow-small-coefficients", dest="allow_small",
                       action="store_true", default=None)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(**vars(ns)).validate()


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _run_solve(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    system = assemble(cfg.problem(), build_mesh(cfg.N[0]))
    rep = solve(system, cfg.tol or DEFAULT_TOL, cfg.solver_method)
    runtime = time.perf_counter() - t0
    write_grid(cfg.out if cfg.out else sys.stdout, rep.solution)
    summary = (f"N={cfg.N[0]} method={rep.method.value} residual={rep.relative_residual:.3e} "
               f"iterations={rep.iterations} runtime={runtime:.3f}s\n")
    (sys.stdout if cfg.out else sys.stderr).write(summary)
    return EXIT_OK


def _write_report(cfg: RunConfig, rep) -> int:
    text = rep.to_json() if cfg.format == "json" else rep.to_csv()
    _emit(text, cfg.out)
    return EXIT_OK


def _run_study(cfg: RunConfig) -> int:
    rep = richardson_study(cfg.problem(), cfg.N, cfg.tol or DEFAULT_TOL, cfg.solver_method)
    return _write_report(cfg, rep)


def _run_mms(cfg: RunConfig) -> int:
    case = CASES[cfg.force_case] if cfg.force_case else None
    rep = mms_study(cfg.u, cfg.eps, cfg.a, cfg.b, cfg.N, cfg.tol or DEFAULT_TOL,
                    cfg.solver_method, case)
    return _write_report(cfg, rep)


def _run_verify(cfg: RunConfig) -> int:
    rep = verify_all(samples=cfg.samples or 1000, seed=7 if cfg.seed is None else cfg.seed)
    _emit(rep.to_json(), cfg.out)
    return EXIT_OK if rep.passed() else EXIT_VIOLATION


_RUNNERS = {"solve": _run_solve, "study": _run_study, "mms": _run_mms, "verify": _run_verify}


def run(cfg: RunConfig) -> int:
    """Execute a validated config; errors propagate to ``main``."""
    return _RUNNERS[cfg.subcommand](cfg)


def _failure(code: int, kind: str, err: BaseException) -> int:
    record = {"status": "failure", "exit_code": code, "error": kind, "message": str(err)}
    if isinstance(err, ParseError):
        record["offset"] = err.offset
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        code = run(cfg)
    except ParseError as err:
        return _failure(EXIT_PARSE, "parse", err)
    except (ConfigError, DomainError) as err:
        return _failure(EXIT_CONFIG, "config", err)
    except (SolverError, AssemblyError, EvaluationError) as err:
        return _failure(EXIT_SOLVER, "solver", err)
    if code == EXIT_VIOLATION:
        sys.stderr.write(json.dumps({"status": "failure", "exit_code": code,
                                     "error": "verification",
                                     "message": "structure checks reported violations"},
                                    sort_keys=True) + "\n")
    return code


__all__ = ["RunConfig", "ConfigError", "build_parser", "config_from_args", "load_report",
           "main", "parse_n", "run"]

if __name__ == "__main__":
    sys.exit(main())
