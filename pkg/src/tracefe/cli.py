"""Command-line front end: ``tracefe verify ...``, ``tracefe scan decay``, ``tracefe gen forms``, ``tracefe export coefficients``.

Every check is emitted as one record (``key=value`` line, JSON object or a
human-readable line, selected by ``--format``).  Exit status is 0 when every
requested check passes, 1 when one fails, 2 on usage or configuration errors
and 3 on internal errors.

Configuration is merged in the order defaults, config file (``--config``,
lines ``key = value``), environment variables ``TRACEFE_<KEY>``, then
``--set key=value`` flags.

Character specs: ``D=1`` is the trivial character; ``D=p1*p2:g1^e1,g2^e2``
sets chi(g_i) = e(e_i/(p_i - 1)) with g_i the least primitive root mod p_i,
so ``D=5:2^2`` is the quadratic character mod 5.

Test-function specs: ``bump:A,B``, ``shifted-bump:A,B,a``, ``bump-poly:A,B,degree``
and ``zero``.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, fields
from pathlib import Path

ENV_PREFIX = "TRACEFE_"
FORMATS = ("record", "json", "human")


class ConfigInvalid(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Tolerances, truncation budgets and output settings of a run."""

    tol: float = 1e-6
    tol_fe: float = 1e-8
    cmax: int = 10_000
    n_terms: int = 100_000
    n_max: int = 10_000
    panels: int = 48
    chain_c: int = 50
    chain_m: int = 50
    seed: int = 0
    jobs: int = 1
    deterministic: bool = False
    format: str = "record"
    output: str = "-"
    plot_data: str = "decay_plot.txt"


MINIMA = {"cmax": 10, "n_terms": 1000, "n_max": 1000, "panels": 4, "chain_c": 1, "chain_m": 1, "jobs": 1}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw, kind):
    if kind is bool or kind == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in _TRUE | _FALSE:
            return text in _TRUE
        raise ConfigInvalid(key, f"not a boolean: {raw!r}")
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigInvalid(key, f"cannot parse {raw!r}") from None
    return str(raw).strip()


def _validate(cfg: RunConfig) -> RunConfig:
    for key in ("tol", "tol_fe"):
        if not getattr(cfg, key) > 0:
            raise ConfigInvalid(key, "tolerances must be positive")
    for key, low in MINIMA.items():
        if getattr(cfg, key) < low:
            raise ConfigInvalid(key, f"must be at least {low}")
    if cfg.format not in FORMATS:
        raise ConfigInvalid("format", f"one of {', '.join(FORMATS)}")
    return cfg


def parse_config_file(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_").lower()] = value
    return out


def load_config(path=None, env=None, overrides=None) -> RunConfig:
    """Defaults, then the file, then ``TRACEFE_*`` variables, then explicit overrides."""
    kinds = {f.name: f.type for f in fields(RunConfig)}
    merged: dict = {}
    if path is not None:
        merged.update(parse_config_file(path))
    env = os.environ if env is None else env
    for name in kinds:
        if ENV_PREFIX + name.upper() in env:
            merged[name] = env[ENV_PREFIX + name.upper()]
    merged.update({k.replace("-", "_").lower(): v for k, v in (overrides or {}).items() if v is not None})
    values = {}
    for key, raw in merged.items():
        if key not in kinds:
            raise ConfigInvalid(key, "unknown key")
        values[key] = _coerce(key, raw, kinds[key])
    return _validate(RunConfig(**values))


# -- argument parsing helpers --------------------------------------------------------

def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_params(text: str | None) -> dict:
    """``k=v,k2=v2``; a comma-separated piece without ``=`` continues the previous value (``g=bump:1,2``)."""
    out: dict = {}
    last = None
    for item in filter(None, (text or "").split(",")):
        if "=" not in item:
            if last is None:
                raise UsageError(f"expected key=value, got {item!r}")
            out[last] = f"{out[last]},{item}"
            continue
        k, v = item.split("=", 1)
        last = k.strip()
        out[last] = v.strip()
    return {k: _number(v) for k, v in out.items()}


def parse_sweep(text: str) -> dict[str, list[int]]:
    """``A=1..50,B=1..50`` (inclusive ranges, optional ``..step``) or single values."""
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise UsageError(f"expected key=range, got {item!r}")
        k, v = item.split("=", 1)
        parts = v.split("..")
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise UsageError(f"bad range {v!r}") from None
        if len(nums) == 1:
            out[k.strip()] = nums
        elif len(nums) in (2, 3):
            step = nums[2] if len(nums) == 3 else 1
            out[k.strip()] = list(range(nums[0], nums[1] + 1, step))
        else:
            raise UsageError(f"bad range {v!r}")
    return out


def _list(text: str, conv=float) -> list:
    return [conv(t) for t in text.split(",") if t.strip()]


# -- forms ----------------------------------------------------------------------

def _space(weight: int, level: int, N: int):
    from . import forms

    if level == 1:
        return forms.eigenbasis_level1(weight, N)
    if level == 5 and weight == 6:
        return forms.level5_space()
    raise UsageError(f"no forms available at weight {weight}, level {level} (level 1, or level 5 weight 6)")


def _form(weight: int, level: int, N: int, index: int = 0):
    space = _space(weight, level, N)
    if not 0 <= index < space.dimension:
        raise UsageError(f"form index {index} out of range (dimension {space.dimension})")
    return space.forms[index]


# -- commands -------------------------------------------------------------------
# Each returns a list of VerificationReport objects; plain-output commands return [].

def _identity_point(name: str, params: dict):
    from .expsums import PreconditionViolated, check_identity
    from .reports import VerificationReport

    try:
        return VerificationReport.from_identity(check_identity(name, **params))
    except PreconditionViolated:
        return None


def cmd_identity(args, cfg):
    from .expsums import IDENTITIES

    if args.id not in IDENTITIES:
        raise UsageError(f"unknown identity {args.id!r}; known: {', '.join(IDENTITIES)}")
    base = parse_params(args.params)
    if args.char:
        base["chi"] = args.char
    if not args.sweep:
        from .expsums import check_identity
        from .reports import VerificationReport

        return [VerificationReport.from_identity(check_identity(args.id, **base))]
    grid = parse_sweep(args.sweep)
    keys = list(grid)
    points = [{**base, **dict(zip(keys, vals))} for vals in itertools.product(*(grid[k] for k in keys))]
    results = _pool_map(_identity_point, [(args.id, p) for p in points], cfg)
    reports = [r for r in results if r is not None]
    print(f"# {len(reports)} checks, {len(points) - len(reports)} points skipped by precondition",
          file=sys.stderr)
    return reports


def cmd_petersson(args, cfg):
    from .traceformula import spectral_fit_check, spectral_ratio_check

    space = _space(args.weight, args.level, 100)
    if args.char:
        from .characters import DirichletCharacter

        if DirichletCharacter.parse(args.char).spec() != space.chi.spec():
            raise UsageError(f"character {args.char} does not match the space's {space.chi.spec()}")
    tol = args.tol or cfg.tol
    cmax = args.cmax or cfg.cmax
    pairs = [(n, l) for n in args.n for l in args.l]
    if space.dimension == 1:
        return spectral_ratio_check(space, pairs, c_max=cmax, tol=tol)
    return spectral_fit_check(space, pairs, c_max=cmax, tol=tol)


def cmd_voronoi(args, cfg):
    from .analysis import parse_test_function
    from .lfunction import voronoi_check

    f = _form(args.weight, args.level, cfg.n_terms, args.form)
    g = parse_test_function(args.g)
    return [voronoi_check(f, g, args.a, c, tol=args.tol or cfg.tol) for c in args.c]


def cmd_fe(args, cfg):
    from .lfunction import fe_report

    f = _form(args.weight, args.level, cfg.n_terms, args.form)
    return [fe_report(f, parse_complex(s), tol=args.tol or cfg.tol_fe) for s in args.s.split(",")]


def cmd_derivation(args, cfg):
    from .reports import VerificationReport
    from .traceformula import CHAIN_ORDER, ChainContext, verify_derivation_step

    params = {"C": cfg.chain_c, "M": cfg.chain_m, **parse_params(args.params)}
    if args.step == "sarnak_appendix":
        params = {k: v for k, v in params.items() if k in ("X", "g", "k", "tol")}
        return [VerificationReport.from_identity(verify_derivation_step(args.step, **params))]
    steps = CHAIN_ORDER if args.step == "all" else args.step.split(",")
    ctx = ChainContext(**params)
    return [VerificationReport.from_identity(verify_derivation_step(s, ctx), f"derivation.{s}") for s in steps]


def cmd_main_theorem(args, cfg):
    from .analysis import parse_test_function
    from .traceformula import verify_main_theorem

    space = _space(args.weight, args.level, cfg.n_max)
    return [verify_main_theorem(space, parse_test_function(g), l, tol=args.tol or cfg.tol)
            for g in args.g for l in args.l]


def cmd_isolation(args, cfg):
    from .lfunction import isolation_apply, isolation_build
    from .reports import VerificationReport

    space = _space(args.weight, args.level, 100)
    if not 0 <= args.target < space.dimension:
        raise UsageError(f"target {args.target} out of range (dimension {space.dimension})")
    comb = isolation_build(space, args.target, args.primes)
    values = [comb.evaluate(f) for f in space.forms]
    res = max(abs(v - (1 if i == args.target else 0)) for i, v in enumerate(values))
    tol = args.tol or cfg.tol
    out = [VerificationReport("isolation.evaluate", {"k": space.weight, "D": space.level, "target": args.target},
                              values[args.target], 1, res, tol,
                              note=f"beta = {{{', '.join(f'{n}: {b:.6g}' for n, b in comb.beta.items())}}}")]
    got = isolation_apply(comb, space, [f.c(args.n) for f in space.forms])
    want = space.forms[args.target].c(args.n)
    out.append(VerificationReport("isolation.apply", {"k": space.weight, "D": space.level, "target": args.target,
                                                      "n": args.n}, got, want, abs(got - want), tol))
    return out


def cmd_all(args, cfg):
    from .acceptance import CRITERIA

    if args.profile != "desk":
        raise UsageError(f"unknown profile {args.profile!r} (only 'desk')")
    wanted = _list(args.criteria, int) if args.criteria else list(CRITERIA)
    for n in wanted:
        if n not in CRITERIA:
            raise UsageError(f"no criterion {n}")
    reports = []
    for n, batch in zip(wanted, _pool_map(_criterion, [(n, cfg) for n in wanted], cfg)):
        ok = all(r.passed for r in batch)
        print(f"# criterion {n}: {'PASS' if ok else 'FAIL'} ({CRITERIA[n].title})", file=sys.stderr)
        for r in batch:
            r.params = {"criterion": n, **r.params}
        reports.extend(batch)
    return reports


def _criterion(n, cfg):
    from .acceptance import run_criterion

    return run_criterion(n, cfg)


def cmd_decay(args, cfg):
    from .acceptance import decay_report
    from .analysis import parse_test_function
    from .lfunction import decay_scan

    X = _list(args.X)
    f = _form(args.weight, 1, max(2000, int(4 * max(X))))
    scan = decay_scan(f, parse_test_function(args.g), X, threshold=args.threshold)
    path = Path(args.plot_data or cfg.plot_data)
    path.write_text("# log X  log |S(X)|\n" + scan.plot_data(), encoding="utf-8")
    print(f"# plot data written to {path}", file=sys.stderr)
    return [decay_report(scan, args.g)]


def cmd_gen_forms(args, cfg):
    from .forms import export_coefficients

    space = _space(args.weight, args.level, args.N)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(space.forms):
        path = export_coefficients(f, out / f"weight{args.weight}_level{args.level}_form{i}.txt", min(args.N, f.n_max))
        print(path)
    return []


def cmd_export(args, cfg):
    from .forms import export_coefficients

    f = _form(args.weight, args.level, args.N, args.form)
    print(export_coefficients(f, args.out, min(args.N, f.n_max)))
    return []


# -- parallel map -------------------------------------------------------------------

def _pool_map(fn, arglist, cfg):
    """fn(*args) for each args; input order in deterministic mode, completion order otherwise."""
    if cfg.jobs <= 1 or len(arglist) <= 1:
        return [fn(*a) for a in arglist]
    with ProcessPoolExecutor(cfg.jobs) as pool:
        futures = [pool.submit(fn, *a) for a in arglist]
        if cfg.deterministic:
            return [fut.result() for fut in futures]
        return [fut.result() for fut in as_completed(futures)]


# -- parser ---------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key = value config file")
    p.add_argument("--format", choices=FORMATS, default=S)
    p.add_argument("--deterministic", action="store_true", default=S,
                   help="byte-identical output: ordered records, wall times zeroed, single-threaded BLAS")
    p.add_argument("--output", default=S, help="report stream destination (default stdout)")
    p.add_argument("--jobs", type=int, default=S, help="worker processes")
    p.add_argument("--set", action="append", default=S, metavar="KEY=VALUE", help="config override")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="tracefe", parents=[common],
                                     description="Verification suites for the Petersson / Voronoi / functional-equation chain.")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run verification checks").add_subparsers(dest="what", required=True)

    p = verify.add_parser("identity", parents=[common], help="exact finite identities")
    p.add_argument("id")
    p.add_argument("--params", help="k=v,... (chi=... last)")
    p.add_argument("--sweep", help="A=1..50,B=1..50")
    p.add_argument("--char", help="character spec")
    p.set_defaults(func=cmd_identity)

    p = verify.add_parser("petersson", parents=[common], help="Petersson ratio / fitted-weight test")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--char")
    p.add_argument("--n", type=lambda t: _list(t, int), default=[2])
    p.add_argument("--l", type=lambda t: _list(t, int), default=[1])
    p.add_argument("--cmax", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_petersson)

    p = verify.add_parser("voronoi", parents=[common], help="Voronoi summation at a/c")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--form", type=int, default=0)
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--c", type=lambda t: _list(t, int), default=[1])
    p.add_argument("--g", default="shifted-bump:0.5,6.5,8")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_voronoi)

    p = verify.add_parser("fe", parents=[common], help="functional equation residuals")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--form", type=int, default=0)
    p.add_argument("--s", required=True, help="comma-separated complex points, e.g. 0.7,2+i")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_fe)

    p = verify.add_parser("derivation", parents=[common], help="derivation-chain steps")
    p.add_argument("--step", required=True, help="step id, comma list, 'all' or 'sarnak_appendix'")
    p.add_argument("--params", help="D=5,k=12,l=1,C=50,M=50,g=...")
    p.set_defaults(func=cmd_derivation)

    p = verify.add_parser("main-theorem", parents=[common], help="spectral against dual-Bessel side")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--l", type=lambda t: _list(t, int), default=[1])
    p.add_argument("--g", action="append", help="test function (repeatable)")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_main_theorem)

    p = verify.add_parser("isolation", parents=[common], help="Hecke isolation combination")
    p.add_argument("--weight", type=int, default=24)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--primes", type=lambda t: _list(t, int), default=[2, 3, 5, 7])
    p.add_argument("--n", type=int, default=7)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_isolation)

    p = verify.add_parser("all", parents=[common], help="the acceptance suite")
    p.add_argument("--profile", default="desk")
    p.add_argument("--criteria", help="comma list of criterion numbers")
    p.set_defaults(func=cmd_all)

    scan = sub.add_parser("scan", help="parameter scans").add_subparsers(dest="what", required=True)
    p = scan.add_parser("decay", parents=[common], help="log-log decay of smoothed sums")
    p.add_argument("--X", default="8,16,32,64")
    p.add_argument("--g", default="bump:1,2")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--threshold", type=float, default=-3.0)
    p.add_argument("--plot-data", dest="plot_data")
    p.set_defaults(func=cmd_decay)

    gen = sub.add_parser("gen", help="generate data").add_subparsers(dest="what", required=True)
    p = gen.add_parser("forms", parents=[common], help="write coefficient files of an eigenbasis")
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_forms)

    export = sub.add_parser("export", help="export data").add_subparsers(dest="what", required=True)
    p = export.add_parser("coefficients", parents=[common], help="write one form's coefficient file")
    p.add_argument("--weight", type=int, default=12)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--form", type=int, default=0)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def _format(report, cfg) -> str:
    if cfg.format == "json":
        return report.to_json(cfg.deterministic)
    if cfg.format == "human":
        d = report.to_dict(cfg.deterministic)
        params = ", ".join(f"{k}={v}" for k, v in sorted(d["params"].items()))
        return (f"{'PASS' if d['passed'] else 'FAIL'}  {d['check_id']}({params})  residual {d['residual']:.3e}"
                f"  threshold {report.threshold:.3e}" + (f"  [{d['note']}]" if d["note"] else ""))
    return report.to_record(cfg.deterministic)


def _domain_errors() -> tuple:
    from .analysis import BoundCertificateFailed
    from .characters import CharacterSpecError
    from .expsums import PreconditionViolated, UnknownIdentity
    from .forms import OutOfRange, ParseError
    from .lfunction import GridTooShort, NotSeparating
    from .traceformula import BudgetExceeded, UnknownStep

    return (UsageError, ConfigInvalid, PreconditionViolated, UnknownIdentity, UnknownStep, CharacterSpecError,
            ParseError, OutOfRange, BudgetExceeded, GridTooShort, NotSeparating, BoundCertificateFailed)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    opts = vars(args)
    overrides = {}
    for item in opts.get("set") or []:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for key in ("format", "output", "jobs", "deterministic"):
        if key in opts:
            overrides[key] = opts[key]
    try:
        cfg = load_config(opts.get("config"), overrides=overrides)
    except (ConfigInvalid, OSError) as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return 2
    if cfg.deterministic:
        # reductions inside threaded BLAS may reorder between runs
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
    domain = _domain_errors()
    try:
        reports = args.func(args, cfg)
    except domain as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return 3
    stream = sys.stdout if cfg.output == "-" else open(cfg.output, "w", encoding="utf-8")
    try:
        for r in reports:
            stream.write(_format(r, cfg) + "\n")
    finally:
        if stream is not sys.stdout:
            stream.close()
    return 0 if all(r.passed for r in reports) else 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
