"""Command-line front end: ``cylstable {sample,integrate,decouple,constants,verify}``.

Exit codes: 0 success, 1 a verification criterion failed, 2 bad configuration.
Every output embeds the resolved configuration, seed and package version.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .catalog import CATALOG, build
from .errors import ConfigurationError
from .grid import TimeGrid, as_grid
from .rng import RngStream, set_threads
from .sampler import check_alpha

SUBCOMMANDS = ("sample", "integrate", "decouple", "constants", "verify")


@dataclass
class RunConfig:
    command: str
    alpha: float = 1.0
    d_G: int = 2
    d_H: int = 2
    grid: dict = field(default_factory=lambda: {"T": 1.0, "M": 64})
    integrand: str = "constant"
    params: dict = field(default_factory=dict)
    scenarios: int = 1000
    seed: int = 0
    levels: list | None = None
    suite: str = "all"
    quick: bool = False
    timing: bool = False
    dims: list = field(default_factory=lambda: [1, 2, 3, 4, 8])
    threads: int = 1
    out: str | None = None

    def validate(self):
        if self.command not in SUBCOMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        self.alpha = check_alpha(self.alpha)
        for name in ("d_G", "d_H", "scenarios", "threads"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
            setattr(self, name, int(v))
        self.seed = int(self.seed)
        as_grid(self.grid)
        if self.integrand not in CATALOG:
            raise ConfigurationError(f"unknown integrand {self.integrand!r}; choose from {sorted(CATALOG)}")
        if not isinstance(self.params, dict):
            raise ConfigurationError("params must be a JSON object")
        return self

    def provenance(self):
        d = asdict(self)
        d.pop("out")
        d.pop("threads")  # results do not depend on it
        return d


def _parse_grid(text):
    """``T:M`` for a uniform grid or a comma-separated list of times."""
    if ":" in text:
        T, M = text.split(":", 1)
        return {"T": float(T), "M": int(M)}
    return {"times": [float(x) for x in text.split(",")]}


def _parse_levels(text):
    if ":" in text:
        a, b = text.split(":", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _parser():
    p = _Parser(prog="cylstable", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cylstable {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, integrand=False):
        sp.add_argument("--config", help="JSON file with defaults; flags override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help="output path (stdout if omitted)")
        if integrand:
            sp.add_argument("--integrand", choices=sorted(CATALOG))
            sp.add_argument("--params", type=json.loads, help="JSON parameter block")

    sp = sub.add_parser("sample", help="simulate driving paths to CSV")
    common(sp)
    for flag, typ in (("--alpha", float), ("--dg", int), ("--dh", int), ("--samples", int)):
        sp.add_argument(flag, type=typ)
    sp.add_argument("--grid", type=_parse_grid, help="T:M or t0,t1,...")

    sp = sub.add_parser("integrate", help="integrate a catalog integrand, Cauchy diagnostics to CSV")
    common(sp, integrand=True)
    for flag, typ in (("--alpha", float), ("--dg", int), ("--dh", int), ("--scenarios", int)):
        sp.add_argument(flag, type=typ)
    sp.add_argument("--grid", type=_parse_grid)
    sp.add_argument("--levels", type=_parse_levels, help="k0:k1 or k0,k1,...")

    sp = sub.add_parser("decouple", help="decoupling ratios and conditional char. fn. deviations")
    common(sp, integrand=True)
    for flag, typ in (("--alpha", float), ("--dg", int), ("--dh", int), ("--scenarios", int)):
        sp.add_argument(flag, type=typ)
    sp.add_argument("--grid", type=_parse_grid)

    sp = sub.add_parser("constants", help="calibrated stable constants as JSON")
    common(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--dims", type=lambda s: [int(x) for x in s.split(",")])

    sp = sub.add_parser("verify", help="run verification suites")
    common(sp)
    sp.add_argument("--suite")
    sp.add_argument("--quick", action="store_true", default=None, help="reduced sample sizes")
    sp.add_argument("--timing", action="store_true", default=None, help="record runtimes in the report")
    return p


_FLAG_TO_FIELD = {"dg": "d_G", "dh": "d_H", "samples": "scenarios"}


def resolve_config(argv):
    ns = _parser().parse_args(argv)
    if ns.command is None:
        raise ConfigurationError(f"a subcommand is required: {', '.join(SUBCOMMANDS)}")
    values = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {ns.config!r}: {exc}") from None
    for k, v in vars(ns).items():
        if k in ("config", "command") or v is None:
            continue
        values[_FLAG_TO_FIELD.get(k, k)] = v
    values.pop("command", None)
    unknown = set(values) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    return RunConfig(command=ns.command, **values).validate()


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_header(cfg):
    return [f"cylstable {__version__}", "config " + json.dumps(cfg.provenance(), sort_keys=True)]


def _json(obj):
    from .verify import _clean
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def cmd_sample(cfg):
    from .sampler import sample_driving_path
    path = sample_driving_path(cfg.alpha, (cfg.d_G, cfg.d_H), as_grid(cfg.grid), RngStream(cfg.seed),
                               cfg.scenarios)
    _emit(path.to_csv(header=_csv_header(cfg)), cfg.out)
    return 0


def cmd_integrate(cfg):
    from .integrator import RefinementSchedule, integrate
    from .sampler import sample_driving_path
    grid = as_grid(cfg.grid)
    K = int(round(np.log2(grid.n_cells)))
    if grid != TimeGrid.dyadic(grid.T, K):
        raise ConfigurationError("integrate needs a uniform grid with 2^K cells")
    levels = cfg.levels if cfg.levels is not None else list(range(0, K + 1))
    if max(levels) > K:
        raise ConfigurationError(f"levels exceed the grid resolution (max {K})")
    sched = RefinementSchedule(tuple(levels))
    psi = build(cfg.integrand, cfg.d_H, cfg.d_G, cfg.params)
    path = sample_driving_path(cfg.alpha, (cfg.d_G, cfg.d_H), grid, RngStream(cfg.seed), cfg.scenarios)
    res = integrate(psi, path, sched)
    lines = [f"# {h}" for h in _csv_header(cfg)]
    lines.append(",".join(["scenario", "level"] + [f"I{j}" for j in range(cfg.d_H)]
                          + ["cauchy_increment", "converged"]))
    for s in range(path.n_scenarios):
        for j, k in enumerate(sched.levels):
            inc = "" if j == 0 else repr(float(res.increments[s, j - 1]))
            vals = [repr(float(x)) for x in res.level_values[s, j]]
            lines.append(",".join([str(s), str(k)] + vals + [inc, str(bool(res.converged[s])).lower()]))
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def cmd_decouple(cfg):
    from .decoupling import build_tangent_pair, conditional_charfn_check, decoupling_ratio
    from .processes import ContractionStepProcess, approximate_by_steps
    grid = as_grid(cfg.grid)
    psi = build(cfg.integrand, cfg.d_H, cfg.d_G, cfg.params)
    theta = approximate_by_steps(psi, grid, 2.0 ** 20)
    root = RngStream(cfg.seed)
    fwd, rev = decoupling_ratio(theta, None, cfg.scenarios, root.child("identity"), cfg.alpha)
    gamma = ContractionStepProcess.random(grid, cfg.d_H, root.child("gamma"))
    gf, gr = decoupling_ratio(theta, gamma, cfg.scenarios, root.child("contraction"), cfg.alpha)
    pair = build_tangent_pair(theta, root.child("base"), root.child("ghost"), cfg.alpha, min(cfg.scenarios, 500))
    h = np.ones(cfg.d_H) / np.sqrt(cfg.d_H)
    n_inner = 20000
    devs = conditional_charfn_check(pair, h, n_inner, 20, root.child("charfn"), return_all=True)
    report = {"version": __version__, "config": cfg.provenance(),
              "identity": {"forward": fwd.to_dict(), "reverse": rev.to_dict()},
              "random_contraction": {"forward": gf.to_dict(), "reverse": gr.to_dict()},
              "charfn": {"h": h, "n_inner": n_inner, "n_outer": 20, "worst_deviation": float(devs.max()),
                         "tolerance": 4 / np.sqrt(n_inner)}}
    _emit(_json(report), cfg.out)
    return 0


def cmd_constants(cfg):
    from .spectral import calibrate_constants
    c = calibrate_constants(cfg.alpha)
    _emit(_json({"version": __version__, "config": cfg.provenance(), **c.to_dict(tuple(cfg.dims))}), cfg.out)
    return 0


def cmd_verify(cfg):
    from .verify import SUITES, run_all
    names = list(SUITES) if cfg.suite == "all" else cfg.suite.split(",")
    bad = [n for n in names if n not in SUITES]
    if bad:
        raise ConfigurationError(f"unknown suite(s) {bad}; choose from {sorted(SUITES)} or 'all'")
    result = run_all(cfg.seed, cfg.quick, cfg.timing, names)
    result["config"] = cfg.provenance()
    _emit(_json(result), cfg.out)
    for rep in result["reports"]:
        status = "PASS" if rep["passed"] else "FAIL"
        print(f"[{status}] {rep['experiment']}", file=sys.stderr)
    return 0 if result["passed"] else 1


COMMANDS = {"sample": cmd_sample, "integrate": cmd_integrate, "decouple": cmd_decouple,
            "constants": cmd_constants, "verify": cmd_verify}


def run(argv=None):
    """Parse ``argv`` and execute; returns the process exit code."""
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else list(argv))
        set_threads(cfg.threads)
        return COMMANDS[cfg.command](cfg)
    except ConfigurationError as exc:
        print(f"cylstable: configuration error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
