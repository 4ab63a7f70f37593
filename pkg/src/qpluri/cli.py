"""Command-line experiment runner.

Every run writes a tab-separated table and a manifest into the output
directory.  The manifest is an INI file whose ``[experiment]`` section is
a complete config: ``qpluri --config <manifest>`` repeats the run and
rewrites the same table byte for byte.  Timings and versions go in the
manifest's ``[run]`` section, never in tables.

Exit status: 0 success, 1 a check failed, 2 usage or configuration error.
"""

import argparse
import configparser
import os
import platform
import sys
import time
from dataclasses import dataclass, field, fields
from importlib import metadata

import numpy as np

from . import verify
from .errors import DomainError, SolverError
from .grid import Box4, dump
from .polynomial import RealPolynomial
from .potential import (CompactSpec, capacity, capacity_table, extremal_function,
                        fit_offset_power_law, fit_power_law, outer_capacity,
                        radial_capacity, radial_extremal, sublevel_capacity_decay)
from .report import CheckReport, read_reports
from .symcalc import ma_density

ENV_OUTPUT = "QPLURI_OUTPUT_DIR"
DEFAULT_OUTPUT = "qpluri-out"
COMMANDS = ("identities", "ma-density", "extremal", "capacity", "decay", "verify-all")
FUNCTIONS = ("normsq", "quartic", "linear", "x0sq")
STUDIES = ("shrinking-ball", "sublevel")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Everything a run needs; the manifest echoes it back."""

    command: str = ""
    n: int = 1
    resolution: int = 41
    half_width: float = 1.0
    omega: float = 1.0
    K: list = field(default_factory=lambda: ["ball:0.5"])
    seed: int = 1
    count: int = 200
    n_range: list = field(default_factory=lambda: [1, 2, 3])
    mutation: str = "none"
    function: str = "normsq"
    study: str = "shrinking-ball"
    radii: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    thresholds: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    c: float = 0.04
    window: float = 0.5
    tol: float = 1e-8
    pairs: int = 20
    pair_resolution: int = 21
    quick: bool = False
    snapshot_format: str = "text"
    output: str = ""

    def validate(self):
        """Return every problem found, not just the first."""
        errs = []
        if self.command not in COMMANDS:
            errs.append(f"command: unknown {self.command!r}")
        if self.n < 1:
            errs.append("n: must be >= 1")
        if self.command in ("extremal", "capacity", "decay") and self.n != 1:
            errs.append("n: grid solvers support n = 1 only")
        if self.resolution < 5 or self.resolution % 2 == 0:
            errs.append("resolution: must be an odd integer >= 5")
        if self.half_width <= 0:
            errs.append("half_width: must be positive")
        if not 0 < self.omega <= self.half_width:
            errs.append("omega: must lie in (0, half_width]")
        if not self.K:
            errs.append("K: at least one set spec is required")
        for spec in self.K:
            try:
                E = CompactSpec.parse(spec)
            except (DomainError, ValueError) as exc:
                errs.append(f"K: {spec!r}: {exc}")
                continue
            if E.kind != "domain" and E.kind != "empty" and not E.extent() < self.omega:
                errs.append(f"K: {spec!r} is not compactly contained in omega")
        if self.count < 0:
            errs.append("count: must be >= 0")
        if not self.n_range or any(k < 1 for k in self.n_range):
            errs.append("n_range: needs positive dimensions")
        if self.mutation != "none" and self.mutation not in verify.MUTATIONS:
            errs.append(f"mutation: choose none or one of {', '.join(verify.MUTATIONS)}")
        if self.function not in FUNCTIONS:
            errs.append(f"function: choose one of {', '.join(FUNCTIONS)}")
        if self.study not in STUDIES:
            errs.append(f"study: choose one of {', '.join(STUDIES)}")
        if not self.radii or any(r <= 0 for r in self.radii):
            errs.append("radii: must be positive")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])) or not self.thresholds:
            errs.append("thresholds: must be strictly increasing")
        if self.c <= 0:
            errs.append("c: must be positive")
        if not 0 < self.window < self.omega:
            errs.append("window: must lie in (0, omega)")
        if self.tol <= 0:
            errs.append("tol: must be positive")
        if self.pairs < 0:
            errs.append("pairs: must be >= 0")
        if self.pair_resolution < 5 or self.pair_resolution % 2 == 0:
            errs.append("pair_resolution: must be an odd integer >= 5")
        if self.snapshot_format not in ("text", "binary"):
            errs.append("snapshot_format: text or binary")
        return errs

    def box(self):
        return Box4(self.resolution, self.half_width)

    # INI round trip; lists are comma separated, set specs one per line
    def to_ini(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "K":
                out[f.name] = "\n".join(v)
            elif isinstance(v, list):
                out[f.name] = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                out[f.name] = repr(v)
            elif isinstance(v, bool):
                out[f.name] = "true" if v else "false"
            else:
                out[f.name] = str(v)
        return out


_FIELD_TYPES = {f.name: f for f in fields(ExperimentConfig)}
_LIST_ITEM = {"n_range": int, "radii": float, "thresholds": float}


def _convert(name, raw):
    base = ExperimentConfig()
    default = getattr(base, name)
    if name == "K":
        return [s.strip() for s in raw.replace("|", "\n").splitlines() if s.strip()]
    if name in _LIST_ITEM:
        return [_LIST_ITEM[name](x) for x in raw.replace(",", " ").split()]
    if isinstance(default, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return type(default)(raw.strip())


def load_config(path):
    """Read the ``[experiment]`` section of an INI file into raw values."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"config error: cannot read {path}: {exc.strerror}")
    except configparser.Error as exc:
        raise UsageError(f"config error: malformed {path}: {exc}".splitlines()[0])
    if not cp.has_section("experiment"):
        raise UsageError(f"config error: {path} has no [experiment] section")
    return dict(cp.items("experiment"))


def build_config(values):
    """Typed config from raw key/value strings; all problems reported together."""
    cfg = ExperimentConfig()
    errs = []
    for key, raw in values.items():
        if key not in _FIELD_TYPES:
            errs.append(f"{key}: unknown setting")
            continue
        if raw is None:
            continue
        try:
            setattr(cfg, key, raw if not isinstance(raw, str) else _convert(key, raw))
        except (TypeError, ValueError) as exc:
            errs.append(f"{key}: {exc}")
    if not errs:
        errs = cfg.validate()
    else:
        errs += [e for e in cfg.validate() if e.split(":")[0] not in {x.split(":")[0] for x in errs}]
    if errs:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(errs))
    return cfg


def _parser():
    p = argparse.ArgumentParser(prog="qpluri", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI file with an [experiment] section (a manifest works)")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT} or ./{DEFAULT_OUTPUT})")
    sub = p.add_subparsers(dest="command")

    def common_grid(sp):
        sp.add_argument("--res", dest="resolution", type=int)
        sp.add_argument("--half-width", dest="half_width", type=float)
        sp.add_argument("--omega", type=float)
        sp.add_argument("--tol", type=float)

    sp = sub.add_parser("identities", help="exact identity suite")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--n-range", dest="n_range")
    sp.add_argument("--mutation")

    sp = sub.add_parser("ma-density", help="symbolic density of a named function")
    sp.add_argument("--function")
    sp.add_argument("--n", type=int)

    sp = sub.add_parser("extremal", help="solve for an extremal function and save a snapshot")
    sp.add_argument("--K", action="append")
    sp.add_argument("--snapshot-format", dest="snapshot_format")
    common_grid(sp)

    sp = sub.add_parser("capacity", help="capacity of one set or a family")
    sp.add_argument("--K", action="append")
    common_grid(sp)

    sp = sub.add_parser("decay", help="shrinking-ball or sublevel capacity study")
    sp.add_argument("--study")
    sp.add_argument("--radii")
    sp.add_argument("--thresholds")
    sp.add_argument("--c", type=float)
    sp.add_argument("--window", type=float)
    common_grid(sp)

    sp = sub.add_parser("verify-all", help="full check battery")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--res", dest="pair_resolution", type=int,
                    help="grid resolution for the randomized pair checks")
    sp.add_argument("--quick", action="store_const", const="true")

    sp = sub.add_parser("report", help="summarize tables written by earlier runs")
    sp.add_argument("tables", nargs="+")
    return p


# -- subcommands -------------------------------------------------------------------

def _cmd_identities(cfg):
    mut = None if cfg.mutation == "none" else cfg.mutation
    rep = verify.check_identities(cfg.seed, cfg.count, tuple(cfg.n_range), mutation=mut)
    print(rep.summary())
    return [rep], _report_table([rep])


def _cmd_ma_density(cfg):
    n = cfg.n
    if cfg.function == "normsq":
        u = RealPolynomial.normsq(n)
    elif cfg.function == "quartic":
        u = RealPolynomial.normsq(n) ** 2
    elif cfg.function == "linear":
        u = RealPolynomial.variable(n, 0)
    else:
        u = RealPolynomial.variable(n, 0) ** 2
    dens = ma_density([u] * n)
    print(dens)
    return [], f"function\tn\tdensity\n{cfg.function}\t{n}\t{dens}\n"


def _cmd_extremal(cfg, outdir):
    box = cfg.box()
    rows = ["K\tomega\tresolution\titerations\tresidual\tsup_error"]
    for k, spec in enumerate(cfg.K):
        E = CompactSpec.parse(spec)
        sol = extremal_function(E, cfg.omega, box, tol=cfg.tol)
        err = ""
        if E.kind == "ball" and E.is_centered() and not E.open:
            (_, r), = E.balls
            rho = box.radius()
            ann = (rho > r + 2 * box.h) & (rho < cfg.omega)
            err = repr(float(np.abs(sol.u.values - radial_extremal(rho, r, cfg.omega))[ann].max()))
        name = "extremal.grid" if len(cfg.K) == 1 else f"extremal-{k}.grid"
        dump(sol.u, os.path.join(outdir, name), cfg.snapshot_format)
        rows.append("\t".join([str(E), repr(cfg.omega), str(cfg.resolution), str(sol.iterations),
                               repr(float(sol.residual)), err]))
        print(f"{E}: iterations={sol.iterations} residual={sol.residual:.3g}"
              + (f" sup_error={float(err):.4g}" if err else "") + f" snapshot={name}")
    return [], "\n".join(rows) + "\n"


def _cmd_capacity(cfg):
    box = cfg.box()
    vals = []
    for spec in cfg.K:
        E = CompactSpec.parse(spec)
        c = capacity(E, cfg.omega, box, tol=cfg.tol)
        vals.append(c)
        line = f"{E}: C = {c.value:.6g} (residual {c.diagnostics['residual']:.3g}, " \
               f"iterations {c.diagnostics['iterations']})"
        if E.kind == "ball" and E.is_centered() and not E.open:
            (_, r), = E.balls
            ref = radial_capacity(r, cfg.omega)
            line += f"  radial formula {ref:.6g}, rel. error {abs(c.value - ref) / ref:.3%}"
        print(line)
    return [], capacity_table(vals)


def _cmd_decay(cfg):
    box = cfg.box()
    if cfg.study == "shrinking-ball":
        radii = sorted(cfg.radii, reverse=True)
        oc = outer_capacity(CompactSpec.point(), cfg.omega, box, radii, tol=cfg.tol)
        seq = oc.diagnostics["sequence"]
        rows = ["radius\tcapacity"] + [f"{r!r}\t{c!r}" for r, c in seq]
        print(_exponent_line([r for r, _ in seq], [c for _, c in seq]))
    else:
        v = box.sample(lambda *X: -cfg.c / sum(x * x for x in X), cfg.omega)
        vals = sublevel_capacity_decay(v, CompactSpec.ball(cfg.window), cfg.thresholds,
                                       cfg.omega, tol=cfg.tol)
        rows = ["threshold\tcapacity"] + [f"{m!r}\t{x.value!r}" for m, x in zip(cfg.thresholds, vals)]
        mc = [m * x.value for m, x in zip(cfg.thresholds, vals)]
        print("m*C: " + ", ".join(f"{x:.4g}" for x in mc))
    return [], "\n".join(rows) + "\n"


def _cmd_verify_all(cfg):
    reports = verify.run_battery(cfg.seed, resolution=cfg.pair_resolution, pairs=cfg.pairs,
                                 identity_count=cfg.count, quick=cfg.quick)
    for r in reports:
        print(r.summary())
    print(_verdict(reports))
    return reports, _report_table(reports)


def _exponent_line(r, C):
    if len(r) < 2:
        return "exponent: too few radii"
    plain = fit_power_law(r, C)[0]
    if len(r) >= 4:
        return f"exponent {fit_offset_power_law(r, C):.4f} (log-log slope {plain:.4f})"
    return f"exponent {plain:.4f} (log-log slope; the offset fit needs four radii)"


def _report_table(reports):
    lines = [CheckReport.header()] + [r.to_line() for r in reports]
    return "\n".join(lines) + "\n"


def _verdict(reports):
    failed = [r.check_id for r in reports if not r.passed]
    if failed:
        return f"FAIL {len(failed)}/{len(reports)}: " + ", ".join(failed)
    return f"PASS {len(reports)}/{len(reports)}"


# -- report ------------------------------------------------------------------------

def _read_two_column(path):
    with open(path) as fh:
        lines = [l for l in fh.read().splitlines() if l.strip()]
    head = lines[0].split("\t")
    rows = [tuple(float(x) for x in l.split("\t")) for l in lines[1:]]
    if any(len(r) != 2 for r in rows):
        raise ValueError("expected two columns")
    return head, rows


def run_report(paths, outdir=None):
    """Summarize tables; returns the exit status."""
    reports = []
    out = []
    for path in paths:
        try:
            with open(path) as fh:
                first = fh.readline().rstrip("\n")
        except OSError as exc:
            print(f"error: cannot read table {path}: {exc.strerror}", file=sys.stderr)
            return EXIT_USAGE
        try:
            if first == CheckReport.header():
                reports.extend(read_reports(path))
            elif first in ("radius\tcapacity", "threshold\tcapacity"):
                head, rows = _read_two_column(path)
                out.append(f"# {path}")
                out.append("\t".join(head))
                out.extend(f"{a!r}\t{b!r}" for a, b in rows)
                if head[0] == "radius" and len(rows) >= 2:
                    out.append("# " + _exponent_line([a for a, _ in rows], [b for _, b in rows]))
                elif head[0] == "threshold":
                    out.append("# m*C " + " ".join(f"{a * b:.6g}" for a, b in rows))
            elif first.startswith("K\tomega"):
                with open(path) as fh:
                    out.append(f"# {path}")
                    out.extend(fh.read().splitlines())
            else:
                raise ValueError("unrecognized header")
        except (ValueError, IndexError) as exc:
            print(f"error: corrupt table {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    for r in reports:
        print(r.summary())
    for line in out:
        print(line)
    if outdir is not None:
        with open(os.path.join(outdir, "report.tsv"), "w") as fh:
            fh.write("check_id\tpassed\tworst_margin\ttolerance\n")
            for r in reports:
                fh.write(f"{r.check_id}\t{int(r.passed)}\t{r.worst_margin!r}\t{r.tolerance!r}\n")
    if reports:
        print(_verdict(reports))
    return EXIT_FAIL if any(not r.passed for r in reports) else EXIT_OK


# -- driver ------------------------------------------------------------------------

def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    try:
        out["qpluri"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        out["qpluri"] = "unknown"
    return out


def write_manifest(path, cfg, elapsed):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = cfg.to_ini()
    cp["run"] = {**_versions(), "elapsed_seconds": f"{elapsed:.3f}"}
    with open(path, "w") as fh:
        cp.write(fh)


def _outdir(cfg, args):
    d = args.out or cfg.output or os.environ.get(ENV_OUTPUT) or DEFAULT_OUTPUT
    try:
        os.makedirs(d, exist_ok=True)
        probe = os.path.join(d, ".write-test")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise PermissionError(f"cannot write output directory {d}: {exc.strerror}")
    return d


def run(cfg, outdir):
    """Execute one configured experiment; returns the exit status."""
    t0 = time.perf_counter()
    cmd = cfg.command
    if cmd == "identities":
        reports, table = _cmd_identities(cfg)
    elif cmd == "ma-density":
        reports, table = _cmd_ma_density(cfg)
    elif cmd == "extremal":
        reports, table = _cmd_extremal(cfg, outdir)
    elif cmd == "capacity":
        reports, table = _cmd_capacity(cfg)
    elif cmd == "decay":
        reports, table = _cmd_decay(cfg)
    else:
        reports, table = _cmd_verify_all(cfg)
    with open(os.path.join(outdir, f"{cmd}.tsv"), "w") as fh:
        fh.write(table)
    write_manifest(os.path.join(outdir, f"{cmd}.manifest.ini"), cfg, time.perf_counter() - t0)
    return EXIT_FAIL if any(not r.passed for r in reports) else EXIT_OK


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            outdir = args.out or os.environ.get(ENV_OUTPUT)
            if outdir:
                os.makedirs(outdir, exist_ok=True)
            return run_report(args.tables, outdir)
        values = load_config(args.config) if args.config else {}
        if args.command:
            if values.get("command", args.command) != args.command:
                # flags name a different experiment: keep only shared settings
                values.pop("command")
            values["command"] = args.command
        elif "command" not in values:
            parser.print_usage(sys.stderr)
            print("error: no subcommand given and no command in the config", file=sys.stderr)
            return EXIT_USAGE
        for key, val in vars(args).items():
            if key in ("config", "out", "command", "tables") or val is None:
                continue
            values[key] = val
        cfg = build_config(values)
        if args.out:
            cfg.output = args.out
        outdir = _outdir(cfg, args)
        return run(cfg, outdir)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PermissionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
