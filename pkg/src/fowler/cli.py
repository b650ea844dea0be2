"""Command-line front end.

Usage: ``fowler COMMAND --config FILE --out DIR [--plot] [--dry-run]
[--override-stability] [--threads N]`` with COMMAND one of ``run``,
``converge``, ``stability-scan``, ``project-test`` and ``symbol-dump``.

The config is an INI file; see ``demos/configs`` for complete examples.
Exit codes: 0 success, 2 configuration error, 3 stability refusal,
4 solver failure.
"""

import argparse
import configparser
import logging
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import experiments as ex
from .kernel import KernelConfig, build_symbol_table
from .output import loglog_svg, profile_svg, state_csv
from .projection import projection_order_study
from .time_stepper import (SolverConfig, SolverError, StabilityError, check_stability,
                           estimate_inverse_constants, max_stable_dt, run_simulation)

log = logging.getLogger("fowler")

EXIT_OK, EXIT_CONFIG, EXIT_STABILITY, EXIT_SOLVER = 0, 2, 3, 4
COMMANDS = ("run", "converge", "stability-scan", "project-test", "symbol-dump")


class ConfigError(ValueError):
    pass


# -- config schema -----------------------------------------------------------------

def _int_list(s):
    return tuple(int(v) for v in s.replace(",", " ").split())


def _float_list(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


SCHEMA = {
    "problem": {
        "example": (int, 1), "r": (int, 2), "elements": (int, 160), "eps": (float, ex.DEFAULT_EPS),
        "T": (float, 0.1), "exterior": (_bool, True), "box_L": (float, 2.0),
        "truncation": (_opt_float, 2.0),
    },
    "solver": {
        "dt": (_opt_float, None), "dt_divisions": (int, 640), "picard_tol": (float, 1e-11),
        "picard_max": (int, 50), "snapshots": (_float_list, ()),
    },
    "ladder": {"element_counts": (_int_list, (20, 40, 80, 160)), "reference_count": (int, 640)},
    "scan": {"element_counts": (_int_list, (8, 12, 16, 24, 32, 48)),
             "dts": (_float_list, tuple(0.1 / 4 ** k for k in range(6)))},
    "projection": {"orders": (_int_list, (2, 3)), "element_counts": (_int_list, (16, 32, 64, 128, 256))},
    "symbols": {"L": (float, 1.0), "n_max": (int, 64)},
}


def load_config(path):
    """Parse and type-check an INI file; returns ``{section: {key: value}}``."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    out = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    for section, keys in SCHEMA.items():
        out[section] = {k: default for k, (_, default) in keys.items()}
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key '{section}.{key}'")
            conv = keys[key][0]
            try:
                out[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for '{section}.{key}': {exc}") from None
    _check(out)
    return out


def _check(cfg):
    p = cfg["problem"]
    rules = [
        ("problem.example", p["example"] in (1, 2), "must be 1 or 2"),
        ("problem.r", p["r"] >= 2, "must be an integer >= 2"),
        ("problem.elements", p["elements"] >= 2, "must be >= 2"),
        ("problem.eps", p["eps"] > 0, "must be positive"),
        ("problem.T", p["T"] > 0, "must be positive"),
        ("problem.box_L", p["box_L"] >= 1, "must be >= 1"),
        ("problem.truncation", p["truncation"] is None or p["truncation"] > 0, "must be positive"),
        ("solver.dt", cfg["solver"]["dt"] is None or cfg["solver"]["dt"] > 0, "must be positive"),
        ("solver.picard_tol", cfg["solver"]["picard_tol"] > 0, "must be positive"),
        ("solver.picard_max", cfg["solver"]["picard_max"] >= 1, "must be >= 1"),
        ("scan.dts", all(d > 0 for d in cfg["scan"]["dts"]), "entries must be positive"),
        ("projection.orders", all(r >= 2 for r in cfg["projection"]["orders"]), "entries must be >= 2"),
        ("symbols.n_max", cfg["symbols"]["n_max"] >= 1, "must be >= 1"),
        ("symbols.L", cfg["symbols"]["L"] > 0, "must be positive"),
    ]
    for key, ok, msg in rules:
        if not ok:
            raise ConfigError(f"invalid value for '{key}': {msg}")


def experiment_config(cfg, single=False) -> ex.ExperimentConfig:
    p, s, lad = cfg["problem"], cfg["solver"], cfg["ladder"]
    counts = (p["elements"],) if single else lad["element_counts"]
    # a single run has no reference; any valid value will do
    reference = 4 * p["elements"] if single else lad["reference_count"]
    try:
        return ex.ExperimentConfig(
            example_id=p["example"], r=p["r"], element_counts=counts, reference_count=reference,
            T=p["T"], eps=p["eps"], dt=s["dt"], dt_divisions=s["dt_divisions"], box_L=p["box_L"],
            truncation=p["truncation"], exterior=p["exterior"], picard_tol=s["picard_tol"],
            picard_max=s["picard_max"])
    except ValueError as exc:
        key = "ladder" if "reference_count" in str(exc) or "divide" in str(exc) else "problem"
        raise ConfigError(f"invalid [{key}] settings: {exc}") from None


# -- output staging ----------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    plot: bool = False
    dry_run: bool = False
    override_stability: bool = False
    threads: int = 1


class Staging:
    """Collect outputs in a temporary directory next to ``out``; move them on success."""

    def __init__(self, out):
        self.out = os.path.abspath(out)
        parent = os.path.dirname(self.out)
        try:
            os.makedirs(parent, exist_ok=True)
            self.tmp = tempfile.mkdtemp(prefix=".fowler-", dir=parent)
        except OSError as exc:
            raise ConfigError(f"output location {out} is not writable: {exc}") from exc
        if os.path.exists(self.out) and not os.path.isdir(self.out):
            self.discard()
            raise ConfigError(f"output path {out} exists and is not a directory")
        if os.path.isdir(self.out) and not os.access(self.out, os.W_OK):
            self.discard()
            raise ConfigError(f"output directory {out} is not writable")
        self.files = []

    def write(self, name, text):
        with open(os.path.join(self.tmp, name), "w", newline="\n") as fh:
            fh.write(text)
        self.files.append(name)

    def commit(self):
        os.makedirs(self.out, exist_ok=True)
        for name in self.files:
            os.replace(os.path.join(self.tmp, name), os.path.join(self.out, name))
        self.discard()

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


# -- commands ----------------------------------------------------------------------

def _single_dt(ecfg, pb):
    if ecfg.dt is not None:
        return ecfg.dt
    est = estimate_inverse_constants(pb.ops)
    dt_gate = max_stable_dt(est, pb.space.mesh.h)
    return ecfg.T / max(ecfg.dt_divisions, int(np.ceil(ecfg.T / dt_gate)))


def cmd_run(cfg, m, stage):
    ecfg = experiment_config(cfg, single=True)
    n = cfg["problem"]["elements"]
    pb = ex.build_problem(ecfg, n)
    dt = _single_dt(ecfg, pb)
    est = estimate_inverse_constants(pb.ops)
    scfg = SolverConfig(dt=dt, T=ecfg.T, eps=ecfg.eps, picard_tol=ecfg.picard_tol,
                        picard_max=ecfg.picard_max, stability_override=m.override_stability)
    gate = check_stability(scfg, est, pb.space.mesh.h)
    print(f"stability: C1={gate.C1:.6g} C2={gate.C2:.6g} lhs={gate.lhs:.6g} "
          f"{'pass' if gate.passed else 'FAIL'} (dt={dt:.6g}, h={pb.space.mesh.h:.6g})")
    if m.dry_run:
        return EXIT_OK
    snaps = sorted(set(t for t in cfg["solver"]["snapshots"] if 0 <= t <= ecfg.T) | {ecfg.T})
    traj = run_simulation(pb.u0, pb.ops, scfg, snapshots=snaps, dofs=pb.dofs, est=est)
    meta = {"example": ecfg.example_id, "eps": ecfg.eps, "dt": repr(dt), "exterior": ecfg.exterior,
            "omega_elements": n}
    for i, state in enumerate(traj.snapshots):
        name = "final.csv" if i == len(traj.snapshots) - 1 else f"snapshot_{i:03d}.csv"
        stage.write(name, state_csv(state, meta))
    if m.plot:
        x0 = np.linspace(-1.0, 1.0, 801) if ecfg.exterior else np.linspace(-pb.space.mesh.L, pb.space.mesh.L, 801)
        f0 = ex.initial_datum(ecfg.example_id)
        stage.write("profile.svg", profile_svg(x0, f0(x0), x0, traj.final(x0),
                                               title=f"example {ecfg.example_id}, r={ecfg.r}, T={ecfg.T:g}, N={n}"))
    print(f"final ||U||/||U0|| max ratio {traj.max_norm_ratio:.6g}")
    return EXIT_OK


def cmd_converge(cfg, m, stage):
    ecfg = experiment_config(cfg)
    if m.dry_run:
        dt = ex.choose_dt(ecfg)
        print(f"ladder {ecfg.element_counts} vs reference {ecfg.reference_count}, dt={dt:.6g}")
        return EXIT_OK
    report = ex.run_convergence_study(ecfg, workers=m.threads, override=m.override_stability)
    stage.write("report.csv", report.to_csv())
    print(report.to_csv(), end="")
    if m.plot:
        h = 2.0 / np.asarray(report.element_counts, dtype=float)
        slope = float(np.polyfit(np.log(h), np.log(report.E), 1)[0]) if len(h) > 1 else None
        stage.write("convergence.svg", loglog_svg(h, report.E, slope,
                                                  title=f"example {ecfg.example_id}, r={ecfg.r}"))
    return EXIT_OK


def cmd_stability_scan(cfg, m, stage):
    ecfg = experiment_config(cfg, single=True)
    counts, dts = cfg["scan"]["element_counts"], cfg["scan"]["dts"]
    if m.dry_run:
        print(f"scan of {len(counts)} x {len(dts)} cells")
        return EXIT_OK
    rows = ex.stability_scan(ecfg, counts, dts, override=m.override_stability, workers=m.threads)
    meta = {"example": ecfg.example_id, "r": ecfg.r, "eps": ecfg.eps, "T": ecfg.T}
    try:
        meta["fitted_C"] = f"{ex.fit_growth_constant(rows, ecfg.T):.6g}"
    except ValueError:
        meta["fitted_C"] = "none"
    stage.write("scan.csv", ex.scan_csv(rows, meta))
    return EXIT_OK


def cmd_project_test(cfg, m, stage):
    pc = cfg["projection"]
    eps = cfg["problem"]["eps"]
    if m.dry_run:
        print(f"projection orders {pc['orders']} on {pc['element_counts']}")
        return EXIT_OK
    lines = ["r,element_count,h,l2_error,h1_seminorm_error"]
    meta = []
    for r in pc["orders"]:
        study = projection_order_study(r, pc["element_counts"], eps=eps)
        s0, s1 = study.slopes()
        meta.append(f"# r={r}: l2_slope = {s0:.6f}, h1_slope = {s1:.6f}")
        for n, h, e0, e1 in zip(study.element_counts, study.h, study.l2_errors, study.h1_errors):
            lines.append(f"{r},{int(n)},{h:.10e},{e0:.10e},{e1:.10e}")
    text = "\n".join(meta + lines) + "\n"
    stage.write("projection.csv", text)
    print(text, end="")
    return EXIT_OK


def cmd_symbol_dump(cfg, m, stage):
    sc, p = cfg["symbols"], cfg["problem"]
    kcfg = KernelConfig(truncation=None)
    if m.dry_run:
        print(f"symbols for n <= {sc['n_max']} at L={sc['L']}")
        return EXIT_OK
    tab = build_symbol_table(sc["L"], sc["n_max"], kcfg, eps=p["eps"])
    rates = tab.linear_rates()
    rows = ["n,k,re_sJ,im_sJ,re_sI,im_sI,growth_rate"]
    for n, k, sj, si, lam in zip(tab.n, tab.wavenumbers(), tab.s_J, tab.s_I, rates):
        rows.append(f"{n},{k:.12e},{sj.real:.12e},{sj.imag:.12e},{si.real:.12e},{si.imag:.12e},{lam.real + 0.0:.12e}")
    text = f"# L = {sc['L']}\n# eps = {p['eps']}\n# w0 = {tab.w0:.12e}\n" + "\n".join(rows) + "\n"
    stage.write("symbols.csv", text)
    return EXIT_OK


HANDLERS = {"run": cmd_run, "converge": cmd_converge, "stability-scan": cmd_stability_scan,
            "project-test": cmd_project_test, "symbol-dump": cmd_symbol_dump}


def build_parser():
    ap = argparse.ArgumentParser(prog="fowler", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI configuration file")
    ap.add_argument("--out", default="out", help="output directory (created on success)")
    ap.add_argument("--plot", action="store_true", help="also write SVG charts")
    ap.add_argument("--dry-run", action="store_true", help="validate and report, do not compute")
    ap.add_argument("--override-stability", action="store_true",
                    help="run configurations that fail the stability gate")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for ladders and scans")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = None
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        m = RunManifest(args.command, args.config, args.out, args.plot, args.dry_run,
                        args.override_stability, args.threads)
        cfg = load_config(m.config_path)
        if not m.dry_run:
            stage = Staging(m.output_dir)
        code = HANDLERS[m.command](cfg, m, stage)
        if stage is not None:
            stage.commit()
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityError as exc:
        print(f"stability refusal: {exc} (use --override-stability to run anyway)", file=sys.stderr)
        return EXIT_STABILITY
    except (SolverError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        if stage is not None:
            stage.discard()


if __name__ == "__main__":
    sys.exit(main())
