"""Command-line entry point: ``fblec ec | sweep | validate``.

Settings come from three layers, highest first: command-line flags, a flat
``key = value`` config file (``--config``), and built-in defaults.  Config
keys are the CSV column names plus the long flag names with dashes turned
into underscores.  The default seed can also be set with ``FBLEC_SEED``.

Exit codes: 0 success, 1 numerical/IO failure or failed validation, 2 usage
or configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, replace

from . import sweep as sw
from .channel import LinkConfig
from .effcap import (
    McConfig,
    MultiUserConfig,
    QosConfig,
    ec,
    ec_role_closed,
    ec_role_monte_carlo,
    ec_role_quadrature,
    multiuser_total_estimate,
    role_of,
    total_ec_estimate,
)
from .errors import ConfigError
from .specfun import AccuracyPolicy

SEED_ENV = "FBLEC_SEED"


def _flag(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _float_list(s: str):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _name_list(s: str):
    return tuple(x.strip().replace("-", "_") for x in s.split(",") if x.strip())


def _name(s: str) -> str:
    return s.strip().replace("-", "_")


# key -> (parser, default); every key is both a config-file key and a flag
SETTINGS = {
    # CSV columns
    "scheme": (_name, "noma"),
    "user": (_name, "noma_strong"),
    "method": (_name, "closed_form"),
    "rho_db": (float, 20.0),
    "theta": (float, 0.01),
    "epsilon": (float, 1e-6),
    "blocklength": (int, 400),
    "alpha1": (float, 0.3),
    "alpha2": (float, 0.7),
    "num_pairs": (int, 3),
    # run controls
    "seed": (int, 0),
    "samples": (int, 100_000),
    "sampler": (str, "plain"),
    "clamp_rate": (_flag, False),
    "approx_dispersion": (_flag, False),
    "total_users": (int, 12),
    "pairing": (str, "strongest-weakest"),
    "workers": (int, 1),
    "out": (str, "-"),
    "preset": (str, None),
    "axis": (_name, None),
    "grid": (_float_list, None),
    "users": (_name_list, None),
    "methods": (_name_list, None),
    "series_theta": (_float_list, None),
    "emit_plot": (_flag, False),
    "tolerance_profile": (str, "default"),
    "verbose": (_flag, False),
}

BOOL_KEYS = {k for k, (p, _) in SETTINGS.items() if p is _flag}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in SETTINGS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = SETTINGS[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config_text(text, path)


def defaults(env=None) -> dict:
    env = os.environ if env is None else env
    out = {k: d for k, (_, d) in SETTINGS.items()}
    if env.get(SEED_ENV):
        try:
            out["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
    return out


def resolve(args: argparse.Namespace, env=None) -> dict:
    """Merge defaults < config file < flags."""
    merged = defaults(env)
    if getattr(args, "config", None):
        merged.update(load_config(args.config))
    for key in SETTINGS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    if merged["seed"] < 0 or merged["seed"] >= 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return merged


def _argtype(parser):
    def conv(s):
        try:
            return parser(s)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    conv.__name__ = getattr(parser, "__name__", "value")
    return conv


def _add_settings(p: argparse.ArgumentParser, keys):
    for key in keys:
        parser = SETTINGS[key][0]
        flag = "--" + key.replace("_", "-")
        if key in BOOL_KEYS:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=key, type=_argtype(parser), default=None)


COMMON = ("rho_db", "theta", "epsilon", "blocklength", "alpha1", "alpha2", "seed", "samples",
          "sampler", "clamp_rate", "approx_dispersion", "num_pairs", "total_users", "pairing",
          "verbose")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="fblec", description="Effective capacity of two-user NOMA/OMA "
                                  "downlinks with finite blocklength.")
    sub = top.add_subparsers(dest="command", required=True)

    p_ec = sub.add_parser("ec", help="one user and method at one operating point")
    p_ec.add_argument("--config", default=None)
    _add_settings(p_ec, COMMON + ("user", "method", "scheme"))
    p_ec.add_argument("--header", action="store_true", help="print the CSV header first")

    p_sw = sub.add_parser("sweep", help="parameter sweep to CSV")
    p_sw.add_argument("--config", default=None)
    _add_settings(p_sw, COMMON + ("out", "preset", "axis", "grid", "users", "methods", "series_theta",
                                  "emit_plot", "workers"))

    p_va = sub.add_parser("validate", help="cross-check closed forms, quadrature and Monte-Carlo")
    p_va.add_argument("--config", default=None)
    _add_settings(p_va, ("seed", "samples", "tolerance_profile", "verbose"))
    return top


# --------------------------------------------------------------------------
# ec


def _link(cfg) -> LinkConfig:
    return LinkConfig.from_db(cfg["rho_db"], alpha1=cfg["alpha1"], alpha2=cfg["alpha2"],
                              blocklength_n=cfg["blocklength"], epsilon=cfg["epsilon"])


def _user_name(cfg) -> str:
    user = cfg["user"]
    if user in ("strong", "weak", "total", "multiuser"):
        user = f"{cfg['scheme']}_{user}" if user != "multiuser" else f"multiuser_{cfg['scheme']}"
    if user not in sw.SWEEP_USERS:
        raise ConfigError(f"unknown user {cfg['user']!r}; choose from {sw.SWEEP_USERS}")
    return user


def _multiuser(cfg, theta) -> MultiUserConfig:
    return MultiUserConfig(cfg["total_users"], 2 * cfg["num_pairs"], cfg["pairing"], thetas=theta)


def cmd_ec(cfg, out=None) -> int:
    out = out or sys.stdout
    link = _link(cfg)
    qos = QosConfig(cfg["theta"])
    user = _user_name(cfg)
    method = cfg["method"]
    if method not in sw.METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {sw.METHODS}")
    mc = McConfig(cfg["samples"], cfg["seed"], sampler=cfg["sampler"])
    kw = dict(mc=mc, approx_dispersion=cfg["approx_dispersion"], clamp=cfg["clamp_rate"])
    scheme, who = sw._split_user(user)
    num_pairs = 1
    if who in ("strong", "weak"):
        est = ec(user, link, qos, method, **kw)
    elif who == "total":
        est = total_ec_estimate(method, link, qos, scheme, **kw)
    else:
        mu = _multiuser(cfg, qos.theta)
        num_pairs = mu.num_pairs
        est = multiuser_total_estimate(mu, link, method, scheme, **kw)
    row = sw.ResultRow(scheme, who, method, float(cfg["rho_db"]), qos.theta, link.epsilon, link.blocklength_n,
                       link.alpha1, link.alpha2, num_pairs, est.value, est.std_error, est.diag)
    text = sw.rows_to_csv([row])
    out.write(text if cfg.get("header") else text.split("\n", 1)[1])
    if cfg["verbose"]:
        print(est, file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# sweep

_LINK_KEYS = ("rho_db", "theta", "epsilon", "blocklength")


def sweep_spec_from(cfg, explicit) -> sw.SweepSpec:
    """Build the sweep from a preset or from axis/grid; ``explicit`` holds keys set by file or flag."""
    if cfg["preset"]:
        spec = sw.figure_preset(cfg["preset"])
    else:
        if not cfg["axis"] or not cfg["grid"]:
            raise ConfigError("sweep needs --preset or both --axis and --grid")
        if cfg["axis"] == "alpha_pair":
            grid = tuple((a, 1.0 - a) for a in cfg["grid"])
        elif cfg["axis"] == "blocklength":
            grid = tuple(int(x) for x in cfg["grid"])
        else:
            grid = cfg["grid"]
        spec = sw.SweepSpec(cfg["axis"], grid, methods=("closed_form", "monte_carlo"))
    fixed = dict(spec.fixed)
    varied = {spec.axis} | ({spec.series[0]} if spec.series else set())
    for key in _LINK_KEYS:
        if key in explicit and key not in varied:
            fixed[key] = cfg[key]
    if ("alpha1" in explicit or "alpha2" in explicit) and "alpha_pair" not in varied:
        fixed["alpha_pair"] = (cfg["alpha1"], cfg["alpha2"])
    series = spec.series
    if cfg["series_theta"]:
        series = ("theta", cfg["series_theta"])
        fixed.pop("theta", None)
    changes = dict(fixed=fixed, series=series, samples=cfg["samples"], master_seed=cfg["seed"],
                   sampler=cfg["sampler"], approx_dispersion=cfg["approx_dispersion"], clamp=cfg["clamp_rate"],
                   total_users=cfg["total_users"], served_users=2 * cfg["num_pairs"], pairing=cfg["pairing"])
    if cfg["users"]:
        changes["users"] = cfg["users"]
    if cfg["methods"]:
        changes["methods"] = cfg["methods"]
    return replace(spec, **changes)


PLOT_TEMPLATE = '''"""Plot {csv_name}.  Reads only the CSV; run with python3."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_PATH = {csv_path!r}
X = {x_column!r}

curves = defaultdict(list)
with open(CSV_PATH, newline="") as fh:
    for row in csv.DictReader(fh):
        if row["ec"] == "nan":
            continue
        label = "{{scheme}}-{{user}} {{method}} theta={{theta}} a1={{alpha1}}".format(**row)
        curves[label].append((float(row[X]), float(row["ec"])))

fig, ax = plt.subplots(figsize=(7, 4.5))
for label, pts in sorted(curves.items()):
    pts.sort()
    style = "--" if "monte_carlo" in label else "-"
    ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=label)
ax.set_xlabel(X)
ax.set_ylabel("effective capacity (b/s/Hz)")
if X == "theta":
    ax.set_xscale("log")
ax.grid(True, alpha=0.3)
ax.legend(fontsize=6)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png_path!r}, dpi=150)
'''


def plot_script(csv_path: str, axis: str) -> str:
    x_column = {"rho_db": "rho_db", "theta": "theta", "alpha_pair": "alpha1", "blocklength": "blocklength",
                "epsilon": "epsilon"}[axis]
    stem = os.path.splitext(csv_path)[0]
    return PLOT_TEMPLATE.format(csv_name=os.path.basename(csv_path), csv_path=csv_path, x_column=x_column,
                                png_path=stem + ".png")


def cmd_sweep(cfg, explicit=(), out=None) -> int:
    out = out or sys.stdout
    spec = sweep_spec_from(cfg, set(explicit))
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    path = cfg["out"]
    if cfg["emit_plot"] and path == "-":
        path = f"{cfg['preset'] or 'sweep'}.csv"
    started = time.perf_counter()
    rows = sw.run_sweep(spec, workers=cfg["workers"])
    if cfg["verbose"]:
        print(f"{len(rows)} cells in {time.perf_counter() - started:.2f} s", file=sys.stderr)
    text = sw.rows_to_csv(rows)
    if path == "-":
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if cfg["emit_plot"]:
        script = os.path.splitext(path)[0] + "_plot.py"
        with open(script, "w", encoding="utf-8") as fh:
            fh.write(plot_script(path, spec.axis))
        print(f"wrote {path} and {script}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# validate

VALIDATE_RHO_DB = sw.RHO_DB_GRID
VALIDATE_THETA = (0.001, 0.01, 0.1)
VALIDATE_MC_RHO_DB = (0.0, 10.0, 20.0, 30.0, 40.0)
VALIDATE_MC_THETA = 0.01
PROFILES = {"default": 1e-6, "strict": 1e-8}
WEAK_TOL = 5e-3
MC_SIGMAS = 3.0


@dataclass(frozen=True)
class Check:
    name: str
    cell: str
    delta: float
    limit: float
    passed: bool
    informational: bool = False

    def line(self) -> str:
        mark = "PASS" if self.passed else ("info" if self.informational else "FAIL")
        return f"{mark} {self.name} [{self.cell}] delta={self.delta:.3g} limit={self.limit:.3g}"


def _rel(a, b):
    return abs(a - b) / abs(b)


def closed_form_checks(strong_tol: float, rho_grid=VALIDATE_RHO_DB, theta_grid=VALIDATE_THETA):
    """Closed forms against sqrt(V)=1 quadrature, worst cell per user."""
    policy = AccuracyPolicy()
    checks = []
    for user, tol in (("noma_strong", strong_tol), ("oma_strong", strong_tol),
                      ("noma_weak", WEAK_TOL), ("oma_weak", WEAK_TOL)):
        worst, worst_cell, worst_alt, alt_cell = -1.0, "", -1.0, ""
        role = role_of(user)
        for rho_db in rho_grid:
            link = LinkConfig.from_db(rho_db)
            for theta in theta_grid:
                ref = ec_role_quadrature(role, link, theta, approx_dispersion=True, policy=policy).value
                d = _rel(ec_role_closed(role, link, theta, policy=policy).value, ref)
                cell = f"rho_db={rho_db:g} theta={theta:g}"
                if not d <= worst:
                    worst, worst_cell = d, cell
                if user == "oma_weak":
                    dp = _rel(ec_role_closed(role, link, theta, policy=policy, weak_oma_rate=1.0).value, ref)
                    if not dp <= worst_alt:
                        worst_alt, alt_cell = dp, cell
        label = f"closed_form vs quadrature {user}"
        if user == "oma_weak":
            label += " (argument 2/rho)"
        checks.append(Check(label, worst_cell, worst, tol, worst <= tol))
        if user == "oma_weak":
            checks.append(Check(f"closed_form vs quadrature {user} (argument 1/rho)", alt_cell,
                                worst_alt, tol, worst_alt <= tol, informational=True))
    return checks


def monte_carlo_checks(samples: int, seed: int, rho_grid=VALIDATE_MC_RHO_DB, theta=VALIDATE_MC_THETA):
    """Exact-dispersion quadrature against the tilted Monte-Carlo estimator."""
    checks = []
    for u_index, user in enumerate(("noma_strong", "noma_weak", "oma_strong", "oma_weak")):
        role = role_of(user)
        for r_index, rho_db in enumerate(rho_grid):
            link = LinkConfig.from_db(rho_db)
            ref = ec_role_quadrature(role, link, theta).value
            mc = McConfig(samples, seed, (u_index, r_index), sampler="tilted")
            est = ec_role_monte_carlo(role, link, theta, mc)
            z = abs(est.value - ref) / est.std_error if est.std_error > 0 else math.inf
            checks.append(Check(f"quadrature vs monte_carlo {user}", f"rho_db={rho_db:g} theta={theta:g}",
                                z, MC_SIGMAS, z <= MC_SIGMAS))
    return checks


def cmd_validate(cfg, out=None) -> int:
    out = out or sys.stdout
    profile = cfg["tolerance_profile"]
    if profile not in PROFILES:
        raise ConfigError(f"unknown tolerance profile {profile!r}; choose from {sorted(PROFILES)}")
    started = time.perf_counter()
    checks = closed_form_checks(PROFILES[profile]) + monte_carlo_checks(cfg["samples"], cfg["seed"])
    if cfg["verbose"]:
        print(f"{len(checks)} checks in {time.perf_counter() - started:.2f} s", file=sys.stderr)
    failed = [c for c in checks if not c.passed and not c.informational]
    for c in checks:
        out.write(c.line() + "\n")
    out.write(f"{len(checks) - len(failed)}/{len(checks)} checks passed\n" if not failed else
              f"{len(failed)} check(s) failed: " + "; ".join(f"{c.name} [{c.cell}]" for c in failed) + "\n")
    return 0 if not failed else 1


# --------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        explicit = set()
        if args.config:
            explicit |= set(load_config(args.config))
        explicit |= {k for k in SETTINGS if getattr(args, k, None) is not None}
        if args.command == "ec":
            cfg["header"] = args.header
            return cmd_ec(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, explicit)
        return cmd_validate(cfg)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"fblec: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError) as exc:
        print(f"fblec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fblec: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
