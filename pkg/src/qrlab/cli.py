"""Config-driven runner: ``qrlab run <config.json> [--threads N]`` and ``qrlab list``.

Exit status: 0 all thresholds pass, 1 a threshold fails (the report is still
written), 2 the config is invalid, 3 a numerical guard fired.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import verify as V
from .distance import DistanceError, builtin_distance
from .grid import FAMILIES, GridError, GridFunction, GuardError, annuli, make_bank, make_grid, radius, set_threads
from .operator import PLATEAU, Symbol1D, TGrid, kernel_decay_probe
from .profile import (
    ProfileError,
    besov_norm,
    block_l2_norms,
    bump,
    bump_profile,
    profile_from_function,
    riesz_profile,
    sequence_profile,
    vj_decompose,
)
from .reports import ConvergenceReport, RatioReport, _jsonable, make_report
from .spaces import NormError, NormSpec

EXIT_OK, EXIT_THRESHOLD, EXIT_SCHEMA, EXIT_GUARD = 0, 1, 2, 3

TOP_KEYS = {"experiment", "grid", "rho", "profile", "norm", "bank", "tgrid", "output", "thresholds", "params"}
GRID_KEYS = {"dim", "n", "half_width"}
RHO_KEYS = {"kind", "params"}
PROFILE_KEYS = {"kind", "params", "resolution"}
NORM_KEYS = {"kind", "params", "l_range"}
BANK_KEYS = {"seed", "count", "width", "families", "dilations"}
TGRID_KEYS = {"k_min", "k_max", "M"}
THRESHOLD_KEYS = {"max_ratio", "min_ratio", "symmetry_drift", "final_error", "extras"}

# verify ops in listing order, with the statement each one tests
EXPERIMENTS = {
    "check_embedding": "annulus-sum Herz side against the Lorentz norm",
    "check_trace": "weighted restriction to the unit rho-sphere",
    "check_basic_maximal": "maximal function over 1 <= t <= 2 in L2(|x|^-b)",
    "check_atau": "tau-integrated A_tau bound in L2(|x|^-b)",
    "check_lp_square": "Littlewood-Paley square function in Herz spaces",
    "check_weight_convolution": "weighted convolution on the line in L^{u,s}(mu_d)",
    "check_lambda_besov": "Lambda_b^j sums against the Besov norm",
    "check_sobolev_maximal": "single-scale maximal bound for T^{j,k}",
    "check_flu_equivalence": "Lorentz norm of the kernel against its 1D weighted form",
    "check_herz_maximal": "maximal quasiradial multipliers on Herz spaces",
    "check_multiplier_equivalence": "weighted L2 multipliers against sup_t ||phi m(t.)||_{L2_alpha}",
    "check_square_function": "Stein square function in L2(|x|^{-2 alpha})",
    "convergence_experiment": "pointwise convergence of generalized Riesz means",
    "check_kappa_asymptotics": "decay envelope of the generalized Riesz kernel",
}
UTILITIES = {
    "norms": "Lorentz, Herz or weighted L2 norms of the bank entries",
    "kernel": "kernel decay fit for one V_j block of a profile",
    "profile": "Besov block norms of a profile",
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- schema


def _keys(section: dict, allowed: set, where: str, required=()) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {missing}")


def validate(cfg: dict) -> None:
    """Structural checks done before any computation."""
    _keys(cfg, TOP_KEYS, "config", ("experiment", "output"))
    exp = cfg["experiment"]
    if exp not in EXPERIMENTS and exp not in UTILITIES:
        raise ConfigError(f"unknown experiment {exp!r}")
    if not isinstance(cfg["output"], str) or not cfg["output"]:
        raise ConfigError("output must be a non-empty path prefix")
    if "grid" in cfg:
        _keys(cfg["grid"], GRID_KEYS, "grid", ("dim", "n", "half_width"))
    if "rho" in cfg:
        _keys(cfg["rho"], RHO_KEYS, "rho", ("kind",))
    profiles = cfg.get("profile")
    for p in profiles if isinstance(profiles, list) else ([profiles] if profiles is not None else []):
        _keys(p, PROFILE_KEYS, "profile", ("kind",))
    if "norm" in cfg:
        _keys(cfg["norm"], NORM_KEYS, "norm", ("kind", "params"))
    if "bank" in cfg:
        _keys(cfg["bank"], BANK_KEYS, "bank", ("seed", "count"))
        fams = cfg["bank"].get("families")
        if fams is not None and (not fams or set(fams) - set(FAMILIES)):
            raise ConfigError(f"bank families must be a non-empty subset of {FAMILIES}")
    if "tgrid" in cfg:
        _keys(cfg["tgrid"], TGRID_KEYS, "tgrid", ("k_min", "k_max"))
    if "thresholds" in cfg:
        _keys(cfg["thresholds"], THRESHOLD_KEYS, "thresholds")
    if "params" in cfg and not isinstance(cfg["params"], dict):
        raise ConfigError("params must be an object")
    needs = {"grid", "rho", "bank"}
    if exp in ("check_weight_convolution", "check_kappa_asymptotics", "check_lambda_besov", "profile", "kernel"):
        needs = {"rho"} if exp == "kernel" else set()
    elif exp == "check_flu_equivalence":
        needs = {"grid", "rho", "profile"}
    elif exp == "convergence_experiment":
        needs = {"grid", "rho"}
    elif exp == "norms":
        needs = {"grid", "bank", "norm"}
    if exp in ("check_herz_maximal", "check_basic_maximal", "check_sobolev_maximal", "kernel", "profile", "check_lambda_besov"):
        needs = needs | {"profile"}
    missing = sorted(k for k in needs if k not in cfg)
    if missing:
        raise ConfigError(f"experiment {exp} needs section(s) {missing}")


# ---------------------------------------------------------------- builders


def _grid(cfg):
    g = cfg["grid"]
    return make_grid(int(g["dim"]), int(g["n"]), float(g["half_width"]))


def _rho(cfg):
    r = cfg["rho"]
    return builtin_distance(r["kind"], r.get("params"))


def _profile(p: dict):
    kind, params = p["kind"], dict(p.get("params", {}))
    res = int(p.get("resolution", 1 << 16))
    if kind == "bump":
        return bump_profile(float(params["center"]), float(params["width"]), res)
    if kind == "riesz":
        return riesz_profile(float(params["lam"]), float(params.get("gam", 0.0)), res, bool(params.get("cutoff", False)))
    if kind == "sequence":
        return sequence_profile(params["coeffs"], float(params["lam"]), res)
    if kind == "modulated_bump":
        c, w, R = float(params.get("center", 1.0)), float(params["width"]), float(params.get("frequency", 0.0))
        func = lambda s: bump((np.asarray(s, dtype=float) - c) / w) * np.cos(R * np.asarray(s, dtype=float))  # noqa: E731
        return profile_from_function(func, (c - w, c + w), res, {"kind": kind, **params}, params.get("half_extent"))
    raise ConfigError(f"unknown profile kind {kind!r}")


def _profiles(cfg) -> list:
    p = cfg["profile"]
    return [_profile(x) for x in (p if isinstance(p, list) else [p])]


def _bank(cfg, spec, dilation=1.0):
    b = cfg["bank"]
    fams = tuple(b.get("families", FAMILIES))
    return make_bank(spec, int(b["seed"]), int(b["count"]), width=b.get("width"), dilation=dilation, families=fams)


def _dilated(cfg, spec) -> dict:
    return {int(m): _bank(cfg, spec, 2.0 ** int(m)) for m in cfg["bank"].get("dilations", [])}


def _tgrid(cfg):
    t = cfg.get("tgrid")
    return TGrid(int(t["k_min"]), int(t["k_max"]), int(t.get("M", 16))) if t else None


def _param(P: dict, key: str, default=None, required: bool = False):
    if key in P:
        return P[key]
    if required:
        raise ConfigError(f"params.{key} is required")
    return default


def _q(v) -> float:
    return np.inf if v in ("inf", "Infinity", None) else float(v)


class TableResult:
    """Generic result for the utility experiments: a table plus scalar fields."""

    def __init__(self, name: str, header: list, rows: list, fields: dict):
        self.name, self.header, self.rows, self.fields = name, header, rows, fields

    def to_dict(self) -> dict:
        return {"name": self.name, **_jsonable(self.fields), "rows": _jsonable(self.rows)}

    def csv_rows(self) -> list:
        return [[f"{v:.17g}" if isinstance(v, float) else str(v) for v in row] for row in self.rows]


# ---------------------------------------------------------------- experiments


def execute(cfg: dict):
    exp = cfg["experiment"]
    P = dict(cfg.get("params", {}))
    if exp == "check_weight_convolution":
        sigma = float(_param(P, "sigma", 1.0))
        g = V.line_bank(int(_param(P, "seed", 0)), int(_param(P, "count", 8)), float(_param(P, "scale", 8.0)))
        return V.check_weight_convolution(
            V.gaussian_kernel(sigma), g, float(_param(P, "a", required=True)), float(_param(P, "u", required=True)), _q(_param(P, "s", required=True)),
            int(_param(P, "d", 2)), float(_param(P, "half_width", 64.0)), int(_param(P, "n", 4096)),
        )
    if exp == "check_kappa_asymptotics":
        return V.check_kappa_asymptotics(float(_param(P, "lam", required=True)), float(_param(P, "gam", 0.0)), tuple(_param(P, "r_range", (64.0, 4096.0))),
                                         float(_param(P, "R", 2.0**18)), int(_param(P, "n_r", 1 << 20)))
    if exp == "check_lambda_besov":
        hs = _profiles(cfg)
        return V.check_lambda_besov(hs, float(_param(P, "alpha", required=True)), _q(_param(P, "s", 2.0)), float(_param(P, "b", required=True)), int(_param(P, "j_max", 10)))
    if exp == "profile":
        h = _profiles(cfg)[0]
        j_max = int(_param(P, "j_max", 10))
        norms = block_l2_norms(h, j_max)
        fields = {"besov_norm": besov_norm(h, float(_param(P, "alpha", 0.75)), _q(_param(P, "s", 2.0)), j_max), "params": h.params}
        return TableResult("profile", ["j", "block_l2_norm"], [[j, float(v)] for j, v in enumerate(norms)], fields)
    if exp == "kernel":
        h = _profiles(cfg)[0]
        j = int(_param(P, "j", required=True))
        dec = vj_decompose(h, j)
        spec = _grid(cfg) if "grid" in cfg else None
        fit = kernel_decay_probe(_rho(cfg), dec, j, float(_param(P, "s", 1.0)), int(_param(P, "c0", 2)), spec, float(_param(P, "octaves", 5.0)))
        rc, env = fit.radii, fit.envelope
        fields = {"j": fit.j, "slope": fit.slope, "outer_sup": fit.outer_sup, "inner_sup": fit.inner_sup}
        return TableResult("kernel", ["r", "envelope"], [[float(a), float(b)] for a, b in zip(rc, env)], fields)

    spec = _grid(cfg)
    rho = _rho(cfg) if "rho" in cfg else None
    if exp == "convergence_experiment":
        src = _param(P, "input", "bump")
        if src == "bump":
            f = GridFunction(spec, bump(radius(spec) / float(_param(P, "radius", 1.0))))
        elif isinstance(src, str) and src.startswith("bank:"):
            f = _bank(cfg, spec).entries[int(src.split(":", 1)[1])]
        else:
            raise ConfigError(f"unknown convergence input {src!r}")
        ts = _param(P, "t_values", required=True)
        return V.convergence_experiment(f, rho, float(_param(P, "lam", required=True)), float(_param(P, "gam", 0.0)), ts, float(_param(P, "probe", 2.0)), _param(P, "mode", "riesz"))
    if exp == "check_flu_equivalence":
        hs = _profiles(cfg)
        return V.check_flu_equivalence(hs, rho, float(_param(P, "u", 1.5)), _q(_param(P, "s", 1.5)), spec, R=float(_param(P, "R", 512.0)), n_r=int(_param(P, "n_r", 1 << 16)),
                                       names=[f"profile{i}" for i in range(len(hs))])

    bank = _bank(cfg, spec)
    dil = _dilated(cfg, spec)
    enforce = bool(_param(P, "enforce_range", True))
    if exp == "norms":
        n = cfg["norm"]
        ns = NormSpec(n["kind"], dict(n["params"]), tuple(n["l_range"]) if n.get("l_range") else None)
        vals = [ns.evaluate(f) for f in bank.entries]
        return make_report("norms", bank.labels, vals, np.ones(len(vals)), {"norm": n})
    if exp == "check_embedding":
        return V.check_embedding(bank, float(_param(P, "a", required=True)), _q(_param(P, "q", 2.0)), float(_param(P, "r", 2.0)), dilated_banks=dil or None)
    if exp == "check_herz_maximal":
        h = _profiles(cfg)[0]
        return V.check_herz_maximal(h, rho, bank, float(_param(P, "alpha", required=True)), _q(_param(P, "q", required=True)), _tgrid(cfg),
                                    dilated_banks=dil or None, enforce_range=enforce, refine=bool(_param(P, "refine", False)))
    if exp == "check_multiplier_equivalence":
        if "coeffs" in P:
            m = V.BlockMultiplier(tuple(float(c) for c in P["coeffs"]), int(_param(P, "k_min", required=True)))
        else:
            m = V.BlockMultiplier.random(int(_param(P, "seed", 0)), int(_param(P, "k_min", required=True)), int(_param(P, "blocks", 4)))
        return V.check_multiplier_equivalence(m, rho, float(_param(P, "alpha", required=True)), bank, dilated_banks=dil or None, enforce_range=enforce)
    if exp == "check_square_function":
        return V.check_square_function(bank, rho, float(_param(P, "alpha", required=True)), _tgrid(cfg), int(_param(P, "M", 16)), dilated_banks=dil or None, enforce_range=enforce)
    if exp == "check_trace":
        return V.check_trace(bank, rho, float(_param(P, "b", required=True)), int(_param(P, "n_nodes", 256)), dilated_banks=dil or None, enforce_range=enforce)
    if exp == "check_basic_maximal":
        h = _profiles(cfg)[0]
        return V.check_basic_maximal(h, rho, float(_param(P, "b", required=True)), bank, int(_param(P, "M", 16)), dilated_banks=dil or None, enforce_range=enforce)
    if exp == "check_atau":
        eta = _profiles(cfg)[0] if "profile" in cfg else PLATEAU
        return V.check_atau(bank, rho, float(_param(P, "b", required=True)), eta, float(_param(P, "tau_max", 64.0)), float(_param(P, "d_tau", 0.5)),
                            dilated_banks=dil or None, enforce_range=enforce)
    if exp == "check_lp_square":
        k_range = _param(P, "k_range", required=True)
        return V.check_lp_square(bank, rho, float(_param(P, "gamma", required=True)), _q(_param(P, "q", 2.0)), range(int(k_range[0]), int(k_range[1]) + 1), dilated_banks=dil or None)
    if exp == "check_sobolev_maximal":
        h = _profiles(cfg)[0]
        return V.check_sobolev_maximal(h, rho, bank, float(_param(P, "gamma", required=True)), tuple(_param(P, "js", (0, 2, 4))), int(_param(P, "M", 16)),
                                       k=int(_param(P, "k", 0)), dilated_banks=dil or None)
    raise ConfigError(f"unknown experiment {exp!r}")


# ---------------------------------------------------------------- thresholds and output


def evaluate_thresholds(result, thresholds: dict) -> list:
    """List of (name, value, bound, passed)."""
    out = []
    for key, bound in thresholds.items():
        if key == "extras":
            fields = getattr(result, "extras", None) or getattr(result, "fields", {})
            for name, (lo, hi) in bound.items():
                v = float(fields.get(name, np.nan))
                ok = np.isfinite(v) and (lo is None or v >= lo) and (hi is None or v <= hi)
                out.append((name, v, [lo, hi], bool(ok)))
            continue
        if key == "final_error":
            if not isinstance(result, ConvergenceReport):
                raise ConfigError("final_error applies to convergence_experiment only")
            v = float(result.sup_errors[-1])
        elif key in ("max_ratio", "min_ratio", "symmetry_drift"):
            if not isinstance(result, RatioReport):
                raise ConfigError(f"{key} applies to ratio reports only")
            v = float(getattr(result, key))
        else:
            raise ConfigError(f"unknown threshold {key!r}")
        ok = np.isfinite(v) and (v >= bound if key == "min_ratio" else v <= bound)
        out.append((key, v, bound, bool(ok)))
    return out


def _csv_text(result) -> str:
    if isinstance(result, RatioReport):
        header = ["entry_id", "lhs", "rhs", "ratio"]
    elif isinstance(result, ConvergenceReport):
        header = ["t", "sup_error"]
    else:
        header = result.header
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(result.csv_rows())
    return buf.getvalue()


def write_outputs(prefix: str, cfg: dict, result, checks: list) -> tuple[Path, Path]:
    base = Path(prefix)
    if base.parent and not base.parent.exists():
        base.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "version": __version__,
        "config": cfg,
        "result": result.to_dict(),
        "thresholds": [{"name": n, "value": v, "bound": b, "passed": p} for n, v, b, p in checks],
        "passed": all(p for *_, p in checks),
    }
    jpath, cpath = base.with_name(base.name + ".json"), base.with_name(base.name + ".csv")
    jpath.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    cpath.write_text(_csv_text(result), encoding="utf-8")
    return jpath, cpath


def _summary_value(result) -> str:
    if isinstance(result, RatioReport):
        return f"max_ratio={result.max_ratio:.6g}"
    if isinstance(result, ConvergenceReport):
        return f"final_error={result.sup_errors[-1]:.6g}"
    return ", ".join(f"{k}={v:.6g}" for k, v in result.fields.items() if isinstance(v, (int, float)))


def run(config_path: str, threads: int | None = None) -> int:
    try:
        with open(config_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        validate(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if threads is not None:
        set_threads(threads)
    try:
        result = execute(cfg)
        checks = evaluate_thresholds(result, cfg.get("thresholds", {}))
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, GridError, DistanceError, ProfileError, NormError, V.RangeError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    prefix = os.environ.get("QRLAB_OUT") or cfg["output"]
    write_outputs(prefix, cfg, result, checks)
    passed = all(p for *_, p in checks)
    print(f"{cfg['experiment']}: {_summary_value(result)} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_THRESHOLD


def list_experiments() -> str:
    width = max(map(len, EXPERIMENTS))
    lines = [f"{name:<{width}}  {desc}" for name, desc in EXPERIMENTS.items()]
    lines.append("utilities: " + ", ".join(UTILITIES))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qrlab", description="Ratio tests for quasiradial multiplier inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None)
    sub.add_parser("list", help="list experiments")
    args = parser.parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return EXIT_OK
    return run(args.config, args.threads)


if __name__ == "__main__":
    sys.exit(main())
