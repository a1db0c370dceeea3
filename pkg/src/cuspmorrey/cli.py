"""Configuration-driven runner: ``cuspmorrey <subcommand> --config file.json``.

Subcommands ``geometry``, ``kernel``, ``extend``, ``norm`` run one
section of the config; ``run`` runs all of them in dependency order
(kernel, extensions, norms, geometry, checks); ``verify`` runs a single
check given inline JSON.  Exit status: 0 all passed, 1 a check failed,
2 schema or hypothesis violation, 3 numerical hard error.

Outputs are deterministic for a fixed config and seed: reports are JSON
with sorted keys and every report records the config and kernel hashes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import verify as V
from .verify import _jsonable
from .extension import ExtensionConfig, ShiftedSupportError, extend_atlas, extend_elementary, operator_norm_estimate
from .fields import function_catalog, make_test_function, write_field
from .geometry import (
    Atlas,
    ElementaryDomain,
    GammaMetric,
    atlas_validate,
    box_domain,
    catalog_domains,
    cusp_domain,
    fit_measure_exponent,
    triangle_atlas,
    write_measure_csv,
)
from .mollifier import build_kernel_1d, kernel_moment, oracle_moment
from .norms import WeightSpec, campanato_seminorm, morrey_norm, sobolev_morrey_norm

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "run_config", "emit_report", "main"]

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3
CONFIG_DIR = Path(__file__).parent / "configs"
OUT_ENV = "CUSPMORREY_OUT"


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_FUN = {"oneOf": [{"type": "string"}, {"type": "object", "required": ["kind"]}]}
_FAMILY = {"oneOf": [{"const": "catalog"}, {"type": "array", "items": _FUN, "minItems": 1}]}
_DOMAIN = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["cusp", "box", "catalog", "elementary", "atlas", "triangle_atlas"]},
        "window": {"type": "array", "items": _VEC, "minItems": 2, "maxItems": 2},
    },
}
_ITEM = {
    "type": "object",
    "properties": {
        "domain": _DOMAIN,
        "function": _FUN,
        "family": _FAMILY,
        "params": {"type": "object"},
        "refine": {"type": "object"},
        "extension": {"type": "object"},
        "name": {"type": "string"},
    },
}
CHECK_IDS = [
    "measure_exponent",
    "campanato_embedding",
    "morrey_campanato_equivalence",
    "sobolev_morrey_segment",
    "sobolev_morrey_barozzi",
    "daprato_convex",
    "daprato_variant",
    "poincare",
    "geometric_lemma",
    "extension_corollary",
    "extension_boundedness",
]
SCHEMA = {
    "type": "object",
    "required": ["domain"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "domain": _DOMAIN,
        "functions": {"type": "object", "additionalProperties": _FUN},
        "seed": {"type": "integer", "minimum": 0},
        "resolution": {"type": "integer", "minimum": 8},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "kernel": {
            "type": "object",
            "properties": {"l": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 5}}},
        },
        "extend": {"type": "array", "items": {**_ITEM, "required": ["function", "extension"]}},
        "norms": {
            "type": "array",
            "items": {**_ITEM, "required": ["function", "params"]},
        },
        "geometry": {"type": "array", "items": _ITEM},
        "checks": {
            "type": "array",
            "items": {**_ITEM, "required": ["id"], "properties": {**_ITEM["properties"], "id": {"enum": CHECK_IDS}}},
        },
    },
}


@dataclass
class ExperimentConfig:
    """A validated experiment.

    ``raw`` is the canonical JSON content (after command-line overrides)
    and ``hash`` its SHA-256; ``base`` resolves relative file references.
    """

    raw: dict
    base: Path
    seed: int = 0
    resolution: int | None = None
    threads: int = 1
    out: Path = Path("cuspmorrey-out")
    hash: str = ""
    functions: dict = field(default_factory=dict)

    @property
    def kernel_ls(self):
        return list(self.raw.get("kernel", {}).get("l", [2]))


def _canonical(d):
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _resolve_config_path(path):
    p = Path(path)
    if p.exists():
        return p
    bundled = CONFIG_DIR / p.name
    if bundled.exists():
        return bundled
    raise ConfigError(f"config file {path} not found")


def load_config(source, seed=None, resolution=None, threads=None, out=None):
    """Read, validate and normalise a config (path or dict)."""
    if isinstance(source, dict):
        raw, base = json.loads(json.dumps(source)), Path.cwd()
    else:
        path = _resolve_config_path(source)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        base = path.parent
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    for key, val in (("seed", seed), ("resolution", resolution), ("threads", threads)):
        if val is not None:
            raw[key] = int(val)
    cfg = ExperimentConfig(raw, base, int(raw.get("seed", 0)), raw.get("resolution"), int(raw.get("threads", 1)))
    # precedence: --out, then the CUSPMORREY_OUT environment variable, then the config
    out = out if out is not None else os.environ.get(OUT_ENV)
    cfg.out = Path(out) if out is not None else Path(raw.get("out", "cuspmorrey-out"))
    if out is None and "out" in raw and not cfg.out.is_absolute():
        cfg.out = base / cfg.out
    hashed = {k: v for k, v in raw.items() if k not in ("threads", "out")}
    cfg.hash = hashlib.sha256(_canonical(hashed).encode()).hexdigest()[:16]
    cfg.functions = {k: _function(v, {}) for k, v in raw.get("functions", {}).items()}
    # referenced files and building blocks are checked before dispatch
    _domain(raw["domain"], base)
    for section in ("extend", "norms", "geometry", "checks"):
        for item in raw.get(section, []):
            if "domain" in item:
                _domain(item["domain"], base)
            if "function" in item:
                _function(item["function"], cfg.functions)
            if "family" in item:
                _family(item["family"], cfg.functions)
            if "extension" in item:
                _extension(item["extension"])
    return cfg


# ---------------------------------------------------------------------------
# building blocks


def _domain(spec, base):
    kind = spec["kind"]
    try:
        if kind == "cusp":
            return cusp_domain(float(spec.get("gamma", 0.5)), float(spec.get("opening", 1.0)), int(spec.get("n", 2)),
                               int(spec.get("sign", -1)), spec.get("W"), float(spec.get("a", -math.inf)),
                               float(spec.get("level", 0.0)))
        if kind == "box":
            return box_domain(spec["lo"], spec["hi"], float(spec.get("gamma", 1.0)))
        if kind == "catalog":
            return catalog_domains(int(spec.get("n", 2)))[spec["name"]][0]
        if kind == "elementary":
            return ElementaryDomain.from_dict(spec)
        if kind == "triangle_atlas":
            return triangle_atlas()[0]
        if kind == "atlas":
            path = Path(spec["path"])
            path = path if path.is_absolute() else base / path
            if not path.exists():
                raise ConfigError(f"atlas file {path} not found")
            return Atlas.from_dict(json.loads(path.read_text()))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad domain spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown domain kind {kind!r}")


def _window(spec):
    w = spec.get("window")
    return None if w is None else (np.asarray(w[0], float), np.asarray(w[1], float))


def _function(spec, named):
    if isinstance(spec, str):
        if spec in named:
            return named[spec]
        cat = {f.name: f for f in function_catalog()}
        if spec in cat:
            return cat[spec]
        raise ConfigError(f"unknown function {spec!r}")
    try:
        return make_test_function(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _family(spec, named):
    if spec == "catalog":
        return function_catalog()
    return [_function(s, named) for s in spec]


def _extension(spec):
    try:
        return ExtensionConfig.from_dict(spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad extension config: {exc}") from None


def _weight(params):
    if "weight" in params:
        return WeightSpec.from_dict(params["weight"])
    return WeightSpec.power(float(params.get("lam", 0.0)))


# ---------------------------------------------------------------------------
# stage runners; each returns a list of CheckReport


@dataclass
class _Context:
    cfg: ExperimentConfig
    index: int
    item: dict

    @property
    def params(self):
        return dict(self.item.get("params", {}))

    @property
    def seed(self):
        return int(np.random.SeedSequence([self.cfg.seed, self.index]).generate_state(1)[0])

    def domain(self):
        return _domain(self.item.get("domain", self.cfg.raw["domain"]), self.cfg.base)

    def window(self):
        spec = self.item.get("domain", self.cfg.raw["domain"])
        return _window(self.item) or _window(spec)

    def function(self):
        return _function(self.item["function"], self.cfg.functions)

    def family(self):
        return _family(self.item.get("family", "catalog"), self.cfg.functions)

    def resolution(self, default):
        return int(self.params.get("resolution", self.cfg.resolution or default))

    def refine(self):
        d = {"resolution": self.cfg.resolution or 48, **self.item.get("refine", {}), "seed": self.seed}
        return V.Refinement.from_dict(d)


def _vertex(dom, params):
    if "vertex" in params:
        return np.asarray(params["vertex"], float)
    c = np.asarray(getattr(dom.phi, "center", (0.0,) * (dom.n - 1)), float)
    return np.append(c, float(dom.phi(c[None])[0]))


def run_measure_exponent(ctx):
    dom, p = ctx.domain(), ctx.params
    x = _vertex(dom, p)
    radii = np.geomspace(float(p.get("r_min", 1e-2)), float(p.get("r_max", 1.0)), int(p.get("count", 12)))
    fit = fit_measure_exponent(dom, x, radii, resolution=ctx.resolution(256))
    # the Euclidean-type fit (γ = 1 boxes) is informational only
    try:
        euc = fit_measure_exponent(dom, x, radii, GammaMetric(1.0, dom.n), resolution=ctx.resolution(256)).slope
    except ValueError:  # thin spikes can fall below the cell size
        euc = None
    ng = V.n_gamma(dom.n, dom.gamma)
    tol = float(p.get("tolerance", 0.1))
    rep = V.CheckReport("measure_exponent", {"gamma": dom.gamma, "n": dom.n, "vertex": x.tolist()}, ng,
                        fit.slope, abs(fit.slope - ng) <= tol, tol,
                        witnesses={"intercept": fit.intercept, "euclidean_slope": euc},
                        plot=fit.rows(), plot_columns=("r", "measure", "err"))
    rep.geometry_rows = (fit.rows(), x)
    return [rep]


def run_kernel(ctx):
    out = []
    for l in ctx.item["l"]:
        k = build_kernel_1d(int(l))
        mass = abs(oracle_moment(k, 0) - 1)
        moments = [abs(oracle_moment(k, j)) for j in range(1, int(l) + 1)]
        worst = max(moments, default=0.0)
        rows = [(j, float(kernel_moment(k, j)), float(oracle_moment(k, j))) for j in range(0, int(l) + 2)]
        out.append(V.CheckReport("kernel_moments", {"l": int(l), "kernel": k.to_dict(), "kernel_hash": k.digest()},
                                 0.0, worst, mass <= 1e-10 and worst <= 1e-8, 1e-8,
                                 witnesses={"mass_error": mass, "max_moment": worst},
                                 plot=rows, plot_columns=("j", "moment", "oracle_moment")))
    return out


def run_extend(ctx):
    dom, f = ctx.domain(), ctx.function()
    ecfg = _extension(ctx.item["extension"])
    if isinstance(dom, Atlas):
        report = atlas_validate(dom, seed=ctx.seed)
        res = extend_atlas(dom, f, ecfg, report)
    else:
        res = extend_elementary(dom, f, ecfg)
    om = res.omega & res.field.mask
    exact = bool(np.array_equal(res.field.values[om], np.asarray(f(res.field.points()[om]), float)))
    rep = V.CheckReport("extension", {"function": f.name, "extension": ecfg.to_dict()}, 0.0,
                        float(res.tail.sum()), exact, 0.0,
                        witnesses={"restriction_exact": exact, "provenance": res.provenance},
                        flags=list(res.flags), plot=[], plot_columns=())
    rep.field = res.field
    return [rep]


def run_norm(ctx):
    dom, f, p = ctx.domain(), ctx.function(), ctx.params
    contains, lo, hi = V._region(dom, ctx.window())
    gamma = float(p.get("gamma", dom.gamma))
    m = GammaMetric(gamma, dom.n)
    fg = V._grid(f, contains, lo, hi, ctx.resolution(64))
    kind = p.get("kind", "morrey")
    w = _weight(p)
    if kind == "morrey":
        est = morrey_norm(fg, float(p["p"]), w, m)
    elif kind == "campanato":
        est = campanato_seminorm(fg, float(p["p"]), w, m)
    elif kind == "sobolev_morrey":
        est = sobolev_morrey_norm(fg, int(p["l"]), float(p["p"]), w, m)
    else:
        raise ConfigError(f"unknown norm kind {kind!r}")
    return [V.CheckReport(f"norm_{kind}", {"function": f.name, "gamma": gamma, **p}, math.nan, est.value, True, 0.0,
                          witnesses=est.to_dict(), plot=list(zip(est.radii.tolist(), est.profile.tolist())),
                          plot_columns=("r", "sup_over_centers"))]


def _check(ctx):
    cid = ctx.item["id"]
    p = ctx.params
    if cid == "measure_exponent":
        return run_measure_exponent(ctx)
    dom = ctx.domain()
    win = ctx.window()
    if cid == "campanato_embedding":
        return [V.check_campanato_embedding(dom, ctx.function(), float(p["p"]), float(p["lam"]), p.get("gamma"),
                                            win, ctx.refine())]
    if cid == "morrey_campanato_equivalence":
        return [V.check_morrey_campanato_equivalence(dom, ctx.family(), float(p["p"]), float(p["lam"]),
                                                     p.get("gamma"), win, float(p.get("C0", V.EQUIVALENCE_C0)),
                                                     ctx.resolution(48))]
    if cid in ("sobolev_morrey_segment", "sobolev_morrey_barozzi"):
        mode = cid.rsplit("_", 1)[1]
        return [V.check_sobolev_morrey_embedding(dom, ctx.function(), int(p["l"]), float(p["p"]), float(p["lam"]),
                                                 p.get("gamma"), mode, float(p.get("eps", V.BAROZZI_EPS)), win,
                                                 ctx.refine())]
    if cid == "poincare":
        rep = V.poincare_ratio(dom, ctx.family(), float(p["p"]), tau=float(p.get("tau", 1.0)), gamma=p.get("gamma"),
                               window=win, resolution=ctx.resolution(128), samples=int(p.get("samples", 1000)),
                               seed=ctx.seed)
        return [rep.as_check({"p": p["p"], "tau": p.get("tau", 1.0), "gamma": dom.gamma})]
    if cid == "daprato_convex":
        return [V.check_daprato(dom, ctx.function(), float(p["p"]), float(p["lam"]), p.get("gamma"), None,
                                float(p.get("tau", 1.0)), win, ctx.refine())]
    if cid == "daprato_variant":
        eta = p.get("eta_tilde", "measured")
        if eta == "measured":
            eta = V.poincare_ratio(dom, ctx.family(), float(p["p"]), tau=float(p.get("tau", 1.0)), window=win,
                                   resolution=ctx.resolution(64), seed=ctx.seed).eta_fit
        return [V.check_daprato(dom, ctx.function(), float(p["p"]), float(p["lam"]), p.get("gamma"), float(eta),
                                float(p.get("tau", 1.0)), win, ctx.refine())]
    if cid == "geometric_lemma":
        rng = np.random.default_rng(ctx.seed)
        E = float(p.get("E", 1.0))
        x, r, eta = V.sample_lemma_configs(dom, int(p.get("configs", 1000)), rng,
                                           tuple(p.get("xbar_range", (-1.0, 1.0))),
                                           tuple(p.get("height", (-1.0, 1.5))),
                                           tuple(p.get("radii", (1e-3, 0.5))), E)
        return [V.check_geometric_lemma(dom, x, r, eta, E)]
    if cid == "extension_corollary":
        ecfg = _extension(ctx.item["extension"])
        report = atlas_validate(dom, seed=ctx.seed) if isinstance(dom, Atlas) else None
        return [V.check_extension_corollary(dom, ctx.function(), int(p["l"]), float(p["p"]), float(p["lam"]), ecfg,
                                            win, ctx.refine(), atlas_report=report)]
    if cid == "extension_boundedness":
        ecfg = _extension(ctx.item["extension"])
        omega_box = ctx.params.get("omega_box")
        res = operator_norm_estimate(dom, ctx.family(), int(p["l"]), float(p["p"]), _weight(p), ecfg,
                                     (omega_box[0], omega_box[1]), tuple(p.get("resolutions", (128, 192, 256))))
        tol = float(p.get("max_variation", 0.2))
        return [V.CheckReport("extension_boundedness", {"l": p["l"], "p": p["p"], "lam": p.get("lam")}, math.nan,
                              res.max_ratio, res.max_variation < tol, tol, witnesses=res.to_dict(),
                              plot=[(nm, N, r) for nm in res.names for N, r in zip(res.resolutions, res.ratios[nm])],
                              plot_columns=("function", "resolution", "ratio"))]
    raise ConfigError(f"unknown check id {cid!r}")


# ---------------------------------------------------------------------------
# reports


def _kernel_hash(ls):
    ls = ls or [2]  # checks without a kernel section record the default kernel
    return hashlib.sha256("".join(build_kernel_1d(int(l)).digest() for l in sorted(set(ls))).encode()).hexdigest()[:16]


def _csv_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_report(results, out_dir, provenance=None):
    """Write per-check JSON, plot CSVs and ``summary.csv``; returns the paths.

    Plot CSVs carry the report's plot columns, plus natural-log columns
    for positive numeric ones.
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = []
    for i, rep in enumerate(results):
        stem = f"{i:02d}_{rep.check_id}"
        d = rep.to_dict()
        if provenance:
            d["provenance"] = provenance
        p = out / f"{stem}.json"
        p.write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")
        written.append(p)
        if rep.plot and rep.plot_columns:
            p = out / f"{stem}.csv"
            cols = list(rep.plot_columns)
            numeric = [j for j in range(len(cols)) if all(isinstance(row[j], (int, float, np.floating))
                                                         and row[j] > 0 for row in rep.plot)]
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols + [f"log_{cols[j]}" for j in numeric])
                for row in rep.plot:
                    w.writerow([_csv_value(v) for v in row] + [repr(math.log(float(row[j]))) for j in numeric])
            written.append(p)
        if getattr(rep, "field", None) is not None:
            written.extend(write_field(out / f"{stem}_field", rep.field, extra=provenance))
            p = out / f"{stem}_provenance.json"
            p.write_text(json.dumps(_jsonable(rep.witnesses["provenance"]), indent=2, sort_keys=True) + "\n")
            written.append(p)
        if getattr(rep, "geometry_rows", None) is not None:
            p = out / f"{stem}_geometry.csv"
            write_measure_csv(p, *rep.geometry_rows)
            written.append(p)
        summary.append((stem, rep.check_id, d["params"].get("function", ""), rep.passed, rep.predicted, rep.measured))
    p = out / "summary.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["report", "check_id", "function", "passed", "predicted", "measured"])
        for row in summary:
            w.writerow([_csv_value(v) for v in row])
    written.append(p)
    return written


def _sections(cfg, only):
    raw = cfg.raw
    plan = []
    if only in (None, "kernel"):
        plan.append((run_kernel, {"l": cfg.kernel_ls}))
    if only in (None, "extend"):
        plan += [(run_extend, it) for it in raw.get("extend", [])]
    if only in (None, "norm"):
        plan += [(run_norm, it) for it in raw.get("norms", [])]
    if only in (None, "geometry"):
        plan += [(run_measure_exponent, it) for it in raw.get("geometry", [{}])]
    if only is None:
        plan += [(lambda ctx: _check(ctx), it) for it in raw.get("checks", [])]
    return plan


def run_config(cfg, only=None):
    """Run a loaded config (or one section); returns (exit status, reports, paths)."""
    plan = _sections(cfg, only)
    ctxs = [_Context(cfg, i, item) for i, (_, item) in enumerate(plan)]

    def job(k):
        return plan[k][0](ctxs[k])

    with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
        chunks = list(pool.map(job, range(len(plan))))  # ordered by plan index
    results = [r for chunk in chunks for r in chunk]
    ls = cfg.kernel_ls + [int(it.get("extension", {}).get("l", 2)) for it in cfg.raw.get("checks", [])
                          if "extension" in it]
    prov = {"config_hash": cfg.hash, "kernel_hash": _kernel_hash(ls), "seed": cfg.seed}
    paths = emit_report(results, cfg.out, prov)
    status = EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    return status, results, paths


# ---------------------------------------------------------------------------
# command line


def _json_arg(text):
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def build_parser():
    ap = argparse.ArgumentParser(prog="cuspmorrey", description="Sobolev-Morrey checks on Hölder domains")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("geometry", "kernel", "extend", "norm", "run", "verify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "verify")
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--resolution", type=int)
        if name == "verify":
            sp.add_argument("--check", required=True, choices=CHECK_IDS)
            sp.add_argument("--domain", required=True, help="domain spec as JSON text or a JSON file")
            sp.add_argument("--params", default="{}", help="check item (params, function, ...) as JSON")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            item = dict(_json_arg(args.params))
            item.setdefault("params", {k: v for k, v in item.items() if k not in _ITEM["properties"]})
            item = {k: v for k, v in item.items() if k in _ITEM["properties"]}
            item["id"] = args.check
            raw = {"domain": _json_arg(args.domain), "checks": [item], "kernel": {"l": []}, "geometry": []}
            cfg = load_config(raw, args.seed, args.resolution, args.threads, args.out)
            only = None
        else:
            cfg = load_config(args.config, args.seed, args.resolution, args.threads, args.out)
            only = None if args.command == "run" else args.command
        status, results, _ = run_config(cfg, only)
    except (ConfigError, V.HypothesisError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ShiftedSupportError, ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check_id} {r.params.get('function', '')}".rstrip())
    return status


if __name__ == "__main__":
    sys.exit(main())
