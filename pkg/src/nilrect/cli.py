"""Command-line entry point: ``nilrect [global flags] <command> [options]``.

Every command reads an optional JSON config, merges command-line overrides,
validates the result against ``CONFIG_SCHEMA`` and writes a deterministic
``<command>.json`` report (plus CSV/SVG where tabular or plottable) into the
output directory.  Wall-clock data goes to ``<command>.meta.json`` so that
reports are byte-identical across reruns.

Exit codes: 0 success (failed property checks are data), 1 config error,
2 math-layer error, 3 failed checks under ``--strict``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import pickle
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .carnot import CarnotGroup, ControlSignal
from .ccmetric import bounded_across_scales, closed_loop_defect, transfer_defect, TangentModel
from .errors import ConfigError, NilrectError
from .flag import equiregular_check
from .gliso import (GradedLieAlgebra, abelian, e147_family, heisenberg, invariant_prescreen,
                    stratified_iso_search)
from .library import BUNDLED, bundled
from .nilpot import Nilpotentizer, nilpotentization
from .patchwork import build_patchwork, check_patchwork, lattice_box, sample_group_cloud
from .rectify import (build_cantor, build_embedding, cantor_measure_report, check_biholder,
                      coverage_experiment, decay_check, distortion_stability, strictly_increasing,
                      tree_maps)
from .symvec import Frame

log = logging.getLogger("nilrect")

COMMANDS = ("flag", "nilp", "iso", "group", "defect", "patchwork", "cantor", "embed", "cover",
            "report")

_num = {"type": ["number", "string"]}
_point = {"type": "array", "items": _num}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "frame": {"type": "string"},
        "point": _point,
        "points": {"oneOf": [{"const": "grid"}, {"type": "array", "items": _point}]},
        "group": {"type": "string"},
        "region": {
            "type": "object", "additionalProperties": False,
            "properties": {"box": {"type": "array", "items": {"type": "array", "items": _num,
                                                                "minItems": 2, "maxItems": 2}},
                           "samples": {"type": "integer", "minimum": 1}},
        },
        "family": {
            "type": "object", "additionalProperties": False,
            "properties": {"name": {"enum": ["e147"]}, "xi": _num, "eta": _num},
        },
        "left": {"type": "string"},
        "right": {"type": "string"},
        "resolution": {
            "type": "object", "additionalProperties": False,
            "properties": {"eps": _num, "extent": {"type": "number", "exclusiveMinimum": 0}},
        },
        "depth": {"type": "integer", "minimum": 2},
        "base_scale": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "net_order": {"enum": ["random", "lex", "farthest"]},
        "root": {"type": ["integer", "null"], "minimum": 0},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "tau_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "s": {"type": ["integer", "null"], "minimum": 1},
        "r": {"type": "number", "exclusiveMinimum": 0},
        "compare_depths": {"type": "array", "items": {"type": "integer"}, "maxItems": 2},
        "scales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "transfer_pairs": {"type": "integer", "minimum": 0},
        "pairs": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "iterations": {"type": "integer", "minimum": 1},
        "restarts": {"type": "integer", "minimum": 1},
        "max_depth": {"type": "integer", "minimum": 1},
        "budget": {
            "type": "object", "additionalProperties": False,
            "properties": {"segments": {"type": "integer", "minimum": 2},
                           "restarts": {"type": "integer", "minimum": 1}},
        },
        "seed": {"type": "integer"},
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {name: {"type": "number", "minimum": 0} for name in
                           ("iso", "bounded_factor", "decay_factor", "stability",
                            "factor2_slack", "coverage")},
        },
        "expect": {"type": "object"},
        "output": {"type": "string"},
    },
}

DEFAULTS = {
    "frame": "example5",
    "point": ["1/2", 0, 0, 0, 0],
    "points": "grid",
    "group": "tangent",
    "region": {"samples": 3},
    "resolution": {"eps": "1/3", "extent": 1.0},
    "depth": 5,
    "base_scale": None,
    "net_order": "random",
    "root": None,
    "tau": 0.05,
    "tau_grid": [0.2, 0.1, 0.05, 0.025],
    "s": None,
    "r": 0.05,
    "compare_depths": [],
    "scales": [2.0 ** -k for k in range(1, 7)],
    "transfer_pairs": 20,
    "pairs": 20,
    "samples": 500,
    "iterations": 10,
    "restarts": 50,
    "max_depth": 6,
    "budget": {"segments": 16, "restarts": 2},
    "seed": 0,
    "tolerances": {"iso": 1e-8, "bounded_factor": 2.0, "decay_factor": 2.0, "stability": 0.25,
                   "factor2_slack": 0.05, "coverage": 0.5},
    "expect": {},
    "output": "nilrect-out",
}


# ---------------------------------------------------------------------------
# config


def load_config(path=None, overrides=None):
    """Defaults < config file < overrides; validated before returning."""
    cfg = json.loads(json.dumps(DEFAULTS))
    user = {}
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for layer in (user, overrides or {}):
        validate_config(layer)
        for key, val in layer.items():
            if isinstance(val, dict) and isinstance(cfg.get(key), dict):
                cfg[key] = {**cfg[key], **val}
            else:
                cfg[key] = val
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def canonical_json(obj):
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# inputs


def parse_point(text):
    """'1/2,0,0' -> [Fraction(1, 2), 0, 0]; decimals are read exactly."""
    if isinstance(text, (list, tuple)):
        items = text
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t]
    try:
        return [Fraction(str(t)) for t in items]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse point {text!r}") from None


def parse_points(text):
    if text == "grid":
        return "grid"
    return [parse_point(p) for p in str(text).split(";") if p.strip()]


def load_frame(source) -> Frame:
    if source in BUNDLED:
        return bundled(source)
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"frame {source!r} is neither bundled {BUNDLED} nor a file")
    try:
        return Frame.from_json(path.read_text())
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed frame file {source}: {exc}") from None


def load_algebra(spec, cfg) -> GradedLieAlgebra:
    """heis1 | heis2 | heis:<k> | abelian:<n> | e147:<xi> | tangent | <algebra.json>."""
    name, _, arg = spec.partition(":")
    if name == "heis1":
        return heisenberg(1)
    if name == "heis2":
        return heisenberg(2)
    if name == "heis" and arg:
        return heisenberg(int(arg))
    if name == "abelian" and arg:
        return abelian(int(arg))
    if name == "e147" and arg:
        return e147_family(Fraction(arg))
    if name == "tangent":
        return nilpotentization(load_frame(cfg["frame"]), parse_point(cfg["point"]))
    path = Path(spec)
    if path.is_file():
        try:
            return GradedLieAlgebra.from_json(path.read_text())
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed algebra file {spec}: {exc}") from None
    raise ConfigError(f"unknown group/algebra spec {spec!r}")


def grid_points(frame: Frame, region):
    n = frame.ambient_dim
    box = region.get("box") or [[-1, 1]] * n
    if len(box) != n:
        raise ConfigError(f"region box has {len(box)} ranges, frame has dimension {n}")
    m = region.get("samples", 3)
    axes = []
    for lo, hi in box:
        lo, hi = Fraction(str(lo)), Fraction(str(hi))
        axes.append([lo] if m == 1 else [lo + (hi - lo) * j / (m - 1) for j in range(m)])
    pts = [[]]
    for ax in axes:
        pts = [p + [v] for p in pts for v in ax]
    return pts


class Check:
    """One inequality or property with a pass/fail outcome."""

    def __init__(self, name, ok, claim, **detail):
        self.name, self.ok, self.claim, self.detail = name, bool(ok), claim, detail

    def to_json(self):
        return {"ok": self.ok, "claim": self.claim, **self.detail}


def _expect_checks(expect, result):
    out = []
    for key, want in expect.items():
        if key not in result:
            raise ConfigError(f"expect key {key!r} is not a field of this report "
                              f"(fields: {sorted(result)})")
        got = _sanitize(result[key])
        out.append(Check(f"expect_{key}", got == _sanitize(want), f"{key} == {want!r}", got=got))
    return out


# ---------------------------------------------------------------------------
# cached patchwork


def _cloud_and_patchwork(cfg, out_dir: Path, checked=False):
    """Build (or load from ``<out>/cache``) the patchwork named by the config.

    With ``checked`` the boundary fit is run once and cached with it, so
    later commands see a0 and eta.  Returns (patchwork, check report or None).
    """
    group = CarnotGroup(load_algebra(cfg["group"], cfg))
    res = cfg["resolution"]
    box, shape = lattice_box(group, Fraction(str(res["eps"])), res["extent"])
    key = {"group": group.algebra.to_json(), "box": box, "shape": shape, "depth": cfg["depth"],
           "seed": cfg["seed"], "base_scale": cfg["base_scale"], "order": cfg["net_order"],
           "version": __version__}
    path = out_dir / "cache" / f"patchwork-{config_hash(key)[:16]}.pkl"
    pw, rep = None, None
    if path.is_file():
        with open(path, "rb") as fh:
            pw, rep = pickle.load(fh)
    if pw is None:
        cloud = sample_group_cloud(group, box, shape)
        pw = build_patchwork(cloud, cfg["depth"], seed=cfg["seed"], base_scale=cfg["base_scale"],
                             order=cfg["net_order"])
    if checked and rep is None:
        rep = check_patchwork(pw)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        pickle.dump((pw, rep), fh)
    return pw, rep


def _root(pw, cfg):
    if cfg["root"] is not None:
        if cfg["root"] >= pw.n_cubes(0):
            raise ConfigError(f"root {cfg['root']} >= {pw.n_cubes(0)} level-0 cubes")
        return cfg["root"]
    return int(np.argmax(np.bincount(pw.labels[0])))


def _s(cfg, group):
    return cfg["s"] if cfg["s"] is not None else group.step


# ---------------------------------------------------------------------------
# commands; each returns (result dict, [Check], {filename: text})


def cmd_flag(cfg, out_dir):
    frame = load_frame(cfg["frame"])
    pts = cfg["points"]
    pts = grid_points(frame, cfg["region"]) if pts == "grid" else [parse_point(p) for p in pts]
    verdict = equiregular_check(frame, pts, cfg["max_depth"])
    result = {"frame": frame.name, "n_points": len(pts), **verdict.to_json(),
              "verdict": "Equiregular" if verdict.equiregular else "NotEquiregular"}
    return result, _expect_checks(cfg["expect"], result), {}


def cmd_nilp(cfg, out_dir):
    frame = load_frame(cfg["frame"])
    point = parse_point(cfg["point"])
    nz = Nilpotentizer().fit(frame, point)
    alg = nz.algebra_
    fp = invariant_prescreen(alg)
    result = {"frame": frame.name, "point": point, "algebra": alg.to_json(),
              "fingerprint": fp.to_json(), "growth": list(nz.growth_.dims),
              "hat_frame": nz.hat_frame_.to_json()}
    return result, _expect_checks(cfg["expect"], result), {}


def cmd_iso(cfg, out_dir):
    fam = cfg.get("family")
    if fam:
        if "xi" not in fam or "eta" not in fam:
            raise ConfigError("family needs xi and eta")
        xi, eta = Fraction(str(fam["xi"])), Fraction(str(fam["eta"]))
        g1, g2 = e147_family(xi), e147_family(eta)
    elif cfg.get("left") and cfg.get("right"):
        g1, g2 = load_algebra(cfg["left"], cfg), load_algebra(cfg["right"], cfg)
    else:
        raise ConfigError("iso needs --family or both --left and --right")
    res = stratified_iso_search(g1, g2, restarts=cfg["restarts"], tol=cfg["tolerances"]["iso"],
                                seed=cfg["seed"])
    result = {"left": g1.name, "right": g2.name, **res.to_json(), "isomorphic": bool(res)}
    return result, _expect_checks(cfg["expect"], result), {}


def cmd_group(cfg, out_dir):
    alg = load_algebra(cfg["group"], cfg)
    g = CarnotGroup(alg)
    back = nilpotentization(g.left_invariant_frame(), [0] * g.dim)
    iso = stratified_iso_search(back, alg, restarts=cfg["restarts"], seed=cfg["seed"])
    result = {"algebra": alg.to_json(), "weights": [int(w) for w in g.weights],
              "step": g.step, "heisenberg_type": g.is_heisenberg_type,
              "left_invariant_frame": g.left_invariant_frame().to_json(),
              "round_trip": iso.to_json()}
    checks = [Check("round_trip", bool(iso) and iso.residual < 1e-10,
                    "nilpotentization of the left-invariant frame at the identity is "
                    "stratified-isomorphic to the group algebra", residual=iso.residual)]
    return result, checks + _expect_checks(cfg["expect"], result), {}


def _transfer_scale(frame, group, q, lam, n, seed, budget, rank):
    rng = np.random.default_rng([seed, int(round(-math.log2(lam) * 1000))])
    model = TangentModel.at(frame, q)
    rows = []
    for _ in range(n):
        u1 = ControlSignal(np.full(4, 0.25), rng.normal(size=(4, rank)) * lam)
        u2 = ControlSignal(np.full(4, 0.25), rng.normal(size=(4, rank)) * lam)
        rows.append(transfer_defect(frame, group, q, u1, u2, model=model, budget=budget))
    return rows


def cmd_defect(cfg, out_dir, workers=1):
    frame = load_frame(cfg["frame"])
    q = parse_point(cfg["point"])
    group = CarnotGroup(load_algebra(cfg["group"], cfg))
    budget = cfg["budget"]
    factor = cfg["tolerances"]["bounded_factor"]
    table = closed_loop_defect(frame, group, q, scales=cfg["scales"], budget=budget)
    loop_ok = bounded_across_scales(table.ratios(), discard=2, factor=factor)
    checks = [Check("closed_loop_bounded", loop_ok,
                    "d_M(gamma(0), gamma(1)) / length^(1+1/s) bounded across dyadic scales",
                    ratios=table.ratios())]
    result = {"closed_loop": table.to_json()}
    files = {"defect_loop.csv": table.to_csv()}
    n = cfg["transfer_pairs"]
    if n:
        scales = cfg["scales"][:5]
        args = [(frame, group, q, lam, n, cfg["seed"], budget, group.rank) for lam in scales]
        if workers > 1:
            from joblib import Parallel, delayed
            per = Parallel(n_jobs=workers)(delayed(_transfer_scale)(*a) for a in args)
        else:
            per = [_transfer_scale(*a) for a in args]
        worst = [max(r["ratio"] for r in rows) for rows in per]
        ok = bounded_across_scales(worst, discard=2, factor=factor)
        result["transfer"] = {"scales": scales, "max_ratio": worst,
                              "pairs": [[{k: r[k] for k in ("length", "defect_lo", "defect_hi",
                                                            "ratio")} for r in rows]
                                        for rows in per]}
        checks.append(Check("transfer_bounded", ok,
                            "|d_X - d_Y| / (|u1| + |u2|)^(1+1/s) bounded across dyadic scales",
                            max_ratio=worst))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "pair", "length", "defect_lo", "defect_hi", "ratio"])
        for lam, rows in zip(scales, per):
            for i, r in enumerate(rows):
                w.writerow([repr(lam), i] + [repr(float(r[k])) for k in
                                             ("length", "defect_lo", "defect_hi", "ratio")])
        files["defect_transfer.csv"] = buf.getvalue()
    return result, checks + _expect_checks(cfg["expect"], result), files


def cmd_patchwork(cfg, out_dir):
    pw, rep = _cloud_and_patchwork(cfg, out_dir, checked=True)
    v = rep.violations
    result = {"cloud": pw.cloud.to_json(), "cubes_per_level": [pw.n_cubes(k) for k in
                                                               range(pw.depth + 1)],
              "report": rep.to_json(), "constants": pw.constants}
    checks = [
        Check("partition_nesting", all(x == 0 for x in v.values()),
              "each level partitions the cloud and nests in the previous level", violations=v),
        Check("c2_over_c1_finite", math.isfinite(pw.constants["C2_over_C1"]),
              "B(z, C1 r_k) within Q within B(z, C2 r_k)",
              C2_over_C1=pw.constants["C2_over_C1"]),
        Check("boundary_eta_positive", rep.eta is not None and rep.eta > 0,
              "mu(strip_t(Q)) <= a0 t^eta mu(Q)", eta=rep.eta),
        Check("strips_monotone", rep.monotone, "strip mass non-decreasing in t"),
    ]
    files = {"patchwork_tree.json": canonical_json(pw.tree_json()), "patchwork.csv": rep.to_csv()}
    return result, checks + _expect_checks(cfg["expect"], result), files


def cmd_cantor(cfg, out_dir):
    pw, _ = _cloud_and_patchwork(cfg, out_dir, checked=True)
    s = _s(cfg, pw.cloud.group)
    root = _root(pw, cfg)
    rep = cantor_measure_report(pw, cfg["tau_grid"], s=s, root=root)
    taus = [row["tau"] for row in rep["rows"]]
    fr = [row["retained_fraction"] for row in rep["rows"]]
    checks = []
    if cfg["tau"] in taus:
        checks.append(Check("retained_positive", fr[taus.index(cfg["tau"])] > 0,
                            "mu(K) > 0", tau=cfg["tau"]))
    order = np.argsort(taus)[::-1]
    mono = all(fr[b] >= fr[a] for a, b in zip(order, order[1:]))
    checks.append(Check("retained_monotone", mono, "mu(K) non-decreasing as tau halves"))
    decay = [decay_check(row["decrements"], rep["predicted_rate"],
                         cfg["tolerances"]["decay_factor"]) for row in rep["rows"]]
    checks.append(Check("decrement_decay", all(d[0] for d in decay),
                        "mu(K_j) - mu(K_{j+1}) decays like 2^(-eta j / 2s)",
                        ratios=[d[1] for d in decay], nonzero=[d[2] for d in decay]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "retained_fraction"] + [f"dec{j}" for j in range(pw.depth + 1)])
    for row in rep["rows"]:
        w.writerow([repr(row["tau"]), repr(row["retained_fraction"])]
                   + [repr(float(d)) for d in row["decrements"]])
    result = {"root": root, "s": s, **rep}
    return result, checks + _expect_checks(cfg["expect"], result), {"cantor.csv": buf.getvalue()}


def _embed_once(cfg, out_dir, depth):
    pw, _ = _cloud_and_patchwork(cfg, out_dir)
    group = pw.cloud.group
    cc = build_cantor(pw, _root(pw, cfg), cfg["tau"], _s(cfg, group), depth)
    tm = tree_maps(cc)
    rep = build_embedding(cc, group, load_frame(cfg["frame"]), parse_point(cfg["point"]),
                          cfg["r"], pairs=cfg["pairs"], seed=cfg["seed"], budget=cfg["budget"],
                          tm=tm)
    return cc, tm, rep


def cmd_embed(cfg, out_dir):
    depths = cfg["compare_depths"] or [None]
    runs = [_embed_once(cfg, out_dir, d) for d in depths]
    cc, tm, rep = runs[-1]
    bih = check_biholder(tm, cfg["samples"], cfg["seed"])
    summ = rep.summary()
    slack = cfg["tolerances"]["factor2_slack"]
    dist = rep.distortions()
    checks = [
        Check("biholder", bih["violations"] == 0,
              "(tau/8) d_T^(1+1/2s) <= d_G(A x, A y) <= 2 C2 d_T", violations=bih["violations"],
              pairs=bih["pairs"]),
        Check("lip_E", summ.get("lipE_pass_rate") == 1.0, "d_G(E x, E y) <= r d_T(x, y)",
              pass_rate=summ.get("lipE_pass_rate")),
        Check("distortion_finite", len(dist) > 0 and bool(np.all(np.isfinite(dist))),
              "max/min distortion finite", spread=summ.get("distortion_spread")),
        Check("factor2_with_slack",
              len(dist) > 0 and dist.max() <= 2 * (1 + slack) and dist.min() >= 0.5 / (1 + slack),
              "d_G(E x, E y)/2 <= d_M(F x, F y) <= 2 d_G(E x, E y), up to solver slack",
              slack=slack, interval_pass_rate=summ.get("factor2_pass_rate")),
    ]
    result = {"embedding": rep.to_json(),
              "biholder": {k: v for k, v in bih.items() if k not in ("rows", "failures")}}
    if len(runs) == 2:
        stab = distortion_stability(runs[0][2], runs[1][2], cfg["tolerances"]["stability"])
        result["stability"] = {"depths": depths, **stab}
        checks.append(Check("distortion_stable", stab["stable"],
                            "distortion spread stable between depths", **stab))
    return result, checks + _expect_checks(cfg["expect"], result), {"embed_pairs.csv":
                                                                    rep.to_csv()}


def cmd_cover(cfg, out_dir):
    pw, _ = _cloud_and_patchwork(cfg, out_dir)
    group = pw.cloud.group
    cc = build_cantor(pw, _root(pw, cfg), cfg["tau"], _s(cfg, group))
    rep = coverage_experiment(cc, group, load_frame(cfg["frame"]), parse_point(cfg["point"]),
                              cfg["r"], iterations=cfg["iterations"], seed=cfg["seed"])
    target = cfg["tolerances"]["coverage"]
    checks = [Check("coverage_increasing", strictly_increasing(rep.fractions, 5),
                    "coverage strictly increases over the first 5 iterations"),
              Check("coverage_target", max(rep.fractions) > target,
                    f"coverage exceeds {target} within the budget",
                    final=rep.fractions[-1])]
    result = rep.to_json()
    return result, checks + _expect_checks(cfg["expect"], result), {"coverage.csv": rep.to_csv()}


# ---------------------------------------------------------------------------
# report rendering


def render_reports(paths, out_dir: Path):
    """Aggregate report files into summary.json / summary.txt / checks.csv,
    plus a distortion histogram and pair CSV per embed report and a
    coverage CSV per cover report."""
    reports = []
    for p in paths:
        try:
            data = json.loads(Path(p).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed report {p}: {exc}") from None
        if not isinstance(data, dict) or not {"command", "checks", "result"} <= set(data):
            raise ConfigError(f"malformed report {p}: missing command/checks/result")
        reports.append((Path(p), data))
    rows, lines, files = [], [], {}
    for p, data in reports:
        cmd = data["command"]
        for name, chk in sorted(data["checks"].items()):
            rows.append({"report": p.name, "command": cmd, "check": name, "ok": chk["ok"],
                         "claim": chk["claim"]})
            lines.append(f"{'PASS' if chk['ok'] else 'FAIL'}  {cmd}:{name}  [{chk['claim']}]")
        stem = p.stem
        if cmd == "embed":
            pairs = data["result"]["embedding"]["pairs"]
            files[f"{stem}_pairs.csv"] = _pairs_csv(pairs)
            files[f"{stem}_distortion.svg"] = _histogram_svg(
                [q["distortion"] for q in pairs if q.get("distortion") is not None],
                "d_M(F x, F y) / d_G(E x, E y)")
        elif cmd == "cover":
            files[f"{stem}_coverage.csv"] = "iteration,coverage\n" + "".join(
                f"{i},{c!r}\n" for i, c in enumerate(data["result"]["coverage"]))
    n_ok = sum(r["ok"] for r in rows)
    summary = {"reports": [str(p) for p, _ in reports], "checks": rows,
               "passed": n_ok, "failed": len(rows) - n_ok}
    text = "\n".join(lines + [f"{n_ok} passed, {len(rows) - n_ok} failed"]) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, ["report", "command", "check", "ok", "claim"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    files.update({"summary.json": canonical_json(summary), "summary.txt": text,
                  "checks.csv": buf.getvalue()})
    return summary, text, files


def _pairs_csv(pairs):
    keys = ["e1", "e2", "d_T", "dG_lo", "dG_hi", "dM_lo", "dM_hi", "distortion"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for q in pairs:
        w.writerow(["" if q.get(k) is None else q[k] for k in keys])
    return buf.getvalue()


def _histogram_svg(values, xlabel):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "nilrect"
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if values:
        ax.hist(values, bins=min(20, max(5, len(values) // 3)), color="#4c72b0")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("pairs")
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# driver


def build_parser():
    ap = argparse.ArgumentParser(prog="nilrect", description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=1, help="parallel workers where supported")
    ap.add_argument("--strict", action="store_true", help="exit 3 when any check fails")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def frame_opts(p, point=True):
        p.add_argument("--example", dest="frame", help=f"bundled frame {BUNDLED} or JSON path")
        if point:
            p.add_argument("--point", help="comma-separated, rationals allowed (1/2,0,...)")

    p = sub.add_parser("flag", help="equiregularity verdict over sample points")
    frame_opts(p, point=False)
    p.add_argument("--points", help="'grid' or 'x1,..;y1,..'")
    p.add_argument("--samples", dest="region_samples", type=int, help="grid points per axis")
    p = sub.add_parser("nilp", help="nilpotentization at a point")
    frame_opts(p)
    p = sub.add_parser("iso", help="stratified isomorphism search")
    p.add_argument("--family", choices=["e147"])
    p.add_argument("--xi")
    p.add_argument("--eta")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--restarts", type=int)
    p = sub.add_parser("group", help="Carnot group model and round trip")
    p.add_argument("--group")
    for name, helptext in (("defect", "closed-loop and transfer defects"),
                           ("patchwork", "cube patchwork on a group cloud"),
                           ("cantor", "Cantor retention over the tau grid"),
                           ("embed", "Cantor embedding and distortion"),
                           ("cover", "coverage by re-anchored embeddings")):
        p = sub.add_parser(name, help=helptext)
        frame_opts(p)
        p.add_argument("--group")
        p.add_argument("--depth", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--r", type=float)
    p = sub.add_parser("report", help="render report JSONs into a summary")
    p.add_argument("reports", nargs="*")
    return ap


def _overrides(args):
    o = {}
    for key in ("frame", "group", "depth", "tau", "r", "restarts", "left", "right", "seed",
                "out"):
        val = getattr(args, key, None)
        if val is not None:
            o["output" if key == "out" else key] = val
    if getattr(args, "point", None) is not None:
        o["point"] = [str(x) for x in parse_point(args.point)]
    if getattr(args, "points", None) is not None:
        pts = parse_points(args.points)
        o["points"] = pts if pts == "grid" else [[str(x) for x in p] for p in pts]
    if getattr(args, "region_samples", None) is not None:
        o["region"] = {"samples": args.region_samples}
    if getattr(args, "family", None):
        o["family"] = {"name": args.family}
        for k in ("xi", "eta"):
            if getattr(args, k) is not None:
                o["family"][k] = getattr(args, k)
    return o


def _write(out_dir: Path, files):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)


def run(command, cfg, workers=1, extra=None):
    """Run one command on a validated config; returns (report dict, files)."""
    out_dir = Path(cfg["output"])
    fn = globals()[f"cmd_{command}"]
    if command == "defect":
        result, checks, files = fn(cfg, out_dir, workers)
    else:
        result, checks, files = fn(cfg, out_dir)
    report = {"command": command, "version": __version__, "config_hash": config_hash(cfg),
              "config": cfg, "result": result, "checks": {c.name: c.to_json() for c in checks}}
    return report, files


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.time()
    try:
        if args.command == "report":
            out_dir = Path(args.out or DEFAULTS["output"])
            summary, text, files = render_reports(args.reports, out_dir)
            _write(out_dir, files)
            sys.stdout.write(text)
            return 3 if args.strict and summary["failed"] else 0
        cfg = load_config(args.config, _overrides(args))
        out_dir = Path(cfg["output"])
        report, files = run(args.command, cfg, args.workers)
    except ConfigError as exc:
        print(json.dumps(exc.payload()), file=sys.stderr)
        return 1
    except NilrectError as exc:
        payload = exc.payload()
        print(json.dumps(payload), file=sys.stderr)
        return 2
    except (KeyError, ValueError) as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return 1
    files[f"{args.command}.json"] = canonical_json(report)
    files[f"{args.command}.meta.json"] = canonical_json({
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(t0)),
        "elapsed_s": round(time.time() - t0, 3), "argv": list(argv or sys.argv[1:]),
        "python": platform.python_version(), "workers": args.workers})
    _write(out_dir, files)
    failed = [n for n, c in report["checks"].items() if not c["ok"]]
    for name, chk in report["checks"].items():
        print(f"{'PASS' if chk['ok'] else 'FAIL'}  {args.command}:{name}")
    print(f"report: {out_dir / (args.command + '.json')}")
    return 3 if args.strict and failed else 0


if __name__ == "__main__":
    sys.exit(main())
