"""Command-line runner: figure data, self-checks and convergence sweeps.

    nonbark preset fig2 --out out/
    nonbark run my.json --format json
    nonbark check --fast
    nonbark sweep atom --ns 100 200 400

Exit status is 0 on success, 1 when a check fails and 2 for a bad config.
NONBARK_OUT, when set, replaces --out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import atombath as ab
from . import tunneling as tn
from .checks import run_checks
from .errors import ConfigError, NonbarkError
from .series import WeakValueSeries, emit_series, fmt

PRESETS = ("fig1", "fig2", "fig3", "atom-growth", "checks")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_grid = {
    "type": "object",
    "properties": {
        "start": _num,
        "stop": _num,
        "num": {"type": "integer", "minimum": 1},
        "relative": {"type": "boolean"},
    },
    "required": ["start", "stop", "num"],
    "additionalProperties": False,
}
_tparams = {
    "type": "object",
    "properties": {"b": _pos, "mu": _pos, "kappa": {"type": "number", "minimum": 0}, "k0": _pos, "L": _pos},
    "required": ["b", "mu", "kappa", "k0", "L"],
    "additionalProperties": False,
}
_common = {
    "model": {},
    "seed": {"type": "integer"},
    "format": {"enum": ["csv", "json"]},
}

SCHEMAS = {
    "atom_decay": {
        "type": "object",
        "properties": dict(
            _common,
            params={
                "type": "object",
                "properties": {
                    "gamma": _pos,
                    "n_side": {"type": "integer", "minimum": 1},
                    "band": _pos,
                    "e0": _num,
                },
                "required": ["gamma", "n_side"],
                "additionalProperties": False,
            },
            window={
                "type": "object",
                "properties": {"t_i": _num, "t_f": _num},
                "required": ["t_i", "t_f"],
                "additionalProperties": False,
            },
            grid=_grid,
            levels={"type": "array", "items": {"anyOf": [{"type": "integer"}, {"const": "ref"}]}, "minItems": 1},
            mode={"enum": ["analytic", "numeric", "both"]},
            growth={
                "type": "object",
                "properties": {"gamma_T": {"type": "array", "items": _pos, "minItems": 1}},
                "required": ["gamma_T"],
                "additionalProperties": False,
            },
        ),
        "required": ["model", "params", "window", "grid", "levels"],
        "additionalProperties": False,
    },
    "tunnel_closed": {
        "type": "object",
        "properties": dict(
            _common,
            params=_tparams,
            S={"anyOf": [{"type": "integer"}, {"type": "array", "items": {"type": "integer"}, "minItems": 1}]},
            spots={
                "anyOf": [
                    {"const": "all"},
                    {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                                 "minItems": 2, "maxItems": 2}},
                ]
            },
            include_boundary={"type": "boolean"},
            grid=_grid,
        ),
        "required": ["model", "params", "S"],
        "additionalProperties": False,
    },
    "tunnel_pde": {
        "type": "object",
        "properties": dict(
            _common,
            params=_tparams,
            s={"type": "number", "minimum": 0},
            S={"type": "number", "exclusiveMinimum": 0},
            grid=_grid,
            refine={"type": "integer", "minimum": 1},
        ),
        "required": ["model", "params", "s", "S", "grid"],
        "additionalProperties": False,
    },
    "checks": {
        "type": "object",
        "properties": dict(_common, fast={"type": "boolean"}),
        "required": ["model"],
        "additionalProperties": False,
    },
}
SCHEMAS["tunnel_quadrature"] = SCHEMAS["tunnel_closed"]


def load_preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}", ("preset",))
    text = resources.files("nonbark").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(cfg):
    """Schema and semantic checks; raises ConfigError with the offending field path."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    model = cfg.get("model")
    if model not in SCHEMAS:
        raise ConfigError(f"model must be one of {sorted(SCHEMAS)}, got {model!r}", ("model",))
    try:
        jsonschema.validate(cfg, SCHEMAS[model])
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, tuple(str(p) for p in exc.absolute_path)) from None
    g = cfg.get("grid")
    if g and g["num"] > 1 and not g["stop"] > g["start"]:
        raise ConfigError("stop must exceed start", ("grid", "stop"))
    if model == "atom_decay":
        w = cfg["window"]
        if not w["t_f"] > w["t_i"]:
            raise ConfigError("t_f must exceed t_i", ("window", "t_f"))
        if not (w["t_i"] <= g["start"] and g["stop"] <= w["t_f"]):
            raise ConfigError("t grid must lie inside the window", ("grid",))
        n = cfg["params"]["n_side"]
        for k, lv in enumerate(cfg["levels"]):
            if lv != "ref" and abs(lv) > n:
                raise ConfigError(f"level {lv} outside [-{n}, {n}]", ("levels", str(k)))
    if model in ("tunnel_closed", "tunnel_quadrature"):
        S = cfg["S"] if isinstance(cfg["S"], list) else [cfg["S"]]
        for k, s in enumerate(S):
            if s < 6 or (s - 2) % 4:
                raise ConfigError(f"S = {s} is not 4i + 2 with i >= 1", ("S",) if len(S) == 1 else ("S", str(k)))
    if model == "tunnel_pde" and not cfg["s"] <= cfg["S"]:
        raise ConfigError("s must not exceed S", ("s",))
    if "params" in cfg and model.startswith("tunnel"):
        try:
            tn.TunnelParams(**cfg["params"])
        except ValueError as exc:
            raise ConfigError(str(exc), ("params",)) from None
    return cfg


def _linspace(g, offset=0.0):
    base = offset if g.get("relative") else 0.0
    return np.linspace(base + g["start"], base + g["stop"], g["num"])


def _series_meta(cfg, **extra):
    meta = {"code_version": __version__, "mode": cfg["model"], "params": cfg.get("params", {})}
    meta.update(extra)
    return meta


# workers (top level so they pickle)


def _atom_task(params, window, ts, mode):
    model = ab.BathModel.calibrated(params["gamma"], params["n_side"], params.get("band"), params.get("e0", 0.0))
    if mode == "numeric":
        return ab.weak_values_numeric(model, window["t_i"], window["t_f"], ts)
    out = np.empty((len(ts), model.dim), dtype=complex)
    u00 = lambda d: ab.evolution_element_analytic(model, ab.REF, ab.REF, d)
    for k, t in enumerate(ts):
        win = ab.TimeWindow(window["t_i"], float(t), window["t_f"])
        out[k, 1:] = ab._analytic_wn(model, win, model.levels)
        out[k, 0] = u00(win.remaining) * u00(win.elapsed) / u00(win.duration)
    return out


def _spot_task(params, S, spot, xs, quadrature):
    p = tn.TunnelParams(**params)
    T = S * p.L / p.v
    if quadrature or not spot.regular:
        return tn.weak_value_numeric(xs, spot.t, T, p)
    return tn.weak_value_at_spot(spot, xs, p)


def _pde_task(params, s, S, xs, refine):
    from .pdeoracle import BarrierProfile, Grid, weak_value_pde

    p = tn.TunnelParams(**params)
    unit = p.L / p.v
    t, T = s * unit, S * unit
    grid = Grid.for_run(p, max(t, T - t), refine=refine)
    return weak_value_pde(xs, t, T, p, grid, BarrierProfile.delta(p))


class Runner:
    def __init__(self, out, fmt_="csv", jobs=1):
        self.out = Path(out)
        self.fmt = fmt_
        self.jobs = max(1, int(jobs))

    def _map(self, fn, argsets):
        if self.jobs == 1 or len(argsets) < 2:
            return [fn(*a) for a in argsets]
        with ProcessPoolExecutor(max_workers=min(self.jobs, len(argsets))) as pool:
            futs = [pool.submit(fn, *a) for a in argsets]
            return [f.result() for f in futs]

    def _emit(self, name, series, summary):
        path = emit_series(series, self.out / name, self.fmt)
        entry = {"file": path.name, "samples": len(series)}
        if len(series):
            c, a = series.peak()
            entry.update(peak_coord=c, peak_abs=a)
        summary["series"].append(entry)

    def run(self, cfg):
        cfg = validate(cfg)
        self.fmt = cfg.get("format", self.fmt)
        self.out.mkdir(parents=True, exist_ok=True)
        summary = {"model": cfg["model"], "code_version": __version__, "config": cfg, "series": []}
        status = getattr(self, "_run_" + cfg["model"])(cfg, summary)
        summary["status"] = "ok" if status == 0 else "failed"
        text = json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n"
        (self.out / "summary.json").write_text(text, encoding="utf-8")
        return status

    def _run_atom_decay(self, cfg, summary):
        p, w = cfg["params"], cfg["window"]
        ts = _linspace(cfg["grid"])
        mode = cfg.get("mode", "analytic")
        modes = ["analytic", "numeric"] if mode == "both" else [mode]
        model = ab.BathModel.calibrated(p["gamma"], p["n_side"], p.get("band"), p.get("e0", 0.0))
        results = self._map(_atom_task, [(p, w, ts, m) for m in modes])
        summary["model_detail"] = {"delta_e": model.delta_e, "coupling": model.coupling, "gamma": model.gamma}
        for m, table in zip(modes, results):
            for lv in cfg["levels"]:
                col = model.index(lv)
                name = f"atom_{'ref' if lv == 'ref' else f'n{lv}'}_{m}"
                meta = _series_meta(cfg, level=lv, evaluation=m, window=w, model_detail=summary["model_detail"])
                self._emit(name, WeakValueSeries("t", ts, table[:, col], meta), summary)
        if "growth" in cfg:
            gts = np.asarray(cfg["growth"]["gamma_T"], dtype=float)
            g, H = p["gamma"], model.coupling
            vals = [ab.weak_value_resonant(g, ab.TimeWindow(0.0, x / (2 * g), x / g), H) for x in gts]
            meta = _series_meta(cfg, quantity="w_0 at window midpoint vs gamma*T", coupling=H)
            self._emit("atom_growth", WeakValueSeries("t", gts, vals, meta), summary)
        return 0

    def _spot_runs(self, cfg, summary, quadrature):
        p = tn.TunnelParams(**cfg["params"])
        S_list = cfg["S"] if isinstance(cfg["S"], list) else [cfg["S"]]
        rows, tasks, names = [], [], []
        for S in S_list:
            T = S * p.L / p.v
            spots = tn.sweet_spots(T, p, include_boundary=cfg.get("include_boundary", False))
            if cfg.get("spots", "all") != "all":
                want = [tuple(s) for s in cfg["spots"]]
                spots = sorted((s for s in spots if (s.n, s.m) in want), key=lambda s: want.index((s.n, s.m)))
                missing = set(want) - {(s.n, s.m) for s in spots}
                if missing:
                    raise ConfigError(f"no sweet spot {sorted(missing)} at S = {S}", ("spots",))
            for sp in spots:
                peak = abs(tn.weak_value_at_spot(sp, sp.x, p, T))
                rows.append(dict(S=S, n=sp.n, m=sp.m, N=sp.N, M=sp.M, x=sp.x, t=sp.t,
                                 x_over_L=sp.x / p.L, s=sp.t * p.v / p.L, regular=sp.regular, peak_abs=peak))
                if "grid" in cfg:
                    xs = _linspace(cfg["grid"], sp.x)
                    tasks.append((cfg["params"], S, sp, xs, quadrature))
                    names.append((S, sp))
        summary["spots"] = rows
        self._write_spot_table(rows)
        for (S, sp), task, vals in zip(names, tasks, self._map(_spot_task, tasks)):
            meta = _series_meta(cfg, S=S, spot=dict(n=sp.n, m=sp.m, N=sp.N, M=sp.M, x=sp.x, t=sp.t,
                                                    regular=sp.regular))
            self._emit(f"spot_S{S}_n{sp.n}_m{sp.m}", WeakValueSeries("x", task[3], vals, meta), summary)
        return 0

    def _write_spot_table(self, rows):
        cols = ["S", "n", "m", "N", "M", "x", "t", "x_over_L", "s", "regular", "peak_abs"]
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(str(r[c]) if isinstance(r[c], (bool, int)) else fmt(r[c]) for c in cols))
        (self.out / "spots.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    def _run_tunnel_closed(self, cfg, summary):
        return self._spot_runs(cfg, summary, quadrature=False)

    def _run_tunnel_quadrature(self, cfg, summary):
        return self._spot_runs(cfg, summary, quadrature=True)

    def _run_tunnel_pde(self, cfg, summary):
        xs = _linspace(cfg["grid"])
        series = _pde_task(cfg["params"], cfg["s"], cfg["S"], xs, cfg.get("refine", 1))
        series.metadata.update(code_version=__version__)
        self._emit(f"pde_s{fmt(cfg['s'])}_S{fmt(cfg['S'])}", series, summary)
        return 0

    def _run_checks(self, cfg, summary):
        results = run_checks(cfg.get("seed", 0), cfg.get("fast", False))
        for r in results:
            print(r.line())
        summary["checks"] = [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
        return 0 if all(r.passed for r in results) else 1


def _sweep(args, out):
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "atom":
        lines = ["n_side,delta_e,max_rel_dev"]
        for n in args.ns:
            model = ab.BathModel.calibrated(args.gamma, n)
            ts = np.linspace(0, 4 / args.gamma, 41)
            num = ab.weak_values_numeric(model, 0.0, ts[-1], ts)
            dev = 0.0
            for lv in args.levels:
                ana = np.array([ab.weak_value_bath(model, ab.TimeWindow(0, t, ts[-1]), lv) for t in ts])
                col = num[:, model.index(lv)]
                dev = max(dev, float(np.max(np.abs(ana - col)) / np.max(np.abs(col))))
            lines.append(f"{n},{fmt(model.delta_e)},{fmt(dev)}")
            print(lines[-1])
        (out / "sweep_atom.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        from .pdeoracle import grid_convergence

        lines = ["dx,dt,max_error"]
        for dx, dt, err in grid_convergence(levels=args.levels_pde):
            lines.append(f"{fmt(dx)},{fmt(dt)},{fmt(err)}")
            print(lines[-1])
        (out / "sweep_pde.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="nonbark", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="nonbark-out", help="output directory (NONBARK_OUT overrides)")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", parents=[common], help="run a JSON scenario config")
    r.add_argument("config")
    pr = sub.add_parser("preset", parents=[common], help="run a shipped preset")
    pr.add_argument("name", choices=PRESETS)
    c = sub.add_parser("check", parents=[common], help="run the invariant suite")
    c.add_argument("--fast", action="store_true", help="skip the PDE check and shrink the atom checks")
    c.add_argument("--seed", type=int, default=0)
    s = sub.add_parser("sweep", parents=[common], help="N-convergence (atom) or grid-convergence (pde) study")
    s.add_argument("kind", choices=["atom", "pde"])
    s.add_argument("--ns", type=int, nargs="+", default=[50, 100, 200, 400])
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--levels", type=int, nargs="+", default=[0, 3, -3, 10, -10])
    s.add_argument("--levels-pde", type=int, default=3)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(os.environ.get("NONBARK_OUT") or args.out)
    try:
        if args.cmd == "sweep":
            return _sweep(args, out)
        if args.cmd == "run":
            try:
                cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        elif args.cmd == "preset":
            cfg = load_preset(args.name)
        else:
            cfg = {"model": "checks", "seed": args.seed, "fast": args.fast}
        if args.format:
            cfg["format"] = args.format
        return Runner(out, cfg.get("format", "csv"), args.jobs).run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonbarkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
