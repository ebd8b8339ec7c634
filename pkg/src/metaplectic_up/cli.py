"""Command-line driver: one JSON config per experiment.

    metaplectic-up <kind> --config cfg.json [--out DIR] [--seed N] [--tol X]

Kinds: constants, transform, heisenberg, sweep, beurling, morgan.
Exit status: 0 success, 1 invalid config, 2 inequality violated or expected
trend missed, 3 output grid clipped more than ``clip_tol`` of the mass.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import decay, uncertainty
from .gaussian import (GaussianState, PolyGaussian, extremizer_state, gamma_for_sharpness,
                       random_gaussian, transform_gaussian, transform_poly_gaussian)
from .grid import GridSpec, l2_norm, sample, write_mgf1
from .operators import fourier, from_config
from .symplectic import (SymplecticError, build_frame, check_lemma_isomorphisms, constants)
from .transform import phase_align, transform_grid

KINDS = ("constants", "transform", "heisenberg", "sweep", "beurling", "morgan")
EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_UNRESOLVED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r}")
    return cfg[key]




def _complex_matrix(cfg, re, im, shape):
    r = np.asarray(cfg.get(re, np.zeros(shape)), dtype=float).reshape(shape)
    i = np.asarray(cfg.get(im, np.zeros(shape)), dtype=float).reshape(shape)
    return r + 1j * i


# -- config pieces --------------------------------------------------------------

def parse_grid(spec, d: int) -> GridSpec | None:
    if spec is None:
        return None
    if "L" in spec:
        n = spec.get("n", 128)
        return GridSpec.symmetric(d, int(n), float(spec["L"]))
    return GridSpec(tuple(spec["n"]), tuple(spec["min"]), tuple(spec["step"]))


def _param_values(spec) -> np.ndarray:
    if isinstance(spec, dict):
        vals = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        return vals * np.pi if spec.get("times_pi") else vals
    return np.asarray(spec, dtype=float)


def build_input(spec: dict, S, rng: np.random.Generator):
    """GaussianState for closed-form presets, else an evaluator to be sampled."""
    d = S.d
    preset = _need(spec, "preset")
    if preset == "isotropic":
        return GaussianState.isotropic(d, float(spec.get("gamma", np.pi)),
                                       spec.get("center"), spec.get("freq"))
    if preset == "gaussian":
        Z = _complex_matrix(spec, "Z_re", "Z_im", (d, d))
        w = _complex_matrix(spec, "w_re", "w_im", (d,))
        c = complex(spec.get("c_re", 1.0), spec.get("c_im", 0.0))
        return GaussianState(Z, w, c)
    if preset == "extremizer":
        frame = build_frame(S, ordering="eigen")
        gam = gamma_for_sharpness(S, frame, float(spec.get("c", 1.0)))
        return extremizer_state(S, frame, spec.get("alpha", 0.0), spec.get("beta", 0.0), gam,
                                spec.get("theta", np.pi))
    if preset == "random_gaussian":
        return random_gaussian(rng, d)
    if preset == "random_schwartz":
        base = random_gaussian(rng, d)
        deg = int(spec.get("degree", 2))
        coeffs = {(0,) * d: 1.0}
        for i in range(d):
            for k in range(1, deg + 1):
                idx = [0] * d
                idx[i] = k
                coeffs[tuple(idx)] = complex(*rng.normal(size=2))
        return PolyGaussian(base, coeffs, np.eye(d), np.zeros(d))
    if preset == "poly_gaussian":
        base = GaussianState.isotropic(d, float(spec.get("gamma", np.pi)))
        # {"1,0": 2.0, "0,2": [re, im]}
        coeffs = {}
        for key, v in _need(spec, "coeffs").items():
            re_im = list(np.atleast_1d(np.asarray(v, dtype=float))) + [0.0]
            coeffs[tuple(int(i) for i in key.split(","))] = complex(re_im[0], re_im[1])
        return PolyGaussian(base, coeffs, np.eye(d), np.zeros(d))
    if preset == "bump":
        return decay.smooth_bump(float(spec.get("radius", 1.0)))
    raise ConfigError(f"unknown input preset {preset!r}")


def _image_of(S, f, spec: GridSpec | None):
    """(f_used, Sf, info): closed form without a grid, sampled and transformed otherwise."""
    if spec is None:
        if isinstance(f, GaussianState):
            return f, transform_gaussian(S, f), {"clipped_mass": 0.0, "path": "closed_form"}
        raise ConfigError("this input preset needs a grid")
    fg = sample(spec, f)
    Sf, info = transform_grid(S, fg, return_info=True)
    return fg, Sf, {"clipped_mass": info["clipped_mass"], "path": info["mode"]}


def _constants_summary(S) -> dict:
    frame = build_frame(S, ordering="eigen")
    out = {"d": S.d, "r": frame.r, "singular_values": frame.singular_values.tolist()}
    k = constants(S, frame)
    out.update(k.as_dict())
    tr = float(np.sum(frame.singular_values))
    out["trace_abs_B"] = tr
    out["directional_bound_per_norm2"] = k.K_S / (4 * np.pi) if frame.r else 0.0
    out["full_bound_per_norm2"] = tr * k.K_S / (4 * np.pi)
    out["isomorphism_condition_numbers"] = check_lemma_isomorphisms(S, frame)
    return out


def _report_dict(rep) -> dict:
    d = rep.as_dict()
    for k in ("alpha_used", "beta_used"):
        d[k] = list(d[k])
    return d


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, int, np.floating)) else v
                        for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# -- experiments ------------------------------------------------------------------

def run_constants(cfg, S, out: Path, tol, rng):
    summ = _constants_summary(S)
    scalars = [(k, v) for k, v in summ.items() if isinstance(v, (int, float, np.floating))]
    _write_csv(out / "constants.csv", ["name", "value"], scalars)
    return {"constants": summ}, EXIT_OK


def run_transform(cfg, S, out: Path, tol, rng):
    spec = parse_grid(_need(cfg, "grid"), S.d)
    f = build_input(_need(cfg, "input"), S, rng)
    fg = sample(spec, f)
    Sf, info = transform_grid(S, fg, cfg.get("mode"), return_info=True)
    summ = {"norm_in": l2_norm(fg), "norm_out": l2_norm(Sf),
            "unitarity_defect": abs(l2_norm(Sf) / l2_norm(fg) - 1), **info}
    if isinstance(f, (GaussianState, PolyGaussian)):
        exact = transform_gaussian(S, f) if isinstance(f, GaussianState) else transform_poly_gaussian(S, f)
        summ["oracle_residual"] = phase_align(sample(Sf.spec, exact), Sf)[1]
    if cfg.get("save_grids", True):
        write_mgf1(out / "input.mgf1", fg)
        write_mgf1(out / "output.mgf1", Sf)
    keys = [k for k in summ if k != "mode"]
    _write_csv(out / "transform.csv", keys, [[float(summ[k]) for k in keys]])
    code = EXIT_UNRESOLVED if info["clipped_mass"] > cfg.get("clip_tol", 1e-3) else EXIT_OK
    return {"transform": summ}, code


def _heisenberg_report(cfg, S, f, Sf, clipped):
    mode = cfg.get("mode", "full")
    const = cfg.get("constant", "K_S")
    if mode == "full":
        rep = uncertainty.heisenberg_full(S, build_frame(S, ordering="eigen"), f, Sf,
                                          cfg.get("alpha", "auto"), cfg.get("beta", "auto"), const)
    elif mode == "directional":
        rep = uncertainty.heisenberg_directional(S, None, f, Sf, int(cfg.get("j", 1)),
                                                 cfg.get("alpha", "auto"), cfg.get("beta", "auto"),
                                                 const)
    elif mode == "cartesian":
        rep = uncertainty.heisenberg_cartesian(S, f, Sf, int(cfg.get("j", 1)), int(cfg.get("k", 1)),
                                               cfg.get("alpha", "auto"), cfg.get("beta", "auto"))
    else:
        raise ConfigError(f"unknown heisenberg mode {mode!r}")
    return replace(rep, clipped_mass=clipped) if clipped else rep


def run_heisenberg(cfg, S, out: Path, tol, rng):
    f = build_input(_need(cfg, "input"), S, rng)
    spec = parse_grid(cfg.get("grid"), S.d)
    fu, Sf, info = _image_of(S, f, spec)
    rep = _heisenberg_report(cfg, S, fu, Sf, info["clipped_mass"])
    _write_csv(out / "heisenberg.csv", uncertainty.csv_header(S.d),
               [uncertainty.csv_row(0.0, rep, S.d)])
    summary = {"constants": _constants_summary(S), "report": _report_dict(rep), "path": info["path"]}
    if not rep.holds(tol):
        return summary, EXIT_VIOLATION
    if info["clipped_mass"] > cfg.get("clip_tol", 1e-3):
        return summary, EXIT_UNRESOLVED
    return summary, EXIT_OK


def _family(cfg):
    fam = dict(_need(cfg, "family"))
    pname = fam.pop("param")
    return lambda p: from_config({**fam, pname: float(p)})


def run_sweep(cfg, S, out: Path, tol, rng):
    family = _family(cfg)
    params = _param_values(_need(cfg, "params"))
    d = family(params[0]).d
    f = build_input(_need(cfg, "input"), family(params[0]), rng)
    spec = parse_grid(cfg.get("grid"), d)
    f0 = sample(spec, f) if spec is not None else f
    if spec is None and not isinstance(f, GaussianState):
        raise ConfigError("this input preset needs a grid")
    rows = uncertainty.bound_sweep(family, f0, params, cfg.get("clip_tol", 1e-3),
                                   cfg.get("constant", "K_S"))
    uncertainty.write_sweep_csv(out / "sweep.csv", rows, d)
    ok = all(r.report.holds(tol) for r in rows)
    flagged = [r.param for r in rows if r.flagged]
    summary = {"rows": [{"param": r.param, "bound": r.report.bound, "ratio": r.report.ratio,
                         "flagged": r.flagged} for r in rows], "all_hold": ok, "flagged": flagged}
    if not ok:
        return summary, EXIT_VIOLATION
    return summary, EXIT_UNRESOLVED if flagged else EXIT_OK


def _profile(cfg, r: int):
    """(g, g_hat) on R^r for the Beurling and Morgan families."""
    kind = cfg.get("profile", "gaussian")
    if kind == "gaussian":
        g = GaussianState.isotropic(r, np.pi)
        deg = int(cfg.get("degree", 0))
        if deg == 0:
            return g, g
        coeffs = {(deg,) + (0,) * (r - 1): 1.0}
        pg = PolyGaussian(g, coeffs, np.eye(r), np.zeros(r))
        return pg, transform_poly_gaussian(fourier(r), pg)
    if kind == "exponential" and r == 1:
        return (lambda u: np.exp(-np.pi * np.abs(u[..., 0])),
                lambda e: 2.0 / (np.pi * (1.0 + 4.0 * e[..., 0] ** 2)))
    raise ConfigError(f"unknown profile {kind!r} for r={r}")


def _probe_rows(label, probe):
    return [[label, *row] for row in probe.csv_rows()]


def run_beurling(cfg, S, out: Path, tol, rng):
    frame = build_frame(S)
    g, ghat = _profile(cfg, frame.r)
    f, Sf = decay.construct_beurling_family(S, frame, g, ghat,
                                            decay.smooth_bump(1.0) if frame.r < S.d else None)
    radii = cfg.get("radii", decay.DEFAULT_BEURLING_RADII)
    probe = decay.beurling_probe(f, Sf, S, frame, None, float(_need(cfg, "N")), radii,
                                 float(cfg.get("h", 0.05)))
    _write_csv(out / "beurling.csv", ["probe", "radius", "partial", "increment_ratio"],
               _probe_rows("beurling", probe))
    summary = {"verdict": probe.verdict(), "r": frame.r}
    expect = cfg.get("expect")
    if expect is not None and probe.trend not in np.atleast_1d(expect):
        return summary, EXIT_VIOLATION
    return summary, EXIT_OK


def run_morgan(cfg, S, out: Path, tol, rng):
    frame = build_frame(S)
    p = float(_need(cfg, "p"))
    thr = decay.morgan_threshold(p)
    if "ab_fraction" in cfg:
        a = b = math.sqrt(float(cfg["ab_fraction"]) * thr)
    else:
        a, b = float(_need(cfg, "a")), float(_need(cfg, "b"))
    params = decay.MorganParams(p, a, b)
    g, ghat = _profile(cfg, frame.r)
    fam = decay.construct_morgan_admissible(S, frame, g, ghat, decay.smooth_bump(1.0))
    slices = decay.slice_points(S, frame, int(cfg.get("slices", 5)),
                                seed=int(rng.integers(2 ** 31)))
    res = decay.verify_morgan(S, frame, fam, params, slices, cfg.get("exponent", "linear"))
    rows = []
    for side in ("space", "dual"):
        for i, pr in enumerate(res[side]):
            rows += _probe_rows(f"{side}_{i}", pr)
    _write_csv(out / "morgan.csv", ["probe", "radius", "partial", "increment_ratio"], rows)
    summary = {"p": p, "q": params.q, "a": a, "b": b, "threshold": thr, "regime": params.regime(),
               "all_converging": res["all_converging"],
               "space": [pr.verdict() for pr in res["space"]],
               "dual": [pr.verdict() for pr in res["dual"]]}
    expect = cfg.get("expect", "converging")
    if expect == "converging" and not res["all_converging"]:
        return summary, EXIT_VIOLATION
    return summary, EXIT_OK


RUNNERS = {"constants": run_constants, "transform": run_transform, "heisenberg": run_heisenberg,
           "sweep": run_sweep, "beurling": run_beurling, "morgan": run_morgan}


def run(kind: str, cfg: dict, out: Path, seed: int = 0, tol: float | None = None) -> int:
    if cfg.get("kind", kind) != kind:
        raise ConfigError(f"config is for {cfg['kind']!r}, not {kind!r}")
    tol = float(cfg.get("tolerance", 5e-3)) if tol is None else tol
    rng = np.random.default_rng(seed)
    S = from_config(cfg["operator"]) if kind != "sweep" else _family(cfg)(
        _param_values(_need(cfg, "params"))[0])
    out.mkdir(parents=True, exist_ok=True)
    summary, code = RUNNERS[kind](cfg, S, out, tol, rng)
    summary = {"kind": kind, "seed": seed, "tolerance": tol, "exit_code": code, **summary}
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="metaplectic-up", description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=None)
    args = ap.parse_args(argv)
    try:
        cfg = json.loads(args.config.read_text())
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        code = run(args.kind, cfg, args.out, args.seed, args.tol)
    except (ConfigError, SymplecticError, KeyError, TypeError, ValueError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_CONFIG
    print(json.dumps({"kind": args.kind, "exit_code": code, "out": str(args.out)}))
    return code


if __name__ == "__main__":
    sys.exit(main())
