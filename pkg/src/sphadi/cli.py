"""Command-line front end: ``sphadi <command> --config <file> [--out DIR] [--seed N]``.

The configuration is a single JSON object::

    {
      "command": "decay-scan",               # optional if given on the command line
      "potential": {"type": "aharonov_bohm", "lambda": 0.3},
      "numerics": {"K_max": 20},
      "datum": {"family": "cartesian", "width": 0.5, "c": [1.0, 0.5, 0.3]},
      "times": [1, 1.78, 3.16, 5.62, 10, 17.8, 31.6, 56.2, 100],
      "p": "inf",
      "weight_exp": 0.0,
      "output_dir": "out",
      "seed": 0
    }

Potentials: ``free`` (d), ``aharonov_bohm`` (lambda, d = 2), ``inverse_square``
(d, a) and ``fourier`` (d = 2; A_cos, A_sin, a_cos, a_sin).  Data families:
``gaussian`` (width, mode, power), ``cartesian`` (d = 2; width, c = [c0, cx, cy])
and ``vnj`` (d = 3; n, j).  ``"regular": true`` multiplies mode k of a gaussian
or cartesian datum by r^{-alpha_k}.  Floats are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import angular, hardy, oracles
from . import propagator as prop
from .errors import ConfigError, SphadiError
from .radial import RadialGrid

COMMANDS = ("spectrum", "hardy", "kernel-scan", "propagate", "decay-scan", "oracle-check")
TOP_KEYS = {
    "command", "potential", "numerics", "datum", "times", "p", "weight_exp",
    "radial_power", "output_dir", "seed",
}
NUMERIC_DEFAULTS: dict[str, Any] = {
    "K_max": 20,
    "n_fourier": 32,
    "order": 16,
    "panel": 0.25,
    "R_data": None,
    "n_out_panels": 24,
    "quad_tol": 1e-7,
    "support_tol": 1e-14,
    "tail_tol": 1e-10,
    "n_trials": 100,
    "min_mode": 0,
    "eps": 0.01,
    "closed_form": False,
}
POTENTIAL_KEYS = {
    "free": {"d"},
    "aharonov_bohm": {"lambda", "d"},
    "inverse_square": {"d", "a"},
    "fourier": {"d", "A_cos", "A_sin", "a_cos", "a_sin"},
}
DATUM_KEYS = {
    "gaussian": {"width", "mode", "power", "regular"},
    "cartesian": {"width", "c", "regular"},
    "vnj": {"n", "j"},
}
TIME_COMMANDS = {"propagate", "decay-scan", "oracle-check"}


@dataclass
class ExperimentConfig:
    command: str
    potential: dict
    numerics: dict
    datum: dict
    times: list[float] = field(default_factory=list)
    p: float = math.inf
    weight_exp: float = 0.0
    radial_power: float | None = None
    output_dir: str = "out"
    seed: int = 0


# -- parsing ----------------------------------------------------------------


def _unknown(section: str, given, allowed) -> None:
    extra = sorted(set(given) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {section}: {', '.join(extra)}")


def _number(name: str, value, positive: bool = False, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    return int(value) if integer else float(value)


def _parse_potential(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("potential must be an object")
    kind = doc.get("type", "free")
    if kind not in POTENTIAL_KEYS:
        raise ConfigError(f"potential.type must be one of {sorted(POTENTIAL_KEYS)}, got {kind!r}")
    _unknown("potential", set(doc) - {"type"}, POTENTIAL_KEYS[kind])
    out = {"type": kind, "d": _number("potential.d", doc.get("d", 2), integer=True)}
    if out["d"] < 2:
        raise ConfigError("potential.d must be >= 2")
    if kind == "aharonov_bohm":
        if out["d"] != 2:
            raise ConfigError("aharonov_bohm requires d = 2")
        out["lambda"] = _number("potential.lambda", doc.get("lambda", 0.0))
    elif kind == "inverse_square":
        out["a"] = _number("potential.a", doc.get("a", 0.0))
    elif kind == "fourier":
        if out["d"] != 2:
            raise ConfigError("fourier potentials require d = 2")
        for key in ("A_cos", "A_sin", "a_cos", "a_sin"):
            vals = doc.get(key, [0.0] if key.endswith("cos") else [])
            if not isinstance(vals, list):
                raise ConfigError(f"potential.{key} must be a list")
            out[key] = [_number(f"potential.{key}", v) for v in vals]
    return out


def _parse_numerics(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("numerics must be an object")
    _unknown("numerics", doc, NUMERIC_DEFAULTS)
    out = dict(NUMERIC_DEFAULTS)
    out.update(doc)
    for key in ("K_max", "n_fourier", "order", "n_out_panels", "n_trials"):
        out[key] = _number(f"numerics.{key}", out[key], positive=key != "K_max", integer=True)
    if out["K_max"] < 2:
        raise ConfigError("numerics.K_max must be >= 2")
    out["min_mode"] = _number("numerics.min_mode", out["min_mode"], integer=True)
    if not 0 <= out["min_mode"] <= out["K_max"]:
        raise ConfigError("numerics.min_mode must lie in [0, K_max]")
    for key in ("panel", "quad_tol", "support_tol", "tail_tol", "eps"):
        out[key] = _number(f"numerics.{key}", out[key], positive=True)
    if out["R_data"] is not None:
        out["R_data"] = _number("numerics.R_data", out["R_data"], positive=True)
    if not isinstance(out["closed_form"], bool):
        raise ConfigError("numerics.closed_form must be true or false")
    return out


def _parse_datum(doc, d: int) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("datum must be an object")
    fam = doc.get("family", "gaussian")
    if fam not in DATUM_KEYS:
        raise ConfigError(f"datum.family must be one of {sorted(DATUM_KEYS)}, got {fam!r}")
    _unknown("datum", set(doc) - {"family"}, DATUM_KEYS[fam])
    out: dict[str, Any] = {"family": fam}
    if fam in ("gaussian", "cartesian"):
        out["width"] = _number("datum.width", doc.get("width", 0.5), positive=True)
        out["regular"] = doc.get("regular", False)
        if not isinstance(out["regular"], bool):
            raise ConfigError("datum.regular must be true or false")
    if fam == "gaussian":
        out["mode"] = _number("datum.mode", doc.get("mode", 0), integer=True)
        out["power"] = _number("datum.power", doc.get("power", 0.0))
        if out["mode"] < 0:
            raise ConfigError("datum.mode must be >= 0")
    elif fam == "cartesian":
        if d != 2:
            raise ConfigError("the cartesian datum family requires d = 2")
        c = doc.get("c", [1.0, 0.5, 0.3])
        if not isinstance(c, list) or len(c) != 3:
            raise ConfigError("datum.c must be a list [c0, cx, cy]")
        out["c"] = [_number("datum.c", v) for v in c]
    else:
        if d != 3:
            raise ConfigError("the vnj datum family requires d = 3")
        out["n"] = _number("datum.n", doc.get("n", 0), integer=True)
        out["j"] = _number("datum.j", doc.get("j", 1), integer=True)
        if out["n"] < 0 or out["j"] < 1:
            raise ConfigError("datum.n must be >= 0 and datum.j >= 1")
    return out


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"p must be a number or 'inf', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"p must be a number or 'inf', got {value!r}")
    return float(value)


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Validate a JSON configuration document and fill in defaults.

    Raises
    ------
    ConfigError
        For malformed JSON (with line and column), unknown keys, or values
        outside their admissible range.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed config at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _unknown("config", doc, TOP_KEYS)
    cmd = doc.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"config command {cmd!r} does not match command line {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    pot = _parse_potential(doc.get("potential", {"type": "free", "d": 2}))
    numerics = _parse_numerics(doc.get("numerics", {}))
    datum = _parse_datum(doc.get("datum", {"family": "gaussian"}), pot["d"])
    times = doc.get("times", [])
    if not isinstance(times, list):
        raise ConfigError("times must be a list")
    times = [_number("times", t) for t in times]
    if cmd in TIME_COMMANDS and not times:
        raise ConfigError(f"times must be nonempty for {cmd}")
    if cmd in ("decay-scan", "oracle-check") and any(t <= 0 for t in times):
        raise ConfigError(f"times must be > 0 for {cmd}")
    p = _parse_p(doc.get("p", "inf"))
    if cmd == "decay-scan" and not p >= 2:
        raise ConfigError(f"p >= 2 required for decay-scan, got p = {p:g}")
    if not p >= 1:
        raise ConfigError(f"p must be >= 1, got {p:g}")
    weight_exp = _number("weight_exp", doc.get("weight_exp", 0.0))
    rp = doc.get("radial_power")
    rp = None if rp is None else _number("radial_power", rp)
    out_dir = doc.get("output_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output_dir must be a nonempty string")
    seed = _number("seed", doc.get("seed", 0), integer=True)
    return ExperimentConfig(cmd, pot, numerics, datum, times, p, weight_exp, rp, out_dir, seed)


# -- building blocks ----------------------------------------------------------


def build_potential(cfg: ExperimentConfig) -> angular.AngularPotential:
    pot = cfg.potential
    kind, d = pot["type"], pot["d"]
    if kind == "free":
        return angular.AngularPotential.free(d)
    if kind == "aharonov_bohm":
        return angular.AngularPotential.aharonov_bohm(pot["lambda"])
    if kind == "inverse_square":
        return angular.AngularPotential.inverse_square(d, pot["a"])
    return angular.AngularPotential(
        d=2,
        A_cos=tuple(pot["A_cos"]),
        A_sin=tuple(pot["A_sin"]),
        a_cos=tuple(pot["a_cos"]),
        a_sin=tuple(pot["a_sin"]),
    )


def build_spectrum(cfg: ExperimentConfig, pot: angular.AngularPotential) -> angular.SpectralData:
    K = cfg.numerics["K_max"]
    kind = cfg.potential["type"]
    if pot.d >= 3:
        return angular.closed_spectrum(pot.d, pot.a_const, K)
    if cfg.numerics["closed_form"]:
        if kind == "aharonov_bohm":
            return angular.ab_spectrum(cfg.potential["lambda"], K)
        if kind in ("free", "inverse_square"):
            return angular.closed_spectrum(2, pot.a_const, K)
    return angular.spectrum(pot, K, n_fourier=cfg.numerics["n_fourier"])


def _kspec(cfg: ExperimentConfig) -> prop.KernelSpec:
    n = cfg.numerics
    return prop.KernelSpec(
        K_max=n["K_max"], tail_tol=n["tail_tol"], quad_tol=n["quad_tol"],
        support_tol=n["support_tol"],
    )


def build_datum(cfg: ExperimentConfig, spec: angular.SpectralData):
    """Initial field (normalized in L2) and, for vnj data, its VnjSpec."""
    n, dat, d = cfg.numerics, cfg.datum, spec.d
    fam = dat["family"]
    width = dat.get("width", 1.0)
    R = n["R_data"] or (12.0 * width if fam != "vnj" else 12.0)
    grid = RadialGrid.graded(R, d, panel=n["panel"], order=n["order"])
    vspec = None
    if fam == "gaussian":
        k = dat["mode"]
        if k > spec.K_max:
            raise ConfigError(f"datum.mode {k} exceeds K_max {spec.K_max}")
        r = grid.nodes
        f = prop.ModeField.single_mode(
            grid, spec, k, r ** dat["power"] * np.exp(-r * r / (4 * width * width))
        )
    elif fam == "cartesian":
        c0, cx, cy = dat["c"]
        nth = max(64, 4 * max(spec.n_fourier, 1))
        th, aw = prop.angular_quadrature(2, nth)
        R_, T_ = np.meshgrid(grid.nodes, th, indexing="ij")
        samples = (c0 + (cx * np.cos(T_) + cy * np.sin(T_)) * R_ / width) * np.exp(
            -R_**2 / (4 * width * width)
        )
        f = prop.decompose(samples, spec, grid, th, aw)
    else:
        k = dat["j"] - 1
        if k > spec.K_max:
            raise ConfigError(f"datum.j {dat['j']} exceeds the computed modes")
        vspec = oracles.resolve_vnj(dat["n"], float(spec.mus[k]), d, j=dat["j"])
        f = prop.ModeField.single_mode(grid, spec, k, oracles.vnj(vspec, grid.nodes) / vspec.norm)
    if dat.get("regular"):
        # r^{-alpha_k} on each mode puts the datum in the domain of every power of H
        f.coeffs *= grid.nodes[None, :] ** (-spec.alphas[:, None])
    nrm = f.norm()
    if not nrm > 0:
        raise ConfigError("datum vanishes on the grid")
    f.coeffs /= nrm
    return f, vspec


# -- output -------------------------------------------------------------------


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dump_json(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, np.ndarray):
        return dump_json(obj.tolist(), indent)
    return json.dumps(str(obj))


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _check(claim: str, statement: str, value: float, predicted: float, tol: float, passed: bool) -> dict:
    return {
        "claim": claim,
        "statement": statement,
        "value": value,
        "predicted": predicted,
        "tolerance": tol,
        "result": "PASS" if passed else "FAIL",
    }


# -- commands -----------------------------------------------------------------


def _cmd_spectrum(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    doc = {"potential": pot.to_dict(), "spectrum": spec.to_dict()}
    _write(out, "spectrum.json", dump_json(doc) + "\n")
    for k, (mu, lab) in enumerate(zip(spec.mus, spec.labels)):
        print(f"{k:4d}  {lab!s:>10}  {mu:.12g}")
    threshold = -0.25 * (pot.d - 2) ** 2
    return {"checks": [
        _check("form-bounded-below", "lowest angular eigenvalue is above the Hardy threshold",
               float(spec.mus[0]), threshold, 0.0, bool(spec.mus[0] >= threshold))
    ]}


def _cmd_hardy(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    n = cfg.numerics
    rep = hardy.verify_hardy(pot, spec, n["n_trials"], cfg.seed, min_mode=n["min_mode"], eps=n["eps"])
    _write(out, "hardy.json", dump_json(rep.to_dict()) + "\n")
    print(f"{'constant':>14} {'min quotient':>14} {'gap':>10}")
    print(f"{rep.constant:14.8f} {rep.min_quotient:14.8f} {rep.near_optimizer_gap:10.4%}")
    return {"checks": [
        _check("hardy-sharp-constant", "min Rayleigh quotient >= sharp constant - 1e-3",
               rep.min_quotient, rep.constant, 1e-3, rep.holds),
        _check("hardy-near-optimizer", "near-optimizer relative gap <= 5%",
               rep.near_optimizer_gap, 0.0, 0.05, 0 <= rep.near_optimizer_gap <= 0.05),
    ]}


def _cmd_kernel_scan(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    rep = prop.kernel_sup_scan(spec, _kspec(cfg))
    lines = ["s,sup_abs_K"] + [f"{_fmt(s)},{_fmt(v)}" for s, v in zip(rep.s, rep.sup_abs)]
    _write(out, "kernel_scan.csv", "\n".join(lines) + "\n")
    print(f"sup |K| = {rep.sup_val:.6g}; small-s slope = {rep.small_s_slope:.6g}")
    result = {"scan": rep.to_dict()}
    if rep.mu0 < 0:
        pred = -2 * rep.alpha0
        tol = 0.1 * abs(pred)
        result["checks"] = [_check(
            "kernel-blowup", "small-s slope of |K(se,se)| equals -2 alpha_0 within 10%",
            rep.small_s_slope, pred, tol, abs(rep.small_s_slope - pred) <= tol)]
    else:
        ok = math.isfinite(rep.sup_val) and rep.blowup_exponent is None and rep.small_s_slope > -0.05
        result["checks"] = [_check(
            "kernel-bounded", "sup |K| finite with no small-s blow-up",
            rep.sup_val, rep.sup_val, 0.05, ok)]
    if rep.max_tail > cfg.numerics["tail_tol"]:
        print(f"warning: kernel tail estimate {rep.max_tail:.2e} exceeds tail_tol; raise K_max",
              file=sys.stderr)
    return result


def _cmd_propagate(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    f0, _ = build_datum(cfg, spec)
    ks = _kspec(cfg)
    rows, drifts = [], []
    for t in cfg.times:
        grid = prop.evolution_grid(f0, t, ks, n_panels=cfg.numerics["n_out_panels"])
        ft = prop.propagate(f0, t, ks, out_grid=grid)
        drift = abs(ft.norm() / f0.norm() - 1)
        drifts.append(drift)
        rows.append({"t": t, "norm": ft.norm(), "drift": drift, "field": ft.to_dict()})
        print(f"t = {t:g}: L2 drift {drift:.3e}")
    _write(out, "propagate.json", dump_json({"datum": f0.to_dict(), "times": rows}) + "\n")
    worst = max(drifts)
    return {"checks": [_check("unitarity", "relative L2 drift <= 1e-6", worst, 0.0, 1e-6, worst <= 1e-6)]}


def _decay_prediction(cfg, spec, f0, radial_power):
    d = spec.d
    p = cfg.p
    k0 = f0.active_modes()[0]
    if radial_power is not None and radial_power != 0:
        pred = -1.5 + float(spec.alphas[k0])
        claim = "weighted-decay-lowest-mode" if k0 == 0 else "weighted-decay-removed-modes"
        return claim, f"weighted sup decay -3/2 + alpha_k with k = {k0}", pred, 0.1
    rate = 0.0 if math.isinf(p) else 1.0 / p
    pred = -d * (0.5 - rate)
    if d == 2:
        return "decay-2d", "L^p decay -2(1/2 - 1/p) for mu_1 > 0", pred, 0.05
    return "decay-full-rate", f"L^p decay -{d}(1/2 - 1/p)", pred, 0.1


def _cmd_decay_scan(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    f0, _ = build_datum(cfg, spec)
    rp = cfg.radial_power
    rep = prop.decay_scan(
        f0, sorted(cfg.times), cfg.p, cfg.weight_exp, rp or 0.0, _kspec(cfg),
        n_panels=cfg.numerics["n_out_panels"],
    )
    _write(out, "decay.csv", rep.to_csv(cfg.p, cfg.weight_exp))
    claim, stmt, pred, tol = _decay_prediction(cfg, spec, f0, rp)
    print(f"exponent {rep.exponent:.6f} (predicted {pred:.6f} +/- {tol:g})")
    return {
        "decay": rep.to_dict(),
        "checks": [_check(claim, stmt, rep.exponent, pred, tol, abs(rep.exponent - pred) <= tol)],
    }


def _cmd_oracle_check(cfg, out: Path) -> dict:
    pot = build_potential(cfg)
    spec = build_spectrum(cfg, pot)
    f0, vspec = build_datum(cfg, spec)
    ks = _kspec(cfg)
    checks, rows = [], []
    if vspec is not None:
        res = max(
            float(np.max(oracles.pde_residual(vspec, t, np.array([0.5, 1.0, 2.0]))))
            for t in (0.3, 1.0)
        )
        checks.append(_check("evolution-pde-residual", "|i psi_t - H psi| of the closed form",
                             res, 0.0, 1e-6, res <= 1e-6))

        def exact(t, r):
            return oracles.vnj_evolved(vspec, t, r)
    else:
        dat = cfg.datum
        if cfg.potential["type"] != "free" or dat["family"] != "gaussian" or dat["mode"] != 0 \
                or dat["power"] != 0:
            raise ConfigError("oracle-check needs a vnj datum, or a radial gaussian with the free potential")
        w = dat["width"]
        k0 = f0.active_modes()[0]
        scale = f0.coeffs[k0][0] / np.exp(-f0.grid.nodes[0] ** 2 / (4 * w * w))

        def exact(t, r):
            return scale * oracles.free_gaussian(t, r, spec.d, w)
    worst_err, worst_drift = 0.0, 0.0
    k0 = f0.active_modes()[0]
    for t in cfg.times:
        grid = prop.evolution_grid(f0, t, ks, n_panels=cfg.numerics["n_out_panels"])
        ft = prop.propagate(f0, t, ks, out_grid=grid)
        ex = exact(t, grid.nodes)
        err = math.sqrt(grid.integrate(np.abs(ft.coeffs[k0] - ex) ** 2) / grid.integrate(np.abs(ex) ** 2))
        drift = abs(ft.norm() / f0.norm() - 1)
        worst_err, worst_drift = max(worst_err, err), max(worst_drift, drift)
        rows.append({"t": t, "rel_l2_error": err, "drift": drift})
        print(f"t = {t:g}: relative L2 error {err:.3e}, drift {drift:.3e}")
    print(f"max relative error {worst_err:.3e}")
    checks.append(_check("evolution-oracle", "propagator matches the closed-form evolution",
                         worst_err, 0.0, 1e-6, worst_err <= 1e-6))
    checks.append(_check("unitarity", "relative L2 drift <= 1e-6", worst_drift, 0.0, 1e-6,
                         worst_drift <= 1e-6))
    doc: dict = {"rows": rows}
    if vspec is not None:
        doc["vnj"] = vspec.to_dict()
    return {"oracle": doc, "checks": checks}


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "hardy": _cmd_hardy,
    "kernel-scan": _cmd_kernel_scan,
    "propagate": _cmd_propagate,
    "decay-scan": _cmd_decay_scan,
    "oracle-check": _cmd_oracle_check,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured command; writes report.json and returns 0 on PASS."""
    out = Path(cfg.output_dir)
    result = _DISPATCH[cfg.command](cfg, out)
    checks = result.get("checks", [])
    report = {"command": cfg.command, "seed": cfg.seed, **result}
    report["status"] = "PASS" if all(c["result"] == "PASS" for c in checks) else "FAIL"
    _write(out, "report.json", dump_json(report) + "\n")
    print(f"{report['status']}: report written to {out / 'report.json'}")
    return 0 if report["status"] == "PASS" else 1


def _parser() -> argparse.ArgumentParser:
    defaults = ", ".join(f"{k}={v}" for k, v in NUMERIC_DEFAULTS.items())
    ap = argparse.ArgumentParser(
        prog="sphadi",
        description="Spectra, Hardy constants, kernel scans and dispersive decay "
        "for scaling-critical magnetic Schrodinger operators.",
        epilog=f"numerics defaults: {defaults}. Other defaults: p=inf, weight_exp=0, "
        "seed=0, output_dir=out. Exit codes: 2 config, 3 resolution, 4 feasibility, "
        "5 convergence, 1 failed check. SPHADI_THREADS caps worker threads.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="PRNG seed (overrides seed)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text, args.command)
        if args.out:
            cfg.output_dir = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        return run(cfg)
    except SphadiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
