"""Command-line experiment runner: ``unilab <subcommand> [--config FILE] [flags]``.

Every run resolves a parameter record (defaults, then the JSON config, then
flags), rejects unknown keys, computes, and writes ``report.json`` plus CSV
tables into ``--out``.  Exit codes: 0 success, 2 validation error (nothing is
written), 3 verification failure (the report is still written).  Errors are
printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from typing import Any, Callable

import numpy as np

from . import __version__
from .eigenfields import (
    field_example1,
    field_example3,
    field_kalish,
    fourier_coeff,
    eigen_residual,
    kalish_closed_form_z,
    kalish_exact_pairing,
    pairing_values,
    trig_poly_pairing,
)
from .ergodic import (
    BernoulliShift,
    DoublingMap,
    FactorMapConfig,
    Rotation,
    StepFunction,
    correlation,
    decay_bound,
    decay_certificate,
    intertwining_residual,
    pushforward,
)
from .errors import ConstructionFailed, UnilabError, ValidationError
from .operators import AdjointMultiplier, WeightedShift, orbit_vector, reproducing_kernel
from .rokhlin import (
    Cylinder,
    build_full_tower,
    build_small_tower,
    expansion_coefficients,
    initial_state,
    refine_step,
    verify_properties,
)
from .spaces import GridFunction, SeqVector, SpaceTag, dual_pair, max_abs_diff
from .universality import (
    TailRule,
    build_interleaved,
    check_theorem1,
    classify_bilateral,
    classify_unilateral,
    interleaved_shift,
    schedule_lower_bounds,
    shift_orbit,
)

SCHEMA = "unilab.report/1"
GLOBAL_KEYS = {"seed": 0, "format": "csv", "threads": 1}


class ConfigError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# config plumbing


def _merge(defaults: dict, given: dict, where: str = "") -> dict:
    """``defaults`` updated by ``given``; keys absent from ``defaults`` are rejected.

    Nested dict defaults are merged recursively; a default of ``None`` accepts
    any value.
    """
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {where + str(key)!r}")
        if isinstance(defaults[key], dict) and isinstance(value, dict) and defaults[key]:
            out[key] = _merge(defaults[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(float(obj.real)), _jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _complex(v: Any) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _vector(coords: dict, tag: SpaceTag) -> SeqVector:
    return SeqVector.from_dict({int(k): _complex(v) for k, v in coords.items()}, tag)


# ---------------------------------------------------------------------------
# shared builders


def _weight_function(spec: Any, side: str) -> Callable[[int], complex] | list:
    """Weights from a config value: a number, a list, or a ``{"kind": ...}`` record."""
    if isinstance(spec, (int, float)):
        c = complex(spec)
        return lambda n: c
    if isinstance(spec, list):
        vals = [_complex(v) for v in spec]
        if side == "bilateral":
            raise ConfigError('bilateral weights need {"kind": "list", "lo": ..., "values": [...]}')
        return vals
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"cannot read weights {spec!r}")
    kind = spec["kind"]
    allowed = {
        "constant": {"kind", "value"},
        "two-sided": {"kind", "positive", "negative"},
        "ratio": {"kind", "power"},
        "list": {"kind", "lo", "values"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown weight kind {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ConfigError(f"unknown config key(s) {sorted(extra)} for weights of kind {kind!r}")
    if kind == "constant":
        c = _complex(spec.get("value", 1.0))
        return lambda n: c
    if kind == "two-sided":
        a, b = _complex(spec.get("positive", 2.0)), _complex(spec.get("negative", 0.5))
        return lambda n: a if n >= 1 else b
    if kind == "ratio":
        s = float(spec.get("power", 1.0))
        if side == "bilateral":
            raise ConfigError("ratio weights are defined for unilateral shifts")
        return lambda n: ((n + 1) / n) ** s
    lo = int(spec.get("lo", 1))
    vals = [_complex(v) for v in spec["values"]]
    table = {lo + i: v for i, v in enumerate(vals)}
    if side == "unilateral":
        if lo != 1:
            raise ConfigError("unilateral weight lists start at index 1")
        return vals
    return table


def _named_shift(name: str, window: int) -> WeightedShift:
    if name == "2B":
        return WeightedShift.constant(2.0, window)
    if name == "B":
        return WeightedShift.constant(1.0, window)
    if name == "bilateral-2-half":
        return WeightedShift.from_function(lambda n: 2.0 if n >= 1 else 0.5, -window, window + 1, side="bilateral")
    raise ConfigError(f"unknown operator {name!r}")


def _observable(spec: dict, system: str) -> tuple[Any, float | None, float | None]:
    """``(observable, ||f||_2, ||f'||_inf)``; the norms are ``None`` when unknown."""
    kind = spec.get("kind")
    allowed = {"sin": {"kind", "freq"}, "cos": {"kind", "freq"}, "firstDigit": {"kind"}, "table": {"kind", "values"}}
    if kind not in allowed:
        raise ConfigError(f"unknown observable kind {kind!r}")
    extra = set(spec) - allowed[kind]
    if extra:
        raise ConfigError(f"unknown config key(s) {sorted(extra)} for observable {kind!r}")
    if kind in ("sin", "cos"):
        if system == "bernoulli":
            raise ConfigError("trigonometric observables need a system with real states")
        k = int(spec.get("freq", 1))
        fn = np.sin if kind == "sin" else np.cos
        return (lambda x, fn=fn, k=k: fn(2 * np.pi * k * x)), (1 / math.sqrt(2) if k else None), 2 * math.pi * abs(k)
    if kind == "firstDigit":
        f = StepFunction.first_digit()
        return f, f.l2, None
    f = StepFunction.from_table([_complex(v) for v in spec["values"]], bilateral=system == "bernoulli")
    return f, f.l2, None


def _system(name: str, bits: int):
    if name == "doubling":
        return DoublingMap(bits=bits)
    if name == "rotation":
        return Rotation()
    if name == "bernoulli":
        return BernoulliShift()
    raise ConfigError(f"unknown system {name!r}")


# ---------------------------------------------------------------------------
# subcommands: each returns (results, checks, csv files)


def run_classify(cfg: dict) -> tuple[dict, dict, dict]:
    side = cfg["side"]
    if side not in ("unilateral", "bilateral"):
        raise ConfigError(f"unknown side {side!r}")
    p = None if cfg["c0"] else float(cfg["p"])
    w = _weight_function(cfg["weights"], side)
    rules = cfg["tailRule"]
    if side == "unilateral":
        v = classify_unilateral(w, p, int(cfg["horizon"]), TailRule.parse(rules), cfg["c0Reading"])
    else:
        if isinstance(rules, list):
            if len(rules) != 2:
                raise ConfigError("bilateral tail rules are one rule or a [positive, negative] pair")
            trules = (TailRule.parse(rules[0]), TailRule.parse(rules[1]))
        else:
            trules = TailRule.parse(rules)
        v = classify_bilateral(w, p, int(cfg["horizon"]), trules, cfg["c0Reading"])
    results = v.to_json()
    checks = {}
    if cfg["expect"] is not None:
        checks["expectedVerdict"] = {"passed": v.universal.value == cfg["expect"], "expected": cfg["expect"]}
    return results, checks, {}


def run_check_criterion(cfg: dict) -> tuple[dict, dict, dict]:
    name = cfg["operator"]
    if name == "builder":
        b = cfg["builder"]
        S = interleaved_shift(build_interleaved(b["normsY"], b["normsYstar"], K=int(b["K"])))
    else:
        S = _named_shift(name, int(cfg["window"]))
    orbit = shift_orbit(S, int(cfg["nRange"]))
    rep = check_theorem1(
        orbit,
        S,
        basis_count=int(cfg["basisCount"]),
        f_max=int(cfg["fMax"]),
        max_f_size=int(cfg["maxFSize"]),
        tail_rule=TailRule.parse(cfg["tailRule"]),
    )
    results = rep.to_json()
    checks = {f"hyp{k.upper()}": {"passed": v == "pass", "verdict": v} for k, v in rep.verdicts.items()}
    rows = [[j, r] for j, r in rep.hypA]
    return results, checks, {"hypA.csv": _csv(["j", "residual"], rows)}


def _kernel_run(cfg: dict) -> tuple[dict, dict, dict]:
    coeffs = [_complex(c) for c in cfg["symbol"]]
    z = _complex(cfg["z"])
    N = int(cfg["N"])
    T = AdjointMultiplier(coeffs, N)
    k = reproducing_kernel(z, N)
    lhs = T.apply(k)
    eig = np.conj(T.symbol(z))
    hi = N + 1 - T.degree
    err = float(np.max(np.abs(lhs.window(0, hi) - eig * k.window(0, hi))))
    rows = [[n, lhs[n].real, lhs[n].imag, (eig * k[n]).real, (eig * k[n]).imag] for n in range(hi)]
    results = {"eigenvalue": eig, "coordinates": hi, "maxError": err}
    checks = {"kernelIdentity": {"passed": err <= float(cfg["tol"]), "maxError": err, "tol": float(cfg["tol"])}}
    return results, checks, {"kernel.csv": _csv(["n", "re_lhs", "im_lhs", "re_rhs", "im_rhs"], rows)}


def run_eigenfield(cfg: dict) -> tuple[dict, dict, dict]:
    name = cfg["field"]
    if name == "kernel":
        return _kernel_run(cfg)
    M, N = int(cfg["M"]), int(cfg["N"])
    alpha = _complex(cfg["alpha"])
    if name == "example1":
        field = field_example1(alpha, int(cfg["truncK"]), M)
    elif name == "example3":
        bump = None if cfg["bump"] is None else tuple(float(t) for t in cfg["bump"])
        field = field_example3(alpha, bump, int(cfg["truncK"]), M)
    elif name in ("kalishE", "kalishF"):
        field = field_kalish(M, renormalized=name == "kalishF")
    else:
        raise ConfigError(f"unknown field {name!r}")
    residual = eigen_residual(field)
    table = fourier_coeff(field, N, cfg["mode"])
    results: dict = {"residual": residual, "fourier": table.to_json()}
    checks: dict = {}
    if cfg["residualTol"] is not None:
        checks["residual"] = {"passed": residual <= float(cfg["residualTol"]), "tol": float(cfg["residualTol"])}
    files = {"fourier.csv": table.to_csv(int(cfg["csvColumns"]))}
    pairing = cfg["pairing"] or ("inner" if name.startswith("kalish") else "dual")
    if name.startswith("kalish"):
        k = int(cfg["functional"].get("fourier", 1)) if cfg["functional"] else 1
        f0 = GridFunction.from_callable(lambda t: np.exp(1j * k * t), M)
        grid = pairing_values(field, f0, pairing)
        exact = kalish_exact_pairing(M, k, name == "kalishF", pairing)
        lam = field.lambdas
        pure = (lam - np.conj(lam)) / (2j * np.pi)
        shifted = (2 - lam - np.conj(lam)) / (2j * np.pi)
        results["pairing"] = {
            "gridVsExact": float(np.max(np.abs(grid - exact))),
            "gridVsPureImaginaryFormula": float(np.max(np.abs(grid - pure))),
            "exactVsPureImaginaryFormula": float(np.max(np.abs(exact - pure))),
            "gridVsShiftedFormula": float(np.max(np.abs(grid - shifted))),
            "exactVsShiftedFormula": float(np.max(np.abs(exact - shifted))),
        }
        tp = trig_poly_pairing(field, f0, float(cfg["tol"]), pairing=pairing, values=exact)
        results["trigPoly"] = tp.to_json()
        if name == "kalishF" and cfg["mode"] == "analytic":
            near = [n for n in table.coeffs if abs(n) <= 8]
            results["closedFormVsTable"] = max(max_abs_diff(kalish_closed_form_z(n, M), table.coeffs[n]) for n in near)
    else:
        coords = cfg["functional"] or {"1": 1}
        zstar = _vector(coords, field.samples[0].tag)
        tp = trig_poly_pairing(field, zstar, float(cfg["tol"]), pairing=pairing)
        results["trigPoly"] = tp.to_json()
    return results, checks, files


def run_factor_map(cfg: dict) -> tuple[dict, dict, dict]:
    system = _system(cfg["system"], int(cfg["bits"]))
    f, _, _ = _observable(cfg["observable"], cfg["system"])
    S = _named_shift(cfg["operator"], int(cfg["window"]))
    fm = FactorMapConfig.from_shift(S, int(cfg["K"]), int(cfg["r"]), bool(cfg["invertibleForm"]))
    seed, count = int(cfg["seed"]), int(cfg["samples"])
    inter = intertwining_residual(f, fm, system, count, seed)
    push = pushforward(f, fm, system, count, seed + 1)
    mean, se = push.second_moment()
    balls = []
    for b in cfg["balls"]:
        center = _vector(b.get("center", {}), fm.tag)
        est, ci = push.ball_mass(center, float(b["radius"]))
        balls.append({"center": b.get("center", {}), "radius": float(b["radius"]), "mass": est, "wilson": list(ci)})
    cov_rows, covs = [], []
    for i, j in cfg["covariance"]:
        val, cse = push.covariance_pairing(SeqVector.basis(int(i), fm.tag), SeqVector.basis(int(j), fm.tag))
        covs.append({"i": int(i), "j": int(j), "value": val, "stdError": cse})
        cov_rows.append([int(i), int(j), val.real, val.imag, cse])
    results = {
        "intertwining": inter.to_json(),
        "orbitConsistency": fm.consistency(),
        "secondMoment": {"mean": mean, "stdError": se},
        "balls": balls,
        "covariance": covs,
    }
    checks = {"intertwining": {"passed": inter.max_residual <= inter.bound, "max": inter.max_residual, "bound": inter.bound}}
    files = {"covariance.csv": _csv(["i", "j", "re", "im", "stdError"], cov_rows)}
    return results, checks, files


def run_correlations(cfg: dict) -> tuple[dict, dict, dict]:
    f, f_l2, _ = _observable(cfg["f"], "doubling")
    g, _, g_lip = _observable(cfg["g"], "doubling")
    if cfg["fL2"] is not None:
        f_l2 = float(cfg["fL2"])
    if cfg["gLip"] is not None:
        g_lip = float(cfg["gLip"])
    lags = cfg["lags"]
    lags = list(range(int(lags) + 1)) if isinstance(lags, int) else [int(n) for n in lags]
    rows, out, ok = [], [], True
    for n in lags:
        rep = correlation(f, g, n, cfg["mode"], int(cfg["samples"]), int(cfg["seed"]) + n, cfg["points"])
        bound = decay_bound(n, f_l2, g_lip) if f_l2 is not None and g_lip is not None else None
        passed = None
        if bound is not None and n >= 1:
            passed = decay_certificate(rep, f_l2, g_lip, float(cfg["sigmas"])).passed
            ok &= passed
        rows.append([n, rep.value.real, rep.value.imag, rep.stdError, "" if bound is None else bound, "" if passed is None else passed])
        out.append({**rep.to_json(), "bound": bound, "passed": passed})
    checks = {"decay": {"passed": bool(ok), "sigmas": float(cfg["sigmas"])}}
    files = {"correlations.csv": _csv(["n", "re", "im", "stdError", "bound", "passed"], rows)}
    return {"lags": out, "fL2": f_l2, "gLip": g_lip}, checks, files


def run_build_interleaved(cfg: dict) -> tuple[dict, dict, dict]:
    K = int(cfg["K"])
    sysm = build_interleaved(
        cfg["normsY"], cfg["normsYstar"], float(cfg["baseBound"]), float(cfg["basisConstant"]), K, cfg["blockConstants"]
    )
    minimal = True
    for k in range(1, K + 1):
        first, second = schedule_lower_bounds(sysm, k)
        n = sysm.nk[k]
        minimal &= (n - 1 <= sysm.nk[k - 1]) or not (2.0 ** (n - 1) > max(first, second))
    blocks_ok = all(b <= 3 * 2.0**-k for k, b in enumerate(sysm.blockSums))
    rows = []
    for k in range(K + 1):
        rows.append(
            [
                k,
                sysm.nk[k],
                sysm.wk[k - 1] if k >= 1 else "",
                sysm.wpk[k],
                sysm.Ck[k],
                sysm.blockSums[k] if k < K else "",
                3 * 2.0**-k if k < K else "",
            ]
        )
    checks = {
        "blockBounds": {"passed": blocks_ok},
        "scheduleMinimal": {"passed": bool(minimal)},
        "totalSum": {"passed": sysm.totalSum <= 6.0, "value": sysm.totalSum},
    }
    files = {"schedule.csv": _csv(["k", "n_k", "w_k", "wp_k", "C_k", "blockSum", "blockBound"], rows)}
    return sysm.to_json(), checks, files


def run_rokhlin_step(cfg: dict) -> tuple[dict, dict, dict]:
    seed = int(cfg["seed"])
    bern = BernoulliShift()
    S = _named_shift(cfg["operator"], int(cfg["window"]))
    if S.side != "bilateral":
        raise ConfigError("the refinement step needs an invertible (bilateral) operator")
    crit = check_theorem1(shift_orbit(S, int(cfg["K"]) + 2), S, tail_rule=TailRule.parse("geometric:0.5"))
    if crit.functional is None:
        raise ConstructionFailed("no functional with finite pairing support was found")
    F = crit.hypB["F"]
    cp = [dual_pair(crit.functional, orbit_vector(S, -p)) for p in F]
    u = _vector(cfg["target"], S.tag)
    a = expansion_coefficients(u, S)
    sm, fu = cfg["small"], cfg["full"]
    small = build_small_tower(bern, int(sm["N"]), float(sm["eta"]), seed, int(cfg["towerSamples"]))
    d = max(abs(p) for p in F) if fu["d"] is None else int(fu["d"])
    full = build_full_tower(
        bern, int(fu["M"]), d, float(fu["eta"]), seed + 1, int(cfg["towerSamples"]), int(fu["maxMarker"])
    )
    st0 = initial_state(F, cp)
    st1 = refine_step(st0, a, small, full, Cylinder.parse(cfg["Q"]), float(cfg["gamma"]), float(cfg["r"]), seed + 2)
    fm = FactorMapConfig.from_shift(S, int(cfg["K"]), invertible_form=True)
    rep = verify_properties(st1, st0, fm, int(cfg["samples"]), seed + 3, crit.functional)
    split = st1.f.split
    results = {
        "F": F,
        "cp": cp,
        "target": {str(k): v for k, v in a.items()},
        "towers": {"small": small.to_json(), "full": full.to_json()},
        "families": {
            "base": split.parent.parent.to_json(),
            "towered": split.parent.to_json(),
            "split": split.to_json(),
        },
        "rangeSize": len(st1.range),
        "verification": rep.to_json(),
    }
    checks = {name: {"passed": p.passed} for name, p in ((p.name, p) for p in rep.properties)}
    checks["smallTowerDisjoint"] = {"passed": small.violations == 0, "violations": small.violations}
    checks["fullTowerDisjoint"] = {"passed": full.violations == 0, "violations": full.violations}
    rows = [[p.name, p.passed] for p in rep.properties]
    return results, checks, {"properties.csv": _csv(["property", "passed"], rows)}


SUBCOMMANDS: dict[str, tuple[Callable, dict, str]] = {
    "classify-weights": (
        run_classify,
        {
            "side": "unilateral",
            "weights": 2.0,
            "p": 2.0,
            "c0": False,
            "horizon": 64,
            "tailRule": "geometric:0.5",
            "c0Reading": "proof",
            "expect": None,
        },
        "Decide universality of a weighted shift from its weights",
    ),
    "check-criterion": (
        run_check_criterion,
        {
            "operator": "2B",
            "window": 64,
            "nRange": 20,
            "basisCount": 17,
            "fMax": 2,
            "maxFSize": 3,
            "tailRule": "geometric:0.5",
            "builder": {"normsY": 1.0, "normsYstar": 1.0, "K": 6},
        },
        "Check the orbit hypotheses (a), (b), (c) on a named operator",
    ),
    "eigenfield": (
        run_eigenfield,
        {
            "field": "example1",
            "alpha": 2.0,
            "truncK": 40,
            "M": 128,
            "N": 40,
            "mode": "grid",
            "bump": None,
            "pairing": None,
            "functional": None,
            "tol": 1e-9,
            "residualTol": None,
            "csvColumns": 8,
            "symbol": [0, 0, 1],
            "z": 0.5,
        },
        "Eigenvectorfield residuals, Fourier table and pairing check",
    ),
    "factor-map": (
        run_factor_map,
        {
            "system": "doubling",
            "bits": 64,
            "observable": {"kind": "firstDigit"},
            "operator": "2B",
            "window": 64,
            "K": 48,
            "r": 1,
            "invertibleForm": False,
            "samples": 10_000,
            "balls": [{"center": {}, "radius": 3.0}],
            "covariance": [[0, 1]],
        },
        "Factor map: intertwining, pushforward moments, ball masses, covariances",
    ),
    "correlations": (
        run_correlations,
        {
            "f": {"kind": "sin"},
            "g": {"kind": "sin"},
            "lags": 10,
            "mode": "montecarlo",
            "samples": 1_000_000,
            "points": None,
            "fL2": None,
            "gLip": None,
            "sigmas": 3.0,
        },
        "Doubling-map correlations with the exponential decay bound",
    ),
    "build-interleaved": (
        run_build_interleaved,
        {"normsY": 1.0, "normsYstar": 1.0, "baseBound": 1.0, "basisConstant": 1.0, "K": 6, "blockConstants": None},
        "Weights and block schedule of the interleaved shift",
    ),
    "rokhlin-step": (
        run_rokhlin_step,
        {
            "operator": "bilateral-2-half",
            "window": 40,
            "target": {"0": 1.0, "1": 0.5},
            "small": {"N": 8, "eta": 0.1},
            "full": {"M": 8, "d": None, "eta": 0.1, "maxMarker": 12},
            "Q": {"0": 1},
            "gamma": 1e-3,
            "r": 0.05,
            "K": 8,
            "samples": 10_000,
            "towerSamples": 100_000,
        },
        "Towers, scalar families, one refinement step and its verification",
    ),
}

# flags that map onto config keys: (flag, key, type)
FLAG_KEYS = {
    "classify-weights": [("--p", "p", float), ("--c0", "c0", None), ("--horizon", "horizon", int), ("--tail-rule", "tailRule", str)],
    "eigenfield": [("--field", "field", str), ("--M", "M", int), ("--mode", "mode", str)],
    "correlations": [("--mode", "mode", str), ("--samples", "samples", int)],
    "factor-map": [("--samples", "samples", int), ("--K", "K", int)],
    "build-interleaved": [("--K", "K", int)],
    "check-criterion": [("--operator", "operator", str)],
    "rokhlin-step": [("--samples", "samples", int)],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(ConfigError(message), 2)


def _fail(exc: BaseException, code: int):
    payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exitCode": code}}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    raise SystemExit(code)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unilab", description="Universal-operator numerics laboratory")
    parser.add_argument("--version", action="version", version=f"unilab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, _, helptext) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.add_argument("--config", help="JSON file with parameters")
        p.add_argument("--out", default="unilab-out", help="output directory (default: unilab-out)")
        p.add_argument("--format", choices=["csv", "json"], help="csv: report.json plus tables; json: report.json only")
        p.add_argument("--seed", type=int, help="global seed (default 0)")
        p.add_argument("--threads", type=int, help="accepted for compatibility; runs are single-threaded")
        p.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
        p.add_argument("--set", action="append", default=[], metavar="KEY=JSON", help="override one config key")
        for flag, key, typ in FLAG_KEYS.get(name, []):
            if typ is None:
                p.add_argument(flag, dest=f"flag_{key}", action="store_true", default=None)
            else:
                p.add_argument(flag, dest=f"flag_{key}", type=typ)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then ``--set`` and dedicated flags."""
    _, defaults, _ = SUBCOMMANDS[command]
    full_defaults = {**defaults, **GLOBAL_KEYS}
    given: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                given = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(given, dict):
            raise ConfigError("the config file must hold a JSON object")
    cfg = _merge(full_defaults, given)
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=JSON, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg = _merge(full_defaults, {**cfg, key: value})
    for flag, key, _ in FLAG_KEYS.get(command, []):
        v = getattr(args, f"flag_{key}", None)
        if v is not None:
            cfg[key] = v
    for key in ("seed", "format", "threads"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise ConfigError("threads must be a positive integer")
    return cfg


def run(command: str, cfg: dict, timings: bool = False) -> tuple[dict, dict[str, str], bool]:
    """Compute a report; returns ``(report, csv files, verification passed)``."""
    fn = SUBCOMMANDS[command][0]
    t0 = time.perf_counter()
    results, checks, files = fn(cfg)
    passed = all(c["passed"] for c in checks.values())
    report = {
        "schema": SCHEMA,
        "toolVersion": __version__,
        "subcommand": command,
        "config": cfg,
        "results": results,
        "verification": {"passed": passed, "checks": checks},
    }
    if timings:
        report["timings"] = {"totalSeconds": time.perf_counter() - t0}
    return _jsonable(report), files, passed


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        report, files, passed = run(args.command, cfg, args.timings)
    except ConstructionFailed as exc:
        _fail(exc, 3)
    except (ValidationError, ValueError, TypeError, KeyError) as exc:
        _fail(exc, 2)
    except UnilabError as exc:
        _fail(exc, 2)
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "report.json"), json.dumps(report, indent=2, sort_keys=True) + "\n")
    if cfg["format"] == "csv":
        for name, text in sorted(files.items()):
            _write_atomic(os.path.join(args.out, name), text)
    summary = {"subcommand": args.command, "out": args.out, "passed": passed}
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0 if passed else 3


if __name__ == "__main__":
    raise SystemExit(main())
