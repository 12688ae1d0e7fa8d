"""Command-line front end: scenario configs, runs, and verification.

Subcommands:

* ``simulate`` - generate information paths and write them as CSV
* ``price``    - price the configured payoff along simulated paths
* ``sweep``    - repeat a pricing run over a grid of sigma / m / r values
* ``verify``   - run the statistical/numerical invariant suite

Scenario configs are JSON documents with sections ``model``, ``grid``,
``factor``, ``payoff``, ``simulation`` and ``output``; parsing is strict
(unknown fields are errors) and serialization echoes every float in its
shortest round-trip decimal form, so parse -> serialize -> parse is the
identity on canonical configs.  Exit codes: 0 success, 1 check/run
failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, stats

from . import closed_form, path_sim, pricing_kernel, special_math
from .errors import ConfigError, VgInfoError
from .pricing_kernel import (
    Atom,
    Exponential,
    MarketFactorDistribution,
    ModelParams,
    Normal,
    Payoff,
    Tabulated,
    Uniform,
)
from .stats_validation import (
    CheckResult,
    correlation_zero_test,
    ks_test,
    martingale_flatness,
    mean_check,
    variance_check,
)

__all__ = [
    "ScenarioConfig",
    "RunReport",
    "parse_config",
    "serialize_config",
    "load_config",
    "cmd_simulate",
    "cmd_price",
    "cmd_sweep",
    "cmd_verify",
    "main",
]

#: environment variable overriding the configured output directory
OUT_DIR_ENV = "VGINFO_OUT_DIR"

DEFAULT_VERIFY_SEED = 20260825


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: model constants, grid, prior, payoff, run sizes."""

    model: ModelParams
    n_steps: int
    factor: MarketFactorDistribution
    payoff: Payoff
    n_paths: int
    seed: int
    out_dir: str
    formats: tuple


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _as_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"must be an object, got {type(value).__name__}")
    return value


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(path, f"must be an array, got {type(value).__name__}")
    return value


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(_join(path, key), "missing required field")
    return mapping[key]


def _check_keys(mapping: dict, allowed: Sequence[str], path: str) -> None:
    extra = sorted(set(mapping) - set(allowed))
    if extra:
        raise ConfigError(path, f"unknown fields: {', '.join(extra)}")


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(path, "must be finite")
    return out


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"must be an integer, got {value!r}")
    return value


_COMPONENT_FIELDS = {
    "atom": ("type", "weight", "x"),
    "uniform": ("type", "weight", "a", "b"),
    "normal": ("type", "weight", "mu", "nu"),
    "exponential": ("type", "weight", "lam"),
    "tabulated": ("type", "weight", "xs", "density"),
}


def _parse_component(obj, path: str):
    m = _as_mapping(obj, path)
    ctype = _require(m, "type", path)
    if ctype not in _COMPONENT_FIELDS:
        raise ConfigError(_join(path, "type"), f"unknown component type {ctype!r}")
    _check_keys(m, _COMPONENT_FIELDS[ctype], path)
    weight = _as_number(_require(m, "weight", path), _join(path, "weight"))
    try:
        if ctype == "atom":
            comp = Atom(_as_number(_require(m, "x", path), _join(path, "x")))
        elif ctype == "uniform":
            comp = Uniform(
                _as_number(_require(m, "a", path), _join(path, "a")),
                _as_number(_require(m, "b", path), _join(path, "b")),
            )
        elif ctype == "normal":
            comp = Normal(
                _as_number(_require(m, "mu", path), _join(path, "mu")),
                _as_number(_require(m, "nu", path), _join(path, "nu")),
            )
        elif ctype == "exponential":
            comp = Exponential(_as_number(_require(m, "lam", path), _join(path, "lam")))
        else:
            xs = [_as_number(v, _join(path, "xs")) for v in _as_list(_require(m, "xs", path), _join(path, "xs"))]
            dens = [
                _as_number(v, _join(path, "density"))
                for v in _as_list(_require(m, "density", path), _join(path, "density"))
            ]
            comp = Tabulated(np.asarray(xs), np.asarray(dens))
    except VgInfoError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc
    return weight, comp


def _parse_payoff(obj, path: str) -> Payoff:
    m = _as_mapping(obj, path)
    kind = _require(m, "kind", path)
    try:
        if kind == "identity":
            _check_keys(m, ("kind",), path)
            return Payoff.identity()
        if kind == "exponential_scale":
            _check_keys(m, ("kind", "q"), path)
            return Payoff.exponential_scale(_as_number(_require(m, "q", path), _join(path, "q")))
        if kind == "digital":
            _check_keys(m, ("kind", "K"), path)
            return Payoff.digital(_as_number(_require(m, "K", path), _join(path, "K")))
    except VgInfoError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(
        _join(path, "kind"),
        f"must be one of identity, exponential_scale, digital (custom payoffs are API-only), got {kind!r}",
    )


_FORMATS = ("csv", "json")


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    root = _as_mapping(doc, "config")
    _check_keys(root, ("model", "grid", "factor", "payoff", "simulation", "output"), "config")

    model_doc = _as_mapping(_require(root, "model", ""), "model")
    _check_keys(model_doc, ("sigma", "m", "r", "T"), "model")
    try:
        model = ModelParams(
            sigma=_as_number(_require(model_doc, "sigma", "model"), "model.sigma"),
            m=_as_number(_require(model_doc, "m", "model"), "model.m"),
            r=_as_number(_require(model_doc, "r", "model"), "model.r"),
            T=_as_number(_require(model_doc, "T", "model"), "model.T"),
        )
    except VgInfoError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("model", str(exc)) from exc

    grid_doc = _as_mapping(_require(root, "grid", ""), "grid")
    _check_keys(grid_doc, ("n_steps",), "grid")
    n_steps = _as_int(_require(grid_doc, "n_steps", "grid"), "grid.n_steps")
    if n_steps < 1:
        raise ConfigError("grid.n_steps", f"must be >= 1, got {n_steps}")

    factor_doc = _as_mapping(_require(root, "factor", ""), "factor")
    _check_keys(factor_doc, ("components",), "factor")
    comp_list = _as_list(_require(factor_doc, "components", "factor"), "factor.components")
    if not comp_list:
        raise ConfigError("factor.components", "must contain at least one component")
    pairs = [
        _parse_component(obj, f"factor.components[{i}]") for i, obj in enumerate(comp_list)
    ]
    try:
        factor = MarketFactorDistribution(tuple(pairs))
    except VgInfoError as exc:
        raise ConfigError("factor.components", str(exc)) from exc

    payoff = _parse_payoff(_require(root, "payoff", ""), "payoff")

    sim_doc = _as_mapping(_require(root, "simulation", ""), "simulation")
    _check_keys(sim_doc, ("n_paths", "seed"), "simulation")
    n_paths = _as_int(_require(sim_doc, "n_paths", "simulation"), "simulation.n_paths")
    if n_paths < 1:
        raise ConfigError("simulation.n_paths", f"must be >= 1, got {n_paths}")
    seed = _as_int(_require(sim_doc, "seed", "simulation"), "simulation.seed")
    if not 0 <= seed < 2**64:
        raise ConfigError("simulation.seed", "must be a 64-bit unsigned integer")

    out_doc = _as_mapping(root.get("output", {}), "output")
    _check_keys(out_doc, ("directory", "formats"), "output")
    out_dir = out_doc.get("directory", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.directory", "must be a non-empty string")
    formats = out_doc.get("formats", ["csv"])
    formats = tuple(_as_list(formats, "output.formats"))
    for f in formats:
        if f not in _FORMATS:
            raise ConfigError("output.formats", f"unknown format {f!r} (known: csv, json)")
    if "csv" not in formats:
        raise ConfigError("output.formats", "must include 'csv'")

    return ScenarioConfig(
        model=model, n_steps=n_steps, factor=factor, payoff=payoff,
        n_paths=n_paths, seed=seed, out_dir=out_dir, formats=formats,
    )


def _component_to_dict(weight: float, comp) -> dict:
    if isinstance(comp, Atom):
        return {"type": "atom", "weight": weight, "x": comp.x}
    if isinstance(comp, Uniform):
        return {"type": "uniform", "weight": weight, "a": comp.a, "b": comp.b}
    if isinstance(comp, Normal):
        return {"type": "normal", "weight": weight, "mu": comp.mu, "nu": comp.nu}
    if isinstance(comp, Exponential):
        return {"type": "exponential", "weight": weight, "lam": comp.lam}
    if isinstance(comp, Tabulated):
        return {
            "type": "tabulated",
            "weight": weight,
            "xs": [float(v) for v in comp.xs],
            "density": [float(v) for v in comp.density],
        }
    raise ConfigError("factor.components", f"unserializable component {type(comp).__name__}")


def _payoff_to_dict(payoff: Payoff) -> dict:
    if payoff.kind == "identity":
        return {"kind": "identity"}
    if payoff.kind == "exponential_scale":
        return {"kind": "exponential_scale", "q": payoff.q}
    if payoff.kind == "digital":
        return {"kind": "digital", "K": payoff.K}
    raise ConfigError("payoff.kind", "custom payoffs cannot be serialized to a config")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "model": {"sigma": cfg.model.sigma, "m": cfg.model.m, "r": cfg.model.r, "T": cfg.model.T},
        "grid": {"n_steps": cfg.n_steps},
        "factor": {"components": [_component_to_dict(w, c) for w, c in cfg.factor.components]},
        "payoff": _payoff_to_dict(cfg.payoff),
        "simulation": {"n_paths": cfg.n_paths, "seed": cfg.seed},
        "output": {"directory": cfg.out_dir, "formats": list(cfg.formats)},
    }


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical JSON form; floats use shortest round-trip representation."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# run report
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    """Aggregated check results plus per-stage wall-clock timings."""

    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [c.line() for c in self.checks]
        if self.timings:
            lines.append(
                "timings: " + ", ".join(f"{k}={v:.2f}s" for k, v in self.timings.items())
            )
        lines.append(f"OVERALL {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _out_dir(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _simulate_bundle(cfg: ScenarioConfig, n_threads: Optional[int]) -> path_sim.PathBundle:
    grid = path_sim.TimeGrid(cfg.model.T, cfg.n_steps)
    return path_sim.simulate_paths(
        grid, cfg.model.m, cfg.model.sigma, cfg.factor, cfg.n_paths, cfg.seed, n_threads
    )


def _write_run_json(outdir: Path, command: str, cfg: ScenarioConfig, files: list) -> Path:
    record = {
        "command": command,
        "config": config_to_dict(cfg),
        "outputs": [f.name for f in files],
    }
    path = outdir / "run.json"
    path.write_text(json.dumps(record, indent=2) + "\n")
    return path


def cmd_simulate(cfg: ScenarioConfig, n_threads: Optional[int] = None) -> list:
    """Simulate paths and write paths.csv (plus run.json when configured)."""
    bundle = _simulate_bundle(cfg, n_threads)
    outdir = _out_dir(cfg)
    csv_path = outdir / "paths.csv"
    path_sim.write_paths_csv(bundle, str(csv_path))
    files = [csv_path]
    if "json" in cfg.formats:
        files.append(_write_run_json(outdir, "simulate", cfg, files))
    return files


def _price_bundle(cfg: ScenarioConfig, bundle, force_general: bool) -> np.ndarray:
    spec = None if force_general else closed_form.match_closed_form(cfg.factor, cfg.payoff)
    if spec is not None:
        return closed_form.price_path_closed(spec, bundle, cfg.model)
    return pricing_kernel.price_path(cfg.payoff, cfg.factor, bundle, cfg.model)


def _write_price_csv(bundle, prices: np.ndarray, path: Path) -> None:
    nodes = bundle.grid.nodes
    with open(path, "w", newline="\n") as fh:
        fh.write("path_id,k,t,info,price\n")
        for i in range(bundle.n_paths):
            for k in range(nodes.size):
                fh.write(
                    f"{i},{k},{float(nodes[k])!r},{float(bundle.info[i, k])!r},"
                    f"{float(prices[i, k])!r}\n"
                )


def cmd_price(
    cfg: ScenarioConfig, n_threads: Optional[int] = None, force_general: bool = False
) -> list:
    """Price the configured payoff along simulated paths; write prices.csv.

    Uses the matching closed form when the (factor, payoff) pair is one of
    the analytic cases, unless ``force_general`` routes everything through
    the quadrature kernel.
    """
    bundle = _simulate_bundle(cfg, n_threads)
    prices = _price_bundle(cfg, bundle, force_general)
    outdir = _out_dir(cfg)
    csv_path = outdir / "prices.csv"
    _write_price_csv(bundle, prices, csv_path)
    files = [csv_path]
    if "json" in cfg.formats:
        files.append(_write_run_json(outdir, "price", cfg, files))
    return files


_SWEEP_AXES = ("sigma", "m", "r")


def cmd_sweep(
    cfg: ScenarioConfig,
    axis: str,
    values: Sequence[float],
    n_threads: Optional[int] = None,
    force_general: bool = False,
) -> list:
    """Re-run pricing for each value of a model parameter; write sweep.csv.

    All runs share the configured seed, so the underlying randomness is
    common across the sweep and differences are attributable to the axis.
    """
    if axis not in _SWEEP_AXES:
        raise ConfigError("axis", f"must be one of {', '.join(_SWEEP_AXES)}, got {axis!r}")
    if not values:
        raise ConfigError("values", "must supply at least one value")
    outdir = _out_dir(cfg)
    csv_path = outdir / "sweep.csv"
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("axis,value,path_id,k,t,info,price\n")
        for value in values:
            try:
                model = replace(cfg.model, **{axis: float(value)})
            except VgInfoError as exc:
                raise ConfigError("values", f"{axis}={value!r}: {exc}") from exc
            run_cfg = replace(cfg, model=model)
            bundle = _simulate_bundle(run_cfg, n_threads)
            prices = _price_bundle(run_cfg, bundle, force_general)
            nodes = bundle.grid.nodes
            v_repr = repr(float(value))
            for i in range(bundle.n_paths):
                for k in range(nodes.size):
                    fh.write(
                        f"{axis},{v_repr},{i},{k},{float(nodes[k])!r},"
                        f"{float(bundle.info[i, k])!r},{float(prices[i, k])!r}\n"
                    )
    files = [csv_path]
    if "json" in cfg.formats:
        files.append(_write_run_json(outdir, "sweep", cfg, files))
    return files


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

def _sub_bridge_values(bundle, ka: int, k: int, kb: int) -> np.ndarray:
    """VG sub-bridge over grid interval [ka, kb] evaluated at node k."""
    g = bundle.gamma
    sqrt_g_T = np.sqrt(g[:, -1])
    w = bundle.vgb * sqrt_g_T[:, None] + bundle.bridge * bundle.w_terminal[:, None]
    dg = g[:, kb] - g[:, ka]
    ratio = (g[:, k] - g[:, ka]) / dg
    return (w[:, k] - w[:, ka] - ratio * (w[:, kb] - w[:, ka])) / np.sqrt(dg)


def _bound_check(name: str, statistic: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name, statistic=statistic, threshold=threshold,
        passed=statistic <= threshold, detail=detail,
    )


def _negative_control(name: str, inner: CheckResult) -> CheckResult:
    return CheckResult(
        name=name, statistic=inner.statistic, threshold=inner.threshold,
        passed=not inner.passed, detail="must fail: " + (inner.detail or inner.name),
    )


def _verify_special(checks: list) -> None:
    zs = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]
    worst = 0.0
    for z in zs:
        ref, _ = integrate.quad(lambda u: math.exp(-u) / u, z, np.inf)
        worst = max(worst, abs(special_math.exp_integral_e1(z) - ref) / abs(ref))
    checks.append(_bound_check("e1-vs-quadrature", worst, 1e-8, f"z in {zs}"))

    ms = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    ab = special_math.LevyInterval(1.0, 2.0)
    cd = special_math.LevyInterval(1.5, 2.5)
    ratios = [special_math.levy_ratio(m, ab, cd) for m in ms]
    checks.append(
        CheckResult(
            name="levy-ratio-exceeds-one",
            statistic=min(ratios),
            threshold=1.0,
            passed=min(ratios) > 1.0,
            detail="nearer interval dominates",
        )
    )
    diffs = np.diff(ratios)
    checks.append(
        CheckResult(
            name="levy-ratio-increasing-in-m",
            statistic=float(np.min(diffs)),
            threshold=0.0,
            passed=bool(np.all(diffs > 0.0)),
            detail="m grid 0.25..16",
        )
    )


def _verify_paths(checks: list, seed: int, n_paths: int, n_threads: Optional[int], k_sigma: float) -> None:
    m, T = 100.0, 1.0
    grid = path_sim.TimeGrid(T, 4)
    prior = MarketFactorDistribution.from_atoms([(0.4, 0.0), (0.6, 1.0)])
    bundle = path_sim.simulate_paths(grid, m, 1.0, prior, n_paths, seed, n_threads)
    k_half = grid.index_of(0.5)
    b_samp = bundle.bridge[:, k_half]
    mean_t, var_t = special_math.bridge_moments(m, 0.5, T)
    checks.append(mean_check("bridge-mean@t=0.5", b_samp, mean_t, k=k_sigma).result())
    checks.append(variance_check("bridge-variance@t=0.5", b_samp, var_t, k=k_sigma).result())
    checks.append(
        variance_check(
            "vg-bridge-variance@t=0.5",
            bundle.vgb[:, k_half],
            special_math.vg_bridge_variance(m, 0.5, T),
            k=k_sigma,
        ).result()
    )
    beta_law = stats.beta(m * 0.5, m * (T - 0.5))
    checks.append(ks_test(b_samp, beta_law.cdf, name="bridge-beta-ks"))
    wrong = stats.beta(50.0 * 0.5, 50.0 * (T - 0.5))
    checks.append(
        _negative_control("negative-control-wrong-m-ks", ks_test(b_samp, wrong.cdf, name="wrong-m"))
    )

    worst = 0.0
    for s, t in ((0.25, 0.5), (0.5, 0.75), (0.25, 0.75)):
        res = path_sim.decomposition_checks(bundle, s, t)
        worst = max(worst, res.vg_bridge, res.information)
    checks.append(_bound_check("decomposition-residuals", worst, 1e-10, "3 (s,t) pairs"))

    checks.append(
        correlation_zero_test(
            bundle.vgb[:, k_half], bundle.gamma[:, -1], k=k_sigma,
            name="vg-bridge-vs-terminal-gamma-corr",
        )
    )
    left = _sub_bridge_values(bundle, 0, 1, 2)
    right = _sub_bridge_values(bundle, 2, 3, 4)
    checks.append(
        correlation_zero_test(left, right, k=k_sigma, name="disjoint-sub-bridge-corr")
    )


def _verify_pricing(checks: list) -> None:
    mix = MarketFactorDistribution(
        (
            (0.25, Atom(0.0)),
            (0.25, Uniform(0.0, 1.0)),
            (0.25, Normal(0.0, 1.0)),
            (0.25, Exponential(1.0)),
        )
    )
    worst = 0.0
    for xi in (-3.0, 0.0, 2.0):
        for b in (0.3, 0.9):
            st = pricing_kernel.MarketState(t=0.4, T=1.0, xi=xi, bridge=b, sigma=2.0, r=0.05)
            worst = max(worst, abs(pricing_kernel.posterior(mix, st).total_mass() - 1.0))
    checks.append(_bound_check("posterior-normalization", worst, 1e-10, "6 states, 4-part mixture"))

    two = MarketFactorDistribution.from_atoms([(0.4, 0.0), (0.6, 1.0)])
    st = pricing_kernel.MarketState(t=0.5, T=1.0, xi=0.5, bridge=0.5, sigma=1.0, r=0.0)
    target = 0.6 * math.exp(0.5) / (0.4 + 0.6 * math.exp(0.5))
    got = pricing_kernel.price(Payoff.identity(), two, st)
    checks.append(_bound_check("two-atom-posterior-price", abs(got - target), 1e-12))

    st_r = pricing_kernel.MarketState(t=0.4, T=1.0, xi=1.0, bridge=0.6, sigma=2.0, r=0.05)
    unit = pricing_kernel.price(Payoff.custom(lambda x: 1.0), mix, st_r)
    checks.append(
        _bound_check("unit-payoff-discount", abs(unit - math.exp(-0.05 * 0.6)), 1e-10)
    )

    specs = [
        closed_form.BinaryBondSpec(p0=0.4, p1=0.6),
        closed_form.RecoveryBondSpec(p0=0.4, p1=0.6, a=0.0, b=0.5, c=1.0),
        closed_form.LogNormalSpec(mu=0.1, nu=0.8, q=2.0),
        closed_form.ExponentialSpec(lam=1.5),
    ]
    worst = 0.0
    for spec in specs:
        prior, payoff = spec.implied_prior(), spec.implied_payoff()
        for xi in (-2.0, 0.5, 3.0):
            for b in (0.05, 0.5, 0.95):
                st = pricing_kernel.MarketState(t=0.4, T=1.0, xi=xi, bridge=b, sigma=2.0, r=0.05)
                cf = closed_form.closed_form_price(spec, st)
                kn = pricing_kernel.price(payoff, prior, st)
                worst = max(worst, abs(cf - kn) / max(abs(cf), 1e-300))
    checks.append(_bound_check("closed-form-vs-kernel", worst, 1e-8, "4 specs x 9 states"))


def _verify_martingale(checks: list, seed: int, n_threads: Optional[int], k_sigma: float) -> None:
    grid = path_sim.TimeGrid(1.0, 100)
    prior = MarketFactorDistribution.from_atoms([(0.4, 0.0), (0.6, 1.0)])
    params = ModelParams(sigma=1.0, m=100.0, r=0.0, T=1.0)
    bundle = path_sim.simulate_paths(grid, params.m, params.sigma, prior, 100_000, seed, n_threads)
    spec = closed_form.BinaryBondSpec(p0=0.4, p1=0.6)
    prices = closed_form.price_path_closed(spec, bundle, params)
    checks.append(martingale_flatness(prices, params.r, grid, k=k_sigma, name="binary-bond-martingale"))
    drifted = prices + 0.01 * grid.nodes[None, :]
    checks.append(
        _negative_control(
            "negative-control-injected-drift",
            martingale_flatness(drifted, params.r, grid, k=k_sigma, name="drift"),
        )
    )
    k_half = grid.index_of(0.5)
    mean_t, var_t = special_math.bridge_moments(params.m, 0.5, params.T)
    checks.append(
        mean_check("bridge-mean@t=0.5 (full)", bundle.bridge[:, k_half], mean_t, k=k_sigma).result()
    )
    checks.append(
        variance_check(
            "bridge-variance@t=0.5 (full)", bundle.bridge[:, k_half], var_t, k=k_sigma
        ).result()
    )


def cmd_verify(
    level: str = "quick",
    seed: int = DEFAULT_VERIFY_SEED,
    n_threads: Optional[int] = None,
    k_sigma: float = 4.0,
) -> RunReport:
    """Run the module invariant suites; quick < 60 s, full adds 10^5-path checks."""
    if level not in ("quick", "full"):
        raise ConfigError("level", f"must be 'quick' or 'full', got {level!r}")
    if not (k_sigma > 0.0 and math.isfinite(k_sigma)):
        raise ConfigError("k_sigma", f"must be a positive number, got {k_sigma}")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    report = RunReport()

    t0 = time.perf_counter()
    _verify_special(report.checks)
    report.timings["special"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    _verify_paths(report.checks, seed, 20_000, n_threads, k_sigma)
    report.timings["paths"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    _verify_pricing(report.checks)
    report.timings["pricing"] = time.perf_counter() - t0

    if level == "full":
        t0 = time.perf_counter()
        _verify_martingale(report.checks, seed, n_threads, k_sigma)
        report.timings["martingale"] = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="scenario config JSON path")
    parser.add_argument("--seed", type=int, default=None, help="override simulation.seed")
    parser.add_argument(
        "--threads", type=int, default=None, help="worker threads (default: all cores)"
    )
    parser.add_argument("--out", default=None, help="override output directory")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vginfo",
        description="Simulation and pricing for variance-gamma information models.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate information paths to CSV")
    _add_common(sim)

    pr = sub.add_parser("price", help="price the configured payoff along paths")
    _add_common(pr)
    pr.add_argument(
        "--force-general-kernel", action="store_true",
        help="bypass closed forms and price via quadrature",
    )

    sw = sub.add_parser("sweep", help="repeat pricing over a parameter grid")
    _add_common(sw)
    sw.add_argument("--axis", required=True, choices=_SWEEP_AXES, help="parameter to sweep")
    sw.add_argument("--values", required=True, help="comma-separated parameter values")
    sw.add_argument(
        "--force-general-kernel", action="store_true",
        help="bypass closed forms and price via quadrature",
    )

    vf = sub.add_parser("verify", help="run the verification suite")
    vf.add_argument("--level", choices=("quick", "full"), default="quick")
    vf.add_argument("--seed", type=int, default=None, help="verification master seed")
    vf.add_argument("--threads", type=int, default=None)
    vf.add_argument(
        "--k-sigma", type=float, default=4.0, help="standard-error band multiplier"
    )
    return ap


def _load_with_overrides(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        cfg = replace(cfg, seed=args.seed)
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or cfg.out_dir
    return replace(cfg, out_dir=out_dir)


def _parse_values(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(float(part))
        except ValueError as exc:
            raise ConfigError("values", f"not a number: {part!r}") from exc
    if not out:
        raise ConfigError("values", "must supply at least one value")
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            seed = args.seed if args.seed is not None else DEFAULT_VERIFY_SEED
            report = cmd_verify(args.level, seed=seed, n_threads=args.threads, k_sigma=args.k_sigma)
            print(report.render())
            return 0 if report.passed else 1
        cfg = _load_with_overrides(args)
        if args.command == "simulate":
            files = cmd_simulate(cfg, n_threads=args.threads)
        elif args.command == "price":
            files = cmd_price(cfg, n_threads=args.threads, force_general=args.force_general_kernel)
        else:
            files = cmd_sweep(
                cfg, args.axis, _parse_values(args.values),
                n_threads=args.threads, force_general=args.force_general_kernel,
            )
        for f in files:
            print(f)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VgInfoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
