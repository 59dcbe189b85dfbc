"""Experiment orchestration: run configured comparisons and write CSV/JSON outputs.

All files are written atomically (temporary file in the target directory,
then ``os.replace``) and only after every computation of a run succeeded, so
a failed run leaves no partial outputs.  Floats are formatted with ``repr``,
which is the shortest round-trip decimal form.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import platform
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dispersion as disp
from . import gkg, kernels
from . import packet as pk
from . import spectral as sp
from .config import ExperimentConfig
from .errors import ConfigInvalid, GupsimError

__all__ = [
    "Comparison",
    "ComparisonReport",
    "ExperimentError",
    "build_model",
    "build_packet",
    "build_times",
    "run_experiment",
    "run_gkg",
    "scan",
    "emit_dispersion_curves",
    "format_float",
    "csv_text",
    "write_outputs",
    "SCAN_PARAMETERS",
]

SCAN_PARAMETERS = ("alpha_prime", "k0", "alpha", "m0")


class ExperimentError(GupsimError):
    """A downstream failure, annotated with the experiment it happened in."""

    def __init__(self, experiment_id, cause):
        super().__init__(f"[{experiment_id}] {type(cause).__name__}: {cause}")
        self.experiment_id = experiment_id
        self.cause = cause


@dataclass(frozen=True)
class Comparison:
    name: str
    predicted: float
    measured: float
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "predicted": self.predicted,
            "measured": self.measured,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class ComparisonReport:
    experiment_id: str
    comparisons: list = field(default_factory=list)
    conventions: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    # in-memory only: files to write, name -> text
    outputs: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def get(self, name: str) -> Comparison:
        for c in self.comparisons:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "pass": self.passed,
            "comparisons": [c.to_dict() for c in self.comparisons],
            "conventions": dict(sorted(self.conventions.items())),
            "tolerances": dict(sorted(self.tolerances.items())),
            "environment": dict(sorted(self.environment.items())),
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, allow_nan=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def environment_fingerprint() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "machine": platform.machine(),
    }


def format_float(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # RFC-4180 quoting and CRLF line ends
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else format_float(v) for v in row])
    return buf.getvalue()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(outputs: dict, out_dir) -> list:
    """Write every ``name -> text`` pair into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    paths = []
    for name in sorted(outputs):
        p = out_dir / name
        _atomic_write(p, outputs[name])
        paths.append(p)
    return paths


def build_model(cfg: ExperimentConfig) -> disp.DispersionModel:
    m = cfg.model
    if m.epsilon is not None:
        return disp.DispersionModel.from_epsilon(m.epsilon, cfg.packet.k0, l_p=m.l_p,
                                                 c=m.c, hbar=m.hbar)
    return disp.DispersionModel(alpha_prime=m.alpha_prime, l_p=m.l_p, c=m.c, hbar=m.hbar)


def build_packet(cfg: ExperimentConfig) -> pk.GaussianPacketSpec:
    p = cfg.packet
    if p.sigma_k is not None:
        return pk.GaussianPacketSpec.from_sigma_k(p.sigma_k, p.k0)
    return pk.GaussianPacketSpec(alpha=p.alpha, k0=p.k0)


def build_times(cfg: ExperimentConfig, spec, model) -> list:
    tm = cfg.times
    if tm.values is not None:
        return list(tm.values)
    t_max = tm.t_max
    if t_max == "validated":
        t_max = sp.validated_time_window(spec, model)
        if not math.isfinite(t_max):
            raise ConfigInvalid("times.t_max", "'validated' needs a dispersive model (alpha' != 0)")
    if tm.n_t == 1:
        return [float(t_max)]
    return [float(t) for t in np.linspace(0.0, t_max, tm.n_t)]


def build_grid(cfg: ExperimentConfig, spec, model, times):
    g = cfg.grid
    if g.k_min is not None:
        grid = sp.KGrid(g.k_min, g.k_max, g.n)
        x0 = g.x0
    else:
        grid, x0 = sp.auto_grid(spec, model, times)
        if g.n:
            grid = sp.KGrid(grid.k_min, grid.k_max, g.n)
            x0 = None
        if g.x0 is not None:
            x0 = g.x0
    return grid, x0


def _derivative_check(cfg, model, spec, rng):
    """Worst relative mismatch between v_g and a central difference of omega
    at random wave numbers around the carrier."""
    k0 = spec.k0 if spec.k0 != 0 else 1.0
    ks = np.abs(k0) * rng.uniform(0.5, 1.5, size=16)
    pole = model.pole
    if pole is not None:
        ks = ks[np.abs(ks - pole) > 0.1 * pole]
    worst = (0.0, 1.0, 1.0)
    for k in ks:
        h = 1e-5 * k
        fd = (disp.omega_exact(k + h, model) - disp.omega_exact(k - h, model)) / (2 * h)
        vg = disp.group_velocity_exact(k, model)
        dev = abs(fd - vg) / abs(vg)
        if dev >= worst[0]:
            worst = (dev, vg, fd)
    return Comparison("derivative_consistency", worst[1], worst[2], worst[0],
                      cfg.tolerances.derivative_rel)


def run_experiment(cfg: ExperimentConfig, emit_fields: bool | None = None) -> ComparisonReport:
    """Evolve the configured packet and compare against the closed-form predictions.

    Returns a report whose ``outputs`` hold ``stats.csv``, ``report.json`` and
    (optionally) per-snapshot field dumps; nothing is written to disk here.
    """
    try:
        return _run_experiment(cfg, cfg.output.emit_fields if emit_fields is None else emit_fields)
    except (ConfigInvalid, ExperimentError):
        raise
    except (GupsimError, ValueError, ZeroDivisionError) as exc:
        raise ExperimentError(cfg.id, exc) from exc


def _run_experiment(cfg, emit_fields):
    model = build_model(cfg)
    spec = build_packet(cfg)
    times = build_times(cfg, spec, model)
    grid, x0 = build_grid(cfg, spec, model, times)
    series = sp.evolve_series(spec, model, times, grid=grid, x0=x0,
                              n_sigma=cfg.grid.n_sigma, workers=1)
    tol = cfg.tolerances
    predicted = np.asarray(pk.gup_width_exact(np.asarray(times), spec, model), dtype=float)
    broad = sp.measure_broadening(series, predicted)

    comparisons = []
    i = int(np.argmax(broad.rel_dev))
    comparisons.append(Comparison("rms_width", float(broad.predicted[i]),
                                  float(broad.measured[i]), broad.max_dev, tol.width_rel))
    if len(series) >= 3:
        fit = sp.measure_group_velocity(series)
        vg = disp.group_velocity_exact(spec.k0, model)
        comparisons.append(Comparison("group_velocity", vg, fit.v_g,
                                      abs(fit.v_g - vg) / abs(vg), tol.v_g_rel))
    norms = series.norms
    drift = float(np.max(np.abs(norms - norms[0])) / norms[0])
    comparisons.append(Comparison("norm", float(norms[0]), float(norms[np.argmax(np.abs(norms - norms[0]))]),
                                  drift, tol.norm_drift))
    comparisons.append(_derivative_check(cfg, model, spec, np.random.default_rng(cfg.seed)))

    report = ComparisonReport(
        experiment_id=cfg.id,
        comparisons=comparisons,
        conventions={
            "width_definition": "rms",
            "width_law": "exact_beta",
            "sign_convention": cfg.gkg.sign_convention,
            "alpha_prime": model.alpha_prime,
            "units": "natural" if (model.c, model.hbar, model.l_p) == (1.0, 1.0, 1.0) else "custom",
        },
        tolerances=dict(vars(tol)),
        environment=environment_fingerprint(),
    )
    rows = [(s.t, st.norm, st.centroid, st.rms_width, pw, rd)
            for s, st, pw, rd in zip(series.snapshots, series.stats, predicted, broad.rel_dev)]
    report.outputs["stats.csv"] = csv_text(
        ["t", "norm", "centroid", "rms_width", "predicted_width", "rel_dev"], rows)
    if emit_fields:
        for idx, snap in enumerate(series.snapshots):
            report.outputs[f"field_t{idx}.csv"] = _field_csv(snap)
    report.outputs["report.json"] = report.to_json()
    return report


def _field_csv(snap: sp.FieldSnapshot) -> str:
    v = snap.values
    return csv_text(["x", "re", "im", "abs2"],
                    zip(snap.x, v.real, v.imag, np.abs(v) ** 2))


def gkg_params(cfg: ExperimentConfig) -> gkg.GKGParams:
    model = build_model(cfg)
    g = cfg.gkg
    return gkg.GKGParams(alpha_prime=model.alpha_prime, l_p=model.l_p, c=model.c,
                         hbar=model.hbar, m0=g.m0, sign_convention=g.sign_convention,
                         instability_policy=g.instability_policy)


def run_gkg(cfg: ExperimentConfig, emit_fields: bool | None = None) -> ComparisonReport:
    """Evolve the generalized Klein-Gordon field; outputs ``gkg_stats.csv``."""
    try:
        return _run_gkg(cfg, cfg.output.emit_fields if emit_fields is None else emit_fields)
    except (ConfigInvalid, ExperimentError):
        raise
    except (GupsimError, ValueError, ZeroDivisionError) as exc:
        raise ExperimentError(cfg.id, exc) from exc


def _run_gkg(cfg, emit_fields):
    params = gkg_params(cfg)
    spec = build_packet(cfg)
    g = cfg.gkg
    tol = cfg.tolerances
    state0 = gkg.build_initial_data(spec, params, g.branch, n=g.n, length=g.length,
                                    n_sigma=cfg.grid.n_sigma)
    e0 = gkg.energy(state0, params)
    states = []
    dt = None
    for t in g.times:
        if g.solver == "spectral":
            states.append(gkg.evolve_spectral(state0, params, t))
        else:
            if dt is None:
                dt = g.dt or 0.5 * gkg.fd_stability_bound(state0.psi, params)
            n_steps = int(math.ceil(t / dt - 1e-9)) if t > 0 else 0
            step = t / n_steps if n_steps else dt
            states.append(gkg.evolve_fd(state0, params, step, n_steps))

    comparisons = []
    rows = []
    for s in states:
        st = sp.compute_stats(s.psi)
        rows.append((s.t, st.norm, st.centroid, st.rms_width, gkg.energy(s, params)))

    if g.solver == "spectral":
        if not any(s.unstable for s in states):
            energies = np.array([r[4] for r in rows])
            drift = float(np.max(np.abs(energies - e0)) / e0) if e0 else 0.0
            comparisons.append(Comparison("gkg_energy", e0, float(energies[-1]), drift,
                                          tol.gkg_energy_drift))
        if g.branch == "positive_frequency" and not any(s.unstable for s in states):
            grid = state0.meta["grid"]
            amp = sp.sample_spectrum(spec, grid, n_sigma=cfg.grid.n_sigma)
            worst = 0.0
            for s in states:
                ref = sp.synthesize(amp, grid, gkg.GKGBranch(params), s.t, x0=state0.psi.x0)
                worst = max(worst, float(np.max(np.abs(ref.values - s.psi.values))))
            comparisons.append(Comparison("gkg_vs_synthesis", 0.0, worst, worst,
                                          tol.gkg_oracle_abs))
    else:
        final = states[-1]
        ref = gkg.evolve_spectral(state0, params, final.t)
        dev = float(np.linalg.norm(final.psi.values - ref.psi.values)
                    / np.linalg.norm(ref.psi.values))
        comparisons.append(Comparison("gkg_fd_vs_spectral", 0.0, dev, dev, tol.gkg_fd_rel))

    report = ComparisonReport(
        experiment_id=cfg.id,
        comparisons=comparisons,
        conventions={
            "sign_convention": params.sign_convention,
            "instability_policy": params.instability_policy,
            "solver": g.solver,
            "branch": g.branch,
            "unstable": any(s.unstable for s in states),
            **({"dt": dt} if dt is not None else {}),
        },
        tolerances=dict(vars(tol)),
        environment=environment_fingerprint(),
    )
    report.outputs["gkg_stats.csv"] = csv_text(
        ["t", "norm", "centroid", "rms_width", "energy"], rows)
    if emit_fields:
        for idx, s in enumerate(states):
            report.outputs[f"gkg_field_t{idx}.csv"] = _field_csv(s.psi)
    report.outputs["gkg_report.json"] = report.to_json()
    return report


def _with_parameter(cfg: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    new = copy.deepcopy(cfg)
    if parameter == "alpha_prime":
        new.model.alpha_prime = float(value)
        new.model.epsilon = None
    elif parameter == "k0":
        new.packet.k0 = float(value)
    elif parameter == "alpha":
        new.packet.alpha = float(value)
        new.packet.sigma_k = None
    elif parameter == "m0":
        new.gkg.m0 = float(value)
    new.id = f"{cfg.id}[{parameter}={value!r}]"
    return new


def scan(cfg: ExperimentConfig, parameter: str, values, workers: int | None = None):
    """Run one experiment per parameter value.

    Returns ``(reports, summary_csv_text)``; reports are ordered by value
    regardless of the order in which workers finish.  Scanning ``m0`` runs the
    generalized Klein-Gordon experiment, every other parameter the packet one.
    """
    if parameter not in SCAN_PARAMETERS:
        raise ConfigInvalid("parameter", f"must be one of {SCAN_PARAMETERS}, got {parameter!r}")
    values = sorted(float(v) for v in values)
    runner = run_gkg if parameter == "m0" else run_experiment
    cfgs = [_with_parameter(cfg, parameter, v) for v in values]
    n_workers = min(sp.worker_count(workers), max(1, len(cfgs)))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            reports = list(pool.map(runner, cfgs))
    else:
        reports = [runner(c) for c in cfgs]

    rows = []
    for v, rep in zip(values, reports):
        worst = max(rep.comparisons, key=lambda c: c.deviation / c.tolerance)
        try:
            vg = rep.get("group_velocity")
            vg_pred, vg_meas = vg.predicted, vg.measured
        except KeyError:
            vg_pred = vg_meas = None
        rows.append((parameter, v, vg_pred, vg_meas, worst.name, worst.deviation,
                     "true" if rep.passed else "false"))
    summary = csv_text(["parameter", "value", "v_g_predicted", "v_g_measured",
                        "worst_comparison", "worst_deviation", "pass"], rows)
    return reports, summary


def _curve_rows(k, model, first_order: bool):
    pole = model.pole
    dk = float(k[1] - k[0]) if len(k) > 1 else 0.0
    guard = sp.POLE_GUARD_CELLS * abs(dk)
    rows = []
    for ki in k:
        ki = float(ki)
        if pole is not None and abs(abs(ki) - pole) < guard:
            rows.append((ki, None, None, None, disp.effective_planck(ki, model), "1"))
            continue
        if first_order:
            w = disp.omega_first_order(ki, model)
            v = disp.group_velocity_first_order(ki, model)
            b = disp.gvd_beta_first_order(ki, model)
        else:
            w = disp.omega_exact(ki, model)
            v = disp.group_velocity_exact(ki, model)
            b = disp.gvd_beta_exact(ki, model)
        rows.append((ki, w, v, b, disp.effective_planck(ki, model), "0"))
    return rows


CURVE_HEADER = ["k", "omega", "v_g", "beta", "hbar_eff", "excluded"]


def emit_dispersion_curves(cfg: ExperimentConfig) -> dict:
    """CSV tables of omega, v_g, beta and hbar_eff versus k.

    Three files: exact GUP, first-order GUP and the free (alpha' = 0) relation.
    For alpha' < 0, rows within the pole guard band are flagged ``excluded=1``
    and their dispersion columns left empty.
    """
    model = build_model(cfg)
    free = disp.DispersionModel(0.0, model.l_p, model.c, model.hbar)
    cv = cfg.curves
    k = np.linspace(cv.k_min, cv.k_max, cv.n)
    return {
        "dispersion_exact.csv": csv_text(CURVE_HEADER, _curve_rows(k, model, False)),
        "dispersion_first_order.csv": csv_text(CURVE_HEADER, _curve_rows(k, model, True)),
        "dispersion_free.csv": csv_text(CURVE_HEADER, _curve_rows(k, free, False)),
    }
