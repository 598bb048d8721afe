"""Run-configuration files: strict JSON schema, overrides, validation.

Units are carried in the key names (cm = cm^-1, K = Kelvin, ps/fs time).
Unknown keys anywhere in the document are rejected so that typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

import json
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .dynamics import IntegratorConfig
from .ensemble import RunConfig
from .model import BathSpec, ExcitonModel
from .observables import recursion_time
from .thermalization import ThermalizationParams
from .units import DEFAULT_UNITS


class ConfigError(ValueError):
    """A configuration document failed schema or physics validation."""


# section -> key -> (required, validator description)
_SCHEMA = {
    "model": {"epsilon": True, "J": True},
    "bath": {"Q": True, "omega0_cm": True, "delta_omega_cm": True, "s": True,
             "omega_c_cm": True, "lambda_reorg_cm": True},
    "thermal": {"T0_K": True, "T_inf_K": True, "nu_per_ps": True,
                "tau_ps": True},
    "run": {"dt_fs": True, "t_total_ps": True, "snapshot_fs": True,
            "trajectories": True, "master_seed": True},
    "excitation": {"kind": True, "index": True},
    # Optional selector for the phase-space CSV; defaults to site 0 and
    # the mode closest to 100 cm^-1.
    "output": {"phase_space_site": False, "phase_space_mode_cm": False},
}
_OPTIONAL_SECTIONS = {"output"}


@dataclass
class ResolvedConfig:
    """A validated document plus the derived RunConfig pieces."""

    document: dict
    run_config: RunConfig
    phase_space_site: int
    phase_space_mode: int           # mode index within the grid
    warnings: list = field(default_factory=list)


def _require_number(section: str, key: str, value: Any, *, integer: bool = False,
                    minimum: Optional[float] = None,
                    strict_min: bool = False) -> float:
    where = f"{section}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if minimum is not None:
        if strict_min and not value > minimum:
            raise ConfigError(f"{where} must be > {minimum}, got {value}")
        if not strict_min and not value >= minimum:
            raise ConfigError(f"{where} must be >= {minimum}, got {value}")
    return int(value) if integer else float(value)


def _check_schema(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be an object")
    for section in doc:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        if not isinstance(doc[section], dict):
            raise ConfigError(f"section {section!r} must be an object")
        for key in doc[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in _SCHEMA.items():
        if section in _OPTIONAL_SECTIONS:
            continue
        if section not in doc:
            raise ConfigError(f"missing section {section!r}")
        for key, required in keys.items():
            if required and key not in doc[section]:
                raise ConfigError(f"missing key {section}.{key}")


def _multiple_of(value: float, base: float) -> bool:
    n = round(value / base)
    return n >= 1 and abs(n * base - value) <= 1e-9 * max(value, base)


def resolve(doc: dict) -> ResolvedConfig:
    """Validate a parsed document and build the RunConfig."""
    _check_schema(doc)
    warnings_out: list[str] = []

    msec = doc["model"]
    epsilon = msec["epsilon"]
    if (not isinstance(epsilon, list) or not epsilon
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                       for x in epsilon)):
        raise ConfigError("model.epsilon must be a non-empty list of numbers")
    n = len(epsilon)
    jmat = msec["J"]
    if (not isinstance(jmat, list) or len(jmat) != n
            or any(not isinstance(row, list) or len(row) != n for row in jmat)):
        raise ConfigError(f"model.J must be a {n}x{n} matrix")
    try:
        model = ExcitonModel(epsilon=np.array(epsilon, dtype=float),
                             J=np.array(jmat, dtype=float))
    except ValueError as exc:
        raise ConfigError(f"model.J: {exc}") from exc

    bsec = doc["bath"]
    bath_spec = BathSpec(
        Q=int(_require_number("bath", "Q", bsec["Q"], integer=True, minimum=1)),
        omega0=_require_number("bath", "omega0_cm", bsec["omega0_cm"],
                               minimum=0.0, strict_min=True),
        delta_omega=_require_number("bath", "delta_omega_cm",
                                    bsec["delta_omega_cm"],
                                    minimum=0.0, strict_min=True),
        s=_require_number("bath", "s", bsec["s"], minimum=0.0),
        omega_c=_require_number("bath", "omega_c_cm", bsec["omega_c_cm"],
                                minimum=0.0, strict_min=True),
        lambda_reorg=_require_number("bath", "lambda_reorg_cm",
                                     bsec["lambda_reorg_cm"], minimum=0.0),
    )

    tsec = doc["thermal"]
    t0_raw = tsec["T0_K"]
    if isinstance(t0_raw, list):
        if len(t0_raw) != n:
            raise ConfigError(
                f"thermal.T0_K list must have one entry per site ({n})")
        t0 = [_require_number("thermal", "T0_K", x, minimum=0.0) for x in t0_raw]
    else:
        t0 = _require_number("thermal", "T0_K", t0_raw, minimum=0.0)
    t_inf = _require_number("thermal", "T_inf_K", tsec["T_inf_K"], minimum=0.0)
    nu = _require_number("thermal", "nu_per_ps", tsec["nu_per_ps"], minimum=0.0)
    tau = _require_number("thermal", "tau_ps", tsec["tau_ps"],
                          minimum=0.0, strict_min=True)
    if nu * tau > 1.0:
        raise ConfigError(
            f"thermal.nu_per_ps * thermal.tau_ps = {nu * tau:.4g} exceeds 1 "
            f"and is not a probability")
    if nu * tau > 0.1:
        warnings_out.append(
            f"thermal.nu_per_ps * thermal.tau_ps = {nu * tau:.4g} > 0.1: "
            f"Poisson limit degraded")
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")  # surfaced via warnings_out instead
        params = ThermalizationParams(nu=nu, tau=tau, t_inf=t_inf)

    rsec = doc["run"]
    dt_fs = _require_number("run", "dt_fs", rsec["dt_fs"],
                            minimum=0.0, strict_min=True)
    t_total = _require_number("run", "t_total_ps", rsec["t_total_ps"],
                              minimum=0.0, strict_min=True)
    snapshot_fs = _require_number("run", "snapshot_fs", rsec["snapshot_fs"],
                                  minimum=0.0, strict_min=True)
    n_traj = int(_require_number("run", "trajectories", rsec["trajectories"],
                                 integer=True, minimum=1))
    master_seed = int(_require_number("run", "master_seed", rsec["master_seed"],
                                      integer=True, minimum=0))
    dt = dt_fs * 1e-3
    if not _multiple_of(snapshot_fs, dt_fs):
        raise ConfigError(
            f"run.snapshot_fs = {snapshot_fs} must be an integer multiple of "
            f"run.dt_fs = {dt_fs}")
    if not _multiple_of(tau, dt):
        raise ConfigError(
            f"thermal.tau_ps = {tau} must be an integer multiple of "
            f"run.dt_fs = {dt_fs} (= {dt} ps)")
    if not _multiple_of(t_total, tau):
        raise ConfigError(
            f"run.t_total_ps = {t_total} must be an integer multiple of "
            f"thermal.tau_ps = {tau}")
    integrator = IntegratorConfig(dt=dt, t_total=t_total,
                                  record_stride=int(round(snapshot_fs / dt_fs)))

    esec = doc["excitation"]
    kind = esec["kind"]
    if kind not in ("site", "exciton"):
        raise ConfigError(
            f'excitation.kind must be "site" or "exciton", got {kind!r}')
    index = int(_require_number("excitation", "index", esec["index"],
                                integer=True, minimum=0))
    if index >= n:
        raise ConfigError(
            f"excitation.index = {index} out of range for {n} sites")

    osec = doc.get("output", {})
    ps_site = int(_require_number("output", "phase_space_site",
                                  osec.get("phase_space_site", 0),
                                  integer=True, minimum=0))
    if ps_site >= n:
        raise ConfigError(
            f"output.phase_space_site = {ps_site} out of range for {n} sites")
    ps_mode_cm = _require_number("output", "phase_space_mode_cm",
                                 osec.get("phase_space_mode_cm", 100.0),
                                 minimum=0.0)
    grid = bath_spec.frequencies_cm()
    ps_mode = int(np.argmin(np.abs(grid - ps_mode_cm)))

    # Sparse-bath pathology: without scattering, revivals of a coarse
    # bath contaminate dynamics past the recursion time.
    t_rec = recursion_time(bath_spec.delta_omega)
    if nu == 0.0 and t_rec < t_total:
        warnings_out.append(
            f"bath recursion time 2*pi/delta_omega = {t_rec:.4g} ps is "
            f"shorter than run.t_total_ps = {t_total} ps and no "
            f"thermalization is active (nu = 0); late-time dynamics will "
            f"show discretization revivals")

    run_config = RunConfig(
        model=model,
        bath_spec=bath_spec,
        t0=t0,
        params=params,
        integrator=integrator,
        n_trajectories=n_traj,
        master_seed=master_seed,
        excitation=(kind, index),
        units=DEFAULT_UNITS,
    )
    return ResolvedConfig(document=doc, run_config=run_config,
                          phase_space_site=ps_site, phase_space_mode=ps_mode,
                          warnings=warnings_out)


def load(path: str) -> ResolvedConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return resolve(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values parse as JSON."""
    doc = json.loads(json.dumps(doc))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise ConfigError(
                f"override key {dotted!r} must be section.key")
        section, key = parts
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        doc.setdefault(section, {})[key] = value
    return doc
