"""Run configuration: TOML parsing, defaults, scenario presets, validation.

Precedence per key: user config > scenario preset > baseline default.  The
baseline bath/protocol defaults are the composite-benchmark table values, so
an empty config runs the benchmark regime.  Unknown sections or keys are hard
errors, and validation reports every violation at once.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bath import BathSpec
from .errors import ConfigError, NameSimError
from .protocol import Protocol, UnitSystem

SCENARIOS = ("fig1", "fig2", "fig3", "fig4", "fig5", "bench", "validity", "attractor")

_BASE = {
    "protocol": {"mu": -1e-5, "omega0": 40.0, "t_final": 50.0, "segments": None},
    "bath": {
        "temperature": 4.0,
        "spectral": "flat",
        "J0": 1e-3,
        "exponent": 1.0,
        "omega_min": 0.6,
        "omega_max": 1000.0,
        "g": 2.5e-2,
        "tau_B": 0.0,
        "n_modes": 1000,
    },
    "system": {"mass": 1.0, "hbar": 1.0, "kB": 1.0},
    "initial": {},  # resolved to beta0/gamma0 or H0/L0/C0 below
    "solver": {
        "rtol": 1e-8,
        "atol": 1e-10,
        "dt_max": None,
        "dt": 5e-4,
        "output_stride": 200,
        "closure": "paper_truncated",
        "coupling_prefactor": "constant",
        "bench_horizon": 50.0,
        "tableau": "dormand_prince",
        "include_xi_sq": True,
        "memory_correction": False,
    },
    "output": {"directory": "out", "stride": None, "points": 400},
}

_DEFAULT_INITIAL = {"beta0": -1.0, "gamma0_re": 0.0, "gamma0_im": 0.0}

# bundled parameters per figure scenario; every entry is overridable
_PRESETS: dict[str, dict] = {
    "fig1": {
        "protocol": {"mu": -0.1, "omega0": 40.0, "t_final": 7.0},
        "bath": {"temperature": 20.0, "spectral": "flat", "J0": 1e-3, "g": 1.0},
        "system": {"mass": 1.0},
        "initial": {"beta0": -1.0, "gamma0_re": 0.5, "gamma0_im": 0.0},
        "top": {"g_values": [0.0, 0.5, 1.0, 2.0]},
    },
    "fig2": {
        "protocol": {"mu": -0.1, "omega0": 40.0, "t_final": 7.0},
        "bath": {"temperature": 20.0, "spectral": "flat", "J0": 1e-3, "g": 1.0},
        "system": {"mass": 1.0},
        "initial": {"H0": 60.0, "L0": 0.0, "C0": 0.0},
    },
    "fig3": {
        "protocol": {"mu": -0.1, "omega0": 40.0, "t_final": 7.0},
        "bath": {"temperature": 20.0, "spectral": "flat", "J0": 1e-3, "g": 1.0},
        "system": {"mass": 1.0},
        "initial": {"H0": 60.0, "L0": 0.0, "C0": 0.0},
        "top": {"g_values": [0.0, 0.5, 1.0, 2.0]},
    },
    "fig4": {
        "protocol": {"mu": -0.1, "omega0": 40.0, "t_final": 7.0},
        "bath": {"temperature": 20.0, "spectral": "flat", "J0": 1e-3, "g": 1.0},
        "system": {"mass": 1.0},
        "top": {"mu_values": [-0.1, -0.01, -0.001]},
    },
    "fig5": {
        "protocol": {"mu": -1e-5, "omega0": 40.0, "t_final": 50.0},
        "bath": {"temperature": 4.0, "spectral": "matched", "g": 2.5e-2,
                 "omega_min": 0.6, "omega_max": 1000.0, "n_modes": 1000},
        "system": {"mass": 2.0},
        "initial": {"H0": 1037.5, "L0": -562.5, "C0": 600.0},
    },
    "validity": {},
    "attractor": {
        "protocol": {"mu": -0.1, "omega0": 40.0, "t_final": 7.0},
        "bath": {"temperature": 20.0, "spectral": "flat", "J0": 1e-3, "g": 1.0},
    },
}
_PRESETS["bench"] = _PRESETS["fig5"]

_TOP_KEYS = ("scenario", "g_values", "mu_values")


@dataclass
class RunConfig:
    """Fully resolved configuration plus provenance for the manifest."""

    scenario: str | None
    protocol: Protocol
    bath: BathSpec
    mass: float
    units: UnitSystem
    initial: dict
    solver: dict
    output: dict
    g_values: list | None = None
    mu_values: list | None = None
    resolved: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)


def _merge(scenario: str | None, user: dict):
    """Layer defaults, preset and user values; track where each came from."""
    preset = _PRESETS.get(scenario, {}) if scenario else {}
    resolved, provenance = {}, {}
    for section, defaults in _BASE.items():
        resolved[section] = {}
        for key, val in defaults.items():
            resolved[section][key] = val
            provenance[f"{section}.{key}"] = "default"
        for key, val in preset.get(section, {}).items():
            resolved[section][key] = val
            provenance[f"{section}.{key}"] = "scenario"
        for key, val in user.get(section, {}).items():
            resolved[section][key] = val
            provenance[f"{section}.{key}"] = "user"
    top = {}
    for key, val in preset.get("top", {}).items():
        top[key] = val
        provenance[key] = "scenario"
    for key in ("g_values", "mu_values"):
        if key in user:
            top[key] = user[key]
            provenance[key] = "user"
    # initial state: user section wins wholesale (it is an either/or choice)
    if user.get("initial"):
        resolved["initial"] = dict(user["initial"])
        for key in resolved["initial"]:
            provenance[f"initial.{key}"] = "user"
    elif preset.get("initial"):
        resolved["initial"] = dict(preset["initial"])
        for key in resolved["initial"]:
            provenance[f"initial.{key}"] = "scenario"
    else:
        resolved["initial"] = dict(_DEFAULT_INITIAL)
        for key in resolved["initial"]:
            provenance[f"initial.{key}"] = "default"
    return resolved, top, provenance


_NUMERIC = (int, float)
_KEY_TYPES = {
    "protocol.mu": _NUMERIC,
    "protocol.omega0": _NUMERIC,
    "protocol.t_final": _NUMERIC,
    "protocol.segments": (list, type(None)),
    "bath.temperature": _NUMERIC,
    "bath.spectral": str,
    "bath.J0": _NUMERIC,
    "bath.exponent": _NUMERIC,
    "bath.omega_min": _NUMERIC,
    "bath.omega_max": _NUMERIC,
    "bath.g": _NUMERIC,
    "bath.tau_B": _NUMERIC,
    "bath.n_modes": int,
    "system.mass": _NUMERIC,
    "system.hbar": _NUMERIC,
    "system.kB": _NUMERIC,
    "initial.beta0": _NUMERIC,
    "initial.gamma0_re": _NUMERIC,
    "initial.gamma0_im": _NUMERIC,
    "initial.H0": _NUMERIC,
    "initial.L0": _NUMERIC,
    "initial.C0": _NUMERIC,
    "solver.rtol": _NUMERIC,
    "solver.atol": _NUMERIC,
    "solver.dt_max": (*_NUMERIC, type(None)),
    "solver.dt": _NUMERIC,
    "solver.output_stride": int,
    "solver.closure": str,
    "solver.coupling_prefactor": str,
    "solver.bench_horizon": _NUMERIC,
    "solver.tableau": str,
    "solver.include_xi_sq": (bool,),
    "solver.memory_correction": (bool,),
    "output.directory": str,
    "output.stride": (int, type(None)),
    "output.points": int,
}


def parse_config(text: str, scenario: str | None = None) -> RunConfig:
    """Parse and validate a TOML run configuration.

    ``scenario`` (normally the --scenario flag) overrides the file's own
    scenario key.  Raises ConfigError listing every violation found.
    """
    try:
        user = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config parse error: {exc}"]) from exc

    problems = []
    file_scenario = user.pop("scenario", None)
    if file_scenario is not None and not isinstance(file_scenario, str):
        problems.append("scenario must be a string")
        file_scenario = None
    chosen = scenario or file_scenario
    if chosen is not None and chosen not in SCENARIOS:
        problems.append(f"unknown scenario {chosen!r}; options: {SCENARIOS}")
        chosen = None

    for key in list(user):
        if key in ("g_values", "mu_values"):
            continue
        if key not in _BASE:
            problems.append(f"unknown section or key {key!r}")
            user.pop(key)
        elif not isinstance(user[key], dict):
            problems.append(f"{key!r} must be a section")
            user.pop(key)
    for section in _BASE:
        for key in user.get(section, {}):
            full = f"{section}.{key}"
            if full not in _KEY_TYPES:
                problems.append(f"unknown key {full!r}")
                continue
            expected = _KEY_TYPES[full]
            expected = expected if isinstance(expected, tuple) else (expected,)
            value = user[section][key]
            bad_bool = isinstance(value, bool) and bool not in expected
            if bad_bool or not isinstance(value, expected):
                problems.append(f"{full} has wrong type {type(value).__name__}")
    for key in ("g_values", "mu_values"):
        if key in user and (
            not isinstance(user[key], list)
            or not all(isinstance(x, _NUMERIC) for x in user[key])
        ):
            problems.append(f"{key} must be a list of numbers")
            user.pop(key)

    init_keys = set(user.get("initial", {}))
    if init_keys and not (
        init_keys <= {"beta0", "gamma0_re", "gamma0_im"}
        or init_keys <= {"H0", "L0", "C0"}
    ):
        problems.append(
            "initial state must use either beta0/gamma0_re/gamma0_im or H0/L0/C0"
        )

    resolved, top, provenance = _merge(chosen, user)

    units = protocol = bathspec = None
    try:
        units = UnitSystem(
            hbar=float(resolved["system"]["hbar"]), kB=float(resolved["system"]["kB"])
        )
    except NameSimError as exc:
        problems.append(str(exc))
    try:
        seg = resolved["protocol"]["segments"]
        protocol = Protocol(
            mu=float(resolved["protocol"]["mu"]),
            omega0=float(resolved["protocol"]["omega0"]),
            t_final=float(resolved["protocol"]["t_final"]),
            segments=tuple((float(m), float(d)) for m, d in seg) if seg else None,
        )
    except (NameSimError, TypeError, ValueError) as exc:
        problems.append(f"protocol: {exc}")
    try:
        bathspec = BathSpec(
            temperature=float(resolved["bath"]["temperature"]),
            spectral=resolved["bath"]["spectral"],
            J0=float(resolved["bath"]["J0"]),
            exponent=float(resolved["bath"]["exponent"]),
            omega_min=float(resolved["bath"]["omega_min"]),
            omega_max=float(resolved["bath"]["omega_max"]),
            g=float(resolved["bath"]["g"]),
            tau_B=float(resolved["bath"]["tau_B"]),
            n_modes=int(resolved["bath"]["n_modes"]),
        )
    except NameSimError as exc:
        problems.append(f"bath: {exc}")
    if resolved["system"]["mass"] <= 0:
        problems.append(f"system.mass must be positive, got {resolved['system']['mass']}")
    solver = dict(resolved["solver"])
    if solver["closure"] not in ("paper_truncated", "full_covariance"):
        problems.append(f"solver.closure invalid: {solver['closure']!r}")
    if solver["coupling_prefactor"] not in ("constant", "omega_t"):
        problems.append(
            f"solver.coupling_prefactor invalid: {solver['coupling_prefactor']!r}"
        )
    if solver["tableau"] not in ("classic", "fehlberg", "dormand_prince"):
        problems.append(f"solver.tableau invalid: {solver['tableau']!r}")
    for key in ("rtol", "atol", "dt"):
        if solver[key] <= 0:
            problems.append(f"solver.{key} must be positive")
    if solver["output_stride"] < 1:
        problems.append("solver.output_stride must be >= 1")
    output = dict(resolved["output"])
    if output["stride"] is None:
        output["stride"] = solver["output_stride"]
    if output["points"] < 2:
        problems.append("output.points must be >= 2")

    if problems:
        raise ConfigError(problems)

    return RunConfig(
        scenario=chosen,
        protocol=protocol,
        bath=bathspec,
        mass=float(resolved["system"]["mass"]),
        units=units,
        initial=dict(resolved["initial"]),
        solver=solver,
        output=output,
        g_values=[float(x) for x in top["g_values"]] if "g_values" in top else None,
        mu_values=[float(x) for x in top["mu_values"]] if "mu_values" in top else None,
        resolved=resolved,
        provenance=provenance,
    )
