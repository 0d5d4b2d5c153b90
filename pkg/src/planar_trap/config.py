"""Run configuration: one self-describing JSON file per run.

Unknown keys are rejected (typos must not silently change a run) and all
values are validated at parse time.  Flags override config keys via
dotted paths (``meshing.max_panel=10``).  Units follow the package
conventions: µm, volts, Hz.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigNotFound, InvalidValue, UnknownKey
from .geometry import (ReferenceLayoutParams, TrapLayout, build_reference_layout,
                       load_layout)
from .pseudopotential import DriveParams, IonSpecies, VoltageSet

__all__ = ["RunConfig", "parse_config", "default_config"]


_DEFAULTS = {
    "layout": {"reference": {}},
    "ion": {"mass_amu": 24.0, "charge": 1},
    "drive": {"rf_voltage": 125.0, "rf_frequency_hz": 87.0e6},
    "voltages": {},
    "rf_electrodes": ["rf1", "rf2"],
    "meshing": {"max_panel": 35.0, "edge_grading": 3.0},
    "solver": {
        "engine": "bem",
        "null_tolerance_v_per_m": 1.0,
        "depth_box_factor": 5.0,
        "depth_grid_um": 2.0,
        "depth_coarse_grid_um": 6.0,
        "seed_region": None,
    },
    "map": {"electrode": "rf", "x_um": [0.0], "y_um": [0.0], "z_um": [40.0]},
    "compensation": {
        "target_axial_frequency_hz": 760.0e3,
        "target_field_v_per_m": [0.0, 0.0, 0.0],
        "axial_direction": [1.0, 0.0, 0.0],
        "locked": {},
        "null_point": None,
        "extra_points": [],
        "weights": 1.0,
    },
    "crystal": {
        "n_ions": 3,
        "potential": {"harmonic_frequency_hz": 760.0e3},
        "drive_frequencies_hz": [],
        "resonance_linewidth": 0.01,
    },
    "beam": {"direction": None, "threshold": 0.1, "allow_out_of_plane": False},
    "output": {"directory": "out"},
}

_REFERENCE_KEYS = {
    "rf_rail_width", "center_control_width", "outer_control_width", "gap",
    "axial_segment_lengths", "rail_asymmetry", "overall_scale",
}


def default_config() -> dict:
    return copy.deepcopy(_DEFAULTS)


# sections replaced wholesale rather than key-merged: free-form voltage
# maps and either/or choice sections
_REPLACE_SECTIONS = {"voltages", "locked", "layout", "potential"}

# parents under which overrides may introduce new keys
_FREE_PARENTS = {"voltages", "layout", "layout.reference", "compensation.locked",
                 "crystal.potential", "crystal.potential.sampled"}


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise UnknownKey(path)
        if (isinstance(base[key], dict) and isinstance(value, dict)
                and key not in _REPLACE_SECTIONS):
            out[key] = _merge(base[key], value, prefix=f"{path}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_override(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    walk = _DEFAULTS
    for i, part in enumerate(parts[:-1]):
        parent = ".".join(parts[: i + 1])
        known = isinstance(walk, dict) and part in walk
        if not known and ".".join(parts[:i]) not in _FREE_PARENTS:
            raise UnknownKey(dotted)
        walk = walk.get(part, {}) if isinstance(walk, dict) else {}
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    leaf = parts[-1]
    parent = ".".join(parts[:-1])
    if (not (isinstance(walk, dict) and leaf in walk)
            and parent not in _FREE_PARENTS):
        raise UnknownKey(dotted)
    node[leaf] = value


def _require(cond: bool, key: str, detail: str = ""):
    if not cond:
        raise InvalidValue(key, detail)


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run configuration."""

    raw: dict
    base_dir: Path

    # -- constructed domain objects -----------------------------------------

    def layout(self) -> TrapLayout:
        spec = self.raw["layout"]
        if "file" in spec:
            return load_layout(self.base_dir / spec["file"])
        params = spec.get("reference", {})
        kwargs = dict(params)
        if "axial_segment_lengths" in kwargs:
            kwargs["axial_segment_lengths"] = tuple(kwargs["axial_segment_lengths"])
        return build_reference_layout(ReferenceLayoutParams(**kwargs))

    def ion(self) -> IonSpecies:
        d = self.raw["ion"]
        return IonSpecies(mass_amu=float(d["mass_amu"]), charge=int(d["charge"]))

    def drive(self) -> DriveParams:
        d = self.raw["drive"]
        return DriveParams.from_frequency(float(d["rf_voltage"]),
                                          float(d["rf_frequency_hz"]))

    def voltages(self) -> VoltageSet:
        return VoltageSet(control={k: float(v) for k, v in self.raw["voltages"].items()},
                          rf_assignment=tuple(self.raw["rf_electrodes"]))

    def map_grid(self) -> np.ndarray:
        m = self.raw["map"]
        xs, ys, zs = (np.asarray(m[k], dtype=float) for k in ("x_um", "y_um", "z_um"))
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def seed_region(self):
        region = self.raw["solver"]["seed_region"]
        if region is None:
            return None
        lo, hi = region
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def output_dir(self, override=None) -> Path:
        if override is not None:
            return Path(override)
        return self.base_dir / self.raw["output"]["directory"]


def _validate(cfg: dict, base_dir: Path) -> None:
    layout = cfg["layout"]
    if not isinstance(layout, dict) or not ({"file", "reference"} & set(layout)):
        raise InvalidValue("layout", "need a 'file' or 'reference' entry")
    extra = set(layout) - {"file", "reference"}
    if extra:
        raise UnknownKey(f"layout.{sorted(extra)[0]}")
    if "file" in layout:
        path = base_dir / layout["file"]
        if not path.exists():
            raise ConfigNotFound(f"layout file not found: {path}")
    else:
        unknown = set(layout["reference"]) - _REFERENCE_KEYS
        if unknown:
            raise UnknownKey(f"layout.reference.{sorted(unknown)[0]}")
        for key, val in layout["reference"].items():
            if key == "axial_segment_lengths":
                ok = (isinstance(val, (list, tuple)) and val
                      and all(float(v) > 0.0 for v in val))
                _require(ok, "layout.reference.axial_segment_lengths")
            else:
                _require(float(val) > 0.0, f"layout.reference.{key}")

    _require(float(cfg["ion"]["mass_amu"]) > 0.0, "ion.mass_amu")
    _require(int(cfg["ion"]["charge"]) != 0, "ion.charge")
    _require(float(cfg["drive"]["rf_voltage"]) > 0.0, "drive.rf_voltage")
    _require(float(cfg["drive"]["rf_frequency_hz"]) > 0.0, "drive.rf_frequency_hz")

    mesh = cfg["meshing"]
    _require(float(mesh["max_panel"]) > 0.0, "meshing.max_panel")
    _require(float(mesh["edge_grading"]) >= 1.0, "meshing.edge_grading")

    sol = cfg["solver"]
    _require(sol["engine"] in ("bem", "gapless"), "solver.engine")
    for key in ("null_tolerance_v_per_m", "depth_box_factor", "depth_grid_um",
                "depth_coarse_grid_um"):
        _require(float(sol[key]) > 0.0, f"solver.{key}")
    if sol["seed_region"] is not None:
        region = sol["seed_region"]
        ok = (isinstance(region, (list, tuple)) and len(region) == 2
              and len(region[0]) == 3 and len(region[1]) == 3)
        _require(ok, "solver.seed_region")

    for axis in ("x_um", "y_um", "z_um"):
        vals = cfg["map"][axis]
        _require(isinstance(vals, (list, tuple)) and len(vals) > 0, f"map.{axis}")

    comp = cfg["compensation"]
    _require(float(comp["target_axial_frequency_hz"]) >= 0.0,
             "compensation.target_axial_frequency_hz")
    _require(len(comp["target_field_v_per_m"]) == 3, "compensation.target_field_v_per_m")
    if comp["null_point"] is not None:
        _require(len(comp["null_point"]) == 3, "compensation.null_point")

    cry = cfg["crystal"]
    _require(int(cry["n_ions"]) >= 1, "crystal.n_ions")
    pot = cry["potential"]
    if not isinstance(pot, dict) or not ({"harmonic_frequency_hz", "sampled"} & set(pot)):
        raise InvalidValue("crystal.potential", "need harmonic_frequency_hz or sampled")
    extra = set(pot) - {"harmonic_frequency_hz", "sampled"}
    if extra:
        raise UnknownKey(f"crystal.potential.{sorted(extra)[0]}")
    if "harmonic_frequency_hz" in pot:
        _require(float(pot["harmonic_frequency_hz"]) > 0.0,
                 "crystal.potential.harmonic_frequency_hz")
    if "sampled" in pot:
        samp = pot["sampled"]
        unknown = set(samp) - {"halfspan_um", "samples", "include_rf", "center_um"}
        if unknown:
            raise UnknownKey(f"crystal.potential.sampled.{sorted(unknown)[0]}")
        _require(float(samp.get("halfspan_um", 0.0)) > 0.0,
                 "crystal.potential.sampled.halfspan_um")
        _require(int(samp.get("samples", 0)) >= 4, "crystal.potential.sampled.samples")
    _require(float(cry["resonance_linewidth"]) > 0.0, "crystal.resonance_linewidth")

    beam = cfg["beam"]
    if beam["direction"] is not None:
        _require(len(beam["direction"]) == 3, "beam.direction")
    _require(0.0 < float(beam["threshold"]) < 1.0, "beam.threshold")


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Load, merge with defaults, apply overrides, and validate.

    Raises ConfigNotFound / UnknownKey / InvalidValue.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigNotFound(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidValue("<config>", f"invalid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise InvalidValue("<config>", "top level must be an object")
    cfg = _merge(_DEFAULTS, user)
    for dotted, value in (overrides or {}).items():
        _apply_override(cfg, dotted, value)
    base = path.parent.resolve()
    _validate(cfg, base)
    return RunConfig(raw=cfg, base_dir=base)
