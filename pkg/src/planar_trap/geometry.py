"""Planar electrode layouts: domain types, validation, reference builder.

Coordinate frame
----------------
Electrodes live in the z = 0 plane with coordinates in micrometers.  The
trap axis (the long direction of the rails, along which ion chains line
up) is **x**, the transverse in-plane direction is **y**, and **z** is the
height above the chip with the vacuum side at z > 0.  Texts about linear
traps often call the trap axis "z"; here z is reserved for height.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import shapely
import shapely.geometry as sgeom

from .errors import InvalidParams

__all__ = [
    "Role",
    "Polygon",
    "Electrode",
    "TrapLayout",
    "ReferenceLayoutParams",
    "Violation",
    "ValidationReport",
    "validate_layout",
    "build_reference_layout",
    "point_in_electrode",
    "layout_to_dict",
    "layout_from_dict",
    "load_layout",
    "save_layout",
]


class Role(Enum):
    RF = "rf"
    CONTROL = "control"
    GROUND = "ground"


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Polygon:
    """Simple polygon in the electrode plane, vertices in µm.

    Vertices are stored counterclockwise; clockwise input is reversed on
    construction.  Degenerate or self-intersecting input is accepted here
    and reported by :func:`validate_layout` (violations are data, not
    construction errors).
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidParams("polygon needs >= 3 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidParams("polygon vertices must be finite")
        if _signed_area(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", _freeze(v))

    @property
    def area(self) -> float:
        return abs(_signed_area(self.vertices))

    @property
    def bounds(self) -> np.ndarray:
        """[xmin, ymin, xmax, ymax]"""
        v = self.vertices
        return np.array([v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()])

    def is_rectilinear(self, tol: float = 1e-12) -> bool:
        v = self.vertices
        d = np.roll(v, -1, axis=0) - v
        return bool(np.all((np.abs(d[:, 0]) <= tol) | (np.abs(d[:, 1]) <= tol)))

    def contains(self, x: float, y: float) -> bool:
        """Point containment; points on the boundary count as inside."""
        return bool(self._shapely().covers(sgeom.Point(x, y)))

    def _shapely(self):
        return sgeom.Polygon(self.vertices)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    """Axis-aligned rectangular polygon."""
    return Polygon(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))


@dataclass(frozen=True)
class Electrode:
    name: str
    role: Role
    polygons: tuple[Polygon, ...]

    def __post_init__(self):
        if not self.name:
            raise InvalidParams("electrode name must be non-empty")
        object.__setattr__(self, "polygons", tuple(self.polygons))

    @property
    def area(self) -> float:
        return sum(p.area for p in self.polygons)

    @property
    def bounds(self) -> np.ndarray:
        bs = np.array([p.bounds for p in self.polygons])
        return np.array([bs[:, 0].min(), bs[:, 1].min(), bs[:, 2].max(), bs[:, 3].max()])


@dataclass(frozen=True)
class TrapLayout:
    """Named planar electrodes plus the grounded remainder of the plane.

    ``min_gap`` is the declared minimum clearance (µm) between distinct
    electrodes; :func:`validate_layout` reports narrower gaps and the
    mesher refines panels within ``2 * min_gap`` of electrode edges.
    """

    electrodes: tuple[Electrode, ...]
    ground_plane: bool = True
    min_gap: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "electrodes", tuple(self.electrodes))

    def __getitem__(self, name: str) -> Electrode:
        for e in self.electrodes:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.electrodes)

    def by_role(self, role: Role) -> tuple[Electrode, ...]:
        return tuple(e for e in self.electrodes if e.role is role)

    @property
    def bounds(self) -> np.ndarray:
        bs = np.array([e.bounds for e in self.electrodes])
        return np.array([bs[:, 0].min(), bs[:, 1].min(), bs[:, 2].max(), bs[:, 3].max()])


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str                       # self_intersection | overlap | gap | duplicate_name | degenerate | no_rf
    electrodes: tuple[str, ...]
    message: str

    def as_dict(self):
        return {"kind": self.kind, "electrodes": list(self.electrodes), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    def __bool__(self):
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations


def _poly_shapely_raw(p: Polygon):
    # shapely.Polygon of possibly-invalid input; no repair, we want to detect.
    return sgeom.Polygon(p.vertices)


def validate_layout(layout: TrapLayout) -> ValidationReport:
    """Check every layout invariant and report all violations found.

    Violations are data, not exceptions; an empty report means valid.
    The report ordering is deterministic (sorted by kind, names, message).
    """
    out: list[Violation] = []

    seen: dict[str, int] = {}
    for e in layout.electrodes:
        seen[e.name] = seen.get(e.name, 0) + 1
    for name, count in seen.items():
        if count > 1:
            out.append(Violation("duplicate_name", (name,),
                                 f"electrode name {name!r} appears {count} times"))

    shapes: dict[int, object] = {}
    degenerate: set[int] = set()
    for i, e in enumerate(layout.electrodes):
        parts = []
        for j, p in enumerate(e.polygons):
            sp = _poly_shapely_raw(p)
            if p.area <= 0.0:
                out.append(Violation("degenerate", (e.name,),
                                     f"polygon {j} of {e.name!r} has zero area"))
                degenerate.add(i)
                continue
            if not sp.is_valid:
                out.append(Violation("self_intersection", (e.name,),
                                     f"polygon {j} of {e.name!r} is self-intersecting"))
                degenerate.add(i)
                continue
            parts.append(sp)
        if parts:
            shapes[i] = shapely.unary_union(parts) if len(parts) > 1 else parts[0]
            # polygons of one electrode must be pairwise disjoint
            if len(parts) > 1:
                for a in range(len(parts)):
                    for b in range(a + 1, len(parts)):
                        inter = parts[a].intersection(parts[b])
                        if inter.area > 0.0:
                            out.append(Violation("overlap", (e.name, e.name),
                                                 f"polygons {a} and {b} of {e.name!r} overlap"))

    names = layout.names
    idx = sorted(shapes)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            i, j = idx[a], idx[b]
            sa, sb = shapes[i], shapes[j]
            inter = sa.intersection(sb)
            if getattr(inter, "area", 0.0) > 0.0:
                out.append(Violation("overlap", (names[i], names[j]),
                                     f"electrodes {names[i]!r} and {names[j]!r} share interior area"))
            else:
                d = sa.distance(sb)
                if d < layout.min_gap - 1e-9:
                    out.append(Violation("gap", (names[i], names[j]),
                                         f"gap between {names[i]!r} and {names[j]!r} is "
                                         f"{d:.6g} um < declared minimum {layout.min_gap:.6g} um"))

    if not any(e.role is Role.RF for e in layout.electrodes):
        out.append(Violation("no_rf", (), "layout declares no RF electrode"))

    out.sort(key=lambda v: (v.kind, v.electrodes, v.message))
    return ValidationReport(tuple(out))


def point_in_electrode(layout: TrapLayout, x: float, y: float) -> str | None:
    """Name of the electrode containing (x, y), or None for gap/ground.

    On-edge points count as inside; if an edge is shared (invalid layout)
    the first electrode in declaration order wins.
    """
    for e in layout.electrodes:
        for p in e.polygons:
            if p.contains(x, y):
                return e.name
    return None


# --------------------------------------------------------------------------
# Reference layout
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceLayoutParams:
    """Parameters of the packaged single-plane five-control-electrode trap.

    The published device this layout approximates gives no electrode
    dimensions, so the defaults below are calibrated numbers: they place
    the RF null near 40 µm above the surface at the reference operating
    point (125 V at 87 MHz), give the static potential of the published
    voltage set a confining axial well near the measured frequency, and
    rotate the radial principal axes to roughly 45 degrees via the rail
    width asymmetry.  All lengths in µm; everything can be overridden via
    configuration.
    """

    rf_rail_width: float = 40.0
    center_control_width: float = 40.0
    outer_control_width: float = 100.0
    gap: float = 5.0
    axial_segment_lengths: tuple[float, ...] = (100.0, 100.0, 100.0)
    rail_asymmetry: float = 1.0
    overall_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "axial_segment_lengths",
                           tuple(float(v) for v in self.axial_segment_lengths))
        vals = (self.rf_rail_width, self.center_control_width,
                self.outer_control_width, self.gap, self.rail_asymmetry,
                self.overall_scale, *self.axial_segment_lengths)
        if not self.axial_segment_lengths:
            raise InvalidParams("axial_segment_lengths must not be empty")
        if any((not np.isfinite(v)) or v <= 0.0 for v in vals):
            raise InvalidParams("all reference layout dimensions must be > 0")


def build_reference_layout(params: ReferenceLayoutParams | None = None) -> TrapLayout:
    """Construct the reference five-control-electrode surface trap.

    Plan view (x = trap axis, y = transverse)::

        y
        ^  [            control2  strip            ]   outer strip
        |  [            rf1 rail                   ]
        |  [ control3 ][ control1 ][ control5 ]        segmented center strip
        |  [            rf2 rail (wider)           ]
        |  [            control4  strip            ]   outer strip
        +----------------------------------------------> x

    The trap zone sits over the middle center-strip segment (control1):
    at the published static set its potential is below both flanking
    segments (control3, control5), which act as the axial endcaps.  The
    outer strips control2/control4 carry the near-opposite voltage pair
    that nulls the static field at the RF null and rotates the radial
    principal axes toward 45 degrees; the RF rail width asymmetry
    (``rail_asymmetry``, rf2 wider) offsets the null transversely, which
    assists both.  Every coordinate scales linearly (exactly, for
    power-of-two factors) with ``overall_scale``.
    """
    p = params or ReferenceLayoutParams()
    s = p.overall_scale
    g = p.gap
    half_center = p.center_control_width / 2.0

    # axial extent: center segments separated by gaps, centered on x = 0
    total = sum(p.axial_segment_lengths) + g * (len(p.axial_segment_lengths) - 1)
    x_lo = -total / 2.0
    x_hi = total / 2.0

    y_rf1_lo = half_center + g
    y_rf1_hi = y_rf1_lo + p.rf_rail_width
    y_rf2_hi = -half_center - g
    y_rf2_lo = y_rf2_hi - p.rail_asymmetry * p.rf_rail_width

    def rect(x0, y0, x1, y1):
        return rectangle(x0 * s, y0 * s, x1 * s, y1 * s)

    n_seg = len(p.axial_segment_lengths)
    # center-strip segment numbering: middle segment is control1, its
    # left neighbor control3, right neighbor control5, consistent with
    # the published voltage pattern forming a well on control1.  Extra
    # segments (if more than three are requested) continue as 6, 7, ...
    if n_seg == 3:
        numbers = [3, 1, 5]
    elif n_seg == 1:
        numbers = [1]
    else:
        numbers = list(range(6, 6 + n_seg))
        mid = n_seg // 2
        numbers[mid] = 1
        if mid > 0:
            numbers[mid - 1] = 3
        if mid + 1 < n_seg:
            numbers[mid + 1] = 5
    electrodes = []
    x = x_lo
    for num, seg in zip(numbers, p.axial_segment_lengths):
        electrodes.append(Electrode(f"control{num}", Role.CONTROL,
                                    (rect(x, -half_center, x + seg, half_center),)))
        x += seg + g
    electrodes.append(Electrode("control2", Role.CONTROL,
                                (rect(x_lo, y_rf1_hi + g, x_hi,
                                      y_rf1_hi + g + p.outer_control_width),)))
    electrodes.append(Electrode("control4", Role.CONTROL,
                                (rect(x_lo, y_rf2_lo - g - p.outer_control_width, x_hi,
                                      y_rf2_lo - g),)))
    electrodes.append(Electrode("rf1", Role.RF, (rect(x_lo, y_rf1_lo, x_hi, y_rf1_hi),)))
    electrodes.append(Electrode("rf2", Role.RF, (rect(x_lo, y_rf2_lo, x_hi, y_rf2_hi),)))

    return TrapLayout(tuple(electrodes), ground_plane=True, min_gap=g * s)


# --------------------------------------------------------------------------
# JSON layout files
# --------------------------------------------------------------------------

_ROLE_NAMES = {r.value: r for r in Role}


def layout_to_dict(layout: TrapLayout) -> dict:
    return {
        "unit": "um",
        "min_gap": layout.min_gap,
        "ground_plane": layout.ground_plane,
        "electrodes": [
            {
                "name": e.name,
                "role": e.role.value,
                "polygons": [[[float(x), float(y)] for x, y in p.vertices]
                             for p in e.polygons],
            }
            for e in layout.electrodes
        ],
    }


def layout_from_dict(data: dict) -> TrapLayout:
    if not isinstance(data, dict):
        raise InvalidParams("layout document must be a JSON object")
    allowed = {"unit", "min_gap", "ground_plane", "electrodes"}
    unknown = set(data) - allowed
    if unknown:
        raise InvalidParams(f"unknown layout keys: {sorted(unknown)}")
    if data.get("unit", "um") != "um":
        raise InvalidParams(f"unsupported layout unit {data.get('unit')!r}")
    electrodes = []
    for entry in data.get("electrodes", []):
        extra = set(entry) - {"name", "role", "polygons"}
        if extra:
            raise InvalidParams(f"unknown electrode keys: {sorted(extra)}")
        role = entry.get("role")
        if role not in _ROLE_NAMES:
            raise InvalidParams(f"unknown electrode role {role!r}")
        polys = tuple(Polygon(np.asarray(v, dtype=float)) for v in entry["polygons"])
        electrodes.append(Electrode(entry["name"], _ROLE_NAMES[role], polys))
    return TrapLayout(tuple(electrodes),
                      ground_plane=bool(data.get("ground_plane", True)),
                      min_gap=float(data.get("min_gap", 5.0)))


def load_layout(path) -> TrapLayout:
    with open(path, "r", encoding="utf-8") as fh:
        return layout_from_dict(json.load(fh))


def save_layout(layout: TrapLayout, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(layout_to_dict(layout), fh, indent=2)
        fh.write("\n")
