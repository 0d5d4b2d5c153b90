"""Command line front end.

    planar-trap <subcommand> --config <path> [--out <dir>] [--override k=v]...

Subcommands: validate, map, characterize, compensate, crystal, stability.
Each writes its documented artifacts (JSON/CSV plus a rendered figure)
into the output directory.  Exit codes: 0 success, 1 domain error,
2 configuration error.  Repeated runs on identical inputs produce
byte-identical artifacts.

The environment variable PLANAR_TRAP_THREADS caps the linear-algebra
thread count (exported to the BLAS runtime before numpy loads).
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _parse_override(text: str):
    if "=" not in text:
        raise SystemExit(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planar-trap",
        description="Design and analysis toolkit for single-plane RF ion traps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
            ("validate", "check layout invariants, write violations list"),
            ("map", "export per-electrode basis field map CSV"),
            ("characterize", "locate the trap and write the full report"),
            ("compensate", "solve control voltages for micromotion compensation"),
            ("crystal", "ion chain equilibrium positions and normal modes"),
            ("stability", "Mathieu parameters and Floquet verdict")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory "
                       "(default: output.directory from the config)")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key "
                       "(dotted path, JSON value)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = os.environ.get("PLANAR_TRAP_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    from .errors import ConfigError, PlanarTrapError

    try:
        from .config import parse_config

        overrides = dict(_parse_override(t) for t in args.override)
        cfg = parse_config(args.config, overrides)
        out_dir = cfg.output_dir(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _run(args.command, cfg, out_dir)
    except ConfigError as exc:
        print(f"planar-trap: config error: {exc}", file=sys.stderr)
        return 2
    except PlanarTrapError as exc:
        print(f"planar-trap: {exc}", file=sys.stderr)
        return 1
    return 0


def _field_model(cfg):
    layout = cfg.layout()
    if cfg.raw["solver"]["engine"] == "gapless":
        from .rectfield import GaplessLayoutField

        return layout, GaplessLayoutField(layout)
    from .bem import solve_basis
    from .mesh import mesh_layout

    mesh = mesh_layout(layout, float(cfg.raw["meshing"]["max_panel"]),
                       float(cfg.raw["meshing"]["edge_grading"]))
    return layout, solve_basis(mesh)


def _characterize(cfg, field):
    from .pseudopotential import characterize_trap

    sol = cfg.raw["solver"]
    return characterize_trap(
        field, cfg.drive(), cfg.ion(), cfg.voltages(),
        seed_region=cfg.seed_region(),
        depth_box_factor=float(sol["depth_box_factor"]),
        depth_grid_um=float(sol["depth_grid_um"]),
        depth_coarse_grid_um=float(sol["depth_coarse_grid_um"]))


def _run(command: str, cfg, out_dir) -> None:
    import numpy as np

    from . import plots
    from .io import write_csv, write_json

    if command == "validate":
        from .geometry import validate_layout

        layout = cfg.layout()
        report = validate_layout(layout)
        write_json(out_dir / "validation.json",
                   {"valid": report.ok,
                    "violations": [v.as_dict() for v in report.violations]})
        plots.save_layout_figure(out_dir / "layout.png", layout,
                                 title=("valid layout" if report.ok else
                                        f"{len(report.violations)} violation(s)"))
        return

    if command == "map":
        layout, field = _field_model(cfg)
        name = cfg.raw["map"]["electrode"]
        weights = ({n: 1.0 for n in field.rf_names} if name == "rf"
                   else {name: 1.0})
        points = cfg.map_grid()
        order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
        points = points[order]
        pot, e, _ = field.weighted(weights).evaluate(points, want_hessian=False)
        rows = [(p[0], p[1], p[2], name, pot[i], e[i, 0], e[i, 1], e[i, 2])
                for i, p in enumerate(points)]
        write_csv(out_dir / "field_map.csv",
                  ["x_um", "y_um", "z_um", "electrode", "potential_V",
                   "Ex", "Ey", "Ez"], rows)
        plots.save_map_figure(out_dir / "field_map.png", points, pot,
                              f"potential of {name} basis (V)")
        return

    if command == "characterize":
        layout, field = _field_model(cfg)
        report = _characterize(cfg, field)
        write_json(out_dir / "trap_report.json", report.as_dict())
        plots.save_characterize_figure(out_dir / "characterize.png", layout,
                                       report, cfg.raw["voltages"])
        beam = cfg.raw["beam"]
        if beam["direction"] is not None:
            from .pseudopotential import laser_overlap_check

            overlap = laser_overlap_check(
                report, np.asarray(beam["direction"], dtype=float),
                threshold=float(beam["threshold"]),
                allow_out_of_plane=bool(beam["allow_out_of_plane"]))
            write_json(out_dir / "laser_overlap.json",
                       {"projections": list(overlap.projections),
                        "threshold": overlap.threshold,
                        "passed": overlap.passed})
        return

    if command == "compensate":
        from .compensation import (ConstraintSpec, axial_curvature_for,
                                   build_constraint_system, residual_diagnostics,
                                   solve_voltages)
        from .pseudopotential import find_rf_null

        layout, field = _field_model(cfg)
        comp = cfg.raw["compensation"]
        if comp["null_point"] is not None:
            null = np.asarray(comp["null_point"], dtype=float)
            null = find_rf_null(field, cfg.drive(), fixed_axial=null[0],
                                tolerance_v_per_m=np.inf)
        else:
            null = find_rf_null(
                field, cfg.drive(), cfg.seed_region(),
                tolerance_v_per_m=float(cfg.raw["solver"]["null_tolerance_v_per_m"]))
        spec = ConstraintSpec(
            null_point=null,
            target_static_field=np.asarray(comp["target_field_v_per_m"], dtype=float),
            target_axial_curvature=axial_curvature_for(
                cfg.ion(), float(comp["target_axial_frequency_hz"])),
            axial_direction=np.asarray(comp["axial_direction"], dtype=float),
            locked_voltages={k: float(v) for k, v in comp["locked"].items()},
            weights=comp["weights"],
            extra_points=tuple(np.asarray(p, dtype=float)
                               for p in comp["extra_points"]))
        result = solve_voltages(build_constraint_system(field, spec))
        diag = residual_diagnostics(field, cfg.drive(), cfg.ion(), result.voltages,
                                    null, axial_direction=spec.axial_direction)
        payload = result.as_dict()
        payload["null_point_um"] = list(null)
        payload["diagnostics"] = diag.as_dict()
        write_json(out_dir / "compensation.json", payload)
        plots.save_compensation_figure(out_dir / "compensation.png", result)
        return

    if command == "crystal":
        from .crystal import (HarmonicPotential, SampledPotential, crystal_length,
                              equilibrium_positions, mode_spectrum_scan,
                              normal_modes)

        cry = cfg.raw["crystal"]
        ion = cfg.ion()
        pot_cfg = cry["potential"]
        if "harmonic_frequency_hz" in pot_cfg:
            potential = HarmonicPotential.from_frequency(
                float(pot_cfg["harmonic_frequency_hz"]))
        else:
            from .pseudopotential import EffectivePotential, axial_scan, find_rf_null

            samp = pot_cfg["sampled"]
            layout, field = _field_model(cfg)
            if samp.get("center_um") is not None:
                x0 = float(samp["center_um"])
                null = find_rf_null(field, cfg.drive(), fixed_axial=x0,
                                    tolerance_v_per_m=np.inf)
            else:
                null = find_rf_null(
                    field, cfg.drive(), cfg.seed_region(),
                    tolerance_v_per_m=float(
                        cfg.raw["solver"]["null_tolerance_v_per_m"]))
            include_rf = bool(samp.get("include_rf", True))
            volts = cfg.voltages()
            s, u = axial_scan(field, cfg.drive(), ion, volts, null,
                              halfspan_um=float(samp["halfspan_um"]),
                              samples=int(samp["samples"]))
            if not include_rf:
                eff = EffectivePotential(field, cfg.drive(), ion, volts)
                d = np.array([1.0, 0.0, 0.0])
                pts = null[None, :] + s[:, None] * d[None, :]
                u = eff.static_energy(pts)
            potential = SampledPotential(positions=null[0] + s, energies=u)
        chain = equilibrium_positions(ion, potential, int(cry["n_ions"]))
        modes = normal_modes(chain)
        write_csv(out_dir / "crystal_positions.csv", ["ion_index", "position_um"],
                  [(str(i), p) for i, p in enumerate(chain.positions)])
        write_csv(out_dir / "crystal_modes.csv", ["mode_index", "freq_hz"],
                  [(str(i), f) for i, f in enumerate(modes.frequencies_hz)])
        drive_freqs = [float(f) for f in cry["drive_frequencies_hz"]]
        if drive_freqs:
            flags = mode_spectrum_scan(chain, drive_freqs,
                                       linewidth=float(cry["resonance_linewidth"]))
            write_csv(out_dir / "crystal_resonances.csv",
                      ["drive_hz", "resonant"],
                      [(f, str(bool(r)).lower()) for f, r in zip(drive_freqs, flags)])
        plots.save_crystal_figure(out_dir / "crystal.png", chain, modes)
        write_json(out_dir / "crystal_summary.json",
                   {"n_ions": len(chain),
                    "length_um": crystal_length(chain),
                    "gradient_norm_ev_per_um": chain.grad_norm,
                    "lowest_mode_hz": float(modes.frequencies_hz[0])})
        return

    if command == "stability":
        from . import mathieu

        layout, field = _field_model(cfg)
        report = _characterize(cfg, field)
        floquet = [mathieu.is_stable(a, q)
                   for a, q in zip(report.mathieu_a, report.mathieu_q)]
        write_json(out_dir / "stability.json",
                   {"mathieu_q": list(report.mathieu_q),
                    "mathieu_a": list(report.mathieu_a),
                    "stable_flag": report.stable,
                    "floquet_stable": floquet,
                    "flag_matches_floquet": report.stable == all(floquet)})
        plots.save_stability_figure(out_dir / "stability.png", report.mathieu_q,
                                    report.mathieu_a, floquet)
        return

    raise ValueError(f"unknown command {command!r}")
