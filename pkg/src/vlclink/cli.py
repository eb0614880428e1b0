"""Command-line front end.

Subcommands::

    vlclink sweep            amplitude and PER over the road grid
    vlclink efov             effective field of view vs distance
    vlclink afov             apparent FOV and transition angles per lens
    vlclink scan-sim         simulated amplitude vs receiver tilt
    vlclink fit-calibration  fit (T, sigma) to a PER-vs-amplitude CSV
    vlclink fit-scan         fit direct + reflection model to an angular scan

Tables go to ``--out`` (stdout by default) as CSV, each starting with a
``#`` line carrying the package version and a hash of the effective config.
Fit commands write JSON reports.

Exit codes: 0 ok, 2 config/domain error, 3 fit failure, 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import __version__
from .config import RunConfig, build_setup, load_config, preset_label
from .errors import (CalibrationError, ConfigError, DomainError, FitError, ParseError)
from .fitting import SCAN_PARAMS, ScanContext, direct_efov, fit_angular_scan, fit_calibration
from .geometry import los_angles
from .measurements import read_calibration_csv, read_scan_csv, write_rows
from .optics import afov, image_geometry, received_amplitude, transition_angles
from .telecom import Axis, efov, packet_error_rate

EXIT_OK, EXIT_CONFIG, EXIT_FIT, EXIT_IO = 0, 2, 3, 4


# --- table builders (pure; the CLI only formats and writes) ---------------

def sweep_rows(setup):
    cfg = setup.config
    rows = []
    for lens in setup.lenses:
        for mode in cfg.modes:
            for lat in cfg.lateral_offsets_m:
                for dist in cfg.distances_m:
                    angles = los_angles(setup.scene(dist, lat, mode))
                    S = received_amplitude(angles, lens, setup.pd, setup.src, setup.pattern)
                    per = packet_error_rate(S, setup.curve).per
                    rows.append((lens.label, mode, float(lat), float(dist), S, per))
    return rows


def efov_rows(setup):
    cfg = setup.config
    rows = []
    for lens in setup.lenses:
        for axis in cfg.axes:
            for dist in cfg.distances_m:
                scene = setup.scene(dist, cfg.efov_lateral_m)
                e = efov(axis, lens, setup.pd, setup.src, setup.pattern, setup.curve,
                         scene, cfg.threshold)
                # no link (no signal, or aligned PER above threshold) -> empty cell
                rows.append((lens.label, Axis.parse(axis).value, float(dist), e or None))
    return rows


def afov_rows(setup):
    rows = []
    for lens in setup.lenses:
        a = afov(lens, setup.pd)
        for dist in setup.config.distances_m:
            angles = los_angles(setup.scene(dist))
            R = image_geometry(lens, setup.src, angles).image_radius
            phi1, phi2 = transition_angles(lens, setup.pd, R)
            rows.append((lens.label, float(dist), lens.focal_length, lens.diameter, a, R,
                         phi1, phi2))
    return rows


def _scan_grid(span, step):
    n = int(round(2 * span / step))
    return np.round(-span + step * np.arange(n + 1), 10)


def scan_sim_rows(setup, distances=None, axes=None):
    """Aligned-receiver amplitude vs tilt; ``phi_deg`` is measured from flat."""
    cfg = setup.config
    scan = cfg.scan
    grid = _scan_grid(float(scan.get("span_deg", 15.0)), float(scan.get("step_deg", 0.1)))
    rows = []
    for lens in setup.lenses:
        for axis in axes or cfg.axes:
            axis = Axis.parse(axis)
            for dist in distances or cfg.distances_m:
                scene = setup.scene(dist, float(scan.get("lateral_m", 0.0)))
                ctx = ScanContext(lens, setup.pd, setup.src, setup.pattern, scene, axis)
                lamp = ctx.lamp_angle
                base = los_angles(scene)
                for phi in grid:
                    m = float(phi) - lamp
                    a = base.rotated(phi_H=m) if axis is Axis.HORIZONTAL else base.rotated(phi_V=m)
                    S = received_amplitude(a, lens, setup.pd, setup.src, setup.pattern)
                    rows.append((lens.label, axis.value, float(dist), float(phi), S,
                                 packet_error_rate(S, setup.curve).per))
    return rows


def calibration_report(samples, n_bits, baud, lights, label=None, source=""):
    fit = fit_calibration(samples, n_bits)
    label = label or preset_label(baud, lights)
    curve = fit.curve(baud=baud, label=label, lights=lights)
    return {
        "version": __version__,
        "source": source,
        "n_samples": len(samples),
        "T_mV": fit.T,
        "sigma_mV": fit.sigma,
        "stderr": {"T_mV": float(fit.stderr[0]), "sigma_mV": float(fit.stderr[1])},
        "covariance": fit.covariance.tolist(),
        "residual": fit.residual,
        "n_iter": fit.n_iter,
        "preset": curve.to_record(),
    }


def scan_report(fit, curve, threshold, source=""):
    lo, hi = float(fit.phi.min()), float(fit.phi.max())
    n = int(math.floor((hi - lo) / 0.1 + 1e-9))
    phi = np.round(lo + 0.1 * np.arange(n + 1), 10)
    direct = np.asarray(fit.direct(phi))
    refl = np.asarray(fit.reflection(phi))
    e = direct_efov(fit, curve, threshold)
    phi1, phi2 = fit.transition
    return {
        "version": __version__,
        "source": source,
        "lens": fit.context.lens.label,
        "axis": fit.context.axis.value,
        "distance_m": fit.context.scene.distance,
        "lamp_angle_deg": fit.lamp_angle,
        "params": fit.params,
        "stderr": {k: float(v) for k, v in fit.stderr.items()},
        "covariance_order": list(SCAN_PARAMS),
        "covariance": fit.covariance.tolist(),
        "free": list(fit.free),
        "chi2": fit.chi2,
        "residual_rms_mV": fit.residual_rms,
        "n_iter": fit.n_iter,
        "transition_deg": [phi1, phi2],
        "efov_direct_deg": e,
        "preset": curve.to_record(),
        "threshold": threshold,
        "residuals": [{"phi_deg": float(p), "residual_mV": float(a - t)}
                      for p, a, t in zip(fit.phi, fit.amplitude, fit.total(fit.phi))],
        "curves": {"phi_deg": phi.tolist(), "direct_mV": direct.tolist(),
                   "reflection_mV": refl.tolist(), "total_mV": (direct + refl).tolist()},
    }


# --- argument handling -----------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--lens", help="lens label from the catalog, or 'all'")
    p.add_argument("--baud", type=int, choices=(115200, 230400))
    p.add_argument("--lights", choices=("on", "off"))
    p.add_argument("--threshold", type=float, help="PER threshold for the EFOV (default 1e-3)")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vlclink", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"vlclink {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("sweep", "amplitude and PER over the distance/lateral/mode grid"),
                        ("efov", "effective FOV vs distance per lens and axis"),
                        ("afov", "apparent FOV, image radius and transition angles")]:
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("scan-sim", help="amplitude vs receiver tilt")
    _common(p)
    p.add_argument("--distance", type=float, help="single distance in m")
    p.add_argument("--axis", choices=("horizontal", "vertical"))
    p = sub.add_parser("fit-calibration", help="fit T and sigma to a PER curve")
    _common(p)
    p.add_argument("csv", help="columns amplitude_mV,amp_err_mV,per,per_err")
    p.add_argument("--bits", type=int, default=48, help="packet length N (default 48)")
    p.add_argument("--label", help="preset label (default lights-<on|off>-<baud>k)")
    p = sub.add_parser("fit-scan", help="fit direct + reflection model to a tilt scan")
    _common(p)
    p.add_argument("csv", help="columns phi_deg,amplitude_mV,amp_err_mV")
    p.add_argument("--distance", type=float, help="scan distance in m")
    p.add_argument("--axis", choices=("horizontal", "vertical"))
    return ap


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    lenses = None
    if args.lens:
        lenses = ["all"] if args.lens == "all" else [args.lens]
    cfg = cfg.override(lenses=lenses, baud=args.baud, lights=args.lights,
                       threshold=args.threshold)
    if (args.baud or args.lights) and cfg.preset and not cfg.preset_file:
        # explicit flags beat a preset label pinned in the file
        cfg = cfg.override(preset=preset_label(cfg.baud, cfg.lights))
    return cfg.validate()


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    with _open_out(path) as fh:
        fh.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    setup = build_setup(cfg)
    cmd = args.command
    if cmd == "sweep":
        cols = ("lens", "mode", "lateral_m", "distance_m", "amplitude_mV", "per")
        rows = sweep_rows(setup)
    elif cmd == "efov":
        cols = ("lens", "axis", "distance_m", "efov_deg")
        rows = efov_rows(setup)
    elif cmd == "afov":
        cols = ("lens", "distance_m", "focal_mm", "diameter_mm", "afov_deg",
                "image_radius_mm", "phi1_deg", "phi2_deg")
        rows = afov_rows(setup)
    elif cmd == "scan-sim":
        cols = ("lens", "axis", "distance_m", "phi_deg", "amplitude_mV", "per")
        rows = scan_sim_rows(setup, [args.distance] if args.distance else None,
                             [args.axis] if args.axis else None)
    elif cmd == "fit-calibration":
        samples = read_calibration_csv(args.csv)
        report = calibration_report(samples, args.bits, cfg.baud, cfg.lights, args.label,
                                    source=str(args.csv))
        report["config_sha256"] = cfg.digest()
        _write_json(report, args.out)
        return EXIT_OK
    else:  # fit-scan
        samples = read_scan_csv(args.csv)
        scan = cfg.scan
        lens = setup.lens(args.lens if args.lens and args.lens != "all" else scan["lens"])
        dist = args.distance or float(scan["distance_m"])
        axis = Axis.parse(args.axis or scan.get("axis", "vertical"))
        ctx = ScanContext(lens, setup.pd, setup.src, setup.pattern,
                          setup.scene(dist, float(scan.get("lateral_m", 0.0))), axis)
        fit = fit_angular_scan(samples, ctx)
        report = scan_report(fit, setup.curve, cfg.threshold, source=str(args.csv))
        report["config_sha256"] = cfg.digest()
        _write_json(report, args.out)
        return EXIT_OK
    with _open_out(args.out) as fh:
        write_rows(fh, cfg.header(), cols, rows)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except FitError as exc:
        print(f"vlclink: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ParseError, OSError) as exc:
        print(f"vlclink: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DomainError, CalibrationError) as exc:
        print(f"vlclink: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
