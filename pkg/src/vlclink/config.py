"""Run configuration, lens catalog and calibration presets.

The config file is JSON; every key is optional and falls back to the
defaults below.  Scene lengths are metres, optics millimetres.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from . import __version__
from .errors import ConfigError, DomainError
from .geometry import RxMode, ScenePoint
from .optics import LensSpec, PhotodiodeSpec, SourceSpec
from .radiometry import Reference, calibrate_scale, pattern_from_dict
from .telecom import Axis, CalibrationCurve

DEFAULT_DISTANCES = [3.0, 6.0, 12.0, 18.0, 25.0, 37.0, 50.0]

# Chosen to give an amplitude-vs-distance curve that peaks between 5 and
# 10 m; not measured values.
DEFAULT_PATTERN = {"kind": "generalized_lambertian", "peak_intensity": 1.0,
                   "tilt_deg": 0.0, "order_v": 20.0, "order_h": 8.0}
DEFAULT_REFERENCE = {"lens": "AS2", "distance_m": 6.0, "lateral_m": 0.0,
                     "mode": "optimal", "amplitude_mV": 1500.0}


def _data_path(name: str):
    return resources.files("vlclink") / "data" / name


def load_lens_catalog(path=None) -> dict[str, LensSpec]:
    """Lens table keyed by label, in file order."""
    src = Path(path) if path else _data_path("lenses.csv")
    try:
        with src.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read lens catalog: {exc}") from None
    catalog = {}
    for i, row in enumerate(rows, start=2):
        try:
            lens = LensSpec(label=row["label"], diameter=float(row["diameter_mm"]),
                            focal_length=float(row["focal_mm"]), kind=row["kind"],
                            vendor_code=row.get("vendor_code", ""))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"lens catalog line {i}: {exc}") from None
        catalog[lens.label] = lens
    return catalog


def _records(obj):
    if isinstance(obj, dict) and "preset" in obj:
        return [obj["preset"]]
    if isinstance(obj, dict):
        return [obj]
    return list(obj)


def load_presets(path=None) -> dict[str, CalibrationCurve]:
    """Calibration presets keyed by label.

    Accepts a list of records, a single record, or a fit report carrying a
    ``preset`` entry.
    """
    src = Path(path) if path else _data_path("presets.json")
    try:
        data = json.loads(src.read_text())
        curves = [CalibrationCurve.from_record(r) for r in _records(data)]
    except OSError as exc:
        raise ConfigError(f"cannot read presets: {exc}") from None
    except (KeyError, ValueError, TypeError, DomainError) as exc:
        raise ConfigError(f"malformed preset file {src}: {exc}") from None
    return {c.label: c for c in curves}


def preset_label(baud: int, lights: str) -> str:
    return f"lights-{lights}-{int(baud) // 1000}k"


@dataclass
class RunConfig:
    tx_height_m: float = 3.0
    rx_height_m: float = 1.05
    distances_m: list = field(default_factory=lambda: list(DEFAULT_DISTANCES))
    lateral_offsets_m: list = field(default_factory=lambda: [0.0, 1.5])
    modes: list = field(default_factory=lambda: ["optimal", "flat"])
    lenses: list = field(default_factory=lambda: ["AS1", "AS2", "FR1", "FR2"])
    lens_catalog: str | None = None
    photodiode_side_mm: float = 3.6
    source_diameter_mm: float = 300.0
    pattern: dict = field(default_factory=lambda: dict(DEFAULT_PATTERN))
    reference: dict = field(default_factory=lambda: dict(DEFAULT_REFERENCE))
    preset: str | None = None  # label; derived from baud/lights when None
    preset_file: str | None = None
    baud: int = 115200
    lights: str = "off"
    threshold: float = 1e-3
    axes: list = field(default_factory=lambda: ["horizontal", "vertical"])
    efov_lateral_m: float = 0.0
    scan: dict = field(default_factory=lambda: {
        "lens": "AS2", "distance_m": 18.0, "lateral_m": 0.0, "axis": "vertical",
        "span_deg": 15.0, "step_deg": 0.1})

    def validate(self) -> "RunConfig":
        lengths = [self.tx_height_m, self.rx_height_m, self.photodiode_side_mm,
                   self.source_diameter_mm, *self.distances_m]
        if any(not (isinstance(v, (int, float)) and v > 0) for v in lengths):
            raise ConfigError("all lengths must be positive numbers")
        if any(v < 0 for v in self.lateral_offsets_m) or self.efov_lateral_m < 0:
            raise ConfigError("lateral offsets must be >= 0")
        if not self.tx_height_m > self.rx_height_m:
            raise ConfigError("tx_height_m must exceed rx_height_m")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.lights not in ("on", "off"):
            raise ConfigError("lights must be 'on' or 'off'")
        try:
            [RxMode.parse(m) for m in self.modes]
            [Axis.parse(a) for a in self.axes]
            Axis.parse(self.scan.get("axis", "vertical"))
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        if not self.lenses:
            raise ConfigError("no lenses selected")
        return self

    def override(self, **kw) -> "RunConfig":
        """Flag overrides; ``None`` values leave the file value alone."""
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def header(self) -> str:
        return f"# vlclink {__version__} config_sha256={self.digest()}"


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(**data)
    base = Path(path).parent
    # relative paths in the file are resolved against the file's directory
    for key in ("lens_catalog", "preset_file"):
        val = getattr(cfg, key)
        if val and not Path(val).is_absolute():
            setattr(cfg, key, str(base / val))
    if cfg.pattern.get("kind") == "tabulated" and not Path(cfg.pattern["csv"]).is_absolute():
        cfg.pattern = {**cfg.pattern, "csv": str(base / cfg.pattern["csv"])}
    return cfg.validate()


@dataclass
class Setup:
    """Everything a command needs, built once from a :class:`RunConfig`."""

    config: RunConfig
    catalog: dict
    lenses: list
    pd: PhotodiodeSpec
    src: SourceSpec
    pattern: object
    curve: CalibrationCurve

    def scene(self, distance, lateral=0.0, mode="optimal") -> ScenePoint:
        c = self.config
        return ScenePoint(float(distance), float(lateral), c.tx_height_m, c.rx_height_m,
                          RxMode.parse(mode))

    def lens(self, label: str) -> LensSpec:
        try:
            return self.catalog[label]
        except KeyError:
            raise ConfigError(f"unknown lens label {label!r}") from None


def build_setup(cfg: RunConfig) -> Setup:
    catalog = load_lens_catalog(cfg.lens_catalog)
    labels = list(catalog) if cfg.lenses in ("all", ["all"]) else list(cfg.lenses)
    missing = [lab for lab in labels if lab not in catalog]
    if missing:
        raise ConfigError(f"unknown lens label(s): {', '.join(missing)}")
    try:
        pd = PhotodiodeSpec(cfg.photodiode_side_mm)
        src = SourceSpec(cfg.source_diameter_mm)
        raw = pattern_from_dict(cfg.pattern)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad pattern spec: {exc}") from None
    ref = cfg.reference
    if ref.get("lens") not in catalog:
        raise ConfigError(f"unknown reference lens {ref.get('lens')!r}")
    try:
        scene = ScenePoint(float(ref["distance_m"]), float(ref.get("lateral_m", 0.0)),
                           cfg.tx_height_m, cfg.rx_height_m, ref.get("mode", "optimal"))
        pattern = calibrate_scale(raw, Reference(scene, catalog[ref["lens"]],
                                                 float(ref["amplitude_mV"])), pd, src)
    except KeyError as exc:
        raise ConfigError(f"reference is missing {exc}") from None

    presets = load_presets(cfg.preset_file) if cfg.preset_file else load_presets()
    if cfg.preset:
        label = cfg.preset
    elif cfg.preset_file and len(presets) == 1:
        label = next(iter(presets))
    else:
        label = preset_label(cfg.baud, cfg.lights)
    if label not in presets:
        raise ConfigError(f"no calibration preset {label!r}")
    return Setup(cfg, catalog, [catalog[lab] for lab in labels], pd, src, pattern,
                 presets[label])

