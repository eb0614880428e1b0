"""Forward model and fitting tools for a traffic-light-to-car VLC receiver."""

__version__ = "0.1.0"

from .errors import (CalibrationError, ConfigError, DomainError, ExtrapolationError,  # noqa: E402
                     FitError, ParseError, RankDeficiencyError, VLCError)
from .geometry import AngleSet, RxMode, ScenePoint, los_angles  # noqa: E402
from .optics import (ImageGeometry, LensKind, LensSpec, PhotodiodeSpec, SourceSpec,  # noqa: E402
                     afov, image_geometry, overlap_fraction_2d, overlap_fraction_axis,
                     received_amplitude, segment_angle_theta, transition_angles)
from .radiometry import (GeneralizedLambertian, Reference, TabulatedMap,  # noqa: E402
                         calibrate_scale, intensity)
from .telecom import (Axis, CalibrationCurve, PERResult, bit_error_prob, efov,  # noqa: E402
                      efov_half_angle, packet_error_rate, required_amplitude)
from .fitting import (CalibrationSample, ScanContext, ScanFitResult, ScanSample,  # noqa: E402
                      direct_component, fit_angular_scan, fit_calibration)
