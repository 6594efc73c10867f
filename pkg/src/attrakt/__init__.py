"""Inner estimates of regions of attraction for polynomial systems via SOS programming."""

from importlib.resources import files

from .certificate import ContainmentLink, EraCertificate, PiecewiseMax, load_certificate, save_certificate
from .polycore import Polynomial, lie_derivative
from .roa import (InitializationError, SolverFailure, algorithm3, attach_rational, containment_certificate,
                  piecewise_era, quadratic_seed, recover_rational_lf, reseed_from, step1_feasible,
                  step1_maximize_gamma, step2_update_R)
from .sdp import SdpProblem, SdpSolution, SdpStatus
from .sosprog import SosProgram
from .sysparse import ParseError, PolySystem, RunConfig, parse_config, parse_pieces, parse_system
from .verify import VerificationReport, VerifyConfig, check_certificate

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled example file, e.g. ``data_path("ex1.sys")``."""
    return files(__name__) / "data" / name


def load_example(name: str) -> PolySystem:
    """Parse a bundled system by stem, e.g. ``load_example("ex1")``."""
    return parse_system(data_path(f"{name}.sys").read_text(encoding="utf-8"))
