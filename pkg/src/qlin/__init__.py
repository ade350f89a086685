"""Exact q-series auxiliary linear forms and certified linear-form lower bounds over Q."""

from .certifier import (
    Certificate,
    CertifyOptions,
    certify,
    check_certificate,
    exponent_scan,
    soundness_crosscheck,
)
from .enclosure import Interval, PAdicBall
from .forms import AuxForms, LinearForm
from .places import INFINITY, Place
from .qseries import (
    EvalConfig,
    InstanceError,
    PrecisionError,
    ProblemInstance,
    f_deriv_enclosure,
    pi_n,
    validate_config,
    validate_instance,
)

__version__ = "0.1.0"
