"""Critical level-curve configurations of analytic functions and polynomial models."""
from .config import (Configuration, GraphMember, SinglePoint, canonical_form, config_equal,
                     from_json, to_json, validate)
from .domain import Domain
from .expr import AnalyticFunction
from .extender import build_extended, build_extended_config
from .extractor import extract, extract_config
from .realizer import realize
from .verifier import verify_model

__version__ = "0.1.0"

__all__ = ["AnalyticFunction", "Configuration", "Domain", "GraphMember", "SinglePoint",
           "build_extended", "build_extended_config", "canonical_form", "config_equal", "extract",
           "extract_config", "from_json", "realize", "to_json", "validate", "verify_model"]
