"""SABER KEM golden model, coprocessor cycle simulator and design-space sweep."""

from .params import FIRESABER, LIGHTSABER, SABER, ConfigurationError, FormatError, SaberParams, get_params

__version__ = "0.1.0"

__all__ = [
    "FIRESABER",
    "LIGHTSABER",
    "SABER",
    "ConfigurationError",
    "FormatError",
    "SaberParams",
    "get_params",
]
