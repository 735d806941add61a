"""Arbitrary-precision eigenenergy bounds from moment equations.

Numbers go in and come out as decimal strings.
"""

import json as _json

from ._core import (
    ConfigError,
    DomainError,
    NoSignChange,
    NotConverged,
    NotPositiveDefinite,
    NoUpperCrossing,
    NumericError,
    Problem,
    __version__,
    custom_1d,
    estimate_bu,
    harmonic,
    qzm,
)
from ._core import run as _run


def run(command, config, precision=None, b_u=None, out=None):
    """Run scan / minimize / bound on a config (dict or JSON text); returns the ledger dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_run(command, text, precision, b_u, out))


__all__ = [
    "ConfigError",
    "DomainError",
    "NoSignChange",
    "NotConverged",
    "NotPositiveDefinite",
    "NoUpperCrossing",
    "NumericError",
    "Problem",
    "__version__",
    "custom_1d",
    "estimate_bu",
    "harmonic",
    "qzm",
    "run",
]
