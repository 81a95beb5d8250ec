"""msmkit: survival and multi-state analysis with a CLI and JSON service."""

from . import analyses, dataio, errors, markovcheck, msmprob, regression, survcore

__version__ = "0.1.0"

__all__ = [
    "analyses",
    "dataio",
    "errors",
    "markovcheck",
    "msmprob",
    "regression",
    "survcore",
    "__version__",
]
