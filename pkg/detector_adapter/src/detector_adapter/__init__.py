"""detector-adapter: pretrained detector -> flickermine detection stream."""

__version__ = "0.1.0"

from .adapter import AdapterConfig, AdapterError, LbpFaceDetector, run_detector

__all__ = ["__version__", "AdapterConfig", "AdapterError", "LbpFaceDetector", "run_detector"]
