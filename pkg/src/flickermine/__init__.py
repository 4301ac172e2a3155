"""flickermine: mine hard negatives and hard positives from video detections.

Detections isolated in time (flickers) become hard-negative candidates;
single-frame dropouts inside consistent tracklets become hard positives.
The package consumes detector output files plus extracted frames and emits
retraining annotation sets and purity-audit reports.
"""

__version__ = "0.1.0"

from .model import (
    AdjacentEvidence,
    BoundingBox,
    ConfigError,
    DetectionRecord,
    EvidenceKind,
    HardPositive,
    LabeledDetection,
    MiningConfig,
    MiningLabel,
    Verdict,
    validate_config,
)

__all__ = [
    "__version__",
    "AdjacentEvidence",
    "BoundingBox",
    "ConfigError",
    "DetectionRecord",
    "EvidenceKind",
    "HardPositive",
    "LabeledDetection",
    "MiningConfig",
    "MiningLabel",
    "Verdict",
    "validate_config",
]
