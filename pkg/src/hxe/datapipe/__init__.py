"""Raw episodes to training batches: persistence, normalization, alignment, labels, mixtures."""

from hxe.datapipe.alignment import AlignmentMap, align_to_unified, alignment_for, canonical_map
from hxe.datapipe.io import (
    ChecksumError,
    FormatError,
    PersistenceError,
    TruncatedError,
    VersionError,
    decode_episode,
    encode_episode,
    read_dataset,
    write_dataset,
)
from hxe.datapipe.labels import (
    TrainingSample,
    egocentric_waypoints,
    label_rows,
    make_sample,
    sample_goal,
    unified_labels,
)
from hxe.datapipe.manifest import DatasetManifest, build_manifest
from hxe.datapipe.mixture import Batch, MixtureSampler
from hxe.datapipe.normalize import NormStats, RangeWarning, denormalize_action, fit_normalization, normalize_action

__all__ = [
    "AlignmentMap", "align_to_unified", "alignment_for", "canonical_map", "ChecksumError",
    "FormatError", "PersistenceError", "TruncatedError", "VersionError", "decode_episode",
    "encode_episode", "read_dataset", "write_dataset", "TrainingSample", "egocentric_waypoints",
    "label_rows", "make_sample", "sample_goal", "unified_labels", "DatasetManifest",
    "build_manifest", "Batch", "MixtureSampler", "NormStats", "RangeWarning",
    "denormalize_action", "fit_normalization", "normalize_action",
]
