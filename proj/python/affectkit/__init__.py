"""Speech emotion recognition: MFCC+pitch features, TDNN embeddings, LDA/pLDA backend.

Thin wrappers over the native module. Configs are plain dicts using the same
keys as the CLI config file sections; anything omitted keeps its default.
"""

import json

import numpy as np

from . import _core
from ._core import (
    Backend,
    Error,
    FormatError,
    InvalidArgument,
    NumericalError,
    Tdnn,
    canonical_label,
    canonical_names,
    compute_eer,
    read_emb1,
    read_wav,
)

__all__ = [
    "Backend", "Error", "FormatError", "InvalidArgument", "NumericalError", "Tdnn",
    "backend_metadata", "canonical_label", "canonical_names", "classification_report",
    "compute_eer", "default_feature_config", "extract_features", "fuse", "load_backend",
    "load_tdnn", "read_emb1", "read_wav", "train_backend", "write_emb1",
]


def _dump(cfg):
    return "" if cfg is None else json.dumps(cfg)


def default_feature_config():
    return json.loads(_core.default_feature_config())


def extract_features(samples, sample_rate, config=None, dither_seed=0):
    """Returns a (frames, dims) float32 array."""
    samples = np.ascontiguousarray(samples, dtype=np.float32)
    return _core.extract_features(samples, float(sample_rate), _dump(config), int(dither_seed))


def load_tdnn(path):
    return Tdnn.load(str(path))


def load_backend(path):
    return Backend.load(str(path))


def write_emb1(path, ids, matrix, modality="speech"):
    _core.write_emb1(str(path), list(ids), np.asarray(matrix, dtype=np.float32), modality)


def fuse(speech_ids, speech, text_ids, text, surrogates=None):
    """Concatenates speech and text rows; text is found by id or by surrogate."""
    return _core.fuse(list(speech_ids), np.asarray(speech, dtype=np.float32), list(text_ids),
                      np.asarray(text, dtype=np.float32), dict(surrogates or {}))


def train_backend(rows, labels, classes, config=None):
    """rows: (N, D) embeddings; labels: class indices into `classes`."""
    return _core.train_backend(np.asarray(rows, dtype=np.float64), [int(x) for x in labels],
                               list(classes), _dump(config))


def backend_metadata(backend):
    return json.loads(backend.metadata)


def classification_report(preds, golds, classes):
    rep = json.loads(_core.classification_report(list(preds), list(golds), list(classes)))
    return {k: v for k, v in rep.items() if v is not None}
