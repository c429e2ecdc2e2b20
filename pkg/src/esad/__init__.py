"""Acoustic anomaly detection toolkit for embedded-class models.

Pipeline stages: WAV ingestion and resampling, MFCC feature extraction,
a compact dense binary classifier trained from scratch, post-training int8
quantization with an integer-only inference kernel, and a full evaluation
suite (confusion matrix, per-class metrics, ROC AUC, average precision).
"""

__version__ = "0.1.0"

from .audio import AudioClip, decode_wav, encode_wav_pcm16, fix_length, resample
from .dataset import (
    DEFAULT_LABEL_MAPPING,
    BinaryLabel,
    ClipRecord,
    SplitSpec,
    map_binary_label,
    parse_metadata,
    stratified_split,
)
from .features import MfccConfig, NormStats, fit_norm_stats, flatten_and_normalize, mfcc
from .metrics import average_precision, classification_report, confusion_at_threshold, roc_auc
from .model_io import load, load_path, save, save_path
from .network import DenseModel, TrainConfig, forward, init_model, train
from .quant import QuantizedModel, calibrate, quantize_weights, quantized_forward, requantize

__all__ = [
    "__version__",
    "AudioClip", "decode_wav", "encode_wav_pcm16", "fix_length", "resample",
    "DEFAULT_LABEL_MAPPING", "BinaryLabel", "ClipRecord", "SplitSpec",
    "map_binary_label", "parse_metadata", "stratified_split",
    "MfccConfig", "NormStats", "fit_norm_stats", "flatten_and_normalize", "mfcc",
    "average_precision", "classification_report", "confusion_at_threshold", "roc_auc",
    "load", "load_path", "save", "save_path",
    "DenseModel", "TrainConfig", "forward", "init_model", "train",
    "QuantizedModel", "calibrate", "quantize_weights", "quantized_forward", "requantize",
]
