"""On-disk formats: .ten tensors and JSON model containers.

Tensor files are a single ASCII header line followed by the raw payload::

    TEN1 <order> <d1,d2,...> f64 row-major\\n
    <8 * prod(dims) bytes of little-endian float64, row-major>

The header parse is strict: unknown tags, inconsistent order/dims, short or
trailing payload bytes, and non-finite entries are all rejected.

Model files are JSON documents with float64 arrays embedded as base64 of
their little-endian bytes, so a load/save round trip preserves predictions
bit-exactly. A sha256 checksum over the canonical serialization (sorted
keys, no whitespace, checksum field excluded) guards integrity. The same
model always serializes to the same bytes.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .regression import (
    FitConfig,
    Hopls2Component,
    Hopls2Model,
    HoplsComponent,
    HoplsModel,
    PlsModel,
)

__all__ = [
    "read_tensor",
    "write_tensor",
    "save_model",
    "load_model",
    "model_checksum",
    "write_json",
]

TENSOR_MAGIC = "TEN1"
MODEL_FORMAT = "tensorpls-model"
MODEL_VERSION = 1


def write_tensor(path, arr: np.ndarray) -> None:
    """Write a tensor to ``path`` in the TEN1 format."""
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim < 1:
        arr = arr.reshape(1)
    if not np.isfinite(arr).all():
        raise FileFormatError("refusing to write non-finite entries")
    dims = ",".join(str(d) for d in arr.shape)
    header = f"{TENSOR_MAGIC} {arr.ndim} {dims} f64 row-major\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    """Read a TEN1 tensor file; any malformation raises FileFormatError."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    nl = raw.find(b"\n")
    if nl < 0:
        raise FileFormatError("missing header line")
    try:
        header = raw[:nl].decode("ascii")
    except UnicodeDecodeError as exc:
        raise FileFormatError("header is not ASCII") from exc
    fields = header.split(" ")
    if len(fields) != 5:
        raise FileFormatError(f"malformed header: {header!r}")
    magic, order_s, dims_s, dtype_tag, layout_tag = fields
    if magic != TENSOR_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    if dtype_tag != "f64":
        raise FileFormatError(f"unsupported dtype tag {dtype_tag!r}")
    if layout_tag != "row-major":
        raise FileFormatError(f"unsupported layout tag {layout_tag!r}")
    try:
        order = int(order_s)
        dims = tuple(int(d) for d in dims_s.split(","))
    except ValueError as exc:
        raise FileFormatError(f"malformed header: {header!r}") from exc
    if order != len(dims) or order < 1 or any(d < 1 for d in dims):
        raise FileFormatError(f"inconsistent order/dims in header: {header!r}")
    payload = raw[nl + 1 :]
    expected = 8 * math.prod(dims)
    if len(payload) != expected:
        raise FileFormatError(
            f"payload is {len(payload)} bytes, expected {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
    if not np.isfinite(arr).all():
        raise FileFormatError("payload contains non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# model container


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8", copy=False).tobytes(order="C")).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    try:
        shape = tuple(int(d) for d in obj["shape"])
        buf = base64.b64decode(obj["data"], validate=True)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed array record: {exc}") from exc
    if len(buf) != 8 * math.prod(shape):
        raise FileFormatError("array payload length mismatch")
    return np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(shape)


def _config_doc(cfg: FitConfig) -> dict:
    return {
        "n_components": cfg.n_components,
        "x_ranks": list(cfg.x_ranks),
        "y_ranks": list(cfg.y_ranks),
        "epsilon": cfg.epsilon,
        "center": cfg.center,
    }


def _config_from_doc(doc: dict) -> FitConfig:
    return FitConfig(
        n_components=int(doc["n_components"]),
        x_ranks=tuple(doc["x_ranks"]),
        y_ranks=tuple(doc["y_ranks"]),
        epsilon=doc["epsilon"],
        center=bool(doc["center"]),
    )


def _canonical_bytes(doc: dict) -> bytes:
    doc = {k: v for k, v in doc.items() if k != "checksum"}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("ascii")


def _opt_array(value):
    return None if value is None else _encode_array(value)


def _opt_decode(value):
    return None if value is None else _decode_array(value)


def _model_doc(model) -> dict:
    if isinstance(model, HoplsModel):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "algo": "hopls",
            "config": _config_doc(model.config),
            "x_shape": list(model.x_shape),
            "y_shape": list(model.y_shape),
            "x_mean": _opt_array(model.x_mean),
            "y_mean": _opt_array(model.y_mean),
            "x_weights": _encode_array(model.x_weights),
            "y_operator": _encode_array(model.y_operator),
            "x_residual_norms": list(model.x_residual_norms),
            "y_residual_norms": list(model.y_residual_norms),
            "stop_reason": model.stop_reason,
            "components": [
                {
                    "t": _encode_array(c.t),
                    "x_loadings": [_encode_array(p) for p in c.x_loadings],
                    "y_loadings": [_encode_array(q) for q in c.y_loadings],
                    "x_core": _encode_array(c.x_core),
                    "y_core": _encode_array(c.y_core),
                }
                for c in model.components
            ],
        }
    if isinstance(model, Hopls2Model):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "algo": "hopls2",
            "config": _config_doc(model.config),
            "x_shape": list(model.x_shape),
            "n_responses": model.n_responses,
            "x_mean": _opt_array(model.x_mean),
            "y_mean": _opt_array(model.y_mean),
            "x_weights": _encode_array(model.x_weights),
            "x_residual_norms": list(model.x_residual_norms),
            "y_residual_norms": list(model.y_residual_norms),
            "stop_reason": model.stop_reason,
            "components": [
                {
                    "t": _encode_array(c.t),
                    "x_loadings": [_encode_array(p) for p in c.x_loadings],
                    "x_core": _encode_array(c.x_core),
                    "q": _encode_array(c.q),
                    "d": c.d,
                    "u": _encode_array(c.u),
                }
                for c in model.components
            ],
        }
    if isinstance(model, PlsModel):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "algo": "pls",
            "n_components": model.n_components,
            "x_weights": _encode_array(model.x_weights),
            "x_loadings": _encode_array(model.x_loadings),
            "y_loadings": _encode_array(model.y_loadings),
            "coefs": _encode_array(model.coefs),
            "scores": _encode_array(model.scores),
            "x_mean": _opt_array(model.x_mean),
            "y_mean": _opt_array(model.y_mean),
            "x_feature_shape": list(model.x_feature_shape),
            "y_feature_shape": list(model.y_feature_shape),
            "x_residual_norms": list(model.x_residual_norms),
            "y_residual_norms": list(model.y_residual_norms),
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def _model_from_doc(doc: dict):
    algo = doc.get("algo")
    if algo == "hopls":
        return HoplsModel(
            config=_config_from_doc(doc["config"]),
            components=tuple(
                HoplsComponent(
                    t=_decode_array(c["t"]),
                    x_loadings=tuple(_decode_array(p) for p in c["x_loadings"]),
                    y_loadings=tuple(_decode_array(q) for q in c["y_loadings"]),
                    x_core=_decode_array(c["x_core"]),
                    y_core=_decode_array(c["y_core"]),
                )
                for c in doc["components"]
            ),
            x_shape=tuple(doc["x_shape"]),
            y_shape=tuple(doc["y_shape"]),
            x_mean=_opt_decode(doc["x_mean"]),
            y_mean=_opt_decode(doc["y_mean"]),
            x_weights=_decode_array(doc["x_weights"]),
            y_operator=_decode_array(doc["y_operator"]),
            x_residual_norms=tuple(doc["x_residual_norms"]),
            y_residual_norms=tuple(doc["y_residual_norms"]),
            stop_reason=doc["stop_reason"],
        )
    if algo == "hopls2":
        return Hopls2Model(
            config=_config_from_doc(doc["config"]),
            components=tuple(
                Hopls2Component(
                    t=_decode_array(c["t"]),
                    x_loadings=tuple(_decode_array(p) for p in c["x_loadings"]),
                    x_core=_decode_array(c["x_core"]),
                    q=_decode_array(c["q"]),
                    d=float(c["d"]),
                    u=_decode_array(c["u"]),
                )
                for c in doc["components"]
            ),
            x_shape=tuple(doc["x_shape"]),
            n_responses=int(doc["n_responses"]),
            x_mean=_opt_decode(doc["x_mean"]),
            y_mean=_opt_decode(doc["y_mean"]),
            x_weights=_decode_array(doc["x_weights"]),
            x_residual_norms=tuple(doc["x_residual_norms"]),
            y_residual_norms=tuple(doc["y_residual_norms"]),
            stop_reason=doc["stop_reason"],
        )
    if algo == "pls":
        return PlsModel(
            n_components=int(doc["n_components"]),
            x_weights=_decode_array(doc["x_weights"]),
            x_loadings=_decode_array(doc["x_loadings"]),
            y_loadings=_decode_array(doc["y_loadings"]),
            coefs=_decode_array(doc["coefs"]),
            scores=_decode_array(doc["scores"]),
            x_mean=_opt_decode(doc["x_mean"]),
            y_mean=_opt_decode(doc["y_mean"]),
            x_feature_shape=tuple(doc["x_feature_shape"]),
            y_feature_shape=tuple(doc["y_feature_shape"]),
            x_residual_norms=tuple(doc["x_residual_norms"]),
            y_residual_norms=tuple(doc["y_residual_norms"]),
        )
    raise FileFormatError(f"unknown model algo tag {algo!r}")


def save_model(path, model) -> str:
    """Write a fitted model; returns the sha256 checksum of the payload."""
    doc = _model_doc(model)
    checksum = hashlib.sha256(_canonical_bytes(doc)).hexdigest()
    doc["checksum"] = checksum
    Path(path).write_bytes(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("ascii")
    )
    return checksum


def load_model(path):
    """Read a model file back; verifies the checksum and the format tag."""
    try:
        doc = json.loads(Path(path).read_bytes())
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"not a model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FileFormatError("not a tensorpls model file")
    if doc.get("version") != MODEL_VERSION:
        raise FileFormatError(f"unsupported model version {doc.get('version')!r}")
    stated = doc.get("checksum")
    actual = hashlib.sha256(_canonical_bytes(doc)).hexdigest()
    if stated != actual:
        raise FileFormatError("model checksum mismatch")
    try:
        return _model_from_doc(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed model document: {exc}") from exc


def model_checksum(path) -> str:
    """Checksum stated in a model file (verifying it against the payload)."""
    try:
        doc = json.loads(Path(path).read_bytes())
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read model file {path}: {exc}") from exc
    stated = doc.get("checksum")
    actual = hashlib.sha256(_canonical_bytes(doc)).hexdigest()
    if stated != actual:
        raise FileFormatError("model checksum mismatch")
    return stated


def write_json(path, doc: dict) -> None:
    """Deterministic JSON writer used for manifests and reports."""
    Path(path).write_bytes(
        (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("ascii")
    )
