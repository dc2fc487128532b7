"""Checkpoint directories: ``manifest.json`` plus one raw little-endian blob."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import codes
from ..errors import ManifestMismatch, UnknownCode
from .config import ECCTConfig
from .params import param_shapes

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
BLOB = "params.bin"
DTYPES = {"f32le": np.dtype("<f4"), "f64le": np.dtype("<f8")}


def _code_record(code: codes.LinearCode) -> dict:
    record = code.manifest()
    record["h_conv"] = ["".join(str(int(b)) for b in row) for row in code.h_conv]
    return record


def _code_from_record(record: dict) -> codes.LinearCode:
    h = np.array([[int(c) for c in row] for row in record["h_conv"]], dtype=np.uint8)
    try:
        code = codes.get_code(record["name"])
    except (UnknownCode, ValueError):
        code = None
    if code is not None and code.h_conv.shape == h.shape and np.array_equal(code.h_conv, h):
        return code
    return codes.code_from_pcm(h, name=record["name"])


def save_checkpoint(params: dict, config: ECCTConfig, path) -> Path:
    """Write ``path/manifest.json`` and ``path/params.bin``.

    32-bit models are stored as ``f32le``; 64-bit models keep full precision
    as ``f64le`` so the round trip stays bit-exact.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    tag = "f32le" if config.precision == "f32" else "f64le"
    dtype = DTYPES[tag]
    entries, chunks, offset = [], [], 0
    for name, shape in param_shapes(config).items():
        arr = np.ascontiguousarray(params[name], dtype=dtype)
        if arr.shape != shape:
            raise ManifestMismatch(f"{name}: shape {arr.shape}, config expects {shape}")
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(shape), "dtype": tag, "offset": offset, "length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "code": _code_record(config.code),
        "entries": entries,
    }
    (path / BLOB).write_bytes(b"".join(chunks))
    (path / MANIFEST).write_text(json.dumps(manifest, indent=1))
    return path


def load_checkpoint(path) -> tuple[dict, ECCTConfig]:
    path = Path(path)
    try:
        manifest = json.loads((path / MANIFEST).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestMismatch(f"{path / MANIFEST}: not valid JSON ({exc})") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise ManifestMismatch(f"checkpoint format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    code = _code_from_record(manifest["code"])
    cfg_dict = dict(manifest["config"])
    cfg_dict.pop("code")
    config = ECCTConfig(code=code, **cfg_dict)
    blob = (path / BLOB).read_bytes()
    expected = param_shapes(config)
    params = {}
    for entry in manifest["entries"]:
        name = entry["name"]
        if name not in expected:
            raise ManifestMismatch(f"unexpected parameter {name}")
        if tuple(entry["shape"]) != expected[name]:
            raise ManifestMismatch(f"{name}: stored shape {entry['shape']}, config expects {list(expected[name])}")
        dtype = DTYPES.get(entry["dtype"])
        if dtype is None:
            raise ManifestMismatch(f"{name}: unsupported dtype {entry['dtype']!r}")
        lo, length = entry["offset"], entry["length"]
        if length != int(np.prod(entry["shape"])) * dtype.itemsize or lo + length > len(blob):
            raise ManifestMismatch(f"{name}: blob is truncated or the entry length is wrong")
        arr = np.frombuffer(blob, dtype=dtype, count=length // dtype.itemsize, offset=lo)
        params[name] = arr.reshape(entry["shape"]).astype(config.dtype)
    missing = set(expected) - set(params)
    if missing:
        raise ManifestMismatch(f"missing parameters: {sorted(missing)}")
    return params, config
