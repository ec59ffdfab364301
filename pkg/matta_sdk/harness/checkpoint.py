"""
Checkpoint container.

    b"MATT1\\n" | u64 little-endian header length | UTF-8 JSON header | data

The header holds {version, config, tensors, final_step, metrics} and, for
extracted sub-models, a ``standalone`` layout record. Each tensor entry is
{name, dtype: "f32", shape, offset, byte_len}; offsets are relative to the
start of the data section and 64-byte aligned. Data is little-endian IEEE-754
32-bit.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..diffcore import Rng
from ..matlayers import MatTAModel, model_new
from ..utils.errors import CheckpointError
from ..utils.file_utils import ensure_directory
from .config import parse_run_config

MAGIC = b"MATT1\n"
FORMAT_VERSION = 1
ALIGNMENT = 64
STORED_DTYPE = np.dtype("<f4")
OPTIM_PREFIX = "optim."

_LENGTH = struct.Struct("<Q")


@dataclass(eq=False)
class Checkpoint:
    config: Dict[str, Any]
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    final_step: int = 0
    metrics: Dict[str, Any] = field(default_factory=dict)
    standalone: Optional[Dict[str, Any]] = None
    version: int = FORMAT_VERSION

    @property
    def is_standalone(self) -> bool:
        return self.standalone is not None

    def model_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if not k.startswith(OPTIM_PREFIX)}

    def optimizer_tensors(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if k.startswith(OPTIM_PREFIX)}


def to_stored_precision(values: np.ndarray) -> np.ndarray:
    """Round to the on-disk 32-bit precision and widen back to float64."""
    return np.asarray(values, dtype=np.float64).astype(STORED_DTYPE).astype(np.float64)


def _aligned(offset: int) -> int:
    return (offset + ALIGNMENT - 1) // ALIGNMENT * ALIGNMENT


def save_checkpoint(path: Path, ckpt: Checkpoint) -> Path:
    """
    Write a checkpoint: magic bytes, JSON header, then aligned little-endian float32 tensors.

    Args:
        path: Destination file; parent directories are created.
        ckpt: The checkpoint to store.

    Returns:
        The path written.
    """
    path = Path(path)
    entries: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, values in ckpt.tensors.items():
        data = np.ascontiguousarray(np.asarray(values, dtype=np.float64).astype(STORED_DTYPE)).tobytes()
        start = _aligned(offset)
        if start > offset:
            chunks.append(b"\0" * (start - offset))
        entries.append({
            "name": name,
            "dtype": "f32",
            "shape": list(np.shape(values)),
            "offset": start,
            "byte_len": len(data),
        })
        chunks.append(data)
        offset = start + len(data)

    header: Dict[str, Any] = {
        "version": ckpt.version,
        "config": ckpt.config,
        "tensors": entries,
        "final_step": ckpt.final_step,
        "metrics": ckpt.metrics,
    }
    if ckpt.standalone is not None:
        header["standalone"] = ckpt.standalone
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

    ensure_directory(path.parent)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_LENGTH.pack(len(header_bytes)))
        f.write(header_bytes)
        for chunk in chunks:
            f.write(chunk)
    return path


def _fail(path: Path, message: str) -> CheckpointError:
    return CheckpointError(
        f"{path}: {message}",
        fix_instructions=["Re-create the checkpoint with matta-train or matta-extract"],
    )


def _validate_entry(path: Path, entry: Any, data_len: int) -> Dict[str, Any]:
    if not isinstance(entry, dict):
        raise _fail(path, "tensor table entry is not an object")
    missing = {"name", "dtype", "shape", "offset", "byte_len"} - set(entry)
    if missing:
        raise _fail(path, f"tensor table entry lacks {', '.join(sorted(missing))}")
    name = entry["name"]
    if entry["dtype"] != "f32":
        raise _fail(path, f"tensor '{name}' has unsupported dtype {entry['dtype']!r}")
    shape = entry["shape"]
    if not isinstance(shape, list) or not all(isinstance(s, int) and s >= 0 for s in shape):
        raise _fail(path, f"tensor '{name}' has invalid shape {shape!r}")
    offset, byte_len = entry["offset"], entry["byte_len"]
    if not isinstance(offset, int) or not isinstance(byte_len, int) or offset < 0 or byte_len < 0:
        raise _fail(path, f"tensor '{name}' has invalid offset/length")
    expected = int(np.prod(shape, dtype=np.int64)) * STORED_DTYPE.itemsize
    if byte_len != expected:
        raise _fail(path, f"tensor '{name}' byte_len {byte_len} does not match shape {shape} ({expected} bytes)")
    if offset % ALIGNMENT:
        raise _fail(path, f"tensor '{name}' offset {offset} is not {ALIGNMENT}-byte aligned")
    if offset + byte_len > data_len:
        raise _fail(path, f"tensor '{name}' runs past the end of the file (truncated data?)")
    return entry


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Read and validate a checkpoint written by save_checkpoint.

    Raises CheckpointError naming the file for any structural problem.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    blob = path.read_bytes()
    prefix = len(MAGIC) + _LENGTH.size
    if len(blob) < prefix:
        raise _fail(path, "file is too short to be a checkpoint")
    if blob[: len(MAGIC)] != MAGIC:
        raise _fail(path, "bad magic bytes (not a MATT1 checkpoint)")
    (header_len,) = _LENGTH.unpack_from(blob, len(MAGIC))
    if prefix + header_len > len(blob):
        raise _fail(path, f"header length {header_len} exceeds file size")
    try:
        header = json.loads(blob[prefix: prefix + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise _fail(path, f"corrupt header ({e})") from e
    if not isinstance(header, dict):
        raise _fail(path, "header is not a JSON object")
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise _fail(path, f"unsupported format version {version!r} (expected {FORMAT_VERSION})")

    data = memoryview(blob)[prefix + header_len:]
    table = header.get("tensors")
    if not isinstance(table, list):
        raise _fail(path, "tensor table missing")
    entries = [_validate_entry(path, entry, len(data)) for entry in table]

    names = [e["name"] for e in entries]
    if len(set(names)) != len(names):
        raise _fail(path, "duplicate tensor names in table")
    ordered = sorted(entries, key=lambda e: e["offset"])
    for previous, current in zip(ordered, ordered[1:]):
        if previous["offset"] + previous["byte_len"] > current["offset"]:
            raise _fail(path, f"tensors '{previous['name']}' and '{current['name']}' overlap")

    tensors: Dict[str, np.ndarray] = {}
    for entry in entries:
        count = entry["byte_len"] // STORED_DTYPE.itemsize
        values = np.frombuffer(data, dtype=STORED_DTYPE, count=count, offset=entry["offset"])
        tensors[entry["name"]] = values.astype(np.float64).reshape(entry["shape"])

    return Checkpoint(
        config=header.get("config") or {},
        tensors=tensors,
        final_step=int(header.get("final_step", 0)),
        metrics=header.get("metrics") or {},
        standalone=header.get("standalone"),
        version=version,
    )


def model_from_tensors(config, tensors: Dict[str, np.ndarray]) -> MatTAModel:
    """Rebuild a MatTAModel for ``config`` (a RunConfig) from a tensor table."""
    model = model_new(config.dims, config.sharing, Rng(0), config.model.activation)
    expected = set(model.named_tensors())
    present = {k for k in tensors if not k.startswith(OPTIM_PREFIX)}
    if expected != present:
        missing = sorted(expected - present)
        extra = sorted(present - expected)
        raise CheckpointError(
            f"Tensor table does not match the model (missing: {missing[:5]}, unexpected: {extra[:5]})"
        )
    for name in expected:
        model.set_tensor(name, np.array(tensors[name], dtype=np.float64))
    return model


def model_from_checkpoint(ckpt: Checkpoint):
    """Return (RunConfig, MatTAModel) for a co-training checkpoint."""
    if ckpt.is_standalone:
        raise CheckpointError(
            f"Checkpoint holds the extracted sub-model '{ckpt.standalone.get('label', '?')}', not a MatTA model",
            fix_instructions=["Pass the checkpoint written by matta-train (checkpoint.matt)"],
        )
    config = parse_run_config(ckpt.config)
    return config, model_from_tensors(config, ckpt.model_tensors())
