"""Binary snapshot and model files.

Snapshot file (``.pdmd``), all numbers little-endian::

    b"PDMD1"            magic
    b"<"                endianness tag
    uint32  n           state dimension
    uint32  ncols       number of snapshots (T + 1)
    float64 dt
    uint32  p           parameter dimension
    float64 x p         theta
    uint32  len         label length in bytes
    bytes   label       UTF-8
    float64 x n*ncols   payload, column by column (snapshot 0 first)

Model file (``.pdmdm``)::

    b"PDMDM1<"          magic + endianness tag
    uint64  len         header length in bytes
    bytes   header      canonical JSON: method, metadata, array table
    ...                 arrays in table order, raw little-endian, C order
"""
from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import json
import os
from pathlib import Path
import struct
import tempfile

import numpy as np

from .baselines import RKOIModel, StackedDMDModel
from .dmd import DMDModel, SnapshotSet
from .errors import InvalidInput
from .params import ParamMap
from .pidmd import PiDMDModel

__all__ = [
    "SnapshotRecord",
    "ModelFile",
    "snapshot_to_bytes",
    "snapshot_from_bytes",
    "write_snapshots",
    "read_snapshots",
    "model_to_bytes",
    "model_from_bytes",
    "save_model",
    "load_model",
    "sha256_file",
    "atomic_write_bytes",
    "atomic_write_text",
    "canonical_json",
]

SNAP_MAGIC = b"PDMD1"
MODEL_MAGIC = b"PDMDM1"
LE = b"<"
FORMAT_VERSION = 1


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def atomic_write_bytes(path, data):
    """Write to a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- snapshots ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SnapshotRecord:
    """Contents of a snapshot file. Unlike :class:`SnapshotSet` a single
    column is allowed (a zero-step prediction)."""

    states: np.ndarray
    dt: float
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    def to_snapshot_set(self):
        return SnapshotSet(self.states, self.dt, self.theta, self.label)

    @classmethod
    def from_snapshot_set(cls, s):
        return cls(s.states, s.dt, s.theta, s.label)


def snapshot_to_bytes(rec):
    states = np.asarray(rec.states, dtype=np.float64)
    if states.ndim != 2:
        raise InvalidInput("states must be 2-D")
    theta = np.atleast_1d(np.asarray(rec.theta, dtype=np.float64)).ravel()
    label = str(rec.label).encode("utf-8")
    n, ncols = states.shape
    head = SNAP_MAGIC + LE + struct.pack("<IId", n, ncols, float(rec.dt))
    head += struct.pack("<I", theta.size) + theta.astype("<f8").tobytes()
    head += struct.pack("<I", len(label)) + label
    return head + states.T.astype("<f8").tobytes()


def snapshot_from_bytes(data):
    if data[:5] != SNAP_MAGIC:
        raise InvalidInput("not a snapshot file (bad magic)")
    tag = data[5:6]
    if tag not in (b"<", b">"):
        raise InvalidInput(f"unknown endianness tag {tag!r}")
    e = tag.decode()
    off = 6
    n, ncols, dt = struct.unpack_from(e + "IId", data, off)
    off += 16
    (p,) = struct.unpack_from(e + "I", data, off)
    off += 4
    theta = np.frombuffer(data, dtype=e + "f8", count=p, offset=off).astype(np.float64)
    off += 8 * p
    (nl,) = struct.unpack_from(e + "I", data, off)
    off += 4
    label = data[off : off + nl].decode("utf-8")
    off += nl
    if len(data) - off != 8 * n * ncols:
        raise InvalidInput(f"payload is {len(data) - off} bytes, expected {8 * n * ncols}")
    payload = np.frombuffer(data, dtype=e + "f8", offset=off).astype(np.float64)
    return SnapshotRecord(payload.reshape(ncols, n).T.copy(), dt, theta, label)


def write_snapshots(path, rec):
    if isinstance(rec, SnapshotSet):
        rec = SnapshotRecord.from_snapshot_set(rec)
    atomic_write_bytes(path, snapshot_to_bytes(rec))


def read_snapshots(path):
    return snapshot_from_bytes(Path(path).read_bytes())


# -- models ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModelFile:
    method: str
    model: object
    meta: dict = field(default_factory=dict)


def _dmd_parts(m, prefix=""):
    arrays = {
        prefix + "Atilde": m.Atilde, prefix + "Phi": m.Phi, prefix + "Omega": m.Omega,
        prefix + "Lambda": m.Lambda, prefix + "W": m.W, prefix + "U_r": m.U_r,
    }
    scalars = {"dt": m.dt, "rank": m.rank, "rank_deficient": m.rank_deficient,
               "eig_residual": m.eig_residual}
    return arrays, scalars


def _dmd_from(arrays, scalars, prefix=""):
    return DMDModel(
        Atilde=arrays[prefix + "Atilde"], Phi=arrays[prefix + "Phi"],
        Omega=arrays[prefix + "Omega"], Lambda=arrays[prefix + "Lambda"],
        W=arrays[prefix + "W"], U_r=arrays[prefix + "U_r"], dt=scalars["dt"],
        rank=scalars["rank"], rank_deficient=scalars["rank_deficient"],
        eig_residual=scalars["eig_residual"],
    )


def _decompose(model):
    if isinstance(model, PiDMDModel):
        arrays = {"Atilde": model.Atilde, "Btilde": model.Btilde, "U_hat": model.U_hat,
                  "training_thetas": model.training_thetas}
        scalars = {"dt": model.dt, "rank_tilde": model.rank_tilde, "rank_hat": model.rank_hat,
                   "training_labels": list(model.training_labels),
                   "training_residual": model.training_residual, "flags": list(model.flags),
                   "param_map": model.param_map.to_dict()}
        return "pidmd", arrays, scalars
    if isinstance(model, DMDModel):
        arrays, scalars = _dmd_parts(model)
        return "dmd", arrays, scalars
    if isinstance(model, StackedDMDModel):
        arrays, scalars = _dmd_parts(model.global_model, "global.")
        arrays.update({"modes": model.modes, "thetas": model.thetas})
        scalars.update({"param_map": model.param_map.to_dict(), "scheme": model.scheme})
        return "stacked", arrays, scalars
    if isinstance(model, RKOIModel):
        arrays = {"basis": model.basis, "operators": model.operators, "thetas": model.thetas}
        scalars = {"param_map": model.param_map.to_dict(), "scheme": model.scheme, "dt": model.dt}
        return "rkoi", arrays, scalars
    raise InvalidInput(f"cannot serialize {type(model).__name__}")


def _compose(method, arrays, s):
    if method == "pidmd":
        return PiDMDModel(
            Atilde=arrays["Atilde"], Btilde=arrays["Btilde"], U_hat=arrays["U_hat"], dt=s["dt"],
            param_map=ParamMap.from_dict(s["param_map"]), rank_tilde=s["rank_tilde"],
            rank_hat=s["rank_hat"], training_thetas=arrays["training_thetas"],
            training_labels=tuple(s["training_labels"]),
            training_residual=s["training_residual"], flags=tuple(s["flags"]),
        )
    if method == "dmd":
        return _dmd_from(arrays, s)
    if method == "stacked":
        return StackedDMDModel(_dmd_from(arrays, s, "global."), arrays["modes"], arrays["thetas"],
                               ParamMap.from_dict(s["param_map"]), s["scheme"])
    if method == "rkoi":
        return RKOIModel(arrays["basis"], arrays["operators"], arrays["thetas"],
                         ParamMap.from_dict(s["param_map"]), s["scheme"], s["dt"])
    raise InvalidInput(f"unknown model method {method!r}")


def _py(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def model_to_bytes(model, meta=None):
    method, arrays, scalars = _decompose(model)
    table, blobs, offset = [], [], 0
    for name in sorted(arrays):
        a = np.asarray(arrays[name])
        dt = "<c16" if np.iscomplexobj(a) else "<f8"
        raw = np.ascontiguousarray(a, dtype=dt).tobytes()
        table.append({"name": name, "dtype": dt, "shape": list(a.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "method": method,
        "scalars": {k: _py(v) for k, v in scalars.items()},
        "meta": meta or {},
        "arrays": table,
    }
    hb = canonical_json(header).encode("utf-8")
    return MODEL_MAGIC + LE + struct.pack("<Q", len(hb)) + hb + b"".join(blobs)


def model_from_bytes(data):
    if data[:6] != MODEL_MAGIC or data[6:7] != LE:
        raise InvalidInput("not a model file (bad magic)")
    (hl,) = struct.unpack_from("<Q", data, 7)
    header = json.loads(data[15 : 15 + hl].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise InvalidInput(f"unsupported model format version {header.get('format_version')}")
    base = 15 + hl
    arrays = {}
    for ent in header["arrays"]:
        start = base + ent["offset"]
        buf = data[start : start + ent["nbytes"]]
        a = np.frombuffer(buf, dtype=ent["dtype"]).reshape(ent["shape"])
        arrays[ent["name"]] = a.astype(np.complex128 if "c" in ent["dtype"] else np.float64)
    model = _compose(header["method"], arrays, header["scalars"])
    return ModelFile(header["method"], model, header.get("meta", {}))


def save_model(path, model, meta=None):
    atomic_write_bytes(path, model_to_bytes(model, meta))


def load_model(path):
    return model_from_bytes(Path(path).read_bytes())
