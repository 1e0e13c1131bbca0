"""Checkpoint persistence: versioned flat binary plus a JSON sidecar.

The binary file holds named float64 arrays, little-endian, each record as

    name_length u32 | name utf-8 | ndim u32 | dims u32... | values f64...

preceded by an 8-byte magic and a u32 format version and record count.  The
sidecar carries the run configuration, the seed, the generator state, and
per-series integer metadata, serialized canonically (sorted keys, compact
separators) so that save -> load -> save is byte-identical.
"""

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, config_from_dict, config_to_dict
from .errors import ValidationError
from .es import EsState
from .network import Network, collect_parameters, init_network
from .timeseries import HOURS_PER_WEEK

MAGIC = b"LOADCAST"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """One trained ensemble member plus everything needed to resume it."""

    config: RunConfig
    seed: int
    net: Network
    es_states: dict        # series_id -> EsState, settled at end of training data
    series_meta: dict      # series_id -> {"start": iso, "n_hours": int}
    rng_state: dict


def _write_array(fh, name: str, arr: np.ndarray):
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<I", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<I", arr.ndim))
    for dim in arr.shape:
        fh.write(struct.pack("<I", dim))
    fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def _read_exact(fh, n: int) -> bytes:
    raw = fh.read(n)
    if len(raw) != n:
        raise ValidationError("checkpoint binary is truncated")
    return raw


def _read_array(fh):
    raw = fh.read(4)
    if not raw:
        return None
    if len(raw) != 4:
        raise ValidationError("checkpoint binary is truncated")
    (name_len,) = struct.unpack("<I", raw)
    name = _read_exact(fh, name_len).decode("utf-8")
    (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
    shape = tuple(struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(ndim))
    count = int(np.prod(shape)) if shape else 1
    data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8").reshape(shape)
    return name, np.ascontiguousarray(data, dtype=np.float64)


def _named_arrays(ckpt: Checkpoint):
    for name, tensor_ in collect_parameters(ckpt.net):
        yield name, tensor_.data
    for sid in sorted(ckpt.es_states):
        state = ckpt.es_states[sid]
        yield f"es.{sid}.level", state.level.data
        yield f"es.{sid}.ring", np.array([slot.item() for slot in state.ring]).reshape(-1, 1)
        yield f"es.{sid}.coeffs", np.array([[state.alpha.item()], [state.beta.item()]])


def save_checkpoint(ckpt: Checkpoint, binary_path, sidecar_path):
    arrays = list(_named_arrays(ckpt))
    with open(binary_path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(arrays)))
        for name, arr in arrays:
            _write_array(fh, name, arr)
    sidecar = {
        "format_version": FORMAT_VERSION,
        "config": config_to_dict(ckpt.config),
        "seed": ckpt.seed,
        "rng_state": ckpt.rng_state,
        "series": {
            sid: {
                "position": ckpt.es_states[sid].position,
                **ckpt.series_meta.get(sid, {}),
            }
            for sid in sorted(ckpt.es_states)
        },
        "binary": os.path.basename(str(binary_path)),
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _rebuild_es_state(arrays: dict, sid: str, position: int, cfg: RunConfig) -> EsState:
    from .es import _scalar  # module-private helper shared on purpose

    level = arrays[f"es.{sid}.level"]
    ring = arrays[f"es.{sid}.ring"]
    coeffs = arrays[f"es.{sid}.coeffs"]
    if ring.shape != (HOURS_PER_WEEK, 1):
        raise ValidationError(f"checkpoint ring for {sid} has shape {ring.shape}")
    alpha = float(coeffs[0, 0])
    beta = float(coeffs[1, 0])
    return EsState(
        level=_scalar(float(level[0, 0])),
        ring=[_scalar(float(v)) for v in ring[:, 0]],
        position=int(position),
        alpha=_scalar(alpha),
        beta=_scalar(beta),
        alpha_rest=_scalar(1.0 - alpha),
        beta_rest=_scalar(1.0 - beta),
        i_alpha=cfg.schedule.base_alpha_logit,
        i_beta=cfg.schedule.base_beta_logit,
    )


def load_checkpoint(binary_path, sidecar_path) -> Checkpoint:
    try:
        with open(sidecar_path, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read checkpoint sidecar {sidecar_path}: {exc}") from exc
    if sidecar.get("format_version") != FORMAT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint format {sidecar.get('format_version')!r}"
        )
    config = config_from_dict(sidecar["config"])
    arrays = {}
    try:
        with open(binary_path, "rb") as fh:
            if fh.read(len(MAGIC)) != MAGIC:
                raise ValidationError(f"{binary_path} is not a checkpoint")
            version, count = struct.unpack("<II", fh.read(8))
            if version != FORMAT_VERSION:
                raise ValidationError(f"unsupported checkpoint binary version {version}")
            for _ in range(count):
                item = _read_array(fh)
                if item is None:
                    raise ValidationError(f"{binary_path} is truncated")
                arrays[item[0]] = item[1]
    except OSError as exc:
        raise ValidationError(f"cannot read checkpoint {binary_path}: {exc}") from exc

    net = init_network(np.random.default_rng(0), config.resolved().network)
    for name, tensor_ in collect_parameters(net):
        if name not in arrays:
            raise ValidationError(f"checkpoint is missing parameter {name}")
        if arrays[name].shape != tensor_.data.shape:
            raise ValidationError(
                f"parameter {name} has shape {arrays[name].shape}, "
                f"expected {tensor_.data.shape}"
            )
        tensor_.data[:] = arrays[name]
    es_states = {}
    series_meta = {}
    for sid, meta in sidecar.get("series", {}).items():
        es_states[sid] = _rebuild_es_state(arrays, sid, meta["position"], config)
        series_meta[sid] = {k: v for k, v in meta.items() if k != "position"}
    return Checkpoint(
        config=config,
        seed=int(sidecar["seed"]),
        net=net,
        es_states=es_states,
        series_meta=series_meta,
        rng_state=sidecar["rng_state"],
    )
