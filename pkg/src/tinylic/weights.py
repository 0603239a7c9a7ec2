"""Parameter store, deterministic initialization, and the TLWT file format.

Every learnable array has a canonical dotted path like
``main_enc.stage2.rnab1.na.q_proj.weight``. Enumeration is total and
lexicographic; a WeightStore holds exactly the enumerated set, no more,
no less.

Initialization draws each tensor from its own counter-based PRNG stream
keyed by (seed, path), so adding a parameter elsewhere never shifts the
values of existing ones.
"""

import hashlib
import io
import struct

import numpy as np

from .config import HYPER_STAGES, MAIN_STAGES, ModelConfig
from .errors import FormatError, WeightLoadError

_MAGIC = b"TLWT"
_VERSION = 1
_DTYPE_F64 = 0


def _rnab_shapes(prefix, c, cfg):
    w2 = 2 * cfg.window - 1
    rc = cfg.mlp_ratio * c
    return {
        f"{prefix}.ln1.gamma": (c,),
        f"{prefix}.ln1.beta": (c,),
        f"{prefix}.na.q_proj.weight": (c, c),
        f"{prefix}.na.q_proj.bias": (c,),
        f"{prefix}.na.k_proj.weight": (c, c),
        f"{prefix}.na.k_proj.bias": (c,),
        f"{prefix}.na.v_proj.weight": (c, c),
        f"{prefix}.na.v_proj.bias": (c,),
        f"{prefix}.na.out_proj.weight": (c, c),
        f"{prefix}.na.out_proj.bias": (c,),
        f"{prefix}.na.pos_bias": (cfg.heads, w2, w2),
        f"{prefix}.ln2.gamma": (c,),
        f"{prefix}.ln2.beta": (c,),
        f"{prefix}.mlp.fc1.weight": (c, rc),
        f"{prefix}.mlp.fc1.bias": (rc,),
        f"{prefix}.mlp.fc2.weight": (rc, c),
        f"{prefix}.mlp.fc2.bias": (c,),
    }


def group_sizes(c_y):
    """Non-uniform channel group sizes in ratio 1:1:2:4."""
    return (c_y // 8, c_y // 8, c_y // 4, c_y // 2)


def phases_per_group():
    """Spatial phases per channel group: 4-way grid, then checkerboards."""
    return (4, 2, 2, 2)


def enumerate_params(cfg: ModelConfig):
    """All (path, shape) pairs the config demands, lexicographic by path."""
    shapes = {}
    n_stages = MAIN_STAGES + HYPER_STAGES
    for stage in range(1, n_stages + 1):
        enc = "main_enc" if stage <= MAIN_STAGES else "hyper_enc"
        dec = "main_dec" if stage <= MAIN_STAGES else "hyper_dec"
        k = cfg.kernel_sizes[stage - 1]
        cin = cfg.stage_input_width(stage)
        c = cfg.stage_width(stage)
        depth = cfg.depths[stage - 1]
        shapes[f"{enc}.stage{stage}.resample.weight"] = (k, k, cin, c)
        shapes[f"{enc}.stage{stage}.resample.bias"] = (c,)
        # the decoder mirrors: same widths, transposed resampler; the last
        # hyper-decoder stage widens to the psi width instead of C_y
        dec_out = cfg.psi_channels if stage == MAIN_STAGES + 1 else cin
        shapes[f"{dec}.stage{stage}.resample.weight"] = (k, k, c, dec_out)
        shapes[f"{dec}.stage{stage}.resample.bias"] = (dec_out,)
        for j in range(1, depth + 1):
            shapes.update(_rnab_shapes(f"{enc}.stage{stage}.rnab{j}", c, cfg))
            shapes.update(_rnab_shapes(f"{dec}.stage{stage}.rnab{j}", c, cfg))

    c_y = cfg.latent_channels
    hidden = 2 * c_y
    for g, (gsize, nphase) in enumerate(zip(group_sizes(c_y), phases_per_group()), start=1):
        for p in range(1, nphase + 1):
            prefix = f"mcm.group{g}.phase{p}"
            shapes[f"{prefix}.fc1.weight"] = (cfg.psi_channels + c_y, hidden)
            shapes[f"{prefix}.fc1.bias"] = (hidden,)
            shapes[f"{prefix}.fc2.weight"] = (hidden, 2 * gsize)
            shapes[f"{prefix}.fc2.bias"] = (2 * gsize,)

    c_z = cfg.hyper_latent_channels
    shapes["factorized.loc"] = (c_z,)
    shapes["factorized.scale"] = (c_z,)
    return sorted(shapes.items())


class WeightStore:
    """Immutable mapping from canonical path to a float64 array."""

    def __init__(self, cfg: ModelConfig, params: dict):
        expected = dict(enumerate_params(cfg))
        missing = sorted(set(expected) - set(params))
        if missing:
            raise WeightLoadError(f"missing parameter {missing[0]!r}")
        extra = sorted(set(params) - set(expected))
        if extra:
            raise WeightLoadError(f"unexpected parameter {extra[0]!r}")
        store = {}
        for path, shape in expected.items():
            arr = np.ascontiguousarray(params[path], dtype=np.float64)
            if arr.shape != shape:
                raise WeightLoadError(
                    f"parameter {path!r} has shape {arr.shape}, expected {shape}"
                )
            arr.setflags(write=False)
            store[path] = arr
        self.cfg = cfg
        self._params = store

    def __getitem__(self, path):
        return self._params[path]

    def __contains__(self, path):
        return path in self._params

    def paths(self):
        return sorted(self._params)

    def num_params(self):
        return len(self._params)

    def num_scalars(self):
        return sum(a.size for a in self._params.values())


def _param_generator(seed, path):
    digest = hashlib.sha256(f"{seed}:{path}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def init_weights(cfg: ModelConfig, seed: int) -> WeightStore:
    """Deterministic seeded initialization.

    Weights are normal scaled by 1/sqrt(fan_in); biases, positional-bias
    tables, norm shifts, and the factorized loc start at zero; norm gains
    and the factorized scale start at one.
    """
    params = {}
    for path, shape in enumerate_params(cfg):
        if path.endswith(".gamma") or path == "factorized.scale":
            params[path] = np.ones(shape)
        elif path.endswith(".weight"):
            fan_in = int(np.prod(shape[:-1]))
            g = _param_generator(seed, path)
            params[path] = g.standard_normal(shape) * (1.0 / np.sqrt(fan_in))
        else:
            params[path] = np.zeros(shape)
    return WeightStore(cfg, params)


def save_weights(ws: WeightStore) -> bytes:
    """Serialize to the TLWT format (self-describing, diff-able)."""
    out = io.BytesIO()
    out.write(_MAGIC)
    out.write(struct.pack(">B", _VERSION))
    out.write(struct.pack(">I", ws.cfg.hash()))
    paths = ws.paths()
    out.write(struct.pack(">I", len(paths)))
    for path in paths:
        arr = ws[path]
        raw = path.encode()
        out.write(struct.pack(">H", len(raw)))
        out.write(raw)
        out.write(struct.pack(">BB", _DTYPE_F64, arr.ndim))
        for dim in arr.shape:
            out.write(struct.pack(">I", dim))
        out.write(arr.astype("<f8").tobytes())
    return out.getvalue()


def load_weights(data: bytes, cfg: ModelConfig) -> WeightStore:
    """Parse a TLWT blob and validate it against the config."""
    buf = io.BytesIO(data)

    def take(n, what):
        piece = buf.read(n)
        if len(piece) != n:
            raise FormatError(f"weight file truncated while reading {what}")
        return piece

    if take(4, "magic") != _MAGIC:
        raise FormatError("not a TLWT weight file (bad magic)")
    (version,) = struct.unpack(">B", take(1, "version"))
    if version != _VERSION:
        raise FormatError(f"unsupported TLWT version {version}")
    (cfg_hash,) = struct.unpack(">I", take(4, "config hash"))
    if cfg_hash != cfg.hash():
        raise WeightLoadError(
            f"weight file was built for a different config "
            f"(hash {cfg_hash:#010x}, expected {cfg.hash():#010x})"
        )
    (count,) = struct.unpack(">I", take(4, "record count"))
    expected = dict(enumerate_params(cfg))
    params = {}
    for _ in range(count):
        (plen,) = struct.unpack(">H", take(2, "path length"))
        try:
            path = take(plen, "path").decode()
        except UnicodeDecodeError as exc:
            raise FormatError("malformed parameter path in weight file") from exc
        dtype, rank = struct.unpack(">BB", take(2, "dtype/rank"))
        if dtype != _DTYPE_F64:
            raise FormatError(f"parameter {path!r} has unsupported dtype tag {dtype}")
        shape = tuple(
            struct.unpack(">I", take(4, f"dims of {path}"))[0] for _ in range(rank)
        )
        if path in expected and shape != expected[path]:
            raise WeightLoadError(
                f"parameter {path!r} has shape {shape}, expected {expected[path]}"
            )
        size = int(np.prod(shape)) if shape else 1
        raw = take(8 * size, f"data of {path}")
        params[path] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if buf.read(1):
        raise FormatError("trailing bytes after the last weight record")
    return WeightStore(cfg, params)
