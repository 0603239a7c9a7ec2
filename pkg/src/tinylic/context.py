"""Multistage context model: grouped channels, checkerboard phases.

The latent's channels split into four contiguous groups in ratio 1:1:2:4
(small groups first, so later groups see richer context). Group 1 is
coded in four spatial phases keyed by (i mod 2, j mod 2); groups 2-4 use
two-phase parity checkerboards (anchors first). That yields ten streams:

    (g1,p1..p4), (g2,p1..p2), (g3,p1..p2), (g4,p1..p2)

Before each stream, a per-(group, phase) network of 1x1 convolutions maps
the hyper features plus the occupancy-masked decoded-so-far latent to
(mu, sigma) for that group's channels at every position. Unoccupied
context cells are zeroed before the network runs, so the emitted bits are
a pure function of the hyper features, the weights, and previously
scheduled cells. Encoder and decoder walk the identical schedule and
update identical context buffers, so their states can never diverge.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .entropy import SIGMA_MIN, SYMBOL_BOUND, gaussian_cdf_rows, rate_from_rows
from .errors import ConfigError, SchedulingError, ShapeError
from .rangecoder import rc_decode, rc_encode
from .tensor_ops import gelu
from .weights import group_sizes, phases_per_group

NUM_STREAMS = 10


@dataclass(frozen=True)
class GroupPlan:
    """Four contiguous channel ranges covering [0, C_y)."""

    ranges: tuple

    def channel_slice(self, group):
        start, stop = self.ranges[group - 1]
        return slice(start, stop)

    def size(self, group):
        start, stop = self.ranges[group - 1]
        return stop - start


def partition_channels(c_y) -> GroupPlan:
    """Split C_y channels into contiguous groups sized 1:1:2:4."""
    if c_y % 8:
        raise ConfigError(f"latent channels must divide by 8, got {c_y}")
    sizes = group_sizes(c_y)
    ranges = []
    start = 0
    for s in sizes:
        ranges.append((start, start + s))
        start += s
    return GroupPlan(tuple(ranges))


def spatial_phases(stage, h, w):
    """Ordered disjoint masks covering the h x w grid for one stage.

    Stage 1: four masks keyed by (i mod 2, j mod 2) in order
    (0,0),(0,1),(1,0),(1,1). Stages 2-4: parity checkerboard, anchors
    ((i+j) mod 2 == 0) first.
    """
    if not (1 <= stage <= 4):
        raise ConfigError(f"stage must be 1..4, got {stage}")
    if h < 1 or w < 1:
        raise ShapeError(f"grid dims must be positive, got {h}x{w}")
    ii = np.arange(h)[:, None]
    jj = np.arange(w)[None, :]
    if stage == 1:
        return [
            ((ii % 2 == a) & (jj % 2 == b))
            for (a, b) in ((0, 0), (0, 1), (1, 0), (1, 1))
        ]
    par = (ii + jj) % 2
    return [par == 0, par == 1]


def full_schedule(c_y):
    """The ten (group, phase) steps in coding order."""
    steps = []
    for g, nphase in enumerate(phases_per_group(), start=1):
        for p in range(1, nphase + 1):
            steps.append((g, p))
    return steps


@dataclass
class ContextState:
    """Everything the entropy-parameter networks may condition on."""

    psi: np.ndarray        # (h, w, 2*C_y) hyper features
    y_partial: np.ndarray  # (h, w, C_y) decoded scaled latent, 0 elsewhere
    occupancy: np.ndarray  # (h, w, C_y) 1.0 where decoded

    @classmethod
    def fresh(cls, psi, c_y):
        psi = np.ascontiguousarray(psi, dtype=np.float64)
        if psi.ndim != 3 or psi.shape[2] != 2 * c_y:
            raise ShapeError(f"hyper features must be (h, w, {2 * c_y}), got {psi.shape}")
        h, w = psi.shape[:2]
        return cls(
            psi=psi,
            y_partial=np.zeros((h, w, c_y)),
            occupancy=np.zeros((h, w, c_y)),
        )


def _expected_occupancy(plan, h, w, upto_step):
    occ = np.zeros((h, w, plan.ranges[-1][1]))
    for g, p in full_schedule(plan.ranges[-1][1])[:upto_step]:
        mask = spatial_phases(g, h, w)[p - 1]
        occ[:, :, plan.channel_slice(g)][mask] = 1.0
    return occ


def entropy_params(state: ContextState, group, phase, ws, cfg):
    """(mu, sigma) for the group's channels at every position.

    The network input is the channel concatenation of the hyper features
    and the occupancy-masked partial latent; sigma is softplus-mapped and
    floored at SIGMA_MIN. Raises SchedulingError if the occupancy is not
    exactly the union of previously scheduled cells.
    """
    c_y = state.y_partial.shape[2]
    h, w = state.y_partial.shape[:2]
    plan = partition_channels(c_y)
    steps = full_schedule(c_y)
    if (group, phase) not in steps:
        raise ConfigError(f"no such step: group {group}, phase {phase}")
    step_index = steps.index((group, phase))
    if not np.array_equal(state.occupancy, _expected_occupancy(plan, h, w, step_index)):
        raise SchedulingError(
            f"occupancy does not match the schedule before group {group} phase {phase}"
        )
    masked = state.y_partial * state.occupancy
    net_in = np.concatenate([state.psi, masked], axis=2).reshape(h * w, -1)
    prefix = f"mcm.group{group}.phase{phase}"
    t = _kernels.linear_core(net_in, ws[f"{prefix}.fc1.weight"], ws[f"{prefix}.fc1.bias"])
    t = gelu(t)
    t = _kernels.linear_core(t, ws[f"{prefix}.fc2.weight"], ws[f"{prefix}.fc2.bias"])
    gsize = plan.size(group)
    t = t.reshape(h, w, 2 * gsize)
    mu = t[:, :, :gsize]
    sigma = np.maximum(SIGMA_MIN, _kernels.softplus_vec(t[:, :, gsize:]))
    return mu, sigma


def _phase_cells(plan, group, phase, h, w):
    mask = spatial_phases(group, h, w)[phase - 1]
    idx_i, idx_j = np.nonzero(mask)  # raster order
    return idx_i, idx_j, plan.channel_slice(group)


def _commit(state, idx_i, idx_j, chs, symbols2d, mu):
    """Write decoded values (s + mu) and mark cells occupied."""
    state.y_partial[idx_i, idx_j, chs] = symbols2d.astype(np.float64) + mu[idx_i, idx_j]
    state.occupancy[idx_i, idx_j, chs] = 1.0


def _run_schedule(state, ws, cfg, per_phase, on_phase=None, state_trace=None):
    """Drive the ten steps; per_phase does the actual coding work."""
    c_y = state.y_partial.shape[2]
    h, w = state.y_partial.shape[:2]
    plan = partition_channels(c_y)
    for step, (g, p) in enumerate(full_schedule(c_y)):
        if on_phase is not None:
            on_phase(state, step)
        mu, sigma = entropy_params(state, g, p, ws, cfg)
        idx_i, idx_j, chs = _phase_cells(plan, g, p, h, w)
        sub_mu = mu[idx_i, idx_j]
        sub_sigma = sigma[idx_i, idx_j]
        rows = gaussian_cdf_rows(sub_sigma.ravel())
        symbols2d = per_phase(step, idx_i, idx_j, chs, sub_mu, rows)
        _commit(state, idx_i, idx_j, chs, symbols2d, mu)
        if state_trace is not None:
            state_trace.append((state.occupancy.copy(), state.y_partial.copy()))


def mcm_encode(symbols, psi, ws, cfg, on_phase=None, state_trace=None):
    """Encode a full (h, w, C_y) symbol tensor into the ten streams.

    Symbols are taken as given (already formed); the context update uses
    s + mu exactly as the decoder will reconstruct it.
    """
    symbols = np.asarray(symbols)
    c_y = cfg.latent_channels
    if symbols.ndim != 3 or symbols.shape[2] != c_y:
        raise ShapeError(f"symbols must be (h, w, {c_y}), got {symbols.shape}")
    if np.abs(symbols).max(initial=0) > SYMBOL_BOUND:
        raise ShapeError(f"symbols outside coder support +-{SYMBOL_BOUND}")
    state = ContextState.fresh(psi, c_y)
    streams = []

    def per_phase(step, idx_i, idx_j, chs, sub_mu, rows):
        sub = symbols[idx_i, idx_j, chs]
        streams.append(rc_encode(sub.ravel() + SYMBOL_BOUND, rows))
        return sub

    _run_schedule(state, ws, cfg, per_phase, on_phase, state_trace)
    return streams


def mcm_decompress(streams, psi, ws, cfg, state_trace=None):
    """Decode the ten streams; returns (symbols, y_hat_scaled).

    y_hat_scaled is s + mu in the scaled domain, bitwise identical to the
    encoder's own context buffer.
    """
    if len(streams) != NUM_STREAMS:
        raise ShapeError(f"expected {NUM_STREAMS} streams, got {len(streams)}")
    c_y = cfg.latent_channels
    state = ContextState.fresh(psi, c_y)
    h, w = state.psi.shape[:2]
    out = np.zeros((h, w, c_y), dtype=np.int64)

    def per_phase(step, idx_i, idx_j, chs, sub_mu, rows):
        n = rows.shape[0]
        decoded = rc_decode(streams[step], rows, n) - SYMBOL_BOUND
        sub = decoded.reshape(idx_i.shape[0], -1)
        out[idx_i, idx_j, chs] = sub
        return sub

    _run_schedule(state, ws, cfg, per_phase, state_trace=state_trace)
    return out, state.y_partial.copy()


def mcm_decode(streams, psi, ws, cfg, state_trace=None):
    """Decode the ten streams back into the (h, w, C_y) symbol tensor."""
    symbols, _ = mcm_decompress(streams, psi, ws, cfg, state_trace=state_trace)
    return symbols


def mcm_compress(y_scaled, psi, ws, cfg, on_phase=None, state_trace=None):
    """Form symbols phase by phase and encode them.

    Returns (streams, symbols, y_hat_scaled, rate_estimate_bits, clamped):
    y_hat_scaled is the decoder-reproducible scaled latent (s + mu), and
    rate_estimate_bits is the model's theoretical cost of the symbols.
    """
    y_scaled = np.ascontiguousarray(y_scaled, dtype=np.float64)
    c_y = cfg.latent_channels
    if y_scaled.ndim != 3 or y_scaled.shape[2] != c_y:
        raise ShapeError(f"latent must be (h, w, {c_y}), got {y_scaled.shape}")
    state = ContextState.fresh(psi, c_y)
    h, w = state.psi.shape[:2]
    symbols = np.zeros((h, w, c_y), dtype=np.int64)
    streams = []
    stats = {"rate": 0.0, "clamped": 0}

    def per_phase(step, idx_i, idx_j, chs, sub_mu, rows):
        target = y_scaled[idx_i, idx_j, chs]
        d = target - sub_mu
        s = np.floor(np.abs(d) + 0.5) * np.sign(d)
        stats["clamped"] += int(np.count_nonzero(np.abs(s) > SYMBOL_BOUND))
        s = np.clip(s, -SYMBOL_BOUND, SYMBOL_BOUND).astype(np.int64)
        idx = s.ravel() + SYMBOL_BOUND
        streams.append(rc_encode(idx, rows))
        stats["rate"] += rate_from_rows(idx, rows)
        symbols[idx_i, idx_j, chs] = s
        return s

    _run_schedule(state, ws, cfg, per_phase, on_phase, state_trace)
    return streams, symbols, state.y_partial.copy(), stats["rate"], stats["clamped"]
