"""Context model tests: plans, schedules, causality, round trips."""

import numpy as np
import pytest

from tinylic import context as ctx
from tinylic.config import ModelConfig
from tinylic.errors import ConfigError, CorruptStreamError, SchedulingError, ShapeError
from tinylic.weights import init_weights

CFG = ModelConfig()
WS = init_weights(CFG, 0)


def small_setup(seed, h=4, w=4):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(h, w, 2 * CFG.latent_channels)) * 0.5
    symbols = rng.integers(-8, 9, size=(h, w, CFG.latent_channels))
    return rng, psi, symbols


class TestGroupPlan:
    def test_ratio_64(self):
        plan = ctx.partition_channels(64)
        assert plan.ranges == ((0, 8), (8, 16), (16, 32), (32, 64))

    def test_ratio_8(self):
        plan = ctx.partition_channels(8)
        assert plan.ranges == ((0, 1), (1, 2), (2, 4), (4, 8))

    def test_indivisible(self):
        with pytest.raises(ConfigError):
            ctx.partition_channels(12)

    def test_cover_exactly(self):
        plan = ctx.partition_channels(64)
        seen = []
        for g in range(1, 5):
            s = plan.channel_slice(g)
            seen.extend(range(s.start, s.stop))
        assert seen == list(range(64))


class TestSpatialPhases:
    def test_stage1_2x2(self):
        masks = ctx.spatial_phases(1, 2, 2)
        assert len(masks) == 4
        singles = [tuple(np.argwhere(m)[0]) for m in masks]
        assert singles == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_stage2_2x2_anchors_first(self):
        masks = ctx.spatial_phases(2, 2, 2)
        assert len(masks) == 2
        anchors = set(map(tuple, np.argwhere(masks[0])))
        assert anchors == {(0, 0), (1, 1)}
        non = set(map(tuple, np.argwhere(masks[1])))
        assert non == {(0, 1), (1, 0)}

    @pytest.mark.parametrize("stage,h,w", [(1, 3, 5), (2, 1, 1), (3, 7, 2), (4, 4, 4)])
    def test_masks_partition_grid(self, stage, h, w):
        masks = ctx.spatial_phases(stage, h, w)
        total = np.zeros((h, w), dtype=int)
        for m in masks:
            total += m.astype(int)
        assert np.all(total == 1)

    def test_schedule_is_ten_steps(self):
        steps = ctx.full_schedule(64)
        assert len(steps) == ctx.NUM_STREAMS == 10
        assert steps[:4] == [(1, 1), (1, 2), (1, 3), (1, 4)]
        assert steps[4:] == [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)]

    def test_group_and_phase_tile_tensor_once(self):
        h, w, c_y = 4, 6, 64
        plan = ctx.partition_channels(c_y)
        count = np.zeros((h, w, c_y), dtype=int)
        for g, p in ctx.full_schedule(c_y):
            mask = ctx.spatial_phases(g, h, w)[p - 1]
            count[:, :, plan.channel_slice(g)][mask] += 1
        assert np.all(count == 1)


class TestEntropyParams:
    def test_bias_only_network_constant(self):
        # zero weights: output depends only on the biases
        from tinylic.weights import enumerate_params

        params = {p: np.zeros(s) for p, s in enumerate_params(CFG)}
        params["factorized.scale"] = np.ones_like(params["factorized.scale"])
        for g in range(1, 5):
            nyq = [4, 2, 2, 2][g - 1]
            for p in range(1, nyq + 1):
                params[f"mcm.group{g}.phase{p}.fc2.bias"] = (
                    np.arange(params[f"mcm.group{g}.phase{p}.fc2.bias"].shape[0]) * 0.1
                )
        from tinylic.weights import WeightStore

        ws = WeightStore(CFG, params)
        state = ctx.ContextState.fresh(np.random.default_rng(0).normal(size=(4, 4, 128)), 64)
        mu, sigma = ctx.entropy_params(state, 1, 1, ws, CFG)
        assert mu.shape == (4, 4, 8) and sigma.shape == (4, 4, 8)
        # constant across positions
        assert np.all(mu == mu[0, 0])
        assert np.all(sigma == sigma[0, 0])

    def test_output_channel_count(self):
        _, psi, _ = small_setup(1)
        state = ctx.ContextState.fresh(psi, 64)
        mu, sigma = ctx.entropy_params(state, 1, 1, ws=WS, cfg=CFG)
        assert mu.shape[2] == 8
        assert np.all(sigma >= 0.04)

    def test_causality_probe_unoccupied_cells_inert(self):
        _, psi, _ = small_setup(2)
        state = ctx.ContextState.fresh(psi, 64)
        mu1, s1 = ctx.entropy_params(state, 1, 1, WS, CFG)
        # corrupt everything not occupied (nothing is, at step 0)
        state.y_partial += 1e6
        mu2, s2 = ctx.entropy_params(state, 1, 1, WS, CFG)
        assert mu1.tobytes() == mu2.tobytes()
        assert s1.tobytes() == s2.tobytes()

    def test_occupancy_violation_raises(self):
        _, psi, _ = small_setup(3)
        state = ctx.ContextState.fresh(psi, 64)
        state.occupancy[0, 0, 0] = 1.0
        with pytest.raises(SchedulingError):
            ctx.entropy_params(state, 1, 1, WS, CFG)


class TestMcmRoundTrip:
    def test_stream_count(self):
        _, psi, symbols = small_setup(4)
        streams = ctx.mcm_encode(symbols, psi, WS, CFG)
        assert len(streams) == 10

    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip_exact(self, seed):
        _, psi, symbols = small_setup(seed, h=8, w=8)
        streams = ctx.mcm_encode(symbols, psi, WS, CFG)
        back = ctx.mcm_decode(streams, psi, WS, CFG)
        assert np.array_equal(back, symbols)

    def test_encoder_decoder_states_match(self):
        _, psi, symbols = small_setup(10)
        enc_trace, dec_trace = [], []
        streams = ctx.mcm_encode(symbols, psi, WS, CFG, state_trace=enc_trace)
        ctx.mcm_decode(streams, psi, WS, CFG, state_trace=dec_trace)
        assert len(enc_trace) == len(dec_trace) == 10
        for (eo, ey), (do, dy) in zip(enc_trace, dec_trace):
            assert eo.tobytes() == do.tobytes()
            assert ey.tobytes() == dy.tobytes()

    def test_compress_agrees_with_encode(self):
        rng, psi, _ = small_setup(11)
        y_scaled = rng.normal(0, 2, size=(4, 4, 64))
        streams, symbols, y_hat, rate, clamped = ctx.mcm_compress(y_scaled, psi, WS, CFG)
        streams2 = ctx.mcm_encode(symbols, psi, WS, CFG)
        assert [bytes(a) for a in streams] == [bytes(b) for b in streams2]
        assert np.array_equal(ctx.mcm_decode(streams, psi, WS, CFG), symbols)
        assert rate > 0 and clamped == 0

    def test_causality_streams_invariant_to_future_cells(self):
        rng, psi, symbols = small_setup(12)
        plain = ctx.mcm_encode(symbols, psi, WS, CFG)

        def corrupt_future(state, step):
            garbage = rng.normal(0, 1e3, size=state.y_partial.shape)
            state.y_partial = np.where(state.occupancy == 1.0, state.y_partial, garbage)

        hammered = ctx.mcm_encode(symbols, psi, WS, CFG, on_phase=corrupt_future)
        assert [bytes(a) for a in plain] == [bytes(b) for b in hammered]

    def test_truncated_stream_errors(self):
        _, psi, symbols = small_setup(13)
        streams = ctx.mcm_encode(symbols, psi, WS, CFG)
        streams[3] = streams[3][:2]
        with pytest.raises(CorruptStreamError):
            ctx.mcm_decode(streams, psi, WS, CFG)

    def test_swapped_streams_detected(self):
        _, psi, symbols = small_setup(14)
        streams = ctx.mcm_encode(symbols, psi, WS, CFG)
        swapped = list(streams)
        swapped[0], swapped[1] = swapped[1], swapped[0]
        try:
            back = ctx.mcm_decode(swapped, psi, WS, CFG)
            assert not np.array_equal(back, symbols)
        except CorruptStreamError:
            pass

    def test_wrong_symbol_range_rejected(self):
        _, psi, symbols = small_setup(15)
        symbols[0, 0, 0] = 99
        with pytest.raises(ShapeError):
            ctx.mcm_encode(symbols, psi, WS, CFG)
