import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import reference_viterbi
from p2stc.analysis import two_zero_pattern
from p2stc.channel import ChannelConfig, ChannelRealization, complex_normal, transmit
from p2stc.convcode import ConvCode
from p2stc.decoder import (FrameDecoder, MetricConfig, MetricMode, Role, all_codewords,
                           build_schedule, compute_type2_weights, decode_frame, distance_table,
                           exact_increment, exhaustive_ml_decode, left_increment,
                           ml_joint_decode, right_increment, rule_of_thumb_beta)
from p2stc.puncturing import PuncturingMatrix, lookup

C57 = ConvCode.from_octal("5,7")
C133 = ConvCode.from_octal("133,171")


def rand_dist(dec, rng, batch=None):
    shape = (dec.n_symbols, 1 << dec.code.n_outputs)
    return rng.random(shape if batch is None else (batch,) + shape) * 4


def test_exact_increment_example():
    # alpha = 1, Es = 1: candidate (+1, -1) sums to 0
    alpha = np.ones((2, 1))
    assert exact_increment([0.0], [1, 0], alpha, 1.0) == pytest.approx(0.0)
    assert exact_increment([2.0], [0, 0], alpha, 1.0) == pytest.approx(16.0)


def test_left_increment_minimizes_unknown_bits():
    alpha = np.ones((2, 1))
    # known bit 1 on antenna 0; antenna 1 free: candidates sum to 2 or 0
    assert left_increment([2.0], [1, 0], [1], alpha, 1.0, 0.5) == pytest.approx(0.0)
    assert left_increment([-2.0], [1, 0], [1], alpha, 1.0, 1.0) == pytest.approx(4.0)


def test_right_increment_uses_survivor_bits():
    alpha = np.ones((2, 1))
    assert right_increment([2.0], [1, None], [None, 1], alpha, 1.0, 0.25) == pytest.approx(0.0)
    assert right_increment([2.0], [0, None], [None, 1], alpha, 1.0, 1.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        right_increment([2.0], [None, None], [None, 1], alpha, 1.0, 1.0)


def test_rule_of_thumb_beta():
    assert rule_of_thumb_beta(1, 2) == pytest.approx(2 / 3)
    assert rule_of_thumb_beta(2, 2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        rule_of_thumb_beta(0, 0)


@pytest.mark.parametrize("beta", [0.0, 0.2, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("delta", [1, 2, 3, 5])
def test_type2_weights_conserve_total(beta, delta):
    wa, wb = compute_type2_weights(beta, delta)
    assert delta * wa + wb == pytest.approx(delta)
    if delta == 1:
        assert (wa, wb) == pytest.approx((1 - beta, beta))


def test_type2_weights_reject_bad_delta():
    with pytest.raises(ValueError):
        compute_type2_weights(0.5, 0)


def test_metric_config_parsing():
    assert MetricConfig.parse("type2", "0.3").beta == 0.3
    assert MetricConfig.parse("type1").beta_label == "rule"
    with pytest.raises(ValueError):
        MetricConfig(MetricMode.TYPE1, 1.5)
    with pytest.raises(ValueError):
        MetricConfig.parse("bogus")


def eq9_decoder(metric):
    return FrameDecoder(C57, lookup("Eq9"), 9, metric)


def test_eq9_type1_schedule():
    dec = eq9_decoder(MetricConfig(MetricMode.TYPE1, 0.4, "fixed"))
    sched = dec.schedule
    lay = dec.layout
    assert len(sched.events) == 2 and all(len(e) == 3 for e in sched.events)
    ev = sched.events[0]
    t0 = int(lay.left[ev[0]])
    roles = [sorted((c.symbol, c.role) for c in sched.entries(t0 + i) if c.symbol in ev)
             for i in range(4)]
    assert roles == [
        [(ev[0], Role.LEFT)],
        [(ev[0], Role.RIGHT), (ev[1], Role.LEFT)],
        [(ev[1], Role.RIGHT), (ev[2], Role.LEFT)],
        [(ev[2], Role.RIGHT)],
    ]
    for u in ev:
        w = sched.weight_by_symbol()[u]
        assert w[Role.LEFT] == pytest.approx(0.6) and w[Role.RIGHT] == pytest.approx(0.4)


def test_eq9_type2_schedule():
    dec = eq9_decoder(MetricConfig(MetricMode.TYPE2, 0.4, "fixed"))
    sched = dec.schedule
    wa, wb = compute_type2_weights(0.4, 3)
    for ev in sched.events:
        w = sched.weight_by_symbol()
        assert all(w[u] == {Role.LEFT: pytest.approx(wa)} for u in ev[:-1])
        assert w[ev[-1]][Role.LEFT] == pytest.approx(wa)
        assert w[ev[-1]][Role.RIGHT] == pytest.approx(wb)
        total = sum(sum(w[u].values()) for u in ev)
        assert total == pytest.approx(3.0)


@pytest.mark.parametrize("mode", ["split_min", "type1", "type2"])
@pytest.mark.parametrize("name", ["Eq5", "Eq9", "TableI-5/8"])
def test_schedule_weight_conservation_and_causality(mode, name):
    m = lookup(name)
    code = C133 if m.n_rows == 2 and name.startswith("Table") else C57
    dec = FrameDecoder(code, m, 5 * m.period - code.memory, MetricConfig.parse(mode))
    sched = dec.schedule
    sched.check_causality()
    w = sched.weight_by_symbol()
    assert set(w) == set(range(dec.n_symbols))
    for u in range(dec.n_symbols):
        if not dec.layout.spanning[u]:
            assert w[u] == {Role.FULL: 1.0}
    for ev in sched.events:
        assert sum(sum(w[u].values()) for u in ev) == pytest.approx(len(ev))


def test_exact_rejects_spanning():
    with pytest.raises(ValueError):
        FrameDecoder(C57, lookup("Eq5"), 10, MetricConfig(MetricMode.EXACT)).schedule
    with pytest.raises(ValueError):
        build_schedule(FrameDecoder(C57, lookup("Eq5"), 10).layout, MetricConfig(MetricMode.ML))


CASES = [
    (C57, "Eq5", 10), (C57, "Eq9", 9), (C133, two_zero_pattern(3), 30),
    (C133, "TableI-5/8", 30), (ConvCode.from_octal("133,145,175"), "TableII-10/21", 20),
]


@pytest.mark.parametrize("code,name,k", CASES)
@pytest.mark.parametrize("mode", ["split_min", "type1", "type2"])
def test_kernel_matches_reference_viterbi(code, name, k, mode):
    m = name if isinstance(name, PuncturingMatrix) else lookup(name)
    dec = FrameDecoder(code, m, k, MetricConfig(MetricMode(mode), 0.35, "fixed"))
    rng = np.random.default_rng(11)
    dist = rand_dist(dec, rng, batch=6)
    bits, metric = dec.decode_distances(dist, return_metric=True)
    for b in range(6):
        ref_bits, ref_metric = reference_viterbi(dec, dist[b], survivor=mode != "split_min")
        assert np.array_equal(bits[b], ref_bits)
        assert metric[b] == pytest.approx(ref_metric, rel=1e-12)


def test_type1_half_without_survivor_is_split_min():
    rng = np.random.default_rng(3)
    t1 = FrameDecoder(C57, lookup("Eq9"), 15, MetricConfig(MetricMode.TYPE1, 0.5, "fixed"))
    sm = t1.with_metric(MetricConfig(MetricMode.SPLIT_MIN, 0.5, "fixed"))
    dist = rand_dist(t1, rng, batch=20)
    a, ma = t1.decode_distances(dist, survivor=False, return_metric=True)
    b, mb = sm.decode_distances(dist, return_metric=True)
    assert np.array_equal(a, b) and np.allclose(ma, mb)


def _channel(dec, info, rng, n0=0.0, n_rx=1):
    sym = dec.transmitted_symbols(info[None])[0]
    cfg = ChannelConfig(n_tx=dec.code.n_outputs, n_rx=n_rx, n_blocks=sym.shape[0], n0=n0)
    real = ChannelRealization(complex_normal(rng, (sym.shape[0], cfg.n_tx, n_rx)))
    return transmit(sym, real, cfg, rng)


@pytest.mark.parametrize("mode", ["split_min", "type1", "type2", "ml"])
def test_noiseless_recovery(mode):
    rng = np.random.default_rng(4)
    dec = FrameDecoder(C57, lookup("Eq5"), 18, MetricConfig.parse(mode))
    for _ in range(100):
        info = rng.integers(0, 2, 18, dtype=np.uint8)
        rx = _channel(dec, info, rng, n_rx=2)
        assert np.array_equal(dec.decode(rx), info)


def test_exact_metric_equals_noise_energy():
    rng = np.random.default_rng(5)
    dec = FrameDecoder(C133, PuncturingMatrix.identity(2), 40, MetricConfig(MetricMode.EXACT))
    info = rng.integers(0, 2, 40, dtype=np.uint8)
    rx = _channel(dec, info, rng, n0=1e-4)
    bits, metric = dec.decode(rx, return_metric=True)
    assert np.array_equal(bits, info)
    sym = dec.transmitted_symbols(info[None])[0]
    pred = np.einsum("ti,tis->ts", sym, rx.alpha_per_symbol()) * np.sqrt(rx.es)
    assert metric == pytest.approx(float(np.sum(np.abs(rx.r - pred) ** 2)), abs=1e-9)


def test_viterbi_exact_is_ml_when_unpunctured():
    rng = np.random.default_rng(6)
    dec = FrameDecoder(C57, PuncturingMatrix.identity(2), 10, MetricConfig(MetricMode.EXACT))
    book = all_codewords(dec)
    for _ in range(200):
        info = rng.integers(0, 2, 10, dtype=np.uint8)
        rx = _channel(dec, info, rng, n0=2.0)
        ml = exhaustive_ml_decode(rx.r, rx.alpha_per_symbol(), rx.es, dec, book)
        assert np.array_equal(dec.decode(rx), ml)


@pytest.mark.parametrize("name", ["Eq5", "Eq9"])
def test_segment_ml_equals_exhaustive(name):
    rng = np.random.default_rng(7)
    dec = FrameDecoder(C57, lookup(name), 9, MetricConfig(MetricMode.ML))
    book = all_codewords(dec)
    for _ in range(200):
        info = rng.integers(0, 2, 9, dtype=np.uint8)
        rx = _channel(dec, info, rng, n0=1.5)
        ex = exhaustive_ml_decode(rx.r, rx.alpha_per_symbol(), rx.es, dec, book)
        assert np.array_equal(ml_joint_decode(rx, dec, method="segment"), ex)
        assert np.array_equal(ml_joint_decode(rx, dec, method="exhaustive"), ex)


def test_ml_refuses_large_frames():
    dec = FrameDecoder(C57, lookup("Eq5"), 30)
    rx = _channel(dec, np.zeros(30, dtype=np.uint8), np.random.default_rng(0))
    with pytest.raises(ValueError):
        ml_joint_decode(rx, dec, max_info_bits=20, method="exhaustive")


def test_decode_shape_errors():
    dec = FrameDecoder(C57, lookup("Eq5"), 10)
    with pytest.raises(ValueError):
        dec.decode_distances(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        FrameDecoder(C57, lookup("TableII-10/27"), 10).layout


def test_decode_frame_wrapper():
    rng = np.random.default_rng(8)
    dec = FrameDecoder(C57, lookup("Eq5"), 10)
    info = rng.integers(0, 2, 10, dtype=np.uint8)
    rx = _channel(dec, info, rng)
    assert np.array_equal(decode_frame(rx, C57, lookup("Eq5"), 10, "type2", 0.3), info)


def test_distance_table_matches_scalar_form():
    rng = np.random.default_rng(9)
    r = complex_normal(rng, (4, 2))
    alpha = complex_normal(rng, (4, 2, 2))
    tab = distance_table(r, alpha, 0.5)
    for t in range(4):
        for a in range(4):
            bits = [(a >> j) & 1 for j in range(2)]
            assert tab[t, a] == pytest.approx(exact_increment(r[t], bits, alpha[t], 0.5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["type1", "type2", "split_min"]),
       st.floats(0.0, 1.0))
def test_kernel_reference_property(seed, mode, beta):
    rng = np.random.default_rng(seed)
    dec = FrameDecoder(C57, lookup("Eq9"), 10, MetricConfig(MetricMode(mode), beta, "fixed"))
    dist = rand_dist(dec, rng)
    bits, metric = dec.decode_distances(dist, return_metric=True)
    ref_bits, ref_metric = reference_viterbi(dec, dist, survivor=mode != "split_min")
    assert metric[0] == pytest.approx(ref_metric, rel=1e-9)
    assert np.array_equal(bits[0], ref_bits)
