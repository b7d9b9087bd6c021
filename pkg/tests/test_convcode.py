import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import codebook, cyclic_encode, top_list
from tpstcodes.convcode import (
    ConvSpec,
    ListViterbi,
    PRESETS,
    PuncturePattern,
    depuncture_llr,
    encode_tbcc,
    list_viterbi_tb,
    octal_taps,
    preset_spec,
    puncture,
    viterbi_tb,
)

C75 = ConvSpec.from_octal("7,5", 8)


def test_octal_convention():
    assert octal_taps("56") == [1, 0, 1, 1, 1]
    assert octal_taps("62") == [1, 1, 0, 0, 1]
    with pytest.raises(ValueError, match="malformed octal"):
        ConvSpec.from_octal("58,62", 32)


def test_unit_impulse_response():
    spec = ConvSpec.from_octal("56,62", 32, 4)
    u = np.zeros(32, np.uint8)
    u[0] = 1
    c = encode_tbcc(u, spec).to_bits()
    assert set(np.flatnonzero(c[0::2])) == {0, 2, 3, 4}
    assert set(np.flatnonzero(c[1::2])) == {0, 1, 4}


def test_encoder_matches_cyclic_oracle():
    rng = np.random.default_rng(0)
    for name, (gens, m) in PRESETS.items():
        spec = ConvSpec.from_octal(gens, 20, m)
        for _ in range(5):
            u = rng.integers(0, 2, 20, dtype=np.uint8)
            assert np.array_equal(encode_tbcc(u, spec).to_bits(), cyclic_encode(u, gens.split(","), m))


def test_zero_and_linearity():
    spec = ConvSpec.from_octal("52,66,76", 16)
    assert encode_tbcc(np.zeros(16, np.uint8), spec).weight() == 0
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.integers(0, 2, (2, 16), dtype=np.uint8)
        assert encode_tbcc(a ^ b, spec) == encode_tbcc(a, spec) + encode_tbcc(b, spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 40).flatmap(lambda k: st.tuples(
    st.lists(st.integers(0, 1), min_size=k, max_size=k), st.integers(0, k - 1))))
def test_cyclic_shift_property(case):
    u, t = case
    u = np.array(u, np.uint8)
    spec = ConvSpec.from_octal("56,62", len(u), 4)
    c = encode_tbcc(u, spec).to_bits().reshape(-1, 2)
    cs = encode_tbcc(np.roll(u, t), spec).to_bits().reshape(-1, 2)
    assert np.array_equal(np.roll(c, t, axis=0), cs)


def test_short_info_rejected():
    with pytest.raises(ValueError):
        ConvSpec.from_octal("56,62", 3, 4)
    with pytest.raises(ValueError):
        ConvSpec.from_octal("56,62", 63, 4)


def test_puncture_every_third():
    p = PuncturePattern.from_string("110")
    c = np.arange(96) % 2
    out = puncture(c, p)
    assert len(out) == 64
    assert p.punctured_len(96) == 96 - 32
    kept = p.kept_positions(96)
    assert not np.isin(np.arange(2, 96, 3), kept).any()
    assert puncture(c, PuncturePattern((1,))).to_bits().tolist() == c.tolist()
    assert np.array_equal(PuncturePattern.homogeneous(96, 64).kept_positions(96), kept)
    with pytest.raises(ValueError):
        PuncturePattern.from_string("000")


def test_depuncture():
    p = PuncturePattern.from_string("110")
    x = np.random.default_rng(2).normal(size=96) + 5.0
    kept = p.kept_positions(96)
    d = depuncture_llr(x[kept], p, 96)
    assert np.array_equal(d[kept], x[kept])
    assert set(np.flatnonzero(d == 0)) == set(range(2, 96, 3))
    assert np.array_equal(depuncture_llr(x, None, 96), x)
    with pytest.raises(ValueError):
        depuncture_llr(x[:10], p, 96)


def test_viterbi_noiseless_all_presets():
    rng = np.random.default_rng(3)
    for name in PRESETS:
        spec = preset_spec(name, 32)
        for _ in range(5):
            u = rng.integers(0, 2, 32, dtype=np.uint8)
            c = encode_tbcc(u, spec).to_bits()
            e = viterbi_tb(50.0 * (1 - 2.0 * c), spec)
            assert e.info.to_bits().tolist() == u.tolist()
            assert e.codeword == encode_tbcc(u, spec)


def test_viterbi_all_zero_llr():
    e = viterbi_tb(np.zeros(64), preset_spec("tbcc-1/2-(56,62)", 32))
    assert e.info.weight() == 0


def test_viterbi_matches_exhaustive():
    words, cws = codebook(["7", "5"], 2, 8)
    rng = np.random.default_rng(4)
    for _ in range(300):
        llr = rng.normal(0, 2, 16)
        (best,), metric = top_list(llr, cws, 1)
        e = viterbi_tb(llr, C75)
        assert e.info.to_bits().tolist() == words[best].tolist()
        assert e.metric == pytest.approx(metric[best], abs=1e-9)


def test_list_matches_exhaustive_top10():
    words, cws = codebook(["7", "5"], 2, 8)
    rng = np.random.default_rng(5)
    for _ in range(100):
        llr = rng.normal(0.5, 2, 16)
        idx, metric = top_list(llr, cws, 10)
        got = list_viterbi_tb(llr, C75, 10)
        assert [e.info.to_bits().tolist() for e in got] == [words[i].tolist() for i in idx]
        assert np.allclose([e.metric for e in got], metric[idx], atol=1e-9)


def test_list_exact_ties_break_lexicographically():
    # integer LLRs make many metrics tie exactly
    words, cws = codebook(["7", "5"], 2, 8)
    rng = np.random.default_rng(6)
    for _ in range(50):
        llr = rng.integers(-2, 3, 16).astype(float)
        idx, _ = top_list(llr, cws, 40)
        got = list_viterbi_tb(llr, C75, 40)
        assert [e.info.to_bits().tolist() for e in got] == [words[i].tolist() for i in idx]


def test_list_contracts():
    rng = np.random.default_rng(7)
    spec = preset_spec("tbcc-1/2-(56,62)", 32)
    llr = rng.normal(1, 2, 64)
    full = list_viterbi_tb(llr, spec, 64)
    m = [e.metric for e in full]
    assert all(a >= b for a, b in zip(m, m[1:]))
    assert len({e.info for e in full}) == 64
    assert full[0].info == viterbi_tb(llr, spec).info
    assert [e.info for e in list_viterbi_tb(llr, spec, 7)] == [e.info for e in full[:7]]
    for e in full[:5]:
        assert encode_tbcc(e.info, spec) == e.codeword
    with pytest.raises(ValueError):
        list_viterbi_tb(llr, spec, 0)


def test_list_exhausts_codebook():
    spec = ConvSpec.from_octal("7,5", 4)
    got = list_viterbi_tb(np.random.default_rng(8).normal(size=8), spec, 100)
    assert len(got) == 16
    assert len(list(ListViterbi(np.zeros(8), spec))) == 16


def test_list_metric_is_loglik_order():
    # metric difference equals the Gaussian log-likelihood difference for LLR = 2y/sigma^2
    spec = ConvSpec.from_octal("7,5", 8)
    sigma = 0.8
    y = np.random.default_rng(9).normal(size=16)
    lst = list_viterbi_tb(2 * y / sigma**2, spec, 5)
    ll = [-((y - (1 - 2.0 * e.codeword.to_bits())) ** 2).sum() / (2 * sigma**2) for e in lst]
    assert np.allclose(np.diff([e.metric for e in lst]) / 2, np.diff(ll))
