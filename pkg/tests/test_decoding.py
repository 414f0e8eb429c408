import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from surgkit.decoding import (
    BigramProvider,
    DecodingError,
    MVTEParams,
    ProviderError,
    ScriptedProvider,
    TokenTensor,
    VCDConfig,
    contrastive_distribution,
    counterexample_script,
    distort,
    greedy_decode,
    mixture_weights,
    mvte_fuse,
    mvte_generate,
    plausible_set,
    softmax,
    synthetic_pathway,
    vcd_step,
)


def test_token_tensor_validation():
    TokenTensor(np.zeros((2, 3)))
    with pytest.raises(DecodingError, match=r"\(L, D\)"):
        TokenTensor(np.zeros(3))
    with pytest.raises(DecodingError, match="finite"):
        TokenTensor(np.array([[1.0, np.nan]]))


def test_synthetic_pathway_shapes_and_determinism():
    x = synthetic_pathway(3, tokens= 8, channels=4, tiles=2, pathway="d")
    assert (x.tokens, x.channels, x.pathway) == (16, 4, "d")
    assert np.array_equal(x.data, synthetic_pathway(3, tokens=8, channels=4, tiles=2).data)
    assert not np.array_equal(
        synthetic_pathway(3, tokens=8, channels=4).data,
        synthetic_pathway(4, tokens=8, channels=4).data,
    )
    with pytest.raises(DecodingError):
        synthetic_pathway(3, tokens=0)


def test_params_shape_validation():
    with pytest.raises(DecodingError, match="w1"):
        MVTEParams(np.zeros((4, 8)), np.zeros(7), np.zeros((8, 2)), np.zeros(2),
                   np.zeros((8, 4)), np.zeros(4))
    with pytest.raises(DecodingError, match="w2"):
        MVTEParams(np.zeros((4, 8)), np.zeros(8), np.zeros((7, 2)), np.zeros(2),
                   np.zeros((8, 4)), np.zeros(4))
    with pytest.raises(DecodingError, match="at least one generated token"):
        MVTEParams(np.zeros((4, 8)), np.zeros(8), np.zeros((8, 0)), np.zeros(0),
                   np.zeros((8, 4)), np.zeros(4))
    params = MVTEParams.initialize(channels=4, mixture_tokens=3, seed=0, hidden=8)
    assert params.mixture_tokens == 3
    assert params.proj_w.shape == (8, 4)


def test_softmax_spot_values():
    probs = softmax(np.array([2.0, 0.0, -2.0]))
    assert probs == pytest.approx([0.866813, 0.117310, 0.015876], abs=1e-6)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_mixture_columns_sum_to_one():
    x = synthetic_pathway(5, tokens=12, channels=6)
    params = MVTEParams.initialize(channels=6, mixture_tokens=4, seed=1)
    weights = mixture_weights(x, params)
    assert weights.shape == (12, 4)
    assert np.allclose(weights.sum(axis=0), 1.0, atol=1e-9)


def test_constant_mixer_generates_column_means():
    x = synthetic_pathway(5, tokens=10, channels=6)
    params = MVTEParams(
        w1=np.zeros((6, 4)), b1=np.zeros(4), w2=np.zeros((4, 2)), b2=np.zeros(2),
        proj_w=np.zeros((12, 6)), proj_b=np.zeros(6),
    )
    out = mvte_generate(x, params)
    assert out.tokens == 12
    assert np.allclose(out.data[:10], x.data)
    assert np.allclose(out.data[10:], x.data.mean(axis=0), atol=1e-12)


def test_mvte_generate_matches_oracle():
    x = synthetic_pathway(7, tokens=8, channels=16)
    params = MVTEParams.initialize(channels=16, mixture_tokens=3, seed=2, hidden=5)
    got = mvte_generate(x, params).data
    want = oracles.mvte(
        x.data.tolist(), params.w1.tolist(), params.b1.tolist(),
        params.w2.tolist(), params.b2.tolist(),
    )
    assert np.allclose(got, np.array(want), atol=1e-9)


def test_generated_tokens_stay_in_convex_hull():
    x = synthetic_pathway(9, tokens=8, channels=5)
    params = MVTEParams.initialize(channels=5, mixture_tokens=3, seed=3)
    out = mvte_generate(x, params)
    lo = x.data.min(axis=0) - 1e-9
    hi = x.data.max(axis=0) + 1e-9
    assert np.all(out.data[8:] >= lo) and np.all(out.data[8:] <= hi)


def test_fuse_identity_projection_concatenates():
    xo = synthetic_pathway(1, tokens=6, channels=3, pathway="o")
    xd = synthetic_pathway(2, tokens=6, channels=3, pathway="d")
    params = MVTEParams(
        w1=np.zeros((3, 2)), b1=np.zeros(2), w2=np.zeros((2, 1)), b2=np.zeros(1),
        proj_w=np.eye(6), proj_b=np.zeros(6),
    )
    fused = mvte_fuse(xo, xd, params)
    assert fused.pathway == "fused"
    assert np.allclose(fused.data, np.concatenate([xo.data, xd.data], axis=1))


def test_fuse_matches_oracle_and_validates():
    xo = synthetic_pathway(1, tokens=6, channels=3)
    xd = synthetic_pathway(2, tokens=6, channels=3)
    params = MVTEParams.initialize(channels=3, mixture_tokens=2, seed=4)
    got = mvte_fuse(xo, xd, params).data
    want = oracles.fuse(
        xo.data.tolist(), xd.data.tolist(), params.proj_w.tolist(), params.proj_b.tolist()
    )
    assert np.allclose(got, np.array(want), atol=1e-9)
    short = synthetic_pathway(2, tokens=5, channels=3)
    with pytest.raises(DecodingError, match="token count"):
        mvte_fuse(xo, short, params)
    wide = synthetic_pathway(2, tokens=6, channels=4)
    with pytest.raises(DecodingError, match="projection expects"):
        mvte_fuse(xo, wide, params)


def test_vcd_config_validation():
    config = VCDConfig()
    assert (config.alpha, config.beta, config.sigma) == (1.0, 0.1, 0.3)
    with pytest.raises(DecodingError):
        VCDConfig(alpha=-0.5)
    with pytest.raises(DecodingError):
        VCDConfig(beta=1.5)
    with pytest.raises(DecodingError):
        VCDConfig(sigma=-1.0)
    with pytest.raises(Exception):
        config.alpha = 2.0  # frozen


def test_distort_zero_sigma_is_identity_and_seeded():
    x = synthetic_pathway(6, tokens=4, channels=4).data
    assert np.array_equal(distort(x, 0.0, seed=1), x)
    assert np.array_equal(distort(x, 0.3, seed=1), distort(x, 0.3, seed=1))
    assert not np.array_equal(distort(x, 0.3, seed=1), distort(x, 0.3, seed=2))


def test_distort_noise_statistics():
    x = np.zeros((1000, 100))
    noise = distort(x, 0.3, seed=5)
    assert noise.mean() == pytest.approx(0.0, abs=0.01)
    assert noise.std() == pytest.approx(0.3, abs=0.01)


def test_contrastive_distribution_alpha_zero_is_plain_softmax():
    lo = np.array([1.0, 0.5, -0.5])
    ld = np.array([3.0, -1.0, 0.0])
    assert np.allclose(contrastive_distribution(lo, ld, 0.0), softmax(lo), atol=1e-12)
    got = contrastive_distribution(lo, ld, 1.0)
    assert np.allclose(got, oracles.softmax_vec(list(2.0 * lo - ld)), atol=1e-12)
    with pytest.raises(DecodingError):
        contrastive_distribution(lo, np.array([1.0, 2.0]), 1.0)


def test_plausible_set_thresholds():
    p = np.array([0.5, 0.3, 0.2])
    assert plausible_set(p, 0.0).tolist() == [True, True, True]
    assert plausible_set(p, 1.0).tolist() == [True, False, False]
    assert plausible_set(p, 0.5).tolist() == [True, True, False]
    with pytest.raises(DecodingError):
        plausible_set(p, 1.1)


def test_vcd_step_beta_zero_equals_contrast():
    lo = np.array([1.0, 0.2, -0.4, 0.0])
    ld = np.array([0.5, 1.5, -0.2, 0.3])
    config = VCDConfig(alpha=0.7, beta=0.0)
    got = vcd_step(lo, ld, softmax(lo), config)
    assert np.allclose(got, contrastive_distribution(lo, ld, 0.7), atol=1e-12)


def test_vcd_step_matches_hand_oracle():
    lo = [1.0, 0.2, -0.4, 0.0]
    ld = [0.5, 1.5, -0.2, 0.3]
    config = VCDConfig(alpha=0.7, beta=0.4)
    got = vcd_step(np.array(lo), np.array(ld), softmax(np.array(lo)), config)
    want = oracles.vcd_step(lo, ld, alpha=0.7, beta=0.4)
    assert np.allclose(got, np.array(want), atol=1e-12)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(min_value=0, max_value=10_000))
def test_vcd_step_collapses_when_branches_agree(seed):
    rng = np.random.default_rng(seed)
    lo = rng.normal(size=6)
    config = VCDConfig(alpha=rng.uniform(0.0, 2.0), beta=rng.uniform(0.0, 1.0))
    got = vcd_step(lo, lo.copy(), softmax(lo), config)
    masked = np.where(plausible_set(softmax(lo), config.beta), lo, -np.inf)
    assert np.allclose(got, softmax(masked), atol=1e-12)


def script_provider():
    return ScriptedProvider.from_text(counterexample_script())


def test_counterexample_contrast_vs_plain():
    config = VCDConfig(alpha=1.0, beta=0.1)
    contrast = greedy_decode(
        script_provider(), ScriptedProvider.ORIGINAL, ScriptedProvider.DISTORTED, config,
        max_len=3,
    )
    plain = greedy_decode(
        script_provider(), ScriptedProvider.ORIGINAL, ScriptedProvider.DISTORTED, config,
        max_len=3, use_contrast=False,
    )
    assert contrast.error is None and plain.error is None
    assert contrast.tokens == [0, 0, 0]
    assert plain.tokens == [1, 1, 0]


def test_greedy_decode_contrast_off_matches_alpha_beta_zero():
    provider = script_provider()
    off = greedy_decode(provider, ScriptedProvider.ORIGINAL, ScriptedProvider.DISTORTED,
                        VCDConfig(), max_len=3, use_contrast=False)
    neutral = greedy_decode(provider, ScriptedProvider.ORIGINAL, ScriptedProvider.DISTORTED,
                            VCDConfig(alpha=0.0, beta=0.0), max_len=3)
    assert off.tokens == neutral.tokens
    for a, b in zip(off.distributions, neutral.distributions):
        assert np.allclose(a, b, atol=1e-12)


def test_greedy_decode_partial_on_script_exhaustion():
    result = greedy_decode(script_provider(), ScriptedProvider.ORIGINAL,
                           ScriptedProvider.DISTORTED, VCDConfig(), max_len=10)
    assert result.tokens == [0, 0, 0]
    assert result.error is not None and "exhausted" in result.error


class ConstantProvider:
    def __init__(self, logits):
        self._logits = np.asarray(logits, dtype=np.float64)

    @property
    def vocab_size(self):
        return self._logits.shape[-1]

    def logits(self, context, conditioning):
        return self._logits


def test_greedy_ties_break_toward_lowest_index():
    result = greedy_decode(ConstantProvider([0.5, 0.5, 0.5]), None, None,
                           VCDConfig(), max_len=4)
    assert result.tokens == [0, 0, 0, 0]


def test_greedy_stops_after_eos():
    result = greedy_decode(ConstantProvider([0.0, 2.0, 0.0]), None, None,
                           VCDConfig(), max_len=10, eos_token=1)
    assert result.tokens == [1]
    assert result.error is None


def test_greedy_rejects_bad_max_len_and_bad_logits():
    with pytest.raises(DecodingError):
        greedy_decode(ConstantProvider([0.0, 1.0]), None, None, VCDConfig(), max_len=0)
    bad = greedy_decode(ConstantProvider([np.nan, 1.0]), None, None, VCDConfig(), max_len=3)
    assert bad.tokens == []
    assert "bad logits" in bad.error


def test_scripted_provider_from_text_validation():
    with pytest.raises(DecodingError, match="even count"):
        ScriptedProvider.from_text("1.0 2.0 3.0\n")
    with pytest.raises(DecodingError, match="line 2"):
        ScriptedProvider.from_text("1.0 2.0\nx y\n")
    with pytest.raises(DecodingError, match="at least one step"):
        ScriptedProvider.from_text("# only a comment\n")
    provider = ScriptedProvider.from_text("# c\n\n1.0 2.0 3.0 4.0\n")
    assert provider.vocab_size == 2
    assert np.array_equal(provider.logits([], ScriptedProvider.ORIGINAL), [1.0, 2.0])
    assert np.array_equal(provider.logits([], ScriptedProvider.DISTORTED), [3.0, 4.0])
    with pytest.raises(ProviderError):
        provider.logits([0], ScriptedProvider.ORIGINAL)


def test_bigram_provider_validation_and_logits():
    with pytest.raises(DecodingError, match="square"):
        BigramProvider(np.zeros(2), np.zeros((2, 3)))
    with pytest.raises(DecodingError, match="start row"):
        BigramProvider(np.zeros(3), np.zeros((2, 2)))
    with pytest.raises(DecodingError, match="missing key"):
        BigramProvider.from_json({"start": [0.0, 0.0]})
    provider = BigramProvider.from_json(
        {"start": [1.0, 0.0], "table": [[0.0, 2.0], [3.0, 0.0]]}
    )
    zero = np.zeros(2)
    assert np.array_equal(provider.logits([], zero), [1.0, 0.0])
    assert np.array_equal(provider.logits([0], zero), [0.0, 2.0])
    assert np.array_equal(provider.logits([1], np.array([0.5, 0.5])), [3.5, 0.5])
    with pytest.raises(ProviderError, match="length 2"):
        provider.logits([], np.zeros(3))


def test_bigram_decode_contrast_changes_choice():
    # The distorted bias inflates token 1; the contrast subtracts it back out.
    provider = BigramProvider(
        start=np.array([1.0, 1.2]), table=np.array([[1.0, 1.2], [0.0, 0.0]])
    )
    clean = np.zeros(2)
    biased = np.array([0.0, 1.0])
    config = VCDConfig(alpha=1.0, beta=0.0)
    plain = greedy_decode(provider, clean, biased, config, max_len=2, use_contrast=False)
    contrast = greedy_decode(provider, clean, biased, config, max_len=2)
    assert plain.tokens == [1, 0]
    assert contrast.tokens == [0, 0]
