import math

import numpy as np
import pytest

from hdformula.errors import DimensionMismatch, EmptyCorpus, EmptyInput, TokenOutOfVocab
from hdformula.fusion import (
    EncodedInstance,
    FusionConfig,
    ToyModelParams,
    Vocabulary,
    batch_loss,
    decode_nll,
    encode,
    fuse,
    grad,
    instance_loss,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
    toy_train,
    total_loss,
)
from hdformula.latex import parse_latex
from hdformula.subformula import CropMode, SamplePlan, make_training_instance
from oracles import fuse_closed_form, ulps


class TestEncode:
    def test_zero_params(self):
        params = ToyModelParams.zeros(6, 4)
        assert np.array_equal(encode([2, 3], params), np.zeros(4))

    def test_permutation_invariant_and_deterministic(self):
        params = ToyModelParams.init(8, 5, seed=1)
        assert np.array_equal(encode([2, 5, 7], params), encode([2, 5, 7], params))
        assert np.allclose(encode([2, 5], params), encode([5, 2], params), rtol=0, atol=1e-15)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            encode([], ToyModelParams.zeros(3, 2))


class TestFuse:
    def test_examples(self):
        z = np.array([1.0, 0.0])
        assert list(fuse(z, [np.array([0.0, 1.0])], 0.2)) == pytest.approx([0.2, 0.8], abs=1e-15)
        assert np.array_equal(fuse(z, [np.array([5.0, 5.0])], 1.0), z)
        assert np.array_equal(fuse(z, [z, z], 0.5), z)

    def test_no_subs_returns_main(self):
        z = np.array([0.3, -0.7])
        out = fuse(z, [], 0.2)
        assert np.array_equal(out, z) and out is not z

    def test_alpha_zero_is_mean(self):
        rng = np.random.default_rng(0)
        subs = [rng.normal(size=6) for _ in range(3)]
        assert np.allclose(fuse(rng.normal(size=6), subs, 0.0), np.mean(subs, axis=0), atol=1e-15)

    def test_matches_closed_form(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            z = rng.normal(size=8)
            subs = [rng.normal(size=8) for _ in range(rng.integers(1, 5))]
            alpha = float(rng.uniform())
            got = fuse(z, subs, alpha)
            want = fuse_closed_form(list(z), [list(s) for s in subs], alpha)
            assert max(ulps(a, b) for a, b in zip(got, want)) <= 1

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            fuse(np.zeros(3), [np.zeros(2)], 0.5)
        with pytest.raises(ValueError):
            fuse(np.zeros(3), [], 1.5)


class TestLosses:
    def test_total_loss_examples(self):
        assert total_loss(2.0, [1.0, 3.0], 0.2).l_total == pytest.approx(2.0, abs=1e-15)
        assert total_loss(2.5, [], 0.2).l_total == 2.5
        assert total_loss(2.5, [9.0, 1.0], 1.0).l_total == 2.5

    def test_uniform_nll(self):
        params = ToyModelParams.zeros(10, 4)
        assert decode_nll(np.zeros(4), [3, 4, 1], params) == pytest.approx(3 * math.log(10), abs=1e-12)

    def test_nll_nonnegative(self):
        rng = np.random.default_rng(2)
        for seed in range(30):
            params = ToyModelParams.init(7, 4, seed=seed, scale=2.0)
            target = list(rng.integers(0, 7, size=rng.integers(1, 6)))
            assert decode_nll(rng.normal(size=4), target, params) >= 0.0

    def test_out_of_vocab(self):
        with pytest.raises(TokenOutOfVocab):
            decode_nll(np.zeros(2), [5], ToyModelParams.zeros(3, 2))
        with pytest.raises(TokenOutOfVocab):
            Vocabulary.from_texts(["a+b"]).ids(r"\alpha")

    def test_empty_target(self):
        with pytest.raises(EmptyInput):
            decode_nll(np.zeros(2), [], ToyModelParams.zeros(3, 2))


class TestVocabulary:
    def test_sentinels_first(self):
        vocab = Vocabulary.from_texts(["x^2"])
        assert vocab.tokens[:2] == ["<bos>", "<eos>"]
        assert vocab.target("x^2")[-1] == vocab.eos

    def test_canonical_tokens_included(self):
        vocab = Vocabulary.from_texts(["x^2"])
        vocab.ids("x^{2}")


def _instances(texts, mode, vocab, seed=0):
    return [
        EncodedInstance.from_instance(
            make_training_instance(parse_latex(t), SamplePlan(mode, rng_seed=seed + k)), vocab)
        for k, t in enumerate(texts)
    ]


def _numeric_grad(params, batch, config, h=1e-5):
    flat = params.flat()
    shapes = params.shapes()
    out = np.empty_like(flat)
    for i in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[i] += h
        down[i] -= h
        lp = batch_loss(ToyModelParams.from_flat(up, shapes), batch, config.alpha)
        lm = batch_loss(ToyModelParams.from_flat(down, shapes), batch, config.alpha)
        out[i] = (lp - lm) / (2 * h)
    return out


class TestGradients:
    @pytest.mark.parametrize("mode", [CropMode.NO_CROP, CropMode.FULL_RANDOM_CROP, CropMode.HYBRID])
    def test_finite_differences(self, mode):
        texts = [r"\frac{a}{b}+c", "x_1+y^2-z"]
        vocab = Vocabulary.from_texts(texts)
        batch = _instances(texts, mode, vocab, seed=3)
        params = ToyModelParams.init(len(vocab), 4, seed=5, scale=0.5)
        config = FusionConfig(alpha=0.3)
        analytic = grad(params, batch, config).flat()
        numeric = _numeric_grad(params, batch, config)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
        assert rel.max() <= 1e-4

    def test_loss_matches_forward(self):
        texts = ["a+b+c", r"\sqrt{x}"]
        vocab = Vocabulary.from_texts(texts)
        batch = _instances(texts, CropMode.FULL_SUBFORMULA_CROP, vocab)
        params = ToyModelParams.init(len(vocab), 6, seed=2)
        loss, parts, _ = loss_and_grad(params, batch, FusionConfig())
        assert loss == pytest.approx(batch_loss(params, batch, 0.2), rel=1e-14)
        assert parts[0] == instance_loss(batch[0], params, 0.2)

    def test_degenerate_optimum(self):
        # vocab: <bos>=0, <eos>=1, a=2; the target "a <eos>" is predicted with
        # saturated probability from the previous-token embedding alone
        params = ToyModelParams.zeros(3, 2)
        params.E[0] = [1.0, 0.0]
        params.E[2] = [0.0, 1.0]
        params.W_dec[2, 2] = 60.0
        params.W_dec[3, 1] = 60.0
        inst = EncodedInstance(main=(2,), main_target=(2, 1))
        loss, _, g = loss_and_grad(params, [inst], FusionConfig())
        assert loss < 1e-20
        assert max(np.abs(a).max() for a in g.arrays()) <= 1e-6

    def test_unlabelled_parts_add_no_loss(self):
        texts = ["a+b+c+d"]
        vocab = Vocabulary.from_texts(texts)
        (inst,) = _instances(texts, CropMode.FULL_RANDOM_CROP, vocab)
        params = ToyModelParams.init(len(vocab), 4, seed=0)
        br = instance_loss(inst, params, 0.2)
        assert br.l_subs == () and br.l_total == br.l_main


class TestTraining:
    def test_rejects_zero_epochs(self, small_corpus):
        with pytest.raises(ValueError):
            toy_train(small_corpus[:4], SamplePlan(), epochs=0)

    def test_rejects_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            toy_train([], SamplePlan(), epochs=1)

    def test_deterministic_and_decreasing(self, small_corpus):
        plan = SamplePlan(CropMode.HYBRID, rng_seed=4)
        one = toy_train(small_corpus[:20], plan, epochs=6, lr=0.05, d=8, seed=1)
        two = toy_train(small_corpus[:20], plan, epochs=6, lr=0.05, d=8, seed=1)
        assert one.curve_csv() == two.curve_csv()
        assert one.curve[-1].total < one.curve[0].total
        assert [r.epoch for r in one.curve] == list(range(1, 7))

    def test_curve_csv_header(self, small_corpus):
        res = toy_train(small_corpus[:3], SamplePlan(CropMode.NO_CROP), epochs=1, d=4)
        lines = res.curve_csv().splitlines()
        assert lines[0] == "epoch,mode,mean_total_loss,mean_main_loss,mean_sub_loss"
        assert lines[1].startswith("1,no-crop,") and len(lines) == 2

    def test_checkpoint_round_trip(self, tmp_path, small_corpus):
        res = toy_train(small_corpus[:3], SamplePlan(CropMode.NO_CROP), epochs=1, d=4)
        sidecar = save_checkpoint(res.params, res.vocab, tmp_path / "p.bin")
        assert sidecar.name == "p.bin.json"
        params, vocab = load_checkpoint(tmp_path / "p.bin")
        assert vocab.tokens == res.vocab.tokens
        for a, b in zip(params.arrays(), res.params.arrays()):
            assert np.array_equal(a, b)
