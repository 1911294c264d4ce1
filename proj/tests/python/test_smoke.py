import numpy as np
import pytest

import batfill


def test_palette_round_trip():
    images = batfill.make_dataset("stripes", 4, 6, 6, seed=1)
    pal = batfill.fit_palette(images, 2, seed=1)
    assert pal.k == 2
    tokens = batfill.encode(images[0], pal)
    assert tokens.shape == (6, 6)
    assert np.array_equal(batfill.decode(tokens, pal), images[0])


def test_mask_ratio_in_bucket():
    mask = batfill.random_mask(16, 16, 0.4, 0.6, seed=3)
    assert mask.dtype == np.bool_
    assert 0.4 <= mask.mean() <= 0.6


def test_permute_layout():
    tokens = np.array([[3, 1, 4, 1, 5]])
    mask = np.array([[False, True, False, True, False]])
    seq = batfill.permute(tokens, mask, mask_token=9)
    assert seq["content_ids"] == [3, 4, 5, 9, 9, 9, 1]
    assert seq["target_ids"] == [1, 1]
    assert seq["masked_positions"] == [1, 3]
    attn = seq["attention"]
    assert attn.shape == (7, 7)
    assert not attn[5, 6] and attn[6, 5]


def test_train_and_complete():
    images = batfill.make_dataset("stripes", 8, 4, 4, seed=2)
    pal = batfill.fit_palette(images, 2, seed=2)
    data = [batfill.encode(img, pal) for img in images]
    model, curve = batfill.train(data, pal, "steps = 3\nbatch = 2\nseed = 4\n")
    assert model.vocab_size == 2
    assert len(curve) == 2
    mask = batfill.random_mask(4, 4, seed=5)
    out = batfill.complete(model, data[0], mask, mode="bat", top_k=2, n=3, seed=6)
    assert len(out) == 3
    for grid in out:
        assert np.array_equal(grid[~mask], data[0][~mask])
    again = batfill.complete(model, data[0], mask, mode="bat", top_k=2, n=3, seed=6)
    assert all(np.array_equal(a, b) for a, b in zip(out, again))
    assert batfill.logits(model, data[0], mask).shape == (int(mask.sum()), 2)


def test_metrics():
    a = np.zeros((2, 2, 3), dtype=np.uint8)
    b = np.full((2, 2, 3), 255, dtype=np.uint8)
    assert batfill.psnr(a, b) == pytest.approx(0.0)
    assert batfill.pixel_l1(a, b) == 255.0
    t = np.array([[0, 1], [1, 0]])
    mask = np.array([[True, False], [False, True]])
    assert batfill.token_accuracy(t, t, mask) == 1.0


def test_errors_surface_as_exceptions():
    tokens = np.zeros((2, 2), dtype=np.int32)
    with pytest.raises(batfill.BatfillError, match="nothing to predict"):
        model = batfill.init_model("tiny", 2, 4)
        batfill.complete(model, tokens, np.zeros((2, 2), dtype=bool))
