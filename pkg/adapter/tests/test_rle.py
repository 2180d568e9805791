import numpy as np
import pytest

from rvos_adapter.errors import MalformedRle
from rvos_adapter.rle import resize_mask, rle_decode_text, rle_encode_text


def test_round_trip_exact():
    rng = np.random.default_rng(7)
    for _ in range(50):
        h, w = rng.integers(1, 20, size=2)
        mask = rng.random((h, w)) < 0.4
        again = rle_decode_text(rle_encode_text(mask))
        assert np.array_equal(again, mask)


def test_textual_form():
    mask = np.zeros((2, 3), dtype=bool)
    assert rle_encode_text(mask) == "2,3:6"
    mask[0, 0] = True
    # column-major scan, foreground-first masks get a leading zero count
    assert rle_encode_text(mask) == "2,3:0 1 5"


@pytest.mark.parametrize(
    "text",
    ["2,3:1 2 banana", "2,3:5", "2,3:", "nope", "2,3:1 0 5", "2,3:-1 7", "0,3:0"],
)
def test_malformed_text_rejected(text):
    with pytest.raises(MalformedRle):
        rle_decode_text(text)


def test_resize_mask_round_trip_dims():
    mask = np.zeros((6, 8), dtype=bool)
    mask[1:4, 2:6] = True
    small = resize_mask(mask, 3, 4)
    back = resize_mask(small, 6, 8)
    assert small.shape == (3, 4)
    assert back.shape == (6, 8)
    assert small.any()


def test_resize_mask_identity_is_free():
    mask = np.ones((4, 4), dtype=bool)
    assert np.array_equal(resize_mask(mask, 4, 4), mask)
