import numpy as np
import pytest

from avatargen.adapt import add_white_noise, apply_adaptation, gaussian_blur, gaussian_kernel


def test_kernel_normalized():
    for sigma in (0.3, 0.5, 1.0, 1.5, 2.7, 5.0):
        k = gaussian_kernel(sigma)
        assert abs(k.sum() - 1.0) < 1e-12
        assert len(k) == 2 * int(np.ceil(3 * sigma)) + 1
        np.testing.assert_array_equal(k, k[::-1])


def test_sigma_zero_identity(rng):
    img = rng.integers(0, 256, (20, 30, 3), dtype=np.uint8)
    np.testing.assert_array_equal(gaussian_blur(img, 0.0), img)


def test_constant_image(rng):
    for value in (0, 17, 128, 255):
        img = np.full((40, 50, 3), value, dtype=np.uint8)
        for sigma in (0.7, 1.5, 3.0):
            assert np.abs(gaussian_blur(img, sigma).astype(int) - value).max() <= 1


def test_impulse_response():
    img = np.zeros((15, 15), dtype=np.uint8)
    img[7, 7] = 255
    out = gaussian_blur(img, 1.0)
    # frozen from a direct 2D convolution with the outer-product kernel
    assert out[7, 4:11].tolist() == [0, 5, 25, 41, 25, 5, 0]
    assert out[4:11, 7].tolist() == [0, 5, 25, 41, 25, 5, 0]
    assert np.diag(out)[4:11].tolist() == [0, 1, 15, 41, 15, 1, 0]
    np.testing.assert_array_equal(out, out.T)


def test_blur_preserves_mean(rng):
    img = rng.integers(0, 256, (128, 128, 3), dtype=np.uint8)
    for sigma in (1.0, 3.0):
        assert abs(gaussian_blur(img, sigma).mean() - img.mean()) < 1.0


def test_negative_params(rng):
    img = np.zeros((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError):
        gaussian_blur(img, -1)
    with pytest.raises(ValueError):
        add_white_noise(img, -1, rng)


def test_noise_std_zero_identity(rng):
    img = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
    np.testing.assert_array_equal(add_white_noise(img, 0.0, rng), img)


def test_noise_statistics():
    img = np.full((512, 512, 3), 128, dtype=np.uint8)
    out = add_white_noise(img, 10.0, np.random.default_rng(0))
    diff = out.astype(float) - img
    assert abs(diff.std() / 10.0 - 1) < 0.05
    assert abs(diff.mean()) < 0.1


def test_noise_clamps():
    img = np.full((64, 64), 250, dtype=np.uint8)
    out = add_white_noise(img, 20.0, np.random.default_rng(1))
    assert out.max() == 255 and out.dtype == np.uint8


def test_noise_deterministic():
    img = np.full((16, 16, 3), 100, dtype=np.uint8)
    a = add_white_noise(img, 5, np.random.default_rng(42))
    b = add_white_noise(img, 5, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)


def test_apply_adaptation_dispatch(rng):
    img = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    assert apply_adaptation(img, "none") is img
    np.testing.assert_array_equal(apply_adaptation(img, "gauss", sigma=1.0), gaussian_blur(img, 1.0))
    with pytest.raises(ValueError):
        apply_adaptation(img, "sepia")
