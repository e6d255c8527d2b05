"""Agreement metrics for parameter maps and reconstructed images.

Concordance correlation (CCC) for parameter-map agreement, mean structural
similarity (SSIM) with the standard 11x11 Gaussian window, and PSNR for
image fidelity. CCC accepts an optional region mask so background voxels
can be excluded the way brain masks are applied to clinical maps.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .errors import InfinitePsnrError, InvalidInputError, NumericDomainError

__all__ = ["ccc", "ssim", "psnr"]


def _paired(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise InvalidInputError(f"shape mismatch: {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("metric inputs must be finite")
    return x, y


def ccc(x, y, roi=None) -> float:
    """Concordance correlation coefficient over a volume (or masked region).

    ``2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)`` with
    population (1/N) moments. Lands in [-1, 1]; 1 means identity agreement,
    which is stricter than Pearson correlation since scale and offset
    mismatches are penalized.
    """
    x, y = _paired(x, y)
    if roi is not None:
        roi = np.asarray(roi)
        if roi.shape != x.shape:
            raise InvalidInputError("roi shape must match the data")
        sel = roi != 0
        x, y = x[sel], y[sel]
    x, y = x.ravel(), y.ravel()
    if x.size < 2:
        raise InvalidInputError("need at least two voxels to compare")
    mx, my = x.mean(), y.mean()
    vx = x.var()
    vy = y.var()
    cov = ((x - mx) * (y - my)).mean()
    denom = vx + vy + (mx - my) ** 2
    if denom == 0.0:
        if np.array_equal(x, y):
            return 1.0
        raise NumericDomainError("degenerate inputs: zero variance and equal means")
    return float(2.0 * cov / denom)


_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _gaussian_window():
    half = _SSIM_WIN // 2
    g = np.exp(-0.5 * (np.arange(-half, half + 1) / _SSIM_SIGMA) ** 2)
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_slice(x, y, data_range, w):
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    mu_x = convolve2d(x, w, mode="valid")
    mu_y = convolve2d(y, w, mode="valid")
    var_x = convolve2d(x * x, w, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, w, mode="valid") - mu_y**2
    cov = convolve2d(x * y, w, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(x, y, data_range) -> float:
    """Mean local SSIM (11x11 Gaussian window, sigma 1.5, K1/K2 = 0.01/0.03).

    Windows are evaluated only where they fit entirely inside the image.
    3D input is scored slice by slice along the last axis and averaged.
    """
    x, y = _paired(x, y)
    if data_range <= 0:
        raise InvalidInputError("data_range must be positive")
    if x.ndim not in (2, 3):
        raise InvalidInputError("ssim expects a 2D slice or a 3D volume")
    if x.shape[0] < _SSIM_WIN or x.shape[1] < _SSIM_WIN:
        raise InvalidInputError(
            f"image in-plane dims {x.shape[:2]} are smaller than the "
            f"{_SSIM_WIN}x{_SSIM_WIN} window"
        )
    w = _gaussian_window()
    if x.ndim == 2:
        return _ssim_slice(x, y, data_range, w)
    return float(
        np.mean([_ssim_slice(x[:, :, z], y[:, :, z], data_range, w)
                 for z in range(x.shape[2])])
    )


def psnr(ref, test, data_range) -> float:
    """Peak signal-to-noise ratio in dB against a reference.

    Raises InfinitePsnrError on identical inputs (zero MSE) so downstream
    statistics never mix infinities with numbers.
    """
    ref, test = _paired(ref, test)
    if data_range <= 0:
        raise InvalidInputError("data_range must be positive")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        raise InfinitePsnrError("inputs are identical: PSNR is unbounded")
    return float(10.0 * np.log10(data_range**2 / mse))
