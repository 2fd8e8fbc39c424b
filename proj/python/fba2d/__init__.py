"""Frequency-domain hard-label attacks on real/fake image detectors.

Images are float arrays in [0, 1] shaped (H, W) or (H, W, C); labels are
0 (real) and 1 (fake).
"""

from ._core import (
    AttackError,
    CallableOracle,
    FreqEnergyOracle,
    HalfspaceOracle,
    HttpOracle,
    Oracle,
    Surrogate,
    TransportError,
    build_soup,
    dct2,
    delta_next,
    frequency_mask,
    idct2,
    make_fake_like,
    make_real_like,
    make_soup,
    psnr,
    rmse,
    run_attack,
    ssim,
    train_surrogate,
    update_alpha,
)

REAL, FAKE = 0, 1

__all__ = [name for name in dir() if not name.startswith("_")]
