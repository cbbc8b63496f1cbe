import numpy as np


def smooth_field(grid, rng, width=1.0, complex_=True, cutoff=None):
    """Random band-limited field with Gaussian envelope."""
    n = grid.N
    noise = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if complex_ else 0)
    kc = cutoff if cutoff is not None else 0.25 * np.pi / grid.h
    filt = np.exp(-grid.k2 / kc**2)
    f = np.fft.ifft2(np.fft.fft2(noise) * filt)
    if not complex_:
        f = f.real
    env = np.exp(-grid.r2 / (2 * width**2))
    return f * env
