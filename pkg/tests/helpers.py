"""Shared fixtures-by-function for the test modules."""
import numpy as np


def smooth_random_field(mesh, rng, modes=6, amplitude=1.5):
    """Random cosine series on the square, scaled to max |u| = amplitude."""
    x, y = mesh.points.T
    u = np.zeros_like(x)
    for _ in range(modes):
        kx, ky = rng.integers(0, 4, 2)
        ph = rng.uniform(0, 2 * np.pi, 2)
        u += rng.normal() * np.cos(np.pi * kx * (x + 0.5) + ph[0]) * np.cos(np.pi * ky * (y + 0.5) + ph[1])
    peak = np.abs(u).max()
    if peak == 0:
        return u
    return amplitude * u / peak
