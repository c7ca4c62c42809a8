"""Independent finite-difference oracles for the manufactured solutions.

Fourth-order central differences along the 1D parametrizations (polar
angle on the sphere, axial coordinate on the cylinder) give Laplacians
accurate to ~1e-9 at step 1e-2, far below the tolerances they guard.
All operators use the positive semidefinite sign convention, matching
the solver modules.
"""

import numpy as np

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def d1(values, h):
    """Fourth-order first derivative; valid on values[2:-2]."""
    out = np.convolve(values, _D1[::-1], mode="valid") / h
    return out


def d2(values, h):
    """Fourth-order second derivative; valid on values[2:-2]."""
    return np.convolve(values, _D2[::-1], mode="valid") / (h * h)


def polar_laplacian_fd(values, thetas, radius=1.0, azimuthal_order=0):
    """FD Laplacian of an axisymmetric-in-phi separated field on a sphere.

    For g(theta) sampled on a uniform grid, returns
    -(g'' + cot(theta) g' - m^2 g / sin^2(theta)) / R^2
    on the interior slice thetas[2:-2] (positive semidefinite sign).
    """
    h = thetas[1] - thetas[0]
    mid = thetas[2:-2]
    m2 = azimuthal_order * azimuthal_order
    return -(d2(values, h) + d1(values, h) / np.tan(mid)
             - m2 * values[2:-2] / np.sin(mid) ** 2) / radius**2


def axial_laplacian_fd(values, zs):
    """FD Laplacian of a z-only field on a cylinder: -(g'')."""
    h = zs[1] - zs[0]
    return -d2(values, h)
