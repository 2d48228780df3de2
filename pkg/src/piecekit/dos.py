"""Density of states of the two-dimensional square lattice.

Nearest-neighbour hopping with unit energy and unit lattice parameter gives
the dispersion ``eps(k) = 2 (cos kx + cos ky)`` and

    N(E) = K(1 - (E/4)**2) / (2 pi**2)   for |E| <= 4,   0 otherwise,

with ``K(m)`` the complete elliptic integral of the first kind (parameter
convention).  N has jumps at ``E = +-4`` and a log singularity at ``E = 0``
with amplitude ``-1/(2 pi**2)`` in front of ``ln|E|``.
"""

import math

import numpy as np

__all__ = ["ellipk_agm", "square_lattice_dos", "LOG_AMPLITUDE",
           "brillouin_zone_moment"]

#: coefficient of ln|E| in N(E) near E = 0
LOG_AMPLITUDE = -1.0 / (2.0 * math.pi ** 2)


def _agm(a, b):
    while abs(a - b) > 1e-15 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def ellipk_agm(m=None, *, kprime=None):
    """Complete elliptic integral K(m) = pi / (2 AGM(1, sqrt(1 - m))).

    Pass ``kprime = sqrt(1 - m)`` directly to avoid the cancellation in
    ``1 - m`` near ``m = 1``.
    """
    if kprime is None:
        kprime = math.sqrt(1.0 - m)
    if kprime == 0.0:
        return math.inf
    return math.pi / (2.0 * _agm(1.0, kprime))


def square_lattice_dos(E):
    """N(E); uses ``ln(16/|E|)`` below ``|E| = 1e-4`` as the reference does."""
    E = abs(float(E))
    if E < 1e-4:
        k = math.log(16.0 / E) if E else math.inf
    elif E > 4.0:
        return 0.0
    else:
        k = ellipk_agm(kprime=E / 4.0)
    return k / (2.0 * math.pi ** 2)


def brillouin_zone_moment(n, grid=2048):
    """``<eps(k)**n>`` averaged over a uniform ``grid x grid`` zone mesh.

    Independent of any fitted representation: the n-th moment of N(E).
    """
    k = 2.0 * np.pi * np.arange(grid) / grid
    c = np.cos(k)
    eps = 2.0 * (c[:, None] + c[None, :])
    return float(np.mean(eps ** n))
