"""Reference values from an independent symbolic computation.

Each spacetime below was written out as a full 4-metric in coordinates; the
Christoffel symbols, Ricci and Einstein tensors were computed symbolically
and evaluated at the listed points.  ``mu = -G^t_t`` and ``rho`` is the
repeated spatial eigenvalue of ``G^a_b``.  Every mixed Einstein tensor was
diagonal at these points.
"""

import math

SQRT2 = math.sqrt(2.0)
SQRT17 = math.sqrt(17.0)

# (point (x, y, z), xi, mu, rho), Euclidean signature, alpha = e_3
POWER_LAW = [
    ((0.3, -0.2, 1.0), 1.0, 1.0, -0.12310562561766054),
    ((0.1, 0.5, 2.0), 2.0, 0.0625, -0.007694101601103784),
    ((0.0, 0.0, 3.7), 3.7, 0.005335720890574502, -0.000656857258355395),
]
EXPONENTIAL = [
    ((0.1, 0.2, 0.0), 0.0, -1.0, 0.1715728752538099),
    ((0.1, 0.2, 0.7), 0.7, -4.0551999668446745, 0.6957623180406945),
]
LINEAR_RECIPROCAL = [
    ((0.3, 0.1, 0.5), 0.5, -3.0, 3.0),
    ((0.0, 0.0, 2.5), 2.5, -3.0, 3.0),
]
TRIGONOMETRIC = [
    ((0.1, -0.3, 0.3), 0.3, -2.0873321925451607, -0.098694608822374),
    ((0.0, 0.0, 0.0), 0.0, -2.0, 0.0),
    ((0.0, 0.0, -0.8), -0.8, -2.5145997611506443, -1.4633781643045063),
]
# signature (-,+,+), alpha = (1, 1, 0): the Einstein tensor vanishes identically
EXPONENTIAL_LIGHTLIKE_POINTS = [(0.2, 0.3, 0.1), (-0.4, 0.1, 0.5)]
# spatial scalar curvature / 2 of delta/phi^2, phi = sec^2(xi/2), computed directly in 3D
SECANT_MU = [(0.0, 1.0), (0.7, 1.2842460478371247), (-1.9, 8.734825772744754)]

