"""Shared fixtures and independent reference implementations.

The reference functions here are deliberately written as plain scalar
transcriptions of the published recurrences and closed forms; the package
code must match them, never the other way around.
"""

import math

import numpy as np
import pytest

from caster.runner import HAND_SHAPE


@pytest.fixture
def hand_points():
    """A plausible centered 21-keypoint hand, meters."""
    return HAND_SHAPE - HAND_SHAPE.mean(axis=0)


def one_euro_reference(x, dt, min_cutoff, beta, gamma):
    """Line-by-line scalar transcription of the adaptive low-pass filter:
    first sample passes through, velocity estimate starts at zero, then

        vdot_k  = (x_k - xhat_{k-1}) / dt
        vhat_k  = gamma vdot_k + (1 - gamma) vhat_{k-1}
        alpha_k = 1 / (1 + 1 / (2 pi dt (min_cutoff + beta |vhat_k|)))
        xhat_k  = alpha_k x_k + (1 - alpha_k) xhat_{k-1}
    """
    out = [float(x[0])]
    vhat = 0.0
    for k in range(1, len(x)):
        vdot = (x[k] - out[k - 1]) / dt
        vhat = gamma * vdot + (1.0 - gamma) * vhat
        alpha = 1.0 / (1.0 + 1.0 / (2.0 * math.pi * dt * (min_cutoff + beta * abs(vhat))))
        out.append(alpha * x[k] + (1.0 - alpha) * out[k - 1])
    return np.array(out)


def go_ellipsoid_rcs(a, b, c, direction):
    """Geometric-optics monostatic cross section of an ellipsoid with
    semi-axes (a, b, c) seen from a unit direction (u, v, w):

        sigma = pi a^2 b^2 c^2 / (a^2 u^2 + b^2 v^2 + c^2 w^2)^2
    """
    u, v, w = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    return math.pi * (a * b * c) ** 2 / (a * a * u * u + b * b * v * v + c * c * w * w) ** 2


def rotation_angle_between(r1, r2):
    """Geodesic angle between two rotation matrices, radians."""
    cos = (np.trace(r1 @ r2.T) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def random_rotation(rng, max_angle=2.5):
    """Uniform random axis, angle up to max_angle (stays away from pi)."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.05, max_angle)
    k = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)
