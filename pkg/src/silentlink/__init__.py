"""Predictive-silence underwater acoustic telemetry.

A vehicle predicts its own sensor and kinematic data and stays silent
while predictions match measurements, transmitting compressed 32-byte
packets only for the unpredictable part, while a control center steers
the mission with 32-byte control packets over a simulated low-rate
acoustic channel.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
