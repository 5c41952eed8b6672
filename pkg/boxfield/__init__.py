"""
boxfield: simulate and verify the random boxes model.

Poisson fields of heavy-tailed rectangles, centred field functionals against
signed measures, and numerical checks of their six scaling limits.
"""

__version__ = "0.3.0"
