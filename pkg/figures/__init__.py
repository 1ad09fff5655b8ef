"""Plotting scripts that read the documented CSV schemas.

These scripts never recompute physics; they are pure readers of the field
and benchmark CSV files emitted by the spherevort CLI and service.
"""
