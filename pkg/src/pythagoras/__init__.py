"""Exact arithmetic and sums-of-squares search in multiquadratic and real cyclotomic rings."""

__version__ = "0.1.0"
