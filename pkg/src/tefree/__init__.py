"""Transmission eigenvalues of the disk and boundary symbol calculus."""

__version__ = "0.1.0"
