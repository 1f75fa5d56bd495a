"""Spectra of products of iid random matrices under low-rank perturbations."""

__version__ = "0.1.0"
