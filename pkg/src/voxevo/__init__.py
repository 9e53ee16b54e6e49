"""Soft voxel robots with open-loop lifetime growth, evolved by AFPO."""

__version__ = "0.1.0"
