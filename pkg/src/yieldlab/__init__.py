"""yieldlab: cohesive free-discontinuity energies and non-minimality certificates."""

__version__ = "0.1.0"
