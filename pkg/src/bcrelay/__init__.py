"""Cut-set bounds and desk-scale coding simulations for broadcast relay networks."""

__version__ = "0.1.0"
