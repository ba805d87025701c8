"""kdv5-control - Simulation and control toolkit for fifth-order KdV equations on the torus."""

__version__ = "0.1.0"
