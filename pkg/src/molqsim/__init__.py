"""Simulation of dipole-coupled molecular qubit dimers and trimers."""
__version__ = "0.1.0"
