"""Numerical workbench for ODE flows, Hamiltonian mechanics, Fourier methods, spectral estimates, Green's functions and variational calculus."""

__version__ = "0.1.0"
