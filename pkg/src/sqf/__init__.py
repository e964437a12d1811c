"""Stochastic-quantization workbench for a 2D Yukawa model.

Verifies, at desk scale, that equal-time correlators of the fictitious-
time Langevin dynamics reproduce Euclidean correlation functions: exact
Grassmann/Berezin calculus, retarded Green kernels, lattice Langevin
chains for the boson sector, and perturbative Wick-contraction checks.
"""

__version__ = "0.1.0"
