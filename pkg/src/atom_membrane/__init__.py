"""Cavity-mediated coupling of a trapped atom's motion to a membrane vibration.

Gaussian moment dynamics for the effective and full linearized models,
state-transfer and entanglement figures of merit, feasibility checks, optical
lattice geometry and membrane heating.
"""

__version__ = "0.1.0"
