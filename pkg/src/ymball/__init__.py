"""Lattice laboratory for SU(2) connections on a 5-ball.

Discretizes connection 1-forms on a lattice ball in R^5, minimizes the
Yang-Mills energy with fixed boundary connection, fixes gauges (Coulomb,
radial, projected Coulomb on sphere slices), measures Morrey densities
and second-Chern degrees, and runs the good/bad-ball approximation
scheme with its error ledger.
"""

__version__ = "0.1.0"
