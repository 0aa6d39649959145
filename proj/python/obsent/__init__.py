"""Observational entropy toolkit.

Coarse-grained entropy functionals on finite quantum and classical state
spaces: ordered measurement sequences, product measurements and quantum
correlation entropy, and the thermodynamic entropies of hard-core boson
chains under exact-diagonalization dynamics.
"""

from obsent._core import *  # noqa: F401,F403

__version__ = "0.1.0"
