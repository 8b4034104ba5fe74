"""
majlab: multivariable Schur-Horn constructions.

Modules:
    - spectra.py      : joint spectral measures, hull membership
    - majorization.py : transport witnesses and canonical majorants
    - matrixlab.py    : dense unitaries, Birkhoff, inflation, obstructions
    - ii1sim.py       : finite-resolution II1 engines
    - bhdiag.py       : truncated B(H) diagonal synthesis, index check
    - runner.py       : reports for the CLI and the bundled cases
"""

from .config import MajlabConfig
from .runner import MajlabRunner
from .cases import get_case

__all__ = ["MajlabConfig", "MajlabRunner", "get_case"]
