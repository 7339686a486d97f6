"""Orientation-resolved photoemission delays of a 1D asymmetric model molecule.

Subpackage map:

* :mod:`moldelays.model` - soft-core potential, grids, field-free ground state
* :mod:`moldelays.partial_wave` - 1D polar coordinates and coupled radial waves
* :mod:`moldelays.wigner` - selected continuum waves and Wigner delay scans
* :mod:`moldelays.tdse` - time-dependent propagation and windowed spectra
* :mod:`moldelays.rabbit` - sideband delay scans and pattern fits
* :mod:`moldelays.pt2` - second-order two-photon sideband phases
* :mod:`moldelays.analysis` - probe delays, closed-form and power-law fits
* :mod:`moldelays.cli` - configuration, manifests and the command surface
"""

__version__ = "0.1.0"
