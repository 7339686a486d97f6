"""Tabulated benchmark values used by the deviation report.

Delay entries are attoseconds, phases radians; Table-1-style entries are
indexed by the expansion origin in Angstrom at a photoelectron energy of
4.35 eV, Table-2-style entries by probe wavelength for the sideband family
centered at that same energy.
"""

WIGNER_EPS_EV = 4.35

WIGNER_DELAYS_AS = {
    -0.20: {0: +15.6, 180: -8.9},
    0.00: {0: -0.5, 180: +7.2},
    +0.20: {0: -16.5, 180: +23.3},
}

MOLECULAR_PHASES_RAD = {
    800: {0: -0.4872, 180: -0.5234},
    1600: {0: -0.3747, 180: -0.4024},
    3200: {0: -0.2661, 180: -0.2831},
    6400: {0: -0.1762, 180: -0.1858},
    12800: {0: -0.1097, 180: -0.1148},
}

MOLECULAR_DELAYS_AS = {
    800: {0: -103.4, 180: -111.0},
    1600: {0: -159.0, 180: -170.8},
    3200: {0: -225.8, 180: -240.3},
    6400: {0: -299.0, 180: -315.4},
    12800: {0: -372.6, 180: -389.8},
}

EFFECTIVE_CHARGE_FITS = {22: (0.80, 0.02), 24: (0.84, 0.02),
                         26: (0.85, 0.03), 28: (0.84, 0.05)}

POWER_LAW_FITS = {22: (0.88, 0.05), 24: (1.03, 0.04),
                  26: (1.09, 0.03), 28: (1.08, 0.01)}

IONIZATION_POTENTIAL_EV = 29.77
MEAN_POSITION_ANGSTROM = -0.16
