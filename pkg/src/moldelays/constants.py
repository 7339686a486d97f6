"""Physical constants and unit conversions.

All internal computation is carried out in Hartree atomic units; these
factors are applied only when reading configuration values or writing
human-facing output.
"""

HARTREE_TO_EV = 27.211386
AU_TIME_TO_AS = 24.188843
ANGSTROM_TO_BOHR = 1.8897259
LIGHT_SPEED_AU = 137.035999

FEMTOSECOND_TO_AU = 1000.0 / AU_TIME_TO_AS          # 41.34137...
BOHR_RADIUS_M = 0.529177210903e-10
INTENSITY_AU_W_CM2 = 3.50944758e16                  # 1 a.u. of intensity in W/cm^2


def ev_to_hartree(e_ev: float) -> float:
    return e_ev / HARTREE_TO_EV


def hartree_to_ev(e_au: float) -> float:
    return e_au * HARTREE_TO_EV


def angstrom_to_bohr(x_ang: float) -> float:
    return x_ang * ANGSTROM_TO_BOHR


def bohr_to_angstrom(x_au: float) -> float:
    return x_au / ANGSTROM_TO_BOHR


def au_time_to_as(t_au: float) -> float:
    return t_au * AU_TIME_TO_AS


def fs_to_au(t_fs: float) -> float:
    return t_fs * FEMTOSECOND_TO_AU


def wavelength_nm_to_au(lambda_nm: float) -> float:
    """Wavelength in nm converted to bohr."""
    return lambda_nm * 1e-9 / BOHR_RADIUS_M


def omega0_from_wavelength_nm(lambda_nm: float) -> float:
    """Angular frequency (a.u.) of light with vacuum wavelength lambda_nm."""
    return 2.0 * 3.141592653589793 * LIGHT_SPEED_AU / wavelength_nm_to_au(lambda_nm)


def field_amplitude_au(intensity_w_cm2: float) -> float:
    """Peak electric-field amplitude (a.u.) for a given intensity in W/cm^2."""
    return (intensity_w_cm2 / INTENSITY_AU_W_CM2) ** 0.5
