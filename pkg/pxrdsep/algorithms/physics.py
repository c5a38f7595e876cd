"""
Angle-dependent intensity and broadening factors for powder diffraction.
"""

import numpy as np
from scipy.integrate import quad

from pxrdsep.errors import NonPositiveInput, ThetaOutOfRange
from pxrdsep.utils.math import angle_between, reciprocal_cartesian
from pxrdsep.utils.units import AMU, BOLTZMANN, PLANCK, nm2Angstroms

# Scherrer shape constant
SCHERRER_K = 0.9

# 1 m² in Å²
_M2_TO_A2 = 1e20


def lp_factor(theta):
    """
    Lorentz-polarization factor ``(1 + cos²2θ) / (sin²θ cosθ)``.

    Parameters
    ----------
    theta : float or array
        Bragg angle θ in degrees (half the scattering angle)

    Returns
    -------
    float or np.ndarray

    Raises
    ------
    ThetaOutOfRange
        If any θ lies outside (0°, 90°)
    """
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(theta <= 0.0) or np.any(theta >= 90.0):
        raise ThetaOutOfRange(f"Bragg angle must lie in (0, 90) degrees: {theta}")
    t = np.deg2rad(theta)
    lp = (1.0 + np.cos(2.0 * t) ** 2) / (np.sin(t) ** 2 * np.cos(t))
    return float(lp) if lp.ndim == 0 else lp


def debye_waller(theta, wavelength, thermal_B):
    """
    Isotropic Debye-Waller damping ``exp(-2 B sin²θ / λ²)``.

    Parameters
    ----------
    theta : float or array
        Bragg angle θ in degrees
    wavelength : float
        Wavelength in Å
    thermal_B : float
        Isotropic displacement parameter in Å²

    Returns
    -------
    float or np.ndarray
        Values in (0, 1]
    """
    s2 = (np.sin(np.deg2rad(theta)) / wavelength) ** 2
    d = np.exp(-2.0 * thermal_B * s2)
    return float(d) if np.ndim(d) == 0 else d


def debye_function(x):
    """
    First-order Debye function ``φ(x) = (1/x) ∫₀ˣ t / (eᵗ − 1) dt``.

    Evaluated by adaptive quadrature to 1e-8 relative tolerance; ``φ(0) = 1``.
    """
    if x < 0.0:
        raise NonPositiveInput(f"Debye function argument must be >= 0: {x}")
    if x == 0.0:
        return 1.0

    def integrand(t):
        return 1.0 if t == 0.0 else t / np.expm1(t)

    value, _ = quad(integrand, 0.0, x, epsrel=1e-8, epsabs=0.0)
    return value / x


def debye_B(T, theta_D, mass):
    """
    Isotropic B (Å²) of an atom in a Debye solid.

    ``B = 6h²T / (m k_B Θ²) · (φ(Θ/T) + Θ/(4T))`` with h and k_B in SI units,
    the mass converted from amu to kg, and the result converted from m² to Å².

    Parameters
    ----------
    T : float
        Temperature in K
    theta_D : float
        Debye temperature in K
    mass : float
        Atomic mass in amu

    Raises
    ------
    NonPositiveInput
        If any argument is not positive
    """
    for name, value in (("T", T), ("theta_D", theta_D), ("mass", mass)):
        if not value > 0.0:
            raise NonPositiveInput(f"{name} must be positive: {value}")
    x = theta_D / T
    prefactor = 6.0 * PLANCK**2 * T / (mass * AMU * BOLTZMANN * theta_D**2)
    return prefactor * _M2_TO_A2 * (debye_function(x) + x / 4.0)


def debye_temperature_M(T, theta_D, mass, theta, wavelength):
    """
    Temperature-dependent Debye-Waller exponent M = B(T) sin²θ / λ².

    Parameters
    ----------
    T : float
        Temperature in K
    theta_D : float
        Debye temperature in K
    mass : float
        Atomic mass in amu
    theta : float or array
        Bragg angle θ in degrees
    wavelength : float
        Wavelength in Å

    Returns
    -------
    M : float or np.ndarray
        Non-negative exponent; intensities are damped by ``exp(-2M)``
    """
    s2 = (np.sin(np.deg2rad(theta)) / wavelength) ** 2
    M = debye_B(T, theta_D, mass) * s2
    return float(M) if np.ndim(M) == 0 else M


def scherrer_fwhm(crystallite_size, wavelength, theta, shape_constant=SCHERRER_K):
    """
    Peak FWHM from the Scherrer equation.

    ``Γ = (180/π) K λ / (D cosθ)`` with D converted from nm to Å.

    Parameters
    ----------
    crystallite_size : float
        Crystallite size D in nm
    wavelength : float
        Wavelength in Å
    theta : float or array
        Bragg angle θ in degrees
    shape_constant : float
        Scherrer constant K

    Returns
    -------
    float or np.ndarray
        FWHM in degrees 2θ
    """
    if not crystallite_size > 0.0:
        raise NonPositiveInput(f"Crystallite size must be positive: {crystallite_size}")
    size = nm2Angstroms(crystallite_size)
    gamma = np.rad2deg(shape_constant * wavelength / (size * np.cos(np.deg2rad(theta))))
    return float(gamma) if np.ndim(gamma) == 0 else gamma


def march_dollase(H, Gstar, axis, r):
    """
    March-Dollase preferred-orientation correction.

    ``O = (r² cos²φ + sin²φ / r)^(-3/2)`` where φ is the angle between each
    reciprocal vector and the preferred-orientation axis (itself given in
    reciprocal-lattice coordinates). ``r = 1`` means random orientation.

    Parameters
    ----------
    H : array
        n x 3 array of Miller indices
    Gstar : np.ndarray
        3x3 reciprocal metric tensor
    axis : tuple of int
        Preferred-orientation direction in reciprocal-lattice coordinates
    r : float
        March-Dollase parameter (> 0)

    Returns
    -------
    np.ndarray
        Length n array of correction factors
    """
    if not r > 0.0:
        raise NonPositiveInput(f"March-Dollase parameter must be positive: {r}")
    vecs = reciprocal_cartesian(np.atleast_2d(H), Gstar)
    ref = np.broadcast_to(reciprocal_cartesian(axis, Gstar), vecs.shape)
    phi = angle_between(vecs, ref, deg=False)
    return (r**2 * np.cos(phi) ** 2 + np.sin(phi) ** 2 / r) ** -1.5
