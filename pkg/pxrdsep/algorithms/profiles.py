import numpy as np
from scipy.special import voigt_profile as _scipy_voigt

from pxrdsep.errors import NonPositiveFwhm

# FWHM = 2·sqrt(2 ln 2)·σ
_FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))

# Voigt FWHM of a Gaussian and a Lorentzian that share the FWHM g is
# approximately 1.6376·g (0.5346 fL + sqrt(0.2166 fL² + fG²))
_VOIGT_WIDTH_RATIO = 0.5346 + np.sqrt(0.2166 + 1.0)

# Default Lorentzian fraction of the pseudo-Voigt
DEFAULT_ETA = 0.5

# Profiles are truncated this many FWHMs from their center
PROFILE_CUTOFF = 8.0


def _check_fwhm(fwhm):
    fwhm = np.asarray(fwhm, dtype=np.float64)
    if np.any(fwhm <= 0.0) or not np.all(np.isfinite(fwhm)):
        raise NonPositiveFwhm(f"Peak FWHM must be positive: {fwhm}")
    return fwhm


def gaussian(x, center, fwhm):
    """Unit-area Gaussian with the given FWHM"""
    sigma = fwhm * _FWHM_TO_SIGMA
    z = (x - center) / sigma
    return np.exp(-0.5 * z * z) / (sigma * np.sqrt(2.0 * np.pi))


def lorentzian(x, center, fwhm):
    """Unit-area Lorentzian with the given FWHM"""
    gamma = 0.5 * fwhm
    return gamma / (np.pi * ((x - center) ** 2 + gamma * gamma))


def pseudo_voigt(x, center, fwhm, eta=DEFAULT_ETA):
    """
    Pseudo-Voigt line shape ``η·L + (1 − η)·G``.

    Both components have FWHM Γ (Gaussian σ = Γ/(2√(2 ln 2)), Lorentzian
    half-width γ = Γ/2), so the mixture's FWHM is exactly Γ.
    """
    return eta * lorentzian(x, center, fwhm) + (1.0 - eta) * gaussian(x, center, fwhm)


def exact_voigt(x, center, fwhm):
    """
    Gaussian⊗Lorentzian convolution with FWHM ≈ Γ.

    The two components keep the ratio 2γ = 2√(2 ln 2)σ and are narrowed
    together so that the convolved line has the requested FWHM.
    """
    g = fwhm / _VOIGT_WIDTH_RATIO
    return _scipy_voigt(x - center, g * _FWHM_TO_SIGMA, 0.5 * g)


def profile_matrix(
    two_theta, centers, fwhms, exact=False, eta=DEFAULT_ETA, cutoff=PROFILE_CUTOFF
):
    """
    Evaluate one line profile per peak on a grid.

    Parameters
    ----------
    two_theta : np.ndarray
        Grid angles (length L)
    centers, fwhms : np.ndarray
        Peak positions and widths in degrees (length n)
    exact : bool
        Use the numerical Voigt instead of the pseudo-Voigt
    eta : float
        Lorentzian fraction of the pseudo-Voigt
    cutoff : float or None
        Profiles are set to zero farther than ``cutoff·Γ`` from their center

    Returns
    -------
    np.ndarray
        n x L array; each row sums (times the grid step) to one
    """
    fwhms = _check_fwhm(fwhms)
    centers = np.asarray(centers, dtype=np.float64)
    x = two_theta[None, :]
    c = centers[:, None]
    w = fwhms[:, None]
    if exact:
        rows = exact_voigt(x, c, w)
    else:
        rows = pseudo_voigt(x, c, w, eta)
    if cutoff is not None:
        rows[np.abs(x - c) > cutoff * w] = 0.0
    step = two_theta[1] - two_theta[0] if len(two_theta) > 1 else 1.0
    norm = rows.sum(axis=1, keepdims=True) * step
    return np.divide(rows, norm, out=np.zeros_like(rows), where=norm > 0.0)


def voigt_profile(
    center, fwhm, grid, exact=False, eta=DEFAULT_ETA, cutoff=PROFILE_CUTOFF
):
    """
    Render a single peak profile on a grid.

    Parameters
    ----------
    center : float
        Peak position in degrees 2θ
    fwhm : float
        Full width at half maximum in degrees
    grid : Grid
        Sampling grid
    exact : bool
        Use the numerical Gaussian⊗Lorentzian convolution
    eta : float
        Lorentzian fraction of the pseudo-Voigt
    cutoff : float or None
        Truncation distance in units of ``fwhm``

    Returns
    -------
    np.ndarray
        Length L vector with unit integral on the grid

    Raises
    ------
    NonPositiveFwhm
        If ``fwhm <= 0``
    """
    return profile_matrix(grid.two_theta, [center], [fwhm], exact, eta, cutoff)[0]


def geometry_kernel(
    step, detector_distance, slit_half_height, sample_half_height, kappa=0.02
):
    """
    One-sided triangular kernel for axial-divergence smearing.

    The kernel moves intensity toward lower angles over a width of
    ``κ·atan((H + S) / distance)`` degrees, with H the slit half-height and S
    the sample half-height (both in mm, as is the distance). It has odd
    length and is meant for ``np.convolve(..., mode="same")``.

    Returns
    -------
    np.ndarray
        Normalized kernel; ``[1.0]`` when the width is below one step
    """
    width = kappa * np.rad2deg(
        np.arctan((slit_half_height + sample_half_height) / detector_distance)
    )
    n = int(np.floor(width / step))
    if n < 1:
        return np.ones(1)
    kernel = np.zeros(2 * n + 1)
    # Index n is the center tap; taps below it pull from higher angles
    kernel[: n + 1] = 1.0 - np.arange(n, -1, -1) / (n + 1.0)
    return kernel / kernel.sum()


def smoothing_kernel(step, sigma):
    """
    Sampled Gaussian kernel of standard deviation ``sigma`` degrees.

    Covers ±4σ with odd length; ``[1.0]`` when σ is below a tenth of a step.
    """
    if sigma < 0.1 * step:
        return np.ones(1)
    half = int(np.ceil(4.0 * sigma / step))
    offsets = step * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def convolve_same(values, kernel):
    """Convolve and keep the input length; the kernel must have odd length"""
    if len(kernel) == 1:
        return values * kernel[0]
    if len(kernel) % 2 == 0:
        raise ValueError(f"Kernel length must be odd: {len(kernel)}")
    if len(kernel) > len(values):
        pad = len(kernel) // 2
        padded = np.concatenate([np.zeros(pad), values, np.zeros(pad)])
        return np.convolve(padded, kernel, mode="same")[pad:-pad]
    return np.convolve(values, kernel, mode="same")
