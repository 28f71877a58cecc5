from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp

KAPPA_MAX = 0.99


class Distortion_Model:
    """
    Parametric model of the reconstruction distortion of compressed data, as
    a function of the compression ratio kappa::

        D(kappa) = (c1 * exp(1 - kappa) + c2 * (1 - kappa)^(-c3)
                    + c4 * F^(-c5) - c6) / 100

    clamped to [0, 1].

    Parameters
    ----------
    c1, c2, c3, c4, c5, c6 : float
        The fitted coefficients.
    filter_length : float
        Wavelet filter length ``F``. Must be >= 1.
    kappa_max : float
        Largest admissible compression ratio. Must be in (0, 1).
    n_validation_samples : int
        Number of evenly spaced ratios on [0, ``kappa_max``] on which the
        model is checked to be nondecreasing at construction time.

    Attributes
    ----------
    coefficients : np.ndarray
        (c1, c2, c3, c4, c5, c6).
    filter_length : float
        Same as the input parameter.
    kappa_max : float
        Same as the input parameter.
    n_clamped : int
        Number of evaluated ratios whose raw distortion fell outside [0, 1]
        and had to be clamped.

    Raises
    ------
    ValueError
        When ``filter_length`` < 1, when ``kappa_max`` is outside (0, 1), or
        when the model is not nondecreasing on [0, ``kappa_max``]
    """

    def __init__(
            self,
            c1: float = 0.5,
            c2: float = 3.0,
            c3: float = 0.92,
            c4: float = 2.0,
            c5: float = 1.0,
            c6: float = 2.859,
            filter_length: float = 4,
            kappa_max: float = KAPPA_MAX,
            n_validation_samples: int = 1000,
    ) -> None:
        if filter_length < 1:
            raise ValueError('`filter_length` must be >= 1.')

        if not 0 < kappa_max < 1:
            raise ValueError('`kappa_max` must be within (0, 1).')

        if not hlp.is_int(n_validation_samples) or n_validation_samples < 2:
            raise ValueError('`n_validation_samples` must be an integer >= 2.')

        self.coefficients = np.array([c1, c2, c3, c4, c5, c6], dtype=float)
        self.filter_length = float(filter_length)
        self.kappa_max = float(kappa_max)
        self.n_clamped = 0

        samples = np.linspace(0.0, self.kappa_max, int(n_validation_samples))
        raw = self.raw_distortion(samples)
        if not np.all(np.isfinite(raw)) or np.any(np.diff(raw) < -1e-12):
            raise ValueError(
                'The distortion model must be nondecreasing in the compression '
                'ratio on [0, %g] for the given coefficients.' % self.kappa_max,
            )

    def __repr__(self) -> str:
        return 'Distortion_Model(c=%s, F=%g, kappa_max=%g)' % (
            np.array2string(self.coefficients, separator=', '),
            self.filter_length,
            self.kappa_max,
        )

    def raw_distortion(self, ratio: float | np.ndarray) -> float | np.ndarray:
        """
        Unclamped distortion. No domain check beyond ``ratio`` < 1.

        Parameters
        ----------
        ratio : float | np.ndarray
            Compression ratio(s).

        Returns
        -------
        float | np.ndarray
            The unclamped model value(s).
        """
        c1, c2, c3, c4, c5, c6 = self.coefficients
        kappa = np.asarray(ratio, dtype=float)
        value = (
            c1 * np.exp(1.0 - kappa)
            + c2 * (1.0 - kappa) ** (-c3)
            + c4 * self.filter_length ** (-c5)
            - c6
        ) / 100.0
        if np.ndim(ratio) == 0:
            return float(value)

        return value
