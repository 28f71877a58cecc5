from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_distortion_model import Distortion_Model

logger = hlp.get_logger(__name__)


def compressed_length(
        raw_bits: float | np.ndarray,
        ratio: float | np.ndarray,
) -> float | np.ndarray:
    """
    Data length after compression: raw_bits * (1 - ratio).

    Parameters
    ----------
    raw_bits : float | np.ndarray
        Uncompressed length. Unit: bit.
    ratio : float | np.ndarray
        Compression ratio, in [0, 1).

    Returns
    -------
    float | np.ndarray
        Compressed length. Unit: bit.

    Raises
    ------
    ValueError
        When ``ratio`` is outside [0, 1) or ``raw_bits`` is negative
    """
    kappa = np.asarray(ratio, dtype=float)
    raw = np.asarray(raw_bits, dtype=float)
    if np.any((kappa < 0) | (kappa >= 1)):
        raise ValueError('`ratio` must be within [0, 1).')

    if np.any(raw < 0):
        raise ValueError('`raw_bits` must be non-negative.')

    result = raw * (1.0 - kappa)
    if np.ndim(raw_bits) == 0 and np.ndim(ratio) == 0:
        return float(result)

    return result


def distortion(
        model: Distortion_Model,
        ratio: float | np.ndarray,
) -> float | np.ndarray:
    """
    Normalized distortion caused by compressing with ``ratio``, clamped to
    [0, 1]. Each clamped value increments ``model.n_clamped``.

    Parameters
    ----------
    model : Distortion_Model
        The distortion model.
    ratio : float | np.ndarray
        Compression ratio(s), in [0, ``model.kappa_max``].

    Returns
    -------
    float | np.ndarray
        Distortion(s) in [0, 1].

    Raises
    ------
    ValueError
        When ``ratio`` is outside [0, ``model.kappa_max``]
    """
    kappa = np.asarray(ratio, dtype=float)
    if np.any((kappa < 0) | (kappa > model.kappa_max)):
        raise ValueError(
            '`ratio` must be within [0, %g] (1 is a pole of the distortion '
            'model).' % model.kappa_max,
        )

    value, n_clamped = hlp.clamp_unit(model.raw_distortion(ratio))
    if n_clamped > 0:
        model.n_clamped += n_clamped
        logger.debug('Clamped %d distortion value(s) into [0, 1].', n_clamped)

    return value
