from __future__ import annotations

import logging
import os
from typing import Any

import numpy as np

LOGGER_ROOT = 'PyMultiRAT'
LOG_LEVEL_ENV_VAR = 'MULTIRAT_LOG_LEVEL'
_LOG_LEVELS = {
    'error': logging.ERROR,
    'info': logging.INFO,
    'debug': logging.DEBUG,
}
_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger inside the ``PyMultiRAT`` logger hierarchy.

    Parameters
    ----------
    name : str
        Usually ``__name__`` of the calling module.

    Returns
    -------
    logging.Logger
        The logger.
    """
    if not name.startswith(LOGGER_ROOT):
        name = '%s.%s' % (LOGGER_ROOT, name)

    return logging.getLogger(name)


def configure_logging(level: str | None = None) -> logging.Logger:
    """
    Attach a single stream handler to the package logger.

    Parameters
    ----------
    level : str | None
        One of "error", "info", "debug" (case-insensitive). If ``None``, the
        value of the ``MULTIRAT_LOG_LEVEL`` environment variable is used, and
        "info" if that is not set either.

    Returns
    -------
    logging.Logger
        The package root logger.

    Raises
    ------
    ValueError
        When the level is not one of the valid values
    """
    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV_VAR, 'info')

    key = str(level).strip().lower()
    if key not in _LOG_LEVELS:
        raise ValueError(
            '`%s` must be one of %s, not "%s".'
            % (LOG_LEVEL_ENV_VAR, sorted(_LOG_LEVELS), level),
        )

    root = logging.getLogger(LOGGER_ROOT)
    root.setLevel(_LOG_LEVELS[key])
    if not any(getattr(h, '_multirat', False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        handler._multirat = True
        root.addHandler(handler)

    return root


def _assert_ndim(something: Any, ndim: int, name: str) -> None:
    if not isinstance(something, np.ndarray) or something.ndim != ndim:
        raise TypeError('%s must be a %dD numpy array.' % (name, ndim))


def assert_array_length(
        something: Any,
        length: int | None,
        name: str = '`something`',
) -> None:
    """
    Assert that ``something`` is a 1D numpy array with ``length`` entries.

    Parameters
    ----------
    something : Any
        The object to check.
    length : int | None
        Required number of entries. ``None`` only checks the dimension.
    name : str
        How ``something`` is called in the error message.

    Raises
    ------
    TypeError
        When ``something`` is not a 1D numpy array
    ValueError
        When its length differs from ``length``
    """
    _assert_ndim(something, 1, name)
    if length is not None and len(something) != length:
        raise ValueError(
            '%s must have length %d, but not %d.'
            % (name, length, len(something)),
        )


def assert_matrix_shape(
        something: Any,
        shape: tuple[int, int],
        name: str = '`something`',
) -> None:
    """
    Assert that ``something`` is a 2D numpy array of the given shape.

    Parameters
    ----------
    something : Any
        Any Python object.
    shape : tuple[int, int]
        The required shape.
    name : str
        The name of ``something`` for displaying the error message.

    Raises
    ------
    TypeError
        When ``something`` is not a 2D numpy array
    ValueError
        When the shape differs
    """
    _assert_ndim(something, 2, name)
    if something.shape != tuple(shape):
        raise ValueError(
            '%s must have shape %s, but not %s.'
            % (name, tuple(shape), something.shape),
        )


def is_number(value: Any) -> bool:
    """
    Check that ``value`` is a single real number (bool excluded).

    Parameters
    ----------
    value : Any
        Any Python object.

    Returns
    -------
    bool
        Whether ``value`` is a real number
    """
    if isinstance(value, bool):
        return False

    return isinstance(value, (int, float, np.integer, np.floating))


def is_int(number: Any) -> bool:
    """
    Check that a ``number`` represents an integer value. (Its data type does
    not need to be int or numpy.integer).

    Parameters
    ----------
    number : Any
        Any Python object.

    Returns
    -------
    bool
        Whether the given number is an integer
    """
    if not is_number(number):
        return False

    if isinstance(number, (int, np.integer)):
        return True

    return float(number).is_integer()


def check_length_or_extend_to_array(
        something: Any,
        length: int,
        name: str = '`something`',
) -> np.ndarray:
    """
    Check that ``something`` is a sequence with length ``length``, or if
    ``something`` is a single value, extend it to a 1D numpy array whose
    length is ``length`` and elements are all ``something``.

    Parameters
    ----------
    something : Any
        A single number, or a list/1D array of numbers.
    length : int
        The desired length of array.
    name : str
        The name of ``something`` for displaying the error message, if necessary.

    Returns
    -------
    array : np.ndarray
        The array of floats.

    Raises
    ------
    TypeError
        When ``something`` is neither a number nor a sequence of numbers
    """
    if is_number(something):
        return float(something) * np.ones(length)

    if isinstance(something, (list, tuple)):
        if not all(is_number(_) for _ in something):
            raise TypeError('%s must only contain numbers.' % name)

        something = np.array(something, dtype=float)

    if not isinstance(something, np.ndarray):
        raise TypeError(
            '%s must be a number or a list of %d numbers.' % (name, length),
        )

    assert_array_length(something, length, name=name)
    return something.astype(float)


def check_numbers_valid(array: np.ndarray) -> int:
    """
    Check the contents in ``array`` is valid (i.e., are numbers, are not
    infinite, are non-negative).

    Parameters
    ----------
    array : np.ndarray
        The numpy array to be tested.

    Returns
    -------
    error_flag : int
        0 if valid; -1 if not numeric; -2 if not finite; -3 if negative.
    """
    assert isinstance(array, np.ndarray)

    if not np.issubdtype(array.dtype, np.number):
        return -1

    if not np.isfinite(array).all():
        return -2

    if np.any(array < 0):
        return -3

    return 0


def is_on_simplex(
        vector: np.ndarray,
        axis: int = -1,
        atol: float = 1e-6,
) -> bool:
    """
    Check that ``vector`` (or every slice along ``axis``) is a probability
    vector: non-negative entries summing to 1.

    Parameters
    ----------
    vector : np.ndarray
        1D or 2D numpy array.
    axis : int
        The axis along which entries must sum to 1.
    atol : float
        Tolerance of the sum.

    Returns
    -------
    bool
        Whether the simplex invariant holds
    """
    vector = np.asarray(vector, dtype=float)
    if check_numbers_valid(vector) != 0:
        return False

    return bool(np.all(np.abs(vector.sum(axis=axis) - 1.0) <= atol))


def project_simplex(vector: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """
    Euclidean projection of ``vector`` onto the simplex
    ``{w : w >= 0, sum(w) = radius}``, by the sorting-based algorithm.

    Parameters
    ----------
    vector : np.ndarray
        1D numpy array to be projected.
    radius : float
        Radius of the simplex. Must be positive.

    Returns
    -------
    projected : np.ndarray
        The projection. Same shape as ``vector``.

    Raises
    ------
    ValueError
        When ``radius`` is not positive
    """
    assert_array_length(vector, None, name='`vector`')
    if radius <= 0:
        raise ValueError('`radius` must be positive.')

    u = np.sort(vector)[::-1]
    cssv = np.cumsum(u) - radius
    ind = np.arange(1, len(vector) + 1)
    rho = np.nonzero(u - cssv / ind > 0)[0][-1]
    tau = cssv[rho] / (rho + 1.0)
    return np.maximum(vector - tau, 0.0)


def clamp_unit(
        values: np.ndarray | float,
) -> tuple[np.ndarray | float, int]:
    """
    Clamp values into [0, 1] and count how many entries were changed.

    Parameters
    ----------
    values : np.ndarray | float
        The values to be clamped.

    Returns
    -------
    clamped : np.ndarray | float
        The clamped values (same type as input).
    n_clamped : int
        Number of entries that were outside [0, 1].
    """
    array = np.asarray(values, dtype=float)
    n_clamped = int(np.count_nonzero((array < 0.0) | (array > 1.0)))
    clamped = np.clip(array, 0.0, 1.0)
    if np.ndim(values) == 0:
        return float(clamped), n_clamped

    return clamped, n_clamped
