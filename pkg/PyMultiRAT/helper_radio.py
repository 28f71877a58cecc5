from __future__ import annotations

import numpy as np

from PyMultiRAT.class_exceptions import Zero_Rate_Transmission_Error
from PyMultiRAT.class_profiles import Channel_Params, Ran_Profile


def _to_output(array: np.ndarray, *inputs) -> float | np.ndarray:
    if all(np.ndim(_) == 0 for _ in inputs):
        return float(array)

    return array


def dbm_to_watt(value_dbm: float) -> float:
    """
    Convert a power from dBm to W.

    Parameters
    ----------
    value_dbm : float
        Power (or power density) in dBm (or dBm/Hz).

    Returns
    -------
    float
        Power (or power density) in W (or W/Hz).
    """
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def channel_gain(
        params: Channel_Params,
        fading_mag_sq: float | np.ndarray,
) -> float | np.ndarray:
    """
    Channel gain of a link: K * sigma * |h|^2.

    Parameters
    ----------
    params : Channel_Params
        Physical-layer parameters.
    fading_mag_sq : float | np.ndarray
        Squared magnitude of the fading coefficient. Must be non-negative.

    Returns
    -------
    float | np.ndarray
        The channel gain (same shape as ``fading_mag_sq``).

    Raises
    ------
    ValueError
        When ``fading_mag_sq`` has negative entries
    """
    h2 = np.asarray(fading_mag_sq, dtype=float)
    if np.any(h2 < 0):
        raise ValueError('`fading_mag_sq` must be non-negative.')

    gain = params.k_factor * params.path_loss * h2
    return _to_output(gain, fading_mag_sq)


def link_rate(
        ran: Ran_Profile,
        params: Channel_Params,
        bw_fraction: float | np.ndarray,
        gain: float | np.ndarray,
        *,
        shared_cap: bool = True,
) -> float | np.ndarray:
    """
    Achievable data rate of a link (Shannon rate over the allocated
    bandwidth, optionally capped by the nominal rate of the RAN).

    Parameters
    ----------
    ran : Ran_Profile
        The RAN serving the link.
    params : Channel_Params
        Physical-layer parameters.
    bw_fraction : float | np.ndarray
        Fraction of the RAN bandwidth allocated to the link, in [0, 1]. A
        fraction of 0 gives a rate of 0.
    gain : float | np.ndarray
        Channel gain of the link. Must be non-negative.
    shared_cap : bool
        If ``True``, a link holding fraction ``bw_fraction`` is capped at
        ``bw_fraction`` times the nominal rate; otherwise at the full nominal
        rate. Ignored when the RAN has no nominal rate.

    Returns
    -------
    float | np.ndarray
        Data rate in bit/s.

    Raises
    ------
    ValueError
        When ``bw_fraction`` is outside [0, 1] or ``gain`` is negative
    """
    theta = np.asarray(bw_fraction, dtype=float)
    g = np.asarray(gain, dtype=float)
    if np.any((theta < 0) | (theta > 1)):
        raise ValueError('`bw_fraction` must be within [0, 1].')

    if np.any(g < 0):
        raise ValueError('`gain` must be non-negative.')

    theta, g = np.broadcast_arrays(theta, g)
    bandwidth = theta * ran.total_bandwidth_hz
    positive = bandwidth > 0
    snr = np.divide(
        params.tx_power_w * g,
        params.noise_density_w_per_hz * bandwidth,
        out=np.zeros_like(bandwidth),
        where=positive,
    )
    rate = np.where(positive, bandwidth * np.log2(1.0 + snr), 0.0)

    if ran.nominal_rate_cap_bps is not None:
        cap = ran.nominal_rate_cap_bps * (theta if shared_cap else 1.0)
        rate = np.minimum(rate, cap)

    return _to_output(rate, bw_fraction, gain)


def link_energy(
        ran: Ran_Profile,
        params: Channel_Params,
        bits: float | np.ndarray,
        bw_fraction: float | np.ndarray,
        gain: float | np.ndarray,
        rate_bps: float | np.ndarray,
        *,
        include_offset: bool = True,
) -> float | np.ndarray:
    """
    Transmission energy spent by a PEN on one link:
    psi * (b * N0 * W_ij / (r * g)) * (2^(r / W_ij) - 1) + c.

    When ``rate_bps`` is the uncapped Shannon rate, this equals
    psi * b * P_t / r + c.

    Parameters
    ----------
    ran : Ran_Profile
        The RAN serving the link.
    params : Channel_Params
        Physical-layer parameters.
    bits : float | np.ndarray
        Payload sent on the link. Unit: bit.
    bw_fraction : float | np.ndarray
        Allocated bandwidth fraction.
    gain : float | np.ndarray
        Channel gain.
    rate_bps : float | np.ndarray
        Data rate of the link. Must be positive where ``bits`` is positive.
    include_offset : bool
        Whether to add the fixed offset ``ran.energy_offset_j``.

    Returns
    -------
    float | np.ndarray
        The energy. Unit: J.

    Raises
    ------
    ValueError
        When ``bits`` has negative entries
    Zero_Rate_Transmission_Error
        When positive bits are sent at a zero rate
    """
    b = np.asarray(bits, dtype=float)
    if np.any(b < 0):
        raise ValueError('`bits` must be non-negative.')

    b, theta, g, r = np.broadcast_arrays(
        b,
        np.asarray(bw_fraction, dtype=float),
        np.asarray(gain, dtype=float),
        np.asarray(rate_bps, dtype=float),
    )
    sending = b > 0
    if np.any(sending & ((r <= 0) | (g <= 0) | (theta <= 0))):
        raise Zero_Rate_Transmission_Error(float(np.max(b[sending])))

    bandwidth = theta * ran.total_bandwidth_hz
    safe_bw = np.where(sending, bandwidth, 1.0)
    safe_r = np.where(sending, r, 1.0)
    safe_g = np.where(sending, g, 1.0)
    variable = (
        ran.energy_scale
        * b
        * params.noise_density_w_per_hz
        * safe_bw
        / (safe_r * safe_g)
        * np.expm1(safe_r / safe_bw * np.log(2.0))
    )
    energy = np.where(sending, variable, 0.0)
    if include_offset:
        energy = energy + ran.energy_offset_j

    return _to_output(energy, bits, bw_fraction, gain, rate_bps)


def link_latency(
        ran: Ran_Profile,
        bits: float | np.ndarray,
        rate_bps: float | np.ndarray,
) -> float | np.ndarray:
    """
    Expected latency of sending ``bits`` on a link: b / r + xi.

    Parameters
    ----------
    ran : Ran_Profile
        The RAN serving the link.
    bits : float | np.ndarray
        Payload. Unit: bit.
    rate_bps : float | np.ndarray
        Data rate. Unit: bit/s.

    Returns
    -------
    float | np.ndarray
        Latency. Unit: s.

    Raises
    ------
    Zero_Rate_Transmission_Error
        When positive bits are sent at a zero rate
    """
    b, r = np.broadcast_arrays(
        np.asarray(bits, dtype=float),
        np.asarray(rate_bps, dtype=float),
    )
    sending = b > 0
    if np.any(sending & (r <= 0)):
        raise Zero_Rate_Transmission_Error(float(np.max(b[sending])))

    transfer = np.divide(b, r, out=np.zeros_like(b), where=sending)
    return _to_output(transfer + ran.access_delay_s, bits, rate_bps)


def link_cost(
        ran: Ran_Profile,
        bits: float | np.ndarray,
) -> float | np.ndarray:
    """
    Monetary cost of sending ``bits`` through a RAN.

    Parameters
    ----------
    ran : Ran_Profile
        The RAN.
    bits : float | np.ndarray
        Payload. Unit: bit.

    Returns
    -------
    float | np.ndarray
        The cost (in the currency of ``ran.cost_per_bit``).

    Raises
    ------
    ValueError
        When ``bits`` has negative entries
    """
    b = np.asarray(bits, dtype=float)
    if np.any(b < 0):
        raise ValueError('`bits` must be non-negative.')

    return _to_output(b * ran.cost_per_bit, bits)


def sample_fading_mag_sq(
        rng: np.random.Generator,
        shape: tuple[int, ...],
        scale: float = 1.0,
) -> np.ndarray:
    """
    Draw squared magnitudes of Rayleigh-distributed fading coefficients.

    Parameters
    ----------
    rng : np.random.Generator
        The random number generator.
    shape : tuple[int, ...]
        Output shape, usually (N, M).
    scale : float
        Scale parameter of the Rayleigh distribution. The mean of the
        returned values is 2 * scale**2.

    Returns
    -------
    np.ndarray
        |h|^2 samples.
    """
    return rng.rayleigh(scale=scale, size=shape) ** 2


def mean_fading_mag_sq(scale: float = 1.0) -> float:
    """
    Mean of |h|^2 for Rayleigh fading with the given scale.

    Parameters
    ----------
    scale : float
        Scale parameter of the Rayleigh distribution.

    Returns
    -------
    float
        2 * scale**2
    """
    return 2.0 * scale**2
