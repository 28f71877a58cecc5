from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp


class Ran_Profile:
    """
    Static parameters of one radio access network (RAN).

    Parameters
    ----------
    index : int
        Position of this RAN in the scenario (0-based).
    total_bandwidth_hz : float
        Total bandwidth of the RAN. Unit: Hz.
    cost_per_bit : float
        Monetary cost of sending one bit through this RAN.
    access_delay_s : float
        Fixed access delay added to every transmission. Unit: s.
    energy_scale : float
        Dimensionless scale of the transmission energy.
    energy_offset_j : float
        Fixed energy spent whenever the link is used. Unit: J.
    nominal_rate_cap_bps : float | None
        Nominal data rate of the RAN. If not ``None``, the Shannon rate is
        capped by it. Unit: bit/s.
    name : str | None
        A label, such as "5G". If ``None``, "RAN<index>" is used.

    Attributes
    ----------
    Attributes are the same as the input parameters.

    Raises
    ------
    TypeError
        When ``index`` is not an integer
    ValueError
        When any of the numeric parameters violates its range
    """

    def __init__(
            self,
            index: int,
            total_bandwidth_hz: float,
            cost_per_bit: float,
            access_delay_s: float,
            energy_scale: float = 1.0,
            energy_offset_j: float = 1e-4,
            nominal_rate_cap_bps: float | None = None,
            name: str | None = None,
    ) -> None:
        if not hlp.is_int(index) or index < 0:
            raise TypeError('`index` must be a non-negative integer.')

        if total_bandwidth_hz <= 0:
            raise ValueError('`total_bandwidth_hz` must be positive.')

        if cost_per_bit < 0:
            raise ValueError('`cost_per_bit` must be non-negative.')

        if access_delay_s < 0:
            raise ValueError('`access_delay_s` must be non-negative.')

        if energy_scale <= 0:
            raise ValueError('`energy_scale` must be positive.')

        if energy_offset_j < 0:
            raise ValueError('`energy_offset_j` must be non-negative.')

        if nominal_rate_cap_bps is not None and nominal_rate_cap_bps <= 0:
            raise ValueError('`nominal_rate_cap_bps` must be positive or None.')

        self.index = int(index)
        self.total_bandwidth_hz = float(total_bandwidth_hz)
        self.cost_per_bit = float(cost_per_bit)
        self.access_delay_s = float(access_delay_s)
        self.energy_scale = float(energy_scale)
        self.energy_offset_j = float(energy_offset_j)
        self.nominal_rate_cap_bps = (
            None if nominal_rate_cap_bps is None else float(nominal_rate_cap_bps)
        )
        self.name = 'RAN%d' % self.index if name is None else str(name)

    def __repr__(self) -> str:
        return (
            'Ran_Profile(%s: W=%g Hz, cost=%g /bit, delay=%g s, cap=%s)'
            % (
                self.name,
                self.total_bandwidth_hz,
                self.cost_per_bit,
                self.access_delay_s,
                self.nominal_rate_cap_bps,
            )
        )


class Channel_Params:
    """
    Physical-layer parameters shared by all links.

    Parameters
    ----------
    tx_power_w : float
        Transmission power of the PENs. Unit: W.
    noise_density_w_per_hz : float
        Noise power spectral density. Unit: W/Hz.
    path_loss : float
        Dimensionless path-loss factor.
    ber : float
        Target bit error rate. Must be in (0, 0.2) so that the derived
        ``k_factor`` is positive.

    Attributes
    ----------
    tx_power_w : float
        Same as the input parameter.
    noise_density_w_per_hz : float
        Same as the input parameter.
    path_loss : float
        Same as the input parameter.
    ber : float
        Same as the input parameter.
    k_factor : float
        The BER-dependent gain factor, -1.5 / ln(5 * ber).

    Raises
    ------
    ValueError
        When any parameter is not strictly positive, or ``ber`` >= 0.2
    """

    def __init__(
            self,
            tx_power_w: float,
            noise_density_w_per_hz: float,
            path_loss: float,
            ber: float = 1e-3,
    ) -> None:
        for name, value in [
            ('tx_power_w', tx_power_w),
            ('noise_density_w_per_hz', noise_density_w_per_hz),
            ('path_loss', path_loss),
            ('ber', ber),
        ]:
            if not hlp.is_number(value) or not value > 0:
                raise ValueError('`%s` must be a positive number.' % name)

        if ber >= 0.2:
            raise ValueError('`ber` must be < 0.2 for a positive gain factor.')

        self.tx_power_w = float(tx_power_w)
        self.noise_density_w_per_hz = float(noise_density_w_per_hz)
        self.path_loss = float(path_loss)
        self.ber = float(ber)
        self.k_factor = -1.5 / np.log(5.0 * self.ber)

    def __repr__(self) -> str:
        return 'Channel_Params(P_t=%g W, N0=%g W/Hz, sigma=%g, BER=%g)' % (
            self.tx_power_w,
            self.noise_density_w_per_hz,
            self.path_loss,
            self.ber,
        )


class Pen_Profile:
    """
    Static parameters of one patient edge node (PEN).

    Parameters
    ----------
    index : int
        Position of this PEN in the scenario (0-based).
    raw_bits_per_step : float
        Raw (uncompressed) data generated every step. Unit: bit.
    battery_capacity_j : float
        Initial (full) battery energy. Unit: J.
    seizure_prob : float
        Probability of a seizure onset per step.
    weights_normal : tuple[float, float, float, float]
        Weights of energy, cost, latency and distortion when there is no
        seizure. They must be in [0, 1] and sum to 1.
    weights_seizure : tuple[float, float]
        Weights of latency and distortion during a seizure, each in [0, 1].

    Attributes
    ----------
    index : int
        Same as the input parameter.
    raw_bits_per_step : float
        Same as the input parameter.
    battery_capacity_j : float
        Same as the input parameter.
    seizure_prob : float
        Same as the input parameter.
    alpha, beta, lam, delta : float
        The four entries of ``weights_normal``.
    lam_s, delta_s : float
        The two entries of ``weights_seizure``.

    Raises
    ------
    ValueError
        When weights or probabilities are out of range
    """

    def __init__(
            self,
            index: int,
            raw_bits_per_step: float,
            battery_capacity_j: float,
            seizure_prob: float,
            weights_normal: tuple[float, float, float, float] = (
                0.25,
                0.25,
                0.25,
                0.25,
            ),
            weights_seizure: tuple[float, float] = (0.5, 0.5),
    ) -> None:
        if not hlp.is_int(index) or index < 0:
            raise TypeError('`index` must be a non-negative integer.')

        if raw_bits_per_step < 0:
            raise ValueError('`raw_bits_per_step` must be non-negative.')

        if battery_capacity_j <= 0:
            raise ValueError('`battery_capacity_j` must be positive.')

        if not 0 <= seizure_prob <= 1:
            raise ValueError('`seizure_prob` must be within [0, 1].')

        weights_normal = np.asarray(weights_normal, dtype=float)
        hlp.assert_array_length(weights_normal, 4, name='`weights_normal`')
        if np.any((weights_normal < 0) | (weights_normal > 1)):
            raise ValueError('`weights_normal` entries must be within [0, 1].')

        if abs(weights_normal.sum() - 1.0) > 1e-9:
            raise ValueError('`weights_normal` must sum to 1.')

        weights_seizure = np.asarray(weights_seizure, dtype=float)
        hlp.assert_array_length(weights_seizure, 2, name='`weights_seizure`')
        if np.any((weights_seizure < 0) | (weights_seizure > 1)):
            raise ValueError('`weights_seizure` entries must be within [0, 1].')

        self.index = int(index)
        self.raw_bits_per_step = float(raw_bits_per_step)
        self.battery_capacity_j = float(battery_capacity_j)
        self.seizure_prob = float(seizure_prob)
        self.alpha, self.beta, self.lam, self.delta = weights_normal.tolist()
        self.lam_s, self.delta_s = weights_seizure.tolist()

    @property
    def weights_normal(self) -> tuple[float, float, float, float]:
        """(alpha, beta, lam, delta)"""
        return (self.alpha, self.beta, self.lam, self.delta)

    @property
    def weights_seizure(self) -> tuple[float, float]:
        """(lam_s, delta_s)"""
        return (self.lam_s, self.delta_s)

    def __repr__(self) -> str:
        return 'Pen_Profile(%d: B=%g bit, battery=%g J, seizure_prob=%g)' % (
            self.index,
            self.raw_bits_per_step,
            self.battery_capacity_j,
            self.seizure_prob,
        )
