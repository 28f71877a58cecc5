from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_compression as cmp
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_radio as rad
from PyMultiRAT.class_distortion_model import Distortion_Model
from PyMultiRAT.class_profiles import Channel_Params, Pen_Profile, Ran_Profile

logger = hlp.get_logger(__name__)

TAG_ZERO_BANDWIDTH = 'zero-bandwidth-link'
TAG_RESOURCE_SHARE = 'resource-share'


class Link_Metrics:
    """
    Per-link and per-PEN metrics of one executed (or planned) decision.

    All matrices have shape (N, M); rows are PENs and columns are RANs.
    Links that are not used carry zeros everywhere.

    Attributes
    ----------
    used : np.ndarray
        Boolean matrix: the PEN sent data on the link.
    bits : np.ndarray
        Payload per link. Unit: bit.
    rate_bps : np.ndarray
        Achievable rate per link (computed for every link, used or not).
    energy_j, latency_s, cost : np.ndarray
        Raw per-link metrics.
    norm_energy, norm_cost, norm_latency : np.ndarray
        Metrics divided by the normalization constants and clamped to 1.
    overtime_s : np.ndarray
        Transmission time beyond the resource share (0 where respected).
    distortion : np.ndarray
        Normalized distortion per PEN (0 for inactive PENs).
    violation_tags : list[list[str]]
        Violated-constraint tags per PEN.
    link_violated : np.ndarray
        Boolean matrix of links on which a constraint was violated.
    """

    def __init__(
            self,
            *,
            used: np.ndarray,
            bits: np.ndarray,
            rate_bps: np.ndarray,
            energy_j: np.ndarray,
            latency_s: np.ndarray,
            cost: np.ndarray,
            norm_energy: np.ndarray,
            norm_cost: np.ndarray,
            norm_latency: np.ndarray,
            overtime_s: np.ndarray,
            distortion: np.ndarray,
            link_violated: np.ndarray,
            violation_tags: list[list[str]],
    ) -> None:
        self.used = used
        self.bits = bits
        self.rate_bps = rate_bps
        self.energy_j = energy_j
        self.latency_s = latency_s
        self.cost = cost
        self.norm_energy = norm_energy
        self.norm_cost = norm_cost
        self.norm_latency = norm_latency
        self.overtime_s = overtime_s
        self.distortion = distortion
        self.link_violated = link_violated
        self.violation_tags = violation_tags

    @property
    def pen_energy_j(self) -> np.ndarray:
        """Energy per PEN, summed over links."""
        return self.energy_j.sum(axis=1)

    @property
    def pen_cost(self) -> np.ndarray:
        """Cost per PEN, summed over links."""
        return self.cost.sum(axis=1)

    @property
    def pen_latency_s(self) -> np.ndarray:
        """Latency per PEN: the slowest used link."""
        return self.latency_s.max(axis=1)

    @property
    def pen_violated(self) -> np.ndarray:
        """Boolean per PEN: at least one tag was raised."""
        return np.array([len(_) > 0 for _ in self.violation_tags], dtype=bool)


class Scenario:
    """
    The static description of a multi-RAT system: RANs, PENs, channel,
    distortion model, normalization constants and timing.

    Parameters
    ----------
    rans : list[Ran_Profile]
        The M radio access networks.
    pens : list[Pen_Profile]
        The N patient edge nodes.
    channel : Channel_Params
        Physical-layer parameters.
    distortion_model : Distortion_Model
        The compression distortion model.
    resource_share_s : float
        Maximum transmission time per link per step. Unit: s.
    step_duration_s : float
        Wall-clock duration of one step, for lifetime reporting. Unit: s.
    seizure_mean_duration : float
        Mean seizure duration. Unit: steps. Must be >= 1.
    kappa_init : float
        Compression ratio assumed before the first step.
    connection_threshold : float
        A link is used when the utilization exceeds this value.
    rate_cap_shared : bool
        Whether the nominal RAN rate is shared in proportion to the
        bandwidth fraction (see ``helper_radio.link_rate()``).
    rayleigh_scale : float
        Scale of the Rayleigh fading.
    energy_max_j, cost_max, latency_max_s : float | None
        Normalization constants. Any ``None`` is derived by
        ``derive_normalization()``.
    min_usable_bw_fraction : float
        Smallest bandwidth fraction considered when deriving normalization
        constants.
    weak_fading_mag_sq : float
        Weakest fading magnitude considered when deriving normalization
        constants.

    Raises
    ------
    TypeError
        When profiles are of the wrong types
    ValueError
        When the lists are empty or scalar parameters are out of range
    """

    def __init__(
            self,
            rans: list[Ran_Profile],
            pens: list[Pen_Profile],
            channel: Channel_Params,
            distortion_model: Distortion_Model,
            *,
            resource_share_s: float = 0.02,
            step_duration_s: float = 10.0,
            seizure_mean_duration: float = 10.0,
            kappa_init: float = 0.5,
            connection_threshold: float = 1e-3,
            rate_cap_shared: bool = True,
            rayleigh_scale: float = 1.0,
            energy_max_j: float | None = None,
            cost_max: float | None = None,
            latency_max_s: float | None = None,
            min_usable_bw_fraction: float = 0.05,
            weak_fading_mag_sq: float = 0.05,
    ) -> None:
        if not isinstance(rans, list) or len(rans) == 0:
            raise ValueError('`rans` must be a non-empty list.')

        if not isinstance(pens, list) or len(pens) == 0:
            raise ValueError('`pens` must be a non-empty list.')

        if not all(isinstance(_, Ran_Profile) for _ in rans):
            raise TypeError('Elements of `rans` must be `Ran_Profile` objects.')

        if not all(isinstance(_, Pen_Profile) for _ in pens):
            raise TypeError('Elements of `pens` must be `Pen_Profile` objects.')

        if not isinstance(channel, Channel_Params):
            raise TypeError('`channel` must be a `Channel_Params` object.')

        if not isinstance(distortion_model, Distortion_Model):
            raise TypeError('`distortion_model` must be a `Distortion_Model`.')

        if resource_share_s <= 0 or step_duration_s <= 0:
            raise ValueError(
                '`resource_share_s` and `step_duration_s` must be positive.'
            )

        if seizure_mean_duration < 1:
            raise ValueError('`seizure_mean_duration` must be >= 1.')

        if not 0 <= kappa_init <= distortion_model.kappa_max:
            raise ValueError('`kappa_init` must be within [0, kappa_max].')

        if not 0 < connection_threshold < 1:
            raise ValueError('`connection_threshold` must be within (0, 1).')

        if not 0 < min_usable_bw_fraction <= 1:
            raise ValueError('`min_usable_bw_fraction` must be within (0, 1].')

        if weak_fading_mag_sq <= 0 or rayleigh_scale <= 0:
            raise ValueError(
                '`weak_fading_mag_sq` and `rayleigh_scale` must be positive.'
            )

        self.rans = rans
        self.pens = pens
        self.channel = channel
        self.distortion_model = distortion_model
        self.resource_share_s = float(resource_share_s)
        self.step_duration_s = float(step_duration_s)
        self.seizure_mean_duration = float(seizure_mean_duration)
        self.kappa_init = float(kappa_init)
        self.connection_threshold = float(connection_threshold)
        self.rate_cap_shared = bool(rate_cap_shared)
        self.rayleigh_scale = float(rayleigh_scale)
        self.min_usable_bw_fraction = float(min_usable_bw_fraction)
        self.weak_fading_mag_sq = float(weak_fading_mag_sq)

        derived = self.derive_normalization()
        self.energy_max_j = derived[0] if energy_max_j is None else energy_max_j
        self.cost_max = derived[1] if cost_max is None else cost_max
        self.latency_max_s = (
            derived[2] if latency_max_s is None else latency_max_s
        )
        if min(self.energy_max_j, self.cost_max, self.latency_max_s) <= 0:
            raise ValueError('Normalization constants must be positive.')

        self.n_obs_clamped = 0

    @property
    def n_pens(self) -> int:
        """N"""
        return len(self.pens)

    @property
    def n_rans(self) -> int:
        """M"""
        return len(self.rans)

    @property
    def kappa_max(self) -> float:
        """Largest admissible compression ratio."""
        return self.distortion_model.kappa_max

    @property
    def raw_bits(self) -> np.ndarray:
        """Raw payload per PEN per step."""
        return np.array([_.raw_bits_per_step for _ in self.pens])

    @property
    def battery_capacity_j(self) -> np.ndarray:
        """Full battery per PEN."""
        return np.array([_.battery_capacity_j for _ in self.pens])

    @property
    def seizure_probs(self) -> np.ndarray:
        """Seizure onset probability per PEN."""
        return np.array([_.seizure_prob for _ in self.pens])

    def derive_normalization(self) -> tuple[float, float, float]:
        """
        Worst-case normalization constants: the largest raw payload sent
        uncompressed on a single link holding the smallest usable bandwidth
        fraction under the weakest considered fading.

        Returns
        -------
        energy_max_j : float
            Largest per-link energy among the RANs.
        cost_max : float
            Largest per-link cost among the RANs.
        latency_max_s : float
            Largest per-link latency among the RANs.
        """
        bits = float(self.raw_bits.max())
        gain = rad.channel_gain(self.channel, self.weak_fading_mag_sq)
        theta = self.min_usable_bw_fraction
        energies, costs, latencies = [], [], []
        for ran in self.rans:
            rate = rad.link_rate(
                ran, self.channel, theta, gain, shared_cap=self.rate_cap_shared
            )
            energies.append(
                rad.link_energy(ran, self.channel, bits, theta, gain, rate)
            )
            costs.append(rad.link_cost(ran, bits))
            latencies.append(rad.link_latency(ran, bits, rate))

        return max(energies), max(max(costs), 1e-12), max(latencies)

    def rates(
            self,
            bw_fractions: np.ndarray,
            fading_mag_sq: np.ndarray,
    ) -> np.ndarray:
        """
        Achievable rate of every link.

        Parameters
        ----------
        bw_fractions : np.ndarray
            Matrix (N, M) of bandwidth fractions.
        fading_mag_sq : np.ndarray
            Matrix (N, M) of |h|^2.

        Returns
        -------
        np.ndarray
            Matrix (N, M) of rates in bit/s.
        """
        gain = rad.channel_gain(self.channel, fading_mag_sq)
        rate = np.zeros((self.n_pens, self.n_rans))
        for j, ran in enumerate(self.rans):
            rate[:, j] = rad.link_rate(
                ran,
                self.channel,
                bw_fractions[:, j],
                gain[:, j],
                shared_cap=self.rate_cap_shared,
            )

        return rate

    def evaluate_links(
            self,
            ratios: np.ndarray,
            utilization: np.ndarray,
            bw_fractions: np.ndarray,
            fading_mag_sq: np.ndarray,
            active: np.ndarray | None = None,
    ) -> Link_Metrics:
        """
        Compute every per-link metric of a decision.

        Parameters
        ----------
        ratios : np.ndarray
            Compression ratio per PEN, shape (N,).
        utilization : np.ndarray
            Utilization matrix P, shape (N, M).
        bw_fractions : np.ndarray
            Bandwidth-fraction matrix theta, shape (N, M).
        fading_mag_sq : np.ndarray
            Fading matrix |h|^2, shape (N, M).
        active : np.ndarray | None
            Boolean mask of PENs that transmit. ``None`` means all.

        Returns
        -------
        Link_Metrics
            The metrics.
        """
        N, M = self.n_pens, self.n_rans
        hlp.assert_array_length(ratios, N, name='`ratios`')
        hlp.assert_matrix_shape(utilization, (N, M), name='`utilization`')
        hlp.assert_matrix_shape(bw_fractions, (N, M), name='`bw_fractions`')
        hlp.assert_matrix_shape(fading_mag_sq, (N, M), name='`fading_mag_sq`')
        active = np.ones(N, dtype=bool) if active is None else active

        compressed = cmp.compressed_length(self.raw_bits, ratios)
        used = active[:, None] & (utilization > self.connection_threshold)
        bits = np.where(used, compressed[:, None] * utilization, 0.0)
        gain = rad.channel_gain(self.channel, fading_mag_sq)
        rate = self.rates(bw_fractions, fading_mag_sq)
        zero_rate = used & (rate <= 0)
        ok = used & ~zero_rate
        ok_bits = np.where(ok, bits, 0.0)

        energy = np.zeros((N, M))
        latency = np.zeros((N, M))
        cost = np.zeros((N, M))
        for j, ran in enumerate(self.rans):
            e_j = rad.link_energy(
                ran,
                self.channel,
                ok_bits[:, j],
                bw_fractions[:, j],
                gain[:, j],
                rate[:, j],
            )
            energy[:, j] = np.where(used[:, j], e_j, 0.0)
            l_j = rad.link_latency(ran, ok_bits[:, j], rate[:, j])
            latency[:, j] = np.where(ok[:, j], l_j, 0.0)
            cost[:, j] = rad.link_cost(ran, ok_bits[:, j])

        latency = np.where(zero_rate, self.latency_max_s, latency)
        transfer = np.divide(
            ok_bits, rate, out=np.zeros_like(ok_bits), where=ok
        )
        overtime = np.maximum(transfer - self.resource_share_s, 0.0)
        overtime = np.where(ok, overtime, 0.0)
        share_violated = ok & (transfer > self.resource_share_s)

        norm_energy, n1 = hlp.clamp_unit(energy / self.energy_max_j)
        norm_cost, n2 = hlp.clamp_unit(cost / self.cost_max)
        norm_latency, n3 = hlp.clamp_unit(latency / self.latency_max_s)
        if n1 + n2 + n3 > 0:
            self.n_obs_clamped += n1 + n2 + n3
            logger.debug('Clamped %d normalized link metrics.', n1 + n2 + n3)

        dist = np.where(
            active,
            cmp.distortion(self.distortion_model, ratios),
            0.0,
        )

        tags = []
        for i in range(N):
            pen_tags = []
            if np.any(zero_rate[i]):
                pen_tags.append(TAG_ZERO_BANDWIDTH)

            if np.any(share_violated[i]):
                pen_tags.append(TAG_RESOURCE_SHARE)

            tags.append(pen_tags)

        return Link_Metrics(
            used=used,
            bits=bits,
            rate_bps=rate,
            energy_j=energy,
            latency_s=latency,
            cost=cost,
            norm_energy=norm_energy,
            norm_cost=norm_cost,
            norm_latency=norm_latency,
            overtime_s=overtime,
            distortion=dist,
            link_violated=zero_rate | share_violated,
            violation_tags=tags,
        )
