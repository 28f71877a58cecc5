from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_radio as rad
from PyMultiRAT import helper_rewards as rwd
from PyMultiRAT.class_scenario import Link_Metrics, Scenario

logger = hlp.get_logger(__name__)

SIMPLEX_TOL = 1e-6


def pen_obs_layout(n_rans: int) -> dict[str, slice]:
    """
    Field map of a PEN observation vector (width 3M + 3).

    Parameters
    ----------
    n_rans : int
        Number of RANs (M).

    Returns
    -------
    dict[str, slice]
        Field name to slice.
    """
    M = n_rans
    return {
        'norm_energy': slice(0, M),
        'norm_cost': slice(M, 2 * M),
        'norm_latency': slice(2 * M, 3 * M),
        'norm_distortion': slice(3 * M, 3 * M + 1),
        'seizure': slice(3 * M + 1, 3 * M + 2),
        'norm_battery': slice(3 * M + 2, 3 * M + 3),
    }


def pen_action_layout(n_rans: int) -> dict[str, slice]:
    """
    Field map of a PEN action vector (width M + 1).

    Parameters
    ----------
    n_rans : int
        Number of RANs (M).

    Returns
    -------
    dict[str, slice]
        Field name to slice.
    """
    return {'utilization': slice(0, n_rans), 'ratio': slice(n_rans, n_rans + 1)}


class World_State:
    """
    Mutable state of the multi-RAT world.

    Parameters
    ----------
    battery_j : np.ndarray
        Battery level per PEN. Unit: J.
    fading_mag_sq : np.ndarray
        Fading matrix (N, M) for the upcoming step.
    last_bw_fractions : np.ndarray
        theta of the previous step, (N, M).
    last_utilization : np.ndarray
        P of the previous step, (N, M).
    last_ratios : np.ndarray
        kappa of the previous step, (N,).

    Attributes
    ----------
    step : int
        Number of executed steps.
    battery_j : np.ndarray
        Same as the input parameter.
    seizure_active : np.ndarray
        Boolean seizure flag per PEN for the upcoming step.
    seizure_remaining : np.ndarray
        Remaining seizure duration per PEN. Unit: steps.
    fading_mag_sq : np.ndarray
        Same as the input parameter.
    last_bw_fractions, last_utilization, last_ratios : np.ndarray
        Same as the input parameters.
    pens_alive : np.ndarray
        Boolean per PEN: battery not depleted.
    """

    def __init__(
            self,
            battery_j: np.ndarray,
            fading_mag_sq: np.ndarray,
            last_bw_fractions: np.ndarray,
            last_utilization: np.ndarray,
            last_ratios: np.ndarray,
    ) -> None:
        N = len(battery_j)
        self.step = 0
        self.battery_j = np.asarray(battery_j, dtype=float).copy()
        self.seizure_active = np.zeros(N, dtype=bool)
        self.seizure_remaining = np.zeros(N, dtype=int)
        self.fading_mag_sq = fading_mag_sq
        self.last_bw_fractions = last_bw_fractions
        self.last_utilization = last_utilization
        self.last_ratios = last_ratios
        self.pens_alive = self.battery_j > 0

    def copy(self) -> World_State:
        """
        Deep copy.

        Returns
        -------
        World_State
            An independent copy.
        """
        other = World_State(
            self.battery_j,
            self.fading_mag_sq.copy(),
            self.last_bw_fractions.copy(),
            self.last_utilization.copy(),
            self.last_ratios.copy(),
        )
        other.step = self.step
        other.seizure_active = self.seizure_active.copy()
        other.seizure_remaining = self.seizure_remaining.copy()
        other.pens_alive = self.pens_alive.copy()
        return other


class Step_Result:
    """
    Outcome of one environment step.

    Attributes
    ----------
    pen_obs : list[np.ndarray]
        Next observation of every PEN (width 3M + 3).
    ran_obs : list[np.ndarray]
        Next observation of every RAN (width N).
    pen_rewards : np.ndarray
        Reward per PEN.
    ran_rewards : np.ndarray
        Reward per RAN.
    done : bool
        All PENs are depleted.
    violations : list[list[str]]
        Violated-constraint tags per PEN.
    links : Link_Metrics
        Per-link metrics of the executed step.
    seizure : np.ndarray
        Seizure flags in force during the executed step.
    alive : np.ndarray
        PENs that were alive (and acted) during the executed step.
    norm_battery : np.ndarray
        Normalized battery per PEN after the step.
    pen_connected : np.ndarray
        Matrix (N, M) of connection indicators n_ij of the executed step.
    pen_dones : np.ndarray
        Per-PEN 0/1 depletion flag after the step.
    """

    def __init__(self, **kwargs) -> None:
        for key, value in kwargs.items():
            setattr(self, key, value)


def advance_seizure(
        state: World_State,
        seizure_probs: np.ndarray,
        mean_duration: float,
        rng: np.random.Generator,
) -> World_State:
    """
    Advance the seizure process by one step. A PEN that is not in a seizure
    at the start of the call starts one with its onset probability, with a
    geometrically distributed duration; ongoing seizures count down.

    Parameters
    ----------
    state : World_State
        The state (modified in place).
    seizure_probs : np.ndarray
        Onset probability per PEN.
    mean_duration : float
        Mean seizure duration. Unit: steps.
    rng : np.random.Generator
        Random number generator.

    Returns
    -------
    World_State
        The same (updated) state object.
    """
    eligible = ~state.seizure_active
    draws = rng.random(len(seizure_probs))
    durations = rng.geometric(1.0 / mean_duration, size=len(seizure_probs))

    ongoing = state.seizure_active
    state.seizure_remaining[ongoing] -= 1
    state.seizure_active = ongoing & (state.seizure_remaining > 0)

    onset = eligible & (draws < seizure_probs)
    state.seizure_active = state.seizure_active | onset
    state.seizure_remaining[onset] = durations[onset]
    if np.any(onset):
        logger.debug('Seizure onset at PEN(s) %s.', np.flatnonzero(onset))

    return state


class Multi_RAT_Env:
    """
    The episodic partially observable Markov game between PENs and RANs.

    Parameters
    ----------
    scenario : Scenario
        The static scenario.
    seed : int | None
        Seed of the environment's random number generator.

    Attributes
    ----------
    scenario : Scenario
        Same as the input parameter.
    state : World_State | None
        The current state (``None`` before the first ``reset()``).
    rng : np.random.Generator
        The environment's own random number generator.

    Raises
    ------
    TypeError
        When ``scenario`` is not a ``Scenario``
    """

    def __init__(self, scenario: Scenario, seed: int | None = None) -> None:
        if not isinstance(scenario, Scenario):
            raise TypeError('`scenario` must be a `Scenario` object.')

        self.scenario = scenario
        self.rng = np.random.default_rng(seed)
        self.state: World_State | None = None
        self._obs_layout = pen_obs_layout(scenario.n_rans)

    @property
    def n_pens(self) -> int:
        """N"""
        return self.scenario.n_pens

    @property
    def n_rans(self) -> int:
        """M"""
        return self.scenario.n_rans

    @property
    def pen_obs_width(self) -> int:
        """3M + 3"""
        return 3 * self.n_rans + 3

    @property
    def ran_obs_width(self) -> int:
        """N"""
        return self.n_pens

    def _draw_fading(self) -> np.ndarray:
        return rad.sample_fading_mag_sq(
            self.rng,
            (self.n_pens, self.n_rans),
            scale=self.scenario.rayleigh_scale,
        )

    def reset(
            self,
            seed: int | None = None,
    ) -> tuple[World_State, list[np.ndarray], list[np.ndarray]]:
        """
        Start a new episode: full batteries, no seizures, fresh fading, and
        uniform placeholder decisions for the initial observations.

        Parameters
        ----------
        seed : int | None
            If not ``None``, the environment's random number generator is
            re-seeded with it.

        Returns
        -------
        state : World_State
            The initial state.
        pen_obs : list[np.ndarray]
            Initial PEN observations.
        ran_obs : list[np.ndarray]
            Initial RAN observations.
        """
        if seed is not None:
            self.rng = np.random.default_rng(seed)

        N, M = self.n_pens, self.n_rans
        sc = self.scenario
        self.state = World_State(
            battery_j=sc.battery_capacity_j,
            fading_mag_sq=self._draw_fading(),
            last_bw_fractions=np.full((N, M), 1.0 / N),
            last_utilization=np.full((N, M), 1.0 / M),
            last_ratios=np.full(N, sc.kappa_init),
        )
        links = sc.evaluate_links(
            self.state.last_ratios,
            self.state.last_utilization,
            self.state.last_bw_fractions,
            self.state.fading_mag_sq,
        )
        pen_obs = self._pen_observations(links, np.ones(N))
        ran_obs = self._ran_observations(links.used)
        return self.state, pen_obs, ran_obs

    def _pen_observations(
            self,
            links: Link_Metrics,
            norm_battery: np.ndarray,
    ) -> list[np.ndarray]:
        state = self.state
        lay = self._obs_layout
        observations = []
        for i in range(self.n_pens):
            obs = np.zeros(self.pen_obs_width)
            if state.pens_alive[i]:
                obs[lay['norm_energy']] = links.norm_energy[i]
                obs[lay['norm_cost']] = links.norm_cost[i]
                obs[lay['norm_latency']] = links.norm_latency[i]
                obs[lay['norm_distortion']] = links.distortion[i]
                obs[lay['seizure']] = float(state.seizure_active[i])
                obs[lay['norm_battery']] = norm_battery[i]

            observations.append(obs)

        return observations

    def _ran_observations(self, used: np.ndarray) -> list[np.ndarray]:
        return [used[:, j].astype(float) for j in range(self.n_rans)]

    def _check_actions(
            self,
            pen_actions: list[np.ndarray],
            ran_actions: list[np.ndarray],
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        N, M = self.n_pens, self.n_rans
        if len(pen_actions) != N:
            raise ValueError('`pen_actions` must have %d elements.' % N)

        if len(ran_actions) != M:
            raise ValueError('`ran_actions` must have %d elements.' % M)

        utilization = np.zeros((N, M))
        ratios = np.zeros(N)
        for i, action in enumerate(pen_actions):
            action = np.asarray(action, dtype=float)
            hlp.assert_array_length(action, M + 1, name='`pen_actions[%d]`' % i)
            if not hlp.is_on_simplex(action[:M], atol=SIMPLEX_TOL):
                raise ValueError(
                    'The utilization of `pen_actions[%d]` must lie on the '
                    'simplex.' % i,
                )

            if not 0 <= action[M] <= self.scenario.kappa_max:
                raise ValueError(
                    'The ratio of `pen_actions[%d]` must be within [0, %g].'
                    % (i, self.scenario.kappa_max),
                )

            utilization[i] = action[:M]
            ratios[i] = action[M]

        bw_fractions = np.zeros((N, M))
        for j, action in enumerate(ran_actions):
            action = np.asarray(action, dtype=float)
            hlp.assert_array_length(action, N, name='`ran_actions[%d]`' % j)
            if not hlp.is_on_simplex(action, atol=SIMPLEX_TOL):
                raise ValueError(
                    '`ran_actions[%d]` must lie on the simplex.' % j
                )

            bw_fractions[:, j] = np.clip(action, 0.0, 1.0)

        return utilization, ratios, bw_fractions

    def step(
            self,
            pen_actions: list[np.ndarray],
            ran_actions: list[np.ndarray],
    ) -> Step_Result:
        """
        Execute one step.

        Parameters
        ----------
        pen_actions : list[np.ndarray]
            One vector per PEN: utilization over the M RANs followed by the
            compression ratio.
        ran_actions : list[np.ndarray]
            One vector per RAN: bandwidth fractions over the N PENs.

        Returns
        -------
        Step_Result
            Next observations, rewards, done flag and diagnostics.

        Raises
        ------
        RuntimeError
            When called before ``reset()``
        ValueError
            When the actions are malformed
        """
        if self.state is None:
            raise RuntimeError('Please call `reset()` before `step()`.')

        sc = self.scenario
        state = self.state
        N, M = self.n_pens, self.n_rans
        utilization, ratios, bw_fractions = self._check_actions(
            pen_actions, ran_actions
        )

        alive = state.pens_alive.copy()
        seizure = state.seizure_active & alive
        links = sc.evaluate_links(
            ratios, utilization, bw_fractions, state.fading_mag_sq, alive
        )

        norm_battery = np.zeros(N)
        for i, pen in enumerate(sc.pens):
            if not alive[i]:
                continue

            state.battery_j[i], norm_battery[i] = rwd.update_battery(
                state.battery_j[i],
                float(links.pen_energy_j[i]),
                pen.battery_capacity_j,
            )

        pen_rewards = np.zeros(N)
        violated = links.pen_violated
        for i, pen in enumerate(sc.pens):
            if not alive[i]:
                continue

            pen_rewards[i] = rwd.pen_reward(
                pen,
                bool(seizure[i]),
                utilization=utilization[i],
                norm_energy=links.norm_energy[i],
                norm_cost=links.norm_cost[i],
                norm_latency=links.norm_latency[i],
                norm_distortion=float(links.distortion[i]),
                norm_battery=float(norm_battery[i]),
                violated=bool(violated[i]),
            )

        connected = links.used
        ran_rewards = np.zeros(M)
        for j in range(M):
            feasible = not np.any(connected[:, j] & links.link_violated[:, j])
            ran_rewards[j] = rwd.ran_reward(
                connected[:, j], pen_rewards, feasible
            )

        state.pens_alive = state.battery_j > 0
        state.last_utilization = utilization
        state.last_ratios = ratios
        state.last_bw_fractions = bw_fractions
        advance_seizure(
            state, sc.seizure_probs, sc.seizure_mean_duration, self.rng
        )
        state.seizure_active &= state.pens_alive
        state.fading_mag_sq = self._draw_fading()
        state.step += 1

        pen_obs = self._pen_observations(links, norm_battery)
        ran_obs = self._ran_observations(connected)
        done = not np.any(state.pens_alive)
        return Step_Result(
            pen_obs=pen_obs,
            ran_obs=ran_obs,
            pen_rewards=pen_rewards,
            ran_rewards=ran_rewards,
            done=done,
            violations=links.violation_tags,
            links=links,
            seizure=seizure,
            alive=alive,
            norm_battery=norm_battery,
            pen_connected=connected.astype(float),
            pen_dones=(~state.pens_alive).astype(float),
        )
