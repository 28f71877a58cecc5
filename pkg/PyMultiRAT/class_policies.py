from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_baselines as bsl
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_radio as rad
from PyMultiRAT.class_environment import Multi_RAT_Env, World_State
from PyMultiRAT.class_episode_metrics import Episode_Metrics
from PyMultiRAT.class_scenario import Scenario
from PyMultiRAT.class_team import Team

logger = hlp.get_logger(__name__)

LEARNED_POLICY_TAG = 'tb-maddpg'
RECOMPUTE_MODES = ('seizure', 'step')


class Policy:
    """
    Base class of the policies that can be rolled out in the environment.

    Parameters
    ----------
    name : str
        Label of the policy in the output tables.

    Attributes
    ----------
    name : str
        Same as the input parameter.
    """

    def __init__(self, name: str) -> None:
        self.name = name

    def begin_episode(self) -> None:
        """Reset per-episode state. Does nothing by default."""

    def act(
            self,
            state: World_State,
            pen_obs: list[np.ndarray],
            ran_obs: list[np.ndarray],
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Decide the actions of all PENs and RANs for the next step.

        Parameters
        ----------
        state : World_State
            The current world state.
        pen_obs : list[np.ndarray]
            Current PEN observations.
        ran_obs : list[np.ndarray]
            Current RAN observations.

        Returns
        -------
        pen_actions : list[np.ndarray]
            One action per PEN.
        ran_actions : list[np.ndarray]
            One action per RAN.

        Raises
        ------
        NotImplementedError
            Always; subclasses must override it
        """
        raise NotImplementedError

    def run_episode(
            self,
            scenario: Scenario,
            seed: int,
            max_steps: int,
            *,
            gamma: float = 0.95,
            trace: bool = False,
    ) -> Episode_Metrics:
        """
        Roll the policy out for one episode, until every PEN is depleted or
        ``max_steps`` steps have been executed.

        Parameters
        ----------
        scenario : Scenario
            The scenario.
        seed : int
            Seed of the environment.
        max_steps : int
            Step limit.
        gamma : float
            Discount factor of the reported discounted return.
        trace : bool
            Whether to keep a per-step trace.

        Returns
        -------
        Episode_Metrics
            The metrics of the episode.
        """
        env = Multi_RAT_Env(scenario)
        state, pen_obs, ran_obs = env.reset(seed=seed)
        metrics = Episode_Metrics(
            self.name,
            seed,
            scenario.n_pens,
            scenario.n_rans,
            scenario.step_duration_s,
            gamma=gamma,
            trace=trace,
        )
        self.begin_episode()
        for _ in range(max_steps):
            pen_actions, ran_actions = self.act(state, pen_obs, ran_obs)
            result = env.step(pen_actions, ran_actions)
            metrics.record(result, pen_actions, ran_actions)
            pen_obs, ran_obs = result.pen_obs, result.ran_obs
            if result.done:
                break

        return metrics


class Learned_Policy(Policy):
    """
    Decentralized execution of trained actors: every agent acts on its own
    observation only, without exploration noise. Critics are never used.

    Parameters
    ----------
    pen_team : Team
        The PEN team.
    ran_team : Team
        The RAN team.
    name : str
        Label of the policy.

    Attributes
    ----------
    pen_team : Team
        Same as the input parameter.
    ran_team : Team
        Same as the input parameter.
    """

    def __init__(
            self,
            pen_team: Team,
            ran_team: Team,
            name: str = LEARNED_POLICY_TAG,
    ) -> None:
        super().__init__(name)
        self.pen_team = pen_team
        self.ran_team = ran_team

    def act(
            self,
            state: World_State,
            pen_obs: list[np.ndarray],
            ran_obs: list[np.ndarray],
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Noise-free actor outputs.

        Parameters
        ----------
        state : World_State
            Unused; the actors only see their observations.
        pen_obs : list[np.ndarray]
            PEN observations.
        ran_obs : list[np.ndarray]
            RAN observations.

        Returns
        -------
        pen_actions : list[np.ndarray]
            One action per PEN.
        ran_actions : list[np.ndarray]
            One action per RAN.
        """
        return self.pen_team.act(pen_obs), self.ran_team.act(ran_obs)


class Baseline_Policy(Policy):
    """
    A centralized baseline planner (heuristic, AANSC-style or ONSRA-style)
    executed in the environment.

    With ``recompute_on='seizure'`` decisions are planned on the mean fading
    and recomputed only when the seizure flags or the set of alive PENs
    change (plans are cached per such pattern); with ``recompute_on='step'``
    they are recomputed every step on the current fading. Depleted PENs get
    no bandwidth in either mode.

    Parameters
    ----------
    tag : {'heuristic', 'aansc', 'onsra'}
        Which planner.
    scenario : Scenario
        The scenario.
    grid : Grid_Spec | None
        Search grid. ``None`` means the default grid.
    recompute_on : {'seizure', 'step'}
        Recomputation cadence.
    max_rounds : int
        ONSRA round limit.
    tol : float
        ONSRA convergence tolerance.
    pg_steps : int
        ONSRA projected-gradient iterations per RAN per round.
    penalty : float
        Penalty per second of overtime.

    Attributes
    ----------
    tag : str
        Same as the input parameter.
    n_plans : int
        Number of decisions computed (cache misses).

    Raises
    ------
    ValueError
        When ``tag`` or ``recompute_on`` is invalid
    """

    def __init__(
            self,
            tag: str,
            scenario: Scenario,
            grid: bsl.Grid_Spec | None = None,
            *,
            recompute_on: str = 'seizure',
            max_rounds: int = 20,
            tol: float = 1e-9,
            pg_steps: int = 20,
            penalty: float = bsl.DEFAULT_VIOLATION_PENALTY,
    ) -> None:
        if tag not in bsl.POLICY_TAGS:
            raise ValueError(
                '`tag` must be one of %s, not "%s".' % (bsl.POLICY_TAGS, tag)
            )

        if recompute_on not in RECOMPUTE_MODES:
            raise ValueError(
                '`recompute_on` must be one of %s.' % (RECOMPUTE_MODES,)
            )

        super().__init__(tag)
        self.tag = tag
        self.scenario = scenario
        self.grid = bsl.Grid_Spec() if grid is None else grid
        self.recompute_on = recompute_on
        self.max_rounds = max_rounds
        self.tol = tol
        self.pg_steps = pg_steps
        self.penalty = penalty
        self.n_plans = 0
        self._cache = {}
        self._current = None
        self._current_flags = None
        self._mean_fading = np.full(
            (scenario.n_pens, scenario.n_rans),
            rad.mean_fading_mag_sq(scenario.rayleigh_scale),
        )

    def plan(
            self,
            fading_mag_sq: np.ndarray,
            seizure: np.ndarray,
            alive: np.ndarray | None = None,
    ) -> bsl.Baseline_Decision:
        """
        Compute a decision with the configured planner.

        Parameters
        ----------
        fading_mag_sq : np.ndarray
            Fading matrix used for planning.
        seizure : np.ndarray
            Seizure flag per PEN.
        alive : np.ndarray | None
            Alive flag per PEN. ``None`` means all PENs are alive.

        Returns
        -------
        Baseline_Decision
            The decision.
        """
        self.n_plans += 1
        if self.tag == 'heuristic':
            return bsl.heuristic_policy(
                self.scenario, fading_mag_sq, self.grid, alive
            )

        if self.tag == 'aansc':
            return bsl.aansc_policy(
                self.scenario,
                fading_mag_sq,
                seizure,
                self.grid,
                self.penalty,
                alive,
            )

        decision, trace = bsl.onsra_policy(
            self.scenario,
            fading_mag_sq,
            seizure,
            self.grid,
            max_rounds=self.max_rounds,
            tol=self.tol,
            pg_steps=self.pg_steps,
            penalty=self.penalty,
            alive=alive,
        )
        logger.debug('ONSRA converged after %d round(s).', len(trace) - 1)
        return decision

    def begin_episode(self) -> None:
        """Forget the decision in force (the cache is kept)."""
        self._current = None
        self._current_flags = None

    def act(
            self,
            state: World_State,
            pen_obs: list[np.ndarray],
            ran_obs: list[np.ndarray],
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Planned actions for the next step.

        Parameters
        ----------
        state : World_State
            The current world state (seizure flags, alive flags and fading).
        pen_obs : list[np.ndarray]
            Unused.
        ran_obs : list[np.ndarray]
            Unused.

        Returns
        -------
        pen_actions : list[np.ndarray]
            One action per PEN.
        ran_actions : list[np.ndarray]
            One action per RAN.
        """
        seizure = tuple(bool(_) for _ in state.seizure_active)
        alive = tuple(bool(_) for _ in state.pens_alive)
        flags = (seizure, alive)
        if self.recompute_on == 'step':
            self._current = self.plan(
                state.fading_mag_sq, state.seizure_active, state.pens_alive
            )
        elif self._current is None or flags != self._current_flags:
            if flags not in self._cache:
                self._cache[flags] = self.plan(
                    self._mean_fading, np.array(seizure), np.array(alive)
                )

            self._current = self._cache[flags]
            self._current_flags = flags

        return self._current.to_actions()
