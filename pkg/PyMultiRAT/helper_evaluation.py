from __future__ import annotations

from PyMultiRAT import helper_baselines as bsl
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_episode_metrics import Episode_Metrics
from PyMultiRAT.class_policies import Baseline_Policy, Learned_Policy, Policy
from PyMultiRAT.class_scenario import Scenario
from PyMultiRAT.class_team import Team

logger = hlp.get_logger(__name__)

DEFAULT_MAX_STEPS = 3000


def run_policy(
        policy: Policy,
        scenario: Scenario,
        seeds: list[int],
        *,
        max_steps: int = DEFAULT_MAX_STEPS,
        gamma: float = 0.95,
        trace: bool = False,
        verbose: bool = False,
) -> list[Episode_Metrics]:
    """
    Roll a policy out on a list of seeds, one episode per seed.

    Parameters
    ----------
    policy : Policy
        The policy.
    scenario : Scenario
        The scenario.
    seeds : list[int]
        Environment seeds.
    max_steps : int
        Step limit of every episode.
    gamma : float
        Discount factor of the reported discounted return.
    trace : bool
        Whether to keep per-step traces.
    verbose : bool
        Whether to log one line per episode.

    Returns
    -------
    list[Episode_Metrics]
        One entry per seed.
    """
    results = []
    for seed in seeds:
        metrics = policy.run_episode(
            scenario, seed, max_steps, gamma=gamma, trace=trace
        )
        if verbose:
            summary = metrics.to_dict()
            logger.info(
                '%s seed %d: %d steps, PEN reward %.4f, lifetime %.3f h',
                policy.name,
                seed,
                metrics.n_steps,
                summary['pen_reward'],
                summary['lifetime_hours'],
            )

        results.append(metrics)

    return results


def evaluate(
        pen_team: Team,
        ran_team: Team,
        scenario: Scenario,
        seeds: list[int],
        *,
        max_steps: int = DEFAULT_MAX_STEPS,
        gamma: float = 0.95,
        trace: bool = False,
        verbose: bool = False,
) -> list[Episode_Metrics]:
    """
    Noise-free decentralized evaluation of trained actors (critics unused).

    Parameters
    ----------
    pen_team : Team
        The PEN team.
    ran_team : Team
        The RAN team.
    scenario : Scenario
        The scenario.
    seeds : list[int]
        Environment seeds, one episode each.
    max_steps : int
        Step limit of every episode.
    gamma : float
        Discount factor of the reported discounted return.
    trace : bool
        Whether to keep per-step traces.
    verbose : bool
        Whether to log one line per episode.

    Returns
    -------
    list[Episode_Metrics]
        One entry per seed.
    """
    return run_policy(
        Learned_Policy(pen_team, ran_team),
        scenario,
        seeds,
        max_steps=max_steps,
        gamma=gamma,
        trace=trace,
        verbose=verbose,
    )


def run_baseline(
        tag: str,
        scenario: Scenario,
        seeds: list[int],
        *,
        grid: bsl.Grid_Spec | None = None,
        max_steps: int = DEFAULT_MAX_STEPS,
        gamma: float = 0.95,
        trace: bool = False,
        verbose: bool = False,
        **policy_kwargs,
) -> list[Episode_Metrics]:
    """
    Execute a baseline in the environment and collect the same metrics as
    ``evaluate()``.

    Parameters
    ----------
    tag : {'heuristic', 'aansc', 'onsra'}
        Which baseline.
    scenario : Scenario
        The scenario.
    seeds : list[int]
        Environment seeds, one episode each.
    grid : Grid_Spec | None
        Search grid of the optimizing baselines.
    max_steps : int
        Step limit of every episode.
    gamma : float
        Discount factor of the reported discounted return.
    trace : bool
        Whether to keep per-step traces.
    verbose : bool
        Whether to log one line per episode.
    **policy_kwargs
        Other keyword arguments of ``Baseline_Policy`` (``recompute_on``,
        ``max_rounds``, ``tol``, ``pg_steps``, ``penalty``).

    Returns
    -------
    list[Episode_Metrics]
        One entry per seed.
    """
    policy = Baseline_Policy(tag, scenario, grid, **policy_kwargs)
    return run_policy(
        policy,
        scenario,
        seeds,
        max_steps=max_steps,
        gamma=gamma,
        trace=trace,
        verbose=verbose,
    )
