from __future__ import annotations

import itertools
import multiprocessing as mp
from typing import Any

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_episode_metrics import Episode_Metrics
from PyMultiRAT.class_policies import Policy
from PyMultiRAT.class_scenario import Scenario

logger = hlp.get_logger(__name__)


class Batch_Evaluation:
    """
    Evaluate several policies on the same seeds, one episode per
    (policy, seed) pair, optionally on several CPU cores.

    Every episode builds its own environment; the policies are only read,
    so the pairs are independent.

    Parameters
    ----------
    policies : list[Policy]
        The policies. Their names must be unique.
    scenario : Scenario
        The scenario shared by all episodes.

    Attributes
    ----------
    policies : list[Policy]
        Same as the input parameter.
    scenario : Scenario
        Same as the input parameter.
    n_policies : int
        Number of policies.

    Raises
    ------
    TypeError
        When ``policies`` is not a list of ``Policy`` objects
    ValueError
        When ``policies`` is empty or has duplicated names
    """

    def __init__(self, policies: list[Policy], scenario: Scenario) -> None:
        if not isinstance(policies, list):
            raise TypeError('`policies` should be a list.')

        if len(policies) == 0:
            raise ValueError('`policies` should have at least one element.')

        if not all(isinstance(_, Policy) for _ in policies):
            raise TypeError('Elements of `policies` should be `Policy` objects.')

        names = [_.name for _ in policies]
        if len(set(names)) != len(names):
            raise ValueError('Policy names must be unique: %s' % names)

        self.policies = policies
        self.scenario = scenario
        self.n_policies = len(policies)

    def run(
            self,
            seeds: list[int],
            *,
            max_steps: int,
            gamma: float = 0.95,
            trace: bool = False,
            parallel: bool = False,
            n_cores: int | None = 1,
    ) -> list[Episode_Metrics]:
        """
        Run every (policy, seed) episode.

        Parameters
        ----------
        seeds : list[int]
            Environment seeds, shared by all policies (paired evaluation).
        max_steps : int
            Step limit of every episode.
        gamma : float
            Discount factor of the reported discounted return.
        trace : bool
            Whether to keep per-step traces.
        parallel : bool
            Whether to use multiple CPU cores.
        n_cores : int | None
            Number of CPU cores to use. If ``None``, all CPU cores are used.

        Returns
        -------
        list[Episode_Metrics]
            Ordered by policy (input order), then by seed.
        """
        if len(seeds) == 0:
            raise ValueError('`seeds` should have at least one element.')

        options = {'max_steps': max_steps, 'gamma': gamma, 'trace': trace}
        jobs = list(
            itertools.product(range(self.n_policies), seeds, [options])
        )
        logger.info(
            'Evaluating %d policies on %d seeds%s.',
            self.n_policies,
            len(seeds),
            ' in parallel' if parallel else '',
        )
        if not parallel:
            return [self._run_single(job) for job in jobs]

        with mp.Pool(n_cores) as pool:
            results = pool.map(self._run_single, jobs)

        return results

    def _run_single(self, job: tuple[int, int, dict[str, Any]]) -> Episode_Metrics:
        """
        Run a single episode.

        Parameters
        ----------
        job : tuple[int, int, dict[str, Any]]
            (policy index, seed, options of ``Policy.run_episode()``).

        Returns
        -------
        Episode_Metrics
            Metrics of the episode.
        """
        i, seed, options = job  # unpack
        policy = self.policies[i]
        metrics = policy.run_episode(self.scenario, seed, **options)
        logger.debug(
            '%s seed %d finished after %d steps.',
            policy.name,
            seed,
            metrics.n_steps,
        )
        return metrics
