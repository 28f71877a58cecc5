from __future__ import annotations

import numpy as np
import pandas as pd

from PyMultiRAT.class_environment import Step_Result

CSV_FLOAT_FORMAT = '%.17g'
LONG_COLUMNS = ['policy', 'seed', 'metric', 'value']
TRACE_COLUMNS = ['policy', 'seed', 'step', 'entity', 'index', 'field', 'value']
SUMMARY_AXES = [
    'pen_reward',
    'lifetime_hours',
    'energy_j',
    'latency_s',
    'cost',
    'distortion',
]
TIMESERIES_COLUMNS = ['policy', 'step', 'mean_pen_reward', 'mean_norm_battery']


def _masked_mean(values: np.ndarray, mask: np.ndarray) -> float:
    if not np.any(mask):
        return float('nan')

    return float(np.mean(values[mask]))


class Episode_Metrics:
    """
    Per-episode record of a policy's behavior in the environment, with the
    scalar metrics of the comparison.

    All means over PEN-steps only count steps in which the PEN was alive.

    Parameters
    ----------
    policy : str
        Label of the policy that produced the episode.
    seed : int
        Seed of the episode.
    n_pens : int
        N.
    n_rans : int
        M.
    step_duration_s : float
        Duration of a step, for lifetime hours. Unit: s.
    gamma : float
        Discount factor of the discounted return.
    trace : bool
        Whether to keep a per-step trace of actions and states.

    Attributes
    ----------
    policy : str
        Same as the input parameter.
    seed : int
        Same as the input parameter.
    n_steps : int
        Number of recorded steps.
    trace_rows : list[tuple]
        (step, entity, index, field, value) rows, if ``trace`` is ``True``.
    """

    def __init__(
            self,
            policy: str,
            seed: int,
            n_pens: int,
            n_rans: int,
            step_duration_s: float,
            gamma: float = 0.95,
            trace: bool = False,
    ) -> None:
        self.policy = policy
        self.seed = int(seed)
        self.n_pens = n_pens
        self.n_rans = n_rans
        self.step_duration_s = step_duration_s
        self.gamma = gamma
        self.trace = trace
        self.trace_rows = []
        self._rows = {
            key: []
            for key in [
                'alive',
                'seizure',
                'pen_reward',
                'ran_reward',
                'energy_j',
                'latency_s',
                'norm_latency',
                'cost',
                'distortion',
                'ratio',
                'utilization',
                'bw_fractions',
                'norm_battery',
                'violated',
            ]
        }

    @property
    def n_steps(self) -> int:
        """Number of recorded steps."""
        return len(self._rows['alive'])

    def _array(self, key: str) -> np.ndarray:
        rows = self._rows[key]
        if len(rows) == 0:
            return np.zeros((0, self.n_pens))

        return np.array(rows)

    def record(
            self,
            result: Step_Result,
            pen_actions: list[np.ndarray],
            ran_actions: list[np.ndarray],
    ) -> None:
        """
        Add one executed step.

        Parameters
        ----------
        result : Step_Result
            Output of the environment step.
        pen_actions : list[np.ndarray]
            The PEN actions that were executed.
        ran_actions : list[np.ndarray]
            The RAN actions that were executed.
        """
        M = self.n_rans
        links = result.links
        utilization = np.array([a[:M] for a in pen_actions])
        ratios = np.array([a[M] for a in pen_actions])
        bw = np.array(ran_actions).T
        alive = result.alive

        rows = self._rows
        rows['alive'].append(alive.copy())
        rows['seizure'].append(result.seizure.copy())
        rows['pen_reward'].append(result.pen_rewards.copy())
        rows['ran_reward'].append(result.ran_rewards.copy())
        rows['energy_j'].append(links.pen_energy_j)
        rows['latency_s'].append(links.pen_latency_s)
        rows['norm_latency'].append(links.norm_latency.sum(axis=1))
        rows['cost'].append(links.pen_cost)
        rows['distortion'].append(links.distortion.copy())
        rows['ratio'].append(ratios)
        rows['utilization'].append(utilization)
        rows['bw_fractions'].append(bw)
        rows['norm_battery'].append(result.norm_battery.copy())
        rows['violated'].append(links.pen_violated)

        if self.trace:
            t = self.n_steps - 1
            for i in range(self.n_pens):
                if not alive[i]:
                    continue

                for j in range(M):
                    self.trace_rows.append(
                        (t, 'pen', i, 'P%d' % j, float(utilization[i, j]))
                    )

                self.trace_rows.extend(
                    [
                        (t, 'pen', i, 'kappa', float(ratios[i])),
                        (t, 'pen', i, 'seizure', float(result.seizure[i])),
                        (t, 'pen', i, 'battery', float(result.norm_battery[i])),
                        (t, 'pen', i, 'reward', float(result.pen_rewards[i])),
                    ],
                )

            for j in range(M):
                for i in range(self.n_pens):
                    self.trace_rows.append(
                        (t, 'ran', j, 'theta%d' % i, float(bw[i, j]))
                    )

    @property
    def pen_cumulative_rewards(self) -> np.ndarray:
        """Cumulative reward per PEN."""
        return self._array('pen_reward').sum(axis=0)

    @property
    def ran_cumulative_rewards(self) -> np.ndarray:
        """Cumulative reward per RAN."""
        if self.n_steps == 0:
            return np.zeros(self.n_rans)

        return np.array(self._rows['ran_reward']).sum(axis=0)

    @property
    def pen_discounted_returns(self) -> np.ndarray:
        """sum_t gamma^t r_t per PEN."""
        rewards = self._array('pen_reward')
        discounts = self.gamma ** np.arange(len(rewards))
        return discounts @ rewards if len(rewards) else np.zeros(self.n_pens)

    @property
    def lifetime_steps(self) -> np.ndarray:
        """Number of steps each PEN was alive."""
        return self._array('alive').sum(axis=0).astype(float)

    @property
    def lifetime_hours(self) -> np.ndarray:
        """Lifetime per PEN in hours."""
        return self.lifetime_steps * self.step_duration_s / 3600.0

    @property
    def reward_curve(self) -> np.ndarray:
        """Mean reward over the alive PENs at every step (NaN if none)."""
        rewards = self._array('pen_reward')
        alive = self._array('alive')
        n_alive = alive.sum(axis=1)
        total = np.where(alive, rewards, 0.0).sum(axis=1)
        return np.divide(
            total,
            n_alive,
            out=np.full(len(total), np.nan),
            where=n_alive > 0,
        )

    @property
    def battery_curve(self) -> np.ndarray:
        """Mean normalized battery over all PENs at every step."""
        return self._array('norm_battery').mean(axis=1)

    def mean_utilization(self) -> np.ndarray:
        """
        Mean utilization matrix over each PEN's alive steps.

        Returns
        -------
        np.ndarray
            (N, M) matrix (NaN rows for PENs that never acted).
        """
        util = np.array(self._rows['utilization'])
        alive = self._array('alive')
        result = np.full((self.n_pens, self.n_rans), np.nan)
        for i in range(self.n_pens):
            if np.any(alive[:, i]):
                result[i] = util[alive[:, i], i].mean(axis=0)

        return result

    def mean_bw_fractions(self) -> np.ndarray:
        """
        Mean bandwidth-fraction matrix over all recorded steps.

        Returns
        -------
        np.ndarray
            (N, M) matrix; column j is RAN j's mean allocation.
        """
        if self.n_steps == 0:
            return np.full((self.n_pens, self.n_rans), np.nan)

        return np.array(self._rows['bw_fractions']).mean(axis=0)

    def to_dict(self) -> dict[str, float]:
        """
        The scalar metrics of the episode.

        Returns
        -------
        dict[str, float]
            Metric name to value. Seizure-window means are NaN when no alive
            PEN-step had a seizure. Per-PEN keys carry the PEN index
            (``utilization_<i>_<j>`` is PEN i's mean share on RAN j) and
            ``bw_fraction_<j>_<i>`` is RAN j's mean allocation to PEN i.
        """
        alive = self._array('alive').astype(bool)
        seizure = self._array('seizure').astype(bool) & alive
        normal = alive & ~seizure
        values = {key: self._array(key) for key in self._rows}

        result = {
            'n_steps': float(self.n_steps),
            'pen_reward': float(np.mean(self.pen_cumulative_rewards)),
            'ran_reward': float(np.mean(self.ran_cumulative_rewards)),
            'discounted_pen_return': float(
                np.mean(self.pen_discounted_returns)
            ),
            'lifetime_steps': float(np.mean(self.lifetime_steps)),
            'lifetime_hours': float(np.mean(self.lifetime_hours)),
            'energy_j': _masked_mean(values['energy_j'], alive),
            'latency_s': _masked_mean(values['latency_s'], alive),
            'cost': _masked_mean(values['cost'], alive),
            'distortion': _masked_mean(values['distortion'], alive),
            'seizure_steps': float(np.sum(seizure)),
            'seizure_latency_s': _masked_mean(values['latency_s'], seizure),
            'seizure_distortion': _masked_mean(values['distortion'], seizure),
            'ratio_seizure': _masked_mean(values['ratio'], seizure),
            'ratio_nonseizure': _masked_mean(values['ratio'], normal),
            'norm_latency_seizure': _masked_mean(
                values['norm_latency'], seizure
            ),
            'norm_latency_nonseizure': _masked_mean(
                values['norm_latency'], normal
            ),
            'violations': float(np.sum(values['violated'] & alive)),
        }
        for i, value in enumerate(self.pen_cumulative_rewards):
            result['pen_reward_%d' % i] = float(value)

        for j, value in enumerate(self.ran_cumulative_rewards):
            result['ran_reward_%d' % j] = float(value)

        for i, value in enumerate(self.lifetime_hours):
            result['lifetime_hours_%d' % i] = float(value)

        utilization = self.mean_utilization()
        for i in range(self.n_pens):
            for j in range(self.n_rans):
                result['utilization_%d_%d' % (i, j)] = float(utilization[i, j])

            result['ratio_seizure_%d' % i] = _masked_mean(
                values['ratio'][:, i], seizure[:, i]
            )
            result['ratio_nonseizure_%d' % i] = _masked_mean(
                values['ratio'][:, i], normal[:, i]
            )

        bw_fractions = self.mean_bw_fractions()
        for j in range(self.n_rans):
            for i in range(self.n_pens):
                result['bw_fraction_%d_%d' % (j, i)] = float(bw_fractions[i, j])

        return result


def metrics_table(metrics: list[Episode_Metrics]) -> pd.DataFrame:
    """
    Long-format table with one row per (policy, seed, metric).

    Parameters
    ----------
    metrics : list[Episode_Metrics]
        Episodes of one or more policies.

    Returns
    -------
    pd.DataFrame
        Columns: policy, seed, metric, value.
    """
    rows = []
    for item in metrics:
        for name, value in item.to_dict().items():
            rows.append((item.policy, item.seed, name, value))

    return pd.DataFrame(rows, columns=LONG_COLUMNS)


def summary_table(table: pd.DataFrame) -> pd.DataFrame:
    """
    Mean of the six comparison axes over seeds, one row per policy.

    Parameters
    ----------
    table : pd.DataFrame
        Output of ``metrics_table()``.

    Returns
    -------
    pd.DataFrame
        Columns: policy, n_seeds, then the six axes.
    """
    sub = table[table['metric'].isin(SUMMARY_AXES)]
    wide = sub.pivot_table(
        index='policy',
        columns='metric',
        values='value',
        aggfunc='mean',
        sort=False,
    )
    wide = wide.reindex(columns=SUMMARY_AXES)
    n_seeds = table.groupby('policy', sort=False)['seed'].nunique()
    wide.insert(0, 'n_seeds', n_seeds.reindex(wide.index).to_numpy())
    return wide.reset_index()


def timeseries_table(metrics: list[Episode_Metrics]) -> pd.DataFrame:
    """
    Per-step mean PEN reward and mean normalized battery, averaged over the
    episodes of each policy. Episodes that ended early contribute a depleted
    battery and no reward to the later steps.

    Parameters
    ----------
    metrics : list[Episode_Metrics]
        Episodes of one or more policies.

    Returns
    -------
    pd.DataFrame
        Columns: policy, step, mean_pen_reward, mean_norm_battery.
    """
    frames = []
    policies = list(dict.fromkeys(_.policy for _ in metrics))
    for policy in policies:
        items = [_ for _ in metrics if _.policy == policy]
        length = max(_.n_steps for _ in items)
        rewards = np.full((len(items), length), np.nan)
        battery = np.zeros((len(items), length))
        for k, item in enumerate(items):
            rewards[k, : item.n_steps] = item.reward_curve
            battery[k, : item.n_steps] = item.battery_curve

        counts = np.sum(~np.isnan(rewards), axis=0)
        sums = np.nansum(rewards, axis=0)
        mean_reward = np.divide(
            sums, counts, out=np.full(length, np.nan), where=counts > 0
        )
        frames.append(
            pd.DataFrame(
                {
                    'policy': policy,
                    'step': np.arange(length),
                    'mean_pen_reward': mean_reward,
                    'mean_norm_battery': battery.mean(axis=0),
                },
            ),
        )

    if not frames:
        return pd.DataFrame(columns=TIMESERIES_COLUMNS)

    return pd.concat(frames, ignore_index=True)[TIMESERIES_COLUMNS]


def trace_table(metrics: list[Episode_Metrics]) -> pd.DataFrame:
    """
    Concatenated per-step traces.

    Parameters
    ----------
    metrics : list[Episode_Metrics]
        Episodes recorded with ``trace=True``.

    Returns
    -------
    pd.DataFrame
        Columns: policy, seed, step, entity, index, field, value.
    """
    rows = [
        (item.policy, item.seed, *row)
        for item in metrics
        for row in item.trace_rows
    ]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def write_csv(table: pd.DataFrame, path: str) -> None:
    """
    Write a table with a fixed float format.

    Parameters
    ----------
    table : pd.DataFrame
        The table.
    path : str
        Output file path.
    """
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
