from __future__ import annotations

import itertools

import numpy as np
from numba import jit

from PyMultiRAT import helper_compression as cmp
from PyMultiRAT import helper_generic as hlp
from PyMultiRAT import helper_radio as rad
from PyMultiRAT import helper_rewards as rwd
from PyMultiRAT.class_exceptions import Baseline_Error
from PyMultiRAT.class_scenario import Scenario

logger = hlp.get_logger(__name__)

POLICY_TAGS = ('heuristic', 'aansc', 'onsra')
ZERO_RATE_OVERTIME_S = 1e3
DEFAULT_VIOLATION_PENALTY = 1e6


class Grid_Spec:
    """
    Discretization of the PEN-side search.

    Parameters
    ----------
    utilization_resolution : int
        Points per edge of the utilization simplex grid (the grid holds the
        compositions of ``utilization_resolution - 1`` parts over M cells).
    ratio_resolution : int
        Number of evenly spaced compression ratios on [0, kappa_max].

    Attributes
    ----------
    Same as the input parameters.

    Raises
    ------
    ValueError
        When a resolution is not an integer >= 2
    """

    def __init__(
            self,
            utilization_resolution: int = 11,
            ratio_resolution: int = 21,
    ) -> None:
        for name, value in [
            ('utilization_resolution', utilization_resolution),
            ('ratio_resolution', ratio_resolution),
        ]:
            if not hlp.is_int(value) or value < 2:
                raise ValueError('`%s` must be an integer >= 2.' % name)

        self.utilization_resolution = int(utilization_resolution)
        self.ratio_resolution = int(ratio_resolution)

    def ratio_grid(self, kappa_max: float) -> np.ndarray:
        """
        The compression-ratio grid.

        Parameters
        ----------
        kappa_max : float
            Upper end of the grid.

        Returns
        -------
        np.ndarray
            Ascending ratios from 0 to ``kappa_max``.
        """
        return np.linspace(0.0, kappa_max, self.ratio_resolution)


class Baseline_Decision:
    """
    A complete (theta, P, kappa) decision.

    Parameters
    ----------
    bw_fractions : np.ndarray
        (N, M); every column is on the simplex.
    utilization : np.ndarray
        (N, M); every row is on the simplex.
    ratios : np.ndarray
        (N,), within [0, kappa_max].
    flagged : np.ndarray | None
        Boolean per PEN: no feasible point was found for it.

    Attributes
    ----------
    Same as the input parameters.
    """

    def __init__(
            self,
            bw_fractions: np.ndarray,
            utilization: np.ndarray,
            ratios: np.ndarray,
            flagged: np.ndarray | None = None,
    ) -> None:
        self.bw_fractions = np.asarray(bw_fractions, dtype=float)
        self.utilization = np.asarray(utilization, dtype=float)
        self.ratios = np.asarray(ratios, dtype=float)
        self.flagged = (
            np.zeros(len(self.ratios), dtype=bool)
            if flagged is None
            else np.asarray(flagged, dtype=bool)
        )

    def copy(self) -> Baseline_Decision:
        """
        Deep copy.

        Returns
        -------
        Baseline_Decision
            An independent copy.
        """
        return Baseline_Decision(
            self.bw_fractions.copy(),
            self.utilization.copy(),
            self.ratios.copy(),
            self.flagged.copy(),
        )

    def to_actions(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """
        Convert to environment actions.

        Returns
        -------
        pen_actions : list[np.ndarray]
            Utilization row followed by the ratio, per PEN.
        ran_actions : list[np.ndarray]
            Bandwidth-fraction column, per RAN.
        """
        pen_actions = [
            np.append(self.utilization[i], self.ratios[i])
            for i in range(len(self.ratios))
        ]
        ran_actions = [
            self.bw_fractions[:, j].copy()
            for j in range(self.bw_fractions.shape[1])
        ]
        return pen_actions, ran_actions


def simplex_grid(n_cells: int, resolution: int) -> np.ndarray:
    """
    All vectors of ``n_cells`` non-negative multiples of
    1 / (``resolution`` - 1) summing to 1, in lexicographic order.

    Parameters
    ----------
    n_cells : int
        Length of each vector.
    resolution : int
        Points per simplex edge (>= 2).

    Returns
    -------
    np.ndarray
        Array of shape (n_points, n_cells).

    Raises
    ------
    ValueError
        When the arguments are not positive integers or resolution < 2
    """
    if not hlp.is_int(n_cells) or n_cells < 1:
        raise ValueError('`n_cells` must be a positive integer.')

    if not hlp.is_int(resolution) or resolution < 2:
        raise ValueError('`resolution` must be an integer >= 2.')

    parts = int(resolution) - 1
    points = [
        combo
        for combo in itertools.product(range(parts + 1), repeat=int(n_cells))
        if sum(combo) == parts
    ]
    return np.array(points, dtype=float) / parts


@jit(nopython=True, nogil=True)
def _scan_pen_grid(
        p_grid: np.ndarray,
        kappa_grid: np.ndarray,
        dist_grid: np.ndarray,
        raw_bits: float,
        threshold: float,
        rate: np.ndarray,
        e_coef: np.ndarray,
        e_offset: np.ndarray,
        cost_per_bit: np.ndarray,
        access_delay: np.ndarray,
        norm_max: np.ndarray,
        resource_share: float,
        weights: np.ndarray,
        seizure: bool,
        penalty: float,
        zero_rate_overtime: float,
) -> tuple[int, int, float, float]:
    """
    Exhaustive search of one PEN's (ratio, utilization) grid. Ratios are
    scanned in ascending order and utilizations in lexicographic order; only
    strict improvements replace the incumbent.

    Parameters
    ----------
    p_grid : np.ndarray
        Utilization grid, (K, M).
    kappa_grid : np.ndarray
        Ratio grid, (R,).
    dist_grid : np.ndarray
        Distortion at every ratio of the grid, (R,).
    raw_bits : float
        Raw payload of the PEN.
    threshold : float
        Connection threshold.
    rate : np.ndarray
        Link rates, (M,).
    e_coef : np.ndarray
        Energy per bit of every link (offset excluded), (M,).
    e_offset : np.ndarray
        Energy offset of every RAN, (M,).
    cost_per_bit : np.ndarray
        Cost per bit of every RAN, (M,).
    access_delay : np.ndarray
        Access delay of every RAN, (M,).
    norm_max : np.ndarray
        (E_max, C_max, L_max).
    resource_share : float
        Resource share T.
    weights : np.ndarray
        (alpha, beta, lam, delta, lam_s, delta_s).
    seizure : bool
        Seizure flag.
    penalty : float
        Penalty per second of overtime.
    zero_rate_overtime : float
        Overtime charged for using a zero-rate link.

    Returns
    -------
    best_r : int
        Index of the best ratio.
    best_k : int
        Index of the best utilization.
    best_j : float
        Penalized objective at the best point.
    best_over : float
        Overtime at the best point.
    """
    n_points, n_rans = p_grid.shape
    best_r, best_k = 0, 0
    best_j = np.inf
    best_over = np.inf
    for r in range(len(kappa_grid)):
        bits_total = raw_bits * (1.0 - kappa_grid[r])
        for k in range(n_points):
            obj = 0.0
            lat_sum = 0.0
            over = 0.0
            for j in range(n_rans):
                p = p_grid[k, j]
                if p <= threshold:
                    continue

                bits = bits_total * p
                if rate[j] <= 0:
                    energy = e_offset[j]
                    latency = norm_max[2]
                    cost = 0.0
                    over += zero_rate_overtime
                else:
                    energy = e_coef[j] * bits + e_offset[j]
                    transfer = bits / rate[j]
                    latency = transfer + access_delay[j]
                    cost = bits * cost_per_bit[j]
                    if transfer > resource_share:
                        over += transfer - resource_share

                ne = min(energy / norm_max[0], 1.0)
                nc = min(cost / norm_max[1], 1.0)
                nl = min(latency / norm_max[2], 1.0)
                if seizure:
                    lat_sum += nl
                else:
                    obj += p * (weights[0] * ne + weights[1] * nc + weights[2] * nl)

            if seizure:
                obj = weights[4] * lat_sum + weights[5] * dist_grid[r]
            else:
                obj += weights[3] * dist_grid[r]

            total = obj + penalty * over
            if total < best_j:
                best_j = total
                best_r = r
                best_k = k
                best_over = over

    return best_r, best_k, best_j, best_over


def penalized_objectives(
        scenario: Scenario,
        decision: Baseline_Decision,
        fading_mag_sq: np.ndarray,
        seizure: np.ndarray,
        penalty: float = DEFAULT_VIOLATION_PENALTY,
) -> np.ndarray:
    """
    Per-PEN objective plus ``penalty`` times the overtime beyond the
    resource share (a zero-rate used link counts as
    ``ZERO_RATE_OVERTIME_S`` seconds of overtime).

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    decision : Baseline_Decision
        The decision.
    fading_mag_sq : np.ndarray
        Fading matrix, (N, M).
    seizure : np.ndarray
        Seizure flag per PEN.
    penalty : float
        Penalty per second of overtime.

    Returns
    -------
    np.ndarray
        Penalized objective per PEN.
    """
    links = scenario.evaluate_links(
        decision.ratios,
        decision.utilization,
        decision.bw_fractions,
        fading_mag_sq,
    )
    zero_rate = links.used & (links.rate_bps <= 0)
    overtime = links.overtime_s.sum(axis=1)
    overtime = overtime + ZERO_RATE_OVERTIME_S * zero_rate.sum(axis=1)
    result = np.zeros(scenario.n_pens)
    for i, pen in enumerate(scenario.pens):
        result[i] = rwd.p1_objective(
            pen,
            bool(seizure[i]),
            utilization=decision.utilization[i],
            norm_energy=links.norm_energy[i],
            norm_cost=links.norm_cost[i],
            norm_latency=links.norm_latency[i],
            norm_distortion=float(links.distortion[i]),
        )

    return result + penalty * overtime


def _link_coefficients(
        scenario: Scenario,
        bw_row: np.ndarray,
        fading_row: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    gain = rad.channel_gain(scenario.channel, fading_row)
    rate = np.zeros(scenario.n_rans)
    e_coef = np.zeros(scenario.n_rans)
    for j, ran in enumerate(scenario.rans):
        rate[j] = rad.link_rate(
            ran,
            scenario.channel,
            float(bw_row[j]),
            float(gain[j]),
            shared_cap=scenario.rate_cap_shared,
        )
        if rate[j] > 0:
            e_coef[j] = rad.link_energy(
                ran,
                scenario.channel,
                1.0,
                float(bw_row[j]),
                float(gain[j]),
                rate[j],
                include_offset=False,
            )

    return rate, e_coef


def best_pen_response(
        scenario: Scenario,
        pen_index: int,
        bw_row: np.ndarray,
        fading_row: np.ndarray,
        seizure: bool,
        grid: Grid_Spec,
        penalty: float = DEFAULT_VIOLATION_PENALTY,
) -> tuple[np.ndarray, float, float, bool]:
    """
    Exhaustive grid search of one PEN's utilization and compression ratio,
    with the bandwidth fractions it holds fixed. Ties go to the lower ratio,
    then to the lexicographically smaller utilization.

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    pen_index : int
        Index of the PEN.
    bw_row : np.ndarray
        Bandwidth fraction the PEN holds on every RAN, (M,).
    fading_row : np.ndarray
        |h|^2 of the PEN's links, (M,).
    seizure : bool
        Seizure flag of the PEN.
    grid : Grid_Spec
        Search grid.
    penalty : float
        Penalty per second of overtime.

    Returns
    -------
    utilization : np.ndarray
        Best utilization vector.
    ratio : float
        Best compression ratio.
    objective : float
        Penalized objective of the best point (as computed by the scan).
    infeasible : bool
        Whether even the best point violates the resource share.
    """
    pen = scenario.pens[pen_index]
    p_grid = simplex_grid(scenario.n_rans, grid.utilization_resolution)
    kappa_grid = grid.ratio_grid(scenario.kappa_max)
    dist_grid = np.asarray(
        cmp.distortion(scenario.distortion_model, kappa_grid), dtype=float
    )
    rate, e_coef = _link_coefficients(scenario, bw_row, fading_row)
    weights = np.array(
        [pen.alpha, pen.beta, pen.lam, pen.delta, pen.lam_s, pen.delta_s]
    )
    best_r, best_k, best_j, best_over = _scan_pen_grid(
        p_grid,
        kappa_grid,
        dist_grid,
        pen.raw_bits_per_step,
        scenario.connection_threshold,
        rate,
        e_coef,
        np.array([_.energy_offset_j for _ in scenario.rans]),
        np.array([_.cost_per_bit for _ in scenario.rans]),
        np.array([_.access_delay_s for _ in scenario.rans]),
        np.array(
            [scenario.energy_max_j, scenario.cost_max, scenario.latency_max_s]
        ),
        scenario.resource_share_s,
        weights,
        bool(seizure),
        float(penalty),
        ZERO_RATE_OVERTIME_S,
    )
    return (
        p_grid[best_k].copy(),
        float(kappa_grid[best_r]),
        float(best_j),
        bool(best_over > 0),
    )


def _alive_mask(alive: np.ndarray | None, n_pens: int) -> np.ndarray:
    if alive is None:
        return np.ones(n_pens, dtype=bool)

    mask = np.asarray(alive, dtype=bool)
    if mask.shape != (n_pens,):
        raise ValueError('`alive` must have one flag per PEN.')

    # with nobody left, plan as if everybody were
    return mask if mask.any() else np.ones(n_pens, dtype=bool)


def _equal_bandwidth(mask: np.ndarray, n_rans: int) -> np.ndarray:
    bw = np.zeros((len(mask), n_rans))
    bw[mask] = 1.0 / np.count_nonzero(mask)
    return bw


def heuristic_policy(
        scenario: Scenario,
        fading_mag_sq: np.ndarray,
        grid: Grid_Spec | None = None,
        alive: np.ndarray | None = None,
) -> Baseline_Decision:
    """
    Equal shares everywhere: every RAN splits its bandwidth evenly over the
    alive PENs, every PEN spreads its data evenly over the M RANs, and each
    alive PEN uses the smallest grid compression ratio that respects the
    resource share on all its links (``kappa_max`` if none does).

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    fading_mag_sq : np.ndarray
        Fading matrix used for planning, (N, M).
    grid : Grid_Spec | None
        Supplies the ratio grid. ``None`` means the default grid.
    alive : np.ndarray | None
        Alive flag per PEN. Depleted PENs get no bandwidth and are never
        flagged. ``None`` means all PENs are alive.

    Returns
    -------
    Baseline_Decision
        The decision; ``flagged`` marks PENs that stay infeasible.
    """
    grid = Grid_Spec() if grid is None else grid
    N, M = scenario.n_pens, scenario.n_rans
    mask = _alive_mask(alive, N)
    bw = _equal_bandwidth(mask, M)
    utilization = np.full((N, M), 1.0 / M)
    rate = scenario.rates(bw, fading_mag_sq)
    ratios = np.full(N, scenario.kappa_max)
    flagged = mask.copy()
    for i, pen in enumerate(scenario.pens):
        if not mask[i] or np.any(rate[i] <= 0):
            continue

        for kappa in grid.ratio_grid(scenario.kappa_max):
            bits = pen.raw_bits_per_step * (1.0 - kappa) / M
            if np.all(bits / rate[i] <= scenario.resource_share_s):
                ratios[i] = kappa
                flagged[i] = False
                break

    return Baseline_Decision(bw, utilization, ratios, flagged)


def aansc_policy(
        scenario: Scenario,
        fading_mag_sq: np.ndarray,
        seizure: np.ndarray,
        grid: Grid_Spec | None = None,
        penalty: float = DEFAULT_VIOLATION_PENALTY,
        alive: np.ndarray | None = None,
) -> Baseline_Decision:
    """
    AANSC-style policy: equal bandwidth shares over the alive PENs, and a
    per-PEN exhaustive search of utilization and compression ratio
    minimizing the penalized objective.

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    fading_mag_sq : np.ndarray
        Fading matrix used for planning, (N, M).
    seizure : np.ndarray
        Seizure flag per PEN.
    grid : Grid_Spec | None
        Search grid. ``None`` means the default grid.
    penalty : float
        Penalty per second of overtime.
    alive : np.ndarray | None
        Alive flag per PEN. Depleted PENs get no bandwidth and keep an even
        utilization with ratio 0. ``None`` means all PENs are alive.

    Returns
    -------
    Baseline_Decision
        The decision; ``flagged`` marks PENs without a feasible grid point.
    """
    grid = Grid_Spec() if grid is None else grid
    N, M = scenario.n_pens, scenario.n_rans
    mask = _alive_mask(alive, N)
    bw = _equal_bandwidth(mask, M)
    utilization = np.full((N, M), 1.0 / M)
    ratios = np.zeros(N)
    flagged = np.zeros(N, dtype=bool)
    for i in np.flatnonzero(mask):
        utilization[i], ratios[i], _, flagged[i] = best_pen_response(
            scenario,
            i,
            bw[i],
            fading_mag_sq[i],
            bool(seizure[i]),
            grid,
            penalty,
        )

    return Baseline_Decision(bw, utilization, ratios, flagged)


def _ran_block(
        scenario: Scenario,
        decision: Baseline_Decision,
        fading_mag_sq: np.ndarray,
        seizure: np.ndarray,
        mask: np.ndarray,
        penalty: float,
        pg_steps: int,
        fd_step: float = 1e-6,
        max_halvings: int = 30,
) -> None:
    idx = np.flatnonzero(mask)

    def total(entries: np.ndarray, j: int) -> float:
        trial = decision.copy()
        trial.bw_fractions[idx, j] = entries
        values = penalized_objectives(
            scenario, trial, fading_mag_sq, seizure, penalty
        )
        return float(np.sum(values[mask]))

    for j in range(scenario.n_rans):
        x = decision.bw_fractions[idx, j].copy()
        f_x = total(x, j)
        for _ in range(pg_steps):
            grad = np.zeros_like(x)
            for k in range(len(x)):
                shifted = x.copy()
                if x[k] + fd_step <= 1.0:
                    shifted[k] += fd_step
                    grad[k] = (total(shifted, j) - f_x) / fd_step
                else:
                    shifted[k] -= fd_step
                    grad[k] = (f_x - total(shifted, j)) / fd_step

            step = 1.0
            accepted = False
            for _ in range(max_halvings):
                candidate = np.clip(
                    hlp.project_simplex(x - step * grad), 0.0, 1.0
                )
                f_candidate = total(candidate, j)
                if f_candidate < f_x:
                    x, f_x = candidate, f_candidate
                    accepted = True
                    break

                step *= 0.5

            if not accepted:
                break

        decision.bw_fractions[idx, j] = x


def onsra_policy(
        scenario: Scenario,
        fading_mag_sq: np.ndarray,
        seizure: np.ndarray,
        grid: Grid_Spec | None = None,
        *,
        max_rounds: int = 20,
        tol: float = 1e-9,
        pg_steps: int = 20,
        penalty: float = DEFAULT_VIOLATION_PENALTY,
        alive: np.ndarray | None = None,
) -> tuple[Baseline_Decision, list[float]]:
    """
    ONSRA-style alternating optimization. Starting from the heuristic
    decision, every round (a) lets each RAN improve its bandwidth column by
    projected gradient descent with backtracking on the total penalized
    objective, with P and kappa fixed, then (b) lets each PEN replace its
    (P, kappa) by its grid best response when that does not increase its
    objective. Rounds stop when the improvement falls below ``tol``.

    Parameters
    ----------
    scenario : Scenario
        The scenario.
    fading_mag_sq : np.ndarray
        Fading matrix used for planning, (N, M).
    seizure : np.ndarray
        Seizure flag per PEN.
    grid : Grid_Spec | None
        PEN search grid. ``None`` means the default grid.
    max_rounds : int
        Maximum number of rounds (>= 1).
    tol : float
        Minimum improvement per round to keep going.
    pg_steps : int
        Maximum projected-gradient iterations per RAN per round.
    penalty : float
        Penalty per second of overtime.
    alive : np.ndarray | None
        Alive flag per PEN. Only alive PENs receive bandwidth, count in the
        objective and get best responses. ``None`` means all are alive.

    Returns
    -------
    decision : Baseline_Decision
        The final decision.
    objective_trace : list[float]
        Total penalized objective of the alive PENs, at the starting point
        and after every round. Nonincreasing.

    Raises
    ------
    ValueError
        When ``max_rounds`` < 1
    Baseline_Error
        When the objective becomes non-finite
    """
    if not hlp.is_int(max_rounds) or max_rounds < 1:
        raise ValueError('`max_rounds` must be an integer >= 1.')

    grid = Grid_Spec() if grid is None else grid
    seizure = np.asarray(seizure, dtype=bool)
    mask = _alive_mask(alive, scenario.n_pens)
    decision = heuristic_policy(scenario, fading_mag_sq, grid, mask)

    def objectives(dec: Baseline_Decision) -> np.ndarray:
        values = penalized_objectives(
            scenario, dec, fading_mag_sq, seizure, penalty
        )
        return np.where(mask, values, 0.0)

    trace = [float(np.sum(objectives(decision)))]
    if not np.isfinite(trace[0]):
        raise Baseline_Error(0, 'starting point')

    for round_index in range(1, max_rounds + 1):
        _ran_block(
            scenario, decision, fading_mag_sq, seizure, mask, penalty, pg_steps
        )

        current = objectives(decision)
        for i in np.flatnonzero(mask):
            util, ratio, _, _ = best_pen_response(
                scenario,
                i,
                decision.bw_fractions[i],
                fading_mag_sq[i],
                bool(seizure[i]),
                grid,
                penalty,
            )
            trial = decision.copy()
            trial.utilization[i] = util
            trial.ratios[i] = ratio
            trial_value = objectives(trial)[i]
            if trial_value <= current[i]:
                decision = trial
                current = objectives(decision)

        value = float(np.sum(current))
        if not np.isfinite(value):
            raise Baseline_Error(round_index)

        logger.debug('ONSRA round %d objective %.12g', round_index, value)
        improvement = trace[-1] - value
        trace.append(value)
        if improvement < tol:
            break

    links = scenario.evaluate_links(
        decision.ratios,
        decision.utilization,
        decision.bw_fractions,
        fading_mag_sq,
        mask,
    )
    decision.flagged = links.pen_violated & mask
    return decision, trace


def joint_brute_force(
        scenario: Scenario,
        fading_mag_sq: np.ndarray,
        seizure: np.ndarray,
        grid: Grid_Spec,
        bw_resolution: int = 5,
        penalty: float = DEFAULT_VIOLATION_PENALTY,
) -> tuple[Baseline_Decision, float]:
    """
    Exhaustive joint search over bandwidth columns (each on a simplex grid
    of ``bw_resolution``), utilizations and ratios. With theta fixed, the
    PEN subproblems separate, so each one is solved by its grid search.

    Parameters
    ----------
    scenario : Scenario
        The scenario (small N and M only).
    fading_mag_sq : np.ndarray
        Fading matrix, (N, M).
    seizure : np.ndarray
        Seizure flag per PEN.
    grid : Grid_Spec
        PEN search grid.
    bw_resolution : int
        Points per edge of the bandwidth simplex grid.
    penalty : float
        Penalty per second of overtime.

    Returns
    -------
    decision : Baseline_Decision
        The best decision found.
    objective : float
        Its total penalized objective.
    """
    N, M = scenario.n_pens, scenario.n_rans
    columns = simplex_grid(N, bw_resolution)
    best, best_value = None, np.inf
    for combo in itertools.product(range(len(columns)), repeat=M):
        bw = np.column_stack([columns[k] for k in combo])
        utilization = np.zeros((N, M))
        ratios = np.zeros(N)
        for i in range(N):
            utilization[i], ratios[i], _, _ = best_pen_response(
                scenario,
                i,
                bw[i],
                fading_mag_sq[i],
                bool(seizure[i]),
                grid,
                penalty,
            )

        decision = Baseline_Decision(bw, utilization, ratios)
        value = float(
            np.sum(
                penalized_objectives(
                    scenario, decision, fading_mag_sq, seizure, penalty
                ),
            ),
        )
        if value < best_value:
            best, best_value = decision, value

    return best, best_value
