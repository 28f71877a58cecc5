from __future__ import annotations

import numpy as np

from PyMultiRAT import helper_generic as hlp
from PyMultiRAT.class_profiles import Pen_Profile

PENALTY_REWARD = -1.0
SEIZURE_DISTORTION_TARGET = 0.1


def pen_reward(
        pen: Pen_Profile,
        seizure: bool,
        *,
        utilization: np.ndarray,
        norm_energy: np.ndarray,
        norm_cost: np.ndarray,
        norm_latency: np.ndarray,
        norm_distortion: float,
        norm_battery: float,
        violated: bool,
) -> float:
    """
    Reward of one PEN for one step.

    Without a seizure the reward is
    ``(1 - sum_j P_j * U_j) + delta * (1 - D) + battery`` with
    ``U_j = alpha * E_j + beta * C_j + lam * L_j``. During a seizure it is
    ``lam_s * (1 - sum_j L_j) + delta_s * (0.1 - D) + battery``. Any violated
    constraint overrides both with -1.

    Parameters
    ----------
    pen : Pen_Profile
        The PEN (source of the weights).
    seizure : bool
        Whether the PEN is in a seizure during this step.
    utilization : np.ndarray
        Utilization vector P of the PEN over the RANs.
    norm_energy : np.ndarray
        Normalized per-link energy, in [0, 1].
    norm_cost : np.ndarray
        Normalized per-link monetary cost, in [0, 1].
    norm_latency : np.ndarray
        Normalized per-link latency, in [0, 1].
    norm_distortion : float
        Normalized distortion, in [0, 1].
    norm_battery : float
        Normalized battery level after the step, in [0, 1].
    violated : bool
        Whether any constraint was violated by the PEN in this step.

    Returns
    -------
    float
        The reward.
    """
    if violated:
        return PENALTY_REWARD

    if seizure:
        return float(
            pen.lam_s * (1.0 - np.sum(norm_latency))
            + pen.delta_s * (SEIZURE_DISTORTION_TARGET - norm_distortion)
            + norm_battery,
        )

    weighted = pen.alpha * np.asarray(norm_energy)
    weighted = weighted + pen.beta * np.asarray(norm_cost)
    weighted = weighted + pen.lam * np.asarray(norm_latency)
    return float(
        (1.0 - np.dot(utilization, weighted))
        + pen.delta * (1.0 - norm_distortion)
        + norm_battery,
    )


def ran_reward(
        pen_connected: np.ndarray,
        pen_rewards: np.ndarray,
        feasible: bool,
) -> float:
    """
    Reward of one RAN for one step: the mean reward of its connected PENs,
    -1 when the RAN's allocation was infeasible, and 0 when nobody is
    connected.

    Parameters
    ----------
    pen_connected : np.ndarray
        0/1 indicator per PEN.
    pen_rewards : np.ndarray
        Reward of every PEN in this step.
    feasible : bool
        Whether the resource-share constraint held for every connected PEN
        on this RAN.

    Returns
    -------
    float
        The reward.

    Raises
    ------
    ValueError
        When the two vectors have different lengths
    """
    connected = np.asarray(pen_connected, dtype=float)
    rewards = np.asarray(pen_rewards, dtype=float)
    hlp.assert_array_length(rewards, len(connected), name='`pen_rewards`')
    if not feasible:
        return PENALTY_REWARD

    mask = connected > 0.5
    if not np.any(mask):
        return 0.0

    return float(np.mean(rewards[mask]))


def update_battery(
        prev_j: float,
        step_energy_j: float,
        capacity_j: float,
) -> tuple[float, float]:
    """
    Drain the battery of a PEN by one step's energy.

    Parameters
    ----------
    prev_j : float
        Battery level before the step. Unit: J.
    step_energy_j : float
        Energy spent in the step, summed over links. Unit: J.
    capacity_j : float
        Full battery capacity. Unit: J.

    Returns
    -------
    new_j : float
        Battery level after the step, floored at 0.
    normalized : float
        ``new_j / capacity_j``.

    Raises
    ------
    ValueError
        When any input is negative or ``capacity_j`` is not positive
    """
    if prev_j < 0 or step_energy_j < 0:
        raise ValueError('`prev_j` and `step_energy_j` must be non-negative.')

    if capacity_j <= 0:
        raise ValueError('`capacity_j` must be positive.')

    new_j = max(0.0, prev_j - step_energy_j)
    return new_j, new_j / capacity_j


def p1_objective(
        pen: Pen_Profile,
        seizure: bool,
        *,
        utilization: np.ndarray,
        norm_energy: np.ndarray,
        norm_cost: np.ndarray,
        norm_latency: np.ndarray,
        norm_distortion: float,
) -> float:
    """
    Weighted per-PEN objective to be minimized by the optimizing baselines.

    Without a seizure it is
    ``sum_j P_j * (alpha * E_j + beta * C_j + lam * L_j) + delta * D``;
    during a seizure it is ``lam_s * sum_j L_j + delta_s * D``. It mirrors
    ``pen_reward()`` term by term (minus the battery term).

    Parameters
    ----------
    pen : Pen_Profile
        The PEN (source of the weights).
    seizure : bool
        Whether the PEN is in a seizure.
    utilization : np.ndarray
        Utilization vector P of the PEN.
    norm_energy : np.ndarray
        Normalized per-link energy.
    norm_cost : np.ndarray
        Normalized per-link cost.
    norm_latency : np.ndarray
        Normalized per-link latency.
    norm_distortion : float
        Normalized distortion.

    Returns
    -------
    float
        The objective value.
    """
    if seizure:
        return float(
            pen.lam_s * np.sum(norm_latency) + pen.delta_s * norm_distortion,
        )

    weighted = (
        pen.alpha * np.asarray(norm_energy)
        + pen.beta * np.asarray(norm_cost)
        + pen.lam * np.asarray(norm_latency)
    )
    return float(np.dot(utilization, weighted) + pen.delta * norm_distortion)
