import itertools

import numpy as np

from pxrdsep.errors import KExceedsKmax


def best_assignment(costs):
    """
    Exhaustive minimum-cost injective assignment of targets to slots.

    Candidates are enumerated in lexicographic order and the first minimum
    wins, so ties go to the lowest slot indices.

    Parameters
    ----------
    costs : np.ndarray
        (K, K_max) cost of assigning target k to slot j

    Returns
    -------
    (tuple of int, float)
        Slot of each target and the total cost

    Raises
    ------
    KExceedsKmax
        If there are more targets than slots
    """
    costs = np.asarray(costs, dtype=np.float64)
    K, k_max = costs.shape
    if K > k_max:
        raise KExceedsKmax(f"{K} targets cannot be matched into {k_max} slots")
    rows = np.arange(K)
    best, best_cost = (), 0.0 if K == 0 else np.inf
    for candidate in itertools.permutations(range(k_max), K):
        cost = costs[rows, list(candidate)].sum() if K else 0.0
        if cost < best_cost:
            best, best_cost = candidate, cost
    return tuple(int(j) for j in best), float(best_cost)


def activity_labels(assignment, k_max):
    """1 for matched slots, 0 for the rest"""
    labels = np.zeros(k_max)
    labels[list(assignment)] = 1.0
    return labels


def pit_match(preds, targets, loss_fn):
    """
    Match K targets into the K_max predicted slots.

    Parameters
    ----------
    preds : np.ndarray
        (K_max, L) slot outputs
    targets : np.ndarray
        (K, L) true components, K <= K_max
    loss_fn : callable
        ``loss_fn(preds, targets)`` returning the (K, K_max) cost matrix

    Returns
    -------
    (tuple of int, float, np.ndarray)
        Slot of each target, matched cost and per-slot activity labels
    """
    preds = np.asarray(preds)
    targets = np.asarray(targets)
    if len(targets) > len(preds):
        raise KExceedsKmax(
            f"{len(targets)} targets cannot be matched into {len(preds)} slots"
        )
    costs = np.asarray(loss_fn(preds, targets))
    assignment, cost = best_assignment(costs)
    return assignment, cost, activity_labels(assignment, len(preds))
