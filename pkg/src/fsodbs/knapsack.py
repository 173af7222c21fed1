"""
User access control as a two-constraint 0-1 knapsack.

Every user has unit value; user ``i`` consumes ``b_i`` Hz of access bandwidth
and ``phi_i`` bit/s of backhaul capacity. The genetic algorithm keeps a
population of feasible selections, breeds the best member of each random
half, and repairs infeasible offspring using prices from the LP relaxation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

BRUTE_FORCE_LIMIT = 24


@dataclass(frozen=True, eq=False)
class KnapsackInstance:
    weights_bandwidth: np.ndarray
    weights_rate: np.ndarray
    capacity_bandwidth: float
    capacity_rate: float

    def __post_init__(self):
        for name in ("weights_bandwidth", "weights_rate"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.weights_bandwidth) != len(self.weights_rate):
            raise ValueError("weight vectors differ in length")
        if np.any(self.weights_bandwidth <= 0) or np.any(self.weights_rate <= 0):
            raise ValueError("weights must be positive")
        if not (self.capacity_bandwidth > 0 and self.capacity_rate > 0):
            raise ValueError("capacities must be positive")

    def __len__(self) -> int:
        return len(self.weights_rate)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 40
    offspring_per_generation: int = 40
    mutation_flips: int = 2
    rng_seed: int = 0
    patience: int = 50
    max_generations: int = 2000

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population size must be even and >= 2")
        if self.offspring_per_generation < 1:
            raise ValueError("need at least one offspring per generation")
        if self.mutation_flips < 0:
            raise ValueError("mutation_flips must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class DualPrices:
    l1: float  # per bit/s of backhaul
    l2: float  # per Hz of access bandwidth


@dataclass
class GaTrace:
    """Per-generation record of a GA run, for tests and debugging."""

    initial_population: Optional[np.ndarray] = None
    best_counts: list[int] = field(default_factory=list)


def _as_bits(sol, n: int) -> np.ndarray:
    z = np.asarray(sol, dtype=np.int8).reshape(-1)
    if len(z) != n:
        raise ValueError(f"solution has {len(z)} entries, instance has {n}")
    return z


def loads(sol, inst: KnapsackInstance) -> tuple[float, float]:
    z = _as_bits(sol, len(inst)).astype(bool)
    return float(inst.weights_bandwidth[z].sum()), float(inst.weights_rate[z].sum())


def is_feasible(sol, inst: KnapsackInstance) -> bool:
    bw, rate = loads(sol, inst)
    return bw <= inst.capacity_bandwidth and rate <= inst.capacity_rate


# --- LP relaxation -----------------------------------------------------------


def _dual_objective(lam: np.ndarray, a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Dual of the normalized relaxation at candidate prices ``lam`` (k, 2)."""
    slack = 1.0 - lam[:, :1] * a[None, :] - lam[:, 1:] * c[None, :]
    return lam[:, 0] + lam[:, 1] + np.maximum(slack, 0.0).sum(axis=1)


def solve_lp_dual(inst: KnapsackInstance, chunk: int = 20000) -> DualPrices:
    """Exact dual prices of the LP relaxation of the two coupling constraints.

    With weights scaled by their capacities the dual reduces to minimizing
    ``l1 + l2 + sum(max(0, 1 - l1*a_i - l2*c_i))`` over ``l >= 0``, a convex
    piecewise-linear function whose minimum sits on a vertex of the line
    arrangement ``l1*a_i + l2*c_i = 1``. All O(n^2) vertices are evaluated.
    """
    n = len(inst)
    if n == 0:
        return DualPrices(0.0, 0.0)
    a = inst.weights_rate / inst.capacity_rate
    c = inst.weights_bandwidth / inst.capacity_bandwidth

    cands = [np.zeros((1, 2)), np.column_stack([1.0 / a, np.zeros(n)]),
             np.column_stack([np.zeros(n), 1.0 / c])]
    i, j = np.triu_indices(n, k=1)
    det = a[i] * c[j] - a[j] * c[i]
    ok = np.abs(det) > 1e-14 * (a[i] * c[j] + a[j] * c[i])
    i, j, det = i[ok], j[ok], det[ok]
    l1 = (c[j] - c[i]) / det
    l2 = (a[i] - a[j]) / det
    keep = (l1 >= 0) & (l2 >= 0)
    cands.append(np.column_stack([l1[keep], l2[keep]]))
    lam = np.vstack(cands)

    best_val, best = np.inf, lam[0]
    for start in range(0, len(lam), chunk):
        block = lam[start:start + chunk]
        vals = _dual_objective(block, a, c)
        k = int(np.argmin(vals))
        # strict improvement keeps the earliest candidate on ties
        if not np.isfinite(best_val) or vals[k] < best_val - 1e-12 * max(1.0, abs(best_val)):
            best_val, best = vals[k], block[k]
    return DualPrices(float(best[0] / inst.capacity_rate), float(best[1] / inst.capacity_bandwidth))


def dual_objective(duals: DualPrices, inst: KnapsackInstance) -> float:
    lam = np.array([[duals.l1 * inst.capacity_rate, duals.l2 * inst.capacity_bandwidth]])
    a = inst.weights_rate / inst.capacity_rate
    c = inst.weights_bandwidth / inst.capacity_bandwidth
    return float(_dual_objective(lam, a, c)[0])


def utility_ratio(i: int, duals: DualPrices, inst: KnapsackInstance) -> float:
    denom = duals.l1 * inst.weights_rate[i] + duals.l2 * inst.weights_bandwidth[i]
    if denom <= 0:
        raise ZeroDivisionError("both dual prices are zero; no repair is needed")
    return 2.0 / denom


def _drop_priority(inst: KnapsackInstance, duals: DualPrices) -> np.ndarray:
    """Score per user; repair removes the highest score first."""
    if duals.l1 > 0 or duals.l2 > 0:
        return 2.0 / (duals.l1 * inst.weights_rate + duals.l2 * inst.weights_bandwidth)
    return (inst.weights_bandwidth / inst.capacity_bandwidth
            + inst.weights_rate / inst.capacity_rate)


def _drop_order(priority: np.ndarray) -> np.ndarray:
    # descending priority, lowest index first on ties
    return np.lexsort((np.arange(len(priority)), -priority))


def repair(sol, inst: KnapsackInstance, duals: DualPrices,
           _order: Optional[np.ndarray] = None) -> np.ndarray:
    """Unselect users in drop-priority order until both budgets hold."""
    z = _as_bits(sol, len(inst)).copy()
    bw, rate = loads(z, inst)
    if bw <= inst.capacity_bandwidth and rate <= inst.capacity_rate:
        return z
    order = _drop_order(_drop_priority(inst, duals)) if _order is None else _order
    chosen = order[z[order] == 1]
    # number of removals needed, from cumulative freed capacity
    freed_bw = np.cumsum(inst.weights_bandwidth[chosen])
    freed_rate = np.cumsum(inst.weights_rate[chosen])
    enough = (bw - freed_bw <= inst.capacity_bandwidth) & (rate - freed_rate <= inst.capacity_rate)
    k = int(np.argmax(enough)) + 1 if enough.any() else len(chosen)
    z[chosen[:k]] = 0
    # cumulative sums can disagree with a fresh sum in the last ulp
    while k < len(chosen) and not is_feasible(z, inst):
        z[chosen[k]] = 0
        k += 1
    return z


# --- GA operators ------------------------------------------------------------


def crossover(parent1, parent2, rng: np.random.Generator) -> np.ndarray:
    p1 = np.asarray(parent1, dtype=np.int8)
    p2 = np.asarray(parent2, dtype=np.int8)
    if p1.shape != p2.shape:
        raise ValueError("parents differ in length")
    return np.where(rng.random(p1.shape) < 0.5, p1, p2).astype(np.int8)


def mutate(sol, q: int, rng: np.random.Generator) -> np.ndarray:
    z = np.asarray(sol, dtype=np.int8).copy()
    if q > len(z):
        raise ValueError("more flips requested than positions")
    pos = rng.choice(len(z), size=q, replace=False)
    z[pos] = 1 - z[pos]
    return z


def initial_population(inst: KnapsackInstance, size: int, rng: np.random.Generator) -> np.ndarray:
    """First-fit fills in random user order; every row is feasible."""
    n = len(inst)
    pop = np.zeros((size, n), dtype=np.int8)
    if n == 0:
        return pop
    perms = np.argsort(rng.random((size, n)), axis=1)
    bw = np.zeros(size)
    rate = np.zeros(size)
    rows = np.arange(size)
    for k in range(n):
        idx = perms[:, k]
        nb = bw + inst.weights_bandwidth[idx]
        nr = rate + inst.weights_rate[idx]
        fits = (nb <= inst.capacity_bandwidth) & (nr <= inst.capacity_rate)
        pop[rows[fits], idx[fits]] = 1
        bw = np.where(fits, nb, bw)
        rate = np.where(fits, nr, rate)
    # running sums can round differently from a fresh sum right at a budget
    order = np.arange(n)
    for r in np.flatnonzero(~_feasible_rows(pop, inst)):
        pop[r] = repair(pop[r], inst, DualPrices(0, 0), _order=order)
    return pop


def _rank(pop: np.ndarray, inst: KnapsackInstance) -> np.ndarray:
    """Deduplicate and sort by count (desc), bandwidth use (asc), first occurrence."""
    seen: set[bytes] = set()
    keep = []
    for k, row in enumerate(pop):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(k)
    pop = pop[keep]
    counts = pop.sum(axis=1)
    used = pop @ inst.weights_bandwidth
    return pop[np.lexsort((used, -counts))]


def _feasible_rows(pop: np.ndarray, inst: KnapsackInstance) -> np.ndarray:
    """Row-wise :func:`is_feasible`; rows within rounding of a budget are rechecked exactly."""
    bw = pop @ inst.weights_bandwidth
    rate = pop @ inst.weights_rate
    ok = (bw <= inst.capacity_bandwidth) & (rate <= inst.capacity_rate)
    near = ((np.abs(bw - inst.capacity_bandwidth) <= 1e-9 * inst.capacity_bandwidth)
            | (np.abs(rate - inst.capacity_rate) <= 1e-9 * inst.capacity_rate))
    for r in np.flatnonzero(near):
        ok[r] = is_feasible(pop[r], inst)
    return ok


def _repair_batch(children: np.ndarray, inst: KnapsackInstance, order: np.ndarray) -> np.ndarray:
    """Row-wise :func:`repair` with a shared drop order."""
    bw = children @ inst.weights_bandwidth
    rate = children @ inst.weights_rate
    bad = ~_feasible_rows(children, inst)
    if not bad.any():
        return children
    z = children[bad][:, order]
    freed_bw = np.cumsum(z * inst.weights_bandwidth[order], axis=1)
    freed_rate = np.cumsum(z * inst.weights_rate[order], axis=1)
    enough = ((bw[bad, None] - freed_bw <= inst.capacity_bandwidth)
              & (rate[bad, None] - freed_rate <= inst.capacity_rate))
    # drop every selected user up to the first position that restores feasibility
    stop = np.where(enough.any(axis=1), np.argmax(enough, axis=1), z.shape[1] - 1)
    z[np.arange(z.shape[1])[None, :] <= stop[:, None]] = 0
    fixed = np.empty_like(z)
    fixed[:, order] = z
    for r in np.flatnonzero(~_feasible_rows(fixed, inst)):
        fixed[r] = repair(fixed[r], inst, DualPrices(0, 0), _order=order)
    out = children.copy()
    out[bad] = fixed
    return out


def _breed(p1: np.ndarray, p2: np.ndarray, m: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` children by uniform crossover then ``q`` distinct flips each."""
    n = len(p1)
    children = np.where(rng.random((m, n)) < 0.5, p1[None, :], p2[None, :]).astype(np.int8)
    if q:
        pos = np.argsort(rng.random((m, n)), axis=1)[:, :q]
        rows = np.repeat(np.arange(m), q)
        children[rows, pos.ravel()] ^= 1
    return children


def run_ga(inst: KnapsackInstance, cfg: GaConfig = GaConfig(),
           trace: Optional[GaTrace] = None) -> np.ndarray:
    """Best selection found by the GA; always feasible.

    Stops once the best count has not grown for ``cfg.patience``
    consecutive generations.
    """
    n = len(inst)
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    if cfg.mutation_flips > n:
        raise ValueError("mutation_flips exceeds the number of users")
    rng = np.random.default_rng(cfg.rng_seed)
    duals = solve_lp_dual(inst)
    order = _drop_order(_drop_priority(inst, duals))

    pop = initial_population(inst, cfg.population_size, rng)
    if trace is not None:
        trace.initial_population = pop.copy()
    pop = _rank(pop, inst)
    best = int(pop[0].sum())
    if trace is not None:
        trace.best_counts.append(best)

    stall = 0
    for _ in range(cfg.max_generations):
        if best == n:
            break
        # random halves; the lowest rank index in each half is its best member
        halves = rng.permutation(len(pop))
        half = max(1, len(pop) // 2)
        h1, h2 = halves[:half], halves[half:]
        p1 = pop[h1.min()]
        p2 = pop[h2.min()] if len(h2) else p1

        children = _breed(p1, p2, cfg.offspring_per_generation, cfg.mutation_flips, rng)
        children = _repair_batch(children, inst, order)

        pop = _rank(np.vstack([pop, children]), inst)[: cfg.population_size]
        f = int(pop[0].sum())
        if trace is not None:
            trace.best_counts.append(f)
        if f > best:
            best, stall = f, 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    return pop[0].copy()


def brute_force(inst: KnapsackInstance) -> np.ndarray:
    """Exact optimum by enumeration (ties: less bandwidth, then lexicographic)."""
    n = len(inst)
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} users, got {n}")
    if n == 0:
        return np.zeros(0, dtype=np.int8)
    best_key, best = None, None
    # chunked over the high bits keeps memory bounded
    low = min(n, 16)
    low_bits = ((np.arange(2 ** low)[:, None] >> np.arange(low)[None, :]) & 1).astype(np.int8)
    low_bits = low_bits[:, ::-1]  # column 0 is the most significant of the block
    for high in itertools.product((0, 1), repeat=n - low):
        z = np.hstack([np.broadcast_to(np.array(high, dtype=np.int8), (len(low_bits), n - low)), low_bits])
        bw = z @ inst.weights_bandwidth
        rate = z @ inst.weights_rate
        ok = (bw <= inst.capacity_bandwidth) & (rate <= inst.capacity_rate)
        if not ok.any():
            continue
        zs, bws = z[ok], bw[ok]
        counts = zs.sum(axis=1)
        top = counts == counts.max()
        zs, bws = zs[top], bws[top]
        k = int(np.argmin(bws))  # first minimum is the lexicographically smallest
        key = (-int(counts.max()), float(bws[k]), tuple(zs[k]))
        if best_key is None or key < best_key:
            best_key, best = key, zs[k].copy()
    return best
