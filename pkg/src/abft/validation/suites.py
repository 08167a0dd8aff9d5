from __future__ import annotations

"""Self-consistency suites behind ``abft validate``.

fixed_point     the solved p is a root of f with a sign change around it
balance         closed-form stationary vector sums to 1 and solves pi P = pi
latency_series  500-term latency series agrees with the closed form
oracle          simulator against the exact joint chain on tiny instances
symmetry        exact stationary vector is invariant under station relabelling

The oracle suite runs one statistical test per instance, so its per-test
levels are Bonferroni-corrected to keep the family-wide level at the
configured confidence.
"""

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from abft.analytic import model
from abft.domain.params import Experiment, NetworkConfig, ProtocolParams
from abft.oracle import joint_chain
from abft.sim import runner

logger = logging.getLogger("abft.validation")

FIXED_POINT_GRID = {
    "N": range(4, 33),
    "M": (8, 12, 16),
    "R": range(1, 9),
    "W": range(1, 17),
}
FIXED_POINT_TOL = 1e-12
BRACKET_STEP = 1e-9
SERIES_TERMS = 500
SERIES_PS = tuple(round(0.1 * k, 1) for k in range(1, 10))
MIN_EXPECTED_COUNT = 5.0
SYMMETRY_TOL = 1e-10
# Absorbs power-iteration error when every run gives the same value (zero spread).
ORACLE_SLACK = 1e-9

# (N, M, R, W); every instance stays inside N <= 3, M <= 3, R <= 2, W <= 2.
ORACLE_INSTANCES: tuple[tuple[int, int, int, int], ...] = (
    (1, 2, 1, 1),
    (2, 1, 1, 2),
    (2, 2, 1, 2),
    (2, 2, 2, 2),
    (2, 3, 1, 1),
    (2, 3, 2, 2),
    (3, 2, 1, 2),
    (3, 2, 2, 2),
    (3, 3, 1, 2),
    (3, 3, 2, 1),
)


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
        }


@dataclass
class ValidationReport:
    suites: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def as_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "suites": [s.as_dict() for s in self.suites]}


def check_fixed_point(exp: Experiment) -> SuiteResult:
    result = SuiteResult("fixed_point")
    for N, M, R, W in itertools.product(*FIXED_POINT_GRID.values()):
        params = dataclasses.replace(exp.protocol, M=M, R=R, W=W)
        point = {"N": N, "M": M, "R": R, "W": W}
        try:
            p = model.solve_collision_probability(params, N, tol=FIXED_POINT_TOL)
        except model.SolverError as exc:
            result.failures.append({**point, "error": str(exc)})
            continue
        result.checked += 1
        residual = model.collision_residual(params, N, p)
        below = model.collision_residual(params, N, max(0.0, p - BRACKET_STEP))
        above = model.collision_residual(params, N, min(1.0, p + BRACKET_STEP))
        if abs(residual) > FIXED_POINT_TOL or below > 0.0 or above < 0.0:
            result.failures.append(
                {**point, "p": p, "residual": residual, "f_below": below, "f_above": above}
            )
    return result


def check_balance(exp: Experiment) -> SuiteResult:
    result = SuiteResult("balance")
    tol = exp.validate.balance_tol
    rng = np.random.default_rng(np.random.SeedSequence(exp.network.seed, spawn_key=(1,)))
    for _ in range(exp.validate.random_cases):
        p = float(rng.uniform(0.01, 0.99))
        R = int(rng.integers(1, exp.protocol.R_max + 1))
        W = int(rng.integers(1, exp.protocol.W_max + 1))
        params = dataclasses.replace(exp.protocol, R=R, W=W)
        pi = model.steady_state(params, p).vector()
        P = model.transition_matrix(params, p)
        result.checked += 1
        mass_error = abs(float(pi.sum()) - 1.0)
        balance_error = float(np.max(np.abs(pi @ P - pi)))
        row_error = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
        if mass_error > 1e-12 or balance_error > tol or row_error > 1e-12:
            result.failures.append(
                {
                    "p": p,
                    "R": R,
                    "W": W,
                    "mass_error": mass_error,
                    "balance_error": balance_error,
                    "row_error": row_error,
                }
            )
    return result


def check_latency_series(exp: Experiment) -> SuiteResult:
    result = SuiteResult("latency_series")
    params = exp.protocol
    for p in SERIES_PS:
        result.checked += 1
        closed = model.latency(params, p)
        series = model.latency_series(params, p, SERIES_TERMS)
        head, tail = model.latency_parts(params, p)
        rel = abs(series - closed) / closed
        split = abs(head + tail - closed) / closed
        if rel > exp.validate.latency_rel_tol or split > exp.validate.latency_rel_tol:
            result.failures.append(
                {
                    "p": p,
                    "closed_form": closed,
                    "series": series,
                    "rel_error": rel,
                    "split_error": split,
                }
            )
    return result


def _pooled_chisquare(observed: np.ndarray, expected: np.ndarray) -> tuple[float, int] | None:
    """Chi-squared p-value with sparse bins pooled; None when fewer than 2 bins remain.

    Bins with expected count < 5 are pooled into one; if that pool is itself
    under 5 it is folded into the smallest remaining bin.
    """
    small = expected < MIN_EXPECTED_COUNT
    obs = [float(v) for v in observed[~small]]
    exp = [float(v) for v in expected[~small]]
    pooled_obs, pooled_exp = float(observed[small].sum()), float(expected[small].sum())
    if pooled_exp == 0.0 and pooled_obs > 0.0:
        # Visited a state the exact chain gives zero mass.
        return 0.0, len(obs) + 1
    if pooled_exp > 0.0:
        if pooled_exp < MIN_EXPECTED_COUNT and exp:
            k = int(np.argmin(exp))
            obs[k] += pooled_obs
            exp[k] += pooled_exp
        else:
            obs.append(pooled_obs)
            exp.append(pooled_exp)
    if len(obs) < 2:
        return None
    res = stats.chisquare(np.array(obs), np.array(exp))
    return float(res.pvalue), len(obs)


def check_oracle(
    exp: Experiment,
    instances: Sequence[tuple[int, int, int, int]] = ORACLE_INSTANCES,
    workers: int = 1,
    state_cap: int = joint_chain.DEFAULT_STATE_CAP,
) -> SuiteResult:
    result = SuiteResult("oracle")
    settings = exp.validate
    family = max(1, len(instances))
    alpha = (1.0 - settings.confidence) / family
    z = float(stats.norm.ppf(1.0 - alpha / 2.0))
    net = NetworkConfig(
        N=1,
        bi_count=settings.oracle_bis,
        run_count=settings.oracle_runs,
        seed=exp.network.seed,
        warmup_bi=settings.oracle_warmup_bi,
    )
    for index, (N, M, R, W) in enumerate(instances):
        params = ProtocolParams(
            M=M, R=R, W=W, F=exp.protocol.F, T_BI=exp.protocol.T_BI, T_SSW=exp.protocol.T_SSW
        )
        chain = joint_chain.build(params, N, state_cap=state_cap)
        exact = joint_chain.exact_metrics(chain)
        sim, finals = runner.run_with_final_states(
            params, dataclasses.replace(net, N=N), point_index=index, workers=workers
        )
        result.checked += 1
        values = np.array([m.p_hat_s for m in sim.per_run])
        half_width = z * float(values.std(ddof=1)) / math.sqrt(values.size)
        gap = abs(sim.p_hat_s_emp - exact.p_hat_s)
        detail: dict[str, Any] = {
            "N": N,
            "M": M,
            "R": R,
            "W": W,
            "exact_p_hat_s": exact.p_hat_s,
            "sim_p_hat_s": sim.p_hat_s_emp,
            "half_width": half_width,
        }
        if gap > half_width + ORACLE_SLACK:
            result.failures.append({**detail, "check": "success_probability"})
            continue

        observed = np.bincount([chain.index_of(s) for s in finals], minlength=chain.size)
        pooled = _pooled_chisquare(observed.astype(float), exact.pi * len(finals))
        if pooled is not None and pooled[0] < alpha:
            result.failures.append(
                {**detail, "check": "state_distribution", "p_value": pooled[0], "bins": pooled[1]}
            )
        logger.info(
            "Oracle instance N=%s M=%s R=%s W=%s: exact=%.6f sim=%.6f +/- %.6f",
            N,
            M,
            R,
            W,
            exact.p_hat_s,
            sim.p_hat_s_emp,
            half_width,
        )
    return result


def check_symmetry(
    instances: Sequence[tuple[int, int, int, int]] = ORACLE_INSTANCES,
    state_cap: int = joint_chain.DEFAULT_STATE_CAP,
) -> SuiteResult:
    result = SuiteResult("symmetry")
    for N, M, R, W in instances:
        if N < 2:
            continue
        chain = joint_chain.build(ProtocolParams(M=M, R=R, W=W), N, state_cap=state_cap)
        pi = joint_chain.stationary(chain)
        result.checked += 1
        worst = 0.0
        for i in range(chain.size):
            state = chain.state_at(i)
            for perm in itertools.permutations(state):
                worst = max(worst, abs(pi[i] - pi[chain.index_of(perm)]))
        if worst > SYMMETRY_TOL:
            result.failures.append({"N": N, "M": M, "R": R, "W": W, "max_gap": worst})
    return result


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "fixed_point": check_fixed_point,
    "balance": check_balance,
    "latency_series": check_latency_series,
    "oracle": check_oracle,
    "symmetry": check_symmetry,
}


def run_suites(
    exp: Experiment,
    names: Sequence[str] | None = None,
    workers: int = 1,
    state_cap: int = joint_chain.DEFAULT_STATE_CAP,
    instances: Sequence[tuple[int, int, int, int]] = ORACLE_INSTANCES,
) -> ValidationReport:
    selected = list(names) if names else list(SUITES)
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites: {', '.join(unknown)}")

    suites: list[SuiteResult] = []
    for name in SUITES:
        if name not in selected:
            continue
        if name == "oracle":
            res = check_oracle(exp, instances=instances, workers=workers, state_cap=state_cap)
        elif name == "symmetry":
            res = check_symmetry(instances=instances, state_cap=state_cap)
        else:
            res = SUITES[name](exp)
        level = logging.INFO if res.passed else logging.ERROR
        logger.log(
            level, "Suite %s: %s (%s checks)", name, "pass" if res.passed else "FAIL", res.checked
        )
        suites.append(res)
    return ValidationReport(suites=suites)
