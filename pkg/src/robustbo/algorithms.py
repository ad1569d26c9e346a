"""Bayesian-optimization loops: the standard UCB baseline, the fixed-center
robust variant, and the two-model anchor/adapt robust variant.

One BoState owns one single-threaded loop.  Targets are standardized before
every fit (the standardizer is configurable), acquisition is computed in
standardized space, and the caller accounts regret in raw space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .adversary import AdversaryPolicy, CorruptionBudget, corrupt
from .gp import gp_fit
from .kernels import FactorizationError, KernelSpec, gram_matrix, info_gain, jittered_cho_factor, solve_cho
from .objectives import Objective, observe
from .rcgp import rcgp_fit
from .schedules import (
    AssumptionCase,
    Rkhs,
    anchor_width,
    beta_prime,
    estimate_tc,
    noise_bound,
    robust_beta,
    wrench_width_adaptive,
    wrench_width_fixed,
)
from .weights import build_corrections, c1_bound, cw_from_c1, pimq_params_for_noise, pimq_weights

__all__ = [
    "DomainSpec",
    "BoState",
    "StepRecord",
    "acquisition_value",
    "maximize_acquisition",
    "step_gp_ucb",
    "step_fc",
    "step_a2",
    "run_loop",
    "fit_hyperparameters_loo",
    "standardize_targets",
]

ALGORITHMS = ("gp_ucb", "fc", "a2")

# Consistency factor making the median absolute deviation estimate the
# standard deviation under Gaussian data.
_MAD_SCALE = 1.4826


@dataclass(frozen=True)
class DomainSpec:
    """Search domain: bounds plus the 1-D evaluation grid (when d == 1)."""

    bounds: np.ndarray  # (d, 2)
    grid: Optional[np.ndarray] = None  # (m, d); required for d == 1
    n_starts: int = 64  # multi-start count for d > 1
    coord_grid: int = 33  # per-coordinate resolution for refinement

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @staticmethod
    def from_bounds(bounds, grid_size: int = 1001) -> "DomainSpec":
        bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
        if bounds.shape[0] == 1:
            grid = np.linspace(bounds[0, 0], bounds[0, 1], grid_size).reshape(-1, 1)
            return DomainSpec(bounds, grid)
        return DomainSpec(bounds, None)


def standardize_targets(y, mode: str) -> tuple[float, float]:
    """Location/scale for target standardization.

    "robust" uses median and the scaled median absolute deviation, so a few
    corrupted observations cannot move the constants no matter how extreme
    they are.  "zscore" uses mean/std; "none" is the identity.
    """
    if mode == "none":
        return 0.0, 1.0
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return 0.0, 1.0
    if mode == "zscore":
        loc = float(np.mean(y))
        scale = float(np.std(y))
    elif mode == "robust":
        loc = float(np.median(y))
        scale = _MAD_SCALE * float(np.median(np.abs(y - loc)))
        if not (np.isfinite(scale) and scale > 0):
            scale = float(np.std(y))
    else:
        raise ValueError(f"unknown standardize mode {mode!r}")
    if not (np.isfinite(scale) and scale > 0):
        scale = 1.0
    return loc, scale


@dataclass(frozen=True)
class StepRecord:
    t: int
    x: np.ndarray
    y_clean: float
    y_observed: float
    corrupted: bool
    beta_t: float
    tc_estimate: int


@dataclass
class BoState:
    """Everything one optimization run owns: config, data, schedule, rng."""

    algorithm: str
    objective: Objective
    policy: AdversaryPolicy
    budget: CorruptionBudget
    spec: KernelSpec
    domain: DomainSpec
    case: AssumptionCase
    delta: float
    b_f: float
    horizon: int
    noise_rng: np.random.Generator
    tc_mode: str = "estimate"  # "estimate" | "force_zero"
    a2_width_mode: str = "fixed"  # "fixed" | "adaptive"
    # "initial" freezes robust location/scale on the seed observations, which
    # the corruption channel cannot touch; the running modes re-estimate each
    # step from all observations.
    standardize: str = "robust"  # "robust" | "zscore" | "none" | "initial"
    pimq_policy: str = "schedule"  # "schedule" | "heuristic" | "manual"
    pimq_c: float = 1.0
    pimq_half_width: float = 1.96  # used by the "manual" policy (standardized units)
    heuristic_quantile: float = 0.95
    hyperfit: bool = False
    hyperfit_every: int = 5
    hyperfit_space: Optional[dict] = None
    noise_var_raw: float = field(init=False)

    # Run data (raw space unless noted).
    X: list = field(default_factory=list)
    y_clean: list = field(default_factory=list)
    y_obs: list = field(default_factory=list)
    corrupted: list = field(default_factory=list)
    records: list = field(default_factory=list)
    t: int = 0
    n_seed_obs: int = 0
    _plan: Optional[dict] = field(default=None, repr=False)
    _frozen_std: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        self.noise_var_raw = self.objective.noise_var

    # -- data management -------------------------------------------------

    def add_initial(self, X0: np.ndarray) -> None:
        """Seed observations: never corrupted, drawn from the shared noise stream."""
        for x in np.atleast_2d(X0):
            y = observe(self.objective, x, self.noise_rng)
            self.X.append(np.atleast_1d(np.asarray(x, dtype=float)))
            self.y_clean.append(y)
            self.y_obs.append(y)
            self.corrupted.append(False)
        self.n_seed_obs = len(self.X)
        self._plan = None

    def _data(self):
        n = len(self.X)
        X = np.array(self.X, dtype=float).reshape(n, self.objective.dim)
        return X, np.asarray(self.y_obs, dtype=float)

    # -- per-step model preparation ---------------------------------------

    def _location_scale(self, y_raw: np.ndarray) -> tuple[float, float]:
        if self.standardize != "initial":
            return standardize_targets(y_raw, self.standardize)
        if self._frozen_std is None:
            if self.n_seed_obs == 0:
                return 0.0, 1.0
            # The seed observations bypass the corruption channel, so the
            # plain mean/std is already outlier-proof here and is far better
            # conditioned than median/MAD on a handful of points.
            self._frozen_std = standardize_targets(y_raw[: self.n_seed_obs], "zscore")
        return self._frozen_std

    def _heuristic_width(self, ys: np.ndarray) -> float:
        # 95% quantile of |y - median| on standardized targets, taken at the
        # next-lowest order statistic so a sub-5% corrupted fraction cannot
        # inflate it.
        dev = np.abs(ys - np.median(ys))
        return float(np.quantile(dev, self.heuristic_quantile, method="lower"))

    def _prepare(self) -> dict:
        """Fit model(s) for the upcoming step and cache acquisition pieces."""
        key = len(self.X)
        if self._plan is not None and self._plan["key"] == key:
            return self._plan
        t = self.t + 1
        X, y_raw = self._data()
        loc, scale = self._location_scale(y_raw)
        ys = (y_raw - loc) / scale
        nv = self.noise_var_raw / scale**2
        if nv <= 0:
            nv = 1e-12  # noiseless objectives still need a proper Gram regularizer
        sigma = math.sqrt(nv)

        if self.hyperfit and self.hyperfit_space and len(ys) >= 3 and (t - 1) % self.hyperfit_every == 0:
            params0 = pimq_params_for_noise(lambda q: np.zeros(len(np.atleast_2d(q))), self._schedule_width(sigma), self.pimq_c, nv)
            wp = None if self.algorithm == "gp_ucb" else params0
            self.spec, nv = fit_hyperparameters_loo(self.algorithm, (X, ys), wp, self.hyperfit_space)
            sigma = math.sqrt(nv)

        gamma_t = info_gain(self.spec, X, nv) if isinstance(self.case, Rkhs) and len(ys) else 0.0
        bp = beta_prime(self.case, t, self.delta / 2.0, gamma_t)
        n_t = noise_bound(self.case, sigma, self.horizon, self.delta / 2.0)
        kappa = self.spec.outputscale

        plan = {"key": key, "t": t, "loc": loc, "scale": scale, "nv": nv, "beta_prime": bp}

        if self.algorithm == "gp_ucb":
            model = gp_fit(X, ys, self.spec, nv)
            plan.update(model=model, beta=bp, tc=0)
            self._plan = plan
            return plan

        # Plateau width for the zero-centered model.
        if self.pimq_policy == "heuristic" and len(ys):
            l_fc = self._heuristic_width(ys)
        elif self.pimq_policy == "manual":
            l_fc = self.pimq_half_width
        else:
            l_fc = anchor_width(self.b_f, kappa, n_t)
        zero_center = lambda q: np.zeros(np.atleast_2d(q).shape[0])  # noqa: E731
        # Computable stand-in for the center-to-clean-mean gap in the C1 bound.
        sup_delta_fc = math.sqrt(kappa) * (math.sqrt(bp) + self.b_f)

        if self.algorithm == "fc":
            params = pimq_params_for_noise(zero_center, l_fc, self.pimq_c, nv)
            model = rcgp_fit(X, ys, self.spec, nv, params)
            tc = estimate_tc(ys, np.full(len(ys), l_fc)) if len(ys) else 0
            c_w = cw_from_c1(c1_bound(params, nv, sup_delta_fc), nv)
            tc_eff = 0 if self.tc_mode == "force_zero" else tc
            plan.update(model=model, beta=robust_beta(bp, c_w, tc_eff), tc=tc)
            self._plan = plan
            return plan

        # a2: anchor refits first, then the wrench with the updated center.
        anchor_params = pimq_params_for_noise(zero_center, l_fc, self.pimq_c, nv)
        anchor = rcgp_fit(X, ys, self.spec, nv, anchor_params)
        tc_anchor = estimate_tc(ys, np.full(len(ys), l_fc)) if len(ys) else 0
        tc_eff = 0 if self.tc_mode == "force_zero" else tc_anchor
        c_w_a = cw_from_c1(c1_bound(anchor_params, nv, sup_delta_fc), nv)
        bp_end = beta_prime(self.case, self.horizon, self.delta / 2.0, gamma_t)
        beta_anchor = robust_beta(bp_end, c_w_a, tc_eff)

        def wrench_center(q):
            mean, _ = anchor.predict(q)
            return mean

        l_wrench_sup = wrench_width_fixed(beta_anchor, kappa, n_t)
        if self.pimq_policy in ("heuristic", "manual") and len(ys):
            l_wrench = l_fc
        elif self.a2_width_mode == "adaptive":
            beta_anchor_t = robust_beta(bp, c_w_a, tc_eff)

            def l_wrench(q):
                _, var = anchor.predict(q)
                return wrench_width_adaptive(beta_anchor_t, np.sqrt(var), n_t)

        else:
            l_wrench = l_wrench_sup

        wrench_params = pimq_params_for_noise(wrench_center, l_wrench, self.pimq_c, nv)
        wrench = rcgp_fit(X, ys, self.spec, nv, wrench_params)
        if len(ys):
            resid = ys - wrench_params.center_at(X)
            tc = estimate_tc(resid, wrench_params.width_at(X))
        else:
            tc = 0
        tc_eff = 0 if self.tc_mode == "force_zero" else tc
        # C1 for the wrench uses the scalar width bound and the anchor's
        # certified deviation as the center gap.
        c1_params = pimq_params_for_noise(wrench_center, l_wrench if not callable(l_wrench) else l_wrench_sup, self.pimq_c, nv)
        sup_delta_w = c_w_a * math.sqrt(tc_eff) * math.sqrt(kappa)
        c_w_w = cw_from_c1(c1_bound(c1_params, nv, sup_delta_w), nv)
        plan.update(
            model=wrench,
            anchor=anchor,
            wrench_center=wrench_center,
            beta=robust_beta(bp, c_w_w, tc_eff),
            tc=tc,
        )
        self._plan = plan
        return plan

    def _schedule_width(self, sigma: float) -> float:
        n_t = noise_bound(self.case, sigma, self.horizon, self.delta / 2.0)
        return anchor_width(self.b_f, self.spec.outputscale, n_t)


def _ucb(mean: np.ndarray, var: np.ndarray, beta: float) -> np.ndarray:
    return mean + math.sqrt(beta) * np.sqrt(var)


def acquisition_value(state: BoState, x) -> float:
    """Upper-confidence acquisition at a single point, in standardized space."""
    plan = state._prepare()
    mean, var = plan["model"].predict(np.atleast_2d(np.asarray(x, dtype=float)))
    return float(_ucb(mean, var, plan["beta"])[0])


def _acquisition_batch(state: BoState, Xq: np.ndarray) -> np.ndarray:
    plan = state._prepare()
    mean, var = plan["model"].predict(Xq)
    return _ucb(mean, var, plan["beta"])


def maximize_acquisition(state: BoState, domain: DomainSpec) -> np.ndarray:
    """Argmax of the acquisition: grid scan in 1-D, multi-start coordinate
    refinement otherwise.  Ties break toward the lowest grid index."""
    if domain.grid is not None:
        if domain.grid.shape[0] == 0:
            raise ValueError("empty acquisition domain")
        vals = _acquisition_batch(state, domain.grid)
        return domain.grid[int(np.argmax(vals))].copy()

    d = domain.dim
    starts = qmc.Sobol(d, scramble=False).random(domain.n_starts)
    starts = qmc.scale(starts, domain.bounds[:, 0], domain.bounds[:, 1])
    best_x, best_v = None, -np.inf
    for x0 in starts:
        x = x0.copy()
        for _ in range(2):  # coordinate sweeps
            for j in range(d):
                cand = np.tile(x, (domain.coord_grid, 1))
                cand[:, j] = np.linspace(domain.bounds[j, 0], domain.bounds[j, 1], domain.coord_grid)
                vals = _acquisition_batch(state, cand)
                x = cand[int(np.argmax(vals))]
        v = float(_acquisition_batch(state, x.reshape(1, -1))[0])
        if v > best_v:
            best_x, best_v = x, v
    return best_x


def _step(state: BoState) -> tuple[np.ndarray, float]:
    plan = state._prepare()
    t = plan["t"]
    try:
        x = maximize_acquisition(state, state.domain)
    except FactorizationError as exc:
        raise FactorizationError(f"step {t}: {exc}") from exc
    y_clean = observe(state.objective, x, state.noise_rng)
    y_observed, flag = corrupt(state.policy, state.budget, x, y_clean, t)
    state.X.append(np.atleast_1d(x))
    state.y_clean.append(y_clean)
    state.y_obs.append(y_observed)
    state.corrupted.append(flag)
    state.records.append(StepRecord(t, np.atleast_1d(x), y_clean, y_observed, flag, plan["beta"], plan["tc"]))
    state.t = t
    state._plan = None
    return x, y_observed


def step_gp_ucb(state: BoState):
    assert state.algorithm == "gp_ucb"
    return _step(state)


def step_fc(state: BoState):
    assert state.algorithm == "fc"
    return _step(state)


def step_a2(state: BoState):
    assert state.algorithm == "a2"
    return _step(state)


def run_loop(state: BoState, n_iterations: int) -> list[StepRecord]:
    for _ in range(n_iterations):
        _step(state)
    return state.records


def fit_hyperparameters_loo(model_kind: str, data, weight_params, search_space: dict):
    """Pick kernel hyperparameters and noise by weighted leave-one-out error.

    Minimizes sum_i wbar_i * (y_i - mu_{-i}(x_i))^2 over the Cartesian grid
    in search_space, with leave-one-out means from the rank-one identity on
    the regularized Gram matrix.  Weights come from the supplied weight
    function (uniform when None or for the plain-GP model kind), and for the
    robust model kinds the leave-one-out fit itself uses the downweighted
    system, so an extreme point neither counts in the score nor contaminates
    its neighbors' held-out predictions.
    """
    X, y = data
    X = np.asarray(X, dtype=float)
    if X.ndim <= 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.shape[0]
    if X.shape[0] != n:
        raise ValueError("X and y must have equal length")
    if n < 3:
        raise ValueError("leave-one-out fitting needs at least 3 points")

    family = search_space.get("family", "rbf")
    ls_grid = search_space.get("lengthscale")
    os_grid = search_space.get("outputscale", [1.0])
    nv_grid = search_space.get("noise_var")
    if not ls_grid or not nv_grid:
        raise ValueError("search_space must provide lengthscale and noise_var grids")

    robust = model_kind != "gp_ucb" and weight_params is not None
    if robust:
        wbar = pimq_weights(weight_params, X, y) / weight_params.w_max
    else:
        wbar = np.ones(n)

    best = None
    for ls, os_, nv in product(ls_grid, os_grid, nv_grid):
        if robust:
            corr = build_corrections(weight_params, nv, X, y)
            jw, mw = corr.jw, corr.mw
        else:
            jw, mw = np.ones(n), np.zeros(n)
        try:
            spec = KernelSpec(family, ls, os_)
            A = gram_matrix(spec, X)
            A[np.diag_indices_from(A)] += nv * jw
            chol = jittered_cho_factor(A, spec.outputscale)
        except (ValueError, FactorizationError):
            continue
        alpha = solve_cho(chol, y - mw)
        Ainv_diag = np.diag(solve_cho(chol, np.eye(n)))
        if np.any(Ainv_diag <= 1e-12):
            continue
        loo_resid = alpha / Ainv_diag
        objective = float(np.sum(wbar * loo_resid**2))
        if best is None or objective < best[0]:
            best = (objective, spec, float(nv))
    if best is None:
        raise ValueError("no viable candidate in the hyperparameter grid")
    return best[1], best[2]
