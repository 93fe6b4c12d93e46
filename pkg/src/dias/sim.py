"""Synchronous multi-robot simulation loop for DIAS and the GreedyBO baseline."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import env, ergodic, gp
from .controller import ControllerConfig, Mode, controller_step, source_seeking_step, visited_mask
from .metrics import composite_mean, wrmse
from .voronoi import Tessellation, update_voronoi

log = logging.getLogger(__name__)

ALGORITHMS = ("dias", "greedybo")


class SimulationError(RuntimeError):
    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"iteration {iteration}: {cause!r}")
        self.iteration = iteration


@dataclass(frozen=True)
class SimConfig:
    # domain
    width: float = 10.0
    height: float = 10.0
    grid_nx: int = 50
    grid_ny: int = 50
    # robots
    n_robots: int = 3
    initial_positions: Optional[tuple] = None
    start_region: str = "corner"        # "corner" or "uniform"
    start_region_size: float = 3.0
    # sources
    n_sources: int = 3
    sources: Optional[tuple] = None     # ((x, y, intensity, spread), ...) overrides random layout
    intensity_min: float = 0.16
    intensity_max: float = 0.20
    spread: float = 1.0
    min_separation: float = 2.0
    source_margin: float = 1.0
    noise_std: float = 0.01
    # algorithm
    algorithm: str = "dias"
    found_radius: float = 0.4
    u_max: float = 0.5
    k_max: int = 10
    t_c: int = 5
    alpha: float = 1.0
    beta: float = 5.0
    tau: float = 0.08
    exclusion_radius: float = 0.8
    lcb_use_std: bool = False
    exclude_visited: bool = True
    ucb_coefficient: float = 3.0
    cold_start: int = 3
    share_samples: bool = False         # Voronoi neighbours exchange their newest sample each iteration
    # gp
    sigma_n0: float = 0.01
    sigma_f0: float = 0.1
    length_scale0: float = 1.0
    sigma_n_bounds: tuple = (1e-4, 0.1)
    sigma_f_bounds: tuple = (0.01, 1.0)
    length_scale_bounds: tuple = (0.1, 10.0)
    train_every: int = 5
    gp_restarts: int = 3
    gp_max_train_points: Optional[int] = 150
    # run control
    max_iterations: int = 400
    min_iterations: int = 0
    seed: int = 0

    def __post_init__(self):
        # normalise list-valued fields so configs compare and hash consistently
        for name in ("initial_positions", "sources"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(tuple(float(v) for v in row) for row in val))
        for name in ("sigma_n_bounds", "sigma_f_bounds", "length_scale_bounds"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self):
        errors = []
        if self.n_robots < 1:
            errors.append("n_robots must be >= 1")
        n_src = len(self.sources) if self.sources is not None else self.n_sources
        if n_src < 1:
            errors.append("need at least one source")
        if self.found_radius <= 0:
            errors.append("found_radius must be positive")
        if self.max_iterations < 1:
            errors.append("max_iterations must be >= 1")
        if self.algorithm not in ALGORITHMS:
            errors.append(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.u_max <= 0:
            errors.append("u_max must be positive")
        if self.t_c < 1 or self.k_max < 1 or self.train_every < 1:
            errors.append("t_c, k_max and train_every must be >= 1")
        if self.start_region not in ("corner", "uniform"):
            errors.append(f"unknown start_region {self.start_region!r}")
        if self.initial_positions is not None and len(self.initial_positions) != self.n_robots:
            errors.append("initial_positions must list one point per robot")
        if errors:
            raise ValueError("invalid SimConfig: " + "; ".join(errors))

    @property
    def domain(self) -> env.Domain:
        return env.Domain(self.width, self.height, self.grid_nx, self.grid_ny)

    @property
    def controller(self) -> ControllerConfig:
        return ControllerConfig(self.beta, self.tau, self.exclusion_radius, self.lcb_use_std, self.exclude_visited)

    @property
    def theta0(self) -> gp.Hyperparams:
        return gp.Hyperparams(self.sigma_n0, self.sigma_f0, self.length_scale0)

    @property
    def gp_bounds(self) -> dict:
        return {"sigma_n": self.sigma_n_bounds, "sigma_f": self.sigma_f_bounds,
                "length_scale": self.length_scale_bounds}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(**d)


@dataclass
class RobotState:
    id: int
    position: np.ndarray
    theta: gp.Hyperparams
    stats: ergodic.TrajectoryStats
    trajectory: list = field(default_factory=list)
    X: list = field(default_factory=list)
    y: list = field(default_factory=list)
    model: Optional[gp.GpModel] = None
    gamma: float = 0.0
    mode: Mode = Mode.SENSING
    trained: bool = False
    visited: Optional[np.ndarray] = None    # grid mask of cells within found_radius of own samples
    train_rng: Optional[np.random.Generator] = None


@dataclass
class IterationRecord:
    iteration: int
    positions: list            # post-move positions, one [x, y] per robot
    modes: list
    commands: list
    new_found: list
    found_total: int
    wrmse_robot: list
    wrmse_pooled: float
    ergodic_metric: float
    found_by: list = field(default_factory=list)   # robot credited with each entry of new_found


@dataclass
class SimState:
    config: SimConfig
    field: env.ScalarField
    measurement: env.MeasurementModel
    basis: ergodic.FourierBasis
    robots: list
    phi_grid: np.ndarray
    found: list = field(default_factory=list)   # source indices in discovery order
    iteration: int = 0
    all_found_at: Optional[int] = None

    @property
    def n_sources(self) -> int:
        return len(self.field.sources)

    @property
    def done(self) -> bool:
        cfg = self.config
        if self.iteration >= cfg.max_iterations:
            return True
        return self.all_found_at is not None and self.iteration >= cfg.min_iterations

    def found_positions(self) -> np.ndarray:
        return self.field.positions[self.found].reshape(-1, 2)


def _initial_positions(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.initial_positions is not None:
        return np.array(cfg.initial_positions, dtype=float)
    if cfg.start_region == "corner":
        hi = np.array([min(cfg.start_region_size, cfg.width), min(cfg.start_region_size, cfg.height)])
    else:
        hi = np.array([cfg.width, cfg.height])
    return rng.random((cfg.n_robots, 2)) * hi


def init_state(cfg: SimConfig) -> SimState:
    domain = cfg.domain
    ss = np.random.SeedSequence(cfg.seed)
    layout_ss, start_ss, meas_ss, train_ss = ss.spawn(4)
    if cfg.sources is not None:
        sources = [env.Source((s[0], s[1]), s[2], s[3] if len(s) > 3 else cfg.spread) for s in cfg.sources]
    else:
        sources = env.random_layout(np.random.default_rng(layout_ss), domain, cfg.n_sources,
                                    (cfg.intensity_min, cfg.intensity_max), cfg.spread,
                                    cfg.min_separation, cfg.source_margin)
    field_ = env.ScalarField(tuple(sources), domain)
    starts = _initial_positions(cfg, np.random.default_rng(start_ss))
    basis = ergodic.FourierBasis(domain, cfg.k_max)
    meas_children = meas_ss.spawn(cfg.n_robots)
    measurement = env.MeasurementModel(cfg.noise_std, {i: np.random.default_rng(c) for i, c in enumerate(meas_children)})
    robots = [
        RobotState(i, domain.check(p).copy(), cfg.theta0, ergodic.TrajectoryStats.empty(basis),
                   train_rng=np.random.default_rng(c))
        for i, (p, c) in enumerate(zip(starts, train_ss.spawn(cfg.n_robots)))
    ]
    return SimState(cfg, field_, measurement, basis, robots, env.field_on_grid(field_))


def greedy_bo_step(position, mu_cell, sd_cell, cell_points, ucb_coefficient: float, u_max: float,
                   domain: env.Domain):
    """Step toward the highest UCB point among the robot's cell points (first index wins ties)."""
    if len(cell_points) == 0:
        return np.zeros(2), None
    k = int(np.argmax(np.asarray(mu_cell) + ucb_coefficient * np.asarray(sd_cell)))
    target = np.asarray(cell_points[k], dtype=float)
    return source_seeking_step(position, target, u_max, domain), target


def _update_model(robot: RobotState, cfg: SimConfig, t: int):
    n = len(robot.y)
    if n >= 2 and (t % cfg.train_every == 0 or not robot.trained):
        robot.theta = gp.train(np.array(robot.X), np.array(robot.y), robot.theta, cfg.gp_bounds,
                               cfg.gp_restarts, robot.train_rng, cfg.gp_max_train_points)
        robot.trained = True
    robot.model = gp.fit(np.array(robot.X), np.array(robot.y), robot.theta)


def _sense(state: SimState, robot: RobotState) -> float:
    """Take this iteration's sample; returns the model variance at the sampling point beforehand."""
    cfg, domain = state.config, state.basis.domain
    x = robot.position
    if robot.model is None:
        var_here = robot.theta.sigma_f**2
    else:
        var_here = float(gp.predict(robot.model, x[None, :])[1][0])
    robot.X.append(x.copy())
    robot.y.append(env.sample(state.field, state.measurement, x, robot.id))
    robot.trajectory.append(x.copy())
    near = visited_mask(domain, x, cfg.found_radius)
    robot.visited = near if robot.visited is None else robot.visited | near
    robot.stats = ergodic.update_trajectory_stats(robot.stats, x, 1.0, state.basis)
    return var_here


def _estimate(state: SimState, robot: RobotState, t: int, var_here: float, need_full_var: bool, cell_mask):
    cfg, domain = state.config, state.basis.domain
    _update_model(robot, cfg, t)
    centers = domain.cell_centers()
    shape = (domain.grid_ny, domain.grid_nx)
    if need_full_var:
        mu, var = gp.predict(robot.model, centers)
        mu, var = mu.reshape(shape), var.reshape(shape)
    else:
        mu = gp.predict(robot.model, centers, return_var=False)[0].reshape(shape)
        var = np.full(shape, np.nan)
        idx = np.flatnonzero(cell_mask)
        if len(idx):
            var.ravel()[idx] = gp.predict(robot.model, centers[idx])[1]
    eid = ergodic.compute_eid(mu, np.nan_to_num(var), robot.gamma, cfg.alpha) if need_full_var else None
    robot.gamma = ergodic.update_gamma(robot.gamma, var_here)
    return mu, var, eid


def _share_samples(robots, tess: Tessellation):
    """Give every robot its Voronoi neighbours' newest sample (off by default)."""
    fresh = [(r.X[-1], r.y[-1]) for r in robots]
    for r in robots:
        for j in np.flatnonzero(tess.adjacency[r.id]):
            r.X.append(fresh[j][0].copy())
            r.y.append(fresh[j][1])


def step(state: SimState) -> IterationRecord:
    """Advance every robot by one synchronous iteration (mutates ``state``)."""
    if state.done:
        raise RuntimeError("simulation already terminated")
    t = state.iteration + 1
    try:
        return _step(state, t)
    except Exception as exc:  # attach the iteration index
        raise SimulationError(t, exc) from exc


def _step(state: SimState, t: int) -> IterationRecord:
    cfg, domain, basis = state.config, state.basis.domain, state.basis
    robots = state.robots
    tess: Tessellation = update_voronoi([r.position for r in robots], domain)
    dias = cfg.algorithm == "dias"

    var_here = [_sense(state, r) for r in robots]
    if cfg.share_samples:
        _share_samples(robots, tess)
    mus, vars_, I_local, c_local = [], [], [], []
    for r in robots:
        mu, var, eid = _estimate(state, r, t, var_here[r.id], dias, tess.mask(r.id))
        mus.append(mu)
        vars_.append(var)
        if dias:
            I_local.append(ergodic.fourier_coeffs_of_field(ergodic.normalize_density(eid.I_grid, domain), basis))
        c_local.append(r.stats.c_k)

    found_pos = state.found_positions()
    commands, modes = [], []
    if dias:
        I_bar = ergodic.consensus_round(np.array(I_local), tess.adjacency, cfg.t_c)
        c_bar = ergodic.consensus_round(np.array(c_local), tess.adjacency, cfg.t_c)
        for r in robots:
            mode, u, _ = controller_step(r.position, mus[r.id], vars_[r.id], tess.mask(r.id), found_pos,
                                         I_bar[r.id], c_bar[r.id], basis, cfg.controller, cfg.u_max,
                                         force_sensing=t <= cfg.cold_start,
                                         visited=r.visited if cfg.exclude_visited else None)
            modes.append(mode)
            commands.append(u)
        team_metric = ergodic.ergodic_metric(np.mean(I_local, axis=0), np.mean(c_local, axis=0), basis.weights)
    else:
        centers = domain.cell_centers()
        for r in robots:
            idx = np.flatnonzero(tess.mask(r.id))
            u, _ = greedy_bo_step(r.position, mus[r.id].ravel()[idx], np.sqrt(vars_[r.id].ravel()[idx]),
                                  centers[idx], cfg.ucb_coefficient, cfg.u_max, domain)
            modes.append(Mode.SEEKING)
            commands.append(u)
        team_metric = float("nan")

    # dynamics and source identification happen after every robot has decided
    new_found, found_by = [], []
    for r, u, mode in zip(robots, commands, modes):
        sampled = r.position
        r.position = domain.clip(r.position + u)
        r.mode = mode
        # the sampling point counts too; it only differs from the last post-move check at t = 1
        for q in (sampled, r.position):
            hits = env.check_found(state.field.sources, state.found, q, cfg.found_radius)
            state.found.extend(hits)
            new_found.extend(hits)
            found_by.extend([r.id] * len(hits))
    state.iteration = t
    if state.all_found_at is None and len(state.found) == state.n_sources:
        state.all_found_at = t

    wr = [wrmse(m, state.phi_grid) for m in mus]
    pooled = wrmse(composite_mean(mus, tess.cell_of_grid), state.phi_grid)
    return IterationRecord(
        iteration=t,
        positions=[r.position.tolist() for r in robots],
        modes=[m.value for m in modes],
        commands=[np.asarray(u).tolist() for u in commands],
        new_found=[int(j) for j in new_found],
        found_total=len(state.found),
        wrmse_robot=wr,
        wrmse_pooled=pooled,
        ergodic_metric=team_metric,
        found_by=found_by,
    )


@dataclass
class RunResult:
    config: SimConfig
    summary: dict
    records: list
    initial_positions: list
    sources: list


def run(config: SimConfig) -> RunResult:
    state = init_state(config)
    initial = [r.position.tolist() for r in state.robots]
    records = []
    while not state.done:
        records.append(step(state))
    summary = {
        "algorithm": config.algorithm,
        "seed": config.seed,
        "n_robots": config.n_robots,
        "n_sources": state.n_sources,
        "iterations_run": state.iteration,
        "iterations_to_all_found": state.all_found_at,
        "dnf": state.all_found_at is None,
        "found_total": len(state.found),
        "found_order": [int(j) for j in state.found],
    }
    log.info("run seed=%s algo=%s -> %s", config.seed, config.algorithm, state.all_found_at or "DNF")
    sources = [[*s.position, s.intensity, s.spread] for s in state.field.sources]
    return RunResult(config, summary, records, initial, sources)


def trial_iterations(summary: dict, max_iterations: int) -> int:
    """Iterations charged to a trial; DNFs count as the cap."""
    n = summary["iterations_to_all_found"]
    return max_iterations if n is None else n


def aggregate(summaries: list, max_iterations: int) -> dict:
    its = np.array([trial_iterations(s, max_iterations) for s in summaries], dtype=float)
    return {
        "n_trials": len(summaries),
        "mean_iterations": float(its.mean()),
        "std_iterations": float(its.std()),
        "dnf_count": int(sum(s["dnf"] for s in summaries)),
        "dnf_seeds": [s["seed"] for s in summaries if s["dnf"]],
        "iterations": [int(v) for v in its],
    }


def run_batch(config: SimConfig, n_trials: int, seeds=None, keep_results: bool = True):
    """Independent trials with per-trial layouts and starts; returns (results, aggregate)."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    seeds = list(seeds) if seeds is not None else [config.seed + i for i in range(n_trials)]
    if len(seeds) != n_trials:
        raise ValueError("need one seed per trial")
    results = [run(replace(config, seed=int(s))) for s in seeds]
    agg = aggregate([r.summary for r in results], config.max_iterations)
    agg["algorithm"] = config.algorithm
    return (results if keep_results else None), agg
