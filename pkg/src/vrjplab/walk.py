"""Reinforced jump process, its conductance skeleton, and network diagnostics.

The continuous-time walk jumps from i to j at rate W_ij (1 + L_j(t)) where
L_j is the time accumulated at j so far.  Between jumps every L_j with j not
the current vertex is frozen, so holding times are exponential at the frozen
total rate and the jump target is categorical — the simulation is exact and
event-driven.

Averaged over the environment, the walk's discrete-time skeleton is a random
conductance model with edge conductance C_ij = W_ij e^{u_i + u_j} built from
the field pinned at the starting vertex.  Escape probabilities then reduce to
electrical quantities: P_a(hit z before returning to a) equals the effective
conductance between a and z divided by the total conductance at a.  Exact
linear solves are the primary route; simulated walks serve as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .betafield import as_generator, sample_beta_sequential
from .errors import NumericalError
from .greens import UField, ufield_from_sample

DEFAULT_MAX_EVENTS = 1_000_000


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant path: visited vertices, jump times, local times at stop."""

    states: np.ndarray  # vertex after each event; states[0] is the start
    jump_times: np.ndarray  # strictly increasing, one per jump
    local_times: np.ndarray  # per-vertex occupation at stop
    elapsed: float
    truncated: bool = False

    def __post_init__(self) -> None:
        for name in ("states", "jump_times", "local_times"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)


def simulate_vrjp(
    graph,
    start: int,
    stop: tuple[str, float | int],
    rng,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Trajectory:
    """Run the reinforced jump process until a stop condition.

    ``stop`` is ("hit", target_vertex) or ("horizon", time).  If neither is
    reached within ``max_events`` jumps the trajectory is returned with its
    ``truncated`` flag set — never silently.
    """
    gen = as_generator(rng)
    w = graph.weight_matrix()
    n = graph.n_vertices
    if not 0 <= start < n:
        raise ValueError(f"start vertex {start} out of range")
    kind, arg = stop
    if kind not in ("hit", "horizon"):
        raise ValueError(f"unknown stop condition {kind!r}")
    if kind == "hit" and not 0 <= int(arg) < n:
        raise ValueError(f"hit target {arg} out of range")

    local = np.zeros(n)
    states = [start]
    jump_times: list[float] = []
    t = 0.0
    here = start
    truncated = False

    if kind == "hit" and here == int(arg):
        return Trajectory(
            states=np.array(states), jump_times=np.array([]), local_times=local,
            elapsed=0.0,
        )

    for _ in range(max_events):
        rates = w[here] * (1.0 + local)
        rates[here] = 0.0
        total = rates.sum()
        if total <= 0.0:
            raise NumericalError(f"vertex {here} has no outgoing rate")
        hold = gen.exponential(1.0 / total)
        if kind == "horizon" and t + hold >= arg:
            local[here] += arg - t
            t = float(arg)
            return Trajectory(
                states=np.array(states), jump_times=np.array(jump_times),
                local_times=local, elapsed=t,
            )
        t += hold
        local[here] += hold
        here = int(np.searchsorted(np.cumsum(rates), gen.random() * total, side="right"))
        states.append(here)
        jump_times.append(t)
        if kind == "hit" and here == int(arg):
            return Trajectory(
                states=np.array(states), jump_times=np.array(jump_times),
                local_times=local, elapsed=t,
            )
    truncated = True
    return Trajectory(
        states=np.array(states), jump_times=np.array(jump_times),
        local_times=local, elapsed=t, truncated=truncated,
    )


class ConductanceNetwork:
    """Symmetric edge conductances with per-vertex totals pi_i = sum_j C_ij."""

    def __init__(self, conductance: np.ndarray):
        c = np.asarray(conductance, dtype=float)
        if not np.allclose(c, c.T):
            raise ValueError("conductances must be symmetric")
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 0.0)
        if np.any(c < 0.0):
            raise ValueError("conductances must be nonnegative")
        c.flags.writeable = False
        self.conductance = c
        self.pi = c.sum(axis=1)
        if np.any(self.pi <= 0.0):
            raise ValueError("every vertex needs positive total conductance")
        self.n_vertices = c.shape[0]

    def transition_matrix(self) -> np.ndarray:
        return self.conductance / self.pi[:, None]


def conductances(ufield: UField, graph) -> ConductanceNetwork:
    """Edge conductances C_ij = W_ij e^{u_i + u_j}, formed in the log domain."""
    w = graph.weight_matrix()
    u = ufield.u
    with np.errstate(divide="ignore"):
        logc = np.log(w) + u[:, None] + u[None, :]
    c = np.exp(logc)
    if not np.all(np.isfinite(c[w > 0])):
        raise NumericalError("conductances overflowed despite log-domain guard")
    return ConductanceNetwork(c)


def skeleton_walk(
    network: ConductanceNetwork,
    start: int,
    stop: tuple[str, float | int],
    rng,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> Trajectory:
    """Discrete-time chain with transition probabilities C_ij / pi_i.

    ``stop`` is ("hit", target) or ("horizon", n_steps); jump times count
    steps, local times count visits.
    """
    gen = as_generator(rng)
    p_cum = np.cumsum(network.conductance, axis=1)
    totals = p_cum[:, -1]
    n = network.n_vertices
    kind, arg = stop
    if kind not in ("hit", "horizon"):
        raise ValueError(f"unknown stop condition {kind!r}")
    here = start
    states = [here]
    visits = np.zeros(n)
    visits[here] += 1
    limit = int(arg) if kind == "horizon" else max_events
    for step in range(1, limit + 1):
        here = int(np.searchsorted(p_cum[here], gen.random() * totals[here], side="right"))
        states.append(here)
        visits[here] += 1
        if kind == "hit" and here == int(arg):
            return Trajectory(
                states=np.array(states), jump_times=np.arange(1.0, step + 1.0),
                local_times=visits, elapsed=float(step),
            )
    return Trajectory(
        states=np.array(states), jump_times=np.arange(1.0, len(states) * 1.0),
        local_times=visits, elapsed=float(len(states) - 1),
        truncated=(kind == "hit"),
    )


def _dirichlet_voltage(network: ConductanceNetwork, a: int, z: int) -> np.ndarray:
    """Voltages with v[a] = 1, v[z] = 0, harmonic elsewhere."""
    if a == z:
        raise ValueError("source and sink must differ")
    n = network.n_vertices
    c = network.conductance
    interior = [v for v in range(n) if v not in (a, z)]
    volt = np.zeros(n)
    volt[a] = 1.0
    if interior:
        lap = np.diag(network.pi[interior]) - c[np.ix_(interior, interior)]
        rhs = c[interior, a]
        try:
            x = np.linalg.solve(lap, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("network is singular between the chosen terminals") from exc
        volt[interior] = x
    return volt


def effective_conductance(network: ConductanceNetwork, a: int, z: int) -> float:
    """Current out of ``a`` at unit voltage between ``a`` and ``z``."""
    volt = _dirichlet_voltage(network, a, z)
    return float(network.conductance[a] @ (volt[a] - volt))


def effective_resistance(network: ConductanceNetwork, a: int, z: int) -> float:
    return 1.0 / effective_conductance(network, a, z)


def harmonic_unit_flow(network: ConductanceNetwork, a: int, z: int) -> np.ndarray:
    """Antisymmetric edge flow theta_ij of total strength 1 from a to z."""
    volt = _dirichlet_voltage(network, a, z)
    raw = network.conductance * (volt[:, None] - volt[None, :])
    return raw / raw[a].sum()


def flow_energy(network: ConductanceNetwork, theta: np.ndarray) -> float:
    """Energy sum_e theta_e^2 / C_e of a flow (each edge counted once).

    For the harmonic unit flow the energy equals the effective resistance;
    any other unit flow has larger energy.
    """
    c = network.conductance
    mask = np.triu(c > 0.0, k=1)
    return float((theta[mask] ** 2 / c[mask]).sum())


def escape_probability(network: ConductanceNetwork, a: int, z: int) -> float:
    """Exact P_a(hit z before returning to a) = C_eff(a, z) / pi_a."""
    return effective_conductance(network, a, z) / float(network.pi[a])


def environment_escape_probability(graph, start: int, target: int, rng) -> float:
    """Escape probability of one sampled environment, pinned at the start."""
    sample = sample_beta_sequential(graph, rng)
    field = ufield_from_sample(sample, pin=start)
    return escape_probability(conductances(field, graph), start, target)


@dataclass(frozen=True)
class EscapeSummary:
    n: int
    median: float
    q25: float
    q75: float
    mean: float


def escape_statistics(graph, start: int, target: int, rng, replicas: int) -> EscapeSummary:
    """Distribution summary of the escape probability over sampled environments."""
    gen = as_generator(rng)
    vals = np.array(
        [environment_escape_probability(graph, start, target, gen) for _ in range(replicas)]
    )
    q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75])
    return EscapeSummary(
        n=replicas, median=float(med), q25=float(q25), q75=float(q75), mean=float(vals.mean())
    )


def trajectory_to_csv(trajectory: Trajectory, path) -> None:
    """Debug export: one row per event (index, time, vertex)."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event", "time", "vertex"])
        writer.writerow([0, repr(0.0), int(trajectory.states[0])])
        for k, (t, v) in enumerate(zip(trajectory.jump_times, trajectory.states[1:]), start=1):
            writer.writerow([k, repr(float(t)), int(v)])
