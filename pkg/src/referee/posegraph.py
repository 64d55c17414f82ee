"""SE(2) pose-graph construction and Levenberg-Marquardt optimisation."""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ConfigError
from .se2 import Pose2, relative_pose, wrap_angle, wrap_angles

ODOMETRY, LOOP, PRIOR = "odometry", "loop", "prior"

# Cost at which a zero-residual problem counts as solved.
ABS_COST_FLOOR = 1e-20


def _spd(name, m):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.allclose(m, m.T):
        raise ConfigError(f"{name} must be a symmetric 3x3 matrix")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ConfigError(f"{name} is not positive definite") from None
    return m


@dataclass(frozen=True)
class PoseGraphConfig:
    odom_information: tuple = (50.0, 50.0, 100.0)
    loop_information: tuple = (20.0, 20.0, 50.0)
    prior_information: tuple = (1e6, 1e6, 1e6)
    max_iterations: int = 100
    relative_tolerance: float = 1e-9
    initial_lambda: float = 1e-4

    def __post_init__(self):
        for name in ("odom_information", "loop_information", "prior_information"):
            _spd(name, information_matrix(getattr(self, name)))
        if self.max_iterations < 1:
            raise ConfigError("posegraph.max_iterations must be >= 1")


def information_matrix(v) -> np.ndarray:
    """Accept a 3-vector (diagonal) or a 3x3 matrix."""
    m = np.asarray(v, dtype=float)
    return np.diag(m) if m.shape == (3,) else m


@dataclass(frozen=True, eq=False)
class Factor:
    kind: str
    from_id: int
    to_id: int
    measurement: Pose2
    information: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "information", _spd(f"{self.kind} information", self.information))
        if self.kind != PRIOR and self.from_id == self.to_id:
            raise ValueError("binary factor must connect two different nodes")


@dataclass(frozen=True)
class LoopClosure:
    """A verified loop: ``measurement`` is the candidate pose in the query frame."""

    query_idx: int
    cand_idx: int
    measurement: Pose2
    desc_dist: float = math.nan
    heading_deg: float = math.nan
    fitness: float = math.nan
    information: Optional[tuple] = None


@dataclass
class FactorGraph:
    n_nodes: int
    factors: List[Factor] = field(default_factory=list)

    def count(self, kind: str) -> int:
        return sum(f.kind == kind for f in self.factors)


@dataclass(frozen=True)
class OptimizeReport:
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool
    # cost after every accepted step, starting with the initial cost
    cost_history: tuple = ()


def build_graph(odom: Sequence[Pose2], loops: Sequence[LoopClosure] = (),
                cfg: PoseGraphConfig = PoseGraphConfig()) -> FactorGraph:
    if len(odom) < 2:
        raise ValueError("need at least two odometry poses")
    n = len(odom)
    g = FactorGraph(n)
    g.factors.append(Factor(PRIOR, 0, 0, odom[0], information_matrix(cfg.prior_information)))
    odom_info = information_matrix(cfg.odom_information)
    for t in range(n - 1):
        g.factors.append(Factor(ODOMETRY, t, t + 1, relative_pose(odom[t], odom[t + 1]), odom_info))
    for lc in loops:
        for idx in (lc.query_idx, lc.cand_idx):
            if not 0 <= idx < n:
                raise IndexError(f"loop references node {idx}, graph has {n} nodes")
        info = information_matrix(cfg.loop_information if lc.information is None else lc.information)
        g.factors.append(Factor(LOOP, lc.query_idx, lc.cand_idx, lc.measurement, info))
    return g


def factor_residual(f: Factor, x: np.ndarray) -> np.ndarray:
    """Residual of one factor at the stacked state ``x`` (n x 3)."""
    z = f.measurement
    if f.kind == PRIOR:
        pred = Pose2.from_array(x[f.to_id])
        return np.array(_ominus(z, pred))
    xi, xj = x[f.from_id], x[f.to_id]
    return np.array(_ominus(z, relative_pose(Pose2.from_array(xi), Pose2.from_array(xj))))


def _ominus(z: Pose2, h: Pose2):
    c, s = math.cos(z.yaw), math.sin(z.yaw)
    dx, dy = h.x - z.x, h.y - z.y
    return c * dx + s * dy, -s * dx + c * dy, wrap_angle(h.yaw - z.yaw)


def _linearize(graph: FactorGraph, x: np.ndarray):
    """Residuals, analytic Jacobian blocks and total cost for every factor."""
    blocks = []
    cost = 0.0
    for f in graph.factors:
        z = f.measurement
        cz, sz = math.cos(z.yaw), math.sin(z.yaw)
        RzT = np.array([[cz, sz], [-sz, cz]])
        if f.kind == PRIOR:
            e = np.array(_ominus(z, Pose2.from_array(x[f.to_id])))
            J = np.zeros((3, 3))
            J[:2, :2] = RzT
            J[2, 2] = 1.0
            blocks.append((f, e, ((f.to_id, J),)))
        else:
            xi, xj = x[f.from_id], x[f.to_id]
            ci, si = math.cos(xi[2]), math.sin(xi[2])
            RiT = np.array([[ci, si], [-si, ci]])
            dRiT = np.array([[-si, ci], [-ci, -si]])
            dt = xj[:2] - xi[:2]
            h = Pose2(*(RiT @ dt), xj[2] - xi[2])
            e = np.array(_ominus(z, h))
            A = np.zeros((3, 3))
            B = np.zeros((3, 3))
            A[:2, :2] = -RzT @ RiT
            A[:2, 2] = RzT @ dRiT @ dt
            A[2, 2] = -1.0
            B[:2, :2] = RzT @ RiT
            B[2, 2] = 1.0
            blocks.append((f, e, ((f.from_id, A), (f.to_id, B))))
        cost += float(e @ f.information @ e)
    return blocks, cost


def total_cost(graph: FactorGraph, x) -> float:
    x = np.asarray(x, dtype=float)
    return sum(float(e @ f.information @ e) for f in graph.factors for e in [factor_residual(f, x)])


def _normal_equations(graph, blocks):
    n = graph.n_nodes * 3
    rows, cols, vals = [], [], []
    g = np.zeros(n)
    for f, e, jac in blocks:
        W = f.information
        for a, Ja in jac:
            g[3 * a:3 * a + 3] += Ja.T @ W @ e
            for b, Jb in jac:
                blk = Ja.T @ W @ Jb
                r, c = np.meshgrid(np.arange(3 * a, 3 * a + 3), np.arange(3 * b, 3 * b + 3), indexing="ij")
                rows.append(r.ravel())
                cols.append(c.ravel())
                vals.append(blk.ravel())
    H = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return H, g


def _check_connected(graph: FactorGraph):
    parent = list(range(graph.n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    anchored = set()
    for f in graph.factors:
        if f.kind == PRIOR:
            anchored.add(f.to_id)
        else:
            parent[find(f.from_id)] = find(f.to_id)
    roots = {find(i) for i in range(graph.n_nodes)}
    if len(roots) != 1:
        raise ValueError(f"pose graph is disconnected ({len(roots)} components)")
    if not anchored:
        raise ValueError("pose graph has no prior factor; gauge is free")


def optimize(graph: FactorGraph, initial: Sequence[Pose2],
             cfg: PoseGraphConfig = PoseGraphConfig()):
    """Levenberg-Marquardt over all node poses.

    Returns ``(poses, OptimizeReport)``. Cost is the sum of squared
    information-weighted residuals over every factor.
    """
    if len(initial) != graph.n_nodes:
        raise ValueError(f"initial guess has {len(initial)} poses, graph has {graph.n_nodes} nodes")
    _check_connected(graph)
    x = np.array([p.as_array() for p in initial], dtype=float)
    blocks, cost = _linearize(graph, x)
    initial_cost = cost
    history = [cost]
    lam = cfg.initial_lambda
    converged = cost == 0.0
    it = 0
    eye = sp.identity(3 * graph.n_nodes, format="csr")
    H, g = _normal_equations(graph, blocks)
    while not converged and it < cfg.max_iterations:
        it += 1
        dx = spsolve((H + lam * eye).tocsc(), -g)
        if not np.all(np.isfinite(dx)):
            raise np.linalg.LinAlgError("singular normal equations after damping")
        x_new = x + dx.reshape(-1, 3)
        x_new[:, 2] = wrap_angles(x_new[:, 2])
        new_blocks, new_cost = _linearize(graph, x_new)
        if new_cost < cost:
            rel = (cost - new_cost) / cost
            x, blocks, cost = x_new, new_blocks, new_cost
            history.append(cost)
            lam = max(lam / 10.0, 1e-12)
            if rel < cfg.relative_tolerance or cost < ABS_COST_FLOOR:
                converged = True
                break
            H, g = _normal_equations(graph, blocks)
        else:
            lam *= 10.0
            flat = new_cost - cost <= 1e-12 * cost
            if flat or lam > 1e12 or np.abs(dx).max() < 1e-14:
                # no descent direction left at machine precision
                converged = True
                break
    poses = [Pose2.from_array(v) for v in x]
    return poses, OptimizeReport(initial_cost, cost, it, converged, tuple(history))
