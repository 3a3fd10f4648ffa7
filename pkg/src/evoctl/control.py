"""Boundary control systems: block assembly, compatibility conditions,
energy ledgers, input/output recovery, and the boundary equation check.

A control system has state (v, zeta, w, y): a bulk field v, its flux
zeta, boundary values w, and an observation y.  The skew coupling

    A = [[0, -F^H, 0], [F, 0, 0], [0, 0, 0]],   F = (-Gmat; Cmat),

pairs v against (zeta, w); the y block carries no dynamics and its rows
of M1 define the observation algebraically.  All matrices here live in
coordinates in which the physical weighted inner products are plain dot
products, so conjugate transposes realize adjoints and A is exactly
skew.  The input map is J = [identity | B] with B stacked from
(B0, B1, B2) over the coarse blocks (v | zeta, w | y).

The compatibility conditions

    (M1_yv' )^H B2 = B0,   (M1_y1')^H B2 = B1,
    with M1_yv' = M1_yy^{-1} M1[y, v-block], etc.,

tie the control distribution to the observation rows; under them (plus
a zero y-row of M0) the midpoint time stepper satisfies an exact energy
ledger: the drop in stored energy (1/2)<x|M0 x> over [a, b] equals the
accumulated internal dissipation minus the boundary supply
<B2 u|Re(M1_yy^{-1}) B2 u>.  Backward Euler adds the nonnegative
artificial dissipation (1/2)<dx|M0 dx> per step instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolationError, ShapeMismatchError
from .evolution import EvolutionarySystem, Trajectory

COMPAT_TOL = 1e-10


@dataclass(frozen=True)
class BlockPartition:
    """Sizes of the coarse state blocks and the control space.

    n_h0: bulk field block, n_h1: flux-plus-boundary block (zeta and w
    together), n_y: observation block, n_u1: control inputs.
    """

    n_h0: int
    n_h1: int
    n_y: int
    n_u1: int

    def __post_init__(self):
        for name in ("n_h0", "n_h1", "n_y", "n_u1"):
            val = getattr(self, name)
            if int(val) != val or val < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {val}")

    @property
    def dim(self) -> int:
        return self.n_h0 + self.n_h1 + self.n_y

    @property
    def sl_h0(self) -> slice:
        return slice(0, self.n_h0)

    @property
    def sl_h1(self) -> slice:
        return slice(self.n_h0, self.n_h0 + self.n_h1)

    @property
    def sl_y(self) -> slice:
        return slice(self.n_h0 + self.n_h1, self.dim)


def _expand_blocks(blocks, sizes, name):
    """Assemble a square matrix from a nested list over the fine blocks.

    Entries may be None (zero block), a scalar (scaled identity when the
    block is square), or a matrix of matching shape.
    """
    k = len(sizes)
    if len(blocks) != k or any(len(row) != k for row in blocks):
        raise ShapeMismatchError(f"{name} must be a {k}x{k} nested block list")
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    out = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
    for i in range(k):
        for j in range(k):
            entry = blocks[i][j]
            if entry is None:
                continue
            shape = (sizes[i], sizes[j])
            if np.isscalar(entry):
                if sizes[i] != sizes[j]:
                    raise ShapeMismatchError(
                        f"{name}[{i}][{j}] is scalar but the block is {shape}"
                    )
                block = complex(entry) * np.eye(sizes[i])
            else:
                block = np.asarray(entry, dtype=complex)
                if block.shape != shape:
                    raise ShapeMismatchError(
                        f"{name}[{i}][{j}] has shape {block.shape}, expected {shape}"
                    )
            out[offsets[i]:offsets[i + 1], offsets[j]:offsets[j + 1]] = block
    return out


@dataclass(frozen=True)
class ControlSystem:
    """Assembled boundary control system in flat coordinates.

    M0, M1, A are dim x dim; B0/B1/B2 are the control columns per coarse
    block; Gmat and Cmat are the two constituents of F; Cdual is the
    dual map of Cmat appearing in the v-rows of A.  n_zeta + n_w =
    partition.n_h1 records the fine split of the middle block.  geometry
    is an optional mapping carrying model data (grid operators, scaling
    matrices, boundary spaces) for checks that need the physical
    picture.
    """

    partition: BlockPartition
    M0: np.ndarray
    M1: np.ndarray
    A: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    Gmat: np.ndarray
    Cmat: np.ndarray
    Cdual: np.ndarray
    n_zeta: int
    n_w: int
    x0: np.ndarray = field(default=None)
    geometry: dict = field(default=None)

    def __post_init__(self):
        p = self.partition
        if self.n_zeta + self.n_w != p.n_h1:
            raise ShapeMismatchError("n_zeta + n_w must equal the middle block size")
        for name, mat in (("M0", self.M0), ("M1", self.M1), ("A", self.A)):
            if mat.shape != (p.dim, p.dim):
                raise ShapeMismatchError(f"{name} must be {p.dim}x{p.dim}, got {mat.shape}")
        for name, mat, rows in (("B0", self.B0, p.n_h0), ("B1", self.B1, p.n_h1),
                                ("B2", self.B2, p.n_y)):
            if mat.shape != (rows, p.n_u1):
                raise ShapeMismatchError(
                    f"{name} must be {rows}x{p.n_u1}, got {mat.shape}"
                )
        scale = max(1.0, np.abs(self.A).max())
        if np.abs(self.A + self.A.conj().T).max() > 1e-12 * scale:
            raise HypothesisViolationError("assembled A is not skew-Hermitian")

    @property
    def dim(self) -> int:
        return self.partition.dim

    @property
    def fine_sizes(self) -> tuple:
        return (self.partition.n_h0, self.n_zeta, self.n_w, self.partition.n_y)

    def fine_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.fine_sizes)])

    def fine_slice(self, i: int) -> slice:
        off = self.fine_offsets()
        return slice(off[i], off[i + 1])

    def split_state(self, x):
        """Split a flat state into (v, zeta, w, y)."""
        x = np.asarray(x)
        off = self.fine_offsets()
        return tuple(x[..., off[i]:off[i + 1]] for i in range(4))

    def m1_block(self, i: int, j: int) -> np.ndarray:
        return self.M1[self.fine_slice(i), self.fine_slice(j)]

    @property
    def B(self) -> np.ndarray:
        return np.vstack([self.B0, self.B1, self.B2])

    @property
    def J(self) -> np.ndarray:
        return np.hstack([np.eye(self.dim, dtype=complex), self.B])

    def as_evolutionary(self) -> EvolutionarySystem:
        return EvolutionarySystem(M0=self.M0, M1=self.M1, A=self.A, J=self.J)

    def input_vector(self, u, f_state=None) -> np.ndarray:
        """Stack a state source and a control sample into a J input."""
        u = np.atleast_1d(np.asarray(u, dtype=complex))
        if u.shape != (self.partition.n_u1,):
            raise ShapeMismatchError(
                f"u must have length {self.partition.n_u1}, got {u.shape}"
            )
        if f_state is None:
            f_state = np.zeros(self.dim, dtype=complex)
        return np.concatenate([np.asarray(f_state, dtype=complex), u])

    def control_samples(self, traj: Trajectory) -> np.ndarray:
        """Control part of the samples a trajectory consumed."""
        return traj.inputs[:, self.dim:]


def assemble_control(
    partition: BlockPartition,
    M0_blocks,
    M1_blocks,
    pair,
    Cmat,
    B_blocks,
    *,
    Gmat=None,
    node_basis=None,
    n_w=None,
    x0=None,
    geometry=None,
) -> ControlSystem:
    """Build a ControlSystem from fine-block data.

    M0_blocks and M1_blocks are 4x4 nested lists over (v, zeta, w, y).
    F's first part defaults to the pair's gradient in length-scaled
    coordinates (sqrt-weight scaling on both sides), optionally
    restricted to the columns of node_basis; pass Gmat to override it
    entirely.  Cmat maps v coordinates to w coordinates (None for no
    boundary coupling); its dual in these coordinates is the conjugate
    transpose.  B_blocks = (B0, B1, B2) over the coarse blocks, each
    optionally None.
    """
    n_w = partition.n_y if n_w is None else int(n_w)
    n_zeta = partition.n_h1 - n_w
    if n_zeta < 0:
        raise ShapeMismatchError("n_w exceeds the middle block size")
    sizes = (partition.n_h0, n_zeta, n_w, partition.n_y)

    if Gmat is None:
        if pair is None:
            raise ValueError("either a GradDivPair or an explicit Gmat is required")
        s0 = np.sqrt(pair.W0)
        s1 = np.sqrt(pair.W1)
        Gmat = (pair.G / s0[None, :]) * s1[:, None]
        if node_basis is not None:
            node_basis = np.asarray(node_basis, dtype=complex)
            if node_basis.shape[0] != pair.n_nodes:
                raise ShapeMismatchError(
                    f"node_basis must have {pair.n_nodes} rows, got {node_basis.shape}"
                )
            Gmat = Gmat @ node_basis
    Gmat = np.asarray(Gmat, dtype=complex)
    if Gmat.shape != (n_zeta, partition.n_h0):
        raise ShapeMismatchError(
            f"F's gradient part must be {n_zeta}x{partition.n_h0}, got {Gmat.shape}"
        )
    if Cmat is None:
        Cmat = np.zeros((n_w, partition.n_h0), dtype=complex)
    Cmat = np.asarray(Cmat, dtype=complex)
    if Cmat.shape != (n_w, partition.n_h0):
        raise ShapeMismatchError(
            f"Cmat must be {n_w}x{partition.n_h0}, got {Cmat.shape}"
        )

    M0 = _expand_blocks(M0_blocks, sizes, "M0_blocks")
    M1 = _expand_blocks(M1_blocks, sizes, "M1_blocks")
    scale0 = max(1.0, np.abs(M0).max())
    if np.abs(M0 - M0.conj().T).max() > 1e-12 * scale0:
        raise HypothesisViolationError("assembled M0 is not Hermitian")

    F = np.vstack([-Gmat, Cmat])
    A = np.zeros((partition.dim, partition.dim), dtype=complex)
    A[partition.sl_h1, partition.sl_h0] = F
    A[partition.sl_h0, partition.sl_h1] = -F.conj().T

    B0, B1, B2 = B_blocks
    B0 = np.zeros((partition.n_h0, partition.n_u1), dtype=complex) if B0 is None \
        else np.asarray(B0, dtype=complex).reshape(partition.n_h0, partition.n_u1)
    B1 = np.zeros((partition.n_h1, partition.n_u1), dtype=complex) if B1 is None \
        else np.asarray(B1, dtype=complex).reshape(partition.n_h1, partition.n_u1)
    B2 = np.zeros((partition.n_y, partition.n_u1), dtype=complex) if B2 is None \
        else np.asarray(B2, dtype=complex).reshape(partition.n_y, partition.n_u1)

    return ControlSystem(
        partition=partition, M0=M0, M1=M1, A=A, B0=B0, B1=B1, B2=B2,
        Gmat=Gmat, Cmat=Cmat, Cdual=Cmat.conj().T, n_zeta=n_zeta, n_w=n_w,
        x0=None if x0 is None else np.asarray(x0, dtype=complex),
        geometry=geometry,
    )


def _coarse_m1_blocks(sys: ControlSystem):
    p = sys.partition
    Myy = sys.M1[p.sl_y, p.sl_y]
    My0 = sys.M1[p.sl_y, p.sl_h0]
    My1 = sys.M1[p.sl_y, p.sl_h1]
    return My0, My1, Myy


def check_compatibility(sys: ControlSystem):
    """Defects of the two control compatibility conditions.

    Returns (|(Myy^-1 My0)^H B2 - B0|, |(Myy^-1 My1)^H B2 - B1|) in the
    spectral norm, where the blocks are taken over the coarse partition.
    """
    My0, My1, Myy = _coarse_m1_blocks(sys)
    if Myy.size == 0:
        raise HypothesisViolationError("observation block is empty")
    svals = np.linalg.svd(Myy, compute_uv=False)
    if svals[-1] <= 1e-12 * max(svals[0], 1.0):
        raise HypothesisViolationError(
            "observation block M1[y,y] is not invertible; the compatibility "
            "conditions presuppose its bounded inverse"
        )
    d0 = np.linalg.norm(np.linalg.solve(Myy, My0).conj().T @ sys.B2 - sys.B0, 2)
    d1 = np.linalg.norm(np.linalg.solve(Myy, My1).conj().T @ sys.B2 - sys.B1, 2)
    return float(d0), float(d1)


@dataclass(frozen=True)
class EnergyLedger:
    """Energy balance of a trajectory over a grid interval [a, b].

    stored_drop = E(a) - E(b) with E = (1/2)<x|M0 x>; dissipation and
    supply are the scheme-matched quadratures of <x|Re M1 x> and
    <B2 u|Re(M1_yy^-1) B2 u>; defect = stored_drop - (dissipation -
    supply).
    """

    interval: tuple
    stored_drop: float
    dissipation: float
    supply: float
    defect: float


def _grid_index(grid, t, what):
    times = grid.times()
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > 1e-9 * max(grid.tau, 1.0):
        raise ValueError(f"{what} = {t} is not a grid time")
    return k


def energy_ledger(sys: ControlSystem, traj: Trajectory, u_samples=None, a=0.0, b=None
                  ) -> EnergyLedger:
    """Energy ledger of a controlled trajectory over [a, b].

    Refuses (naming the failed hypothesis) when the y-rows of M0 are
    nonzero or the compatibility defects exceed tolerance, since the
    balance equation is only asserted under those hypotheses.  u_samples
    defaults to the control part of the samples stored in the
    trajectory; pass one row per step otherwise.
    """
    p = sys.partition
    scale0 = max(1.0, np.abs(sys.M0).max())
    y_rows = np.abs(sys.M0[p.sl_y, :]).max() if p.n_y else 0.0
    y_cols = np.abs(sys.M0[:, p.sl_y]).max() if p.n_y else 0.0
    if max(y_rows, y_cols) > 1e-12 * scale0:
        raise HypothesisViolationError(
            "energy ledger requires the observation rows and columns of M0 to vanish"
        )
    scale_a = max(1.0, np.abs(sys.A).max())
    if p.n_y and np.abs(sys.A[p.sl_y, :]).max() > 1e-12 * scale_a:
        raise HypothesisViolationError(
            "energy ledger requires the observation rows of A to vanish"
        )
    d0, d1 = check_compatibility(sys)
    if max(d0, d1) > COMPAT_TOL:
        raise HypothesisViolationError(
            f"compatibility defects ({d0:.3e}, {d1:.3e}) exceed {COMPAT_TOL:.0e}; "
            "the energy balance is only asserted under the compatibility conditions"
        )

    if b is None:
        b = traj.grid.t_end
    ia = _grid_index(traj.grid, a, "a")
    ib = _grid_index(traj.grid, b, "b")
    if not ia < ib:
        raise ValueError(f"need a < b on the grid, got indices {ia}, {ib}")

    if u_samples is None:
        u_samples = sys.control_samples(traj)
    u_samples = np.asarray(u_samples, dtype=complex)
    if u_samples.shape != (traj.grid.n_steps, p.n_u1):
        raise ShapeMismatchError(
            f"u_samples must be ({traj.grid.n_steps}, {p.n_u1}), got {u_samples.shape}"
        )

    reM1 = 0.5 * (sys.M1 + sys.M1.conj().T)
    _, _, Myy = _coarse_m1_blocks(sys)
    Myy_inv = np.linalg.inv(Myy)
    supply_kernel = 0.5 * (Myy_inv + Myy_inv.conj().T)

    tau = traj.grid.tau
    dissipation = 0.0
    supply = 0.0
    for k in range(ia, ib):
        euler_step = traj.scheme == "backward_euler" or k < traj.n_euler_init_steps
        xs = traj.states[k + 1] if euler_step else 0.5 * (traj.states[k] + traj.states[k + 1])
        dissipation += tau * np.vdot(xs, reM1 @ xs).real
        bu = sys.B2 @ u_samples[k]
        supply += tau * np.vdot(bu, supply_kernel @ bu).real

    def stored(i):
        return 0.5 * np.vdot(traj.states[i], sys.M0 @ traj.states[i]).real

    stored_drop = stored(ia) - stored(ib)
    defect = stored_drop - (dissipation - supply)
    times = traj.grid.times()
    return EnergyLedger(
        interval=(float(times[ia]), float(times[ib])),
        stored_drop=float(stored_drop),
        dissipation=float(dissipation),
        supply=float(supply),
        defect=float(defect),
    )


@dataclass(frozen=True)
class IOSamples:
    """Boundary input/output samples recovered from the algebraic rows.

    Iterating yields (w_samples, y_samples) so the result unpacks as a
    pair; times are the scheme-consistent sample times and
    max_deviation is the largest distance between the recovered values
    and the trajectory's stored (w, y) components.
    """

    times: np.ndarray
    w_samples: np.ndarray
    y_samples: np.ndarray
    max_deviation: float

    def __iter__(self):
        return iter((self.w_samples, self.y_samples))


def extract_io(sys: ControlSystem, traj: Trajectory) -> IOSamples:
    """Recover (w, y) per step from the algebraic (w, y) rows.

    At each step's scheme-consistent state x the rows

        (M1 + A)[wy, wy] (w; y) = (J f)[wy] - (M1 + A)[wy, v zeta] x

    are solved directly and compared with the trajectory's stored
    components.  Refuses when M0 has nonzero (w, y) rows (the rows are
    only algebraic without them) or when the block to invert is
    singular.
    """
    p = sys.partition
    nw, ny = sys.n_w, p.n_y
    off = sys.fine_offsets()
    wy = slice(off[2], off[4])
    vz = slice(0, off[2])
    scale0 = max(1.0, np.abs(sys.M0).max())
    if nw + ny and np.abs(sys.M0[wy, :]).max() > 1e-12 * scale0:
        raise HypothesisViolationError(
            "input/output recovery requires the (w, y) rows of M0 to vanish"
        )
    M1A = sys.M1 + sys.A
    K = M1A[wy, wy]
    if K.size:
        svals = np.linalg.svd(K, compute_uv=False)
        if svals[-1] <= 1e-12 * max(svals[0], 1.0):
            raise HypothesisViolationError(
                "the (w, y) block of M1 + A is not invertible; input/output "
                "recovery presupposes its bounded inverse"
            )
    tau = traj.grid.tau
    times = traj.grid.times()

    rec_w = np.zeros((traj.grid.n_steps, nw), dtype=complex)
    rec_y = np.zeros((traj.grid.n_steps, ny), dtype=complex)
    sample_times = np.zeros(traj.grid.n_steps)
    worst = 0.0
    for k in range(traj.grid.n_steps):
        euler_step = traj.scheme == "backward_euler" or k < traj.n_euler_init_steps
        if euler_step:
            xs = traj.states[k + 1]
            sample_times[k] = times[k + 1]
        else:
            xs = 0.5 * (traj.states[k] + traj.states[k + 1])
            sample_times[k] = times[k] + 0.5 * tau
        jrow = sys.J @ traj.inputs[k]
        rhs = jrow[wy] - M1A[wy, vz] @ xs[vz]
        sol = np.linalg.solve(K, rhs) if K.size else np.zeros(0, dtype=complex)
        rec_w[k] = sol[:nw]
        rec_y[k] = sol[nw:]
        dev = np.abs(sol - xs[wy]).max() if sol.size else 0.0
        worst = max(worst, float(dev))
    return IOSamples(
        times=sample_times, w_samples=rec_w, y_samples=rec_y, max_deviation=float(worst)
    )


def boundary_equation_defect(sys: ControlSystem, traj: Trajectory, pair=None) -> np.ndarray:
    """Norm of the boundary-data constraint on zeta at every grid state.

    Evaluates the cell-side boundary coordinates of zeta^k + eta^k,
    where eta^k is the least-squares preimage of the physical dual
    image of w^k under the minimal divergence.  Exactly zero for states
    assembled to satisfy the constraint; small along trajectories that
    enforce it weakly.

    Needs the physical picture: the grad/div pair plus, from the system
    geometry, the cell scaling and the physical dual map of the boundary
    observation.
    """
    geo = sys.geometry or {}
    pair = pair if pair is not None else geo.get("pair")
    if pair is None:
        raise HypothesisViolationError(
            "boundary equation check needs the grad/div pair (none in geometry)"
        )
    if sys.n_w == 0 or np.abs(sys.Cmat).max() == 0.0:
        raise HypothesisViolationError(
            "boundary equation check needs a system with boundary coupling"
        )
    from .bdspace import compute_bd_space

    bdD = geo.get("bdD") or compute_bd_space(pair, "D")
    Cdual_phys = geo.get("Cdual_physical")
    if Cdual_phys is None:
        raise HypothesisViolationError(
            "geometry lacks the physical dual observation map Cdual_physical"
        )
    s1 = np.sqrt(pair.W1)
    Dmin = pair.minimal_div()

    sl_zeta = sys.fine_slice(1)
    sl_w = sys.fine_slice(2)
    out = np.zeros(traj.states.shape[0])
    for k in range(traj.states.shape[0]):
        zeta_hat = traj.states[k, sl_zeta]
        w = traj.states[k, sl_w]
        zeta_phys = zeta_hat / s1
        lift = np.linalg.lstsq(Dmin, Cdual_phys @ w, rcond=1e-10)[0]
        out[k] = np.linalg.norm(bdD.projector @ (zeta_phys + lift))
    return out
