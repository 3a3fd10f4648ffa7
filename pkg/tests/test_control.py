"""Tests for boundary control assembly, compatibility, ledgers, and io.

The small wave example used throughout has scalar blocks (v, zeta, w, y)
with M0 = diag(1, 1, 0, 0), algebraic rows w + C v = -sqrt(2) u and
sqrt(2) w + y = -u, and control columns B = (0; (0, -sqrt(2)); -1).  It
satisfies the compatibility conditions exactly, so the midpoint energy
ledger closes to machine precision once the Euler start-up step is past.
"""

import numpy as np
import pytest

from evoctl.bdspace import compute_bd_space, dual_projection
from evoctl.control import (
    BlockPartition,
    assemble_control,
    boundary_equation_defect,
    check_compatibility,
    energy_ledger,
    extract_io,
)
from evoctl.errors import HypothesisViolationError, ShapeMismatchError
from evoctl.evolution import TimeGrid, Trajectory, solve
from evoctl.operators import Grid1D, build_sbp_pair_1d

RT2 = np.sqrt(2.0)


def empty_blocks():
    return [[None] * 4 for _ in range(4)]


def wave_example_system(g=1.3, c=0.7):
    """Smallest wave-type control system with scalar fine blocks."""
    part = BlockPartition(n_h0=1, n_h1=2, n_y=1, n_u1=1)
    M0b = empty_blocks()
    M0b[0][0] = 1.0
    M0b[1][1] = 1.0
    M1b = empty_blocks()
    M1b[2][2] = 1.0
    M1b[3][2] = RT2
    M1b[3][3] = 1.0
    return assemble_control(
        part, M0b, M1b, pair=None, Cmat=np.array([[c]], dtype=complex),
        B_blocks=(None, np.array([[0.0], [-RT2]]), np.array([[-1.0]])),
        Gmat=np.array([[g]], dtype=complex), n_w=1,
    )


def random_compatible_system(rng, n_h0=4, n_zeta=3, n_w=2, n_y=2, n_u1=2):
    """Random complex system whose B blocks satisfy compatibility exactly."""
    def cplx(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def hpd(n):
        a = cplx(n, n)
        return a @ a.conj().T + np.eye(n)

    part = BlockPartition(n_h0, n_zeta + n_w, n_y, n_u1)
    M0b = empty_blocks()
    M0b[0][0] = hpd(n_h0)
    M0b[1][1] = hpd(n_zeta)
    M1b = empty_blocks()
    M1b[0][0] = hpd(n_h0)
    M1b[2][2] = 2.0 * np.eye(n_w) + 0.1 * cplx(n_w, n_w)
    My0 = 0.1 * cplx(n_y, n_h0)
    My1 = 0.1 * cplx(n_y, n_zeta + n_w)
    Myy = np.eye(n_y) + 0.1 * cplx(n_y, n_y)
    M1b[3][0] = My0
    M1b[3][1] = My1[:, :n_zeta]
    M1b[3][2] = My1[:, n_zeta:]
    M1b[3][3] = Myy
    B2 = cplx(n_y, n_u1)
    B0 = np.linalg.solve(Myy, My0).conj().T @ B2
    B1 = np.linalg.solve(Myy, My1).conj().T @ B2
    return assemble_control(
        part, M0b, M1b, pair=None, Cmat=cplx(n_w, n_h0),
        B_blocks=(B0, B1, B2), Gmat=cplx(n_zeta, n_h0), n_w=n_w,
    )


def drive(sys, u_of_t, x0, grid, scheme):
    """Integrate a control system under the control signal u_of_t."""
    def f(t):
        return sys.input_vector(u_of_t(t))

    return solve(sys.as_evolutionary(), x0, f, grid, scheme)


class TestBlockPartition:
    def test_dim_and_slices(self):
        """The coarse slices tile the flat state in order."""
        p = BlockPartition(n_h0=3, n_h1=5, n_y=2, n_u1=4)
        assert p.dim == 10
        assert p.sl_h0 == slice(0, 3)
        assert p.sl_h1 == slice(3, 8)
        assert p.sl_y == slice(8, 10)

    def test_rejects_negative_size(self):
        with pytest.raises(ValueError):
            BlockPartition(n_h0=-1, n_h1=2, n_y=1, n_u1=1)


class TestAssembleControl:
    def test_scalar_blocks_expand_to_identity(self):
        """Scalar block entries become scaled identities on the diagonal."""
        sys = wave_example_system()
        assert np.array_equal(sys.M0, np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex))
        M1 = np.zeros((4, 4), dtype=complex)
        M1[2, 2] = 1.0
        M1[3, 2] = RT2
        M1[3, 3] = 1.0
        assert np.array_equal(sys.M1, M1)

    def test_coupling_block_is_skew(self):
        """A carries F = (-G; C) against -F^H and nothing else, exactly."""
        rng = np.random.default_rng(7)
        sys = random_compatible_system(rng)
        F = np.vstack([-sys.Gmat, sys.Cmat])
        p = sys.partition
        assert np.array_equal(sys.A[p.sl_h1, p.sl_h0], F)
        assert np.array_equal(sys.A[p.sl_h0, p.sl_h1], -F.conj().T)
        assert np.abs(sys.A + sys.A.conj().T).max() == 0.0
        assert np.abs(sys.A[p.sl_y, :]).max() == 0.0

    def test_default_gradient_is_length_scaled(self):
        """Omitting Gmat uses the pair's gradient scaled by sqrt weights."""
        pair = build_sbp_pair_1d(Grid1D(0.0, 1.0, 8))
        n_nodes, n_cells = pair.n_nodes, pair.grid.n_cells
        part = BlockPartition(n_h0=n_nodes, n_h1=n_cells + 2, n_y=2, n_u1=2)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][3] = 1.0
        sys = assemble_control(part, M0b, M1b, pair, None, (None, None, None), n_w=2)
        expected = (pair.G / np.sqrt(pair.W0)[None, :]) * np.sqrt(pair.W1)[:, None]
        err = np.abs(sys.Gmat - expected).max()
        assert err == 0.0, f"default gradient part is off by {err:.2e}"
        assert np.abs(sys.Cmat).max() == 0.0
        assert sys.Cdual.shape == (n_nodes, 2)

    def test_node_basis_restricts_columns(self):
        """A node basis restricts the gradient part to its column span."""
        rng = np.random.default_rng(3)
        pair = build_sbp_pair_1d(Grid1D(0.0, 1.0, 8))
        V = np.linalg.qr(rng.standard_normal((pair.n_nodes, 5)))[0]
        part = BlockPartition(n_h0=5, n_h1=pair.grid.n_cells + 1, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][3] = 1.0
        sys = assemble_control(
            part, M0b, M1b, pair, None, (None, None, None), node_basis=V, n_w=1
        )
        ghat = (pair.G / np.sqrt(pair.W0)[None, :]) * np.sqrt(pair.W1)[:, None]
        err = np.abs(sys.Gmat - ghat @ V).max()
        assert err < 1e-14, f"restricted gradient part is off by {err:.2e}"

    def test_rejects_non_hermitian_mass(self):
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = np.array([[0.0, 1.0], [0.0, 0.0]])
        M1b = empty_blocks()
        M1b[3][3] = 1.0
        part = BlockPartition(n_h0=1, n_h1=3, n_y=1, n_u1=1)
        with pytest.raises(HypothesisViolationError, match="Hermitian"):
            assemble_control(part, M0b, M1b, None, None, (None, None, None),
                             Gmat=np.zeros((2, 1)), n_w=1)

    def test_rejects_wrong_coupling_shape(self):
        part = BlockPartition(n_h0=2, n_h1=3, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M1b = empty_blocks()
        M1b[3][3] = 1.0
        with pytest.raises(ShapeMismatchError):
            assemble_control(part, M0b, M1b, None, np.zeros((3, 2)),
                             (None, None, None), Gmat=np.zeros((2, 2)), n_w=1)

    def test_requires_pair_or_explicit_gradient(self):
        part = BlockPartition(n_h0=1, n_h1=2, n_y=1, n_u1=1)
        with pytest.raises(ValueError):
            assemble_control(part, empty_blocks(), empty_blocks(), None, None,
                             (None, None, None), n_w=1)

    def test_input_vector_stacks_state_source_and_control(self):
        sys = wave_example_system()
        vec = sys.input_vector(np.array([2.0 + 1j]))
        assert vec.shape == (5,)
        assert np.array_equal(vec[:4], np.zeros(4, dtype=complex))
        assert vec[4] == 2.0 + 1j
        with pytest.raises(ShapeMismatchError):
            sys.input_vector(np.ones(2))


class TestAdjointStructure:
    def test_two_sided_adjoint_identity(self):
        """<Fx|(zeta, w)> equals <x|-G^H zeta + Cdual w> for random draws."""
        rng = np.random.default_rng(11)
        sys = random_compatible_system(rng)
        F = np.vstack([-sys.Gmat, sys.Cmat])
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            zeta = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            lhs = np.vdot(F @ x, np.concatenate([zeta, w]))
            rhs = np.vdot(x, -sys.Gmat.conj().T @ zeta + sys.Cdual @ w)
            worst = max(worst, abs(lhs - rhs))
        assert worst < 1e-12, f"adjoint identity defect {worst:.2e}"

    def test_skew_pairing_through_assembled_matrix(self):
        """<x|Ay> = -<Ax|y> holds exactly for the assembled coupling."""
        rng = np.random.default_rng(12)
        sys = random_compatible_system(rng)
        worst = 0.0
        for _ in range(50):
            x = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
            y = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
            worst = max(worst, abs(np.vdot(x, sys.A @ y) + np.vdot(sys.A @ x, y)))
        assert worst < 1e-12, f"skew pairing defect {worst:.2e}"

    def test_as_evolutionary_carries_identity_and_control_columns(self):
        sys = wave_example_system()
        evo = sys.as_evolutionary()
        assert evo.J.shape == (4, 5)
        assert np.array_equal(evo.J[:, :4], np.eye(4, dtype=complex))
        assert np.array_equal(evo.J[:, 4:], sys.B)


class TestCheckCompatibility:
    def test_wave_example_is_exactly_compatible(self):
        """The wave example control columns satisfy both conditions exactly."""
        d0, d1 = check_compatibility(wave_example_system())
        assert d0 == 0.0, f"first compatibility defect {d0:.2e}"
        assert d1 == 0.0, f"second compatibility defect {d1:.2e}"

    def test_zeroed_middle_column_defects_by_sqrt_two(self):
        """Dropping B1 leaves a defect of sqrt(2) in the spectral norm."""
        sys = wave_example_system()
        broken = assemble_control(
            sys.partition,
            [[1.0, None, None, None], [None, 1.0, None, None],
             [None] * 4, [None] * 4],
            [[None] * 4, [None] * 4,
             [None, None, 1.0, None], [None, None, RT2, 1.0]],
            None, sys.Cmat, (None, None, np.array([[-1.0]])),
            Gmat=sys.Gmat, n_w=1,
        )
        d0, d1 = check_compatibility(broken)
        assert d0 == 0.0
        assert abs(d1 - RT2) < 1e-12, f"expected sqrt(2), got {d1:.12f}"

    def test_spectral_norm_on_two_dimensional_control(self):
        """With two controls the B1 = 0 defect is sqrt(2), not Frobenius 2."""
        part = BlockPartition(n_h0=2, n_h1=3, n_y=2, n_u1=2)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][2] = RT2
        M1b[3][3] = 1.0
        sys = assemble_control(
            part, M0b, M1b, None, None, (None, None, -np.eye(2)),
            Gmat=np.zeros((1, 2)), n_w=2,
        )
        d0, d1 = check_compatibility(sys)
        assert d0 == 0.0
        assert abs(d1 - RT2) < 1e-12, f"expected sqrt(2), got {d1:.12f}"

    def test_constructed_compatible_system_has_zero_defects(self):
        rng = np.random.default_rng(21)
        d0, d1 = check_compatibility(random_compatible_system(rng))
        assert d0 < 1e-13, f"first defect {d0:.2e}"
        assert d1 < 1e-13, f"second defect {d1:.2e}"

    def test_defects_invariant_under_observation_rotation(self):
        """Conjugating the observation block by a unitary keeps the defects."""
        rng = np.random.default_rng(22)
        sys = random_compatible_system(rng)
        broken = assemble_control(
            sys.partition,
            [[sys.M0[sys.fine_slice(i), sys.fine_slice(j)] for j in range(4)]
             for i in range(4)],
            [[sys.M1[sys.fine_slice(i), sys.fine_slice(j)] for j in range(4)]
             for i in range(4)],
            None, sys.Cmat,
            (sys.B0 + rng.standard_normal(sys.B0.shape), sys.B1, sys.B2),
            Gmat=sys.Gmat, n_w=sys.n_w,
        )
        d0, d1 = check_compatibility(broken)
        U = np.linalg.qr(rng.standard_normal((2, 2))
                         + 1j * rng.standard_normal((2, 2)))[0]
        M1r = [[broken.M1[broken.fine_slice(i), broken.fine_slice(j)]
                for j in range(4)] for i in range(4)]
        for j in range(3):
            M1r[3][j] = U.conj().T @ M1r[3][j]
        M1r[3][3] = U.conj().T @ M1r[3][3] @ U
        for i in range(3):
            M1r[i][3] = M1r[i][3] @ U
        rotated = assemble_control(
            broken.partition,
            [[broken.M0[broken.fine_slice(i), broken.fine_slice(j)]
              for j in range(4)] for i in range(4)],
            M1r, None, broken.Cmat,
            (broken.B0, broken.B1, U.conj().T @ broken.B2),
            Gmat=broken.Gmat, n_w=broken.n_w,
        )
        r0, r1 = check_compatibility(rotated)
        assert abs(r0 - d0) < 1e-11, f"rotation moved first defect by {abs(r0 - d0):.2e}"
        assert abs(r1 - d1) < 1e-11, f"rotation moved second defect by {abs(r1 - d1):.2e}"

    def test_singular_observation_block_is_refused(self):
        part = BlockPartition(n_h0=1, n_h1=2, n_y=1, n_u1=1)
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][3] = 0.0
        sys = assemble_control(part, empty_blocks(), M1b, None, None,
                               (None, None, None), Gmat=np.zeros((1, 1)), n_w=1)
        with pytest.raises(HypothesisViolationError, match="not invertible"):
            check_compatibility(sys)


class TestEnergyLedger:
    def u_signal(self, n_u1):
        def u(t):
            base = np.cos(3.0 * t) + 0.4j * np.sin(2.0 * t)
            return base * (1.0 + 0.2 * np.arange(n_u1))

        return u

    @pytest.mark.parametrize("ia, ib", [(1, 16), (1, 8), (4, 12)])
    def test_midpoint_ledger_closes_exactly(self, ia, ib):
        """Midpoint steps balance stored drop, dissipation, and supply."""
        rng = np.random.default_rng(31)
        sys = random_compatible_system(rng)
        grid = TimeGrid(t_end=1.2, n_steps=16)
        x0 = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
        traj = drive(sys, self.u_signal(2), x0, grid, "implicit_midpoint")
        assert traj.n_euler_init_steps == 1
        times = grid.times()
        led = energy_ledger(sys, traj, a=times[ia], b=times[ib])
        scale = max(1.0, abs(led.stored_drop), led.dissipation, abs(led.supply))
        assert abs(led.defect) < 1e-11 * scale, \
            f"midpoint ledger defect {led.defect:.2e} on [{times[ia]}, {times[ib]}]"

    def test_wave_example_midpoint_ledger(self):
        """The scalar wave example closes its ledger after the start-up step."""
        rng = np.random.default_rng(32)
        sys = wave_example_system()
        grid = TimeGrid(t_end=2.0, n_steps=40)
        x0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        traj = drive(sys, self.u_signal(1), x0, grid, "implicit_midpoint")
        led = energy_ledger(sys, traj, a=grid.times()[1], b=grid.t_end)
        scale = max(1.0, abs(led.stored_drop), led.dissipation, abs(led.supply))
        assert abs(led.defect) < 1e-11 * scale, f"ledger defect {led.defect:.2e}"

    def test_euler_defect_is_the_artificial_dissipation(self):
        """Backward Euler defects equal the summed squared increments."""
        rng = np.random.default_rng(33)
        sys = random_compatible_system(rng)
        grid = TimeGrid(t_end=1.0, n_steps=12)
        x0 = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
        traj = drive(sys, self.u_signal(2), x0, grid, "backward_euler")
        led = energy_ledger(sys, traj, a=0.0, b=grid.t_end)
        expected = sum(
            0.5 * np.vdot(d, sys.M0 @ d).real
            for d in np.diff(traj.states, axis=0)
        )
        scale = max(1.0, abs(led.stored_drop), led.dissipation, expected)
        assert led.defect >= -1e-12 * scale
        assert abs(led.defect - expected) < 1e-11 * scale, \
            f"Euler defect {led.defect:.6e} vs increments {expected:.6e}"

    def test_reactive_observation_conserves_energy(self):
        """Purely imaginary algebraic blocks yield a conservative ledger."""
        part = BlockPartition(n_h0=2, n_h1=3, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0j
        M1b[3][3] = 1.0j
        rng = np.random.default_rng(34)
        sys = assemble_control(
            part, M0b, M1b, None, rng.standard_normal((1, 2)),
            (None, None, np.array([[1.0]])),
            Gmat=rng.standard_normal((2, 2)), n_w=1,
        )
        grid = TimeGrid(t_end=1.0, n_steps=20)
        x0 = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
        with pytest.warns(RuntimeWarning, match="not certified well-posed"):
            traj = drive(sys, self.u_signal(1), x0, grid, "implicit_midpoint")
        led = energy_ledger(sys, traj, a=grid.times()[1], b=grid.t_end)
        assert led.dissipation == 0.0
        assert led.supply == 0.0
        scale = max(1.0, np.abs(traj.states).max() ** 2)
        assert abs(led.stored_drop) < 1e-11 * scale, \
            f"energy drifted by {led.stored_drop:.2e}"

    def test_explicit_u_samples_match_recorded_ones(self):
        rng = np.random.default_rng(35)
        sys = random_compatible_system(rng)
        grid = TimeGrid(t_end=1.0, n_steps=8)
        x0 = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
        traj = drive(sys, self.u_signal(2), x0, grid, "implicit_midpoint")
        a = grid.times()[1]
        led_default = energy_ledger(sys, traj, a=a)
        led_explicit = energy_ledger(sys, traj, sys.control_samples(traj), a=a)
        assert led_default == led_explicit

    def test_refuses_mass_on_observation_block(self):
        part = BlockPartition(n_h0=1, n_h1=2, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[3][3] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][3] = 1.0
        sys = assemble_control(part, M0b, M1b, None, None, (None, None, None),
                               Gmat=np.zeros((1, 1)), n_w=1)
        grid = TimeGrid(t_end=1.0, n_steps=2)
        traj = Trajectory(grid=grid, states=np.zeros((3, 4), dtype=complex),
                          inputs=np.zeros((2, 5), dtype=complex),
                          scheme="backward_euler")
        with pytest.raises(HypothesisViolationError, match="observation rows"):
            energy_ledger(sys, traj)

    def test_refuses_incompatible_control_columns(self):
        sys = wave_example_system()
        broken = assemble_control(
            sys.partition,
            [[1.0, None, None, None], [None, 1.0, None, None],
             [None] * 4, [None] * 4],
            [[None] * 4, [None] * 4,
             [None, None, 1.0, None], [None, None, RT2, 1.0]],
            None, sys.Cmat,
            (np.array([[0.5]]), sys.B1, sys.B2), Gmat=sys.Gmat, n_w=1,
        )
        grid = TimeGrid(t_end=1.0, n_steps=2)
        traj = Trajectory(grid=grid, states=np.zeros((3, 4), dtype=complex),
                          inputs=np.zeros((2, 5), dtype=complex),
                          scheme="backward_euler")
        with pytest.raises(HypothesisViolationError, match="compatibility"):
            energy_ledger(broken, traj)

    def test_rejects_off_grid_interval(self):
        rng = np.random.default_rng(36)
        sys = wave_example_system()
        grid = TimeGrid(t_end=1.0, n_steps=4)
        x0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        traj = drive(sys, self.u_signal(1), x0, grid, "backward_euler")
        with pytest.raises(ValueError, match="grid time"):
            energy_ledger(sys, traj, a=0.1, b=1.0)


class TestExtractIO:
    def u_signal(self, n_u1):
        def u(t):
            return (np.sin(1.7 * t) + 0.5j * np.cos(t)) * np.ones(n_u1)

        return u

    @pytest.mark.parametrize("scheme", ["backward_euler", "implicit_midpoint"])
    def test_recovered_io_matches_stored_components(self, scheme):
        """Solving the algebraic rows reproduces the stored (w, y) states."""
        rng = np.random.default_rng(41)
        sys = random_compatible_system(rng)
        grid = TimeGrid(t_end=1.0, n_steps=14)
        x0 = rng.standard_normal(sys.dim) + 1j * rng.standard_normal(sys.dim)
        traj = drive(sys, self.u_signal(2), x0, grid, scheme)
        io = extract_io(sys, traj)
        assert io.w_samples.shape == (14, 2)
        assert io.y_samples.shape == (14, 2)
        assert io.max_deviation < 1e-10, \
            f"recovered io deviates from the states by {io.max_deviation:.2e}"

    def test_wave_example_io_relations(self):
        """The wave example satisfies w = -sqrt(2) u - C v and w = C v - sqrt(2) y."""
        rng = np.random.default_rng(42)
        c = 0.7
        sys = wave_example_system(c=c)
        grid = TimeGrid(t_end=2.0, n_steps=32)
        x0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        traj = drive(sys, self.u_signal(1), x0, grid, "implicit_midpoint")
        w, y = extract_io(sys, traj)
        u_used = sys.control_samples(traj)
        worst_in = worst_out = 0.0
        for k in range(1, grid.n_steps):
            xm = 0.5 * (traj.states[k] + traj.states[k + 1])
            v = xm[:1]
            worst_in = max(worst_in, np.abs(w[k] + RT2 * u_used[k] + c * v).max())
            worst_out = max(worst_out, np.abs(w[k] - (c * v - RT2 * y[k])).max())
        assert worst_in < 1e-10, f"input relation defect {worst_in:.2e}"
        assert worst_out < 1e-10, f"output relation defect {worst_out:.2e}"

    def test_unpacks_as_pair(self):
        rng = np.random.default_rng(43)
        sys = wave_example_system()
        grid = TimeGrid(t_end=0.5, n_steps=4)
        x0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        traj = drive(sys, self.u_signal(1), x0, grid, "backward_euler")
        io = extract_io(sys, traj)
        w, y = io
        assert w is io.w_samples and y is io.y_samples

    def test_sample_times_follow_the_scheme(self):
        """Euler start-up samples sit at t_1, midpoint ones at midpoints."""
        rng = np.random.default_rng(44)
        sys = wave_example_system()
        grid = TimeGrid(t_end=1.0, n_steps=4)
        x0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        traj = drive(sys, self.u_signal(1), x0, grid, "implicit_midpoint")
        io = extract_io(sys, traj)
        times = grid.times()
        assert io.times[0] == times[1]
        assert np.allclose(io.times[1:], times[1:-1] + 0.5 * grid.tau)

    def test_quiet_system_recovers_zeros(self):
        """No control and no coupling leaves the boundary values at zero."""
        part = BlockPartition(n_h0=2, n_h1=3, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][2] = RT2
        M1b[3][3] = 1.0
        rng = np.random.default_rng(45)
        sys = assemble_control(part, M0b, M1b, None, None, (None, None, None),
                               Gmat=rng.standard_normal((2, 2)), n_w=1)
        grid = TimeGrid(t_end=1.0, n_steps=6)
        x0 = np.zeros(sys.dim, dtype=complex)
        x0[:2] = rng.standard_normal(2)
        traj = drive(sys, lambda t: np.zeros(1), x0, grid, "implicit_midpoint")
        io = extract_io(sys, traj)
        assert np.abs(io.w_samples).max() < 1e-13
        assert np.abs(io.y_samples).max() < 1e-13

    def test_refuses_mass_on_boundary_rows(self):
        part = BlockPartition(n_h0=1, n_h1=2, n_y=1, n_u1=1)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[2][2] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][3] = 1.0
        sys = assemble_control(part, M0b, M1b, None, None, (None, None, None),
                               Gmat=np.zeros((1, 1)), n_w=1)
        grid = TimeGrid(t_end=1.0, n_steps=2)
        traj = Trajectory(grid=grid, states=np.zeros((3, 4), dtype=complex),
                          inputs=np.zeros((2, 5), dtype=complex),
                          scheme="backward_euler")
        with pytest.raises(HypothesisViolationError, match="rows of M0"):
            extract_io(sys, traj)


@pytest.fixture(scope="module")
def geometry():
    pair = build_sbp_pair_1d(Grid1D(0.0, 1.0, 16))
    bdG = compute_bd_space(pair, "G")
    bdD = compute_bd_space(pair, "D")
    return pair, bdG, bdD, -dual_projection(bdG, bdD, pair)


class TestBoundaryEquationDefect:
    def build_system(self, geometry, couple=True):
        pair, bdG, bdD, cdual_phys = geometry
        n_nodes, n_cells = pair.n_nodes, pair.grid.n_cells
        part = BlockPartition(n_h0=n_nodes, n_h1=n_cells + 2, n_y=2, n_u1=2)
        M0b = empty_blocks()
        M0b[0][0] = 1.0
        M0b[1][1] = 1.0
        M1b = empty_blocks()
        M1b[2][2] = 1.0
        M1b[3][2] = RT2
        M1b[3][3] = 1.0
        cmat = -bdG.projector @ np.diag(1.0 / np.sqrt(pair.W0)) if couple else None
        B1 = np.vstack([np.zeros((n_cells, 2)), -RT2 * np.eye(2)])
        return assemble_control(
            part, M0b, M1b, pair, cmat, (None, B1, -np.eye(2)), n_w=2,
            geometry={"pair": pair, "bdD": bdD, "Cdual_physical": cdual_phys},
        )

    def constant_trajectory(self, sys, x, n_steps=3):
        grid = TimeGrid(t_end=1.0, n_steps=n_steps)
        states = np.tile(x, (n_steps + 1, 1))
        inputs = np.zeros((n_steps, sys.dim + sys.partition.n_u1), dtype=complex)
        return Trajectory(grid=grid, states=states, inputs=inputs,
                          scheme="backward_euler")

    def test_manufactured_state_has_zero_defect(self, geometry):
        """A flux built from the least-squares lift satisfies the equation."""
        pair = geometry[0]
        rng = np.random.default_rng(51)
        sys = self.build_system(geometry)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        cdual_phys = sys.geometry["Cdual_physical"]
        lift = np.linalg.lstsq(pair.minimal_div(), cdual_phys @ w, rcond=1e-10)[0]
        x = np.zeros(sys.dim, dtype=complex)
        x[sys.fine_slice(1)] = np.sqrt(pair.W1) * (-lift)
        x[sys.fine_slice(2)] = w
        defects = boundary_equation_defect(sys, self.constant_trajectory(sys, x))
        assert defects.shape == (4,)
        assert defects.max() < 1e-12, f"manufactured defect {defects.max():.2e}"

    def test_defect_ignores_invisible_flux_components(self, geometry):
        """Adding a flux from the boundary pairing's kernel changes nothing."""
        pair = geometry[0]
        rng = np.random.default_rng(52)
        sys = self.build_system(geometry)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        cdual_phys = sys.geometry["Cdual_physical"]
        lift = np.linalg.lstsq(pair.minimal_div(), cdual_phys @ w, rcond=1e-10)[0]
        from scipy.linalg import null_space

        kernel = null_space(pair.T)
        z = kernel @ (rng.standard_normal(kernel.shape[1])
                      + 1j * rng.standard_normal(kernel.shape[1]))
        x = np.zeros(sys.dim, dtype=complex)
        x[sys.fine_slice(1)] = np.sqrt(pair.W1) * (z - lift)
        x[sys.fine_slice(2)] = w
        defects = boundary_equation_defect(sys, self.constant_trajectory(sys, x))
        assert defects.max() < 1e-10, f"kernel flux leaked {defects.max():.2e}"

    def test_zero_boundary_values_need_kernel_flux_only(self, geometry):
        """With w = 0 the defect is the boundary content of the flux alone."""
        pair = geometry[0]
        rng = np.random.default_rng(53)
        sys = self.build_system(geometry)
        from scipy.linalg import null_space

        kernel = null_space(pair.T)
        z = kernel @ rng.standard_normal(kernel.shape[1])
        x = np.zeros(sys.dim, dtype=complex)
        x[sys.fine_slice(1)] = np.sqrt(pair.W1) * z
        defects = boundary_equation_defect(sys, self.constant_trajectory(sys, x))
        assert defects.max() < 1e-10, f"kernel-only flux defect {defects.max():.2e}"

    def test_boundary_heavy_flux_is_flagged(self, geometry):
        """A flux with boundary content produces an order-one defect."""
        pair, _, bdD, _ = geometry
        sys = self.build_system(geometry)
        x = np.zeros(sys.dim, dtype=complex)
        x[sys.fine_slice(1)] = np.sqrt(pair.W1) * bdD.embedding[:, 0]
        defects = boundary_equation_defect(sys, self.constant_trajectory(sys, x))
        assert defects.max() > 0.1, f"boundary flux went unnoticed {defects.max():.2e}"

    def test_refuses_without_geometry(self):
        sys = wave_example_system()
        grid = TimeGrid(t_end=1.0, n_steps=2)
        traj = Trajectory(grid=grid, states=np.zeros((3, 4), dtype=complex),
                          inputs=np.zeros((2, 5), dtype=complex),
                          scheme="backward_euler")
        with pytest.raises(HypothesisViolationError, match="pair"):
            boundary_equation_defect(sys, traj)

    def test_refuses_without_coupling(self, geometry):
        sys = self.build_system(geometry, couple=False)
        x = np.zeros(sys.dim, dtype=complex)
        with pytest.raises(HypothesisViolationError, match="coupling"):
            boundary_equation_defect(sys, self.constant_trajectory(sys, x))
