"""Root-network uptake solver and seeded growth tests.

Pressure references come from dense assemblies written out in the tests;
the random streams are checked against published algorithm vectors and
frozen values that must never drift.
"""

import math

import numpy as np
import pytest

from netmesh import ScenarioError, SingularSystemError
from netmesh.roots import (
    GrowthIndicator,
    RootProblem,
    Xoshiro256StarStar,
    _GOLDEN,
    _MASK64,
    _mix64,
    assemble_solve_root_pressure,
    build_vertical_root,
    collar_flux,
    grow_grid,
    indicator_evaluate,
    leaf_degree,
    stream_seed,
    total_uptake,
)


def depth_order(view):
    """Leaf indices sorted by element center depth, collar first."""
    ix = view.index_set
    pairs = sorted(
        ((-el.geometry.center()[-1], ix.index_of(el)) for el in view.elements())
    )
    return [i for _, i in pairs]


class TestRandomStreams:
    def test_finalizer_matches_published_splitmix64(self):
        # reference outputs of splitmix64 for seed 0 (Steele et al.)
        expected = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
        state = 0
        got = []
        for _ in range(3):
            state = (state + _GOLDEN) & _MASK64
            got.append(_mix64(state))
        assert got == expected

    def test_stream_seed_frozen(self):
        # decisions keyed off these values are part of saved outputs;
        # the hashes must never change
        assert stream_seed(0, 0, 0) == 0x927A7C57DC016E42
        assert stream_seed(42, 7, 3) == 0x649CE25A0797BFC5

    def test_stream_seed_separates_arguments(self):
        base = stream_seed(1, 2, 3)
        assert stream_seed(4, 2, 3) != base
        assert stream_seed(1, 5, 3) != base
        assert stream_seed(1, 2, 6) != base

    def test_generator_sequence_frozen(self):
        g = Xoshiro256StarStar(42)
        assert [g.next_raw() for _ in range(3)] == [
            0x15780B2E0C2EC716,
            0x6104D9866D113A7E,
            0xAE17533239E499A1,
        ]

    def test_uniform_range_and_mean(self):
        g = Xoshiro256StarStar(7)
        xs = [g.uniform() for _ in range(2000)]
        assert all(0.0 <= x < 1.0 for x in xs)
        assert abs(np.mean(xs) - 0.5) < 0.02

    def test_direction_is_unit_and_deterministic(self):
        a = Xoshiro256StarStar(3).direction(3)
        b = Xoshiro256StarStar(3).direction(3)
        np.testing.assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)

    def test_direction_covers_all_octants(self):
        g = Xoshiro256StarStar(11)
        signs = {tuple(np.sign(g.direction(3)).astype(int)) for _ in range(200)}
        assert len(signs) == 8


class TestLeafDegree:
    def test_chain_degrees(self):
        grid, collar = build_vertical_root(3, 0.01)
        view = grid.leaf_view()
        degrees = {}
        for el in view.elements():
            for k in range(2):
                v = el.sub_entity(1, k)
                degrees[v.id] = leaf_degree(grid, v)
        assert sorted(degrees.values()) == [1, 1, 2, 2]

    def test_degree_crosses_refinement_levels(self):
        grid, collar = build_vertical_root(2, 0.01)
        for el in grid.leaf_view().elements():
            if el.geometry.center()[-1] < -0.01:
                grid.mark(1, el)
        grid.pre_adapt()
        grid.adapt()
        grid.post_adapt()
        view = grid.leaf_view()
        tip = min(
            (v for el in view.elements() for v in (el.sub_entity(1, 0), el.sub_entity(1, 1))),
            key=lambda v: v.coords[-1],
        )
        assert leaf_degree(grid, tip) == 1
        shared = [
            v
            for el in view.elements()
            for v in (el.sub_entity(1, 0), el.sub_entity(1, 1))
            if abs(v.coords[-1] + 0.01) < 1e-15
        ]
        assert all(leaf_degree(grid, v) == 2 for v in shared)


class TestGrowthDecisions:
    def test_zero_probabilities_mean_no_growth(self):
        grid, collar = build_vertical_root(4, 0.01)
        ind = GrowthIndicator(
            seed=5, branch_probability=0.0, elongation_probability=0.0,
            anchored_ids=(collar,),
        )
        for el in grid.leaf_view().elements():
            assert indicator_evaluate(ind, grid, el, 0) is None

    def test_tip_segment_elongates_straight(self):
        grid, collar = build_vertical_root(2, 0.01)
        ind = GrowthIndicator(
            seed=5, branch_probability=0.0, elongation_probability=1.0,
            segment_length=0.01, anchored_ids=(collar,),
        )
        decisions = [
            (el, indicator_evaluate(ind, grid, el, 0))
            for el in grid.leaf_view().elements()
        ]
        grown = [(el, d) for el, d in decisions if d is not None]
        assert len(grown) == 1
        el, d = grown[0]
        assert d.kind == "elongate"
        assert d.attach.coords[-1] == pytest.approx(-0.02)
        np.testing.assert_allclose(d.coords, [0.0, 0.0, -0.03], atol=1e-15)

    def test_interior_segment_branches_downwards(self):
        grid, collar = build_vertical_root(3, 0.01)
        ind = GrowthIndicator(
            seed=9, branch_probability=1.0, elongation_probability=0.0,
            gravity_bias=1.0, segment_length=0.02, anchored_ids=(collar,),
        )
        branched = 0
        for el in grid.leaf_view().elements():
            d = indicator_evaluate(ind, grid, el, 0)
            if d is None:
                continue  # the tip segment only elongates, and that is off
            branched += 1
            assert d.kind == "branch"
            offset = d.coords - d.attach.coords
            assert np.linalg.norm(offset) == pytest.approx(0.02, rel=1e-12)
            assert offset[-1] <= 1e-15  # full gravity bias never points up
        assert branched == 2

    def test_decisions_are_reproducible(self):
        grid, collar = build_vertical_root(4, 0.01)
        ind = GrowthIndicator(seed=21, anchored_ids=(collar,))
        for el in grid.leaf_view().elements():
            a = indicator_evaluate(ind, grid, el, step=6)
            b = indicator_evaluate(ind, grid, el, step=6)
            assert (a is None) == (b is None)
            if a is not None:
                assert a.kind == b.kind
                np.testing.assert_array_equal(a.coords, b.coords)

    def test_seed_changes_decisions(self):
        grid, collar = build_vertical_root(4, 0.01)
        ind_a = GrowthIndicator(seed=0, elongation_probability=0.5, anchored_ids=(collar,))
        ind_b = GrowthIndicator(seed=1, elongation_probability=0.5, anchored_ids=(collar,))
        outcomes_a = []
        outcomes_b = []
        for step in range(20):
            for el in grid.leaf_view().elements():
                outcomes_a.append(indicator_evaluate(ind_a, grid, el, step) is not None)
                outcomes_b.append(indicator_evaluate(ind_b, grid, el, step) is not None)
        assert outcomes_a != outcomes_b


class TestRootPressure:
    def test_no_radial_conductivity_means_collar_pressure(self):
        grid, collar = build_vertical_root(6, 0.02)
        problem = RootProblem(radial_conductivity=0.0, collar_vertex_id=collar)
        p = assemble_solve_root_pressure(problem, grid.leaf_view())
        np.testing.assert_allclose(p, problem.collar_pressure, rtol=1e-12)

    def test_pressure_between_collar_and_soil(self):
        grid, collar = build_vertical_root(8, 0.025)
        problem = RootProblem(collar_vertex_id=collar)
        p = assemble_solve_root_pressure(problem, grid.leaf_view())
        assert np.all(p > problem.collar_pressure)
        assert np.all(p < problem.soil_pressure)

    def test_matches_dense_oracle(self):
        segments, length = 8, 0.025
        grid, collar = build_vertical_root(segments, length)
        view = grid.leaf_view()
        order = depth_order(view)
        problem = RootProblem(collar_vertex_id=collar)
        p = assemble_solve_root_pressure(problem, view)[order]

        kx, kr, r = (
            problem.axial_conductance,
            problem.radial_conductivity,
            problem.root_radius,
        )
        half = kx / 2.0  # equal-coefficient junction: kx*kx / (kx + kx)
        soil = kr * 2.0 * math.pi * r * length
        a = np.zeros((segments, segments))
        b = np.zeros(segments)
        for i in range(segments):
            a[i, i] += soil
            b[i] += soil * problem.soil_pressure
        for i in range(segments - 1):
            a[i, i] += half
            a[i + 1, i + 1] += half
            a[i, i + 1] -= half
            a[i + 1, i] -= half
        a[0, 0] += kx  # collar facet, half-cell Dirichlet coupling
        b[0] += kx * problem.collar_pressure
        expected = np.linalg.solve(a, b)
        np.testing.assert_allclose(p, expected, rtol=1e-10)

    def test_collar_flux_equals_total_uptake(self):
        grid, collar = build_vertical_root(10, 0.02)
        view = grid.leaf_view()
        problem = RootProblem(collar_vertex_id=collar)
        p = assemble_solve_root_pressure(problem, view)
        inflow = collar_flux(problem, view, p)
        uptake = total_uptake(problem, view, p)
        assert inflow == pytest.approx(uptake, rel=1e-10)
        assert uptake > 0.0  # soil is wetter than the xylem

    def test_heterogeneous_coefficients(self):
        grid, collar = build_vertical_root(6, 0.02)
        view = grid.leaf_view()
        order = depth_order(view)
        problem = RootProblem(collar_vertex_id=collar)
        kr = np.zeros(6)
        kr[order[3:]] = problem.radial_conductivity  # only the lower half takes up water
        p = assemble_solve_root_pressure(problem, view, k_r=kr)
        assert collar_flux(problem, view, p) == pytest.approx(
            total_uptake(problem, view, p, k_r=kr), rel=1e-10
        )

    def test_detached_collar_is_singular(self):
        grid, collar = build_vertical_root(4, 0.01)
        problem = RootProblem(radial_conductivity=0.0, collar_vertex_id=999)
        with pytest.raises(SingularSystemError):
            assemble_solve_root_pressure(problem, grid.leaf_view())

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"axial_conductance": 0.0},
            {"radial_conductivity": -1.0},
            {"root_radius": 0.0},
        ],
    )
    def test_validate_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ScenarioError):
            RootProblem(**kwargs).validate()


class TestGrowGrid:
    def _variables(self, n, value=1.0):
        return {"radius": np.full(n, value), "k_r": np.linspace(1.0, 2.0, n)}

    def test_pure_elongation_adds_one_segment_per_step(self):
        grid, collar = build_vertical_root(4, 0.01)
        ind = GrowthIndicator(
            seed=1, branch_probability=0.0, elongation_probability=1.0,
            segment_length=0.01, anchored_ids=(collar,),
        )
        variables = self._variables(4)
        for step in range(3):
            before = len(grid.leaf_view().elements())
            report, variables = grow_grid(grid, ind, variables, step=step)
            assert len(report.inserted) == 1
            assert not report.skipped
            assert len(grid.leaf_view().elements()) == before + 1
        depth = min(
            v.coords[-1]
            for el in grid.leaf_view().elements()
            for v in (el.sub_entity(1, 0), el.sub_entity(1, 1))
        )
        assert depth == pytest.approx(-0.07)

    def test_new_segments_inherit_from_their_source(self):
        grid, collar = build_vertical_root(4, 0.01)
        view = grid.leaf_view()
        ix = view.index_set
        order = depth_order(view)
        radius = np.zeros(4)
        radius[order] = [4.0, 3.0, 2.0, 1.0]  # tip carries 1.0
        ind = GrowthIndicator(
            seed=1, branch_probability=0.0, elongation_probability=1.0,
            segment_length=0.01, anchored_ids=(collar,),
        )
        report, out = grow_grid(grid, ind, {"radius": radius}, step=0)
        (queue_pos, new_id), = report.inserted
        new_view = grid.leaf_view()
        nix = new_view.index_set
        for el in new_view.elements():
            if el.id == new_id:
                assert out["radius"][nix.index_of(el)] == 1.0

    def test_surviving_segments_keep_their_values(self):
        grid, collar = build_vertical_root(4, 0.01)
        view = grid.leaf_view()
        ix = view.index_set
        by_id = {el.id: 10.0 + ix.index_of(el) for el in view.elements()}
        values = np.zeros(4)
        for el in view.elements():
            values[ix.index_of(el)] = by_id[el.id]
        ind = GrowthIndicator(
            seed=3, branch_probability=0.2, elongation_probability=0.7,
            anchored_ids=(collar,),
        )
        report, out = grow_grid(grid, ind, {"v": values}, step=0)
        new_view = grid.leaf_view()
        nix = new_view.index_set
        for el in new_view.elements():
            if el.id in by_id:
                assert out["v"][nix.index_of(el)] == by_id[el.id]

    def test_no_growth_is_a_no_op(self):
        grid, collar = build_vertical_root(4, 0.01)
        ind = GrowthIndicator(
            seed=1, branch_probability=0.0, elongation_probability=0.0,
            anchored_ids=(collar,),
        )
        variables = self._variables(4)
        report, out = grow_grid(grid, ind, variables, step=0)
        assert not report.inserted
        assert len(grid.leaf_view().elements()) == 4
        for name in variables:
            np.testing.assert_array_equal(out[name], variables[name])

    def test_growth_is_reproducible_and_seed_sensitive(self):
        def grow(seed):
            grid, collar = build_vertical_root(6, 0.01)
            ind = GrowthIndicator(
                seed=seed, branch_probability=0.3, elongation_probability=0.8,
                segment_length=0.01, anchored_ids=(collar,),
            )
            variables = {"r": np.ones(6)}
            for step in range(4):
                _, variables = grow_grid(grid, ind, variables, step=step)
            coords = sorted(
                tuple(v.coords)
                for el in grid.leaf_view().elements()
                for v in (el.sub_entity(1, 0), el.sub_entity(1, 1))
            )
            return coords

        assert grow(2024) == grow(2024)
        assert grow(2024) != grow(2025)

    def test_solve_on_grown_network(self):
        grid, collar = build_vertical_root(6, 0.01)
        ind = GrowthIndicator(
            seed=8, branch_probability=0.5, elongation_probability=0.9,
            segment_length=0.01, anchored_ids=(collar,),
        )
        problem = RootProblem(collar_vertex_id=collar)
        variables = {
            "k_x": np.full(6, problem.axial_conductance),
            "k_r": np.full(6, problem.radial_conductivity),
            "radius": np.full(6, problem.root_radius),
        }
        for step in range(5):
            _, variables = grow_grid(grid, ind, variables, step=step)
        view = grid.leaf_view()
        assert len(view.elements()) > 6
        p = assemble_solve_root_pressure(
            problem, view,
            k_x=variables["k_x"], k_r=variables["k_r"], radius=variables["radius"],
        )
        assert np.all(np.isfinite(p))
        assert collar_flux(problem, view, p, k_x=variables["k_x"]) == pytest.approx(
            total_uptake(problem, view, p, k_r=variables["k_r"], radius=variables["radius"]),
            rel=1e-10,
        )
