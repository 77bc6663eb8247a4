"""Graph generators, weight decomposition, and the lazy Laplacian."""


import numpy as np
import pytest

from dirlap import (SymmetricView, apply_laplacian, builtin_graph,
                    decompose_edge, generator_from_edges, validate_generator)
from dirlap.errors import DegreeCapError
from dirlap.graph import GraphGenerator

from helpers import dense_laplacian, k2_generator


class TestDecomposeEdge:
    def test_line_graph_values(self):
        g = builtin_graph("example-2.2")
        ws, wk = decompose_edge((2,), (3,), g)
        assert ws == pytest.approx(1.0, abs=1e-15)
        assert wk == pytest.approx(-0.2, abs=1e-15)

    def test_line_graph_sym_weight_is_one_everywhere(self):
        g = builtin_graph("example-2.2")
        for n in range(-6, 7):
            ws, wk = decompose_edge((n,), (n + 1,), g)
            assert ws == 1.0
            assert wk == pytest.approx(-1.0 / (1.0 + n * n), rel=1e-15)

    def test_symmetric_pair(self):
        g = generator_from_edges({((0,), (1,)): 3.5, ((1,), (0,)): 3.5}, (0,))
        assert decompose_edge((0,), (1,), g) == (3.5, 0.0)

    def test_advection_one_way_edge(self):
        g = builtin_graph("z2-advection")
        assert decompose_edge((0, 1), (0, 0), g) == (0.5, 0.5)

    def test_absent_pair_is_zero(self):
        g = builtin_graph("example-2.2")
        assert decompose_edge((0,), (5,), g) == (0.0, 0.0)

    def test_same_vertex_rejected(self):
        g = builtin_graph("example-2.2")
        with pytest.raises(ValueError):
            decompose_edge((1,), (1,), g)


class TestSymmetricView:
    def test_exact_symmetry_and_antisymmetry(self):
        view = SymmetricView(builtin_graph("z2-skew-perturbed", a=0.7))
        rng = np.random.default_rng(3)
        for _ in range(200):
            v = (int(rng.integers(-8, 9)), int(rng.integers(-8, 9)))
            axis, step = int(rng.integers(2)), int(rng.choice([-1, 1]))
            u = list(v)
            u[axis] += step
            u = tuple(u)
            assert view.w_sym(v, u) == view.w_sym(u, v)
            assert view.w_skew(v, u) + view.w_skew(u, v) == 0.0

    def test_decomposition_identity(self):
        view = SymmetricView(builtin_graph("example-2.2"))
        for n in range(-10, 10):
            v, u = (n,), (n + 1,)
            w_forward, _ = view.directed_pair(v, u)
            recombined = view.w_sym(v, u) + view.w_skew(v, u)
            assert abs(recombined - w_forward) <= 1e-15 * max(1.0, abs(w_forward))

    def test_missing_edge_from_zero(self):
        view = SymmetricView(builtin_graph("example-2.2"))
        out, _ = view.edges((0,))
        assert (1,) not in out  # w(0,1) = 0 means no edge
        out1, _ = view.edges((1,))
        assert out1[(0,)] == 2.0

    def test_degree_cap(self):
        def adjacency(v):
            nbrs = {(v[0] + k,): 1.0 for k in range(1, 100)}
            return nbrs, dict(nbrs)

        g = GraphGenerator(adjacency=adjacency, root=(0,), degree_cap=16)
        with pytest.raises(DegreeCapError):
            SymmetricView(g).edges((0,))


class TestApplyLaplacian:
    def test_constant_in_kernel_on_interior(self):
        g = builtin_graph("z-lattice", d=2)
        x = {(i, j): 1.0 for i in range(-2, 3) for j in range(-2, 3)
             if abs(i) + abs(j) <= 2}
        result = apply_laplacian(x, g, part="sym")
        assert abs(result[(0, 0)]) <= 1e-13

    def test_indicator_hand_values(self):
        g = builtin_graph("example-2.2")
        result = apply_laplacian({(0,): 1.0}, g, part="sym")
        assert result[(0,)] == pytest.approx(-2.0, abs=1e-14)
        assert result[(1,)] == pytest.approx(1.0, abs=1e-14)
        assert result[(-1,)] == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("part", ["full", "sym", "skew"])
    def test_matches_dense_oracle(self, part):
        import dirlap

        g = builtin_graph("example-2.2")
        b = dirlap.ball(g, (0,), 4)
        rng = np.random.default_rng(11)
        x = {(k,): float(rng.normal()) for k in range(-2, 3)}
        result = apply_laplacian(x, g, part=part)
        m = dense_laplacian(g, b, part)
        vec = np.zeros(len(b))
        for v, val in x.items():
            vec[b.index[v]] = val
        image = m @ vec
        for v, val in result.items():
            # support + one hop stays in the interior, where the ball
            # restriction is exact
            assert val == pytest.approx(float(image[b.index[v]]), abs=1e-13)

    def test_parts_sum_to_full(self):
        g = builtin_graph("z2-skew-perturbed", a=0.4)
        rng = np.random.default_rng(5)
        x = {(int(rng.integers(-3, 4)), int(rng.integers(-3, 4))): float(rng.normal())
             for _ in range(6)}
        full = apply_laplacian(x, g, "full")
        sym = apply_laplacian(x, g, "sym")
        skew = apply_laplacian(x, g, "skew")
        for v in full:
            assert full[v] == pytest.approx(sym.get(v, 0.0) + skew.get(v, 0.0),
                                            abs=1e-14)

    def test_symmetric_mass_conservation(self):
        g = builtin_graph("example-2.2")
        rng = np.random.default_rng(7)
        x = {(k,): float(rng.normal()) for k in range(-4, 5)}
        result = apply_laplacian(x, g, part="sym")
        l1 = sum(abs(v) for v in x.values())
        assert abs(sum(result.values())) <= 1e-12 * l1

    def test_unknown_part_rejected(self):
        with pytest.raises(ValueError):
            apply_laplacian({(0,): 1.0}, builtin_graph("example-2.2"), part="both")


class TestValidateGenerator:
    def test_line_graph_clean(self):
        report = validate_generator(builtin_graph("example-2.2"), 10)
        assert report.ok
        assert report.vertices_checked == 21

    def test_advection_clean(self):
        report = validate_generator(builtin_graph("z2-advection"), 10)
        assert report.ok

    def test_planted_inconsistency_found(self):
        def adjacency(v):
            (n,) = v
            out = {(n + 1,): 1.0, (n - 1,): 1.0}
            inn = {(n + 1,): 1.0, (n - 1,): 2.0 if n == 3 else 1.0}
            return out, inn

        g = GraphGenerator(adjacency=adjacency, root=(0,), name="planted")
        report = validate_generator(g, 5)
        kinds = {v.kind for v in report.violations}
        assert "weight-consistency" in kinds
        flagged = {frozenset(v.vertices) for v in report.violations}
        assert frozenset({(2,), (3,)}) in flagged

    def test_zero_weight_reported(self):
        def adjacency(v):
            (n,) = v
            return {(n + 1,): 0.0, (n - 1,): 1.0}, {(n + 1,): 1.0, (n - 1,): 0.0}

        g = GraphGenerator(adjacency=adjacency, root=(0,))
        report = validate_generator(g, 2)
        assert any(v.kind == "zero-weight" for v in report.violations)

    def test_negative_symmetric_rejected(self):
        g = generator_from_edges(
            {((0,), (1,)): -2.0, ((1,), (0,)): 1.0,
             ((1,), (2,)): 1.0, ((2,), (1,)): 1.0}, (0,))
        report = validate_generator(g, 2)
        assert any(v.kind == "negative-symmetric" for v in report.violations)

    def test_negative_weight_with_positive_average_is_note(self):
        g = generator_from_edges(
            {((0,), (1,)): -0.5, ((1,), (0,)): 2.0,
             ((1,), (2,)): 1.0, ((2,), (1,)): 1.0,
             ((0,), (-1,)): 1.0, ((-1,), (0,)): 1.0}, (0,))
        report = validate_generator(g, 2)
        assert report.ok
        assert any("negative directed weight" in note for note in report.notes)

    def test_radius_precondition(self):
        with pytest.raises(ValueError):
            validate_generator(builtin_graph("example-2.2"), 0)

    def test_vertex_budget_raises(self):
        from dirlap import ValidationConfig
        from dirlap.errors import BudgetExceededError

        with pytest.raises(BudgetExceededError):
            validate_generator(builtin_graph("z-lattice", d=2), 40,
                               ValidationConfig(vertex_budget=50))


class TestBuiltins:
    def test_z_lattice_degrees(self):
        view = SymmetricView(builtin_graph("z-lattice", d=2))
        out, inn = view.edges((3, -1))
        assert len(out) == len(inn) == 4
        assert all(w == 1.0 for w in out.values())

    def test_advection_row_zero_out_edges(self):
        view = SymmetricView(builtin_graph("z2-advection"))
        out, _ = view.edges((5, 0))
        assert out == {(4, 0): 1.0}

    def test_skew_perturbed_positive_weights(self):
        view = SymmetricView(builtin_graph("z2-skew-perturbed", a=0.9))
        for v in [(0, 0), (1, 2), (-3, 1)]:
            out, inn = view.edges(v)
            assert all(w > 0 for w in out.values())
            assert all(w > 0 for w in inn.values())
            for u in out:
                assert view.w_sym(v, u) == 1.0

    def test_skew_perturbed_parameter_range(self):
        with pytest.raises(ValueError):
            builtin_graph("z2-skew-perturbed", a=1.0)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown graph"):
            builtin_graph("moebius")

    def test_consistency_validation_all_families(self):
        for name, kwargs in [("example-2.2", {}), ("z-lattice", {"d": 3}),
                             ("z2-advection", {}),
                             ("z2-skew-perturbed", {"a": 0.5})]:
            assert validate_generator(builtin_graph(name, **kwargs), 4).ok, name

    def test_generator_from_edges_rejects_zero_and_loops(self):
        with pytest.raises(ValueError):
            generator_from_edges({((0,), (1,)): 0.0}, (0,))
        with pytest.raises(ValueError):
            generator_from_edges({((0,), (0,)): 1.0}, (0,))

    def test_k2_finite(self):
        assert validate_generator(k2_generator(), 1).ok
