import random

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lpdokit import laplace as lp
from lpdokit.grammar import parse_operator as P
from lpdokit.lpdo import NotNormalForm, gauge_conjugate
from lpdokit.random_ops import PolyConfig, random_hyperbolic, random_poly
from lpdokit.symexpr import Exp, FuncSymbol, Log, diff, is_zero, k, normalize, x, y

seeds = st.integers(min_value=0, max_value=10**6)
small = PolyConfig(degree=1, bound=3)
EXAMPLE = lp.HyperbolicOp(x, 0, 2)


class TestInvariants:
    def test_example(self):
        inv = lp.laplace_invariants(EXAMPLE)
        assert inv.as_tuple() == (-1, -2)

    def test_opaque(self):
        a, b, c = FuncSymbol("a"), FuncSymbol("b"), FuncSymbol("c")
        inv = lp.laplace_invariants(lp.HyperbolicOp(a, b, c))
        assert inv.a_hat == normalize(a * b + FuncSymbol("a", 1, 0) - c)
        assert inv.b_hat == normalize(a * b + FuncSymbol("b", 0, 1) - c)

    @given(seeds)
    def test_gauge_invariant(self, seed):
        rng = random.Random(seed)
        op = random_hyperbolic(rng, small)
        phi = random_poly(rng, small)
        assert lp.equivalent(op, lp.gauge(op, phi))

    def test_opaque_gauge(self):
        op = lp.HyperbolicOp(FuncSymbol("a"), FuncSymbol("b"), FuncSymbol("c"))
        assert lp.equivalent(op, lp.gauge(op, FuncSymbol("phi")))

    def test_inequivalent(self):
        assert not lp.equivalent(EXAMPLE, lp.HyperbolicOp(0, 0, 2))

    def test_from_lpdo(self):
        assert lp.HyperbolicOp.from_lpdo(P("Dx*Dy + x*Dx + 2")) == EXAMPLE
        with pytest.raises(NotNormalForm):
            lp.HyperbolicOp.from_lpdo(P("Dx^2 + Dy"))
        assert EXAMPLE.swapped() == lp.HyperbolicOp(0, y, 2)

    def test_gauge_matches_operator_conjugation(self):
        op = lp.HyperbolicOp(x * y, 1, x)
        phi = x**2 + y
        assert lp.gauge(op, phi).to_lpdo() == gauge_conjugate(op.to_lpdo(), phi)


class TestTransform:
    def test_example_step(self):
        new = lp.laplace_transform(EXAMPLE)
        assert lp.laplace_invariants(new).as_tuple() == (0, -1)

    @given(seeds)
    def test_invariant_map(self, seed):
        op = random_hyperbolic(random.Random(seed), small)
        inv = lp.laplace_invariants(op)
        if is_zero(inv.a_hat):
            with pytest.raises(lp.FactorizableStop):
                lp.laplace_transform(op)
            return
        new = lp.laplace_invariants(lp.laplace_transform(op))
        assert normalize(new.b_hat - inv.a_hat, rational=True) == 0
        log_term = diff(diff(Log(inv.a_hat), x), y)
        assert is_zero(new.a_hat - (2 * inv.a_hat - inv.b_hat - log_term))

    def test_directions_are_inverse(self):
        op = lp.HyperbolicOp(x, y**2, x * y)
        there = lp.laplace_transform(op, "a")
        back = lp.laplace_transform(there, "b")
        assert lp.equivalent(op, back)

    def test_direction_b_mirrors(self):
        op = lp.HyperbolicOp(y, x**2, x + y)
        via_b = lp.laplace_transform(op, "b")
        via_swap = lp.laplace_transform(op.swapped(), "a").swapped()
        assert via_b == via_swap

    def test_factorizable_stop(self):
        with pytest.raises(lp.FactorizableStop):
            lp.laplace_transform(lp.HyperbolicOp(x, 0, 1))

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            lp.laplace_transform(EXAMPLE, "c")


class TestChain:
    def test_example_chain(self):
        chain = lp.laplace_chain(EXAMPLE, 5)
        assert chain.trace() == [(-1, -2), (0, -1)]
        assert chain.termination == lp.HIT_FACTORIZABLE
        assert chain.operators[-1].to_lpdo() == P("Dx*Dy + x*Dx + 1")
        out = chain.to_json()
        assert out["termination"] == "hit_factorizable" and len(out["states"]) == 2

    def test_runs_to_limit(self):
        chain = lp.laplace_chain(lp.HyperbolicOp(0, x + y, x * y + 1), 2)
        assert len(chain) == 3 and chain.termination == lp.RAN_TO_LIMIT

    def test_limit_validation(self):
        with pytest.raises(ValueError):
            lp.laplace_chain(EXAMPLE, 0)

    def test_reduced_chain_tracks_laplace_chain(self):
        chain = lp.laplace_chain(lp.HyperbolicOp(0, x + y, x * y + 1), 2)
        reduced = lp.reduced_chain(x + y, x * y + 1, 2)
        for (b, c), op in zip(reduced, chain.operators):
            assert lp.equivalent(lp.HyperbolicOp(0, b, c), op)

    def test_recurrence(self):
        chain = lp.laplace_chain(lp.HyperbolicOp(0, x + y, x * y + 1), 3)
        assert lp.verify_recurrence(chain)

    def test_recurrence_rejects_wrong_sequence(self):
        assert not lp.recurrence_holds([1, x * y + 1, 3])
        with pytest.raises(lp.PreconditionError):
            lp.recurrence_holds([1, 2])
        with pytest.raises(lp.PreconditionError):
            lp.recurrence_holds([1, 0, 3])


class TestMatrices:
    @pytest.mark.parametrize("N", range(1, 9))
    def test_truncated(self, N):
        M = lp.cartan_matrix(N)
        assert lp.det_exact(M) == (-1) ** N * (N + 1) == M.to_sympy().det()

    @pytest.mark.parametrize("N", range(3, 9))
    def test_periodic(self, N):
        M = lp.cartan_matrix(N, "periodic")
        assert lp.det_exact(M) == 0
        assert M.apply([1] * N) == [0] * N

    def test_shapes_and_errors(self):
        assert lp.cartan_matrix(1).rows == ((-2,),)
        with pytest.raises(lp.PeriodicTooSmall):
            lp.cartan_matrix(2, "periodic")
        with pytest.raises(ValueError):
            lp.cartan_matrix(0)
        with pytest.raises(ValueError):
            lp.cartan_matrix(3, "bloch")

    @pytest.mark.parametrize("N", range(1, 6))
    def test_shift_matrix(self, N):
        T = lp.shift_matrix(N)
        assert T[N - 1, 0] == k**N
        assert sp.expand(lp.det_exact(T) - T.to_sympy().det()) == 0

    def test_closure_system_agrees_with_matrix(self):
        u = [FuncSymbol(f"u{i}") for i in range(1, 5)]
        for closure in ("truncated", "periodic"):
            assert lp.closure_system(4, closure, u) == lp.cartan_rhs(4, closure, u)


class TestDeterminants:
    def test_first(self):
        w = FuncSymbol("w")
        assert lp.dn_sequence(w, 1) == [1, w]

    @given(seeds)
    def test_log_identity(self, seed):
        rng = random.Random(seed)
        w = random_poly(rng, small, nonzero=True) + Exp(random_poly(rng, small))
        d = lp.dn_sequence(w, 2)
        assert is_zero(diff(diff(Log(d[1]), x), y) - d[2] * d[0] / d[1] ** 2)

    def test_rank_two(self):
        d = lp.dn_sequence(x * Exp(y) + Exp(x) * y, 4)
        assert d[3] == 0 and d[4] == 0 and d[2] != 0

    def test_rank_one(self):
        X, Y = FuncSymbol("X", depends="x"), FuncSymbol("Y", depends="y")
        assert lp.dn_sequence(X * Y, 2)[2] == 0


class TestShiftAlgebra:
    def test_open_relations(self):
        # constant c with y-independent b
        assert lp.commutator_check([x, x, x], [1, 1, 1])
        assert not lp.commutator_check([x, y, x], [1, 2, 3])

    def test_periodic(self):
        assert lp.commutator_check([x, x], [1, 1], 2)
        assert not lp.commutator_check([x, y], [1, 2], 2)

    def test_slots_vanish_when_relations_hold(self):
        slots = lp.commutator_slots([x, x, x], [1, 1, 1])
        assert all(not ops for ops in slots.values())

    def test_shift_rule(self):
        A, B = lp.lax_pair([x, y, x * y], [1, 2, 3])
        C = A * B
        # T^0 slot: Dy o (Dx + b_n) + (c_n T) o (-T^-1)
        assert C.at(1)[0] == P("Dx*Dy + y*Dy + 1 - 2")
        # T^1 slot: c_n T o (Dx + b) = c_n (Dx + b_{n+1}) T
        assert C.at(1)[1] == P("2*Dx + 2*x*y")

    def test_toda_lattice(self):
        assert lp.toda_gauge_check(N=3)

    def test_toda_explicit_family(self):
        # q_n = n*x + y solves the lattice trivially, q_n = n^2*x*y does not
        assert lp.toda_gauge_check([x * n + y for n in range(6)], N=3)
        assert not lp.toda_gauge_check([n**2 * x * y for n in range(6)], N=3)

    def test_bloch_commutator_shape(self):
        M = lp.bloch_commutator([x, x], [1, 1])
        assert M.shape == (2, 2)


class TestClosures:
    def test_liouville(self):
        r = lp.closure_identity_check("liouville")
        assert r.passed and all(v == 0 for v in r.residuals.values())

    def test_tzitzeica(self):
        r = lp.closure_identity_check("tzitzeica")
        assert r.passed

    def test_sinh_gordon_scale_is_reported(self):
        r = lp.closure_identity_check("sinh-gordon")
        assert r.passed and r.kappa == 2 and r.remarks
        assert r.to_json()["kappa"] == "2"

    def test_unknown(self):
        with pytest.raises(ValueError):
            lp.closure_identity_check("kdv")


class TestBloch:
    def test_reduction(self):
        b1, b2 = FuncSymbol("b1"), FuncSymbol("b2")
        one, p, q = lp.bloch_reduce(b1, b2)
        assert one == 1
        assert p == normalize(b1 + b2)
        assert q == normalize(diff(b2, x) + b1 * b2 - k**-2)

    def test_reduction_solves_system(self):
        # substitute the explicit psi2 equation back into the first-order system
        b1, b2 = x, 1
        _, p, q = lp.bloch_reduce(b1, b2)
        assert p == x + 1
        assert normalize(q - (x - 1 / k**2)) == 0
