"""Short tour: factor, Laplace chain, Cartan determinants, closures."""
from lpdokit import bkfactor as bk
from lpdokit import laplace as lp
from lpdokit.grammar import parse_operator
from lpdokit.symexpr import Exp, x, y


def section(title: str) -> None:
    print(f"\n== {title}")


def main() -> None:
    section("factor")
    A = parse_operator("Dx^2 - Dy^2 + 4*Dx + 2*Dy + 3")
    for f in bk.factor_all(A):
        print(f"omega={f.omega}: ({f.left}) o ({f.right}), l2={f.l2}")

    section("laplace chain")
    chain = lp.laplace_chain(lp.HyperbolicOp.from_lpdo(parse_operator("Dx*Dy + x*Dx + 2")), 5)
    for n, (a, b) in enumerate(chain.trace()):
        print(n, a, b)
    print("termination:", chain.termination)

    section("cartan determinants")
    for N in range(1, 6):
        print(N, lp.det_exact(lp.cartan_matrix(N)), lp.det_exact(lp.cartan_matrix(N, "periodic")) if N > 2 else "-")

    section("dn sequence of x e^y + e^x y")
    print(lp.dn_sequence(x * Exp(y) + Exp(x) * y, 4))

    section("closures")
    for kind in ("liouville", "sinh-gordon", "tzitzeica"):
        r = lp.closure_identity_check(kind)
        print(kind, "pass" if r.passed else "FAIL", r.remarks or "")


if __name__ == "__main__":
    main()
