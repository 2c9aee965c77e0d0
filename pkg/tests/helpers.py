"""Shared builders for the test suite."""

from pathlib import Path

from laxforge.diffpoly import CONSTANT, Ring
from laxforge.hierarchy import LaxSpec

ROOT = Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def bk_ring(variable="x"):
    """u (invertible), v, w and the constant eps, in declaration order."""
    ring = Ring(variable)
    ring.declare("eps", rule=CONSTANT)
    ring.declare("u", invertible=True)
    ring.declare("v")
    ring.declare("w")
    return ring


def generic_n1(epsilon_mode="symbolic"):
    return LaxSpec(N=1, present_orders={1, 0, -1}, invertible={1}, epsilon_mode=epsilon_mode, name="generic-n1")


def generic_n2(epsilon_mode="symbolic"):
    return LaxSpec(N=2, present_orders={2, 1, 0, -1}, invertible={2}, epsilon_mode=epsilon_mode, name="generic-n2")


def general_n2(epsilon_mode="symbolic"):
    return LaxSpec(N=2, present_orders={2, 1, 0}, general_tail=True, invertible={2}, epsilon_mode=epsilon_mode, name="general-n2")


# Reference extended Broer-Kaup flows, written out term by term.
EBK_T1 = {
    "u": "eps*u_x*v - eps*u*v_x",
    "v": "u*v_x + eps*v*v_x",
    "w": "u_x*w + u*w_x + eps*v_x*w + eps*v*w_x",
}
EBK_T2 = {
    "u": "eps*u_x*v^2 - 2*eps*u*v*v_x - 2*eps*u^2*w_x - eps*u^2*v_xx",
    "v": "2*u*u_x*w + 2*u*v*v_x + 2*u^2*w_x + u*u_x*v_x + u^2*v_xx + eps*v^2*v_x + 2*eps*u*v_x*w + eps*u*v_x^2",
    "w": (
        "2*u_x*v*w + 2*u*v_x*w + 2*u*v*w_x - u_x^2*w - 3*u*u_x*w_x - u*u_xx*w - u^2*w_xx + 2*eps*u_x*w^2"
        " + 2*eps*v*v_x*w + eps*u_x*v_x*w + eps*v^2*w_x + 4*eps*u*w*w_x + eps*u*v_x*w_x + eps*u*v_xx*w"
    ),
}
# Reference transformed system: the first flow and the second u row.
EBK1_TAU1 = {"u": "-eps*v_z", "v": "v_z", "r": "r_z"}
EBK1_U_TAU2 = "-eps*(2*r_z + v_zz + 2*v*v_z)"
