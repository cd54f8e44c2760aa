import numpy as np
import pytest

from fraclobc import getoor_constant, normalization_constant, quad_pointwise
from fraclobc.errors import BadOrder, QuadratureNoConverge


def bump(s):
    def f(t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) < 1, (1 - np.clip(t, -1, 1) ** 2) ** s, 0.0)

    return f


def cone(alpha):
    def f(t):
        return np.abs(np.asarray(t, dtype=float)) ** alpha

    return f


class TestQuadPointwise:
    def test_constant_function_is_in_the_kernel(self):
        c = 3.0
        val = quad_pointwise(
            0.6,
            lambda t: np.full_like(np.asarray(t, dtype=float), c),
            0.0, 1.0, 10.0, second_deriv_bound=0.0,
            tail_right=("power", c, 0.0, 0.0),
            tail_left=("power", c, 0.0, 0.0),
        )
        assert val == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("x", [0.0, 0.4, -0.55])
    def test_getoor_identity_off_grid(self, x):
        s = 0.6
        r = 1 - abs(x)
        m = abs(x) + 0.5 * r  # farthest point of the inner region from 0
        b2 = (
            2 * s * (1 - m**2) ** (s - 1)
            + 4 * s * (1 - s) * m**2 * (1 - m**2) ** (s - 2)
        )
        val = quad_pointwise(
            s, bump(s), x, r / 2, 3.0,
            second_deriv_bound=b2,
            tol=1e-6,
            breakpoints=(abs(1 - x), abs(1 + x)),
        )
        assert val == pytest.approx(getoor_constant(s), abs=2e-6)

    def test_cone_homogeneity_collapse(self):
        s, alpha = 0.75, 0.9
        vals = []
        for lam in (1.0, 3.0):
            b = alpha * abs(1 - alpha) * (lam / 2) ** (alpha - 2)
            v = quad_pointwise(
                s, cone(alpha), lam, lam / 2, 10.0 * lam,
                second_deriv_bound=b,
                tol=1e-6 * lam ** (alpha - 2 * s),
                breakpoints=(lam,),
                tail_right=("power", 1.0, alpha, lam),
                tail_left=("power", 1.0, alpha, -lam),
            )
            vals.append(v / lam ** (alpha - 2 * s))
        assert vals[0] == pytest.approx(vals[1], rel=1e-4)

    def test_harmonic_cone_exponent(self):
        # |x|^{2s-1} lies in the kernel of the order-s operator off 0
        s = 0.75
        alpha = 2 * s - 1
        b = alpha * (1 - alpha) * 0.5 ** (alpha - 2)
        v = quad_pointwise(
            s, cone(alpha), 1.0, 0.5, 10.0, second_deriv_bound=b,
            tol=1e-6, breakpoints=(1.0,),
            tail_right=("power", 1.0, alpha, 1.0),
            tail_left=("power", 1.0, alpha, -1.0),
        )
        assert v == pytest.approx(0.0, abs=1e-6)

    def test_unreachable_tolerance_raises(self):
        s = 0.6
        with pytest.raises(QuadratureNoConverge):
            quad_pointwise(
                s, bump(s), 0.0, 0.5, 3.0,
                second_deriv_bound=4.0, tol=1e-13, breakpoints=(1.0,),
            )

    def test_bad_order(self):
        with pytest.raises(BadOrder):
            quad_pointwise(1.5, bump(0.5), 0.0, 0.5, 3.0, 1.0)

    def test_power_tail_requires_convergence(self):
        # tail exponent >= 2s diverges and must be refused
        with pytest.raises(QuadratureNoConverge):
            quad_pointwise(
                0.6, cone(1.3), 1.0, 0.5, 10.0,
                second_deriv_bound=1.0,
                breakpoints=(1.0,),
                tail_right=("power", 1.0, 1.3, 1.0),
                tail_left=("power", 1.0, 1.3, -1.0),
            )
