"""Exact linear algebra over Q and F_p."""

from fractions import Fraction

import pytest

from sheafops.linalg import GF, Matrix, QQ


def test_rational_arithmetic_is_exact():
    a = QQ(1, 3)
    b = QQ(1, 6)
    assert a + b == QQ(1, 2)
    assert QQ.format(a + b) == "1/2"
    assert QQ.parse("-2/7") == QQ(-2, 7)
    assert QQ.parse("5") == QQ(5)


def test_prime_field_arithmetic():
    F5 = GF(5)
    assert F5(3) + F5(4) == F5(2)
    assert F5(3) / F5(2) == F5(4)
    assert F5.format(F5(7)) == "2"
    with pytest.raises(ValueError):
        GF(6)


def test_rank_kernel_solve_over_q():
    m = Matrix.from_rows([[1, 2, 3], [2, 4, 6], [0, 1, 1]], QQ)
    assert m.rank() == 2
    k = m.kernel()
    assert k.cols == 1
    assert (m * k).is_zero()
    rhs = Matrix.column([QQ(1), QQ(2), QQ(1)], QQ)
    # rhs = first column + third column - ... solve consistency
    sol = m.solve(m * rhs)
    assert m * sol == m * rhs


def test_inverse_and_identity():
    m = Matrix.from_rows([[2, 1], [1, 1]], QQ)
    assert m.is_invertible()
    assert m * m.inverse() == Matrix.identity(2, QQ)
    singular = Matrix.from_rows([[1, 2], [2, 4]], QQ)
    assert not singular.is_invertible()


def test_kernel_over_fp_differs_from_q():
    F2 = GF(2)
    m2 = Matrix.from_rows([[2]], F2)
    assert m2.rank() == 0 and m2.kernel().cols == 1
    mq = Matrix.from_rows([[2]], QQ)
    assert mq.rank() == 1 and mq.kernel().cols == 0


def test_block_and_kronecker_shapes():
    a = Matrix.identity(2, QQ)
    b = Matrix.from_rows([[1, 2]], QQ)
    d = Matrix.block_diag([a, b], QQ)
    assert d.shape == (3, 4)
    k = a.kronecker(b)
    assert k.shape == (2, 4)


def test_cokernel_projection():
    m = Matrix.from_rows([[1, 0], [0, 0]], QQ)
    p = m.cokernel_projection()
    assert p.rows == 1
    assert (p * m).is_zero()


def test_no_floats_anywhere():
    m = Matrix.from_rows([[1, 2], [3, 4]], QQ)
    sol = m.solve(Matrix.identity(2, QQ))
    for row in sol.data:
        for e in row:
            assert not isinstance(e, float)
            assert Fraction(str(QQ.format(e))) == Fraction(int(e.numerator), int(e.denominator))
