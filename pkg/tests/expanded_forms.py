"""Fully expanded closed forms, used only as test oracles.

The library groups the same polynomials differently, so agreement checks
the algebra rather than a shared expression.
"""


def expanded_interval_cost(h, j, s, zeta, xi, delta, J):
    """Mixture-shift interval cost per unit time (the integral divided by h)."""
    return (
        j**2 + delta * h * j * s - delta * h * j * zeta * s + h * j * zeta * s * J / xi
        + h * s * (-6 * delta**2 * xi**2 * (zeta - 1) - 3 * (xi - 2) * zeta * J**2
                   + 2 * h * s * (delta * (xi - xi * zeta) + zeta * J) ** 2) / (6 * xi**2)
    )


def expanded_general_cost(h, s, zeta, m_x, v_x, m_y, v_y):
    return (1 / 6) * h**2 * s * (3 * (m_x**2 + v_x + zeta * (m_y**2 + v_y - m_x**2 - v_x))
                                 + 2 * h * (m_x - zeta * (m_x - m_y)) ** 2 * s)


def exponential_case_cost(h, s, delta):
    """Pure exponential shifts from target: h^2 s delta (delta + h s delta / 3)."""
    return h**2 * s * delta * (delta + h * s * delta / 3)
