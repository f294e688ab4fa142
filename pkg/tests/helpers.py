"""Independent scalar oracles for the multilinear kernels.

Everything here is deliberately plain Python + math: term-by-term evaluation
with fsum accumulation, no numpy vectorization, no reuse of the package's
kernel code paths.  The classification rule is the same documented integer
comparison (dot^2 vs beta0^2 |a|^2 |b|^2) so both sides agree on boundary
cases exactly.
"""

from __future__ import annotations

import math


def theta_sq_scalar(nx: float, ny: float, n_thresh: float, s: float) -> float:
    r2 = nx * nx + ny * ny
    n2 = n_thresh * n_thresh
    if r2 <= n2:
        return 1.0
    return (r2 / n2) ** s


def nonresonant_scalar(n12, n14, beta0: float) -> bool:
    a2 = n12[0] * n12[0] + n12[1] * n12[1]
    b2 = n14[0] * n14[0] + n14[1] * n14[1]
    dot = n12[0] * n14[0] + n12[1] * n14[1]
    return a2 > 0 and b2 > 0 and float(dot * dot) > beta0 * beta0 * float(a2 * b2)


def m4_scalar(n1, n2, n3, n4, n_thresh, s, beta0, vhat, c) -> float:
    """Correction multiplier, re-derived term by term.

    ``vhat`` is a callable on integer frequency tuples.
    """
    n12 = (n1[0] + n2[0], n1[1] + n2[1])
    n14 = (n1[0] + n4[0], n1[1] + n4[1])
    if not nonresonant_scalar(n12, n14, beta0):
        return 0.0
    num = (
        theta_sq_scalar(n1[0], n1[1], n_thresh, s)
        - theta_sq_scalar(n2[0], n2[1], n_thresh, s)
    ) + (
        theta_sq_scalar(n3[0], n3[1], n_thresh, s)
        - theta_sq_scalar(n4[0], n4[1], n_thresh, s)
    )
    denom = 2.0 * (n12[0] * n14[0] + n12[1] * n14[1])
    return c * num * vhat((n3[0] + n4[0], n3[1] + n4[1])) / denom


def active_modes_list(k: int):
    h = k // 2 - 1
    return [(x, y) for x in range(-h, h + 1) for y in range(-h, h + 1)]


def gamma4_coefficient_quadruples(k: int):
    """All (m1, m2, m3, m4) of active modes with m1 - m2 + m3 - m4 = 0,
    found by brute scan."""
    modes = active_modes_list(k)
    h = k // 2 - 1
    quads = []
    for m1 in modes:
        for m2 in modes:
            for m3 in modes:
                m4 = (m1[0] - m2[0] + m3[0], m1[1] - m2[1] + m3[1])
                if abs(m4[0]) <= h and abs(m4[1]) <= h:
                    quads.append((m1, m2, m3, m4))
    return quads


def lambda4_bruteforce(field, n_thresh, s, beta0, vhat, c, quads, swap_pairs=False):
    """Quadruple-loop evaluation of the correction functional.

    ``field`` maps mode tuples to complex amplitudes; missing modes are zero.
    ``quads`` is the brute-scanned list from gamma4_coefficient_quadruples.
    ``swap_pairs`` evaluates the multiplier with the two conjugate pairs
    exchanged, for the pair-swap symmetry check.
    """
    re_parts, im_parts = [], []
    for m1, m2, m3, m4 in quads:
        a1 = field.get(m1, 0j)
        if not a1:
            continue
        a2 = field.get(m2, 0j)
        if not a2:
            continue
        a3 = field.get(m3, 0j)
        if not a3:
            continue
        a4 = field.get(m4, 0j)
        if not a4:
            continue
        if swap_pairs:
            w = m4_scalar(
                m3, (-m4[0], -m4[1]), m1, (-m2[0], -m2[1]), n_thresh, s, beta0, vhat, c
            )
        else:
            w = m4_scalar(
                m1, (-m2[0], -m2[1]), m3, (-m4[0], -m4[1]), n_thresh, s, beta0, vhat, c
            )
        if w == 0.0:
            continue
        term = w * a1 * a2.conjugate() * a3 * a4.conjugate()
        re_parts.append(term.real)
        im_parts.append(term.imag)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def convolve_direct(field, vhat, k: int):
    """O(K^4) direct evaluation of V * |u|^2 at the K x K collocation points.

    ``field`` maps modes to amplitudes; the spectrum of |u|^2 is formed by
    the literal double sum over mode pairs and synthesized pointwise.
    """
    pairs = {}
    for a, ca in field.items():
        for b, cb in field.items():
            key = (a[0] - b[0], a[1] - b[1])
            pairs[key] = pairs.get(key, 0j) + ca * cb.conjugate()
    out = [[0j] * k for _ in range(k)]
    for jx in range(k):
        for jy in range(k):
            x = 2.0 * math.pi * jx / k
            y = 2.0 * math.pi * jy / k
            total = 0j
            for (dx, dy), w in pairs.items():
                total += vhat((dx, dy)) * w * complex(math.cos(dx * x + dy * y), math.sin(dx * x + dy * y))
            out[jx][jy] = total
    return out
