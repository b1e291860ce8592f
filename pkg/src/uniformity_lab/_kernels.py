"""Compiled inner loops for the direct Gowers enumeration."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def direct_row(f, d, h1):
    """``sum over x, h_2..h_d`` of ``Delta_{h_1} ... Delta_{h_d} f(x)`` for one fixed ``h_1``.

    Derivative levels are rebuilt odometer-style as the shift digits change;
    the innermost ``(h_d, x)`` plane is summed per ``h_d`` and those partials
    are Kahan-accumulated.  Returns ``(re, im)``.
    """
    n = f.size
    lv = np.empty((max(d, 2), n), np.complex128)
    for x in range(n):
        lv[0, x] = f[x]
    for x in range(n):
        y = x + h1
        if y >= n:
            y -= n
        lv[1, x] = f[y] * np.conj(f[x])

    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    if d == 1:
        for x in range(n):
            v = lv[1, x]
            yv = v.real - cr
            t = sr + yv
            cr = (t - sr) - yv
            sr = t
            yv = v.imag - ci
            t = si + yv
            ci = (t - si) - yv
            si = t
        return sr, si

    digits = np.zeros(max(d - 2, 1), np.int64)
    k0 = 2
    while True:
        for k in range(k0, d):
            h = digits[k - 2]
            for x in range(n):
                y = x + h
                if y >= n:
                    y -= n
                lv[k, x] = lv[k - 1, y] * np.conj(lv[k - 1, x])
        for hd in range(n):
            accr = 0.0
            acci = 0.0
            for x in range(n):
                y = x + hd
                if y >= n:
                    y -= n
                a = lv[d - 1, y]
                b = lv[d - 1, x]
                accr += a.real * b.real + a.imag * b.imag
                acci += a.imag * b.real - a.real * b.imag
            yv = accr - cr
            t = sr + yv
            cr = (t - sr) - yv
            sr = t
            yv = acci - ci
            t = si + yv
            ci = (t - si) - yv
            si = t
        if d <= 2:
            break
        j = d - 3
        while j >= 0:
            digits[j] += 1
            if digits[j] < n:
                break
            digits[j] = 0
            j -= 1
        if j < 0:
            break
        k0 = j + 2
    return sr, si
