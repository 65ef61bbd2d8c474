"""Numba-compiled hot loops.

Every function here has a pure-numpy twin with the same signature in
:mod:`ndar.kernels_np`; tests check the two agree.  Randomness is always
passed in as pre-drawn uniforms so both paths consume identical streams.

Trajectory op encoding (see :func:`ndar.simulator.compile_ops`):
``kind`` 0 = two-qubit ZZ phase ``exp(-i theta/2 Z Z)``, 1 = ``RX(theta)``,
2 = ``RZ(theta)``.  ``rate`` is the damping probability applied to every
qubit the op touches; ``excited[q]`` is the bit value that decays.
"""
import math

import numpy as np
from numba import njit

OP_ZZ = 0
OP_RX = 1
OP_RZ = 2


@njit(cache=True, nogil=True)
def gray_code_minimum(h, Jsym, tol, cap):
    """Exhaustive search by Gray-code single flips.

    Returns ``(emin, idx, count)``: the minimum energy, up to ``cap`` indices
    within ``tol`` of it, and the total number of such indices.
    """
    n = h.size
    s = np.ones(n)
    field = h.copy()
    for i in range(n):
        for j in range(n):
            field[i] += Jsym[i, j]
    e0 = 0.0
    for i in range(n):
        e0 += h[i]
        for j in range(i + 1, n):
            e0 += Jsym[i, j]
    total = np.int64(1) << n

    # pass 1: minimum
    e = e0
    emin = e0
    for t in range(1, total):
        k = 0
        while ((t >> k) & 1) == 0:
            k += 1
        e += -2.0 * s[k] * field[k]
        s[k] = -s[k]
        for j in range(n):
            field[j] += 2.0 * s[k] * Jsym[j, k]
        if e < emin:
            emin = e

    # pass 2: collect minimizers (fresh start to avoid drift from pass 1)
    s[:] = 1.0
    field[:] = h
    for i in range(n):
        for j in range(n):
            field[i] += Jsym[i, j]
    e = e0
    idx = np.empty(cap, dtype=np.int64)
    count = 0
    if e <= emin + tol:
        idx[0] = 0
        count = 1
    for t in range(1, total):
        k = 0
        while ((t >> k) & 1) == 0:
            k += 1
        e += -2.0 * s[k] * field[k]
        s[k] = -s[k]
        for j in range(n):
            field[j] += 2.0 * s[k] * Jsym[j, k]
        if e <= emin + tol:
            if count < cap:
                idx[count] = t ^ (t >> 1)
            count += 1
    return emin, idx[: min(count, cap)], count


@njit(cache=True, nogil=True)
def anneal_replica(h, Jsym, betas, s0, uniforms):
    """Single-spin-flip Metropolis, sequential sweep order.

    ``uniforms`` has shape ``(sweeps, n)``.  Returns the best energy seen at
    the start or after any sweep, and its spin vector.
    """
    n = h.size
    s = s0.copy()
    field = h.copy()
    for i in range(n):
        for j in range(n):
            field[i] += Jsym[i, j] * s[j]
    e = 0.0
    for i in range(n):
        e += h[i] * s[i]
        for j in range(i + 1, n):
            e += Jsym[i, j] * s[i] * s[j]
    best = e
    best_s = s.copy()
    for sweep in range(betas.size):
        beta = betas[sweep]
        for k in range(n):
            de = -2.0 * s[k] * field[k]
            if de <= 0.0 or uniforms[sweep, k] < math.exp(-beta * de):
                s[k] = -s[k]
                e += de
                for j in range(n):
                    field[j] += 2.0 * s[k] * Jsym[j, k]
        if e < best:
            best = e
            best_s[:] = s
    return best, best_s


@njit(cache=True, nogil=True)
def _diagonal_prefix(n, kinds, q0s, q1s, thetas, rates, excited, u, psi, coef, mag):
    """Run the leading block of diagonal ops (ZZ/RZ) without touching ``psi``.

    Starting from |+>^n, diagonal gates only change phases, and damping keeps
    the magnitudes a product over qubits.  Branch probabilities therefore
    come from per-qubit magnitudes, and a jump on ``q`` just negates every
    phase coefficient accumulated on ``q`` (amplitudes move from the excited
    to the ground value of that bit).  The state is materialised once at the
    end.  Returns ``(ops consumed, uniforms consumed)``.
    """
    # mag[q, b]: magnitude factor of qubit q for bit value b
    # coef[i, j] (i < j) and coef[i, i]: phase exp(-i sum coef s_i s_j - i sum coef_ii s_i)
    for q in range(n):
        mag[q, 0] = 1.0 / math.sqrt(2.0)
        mag[q, 1] = 1.0 / math.sqrt(2.0)
        for r in range(n):
            coef[q, r] = 0.0
    k = 0
    op = 0
    while op < kinds.size and kinds[op] != OP_RX:
        i = q0s[op]
        gam = rates[op]
        if kinds[op] == OP_ZZ:
            j = q1s[op]
            if i < j:
                coef[i, j] += 0.5 * thetas[op]
            else:
                coef[j, i] += 0.5 * thetas[op]
            if gam > 0.0:
                _damp_product(n, i, excited[i], gam, u[k], mag, coef)
                _damp_product(n, j, excited[j], gam, u[k + 1], mag, coef)
            k += 2
        else:
            coef[i, i] += 0.5 * thetas[op]
            if gam > 0.0:
                _damp_product(n, i, excited[i], gam, u[k], mag, coef)
            k += 1
        op += 1

    # materialise by doubling over qubits.  Flipping bit q (0 -> 1) with
    # lower bits y and higher bits 0 multiplies the amplitude by
    # exp(2i K_q(y)), K_q(y) = coef_qq + sum_{r>q} coef_qr + sum_{r<q} coef_rq s_r(y),
    # which is itself a product of per-bit factors.
    phi0 = 0.0
    for q in range(n):
        for r in range(q, n):
            phi0 += coef[q, r]
    psi[0] = complex(math.cos(phi0), -math.sin(phi0))
    E = np.empty(psi.size // 2 if psi.size > 1 else 1, dtype=np.complex128)
    size = 1
    for q in range(n):
        kq = coef[q, q]
        for r in range(n):
            if r < q:
                kq += coef[r, q]
            elif r > q:
                kq += coef[q, r]
        E[0] = complex(math.cos(2.0 * kq), math.sin(2.0 * kq))
        sz = 1
        for r in range(q):
            w = complex(math.cos(4.0 * coef[r, q]), -math.sin(4.0 * coef[r, q]))
            for y in range(sz):
                E[y + sz] = E[y] * w
            sz *= 2
        m0 = mag[q, 0]
        m1 = mag[q, 1]
        for y in range(size):
            psi[y + size] = psi[y] * E[y] * m1
            psi[y] = psi[y] * m0
        size *= 2
    return op, k


@njit(cache=True, nogil=True)
def _damp_product(n, q, e, gam, uq, mag, coef):
    me = mag[q, e]
    mg = mag[q, 1 - e]
    p_exc = me * me / (me * me + mg * mg)
    if uq < gam * p_exc:
        mag[q, 1 - e] = 1.0
        mag[q, e] = 0.0
        for r in range(n):
            if r < q:
                coef[r, q] = -coef[r, q]
            elif r > q:
                coef[q, r] = -coef[q, r]
        coef[q, q] = -coef[q, q]
    else:
        me = me * math.sqrt(1.0 - gam)
        nrm = math.sqrt(me * me + mg * mg)
        mag[q, e] = me / nrm
        mag[q, 1 - e] = mg / nrm


@njit(cache=True, nogil=True)
def _trajectory(n, kinds, q0s, q1s, thetas, rates, excited, u, psi, finalize, fast, coef, mag):
    dim = psi.size
    op0 = 0
    k = 0
    if fast:
        op0, k = _diagonal_prefix(n, kinds, q0s, q1s, thetas, rates, excited, u, psi, coef, mag)
    else:
        amp = 1.0 / math.sqrt(dim)
        for x in range(dim):
            psi[x] = amp
    # Pending no-jump factors and normalisation from the previous op are
    # applied lazily in the next pass: amplitude x is scaled by
    # fa[bit pa of x] * fb[bit pb of x].
    pa = 0
    pb = 0
    fa = np.ones(2)
    fb = np.ones(2)
    t = np.zeros((2, 2))
    for op in range(op0, kinds.size):
        kind = kinds[op]
        i = q0s[op]
        th = thetas[op]
        gam = rates[op]
        cth = math.cos(th / 2)
        sth = math.sin(th / 2)
        t[0, 0] = 0.0
        t[0, 1] = 0.0
        t[1, 0] = 0.0
        t[1, 1] = 0.0
        if kind == OP_ZZ:
            j = q1s[op]
            for x in range(dim):
                f = fa[(x >> pa) & 1] * fb[(x >> pb) & 1]
                bi = (x >> i) & 1
                bj = (x >> j) & 1
                # exp(-i th/2) when bits agree, exp(+i th/2) otherwise
                sgn = 1.0 - 2.0 * (bi ^ bj)
                ar = psi[x].real * f
                ai = psi[x].imag * f
                nr = ar * cth + sgn * ai * sth
                ni = ai * cth - sgn * ar * sth
                psi[x] = complex(nr, ni)
                t[bi, bj] += nr * nr + ni * ni
        elif kind == OP_RX:
            j = -1
            step = np.int64(1) << i
            for blk in range(0, dim, 2 * step):
                for off in range(step):
                    x0 = blk + off
                    x1 = x0 + step
                    f0 = fa[(x0 >> pa) & 1] * fb[(x0 >> pb) & 1]
                    f1 = fa[(x1 >> pa) & 1] * fb[(x1 >> pb) & 1]
                    a0r = psi[x0].real * f0
                    a0i = psi[x0].imag * f0
                    a1r = psi[x1].real * f1
                    a1i = psi[x1].imag * f1
                    n0r = cth * a0r + sth * a1i
                    n0i = cth * a0i - sth * a1r
                    n1r = sth * a0i + cth * a1r
                    n1i = cth * a1i - sth * a0r
                    psi[x0] = complex(n0r, n0i)
                    psi[x1] = complex(n1r, n1i)
                    t[0, 0] += n0r * n0r + n0i * n0i
                    t[1, 0] += n1r * n1r + n1i * n1i
        else:
            j = -1
            for x in range(dim):
                f = fa[(x >> pa) & 1] * fb[(x >> pb) & 1]
                bi = (x >> i) & 1
                sgn = 1.0 - 2.0 * bi
                ar = psi[x].real * f
                ai = psi[x].imag * f
                nr = ar * cth + sgn * ai * sth
                ni = ai * cth - sgn * ar * sth
                psi[x] = complex(nr, ni)
                t[bi, 0] += nr * nr + ni * ni
        pa = 0
        pb = 0
        fa[0] = 1.0
        fa[1] = 1.0
        fb[0] = 1.0
        fb[1] = 1.0
        if j >= 0:
            ei = excited[i]
            ej = excited[j]
            # relabel so index 1 means "excited"
            t11 = t[ei, ej]
            t10 = t[ei, 1 - ej]
            t01 = t[1 - ei, ej]
            t00 = t[1 - ei, 1 - ej]
            if gam > 0.0:
                total = t00 + t01 + t10 + t11
                jump_i = u[k] < gam * (t10 + t11) / total
                if jump_i:
                    pj = t11 / (t10 + t11)
                else:
                    pj = (t01 + (1.0 - gam) * t11) / (t00 + t01 + (1.0 - gam) * (t10 + t11))
                jump_j = u[k + 1] < gam * pj
                # squared norm of the chosen branch; jumps move amplitude
                # without the sqrt(gam) factor, which normalisation absorbs
                wi1 = 1.0 if jump_i else 1.0 - gam
                wi0 = 0.0 if jump_i else 1.0
                wj1 = 1.0 if jump_j else 1.0 - gam
                wj0 = 0.0 if jump_j else 1.0
                norm = t00 * wi0 * wj0 + t01 * wi0 * wj1 + t10 * wi1 * wj0 + t11 * wi1 * wj1
                g = 1.0 / math.sqrt(norm)
                if jump_i:
                    _jump(psi, i, ei)
                else:
                    pa = i
                    fa[ei] = math.sqrt(1.0 - gam)
                if jump_j:
                    _jump(psi, j, ej)
                else:
                    pb = j
                    fb[ej] = math.sqrt(1.0 - gam)
                fa[0] *= g
                fa[1] *= g
            k += 2
        else:
            eq = excited[i]
            t_exc = t[eq, 0]
            t_gnd = t[1 - eq, 0]
            if gam > 0.0:
                if u[k] < gam * t_exc / (t_gnd + t_exc):
                    _jump(psi, i, eq)
                    g = 1.0 / math.sqrt(t_exc)
                else:
                    pa = i
                    fa[eq] = math.sqrt(1.0 - gam)
                    g = 1.0 / math.sqrt(t_gnd + (1.0 - gam) * t_exc)
                fa[0] *= g
                fa[1] *= g
            k += 1

    # flush pending factors and measure (or just stop, for diagnostics)
    total = 0.0
    for x in range(dim):
        a = psi[x] * (fa[(x >> pa) & 1] * fb[(x >> pb) & 1])
        psi[x] = a
        total += a.real * a.real + a.imag * a.imag
    if finalize:
        return -1
    r = u[k] * total
    acc = 0.0
    last = 0
    for x in range(dim):
        w = psi[x].real * psi[x].real + psi[x].imag * psi[x].imag
        if w > 0.0:
            last = x
        acc += w
        if acc > r:
            return x
    return last


@njit(cache=True, nogil=True)
def _jump(psi, q, e):
    """Apply ``|g><e|`` on qubit ``q`` (unnormalised, no sqrt(gamma))."""
    step = np.int64(1) << q
    dim = psi.size
    for blk in range(0, dim, 2 * step):
        for off in range(step):
            x0 = blk + off
            x1 = x0 + step
            if e == 1:
                psi[x0] = psi[x1]
                psi[x1] = 0.0
            else:
                psi[x1] = psi[x0]
                psi[x0] = 0.0


@njit(cache=True, nogil=True)
def run_trajectories(n, kinds, q0s, q1s, thetas, rates, excited, uniforms, out, fast=True):
    """Sample one outcome index per row of ``uniforms`` into ``out``.

    ``fast=False`` disables the product-state shortcut for the leading
    diagonal block (kept for cross-checking).
    """
    psi = np.empty(np.int64(1) << n, dtype=np.complex128)
    coef = np.empty((n, n))
    mag = np.empty((n, 2))
    for shot in range(uniforms.shape[0]):
        out[shot] = _trajectory(
            n, kinds, q0s, q1s, thetas, rates, excited, uniforms[shot], psi, False, fast, coef, mag
        )


@njit(cache=True, nogil=True)
def trajectory_state(n, kinds, q0s, q1s, thetas, rates, excited, u, fast=True):
    """Final state of a single trajectory, without a closing renormalisation.

    The lazy per-op normalisation should already leave it at unit norm.
    """
    psi = np.empty(np.int64(1) << n, dtype=np.complex128)
    coef = np.empty((n, n))
    mag = np.empty((n, 2))
    _trajectory(n, kinds, q0s, q1s, thetas, rates, excited, u, psi, True, fast, coef, mag)
    return psi
