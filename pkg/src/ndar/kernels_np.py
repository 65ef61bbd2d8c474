"""Pure-numpy implementations of the kernels in :mod:`ndar.kernels`.

Same signatures and the same uniform-consumption order, so results match the
compiled path up to floating-point rounding.  Vectorised over the state (or
over replicas) instead of looping element by element.
"""
import numpy as np

OP_ZZ = 0
OP_RX = 1
OP_RZ = 2


def _all_energies(h, Jsym):
    n = h.size
    out = np.empty(1 << n)
    chunk = 1 << min(n, 16)
    J = np.triu(Jsym, 1)
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, out.size, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        S = 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)
        out[start:start + chunk] = S @ h + np.einsum("mi,mi->m", S @ J, S)
    return out


def gray_code_minimum(h, Jsym, tol, cap):
    # no incremental trick here: plain vectorised enumeration
    E = _all_energies(np.asarray(h, float), np.asarray(Jsym, float))
    emin = E.min()
    idx = np.flatnonzero(E <= emin + tol)
    return emin, idx[:cap].astype(np.int64), idx.size


def anneal_replica(h, Jsym, betas, s0, uniforms):
    n = h.size
    s = np.array(s0, dtype=float)
    field = h + Jsym @ s
    e = float(h @ s + s @ np.triu(Jsym, 1) @ s)
    best = e
    best_s = s.copy()
    for sweep, beta in enumerate(betas):
        for k in range(n):
            de = -2.0 * s[k] * field[k]
            if de <= 0.0 or uniforms[sweep, k] < np.exp(-beta * de):
                s[k] = -s[k]
                e += de
                field += 2.0 * s[k] * Jsym[:, k]
        if e < best:
            best = e
            best_s = s.copy()
    return best, best_s


def _bit_tables(n):
    x = np.arange(1 << n, dtype=np.int64)
    return [((x >> q) & 1).astype(bool) for q in range(n)]


def _trajectory(n, kinds, q0s, q1s, thetas, rates, excited, u, bits):
    """Returns the final normalised state and the number of uniforms consumed."""
    dim = 1 << n
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    exc = [bits[q] if excited[q] == 1 else ~bits[q] for q in range(n)]
    k = 0
    for op in range(len(kinds)):
        kind, i, th, gam = kinds[op], q0s[op], thetas[op], rates[op]
        if kind == OP_ZZ:
            j = q1s[op]
            same = bits[i] == bits[j]
            psi *= np.where(same, np.exp(-0.5j * th), np.exp(0.5j * th))
            w = np.abs(psi) ** 2
            if gam > 0.0:
                ei, ej = exc[i], exc[j]
                t11 = w[ei & ej].sum()
                t10 = w[ei & ~ej].sum()
                t01 = w[~ei & ej].sum()
                t00 = w[~ei & ~ej].sum()
                total = t00 + t01 + t10 + t11
                jump_i = u[k] < gam * (t10 + t11) / total
                if jump_i:
                    pj = t11 / (t10 + t11)
                else:
                    pj = (t01 + (1.0 - gam) * t11) / (t00 + t01 + (1.0 - gam) * (t10 + t11))
                jump_j = u[k + 1] < gam * pj
                psi = _damp(psi, i, exc[i], gam, jump_i)
                psi = _damp(psi, j, exc[j], gam, jump_j)
            k += 2
        else:
            if kind == OP_RX:
                c, s = np.cos(th / 2), np.sin(th / 2)
                step = 1 << i
                v = psi.reshape(-1, 2, step)
                a0 = v[:, 0, :].copy()
                a1 = v[:, 1, :].copy()
                v[:, 0, :] = c * a0 - 1j * s * a1
                v[:, 1, :] = -1j * s * a0 + c * a1
            else:
                psi *= np.where(bits[i], np.exp(0.5j * th), np.exp(-0.5j * th))
            if gam > 0.0:
                w = np.abs(psi) ** 2
                t_exc = w[exc[i]].sum()
                jump = u[k] < gam * t_exc / w.sum()
                psi = _damp(psi, i, exc[i], gam, jump)
            k += 1
        psi /= np.linalg.norm(psi)
    return psi, k


def _damp(psi, q, exc_mask, gam, jump):
    if jump:
        out = np.zeros_like(psi)
        src = np.flatnonzero(exc_mask)
        out[src ^ (1 << q)] = psi[src]
        return out
    return np.where(exc_mask, psi * np.sqrt(1.0 - gam), psi)


def run_trajectories(n, kinds, q0s, q1s, thetas, rates, excited, uniforms, out):
    bits = _bit_tables(n)
    for shot in range(uniforms.shape[0]):
        psi, k = _trajectory(n, kinds, q0s, q1s, thetas, rates, excited, uniforms[shot], bits)
        w = np.abs(psi) ** 2
        cdf = np.cumsum(w)
        x = int(np.searchsorted(cdf, uniforms[shot, k] * cdf[-1], side="right"))
        # guard against landing past the end or on a zero-weight tail entry
        x = min(x, _last_nonzero(w))
        out[shot] = x


def _last_nonzero(w):
    nz = np.flatnonzero(w > 0)
    return int(nz[-1]) if nz.size else 0


def trajectory_state(n, kinds, q0s, q1s, thetas, rates, excited, u):
    psi, _ = _trajectory(n, kinds, q0s, q1s, thetas, rates, excited, u, _bit_tables(n))
    return psi
