"""Counter-based uniforms: Philox4x32-10 evaluated on whole arrays of counters.

Every random number is a pure function of ``(seed, path, step, stream)``, so a
path can be regenerated in isolation and the way paths are split across
workers never changes a result.  numpy's own ``Philox`` bit generator is
stream oriented (one key per generator), which is why the bijection is
evaluated here directly.
"""
import numpy as np

_M0, _M1 = np.uint64(0xD2511F53), np.uint64(0xCD9E8D57)
_W0, _W1 = np.uint64(0x9E3779B9), np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def philox4x32(counter, key, rounds=10):
    """Philox4x32 bijection.

    ``counter`` has shape (..., 4) and ``key`` shape (2,) (or broadcastable);
    entries are taken modulo 2^32.  Returns uint32 words of shape (..., 4).
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK
    k = np.asarray(key, dtype=np.uint64) & _MASK
    c0, c1, c2, c3 = c[..., 0], c[..., 1], c[..., 2], c[..., 3]
    k0, k1 = k[..., 0], k[..., 1]
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT) ^ c1 ^ k0, p1 & _MASK,
                          (p0 >> _SHIFT) ^ c3 ^ k1, p0 & _MASK)
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def seed_key(seed):
    """Split a 64-bit seed into the two Philox key words."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint64)


def uniforms(key, path, step, stream, n=4):
    """``n`` uniforms in (0, 1) per entry of ``path`` for one ``(step, stream)``.

    Blocks of four come from one Philox call with counter
    ``(path, step, stream, block)``.
    """
    path = np.asarray(path, dtype=np.uint64)
    blocks = -(-n // 4)
    out = []
    for b in range(blocks):
        ctr = np.empty(path.shape + (4,), dtype=np.uint64)
        ctr[..., 0] = path
        ctr[..., 1] = step
        ctr[..., 2] = stream
        ctr[..., 3] = b
        out.append(philox4x32(ctr, key))
    words = np.concatenate(out, axis=-1)[..., :n]
    # midpoint of the 2^-32 cell: never exactly 0 or 1
    return (words.astype(np.float64) + 0.5) * 2.0 ** -32


def normals(key, path, step, stream, d):
    """``d`` standard normals per path by the Box-Muller transform."""
    m = d + (d % 2)
    u = uniforms(key, path, step, stream, m)
    r = np.sqrt(-2.0 * np.log(u[..., 0::2]))
    ang = 2.0 * np.pi * u[..., 1::2]
    z = np.concatenate([r * np.cos(ang), r * np.sin(ang)], axis=-1)
    return z[..., :d]
