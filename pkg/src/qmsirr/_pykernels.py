"""Pure numpy trajectory kernels (reference implementation and fallback).

Noise is a counter-based SplitMix64 stream: trajectory ``j`` of master seed
``s`` has key ``mix(mix(s) + (j+1) * GOLDEN)`` and its ``i``-th raw word is
``mix(key + (i+1) * GOLDEN)``.  Normals come in Box-Muller pairs; normal
``n`` of a trajectory is one half of pair ``n // 2``.  Step ``k`` of an
``m``-noise system consumes normals ``k*m .. k*m + m - 1``.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.1102230246251565e-16


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed, traj):
    with np.errstate(over="ignore"):
        t = np.asarray(traj, dtype=np.uint64) + np.uint64(1)
        return mix64(mix64(np.uint64(seed)) + t * GOLDEN)


def _normals_at(key, n):
    """Normal number ``n`` (array, broadcast with ``key``) of the given streams."""
    n = np.asarray(n, dtype=np.uint64)
    pair = n >> np.uint64(1)
    with np.errstate(over="ignore"):
        a = mix64(key + (np.uint64(2) * pair + np.uint64(1)) * GOLDEN)
        b = mix64(key + (np.uint64(2) * pair + np.uint64(2)) * GOLDEN)
    u1 = ((a >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _TWO53
    u2 = (b >> np.uint64(11)).astype(np.float64) * _TWO53
    r = np.sqrt(-2.0 * np.log(u1))
    return np.where((n & np.uint64(1)) == 0, r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2))


def stream_normals(seed, traj, count):
    key = stream_key(seed, traj)
    return _normals_at(key, np.arange(count, dtype=np.uint64))


def propagate(A, B, xi, seed, traj_start, steps, sqrt_h, save_idx, out):
    n_traj = out.shape[0]
    m = B.shape[0]
    keys = stream_key(seed, np.arange(traj_start, traj_start + n_traj, dtype=np.uint64))
    X = np.tile(np.asarray(xi, dtype=complex), (n_traj, 1))
    s = 0
    if len(save_idx) and save_idx[0] == 0:
        out[:, 0, :] = X
        s = 1
    At = A.T
    Bt = [B[l].T for l in range(m)]
    for k in range(steps):
        Y = X @ At
        for l in range(m):
            dw = sqrt_h * _normals_at(keys, k * m + l)
            Y += dw[:, None] * (X @ Bt[l])
        X = Y
        if s < len(save_idx) and save_idx[s] == k + 1:
            out[:, s, :] = X
            s += 1
