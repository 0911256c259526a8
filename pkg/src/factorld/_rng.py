"""Deterministic labeled random streams.

Every random quantity is drawn from a PCG64 stream keyed by
``(seed, block, label)``. Labels keep loadings, factors, idiosyncratic terms
and event counts on disjoint streams, and block indices let workers own
independent slices of the iteration space.
"""

import numpy as np

LOADINGS = 0
FACTORS = 1
IDIO = 2
COUNTS = 3
TIMES = 4
TAGS = 5

BLOCK_SIZE = 1000

_SHIFT = np.uint64(12)
_SCALE = 2.0 ** -52


def make_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.SeedSequence(seed)


def stream(seed, *key):
    """Return the generator for the labeled sub-stream ``key`` of ``seed``."""
    root = make_seed_sequence(seed)
    ss = np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def raw_bits(gen, size):
    """Raw 64-bit words; kernels turn these into open-interval uniforms."""
    return gen.bit_generator.random_raw(size)


def bits_to_uniform(bits):
    """Map raw words to uniforms on the open interval (0, 1).

    Uses the top 52 bits plus one half-step, so every value is exactly
    representable and neither 0 nor 1 can occur.
    """
    return ((bits >> _SHIFT).astype(np.float64) + 0.5) * _SCALE


def open_uniform(gen, size):
    return bits_to_uniform(raw_bits(gen, size))


def blocks(iters, block_size=BLOCK_SIZE):
    """Yield ``(block_index, count)`` pairs covering ``iters`` iterations."""
    b = 0
    start = 0
    while start < iters:
        count = min(block_size, iters - start)
        yield b, count
        b += 1
        start += count
