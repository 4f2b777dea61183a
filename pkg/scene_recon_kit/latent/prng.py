"""
Counter based pseudo random numbers for latent sampling

Values come from the splitmix64 generator, a 64 bit xorshift-multiply mixer
applied to seed + (counter + 1) * 0x9E3779B97F4A7C15. Every draw is a pure
function of the seed and its counter, so the noise for component j of sample
r is the same whether codes are drawn one at a time or in a batch, and is
reproducible in any language with 64 bit unsigned arithmetic.

Uniform variates take the top 53 bits of the mixed value. Standard normals
use the cosine branch of the Box-Muller transform on the uniform pair drawn
at counters 2j and 2j + 1.
"""
import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)
UINT64_MASK = 0xFFFFFFFFFFFFFFFF
TWO_POW_53 = 2.0 ** -53


def splitmix64(seed: int, counters: np.ndarray) -> np.ndarray:
    """
    Mixed 64 bit values for a seed and an array of counters

    Parameters
    ----------
    seed : int
        Any Python integer, reduced modulo 2^64
    counters : np.ndarray
        Non-negative integer counters

    Returns
    -------
    np.ndarray
        Unsigned 64 bit values with the shape of counters
    """
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & UINT64_MASK) + (counters + np.uint64(1)) * GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * MIX_1
        z = (z ^ (z >> np.uint64(27))) * MIX_2
        return z ^ (z >> np.uint64(31))


def uniforms(seed: int, counters: np.ndarray) -> np.ndarray:
    """Uniform variates in [0, 1)"""
    return (splitmix64(seed, counters) >> np.uint64(11)).astype(float) * TWO_POW_53


def uniforms_open(seed: int, counters: np.ndarray) -> np.ndarray:
    """Uniform variates in (0, 1]"""
    top = (splitmix64(seed, counters) >> np.uint64(11)).astype(float)
    return (top + 1.0) * TWO_POW_53


def standard_normals(seed: int, indices: np.ndarray) -> np.ndarray:
    """
    Standard normal variates

    Parameters
    ----------
    seed : int
        The seed
    indices : np.ndarray
        Non-negative normal indices, index j consumes counters 2j and 2j + 1

    Returns
    -------
    np.ndarray
        Normal variates with the shape of indices
    """
    indices = np.asarray(indices, dtype=np.uint64)
    u1 = uniforms_open(seed, np.uint64(2) * indices)
    u2 = uniforms(seed, np.uint64(2) * indices + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
