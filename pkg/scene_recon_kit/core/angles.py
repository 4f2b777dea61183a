"""
Angle conventions

All stored angles are rotations about the vertical z axis in radians and are
normalised into [-pi, pi) by

    wrap(x) = x - 2 pi floor((x + pi) / 2 pi)
"""
from typing import Union
import numpy as np

TWO_PI = 2 * np.pi


def wrap_angle(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Wrap angles into [-pi, pi)

    Parameters
    ----------
    x : Union[float, np.ndarray]
        Angles in radians

    Returns
    -------
    Union[float, np.ndarray]
        Wrapped angles with the same shape as the input
    """
    arr = np.asarray(x, dtype=float)
    wrapped = arr - TWO_PI * np.floor((arr + np.pi) / TWO_PI)
    # rounding can land exactly on +pi
    wrapped = np.where(wrapped >= np.pi, wrapped - TWO_PI, wrapped)
    if np.ndim(x) == 0:
        return float(wrapped)
    return wrapped


def angle_difference(a: Union[float, np.ndarray], b: Union[float, np.ndarray]):
    """Smallest signed difference a - b wrapped into [-pi, pi)"""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def circular_mean(angles: np.ndarray) -> float:
    """
    Circular mean of angles

    Computed as atan2(sum(sin), sum(cos)) and wrapped into [-pi, pi).

    Parameters
    ----------
    angles : np.ndarray
        Angles in radians

    Returns
    -------
    float
        The circular mean
    """
    angles = np.asarray(angles, dtype=float)
    return float(wrap_angle(np.arctan2(np.sin(angles).sum(), np.cos(angles).sum())))


def arithmetic_mean(angles: np.ndarray) -> float:
    """Plain mean of angles wrapped into [-pi, pi)"""
    return float(wrap_angle(np.mean(np.asarray(angles, dtype=float))))


def rotation_z(angle: float) -> np.ndarray:
    """
    Rotation matrix about the z axis

    Parameters
    ----------
    angle : float
        Rotation in radians, counter-clockwise looking down the z axis

    Returns
    -------
    np.ndarray
        3x3 rotation matrix
    """
    c = np.cos(angle)
    s = np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
