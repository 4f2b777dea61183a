"""
Plane generating decoders for convex decompositions

A decoder is a stack of dense layers taking a latent code concatenated with a
one-hot category and producing P planes (a, b, c, d). A binary membership
matrix assigns planes to C convexes. A point is inside a convex when it
satisfies every member half-space a x + b y + c z + d <= 0 and inside the
shape when it is inside any convex.

Decoder files use the shared binary container with magic SRKBSPDC. The JSON
header declares the latent dimension, the category list, the canonical frame,
the plane and convex counts and the layers. The payload is, per layer, the
row-major weight matrix (out, in) then the bias as 32 bit floats, followed by
the membership matrix (P, C) as unsigned bytes.
"""
from loguru import logger
from typing import Dict, List, Sequence, Any
from pathlib import Path
import numpy as np
from pydantic import BaseModel

from scene_recon_kit.errors import InputError, DecoderFileError
from scene_recon_kit.canonical import CanonicalFrame
from scene_recon_kit.io.container import write_container, read_container
from scene_recon_kit.io.container import PayloadReader, require_keys

DECODER_MAGIC = b"SRKBSPDC"
DECODER_FORMAT = "srk-bsp-decoder"
DECODER_VERSION = 1
MIN_PLANES_PER_CONVEX = 4


def _identity(x: np.ndarray) -> np.ndarray:
    return x


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


ACTIVATIONS = {"identity": _identity, "relu": _relu, "sigmoid": _sigmoid}
"""Supported layer activations"""


class LayerHeader(BaseModel):
    """Header entry describing one dense layer"""

    name: str
    """Layer name used in error messages"""
    weight_shape: List[int]
    """Weight matrix shape [out, in]"""
    bias_shape: List[int]
    """Bias shape [out]"""
    activation: str
    """Activation name"""


class DenseLayer:
    """
    A dense affine layer followed by an activation

    Parameters
    ----------
    weight : np.ndarray
        Weights with shape (out, in)
    bias : np.ndarray
        Bias with shape (out,)
    activation : str
        One of identity, relu or sigmoid
    name : str, optional
        Layer name, by default "layer"
    """

    def __init__(
        self, weight: np.ndarray, bias: np.ndarray, activation: str, name="layer"
    ):
        if activation not in ACTIVATIONS:
            raise InputError(f"Layer {name} has unknown activation '{activation}'")
        weight = np.array(weight, dtype=np.float32)
        bias = np.array(bias, dtype=np.float32).reshape(-1)
        if weight.ndim != 2 or weight.shape[0] != bias.shape[0]:
            raise InputError(
                f"Layer {name} weight {weight.shape} does not match bias {bias.shape}"
            )
        weight.setflags(write=False)
        bias.setflags(write=False)
        self.weight = weight
        self.bias = bias
        self.activation = activation
        self.name = name

    @property
    def n_in(self) -> int:
        return self.weight.shape[1]

    @property
    def n_out(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply the layer in double precision"""
        out = self.weight.astype(float) @ x + self.bias.astype(float)
        return ACTIVATIONS[self.activation](out)

    def header(self) -> Dict[str, Any]:
        return LayerHeader(
            name=self.name,
            weight_shape=list(self.weight.shape),
            bias_shape=list(self.bias.shape),
            activation=self.activation,
        ).dict()


class PlaneSet:
    """
    Planes and their assignment to convexes

    Parameters
    ----------
    planes : np.ndarray
        Plane parameters (a, b, c, d) with shape (P, 4)
    membership : np.ndarray
        Binary matrix with shape (P, C)
    frame : CanonicalFrame, optional
        The canonical frame of the planes, by default the unit frame

    Raises
    ------
    InputError
        If shapes mismatch, a normal is zero or membership is not binary
    """

    def __init__(
        self,
        planes: np.ndarray,
        membership: np.ndarray,
        frame: CanonicalFrame = CanonicalFrame.UNIT,
    ):
        planes = np.array(planes, dtype=float).reshape(-1, 4)
        membership = np.array(membership).reshape(planes.shape[0], -1)
        if not np.all(np.isin(membership, [0, 1])):
            raise InputError("Membership entries must be 0 or 1")
        if not np.all(np.isfinite(planes)):
            raise InputError("Plane parameters are not finite")
        if np.any(np.linalg.norm(planes[:, :3], axis=1) == 0):
            raise InputError("Plane normals must be non-zero")
        planes.setflags(write=False)
        membership = membership.astype(bool)
        membership.setflags(write=False)
        self.planes = planes
        self.membership = membership
        self.frame = CanonicalFrame(frame)

    @property
    def n_planes(self) -> int:
        return self.planes.shape[0]

    @property
    def n_convexes(self) -> int:
        return self.membership.shape[1]

    def convex_planes(self, convex: int) -> np.ndarray:
        """The member planes of one convex"""
        return self.planes[self.membership[:, convex]]


class BspDecoder:
    """
    A category conditioned plane decoder

    Parameters
    ----------
    layers : Sequence[DenseLayer]
        The dense layers in order
    membership : np.ndarray
        Binary plane to convex matrix with shape (P, C)
    d_shape : int
        The latent code dimension
    categories : Sequence[str]
        Categories in one-hot order
    frame : CanonicalFrame, optional
        The canonical frame of the generated planes, by default the unit frame

    Raises
    ------
    InputError
        If the layer dimensions do not chain from d_shape plus the number of
        categories to 4 P or the membership is invalid
    """

    def __init__(
        self,
        layers: Sequence[DenseLayer],
        membership: np.ndarray,
        d_shape: int,
        categories: Sequence[str],
        frame: CanonicalFrame = CanonicalFrame.UNIT,
    ):
        membership = np.array(membership)
        if membership.ndim != 2:
            raise InputError("Membership must be a matrix")
        if not np.all(np.isin(membership, [0, 1])):
            raise InputError("Membership entries must be 0 or 1")
        n_planes, n_convexes = membership.shape
        per_convex = membership.sum(axis=0)
        if n_convexes == 0 or per_convex.min() < MIN_PLANES_PER_CONVEX:
            raise InputError(
                f"Every convex needs at least {MIN_PLANES_PER_CONVEX} planes"
            )
        if len(layers) == 0:
            raise InputError("Decoder has no layers")
        if len(set(categories)) != len(categories):
            raise InputError("Decoder categories are not unique")
        expected = d_shape + len(categories)
        for layer in layers:
            if layer.n_in != expected:
                raise InputError(
                    f"Layer {layer.name} expects {layer.n_in} inputs, chain gives"
                    f" {expected}"
                )
            expected = layer.n_out
        if expected != 4 * n_planes:
            raise InputError(
                f"Decoder outputs {expected} values, {n_planes} planes need"
                f" {4 * n_planes}"
            )
        membership = membership.astype(np.uint8)
        membership.setflags(write=False)
        self.layers = list(layers)
        self.membership = membership
        self.d_shape = int(d_shape)
        self.categories = list(categories)
        self.frame = CanonicalFrame(frame)

    @property
    def n_planes(self) -> int:
        return self.membership.shape[0]

    @property
    def n_convexes(self) -> int:
        return self.membership.shape[1]

    def one_hot(self, category: str) -> np.ndarray:
        """The one-hot encoding of a category"""
        if category not in self.categories:
            raise InputError(
                f"Category '{category}' not in decoder categories {self.categories}"
            )
        encoding = np.zeros(len(self.categories))
        encoding[self.categories.index(category)] = 1.0
        return encoding

    def forward(self, z: np.ndarray, category: str) -> np.ndarray:
        """Run the layers on a code and category, returns 4 P values"""
        x = np.concatenate([np.asarray(z, dtype=float), self.one_hot(category)])
        for layer in self.layers:
            x = layer.forward(x)
        return x


def decode_planes(dec: BspDecoder, z: np.ndarray, category: str) -> PlaneSet:
    """
    Decode a latent code into planes

    Parameters
    ----------
    dec : BspDecoder
        The decoder
    z : np.ndarray
        The latent code
    category : str
        The category to condition on

    Returns
    -------
    PlaneSet
        Planes in the decoder frame with the decoder membership

    Raises
    ------
    InputError
        If the code dimension does not match or the category is unknown
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != dec.d_shape:
        raise InputError(f"Code dimension {z.size} != decoder dimension {dec.d_shape}")
    planes = dec.forward(z, category).reshape(dec.n_planes, 4)
    return PlaneSet(planes, dec.membership, dec.frame)


def occupancy_many(ps: PlaneSet, points: np.ndarray) -> np.ndarray:
    """
    Inside test for many points

    Parameters
    ----------
    ps : PlaneSet
        The planes and membership
    points : np.ndarray
        Points with shape (N, 3)

    Returns
    -------
    np.ndarray
        Boolean array, True where a point is inside some convex
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    values = points @ ps.planes[:, :3].T + ps.planes[:, 3]
    outside = (values > 0).astype(np.int64) @ ps.membership.astype(np.int64)
    return np.any(outside == 0, axis=1)


def occupancy(ps: PlaneSet, point: np.ndarray) -> bool:
    """
    Inside test for a single point

    True if some convex has every member half-space satisfied.
    """
    return bool(occupancy_many(ps, np.asarray(point).reshape(1, 3))[0])


def interpolate_latent(z_a: np.ndarray, z_b: np.ndarray, t: float) -> np.ndarray:
    """
    Linear interpolation between two codes

    Parameters
    ----------
    z_a : np.ndarray
        Code at t = 0
    z_b : np.ndarray
        Code at t = 1
    t : float
        Interpolation weight in [0, 1]

    Returns
    -------
    np.ndarray
        (1 - t) z_a + t z_b

    Raises
    ------
    InputError
        If the dimensions differ or t is outside [0, 1]
    """
    z_a = np.asarray(z_a, dtype=float).reshape(-1)
    z_b = np.asarray(z_b, dtype=float).reshape(-1)
    if z_a.size != z_b.size:
        raise InputError(f"Code dimensions {z_a.size} and {z_b.size} differ")
    if not 0 <= t <= 1:
        raise InputError(f"Interpolation weight {t} not in [0, 1]")
    if t == 0:
        return z_a.copy()
    if t == 1:
        return z_b.copy()
    return (1 - t) * z_a + t * z_b


def save_decoder(dec: BspDecoder, path: Path) -> None:
    """
    Write a decoder file

    Parameters
    ----------
    dec : BspDecoder
        The decoder
    path : Path
        Output path
    """
    header = {
        "format": DECODER_FORMAT,
        "version": DECODER_VERSION,
        "d_shape": dec.d_shape,
        "categories": dec.categories,
        "frame": dec.frame.value,
        "n_planes": dec.n_planes,
        "n_convexes": dec.n_convexes,
        "layers": [layer.header() for layer in dec.layers],
    }
    blocks = []
    for layer in dec.layers:
        blocks.append(layer.weight.astype("<f4"))
        blocks.append(layer.bias.astype("<f4"))
    blocks.append(dec.membership.astype("u1"))
    write_container(path, DECODER_MAGIC, header, blocks)
    logger.info(f"Saved decoder with {len(dec.layers)} layers to {path}")


def load_decoder(path: Path) -> BspDecoder:
    """
    Read a decoder file

    Parameters
    ----------
    path : Path
        The decoder file

    Returns
    -------
    BspDecoder
        The decoder with validated dimensions

    Raises
    ------
    DecoderFileError
        If the file is missing, corrupt, or the declared dimensions, layer
        shapes or activations are invalid
    """
    header, payload = read_container(path, DECODER_MAGIC, DecoderFileError)
    require_keys(
        path,
        header,
        ["format", "d_shape", "categories", "frame", "n_planes", "n_convexes"],
        DecoderFileError,
    )
    require_keys(path, header, ["layers"], DecoderFileError)
    if header["format"] != DECODER_FORMAT:
        raise DecoderFileError(path, f"Unexpected format '{header['format']}'")
    try:
        frame = CanonicalFrame(header["frame"])
    except ValueError:
        raise DecoderFileError(path, f"Unknown frame '{header['frame']}'")

    reader = PayloadReader(path, payload, DecoderFileError)
    layers = []
    for ilayer, entry in enumerate(header["layers"]):
        try:
            spec = LayerHeader(**entry)
        except (TypeError, ValueError) as e:
            raise DecoderFileError(path, f"Layer {ilayer} header is invalid, {e}")
        if spec.activation not in ACTIVATIONS:
            raise DecoderFileError(
                path, f"Layer {spec.name} has unknown activation '{spec.activation}'"
            )
        if len(spec.weight_shape) != 2 or len(spec.bias_shape) != 1:
            raise DecoderFileError(path, f"Layer {spec.name} has malformed shapes")
        if spec.bias_shape[0] != spec.weight_shape[0]:
            logger.error(f"Bias length mismatch in layer {spec.name}")
            raise DecoderFileError(
                path,
                f"Layer {spec.name} bias length {spec.bias_shape[0]} != weight"
                f" rows {spec.weight_shape[0]}",
            )
        weight = reader.read(f"{spec.name}.weight", "<f4", tuple(spec.weight_shape))
        bias = reader.read(f"{spec.name}.bias", "<f4", tuple(spec.bias_shape))
        layers.append(DenseLayer(weight, bias, spec.activation, spec.name))
    shape = (int(header["n_planes"]), int(header["n_convexes"]))
    membership = reader.read("membership", "u1", shape)
    reader.finish()
    try:
        dec = BspDecoder(
            layers, membership, header["d_shape"], header["categories"], frame
        )
    except InputError as e:
        raise DecoderFileError(path, e.message)
    logger.info(
        f"Loaded decoder with {dec.n_planes} planes and {dec.n_convexes} convexes"
    )
    return dec
