"""
Scene reconstruction from instance proposals

Every proposal passing the confidence and point count floors is turned into
a placed mesh

1. the box is the initial box, estimated from the points when the proposal
   has none, plus the predicted residual
2. the code is the mean of the latent distribution, or a sample from it
   seeded with seed + proposal id when stochastic
3. the canonical mesh is decoded and extracted (generate), decoded from the
   code projected onto nearby pool codes (project) or taken from the nearest
   pool entry (retrieve)
4. the mesh is placed with the box and optionally refined by ICP against the
   proposal points

Failures are recorded per proposal and never abort the scene. The report is
ordered by proposal id and holds timings only when requested, so repeated
runs write identical reports.
"""
from loguru import logger
from typing import List, Optional, Tuple
from pathlib import Path
import json
import time
from pydantic import BaseModel, validator

from scene_recon_kit.common import parallel_map
from scene_recon_kit.errors import InputError, NotFoundError
from scene_recon_kit.errors import AlignmentFailedError
from scene_recon_kit.core.box import compose_box
from scene_recon_kit.core.mesh import TriMesh
from scene_recon_kit.core.scene import PointScene, InstanceProposal
from scene_recon_kit.clustering.proposals import proposal_initial_box
from scene_recon_kit.canonical import CanonicalFrame, place_mesh
from scene_recon_kit.bsp.decoder import BspDecoder, decode_planes
from scene_recon_kit.bsp.extract import extract_mesh
from scene_recon_kit.latent.pool import ModelPool
from scene_recon_kit.latent.ops import expected_code, sample_code, retrieve, project
from scene_recon_kit.icp import IcpConfig, icp_align
from scene_recon_kit.evaluation.records import PredictionRecord
from scene_recon_kit.io.records import save_predictions

MODES = ("generate", "project", "retrieve")
REPORT_FILE = "report.json"


class ReconstructConfig(BaseModel):
    """Settings for scene reconstruction"""

    mode: str = "generate"
    """One of generate, project or retrieve"""
    conf_floor: float = 0.09
    """Proposals with lower confidence are skipped"""
    min_points: int = 100
    """Proposals with fewer points are skipped"""
    stochastic: bool = False
    """Sample codes instead of using the mean"""
    seed: int = 0
    """Base seed for stochastic codes, proposal i uses seed + i"""
    k: int = 1
    """Number of pool neighbours for projection"""
    affine_span: bool = False
    """Project onto the affine hull of the neighbours"""
    category_filter: bool = True
    """Restrict pool queries to the proposal category"""
    use_residual: bool = True
    """Add the predicted residual to the initial box"""
    icp: bool = False
    """Refine placed meshes with ICP"""
    arithmetic_angle_mean: bool = False
    """Average angles arithmetically when estimating initial boxes"""
    record_timing: bool = False
    """Add per proposal timings to the report"""

    class Config:
        frozen = True
        extra = "forbid"

    @validator("mode")
    def validate_mode(cls, value: str) -> str:
        if value not in MODES:
            raise ValueError(f"Unknown mode '{value}', expected {MODES}")
        return value

    @validator("conf_floor")
    def validate_floor(cls, value: float) -> float:
        if not 0 <= value <= 1:
            raise ValueError(f"Confidence floor {value} not in [0, 1]")
        return value

    @validator("min_points", "k")
    def validate_count(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"Value {value} must be at least 1")
        return value


class ProposalReport(BaseModel):
    """What happened to one proposal"""

    proposal_id: int
    status: str
    """ok, skipped or failed"""
    reason: Optional[str] = None
    """Why a proposal was skipped or failed, or a note on a degraded result"""
    mode: str
    category: Optional[str] = None
    confidence: float
    n_points: int
    retrieved_id: Optional[str] = None
    retrieval_distance: Optional[float] = None
    icp_rms: Optional[float] = None
    seconds: Optional[float] = None


class SceneReport(BaseModel):
    """Per proposal outcomes of a reconstruction"""

    mode: str
    n_proposals: int
    n_reconstructed: int
    n_skipped: int
    n_failed: int
    proposals: List[ProposalReport]

    def has_failures(self) -> bool:
        return self.n_failed > 0

    def to_json(self) -> str:
        return json.dumps(self.dict(), sort_keys=True, indent=2)


class Reconstruction(BaseModel):
    """Placed meshes and the report of a scene"""

    predictions: List[PredictionRecord]
    report: SceneReport


def _canonical_mesh(
    z,
    category: str,
    cfg: ReconstructConfig,
    decoder: Optional[BspDecoder],
    pool: Optional[ModelPool],
    report: ProposalReport,
) -> Tuple[TriMesh, CanonicalFrame]:
    """Decode, project or retrieve the canonical mesh of a proposal"""
    category_filter = category if cfg.category_filter else None
    if cfg.mode == "retrieve" and pool is not None:
        entry_id, distance = retrieve(pool, z, category_filter)
        report.retrieved_id = entry_id
        report.retrieval_distance = distance
        return pool.mesh(entry_id), pool.frame
    if cfg.mode == "project" and pool is not None:
        z = project(pool, z, cfg.k, category_filter, cfg.affine_span)
    if decoder is None:
        raise InputError(f"Mode {cfg.mode} needs a decoder")
    planes = decode_planes(decoder, z, category)
    return extract_mesh(planes, category), decoder.frame


def reconstruct_proposal(
    scene: PointScene,
    proposal_id: int,
    prop: InstanceProposal,
    cfg: ReconstructConfig,
    decoder: Optional[BspDecoder] = None,
    pool: Optional[ModelPool] = None,
    icp_cfg: IcpConfig = IcpConfig(),
) -> Tuple[Optional[PredictionRecord], ProposalReport]:
    """
    Reconstruct one proposal

    Parameters
    ----------
    scene : PointScene
        The scene the proposal indexes
    proposal_id : int
        Position of the proposal in its file
    prop : InstanceProposal
        The proposal
    cfg : ReconstructConfig
        Reconstruction settings
    decoder : Optional[BspDecoder], optional
        Decoder for generate and project modes, by default None
    pool : Optional[ModelPool], optional
        Pool for project and retrieve modes, by default None
    icp_cfg : IcpConfig, optional
        ICP settings when ICP is enabled, by default IcpConfig()

    Returns
    -------
    Tuple[Optional[PredictionRecord], ProposalReport]
        The placed mesh, None when skipped or failed, and the report entry
    """
    start = time.perf_counter()
    report = ProposalReport(
        proposal_id=proposal_id,
        status="ok",
        mode=cfg.mode,
        category=prop.category,
        confidence=prop.confidence,
        n_points=prop.n_points,
    )

    def finish(record, status, reason=None):
        report.status = status
        if reason is not None:
            report.reason = reason
        if cfg.record_timing:
            report.seconds = time.perf_counter() - start
        return record, report

    if prop.confidence < cfg.conf_floor:
        return finish(None, "skipped", f"confidence below {cfg.conf_floor}")
    if prop.n_points < cfg.min_points:
        return finish(None, "skipped", f"fewer than {cfg.min_points} points")
    if prop.category is None:
        return finish(None, "failed", "proposal has no category")
    if prop.latent is None:
        return finish(None, "failed", "proposal has no latent distribution")
    try:
        initial = prop.initial_box
        if initial is None:
            initial = proposal_initial_box(scene, prop, cfg.arithmetic_angle_mean)
        box = compose_box(initial, prop.residual) if cfg.use_residual else initial
        if cfg.stochastic:
            z = sample_code(prop.latent, cfg.seed + proposal_id)
        else:
            z = expected_code(prop.latent)
        canonical, frame = _canonical_mesh(
            z, prop.category, cfg, decoder, pool, report
        )
        if canonical.is_empty():
            return finish(None, "failed", "reconstructed shape is empty")
        mesh = place_mesh(canonical.with_category(prop.category), box, frame)
    except (InputError, NotFoundError) as e:
        logger.warning(f"Proposal {proposal_id} failed: {e}")
        return finish(None, "failed", str(e))

    note = None
    if cfg.icp:
        try:
            points = scene.points[prop.indices_array()]
            result = icp_align(mesh, points, icp_cfg)
            mesh = result.mesh
            report.icp_rms = result.rms
        except (AlignmentFailedError, InputError) as e:
            logger.warning(f"Proposal {proposal_id} kept unrefined: {e}")
            note = f"icp skipped, {e}"
    record = PredictionRecord(
        mesh=mesh,
        confidence=prop.confidence,
        category=prop.category,
        proposal_id=proposal_id,
    )
    return finish(record, "ok", note)


def reconstruct_scene(
    scene: PointScene,
    proposals: List[InstanceProposal],
    decoder: Optional[BspDecoder] = None,
    pool: Optional[ModelPool] = None,
    cfg: ReconstructConfig = ReconstructConfig(),
    icp_cfg: IcpConfig = IcpConfig(),
) -> Reconstruction:
    """
    Reconstruct every proposal of a scene

    Proposals are processed concurrently.

    Parameters
    ----------
    scene : PointScene
        The scene
    proposals : List[InstanceProposal]
        Proposals indexing the scene, their ids are their list positions
    decoder : Optional[BspDecoder], optional
        Required for generate and project modes, by default None
    pool : Optional[ModelPool], optional
        Required for project and retrieve modes, by default None
    cfg : ReconstructConfig, optional
        Settings, by default ReconstructConfig()
    icp_cfg : IcpConfig, optional
        ICP settings, by default IcpConfig()

    Returns
    -------
    Reconstruction
        The placed meshes in proposal order and the report

    Raises
    ------
    InputError
        If the mode needs a decoder or pool that was not given
    """
    if cfg.mode in ("project", "retrieve") and pool is None:
        raise InputError(f"Mode {cfg.mode} needs a model pool")
    if cfg.mode in ("generate", "project") and decoder is None:
        raise InputError(f"Mode {cfg.mode} needs a decoder")

    def run(item: Tuple[int, InstanceProposal]):
        return reconstruct_proposal(
            scene, item[0], item[1], cfg, decoder, pool, icp_cfg
        )

    outcomes = parallel_map(run, list(enumerate(proposals)))
    predictions = [record for record, _ in outcomes if record is not None]
    entries = [entry for _, entry in outcomes]
    report = SceneReport(
        mode=cfg.mode,
        n_proposals=len(proposals),
        n_reconstructed=len(predictions),
        n_skipped=sum(e.status == "skipped" for e in entries),
        n_failed=sum(e.status == "failed" for e in entries),
        proposals=entries,
    )
    logger.info(
        f"Reconstructed {report.n_reconstructed} of {report.n_proposals} proposals,"
        f" {report.n_skipped} skipped, {report.n_failed} failed"
    )
    return Reconstruction(predictions=predictions, report=report)


def write_reconstruction(
    recon: Reconstruction, out_dir: Path, suffix: str = ".ply"
) -> None:
    """Write the meshes, the prediction manifest and the report"""
    save_predictions(recon.predictions, out_dir, suffix)
    (out_dir / REPORT_FILE).write_text(recon.report.to_json() + "\n")
    logger.info(f"Wrote report to {out_dir / REPORT_FILE}")
