from pathlib import Path
import numpy as np
import pytest

from scene_recon_kit.errors import InputError, NotFoundError, PoolFileError
from scene_recon_kit.core.mesh import box_mesh
from scene_recon_kit.core.scene import LatentShapeDistribution
from scene_recon_kit.canonical import CanonicalFrame
from scene_recon_kit.latent.prng import splitmix64, uniforms, standard_normals
from scene_recon_kit.latent.pool import PoolEntry, ModelPool, save_pool, load_pool
from scene_recon_kit.latent.ops import sample_code, sample_codes, expected_code
from scene_recon_kit.latent.ops import retrieve, project


def test_splitmix64_reference_values():
    values = splitmix64(0, np.arange(2))
    assert int(values[0]) == 0xE220A8397B1DCDAF
    assert int(values[1]) == 0x6E789E6AA1B965F4


def test_uniforms_range():
    u = uniforms(123, np.arange(10_000))
    assert np.all(u >= 0) and np.all(u < 1)
    assert u.mean() == pytest.approx(0.5, abs=0.02)


def test_standard_normals_moments():
    eps = standard_normals(2024, np.arange(20_000))
    assert np.all(np.isfinite(eps))
    assert eps.mean() == pytest.approx(0.0, abs=0.05)
    assert eps.std() == pytest.approx(1.0, abs=0.05)


def test_sample_code_deterministic():
    dist = LatentShapeDistribution(mu=[1.0, -1.0, 0.0], sigma=[0.5, 0.0, 2.0])
    z = sample_code(dist, seed=11)
    np.testing.assert_array_equal(z, sample_code(dist, seed=11))
    assert z[1] == -1.0
    assert not np.array_equal(z, sample_code(dist, seed=12))
    batch = sample_codes(dist, seed=11, n=5)
    assert batch.shape == (5, 3)
    np.testing.assert_array_equal(batch[0], z)
    np.testing.assert_array_equal(expected_code(dist), [1.0, -1.0, 0.0])


def test_sample_codes_mean():
    dist = LatentShapeDistribution(mu=[3.0, -2.0], sigma=[1.0, 0.1])
    codes = sample_codes(dist, seed=5, n=5_000)
    np.testing.assert_allclose(codes.mean(axis=0), [3.0, -2.0], atol=0.05)
    np.testing.assert_allclose(codes.std(axis=0), [1.0, 0.1], rtol=0.05)


@pytest.fixture
def pool() -> ModelPool:
    entries = [
        PoolEntry(id="c", category="chair"),
        PoolEntry(id="a", category="chair"),
        PoolEntry(id="t", category="table"),
        PoolEntry(id="u", category=None),
    ]
    codes = np.array(
        [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 5.0]]
    )
    meshes = {"t": box_mesh([0, 0, 0], [1, 1, 0.5], "table")}
    return ModelPool(entries, codes, meshes)


def test_pool_validation(pool: ModelPool):
    assert pool.size == 4
    assert pool.categories() == ["chair", "table"]
    np.testing.assert_array_equal(pool.select("chair"), [0, 1])
    with pytest.raises(InputError):
        ModelPool([PoolEntry(id="a"), PoolEntry(id="a")], np.zeros((2, 2)))
    with pytest.raises(InputError):
        ModelPool([PoolEntry(id="a")], np.zeros((2, 2)))
    with pytest.raises(InputError):
        pool.mesh("a")
    with pytest.raises(InputError):
        pool.index("missing")


def test_retrieve(pool: ModelPool):
    entry_id, dist = retrieve(pool, np.array([0.9, 0.1, 0.0]))
    assert entry_id == "c"
    assert dist == pytest.approx(np.hypot(0.1, 0.1))
    entry_id, dist = retrieve(pool, np.array([0.0, 0.0, 4.0]), category_filter="table")
    assert entry_id == "t"
    assert dist == pytest.approx(np.hypot(2.0, 4.0))


def test_retrieve_tie_prefers_smallest_id(pool: ModelPool):
    entry_id, dist = retrieve(pool, np.zeros(3), category_filter="chair")
    assert entry_id == "a"
    assert dist == pytest.approx(1.0)


def test_retrieve_errors(pool: ModelPool):
    with pytest.raises(NotFoundError):
        retrieve(pool, np.zeros(3), category_filter="sofa")
    with pytest.raises(InputError):
        retrieve(pool, np.zeros(2))
    with pytest.raises(InputError):
        retrieve(pool, np.array([np.nan, 0, 0]))


def test_project_linear_matches_least_squares(rng: np.random.Generator):
    entries = [PoolEntry(id=f"m{i}", category="sofa") for i in range(10)]
    codes = rng.normal(size=(10, 6))
    pool = ModelPool(entries, codes)
    z = rng.normal(size=6)
    projected = project(pool, z, k=3)
    order = np.argsort(np.linalg.norm(codes - z, axis=1))
    basis = codes[order[:3]]
    weights, *_ = np.linalg.lstsq(basis.T, z, rcond=None)
    np.testing.assert_allclose(projected, basis.T @ weights, atol=1e-6)
    # the residual is orthogonal to the span
    np.testing.assert_allclose(basis @ (z - projected), 0, atol=1e-6)


def test_project_affine(pool: ModelPool):
    z = np.array([0.2, 1.0, 0.0])
    nearest = project(pool, z, k=1, category_filter="chair", affine=True)
    np.testing.assert_allclose(nearest, pool.code("c"))
    projected = project(pool, z, k=2, category_filter="chair", affine=True)
    np.testing.assert_allclose(projected, [0.2, 0.0, 0.0], atol=1e-8)
    linear = project(pool, z, k=1, category_filter="chair")
    np.testing.assert_allclose(linear, [0.2, 0.0, 0.0], atol=1e-8)


def test_project_errors(pool: ModelPool):
    with pytest.raises(InputError):
        project(pool, np.zeros(3), k=0)
    with pytest.raises(InputError):
        project(pool, np.zeros(3), k=3, category_filter="chair")
    with pytest.raises(NotFoundError):
        project(pool, np.zeros(3), k=1, category_filter="bathtub")


def test_pool_file(tmp_path: Path, pool: ModelPool):
    path = tmp_path / "pool.srkp"
    save_pool(pool, path)
    loaded = load_pool(path)
    assert loaded.ids() == ["c", "a", "t", "u"]
    assert [x.category for x in loaded.entries] == ["chair", "chair", "table", None]
    assert loaded.frame == CanonicalFrame.UNIT
    np.testing.assert_array_equal(loaded.codes, pool.codes)
    assert loaded.mesh("t").volume() == pytest.approx(0.5)
    assert loaded.mesh("t").category == "table"
    without = load_pool(path, load_meshes=False)
    assert len(without.meshes) == 0


def test_pool_file_errors(tmp_path: Path, pool: ModelPool):
    with pytest.raises(PoolFileError):
        load_pool(tmp_path / "missing.srkp")
    path = tmp_path / "pool.srkp"
    save_pool(pool, path)
    for mesh_path in (tmp_path / "pool_meshes").iterdir():
        mesh_path.unlink()
    with pytest.raises(PoolFileError):
        load_pool(path)
