"""Scene generation and corruption models, checked against Monte-Carlo oracles."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ellipsoid_icp import (
    CorruptionSpec,
    InvalidInputError,
    Rng,
    additive_noise,
    center,
    corrupt_scene,
    covariance,
    multiplicative_noise,
    occlude,
    random_cloud,
    random_orthogonal,
    random_permutation,
    random_scene,
    spectral_norm,
    superpose,
)

from conftest import gaussian_blob


class TestRng:
    def test_identical_paths_give_identical_streams(self):
        a = Rng(42).child("stage", 3).generator().uniform(size=8)
        b = Rng(42).child("stage", 3).generator().uniform(size=8)
        assert np.array_equal(a, b)

    def test_distinct_paths_give_distinct_streams(self):
        a = Rng(42).child("stage", 3).generator().uniform(size=8)
        b = Rng(42).child("stage", 4).generator().uniform(size=8)
        c = Rng(43).child("stage", 3).generator().uniform(size=8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_child_appends_to_path(self):
        rng = Rng(7).child("a").child("b", 2)
        assert rng.path == ("a", "b", 2)
        assert rng.seed == 7

    def test_validates_seed_and_path(self):
        with pytest.raises(InvalidInputError):
            Rng(-1)
        with pytest.raises(InvalidInputError):
            Rng(0, (3.5,))


class TestRandomCloud:
    def test_bounds_and_shape(self, rng):
        cloud = random_cloud(100, 3, 20.0, rng)
        assert cloud.d == 3 and cloud.n == 100
        assert np.abs(cloud.data).max() <= 20.0

    def test_same_seed_is_identical(self):
        a = random_cloud(50, 3, 5.0, Rng(9))
        b = random_cloud(50, 3, 5.0, Rng(9))
        assert np.array_equal(a.data, b.data)

    def test_sample_mean_near_zero(self):
        # CLT scale: per-coordinate sd of the grand mean is hw/sqrt(3 N)
        draws = [random_cloud(200, 3, 20.0, Rng(1, ("m", k))) for k in range(50)]
        grand = np.concatenate([c.data for c in draws], axis=1)
        total = grand.shape[1]
        assert np.abs(grand.mean(axis=1)).max() <= 3.0 * 20.0 / np.sqrt(3.0 * total)

    def test_validation(self, rng):
        with pytest.raises(InvalidInputError):
            random_cloud(0, 3, 1.0, rng)
        with pytest.raises(InvalidInputError):
            random_cloud(5, 3, 0.0, rng)


class TestRandomOrthogonal:
    @given(st.integers(0, 10**6))
    def test_orthogonality(self, seed):
        o = random_orthogonal(3, Rng(seed))
        assert np.abs(o.T @ o - np.eye(3)).max() <= 1e-12

    def test_first_column_uniform_on_sphere(self):
        # for a uniform direction in R^3 each coordinate is Uniform(-1, 1)
        n = 10_000
        zs = np.array([random_orthogonal(3, Rng(5, ("haar", k)))[2, 0] for k in range(n)])
        ks = stats.kstest(zs, stats.uniform(loc=-1.0, scale=2.0).cdf)
        assert ks.statistic < 0.02

    def test_determinant_sign_is_fair(self):
        n = 2000
        dets = np.array([np.linalg.det(random_orthogonal(3, Rng(6, ("d", k)))) for k in range(n)])
        assert np.abs(np.abs(dets) - 1.0).max() <= 1e-10
        assert abs(dets.mean()) <= 4.0 / np.sqrt(n)


class TestRandomScene:
    @given(st.integers(0, 10**6))
    def test_target_assembled_exactly(self, seed):
        source = gaussian_blob(seed, n=40)
        scene = random_scene(source, Rng(seed, ("s",)))
        moved = scene.rotation @ source.data
        assert np.array_equal(scene.target_clean.data[:, scene.permutation.assignment], moved)
        assert scene.target is scene.target_clean

    @given(st.integers(0, 10**6))
    def test_covariance_conjugation_identity(self, seed):
        source = gaussian_blob(seed, n=60)
        scene = random_scene(source, Rng(seed, ("s",)))
        e_p = covariance(center(source)[0]).matrix
        e_q = covariance(center(scene.target_clean)[0]).matrix
        want = scene.rotation @ e_p @ scene.rotation.T
        assert np.linalg.norm(e_q - want) <= 1e-9 * np.linalg.norm(want)

    @given(st.integers(0, 10**6))
    def test_spectra_agree(self, seed):
        source = gaussian_blob(seed, n=60)
        scene = random_scene(source, Rng(seed, ("s",)))
        lam_p = covariance(center(source)[0]).eigenvalues
        lam_q = covariance(center(scene.target_clean)[0]).eigenvalues
        assert np.abs(lam_p - lam_q).max() <= 1e-9 * lam_p[0]

    def test_permutation_is_uniformly_seeded(self):
        a = random_permutation(30, Rng(3, ("p",))).assignment
        b = random_permutation(30, Rng(3, ("p",))).assignment
        c = random_permutation(30, Rng(3, ("q",))).assignment
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestMultiplicativeNoise:
    def test_sigma_zero_is_identity(self, pot):
        assert multiplicative_noise(pot, 0.0, Rng(0)) is pot

    def test_reference_corruption_magnitude(self, pot):
        # sigma = 0.1 should land near nu = 0.087 on a cloud of this shape
        noised = multiplicative_noise(pot, 0.1, Rng(11, ("nu",)))
        nu = spectral_norm(noised.data - pot.data) / spectral_norm(pot.data)
        assert 0.087 * 0.7 <= nu <= 0.087 * 1.3

    def test_monte_carlo_mean_is_unbiased(self):
        cloud = gaussian_blob(13, n=50)
        draws = 10_000
        acc = np.zeros_like(cloud.data)
        for k in range(draws):
            acc += multiplicative_noise(cloud, 0.1, Rng(13, ("mc", k))).data
        acc /= draws
        # mask mean concentrates as sigma / sqrt(draws); 5 sigma margin
        tol = 5.0 * 0.1 * np.abs(cloud.data) / np.sqrt(draws) + 1e-12
        assert (np.abs(acc - cloud.data) <= tol).all()


class TestAdditiveNoise:
    def test_sigma_zero_is_identity(self, pebble):
        assert additive_noise(pebble, 0.0, Rng(0)) is pebble

    def test_reference_corruption_magnitude(self, pebble):
        # sigma = 0.01 should land near nu = 0.074 on a cloud of this scale
        noised = additive_noise(pebble, 0.01, Rng(11, ("nu",)))
        nu = spectral_norm(noised.data - pebble.data) / spectral_norm(pebble.data)
        assert 0.074 * 0.7 <= nu <= 0.074 * 1.3

    def test_empirical_variance_matches_sigma(self):
        cloud = gaussian_blob(14, n=40)
        sigma = 0.3
        draws = 10_000
        acc = 0.0
        count = 0
        for k in range(draws):
            diff = additive_noise(cloud, sigma, Rng(14, ("mc", k))).data - cloud.data
            acc += (diff**2).sum()
            count += diff.size
        assert acc / count == pytest.approx(sigma**2, rel=0.05)


class TestOcclude:
    def test_alpha_zero_adds_nothing(self, pot):
        assert occlude(pot, 0.0, Rng(0)) is pot

    def test_count_and_bounding_box(self):
        cloud = gaussian_blob(15, n=100)
        occluded = occlude(cloud, 0.25, Rng(15, ("o",)))
        assert occluded.n == 125
        assert np.array_equal(occluded.data[:, :100], cloud.data)
        lo = cloud.data.min(axis=1)[:, None]
        hi = cloud.data.max(axis=1)[:, None]
        clutter = occluded.data[:, 100:]
        assert (clutter >= lo).all() and (clutter <= hi).all()

    def test_floor_of_alpha_n(self):
        cloud = gaussian_blob(16, n=10)
        assert occlude(cloud, 0.19, Rng(0)).n == 11
        assert occlude(cloud, 1.0, Rng(0)).n == 20

    def test_clutter_mean_near_box_center(self):
        cloud = gaussian_blob(17, n=100)
        lo = cloud.data.min(axis=1)
        hi = cloud.data.max(axis=1)
        clutter = np.concatenate(
            [occlude(cloud, 1.0, Rng(17, ("c", k))).data[:, 100:] for k in range(100)],
            axis=1,
        )
        width = hi - lo
        tol = 4.0 * width / np.sqrt(12.0 * clutter.shape[1])
        assert (np.abs(clutter.mean(axis=1) - (lo + hi) / 2.0) <= tol).all()

    def test_remove_fraction_drops_points(self):
        cloud = gaussian_blob(18, n=50)
        thinned = occlude(cloud, 0.0, Rng(18, ("r",)), remove_fraction=0.2)
        assert thinned.n == 40
        # survivors are original columns in their original order
        survivors = {tuple(col) for col in thinned.data.T}
        originals = {tuple(col) for col in cloud.data.T}
        assert survivors <= originals

    def test_validation(self):
        cloud = gaussian_blob(19, n=10)
        with pytest.raises(InvalidInputError):
            occlude(cloud, -0.1, Rng(0))
        with pytest.raises(InvalidInputError):
            occlude(cloud, 0.0, Rng(0), remove_fraction=1.0)


class TestSuperpose:
    def test_clean_spec_is_identity(self, pot):
        assert superpose(pot, CorruptionSpec(), Rng(0)) is pot

    def test_single_stage_equals_direct_call(self, pot):
        rng = Rng(21, ("sp",))
        via_superpose = superpose(pot, CorruptionSpec(additive_sigma=0.02), rng)
        direct = additive_noise(pot, 0.02, rng.child("additive"))
        assert np.array_equal(via_superpose.data, direct.data)

        via_superpose = superpose(pot, CorruptionSpec(multiplicative_sigma=0.1), rng)
        direct = multiplicative_noise(pot, 0.1, rng.child("multiplicative"))
        assert np.array_equal(via_superpose.data, direct.data)

    def test_enabling_a_stage_preserves_other_draws(self, pot):
        rng = Rng(22, ("sp",))
        alone = superpose(pot, CorruptionSpec(multiplicative_sigma=0.1), rng)
        stacked = superpose(
            pot, CorruptionSpec(multiplicative_sigma=0.1, occlusion_alpha=0.1), rng
        )
        # the multiplicative stage's draws are untouched by the occlusion stage
        assert np.array_equal(stacked.data[:, : pot.n], alone.data)

    def test_stacked_corruption_exceeds_each_single_stage(self, pot):
        rng = Rng(23, ("sp",))
        spec = CorruptionSpec(
            multiplicative_sigma=0.1, additive_sigma=0.01, occlusion_alpha=0.05
        )
        norm = spectral_norm(pot.data)

        def nu(corrupted):
            diff = corrupted.data.copy()
            diff[:, : pot.n] -= pot.data
            return spectral_norm(diff) / norm

        stacked = nu(superpose(pot, spec, rng))
        singles = [
            nu(superpose(pot, CorruptionSpec(multiplicative_sigma=0.1), rng)),
            nu(superpose(pot, CorruptionSpec(additive_sigma=0.01), rng)),
            nu(superpose(pot, CorruptionSpec(occlusion_alpha=0.05), rng)),
        ]
        assert np.isfinite(stacked)
        assert stacked > max(singles)

    def test_corrupt_scene_swaps_target_only(self):
        scene = random_scene(gaussian_blob(24, n=40), Rng(24, ("s",)))
        spec = CorruptionSpec(additive_sigma=0.05)
        corrupted = corrupt_scene(scene, spec, Rng(24, ("c",)))
        assert corrupted.corruption == spec
        assert corrupted.source is scene.source
        assert corrupted.target_clean is scene.target_clean
        assert not np.array_equal(corrupted.target.data, scene.target_clean.data)

    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            CorruptionSpec(multiplicative_sigma=-0.1)


class TestCovarianceNoiseIdentities:
    def test_multiplicative_mean_covariance_identity(self):
        # E[E(noised)] = E + sigma^2 diag(E), checked on a Monte-Carlo mean
        cloud = gaussian_blob(25, n=60)
        sigma = 0.2
        draws = 2000
        acc = np.zeros((3, 3))
        for k in range(draws):
            noised = multiplicative_noise(cloud, sigma, Rng(25, ("mc", k)))
            acc += noised.data @ noised.data.T
        acc /= draws
        e = cloud.data @ cloud.data.T
        want = e + sigma**2 * np.diag(np.diag(e))
        assert np.linalg.norm(acc - want) <= 0.02 * np.linalg.norm(want)
        # and the mean shift itself is bounded by sigma^2 |E|_2
        assert spectral_norm(want - e) <= sigma**2 * spectral_norm(e) + 1e-12

    def test_occlusion_covariance_additivity(self):
        # in the common centering frame the clutter covariance adds exactly
        cloud = gaussian_blob(26, n=80)
        occluded = occlude(cloud, 0.5, Rng(26, ("o",)))
        b = occluded.data.mean(axis=1)
        whole = (occluded.data - b[:, None]) @ (occluded.data - b[:, None]).T
        original = (cloud.data - b[:, None]) @ (cloud.data - b[:, None]).T
        clutter = occluded.data[:, cloud.n:] - b[:, None]
        assert np.linalg.norm(whole - (original + clutter @ clutter.T)) <= 1e-9 * np.linalg.norm(whole)
