"""Material correctness rests on two oracles: a Monte Carlo white furnace
(total sampled energy can never exceed 1) and the identity
weight * pdf = f * |cos| that ties the sampler to the evaluator.
"""

import numpy as np
import pytest
from numba import njit

from raygen.kernels import bsdf_eval, bsdf_sample, rand_f, rng_init
from raygen.materials import (
    PrincipledMaterial,
    Texture,
    eval_bsdf,
    resolve_params,
    sample_bsdf,
    texture_lookup,
)

GRID = [0.0, 0.5, 1.0]


@njit(cache=True)
def _furnace_energy(rough, metal, trans, ior, woz, n_samples, seed):
    """Mean path weight for one bounce off a white material."""
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, seed, 0, 0)
    samp = np.empty(8)
    wox = np.sqrt(max(1.0 - woz * woz, 0.0))
    total = 0.0
    eta_rel = ior
    for _ in range(n_samples):
        ok = bsdf_sample(1.0, 1.0, 1.0, rough, metal, trans, ior, eta_rel,
                         wox, 0.0, woz, st, samp)
        if ok:
            total += (samp[3] + samp[4] + samp[5]) / 3.0
    return total / n_samples


@njit(cache=True)
def _consistency_worst(n_draws, seed):
    """Max relative |weight*pdf - f*cos| over random rough materials."""
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, seed, 1, 0)
    samp = np.empty(8)
    worst = 0.0
    for _ in range(n_draws):
        rough = 0.05 + 0.95 * rand_f(st)
        metal = rand_f(st)
        trans = rand_f(st)
        ior = 1.1 + rand_f(st)
        woz = 0.05 + 0.95 * rand_f(st)
        wox = np.sqrt(1.0 - woz * woz)
        cr = 0.2 + 0.8 * rand_f(st)
        eta_rel = ior
        ok = bsdf_sample(cr, cr, cr, rough, metal, trans, ior, eta_rel,
                         wox, 0.0, woz, st, samp)
        if not ok or samp[7] != 0.0:
            continue
        fr, fg, fb, pdf = bsdf_eval(cr, cr, cr, rough, metal, trans, ior,
                                    eta_rel, wox, 0.0, woz,
                                    samp[0], samp[1], samp[2])
        lhs = samp[3] * samp[6]
        rhs = fr * abs(samp[2])
        denom = max(abs(rhs), 1e-12)
        rel = abs(lhs - rhs) / denom
        if rel > worst:
            worst = rel
    return worst


@pytest.mark.parametrize("rough", GRID)
@pytest.mark.parametrize("metal", GRID)
@pytest.mark.parametrize("trans", GRID)
def test_white_furnace_energy_bound(rough, metal, trans):
    energy = _furnace_energy(rough, metal, trans, 1.45, np.cos(np.radians(40.0)),
                             1_000_000, 42)
    assert energy <= 1.015
    assert energy > 0.0


def test_sample_eval_consistency():
    assert _consistency_worst(10_000, 9) <= 1e-5


def test_lambertian_sampling_is_cosine_weighted():
    """Chi-square the sampled elevation histogram against the cosine law."""
    from scipy.stats import chisquare

    n = 200_000
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 77, 0, 0)
    samp = np.empty(8)
    cosines = np.empty(n)
    for i in range(n):
        bsdf_sample(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.45, 1.45,
                    0.3, 0.0, np.sqrt(1 - 0.09), st, samp)
        cosines[i] = samp[2]
    edges = np.linspace(0.0, 1.0, 21)
    observed, _ = np.histogram(cosines, edges)
    expected = n * (edges[1:] ** 2 - edges[:-1] ** 2)  # cdf of cos-weighted z
    assert chisquare(observed, expected).pvalue > 0.01


def test_metal_has_no_transmission():
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 5, 0, 0)
    samp = np.empty(8)
    for _ in range(2000):
        bsdf_sample(0.9, 0.6, 0.2, 0.3, 1.0, 1.0, 1.45, 1.45,
                    0.4, 0.0, np.sqrt(1 - 0.16), st, samp)
        assert samp[2] >= 0.0  # metallic=1 wins over transmission=1


def test_smooth_glass_directions_are_analytic():
    """roughness 0 glass must yield the mirror or the Snell refraction."""
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 13, 0, 0)
    samp = np.empty(8)
    woz = np.cos(np.radians(30.0))
    wox = np.sin(np.radians(30.0))
    ior = 1.5
    sin_t = wox / ior
    refr_z = -np.sqrt(1.0 - sin_t * sin_t)
    seen = set()
    for _ in range(500):
        ok = bsdf_sample(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, ior, ior,
                        wox, 0.0, woz, st, samp)
        assert ok and samp[7] == 1.0  # always a delta lobe
        if samp[2] > 0.0:
            assert np.allclose([samp[0], samp[2]], [-wox, woz], atol=1e-12)
            seen.add("reflect")
        else:
            assert np.allclose([samp[0], samp[2]], [-sin_t, refr_z], atol=1e-12)
            seen.add("refract")
    assert seen == {"reflect", "refract"}


def test_eval_wrapper_matches_kernel():
    mat = PrincipledMaterial(base_color=(0.6, 0.4, 0.2), roughness=0.35)
    params = resolve_params(mat, (0.0, 0.0))
    n = np.array([0.0, 0.0, 1.0])
    wo = np.array([0.3, 0.1, 0.9])
    wo /= np.linalg.norm(wo)
    wi = np.array([-0.2, 0.4, 0.8])
    wi /= np.linalg.norm(wi)
    f, pdf = eval_bsdf(params, wo, wi, n)
    assert pdf > 0.0
    assert np.all(f >= 0.0)


def test_sample_wrapper_round_trip(rng):
    mat = PrincipledMaterial(base_color=(0.7, 0.7, 0.7), roughness=0.4)
    params = resolve_params(mat, (0.0, 0.0))
    n = np.array([0.0, 0.0, 1.0])
    wo = np.array([0.1, -0.2, 0.97])
    wo /= np.linalg.norm(wo)
    st = np.zeros(1, dtype=np.uint64)
    rng_init(st, 3, 0, 0)
    for _ in range(100):
        s = sample_bsdf(params, wo, n, st)
        if s is None:
            continue
        f, pdf = eval_bsdf(params, wo, s.wi, n)
        assert np.isclose(pdf, s.pdf, rtol=1e-9)
        assert np.allclose(s.weight * s.pdf, f * abs(s.wi @ n), rtol=1e-6,
                           atol=1e-12)


def test_textured_roughness_drives_lobe():
    tex = Texture(np.full((2, 2, 3), 0.25, np.float32))
    mat = PrincipledMaterial(roughness=0.9, roughness_texture=tex)
    params = resolve_params(mat, (0.3, 0.6))
    assert np.isclose(params["roughness"], 0.25)


def test_texture_lookup_bilinear_center():
    px = np.zeros((2, 2, 3), np.float32)
    px[0, 0] = 1.0
    tex = Texture(px)
    # dead center of a 2x2 repeat-wrapped texture averages all four texels
    val = texture_lookup(tex, (0.5, 0.5))
    assert np.allclose(val[:3], 0.25)
