"""Scattering-coefficient tests against the separation-of-variables oracle
and the exact transform identities."""

import math

import numpy as np
import pytest

from scatterid import coefficients as co
from scatterid import geometry as geo
from sov_oracle import w_diag_concentric_disks, w_diag_homogeneous_disk

OMEGA = 0.75 * math.pi

# frozen oracle values (mpmath, 50 digits) for the concentric reference
# target at omega = 0.75 pi: radius 0.5/0.2, materials 3/3 and 6/6
FROZEN_CONCENTRIC_DIAG = {
    0: -1.8631862693464418 - 1.2729945490445835j,
    1: 0.24051784218857516 - 0.01451487852742859j,
    2: -1.1648674714511094 - 0.3742436301969784j,
    3: -0.02780775805019238 - 0.00019332719579566836j,
}
FROZEN_DISK_DIAG = {
    0: 1.9515811463706783 - 2.437414024844322j,
    1: 1.9047879242124137 - 2.6097400788652196j,
    2: -0.8869441401075502 - 0.2074236160406223j,
}


@pytest.fixture(scope="module")
def w_concentric(concentric):
    return co.scattering_matrix(concentric, OMEGA, 10, 256)


def test_contrast_one_zero_matrix(contrast_one):
    w = co.scattering_matrix(contrast_one, OMEGA, 6, 128)
    assert np.max(np.abs(w.entries)) < 1e-9


def test_concentric_diagonal_against_frozen_oracle(w_concentric):
    for m, ref in FROZEN_CONCENTRIC_DIAG.items():
        got = w_concentric.coeff(m, m)
        assert abs(got - ref) <= 1e-7 * abs(ref)
        got_neg = w_concentric.coeff(-m, -m)
        assert abs(got_neg - ref) <= 1e-7 * abs(ref)


def test_concentric_off_diagonal_small(w_concentric):
    k = w_concentric.k_order
    off = w_concentric.entries.copy()
    np.fill_diagonal(off, 0.0)
    assert np.max(np.abs(off)) < 1e-8


def test_concentric_full_oracle_sweep(concentric):
    w = co.scattering_matrix(concentric, OMEGA, 8, 256)
    for m in range(0, 9):
        ref = w_diag_concentric_disks(m, OMEGA, 0.5, 0.2, 3, 3, 6, 6)
        assert w.coeff(m, m) == pytest.approx(ref, rel=1e-7, abs=1e-25)


def test_homogeneous_disk_against_oracle(catalog_by_name):
    w = co.scattering_matrix(catalog_by_name["disk"], OMEGA, 6, 256)
    for m, ref in FROZEN_DISK_DIAG.items():
        assert w.coeff(m, m) == pytest.approx(ref, rel=1e-7)
    for m in range(0, 7):
        ref = w_diag_homogeneous_disk(m, OMEGA, 0.5, 3.0, 3.0)
        assert w.coeff(m, m) == pytest.approx(ref, rel=1e-7, abs=1e-25)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------
def test_rotate_identity_cases(w_concentric):
    full = co.rotate_w(w_concentric, 2.0 * math.pi)
    assert np.allclose(full.entries, w_concentric.entries, rtol=0, atol=1e-12)
    rot = co.rotate_w(w_concentric, 0.7)
    assert np.allclose(np.diag(rot.entries), np.diag(w_concentric.entries))


def test_rotation_matches_direct(catalog_by_name):
    cfg = catalog_by_name["disk_ellipse"]
    for theta in (math.pi / 6, math.pi / 3, 1.0):
        w = co.scattering_matrix(cfg, OMEGA, 10, 128)
        direct = co.scattering_matrix(
            geo.apply_motion(cfg, geo.RigidMotion(theta=theta)),
            OMEGA, 10, 128)
        assert co.rel_error(co.rotate_w(w, theta), direct) < 1e-6


def test_rotation_exactness_full_catalog(catalog):
    theta = math.pi / 3
    for cfg in catalog:
        w = co.scattering_matrix(cfg, OMEGA, 8, 128)
        direct = co.scattering_matrix(
            geo.apply_motion(cfg, geo.RigidMotion(theta=theta)),
            OMEGA, 8, 128)
        err = co.rel_error(co.rotate_w(w, theta), direct)
        assert err < 1e-6, f"{cfg.name}: {err:.2e}"


def test_translate_zero_is_identity(w_concentric):
    out = co.translate_w(w_concentric, (0.0, 0.0), OMEGA, 4)
    k_in, k_out = w_concentric.k_order, 4
    block = w_concentric.entries[k_in - k_out:k_in + k_out + 1,
                                 k_in - k_out:k_in + k_out + 1]
    assert np.allclose(out.entries, block, rtol=0, atol=1e-14)


def test_translate_roundtrip(catalog_by_name):
    cfg = catalog_by_name["disk_disk"]
    z = (0.2, -0.15)
    K_out = 6
    w = co.scattering_matrix(cfg, OMEGA, K_out + 16, 128)
    there = co.translate_w(w, z, OMEGA, K_out + 8)
    back = co.translate_w(there, (-z[0], -z[1]), OMEGA, K_out)
    direct = co.scattering_matrix(cfg, OMEGA, K_out, 128)
    assert co.rel_error(back, direct) < 1e-8


def test_translation_matches_direct(catalog_by_name):
    cfg = catalog_by_name["disk_disk"]
    z = (-0.5, 0.5)
    K_out = 10
    w = co.scattering_matrix(cfg, OMEGA, K_out + 8, 128)
    moved = co.translate_w(w, z, OMEGA, K_out)
    direct = co.scattering_matrix(
        geo.apply_motion(cfg, geo.RigidMotion(z=z)), OMEGA, K_out, 128)
    assert co.rel_error(moved, direct) < 1e-6


def test_translate_margin_enforced(w_concentric):
    with pytest.raises(ValueError):
        co.translate_w(w_concentric, (0.1, 0.0), OMEGA,
                       w_concentric.k_order - 3)


def test_scaling_identity(catalog_by_name):
    for name, s in (("disk_disk", 1.2), ("ellipse", 0.5), ("ellipse", 0.8)):
        a, b = co.scale_check(catalog_by_name[name], s, OMEGA, 8, 128)
        assert co.rel_error(a, b) < 1e-6


def test_scale_one_identical(catalog_by_name):
    a, b = co.scale_check(catalog_by_name["disk"], 1.0, OMEGA, 4, 128)
    assert np.array_equal(a.entries, b.entries)


# ---------------------------------------------------------------------------
# structure
# ---------------------------------------------------------------------------
def test_parity_and_reciprocity_symmetry(catalog_by_name):
    # x-axis-symmetric target: W[-n,-m] = (-1)^{n+m} W[n,m]; reciprocity
    # makes W symmetric as a matrix
    w = co.scattering_matrix(catalog_by_name["disk_ellipse"], OMEGA, 6, 128)
    k = w.k_order
    e = w.entries
    scale = np.abs(e).max()
    for n in range(-k, k + 1):
        for m in range(-k, k + 1):
            assert abs(e[-n + k, -m + k] - (-1.0) ** (n + m) * e[n + k, m + k]) \
                <= 1e-7 * scale
    assert np.max(np.abs(e - e.T)) <= 1e-7 * scale


def test_decay_profile(w_concentric):
    prof = co.decay_profile(w_concentric)
    assert prof[0][0] == 0
    vals = [v for _, v in prof]
    for ell in range(3, len(vals) - 1):
        assert vals[ell + 1] < vals[ell]
    zero = co.ScatteringMatrix(k_order=2, omega=1.0,
                               entries=np.zeros((5, 5), dtype=complex))
    assert all(v == 0.0 for _, v in co.decay_profile(zero))


def test_decay_bound_shape(w_concentric):
    # |W[n,m]| <= c^{|n|+|m|} / (|n|^|n| |m|^|m|) for a fitted constant c
    prof = dict(co.decay_profile(w_concentric))
    fits = []
    for ell in range(5, w_concentric.k_order + 1):
        if prof[ell] > 0:
            # bound on the diagonal of the ring: c = (prof * ell^{2 ell})^{1/(2 ell)}
            fits.append((prof[ell] * float(ell) ** (2 * ell))
                        ** (1.0 / (2 * ell)))
    assert fits, "profile vanished below order 5"
    c = 1.05 * max(fits)
    for ell in range(5, w_concentric.k_order + 1):
        assert prof[ell] <= c ** (2 * ell) / float(ell) ** (2 * ell) * 1.01


def test_wmat_roundtrip(tmp_path, w_concentric):
    path = tmp_path / "w.wmat"
    co.save_wmat(w_concentric, path)
    back = co.load_wmat(path)
    assert back.k_order == w_concentric.k_order
    assert back.omega == w_concentric.omega
    assert back.provenance == w_concentric.provenance
    assert np.array_equal(back.entries, w_concentric.entries)
