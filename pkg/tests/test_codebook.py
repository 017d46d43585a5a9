import itertools
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mubpilot.codebook import (Codebook, CodebookKind, augment_with_unitary, build_codebook,
                               build_incomplete, build_mub, build_mub_phase,
                               build_orthogonal_reused, coherence, invariant_failures,
                               is_prime, random_unitary, read_codebook, validate,
                               write_codebook)
from mubpilot.errors import NonPrimeDimension, NotUnitary, TooManyBases

PRIMES = [2, 3, 5, 7, 11, 13]


def pairwise_unbiased(blocks, Q, tol=1e-9):
    """Exhaustive cross-block check, one inner product at a time."""
    worst = 0.0
    for a, b in itertools.combinations(blocks, 2):
        for x in a.T:
            for y in b.T:
                worst = max(worst, abs(abs(np.vdot(x, y)) - Q ** -0.5))
    return worst < tol


def c1_ok(block, tol=1e-10):
    return np.linalg.norm(block.conj().T @ block - np.eye(block.shape[1])) < tol


def test_is_prime():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


def test_q2_pair_matches_explicit_matrices():
    cb = build_mub_phase(2, 2)
    s = 2 ** -0.5
    np.testing.assert_allclose(cb.block(0), s * np.array([[1, 1], [1, -1]]), atol=1e-15)
    np.testing.assert_allclose(cb.block(1), s * np.array([[1, 1], [1j, -1j]]), atol=1e-15)


def test_q7_exhaustive_unbiasedness():
    cb = build_mub_phase(7, 7)
    assert len(cb.blocks) == 7
    assert pairwise_unbiased(cb.blocks, 7)
    assert all(c1_ok(b) for b in cb.blocks)
    assert np.max(np.abs(np.abs(cb.matrix) - 7 ** -0.5)) < 1e-12


def test_single_block_is_unitary():
    cb = build_mub_phase(7, 1)
    assert cb.matrix.shape == (7, 7)
    assert c1_ok(cb.matrix)
    assert coherence(cb) == 0.0


@pytest.mark.parametrize("Q", [1, 4, 6, 9, 15])
def test_non_prime_rejected(Q):
    with pytest.raises(NonPrimeDimension):
        build_mub_phase(Q, 1)


def test_phase_family_caps_at_q():
    with pytest.raises(TooManyBases):
        build_mub_phase(7, 8)


def test_mub_count_capped_at_q_plus_one(rng):
    # more than Q + 1 mutually unbiased bases cannot exist; the API refuses
    assert build_mub(7, 8, rng).J == 8
    with pytest.raises(TooManyBases):
        build_mub(7, 9, rng)


@pytest.mark.parametrize("Q", PRIMES)
def test_phase_family_all_primes(Q):
    cb = build_mub_phase(Q, Q)
    assert not invariant_failures(cb)
    assert pairwise_unbiased(cb.blocks[:4], Q)


def test_augment_identity_on_pair():
    cb = augment_with_unitary(build_mub_phase(2, 2), np.eye(2))
    assert cb.kind is CodebookKind.MUB and cb.J == 3
    np.testing.assert_array_equal(cb.block(0), np.eye(2))
    assert pairwise_unbiased(cb.blocks, 2)
    assert validate(cb).coherence == pytest.approx(2 ** -0.5, abs=1e-12)


def test_augment_q7_any_seven_of_eight(rng):
    full = augment_with_unitary(build_mub_phase(7, 7), random_unitary(7, rng))
    assert full.J == 8
    for drop in range(8):
        sub = full.take_cells([j for j in range(8) if j != drop])
        assert not invariant_failures(sub)


def test_augment_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        augment_with_unitary(build_mub_phase(2, 2), np.ones((2, 2)))


@given(st.sampled_from([2, 3, 5, 7]), st.integers(0, 2 ** 32 - 1))
def test_augmentation_preserves_invariants(Q, seed):
    base = build_mub_phase(Q, Q)
    U = random_unitary(Q, np.random.default_rng(seed))
    cb = augment_with_unitary(base, U)
    assert all(c1_ok(b) for b in cb.blocks)
    assert pairwise_unbiased(cb.blocks, Q)


def test_incomplete_blocks_are_unitary_and_deterministic():
    a = build_incomplete(7, 7, np.random.default_rng(5))
    b = build_incomplete(7, 7, np.random.default_rng(5))
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert all(c1_ok(blk) for blk in a.blocks)


def test_incomplete_misses_welch_equality():
    hits = sum(coherence(build_incomplete(7, 7, np.random.default_rng(s))) > 7 ** -0.5 + 1e-6
               for s in range(100))
    assert hits == 100


def test_random_unitary_phase_fix_gives_haar_moments():
    # for Haar U, E|U_ij|^2 = 1/Q and the diagonal of R in QR is positive
    rng = np.random.default_rng(0)
    acc = np.zeros((4, 4))
    for _ in range(4000):
        acc += np.abs(random_unitary(4, rng)) ** 2
    np.testing.assert_allclose(acc / 4000, 0.25, atol=0.02)


def test_orthogonal_reused_identical_blocks(rng):
    cb = build_orthogonal_reused(7, 7, rng)
    for j in range(7):
        np.testing.assert_array_equal(cb.block(j), cb.block(0))
    assert validate(cb).coherence == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_reused_small_collides(rng):
    cb = build_orthogonal_reused(2, 3, rng)
    assert coherence(cb) == pytest.approx(1.0, abs=1e-12)


def test_orthogonal_reused_single_cell_matches_incomplete():
    a = build_orthogonal_reused(7, 1, np.random.default_rng(3))
    b = build_incomplete(7, 1, np.random.default_rng(3))
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_validate_mub_phase():
    rep = validate(build_mub_phase(7, 7))
    assert rep.c1_residual < 1e-10
    assert abs(rep.coherence - 7 ** -0.5) < 1e-9
    assert rep.entry_amplitude_spread < 1e-12


def test_validate_q2_pair():
    assert validate(build_mub_phase(2, 2)).coherence == pytest.approx(0.7071067811865476, abs=1e-15)


def test_invariant_failures_flag_corruption():
    cb = build_mub_phase(5, 5)
    m = cb.matrix.copy()
    m[:, 7] = m[:, 6]  # duplicate column inside a block
    bad = Codebook(m, 5, 5, 5, CodebookKind.MUB_PHASE)
    assert "c1_orthogonality" in invariant_failures(bad)
    inc = build_incomplete(5, 5, np.random.default_rng(0))
    relabelled = Codebook(inc.matrix, 5, 5, 5, CodebookKind.MUB)
    assert "unbiasedness" in invariant_failures(relabelled)


def test_select_and_truncate(rng):
    cb = build_mub(7, 7, rng)
    sub = cb.select([[6, 0]] * 7)
    assert sub.K == 2 and sub.matrix.shape == (7, 14)
    np.testing.assert_array_equal(sub.matrix[:, 0], cb.block(0)[:, 6])
    np.testing.assert_array_equal(cb.truncate(3).block(2), cb.block(2)[:, :3])


@pytest.mark.parametrize("kind", list(CodebookKind))
def test_io_round_trip_bit_exact(kind, tmp_path):
    cb = build_codebook(kind, 7, 7, np.random.default_rng(11))
    path = tmp_path / "cb.txt"
    write_codebook(cb, path)
    back = read_codebook(path)
    assert back.matrix.tobytes() == cb.matrix.tobytes()
    assert (back.Q, back.J, back.K, back.kind) == (cb.Q, cb.J, cb.K, cb.kind)
    header = path.read_text().splitlines()[0]
    assert header == f"7 7 7 {kind.value}"


@given(st.integers(0, 2 ** 63 - 1))
def test_io_round_trip_random_entries(seed):
    # arbitrary magnitudes, not just unit-norm columns
    r = np.random.default_rng(seed)
    m = r.standard_normal((3, 4)) * 10.0 ** r.integers(-300, 300, size=(3, 4))
    cb = Codebook(m + 1j * m[::-1], 2, 3, 2, CodebookKind.INCOMPLETE)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "cb.txt"
        write_codebook(cb, path)
        assert read_codebook(path).matrix.tobytes() == cb.matrix.tobytes()


def test_builders_are_deterministic():
    for kind in CodebookKind:
        a = build_codebook(kind, 5, 4, np.random.default_rng(9))
        b = build_codebook(kind, 5, 4, np.random.default_rng(9))
        np.testing.assert_array_equal(a.matrix, b.matrix)
