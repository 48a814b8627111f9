import numpy as np
import pytest

from ncmcast.gf import GF2m
from ncmcast.rlnc import CodedPacket, DimensionError, Generation, payload_symbols


def unit_packet(gen, k):
    coef = np.zeros(gen.size, dtype=gen.field.dtype)
    coef[k] = 1
    return gen.combine(coef)


def ranks_of_batch(gf, mats):
    """Rank of each matrix in a batch, by vectorized Gaussian elimination.

    Independent of Generation.absorb; used as the oracle for rank
    statistics.
    """
    M = mats.copy()
    n, n_rows, n_cols = M.shape
    rank = np.zeros(n, dtype=np.int64)
    rows_idx = np.arange(n_rows)[None, :]
    for col in range(n_cols):
        eligible = (M[:, :, col] != 0) & (rows_idx >= rank[:, None])
        has = eligible.any(axis=1)
        which = np.nonzero(has)[0]
        if which.size == 0:
            continue
        prow = eligible.argmax(axis=1)[which]
        r0 = rank[which]
        tmp = M[which, r0].copy()
        M[which, r0] = M[which, prow]
        M[which, prow] = tmp
        scale = gf.inv(M[which, r0, col])
        M[which, r0] = gf.mul(scale[:, None], M[which, r0])
        f = M[which, :, col].copy()
        f[np.arange(which.size), r0] = 0
        M[which] ^= gf.mul(f[:, :, None], M[which, r0][:, None, :])
        rank[which] += 1
    return rank


def test_payload_symbols():
    assert payload_symbols(10_000, 8) == 1250
    assert payload_symbols(10_000, 16) == 625
    assert payload_symbols(10_000, 4) == 2500
    with pytest.raises(ValueError):
        payload_symbols(10_001, 8)
    with pytest.raises(ValueError):
        payload_symbols(0, 8)


def test_single_source_linearity():
    gf = GF2m(8)
    rng = np.random.default_rng(0)
    gen = Generation.random(gf, 1, 10, rng)
    for seed in range(5):
        pkt = gen.encode(np.random.default_rng(seed))
        c = int(pkt.coefficients[0])
        assert np.array_equal(pkt.payload, gf.mul(c, gen.source_payloads[0]))


def test_unit_vector_payload():
    gf = GF2m(8)
    gen = Generation.random(gf, 2, 6, np.random.default_rng(1))
    pkt = gen.combine(np.array([1, 0], dtype=np.uint8))
    assert np.array_equal(pkt.payload, gen.source_payloads[0])


def test_absorb_unit_vectors_and_decode():
    gf = GF2m(8)
    rng = np.random.default_rng(2)
    gen = Generation.random(gf, 5, 8, rng)
    rx = Generation(gf, np.zeros((5, 8), dtype=np.uint8))
    for k in range(5):
        assert rx.absorb(unit_packet(gen, k)) is True
        assert rx.rank == k + 1
    assert rx.is_complete
    assert np.array_equal(rx.decode(), gen.source_payloads)


def test_duplicate_packet_not_innovative():
    gf = GF2m(8)
    rng = np.random.default_rng(3)
    gen = Generation.random(gf, 4, 6, rng)
    rx = Generation(gf, np.zeros((4, 6), dtype=np.uint8))
    pkt = gen.encode(rng)
    first = rx.absorb(pkt)
    again = rx.absorb(CodedPacket(pkt.coefficients.copy(), pkt.payload.copy()))
    assert first is True
    assert again is False
    assert rx.rank == 1


def test_dimension_mismatch_rejected():
    gf = GF2m(8)
    gen = Generation.random(gf, 4, 6, np.random.default_rng(4))
    bad_coef = CodedPacket(np.zeros(3, np.uint8), np.zeros(6, np.uint8))
    with pytest.raises(DimensionError):
        gen.absorb(bad_coef)
    bad_payload = CodedPacket(np.zeros(4, np.uint8), np.zeros(5, np.uint8))
    with pytest.raises(DimensionError):
        gen.absorb(bad_payload)


def test_decode_not_ready_before_full_rank():
    gf = GF2m(8)
    rng = np.random.default_rng(5)
    gen = Generation.random(gf, 3, 4, rng)
    rx = Generation(gf, np.zeros((3, 4), dtype=np.uint8))
    assert rx.decode() is None
    rx.absorb(gen.encode(rng))
    assert rx.decode() is None


def test_rank_monotone_and_bounded():
    gf = GF2m(4)
    rng = np.random.default_rng(6)
    gen = Generation.random(gf, 4, 3, rng)
    rx = Generation(gf, np.zeros((4, 3), dtype=np.uint8))
    innovations = 0
    prev = 0
    for _ in range(60):
        innovations += rx.absorb(gen.encode(rng))
        assert rx.rank >= prev
        prev = rx.rank
    assert rx.rank == 4
    assert innovations == 4


def test_innovation_probability_rank3_gf256():
    """Fresh random packet lands in a fixed 3-dim subspace of GF(256)^4
    with probability q^3 / q^4 = 1/256; empirical rate within 3 sigma."""
    gf = GF2m(8)
    rng = np.random.default_rng(7)
    gen = Generation.random(gf, 4, 2, rng)
    rx = Generation(gf, np.zeros((4, 2), dtype=np.uint8))
    while rx.rank < 3:
        rx.absorb(gen.encode(rng))
    rows = rx.coefficient_rows
    pivots = rx.pivot_columns
    n = 100_000
    M = gf.random_symbols(rng, (n, 4))
    for r in range(3):
        f = M[:, pivots[r]].copy()
        M ^= gf.mul(f[:, None], rows[r][None, :])
    dependent = np.all(M == 0, axis=1)
    p = 1.0 / 256.0
    sigma = np.sqrt(p * (1 - p) / n)
    assert abs(dependent.mean() - p) <= 3 * sigma


def test_full_rank_probability_gf65536():
    """Ten random packets of a 10-packet block are full rank with
    probability prod(1 - q^(k-10)) ~ 0.9999847 >= 0.999 for q = 2^16."""
    gf = GF2m(16)
    rng = np.random.default_rng(8)
    runs = 10_000
    mats = gf.random_symbols(rng, (runs, 10, 10))
    ranks = ranks_of_batch(gf, mats)
    assert (ranks == 10).mean() >= 0.999
    # tie the batch oracle to the incremental absorb path on a subset
    for mat in mats[:50]:
        rx = Generation(gf, np.zeros((10, 1), dtype=np.uint16))
        for row in mat:
            rx.absorb(CodedPacket(row, np.zeros(1, dtype=np.uint16)))
        assert rx.rank == ranks_of_batch(gf, mat[None])[0]


@pytest.mark.parametrize("m", [4, 8, 16])
def test_round_trip_fuzz(m):
    gf = GF2m(m)
    rng = np.random.default_rng(9 + m)
    cases = 1000 if m < 16 else 200
    for _ in range(cases):
        size = int(rng.integers(1, 7))
        width = int(rng.integers(1, 5))
        gen = Generation.random(gf, size, width, rng)
        rx = Generation(gf, np.zeros((size, width), dtype=gf.dtype))
        guard = 0
        while not rx.is_complete:
            rx.absorb(gen.encode(rng))
            guard += 1
            assert guard < 500
        assert np.array_equal(rx.decode(), gen.source_payloads)
