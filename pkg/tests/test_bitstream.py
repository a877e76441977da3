import itertools

import numpy as np
import pytest

from granucodec.bitstream import (
    BitReader, BitWriter, BitstreamError, Container, build_huffman,
    canonical_codewords, decode_granularity_map, decode_indices,
    encode_granularity_map, encode_indices, kraft_sum, mean_code_length,
    measure_rate, parse_container, serialize_container, weighted_total_bits,
)
from granucodec.granularity import COARSE, FINE, MEDIUM, RatioTriple


def kraft_length_profiles(k):
    """All sorted code-length profiles of full prefix codes with k leaves."""
    profiles = set()

    def grow(leaves):
        if len(leaves) == k:
            profiles.add(tuple(sorted(leaves)))
            return
        if len(leaves) > k:
            return
        # split the deepest-first leaf candidates; dedupe via sorted tuples
        seen = set()
        for i, depth in enumerate(leaves):
            if depth in seen:
                continue
            seen.add(depth)
            grow(leaves[:i] + leaves[i + 1:] + [depth + 1, depth + 1])

    grow([0])
    return profiles


def brute_force_optimum(counts):
    """Minimum weighted length over all full prefix codes (oracle)."""
    ordered = sorted(counts, reverse=True)
    best = None
    for profile in kraft_length_profiles(len(counts)):
        cost = sum(c * l for c, l in zip(ordered, sorted(profile)))
        best = cost if best is None else min(best, cost)
    return best


class TestHuffman:
    def test_uniform_1024_all_length_10(self):
        code = build_huffman(np.ones(1024, dtype=np.uint64))
        assert np.all(code.lengths == 10)
        assert mean_code_length(code) == 10.0

    def test_known_small_table(self):
        code = build_huffman(np.array([5, 2, 1, 1], dtype=np.uint64))
        assert sorted(code.lengths.tolist()) == [1, 2, 3, 3]
        assert weighted_total_bits(code, [5, 2, 1, 1]) == 15
        assert mean_code_length(code) == 2.25

    def test_single_symbol_length_one(self):
        code = build_huffman(np.array([42], dtype=np.uint64))
        assert code.lengths.tolist() == [1]

    def test_unfinalized_rejected(self):
        with pytest.raises(BitstreamError):
            build_huffman(np.array([3, 0, 1], dtype=np.uint64))

    def test_kraft_equality_random_tables(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            counts = rng.integers(1, 1000, size=1024).astype(np.uint64)
            assert kraft_sum(build_huffman(counts)) == 1.0

    def test_optimal_small_alphabets(self):
        rng = np.random.default_rng(1)
        for k in range(2, 7):
            for _ in range(30):
                counts = rng.integers(1, 50, size=k).astype(np.uint64)
                code = build_huffman(counts)
                assert weighted_total_bits(code, counts) == brute_force_optimum(counts)

    def test_prefix_free(self):
        code = build_huffman(np.array([9, 4, 2, 2, 1, 1], dtype=np.uint64))
        words = [format(int(w), f"0{int(l)}b")
                 for w, l in zip(code.codewords, code.lengths)]
        for a, b in itertools.permutations(words, 2):
            assert not b.startswith(a)

    def test_canonical_ordering(self):
        lengths = np.array([3, 1, 3, 2], dtype=np.int32)
        words = canonical_codewords(lengths)
        # (length, symbol) order: sym1 len1, sym3 len2, sym0 len3, sym2 len3
        assert words[1] == 0b0
        assert words[3] == 0b10
        assert words[0] == 0b110
        assert words[2] == 0b111


class TestIndexCoding:
    def test_empty_stream(self):
        code = build_huffman(np.ones(16, dtype=np.uint64))
        w = BitWriter()
        assert encode_indices(np.array([], dtype=np.int32), code, w) == 0

    def test_uniform_code_bit_count(self):
        code = build_huffman(np.ones(1024, dtype=np.uint64))
        w = BitWriter()
        bits = encode_indices(np.arange(16), code, w)
        assert bits == 160

    def test_roundtrip_random_streams(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = int(rng.integers(2, 200))
            counts = rng.integers(1, 100, size=k).astype(np.uint64)
            code = build_huffman(counts)
            stream = rng.integers(0, k, size=rng.integers(0, 500))
            w = BitWriter()
            encode_indices(stream, code, w)
            r = BitReader(w.getvalue(), w.bit_length)
            decoded = decode_indices(r, stream.size, code)
            assert np.array_equal(decoded, stream)

    def test_symbol_out_of_range(self):
        code = build_huffman(np.ones(4, dtype=np.uint64))
        with pytest.raises(BitstreamError):
            encode_indices(np.array([4]), code, BitWriter())

    def test_truncated_payload(self):
        code = build_huffman(np.ones(16, dtype=np.uint64))
        w = BitWriter()
        encode_indices(np.array([1, 2, 3]), code, w)
        r = BitReader(w.getvalue(), w.bit_length - 2)
        with pytest.raises(BitstreamError):
            decode_indices(r, 3, code)


class TestMapCoding:
    def test_all_coarse_one_bit_per_block(self):
        gmap = np.full((4, 4), COARSE, dtype=np.uint8)
        w = BitWriter()
        assert encode_granularity_map(gmap, w) == 16

    def test_fine_coarse_bits(self):
        w = BitWriter()
        encode_granularity_map(np.array([[FINE, COARSE]], dtype=np.uint8), w)
        assert w.bit_length == 3
        assert w.getvalue() == bytes([0b11000000])

    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            by, bx = rng.integers(1, 9, size=2)
            gmap = rng.integers(0, 3, size=(by, bx)).astype(np.uint8)
            w = BitWriter()
            encode_granularity_map(gmap, w)
            r = BitReader(w.getvalue(), w.bit_length)
            assert np.array_equal(decode_granularity_map(r, by, bx), gmap)


def _container(payload_bits=12):
    w = BitWriter()
    w.write(0b1011_0110_1101, payload_bits)
    return Container(
        true_w=30, true_h=17, padded_w=32, padded_h=32,
        codebook_hash=0x0123456789ABCDEF,
        ratios=RatioTriple(0.25, 0.5, 0.25),
        index_bits=(5, 4, 0), map_bits=3,
        payload=w.getvalue(),
    )


class TestContainer:
    def test_serialize_parse_identity(self):
        c = _container()
        c2 = parse_container(serialize_container(c))
        assert c2 == c

    def test_every_header_byte_flip_detected(self):
        data = bytearray(serialize_container(_container()))
        header_len = len(data) - len(_container().payload)
        for pos in range(header_len):
            for flip in (0x01, 0xFF):
                corrupt = bytearray(data)
                corrupt[pos] ^= flip
                with pytest.raises(BitstreamError):
                    parse_container(bytes(corrupt))

    def test_nonzero_padding_rejected(self):
        data = bytearray(serialize_container(_container()))
        data[-1] |= 0x01  # 12 payload bits -> low 4 bits of last byte are pad
        with pytest.raises(BitstreamError):
            parse_container(bytes(data))

    def test_measure_rate(self):
        c = _container()
        total, payload = measure_rate(c)
        assert total == pytest.approx(8 * c.byte_length / (30 * 17))
        assert payload == pytest.approx(12 / (30 * 17))

    def test_rate_is_bytes_over_pixels(self):
        # 64 bytes over a 256-pixel image would be exactly 2.0 bpp
        c = Container(true_w=16, true_h=16, padded_w=16, padded_h=16,
                      codebook_hash=0, ratios=RatioTriple(0, 0, 1),
                      index_bits=(0, 0, 0), map_bits=40, payload=bytes(5))
        total, payload = measure_rate(c)
        assert total == pytest.approx(8 * c.byte_length / 256)
        assert payload == pytest.approx(40 / 256)
