import numpy as np

from adlens.rng import GAMMA, MASK64, Stream, derive_seed, mix64


def test_mix64_matches_reference_splitmix64_vectors():
    # first outputs of canonical splitmix64 for state 0
    s = Stream(0)
    assert [hex(int(v)) for v in s.next_u64s(3)] == [
        "0xe220a8397b1dcdaf",
        "0x6e789e6aa1b965f4",
        "0x6c45d188009454f",
    ]


def test_stream_is_counter_based_and_seekable():
    a = Stream(1234)
    first_five = a.uniforms(5)
    b = Stream(1234)
    singles = np.array([b.uniform() for _ in range(5)])
    assert np.array_equal(first_five, singles)


def test_bulk_and_scalar_paths_agree():
    a = Stream(99)
    bulk = a.gaussians(4)
    b = Stream(99)
    scalar = np.array([b.gaussian() for _ in range(4)])
    assert np.array_equal(bulk, scalar)


def test_uniforms_in_unit_interval():
    u = Stream(5).uniforms(10000)
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    assert abs(u.mean() - 0.5) < 0.02


def test_gaussians_have_standard_moments():
    g = Stream(7).gaussians(20000)
    assert abs(g.mean()) < 0.03
    assert abs(g.std() - 1.0) < 0.03


def test_derive_seed_is_order_sensitive_and_stable():
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert 0 <= derive_seed(0) <= MASK64


def test_spawned_streams_are_independent_of_parent_position():
    parent = Stream(42)
    child_before = parent.spawn(9)
    parent.uniforms(100)
    child_after = parent.spawn(9)
    assert child_before.seed == child_after.seed


def test_permutation_and_sampling_are_valid():
    s = Stream(3)
    perm = s.permutation(20)
    assert sorted(perm.tolist()) == list(range(20))
    sample = Stream(4).sample_without_replacement(10, 6)
    assert len(set(sample)) == 6
    assert all(0 <= v < 10 for v in sample)


def test_randint_below_covers_range():
    s = Stream(11)
    draws = {s.randint_below(4) for _ in range(200)}
    assert draws == {0, 1, 2, 3}


def test_frozen_reference_vector_for_this_package():
    # regression pin: derive_seed + stream layout must never drift
    s = Stream(derive_seed(2024, 1, 7))
    got = s.next_u64s(2)
    assert int(got[0]) == mix64((s.seed + GAMMA) & MASK64)
