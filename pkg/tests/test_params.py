import numpy as np
import pytest

from fusiontrack.params import ParamStore, load_feature_map, save_feature_map


@pytest.fixture
def store(rng):
    return ParamStore({
        "b.weight": rng.standard_normal((2, 3, 3, 3)),
        "a.bias": rng.standard_normal(2),
        "scalar": 1.5,
    })


def test_round_trip_is_bit_exact(store, tmp_path):
    p1, p2 = tmp_path / "one.params", tmp_path / "two.params"
    store.save(p1)
    loaded = ParamStore.load(p1)
    loaded.save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    for name in store:
        assert loaded[name].tobytes() == store[name].tobytes()


def test_manifest_layout(store):
    blob = store.to_bytes()
    header = blob.split(b"\n\n", 1)[0].decode()
    assert header.splitlines() == ["a.bias 2 0", "b.weight 2 3 3 3 2", "scalar 56"]
    assert len(blob) - len(header) - 2 == 57 * 4


def test_payload_is_little_endian_f32():
    blob = ParamStore({"x": [1.0]}).to_bytes()
    assert blob.endswith(np.array([1.0], dtype="<f4").tobytes())


def test_lookup_checks_shape(store):
    assert store.get_checked("a.bias", (2,)).shape == (2,)
    with pytest.raises(ValueError, match="expected"):
        store.get_checked("a.bias", (3,))
    with pytest.raises(KeyError):
        store.get_checked("missing", (1,))


def test_truncated_payload_fails():
    blob = ParamStore({"x": np.zeros(4)}).to_bytes()
    with pytest.raises(ValueError):
        ParamStore.from_bytes(blob[:-4])


def test_empty_store_round_trip():
    assert len(ParamStore.from_bytes(ParamStore().to_bytes())) == 0


def test_feature_map_file(tmp_path, rng):
    x = rng.standard_normal((2, 3, 4)).astype(np.float32)
    save_feature_map(tmp_path / "f.params", "fused", x)
    np.testing.assert_array_equal(load_feature_map(tmp_path / "f.params"), x)


def test_rejects_whitespace_names():
    with pytest.raises(ValueError):
        ParamStore({"bad name": [1.0]})
