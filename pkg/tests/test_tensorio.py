import io

import numpy as np
import pytest

from stereopose.tensorio import (
    TensorFormatError,
    file_sha256,
    load_bundle,
    load_tensor,
    read_tensor,
    save_bundle,
    save_tensor,
    write_tensor,
)


@pytest.mark.parametrize(
    "dtype", ["float32", "float64", "int32", "int64", "uint8"]
)
def test_tensor_round_trip(dtype, tmp_path, rng):
    array = (rng.uniform(-100, 100, size=(3, 4, 5))).astype(dtype)
    path = tmp_path / "t.bin"
    save_tensor(path, array)
    back = load_tensor(path)
    assert back.dtype == np.dtype(dtype)
    assert back.shape == array.shape
    assert np.array_equal(back, array)


def test_bool_stored_as_uint8(tmp_path):
    array = np.array([[True, False], [False, True]])
    save_tensor(tmp_path / "b.bin", array)
    back = load_tensor(tmp_path / "b.bin")
    assert back.dtype == np.uint8
    assert np.array_equal(back.astype(bool), array)


def test_zero_dim_and_scalar_shapes(tmp_path):
    for array in (np.float64(3.5).reshape(()), np.zeros((0, 4), dtype="<f4")):
        save_tensor(tmp_path / "s.bin", np.asarray(array))
        back = load_tensor(tmp_path / "s.bin")
        assert back.shape == np.asarray(array).shape


def test_bad_magic_rejected():
    buf = io.BytesIO(b"NOPE" + b"\x00" * 16)
    with pytest.raises(TensorFormatError):
        read_tensor(buf)


def test_unsupported_dtype_rejected():
    buf = io.BytesIO()
    with pytest.raises(TensorFormatError):
        write_tensor(buf, np.zeros(3, dtype=np.complex128))


def test_bundle_round_trip(tmp_path, rng):
    tensors = {
        "conv.weight": rng.normal(size=(8, 3, 3, 3)).astype("<f4"),
        "bn.bias": rng.normal(size=(8,)).astype("<f4"),
        "step": np.array([7], dtype="<i8"),
    }
    path = tmp_path / "bundle.bin"
    save_bundle(path, tensors, config_hash="abc123")
    back, stored_hash = load_bundle(path)
    assert stored_hash == "abc123"
    assert set(back) == set(tensors)
    for name, array in tensors.items():
        assert np.array_equal(back[name], array)


def test_bundle_write_is_byte_stable(tmp_path, rng):
    tensors = {"a": rng.normal(size=(4, 4)).astype("<f8"), "b": np.arange(6, dtype="<i4")}
    save_bundle(tmp_path / "one.bin", tensors, config_hash="h")
    save_bundle(tmp_path / "two.bin", tensors, config_hash="h")
    assert file_sha256(tmp_path / "one.bin") == file_sha256(tmp_path / "two.bin")


def test_file_sha256_known_value(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"abc")
    # sha256("abc"), a published constant
    assert file_sha256(path) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
