import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbdc_pki import crypto


@pytest.mark.parametrize("alg", [crypto.MOCK, crypto.ED25519])
def test_sign_verify(alg):
    kp = crypto.derive_keypair("alice", algorithm_id=alg)
    sig = crypto.sign(kp, b"message")
    assert crypto.verify(kp.public, b"message", sig)
    assert not crypto.verify(kp.public, b"messagf", sig)
    other = crypto.derive_keypair("bob", algorithm_id=alg)
    assert not crypto.verify(other.public, b"message", sig)


@pytest.mark.parametrize("alg", [crypto.MOCK, crypto.ED25519])
def test_deterministic(alg):
    kp = crypto.derive_keypair("alice", seed=3, algorithm_id=alg)
    assert crypto.sign(kp, b"m") == crypto.sign(kp, b"m")
    assert crypto.derive_keypair("alice", seed=3, algorithm_id=alg) == kp
    assert crypto.derive_keypair("alice", seed=4, algorithm_id=alg) != kp


def test_unsupported_algorithm():
    with pytest.raises(crypto.UnsupportedAlgorithm):
        crypto.derive_keypair("x", algorithm_id=0x42)
    with pytest.raises(crypto.UnsupportedAlgorithm):
        crypto.scheme(0x42)


def test_algorithm_mismatch_rejected():
    mock = crypto.derive_keypair("a")
    ed = crypto.derive_keypair("a", algorithm_id=crypto.ED25519)
    sig = crypto.sign(mock, b"m")
    assert not crypto.verify(ed.public, b"m", sig)
    assert not crypto.verify(mock.public, b"m", crypto.Signature(crypto.MOCK, sig.value[:-1]))


@given(st.binary(max_size=64), st.binary(max_size=64))
def test_mock_signature_binds_message(m1, m2):
    kp = crypto.derive_keypair("prop")
    sig = crypto.sign(kp, m1)
    assert crypto.verify(kp.public, m2, sig) == (m1 == m2)
