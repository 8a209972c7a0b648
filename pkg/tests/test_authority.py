import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbdc_pki import crypto
from cbdc_pki.authority import (
    EMPTY_REGISTRY,
    AncestorExpiryError,
    InvalidScheduleError,
    RejectReason,
    RevocationRegistry,
    UnknownCertificate,
    _sign_cert,
    materialize,
    verify_chain,
)
from cbdc_pki.mutations import short_manufacturer_passive, short_root_passive
from cbdc_pki.planner import NoActiveIssuer, plan_schedule
from cbdc_pki.types import END_ENTITY_ROLES, Certificate, Role, is_active


@pytest.fixture()
def state(reference):
    return materialize(reference, manufacturers=("mfr-a",))


def roots_at(state, t):
    return state.existing(Role.ROOT_CA, t)


def test_every_generation_signed_by_active_parent(state):
    for cred in state.credentials.values():
        cert = cred.certificate
        signer = cred.parent or cred
        assert crypto.verify(signer.certificate.public_key, cert.tbs, cert.signature)
        if cred.parent is not None:
            assert is_active(cred.parent.certificate, cert.verify_from)
        assert verify_chain(cred.chain, roots_at(state, cert.issue_from), cert.issue_from)


def test_root_generations_self_signed(state):
    g1 = state.credential(Role.ROOT_CA, 1).certificate
    g2 = state.credential(Role.ROOT_CA, 2).certificate
    assert g2.is_self_signed and g2.issuer_ref == g2.holder_ref != g1.holder_ref
    assert crypto.verify(g2.public_key, g2.tbs, g2.signature)
    assert not crypto.verify(g1.public_key, g2.tbs, g2.signature)


def test_certificate_count(reference, state):
    assert len(state.certificates()) == reference.generation_count
    three = materialize(reference, manufacturers=("a", "b", "c"))
    extra = 2 * len(reference.generations(Role.MANUFACTURER_CA))
    assert len(three.certificates()) == reference.generation_count + extra


def test_certificate_windows_match_plan(reference, state):
    for role, gen in reference.iter_generations():
        cert = state.credential(role, gen.index).certificate
        assert (cert.verify_from, cert.issue_from, cert.issue_until, cert.verify_until) == (
            gen.verify_from, gen.issue_from, gen.issue_until, gen.verify_until,
        )


def test_materialize_refuses_invalid_schedule(reference):
    with pytest.raises(InvalidScheduleError) as exc:
        materialize(short_root_passive(reference))
    assert exc.value.violations


def test_card_issued_on_last_active_tick_lives_its_lifetime(reference, state):
    mfr = reference.generation(Role.MANUFACTURER_CA, 3)
    t = mfr.issue_until - 1
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "late-card", t)
    assert cred.parent.index == 3
    anchors = roots_at(state, t)
    for tau in range(t, t + 13):
        assert verify_chain(cred.chain, anchors, tau), tau
    v = verify_chain(cred.chain, anchors, t + 12 + 1)
    assert v.reason is RejectReason.EXPIRED


def test_fsp_window_is_2u(state):
    cert = state.issue_end_entity(Role.FSP, "bank", 30).certificate
    assert (cert.verify_from, cert.verify_until) == (30, 54)
    assert cert.verify_until - cert.verify_from == 24


def test_serials_distinct_and_increasing(state):
    a = state.issue_end_entity(Role.SMARTCARD_EE, "a", 5).certificate
    b = state.issue_end_entity(Role.SMARTCARD_EE, "b", 5).certificate
    assert a.issuer_ref == b.issuer_ref and b.serial > a.serial
    assert len(state.issued) == len({(c.issuer_ref, c.serial) for c in state.issued.values()})


def test_issue_end_entity_errors(state):
    with pytest.raises(ValueError):
        state.issue_end_entity(Role.HARDWARE_CA, "x", 5)
    with pytest.raises(NoActiveIssuer):
        state.issue_end_entity(Role.SMARTCARD_EE, "x", 10_000)


def test_ancestor_expiry_is_detected(reference):
    bad = materialize(short_manufacturer_passive(reference, 3), check=False)
    # ManufacturerCA gen 3 now expires 6 ticks after its active window
    with pytest.raises(AncestorExpiryError):
        bad.issue_end_entity(Role.SMARTCARD_EE, "x", 35)
    bad.issue_end_entity(Role.SMARTCARD_EE, "x", 35, enforce_ancestors=False)


def test_fresh_chain_accepts(state):
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 40)
    assert verify_chain(cred.chain, roots_at(state, 40), 40)
    # a chain may stop just below the root
    assert verify_chain(cred.chain[:-1], roots_at(state, 40), 40)


def test_untrusted_root(state):
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 40)
    other = state.credential(Role.ROOT_CA, 3).certificate
    assert verify_chain(cred.chain, [other], 40).reason is RejectReason.UNTRUSTED_ROOT
    assert verify_chain(cred.chain[:-1], [other], 40).reason is RejectReason.UNTRUSTED_ROOT
    assert verify_chain([], [other], 40).reason is RejectReason.UNTRUSTED_ROOT


def test_bad_signature(state):
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 40)
    leaf = cred.chain[0]
    forged = Certificate(**{**leaf.__dict__, "signature": crypto.Signature(0, bytes(32))})
    chain = [forged, *cred.chain[1:]]
    assert verify_chain(chain, roots_at(state, 40), 40).reason is RejectReason.BAD_SIGNATURE
    # wrong issuer in the middle of the chain
    chain = [cred.chain[0], state.credential(Role.MANUFACTURER_CA, 1).certificate, *cred.chain[2:]]
    assert verify_chain(chain, roots_at(state, 40), 40).reason is RejectReason.BAD_SIGNATURE


def test_not_yet_valid(state):
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 40)
    assert verify_chain(cred.chain, roots_at(state, 40), 39).reason is RejectReason.NOT_YET_VALID


def test_signed_during_parent_passive_is_role_violation(state):
    hw = state.credential(Role.HARDWARE_CA, 1)
    assert hw.certificate.issue_until == 36
    key = crypto.derive_keypair("rogue-mfr")
    rogue = _sign_cert(
        Certificate(99, Role.MANUFACTURER_CA, "rogue", hw.holder_ref, key.public, 40, 50, 40, 45),
        hw.keypair,
    )
    v = verify_chain([rogue, *hw.chain], roots_at(state, 41), 41)
    assert v.reason is RejectReason.ROLE_VIOLATION


def test_illegal_role_pair(state):
    fin = state.credential(Role.FINANCIAL_CA, 1)
    key = crypto.derive_keypair("odd")
    odd = _sign_cert(
        Certificate(5, Role.SMARTCARD_EE, "odd", fin.holder_ref, key.public, 10, 22, 10, 22), fin.keypair
    )
    assert verify_chain([odd, *fin.chain], roots_at(state, 12), 12).reason is RejectReason.ROLE_VIOLATION


def test_most_severe_reason_wins(state):
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 40)
    leaf = cred.chain[0]
    reg = RevocationRegistry()
    reg.revoke(leaf.issuer_ref, leaf.serial, 40)
    # expired and revoked at once: revoked outranks expired
    v = verify_chain(cred.chain, roots_at(state, 40), 70, reg.snapshot(70))
    assert v.reason is RejectReason.REVOKED


def test_revocation_examples(state):
    fsp = state.issue_end_entity(Role.FSP, "bank", 40)
    anchors = roots_at(state, 40)
    state.sync_party("early", 49)
    stale = state.registry.snapshot(49)
    state.revoke(fsp.certificate.issuer_ref, fsp.certificate.serial, 50)
    fresh = state.sync_party("late", 51)
    assert verify_chain(fsp.chain, anchors, 52, fresh).reason is RejectReason.REVOKED
    assert verify_chain(fsp.chain, anchors, 52, stale)
    assert state.registry.last_sync == {"early": 49, "late": 51}
    before = state.registry.to_dict()
    state.revoke(fsp.certificate.issuer_ref, fsp.certificate.serial, 55)
    assert state.registry.to_dict() == before
    with pytest.raises(UnknownCertificate):
        state.revoke("nobody", 1, 60)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 100)), max_size=20), st.integers(0, 100), st.integers(0, 100))
def test_revocation_monotone(events, t1, t2):
    reg = RevocationRegistry()
    for serial, tick in events:
        reg.revoke("ca", serial, tick)
    lo, hi = sorted((t1, t2))
    assert reg.snapshot(lo).entries <= reg.snapshot(hi).entries


def test_registry_export(state):
    state.revoke(*next(iter(state.issued)), 3)
    doc = state.registry.to_dict()
    assert doc["entries"] and len(doc["entries"][0]) == 3


@pytest.mark.parametrize("role", sorted(END_ENTITY_ROLES, key=list(Role).index))
def test_issuance_sweep(reference, role):
    state = materialize(reference)
    u = reference.u
    for t in range(0, reference.horizon - u):
        cred = state.issue_end_entity(role, f"ee-{t}", t)
        anchors = roots_at(state, t)
        cert = cred.certificate
        for tau in range(cert.issue_from, cert.verify_until + 1):
            assert verify_chain(cred.chain, anchors, tau), (t, tau)


def test_ed25519_materialize():
    s = plan_schedule(2, 8)
    state = materialize(s, algorithm_id=crypto.ED25519)
    cred = state.issue_end_entity(Role.SMARTCARD_EE, "c", 3)
    assert cred.certificate.signature.algorithm_id == crypto.ED25519
    assert verify_chain(cred.chain, roots_at(state, 3), 3)


def test_empty_registry_is_empty(state):
    assert all(c not in EMPTY_REGISTRY for c in state.certificates())
