from concurrent.futures import ThreadPoolExecutor

import pytest

from ratchetlab.core.errors import (
    ConflictError,
    DuplicatePrekeyError,
    NotFoundError,
    RegistryError,
    SignatureRejectedError
)
from ratchetlab.models.registry.records import (
    MetadataAction,
    SignedPrekeyUpload
)
from ratchetlab.utils.crypto.primitives import verify_prekey
from ratchetlab.utils.registry.prekey_registry import PrekeyRegistry
from ratchetlab.utils.session.codec import encode_public


def test_bundle_carries_active_spk_and_lowest_opk(registry, adam_bud):
    _, bud = adam_bud
    bundle = registry.fetch_bundle("adam", "bud")

    assert bundle.identity_pub == bud.identity.public
    assert bundle.spk_id == 1
    assert verify_prekey(bundle.identity_pub, encode_public(bundle.spk_pub), bundle.spk_signature)
    assert bundle.opk.opk_id == 1
    assert registry.pool_size("bud") == 9


def test_registering_twice_conflicts(registry, adam_bud):
    adam, _ = adam_bud
    with pytest.raises(ConflictError):
        adam.publish(registry, now=1)


def test_spk_signed_by_another_identity_is_rejected(registry, make_party):
    mallory, carol = make_party("mallory"), make_party("carol")
    upload = carol.new_signed_prekey()
    forged = upload.model_copy(update={"signature": mallory.new_signed_prekey().signature})

    with pytest.raises(SignatureRejectedError):
        registry.register("carol", carol.identity.public, forged, [])
    with pytest.raises(NotFoundError):
        registry.fetch_bundle("adam", "carol")


def test_repeated_opk_ids_are_rejected(registry, make_party):
    carol = make_party("carol")
    opks = carol.new_one_time_prekeys(2)
    with pytest.raises(DuplicatePrekeyError):
        registry.register("carol", carol.identity.public, carol.new_signed_prekey(), opks + opks[:1])

    registry.register("carol", carol.identity.public, carol.new_signed_prekey(), opks)
    with pytest.raises(DuplicatePrekeyError):
        registry.replenish_opks("carol", opks[:1])


def test_pool_drains_without_reuse(registry, adam_bud):
    served = [registry.fetch_bundle("adam", "bud").opk for _ in range(12)]
    ids = [opk.opk_id for opk in served if opk is not None]

    assert ids == list(range(1, 11))
    assert served[10] is None and served[11] is None
    assert registry.pool_size("bud") == 0


def test_replenish_refills_an_empty_pool(registry, adam_bud):
    _, bud = adam_bud
    for _ in range(10):
        registry.fetch_bundle("adam", "bud")
    assert bud.replenish(registry, 3) == 3
    assert registry.fetch_bundle("adam", "bud").opk.opk_id == 11


def test_unknown_target_is_not_found(registry, adam_bud):
    with pytest.raises(NotFoundError):
        registry.fetch_bundle("adam", "nobody")


def test_exactly_one_active_spk_after_rotations(registry, adam_bud):
    _, bud = adam_bud
    for now in (3, 7, 8, 30, 31, 60):
        bud.rotate(registry, now)
        active = [spk for spk in registry.signed_prekeys("bud") if spk.is_active]
        assert len(active) == 1
        assert active[0].spk_id == registry.active_signed_prekey("bud").spk_id
        assert registry.fetch_bundle("adam", "bud").spk_id == active[0].spk_id


def test_retired_spk_is_purged_after_retention_window(registry, adam_bud):
    _, bud = adam_bud
    bud.rotate(registry, 7)    # spk 1 retired at 7
    bud.rotate(registry, 14)   # spk 2 retired at 14
    assert registry.retained_spk_ids("bud") == [1, 2, 3]

    bud.rotate(registry, 21)   # 21 <= 7 + 14, spk 1 still retained
    assert registry.retained_spk_ids("bud") == [1, 2, 3, 4]

    bud.rotate(registry, 22)
    assert registry.retained_spk_ids("bud") == [2, 3, 4, 5]
    assert sorted(bud.keys.spk_lookup) == [2, 3, 4, 5]


def test_rotation_rejects_a_reused_spk_id(registry, adam_bud):
    _, bud = adam_bud
    fresh = bud.new_signed_prekey()
    reused = SignedPrekeyUpload(spk_id=1, public=fresh.public, signature=fresh.signature)
    with pytest.raises(DuplicatePrekeyError):
        registry.rotate_signed_prekey("bud", reused, 5)


def test_metadata_report_counts_fetches_and_relays(registry, adam_bud):
    registry.fetch_bundle("adam", "bud", now=1)
    registry.fetch_bundle("adam", "bud", now=2)
    registry.record_relay("adam", "bud", now=3)
    registry.record_relay("adam", "bud", now=4)

    summary = registry.metadata_report("adam").by_peer()["bud"]
    assert (summary.count, summary.fetches, summary.relays, summary.last_contact) == (4, 2, 2, 4)
    assert registry.metadata_report("bud").peers == []


def test_metadata_log_records_registration_and_rotation(registry, adam_bud):
    _, bud = adam_bud
    bud.rotate(registry, 3)
    actions = [event.action for event in registry.metadata_log("bud")]
    assert actions == [MetadataAction.REGISTER, MetadataAction.ROTATE]


def test_unregistered_requester_can_fetch(registry, adam_bud):
    assert registry.fetch_bundle("stranger", "bud").opk is not None
    assert all(event.actor != "stranger" for event in registry.metadata_log("bud"))


def test_snapshot_round_trip(registry, adam_bud):
    registry.fetch_bundle("adam", "bud", now=1)
    registry.record_relay("adam", "bud", now=2)
    snapshot = registry.export_snapshot()

    restored = PrekeyRegistry()
    restored.import_snapshot(snapshot)
    assert restored.export_snapshot() == snapshot
    assert restored.metadata_report("adam") == registry.metadata_report("adam")
    assert restored.fetch_bundle("adam", "bud") == registry.fetch_bundle("adam", "bud")


def test_snapshot_import_rejects_garbage(registry):
    with pytest.raises(RegistryError) as excinfo:
        registry.import_snapshot(b"{\"users\": 5}")
    assert excinfo.value.reason == "bad-snapshot"


def test_concurrent_fetches_never_share_an_opk(registry, make_party):
    carol = make_party("carol")
    carol.publish(registry, now=0, opk_count=50)
    with ThreadPoolExecutor(max_workers=8) as pool:
        bundles = list(pool.map(lambda i: registry.fetch_bundle(f"user{i}", "carol"), range(50)))
    ids = [bundle.opk.opk_id for bundle in bundles]
    assert sorted(ids) == list(range(1, 51))
