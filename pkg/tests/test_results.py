from config.constants import EvaluatorKind, WorkloadFamily
from factories import synthetic_measurements
from services.results import list_measurements, store_measurements, stored_measurements


def test_stored_measurements_come_back_unchanged(db_session) -> None:
    measurements = synthetic_measurements(0.5, widths=[5, 10])
    # seeds use the whole unsigned 64-bit range
    measurements[0] = measurements[0].model_copy(update={"seed": 2**64 - 1})

    records = store_measurements(db_session, measurements)

    assert [record.id for record in records] == sorted(record.id for record in records)
    assert records[0].seed == str(2**64 - 1)
    assert stored_measurements(db_session) == measurements


def test_list_measurements_filters_and_limits(db_session) -> None:
    store_measurements(db_session, synthetic_measurements(0.5, widths=[5]))
    store_measurements(
        db_session,
        synthetic_measurements(0.5, widths=[5], family=WorkloadFamily.PASSWORD, evaluator=EvaluatorKind.BITPACKED),
    )

    assert len(list_measurements(db_session)) == 4
    assert {r.evaluator for r in list_measurements(db_session, evaluator=EvaluatorKind.BITPACKED)} == {
        EvaluatorKind.BITPACKED
    }
    assert len(stored_measurements(db_session, family=WorkloadFamily.PASSWORD)) == 2
    assert len(list_measurements(db_session, limit=3)) == 3
