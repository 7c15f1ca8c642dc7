import pytest

from collabtop.fabric import (
    BROADCAST,
    COORDINATOR,
    OUTPUT,
    BudgetExceededError,
    Fabric,
    Message,
    RoundMismatchError,
)


def test_unicast_charges_payload_length():
    f = Fabric(3)
    f.send(0, COORDINATOR, (1, 2, 3))
    assert f.words_total == 3
    assert f.transcript.words_up == 3


def test_empty_payload_is_free():
    f = Fabric(3)
    f.send(COORDINATOR, 1, ())
    assert f.words_total == 0
    assert len(f.transcript.messages) == 1


def test_broadcast_fan_out():
    f = Fabric(4)
    f.send(COORDINATOR, BROADCAST, (0.1, 0.2))
    assert f.words_total == 8
    assert f.transcript.words_down == 8


def test_routes_enforced():
    f = Fabric(2)
    with pytest.raises(ValueError):
        f.send(0, 1, (1,))
    with pytest.raises(ValueError):
        f.send(0, BROADCAST, (1,))
    with pytest.raises(ValueError):
        f.send(5, COORDINATOR, (1,))
    with pytest.raises(ValueError):
        f.send(OUTPUT, COORDINATOR, (1,))
    f.send(COORDINATOR, OUTPUT, (1, 2))
    assert f.words_total == 2


def test_round_mismatch():
    f = Fabric(2)
    with pytest.raises(RoundMismatchError):
        f.post(Message(0, COORDINATOR, (1,), round=3))


def test_pull_accounting():
    f = Fabric(2, horizon=20)
    f.record_pulls(0, 10)
    f.record_pulls(0, 5)
    f.record_pulls(1, 0)
    assert f.transcript.pulls_by_agent == [15, 0]
    with pytest.raises(BudgetExceededError):
        f.record_pulls(0, 6)
    with pytest.raises(ValueError):
        f.record_pulls(1, -1)


def test_rounds():
    f = Fabric(1)
    assert f.advance_round() == 1
    for _ in range(4):
        f.advance_round()
    assert f.transcript.rounds_used == 5


def test_words_monotone_and_sum_of_messages():
    f = Fabric(3)
    seen = []
    for r in range(3):
        f.advance_round()
        f.send(COORDINATOR, BROADCAST, (r,))
        f.send(2, COORDINATOR, tuple(range(r)))
        seen.append(f.words_total)
    assert seen == sorted(seen)
    t = f.transcript
    assert t.words_total == t.words_up + t.words_down
    assert t.words_total == sum(m.word_count * (3 if m.receiver == BROADCAST else 1) for m in t.messages)


def test_dump_format():
    f = Fabric(2)
    f.advance_round()
    f.send(1, COORDINATOR, (7, 8))
    assert f.transcript.dumps() == "1\t1\tcoordinator\t2\n"
