import numpy as np
import pytest

from ehctrl.coordination import (
    AvailabilityDecision,
    AvailabilitySchedule,
    DualMailbox,
    advance_availability,
    asynchronous_subgradient_mask,
    exchange_duals,
)
from ehctrl.errors import ConfigError
from ehctrl.scheduler import DualSubgradient, NodeDualState


def make_duals(count, fill):
    """Node j's multiplier row set to fill(j, i) for each column i."""
    return [
        NodeDualState(
            phi=0.0,
            nu_own=np.array([fill(j, i) for i in range(count)], dtype=float),
            nu_stale=np.zeros(count),
            beta=0.0,
        )
        for j in range(count)
    ]


def rngs(count, seed=0):
    return [np.random.default_rng((seed, k)) for k in range(count)]


class TestSchedule:
    def test_mode_validation(self):
        with pytest.raises(ConfigError):
            AvailabilitySchedule(mode="sometimes")
        with pytest.raises(ConfigError):
            AvailabilitySchedule(mode="random", prob=0.0)
        with pytest.raises(ConfigError):
            AvailabilitySchedule(staleness_bound=0)

    def test_always_on_exchanges_every_pair(self):
        mailbox = DualMailbox(3)
        schedule = AvailabilitySchedule(mode="always-on")
        for t in range(5):
            decision = advance_availability(schedule, t, rngs(3), [False] * 3, mailbox)
            assert decision.available.all()
            off_diag = decision.exchange[~np.eye(3, dtype=bool)]
            assert off_diag.all()
            exchange_duals(mailbox, decision, make_duals(3, lambda j, i: t), t)
            assert mailbox.staleness(t).max() <= 1


class TestStalenessBounds:
    def test_random_mode_scan(self):
        bound = 10
        schedule = AvailabilitySchedule(mode="random", prob=0.5, staleness_bound=bound)
        mailbox = DualMailbox(2)
        streams = rngs(2, seed=4)
        worst = 0
        for t in range(10_000):
            worst = max(worst, int(mailbox.staleness(t).max()))
            decision = advance_availability(schedule, t, streams, [False, False], mailbox)
            exchange_duals(mailbox, decision, make_duals(2, lambda j, i: t), t)
        assert worst <= bound

    def test_piggyback_forced_refresh_at_bound(self):
        bound = 10
        schedule = AvailabilitySchedule(mode="piggyback", staleness_bound=bound)
        mailbox = DualMailbox(2)
        refreshed_at = []
        for t in range(15):  # node 2 stays silent throughout
            decision = advance_availability(schedule, t, rngs(2), [False, False], mailbox)
            if decision.exchange[0, 1]:
                refreshed_at.append(t)
            exchange_duals(mailbox, decision, make_duals(2, lambda j, i: t), t)
        assert refreshed_at == [bound]  # fires exactly when staleness hits the bound

    def test_piggyback_shares_on_transmission(self):
        schedule = AvailabilitySchedule(mode="piggyback", staleness_bound=50)
        mailbox = DualMailbox(2)
        decision = advance_availability(schedule, 0, rngs(2), [False, True], mailbox)
        assert decision.exchange[0, 1] and not decision.exchange[1, 0]
        # piggyback nodes stay capable of computing every slot
        assert decision.available.all()


class TestMailbox:
    def test_snapshot_is_receiver_column(self):
        mailbox = DualMailbox(2)
        duals = make_duals(2, lambda j, i: 10 * j + i)
        decision = AvailabilityDecision(
            available=np.ones(2, dtype=bool),
            exchange=~np.eye(2, dtype=bool),
        )
        exchange_duals(mailbox, decision, duals, t=3)
        # receiver 0 holds nu_{1,0} = 10, receiver 1 holds nu_{0,1} = 1
        assert mailbox.snapshot_for(0)[1] == 10.0
        assert mailbox.snapshot_for(1)[0] == 1.0
        assert mailbox.slots[0, 1] == 3

    def test_unavailable_sender_leaves_mailbox_untouched(self):
        mailbox = DualMailbox(2)
        decision = AvailabilityDecision(
            available=np.array([True, False]),
            exchange=np.array([[False, False], [True, False]]),
        )
        exchange_duals(mailbox, decision, make_duals(2, lambda j, i: 7.0), t=5)
        assert mailbox.values[0, 1] == 0.0 and mailbox.slots[0, 1] == 0
        assert mailbox.values[1, 0] == 7.0 and mailbox.slots[1, 0] == 5

    def test_values_are_historical_truths(self):
        schedule = AvailabilitySchedule(mode="random", prob=0.4, staleness_bound=8)
        mailbox = DualMailbox(2)
        streams = rngs(2, seed=9)
        history = {}
        exchanged = set()
        for t in range(500):
            duals = make_duals(2, lambda j, i: np.sin(0.1 * t + j) + 2.0 + i)
            history[t] = [d.nu_own.copy() for d in duals]
            decision = advance_availability(schedule, t, streams, [False, False], mailbox)
            exchange_duals(mailbox, decision, duals, t)
            exchanged.update(
                (i, j) for i in range(2) for j in range(2) if decision.exchange[i, j]
            )
            for i, j in exchanged:
                stamp = int(mailbox.slots[i, j])
                assert mailbox.values[i, j] == history[stamp][j][i]

    def test_alternating_availability_staleness_pattern(self):
        mailbox = DualMailbox(2)
        observed = []
        for t in range(1, 9):
            observed.append(int(mailbox.staleness(t)[0, 1]))
            if t % 2 == 0:  # exchange at the end of even slots
                decision = AvailabilityDecision(
                    available=np.ones(2, dtype=bool),
                    exchange=~np.eye(2, dtype=bool),
                )
                exchange_duals(mailbox, decision, make_duals(2, lambda j, i: t), t)
        # staleness during successive slots alternates between 1 and 2
        assert observed[2:] == [1, 2, 1, 2, 1, 2]


class TestSubgradientMask:
    def test_passthrough_and_freeze(self):
        grads = [
            DualSubgradient(phi=1.0, nu=np.array([0.5, -0.5]), beta=2.0),
            DualSubgradient(phi=-1.0, nu=np.array([0.25, 0.75]), beta=-2.0),
        ]
        masked = asynchronous_subgradient_mask(np.array([True, False]), grads)
        assert masked[0].nu[0] == 0.5 and masked[0].nu[1] == 0.0
        assert masked[1].nu[0] == 0.25 and masked[1].nu[1] == 0.0
        # phi and beta always pass through
        assert masked[0].phi == 1.0 and masked[1].beta == -2.0

    def test_always_on_is_identity(self):
        grads = [DualSubgradient(phi=0.3, nu=np.array([1.0, 2.0]), beta=0.1)]
        masked = asynchronous_subgradient_mask(np.ones(2, dtype=bool), grads)
        assert np.array_equal(masked[0].nu, grads[0].nu)
