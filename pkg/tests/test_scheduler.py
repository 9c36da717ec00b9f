import numpy as np
import pytest

from utils.scheduler import CampaignEntry, CampaignOutcome, pick_best, plan_campaign


class TestPlanCampaign:
    def test_one_entry_per_run(self):
        plan = plan_campaign([3, 3.5], 2, 7)
        assert [(e.layers, e.run) for e in plan] == [(3.0, 0), (3.0, 1), (3.5, 0), (3.5, 1)]

    def test_deterministic_and_distinct_seeds(self):
        a = plan_campaign([2, 3], 3, 11)
        b = plan_campaign([2, 3], 3, 11)
        assert a == b
        assert len({e.seed for e in a}) == len(a)
        assert [e.seed for e in plan_campaign([2, 3], 3, 12)] != [e.seed for e in a]

    def test_accepts_seed_sequence(self):
        seq = np.random.SeedSequence(5)
        assert plan_campaign([1], 1, seq) == plan_campaign([1], 1, np.random.SeedSequence(5))

    def test_runs_floor_at_one(self):
        assert len(plan_campaign([1], 0, 0)) == 1

    @pytest.mark.parametrize('layers', [0, -1, 1.25])
    def test_invalid_layers(self, layers):
        with pytest.raises(ValueError):
            plan_campaign([layers], 1, 0)

    def test_entry_dict_round_trip(self):
        entry = CampaignEntry(2.5, 1, 99)
        assert CampaignEntry.from_dict(entry.to_dict()) == entry


class TestPickBest:
    @staticmethod
    def _outcome(layers, fidelity, depth, run=0):
        return CampaignOutcome(CampaignEntry(layers, run, 0), fidelity, depth)

    def test_highest_fidelity_wins(self):
        outcomes = [self._outcome(2, 0.95, 12), self._outcome(3, 0.99, 18)]
        assert pick_best(outcomes) is outcomes[1]

    def test_tie_goes_to_shallower_circuit(self):
        outcomes = [self._outcome(3, 0.99, 18), self._outcome(2, 0.99, 12)]
        assert pick_best(outcomes) is outcomes[1]

    def test_full_tie_keeps_plan_order(self):
        outcomes = [self._outcome(2, 0.99, 12, run=0), self._outcome(2, 0.99, 12, run=1)]
        assert pick_best(outcomes) is outcomes[0]

    def test_empty(self):
        assert pick_best([]) is None
