import numpy as np
import pytest

from dmdtrade.errors import TrainingSpanError, ValidationError, WindowError
from dmdtrade.trainer import (
    DOWN,
    FLAT,
    UP,
    GridSpec,
    SuccessGrid,
    directional_signal,
    evaluate_cell,
    find_hotspot,
    train_grid,
)

from helpers import constant_panel, geometric_panel, make_panel, random_walk_panel, trajectory
from oracles import naive_cell_grid, naive_grid, signal_oracle


def grid_from_rates(rates: dict, m_values=range(2, 26), l_values=range(1, 11), default=None, n=100):
    """SuccessGrid with ``n`` predictions per cell and the given success rates."""
    m_values, l_values = tuple(m_values), tuple(l_values)
    correct = np.zeros((len(m_values), len(l_values)), np.int64)
    total = np.zeros_like(correct)
    for i, m in enumerate(m_values):
        for j, l in enumerate(l_values):
            rate = rates.get((m, l), default)
            if rate is not None:
                total[i, j] = n
                correct[i, j] = round(rate * n)
    return SuccessGrid(m_values, l_values, correct, total)


def two_mode_system():
    """Two tickers driven by one growing (1.04) and one decaying (0.95) direction."""
    p = np.array([[1.0, 0.3], [0.2, 1.0]])
    a = p @ np.diag([1.04, 0.95]) @ np.linalg.inv(p)
    x0 = p @ np.array([100.0, 80.0])
    return a, x0


class TestDirectionalSignal:
    def test_geometric_all_up(self):
        panel = geometric_panel(n_days=20)
        for m, l in [(2, 1), (5, 3), (10, 10)]:
            assert np.all(directional_signal(panel, 15, m, l) == UP)

    def test_constant_all_flat(self):
        panel = constant_panel(n_days=20)
        assert np.all(directional_signal(panel, 12, 6, 4) == FLAT)

    def test_linear_system_matches_matrix_power_oracle(self):
        a, x0 = two_mode_system()
        panel = make_panel(trajectory(a, x0, 60))
        seen = set()
        for m in (3, 5, 8):
            for l in (1, 4, 9):
                for t in range(m - 1, 50, 7):
                    calls = directional_signal(panel, t, m, l)
                    expected = signal_oracle(a, x0, t - m + 1, m, l, 2)
                    np.testing.assert_array_equal(calls, expected)
                    seen.update(calls.tolist())
        assert seen == {UP, DOWN}

    def test_log_prices_same_direction_on_geometric(self):
        panel = geometric_panel(n_days=20, rate=1.01)
        assert np.all(directional_signal(panel, 15, 5, 2, log_prices=True) == UP)

    def test_window_error_propagates(self):
        with pytest.raises(WindowError):
            directional_signal(geometric_panel(n_days=20), 2, 5, 1)


class TestEvaluateCell:
    def test_geometric_always_right(self):
        cell = evaluate_cell(geometric_panel(n_days=30), 4, 3)
        assert cell.success_rate == 1.0
        assert cell.n_predictions == 3 * (30 - 3 - 3)

    def test_sawtooth_always_wrong(self):
        # With m = 2 and one ticker, DMD's multiplier is p_t / p_{t-1}: it
        # extrapolates the last move.  A 1, 2, 1, 2 ... sawtooth reverses every
        # move, e.g. t = 1: 1 -> 2 calls UP, then p_2 = 1 < p_1 = 2.
        prices = np.where(np.arange(30) % 2 == 0, 1.0, 2.0)[None, :]
        cell = evaluate_cell(make_panel(prices), 2, 1)
        assert cell.n_predictions == 28
        assert cell.success_rate == 0.0

    def test_adversarial_jump_after_exponential_window(self):
        m, l = 6, 3
        prices = np.vstack([1.5 ** np.arange(m + l), 2.0 * 1.2 ** np.arange(m + l)])
        prices[:, m - 1 + l] = prices[:, m - 1] * 0.5
        cell = evaluate_cell(make_panel(prices), m, l)
        assert (cell.n_correct, cell.n_predictions) == (0, 2)

    def test_no_eligible_day_is_invalid(self):
        cell = evaluate_cell(geometric_panel(n_days=10), 8, 5)
        assert not cell.valid and np.isnan(cell.success_rate)

    def test_span_excludes_outcomes_beyond_end(self):
        panel = geometric_panel(n_days=30)
        cell = evaluate_cell(panel, 3, 4, span=(10, 20))
        assert cell.n_predictions == 3 * len(range(10, 20 - 4 + 1))

    def test_flat_realised_moves_excluded(self):
        prices = 1.1 ** np.arange(20)[None, :]
        prices = np.vstack([prices, np.full((1, 20), 3.0)])
        cell = evaluate_cell(make_panel(prices), 3, 2)
        assert cell.n_predictions == 20 - 2 - 2


class TestTrainGrid:
    def test_constant_panel_all_invalid(self):
        grid = train_grid(constant_panel(n_days=40), GridSpec.ranges(2, 6, 1, 4))
        assert not grid.valid.any()

    def test_geometric_small_spec(self):
        grid = train_grid(geometric_panel(n_days=30), GridSpec((2, 3), (1, 2)))
        assert grid.success_rates.shape == (2, 2)
        np.testing.assert_array_equal(grid.success_rates, 1.0)

    def test_random_walk_matches_brute_force(self):
        panel = random_walk_panel(7, n_symbols=5, n_days=120)
        spec = GridSpec.ranges(2, 12, 1, 6)
        grid = train_grid(panel, spec)
        oracle = naive_grid(panel, spec.m_values, spec.l_values, (0, 119))
        for (m, l), cell in grid.cells():
            assert [cell.n_correct, cell.n_predictions] == oracle[m, l]

    def test_matches_cell_by_cell_loop(self):
        panel = random_walk_panel(8, n_symbols=4, n_days=60)
        spec = GridSpec.ranges(2, 7, 1, 4)
        rows = [0, 2, 3]
        grid = train_grid(panel, spec, (10, 55), rows=rows)
        oracle = naive_cell_grid(panel, spec.m_values, spec.l_values, (10, 55), rows=rows)
        for cell_id, cell in grid.cells():
            assert cell == oracle[cell_id]

    def test_deterministic(self):
        panel = random_walk_panel(9, n_days=80)
        a, b = train_grid(panel), train_grid(panel)
        assert np.array_equal(a.n_correct, b.n_correct) and np.array_equal(a.n_predictions, b.n_predictions)
        assert a.to_csv() == b.to_csv()

    def test_short_span(self):
        with pytest.raises(TrainingSpanError):
            train_grid(geometric_panel(n_days=30), GridSpec((2,), (1,)), span=(0, 2))

    def test_training_span_dates(self):
        panel = geometric_panel(n_days=30)
        grid = train_grid(panel, GridSpec((2,), (1,)), span=(5, 20))
        assert grid.training_span == (panel.calendar[5], panel.calendar[20])

    def test_csv_layout(self):
        grid = grid_from_rates({(2, 1): 0.5, (3, 2): 0.25}, (2, 3), (1, 2))
        assert grid.to_csv().splitlines() == [
            "m,l,success_rate,n_predictions",
            "2,1,0.5,100",
            "2,2,,0",
            "3,1,,0",
            "3,2,0.25,100",
        ]

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            GridSpec((1, 2), (1,))
        with pytest.raises(ValidationError):
            GridSpec((2,), (0,))


class TestFindHotspot:
    def test_uniform(self):
        h = find_hotspot(grid_from_rates({}, default=0.60))
        assert h.center == (2, 1)
        assert abs(h.neighborhood_mean - 0.60) <= 1e-12
        assert h.n_neighbors == 4
        assert h.qualified

    def test_isolated_spike(self):
        h = find_hotspot(grid_from_rates({(10, 5): 0.90}, default=0.40))
        assert h.center == (10, 5) and h.center_rate == 0.9
        assert abs(h.neighborhood_mean - (0.90 + 8 * 0.40) / 9) <= 1e-12
        assert not h.qualified

    def test_plateau(self):
        plateau = {(10 + i, 5 + j): 0.56 for i in (-1, 0, 1) for j in (-1, 0, 1)}
        h = find_hotspot(grid_from_rates(plateau, default=0.40))
        # nine cells tie at 0.56; only the middle one has a full 0.56 neighbourhood
        assert h.center == (10, 5)
        assert abs(h.neighborhood_mean - 0.56) <= 1e-12
        assert h.qualified

    def test_tied_maxima_prefer_larger_neighbourhood_mean(self):
        h = find_hotspot(grid_from_rates({(4, 2): 0.7, (12, 6): 0.7, (12, 7): 0.6}, default=0.40))
        assert h.center == (12, 6)

    def test_threshold_is_strict(self):
        assert not find_hotspot(grid_from_rates({}, default=0.53)).qualified
        assert find_hotspot(grid_from_rates({}, default=0.53), threshold=0.52).qualified

    def test_no_valid_cell(self):
        assert find_hotspot(grid_from_rates({})) is None

    def test_invalid_neighbours_skipped(self):
        h = find_hotspot(grid_from_rates({(5, 5): 0.7, (5, 6): 0.5}))
        assert h.n_neighbors == 2 and abs(h.neighborhood_mean - 0.6) <= 1e-12

    def test_tie_break_is_total(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rates = {(m, l): float(rng.choice([0.4, 0.5, 0.6])) for m in range(2, 8) for l in range(1, 5)}
            grid = grid_from_rates(rates, range(2, 8), range(1, 5))
            h = find_hotspot(grid)
            best = max(rates.values())

            def mean_around(c):
                near = [rates[c[0] + i, c[1] + j] for i in (-1, 0, 1) for j in (-1, 0, 1) if (c[0] + i, c[1] + j) in rates]
                return sum(near) / len(near)

            tied = [c for c, r in rates.items() if r == best]
            assert h.center == min(tied, key=lambda c: (-mean_around(c), c))
