from anytime_release import run_wrapper
from anytime_release.cohort import evaluate_cohort
from anytime_release.gain import gain_decomposition, stepwise_feasible_summary
from anytime_release.plotting import (plot_cohort, plot_feasible_summary, plot_gain_traces,
                                      plot_pool_diagnostic, plot_wealth)
from anytime_release.pool import pool_diagnostic

PNG_MAGIC = b"\x89PNG"


def is_png(path):
    return path.read_bytes()[:4] == PNG_MAGIC


def test_all_figures(tmp_path, top55, cal, heldout_scores, mbpp74, mbpp598, mbpp643):
    trajs = [mbpp74, mbpp598, mbpp643]
    paths = [
        plot_pool_diagnostic({"top55": pool_diagnostic(top55, heldout_scores)}, tmp_path / "diag.png"),
        plot_wealth({t.task_id: run_wrapper(t, top55, cal, continue_after_release=True) for t in trajs},
                    0.1, tmp_path / "wealth.png"),
        plot_gain_traces([gain_decomposition(t, top55, cal, 0.1) for t in trajs], tmp_path / "gain.png"),
        plot_feasible_summary(stepwise_feasible_summary(trajs[1:], top55, cal, 0.1), tmp_path / "feas.png"),
        plot_cohort(evaluate_cohort(trajs, ["ours", "stability"], top55, cal, [0.1]), tmp_path / "sub" / "c.png"),
    ]
    assert all(is_png(p) for p in paths)
